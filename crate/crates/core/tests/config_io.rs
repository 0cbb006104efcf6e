use std::path::Path;

use loopsoup::harness::{run_suite, ExperimentConfig, GeneratorSource};
use loopsoup::io::{generator_to_json, load_generator, parse_generator};
use loopsoup::Error;

const TWO: &str = r#"{"states":["a","b"],"L":[[-2,1],[1,-2]]}"#;

#[test]
fn generator_round_trip() {
    let g = parse_generator(TWO).unwrap();
    let back = parse_generator(&generator_to_json(&g).to_string()).unwrap();
    assert_eq!(g, back);
    assert_eq!(back.labels(), ["a", "b"]);
}

#[test]
fn generator_errors() {
    assert!(matches!(parse_generator("{"), Err(Error::ParseError(_))));
    assert!(matches!(parse_generator(r#"{"states":["a"],"L":[[-1,0]]}"#), Err(Error::ParseError(_))));
    assert!(matches!(parse_generator(r#"{"states":["a","b"],"L":[[-1]]}"#), Err(Error::ParseError(_))));
    match parse_generator(r#"{"states":["a","b"],"L":[[-2,1],[3,-2]]}"#) {
        Err(Error::ValidationError(m)) => assert!(m.contains("`b`"), "{m}"),
        other => panic!("{other:?}"),
    }
    match load_generator(Path::new("/nonexistent/g.json")) {
        Err(Error::ParseError(m)) => assert!(m.contains("/nonexistent/g.json")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn config_errors() {
    assert!(matches!(ExperimentConfig::from_json(r#"{"suite":"zeta","sample":3}"#), Err(Error::ConfigError(_))));
    let cfg = ExperimentConfig::from_json(r#"{"suite":"zeta","samples":0}"#).unwrap();
    assert!(matches!(run_suite(&cfg), Err(Error::ConfigError(_))));
    let cfg = ExperimentConfig::from_json(r#"{"suite":"zeta","alphas":[-1]}"#).unwrap();
    assert!(matches!(run_suite(&cfg), Err(Error::ConfigError(_))));
    assert_eq!(run_suite(&ExperimentConfig::new("nope")), Err(Error::SuiteUnknown("nope".into())));
    let cfg = ExperimentConfig {
        generator: Some(GeneratorSource::File { path: "/nonexistent.json".into() }),
        ..ExperimentConfig::new("zeta")
    };
    assert!(matches!(run_suite(&cfg), Err(Error::ConfigError(_))));
}

#[test]
fn config_defaults() {
    let cfg = ExperimentConfig::from_json(&format!(r#"{{"suite":"soup-laplace","generator":{TWO}}}"#)).unwrap();
    assert_eq!(cfg.seed, loopsoup::harness::DEFAULT_SEED);
    assert_eq!(cfg.tolerances.z_max, 3.0);
    assert_eq!(cfg.tolerances.p_min, 0.01);
    assert_eq!(cfg.generator().unwrap().unwrap().n(), 2);
}

#[test]
fn reports_are_deterministic() {
    let cfg = ExperimentConfig { samples: Some(2000), ..ExperimentConfig::new("soup-laplace") };
    let (a, b) = (run_suite(&cfg).unwrap(), run_suite(&cfg).unwrap());
    assert_eq!(a.checks, b.checks);
    assert_eq!(a.pass, b.pass);
    let other = run_suite(&ExperimentConfig { seed: 1, ..cfg }).unwrap();
    assert_ne!(a.checks, other.checks);
}

#[test]
fn exact_identities_pass() {
    let r = run_suite(&ExperimentConfig::new("exact-identities")).unwrap();
    assert!(r.pass, "{:?}", r.failures().map(|c| &c.name).collect::<Vec<_>>());
}
