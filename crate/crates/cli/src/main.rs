use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use loopsoup::chain::{self, Generator};
use loopsoup::clusters::{circle_chain, clusters, CircleParams};
use loopsoup::harness::{run_suite, ExperimentConfig, DEFAULT_SEED, SUITES};
use loopsoup::lerw::{lerw_prefix_forms, lerw_terminal_probability, pd_cut_reconstruct, wilson_sample};
use loopsoup::measure;
use loopsoup::num_complex::Complex64;
use loopsoup::rng::{par_replicas, stream};
use loopsoup::soup::{SamplerOptions, SoupSampler, TrivialPolicy};
use loopsoup::{io as lio, linalg};

#[derive(Parser)]
#[command(name = "loopsoup", version, about = "Loop measures, loop soups and loop-erased walks on finite chains")]
struct Cli {
    /// Generator JSON ({"states": [...], "L": [[...]]}); experiment config for `verify`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Green function, embedded chain and transience of a generator.
    Chain {
        /// Also report the trace of the chain on these states.
        #[arg(long, value_delimiter = ',')]
        trace: Vec<String>,
    },
    /// Exact loop-measure quantities.
    Measure {
        #[arg(long, value_enum)]
        query: Query,
        /// State labels for moments and visit masses.
        #[arg(long, value_delimiter = ',')]
        states: Vec<String>,
        /// Weights for the Laplace transform, one per state.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        chi: Vec<f64>,
        /// Complex argument `re,im` of the Laplace transform.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-1.0, 0.0])]
        z: Vec<f64>,
    },
    /// Sample loop soups; CSV of per-state occupation and loop counts, or JSON loops.
    Soup {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        /// Keep individual trivial loops longer than this.
        #[arg(long)]
        trivial_cutoff: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Sample loop clusters; CSV of open edges and partitions.
    Clusters {
        /// Discrete circle `n,p,c` instead of a generator file.
        #[arg(long, value_delimiter = ',')]
        circle: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        samples: usize,
    },
    /// Spanning trees by Wilson's algorithm; CSV of parent arrays.
    Wilson {
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Order::Lex)]
        order: Order,
        /// State labels in visiting order, for `--order given`.
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
        #[arg(long, value_enum, default_value_t = Emit::Trees)]
        emit: Emit,
    },
    /// Probability that the loop-erased walk starts with a prefix.
    Lerw {
        #[arg(long, value_delimiter = ',', required = true)]
        prefix: Vec<String>,
        /// Probability that the erased path equals the prefix exactly.
        #[arg(long)]
        exact: bool,
    },
    /// Run a verification suite; exits with status 1 unless every check passes.
    Verify {
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Query {
    Moment,
    ProductMoment,
    Laplace,
    VisitMass,
    VisitAll,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Order {
    Lex,
    Given,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Trees,
    #[value(name = "trees+loops")]
    TreesLoops,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn generator(cli: &Cli) -> Result<Generator> {
    let path = cli.config.as_deref().context("--config <generator.json> is required")?;
    Ok(lio::load_generator(path)?)
}

fn matrix_json(m: &linalg::Mat) -> serde_json::Value {
    json!((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn run(cli: &Cli) -> Result<bool> {
    let mut out = output(cli.out.as_deref())?;
    match &cli.cmd {
        Cmd::Chain { trace } => {
            let g = generator(cli)?;
            let mut v = json!({
                "states": g.labels(),
                "killing": g.killing(),
                "Q": matrix_json(g.q()),
                "rho_Q": g.rho_q(),
                "transient": g.is_transient(),
            });
            if g.is_transient() {
                v["V"] = matrix_json(&chain::green(&g)?);
            }
            if !trace.is_empty() {
                let f = g.subset(trace)?;
                let t = chain::trace_generator(&g, &f)?;
                v["trace"] = lio::generator_to_json(&t);
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
        Cmd::Measure { query, states, chi, z } => {
            let g = generator(cli)?;
            let idx = g.indices(states)?;
            let result = match query {
                Query::Moment => measure::MeasureQueryResult::real(measure::multi_occupation_expectation(&g, &idx)?, "multi-occupation"),
                Query::ProductMoment => measure::MeasureQueryResult::real(measure::occupation_product_moment(&g, &idx)?, "product-moment"),
                Query::Laplace => {
                    if z.len() != 2 {
                        bail!("--z takes `re,im`");
                    }
                    measure::loop_laplace_query(&g, chi, Complex64::new(z[0], z[1]))?
                }
                Query::VisitMass => measure::MeasureQueryResult::real(measure::visit_mass(&g, &g.subset(states)?)?, "visit-mass"),
                Query::VisitAll => {
                    let sets: Vec<Vec<usize>> = idx.iter().map(|&x| vec![x]).collect();
                    measure::MeasureQueryResult::real(measure::visit_all_mass(&g, &sets)?, "visit-all-mass")
                }
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&result)?)?;
        }
        Cmd::Soup { alpha, samples, trivial_cutoff, json: as_json } => {
            let g = generator(cli)?;
            let trivial = match trivial_cutoff {
                Some(c) => TrivialPolicy::Explicit { cutoff: *c },
                None => TrivialPolicy::AggregatedGamma,
            };
            let sampler = SoupSampler::new(&g, SamplerOptions { trivial, ..Default::default() })?;
            let soups = par_replicas(*samples, |i| sampler.sample(*alpha, cli.seed, i));
            if *as_json {
                let all = soups.into_iter().map(|s| s.map(|s| lio::soup_to_json(&s, g.labels()))).collect::<Result<Vec<_>, _>>()?;
                writeln!(out, "{}", serde_json::to_string_pretty(&all)?)?;
            } else {
                let header: Vec<String> = g.labels().iter().map(|l| format!("occ_{l}")).collect();
                writeln!(out, "replica,{},loops", header.join(","))?;
                for (i, s) in soups.into_iter().enumerate() {
                    let s = s?;
                    let occ: Vec<String> = s.occupation().iter().map(|x| x.to_string()).collect();
                    writeln!(out, "{i},{},{}", occ.join(","), s.loops.len())?;
                }
            }
        }
        Cmd::Clusters { circle, alpha, samples } => {
            let g = match circle {
                Some(c) => {
                    if c.len() != 3 || c[0].fract() != 0.0 || c[0] < 0.0 {
                        bail!("--circle takes `n,p,c` with integer n");
                    }
                    circle_chain(&CircleParams::new(c[0] as usize, c[1], c[2])?)?
                }
                None => generator(cli)?,
            };
            let n = g.n();
            let sampler = SoupSampler::new(&g, SamplerOptions::default())?;
            let rows = par_replicas(*samples, |i| sampler.sample(*alpha, cli.seed, i).map(|s| clusters(&s)));
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
            // open_edges: one bit per pair (x, y), x < y, in lexicographic order.
            writeln!(out, "replica,open_edges,partition")?;
            for (i, c) in rows.into_iter().enumerate() {
                let c = c?;
                let bits: String = pairs.iter().map(|e| if c.open_edges.contains(e) { '1' } else { '0' }).collect();
                let blocks: Vec<String> =
                    c.blocks.iter().map(|b| b.iter().map(|&x| g.label(x)).collect::<Vec<_>>().join(",")).collect();
                writeln!(out, "{i},{bits},\"{}\"", blocks.join("|"))?;
            }
        }
        Cmd::Wilson { samples, order, given, emit } => {
            let g = generator(cli)?;
            let ord = match order {
                Order::Lex => (0..g.n()).collect(),
                Order::Given => g.indices(given)?,
            };
            let with_loops = *emit == Emit::TreesLoops;
            let runs = par_replicas(*samples, |i| {
                let mut rng = stream(cli.seed, i);
                let w = wilson_sample(&g, &ord, with_loops, &mut rng)?;
                let loops = if with_loops { Some(pd_cut_reconstruct(&w.records, g.n(), &mut rng)?) } else { None };
                Ok::<_, loopsoup::Error>((w, loops))
            });
            let header: Vec<&str> = g.labels().iter().map(String::as_str).collect();
            if with_loops {
                writeln!(out, "replica,{},erased_loops,rebuilt_nontrivial,rebuilt_trivial", header.join(","))?;
            } else {
                writeln!(out, "replica,{}", header.join(","))?;
            }
            for (i, r) in runs.into_iter().enumerate() {
                let (w, loops) = r?;
                write!(out, "{i},{}", w.tree.encode())?;
                if let Some(s) = loops {
                    let erased: usize = w.records.iter().map(|r| r.loops.len()).sum();
                    write!(out, ",{erased},{},{}", s.loops.len(), s.trivial_loops.len())?;
                }
                writeln!(out)?;
            }
        }
        Cmd::Lerw { prefix, exact } => {
            let g = generator(cli)?;
            let p = g.indices(prefix)?;
            let nu: Vec<f64> = (0..g.n()).map(|x| if x == p[0] { 1.0 } else { 0.0 }).collect();
            let v = if *exact {
                json!({ "path": prefix, "probability": lerw_terminal_probability(&g, &nu, &p)? })
            } else {
                let (a, b) = lerw_prefix_forms(&g, &nu, &p)?;
                json!({ "prefix": prefix, "probability": a, "bordered_determinant": b })
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
        Cmd::Verify { suite, samples } => {
            let mut cfg = match &cli.config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::default(),
            };
            if let Some(s) = suite {
                cfg.suite = s.clone();
            }
            if cfg.suite.is_empty() {
                bail!("no suite given; choose one of {}", SUITES.join(", "));
            }
            if cli.seed != DEFAULT_SEED || cli.config.is_none() {
                cfg.seed = cli.seed;
            }
            if samples.is_some() {
                cfg.samples = *samples;
            }
            let report = run_suite(&cfg)?;
            writeln!(out, "{}", report.to_json())?;
            out.flush()?;
            for c in report.failures() {
                eprintln!("FAIL {}", c.name);
            }
            return Ok(report.pass);
        }
    }
    out.flush()?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
