mod common;

use loopsoup::chain::green;
use loopsoup::loops::permutations;
use loopsoup::num_complex::Complex64;
use loopsoup::rng::stream;
use loopsoup::soup::{
    ensemble_laplace, ensemble_laplace_subsets, ensemble_moment, explicit_trivial_durations, SamplerOptions, SoupSampler,
};
use loopsoup::stats::mean_se;
use proptest::prelude::*;

use common::{build, close, rows};

/// `sum_sigma alpha^{cycles(sigma)} prod_i a[i][sigma(i)]`, with fixed points
/// dropped when `centered`.
fn alpha_permanent_oracle(a: &[Vec<f64>], alpha: f64, centered: bool) -> f64 {
    let n = a.len();
    let mut total = 0.0;
    for s in permutations(n) {
        if centered && (0..n).any(|i| s[i] == i) {
            continue;
        }
        let mut seen = vec![false; n];
        let mut cycles = 0;
        for i in 0..n {
            if !seen[i] {
                cycles += 1;
                let mut j = i;
                while !seen[j] {
                    seen[j] = true;
                    j = s[j];
                }
            }
        }
        total += alpha.powi(cycles) * (0..n).map(|i| a[i][s[i]]).product::<f64>();
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplace_routes_agree(r in (2..=4usize).prop_flat_map(rows), chi in prop::collection::vec(0.0..2.0f64, 4), alpha in 0.1..3.0f64) {
        let g = build(&r);
        let chi = &chi[..r.len()];
        let a = ensemble_laplace(&g, alpha, chi, Complex64::new(-1.0, 0.0)).unwrap();
        let b = ensemble_laplace_subsets(&g, alpha, chi).unwrap();
        prop_assert!(close(a.re, b, 1e-10) && a.im.abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn moments_are_alpha_permanents(r in rows(3), t in prop::collection::vec(0..3usize, 1..5), alpha in 0.1..3.0f64, centered in any::<bool>()) {
        let g = build(&r);
        let v = green(&g).unwrap();
        let a: Vec<Vec<f64>> = t.iter().map(|&x| t.iter().map(|&y| v[(x, y)]).collect()).collect();
        let want = alpha_permanent_oracle(&a, alpha, centered);
        let got = ensemble_moment(&g, alpha, &t, centered).unwrap();
        prop_assert!((got - want).abs() < 1e-10 * (1.0 + want.abs()), "{got} vs {want}");
    }
}

#[test]
fn replicas_are_reproducible() {
    let g = common::two_state();
    let s = SoupSampler::new(&g, SamplerOptions::default()).unwrap();
    assert_eq!(s.sample(1.5, 9, 3).unwrap(), s.sample(1.5, 9, 3).unwrap());
    assert_ne!(s.sample(1.5, 9, 3).unwrap(), s.sample(1.5, 9, 4).unwrap());
}

#[test]
fn mean_occupation() {
    // E[L^x] = alpha V^x_x = 1.5 * 2/3.
    let g = common::two_state();
    let s = SoupSampler::new(&g, SamplerOptions::default()).unwrap();
    let xs: Vec<f64> = (0..20_000).map(|i| s.sample(1.5, 77, i).unwrap().occupation()[0]).collect();
    let (m, se) = mean_se(&xs);
    assert!(((m - 1.0) / se).abs() < 4.0, "mean {m} se {se}");
}

#[test]
fn explicit_trivial_mass_above_cutoff() {
    // Expected total duration: int_c^inf alpha e^{-rate t} dt = alpha e^{-rate c} / rate.
    let (alpha, rate, cutoff) = (0.8, 2.0, 0.1);
    let xs: Vec<f64> = (0..40_000)
        .map(|i| explicit_trivial_durations(&mut stream(5, i), alpha, rate, cutoff).iter().sum())
        .collect();
    let (m, se) = mean_se(&xs);
    let want = alpha * (-rate * cutoff).exp() / rate;
    assert!(((m - want) / se).abs() < 4.0, "mean {m} want {want} se {se}");
    let all: Vec<f64> = (0..100).flat_map(|i| explicit_trivial_durations(&mut stream(6, i), alpha, rate, cutoff)).collect();
    assert!(all.iter().all(|&t| t > cutoff));
}
