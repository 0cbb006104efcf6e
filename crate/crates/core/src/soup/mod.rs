//! Poisson loop soups: sampling, occupation fields and their exact laws.

pub mod conditional;
pub mod density;
pub mod laws;
pub mod ldp;
pub mod permanent;
pub mod sampler;

use rand_distr::{Distribution, Gamma, Poisson};
use serde::Serialize;

use crate::chain::Generator;
use crate::error::{Error, Result};
use crate::loops::Loop;
use crate::rng::{self, Rng};

pub use conditional::{conditional_laplace_rhs, trace_soup, ConditionalLaplace, TracedSoup};
pub use density::{occupation_density, DensityValue};
pub use laws::{avoid_probability, ensemble_laplace, ensemble_laplace_subsets, ensemble_moment};
pub use ldp::{rate_function, rate_function_closed, rate_function_numeric};
pub use permanent::{alpha_permanent, permanent_polynomial};
pub use sampler::{sample_nontrivial_loop, LoopSampler};

/// How trivial (one-state) loops are represented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TrivialPolicy {
    /// Per-state duration totals, drawn from their exact Gamma law.
    AggregatedGamma,
    /// Individual trivial loops longer than the cutoff.
    Explicit { cutoff: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOptions {
    /// Fixed loop-length truncation; chosen from `tail_tolerance` when unset.
    pub kmax: Option<usize>,
    pub tail_tolerance: f64,
    pub trivial: TrivialPolicy,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions { kmax: None, tail_tolerance: sampler::TAIL_TOLERANCE, trivial: TrivialPolicy::AggregatedGamma }
    }
}

/// One realization of the Poisson ensemble of loops.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSoup {
    pub alpha: f64,
    pub n: usize,
    /// Non-trivial loops, canonical.
    pub loops: Vec<Loop>,
    pub policy: TrivialPolicy,
    /// Total trivial-loop duration per state (both policies).
    pub trivial_occupation: Vec<f64>,
    /// Individual trivial loops `(state, duration)` under the explicit policy.
    pub trivial_loops: Vec<(usize, f64)>,
    pub seed: u64,
    pub replica: u64,
}

impl LoopSoup {
    pub fn empty(n: usize, alpha: f64, policy: TrivialPolicy) -> Self {
        LoopSoup {
            alpha,
            n,
            loops: Vec::new(),
            policy,
            trivial_occupation: vec![0.0; n],
            trivial_loops: Vec::new(),
            seed: 0,
            replica: 0,
        }
    }

    /// Raw occupation field `sum_l l^x`, trivial loops included.
    pub fn occupation(&self) -> Vec<f64> {
        let mut occ = self.trivial_occupation.clone();
        for l in &self.loops {
            for (&x, &t) in l.states().iter().zip(l.holds()) {
                occ[x] += t;
            }
        }
        occ
    }

    /// Superposition of two soups on the same state space.
    pub fn union(&self, other: &LoopSoup) -> LoopSoup {
        let mut s = self.clone();
        s.alpha += other.alpha;
        s.loops.extend(other.loops.iter().cloned());
        for (a, b) in s.trivial_occupation.iter_mut().zip(&other.trivial_occupation) {
            *a += b;
        }
        s.trivial_loops.extend(other.trivial_loops.iter().copied());
        s
    }

    /// Every loop of the soup, trivial loops included when explicit.
    pub fn all_loops(&self) -> Vec<Loop> {
        let mut v = self.loops.clone();
        for &(x, t) in &self.trivial_loops {
            v.push(Loop::trivial(x, t).expect("positive duration"));
        }
        v
    }
}

/// Occupation field and its centered version `raw - alpha diag(V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationField {
    pub raw: Vec<f64>,
    pub centered: Vec<f64>,
}

impl OccupationField {
    pub fn new(raw: Vec<f64>, alpha: f64, diag_v: &[f64]) -> Self {
        let centered = raw.iter().zip(diag_v).map(|(r, v)| r - alpha * v).collect();
        OccupationField { raw, centered }
    }
}

pub fn occupation_field(soup: &LoopSoup, diag_v: &[f64]) -> OccupationField {
    OccupationField::new(soup.occupation(), soup.alpha, diag_v)
}

/// Reusable soup sampler for one generator.
#[derive(Debug, Clone)]
pub struct SoupSampler {
    loops: LoopSampler,
    opts: SamplerOptions,
}

impl SoupSampler {
    pub fn new(g: &Generator, opts: SamplerOptions) -> Result<Self> {
        if let TrivialPolicy::Explicit { cutoff } = opts.trivial {
            if !(cutoff.is_finite() && cutoff > 0.0) {
                return Err(Error::BadParams(format!("trivial cutoff must be positive, got {cutoff}")));
            }
        }
        let loops = LoopSampler::new(g, opts.tail_tolerance, opts.kmax)?;
        Ok(SoupSampler { loops, opts })
    }

    pub fn loop_sampler(&self) -> &LoopSampler {
        &self.loops
    }

    /// Replica `replica` of the soup with intensity `alpha` under `seed`.
    pub fn sample(&self, alpha: f64, seed: u64, replica: u64) -> Result<LoopSoup> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::BadParams(format!("alpha must be non-negative, got {alpha}")));
        }
        let n = self.loops.n();
        let mut soup = LoopSoup::empty(n, alpha, self.opts.trivial);
        soup.seed = seed;
        soup.replica = replica;
        if alpha == 0.0 {
            return Ok(soup);
        }
        let mut main = rng::stream(seed, rng::sub_stream_id(replica, 0));
        let mean = alpha * self.loops.mass();
        let count = if mean > 0.0 { Poisson::new(mean).expect("positive mean").sample(&mut main) as u64 } else { 0 };
        soup.loops = (0..count)
            .map(|j| self.loops.sample_loop(&mut rng::stream(seed, rng::sub_stream_id(replica, j + 1))))
            .collect::<Result<_>>()?;
        for x in 0..n {
            let rate = self.loops.rates()[x];
            match self.opts.trivial {
                TrivialPolicy::AggregatedGamma => {
                    let gamma = Gamma::new(alpha, 1.0 / rate).expect("valid gamma parameters");
                    soup.trivial_occupation[x] = gamma.sample(&mut main);
                }
                TrivialPolicy::Explicit { cutoff } => {
                    for t in explicit_trivial_durations(&mut main, alpha, rate, cutoff) {
                        soup.trivial_occupation[x] += t;
                        soup.trivial_loops.push((x, t));
                    }
                }
            }
        }
        Ok(soup)
    }
}

/// Points of the Poisson process with intensity `alpha t^{-1} e^{-rate t} dt`
/// on `(cutoff, inf)`, by thinning two dominating processes split at
/// `t0 = max(1/rate, cutoff)`.
pub fn explicit_trivial_durations(rng: &mut Rng, alpha: f64, rate: f64, cutoff: f64) -> Vec<f64> {
    let t0 = (1.0 / rate).max(cutoff);
    let mut out = Vec::new();
    // (cutoff, t0]: dominate by alpha/t, log-uniform points.
    let m1 = alpha * (t0 / cutoff).ln();
    if m1 > 0.0 {
        let c = Poisson::new(m1).expect("positive mean").sample(rng) as usize;
        for _ in 0..c {
            let t = cutoff * (t0 / cutoff).powf(rng::uniform(rng));
            if rng::uniform(rng) < (-rate * t).exp() {
                out.push(t);
            }
        }
    }
    // (t0, inf): dominate by (alpha/t0) e^{-rate t}.
    let m2 = alpha * (-rate * t0).exp() / (rate * t0);
    if m2 > 0.0 {
        let c = Poisson::new(m2).expect("positive mean").sample(rng) as usize;
        for _ in 0..c {
            let t = t0 + rng::exponential(rng, rate);
            if rng::uniform(rng) < t0 / t {
                out.push(t);
            }
        }
    }
    out
}

pub fn sample_soup(g: &Generator, alpha: f64, opts: SamplerOptions, seed: u64) -> Result<LoopSoup> {
    SoupSampler::new(g, opts)?.sample(alpha, seed, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Generator {
        Generator::new(vec!["a".into(), "b".into()], &[vec![-2.0, 1.0], vec![1.0, -2.0]]).unwrap()
    }

    #[test]
    fn zero_alpha_is_empty() {
        let s = sample_soup(&two(), 0.0, SamplerOptions::default(), 3).unwrap();
        assert!(s.loops.is_empty());
        assert_eq!(s.occupation(), vec![0.0, 0.0]);
    }

    #[test]
    fn reproducible() {
        let a = sample_soup(&two(), 2.5, SamplerOptions::default(), 99).unwrap();
        let b = sample_soup(&two(), 2.5, SamplerOptions::default(), 99).unwrap();
        assert_eq!(a, b);
        let opts = SamplerOptions { trivial: TrivialPolicy::Explicit { cutoff: 1e-3 }, ..Default::default() };
        let c = sample_soup(&two(), 2.5, opts.clone(), 99).unwrap();
        assert_eq!(c, sample_soup(&two(), 2.5, opts, 99).unwrap());
        assert!(c.trivial_loops.iter().all(|&(_, t)| t > 1e-3));
    }

    #[test]
    fn loops_are_nontrivial_and_canonical() {
        let ss = SoupSampler::new(&two(), SamplerOptions::default()).unwrap();
        for r in 0..200 {
            let s = ss.sample(3.0, 1, r).unwrap();
            for l in &s.loops {
                assert!(!l.is_trivial());
                assert_eq!(&crate::loops::canonicalize(l.pointed()).unwrap(), l);
            }
            assert!(s.trivial_occupation.iter().all(|&t| t >= 0.0));
        }
    }

    #[test]
    fn union_adds_fields() {
        let ss = SoupSampler::new(&two(), SamplerOptions::default()).unwrap();
        let a = ss.sample(1.0, 4, 0).unwrap();
        let b = ss.sample(1.0, 4, 1).unwrap();
        let u = a.union(&b).occupation();
        for x in 0..2 {
            assert!((u[x] - a.occupation()[x] - b.occupation()[x]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let opts = SamplerOptions { trivial: TrivialPolicy::Explicit { cutoff: 0.0 }, ..Default::default() };
        assert!(matches!(SoupSampler::new(&two(), opts), Err(Error::BadParams(_))));
        let ss = SoupSampler::new(&two(), SamplerOptions::default()).unwrap();
        assert!(ss.sample(-1.0, 0, 0).is_err());
    }
}
