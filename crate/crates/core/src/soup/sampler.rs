//! Exact sampler for the loop measure restricted to non-trivial loops.
//!
//! The length `k` is drawn with weight `Tr(Q^k)/k`, the base point with
//! weight `(Q^k)^x_x`, and the cycle is completed as a discrete bridge using
//! precomputed powers of `Q`.

use crate::chain::Generator;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::loops::{Loop, PointedLoop};
use crate::measure::visit_mass;
use crate::rng::{self, Rng};

/// Default relative mass allowed in the truncated length tail.
pub const TAIL_TOLERANCE: f64 = 1e-12;
/// Upper bound on stored matrix entries for the `Q` powers.
const MAX_POWER_ENTRIES: usize = 50_000_000;

#[derive(Debug, Clone)]
pub struct LoopSampler {
    n: usize,
    kmax: usize,
    /// `Q^0 ..= Q^kmax`.
    powers: Vec<Mat>,
    /// Cumulative weights over `k = 2..=kmax`.
    k_cdf: Vec<f64>,
    /// Exact non-trivial mass `-ln det(I - Q)`.
    mass: f64,
    rates: Vec<f64>,
}

/// Smallest `k` with `rho^{k+1} / ((k+1)(1-rho)) < tol * mass`.
pub fn choose_kmax(rho: f64, mass: f64, tol: f64) -> Result<usize> {
    if rho <= 0.0 {
        return Ok(2);
    }
    if rho >= 1.0 {
        return Err(Error::NotTransient(rho));
    }
    let target = tol * mass;
    let mut k = 2usize;
    let mut pk = rho.powi(3);
    while pk / ((k + 1) as f64 * (1.0 - rho)) >= target {
        k += 1;
        pk *= rho;
        if k > 10_000_000 {
            return Err(Error::TruncationInfeasible(format!("tail bound not reached (rho = {rho})")));
        }
    }
    Ok(k)
}

impl LoopSampler {
    pub fn new(g: &Generator, tail_tolerance: f64, kmax: Option<usize>) -> Result<Self> {
        if !g.is_transient() {
            return Err(Error::NotTransient(g.rho_q()));
        }
        let n = g.n();
        let mass = visit_mass(g, &(0..n).collect::<Vec<_>>())?.max(0.0);
        let kmax = match kmax {
            Some(k) => k.max(2),
            None => choose_kmax(g.rho_q(), mass, tail_tolerance)?,
        };
        if (kmax + 1).saturating_mul(n * n) > MAX_POWER_ENTRIES {
            return Err(Error::TruncationInfeasible(format!("kmax = {kmax} needs too many stored powers")));
        }
        let q = g.q();
        let mut powers = Vec::with_capacity(kmax + 1);
        powers.push(Mat::identity(n, n));
        for k in 1..=kmax {
            let next = &powers[k - 1] * q;
            powers.push(next);
        }
        let mut k_cdf = Vec::with_capacity(kmax - 1);
        let mut acc = 0.0;
        for (k, p) in powers.iter().enumerate().skip(2) {
            acc += p.trace().max(0.0) / k as f64;
            k_cdf.push(acc);
        }
        let rates = (0..n).map(|x| g.out_rate(x)).collect();
        Ok(LoopSampler { n, kmax, powers, k_cdf, mass, rates })
    }

    pub fn from_generator(g: &Generator) -> Result<Self> {
        Self::new(g, TAIL_TOLERANCE, None)
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }
    pub fn n(&self) -> usize {
        self.n
    }
    /// Exact total mass of non-trivial loops.
    pub fn mass(&self) -> f64 {
        self.mass
    }
    /// Mass retained by the length truncation.
    pub fn truncated_mass(&self) -> f64 {
        self.k_cdf.last().copied().unwrap_or(0.0)
    }
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Draws the discrete cycle `(x_1, .., x_k)` based at its first state.
    pub fn sample_cycle(&self, rng: &mut Rng) -> Result<Vec<usize>> {
        if self.truncated_mass() <= 0.0 {
            return Err(Error::TruncationInfeasible("the chain has no non-trivial loops".into()));
        }
        let k = rng::from_cdf(rng, &self.k_cdf) + 2;
        let pk = &self.powers[k];
        let diag: Vec<f64> = (0..self.n).map(|x| pk[(x, x)].max(0.0)).collect();
        let x1 = rng::categorical(rng, &diag, diag.iter().sum());
        let q = &self.powers[1];
        let mut cycle = Vec::with_capacity(k);
        cycle.push(x1);
        let mut cur = x1;
        let mut w = vec![0.0; self.n];
        for i in 0..k - 1 {
            let rest = &self.powers[k - i - 1];
            let mut total = 0.0;
            for (y, wy) in w.iter_mut().enumerate() {
                *wy = q[(cur, y)] * rest[(y, x1)];
                total += *wy;
            }
            cur = rng::categorical(rng, &w, total);
            cycle.push(cur);
        }
        Ok(cycle)
    }

    /// Draws one non-trivial loop with exponential holding times.
    pub fn sample_loop(&self, rng: &mut Rng) -> Result<Loop> {
        let states = self.sample_cycle(rng)?;
        let holds = states.iter().map(|&x| rng::exponential(rng, self.rates[x])).collect();
        Ok(Loop::from_valid(PointedLoop { states, holds }))
    }
}

/// Convenience wrapper building a sampler on every call.
pub fn sample_nontrivial_loop(g: &Generator, rng: &mut Rng) -> Result<Loop> {
    LoopSampler::from_generator(g)?.sample_loop(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Generator {
        Generator::new(vec!["a".into(), "b".into()], &[vec![-2.0, 1.0], vec![1.0, -2.0]]).unwrap()
    }

    #[test]
    fn kmax_meets_tail_bound() {
        let s = LoopSampler::from_generator(&two()).unwrap();
        let k = s.kmax();
        let tail = |k: usize| 0.5f64.powi(k as i32 + 1) / ((k + 1) as f64 * 0.5);
        assert!(tail(k) < 1e-12 * s.mass());
        assert!(tail(k - 1) >= 1e-12 * s.mass());
        assert!((s.mass() - s.truncated_mass()).abs() < 1e-12);
    }

    #[test]
    fn two_state_lengths_are_even() {
        let s = LoopSampler::from_generator(&two()).unwrap();
        let mut r = rng::stream(5, 0);
        for _ in 0..2000 {
            let c = s.sample_cycle(&mut r).unwrap();
            assert_eq!(c.len() % 2, 0);
            assert!(c.windows(2).all(|w| w[0] != w[1]));
        }
    }

    #[test]
    fn recurrent_chain_is_rejected() {
        let g = Generator::unlabeled(Mat::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0])).unwrap();
        assert!(matches!(LoopSampler::from_generator(&g), Err(Error::NotTransient(_))));
    }

    #[test]
    fn chain_without_cycles_has_no_loops() {
        let g = Generator::unlabeled(Mat::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0])).unwrap();
        let s = LoopSampler::from_generator(&g).unwrap();
        assert_eq!(s.mass(), 0.0);
        assert!(s.sample_cycle(&mut rng::stream(0, 0)).is_err());
    }
}
