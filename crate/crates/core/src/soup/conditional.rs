//! Laplace transform of the occupation field conditioned on the soup traced
//! on a subset `F`.

use num_complex::Complex64;

use crate::chain::{complement, hitting_return_chi, restrict_generator, Generator};
use crate::error::{Error, Result};
use crate::loops::{jump_counts, loop_trace};
use crate::soup::laws::ensemble_laplace;
use crate::soup::LoopSoup;

/// The statistics of a soup traced on `F` that the conditional law needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedSoup {
    pub f: Vec<usize>,
    /// Row-major `|F| x |F|` jump counts `N^x_y` of the traced loops.
    pub nxy: Vec<u64>,
    /// Occupation on `F`, trivial loops included.
    pub occupation: Vec<f64>,
}

pub fn trace_soup(soup: &LoopSoup, f: &[usize]) -> TracedSoup {
    let k = f.len();
    let mut nxy = vec![0u64; k * k];
    for l in &soup.loops {
        if let Some(t) = loop_trace(l, f) {
            let j = jump_counts(&t, soup.n);
            for (a, &x) in f.iter().enumerate() {
                for (b, &y) in f.iter().enumerate() {
                    nxy[a * k + b] += j.get(x, y) as u64;
                }
            }
        }
    }
    let occ = soup.occupation();
    TracedSoup { f: f.to_vec(), nxy, occupation: f.iter().map(|&x| occ[x]).collect() }
}

/// Precomputed pieces of the conditional Laplace transform for fixed
/// `(G, alpha, F, chi)`.
#[derive(Debug, Clone)]
pub struct ConditionalLaplace {
    f: Vec<usize>,
    chi_f: Vec<f64>,
    /// `E[exp(-<L^{F^c}, chi>)]` for loops contained in `F^c`.
    outside: f64,
    /// `(R^F_chi)^x_y / (R^F)^x_y`, `None` when the denominator vanishes.
    ratio: Vec<Option<f64>>,
    /// `L^x_x ((R^F)^x_x - (R^F_chi)^x_x)`.
    diag_rate: Vec<f64>,
}

impl ConditionalLaplace {
    pub fn new(g: &Generator, alpha: f64, f: &[usize], chi: &[f64]) -> Result<Self> {
        let f = g.check_subset(f)?;
        g.check_weights(chi)?;
        let n = g.n();
        let fc = complement(n, &f);
        let outside = if fc.is_empty() {
            1.0
        } else {
            let r = restrict_generator(g, &fc)?;
            let chi_c: Vec<f64> = fc.iter().map(|&x| chi[x]).collect();
            ensemble_laplace(&r, alpha, &chi_c, Complex64::new(-1.0, 0.0))?.re
        };
        // Excursions only see chi outside F.
        let chi_out: Vec<f64> = (0..n).map(|x| if f.contains(&x) { 0.0 } else { chi[x] }).collect();
        let hd = hitting_return_chi(g, &f, &chi_out)?;
        let r_chi = hd.r_chi.expect("requested");
        let k = f.len();
        let mut ratio = vec![None; k * k];
        let mut diag_rate = vec![0.0; k];
        for a in 0..k {
            for b in 0..k {
                let den = hd.r[(a, b)];
                if den > 0.0 {
                    ratio[a * k + b] = Some(r_chi[(a, b)] / den);
                }
            }
            diag_rate[a] = g.rate(f[a], f[a]) * (hd.r[(a, a)] - r_chi[(a, a)]);
        }
        Ok(ConditionalLaplace { chi_f: f.iter().map(|&x| chi[x]).collect(), f, outside, ratio, diag_rate })
    }

    pub fn outside_factor(&self) -> f64 {
        self.outside
    }

    pub fn evaluate(&self, g: &Generator, traced: &TracedSoup) -> Result<f64> {
        if traced.f != self.f {
            return Err(Error::BadParams("traced soup uses a different subset".into()));
        }
        let k = self.f.len();
        let mut log = 0.0;
        for a in 0..k {
            log += -traced.occupation[a] * self.chi_f[a] + self.diag_rate[a] * traced.occupation[a];
            for b in 0..k {
                let c = traced.nxy[a * k + b];
                if a == b || c == 0 {
                    continue;
                }
                match self.ratio[a * k + b] {
                    Some(r) => log += c as f64 * r.ln(),
                    None => {
                        return Err(Error::ZeroDenominator {
                            from: g.label(self.f[a]).into(),
                            to: g.label(self.f[b]).into(),
                        })
                    }
                }
            }
        }
        Ok(self.outside * log.exp())
    }
}

/// `E[exp(-<L, chi>) | soup traced on F]` evaluated on one traced soup.
pub fn conditional_laplace_rhs(g: &Generator, alpha: f64, f: &[usize], chi: &[f64], traced: &TracedSoup) -> Result<f64> {
    ConditionalLaplace::new(g, alpha, f, chi)?.evaluate(g, traced)
}
