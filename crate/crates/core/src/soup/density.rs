//! Joint densities of the occupation field on a finite set of states.

use statrs::function::gamma::ln_gamma;

use crate::chain::{green, Generator};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Cap on enumerated off-diagonal count matrices for the `alpha = 1` series.
const MAX_BALANCED_LEAVES: usize = 50_000_000;
/// Cap on stored power-series coefficients.
const MAX_SERIES_COEFFS: usize = 5_000_000;

/// A truncated series value and the size of its last shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityValue {
    pub value: f64,
    pub remainder: f64,
}

fn prepare(g: &Generator, f: &[usize], rho: &[f64]) -> Result<Mat> {
    if f.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(&bad) = f.iter().find(|&&x| x >= g.n()) {
        return Err(Error::BadIndex(bad));
    }
    for (i, x) in f.iter().enumerate() {
        if f[..i].contains(x) {
            return Err(Error::BadParams(format!("state `{}` repeated", g.label(*x))));
        }
    }
    if rho.len() != f.len() {
        return Err(Error::LengthMismatch { got: rho.len(), want: f.len() });
    }
    if rho.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::NonPositiveRho);
    }
    let v = green(g)?;
    Ok(linalg::principal(&v, f))
}

/// Density of `(L_1^{x_1}, .., L_1^{x_n})` at `rho` from the balanced
/// count-matrix series, keeping matrices whose row sums are at most `m_max`.
pub fn density_alpha_one(g: &Generator, f: &[usize], rho: &[f64], m_max: usize) -> Result<DensityValue> {
    let vf = prepare(g, f, rho)?;
    let lf = -linalg::inverse(&vf)?;
    let det = linalg::det(&(-&lf));
    let value = det * balanced_sum(&lf, rho, m_max)?;
    let prev = if m_max == 0 { 0.0 } else { det * balanced_sum(&lf, rho, m_max - 1)? };
    Ok(DensityValue { value, remainder: (value - prev).abs() })
}

/// `sum_{n balanced} prod_{ij} (L_ij sqrt(rho_i rho_j))^{n_ij} / n_ij!` with
/// row sums at most `m_max`. Diagonal entries do not affect the balance, so
/// each row's diagonal factor is a partial exponential series.
fn balanced_sum(lf: &Mat, rho: &[f64], m_max: usize) -> Result<f64> {
    let n = rho.len();
    // diag_partial[i][r] = sum_{k <= r} (L_ii rho_i)^k / k!
    let diag_partial: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let a = lf[(i, i)] * rho[i];
            let mut term = 1.0;
            let mut acc = Vec::with_capacity(m_max + 1);
            let mut s = 0.0;
            for k in 0..=m_max {
                if k > 0 {
                    term *= a / k as f64;
                }
                s += term;
                acc.push(s);
            }
            acc
        })
        .collect();
    let weights = Mat::from_fn(n, n, |i, j| lf[(i, j)] * (rho[i] * rho[j]).sqrt());
    let entries: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let mut st = BalancedState {
        n,
        m_max,
        entries: &entries,
        weights: &weights,
        diag_partial: &diag_partial,
        row: vec![0; n],
        col: vec![0; n],
        leaves: 0,
        total: 0.0,
    };
    st.walk(0, 1.0)?;
    Ok(st.total)
}

struct BalancedState<'a> {
    n: usize,
    m_max: usize,
    entries: &'a [(usize, usize)],
    weights: &'a Mat,
    diag_partial: &'a [Vec<f64>],
    row: Vec<usize>,
    col: Vec<usize>,
    leaves: usize,
    total: f64,
}

impl BalancedState<'_> {
    fn walk(&mut self, e: usize, prod: f64) -> Result<()> {
        if e == self.entries.len() {
            self.leaves += 1;
            if self.leaves > MAX_BALANCED_LEAVES {
                return Err(Error::BadParams("balanced-matrix enumeration too large; lower m_max".into()));
            }
            if (0..self.n).all(|i| self.row[i] == self.col[i]) {
                let d: f64 = (0..self.n).map(|i| self.diag_partial[i][self.m_max - self.row[i]]).product();
                self.total += prod * d;
            }
            return Ok(());
        }
        let (i, j) = self.entries[e];
        let w = self.weights[(i, j)];
        let budget = self.m_max - self.row[i].max(self.col[j]);
        let mut term = 1.0;
        for k in 0..=budget {
            if k > 0 {
                term *= w / k as f64;
                if term == 0.0 {
                    break;
                }
            }
            self.row[i] += k;
            self.col[j] += k;
            let r = self.walk(e + 1, prod * term);
            self.row[i] -= k;
            self.col[j] -= k;
            r?;
        }
        Ok(())
    }
}

/// Density of `(L_alpha^{x_1}, .., L_alpha^{x_n})` at `rho` from the power
/// series of `det(M_s + V_F)^{-alpha}`, keeping exponents `M_i <= m_max`.
pub fn density_series(g: &Generator, f: &[usize], alpha: f64, rho: &[f64], m_max: usize) -> Result<DensityValue> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::BadParams(format!("alpha must be positive, got {alpha}")));
    }
    let vf = prepare(g, f, rho)?;
    let n = f.len();
    let side = m_max + 1;
    let size = side
        .checked_pow(n as u32)
        .filter(|&s| s <= MAX_SERIES_COEFFS)
        .ok_or_else(|| Error::BadParams("power series too large; lower m_max".into()))?;
    // det(M_s + V_F) = sum_A s^A det V_{F \ A}; g(s) = det(M_s + V_F)/det(V_F) - 1.
    let p0 = linalg::det(&vf);
    let mut gterms: Vec<(usize, f64)> = Vec::new();
    for a in linalg::subsets(n).skip(1) {
        let rest: Vec<usize> = (0..n).filter(|i| !a.contains(i)).collect();
        let c = linalg::det(&linalg::principal(&vf, &rest)) / p0;
        if c != 0.0 {
            gterms.push((a.iter().fold(0u32, |m, &i| m | 1 << i) as usize, c));
        }
    }
    let strides: Vec<usize> = (0..n).map(|i| side.pow(i as u32)).collect();
    let digit = |idx: usize, i: usize| idx / strides[i] % side;
    let mut coef = vec![0.0; size];
    let mut power = vec![0.0; size];
    power[0] = 1.0;
    coef[0] = 1.0;
    let mut binom = 1.0;
    let mut next = vec![0.0; size];
    for k in 1..=n * m_max {
        next.iter_mut().for_each(|c| *c = 0.0);
        for idx in 0..size {
            let c = power[idx];
            if c == 0.0 {
                continue;
            }
            'terms: for &(mask, gc) in &gterms {
                let mut target = idx;
                for i in 0..n {
                    if mask >> i & 1 == 1 {
                        if digit(idx, i) == m_max {
                            continue 'terms;
                        }
                        target += strides[i];
                    }
                }
                next[target] += c * gc;
            }
        }
        std::mem::swap(&mut power, &mut next);
        binom *= (-alpha - (k - 1) as f64) / k as f64;
        for (c, p) in coef.iter_mut().zip(&power) {
            *c += binom * p;
        }
    }
    let log_rho: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let scale = p0.powf(-alpha);
    let mut value = 0.0;
    let mut shell = 0.0;
    for (idx, &c) in coef.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut e = 0.0;
        let mut last = false;
        for i in 0..n {
            let m = digit(idx, i) as f64;
            e += (m + alpha - 1.0) * log_rho[i] - ln_gamma(m + alpha);
            last |= digit(idx, i) == m_max;
        }
        let term = scale * c * e.exp();
        value += term;
        if last {
            shell += term.abs();
        }
    }
    Ok(DensityValue { value, remainder: shell })
}

/// Joint density of the occupation field at `rho`; `alpha = 1` uses the
/// balanced-matrix series, other values the power-series expansion.
pub fn occupation_density(g: &Generator, f: &[usize], alpha: f64, rho: &[f64], m_max: usize) -> Result<DensityValue> {
    if alpha == 1.0 {
        density_alpha_one(g, f, rho, m_max)
    } else {
        density_series(g, f, alpha, rho, m_max)
    }
}

/// [`occupation_density`] failing when the remainder estimate exceeds `tol`.
pub fn occupation_density_checked(
    g: &Generator,
    f: &[usize],
    alpha: f64,
    rho: &[f64],
    m_max: usize,
    tol: f64,
) -> Result<f64> {
    let d = occupation_density(g, f, alpha, rho, m_max)?;
    if d.remainder > tol {
        return Err(Error::TruncationTooSmall { remainder: d.remainder, tol });
    }
    Ok(d.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Generator {
        Generator::new(vec!["a".into(), "b".into()], &[vec![-2.0, 1.0], vec![1.0, -2.0]]).unwrap()
    }

    #[test]
    fn one_dimensional_exponential() {
        let g = two();
        let v = 2.0 / 3.0;
        for &r in &[0.1, 1.0, 3.3] {
            let d = density_alpha_one(&g, &[0], &[r], 40).unwrap();
            assert!((d.value - (-r / v).exp() / v).abs() < 1e-10, "{r}");
        }
    }

    #[test]
    fn one_dimensional_gamma() {
        let g = two();
        let v: f64 = 2.0 / 3.0;
        let a = 2.5;
        let r: f64 = 1.2;
        let want = (r.powf(a - 1.0) * (-r / v).exp()) / (ln_gamma(a).exp() * v.powf(a));
        let d = density_series(&g, &[0], a, &[r], 40).unwrap();
        assert!((d.value - want).abs() < 1e-10);
    }

    #[test]
    fn both_series_agree_at_alpha_one() {
        let g = Generator::unlabeled(Mat::from_row_slice(2, 2, &[-2.0, 1.2, 0.5, -1.5])).unwrap();
        let a = density_alpha_one(&g, &[0, 1], &[0.4, 0.9], 40).unwrap();
        let b = density_series(&g, &[0, 1], 1.0, &[0.4, 0.9], 40).unwrap();
        assert!((a.value - b.value).abs() < 1e-9 * a.value.abs().max(1.0));
    }

    #[test]
    fn errors() {
        let g = two();
        assert!(matches!(occupation_density(&g, &[0], 1.0, &[0.0], 10), Err(Error::NonPositiveRho)));
        let e = occupation_density_checked(&g, &[0], 1.0, &[5.0], 2, 1e-12).unwrap_err();
        assert!(matches!(e, Error::TruncationTooSmall { .. }));
    }
}
