//! Closed-form quantities under the loop measure: discrete-loop masses,
//! occupation moments, Laplace transforms and visit masses.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::chain::{green, Generator};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::loops::{permutations, DiscreteLoop};

/// Largest tuple accepted by the permutation enumerations.
pub const MAX_TUPLE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum QueryValue {
    Real(f64),
    Complex { re: f64, im: f64 },
}

/// A measure query answer tagged with the formula that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureQueryResult {
    pub value: QueryValue,
    pub formula: &'static str,
    /// Spectral radius of `M_sqrt(chi) V M_sqrt(chi)` for Laplace-type queries.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

impl MeasureQueryResult {
    pub fn real(value: f64, formula: &'static str) -> Self {
        MeasureQueryResult { value: QueryValue::Real(value), formula, rho: None }
    }
}

/// `mu^d` of a discrete loop: `(1/n) Q^{x1}_{x2} ... Q^{xk}_{x1}`.
pub fn discrete_loop_mass(g: &Generator, cycle: &DiscreteLoop) -> f64 {
    let c = &cycle.cycle;
    let k = c.len();
    let q = g.q();
    let prod: f64 = (0..k).map(|i| q[(c[i], c[(i + 1) % k])]).product();
    prod / cycle.multiplicity as f64
}

/// `Tr(Q^k)/k` for `k = 1..=kmax` (index `k-1`).
pub fn trace_power_masses(g: &Generator, kmax: usize) -> Vec<f64> {
    let q = g.q();
    let mut p = q.clone();
    let mut out = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        out.push(p.trace() / k as f64);
        p = &p * q;
    }
    out
}

fn check_tuple(g: &Generator, tuple: &[usize]) -> Result<()> {
    if tuple.is_empty() {
        return Err(Error::EmptyTuple);
    }
    if let Some(&bad) = tuple.iter().find(|&&x| x >= g.n()) {
        return Err(Error::BadIndex(bad));
    }
    Ok(())
}

/// `mu(l^{x1..xn}) = V^{x1}_{x2} ... V^{xn}_{x1}`.
pub fn multi_occupation_expectation(g: &Generator, tuple: &[usize]) -> Result<f64> {
    check_tuple(g, tuple)?;
    let v = green(g)?;
    Ok(cyclic_product(&v, tuple))
}

fn cyclic_product(v: &Mat, t: &[usize]) -> f64 {
    let n = t.len();
    (0..n).map(|i| v[(t[i], t[(i + 1) % n])]).product()
}

/// `mu(l^{x1} ... l^{xn})` by summing over all orderings.
pub fn occupation_product_moment(g: &Generator, tuple: &[usize]) -> Result<f64> {
    check_tuple(g, tuple)?;
    if tuple.len() > MAX_TUPLE {
        return Err(Error::TupleTooLarge(tuple.len()));
    }
    let v = green(g)?;
    Ok(product_moment_v(&v, tuple))
}

pub(crate) fn product_moment_v(v: &Mat, tuple: &[usize]) -> f64 {
    let n = tuple.len();
    let mut word = vec![0usize; n];
    let mut total = 0.0;
    for p in permutations(n) {
        for (w, &i) in word.iter_mut().zip(&p) {
            *w = tuple[i];
        }
        total += cyclic_product(v, &word);
    }
    total / n as f64
}

/// `M_sqrt(chi) V M_sqrt(chi)` and its spectral radius.
pub fn chi_kernel(g: &Generator, chi: &[f64]) -> Result<(Mat, f64)> {
    g.check_weights(chi)?;
    let v = green(g)?;
    let s: Vec<f64> = chi.iter().map(|c| c.sqrt()).collect();
    let k = Mat::from_fn(g.n(), g.n(), |i, j| s[i] * v[(i, j)] * s[j]);
    let rho = linalg::spectral_radius(&k);
    Ok((k, rho))
}

/// Checks `Re z < 1/rho` and returns the eigenvalues of the kernel.
pub(crate) fn laplace_spectrum(g: &Generator, chi: &[f64], z: Complex64) -> Result<(Vec<Complex64>, f64)> {
    let (k, rho) = chi_kernel(g, chi)?;
    if rho > 0.0 && z.re >= 1.0 / rho {
        return Err(Error::OutOfDomain { re: z.re, bound: 1.0 / rho });
    }
    let ev = linalg::eigenvalues(&k).ok_or(Error::SingularSystem { rcond: 0.0 })?;
    Ok((ev, rho))
}

/// `sum_i ln(1 - z lambda_i)` over the kernel eigenvalues.
///
/// Each factor moves along a straight segment from 1 as z runs from 0, so
/// its principal logarithm is already the continuous branch; summing per
/// eigenvalue avoids the jumps a principal log of the determinant would have.
pub(crate) fn log_det_continued(ev: &[Complex64], z: Complex64) -> Result<Complex64> {
    let mut s = Complex64::new(0.0, 0.0);
    for &lam in ev {
        let w = Complex64::new(1.0, 0.0) - z * lam;
        if w.norm() == 0.0 {
            return Err(Error::SingularSystem { rcond: 0.0 });
        }
        s += w.ln();
    }
    Ok(s)
}

/// `mu(e^{z <l,chi>} - 1) = -ln det(I - z M_sqrt(chi) V M_sqrt(chi))`.
pub fn loop_laplace(g: &Generator, chi: &[f64], z: Complex64) -> Result<Complex64> {
    let (ev, _) = laplace_spectrum(g, chi, z)?;
    Ok(-log_det_continued(&ev, z)?)
}

pub fn loop_laplace_query(g: &Generator, chi: &[f64], z: Complex64) -> Result<MeasureQueryResult> {
    let (ev, rho) = laplace_spectrum(g, chi, z)?;
    let v = -log_det_continued(&ev, z)?;
    Ok(MeasureQueryResult { value: QueryValue::Complex { re: v.re, im: v.im }, formula: "loop-laplace", rho: Some(rho) })
}

/// Splits `mu(1 - e^{-<l,chi>})` into its trivial and non-trivial parts.
pub fn trivial_split(g: &Generator, chi: &[f64]) -> Result<(f64, f64)> {
    let (k, _) = chi_kernel(g, chi)?;
    let mut trivial = 0.0;
    for x in 0..g.n() {
        let d = g.out_rate(x);
        trivial += ((chi[x] + d) / d).ln();
    }
    let n = g.n();
    let total = (linalg::det(&(Mat::identity(n, n) + k))).ln();
    Ok((trivial, total - trivial))
}

fn ln_rate_product(g: &Generator, f: &[usize]) -> f64 {
    f.iter().map(|&x| g.out_rate(x).ln()).sum()
}

/// Mass of non-trivial loops visiting `f`: `ln(prod_F(-L^x_x) det V_F)`.
pub fn visit_mass(g: &Generator, f: &[usize]) -> Result<f64> {
    let f = g.check_subset(f)?;
    let v = green(g)?;
    Ok(ln_rate_product(g, &f) + linalg::det(&linalg::principal(&v, &f)).ln())
}

/// Mass of non-trivial loops visiting every one of `sets`, by
/// inclusion-exclusion over unions.
pub fn visit_all_mass(g: &Generator, sets: &[Vec<usize>]) -> Result<f64> {
    if sets.is_empty() {
        return Err(Error::EmptySubset);
    }
    let sets = sets.iter().map(|s| g.check_subset(s)).collect::<Result<Vec<_>>>()?;
    let v = green(g)?;
    let mut total = 0.0;
    for a in linalg::subsets(sets.len()).skip(1) {
        let mut union: Vec<usize> = a.iter().flat_map(|&i| sets[i].iter().copied()).collect();
        union.sort_unstable();
        union.dedup();
        let sign = if a.len() % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * linalg::det(&linalg::principal(&v, &union)).ln();
    }
    let common: Vec<usize> = (0..g.n()).filter(|x| sets.iter().all(|s| s.contains(x))).collect();
    Ok(total + ln_rate_product(g, &common))
}

/// `(mu(N 1_{N>1}), mu(N^2 1_{N>1}))` for the number `N` of visited states.
pub fn visited_points_moments(g: &Generator) -> Result<(f64, f64)> {
    let v = green(g)?;
    let n = g.n();
    let first: f64 = (0..n).map(|x| (g.out_rate(x) * v[(x, x)]).ln()).sum();
    let mut pairs = 0.0;
    for x in 0..n {
        for y in 0..n {
            if x != y {
                let dd = v[(x, x)] * v[(y, y)];
                pairs += (dd / (dd - v[(x, y)] * v[(y, x)])).ln();
            }
        }
    }
    Ok((first, pairs + first))
}

/// Highest Laguerre-type degree with cached coefficients.
pub const LAGUERRE_CACHE: usize = 64;

fn laguerre_table() -> &'static Vec<Vec<f64>> {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // g_0 = 1, g_1 = u, (k+1) g_{k+1} = (u - 2k) g_k - (k-1) g_{k-1}.
        let mut t: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
        for k in 1..LAGUERRE_CACHE {
            let (gk, gkm) = (&t[k], &t[k - 1]);
            let mut next = vec![0.0; k + 2];
            for (m, c) in gk.iter().enumerate() {
                next[m + 1] += c;
                next[m] -= 2.0 * k as f64 * c;
            }
            for (m, c) in gkm.iter().enumerate() {
                next[m] -= (k - 1) as f64 * c;
            }
            next.iter_mut().for_each(|c| *c /= (k + 1) as f64);
            t.push(next);
        }
        t
    })
}

/// Coefficients (in increasing degree) of the polynomial `L_k` defined by
/// `sum_{k>=1} t^k L_k(u) = e^{ut/(1+t)} - 1`.
pub fn laguerre_coefficients(k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::NonPositiveIndex);
    }
    if k <= LAGUERRE_CACHE {
        return Ok(laguerre_table()[k].clone());
    }
    Err(Error::BadParams(format!("Laguerre degree {k} exceeds {LAGUERRE_CACHE}")))
}

/// Evaluates `L_k(u)` by the three-term recurrence.
pub fn laguerre(k: usize, u: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::NonPositiveIndex);
    }
    let (mut prev, mut cur) = (1.0, u);
    for j in 1..k {
        let next = ((u - 2.0 * j as f64) * cur - (j as f64 - 1.0) * prev) / (j as f64 + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `mu((V^x_x)^j L_j(l^x/V^x_x) (V^y_y)^k L_k(l^y/V^y_y))`.
pub fn laguerre_covariance(g: &Generator, x: usize, y: usize, j: usize, k: usize) -> Result<f64> {
    if j == 0 || k == 0 {
        return Err(Error::NonPositiveIndex);
    }
    check_tuple(g, &[x, y])?;
    let v = green(g)?;
    if j != k {
        return Ok(0.0);
    }
    Ok((v[(x, y)] * v[(y, x)]).powi(k as i32) / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loops::DiscreteLoop;

    fn two() -> Generator {
        Generator::new(vec!["a".into(), "b".into()], &[vec![-2.0, 1.0], vec![1.0, -2.0]]).unwrap()
    }

    #[test]
    fn discrete_masses() {
        let g = two();
        let ab = DiscreteLoop::new(&[0, 1]).unwrap();
        assert!((discrete_loop_mass(&g, &ab) - 0.25).abs() < 1e-15);
        let abab = DiscreteLoop::new(&[1, 0, 1, 0]).unwrap();
        assert!((discrete_loop_mass(&g, &abab) - 1.0 / 32.0).abs() < 1e-15);
        let aab = DiscreteLoop::new(&[0, 0, 1]).unwrap();
        assert_eq!(discrete_loop_mass(&g, &aab), 0.0);
    }

    #[test]
    fn occupation_expectations() {
        let g = two();
        assert!((multi_occupation_expectation(&g, &[0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((multi_occupation_expectation(&g, &[0, 1]).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!((occupation_product_moment(&g, &[0, 0]).unwrap() - 4.0 / 9.0).abs() < 1e-15);
        assert!((occupation_product_moment(&g, &[0, 1]).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!(matches!(occupation_product_moment(&g, &[0; 11]), Err(Error::TupleTooLarge(11))));
        assert!(matches!(multi_occupation_expectation(&g, &[]), Err(Error::EmptyTuple)));
    }

    #[test]
    fn laplace_examples() {
        let g = two();
        assert_eq!(loop_laplace(&g, &[1.0, 1.0], Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        let v = loop_laplace(&g, &[3.0, 0.0], Complex64::new(-1.0, 0.0)).unwrap();
        assert!((v.re + 3f64.ln()).abs() < 1e-14 && v.im.abs() < 1e-15);
        // rho for chi = 1 is the top eigenvalue of V, i.e. 1.
        let (_, rho) = chi_kernel(&g, &[1.0, 1.0]).unwrap();
        assert!((rho - 1.0).abs() < 1e-13);
        let e = loop_laplace(&g, &[1.0, 1.0], Complex64::new(1.0 / rho + 0.1, 0.0)).unwrap_err();
        assert!(matches!(e, Error::OutOfDomain { .. }));
    }

    #[test]
    fn trivial_split_examples() {
        let g = two();
        assert_eq!(trivial_split(&g, &[0.0, 0.0]).unwrap(), (0.0, 0.0));
        let (t, nt) = trivial_split(&g, &[1.0, 1.0]).unwrap();
        assert!((t - 2.0 * 1.5f64.ln()).abs() < 1e-14);
        let total = -loop_laplace(&g, &[1.0, 1.0], Complex64::new(-1.0, 0.0)).unwrap().re;
        assert!((t + nt - total).abs() < 1e-12);
    }

    #[test]
    fn visit_examples() {
        let g = two();
        let l43 = (4.0f64 / 3.0).ln();
        assert!((visit_mass(&g, &[0, 1]).unwrap() - l43).abs() < 1e-14);
        assert!((visit_mass(&g, &[0]).unwrap() - l43).abs() < 1e-14);
        assert!((visit_all_mass(&g, &[vec![0]]).unwrap() - l43).abs() < 1e-14);
        assert!((visit_all_mass(&g, &[vec![0], vec![1]]).unwrap() - l43).abs() < 1e-14);
        let (a, b) = visited_points_moments(&g).unwrap();
        assert!((a - 2.0 * l43).abs() < 1e-14 && (b - 4.0 * l43).abs() < 1e-14);
        let one = Generator::unlabeled(Mat::from_row_slice(1, 1, &[-1.0])).unwrap();
        assert_eq!(visited_points_moments(&one).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn laguerre_low_degrees() {
        // L_1 = u, L_2 = u^2/2 - u, L_3 = u^3/6 - u^2 + u.
        assert_eq!(laguerre_coefficients(1).unwrap(), vec![0.0, 1.0]);
        let l2 = laguerre_coefficients(2).unwrap();
        assert!((l2[1] + 1.0).abs() < 1e-15 && (l2[2] - 0.5).abs() < 1e-15);
        let l3 = laguerre_coefficients(3).unwrap();
        assert!((l3[1] - 1.0).abs() < 1e-15 && (l3[2] + 1.0).abs() < 1e-15 && (l3[3] - 1.0 / 6.0).abs() < 1e-15);
        assert!((laguerre(3, 0.7).unwrap() - (0.7f64.powi(3) / 6.0 - 0.49 + 0.7)).abs() < 1e-15);
        assert!(matches!(laguerre(0, 1.0), Err(Error::NonPositiveIndex)));
    }

    #[test]
    fn laguerre_covariance_examples() {
        let g = two();
        assert_eq!(laguerre_covariance(&g, 0, 1, 1, 2).unwrap(), 0.0);
        assert!((laguerre_covariance(&g, 0, 0, 1, 1).unwrap() - 4.0 / 9.0).abs() < 1e-15);
        assert!(matches!(laguerre_covariance(&g, 0, 0, 0, 1), Err(Error::NonPositiveIndex)));
    }
}
