//! Exact laws of the occupation field of the soup.

use num_complex::Complex64;

use crate::chain::{green, Generator};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::measure::{laplace_spectrum, log_det_continued, visit_mass, MAX_TUPLE};
use crate::soup::permanent::alpha_permanent;

/// Largest state space for the subset expansion.
pub const MAX_SUBSET_STATES: usize = 20;

/// `E[prod_i L^{x_i}] = Per_alpha(V restricted to the tuple)`; the centered
/// field uses `Per^0_alpha`.
pub fn ensemble_moment(g: &Generator, alpha: f64, tuple: &[usize], centered: bool) -> Result<f64> {
    if tuple.is_empty() {
        return Err(Error::EmptyTuple);
    }
    if tuple.len() > MAX_TUPLE {
        return Err(Error::TupleTooLarge(tuple.len()));
    }
    if let Some(&bad) = tuple.iter().find(|&&x| x >= g.n()) {
        return Err(Error::BadIndex(bad));
    }
    let v = green(g)?;
    let a = linalg::submatrix(&v, tuple, tuple);
    alpha_permanent(&a, alpha, centered)
}

/// `E[e^{z <L, chi>}] = det(I - z M_sqrt(chi) V M_sqrt(chi))^{-alpha}`.
pub fn ensemble_laplace(g: &Generator, alpha: f64, chi: &[f64], z: Complex64) -> Result<Complex64> {
    let (ev, _) = laplace_spectrum(g, chi, z)?;
    Ok((-alpha * log_det_continued(&ev, z)?).exp())
}

/// `E[e^{-<L, chi>}]` through the expansion
/// `det(I + M_chi V) = sum_A prod_A chi det V_A`.
pub fn ensemble_laplace_subsets(g: &Generator, alpha: f64, chi: &[f64]) -> Result<f64> {
    g.check_weights(chi)?;
    if g.n() > MAX_SUBSET_STATES {
        return Err(Error::BadParams(format!("subset expansion limited to {MAX_SUBSET_STATES} states")));
    }
    let v = green(g)?;
    Ok(subset_expansion(&v, chi).powf(-alpha))
}

/// `sum_{A} prod_{x in A} chi(x) det V_A`, empty set included.
pub fn subset_expansion(v: &Mat, chi: &[f64]) -> f64 {
    let support: Vec<usize> = (0..chi.len()).filter(|&x| chi[x] != 0.0).collect();
    let mut total = 0.0;
    for s in linalg::subsets(support.len()) {
        let a: Vec<usize> = s.iter().map(|&i| support[i]).collect();
        let w: f64 = a.iter().map(|&x| chi[x]).product();
        total += w * linalg::det(&linalg::principal(v, &a));
    }
    total
}

/// Probability that no non-trivial loop visits `f`.
pub fn avoid_probability(g: &Generator, alpha: f64, f: &[usize]) -> Result<f64> {
    Ok((-alpha * visit_mass(g, f)?).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Generator {
        Generator::new(vec!["a".into(), "b".into()], &[vec![-2.0, 1.0], vec![1.0, -2.0]]).unwrap()
    }

    #[test]
    fn moments() {
        let g = two();
        let a = 1.7;
        assert!((ensemble_moment(&g, a, &[0], false).unwrap() - a * 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ensemble_moment(&g, a, &[0], true).unwrap(), 0.0);
        let want = 4.0 / 9.0 * a * a + a / 9.0;
        assert!((ensemble_moment(&g, a, &[0, 1], false).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn laplace_forms_agree() {
        let g = two();
        let z0 = ensemble_laplace(&g, 2.0, &[1.0, 2.0], Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(z0, Complex64::new(1.0, 0.0));
        let a = ensemble_laplace(&g, 1.5, &[1.0, 2.0], Complex64::new(-1.0, 0.0)).unwrap();
        let b = ensemble_laplace_subsets(&g, 1.5, &[1.0, 2.0]).unwrap();
        assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-15);
    }

    #[test]
    fn avoid_examples() {
        let g = two();
        assert!((avoid_probability(&g, 1.0, &[0, 1]).unwrap() - 0.75).abs() < 1e-15);
        assert!((avoid_probability(&g, 1e-12, &[0]).unwrap() - 1.0).abs() < 1e-11);
    }
}
