//! `alpha`-permanents by explicit permutation enumeration.

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Largest matrix accepted by the enumeration.
pub const MAX_PERMANENT: usize = 10;

/// Coefficients `c_m` of `Per_alpha(A) = sum_m c_m alpha^m`, where `c_m` sums
/// `prod_i A[i][sigma(i)]` over permutations with `m` cycles. With
/// `zero_diagonal` only derangements are counted.
pub fn permanent_polynomial(a: &Mat, zero_diagonal: bool) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NonSquare { rows: n, row: 0, cols: a.ncols() });
    }
    if n > MAX_PERMANENT {
        return Err(Error::MatrixTooLarge(n));
    }
    let mut coef = vec![0.0; n + 1];
    if n == 0 {
        coef[0] = 1.0;
        return Ok(coef);
    }
    let mut sigma = vec![0usize; n];
    let mut used = vec![false; n];
    enumerate(a, zero_diagonal, 0, 1.0, &mut sigma, &mut used, &mut coef);
    Ok(coef)
}

fn enumerate(
    a: &Mat,
    zero_diagonal: bool,
    i: usize,
    prod: f64,
    sigma: &mut [usize],
    used: &mut [bool],
    coef: &mut [f64],
) {
    let n = sigma.len();
    if i == n {
        coef[cycle_count(sigma)] += prod;
        return;
    }
    for j in 0..n {
        if used[j] || (zero_diagonal && j == i) {
            continue;
        }
        let v = a[(i, j)];
        if v == 0.0 {
            continue;
        }
        used[j] = true;
        sigma[i] = j;
        enumerate(a, zero_diagonal, i + 1, prod * v, sigma, used, coef);
        used[j] = false;
    }
}

/// Number of cycles of a permutation.
pub fn cycle_count(sigma: &[usize]) -> usize {
    let mut seen = vec![false; sigma.len()];
    let mut m = 0;
    for s in 0..sigma.len() {
        if !seen[s] {
            m += 1;
            let mut x = s;
            while !seen[x] {
                seen[x] = true;
                x = sigma[x];
            }
        }
    }
    m
}

/// `Per_alpha(A)`, or `Per^0_alpha(A)` when `zero_diagonal`.
pub fn alpha_permanent(a: &Mat, alpha: f64, zero_diagonal: bool) -> Result<f64> {
    let c = permanent_polynomial(a, zero_diagonal)?;
    Ok(c.iter().rev().fold(0.0, |acc, &ci| acc * alpha + ci))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn small_cases() {
        let one = Mat::from_element(1, 1, 3.0);
        assert_eq!(alpha_permanent(&one, 0.7, false).unwrap(), 0.7 * 3.0);
        assert_eq!(alpha_permanent(&one, 0.7, true).unwrap(), 0.0);
        let (a, b, c, d) = (1.5, 2.0, -0.5, 4.0);
        let m = Mat::from_row_slice(2, 2, &[a, b, c, d]);
        let al = 1.3;
        assert!((alpha_permanent(&m, al, false).unwrap() - (al * al * a * d + al * b * c)).abs() < 1e-14);
        assert!((alpha_permanent(&m, al, true).unwrap() - al * b * c).abs() < 1e-14);
    }

    #[test]
    fn minus_one_gives_determinant() {
        let m = Mat::from_row_slice(3, 3, &[1.0, 2.0, 0.5, -1.0, 0.3, 2.0, 0.7, 0.1, -2.0]);
        let p = alpha_permanent(&m, -1.0, false).unwrap();
        assert!((p - linalg::det(&(-&m))).abs() < 1e-12);
        assert!(matches!(permanent_polynomial(&Mat::zeros(11, 11), false), Err(Error::MatrixTooLarge(11))));
    }

    #[test]
    fn cycles() {
        assert_eq!(cycle_count(&[0, 1, 2]), 3);
        assert_eq!(cycle_count(&[1, 2, 0]), 1);
        assert_eq!(cycle_count(&[1, 0, 2]), 2);
    }
}
