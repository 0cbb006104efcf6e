//! Dense linear algebra helpers on top of `nalgebra`.
//!
//! Every inverse and solve goes through a partial-pivot LU and is rejected
//! when the reciprocal 1-norm condition number drops below [`RCOND_MIN`].

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type CMat = DMatrix<Complex64>;

/// Smallest accepted reciprocal condition estimate.
pub const RCOND_MIN: f64 = 1e-13;

pub fn norm1(a: &Mat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &Mat) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Inverse with the conditioning guard. The empty matrix inverts to itself.
pub fn inverse(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let lu = a.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::SingularSystem { rcond: 0.0 })?;
    let rcond = 1.0 / (norm1(a) * norm1(&inv));
    if !rcond.is_finite() || rcond < RCOND_MIN {
        return Err(Error::SingularSystem { rcond: if rcond.is_finite() { rcond } else { 0.0 } });
    }
    Ok(inv)
}

/// Solves `a x = b` for a matrix right-hand side.
pub fn solve(a: &Mat, b: &Mat) -> Result<Mat> {
    if a.nrows() == 0 {
        return Ok(Mat::zeros(0, b.ncols()));
    }
    let inv = inverse(a)?;
    Ok(inv * b)
}

pub fn det(a: &Mat) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    a.clone().lu().determinant()
}

pub fn cdet(a: &CMat) -> Complex64 {
    if a.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    a.clone().lu().determinant()
}

pub fn submatrix(a: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

pub fn principal(a: &Mat, idx: &[usize]) -> Mat {
    submatrix(a, idx, idx)
}

pub fn diag(v: &[f64]) -> Mat {
    Mat::from_diagonal(&Vector::from_column_slice(v))
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues(a: &Mat) -> Option<Vec<Complex64>> {
    if a.nrows() == 0 {
        return Some(Vec::new());
    }
    let schur = Schur::try_new(a.clone(), 1e-15, 10_000)?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

/// Spectral radius; falls back to power iteration on `|a|` when the Schur
/// iteration does not converge (our matrices are entrywise non-negative).
pub fn spectral_radius(a: &Mat) -> f64 {
    match eigenvalues(a) {
        Some(ev) if ev.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
            ev.iter().map(|z| z.norm()).fold(0.0, f64::max)
        }
        _ => power_iteration(a),
    }
}

fn power_iteration(a: &Mat) -> f64 {
    let n = a.nrows();
    let abs = a.map(f64::abs);
    let mut v = Vector::from_element(n, 1.0 / n as f64);
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let w = &abs * &v;
        let s: f64 = w.iter().sum();
        if s == 0.0 {
            return 0.0;
        }
        let next = w / s;
        let delta = (&next - &v).amax();
        v = next;
        lambda = s;
        if delta < 1e-15 {
            break;
        }
    }
    lambda
}

pub fn to_complex(a: &Mat) -> CMat {
    a.map(|v| Complex64::new(v, 0.0))
}

/// Iterates over all subsets of `0..n` as sorted index lists, including the
/// empty one.
pub fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u64..(1u64 << n)).map(move |mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_two_by_two() {
        let a = Mat::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let inv = inverse(&a).unwrap();
        let want = Mat::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        assert!(max_abs_diff(&inv, &want) < 1e-15);
    }

    #[test]
    fn singular_is_rejected() {
        let a = Mat::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!(matches!(inverse(&a), Err(Error::SingularSystem { .. })));
        let b = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-17]);
        assert!(matches!(inverse(&b), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn spectral_radius_of_rotation_block() {
        let a = Mat::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        assert!((spectral_radius(&a) - 0.5).abs() < 1e-14);
        let c = Mat::from_row_slice(3, 3, &[0.0, 0.9, 0.0, 0.0, 0.0, 0.9, 0.9, 0.0, 0.0]);
        assert!((spectral_radius(&c) - 0.9).abs() < 1e-12);
        assert!((power_iteration(&Mat::from_row_slice(2, 2, &[0.2, 0.3, 0.1, 0.4])) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn subsets_enumerates_power_set() {
        let all: Vec<_> = subsets(3).collect();
        assert_eq!(all.len(), 8);
        assert!(all.contains(&vec![0, 2]));
    }
}
