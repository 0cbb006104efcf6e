//! Large-deviation rate function of the occupation field as `alpha` grows.
//!
//! With `A = (V_F)^{-1}`, the log-Laplace transform of `L_1` on `F` is
//! `Lambda(u) = ln det A - ln det(A - M_u)`, finite exactly when `A - M_u` is
//! a nonsingular M-matrix. The rate function is its Legendre transform.

use crate::chain::{green, Generator};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};

fn check_points(g: &Generator, points: &[usize], y: &[f64]) -> Result<Mat> {
    if points.is_empty() {
        return Err(Error::EmptyTuple);
    }
    if let Some(&bad) = points.iter().find(|&&x| x >= g.n()) {
        return Err(Error::BadIndex(bad));
    }
    for (i, x) in points.iter().enumerate() {
        if points[..i].contains(x) {
            return Err(Error::BadParams(format!("state `{}` repeated", g.label(*x))));
        }
    }
    if y.len() != points.len() {
        return Err(Error::LengthMismatch { got: y.len(), want: points.len() });
    }
    Ok(linalg::principal(&green(g)?, points))
}

/// Leading principal minors of a Z-matrix all positive, by elimination
/// without pivoting; returns the determinant when they are.
fn m_matrix_det(b: &Mat) -> Option<f64> {
    let n = b.nrows();
    let mut a = b.clone();
    let mut det = 1.0;
    for k in 0..n {
        let p = a[(k, k)];
        if !(p > 0.0) {
            return None;
        }
        det *= p;
        for i in k + 1..n {
            let f = a[(i, k)] / p;
            for j in k..n {
                a[(i, j)] -= f * a[(k, j)];
            }
        }
    }
    Some(det)
}

/// `Lambda(u)` on `F`, `+inf` outside its domain.
pub fn log_laplace(vf: &Mat, u: &[f64]) -> f64 {
    let a = match linalg::inverse(vf) {
        Ok(a) => a,
        Err(_) => return f64::INFINITY,
    };
    log_laplace_with(&a, u)
}

fn log_laplace_with(a: &Mat, u: &[f64]) -> f64 {
    let mut b = a.clone();
    for (i, ui) in u.iter().enumerate() {
        b[(i, i)] -= ui;
    }
    match (m_matrix_det(a), m_matrix_det(&b)) {
        (Some(da), Some(db)) => da.ln() - db.ln(),
        _ => f64::INFINITY,
    }
}

/// Numerical Legendre transform by damped Newton ascent from `u = 0`.
pub fn rate_function_numeric(g: &Generator, points: &[usize], y: &[f64]) -> Result<f64> {
    let vf = check_points(g, points, y)?;
    if y.iter().any(|&v| !(v > 0.0)) {
        return Ok(f64::INFINITY);
    }
    let n = y.len();
    let a = linalg::inverse(&vf)?;
    let objective = |u: &[f64]| -> f64 {
        let l = log_laplace_with(&a, u);
        u.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() - l
    };
    let mut u = vec![0.0; n];
    let mut val = objective(&u);
    let ymax = y.iter().fold(0.0f64, |m, v| m.max(*v));
    for _ in 0..500 {
        let mut b = a.clone();
        for i in 0..n {
            b[(i, i)] -= u[i];
        }
        let w = linalg::inverse(&b)?;
        let grad = Vector::from_fn(n, |i, _| y[i] - w[(i, i)]);
        if grad.amax() <= 1e-15 * ymax.max(1.0) {
            break;
        }
        let h = Mat::from_fn(n, n, |i, j| w[(i, j)] * w[(j, i)]);
        let step = linalg::solve(&h, &Mat::from_column_slice(n, 1, grad.as_slice()))?;
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..80 {
            let cand: Vec<f64> = (0..n).map(|i| u[i] + t * step[(i, 0)]).collect();
            let cv = objective(&cand);
            if cv.is_finite() && cv >= val - 1e-15 * val.abs().max(1.0) {
                moved = cand != u;
                u = cand;
                val = cv;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(val.max(0.0))
}

/// Closed forms for one and two points, `None` for larger sets.
///
/// The two-point form uses the product of the off-diagonal entries of `V`
/// under the square root; this is the value the Legendre transform yields.
pub fn rate_function_closed(g: &Generator, points: &[usize], y: &[f64]) -> Result<Option<f64>> {
    let vf = check_points(g, points, y)?;
    match points.len() {
        1 => {
            let v = vf[(0, 0)];
            let y = y[0];
            Ok(Some(if y > 0.0 { (v / y).ln() - 1.0 + y / v } else { f64::INFINITY }))
        }
        2 => {
            let (y1, y2) = (y[0], y[1]);
            if !(y1 > 0.0 && y2 > 0.0) {
                return Ok(Some(f64::INFINITY));
            }
            let (v11, v12, v21, v22) = (vf[(0, 0)], vf[(0, 1)], vf[(1, 0)], vf[(1, 1)]);
            let d = v11 * v22 - v12 * v21;
            let s = (1.0 + 4.0 * y1 * y2 * v12 * v21 / (d * d)).sqrt();
            Ok(Some(((1.0 + s) / (2.0 * y1 * y2)).ln() + d.ln() + (y1 * v22 + y2 * v11) / d - 1.0 - s))
        }
        _ => Ok(None),
    }
}

/// Rate function `Lambda*(y)`: closed form where available, otherwise the
/// numerical transform. Returns `+inf` off the positive orthant.
pub fn rate_function(g: &Generator, points: &[usize], y: &[f64]) -> Result<f64> {
    match rate_function_closed(g, points, y)? {
        Some(v) => Ok(v),
        None => rate_function_numeric(g, points, y),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Generator {
        Generator::unlabeled(Mat::from_row_slice(3, 3, &[-3.0, 1.0, 1.5, 0.5, -2.0, 1.0, 1.0, 0.7, -2.5])).unwrap()
    }

    #[test]
    fn one_point() {
        let g = chain();
        let v = green(&g).unwrap()[(1, 1)];
        assert!((rate_function(&g, &[1], &[2.0 * v]).unwrap() - (1.0 - 2f64.ln())).abs() < 1e-14);
        assert_eq!(rate_function(&g, &[1], &[v]).unwrap(), 0.0);
        assert_eq!(rate_function(&g, &[1], &[-1.0]).unwrap(), f64::INFINITY);
        assert!((rate_function_numeric(&g, &[1], &[2.0 * v]).unwrap() - (1.0 - 2f64.ln())).abs() < 1e-10);
    }

    #[test]
    fn two_points_match_numeric() {
        let g = chain();
        for &(a, b) in &[(0.3, 0.5), (1.0, 1.0), (0.8, 2.0), (3.0, 0.2)] {
            let c = rate_function_closed(&g, &[0, 2], &[a, b]).unwrap().unwrap();
            let n = rate_function_numeric(&g, &[0, 2], &[a, b]).unwrap();
            assert!((c - n).abs() < 1e-9, "{a} {b}: {c} vs {n}");
        }
    }

    #[test]
    fn vanishes_at_the_mean() {
        let g = chain();
        let v = green(&g).unwrap();
        let y = [v[(0, 0)], v[(1, 1)], v[(2, 2)]];
        assert!(rate_function(&g, &[0, 1, 2], &y).unwrap().abs() < 1e-12);
        assert!(rate_function(&g, &[0, 1, 2], &[y[0], 2.0 * y[1], y[2]]).unwrap() > 0.0);
    }

    #[test]
    fn domain_is_the_m_matrix_cone() {
        let g = chain();
        let vf = linalg::principal(&green(&g).unwrap(), &[0]);
        assert!(log_laplace(&vf, &[1.0 / vf[(0, 0)] - 1e-9]).is_finite());
        assert_eq!(log_laplace(&vf, &[1.0 / vf[(0, 0)] + 1e-9]), f64::INFINITY);
    }
}
