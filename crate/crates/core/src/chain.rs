//! Sub-Markovian generators on a finite state space and the linear algebra
//! built on them: potentials, the semigroup, hitting distributions, return
//! matrices, and the trace / restriction / time-change / Doob transforms.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Row-sum and sign tolerance used when validating rates.
pub const RATE_TOL: f64 = 1e-12;
/// Tolerance for identities evaluated in one pass.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance for agreement between two independent computations.
pub const CROSS_TOL: f64 = 1e-9;
/// A chain is transient when the embedded chain has spectral radius below
/// `1 - TRANSIENCE_GAP`.
pub const TRANSIENCE_GAP: f64 = 1e-10;

/// A validated sub-Markovian generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    labels: Vec<String>,
    l: Mat,
    killing: Vec<f64>,
    q: Mat,
    rho_q: f64,
    transient: bool,
}

impl Generator {
    /// Validates a raw rate matrix given as rows.
    pub fn new(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NonSquare { rows: n, row: i, cols: r.len() });
            }
        }
        let l = Mat::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_matrix(labels, l)
    }

    /// Validates a matrix with labels `0, 1, ...`.
    pub fn unlabeled(l: Mat) -> Result<Self> {
        let labels = (0..l.nrows()).map(|i| i.to_string()).collect();
        Self::from_matrix(labels, l)
    }

    pub fn from_matrix(labels: Vec<String>, l: Mat) -> Result<Self> {
        if l.nrows() != l.ncols() {
            return Err(Error::NonSquare { rows: l.nrows(), row: 0, cols: l.ncols() });
        }
        let n = l.nrows();
        if labels.len() != n {
            return Err(Error::LabelMismatch { labels: labels.len(), dim: n });
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::DuplicateLabel(a.clone()));
            }
        }
        let mut killing = vec![0.0; n];
        for x in 0..n {
            let row = l.row(x);
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(labels[x].clone()));
            }
            if l[(x, x)] > 0.0 {
                return Err(Error::PositiveDiagonal(labels[x].clone()));
            }
            for y in 0..n {
                if y != x && l[(x, y)] < 0.0 {
                    return Err(Error::NegativeOffDiagonal {
                        from: labels[x].clone(),
                        to: labels[y].clone(),
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            let scale = row.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            if sum > RATE_TOL * scale {
                return Err(Error::RowSumPositive { state: labels[x].clone(), sum });
            }
            killing[x] = (-sum).max(0.0);
        }
        let q = embedded(&l);
        let rho_q = linalg::spectral_radius(&q);
        Ok(Generator { labels, l, killing, q, rho_q, transient: rho_q < 1.0 - TRANSIENCE_GAP })
    }

    /// Builds a generator from a matrix produced by our own algebra, zeroing
    /// round-off sign violations below `RATE_TOL` relative to the row scale.
    pub(crate) fn assemble(labels: Vec<String>, mut l: Mat) -> Result<Self> {
        let n = l.nrows();
        for x in 0..n {
            let scale = l.row(x).iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            for y in 0..n {
                if y != x && l[(x, y)] < 0.0 && l[(x, y)] > -RATE_TOL * scale {
                    l[(x, y)] = 0.0;
                }
            }
            let sum: f64 = l.row(x).iter().sum();
            if sum > 0.0 && sum <= 1e-9 * scale {
                l[(x, x)] -= sum;
            }
        }
        Self::from_matrix(labels, l)
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }
    pub fn l(&self) -> &Mat {
        &self.l
    }
    /// Rate `L^x_y`.
    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.l[(x, y)]
    }
    /// Total jump rate `-L^x_x`.
    pub fn out_rate(&self, x: usize) -> f64 {
        -self.l[(x, x)]
    }
    pub fn killing(&self) -> &[f64] {
        &self.killing
    }
    pub fn q(&self) -> &Mat {
        &self.q
    }
    /// Probability that the embedded chain jumps from `x` to the cemetery.
    pub fn q_kill(&self, x: usize) -> f64 {
        if self.l[(x, x)] < 0.0 {
            (self.killing[x] / -self.l[(x, x)]).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
    pub fn rho_q(&self) -> f64 {
        self.rho_q
    }
    pub fn is_transient(&self) -> bool {
        self.transient
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| Error::UnknownState(label.to_string()))
    }

    /// Resolves labels into indices, keeping order and repeats.
    pub fn indices(&self, labels: &[impl AsRef<str>]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect()
    }

    /// Resolves labels into a sorted, deduplicated index set.
    pub fn subset(&self, labels: &[impl AsRef<str>]) -> Result<Vec<usize>> {
        let mut idx = labels.iter().map(|l| self.index_of(l.as_ref())).collect::<Result<Vec<_>>>()?;
        idx.sort_unstable();
        idx.dedup();
        Ok(idx)
    }

    pub(crate) fn check_subset(&self, a: &[usize]) -> Result<Vec<usize>> {
        if a.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut a = a.to_vec();
        a.sort_unstable();
        a.dedup();
        if let Some(&bad) = a.iter().find(|&&i| i >= self.n()) {
            return Err(Error::BadIndex(bad));
        }
        Ok(a)
    }

    pub(crate) fn check_weights(&self, chi: &[f64]) -> Result<()> {
        if chi.len() != self.n() {
            return Err(Error::LengthMismatch { got: chi.len(), want: self.n() });
        }
        if let Some(i) = chi.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::NegativeWeight(self.labels[i].clone()));
        }
        Ok(())
    }

    pub(crate) fn require_transient(&self) -> Result<()> {
        if self.transient {
            Ok(())
        } else {
            Err(Error::RequiresTransient)
        }
    }

    /// `L - M_chi` as a generator.
    pub fn killed(&self, chi: &[f64]) -> Result<Generator> {
        self.check_weights(chi)?;
        let mut l = self.l.clone();
        for (x, c) in chi.iter().enumerate() {
            l[(x, x)] -= c;
        }
        Generator::from_matrix(self.labels.clone(), l)
    }

    pub fn sub_labels(&self, a: &[usize]) -> Vec<String> {
        a.iter().map(|&i| self.labels[i].clone()).collect()
    }
}

fn embedded(l: &Mat) -> Mat {
    let n = l.nrows();
    Mat::from_fn(n, n, |x, y| {
        let d = -l[(x, x)];
        if d > 0.0 {
            if x == y {
                0.0
            } else {
                l[(x, y)] / d
            }
        } else if x == y {
            1.0
        } else {
            0.0
        }
    })
}

pub fn complement(n: usize, a: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !a.contains(i)).collect()
}

/// The (Feynman–Kac) potential `(M_chi - L)^{-1}`.
#[derive(Debug, Clone)]
pub struct Potential {
    pub v: Mat,
    pub chi: Vec<f64>,
}

pub fn potential(g: &Generator, chi: &[f64]) -> Result<Potential> {
    g.check_weights(chi)?;
    let mut a = -g.l().clone();
    for (x, c) in chi.iter().enumerate() {
        a[(x, x)] += c;
    }
    let v = linalg::inverse(&a)?;
    Ok(Potential { v, chi: chi.to_vec() })
}

/// Green function `V = (-L)^{-1}`; requires transience.
pub fn green(g: &Generator) -> Result<Mat> {
    g.require_transient()?;
    Ok(potential(g, &vec![0.0; g.n()])?.v)
}

/// `exp(tL)` by scaling and squaring.
pub fn semigroup(g: &Generator, t: f64) -> Result<Mat> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(Mat::identity(g.n(), g.n()));
    }
    Ok((g.l() * t).exp())
}

/// Hitting distribution of a subset and the first-return matrix on it.
#[derive(Debug, Clone)]
pub struct HittingData {
    pub subset: Vec<usize>,
    /// `H[x][j]`: probability the embedded chain started at `x` first enters
    /// the subset at `subset[j]` (time zero included).
    pub h: Mat,
    /// `R[i][j]`: probability that after leaving `subset[i]` the chain first
    /// comes back to the subset at `subset[j]`.
    pub r: Mat,
    /// Same as `r` for the generator `L - M_chi`, when requested.
    pub r_chi: Option<Mat>,
    /// Mass escaping to the cemetery: never hitting the subset (outside it) or
    /// never returning (inside it).
    pub defect: Vec<f64>,
}

pub fn hitting_return(g: &Generator, a: &[usize]) -> Result<HittingData> {
    let a = g.check_subset(a)?;
    let n = g.n();
    let ac = complement(n, &a);
    let q = g.q();
    let mut h = Mat::zeros(n, a.len());
    for (j, &x) in a.iter().enumerate() {
        h[(x, j)] = 1.0;
    }
    if !ac.is_empty() {
        let qcc = linalg::principal(q, &ac);
        let qca = linalg::submatrix(q, &ac, &a);
        let m = Mat::identity(ac.len(), ac.len()) - qcc;
        let hc = linalg::solve(&m, &qca)?;
        for (i, &z) in ac.iter().enumerate() {
            for j in 0..a.len() {
                h[(z, j)] = hc[(i, j)].max(0.0);
            }
        }
    }
    let mut r = Mat::zeros(a.len(), a.len());
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in a.iter().enumerate() {
            let mut s = q[(x, y)];
            for &z in &ac {
                s += q[(x, z)] * h[(z, j)];
            }
            r[(i, j)] = s;
        }
    }
    let mut defect = vec![0.0; n];
    for x in 0..n {
        defect[x] = match a.iter().position(|&y| y == x) {
            Some(i) => (1.0 - r.row(i).sum()).max(0.0),
            None => (1.0 - h.row(x).sum()).max(0.0),
        };
    }
    Ok(HittingData { subset: a, h, r, r_chi: None, defect })
}

/// [`hitting_return`] plus the return matrix for `L - M_chi`.
pub fn hitting_return_chi(g: &Generator, a: &[usize], chi: &[f64]) -> Result<HittingData> {
    let mut hd = hitting_return(g, a)?;
    let gk = g.killed(chi)?;
    hd.r_chi = Some(hitting_return(&gk, a)?.r);
    Ok(hd)
}

/// Trace of the chain on `a`: `L_A = -(V_A)^{-1}`, cross-checked against the
/// return-matrix expression.
pub fn trace_generator(g: &Generator, a: &[usize]) -> Result<Generator> {
    let a = g.check_subset(a)?;
    let v = green(g)?;
    let va = linalg::principal(&v, &a);
    let la = -linalg::inverse(&va)?;
    let hd = hitting_return(g, &a)?;
    let mut alt = Mat::zeros(a.len(), a.len());
    for (i, &x) in a.iter().enumerate() {
        let lxx = g.rate(x, x);
        for j in 0..a.len() {
            alt[(i, j)] = if i == j { lxx * (1.0 - hd.r[(i, i)]) } else { -lxx * hd.r[(i, j)] };
        }
    }
    let scale = linalg::max_abs(&la).max(1.0);
    let diff = linalg::max_abs_diff(&la, &alt) / scale;
    if diff > CROSS_TOL {
        return Err(Error::DisagreementBeyondTolerance { what: "trace generator".into(), diff, tol: CROSS_TOL });
    }
    Generator::assemble(g.sub_labels(&a), la)
}

/// Chain killed on leaving `a`: `L|_{A x A}`.
pub fn restrict_generator(g: &Generator, a: &[usize]) -> Result<Generator> {
    let a = g.check_subset(a)?;
    Generator::from_matrix(g.sub_labels(&a), linalg::principal(g.l(), &a))
}

/// Time change by a positive rate factor: `L^x_y / lambda_x`.
pub fn time_change_generator(g: &Generator, lambda: &[f64]) -> Result<Generator> {
    if lambda.len() != g.n() {
        return Err(Error::LengthMismatch { got: lambda.len(), want: g.n() });
    }
    if let Some(i) = lambda.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::NonPositiveLambda(g.label(i).to_string()));
    }
    let l = Mat::from_fn(g.n(), g.n(), |x, y| g.rate(x, y) / lambda[x]);
    Generator::from_matrix(g.labels().to_vec(), l)
}

/// `-L h`, non-negative exactly when `h` is excessive.
pub fn excessive_defect(g: &Generator, h: &[f64]) -> Vec<f64> {
    let hv = linalg::Vector::from_column_slice(h);
    (-(g.l() * hv)).iter().copied().collect()
}

/// Doob transform `L^x_y h(y) / h(x)`. Fails with `RowSumPositive` when `h` is
/// not excessive, since the result is then not sub-Markovian.
pub fn doob_transform(g: &Generator, h: &[f64]) -> Result<Generator> {
    if h.len() != g.n() {
        return Err(Error::LengthMismatch { got: h.len(), want: g.n() });
    }
    if let Some(i) = h.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::NonPositiveH(g.label(i).to_string()));
    }
    let l = Mat::from_fn(g.n(), g.n(), |x, y| g.rate(x, y) * h[y] / h[x]);
    Generator::from_matrix(g.labels().to_vec(), l)
}

/// Laplace transform of the normalized excursion measure outside `f` from
/// `x` to `y`: `(R^F_chi)^x_y / (R^F)^x_y`.
pub fn excursion_laplace(g: &Generator, f: &[usize], chi: &[f64], x: usize, y: usize) -> Result<f64> {
    let f = g.check_subset(f)?;
    g.check_weights(chi)?;
    if let Some(&z) = f.iter().find(|&&z| chi[z] > 0.0) {
        return Err(Error::ChiOnF(g.label(z).to_string()));
    }
    let i = f.iter().position(|&z| z == x).ok_or(Error::BadIndex(x))?;
    let j = f.iter().position(|&z| z == y).ok_or(Error::BadIndex(y))?;
    let hd = hitting_return_chi(g, &f, chi)?;
    let den = hd.r[(i, j)];
    if den <= 0.0 {
        return Err(Error::ZeroDenominator { from: g.label(x).into(), to: g.label(y).into() });
    }
    Ok(hd.r_chi.expect("requested")[(i, j)] / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Generator {
        Generator::new(vec!["a".into(), "b".into()], &[vec![-2.0, 1.0], vec![1.0, -2.0]]).unwrap()
    }

    #[test]
    fn validates_two_state() {
        let g = two();
        assert_eq!(g.killing(), &[1.0, 1.0]);
        assert_eq!(g.q()[(0, 1)], 0.5);
        assert_eq!(g.q()[(0, 0)], 0.0);
        assert!(g.is_transient());
        assert!((g.rho_q() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn conservative_chain_is_recurrent() {
        let g = Generator::unlabeled(Mat::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0])).unwrap();
        assert_eq!(g.killing(), &[0.0, 0.0]);
        assert!(!g.is_transient());
        assert!(matches!(green(&g), Err(Error::RequiresTransient)));
    }

    #[test]
    fn validation_errors_name_the_state() {
        let e = Generator::unlabeled(Mat::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -1.0])).unwrap_err();
        assert!(matches!(e, Error::RowSumPositive { ref state, .. } if state == "0"));
        let e = Generator::unlabeled(Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap_err();
        assert_eq!(e, Error::PositiveDiagonal("0".into()));
        let e = Generator::unlabeled(Mat::from_row_slice(2, 2, &[-1.0, 0.0, -0.5, -1.0])).unwrap_err();
        assert!(matches!(e, Error::NegativeOffDiagonal { ref from, ref to } if from == "1" && to == "0"));
        let e = Generator::new(vec!["a".into()], &[vec![-1.0, 0.0]]).unwrap_err();
        assert!(matches!(e, Error::NonSquare { .. }));
    }

    #[test]
    fn zero_rate_state_has_identity_row() {
        let g = Generator::unlabeled(Mat::from_row_slice(2, 2, &[0.0, 0.0, 1.0, -2.0])).unwrap();
        assert_eq!(g.q()[(0, 0)], 1.0);
        assert!(!g.is_transient());
    }

    #[test]
    fn potential_values() {
        let v = green(&two()).unwrap();
        assert!((v[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((v[(0, 1)] - 1.0 / 3.0).abs() < 1e-15);
        let one = Generator::unlabeled(Mat::from_row_slice(1, 1, &[-1.0])).unwrap();
        assert!((green(&one).unwrap()[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn semigroup_basics() {
        let g = two();
        assert_eq!(semigroup(&g, 0.0).unwrap(), Mat::identity(2, 2));
        assert!(matches!(semigroup(&g, -1.0), Err(Error::NegativeTime(_))));
        let p = semigroup(&g, 0.7).unwrap() * semigroup(&g, 0.4).unwrap();
        assert!(linalg::max_abs_diff(&p, &semigroup(&g, 1.1).unwrap()) < 1e-12);
    }

    #[test]
    fn return_matrix_of_single_state() {
        let hd = hitting_return(&two(), &[0]).unwrap();
        assert!((hd.r[(0, 0)] - 0.25).abs() < 1e-15);
        assert_eq!(hd.h[(0, 0)], 1.0);
        assert!((hd.h[(1, 0)] - 0.5).abs() < 1e-15);
        let full = hitting_return(&two(), &[0, 1]).unwrap();
        assert_eq!(full.r, *two().q());
    }

    #[test]
    fn trace_and_restriction_examples() {
        let g = two();
        let ta = trace_generator(&g, &[0]).unwrap();
        assert!((ta.rate(0, 0) + 1.5).abs() < 1e-14);
        let ts = trace_generator(&g, &[0, 1]).unwrap();
        assert!(linalg::max_abs_diff(ts.l(), g.l()) < 1e-12);
        let ra = restrict_generator(&g, &[0]).unwrap();
        assert_eq!(ra.rate(0, 0), -2.0);
        assert!((green(&ra).unwrap()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!(matches!(restrict_generator(&g, &[]), Err(Error::EmptySubset)));
    }

    #[test]
    fn doob_example() {
        let g = two();
        let d = doob_transform(&g, &[1.0, 2.0]).unwrap();
        assert_eq!(d.rate(0, 1), 2.0);
        assert_eq!(d.rate(1, 0), 0.5);
        assert_eq!(d.rate(0, 0), -2.0);
        assert_eq!(excessive_defect(&g, &[1.0, 2.0]), vec![0.0, 3.0]);
        assert!(matches!(doob_transform(&g, &[1.0, 0.0]), Err(Error::NonPositiveH(_))));
    }

    #[test]
    fn time_change_rejects_zero() {
        assert!(matches!(time_change_generator(&two(), &[1.0, 0.0]), Err(Error::NonPositiveLambda(_))));
        let h = time_change_generator(&two(), &[2.0, 2.0]).unwrap();
        assert_eq!(h.q(), two().q());
    }

    #[test]
    fn excursion_laplace_limits() {
        let g = Generator::unlabeled(Mat::from_row_slice(
            3,
            3,
            &[-3.0, 1.0, 1.0, 1.0, -2.5, 1.0, 0.5, 1.0, -2.0],
        ))
        .unwrap();
        assert_eq!(excursion_laplace(&g, &[0, 1], &[0.0; 3], 0, 1).unwrap(), 1.0);
        let big = excursion_laplace(&g, &[0, 1], &[0.0, 0.0, 1e9], 0, 1).unwrap();
        let hd = hitting_return(&g, &[0, 1]).unwrap();
        assert!((big - g.q()[(0, 1)] / hd.r[(0, 1)]).abs() < 1e-7);
        assert!(matches!(excursion_laplace(&g, &[0, 1], &[1.0, 0.0, 0.0], 0, 1), Err(Error::ChiOnF(_))));
    }
}
