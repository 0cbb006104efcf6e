//! Statistical comparisons used by the verification harness.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Standard error of a Bernoulli frequency estimate.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

pub fn z_score(estimate: f64, exact: f64, se: f64) -> f64 {
    if se > 0.0 {
        (estimate - exact) / se
    } else if estimate == exact {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Survival function of the Kolmogorov distribution,
/// `2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 lambda^2}`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_pvalue(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> TestResult {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
    }
    TestResult { statistic: d, p_value: ks_pvalue(d, n) }
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    TestResult { statistic: d, p_value: ks_pvalue(d, n * m / (n + m)) }
}

fn chi2_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    dist.sf(stat)
}

/// Pearson goodness-of-fit of counts against probabilities. Cells with zero
/// expected probability must have zero counts (else the p-value is 0).
pub fn chi2_gof(counts: &[u64], probs: &[f64]) -> TestResult {
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * n as f64;
        if e > 0.0 {
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        } else if c > 0 {
            return TestResult { statistic: f64::INFINITY, p_value: 0.0 };
        }
    }
    let df = cells.saturating_sub(1);
    TestResult { statistic: stat, p_value: chi2_sf(stat, df) }
}

/// Pearson test of homogeneity for a contingency table (rows = samples).
/// Columns that are empty in every row are dropped.
pub fn chi2_homogeneity(table: &[Vec<u64>]) -> TestResult {
    let cols = table.first().map_or(0, Vec::len);
    let col_tot: Vec<u64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let row_tot: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let total: u64 = row_tot.iter().sum();
    let live: Vec<usize> = (0..cols).filter(|&j| col_tot[j] > 0).collect();
    let rows = row_tot.iter().filter(|&&t| t > 0).count();
    let mut stat = 0.0;
    for (r, row) in table.iter().enumerate() {
        if row_tot[r] == 0 {
            continue;
        }
        for &j in &live {
            let e = row_tot[r] as f64 * col_tot[j] as f64 / total as f64;
            stat += (row[j] as f64 - e).powi(2) / e;
        }
    }
    let df = rows.saturating_sub(1) * live.len().saturating_sub(1);
    TestResult { statistic: stat, p_value: chi2_sf(stat, df) }
}

/// Index-of-dispersion test of a Poisson sample: `sum (c - mean)^2 / mean`
/// against chi-square with `n - 1` degrees of freedom, two-sided.
pub fn dispersion_test(counts: &[u64]) -> TestResult {
    let n = counts.len();
    let mean = counts.iter().sum::<u64>() as f64 / n as f64;
    if n < 2 || mean == 0.0 {
        return TestResult { statistic: f64::NAN, p_value: 0.0 };
    }
    let stat = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / mean;
    let dist = ChiSquared::new((n - 1) as f64).expect("positive degrees of freedom");
    let lower = dist.cdf(stat);
    TestResult { statistic: stat, p_value: (2.0 * lower.min(1.0 - lower)).min(1.0) }
}

pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Counts normalized to frequencies.
pub fn frequencies(counts: &[u64]) -> Vec<f64> {
    let n: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / n as f64).collect()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pnm) = if n == 1 { (z, 1.0) } else { (p1, p0) };
            dp = n as f64 * (z * pn - pnm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
