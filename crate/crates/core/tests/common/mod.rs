#![allow(dead_code)]

use loopsoup::chain::Generator;
use proptest::prelude::*;

/// Rows of a sub-Markovian generator with `n` states: off-diagonal rates in
/// `[0, 2)` and killing in `[0.1, 1)` at every state.
pub fn rows(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (prop::collection::vec(0.0..2.0f64, n * n), prop::collection::vec(0.1..1.0f64, n)).prop_map(move |(r, k)| {
        (0..n)
            .map(|x| {
                let mut row: Vec<f64> = (0..n).map(|y| if x == y { 0.0 } else { r[x * n + y] }).collect();
                row[x] = -(row.iter().sum::<f64>() + k[x]);
                row
            })
            .collect()
    })
}

pub fn generator(n: usize) -> impl Strategy<Value = Generator> {
    rows(n).prop_map(|r| build(&r))
}

pub fn build(rows: &[Vec<f64>]) -> Generator {
    let labels = (0..rows.len()).map(|i| format!("s{i}")).collect();
    Generator::new(labels, rows).unwrap()
}

pub fn two_state() -> Generator {
    build(&[vec![-2.0, 1.0], vec![1.0, -2.0]])
}

/// Embedded transition matrix computed directly from the rates.
pub fn jump_matrix(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..rows.len())
        .map(|x| (0..rows.len()).map(|y| if x == y { 0.0 } else { rows[x][y] / -rows[x][x] }).collect())
        .collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(a: &[Vec<f64>]) -> f64 {
    let mut m = a.to_vec();
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
