//! Loops: pointed representatives, canonical rotation, discrete cycles, and
//! pathwise functionals (multi-occupation fields, jump counts, traces).

use std::cmp::Ordering;

use serde_json::Value;

use crate::error::{Error, Result};

/// A pointed loop: states `xi_1..xi_p` with holding times `tau_1..tau_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointedLoop {
    pub states: Vec<usize>,
    pub holds: Vec<f64>,
}

impl PointedLoop {
    pub fn new(states: Vec<usize>, holds: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::DegenerateLoop("no states".into()));
        }
        if states.len() != holds.len() {
            return Err(Error::DegenerateLoop("states and holds differ in length".into()));
        }
        if holds.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::DegenerateLoop("holding times must be positive".into()));
        }
        let p = states.len();
        if p >= 2 && (0..p).any(|i| states[i] == states[(i + 1) % p]) {
            return Err(Error::DegenerateLoop("adjacent equal states".into()));
        }
        Ok(PointedLoop { states, holds })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn rotated(&self, k: usize) -> PointedLoop {
        let p = self.len();
        PointedLoop {
            states: (0..p).map(|i| self.states[(i + k) % p]).collect(),
            holds: (0..p).map(|i| self.holds[(i + k) % p]).collect(),
        }
    }

    fn cmp_rotations(&self, a: usize, b: usize) -> Ordering {
        let p = self.len();
        for i in 0..p {
            let o = self.states[(a + i) % p].cmp(&self.states[(b + i) % p]);
            if o != Ordering::Equal {
                return o;
            }
        }
        for i in 0..p {
            let o = self.holds[(a + i) % p].total_cmp(&self.holds[(b + i) % p]);
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    }
}

/// A loop in canonical form: the rotation that is lexicographically smallest
/// on state indices, ties broken on holding times.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop(PointedLoop);

pub fn canonicalize(pl: &PointedLoop) -> Result<Loop> {
    let pl = PointedLoop::new(pl.states.clone(), pl.holds.clone())?;
    Ok(Loop::from_valid(pl))
}

impl Loop {
    /// Canonicalizes a pointed loop already known to be valid.
    pub(crate) fn from_valid(pl: PointedLoop) -> Loop {
        let best = (1..pl.len()).fold(0, |best, k| if pl.cmp_rotations(k, best) == Ordering::Less { k } else { best });
        Loop(if best == 0 { pl } else { pl.rotated(best) })
    }

    pub fn trivial(state: usize, hold: f64) -> Result<Loop> {
        Ok(Loop(PointedLoop::new(vec![state], vec![hold])?))
    }

    pub fn pointed(&self) -> &PointedLoop {
        &self.0
    }
    pub fn states(&self) -> &[usize] {
        &self.0.states
    }
    pub fn holds(&self) -> &[f64] {
        &self.0.holds
    }
    pub fn is_trivial(&self) -> bool {
        self.0.len() == 1
    }
    /// Total duration `|l|`.
    pub fn duration(&self) -> f64 {
        self.0.holds.iter().sum()
    }
    /// Occupation time `l^x` for every state in `0..n`.
    pub fn occupation(&self, n: usize) -> Vec<f64> {
        let mut occ = vec![0.0; n];
        for (&x, &t) in self.0.states.iter().zip(&self.0.holds) {
            occ[x] += t;
        }
        occ
    }
    pub fn visits(&self, x: usize) -> bool {
        self.0.states.contains(&x)
    }

    /// Replaces every state index `x` by `map[x]`.
    pub fn relabel(&self, map: &[usize]) -> Loop {
        Loop::from_valid(PointedLoop {
            states: self.0.states.iter().map(|&x| map[x]).collect(),
            holds: self.0.holds.clone(),
        })
    }

    pub fn to_json(&self, labels: &[String]) -> Value {
        Value::Array(
            self.states()
                .iter()
                .zip(self.holds())
                .map(|(&x, &t)| serde_json::json!([labels[x], t]))
                .collect(),
        )
    }

    pub fn from_json(v: &Value, labels: &[String]) -> Result<Loop> {
        let arr = v.as_array().ok_or_else(|| Error::ParseError("loop must be an array".into()))?;
        let mut states = Vec::with_capacity(arr.len());
        let mut holds = Vec::with_capacity(arr.len());
        for pair in arr {
            let label = pair.get(0).and_then(Value::as_str);
            let hold = pair.get(1).and_then(Value::as_f64);
            let (Some(label), Some(hold)) = (label, hold) else {
                return Err(Error::ParseError("loop entries are [label, hold] pairs".into()));
            };
            let x = labels.iter().position(|l| l == label).ok_or_else(|| Error::UnknownState(label.into()))?;
            states.push(x);
            holds.push(hold);
        }
        canonicalize(&PointedLoop::new(states, holds)?)
    }
}

/// A discrete loop: a state cycle up to rotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteLoop {
    /// Canonical (lexicographically smallest) rotation.
    pub cycle: Vec<usize>,
    pub multiplicity: usize,
    pub primitive: Vec<usize>,
}

impl DiscreteLoop {
    pub fn new(cycle: &[usize]) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::DegenerateLoop("empty cycle".into()));
        }
        let k = cycle.len();
        let best = (0..k)
            .min_by(|&a, &b| (0..k).map(|i| cycle[(a + i) % k]).cmp((0..k).map(|i| cycle[(b + i) % k])))
            .unwrap_or(0);
        let canon: Vec<usize> = (0..k).map(|i| cycle[(best + i) % k]).collect();
        let (multiplicity, primitive) = multiplicity_primitive(&canon);
        Ok(DiscreteLoop { cycle: canon, multiplicity, primitive })
    }

    pub fn of(l: &Loop) -> DiscreteLoop {
        DiscreteLoop::new(l.states()).expect("loops are nonempty")
    }
}

/// Largest `n` with `cycle = primitive^n`, and that primitive.
pub fn multiplicity_primitive(cycle: &[usize]) -> (usize, Vec<usize>) {
    let k = cycle.len();
    for d in 1..=k {
        if k % d == 0 && (0..k).all(|i| cycle[i] == cycle[(i + d) % k]) {
            return (k / d, cycle[..d].to_vec());
        }
    }
    (1, cycle.to_vec())
}

/// The multi-occupation field `l^{x_1..x_n}`, evaluated exactly.
///
/// For each cyclic shift of the tuple, a DP over the loop's constant segments
/// accumulates the volume of `{s_1 < .. < s_n}` with `l(s_i)` matching: a run
/// of `m` consecutive points inside one segment of length `tau` contributes
/// `tau^m / m!`.
pub fn multi_occupation(l: &Loop, points: &[usize]) -> Result<f64> {
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyTuple);
    }
    let mut total = 0.0;
    let mut shifted = vec![0usize; n];
    let mut dp = vec![0.0; n + 1];
    for j in 0..n {
        for i in 0..n {
            shifted[i] = points[(i + j) % n];
        }
        dp.iter_mut().for_each(|v| *v = 0.0);
        dp[0] = 1.0;
        for (&x, &tau) in l.states().iter().zip(l.holds()) {
            // Descending so that dp[i] still holds the previous-segment value.
            for i in (0..n).rev() {
                if dp[i] == 0.0 {
                    continue;
                }
                let mut w = 1.0;
                let mut m = 0;
                while i + m < n && shifted[i + m] == x {
                    m += 1;
                    w *= tau / m as f64;
                    dp[i + m] += dp[i] * w;
                }
            }
        }
        total += dp[n];
    }
    Ok(total)
}

/// Jump statistics of a loop.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpCounts {
    n: usize,
    /// Row-major `N^x_y`.
    pub nxy: Vec<u32>,
    /// `N^x`; equal to 1 at the base of a trivial loop.
    pub nx: Vec<u32>,
    /// Number of jumps `p(l)` (1 for a trivial loop, matching `sum N^x`).
    pub p: usize,
    /// Number of distinct states visited.
    pub distinct: usize,
}

impl JumpCounts {
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.nxy[x * self.n + y]
    }
}

pub fn jump_counts(l: &Loop, n: usize) -> JumpCounts {
    let mut nxy = vec![0u32; n * n];
    let mut nx = vec![0u32; n];
    let st = l.states();
    let p = st.len();
    if p == 1 {
        nx[st[0]] = 1;
    } else {
        for i in 0..p {
            let (x, y) = (st[i], st[(i + 1) % p]);
            nxy[x * n + y] += 1;
            nx[x] += 1;
        }
    }
    let distinct = nx.iter().filter(|&&c| c > 0).count();
    JumpCounts { n, nxy, nx, p, distinct }
}

/// Trace of a loop on `f`: sojourns outside `f` are removed and circularly
/// adjacent sojourns in the same state are merged.
pub fn loop_trace(l: &Loop, f: &[usize]) -> Option<Loop> {
    let mut states: Vec<usize> = Vec::new();
    let mut holds: Vec<f64> = Vec::new();
    for (&x, &t) in l.states().iter().zip(l.holds()) {
        if !f.contains(&x) {
            continue;
        }
        if states.last() == Some(&x) {
            *holds.last_mut().unwrap() += t;
        } else {
            states.push(x);
            holds.push(t);
        }
    }
    if states.is_empty() {
        return None;
    }
    if states.len() > 1 && states[0] == *states.last().unwrap() {
        states.pop();
        let t = holds.pop().unwrap();
        holds[0] += t;
    }
    Some(Loop::from_valid(PointedLoop { states, holds }))
}

/// Permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(n, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    rec(n, &mut cur, &mut used, &mut out);
    out
}

/// Cyclic shuffles of `xs` and `ys` with `xs[0]` in first position: `xs[0]`
/// followed by an interleaving of `xs[1..]` with some rotation of `ys`.
///
/// With these, `l^{xs} * l^{ys} = sum_z l^z` holds pathwise.
pub fn cyclic_shuffles(xs: &[usize], ys: &[usize]) -> Vec<Vec<usize>> {
    assert!(!xs.is_empty() && !ys.is_empty());
    let m = ys.len();
    let rest = &xs[1..];
    let mut out = Vec::new();
    for k in 0..m {
        let rot: Vec<usize> = (0..m).map(|i| ys[(i + k) % m]).collect();
        for word in interleavings(rest, &rot) {
            let mut z = Vec::with_capacity(xs.len() + m);
            z.push(xs[0]);
            z.extend(word);
            out.push(z);
        }
    }
    out
}

fn interleavings(a: &[usize], b: &[usize]) -> Vec<Vec<usize>> {
    if a.is_empty() {
        return vec![b.to_vec()];
    }
    if b.is_empty() {
        return vec![a.to_vec()];
    }
    let mut out = Vec::new();
    for mut w in interleavings(&a[1..], b) {
        w.insert(0, a[0]);
        out.push(w);
    }
    for mut w in interleavings(a, &b[1..]) {
        w.insert(0, b[0]);
        out.push(w);
    }
    out
}
