//! Loop erasure, the law of the loop-erased walk, Wilson's algorithm and the
//! reconstruction of the `alpha = 1` soup from erased loops.

use rand_distr::{Beta, Distribution};

use crate::chain::{green, hitting_return, Generator};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::loops::{canonicalize, Loop, PointedLoop};
use crate::rng::{self, Rng};
use crate::soup::{LoopSoup, TrivialPolicy};
use crate::stats;

/// Relative size below which stick-breaking stops.
pub const PD_EPSILON: f64 = 1e-6;

/// Embedded-chain trajectory. `holds` is empty unless holding times were
/// sampled; otherwise it has one entry per state.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    pub states: Vec<usize>,
    pub holds: Vec<f64>,
    /// The path jumped to the cemetery after its last state; otherwise it
    /// stopped on entering the absorbing set.
    pub killed: bool,
}

impl DiscretePath {
    pub fn jumps(&self) -> usize {
        self.states.len() - 1 + self.killed as usize
    }
}

/// Segment of a path that starts and ends at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasedLoop {
    pub base: usize,
    pub states: Vec<usize>,
    pub holds: Vec<f64>,
}

impl BasedLoop {
    pub fn jumps(&self) -> usize {
        self.states.len() - 1
    }

    /// Time spent at the base point.
    pub fn local_time(&self) -> f64 {
        self.states.iter().zip(&self.holds).filter(|(s, _)| **s == self.base).map(|(_, t)| t).sum()
    }

    /// The unrooted loop; needs holding times.
    pub fn to_loop(&self) -> Result<Loop> {
        if self.holds.len() != self.states.len() {
            return Err(Error::BadParams("based loop has no holding times".into()));
        }
        let p = self.states.len();
        if p == 1 {
            return Loop::trivial(self.base, self.holds[0]);
        }
        let mut holds = self.holds[..p - 1].to_vec();
        holds[0] += self.holds[p - 1];
        canonicalize(&PointedLoop::new(self.states[..p - 1].to_vec(), holds)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErasureRecord {
    pub lerw: Vec<usize>,
    pub killed: bool,
    /// One loop per erased base point, in lerw order. When the path was
    /// absorbed, its endpoint carries no loop.
    pub loops: Vec<BasedLoop>,
}

impl ErasureRecord {
    pub fn lerw_jumps(&self) -> usize {
        self.lerw.len() - 1 + self.killed as usize
    }

    pub fn loop_jumps(&self) -> usize {
        self.loops.iter().map(BasedLoop::jumps).sum()
    }
}

/// Cumulative jump tables of the embedded chain; the last column is the
/// cemetery.
struct Walker {
    n: usize,
    cdf: Vec<Vec<f64>>,
    rates: Vec<f64>,
}

impl Walker {
    fn new(g: &Generator) -> Self {
        let n = g.n();
        let q = g.q();
        let cdf = (0..n)
            .map(|x| {
                let mut acc = 0.0;
                let mut row: Vec<f64> = (0..n)
                    .map(|y| {
                        acc += if y == x { 0.0 } else { q[(x, y)] };
                        acc
                    })
                    .collect();
                row.push(acc + g.q_kill(x));
                row
            })
            .collect();
        Walker { n, cdf, rates: (0..n).map(|x| g.out_rate(x)).collect() }
    }

    fn step(&self, x: usize, rng: &mut Rng) -> Option<usize> {
        let j = rng::from_cdf(rng, &self.cdf[x]);
        (j < self.n).then_some(j)
    }

    fn run(&self, start: usize, absorb: &[bool], holds: bool, rng: &mut Rng) -> DiscretePath {
        let mut states = vec![start];
        let mut ts = Vec::new();
        let mut x = start;
        loop {
            if absorb[x] {
                return DiscretePath { states, holds: ts, killed: false };
            }
            if holds {
                ts.push(rng::exponential(rng, self.rates[x]));
            }
            match self.step(x, rng) {
                Some(y) => {
                    states.push(y);
                    x = y;
                }
                None => return DiscretePath { states, holds: ts, killed: true },
            }
        }
    }
}

/// Fails unless every state reachable from `start` can reach the cemetery or
/// the absorbing set, which makes the path finite almost surely.
fn check_reachable(g: &Generator, start: usize, absorb: &[bool]) -> Result<()> {
    let n = g.n();
    let q = g.q();
    let mut reach = vec![false; n];
    let mut stack = vec![start];
    reach[start] = true;
    while let Some(x) = stack.pop() {
        if absorb[x] {
            continue;
        }
        for y in 0..n {
            if y != x && q[(x, y)] > 0.0 && !reach[y] {
                reach[y] = true;
                stack.push(y);
            }
        }
    }
    let mut good: Vec<bool> = (0..n).map(|x| absorb[x] || g.q_kill(x) > 0.0).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for x in 0..n {
            if !good[x] && (0..n).any(|y| y != x && q[(x, y)] > 0.0 && good[y]) {
                good[x] = true;
                changed = true;
            }
        }
    }
    match (0..n).find(|&x| reach[x] && !good[x]) {
        Some(x) => Err(Error::Unreachable(format!(
            "state `{}` is reachable from `{}` but cannot reach the cemetery or the absorbing set",
            g.label(x),
            g.label(start)
        ))),
        None => Ok(()),
    }
}

fn mask(n: usize, a: &[usize]) -> Result<Vec<bool>> {
    let mut m = vec![false; n];
    for &x in a {
        if x >= n {
            return Err(Error::BadIndex(x));
        }
        m[x] = true;
    }
    Ok(m)
}

/// Embedded-chain path from `start` until killing or first entry into
/// `absorb`; holding times are drawn when `holds` is set.
pub fn sample_killed_path(g: &Generator, start: usize, absorb: &[usize], holds: bool, rng: &mut Rng) -> Result<DiscretePath> {
    if start >= g.n() {
        return Err(Error::BadIndex(start));
    }
    let absorb = mask(g.n(), absorb)?;
    check_reachable(g, start, &absorb)?;
    Ok(Walker::new(g).run(start, &absorb, holds, rng))
}

/// Chronological loop erasure. The last state of an absorbed path is kept as
/// the endpoint of the erased path and carries no loop.
pub fn loop_erase(path: &DiscretePath) -> ErasureRecord {
    let xs = &path.states;
    let has_holds = path.holds.len() == xs.len() || (!path.killed && path.holds.len() + 1 == xs.len());
    let end = if path.killed { xs.len() } else { xs.len() - 1 };
    let mut lerw = Vec::new();
    let mut loops = Vec::new();
    let mut i = 0;
    while i < end {
        let y = xs[i];
        let last = (i..end).rev().find(|&m| xs[m] == y).expect("i itself");
        lerw.push(y);
        loops.push(BasedLoop {
            base: y,
            states: xs[i..=last].to_vec(),
            holds: if has_holds { path.holds[i..=last].to_vec() } else { Vec::new() },
        });
        i = last + 1;
    }
    if !path.killed {
        lerw.push(xs[xs.len() - 1]);
    }
    ErasureRecord { lerw, killed: path.killed, loops }
}

fn check_prefix(g: &Generator, nu: &[f64], prefix: &[usize]) -> Result<()> {
    if prefix.is_empty() {
        return Err(Error::EmptyTuple);
    }
    if nu.len() != g.n() {
        return Err(Error::LengthMismatch { got: nu.len(), want: g.n() });
    }
    if let Some(&bad) = prefix.iter().find(|&&x| x >= g.n()) {
        return Err(Error::BadIndex(bad));
    }
    for (i, x) in prefix.iter().enumerate() {
        if prefix[..i].contains(x) {
            return Err(Error::NotSelfAvoiding);
        }
    }
    Ok(())
}

fn prefix_weight(g: &Generator, nu: &[f64], prefix: &[usize]) -> f64 {
    nu[prefix[0]] * prefix.windows(2).map(|w| g.rate(w[0], w[1])).product::<f64>()
}

/// Both expressions of `P[the erased path starts with prefix]`:
/// `nu det(V_D) prod L P^{x_n}[never hit D]` and the bordered determinant
/// `nu prod L det([[V_D, 1], [V_{x_n, D}, 1]])`, where `D` is the prefix
/// without its last state.
pub fn lerw_prefix_forms(g: &Generator, nu: &[f64], prefix: &[usize]) -> Result<(f64, f64)> {
    check_prefix(g, nu, prefix)?;
    let v = green(g)?;
    let n = prefix.len() - 1;
    let d = &prefix[..n];
    let xn = prefix[n];
    let w = prefix_weight(g, nu, prefix);
    let escape = if d.is_empty() { 1.0 } else { hitting_return(g, d)?.defect[xn] };
    let first = w * linalg::det(&linalg::principal(&v, d)) * escape;
    let mut b = Mat::from_element(n + 1, n + 1, 1.0);
    for (i, &x) in prefix.iter().enumerate() {
        for (j, &y) in d.iter().enumerate() {
            b[(i, j)] = v[(x, y)];
        }
    }
    let second = w * linalg::det(&b);
    Ok((first, second))
}

/// Probability that the loop-erased path begins with `prefix`.
pub fn lerw_prefix_probability(g: &Generator, nu: &[f64], prefix: &[usize]) -> Result<f64> {
    let (a, b) = lerw_prefix_forms(g, nu, prefix)?;
    let diff = (a - b).abs();
    if diff > 1e-10 {
        return Err(Error::DisagreementBeyondTolerance { what: "lerw prefix".into(), diff, tol: 1e-10 });
    }
    Ok(a)
}

/// Probability that the loop-erased path is exactly `path` before killing.
pub fn lerw_terminal_probability(g: &Generator, nu: &[f64], path: &[usize]) -> Result<f64> {
    check_prefix(g, nu, path)?;
    let v = green(g)?;
    let last = path[path.len() - 1];
    Ok(prefix_weight(g, nu, path) * linalg::det(&linalg::principal(&v, path)) * g.killing()[last])
}

/// The generator `Q - Id` of the embedded chain run at unit rates.
pub fn embedded_generator(g: &Generator) -> Result<Generator> {
    let n = g.n();
    Generator::from_matrix(g.labels().to_vec(), g.q() - Mat::identity(n, n))
}

/// Spanning tree of `S + {Delta}` rooted at `Delta`; `None` is `Delta`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpanningTree {
    pub parent: Vec<Option<usize>>,
}

impl SpanningTree {
    /// Parent array with `-1` for `Delta`, e.g. `1,-1`.
    pub fn encode(&self) -> String {
        self.parent
            .iter()
            .map(|p| match p {
                Some(y) => y.to_string(),
                None => "-1".into(),
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.parent.len() != n {
            return Err(Error::NotASpanningTree(format!("{} parents for {n} states", self.parent.len())));
        }
        for x in 0..n {
            let mut cur = x;
            for _ in 0..=n {
                match self.parent[cur] {
                    None => break,
                    Some(y) if y >= n => return Err(Error::NotASpanningTree(format!("parent {y} out of range"))),
                    Some(y) => cur = y,
                }
            }
            if self.parent[cur].is_some() {
                return Err(Error::NotASpanningTree(format!("state {x} does not reach the root")));
            }
        }
        Ok(())
    }
}

/// `det(V) prod_x L^x_{parent(x)}`, killing rates on edges into the root.
pub fn tree_probability(g: &Generator, t: &SpanningTree) -> Result<f64> {
    t.validate(g.n())?;
    let v = green(g)?;
    let w: f64 = t
        .parent
        .iter()
        .enumerate()
        .map(|(x, p)| match p {
            Some(y) => g.rate(x, *y),
            None => g.killing()[x],
        })
        .product();
    Ok(linalg::det(&v) * w)
}

/// Every rooted spanning tree on `n` states.
pub fn enumerate_spanning_trees(n: usize) -> Result<Vec<SpanningTree>> {
    if n > 7 {
        return Err(Error::BadParams("tree enumeration limited to 7 states".into()));
    }
    let mut out = Vec::new();
    let mut code = vec![0usize; n];
    loop {
        let t = SpanningTree { parent: code.iter().map(|&c| if c == n { None } else { Some(c) }).collect() };
        if t.validate(n).is_ok() {
            out.push(t);
        }
        let mut i = 0;
        while i < n {
            code[i] += 1;
            if code[i] <= n {
                break;
            }
            code[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilsonSample {
    pub tree: SpanningTree,
    pub records: Vec<ErasureRecord>,
}

/// Wilson's algorithm: branches from unvisited states in `order`, each
/// loop-erased and grafted onto the tree. Holding times are drawn only when
/// `holds` is set, since the tree does not depend on them.
pub fn wilson_sample(g: &Generator, order: &[usize], holds: bool, rng: &mut Rng) -> Result<WilsonSample> {
    let n = g.n();
    if !g.is_transient() {
        return Err(Error::NotTransient(g.rho_q()));
    }
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(Error::BadParams("order must be a permutation of the states".into()));
    }
    let walker = Walker::new(g);
    let mut in_tree = vec![false; n];
    let mut parent = vec![None; n];
    let mut records = Vec::new();
    for &v in order {
        if in_tree[v] {
            continue;
        }
        let rec = loop_erase(&walker.run(v, &in_tree, holds, rng));
        for w in rec.lerw.windows(2) {
            parent[w[0]] = Some(w[1]);
        }
        if rec.killed {
            parent[*rec.lerw.last().expect("non-empty")] = None;
        }
        for &x in &rec.lerw {
            in_tree[x] = true;
        }
        records.push(rec);
    }
    Ok(WilsonSample { tree: SpanningTree { parent }, records })
}

struct Excursion {
    depart: f64,
    states: Vec<usize>,
    holds: Vec<f64>,
}

/// Splits `[0, total)` into Poisson-Dirichlet pieces by uniform
/// stick-breaking, stopping once the remaining stick is below
/// `PD_EPSILON * total` and keeping it as a last piece. The pieces are laid
/// out in the order of independent uniform marks.
fn pd_intervals(total: f64, rng: &mut Rng) -> Vec<(f64, f64)> {
    let beta = Beta::new(1.0, 1.0).expect("valid");
    let mut pieces = Vec::new();
    let mut rest = total;
    while rest > PD_EPSILON * total {
        let w = beta.sample(rng) * rest;
        if w > 0.0 {
            pieces.push(w);
            rest -= w;
        }
    }
    pieces.push(rest);
    let mut marked: Vec<(f64, f64)> = pieces.into_iter().map(|w| (rng::uniform(rng), w)).collect();
    marked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut start = 0.0;
    let mut out = Vec::with_capacity(marked.len());
    for (i, &(_, w)) in marked.iter().enumerate() {
        let end = if i + 1 == marked.len() { total } else { start + w };
        out.push((start, end));
        start = end;
    }
    out
}

/// Cuts one erased loop at its base point into independent loops.
fn cut_loop(b: &BasedLoop, rng: &mut Rng) -> Result<Vec<Loop>> {
    if b.holds.len() != b.states.len() {
        return Err(Error::BadParams("erased loops need holding times".into()));
    }
    let x = b.base;
    let mut excursions: Vec<Excursion> = Vec::new();
    let mut tau = 0.0;
    let mut i = 0;
    while i < b.states.len() {
        if b.states[i] == x {
            tau += b.holds[i];
            i += 1;
            continue;
        }
        let j = (i..b.states.len()).find(|&j| b.states[j] == x).unwrap_or(b.states.len());
        excursions.push(Excursion { depart: tau, states: b.states[i..j].to_vec(), holds: b.holds[i..j].to_vec() });
        i = j;
    }
    let mut out = Vec::new();
    let mut next = 0;
    for (g0, d0) in pd_intervals(tau, rng) {
        let first = next;
        while next < excursions.len() && excursions[next].depart < d0 {
            next += 1;
        }
        let attached = &excursions[first..next];
        if d0 <= g0 {
            continue;
        }
        if attached.is_empty() {
            out.push(Loop::trivial(x, d0 - g0)?);
            continue;
        }
        let mut states = Vec::new();
        let mut holds = Vec::new();
        for (k, e) in attached.iter().enumerate() {
            let h = if k == 0 {
                (e.depart - g0) + (d0 - attached[attached.len() - 1].depart)
            } else {
                e.depart - attached[k - 1].depart
            };
            states.push(x);
            holds.push(h);
            states.extend_from_slice(&e.states);
            holds.extend_from_slice(&e.holds);
        }
        out.push(canonicalize(&PointedLoop::new(states, holds)?)?);
    }
    Ok(out)
}

/// Rebuilds an `alpha = 1` ensemble from the erased loops of a Wilson sweep
/// by cutting every loop at its base point. Trivial pieces are kept as
/// explicit trivial loops.
pub fn pd_cut_reconstruct(records: &[ErasureRecord], n: usize, rng: &mut Rng) -> Result<LoopSoup> {
    let mut soup = LoopSoup::empty(n, 1.0, TrivialPolicy::Explicit { cutoff: 0.0 });
    for rec in records {
        for b in &rec.loops {
            for l in cut_loop(b, rng)? {
                if l.is_trivial() {
                    let (s, t) = (l.states()[0], l.holds()[0]);
                    soup.trivial_occupation[s] += t;
                    soup.trivial_loops.push((s, t));
                } else {
                    soup.loops.push(l);
                }
            }
        }
    }
    Ok(soup)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngelKozmaReport {
    pub samples: usize,
    /// Number of runs with `T_N < infinity`, for `N = 1..=n_max`.
    pub hits: Vec<u64>,
    /// `P(T_N < infinity) = h r^{N-1}`.
    pub hit_probability: Vec<f64>,
    pub hit_z: Vec<f64>,
    /// Chi-square homogeneity p-value of the erased-path law at `T_N`
    /// against the law at `T_1`, for `N = 2..=n_max`.
    pub p_values: Vec<f64>,
    /// Same test between two halves of the `T_1` sample.
    pub self_check_p: f64,
}

fn homogeneity(groups: &[Vec<Vec<usize>>]) -> f64 {
    let mut keys: Vec<&Vec<usize>> = groups.iter().flatten().collect();
    keys.sort();
    keys.dedup();
    let mut table: Vec<Vec<u64>> = groups
        .iter()
        .map(|grp| keys.iter().map(|k| grp.iter().filter(|p| p == k).count() as u64).collect())
        .collect();
    // Lump sparse categories together.
    let sparse: Vec<bool> =
        (0..keys.len()).map(|j| table.iter().map(|r| r[j]).sum::<u64>() < 5 * groups.len() as u64).collect();
    for row in &mut table {
        let other: u64 = row.iter().zip(&sparse).filter(|(_, s)| **s).map(|(c, _)| c).sum();
        let mut kept: Vec<u64> = row.iter().zip(&sparse).filter(|(_, s)| !**s).map(|(c, _)| *c).collect();
        kept.push(other);
        *row = kept;
    }
    stats::chi2_homogeneity(&table).p_value
}

/// Checks that the law of the loop erasure of the path up to the `N`-th
/// visit to `w`, given that visit happens, does not depend on `N`.
pub fn angel_kozma_check(g: &Generator, w: usize, x0: usize, n_max: usize, samples: usize, seed: u64) -> Result<AngelKozmaReport> {
    if w >= g.n() || x0 >= g.n() {
        return Err(Error::BadIndex(w.max(x0)));
    }
    if w == x0 || n_max == 0 {
        return Err(Error::BadParams("need w != x0 and n_max >= 1".into()));
    }
    if !g.is_transient() {
        return Err(Error::NotTransient(g.rho_q()));
    }
    let hd = hitting_return(g, &[w])?;
    let h = hd.h[(x0, 0)];
    let r = hd.r[(0, 0)];
    if h < 1e-12 {
        return Err(Error::DegenerateConditioning(h));
    }
    let walker = Walker::new(g);
    let runs: Vec<Vec<Vec<usize>>> = rng::par_replicas(samples, |i| {
        let mut rng = rng::stream(seed, i);
        let mut states = vec![x0];
        let mut out = Vec::new();
        let mut x = x0;
        while out.len() < n_max {
            match walker.step(x, &mut rng) {
                Some(y) => {
                    states.push(y);
                    x = y;
                    if y == w {
                        let p = DiscretePath { states: states.clone(), holds: Vec::new(), killed: false };
                        out.push(loop_erase(&p).lerw);
                    }
                }
                None => break,
            }
        }
        out
    });
    let by_n: Vec<Vec<Vec<usize>>> =
        (0..n_max).map(|k| runs.iter().filter_map(|r| r.get(k).cloned()).collect()).collect();
    let hits: Vec<u64> = by_n.iter().map(|v| v.len() as u64).collect();
    let hit_probability: Vec<f64> = (0..n_max).map(|k| h * r.powi(k as i32)).collect();
    let hit_z = hits
        .iter()
        .zip(&hit_probability)
        .map(|(&c, &p)| stats::z_score(c as f64 / samples as f64, p, stats::binomial_se(p, samples)))
        .collect();
    let p_values = (1..n_max).map(|k| homogeneity(&[by_n[0].clone(), by_n[k].clone()])).collect();
    let half = by_n[0].len() / 2;
    let self_check_p = homogeneity(&[by_n[0][..half].to_vec(), by_n[0][half..].to_vec()]);
    Ok(AngelKozmaReport { samples, hits, hit_probability, hit_z, p_values, self_check_p })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Generator {
        Generator::new(vec!["a".into(), "b".into()], &[vec![-2.0, 1.0], vec![1.0, -2.0]]).unwrap()
    }

    fn path(states: Vec<usize>) -> DiscretePath {
        DiscretePath { states, holds: Vec::new(), killed: false }
    }

    #[test]
    fn erasure_examples() {
        let r = loop_erase(&path(vec![0, 1, 2]));
        assert_eq!(r.lerw, vec![0, 1, 2]);
        assert!(r.loops.iter().all(|l| l.states.len() == 1));
        let r = loop_erase(&path(vec![0, 1, 0, 2]));
        assert_eq!(r.lerw, vec![0, 2]);
        assert_eq!(r.loops[0].states, vec![0, 1, 0]);
        let r = loop_erase(&path(vec![0, 1, 2, 1, 0, 3]));
        assert_eq!(r.lerw, vec![0, 3]);
        assert_eq!(r.loops[0].states, vec![0, 1, 2, 1, 0]);
        let p = path(vec![0, 1, 2, 1, 0, 3]);
        assert_eq!(p.jumps(), r.lerw_jumps() + r.loop_jumps());
    }

    #[test]
    fn based_loop_to_loop() {
        let b = BasedLoop { base: 0, states: vec![0, 1, 0], holds: vec![0.5, 1.0, 0.25] };
        let l = b.to_loop().unwrap();
        assert_eq!(l.states(), &[0, 1]);
        assert_eq!(l.holds(), &[0.75, 1.0]);
        assert_eq!(b.local_time(), 0.75);
    }

    #[test]
    fn prefix_examples() {
        let g = two();
        let nu = [1.0, 0.0];
        let p = lerw_prefix_probability(&g, &nu, &[0, 1]).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
        assert!((lerw_terminal_probability(&g, &nu, &[0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(lerw_prefix_probability(&g, &nu, &[0, 0]), Err(Error::NotSelfAvoiding)));
        let q = embedded_generator(&g).unwrap();
        assert!((lerw_prefix_probability(&q, &nu, &[0, 1]).unwrap() - p).abs() < 1e-12);
    }

    #[test]
    fn trees_of_two_states() {
        let g = two();
        let trees = enumerate_spanning_trees(2).unwrap();
        assert_eq!(trees.len(), 3);
        for t in &trees {
            assert!((tree_probability(&g, t).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        }
        let bad = SpanningTree { parent: vec![Some(1), Some(0)] };
        assert!(matches!(tree_probability(&g, &bad), Err(Error::NotASpanningTree(_))));
    }

    #[test]
    fn wilson_single_state() {
        let g = Generator::new(vec!["a".into()], &[vec![-1.0]]).unwrap();
        let mut rng = rng::stream(1, 0);
        let s = wilson_sample(&g, &[0], true, &mut rng).unwrap();
        assert_eq!(s.tree.parent, vec![None]);
        assert_eq!(s.records.len(), 1);
    }

    #[test]
    fn unreachable_is_reported() {
        let g = Generator::unlabeled(Mat::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0])).unwrap();
        let mut rng = rng::stream(1, 0);
        assert!(matches!(sample_killed_path(&g, 0, &[], false, &mut rng), Err(Error::Unreachable(_))));
        let p = sample_killed_path(&g, 0, &[0], false, &mut rng).unwrap();
        assert_eq!(p.states, vec![0]);
    }

    #[test]
    fn cutting_conserves_time() {
        let b = BasedLoop { base: 0, states: vec![0, 1, 0, 2, 0], holds: vec![0.5, 1.0, 0.3, 0.7, 0.2] };
        let mut rng = rng::stream(3, 0);
        for _ in 0..50 {
            let ls = cut_loop(&b, &mut rng).unwrap();
            let total: f64 = ls.iter().map(Loop::duration).sum();
            assert!((total - 2.7).abs() < 1e-12);
            let exc: usize = ls.iter().filter(|l| !l.is_trivial()).map(|l| l.states().iter().filter(|&&s| s == 0).count()).sum();
            assert_eq!(exc, 2);
        }
    }
}
