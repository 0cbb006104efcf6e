//! Loop clusters: open edges of a soup, their connected components, and the
//! exact probabilities of closed edges and partition refinements.

use crate::chain::{complement, green, hitting_return, Generator};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::loops::jump_counts;
use crate::measure::visit_all_mass;
use crate::soup::LoopSoup;

/// Clusters of a soup: the components of the graph of traversed edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusterPartition {
    /// Blocks sorted internally and by smallest element.
    pub blocks: Vec<Vec<usize>>,
    /// Open edges `(x, y)` with `x < y`, sorted.
    pub open_edges: Vec<(usize, usize)>,
}

impl ClusterPartition {
    /// Canonical text encoding, e.g. `0,1|2`.
    pub fn encode(&self) -> String {
        encode_partition(&self.blocks)
    }
}

pub fn encode_partition(blocks: &[Vec<usize>]) -> String {
    blocks
        .iter()
        .map(|b| b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("|")
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn canonical_blocks(mut blocks: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks.retain(|b| !b.is_empty());
    blocks.sort();
    blocks
}

/// Components of the graph on `0..n` with the given edges.
pub fn components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(n);
    for &(a, b) in edges {
        uf.union(a, b);
    }
    let mut blocks = vec![Vec::new(); n];
    for x in 0..n {
        let r = uf.find(x);
        blocks[r].push(x);
    }
    canonical_blocks(blocks)
}

/// Edges traversed by the loops of a soup and the resulting clusters.
/// Trivial loops never open an edge.
pub fn clusters(soup: &LoopSoup) -> ClusterPartition {
    let n = soup.n;
    let mut open = vec![false; n * n];
    for l in &soup.loops {
        let j = jump_counts(l, n);
        for x in 0..n {
            for y in x + 1..n {
                if j.get(x, y) + j.get(y, x) > 0 {
                    open[x * n + y] = true;
                }
            }
        }
    }
    let open_edges: Vec<(usize, usize)> =
        (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).filter(|&(x, y)| open[x * n + y]).collect();
    ClusterPartition { blocks: components(n, &open_edges), open_edges }
}

fn normalize_edges(g: &Generator, edges: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::with_capacity(edges.len());
    for &(a, b) in edges {
        if a >= g.n() || b >= g.n() {
            return Err(Error::BadIndex(a.max(b)));
        }
        if a == b {
            return Err(Error::BadParams(format!("edge from `{}` to itself", g.label(a))));
        }
        out.push((a.min(b), a.max(b)));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// `P[all listed edges closed] = det(I + (L|_E)_{AxA} V_A)^{-alpha}`.
pub fn closed_edges_probability(g: &Generator, alpha: f64, edges: &[(usize, usize)]) -> Result<f64> {
    let edges = normalize_edges(g, edges)?;
    let v = green(g)?;
    if edges.is_empty() {
        return Ok(1.0);
    }
    let mut a: Vec<usize> = edges.iter().flat_map(|&(x, y)| [x, y]).collect();
    a.sort_unstable();
    a.dedup();
    let pos = |x: usize| a.iter().position(|&z| z == x).expect("endpoint");
    let mut m = Mat::zeros(a.len(), a.len());
    for &(x, y) in &edges {
        m[(pos(x), pos(y))] = g.rate(x, y);
        m[(pos(y), pos(x))] = g.rate(y, x);
    }
    let va = linalg::principal(&v, &a);
    let d = linalg::det(&(Mat::identity(a.len(), a.len()) + m * va));
    Ok(d.powf(-alpha))
}

fn check_partition(n: usize, pi: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
    let mut seen = vec![false; n];
    for b in pi {
        if b.is_empty() {
            return Err(Error::InvalidPartition("empty block".into()));
        }
        for &x in b {
            if x >= n {
                return Err(Error::InvalidPartition(format!("state index {x} out of range")));
            }
            if seen[x] {
                return Err(Error::InvalidPartition(format!("state {x} in two blocks")));
            }
            seen[x] = true;
        }
    }
    if let Some(x) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidPartition(format!("state {x} not covered")));
    }
    Ok(canonical_blocks(pi.to_vec()))
}

/// Edges `{x, y}` with a positive jump rate in either direction joining
/// different blocks of `pi`.
pub fn cross_edges(g: &Generator, pi: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let n = g.n();
    let mut block = vec![0; n];
    for (i, b) in pi.iter().enumerate() {
        for &x in b {
            block[x] = i;
        }
    }
    (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .filter(|&(x, y)| block[x] != block[y] && (g.rate(x, y) > 0.0 || g.rate(y, x) > 0.0))
        .collect()
}

/// `P[the clusters are finer than pi] = det(I - K)^alpha`, with `K` built
/// from the hitting distributions of the block complements on the block
/// boundaries.
pub fn finer_partition_probability(g: &Generator, alpha: f64, pi: &[Vec<usize>]) -> Result<f64> {
    let pi = check_partition(g.n(), pi)?;
    green(g)?;
    if pi.len() == 1 {
        return Ok(1.0);
    }
    let cross = cross_edges(g, &pi);
    let boundary: Vec<Vec<usize>> =
        pi.iter().map(|b| b.iter().copied().filter(|x| cross.iter().any(|&(a, c)| a == *x || c == *x)).collect()).collect();
    let offsets: Vec<usize> = boundary
        .iter()
        .scan(0, |acc, b| {
            let o = *acc;
            *acc += b.len();
            Some(o)
        })
        .collect();
    let size: usize = boundary.iter().map(Vec::len).sum();
    let mut k = Mat::zeros(size, size);
    for (i, bi) in pi.iter().enumerate() {
        if boundary[i].is_empty() {
            continue;
        }
        let outside = complement(g.n(), bi);
        let hd = hitting_return(g, &outside)?;
        for (r, &x) in boundary[i].iter().enumerate() {
            for (j, bj) in boundary.iter().enumerate() {
                if j == i {
                    continue;
                }
                for (c, &y) in bj.iter().enumerate() {
                    let col = outside.iter().position(|&z| z == y).expect("y outside block i");
                    k[(offsets[i] + r, offsets[j] + c)] = hd.h[(x, col)];
                }
            }
        }
    }
    let d = linalg::det(&(Mat::identity(size, size) - k));
    Ok(d.powf(alpha))
}

/// All set partitions of `items`, blocks in canonical order.
pub fn set_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    fn rec(items: &[usize], i: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == items.len() {
            out.push(canonical_blocks(cur.clone()));
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(items[i]);
            rec(items, i + 1, cur, out);
            cur[b].pop();
        }
        cur.push(vec![items[i]]);
        rec(items, i + 1, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    rec(items, 0, &mut Vec::new(), &mut out);
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Exact law of the cluster partition by Moebius inversion of
/// [`finer_partition_probability`] over the partition lattice.
pub fn partition_law(g: &Generator, alpha: f64) -> Result<Vec<(Vec<Vec<usize>>, f64)>> {
    let n = g.n();
    if n > 8 {
        return Err(Error::BadParams("partition law limited to 8 states".into()));
    }
    let all = set_partitions(&(0..n).collect::<Vec<_>>());
    let finer: Vec<f64> = all.iter().map(|p| finer_partition_probability(g, alpha, p)).collect::<Result<_>>()?;
    let index = |p: &Vec<Vec<usize>>| all.iter().position(|q| q == p).expect("listed partition");
    let mut law = Vec::with_capacity(all.len());
    for pi in &all {
        // sigma <= pi: choose a partition of every block of pi.
        let per_block: Vec<Vec<Vec<Vec<usize>>>> = pi.iter().map(|b| set_partitions(b)).collect();
        let mut total = 0.0;
        let mut choice = vec![0usize; pi.len()];
        loop {
            let mut sigma = Vec::new();
            let mut mobius = 1.0;
            for (bi, &c) in choice.iter().enumerate() {
                let part = &per_block[bi][c];
                let k = part.len();
                mobius *= if (k - 1) % 2 == 0 { 1.0 } else { -1.0 } * factorial(k - 1);
                sigma.extend(part.iter().cloned());
            }
            total += mobius * finer[index(&canonical_blocks(sigma))];
            let mut i = 0;
            while i < choice.len() {
                choice[i] += 1;
                if choice[i] < per_block[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == choice.len() {
                break;
            }
        }
        law.push((pi.clone(), total));
    }
    Ok(law)
}

/// Discrete circle with clockwise rate `p`, counter-clockwise rate `1 - p`
/// and killing rate `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleParams {
    pub n: usize,
    pub p: f64,
    pub c: f64,
}

impl CircleParams {
    pub fn new(n: usize, p: f64, c: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::BadParams(format!("circle needs at least 3 vertices, got {n}")));
        }
        check_pc(p, c)?;
        Ok(CircleParams { n, p, c })
    }

    /// Roots `x1 >= x2` of `x^2 - (1+c) x + p(1-p)`.
    pub fn roots(&self) -> (f64, f64) {
        let b = 1.0 + self.c;
        let disc = (b * b - 4.0 * self.p * (1.0 - self.p)).sqrt();
        ((b + disc) / 2.0, (b - disc) / 2.0)
    }

    pub fn kappa(&self) -> f64 {
        renewal_kappa(self.p, self.c).expect("validated")
    }
}

fn check_pc(p: f64, c: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::BadParams(format!("p must lie in (0,1), got {p}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::BadParams(format!("c must be positive, got {c}")));
    }
    Ok(())
}

/// Generator of the circle; states are labeled `1..=n`.
pub fn circle_chain(params: &CircleParams) -> Result<Generator> {
    let CircleParams { n, p, c } = CircleParams::new(params.n, params.p, params.c)?;
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = -(1.0 + c);
        l[(i, (i + 1) % n)] = p;
        l[((i + 1) % n, i)] = 1.0 - p;
    }
    Generator::from_matrix((1..=n).map(|i| i.to_string()).collect(), l)
}

/// Closed form for the edge `{1, n}` of the circle:
/// `((x1^n - x2^n)^2 / ((x1 - x2)(x1^{n-1} - x2^{n-1})(x1^n + x2^n - p^n - (1-p)^n)))^{-alpha}`.
///
/// This expression equals `(det V_{1n} / (V^1_1 V^n_n))^alpha`, the
/// probability that no loop visits both `1` and `n`.
pub fn circle_closed_edge_probability(params: &CircleParams, alpha: f64) -> Result<f64> {
    let CircleParams { n, p, .. } = CircleParams::new(params.n, params.p, params.c)?;
    let (x1, x2) = params.roots();
    let pw = |x: f64, k: usize| x.powi(k as i32);
    let num = (pw(x1, n) - pw(x2, n)).powi(2);
    let den = (x1 - x2) * (pw(x1, n - 1) - pw(x2, n - 1)) * (pw(x1, n) + pw(x2, n) - pw(p, n) - pw(1.0 - p, n));
    Ok((num / den).powf(-alpha))
}

/// `P[no non-trivial loop visits both 1 and n]` from the generic
/// inclusion-exclusion determinant formula.
pub fn circle_visit_both_avoidance(params: &CircleParams, alpha: f64) -> Result<f64> {
    let g = circle_chain(params)?;
    let m = visit_all_mass(&g, &[vec![0], vec![params.n - 1]])?;
    Ok((-alpha * m).exp())
}

/// Renewal parameter `(1 + c - 2 sqrt(p(1-p))) / sqrt(p(1-p))`.
pub fn renewal_kappa(p: f64, c: f64) -> Result<f64> {
    check_pc(p, c)?;
    let s = (p * (1.0 - p)).sqrt();
    Ok((1.0 + c - 2.0 * s) / s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loops::{canonicalize, PointedLoop};
    use crate::soup::{LoopSoup, TrivialPolicy};

    fn two() -> Generator {
        Generator::new(vec!["a".into(), "b".into()], &[vec![-2.0, 1.0], vec![1.0, -2.0]]).unwrap()
    }

    #[test]
    fn cluster_examples() {
        let mut s = LoopSoup::empty(3, 1.0, TrivialPolicy::AggregatedGamma);
        assert_eq!(clusters(&s).blocks, vec![vec![0], vec![1], vec![2]]);
        s.loops.push(canonicalize(&PointedLoop::new(vec![0, 1], vec![1.0, 1.0]).unwrap()).unwrap());
        let c = clusters(&s);
        assert_eq!(c.blocks, vec![vec![0, 1], vec![2]]);
        assert_eq!(c.encode(), "0,1|2");
    }

    #[test]
    fn two_state_probabilities() {
        let g = two();
        assert_eq!(closed_edges_probability(&g, 1.0, &[]).unwrap(), 1.0);
        assert!((closed_edges_probability(&g, 1.0, &[(0, 1)]).unwrap() - 0.75).abs() < 1e-15);
        assert!((finer_partition_probability(&g, 1.0, &[vec![0], vec![1]]).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(finer_partition_probability(&g, 1.0, &[vec![0, 1]]).unwrap(), 1.0);
        assert!(matches!(finer_partition_probability(&g, 1.0, &[vec![0]]), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn circle_parameters() {
        let cp = CircleParams::new(5, 0.5, 1.0).unwrap();
        let (x1, x2) = cp.roots();
        assert!((x1 - (2.0 + 3f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((x2 - (2.0 - 3f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((cp.kappa() - 2.0).abs() < 1e-15);
        let g = circle_chain(&cp).unwrap();
        assert!(g.killing().iter().all(|&k| (k - 1.0).abs() < 1e-15));
        assert!(g.is_transient());
        assert!(CircleParams::new(2, 0.5, 1.0).is_err());
        assert!(renewal_kappa(1.0, 1.0).is_err());
    }

    #[test]
    fn circle_closed_form_is_the_visit_both_probability() {
        for n in 4..=8 {
            for &p in &[0.3, 0.5] {
                for &c in &[0.5, 1.0] {
                    let cp = CircleParams::new(n, p, c).unwrap();
                    let a = circle_closed_edge_probability(&cp, 1.3).unwrap();
                    let b = circle_visit_both_avoidance(&cp, 1.3).unwrap();
                    assert!((a - b).abs() < 1e-12, "n={n} p={p} c={c}: {a} vs {b}");
                    let flipped = CircleParams::new(n, 1.0 - p, c).unwrap();
                    assert!((a - circle_closed_edge_probability(&flipped, 1.3).unwrap()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn partitions_of_four() {
        assert_eq!(set_partitions(&[0, 1, 2, 3]).len(), 15);
        let law = partition_law(&two(), 1.0).unwrap();
        let total: f64 = law.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
}
