mod common;

use loopsoup::clusters::{
    circle_chain, circle_closed_edge_probability, closed_edges_probability, cross_edges, finer_partition_probability,
    partition_law, set_partitions, CircleParams,
};
use proptest::prelude::*;

use common::{build, close, det, jump_matrix, rows};

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// All clusters are singletons exactly when the soup has no non-trivial
    /// loop: `exp(-alpha mu(non-trivial)) = det(I - Q)^alpha`.
    #[test]
    fn singletons_have_no_loops(r in (2..=4usize).prop_flat_map(rows), alpha in 0.1..3.0f64) {
        let g = build(&r);
        let n = r.len();
        let q = jump_matrix(&r);
        let iq: Vec<Vec<f64>> = (0..n).map(|x| (0..n).map(|y| (x == y) as u8 as f64 - q[x][y]).collect()).collect();
        let oracle = det(&iq).powf(alpha);
        let singletons: Vec<Vec<usize>> = (0..n).map(|x| vec![x]).collect();
        let finer = finer_partition_probability(&g, alpha, &singletons).unwrap();
        let closed = closed_edges_probability(&g, alpha, &cross_edges(&g, &singletons)).unwrap();
        prop_assert!(close(finer, oracle, 1e-12), "{finer} vs {oracle}");
        prop_assert!(close(closed, oracle, 1e-12), "{closed} vs {oracle}");
    }

    #[test]
    fn closing_more_edges_is_less_likely(r in rows(4), alpha in 0.1..3.0f64, a in 0..64usize, b in 0..64usize) {
        let g = build(&r);
        let pairs = all_pairs(4);
        let pick = |m: usize| -> Vec<(usize, usize)> { pairs.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, e)| *e).collect() };
        let small = pick(a);
        let big = pick(a | b);
        let ps = closed_edges_probability(&g, alpha, &small).unwrap();
        let pb = closed_edges_probability(&g, alpha, &big).unwrap();
        prop_assert!(pb <= ps + 1e-12 && pb > 0.0 && ps <= 1.0 + 1e-12);
    }

    /// The partition law is a distribution, and summing it over partitions
    /// finer than a given one recovers the finer-partition probability.
    #[test]
    fn partition_law_is_consistent(r in (2..=4usize).prop_flat_map(rows), alpha in 0.1..3.0f64) {
        let g = build(&r);
        let n = r.len();
        let law = partition_law(&g, alpha).unwrap();
        prop_assert!(law.iter().all(|(_, p)| *p > -1e-12));
        prop_assert!(close(law.iter().map(|(_, p)| p).sum::<f64>(), 1.0, 1e-10));
        let items: Vec<usize> = (0..n).collect();
        for pi in set_partitions(&items) {
            let refines = |sigma: &Vec<Vec<usize>>| sigma.iter().all(|b| pi.iter().any(|c| b.iter().all(|x| c.contains(x))));
            let sum: f64 = law.iter().filter(|(s, _)| refines(s)).map(|(_, p)| p).sum();
            prop_assert!(close(sum, finer_partition_probability(&g, alpha, &pi).unwrap(), 1e-10));
        }
    }
}

#[test]
fn circle_edge_is_closed_less_often_than_the_closed_form() {
    // The closed form only forbids loops visiting both endpoints, a weaker
    // event than forbidding jumps across the edge.
    for n in 4..=8 {
        let params = CircleParams::new(n, 0.5, 1.0).unwrap();
        let g = circle_chain(&params).unwrap();
        let closed = closed_edges_probability(&g, 1.0, &[(0, n - 1)]).unwrap();
        let form = circle_closed_edge_probability(&params, 1.0).unwrap();
        assert!(closed > form && closed - form < 1e-3, "n={n}: {closed} vs {form}");
    }
}
