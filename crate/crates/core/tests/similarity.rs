use std::collections::BTreeSet;

use isofdp::generators::{generate_gn, GnSpec};
use isofdp::graph::Graph;
use isofdp::similarity::{similarity_matrix, structure_similarity, to_distance, Measure};
use proptest::prelude::*;

fn arb_graph() -> impl Strategy<Value = Graph> {
    (2usize..25).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..60).prop_map(move |pairs| Graph::from_edges(n, &pairs).unwrap())
    })
}

/// Direct set evaluation of the closed-neighborhood overlap.
fn oracle(g: &Graph, v: usize, w: usize) -> f64 {
    let closed = |x: usize| -> BTreeSet<usize> { g.neighbors(x).iter().copied().chain([x]).collect() };
    let (a, b) = (closed(v), closed(w));
    a.intersection(&b).count() as f64 / ((a.len() * b.len()) as f64).sqrt()
}

proptest! {
    #[test]
    fn structure_similarity_properties(g in arb_graph()) {
        let s = similarity_matrix(&g, Measure::Structure);
        let n = g.node_count();
        for v in 0..n {
            prop_assert_eq!(s.values.get(v, v), 1.0);
            for w in 0..n {
                prop_assert_eq!(s.values.get(v, w), s.values.get(w, v));
                prop_assert!((s.values.get(v, w) - oracle(&g, v, w)).abs() < 1e-12);
                prop_assert_eq!(structure_similarity(&g, v, w).unwrap(), structure_similarity(&g, w, v).unwrap());
            }
        }
    }

    #[test]
    fn distance_is_antitone(g in arb_graph()) {
        let s = similarity_matrix(&g, Measure::Structure);
        let d = to_distance(&s).unwrap();
        let n = g.node_count();
        let mut pairs = Vec::new();
        for i in 0..n {
            prop_assert_eq!(d.get(i, i), 0.0);
            for j in 0..n {
                if i != j {
                    pairs.push((s.values.get(i, j), d.get(i, j)));
                }
            }
        }
        for &(s1, d1) in &pairs {
            for &(s2, d2) in &pairs {
                if s1 > s2 && s2 > 0.0 {
                    prop_assert!(d1 < d2, "s1={s1:e} s2={s2:e} d1={d1:e} d2={d2:e}");
                }
                if s2 == 0.0 {
                    prop_assert!(d2.is_infinite());
                }
            }
        }
    }
}

#[test]
fn path_pair_value() {
    let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let expected = 2.0 / 6f64.sqrt();
    assert!((structure_similarity(&g, 0, 1).unwrap() - expected).abs() < 1e-12);
    assert!((expected - 0.8165).abs() < 1e-4);
}

#[test]
fn unit_similarity_is_unit_distance() {
    let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
    let d = to_distance(&similarity_matrix(&g, Measure::Structure)).unwrap();
    assert_eq!(d.get(0, 1), 1.0);
    assert_eq!(d.get(0, 0), 0.0);
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

#[test]
fn regular_graph_similarities_take_few_distinct_values() {
    // 128 nodes, each joined to the 8 nearest on either side: every closed
    // neighborhood has 17 members, so values are overlap / 17.
    let edges: Vec<(usize, usize)> =
        (0..128).flat_map(|v| (1..=8).map(move |k| (v, (v + k) % 128))).collect();
    let g = Graph::from_edges(128, &edges).unwrap();
    let s = similarity_matrix(&g, Measure::Structure);
    let distinct: BTreeSet<u64> = s.values.upper_triangle().map(f64::to_bits).collect();
    assert_eq!(s.values.upper_triangle().count(), 8128);
    assert!(distinct.len() <= 18, "{} distinct values", distinct.len());
}

#[test]
fn gn_distinct_values_match_reduced_fractions() {
    let lg = generate_gn(GnSpec { z_out: 2, seed: 1 }).unwrap();
    let g = &lg.graph;
    let s = similarity_matrix(g, Measure::Structure);
    let distinct: BTreeSet<u64> = s.values.upper_triangle().map(f64::to_bits).collect();
    let mut fractions = BTreeSet::new();
    for v in 0..128 {
        for w in v + 1..128 {
            let closed = |x: usize| -> BTreeSet<usize> { g.neighbors(x).iter().copied().chain([x]).collect() };
            let c = closed(v).intersection(&closed(w)).count() as u64;
            let (num, den) = (c * c, (closed(v).len() * closed(w).len()) as u64);
            let d = gcd(num, den).max(1);
            fractions.insert((num / d, den / d));
        }
    }
    assert_eq!(distinct.len(), fractions.len());
    assert!(distinct.len() < 8128 / 5);
}

#[test]
fn every_measure_gives_symmetric_unit_diagonal() {
    let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).unwrap();
    for m in Measure::ALL {
        let s = similarity_matrix(&g, m);
        assert!(s.values.is_symmetric(), "{m}");
        for v in 0..5 {
            assert!((s.values.get(v, v) - 1.0).abs() < 1e-12, "{m}");
        }
        assert!(to_distance(&s).is_ok());
    }
}

#[test]
fn equal_ratios_are_bit_identical() {
    // 2/sqrt(2*3) and 4/sqrt(4*6) from two different pairs
    let g = Graph::from_edges(9, &[(0, 1), (1, 2), (3, 4), (3, 5), (3, 6), (4, 5), (4, 6), (4, 7), (4, 8), (5, 6)]).unwrap();
    let a = structure_similarity(&g, 0, 1).unwrap();
    let b = structure_similarity(&g, 3, 4).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}
