use std::collections::HashMap;

use isofdp::metrics::{accuracy, max_weight_matching, nmi};
use isofdp::seed::rng;
use rand::Rng as _;

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for slot in 0..=p.len() {
            let mut q = p.clone();
            q.insert(slot, k - 1);
            out.push(q);
        }
    }
    out
}

fn compact(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Best matched count over every injective map between the two label sets.
fn brute_accuracy(truth: &[usize], pred: &[usize]) -> f64 {
    let (t, p) = (compact(truth), compact(pred));
    let size = t.iter().chain(&p).max().unwrap() + 1;
    let best = permutations(size)
        .iter()
        .map(|perm| t.iter().zip(&p).filter(|&(&a, &b)| perm[b] == a).count())
        .max()
        .unwrap();
    best as f64 / truth.len() as f64
}

/// NMI from Shannon entropies: I = H(T) + H(P) − H(T, P), normalized by the
/// geometric mean of the marginal entropies.
fn entropy_nmi(truth: &[usize], pred: &[usize]) -> f64 {
    let n = truth.len() as f64;
    let entropy = |keys: Vec<(usize, usize)>| {
        let mut counts: HashMap<(usize, usize), f64> = HashMap::new();
        keys.into_iter().for_each(|k| *counts.entry(k).or_default() += 1.0);
        -counts.values().map(|c| c / n * (c / n).log2()).sum::<f64>()
    };
    let ht = entropy(truth.iter().map(|&a| (a, 0)).collect());
    let hp = entropy(pred.iter().map(|&b| (0, b)).collect());
    let joint = entropy(truth.iter().zip(pred).map(|(&a, &b)| (a, b)).collect());
    (ht + hp - joint) / (ht * hp).sqrt()
}

fn random_pair(r: &mut isofdp::seed::Rng) -> (Vec<usize>, Vec<usize>) {
    let n = r.random_range(1..=12);
    let kt = r.random_range(1..=6);
    let kp = r.random_range(1..=6);
    let truth = (0..n).map(|_| r.random_range(0..kt)).collect();
    let pred = (0..n).map(|_| r.random_range(0..kp)).collect();
    (truth, pred)
}

fn distinct(labels: &[usize]) -> usize {
    compact(labels).into_iter().max().unwrap() + 1
}

#[test]
fn worked_four_node_example() {
    let truth = [1, 1, 2, 2];
    let pred = [1, 1, 1, 2];
    assert!((nmi(&truth, &pred).unwrap() - 0.3456).abs() < 1e-3);
    assert_eq!(accuracy(&truth, &pred).unwrap(), 0.75);
    assert_eq!(brute_accuracy(&truth, &pred), 0.75);
}

#[test]
fn degenerate_and_identical_partitions() {
    assert_eq!(nmi(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap(), 0.0);
    assert_eq!(nmi(&[3, 3, 3], &[1, 1, 1]).unwrap(), 1.0);
    assert_eq!(nmi(&[0, 0, 1, 2], &[5, 5, 7, 9]).unwrap(), 1.0);
    assert_eq!(accuracy(&[0, 0, 1, 2], &[2, 2, 0, 1]).unwrap(), 1.0);
    assert!(nmi(&[0, 1], &[0]).is_err());
    assert!(accuracy(&[], &[]).is_err());
}

#[test]
fn accuracy_matches_brute_force() {
    let mut r = rng(11);
    for _ in 0..500 {
        let (truth, pred) = random_pair(&mut r);
        let acc = accuracy(&truth, &pred).unwrap();
        assert_eq!(acc, brute_accuracy(&truth, &pred), "{truth:?} {pred:?}");
        assert!(acc <= 1.0);
    }
}

#[test]
fn nmi_matches_entropy_form() {
    let mut r = rng(12);
    for _ in 0..500 {
        let (truth, pred) = random_pair(&mut r);
        let value = nmi(&truth, &pred).unwrap();
        if distinct(&truth) > 1 && distinct(&pred) > 1 {
            assert!((value - entropy_nmi(&truth, &pred).clamp(0.0, 1.0)).abs() < 1e-9);
        }
        assert!((0.0..=1.0).contains(&value));
    }
}

#[test]
fn symmetric_and_relabel_invariant() {
    let mut r = rng(13);
    for _ in 0..500 {
        let (truth, pred) = random_pair(&mut r);
        let a = nmi(&truth, &pred).unwrap();
        assert!((a - nmi(&pred, &truth).unwrap()).abs() < 1e-12);
        let shuffle: Vec<usize> = {
            let mut p = permutations(6)[r.random_range(0..720)].clone();
            p.iter_mut().for_each(|x| *x += 10);
            p
        };
        let renamed: Vec<usize> = pred.iter().map(|&l| shuffle[l]).collect();
        assert!((a - nmi(&truth, &renamed).unwrap()).abs() < 1e-12);
        assert_eq!(accuracy(&truth, &pred).unwrap(), accuracy(&truth, &renamed).unwrap());
        let renamed_truth: Vec<usize> = truth.iter().map(|&l| shuffle[l]).collect();
        assert_eq!(accuracy(&truth, &pred).unwrap(), accuracy(&renamed_truth, &pred).unwrap());
    }
}

#[test]
fn matching_matches_brute_force() {
    let mut r = rng(14);
    for _ in 0..300 {
        let rows = r.random_range(1..=5);
        let cols = r.random_range(1..=5);
        let w: Vec<Vec<f64>> =
            (0..rows).map(|_| (0..cols).map(|_| r.random_range(0..10) as f64).collect()).collect();
        let got = max_weight_matching(&w);
        let mut used = vec![false; cols];
        let mut total = 0.0;
        for (i, j) in got.iter().enumerate() {
            if let Some(j) = *j {
                assert!(!used[j]);
                used[j] = true;
                total += w[i][j];
            }
        }
        let size = rows.max(cols);
        let best = permutations(size)
            .iter()
            .map(|p| (0..rows).filter(|&i| p[i] < cols).map(|i| w[i][p[i]]).sum::<f64>())
            .fold(0.0, f64::max);
        assert_eq!(total, best);
    }
}
