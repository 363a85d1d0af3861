//! Seeded benchmark graphs with planted communities.
//!
//! * GN: 128 nodes in four blocks of 32. Intra-block pairs connect with
//!   probability `z_in / 31`, inter-block pairs with `z_out / 96`, so the
//!   expected degree is 16 with `z_out` of it leaving the block.
//! * LFR: power-law degrees and community sizes, a mixing fraction `mu` of
//!   each node's edges leaving its community, wired by a configuration model
//!   with degree-preserving swaps to remove loops and multi-edges.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use thiserror::Error;

use crate::graph::Graph;
use crate::seed::{rng, Rng};

pub const GN_NODES: usize = 128;
pub const GN_BLOCK: usize = 32;
pub const GN_DEGREE: u32 = 16;

/// Whole-graph attempts before an LFR spec is declared infeasible.
const LFR_ATTEMPTS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("z_out must be in 0..=16, got {0}")]
    ZOut(u32),
    #[error("invalid LFR parameters: {0}")]
    InvalidSpec(String),
    #[error("LFR generation failed after {attempts} attempts: {reason}")]
    Infeasible { attempts: usize, reason: String },
}

/// Graph plus ground-truth community per node.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    pub graph: Graph,
    pub truth: Vec<usize>,
}

impl LabeledGraph {
    pub fn community_count(&self) -> usize {
        self.truth.iter().max().map_or(0, |&m| m + 1)
    }

    /// Sidecar truth file: `token<TAB>community` per node.
    pub fn truth_file(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.truth.iter().enumerate() {
            out.push_str(&format!("{}\t{}\n", self.graph.token(i), c));
        }
        out
    }

    /// Fraction of edges whose endpoints lie in different communities.
    pub fn mixing_fraction(&self) -> f64 {
        let edges = self.graph.edges();
        if edges.is_empty() {
            return 0.0;
        }
        let inter = edges.iter().filter(|&&(u, v)| self.truth[u] != self.truth[v]).count();
        inter as f64 / edges.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GnSpec {
    pub z_out: u32,
    pub seed: u64,
}

pub fn generate_gn(spec: GnSpec) -> Result<LabeledGraph, GeneratorError> {
    if spec.z_out > GN_DEGREE {
        return Err(GeneratorError::ZOut(spec.z_out));
    }
    let z_in = (GN_DEGREE - spec.z_out) as f64;
    let p_in = z_in / (GN_BLOCK - 1) as f64;
    let p_out = spec.z_out as f64 / (GN_NODES - GN_BLOCK) as f64;
    let truth: Vec<usize> = (0..GN_NODES).map(|i| i / GN_BLOCK).collect();
    let mut r = rng(spec.seed);
    let mut edges = Vec::new();
    for i in 0..GN_NODES {
        for j in i + 1..GN_NODES {
            let p = if truth[i] == truth[j] { p_in } else { p_out };
            if r.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::from_edges(GN_NODES, &edges).expect("indices are in range");
    Ok(LabeledGraph { graph, truth })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfrSpec {
    pub n: usize,
    pub mu: f64,
    pub avg_degree: f64,
    pub max_degree: usize,
    /// Degree exponent (density ∝ d^-t1).
    pub t1: f64,
    /// Community-size exponent.
    pub t2: f64,
    pub min_c: usize,
    pub max_c: usize,
    pub seed: u64,
}

impl LfrSpec {
    /// N = 1000, k = 20, max k = 50, t1 = 2, t2 = 1, community sizes 20..=60.
    pub fn benchmark(mu: f64, seed: u64) -> Self {
        Self { n: 1000, mu, avg_degree: 20.0, max_degree: 50, t1: 2.0, t2: 1.0, min_c: 20, max_c: 60, seed }
    }

    fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: &str| Err(GeneratorError::InvalidSpec(m.to_owned()));
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return bad("mu must lie in (0, 1)");
        }
        if self.min_c == 0 || self.min_c > self.max_c || self.max_c > self.n {
            return bad("need 1 <= min_c <= max_c <= n");
        }
        if !(self.avg_degree >= 1.0) || self.avg_degree > self.max_degree as f64 {
            return bad("need 1 <= avg_degree <= max_degree");
        }
        if self.max_degree >= self.n {
            return bad("max_degree must be below n");
        }
        if !(self.t1 > 0.0 && self.t2 > 0.0) {
            return bad("exponents must be positive");
        }
        Ok(())
    }
}

/// Continuous power law `∝ x^-t` on `[lo, hi]`, sampled by inverse CDF.
#[derive(Debug, Clone, Copy)]
struct PowerLaw {
    lo: f64,
    hi: f64,
    t: f64,
}

impl PowerLaw {
    fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(self.lo, self.hi);
        if (self.t - 1.0).abs() < 1e-12 {
            (x / self.lo).ln() / (self.hi / self.lo).ln()
        } else {
            let e = 1.0 - self.t;
            (x.powf(e) - self.lo.powf(e)) / (self.hi.powf(e) - self.lo.powf(e))
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        if (self.t - 1.0).abs() < 1e-12 {
            self.lo * (self.hi / self.lo).powf(u)
        } else {
            let e = 1.0 - self.t;
            (self.lo.powf(e) + u * (self.hi.powf(e) - self.lo.powf(e))).powf(1.0 / e)
        }
    }

    /// Integer sample: the continuous draw rounded to the nearest integer.
    fn sample(&self, r: &mut Rng) -> usize {
        self.quantile(r.random::<f64>()).round() as usize
    }

    /// Exact mean of the rounded samples.
    fn rounded_mean(&self) -> f64 {
        let first = self.lo.round() as usize;
        let last = self.hi.round() as usize;
        (first..=last)
            .map(|d| {
                let p = self.cdf(d as f64 + 0.5) - self.cdf(d as f64 - 0.5);
                d as f64 * p
            })
            .sum()
    }
}

/// Lower cutoff of the degree law chosen so the rounded samples have mean
/// `avg`, found by bisection (the mean increases with the cutoff).
fn degree_law(spec: &LfrSpec) -> Result<PowerLaw, GeneratorError> {
    let hi = spec.max_degree as f64;
    let law = |lo: f64| PowerLaw { lo, hi, t: spec.t1 };
    let (mut a, mut b) = (1.0, hi);
    if law(a).rounded_mean() > spec.avg_degree {
        return Err(GeneratorError::InvalidSpec(format!(
            "average degree {} unreachable with exponent {} below max degree {}",
            spec.avg_degree, spec.t1, spec.max_degree
        )));
    }
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if law(mid).rounded_mean() < spec.avg_degree {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(law(0.5 * (a + b)))
}

pub fn generate_lfr(spec: LfrSpec) -> Result<LabeledGraph, GeneratorError> {
    spec.validate()?;
    let degrees_law = degree_law(&spec)?;
    let sizes_law = PowerLaw { lo: spec.min_c as f64, hi: spec.max_c as f64, t: spec.t2 };
    let mut r = rng(spec.seed);
    let mut reason = String::new();
    for _ in 0..LFR_ATTEMPTS {
        match lfr_attempt(&spec, degrees_law, sizes_law, &mut r) {
            Ok(g) => return Ok(g),
            Err(why) => reason = why,
        }
    }
    Err(GeneratorError::Infeasible { attempts: LFR_ATTEMPTS, reason })
}

fn community_sizes(spec: &LfrSpec, law: PowerLaw, r: &mut Rng) -> Option<Vec<usize>> {
    let mut sizes = Vec::new();
    let mut total = 0;
    while total < spec.n {
        let s = law.sample(r).clamp(spec.min_c, spec.max_c);
        sizes.push(s);
        total += s;
    }
    let mut excess = total - spec.n;
    for s in sizes.iter_mut().rev() {
        let take = excess.min(*s - spec.min_c);
        *s -= take;
        excess -= take;
    }
    (excess == 0).then_some(sizes)
}

fn lfr_attempt(spec: &LfrSpec, degree_law: PowerLaw, size_law: PowerLaw, r: &mut Rng) -> Result<LabeledGraph, String> {
    let n = spec.n;
    let mut degree: Vec<usize> = (0..n).map(|_| degree_law.sample(r).clamp(1, spec.max_degree)).collect();
    if degree.iter().sum::<usize>() % 2 == 1 {
        let v = r.random_range(0..n);
        if degree[v] < spec.max_degree {
            degree[v] += 1;
        } else {
            degree[v] -= 1;
        }
    }
    let mut internal: Vec<usize> =
        degree.iter().map(|&d| ((1.0 - spec.mu) * d as f64).round() as usize).collect();

    let sizes = community_sizes(spec, size_law, r).ok_or("community sizes cannot sum to n")?;
    let largest = *sizes.iter().max().expect("at least one community");
    if let Some(v) = (0..n).find(|&v| internal[v] + 1 > largest) {
        return Err(format!("node {v} needs {} internal links but communities hold at most {largest}", internal[v]));
    }

    let community = place_nodes(&internal, &sizes, r)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); sizes.len()];
    for v in 0..n {
        members[community[v]].push(v);
    }

    // Each community's internal stub count must be even; move one stub between
    // the internal and external budgets of a member when it is not.
    for list in &members {
        if list.iter().map(|&v| internal[v]).sum::<usize>() % 2 == 0 {
            continue;
        }
        let size = list.len();
        if let Some(&v) = list.iter().find(|&&v| internal[v] < degree[v] && internal[v] + 1 < size) {
            internal[v] += 1;
        } else if let Some(&v) = list.iter().find(|&&v| internal[v] > 0) {
            internal[v] -= 1;
        } else {
            return Err("cannot balance internal stubs".into());
        }
    }

    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    for list in &members {
        let stubs: Vec<usize> = list.iter().flat_map(|&v| std::iter::repeat_n(v, internal[v])).collect();
        let wired = wire_stubs(stubs, r, |a, b| a != b, &edges);
        edges.extend(wired);
    }
    let external: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree[v] - internal[v])).collect();
    let wired = wire_stubs(external, r, |a, b| community[a] != community[b], &edges);
    edges.extend(wired);

    let mut edge_list: Vec<(usize, usize)> = edges.into_iter().collect();
    edge_list.sort_unstable();
    let graph = Graph::from_edges(n, &edge_list).map_err(|e| e.to_string())?;
    if (0..n).any(|v| graph.degree(v) == 0) {
        return Err("isolated node after wiring".into());
    }
    Ok(LabeledGraph { graph, truth: community })
}

/// Places nodes (largest internal degree first) into communities with room
/// for their internal degree. When every fitting community is full a random
/// member of one is evicted and re-queued.
fn place_nodes(internal: &[usize], sizes: &[usize], r: &mut Rng) -> Result<Vec<usize>, String> {
    let n = internal.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(r);
    order.sort_by(|&a, &b| internal[b].cmp(&internal[a]));
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); sizes.len()];
    let mut community = vec![usize::MAX; n];
    let mut queue: std::collections::VecDeque<usize> = order.into();
    let mut budget = 50 * n;
    while let Some(v) = queue.pop_front() {
        if budget == 0 {
            return Err("node placement did not converge".into());
        }
        budget -= 1;
        let fits: Vec<usize> = (0..sizes.len()).filter(|&c| sizes[c] > internal[v]).collect();
        let open: Vec<usize> = fits.iter().copied().filter(|&c| members[c].len() < sizes[c]).collect();
        let c = if let Some(&c) = open.as_slice().choose(r) {
            c
        } else {
            let &c = fits.as_slice().choose(r).ok_or("no community large enough")?;
            let slot = r.random_range(0..members[c].len());
            let evicted = members[c].swap_remove(slot);
            community[evicted] = usize::MAX;
            queue.push_back(evicted);
            c
        };
        members[c].push(v);
        community[v] = c;
    }
    Ok(community)
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Random stub matching followed by degree-preserving swaps that repair
/// self-loops, duplicates, and pairs rejected by `allowed`. Edges that still
/// cannot be repaired are dropped.
fn wire_stubs(
    mut stubs: Vec<usize>,
    r: &mut Rng,
    allowed: impl Fn(usize, usize) -> bool,
    existing: &HashSet<(usize, usize)>,
) -> Vec<(usize, usize)> {
    stubs.shuffle(r);
    let mut good: Vec<(usize, usize)> = Vec::new();
    let mut present: HashSet<(usize, usize)> = HashSet::new();
    let mut bad: Vec<(usize, usize)> = Vec::new();
    let valid = |a: usize, b: usize, present: &HashSet<(usize, usize)>| {
        a != b && allowed(a, b) && !present.contains(&key(a, b)) && !existing.contains(&key(a, b))
    };
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        if valid(a, b, &present) {
            present.insert(key(a, b));
            good.push((a, b));
        } else {
            bad.push((a, b));
        }
    }
    let mut attempts = 100 * (bad.len() + 1);
    while let Some((a, b)) = bad.pop() {
        let mut fixed = false;
        while attempts > 0 && !good.is_empty() {
            attempts -= 1;
            let idx = r.random_range(0..good.len());
            let (c, d) = good[idx];
            let (x, y) = if r.random::<bool>() { (c, d) } else { (d, c) };
            // (a,b) + (x,y) -> (a,x) + (b,y)
            if a == x || b == y {
                continue;
            }
            present.remove(&key(c, d));
            if valid(a, x, &present) && valid(b, y, &present) && key(a, x) != key(b, y) {
                present.insert(key(a, x));
                present.insert(key(b, y));
                good[idx] = (a, x);
                good.push((b, y));
                fixed = true;
                break;
            }
            present.insert(key(c, d));
        }
        if !fixed && attempts == 0 {
            break;
        }
    }
    good.into_iter().map(|(a, b)| key(a, b)).collect()
}
