//! Acceptance checks for the detector, one line per criterion.
//!
//! Quantitative criteria run on seeded benchmark instances drawn with
//! [`instance_seed`] under master seed 0, so every trial can be regenerated
//! on its own. Property criteria run against independent oracles defined in
//! this file. The process exits non-zero when any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use isofdp::bench::{generate_instance, instance_seed, Suite, LFR_DEFAULT_DIM};
use isofdp::generators::LabeledGraph;
use isofdp::graph::{load_edge_list, load_gml, Graph};
use isofdp::isomap::{classical_mds, geodesic_distances, GeodesicMatrix, NeighborGraph};
use isofdp::matrix::SquareMatrix;
use isofdp::metrics::{accuracy, nmi};
use isofdp::pipeline::{detect, detect_on_embedding, embed, Detection, IsoFdpConfig, StageTimings};
use isofdp::quality::{partition_density, Partition};
use isofdp::seed::{rng, Rng};
use rand::seq::SliceRandom;
use rand::Rng as _;

const MASTER_SEED: u64 = 0;
const TRIALS: usize = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

struct Trial {
    truth: Vec<usize>,
    det: Detection,
    elapsed: Duration,
}

impl Trial {
    fn nmi(&self) -> f64 {
        nmi(&self.truth, self.det.labels()).unwrap()
    }

    fn acc(&self) -> f64 {
        accuracy(&self.truth, self.det.labels()).unwrap()
    }
}

fn run_trial(suite: Suite, param: f64, trial: usize, cfg: &IsoFdpConfig) -> Trial {
    let start = Instant::now();
    let LabeledGraph { graph, truth } = generate_instance(suite, param, instance_seed(MASTER_SEED, suite, param, trial))
        .expect("benchmark instance generates");
    let det = detect(&graph, cfg).expect("detection succeeds");
    Trial { truth, det, elapsed: start.elapsed() }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

fn gn_trials() -> Vec<(u32, Vec<Trial>)> {
    let cfg = IsoFdpConfig::default();
    (1..=7u32).map(|z| (z, (0..TRIALS).map(|t| run_trial(Suite::Gn, z as f64, t, &cfg)).collect())).collect()
}

fn gn_accuracy(gn: &[(u32, Vec<Trial>)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut slowest = Duration::ZERO;
    for (z, trials) in gn.iter().filter(|(z, _)| *z <= 6) {
        let n = mean(trials.iter().map(Trial::nmi));
        let a = mean(trials.iter().map(Trial::acc));
        slowest = slowest.max(trials.iter().map(|t| t.elapsed).max().unwrap());
        let ok = n >= 0.95 && a >= 0.95;
        pass &= ok;
        parts.push(format!("z{z} nmi={n:.3} acc={a:.3}{}", if ok { "" } else { " (below 0.95)" }));
    }
    pass &= slowest <= Duration::from_secs(5);
    Outcome::new(pass, format!("{}; slowest instance {:.3}s", parts.join(", "), slowest.as_secs_f64()))
}

fn gn_count(gn: &[(u32, Vec<Trial>)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (z, trials) in gn {
        let hits = trials.iter().filter(|t| t.det.k_star() == 4).count();
        pass &= hits >= 8;
        parts.push(format!("z{z} {hits}/{TRIALS}"));
    }
    Outcome::new(pass, format!("k*=4 in {}", parts.join(", ")))
}

fn lfr() -> Outcome {
    let cfg = IsoFdpConfig { dim: LFR_DEFAULT_DIM, ..IsoFdpConfig::default() };
    let mut pass = true;
    let mut parts = Vec::new();
    let mut slowest = Duration::ZERO;
    for step in 1..=4 {
        let mu = step as f64 / 10.0;
        let trials: Vec<Trial> = (0..TRIALS).map(|t| run_trial(Suite::Lfr, mu, t, &cfg)).collect();
        let n = mean(trials.iter().map(Trial::nmi));
        let k = mean(trials.iter().map(|t| t.det.k_star() as f64));
        let truth_k = mean(trials.iter().map(|t| (t.truth.iter().max().unwrap() + 1) as f64));
        slowest = slowest.max(trials.iter().map(|t| t.elapsed).max().unwrap());
        let ok = n >= 0.90 && (k - truth_k).abs() <= 0.1 * truth_k;
        pass &= ok;
        parts.push(format!("mu{mu:.1} nmi={n:.3} k={k:.1}/{truth_k:.1}"));
    }
    pass &= slowest <= Duration::from_secs(180);
    Outcome::new(pass, format!("{}; slowest instance {:.1}s", parts.join(", "), slowest.as_secs_f64()))
}

/// NMI of one GN(6) instance at each cutoff percentile 1..=5, sharing one embedding.
fn dc_profile(trial: usize) -> Vec<f64> {
    let seed = instance_seed(MASTER_SEED, Suite::Gn, 6.0, trial);
    let lg = generate_instance(Suite::Gn, 6.0, seed).unwrap();
    let cfg = IsoFdpConfig::default();
    let embedded = embed(&lg.graph, &cfg, &mut StageTimings::default()).unwrap();
    (1..=5)
        .map(|dc| {
            let cfg = IsoFdpConfig { dc_percentile: dc as f64, ..cfg };
            let det = detect_on_embedding(&lg.graph, embedded.embedding.clone(), &cfg, StageTimings::default()).unwrap();
            nmi(&lg.truth, det.labels()).unwrap()
        })
        .collect()
}

fn dc_insensitivity() -> Outcome {
    let first = dc_profile(0);
    let flat = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    let flat_count = (0..TRIALS).filter(|&t| flat(&dc_profile(t))).count();
    let values: Vec<String> = first.iter().map(|x| format!("{x:.4}")).collect();
    Outcome::new(
        flat(&first),
        format!("trial 0 nmi at d_c 1..5 = [{}]; flat on {flat_count}/{TRIALS} GN(6) instances", values.join(", ")),
    )
}

fn data_dirs() -> Vec<PathBuf> {
    let mut dirs = vec![Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data")];
    if let Some(extra) = std::env::var_os("ISOFDP_DATA_DIR") {
        dirs.push(PathBuf::from(extra));
    }
    dirs
}

fn find_network(name: &str) -> Option<Graph> {
    for dir in data_dirs() {
        let gml = dir.join(format!("{name}.gml"));
        if let Ok(text) = fs::read_to_string(&gml) {
            return Some(load_gml(&text).expect("fixture parses"));
        }
        let edges = dir.join(format!("{name}.edges"));
        if let Ok(text) = fs::read_to_string(&edges) {
            return Some(load_edge_list(&text).expect("fixture parses"));
        }
    }
    None
}

fn real_networks() -> Outcome {
    let cfg = IsoFdpConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, expected, tolerance) in [("football", 12, 0), ("dolphins", 5, 1), ("jazz", 3, 1), ("lesmis", 8, 1)] {
        match find_network(name) {
            Some(g) => {
                let k = detect(&g, &cfg).unwrap().k_star();
                let ok = k.abs_diff(expected) <= tolerance;
                pass &= ok;
                parts.push(format!("{name} k*={k} (want {expected}±{tolerance})"));
            }
            None => {
                pass = false;
                parts.push(format!("{name} fixture missing"));
            }
        }
    }
    Outcome::new(pass, parts.join(", "))
}

fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(u, v, w) in edges {
        d[u][v] = w;
        d[v][u] = w;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Random spanning tree plus extra edges, no repeated pairs, real weights.
fn random_connected(r: &mut Rng, n: usize) -> Vec<(usize, usize, f64)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(r);
    let mut pairs = std::collections::BTreeSet::new();
    for i in 1..n {
        let (a, b) = (order[i], order[r.random_range(0..i)]);
        pairs.insert((a.min(b), a.max(b)));
    }
    for _ in 0..r.random_range(0..=2 * n) {
        let (a, b) = (r.random_range(0..n), r.random_range(0..n));
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    pairs.into_iter().map(|(a, b)| (a, b, r.random_range(0.1..10.0))).collect()
}

fn geodesic_oracle() -> Outcome {
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    let mut largest = 0;
    for _ in 0..20 {
        let n = r.random_range(2..=200);
        largest = largest.max(n);
        let edges = random_connected(&mut r, n);
        let got = geodesic_distances(&NeighborGraph::from_edges(n, &edges, 1)).unwrap();
        let want = floyd_warshall(n, &edges);
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((got.values.get(i, j) - want[i][j]).abs());
            }
        }
    }
    Outcome::new(worst <= 1e-9, format!("20 graphs up to n={largest}, max deviation {worst:.2e}"))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn mds_exactness() -> Outcome {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = r.random_range(1..=3);
        let n = r.random_range(p + 2..=30);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| r.random_range(-10.0..10.0)).collect()).collect();
        let gd = GeodesicMatrix { values: SquareMatrix::from_fn(n, |i, j| euclid(&points[i], &points[j])) };
        let e = classical_mds(&gd, p).unwrap();
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((e.distance(i, j) - gd.values.get(i, j)).abs());
            }
        }
    }
    Outcome::new(worst <= 1e-9, format!("50 point sets, max distance error {worst:.2e}"))
}

fn clique_partition(sizes: &[usize]) -> (Graph, Partition) {
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    let mut start = 0;
    for (c, &s) in sizes.iter().enumerate() {
        for i in start..start + s {
            labels.push(c);
            edges.extend((i + 1..start + s).map(|j| (i, j)));
        }
        start += s;
    }
    (Graph::from_edges(start, &edges).unwrap(), Partition::new(labels).unwrap())
}

/// Random tree whose communities are the pieces left after cutting some edges.
fn tree_partition(r: &mut Rng) -> (Graph, Partition) {
    let n = r.random_range(3..80);
    let tree: Vec<(usize, usize)> = (1..n).map(|v| (r.random_range(0..v), v)).collect();
    let cut: Vec<bool> = tree.iter().map(|_| r.random_bool(0.2)).collect();
    let mut label: Vec<usize> = (0..n).collect();
    for (&(u, v), &c) in tree.iter().zip(&cut) {
        if !c {
            label[v] = label[u];
        }
    }
    (Graph::from_edges(n, &tree).unwrap(), Partition::canonical(&label))
}

fn partition_analytics() -> Outcome {
    let mut r = rng(8);
    let mut failures = Vec::new();
    for _ in 0..100 {
        let sizes: Vec<usize> = (0..r.random_range(1..10)).map(|_| r.random_range(3..15)).collect();
        let (g, part) = clique_partition(&sizes);
        let plain = partition_density(&g, &part, false).unwrap();
        let penalized = partition_density(&g, &part, true).unwrap();
        if plain != 1.0 || penalized != 1.0 / (sizes.len() as f64).sqrt() {
            failures.push(format!("cliques {sizes:?}: {plain} / {penalized}"));
        }
    }
    for _ in 0..100 {
        let (g, part) = tree_partition(&mut r);
        let plain = partition_density(&g, &part, false).unwrap();
        let penalized = partition_density(&g, &part, true).unwrap();
        if plain != 0.0 || penalized != 0.0 {
            failures.push(format!("tree with k={}: {plain} / {penalized}", part.k()));
        }
    }
    let detail = if failures.is_empty() {
        "100 clique partitions exact at 1 and 1/sqrt(k), 100 tree partitions at 0".to_owned()
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty(), detail)
}

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

fn brute_accuracy(truth: &[usize], pred: &[usize], perms: &[Vec<usize>]) -> f64 {
    let best = perms
        .iter()
        .map(|perm| truth.iter().zip(pred).filter(|&(&t, &p)| perm[p] == t).count())
        .max()
        .unwrap();
    best as f64 / truth.len() as f64
}

fn metrics_oracle() -> Outcome {
    let perms = permutations(6);
    let mut r = rng(9);
    let mut failures = 0;
    for _ in 0..200 {
        let n = r.random_range(1..=12);
        let (kt, kp) = (r.random_range(1..=6), r.random_range(1..=6));
        let truth: Vec<usize> = (0..n).map(|_| r.random_range(0..kt)).collect();
        let pred: Vec<usize> = (0..n).map(|_| r.random_range(0..kp)).collect();
        let relabel = &perms[r.random_range(0..perms.len())];
        let renamed: Vec<usize> = pred.iter().map(|&l| relabel[l] * 3 + 1).collect();
        let a = nmi(&truth, &pred).unwrap();
        let ok = accuracy(&truth, &pred).unwrap() == brute_accuracy(&truth, &pred, &perms)
            && (a - nmi(&pred, &truth).unwrap()).abs() <= 1e-12
            && (a - nmi(&truth, &renamed).unwrap()).abs() <= 1e-12
            && accuracy(&truth, &renamed).unwrap() == accuracy(&truth, &pred).unwrap();
        failures += usize::from(!ok);
    }
    let (t, p) = ([1, 1, 2, 2], [1, 1, 1, 2]);
    let (wn, wa) = (nmi(&t, &p).unwrap(), accuracy(&t, &p).unwrap());
    let pass = failures == 0 && (wn - 0.3456).abs() <= 1e-3 && wa == 0.75;
    Outcome::new(pass, format!("{failures}/200 pairs disagree; worked example nmi={wn:.4} acc={wa}"))
}

fn run_cli(args: &[&str]) -> i32 {
    isofdp::cli::main_with_args(std::iter::once("isofdp").chain(args.iter().copied()))
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let football = data_dirs()[0].join("football.gml");
    let football = football.to_str().unwrap();
    let commands: [&[&str]; 3] = [
        &["benchmark", "--suite", "gn", "--zout", "1..3", "--trials", "3", "--seed", "11"],
        &["benchmark", "--suite", "gn", "--zout", "6", "--trials", "2", "--dc-sweep", "1..5", "--no-baselines"],
        &["detect", "--input", football],
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for cmd in commands {
        let runs: Vec<Vec<(String, Vec<u8>)>> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                let mut args = cmd.to_vec();
                args.extend(["--out-dir", dir.path().to_str().unwrap()]);
                assert_eq!(run_cli(&args), 0, "{args:?} failed");
                snapshot(dir.path())
            })
            .collect();
        let same = runs[0] == runs[1] && !runs[0].is_empty();
        pass &= same;
        parts.push(format!("{} {} files {}", cmd[0], runs[0].len(), if same { "identical" } else { "differ" }));
    }
    Outcome::new(pass, parts.join(", "))
}

fn main() {
    let gn = gn_trials();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("GN accuracy", Box::new(|| gn_accuracy(&gn))),
        ("GN community count", Box::new(|| gn_count(&gn))),
        ("LFR accuracy and count", Box::new(lfr)),
        ("d_c insensitivity", Box::new(dc_insensitivity)),
        ("real networks", Box::new(real_networks)),
        ("geodesic oracle", Box::new(geodesic_oracle)),
        ("MDS exactness", Box::new(mds_exactness)),
        ("partition density analytics", Box::new(partition_analytics)),
        ("metrics oracle", Box::new(metrics_oracle)),
        ("determinism", Box::new(determinism)),
    ];
    let outcomes: Vec<Outcome> = criteria.iter().map(|(_, check)| check()).collect();
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!();
    for (i, ((name, _), outcome)) in criteria.iter().zip(&outcomes).enumerate() {
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {:>2} {name}: {}", i + 1, outcome.detail);
    }
    println!("{passed}/{} criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
