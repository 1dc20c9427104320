//! Instance generators and independent reference computations shared by the
//! integration tests.
#![allow(dead_code)]

use ged_core::{BuiltinCost, GraphPair, LabeledGraph, Matrix, Permutation};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, alphabet: &[&str]) -> LabeledGraph {
    let labels: Vec<&str> = (0..n).map(|_| *alphabet.choose(rng).unwrap()).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    LabeledGraph::new(labels, edges).unwrap()
}

/// Two independent graphs with orders in `1..=max_order`.
pub fn random_graphs(rng: &mut ChaCha8Rng, max_order: usize) -> (LabeledGraph, LabeledGraph) {
    let alphabet = ["1", "2", "3", "5"];
    let n1 = rng.gen_range(0..=max_order);
    let n2 = rng.gen_range(0..=max_order);
    let p = rng.gen_range(0.1..0.7);
    (random_graph(rng, n1, p, &alphabet), random_graph(rng, n2, p, &alphabet))
}

pub fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Permutation {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    Permutation::new(v).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(n, n, |_, _| rng.gen_range(lo..hi))
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let m = random_matrix(rng, n, -1.0, 1.0);
    let mut s = &m + m.transpose();
    s.fill_diagonal(0.0);
    s
}

/// Node-edit cost written out from the cost setting definitions, with no
/// reuse of the library's cost tables.
fn reference_node_cost(setting: BuiltinCost, pair: &GraphPair, i: usize, j: usize) -> f64 {
    let (g1, g2) = (pair.g1(), pair.g2());
    let (ins, del) = match setting {
        BuiltinCost::Case1 | BuiltinCost::Case2 => (3.0, 1.0),
        BuiltinCost::Case3 => (1.0, 1.0),
    };
    match (g1.is_dummy(i), g2.is_dummy(j)) {
        (true, true) => 0.0,
        (true, false) => ins,
        (false, true) => del,
        (false, false) => {
            let (a, b) = (g1.label(i), g2.label(j));
            if a == b || setting != BuiltinCost::Case2 {
                return 0.0;
            }
            let a: i64 = a.parse().unwrap();
            let b: i64 = b.parse().unwrap();
            let mut ids: Vec<i64> = (0..g1.order())
                .filter(|&k| !g1.is_dummy(k))
                .map(|k| g1.label(k).parse().unwrap())
                .chain((0..g2.order()).filter(|&k| !g2.is_dummy(k)).map(|k| g2.label(k).parse().unwrap()))
                .collect();
            ids.sort();
            ids.dedup();
            let nearest = ids.iter().filter(|&&x| x != a).map(|&x| (x - a).abs()).min().unwrap();
            if (b - a).abs() == nearest {
                1.0
            } else {
                2.0
            }
        }
    }
}

pub fn reference_edge_weight(setting: BuiltinCost) -> f64 {
    match setting {
        BuiltinCost::Case1 | BuiltinCost::Case2 => 2.0,
        BuiltinCost::Case3 => 1.0,
    }
}

/// Edit cost of a mapping: node terms plus one edge weight per node pair
/// whose edge status differs between the two sides.
pub fn reference_mapping_cost(setting: BuiltinCost, pair: &GraphPair, pi: &Permutation) -> f64 {
    let n = pair.order();
    let mut total = 0.0;
    for i in 0..n {
        total += reference_node_cost(setting, pair, i, pi.image(i));
    }
    let w = reference_edge_weight(setting);
    for u in 0..n {
        for v in (u + 1)..n {
            if pair.g1().has_edge(u, v) != pair.g2().has_edge(pi.image(u), pi.image(v)) {
                total += w;
            }
        }
    }
    total
}

/// Every permutation of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Minimum assignment total by enumeration, summed in row order.
pub fn brute_force_assignment(cost: &Matrix) -> f64 {
    all_permutations(cost.nrows())
        .iter()
        .map(|p| p.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

pub fn brute_force_ged(setting: BuiltinCost, pair: &GraphPair) -> f64 {
    all_permutations(pair.order())
        .into_iter()
        .map(|p| reference_mapping_cost(setting, pair, &Permutation::new(p).unwrap()))
        .fold(f64::INFINITY, f64::min)
}

/// Central differences of `f` at `p`, entry by entry.
pub fn finite_difference(p: &Matrix, h: f64, f: impl Fn(&Matrix) -> f64) -> Matrix {
    let mut out = Matrix::zeros(p.nrows(), p.ncols());
    let mut probe = p.clone();
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let x = p[(i, j)];
            probe[(i, j)] = x + h;
            let up = f(&probe);
            probe[(i, j)] = x - h;
            let down = f(&probe);
            probe[(i, j)] = x;
            out[(i, j)] = (up - down) / (2.0 * h);
        }
    }
    out
}

/// Convex combination of `k` random permutation matrices.
pub fn birkhoff_mixture(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Matrix {
    let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut m = Matrix::zeros(n, n);
    for w in weights {
        m += random_permutation(rng, n).to_matrix() * (w / total);
    }
    m
}
