//! Synthetic pair corpora with known provenance, batch evaluation and
//! MAE/SI reporting.
//!
//! A case is produced by sampling a random labeled graph, applying a few
//! random edits and shuffling the node order of the result. The cost of the
//! correspondence the generator knows about is recorded alongside the exact
//! distance (when the padded order fits the oracle budget).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::edit_path::{exact_ged_padded, mapping_cost, DEFAULT_NODE_BUDGET};
use crate::graph::{pad_pair, LabeledGraph};
use crate::solver::{m_adam, SolverConfig};
use crate::{Error, Result};

/// Absolute tolerance for counting an estimate as exact.
pub const EXACT_MATCH_TOL: f64 = 1e-9;

// Edit kind thresholds on a uniform draw: edges 60%, nodes 20%, relabel 20%.
const EDGE_OP_SHARE: f64 = 0.6;
const NODE_OP_SHARE: f64 = 0.2;
const MAX_EDIT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub seed: u64,
    pub count: usize,
    /// Inclusive range of source graph orders.
    pub n_range: (usize, usize),
    /// Inclusive range of applied edit counts.
    pub edit_range: (usize, usize),
    pub edge_prob: f64,
    pub labels: Vec<String>,
    /// Exact distances are computed only up to this padded order.
    pub oracle_budget: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            seed: 7,
            count: 100,
            n_range: (5, 8),
            edit_range: (0, 2),
            edge_prob: 0.35,
            labels: (1..=4).map(|i| i.to_string()).collect(),
            oracle_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl GeneratorParams {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.n_range;
        if lo > hi || self.edit_range.0 > self.edit_range.1 {
            return Err(Error::Generator("ranges must satisfy min <= max".into()));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::Generator(format!("edge_prob {} outside [0, 1]", self.edge_prob)));
        }
        if self.labels.is_empty() {
            return Err(Error::Generator("label alphabet is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairCase {
    pub id: String,
    pub g1: LabeledGraph,
    pub g2: LabeledGraph,
    pub true_ged: Option<f64>,
    pub applied_edits: Option<usize>,
    /// Edit cost of the generating node correspondence; never below `true_ged`.
    pub applied_cost: Option<f64>,
}

struct WorkNode {
    origin: Option<usize>,
    label: String,
    alive: bool,
}

struct Working {
    nodes: Vec<WorkNode>,
    // adjacency over working indices
    adj: Vec<Vec<bool>>,
}

impl Working {
    fn alive(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].alive).collect()
    }

    fn live_pairs(&self, present: bool) -> Vec<(usize, usize)> {
        let alive = self.alive();
        let mut out = Vec::new();
        for (k, &u) in alive.iter().enumerate() {
            for &v in &alive[k + 1..] {
                if self.adj[u][v] == present {
                    out.push((u, v));
                }
            }
        }
        out
    }

    fn set_edge(&mut self, u: usize, v: usize, present: bool) {
        self.adj[u][v] = present;
        self.adj[v][u] = present;
    }

    fn push_node(&mut self, label: String) {
        self.nodes.push(WorkNode {
            origin: None,
            label,
            alive: true,
        });
        for row in &mut self.adj {
            row.push(false);
        }
        self.adj.push(vec![false; self.nodes.len()]);
    }

    /// Applies one random edit; `false` if the drawn edit was infeasible.
    fn try_edit(&mut self, rng: &mut ChaCha8Rng, alphabet: &[String]) -> bool {
        let draw: f64 = rng.gen();
        if draw < EDGE_OP_SHARE {
            let add = rng.gen_bool(0.5);
            let candidates = self.live_pairs(!add);
            match candidates.choose(rng) {
                Some(&(u, v)) => {
                    self.set_edge(u, v, add);
                    true
                }
                None => false,
            }
        } else if draw < EDGE_OP_SHARE + NODE_OP_SHARE {
            if rng.gen_bool(0.5) {
                let label = alphabet.choose(rng).expect("non-empty alphabet").clone();
                self.push_node(label);
                true
            } else {
                match self.alive().choose(rng) {
                    Some(&u) => {
                        self.nodes[u].alive = false;
                        for v in 0..self.nodes.len() {
                            self.set_edge(u, v, false);
                        }
                        true
                    }
                    None => false,
                }
            }
        } else {
            let Some(&u) = self.alive().choose(rng) else {
                return false;
            };
            let others: Vec<&String> = alphabet.iter().filter(|l| **l != self.nodes[u].label).collect();
            match others.choose(rng) {
                Some(l) => {
                    self.nodes[u].label = (*l).clone();
                    true
                }
                None => false,
            }
        }
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, alphabet: &[String]) -> Result<LabeledGraph> {
    let labels: Vec<String> = (0..n)
        .map(|_| alphabet.choose(rng).expect("non-empty alphabet").clone())
        .collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    LabeledGraph::new(labels, edges)
}

/// Generates `params.count` cases; fully determined by `params.seed`.
pub fn generate_pairs(params: &GeneratorParams, cm: &CostModel) -> Result<Vec<PairCase>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut cases = Vec::with_capacity(params.count);
    for c in 0..params.count {
        let n = rng.gen_range(params.n_range.0..=params.n_range.1);
        let g1 = random_graph(&mut rng, n, params.edge_prob, &params.labels)?;
        let k = rng.gen_range(params.edit_range.0..=params.edit_range.1);

        let mut work = Working {
            nodes: g1
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, nd)| WorkNode {
                    origin: Some(i),
                    label: nd.label.clone(),
                    alive: true,
                })
                .collect(),
            adj: (0..n).map(|u| (0..n).map(|v| g1.has_edge(u, v)).collect()).collect(),
        };
        for _ in 0..k {
            let mut attempts = 0;
            while !work.try_edit(&mut rng, &params.labels) {
                attempts += 1;
                if attempts >= MAX_EDIT_ATTEMPTS {
                    return Err(Error::Generator(format!(
                        "case {c}: no feasible edit after {MAX_EDIT_ATTEMPTS} draws"
                    )));
                }
            }
        }

        // Shuffle the surviving nodes into g2's index order.
        let mut alive = work.alive();
        alive.shuffle(&mut rng);
        let mut position = vec![usize::MAX; work.nodes.len()];
        for (pos, &w) in alive.iter().enumerate() {
            position[w] = pos;
        }
        let mut edges = Vec::new();
        for (a, &u) in alive.iter().enumerate() {
            for &v in &alive[a + 1..] {
                if work.adj[u][v] {
                    edges.push((position[u], position[v]));
                }
            }
        }
        let g2 = LabeledGraph::new(alive.iter().map(|&w| work.nodes[w].label.clone()), edges)?;

        let pair = pad_pair(&g1, &g2)?;
        let order = pair.order();
        // Generating correspondence: survivors keep their image; the rest
        // of g1's slots (removed nodes, then dummies) pair up with the rest
        // of g2's slots (added nodes, then dummies) in index order.
        let mut mapping = vec![usize::MAX; order];
        let mut used = vec![false; order];
        for (w, node) in work.nodes.iter().enumerate() {
            if let (Some(i), true) = (node.origin, node.alive) {
                mapping[i] = position[w];
                used[position[w]] = true;
            }
        }
        let mut free_targets = (0..order).filter(|&j| !used[j]);
        for slot in mapping.iter_mut().filter(|m| **m == usize::MAX) {
            *slot = free_targets.next().expect("slot counts match");
        }
        let costs = cm.bind(&pair)?;
        let applied_cost = mapping_cost(&pair, &costs, &mapping);
        let true_ged = if order <= params.oracle_budget {
            Some(exact_ged_padded(&pair, cm, params.oracle_budget)?.ged)
        } else {
            None
        };
        cases.push(PairCase {
            id: format!("pair{c:04}"),
            g1,
            g2,
            true_ged,
            applied_edits: Some(k),
            applied_cost: Some(applied_cost),
        });
    }
    Ok(cases)
}

/// Recomputes `true_ged` under `cm` for every case within `budget`.
pub fn recompute_truth(cases: &mut [PairCase], cm: &CostModel, budget: usize) -> Result<()> {
    for case in cases {
        let pair = pad_pair(&case.g1, &case.g2)?;
        case.true_ged = if pair.order() <= budget {
            Some(exact_ged_padded(&pair, cm, budget)?.ged)
        } else {
            None
        };
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub id: String,
    pub n1: usize,
    pub n2: usize,
    pub true_ged: Option<f64>,
    pub estimated_ged: Option<f64>,
    pub abs_err: Option<f64>,
    pub exact_match: Option<bool>,
    pub rounds: usize,
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl BenchRow {
    fn new(id: &str, n1: usize, n2: usize, true_ged: Option<f64>, estimate: Option<f64>) -> Self {
        let abs_err = true_ged.zip(estimate).map(|(t, e)| (e - t).abs());
        Self {
            id: id.to_string(),
            n1,
            n2,
            true_ged,
            estimated_ged: estimate,
            abs_err,
            exact_match: abs_err.map(|e| e <= EXACT_MATCH_TOL),
            rounds: 0,
            wall_ms: 0.0,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    pub mae: Option<f64>,
    pub si: Option<f64>,
    pub pairs: usize,
    pub failures: usize,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    /// Sorted by case id.
    pub rows: Vec<BenchRow>,
    pub aggregates: Aggregates,
}

/// MAE and SI over the rows that have both a true and an estimated value.
pub fn aggregate(rows: &[BenchRow]) -> Aggregates {
    let scored: Vec<&BenchRow> = rows.iter().filter(|r| r.abs_err.is_some()).collect();
    let (mae, si) = if scored.is_empty() {
        (None, None)
    } else {
        let k = scored.len() as f64;
        let err: f64 = scored.iter().filter_map(|r| r.abs_err).sum();
        let hits = scored.iter().filter(|r| r.exact_match == Some(true)).count();
        (Some(err / k), Some(hits as f64 / k))
    };
    Aggregates {
        mae,
        si,
        pairs: rows.len(),
        failures: rows.iter().filter(|r| r.error.is_some()).count(),
        total_ms: rows.iter().map(|r| r.wall_ms).sum(),
    }
}

fn run_one(case: &PairCase, cm: &CostModel, cfg: &SolverConfig) -> BenchRow {
    let start = Instant::now();
    let outcome = pad_pair(&case.g1, &case.g2).and_then(|pair| m_adam(&pair, cm, cfg));
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let (n1, n2) = (case.g1.order(), case.g2.order());
    match outcome {
        Ok(report) => BenchRow {
            rounds: report.rounds(),
            wall_ms,
            ..BenchRow::new(&case.id, n1, n2, case.true_ged, Some(report.estimated_ged))
        },
        Err(e) => BenchRow {
            wall_ms,
            error: Some(e.to_string()),
            ..BenchRow::new(&case.id, n1, n2, case.true_ged, None)
        },
    }
}

/// Estimates every case on `workers` threads. Per-pair results do not
/// depend on the worker count; rows come back sorted by case id.
pub fn run_bench(cases: &[PairCase], cm: &CostModel, cfg: &SolverConfig, workers: usize) -> Result<BenchReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut rows: Vec<BenchRow> = pool.install(|| cases.par_iter().map(|c| run_one(c, cm, cfg)).collect());
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    let aggregates = aggregate(&rows);
    Ok(BenchReport { rows, aggregates })
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl BenchReport {
    pub const CSV_HEADER: &'static str = "id,n1,n2,true_ged,estimated_ged,abs_err,exact_match,rounds,wall_ms";

    /// Per-pair CSV. With `timing` off the `wall_ms` column is written as 0
    /// so that repeated runs are byte-identical.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let wall = if timing { format!("{:.3}", r.wall_ms) } else { "0".into() };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.id,
                r.n1,
                r.n2,
                opt(r.true_ged),
                opt(r.estimated_ged),
                opt(r.abs_err),
                opt(r.exact_match),
                r.rounds,
                wall
            );
        }
        out
    }

    pub fn aggregate_json(&self, timing: bool) -> String {
        let mut agg = self.aggregates.clone();
        if !timing {
            agg.total_ms = 0.0;
        }
        serde_json::to_string_pretty(&agg).expect("aggregate serialization is infallible")
    }
}

/// On-disk corpus: `manifest.json` plus one graph file per side of each case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Cost selector the true distances were computed under.
    pub cost: String,
    pub generator: Option<GeneratorParams>,
    pub cases: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub g1: String,
    pub g2: String,
    pub true_ged: Option<f64>,
    pub applied_edits: Option<usize>,
    pub applied_cost: Option<f64>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn write_corpus(
    dir: &Path,
    cases: &[PairCase],
    cost: &str,
    generator: Option<&GeneratorParams>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(cases.len());
    for case in cases {
        let g1 = format!("{}.g1.json", case.id);
        let g2 = format!("{}.g2.json", case.id);
        fs::write(dir.join(&g1), format!("{}\n", case.g1.to_json()))?;
        fs::write(dir.join(&g2), format!("{}\n", case.g2.to_json()))?;
        entries.push(ManifestEntry {
            id: case.id.clone(),
            g1,
            g2,
            true_ged: case.true_ged,
            applied_edits: case.applied_edits,
            applied_cost: case.applied_cost,
        });
    }
    let manifest = Manifest {
        cost: cost.to_string(),
        generator: generator.cloned(),
        cases: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(path)
}

pub fn read_corpus(dir: &Path) -> Result<(Manifest, Vec<PairCase>)> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = fs::read(&path).map_err(|e| Error::Corpus(format!("{}: {e}", path.display())))?;
    let manifest: Manifest =
        serde_json::from_slice(&bytes).map_err(|e| Error::Corpus(format!("{}: {e}", path.display())))?;
    let mut cases = Vec::with_capacity(manifest.cases.len());
    for entry in &manifest.cases {
        let load = |name: &str| -> Result<LabeledGraph> {
            let p = dir.join(name);
            let bytes = fs::read(&p).map_err(|e| Error::Corpus(format!("{}: {e}", p.display())))?;
            LabeledGraph::from_json(&bytes).map_err(|e| Error::Corpus(format!("{}: {e}", p.display())))
        };
        cases.push(PairCase {
            id: entry.id.clone(),
            g1: load(&entry.g1)?,
            g2: load(&entry.g2)?,
            true_ged: entry.true_ged,
            applied_edits: entry.applied_edits,
            applied_cost: entry.applied_cost,
        });
    }
    Ok((manifest, cases))
}
