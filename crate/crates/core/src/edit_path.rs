//! Exact edit accounting under a fixed node mapping, explicit edit paths
//! and the brute-force exact distance.

use serde::{Deserialize, Serialize};

use crate::assignment::Permutation;
use crate::cost::{CostModel, NodeEdit, PairCosts};
use crate::graph::{pad_pair, GraphPair, LabeledGraph};
use crate::{Error, Result};

/// Largest padded order the exhaustive oracle accepts by default.
pub const DEFAULT_NODE_BUDGET: usize = 9;

/// One edit operation. Node indices prefixed `node`/`slot` live in g1's
/// padded index space, `target` in g2's. Edge endpoints are g1 indices;
/// insertions also name the g2 endpoints they realize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EditOp {
    NodeInsert {
        slot: usize,
        target: usize,
        label: String,
        cost: f64,
    },
    NodeDelete {
        node: usize,
        label: String,
        cost: f64,
    },
    NodeSubstitute {
        node: usize,
        target: usize,
        from_label: String,
        to_label: String,
        cost: f64,
    },
    EdgeInsert {
        u: usize,
        v: usize,
        g2_endpoints: [usize; 2],
        cost: f64,
    },
    EdgeDelete {
        u: usize,
        v: usize,
        cost: f64,
    },
}

impl EditOp {
    pub fn cost(&self) -> f64 {
        match self {
            EditOp::NodeInsert { cost, .. }
            | EditOp::NodeDelete { cost, .. }
            | EditOp::NodeSubstitute { cost, .. }
            | EditOp::EdgeInsert { cost, .. }
            | EditOp::EdgeDelete { cost, .. } => *cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditPath {
    pub ops: Vec<EditOp>,
    pub total_cost: f64,
}

impl EditPath {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("edit path serialization is infallible")
    }

    /// Applies the path to the padded g1 of `pair` and returns the result
    /// expressed in g2's index space (nodes without a real image dropped).
    pub fn replay(&self, pair: &GraphPair, pi: &Permutation) -> Result<LabeledGraph> {
        let g1 = pair.g1();
        let n = pair.order();
        let mut labels: Vec<Option<String>> = g1
            .nodes()
            .iter()
            .map(|nd| (!nd.is_dummy).then(|| nd.label.clone()))
            .collect();
        let mut edges = vec![false; n * n];
        for (u, v) in g1.edges() {
            edges[u * n + v] = true;
            edges[v * n + u] = true;
        }
        let bad = |what: String| Err(Error::InvalidGraph(format!("edit path replay: {what}")));
        for op in &self.ops {
            match op {
                EditOp::NodeInsert { slot, label, .. } => {
                    if labels[*slot].is_some() {
                        return bad(format!("insert into occupied slot {slot}"));
                    }
                    labels[*slot] = Some(label.clone());
                }
                EditOp::NodeDelete { node, .. } => {
                    if labels[*node].take().is_none() {
                        return bad(format!("delete of absent node {node}"));
                    }
                }
                EditOp::NodeSubstitute { node, to_label, .. } => match &mut labels[*node] {
                    Some(l) => *l = to_label.clone(),
                    None => return bad(format!("substitution of absent node {node}")),
                },
                EditOp::EdgeInsert { u, v, .. } => {
                    if std::mem::replace(&mut edges[u * n + v], true) {
                        return bad(format!("insert of existing edge ({u},{v})"));
                    }
                    edges[v * n + u] = true;
                }
                EditOp::EdgeDelete { u, v, .. } => {
                    if !std::mem::replace(&mut edges[u * n + v], false) {
                        return bad(format!("delete of absent edge ({u},{v})"));
                    }
                    edges[v * n + u] = false;
                }
            }
        }
        // Move every surviving node to its image under π.
        let mut out_labels: Vec<Option<String>> = vec![None; n];
        for (i, l) in labels.into_iter().enumerate() {
            if let Some(l) = l {
                out_labels[pi.image(i)] = Some(l);
            }
        }
        let real = out_labels.iter().take_while(|l| l.is_some()).count();
        if out_labels[real..].iter().any(Option::is_some) {
            return bad("replayed nodes do not occupy a prefix of g2's indices".into());
        }
        let mut out_edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if edges[u * n + v] {
                    let (a, b) = (pi.image(u), pi.image(v));
                    if a >= real || b >= real {
                        return bad(format!("edge ({u},{v}) touches a removed node"));
                    }
                    out_edges.push((a, b));
                }
            }
        }
        LabeledGraph::new(out_labels.into_iter().flatten(), out_edges)
    }
}

/// Brute-force optimum over every node mapping of the padded pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub ged: f64,
    pub optimal_mapping: Permutation,
}

fn check_mapping(pair: &GraphPair, pi: &Permutation) -> Result<()> {
    if pi.len() != pair.order() {
        return Err(Error::NotPermutation(format!(
            "mapping has length {} but the padded order is {}",
            pi.len(),
            pair.order()
        )));
    }
    Ok(())
}

/// Edit cost of the mapping `π`: node costs in index order, then κ² for
/// every node pair `v1 < v2` whose edge status differs from that of
/// `(π(v1), π(v2))`.
pub fn ged_under_mapping(pair: &GraphPair, pi: &Permutation, cm: &CostModel) -> Result<f64> {
    check_mapping(pair, pi)?;
    let costs = cm.bind(pair)?;
    Ok(mapping_cost(pair, &costs, pi.as_slice()))
}

pub(crate) fn mapping_cost(pair: &GraphPair, costs: &PairCosts, pi: &[usize]) -> f64 {
    let n = pair.order();
    let a = pair.g1().adjacency_bits();
    let b = pair.g2().adjacency_bits();
    let mut total = 0.0;
    for (i, &j) in pi.iter().enumerate() {
        total += costs.node_cost(i, j);
    }
    let kappa2 = costs.edge_cost_squared();
    for v1 in 0..n {
        for v2 in (v1 + 1)..n {
            if a[v1 * n + v2] != b[pi[v1] * n + pi[v2]] {
                total += kappa2;
            }
        }
    }
    total
}

pub fn extract_edit_path(pair: &GraphPair, pi: &Permutation, cm: &CostModel) -> Result<EditPath> {
    check_mapping(pair, pi)?;
    let costs = cm.bind(pair)?;
    let (g1, g2) = (pair.g1(), pair.g2());
    let n = pair.order();
    let mut ops = Vec::new();
    for i in 0..n {
        let j = pi.image(i);
        let cost = costs.node_cost(i, j);
        match costs.classify(i, j) {
            NodeEdit::Insert => ops.push(EditOp::NodeInsert {
                slot: i,
                target: j,
                label: g2.label(j).to_string(),
                cost,
            }),
            NodeEdit::Delete => ops.push(EditOp::NodeDelete {
                node: i,
                label: g1.label(i).to_string(),
                cost,
            }),
            NodeEdit::Substitute => ops.push(EditOp::NodeSubstitute {
                node: i,
                target: j,
                from_label: g1.label(i).to_string(),
                to_label: g2.label(j).to_string(),
                cost,
            }),
            NodeEdit::Keep => {}
        }
    }
    let kappa2 = costs.edge_cost_squared();
    for u in 0..n {
        for v in (u + 1)..n {
            let (pu, pv) = (pi.image(u), pi.image(v));
            match (g1.has_edge(u, v), g2.has_edge(pu, pv)) {
                (true, false) => ops.push(EditOp::EdgeDelete { u, v, cost: kappa2 }),
                (false, true) => ops.push(EditOp::EdgeInsert {
                    u,
                    v,
                    g2_endpoints: [pu, pv],
                    cost: kappa2,
                }),
                _ => {}
            }
        }
    }
    // Same accumulation order as `mapping_cost`: node ops, then edges.
    let total_cost = ops.iter().map(EditOp::cost).sum();
    Ok(EditPath { ops, total_cost })
}

/// Exact distance by enumerating all mappings of the padded pair in
/// lexicographic order. Refuses orders above `node_budget`.
pub fn exact_ged(g1: &LabeledGraph, g2: &LabeledGraph, cm: &CostModel, node_budget: usize) -> Result<ExactResult> {
    let pair = pad_pair(g1, g2)?;
    exact_ged_padded(&pair, cm, node_budget)
}

pub fn exact_ged_padded(pair: &GraphPair, cm: &CostModel, node_budget: usize) -> Result<ExactResult> {
    let n = pair.order();
    if n > node_budget {
        return Err(Error::BudgetExceeded {
            order: n,
            budget: node_budget,
        });
    }
    let costs = cm.bind(pair)?;
    let node = crate::Matrix::from_fn(n, n, |i, j| costs.node_cost(i, j));
    let a = pair.g1().adjacency_bits();
    let b = pair.g2().adjacency_bits();
    let kappa2 = costs.edge_cost_squared();

    let mut search = Enumeration {
        n,
        node: &node,
        a: &a,
        b: &b,
        kappa2,
        current: Vec::with_capacity(n),
        used: vec![false; n],
        best: None,
    };
    search.descend(0.0);
    let best = search.best.expect("at least one mapping exists");
    let optimal_mapping = Permutation::new(best.0)?;
    let ged = mapping_cost(pair, &costs, optimal_mapping.as_slice());
    Ok(ExactResult { ged, optimal_mapping })
}

/// Depth-first enumeration of every permutation in lexicographic order,
/// accumulating the cost of each prefix incrementally. No pruning: every
/// complete mapping is evaluated.
struct Enumeration<'a> {
    n: usize,
    node: &'a crate::Matrix,
    a: &'a [bool],
    b: &'a [bool],
    kappa2: f64,
    current: Vec<usize>,
    used: Vec<bool>,
    best: Option<(Vec<usize>, f64)>,
}

impl Enumeration<'_> {
    fn descend(&mut self, partial: f64) {
        let depth = self.current.len();
        let n = self.n;
        if depth == n {
            if self.best.as_ref().map_or(true, |(_, b)| partial < *b) {
                self.best = Some((self.current.clone(), partial));
            }
            return;
        }
        for j in 0..n {
            if self.used[j] {
                continue;
            }
            let mut add = self.node[(depth, j)];
            for (k, &pk) in self.current.iter().enumerate() {
                if self.a[k * n + depth] != self.b[pk * n + j] {
                    add += self.kappa2;
                }
            }
            self.used[j] = true;
            self.current.push(j);
            self.descend(partial + add);
            self.current.pop();
            self.used[j] = false;
        }
    }
}
