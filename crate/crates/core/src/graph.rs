//! Labeled undirected graphs, dummy padding and the JSON graph format.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

/// Reserved label carried by padding nodes.
pub const DUMMY_LABEL: &str = "ε";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub label: String,
    pub is_dummy: bool,
}

/// Simple undirected graph with string node labels.
///
/// Node indices are contiguous `0..order()`. Dummy nodes, when present, are
/// isolated, labeled [`DUMMY_LABEL`] and appended after every real node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledGraph {
    nodes: Vec<Node>,
    edges: BTreeSet<(usize, usize)>,
}

impl LabeledGraph {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a graph of real nodes. Edges may be given in either
    /// orientation; they are stored as `(min, max)`.
    pub fn new<S, E>(labels: impl IntoIterator<Item = S>, edges: E) -> Result<Self>
    where
        S: Into<String>,
        E: IntoIterator<Item = (usize, usize)>,
    {
        let nodes: Vec<Node> = labels
            .into_iter()
            .map(|l| Node {
                label: l.into(),
                is_dummy: false,
            })
            .collect();
        for (i, node) in nodes.iter().enumerate() {
            if node.label == DUMMY_LABEL {
                return Err(Error::InvalidGraph(format!(
                    "node {i}: label {DUMMY_LABEL:?} is reserved for padding"
                )));
            }
        }
        let n = nodes.len();
        let mut set = BTreeSet::new();
        for (k, (u, v)) in edges.into_iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge #{k} [{u},{v}]: endpoint out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("edge #{k} [{u},{v}]: self-loop")));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("edge #{k} [{u},{v}]: duplicate edge")));
            }
        }
        Ok(Self { nodes, edges: set })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn label(&self, i: usize) -> &str {
        &self.nodes[i].label
    }

    pub fn is_dummy(&self, i: usize) -> bool {
        self.nodes[i].is_dummy
    }

    pub fn dummy_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_dummy).count()
    }

    /// Number of non-dummy nodes.
    pub fn real_order(&self) -> usize {
        self.order() - self.dummy_count()
    }

    /// Edges as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|&&(u, v)| u == i || v == i).count()
    }

    /// Row-major `n×n` edge indicator, handy for O(1) lookups in hot loops.
    pub fn adjacency_bits(&self) -> Vec<bool> {
        let n = self.order();
        let mut bits = vec![false; n * n];
        for &(u, v) in &self.edges {
            bits[u * n + v] = true;
            bits[v * n + u] = true;
        }
        bits
    }

    pub fn adjacency(&self) -> AdjacencyMatrix {
        let n = self.order();
        let mut m = Matrix::zeros(n, n);
        for &(u, v) in &self.edges {
            m[(u, v)] = 1.0;
            m[(v, u)] = 1.0;
        }
        AdjacencyMatrix(m)
    }

    fn with_dummies(&self, count: usize) -> Self {
        let mut g = self.clone();
        g.nodes.extend((0..count).map(|_| Node {
            label: DUMMY_LABEL.to_string(),
            is_dummy: true,
        }));
        g
    }

    /// Drops dummy nodes. Dummies are isolated and trail the real nodes, so
    /// real indices are unchanged.
    pub fn without_dummies(&self) -> Self {
        let mut g = self.clone();
        g.nodes.retain(|n| !n.is_dummy);
        g
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let file: GraphFile = serde_json::from_slice(bytes).map_err(|e| Error::GraphParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        file.into_graph()
    }

    /// Canonical JSON: keys sorted, nodes by id, edges as sorted `[u, v]`
    /// pairs with `u < v`. Dummy nodes are not written.
    pub fn to_json(&self) -> String {
        let real = self.without_dummies();
        let file = GraphFile {
            edges: real.edges.iter().map(|&(u, v)| [u, v]).collect(),
            nodes: real
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| NodeRecord {
                    id,
                    label: n.label.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("graph serialization is infallible")
    }
}

/// Reads and validates a graph in the JSON graph format.
pub fn load_graph<R: Read>(mut source: R) -> Result<LabeledGraph> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    LabeledGraph::from_json(&buf)
}

/// Writes the canonical JSON form followed by a newline.
pub fn save_graph<W: Write>(g: &LabeledGraph, mut sink: W) -> Result<()> {
    sink.write_all(g.to_json().as_bytes())?;
    sink.write_all(b"\n")?;
    Ok(())
}

// Field order is alphabetical so the derived serializer emits sorted keys.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    edges: Vec<[usize; 2]>,
    nodes: Vec<NodeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: usize,
    label: String,
}

impl GraphFile {
    fn into_graph(self) -> Result<LabeledGraph> {
        let n = self.nodes.len();
        let mut slots: Vec<Option<String>> = vec![None; n];
        for (pos, rec) in self.nodes.into_iter().enumerate() {
            if rec.id >= n {
                return Err(Error::InvalidGraph(format!(
                    "nodes[{pos}]: id {} is not contiguous in 0..{n}",
                    rec.id
                )));
            }
            if slots[rec.id].is_some() {
                return Err(Error::InvalidGraph(format!(
                    "nodes[{pos}]: duplicate id {}",
                    rec.id
                )));
            }
            slots[rec.id] = Some(rec.label);
        }
        // Every slot is filled: n records, n distinct ids in 0..n.
        let labels = slots.into_iter().map(|s| s.unwrap_or_default());
        LabeledGraph::new(labels, self.edges.into_iter().map(|[u, v]| (u, v)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix(Matrix);

impl AdjacencyMatrix {
    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

/// Two graphs padded to a common order; only the smaller one carries dummies.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPair {
    g1: LabeledGraph,
    g2: LabeledGraph,
}

impl GraphPair {
    pub fn g1(&self) -> &LabeledGraph {
        &self.g1
    }

    pub fn g2(&self) -> &LabeledGraph {
        &self.g2
    }

    pub fn order(&self) -> usize {
        self.g1.order()
    }
}

/// Pads the smaller graph with isolated dummy nodes appended at the end.
pub fn pad_pair(g1: &LabeledGraph, g2: &LabeledGraph) -> Result<GraphPair> {
    if g1.dummy_count() > 0 || g2.dummy_count() > 0 {
        return Err(Error::InvalidGraph(
            "graphs passed to padding must not contain dummy nodes".into(),
        ));
    }
    let n = g1.order().max(g2.order());
    Ok(GraphPair {
        g1: g1.with_dummies(n - g1.order()),
        g2: g2.with_dummies(n - g2.order()),
    })
}
