//! Edit-cost models and the node-cost matrix `D`.
//!
//! Edge insertions and deletions share a single cost `κ²`. Node costs are
//! label functions: insertion, deletion and substitution. A model is bound
//! to a concrete [`GraphPair`] before use, which resolves per-label lookups
//! and, for the label-ID substitution rule, the nearest-neighbor distances
//! over the pair's label universe.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::str::FromStr;

use serde::Deserialize;

use crate::graph::GraphPair;
use crate::{Error, Matrix, Result};

/// The three built-in cost settings used by the benchmark harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinCost {
    /// insert 3, delete 1, substitute 0, κ² = 2
    Case1,
    /// `Case1` plus substitution 1 to a nearest label (by integer ID), else 2
    Case2,
    /// insert 1, delete 1, substitute 0, κ² = 1
    Case3,
}

impl BuiltinCost {
    pub const ALL: [BuiltinCost; 3] = [BuiltinCost::Case1, BuiltinCost::Case2, BuiltinCost::Case3];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinCost::Case1 => "case1",
            BuiltinCost::Case2 => "case2",
            BuiltinCost::Case3 => "case3",
        }
    }
}

impl FromStr for BuiltinCost {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "case1" => Ok(BuiltinCost::Case1),
            "case2" => Ok(BuiltinCost::Case2),
            "case3" => Ok(BuiltinCost::Case3),
            other => Err(Error::InvalidCost(format!("unknown cost setting {other:?}"))),
        }
    }
}

/// Per-label cost with an optional fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelCosts {
    default: Option<f64>,
    by_label: BTreeMap<String, f64>,
}

impl LabelCosts {
    pub fn uniform(cost: f64) -> Self {
        Self {
            default: Some(cost),
            by_label: BTreeMap::new(),
        }
    }

    pub fn get(&self, label: &str) -> Result<f64> {
        self.by_label
            .get(label)
            .copied()
            .or(self.default)
            .ok_or_else(|| Error::InvalidCost(format!("no cost declared for label {label:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Substitution {
    /// Explicit ordered pairs, everything else costs `default`.
    Table {
        default: f64,
        pairs: BTreeMap<(String, String), f64>,
    },
    /// Labels are base-10 integer IDs. Substituting `a` by `b` costs
    /// `nearest` when `|b − a|` is the smallest ID distance from `a` to any
    /// other label of the pair (ties included), and `other` otherwise.
    NearestLabelId { nearest: f64, other: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub node_insert: LabelCosts,
    pub node_delete: LabelCosts,
    pub node_substitute: Substitution,
    /// Edge insertion/deletion cost κ².
    pub edge_cost_squared: f64,
}

impl CostModel {
    pub fn builtin(setting: BuiltinCost) -> Self {
        match setting {
            BuiltinCost::Case1 => Self::uniform(3.0, 1.0, 0.0, 2.0),
            BuiltinCost::Case2 => Self {
                node_substitute: Substitution::NearestLabelId {
                    nearest: 1.0,
                    other: 2.0,
                },
                ..Self::uniform(3.0, 1.0, 0.0, 2.0)
            },
            BuiltinCost::Case3 => Self::uniform(1.0, 1.0, 0.0, 1.0),
        }
    }

    /// Label-independent costs. Panics on invalid values; use
    /// [`CostModel::validate`] for untrusted input.
    pub fn uniform(insert: f64, delete: f64, substitute: f64, edge_cost_squared: f64) -> Self {
        let cm = Self {
            node_insert: LabelCosts::uniform(insert),
            node_delete: LabelCosts::uniform(delete),
            node_substitute: Substitution::Table {
                default: substitute,
                pairs: BTreeMap::new(),
            },
            edge_cost_squared,
        };
        cm.validate().expect("invalid uniform cost model");
        cm
    }

    pub fn kappa(&self) -> f64 {
        self.edge_cost_squared.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let check = |what: &str, c: f64| {
            if !c.is_finite() || c < 0.0 {
                Err(Error::InvalidCost(format!("{what} cost {c} must be finite and >= 0")))
            } else {
                Ok(())
            }
        };
        if !(self.edge_cost_squared.is_finite() && self.edge_cost_squared > 0.0) {
            return Err(Error::InvalidCost(format!(
                "edge_cost_squared {} must be finite and > 0",
                self.edge_cost_squared
            )));
        }
        for (name, lc) in [("node_insert", &self.node_insert), ("node_delete", &self.node_delete)] {
            if let Some(d) = lc.default {
                check(name, d)?;
            }
            for (label, &c) in &lc.by_label {
                check(&format!("{name}[{label:?}]"), c)?;
            }
        }
        match &self.node_substitute {
            Substitution::Table { default, pairs } => {
                check("node_substitute default", *default)?;
                for ((a, b), &c) in pairs {
                    check(&format!("node_substitute[{a:?},{b:?}]"), c)?;
                    if a == b && c != 0.0 {
                        return Err(Error::InvalidCost(format!(
                            "substituting {a:?} by itself must cost 0, got {c}"
                        )));
                    }
                }
            }
            Substitution::NearestLabelId { nearest, other } => {
                check("nearest substitution", *nearest)?;
                check("other substitution", *other)?;
            }
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let file: CostFile = serde_json::from_slice(bytes).map_err(|e| Error::CostParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let edge_cost_squared = file
            .edge_cost_squared
            .ok_or_else(|| Error::InvalidCost("missing \"edge_cost_squared\"".into()))?;
        let node_insert = file
            .node_insert
            .ok_or_else(|| Error::InvalidCost("missing \"node_insert\"".into()))?
            .into_label_costs();
        let node_delete = file
            .node_delete
            .ok_or_else(|| Error::InvalidCost("missing \"node_delete\"".into()))?
            .into_label_costs();
        let node_substitute = match file.node_substitute {
            None => Substitution::Table {
                default: 0.0,
                pairs: BTreeMap::new(),
            },
            Some(sub) => {
                let mut pairs = BTreeMap::new();
                for (a, b, c) in sub.pairs {
                    if pairs.insert((a.clone(), b.clone()), c).is_some() {
                        return Err(Error::InvalidCost(format!(
                            "substitution pair [{a:?},{b:?}] declared twice"
                        )));
                    }
                }
                Substitution::Table {
                    default: sub.default,
                    pairs,
                }
            }
        };
        let cm = CostModel {
            node_insert,
            node_delete,
            node_substitute,
            edge_cost_squared,
        };
        cm.validate()?;
        Ok(cm)
    }

    /// Resolves every node cost the pair can need. Fails when a label has no
    /// declared cost or, for the label-ID rule, is not an integer.
    pub fn bind(&self, pair: &GraphPair) -> Result<PairCosts> {
        let (g1, g2) = (pair.g1(), pair.g2());
        let n = pair.order();
        let mut delete = vec![0.0; n];
        let mut insert = vec![0.0; n];
        for i in 0..n {
            if !g1.is_dummy(i) {
                delete[i] = self.node_delete.get(g1.label(i))?;
            }
            if !g2.is_dummy(i) {
                insert[i] = self.node_insert.get(g2.label(i))?;
            }
        }
        let rule = match &self.node_substitute {
            Substitution::Table { default, pairs } => SubRule::Table {
                default: *default,
                pairs: pairs.clone(),
            },
            Substitution::NearestLabelId { nearest, other } => {
                let labels: BTreeSet<&str> = g1
                    .nodes()
                    .iter()
                    .chain(g2.nodes())
                    .filter(|n| !n.is_dummy)
                    .map(|n| n.label.as_str())
                    .collect();
                let ids: BTreeMap<String, i64> = labels
                    .iter()
                    .map(|&l| {
                        l.trim().parse::<i64>().map(|id| (l.to_string(), id)).map_err(|_| {
                            Error::Label(format!("label {l:?} is not an integer ID"))
                        })
                    })
                    .collect::<Result<_>>()?;
                let nearest_dist = ids
                    .iter()
                    .map(|(l, &x)| {
                        let d = ids
                            .iter()
                            .filter(|(m, _)| *m != l)
                            .map(|(_, &y)| x.abs_diff(y))
                            .min()
                            .unwrap_or(u64::MAX);
                        (l.clone(), d)
                    })
                    .collect();
                SubRule::Nearest {
                    nearest: *nearest,
                    other: *other,
                    ids,
                    nearest_dist,
                }
            }
        };
        Ok(PairCosts {
            dummy1: (0..n).map(|i| g1.is_dummy(i)).collect(),
            dummy2: (0..n).map(|i| g2.is_dummy(i)).collect(),
            labels1: g1.nodes().iter().map(|n| n.label.clone()).collect(),
            labels2: g2.nodes().iter().map(|n| n.label.clone()).collect(),
            delete,
            insert,
            rule,
            edge_cost_squared: self.edge_cost_squared,
        })
    }
}

#[derive(Debug, Clone)]
enum SubRule {
    Table {
        default: f64,
        pairs: BTreeMap<(String, String), f64>,
    },
    Nearest {
        nearest: f64,
        other: f64,
        ids: BTreeMap<String, i64>,
        nearest_dist: BTreeMap<String, u64>,
    },
}

/// A cost model resolved against one padded pair; lookups are by node index.
#[derive(Debug, Clone)]
pub struct PairCosts {
    dummy1: Vec<bool>,
    dummy2: Vec<bool>,
    labels1: Vec<String>,
    labels2: Vec<String>,
    delete: Vec<f64>,
    insert: Vec<f64>,
    rule: SubRule,
    edge_cost_squared: f64,
}

/// What mapping g1 node `i` onto g2 node `j` amounts to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeEdit {
    Insert,
    Delete,
    Substitute,
    Keep,
}

impl PairCosts {
    pub fn order(&self) -> usize {
        self.dummy1.len()
    }

    pub fn edge_cost_squared(&self) -> f64 {
        self.edge_cost_squared
    }

    pub fn classify(&self, i: usize, j: usize) -> NodeEdit {
        match (self.dummy1[i], self.dummy2[j]) {
            (true, true) => NodeEdit::Keep,
            (true, false) => NodeEdit::Insert,
            (false, true) => NodeEdit::Delete,
            (false, false) if self.labels1[i] != self.labels2[j] => NodeEdit::Substitute,
            (false, false) => NodeEdit::Keep,
        }
    }

    pub fn insert_cost(&self, j: usize) -> f64 {
        self.insert[j]
    }

    pub fn delete_cost(&self, i: usize) -> f64 {
        self.delete[i]
    }

    pub fn substitute_cost(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.labels1[i], &self.labels2[j]);
        if a == b {
            return 0.0;
        }
        match &self.rule {
            SubRule::Table { default, pairs } => pairs
                .get(&(a.clone(), b.clone()))
                .copied()
                .unwrap_or(*default),
            SubRule::Nearest {
                nearest,
                other,
                ids,
                nearest_dist,
            } => {
                let (x, y) = (ids[a], ids[b]);
                if x.abs_diff(y) <= nearest_dist[a] {
                    *nearest
                } else {
                    *other
                }
            }
        }
    }

    /// Node-edit cost `d_ij` of mapping g1 node `i` onto g2 node `j`.
    pub fn node_cost(&self, i: usize, j: usize) -> f64 {
        match self.classify(i, j) {
            NodeEdit::Insert => self.insert_cost(j),
            NodeEdit::Delete => self.delete_cost(i),
            NodeEdit::Substitute => self.substitute_cost(i, j),
            NodeEdit::Keep => 0.0,
        }
    }
}

/// Node-edit cost matrix `D` of a padded pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix(Matrix);

impl CostMatrix {
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "cost matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cost matrix"));
        }
        Ok(Self(m))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

pub fn build_cost_matrix(pair: &GraphPair, cm: &CostModel) -> Result<CostMatrix> {
    let costs = cm.bind(pair)?;
    Ok(cost_matrix_from(&costs))
}

pub(crate) fn cost_matrix_from(costs: &PairCosts) -> CostMatrix {
    let n = costs.order();
    CostMatrix(Matrix::from_fn(n, n, |i, j| costs.node_cost(i, j)))
}

pub fn load_cost_model<R: Read>(mut source: R) -> Result<CostModel> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    CostModel::from_json(&buf)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CostFile {
    edge_cost_squared: Option<f64>,
    node_insert: Option<LabelCostFile>,
    node_delete: Option<LabelCostFile>,
    node_substitute: Option<SubstituteFile>,
}

#[derive(Deserialize)]
#[serde(transparent)]
struct LabelCostFile(BTreeMap<String, f64>);

impl LabelCostFile {
    fn into_label_costs(self) -> LabelCosts {
        let mut by_label = self.0;
        let default = by_label.remove("default");
        LabelCosts { default, by_label }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubstituteFile {
    default: f64,
    #[serde(default)]
    pairs: Vec<(String, String, f64)>,
}
