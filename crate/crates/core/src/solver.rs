//! Modified Adam: penalized inner minimization, λ escalation, Hungarian
//! rounding and inverse relabeling.
//!
//! Each outer round minimizes the penalized relaxed objective from the
//! previous round's alignment, rounds the result to a permutation `H`,
//! scores the mapping it induces in the original problem, and (with inverse
//! relabeling on) recenters the problem so that the next round starts near
//! the identity: `Ã ← HᵀÃH`, `D ← HᵀD`, `P ← HᵀP`. The mapping of round `k`
//! in original coordinates is the product `H₁H₂⋯H_k`.

use serde::{Deserialize, Serialize};

use crate::assignment::{round_to_permutation, Permutation};
use crate::cost::{cost_matrix_from, CostMatrix, CostModel};
use crate::edit_path::{extract_edit_path, mapping_cost, EditPath};
use crate::graph::{pad_pair, GraphPair, LabeledGraph};
use crate::kernel::{quasi_perm_residual, relabel_transform, value_and_gradient, ObjectiveParams, ScaledPair};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Weight of the node-cost term.
    pub mu: f64,
    /// Adam step size.
    pub alpha: f64,
    /// Regularizer increment per outer round.
    pub lambda_step: f64,
    pub lambda_max_rounds: usize,
    /// Outer rounds without a better candidate before stopping.
    pub patience: usize,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub sigma_init: f64,
    pub sigma_growth: f64,
    pub sigma_cap: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// When false λ stays at 0 and every round rounds the plain relaxed solution.
    pub enable_regularizer: bool,
    pub enable_inverse_relabel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: 1.0,
            alpha: 0.001,
            lambda_step: 0.5,
            lambda_max_rounds: 20,
            patience: 3,
            inner_tol: 1e-7,
            inner_max_iters: 3000,
            sigma_init: 1.0,
            sigma_growth: 10.0,
            sigma_cap: 1e3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            enable_regularizer: true,
            enable_inverse_relabel: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("inner_tol", self.inner_tol),
            ("sigma_init", self.sigma_init),
            ("sigma_growth", self.sigma_growth),
            ("sigma_cap", self.sigma_cap),
            ("adam_eps", self.adam_eps),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("mu", self.mu), ("lambda_step", self.lambda_step)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.lambda_max_rounds == 0 || self.inner_max_iters == 0 {
            return Err(Error::Config("round and iteration caps must be at least 1".into()));
        }
        Ok(())
    }

    /// Optimizer hyperparameters of this configuration.
    pub fn adam(&self) -> AdamParams {
        AdamParams {
            alpha: self.alpha,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

/// First/second moment estimates and the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Matrix,
    v: Matrix,
    t: i32,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: Matrix::zeros(n, n),
            v: Matrix::zeros(n, n),
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }
}

/// One bias-corrected Adam update followed by clipping every entry to
/// `[0, 1]`. A non-finite gradient leaves `p` and the state untouched.
pub fn adam_step(p: &mut Matrix, grad: &Matrix, state: &mut AdamState, hp: &AdamParams) -> Result<()> {
    if p.shape() != grad.shape() || state.m.shape() != p.shape() {
        return Err(Error::Dimension(format!(
            "Adam step on {:?} with gradient {:?} and state {:?}",
            p.shape(),
            grad.shape(),
            state.m.shape()
        )));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    state.t += 1;
    let c1 = 1.0 - hp.beta1.powi(state.t);
    let c2 = 1.0 - hp.beta2.powi(state.t);
    for ((x, &g), (m, v)) in p
        .iter_mut()
        .zip(grad.iter())
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        *m = hp.beta1 * *m + (1.0 - hp.beta1) * g;
        *v = hp.beta2 * *v + (1.0 - hp.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *x = (*x - hp.alpha * m_hat / (v_hat.sqrt() + hp.eps)).clamp(0.0, 1.0);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    /// Lowest-objective iterate seen, `p0` included.
    pub p: Matrix,
    /// Penalized objective at `p`.
    pub value: f64,
    pub iterations: usize,
    /// A non-finite objective or gradient stopped the loop early.
    pub diverged: bool,
}

/// Adam on the penalized objective until two successive values differ by
/// less than `inner_tol` or `inner_max_iters` steps have run.
pub fn inner_minimize(
    sp: &ScaledPair,
    d: &CostMatrix,
    p0: &Matrix,
    params: &ObjectiveParams,
    cfg: &SolverConfig,
) -> Result<InnerResult> {
    let hp = cfg.adam();
    let (mut prev, mut grad) = value_and_gradient(sp, d, p0, params)?;
    let mut best_p = p0.clone();
    let mut best_value = prev;
    if !prev.is_finite() {
        return Ok(InnerResult {
            p: best_p,
            value: best_value,
            iterations: 0,
            diverged: true,
        });
    }
    let mut p = p0.clone();
    let mut state = AdamState::new(p0.nrows());
    let mut iterations = 0;
    let mut diverged = false;
    while iterations < cfg.inner_max_iters {
        iterations += 1;
        if adam_step(&mut p, &grad, &mut state, &hp).is_err() {
            diverged = true;
            break;
        }
        let (cur, g) = value_and_gradient(sp, d, &p, params)?;
        if !cur.is_finite() {
            diverged = true;
            break;
        }
        if cur < best_value {
            best_value = cur;
            best_p.copy_from(&p);
        }
        if (cur - prev).abs() < cfg.inner_tol {
            break;
        }
        prev = cur;
        grad = g;
    }
    Ok(InnerResult {
        p: best_p,
        value: best_value,
        iterations,
        diverged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    PatienceExhausted,
    LambdaRoundsExhausted,
    DivergenceDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub lambda: f64,
    pub sigma: f64,
    pub inner_iterations: usize,
    /// Penalized objective at the end of the inner loop.
    pub objective: f64,
    /// `tr(Pᵀ(J − P))` of the relaxed alignment before rounding.
    pub residual: f64,
    /// Edit cost of the mapping obtained in this round.
    pub candidate_ged: f64,
}

/// Where one g1 node goes, in padded indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub source: usize,
    pub target: usize,
    pub source_dummy: bool,
    pub target_dummy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub estimated_ged: f64,
    pub permutation: Permutation,
    pub mapping: Vec<MappingEntry>,
    pub edit_path: EditPath,
    pub trace: Vec<RoundRecord>,
    pub converged_reason: StopReason,
}

impl SolveReport {
    pub fn rounds(&self) -> usize {
        self.trace.len()
    }
}

/// `(HᵀP)[π(i), ·] = P[i, ·]`
fn permute_rows(p: &Matrix, h: &Permutation) -> Matrix {
    let n = p.nrows();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        out.row_mut(h.image(i)).copy_from(&p.row(i));
    }
    out
}

/// Runs the full outer loop on a padded pair.
pub fn m_adam(pair: &GraphPair, cm: &CostModel, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let costs = cm.bind(pair)?;
    let n = pair.order();
    let mut d = cost_matrix_from(&costs);
    let mut sp = ScaledPair::from_pair(pair, cm.kappa());

    let mut p = Matrix::identity(n, n);
    let mut lambda = 0.0;
    let mut sigma = cfg.sigma_init;
    let mut accumulated = Permutation::identity(n);
    let mut best: Option<(f64, Permutation)> = None;
    let mut stale_rounds = 0;
    let mut trace = Vec::new();
    let mut reason = StopReason::LambdaRoundsExhausted;

    for round in 0..cfg.lambda_max_rounds {
        let params = ObjectiveParams::new(cfg.mu, lambda, sigma);
        let inner = inner_minimize(&sp, &d, &p, &params, cfg)?;
        let h = round_to_permutation(&inner.p)?;
        let mapping = if cfg.enable_inverse_relabel {
            accumulated.then(&h)
        } else {
            h.clone()
        };
        let candidate = mapping_cost(pair, &costs, mapping.as_slice());
        log::debug!(
            "round {round}: lambda={lambda} sigma={sigma} iters={} objective={:.6e} candidate={candidate}",
            inner.iterations,
            inner.value
        );
        trace.push(RoundRecord {
            round,
            lambda,
            sigma,
            inner_iterations: inner.iterations,
            objective: inner.value,
            residual: quasi_perm_residual(&inner.p),
            candidate_ged: candidate,
        });
        if best.as_ref().map_or(true, |(b, _)| candidate < *b) {
            best = Some((candidate, mapping.clone()));
            stale_rounds = 0;
        } else {
            stale_rounds += 1;
        }
        if inner.diverged {
            reason = StopReason::DivergenceDetected;
            break;
        }
        if stale_rounds >= cfg.patience {
            reason = StopReason::PatienceExhausted;
            break;
        }

        if cfg.enable_inverse_relabel {
            let (sp_next, d_next) = relabel_transform(&sp, &d, &h)?;
            sp = sp_next;
            d = d_next;
            p = permute_rows(&inner.p, &h);
            accumulated = mapping;
        } else {
            p = inner.p;
        }
        if cfg.enable_regularizer {
            lambda += cfg.lambda_step;
        }
        sigma = (sigma * cfg.sigma_growth).min(cfg.sigma_cap);
    }

    let (estimated_ged, permutation) = best.expect("at least one outer round runs");
    let edit_path = extract_edit_path(pair, &permutation, cm)?;
    let mapping = permutation
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &j)| MappingEntry {
            source: i,
            target: j,
            source_dummy: pair.g1().is_dummy(i),
            target_dummy: pair.g2().is_dummy(j),
        })
        .collect();
    Ok(SolveReport {
        estimated_ged,
        permutation,
        mapping,
        edit_path,
        trace,
        converged_reason: reason,
    })
}

/// Pads the two graphs and runs [`m_adam`].
pub fn estimate_ged(g1: &LabeledGraph, g2: &LabeledGraph, cm: &CostModel, cfg: &SolverConfig) -> Result<SolveReport> {
    let pair = pad_pair(g1, g2)?;
    m_adam(&pair, cm, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::BuiltinCost;
    use crate::edit_path::{exact_ged, ged_under_mapping};
    use crate::kernel::penalized_objective;

    fn graph(labels: &[&str], edges: &[(usize, usize)]) -> LabeledGraph {
        LabeledGraph::new(labels.iter().copied(), edges.iter().copied()).unwrap()
    }

    fn hp() -> AdamParams {
        SolverConfig::default().adam()
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let mut p = Matrix::from_element(3, 3, 0.4);
        let before = p.clone();
        let mut st = AdamState::new(3);
        adam_step(&mut p, &Matrix::zeros(3, 3), &mut st, &hp()).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn adam_constant_gradient_decreases_monotonically() {
        let mut p = Matrix::from_element(2, 2, 0.5);
        let g = Matrix::from_element(2, 2, 3.0);
        let mut st = AdamState::new(2);
        let mut last = p[(0, 0)];
        for _ in 0..50 {
            adam_step(&mut p, &g, &mut st, &hp()).unwrap();
            assert!(p[(0, 0)] < last);
            last = p[(0, 0)];
        }
    }

    #[test]
    fn adam_clips_to_unit_box() {
        let mut p = Matrix::from_element(1, 1, 0.0005);
        let mut st = AdamState::new(1);
        adam_step(&mut p, &Matrix::from_element(1, 1, 1.0), &mut st, &hp()).unwrap();
        assert_eq!(p[(0, 0)], 0.0);
        let mut q = Matrix::from_element(1, 1, 0.9995);
        let mut st = AdamState::new(1);
        adam_step(&mut q, &Matrix::from_element(1, 1, -1.0), &mut st, &hp()).unwrap();
        assert_eq!(q[(0, 0)], 1.0);
    }

    #[test]
    fn adam_rejects_non_finite_gradient() {
        let mut p = Matrix::from_element(1, 1, 0.5);
        let mut st = AdamState::new(1);
        let g = Matrix::from_element(1, 1, f64::NAN);
        assert!(matches!(adam_step(&mut p, &g, &mut st, &hp()), Err(Error::NonFinite(_))));
        assert_eq!((p[(0, 0)], st.steps()), (0.5, 0));
    }

    #[test]
    fn inner_stops_at_stationary_point() {
        let g = graph(&["a", "b", "c"], &[(0, 1), (1, 2)]);
        let pair = pad_pair(&g, &g).unwrap();
        let cm = CostModel::builtin(BuiltinCost::Case3);
        let sp = ScaledPair::from_pair(&pair, cm.kappa());
        let d = crate::cost::build_cost_matrix(&pair, &cm).unwrap();
        let params = ObjectiveParams::new(1.0, 0.0, 10.0);
        let out = inner_minimize(&sp, &d, &Matrix::identity(3, 3), &params, &SolverConfig::default()).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.p, Matrix::identity(3, 3));
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn inner_does_not_increase_objective() {
        let g1 = graph(&["a", "a"], &[(0, 1)]);
        let g2 = graph(&["a", "a"], &[]);
        let pair = pad_pair(&g1, &g2).unwrap();
        let cm = CostModel::builtin(BuiltinCost::Case3);
        let sp = ScaledPair::from_pair(&pair, cm.kappa());
        let d = crate::cost::build_cost_matrix(&pair, &cm).unwrap();
        let params = ObjectiveParams::new(1.0, 0.0, 1e3);
        let cfg = SolverConfig::default();
        let id = Matrix::identity(2, 2);
        let at_identity = penalized_objective(&sp, &d, &id, &params).unwrap();
        let out = inner_minimize(&sp, &d, &id, &params, &cfg).unwrap();
        assert!(out.value <= at_identity + cfg.inner_tol);
        assert!(out.value < at_identity);
    }

    #[test]
    fn identical_graphs_give_zero() {
        let g = graph(&["1", "2", "3", "1"], &[(0, 1), (1, 2), (2, 3)]);
        for setting in BuiltinCost::ALL {
            let r = estimate_ged(&g, &g, &CostModel::builtin(setting), &SolverConfig::default()).unwrap();
            assert_eq!(r.estimated_ged, 0.0);
            assert!(r.permutation.is_identity());
            assert!(r.edit_path.ops.is_empty());
        }
    }

    #[test]
    fn triangle_to_path_is_one() {
        let tri = graph(&["a", "a", "a"], &[(0, 1), (1, 2), (0, 2)]);
        let p3 = graph(&["a", "a", "a"], &[(0, 1), (1, 2)]);
        let r = estimate_ged(&tri, &p3, &CostModel::builtin(BuiltinCost::Case3), &SolverConfig::default()).unwrap();
        assert_eq!(r.estimated_ged, 1.0);
    }

    #[test]
    fn single_edge_difference_costs_kappa_squared() {
        let g1 = graph(&["a", "a", "a", "a"], &[(0, 1), (1, 2), (2, 3)]);
        let g2 = graph(&["a", "a", "a", "a"], &[(0, 1), (1, 2)]);
        let cm = CostModel::uniform(0.0, 0.0, 0.0, 2.0);
        let r = estimate_ged(&g1, &g2, &cm, &SolverConfig::default()).unwrap();
        assert_eq!(r.estimated_ged, 2.0);
        assert_eq!(exact_ged(&g1, &g2, &cm, 9).unwrap().ged, 2.0);
    }

    #[test]
    fn empty_and_single_node_pairs() {
        let cm = CostModel::builtin(BuiltinCost::Case1);
        let cfg = SolverConfig::default();
        let e = LabeledGraph::empty();
        let a = graph(&["a"], &[]);
        assert_eq!(estimate_ged(&e, &e, &cm, &cfg).unwrap().estimated_ged, 0.0);
        let ins = estimate_ged(&e, &a, &cm, &cfg).unwrap();
        assert_eq!(ins.estimated_ged, 3.0);
        assert!(ins.mapping[0].source_dummy && !ins.mapping[0].target_dummy);
        assert_eq!(estimate_ged(&a, &e, &cm, &cfg).unwrap().estimated_ged, 1.0);
    }

    #[test]
    fn report_is_self_consistent_and_best_of_trace() {
        let g1 = graph(&["1", "2", "3", "2", "1"], &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]);
        let g2 = graph(&["2", "1", "3", "2"], &[(0, 1), (1, 2), (2, 3), (0, 2)]);
        for setting in BuiltinCost::ALL {
            let cm = CostModel::builtin(setting);
            for (reg, relabel) in [(true, true), (false, true), (true, false)] {
                let cfg = SolverConfig {
                    enable_regularizer: reg,
                    enable_inverse_relabel: relabel,
                    ..SolverConfig::default()
                };
                let r = estimate_ged(&g1, &g2, &cm, &cfg).unwrap();
                let pair = pad_pair(&g1, &g2).unwrap();
                assert_eq!(r.estimated_ged, ged_under_mapping(&pair, &r.permutation, &cm).unwrap());
                assert_eq!(r.estimated_ged, r.edit_path.total_cost);
                let min = r.trace.iter().map(|t| t.candidate_ged).fold(f64::INFINITY, f64::min);
                assert_eq!(r.estimated_ged, min);
                assert!(r.estimated_ged >= exact_ged(&g1, &g2, &cm, 9).unwrap().ged - 1e-9);
                if !reg {
                    assert!(r.trace.iter().all(|t| t.lambda == 0.0));
                }
            }
        }
    }

    #[test]
    fn composition_agrees_with_plain_rounding_when_both_find_the_optimum() {
        // A relabeled run composes H₁H₂⋯; a run without relabeling reads the
        // mapping straight off each rounding. Both must report the same
        // optimal mapping on a pair with a unique optimum.
        let g1 = graph(&["1", "2", "3", "4"], &[(0, 1), (1, 2), (2, 3)]);
        let g2 = graph(&["3", "1", "4", "2"], &[(1, 3), (3, 0), (0, 2)]);
        let cm = CostModel::builtin(BuiltinCost::Case2);
        let exact = exact_ged(&g1, &g2, &cm, 9).unwrap();
        assert_eq!(exact.ged, 0.0);
        let with = estimate_ged(&g1, &g2, &cm, &SolverConfig::default()).unwrap();
        let without = estimate_ged(
            &g1,
            &g2,
            &cm,
            &SolverConfig {
                enable_inverse_relabel: false,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert_eq!(with.estimated_ged, 0.0);
        assert_eq!(without.estimated_ged, 0.0);
        assert_eq!(with.permutation, exact.optimal_mapping);
        assert_eq!(without.permutation, exact.optimal_mapping);
    }

    #[test]
    fn deterministic_reports() {
        let g1 = graph(&["1", "2", "1", "3", "2", "1"], &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 4)]);
        let g2 = graph(&["2", "1", "3", "1", "1"], &[(0, 1), (0, 2), (2, 3), (3, 4)]);
        let cm = CostModel::builtin(BuiltinCost::Case2);
        let a = estimate_ged(&g1, &g2, &cm, &SolverConfig::default()).unwrap();
        let b = estimate_ged(&g1, &g2, &cm, &SolverConfig::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let g = graph(&["a"], &[]);
        let cm = CostModel::builtin(BuiltinCost::Case3);
        let cfg = SolverConfig {
            patience: 0,
            ..SolverConfig::default()
        };
        assert!(matches!(estimate_ged(&g, &g, &cm, &cfg), Err(Error::Config(_))));
        let cfg = SolverConfig {
            alpha: -1.0,
            ..SolverConfig::default()
        };
        assert!(estimate_ged(&g, &g, &cm, &cfg).is_err());
    }
}
