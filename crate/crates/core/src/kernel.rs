//! Relaxed alignment objective and its derivatives.
//!
//! For scaled adjacency matrices `Ã = κA`, `B̃ = κB`, node-cost matrix `D`
//! and a relaxed alignment `P`:
//!
//! ```text
//! f(P)  = ½‖ÃP − PB̃‖²_F + μ·tr(PᵀD) + λ·tr(Pᵀ(J − P))
//! fσ(P) = f(P) + σ·(‖P1 − 1‖² + ‖Pᵀ1 − 1‖²)
//! ∇fσ   = Ã(ÃP − PB̃) − (ÃP − PB̃)B̃ + μD + λ(J − 2P)
//!         + 2σ((P1 − 1)1ᵀ + 1(Pᵀ1 − 1)ᵀ)
//! ```
//!
//! At a permutation matrix `P_π` the λ term vanishes and, with `μ = 1`,
//! `f(P_π)` is exactly the edit cost of the mapping `π`.

use crate::assignment::Permutation;
use crate::cost::CostMatrix;
use crate::graph::GraphPair;
use crate::spectral::symmetric_eigenvalues;
use crate::{Error, Matrix, Result};

/// `Ã = κ·A` and `B̃ = κ·B` for a padded pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPair {
    a: Matrix,
    b: Matrix,
}

impl ScaledPair {
    pub fn from_pair(pair: &GraphPair, kappa: f64) -> Self {
        Self {
            a: pair.g1().adjacency().into_matrix() * kappa,
            b: pair.g2().adjacency().into_matrix() * kappa,
        }
    }

    /// Both matrices must be square, of equal order and symmetric.
    pub fn from_matrices(a: Matrix, b: Matrix) -> Result<Self> {
        for (name, m) in [("Ã", &a), ("B̃", &b)] {
            if m.nrows() != m.ncols() {
                return Err(Error::Dimension(format!(
                    "{name} must be square, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m != &m.transpose() {
                return Err(Error::Dimension(format!("{name} must be symmetric")));
            }
        }
        if a.nrows() != b.nrows() {
            return Err(Error::Dimension(format!(
                "Ã is {n}x{n} but B̃ is {m}x{m}",
                n = a.nrows(),
                m = b.nrows()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParams {
    pub mu: f64,
    pub lambda: f64,
    /// Penalty weight on row/column-sum violations.
    pub sigma: f64,
}

impl ObjectiveParams {
    pub fn new(mu: f64, lambda: f64, sigma: f64) -> Self {
        Self { mu, lambda, sigma }
    }
}

fn check_dims(sp: &ScaledPair, d: &CostMatrix, p: &Matrix) -> Result<()> {
    let n = sp.order();
    if d.order() != n || p.nrows() != n || p.ncols() != n {
        return Err(Error::Dimension(format!(
            "order {n} pair with {}x{} cost matrix and {}x{} alignment",
            d.order(),
            d.order(),
            p.nrows(),
            p.ncols()
        )));
    }
    Ok(())
}

/// `Σ p_ij (1 − p_ij)`, which equals `tr(Pᵀ(J − P))`.
pub fn quasi_perm_residual(p: &Matrix) -> f64 {
    p.iter().map(|&x| x * (1.0 - x)).sum()
}

fn residual(sp: &ScaledPair, p: &Matrix) -> Matrix {
    &sp.a * p - p * &sp.b
}

fn trace_product(p: &Matrix, d: &Matrix) -> f64 {
    // tr(PᵀD) = Σ_ij p_ij d_ij
    p.component_mul(d).sum()
}

fn sum_violations(p: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = p.nrows();
    let rows = (0..n).map(|i| p.row(i).sum() - 1.0).collect();
    let cols = (0..n).map(|j| p.column(j).sum() - 1.0).collect();
    (rows, cols)
}

fn unpenalized(d: &CostMatrix, p: &Matrix, params: &ObjectiveParams, r: &Matrix) -> f64 {
    0.5 * r.norm_squared()
        + params.mu * trace_product(p, d.as_matrix())
        + params.lambda * quasi_perm_residual(p)
}

/// `½‖ÃP − PB̃‖²_F + μ·tr(PᵀD) + λ·tr(Pᵀ(J − P))`.
pub fn objective(sp: &ScaledPair, d: &CostMatrix, p: &Matrix, params: &ObjectiveParams) -> Result<f64> {
    check_dims(sp, d, p)?;
    let r = residual(sp, p);
    Ok(unpenalized(d, p, params, &r))
}

/// Objective plus `σ·(‖P1 − 1‖² + ‖Pᵀ1 − 1‖²)`.
pub fn penalized_objective(
    sp: &ScaledPair,
    d: &CostMatrix,
    p: &Matrix,
    params: &ObjectiveParams,
) -> Result<f64> {
    Ok(value_and_gradient(sp, d, p, params)?.0)
}

pub fn gradient(sp: &ScaledPair, d: &CostMatrix, p: &Matrix, params: &ObjectiveParams) -> Result<Matrix> {
    Ok(value_and_gradient(sp, d, p, params)?.1)
}

/// Penalized objective and its gradient, sharing the residual product.
pub fn value_and_gradient(
    sp: &ScaledPair,
    d: &CostMatrix,
    p: &Matrix,
    params: &ObjectiveParams,
) -> Result<(f64, Matrix)> {
    check_dims(sp, d, p)?;
    let n = p.nrows();
    let r = residual(sp, p);
    let (rows, cols) = sum_violations(p);
    let violation: f64 = rows.iter().chain(&cols).map(|v| v * v).sum();
    let value = unpenalized(d, p, params, &r) + params.sigma * violation;

    let mut grad = &sp.a * &r - &r * &sp.b;
    grad += d.as_matrix() * params.mu;
    let two_sigma = 2.0 * params.sigma;
    for j in 0..n {
        for i in 0..n {
            grad[(i, j)] += params.lambda * (1.0 - 2.0 * p[(i, j)]) + two_sigma * (rows[i] + cols[j]);
        }
    }
    Ok((value, grad))
}

/// Recenters the problem on a rounded permutation `H`: returns
/// `(HᵀÃH, B̃, HᵀD)`. For every `P`, the objective of the transformed
/// problem at `HᵀP` equals the original objective at `P`.
pub fn relabel_transform(sp: &ScaledPair, d: &CostMatrix, h: &Permutation) -> Result<(ScaledPair, CostMatrix)> {
    let n = sp.order();
    if h.len() != n || d.order() != n {
        return Err(Error::Dimension(format!(
            "relabel of an order {n} problem with a permutation of length {} and {}x{} costs",
            h.len(),
            d.order(),
            d.order()
        )));
    }
    // H[i, π(i)] = 1, so (HᵀX)[π(i), ·] = X[i, ·] and
    // (HᵀÃH)[π(i), π(j)] = Ã[i, j].
    let map = h.as_slice();
    let mut a = Matrix::zeros(n, n);
    let mut dm = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(map[i], map[j])] = sp.a[(i, j)];
            dm[(map[i], j)] = d.as_matrix()[(i, j)];
        }
    }
    Ok((ScaledPair { a, b: sp.b.clone() }, CostMatrix::from_matrix(dm)?))
}

/// `min_{i,j} (λ_i(Ã) − λ_j(B̃))² / 2`: the largest regularizer weight for
/// which the relaxed objective is still guaranteed convex. Diagnostic only.
pub fn convexity_lambda_bound(sp: &ScaledPair) -> Result<f64> {
    let ea = symmetric_eigenvalues(&sp.a)?;
    let eb = symmetric_eigenvalues(&sp.b)?;
    let mut best = f64::INFINITY;
    for x in &ea {
        for y in &eb {
            best = best.min((x - y) * (x - y) / 2.0);
        }
    }
    Ok(best)
}
