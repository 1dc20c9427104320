//! Node bijections and exact linear assignment.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

/// A bijection `π` on `0..n`, stored as `π(i)` for every `i`. Its matrix
/// form has `P[i, π(i)] = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for (i, &j) in mapping.iter().enumerate() {
            if j >= n {
                return Err(Error::NotPermutation(format!("π({i}) = {j} is out of range 0..{n}")));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::NotPermutation(format!("{j} is the image of more than one node")));
            }
        }
        Ok(Self(mapping))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn image(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Self(inv)
    }

    /// `i ↦ next(self(i))`, the mapping of the matrix product `P_self · P_next`.
    pub fn then(&self, next: &Permutation) -> Self {
        assert_eq!(self.len(), next.len(), "composing permutations of different lengths");
        Self(self.0.iter().map(|&j| next.0[j]).collect())
    }

    pub fn to_matrix(&self) -> Matrix {
        let n = self.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &j) in self.0.iter().enumerate() {
            m[(i, j)] = 1.0;
        }
        m
    }

    /// `Σ_i cost[i, π(i)]`, summed in row order.
    pub fn total(&self, cost: &Matrix) -> f64 {
        self.0.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum()
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Optimal assignment; among optimal permutations the lexicographically
/// smallest one is returned.
pub fn solve_assignment(cost: &Matrix, sense: Sense) -> Result<Permutation> {
    let n = cost.nrows();
    if cost.ncols() != n {
        return Err(Error::Dimension(format!(
            "assignment needs a square matrix, got {}x{}",
            cost.nrows(),
            cost.ncols()
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("assignment cost matrix"));
    }
    if n == 0 {
        return Ok(Permutation::identity(0));
    }
    let c = match sense {
        Sense::Min => cost.clone(),
        Sense::Max => -cost,
    };
    let (mut row_to_col, u, v) = shortest_augmenting_path(&c);

    let scale = c.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-10 * scale * (n as f64);
    let tight: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| c[(i, j)] - u[i] - v[j] <= tol).collect())
        .collect();
    lexicographic_refine(&tight, &mut row_to_col);
    Ok(Permutation(row_to_col))
}

/// Rounds a relaxed alignment to the permutation maximizing `tr(HᵀP)`.
pub fn round_to_permutation(p: &Matrix) -> Result<Permutation> {
    solve_assignment(p, Sense::Max)
}

/// O(n³) Hungarian method with row/column potentials (Jonker–Volgenant
/// style Dijkstra on reduced costs). Returns the assignment and duals with
/// `u[i] + v[j] <= c[i][j]`, equality on assigned cells.
fn shortest_augmenting_path(c: &Matrix) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = c.nrows();
    // 1-based rows/columns; index 0 is the virtual source column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = c[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[owner[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Turns a perfect matching on the tight-edge graph into the
/// lexicographically smallest one. Row by row, each smaller tight column is
/// tried by searching an alternating path that frees the row's current
/// column among the rows not yet fixed.
fn lexicographic_refine(tight: &[Vec<usize>], row_to_col: &mut [usize]) {
    let n = row_to_col.len();
    let mut col_to_row = vec![0; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    for i in 0..n {
        for &j in &tight[i] {
            if j >= row_to_col[i] {
                break;
            }
            let r = col_to_row[j];
            if r < i {
                continue;
            }
            if let Some(path) = alternating_path(tight, row_to_col, &col_to_row, i, r) {
                // i takes j; each row on the path takes the next column.
                row_to_col[i] = j;
                col_to_row[j] = i;
                for (row, col) in path {
                    row_to_col[row] = col;
                    col_to_row[col] = row;
                }
                break;
            }
        }
    }
}

/// BFS from row `start` to the column currently held by `fixed_row`,
/// through tight edges and rows `> fixed_row`. Returns the new
/// `(row, column)` assignments along the path.
fn alternating_path(
    tight: &[Vec<usize>],
    row_to_col: &[usize],
    col_to_row: &[usize],
    fixed_row: usize,
    start: usize,
) -> Option<Vec<(usize, usize)>> {
    let n = row_to_col.len();
    let target = row_to_col[fixed_row];
    // via[r]: the row that moves into r's column when the path is applied
    let mut via = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[start] = true;
    queue.push_back(start);
    while let Some(r) = queue.pop_front() {
        for &c in &tight[r] {
            if c == row_to_col[r] {
                continue;
            }
            if c == target {
                let mut path = vec![(r, target)];
                let mut cur = r;
                while cur != start {
                    let prev = via[cur];
                    path.push((prev, row_to_col[cur]));
                    cur = prev;
                }
                return Some(path);
            }
            let next = col_to_row[c];
            if next <= fixed_row || seen[next] {
                continue;
            }
            seen[next] = true;
            via[next] = r;
            queue.push_back(next);
        }
    }
    None
}
