//! Discrete optimal transport on explicit cost matrices.
//!
//! [`solve_exact`] is a network simplex specialised to the bipartite
//! transportation graph: the basis is a spanning tree over the `n + m`
//! row/column nodes, potentials come from a tree walk, and pivots use the
//! lowest-index entering arc with lowest-index leaving arc among ties
//! (Bland's rule), so the result is deterministic and cycling cannot occur.
//!
//! [`solve_entropic`] runs Sinkhorn iterations on the dual potentials in the
//! log domain.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::measures::{check_simplex, EmpiricalMeasure};

/// Largest `n * m` accepted by [`wasserstein_exact`].
pub const EXACT_SIZE_LIMIT: usize = 25_000_000;

/// Nonnegative finite `n x m` ground costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix(Array2<f64>);

impl CostMatrix {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("cost matrix".into()));
        }
        if let Some(c) = entries.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cost entry {c} is not a nonnegative finite real"
            )));
        }
        Ok(Self(entries))
    }

    /// Squared Euclidean costs between the supports of two measures.
    pub fn squared_euclidean(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<Self> {
        if mu.dim() != nu.dim() {
            return Err(Error::DimensionMismatch {
                expected: mu.dim(),
                found: nu.dim(),
            });
        }
        let (x, y) = (mu.points(), nu.points());
        let c = Array2::from_shape_fn((x.nrows(), y.nrows()), |(i, j)| {
            x.row(i)
                .iter()
                .zip(y.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        });
        Ok(Self(c))
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.dim()
    }
}

/// A coupling between two discrete marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub entries: Array2<f64>,
    pub row_marginal: Vec<f64>,
    pub col_marginal: Vec<f64>,
}

impl TransportPlan {
    /// Largest absolute deviation of row/column sums from the marginals.
    pub fn marginal_violation(&self) -> f64 {
        let rows = self
            .entries
            .rows()
            .into_iter()
            .zip(&self.row_marginal)
            .map(|(r, a)| (r.sum() - a).abs());
        let cols = self
            .entries
            .columns()
            .into_iter()
            .zip(&self.col_marginal)
            .map(|(c, b)| (c.sum() - b).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }

    pub fn nonzeros(&self) -> usize {
        self.entries.iter().filter(|&&x| x > 0.0).count()
    }
}

fn check_problem(cost: &CostMatrix, a: &[f64], b: &[f64]) -> Result<()> {
    let (n, m) = cost.shape();
    if a.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.len(),
        });
    }
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: b.len(),
        });
    }
    check_simplex(a)?;
    check_simplex(b)
}

/// Basis tree for the transportation simplex. Nodes `0..n` are rows,
/// `n..n+m` are columns; every basic cell `(i, j)` is an edge.
struct Basis {
    n: usize,
    m: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
}

struct Tree {
    parent: Vec<usize>,
    // basic-cell index of the edge to the parent
    parent_edge: Vec<usize>,
    depth: Vec<usize>,
}

impl Basis {
    /// North-west corner rule; always yields exactly `n + m - 1` cells
    /// forming a spanning tree (degenerate zero flows included).
    fn north_west(a: &[f64], b: &[f64]) -> Self {
        let (n, m) = (a.len(), b.len());
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let (mut i, mut j) = (0, 0);
        let mut cells = Vec::with_capacity(n + m - 1);
        let mut flow = Vec::with_capacity(n + m - 1);
        loop {
            let x = ra[i].min(rb[j]).max(0.0);
            cells.push((i, j));
            ra[i] -= x;
            rb[j] -= x;
            if i == n - 1 && j == m - 1 {
                // absorb rounding residue so the last cell closes both marginals
                flow.push(x + ra[i].max(rb[j]).max(0.0));
                break;
            }
            flow.push(x);
            if j == m - 1 || (i < n - 1 && ra[i] <= rb[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { n, m, cells, flow }
    }

    fn tree(&self) -> Tree {
        let nodes = self.n + self.m;
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
        for (e, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push((self.n + j, e));
            adj[self.n + j].push((i, e));
        }
        let mut parent = vec![usize::MAX; nodes];
        let mut parent_edge = vec![usize::MAX; nodes];
        let mut depth = vec![0usize; nodes];
        let mut seen = vec![false; nodes];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(v, e) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = u;
                    parent_edge[v] = e;
                    depth[v] = depth[u] + 1;
                    stack.push(v);
                }
            }
        }
        debug_assert!(seen.iter().all(|&s| s), "basis is not a spanning tree");
        Tree {
            parent,
            parent_edge,
            depth,
        }
    }

    /// Dual potentials with `u[0] = 0`, satisfying `u_i + v_j = c_ij` on the basis.
    fn potentials(&self, tree: &Tree, cost: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
        let nodes = self.n + self.m;
        let mut order: Vec<usize> = (0..nodes).collect();
        order.sort_by_key(|&v| tree.depth[v]);
        let mut pot = vec![0.0; nodes];
        for &v in order.iter().skip(1) {
            let (i, j) = self.cells[tree.parent_edge[v]];
            let p = tree.parent[v];
            pot[v] = cost[[i, j]] - pot[p];
        }
        let u = pot[..self.n].to_vec();
        let v = pot[self.n..].to_vec();
        (u, v)
    }
}

/// Exact optimal transport via the transportation network simplex.
///
/// Returns the optimal plan and `sum_ij plan_ij * cost_ij`.
pub fn solve_exact(cost: &CostMatrix, a: &[f64], b: &[f64]) -> Result<(TransportPlan, f64)> {
    check_problem(cost, a, b)?;
    let c = cost.entries();
    let (n, m) = cost.shape();
    let mut basis = Basis::north_west(a, b);
    let scale = c.iter().fold(0.0f64, |acc, &x| acc.max(x)).max(1.0);
    let tol = 1e-12 * scale;
    let mut is_basic = Array2::<bool>::from_elem((n, m), false);
    for &(i, j) in &basis.cells {
        is_basic[[i, j]] = true;
    }

    loop {
        let tree = basis.tree();
        let (u, v) = basis.potentials(&tree, c);

        // lowest-index improving arc
        let mut entering = None;
        'scan: for i in 0..n {
            for j in 0..m {
                if !is_basic[[i, j]] && c[[i, j]] - u[i] - v[j] < -tol {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else { break };

        // tree path between row node ei and column node n + ej
        let (mut x, mut y) = (ei, n + ej);
        let mut from_x = Vec::new();
        let mut from_y = Vec::new();
        while tree.depth[x] > tree.depth[y] {
            from_x.push(tree.parent_edge[x]);
            x = tree.parent[x];
        }
        while tree.depth[y] > tree.depth[x] {
            from_y.push(tree.parent_edge[y]);
            y = tree.parent[y];
        }
        while x != y {
            from_x.push(tree.parent_edge[x]);
            x = tree.parent[x];
            from_y.push(tree.parent_edge[y]);
            y = tree.parent[y];
        }
        from_y.reverse();
        let path: Vec<usize> = from_x.into_iter().chain(from_y).collect();

        // path edges alternate -, +, -, ... starting next to the entering cell
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                let f = basis.flow[e];
                let (li, lj) = basis.cells[e];
                let better = f < theta
                    || (f == theta && {
                        let (bi, bj) = basis.cells[leave];
                        (li, lj) < (bi, bj)
                    });
                if better {
                    theta = f;
                    leave = e;
                }
            }
        }
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                basis.flow[e] -= theta;
            } else {
                basis.flow[e] += theta;
            }
        }
        let (li, lj) = basis.cells[leave];
        is_basic[[li, lj]] = false;
        is_basic[[ei, ej]] = true;
        basis.cells[leave] = (ei, ej);
        basis.flow[leave] = theta;
    }

    let mut entries = Array2::<f64>::zeros((n, m));
    for (&(i, j), &f) in basis.cells.iter().zip(&basis.flow) {
        entries[[i, j]] = f.max(0.0);
    }
    let objective = entries
        .iter()
        .zip(c.iter())
        .map(|(p, x)| p * x)
        .sum::<f64>();
    Ok((
        TransportPlan {
            entries,
            row_marginal: a.to_vec(),
            col_marginal: b.to_vec(),
        },
        objective,
    ))
}

/// Which stopping rule ended a Sinkhorn run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct EntropicSolution {
    pub objective: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub marginal_violation: f64,
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let mx = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + xs.map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Entropic OT by log-domain Sinkhorn.
///
/// Stops once the row-marginal violation (columns are exact after each
/// sweep) drops below `tol`, or after `max_iter` sweeps. The objective is the
/// transport cost `<plan, cost>` of the scaled plan, without the entropy term.
pub fn solve_entropic(
    cost: &CostMatrix,
    a: &[f64],
    b: &[f64],
    epsilon: f64,
    max_iter: usize,
    tol: f64,
) -> Result<EntropicSolution> {
    check_problem(cost, a, b)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    // zero-mass atoms carry no plan mass; drop them
    let rows: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..b.len()).filter(|&j| b[j] > 0.0).collect();
    let c = cost.entries();
    let la: Vec<f64> = rows.iter().map(|&i| a[i].ln()).collect();
    let lb: Vec<f64> = cols.iter().map(|&j| b[j].ln()).collect();
    let mut f = vec![0.0; rows.len()];
    let mut g = vec![0.0; cols.len()];

    let log_plan = |f: &[f64], g: &[f64], r: usize, s: usize| -> f64 {
        la[r] + lb[s] + (f[r] + g[s] - c[[rows[r], cols[s]]]) / epsilon
    };
    let row_violation = |f: &[f64], g: &[f64]| -> f64 {
        (0..rows.len())
            .map(|r| {
                let mass: f64 = (0..cols.len()).map(|s| log_plan(f, g, r, s).exp()).sum();
                (mass - a[rows[r]]).abs()
            })
            .fold(0.0, f64::max)
    };

    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;
    let mut violation = f64::INFINITY;
    while iterations < max_iter {
        for r in 0..rows.len() {
            let lse = log_sum_exp(
                (0..cols.len()).map(|s| lb[s] + (g[s] - c[[rows[r], cols[s]]]) / epsilon),
            );
            f[r] = -epsilon * lse;
        }
        for s in 0..cols.len() {
            let lse = log_sum_exp(
                (0..rows.len()).map(|r| la[r] + (f[r] - c[[rows[r], cols[s]]]) / epsilon),
            );
            g[s] = -epsilon * lse;
        }
        iterations += 1;
        violation = row_violation(&f, &g);
        if violation < tol {
            stop = StopReason::Converged;
            break;
        }
    }
    let mut objective = 0.0;
    for r in 0..rows.len() {
        for s in 0..cols.len() {
            objective += log_plan(&f, &g, r, s).exp() * c[[rows[r], cols[s]]];
        }
    }
    Ok(EntropicSolution {
        objective,
        iterations,
        stop,
        marginal_violation: violation,
    })
}

/// Exact 2-Wasserstein distance between two measures on `R^d`.
pub fn wasserstein_exact(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    Ok(wasserstein_exact_sq(mu, nu)?.sqrt())
}

pub(crate) fn wasserstein_exact_sq(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    let (n, m) = (mu.len(), nu.len());
    if n.saturating_mul(m) > EXACT_SIZE_LIMIT {
        return Err(Error::SizeGuard {
            rows: n,
            cols: m,
            limit: EXACT_SIZE_LIMIT,
        });
    }
    let cost = CostMatrix::squared_euclidean(mu, nu)?;
    let (_, obj) = solve_exact(&cost, mu.weights(), nu.weights())?;
    Ok(obj.max(0.0))
}

/// Entropic approximation of the squared 2-Wasserstein distance.
pub fn wasserstein_entropic_sq(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    epsilon: f64,
) -> Result<f64> {
    let cost = CostMatrix::squared_euclidean(mu, nu)?;
    let sol = solve_entropic(&cost, mu.weights(), nu.weights(), epsilon, 10_000, 1e-8)?;
    Ok(sol.objective.max(0.0))
}
