//! Reference Wasserstein-over-Wasserstein distance.
//!
//! The inner level fills an `N x M` matrix of squared Wasserstein distances
//! between inner measures; the outer level is an exact transport problem on
//! that matrix with the outer weights as marginals.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete_ot::{solve_exact, wasserstein_entropic_sq, wasserstein_exact_sq, CostMatrix};
use crate::error::{Error, Result};
use crate::measures::{EmpiricalMeasure, MetaMeasure};
use crate::ot1d::{quantile_of, w2_squared};

/// How inner Wasserstein distances are computed. One-dimensional inner
/// pairs always use the closed form regardless of this flag.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum InnerSolver {
    #[default]
    Exact,
    Entropic { epsilon: f64 },
}

fn inner_sq(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, inner: InnerSolver) -> Result<f64> {
    if mu.dim() == 1 {
        return Ok(w2_squared(&quantile_of(mu)?, &quantile_of(nu)?));
    }
    match inner {
        InnerSolver::Exact => wasserstein_exact_sq(mu, nu),
        InnerSolver::Entropic { epsilon } => wasserstein_entropic_sq(mu, nu, epsilon),
    }
}

/// `N x M` matrix of squared inner Wasserstein distances.
pub fn inner_cost_matrix(a: &MetaMeasure, b: &MetaMeasure, inner: InnerSolver) -> Result<Array2<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (n, m) = (a.len(), b.len());
    let entries = (0..n * m)
        .into_par_iter()
        .map(|idx| inner_sq(&a.inner()[idx / m], &b.inner()[idx % m], inner))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Array2::from_shape_vec((n, m), entries).expect("n*m entries"))
}

/// Outer transport on a precomputed inner cost matrix; returns the distance.
pub fn wow_from_costs(costs: &Array2<f64>, a_weights: &[f64], b_weights: &[f64]) -> Result<f64> {
    let (_, obj) = solve_exact(&CostMatrix::new(costs.clone())?, a_weights, b_weights)?;
    Ok(obj.max(0.0).sqrt())
}

/// Wasserstein-over-Wasserstein distance.
pub fn wow_exact(a: &MetaMeasure, b: &MetaMeasure, inner: InnerSolver) -> Result<f64> {
    let costs = inner_cost_matrix(a, b, inner)?;
    wow_from_costs(&costs, a.outer_weights(), b.outer_weights())
}

/// All-pairs WoW; each unordered pair is solved once.
pub fn wow_distance_matrix(metas: &[MetaMeasure], inner: InnerSolver) -> Result<Vec<Vec<f64>>> {
    let k = metas.len();
    if k == 0 {
        return Err(Error::Empty("distance matrix needs at least one meta-measure".into()));
    }
    let d = metas[0].dim();
    if let Some(m) = metas.iter().find(|m| m.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.dim(),
        });
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| ((i + 1)..k).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| wow_exact(&metas[i], &metas[j], inner))
        .collect::<Result<Vec<f64>>>()?;
    let mut out = vec![vec![0.0; k]; k];
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        out[i][j] = v;
        out[j][i] = v;
    }
    Ok(out)
}
