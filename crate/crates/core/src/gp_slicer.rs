//! Slicing on `L2([0, 1])` with Gaussian-process directions.
//!
//! A quantile function `q` is projected onto a random path `g` through the
//! quadrature `<q, g> ~ sum_r w_r q(t_r) g(t_r)`. Paths are drawn from a
//! zero-mean Gaussian process evaluated at the knots, i.e. a multivariate
//! normal with covariance `k(t_r, t_s)`, sampled as `L z` with `L` the
//! Cholesky factor of the (jittered) covariance.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ot1d::{Interpolation, Quantile1D};

/// Quadrature knots and weights on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    knots: Vec<f64>,
    weights: Vec<f64>,
}

/// Knot placement of a [`QuadratureGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Equispaced knots including both endpoints, trapezoidal weights.
    #[default]
    Trapezoid,
    /// Cell midpoints `(r - 1/2) / R`, equal weights `1 / R`.
    Midpoint,
}

impl QuadratureGrid {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }
}

/// Equispaced endpoint-inclusive grid with trapezoidal weights.
pub fn make_grid(r: usize) -> Result<QuadratureGrid> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("grid needs R >= 2, got {r}")));
    }
    let h = 1.0 / (r - 1) as f64;
    let knots = (0..r)
        .map(|i| if i == r - 1 { 1.0 } else { i as f64 * h })
        .collect();
    let mut weights = vec![h; r];
    weights[0] = 0.5 * h;
    weights[r - 1] = 0.5 * h;
    Ok(QuadratureGrid { knots, weights })
}

/// Midpoint-rule grid, for knot-placement sensitivity checks.
pub fn make_midpoint_grid(r: usize) -> Result<QuadratureGrid> {
    if r < 1 {
        return Err(Error::InvalidArgument("grid needs R >= 1".into()));
    }
    let h = 1.0 / r as f64;
    Ok(QuadratureGrid {
        knots: (0..r).map(|i| (i as f64 + 0.5) * h).collect(),
        weights: vec![h; r],
    })
}

pub fn make_grid_of_kind(kind: GridKind, r: usize) -> Result<QuadratureGrid> {
    match kind {
        GridKind::Trapezoid => make_grid(r),
        GridKind::Midpoint => make_midpoint_grid(r),
    }
}

/// Covariance kernel of the slicing process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `exp(-|s - t|^2 / (2 sigma^2))`
    Rbf { sigma: f64 },
    /// `min(s, t)`
    BrownianMotion,
}

impl KernelSpec {
    pub fn rbf(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("RBF sigma must be positive, got {sigma}")));
        }
        Ok(KernelSpec::Rbf { sigma })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { sigma } => Self::rbf(sigma).map(|_| ()),
            KernelSpec::BrownianMotion => Ok(()),
        }
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match *self {
            KernelSpec::Rbf { sigma } => {
                let d = s - t;
                (-(d * d) / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::BrownianMotion => s.min(t),
        }
    }
}

/// Values of one sample path at the grid knots.
#[derive(Debug, Clone, PartialEq)]
pub struct GPPathSample {
    pub values: Vec<f64>,
}

/// `R x R` matrix `k(t_r, t_s)`.
pub fn covariance_matrix(kernel: &KernelSpec, grid: &QuadratureGrid) -> Array2<f64> {
    let r = grid.len();
    let t = grid.knots();
    let mut k = Array2::zeros((r, r));
    for i in 0..r {
        for j in 0..=i {
            let v = kernel.eval(t[i], t[j]);
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    k
}

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

/// Lower Cholesky factor, or `None` if a pivot is not positive.
fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Some(l)
}

/// Cholesky with diagonal jitter `1e-10`, escalated x10 up to `1e-6`.
///
/// Returns the factor and the jitter that succeeded.
pub fn jittered_cholesky(cov: &Array2<f64>) -> Result<(Array2<f64>, f64)> {
    let mut jitter = JITTER_START;
    loop {
        let mut a = cov.clone();
        for i in 0..a.nrows() {
            a[[i, i]] += jitter;
        }
        if let Some(l) = cholesky(&a) {
            return Ok((l, jitter));
        }
        if jitter >= JITTER_MAX {
            return Err(Error::Factorization { jitter });
        }
        jitter = (jitter * 10.0).min(JITTER_MAX);
    }
}

/// Reusable path sampler: the factorization is computed once.
#[derive(Debug, Clone)]
pub struct PathSampler {
    factor: Array2<f64>,
    jitter: f64,
}

impl PathSampler {
    pub fn new(kernel: &KernelSpec, grid: &QuadratureGrid) -> Result<Self> {
        kernel.validate()?;
        let (factor, jitter) = jittered_cholesky(&covariance_matrix(kernel, grid))?;
        Ok(Self { factor, jitter })
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GPPathSample {
        let r = self.factor.nrows();
        let z: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
        let values = (0..r)
            .map(|i| (0..=i).map(|k| self.factor[[i, k]] * z[k]).sum())
            .collect();
        GPPathSample { values }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<GPPathSample> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

/// `count` independent paths of the process at the grid knots.
pub fn sample_paths<R: Rng + ?Sized>(
    kernel: &KernelSpec,
    grid: &QuadratureGrid,
    count: usize,
    rng: &mut R,
) -> Result<Vec<GPPathSample>> {
    if count == 0 {
        return Err(Error::InvalidArgument("path count must be >= 1".into()));
    }
    Ok(PathSampler::new(kernel, grid)?.sample_n(count, rng))
}

/// `w_r * q(t_r)` for every knot; dotting with a path gives [`project_quantile`].
pub fn weighted_quantile_row(q: &Quantile1D, grid: &QuadratureGrid, mode: Interpolation) -> Vec<f64> {
    grid.knots
        .iter()
        .zip(&grid.weights)
        .map(|(&t, &w)| w * q.eval_unchecked(t, mode))
        .collect()
}

pub(crate) fn dot(row: &[f64], path: &[f64]) -> f64 {
    row.iter().zip(path).map(|(a, b)| a * b).sum()
}

/// Quadrature inner product `sum_r w_r q(t_r) g(t_r)`.
pub fn project_quantile(
    q: &Quantile1D,
    path: &GPPathSample,
    grid: &QuadratureGrid,
    mode: Interpolation,
) -> Result<f64> {
    if path.values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: path.values.len(),
        });
    }
    Ok(dot(&weighted_quantile_row(q, grid, mode), &path.values))
}

/// Quadrature inner product of sampled function values with a path.
pub fn project_values(values: &[f64], path: &GPPathSample, grid: &QuadratureGrid) -> Result<f64> {
    if path.values.len() != grid.len() || values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: path.values.len().min(values.len()),
        });
    }
    let row: Vec<f64> = grid.weights.iter().zip(values).map(|(w, v)| w * v).collect();
    Ok(dot(&row, &path.values))
}
