//! Sliced distances between meta-measures.
//!
//! - [`sqw`]: sliced-quantile WoW between 1D meta-measures. Each inner
//!   measure is mapped to its quantile function, the quantiles are projected
//!   onto a Gaussian-process path by quadrature, and the resulting scalar
//!   meta-measures are compared with the closed-form 1D Wasserstein distance.
//! - [`dsw`]: double-sliced WoW for meta-measures on `R^d`. A sphere
//!   direction first reduces every inner measure to 1D, then the SQW step
//!   runs on a block of fresh paths for that direction.
//! - [`sw_wow`]: sliced WoW, where each direction is followed by an exact
//!   1D WoW (1D inner costs, exact outer transport).
//!
//! All estimates are root-mean-squares over projections. Direction `s` and
//! its block of paths come from substreams `("direction", s)` and
//! `("gp-path", s)` of the configured seed, so estimators and distance
//! matrices built from the same config see the same projections.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete_ot::{solve_exact, CostMatrix};
use crate::error::{Error, Result};
use crate::gp_slicer::{
    dot, make_grid, weighted_quantile_row, GPPathSample, KernelSpec, PathSampler, QuadratureGrid,
};
use crate::measures::MetaMeasure;
use crate::ot1d::{w2_squared, Interpolation, Quantile1D};
use crate::rng::SeedStream;
use crate::sphere::{projected_values, sample_direction, Direction};
use crate::stats::{mean, pairwise_sum, sample_std};

pub(crate) const TAG_DIRECTION: &str = "direction";
pub(crate) const TAG_PATHS: &str = "gp-path";

/// Directions processed per reduction chunk in the matrix builders.
const MATRIX_CHUNK: usize = 64;

/// Monte Carlo configuration shared by the sliced estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicingConfig {
    /// Number of sphere directions (or path blocks for 1D inputs).
    pub outer_s: usize,
    /// Paths drawn per direction.
    pub inner_per_outer: usize,
    pub grid: QuadratureGrid,
    pub kernel: KernelSpec,
    pub interpolation: Interpolation,
    pub seed: u64,
}

impl SlicingConfig {
    /// Trapezoidal grid with `r` knots.
    pub fn new(
        outer_s: usize,
        inner_per_outer: usize,
        r: usize,
        kernel: KernelSpec,
        interpolation: Interpolation,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            outer_s,
            inner_per_outer,
            grid: make_grid(r)?,
            kernel,
            interpolation,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer_s == 0 || self.inner_per_outer == 0 {
            return Err(Error::InvalidArgument(format!(
                "projection counts must be >= 1 (outer {}, inner {})",
                self.outer_s, self.inner_per_outer
            )));
        }
        self.kernel.validate()
    }

    /// Total number of projections `S`.
    pub fn total(&self) -> usize {
        self.outer_s * self.inner_per_outer
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    fn streams(&self) -> SeedStream {
        SeedStream::new(self.seed)
    }

    pub fn sampler(&self) -> Result<PathSampler> {
        PathSampler::new(&self.kernel, &self.grid)
    }

    /// The `s`-th block of `inner_per_outer` paths.
    pub fn path_block(&self, sampler: &PathSampler, s: usize) -> Vec<GPPathSample> {
        sampler.sample_n(
            self.inner_per_outer,
            &mut self.streams().substream(TAG_PATHS, s as u64),
        )
    }

    /// The `s`-th sphere direction in `R^d`.
    pub fn direction(&self, d: usize, s: usize) -> Direction {
        sample_direction(d, &mut self.streams().substream(TAG_DIRECTION, s as u64))
    }

    /// All `S` paths, block after block.
    pub fn sample_paths(&self) -> Result<Vec<GPPathSample>> {
        let sampler = self.sampler()?;
        Ok((0..self.outer_s)
            .into_par_iter()
            .map(|s| self.path_block(&sampler, s))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect())
    }
}

/// A Monte Carlo distance with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Number of projections averaged.
    #[serde(rename = "S")]
    pub s: usize,
}

impl DistanceEstimate {
    /// Root of the mean of `terms` (squared 1D distances).
    ///
    /// Terms come in consecutive blocks of `block` sharing one direction; the
    /// standard error of the mean uses block means whenever there are at
    /// least two blocks, and is carried to the root by the delta method.
    pub fn from_squared_terms(terms: &[f64], block: usize) -> Self {
        let s = terms.len();
        let m = mean(terms).max(0.0);
        let value = m.sqrt();
        let block = block.max(1);
        let se_mean = if s / block >= 2 && s.is_multiple_of(block) {
            let means: Vec<f64> = terms.chunks(block).map(mean).collect();
            sample_std(&means) / (means.len() as f64).sqrt()
        } else {
            sample_std(terms) / (s as f64).sqrt()
        };
        let std_error = if value > 0.0 { se_mean / (2.0 * value) } else { 0.0 };
        Self {
            value,
            std_error,
            s,
        }
    }

    /// Squared estimate and the standard error of that mean.
    pub fn squared(&self) -> (f64, f64) {
        (self.value * self.value, 2.0 * self.value * self.std_error)
    }
}

/// Weighted quantile rows `w_r q_i(t_r)` of the inner measures of a 1D slice.
struct Embedded<'a> {
    rows: Vec<Vec<f64>>,
    weights: &'a [f64],
}

impl Embedded<'_> {
    fn scalars(&self, path: &GPPathSample) -> Vec<f64> {
        self.rows.iter().map(|r| dot(r, &path.values)).collect()
    }

    fn quantile(&self, path: &GPPathSample) -> Quantile1D {
        Quantile1D::from_weighted(&self.scalars(path), self.weights)
    }
}

fn embed_1d<'a>(meta: &'a MetaMeasure, grid: &QuadratureGrid, mode: Interpolation) -> Result<Embedded<'a>> {
    let rows = meta
        .inner()
        .iter()
        .map(|m| {
            let v = m.values_1d()?;
            let q = Quantile1D::from_weighted(&v, m.weights());
            Ok(weighted_quantile_row(&q, grid, mode))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Embedded {
        rows,
        weights: meta.outer_weights(),
    })
}

fn projected_quantiles(meta: &MetaMeasure, theta: &Direction) -> Vec<Quantile1D> {
    meta.inner()
        .iter()
        .map(|m| {
            let v = projected_values(m, theta).expect("dimension checked by caller");
            Quantile1D::from_weighted(&v, m.weights())
        })
        .collect()
}

fn embed_projected<'a>(
    meta: &'a MetaMeasure,
    theta: &Direction,
    grid: &QuadratureGrid,
    mode: Interpolation,
) -> Embedded<'a> {
    let rows = projected_quantiles(meta, theta)
        .iter()
        .map(|q| weighted_quantile_row(q, grid, mode))
        .collect();
    Embedded {
        rows,
        weights: meta.outer_weights(),
    }
}

fn check_same_dim(a: &MetaMeasure, b: &MetaMeasure) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

fn check_paths(paths: &[GPPathSample], grid: &QuadratureGrid) -> Result<()> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("at least one path is required".into()));
    }
    if let Some(p) = paths.iter().find(|p| p.values.len() != grid.len()) {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: p.values.len(),
        });
    }
    Ok(())
}

fn require_1d(meta: &MetaMeasure) -> Result<()> {
    if meta.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: meta.dim(),
        });
    }
    Ok(())
}

/// Per-path squared SQW terms.
pub fn sqw_terms(
    a: &MetaMeasure,
    b: &MetaMeasure,
    paths: &[GPPathSample],
    grid: &QuadratureGrid,
    interpolation: Interpolation,
) -> Result<Vec<f64>> {
    require_1d(a)?;
    require_1d(b)?;
    check_paths(paths, grid)?;
    let ea = embed_1d(a, grid, interpolation)?;
    let eb = embed_1d(b, grid, interpolation)?;
    Ok(paths
        .par_iter()
        .map(|g| w2_squared(&ea.quantile(g), &eb.quantile(g)))
        .collect())
}

/// Sliced-quantile WoW between two 1D meta-measures over the given paths.
pub fn sqw(
    a: &MetaMeasure,
    b: &MetaMeasure,
    paths: &[GPPathSample],
    grid: &QuadratureGrid,
    interpolation: Interpolation,
) -> Result<DistanceEstimate> {
    let terms = sqw_terms(a, b, paths, grid, interpolation)?;
    Ok(DistanceEstimate::from_squared_terms(&terms, 1))
}

/// [`sqw`] with all `S` paths drawn from `config`.
pub fn sqw_with_config(a: &MetaMeasure, b: &MetaMeasure, config: &SlicingConfig) -> Result<DistanceEstimate> {
    config.validate()?;
    let paths = config.sample_paths()?;
    sqw(a, b, &paths, &config.grid, config.interpolation)
}

/// Squared DSW terms, grouped by direction (`inner_per_outer` per block).
pub fn dsw_terms(a: &MetaMeasure, b: &MetaMeasure, config: &SlicingConfig) -> Result<Vec<f64>> {
    check_same_dim(a, b)?;
    config.validate()?;
    let sampler = config.sampler()?;
    let d = a.dim();
    let blocks: Vec<Vec<f64>> = (0..config.outer_s)
        .into_par_iter()
        .map(|s| {
            let theta = config.direction(d, s);
            let paths = config.path_block(&sampler, s);
            let ea = embed_projected(a, &theta, &config.grid, config.interpolation);
            let eb = embed_projected(b, &theta, &config.grid, config.interpolation);
            paths
                .iter()
                .map(|g| w2_squared(&ea.quantile(g), &eb.quantile(g)))
                .collect()
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

/// Double-sliced WoW estimate.
pub fn dsw(a: &MetaMeasure, b: &MetaMeasure, config: &SlicingConfig) -> Result<DistanceEstimate> {
    let terms = dsw_terms(a, b, config)?;
    Ok(DistanceEstimate::from_squared_terms(&terms, config.inner_per_outer))
}

/// Squared 1D WoW between the projections of `a` and `b` along `theta`.
fn projected_wow_sq(a: &MetaMeasure, b: &MetaMeasure, theta: &Direction) -> Result<f64> {
    let qa = projected_quantiles(a, theta);
    let qb = projected_quantiles(b, theta);
    let cost = ndarray::Array2::from_shape_fn((qa.len(), qb.len()), |(i, j)| w2_squared(&qa[i], &qb[j]));
    let (_, obj) = solve_exact(&CostMatrix::new(cost)?, a.outer_weights(), b.outer_weights())?;
    Ok(obj.max(0.0))
}

/// Sliced WoW: exact 1D WoW along `outer_s` random directions.
pub fn sw_wow(a: &MetaMeasure, b: &MetaMeasure, outer_s: usize, seed: u64) -> Result<DistanceEstimate> {
    check_same_dim(a, b)?;
    if outer_s == 0 {
        return Err(Error::InvalidArgument("outer_S must be >= 1".into()));
    }
    let streams = SeedStream::new(seed);
    let d = a.dim();
    let terms = (0..outer_s)
        .into_par_iter()
        .map(|s| {
            let theta = sample_direction(d, &mut streams.substream(TAG_DIRECTION, s as u64));
            projected_wow_sq(a, b, &theta)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DistanceEstimate::from_squared_terms(&terms, 1))
}

/// Index of pair `(i, j)`, `i < j`, in the packed upper triangle.
fn pair_index(k: usize, i: usize, j: usize) -> usize {
    i * k - i * (i + 1) / 2 + (j - i - 1)
}

/// Shared-projection distance matrix; `project = false` treats the metas as
/// 1D and uses path blocks only (SQW), otherwise each block gets a direction.
fn shared_matrix(metas: &[MetaMeasure], config: &SlicingConfig, project: bool) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let k = metas.len();
    if k == 0 {
        return Err(Error::Empty("distance matrix needs at least one meta-measure".into()));
    }
    let d = metas[0].dim();
    for m in metas {
        if m.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.dim(),
            });
        }
    }
    if !project && d != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: d });
    }
    let npairs = k * (k - 1) / 2;
    let sampler = config.sampler()?;

    // precomputed once when there is no direction
    let fixed: Option<Vec<Embedded>> = if project {
        None
    } else {
        Some(
            metas
                .iter()
                .map(|m| embed_1d(m, &config.grid, config.interpolation))
                .collect::<Result<_>>()?,
        )
    };

    let block_sums = |s: usize| -> Vec<f64> {
        let paths = config.path_block(&sampler, s);
        let owned;
        let emb: &[Embedded] = match &fixed {
            Some(e) => e,
            None => {
                let theta = config.direction(d, s);
                owned = metas
                    .iter()
                    .map(|m| embed_projected(m, &theta, &config.grid, config.interpolation))
                    .collect::<Vec<_>>();
                &owned
            }
        };
        let mut acc = vec![0.0; npairs];
        for g in &paths {
            let qs: Vec<Quantile1D> = emb.iter().map(|e| e.quantile(g)).collect();
            for i in 0..k {
                for j in (i + 1)..k {
                    acc[pair_index(k, i, j)] += w2_squared(&qs[i], &qs[j]);
                }
            }
        }
        acc
    };

    let mut chunk_sums: Vec<Vec<f64>> = Vec::new();
    for start in (0..config.outer_s).step_by(MATRIX_CHUNK) {
        let end = (start + MATRIX_CHUNK).min(config.outer_s);
        let blocks: Vec<Vec<f64>> = (start..end).into_par_iter().map(block_sums).collect();
        let mut col = vec![0.0; blocks.len()];
        let reduced = (0..npairs)
            .map(|p| {
                for (c, b) in col.iter_mut().zip(&blocks) {
                    *c = b[p];
                }
                pairwise_sum(&col)
            })
            .collect();
        chunk_sums.push(reduced);
    }

    let total = config.total() as f64;
    let mut out = vec![vec![0.0; k]; k];
    let mut col = vec![0.0; chunk_sums.len()];
    for i in 0..k {
        for j in (i + 1)..k {
            let p = pair_index(k, i, j);
            for (c, chunk) in col.iter_mut().zip(&chunk_sums) {
                *c = chunk[p];
            }
            let v = (pairwise_sum(&col) / total).max(0.0).sqrt();
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    Ok(out)
}

/// All-pairs DSW with one shared set of directions and paths.
///
/// Every entry is a root-mean-square of per-projection 1D distances over the
/// same projections, so the matrix is an exact pseudo-metric up to rounding.
pub fn dsw_distance_matrix(metas: &[MetaMeasure], config: &SlicingConfig) -> Result<Vec<Vec<f64>>> {
    shared_matrix(metas, config, true)
}

/// All-pairs SQW between 1D meta-measures with shared paths.
pub fn sqw_distance_matrix(metas: &[MetaMeasure], config: &SlicingConfig) -> Result<Vec<Vec<f64>>> {
    shared_matrix(metas, config, false)
}

/// Sliced distance between uniform empirical measures on `L2([0, 1])`.
///
/// Each function is given by its values at the grid knots; it is projected
/// onto each path by quadrature and the scalar samples are compared with the
/// 1D Wasserstein distance.
pub fn sliced_functional(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    paths: &[GPPathSample],
    grid: &QuadratureGrid,
) -> Result<DistanceEstimate> {
    check_paths(paths, grid)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("function sample".into()));
    }
    let weigh = |fs: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
        fs.iter()
            .map(|f| {
                if f.len() != grid.len() {
                    return Err(Error::DimensionMismatch {
                        expected: grid.len(),
                        found: f.len(),
                    });
                }
                Ok(f.iter().zip(grid.weights()).map(|(v, w)| w * v).collect())
            })
            .collect()
    };
    let (ra, rb) = (weigh(a)?, weigh(b)?);
    let (wa, wb) = (vec![1.0 / a.len() as f64; a.len()], vec![1.0 / b.len() as f64; b.len()]);
    let ea = Embedded { rows: ra, weights: &wa };
    let eb = Embedded { rows: rb, weights: &wb };
    let terms: Vec<f64> = paths
        .par_iter()
        .map(|g| w2_squared(&ea.quantile(g), &eb.quantile(g)))
        .collect();
    Ok(DistanceEstimate::from_squared_terms(&terms, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_ot::wasserstein_exact;
    use crate::gp_slicer::sample_paths;
    use crate::measures::{build_meta, EmpiricalMeasure};
    use crate::wow::{wow_exact, InnerSolver};
    use ndarray::Array2;
    use rand::Rng;

    fn config(outer: usize, inner: usize, seed: u64) -> SlicingConfig {
        SlicingConfig::new(outer, inner, 20, KernelSpec::rbf(0.1).unwrap(), Interpolation::Linear, seed).unwrap()
    }

    fn dirac_meta(points: &[&[f64]]) -> MetaMeasure {
        build_meta(points.iter().map(|p| EmpiricalMeasure::dirac(p).unwrap()).collect(), None).unwrap()
    }

    fn random_meta(rng: &mut impl Rng, n_inner: usize, n_pts: usize, d: usize) -> MetaMeasure {
        let inner = (0..n_inner)
            .map(|_| {
                let pts = Array2::from_shape_fn((n_pts, d), |_| rng.random_range(-1.0..1.0));
                EmpiricalMeasure::uniform(pts).unwrap()
            })
            .collect();
        build_meta(inner, None).unwrap()
    }

    fn random_meta_1d(rng: &mut impl Rng, n_inner: usize, n_pts: usize) -> MetaMeasure {
        random_meta(rng, n_inner, n_pts, 1)
    }

    #[test]
    fn estimate_from_terms() {
        let e = DistanceEstimate::from_squared_terms(&[0.0, 0.0], 1);
        assert_eq!((e.value, e.std_error, e.s), (0.0, 0.0, 2));
        let e = DistanceEstimate::from_squared_terms(&[1.0, 3.0, 1.0, 3.0], 1);
        assert!((e.value - 2f64.sqrt()).abs() < 1e-15);
        assert!(e.std_error > 0.0);
        // two identical blocks: no between-block spread
        let e = DistanceEstimate::from_squared_terms(&[1.0, 3.0, 1.0, 3.0], 2);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn sqw_identical_is_zero_and_symmetric() {
        let mut rng = SeedStream::new(4).substream("t", 0);
        let a = random_meta_1d(&mut rng, 5, 7);
        let b = random_meta_1d(&mut rng, 3, 4);
        let grid = make_grid(15).unwrap();
        let paths = sample_paths(&KernelSpec::rbf(0.1).unwrap(), &grid, 200, &mut rng).unwrap();
        for mode in [Interpolation::Step, Interpolation::Linear] {
            assert_eq!(sqw(&a, &a, &paths, &grid, mode).unwrap().value, 0.0);
            let ab = sqw(&a, &b, &paths, &grid, mode).unwrap();
            let ba = sqw(&b, &a, &paths, &grid, mode).unwrap();
            assert_eq!(ab, ba);
            assert!(ab.value > 0.0);
        }
    }

    #[test]
    fn sqw_dirac_closed_form() {
        let (c1, c2) = (1.5, -0.75);
        let a = dirac_meta(&[&[c1]]);
        let b = dirac_meta(&[&[c2]]);
        let grid = make_grid(12).unwrap();
        let mut rng = SeedStream::new(9).substream("t", 0);
        let paths = sample_paths(&KernelSpec::rbf(0.2).unwrap(), &grid, 500, &mut rng).unwrap();
        let est = sqw(&a, &b, &paths, &grid, Interpolation::Linear).unwrap();
        let sq: Vec<f64> = paths
            .iter()
            .map(|g| {
                let wg: f64 = grid.weights().iter().zip(&g.values).map(|(w, x)| w * x).sum();
                wg * wg
            })
            .collect();
        let expect = (c1 - c2).abs() * mean(&sq).sqrt();
        assert!((est.value - expect).abs() < 1e-12 * expect.max(1.0));
    }

    #[test]
    fn sqw_rejects_bad_input() {
        let grid = make_grid(5).unwrap();
        let a = dirac_meta(&[&[0.0, 1.0]]);
        let b = dirac_meta(&[&[0.0]]);
        let paths = vec![GPPathSample { values: vec![0.0; 5] }];
        assert!(sqw(&a, &b, &paths, &grid, Interpolation::Step).is_err());
        assert!(sqw(&b, &b, &[], &grid, Interpolation::Step).is_err());
        let bad = vec![GPPathSample { values: vec![0.0; 4] }];
        assert!(sqw(&b, &b, &bad, &grid, Interpolation::Step).is_err());
    }

    #[test]
    fn dsw_identical_is_zero() {
        let mut rng = SeedStream::new(5).substream("t", 0);
        let a = random_meta(&mut rng, 4, 6, 3);
        assert_eq!(dsw(&a, &a, &config(10, 5, 1)).unwrap().value, 0.0);
    }

    #[test]
    fn dsw_dirac_closed_form() {
        let x = [0.5, -1.0, 2.0];
        let y = [1.5, 0.25, -0.5];
        let a = dirac_meta(&[&x]);
        let b = dirac_meta(&[&y]);
        let cfg = config(30, 4, 17);
        let est = dsw(&a, &b, &cfg).unwrap();
        let sampler = cfg.sampler().unwrap();
        let mut sq = Vec::new();
        for s in 0..cfg.outer_s {
            let th = cfg.direction(3, s);
            let proj: f64 = th.as_slice().iter().zip(x.iter().zip(&y)).map(|(t, (p, q))| t * (p - q)).sum();
            for g in cfg.path_block(&sampler, s) {
                let wg: f64 = cfg.grid.weights().iter().zip(&g.values).map(|(w, v)| w * v).sum();
                sq.push(proj * proj * wg * wg);
            }
        }
        let expect = mean(&sq).sqrt();
        assert!((est.value - expect).abs() < 1e-12, "{} vs {expect}", est.value);
        assert_eq!(est.s, 120);
    }

    #[test]
    fn dsw_is_one_homogeneous() {
        let mut rng = SeedStream::new(6).substream("t", 0);
        let a = random_meta(&mut rng, 3, 5, 2);
        let b = random_meta(&mut rng, 4, 3, 2);
        let double = |m: &MetaMeasure| {
            m.map_inner(|mu| mu.map_points(|x| x.iter().map(|v| 2.0 * v).collect()))
                .unwrap()
        };
        let cfg = config(20, 5, 3);
        let base = dsw(&a, &b, &cfg).unwrap().value;
        let scaled = dsw(&double(&a), &double(&b), &cfg).unwrap().value;
        assert_eq!(scaled, 2.0 * base);
    }

    #[test]
    fn dsw_is_deterministic_and_symmetric() {
        let mut rng = SeedStream::new(7).substream("t", 0);
        let a = random_meta(&mut rng, 3, 5, 2);
        let b = random_meta(&mut rng, 2, 6, 2);
        let cfg = config(25, 4, 8);
        assert_eq!(dsw(&a, &b, &cfg).unwrap(), dsw(&a, &b, &cfg).unwrap());
        assert_eq!(dsw(&a, &b, &cfg).unwrap().value, dsw(&b, &a, &cfg).unwrap().value);
        let c = random_meta(&mut rng, 2, 2, 3);
        assert!(dsw(&a, &c, &cfg).is_err());
    }

    #[test]
    fn sw_wow_examples() {
        let mut rng = SeedStream::new(8).substream("t", 0);
        let a = random_meta(&mut rng, 3, 4, 2);
        assert_eq!(sw_wow(&a, &a, 50, 1).unwrap().value, 0.0);

        // N = M = 1: plain sliced Wasserstein of the single pair
        let mu = EmpiricalMeasure::uniform(Array2::from_shape_fn((5, 2), |_| rng.random_range(-1.0..1.0))).unwrap();
        let nu = EmpiricalMeasure::uniform(Array2::from_shape_fn((3, 2), |_| rng.random_range(-1.0..1.0))).unwrap();
        let (ma, mb) = (build_meta(vec![mu.clone()], None).unwrap(), build_meta(vec![nu.clone()], None).unwrap());
        let est = sw_wow(&ma, &mb, 40, 2).unwrap();
        let streams = SeedStream::new(2);
        let sq: Vec<f64> = (0..40)
            .map(|s| {
                let th = sample_direction(2, &mut streams.substream(TAG_DIRECTION, s));
                let pa = crate::sphere::project_measure(&mu, &th).unwrap();
                let pb = crate::sphere::project_measure(&nu, &th).unwrap();
                crate::ot1d::wasserstein_1d(&pa, &pb).unwrap().powi(2)
            })
            .collect();
        assert!((est.value - mean(&sq).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sw_wow_below_wow() {
        let mut rng = SeedStream::new(12).substream("t", 0);
        for trial in 0..10 {
            let a = random_meta(&mut rng, 3, 4, 3);
            let b = random_meta(&mut rng, 2, 5, 3);
            let sw = sw_wow(&a, &b, 200, trial).unwrap();
            let w = wow_exact(&a, &b, InnerSolver::Exact).unwrap();
            assert!(sw.value <= w + 1e-9, "{} > {w}", sw.value);
        }
    }

    #[test]
    fn matrices_share_projections() {
        let mut rng = SeedStream::new(10).substream("t", 0);
        let metas: Vec<MetaMeasure> = (0..5).map(|_| random_meta(&mut rng, 3, 4, 2)).collect();
        let cfg = config(70, 3, 21);
        let m = dsw_distance_matrix(&metas, &cfg).unwrap();
        for i in 0..5 {
            assert_eq!(m[i][i], 0.0);
            for j in 0..5 {
                assert_eq!(m[i][j], m[j][i]);
                let single = dsw(&metas[i], &metas[j], &cfg).unwrap().value;
                assert!((m[i][j] - single).abs() < 1e-12 * (1.0 + single));
                for l in 0..5 {
                    assert!(m[i][l] <= m[i][j] + m[j][l] + 1e-10);
                }
            }
        }
        let one = dsw_distance_matrix(&metas[..1], &cfg).unwrap();
        assert_eq!(one, vec![vec![0.0]]);
        let dup = vec![metas[0].clone(), metas[1].clone(), metas[0].clone()];
        assert_eq!(dsw_distance_matrix(&dup, &cfg).unwrap()[0][2], 0.0);
    }

    #[test]
    fn sqw_matrix_matches_pairwise_calls() {
        let mut rng = SeedStream::new(13).substream("t", 0);
        let metas: Vec<MetaMeasure> = (0..4).map(|_| random_meta_1d(&mut rng, 4, 5)).collect();
        let cfg = config(3, 50, 2);
        let m = sqw_distance_matrix(&metas, &cfg).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let e = sqw_with_config(&metas[i], &metas[j], &cfg).unwrap().value;
                assert!((m[i][j] - e).abs() < 1e-12 * (1.0 + e));
            }
        }
        let mixed = vec![metas[0].clone(), random_meta(&mut rng, 2, 2, 2)];
        assert!(sqw_distance_matrix(&mixed, &cfg).is_err());
    }

    #[test]
    fn dsw_positive_for_distinct_dirac_metas() {
        let a = dirac_meta(&[&[0.0, 0.0]]);
        let b = dirac_meta(&[&[1.0, 0.0]]);
        let e = dsw(&a, &b, &config(200, 5, 3)).unwrap();
        assert!(e.value > 5.0 * e.std_error);
        // projection bound: sliced distances never exceed the ground distance
        let w = wasserstein_exact(a.inner().first().unwrap(), b.inner().first().unwrap()).unwrap();
        assert!(sw_wow(&a, &b, 100, 1).unwrap().value <= w + 1e-12);
    }

    #[test]
    fn functional_slicing_zero_on_identical_samples() {
        let grid = make_grid(30).unwrap();
        let f: Vec<Vec<f64>> = (1..4)
            .map(|i| grid.knots().iter().map(|t| (i as f64 * t).cos()).collect())
            .collect();
        let mut rng = SeedStream::new(1).substream("t", 0);
        let paths = sample_paths(&KernelSpec::rbf(0.1).unwrap(), &grid, 50, &mut rng).unwrap();
        assert_eq!(sliced_functional(&f, &f, &paths, &grid).unwrap().value, 0.0);
        let g: Vec<Vec<f64>> = f.iter().map(|v| v.iter().map(|x| x + 1.0).collect()).collect();
        assert!(sliced_functional(&f, &g, &paths, &grid).unwrap().value > 0.0);
    }
}
