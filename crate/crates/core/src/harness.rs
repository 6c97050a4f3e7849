//! Experiment pipelines: KNN classification on precomputed distances,
//! point-cloud batch evaluation, Monte Carlo rate diagnostics, bound checks,
//! and the synthetic shape families used by all of them.

use std::f64::consts::PI;
use std::fmt::Write as _;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{build_meta, EmpiricalMeasure, MetaMeasure};
use crate::patches::{batch_to_meta, perlin_batch, PerlinParams};
use crate::rng::SeedStream;
use crate::sqw_dsw::{dsw, sw_wow, DistanceEstimate, SlicingConfig};
use crate::stats::{mean, ols_slope, sample_std};
use crate::wow::{wow_exact, InnerSolver};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnConfig {
    pub k: usize,
    /// Share of items used for training in each split.
    pub train_fraction: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 3,
            train_fraction: 0.25,
            trials: 1000,
            seed: 0,
        }
    }
}

impl KnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.trials == 0 {
            return Err(Error::InvalidArgument("k and trials must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train_fraction {} not in (0, 1)",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

fn check_distance_matrix(dist: &[Vec<f64>]) -> Result<()> {
    let k = dist.len();
    for (i, row) in dist.iter().enumerate() {
        if row.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("distance row {i}")));
        }
        if row[i] != 0.0 {
            return Err(Error::InvalidArgument(format!("nonzero diagonal entry at {i}")));
        }
        if (0..i).any(|j| row[j] != dist[j][i]) {
            return Err(Error::InvalidArgument("distance matrix is not symmetric".into()));
        }
    }
    Ok(())
}

/// Majority label among the `k` nearest training items of `item`.
///
/// Neighbors are ordered by `(distance, index)`. Vote ties go to the label
/// with the smallest summed neighbor distance, then to the label of the
/// lowest-index neighbor.
fn vote(dist: &[Vec<f64>], labels: &[usize], train: &[usize], item: usize, k: usize) -> usize {
    let mut nn: Vec<usize> = train.to_vec();
    nn.sort_by(|&a, &b| dist[item][a].total_cmp(&dist[item][b]).then(a.cmp(&b)));
    nn.truncate(k);
    // (label, votes, summed distance, lowest neighbor index)
    let mut tally: Vec<(usize, usize, f64, usize)> = Vec::new();
    for &j in &nn {
        match tally.iter_mut().find(|t| t.0 == labels[j]) {
            Some(t) => {
                t.1 += 1;
                t.2 += dist[item][j];
                t.3 = t.3.min(j);
            }
            None => tally.push((labels[j], 1, dist[item][j], j)),
        }
    }
    tally
        .into_iter()
        .min_by(|a, b| b.1.cmp(&a.1).then(a.2.total_cmp(&b.2)).then(a.3.cmp(&b.3)))
        .expect("at least one neighbor")
        .0
}

/// KNN accuracy over random train/test splits: `(mean, std)` across trials.
///
/// Each trial draws `round(train_fraction * K)` training items uniformly
/// without replacement (clamped to `1..=K-1`) and classifies every remaining
/// item. Trial `t` uses substream `("knn-split", t)`.
pub fn knn_classify(dist: &[Vec<f64>], labels: &[String], cfg: &KnnConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    let n = dist.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("KNN needs at least 2 items, got {n}")));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    check_distance_matrix(dist)?;
    let mut names: Vec<&str> = Vec::new();
    let ids: Vec<usize> = labels
        .iter()
        .map(|l| match names.iter().position(|n| n == l) {
            Some(p) => p,
            None => {
                names.push(l);
                names.len() - 1
            }
        })
        .collect();
    if names.len() < 2 {
        return Err(Error::Degenerate("all items share one label".into()));
    }

    let n_train = ((cfg.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let streams = SeedStream::new(cfg.seed);
    let acc: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut streams.substream("knn-split", t as u64));
            let (train, test) = order.split_at(n_train);
            let correct = test
                .iter()
                .filter(|&&i| vote(dist, &ids, train, i, cfg.k) == ids[i])
                .count();
            correct as f64 / test.len() as f64
        })
        .collect();
    Ok((mean(&acc), sample_std(&acc)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub param: f64,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
}

/// Tabular experiment output; one row per swept parameter value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,metric,mean,std\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.param, r.metric, r.mean, r.std).unwrap();
        }
        out
    }

    pub fn means(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean).collect()
    }

    pub fn stds(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.std).collect()
    }

    /// Parameter of the row with the smallest mean (first on ties).
    pub fn argmin(&self) -> Option<f64> {
        self.rows
            .iter()
            .min_by(|a, b| a.mean.total_cmp(&b.mean))
            .map(|r| r.param)
    }
}

/// Spread of squared DSW estimates against the projection count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub report: EvalReport,
    /// Least-squares slope of `log std` against `log S`; `None` when any
    /// std is zero.
    pub slope: Option<f64>,
}

/// Runs `reps` independent-seed squared DSW estimates for each `S` in
/// `s_list` (projections in total, `inner_per_outer` per direction).
pub fn mc_convergence_report(
    a: &MetaMeasure,
    b: &MetaMeasure,
    s_list: &[usize],
    reps: usize,
    base: &SlicingConfig,
) -> Result<McReport> {
    base.validate()?;
    if reps < 2 {
        return Err(Error::InvalidArgument(format!("reps must be >= 2, got {reps}")));
    }
    if s_list.is_empty() || s_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("S list must be nonempty and strictly ascending".into()));
    }
    let block = base.inner_per_outer;
    if let Some(s) = s_list.iter().find(|&&s| s == 0 || s % block != 0) {
        return Err(Error::InvalidArgument(format!(
            "S = {s} is not a positive multiple of {block} paths per direction"
        )));
    }
    let streams = SeedStream::new(base.seed);
    let mut rows = Vec::with_capacity(s_list.len());
    for (si, &s) in s_list.iter().enumerate() {
        let estimates = (0..reps)
            .into_par_iter()
            .map(|r| {
                let seed = streams.child("mc-rep", (si * reps + r) as u64).master();
                let cfg = SlicingConfig {
                    outer_s: s / block,
                    seed,
                    ..base.clone()
                };
                Ok(dsw(a, b, &cfg)?.squared().0)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(EvalRow {
            param: s as f64,
            metric: "dsw_sq".into(),
            mean: mean(&estimates),
            std: sample_std(&estimates),
        });
    }
    let slope = if rows.iter().all(|r| r.std > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| r.param.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.std.ln()).collect();
        ols_slope(&xs, &ys)
    } else {
        None
    };
    Ok(McReport {
        report: EvalReport { rows },
        slope,
    })
}

/// DSW, sliced WoW and exact WoW side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub dsw: DistanceEstimate,
    pub sw_wow: DistanceEstimate,
    pub wow: f64,
    /// `dsw <= sw_wow + 3 sigma` with the two standard errors combined.
    pub lower_ok: bool,
    /// `sw_wow <= wow + 3 sigma`.
    pub upper_ok: bool,
}

impl BoundReport {
    pub fn pass(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Checks the ordering `dsw <= sw_wow <= wow` up to three standard errors.
/// Sliced WoW uses `config.total()` directions from the same seed.
pub fn bound_check_report(a: &MetaMeasure, b: &MetaMeasure, config: &SlicingConfig) -> Result<BoundReport> {
    let wow = wow_exact(a, b, InnerSolver::Exact)?;
    let d = dsw(a, b, config)?;
    let s = sw_wow(a, b, config.total(), config.seed)?;
    let sigma = d.std_error.hypot(s.std_error);
    // equal sides (e.g. d = 1, where sliced WoW is WoW) differ by rounding only
    let slack = |v: f64| 1e-12 * v.abs().max(1.0);
    Ok(BoundReport {
        dsw: d,
        sw_wow: s,
        wow,
        lower_ok: d.value <= s.value + 3.0 * sigma + slack(s.value),
        upper_ok: s.value <= wow + 3.0 * s.std_error + slack(wow),
    })
}

/// Batch metric used by [`pointcloud_eval`].
#[derive(Debug, Clone, PartialEq)]
pub enum BatchMetric {
    /// DSW; each repetition reseeds the config.
    Dsw(SlicingConfig),
    Wow(InnerSolver),
}

impl BatchMetric {
    pub fn name(&self) -> &'static str {
        match self {
            BatchMetric::Dsw(_) => "dsw",
            BatchMetric::Wow(_) => "wow",
        }
    }

    fn eval(&self, a: &MetaMeasure, b: &MetaMeasure, seed: u64) -> Result<f64> {
        match self {
            BatchMetric::Dsw(cfg) => Ok(dsw(a, b, &cfg.with_seed(seed))?.value),
            BatchMetric::Wow(inner) => wow_exact(a, b, *inner),
        }
    }
}

/// Which target parameter a point-cloud sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Number of target shapes `M`.
    Shapes,
    /// Gaussian noise level.
    Noise,
    /// Points per target shape `m`.
    Points,
}

/// Sweep values plus the defaults for the parameters held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub shapes: usize,
    pub noise: f64,
    pub points: usize,
}

impl Sweep {
    fn cell(&self, v: f64) -> Result<(usize, f64, usize)> {
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidArgument(format!("sweep value {v} is not a positive integer")))
            }
        };
        Ok(match self.axis {
            SweepAxis::Shapes => (count(v)?, self.noise, self.points),
            SweepAxis::Noise => {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidArgument(format!("noise level {v} must be >= 0")));
                }
                (self.shapes, v, self.points)
            }
            SweepAxis::Points => (self.shapes, self.noise, count(v)?),
        })
    }
}

/// Scores target batches against a fixed reference for each sweep value.
///
/// `target_builder(M, noise, m, seed)` builds one target batch. Repetition
/// `r` uses the seed `("pointcloud", r)` in every cell, split into children
/// for the target and the metric, so cells differ only in the swept
/// parameter.
pub fn pointcloud_eval<F>(
    reference: &MetaMeasure,
    target_builder: F,
    sweep: &Sweep,
    metric: &BatchMetric,
    reps: usize,
    seed: u64,
) -> Result<EvalReport>
where
    F: Fn(usize, f64, usize, u64) -> Result<MetaMeasure> + Sync,
{
    if reps == 0 || sweep.values.is_empty() {
        return Err(Error::InvalidArgument("need at least one sweep value and one repetition".into()));
    }
    let cells = sweep
        .values
        .iter()
        .map(|&v| sweep.cell(v))
        .collect::<Result<Vec<_>>>()?;
    let streams = SeedStream::new(seed);
    let mut rows = Vec::with_capacity(cells.len());
    for (c, &(shapes, noise, points)) in cells.iter().enumerate() {
        let scores = (0..reps)
            .into_par_iter()
            .map(|r| {
                let rep = streams.child("pointcloud", r as u64);
                let target = target_builder(shapes, noise, points, rep.child("target", 0).master())?;
                metric.eval(reference, &target, rep.child("metric", 0).master())
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(EvalRow {
            param: sweep.values[c],
            metric: metric.name().into(),
            mean: mean(&scores),
            std: sample_std(&scores),
        });
    }
    Ok(EvalReport { rows })
}

/// Perlin batches at several lacunarities scored against a reference batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureSweep {
    pub height: usize,
    pub width: usize,
    pub patch: usize,
    pub batch: usize,
    pub reps: usize,
    /// Reference texture parameters; the seed field is ignored.
    pub reference: PerlinParams,
    pub lacunarities: Vec<f64>,
}

/// DSW between patch meta-measures of a reference batch and candidate
/// batches whose lacunarity is swept.
///
/// Repetition `r` draws the reference batch from `("texture-ref", r)`, and
/// every sweep cell of that repetition shares the candidate seed
/// `("texture-cand", r)` and projection seed `("texture-dsw", r)`, so cells
/// differ only in lacunarity.
pub fn texture_eval(sweep: &TextureSweep, config: &SlicingConfig) -> Result<EvalReport> {
    if sweep.reps == 0 || sweep.batch == 0 || sweep.lacunarities.is_empty() {
        return Err(Error::InvalidArgument("need reps, batch and lacunarities >= 1".into()));
    }
    let streams = SeedStream::new(config.seed);
    let n = sweep.lacunarities.len();
    let mut scores = vec![vec![0.0; sweep.reps]; n];
    for r in 0..sweep.reps {
        let ref_params = PerlinParams {
            seed: streams.child("texture-ref", r as u64).master(),
            ..sweep.reference
        };
        let reference = batch_to_meta(
            &perlin_batch(sweep.height, sweep.width, &ref_params, sweep.batch)?,
            sweep.patch,
        )?;
        for (c, &lac) in sweep.lacunarities.iter().enumerate() {
            let params = PerlinParams {
                lacunarity: lac,
                seed: streams.child("texture-cand", r as u64).master(),
                ..sweep.reference
            };
            let cand = batch_to_meta(
                &perlin_batch(sweep.height, sweep.width, &params, sweep.batch)?,
                sweep.patch,
            )?;
            let cfg = config.with_seed(streams.child("texture-dsw", r as u64).master());
            scores[c][r] = dsw(&reference, &cand, &cfg)?.value;
        }
    }
    Ok(EvalReport {
        rows: sweep
            .lacunarities
            .iter()
            .zip(&scores)
            .map(|(&lac, s)| EvalRow {
                param: lac,
                metric: "dsw".into(),
                mean: mean(s),
                std: sample_std(s),
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape2D {
    Circle,
    Square,
    Star,
}

impl Shape2D {
    pub const ALL: [Shape2D; 3] = [Shape2D::Circle, Shape2D::Square, Shape2D::Star];

    pub fn name(self) -> &'static str {
        match self {
            Shape2D::Circle => "circle",
            Shape2D::Square => "square",
            Shape2D::Star => "star",
        }
    }

    fn outline(self) -> Vec<[f64; 2]> {
        match self {
            Shape2D::Circle => unreachable!("circle has no polygon outline"),
            Shape2D::Square => vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
            Shape2D::Star => (0..10)
                .map(|i| {
                    let r = if i % 2 == 0 { 1.0 } else { 0.4 };
                    let a = PI / 2.0 + i as f64 * PI / 5.0;
                    [r * a.cos(), r * a.sin()]
                })
                .collect(),
        }
    }
}

/// Uniform sample along a closed polygon, by arc length.
fn sample_polygon<R: Rng + ?Sized>(verts: &[[f64; 2]], rng: &mut R) -> [f64; 2] {
    let seg = |i: usize| (verts[i], verts[(i + 1) % verts.len()]);
    let len = |(p, q): ([f64; 2], [f64; 2])| (q[0] - p[0]).hypot(q[1] - p[1]);
    let total: f64 = (0..verts.len()).map(|i| len(seg(i))).sum();
    let mut u = rng.random_range(0.0..total);
    for i in 0..verts.len() {
        let (p, q) = seg(i);
        let l = len((p, q));
        if u < l || i + 1 == verts.len() {
            let t = (u / l).min(1.0);
            return [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
        }
        u -= l;
    }
    unreachable!()
}

/// `n` boundary points of a unit-size shape under a random rotation and
/// translation, with 1% Gaussian jitter.
pub fn sample_shape_2d<R: Rng + ?Sized>(shape: Shape2D, n: usize, rng: &mut R) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(Error::Empty("shape sample".into()));
    }
    let outline = (shape != Shape2D::Circle).then(|| shape.outline());
    let angle = rng.random_range(0.0..2.0 * PI);
    let (s, c) = angle.sin_cos();
    let shift = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
    let jitter = Normal::new(0.0, 0.01).expect("valid std");
    let mut flat = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let [x, y] = match &outline {
            None => {
                let t = rng.random_range(0.0..2.0 * PI);
                [t.cos(), t.sin()]
            }
            Some(v) => sample_polygon(v, rng),
        };
        let (x, y) = (x + jitter.sample(rng), y + jitter.sample(rng));
        flat.push(c * x - s * y + shift[0]);
        flat.push(s * x + c * y + shift[1]);
    }
    EmpiricalMeasure::uniform(Array2::from_shape_vec((n, 2), flat).expect("n x 2"))
}

/// `per_class` shapes of each 2D class; shape `i` uses substream `("shape-2d", i)`.
pub fn shape_dataset_2d(per_class: usize, n: usize, seed: u64) -> Result<(Vec<EmpiricalMeasure>, Vec<String>)> {
    let streams = SeedStream::new(seed);
    let jobs: Vec<Shape2D> = Shape2D::ALL
        .iter()
        .flat_map(|&s| std::iter::repeat_n(s, per_class))
        .collect();
    let shapes = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &s)| sample_shape_2d(s, n, &mut streams.substream("shape-2d", i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok((shapes, jobs.iter().map(|s| s.name().to_string()).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape3D {
    Ellipsoid,
    Box,
}

/// `n` surface points of an axis-aligned ellipsoid or box with half-axes
/// drawn from `[0.5, 1.5]`.
pub fn sample_shape_3d<R: Rng + ?Sized>(shape: Shape3D, n: usize, rng: &mut R) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(Error::Empty("shape sample".into()));
    }
    let axes: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.5..1.5));
    let mut flat = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let p: [f64; 3] = match shape {
            Shape3D::Ellipsoid => loop {
                let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
                let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if norm > 0.0 {
                    break std::array::from_fn(|k| axes[k] * v[k] / norm);
                }
            },
            Shape3D::Box => {
                // face pair chosen by area, then a uniform point on it
                let areas = [axes[1] * axes[2], axes[0] * axes[2], axes[0] * axes[1]];
                let mut u = rng.random_range(0.0..areas.iter().sum::<f64>());
                let mut fixed = 2;
                for (k, a) in areas.iter().enumerate() {
                    if u < *a {
                        fixed = k;
                        break;
                    }
                    u -= a;
                }
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                std::array::from_fn(|k| {
                    if k == fixed {
                        sign * axes[k]
                    } else {
                        rng.random_range(-axes[k]..axes[k])
                    }
                })
            }
        };
        flat.extend_from_slice(&p);
    }
    EmpiricalMeasure::uniform(Array2::from_shape_vec((n, 3), flat).expect("n x 3"))
}

/// A batch of `count` 3D shapes alternating ellipsoid / box, optionally
/// perturbed by isotropic Gaussian noise of level `noise`.
pub fn shape_batch_3d(count: usize, n: usize, noise: f64, seed: u64) -> Result<MetaMeasure> {
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise level {noise} must be >= 0")));
    }
    let streams = SeedStream::new(seed);
    let shapes = (0..count)
        .into_par_iter()
        .map(|i| {
            let kind = if i % 2 == 0 { Shape3D::Ellipsoid } else { Shape3D::Box };
            let mut rng = streams.substream("shape-3d", i as u64);
            let m = sample_shape_3d(kind, n, &mut rng)?;
            if noise == 0.0 {
                return Ok(m);
            }
            let eps = Normal::new(0.0, noise).expect("valid std");
            m.map_points(|x| x.iter().map(|v| v + eps.sample(&mut rng)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    build_meta(shapes, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot1d::Interpolation;
    use crate::gp_slicer::KernelSpec;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn block_matrix(groups: &[usize]) -> Vec<Vec<f64>> {
        let n = groups.len();
        (0..n)
            .map(|i| (0..n).map(|j| if groups[i] == groups[j] { 0.0 } else { 1.0 }).collect())
            .collect()
    }

    #[test]
    fn knn_separated_clusters() {
        // large enough that every split holds at least two items per class
        let groups: Vec<usize> = (0..200).map(|i| i / 100).collect();
        let names: Vec<String> = groups.iter().map(|g| format!("c{g}")).collect();
        let cfg = KnnConfig { trials: 200, seed: 1, ..Default::default() };
        let (acc, std) = knn_classify(&block_matrix(&groups), &names, &cfg).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(std, 0.0);
    }

    #[test]
    fn knn_shuffled_labels_near_chance() {
        let groups: Vec<usize> = (0..40).map(|i| i / 20).collect();
        let mut names: Vec<String> = groups.iter().map(|g| format!("c{g}")).collect();
        names.shuffle(&mut SeedStream::new(5).substream("labels", 0));
        let cfg = KnnConfig { seed: 2, ..Default::default() };
        let (acc, _) = knn_classify(&block_matrix(&groups), &names, &cfg).unwrap();
        assert!((0.35..=0.65).contains(&acc), "{acc}");
    }

    #[test]
    fn knn_errors() {
        let cfg = KnnConfig::default();
        assert!(knn_classify(&[vec![0.0]], &labels(&["a"]), &cfg).is_err());
        let d = block_matrix(&[0, 1, 2]);
        assert!(matches!(
            knn_classify(&d, &labels(&["a", "a", "a"]), &cfg),
            Err(Error::Degenerate(_))
        ));
        assert!(knn_classify(&d, &labels(&["a", "b"]), &cfg).is_err());
        let mut asym = d.clone();
        asym[0][1] = 0.5;
        assert!(knn_classify(&asym, &labels(&["a", "b", "a"]), &cfg).is_err());
        let bad = KnnConfig { train_fraction: 1.0, ..cfg };
        assert!(knn_classify(&d, &labels(&["a", "b", "a"]), &bad).is_err());
    }

    #[test]
    fn vote_tie_breaks() {
        // item 0; train 1 (label a, d=1), 2 (label b, d=1), 3 (label b, d=5), 4 (label a, d=2)
        let d = vec![
            vec![0.0, 1.0, 1.0, 5.0, 2.0],
            vec![1.0, 0.0, 1.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 1.0, 1.0],
            vec![5.0, 1.0, 1.0, 0.0, 1.0],
            vec![2.0, 1.0, 1.0, 1.0, 0.0],
        ];
        let ids = [9, 0, 1, 1, 0];
        // k = 2: one vote each, equal sums -> lowest neighbor index (1, label 0)
        assert_eq!(vote(&d, &ids, &[1, 2, 3, 4], 0, 2), 0);
        assert_eq!(vote(&d, &ids, &[4, 3, 2], 0, 2), 1);
        // k = 4: two votes each, sums a = 3 < b = 6
        assert_eq!(vote(&d, &ids, &[3, 2, 1, 4], 0, 4), 0);
        // distance tie between 1 and 2 at k = 1 goes to the lower index
        assert_eq!(vote(&d, &ids, &[2, 1], 0, 1), 0);
    }

    fn small_metas(seed: u64) -> (MetaMeasure, MetaMeasure) {
        (shape_batch_3d(3, 6, 0.0, seed).unwrap(), shape_batch_3d(3, 6, 0.1, seed + 1).unwrap())
    }

    fn cfg(seed: u64) -> SlicingConfig {
        SlicingConfig::new(1, 1, 20, KernelSpec::rbf(0.1).unwrap(), Interpolation::Linear, seed).unwrap()
    }

    #[test]
    fn mc_report_shapes_and_degenerate_slope() {
        let (a, b) = small_metas(1);
        let rep = mc_convergence_report(&a, &b, &[10, 40], 10, &cfg(3)).unwrap();
        assert_eq!(rep.report.rows.len(), 2);
        assert!(rep.report.stds().iter().all(|&s| s > 0.0));
        assert!(rep.slope.is_some());

        let same = mc_convergence_report(&a, &a, &[10, 40], 10, &cfg(3)).unwrap();
        assert!(same.report.means().iter().all(|&m| m == 0.0));
        assert_eq!(same.slope, None);

        assert!(mc_convergence_report(&a, &b, &[40, 10], 10, &cfg(3)).is_err());
        assert!(mc_convergence_report(&a, &b, &[10], 1, &cfg(3)).is_err());
    }

    #[test]
    fn bound_check_examples() {
        let x = build_meta(vec![EmpiricalMeasure::dirac(&[0.0, 0.0]).unwrap()], None).unwrap();
        let y = build_meta(vec![EmpiricalMeasure::dirac(&[3.0, 4.0]).unwrap()], None).unwrap();
        let c = SlicingConfig { outer_s: 2000, ..cfg(5) };
        let r = bound_check_report(&x, &y, &c).unwrap();
        assert!((r.wow - 5.0).abs() < 1e-12);
        assert!((r.sw_wow.value - 5.0 / 2f64.sqrt()).abs() < 3.0 * r.sw_wow.std_error + 1e-9);
        assert!(r.pass());

        let r = bound_check_report(&x, &x, &c).unwrap();
        assert!(r.wow < 1e-9);
        assert_eq!((r.dsw.value, r.sw_wow.value), (0.0, 0.0));
        assert!(r.pass());
    }

    #[test]
    fn pointcloud_identity_target_scores_zero() {
        let reference = shape_batch_3d(4, 10, 0.0, 11).unwrap();
        let sweep = Sweep {
            axis: SweepAxis::Noise,
            values: vec![0.0],
            shapes: 4,
            noise: 0.0,
            points: 10,
        };
        let metric = BatchMetric::Dsw(cfg(1));
        let rep = pointcloud_eval(&reference, |_, _, _, _| Ok(reference.clone()), &sweep, &metric, 3, 4).unwrap();
        assert_eq!(rep.rows[0].mean, 0.0);
        assert_eq!(rep.rows[0].std, 0.0);
        let csv = rep.to_csv();
        assert_eq!(csv, "param,metric,mean,std\n0,dsw,0,0\n");
    }

    #[test]
    fn pointcloud_eval_is_deterministic() {
        let reference = shape_batch_3d(4, 10, 0.0, 11).unwrap();
        let sweep = Sweep {
            axis: SweepAxis::Shapes,
            values: vec![1.0, 4.0],
            shapes: 4,
            noise: 0.0,
            points: 10,
        };
        let build = |m: usize, s: f64, p: usize, seed: u64| shape_batch_3d(m, p, s, seed);
        let metric = BatchMetric::Dsw(SlicingConfig { outer_s: 50, ..cfg(1) });
        let r1 = pointcloud_eval(&reference, build, &sweep, &metric, 3, 9).unwrap();
        let r2 = pointcloud_eval(&reference, build, &sweep, &metric, 3, 9).unwrap();
        assert_eq!(r1, r2);
        let bad = Sweep { values: vec![1.5], ..sweep };
        assert!(pointcloud_eval(&reference, build, &bad, &metric, 3, 9).is_err());
    }

    #[test]
    fn shape_samplers() {
        let mut rng = SeedStream::new(1).substream("t", 0);
        for s in Shape2D::ALL {
            let m = sample_shape_2d(s, 50, &mut rng).unwrap();
            assert_eq!((m.len(), m.dim()), (50, 2));
        }
        let b = sample_shape_3d(Shape3D::Box, 200, &mut rng).unwrap();
        // every box point lies on a face: some coordinate at its extreme
        let ext: Vec<f64> = (0..3)
            .map(|k| b.points().column(k).iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect();
        for row in b.points().rows() {
            assert!((0..3).any(|k| (row[k].abs() - ext[k]).abs() < 1e-12));
        }
        let (shapes, names) = shape_dataset_2d(2, 10, 3).unwrap();
        assert_eq!(shapes.len(), 6);
        assert_eq!(names, labels(&["circle", "circle", "square", "square", "star", "star"]));
        assert_eq!(shape_dataset_2d(2, 10, 3).unwrap().0, shapes);
    }
}
