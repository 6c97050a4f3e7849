//! Flag groups and JSON run configs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use meta_ot::gp_slicer::KernelSpec;
use meta_ot::harness::{KnnConfig, Sweep};
use meta_ot::patches::PerlinParams;
use meta_ot::wow::InnerSolver;
use meta_ot::{Interpolation, SlicingConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Rbf,
    /// Brownian motion, `min(s, t)`.
    Bm,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlicingArgs {
    /// Sphere directions (path blocks for 1D inputs).
    #[arg(long, default_value_t = 1000)]
    pub outer_s: usize,
    /// GP paths per direction.
    #[arg(long, default_value_t = 10)]
    pub inner_per_outer: usize,
    /// Quadrature knots on [0, 1].
    #[arg(long = "grid-size", default_value_t = 50)]
    pub r: usize,
    #[arg(long, value_enum, default_value_t = KernelKind::Rbf)]
    pub kernel: KernelKind,
    /// RBF length scale.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    /// Quantile interpolation: linear or step.
    #[arg(long, default_value = "linear")]
    pub interpolation: Interpolation,
}

impl Default for SlicingArgs {
    fn default() -> Self {
        Self {
            outer_s: 1000,
            inner_per_outer: 10,
            r: 50,
            kernel: KernelKind::Rbf,
            sigma: 0.1,
            interpolation: Interpolation::Linear,
        }
    }
}

impl SlicingArgs {
    pub fn to_config(&self, seed: u64) -> Result<SlicingConfig> {
        let kernel = match self.kernel {
            KernelKind::Rbf => KernelSpec::rbf(self.sigma)?,
            KernelKind::Bm => KernelSpec::BrownianMotion,
        };
        Ok(SlicingConfig::new(
            self.outer_s,
            self.inner_per_outer,
            self.r,
            kernel,
            self.interpolation,
            seed,
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerKind {
    Exact,
    Entropic,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WowArgs {
    /// Inner solver for dimensions above one.
    #[arg(long = "inner", value_enum, default_value_t = InnerKind::Exact)]
    pub inner: InnerKind,
    /// Entropic regularization strength.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
}

impl Default for WowArgs {
    fn default() -> Self {
        Self {
            inner: InnerKind::Exact,
            epsilon: 0.01,
        }
    }
}

impl WowArgs {
    pub fn solver(&self) -> InnerSolver {
        match self.inner {
            InnerKind::Exact => InnerSolver::Exact,
            InnerKind::Entropic => InnerSolver::Entropic {
                epsilon: self.epsilon,
            },
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct KnnArgs {
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Share of items used for training in each split.
    #[arg(long, default_value_t = 0.25)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

impl KnnArgs {
    pub fn to_config(&self, seed: u64) -> KnnConfig {
        KnnConfig {
            k: self.k,
            train_fraction: self.train_fraction,
            trials: self.trials,
            seed,
        }
    }
}

/// Reads a JSON config; relative paths inside it resolve against its directory.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<(T, PathBuf)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub a: PathBuf,
    pub b: PathBuf,
    #[serde(default)]
    pub slicing: SlicingArgs,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub a: PathBuf,
    pub b: PathBuf,
    pub s_list: Vec<usize>,
    pub reps: usize,
    #[serde(default)]
    pub slicing: SlicingArgs,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Dsw,
    Wow,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    /// Shapes in the reference batch.
    pub shapes: usize,
    /// Points per shape.
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointcloudConfig {
    pub reference: ReferenceSpec,
    pub sweep: Sweep,
    pub metric: MetricKind,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub slicing: SlicingArgs,
    #[serde(default)]
    pub wow: WowArgs,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_reps() -> usize {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchConfig {
    #[serde(default = "default_side")]
    pub height: usize,
    #[serde(default = "default_side")]
    pub width: usize,
    #[serde(default = "default_patch")]
    pub patch: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub reference: PerlinParams,
    pub lacunarities: Vec<f64>,
    #[serde(default)]
    pub slicing: SlicingArgs,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_side() -> usize {
    64
}

fn default_patch() -> usize {
    8
}

fn default_batch() -> usize {
    16
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerlinConfig {
    #[serde(default = "default_side")]
    pub height: usize,
    #[serde(default = "default_side")]
    pub width: usize,
    pub count: usize,
    pub params: PerlinParams,
    /// Write P5 (binary) instead of P2.
    #[serde(default)]
    pub binary: bool,
    #[serde(default)]
    pub seed: Option<u64>,
}
