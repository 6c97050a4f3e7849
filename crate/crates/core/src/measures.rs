//! Empirical measures, meta-measures and their on-disk formats.
//!
//! Point clouds are stored as headerless CSV, one point per line. Weights are
//! never stored: ingestion always produces the uniform measure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::pairwise_sum;

/// Tolerance on `sum(weights) == 1`.
pub const WEIGHT_TOL: f64 = 1e-12;

pub(crate) fn check_simplex(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Empty("weight vector".into()));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidWeights(format!("entry {w} is not a nonnegative real")));
    }
    let sum = pairwise_sum(weights);
    if (sum - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::WeightSum { sum });
    }
    Ok(())
}

pub(crate) fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// A finitely supported probability measure on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Array2<f64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Measure with explicit weights. `points` is `n x d`.
    pub fn new(points: Array2<f64>, weights: Vec<f64>) -> Result<Self> {
        let (n, d) = points.dim();
        if n == 0 || d == 0 {
            return Err(Error::Empty(format!("point set of shape {n}x{d}")));
        }
        if weights.len() != n {
            return Err(Error::InvalidWeights(format!(
                "{} weights for {n} points",
                weights.len()
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("point coordinate".into()));
        }
        check_simplex(&weights)?;
        Ok(Self { points, weights })
    }

    /// Uniform measure `1/n` on the rows of `points`.
    pub fn uniform(points: Array2<f64>) -> Result<Self> {
        let n = points.nrows();
        Self::new(points, uniform_weights(n))
    }

    /// Uniform measure on scalar values.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let pts = Array2::from_shape_vec((values.len(), 1), values.to_vec())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::uniform(pts)
    }

    /// Weighted measure on scalar values.
    pub fn from_weighted_values(values: &[f64], weights: Vec<f64>) -> Result<Self> {
        let pts = Array2::from_shape_vec((values.len(), 1), values.to_vec())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::new(pts, weights)
    }

    pub fn dirac(point: &[f64]) -> Result<Self> {
        let pts = Array2::from_shape_vec((1, point.len()), point.to_vec())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::uniform(pts)
    }

    pub(crate) fn from_parts_unchecked(points: Array2<f64>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(points.nrows(), weights.len());
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn point(&self, k: usize) -> ArrayView1<'_, f64> {
        self.points.row(k)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Support of a one-dimensional measure as a flat slice.
    pub fn values_1d(&self) -> Result<Vec<f64>> {
        if self.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: self.dim(),
            });
        }
        Ok(self.points.column(0).to_vec())
    }

    /// Copy with every support point mapped through `f`.
    pub fn map_points(&self, f: impl FnMut(ArrayView1<'_, f64>) -> Vec<f64>) -> Result<Self> {
        let rows: Vec<Vec<f64>> = self.points.rows().into_iter().map(f).collect();
        let d = rows.first().map_or(0, Vec::len);
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let pts = Array2::from_shape_vec((self.len(), d), flat)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::new(pts, self.weights.clone())
    }
}

/// `M2(mu) = sum_k w_k |x_k|^2`.
pub fn second_moment(measure: &EmpiricalMeasure) -> f64 {
    measure
        .points
        .rows()
        .into_iter()
        .zip(&measure.weights)
        .map(|(x, w)| w * x.dot(&x))
        .sum()
}

/// A finitely supported probability measure over empirical measures.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaMeasure {
    inner: Vec<EmpiricalMeasure>,
    outer_weights: Vec<f64>,
}

impl MetaMeasure {
    pub fn inner(&self) -> &[EmpiricalMeasure] {
        &self.inner
    }

    pub fn outer_weights(&self) -> &[f64] {
        &self.outer_weights
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inner[0].dim()
    }

    pub(crate) fn from_parts_unchecked(inner: Vec<EmpiricalMeasure>, outer_weights: Vec<f64>) -> Self {
        Self {
            inner,
            outer_weights,
        }
    }

    /// Copy with every inner measure mapped through `f` (outer weights kept).
    pub fn map_inner(
        &self,
        f: impl Fn(&EmpiricalMeasure) -> Result<EmpiricalMeasure>,
    ) -> Result<Self> {
        let inner = self.inner.iter().map(f).collect::<Result<Vec<_>>>()?;
        build_meta(inner, Some(self.outer_weights.clone()))
    }
}

/// Assemble a meta-measure; `outer_weights = None` means uniform.
pub fn build_meta(
    measures: Vec<EmpiricalMeasure>,
    outer_weights: Option<Vec<f64>>,
) -> Result<MetaMeasure> {
    let first = measures
        .first()
        .ok_or_else(|| Error::Empty("meta-measure needs at least one inner measure".into()))?;
    let d = first.dim();
    if let Some(m) = measures.iter().find(|m| m.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.dim(),
        });
    }
    let outer_weights = match outer_weights {
        Some(w) => {
            if w.len() != measures.len() {
                return Err(Error::InvalidWeights(format!(
                    "{} outer weights for {} measures",
                    w.len(),
                    measures.len()
                )));
            }
            check_simplex(&w)?;
            w
        }
        None => uniform_weights(measures.len()),
    };
    Ok(MetaMeasure {
        inner: measures,
        outer_weights,
    })
}

/// Read a headerless CSV point cloud; weights are uniform.
pub fn load_point_cloud(path: impl AsRef<Path>) -> Result<EmpiricalMeasure> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_point_cloud(&text)
}

/// Parse CSV text in the point-cloud format (LF or CRLF line endings).
pub fn parse_point_cloud(text: &str) -> Result<EmpiricalMeasure> {
    let mut flat = Vec::new();
    let mut dim = 0usize;
    let mut rows = 0usize;
    for (idx, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw).trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut count = 0;
        for tok in line.split(',') {
            let tok = tok.trim();
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("non-numeric token {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("non-finite value {tok:?}"),
                });
            }
            flat.push(v);
            count += 1;
        }
        if rows == 0 {
            dim = count;
        } else if count != dim {
            return Err(Error::RaggedRow {
                line: lineno,
                expected: dim,
                found: count,
            });
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Empty("point cloud file has no rows".into()));
    }
    let pts = Array2::from_shape_vec((rows, dim), flat)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    EmpiricalMeasure::uniform(pts)
}

/// Write the support of `measure` in the point-cloud format.
///
/// Values use the shortest round-trip representation, so loading the file
/// reproduces the coordinates bit for bit.
pub fn save_point_cloud(measure: &EmpiricalMeasure, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for row in measure.points.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub path: PathBuf,
    pub label: String,
}

/// A labelled list of data files.
///
/// `base_dir` is resolved relative to the manifest file when it is not
/// absolute; item paths are resolved relative to `base_dir`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default)]
    pub base_dir: PathBuf,
    pub items: Vec<ManifestItem>,
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: DatasetManifest = serde_json::from_str(&text)?;
        if manifest.base_dir.is_relative() {
            let parent = path.parent().unwrap_or_else(|| Path::new("."));
            manifest.base_dir = parent.join(&manifest.base_dir);
        }
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::Empty("manifest has no items".into()));
        }
        for item in &self.items {
            if item.label.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "empty label for {}",
                    item.path.display()
                )));
            }
            let p = self.resolve(item);
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "manifest item not found"),
                ));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, item: &ManifestItem) -> PathBuf {
        if item.path.is_absolute() {
            item.path.clone()
        } else {
            self.base_dir.join(&item.path)
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.items.iter().map(|i| i.label.clone()).collect()
    }

    /// Load every item as a point cloud and form the uniform meta-measure.
    pub fn to_meta(&self) -> Result<MetaMeasure> {
        let inner = self
            .items
            .iter()
            .map(|i| load_point_cloud(self.resolve(i)))
            .collect::<Result<Vec<_>>>()?;
        build_meta(inner, None)
    }
}
