//! Euclidean slicing along random unit directions.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::measures::{EmpiricalMeasure, MetaMeasure};

/// A unit vector in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Normalizes `v`; fails on the zero vector.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidArgument("direction must be a nonzero finite vector".into()));
        }
        Ok(Self(v.into_iter().map(|x| x / norm).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// One uniform direction on `S^{d-1}` from a normalized Gaussian vector.
pub fn sample_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Direction {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        if norm2 > 0.0 {
            let norm = norm2.sqrt();
            return Direction(v.into_iter().map(|x| x / norm).collect());
        }
    }
}

/// `count` i.i.d. uniform directions on `S^{d-1}`.
pub fn sample_directions<R: Rng + ?Sized>(d: usize, count: usize, rng: &mut R) -> Result<Vec<Direction>> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    Ok((0..count).map(|_| sample_direction(d, rng)).collect())
}

/// Scalar support `<theta, x_k>` of the pushforward.
pub fn projected_values(measure: &EmpiricalMeasure, theta: &Direction) -> Result<Vec<f64>> {
    if measure.dim() != theta.dim() {
        return Err(Error::DimensionMismatch {
            expected: measure.dim(),
            found: theta.dim(),
        });
    }
    let th = theta.as_slice();
    Ok(measure
        .points()
        .rows()
        .into_iter()
        .map(|x| x.iter().zip(th).map(|(a, b)| a * b).sum())
        .collect())
}

/// Pushforward of `measure` under `x -> <theta, x>`.
pub fn project_measure(measure: &EmpiricalMeasure, theta: &Direction) -> Result<EmpiricalMeasure> {
    let values = projected_values(measure, theta)?;
    let pts = Array2::from_shape_vec((values.len(), 1), values).expect("n x 1");
    Ok(EmpiricalMeasure::from_parts_unchecked(pts, measure.weights().to_vec()))
}

/// Projects every inner measure; outer weights are unchanged.
pub fn project_meta(meta: &MetaMeasure, theta: &Direction) -> Result<MetaMeasure> {
    let inner = meta
        .inner()
        .iter()
        .map(|m| project_measure(m, theta))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetaMeasure::from_parts_unchecked(inner, meta.outer_weights().to_vec()))
}
