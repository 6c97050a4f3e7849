//! Quantile functions and the closed-form 1D Wasserstein distance.
//!
//! For measures on the line, `W2(mu, nu)^2 = int_0^1 |Q_mu(s) - Q_nu(s)|^2 ds`
//! where `Q` is the generalized inverse of the CDF. For empirical measures
//! both quantiles are step functions, so the integral is computed exactly
//! by walking the merged breakpoints of the two step functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::EmpiricalMeasure;

/// How a step quantile is evaluated between its breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// `Q(s) = values[j]` for `s` in `(cum[j-1], cum[j]]`, `Q(0) = values[0]`.
    Step,
    /// Piecewise linear through `(midpoint of step j, values[j])`, clamped
    /// to the extreme values outside the first and last midpoints.
    #[default]
    Linear,
}

impl std::str::FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step" => Ok(Interpolation::Step),
            "linear" => Ok(Interpolation::Linear),
            other => Err(Error::InvalidArgument(format!(
                "unknown interpolation {other:?} (expected step or linear)"
            ))),
        }
    }
}

/// Sorted-support representation of a 1D quantile function.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantile1D {
    values: Vec<f64>,
    cum_weights: Vec<f64>,
}

impl Quantile1D {
    /// Build from scalar support and weights (assumed a valid simplex vector).
    ///
    /// Equal values are merged, zero-mass steps dropped, and the last
    /// cumulative weight pinned to exactly 1.
    pub fn from_weighted(values: &[f64], weights: &[f64]) -> Self {
        debug_assert_eq!(values.len(), weights.len());
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

        let mut merged_v: Vec<f64> = Vec::with_capacity(values.len());
        let mut merged_w: Vec<f64> = Vec::with_capacity(values.len());
        for &k in &idx {
            match merged_v.last() {
                Some(&v) if v == values[k] => *merged_w.last_mut().expect("nonempty") += weights[k],
                _ => {
                    merged_v.push(values[k]);
                    merged_w.push(weights[k]);
                }
            }
        }

        let mut out_v = Vec::with_capacity(merged_v.len());
        let mut out_c: Vec<f64> = Vec::with_capacity(merged_v.len());
        let mut run = 0.0;
        let last = merged_v.len() - 1;
        for (j, (&v, &w)) in merged_v.iter().zip(&merged_w).enumerate() {
            run += w;
            let c = if j == last { 1.0 } else { run.min(1.0) };
            if j == last {
                // rounding can push an earlier step to 1; the maximum must own the top
                while out_c.last().is_some_and(|&p| p >= 1.0) {
                    out_c.pop();
                    out_v.pop();
                }
            } else if w <= 0.0 || out_c.last().is_some_and(|&p| c <= p) {
                continue;
            }
            out_v.push(v);
            out_c.push(c);
        }
        Self {
            values: out_v,
            cum_weights: out_c,
        }
    }

    /// Uniformly weighted scalar sample.
    pub fn from_uniform(values: &[f64]) -> Self {
        let w = vec![1.0 / values.len() as f64; values.len()];
        Self::from_weighted(values, &w)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cum_weights(&self) -> &[f64] {
        &self.cum_weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the step containing `t`: first `j` with `cum[j] >= t`.
    fn step_index(&self, t: f64) -> usize {
        self.cum_weights
            .partition_point(|&c| c < t)
            .min(self.values.len() - 1)
    }

    fn midpoint(&self, j: usize) -> f64 {
        let lo = if j == 0 { 0.0 } else { self.cum_weights[j - 1] };
        0.5 * (lo + self.cum_weights[j])
    }

    /// Evaluate at `t` in `[0, 1]` without range checking.
    pub fn eval_unchecked(&self, t: f64, mode: Interpolation) -> f64 {
        let j = self.step_index(t);
        match mode {
            Interpolation::Step => self.values[j],
            Interpolation::Linear => {
                let last = self.values.len() - 1;
                let m = self.midpoint(j);
                let (lo, hi) = if t >= m {
                    if j == last {
                        return self.values[last];
                    }
                    (j, j + 1)
                } else {
                    if j == 0 {
                        return self.values[0];
                    }
                    (j - 1, j)
                };
                let (m_lo, m_hi) = (self.midpoint(lo), self.midpoint(hi));
                let frac = (t - m_lo) / (m_hi - m_lo);
                self.values[lo] + (self.values[hi] - self.values[lo]) * frac
            }
        }
    }
}

/// Quantile function of a one-dimensional measure.
pub fn quantile_of(measure: &EmpiricalMeasure) -> Result<Quantile1D> {
    let values = measure.values_1d()?;
    Ok(Quantile1D::from_weighted(&values, measure.weights()))
}

/// Evaluate `q` at `t`; `t` must lie in `[0, 1]`.
pub fn eval_quantile(q: &Quantile1D, t: f64, mode: Interpolation) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "quantile level {t} outside [0, 1]"
        )));
    }
    Ok(q.eval_unchecked(t, mode))
}

/// `int_0^1 (Q_a - Q_b)^2 ds`, exact for step quantiles.
///
/// Symmetric in its arguments to the last bit.
pub fn w2_squared(a: &Quantile1D, b: &Quantile1D) -> f64 {
    let (last_a, last_b) = (a.len() - 1, b.len() - 1);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0.0;
    let mut acc = 0.0;
    loop {
        let (ca, cb) = (a.cum_weights[i], b.cum_weights[j]);
        let next = ca.min(cb);
        let diff = a.values[i] - b.values[j];
        acc += (next - prev) * (diff * diff);
        prev = next;
        if i == last_a && j == last_b {
            break;
        }
        if ca <= cb && i < last_a {
            i += 1;
        }
        if cb <= ca && j < last_b {
            j += 1;
        }
    }
    acc
}

/// Squared 1D Wasserstein distance between weighted scalar samples.
pub fn w2_squared_values(xa: &[f64], wa: &[f64], xb: &[f64], wb: &[f64]) -> f64 {
    w2_squared(
        &Quantile1D::from_weighted(xa, wa),
        &Quantile1D::from_weighted(xb, wb),
    )
}

/// Closed-form 2-Wasserstein distance between one-dimensional measures.
pub fn wasserstein_1d(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    let (qa, qb) = (quantile_of(mu)?, quantile_of(nu)?);
    Ok(w2_squared(&qa, &qb).sqrt())
}
