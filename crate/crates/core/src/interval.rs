//! Elementwise interval vectors and the sign-split affine map.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{relu, split_dot, Matrix};

/// A box `[lower, upper]` in R^n. Degenerate boxes (`lower == upper`) stand
/// for exact values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalVector {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl IntervalVector {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_len("interval bounds", lower.len(), upper.len())?;
        for (index, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            // also rejects NaN
            if !(lo <= hi) {
                return Err(Error::InvalidInterval {
                    index,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// Callers guarantee `lower <= upper`.
    pub(crate) fn from_bounds(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        debug_assert_eq!(lower.len(), upper.len());
        debug_assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u));
        Self { lower, upper }
    }

    pub fn degenerate(x: &[f64]) -> Self {
        Self {
            lower: x.to_vec(),
            upper: x.to_vec(),
        }
    }

    /// The box `[c - radius, c + radius]`.
    pub fn around(center: &[f64], radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidDelta(radius));
        }
        Ok(Self {
            lower: center.iter().map(|c| c - radius).collect(),
            upper: center.iter().map(|c| c + radius).collect(),
        })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn into_bounds(self) -> (Vec<f64>, Vec<f64>) {
        (self.lower, self.upper)
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l)
    }

    /// Largest coordinate width, 0 for an empty vector.
    pub fn max_width(&self) -> f64 {
        self.widths().fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        x.len() == self.len()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| v >= l - slack && v <= u + slack)
    }

    /// True when every coordinate of `self` lies inside `other`.
    pub fn is_subset_of(&self, other: &IntervalVector) -> bool {
        self.len() == other.len()
            && (0..self.len()).all(|i| self.lower[i] >= other.lower[i] && self.upper[i] <= other.upper[i])
    }

    /// Applies the ReLU to both bounds.
    pub fn relu(mut self) -> Self {
        self.lower.iter_mut().for_each(|v| *v = relu(*v));
        self.upper.iter_mut().for_each(|v| *v = relu(*v));
        self
    }
}

/// Image of a box under `x -> W x + b`, computed with the positive/negative
/// split of `W`:
///
/// ```text
/// upper = W⁺ x̄ + W⁻ x̲ + b
/// lower = W⁺ x̲ + W⁻ x̄ + b
/// ```
pub fn affine_interval_map(w: &Matrix, b: &[f64], input: &IntervalVector) -> Result<IntervalVector> {
    affine_interval_map_split(&w.positive_part(), &w.negative_part(), b, input)
}

/// Same as [`affine_interval_map`] with precomputed `W⁺` and `W⁻`.
pub fn affine_interval_map_split(
    w_pos: &Matrix,
    w_neg: &Matrix,
    b: &[f64],
    input: &IntervalVector,
) -> Result<IntervalVector> {
    check_len("affine map input", w_pos.cols(), input.len())?;
    check_len("affine map bias", w_pos.rows(), b.len())?;
    let (lo, hi) = (input.lower(), input.upper());
    let mut lower = Vec::with_capacity(b.len());
    let mut upper = Vec::with_capacity(b.len());
    for i in 0..w_pos.rows() {
        let (p, n) = (w_pos.row(i), w_neg.row(i));
        upper.push(split_dot(p, n, hi, lo) + b[i]);
        lower.push(split_dot(p, n, lo, hi) + b[i]);
    }
    Ok(IntervalVector::from_bounds(lower, upper))
}
