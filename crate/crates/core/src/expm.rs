//! Matrix exponential by scaling and squaring with a truncated Taylor series.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Norm bound for the scaled argument.
const SCALED_NORM: f64 = 0.5;
/// Taylor terms: 0.5^21 / 21! is far below double precision.
const TAYLOR_TERMS: usize = 20;

impl Matrix<f64> {
    /// `exp(t * self)`.
    pub fn exp_scaled(&self, t: f64) -> Result<Matrix<f64>> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        if !t.is_finite() || self.entries().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "matrix exponential needs finite input".into(),
            ));
        }
        let n = self.rows();
        let norm = self.norm_inf() * t.abs();
        let squarings = if norm > SCALED_NORM {
            (norm / SCALED_NORM).log2().ceil() as i32
        } else {
            0
        };
        let scaled = self.scale(&(t / 2f64.powi(squarings)));

        // Horner: I + X(I + X/2(I + X/3(...)))
        let identity = Matrix::identity(n);
        let mut acc = identity.clone();
        for k in (1..=TAYLOR_TERMS).rev() {
            acc = scaled
                .multiply(&acc)?
                .scale(&(1.0 / k as f64))
                .add(&identity)?;
        }
        for _ in 0..squarings {
            acc = acc.multiply(&acc)?;
        }
        Ok(acc)
    }
}

/// `exp(t * a)`.
pub fn matrix_exponential(a: &Matrix<f64>, t: f64) -> Result<Matrix<f64>> {
    a.exp_scaled(t)
}
