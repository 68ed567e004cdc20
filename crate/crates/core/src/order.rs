use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order pair (alpha, beta) of the psi-Hilfer derivative with the derived
/// type parameter `gamma = alpha + beta (1 - alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracOrder {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl FracOrder {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidBeta(beta));
        }
        let gamma = alpha + beta * (1.0 - alpha);
        Ok(Self { alpha, beta, gamma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Exponent of the inner integral, (1 - beta)(1 - alpha) = 1 - gamma.
    pub fn inner_exponent(&self) -> f64 {
        (1.0 - self.beta) * (1.0 - self.alpha)
    }

    /// Exponent of the outer integral, beta (1 - alpha).
    pub fn outer_exponent(&self) -> f64 {
        self.beta * (1.0 - self.alpha)
    }
}
