use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Stability index and dimension of the rotationally invariant noise.
///
/// The noise is Brownian motion time-changed by an `alpha/2`-stable
/// subordinator, so its characteristic exponent is `(|xi|^2 / 2)^(alpha/2)`.
/// Scheme-level code requires `alpha` in `(1, 2)`; samplers and the density
/// quadrature additionally accept the extended range `(0, 2)` when the value
/// was built with [`StableParams::extended`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    alpha: f64,
    dim: usize,
    #[serde(default)]
    extended: bool,
}

impl StableParams {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return invalid(format!("alpha must lie in (1, 2), got {alpha}"));
        }
        Self::checked(alpha, dim, false)
    }

    /// Accepts `alpha` in `(0, 2)`. Only samplers and densities honour this;
    /// everything that runs the scheme calls [`StableParams::require_scheme_range`].
    pub fn extended(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return invalid(format!("alpha must lie in (0, 2), got {alpha}"));
        }
        Self::checked(alpha, dim, true)
    }

    fn checked(alpha: f64, dim: usize, extended: bool) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        Ok(Self {
            alpha,
            dim,
            extended,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_extended(&self) -> bool {
        self.extended
    }

    pub fn require_scheme_range(&self) -> Result<()> {
        if self.alpha > 1.0 && self.alpha < 2.0 {
            Ok(())
        } else {
            invalid(format!(
                "scheme-level code requires alpha in (1, 2), got {}",
                self.alpha
            ))
        }
    }

    pub fn require_dim(&self, dim: usize) -> Result<()> {
        if self.dim == dim {
            Ok(())
        } else {
            invalid(format!("expected dimension {dim}, got {}", self.dim))
        }
    }

    /// Index of the subordinator, `alpha / 2`.
    pub fn subordinator_index(&self) -> f64 {
        0.5 * self.alpha
    }

    /// Coefficient `c` in the characteristic exponent `c |xi|^alpha`, equal to `2^(-alpha/2)`.
    pub fn exponent_scale(&self) -> f64 {
        (-0.5 * self.alpha).exp2()
    }

    /// Natural length scale `t^(1/alpha)` of the kernel at time `t`.
    pub fn length_scale(&self, t: f64) -> f64 {
        t.powf(1.0 / self.alpha)
    }
}
