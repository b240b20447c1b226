//! Trigonometric-polynomial data on the torus and 1-d integrable profiles.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, TAU};

/// One product mode `amplitude · ∏ᵢ bᵢ(xᵢ)` where `bᵢ = sin(2π kᵢ xᵢ)` for
/// `kᵢ > 0`, `cos(2π |kᵢ| xᵢ)` for `kᵢ < 0`, and `1` for `kᵢ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigMode {
    pub k: Vec<i32>,
    pub amplitude: f64,
}

impl TrigMode {
    pub fn new(k: Vec<i32>, amplitude: f64) -> Self {
        TrigMode { k, amplitude }
    }

    /// A mode has zero torus average unless every wavenumber is zero.
    pub fn is_mean_free(&self) -> bool {
        self.k.iter().any(|&k| k != 0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.amplitude;
        for (k, xi) in self.k.iter().zip(x) {
            v *= match k {
                0 => 1.0,
                k if *k > 0 => math::sin(TAU * *k as f64 * xi),
                k => math::cos(TAU * (-*k) as f64 * xi),
            };
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPoly {
    pub modes: Vec<TrigMode>,
}

impl TrigPoly {
    pub fn new(modes: Vec<TrigMode>) -> Self {
        TrigPoly { modes }
    }

    pub fn zero() -> Self {
        TrigPoly::default()
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|m| m.amplitude == 0.0)
    }

    /// Checks wavenumber arity and the zero-average requirement.
    pub fn validate(&self, dim: usize) -> Result<()> {
        for m in &self.modes {
            if m.k.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "w0 mode {:?} has {} wavenumbers, expected {dim}",
                    m.k,
                    m.k.len()
                )));
            }
            if !m.is_mean_free() && m.amplitude != 0.0 {
                return Err(Error::NonZeroMean { mean: m.amplitude });
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.modes.iter().map(|m| m.eval(x)).sum()
    }
}

/// Integrable 1-d perturbation `v₀(x₁)` added to the initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineProfile {
    /// `amplitude · exp(-(x/width)²)`
    Gaussian { amplitude: f64, width: f64 },
    /// `amplitude · max(0, 1 - |x|/width)`
    Hat { amplitude: f64, width: f64 },
}

impl LineProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            LineProfile::Gaussian { amplitude, width } => {
                let s = x / width;
                amplitude * math::exp(-s * s)
            }
            LineProfile::Hat { amplitude, width } => {
                amplitude * (1.0 - math::abs(x) / width).max(0.0)
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            LineProfile::Gaussian { amplitude, width } => {
                let s = x / width;
                -2.0 * s / width * amplitude * math::exp(-s * s)
            }
            LineProfile::Hat { amplitude, width } => {
                if math::abs(x) >= width || x == 0.0 {
                    0.0
                } else {
                    -amplitude * math::signum(x) / width
                }
            }
        }
    }

    /// Half-width beyond which the profile is below `1e-16` of its peak.
    pub fn support_radius(&self) -> f64 {
        match *self {
            LineProfile::Gaussian { width, .. } => 6.1 * width,
            LineProfile::Hat { width, .. } => width,
        }
    }

    /// Closed-form `‖v‖_{L^q(ℝ)}`.
    pub fn lq_norm(&self, q: f64) -> f64 {
        match *self {
            LineProfile::Gaussian { amplitude, width } => {
                math::abs(amplitude)
                    * math::powf(width * math::sqrt(core::f64::consts::PI / q), 1.0 / q)
            }
            LineProfile::Hat { amplitude, width } => {
                math::abs(amplitude) * math::powf(2.0 * width / (q + 1.0), 1.0 / q)
            }
        }
    }

    /// Closed-form `‖v'‖_{L¹(ℝ)}` (total variation).
    pub fn derivative_l1(&self) -> f64 {
        match *self {
            LineProfile::Gaussian { amplitude, .. } | LineProfile::Hat { amplitude, .. } => {
                2.0 * math::abs(amplitude)
            }
        }
    }
}
