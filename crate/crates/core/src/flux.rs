//! Flux functions `f_i` with their first two derivatives.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Polynomial flux families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flux {
    /// `f(u) = speed · u`
    Linear { speed: f64 },
    /// `f(u) = coeff · u² / 2`; `coeff = 1` is Burgers.
    Quadratic { coeff: f64 },
    /// `f(u) = coeff · u³ / 3`
    Cubic { coeff: f64 },
}

impl Flux {
    pub const BURGERS: Flux = Flux::Quadratic { coeff: 1.0 };

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        match *self {
            Flux::Linear { speed } => speed * u,
            Flux::Quadratic { coeff } => 0.5 * coeff * u * u,
            Flux::Cubic { coeff } => coeff * u * u * u / 3.0,
        }
    }

    #[inline]
    pub fn df(&self, u: f64) -> f64 {
        match *self {
            Flux::Linear { speed } => speed,
            Flux::Quadratic { coeff } => coeff * u,
            Flux::Cubic { coeff } => coeff * u * u,
        }
    }

    #[inline]
    pub fn d2f(&self, u: f64) -> f64 {
        match *self {
            Flux::Linear { .. } => 0.0,
            Flux::Quadratic { coeff } => coeff,
            Flux::Cubic { coeff } => 2.0 * coeff * u,
        }
    }

    /// Largest `|f'(u)|` for `u ∈ [lo, hi]`. Every family here has `|f'|`
    /// maximised at an endpoint.
    pub fn max_speed(&self, lo: f64, hi: f64) -> f64 {
        self.df(lo).abs().max(self.df(hi).abs())
    }
}

/// Fluxes `f_1..f_n` plus the convexity floor `a₀` of `f_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxSet {
    fluxes: Vec<Flux>,
    a0: f64,
}

const CONVEXITY_SAMPLES: usize = 1001;

impl FluxSet {
    pub fn new(fluxes: Vec<Flux>, a0: f64) -> Result<Self> {
        if fluxes.is_empty() {
            return Err(Error::InvalidArgument("flux set needs at least f_1".into()));
        }
        if !(a0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "convexity floor a0 must be positive, got {a0}"
            )));
        }
        Ok(FluxSet { fluxes, a0 })
    }

    /// Burgers flux `u²/2` in every direction, `a₀ = 1`.
    pub fn burgers(dim: usize) -> Self {
        FluxSet {
            fluxes: alloc::vec![Flux::BURGERS; dim],
            a0: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.fluxes.len()
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// Flux for direction `i`, numbered from 1.
    pub fn get(&self, i: usize) -> &Flux {
        &self.fluxes[i - 1]
    }

    pub fn fluxes(&self) -> &[Flux] {
        &self.fluxes
    }

    /// Restriction to the first `dim` directions.
    pub fn truncated(&self, dim: usize) -> Result<Self> {
        if dim == 0 || dim > self.fluxes.len() {
            return Err(Error::InvalidArgument(format!(
                "flux set has {} directions, {dim} requested",
                self.fluxes.len()
            )));
        }
        Ok(FluxSet {
            fluxes: self.fluxes[..dim].to_vec(),
            a0: self.a0,
        })
    }

    /// Dense-sampling check of `f₁'' ≥ a₀` on `[lo, hi]`.
    pub fn check_convexity(&self, lo: f64, hi: f64) -> Result<()> {
        let f1 = self.fluxes[0];
        for k in 0..CONVEXITY_SAMPLES {
            let u = lo + (hi - lo) * k as f64 / (CONVEXITY_SAMPLES - 1) as f64;
            let c = f1.d2f(u);
            if c < self.a0 {
                return Err(Error::NotMonotone(format!(
                    "f1''({u}) = {c} is below the convexity floor a0 = {}",
                    self.a0
                )));
            }
        }
        Ok(())
    }

    /// Sum over directions of `max |f_i'| / h_i` on `[lo, hi]`; the advective
    /// CFL number of a step is `dt` times this.
    pub fn cfl_rate(&self, lo: f64, hi: f64, spacing: &[f64]) -> f64 {
        self.fluxes
            .iter()
            .zip(spacing)
            .map(|(f, h)| f.max_speed(lo, hi) / h)
            .sum()
    }
}
