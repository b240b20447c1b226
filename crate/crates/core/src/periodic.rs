//! Periodic solutions `u_l`, `u_r` on the torus and their exponential decay.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::flux::FluxSet;
use crate::imex::{ImexGrid, ImexStepper, TimeStep};
use crate::math;
use crate::torus::{spectral_gradient, TorusField, TorusGrid};

/// Zero-average tolerance for initial perturbations.
pub const MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicState {
    pub field: TorusField,
    pub t: f64,
    pub ubar: f64,
}

impl PeriodicState {
    pub fn grid(&self) -> &TorusGrid {
        &self.field.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.field.values
    }

    /// `w = u − ū`.
    pub fn perturbation(&self) -> Vec<f64> {
        self.field.values.iter().map(|v| v - self.ubar).collect()
    }

    pub fn mean_perturbation(&self) -> f64 {
        math::pairwise_sum(&self.perturbation()) / self.field.values.len() as f64
    }

    pub fn sup_perturbation(&self) -> f64 {
        self.field
            .values
            .iter()
            .fold(0.0, |m, v| m.max((v - self.ubar).abs()))
    }

    /// Spectral gradient of `w`, one component per torus axis.
    pub fn gradient(&self) -> Vec<Vec<f64>> {
        spectral_gradient(&self.field)
    }

    /// `max(sup|w|, maxᵢ sup|∂ᵢw|)`.
    pub fn w1_inf(&self) -> f64 {
        self.gradient()
            .iter()
            .map(|g| math::max_abs(g))
            .fold(self.sup_perturbation(), f64::max)
    }
}

/// A periodic solution advanced one step at a time, exposing its predictor
/// stage so that a coupled solver can read consistent boundary data.
pub struct PeriodicSolver {
    state: PeriodicState,
    stepper: ImexStepper,
}

impl PeriodicSolver {
    pub fn new(w0: &TorusField, ubar: f64, flux: &FluxSet) -> Result<Self> {
        let grid = &w0.grid;
        if flux.dim() != grid.dim() {
            return Err(Error::InvalidArgument(alloc::format!(
                "flux set has {} components for a {}-torus",
                flux.dim(),
                grid.dim()
            )));
        }
        let mean = w0.mean();
        if mean.abs() > MEAN_TOL {
            return Err(Error::NonZeroMean { mean });
        }
        let imex = ImexGrid {
            shape: grid.counts.clone(),
            spacing: (0..grid.dim()).map(|a| grid.spacing(a)).collect(),
            periodic_axis0: true,
        };
        let stepper = ImexStepper::new(imex, flux.fluxes().to_vec())?;
        let values = w0.values.iter().map(|w| ubar + w).collect();
        let field = TorusField::new(grid.clone(), values)?;
        Ok(PeriodicSolver {
            state: PeriodicState {
                field,
                t: 0.0,
                ubar,
            },
            stepper,
        })
    }

    pub fn state(&self) -> &PeriodicState {
        &self.state
    }

    /// Predictor values of the last step.
    pub fn stage(&self) -> &[f64] {
        self.stepper.stage()
    }

    pub fn cfl_rate(&self) -> f64 {
        self.stepper.cfl_rate(&self.state.field.values)
    }

    pub fn step(&mut self, dt: f64) {
        self.stepper.step(&mut self.state.field.values, dt, None);
        self.state.t += dt;
    }

    /// Pins the clock after a step that was clipped to land on `t`.
    pub fn set_time(&mut self, t: f64) {
        self.state.t = t;
    }
}

/// Solves on the torus from `ū + w₀`, returning a state at each snapshot time.
pub fn solve_periodic(
    w0: &TorusField,
    ubar: f64,
    flux: &FluxSet,
    snapshots: &[f64],
    step: TimeStep,
) -> Result<Vec<PeriodicState>> {
    step.validate()?;
    if snapshots.windows(2).any(|w| w[1] < w[0]) || snapshots.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument(
            "snapshot times must be ascending and >= 0".into(),
        ));
    }
    let mut solver = PeriodicSolver::new(w0, ubar, flux)?;
    let mut out = Vec::with_capacity(snapshots.len());
    for &target in snapshots {
        while solver.state.t < target {
            let t = solver.state.t;
            let dt = step.choose(t, solver.cfl_rate(), target)?;
            solver.step(dt);
            if dt == target - t {
                solver.set_time(target);
            }
        }
        if solver.state.field.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: solver.state.t });
        }
        out.push(solver.state.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    /// Half the fitted decay rate: the series behaves like `C e^{−2αt}`.
    pub alpha: f64,
    pub r2: f64,
    pub n_points: usize,
}

impl ExpFit {
    pub fn rate(&self) -> f64 {
        2.0 * self.alpha
    }
}

/// Log-linear least squares of `value` against `t` over `t ∈ [t_min, t_max]`.
pub fn fit_exponential_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<ExpFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window.0 && t <= window.1)
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            found: pts.len(),
        });
    }
    if let Some(&(t, v)) = pts.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(Error::NonPositive { t, value: v });
    }
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ls: Vec<f64> = pts.iter().map(|p| math::ln(p.1)).collect();
    let f = linear_fit(&ts, &ls)?;
    Ok(ExpFit {
        alpha: -0.5 * f.slope,
        r2: f.r2,
        n_points: f.n_points,
    })
}

/// Samples a trigonometric perturbation on a torus grid.
pub fn sample_on_torus(grid: &TorusGrid, w: &crate::trig::TrigPoly) -> TorusField {
    TorusField::from_fn(grid, |x| w.eval(x))
}
