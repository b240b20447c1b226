//! The 1-d viscous rarefaction profile and the inviscid fan it approaches.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{DomainSpec, Field};
use crate::error::{Error, Result};
use crate::flux::{Flux, FluxSet};
use crate::imex::{Ghosts, ImexGrid, ImexStepper, StepBoundary, TimeStep};
use crate::math;

/// Samples of `ũᴿ(·, t)` at the cell centres of `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileState {
    pub half_length: f64,
    pub values: Vec<f64>,
    pub t: f64,
    pub ul: f64,
    pub ur: f64,
}

impl ProfileState {
    /// Tanh initial data on `n` cells.
    pub fn initial(half_length: f64, n: usize, ul: f64, ur: f64) -> Result<Self> {
        if !(half_length > 0.0) || n < 4 {
            return Err(Error::InvalidDomain(
                "profile grid needs L > 0 and at least 4 cells".into(),
            ));
        }
        if !(ul <= ur) {
            return Err(Error::InvalidArgument(alloc::format!(
                "end states must satisfy ul <= ur, got ({ul}, {ur})"
            )));
        }
        let dx = 2.0 * half_length / n as f64;
        let values = (0..n)
            .map(|i| initial_profile(-half_length + (i as f64 + 0.5) * dx, ul, ur))
            .collect();
        Ok(ProfileState {
            half_length,
            values,
            t: 0.0,
            ul,
            ur,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.values.len() as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_length + (i as f64 + 0.5) * self.dx()
    }

    /// Interface differences `(ũ_{i} − ũ_{i−1})/dx` at `x = −L + i·dx`,
    /// `i = 0..=n`, with the end states as boundary values. They telescope
    /// to `(ur − ul)/dx`.
    pub fn slopes(&self) -> Vec<f64> {
        let n = self.values.len();
        let inv = 1.0 / self.dx();
        (0..=n)
            .map(|i| {
                let hi = if i < n { self.values[i] } else { self.ur };
                let lo = if i > 0 { self.values[i - 1] } else { self.ul };
                (hi - lo) * inv
            })
            .collect()
    }

    /// Cubic interpolation of the profile at `x`; the end states beyond the grid.
    pub fn sample(&self, x: f64) -> f64 {
        let dx = self.dx();
        lagrange4(
            &self.values,
            -self.half_length + 0.5 * dx,
            dx,
            self.ul,
            self.ur,
            x,
        )
    }

    /// Cubic interpolation of [`ProfileState::slopes`] at `x`.
    pub fn sample_slope(&self, x: f64, slopes: &[f64]) -> f64 {
        lagrange4(slopes, -self.half_length, self.dx(), 0.0, 0.0, x)
    }

    /// Range and monotonicity check with the given slack.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        for (i, &v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { t: self.t });
            }
            if v < self.ul - tol || v > self.ur + tol {
                return Err(Error::InvalidArgument(alloc::format!(
                    "profile value {v} at x={} leaves [{}, {}] at t={}",
                    self.x(i),
                    self.ul,
                    self.ur,
                    self.t
                )));
            }
        }
        if let Some(s) = self.slopes().iter().find(|&&s| s < -tol) {
            return Err(Error::InvalidArgument(alloc::format!(
                "profile lost monotonicity (slope {s}) at t={}",
                self.t
            )));
        }
        Ok(())
    }

    /// The profile as a one-dimensional field.
    pub fn to_field(&self) -> Result<Field> {
        let spec = DomainSpec::line(self.half_length, self.values.len())?;
        Field::new(spec, self.values.clone(), self.t)
    }
}

/// Uniform-grid four-point Lagrange interpolation with constant extension.
pub(crate) fn lagrange4(values: &[f64], x0: f64, dx: f64, left: f64, right: f64, x: f64) -> f64 {
    let n = values.len() as isize;
    let s = (x - x0) / dx;
    let i = libm::floor(s);
    let f = s - i;
    let i = i as isize;
    let at = |k: isize| {
        if k < 0 {
            left
        } else if k >= n {
            right
        } else {
            values[k as usize]
        }
    };
    if i < -2 {
        return left;
    }
    if i > n + 1 {
        return right;
    }
    let w = [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ];
    w[0] * at(i - 1) + w[1] * at(i) + w[2] * at(i + 1) + w[3] * at(i + 2)
}

fn check_increasing(f: &Flux, ul: f64, ur: f64) -> Result<()> {
    const SAMPLES: usize = 1001;
    let mut prev = f.df(ul);
    for k in 1..SAMPLES {
        let u = ul + (ur - ul) * k as f64 / (SAMPLES - 1) as f64;
        let d = f.df(u);
        if !(d > prev) {
            return Err(Error::NotMonotone(alloc::format!(
                "f1' fails to increase near u={u}"
            )));
        }
        prev = d;
    }
    Ok(())
}

/// Entropy solution of the Riemann problem for `f₁` at `(x₁, t)`.
pub fn inviscid_rarefaction(x1: f64, t: f64, flux: &FluxSet, ul: f64, ur: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "time must be positive, got {t}"
        )));
    }
    if !(ul < ur) {
        return Err(Error::InvalidArgument(
            "rarefaction requires ul < ur".into(),
        ));
    }
    let f = flux.get(1);
    check_increasing(f, ul, ur)?;
    let xi = x1 / t;
    if xi <= f.df(ul) {
        return Ok(ul);
    }
    if xi > f.df(ur) {
        return Ok(ur);
    }
    let (mut lo, mut hi) = (ul, ur);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f.df(mid) < xi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `(ul + ur)/2 + (ur − ul)/2 · tanh(x₁)`, saturated for `|x₁| > 350`.
pub fn initial_profile(x1: f64, ul: f64, ur: f64) -> f64 {
    if x1 > 350.0 {
        ur
    } else if x1 < -350.0 {
        ul
    } else {
        0.5 * (ul + ur) + 0.5 * (ur - ul) * math::tanh(x1)
    }
}

/// Evolves `p0` under `∂ₜu + ∂₁f₁(u) = ∂₁²u` with the end states pinned,
/// returning one state per entry of `snapshots` (ascending, `≥ p0.t`).
pub fn evolve_profile(
    p0: &ProfileState,
    flux: &FluxSet,
    snapshots: &[f64],
    step: TimeStep,
) -> Result<Vec<ProfileState>> {
    step.validate()?;
    if snapshots.windows(2).any(|w| w[1] < w[0]) || snapshots.first().is_some_and(|&t| t < p0.t) {
        return Err(Error::InvalidArgument(
            "snapshot times must be ascending and >= t0".into(),
        ));
    }
    let n = p0.values.len();
    let grid = ImexGrid {
        shape: vec![n],
        spacing: vec![p0.dx()],
        periodic_axis0: false,
    };
    let mut stepper = ImexStepper::new(grid, vec![*flux.get(1)])?;
    let ghosts = Ghosts::constant(1, p0.ul, p0.ur);
    let bc = StepBoundary {
        now: &ghosts,
        stage: &ghosts,
        next: &ghosts,
    };

    let mut state = p0.clone();
    let mut out = Vec::with_capacity(snapshots.len());
    for &target in snapshots {
        while state.t < target {
            let rate = stepper.cfl_rate(&state.values);
            let dt = step.choose(state.t, rate, target)?;
            stepper.step(&mut state.values, dt, Some(bc));
            state.t = if dt == target - state.t {
                target
            } else {
                state.t + dt
            };
        }
        if state.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: state.t });
        }
        out.push(state.clone());
    }
    Ok(out)
}

/// Largest discrete slope and `t` times it.
pub fn oleinik_bound(p: &ProfileState) -> (f64, f64) {
    let max = p.slopes().into_iter().fold(f64::NEG_INFINITY, f64::max);
    (max, p.t * max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeNorm {
    pub p: f64,
    pub norm: f64,
    /// `norm / t^{−1+1/p}`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileNormReport {
    pub t: f64,
    /// `∫_{x<0}(ũᴿ − ul) + ∫_{x>0}(ur − ũᴿ)`.
    pub deviation_integral: f64,
    pub slope_norms: Vec<SlopeNorm>,
}

pub fn profile_norm_checks(p: &ProfileState, ps: &[f64]) -> Result<ProfileNormReport> {
    if !(p.t > 0.0) {
        return Err(Error::InvalidArgument(
            "profile norm checks need t > 0".into(),
        ));
    }
    let dx = p.dx();
    let dev: Vec<f64> = p
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| if p.x(i) < 0.0 { v - p.ul } else { p.ur - v })
        .collect();
    let deviation_integral = math::pairwise_sum(&dev) * dx;
    let slopes = p.slopes();
    let mut slope_norms = Vec::with_capacity(ps.len());
    for &q in ps {
        let norm = crate::domain::lp_norm_values(&slopes, dx, q)?;
        let expo = if q.is_infinite() {
            -1.0
        } else {
            -1.0 + 1.0 / q
        };
        slope_norms.push(SlopeNorm {
            p: q,
            norm,
            ratio: norm / math::powf(p.t, expo),
        });
    }
    Ok(ProfileNormReport {
        t: p.t,
        deviation_integral,
        slope_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riemann_fan_examples() {
        let f = FluxSet::burgers(1);
        assert_eq!(
            inviscid_rarefaction(-2.0, 1.0, &f, -0.5, 0.5).unwrap(),
            -0.5
        );
        assert!(inviscid_rarefaction(0.0, 1.0, &f, -0.5, 0.5).unwrap().abs() < 1e-12);
        assert!((inviscid_rarefaction(0.25, 1.0, &f, -0.5, 0.5).unwrap() - 0.25).abs() < 1e-12);
        assert!(inviscid_rarefaction(0.0, 0.0, &f, -0.5, 0.5).is_err());
        let lin = FluxSet::new(vec![Flux::Linear { speed: 1.0 }], 1.0).unwrap();
        assert!(matches!(
            inviscid_rarefaction(0.0, 1.0, &lin, -0.5, 0.5),
            Err(Error::NotMonotone(_))
        ));
    }

    #[test]
    fn tanh_profile_values() {
        assert_eq!(initial_profile(0.0, -0.5, 0.5), 0.0);
        assert_eq!(initial_profile(1e6, -0.5, 0.5), 0.5);
        assert!((initial_profile(1.0, -0.5, 0.5) - 0.3807970780).abs() < 1e-10);
    }

    #[test]
    fn interpolation_is_exact_for_cubics() {
        let vals: Vec<f64> = (0..10)
            .map(|i| (i as f64).powi(3) - 2.0 * i as f64)
            .collect();
        let x = 4.3;
        let v = lagrange4(&vals, 0.0, 1.0, 0.0, 0.0, x);
        assert!((v - (x * x * x - 2.0 * x)).abs() < 1e-12);
    }
}
