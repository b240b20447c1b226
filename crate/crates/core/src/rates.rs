//! Power-law fits of norm histories against the predicted decay exponents.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::math;
use crate::solver::{NormRow, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Slope of `ln value` against `ln(1 + t)`.
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

pub fn fit_power_law(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
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
    let xs: Vec<f64> = pts.iter().map(|p| math::ln(1.0 + p.0)).collect();
    let ys: Vec<f64> = pts.iter().map(|p| math::ln(p.1)).collect();
    let f = linear_fit(&xs, &ys)?;
    Ok(RateFit {
        exponent: f.slope,
        intercept: f.intercept,
        r2: f.r2,
        window,
        n_points: f.n_points,
    })
}

/// Exponent tolerance at the reference resolution.
pub const TOLERANCE: f64 = 0.15;
/// Required goodness of fit.
pub const MIN_R2: f64 = 0.95;
/// Below this level a series is solver noise and is not fitted.
pub const DEGENERATE_LEVEL: f64 = 1e-12;
/// Largest admissible max/min of a series asserted to stay bounded.
pub const BOUNDED_SPREAD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Within tolerance of the prediction (or bounded, for `p = 1`).
    Pass,
    /// Decays faster than predicted; the prediction is an upper bound.
    ConsistentSteeper,
    Fail,
    /// The series is at noise level; nothing to fit.
    Degenerate,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::ConsistentSteeper => "consistent-steeper",
            Status::Fail => "fail",
            Status::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub name: String,
    pub predicted: f64,
    pub tolerance: f64,
    pub fit: Option<RateFit>,
    /// `max/min` of the series over the window.
    pub spread: f64,
    pub status: Status,
}

fn classify(fit: &RateFit, predicted: f64, tol: f64) -> Status {
    if fit.r2 < MIN_R2 {
        Status::Fail
    } else if (fit.exponent - predicted).abs() <= tol {
        Status::Pass
    } else if fit.exponent < predicted {
        Status::ConsistentSteeper
    } else {
        Status::Fail
    }
}

fn default_window(traj: &Trajectory) -> Result<(f64, f64)> {
    let t_end = traj
        .rows
        .last()
        .map(|r| r.t)
        .ok_or(Error::InsufficientData {
            needed: 4,
            found: 0,
        })?;
    Ok((0.1 * t_end, t_end))
}

fn resolve_window(traj: &Trajectory, window: Option<(f64, f64)>) -> Result<(f64, f64)> {
    let default = default_window(traj)?;
    match window {
        None => Ok(default),
        Some(w) if w.0 < default.0 * (1.0 - 1e-12) => Err(Error::InvalidArgument(format!(
            "fit window starts at t={} before the transient ends at t={}",
            w.0, default.0
        ))),
        Some(w) => Ok(w),
    }
}

fn report(
    traj: &Trajectory,
    name: String,
    pick: impl Fn(&NormRow) -> f64,
    predicted: f64,
    window: (f64, f64),
) -> Result<RateReport> {
    let series = traj.series(pick);
    let inside: Vec<f64> = series
        .iter()
        .filter(|p| p.0 >= window.0 && p.0 <= window.1)
        .map(|p| p.1)
        .collect();
    let hi = inside.iter().copied().fold(0.0, f64::max);
    let lo = inside.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if hi < DEGENERATE_LEVEL {
        return Ok(RateReport {
            name,
            predicted,
            tolerance: TOLERANCE,
            fit: None,
            spread,
            status: Status::Degenerate,
        });
    }
    let fit = fit_power_law(&series, window)?;
    let status = classify(&fit, predicted, TOLERANCE);
    Ok(RateReport {
        name,
        predicted,
        tolerance: TOLERANCE,
        fit: Some(fit),
        spread,
        status,
    })
}

/// `‖u − ũᴿ‖_∞` against `(1+t)^{−1/2}`.
pub fn verify_main_theorem(traj: &Trajectory, window: Option<(f64, f64)>) -> Result<RateReport> {
    let w = resolve_window(traj, window)?;
    report(traj, "u_minus_profile_inf".into(), |r| r.dev_inf, -0.5, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Phi,
    GradPhi,
}

/// Predicted exponent, or the reason `p` is outside the estimate's range.
pub fn predicted_exponent(which: Which, p: f64) -> core::result::Result<f64, String> {
    match which {
        Which::Phi if p >= 1.0 && p.is_finite() => Ok(-0.5 + 0.5 / p),
        Which::Phi => Err(format!(
            "p = {p} is outside p ∈ [1, ∞) for the L^p decay of φ"
        )),
        Which::GradPhi if p >= 2.0 && p.is_finite() => Ok(-1.0 + 0.5 / p),
        Which::GradPhi => Err(format!(
            "p = {p} is outside p ∈ [2, ∞) for the L^p decay of ∇φ"
        )),
    }
}

type Column = fn(&NormRow) -> f64;

#[allow(clippy::redundant_guards)]
fn column(which: Which, p: f64) -> Option<Column> {
    match (which, p) {
        (Which::Phi, x) if x == 1.0 => Some(|r| r.phi_l1),
        (Which::Phi, x) if x == 2.0 => Some(|r| r.phi_l2),
        (Which::Phi, x) if x == 4.0 => Some(|r| r.phi_l4),
        (Which::GradPhi, x) if x == 2.0 => Some(|r| r.grad_phi_l2),
        (Which::GradPhi, x) if x == 4.0 => Some(|r| r.grad_phi_l4),
        _ => None,
    }
}

/// `‖φ‖_p ~ (1+t)^{−1/2+1/(2p)}` and `‖∇φ‖_p ~ (1+t)^{−1+1/(2p)}`; `p = 1`
/// for `φ` is a boundedness check.
pub fn verify_apriori(
    traj: &Trajectory,
    p: f64,
    which: Which,
    window: Option<(f64, f64)>,
) -> Result<RateReport> {
    let predicted = predicted_exponent(which, p).map_err(Error::InvalidArgument)?;
    let pick = column(which, p).ok_or_else(|| {
        Error::InvalidArgument(format!("p = {p} is not recorded in the norm table"))
    })?;
    let w = resolve_window(traj, window)?;
    let name = match which {
        Which::Phi => format!("phi_l{p}"),
        Which::GradPhi => format!("grad_phi_l{p}"),
    };
    let mut rep = report(traj, name, pick, predicted, w)?;
    if which == Which::Phi && p == 1.0 && rep.status != Status::Degenerate {
        rep.status = if rep.spread <= BOUNDED_SPREAD {
            Status::Pass
        } else {
            Status::Fail
        };
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingReport {
    /// `(1/p, fitted exponent)` for `p ∈ {∞, 4, 2, 1}`.
    pub fits: Vec<(f64, f64)>,
    pub slack: f64,
    pub monotone: bool,
}

/// Fitted `‖φ‖_p` exponents must not decrease with `1/p` by more than `slack`,
/// matching the ordering of `−1/2 + 1/(2p)`.
pub fn ordering_check(
    traj: &Trajectory,
    window: Option<(f64, f64)>,
    slack: f64,
) -> Result<OrderingReport> {
    let w = resolve_window(traj, window)?;
    let cols: [(f64, Column); 4] = [
        (0.0, |r| r.phi_inf),
        (0.25, |r| r.phi_l4),
        (0.5, |r| r.phi_l2),
        (1.0, |r| r.phi_l1),
    ];
    let mut fits = Vec::with_capacity(4);
    for (inv_p, pick) in cols {
        fits.push((inv_p, fit_power_law(&traj.series(pick), w)?.exponent));
    }
    let monotone = fits.windows(2).all(|f| f[1].1 >= f[0].1 - slack);
    Ok(OrderingReport {
        fits,
        slack,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = (1..20)
            .map(|k| (k as f64, math::powf(1.0 + k as f64, -0.5)))
            .collect();
        let f = fit_power_law(&s, (1.0, 19.0)).unwrap();
        assert!((f.exponent + 0.5).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predicted_ranges() {
        assert_eq!(predicted_exponent(Which::Phi, 2.0).unwrap(), -0.25);
        assert_eq!(predicted_exponent(Which::GradPhi, 2.0).unwrap(), -0.75);
        assert!(predicted_exponent(Which::GradPhi, 1.0)
            .unwrap_err()
            .contains("[2, ∞)"));
    }
}
