//! The full equation on the truncated cylinder with far-field data taken
//! from the two periodic solutions, advanced in lockstep.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::ansatz::{self, AnsatzBundle};
use crate::domain::{gradient, lp_norm, tail_mass_fraction, vector_lp_norm, DomainSpec, Field};
use crate::error::{Error, Result};
use crate::flux::FluxSet;
use crate::imex::{Ghosts, ImexGrid, ImexStepper, StepBoundary, TimeStep, CFL_LIMIT};
use crate::periodic::{sample_on_torus, PeriodicSolver, PeriodicState};
use crate::profile::{evolve_profile, initial_profile, ProfileState};
use crate::torus::{TorusField, TorusGrid};
use crate::trig::{LineProfile, TrigMode, TrigPoly};

/// How the profile `ũᴿ` entering the ansatz is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileMode {
    /// On the `x₁` grid of the run, advanced with the same steps. The ansatz
    /// is then discretely consistent: with `w₀ = v₀ = 0` the perturbation
    /// vanishes to rounding, so `φ` measures the perturbation itself rather
    /// than the gap between two discretisations of `ũᴿ`.
    Lockstep,
    /// On a grid this many times finer, evolved independently and
    /// interpolated; `φ` then also carries the truncation error of the run.
    Refined(usize),
}

/// Minimum distance kept between the fan edge at `t_end` and `x₁ = ±L`.
pub const FAN_MARGIN: f64 = 10.0;

/// Below this `‖φ‖₁` the perturbation is rounding noise spread over the whole
/// grid and its tail fraction says nothing about the boundary.
pub const TAIL_NOISE_FLOOR: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub spec: DomainSpec,
    pub flux: FluxSet,
    pub ul: f64,
    pub ur: f64,
    pub w0: TrigPoly,
    pub v0: Option<LineProfile>,
    pub t_end: f64,
    /// Times at which norms are recorded; `t_end` is always added.
    pub snapshots: Vec<f64>,
    pub step: TimeStep,
    /// Largest admissible fraction of `∫|φ|` in `|x₁| > 0.9 L`.
    pub tail_threshold: f64,
    pub profile: ProfileMode,
    /// Keep `u`, `φ` and the ansatz at every snapshot.
    pub keep_fields: bool,
}

impl SolverConfig {
    /// Burgers in two dimensions, `ū = ∓1/2`, `w₀ = 0.1 sin(2πx₁) sin(2πx₂)`,
    /// `L = 80`, `dx₁ = 0.05`, 20 transverse cells, `t_end = 100`.
    pub fn reference() -> Self {
        let spec = DomainSpec::new(2, 80.0, 3200, vec![20]).expect("valid reference domain");
        SolverConfig {
            spec,
            flux: FluxSet::burgers(2),
            ul: -0.5,
            ur: 0.5,
            w0: TrigPoly::new(vec![TrigMode::new(vec![1, 1], 0.1)]),
            v0: None,
            t_end: 100.0,
            snapshots: default_schedule(100.0),
            step: TimeStep::Cfl {
                cfl: 0.4,
                max_dt: None,
            },
            tail_threshold: 1e-6,
            profile: ProfileMode::Lockstep,
            keep_fields: false,
        }
    }

    /// All violated invariants, in a fixed order. Empty when the run may start.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if let Err(e) = self.spec.validate() {
            v.push(format!("{e}"));
            return v;
        }
        if self.flux.dim() != self.spec.dim {
            v.push(format!(
                "flux set has {} components but the domain has dimension {}",
                self.flux.dim(),
                self.spec.dim
            ));
        }
        if !(self.ul < self.ur) {
            v.push(format!(
                "end states must satisfy ul < ur, got ({}, {})",
                self.ul, self.ur
            ));
        } else if let Err(e) = self.flux.check_convexity(self.ul, self.ur) {
            v.push(format!("{e}"));
        }
        if let Err(e) = self.w0.validate(self.spec.dim) {
            v.push(format!("{e}"));
        }
        if !(self.t_end > 0.0) {
            v.push(format!("t_end must be positive, got {}", self.t_end));
        } else {
            let f1 = self.flux.get(1);
            let speed = f1.df(self.ul).abs().max(f1.df(self.ur).abs());
            let need = speed * self.t_end + FAN_MARGIN;
            if self.spec.half_length < need {
                v.push(format!(
                    "half-length L = {} is below the fan-speed bound max|f1'(u)|·t_end + {FAN_MARGIN} = {need}",
                    self.spec.half_length
                ));
            }
        }
        if let Err(e) = self.step.validate() {
            v.push(format!("{e}"));
        }
        if let Err(e) = TorusGrid::aligned_with(&self.spec) {
            v.push(format!("{e}"));
        }
        if self.snapshots.windows(2).any(|w| w[1] <= w[0])
            || self
                .snapshots
                .iter()
                .any(|&t| !(t >= 0.0 && t <= self.t_end))
        {
            v.push("snapshot times must be strictly increasing within [0, t_end]".into());
        }
        if !(self.tail_threshold > 0.0) {
            v.push("tail-mass threshold must be positive".into());
        }
        if self.profile == ProfileMode::Refined(0) {
            v.push("profile refinement factor must be at least 1".into());
        }
        if let Some(p) = self.v0 {
            if p.support_radius() >= 0.5 * self.spec.half_length {
                v.push("v0 is not negligible inside the truncated domain".into());
            }
        }
        v
    }

    fn schedule(&self) -> Vec<f64> {
        let mut s = self.snapshots.clone();
        if s.last().is_none_or(|&t| t < self.t_end) {
            s.push(self.t_end);
        }
        s
    }
}

/// `{0, 1/4, 1/2}` followed by ten points per decade from 1 to `t_end`.
pub fn default_schedule(t_end: f64) -> Vec<f64> {
    let mut s: Vec<f64> = [0.0, 0.25, 0.5]
        .into_iter()
        .filter(|&t| t < t_end)
        .collect();
    let mut k = 0;
    loop {
        let t = crate::math::powf(10.0, k as f64 / 10.0);
        let t = crate::math::round(t * 1e6) / 1e6;
        if t >= t_end {
            break;
        }
        s.push(t);
        k += 1;
    }
    s.push(t_end);
    s
}

/// Norms of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRow {
    pub t: f64,
    pub phi_l1: f64,
    pub phi_l2: f64,
    pub phi_l4: f64,
    pub phi_inf: f64,
    pub grad_phi_l2: f64,
    pub grad_phi_l4: f64,
    /// `sup |u − ũᴿ|`.
    pub dev_inf: f64,
    pub h_l1: f64,
    pub tail_mass: f64,
    /// `sup |ũ − ũᴿ|`.
    pub ansatz_gap: f64,
    /// `max |u − u_l|` on the first row and `|u − u_r|` on the last.
    pub boundary_gap: f64,
}

impl NormRow {
    pub const HEADER: [&'static str; 12] = [
        "t",
        "phi_l1",
        "phi_l2",
        "phi_l4",
        "phi_inf",
        "grad_phi_l2",
        "grad_phi_l4",
        "u_minus_profile_inf",
        "h_l1",
        "tail_mass",
        "ansatz_gap_inf",
        "boundary_gap",
    ];

    pub fn values(&self) -> [f64; 12] {
        [
            self.t,
            self.phi_l1,
            self.phi_l2,
            self.phi_l4,
            self.phi_inf,
            self.grad_phi_l2,
            self.grad_phi_l4,
            self.dev_inf,
            self.h_l1,
            self.tail_mass,
            self.ansatz_gap,
            self.boundary_gap,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub u: Field,
    pub phi: Field,
    pub bundle: AnsatzBundle,
    pub ul: PeriodicState,
    pub ur: PeriodicState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<NormRow>,
    pub snapshots: Vec<Snapshot>,
    /// Largest per-step growth of the range beyond that of the old state and
    /// its boundary data.
    pub max_principle_excess: f64,
    pub steps: usize,
    pub initial_range: (f64, f64),
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn series(&self, pick: impl Fn(&NormRow) -> f64) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, pick(r))).collect()
    }
}

/// `φ = u − ũ`.
pub fn perturbation_field(u: &Field, bundle: &AnsatzBundle) -> Result<Field> {
    if !ansatz::same_time(u.t(), bundle.t) {
        return Err(Error::TimeMismatch {
            expected: bundle.t,
            found: u.t(),
        });
    }
    u.zip_with(&bundle.u_tilde, |a, b| a - b)
}

fn ghosts_from(values: &[f64], counts0: usize, spec: &DomainSpec) -> Ghosts {
    let tl = spec.transverse_len();
    let row = |i: isize| {
        let r = i.rem_euclid(counts0 as isize) as usize;
        values[r * tl..(r + 1) * tl].to_vec()
    };
    let n = spec.n1 as isize;
    Ghosts {
        left: [row(-1), row(-2)],
        right: [row(n), row(n + 1)],
    }
}

fn range_of(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn ghost_range(g: &Ghosts) -> (f64, f64) {
    g.left
        .iter()
        .chain(g.right.iter())
        .map(|s| range_of(s))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| {
            (a.0.min(b.0), a.1.max(b.1))
        })
}

fn norm_row(
    spec: &DomainSpec,
    u: &Field,
    phi: &Field,
    bundle: &AnsatzBundle,
    ul: &PeriodicState,
    ur: &PeriodicState,
) -> Result<NormRow> {
    let grad = gradient(phi);
    let tl = spec.transverse_len();
    let dev_inf = u.values().iter().enumerate().fold(0.0f64, |m, (k, v)| {
        m.max((v - bundle.profile[k / tl]).abs())
    });
    let grid = ul.grid();
    let last = (spec.n1 - 1) * tl;
    let mut boundary_gap = 0.0f64;
    for k in 0..tl {
        boundary_gap =
            boundary_gap.max((u.values()[k] - ul.values()[grid.aligned_index(spec, k)]).abs());
        let kr = last + k;
        boundary_gap =
            boundary_gap.max((u.values()[kr] - ur.values()[grid.aligned_index(spec, kr)]).abs());
    }
    Ok(NormRow {
        t: u.t(),
        phi_l1: lp_norm(phi, 1.0)?,
        phi_l2: lp_norm(phi, 2.0)?,
        phi_l4: lp_norm(phi, 4.0)?,
        phi_inf: lp_norm(phi, f64::INFINITY)?,
        grad_phi_l2: vector_lp_norm(&grad, 2.0)?,
        grad_phi_l4: vector_lp_norm(&grad, 4.0)?,
        dev_inf,
        h_l1: lp_norm(&bundle.h, 1.0)?,
        tail_mass: tail_mass_fraction(phi),
        ansatz_gap: bundle.gap_inf(),
        boundary_gap,
    })
}

/// Runs the configured experiment.
pub fn run(config: &SolverConfig) -> Result<Trajectory> {
    let issues = config.violations();
    if !issues.is_empty() {
        config.w0.validate(config.spec.dim)?;
        return Err(Error::InvalidArgument(issues.join("; ")));
    }
    let spec = &config.spec;
    let flux = &config.flux;
    let schedule = config.schedule();

    let torus = TorusGrid::aligned_with(spec)?;
    let w0: TorusField = sample_on_torus(&torus, &config.w0);
    let mut left = PeriodicSolver::new(&w0, config.ul, flux)?;
    let mut right = PeriodicSolver::new(&w0, config.ur, flux)?;

    let line = flux.truncated(1)?;
    let refined = match config.profile {
        ProfileMode::Refined(r) => {
            let step = match config.step {
                TimeStep::Fixed(dt) => TimeStep::Fixed(dt / r as f64),
                other => other,
            };
            let p0 = ProfileState::initial(spec.half_length, spec.n1 * r, config.ul, config.ur)?;
            Some(evolve_profile(&p0, &line, &schedule, step)?)
        }
        ProfileMode::Lockstep => None,
    };
    let mut profile = ProfileState::initial(spec.half_length, spec.n1, config.ul, config.ur)?;
    let line_grid = ImexGrid {
        shape: vec![spec.n1],
        spacing: vec![spec.dx1()],
        periodic_axis0: false,
    };
    let mut line_stepper = ImexStepper::new(line_grid, vec![*line.get(1)])?;
    let line_ghosts = Ghosts::constant(1, config.ul, config.ur);

    let tl = spec.transverse_len();
    let values: Vec<f64> = (0..spec.len())
        .map(|k| {
            let x1 = spec.x1(k / tl);
            let v0 = config.v0.map_or(0.0, |p| p.eval(x1));
            initial_profile(x1, config.ul, config.ur) + v0 + w0.values[torus.aligned_index(spec, k)]
        })
        .collect();
    let initial_range = range_of(&values);
    let mut u = values;

    let imex = ImexGrid {
        shape: spec.shape(),
        spacing: (0..spec.dim).map(|a| spec.spacing(a)).collect(),
        periodic_axis0: false,
    };
    let mut stepper = ImexStepper::new(imex, flux.fluxes().to_vec())?;
    let n0 = torus.counts[0];

    let mut t = 0.0;
    let mut steps = 0usize;
    let mut excess = 0.0f64;
    let mut rows = Vec::with_capacity(schedule.len());
    let mut snaps = Vec::new();
    for (idx, &target) in schedule.iter().enumerate() {
        while t < target {
            let rate = stepper
                .cfl_rate(&u)
                .max(left.cfl_rate())
                .max(right.cfl_rate());
            let dt = config.step.choose(t, rate, target)?;
            if dt * rate > CFL_LIMIT * (1.0 + 1e-12) {
                return Err(Error::CflViolation {
                    t,
                    cfl: dt * rate,
                    limit: CFL_LIMIT,
                });
            }
            let now = merge(
                ghosts_from(left.state().values(), n0, spec),
                ghosts_from(right.state().values(), n0, spec),
            );
            left.step(dt);
            right.step(dt);
            let stage = merge(
                ghosts_from(left.stage(), n0, spec),
                ghosts_from(right.stage(), n0, spec),
            );
            let next = merge(
                ghosts_from(left.state().values(), n0, spec),
                ghosts_from(right.state().values(), n0, spec),
            );

            let (mut lo, mut hi) = range_of(&u);
            for g in [&now, &stage, &next] {
                let (a, b) = ghost_range(g);
                lo = lo.min(a);
                hi = hi.max(b);
            }
            stepper.step(
                &mut u,
                dt,
                Some(StepBoundary {
                    now: &now,
                    stage: &stage,
                    next: &next,
                }),
            );
            if refined.is_none() {
                let b = StepBoundary {
                    now: &line_ghosts,
                    stage: &line_ghosts,
                    next: &line_ghosts,
                };
                line_stepper.step(&mut profile.values, dt, Some(b));
            }
            let (nlo, nhi) = range_of(&u);
            if !(nlo.is_finite() && nhi.is_finite()) {
                return Err(Error::NonFinite { t: t + dt });
            }
            excess = excess.max(nhi - hi).max(lo - nlo);

            t = if dt == target - t { target } else { t + dt };
            left.set_time(t);
            right.set_time(t);
            profile.t = t;
            steps += 1;
        }
        let field = Field::new(spec.clone(), u.clone(), t)?;
        let current = match &refined {
            Some(list) => &list[idx],
            None => &profile,
        };
        let bundle = ansatz::assemble(spec, left.state(), right.state(), current, flux)?;
        let phi = perturbation_field(&field, &bundle)?;
        let row = norm_row(spec, &field, &phi, &bundle, left.state(), right.state())?;
        if row.phi_l1 > TAIL_NOISE_FLOOR && row.tail_mass > config.tail_threshold {
            return Err(Error::TailMass {
                t,
                fraction: row.tail_mass,
                threshold: config.tail_threshold,
            });
        }
        rows.push(row);
        if config.keep_fields {
            snaps.push(Snapshot {
                u: field,
                phi,
                bundle,
                ul: left.state().clone(),
                ur: right.state().clone(),
            });
        }
    }
    Ok(Trajectory {
        rows,
        snapshots: snaps,
        max_principle_excess: excess,
        steps,
        initial_range,
    })
}

/// Left ghosts from `l`, right ghosts from `r`.
fn merge(l: Ghosts, r: Ghosts) -> Ghosts {
    Ghosts {
        left: l.left,
        right: r.right,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_is_valid() {
        assert!(SolverConfig::reference().violations().is_empty());
    }

    #[test]
    fn short_domain_names_fan_bound() {
        let mut c = SolverConfig::reference();
        c.spec = c.spec.with_x1(40.0, 1600).unwrap();
        let v = c.violations();
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("fan-speed bound"));
    }

    #[test]
    fn schedule_is_increasing_and_ends_at_t_end() {
        let s = default_schedule(100.0);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*s.last().unwrap(), 100.0);
        assert!(s.iter().filter(|&&t| t >= 10.0).count() >= 10);
    }
}
