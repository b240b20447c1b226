//! Typed experiment configurations and their runs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use rarefaction_core::decomp::{
    check_membership, decompose, norm_bound, norm_bound_ratio, reconstruct,
};
use rarefaction_core::domain::{lp_norm, lp_norm_values, DomainSpec, Field};
use rarefaction_core::flux::FluxSet;
use rarefaction_core::imex::TimeStep;
use rarefaction_core::ineq::{
    counterexample_sobolev, counterexample_theta, derivative_interpolation_ratio,
    extreme_case_checks, gn_ratio, interpolation_ratio, solve_theta, top_component, GNParams,
};
use rarefaction_core::periodic::{fit_exponential_decay, sample_on_torus, solve_periodic};
use rarefaction_core::profile::{
    evolve_profile, inviscid_rarefaction, oleinik_bound, profile_norm_checks, ProfileState,
};
use rarefaction_core::rates::{
    ordering_check, predicted_exponent, verify_apriori, verify_main_theorem, OrderingReport,
    RateReport, Status, Which,
};
use rarefaction_core::solver::{self, NormRow, SolverConfig, Trajectory};
use rarefaction_core::torus::TorusGrid;
use rarefaction_core::trig::{LineProfile, TrigPoly};

use crate::config::{self, Config};
use crate::io::{self, write_records, write_table};
use crate::output::Outputs;
use crate::plot::{self, Curve, Panel};
use crate::{corpus, LabError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Simulate,
    Profile,
    Periodic,
    Decompose,
    GnStudy,
    Counterexample,
    Rates,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::Simulate,
        Kind::Profile,
        Kind::Periodic,
        Kind::Decompose,
        Kind::GnStudy,
        Kind::Counterexample,
        Kind::Rates,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Profile => "profile",
            Kind::Periodic => "periodic",
            Kind::Decompose => "decompose",
            Kind::GnStudy => "gn-study",
            Kind::Counterexample => "counterexample",
            Kind::Rates => "rates",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Which fields of a simulation are written as snapshot files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOutput {
    None,
    Final,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSpec {
    pub window: Option<(f64, f64)>,
    pub phi_p: Vec<f64>,
    pub grad_p: Vec<f64>,
    pub ordering_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateCfg {
    pub solver: SolverConfig,
    pub rates: RateSpec,
    pub fields: FieldOutput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCfg {
    pub half_length: f64,
    pub n1: usize,
    pub ul: f64,
    pub ur: f64,
    pub flux: FluxSet,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub step: TimeStep,
    pub norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicCfg {
    pub counts: Vec<usize>,
    pub ubar: Vec<f64>,
    pub w0: TrigPoly,
    pub flux: FluxSet,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub step: TimeStep,
    /// Fit only where `sup|w|` lies in this range.
    pub sup_window: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecompCfg {
    Input(PathBuf),
    Corpus { size: usize, dims: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnCfg {
    pub size: usize,
    pub dims: Vec<usize>,
    pub params: GNParams,
    pub interp: (f64, f64),
    pub deriv_p: f64,
    /// `(q, r)` of the line interpolation in the extreme cases.
    pub extreme: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleCfg {
    pub dims: Vec<usize>,
    pub dilations: Vec<f64>,
    pub thetas: Vec<f64>,
    pub profile: LineProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatesCfg {
    pub input: PathBuf,
    pub rates: RateSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Simulate(SimulateCfg),
    Profile(ProfileCfg),
    Periodic(PeriodicCfg),
    Decompose(DecompCfg),
    GnStudy(GnCfg),
    Counterexample(CounterexampleCfg),
    Rates(RatesCfg),
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub kind: Kind,
    pub seed: u64,
    pub body: Body,
    /// Canonical config text, hashed into the manifest.
    pub config_text: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub kind: Kind,
    pub files: Vec<String>,
    /// Combined hash of every CSV written.
    pub csv_sha256: String,
    pub summary: Value,
}

fn cfg_err(key: &str) -> impl Fn(rarefaction_core::Error) -> LabError + '_ {
    move |e| LabError::Config(format!("{key}: {e}"))
}

fn rate_spec(cfg: &Config, v: &mut Vec<String>) -> Result<RateSpec, LabError> {
    let window = match cfg.reals("rates.window")? {
        None => None,
        Some(w) if w.len() == 2 && w[0] < w[1] => Some((w[0], w[1])),
        Some(_) => {
            return Err(LabError::Config(
                "rates.window: expected `t_min, t_max` with t_min < t_max".into(),
            ))
        }
    };
    let phi_p = cfg
        .reals("rates.phi_p")?
        .unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
    let grad_p = cfg.reals("rates.grad_p")?.unwrap_or_else(|| vec![2.0, 4.0]);
    for &p in &phi_p {
        if let Err(e) = predicted_exponent(Which::Phi, p) {
            v.push(format!("rates.phi_p: {e}"));
        } else if ![1.0, 2.0, 4.0].contains(&p) {
            v.push(format!(
                "rates.phi_p: p = {p} is not recorded in the norm table (1, 2, 4)"
            ));
        }
    }
    for &p in &grad_p {
        if let Err(e) = predicted_exponent(Which::GradPhi, p) {
            v.push(format!("rates.grad_p: {e}"));
        } else if ![2.0, 4.0].contains(&p) {
            v.push(format!(
                "rates.grad_p: p = {p} is not recorded in the norm table (2, 4)"
            ));
        }
    }
    let ordering_slack = cfg.real("rates.ordering_slack")?.unwrap_or(0.1);
    Ok(RateSpec {
        window,
        phi_p,
        grad_p,
        ordering_slack,
    })
}

fn solver_config(cfg: &Config) -> Result<SolverConfig, LabError> {
    let r = SolverConfig::reference();
    let dim: usize = cfg.get_or("domain.dim", r.spec.dim)?;
    let half = cfg.real("domain.L")?.unwrap_or(r.spec.half_length);
    let n1 = match (cfg.get::<usize>("domain.n1")?, cfg.real("domain.dx1")?) {
        (Some(_), Some(_)) => {
            return Err(LabError::Config(
                "give domain.n1 or domain.dx1, not both".into(),
            ))
        }
        (Some(n), None) => n,
        (None, Some(dx)) => (2.0 * half / dx).round() as usize,
        (None, None) => (2.0 * half / r.spec.dx1()).round() as usize,
    };
    let n_torus = cfg
        .list::<usize>("domain.n_torus")?
        .unwrap_or_else(|| vec![r.spec.n_torus[0]; dim.saturating_sub(1)]);
    let spec = DomainSpec::new(dim, half, n1, n_torus).map_err(cfg_err("domain"))?;
    let flux = config::flux_set(cfg, dim)?;
    let ul = cfg.real("state.ul")?.unwrap_or(r.ul);
    let ur = cfg.real("state.ur")?.unwrap_or(r.ur);
    let w0 = if cfg.contains("w0.modes") {
        config::trig_poly(cfg, "w0.modes", dim)?
    } else {
        r.w0.clone()
    };
    let v0 = config::line_profile(cfg, "v0")?;
    let t_end = cfg.real("time.t_end")?.unwrap_or(r.t_end);
    let snapshots = config::snapshots(cfg, t_end)?;
    let step = config::time_step(cfg)?;
    let tail_threshold = cfg
        .real("solver.tail_threshold")?
        .unwrap_or(r.tail_threshold);
    let profile = config::profile_mode(cfg)?;
    Ok(SolverConfig {
        spec,
        flux,
        ul,
        ur,
        w0,
        v0,
        t_end,
        snapshots,
        step,
        tail_threshold,
        profile,
        keep_fields: false,
    })
}

fn uniform(t_end: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|k| t_end * k as f64 / count as f64)
        .collect()
}

fn check_step(step: &TimeStep, v: &mut Vec<String>) {
    if let Err(e) = step.validate() {
        v.push(format!("time: {e}"));
    }
}

fn check_schedule(s: &[f64], t_end: f64, v: &mut Vec<String>) {
    if !(t_end > 0.0) {
        v.push(format!("time.t_end must be positive, got {t_end}"));
    }
    if s.windows(2).any(|w| w[1] <= w[0]) || s.iter().any(|&t| !(t >= 0.0 && t <= t_end)) {
        v.push("time.snapshots must be strictly increasing within [0, t_end]".into());
    }
}

fn body(kind: Kind, cfg: &Config) -> Result<(Body, Vec<String>), LabError> {
    let mut v = Vec::new();
    let body = match kind {
        Kind::Simulate => {
            let solver = solver_config(cfg)?;
            v.extend(solver.violations());
            let rates = rate_spec(cfg, &mut v)?;
            let fields = match cfg.raw("output.fields").unwrap_or("final") {
                "none" => FieldOutput::None,
                "final" => FieldOutput::Final,
                "all" => FieldOutput::All,
                other => {
                    return Err(LabError::Config(format!(
                        "output.fields: expected none|final|all, got `{other}`"
                    )))
                }
            };
            Body::Simulate(SimulateCfg {
                solver,
                rates,
                fields,
            })
        }
        Kind::Profile => {
            let half = cfg.real("domain.L")?.unwrap_or(80.0);
            let n1 = cfg.get_or("domain.n1", 3200usize)?;
            let ul = cfg.real("state.ul")?.unwrap_or(-0.5);
            let ur = cfg.real("state.ur")?.unwrap_or(0.5);
            let flux = config::flux_set(cfg, 1)?;
            let t_end = cfg.real("time.t_end")?.unwrap_or(100.0);
            let mut snapshots = config::snapshots(cfg, t_end)?;
            snapshots.retain(|&t| t > 0.0);
            if snapshots.last().is_none_or(|&t| t < t_end) {
                snapshots.push(t_end);
            }
            let step = config::time_step(cfg)?;
            let norms = cfg
                .reals("profile.norms")?
                .unwrap_or_else(|| vec![1.0, 2.0, f64::INFINITY]);
            if let Err(e) = DomainSpec::line(half, n1) {
                v.push(format!("domain: {e}"));
            }
            if !(ul < ur) {
                v.push(format!("end states must satisfy ul < ur, got ({ul}, {ur})"));
            } else if let Err(e) = flux.check_convexity(ul, ur) {
                v.push(format!("flux: {e}"));
            }
            let speed = flux.get(1).max_speed(ul, ur);
            if half < speed * t_end + solver::FAN_MARGIN {
                v.push(format!(
                    "half-length L = {half} is below the fan-speed bound max|f1'(u)|·t_end + {} = {}",
                    solver::FAN_MARGIN,
                    speed * t_end + solver::FAN_MARGIN
                ));
            }
            check_step(&step, &mut v);
            check_schedule(&snapshots, t_end, &mut v);
            if norms.iter().any(|&p| !(p >= 1.0)) {
                v.push("profile.norms: exponents must be >= 1".into());
            }
            Body::Profile(ProfileCfg {
                half_length: half,
                n1,
                ul,
                ur,
                flux,
                t_end,
                snapshots,
                step,
                norms,
            })
        }
        Kind::Periodic => {
            let counts = cfg
                .list::<usize>("periodic.n")?
                .unwrap_or_else(|| vec![20, 20]);
            let dim = counts.len();
            let ubar = cfg
                .reals("periodic.ubar")?
                .unwrap_or_else(|| vec![-0.5, 0.5]);
            let w0 = if cfg.contains("w0.modes") {
                config::trig_poly(cfg, "w0.modes", dim)?
            } else {
                SolverConfig::reference().w0
            };
            let flux = config::flux_set(cfg, dim)?;
            let t_end = cfg.real("time.t_end")?.unwrap_or(2.0);
            let snapshots = match cfg.raw("time.snapshots") {
                None => uniform(t_end, 100),
                Some(_) => config::snapshots(cfg, t_end)?,
            };
            let step = if cfg.contains("time.dt")
                || cfg.contains("time.cfl")
                || cfg.contains("time.max_dt")
            {
                config::time_step(cfg)?
            } else {
                TimeStep::Cfl {
                    cfl: 0.4,
                    max_dt: Some(1e-3),
                }
            };
            let sup_window = match cfg.reals("periodic.sup_window")? {
                None => (1e-10, 1e-2),
                Some(w) if w.len() == 2 && 0.0 < w[0] && w[0] < w[1] => (w[0], w[1]),
                Some(_) => {
                    return Err(LabError::Config(
                        "periodic.sup_window: expected `lo, hi` with 0 < lo < hi".into(),
                    ))
                }
            };
            if let Err(e) = TorusGrid::new(counts.clone()) {
                v.push(format!("periodic.n: {e}"));
            }
            if let Err(e) = w0.validate(dim) {
                v.push(format!("w0.modes: {e}"));
            }
            if ubar.is_empty() {
                v.push("periodic.ubar: at least one mean state required".into());
            }
            check_step(&step, &mut v);
            check_schedule(&snapshots, t_end, &mut v);
            Body::Periodic(PeriodicCfg {
                counts,
                ubar,
                w0,
                flux,
                t_end,
                snapshots,
                step,
                sup_window,
            })
        }
        Kind::Decompose => match cfg.raw("decomp.input") {
            Some(p) => Body::Decompose(DecompCfg::Input(PathBuf::from(p))),
            None => {
                let size = cfg.get_or("corpus.size", 200usize)?;
                let dims = cfg
                    .list::<usize>("corpus.dims")?
                    .unwrap_or_else(|| vec![2, 3]);
                if dims.is_empty() || dims.iter().any(|&n| !(2..=3).contains(&n)) {
                    v.push("corpus.dims: dimensions must be 2 or 3".into());
                }
                Body::Decompose(DecompCfg::Corpus { size, dims })
            }
        },
        Kind::GnStudy => {
            let size = cfg.get_or("corpus.size", 100usize)?;
            let dims = cfg
                .list::<usize>("corpus.dims")?
                .unwrap_or_else(|| vec![2, 3]);
            if dims.is_empty() || dims.iter().any(|&n| !(2..=3).contains(&n)) {
                v.push("corpus.dims: dimensions must be 2 or 3".into());
            }
            let params = GNParams {
                j: cfg.get_or("gn.j", 0u32)?,
                m: cfg.get_or("gn.m", 1u32)?,
                p: cfg.real("gn.p")?.unwrap_or(2.0),
                q: cfg.real("gn.q")?.unwrap_or(1.0),
                r: cfg.real("gn.r")?.unwrap_or(2.0),
                decays: cfg.get_or("gn.decays", true)?,
            };
            if params.m > 2 {
                v.push("gn.m: derivative order must be at most 2".into());
            }
            if let Some(&n) = dims.iter().max() {
                if (0..n).all(|k| solve_theta(&params, k).is_err()) {
                    let e = solve_theta(&params, 0).unwrap_err();
                    v.push(format!("gn: no level admits these exponents ({e})"));
                }
            }
            let interp = (
                cfg.real("interp.p")?.unwrap_or(2.0),
                cfg.real("interp.q")?.unwrap_or(1.0),
            );
            if !(interp.0 >= 2.0 && interp.0.is_finite() && interp.1 >= 1.0 && interp.1 <= interp.0)
            {
                v.push(format!(
                    "interp: need 2 <= p < ∞ and 1 <= q <= p, got p={}, q={}",
                    interp.0, interp.1
                ));
            }
            let deriv_p = cfg.real("deriv.p")?.unwrap_or(2.0);
            if !(deriv_p >= 2.0 && deriv_p.is_finite()) {
                v.push(format!("deriv.p: need 2 <= p < ∞, got {deriv_p}"));
            }
            let extreme = (
                cfg.real("extreme.q")?.unwrap_or(2.0),
                cfg.real("extreme.r")?.unwrap_or(2.0),
            );
            if !(extreme.0 >= 1.0
                && extreme.0.is_finite()
                && extreme.1 > 1.0
                && extreme.1.is_finite())
            {
                v.push("extreme: need 1 <= q < ∞ and 1 < r < ∞".into());
            }
            Body::GnStudy(GnCfg {
                size,
                dims,
                params,
                interp,
                deriv_p,
                extreme,
            })
        }
        Kind::Counterexample => {
            let dims = cfg.list::<usize>("cx.n")?.unwrap_or_else(|| vec![2]);
            let dilations = cfg
                .reals("cx.d")?
                .unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
            let thetas = cfg
                .reals("cx.theta")?
                .unwrap_or_else(|| vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
            let profile =
                config::line_profile(cfg, "cx.profile")?.unwrap_or(LineProfile::Gaussian {
                    amplitude: 1.0,
                    width: 1.0,
                });
            if dims.iter().any(|&n| !(2..=3).contains(&n)) {
                v.push("cx.n: dimensions must be 2 or 3".into());
            }
            if dilations.len() < 2 || dilations.iter().any(|&d| !(d > 0.0)) {
                v.push("cx.d: need at least two positive dilations".into());
            }
            if thetas.iter().any(|t| !(0.0..=1.0).contains(t)) {
                v.push("cx.theta: values must lie in [0, 1]".into());
            }
            Body::Counterexample(CounterexampleCfg {
                dims,
                dilations,
                thetas,
                profile,
            })
        }
        Kind::Rates => {
            let input = cfg.require::<String>("rates.input").map(PathBuf::from);
            let rates = rate_spec(cfg, &mut v)?;
            Body::Rates(RatesCfg {
                input: input?,
                rates,
            })
        }
    };
    Ok((body, v))
}

/// Parses `cfg` for `kind`, failing with every violated invariant.
pub fn build(kind: Kind, cfg: &Config, seed: Option<u64>) -> Result<Experiment, LabError> {
    if let Some(k) = cfg.raw("experiment") {
        if k != kind.name() {
            return Err(LabError::Config(format!(
                "config is for `{k}`, not `{}`",
                kind.name()
            )));
        }
    }
    let seed = match seed {
        Some(s) => s,
        None => cfg.get_or("seed", 0u64)?,
    };
    let (body, violations) = body(kind, cfg)?;
    cfg.reject_unused()?;
    if !violations.is_empty() {
        return Err(LabError::Config(violations.join("; ")));
    }
    Ok(Experiment {
        kind,
        seed,
        body,
        config_text: cfg.canonical(),
    })
}

/// Dry run: every violated invariant, empty when the experiment may start.
pub fn validate(kind: Kind, cfg: &Config) -> Vec<String> {
    match body(kind, cfg) {
        Err(e) => vec![e.to_string()],
        Ok((_, mut v)) => {
            if let Some(k) = cfg.raw("experiment") {
                if k != kind.name() {
                    v.push(format!("config is for `{k}`, not `{}`", kind.name()));
                }
            }
            if let Err(e) = cfg.get::<u64>("seed") {
                v.push(e.to_string());
            }
            let unused = cfg.unused();
            if !unused.is_empty() {
                v.push(format!("unknown keys: {}", unused.join(", ")));
            }
            v
        }
    }
}

pub fn run_experiment(exp: &Experiment, out_dir: &Path) -> Result<Outcome, LabError> {
    let start = Instant::now();
    let mut out = Outputs::create(out_dir)?;
    let result = match &exp.body {
        Body::Simulate(c) => simulate(c, &mut out),
        Body::Profile(c) => profile(c, &mut out),
        Body::Periodic(c) => periodic(c, &mut out),
        Body::Decompose(c) => decomposition(c, exp.seed, &mut out),
        Body::GnStudy(c) => gn_study(c, exp.seed, &mut out),
        Body::Counterexample(c) => counterexamples(c, &mut out),
        Body::Rates(c) => rates(c, &mut out),
    };
    let (summary, failure) = match result {
        Ok(s) => (s, None),
        Err(LabError::Acceptance(msg)) => (json!({ "acceptance_failure": msg }), Some(msg)),
        Err(e) => return Err(e),
    };
    let files = out.files().to_vec();
    let csv_sha256 = out.finish(exp.kind.name(), &exp.config_text, exp.seed, start.elapsed())?;
    if let Some(msg) = failure {
        return Err(LabError::Acceptance(msg));
    }
    Ok(Outcome {
        kind: exp.kind,
        files,
        csv_sha256,
        summary,
    })
}

// ---------------------------------------------------------------- rates

fn fit_json(r: &RateReport) -> Value {
    json!({
        "series": r.name,
        "predicted": r.predicted,
        "fitted": r.fit.map(|f| f.exponent),
        "tolerance": r.tolerance,
        "status": r.status.as_str(),
        "window": r.fit.map(|f| [f.window.0, f.window.1]),
        "r2": r.fit.map(|f| f.r2),
        "n_points": r.fit.map(|f| f.n_points),
        "spread": if r.spread.is_finite() { Some(r.spread) } else { None },
    })
}

pub struct RateBlock {
    pub reports: Vec<RateReport>,
    pub ordering: Option<OrderingReport>,
    /// Series whose fit raised an error, with the message.
    pub errors: Vec<(String, String)>,
}

impl RateBlock {
    pub fn failures(&self) -> Vec<String> {
        let mut f: Vec<String> = self
            .reports
            .iter()
            .filter(|r| r.status == Status::Fail)
            .map(|r| format!("{} ({})", r.name, r.status.as_str()))
            .collect();
        f.extend(self.errors.iter().map(|(n, e)| format!("{n}: {e}")));
        if self.ordering.as_ref().is_some_and(|o| !o.monotone) {
            f.push("phi_lp ordering".into());
        }
        f
    }
}

pub fn rate_block(traj: &Trajectory, spec: &RateSpec) -> RateBlock {
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    let mut push = |name: String, r: rarefaction_core::Result<RateReport>| match r {
        Ok(r) => reports.push(r),
        Err(e) => errors.push((name, e.to_string())),
    };
    push(
        "u_minus_profile_inf".into(),
        verify_main_theorem(traj, spec.window),
    );
    for &p in &spec.phi_p {
        push(
            format!("phi_l{p}"),
            verify_apriori(traj, p, Which::Phi, spec.window),
        );
    }
    for &p in &spec.grad_p {
        push(
            format!("grad_phi_l{p}"),
            verify_apriori(traj, p, Which::GradPhi, spec.window),
        );
    }
    let ordering = match ordering_check(traj, spec.window, spec.ordering_slack) {
        Ok(o) => Some(o),
        Err(e) => {
            errors.push(("phi_lp ordering".into(), e.to_string()));
            None
        }
    };
    RateBlock {
        reports,
        ordering,
        errors,
    }
}

fn column_of(name: &str) -> Option<usize> {
    NormRow::HEADER.iter().position(|h| {
        *h == name
            || (name.starts_with("phi_l") && h.strip_prefix("phi_l") == name.strip_prefix("phi_l"))
    })
}

fn write_rate_outputs(
    traj: &Trajectory,
    block: &RateBlock,
    out: &mut Outputs,
) -> Result<Value, LabError> {
    let rows: Vec<Vec<String>> = block
        .reports
        .iter()
        .map(|r| {
            let f = r.fit;
            vec![
                r.name.clone(),
                r.predicted.to_string(),
                f.map_or("".into(), |f| f.exponent.to_string()),
                r.tolerance.to_string(),
                f.map_or("".into(), |f| f.r2.to_string()),
                r.spread.to_string(),
                r.status.as_str().into(),
            ]
        })
        .collect();
    write_records(
        &out.file("rates.csv"),
        &[
            "series",
            "predicted",
            "fitted",
            "tolerance",
            "r2",
            "spread",
            "status",
        ],
        &rows,
    )?;

    let mut resid = Vec::new();
    for r in &block.reports {
        let (Some(f), Some(col)) = (r.fit, column_of(&r.name)) else {
            continue;
        };
        for row in &traj.rows {
            let v = row.values();
            let t = v[0];
            if t < f.window.0 || t > f.window.1 {
                continue;
            }
            let model = f.intercept + f.exponent * (1.0 + t).ln();
            resid.push(vec![
                r.name.clone(),
                t.to_string(),
                v[col].to_string(),
                (v[col].ln() - model).to_string(),
            ]);
        }
    }
    write_records(
        &out.file("residuals.csv"),
        &["series", "t", "value", "log_residual"],
        &resid,
    )?;

    let ord_rows: Vec<[f64; 3]> = block
        .ordering
        .as_ref()
        .map(|o| {
            o.fits
                .iter()
                .map(|&(inv_p, e)| [inv_p, e, -0.5 + 0.5 * inv_p])
                .collect()
        })
        .unwrap_or_default();
    write_table(
        &out.file("ordering.csv"),
        &["inv_p", "fitted", "predicted"],
        &ord_rows,
    )?;

    let report = json!({
        "series": block.reports.iter().map(fit_json).collect::<Vec<_>>(),
        "ordering": block.ordering.as_ref().map(|o| json!({
            "fits": o.fits.iter().map(|f| json!({"inv_p": f.0, "fitted": f.1})).collect::<Vec<_>>(),
            "slack": o.slack,
            "monotone": o.monotone,
        })),
        "errors": block.errors.iter().map(|(n, e)| json!({"series": n, "error": e})).collect::<Vec<_>>(),
        "failures": block.failures(),
    });
    out.write_json("report.json", &report)?;
    Ok(report)
}

fn norm_panels(block: &RateBlock, csv: &str) -> Vec<Panel> {
    let guide = |name: &str| {
        block.reports.iter().find(|r| r.name == name).and_then(|r| {
            r.fit.map(|f| {
                let t0 = f.window.0;
                (
                    r.predicted,
                    (t0, (f.intercept + f.exponent * (1.0 + t0).ln()).exp()),
                )
            })
        })
    };
    let col = |name: &str| column_of(name).map(|c| c + 1).unwrap_or(1);
    vec![
        Panel {
            csv: csv.into(),
            title: "sup |u - profile|".into(),
            ylabel: "norm".into(),
            curves: vec![Curve {
                column: col("u_minus_profile_inf"),
                title: "u_minus_profile_inf".into(),
                guide: guide("u_minus_profile_inf"),
            }],
            loglog: true,
        },
        Panel {
            csv: csv.into(),
            title: "perturbation norms".into(),
            ylabel: "norm".into(),
            curves: ["phi_l1", "phi_l2", "phi_l4", "phi_inf"]
                .iter()
                .map(|n| Curve {
                    column: col(n),
                    title: n.to_string(),
                    guide: guide(n),
                })
                .collect(),
            loglog: true,
        },
        Panel {
            csv: csv.into(),
            title: "gradient norms".into(),
            ylabel: "norm".into(),
            curves: ["grad_phi_l2", "grad_phi_l4"]
                .iter()
                .map(|n| Curve {
                    column: col(n),
                    title: n.to_string(),
                    guide: guide(n),
                })
                .collect(),
            loglog: true,
        },
    ]
}

// ------------------------------------------------------------- simulate

fn simulate(c: &SimulateCfg, out: &mut Outputs) -> Result<Value, LabError> {
    let mut sc = c.solver.clone();
    sc.keep_fields = true;
    let traj = solver::run(&sc).map_err(LabError::module("mdsolver"))?;
    let spec = &sc.spec;
    let dx = spec.dx1();

    let norm_rows: Vec<[f64; 12]> = traj.rows.iter().map(NormRow::values).collect();
    write_table(&out.file("norms.csv"), &NormRow::HEADER, &norm_rows)?;

    let span = sc.ur - sc.ul;
    let mut prof_rows = Vec::new();
    let mut src_rows = Vec::new();
    let mut left_rows = Vec::new();
    let mut right_rows = Vec::new();
    for s in &traj.snapshots {
        let b = &s.bundle;
        let slopes: Vec<f64> = b.dg.iter().map(|d| d * span).collect();
        let max_slope = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dev: f64 = (0..spec.n1)
            .map(|i| {
                if spec.x1(i) < 0.0 {
                    b.profile[i] - sc.ul
                } else {
                    sc.ur - b.profile[i]
                }
            })
            .sum::<f64>()
            * dx;
        let pn = |p| lp_norm_values(&slopes, dx, p).expect("p >= 1");
        prof_rows.push([
            b.t,
            max_slope,
            b.t * max_slope,
            dev,
            pn(1.0),
            pn(2.0),
            pn(f64::INFINITY),
        ]);
        let hn = |p| lp_norm(&b.h, p).expect("p >= 1");
        src_rows.push([b.t, hn(1.0), hn(2.0), hn(f64::INFINITY)]);
        for (st, rows) in [(&s.ul, &mut left_rows), (&s.ur, &mut right_rows)] {
            let grad = st.gradient();
            let gsup = grad.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            rows.push([
                st.t,
                st.sup_perturbation(),
                gsup,
                st.w1_inf(),
                st.mean_perturbation(),
            ]);
        }
    }
    write_table(
        &out.file("profile.csv"),
        &[
            "t",
            "max_slope",
            "t_max_slope",
            "deviation_integral",
            "slope_l1",
            "slope_l2",
            "slope_inf",
        ],
        &prof_rows,
    )?;
    write_table(
        &out.file("source.csv"),
        &["t", "h_l1", "h_l2", "h_inf"],
        &src_rows,
    )?;
    let periodic_header = ["t", "sup_w", "sup_grad_w", "w1_inf", "mean_w"];
    write_table(&out.file("periodic_left.csv"), &periodic_header, &left_rows)?;
    write_table(
        &out.file("periodic_right.csv"),
        &periodic_header,
        &right_rows,
    )?;

    let mut fit_rows = Vec::new();
    for (side, ubar, rows) in [("left", sc.ul, &left_rows), ("right", sc.ur, &right_rows)] {
        let series: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
        let (lo, hi) = sup_window_times(&series, (1e-10, 1e-2));
        let fit = fit_exponential_decay(&series, (lo, hi));
        fit_rows.push(vec![
            side.to_string(),
            ubar.to_string(),
            fit.as_ref().map_or("".into(), |f| f.alpha.to_string()),
            fit.as_ref().map_or("".into(), |f| f.rate().to_string()),
            fit.as_ref().map_or("".into(), |f| f.r2.to_string()),
            fit.as_ref().map_or("0".into(), |f| f.n_points.to_string()),
        ]);
    }
    write_records(
        &out.file("periodic_fits.csv"),
        &["side", "ubar", "alpha", "rate", "r2", "n_points"],
        &fit_rows,
    )?;

    let block = rate_block(&traj, &c.rates);
    let report = write_rate_outputs(&traj, &block, out)?;

    let last = traj.snapshots.last().expect("t_end is always recorded");
    let tl = spec.transverse_len();
    let line: Vec<[f64; 4]> = (0..spec.n1)
        .map(|i| {
            let mean = |f: &Field| f.values()[i * tl..(i + 1) * tl].iter().sum::<f64>() / tl as f64;
            [
                spec.x1(i),
                mean(&last.u),
                last.bundle.profile[i],
                mean(&last.phi),
            ]
        })
        .collect();
    write_table(
        &out.file("line_final.csv"),
        &["x1", "u_mean", "profile", "phi_mean"],
        &line,
    )?;

    let dump = |s: &solver::Snapshot, tag: &str, out: &mut Outputs| -> Result<(), LabError> {
        io::write_field(&out.file(&format!("u_{tag}.field")), &s.u)?;
        io::write_field(&out.file(&format!("phi_{tag}.field")), &s.phi)?;
        io::write_field(&out.file(&format!("h_{tag}.field")), &s.bundle.h)?;
        Ok(())
    };
    match c.fields {
        FieldOutput::None => {}
        FieldOutput::Final => dump(last, "final", out)?,
        FieldOutput::All => {
            for (k, s) in traj.snapshots.iter().enumerate() {
                dump(s, &format!("{k:03}"), out)?;
            }
        }
    }

    let mut panels = norm_panels(&block, "norms.csv");
    panels.push(Panel {
        csv: "source.csv".into(),
        title: "source term h".into(),
        ylabel: "norm".into(),
        curves: vec![Curve {
            column: 2,
            title: "h_l1".into(),
            guide: None,
        }],
        loglog: false,
    });
    out.write_text("plot.gp", &plot::script("decay.png", &panels))?;

    Ok(json!({
        "steps": traj.steps,
        "max_principle_excess": traj.max_principle_excess,
        "final": fit_row_json(traj.rows.last().expect("rows")),
        "rates": report,
    }))
}

fn fit_row_json(r: &NormRow) -> Value {
    let v = r.values();
    Value::Object(
        NormRow::HEADER
            .iter()
            .zip(v)
            .map(|(h, x)| (h.to_string(), json!(x)))
            .collect(),
    )
}

/// Time span over which a decaying series lies inside `range`.
pub fn sup_window_times(series: &[(f64, f64)], range: (f64, f64)) -> (f64, f64) {
    let inside: Vec<f64> = series
        .iter()
        .filter(|p| p.1 >= range.0 && p.1 <= range.1)
        .map(|p| p.0)
        .collect();
    match (inside.first(), inside.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (f64::INFINITY, f64::NEG_INFINITY),
    }
}

// -------------------------------------------------------------- profile

fn profile(c: &ProfileCfg, out: &mut Outputs) -> Result<Value, LabError> {
    let module = LabError::module("profile1d");
    let p0 = ProfileState::initial(c.half_length, c.n1, c.ul, c.ur).map_err(&module)?;
    let states = evolve_profile(&p0, &c.flux, &c.snapshots, c.step).map_err(&module)?;
    let mut header: Vec<String> = ["t", "max_slope", "t_max_slope", "deviation_integral"]
        .map(String::from)
        .to_vec();
    for p in &c.norms {
        header.push(format!("slope_l{p}"));
        header.push(format!("slope_l{p}_scaled"));
    }
    header.push("sup_gap_inviscid".into());
    let mut rows = Vec::new();
    for s in &states {
        let (max, tmax) = oleinik_bound(s);
        let rep = profile_norm_checks(s, &c.norms).map_err(&module)?;
        let mut row = vec![s.t, max, tmax, rep.deviation_integral];
        for n in &rep.slope_norms {
            row.push(n.norm);
            row.push(n.ratio);
        }
        let mut gap = 0.0f64;
        for i in 0..s.len() {
            let r = inviscid_rarefaction(s.x(i), s.t, &c.flux, c.ul, c.ur).map_err(&module)?;
            gap = gap.max((s.values[i] - r).abs());
        }
        row.push(gap);
        rows.push(row);
    }
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(&out.file("profile.csv"), &hdr, &rows)?;

    let last = states.last().expect("t_end is always a snapshot");
    let fan = (0..last.len())
        .map(|i| {
            let x = last.x(i);
            Ok([
                x,
                last.values[i],
                inviscid_rarefaction(x, last.t, &c.flux, c.ul, c.ur).map_err(&module)?,
            ])
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    write_table(
        &out.file("fan_final.csv"),
        &["x1", "profile", "inviscid"],
        &fan,
    )?;
    io::write_field(
        &out.file("profile_final.field"),
        &last.to_field().map_err(&module)?,
    )?;

    let panels = vec![Panel {
        csv: "profile.csv".into(),
        title: "profile slope".into(),
        ylabel: "value".into(),
        curves: vec![
            Curve {
                column: 2,
                title: "max slope".into(),
                guide: Some((-1.0, (rows[0][0], rows[0][1]))),
            },
            Curve {
                column: 4,
                title: "deviation integral".into(),
                guide: None,
            },
        ],
        loglog: true,
    }];
    out.write_text("plot.gp", &plot::script("profile.png", &panels))?;
    Ok(json!({
        "t_end": last.t,
        "max_slope": rows.last().map(|r| r[1]),
        "t_max_slope": rows.last().map(|r| r[2]),
    }))
}

// ------------------------------------------------------------- periodic

fn periodic(c: &PeriodicCfg, out: &mut Outputs) -> Result<Value, LabError> {
    let module = LabError::module("periodic");
    let grid = TorusGrid::new(c.counts.clone()).map_err(&module)?;
    let w0 = sample_on_torus(&grid, &c.w0);
    let runs = c
        .ubar
        .par_iter()
        .map(|&ubar| solve_periodic(&w0, ubar, &c.flux, &c.snapshots, c.step))
        .collect::<Vec<_>>();
    let mut fits = Vec::new();
    let mut fit_rows = Vec::new();
    for (idx, (run, &ubar)) in runs.into_iter().zip(&c.ubar).enumerate() {
        let states = run.map_err(&module)?;
        let rows: Vec<[f64; 5]> = states
            .iter()
            .map(|s| {
                let gsup = s
                    .gradient()
                    .iter()
                    .flatten()
                    .fold(0.0f64, |m, v| m.max(v.abs()));
                [
                    s.t,
                    s.sup_perturbation(),
                    gsup,
                    s.w1_inf(),
                    s.mean_perturbation(),
                ]
            })
            .collect();
        write_table(
            &out.file(&format!("periodic_{idx}.csv")),
            &["t", "sup_w", "sup_grad_w", "w1_inf", "mean_w"],
            &rows,
        )?;
        let last = states.last().expect("snapshots");
        io::write_periodic(
            &out.file(&format!("periodic_{idx}_final.field")),
            &last.field,
            last.t,
        )?;
        let w1: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[3])).collect();
        let sup: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
        let window = sup_window_times(&sup, c.sup_window);
        let fit = fit_exponential_decay(&w1, window);
        fit_rows.push(vec![
            idx.to_string(),
            ubar.to_string(),
            window.0.to_string(),
            window.1.to_string(),
            fit.as_ref().map_or("".into(), |f| f.alpha.to_string()),
            fit.as_ref().map_or("".into(), |f| f.rate().to_string()),
            fit.as_ref().map_or("".into(), |f| f.r2.to_string()),
        ]);
        fits.push(json!({
            "ubar": ubar,
            "window": [window.0, window.1],
            "alpha": fit.as_ref().ok().map(|f| f.alpha),
            "r2": fit.as_ref().ok().map(|f| f.r2),
            "error": fit.as_ref().err().map(|e| e.to_string()),
        }));
    }
    write_records(
        &out.file("periodic_fits.csv"),
        &["run", "ubar", "t_min", "t_max", "alpha", "rate", "r2"],
        &fit_rows,
    )?;
    let panels = vec![Panel {
        csv: "periodic_0.csv".into(),
        title: "periodic perturbation".into(),
        ylabel: "norm".into(),
        curves: vec![
            Curve {
                column: 2,
                title: "sup w".into(),
                guide: None,
            },
            Curve {
                column: 4,
                title: "W1,inf".into(),
                guide: None,
            },
        ],
        loglog: false,
    }];
    out.write_text("plot.gp", &plot::script("periodic.png", &panels))?;
    Ok(json!({ "fits": fits }))
}

// -------------------------------------------------------- decomposition

fn dirs_tag(dirs: &[usize]) -> String {
    dirs.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("_")
}

fn rel_err(a: &Field, b: &Field) -> f64 {
    let scale = b.max_abs().max(f64::MIN_POSITIVE);
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

/// Checks of one corpus member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompCheck {
    pub id: usize,
    pub dim: usize,
    pub reconstruction: f64,
    pub membership: f64,
    /// Norm-bound ratios, `m = 0` for `p = 1, 2, ∞`, then `m = 1, p = 2`.
    pub ratios: [f64; 4],
    pub linearity: f64,
}

pub fn decomp_check(seed: u64, id: usize, dims: &[usize]) -> DecompCheck {
    let m = corpus::member(seed, id, dims);
    let u = &m.field;
    let d = decompose(u);
    let reconstruction = rel_err(&reconstruct(&d), u);
    let membership = check_membership(&d).max();
    let ratio = |mm, p| norm_bound_ratio(u, &d, mm, p).unwrap_or(f64::NAN);
    let ratios = [
        ratio(0, 1.0),
        ratio(0, 2.0),
        ratio(0, f64::INFINITY),
        ratio(1, 2.0),
    ];
    let other = corpus::member(seed, id + 1_000_000, &[m.field.spec().dim]).field;
    let (a, b) = corpus::coefficients(seed, id);
    let w = u
        .zip_with(&other, |x, y| a * x + b * y)
        .expect("same corpus grid");
    let (dv, dw) = (decompose(&other), decompose(&w));
    let scale = 1.0 + a.abs() * u.max_abs() + b.abs() * other.max_abs();
    let mut linearity = 0.0f64;
    let mut pairs = vec![(&d.u0, &dv.u0, &dw.u0)];
    for ((cu, cv), cw) in d.components.iter().zip(&dv.components).zip(&dw.components) {
        pairs.push((&cu.field, &cv.field, &cw.field));
    }
    for (fu, fv, fw) in pairs {
        for ((x, y), z) in fu.values().iter().zip(fv.values()).zip(fw.values()) {
            linearity = linearity.max((a * x + b * y - z).abs() / scale);
        }
    }
    DecompCheck {
        id,
        dim: u.spec().dim,
        reconstruction,
        membership,
        ratios,
        linearity,
    }
}

fn decomposition(c: &DecompCfg, seed: u64, out: &mut Outputs) -> Result<Value, LabError> {
    match c {
        DecompCfg::Input(path) => {
            let u = io::read_field(path)?;
            let d = decompose(&u);
            io::write_field(&out.file("component_0.field"), &d.u0)?;
            let norms = |f: &Field| -> Value {
                json!({
                    "l1": lp_norm(f, 1.0).ok(),
                    "l2": lp_norm(f, 2.0).ok(),
                    "linf": lp_norm(f, f64::INFINITY).ok(),
                })
            };
            let mut comps =
                vec![json!({ "dirs": [], "file": "component_0.field", "norms": norms(&d.u0) })];
            for comp in &d.components {
                let name = format!("component_{}.field", dirs_tag(&comp.dirs));
                io::write_field(&out.file(&name), &comp.field)?;
                comps.push(json!({ "dirs": comp.dirs, "file": name, "norms": norms(&comp.field) }));
            }
            let rows: Vec<Vec<String>> = comps
                .iter()
                .map(|c| {
                    vec![
                        c["file"].as_str().unwrap_or("").to_string(),
                        c["norms"]["l1"].to_string(),
                        c["norms"]["l2"].to_string(),
                        c["norms"]["linf"].to_string(),
                    ]
                })
                .collect();
            write_records(
                &out.file("components.csv"),
                &["component", "l1", "l2", "linf"],
                &rows,
            )?;
            let summary = json!({
                "components": comps,
                "reconstruction_rel_err": rel_err(&reconstruct(&d), &u),
                "membership_max": check_membership(&d).max(),
                "norm_bound": norm_bound(u.spec().dim),
                "norm_bound_ratio_l2": norm_bound_ratio(&u, &d, 0, 2.0).ok(),
            });
            out.write_json("components.json", &summary)?;
            Ok(summary)
        }
        DecompCfg::Corpus { size, dims } => {
            let checks: Vec<DecompCheck> = (0..*size)
                .into_par_iter()
                .map(|id| decomp_check(seed, id, dims))
                .collect();
            let rows: Vec<[f64; 9]> = checks
                .iter()
                .map(|c| {
                    [
                        c.id as f64,
                        c.dim as f64,
                        c.reconstruction,
                        c.membership,
                        c.ratios[0],
                        c.ratios[1],
                        c.ratios[2],
                        c.ratios[3],
                        c.linearity,
                    ]
                })
                .collect();
            write_table(
                &out.file("decomp.csv"),
                &[
                    "id",
                    "n",
                    "reconstruction",
                    "membership",
                    "ratio_l1",
                    "ratio_l2",
                    "ratio_linf",
                    "ratio_grad_l2",
                    "linearity",
                ],
                &rows,
            )?;
            let max = |f: &dyn Fn(&DecompCheck) -> f64| {
                checks
                    .iter()
                    .map(f)
                    .filter(|v| v.is_finite())
                    .fold(0.0, f64::max)
            };
            let bound_ok = checks.iter().all(|c| {
                c.ratios
                    .iter()
                    .all(|r| !r.is_finite() || *r <= norm_bound(c.dim))
            });
            let summary = json!({
                "size": size,
                "reconstruction_max": max(&|c| c.reconstruction),
                "membership_max": max(&|c| c.membership),
                "ratio_max": max(&|c| c.ratios.iter().copied().filter(|r| r.is_finite()).fold(0.0, f64::max)),
                "norm_bound_holds": bound_ok,
                "linearity_max": max(&|c| c.linearity),
            });
            out.write_json("decomp_summary.json", &summary)?;
            Ok(summary)
        }
    }
}

// ------------------------------------------------------------ GN study

/// Ratios for one corpus member.
#[derive(Debug, Clone, PartialEq)]
pub struct GnCheck {
    pub id: usize,
    pub dim: usize,
    /// Per level `k`; `NaN` where the exponents are infeasible.
    pub gn: Vec<f64>,
    pub interp: f64,
    /// Per direction `i = 1..n`.
    pub deriv: Vec<f64>,
    pub product: f64,
    pub lines: Vec<f64>,
    /// Largest relative change of any ratio under `u → λu`.
    pub scale_drift: f64,
}

/// Level ratios, interpolation, per-direction derivative ratios, product, line ratios.
type GnRatios = (Vec<f64>, f64, Vec<f64>, f64, Vec<f64>);

fn gn_ratios(u: &Field, c: &GnCfg) -> Result<GnRatios, LabError> {
    let module = LabError::module("ineqlab");
    let d = decompose(u);
    let gn: Vec<f64> = gn_ratio(u, &c.params, &d)
        .map_err(&module)?
        .iter()
        .map(|l| l.ratio)
        .collect();
    let interp = interpolation_ratio(u, c.interp.0, c.interp.1)
        .map_err(&module)?
        .ratio;
    let deriv = (1..=u.spec().dim)
        .map(|i| derivative_interpolation_ratio(u, i, c.deriv_p).map_err(&module))
        .collect::<Result<Vec<_>, _>>()?;
    let top = top_component(&d);
    // A top level at roundoff size means the member has none; the
    // zero-average precondition is then meaningless.
    if top.max_abs() <= 1e-12 * u.max_abs() {
        let n = u.spec().dim;
        return Ok((gn, interp, deriv, f64::NAN, vec![f64::NAN; n]));
    }
    let e = extreme_case_checks(&top, c.extreme.0, c.extreme.1).map_err(&module)?;
    Ok((gn, interp, deriv, e.product_ratio, e.line_ratios))
}

/// Ratios below this are quotients of roundoff.
pub const RATIO_FLOOR: f64 = 1e-8;

pub fn gn_check(seed: u64, id: usize, c: &GnCfg) -> Result<GnCheck, LabError> {
    let m = corpus::member(seed, id, &c.dims);
    let u = &m.field;
    let base = gn_ratios(u, c)?;
    let mut drift = 0.0f64;
    for lambda in [-2.5, 1e3] {
        let s = gn_ratios(&u.scale(lambda), c)?;
        let a = base
            .0
            .iter()
            .chain([&base.1])
            .chain(&base.2)
            .chain([&base.3])
            .chain(&base.4);
        let b =
            s.0.iter()
                .chain([&s.1])
                .chain(&s.2)
                .chain([&s.3])
                .chain(&s.4);
        // Ratios of roundoff-sized norms carry no scale information.
        for (x, y) in a.zip(b) {
            if x.abs() > RATIO_FLOOR || y.abs() > RATIO_FLOOR {
                drift = drift.max((x - y).abs() / x.abs().max(y.abs()));
            }
        }
    }
    let (gn, interp, deriv, product, lines) = base;
    Ok(GnCheck {
        id,
        dim: u.spec().dim,
        gn,
        interp,
        deriv,
        product,
        lines,
        scale_drift: drift,
    })
}

fn pad(v: &[f64], n: usize) -> Vec<f64> {
    let mut v = v.to_vec();
    v.resize(n, f64::NAN);
    v
}

/// Corpus maxima keyed by quantity name.
pub fn gn_maxima(checks: &[GnCheck]) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    let mut put = |key: String, v: f64| {
        if v.is_finite() {
            let e = m.entry(key).or_insert(json!(0.0));
            if v > e.as_f64().unwrap_or(0.0) {
                *e = json!(v);
            }
        }
    };
    for c in checks {
        for (k, r) in c.gn.iter().enumerate() {
            put(format!("gn_k{k}"), *r);
        }
        put("interp".into(), c.interp);
        for (i, r) in c.deriv.iter().enumerate() {
            put(format!("deriv_x{}", i + 1), *r);
        }
        put("extreme_product".into(), c.product);
        for (i, r) in c.lines.iter().enumerate() {
            put(format!("extreme_line_x{}", i + 1), *r);
        }
    }
    m
}

fn gn_study(c: &GnCfg, seed: u64, out: &mut Outputs) -> Result<Value, LabError> {
    let checks = (0..c.size)
        .into_par_iter()
        .map(|id| gn_check(seed, id, c))
        .collect::<Result<Vec<_>, _>>()?;
    let nmax = c.dims.iter().copied().max().unwrap_or(2);
    let mut header: Vec<String> = vec!["id".into(), "n".into()];
    header.extend((0..nmax).map(|k| format!("gn_k{k}")));
    header.push("interp".into());
    header.extend((1..=nmax).map(|i| format!("deriv_x{i}")));
    header.push("extreme_product".into());
    header.extend((1..=nmax).map(|i| format!("extreme_line_x{i}")));
    header.push("scale_drift".into());
    let rows: Vec<Vec<f64>> = checks
        .iter()
        .map(|k| {
            let mut r = vec![k.id as f64, k.dim as f64];
            r.extend(pad(&k.gn, nmax));
            r.push(k.interp);
            r.extend(pad(&k.deriv, nmax));
            r.push(k.product);
            r.extend(pad(&k.lines, nmax));
            r.push(k.scale_drift);
            r
        })
        .collect();
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(&out.file("gn.csv"), &hdr, &rows)?;
    let thetas: Vec<Value> = (0..nmax)
        .map(|k| json!(solve_theta(&c.params, k).ok()))
        .collect();
    let summary = json!({
        "size": c.size,
        "theta": thetas,
        "maxima": gn_maxima(&checks),
        "scale_drift_max": checks.iter().map(|k| k.scale_drift).fold(0.0, f64::max),
    });
    out.write_json("gn_summary.json", &summary)?;
    Ok(summary)
}

// ------------------------------------------------------- counterexample

fn log_slope(pts: &[(f64, f64)]) -> Result<f64, LabError> {
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    rarefaction_core::fit::linear_fit(&xs, &ys)
        .map(|f| f.slope)
        .map_err(LabError::module("ineqlab"))
}

fn counterexamples(c: &CounterexampleCfg, out: &mut Outputs) -> Result<Value, LabError> {
    let module = LabError::module("ineqlab");
    let mut rows = Vec::new();
    let mut sobolev = Vec::new();
    for &n in &c.dims {
        let ms = c
            .dilations
            .par_iter()
            .map(|&d| counterexample_sobolev(n, d, &c.profile))
            .collect::<Result<Vec<_>, _>>()
            .map_err(&module)?;
        let pts: Vec<(f64, f64)> = c
            .dilations
            .iter()
            .zip(&ms)
            .map(|(&d, m)| (d, m.measured))
            .collect();
        for (&d, m) in c.dilations.iter().zip(&ms) {
            rows.push(vec![
                "sobolev".into(),
                n.to_string(),
                d.to_string(),
                m.measured.to_string(),
                m.predicted.to_string(),
                (m.measured / m.predicted).to_string(),
            ]);
        }
        sobolev.push(json!({
            "n": n,
            "slope": log_slope(&pts)?,
            "predicted_slope": (n as f64 - 1.0) / n as f64,
            "constant_at_d1": c.dilations.iter().position(|&d| d == 1.0).map(|i| ms[i].measured),
            "predicted_at_d1": counterexample_sobolev(n, 1.0, &c.profile).map_err(&module)?.predicted,
        }));
    }
    let mut theta = Vec::new();
    for &th in &c.thetas {
        let ms = c
            .dilations
            .par_iter()
            .map(|&d| counterexample_theta(d, th, &c.profile))
            .collect::<Result<Vec<_>, _>>()
            .map_err(&module)?;
        let pts: Vec<(f64, f64)> = c
            .dilations
            .iter()
            .zip(&ms)
            .map(|(&d, m)| (d, m.measured))
            .collect();
        for (&d, m) in c.dilations.iter().zip(&ms) {
            rows.push(vec![
                "theta".into(),
                th.to_string(),
                d.to_string(),
                m.measured.to_string(),
                m.predicted.to_string(),
                m.measured.to_string(),
            ]);
        }
        theta.push(
            json!({ "theta": th, "slope": log_slope(&pts)?, "predicted_slope": ms[0].predicted }),
        );
    }
    write_records(
        &out.file("counterexample.csv"),
        &["family", "parameter", "d", "measured", "predicted", "ratio"],
        &rows,
    )?;
    let summary = json!({ "sobolev": sobolev, "theta": theta });
    out.write_json("counterexample_summary.json", &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- rates

/// Norm table written by `simulate`, as a trajectory without fields.
pub fn read_norms(path: &Path) -> Result<Trajectory, LabError> {
    let (header, rows) = io::read_table(path)?;
    if header
        .iter()
        .map(String::as_str)
        .ne(NormRow::HEADER.iter().copied())
    {
        return Err(LabError::Format(format!(
            "{}: expected columns {}",
            path.display(),
            NormRow::HEADER.join(",")
        )));
    }
    let rows = rows
        .iter()
        .map(|v| NormRow {
            t: v[0],
            phi_l1: v[1],
            phi_l2: v[2],
            phi_l4: v[3],
            phi_inf: v[4],
            grad_phi_l2: v[5],
            grad_phi_l4: v[6],
            dev_inf: v[7],
            h_l1: v[8],
            tail_mass: v[9],
            ansatz_gap: v[10],
            boundary_gap: v[11],
        })
        .collect();
    Ok(Trajectory {
        rows,
        snapshots: Vec::new(),
        max_principle_excess: 0.0,
        steps: 0,
        initial_range: (0.0, 0.0),
    })
}

fn rates(c: &RatesCfg, out: &mut Outputs) -> Result<Value, LabError> {
    let traj = read_norms(&c.input)?;
    let block = rate_block(&traj, &c.rates);
    let report = write_rate_outputs(&traj, &block, out)?;
    let norms_name = "norms.csv";
    // Copy the input so the plot script is self-contained.
    std::fs::copy(&c.input, out.file(norms_name))?;
    out.write_text(
        "plot.gp",
        &plot::script("decay.png", &norm_panels(&block, norms_name)),
    )?;
    let failures = block.failures();
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(LabError::Acceptance(format!(
            "rate checks failed: {}",
            failures.join(", ")
        )))
    }
}
