//! Flat `key = value` configuration with dotted section prefixes.
//!
//! Blank lines and `#` comments are ignored. Every key must be consumed by
//! the experiment that reads the file; leftovers are reported as typos.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use rarefaction_core::flux::{Flux, FluxSet};
use rarefaction_core::imex::TimeStep;
use rarefaction_core::solver::{default_schedule, ProfileMode};
use rarefaction_core::trig::{LineProfile, TrigMode, TrigPoly};

use crate::LabError;

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

fn bad(key: &str, msg: impl Display) -> LabError {
    LabError::Config(format!("{key}: {msg}"))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, LabError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                LabError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let k = k.trim();
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(LabError::Config(format!(
                    "line {}: malformed key `{k}`",
                    lineno + 1
                )));
            }
            if entries
                .insert(k.to_string(), v.trim().to_string())
                .is_some()
            {
                return Err(LabError::Config(format!(
                    "line {}: duplicate key `{k}`",
                    lineno + 1
                )));
            }
        }
        Ok(Config {
            entries,
            used: RefCell::default(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Canonical text: sorted `key = value` lines. Hashed into the manifest.
    pub fn canonical(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, LabError>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| bad(key, format!("`{v}`: {e}"))))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, LabError>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, LabError>
    where
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| bad(key, "missing required key"))
    }

    /// Comma- or space-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, LabError>
    where
        T::Err: Display,
    {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|e| bad(key, format!("`{s}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn reals(&self, key: &str) -> Result<Option<Vec<f64>>, LabError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| parse_real(s).map_err(|e| bad(key, e)))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn real(&self, key: &str) -> Result<Option<f64>, LabError> {
        self.raw(key)
            .map(|v| parse_real(v).map_err(|e| bad(key, e)))
            .transpose()
    }

    /// Keys present in the file that nothing asked for.
    pub fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.entries
            .keys()
            .filter(|k| !used.contains(*k))
            .cloned()
            .collect()
    }

    pub fn reject_unused(&self) -> Result<(), LabError> {
        let left = self.unused();
        if left.is_empty() {
            Ok(())
        } else {
            Err(LabError::Config(format!(
                "unknown keys: {}",
                left.join(", ")
            )))
        }
    }
}

/// Reals with `inf` and simple fractions such as `1/3`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    match s {
        "inf" | "infinity" | "∞" => return Ok(f64::INFINITY),
        _ => {}
    }
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
        let b: f64 = b.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
        let v = a / b;
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{s}` is not a finite fraction"))
        };
    }
    let v: f64 = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!(
            "`{s}`: write `inf` for infinity; NaN is not a value"
        ))
    }
}

/// `quadratic 1`, `cubic 0.5`, `linear 0.3` or `burgers`.
pub fn parse_flux(key: &str, s: &str) -> Result<Flux, LabError> {
    let mut it = s.split_whitespace();
    let kind = it.next().unwrap_or("");
    let coeff = |it: &mut std::str::SplitWhitespace| -> Result<f64, LabError> {
        let c = it
            .next()
            .ok_or_else(|| bad(key, format!("`{kind}` needs a coefficient")))?;
        parse_real(c).map_err(|e| bad(key, e))
    };
    let f = match kind {
        "burgers" => Flux::BURGERS,
        "quadratic" => Flux::Quadratic {
            coeff: coeff(&mut it)?,
        },
        "cubic" => Flux::Cubic {
            coeff: coeff(&mut it)?,
        },
        "linear" => Flux::Linear {
            speed: coeff(&mut it)?,
        },
        other => return Err(bad(key, format!("unknown flux family `{other}`"))),
    };
    if it.next().is_some() {
        return Err(bad(key, "trailing tokens"));
    }
    Ok(f)
}

/// `flux = burgers` for every direction, or `flux.1 .. flux.n` with
/// `flux.a0` as the convexity floor (default 1). Unlisted directions are Burgers.
pub fn flux_set(cfg: &Config, dim: usize) -> Result<FluxSet, LabError> {
    if let Some(v) = cfg.raw("flux") {
        if v != "burgers" {
            return Err(bad(
                "flux",
                "only `burgers` applies to all directions; use flux.1 .. flux.n",
            ));
        }
        return Ok(FluxSet::burgers(dim));
    }
    let mut fluxes = Vec::with_capacity(dim);
    for i in 1..=dim {
        let key = format!("flux.{i}");
        fluxes.push(match cfg.raw(&key) {
            Some(v) => parse_flux(&key, v)?,
            None => Flux::BURGERS,
        });
    }
    let a0 = cfg.real("flux.a0")?.unwrap_or(1.0);
    FluxSet::new(fluxes, a0).map_err(|e| bad("flux.a0", e))
}

/// `w0.modes = k₁ … k_n amplitude; …`
pub fn trig_poly(cfg: &Config, key: &str, dim: usize) -> Result<TrigPoly, LabError> {
    let Some(v) = cfg.raw(key) else {
        return Ok(TrigPoly::zero());
    };
    let mut modes = Vec::new();
    for chunk in v.split(';').map(str::trim).filter(|c| !c.is_empty()) {
        let toks: Vec<&str> = chunk.split_whitespace().collect();
        if toks.len() != dim + 1 {
            return Err(bad(
                key,
                format!("mode `{chunk}` needs {dim} wavenumbers and an amplitude"),
            ));
        }
        let k = toks[..dim]
            .iter()
            .map(|t| {
                t.parse::<i32>()
                    .map_err(|e| bad(key, format!("`{t}`: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let a = parse_real(toks[dim]).map_err(|e| bad(key, e))?;
        modes.push(TrigMode::new(k, a));
    }
    Ok(TrigPoly::new(modes))
}

/// `none`, `gaussian A W` or `hat A W`.
pub fn line_profile(cfg: &Config, key: &str) -> Result<Option<LineProfile>, LabError> {
    let Some(v) = cfg.raw(key) else {
        return Ok(None);
    };
    let toks: Vec<&str> = v.split_whitespace().collect();
    let two = |toks: &[&str]| -> Result<(f64, f64), LabError> {
        if toks.len() != 3 {
            return Err(bad(key, "expected `<family> <amplitude> <width>`"));
        }
        Ok((
            parse_real(toks[1]).map_err(|e| bad(key, e))?,
            parse_real(toks[2]).map_err(|e| bad(key, e))?,
        ))
    };
    match toks.first().copied() {
        Some("none") if toks.len() == 1 => Ok(None),
        Some("gaussian") => {
            let (amplitude, width) = two(&toks)?;
            Ok(Some(LineProfile::Gaussian { amplitude, width }))
        }
        Some("hat") => {
            let (amplitude, width) = two(&toks)?;
            Ok(Some(LineProfile::Hat { amplitude, width }))
        }
        _ => Err(bad(key, format!("unknown profile `{v}`"))),
    }
}

/// `time.dt` (fixed) or `time.cfl` with optional `time.max_dt`.
pub fn time_step(cfg: &Config) -> Result<TimeStep, LabError> {
    let dt = cfg.real("time.dt")?;
    let cfl = cfg.real("time.cfl")?;
    let max_dt = cfg.real("time.max_dt")?;
    match (dt, cfl) {
        (Some(_), Some(_)) => Err(bad("time.dt", "give either time.dt or time.cfl, not both")),
        (Some(dt), None) => {
            if max_dt.is_some() {
                return Err(bad("time.max_dt", "only applies with time.cfl"));
            }
            Ok(TimeStep::Fixed(dt))
        }
        (None, cfl) => Ok(TimeStep::Cfl {
            cfl: cfl.unwrap_or(0.4),
            max_dt,
        }),
    }
}

/// `time.snapshots = default` or an explicit list.
pub fn snapshots(cfg: &Config, t_end: f64) -> Result<Vec<f64>, LabError> {
    match cfg.raw("time.snapshots") {
        None | Some("default") => Ok(default_schedule(t_end)),
        Some(_) => Ok(cfg.reals("time.snapshots")?.unwrap_or_default()),
    }
}

/// `lockstep` or `refined R`.
pub fn profile_mode(cfg: &Config) -> Result<ProfileMode, LabError> {
    let key = "solver.profile";
    match cfg.raw(key) {
        None | Some("lockstep") => Ok(ProfileMode::Lockstep),
        Some(v) => {
            let r = v.strip_prefix("refined").map(str::trim).ok_or_else(|| {
                bad(
                    key,
                    format!("expected `lockstep` or `refined <factor>`, got `{v}`"),
                )
            })?;
            r.parse()
                .map(ProfileMode::Refined)
                .map_err(|e| bad(key, format!("`{r}`: {e}")))
        }
    }
}
