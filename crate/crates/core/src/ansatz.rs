//! The ansatz `ũ = u_l(1−g) + u_r g` and its closed-form source term `h`.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{DomainSpec, Field};
use crate::error::{Error, Result};
use crate::flux::{Flux, FluxSet};
use crate::periodic::PeriodicState;
use crate::profile::ProfileState;
use crate::torus::TorusGrid;

// Five-point Gauss–Legendre rule on [0, 1].
const GL_NODES: [f64; 5] = [
    0.046_910_077_030_668_004,
    0.230_765_344_947_158_45,
    0.5,
    0.769_234_655_052_841_6,
    0.953_089_922_969_332,
];
const GL_WEIGHTS: [f64; 5] = [
    0.118_463_442_528_094_54,
    0.239_314_335_249_683_23,
    0.284_444_444_444_444_45,
    0.239_314_335_249_683_23,
    0.118_463_442_528_094_54,
];

/// `σ(u, v) = ∫₀¹ f''(v + θ(u − v)) dθ`.
pub fn sigma(f: &Flux, u: f64, v: f64) -> f64 {
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(&th, w)| w * f.d2f(v + th * (u - v)))
        .sum()
}

/// `g = (ũᴿ − ul)/(ur − ul)` on the profile grid.
pub fn g_weight(p: &ProfileState) -> Result<Vec<f64>> {
    let span = p.ur - p.ul;
    if !(span > 0.0) {
        return Err(Error::InvalidArgument("weight g needs ul < ur".into()));
    }
    Ok(p.values.iter().map(|v| (v - p.ul) / span).collect())
}

/// Profile value and slope interpolated onto the `x₁` cell centres of `spec`.
pub fn sample_profile(p: &ProfileState, spec: &DomainSpec) -> (Vec<f64>, Vec<f64>) {
    let slopes = p.slopes();
    let vals = (0..spec.n1).map(|i| p.sample(spec.x1(i))).collect();
    let ds = (0..spec.n1)
        .map(|i| p.sample_slope(spec.x1(i), &slopes))
        .collect();
    (vals, ds)
}

pub(crate) fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

fn check_time(expected: f64, found: f64) -> Result<()> {
    if same_time(expected, found) {
        Ok(())
    } else {
        Err(Error::TimeMismatch { expected, found })
    }
}

fn check_aligned(spec: &DomainSpec, grid: &TorusGrid) -> Result<()> {
    let want = TorusGrid::aligned_with(spec)?;
    if want.counts != grid.counts
        || want
            .offsets
            .iter()
            .zip(&grid.offsets)
            .any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::InvalidDomain(
            "periodic grid is not aligned with the cylinder grid".into(),
        ));
    }
    Ok(())
}

/// `ũ` on the cylinder; `g` holds one weight per `x₁` row of `spec`.
pub fn build_ansatz(
    spec: &DomainSpec,
    ul: &PeriodicState,
    ur: &PeriodicState,
    g: &[f64],
    t: f64,
) -> Result<Field> {
    check_time(t, ul.t)?;
    check_time(t, ur.t)?;
    check_aligned(spec, ul.grid())?;
    check_aligned(spec, ur.grid())?;
    if g.len() != spec.n1 {
        return Err(Error::InvalidArgument(
            "one weight per x1 row required".into(),
        ));
    }
    let grid = ul.grid();
    let tl = spec.transverse_len();
    let values = (0..spec.len())
        .map(|k| {
            let j = grid.aligned_index(spec, k);
            let gi = g[k / tl];
            ul.values()[j] * (1.0 - gi) + ur.values()[j] * gi
        })
        .collect();
    Field::new(spec.clone(), values, t)
}

/// Everything assembled from the periodic pair and the profile at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzBundle {
    pub t: f64,
    /// `g` and `∂₁g` per `x₁` row.
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    /// `ũᴿ` per `x₁` row.
    pub profile: Vec<f64>,
    pub u_tilde: Field,
    pub h: Field,
}

impl AnsatzBundle {
    /// `sup |ũ − ũᴿ|`.
    pub fn gap_inf(&self) -> f64 {
        let tl = self.u_tilde.spec().transverse_len();
        self.u_tilde
            .values()
            .iter()
            .enumerate()
            .fold(0.0, |m, (k, v)| m.max((v - self.profile[k / tl]).abs()))
    }
}

/// Closed-form source term:
/// `h = (u_r−u_l) g(1−g) Σᵢ[σᵢ(u_l,ũ)∂ᵢw_l − σᵢ(u_r,ũ)∂ᵢw_r]
///    + (u_r−u_l) σ₁(ũᴿ,ũ)(ũ−ũᴿ)∂₁g − 2∂₁(w_r−w_l)∂₁g`.
pub fn source_term(
    spec: &DomainSpec,
    ul: &PeriodicState,
    ur: &PeriodicState,
    profile: &ProfileState,
    flux: &FluxSet,
) -> Result<Field> {
    Ok(assemble(spec, ul, ur, profile, flux)?.h)
}

pub fn assemble(
    spec: &DomainSpec,
    ul: &PeriodicState,
    ur: &PeriodicState,
    profile: &ProfileState,
    flux: &FluxSet,
) -> Result<AnsatzBundle> {
    let t = profile.t;
    if flux.dim() != spec.dim {
        return Err(Error::InvalidArgument(
            "flux set dimension differs from the domain".into(),
        ));
    }
    let span = profile.ur - profile.ul;
    if !(span > 0.0) {
        return Err(Error::InvalidArgument("weight g needs ul < ur".into()));
    }
    let (prof, dprof) = sample_profile(profile, spec);
    let g: Vec<f64> = prof.iter().map(|v| (v - profile.ul) / span).collect();
    let dg: Vec<f64> = dprof.iter().map(|d| d / span).collect();
    let u_tilde = build_ansatz(spec, ul, ur, &g, t)?;

    let grid = ul.grid();
    let grad_l = ul.gradient();
    let grad_r = ur.gradient();
    let tl = spec.transverse_len();
    let mut h = vec![0.0; spec.len()];
    for (k, hk) in h.iter_mut().enumerate() {
        let j = grid.aligned_index(spec, k);
        let row = k / tl;
        let (a, b) = (ul.values()[j], ur.values()[j]);
        let ut = u_tilde.values()[k];
        let (gi, dgi, pr) = (g[row], dg[row], prof[row]);
        let diff = b - a;
        let mut cross = 0.0;
        for axis in 0..spec.dim {
            let f = flux.get(axis + 1);
            cross += sigma(f, a, ut) * grad_l[axis][j] - sigma(f, b, ut) * grad_r[axis][j];
        }
        *hk = diff * gi * (1.0 - gi) * cross + diff * sigma(flux.get(1), pr, ut) * (ut - pr) * dgi
            - 2.0 * (grad_r[0][j] - grad_l[0][j]) * dgi;
    }
    let h = Field::new(spec.clone(), h, t)?;
    Ok(AnsatzBundle {
        t,
        g,
        dg,
        profile: prof,
        u_tilde,
        h,
    })
}

/// Finite-difference residual `∂ₜũ + Σᵢ∂ᵢfᵢ(ũ) − Δũ` at `cur.t` from three
/// equally spaced snapshots. Rows on the `x₁` boundary are set to zero.
pub fn discrete_residual(prev: &Field, cur: &Field, next: &Field, flux: &FluxSet) -> Result<Field> {
    let spec = cur.spec();
    if prev.spec() != spec || next.spec() != spec {
        return Err(Error::InvalidArgument(
            "snapshots live on different grids".into(),
        ));
    }
    let dt = cur.t() - prev.t();
    if !(dt > 0.0) || !same_time(next.t() - cur.t(), dt) {
        return Err(Error::TimeMismatch {
            expected: cur.t() + dt,
            found: next.t(),
        });
    }
    let shape = spec.shape();
    let u = cur.values();
    let mut out = vec![0.0; u.len()];
    let mut strides = vec![1usize; shape.len()];
    for a in (0..shape.len() - 1).rev() {
        strides[a] = strides[a + 1] * shape[a + 1];
    }
    for (k, o) in out.iter_mut().enumerate() {
        let row = k / strides[0];
        if row == 0 || row + 1 == shape[0] {
            continue;
        }
        let mut r = (next.values()[k] - prev.values()[k]) / (2.0 * dt);
        for axis in 0..shape.len() {
            let n = shape[axis];
            let s = strides[axis];
            let idx = (k / s) % n;
            let base = k - idx * s;
            let (lo, hi) = if axis == 0 {
                (k - s, k + s)
            } else {
                (base + ((idx + n - 1) % n) * s, base + ((idx + 1) % n) * s)
            };
            let h = spec.spacing(axis);
            let f = flux.get(axis + 1);
            r += (f.f(u[hi]) - f.f(u[lo])) / (2.0 * h);
            r -= (u[hi] - 2.0 * u[k] + u[lo]) / (h * h);
        }
        *o = r;
    }
    Field::new(spec.clone(), out, cur.t())
}
