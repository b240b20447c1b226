//! Gagliardo–Nirenberg-type inequalities on the cylinder, resolved by the
//! torus-average decomposition, and the dilation families that break the
//! unresolved version.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::decomp::DecompositionResult;
use crate::domain::{
    average_axes, diff_axis, gradient, lp_norm, partial, tail_mass_fraction, vector_lp_norm,
    DomainSpec, Field,
};
use crate::error::{Error, Result};
use crate::math;
use crate::trig::LineProfile;

const EPS: f64 = 1e-12;

fn inv(x: f64) -> f64 {
    1.0 / x
}

/// Exponents of one inequality; `theta` is filled in per level by [`solve_theta`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GNParams {
    pub j: u32,
    pub m: u32,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    /// The function is known to decay as `|x₁| → ∞`; lifts the
    /// `j = 0, rm < k+1, q = ∞` exclusion.
    pub decays: bool,
}

impl GNParams {
    pub fn new(j: u32, m: u32, p: f64, q: f64, r: f64) -> Self {
        GNParams {
            j,
            m,
            p,
            q,
            r,
            decays: false,
        }
    }
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if v >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "exponent {name} must lie in [1, ∞], got {v}"
        )))
    }
}

/// Weight `θ_k` with `1/p = j/(k+1) + (1/r − m/(k+1))θ + (1−θ)/q`, `j/m ≤ θ ≤ 1`.
pub fn solve_theta(params: &GNParams, k: usize) -> Result<f64> {
    let GNParams {
        j,
        m,
        p,
        q,
        r,
        decays,
    } = *params;
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    check_exponent("r", r)?;
    if m == 0 || j > m {
        return Err(Error::Infeasible(format!(
            "need 0 <= j <= m and m >= 1, got j={j}, m={m}"
        )));
    }
    let d = (k + 1) as f64;
    let (j, m) = (j as f64, m as f64);
    let lower = j / m;
    let coeff = inv(r) - m / d - inv(q);
    let rhs = inv(p) - j / d - inv(q);
    let theta = if coeff.abs() < EPS {
        if rhs.abs() < EPS {
            lower
        } else {
            return Err(Error::Infeasible(
                "relation has no solution (zero coefficient)".into(),
            ));
        }
    } else {
        rhs / coeff
    };
    if theta < lower - EPS || theta > 1.0 + EPS {
        return Err(Error::Infeasible(format!(
            "theta_{k} = {theta} lies outside [{lower}, 1]"
        )));
    }
    let theta = theta.clamp(lower, 1.0);
    if j == 0.0 && r * m < d && q.is_infinite() && !decays {
        return Err(Error::Infeasible(
            "j = 0, rm < k+1, q = ∞ requires decay as |x1| → ∞".into(),
        ));
    }
    if (theta - 1.0).abs() < EPS && r > 1.0 && r.is_finite() {
        let s = m - j - d / r;
        if s >= -EPS && (s - math::round(s)).abs() < 1e-9 {
            return Err(Error::Infeasible(format!(
                "theta = 1 excluded: m - j - (k+1)/r = {s} is a non-negative integer"
            )));
        }
    }
    Ok(theta)
}

/// `‖∇ʲf‖_p` for `j ≤ 2`, with all mixed partials for `j = 2`.
pub fn derivative_norm(f: &Field, j: u32, p: f64) -> Result<f64> {
    match j {
        0 => lp_norm(f, p),
        1 => vector_lp_norm(&gradient(f), p),
        2 => {
            let g = gradient(f);
            let mut second = Vec::with_capacity(g.len() * g.len());
            for gi in &g {
                for axis in 0..f.spec().dim {
                    second.push(partial(gi, axis));
                }
            }
            vector_lp_norm(&second, p)
        }
        _ => Err(Error::InvalidArgument(
            "derivative order must be at most 2".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRatio {
    pub k: usize,
    /// `None` when the exponents are infeasible at this level.
    pub theta: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `‖∇ʲu⁽ᵏ⁾‖_p / (‖∇ᵐu‖_r^θ ‖u‖_q^{1−θ})` for each level `k`.
pub fn gn_ratio(u: &Field, params: &GNParams, d: &DecompositionResult) -> Result<Vec<LevelRatio>> {
    if params.m > 2 {
        return Err(Error::InvalidArgument(
            "derivative order m must be at most 2".into(),
        ));
    }
    let top = derivative_norm(u, params.m, params.r)?;
    let base = lp_norm(u, params.q)?;
    let mut out = Vec::with_capacity(u.spec().dim);
    for k in 0..u.spec().dim {
        let theta = solve_theta(params, k).ok();
        let lhs = derivative_norm(&d.level(k), params.j, params.p)?;
        let (rhs, ratio) = match theta {
            Some(th) => {
                let rhs = math::powf(top, th) * math::powf(base, 1.0 - th);
                (rhs, ratio_of(lhs, rhs)?)
            }
            None => (f64::NAN, f64::NAN),
        };
        out.push(LevelRatio {
            k,
            theta,
            lhs,
            rhs,
            ratio,
        });
    }
    Ok(out)
}

fn ratio_of(lhs: f64, rhs: f64) -> Result<f64> {
    if rhs > 0.0 {
        Ok(lhs / rhs)
    } else if lhs == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::Undefined(
            "right-hand side vanishes with a nonzero left-hand side",
        ))
    }
}

/// Grid on which a dilated 1-d profile is resolved: `dx₁ = d/100`,
/// `|x₁| ≤ max(8, 1.5·support)·d`, four cells per torus direction.
fn dilation_spec(n: usize, d: f64, f: &LineProfile) -> Result<DomainSpec> {
    let reach = f.support_radius().max(1.0) * 1.5;
    let half = reach.max(8.0) * d;
    let n1 = math::round(2.0 * half / (d / 100.0)) as usize;
    DomainSpec::new(n, half, n1, vec![4; n - 1])
}

/// `ζ_d(x) = f(x₁/d)` on the cylinder of dimension `n`.
pub fn dilated_profile(n: usize, d: f64, f: &LineProfile) -> Result<Field> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dilation must be positive, got {d}"
        )));
    }
    let spec = dilation_spec(n, d, f)?;
    let z = Field::from_fn(&spec, 0.0, |x| f.eval(x[0] / d))?;
    let tail = tail_mass_fraction(&z);
    if tail > 1e-10 {
        return Err(Error::TailMass {
            t: 0.0,
            fraction: tail,
            threshold: 1e-10,
        });
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub measured: f64,
    pub predicted: f64,
}

/// `C_{n,d} = ‖ζ_d‖_{n/(n−1)} / ‖∇ζ_d‖₁`, with the closed form
/// `d^{(n−1)/n} ‖f‖_{n/(n−1)} / ‖f'‖₁` alongside.
pub fn counterexample_sobolev(n: usize, d: f64, f: &LineProfile) -> Result<Measured> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "the Sobolev family needs n >= 2".into(),
        ));
    }
    let z = dilated_profile(n, d, f)?;
    let pn = n as f64 / (n as f64 - 1.0);
    let measured = lp_norm(&z, pn)? / vector_lp_norm(&gradient(&z), 1.0)?;
    let predicted = math::powf(d, 1.0 / pn) * f.lq_norm(pn) / f.derivative_l1();
    Ok(Measured {
        measured,
        predicted,
    })
}

/// `‖ζ_d‖₂ / (‖∇ζ_d‖₂^θ ‖ζ_d‖₁^{1−θ})` and its predicted `d`-exponent `(3θ−1)/2`.
pub fn counterexample_theta(d: f64, theta: f64, f: &LineProfile) -> Result<Measured> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    let z = dilated_profile(2, d, f)?;
    let num = lp_norm(&z, 2.0)?;
    let den = math::powf(vector_lp_norm(&gradient(&z), 2.0)?, theta)
        * math::powf(lp_norm(&z, 1.0)?, 1.0 - theta);
    Ok(Measured {
        measured: num / den,
        predicted: 0.5 * (3.0 * theta - 1.0),
    })
}

/// `|u|^{s}` gradient by the chain rule, zero where `u = 0`.
fn power_gradient(u: &Field, s: f64) -> Vec<Field> {
    let g = gradient(u);
    g.iter()
        .map(|gi| {
            gi.zip_with(u, |dv, v| {
                if v == 0.0 {
                    0.0
                } else {
                    s * math::abs_pow(v, s - 1.0) * math::signum(v) * dv
                }
            })
            .expect("same grid")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationReport {
    pub lhs: f64,
    /// One right-hand term per level `k = 0..n−1`.
    pub terms: Vec<f64>,
    pub gammas: Vec<f64>,
    /// `lhs / Σ terms`.
    pub ratio: f64,
}

/// `‖u‖_p` against `Σ_k ‖∇(|u|^{p/2})‖₂^{2γ_k/(1+γ_k p)} ‖u‖_q^{1/(1+γ_k p)}`,
/// `γ_k = (k+1)/2 · (1/q − 1/p)`.
pub fn interpolation_ratio(u: &Field, p: f64, q: f64) -> Result<InterpolationReport> {
    if !(p >= 2.0 && p.is_finite()) || !(q >= 1.0 && q <= p) {
        return Err(Error::InvalidArgument(format!(
            "need 2 <= p < ∞ and 1 <= q <= p, got p={p}, q={q}"
        )));
    }
    let lhs = lp_norm(u, p)?;
    let gnorm = vector_lp_norm(&power_gradient(u, 0.5 * p), 2.0)?;
    let lq = lp_norm(u, q)?;
    let n = u.spec().dim;
    let mut terms = Vec::with_capacity(n);
    let mut gammas = Vec::with_capacity(n);
    for k in 0..n {
        let gamma = 0.5 * (k + 1) as f64 * (1.0 / q - 1.0 / p);
        let den = 1.0 + gamma * p;
        terms.push(math::powf(gnorm, 2.0 * gamma / den) * math::powf(lq, 1.0 / den));
        gammas.push(gamma);
    }
    let total: f64 = terms.iter().sum();
    let ratio = ratio_of(lhs, total)?;
    Ok(InterpolationReport {
        lhs,
        terms,
        gammas,
        ratio,
    })
}

/// `‖∂ᵢu‖_p / (‖∂ᵢ(|∂ᵢu|^{p/2})‖₂^{2/(p+2)} ‖u‖_p^{2/(p+2)})`, direction `i ∈ 1..=n`.
pub fn derivative_interpolation_ratio(u: &Field, i: usize, p: f64) -> Result<f64> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 2 <= p < ∞, got {p}")));
    }
    if i == 0 || i > u.spec().dim {
        return Err(Error::InvalidArgument(format!(
            "direction x{i} out of range"
        )));
    }
    let axis = i - 1;
    let di = partial(u, axis);
    let lhs = lp_norm(&di, p)?;
    let dii = partial(&di, axis);
    let s = 0.5 * p;
    // At a critical point on the grid the sign of ∂ᵢu is roundoff.
    let floor = 1e-10 * di.max_abs();
    let inner = dii.zip_with(&di, |d2, d1| {
        if d1.abs() <= floor {
            0.0
        } else {
            s * math::abs_pow(d1, s - 1.0) * math::signum(d1) * d2
        }
    })?;
    let e = 2.0 / (p + 2.0);
    let rhs = math::powf(lp_norm(&inner, 2.0)?, e) * math::powf(lp_norm(u, p)?, e);
    ratio_of(lhs, rhs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremeCaseReport {
    /// `max_x |u(x)|ⁿ / (∫|∂₁u|dx₁ ∏ᵢ ∫|∂ᵢu|dxᵢ)`; at most 1 when the product bound holds.
    pub product_ratio: f64,
    /// Per direction `i = 1..n`: largest line ratio
    /// `∫|∂ᵢu|ᵖ / ((∫|∂ᵢ²u|ʳ)^{p/2r} (∫|u|^q)^{p/2q})`.
    pub line_ratios: Vec<f64>,
    pub p: f64,
}

/// Largest per-slice average over torus direction `dir`.
pub fn slice_average(u: &Field, dir: usize) -> f64 {
    let avg = average_axes(u.values(), &u.spec().shape(), &[dir - 1]);
    avg.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Top component of the decomposition; zero-average in every torus direction.
pub fn top_component(d: &DecompositionResult) -> Field {
    d.level(d.dim() - 1)
}

/// The two extreme cases of the GN inequality for a field with zero average
/// in every torus direction. Line integrals use exact discrete total
/// variation, so the product bound holds on the grid without slack.
pub fn extreme_case_checks(u: &Field, q: f64, r: f64) -> Result<ExtremeCaseReport> {
    if !(q >= 1.0 && q.is_finite()) || !(r > 1.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= q < ∞ and 1 < r < ∞, got q={q}, r={r}"
        )));
    }
    let spec = u.spec();
    let scale = u.max_abs();
    for dir in 2..=spec.dim {
        let a = slice_average(u, dir);
        if a > 1e-10 * scale.max(f64::MIN_POSITIVE) && a > 0.0 {
            return Err(Error::Precondition {
                direction: dir,
                value: a,
            });
        }
    }
    let shape = spec.shape();
    let n = spec.dim;
    let vals = u.values();

    // Discrete total variation along every line, broadcast to its points.
    let mut tv = vec![vec![0.0; vals.len()]; n];
    for (axis, tva) in tv.iter_mut().enumerate() {
        crate::domain::for_each_line(&shape, axis, |base, stride, len| {
            let at = |k: usize| vals[base + k * stride];
            let mut s = 0.0;
            for k in 1..len {
                s += (at(k) - at(k - 1)).abs();
            }
            if axis == 0 {
                // Extend by zero beyond the truncation.
                s += at(0).abs() + at(len - 1).abs();
            } else {
                s += (at(0) - at(len - 1)).abs();
            }
            for k in 0..len {
                tva[base + k * stride] = s;
            }
        });
    }
    let mut product_ratio = 0.0f64;
    for (k, &v) in vals.iter().enumerate() {
        if v.abs() <= 1e-10 * scale {
            continue;
        }
        let lhs = math::powf(v.abs(), n as f64);
        let rhs: f64 = tv.iter().map(|t| t[k]).product();
        product_ratio = product_ratio.max(lhs / rhs);
    }

    let p = 2.0 / (1.0 / r + 1.0 / q);
    let mut line_ratios = Vec::with_capacity(n);
    for axis in 0..n {
        let h = spec.spacing(axis);
        let periodic = axis > 0;
        let d1 = diff_axis(vals, &shape, axis, h, periodic);
        let d2 = diff_axis(&d1, &shape, axis, h, periodic);
        let mut worst = 0.0f64;
        crate::domain::for_each_line(&shape, axis, |base, stride, len| {
            // Lines through a nodal set of the field hold only roundoff.
            let line_max = (0..len).fold(0.0f64, |m, k| m.max(vals[base + k * stride].abs()));
            if line_max <= 1e-10 * scale {
                return;
            }
            let mut a = 0.0;
            let mut b = 0.0;
            let mut c = 0.0;
            for k in 0..len {
                let idx = base + k * stride;
                a += math::abs_pow(d1[idx], p);
                b += math::abs_pow(d2[idx], r);
                c += math::abs_pow(vals[idx], q);
            }
            let (a, b, c) = (a * h, b * h, c * h);
            let rhs = math::powf(b, p / (2.0 * r)) * math::powf(c, p / (2.0 * q));
            if rhs > 0.0 {
                worst = worst.max(a / rhs);
            }
        });
        line_ratios.push(worst);
    }
    Ok(ExtremeCaseReport {
        product_ratio,
        line_ratios,
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_examples() {
        let t = solve_theta(&GNParams::new(0, 1, 2.0, 1.0, 2.0), 0).unwrap();
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
        for k in 0..3 {
            assert_eq!(
                solve_theta(&GNParams::new(0, 1, 3.0, 3.0, 3.0), k).unwrap(),
                0.0
            );
        }
        assert!(solve_theta(&GNParams::new(1, 1, 2.0, 2.0, 2.0), 1).is_ok());
        assert!(matches!(
            solve_theta(&GNParams::new(1, 1, 3.0, 2.0, 2.0), 1),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn exceptional_cases_guarded() {
        // j = 0, rm < k+1, q = ∞.
        let p = GNParams::new(0, 1, f64::INFINITY, f64::INFINITY, 1.5);
        assert!(solve_theta(&p, 1).is_err());
        // theta = 1 with m − j − (k+1)/r = 0.
        let p = GNParams::new(1, 2, f64::INFINITY, 2.0, 2.0);
        assert!(matches!(solve_theta(&p, 1), Err(Error::Infeasible(_))));
    }
}
