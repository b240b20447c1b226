use rarefaction_core::decomp::decompose;
use rarefaction_core::fit::linear_fit;
use rarefaction_core::ineq::*;
use rarefaction_core::trig::LineProfile;
use rarefaction_core::{DomainSpec, Error, Field};
use std::f64::consts::TAU;

const GAUSS: LineProfile = LineProfile::Gaussian {
    amplitude: 1.0,
    width: 1.0,
};
const DILATIONS: [f64; 7] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];

fn log_slope(pairs: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    linear_fit(&xs, &ys).unwrap().slope
}

fn relation_gap(p: &GNParams, k: usize, theta: f64) -> f64 {
    let d = (k + 1) as f64;
    let rhs = p.j as f64 / d + (1.0 / p.r - p.m as f64 / d) * theta + (1.0 - theta) / p.q;
    (1.0 / p.p - rhs).abs()
}

#[test]
fn theta_round_trip() {
    let exps = [1.0, 1.5, 2.0, 3.0, 4.0, 8.0, f64::INFINITY];
    let mut solved = 0;
    for j in 0..=1 {
        for m in 1..=2 {
            for &p in &exps {
                for &q in &exps {
                    for &r in &exps {
                        for k in 0..3 {
                            let params = GNParams {
                                decays: true,
                                ..GNParams::new(j, m, p, q, r)
                            };
                            if let Ok(th) = solve_theta(&params, k) {
                                assert!(th >= j as f64 / m as f64 - 1e-15 && th <= 1.0);
                                assert!(relation_gap(&params, k, th) < 1e-14, "{params:?} k={k}");
                                solved += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(solved > 100);
}

#[test]
fn decay_flag_lifts_the_sup_exclusion() {
    let p = GNParams::new(0, 1, f64::INFINITY, f64::INFINITY, 1.5);
    assert!(matches!(solve_theta(&p, 1), Err(Error::Infeasible(_))));
    assert!(solve_theta(&GNParams { decays: true, ..p }, 1).is_ok());
    assert!(solve_theta(&GNParams::new(0, 1, 0.5, 1.0, 1.0), 0).is_err());
}

#[test]
fn gaussian_sobolev_constant() {
    let c = counterexample_sobolev(2, 1.0, &GAUSS).unwrap();
    let closed = (std::f64::consts::PI / 2.0).powf(0.25) / 2.0;
    assert!((c.predicted - closed).abs() < 1e-14);
    assert!((c.measured - 0.55975).abs() < 1e-3, "{}", c.measured);
    assert!((c.measured / c.predicted - 1.0).abs() < 1e-3);
}

#[test]
fn sobolev_constant_grows_like_dilation_power() {
    for n in [2usize, 3] {
        let pts: Vec<(f64, f64)> = DILATIONS
            .iter()
            .map(|&d| (d, counterexample_sobolev(n, d, &GAUSS).unwrap().measured))
            .collect();
        assert!(pts.windows(2).all(|w| w[1].1 > w[0].1));
        let slope = log_slope(&pts);
        let expect = (n as f64 - 1.0) / n as f64;
        assert!((slope - expect).abs() < 1e-3, "n={n}: {slope}");
    }
    let hat = LineProfile::Hat {
        amplitude: 1.0,
        width: 1.0,
    };
    let c = counterexample_sobolev(2, 2.0, &hat).unwrap();
    // central differences straddle the hat's three kinks: O(dx/d) error
    assert!((c.measured / c.predicted - 1.0).abs() < 1e-2, "{c:?}");
}

#[test]
fn theta_family_slopes() {
    for theta in [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0] {
        let pts: Vec<(f64, f64)> = DILATIONS
            .iter()
            .map(|&d| (d, counterexample_theta(d, theta, &GAUSS).unwrap().measured))
            .collect();
        let slope = log_slope(&pts);
        assert!(
            (slope - 0.5 * (3.0 * theta - 1.0)).abs() < 1e-3,
            "θ={theta}: {slope}"
        );
    }
    assert!(counterexample_theta(1.0, 1.5, &GAUSS).is_err());
}

#[test]
fn short_domain_is_rejected() {
    // A profile whose support radius is understated leaves mass in the strip.
    let wide = LineProfile::Hat {
        amplitude: 1.0,
        width: 1.0,
    };
    assert!(dilated_profile(2, 1.0, &wide).is_ok());
    assert!(matches!(
        dilated_profile(2, -1.0, &GAUSS),
        Err(Error::InvalidArgument(_))
    ));
}

fn gn() -> GNParams {
    GNParams::new(0, 1, 2.0, 1.0, 2.0)
}

#[test]
fn tiled_bump_only_charges_the_line_level() {
    let ratios: Vec<f64> = [1.0, 4.0, 16.0, 64.0]
        .iter()
        .map(|&d| {
            let z = dilated_profile(2, d, &GAUSS).unwrap();
            let r = gn_ratio(&z, &gn(), &decompose(&z)).unwrap();
            assert_eq!(r[0].theta, Some(1.0 / 3.0));
            assert!(r[0].ratio > 0.0);
            assert_eq!(r[1].lhs, 0.0);
            assert_eq!(r[1].ratio, 0.0);
            r[0].ratio
        })
        .collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo < 1.01, "{ratios:?}");
}

#[test]
fn zero_field_ratios_vanish() {
    let s = DomainSpec::new(2, 2.0, 40, vec![8]).unwrap();
    let z = Field::constant(&s, 0.0, 0.0).unwrap();
    let r = gn_ratio(&z, &gn(), &decompose(&z)).unwrap();
    assert!(r.iter().all(|l| l.ratio == 0.0));
    let e = extreme_case_checks(&z, 2.0, 2.0).unwrap();
    assert_eq!(e.product_ratio, 0.0);
}

#[test]
fn interpolation_exponents() {
    let z = dilated_profile(2, 1.0, &GAUSS).unwrap();
    let r = interpolation_ratio(&z, 2.0, 1.0).unwrap();
    assert_eq!(r.gammas, vec![0.25, 0.5]);
    // k = 0 gradient exponent 2γ/(1+γp) = 1/3
    let g0 = r.gammas[0];
    assert!((2.0 * g0 / (1.0 + 2.0 * g0) - 1.0 / 3.0).abs() < 1e-15);
    let same = interpolation_ratio(&z, 3.0, 3.0).unwrap();
    assert!(same.ratio <= 0.5 + 1e-15);
    assert!(interpolation_ratio(&z, 1.5, 1.0).is_err());
    assert!(interpolation_ratio(&z, 2.0, 3.0).is_err());
}

#[test]
fn interpolation_bounded_under_dilation() {
    let ratios: Vec<f64> = DILATIONS
        .iter()
        .map(|&d| {
            interpolation_ratio(&dilated_profile(2, d, &GAUSS).unwrap(), 2.0, 1.0)
                .unwrap()
                .ratio
        })
        .collect();
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    assert!(hi < 1.0, "{ratios:?}");
    assert!(ratios.iter().all(|&r| r > 0.1 * hi));
}

/// `‖∂₂u‖₂ / (‖∂₂(|∂₂u|)‖₂^{1/2} ‖u‖₂^{1/2})` for `u = sin(2πx₂)`, from
/// midpoint sums of the exact derivatives on `[−L, L] × T`.
fn sine_oracle(half: f64) -> f64 {
    let m = 100_000;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for k in 0..m {
        let x = (k as f64 + 0.5) / m as f64;
        let d1 = TAU * (TAU * x).cos();
        let d2 = -TAU * TAU * (TAU * x).sin();
        a += d1 * d1;
        b += (d1.signum() * d2).powi(2);
        c += (TAU * x).sin().powi(2);
    }
    let w = 2.0 * half / m as f64;
    (a * w).sqrt() / ((b * w).sqrt().sqrt() * (c * w).sqrt().sqrt())
}

fn sine_field(nt: usize) -> Field {
    let s = DomainSpec::new(2, 2.0, 40, vec![nt]).unwrap();
    Field::from_fn(&s, 0.0, |x| (TAU * x[1]).sin()).unwrap()
}

#[test]
fn derivative_interpolation_matches_quadrature() {
    // |∂₂u| has kinks where cos vanishes, so agreement is first order in h.
    let oracle = sine_oracle(2.0);
    let mut prev: Option<f64> = None;
    for nt in [128usize, 256, 512] {
        let r = derivative_interpolation_ratio(&sine_field(nt), 2, 2.0).unwrap();
        assert!(
            (r - oracle).abs() <= 1.1 / nt as f64,
            "nt={nt}: {r} vs {oracle}"
        );
        if let Some(q) = prev {
            assert!((r / q - 1.0).abs() < 0.02);
        }
        prev = Some(r);
    }
    let s = DomainSpec::new(2, 2.0, 40, vec![8]).unwrap();
    let flat = Field::constant(&s, 3.0, 0.0).unwrap();
    assert_eq!(derivative_interpolation_ratio(&flat, 1, 2.0).unwrap(), 0.0);
    assert!(derivative_interpolation_ratio(&flat, 3, 2.0).is_err());
}

fn bump_mode() -> Field {
    let s = DomainSpec::new(2, 4.0, 160, vec![16]).unwrap();
    Field::from_fn(&s, 0.0, |x| (TAU * x[1]).sin() * (-x[0] * x[0]).exp()).unwrap()
}

#[test]
fn extreme_cases_on_a_zero_average_mode() {
    let u = bump_mode();
    let e = extreme_case_checks(&u, 2.0, 2.0).unwrap();
    assert_eq!(e.p, 2.0);
    assert!(
        e.product_ratio > 0.0 && e.product_ratio <= 1.0,
        "{}",
        e.product_ratio
    );
    assert!(e.product_ratio < 0.5);
    assert!(
        e.line_ratios
            .iter()
            .all(|r| r.is_finite() && *r > 0.0 && *r < 2.0),
        "{:?}",
        e.line_ratios
    );
    let shifted = u.map(|v| v + 0.1);
    match extreme_case_checks(&shifted, 2.0, 2.0) {
        Err(Error::Precondition { direction, .. }) => assert_eq!(direction, 2),
        other => panic!("{other:?}"),
    }
    // Projecting onto the top component restores the precondition.
    let top = top_component(&decompose(&shifted));
    assert!(slice_average(&top, 2) < 1e-15);
    assert!(extreme_case_checks(&top, 2.0, 2.0).is_ok());
}

#[test]
fn ratios_are_scale_invariant() {
    let u = bump_mode().map(|v| v + 0.3 * v * v);
    let d = decompose(&u);
    let tol = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1e-300);
    for lambda in [-3.7, 1e3, 1e-3] {
        let v = u.scale(lambda);
        let dv = decompose(&v);
        for (a, b) in gn_ratio(&u, &gn(), &d)
            .unwrap()
            .iter()
            .zip(gn_ratio(&v, &gn(), &dv).unwrap())
        {
            assert!(tol(a.ratio, b.ratio), "{} {}", a.ratio, b.ratio);
        }
        let (a, b) = (
            interpolation_ratio(&u, 4.0, 2.0).unwrap(),
            interpolation_ratio(&v, 4.0, 2.0).unwrap(),
        );
        assert!(tol(a.ratio, b.ratio), "{} {}", a.ratio, b.ratio);
        for i in 1..=2 {
            let (a, b) = (
                derivative_interpolation_ratio(&u, i, 4.0).unwrap(),
                derivative_interpolation_ratio(&v, i, 4.0).unwrap(),
            );
            assert!(tol(a, b), "{a} {b}");
        }
        let top_u = rarefaction_core::ineq::top_component(&d);
        let top_v = rarefaction_core::ineq::top_component(&dv);
        let (a, b) = (
            extreme_case_checks(&top_u, 2.0, 3.0).unwrap(),
            extreme_case_checks(&top_v, 2.0, 3.0).unwrap(),
        );
        assert!(tol(a.product_ratio, b.product_ratio));
        for (x, y) in a.line_ratios.iter().zip(&b.line_ratios) {
            assert!(tol(*x, *y), "{x} {y}");
        }
    }
}

// A cosine mode puts grid points on critical points of ∂₂u and a product of
// sines puts whole lines on nodal sets; neither may inject roundoff signs.
#[test]
fn critical_points_and_nodal_lines_are_scale_invariant() {
    let s = DomainSpec::new(3, 4.0, 64, vec![16, 16]).unwrap();
    let u = Field::from_fn(&s, 0.0, |x| {
        let g = (-x[0] * x[0]).exp();
        g * ((TAU * x[1]).sin() * (2.0 * TAU * x[2]).sin()
            + 0.4 * (2.0 * TAU * x[1]).cos() * (TAU * x[2]).sin())
    })
    .unwrap();
    let top = top_component(&decompose(&u));
    let base = extreme_case_checks(&top, 2.0, 2.0).unwrap();
    assert!(base.product_ratio.is_finite() && base.product_ratio > 0.0);
    for lambda in [-2.5, 1e3] {
        let v = u.scale(lambda);
        for i in 1..=3 {
            let (a, b) = (
                derivative_interpolation_ratio(&u, i, 2.0).unwrap(),
                derivative_interpolation_ratio(&v, i, 2.0).unwrap(),
            );
            assert!((a - b).abs() <= 1e-12 * a, "x{i}: {a} {b}");
        }
        let e = extreme_case_checks(&top.scale(lambda), 2.0, 2.0).unwrap();
        assert!((e.product_ratio - base.product_ratio).abs() <= 1e-12 * base.product_ratio);
        for (x, y) in base.line_ratios.iter().zip(&e.line_ratios) {
            assert!((x - y).abs() <= 1e-12 * x, "{x} {y}");
        }
    }
}
