use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rarefaction_core::rates::*;
use rarefaction_core::solver::{default_schedule, NormRow, Trajectory};
use rarefaction_core::Error;

fn law(c: f64, a: f64) -> impl Fn(f64) -> f64 {
    move |t| c * (1.0 + t).powf(a)
}

/// Norm table whose columns follow `(1+t)^e` with the given exponents.
fn synthetic(dev: f64, phi: [f64; 4], grad: [f64; 2]) -> Trajectory {
    let rows = default_schedule(100.0)
        .into_iter()
        .map(|t| NormRow {
            t,
            phi_l1: law(0.3, phi[0])(t),
            phi_l2: law(0.1, phi[1])(t),
            phi_l4: law(0.05, phi[2])(t),
            phi_inf: law(0.02, phi[3])(t),
            grad_phi_l2: law(0.2, grad[0])(t),
            grad_phi_l4: law(0.1, grad[1])(t),
            dev_inf: law(0.04, dev)(t),
            h_l1: 0.0,
            tail_mass: 0.0,
            ansatz_gap: 0.0,
            boundary_gap: 0.0,
        })
        .collect();
    Trajectory {
        rows,
        snapshots: vec![],
        max_principle_excess: 0.0,
        steps: 0,
        initial_range: (-0.6, 0.6),
    }
}

fn predicted() -> Trajectory {
    synthetic(-0.5, [0.0, -0.25, -0.375, -0.5], [-0.75, -0.875])
}

#[test]
fn exact_and_constant_laws() {
    let s: Vec<(f64, f64)> = (0..30)
        .map(|k| (k as f64, law(1.0, -0.5)(k as f64)))
        .collect();
    let f = fit_power_law(&s, (0.0, 29.0)).unwrap();
    assert!((f.exponent + 0.5).abs() < 1e-13 && (f.r2 - 1.0).abs() < 1e-13);
    assert_eq!(f.n_points, 30);
    let c: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 7.0)).collect();
    let f = fit_power_law(&c, (0.0, 9.0)).unwrap();
    assert!(f.exponent.abs() < 1e-14);
}

#[test]
fn noisy_law_recovers_exponent() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let s: Vec<(f64, f64)> = (0..60)
            .map(|k| {
                let t = 10.0 + 1.5 * k as f64;
                (
                    t,
                    law(3.0, -0.75)(t) * (1.0 + 1e-3 * rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let f = fit_power_law(&s, (10.0, 100.0)).unwrap();
        assert!((f.exponent + 0.75).abs() < 0.01, "{}", f.exponent);
    }
}

#[test]
fn rescaling_leaves_exponent() {
    let s: Vec<(f64, f64)> = (1..40)
        .map(|k| {
            (
                k as f64,
                law(1.0, -0.3)(k as f64) * (1.0 + 0.1 * (k as f64).sin()),
            )
        })
        .collect();
    let a = fit_power_law(&s, (1.0, 39.0)).unwrap();
    let scaled: Vec<(f64, f64)> = s.iter().map(|&(t, v)| (t, 1234.5 * v)).collect();
    let b = fit_power_law(&scaled, (1.0, 39.0)).unwrap();
    assert!((a.exponent - b.exponent).abs() < 1e-12);
    assert!((a.r2 - b.r2).abs() < 1e-12);
}

#[test]
fn fit_errors() {
    let s = vec![(1.0, 1.0), (2.0, 0.5), (3.0, 0.0), (4.0, 0.2)];
    assert!(matches!(
        fit_power_law(&s, (0.0, 5.0)),
        Err(Error::NonPositive { .. })
    ));
    assert!(matches!(
        fit_power_law(&s[..3], (0.0, 5.0)),
        Err(Error::InsufficientData { .. })
    ));
}

#[test]
fn predicted_rates_pass() {
    let tr = predicted();
    let main = verify_main_theorem(&tr, None).unwrap();
    assert_eq!(main.status, Status::Pass);
    assert_eq!(main.fit.unwrap().window, (10.0, 100.0));
    for (which, p) in [
        (Which::Phi, 1.0),
        (Which::Phi, 2.0),
        (Which::Phi, 4.0),
        (Which::GradPhi, 2.0),
        (Which::GradPhi, 4.0),
    ] {
        let r = verify_apriori(&tr, p, which, None).unwrap();
        assert_eq!(r.status, Status::Pass, "{}", r.name);
        assert!((r.fit.unwrap().exponent - r.predicted).abs() < 1e-12);
    }
    let o = ordering_check(&tr, None, 0.1).unwrap();
    assert!(o.monotone);
    assert_eq!(
        o.fits.iter().map(|f| f.0).collect::<Vec<_>>(),
        vec![0.0, 0.25, 0.5, 1.0]
    );
}

#[test]
fn steeper_and_slower_decay_are_told_apart() {
    let tr = synthetic(-0.9, [0.0, -0.5, -0.375, -0.5], [-0.3, -0.875]);
    assert_eq!(
        verify_main_theorem(&tr, None).unwrap().status,
        Status::ConsistentSteeper
    );
    assert_eq!(
        verify_apriori(&tr, 2.0, Which::Phi, None).unwrap().status,
        Status::ConsistentSteeper
    );
    assert_eq!(
        verify_apriori(&tr, 2.0, Which::GradPhi, None)
            .unwrap()
            .status,
        Status::Fail
    );
    // φ in L² now decays faster than in L⁴: ordering broken by more than the slack
    assert!(!ordering_check(&tr, None, 0.1).unwrap().monotone);
}

#[test]
fn l1_boundedness() {
    let growing = synthetic(-0.5, [0.6, -0.25, -0.375, -0.5], [-0.75, -0.875]);
    let r = verify_apriori(&growing, 1.0, Which::Phi, None).unwrap();
    assert!(r.spread > BOUNDED_SPREAD);
    assert_eq!(r.status, Status::Fail);
    // Boundedness is read as max/min ≤ 3, so strong decay fails it too.
    let decaying = synthetic(-0.5, [-1.5, -0.25, -0.375, -0.5], [-0.75, -0.875]);
    let r = verify_apriori(&decaying, 1.0, Which::Phi, None).unwrap();
    assert_eq!(r.status, Status::Fail);
}

#[test]
fn noise_level_series_is_degenerate() {
    let mut tr = predicted();
    for r in &mut tr.rows {
        r.dev_inf *= 1e-12;
    }
    let rep = verify_main_theorem(&tr, None).unwrap();
    assert_eq!(rep.status, Status::Degenerate);
    assert!(rep.fit.is_none());
    assert_eq!(rep.status.as_str(), "degenerate");
}

#[test]
fn windows_and_ranges_checked() {
    let tr = predicted();
    assert!(verify_main_theorem(&tr, Some((1.0, 100.0))).is_err());
    assert!(verify_main_theorem(&tr, Some((20.0, 100.0))).is_ok());
    assert!(verify_apriori(&tr, 1.0, Which::GradPhi, None).is_err());
    assert!(verify_apriori(&tr, 0.5, Which::Phi, None).is_err());
    assert!(verify_apriori(&tr, 3.0, Which::Phi, None).is_err());
    assert!(predicted_exponent(Which::Phi, f64::INFINITY)
        .unwrap_err()
        .contains("[1, ∞)"));
}
