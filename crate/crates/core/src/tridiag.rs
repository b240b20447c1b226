//! Constant-coefficient tridiagonal solves for `(I - c·δ²)` operators.
//!
//! Every implicit diffusion solve in the crate has the form
//! `-r·y[k-1] + (1 + 2r)·y[k] - r·y[k+1] = d[k]`, either with Dirichlet data
//! folded into `d` or with periodic wrap-around.

/// Thomas algorithm for the constant-coefficient system; `d` is overwritten
/// with the solution. `scratch` must hold at least `d.len()` entries.
pub fn solve_dirichlet(r: f64, d: &mut [f64], scratch: &mut [f64]) {
    let n = d.len();
    let b = 1.0 + 2.0 * r;
    let a = -r;
    let cp = &mut scratch[..n];
    cp[0] = a / b;
    d[0] /= b;
    for k in 1..n {
        let m = b - a * cp[k - 1];
        cp[k] = a / m;
        d[k] = (d[k] - a * d[k - 1]) / m;
    }
    for k in (0..n - 1).rev() {
        d[k] -= cp[k] * d[k + 1];
    }
}

/// Periodic (cyclic) system via Sherman–Morrison. `scratch` must hold at
/// least `2 * d.len()` entries.
pub fn solve_periodic(r: f64, d: &mut [f64], scratch: &mut [f64]) {
    let n = d.len();
    let a = -r;
    let b = 1.0 + 2.0 * r;
    // A = T + u vᵀ with u = (γ, 0, …, 0, a), v = (1, 0, …, 0, a/γ).
    let gamma = -b;
    let (z, rest) = scratch.split_at_mut(n);
    let cp = &mut rest[..n];

    let diag = |k: usize| {
        if k == 0 {
            b - gamma
        } else if k == n - 1 {
            b - a * a / gamma
        } else {
            b
        }
    };
    // Factor once, solve for d and for u.
    for k in 0..n {
        z[k] = if k == 0 {
            gamma
        } else if k == n - 1 {
            a
        } else {
            0.0
        };
    }
    cp[0] = a / diag(0);
    d[0] /= diag(0);
    z[0] /= diag(0);
    for k in 1..n {
        let m = diag(k) - a * cp[k - 1];
        cp[k] = a / m;
        d[k] = (d[k] - a * d[k - 1]) / m;
        z[k] = (z[k] - a * z[k - 1]) / m;
    }
    for k in (0..n - 1).rev() {
        d[k] -= cp[k] * d[k + 1];
        z[k] -= cp[k] * z[k + 1];
    }
    let vy = d[0] + a / gamma * d[n - 1];
    let vz = z[0] + a / gamma * z[n - 1];
    let f = vy / (1.0 + vz);
    for k in 0..n {
        d[k] -= f * z[k];
    }
}
