//! Splitting a field on the cylinder into components with zero average in
//! each of their own torus directions, by iterated partial averaging.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{average_axes, gradient, lp_norm, vector_lp_norm, Field};
use crate::error::{Error, Result};

/// A component depending on `x₁` and the torus directions `dirs`
/// (numbered `2..=n`, ascending), stored on the full grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub dirs: Vec<usize>,
    pub field: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    /// Average over every torus direction; constant across the torus.
    pub u0: Field,
    /// Level by level, lexicographic within a level.
    pub components: Vec<Component>,
}

impl DecompositionResult {
    pub fn dim(&self) -> usize {
        self.u0.spec().dim
    }

    /// `u⁽⁰⁾` as a function of `x₁` alone.
    pub fn u0_line(&self) -> Vec<f64> {
        let tl = self.u0.spec().transverse_len();
        self.u0.values().iter().step_by(tl).copied().collect()
    }

    /// `u⁽ᵏ⁾`: `u⁽⁰⁾` for `k = 0`, otherwise the sum of the level-`k` components.
    pub fn level(&self, k: usize) -> Field {
        if k == 0 {
            return self.u0.clone();
        }
        let mut acc = vec![0.0; self.u0.values().len()];
        for c in self.components.iter().filter(|c| c.dirs.len() == k) {
            for (a, v) in acc.iter_mut().zip(c.field.values()) {
                *a += v;
            }
        }
        Field::new(self.u0.spec().clone(), acc, self.u0.t()).expect("finite sum of finite fields")
    }

    pub fn component(&self, dirs: &[usize]) -> Option<&Field> {
        self.components
            .iter()
            .find(|c| c.dirs == dirs)
            .map(|c| &c.field)
    }
}

/// All `k`-subsets of `{2, …, n}` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for d in start..=n {
            cur.push(d);
            rec(d + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(2, n, k, &mut Vec::new(), &mut out);
    out
}

pub fn decompose(u: &Field) -> DecompositionResult {
    let spec = u.spec();
    let n = spec.dim;
    let shape = spec.shape();
    let all_axes: Vec<usize> = (1..n).collect();
    let u0v = average_axes(u.values(), &shape, &all_axes);
    let mut partial = u0v.clone();
    let mut components = Vec::new();
    for k in 1..n {
        let residual: Vec<f64> = u
            .values()
            .iter()
            .zip(&partial)
            .map(|(a, b)| a - b)
            .collect();
        let mut level_sum = vec![0.0; residual.len()];
        for dirs in subsets(n, k) {
            let complement: Vec<usize> = (2..=n)
                .filter(|d| !dirs.contains(d))
                .map(|d| d - 1)
                .collect();
            let vals = average_axes(&residual, &shape, &complement);
            for (s, v) in level_sum.iter_mut().zip(&vals) {
                *s += v;
            }
            let field = Field::new(spec.clone(), vals, u.t()).expect("averages of finite values");
            components.push(Component { dirs, field });
        }
        for (p, s) in partial.iter_mut().zip(&level_sum) {
            *p += s;
        }
    }
    let u0 = Field::new(spec.clone(), u0v, u.t()).expect("averages of finite values");
    DecompositionResult { u0, components }
}

pub fn reconstruct(d: &DecompositionResult) -> Field {
    let mut acc = d.u0.values().to_vec();
    for c in &d.components {
        for (a, v) in acc.iter_mut().zip(c.field.values()) {
            *a += v;
        }
    }
    Field::new(d.u0.spec().clone(), acc, d.u0.t()).expect("finite sum of finite fields")
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipEntry {
    pub dirs: Vec<usize>,
    pub direction: usize,
    /// Largest absolute slice average over `direction`.
    pub max_average: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MembershipReport {
    pub entries: Vec<MembershipEntry>,
}

impl MembershipReport {
    pub fn max(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.max_average))
    }

    pub fn worst(&self) -> Option<&MembershipEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.max_average.total_cmp(&b.max_average))
    }
}

pub fn check_membership(d: &DecompositionResult) -> MembershipReport {
    let shape = d.u0.spec().shape();
    let mut entries = Vec::new();
    for c in &d.components {
        for &dir in &c.dirs {
            let avg = average_axes(c.field.values(), &shape, &[dir - 1]);
            let max_average = avg.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            entries.push(MembershipEntry {
                dirs: c.dirs.clone(),
                direction: dir,
                max_average,
            });
        }
    }
    MembershipReport { entries }
}

/// Constant asserted for the component-norm bound: `4^{n−1}`.
pub fn norm_bound(n: usize) -> f64 {
    libm::pow(4.0, (n - 1) as f64)
}

fn order_norm(f: &Field, m: usize, p: f64) -> Result<f64> {
    match m {
        0 => lp_norm(f, p),
        1 => vector_lp_norm(&gradient(f), p),
        _ => Err(Error::InvalidArgument(
            "derivative order must be 0 or 1".into(),
        )),
    }
}

/// `(‖∇ᵐu⁽⁰⁾‖ + Σ‖∇ᵐu_{i…}‖) / ‖∇ᵐu‖` in `Lᵖ`.
pub fn norm_bound_ratio(u: &Field, d: &DecompositionResult, m: usize, p: f64) -> Result<f64> {
    let denom = order_norm(u, m, p)?;
    let mut num = order_norm(&d.u0, m, p)?;
    for c in &d.components {
        num += order_norm(&c.field, m, p)?;
    }
    if denom == 0.0 {
        return Err(Error::Undefined("derivative norm of the field vanishes"));
    }
    Ok(num / denom)
}
