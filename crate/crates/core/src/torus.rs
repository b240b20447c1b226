//! Uniform grids on the unit torus `T^n` and spectral differentiation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::domain::{for_each_line, DomainSpec};
use crate::error::{Error, Result};
use crate::math::{self, pairwise_sum};

/// Node `j` along axis `a` sits at `offsets[a] + j / counts[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusGrid {
    pub counts: Vec<usize>,
    pub offsets: Vec<f64>,
}

impl TorusGrid {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        let offsets = vec![0.0; counts.len()];
        Self::with_offsets(counts, offsets)
    }

    pub fn with_offsets(counts: Vec<usize>, offsets: Vec<f64>) -> Result<Self> {
        if counts.is_empty() || counts.len() > crate::domain::MAX_DIM {
            return Err(Error::InvalidDomain(format!(
                "torus dimension must be in 1..=3, got {}",
                counts.len()
            )));
        }
        if counts.len() != offsets.len() {
            return Err(Error::InvalidDomain(
                "one offset per torus axis required".into(),
            ));
        }
        if let Some(c) = counts.iter().find(|&&c| c < 4) {
            return Err(Error::InvalidDomain(format!(
                "torus cell counts must be >= 4, got {c}"
            )));
        }
        Ok(TorusGrid { counts, offsets })
    }

    /// Torus grid whose `x₁` nodes coincide (mod 1) with the cell centres of
    /// `spec` and whose remaining axes match its torus directions. Requires
    /// `1 / dx₁` to be an integer.
    pub fn aligned_with(spec: &DomainSpec) -> Result<Self> {
        let per_unit = 1.0 / spec.dx1();
        let n = math::round(per_unit);
        if n < 4.0 || (per_unit - n).abs() > 1e-9 * per_unit {
            return Err(Error::InvalidDomain(format!(
                "x1 spacing {} must divide the unit period (1/dx1 = {per_unit})",
                spec.dx1()
            )));
        }
        let mut counts = vec![n as usize];
        counts.extend_from_slice(&spec.n_torus);
        let mut offsets = vec![0.0; counts.len()];
        offsets[0] = math::frac(spec.x1(0));
        Self::with_offsets(counts, offsets)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        1.0 / self.counts[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        self.offsets[axis] + j as f64 / self.counts[axis] as f64
    }

    pub fn point(&self, flat: usize) -> [f64; crate::domain::MAX_DIM] {
        let mut x = [0.0; crate::domain::MAX_DIM];
        let mut rest = flat;
        for axis in (0..self.dim()).rev() {
            let n = self.counts[axis];
            x[axis] = self.coord(axis, rest % n);
            rest /= n;
        }
        x
    }

    /// Flat torus index holding the value for flat index `flat` of an aligned
    /// cylinder grid (see [`TorusGrid::aligned_with`]).
    #[inline]
    pub fn aligned_index(&self, spec: &DomainSpec, flat: usize) -> usize {
        let tl = spec.transverse_len();
        let row = flat / tl;
        (row % self.counts[0]) * tl + flat % tl
    }
}

/// Samples on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    pub grid: TorusGrid,
    pub values: Vec<f64>,
}

impl TorusField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "torus field has {} values, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(TorusField { grid, values })
    }

    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| f(&grid.point(k)[..grid.dim()]))
            .collect();
        TorusField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    pub fn sup(&self) -> f64 {
        math::max_abs(&self.values)
    }
}

/// Differentiation matrix of the trigonometric interpolant on `n` equispaced
/// nodes of a unit period. For even `n` the Nyquist mode contributes nothing
/// at the nodes.
pub fn spectral_diff_matrix(n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    for j in 0..n {
        for m in 0..n {
            if j == m {
                continue;
            }
            let k = j as i64 - m as i64;
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let arg = PI * k as f64 / n as f64;
            let s = math::sin(arg);
            d[j * n + m] = if n.is_multiple_of(2) {
                PI * sign * math::cos(arg) / s
            } else {
                PI * sign / s
            };
        }
    }
    d
}

/// Spectral derivative along `axis` of a row-major torus array.
pub fn spectral_partial(values: &[f64], counts: &[usize], axis: usize) -> Vec<f64> {
    let n = counts[axis];
    let d = spectral_diff_matrix(n);
    let mut out = vec![0.0; values.len()];
    let mut line = vec![0.0; n];
    for_each_line(counts, axis, |base, stride, len| {
        for (k, l) in line.iter_mut().enumerate() {
            *l = values[base + k * stride];
        }
        for j in 0..len {
            let row = &d[j * n..(j + 1) * n];
            let acc: f64 = row.iter().zip(&line).map(|(a, b)| a * b).sum();
            out[base + j * stride] = acc;
        }
    });
    out
}

/// Spectral gradient, one component per torus axis.
pub fn spectral_gradient(f: &TorusField) -> Vec<Vec<f64>> {
    (0..f.grid.dim())
        .map(|a| spectral_partial(&f.values, &f.grid.counts, a))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::TAU;

    #[test]
    fn spectral_derivative_is_exact_for_resolved_modes() {
        for &n in &[8usize, 9, 20] {
            let grid = TorusGrid::with_offsets(vec![n, 6], vec![0.125, 0.0]).unwrap();
            let f = TorusField::from_fn(&grid, |x| {
                (TAU * x[0]).sin() * (TAU * x[1]).cos() + 0.2 * (3.0 * TAU * x[0]).cos()
            });
            let g = spectral_gradient(&f);
            for k in 0..grid.len() {
                let x = grid.point(k);
                let d0 = TAU * (TAU * x[0]).cos() * (TAU * x[1]).cos()
                    - 0.6 * TAU * (3.0 * TAU * x[0]).sin();
                let d1 = -TAU * (TAU * x[0]).sin() * (TAU * x[1]).sin();
                assert!((g[0][k] - d0).abs() < 1e-11, "n={n}");
                assert!((g[1][k] - d1).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn aligned_grid_maps_cell_centres() {
        let spec = DomainSpec::new(2, 4.0, 160, vec![8]).unwrap();
        let tg = TorusGrid::aligned_with(&spec).unwrap();
        assert_eq!(tg.counts, vec![20, 8]);
        for flat in [0usize, 7, 8 * 33 + 5, spec.len() - 1] {
            let x = spec.point(flat);
            let y = tg.point(tg.aligned_index(&spec, flat));
            assert!(crate::math::frac(x[0] - y[0] + 1e-9) < 1e-8);
            assert_eq!(x[1], y[1]);
        }
        let bad = DomainSpec::new(2, 4.0, 150, vec![8]).unwrap();
        assert!(TorusGrid::aligned_with(&bad).is_err());
    }
}
