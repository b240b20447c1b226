//! Discretised cylinder `[-L, L] × T^{n-1}`: grid geometry, field storage,
//! finite-difference derivatives and `L^p` quadrature.
//!
//! Values are stored row-major with `x₁` as the slowest axis. Cells in `x₁`
//! are cell-centred on `(-L, L)`; torus directions have period one with nodes
//! at `j / N`. All reductions use pairwise summation so results do not depend
//! on how callers schedule work.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, abs_pow, pairwise_sum, pairwise_sum_by};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    /// Spatial dimension `n` (1 for bare `x₁` profiles).
    pub dim: usize,
    /// Half-length `L` of the `x₁` truncation.
    pub half_length: f64,
    /// Number of cells along `x₁`.
    pub n1: usize,
    /// Cell counts for the torus directions `x₂..x_n`.
    pub n_torus: Vec<usize>,
}

impl DomainSpec {
    pub fn new(dim: usize, half_length: f64, n1: usize, n_torus: Vec<usize>) -> Result<Self> {
        let spec = DomainSpec {
            dim,
            half_length,
            n1,
            n_torus,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// 1-d axis `[-L, L]` with `n1` cells.
    pub fn line(half_length: f64, n1: usize) -> Result<Self> {
        Self::new(1, half_length, n1, Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::InvalidDomain(format!(
                "dimension must be in 1..={MAX_DIM}, got {}",
                self.dim
            )));
        }
        if !(self.half_length > 0.0) || !self.half_length.is_finite() {
            return Err(Error::InvalidDomain(format!(
                "half-length L must be positive, got {}",
                self.half_length
            )));
        }
        if self.n1 < 4 {
            return Err(Error::InvalidDomain(format!(
                "n1 must be >= 4, got {}",
                self.n1
            )));
        }
        if self.n_torus.len() != self.dim - 1 {
            return Err(Error::InvalidDomain(format!(
                "expected {} torus cell counts, got {}",
                self.dim - 1,
                self.n_torus.len()
            )));
        }
        if let Some(bad) = self.n_torus.iter().find(|&&c| c < 4) {
            return Err(Error::InvalidDomain(format!(
                "torus cell counts must be >= 4, got {bad}"
            )));
        }
        Ok(())
    }

    pub fn dx1(&self) -> f64 {
        2.0 * self.half_length / self.n1 as f64
    }

    /// Spacing along axis `axis` (0 = `x₁`).
    pub fn spacing(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.dx1()
        } else {
            1.0 / self.n_torus[axis - 1] as f64
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.dim);
        s.push(self.n1);
        s.extend_from_slice(&self.n_torus);
        s
    }

    /// Points per `x₁` column (product of torus counts).
    pub fn transverse_len(&self) -> usize {
        self.n_torus.iter().product()
    }

    pub fn len(&self) -> usize {
        self.n1 * self.transverse_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    pub fn x1(&self, i: usize) -> f64 {
        -self.half_length + (i as f64 + 0.5) * self.dx1()
    }

    pub fn torus_coord(&self, axis: usize, j: usize) -> f64 {
        j as f64 * self.spacing(axis)
    }

    /// Coordinates of the point with flat index `flat`.
    pub fn point(&self, flat: usize) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        let mut rest = flat;
        for axis in (1..self.dim).rev() {
            let n = self.n_torus[axis - 1];
            x[axis] = self.torus_coord(axis, rest % n);
            rest /= n;
        }
        x[0] = self.x1(rest);
        x
    }

    /// `x₁` cell index of a flat index.
    pub fn row_of(&self, flat: usize) -> usize {
        flat / self.transverse_len()
    }

    /// Same torus, `x₁` axis replaced.
    pub fn with_x1(&self, half_length: f64, n1: usize) -> Result<Self> {
        Self::new(self.dim, half_length, n1, self.n_torus.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x1: Vec<f64>,
    pub torus: Vec<Vec<f64>>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.x1.len() * self.torus.iter().map(Vec::len).product::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn make_grid(spec: &DomainSpec) -> Result<Grid> {
    spec.validate()?;
    let x1 = (0..spec.n1).map(|i| spec.x1(i)).collect();
    let torus = (1..spec.dim)
        .map(|axis| {
            (0..spec.n_torus[axis - 1])
                .map(|j| spec.torus_coord(axis, j))
                .collect()
        })
        .collect();
    Ok(Grid { x1, torus })
}

/// Scalar samples on a [`DomainSpec`] grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    spec: DomainSpec,
    values: Vec<f64>,
    t: f64,
}

impl Field {
    pub fn new(spec: DomainSpec, values: Vec<f64>, t: f64) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid has {} points",
                values.len(),
                spec.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        Ok(Field { spec, values, t })
    }

    pub fn from_fn(spec: &DomainSpec, t: f64, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        spec.validate()?;
        let values = (0..spec.len())
            .map(|k| f(&spec.point(k)[..spec.dim]))
            .collect();
        Field::new(spec.clone(), values, t)
    }

    pub fn constant(spec: &DomainSpec, c: f64, t: f64) -> Result<Self> {
        Field::new(spec.clone(), vec![c; spec.len()], t)
    }

    pub fn zeros_like(&self) -> Self {
        Field {
            spec: self.spec.clone(),
            values: vec![0.0; self.values.len()],
            t: self.t,
        }
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            spec: self.spec.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
            t: self.t,
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.spec != other.spec {
            return Err(Error::InvalidArgument(
                "fields live on different grids".into(),
            ));
        }
        Ok(Field {
            spec: self.spec.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
            t: self.t,
        })
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn max_abs(&self) -> f64 {
        math::max_abs(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Quadrature of `|v|^p` over cells of volume `cell_volume`, then the `p`-th root.
/// `p = ∞` returns the maximum modulus.
pub fn lp_norm_values(values: &[f64], cell_volume: f64, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "L^p exponent must be >= 1, got {p}"
        )));
    }
    if p == f64::INFINITY {
        return Ok(math::max_abs(values));
    }
    let integral = cell_volume * pairwise_sum_by(values, &|v| abs_pow(v, p));
    Ok(if p == 1.0 {
        integral
    } else if p == 2.0 {
        math::sqrt(integral)
    } else {
        math::powf(integral, 1.0 / p)
    })
}

pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    lp_norm_values(&f.values, f.spec.cell_volume(), p)
}

/// `L^p` norm of the pointwise Euclidean magnitude of a vector field.
pub fn vector_lp_norm(components: &[Field], p: f64) -> Result<f64> {
    let first = components
        .first()
        .ok_or(Error::InvalidArgument("empty vector field".into()))?;
    let n = first.values.len();
    let mags: Vec<f64> = (0..n)
        .map(|k| {
            let s: f64 = components.iter().map(|c| c.values[k] * c.values[k]).sum();
            math::sqrt(s)
        })
        .collect();
    lp_norm_values(&mags, first.spec.cell_volume(), p)
}

/// Invoke `f(base, stride, len)` for every grid line along `axis`.
pub(crate) fn for_each_line(shape: &[usize], axis: usize, mut f: impl FnMut(usize, usize, usize)) {
    let len = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    for o in 0..outer {
        for inner in 0..stride {
            f(o * len * stride + inner, stride, len);
        }
    }
}

/// Derivative along one axis of a row-major array. Periodic axes use central
/// differences with wrap-around; a non-periodic axis uses second-order
/// one-sided differences at its ends.
pub(crate) fn diff_axis(
    values: &[f64],
    shape: &[usize],
    axis: usize,
    h: f64,
    periodic: bool,
) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    let inv = 0.5 / h;
    for_each_line(shape, axis, |base, stride, n| {
        let at = |k: usize| values[base + k * stride];
        for k in 0..n {
            let d = if periodic {
                at((k + 1) % n) - at((k + n - 1) % n)
            } else if k == 0 {
                -3.0 * at(0) + 4.0 * at(1) - at(2)
            } else if k == n - 1 {
                3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)
            } else {
                at(k + 1) - at(k - 1)
            };
            out[base + k * stride] = d * inv;
        }
    });
    out
}

/// Second-order finite-difference gradient, one component per axis.
pub fn gradient(f: &Field) -> Vec<Field> {
    let shape = f.spec.shape();
    (0..f.spec.dim)
        .map(|axis| Field {
            spec: f.spec.clone(),
            values: diff_axis(&f.values, &shape, axis, f.spec.spacing(axis), axis > 0),
            t: f.t,
        })
        .collect()
}

/// Partial derivative along axis `axis` (0 = `x₁`).
pub fn partial(f: &Field, axis: usize) -> Field {
    let shape = f.spec.shape();
    Field {
        spec: f.spec.clone(),
        values: diff_axis(&f.values, &shape, axis, f.spec.spacing(axis), axis > 0),
        t: f.t,
    }
}

/// Mean over the listed axes, broadcast back to the full shape.
pub(crate) fn average_axes(values: &[f64], shape: &[usize], axes: &[usize]) -> Vec<f64> {
    if axes.is_empty() {
        return values.to_vec();
    }
    let dim = shape.len();
    let mut strides = vec![1usize; dim];
    for a in (0..dim.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * shape[a + 1];
    }
    let averaged = |a: usize| axes.contains(&a);
    let kept_shape: Vec<usize> = (0..dim)
        .map(|a| if averaged(a) { 1 } else { shape[a] })
        .collect();
    let kept_len: usize = kept_shape.iter().product();
    let group: usize = axes.iter().map(|&a| shape[a]).product();

    // Offsets of one averaging group relative to its base point.
    let mut offsets = Vec::with_capacity(group);
    let mut counter = vec![0usize; axes.len()];
    for _ in 0..group {
        offsets.push(
            counter
                .iter()
                .zip(axes)
                .map(|(c, &a)| c * strides[a])
                .sum::<usize>(),
        );
        for (c, &a) in counter.iter_mut().zip(axes).rev() {
            *c += 1;
            if *c < shape[a] {
                break;
            }
            *c = 0;
        }
    }

    let mut out = vec![0.0; values.len()];
    let mut buf = vec![0.0; group];
    for r in 0..kept_len {
        let mut rest = r;
        let mut base = 0;
        for a in (0..dim).rev() {
            let idx = rest % kept_shape[a];
            rest /= kept_shape[a];
            base += idx * strides[a];
        }
        for (b, off) in buf.iter_mut().zip(&offsets) {
            *b = values[base + off];
        }
        let first = buf[0];
        // Constant groups are returned untouched so averaging is an exact projection.
        let mean = if buf.iter().all(|v| v.to_bits() == first.to_bits()) {
            first
        } else {
            pairwise_sum(&buf) / group as f64
        };
        for off in &offsets {
            out[base + off] = mean;
        }
    }
    out
}

/// Average over the torus directions `dirs` (numbered `2..=n`).
pub fn torus_average(f: &Field, dirs: &[usize]) -> Result<Field> {
    if dirs.is_empty() {
        return Err(Error::InvalidArgument(
            "torus_average needs at least one direction".into(),
        ));
    }
    let mut axes = Vec::with_capacity(dirs.len());
    for &d in dirs {
        if d < 2 || d > f.spec.dim {
            return Err(Error::InvalidArgument(format!(
                "direction x{d} is not a torus direction for n={}",
                f.spec.dim
            )));
        }
        if !axes.contains(&(d - 1)) {
            axes.push(d - 1);
        }
    }
    axes.sort_unstable();
    Ok(Field {
        spec: f.spec.clone(),
        values: average_axes(&f.values, &f.spec.shape(), &axes),
        t: f.t,
    })
}

/// Fraction of `∫|f|` carried by cells with `|x₁| > 0.9 L`. Zero fields give 0.
pub fn tail_mass_fraction(f: &Field) -> f64 {
    let cut = 0.9 * f.spec.half_length;
    let tl = f.spec.transverse_len();
    let total = pairwise_sum_by(&f.values, &math::abs);
    if total == 0.0 {
        return 0.0;
    }
    let tails: Vec<f64> = (0..f.spec.n1)
        .filter(|&i| math::abs(f.spec.x1(i)) > cut)
        .map(|i| pairwise_sum_by(&f.values[i * tl..(i + 1) * tl], &math::abs))
        .collect();
    pairwise_sum(&tails) / total
}
