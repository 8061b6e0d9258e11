//! Periodic 3-torus grid, field storage, fourth-order finite differences and
//! metric-weighted integration.

use serde::{Deserialize, Serialize};

use crate::error::{BrError, Result};
use crate::point::{FieldValue, Sym3, Vec3};

/// Smallest admissible points-per-axis: the five-point stencil must not alias.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    period: [f64; 3],
}

impl GridSpec {
    pub fn new(n: usize, period: [f64; 3]) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(BrError::InvalidGrid(format!(
                "need at least {MIN_POINTS} points per axis, got {n}"
            )));
        }
        if period.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(BrError::InvalidGrid(format!(
                "periods must be positive and finite, got {period:?}"
            )));
        }
        Ok(GridSpec { n, period })
    }

    /// `n` points per axis on the unit-period torus.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, [1.0; 3])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> [f64; 3] {
        self.period
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.period[axis] / self.n as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..3).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing(0) * self.spacing(1) * self.spacing(2)
    }

    pub fn coordinate_volume(&self) -> f64 {
        self.period[0] * self.period[1] * self.period[2]
    }

    /// Linear index with axis 0 fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        [idx % self.n, (idx / self.n) % self.n, idx / (self.n * self.n)]
    }

    pub fn coordinates(&self, idx: usize) -> [f64; 3] {
        let ijk = self.unravel(idx);
        std::array::from_fn(|a| ijk[a] as f64 * self.spacing(a))
    }

    /// Same grid with the axes permuted: new axis `a` is old axis `perm[a]`.
    pub fn permuted(&self, perm: [usize; 3]) -> GridSpec {
        GridSpec {
            n: self.n,
            period: std::array::from_fn(|a| self.period[perm[a]]),
        }
    }
}

/// Values of type `T` at every point of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: GridSpec,
    values: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type VectorField = Field<Vec3>;
pub type SymTensorField = Field<Sym3>;

impl<T: FieldValue> Field<T> {
    pub fn from_values(grid: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(BrError::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(BrError::InvalidState(format!("non-finite value at grid point {idx}")));
        }
        Ok(Field { grid, values })
    }

    /// Unchecked constructor for internal kernels whose output length is known.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn constant(grid: GridSpec, value: T) -> Self {
        Field { grid, values: vec![value; grid.len()] }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, T::default())
    }

    /// Samples `f` at the grid coordinates.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut([f64; 3]) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coordinates(i))).collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn at(&self, idx: usize) -> T {
        self.values[idx]
    }

    pub fn map<U: FieldValue>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn map_indexed<U: FieldValue>(&self, f: impl Fn(usize, T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            values: self.values.iter().enumerate().map(|(i, &v)| f(i, v)).collect(),
        }
    }

    pub fn zip_map<U: FieldValue, V: FieldValue>(&self, other: &Field<U>, f: impl Fn(T, U) -> V) -> Field<V> {
        debug_assert_eq!(self.grid, other.grid);
        Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Field<T>) -> Field<T> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field<T>) -> Field<T> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Field<T> {
        self.map(|a| a * s)
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Field<T>) -> Field<T> {
        self.zip_map(other, |a, b| a + b * s)
    }

    /// Largest absolute component anywhere on the grid.
    pub fn max_abs_component(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| {
            (0..T::COMPONENTS).fold(m, |m, c| m.max(v.component(c).abs()))
        })
    }

    /// Root-mean-square over points and components.
    pub fn rms(&self) -> f64 {
        let sum: f64 = self
            .values
            .iter()
            .map(|v| (0..T::COMPONENTS).map(|c| v.component(c).powi(2)).sum::<f64>())
            .sum();
        (sum / (self.values.len() * T::COMPONENTS) as f64).sqrt()
    }

    /// Relabels axes so that new axis `a` is old axis `perm[a]`. Only moves points;
    /// tensor components are not touched.
    pub fn permute_points(&self, perm: [usize; 3]) -> Field<T> {
        let grid = self.grid.permuted(perm);
        let values = (0..grid.len())
            .map(|new_idx| {
                let new = grid.unravel(new_idx);
                let mut old = [0; 3];
                for a in 0..3 {
                    old[perm[a]] = new[a];
                }
                self.values[self.grid.index(old[0], old[1], old[2])]
            })
            .collect();
        Field { grid, values }
    }
}

pub fn check_same_grid<A, B>(a: &Field<A>, b: &Field<B>) -> Result<()> {
    if a.grid != b.grid {
        return Err(BrError::GridMismatch);
    }
    Ok(())
}

/// Fourth-order centered periodic derivative of any field along `axis` (0, 1, 2).
pub fn partial_derivative<T: FieldValue>(f: &Field<T>, axis: usize) -> Field<T> {
    assert!(axis < 3, "axis must be 0, 1 or 2");
    let grid = f.grid;
    let n = grid.n;
    let h = grid.spacing(axis);
    let c1 = 8.0 / (12.0 * h);
    let c2 = 1.0 / (12.0 * h);
    let stride = match axis {
        0 => 1,
        1 => n,
        _ => n * n,
    };
    let vals = &f.values;
    // Wrapped neighbour positions along the axis: +1, +2, −1, −2.
    let nb: Vec<[usize; 4]> = (0..n)
        .map(|q| [(q + 1) % n, (q + 2) % n, (q + n - 1) % n, (q + n - 2) % n])
        .collect();
    let mut out = vec![T::default(); grid.len()];
    if stride == 1 {
        for (line, line_out) in vals.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            for (q, o) in line_out.iter_mut().enumerate() {
                let [p1, p2, m1, m2] = nb[q];
                *o = (line[p1] - line[m1]) * c1 - (line[p2] - line[m2]) * c2;
            }
        }
    } else {
        // Each block holds `n` contiguous rows of length `stride` stacked along the axis.
        for (block, block_out) in vals.chunks_exact(n * stride).zip(out.chunks_exact_mut(n * stride)) {
            for (q, row_out) in block_out.chunks_exact_mut(stride).enumerate() {
                let [p1, p2, m1, m2] = nb[q];
                let row = |r: usize| &block[r * stride..(r + 1) * stride];
                let (a, b, c, d) = (row(p1), row(p2), row(m1), row(m2));
                for (i, o) in row_out.iter_mut().enumerate() {
                    *o = (a[i] - c[i]) * c1 - (b[i] - d[i]) * c2;
                }
            }
        }
    }
    Field { grid, values: out }
}

/// All three partial derivatives.
pub fn gradient_components<T: FieldValue>(f: &Field<T>) -> [Field<T>; 3] {
    [partial_derivative(f, 0), partial_derivative(f, 1), partial_derivative(f, 2)]
}

/// Pointwise inverse metric and volume density, validated once.
#[derive(Debug, Clone)]
pub struct MetricData {
    pub inverse: SymTensorField,
    pub sqrt_det: ScalarField,
}

impl MetricData {
    pub fn new(g: &SymTensorField) -> Result<Self> {
        let mut inverse = Vec::with_capacity(g.values.len());
        let mut sqrt_det = Vec::with_capacity(g.values.len());
        for (index, m) in g.values.iter().enumerate() {
            let det = m.det();
            if !(det > 0.0) || !m.is_positive_definite() {
                return Err(BrError::NonPositiveMetric { index, det });
            }
            inverse.push(m.inverse_with_det(det));
            sqrt_det.push(det.sqrt());
        }
        Ok(MetricData {
            inverse: Field { grid: g.grid, values: inverse },
            sqrt_det: Field { grid: g.grid, values: sqrt_det },
        })
    }
}

/// Riemann sum of `f * sqrt(det g)` over the torus.
pub fn integrate(f: &ScalarField, g: &SymTensorField) -> Result<f64> {
    check_same_grid(f, g)?;
    let md = MetricData::new(g)?;
    Ok(integrate_with(f, &md))
}

pub fn integrate_with(f: &ScalarField, md: &MetricData) -> f64 {
    let sum: f64 = f.values.iter().zip(&md.sqrt_det.values).map(|(a, w)| a * w).sum();
    sum * f.grid.cell_volume()
}

/// Pointwise norm of a field value relative to an inverse metric.
pub trait MetricNorm: FieldValue {
    fn norm_sq_with(&self, ginv: &Sym3) -> f64;
}

impl MetricNorm for f64 {
    fn norm_sq_with(&self, _ginv: &Sym3) -> f64 {
        self * self
    }
}

impl MetricNorm for Vec3 {
    /// Covector norm `g^{ab} v_a v_b`.
    fn norm_sq_with(&self, ginv: &Sym3) -> f64 {
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += ginv.get(a, b) * self[a] * self[b];
            }
        }
        s
    }
}

impl MetricNorm for Sym3 {
    /// `g^{ac} g^{bd} A_ab A_cd`
    fn norm_sq_with(&self, ginv: &Sym3) -> f64 {
        let up = crate::tensor::raise_both(self, ginv);
        up.contract_flat(self)
    }
}

/// Maximum over the grid of the pointwise g-norm.
pub fn sup_norm<T: MetricNorm>(f: &Field<T>, g: &SymTensorField) -> Result<f64> {
    check_same_grid(f, g)?;
    let md = MetricData::new(g)?;
    Ok(sup_norm_with(f, &md))
}

pub fn sup_norm_with<T: MetricNorm>(f: &Field<T>, md: &MetricData) -> f64 {
    f.values
        .iter()
        .zip(&md.inverse.values)
        .fold(0.0_f64, |m, (v, gi)| m.max(v.norm_sq_with(gi).max(0.0).sqrt()))
}
