//! Scalar, vector and matrix fields sampled on a periodic [`Grid`].
//!
//! Samples are complex so that spectral operators (and the gauge factor
//! `e^{i lambda}`) never need a separate code path. Real fields simply carry
//! zero imaginary parts.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::ordered_sum;
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::default(); grid.len()] }
    }

    pub fn constant(grid: Grid, c: Complex64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Sample a real function of position.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| Complex64::new(f(grid.position(i)), 0.0))
            .collect();
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        Self { grid: self.grid, values: self.values.par_iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<F>(&self, other: &Self, f: F) -> Result<Self>
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Sync,
    {
        self.grid.ensure_same(&other.grid)?;
        let values =
            self.values.par_iter().zip(other.values.par_iter()).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        self.map(|v| v * alpha)
    }

    pub fn mean(&self) -> Complex64 {
        let re = ordered_sum(&self.values, |v| v.re);
        let im = ordered_sum(&self.values, |v| v.im);
        Complex64::new(re, im) / self.values.len() as f64
    }

    pub fn sub_mean(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.par_iter().map(|v| v.norm()).reduce(|| 0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.par_iter().map(|v| v.im.abs()).reduce(|| 0.0, f64::max)
    }

    /// True when imaginary parts vanish to `1e-12` of the largest magnitude.
    pub fn is_real(&self) -> bool {
        self.max_imag() <= 1e-12 * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Riemann sum `sum f(x) h^dim`.
    pub fn integral(&self) -> Complex64 {
        self.mean() * self.grid.volume()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            Some(i) => Err(Error::NonFinite(i)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let grid = *components.first().ok_or(Error::Empty("vector components"))?.grid();
        if components.len() != grid.dim() {
            return Err(Error::InvalidParameter(format!(
                "vector field needs {} components, got {}",
                grid.dim(),
                components.len()
            )));
        }
        for c in &components {
            grid.ensure_same(c.grid())?;
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect() }
    }

    /// Sample a real vector-valued function; `f` returns all three slots,
    /// trailing ones are ignored in two dimensions.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> [f64; 3] + Sync,
    {
        let samples: Vec<[f64; 3]> = (0..grid.len()).into_par_iter().map(|i| f(grid.position(i))).collect();
        let components = (0..grid.dim())
            .map(|a| {
                let vals = samples.iter().map(|s| Complex64::new(s[a], 0.0)).collect();
                ScalarField { grid, values: vals }
            })
            .collect();
        Self { grid, components }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    #[inline]
    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    #[inline]
    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn map_components<F>(&self, f: F) -> Self
    where
        F: Fn(&ScalarField) -> ScalarField,
    {
        Self { grid: self.grid, components: self.components.iter().map(f).collect() }
    }

    pub fn try_map_components<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&ScalarField) -> Result<ScalarField>,
    {
        let components = self.components.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: self.grid, components })
    }

    pub fn zip_components<F>(&self, other: &Self, f: F) -> Result<Self>
    where
        F: Fn(&ScalarField, &ScalarField) -> Result<ScalarField>,
    {
        self.grid.ensure_same(&other.grid)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: self.grid, components })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_components(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_components(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        self.map_components(|c| c.scale(alpha))
    }

    pub fn mean(&self) -> Vec<Complex64> {
        self.components.iter().map(|c| c.mean()).collect()
    }

    pub fn sub_mean(&self) -> Self {
        self.map_components(|c| c.sub_mean())
    }

    /// Pointwise `|v(x)|^2` as a real scalar field.
    pub fn magnitude_sq(&self) -> ScalarField {
        let values = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let s: f64 = self.components.iter().map(|c| c.values[i].norm_sqr()).sum();
                Complex64::new(s, 0.0)
            })
            .collect();
        ScalarField { grid: self.grid, values }
    }

    /// Pointwise `sum_i self_i * other_i` (no conjugation).
    pub fn dot(&self, other: &Self) -> Result<ScalarField> {
        self.grid.ensure_same(&other.grid)?;
        let values = (0..self.grid.len())
            .into_par_iter()
            .map(|i| self.components.iter().zip(&other.components).map(|(a, b)| a.values[i] * b.values[i]).sum())
            .collect();
        Ok(ScalarField { grid: self.grid, values })
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, s: &ScalarField) -> Result<Self> {
        self.try_map_components(|c| c.mul(s))
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_abs(&self) -> f64 {
        self.magnitude_sq().values.par_iter().map(|v| v.re).reduce(|| 0.0, f64::max).sqrt()
    }

    pub fn check_finite(&self) -> Result<()> {
        self.components.iter().try_for_each(|c| c.check_finite())
    }
}

/// `dim x dim` field of matrices, entries stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    grid: Grid,
    entries: Vec<ScalarField>,
    skew_symmetric: bool,
}

impl MatrixField {
    pub const SKEW_TOL: f64 = 1e-12;

    /// Build from row-major entries. If `skew_symmetric` is set the entries
    /// are validated against the skew invariant.
    pub fn new(entries: Vec<ScalarField>, skew_symmetric: bool) -> Result<Self> {
        let grid = *entries.first().ok_or(Error::Empty("matrix entries"))?.grid();
        let d = grid.dim();
        if entries.len() != d * d {
            return Err(Error::InvalidParameter(format!(
                "matrix field needs {} entries, got {}",
                d * d,
                entries.len()
            )));
        }
        for e in &entries {
            grid.ensure_same(e.grid())?;
        }
        let m = Self { grid, entries, skew_symmetric: false };
        if skew_symmetric {
            let defect = m.skew_defect();
            let scale = m.max_abs().max(f64::MIN_POSITIVE);
            if defect > Self::SKEW_TOL * scale {
                return Err(Error::InvalidParameter(format!(
                    "matrix field flagged skew-symmetric has defect {defect:e}"
                )));
            }
        }
        Ok(Self { skew_symmetric, ..m })
    }

    pub fn zeros(grid: Grid) -> Self {
        let d = grid.dim();
        Self { grid, entries: (0..d * d).map(|_| ScalarField::zeros(grid)).collect(), skew_symmetric: true }
    }

    pub fn identity(grid: Grid) -> Self {
        let d = grid.dim();
        let entries = (0..d * d)
            .map(|k| {
                let v = if k / d == k % d { 1.0 } else { 0.0 };
                ScalarField::constant(grid, Complex64::new(v, 0.0))
            })
            .collect();
        Self { grid, entries, skew_symmetric: false }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[i * self.dim() + j]
    }

    #[inline]
    pub fn entries(&self) -> &[ScalarField] {
        &self.entries
    }

    #[inline]
    pub fn is_skew_symmetric(&self) -> bool {
        self.skew_symmetric
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim();
        let entries = (0..d * d).map(|k| self.entries[(k % d) * d + k / d].clone()).collect();
        Self { grid: self.grid, entries, skew_symmetric: self.skew_symmetric }
    }

    fn combine(&self, other: &Self, alpha: f64, beta: f64) -> Result<Vec<ScalarField>> {
        self.grid.ensure_same(&other.grid)?;
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.zip_map(b, |x, y| x * alpha + y * beta))
            .collect()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let skew = self.skew_symmetric && other.skew_symmetric;
        Ok(Self { grid: self.grid, entries: self.combine(other, 1.0, 1.0)?, skew_symmetric: skew })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let skew = self.skew_symmetric && other.skew_symmetric;
        Ok(Self { grid: self.grid, entries: self.combine(other, 1.0, -1.0)?, skew_symmetric: skew })
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self {
            grid: self.grid,
            entries: self.entries.iter().map(|e| e.scale(alpha)).collect(),
            skew_symmetric: self.skew_symmetric,
        }
    }

    /// `(A + A^t) / 2`.
    pub fn symmetric_part(&self) -> Self {
        let t = self.transpose();
        let entries = self.combine(&t, 0.5, 0.5).expect("same grid");
        Self { grid: self.grid, entries, skew_symmetric: false }
    }

    /// `(A - A^t) / 2`, flagged skew-symmetric; the diagonal is exactly zero.
    pub fn skew_part(&self) -> Self {
        let d = self.dim();
        let t = self.transpose();
        let mut entries = self.combine(&t, 0.5, -0.5).expect("same grid");
        for i in 0..d {
            entries[i * d + i] = ScalarField::zeros(self.grid);
        }
        // exact antisymmetry: copy the upper triangle negated into the lower one
        for i in 0..d {
            for j in 0..i {
                entries[i * d + j] = entries[j * d + i].scale(Complex64::new(-1.0, 0.0));
            }
        }
        Self { grid: self.grid, entries, skew_symmetric: true }
    }

    /// Largest entry magnitude over all entries and points.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    /// `max |a_ij + a_ji|` over all index pairs including the diagonal.
    pub fn skew_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                let s = self.entry(i, j).add(self.entry(j, i)).expect("same grid");
                worst = worst.max(s.max_abs());
            }
        }
        worst
    }

    pub fn check_finite(&self) -> Result<()> {
        self.entries.iter().try_for_each(|c| c.check_finite())
    }
}

/// A field of any rank; used by the rank-dispatching operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Scalar(ScalarField),
    Vector(VectorField),
    Matrix(MatrixField),
}

impl Field {
    pub fn rank_name(&self) -> &'static str {
        match self {
            Field::Scalar(_) => "scalar",
            Field::Vector(_) => "vector",
            Field::Matrix(_) => "matrix",
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            Field::Scalar(s) => s.grid(),
            Field::Vector(v) => v.grid(),
            Field::Matrix(m) => m.grid(),
        }
    }

    /// All scalar components, row-major for matrices.
    pub fn scalar_components(&self) -> Vec<&ScalarField> {
        match self {
            Field::Scalar(s) => vec![s],
            Field::Vector(v) => v.components().iter().collect(),
            Field::Matrix(m) => m.entries().iter().collect(),
        }
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        match self {
            Field::Scalar(s) => Ok(s),
            other => Err(Error::RankMismatch { expected: "scalar", found: other.rank_name() }),
        }
    }

    pub fn into_vector(self) -> Result<VectorField> {
        match self {
            Field::Vector(v) => Ok(v),
            other => Err(Error::RankMismatch { expected: "vector", found: other.rank_name() }),
        }
    }

    pub fn into_matrix(self) -> Result<MatrixField> {
        match self {
            Field::Matrix(m) => Ok(m),
            other => Err(Error::RankMismatch { expected: "matrix", found: other.rank_name() }),
        }
    }
}

impl From<ScalarField> for Field {
    fn from(s: ScalarField) -> Self {
        Field::Scalar(s)
    }
}

impl From<VectorField> for Field {
    fn from(v: VectorField) -> Self {
        Field::Vector(v)
    }
}

impl From<MatrixField> for Field {
    fn from(m: MatrixField) -> Self {
        Field::Matrix(m)
    }
}
