//! Exact spectral calculus on the torus.
//!
//! Every operator here is a Fourier multiplier: derivatives multiply mode
//! `k` by `i kappa_j` with `kappa = 2 pi k / L`, inverse operators divide by
//! the matching symbol. Curl follows `(curl b)_ij = d_j b_i - d_i b_j`, which
//! makes `b - mean(b) = grad(lap^-1 div b) + Div(lap^-1 curl b)` hold mode
//! by mode.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, ordered_sum};
use crate::field::{Field, MatrixField, ScalarField, VectorField};
use crate::grid::Grid;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffKind {
    Grad,
    Div,
    Curl,
    /// Row divergence of a matrix field, `(Div A)_i = sum_j d_j a_ij`.
    MatrixDiv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralKind {
    /// `lap^-1`, symbol `-1/|kappa|^2`.
    InvLaplacian,
    /// `(-lap)^-1/2`, symbol `1/|kappa|`.
    RieszHalf,
    /// `(1 - lap)^-1`.
    BesselInv,
    /// `(1 - lap)^-1/2`.
    BesselRieszHalf,
}

impl SpectralKind {
    pub fn is_homogeneous(self) -> bool {
        matches!(self, SpectralKind::InvLaplacian | SpectralKind::RieszHalf)
    }

    /// Multiplier at `|kappa|^2 = ksq`; the zero mode of homogeneous kinds is 0.
    #[inline]
    pub fn symbol(self, ksq: f64) -> f64 {
        match self {
            SpectralKind::InvLaplacian => {
                if ksq == 0.0 {
                    0.0
                } else {
                    -1.0 / ksq
                }
            }
            SpectralKind::RieszHalf => {
                if ksq == 0.0 {
                    0.0
                } else {
                    1.0 / ksq.sqrt()
                }
            }
            SpectralKind::BesselInv => 1.0 / (1.0 + ksq),
            SpectralKind::BesselRieszHalf => 1.0 / (1.0 + ksq).sqrt(),
        }
    }
}

/// What to do with the zero mode when a homogeneous inverse is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanPolicy {
    /// Error if the input mean is not negligible.
    Require,
    /// Silently drop the mean.
    Annihilate,
}

/// Relative size of a mean treated as zero by [`MeanPolicy::Require`].
pub const MEAN_TOL: f64 = 1e-12;

fn spectrum(f: &ScalarField) -> Vec<Complex64> {
    let mut d = f.values().to_vec();
    fft::forward(f.grid(), &mut d);
    d
}

fn from_spectrum(grid: Grid, mut d: Vec<Complex64>) -> ScalarField {
    fft::inverse(&grid, &mut d);
    ScalarField::new(grid, d).expect("length preserved")
}

/// Multiply every mode by `symbol(kappa, |kappa|^2)`.
pub fn apply_symbol<S>(f: &ScalarField, symbol: S) -> ScalarField
where
    S: Fn([f64; 3], f64) -> Complex64 + Sync,
{
    let grid = *f.grid();
    let mut d = spectrum(f);
    fft::for_each_mode(&grid, &mut d, |_, kappa, ksq, v| *v *= symbol(kappa, ksq));
    from_spectrum(grid, d)
}

pub fn grad(f: &ScalarField) -> VectorField {
    let grid = *f.grid();
    let s = spectrum(f);
    let comps = (0..grid.dim())
        .map(|a| {
            let mut d = s.clone();
            fft::for_each_mode(&grid, &mut d, |_, kappa, _, v| *v *= I * kappa[a]);
            from_spectrum(grid, d)
        })
        .collect();
    VectorField::new(comps).expect("grad has dim components")
}

pub fn div(v: &VectorField) -> ScalarField {
    let grid = *v.grid();
    let mut acc = vec![Complex64::default(); grid.len()];
    for (a, c) in v.components().iter().enumerate() {
        let mut d = spectrum(c);
        fft::for_each_mode(&grid, &mut d, |_, kappa, _, x| *x *= I * kappa[a]);
        acc.iter_mut().zip(&d).for_each(|(s, x)| *s += x);
    }
    from_spectrum(grid, acc)
}

/// `(curl v)_ij = d_j v_i - d_i v_j`, stored exactly antisymmetric.
pub fn curl(v: &VectorField) -> MatrixField {
    let grid = *v.grid();
    let n = grid.dim();
    let spectra: Vec<Vec<Complex64>> = v.components().iter().map(spectrum).collect();
    let mut entries = vec![ScalarField::zeros(grid); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut d = vec![Complex64::default(); grid.len()];
            let (si, sj) = (&spectra[i], &spectra[j]);
            fft::for_each_mode(&grid, &mut d, |k, kappa, _, x| {
                *x = I * kappa[j] * si[k] - I * kappa[i] * sj[k];
            });
            let e = from_spectrum(grid, d);
            entries[j * n + i] = e.scale(Complex64::new(-1.0, 0.0));
            entries[i * n + j] = e;
        }
    }
    MatrixField::new(entries, true).expect("curl is skew by construction")
}

/// Row divergence `(Div A)_i = sum_j d_j a_ij`.
pub fn matrix_div(m: &MatrixField) -> VectorField {
    let grid = *m.grid();
    let n = grid.dim();
    let comps = (0..n)
        .map(|i| {
            let mut acc = vec![Complex64::default(); grid.len()];
            for j in 0..n {
                let mut d = spectrum(m.entry(i, j));
                fft::for_each_mode(&grid, &mut d, |_, kappa, _, x| *x *= I * kappa[j]);
                acc.iter_mut().zip(&d).for_each(|(s, x)| *s += x);
            }
            from_spectrum(grid, acc)
        })
        .collect();
    VectorField::new(comps).expect("Div has dim components")
}

/// Forward spectral Laplacian, symbol `-|kappa|^2`.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    apply_symbol(f, |_, ksq| Complex64::new(-ksq, 0.0))
}

/// Rank-dispatching derivative.
pub fn apply_diff(kind: DiffKind, field: &Field) -> Result<Field> {
    match (kind, field) {
        (DiffKind::Grad, Field::Scalar(s)) => Ok(grad(s).into()),
        (DiffKind::Div, Field::Vector(v)) => Ok(div(v).into()),
        (DiffKind::Curl, Field::Vector(v)) => Ok(curl(v).into()),
        (DiffKind::MatrixDiv, Field::Matrix(m)) => Ok(matrix_div(m).into()),
        (kind, f) => Err(Error::RankMismatch {
            expected: match kind {
                DiffKind::Grad => "scalar",
                DiffKind::Div | DiffKind::Curl => "vector",
                DiffKind::MatrixDiv => "matrix",
            },
            found: f.rank_name(),
        }),
    }
}

/// Apply an inverse-type multiplier to a scalar field.
pub fn spectral(kind: SpectralKind, f: &ScalarField, policy: MeanPolicy) -> Result<ScalarField> {
    if kind.is_homogeneous() && policy == MeanPolicy::Require {
        let m = f.mean().norm();
        if m > MEAN_TOL * f.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NonzeroMean(m));
        }
    }
    Ok(apply_symbol(f, |_, ksq| Complex64::new(kind.symbol(ksq), 0.0)))
}

/// Rank-dispatching spectral multiplier, applied entrywise.
pub fn apply_spectral(kind: SpectralKind, field: &Field, policy: MeanPolicy) -> Result<Field> {
    match field {
        Field::Scalar(s) => Ok(spectral(kind, s, policy)?.into()),
        Field::Vector(v) => Ok(v.try_map_components(|c| spectral(kind, c, policy))?.into()),
        Field::Matrix(m) => {
            let entries =
                m.entries().iter().map(|e| spectral(kind, e, policy)).collect::<Result<Vec<_>>>()?;
            Ok(MatrixField::new(entries, false)?.into())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReduceKind {
    LpNorm(f64),
    Mean,
    MaxAbs,
    /// `||grad u||_{L^2}`, the homogeneous Sobolev norm.
    DirichletNorm,
    /// `||u||_{L^2} + ||grad u||_{L^2}`.
    SobolevNorm,
}

fn pointwise_magnitude(field: &Field) -> Vec<f64> {
    let comps = field.scalar_components();
    let len = field.grid().len();
    (0..len)
        .map(|i| comps.iter().map(|c| c.values()[i].norm_sqr()).sum::<f64>().sqrt())
        .collect()
}

fn dirichlet_sq(f: &ScalarField) -> f64 {
    let grid = *f.grid();
    let mut d = spectrum(f);
    fft::for_each_mode(&grid, &mut d, |_, _, ksq, v| *v = Complex64::new(v.norm_sqr() * ksq, 0.0));
    let total = ordered_sum(&d, |v| v.re);
    total * grid.cell_volume() / grid.len() as f64
}

/// Riemann-sum reductions with cell weight `h^dim`.
pub fn reduce(kind: ReduceKind, field: &Field) -> Result<f64> {
    let grid = *field.grid();
    match kind {
        ReduceKind::LpNorm(p) => {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::InvalidParameter(format!("p must lie in [1, inf), got {p}")));
            }
            let mag = pointwise_magnitude(field);
            let s = ordered_sum(&mag, |m| m.powf(p));
            Ok((s * grid.cell_volume()).powf(1.0 / p))
        }
        ReduceKind::Mean => match field {
            Field::Scalar(s) => Ok(s.mean().re),
            other => Err(Error::RankMismatch { expected: "scalar", found: other.rank_name() }),
        },
        ReduceKind::MaxAbs => Ok(pointwise_magnitude(field).into_iter().fold(0.0, f64::max)),
        ReduceKind::DirichletNorm => {
            Ok(field.scalar_components().iter().map(|c| dirichlet_sq(c)).sum::<f64>().sqrt())
        }
        ReduceKind::SobolevNorm => {
            Ok(reduce(ReduceKind::LpNorm(2.0), field)? + reduce(ReduceKind::DirichletNorm, field)?)
        }
    }
}

/// `L^2` norm evaluated on the frequency side (Parseval).
pub fn l2_norm_spectral(f: &ScalarField) -> f64 {
    let grid = *f.grid();
    let d = spectrum(f);
    let total = ordered_sum(&d, |v| v.norm_sqr());
    (total * grid.cell_volume() / grid.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit(dim: usize, n: usize) -> Grid {
        Grid::unit(dim, n).unwrap()
    }

    #[test]
    fn grad_of_sine() {
        let g = unit(2, 32);
        let f = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin());
        let gr = grad(&f);
        let expect = ScalarField::from_fn(g, |x| 2.0 * PI * (2.0 * PI * x[0]).cos());
        assert!(gr.component(0).sub(&expect).unwrap().max_abs() < 1e-12);
        assert!(gr.component(1).max_abs() < 1e-12);
    }

    #[test]
    fn inverse_laplacian_and_riesz_of_cosine() {
        let g = unit(3, 16);
        let f = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).cos());
        let u = spectral(SpectralKind::InvLaplacian, &f, MeanPolicy::Require).unwrap();
        assert!(u.sub(&f.scale((-1.0 / (4.0 * PI * PI)).into())).unwrap().max_abs() < 1e-14);
        let r = spectral(SpectralKind::RieszHalf, &f, MeanPolicy::Require).unwrap();
        assert!(r.sub(&f.scale((1.0 / (2.0 * PI)).into())).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn homogeneous_inverse_rejects_mean() {
        let g = unit(2, 16);
        let f = ScalarField::constant(g, Complex64::new(1.0, 0.0));
        assert!(matches!(
            spectral(SpectralKind::InvLaplacian, &f, MeanPolicy::Require),
            Err(Error::NonzeroMean(_))
        ));
        let z = spectral(SpectralKind::InvLaplacian, &f, MeanPolicy::Annihilate).unwrap();
        assert!(z.max_abs() < 1e-15);
        let b = spectral(SpectralKind::BesselInv, &f, MeanPolicy::Require).unwrap();
        assert!(b.sub(&f).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn rank_mismatch_reported() {
        let g = unit(2, 16);
        let f: Field = ScalarField::zeros(g).into();
        assert!(matches!(apply_diff(DiffKind::Div, &f), Err(Error::RankMismatch { .. })));
        assert!(apply_diff(DiffKind::MatrixDiv, &VectorField::zeros(g).into()).is_err());
    }

    #[test]
    fn reductions_closed_forms() {
        let g = unit(2, 32);
        let one: Field = ScalarField::constant(g, 1.0.into()).into();
        assert!((reduce(ReduceKind::LpNorm(2.0), &one).unwrap() - 1.0).abs() < 1e-14);
        assert!(reduce(ReduceKind::DirichletNorm, &one).unwrap() < 1e-14);
        let s: Field = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin()).into();
        let d = reduce(ReduceKind::DirichletNorm, &s).unwrap();
        assert!((d - 2f64.sqrt() * PI).abs() < 1e-12, "{d}");
        assert!(reduce(ReduceKind::LpNorm(0.5), &s).is_err());
    }
}
