//! Hodge decomposition `b = mean + c + Div F` with `c` irrotational and `F`
//! skew-symmetric, the projections onto the two parts, reduction of the
//! principal part, and the Bessel-potential (inhomogeneous) variant.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{self, MeanPolicy, SpectralKind};
use crate::error::Result;
use crate::fft;
use crate::field::{MatrixField, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Homogeneous,
    Inhomogeneous,
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub flavor: Flavor,
    /// Zero mode removed before inversion (zero for the inhomogeneous flavor,
    /// where the Bessel symbol keeps constants inside `c`).
    pub mean_part: Vec<Complex64>,
    /// Irrotational part.
    pub c: VectorField,
    /// Skew-symmetric stream matrix.
    pub stream: MatrixField,
    /// Potential part of `q` (zero unless a scalar potential was supplied).
    pub h: VectorField,
    /// Bessel remainder of `q`; zero in the homogeneous flavor.
    pub gamma: ScalarField,
    /// `max |b - mean - c - Div F|`, and for the inhomogeneous flavor also
    /// `max |q - div h - gamma|`.
    pub residual: f64,
}

fn neg(f: &ScalarField) -> ScalarField {
    f.scale(Complex64::new(-1.0, 0.0))
}

fn spectral_vec(kind: SpectralKind, v: &VectorField) -> VectorField {
    v.try_map_components(|c| calculus::spectral(kind, c, MeanPolicy::Annihilate)).expect("infallible")
}

fn spectral_mat(kind: SpectralKind, m: &MatrixField) -> MatrixField {
    let entries = m
        .entries()
        .iter()
        .map(|e| calculus::spectral(kind, e, MeanPolicy::Annihilate).expect("infallible"))
        .collect();
    MatrixField::new(entries, false).expect("same shape")
}

/// `P b = grad(lap^-1 div b~)`.
fn gradient_part(b_tilde: &VectorField) -> VectorField {
    let div = calculus::div(b_tilde);
    let f = calculus::spectral(SpectralKind::InvLaplacian, &div, MeanPolicy::Annihilate).expect("infallible");
    calculus::grad(&f)
}

/// `F = lap^-1 curl b~`, antisymmetrized.
fn stream_matrix(b_tilde: &VectorField) -> MatrixField {
    spectral_mat(SpectralKind::InvLaplacian, &calculus::curl(b_tilde)).skew_part()
}

pub fn hodge_decompose(b: &VectorField) -> Result<DecompositionResult> {
    b.check_finite()?;
    let grid = *b.grid();
    let mean_part = b.mean();
    let b_tilde = b.sub_mean();
    let c = gradient_part(&b_tilde);
    let stream = stream_matrix(&b_tilde);
    let recon = c.add(&calculus::matrix_div(&stream))?;
    let residual = b_tilde.sub(&recon)?.max_abs();
    Ok(DecompositionResult {
        flavor: Flavor::Homogeneous,
        mean_part,
        c,
        stream,
        h: VectorField::zeros(grid),
        gamma: ScalarField::zeros(grid),
        residual,
    })
}

/// `grad(lap^-1 (q - mean q))`, the homogeneous potential part of `q`.
pub fn potential_part(q: &ScalarField) -> Result<VectorField> {
    q.check_finite()?;
    let g = calculus::spectral(SpectralKind::InvLaplacian, q, MeanPolicy::Annihilate)?;
    Ok(calculus::grad(&g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Projection {
    P,
    Q,
}

/// `P b = grad(lap^-1 div b~)`, `Q b = Div(lap^-1 curl b~)`, `b~ = b - mean(b)`.
pub fn project(which: Projection, b: &VectorField) -> Result<VectorField> {
    b.check_finite()?;
    let grid = *b.grid();
    let d = b.dim();
    let mut hat: Vec<Vec<Complex64>> = b.components().iter().map(|c| c.values().to_vec()).collect();
    for h in hat.iter_mut() {
        fft::forward(&grid, h);
    }
    let k = grid.wavenumbers();
    // Per mode: P = k (k.b) / |k|^2, Q_i = sum_j k_j (k_j b_i - k_i b_j) / |k|^2.
    let modes: Vec<[Complex64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let m = grid.multi(idx);
            let mut kappa = [0.0; 3];
            for a in 0..d {
                kappa[a] = k[m[a]];
            }
            let ksq: f64 = kappa.iter().map(|x| x * x).sum();
            let mut out = [Complex64::default(); 3];
            if ksq == 0.0 {
                return out;
            }
            for i in 0..d {
                let mut acc = Complex64::default();
                for j in 0..d {
                    acc += match which {
                        Projection::P => hat[j][idx] * (kappa[i] * kappa[j]),
                        Projection::Q => (hat[i][idx] * kappa[j] - hat[j][idx] * kappa[i]) * kappa[j],
                    };
                }
                out[i] = acc / ksq;
            }
            out
        })
        .collect();
    let comps = (0..d)
        .map(|i| {
            let mut v: Vec<Complex64> = modes.iter().map(|m| m[i]).collect();
            fft::inverse(&grid, &mut v);
            ScalarField::new(grid, v)
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(comps)
}

#[derive(Debug, Clone)]
pub struct PrincipalReduction {
    /// `(A + A^t) / 2`.
    pub symmetric: MatrixField,
    /// `b - Div((A - A^t) / 2)`.
    pub b1: VectorField,
    /// Largest pointwise operator norm of the symmetric part.
    pub s_inf: f64,
}

/// Pointwise sup of the spectral norm `|M(x)|_{op}`.
pub fn pointwise_operator_norm(m: &MatrixField) -> f64 {
    let d = m.dim();
    (0..m.grid().len())
        .into_par_iter()
        .map(|x| {
            let mat = DMatrix::from_fn(d, d, |i, j| m.entry(i, j).values()[x]);
            mat.singular_values().iter().fold(0.0f64, |a, &s| a.max(s))
        })
        .reduce(|| 0.0, f64::max)
}

pub fn reduce_principal(a: &MatrixField, b: &VectorField) -> Result<PrincipalReduction> {
    a.grid().ensure_same(b.grid())?;
    a.check_finite()?;
    b.check_finite()?;
    let symmetric = a.symmetric_part();
    let skew = a.skew_part();
    let b1 = b.sub(&calculus::matrix_div(&skew))?;
    let s_inf = pointwise_operator_norm(&symmetric);
    Ok(PrincipalReduction { symmetric, b1, s_inf })
}

/// Decomposition with the Bessel symbol `(1 - lap)^-1`, which also splits
/// `q = div h + gamma`; constants stay inside `c` and `gamma`.
pub fn inhomogeneous_decompose(b: &VectorField, q: &ScalarField) -> Result<DecompositionResult> {
    b.grid().ensure_same(q.grid())?;
    b.check_finite()?;
    q.check_finite()?;
    let grid = *b.grid();
    let bessel = SpectralKind::BesselInv;

    let div_b = calculus::div(b);
    let pot = calculus::spectral(bessel, &div_b, MeanPolicy::Annihilate)?;
    let c = spectral_vec(bessel, b).sub(&calculus::grad(&pot))?;

    let stream = spectral_mat(bessel, &calculus::curl(b)).scale(Complex64::new(-1.0, 0.0)).skew_part();

    let gamma = calculus::spectral(bessel, q, MeanPolicy::Annihilate)?;
    let h = calculus::grad(&neg(&gamma));

    let rb = b.sub(&c.add(&calculus::matrix_div(&stream))?)?.max_abs();
    let rq = q.sub(&calculus::div(&h).add(&gamma)?)?.max_abs();
    Ok(DecompositionResult {
        flavor: Flavor::Inhomogeneous,
        mean_part: vec![Complex64::default(); grid.dim()],
        c,
        stream,
        h,
        gamma,
        residual: rb.max(rq),
    })
}
