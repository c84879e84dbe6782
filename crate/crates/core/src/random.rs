//! Seeded random fields. Everything here is a pure function of the seed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fft;
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real field with independent uniform samples in `[-1, 1)`.
pub fn white_noise(grid: Grid, seed: u64) -> ScalarField {
    let mut r = rng(seed);
    let vals = (0..grid.len()).map(|_| Complex64::new(r.random_range(-1.0..1.0), 0.0)).collect();
    ScalarField::new(grid, vals).expect("sized")
}

/// Real trigonometric polynomial with integer frequencies `1 <= |k|_inf <= band`,
/// random Gaussian-ish coefficients, zero mean, normalized to unit max.
pub fn band_limited(grid: Grid, seed: u64, band: usize) -> ScalarField {
    let mut r = rng(seed);
    let n = grid.points_per_axis();
    let band = band.min(n / 2 - 1).max(1) as isize;
    let mut spec = vec![Complex64::default(); grid.len()];
    for (flat, s) in spec.iter_mut().enumerate() {
        let idx = grid.multi(flat);
        let kmax = (0..grid.dim()).map(|a| grid.signed_frequency(idx[a]).abs()).max().unwrap_or(0);
        // draw for every bin so the stream does not depend on the band
        let (a, b): (f64, f64) = (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        if kmax >= 1 && kmax <= band {
            *s = Complex64::new(a, b);
        }
    }
    fft::inverse(&grid, &mut spec);
    let vals: Vec<Complex64> = spec.iter().map(|v| Complex64::new(v.re, 0.0)).collect();
    let f = ScalarField::new(grid, vals).expect("sized").sub_mean();
    let m = f.max_abs();
    if m > 0.0 {
        f.scale(Complex64::new(1.0 / m, 0.0))
    } else {
        f
    }
}

pub fn band_limited_vector(grid: Grid, seed: u64, band: usize) -> VectorField {
    let comps = (0..grid.dim())
        .map(|a| band_limited(grid, seed.wrapping_mul(31).wrapping_add(a as u64 + 1), band))
        .collect();
    VectorField::new(comps).expect("dim components")
}

pub fn white_noise_vector(grid: Grid, seed: u64) -> VectorField {
    let comps = (0..grid.dim())
        .map(|a| white_noise(grid, seed.wrapping_mul(31).wrapping_add(a as u64 + 1)))
        .collect();
    VectorField::new(comps).expect("dim components")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_real() {
        let g = Grid::unit(3, 16).unwrap();
        let a = band_limited(g, 7, 3);
        let b = band_limited(g, 7, 3);
        assert_eq!(a, b);
        assert!(a.is_real());
        assert!(a.mean().norm() < 1e-15);
        assert_ne!(a, band_limited(g, 8, 3));
    }
}
