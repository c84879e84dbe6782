use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on the flat torus `[0, L)^dim`.
///
/// Samples sit at `i * h` along each axis and are stored in C order (last
/// axis fastest). `points_per_axis` is a power of two so that every dyadic
/// cube is a union of cells; this also makes `h * n == L` exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    period: f64,
}

impl Grid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(dim: usize, points_per_axis: usize, period: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if !points_per_axis.is_power_of_two() || points_per_axis < Self::MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "points_per_axis must be a power of two >= {}, got {points_per_axis}",
                Self::MIN_POINTS
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        Ok(Self { dim, n: points_per_axis, period })
    }

    /// Unit torus `[0, 1)^dim`.
    pub fn unit(dim: usize, points_per_axis: usize) -> Result<Self> {
        Self::new(dim, points_per_axis, 1.0)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.period
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Number of samples, `n^dim`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one cell, `h^dim`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Torus volume `L^dim`.
    #[inline]
    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    /// Number of dyadic levels below the root: `n = 2^depth`.
    #[inline]
    pub fn depth(&self) -> usize {
        self.n.trailing_zeros() as usize
    }

    /// Flat index of a multi-index; entries past `dim` are ignored.
    #[inline]
    pub fn flat(&self, idx: [usize; 3]) -> usize {
        let mut f = 0;
        for &i in idx.iter().take(self.dim) {
            f = f * self.n + i;
        }
        f
    }

    /// Multi-index of a flat index; unused trailing entries are zero.
    #[inline]
    pub fn multi(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    /// Flat index of `idx + offset` with periodic wrap.
    #[inline]
    pub fn wrap_offset(&self, idx: [usize; 3], offset: [isize; 3]) -> usize {
        let n = self.n as isize;
        let mut f = 0usize;
        for a in 0..self.dim {
            let v = (idx[a] as isize + offset[a]).rem_euclid(n) as usize;
            f = f * self.n + v;
        }
        f
    }

    /// Physical coordinates of a sample.
    #[inline]
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi(flat);
        let h = self.spacing();
        [idx[0] as f64 * h, idx[1] as f64 * h, idx[2] as f64 * h]
    }

    /// Signed integer frequency of FFT bin `k` (Nyquist maps to `-n/2`).
    #[inline]
    pub fn signed_frequency(&self, k: usize) -> isize {
        let n = self.n as isize;
        let k = k as isize;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Angular wavenumbers `2 pi k / L` for every FFT bin along an axis.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let scale = 2.0 * std::f64::consts::PI / self.period;
        (0..self.n).map(|k| scale * self.signed_frequency(k) as f64).collect()
    }

    /// Minimum-image displacement between two sample positions, per axis.
    #[inline]
    pub fn torus_delta(&self, a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        let l = self.period;
        let mut d = [0.0; 3];
        for ax in 0..self.dim {
            let mut x = b[ax] - a[ax];
            x -= l * (x / l).round();
            d[ax] = x;
        }
        d
    }

    #[inline]
    pub fn torus_distance(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        let d = self.torus_delta(a, b);
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(4, 16, 1.0).is_err());
        assert!(Grid::new(2, 24, 1.0).is_err());
        assert!(Grid::new(2, 8, 1.0).is_err());
        assert!(Grid::new(3, 16, 0.0).is_err());
    }

    #[test]
    fn spacing_is_exact() {
        let g = Grid::new(3, 64, 2.7).unwrap();
        assert_eq!(g.spacing() * 64.0, 2.7);
        assert_eq!(g.depth(), 6);
    }

    #[test]
    fn flat_multi_roundtrip() {
        let g = Grid::unit(3, 16).unwrap();
        for f in [0, 1, 17, 300, g.len() - 1] {
            assert_eq!(g.flat(g.multi(f)), f);
        }
        assert_eq!(g.wrap_offset([0, 0, 0], [-1, 0, 1]), g.flat([15, 0, 1]));
    }

    #[test]
    fn nyquist_is_negative() {
        let g = Grid::unit(2, 16).unwrap();
        assert_eq!(g.signed_frequency(7), 7);
        assert_eq!(g.signed_frequency(8), -8);
        assert_eq!(g.signed_frequency(15), -1);
    }
}
