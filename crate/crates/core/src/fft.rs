//! Multi-dimensional FFT over the grid, one axis at a time.
//!
//! Lines are transformed independently in parallel; no cross-thread
//! reductions happen here, so results are bit-reproducible.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::grid::Grid;

type Plan = Arc<dyn Fft<f64>>;
type PlanCache = Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>;

fn plan(n: usize, direction: FftDirection) -> Plan {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let key = (n, direction == FftDirection::Forward);
    if let Some(p) = guard.1.get(&key) {
        return p.clone();
    }
    let p = guard.0.plan_fft(n, direction);
    guard.1.insert(key, p.clone());
    p
}

fn transform(grid: &Grid, data: &mut [Complex64], direction: FftDirection) {
    debug_assert_eq!(data.len(), grid.len());
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let fft = plan(n, direction);
    let scratch_len = fft.get_inplace_scratch_len();

    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            data.par_chunks_mut(n).for_each_init(
                || vec![Complex64::default(); scratch_len],
                |scratch, line| fft.process_with_scratch(line, scratch),
            );
            continue;
        }
        let block = n * stride;
        let mut buf = vec![Complex64::default(); block];
        for chunk in data.chunks_mut(block) {
            // gather: line i of this block is chunk[j * stride + i], j = 0..n
            {
                let src: &[Complex64] = chunk;
                buf.par_chunks_mut(n).enumerate().for_each_init(
                    || vec![Complex64::default(); scratch_len],
                    |scratch, (i, line)| {
                        for (j, v) in line.iter_mut().enumerate() {
                            *v = src[j * stride + i];
                        }
                        fft.process_with_scratch(line, scratch);
                    },
                );
            }
            let src: &[Complex64] = &buf;
            chunk.par_chunks_mut(stride).enumerate().for_each(|(j, row)| {
                for (i, v) in row.iter_mut().enumerate() {
                    *v = src[i * n + j];
                }
            });
        }
    }
}

/// In-place forward transform (unnormalized).
pub fn forward(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, FftDirection::Forward);
}

/// In-place inverse transform, normalized so that `inverse(forward(x)) == x`.
pub fn inverse(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, FftDirection::Inverse);
    let scale = 1.0 / data.len() as f64;
    data.par_iter_mut().for_each(|v| *v *= scale);
}

/// Visit every frequency bin with its angular wavevector and `|kappa|^2`.
///
/// `f(flat_index, kappa, kappa_sq)`; runs in parallel over contiguous rows.
pub fn for_each_mode<F>(grid: &Grid, data: &mut [Complex64], f: F)
where
    F: Fn(usize, [f64; 3], f64, &mut Complex64) + Sync,
{
    let n = grid.points_per_axis();
    let k = grid.wavenumbers();
    let dim = grid.dim();
    data.par_chunks_mut(n).enumerate().for_each(|(row, line)| {
        let base = grid.multi(row * n);
        let mut kappa = [0.0; 3];
        for a in 0..dim - 1 {
            kappa[a] = k[base[a]];
        }
        let partial: f64 = kappa.iter().take(dim - 1).map(|x| x * x).sum();
        for (j, v) in line.iter_mut().enumerate() {
            kappa[dim - 1] = k[j];
            let ksq = partial + k[j] * k[j];
            f(row * n + j, kappa, ksq, v);
        }
    });
}

/// Deterministic real dot product, chunked like [`ordered_sum`].
pub fn ordered_dot(a: &[f64], b: &[f64]) -> f64 {
    const CHUNK: usize = 4096;
    let partials: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    partials.iter().sum()
}

/// Deterministic parallel sum: fixed-size chunks reduced in order.
pub fn ordered_sum<T, F>(data: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync,
{
    const CHUNK: usize = 4096;
    let partials: Vec<f64> = data.par_chunks(CHUNK).map(|c| c.iter().map(&f).sum()).collect();
    partials.iter().sum()
}
