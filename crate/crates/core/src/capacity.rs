//! Variational capacities, equilibrium measures and potentials, and the
//! logarithmic gauge built from an equilibrium potential.
//!
//! The obstacle problem is posed for the periodic second-order
//! finite-difference Laplacian (a Fourier multiplier with symbol
//! `sum_j (2 sin(k_j h / 2) / h)^2`), which keeps a discrete maximum principle.
//! Competitors are grounded (`u = 0`) on every cell at torus distance
//! `>= L/2` from the set's centroid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::measure::DiscreteMeasure;
use crate::random;

pub const KKT_TOL: f64 = 1e-8;
const CG_TOL: f64 = 1e-11;
const CLIP: f64 = -1e-10;

/// Boolean cell mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactSet {
    grid: Grid,
    mask: Vec<bool>,
    count: usize,
}

impl CompactSet {
    pub fn new(grid: Grid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::InvalidParameter(format!("mask has {} cells, grid {}", mask.len(), grid.len())));
        }
        let count = mask.iter().filter(|&&m| m).count();
        Ok(Self { grid, mask, count })
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> bool) -> Self {
        let mask: Vec<bool> = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self::new(grid, mask).expect("sized")
    }

    /// Cells of a scalar field whose real part exceeds 0.5.
    pub fn from_field(f: &ScalarField) -> Self {
        Self::new(*f.grid(), f.values().iter().map(|v| v.re > 0.5).collect()).expect("sized")
    }

    /// Cube of `side` cells with lower corner `corner`, wrapping periodically.
    pub fn cube(grid: Grid, corner: [usize; 3], side: usize) -> Self {
        let n = grid.points_per_axis();
        let mask = (0..grid.len())
            .map(|i| {
                let idx = grid.multi(i);
                (0..grid.dim()).all(|a| (idx[a] + n - corner[a] % n) % n < side)
            })
            .collect();
        Self::new(grid, mask).expect("sized")
    }

    /// Cells whose sample point lies within `radius` of `center` (torus metric).
    pub fn ball(grid: Grid, center: [f64; 3], radius: f64) -> Self {
        Self::from_fn(grid, |x| grid.torus_distance(x, center) <= radius)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.mask[cell]
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    /// Per-axis circular mean of the member cells.
    pub fn centroid(&self) -> [f64; 3] {
        let g = &self.grid;
        let mut c = [0.0; 3];
        let first = self.mask.iter().position(|&m| m).unwrap_or(0);
        for (a, slot) in c.iter_mut().enumerate().take(g.dim()) {
            let (mut s, mut co) = (0.0, 0.0);
            for (i, _) in self.mask.iter().enumerate().filter(|(_, &m)| m) {
                let th = 2.0 * std::f64::consts::PI * g.position(i)[a] / g.period();
                s += th.sin();
                co += th.cos();
            }
            *slot = if s.hypot(co) <= 1e-9 * self.count as f64 {
                g.position(first)[a]
            } else {
                (s.atan2(co) / (2.0 * std::f64::consts::PI) * g.period()).rem_euclid(g.period())
            };
        }
        c
    }

    /// Cells at torus distance `>= L/2` from the centroid, outside the set.
    pub fn ground(&self) -> Vec<bool> {
        let c = self.centroid();
        let g = &self.grid;
        (0..g.len()).map(|i| !self.mask[i] && g.torus_distance(g.position(i), c) >= 0.5 * g.period()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityFlavor {
    /// `cap`: Dirichlet energy only.
    Homogeneous,
    /// `Cap`: Dirichlet energy plus `L^2` mass.
    Inhomogeneous,
}

impl CapacityFlavor {
    fn shift(self) -> f64 {
        match self {
            Self::Homogeneous => 0.0,
            Self::Inhomogeneous => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CapacityResult {
    pub value: f64,
    pub potential: ScalarField,
    pub measure: DiscreteMeasure,
    pub kkt_residual: f64,
    pub flavor: CapacityFlavor,
    pub dirichlet_energy: f64,
    pub measure_mass: f64,
    pub iterations: usize,
}

/// Symbol of the periodic finite-difference Laplacian `-lap_h`.
pub fn fd_symbol(grid: &Grid, kappa: [f64; 3]) -> f64 {
    let h = grid.spacing();
    kappa.iter().take(grid.dim()).map(|k| (2.0 * (0.5 * k * h).sin() / h).powi(2)).sum()
}

fn strides(grid: &Grid) -> [usize; 3] {
    let n = grid.points_per_axis();
    let mut s = [0; 3];
    for (a, slot) in s.iter_mut().enumerate().take(grid.dim()) {
        *slot = n.pow((grid.dim() - 1 - a) as u32);
    }
    s
}

/// `(-lap_h + shift) u` with the seven (five) point stencil.
fn apply_operator(grid: &Grid, u: &[f64], shift: f64, out: &mut [f64]) {
    let n = grid.points_per_axis();
    let h2 = grid.spacing().powi(2);
    let st = strides(grid);
    let dim = grid.dim();
    out.par_iter_mut().enumerate().for_each(|(i, o)| {
        let mut acc = (2.0 * dim as f64 / h2 + shift) * u[i];
        for &s in st.iter().take(dim) {
            let c = (i / s) % n;
            let up = if c + 1 < n { i + s } else { i + s - n * s };
            let down = if c > 0 { i - s } else { i + (n - 1) * s };
            acc -= (u[up] + u[down]) / h2;
        }
        *o = acc;
    });
}

/// `sum |D+ u|^2 h^dim` with forward differences, for complex samples.
pub fn fd_dirichlet_energy(f: &ScalarField) -> f64 {
    let grid = *f.grid();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let st = strides(&grid);
    let v = f.values();
    let per_cell: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for &s in st.iter().take(grid.dim()) {
                let c = (i / s) % n;
                let up = if c + 1 < n { i + s } else { i + s - n * s };
                acc += ((v[up] - v[i]) / h).norm_sqr();
            }
            acc
        })
        .collect();
    fft::ordered_sum(&per_cell, |x| *x) * grid.cell_volume()
}

/// Inverse of `symbol` applied in frequency space, restricted to `free`.
fn precondition(grid: &Grid, r: &[f64], free: &[bool], shift: f64, out: &mut [f64]) {
    let mut d: Vec<Complex64> = r.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft::forward(grid, &mut d);
    // the homogeneous zero mode has no inverse; any positive value keeps M SPD
    let floor = fd_symbol(grid, [2.0 * std::f64::consts::PI / grid.period(), 0.0, 0.0]);
    fft::for_each_mode(grid, &mut d, |_, kappa, _, v| {
        let mut s = fd_symbol(grid, kappa) + shift;
        if s <= 0.0 {
            s = floor;
        }
        *v /= s;
    });
    fft::inverse(grid, &mut d);
    for ((o, v), &f) in out.iter_mut().zip(&d).zip(free) {
        *o = if f { v.re } else { 0.0 };
    }
}

struct Solve {
    u: Vec<f64>,
    iterations: usize,
}

/// Solve `(-lap_h + shift) u = 0` on `free` with `u` fixed outside it.
fn dirichlet_solve(grid: &Grid, fixed: &[f64], free: &[bool], shift: f64, budget: usize) -> Result<Solve> {
    let len = grid.len();
    let mut a_fixed = vec![0.0; len];
    apply_operator(grid, fixed, shift, &mut a_fixed);
    let mut r: Vec<f64> = a_fixed.iter().zip(free).map(|(&v, &f)| if f { -v } else { 0.0 }).collect();
    let b_norm = fft::ordered_dot(&r, &r).sqrt();
    let mut x = vec![0.0; len];
    if b_norm == 0.0 {
        return Ok(Solve { u: fixed.to_vec(), iterations: 0 });
    }
    let mut z = vec![0.0; len];
    precondition(grid, &r, free, shift, &mut z);
    let mut p = z.clone();
    let mut rz = fft::ordered_dot(&r, &z);
    let mut ap = vec![0.0; len];
    let mut it = 0;
    loop {
        let res = fft::ordered_dot(&r, &r).sqrt();
        if res <= CG_TOL * b_norm {
            break;
        }
        if it >= budget {
            return Err(Error::NotConverged { what: "capacity solve", iterations: it, residual: res / b_norm });
        }
        apply_operator(grid, &p, shift, &mut ap);
        ap.iter_mut().zip(free).for_each(|(v, &f)| {
            if !f {
                *v = 0.0
            }
        });
        let alpha = rz / fft::ordered_dot(&p, &ap);
        x.par_iter_mut().zip(&p).for_each(|(xv, pv)| *xv += alpha * pv);
        r.par_iter_mut().zip(&ap).for_each(|(rv, av)| *rv -= alpha * av);
        precondition(grid, &r, free, shift, &mut z);
        let rz_new = fft::ordered_dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(pv, zv)| *pv = zv + beta * *pv);
        it += 1;
    }
    let u = x.iter().zip(fixed).zip(free).map(|((&xv, &fv), &f)| if f { xv } else { fv }).collect();
    Ok(Solve { u, iterations: it })
}

/// Capacity of `e`: minimize the discrete energy over `u >= 1` on `e`,
/// `u = 0` on the ground set, by primal-dual active-set iteration.
pub fn capacity(e: &CompactSet, flavor: CapacityFlavor) -> Result<CapacityResult> {
    if e.is_empty() {
        return Err(Error::Empty("compact set"));
    }
    let grid = e.grid;
    if grid.dim() == 2 && flavor == CapacityFlavor::Homogeneous {
        return Ok(CapacityResult {
            value: 0.0,
            potential: ScalarField::zeros(grid),
            measure: DiscreteMeasure::zero(grid),
            kkt_residual: 0.0,
            flavor,
            dirichlet_energy: 0.0,
            measure_mass: 0.0,
            iterations: 0,
        });
    }
    let ground = e.ground();
    if !ground.iter().any(|&g| g) {
        return Err(Error::InvalidParameter("set leaves no grounding cells".into()));
    }
    let shift = flavor.shift();
    let budget = 10 * grid.points_per_axis().pow(2);
    let len = grid.len();
    let w = grid.cell_volume();
    let mut active = e.mask.clone();
    let mut total_iterations = 0;
    for _ in 0..=e.count {
        let fixed: Vec<f64> = active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        let free: Vec<bool> = (0..len).map(|i| !active[i] && !ground[i]).collect();
        let sol = dirichlet_solve(&grid, &fixed, &free, shift, budget)?;
        total_iterations += sol.iterations;
        let mut au = vec![0.0; len];
        apply_operator(&grid, &sol.u, shift, &mut au);
        // active-set update: release cells with negative multipliers, add violated ones
        let mut changed = false;
        let mut next = active.clone();
        for i in 0..len {
            if !e.mask[i] {
                continue;
            }
            if active[i] && au[i] < CLIP {
                next[i] = false;
                changed = true;
            } else if !active[i] && sol.u[i] < 1.0 - KKT_TOL {
                next[i] = true;
                changed = true;
            }
        }
        if changed {
            active = next;
            continue;
        }
        let scale = au.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut kkt: f64 = 0.0;
        for i in 0..len {
            if ground[i] {
                continue;
            }
            if e.mask[i] {
                kkt = kkt.max((1.0 - sol.u[i]).max(0.0));
                kkt = kkt.max((-au[i]).max(0.0) / scale);
                kkt = kkt.max((au[i] * (sol.u[i] - 1.0)).abs() / scale);
            } else {
                kkt = kkt.max(au[i].abs() / scale);
            }
        }
        if kkt > KKT_TOL {
            return Err(Error::NotConverged { what: "capacity KKT", iterations: total_iterations, residual: kkt });
        }
        let mass: Vec<f64> = (0..len).map(|i| if e.mask[i] { au[i].max(0.0) * w } else { 0.0 }).collect();
        let measure = DiscreteMeasure::new(grid, mass)?;
        let potential = ScalarField::from_real(grid, sol.u)?;
        let mut energy = fd_dirichlet_energy(&potential);
        if shift > 0.0 {
            energy += fft::ordered_sum(potential.values(), |v| v.re * v.re) * w * shift;
        }
        let measure_mass = measure.total();
        return Ok(CapacityResult {
            value: energy,
            potential,
            measure,
            kkt_residual: kkt,
            flavor,
            dirichlet_energy: energy,
            measure_mass,
            iterations: total_iterations,
        });
    }
    Err(Error::NotConverged { what: "active set", iterations: total_iterations, residual: f64::NAN })
}

/// `(-lap_h)^-1` of the cell density of `mu`, zero mode dropped.
pub fn newtonian_potential(mu: &DiscreteMeasure) -> ScalarField {
    let grid = *mu.grid();
    let mut d: Vec<Complex64> = mu.density().into_values();
    fft::forward(&grid, &mut d);
    fft::for_each_mode(&grid, &mut d, |_, kappa, ksq, v| {
        *v = if ksq == 0.0 { Complex64::default() } else { *v / fd_symbol(&grid, kappa) };
    });
    fft::inverse(&grid, &mut d);
    ScalarField::new(grid, d.into_iter().map(|v| Complex64::new(v.re, 0.0)).collect()).expect("sized")
}

/// Newtonian potential shifted so its minimum over the torus is zero.
pub fn equilibrium_potential(mu: &DiscreteMeasure) -> Result<ScalarField> {
    if mu.grid().dim() != 3 {
        return Err(Error::InvalidParameter("equilibrium potential needs dim = 3".into()));
    }
    if mu.is_zero() {
        return Err(Error::Empty("measure"));
    }
    let p = newtonian_potential(mu);
    let min = p.values().iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    Ok(p.map(|v| v - min))
}

/// Shift a potential so that its minimum over `e` equals one.
pub fn normalize_on(p: &ScalarField, e: &CompactSet) -> ScalarField {
    let min = p
        .values()
        .iter()
        .zip(e.mask())
        .filter(|(_, &m)| m)
        .map(|(v, _)| v.re)
        .fold(f64::INFINITY, f64::min);
    p.map(|v| v - min + 1.0)
}

#[derive(Debug, Clone)]
pub struct GaugeReport {
    pub tau: f64,
    pub lambda: ScalarField,
    pub capacity: f64,
    pub energy_lhs: f64,
    pub energy_rhs: f64,
    pub gauge_ratio: f64,
    pub gauge_ratio_min: f64,
    pub samples: usize,
}

impl GaugeReport {
    pub fn energy_ratio(&self) -> f64 {
        self.energy_lhs / self.energy_rhs
    }

    /// Both sample extremes inside `[(1+2tau)^-1 * 0.9, (1+2tau) * 1.1]`.
    pub fn within_bound(&self) -> bool {
        let k = 1.0 + 2.0 * self.tau;
        self.gauge_ratio <= k * 1.1 && self.gauge_ratio_min >= 0.9 / k
    }
}

/// Gauge `lambda = tau log u_e` from the grounded equilibrium potential of
/// `e`, the energy identity for `u_e^tau`, and the gauge distortion over
/// `samples` random band-limited fields vanishing near the ground set.
pub fn gauge_check(e: &CompactSet, tau: f64, samples: usize, seed: u64) -> Result<GaugeReport> {
    let grid = *e.grid();
    if grid.dim() != 3 {
        return Err(Error::InvalidParameter("gauge check needs dim = 3".into()));
    }
    if !(tau > 0.5 && tau < 1.5) {
        return Err(Error::InvalidParameter(format!("tau must lie in (1/2, 3/2), got {tau}")));
    }
    let cap = capacity(e, CapacityFlavor::Homogeneous)?;
    if cap.value <= 0.0 {
        return Err(Error::InvalidParameter("zero capacity".into()));
    }
    let u = &cap.potential;
    let v = u.map(|x| Complex64::new(x.re.max(0.0).powf(tau), 0.0));
    let energy_lhs = fd_dirichlet_energy(&v);
    let energy_rhs = tau * tau / (2.0 * tau - 1.0) * cap.value;
    let lambda = u.map(|x| Complex64::new(if x.re > 0.0 { tau * x.re.ln() } else { 0.0 }, 0.0));
    let phase = lambda.map(|l| Complex64::from_polar(1.0, l.re));

    let center = e.centroid();
    let cutoff = 0.45 * grid.period();
    let window = ScalarField::from_fn(grid, |x| {
        let r = grid.torus_distance(x, center);
        if r >= cutoff {
            0.0
        } else {
            (0.5 * std::f64::consts::PI * r / cutoff).cos().powi(2)
        }
    });
    let ratios: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let w = random::band_limited(grid, seed.wrapping_add(s as u64), 4).mul(&window).expect("same grid");
            let gw = phase.mul(&w).expect("same grid");
            (fd_dirichlet_energy(&gw) / fd_dirichlet_energy(&w)).sqrt()
        })
        .collect();
    let gauge_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let gauge_ratio_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GaugeReport {
        tau,
        lambda,
        capacity: cap.value,
        energy_lhs,
        energy_rhs,
        gauge_ratio,
        gauge_ratio_min: if samples == 0 { 0.0 } else { gauge_ratio_min },
        samples,
    })
}
