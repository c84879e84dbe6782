//! Mean-oscillation estimators (BMO, local bmo, BMO#) and VMO profiles over
//! families of dyadic cubes, optionally augmented by half-side shifts.
//!
//! The unit scale separating "small" from "large" cubes is side `L/2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, ScalarField};
use crate::grid::Grid;

/// Axis-aligned cube of `side` cells starting at `corner`, wrapping periodically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cube {
    pub corner: [usize; 3],
    pub side: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyFlavor {
    Dyadic,
    DyadicPlusHalfShifts,
}

#[derive(Debug, Clone)]
pub struct CubeFamily {
    grid: Grid,
    cubes: Vec<Cube>,
    flavor: FamilyFlavor,
}

impl CubeFamily {
    /// All dyadic cubes (every level, root included), plus for each side
    /// `s >= 2` the cubes shifted by `s/2` along every nonempty axis subset.
    pub fn dyadic(grid: Grid, flavor: FamilyFlavor) -> Self {
        let n = grid.points_per_axis();
        let dim = grid.dim();
        let mut cubes = Vec::new();
        let mut side = n;
        while side >= 1 {
            let per_axis = n / side;
            let count = per_axis.pow(dim as u32);
            let shift_sets: Vec<usize> = match flavor {
                FamilyFlavor::DyadicPlusHalfShifts if side >= 2 && side < n => (0..1usize << dim).collect(),
                _ => vec![0],
            };
            for mask in shift_sets {
                for c in 0..count {
                    let mut corner = [0usize; 3];
                    let mut rem = c;
                    for a in (0..dim).rev() {
                        let shift = if mask & (1 << a) != 0 { side / 2 } else { 0 };
                        corner[a] = (rem % per_axis) * side + shift;
                        rem /= per_axis;
                    }
                    cubes.push(Cube { corner, side });
                }
            }
            side /= 2;
        }
        Self { grid, cubes, flavor }
    }

    pub fn from_cubes(grid: Grid, cubes: Vec<Cube>) -> Result<Self> {
        let n = grid.points_per_axis();
        for c in &cubes {
            if !c.side.is_power_of_two() || c.side > n || c.corner.iter().take(grid.dim()).any(|&x| x >= n) {
                return Err(Error::InvalidParameter(format!("cube {c:?} outside the torus")));
            }
        }
        Ok(Self { grid, cubes, flavor: FamilyFlavor::Dyadic })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn flavor(&self) -> FamilyFlavor {
        self.flavor
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
}

/// Flat indices of the cells of a cube.
pub fn cube_cells(grid: &Grid, cube: &Cube) -> Vec<usize> {
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let s = cube.side;
    let total = s.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    for t in 0..total {
        let mut rem = t;
        let mut flat = 0;
        let mut local = [0usize; 3];
        for a in (0..dim).rev() {
            local[a] = rem % s;
            rem /= s;
        }
        for a in 0..dim {
            flat = flat * n + (cube.corner[a] + local[a]) % n;
        }
        out.push(flat);
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct CubeStats {
    oscillation: f64,
    mean_power: f64,
}

fn cube_stats(f: &ScalarField, cube: &Cube, r: f64) -> CubeStats {
    let cells = cube_cells(f.grid(), cube);
    let vals = f.values();
    let inv = 1.0 / cells.len() as f64;
    let mean = cells.iter().map(|&i| vals[i]).sum::<num_complex::Complex64>() * inv;
    let (mut osc, mut mass) = (0.0, 0.0);
    for &i in &cells {
        osc += (vals[i] - mean).norm().powf(r);
        mass += vals[i].norm().powf(r);
    }
    CubeStats { oscillation: (osc * inv).powf(1.0 / r), mean_power: (mass * inv).powf(1.0 / r) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BmoFlavor {
    /// Sup of mean oscillation over every cube.
    Bmo,
    /// Local bmo: `BMO` plus the sup of `(mean |f|^r)^(1/r)` over large cubes.
    LocalBmo,
    /// Small cubes only.
    BmoSharp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BmoReport {
    pub norm: f64,
    pub flavor: BmoFlavor,
    pub r_exponent: f64,
    /// Cube attaining the oscillation supremum.
    pub worst_cube: Cube,
    /// Component (row-major for matrices) attaining it.
    pub worst_component: usize,
}

fn is_small(grid: &Grid, cube: &Cube) -> bool {
    2 * cube.side <= grid.points_per_axis()
}

fn is_large(grid: &Grid, cube: &Cube) -> bool {
    2 * cube.side >= grid.points_per_axis()
}

/// Mean-oscillation norm of a field; vector and matrix fields take the
/// maximum over components.
pub fn bmo_norm(field: &Field, flavor: BmoFlavor, r: f64, family: &CubeFamily) -> Result<BmoReport> {
    if family.is_empty() {
        return Err(Error::Empty("cube family"));
    }
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("oscillation exponent must be >= 1, got {r}")));
    }
    field.grid().ensure_same(family.grid())?;
    let grid = *family.grid();
    let considered: Vec<Cube> = family
        .cubes()
        .iter()
        .copied()
        .filter(|c| flavor != BmoFlavor::BmoSharp || is_small(&grid, c))
        .collect();
    if considered.is_empty() {
        return Err(Error::Empty("cube family after scale restriction"));
    }

    let mut best = (0.0f64, considered[0], 0usize);
    let mut large_mass = 0.0f64;
    for (ci, comp) in field.scalar_components().into_iter().enumerate() {
        let stats: Vec<CubeStats> = considered.par_iter().map(|c| cube_stats(comp, c, r)).collect();
        for (cube, s) in considered.iter().zip(&stats) {
            if s.oscillation > best.0 {
                best = (s.oscillation, *cube, ci);
            }
            if is_large(&grid, cube) {
                large_mass = large_mass.max(s.mean_power);
            }
        }
    }
    let norm = match flavor {
        BmoFlavor::LocalBmo => best.0 + large_mass,
        _ => best.0,
    };
    Ok(BmoReport { norm, flavor, r_exponent: r, worst_cube: best.1, worst_component: best.2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub delta: f64,
    pub value: f64,
}

/// Sup of mean oscillation over cubes of side at most `delta`, for each
/// `delta` (physical length). Uses the shifted dyadic family.
pub fn vmo_profile(field: &Field, deltas: &[f64], r: f64) -> Result<Vec<ProfilePoint>> {
    let grid = *field.grid();
    let h = grid.spacing();
    if deltas.is_empty() {
        return Err(Error::Empty("delta list"));
    }
    for w in deltas.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidParameter("delta list must be increasing".into()));
        }
    }
    // single cells have no oscillation, so two cells is the finest scale
    if deltas[0] < 2.0 * h * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "delta {} below grid resolution 2h = {}",
            deltas[0],
            2.0 * h
        )));
    }
    if *deltas.last().unwrap() > grid.period() / 2.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter("delta above L/2".into()));
    }
    let family = CubeFamily::dyadic(grid, FamilyFlavor::DyadicPlusHalfShifts);
    let max_side = (deltas.last().unwrap() / h * (1.0 + 1e-12)).floor() as usize;
    let cubes: Vec<Cube> = family.cubes().iter().copied().filter(|c| c.side >= 2 && c.side <= max_side).collect();

    // sup per side length
    let mut by_side: Vec<(usize, f64)> = Vec::new();
    for comp in field.scalar_components() {
        let osc: Vec<f64> = cubes.par_iter().map(|c| cube_stats(comp, c, r).oscillation).collect();
        for (c, o) in cubes.iter().zip(osc) {
            match by_side.iter_mut().find(|(s, _)| *s == c.side) {
                Some(entry) => entry.1 = entry.1.max(o),
                None => by_side.push((c.side, o)),
            }
        }
    }
    Ok(deltas
        .iter()
        .map(|&d| {
            let limit = (d / h * (1.0 + 1e-12)).floor() as usize;
            let value = by_side.iter().filter(|(s, _)| *s <= limit).map(|(_, v)| *v).fold(0.0, f64::max);
            ProfilePoint { delta: d, value }
        })
        .collect())
}

/// True when the profile at its finest scale is at most `threshold`.
pub fn is_vmo_consistent(profile: &[ProfilePoint], threshold: f64) -> bool {
    profile.first().is_some_and(|p| p.value <= threshold)
}
