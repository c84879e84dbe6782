//! Admissibility tests for nonnegative cell measures: the dyadic Carleson
//! sum, ball growth, localized Riesz energy, the pointwise potential
//! inequality, the Fefferman-Phong average condition, and their
//! inhomogeneous (Bessel) analogues.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{self, SpectralKind};
use crate::error::{Error, Result};
use crate::fft;
use crate::field::ScalarField;
use crate::grid::Grid;

/// Cell masses `mu(cell) >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    grid: Grid,
    mass: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(grid: Grid, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} cell masses, got {}",
                grid.len(),
                mass.len()
            )));
        }
        if let Some(i) = mass.iter().position(|m| !m.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = mass.iter().position(|&m| m < 0.0) {
            return Err(Error::InvalidParameter(format!("negative mass {} at cell {i}", mass[i])));
        }
        Ok(Self { grid, mass })
    }

    pub fn zero(grid: Grid) -> Self {
        Self { grid, mass: vec![0.0; grid.len()] }
    }

    /// `alpha` times Lebesgue measure.
    pub fn lebesgue(grid: Grid, alpha: f64) -> Self {
        Self { grid, mass: vec![alpha * grid.cell_volume(); grid.len()] }
    }

    pub fn point_mass(grid: Grid, cell: usize, m: f64) -> Self {
        let mut mass = vec![0.0; grid.len()];
        mass[cell] = m;
        Self { grid, mass }
    }

    /// `rho dx` for a density sampled at cell centers; tiny negative rounding
    /// (above `-1e-12` relative to the peak) is clipped to zero.
    pub fn from_density(rho: &ScalarField) -> Result<Self> {
        let grid = *rho.grid();
        let peak = rho.max_abs();
        let w = grid.cell_volume();
        let mut mass = Vec::with_capacity(grid.len());
        for (i, v) in rho.values().iter().enumerate() {
            if !v.re.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if v.re < -1e-12 * peak.max(1.0) {
                return Err(Error::InvalidParameter(format!("negative density {} at cell {i}", v.re)));
            }
            mass.push(v.re.max(0.0) * w);
        }
        Ok(Self { grid, mass })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        fft::ordered_sum(&self.mass, |m| *m)
    }

    pub fn is_zero(&self) -> bool {
        self.mass.iter().all(|&m| m == 0.0)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self { grid: self.grid, mass: self.mass.iter().map(|m| m * alpha).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self { grid: self.grid, mass: self.mass.iter().zip(&other.mass).map(|(a, b)| a + b).collect() })
    }

    /// Restriction to the cells where `keep` is true.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mass = self.mass.iter().enumerate().map(|(i, &m)| if keep(i) { m } else { 0.0 }).collect();
        Self { grid: self.grid, mass }
    }

    /// Cell density `mu(cell) / h^dim`.
    pub fn density(&self) -> ScalarField {
        let w = 1.0 / self.grid.cell_volume();
        ScalarField::new(self.grid, self.mass.iter().map(|&m| Complex64::new(m * w, 0.0)).collect())
            .expect("sized")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestId {
    Carleson,
    BallGrowth,
    BallEnergy,
    Pointwise,
    FeffermanPhong,
    CarlesonTruncated,
    BallEnergyBessel,
    PointwiseBessel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Witness {
    None,
    /// Dyadic tree node: `level` and the cube index within that level.
    Cube { level: usize, index: [usize; 3] },
    /// Cube given by its lower corner cell and side in cells.
    CellCube { corner: [usize; 3], side: usize },
    Ball { center: [usize; 3], radius: f64 },
    Point { index: [usize; 3] },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureReport {
    pub test: TestId,
    pub constant: f64,
    pub witness: Witness,
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
    /// For ball growth in two dimensions: admissibility forces `mu = 0`.
    pub forces_zero_measure: bool,
}

impl MeasureReport {
    fn new(test: TestId, constant: f64, witness: Witness) -> Self {
        Self { test, constant, witness, threshold: None, pass: None, forces_zero_measure: false }
    }

    /// Attach a pass/fail judgement against `threshold`.
    pub fn judged(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self.pass = Some(self.constant <= threshold);
        self
    }
}

/// Dyadic hierarchy of cube masses and accumulated Carleson energies.
///
/// Level 0 is the whole torus, level `depth` the single cells. Nodes of a
/// level are stored in C order of their cube indices.
#[derive(Debug, Clone)]
pub struct DyadicTree {
    dim: usize,
    period: f64,
    mass: Vec<Vec<f64>>,
    energy: Vec<Vec<f64>>,
}

impl DyadicTree {
    pub fn build(mu: &DiscreteMeasure) -> Self {
        let grid = mu.grid;
        let dim = grid.dim();
        let depth = grid.depth();
        let mut mass = vec![Vec::new(); depth + 1];
        let mut energy = vec![Vec::new(); depth + 1];
        mass[depth] = mu.mass.clone();
        for level in (0..depth).rev() {
            let per = 1usize << level;
            let child_per = per * 2;
            let mut m = vec![0.0; per.pow(dim as u32)];
            for (ci, &cm) in mass[level + 1].iter().enumerate() {
                m[parent_index(ci, child_per, dim)] += cm;
            }
            mass[level] = m;
        }
        let volume_exp = 1.0 - 2.0 / dim as f64;
        for level in (0..=depth).rev() {
            let side = grid.period() / (1usize << level) as f64;
            let vol_factor = side.powi(dim as i32).powf(volume_exp);
            let mut e: Vec<f64> = mass[level].iter().map(|m| m * m / vol_factor).collect();
            if level < depth {
                let child_per = 1usize << (level + 1);
                for (ci, &ce) in energy[level + 1].iter().enumerate() {
                    e[parent_index(ci, child_per, dim)] += ce;
                }
            }
            energy[level] = e;
        }
        Self { dim, period: grid.period(), mass, energy }
    }

    pub fn depth(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn mass(&self, level: usize) -> &[f64] {
        &self.mass[level]
    }

    /// `sum over Q within P of mu(Q)^2 / |Q|^(1 - 2/n)` for every node `P`.
    pub fn energy(&self, level: usize) -> &[f64] {
        &self.energy[level]
    }

    pub fn side(&self, level: usize) -> f64 {
        self.period / (1usize << level) as f64
    }

    pub fn node_index(&self, level: usize, node: usize) -> [usize; 3] {
        let per = 1usize << level;
        let mut idx = [0usize; 3];
        let mut rem = node;
        for a in (0..self.dim).rev() {
            idx[a] = rem % per;
            rem /= per;
        }
        idx
    }

    /// `max energy(P) / mu(P)` over nodes with positive mass on levels
    /// `>= min_level`.
    pub fn carleson_constant(&self, min_level: usize) -> (f64, Witness) {
        let mut best = (0.0, Witness::None);
        for level in min_level..=self.depth() {
            for (node, (&m, &e)) in self.mass[level].iter().zip(&self.energy[level]).enumerate() {
                if m > 0.0 {
                    let r = e / m;
                    if r > best.0 {
                        best = (r, Witness::Cube { level, index: self.node_index(level, node) });
                    }
                }
            }
        }
        best
    }
}

fn parent_index(child: usize, child_per: usize, dim: usize) -> usize {
    let per = child_per / 2;
    let mut rem = child;
    let mut idx = [0usize; 3];
    for a in (0..dim).rev() {
        idx[a] = (rem % child_per) / 2;
        rem /= child_per;
    }
    idx.iter().take(dim).fold(0, |acc, &i| acc * per + i)
}

/// Dyadic Carleson condition over every dyadic cube.
pub fn carleson_test(mu: &DiscreteMeasure) -> MeasureReport {
    let tree = DyadicTree::build(mu);
    let (c5, w) = tree.carleson_constant(0);
    MeasureReport::new(TestId::Carleson, c5, w)
}

/// Geometric radii `2h, 2 sqrt(2) h, ...` up to `L/4`.
pub fn default_radii(grid: &Grid) -> Vec<f64> {
    let h = grid.spacing();
    let top = grid.period() / 4.0;
    let mut out = Vec::new();
    let mut r = 2.0 * h;
    while r <= top * (1.0 + 1e-12) {
        out.push(r);
        r *= std::f64::consts::SQRT_2;
    }
    out
}

fn validate_radii(grid: &Grid, radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::Empty("radius list"));
    }
    let (lo, hi) = (2.0 * grid.spacing() * (1.0 - 1e-12), grid.period() / 4.0 * (1.0 + 1e-12));
    if let Some(r) = radii.iter().find(|&&r| !(lo..=hi).contains(&r)) {
        return Err(Error::InvalidParameter(format!("radius {r} outside [2h, L/4]")));
    }
    Ok(())
}

/// Indicator of the discrete ball `|x| <= r` centered at the origin, in frequency space.
fn ball_kernel_spectrum(grid: &Grid, r: f64) -> Vec<Complex64> {
    let origin = [0.0; 3];
    let mut k: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let inside = grid.torus_distance(origin, grid.position(i)) <= r * (1.0 + 1e-12);
            Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0)
        })
        .collect();
    fft::forward(grid, &mut k);
    k
}

/// Sum of `values` over `B_r(x)` for every center `x`, by periodic convolution.
fn ball_sums(grid: &Grid, values_spectrum: &[Complex64], r: f64) -> Vec<f64> {
    let kernel = ball_kernel_spectrum(grid, r);
    let mut d: Vec<Complex64> = values_spectrum.iter().zip(&kernel).map(|(a, b)| a * b).collect();
    fft::inverse(grid, &mut d);
    d.into_iter().map(|v| v.re).collect()
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc })
}

/// `max over x, r of mu(B_r(x)) / r^(n-2)`. In two dimensions this is the
/// largest ball mass, and the report notes that admissibility forces `mu = 0`.
pub fn ball_growth_test(mu: &DiscreteMeasure, radii: &[f64]) -> Result<MeasureReport> {
    let grid = mu.grid;
    validate_radii(&grid, radii)?;
    let dim = grid.dim();
    let mut spec: Vec<Complex64> = mu.mass.iter().map(|&m| Complex64::new(m, 0.0)).collect();
    fft::forward(&grid, &mut spec);
    let mut best = (0.0, Witness::None);
    for &r in radii {
        let sums = ball_sums(&grid, &spec, r);
        let (i, m) = argmax(&sums);
        let value = m.max(0.0) / r.powi(dim as i32 - 2);
        if value > best.0 {
            best = (value, Witness::Ball { center: grid.multi(i), radius: r });
        }
    }
    let mut rep = MeasureReport::new(TestId::BallGrowth, best.0, best.1);
    rep.forces_zero_measure = dim == 2;
    Ok(rep)
}

/// Which order-one potential the energy and pointwise tests use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialFlavor {
    /// `(-lap)^-1/2` with the zero mode set so the periodic kernel has minimum 0.
    Riesz,
    /// `(1 - lap)^-1/2`.
    Bessel,
}

/// Zero-mode value of the Riesz symbol that makes the periodic kernel of
/// `(-lap)^-1/2` nonnegative with minimum exactly zero on the grid.
pub fn riesz_zero_mode(grid: &Grid) -> f64 {
    let mut k = vec![Complex64::new(1.0, 0.0); grid.len()];
    fft::for_each_mode(grid, &mut k, |_, _, ksq, v| {
        *v = Complex64::new(SpectralKind::RieszHalf.symbol(ksq), 0.0);
    });
    fft::inverse(grid, &mut k);
    let min = k.iter().map(|v| v.re).fold(f64::INFINITY, f64::min) / grid.cell_volume();
    -min * grid.volume()
}

/// Order-one potential of a density.
pub fn potential(rho: &ScalarField, flavor: PotentialFlavor) -> ScalarField {
    match flavor {
        PotentialFlavor::Riesz => {
            let zero = riesz_zero_mode(rho.grid());
            calculus::apply_symbol(rho, |_, ksq| {
                Complex64::new(if ksq == 0.0 { zero } else { 1.0 / ksq.sqrt() }, 0.0)
            })
        }
        PotentialFlavor::Bessel => {
            calculus::apply_symbol(rho, |_, ksq| Complex64::new(SpectralKind::BesselRieszHalf.symbol(ksq), 0.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
}

/// Balls for the energy test: a coarse lattice of centers (4 per axis) and
/// the heaviest center, for radii `2h * 2^k <= L/4`.
pub fn default_ball_sample(mu: &DiscreteMeasure) -> Vec<Ball> {
    let grid = mu.grid;
    let n = grid.points_per_axis();
    let stride = n / 4;
    let mut spec: Vec<Complex64> = mu.mass.iter().map(|&m| Complex64::new(m, 0.0)).collect();
    fft::forward(&grid, &mut spec);
    let mut balls = Vec::new();
    let mut r = 2.0 * grid.spacing();
    while r <= grid.period() / 4.0 * (1.0 + 1e-12) {
        let sums = ball_sums(&grid, &spec, r);
        let (heavy, _) = argmax(&sums);
        balls.push(Ball { center: heavy, radius: r });
        for c in 0..4usize.pow(grid.dim() as u32) {
            let mut idx = [0usize; 3];
            let mut rem = c;
            for a in (0..grid.dim()).rev() {
                idx[a] = (rem % 4) * stride;
                rem /= 4;
            }
            let center = grid.flat(idx);
            if center != heavy {
                balls.push(Ball { center, radius: r });
            }
        }
        r *= 2.0;
    }
    balls
}

fn ball_mask(grid: &Grid, ball: &Ball) -> Vec<bool> {
    let c = grid.position(ball.center);
    (0..grid.len()).map(|i| grid.torus_distance(c, grid.position(i)) <= ball.radius * (1.0 + 1e-12)).collect()
}

fn ball_energy(mu: &DiscreteMeasure, balls: &[Ball], flavor: PotentialFlavor, id: TestId) -> MeasureReport {
    let grid = mu.grid;
    let w = grid.cell_volume();
    let results: Vec<(f64, Witness)> = balls
        .par_iter()
        .map(|ball| {
            let mask = ball_mask(&grid, ball);
            let mu_b = mu.restrict(|i| mask[i]);
            let m = mu_b.total();
            if m <= 0.0 {
                return (0.0, Witness::None);
            }
            let pot = potential(&mu_b.density(), flavor);
            let e: f64 = pot.values().iter().zip(&mask).filter(|(_, &k)| k).map(|(v, _)| v.re * v.re).sum::<f64>() * w;
            (e / m, Witness::Ball { center: grid.multi(ball.center), radius: ball.radius })
        })
        .collect();
    let best = results.into_iter().fold((0.0, Witness::None), |a, b| if b.0 > a.0 { b } else { a });
    MeasureReport::new(id, best.0, best.1)
}

/// `max over sampled balls B of int_B [I mu_B]^2 / mu(B)` with `I` the Riesz potential.
pub fn ball_energy_test(mu: &DiscreteMeasure, balls: &[Ball]) -> Result<MeasureReport> {
    if mu.grid.dim() != 3 {
        return Err(Error::InvalidParameter("homogeneous ball energy test needs dim = 3".into()));
    }
    Ok(ball_energy(mu, balls, PotentialFlavor::Riesz, TestId::BallEnergy))
}

fn pointwise(mu: &DiscreteMeasure, flavor: PotentialFlavor, id: TestId) -> MeasureReport {
    let grid = mu.grid;
    if mu.is_zero() {
        return MeasureReport::new(id, 0.0, Witness::None);
    }
    let first = potential(&mu.density(), flavor);
    let sq = first.map(|v| Complex64::new(v.re * v.re, 0.0));
    let second = potential(&sq, flavor);
    let peak = first.values().iter().map(|v| v.re).fold(0.0, f64::max);
    let floor = 1e-12 * peak;
    let mut best = (0.0, Witness::None);
    for (i, (a, b)) in first.values().iter().zip(second.values()).enumerate() {
        if a.re > floor {
            let r = b.re / a.re;
            if r > best.0 {
                best = (r, Witness::Point { index: grid.multi(i) });
            }
        }
    }
    MeasureReport::new(id, best.0, best.1)
}

/// `max_x I[(I mu)^2](x) / I mu(x)` over cells where `I mu` is resolvable.
pub fn pointwise_test(mu: &DiscreteMeasure) -> Result<MeasureReport> {
    if mu.grid.dim() != 3 {
        return Err(Error::InvalidParameter("homogeneous pointwise test needs dim = 3".into()));
    }
    Ok(pointwise(mu, PotentialFlavor::Riesz, TestId::Pointwise))
}

/// `max over x, r of r^(2(1+eps) - n) int_{B_r(x)} rho^(1+eps)`.
pub fn fefferman_phong_test(rho: &ScalarField, eps: f64, radii: &[f64]) -> Result<MeasureReport> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {eps}")));
    }
    let grid = *rho.grid();
    validate_radii(&grid, radii)?;
    rho.check_finite()?;
    if let Some(i) = rho.values().iter().position(|v| v.re < -1e-12) {
        return Err(Error::InvalidParameter(format!("negative density {} at cell {i}", rho.values()[i].re)));
    }
    let w = grid.cell_volume();
    let p = 1.0 + eps;
    let mut spec: Vec<Complex64> = rho.values().iter().map(|v| Complex64::new(v.re.max(0.0).powf(p) * w, 0.0)).collect();
    fft::forward(&grid, &mut spec);
    let mut best = (0.0, Witness::None);
    for &r in radii {
        let sums = ball_sums(&grid, &spec, r);
        let (i, s) = argmax(&sums);
        let value = r.powf(2.0 * p - grid.dim() as f64) * s.max(0.0);
        if value > best.0 {
            best = (value, Witness::Ball { center: grid.multi(i), radius: r });
        }
    }
    Ok(MeasureReport::new(TestId::FeffermanPhong, best.0, best.1))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InhomogeneousReport {
    pub carleson: MeasureReport,
    pub ball_energy: MeasureReport,
    pub pointwise: MeasureReport,
}

/// The `W^{1,2}` versions: Carleson sums restricted to cubes of side `<= L/2`,
/// and the energy and pointwise tests with the Bessel potential.
pub fn inhomogeneous_variants(mu: &DiscreteMeasure, balls: &[Ball]) -> InhomogeneousReport {
    let tree = DyadicTree::build(mu);
    let (c, w) = tree.carleson_constant(1);
    InhomogeneousReport {
        carleson: MeasureReport::new(TestId::CarlesonTruncated, c, w),
        ball_energy: ball_energy(mu, balls, PotentialFlavor::Bessel, TestId::BallEnergyBessel),
        pointwise: pointwise(mu, PotentialFlavor::Bessel, TestId::PointwiseBessel),
    }
}
