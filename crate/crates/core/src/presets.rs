//! Analytic coefficient and measure presets. Every preset is a pure
//! function of the grid (and seed, where one is taken).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::calculus;
use crate::error::{Error, Result};
use crate::field::{MatrixField, ScalarField, VectorField};
use crate::grid::Grid;
use crate::measure::DiscreteMeasure;
use crate::random;

/// Coefficients `(A, b, q)` of `div(A grad u) + b.grad u + q u`, or a measure.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub a: MatrixField,
    pub b: VectorField,
    pub q: ScalarField,
}

impl Coefficients {
    pub fn zero(grid: Grid) -> Self {
        Self { a: MatrixField::zeros(grid), b: VectorField::zeros(grid), q: ScalarField::zeros(grid) }
    }

    pub fn drift(b: VectorField) -> Self {
        let grid = *b.grid();
        Self { b, ..Self::zero(grid) }
    }

    pub fn potential(q: ScalarField) -> Self {
        let grid = *q.grid();
        Self { q, ..Self::zero(grid) }
    }
}

pub const NAMES: &[&str] = &[
    "vortex",
    "gradient",
    "stream",
    "lebesgue",
    "bump",
    "union_bumps",
    "point_mass",
    "coulomb_gauge",
    "random",
    "log_singular",
    "singular_gradient",
    "identity",
    "constant_potential",
];

fn center(grid: &Grid) -> [f64; 3] {
    [grid.period() / 2.0; 3]
}

fn offset(grid: &Grid, x: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    grid.torus_delta(c, x)
}

/// `(x2, -x1, 0) / (x1^2 + x2^2)` about the torus center, with `|b|` capped
/// at `1/(2h)`, zero on the axis, and the mean subtracted.
pub fn vortex(grid: Grid) -> VectorField {
    let c = center(&grid);
    let cap = 1.0 / (2.0 * grid.spacing());
    VectorField::from_fn(grid, |x| {
        let d = offset(&grid, x, c);
        let r2 = d[0] * d[0] + d[1] * d[1];
        if r2 == 0.0 {
            return [0.0; 3];
        }
        let r = r2.sqrt();
        let mag = (1.0 / r).min(cap);
        [d[1] / r * mag, -d[0] / r * mag, 0.0]
    })
    .sub_mean()
}

/// Default scalar potential `g = sin(2 pi x1 / L)`.
pub fn default_potential(grid: Grid) -> ScalarField {
    let l = grid.period();
    ScalarField::from_fn(grid, |x| (2.0 * PI * x[0] / l).sin())
}

/// Default stream function `g = sin(2 pi x1 / L) cos(2 pi x2 / L)`.
pub fn default_stream(grid: Grid) -> ScalarField {
    let l = grid.period();
    ScalarField::from_fn(grid, |x| (2.0 * PI * x[0] / l).sin() * (2.0 * PI * x[1] / l).cos())
}

pub fn gradient(g: &ScalarField) -> VectorField {
    calculus::grad(g)
}

/// `(d2 g, -d1 g, 0, ...)`, divergence free.
pub fn stream(g: &ScalarField) -> VectorField {
    let grid = *g.grid();
    let dg = calculus::grad(g);
    let comps = (0..grid.dim())
        .map(|a| match a {
            0 => dg.component(1).clone(),
            1 => dg.component(0).scale(Complex64::new(-1.0, 0.0)),
            _ => ScalarField::zeros(grid),
        })
        .collect();
    VectorField::new(comps).expect("dim components")
}

fn gaussian(grid: &Grid, c: [f64; 3], sigma: f64) -> ScalarField {
    ScalarField::from_fn(*grid, |x| {
        let d = offset(grid, x, c);
        let r2: f64 = d.iter().take(grid.dim()).map(|v| v * v).sum();
        (-r2 / (2.0 * sigma * sigma)).exp()
    })
}

pub fn lebesgue(grid: Grid) -> DiscreteMeasure {
    DiscreteMeasure::lebesgue(grid, 1.0)
}

/// Gaussian density of width `L/16` at the center, unit peak.
pub fn bump(grid: Grid) -> DiscreteMeasure {
    DiscreteMeasure::from_density(&gaussian(&grid, center(&grid), grid.period() / 16.0)).expect("nonnegative")
}

/// Three Gaussian bumps of different widths and heights.
pub fn union_bumps(grid: Grid) -> DiscreteMeasure {
    let l = grid.period();
    let parts = [([0.25, 0.25, 0.5], l / 16.0, 1.0), ([0.7, 0.4, 0.3], l / 32.0, 2.0), ([0.5, 0.75, 0.75], l / 24.0, 0.5)];
    let mut rho = ScalarField::zeros(grid);
    for (c, sigma, height) in parts {
        let c = [c[0] * l, c[1] * l, c[2] * l];
        rho = rho.add(&gaussian(&grid, c, sigma).scale(Complex64::new(height, 0.0))).expect("same grid");
    }
    DiscreteMeasure::from_density(&rho).expect("nonnegative")
}

/// Unit mass spread over a Gaussian of width one cell at the center.
pub fn point_mass(grid: Grid) -> DiscreteMeasure {
    let rho = gaussian(&grid, center(&grid), grid.spacing());
    let mu = DiscreteMeasure::from_density(&rho).expect("nonnegative");
    let total = mu.total();
    mu.scale(1.0 / total)
}

/// Smooth skew `F0` with `F0_12 = sin(2 pi x1/L) sin(2 pi x2/L) / (2 pi)`;
/// returns `a = Div F0` and `q = -|a|^2`.
pub fn coulomb_gauge(grid: Grid) -> (VectorField, ScalarField) {
    let l = grid.period();
    let f = ScalarField::from_fn(grid, |x| (2.0 * PI * x[0] / l).sin() * (2.0 * PI * x[1] / l).sin() / (2.0 * PI));
    let dim = grid.dim();
    let mut entries = vec![ScalarField::zeros(grid); dim * dim];
    entries[1] = f.clone();
    entries[dim] = f.scale(Complex64::new(-1.0, 0.0));
    let f0 = MatrixField::new(entries, true).expect("skew");
    let a = calculus::matrix_div(&f0).map_components(|c| c.map(|v| Complex64::new(v.re, 0.0)));
    let q = a.magnitude_sq().scale(Complex64::new(-1.0, 0.0));
    (a, q)
}

pub fn random_drift(grid: Grid, seed: u64, band: usize) -> VectorField {
    random::band_limited_vector(grid, seed, band)
}

/// `log max(|x - center|, h)`, a BMO function that is not VMO.
pub fn log_singular(grid: Grid) -> ScalarField {
    let c = center(&grid);
    let h = grid.spacing();
    ScalarField::from_fn(grid, |x| {
        let d = offset(&grid, x, c);
        let r = d.iter().take(grid.dim()).map(|v| v * v).sum::<f64>().sqrt();
        r.max(h).ln()
    })
    .sub_mean()
}

/// Drift `b = Div F` with `F_12 = -F_21 = log_singular`.
pub fn log_singular_drift(grid: Grid) -> VectorField {
    let f = log_singular(grid);
    let dim = grid.dim();
    let mut entries = vec![ScalarField::zeros(grid); dim * dim];
    entries[1] = f.clone();
    entries[dim] = f.scale(Complex64::new(-1.0, 0.0));
    let m = MatrixField::new(entries, true).expect("skew");
    calculus::matrix_div(&m).map_components(|c| c.map(|v| Complex64::new(v.re, 0.0)))
}

/// `strength * grad g` with `g = w(r) max(r, h)^(-1/2)` and `w` a `cos^2`
/// window of radius `L/4`: `|b|^2 ~ r^-3` near the center.
pub fn singular_gradient(grid: Grid, strength: f64) -> VectorField {
    let c = center(&grid);
    let h = grid.spacing();
    let rw = grid.period() / 4.0;
    let g = ScalarField::from_fn(grid, |x| {
        let d = offset(&grid, x, c);
        let r = d.iter().take(grid.dim()).map(|v| v * v).sum::<f64>().sqrt();
        if r >= rw {
            0.0
        } else {
            strength * (0.5 * PI * r / rw).cos().powi(2) / r.max(h).sqrt()
        }
    });
    calculus::grad(&g).map_components(|c| c.map(|v| Complex64::new(v.re, 0.0)))
}

/// Smooth trigonometric drift and potential for infinitesimal tests.
pub fn smooth_trig(grid: Grid) -> Coefficients {
    let l = grid.period();
    let b = VectorField::from_fn(grid, |x| {
        let t = 2.0 * PI / l;
        [(t * x[1]).sin(), (t * x[0]).cos() * 0.5, (t * x[0]).sin() * 0.25]
    });
    let q = ScalarField::from_fn(grid, |x| (2.0 * PI * x[0] / l).cos().powi(2));
    Coefficients { a: MatrixField::zeros(grid), b, q }
}

/// Named coefficient preset.
pub fn coefficients(name: &str, grid: Grid, seed: u64) -> Result<Coefficients> {
    Ok(match name {
        "vortex" => Coefficients::drift(vortex(grid)),
        "gradient" => Coefficients::drift(gradient(&default_potential(grid))),
        "stream" => Coefficients::drift(stream(&default_stream(grid))),
        "random" => Coefficients::drift(random_drift(grid, seed, 4)),
        "log_singular" => Coefficients::drift(log_singular_drift(grid)),
        "singular_gradient" => Coefficients::drift(singular_gradient(grid, 1.0)),
        "coulomb_gauge" => {
            let (a, q) = coulomb_gauge(grid);
            Coefficients { a: MatrixField::zeros(grid), b: a, q }
        }
        "identity" => Coefficients { a: MatrixField::identity(grid), ..Coefficients::zero(grid) },
        "constant_potential" => Coefficients::potential(ScalarField::constant(grid, Complex64::new(1.0, 0.0))),
        "smooth_trig" => smooth_trig(grid),
        "lebesgue" | "bump" | "union_bumps" | "point_mass" => {
            Coefficients::potential(measure(name, grid)?.density())
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    })
}

/// Named measure preset; coefficient presets map to `|b|^2 + |q|` dx.
pub fn measure(name: &str, grid: Grid) -> Result<DiscreteMeasure> {
    match name {
        "lebesgue" => Ok(lebesgue(grid)),
        "bump" => Ok(bump(grid)),
        "union_bumps" => Ok(union_bumps(grid)),
        "point_mass" => Ok(point_mass(grid)),
        other => {
            let c = coefficients(other, grid, 0)?;
            let rho = c.b.magnitude_sq().add(&c.q.map(|v| Complex64::new(v.norm(), 0.0)))?;
            DiscreteMeasure::from_density(&rho)
        }
    }
}
