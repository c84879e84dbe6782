//! Independent oracles: dense matrix assembly on small grids and
//! refinement checks against direct evaluation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use formbound::field::{Field, MatrixField, ScalarField, VectorField};
use formbound::form_norm::{self, SecondOrderOperator};
use formbound::grid::Grid;
use formbound::hodge::{self, Flavor};
use formbound::oscillation::{self, BmoFlavor, CubeFamily, FamilyFlavor};
use formbound::{presets, random};

type M = DMatrix<Complex64>;

/// Unnormalized DFT matrix of the flattened grid.
fn dft(g: &Grid) -> M {
    let n = g.points_per_axis();
    let len = g.len();
    M::from_fn(len, len, |k, x| {
        let (km, xm) = (g.multi(k), g.multi(x));
        let phase: usize = (0..g.dim()).map(|a| km[a] * xm[a]).sum();
        Complex64::from_polar(1.0, -2.0 * PI * (phase % n) as f64 / n as f64)
    })
}

fn spectral_diag(g: &Grid, symbol: impl Fn([f64; 3], f64) -> Complex64) -> M {
    let k = g.wavenumbers();
    let mut d = M::zeros(g.len(), g.len());
    for i in 0..g.len() {
        let m = g.multi(i);
        let mut kappa = [0.0; 3];
        for a in 0..g.dim() {
            kappa[a] = k[m[a]];
        }
        let ksq = kappa.iter().map(|x| x * x).sum();
        d[(i, i)] = symbol(kappa, ksq);
    }
    d
}

fn mult(f: &ScalarField) -> M {
    M::from_diagonal(&nalgebra::DVector::from_vec(f.values().to_vec()))
}

struct Dense {
    f: M,
    finv: M,
    g: Grid,
}

impl Dense {
    fn new(g: Grid) -> Self {
        let f = dft(&g);
        let finv = f.adjoint() / Complex64::new(g.len() as f64, 0.0);
        Self { f, finv, g }
    }

    fn multiplier(&self, symbol: impl Fn([f64; 3], f64) -> Complex64) -> M {
        &self.finv * spectral_diag(&self.g, symbol) * &self.f
    }

    fn derivative(&self, a: usize) -> M {
        self.multiplier(|k, _| Complex64::new(0.0, k[a]))
    }

    fn compression(&self, flavor: Flavor) -> M {
        self.multiplier(|_, ksq| {
            Complex64::new(
                match flavor {
                    Flavor::Homogeneous if ksq == 0.0 => 0.0,
                    Flavor::Homogeneous => ksq.powf(-0.5),
                    Flavor::Inhomogeneous => (1.0 + ksq).powf(-0.5),
                },
                0.0,
            )
        })
    }

    /// `div(A grad) + b . grad + q`.
    fn operator(&self, a: &MatrixField, b: &VectorField, q: &ScalarField) -> M {
        let d = self.g.dim();
        let ders: Vec<M> = (0..d).map(|i| self.derivative(i)).collect();
        let mut l = mult(q);
        for i in 0..d {
            l += mult(b.component(i)) * &ders[i];
            for j in 0..d {
                l += &ders[i] * mult(a.entry(i, j)) * &ders[j];
            }
        }
        l
    }
}

fn top_singular(m: &M) -> f64 {
    m.clone().singular_values().iter().fold(0.0f64, |a, &s| a.max(s))
}

fn random_coefficients(g: Grid) -> (MatrixField, VectorField, ScalarField) {
    let d = g.dim();
    let mut entries = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let base = random::band_limited(g, 100 + (i.min(j) * d + i.max(j)) as u64, 3).scale(Complex64::new(0.3, 0.0));
            let diag = if i == j { ScalarField::constant(g, Complex64::new(1.0, 0.0)) } else { ScalarField::zeros(g) };
            entries.push(base.add(&diag).unwrap());
        }
    }
    let a = MatrixField::new(entries, false).unwrap();
    let b = random::band_limited_vector(g, 200, 3);
    let q = random::band_limited(g, 300, 3);
    (a, b, q)
}

#[test]
fn form_norm_matches_dense_svd() {
    let g = Grid::unit(2, 16).unwrap();
    let dense = Dense::new(g);
    let (a, b, q) = random_coefficients(g);
    for flavor in [Flavor::Homogeneous, Flavor::Inhomogeneous] {
        let s = dense.compression(flavor);
        let r = &s * dense.operator(&a, &b, &q) * &s;
        let oracle = top_singular(&r);
        let est = form_norm::form_norm(&a, &b, &q, flavor).unwrap().value;
        assert!((est - oracle).abs() <= 1e-6 * oracle, "{flavor:?}: {est} vs dense {oracle}");
    }
}

#[test]
fn constant_drift_commutator_matches_dense() {
    let g = Grid::unit(2, 16).unwrap();
    let dense = Dense::new(g);
    let b = VectorField::from_fn(g, |_| [0.7, -0.4, 0.0]);
    let s = dense.compression(Flavor::Homogeneous);
    let ops = (0..2).map(|i| mult(b.component(i)) * dense.derivative(i) + dense.derivative(i) * mult(b.component(i)));
    let sum = ops.fold(M::zeros(g.len(), g.len()), |acc, m| acc + m);
    let oracle = top_singular(&(&s * sum * &s));
    let est = form_norm::commutator_norm(&b, Flavor::Homogeneous).unwrap().value;
    assert!((est - oracle).abs() <= 1e-10 * oracle.max(1.0), "{est} vs {oracle}");
}

#[test]
fn hodge_reconstruction_leaves_form_norm_unchanged() {
    let g = Grid::unit(3, 16).unwrap();
    let b = presets::random_drift(g, 4, 3);
    let q = random::band_limited(g, 5, 2);
    let dec = hodge::hodge_decompose(&b).unwrap();
    let mean = VectorField::from_fn(g, |_| {
        let mut m = [0.0; 3];
        for (i, v) in dec.mean_part.iter().enumerate() {
            m[i] = v.re;
        }
        m
    });
    let rebuilt = mean.add(&dec.c).unwrap().add(&formbound::calculus::matrix_div(&dec.stream)).unwrap();
    let a = MatrixField::zeros(g);
    let direct = form_norm::form_norm(&a, &b, &q, Flavor::Homogeneous).unwrap().value;
    let via = form_norm::form_norm(&a, &rebuilt, &q, Flavor::Homogeneous).unwrap().value;
    assert!((direct - via).abs() <= 1e-8 * direct, "{direct} vs {via}");
}

#[test]
fn symmetric_and_antisymmetric_halves_bracket_the_form() {
    let g = Grid::unit(2, 32).unwrap();
    let cases = [
        ("gradient", presets::gradient(&presets::default_potential(g)), ScalarField::zeros(g)),
        ("stream", presets::stream(&presets::default_stream(g)), presets::default_potential(g)),
        ("random", presets::random_drift(g, 11, 4), random::band_limited(g, 12, 3)),
    ];
    for (name, b, q) in cases {
        let half = b.scale(Complex64::new(0.5, 0.0));
        let sym = SecondOrderOperator::new(g)
            .with_drift(&half)
            .unwrap()
            .with_divergence_drift(&half.scale(Complex64::new(-1.0, 0.0)))
            .unwrap()
            .with_potential(&q)
            .unwrap();
        let s = form_norm::operator_norm(&sym, Flavor::Homogeneous).unwrap().value;
        let k = 0.5 * form_norm::commutator_norm(&b, Flavor::Homogeneous).unwrap().value;
        let full = form_norm::form_norm(&MatrixField::zeros(g), &b, &q, Flavor::Homogeneous).unwrap().value;
        let tol = 1e-6 * full.max(1e-12);
        assert!(full <= s + k + tol, "{name}: {full} > {s} + {k}");
        assert!(full >= s.max(k) - tol, "{name}: {full} < max({s}, {k})");
    }
}

fn log_sine(g: Grid) -> ScalarField {
    // |2 sin(pi x)| capped at its value half a cell from the singularity
    let floor = 2.0 * (PI * 0.5 * g.spacing() / g.period()).sin();
    ScalarField::from_fn(g, |x| (2.0 * (PI * x[0] / g.period()).sin()).abs().max(floor).ln())
}

#[test]
fn log_singular_bmo_is_stable_under_refinement() {
    let norms: Vec<f64> = [256usize, 512]
        .iter()
        .map(|&n| {
            let g = Grid::unit(2, n).unwrap();
            let fam = CubeFamily::dyadic(g, FamilyFlavor::Dyadic);
            oscillation::bmo_norm(&Field::Scalar(log_sine(g)), BmoFlavor::Bmo, 1.0, &fam).unwrap().norm
        })
        .collect();
    assert!(norms[0].is_finite() && norms[0] > 0.0);
    assert!((norms[1] / norms[0] - 1.0).abs() <= 0.1, "{norms:?}");
}

#[test]
fn log_singular_profile_stays_away_from_zero() {
    let g = Grid::unit(2, 256).unwrap();
    let h = g.spacing();
    let deltas = [4.0 * h, 8.0 * h, 16.0 * h, 32.0 * h];
    let p = oscillation::vmo_profile(&Field::Scalar(log_sine(g)), &deltas, 1.0).unwrap();
    let smallest = p.iter().map(|q| q.value).fold(f64::INFINITY, f64::min);
    let largest = p.iter().map(|q| q.value).fold(0.0, f64::max);
    assert!(smallest > 0.5 * largest, "{p:?}");
}
