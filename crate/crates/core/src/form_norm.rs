//! Best constants of the bilinear and quadratic inequalities, estimated as
//! grid-exact operator norms.
//!
//! A form `B(u, v) = <L u, v>` is measured in the energy norm by the
//! compressed operator `R = S L S`, with `S = (-lap)^-1/2` on zero-mean
//! fields or `S = (1 - lap)^-1/2` on all fields. Its norm is the top
//! singular value, found by power iteration on `R* R`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{self, SpectralKind};
use crate::error::{Error, Result};
use crate::fft;
use crate::field::{MatrixField, ScalarField, VectorField};
use crate::grid::Grid;
use crate::hodge::Flavor;
use crate::measure::DiscreteMeasure;
use crate::random;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Stop when the relative change of the estimate falls below this.
pub const EIGEN_TOL: f64 = 1e-8;
/// Target for `|M x - q x| / (q |x|)`.
pub const RESIDUAL_TOL: f64 = 1e-6;
const DEFAULT_BUDGET: usize = 2000;
const START_SEED: u64 = 0x5eed_f00d;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PowerIteration,
    SubspaceSweep,
    GradientAscent,
}

#[derive(Debug, Clone)]
pub struct FormEstimate {
    pub value: f64,
    pub method: Method,
    pub iterations: usize,
    pub residual: f64,
    /// Estimates after each iteration.
    pub history: Vec<f64>,
    pub witness_u: ScalarField,
    pub witness_v: Option<ScalarField>,
}

impl FormEstimate {
    fn zero(grid: Grid, method: Method) -> Self {
        Self {
            value: 0.0,
            method,
            iterations: 0,
            residual: 0.0,
            history: vec![0.0],
            witness_u: ScalarField::zeros(grid),
            witness_v: None,
        }
    }

    /// True when the recorded estimates never decrease (up to rounding).
    pub fn is_monotone(&self) -> bool {
        self.history.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12))
    }
}

/// Frequencies and the compression symbol, laid out like the samples.
struct Spectral {
    grid: Grid,
    kappa: Vec<Vec<f64>>,
    s: Vec<f64>,
}

impl Spectral {
    fn new(grid: Grid, flavor: Flavor) -> Self {
        let kind = match flavor {
            Flavor::Homogeneous => SpectralKind::RieszHalf,
            Flavor::Inhomogeneous => SpectralKind::BesselRieszHalf,
        };
        let k = grid.wavenumbers();
        let mut kappa = vec![vec![0.0; grid.len()]; grid.dim()];
        let mut s = vec![0.0; grid.len()];
        let n = grid.points_per_axis();
        for i in 0..grid.len() {
            let idx = grid.multi(i);
            let mut ksq = 0.0;
            for a in 0..grid.dim() {
                kappa[a][i] = k[idx[a] % n];
                ksq += kappa[a][i] * kappa[a][i];
            }
            s[i] = kind.symbol(ksq);
        }
        Self { grid, kappa, s }
    }

    fn to_real(&self, mut d: Vec<Complex64>) -> Vec<Complex64> {
        fft::inverse(&self.grid, &mut d);
        d
    }

    fn to_spec(&self, mut d: Vec<Complex64>) -> Vec<Complex64> {
        fft::forward(&self.grid, &mut d);
        d
    }

    fn scaled(&self, x: &[Complex64]) -> Vec<Complex64> {
        x.par_iter().zip(&self.s).map(|(v, s)| v * s).collect()
    }

    /// Real-space `d_a` of a spectrum.
    fn derivative(&self, x: &[Complex64], a: usize) -> Vec<Complex64> {
        self.to_real(x.par_iter().zip(&self.kappa[a]).map(|(v, k)| v * I * k).collect())
    }

    /// `S (w + div F)` for real-space `w` and flux components `F`.
    fn compress(&self, w: Option<Vec<Complex64>>, flux: Vec<Option<Vec<Complex64>>>) -> Vec<Complex64> {
        let mut out = match w {
            Some(w) => self.to_spec(w),
            None => vec![Complex64::default(); self.grid.len()],
        };
        for (a, f) in flux.into_iter().enumerate() {
            if let Some(f) = f {
                let fs = self.to_spec(f);
                out.par_iter_mut().zip(fs.par_iter().zip(&self.kappa[a])).for_each(|(o, (v, k))| *o += v * I * k);
            }
        }
        out.par_iter_mut().zip(&self.s).for_each(|(o, s)| *o *= s);
        out
    }
}

fn nonzero(f: &ScalarField) -> Option<&[Complex64]> {
    if f.values().iter().any(|v| *v != Complex64::default()) {
        Some(f.values())
    } else {
        None
    }
}

fn accumulate(slot: &mut Option<Vec<Complex64>>, coeff: &[Complex64], field: &[Complex64], conj: bool, sign: f64) {
    let out = slot.get_or_insert_with(|| vec![Complex64::default(); field.len()]);
    out.par_iter_mut().zip(coeff.par_iter().zip(field)).for_each(|(o, (c, f))| {
        let c = if conj { c.conj() } else { *c };
        *o += sign * c * f;
    });
}

/// `L u = div(A grad u) + b . grad u + div(d u) + q u`, assembled matrix-free.
#[derive(Debug, Clone)]
pub struct SecondOrderOperator {
    grid: Grid,
    a: Option<MatrixField>,
    b: Option<VectorField>,
    d: Option<VectorField>,
    q: Option<ScalarField>,
}

impl SecondOrderOperator {
    pub fn new(grid: Grid) -> Self {
        Self { grid, a: None, b: None, d: None, q: None }
    }

    pub fn with_principal(mut self, a: &MatrixField) -> Result<Self> {
        self.grid.ensure_same(a.grid())?;
        a.check_finite()?;
        self.a = (a.max_abs() > 0.0).then(|| a.clone());
        Ok(self)
    }

    pub fn with_drift(mut self, b: &VectorField) -> Result<Self> {
        self.grid.ensure_same(b.grid())?;
        b.check_finite()?;
        self.b = (b.max_abs() > 0.0).then(|| b.clone());
        Ok(self)
    }

    /// Divergence-form drift `u -> div(d u)`.
    pub fn with_divergence_drift(mut self, d: &VectorField) -> Result<Self> {
        self.grid.ensure_same(d.grid())?;
        d.check_finite()?;
        self.d = (d.max_abs() > 0.0).then(|| d.clone());
        Ok(self)
    }

    pub fn with_potential(mut self, q: &ScalarField) -> Result<Self> {
        self.grid.ensure_same(q.grid())?;
        q.check_finite()?;
        self.q = (q.max_abs() > 0.0).then(|| q.clone());
        Ok(self)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_none() && self.b.is_none() && self.d.is_none() && self.q.is_none()
    }

    /// `R x = S L S x` on spectra.
    fn apply(&self, sp: &Spectral, x: &[Complex64]) -> Vec<Complex64> {
        let dim = self.grid.dim();
        let u_hat = sp.scaled(x);
        let need_grad = self.a.is_some() || self.b.is_some();
        let need_u = self.q.is_some() || self.d.is_some();
        let grads: Vec<Vec<Complex64>> = if need_grad { (0..dim).map(|a| sp.derivative(&u_hat, a)).collect() } else { Vec::new() };
        let u = if need_u { Some(sp.to_real(u_hat.clone())) } else { None };
        let mut w: Option<Vec<Complex64>> = None;
        let mut flux: Vec<Option<Vec<Complex64>>> = vec![None; dim];
        if let Some(b) = &self.b {
            for j in 0..dim {
                if let Some(c) = nonzero(b.component(j)) {
                    accumulate(&mut w, c, &grads[j], false, 1.0);
                }
            }
        }
        if let (Some(q), Some(u)) = (&self.q, &u) {
            accumulate(&mut w, q.values(), u, false, 1.0);
        }
        if let Some(a) = &self.a {
            for (i, slot) in flux.iter_mut().enumerate() {
                for (j, g) in grads.iter().enumerate() {
                    if let Some(c) = nonzero(a.entry(i, j)) {
                        accumulate(slot, c, g, false, 1.0);
                    }
                }
            }
        }
        if let (Some(d), Some(u)) = (&self.d, &u) {
            for (i, slot) in flux.iter_mut().enumerate() {
                if let Some(c) = nonzero(d.component(i)) {
                    accumulate(slot, c, u, false, 1.0);
                }
            }
        }
        sp.compress(w, flux)
    }

    /// `R* y = S L* S y` with `L* v = div(A^H grad v) - div(conj(b) v) - conj(d) . grad v + conj(q) v`.
    fn apply_adjoint(&self, sp: &Spectral, y: &[Complex64]) -> Vec<Complex64> {
        let dim = self.grid.dim();
        let v_hat = sp.scaled(y);
        let need_grad = self.a.is_some() || self.d.is_some();
        let need_v = self.q.is_some() || self.b.is_some();
        let grads: Vec<Vec<Complex64>> = if need_grad { (0..dim).map(|a| sp.derivative(&v_hat, a)).collect() } else { Vec::new() };
        let v = if need_v { Some(sp.to_real(v_hat.clone())) } else { None };
        let mut w: Option<Vec<Complex64>> = None;
        let mut flux: Vec<Option<Vec<Complex64>>> = vec![None; dim];
        if let (Some(q), Some(v)) = (&self.q, &v) {
            accumulate(&mut w, q.values(), v, true, 1.0);
        }
        if let Some(d) = &self.d {
            for j in 0..dim {
                if let Some(c) = nonzero(d.component(j)) {
                    accumulate(&mut w, c, &grads[j], true, -1.0);
                }
            }
        }
        if let Some(a) = &self.a {
            for (i, slot) in flux.iter_mut().enumerate() {
                for (j, g) in grads.iter().enumerate() {
                    if let Some(c) = nonzero(a.entry(j, i)) {
                        accumulate(slot, c, g, true, 1.0);
                    }
                }
            }
        }
        if let (Some(b), Some(v)) = (&self.b, &v) {
            for (i, slot) in flux.iter_mut().enumerate() {
                if let Some(c) = nonzero(b.component(i)) {
                    accumulate(slot, c, v, true, -1.0);
                }
            }
        }
        sp.compress(w, flux)
    }

    /// `B(u, v) = <L u, v>` as a cell sum, for checks.
    pub fn pairing(&self, u: &ScalarField, v: &ScalarField) -> Result<Complex64> {
        self.grid.ensure_same(u.grid())?;
        self.grid.ensure_same(v.grid())?;
        let sp = Spectral { grid: self.grid, kappa: Spectral::new(self.grid, Flavor::Inhomogeneous).kappa, s: vec![1.0; self.grid.len()] };
        let mut x = u.values().to_vec();
        fft::forward(&self.grid, &mut x);
        let mut lu = self.apply(&sp, &x);
        fft::inverse(&self.grid, &mut lu);
        let w = self.grid.cell_volume();
        let re = fft::ordered_sum(&lu.iter().zip(v.values()).map(|(a, b)| a * b.conj()).collect::<Vec<_>>(), |z| z.re);
        let im = fft::ordered_sum(&lu.iter().zip(v.values()).map(|(a, b)| a * b.conj()).collect::<Vec<_>>(), |z| z.im);
        Ok(Complex64::new(re, im) * w)
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let prods: Vec<Complex64> = a.par_iter().zip(b).map(|(x, y)| x * y.conj()).collect();
    Complex64::new(fft::ordered_sum(&prods, |z| z.re), fft::ordered_sum(&prods, |z| z.im))
}

fn norm(a: &[Complex64]) -> f64 {
    fft::ordered_sum(a, |z| z.norm_sqr()).sqrt()
}

/// Deterministic start vector: white noise with the zero mode removed for
/// homogeneous problems.
fn start_vector(sp: &Spectral, flavor: Flavor) -> Vec<Complex64> {
    let mut x = random::white_noise(sp.grid, START_SEED).into_values();
    fft::forward(&sp.grid, &mut x);
    if flavor == Flavor::Homogeneous {
        x[0] = Complex64::default();
    }
    let n = norm(&x);
    x.iter_mut().for_each(|v| *v /= n);
    x
}

struct PowerResult {
    value: f64,
    x: Vec<Complex64>,
    history: Vec<f64>,
    residual: f64,
    iterations: usize,
}

/// Power iteration for the top eigenvalue of a Hermitian positive
/// semidefinite map.
fn power_iterate<M>(apply: M, mut x: Vec<Complex64>, budget: usize) -> Result<PowerResult>
where
    M: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let mut history = Vec::new();
    let mut prev = f64::NAN;
    for it in 1..=budget {
        let mx = apply(&x);
        let q = inner(&mx, &x).re;
        history.push(q);
        let mnorm = norm(&mx);
        if mnorm == 0.0 || q <= 0.0 {
            return Ok(PowerResult { value: 0.0, x, history, residual: 0.0, iterations: it });
        }
        let residual =
            (fft::ordered_sum(&mx.iter().zip(&x).map(|(a, b)| a - b * q).collect::<Vec<_>>(), |z| z.norm_sqr())).sqrt() / q;
        let change = ((q - prev) / q).abs();
        if change <= EIGEN_TOL && residual <= RESIDUAL_TOL {
            return Ok(PowerResult { value: q, x, history, residual, iterations: it });
        }
        if it == budget {
            if change <= EIGEN_TOL {
                return Ok(PowerResult { value: q, x, history, residual, iterations: it });
            }
            return Err(Error::NotConverged { what: "power iteration", iterations: it, residual: change });
        }
        prev = q;
        x = mx.into_iter().map(|v| v / mnorm).collect();
    }
    unreachable!("budget is positive")
}

fn field_from_spectrum(grid: Grid, mut d: Vec<Complex64>) -> ScalarField {
    fft::inverse(&grid, &mut d);
    ScalarField::new(grid, d).expect("sized")
}

/// Norm of `R = S L S`.
pub fn operator_norm(op: &SecondOrderOperator, flavor: Flavor) -> Result<FormEstimate> {
    operator_norm_with_budget(op, flavor, DEFAULT_BUDGET)
}

pub fn operator_norm_with_budget(op: &SecondOrderOperator, flavor: Flavor, budget: usize) -> Result<FormEstimate> {
    let grid = op.grid;
    if op.is_zero() {
        return Ok(FormEstimate::zero(grid, Method::PowerIteration));
    }
    let sp = Spectral::new(grid, flavor);
    let x0 = start_vector(&sp, flavor);
    let res = power_iterate(|x| op.apply_adjoint(&sp, &op.apply(&sp, x)), x0, budget)?;
    let rx = op.apply(&sp, &res.x);
    let rn = norm(&rx);
    let v = if rn > 0.0 { Some(field_from_spectrum(grid, sp.scaled(&rx.iter().map(|z| z / rn).collect::<Vec<_>>()))) } else { None };
    Ok(FormEstimate {
        value: res.value.sqrt(),
        method: Method::PowerIteration,
        iterations: res.iterations,
        residual: res.residual,
        history: res.history.iter().map(|q| q.max(0.0).sqrt()).collect(),
        witness_u: field_from_spectrum(grid, sp.scaled(&res.x)),
        witness_v: v,
    })
}

/// Best constant in `|int (-(A grad u).grad v + b.grad u v + q u v)| <= C |u| |v|`.
pub fn form_norm(a: &MatrixField, b: &VectorField, q: &ScalarField, flavor: Flavor) -> Result<FormEstimate> {
    let op = SecondOrderOperator::new(*a.grid()).with_principal(a)?.with_drift(b)?.with_potential(q)?;
    operator_norm(&op, flavor)
}

/// Best constant in `int |u|^2 dmu <= C |u|^2`: top eigenvalue of `S rho S`.
pub fn trace_constant(mu: &DiscreteMeasure, flavor: Flavor) -> Result<FormEstimate> {
    let grid = *mu.grid();
    if mu.is_zero() {
        return Ok(FormEstimate::zero(grid, Method::PowerIteration));
    }
    let rho = mu.density();
    let op = SecondOrderOperator::new(grid).with_potential(&rho)?;
    let sp = Spectral::new(grid, flavor);
    let res = power_iterate(|x| op.apply(&sp, x), start_vector(&sp, flavor), DEFAULT_BUDGET)?;
    Ok(FormEstimate {
        value: res.value,
        method: Method::PowerIteration,
        iterations: res.iterations,
        residual: res.residual,
        history: res.history,
        witness_u: field_from_spectrum(grid, sp.scaled(&res.x)),
        witness_v: None,
    })
}

/// The antisymmetric form `<b, conj(u) grad v - v grad conj(u)>`, i.e. the
/// operator `v -> b . grad v + div(b v)`.
pub fn commutator_operator(b: &VectorField) -> Result<SecondOrderOperator> {
    SecondOrderOperator::new(*b.grid()).with_drift(b)?.with_divergence_drift(b)
}

pub fn commutator_norm(b: &VectorField, flavor: Flavor) -> Result<FormEstimate> {
    operator_norm(&commutator_operator(b)?, flavor)
}

/// Twice the norm of `b . grad + (1/2) div b`, the same operator assembled
/// with the divergence taken spectrally.
pub fn commutator_norm_by_parts(b: &VectorField, flavor: Flavor) -> Result<FormEstimate> {
    let half_div = calculus::div(b).scale(Complex64::new(0.5, 0.0));
    let op = SecondOrderOperator::new(*b.grid()).with_drift(b)?.with_potential(&half_div)?;
    let mut est = operator_norm(&op, flavor)?;
    est.value *= 2.0;
    est.history.iter_mut().for_each(|h| *h *= 2.0);
    Ok(est)
}

#[derive(Debug, Clone)]
pub struct NonlinearReport {
    pub c_lower: FormEstimate,
    pub c_trace: FormEstimate,
    pub sandwich_ok: bool,
    pub stagnated: bool,
}

impl NonlinearReport {
    pub fn ratio(&self) -> f64 {
        if self.c_lower.value > 0.0 {
            self.c_trace.value / self.c_lower.value
        } else {
            f64::NAN
        }
    }
}

const SMOOTH: f64 = 1e-8;
const RESTARTS: usize = 20;
const ASCENT_STEPS: usize = 80;
const ASCENT_TOL: f64 = 1e-6;

fn smooth_abs(x: f64) -> f64 {
    (x * x + SMOOTH * SMOOTH).sqrt()
}

/// Value and gradient of `J(x) = int |b.grad u| |u|` with `u = S x`.
struct Ascent<'a> {
    sp: &'a Spectral,
    b: Vec<Vec<f64>>,
    w: f64,
}

impl Ascent<'_> {
    fn value_and_gradient(&self, x: &[Complex64], want_grad: bool) -> (f64, Option<Vec<Complex64>>) {
        let sp = self.sp;
        let dim = sp.grid.dim();
        let u_hat = sp.scaled(x);
        let u = sp.to_real(u_hat.clone());
        let grads: Vec<Vec<Complex64>> = (0..dim).map(|a| sp.derivative(&u_hat, a)).collect();
        let g: Vec<f64> = (0..sp.grid.len()).into_par_iter().map(|i| (0..dim).map(|a| self.b[a][i] * grads[a][i].re).sum()).collect();
        let vals: Vec<f64> = g.par_iter().zip(&u).map(|(gi, ui)| smooth_abs(*gi) * smooth_abs(ui.re)).collect();
        let j = fft::ordered_sum(&vals, |v| *v) * self.w;
        if !want_grad {
            return (j, None);
        }
        // dJ = int du [ -div(b phi'(g) phi(u)) + phi(g) phi'(u) ]
        let coef: Vec<f64> = g.par_iter().zip(&u).map(|(gi, ui)| gi / smooth_abs(*gi) * smooth_abs(ui.re)).collect();
        let w_term: Vec<Complex64> =
            g.par_iter().zip(&u).map(|(gi, ui)| Complex64::new(smooth_abs(*gi) * ui.re / smooth_abs(ui.re), 0.0)).collect();
        let flux: Vec<Option<Vec<Complex64>>> = (0..dim)
            .map(|a| Some(coef.par_iter().zip(&self.b[a]).map(|(c, b)| Complex64::new(-c * b, 0.0)).collect()))
            .collect();
        let mut grad = sp.compress(Some(w_term), flux);
        let scale = self.w / sp.grid.len() as f64;
        grad.iter_mut().for_each(|v| *v *= scale);
        (j, Some(grad))
    }

    /// Spectral norm of `x` for which `|grad S x|_2 = 1`.
    fn sphere_radius(&self) -> f64 {
        (self.sp.grid.len() as f64 / self.w).sqrt()
    }

    /// Projected ascent on the energy sphere with backtracking.
    fn run(&self, mut x: Vec<Complex64>) -> (f64, Vec<Complex64>, Vec<f64>) {
        let radius = self.sphere_radius();
        let n0 = norm(&x);
        x.iter_mut().for_each(|v| *v *= radius / n0);
        let (mut j, mut grad) = self.value_and_gradient(&x, true);
        let mut history = vec![j];
        let mut step = 0.5 * radius;
        for _ in 0..ASCENT_STEPS {
            let gr = grad.take().expect("gradient");
            // remove the radial part of the gradient
            let radial = inner(&gr, &x).re / (radius * radius);
            let tangent: Vec<Complex64> = gr.iter().zip(&x).map(|(g, xv)| g - xv * radial).collect();
            let tn = norm(&tangent);
            if tn == 0.0 {
                break;
            }
            let mut improved = false;
            while step > 1e-10 * radius {
                let mut trial: Vec<Complex64> = x.iter().zip(&tangent).map(|(xv, t)| xv + t * (step / tn)).collect();
                let trial_norm = norm(&trial);
                trial.iter_mut().for_each(|v| *v *= radius / trial_norm);
                let (jt, _) = self.value_and_gradient(&trial, false);
                if jt > j {
                    x = trial;
                    j = jt;
                    improved = true;
                    step = (step * 1.5).min(radius);
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
            history.push(j);
            if history.len() > 2 && (j - history[history.len() - 2]) <= ASCENT_TOL * j {
                break;
            }
            grad = self.value_and_gradient(&x, true).1;
        }
        (j, x, history)
    }
}

/// Lower bound for `C = sup int |b.grad u| |u| / |grad u|^2` by gradient
/// ascent over real zero-mean `u`, against `c = sqrt(trace constant of |b|^2)`.
pub fn nonlinear_form_constant(b: &VectorField, seed: u64) -> Result<NonlinearReport> {
    let grid = *b.grid();
    b.check_finite()?;
    let scale = b.max_abs();
    if b.components().iter().any(|c| c.max_imag() > 1e-12 * scale.max(1.0)) {
        return Err(Error::InvalidParameter("nonlinear form constant needs a real drift".into()));
    }
    let mu = DiscreteMeasure::from_density(&b.magnitude_sq())?;
    let mut c_trace = trace_constant(&mu, Flavor::Homogeneous)?;
    c_trace.value = c_trace.value.sqrt();
    c_trace.history.iter_mut().for_each(|h| *h = h.max(0.0).sqrt());
    if scale == 0.0 {
        return Ok(NonlinearReport {
            c_lower: FormEstimate::zero(grid, Method::GradientAscent),
            c_trace,
            sandwich_ok: true,
            stagnated: false,
        });
    }
    let sp = Spectral::new(grid, Flavor::Homogeneous);
    let ascent = Ascent { sp: &sp, b: b.components().iter().map(|c| c.real_parts()).collect(), w: grid.cell_volume() };
    // trace witness first, then random restarts
    let mut starts = Vec::with_capacity(RESTARTS + 1);
    let mut witness = c_trace.witness_u.map(|v| Complex64::new(v.re, 0.0)).into_values();
    fft::forward(&grid, &mut witness);
    let witness: Vec<Complex64> = witness.iter().zip(&sp.s).map(|(v, s)| if *s > 0.0 { v / s } else { Complex64::default() }).collect();
    starts.push(witness);
    for r in 0..RESTARTS {
        let f = random::band_limited(grid, seed.wrapping_add(r as u64), 2 + r % 4);
        let mut x = f.into_values();
        fft::forward(&grid, &mut x);
        x[0] = Complex64::default();
        starts.push(x);
    }
    let runs: Vec<(f64, Vec<Complex64>, Vec<f64>)> = starts.into_par_iter().map(|x| ascent.run(x)).collect();
    let (best, _) = runs.iter().enumerate().fold((0usize, f64::NEG_INFINITY), |acc, (i, r)| if r.0 > acc.1 { (i, r.0) } else { acc });
    let (value, x, history) = runs.into_iter().nth(best).expect("at least one start");
    let stagnated = history.len() <= 1;
    let n = grid.dim() as f64;
    let c_lower = FormEstimate {
        value,
        method: Method::GradientAscent,
        iterations: history.len() - 1,
        residual: 0.0,
        history,
        witness_u: field_from_spectrum(grid, sp.scaled(&x)),
        witness_v: None,
    };
    let sandwich_ok = c_lower.value <= c_trace.value * 1.05 && c_trace.value <= 2.0 * n.sqrt() * c_lower.value * 1.25;
    Ok(NonlinearReport { c_lower, c_trace, sandwich_ok, stagnated })
}
