//! Theorem pipelines: run the decompositions and the admissibility tests on
//! a coefficient set and assemble a structured verdict.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{self, SpectralKind};
use crate::error::{Error, Result};
use crate::field::{Field, MatrixField, ScalarField, VectorField};
use crate::form_norm;
use crate::grid::Grid;
use crate::hodge::{self, Flavor};
use crate::measure::{self, DiscreteMeasure, Witness};
use crate::oscillation::{self, BmoFlavor, CubeFamily, FamilyFlavor, ProfilePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Homogeneous,
    Inhomogeneous,
    Magnetic,
    Infinitesimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    CertifiedBounded,
    CertifiedUnboundedN2,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Must pass for a bounded verdict.
    Necessary,
    /// Sufficiency probe; failure makes the verdict inconclusive.
    Sufficient,
    /// Recorded for cross-checking only.
    Informational,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub id: String,
    pub role: Role,
    pub constant: f64,
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl ConditionRecord {
    fn bounded(id: &str, role: Role, constant: f64, threshold: f64) -> Self {
        Self {
            id: id.into(),
            role,
            constant,
            threshold: Some(threshold),
            pass: Some(constant.is_finite() && constant <= threshold),
            witness: None,
        }
    }

    fn info(id: &str, constant: f64) -> Self {
        Self { id: id.into(), role: Role::Informational, constant, threshold: None, pass: None, witness: None }
    }

    fn with_witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }
}

/// Pass envelopes. The equivalences are qualitative, so these are
/// engineering choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub carleson: f64,
    pub ball_growth: f64,
    pub bmo: f64,
    pub fefferman_phong: f64,
    pub trace: f64,
    pub form: f64,
    /// Relative size of `div b` and absolute `|q|_1` treated as zero in two dimensions.
    pub n2_tolerance: f64,
    /// Fefferman-Phong exponent.
    pub epsilon: f64,
    /// Oscillation exponent.
    pub bmo_exponent: f64,
    /// Required profile ratio per halving of delta.
    pub decay_factor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            carleson: 10.0,
            ball_growth: 10.0,
            bmo: 10.0,
            fefferman_phong: 10.0,
            trace: 10.0,
            form: 10.0,
            n2_tolerance: 1e-6,
            epsilon: 0.5,
            bmo_exponent: 1.0,
            decay_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub dim: usize,
    pub points_per_axis: usize,
    pub period: f64,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profiles {
    pub vmo: Vec<ProfilePoint>,
    pub local_trace: Vec<ProfilePoint>,
    /// `value(delta) / value(delta / 2)` for consecutive entries.
    pub vmo_ratios: Vec<f64>,
    pub local_trace_ratios: Vec<f64>,
    pub vmo_decays: bool,
    pub local_trace_decays: bool,
    /// Some halving changes the VMO profile by less than 1.2x.
    pub vmo_flat: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub pipeline: Pipeline,
    pub overall: Overall,
    pub records: Vec<ConditionRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles: Option<Profiles>,
    pub provenance: Provenance,
    /// Sub-estimates that failed to converge.
    pub failures: Vec<String>,
}

impl Verdict {
    fn new(pipeline: Pipeline, grid: &Grid, thresholds: Thresholds) -> Self {
        Self {
            pipeline,
            overall: Overall::Inconclusive,
            records: Vec::new(),
            form_constant: None,
            profiles: None,
            provenance: Provenance {
                dim: grid.dim(),
                points_per_axis: grid.points_per_axis(),
                period: grid.period(),
                thresholds,
            },
            failures: Vec::new(),
        }
    }

    pub fn record(&self, id: &str) -> Option<&ConditionRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    fn conclude(&mut self) {
        if self.overall == Overall::CertifiedUnboundedN2 {
            return;
        }
        let failed = |role: Role| self.records.iter().any(|r| r.role == role && r.pass == Some(false));
        self.overall = if self.failures.is_empty() && !failed(Role::Necessary) && !failed(Role::Sufficient) {
            Overall::CertifiedBounded
        } else {
            Overall::Inconclusive
        };
    }

    /// Non-convergence becomes an inconclusive verdict; other errors propagate.
    fn absorb<T>(&mut self, what: &str, r: Result<T>) -> Result<Option<T>> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(e @ Error::NotConverged { .. }) => {
                self.failures.push(format!("{what}: {e}"));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

fn check_same(a: &MatrixField, b: &VectorField, q: &ScalarField) -> Result<Grid> {
    let grid = *a.grid();
    if b.grid() != &grid || q.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    Ok(grid)
}

fn l2(v: &VectorField) -> f64 {
    v.magnitude_sq().integral().re.max(0.0).sqrt()
}

fn l1(q: &ScalarField) -> f64 {
    q.map(|v| Complex64::new(v.norm(), 0.0)).integral().re
}

fn density(parts: &[ScalarField], grid: Grid) -> Result<DiscreteMeasure> {
    let mut rho = ScalarField::zeros(grid);
    for p in parts {
        rho = rho.add(p)?;
    }
    DiscreteMeasure::from_density(&rho.map(|v| Complex64::new(v.re.max(0.0), 0.0)))
}

fn abs_field(q: &ScalarField) -> ScalarField {
    q.map(|v| Complex64::new(v.norm(), 0.0))
}

fn bmo_record(id: &str, f: &MatrixField, flavor: BmoFlavor, t: &Thresholds) -> Result<ConditionRecord> {
    let family = CubeFamily::dyadic(*f.grid(), FamilyFlavor::DyadicPlusHalfShifts);
    let rep = oscillation::bmo_norm(&Field::Matrix(f.clone()), flavor, t.bmo_exponent, &family)?;
    let w = Witness::CellCube { corner: rep.worst_cube.corner, side: rep.worst_cube.side };
    Ok(ConditionRecord::bounded(id, Role::Necessary, rep.norm, t.bmo).with_witness(w))
}

/// Theorem I pipeline on the homogeneous energy space.
pub fn assess_homogeneous(a: &MatrixField, b: &VectorField, q: &ScalarField, t: &Thresholds) -> Result<Verdict> {
    assess_homogeneous_as(Pipeline::Homogeneous, a, b, q, t)
}

fn assess_homogeneous_as(
    pipeline: Pipeline,
    a: &MatrixField,
    b: &VectorField,
    q: &ScalarField,
    t: &Thresholds,
) -> Result<Verdict> {
    let grid = check_same(a, b, q)?;
    let mut v = Verdict::new(pipeline, &grid, *t);
    let red = hodge::reduce_principal(a, b)?;
    v.records.push(ConditionRecord {
        role: Role::Necessary,
        pass: Some(red.s_inf.is_finite()),
        ..ConditionRecord::info("principal_sup", red.s_inf)
    });
    let dec = hodge::hodge_decompose(&red.b1)?;

    let (form, rest) = rayon::join(
        || form_norm::form_norm(a, b, q, Flavor::Homogeneous),
        || -> Result<Vec<ConditionRecord>> {
            let mut recs = Vec::new();
            if grid.dim() == 2 {
                let scale = l2(&red.b1);
                let div_rel = if scale > 0.0 { l2(&dec.c) / scale } else { 0.0 };
                recs.push(ConditionRecord::bounded("n2_div_b", Role::Necessary, div_rel, t.n2_tolerance));
                recs.push(ConditionRecord::bounded("n2_q", Role::Necessary, l1(q), t.n2_tolerance));
                recs.push(bmo_record("bmo_stream", &dec.stream, BmoFlavor::Bmo, t)?);
                return Ok(recs);
            }
            recs.push(bmo_record("bmo_stream", &dec.stream, BmoFlavor::Bmo, t)?);
            let gq = hodge::potential_part(q)?;
            let mu = density(&[dec.c.magnitude_sq(), gq.magnitude_sq()], grid)?;
            let car = measure::carleson_test(&mu);
            recs.push(ConditionRecord::bounded("carleson", Role::Necessary, car.constant, t.carleson).with_witness(car.witness));
            let radii = measure::default_radii(&grid);
            let bg = measure::ball_growth_test(&mu, &radii)?;
            recs.push(ConditionRecord::bounded("ball_growth", Role::Necessary, bg.constant, t.ball_growth).with_witness(bg.witness));
            let fp = measure::fefferman_phong_test(&mu.density(), t.epsilon, &radii)?;
            recs.push(
                ConditionRecord::bounded("fefferman_phong", Role::Sufficient, fp.constant, t.fefferman_phong).with_witness(fp.witness),
            );
            Ok(recs)
        },
    );
    let rest = rest?;
    let n2_fail = rest.iter().any(|r| r.id.starts_with("n2_") && r.pass == Some(false));
    v.records.extend(rest);
    if let Some(est) = v.absorb("form_norm", form)? {
        v.form_constant = Some(est.value);
        v.records.push(ConditionRecord::bounded("form_norm", Role::Necessary, est.value, t.form));
    }
    if grid.dim() == 2 && !n2_fail && a.max_abs() == 0.0 && q.max_abs() == 0.0 {
        // divergence-free drift: the form is half the commutator
        if let Some(c) = v.absorb("commutator_norm", form_norm::commutator_norm(b, Flavor::Homogeneous))? {
            v.records.push(ConditionRecord::info("half_commutator", 0.5 * c.value));
        }
    }
    if n2_fail {
        v.overall = Overall::CertifiedUnboundedN2;
    }
    v.conclude();
    Ok(v)
}

/// Theorem 5.1 pipeline on `W^{1,2}`.
pub fn assess_inhomogeneous(a: &MatrixField, b: &VectorField, q: &ScalarField, t: &Thresholds) -> Result<Verdict> {
    let grid = check_same(a, b, q)?;
    let mut v = Verdict::new(Pipeline::Inhomogeneous, &grid, *t);
    let red = hodge::reduce_principal(a, b)?;
    v.records.push(ConditionRecord {
        role: Role::Necessary,
        pass: Some(red.s_inf.is_finite()),
        ..ConditionRecord::info("principal_sup", red.s_inf)
    });
    let dec = hodge::inhomogeneous_decompose(&red.b1, q)?;
    v.records.push(bmo_record("bmo_sharp_stream", &dec.stream, BmoFlavor::BmoSharp, t)?);
    let mu = density(&[dec.c.magnitude_sq(), dec.h.magnitude_sq(), abs_field(&dec.gamma)], grid)?;
    let (form, trace) = rayon::join(
        || form_norm::form_norm(a, b, q, Flavor::Inhomogeneous),
        || form_norm::trace_constant(&mu, Flavor::Inhomogeneous),
    );
    let inh = measure::inhomogeneous_variants(&mu, &[]);
    v.records.push(
        ConditionRecord::bounded("carleson_truncated", Role::Necessary, inh.carleson.constant, t.carleson)
            .with_witness(inh.carleson.witness),
    );
    if let Some(tr) = v.absorb("trace_constant", trace)? {
        v.records.push(ConditionRecord::bounded("trace_inhomogeneous", Role::Necessary, tr.value, t.trace));
    }
    // strengthened c-condition
    let bessel = |f: &ScalarField| calculus::spectral(SpectralKind::BesselInv, f, calculus::MeanPolicy::Annihilate);
    let div_part = bessel(&calculus::div(&red.b1))?;
    let b_part = red.b1.try_map_components(bessel)?;
    let strong = density(&[div_part.map(|z| Complex64::new(z.norm_sqr(), 0.0)), b_part.magnitude_sq()], grid)?;
    let strong_rep = measure::inhomogeneous_variants(&strong, &[]).carleson;
    v.records.push(
        ConditionRecord::bounded("carleson_strengthened_c", Role::Necessary, strong_rep.constant, t.carleson)
            .with_witness(strong_rep.witness),
    );
    let fp = measure::fefferman_phong_test(&mu.density(), t.epsilon, &measure::default_radii(&grid))?;
    v.records.push(
        ConditionRecord::bounded("fefferman_phong", Role::Sufficient, fp.constant, t.fefferman_phong).with_witness(fp.witness),
    );
    if let Some(est) = v.absorb("form_norm", form)? {
        v.form_constant = Some(est.value);
        v.records.push(ConditionRecord::bounded("form_norm", Role::Necessary, est.value, t.form));
    }
    v.conclude();
    Ok(v)
}

/// Theorem 3.4: `a.grad` and `q + |a|^2` through the homogeneous pipeline.
pub fn assess_magnetic(a: &VectorField, q: &ScalarField, t: &Thresholds) -> Result<Verdict> {
    let grid = *a.grid();
    let scale = a.max_abs();
    if a.components().iter().any(|c| c.max_imag() > 1e-12 * scale.max(1.0)) {
        return Err(Error::InvalidParameter("magnetic potential must be real".into()));
    }
    let q_eff = q.add(&a.magnitude_sq())?;
    assess_homogeneous_as(Pipeline::Magnetic, &MatrixField::zeros(grid), a, &q_eff, t)
}

fn ratios(profile: &[ProfilePoint]) -> Vec<f64> {
    profile
        .windows(2)
        .map(|w| if w[0].value > 0.0 { w[1].value / w[0].value } else if w[1].value > 0.0 { f64::INFINITY } else { f64::NAN })
        .collect()
}

fn decays(profile: &[ProfilePoint], factor: f64) -> bool {
    profile.windows(2).all(|w| w[1].value == 0.0 || w[1].value >= factor * w[0].value)
}

/// Top `count` aligned cubes of side `side` cells by mass.
fn heaviest_cubes(mu: &DiscreteMeasure, side: usize, count: usize) -> Vec<Vec<bool>> {
    let grid = *mu.grid();
    let per = grid.points_per_axis() / side;
    let dim = grid.dim();
    let mut mass = vec![0.0; per.pow(dim as u32)];
    let key = |i: usize| {
        let idx = grid.multi(i);
        (0..dim).fold(0, |acc, a| acc * per + idx[a] / side)
    };
    for (i, m) in mu.masses().iter().enumerate() {
        mass[key(i)] += m;
    }
    let mut order: Vec<usize> = (0..mass.len()).filter(|&c| mass[c] > 0.0).collect();
    order.sort_by(|&x, &y| mass[y].total_cmp(&mass[x]).then(x.cmp(&y)));
    order.into_iter().take(count).map(|c| (0..grid.len()).map(|i| key(i) == c).collect()).collect()
}

/// Theorem 6.1: VMO profile of the stream part and local trace constants.
pub fn assess_infinitesimal(b: &VectorField, q: &ScalarField, deltas: &[f64], t: &Thresholds) -> Result<Verdict> {
    let grid = *b.grid();
    grid.ensure_same(q.grid())?;
    let mut v = Verdict::new(Pipeline::Infinitesimal, &grid, *t);
    let dec = hodge::inhomogeneous_decompose(b, q)?;
    let vmo = oscillation::vmo_profile(&Field::Matrix(dec.stream.clone()), deltas, t.bmo_exponent)?;
    let mu = density(&[dec.c.magnitude_sq(), dec.h.magnitude_sq(), abs_field(&dec.gamma)], grid)?;
    let h = grid.spacing();
    let mut local = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let side = ((d / h) * (1.0 + 1e-12)).floor() as usize;
        let side = side.next_power_of_two().min(grid.points_per_axis());
        let mut best = 0.0f64;
        for mask in heaviest_cubes(&mu, side, 2) {
            let restricted = mu.restrict(|i| mask[i]);
            if let Some(est) = v.absorb("local_trace", form_norm::trace_constant(&restricted, Flavor::Inhomogeneous))? {
                best = best.max(est.value);
            }
        }
        local.push(ProfilePoint { delta: d, value: best });
    }
    let profiles = Profiles {
        vmo_ratios: ratios(&vmo),
        local_trace_ratios: ratios(&local),
        vmo_decays: decays(&vmo, t.decay_factor),
        local_trace_decays: decays(&local, t.decay_factor),
        vmo_flat: vmo.windows(2).any(|w| w[1].value < 1.2 * w[0].value),
        vmo,
        local_trace: local,
    };
    v.records.push(ConditionRecord {
        role: Role::Necessary,
        pass: Some(profiles.vmo_decays),
        ..ConditionRecord::info("vmo_profile_finest", profiles.vmo.first().map_or(0.0, |p| p.value))
    });
    v.records.push(ConditionRecord {
        role: Role::Necessary,
        pass: Some(profiles.local_trace_decays),
        ..ConditionRecord::info("local_trace_finest", profiles.local_trace.first().map_or(0.0, |p| p.value))
    });
    v.profiles = Some(profiles);
    v.conclude();
    Ok(v)
}

/// `delta = L/4, L/8, ...` down to `4h`, ascending. Below four cells the
/// profiles see the grid cap of singular presets rather than the field.
pub fn default_deltas(grid: &Grid, count: usize) -> Vec<f64> {
    let floor = 4.0 * grid.spacing() * (1.0 - 1e-12);
    let mut d: Vec<f64> = (0..count).map(|k| grid.period() / 4.0 / (1u64 << k) as f64).filter(|&d| d >= floor).collect();
    d.reverse();
    d
}
