use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use formbound::capacity::{self, CapacityFlavor, CompactSet};
use formbound::fbf;
use formbound::form_norm;
use formbound::hodge::{self, Flavor};
use formbound::measure::{self, DiscreteMeasure};
use formbound::oscillation::{self, BmoFlavor, CubeFamily, FamilyFlavor, ProfilePoint};
use formbound::presets::{self, Coefficients};
use formbound::report::{self, Report};
use formbound::verdict::{self, Overall, Thresholds, Verdict};
use formbound::{Error, Field, Grid, Result};

#[derive(Parser, Debug)]
#[command(name = "formbound", version, about = "Form-boundedness certification on the periodic torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Hodge decomposition of a drift field.
    Decompose(DecomposeArgs),
    /// Mean-oscillation norm and optional VMO profile.
    Bmo(BmoArgs),
    /// Carleson, ball growth, pointwise and Fefferman-Phong tests of a measure.
    Carleson(CarlesonArgs),
    /// Capacity of a cube or ball, optionally with the gauge check.
    Capacity(CapacityArgs),
    /// Trace constant of a measure.
    Trace(TraceArgs),
    /// Direct form norm of an operator.
    Formnorm(FormnormArgs),
    /// Full certification pipeline.
    Verdict(VerdictArgs),
    /// Magnetic pipeline for (i grad + a)^2 + q.
    Magnetic(MagneticArgs),
    /// Infinitesimal form-boundedness profiles.
    Infinitesimal(InfinitesimalArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Spatial dimension (2 or 3).
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Points per axis (power of two, at least 16).
    #[arg(long = "grid", default_value_t = 32)]
    points_per_axis: usize,
    /// Torus period L.
    #[arg(long, default_value_t = 1.0)]
    period: f64,
    /// Named analytic preset.
    #[arg(long)]
    preset: Option<String>,
    /// FBF1 input files; the grid is taken from the files.
    #[arg(long)]
    input: Vec<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Include wall-clock timing in the report.
    #[arg(long)]
    #[serde(skip)]
    timing: bool,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
struct ThresholdArgs {
    #[arg(long, default_value_t = 10.0)]
    carleson_threshold: f64,
    #[arg(long, default_value_t = 10.0)]
    ball_growth_threshold: f64,
    #[arg(long, default_value_t = 10.0)]
    bmo_threshold: f64,
    #[arg(long, default_value_t = 10.0)]
    fp_threshold: f64,
    #[arg(long, default_value_t = 10.0)]
    trace_threshold: f64,
    #[arg(long, default_value_t = 10.0)]
    form_threshold: f64,
    /// Size of div b and |q|_1 treated as zero in two dimensions.
    #[arg(long, default_value_t = 1e-6)]
    n2_tolerance: f64,
    /// Fefferman-Phong exponent.
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Required profile decay per halving of delta.
    #[arg(long, default_value_t = 2.0)]
    decay_factor: f64,
}

impl ThresholdArgs {
    fn thresholds(&self) -> Thresholds {
        Thresholds {
            carleson: self.carleson_threshold,
            ball_growth: self.ball_growth_threshold,
            bmo: self.bmo_threshold,
            fefferman_phong: self.fp_threshold,
            trace: self.trace_threshold,
            form: self.form_threshold,
            n2_tolerance: self.n2_tolerance,
            epsilon: self.eps,
            decay_factor: self.decay_factor,
            ..Thresholds::default()
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum FlavorArg {
    Homogeneous,
    Inhomogeneous,
}

impl FlavorArg {
    fn flavor(self) -> Flavor {
        match self {
            FlavorArg::Homogeneous => Flavor::Homogeneous,
            FlavorArg::Inhomogeneous => Flavor::Inhomogeneous,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct DecomposeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = FlavorArg::Homogeneous)]
    flavor: FlavorArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum BmoKind {
    Bmo,
    Local,
    Sharp,
}

#[derive(Args, Debug, Serialize)]
struct BmoArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = BmoKind::Bmo)]
    kind: BmoKind,
    /// Oscillation exponent r >= 1.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Add half-shifted cubes to the dyadic family.
    #[arg(long)]
    shifted: bool,
    /// Cube sides (physical lengths) for the VMO profile.
    #[arg(long, value_delimiter = ',')]
    deltas: Vec<f64>,
    /// CSV output for the profile.
    #[arg(long)]
    #[serde(skip)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CarlesonArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Ball radii for the growth test; defaults to a geometric ladder.
    #[arg(long, value_delimiter = ',')]
    radii: Vec<f64>,
    /// Fefferman-Phong exponent.
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum Shape {
    Cube,
    Ball,
}

#[derive(Args, Debug, Serialize)]
struct CapacityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = FlavorArg::Homogeneous)]
    flavor: FlavorArg,
    /// Shape of the compact set when no mask file is given.
    #[arg(long, value_enum, default_value_t = Shape::Ball)]
    shape: Shape,
    /// Cube side or ball radius as a fraction of the period.
    #[arg(long, default_value_t = 0.125)]
    size: f64,
    /// Gauge exponent; runs the gauge check when given (three dimensions).
    #[arg(long)]
    tau: Option<f64>,
    /// Random test functions for the gauge check.
    #[arg(long, default_value_t = 20)]
    samples: usize,
}

#[derive(Args, Debug, Serialize)]
struct TraceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = FlavorArg::Homogeneous)]
    flavor: FlavorArg,
}

#[derive(Args, Debug, Serialize)]
struct FormnormArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = FlavorArg::Homogeneous)]
    flavor: FlavorArg,
    /// Also estimate the nonlinear constant and the trace sandwich (real drift only).
    #[arg(long)]
    sandwich: bool,
}

#[derive(Args, Debug, Serialize)]
struct VerdictArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[arg(long, value_enum, default_value_t = FlavorArg::Homogeneous)]
    flavor: FlavorArg,
}

#[derive(Args, Debug, Serialize)]
struct MagneticArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    /// Constant added to the potential.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    q_shift: f64,
}

#[derive(Args, Debug, Serialize)]
struct InfinitesimalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    /// Cube sides (physical lengths), ascending; defaults to L/4, L/8, ... down to 2h.
    #[arg(long, value_delimiter = ',')]
    deltas: Vec<f64>,
    /// CSV output for both profiles.
    #[arg(long)]
    #[serde(skip)]
    csv: Option<PathBuf>,
}

fn load_inputs(common: &Common) -> Result<Vec<Field>> {
    let fields = common.input.iter().map(|p| fbf::load(p, common.period)).collect::<Result<Vec<_>>>()?;
    if let Some(first) = fields.first() {
        if fields.iter().any(|f| f.grid() != first.grid()) {
            return Err(Error::GridMismatch);
        }
    }
    Ok(fields)
}

fn grid_of(common: &Common, inputs: &[Field]) -> Result<Grid> {
    match inputs.first() {
        Some(f) => Ok(*f.grid()),
        None => Grid::new(common.dim, common.points_per_axis, common.period),
    }
}

fn no_source() -> Error {
    Error::InvalidParameter("either --preset or --input is required".into())
}

/// Coefficients from input files (dispatched by rank) or a preset.
fn coefficients(common: &Common) -> Result<Coefficients> {
    let inputs = load_inputs(common)?;
    let grid = grid_of(common, &inputs)?;
    if inputs.is_empty() {
        let name = common.preset.as_deref().ok_or_else(no_source)?;
        return presets::coefficients(name, grid, common.seed);
    }
    let mut c = Coefficients::zero(grid);
    for f in inputs {
        match f {
            Field::Scalar(q) => c.q = q,
            Field::Vector(b) => c.b = b,
            Field::Matrix(a) => c.a = a,
        }
    }
    Ok(c)
}

fn measure_from(common: &Common) -> Result<DiscreteMeasure> {
    let inputs = load_inputs(common)?;
    let grid = grid_of(common, &inputs)?;
    match inputs.into_iter().next() {
        Some(f) => DiscreteMeasure::from_density(&f.into_scalar()?),
        None => presets::measure(common.preset.as_deref().ok_or_else(no_source)?, grid),
    }
}

fn profile_json(p: &[ProfilePoint]) -> Value {
    Value::Array(p.iter().map(|q| json!({"delta": q.delta, "value": q.value})).collect())
}

fn write_csv(path: &PathBuf, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Format(e.to_string()))
}

fn decompose(args: &DecomposeArgs) -> Result<Value> {
    let c = coefficients(&args.common)?;
    let dec = match args.flavor {
        FlavorArg::Homogeneous => hodge::hodge_decompose(&c.b)?,
        FlavorArg::Inhomogeneous => hodge::inhomogeneous_decompose(&c.b, &c.q)?,
    };
    let d = dec.stream.dim();
    let entries: Vec<Vec<f64>> =
        (0..d).map(|i| (0..d).map(|j| dec.stream.entry(i, j).max_abs()).collect()).collect();
    Ok(json!({
        "flavor": dec.flavor,
        "residual": dec.residual,
        "mean": dec.mean_part.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "c_max": dec.c.max_abs(),
        "stream_max": dec.stream.max_abs(),
        "stream_entry_max": entries,
        "h_max": dec.h.max_abs(),
        "gamma_max": dec.gamma.max_abs(),
    }))
}

fn bmo(args: &BmoArgs) -> Result<Value> {
    let inputs = load_inputs(&args.common)?;
    let field = match inputs.into_iter().next() {
        Some(f) => f,
        None => {
            let c = coefficients(&args.common)?;
            let red = hodge::reduce_principal(&c.a, &c.b)?;
            let skew = c.a.skew_part().scale(Complex64::new(0.5, 0.0));
            Field::Matrix(hodge::hodge_decompose(&red.b1)?.stream.sub(&skew)?)
        }
    };
    let grid = *field.grid();
    let family = CubeFamily::dyadic(
        grid,
        if args.shifted { FamilyFlavor::DyadicPlusHalfShifts } else { FamilyFlavor::Dyadic },
    );
    let kind = match args.kind {
        BmoKind::Bmo => BmoFlavor::Bmo,
        BmoKind::Local => BmoFlavor::LocalBmo,
        BmoKind::Sharp => BmoFlavor::BmoSharp,
    };
    let rep = oscillation::bmo_norm(&field, kind, args.r, &family)?;
    let mut out = json!({"rank": field.rank_name(), "bmo": to_value(&rep)?});
    if !args.deltas.is_empty() {
        let profile = oscillation::vmo_profile(&field, &args.deltas, args.r)?;
        if let Some(path) = &args.csv {
            write_csv(path, "delta,vmo", profile.iter().map(|p| vec![p.delta, p.value]))?;
        }
        out["vmo_profile"] = profile_json(&profile);
    }
    Ok(out)
}

fn carleson(args: &CarlesonArgs) -> Result<Value> {
    let mu = measure_from(&args.common)?;
    let grid = *mu.grid();
    let radii = if args.radii.is_empty() { measure::default_radii(&grid) } else { args.radii.clone() };
    let c5 = measure::carleson_test(&mu);
    let growth = measure::ball_growth_test(&mu, &radii)?;
    let fp = measure::fefferman_phong_test(&mu.density(), args.eps, &radii)?;
    let mut out = json!({
        "total_mass": mu.total(),
        "constant": c5.constant,
        "carleson": to_value(&c5)?,
        "ball_growth": to_value(&growth)?,
        "fefferman_phong": to_value(&fp)?,
    });
    if grid.dim() == 3 {
        let balls = measure::default_ball_sample(&mu);
        out["ball_energy"] = to_value(&measure::ball_energy_test(&mu, &balls)?)?;
        out["pointwise"] = to_value(&measure::pointwise_test(&mu)?)?;
    }
    Ok(out)
}

fn capacity_cmd(args: &CapacityArgs) -> Result<Value> {
    let inputs = load_inputs(&args.common)?;
    let grid = grid_of(&args.common, &inputs)?;
    let e = match inputs.into_iter().next() {
        Some(f) => CompactSet::from_field(&f.into_scalar()?),
        None => {
            let l = grid.period();
            match args.shape {
                Shape::Ball => CompactSet::ball(grid, [0.5 * l; 3], args.size * l),
                Shape::Cube => {
                    let n = grid.points_per_axis();
                    let side = ((args.size * n as f64).round() as usize).clamp(1, n);
                    let c = (n - side) / 2;
                    CompactSet::cube(grid, [c, c, if grid.dim() == 3 { c } else { 0 }], side)
                }
            }
        }
    };
    let flavor = match args.flavor {
        FlavorArg::Homogeneous => CapacityFlavor::Homogeneous,
        FlavorArg::Inhomogeneous => CapacityFlavor::Inhomogeneous,
    };
    let r = capacity::capacity(&e, flavor)?;
    let mut out = json!({
        "cells": e.count(),
        "capacity": r.value,
        "dirichlet_energy": r.dirichlet_energy,
        "measure_mass": r.measure_mass,
        "kkt_residual": r.kkt_residual,
        "iterations": r.iterations,
    });
    if let Some(tau) = args.tau {
        let g = capacity::gauge_check(&e, tau, args.samples, args.common.seed)?;
        out["gauge"] = json!({
            "tau": g.tau,
            "energy_lhs": g.energy_lhs,
            "energy_rhs": g.energy_rhs,
            "energy_ratio": g.energy_ratio(),
            "gauge_ratio_min": g.gauge_ratio_min,
            "gauge_ratio_max": g.gauge_ratio,
            "bound_low": 1.0 / (1.0 + 2.0 * tau),
            "bound_high": 1.0 + 2.0 * tau,
            "within_bound": g.within_bound(),
        });
    }
    Ok(out)
}

fn estimate_json(e: &form_norm::FormEstimate) -> Value {
    json!({"value": e.value, "method": e.method, "iterations": e.iterations, "residual": e.residual})
}

fn trace(args: &TraceArgs) -> Result<Value> {
    let mu = measure_from(&args.common)?;
    let e = form_norm::trace_constant(&mu, args.flavor.flavor())?;
    Ok(json!({"constant": e.value, "estimate": estimate_json(&e)}))
}

fn formnorm(args: &FormnormArgs) -> Result<Value> {
    let c = coefficients(&args.common)?;
    let e = form_norm::form_norm(&c.a, &c.b, &c.q, args.flavor.flavor())?;
    let mut out = json!({"constant": e.value, "estimate": estimate_json(&e)});
    if args.sandwich {
        let nl = form_norm::nonlinear_form_constant(&c.b, args.common.seed)?;
        out["sandwich"] = json!({
            "c_lower": nl.c_lower.value,
            "c_trace": nl.c_trace.value,
            "ratio": nl.ratio(),
            "within_bounds": nl.sandwich_ok,
        });
    }
    Ok(out)
}

fn verdict_cmd(args: &VerdictArgs) -> Result<Verdict> {
    let c = coefficients(&args.common)?;
    let t = args.thresholds.thresholds();
    match args.flavor {
        FlavorArg::Homogeneous => verdict::assess_homogeneous(&c.a, &c.b, &c.q, &t),
        FlavorArg::Inhomogeneous => verdict::assess_inhomogeneous(&c.a, &c.b, &c.q, &t),
    }
}

fn magnetic(args: &MagneticArgs) -> Result<Verdict> {
    let c = coefficients(&args.common)?;
    let q = c.q.map(|z| z + Complex64::new(args.q_shift, 0.0));
    verdict::assess_magnetic(&c.b, &q, &args.thresholds.thresholds())
}

fn infinitesimal(args: &InfinitesimalArgs) -> Result<Verdict> {
    let c = coefficients(&args.common)?;
    let grid = *c.b.grid();
    let deltas = if args.deltas.is_empty() { verdict::default_deltas(&grid, 8) } else { args.deltas.clone() };
    let v = verdict::assess_infinitesimal(&c.b, &c.q, &deltas, &args.thresholds.thresholds())?;
    if let (Some(path), Some(p)) = (&args.csv, &v.profiles) {
        let rows = p.vmo.iter().zip(&p.local_trace).map(|(a, b)| vec![a.delta, a.value, b.value]);
        write_csv(path, "delta,vmo,local_trace", rows)?;
    }
    Ok(v)
}

fn verdict_value(v: &Verdict) -> Result<(Value, bool)> {
    Ok((to_value(v)?, v.overall == Overall::CertifiedUnboundedN2))
}

fn emit<C: Serialize>(common: &Common, config: &C, results: Value, start: Instant) -> Result<()> {
    let mut rep = Report::new(to_value(config)?, results);
    if common.timing {
        rep.timing_seconds = Some(start.elapsed().as_secs_f64());
    }
    let text = report::to_json(&rep)?;
    match &common.out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn tagged<T: Serialize>(name: &str, args: &T) -> Value {
    let mut v = serde_json::to_value(args).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        m.insert("subcommand".into(), Value::String(name.into()));
    }
    v
}

fn run(cli: Cli) -> Result<bool> {
    let start = Instant::now();
    let (common, config, (results, failed)) = match &cli.command {
        Command::Decompose(a) => (&a.common, tagged("decompose", a), (decompose(a)?, false)),
        Command::Bmo(a) => (&a.common, tagged("bmo", a), (bmo(a)?, false)),
        Command::Carleson(a) => (&a.common, tagged("carleson", a), (carleson(a)?, false)),
        Command::Capacity(a) => (&a.common, tagged("capacity", a), (capacity_cmd(a)?, false)),
        Command::Trace(a) => (&a.common, tagged("trace", a), (trace(a)?, false)),
        Command::Formnorm(a) => (&a.common, tagged("formnorm", a), (formnorm(a)?, false)),
        Command::Verdict(a) => (&a.common, tagged("verdict", a), verdict_value(&verdict_cmd(a)?)?),
        Command::Magnetic(a) => (&a.common, tagged("magnetic", a), verdict_value(&magnetic(a)?)?),
        Command::Infinitesimal(a) => (&a.common, tagged("infinitesimal", a), verdict_value(&infinitesimal(a)?)?),
    };
    emit(common, &config, results, start)?;
    Ok(failed)
}

fn configure_threads() -> Result<()> {
    if let Ok(s) = std::env::var("FORMBOUND_THREADS") {
        let n: usize = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("FORMBOUND_THREADS must be a positive integer, got `{s}`")))?;
        if n == 0 {
            return Err(Error::InvalidParameter("FORMBOUND_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|_| run(cli)) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("formbound: {e}");
            ExitCode::from(1)
        }
    }
}
