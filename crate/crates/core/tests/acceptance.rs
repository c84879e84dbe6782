//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! with the measured quantities, then asserts.

use std::f64::consts::PI;
use std::time::Instant;

use formbound::calculus;
use formbound::capacity::{self, CapacityFlavor, CompactSet};
use formbound::field::{MatrixField, ScalarField, VectorField};
use formbound::form_norm;
use formbound::grid::Grid;
use formbound::hodge::{self, Flavor, Projection};
use formbound::measure::{self, DiscreteMeasure, DyadicTree};
use formbound::presets;
use formbound::random;
use formbound::report;
use formbound::verdict::{self, Overall, Thresholds};
use num_complex::Complex64;

fn line(n: u32, pass: bool, detail: String) {
    println!("criterion {n:>2}: {}  {detail}", if pass { "PASS" } else { "FAIL" });
}

fn sup(v: &VectorField) -> f64 {
    v.max_abs()
}

#[test]
fn criterion_01_hodge_identity() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (dim, n) in [(2, 64), (3, 32)] {
        let g = Grid::unit(dim, n).unwrap();
        for seed in 0..50 {
            let b = random::white_noise_vector(g, 1000 + seed).sub_mean();
            let scale = sup(&b);
            let p = hodge::project(Projection::P, &b).unwrap();
            let q = hodge::project(Projection::Q, &b).unwrap();
            let checks = [
                sup(&b.sub(&p).unwrap().sub(&q).unwrap()),
                sup(&hodge::project(Projection::P, &p).unwrap().sub(&p).unwrap()),
                sup(&hodge::project(Projection::Q, &q).unwrap().sub(&q).unwrap()),
                sup(&hodge::project(Projection::P, &q).unwrap()),
                sup(&hodge::project(Projection::Q, &p).unwrap()),
            ];
            for c in checks {
                worst = worst.max(c / scale);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-10 && secs <= 10.0;
    line(1, pass, format!("max relative defect {worst:.3e} (tol 1e-10), {secs:.2}s (limit 10s)"));
    assert!(pass);
}

fn scalar_presets(g: Grid) -> Vec<(&'static str, ScalarField)> {
    let mut out = vec![
        ("potential", presets::default_potential(g)),
        ("stream_function", presets::default_stream(g)),
        ("log_singular", presets::log_singular(g)),
        ("random", random::band_limited(g, 7, 4)),
    ];
    for name in ["lebesgue", "bump", "union_bumps", "point_mass"] {
        out.push((name, presets::measure(name, g).unwrap().density()));
    }
    out
}

#[test]
fn criterion_02_exact_identities() {
    let mut worst: f64 = 0.0;
    for (dim, n) in [(2, 32), (3, 16)] {
        let g = Grid::unit(dim, n).unwrap();
        let kmax = PI * n as f64;
        for (_, f) in scalar_presets(g) {
            let gr = calculus::grad(&f);
            let cg = calculus::curl(&gr);
            worst = worst.max(cg.max_abs() / (kmax * sup(&gr)).max(f64::MIN_POSITIVE));
        }
        for name in presets::NAMES {
            let c = presets::coefficients(name, g, 3).unwrap();
            if c.b.max_abs() == 0.0 {
                continue;
            }
            // Div of a skew field is divergence free
            let skew = calculus::curl(&c.b);
            let d = calculus::matrix_div(&skew);
            let dd = calculus::div(&d);
            worst = worst.max(dd.max_abs() / (kmax * sup(&d)).max(f64::MIN_POSITIVE));
            let gr = calculus::grad(&c.q);
            if gr.max_abs() > 0.0 {
                worst = worst.max(calculus::curl(&gr).max_abs() / (kmax * sup(&gr)));
            }
        }
    }
    let pass = worst <= 1e-13;
    line(2, pass, format!("max |curl grad|, |div Div| relative to |k|max * sup = {worst:.3e} (tol 1e-13)"));
    assert!(pass);
}

#[test]
fn criterion_03_04_gauge() {
    let start = Instant::now();
    let mut ratios64 = Vec::new();
    let mut gauge_ok = true;
    let mut gauge_detail = String::new();
    let g64 = Grid::unit(3, 64).unwrap();
    let e64 = CompactSet::ball(g64, [0.5; 3], 0.125);
    for tau in [0.75, 1.0, 1.25] {
        let rep = capacity::gauge_check(&e64, tau, 20, 41).unwrap();
        ratios64.push(rep.energy_ratio());
        gauge_ok &= rep.within_bound();
        gauge_detail.push_str(&format!(
            " tau={tau}: [{:.3}, {:.3}] within [{:.3}, {:.3}];",
            rep.gauge_ratio_min,
            rep.gauge_ratio,
            0.9 / (1.0 + 2.0 * tau),
            1.1 * (1.0 + 2.0 * tau)
        ));
    }
    let g128 = Grid::unit(3, 128).unwrap();
    let e128 = CompactSet::ball(g128, [0.5; 3], 0.125);
    let r128 = capacity::gauge_check(&e128, 1.0, 0, 41).unwrap().energy_ratio();
    let secs = start.elapsed().as_secs_f64();
    let in_band = ratios64.iter().all(|r| (0.85..=1.15).contains(r));
    let improving = (r128 - 1.0).abs() <= (ratios64[1] - 1.0).abs();
    let pass3 = in_band && improving && secs <= 300.0;
    line(
        3,
        pass3,
        format!(
            "energy ratios at 64^3 {:?} (band [0.85, 1.15]); tau=1 at 128^3 {r128:.4} vs 64^3 {:.4}; {secs:.1}s (limit 300s)",
            ratios64.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>(),
            ratios64[1]
        ),
    );
    line(4, gauge_ok, format!("gauge distortion over 20 band-limited u at 64^3:{gauge_detail}"));
    assert!(pass3 && gauge_ok);
}

#[test]
fn criterion_05_capacity_scaling() {
    let g3 = Grid::unit(3, 64).unwrap();
    let mut hom = Vec::new();
    for side in [4usize, 8, 16] {
        let c = 32 - side / 2;
        let e = CompactSet::cube(g3, [c, c, c], side);
        let s = side as f64 * g3.spacing();
        hom.push(capacity::capacity(&e, CapacityFlavor::Homogeneous).unwrap().value / s);
    }
    let g2 = Grid::unit(2, 128).unwrap();
    let mut inh = Vec::new();
    for side in [8usize, 16, 32] {
        let c = 64 - side / 2;
        let e = CompactSet::cube(g2, [c, c, 0], side);
        let s = side as f64 * g2.spacing();
        inh.push(capacity::capacity(&e, CapacityFlavor::Inhomogeneous).unwrap().value * (2.0 / (s * s)).ln());
    }
    let zero = capacity::capacity(&CompactSet::cube(g2, [60, 60, 0], 8), CapacityFlavor::Homogeneous).unwrap().value;
    let spread = |v: &[f64]| v.iter().copied().fold(0.0, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = spread(&hom) <= 2.0 && spread(&inh) <= 2.0 && zero == 0.0;
    line(
        5,
        pass,
        format!(
            "cap/s at 64^3 {hom:.4?} (spread {:.3}); Cap*log(2/s^2) at 128^2 {inh:.4?} (spread {:.3}); planar cap {zero}",
            spread(&hom),
            spread(&inh)
        ),
    );
    assert!(pass);
}

/// Every dyadic cube as (level, corner, side) with its mass summed cell by cell.
fn brute_force_carleson(mu: &DiscreteMeasure) -> Vec<(usize, [usize; 3], f64)> {
    let g = *mu.grid();
    let n = g.points_per_axis();
    let mut cubes = Vec::new();
    for level in 0..=g.depth() {
        let side = n >> level;
        let per = 1usize << level;
        for node in 0..per * per * per {
            let corner = [node / (per * per) * side, (node / per) % per * side, node % per * side];
            let mut m = 0.0;
            for i in 0..side {
                for j in 0..side {
                    for k in 0..side {
                        m += mu.masses()[g.flat([corner[0] + i, corner[1] + j, corner[2] + k])];
                    }
                }
            }
            cubes.push((side, corner, m));
        }
    }
    let h = g.spacing();
    let mut out = Vec::new();
    for &(ps, pc, pm) in &cubes {
        let mut energy = 0.0;
        for &(qs, qc, qm) in &cubes {
            let inside = qs <= ps && (0..3).all(|a| qc[a] >= pc[a] && qc[a] + qs <= pc[a] + ps);
            if inside {
                let vol = (qs as f64 * h).powi(3);
                energy += qm * qm / vol.powf(1.0 / 3.0);
            }
        }
        out.push((ps, pc, if pm > 0.0 { energy / pm } else { 0.0 }));
    }
    out
}

#[test]
fn criterion_06_carleson_closed_form_and_oracle() {
    let mut worst_closed: f64 = 0.0;
    for n in [16, 32, 64] {
        let g = Grid::unit(3, n).unwrap();
        let c5 = measure::carleson_test(&DiscreteMeasure::lebesgue(g, 1.0)).constant;
        let d = g.depth() as i32;
        worst_closed = worst_closed.max((c5 - 4.0 / 3.0 * (1.0 - 4f64.powi(-(d + 1)))).abs());
    }
    let g = Grid::unit(3, 16).unwrap();
    let mut worst_oracle: f64 = 0.0;
    for mu in [DiscreteMeasure::lebesgue(g, 1.0), presets::union_bumps(g), DiscreteMeasure::from_density(&random::white_noise(g, 5).map(|v| Complex64::new(v.re.abs(), 0.0))).unwrap()] {
        let tree = DyadicTree::build(&mu);
        let brute = brute_force_carleson(&mu);
        let mut best_brute: f64 = 0.0;
        for (side, corner, ratio) in brute {
            let level = g.depth() - side.trailing_zeros() as usize;
            let per = 1usize << level;
            let node = (corner[0] / side * per + corner[1] / side) * per + corner[2] / side;
            let m = tree.mass(level)[node];
            let tree_ratio = if m > 0.0 { tree.energy(level)[node] / m } else { 0.0 };
            worst_oracle = worst_oracle.max((tree_ratio - ratio).abs() / ratio.max(1e-300));
            best_brute = best_brute.max(ratio);
        }
        let c5 = measure::carleson_test(&mu).constant;
        worst_oracle = worst_oracle.max((c5 - best_brute).abs() / best_brute);
    }
    let pass = worst_closed <= 1e-12 && worst_oracle <= 1e-12;
    line(6, pass, format!("closed form defect {worst_closed:.3e}; tree vs brute force at 16^3 {worst_oracle:.3e} (tol 1e-12)"));
    assert!(pass);
}

#[test]
fn criterion_07_poincare() {
    let g = Grid::unit(3, 32).unwrap();
    let alpha = 1.7;
    let expect = alpha / (4.0 * PI * PI);
    let tr = form_norm::trace_constant(&DiscreteMeasure::lebesgue(g, alpha), Flavor::Homogeneous).unwrap().value;
    let fm = form_norm::form_norm(
        &MatrixField::zeros(g),
        &VectorField::zeros(g),
        &ScalarField::constant(g, Complex64::new(alpha, 0.0)),
        Flavor::Homogeneous,
    )
    .unwrap()
    .value;
    let e1 = (tr / expect - 1.0).abs();
    let e2 = (fm / tr - 1.0).abs();
    let pass = e1 <= 1e-6 && e2 <= 1e-6;
    line(7, pass, format!("trace {tr:.12} vs alpha/(4 pi^2) {expect:.12} (rel {e1:.2e}); form_norm rel {e2:.2e} (tol 1e-6)"));
    assert!(pass);
}

fn ball_energy(b: &VectorField, radius: f64) -> f64 {
    let g = *b.grid();
    let m = b.magnitude_sq();
    let c = [0.5 * g.period(); 3];
    (0..g.len())
        .filter(|&i| g.torus_distance(g.position(i), c) <= radius)
        .map(|i| m.values()[i].re)
        .sum::<f64>()
        * g.cell_volume()
}

#[test]
fn criterion_08_vortex_contrast() {
    let start = Instant::now();
    let mut form = Vec::new();
    let mut local = Vec::new();
    let mut trace = Vec::new();
    for n in [32, 64, 128] {
        let g = Grid::unit(3, n).unwrap();
        let b = presets::vortex(g);
        form.push(
            form_norm::form_norm(&MatrixField::zeros(g), &b, &ScalarField::zeros(g), Flavor::Homogeneous).unwrap().value,
        );
        local.push(ball_energy(&b, 0.25));
        let mu = DiscreteMeasure::from_density(&b.magnitude_sq()).unwrap();
        trace.push(form_norm::trace_constant(&mu, Flavor::Homogeneous).unwrap().value);
    }
    let secs = start.elapsed().as_secs_f64();
    let change = |v: &[f64]| v.windows(2).map(|w| w[1] / w[0] - 1.0).collect::<Vec<_>>();
    let form_ok = change(&form).iter().all(|c| c.abs() <= 0.2);
    let local_ok = change(&local).iter().all(|&c| c >= 0.3);
    let trace_ok = change(&trace).iter().all(|&c| c >= 0.3);
    let pass = form_ok && local_ok && trace_ok && secs <= 600.0;
    line(
        8,
        pass,
        format!(
            "form {form:.4?} changes {:.3?} (<= 0.2); int_B |b|^2 {local:.4?} growth {:.3?} (>= 0.3); trace {trace:.4?} growth {:.3?} (>= 0.3); {secs:.1}s",
            change(&form),
            change(&local),
            change(&trace)
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_sandwich() {
    let g = Grid::unit(3, 32).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for (name, b) in [
        ("vortex", presets::vortex(g)),
        ("gradient", presets::gradient(&presets::default_potential(g))),
        ("random", presets::random_drift(g, 9, 4)),
    ] {
        let r = form_norm::nonlinear_form_constant(&b, 17).unwrap();
        let ok = r.c_lower.value <= 1.05 * r.c_trace.value && r.c_trace.value <= 1.25 * 2.0 * 3f64.sqrt() * r.c_lower.value;
        pass &= ok;
        detail.push_str(&format!(" {name}: C={:.4} c={:.4} c/C={:.3};", r.c_lower.value, r.c_trace.value, r.ratio()));
    }
    line(9, pass, format!("bounds C <= 1.05 c, c <= 1.25 * 2 sqrt(3) C:{detail}"));
    assert!(pass);
}

#[test]
fn criterion_10_planar_degeneracy() {
    let g = Grid::unit(2, 64).unwrap();
    let t = Thresholds::default();
    let zero_a = MatrixField::zeros(g);
    let mut pass = true;
    let mut detail = String::new();
    let stream = presets::stream(&presets::default_stream(g));
    let v = verdict::assess_homogeneous(&zero_a, &stream, &ScalarField::zeros(g), &t).unwrap();
    pass &= v.overall == Overall::CertifiedBounded;
    detail.push_str(&format!(" stream -> {:?};", v.overall));
    let mut flagged = 0;
    for name in presets::NAMES {
        let c = presets::coefficients(name, g, 1).unwrap();
        let q_l1 = c.q.map(|z| Complex64::new(z.norm(), 0.0)).integral().re;
        if q_l1 < 0.1 {
            continue;
        }
        let v = verdict::assess_homogeneous(&c.a, &c.b, &c.q, &t).unwrap();
        pass &= v.overall == Overall::CertifiedUnboundedN2;
        flagged += 1;
        detail.push_str(&format!(" {name} (|q|_1={q_l1:.3}) -> {:?};", v.overall));
    }
    pass &= flagged > 0;
    line(10, pass, detail.trim().to_string());
    assert!(pass);
}

#[test]
fn criterion_11_equivalence_coherence() {
    let g = Grid::unit(3, 32).unwrap();
    let mut rows = Vec::new();
    let mut scaling: f64 = 0.0;
    let alpha = 2.75;
    for name in ["lebesgue", "bump", "union_bumps", "point_mass"] {
        let mu = presets::measure(name, g).unwrap();
        let balls = measure::default_ball_sample(&mu);
        let c3 = measure::ball_energy_test(&mu, &balls).unwrap().constant;
        let c4 = measure::pointwise_test(&mu).unwrap().constant;
        let c5 = measure::carleson_test(&mu).constant;
        let scaled = mu.scale(alpha);
        let s3 = measure::ball_energy_test(&scaled, &balls).unwrap().constant;
        let s4 = measure::pointwise_test(&scaled).unwrap().constant;
        let s5 = measure::carleson_test(&scaled).constant;
        for (a, b) in [(c3, s3), (c4, s4), (c5, s5)] {
            scaling = scaling.max((b - alpha * a).abs() / (alpha * a));
        }
        rows.push((name, c3, c4, c5));
    }
    type Row<'a> = (&'a str, f64, f64, f64);
    let spread = |f: &dyn Fn(&Row) -> f64| {
        let v: Vec<f64> = rows.iter().map(f).collect();
        v.iter().copied().fold(0.0, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let s35 = spread(&|r| r.1 / r.3);
    let s45 = spread(&|r| r.2 / r.3);
    let s34 = spread(&|r| r.1 / r.2);
    let pass = s35 <= 30.0 && s45 <= 30.0 && s34 <= 30.0 && scaling <= 1e-10;
    let table: Vec<String> = rows.iter().map(|r| format!("{}: c3={:.4e} c4={:.4e} c5={:.4e}", r.0, r.1, r.2, r.3)).collect();
    line(
        11,
        pass,
        format!("ratio spreads c3/c5 {s35:.2}, c4/c5 {s45:.2}, c3/c4 {s34:.2} (<= 30); scaling defect {scaling:.1e}; {}", table.join("; ")),
    );
    assert!(pass);
}

#[test]
fn criterion_12_infinitesimal_profiles() {
    let g = Grid::unit(3, 64).unwrap();
    let t = Thresholds::default();
    let deltas = verdict::default_deltas(&g, 3);
    let smooth = presets::smooth_trig(g);
    let vs = verdict::assess_infinitesimal(&smooth.b, &smooth.q, &deltas, &t).unwrap();
    let ps = vs.profiles.as_ref().unwrap();
    let log = verdict::assess_infinitesimal(&presets::log_singular_drift(g), &ScalarField::zeros(g), &deltas, &t).unwrap();
    let pl = log.profiles.as_ref().unwrap();
    let log_flat = pl.vmo_ratios.iter().all(|&r| r < 1.2) && pl.vmo_flat;
    let pass = ps.vmo_decays && ps.local_trace_decays && log_flat;
    line(
        12,
        pass,
        format!(
            "deltas {deltas:.4?}; smooth: VMO ratios {:.4?}, local trace ratios {:.4?} (>= 2); log-singular VMO ratios {:.4?} (< 1.2)",
            ps.vmo_ratios, ps.local_trace_ratios, pl.vmo_ratios
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_13_determinism() {
    let g = Grid::unit(3, 16).unwrap();
    let t = Thresholds::default();
    let run = || {
        let b = presets::random_drift(g, 23, 3);
        let q = random::band_limited(g, 24, 3);
        let v = verdict::assess_homogeneous(&MatrixField::zeros(g), &b, &q, &t).unwrap();
        let nl = form_norm::nonlinear_form_constant(&b, 5).unwrap();
        let mut s = report::to_json(&report::Report::new(serde_json::json!({"seed": 23}), &v)).unwrap();
        s.push_str(&format!("{:e} {:e}", nl.c_lower.value, nl.c_trace.value));
        s
    };
    let a = run();
    let b = run();
    let pass = a == b;
    line(13, pass, format!("two seeded runs, {} report bytes, identical = {pass}", a.len()));
    assert!(pass);
}
