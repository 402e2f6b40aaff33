//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use circleflow::conditions::{check_condition_13, degeneration_probe, Condition13};
use circleflow::curvature::{curvature_hessian, curvature_state, from_u, to_u, PackingMetric, UCoordinates};
use circleflow::fixtures;
use circleflow::flow::{
    check_dispersion, check_max_principle, default_targets, run_flow, ConvergenceReport, FlowConfig, FlowMode,
    FlowTrace, Termination,
};
use circleflow::kernel::{dtheta_dr, tri_angles, TriangleConfig};
use circleflow::mesh::{VertexSubset, WeightedTriangulation};
use circleflow::newton::newton_solve;
use circleflow::potential::{potential_along_path, potential_value, Quadrature};
use circleflow::{Error, Geometry};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const GB_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-8;
const FD_REL_TOL: f64 = 1e-6;
const FD_REL_STEP: f64 = 1e-6;
const EUCLIDEAN_ROW_TOL: f64 = 1e-9;
const HESSIAN_SYM_TOL: f64 = 1e-10;
const HESSIAN_ROW_TOL: f64 = 1e-10;
const FLOW_TOL: f64 = 1e-8;
const LIMIT_REL_TOL: f64 = 1e-6;
const PROBE_TOL: f64 = 1e-3;
const PATH_TOL: f64 = 1e-8;
const GRADIENT_TOL: f64 = 1e-6;
const CONVEXITY_SLACK: f64 = 1e-10;
const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 25;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Converged or not, every flow trace feeds criterion 7.
#[derive(Default)]
struct Traces {
    euclidean: Vec<FlowTrace>,
    hyperbolic: Vec<FlowTrace>,
}

fn flow(mesh: &WeightedTriangulation, m: &PackingMetric) -> (FlowTrace, Option<ConvergenceReport>) {
    let cfg = FlowConfig::new(mesh, m.geometry, FlowMode::ExplicitEuler);
    run_flow(mesh, m, &cfg).expect("flow runs on a valid metric")
}

fn c1_gauss_bonnet(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for mesh in [fixtures::tetrahedron(0.0), fixtures::torus7(0.0), fixtures::genus2(0.0)] {
        for g in [Geometry::Euclidean, Geometry::Hyperbolic] {
            for _ in 0..200 {
                let s = curvature_state(&mesh, &common::random_metric(&mesh, g, rng)).unwrap();
                worst = worst.max(s.gb_residual.abs());
                count += 1;
            }
        }
    }
    let tet = fixtures::tetrahedron(0.0);
    for _ in 0..200 {
        let s = curvature_state(&tet, &common::random_metric(&tet, Geometry::Spherical, rng)).unwrap();
        worst = worst.max(s.gb_residual.abs());
        count += 1;
    }
    Outcome::new(worst < GB_TOL, format!("{count} metrics, max |residual| = {worst:.2e} (< {GB_TOL:e})"))
}

/// Radii drawn over the whole feasible domain of each geometry.
fn random_radii(g: Geometry, rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let r = match g {
            Geometry::Euclidean => [(); 3].map(|_| rng.gen_range(0.05..5.0)),
            Geometry::Hyperbolic => [(); 3].map(|_| rng.gen_range(0.05..3.0)),
            Geometry::Spherical => [(); 3].map(|_| rng.gen_range(0.01..PI)),
        };
        if g != Geometry::Spherical || r.iter().sum::<f64>() < PI {
            return r;
        }
    }
}

/// Random realizable configuration whose angles stay away from 0 and pi.
fn random_config(g: Geometry, max_weight: f64, rng: &mut ChaCha8Rng) -> TriangleConfig {
    loop {
        let r = random_radii(g, rng);
        let w = [(); 3].map(|_| rng.gen_range(0.0..=max_weight));
        let Ok(c) = TriangleConfig::new(g, r, w) else { continue };
        let Ok(a) = tri_angles(&c) else { continue };
        if a.angles.iter().all(|&t| t > 1e-3 && t < PI - 1e-3) {
            if g == Geometry::Spherical {
                // the finite-difference stencil must stay inside the domain
                if r.iter().sum::<f64>() * (1.0 + FD_REL_STEP) >= PI {
                    continue;
                }
            }
            return c;
        }
    }
}

fn c2_symmetry(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst_sym: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    let mut worst_angles = [0.0; 3];
    let mut over = 0;
    for g in Geometry::ALL {
        for _ in 0..1000 {
            let c = random_config(g, PI - 1e-9, rng);
            let r = c.radii;
            let d = dtheta_dr(&c).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        worst_sym = worst_sym.max((g.s(r[j]) * d[i][j] - g.s(r[i]) * d[j][i]).abs());
                    }
                }
            }
            let mut config_err: f64 = 0.0;
            for j in 0..3 {
                let h = FD_REL_STEP * r[j];
                let at = |delta: f64| {
                    let mut c2 = c;
                    c2.radii[j] += delta;
                    tri_angles(&c2).map(|a| a.angles)
                };
                let (Ok(up), Ok(dn)) = (at(h), at(-h)) else {
                    config_err = f64::INFINITY;
                    continue;
                };
                for i in 0..3 {
                    let fd = (up[i] - dn[i]) / (2.0 * h);
                    config_err = config_err.max((fd - d[i][j]).abs() / d[i][j].abs().max(1.0));
                }
            }
            if config_err >= FD_REL_TOL {
                over += 1;
            }
            if config_err > worst_fd {
                worst_fd = config_err;
                worst_angles = tri_angles(&c).unwrap().angles;
            }
        }
    }
    let min_angle = worst_angles.iter().copied().fold(f64::INFINITY, f64::min);
    let max_angle = worst_angles.iter().copied().fold(0.0, f64::max);
    Outcome::new(
        worst_sym < SYMMETRY_TOL && worst_fd < FD_REL_TOL,
        format!(
            "3000 configs, max s-asymmetry {worst_sym:.2e} (< {SYMMETRY_TOL:e}); max finite-difference error {worst_fd:.2e} (< {FD_REL_TOL:e}), {over} config(s) over, worst has angles in [{min_angle:.2e}, pi - {:.2e}]",
            PI - max_angle
        ),
    )
}

fn c3_signs(rng: &mut ChaCha8Rng) -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for g in Geometry::ALL {
        let mut bad = 0;
        let mut first_bad: Option<[f64; 3]> = None;
        let mut worst_flat_row: f64 = 0.0;
        for _ in 0..1000 {
            let c = random_config(g, PI / 2.0, rng);
            let d = dtheta_dr(&c).unwrap();
            let mut ok = true;
            for i in 0..3 {
                let mut row = 0.0;
                for j in 0..3 {
                    row += g.s(c.radii[j]) * d[i][j];
                    if i == j {
                        ok &= d[i][j] < 0.0;
                    } else {
                        ok &= d[i][j] > 0.0;
                    }
                }
                match g {
                    Geometry::Euclidean => {
                        worst_flat_row = worst_flat_row.max(row.abs());
                        ok &= row.abs() < EUCLIDEAN_ROW_TOL;
                    }
                    Geometry::Hyperbolic => ok &= row < 0.0,
                    Geometry::Spherical => ok &= row > 0.0,
                }
            }
            if !ok {
                bad += 1;
                first_bad.get_or_insert(c.radii);
            }
        }
        pass &= bad == 0;
        let mut line = format!("{g}: {bad}/1000 violate");
        if g == Geometry::Euclidean {
            line += &format!(" (max |D_i| {worst_flat_row:.1e})");
        }
        if let Some(r) = first_bad {
            line += &format!(", first at radii [{:.4}, {:.4}, {:.4}]", r[0], r[1], r[2]);
        }
        lines.push(line);
    }
    Outcome::new(pass, lines.join("; "))
}

fn projected_min_eigen(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let ones = DMatrix::from_element(n, 1, 1.0 / (n as f64).sqrt());
    let p = DMatrix::identity(n, n) - &ones * ones.transpose();
    let mut eig: Vec<f64> = SymmetricEigen::new(&p * a * &p).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    // eig[0] belongs to the projected-out constant vector
    eig[1]
}

fn c4_hessian(rng: &mut ChaCha8Rng) -> Outcome {
    let mut sym: f64 = 0.0;
    let mut rows: f64 = 0.0;
    let mut min_flat = f64::INFINITY;
    let mut min_hyp = f64::INFINITY;
    let mut kernel: f64 = 0.0;
    for mesh in [fixtures::tetrahedron(0.0), fixtures::octahedron(0.6), fixtures::torus7(0.2), fixtures::genus2(0.0), fixtures::genus2_stellar(0.0)] {
        let n = mesh.vertex_count();
        for _ in 0..20 {
            let a = curvature_hessian(&mesh, &common::random_metric(&mesh, Geometry::Euclidean, rng)).unwrap();
            sym = sym.max(a.symmetry_defect());
            rows = rows.max(common::sup(&a.row_sums()));
            kernel = kernel.max(common::sup(&a.mul_vec(&vec![1.0; n])));
            let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
            min_flat = min_flat.min(projected_min_eigen(&dense));

            let b = curvature_hessian(&mesh, &common::random_metric(&mesh, Geometry::Hyperbolic, rng)).unwrap();
            sym = sym.max(b.symmetry_defect());
            let dense = DMatrix::from_fn(n, n, |i, j| b.get(i, j));
            min_hyp = min_hyp.min(SymmetricEigen::new(dense).eigenvalues.min());
        }
    }
    Outcome::new(
        sym < HESSIAN_SYM_TOL && rows < HESSIAN_ROW_TOL && kernel < HESSIAN_ROW_TOL && min_flat > 0.0 && min_hyp > 0.0,
        format!(
            "asymmetry {sym:.1e}, Euclidean row sums {rows:.1e}, |A 1| {kernel:.1e}, min projected eigenvalue {min_flat:.3e}, min hyperbolic eigenvalue {min_hyp:.3e}"
        ),
    )
}

fn c5_euclidean(rng: &mut ChaCha8Rng, traces: &mut Traces) -> Outcome {
    let torus = fixtures::torus7(0.0);
    let mut failures = Vec::new();
    let mut worst_gap: f64 = 0.0;
    let mut min_c2 = f64::INFINITY;
    let mut max_steps = 0;
    for k in 0..50 {
        let m = common::random_metric(&torus, Geometry::Euclidean, rng);
        let (trace, report) = flow(&torus, &m);
        max_steps = max_steps.max(trace.accepted_steps);
        match (&trace.termination, report) {
            (Termination::Converged, Some(r)) if r.residual < FLOW_TOL => {
                let gap = common::scale_free_gap(&r.limit_radii, &[1.0; 7]);
                worst_gap = worst_gap.max(gap);
                let c2 = r.rate_c2.unwrap_or(f64::NAN);
                min_c2 = min_c2.min(c2);
                if gap >= LIMIT_REL_TOL || !(c2 > 0.0) {
                    failures.push(format!("run {k}: gap {gap:.1e}, c2 {c2}"));
                }
            }
            (t, _) => failures.push(format!("run {k}: {t:?}")),
        }
        traces.euclidean.push(trace);
    }
    let tet = fixtures::tetrahedron(0.0);
    let m = PackingMetric::new(Geometry::Euclidean, vec![0.4, 1.9, 1.2, 0.7]).unwrap();
    let (trace, report) = flow(&tet, &m);
    let tet_ok = match &report {
        Some(r) => {
            r.limit_curvatures.iter().all(|k| (k - PI).abs() < FLOW_TOL)
                && common::scale_free_gap(&r.limit_radii, &[1.0; 4]) < LIMIT_REL_TOL
        }
        None => false,
    };
    if !tet_ok {
        failures.push(format!("tetrahedron: {:?}", trace.termination));
    }
    traces.euclidean.push(trace);
    Outcome::new(
        failures.is_empty(),
        format!(
            "50 torus runs, max {max_steps} steps, min c2 {min_c2:.3}, max radius gap {worst_gap:.1e} (< {LIMIT_REL_TOL:e}); tetrahedron K = pi: {tet_ok}{}",
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join(", ")) }
        ),
    )
}

fn c6_hyperbolic(rng: &mut ChaCha8Rng, traces: &mut Traces) -> Outcome {
    let g2 = fixtures::genus2(0.0);
    let mut failures = Vec::new();
    let mut limits: Vec<Vec<f64>> = Vec::new();
    let mut min_c2 = f64::INFINITY;
    for k in 0..20 {
        let m = common::random_metric(&g2, Geometry::Hyperbolic, rng);
        let (trace, report) = flow(&g2, &m);
        match report {
            Some(r) if r.residual < FLOW_TOL => {
                let c2 = r.rate_c2.unwrap_or(f64::NAN);
                min_c2 = min_c2.min(c2);
                if !(c2 > 0.0) {
                    failures.push(format!("run {k}: c2 {c2}"));
                }
                limits.push(r.limit_radii);
            }
            _ => failures.push(format!("run {k}: {:?}", trace.termination)),
        }
        traces.hyperbolic.push(trace);
    }
    let mut spread: f64 = 0.0;
    for a in &limits {
        for b in &limits {
            spread = spread.max(common::relative_gap(a, b));
        }
    }
    if spread >= LIMIT_REL_TOL {
        failures.push(format!("limits differ by {spread:.1e}"));
    }

    let large = PackingMetric::uniform(Geometry::Hyperbolic, g2.vertex_count(), 8.0).unwrap();
    let k0 = curvature_state(&g2, &large).unwrap().curvatures;
    let k0_min = k0.iter().copied().fold(f64::INFINITY, f64::min);
    if !(k0_min > TAU - 0.1) {
        failures.push(format!("large start min K(0) = {k0_min}"));
    }
    let (trace, report) = flow(&g2, &large);
    if report.is_none() {
        failures.push(format!("large start: {:?}", trace.termination));
    }
    // max(M, 0) alone, with the per-sample error slack
    let clipped: Vec<f64> = trace.samples.iter().map(|s| s.max_curvature.max(0.0)).collect();
    let monotone = (1..clipped.len()).all(|k| clipped[k] <= clipped[k - 1] + trace.samples[k].err + 1e-12);
    if !monotone {
        failures.push("large start: max(M, 0) increased".into());
    }
    traces.hyperbolic.push(trace);
    Outcome::new(
        failures.is_empty(),
        format!(
            "20 genus-2 runs, min c2 {min_c2:.3}, pairwise limit spread {spread:.1e} (< {LIMIT_REL_TOL:e}); large start min K(0) = {k0_min:.4} (> 2pi - 0.1), max(M,0) non-increasing: {monotone}{}",
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join(", ")) }
        ),
    )
}

fn c7_max_principle(traces: &Traces) -> Outcome {
    let mut bad = Vec::new();
    for (k, t) in traces.euclidean.iter().enumerate() {
        if !check_max_principle(t, Geometry::Euclidean).passed() {
            bad.push(format!("euclidean {k}: max principle"));
        }
        if !check_dispersion(t).passed() {
            bad.push(format!("euclidean {k}: dispersion"));
        }
    }
    for (k, t) in traces.hyperbolic.iter().enumerate() {
        if !check_max_principle(t, Geometry::Hyperbolic).passed() {
            bad.push(format!("hyperbolic {k}: max principle"));
        }
    }
    Outcome::new(
        bad.is_empty() && !traces.euclidean.is_empty() && !traces.hyperbolic.is_empty(),
        format!(
            "{} Euclidean and {} hyperbolic traces checked{}",
            traces.euclidean.len(),
            traces.hyperbolic.len(),
            if bad.is_empty() { String::new() } else { format!("; failures: {}", bad.join(", ")) }
        ),
    )
}

fn c8_degeneration() -> Outcome {
    let factors = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
    let mut pass = true;
    let mut parts = Vec::new();
    let probes: Vec<(&str, WeightedTriangulation, Vec<usize>)> = vec![
        ("tetrahedron {1}", fixtures::tetrahedron(0.0), vec![1]),
        ("torus {0}", fixtures::torus7(0.0), vec![0]),
        ("torus {0,1}", fixtures::torus7(0.0), vec![0, 1]),
    ];
    for (name, mesh, members) in probes {
        let n = mesh.vertex_count();
        let subset = VertexSubset::new(members, n).unwrap();
        let metric = PackingMetric::uniform(Geometry::Euclidean, n, 1.0).unwrap();
        let rows = degeneration_probe(&mesh, &metric, &subset, &factors).unwrap();
        let positive = rows.iter().all(|r| r.gap > 0.0);
        let last = rows.last().unwrap();
        let close = last.gap.abs() < PROBE_TOL;
        pass &= positive && close;
        let gaps: Vec<String> = rows.iter().map(|r| format!("{:.3e}", r.gap)).collect();
        parts.push(format!("{name}: bound {:.4}, gaps [{}]", last.bound, gaps.join(", ")));
    }
    Outcome::new(pass, format!("{} (final gap must be < {PROBE_TOL:e})", parts.join("; ")))
}

fn c9_soundness(rng: &mut ChaCha8Rng) -> Outcome {
    let set: Vec<(&str, WeightedTriangulation)> = vec![
        ("tetrahedron", fixtures::tetrahedron(0.0)),
        ("octahedron", fixtures::octahedron(0.5)),
        ("torus7", fixtures::torus7(0.0)),
        ("genus2", fixtures::genus2(0.0)),
        ("separating_triangle", fixtures::separating_triangle(0.0)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, mesh) in set {
        let verdict = check_condition_13(&mesh);
        let holds = verdict.holds();
        let m = common::random_metric(&mesh, Geometry::Euclidean, rng);
        let cfg = FlowConfig::new(&mesh, Geometry::Euclidean, FlowMode::Newton);
        let newton = newton_solve(&mesh, &m, &cfg);
        let converged = newton.is_ok();
        pass &= holds == converged;
        if let Condition13::Fails { witness, .. } = &verdict {
            pass &= matches!(newton, Err(Error::NonConvergence(_)));
            parts.push(format!("{name}: fails on {:?}, Newton converged {converged}", witness.members()));
        } else {
            parts.push(format!("{name}: holds {holds}, Newton converged {converged}"));
        }
    }
    Outcome::new(pass, parts.join("; "))
}

fn random_u(g: Geometry, n: usize, rng: &mut ChaCha8Rng) -> UCoordinates {
    let u = (0..n)
        .map(|_| match g {
            Geometry::Hyperbolic => rng.gen_range(-2.0..-0.1),
            _ => rng.gen_range(-0.7..0.7),
        })
        .collect();
    UCoordinates { geometry: g, u }
}

fn c10_potential(rng: &mut ChaCha8Rng) -> Outcome {
    let q = Quadrature::default();
    let mut path: f64 = 0.0;
    let mut grad: f64 = 0.0;
    let mut shift: f64 = 0.0;
    let mut convex_excess = f64::NEG_INFINITY;
    let mut strict_margin = f64::INFINITY;
    for (mesh, g) in [(fixtures::torus7(0.2), Geometry::Euclidean), (fixtures::genus2(0.0), Geometry::Hyperbolic)] {
        let n = mesh.vertex_count();
        let targets = default_targets(&mesh, g);
        for _ in 0..10 {
            let (a, b) = (random_u(g, n, rng), random_u(g, n, rng));
            let (c, d) = (random_u(g, n, rng), random_u(g, n, rng));
            let one = potential_along_path(&mesh, &[a.clone(), c, b.clone()], &targets, q).unwrap();
            let two = potential_along_path(&mesh, &[a.clone(), d, b.clone()], &targets, q).unwrap();
            path = path.max((one - two).abs());

            let k = curvature_state(&mesh, &from_u(&b).unwrap()).unwrap().curvatures;
            let i = rng.gen_range(0..n);
            let h = 1e-5;
            let (mut up, mut dn) = (b.clone(), b.clone());
            up.u[i] += h;
            dn.u[i] -= h;
            let fd = potential_along_path(&mesh, &[dn, up], &targets, q).unwrap() / (2.0 * h);
            grad = grad.max((fd - (k[i] - targets[i])).abs());

            let fa = potential_value(&mesh, &a, &a, &targets, q).unwrap();
            let fb = potential_value(&mesh, &b, &a, &targets, q).unwrap();
            let mid = UCoordinates { geometry: g, u: a.u.iter().zip(&b.u).map(|(x, y)| 0.5 * (x + y)).collect() };
            let fm = potential_value(&mesh, &mid, &a, &targets, q).unwrap();
            convex_excess = convex_excess.max(fm - 0.5 * (fa + fb));
            if g == Geometry::Hyperbolic {
                strict_margin = strict_margin.min(0.5 * (fa + fb) - fm);
            }
            if g == Geometry::Euclidean {
                let shifted = UCoordinates { geometry: g, u: b.u.iter().map(|x| x + 0.37).collect() };
                let f_shift = potential_value(&mesh, &shifted, &a, &targets, q).unwrap();
                shift = shift.max((f_shift - fb).abs());
            }
        }
    }
    Outcome::new(
        path < PATH_TOL && grad < GRADIENT_TOL && shift < PATH_TOL && convex_excess <= CONVEXITY_SLACK && strict_margin > 0.0,
        format!(
            "path dependence {path:.1e}, gradient error {grad:.1e}, translation change {shift:.1e}, midpoint excess {convex_excess:.1e}, hyperbolic strict margin {strict_margin:.2e}"
        ),
    )
}

fn c11_newton(rng: &mut ChaCha8Rng) -> Outcome {
    let set: Vec<(&str, WeightedTriangulation, Geometry)> = vec![
        ("tetrahedron", fixtures::tetrahedron(0.0), Geometry::Euclidean),
        ("octahedron", fixtures::octahedron(0.5), Geometry::Euclidean),
        ("torus7", fixtures::torus7(0.0), Geometry::Euclidean),
        ("genus2/E", fixtures::genus2(0.0), Geometry::Euclidean),
        ("genus2/H", fixtures::genus2(0.0), Geometry::Hyperbolic),
        ("genus2 weighted/H", fixtures::genus2(0.4), Geometry::Hyperbolic),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, mesh, g) in set {
        let m = common::random_metric(&mesh, g, rng);
        let cfg = FlowConfig::new(&mesh, g, FlowMode::Newton);
        match newton_solve(&mesh, &m, &cfg) {
            Ok(out) => {
                let (_, report) = flow(&mesh, &m);
                let gap = match report {
                    Some(r) if g == Geometry::Euclidean => common::scale_free_gap(out.metric.radii(), &r.limit_radii),
                    Some(r) => common::relative_gap(out.metric.radii(), &r.limit_radii),
                    None => f64::INFINITY,
                };
                let ok = out.residual <= NEWTON_TOL && out.iterations <= NEWTON_MAX_ITER && gap < LIMIT_REL_TOL;
                pass &= ok;
                parts.push(format!("{name}: {} it, residual {:.1e}, gap to flow {gap:.1e}", out.iterations, out.residual));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    Outcome::new(pass, parts.join("; "))
}

fn c12_spherical() -> Outcome {
    let tet = fixtures::tetrahedron(0.0);
    let m = PackingMetric::uniform(Geometry::Spherical, 4, PI / 8.0).unwrap();
    let mut cfg = FlowConfig::new(&tet, Geometry::Spherical, FlowMode::ExplicitEuler);
    cfg.sample_stride = 1;
    let (trace, report) = run_flow(&tet, &m, &cfg).unwrap();
    let no_claim = report.is_none()
        && matches!(trace.termination, Termination::Stopped | Termination::ConstraintHit | Termination::MaxSteps);
    let mut worst_sum: f64 = 0.0;
    for s in &trace.samples {
        for f in tet.faces() {
            worst_sum = worst_sum.max(f.vertices.iter().map(|&v| s.radii[v]).sum());
        }
    }
    let newton_refused = matches!(
        newton_solve(&tet, &m, &FlowConfig::new(&tet, Geometry::Spherical, FlowMode::Newton)),
        Err(Error::Unsupported(_))
    );
    Outcome::new(
        no_claim && worst_sum < PI && newton_refused && to_u(&m).u.len() == 4,
        format!(
            "termination {:?} ({}), {} accepted steps, max face radius sum {worst_sum:.4} (< pi), Newton refused: {newton_refused}",
            trace.termination,
            trace.termination.describe(),
            trace.accepted_steps
        ),
    )
}

fn main() -> ExitCode {
    let mut rng = common::rng(20240601);
    let mut traces = Traces::default();
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {id:>2} {:<22} {} [{secs:.2}s] {}", name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o, secs));
    };
    run(1, "gauss-bonnet", &mut || c1_gauss_bonnet(&mut rng));
    run(2, "angle symmetry", &mut || c2_symmetry(&mut rng));
    run(3, "sign structure", &mut || c3_signs(&mut rng));
    run(4, "hessian structure", &mut || c4_hessian(&mut rng));
    run(5, "euclidean convergence", &mut || c5_euclidean(&mut rng, &mut traces));
    run(6, "hyperbolic convergence", &mut || c6_hyperbolic(&mut rng, &mut traces));
    run(7, "maximum principle", &mut || c7_max_principle(&traces));
    run(8, "degeneration bound", &mut || c8_degeneration());
    run(9, "condition soundness", &mut || c9_soundness(&mut rng));
    run(10, "potential function", &mut || c10_potential(&mut rng));
    run(11, "newton fast path", &mut || c11_newton(&mut rng));
    run(12, "spherical guard", &mut || c12_spherical());

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {} passed, {} failed", results.len() - failed.len(), failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
