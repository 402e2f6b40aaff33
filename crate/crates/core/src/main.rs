use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use circleflow::conditions::{self, subset_bound, Condition13, ConditionReport, LoopVerdict, SUBSET_CAP};
use circleflow::curvature::{curvature_state, PackingMetric};
use circleflow::flow::{check_max_principle, run_flow, FlowConfig, FlowMode, MonotoneVerdict, Termination};
use circleflow::io::{self, ParsedMesh};
use circleflow::layout;
use circleflow::mesh::{ValidationMode, VertexSubset, WeightedTriangulation};
use circleflow::newton::newton_solve;
use circleflow::{Error, Geometry};

const EXIT_OTHER: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_CONDITION: u8 = 4;
const EXIT_NO_CONVERGENCE: u8 = 5;
const EXIT_UNDETERMINED: u8 = 6;

#[derive(Parser)]
#[command(name = "circleflow", version, about = "Circle packing metrics by combinatorial Ricci flow")]
struct Cli {
    /// Accept meshes with repeated vertex triples.
    #[arg(long, global = true)]
    relaxed: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a mesh and check the existence conditions for its geometry.
    Check {
        mesh: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        /// Largest vertex count for the exhaustive subset scan.
        #[arg(long, default_value_t = SUBSET_CAP)]
        cap: usize,
    },
    /// Run the flow (or Newton's method) to the target curvatures.
    Flow {
        mesh: PathBuf,
        /// explicit_euler or newton
        #[arg(long, default_value = "explicit_euler")]
        mode: String,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Write the trace as JSON lines.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the mesh with the final radii.
        #[arg(long)]
        save_mesh: Option<PathBuf>,
    },
    /// Draw the packing as SVG.
    Layout {
        mesh: PathBuf,
        /// JSON array of radii; defaults to the radii in the mesh file.
        #[arg(long, conflicts_with = "trace")]
        radii: Option<PathBuf>,
        /// Take the radii from the last sample of a trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Solve for the target curvatures first.
        #[arg(long, conflicts_with_all = ["radii", "trace"])]
        solve: bool,
        #[arg(long, default_value = "packing.svg")]
        out: PathBuf,
    },
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse { .. }) => EXIT_PARSE,
        Some(Error::Validation(_)) => EXIT_VALIDATION,
        Some(Error::NonConvergence(_)) | Some(Error::StepUnderflow { .. }) => EXIT_NO_CONVERGENCE,
        _ => EXIT_OTHER,
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("CIRCLEFLOW_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let mode = if cli.relaxed { ValidationMode::Relaxed } else { ValidationMode::Strict };
    let result = match cli.command {
        Command::Check { mesh, json, cap } => cmd_check(&mesh, mode, json, cap),
        Command::Flow { mesh, mode: flow_mode, tol, max_steps, out, save_mesh } => {
            cmd_flow(&mesh, mode, &flow_mode, tol, max_steps, out.as_deref(), save_mesh.as_deref())
        }
        Command::Layout { mesh, radii, trace, solve, out } => {
            cmd_layout(&mesh, mode, radii.as_deref(), trace.as_deref(), solve, &out)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            if let Some(Error::Validation(violations)) = err.downcast_ref::<Error>() {
                for v in violations {
                    eprintln!("  {v}");
                }
            }
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn load(path: &Path, mode: ValidationMode) -> anyhow::Result<ParsedMesh> {
    Ok(io::parse_mesh_with(path, mode)?)
}

fn subset_label(s: &VertexSubset) -> String {
    let m: Vec<String> = s.members().iter().map(usize::to_string).collect();
    format!("{{{}}}", m.join(", "))
}

fn print_loop_verdict(name: &str, v: &LoopVerdict) {
    match v {
        LoopVerdict::Holds => println!("{name}: holds"),
        LoopVerdict::Fails { witness } => println!(
            "{name}: FAILS on loop through vertices {:?} (edges {:?}, weight sum {:.6})",
            witness.vertices, witness.edges, witness.weight_sum
        ),
        LoopVerdict::Undetermined { loops } => {
            println!("{name}: undetermined ({} loop(s) of unknown homotopy class)", loops.len())
        }
    }
}

fn report_exit(report: &ConditionReport) -> u8 {
    let mut undetermined = false;
    if let Some(c) = &report.condition_13 {
        match c {
            Condition13::Fails { .. } => return EXIT_CONDITION,
            Condition13::Skipped { partial, .. } => match partial {
                LoopVerdict::Fails { .. } => return EXIT_CONDITION,
                _ => undetermined = true,
            },
            Condition13::Holds { .. } => {}
        }
    }
    for v in [&report.condition_15a, &report.condition_15b].into_iter().flatten() {
        match v {
            LoopVerdict::Fails { .. } => return EXIT_CONDITION,
            LoopVerdict::Undetermined { .. } => undetermined = true,
            LoopVerdict::Holds => {}
        }
    }
    if undetermined {
        EXIT_UNDETERMINED
    } else {
        0
    }
}

fn cmd_check(path: &Path, mode: ValidationMode, json: bool, cap: usize) -> anyhow::Result<u8> {
    let parsed = load(path, mode)?;
    let mesh = &parsed.mesh;
    let report = match parsed.geometry {
        Geometry::Euclidean => ConditionReport {
            condition_13: Some(conditions::check_condition_13_with(mesh, &parsed.targets, cap)),
            ..conditions::check_all(mesh, parsed.geometry, &parsed.targets)
        },
        g => conditions::check_all(mesh, g, &parsed.targets),
    };
    let code = report_exit(&report);
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(code);
    }
    println!(
        "{}: {} geometry, {} vertices, {} edges, {} faces, chi = {}",
        path.display(),
        parsed.geometry,
        mesh.vertex_count(),
        mesh.edges().len(),
        mesh.faces().len(),
        mesh.euler_characteristic()
    );
    match &report.condition_13 {
        Some(Condition13::Holds { subsets_checked, tightest }) => println!(
            "subset inequality: holds on all {subsets_checked} subsets (tightest {} with margin {:.6e})",
            subset_label(&tightest.subset),
            tightest.margin
        ),
        Some(Condition13::Fails { witness, lhs, rhs, tie, strict_failures, ties }) => println!(
            "subset inequality: FAILS on {} ({lhs:.9} vs bound {rhs:.9}{}); {strict_failures} strict failure(s), {ties} tie(s)",
            subset_label(witness),
            if *tie { ", equality within slack" } else { "" }
        ),
        Some(Condition13::Skipped { vertex_count, cap, partial }) => {
            println!("subset inequality: skipped ({vertex_count} vertices exceed the cap of {cap})");
            print_loop_verdict("  necessary loop conditions", partial);
        }
        None => {}
    }
    if let Some(v) = &report.condition_15a {
        print_loop_verdict("null-homotopic 3-loops", v);
    }
    if let Some(v) = &report.condition_15b {
        print_loop_verdict("null-homotopic 4-loops", v);
    }
    if parsed.geometry == Geometry::Spherical {
        println!("spherical geometry: no existence condition is checked");
    }
    Ok(code)
}

/// Most negative subset margin among singletons and the sets of the k smallest radii.
fn degeneration_hint(mesh: &WeightedTriangulation, metric: &PackingMetric, targets: &[f64]) -> Option<(VertexSubset, f64)> {
    let n = mesh.vertex_count();
    let mut by_radius: Vec<usize> = (0..n).collect();
    by_radius.sort_by(|&a, &b| metric.radii()[a].total_cmp(&metric.radii()[b]));
    let mut candidates: Vec<VertexSubset> = (0..n).filter_map(|v| VertexSubset::new([v], n).ok()).collect();
    for k in 2..n {
        if let Ok(s) = VertexSubset::new(by_radius[..k].iter().copied(), n) {
            candidates.push(s);
        }
    }
    candidates
        .into_iter()
        .map(|s| {
            let lhs: f64 = s.members().iter().map(|&v| targets[v]).sum();
            let margin = lhs - subset_bound(mesh, &s);
            (s, margin)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

fn cmd_flow(
    path: &Path,
    mode: ValidationMode,
    flow_mode: &str,
    tol: Option<f64>,
    max_steps: Option<usize>,
    out: Option<&Path>,
    save_mesh: Option<&Path>,
) -> anyhow::Result<u8> {
    let parsed = load(path, mode)?;
    let flow_mode: FlowMode = flow_mode.parse()?;
    let mesh = &parsed.mesh;
    let mut config = FlowConfig::new(mesh, parsed.geometry, flow_mode).with_targets(parsed.targets.clone());
    if let Some(t) = tol {
        config.tol_curvature = t;
    }
    if let Some(m) = max_steps {
        config.max_steps = m;
    }

    if flow_mode == FlowMode::Newton {
        return match newton_solve(mesh, &parsed.metric, &config) {
            Ok(outcome) => {
                println!("converged after {} Newton iteration(s), residual {:.3e}", outcome.iterations, outcome.residual);
                println!("radii: {:?}", outcome.metric.radii());
                if let Some(p) = save_mesh {
                    io::write_mesh(p, mesh, parsed.geometry, Some(outcome.metric.radii()), Some(&parsed.targets))?;
                }
                Ok(0)
            }
            Err(Error::NonConvergence(nc)) => {
                println!(
                    "no convergence after {} Newton iteration(s), residual {:.3e}",
                    nc.iterations, nc.residual
                );
                if let Some((s, margin)) = degeneration_hint(mesh, &nc.best, &parsed.targets) {
                    println!("heuristic: most negative subset margin {margin:.6e} on {}", subset_label(&s));
                }
                Ok(EXIT_NO_CONVERGENCE)
            }
            Err(e) => Err(e.into()),
        };
    }

    let (trace, report) = run_flow(mesh, &parsed.metric, &config)?;
    if let Some(p) = out {
        let file = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        io::write_trace(BufWriter::new(file), &trace, report.as_ref())?;
    }
    let last = trace.last().expect("a trace always holds the initial sample");
    let residual = last.sup_deviation(&trace.targets);
    if parsed.geometry == Geometry::Spherical {
        println!("{}", Termination::Stopped.describe());
        println!(
            "reason: {} after {} accepted / {} rejected step(s), t = {:.6}, residual {:.3e}",
            trace.termination.describe(),
            trace.accepted_steps,
            trace.rejected_steps,
            last.t,
            residual
        );
        println!("last radii: {:?}", last.radii);
        if let Some(p) = save_mesh {
            io::write_mesh(p, mesh, parsed.geometry, Some(&last.radii), Some(&parsed.targets))?;
        }
        return Ok(0);
    }
    println!(
        "{} after {} accepted / {} rejected step(s), t = {:.6}, residual {:.3e}",
        trace.termination.describe(),
        trace.accepted_steps,
        trace.rejected_steps,
        last.t,
        residual
    );
    if let Some(r) = &report {
        match r.rate_c2 {
            Some(c2) => println!("exponential rate c2 = {c2:.6}"),
            None => println!("exponential rate: too few samples to fit"),
        }
    }
    match check_max_principle(&trace, parsed.geometry) {
        MonotoneVerdict::Pass => println!("max principle: holds along the trace"),
        MonotoneVerdict::Fail { sample, quantity, before, after } => {
            println!("max principle: violated at sample {sample} ({quantity}: {before:.6e} -> {after:.6e})")
        }
        MonotoneVerdict::NotApplicable => {}
    }
    let metric = trace.final_metric()?;
    if let Some(p) = save_mesh {
        io::write_mesh(p, mesh, parsed.geometry, Some(metric.radii()), Some(&parsed.targets))?;
    }
    Ok(match trace.termination {
        Termination::Converged | Termination::Stopped => 0,
        Termination::ConstraintHit => EXIT_NO_CONVERGENCE,
        Termination::MaxSteps | Termination::Degenerated => {
            println!("last radii: {:?}", metric.radii());
            if let Some((s, margin)) = degeneration_hint(mesh, &metric, &parsed.targets) {
                println!("heuristic: most negative subset margin {margin:.6e} on {}", subset_label(&s));
            }
            EXIT_NO_CONVERGENCE
        }
    })
}

fn cmd_layout(
    path: &Path,
    mode: ValidationMode,
    radii: Option<&Path>,
    trace: Option<&Path>,
    solve: bool,
    out: &Path,
) -> anyhow::Result<u8> {
    let parsed = load(path, mode)?;
    let mesh = &parsed.mesh;
    let metric = if let Some(p) = radii {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let r: Vec<f64> = serde_json::from_str(&text).map_err(|e| Error::Parse {
            location: format!("{}:{}:{}", p.display(), e.line(), e.column()),
            message: e.to_string(),
        })?;
        PackingMetric::new(parsed.geometry, r)?
    } else if let Some(p) = trace {
        let file = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
        let (t, _) = io::read_trace(BufReader::new(file))?;
        t.final_metric()?
    } else if solve {
        let config = FlowConfig::new(mesh, parsed.geometry, FlowMode::Newton).with_targets(parsed.targets.clone());
        newton_solve(mesh, &parsed.metric, &config)?.metric
    } else {
        parsed.metric.clone()
    };
    if metric.len() != mesh.vertex_count() {
        return Err(Error::InvalidMetric(format!("{} radii for {} vertices", metric.len(), mesh.vertex_count())).into());
    }
    let plan = layout::develop(mesh, &metric)?;
    fs::write(out, plan.to_svg(mesh)).with_context(|| format!("writing {}", out.display()))?;
    let state = curvature_state(mesh, &metric)?;
    println!(
        "wrote {} ({} faces, {} cut edge(s), curvature residual {:.3e})",
        out.display(),
        mesh.faces().len(),
        plan.cut_edges.len(),
        state.sup_deviation(&parsed.targets)
    );
    Ok(0)
}
