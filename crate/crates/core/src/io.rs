//! Mesh files (pretty JSON) and flow traces (JSON lines).

use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curvature::PackingMetric;
use crate::error::{Error, Result};
use crate::flow::{default_targets, ConvergenceReport, FlowSample, FlowTrace, Termination};
use crate::kernel::Geometry;
use crate::mesh::{Edge, Face, ValidationMode, WeightedTriangulation};

/// Edge weight in radians, or `{"deg": x}` in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightValue {
    Radians(f64),
    Degrees { deg: f64 },
}

impl WeightValue {
    pub fn radians(self) -> f64 {
        match self {
            WeightValue::Radians(r) => r,
            WeightValue::Degrees { deg } => deg * PI / 180.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub a: usize,
    pub b: usize,
    pub weight: WeightValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceRecord {
    pub v: [usize; 3],
    pub e: [usize; 3],
}

/// On-disk mesh document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub geometry: Geometry,
    pub vertices: usize,
    pub edges: Vec<EdgeRecord>,
    pub faces: Vec<FaceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<f64>>,
}

impl MeshFile {
    pub fn from_mesh(
        mesh: &WeightedTriangulation,
        geometry: Geometry,
        radii: Option<&[f64]>,
        targets: Option<&[f64]>,
    ) -> Self {
        Self {
            geometry,
            vertices: mesh.vertex_count(),
            edges: mesh
                .edges()
                .iter()
                .map(|e| EdgeRecord { a: e.a, b: e.b, weight: WeightValue::Radians(e.weight) })
                .collect(),
            faces: mesh.faces().iter().map(|f| FaceRecord { v: f.vertices, e: f.edges }).collect(),
            radii: radii.map(<[f64]>::to_vec),
            targets: targets.map(<[f64]>::to_vec),
        }
    }

    pub fn to_mesh(&self) -> WeightedTriangulation {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { a: e.a, b: e.b, weight: e.weight.radians() })
            .collect();
        let faces = self.faces.iter().map(|f| Face { vertices: f.v, edges: f.e }).collect();
        WeightedTriangulation::new(self.vertices, edges, faces)
    }
}

/// A validated mesh with its metric and targets, defaults filled in.
#[derive(Debug, Clone)]
pub struct ParsedMesh {
    pub geometry: Geometry,
    pub mesh: WeightedTriangulation,
    pub metric: PackingMetric,
    pub targets: Vec<f64>,
    pub radii_given: bool,
    pub targets_given: bool,
}

fn parse_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), message: message.into() }
}

/// Parse and validate a mesh document held in memory.
pub fn parse_mesh_str(text: &str, origin: &str, mode: ValidationMode) -> Result<ParsedMesh> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| {
        parse_error(format!("{origin}:{}:{}", e.line(), e.column()), e.to_string())
    })?;
    let mesh = file.to_mesh();
    mesh.ensure_valid(mode)?;
    let n = mesh.vertex_count();

    let (metric, radii_given) = match &file.radii {
        Some(r) => {
            if r.len() != n {
                return Err(parse_error(
                    format!("{origin}: field `radii`"),
                    format!("{} radii for {n} vertices", r.len()),
                ));
            }
            let m = PackingMetric::new(file.geometry, r.clone())?;
            m.check_for(&mesh)?;
            (m, true)
        }
        None => (PackingMetric::default_for(file.geometry, n), false),
    };
    let (targets, targets_given) = match &file.targets {
        Some(t) => {
            if t.len() != n {
                return Err(parse_error(
                    format!("{origin}: field `targets`"),
                    format!("{} targets for {n} vertices", t.len()),
                ));
            }
            (t.clone(), true)
        }
        None => (default_targets(&mesh, file.geometry), false),
    };
    Ok(ParsedMesh { geometry: file.geometry, mesh, metric, targets, radii_given, targets_given })
}

pub fn parse_mesh_with(path: &Path, mode: ValidationMode) -> Result<ParsedMesh> {
    let text = fs::read_to_string(path)?;
    parse_mesh_str(&text, &path.display().to_string(), mode)
}

/// Parse and validate a mesh file in strict mode.
pub fn parse_mesh(path: &Path) -> Result<ParsedMesh> {
    parse_mesh_with(path, ValidationMode::Strict)
}

pub fn mesh_to_json(
    mesh: &WeightedTriangulation,
    geometry: Geometry,
    radii: Option<&[f64]>,
    targets: Option<&[f64]>,
) -> String {
    let file = MeshFile::from_mesh(mesh, geometry, radii, targets);
    serde_json::to_string_pretty(&file).expect("mesh documents always serialize")
}

pub fn write_mesh(
    path: &Path,
    mesh: &WeightedTriangulation,
    geometry: Geometry,
    radii: Option<&[f64]>,
    targets: Option<&[f64]>,
) -> Result<()> {
    let mut text = mesh_to_json(mesh, geometry, radii, targets);
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Last line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEnd {
    pub termination: Termination,
    pub geometry: Geometry,
    pub targets: Vec<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub report: Option<ConvergenceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum TraceRecord {
    Sample(FlowSample),
    End(TraceEnd),
}

/// One JSON object per sample, then the terminal record.
pub fn write_trace(
    mut out: impl Write,
    trace: &FlowTrace,
    report: Option<&ConvergenceReport>,
) -> Result<()> {
    let io = |e: serde_json::Error| Error::Io(e.into());
    for s in &trace.samples {
        serde_json::to_writer(&mut out, s).map_err(io)?;
        out.write_all(b"\n")?;
    }
    let end = TraceEnd {
        termination: trace.termination,
        geometry: trace.geometry,
        targets: trace.targets.clone(),
        accepted_steps: trace.accepted_steps,
        rejected_steps: trace.rejected_steps,
        report: report.cloned(),
    };
    serde_json::to_writer(&mut out, &end).map_err(io)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_trace(input: impl BufRead) -> Result<(FlowTrace, Option<ConvergenceReport>)> {
    let mut samples: Vec<FlowSample> = Vec::new();
    let mut end = None;
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let loc = format!("trace line {}", k + 1);
        if end.is_some() {
            return Err(parse_error(loc, "record after the terminal record"));
        }
        match serde_json::from_str::<TraceRecord>(&line).map_err(|e| parse_error(&loc, e.to_string()))? {
            TraceRecord::Sample(s) => {
                if let Some(prev) = samples.last() {
                    if !(s.t > prev.t) {
                        return Err(parse_error(loc, format!("time {} does not increase", s.t)));
                    }
                }
                samples.push(s);
            }
            TraceRecord::End(e) => end = Some(e),
        }
    }
    let end = end.ok_or_else(|| parse_error("trace", "missing terminal record"))?;
    let trace = FlowTrace {
        geometry: end.geometry,
        targets: end.targets,
        samples,
        termination: end.termination,
        accepted_steps: end.accepted_steps,
        rejected_steps: end.rejected_steps,
    };
    Ok((trace, end.report))
}
