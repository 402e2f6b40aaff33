//! Existence conditions for constant-curvature packings.
//!
//! For a vertex subset `I` the degeneration bound is
//! `B(I) = -sum_{(e, v) in Lk(I)} (pi - weight(e)) + 2 pi chi(F_I)`, the limit
//! of `sum_{i in I} K_i` when the radii in `I` shrink to zero. A flat packing
//! with curvature `target` exists iff `sum_{i in I} target_i > B(I)` for every
//! proper nonempty `I`. The hyperbolic conditions are phrased on short
//! null-homotopic loops instead.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{curvature_state, KahanSum, PackingMetric};
use crate::error::{Error, Result};
use crate::kernel::Geometry;
use crate::mesh::{enumerate_short_loops, Homotopy, ShortLoop, VertexSubset, WeightedTriangulation};

/// Largest vertex count for the exhaustive subset scan.
pub const SUBSET_CAP: usize = 20;

/// Relative slack under which both sides of the subset inequality count as tied.
pub const TIE_SLACK: f64 = 1e-12;

/// `B(I)`.
pub fn subset_bound(mesh: &WeightedTriangulation, subset: &VertexSubset) -> f64 {
    let stats = mesh.subcomplex_and_link(subset);
    let mut sum = KahanSum::default();
    for p in &stats.link_pairs {
        sum.add(-(PI - mesh.edge(p.edge).weight));
    }
    sum.add(TAU * stats.euler_char as f64);
    sum.value()
}

fn near_tie(lhs: f64, rhs: f64) -> bool {
    (lhs - rhs).abs() <= TIE_SLACK * 1f64.max(lhs.abs()).max(rhs.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetBound {
    pub subset: VertexSubset,
    pub bound: f64,
    /// `sum_{i in I} target_i - B(I)`; the inequality asks for a positive margin.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Condition13 {
    Holds {
        subsets_checked: u64,
        /// Subset with the smallest margin.
        tightest: SubsetBound,
    },
    Fails {
        /// Lexicographically least failing subset.
        witness: VertexSubset,
        lhs: f64,
        rhs: f64,
        /// Both sides agree within the tie slack.
        tie: bool,
        strict_failures: u64,
        ties: u64,
    },
    Skipped {
        vertex_count: usize,
        cap: usize,
        /// Necessary loop conditions, checked instead.
        partial: LoopVerdict,
    },
}

impl Condition13 {
    pub fn holds(&self) -> bool {
        matches!(self, Condition13::Holds { .. })
    }
}

/// Verdict of a loop condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LoopVerdict {
    Holds,
    Fails { witness: ShortLoop },
    /// Loops whose homotopy class could not be decided and which would
    /// matter if null-homotopic.
    Undetermined { loops: Vec<ShortLoop> },
}

impl LoopVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, LoopVerdict::Holds)
    }
}

// Per-mask evaluation of B(I) without allocating.
struct MaskBound {
    faces: Vec<([usize; 3], [f64; 3])>,
    edges: Vec<(usize, usize)>,
}

impl MaskBound {
    fn new(mesh: &WeightedTriangulation) -> Self {
        let faces = (0..mesh.faces().len())
            .map(|f| {
                let face = mesh.face(f);
                (face.vertices, mesh.face_weights(f))
            })
            .collect();
        let edges = mesh.edges().iter().map(|e| (e.a, e.b)).collect();
        Self { faces, edges }
    }

    fn bound(&self, mask: u64) -> f64 {
        let inside = |v: usize| mask >> v & 1 == 1;
        let mut link = 0.0;
        let mut chi = mask.count_ones() as i64;
        for &(a, b) in &self.edges {
            if inside(a) && inside(b) {
                chi -= 1;
            }
        }
        for (vs, ws) in &self.faces {
            let hits = vs.iter().filter(|&&v| inside(v)).count();
            if hits == 3 {
                chi += 1;
            } else if hits == 1 {
                let slot = vs.iter().position(|&v| inside(v)).unwrap_or(0);
                link -= PI - ws[slot];
            }
        }
        link + TAU * chi as f64
    }
}

fn mask_members(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&v| mask >> v & 1 == 1).collect()
}

/// Subset inequality with the constant targets `2 pi chi / N`.
pub fn check_condition_13(mesh: &WeightedTriangulation) -> Condition13 {
    let n = mesh.vertex_count();
    let targets = vec![TAU * mesh.euler_characteristic() as f64 / n as f64; n];
    check_condition_13_with(mesh, &targets, SUBSET_CAP)
}

/// Subset inequality `sum_{i in I} target_i > B(I)` over every proper nonempty
/// subset, when `N <= cap`. Larger meshes get the loop conditions instead.
pub fn check_condition_13_with(mesh: &WeightedTriangulation, targets: &[f64], cap: usize) -> Condition13 {
    let n = mesh.vertex_count();
    if n > cap.min(63) || n < 2 {
        return Condition13::Skipped { vertex_count: n, cap, partial: loop_surrogate(mesh) };
    }
    let eval = MaskBound::new(mesh);
    let full = (1u64 << n) - 1;
    let lhs_of = |mask: u64| -> f64 { (0..n).filter(|&v| mask >> v & 1 == 1).map(|v| targets[v]).sum() };

    #[derive(Clone)]
    struct Acc {
        worst: Option<(f64, u64)>,
        fail: Option<(Vec<usize>, u64)>,
        strict: u64,
        ties: u64,
    }
    let empty = Acc { worst: None, fail: None, strict: 0, ties: 0 };
    let merge = |mut a: Acc, b: Acc| {
        a.strict += b.strict;
        a.ties += b.ties;
        if let Some(w) = b.worst {
            if a.worst.is_none_or(|x| w.0 < x.0 || (w.0 == x.0 && w.1 < x.1)) {
                a.worst = Some(w);
            }
        }
        if let Some(f) = b.fail {
            if a.fail.as_ref().is_none_or(|x| f.0 < x.0) {
                a.fail = Some(f);
            }
        }
        a
    };

    let acc = (1..full)
        .into_par_iter()
        .fold(
            || empty.clone(),
            |mut acc, mask| {
                let lhs = lhs_of(mask);
                let rhs = eval.bound(mask);
                let margin = lhs - rhs;
                if acc.worst.is_none_or(|w| margin < w.0) {
                    acc.worst = Some((margin, mask));
                }
                let tie = near_tie(lhs, rhs);
                if tie || lhs <= rhs {
                    if tie {
                        acc.ties += 1;
                    } else {
                        acc.strict += 1;
                    }
                    let members = mask_members(mask, n);
                    if acc.fail.as_ref().is_none_or(|f| members < f.0) {
                        acc.fail = Some((members, mask));
                    }
                }
                acc
            },
        )
        .reduce(|| empty.clone(), merge);

    if let Some((members, mask)) = acc.fail {
        let lhs = lhs_of(mask);
        let rhs = eval.bound(mask);
        return Condition13::Fails {
            witness: VertexSubset::new(members, n).expect("proper nonempty mask"),
            lhs,
            rhs,
            tie: near_tie(lhs, rhs),
            strict_failures: acc.strict,
            ties: acc.ties,
        };
    }
    let (margin, mask) = acc.worst.expect("at least one subset");
    let subset = VertexSubset::new(mask_members(mask, n), n).expect("proper nonempty mask");
    Condition13::Holds {
        subsets_checked: full - 1,
        tightest: SubsetBound { bound: eval.bound(mask), margin, subset },
    }
}

fn meets(sum: f64, threshold: f64) -> bool {
    sum >= threshold - TIE_SLACK * threshold.max(1.0)
}

fn loop_check(loops: &[ShortLoop], len: usize, threshold: f64, ok: impl Fn(&ShortLoop) -> bool) -> LoopVerdict {
    let mut unknown = Vec::new();
    for l in loops.iter().filter(|l| l.len() == len && meets(l.weight_sum, threshold) && !ok(l)) {
        match l.homotopy {
            Homotopy::NullHomotopic => return LoopVerdict::Fails { witness: l.clone() },
            Homotopy::Essential => {}
            Homotopy::Undetermined => unknown.push(l.clone()),
        }
    }
    if unknown.is_empty() {
        LoopVerdict::Holds
    } else {
        LoopVerdict::Undetermined { loops: unknown }
    }
}

/// Verdicts for the triangle condition and the quadrilateral condition:
/// a null-homotopic 3-loop of weight at least `pi` must bound a face, and a
/// null-homotopic 4-loop of weight at least `2 pi` must bound two adjacent faces.
pub fn check_conditions_15(mesh: &WeightedTriangulation) -> (LoopVerdict, LoopVerdict) {
    let loops = enumerate_short_loops(mesh, 4);
    (
        loop_check(&loops, 3, PI, |l| l.bounds_face),
        loop_check(&loops, 4, TAU, |l| l.bounds_two_faces),
    )
}

fn loop_surrogate(mesh: &WeightedTriangulation) -> LoopVerdict {
    match check_conditions_15(mesh) {
        (LoopVerdict::Fails { witness }, _) | (_, LoopVerdict::Fails { witness }) => {
            LoopVerdict::Fails { witness }
        }
        (LoopVerdict::Undetermined { mut loops }, b) => {
            if let LoopVerdict::Undetermined { loops: more } = b {
                loops.extend(more);
            }
            LoopVerdict::Undetermined { loops }
        }
        (LoopVerdict::Holds, b) => b,
    }
}

/// `B(I)` and its margin for every singleton.
pub fn singleton_bounds(mesh: &WeightedTriangulation, targets: &[f64]) -> Vec<SubsetBound> {
    let n = mesh.vertex_count();
    (0..n)
        .filter_map(|v| VertexSubset::new([v], n).ok())
        .map(|s| {
            let bound = subset_bound(mesh, &s);
            let margin = targets[s.members()[0]] - bound;
            SubsetBound { subset: s, bound, margin }
        })
        .collect()
}

/// All condition verdicts relevant to a geometry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition_13: Option<Condition13>,
    pub condition_15a: Option<LoopVerdict>,
    pub condition_15b: Option<LoopVerdict>,
    pub subset_bounds: Option<Vec<SubsetBound>>,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.condition_13.as_ref().is_none_or(Condition13::holds)
            && self.condition_15a.as_ref().is_none_or(LoopVerdict::holds)
            && self.condition_15b.as_ref().is_none_or(LoopVerdict::holds)
    }
}

/// Subset inequality for Euclidean meshes, loop conditions for hyperbolic
/// ones; spherical meshes have no condition to check.
pub fn check_all(mesh: &WeightedTriangulation, geometry: Geometry, targets: &[f64]) -> ConditionReport {
    match geometry {
        Geometry::Euclidean => ConditionReport {
            condition_13: Some(check_condition_13_with(mesh, targets, SUBSET_CAP)),
            condition_15a: None,
            condition_15b: None,
            subset_bounds: Some(singleton_bounds(mesh, targets)),
        },
        Geometry::Hyperbolic => {
            let (a, b) = check_conditions_15(mesh);
            ConditionReport {
                condition_13: None,
                condition_15a: Some(a),
                condition_15b: Some(b),
                subset_bounds: Some(singleton_bounds(mesh, targets)),
            }
        }
        Geometry::Spherical => ConditionReport {
            condition_13: None,
            condition_15a: None,
            condition_15b: None,
            subset_bounds: None,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRow {
    pub factor: f64,
    /// `sum_{i in I} K_i` with the radii in `I` scaled by `factor`.
    pub curvature_sum: f64,
    pub bound: f64,
    pub gap: f64,
}

/// Shrink the radii in `subset` by each factor and compare `sum_{i in I} K_i`
/// with `B(I)`.
pub fn degeneration_probe(
    mesh: &WeightedTriangulation,
    metric: &PackingMetric,
    subset: &VertexSubset,
    factors: &[f64],
) -> Result<Vec<ProbeRow>> {
    if metric.geometry == Geometry::Spherical {
        return Err(Error::Unsupported("degeneration probe needs Euclidean or hyperbolic geometry".into()));
    }
    let bound = subset_bound(mesh, subset);
    factors
        .iter()
        .map(|&factor| {
            if !(factor > 0.0) {
                return Err(Error::Domain(format!("shrink factor {factor} must be positive")));
            }
            let radii = metric
                .radii()
                .iter()
                .enumerate()
                .map(|(v, &r)| if subset.contains(v) { r * factor } else { r })
                .collect();
            let scaled = PackingMetric::new(metric.geometry, radii)?;
            let state = curvature_state(mesh, &scaled)?;
            let mut sum = KahanSum::default();
            for &v in subset.members() {
                sum.add(state.curvatures[v]);
            }
            let curvature_sum = sum.value();
            Ok(ProbeRow { factor, curvature_sum, bound, gap: curvature_sum - bound })
        })
        .collect()
}
