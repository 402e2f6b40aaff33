//! Development of a packing into the plane or the Poincaré disk, and SVG output.
//!
//! Faces are laid out one by one along a breadth-first spanning tree of the
//! dual graph, starting from face 0. Each new face is attached to its parent
//! along their common edge, so the two share the endpoint coordinates exactly.
//! Edges outside the tree are cut edges; their two copies need not agree.

use std::collections::VecDeque;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::curvature::{face_angles, PackingMetric};
use crate::error::{Error, Result};
use crate::kernel::Geometry;
use crate::mesh::WeightedTriangulation;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutPlan {
    pub geometry: Geometry,
    pub seed_face: usize,
    /// Vertex positions of every face, slot by slot.
    pub placements: Vec<[Complex64; 3]>,
    /// `(parent face, shared edge)` in the development tree; `None` for the seed.
    pub parent: Vec<Option<(usize, usize)>>,
    /// Faces in the order they were placed.
    pub order: Vec<usize>,
    /// Edges not crossed by the development tree.
    pub cut_edges: Vec<usize>,
    /// Radius of each vertex.
    pub radii: Vec<f64>,
}

/// Hyperbolic distance between two points of the Poincaré disk.
pub fn poincare_distance(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm();
    let den = (Complex64::new(1.0, 0.0) - z.conj() * w).norm();
    2.0 * (num / den).atanh()
}

/// Distance in the model of `geometry` (Euclidean or Poincaré).
pub fn model_distance(geometry: Geometry, z: Complex64, w: Complex64) -> f64 {
    match geometry {
        Geometry::Hyperbolic => poincare_distance(z, w),
        _ => (z - w).norm(),
    }
}

// Maps of the disk: z -> (z - p) / (1 - conj(p) z) and its inverse.
fn mobius_to_origin(p: Complex64, z: Complex64) -> Complex64 {
    (z - p) / (Complex64::new(1.0, 0.0) - p.conj() * z)
}

fn mobius_from_origin(p: Complex64, z: Complex64) -> Complex64 {
    (z + p) / (Complex64::new(1.0, 0.0) + p.conj() * z)
}

/// Point at distance `d` from the origin in direction `angle`, in the model.
fn polar(geometry: Geometry, d: f64, angle: f64) -> Complex64 {
    let rho = match geometry {
        Geometry::Hyperbolic => (0.5 * d).tanh(),
        _ => d,
    };
    Complex64::from_polar(rho, angle)
}

/// Position of the third vertex `w` of a triangle with known vertices `p`, `q`,
/// given `|pw| = d` and the angle `theta` at `p`, on the side of `pq` away from `avoid`.
fn third_vertex(
    geometry: Geometry,
    p: Complex64,
    q: Complex64,
    d: f64,
    theta: f64,
    avoid: Option<Complex64>,
) -> Complex64 {
    match geometry {
        Geometry::Hyperbolic => {
            let q0 = mobius_to_origin(p, q);
            let rot = q0.conj() / q0.norm();
            let side = avoid.map_or(1.0, |a| {
                let a0 = mobius_to_origin(p, a) * rot;
                if a0.im > 0.0 {
                    -1.0
                } else {
                    1.0
                }
            });
            let w0 = polar(geometry, d, side * theta);
            mobius_from_origin(p, w0 / rot)
        }
        _ => {
            let dir = (q - p) / (q - p).norm();
            let side = avoid.map_or(1.0, |a| {
                let a0 = (a - p) * dir.conj();
                if a0.im > 0.0 {
                    -1.0
                } else {
                    1.0
                }
            });
            p + dir * Complex64::from_polar(d, side * theta)
        }
    }
}

/// Develop `metric` along the breadth-first dual tree from face 0.
pub fn develop(mesh: &WeightedTriangulation, metric: &PackingMetric) -> Result<LayoutPlan> {
    let geometry = metric.geometry;
    if geometry == Geometry::Spherical {
        return Err(Error::Unsupported("layout is available for Euclidean and hyperbolic metrics only".into()));
    }
    let nf = mesh.faces().len();
    if nf == 0 {
        return Err(Error::Domain("mesh has no faces".into()));
    }
    let tris = face_angles(mesh, metric)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut placements = vec![[zero; 3]; nf];
    let mut placed = vec![false; nf];
    let mut parent = vec![None; nf];
    let mut order = Vec::with_capacity(nf);
    let mut tree_edge = vec![false; mesh.edges().len()];

    let seed = 0;
    {
        let x = tris[seed].lengths;
        let th = tris[seed].angles;
        // slot 0 at the origin, slot 1 on the positive real axis
        placements[seed][0] = zero;
        placements[seed][1] = polar(geometry, x[2], 0.0);
        placements[seed][2] = polar(geometry, x[1], th[0]);
        placed[seed] = true;
        order.push(seed);
    }

    let mut queue = VecDeque::from([seed]);
    while let Some(f) = queue.pop_front() {
        let face = *mesh.face(f);
        for slot in 0..3 {
            let e = face.edges[slot];
            for &(g, gslot) in mesh.edge_faces(e) {
                if g == f || placed[g] {
                    continue;
                }
                let gface = *mesh.face(g);
                let a = (gslot + 1) % 3;
                let b = (gslot + 2) % 3;
                let pos_in_parent = |v: usize| {
                    let s = face.slot_of(v).expect("shared edge endpoint lies on the parent");
                    placements[f][s]
                };
                let pa = pos_in_parent(gface.vertices[a]);
                let pb = pos_in_parent(gface.vertices[b]);
                let avoid = placements[f][slot];
                // |a w| is the edge opposite slot b
                let w = third_vertex(
                    geometry,
                    pa,
                    pb,
                    tris[g].lengths[b],
                    tris[g].angles[a],
                    Some(avoid),
                );
                let mut pos = [zero; 3];
                pos[a] = pa;
                pos[b] = pb;
                pos[gslot] = w;
                placements[g] = pos;
                placed[g] = true;
                parent[g] = Some((f, e));
                tree_edge[e] = true;
                order.push(g);
                queue.push_back(g);
            }
        }
    }
    if order.len() != nf {
        return Err(Error::Domain("dual graph is disconnected".into()));
    }
    let cut_edges = (0..mesh.edges().len()).filter(|&e| !tree_edge[e]).collect();
    Ok(LayoutPlan {
        geometry,
        seed_face: seed,
        placements,
        parent,
        order,
        cut_edges,
        radii: metric.radii().to_vec(),
    })
}

/// A circle in drawing coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrawnCircle {
    pub vertex: usize,
    pub center: Complex64,
    pub radius: f64,
}

/// Euclidean center and radius of the hyperbolic circle of radius `r`
/// around the disk point `c`.
pub fn hyperbolic_circle_image(c: Complex64, r: f64) -> (Complex64, f64) {
    let rho = (0.5 * r).tanh();
    let a = c.norm();
    if a == 0.0 {
        return (c, rho);
    }
    let dir = c / a;
    let far = (a + rho) / (1.0 + a * rho);
    let near = (a - rho) / (1.0 - a * rho);
    (dir * (0.5 * (far + near)), 0.5 * (far - near))
}

impl LayoutPlan {
    /// One circle per distinct placed vertex copy.
    pub fn circles(&self, mesh: &WeightedTriangulation) -> Vec<DrawnCircle> {
        let mut out: Vec<DrawnCircle> = Vec::new();
        let mut seen: Vec<(usize, u64, u64)> = Vec::new();
        for &f in &self.order {
            for slot in 0..3 {
                let v = mesh.face(f).vertices[slot];
                let z = self.placements[f][slot];
                let key = (v, z.re.to_bits(), z.im.to_bits());
                if seen.contains(&key) {
                    continue;
                }
                seen.push(key);
                let (center, radius) = match self.geometry {
                    Geometry::Hyperbolic => hyperbolic_circle_image(z, self.radii[v]),
                    _ => (z, self.radii[v]),
                };
                out.push(DrawnCircle { vertex: v, center, radius });
            }
        }
        out
    }

    /// Render as an SVG document. Cut edges are dashed.
    pub fn to_svg(&self, mesh: &WeightedTriangulation) -> String {
        let circles = self.circles(mesh);
        let (mut lo, mut hi) = (Complex64::new(f64::MAX, f64::MAX), Complex64::new(f64::MIN, f64::MIN));
        let mut grow = |c: Complex64, r: f64| {
            lo.re = lo.re.min(c.re - r);
            lo.im = lo.im.min(c.im - r);
            hi.re = hi.re.max(c.re + r);
            hi.im = hi.im.max(c.im + r);
        };
        for c in &circles {
            grow(c.center, c.radius);
        }
        if self.geometry == Geometry::Hyperbolic {
            grow(Complex64::new(0.0, 0.0), 1.0);
        }
        let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-9);
        let pad = 0.03 * span;
        let stroke = span / 600.0;
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" height="800">"#,
            lo.re - pad,
            -(hi.im + pad),
            hi.re - lo.re + 2.0 * pad,
            hi.im - lo.im + 2.0 * pad
        );
        // y axis points down in SVG
        let _ = writeln!(svg, r#"<g transform="scale(1,-1)" stroke-width="{stroke}">"#);
        if self.geometry == Geometry::Hyperbolic {
            let _ = writeln!(svg, r##"<circle cx="0" cy="0" r="1" fill="none" stroke="#444"/>"##);
        }
        let cut: std::collections::BTreeSet<usize> = self.cut_edges.iter().copied().collect();
        for &f in &self.order {
            let p = &self.placements[f];
            for slot in 0..3 {
                let e = mesh.face(f).edges[slot];
                let a = p[(slot + 1) % 3];
                let b = p[(slot + 2) % 3];
                let dash = if cut.contains(&e) {
                    format!(r#" stroke-dasharray="{} {}""#, 4.0 * stroke, 3.0 * stroke)
                } else {
                    String::new()
                };
                let _ = writeln!(
                    svg,
                    r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#888"{dash}/>"##,
                    a.re, a.im, b.re, b.im
                );
            }
        }
        for c in &circles {
            let _ = writeln!(
                svg,
                r##"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="#1f5fa8"><title>v{}</title></circle>"##,
                c.center.re, c.center.im, c.radius, c.vertex
            );
        }
        svg.push_str("</g>\n</svg>\n");
        svg
    }
}
