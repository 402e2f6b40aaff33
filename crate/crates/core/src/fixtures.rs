//! Small closed triangulations used by the tests, the examples and the CLI fixtures.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::mesh::WeightedTriangulation;

/// Boundary of the tetrahedron (sphere, 4 vertices).
pub fn tetrahedron(weight: f64) -> WeightedTriangulation {
    WeightedTriangulation::from_triangles(4, &[[0, 1, 2], [0, 3, 1], [1, 3, 2], [0, 2, 3]], weight)
}

/// Boundary of the octahedron (sphere, 6 vertices). Poles 0 and 5.
pub fn octahedron(weight: f64) -> WeightedTriangulation {
    WeightedTriangulation::from_triangles(
        6,
        &[
            [0, 1, 2],
            [0, 2, 3],
            [0, 3, 4],
            [0, 4, 1],
            [5, 2, 1],
            [5, 3, 2],
            [5, 4, 3],
            [5, 1, 4],
        ],
        weight,
    )
}

fn torus7_triangles() -> Vec<[usize; 3]> {
    let mut t = Vec::with_capacity(14);
    for i in 0..7 {
        t.push([i, (i + 1) % 7, (i + 3) % 7]);
        t.push([i, (i + 3) % 7, (i + 2) % 7]);
    }
    t
}

/// The 7-vertex torus: every vertex has degree 6.
pub fn torus7(weight: f64) -> WeightedTriangulation {
    WeightedTriangulation::from_triangles(7, &torus7_triangles(), weight)
}

fn genus2_triangles() -> Vec<[usize; 3]> {
    // two copies of the 7-vertex torus with the face {0, 1, 3} removed,
    // glued along its boundary; the second copy renames 2, 4, 5, 6
    let rename = |v: usize| match v {
        2 => 7,
        4 => 8,
        5 => 9,
        6 => 10,
        v => v,
    };
    let removed = |t: &[usize; 3]| {
        let mut s = *t;
        s.sort_unstable();
        s == [0, 1, 3]
    };
    let mut out = Vec::with_capacity(26);
    for t in torus7_triangles().iter().filter(|t| !removed(t)) {
        out.push(*t);
    }
    for t in torus7_triangles().iter().filter(|t| !removed(t)) {
        // reversed orientation keeps the sum orientable
        out.push([rename(t[0]), rename(t[2]), rename(t[1])]);
    }
    out
}

/// Closed genus-two surface with 11 vertices, 39 edges and 26 faces.
pub fn genus2(weight: f64) -> WeightedTriangulation {
    WeightedTriangulation::from_triangles(11, &genus2_triangles(), weight)
}

/// [`genus2`] with face 0 split into three by a new vertex 11, and the
/// original edges of that face weighted `pi/2, pi/2, pi/4`.
///
/// The face boundary then carries weight `5 pi/4` without bounding a face.
pub fn genus2_stellar(weight: f64) -> WeightedTriangulation {
    let mut tris = genus2_triangles();
    let [a, b, c] = tris.remove(0);
    tris.extend([[a, b, 11], [b, c, 11], [c, a, 11]]);
    let base = WeightedTriangulation::from_triangles(12, &tris, weight);
    let ab = base.find_edge(a, b).expect("edge ab");
    let bc = base.find_edge(b, c).expect("edge bc");
    let ca = base.find_edge(c, a).expect("edge ca");
    base.map_weights(|e, edge| {
        if e == ab || e == bc {
            FRAC_PI_2
        } else if e == ca {
            FRAC_PI_4
        } else {
            edge.weight
        }
    })
}

/// Sphere with a non-facial triangle `0 1 2` of weight `pi/2` on each side.
///
/// One side of the triangle is a single vertex 3 of degree 3, the other a
/// stacked disk with interior vertices 4..=8. The vertex subset `{3}` breaks
/// the subset inequality: `2*pi*2/9 < -3*pi/2 + 2*pi`.
pub fn separating_triangle(weight: f64) -> WeightedTriangulation {
    let (a, b, c, n) = (0, 1, 2, 3);
    let (p, q, r, s, t) = (4, 5, 6, 7, 8);
    let tris = [
        [a, b, n],
        [b, c, n],
        [c, a, n],
        [b, a, t],
        [q, b, t],
        [a, q, t],
        [p, b, q],
        [a, p, q],
        [c, b, r],
        [p, c, r],
        [b, p, r],
        [a, c, s],
        [p, a, s],
        [c, p, s],
    ];
    let base = WeightedTriangulation::from_triangles(9, &tris, weight);
    let rim = [base.find_edge(a, b), base.find_edge(b, c), base.find_edge(c, a)];
    base.map_weights(|e, edge| if rim.contains(&Some(e)) { FRAC_PI_2 } else { edge.weight })
}
