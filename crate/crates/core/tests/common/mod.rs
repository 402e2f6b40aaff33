#![allow(dead_code)]

use std::f64::consts::PI;

use circleflow::curvature::PackingMetric;
use circleflow::mesh::WeightedTriangulation;
use circleflow::Geometry;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random radii: `[0.5, 2]` flat, `[0.3, 2.5]` hyperbolic, `[0.05, pi/3)` spherical.
pub fn random_metric(mesh: &WeightedTriangulation, geometry: Geometry, rng: &mut ChaCha8Rng) -> PackingMetric {
    let (lo, hi) = match geometry {
        Geometry::Euclidean => (0.5, 2.0),
        Geometry::Hyperbolic => (0.3, 2.5),
        Geometry::Spherical => (0.05, PI / 3.0 - 1e-3),
    };
    let radii = (0..mesh.vertex_count()).map(|_| rng.gen_range(lo..hi)).collect();
    PackingMetric::new(geometry, radii).expect("radii drawn inside the domain")
}

pub fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// `max_i |a_i / b_i - 1|` after scaling `a` so that both have the same first entry.
pub fn scale_free_gap(a: &[f64], b: &[f64]) -> f64 {
    let c = b[0] / a[0];
    a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (c * x / y - 1.0).abs()))
}

pub fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, ((x - y) / y).abs()))
}
