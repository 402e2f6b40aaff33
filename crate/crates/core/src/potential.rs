//! The convex potential `f(u) = integral of sum_i (K_i - target_i) du_i`.

use std::f64::consts::PI;

use crate::curvature::{curvature_state, from_u, UCoordinates};
use crate::error::{Error, Result};
use crate::mesh::WeightedTriangulation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quadrature {
    /// Gauss-Legendre points per subinterval.
    pub order: usize,
    /// Equal subintervals per straight segment.
    pub subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { order: 10, subdivisions: 4 }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order.max(1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn integrand(
    mesh: &WeightedTriangulation,
    point: &UCoordinates,
    direction: &[f64],
    targets: &[f64],
) -> Result<f64> {
    let metric = from_u(point)
        .map_err(|e| Error::Domain(format!("integration path leaves the domain: {e}")))?;
    let state = curvature_state(mesh, &metric)
        .map_err(|e| Error::Domain(format!("integration path leaves the domain: {e}")))?;
    Ok(state
        .curvatures
        .iter()
        .zip(targets)
        .zip(direction)
        .map(|((k, t), d)| (k - t) * d)
        .sum())
}

/// Line integral of `sum_i (K_i - target_i) du_i` along the polygon through `points`.
pub fn potential_along_path(
    mesh: &WeightedTriangulation,
    points: &[UCoordinates],
    targets: &[f64],
    quad: Quadrature,
) -> Result<f64> {
    if targets.len() != mesh.vertex_count() {
        return Err(Error::InvalidTargets(format!(
            "{} targets for {} vertices",
            targets.len(),
            mesh.vertex_count()
        )));
    }
    let (nodes, weights) = gauss_legendre(quad.order);
    let pieces = quad.subdivisions.max(1);
    let mut total = 0.0;
    for seg in points.windows(2) {
        let (a, b) = (&seg[0], &seg[1]);
        if a.geometry != b.geometry || a.u.len() != b.u.len() {
            return Err(Error::Domain("path points disagree in geometry or size".into()));
        }
        let dir: Vec<f64> = a.u.iter().zip(&b.u).map(|(x, y)| y - x).collect();
        if dir.iter().all(|&d| d == 0.0) {
            continue;
        }
        let width = 1.0 / pieces as f64;
        for p in 0..pieces {
            let mid = (p as f64 + 0.5) * width;
            for (x, w) in nodes.iter().zip(&weights) {
                let s = mid + 0.5 * width * x;
                let point = UCoordinates {
                    geometry: a.geometry,
                    u: a.u.iter().zip(&dir).map(|(u0, d)| u0 + s * d).collect(),
                };
                total += 0.5 * width * w * integrand(mesh, &point, &dir, targets)?;
            }
        }
    }
    Ok(total)
}

/// `f(u) - f(base)` along the straight segment from `base` to `u`.
pub fn potential_value(
    mesh: &WeightedTriangulation,
    u: &UCoordinates,
    base: &UCoordinates,
    targets: &[f64],
    quad: Quadrature,
) -> Result<f64> {
    potential_along_path(mesh, &[base.clone(), u.clone()], targets, quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{to_u, PackingMetric};
    use crate::fixtures;
    use crate::kernel::Geometry;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        for order in [1, 2, 5, 10, 16] {
            let (x, w) = gauss_legendre(order);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            let deg = 2 * order - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg + 1) as f64 } else { 0.0 };
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((got - exact).abs() < 1e-13, "order {order}");
            let even = 2 * order - 2;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(even as i32)).sum();
            assert!((got - 2.0 / (even + 1) as f64).abs() < 1e-13, "order {order}");
        }
    }

    #[test]
    fn empty_path_is_zero() {
        let t = fixtures::tetrahedron(0.0);
        let u = to_u(&PackingMetric::uniform(Geometry::Hyperbolic, 4, 0.7).unwrap());
        let v = potential_value(&t, &u, &u, &[0.0; 4], Quadrature::default()).unwrap();
        assert_eq!(v, 0.0);
    }
}
