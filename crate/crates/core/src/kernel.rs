//! Geometry of a single three-circle configuration.
//!
//! A face of a circle-packing metric is the triangle spanned by the centers
//! of three circles with radii `(r_0, r_1, r_2)` that meet pairwise at
//! prescribed angles. Slot `n` of every array refers to the vertex `n`; the
//! length `x_n` and the weight `phi_n` belong to the edge opposite vertex `n`.
//!
//! Everything here is a pure function of its inputs and works in the
//! Euclidean plane, the hyperbolic plane and the unit sphere.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cosine-law arguments within this distance outside `[-1, 1]` are clamped.
pub const COSINE_CLAMP_TOL: f64 = 1e-9;

/// Background geometry of the faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Euclidean,
    Hyperbolic,
    Spherical,
}

impl Geometry {
    pub const ALL: [Geometry; 3] = [Geometry::Euclidean, Geometry::Hyperbolic, Geometry::Spherical];

    /// Constant curvature of the model space: 0, -1 or +1.
    pub fn lambda(self) -> i32 {
        match self {
            Geometry::Euclidean => 0,
            Geometry::Hyperbolic => -1,
            Geometry::Spherical => 1,
        }
    }

    /// `x`, `sinh x` or `sin x`.
    #[inline]
    pub fn s(self, x: f64) -> f64 {
        match self {
            Geometry::Euclidean => x,
            Geometry::Hyperbolic => x.sinh(),
            Geometry::Spherical => x.sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Euclidean => "euclidean",
            Geometry::Hyperbolic => "hyperbolic",
            Geometry::Spherical => "spherical",
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Geometry::Euclidean),
            "hyperbolic" => Ok(Geometry::Hyperbolic),
            "spherical" => Ok(Geometry::Spherical),
            other => Err(Error::Domain(format!("unknown geometry `{other}`"))),
        }
    }
}

#[inline]
pub fn s_func(geometry: Geometry, x: f64) -> f64 {
    geometry.s(x)
}

fn check_radius(geometry: Geometry, r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive and finite, got {r}")));
    }
    if geometry == Geometry::Spherical && r >= PI {
        return Err(Error::Domain(format!("spherical radius must be below pi, got {r}")));
    }
    Ok(())
}

fn check_weight(weight: f64) -> Result<()> {
    if !(weight.is_finite() && (0.0..PI).contains(&weight)) {
        return Err(Error::Domain(format!("weight must lie in [0, pi), got {weight}")));
    }
    Ok(())
}

/// Distance between the centers of two circles of radii `r_a`, `r_b` meeting
/// at angle `weight`.
///
/// Evaluated through the half-length form
/// `s(l/2)^2 = s((r_a + r_b)/2)^2 - s(r_a) s(r_b) sin^2(weight/2)`, which is
/// algebraically the cosine law but stays accurate for short edges where
/// `acosh`/`acos` of a number close to one would lose half the digits.
pub fn edge_length(geometry: Geometry, r_a: f64, r_b: f64, weight: f64) -> Result<f64> {
    check_radius(geometry, r_a)?;
    check_radius(geometry, r_b)?;
    check_weight(weight)?;
    if geometry == Geometry::Spherical && r_a + r_b >= PI {
        return Err(Error::Domain(format!(
            "spherical radii {r_a} + {r_b} must sum below pi"
        )));
    }
    let half = 0.5 * (r_a + r_b);
    let sin_half_w = (0.5 * weight).sin();
    let defect = geometry.s(r_a) * geometry.s(r_b) * sin_half_w * sin_half_w;
    let sh = geometry.s(half);
    let q = (sh * sh - defect).max(0.0).sqrt();
    let len = match geometry {
        Geometry::Euclidean => 2.0 * q,
        Geometry::Hyperbolic => 2.0 * q.asinh(),
        Geometry::Spherical => 2.0 * q.min(1.0).asin(),
    };
    Ok(len)
}

/// Partial derivative of [`edge_length`] with respect to `r_a`.
fn edge_length_dr(geometry: Geometry, r_a: f64, r_b: f64, weight: f64, len: f64) -> f64 {
    let c = weight.cos();
    match geometry {
        Geometry::Euclidean => (r_a + r_b * c) / len,
        Geometry::Hyperbolic => {
            (r_a.sinh() * r_b.cosh() + r_a.cosh() * r_b.sinh() * c) / len.sinh()
        }
        Geometry::Spherical => (r_a.sin() * r_b.cos() + r_a.cos() * r_b.sin() * c) / len.sin(),
    }
}

/// Three circles in one background geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleConfig {
    pub geometry: Geometry,
    pub radii: [f64; 3],
    /// `weights[n]` is the intersection angle on the edge opposite vertex `n`.
    pub weights: [f64; 3],
}

impl TriangleConfig {
    pub fn new(geometry: Geometry, radii: [f64; 3], weights: [f64; 3]) -> Result<Self> {
        for &r in &radii {
            check_radius(geometry, r)?;
        }
        for &w in &weights {
            check_weight(w)?;
        }
        if geometry == Geometry::Spherical && radii.iter().sum::<f64>() >= PI {
            return Err(Error::Domain(format!(
                "spherical radii {radii:?} must sum below pi"
            )));
        }
        Ok(Self { geometry, radii, weights })
    }

    /// Edge lengths `x_n`, each computed from the two radii adjacent to it.
    pub fn lengths(&self) -> Result<[f64; 3]> {
        let r = &self.radii;
        let mut x = [0.0; 3];
        for n in 0..3 {
            x[n] = edge_length(self.geometry, r[(n + 1) % 3], r[(n + 2) % 3], self.weights[n])?;
        }
        Ok(x)
    }

    /// `dx[l][m] = d x_l / d r_m`. The diagonal is zero.
    pub fn length_jacobian(&self, lengths: &[f64; 3]) -> [[f64; 3]; 3] {
        let r = &self.radii;
        let mut jac = [[0.0; 3]; 3];
        for l in 0..3 {
            let a = (l + 1) % 3;
            let b = (l + 2) % 3;
            let w = self.weights[l];
            jac[l][a] = edge_length_dr(self.geometry, r[a], r[b], w, lengths[l]);
            jac[l][b] = edge_length_dr(self.geometry, r[b], r[a], w, lengths[l]);
        }
        jac
    }
}

/// Lengths and inner angles of one realized face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleAngles {
    pub geometry: Geometry,
    pub lengths: [f64; 3],
    pub angles: [f64; 3],
    /// `theta_0 + theta_1 + theta_2 - pi`, i.e. `lambda * area`.
    pub area_term: f64,
    /// `s(x_0) s(x_1) sin(theta_2)`; the same for every rotation by the sine law.
    pub sine_norm: f64,
}

impl TriangleAngles {
    /// `s(x_i) s(x_j) sin(theta_k)` for the rotation ending in `k`.
    pub fn sine_norm_at(&self, k: usize) -> f64 {
        let g = self.geometry;
        let i = (k + 1) % 3;
        let j = (k + 2) % 3;
        g.s(self.lengths[i]) * g.s(self.lengths[j]) * self.angles[k].sin()
    }

    /// Area of the face. Euclidean faces use half the sine norm.
    pub fn area(&self) -> f64 {
        match self.geometry {
            Geometry::Euclidean => 0.5 * self.sine_norm,
            _ => self.area_term.abs(),
        }
    }
}

/// Argument of `acos` in the cosine law for the angle at vertex `n`.
pub fn cosine_law_argument(geometry: Geometry, x: &[f64; 3], n: usize) -> f64 {
    let (a, b, c) = (x[n], x[(n + 1) % 3], x[(n + 2) % 3]);
    match geometry {
        Geometry::Euclidean => (b * b + c * c - a * a) / (2.0 * b * c),
        Geometry::Hyperbolic => (b.cosh() * c.cosh() - a.cosh()) / (b.sinh() * c.sinh()),
        Geometry::Spherical => (a.cos() - b.cos() * c.cos()) / (b.sin() * c.sin()),
    }
}

/// Inner angles of the triangle with side lengths `x` (side `n` opposite vertex `n`).
///
/// The angle is taken from the half-angle form of the cosine law,
/// `tan^2(theta_n / 2) = s(p - x_{n+1}) s(p - x_{n+2}) / (s(p) s(p - x_n))` with `p`
/// the semi-perimeter, which is well conditioned for thin triangles. Triangles
/// on the boundary of existence fall back to the clamped cosine law.
pub fn angles_from_lengths(geometry: Geometry, x: [f64; 3]) -> Result<TriangleAngles> {
    if x.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
        return Err(Error::Domain(format!("edge lengths must be positive, got {x:?}")));
    }
    let mut cosines = [0.0; 3];
    for n in 0..3 {
        let c = cosine_law_argument(geometry, &x, n);
        if !(c.abs() <= 1.0 + COSINE_CLAMP_TOL) {
            return Err(Error::DegenerateTriangle { angle: n, value: c });
        }
        cosines[n] = c.clamp(-1.0, 1.0);
    }

    let p = 0.5 * (x[0] + x[1] + x[2]);
    let gaps = [p - x[0], p - x[1], p - x[2]];
    let interior = gaps.iter().all(|&d| d > 0.0)
        && !(geometry == Geometry::Spherical && p >= PI);

    let mut angles = [0.0; 3];
    if interior {
        let sp = geometry.s(p);
        let sg = [geometry.s(gaps[0]), geometry.s(gaps[1]), geometry.s(gaps[2])];
        for n in 0..3 {
            let t2 = sg[(n + 1) % 3] * sg[(n + 2) % 3] / (sp * sg[n]);
            angles[n] = 2.0 * t2.sqrt().atan();
        }
    } else {
        for n in 0..3 {
            angles[n] = cosines[n].acos();
        }
    }

    let area_term = angles[0] + angles[1] + angles[2] - PI;
    let sine_norm = geometry.s(x[0]) * geometry.s(x[1]) * angles[2].sin();
    Ok(TriangleAngles { geometry, lengths: x, angles, area_term, sine_norm })
}

/// Realize the three-circle configuration and measure its triangle.
pub fn tri_angles(config: &TriangleConfig) -> Result<TriangleAngles> {
    angles_from_lengths(config.geometry, config.lengths()?)
}

/// `d[n][m] = d theta_n / d x_m`, from `d theta_i/d x_i = s(x_i)/A` and
/// `d theta_i/d x_j = -(d theta_i/d x_i) cos theta_k`.
pub fn dtheta_dx(angles: &TriangleAngles) -> [[f64; 3]; 3] {
    let g = angles.geometry;
    let a = angles.sine_norm;
    let mut d = [[0.0; 3]; 3];
    for n in 0..3 {
        let diag = g.s(angles.lengths[n]) / a;
        d[n][n] = diag;
        for m in 0..3 {
            if m != n {
                let k = 3 - n - m;
                d[n][m] = -diag * angles.angles[k].cos();
            }
        }
    }
    d
}

/// `d[n][m] = d theta_n / d r_m`, chained through the edge lengths.
pub fn dtheta_dr(config: &TriangleConfig) -> Result<[[f64; 3]; 3]> {
    let angles = tri_angles(config)?;
    Ok(dtheta_dr_with(config, &angles))
}

/// [`dtheta_dr`] reusing already computed angles of the same configuration.
pub fn dtheta_dr_with(config: &TriangleConfig, angles: &TriangleAngles) -> [[f64; 3]; 3] {
    let dx = dtheta_dx(angles);
    let jac = config.length_jacobian(&angles.lengths);
    let mut out = [[0.0; 3]; 3];
    for n in 0..3 {
        for m in 0..3 {
            out[n][m] = (0..3).map(|l| dx[n][l] * jac[l][m]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    #[test]
    fn s_function_values() {
        assert_eq!(s_func(Geometry::Euclidean, 2.0), 2.0);
        assert_eq!(s_func(Geometry::Hyperbolic, 0.0), 0.0);
        assert_relative_eq!(s_func(Geometry::Spherical, FRAC_PI_2), 1.0);
    }

    #[test]
    fn lambda_matches_tag() {
        assert_eq!(Geometry::Euclidean.lambda(), 0);
        assert_eq!(Geometry::Hyperbolic.lambda(), -1);
        assert_eq!(Geometry::Spherical.lambda(), 1);
    }

    #[test]
    fn tangent_and_orthogonal_lengths() {
        assert_relative_eq!(edge_length(Geometry::Euclidean, 1.0, 1.0, 0.0).unwrap(), 2.0);
        assert_relative_eq!(
            edge_length(Geometry::Euclidean, 1.0, 1.0, FRAC_PI_2).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-15
        );
        for r in [0.01, 0.5, 1.7, 6.0] {
            assert_relative_eq!(
                edge_length(Geometry::Hyperbolic, r, r, 0.0).unwrap(),
                2.0 * r,
                max_relative = 1e-14
            );
        }
        // zero weight on the sphere means tangency too
        assert_relative_eq!(
            edge_length(Geometry::Spherical, 0.3, 0.4, 0.0).unwrap(),
            0.7,
            max_relative = 1e-14
        );
    }

    #[test]
    fn length_matches_plain_cosine_law() {
        let (a, b, w): (f64, f64, f64) = (0.8, 1.3, 1.1);
        let h = (a.cosh() * b.cosh() + a.sinh() * b.sinh() * w.cos()).acosh();
        assert_relative_eq!(edge_length(Geometry::Hyperbolic, a, b, w).unwrap(), h, max_relative = 1e-12);
        let s = (a.cos() * b.cos() - a.sin() * b.sin() * w.cos()).acos();
        assert_relative_eq!(edge_length(Geometry::Spherical, a, b, w).unwrap(), s, max_relative = 1e-12);
    }

    #[test]
    fn edge_length_rejects_bad_input() {
        assert!(edge_length(Geometry::Euclidean, 0.0, 1.0, 0.0).is_err());
        assert!(edge_length(Geometry::Euclidean, 1.0, 1.0, PI).is_err());
        assert!(edge_length(Geometry::Spherical, 2.0, 1.5, 0.0).is_err());
    }

    #[test]
    fn equilateral_euclidean() {
        let cfg = TriangleConfig::new(Geometry::Euclidean, [0.7; 3], [0.0; 3]).unwrap();
        let t = tri_angles(&cfg).unwrap();
        for a in t.angles {
            assert_relative_eq!(a, FRAC_PI_3, epsilon = 1e-14);
        }
        assert!(t.area_term.abs() < 1e-14);
    }

    #[test]
    fn pythagorean_triangle() {
        let t = angles_from_lengths(Geometry::Euclidean, [3.0, 4.0, 5.0]).unwrap();
        assert_relative_eq!(t.angles[2], FRAC_PI_2, epsilon = 1e-14);
        assert_relative_eq!(t.area(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn hyperbolic_unit_radii() {
        // acos(cosh 2 / (cosh 2 + 1)) evaluated with 30-digit arithmetic
        let expected = 0.659_966_404_215_799_4;
        let cfg = TriangleConfig::new(Geometry::Hyperbolic, [1.0; 3], [0.0; 3]).unwrap();
        let t = tri_angles(&cfg).unwrap();
        for (x, a) in t.lengths.iter().zip(t.angles) {
            assert_relative_eq!(*x, 2.0, max_relative = 1e-14);
            assert_relative_eq!(a, expected, max_relative = 1e-14);
        }
        assert!(t.area_term < 0.0);
    }

    #[test]
    fn degenerate_lengths_rejected() {
        let err = angles_from_lengths(Geometry::Euclidean, [1.0, 1.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateTriangle { .. }));
        // flat within rounding is clamped, not rejected
        let t = angles_from_lengths(Geometry::Euclidean, [1.0, 1.0, 2.0]).unwrap();
        assert_relative_eq!(t.angles[2], PI, epsilon = 1e-7);
    }

    #[test]
    fn equilateral_dtheta_dx() {
        let t = angles_from_lengths(Geometry::Euclidean, [1.0; 3]).unwrap();
        let d = dtheta_dx(&t);
        let a = (FRAC_PI_3).sin();
        for n in 0..3 {
            for m in 0..3 {
                let expected = if n == m { 1.0 / a } else { -(1.0 / a) * FRAC_PI_3.cos() };
                assert_relative_eq!(d[n][m], expected, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn geometry_parses() {
        assert_eq!("hyperbolic".parse::<Geometry>().unwrap(), Geometry::Hyperbolic);
        assert!("flat".parse::<Geometry>().is_err());
    }
}
