//! Packing metrics, cone angles, curvature and its Jacobian in u-coordinates.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{dtheta_dr_with, tri_angles, Geometry, TriangleAngles, TriangleConfig};
use crate::mesh::WeightedTriangulation;
use crate::sparse::CsrMatrix;

/// Face count from which faces are evaluated on the rayon pool.
pub const PARALLEL_FACE_THRESHOLD: usize = 4096;

/// Default bound on `|gb_residual|`.
pub const GB_TOLERANCE: f64 = 1e-9;

/// One radius per vertex in a fixed background geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingMetric {
    pub geometry: Geometry,
    radii: Vec<f64>,
}

impl PackingMetric {
    pub fn new(geometry: Geometry, radii: Vec<f64>) -> Result<Self> {
        for (i, &r) in radii.iter().enumerate() {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidMetric(format!("radius {i} is {r}, must be positive")));
            }
            if geometry == Geometry::Spherical && r >= PI {
                return Err(Error::InvalidMetric(format!("spherical radius {i} is {r}, must be below pi")));
            }
        }
        Ok(Self { geometry, radii })
    }

    pub fn uniform(geometry: Geometry, n: usize, r: f64) -> Result<Self> {
        Self::new(geometry, vec![r; n])
    }

    /// Radii used when a mesh file gives none: 1 for flat and hyperbolic, `pi/8` on the sphere.
    pub fn default_for(geometry: Geometry, n: usize) -> Self {
        let r = if geometry == Geometry::Spherical { PI / 8.0 } else { 1.0 };
        Self { geometry, radii: vec![r; n] }
    }

    #[inline]
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn into_radii(self) -> Vec<f64> {
        self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Same geometry, every radius multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.geometry, self.radii.iter().map(|r| r * c).collect())
    }

    /// Check the vertex count and, on the sphere, `r_i + r_j + r_k < pi` on every face.
    pub fn check_for(&self, mesh: &WeightedTriangulation) -> Result<()> {
        if self.radii.len() != mesh.vertex_count() {
            return Err(Error::InvalidMetric(format!(
                "{} radii for {} vertices",
                self.radii.len(),
                mesh.vertex_count()
            )));
        }
        if self.geometry == Geometry::Spherical {
            if let Some(f) = (0..mesh.faces().len()).find(|&f| !spherical_face_ok(mesh, &self.radii, f)) {
                return Err(Error::InvalidMetric(format!(
                    "face {f} violates r_i + r_j + r_k < pi"
                )));
            }
        }
        Ok(())
    }

    pub fn face_config(&self, mesh: &WeightedTriangulation, f: usize) -> Result<TriangleConfig> {
        let face = mesh.face(f);
        TriangleConfig::new(self.geometry, face.vertices.map(|v| self.radii[v]), mesh.face_weights(f))
    }
}

pub(crate) fn spherical_face_ok(mesh: &WeightedTriangulation, radii: &[f64], f: usize) -> bool {
    mesh.face(f).vertices.iter().map(|&v| radii[v]).sum::<f64>() < PI
}

/// Cone angles and curvatures of a metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureState {
    pub cone_angles: Vec<f64>,
    pub curvatures: Vec<f64>,
    /// Sum of face areas.
    pub total_area: f64,
    /// `sum K_i - 2 pi chi + lambda * area`.
    pub gb_residual: f64,
    /// `2 pi chi / N`.
    pub avg_curvature: f64,
}

impl CurvatureState {
    /// `max_i |K_i - target_i|`.
    pub fn sup_deviation(&self, targets: &[f64]) -> f64 {
        self.curvatures
            .iter()
            .zip(targets)
            .fold(0.0, |m, (k, t)| f64::max(m, (k - t).abs()))
    }

    /// Index of the first vertex with `K_i` outside `((2 - d_i) pi, 2 pi)`.
    pub fn bound_violation(&self, mesh: &WeightedTriangulation) -> Option<usize> {
        self.curvatures.iter().enumerate().position(|(i, &k)| {
            let lo = (2.0 - mesh.degree(i) as f64) * PI;
            !(k > lo && k < TAU)
        })
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn map_faces<T: Send>(
    mesh: &WeightedTriangulation,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let n = mesh.faces().len();
    if n >= PARALLEL_FACE_THRESHOLD {
        (0..n).into_par_iter().map(&f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// Inner angles of every face, in face order.
pub fn face_angles(mesh: &WeightedTriangulation, metric: &PackingMetric) -> Result<Vec<TriangleAngles>> {
    metric.check_for(mesh)?;
    map_faces(mesh, |f| tri_angles(&metric.face_config(mesh, f)?))
}

/// Cone angles, curvatures and the Gauss-Bonnet balance of `metric`.
pub fn curvature_state(mesh: &WeightedTriangulation, metric: &PackingMetric) -> Result<CurvatureState> {
    let angles = face_angles(mesh, metric)?;
    let n = mesh.vertex_count();
    let mut cone = vec![KahanSum::default(); n];
    let mut area = KahanSum::default();
    for (face, t) in mesh.faces().iter().zip(&angles) {
        for slot in 0..3 {
            cone[face.vertices[slot]].add(t.angles[slot]);
        }
        area.add(t.area());
    }
    let cone_angles: Vec<f64> = cone.iter().map(KahanSum::value).collect();
    let curvatures: Vec<f64> = cone_angles.iter().map(|a| TAU - a).collect();
    let chi = mesh.euler_characteristic() as f64;
    let total_area = area.value();

    let mut balance = KahanSum::default();
    for &k in &curvatures {
        balance.add(k);
    }
    balance.add(-TAU * chi);
    balance.add(metric.geometry.lambda() as f64 * total_area);

    Ok(CurvatureState {
        cone_angles,
        curvatures,
        total_area,
        gb_residual: balance.value(),
        avg_curvature: TAU * chi / n as f64,
    })
}

/// Coordinates in which the flow is the gradient flow of a convex function:
/// `ln r`, `ln tanh(r/2)` or `ln tan(r/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UCoordinates {
    pub geometry: Geometry,
    pub u: Vec<f64>,
}

/// `u(r)` for one radius.
pub fn u_of_r(geometry: Geometry, r: f64) -> f64 {
    match geometry {
        Geometry::Euclidean => r.ln(),
        Geometry::Hyperbolic => {
            if r < 1.0 {
                (0.5 * r).tanh().ln()
            } else {
                (-2.0 / (r.exp() + 1.0)).ln_1p()
            }
        }
        Geometry::Spherical => (0.5 * r).tan().ln(),
    }
}

/// `r(u)` for one coordinate; inverse of [`u_of_r`] on its image.
pub fn r_of_u(geometry: Geometry, u: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("u-coordinate {u} is not finite")));
    }
    match geometry {
        Geometry::Euclidean => Ok(u.exp()),
        Geometry::Hyperbolic => {
            if u >= 0.0 {
                return Err(Error::Domain(format!("hyperbolic u-coordinate {u} must be negative")));
            }
            let r = u.exp().ln_1p() - (-u.exp_m1()).ln();
            if r.is_finite() {
                Ok(r)
            } else {
                Err(Error::Domain(format!("hyperbolic u-coordinate {u} is too close to 0")))
            }
        }
        Geometry::Spherical => Ok(2.0 * u.exp().atan()),
    }
}

pub fn to_u(metric: &PackingMetric) -> UCoordinates {
    UCoordinates {
        geometry: metric.geometry,
        u: metric.radii.iter().map(|&r| u_of_r(metric.geometry, r)).collect(),
    }
}

pub fn from_u(coords: &UCoordinates) -> Result<PackingMetric> {
    let radii = coords
        .u
        .iter()
        .map(|&u| r_of_u(coords.geometry, u))
        .collect::<Result<Vec<_>>>()?;
    if coords.geometry == Geometry::Spherical {
        if let Some(i) = radii.iter().position(|&r| !(r > 0.0 && r < PI)) {
            return Err(Error::Domain(format!("spherical radius {} out of (0, pi)", radii[i])));
        }
    }
    PackingMetric::new(coords.geometry, radii)
}

/// `a_ij = dK_i/du_j`, assembled face by face from `-d theta_i/d r_j * s(r_j)`.
pub fn curvature_hessian(mesh: &WeightedTriangulation, metric: &PackingMetric) -> Result<CsrMatrix> {
    metric.check_for(mesh)?;
    let g = metric.geometry;
    let blocks = map_faces(mesh, |f| {
        let cfg = metric.face_config(mesh, f)?;
        let t = tri_angles(&cfg)?;
        let d = dtheta_dr_with(&cfg, &t);
        let mut out = [[0.0; 3]; 3];
        for n in 0..3 {
            for m in 0..3 {
                out[n][m] = -d[n][m] * g.s(cfg.radii[m]);
            }
        }
        Ok(out)
    })?;
    let mut triplets = Vec::with_capacity(9 * blocks.len());
    for (face, block) in mesh.faces().iter().zip(&blocks) {
        for n in 0..3 {
            for m in 0..3 {
                triplets.push((face.vertices[n], face.vertices[m], block[n][m]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(mesh.vertex_count(), &triplets))
}
