//! Damped Newton iteration on the convex potential of the flow.

use serde::Serialize;

use crate::curvature::{curvature_hessian, curvature_state, from_u, to_u, CurvatureState, PackingMetric, UCoordinates};
use crate::error::{Error, NonConvergence, Result};
use crate::flow::{FlowConfig, FlowMode};
use crate::kernel::Geometry;
use crate::mesh::WeightedTriangulation;
use crate::sparse::cg_solve;

/// Smallest damping factor tried by the line search.
const MIN_DAMPING: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Clone, Serialize)]
pub struct NewtonOutcome {
    pub metric: PackingMetric,
    pub iterations: usize,
    /// Final `max_i |K_i - target_i|`.
    pub residual: f64,
}

fn sup_dev(state: &CurvatureState, targets: &[f64]) -> f64 {
    state.sup_deviation(targets)
}

fn try_point(mesh: &WeightedTriangulation, u: &UCoordinates) -> Option<(PackingMetric, CurvatureState)> {
    if u.geometry == Geometry::Hyperbolic && u.u.iter().any(|&x| !(x < 0.0)) {
        return None;
    }
    let metric = from_u(u).ok()?;
    let state = curvature_state(mesh, &metric).ok()?;
    Some((metric, state))
}

/// Solve `K(u) = target` by Newton's method with the curvature Hessian.
///
/// Euclidean steps are projected onto `sum du_i = 0`. Each step is halved
/// until it stays in the domain and decreases `max_i |K_i - target_i|`.
/// Failure to reach `config.tol_curvature` within `config.max_steps`
/// iterations returns [`Error::NonConvergence`] with the best iterate.
pub fn newton_solve(
    mesh: &WeightedTriangulation,
    initial: &PackingMetric,
    config: &FlowConfig,
) -> Result<NewtonOutcome> {
    let geometry = initial.geometry;
    if geometry == Geometry::Spherical {
        return Err(Error::Unsupported("Newton's method needs a convex potential; not available on the sphere".into()));
    }
    if config.mode != FlowMode::Newton {
        return Err(Error::Unsupported("newton_solve expects mode = newton".into()));
    }
    config.validate(mesh, geometry)?;
    initial.check_for(mesh)?;
    let targets = &config.target_curvatures;
    let n = mesh.vertex_count();
    let project = geometry == Geometry::Euclidean;

    let mut u = to_u(initial);
    let mut metric = initial.clone();
    let mut state = curvature_state(mesh, &metric)?;
    let mut residual = sup_dev(&state, targets);

    let fail = |metric: PackingMetric, iterations: usize, residual: f64| {
        Error::NonConvergence(Box::new(NonConvergence { best: metric, iterations, residual }))
    };

    for iteration in 0..=config.max_steps {
        if residual <= config.tol_curvature {
            return Ok(NewtonOutcome { metric, iterations: iteration, residual });
        }
        if iteration == config.max_steps {
            break;
        }
        let hess = curvature_hessian(mesh, &metric)?;
        let rhs: Vec<f64> = state.curvatures.iter().zip(targets).map(|(k, t)| t - k).collect();
        let sol = cg_solve(&hess, &rhs, 1e-13, 20 * n + 100, project);
        let mut delta = if sol.converged && sol.x.iter().all(|x| x.is_finite()) { sol.x } else { rhs };
        if project {
            let mean = delta.iter().sum::<f64>() / n as f64;
            for d in &mut delta {
                *d -= mean;
            }
        }

        let mut alpha = 1.0;
        let mut next = None;
        while alpha >= MIN_DAMPING {
            let cand = UCoordinates {
                geometry,
                u: u.u.iter().zip(&delta).map(|(a, d)| a + alpha * d).collect(),
            };
            if let Some((m, s)) = try_point(mesh, &cand) {
                let r = sup_dev(&s, targets);
                if r < residual {
                    next = Some((cand, m, s, r));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((cand, m, s, r)) = next else {
            return Err(fail(metric, iteration, residual));
        };
        u = cand;
        metric = m;
        state = s;
        residual = r;
    }
    Err(fail(metric, config.max_steps, residual))
}
