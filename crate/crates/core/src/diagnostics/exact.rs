//! Self-similar sphere solutions `R(t)` of the flows (surface dimension `d`, `H = d/R`).

use crate::assembly::FieldVector;
use crate::error::{Error, Result};
use crate::flow::{FlowKind, FlowLaw};
use crate::mesh::{Point, SurfaceMesh};
use crate::stepper::State;

/// Maximal existence time, `None` when the sphere exists for all `t >= 0`.
pub fn maximal_time(kind: FlowKind, r0: f64, d: f64) -> Result<Option<f64>> {
    check_radius(r0)?;
    Ok(match kind {
        FlowKind::Mcf => Some(r0 * r0 / (2.0 * d)),
        FlowKind::PowerMcf { alpha } => Some(r0.powf(1.0 + alpha) / ((1.0 + alpha) * d.powf(alpha))),
        FlowKind::Imcf => None,
        FlowKind::PowerImcf { alpha } if alpha > 1.0 => {
            Some(r0.powf(1.0 - alpha) / ((alpha - 1.0) * d.powf(-alpha)))
        }
        FlowKind::PowerImcf { .. } => None,
        FlowKind::LogMcf { .. } => return Err(unsupported()),
    })
}

/// `R(t)` for `t < T_max`.
pub fn sphere_radius(kind: FlowKind, r0: f64, d: f64, t: f64) -> Result<f64> {
    if let Some(t_max) = maximal_time(kind, r0, d)? {
        if t >= t_max {
            return Err(Error::BeyondMaximalTime { t, t_max });
        }
    }
    Ok(match kind {
        FlowKind::Mcf => (r0 * r0 - 2.0 * d * t).sqrt(),
        FlowKind::PowerMcf { alpha } => {
            (r0.powf(1.0 + alpha) - (1.0 + alpha) * d.powf(alpha) * t).powf(1.0 / (1.0 + alpha))
        }
        FlowKind::Imcf => r0 * (t / d).exp(),
        FlowKind::PowerImcf { alpha } if alpha == 1.0 => r0 * (t / d).exp(),
        FlowKind::PowerImcf { alpha } => {
            (r0.powf(1.0 - alpha) + (1.0 - alpha) * d.powf(-alpha) * t).powf(1.0 / (1.0 - alpha))
        }
        FlowKind::LogMcf { .. } => return Err(unsupported()),
    })
}

fn check_radius(r0: f64) -> Result<()> {
    if !(r0 > 0.0) {
        return Err(Error::Config(format!("sphere radius {r0} must be positive")));
    }
    Ok(())
}

fn unsupported() -> Error {
    Error::Unsupported("log_mcf has no closed-form sphere solution".into())
}

/// Exact nodal state on a sphere mesh whose nodes lie on the radius-`r0` sphere:
/// `x_j = R(t) p_j / r0`, `nu_j = p_j / r0`, `V_j = V(2 / R(t))`, `v_j = -V_j nu_j`.
pub fn sphere_exact_state(mesh: &SurfaceMesh, flow: &FlowLaw, r0: f64, t: f64) -> Result<State> {
    let r = sphere_radius(flow.kind(), r0, 2.0, t)?;
    let v = flow.v(2.0 / r);
    let normals: Vec<Point> = mesh.nodes().iter().map(|p| p / p.norm()).collect();
    let x: Vec<Point> = normals.iter().map(|nu| nu * r).collect();
    let vel: Vec<Point> = normals.iter().map(|nu| nu * -v).collect();
    Ok(State {
        time: t,
        x: FieldVector::from_points(&x),
        v: FieldVector::from_points(&vel),
        u: FieldVector::from_normal_and_scalar(&normals, &vec![v; mesh.num_nodes()])?,
    })
}
