//! Initial data: nodal interpolation of the exact normal and of `V(H)`.

use crate::assembly::FieldVector;
use crate::error::{Error, Result};
use crate::flow::FlowLaw;
use crate::mesh::{LevelSet, Point, Shape, SurfaceMesh};
use crate::stepper::State;

/// Outward unit normal and mean curvature (positive on spheres) of `shape` at `p`.
pub fn analytic_data(shape: &Shape, p: &Point) -> Result<(Point, f64)> {
    match *shape {
        Shape::Sphere { radius } => {
            let r = p.norm();
            if r < 1e-12 {
                return Err(Error::SingularGradient(p.x, p.y, p.z));
            }
            Ok((p / r, 2.0 / radius))
        }
        _ => shape.normal_and_curvature(p),
    }
}

/// Same for an arbitrary level set, `H = div(grad phi / |grad phi|)`.
pub fn levelset_data(ls: &dyn LevelSet, p: &Point) -> Result<(Point, f64)> {
    ls.normal_and_curvature(p)
}

/// State at `t = 0`: `nu_j`, `V_j = V(H_j)` and `v_j = -V_j nu_j` at the nodes.
pub fn build_initial_state(mesh: &SurfaceMesh, shape: &Shape, flow: &FlowLaw) -> Result<State> {
    let data: Vec<(Point, f64)> = mesh
        .nodes()
        .iter()
        .map(|p| analytic_data(shape, p))
        .collect::<Result<_>>()?;
    Ok(state_from_data(mesh, &data, flow))
}

pub(crate) fn state_from_data(mesh: &SurfaceMesh, data: &[(Point, f64)], flow: &FlowLaw) -> State {
    let normals: Vec<Point> = data.iter().map(|d| d.0).collect();
    let values: Vec<f64> = data.iter().map(|d| flow.v(d.1)).collect();
    let velocity: Vec<Point> = normals.iter().zip(&values).map(|(nu, v)| nu * -v).collect();
    State {
        time: 0.0,
        x: FieldVector::from_points(mesh.nodes()),
        v: FieldVector::from_points(&velocity),
        u: FieldVector::from_normal_and_scalar(&normals, &values).expect("matching lengths"),
    }
}

/// Nodal mean curvature `H_j = V^{-1}(V_j)` of a state.
pub fn nodal_curvature(state: &State, flow: &FlowLaw) -> Vec<f64> {
    state.normal_velocity().iter().map(|&v| flow.invert(v)).collect()
}
