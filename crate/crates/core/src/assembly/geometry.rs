//! Pointwise geometry of curved isoparametric elements.

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::mesh::{Point, QuadratureRule, ReferenceElement, SurfaceMesh};

const DEGENERATE_DET: f64 = 1e-28;

/// Geometry of the parametrization `F: reference -> R^3` at one reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGeometry {
    pub position: Point,
    /// Columns `dF/dxi`, `dF/deta`.
    pub jacobian: [Point; 2],
    /// `(J^T J)^{-1}`
    pub metric_inv: Matrix2<f64>,
    /// `sqrt(det(J^T J))`
    pub area_factor: f64,
    pub normal: Point,
}

impl PointGeometry {
    /// `J (J^T J)^{-1} g` for a reference gradient `g`.
    #[inline]
    pub fn tangential_gradient(&self, g: [f64; 2]) -> Point {
        let m = &self.metric_inv;
        let a = m[(0, 0)] * g[0] + m[(0, 1)] * g[1];
        let b = m[(1, 0)] * g[0] + m[(1, 1)] * g[1];
        self.jacobian[0] * a + self.jacobian[1] * b
    }
}

/// Geometry from element node coordinates and basis values/gradients at one point.
pub(crate) fn point_geometry(
    element: usize,
    coords: &[Point],
    values: &[f64],
    grads: &[[f64; 2]],
) -> Result<PointGeometry> {
    let mut position = Point::zeros();
    let mut j0 = Point::zeros();
    let mut j1 = Point::zeros();
    for ((x, &v), g) in coords.iter().zip(values).zip(grads) {
        position += x * v;
        j0 += x * g[0];
        j1 += x * g[1];
    }
    let g00 = j0.dot(&j0);
    let g01 = j0.dot(&j1);
    let g11 = j1.dot(&j1);
    let det = g00 * g11 - g01 * g01;
    if !(det > DEGENERATE_DET) {
        return Err(Error::DegenerateElement { element, det });
    }
    let metric_inv = Matrix2::new(g11, -g01, -g01, g00) / det;
    let area_factor = det.sqrt();
    let normal = j0.cross(&j1) / area_factor;
    Ok(PointGeometry {
        position,
        jacobian: [j0, j1],
        metric_inv,
        area_factor,
        normal,
    })
}

/// Geometry of element `element` at every point of `rule`.
pub fn element_geometry(
    mesh: &SurfaceMesh,
    element: usize,
    rule: &QuadratureRule,
) -> Result<Vec<PointGeometry>> {
    let reference = ReferenceElement::new(mesh.degree());
    let table = reference.tabulate(rule);
    let coords: Vec<Point> = mesh.element(element).iter().map(|&i| mesh.nodes()[i]).collect();
    (0..rule.len())
        .map(|q| point_geometry(element, &coords, table.values_at(q), table.grads_at(q)))
        .collect()
}
