//! Implicit surfaces `{phi = 0}` with hand-coded first and second derivatives.
//!
//! All presets are negative inside, so `grad phi / |grad phi|` is the outward normal.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub trait LevelSet: Sync {
    fn value(&self, p: &Vector3<f64>) -> f64;
    fn gradient(&self, p: &Vector3<f64>) -> Vector3<f64>;
    fn hessian(&self, p: &Vector3<f64>) -> Matrix3<f64>;

    /// Outward unit normal and mean curvature `H = div(grad phi / |grad phi|)`,
    /// positive on spheres.
    fn normal_and_curvature(&self, p: &Vector3<f64>) -> Result<(Vector3<f64>, f64)> {
        let g = self.gradient(p);
        let norm = g.norm();
        if norm < 1e-12 {
            return Err(Error::SingularGradient(p.x, p.y, p.z));
        }
        let hess = self.hessian(p);
        let laplacian = hess.trace();
        let h = (laplacian * norm * norm - g.dot(&(hess * g))) / (norm * norm * norm);
        Ok((g / norm, h))
    }
}

/// Built-in initial surfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// `|x|^2 - R^2`
    Sphere { radius: f64 },
    /// `x^2/a^2 + y^2/b^2 + z^2/c^2 - 1`
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// `x^2 + y^2 + 2 z^2 (z^2 - 159/200) - 1/2`, a non-convex dumbbell.
    Dumbbell,
    /// `(x^2-1)^2 + (y^2-1)^2 + (z^2-1)^2 - 1.05`, a genus-5 surface.
    Genus5,
}

impl Shape {
    pub fn name(&self) -> &'static str {
        match self {
            Shape::Sphere { .. } => "sphere",
            Shape::Ellipsoid { .. } => "ellipsoid",
            Shape::Dumbbell => "dumbbell",
            Shape::Genus5 => "genus5",
        }
    }
}

const DUMBBELL_Z2: f64 = 159.0 / 200.0;

impl LevelSet for Shape {
    fn value(&self, p: &Vector3<f64>) -> f64 {
        let (x, y, z) = (p.x, p.y, p.z);
        match *self {
            Shape::Sphere { radius } => p.norm_squared() - radius * radius,
            Shape::Ellipsoid { a, b, c } => {
                (x / a).powi(2) + (y / b).powi(2) + (z / c).powi(2) - 1.0
            }
            Shape::Dumbbell => x * x + y * y + 2.0 * z * z * (z * z - DUMBBELL_Z2) - 0.5,
            Shape::Genus5 => {
                (x * x - 1.0).powi(2) + (y * y - 1.0).powi(2) + (z * z - 1.0).powi(2) - 1.05
            }
        }
    }

    fn gradient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let (x, y, z) = (p.x, p.y, p.z);
        match *self {
            Shape::Sphere { .. } => 2.0 * p,
            Shape::Ellipsoid { a, b, c } => {
                Vector3::new(2.0 * x / (a * a), 2.0 * y / (b * b), 2.0 * z / (c * c))
            }
            Shape::Dumbbell => {
                Vector3::new(2.0 * x, 2.0 * y, 8.0 * z * z * z - 4.0 * DUMBBELL_Z2 * z)
            }
            Shape::Genus5 => Vector3::new(
                4.0 * x * (x * x - 1.0),
                4.0 * y * (y * y - 1.0),
                4.0 * z * (z * z - 1.0),
            ),
        }
    }

    fn hessian(&self, p: &Vector3<f64>) -> Matrix3<f64> {
        let (x, y, z) = (p.x, p.y, p.z);
        let diag = match *self {
            Shape::Sphere { .. } => Vector3::new(2.0, 2.0, 2.0),
            Shape::Ellipsoid { a, b, c } => {
                Vector3::new(2.0 / (a * a), 2.0 / (b * b), 2.0 / (c * c))
            }
            Shape::Dumbbell => Vector3::new(2.0, 2.0, 24.0 * z * z - 4.0 * DUMBBELL_Z2),
            Shape::Genus5 => Vector3::new(
                12.0 * x * x - 4.0,
                12.0 * y * y - 4.0,
                12.0 * z * z - 4.0,
            ),
        };
        Matrix3::from_diagonal(&diag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(shape: Shape, p: Vector3<f64>) {
        let h = 1e-6;
        let g = shape.gradient(&p);
        let hess = shape.hessian(&p);
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = h;
            let fd = (shape.value(&(p + e)) - shape.value(&(p - e))) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "{shape:?} grad {i}");
            let fd2 = (shape.gradient(&(p + e)) - shape.gradient(&(p - e))) / (2.0 * h);
            for j in 0..3 {
                assert!((fd2[j] - hess[(j, i)]).abs() < 1e-5 * (1.0 + hess[(j, i)].abs()));
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = Vector3::new(0.3, -0.7, 0.55);
        for s in [
            Shape::Sphere { radius: 2.0 },
            Shape::Ellipsoid { a: 3.0, b: 1.0, c: 1.5 },
            Shape::Dumbbell,
            Shape::Genus5,
        ] {
            fd_check(s, p);
        }
    }

    #[test]
    fn sphere_curvature() {
        let s = Shape::Sphere { radius: 3.0 };
        let (n, h) = s.normal_and_curvature(&Vector3::new(3.0, 0.0, 0.0)).unwrap();
        assert!((n - Vector3::x()).norm() < 1e-15);
        assert!((h - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ellipsoid_tip_curvature() {
        // At the tip (a, 0, 0) both principal curvatures equal a / b^2 when b = c.
        let s = Shape::Ellipsoid { a: 3.0, b: 1.0, c: 1.0 };
        let (_, h) = s.normal_and_curvature(&Vector3::new(3.0, 0.0, 0.0)).unwrap();
        assert!((h - 6.0).abs() < 1e-12);
    }

    #[test]
    fn singular_gradient_is_reported() {
        let s = Shape::Sphere { radius: 1.0 };
        assert!(matches!(
            s.normal_and_curvature(&Vector3::zeros()),
            Err(Error::SingularGradient(..))
        ));
    }
}
