//! Hawking mass and Schulze's `H^alpha` quantity.

use std::f64::consts::PI;

use log::debug;

use crate::assembly::{FeSpace, FieldVector, SparseSpd};
use crate::error::{Error, Result};
use crate::mesh::Point;

/// `sqrt(|Gamma| / 16 pi) (1 - int H^2 / 16 pi)` with `|Gamma| = 1^T M 1`, `int H^2 = H^T M H`.
pub fn hawking_mass(mass: &SparseSpd, h: &[f64]) -> f64 {
    let area: f64 = mass.apply(&vec![1.0; mass.dim()]).iter().sum();
    let h2 = mass.quadratic_form(h);
    (area / (16.0 * PI)).sqrt() * (1.0 - h2 / (16.0 * PI))
}

const UMBILIC_TOL: f64 = 1e-10;
const KAPPA_TOL: f64 = 1e-10;

/// `(kappa_1 + kappa_2)^{2 alpha} (kappa_1 - kappa_2)^2 / (4 kappa_1^2 kappa_2^2)`
pub fn schulze_from_kappa(k1: f64, k2: f64, alpha: f64) -> f64 {
    ((k1 + k2) * (k1 + k2)).powf(alpha) * (k1 - k2).powi(2) / (4.0 * k1 * k1 * k2 * k2)
}

/// `H^{2 alpha} (2|A|^2 - H^2) / (H^2 - |A|^2)^2`
pub fn schulze_from_invariants(h: f64, a2: f64, alpha: f64) -> f64 {
    let h2 = h * h;
    h2.powf(alpha) * (2.0 * a2 - h2) / (h2 - a2).powi(2)
}

/// Pointwise value; near `H^2 = |A|^2` the principal-curvature form is used, and `None`
/// marks a point skipped because a principal curvature vanishes.
pub fn schulze_point(h: f64, a2: f64, alpha: f64) -> Option<f64> {
    let h2 = h * h;
    if (h2 - a2).abs() < UMBILIC_TOL * h2.max(1.0) {
        let root = (2.0 * a2 - h2).max(0.0).sqrt();
        let (k1, k2) = ((h + root) / 2.0, (h - root) / 2.0);
        if k1.abs().min(k2.abs()) < KAPPA_TOL {
            return None;
        }
        Some(schulze_from_kappa(k1, k2, alpha))
    } else {
        Some(schulze_from_invariants(h, a2, alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchulzeValue {
    pub value: f64,
    pub skipped: usize,
}

/// Maximum of [`schulze_point`] over all quadrature points, with `H_h` interpolating the
/// nodal curvatures `h` and `|A_h|^2 = |grad nu_h|^2`.
pub fn schulze_quantity(
    space: &FeSpace,
    nodes: &[Point],
    u: &FieldVector,
    h: &[f64],
    alpha: f64,
) -> Result<SchulzeValue> {
    let samples = space.curvature_samples(nodes, u, h)?;
    let mut best: Option<f64> = None;
    let mut skipped = 0;
    for (hq, a2) in samples {
        match schulze_point(hq, a2, alpha) {
            Some(v) => best = Some(best.map_or(v, |b: f64| b.max(v))),
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        debug!("schulze quantity: skipped {skipped} quadrature points with a vanishing principal curvature");
    }
    let value = best.ok_or_else(|| {
        Error::Undefined("schulze quantity: every quadrature point was skipped".into())
    })?;
    Ok(SchulzeValue { value, skipped })
}
