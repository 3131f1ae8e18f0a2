//! Discrete error norms against nodal interpolants and convergence rates.

use crate::assembly::{discrete_norm, Norm, SparseSpd};
use crate::error::{Error, Result};
use crate::flow::FlowLaw;
use crate::stepper::State;

/// H1 (`K`) and L2 (`M`) norm of one error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorPair {
    pub h1: f64,
    pub l2: f64,
}

impl ErrorPair {
    fn max(self, o: ErrorPair) -> ErrorPair {
        ErrorPair {
            h1: self.h1.max(o.h1),
            l2: self.l2.max(o.l2),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorRecord {
    pub h: f64,
    pub tau: f64,
    pub position: ErrorPair,
    pub velocity: ErrorPair,
    pub normal: ErrorPair,
    pub normal_velocity: ErrorPair,
    pub curvature: ErrorPair,
}

impl ErrorRecord {
    /// Componentwise maximum, for L-infinity in time.
    pub fn max(&self, o: &ErrorRecord) -> ErrorRecord {
        ErrorRecord {
            h: self.h,
            tau: self.tau,
            position: self.position.max(o.position),
            velocity: self.velocity.max(o.velocity),
            normal: self.normal.max(o.normal),
            normal_velocity: self.normal_velocity.max(o.normal_velocity),
            curvature: self.curvature.max(o.curvature),
        }
    }

    /// `(name, H1 error)` for each variable.
    pub fn h1_columns(&self) -> [(&'static str, f64); 5] {
        [
            ("position", self.position.h1),
            ("velocity", self.velocity.h1),
            ("normal", self.normal.h1),
            ("normal_velocity", self.normal_velocity.h1),
            ("curvature", self.curvature.h1),
        ]
    }
}

fn pair(diff: &[f64], mass: &SparseSpd, stiffness: &SparseSpd) -> Result<ErrorPair> {
    Ok(ErrorPair {
        h1: discrete_norm(diff, Norm::K, mass, stiffness)?,
        l2: discrete_norm(diff, Norm::M, mass, stiffness)?,
    })
}

fn difference(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            got: a.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

/// Errors of `numeric` against the nodal interpolant `exact`, measured with the
/// matrices of the surface through the exact nodes.
pub fn error_norms(
    numeric: &State,
    exact: &State,
    flow: &FlowLaw,
    mass: &SparseSpd,
    stiffness: &SparseSpd,
    h: f64,
    tau: f64,
) -> Result<ErrorRecord> {
    let n = numeric.num_nodes();
    let nu = |s: &State| s.u.as_slice()[..3 * n].to_vec();
    let curvature = |s: &State| -> Vec<f64> { s.normal_velocity().iter().map(|&v| flow.invert(v)).collect() };
    Ok(ErrorRecord {
        h,
        tau,
        position: pair(&difference(numeric.x.as_slice(), exact.x.as_slice())?, mass, stiffness)?,
        velocity: pair(&difference(numeric.v.as_slice(), exact.v.as_slice())?, mass, stiffness)?,
        normal: pair(&difference(&nu(numeric), &nu(exact))?, mass, stiffness)?,
        normal_velocity: pair(
            &difference(numeric.normal_velocity(), exact.normal_velocity())?,
            mass,
            stiffness,
        )?,
        curvature: pair(&difference(&curvature(numeric), &curvature(exact))?, mass, stiffness)?,
    })
}

/// `log(e_i / e_{i+1}) / log(p_i / p_{i+1})` for consecutive pairs.
pub fn eoc(values: &[f64], params: &[f64]) -> Result<Vec<f64>> {
    if values.len() != params.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            got: values.len(),
        });
    }
    Ok(values
        .windows(2)
        .zip(params.windows(2))
        .map(|(e, p)| (e[0] / e[1]).ln() / (p[0] / p[1]).ln())
        .collect())
}
