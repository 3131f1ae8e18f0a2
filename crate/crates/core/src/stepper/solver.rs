//! Jacobi-preconditioned conjugate gradients.

use crate::assembly::SparseSpd;
use crate::error::{Error, Result};

pub const DEFAULT_CG_TOL: f64 = 1e-10;
pub const DEFAULT_CG_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgSettings {
    /// Stop once `|b - A x| <= rel_tol |b|`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_CG_TOL,
            max_iter: DEFAULT_CG_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub rel_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A x = b` for symmetric positive definite `A`, starting from `guess` (or zero).
///
/// Fails with [`Error::NotPositiveDefinite`] on a non-positive diagonal or when a search
/// direction has vanishing curvature, and with [`Error::NoConvergence`] at the iteration cap.
pub fn solve_spd(
    a: &SparseSpd,
    b: &[f64],
    guess: Option<&[f64]>,
    settings: CgSettings,
) -> Result<(Vec<f64>, CgReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let diag = a.diagonal();
    let scale = diag.iter().copied().fold(0.0, f64::max);
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!(
            "diagonal entry {i} is {}",
            diag[i]
        )));
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    let b_norm = dot(b, b).sqrt();
    let mut x = match guess {
        Some(g) if g.len() == n => g.to_vec(),
        Some(g) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g.len(),
            })
        }
        None => vec![0.0; n],
    };
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            CgReport {
                iterations: 0,
                rel_residual: 0.0,
            },
        ));
    }

    let mut r = a.apply(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let target = settings.rel_tol * b_norm;

    let mut res = dot(&r, &r).sqrt();
    let mut it = 0;
    while res > target {
        if it >= settings.max_iter {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res / b_norm,
            });
        }
        a.mul_vec(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 1e-14 * scale * dot(&p, &p)) {
            return Err(Error::NotPositiveDefinite(format!(
                "search direction with curvature {curvature:e} at iteration {it}"
            )));
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt();
        it += 1;
    }
    Ok((
        x,
        CgReport {
            iterations: it,
            rel_residual: res / b_norm,
        },
    ))
}
