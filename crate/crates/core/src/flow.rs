//! Normal velocity laws `V(H)` of generalized mean curvature flows.
//!
//! Every evaluation first clamps its argument into the admissible curvature interval
//! `[h_lo, h_hi]` (or, for the inverse, into the image `[V(h_lo), V(h_hi)]`), which is how
//! computed normal velocities that leave the analysed regime are truncated.

use crate::error::{Error, Result};

pub const DEFAULT_H_LO: f64 = 1e-3;
pub const DEFAULT_H_HI: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowKind {
    /// `V = H`
    Mcf,
    /// `V = -1/H`
    Imcf,
    /// `V = H^alpha`
    PowerMcf { alpha: f64 },
    /// `V = -H^(-alpha)`
    PowerImcf { alpha: f64 },
    /// `V = (H + h_tilde) / log(H + h_tilde)`
    LogMcf { h_tilde: f64 },
}

impl FlowKind {
    pub fn name(&self) -> &'static str {
        match self {
            FlowKind::Mcf => "mcf",
            FlowKind::Imcf => "imcf",
            FlowKind::PowerMcf { .. } => "power_mcf",
            FlowKind::PowerImcf { .. } => "power_imcf",
            FlowKind::LogMcf { .. } => "log_mcf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowLaw {
    kind: FlowKind,
    h_lo: f64,
    h_hi: f64,
}

impl FlowLaw {
    pub fn new(kind: FlowKind, h_lo: f64, h_hi: f64) -> Result<Self> {
        if !(h_lo > 0.0 && h_hi > h_lo && h_hi.is_finite()) {
            return Err(Error::InvalidFlow(format!(
                "curvature clamp [{h_lo}, {h_hi}] must satisfy 0 < h_lo < h_hi < inf"
            )));
        }
        match kind {
            FlowKind::PowerMcf { alpha } | FlowKind::PowerImcf { alpha } if !(alpha > 0.0) => {
                return Err(Error::InvalidFlow(format!("exponent alpha = {alpha} must be positive")));
            }
            FlowKind::LogMcf { h_tilde } => {
                if !(h_tilde > 0.0) {
                    return Err(Error::InvalidFlow(format!("h_tilde = {h_tilde} must be positive")));
                }
                if h_lo + h_tilde <= std::f64::consts::E {
                    return Err(Error::InvalidFlow(format!(
                        "log_mcf needs h_lo + h_tilde > e for V' > 0 (got {})",
                        h_lo + h_tilde
                    )));
                }
            }
            _ => {}
        }
        Ok(Self { kind, h_lo, h_hi })
    }

    /// Flow with the default clamp `[1e-3, 1e3]`.
    pub fn with_default_clamp(kind: FlowKind) -> Result<Self> {
        Self::new(kind, DEFAULT_H_LO, DEFAULT_H_HI)
    }

    pub fn kind(&self) -> FlowKind {
        self.kind
    }

    pub fn clamp_interval(&self) -> (f64, f64) {
        (self.h_lo, self.h_hi)
    }

    /// `[V(h_lo), V(h_hi)]`
    pub fn image(&self) -> (f64, f64) {
        (self.v_raw(self.h_lo), self.v_raw(self.h_hi))
    }

    pub fn clamp_h(&self, h: f64) -> f64 {
        h.clamp(self.h_lo, self.h_hi)
    }

    pub fn clamp_v(&self, w: f64) -> f64 {
        let (lo, hi) = self.image();
        w.clamp(lo, hi)
    }

    pub fn v(&self, h: f64) -> f64 {
        self.v_raw(self.clamp_h(h))
    }

    pub fn v_prime(&self, h: f64) -> f64 {
        let h = self.clamp_h(h);
        match self.kind {
            FlowKind::Mcf => 1.0,
            FlowKind::Imcf => 1.0 / (h * h),
            FlowKind::PowerMcf { alpha } => alpha * h.powf(alpha - 1.0),
            FlowKind::PowerImcf { alpha } => alpha * h.powf(-alpha - 1.0),
            FlowKind::LogMcf { h_tilde } => {
                let l = (h + h_tilde).ln();
                (l - 1.0) / (l * l)
            }
        }
    }

    /// `V^{-1}(w)` after clamping `w` into the image interval.
    pub fn invert(&self, w: f64) -> f64 {
        let w = self.clamp_v(w);
        match self.kind {
            FlowKind::Mcf => w,
            FlowKind::Imcf => -1.0 / w,
            FlowKind::PowerMcf { alpha } => w.powf(1.0 / alpha),
            FlowKind::PowerImcf { alpha } => (-w).powf(-1.0 / alpha),
            FlowKind::LogMcf { .. } => self.invert_newton(w),
        }
        .clamp(self.h_lo, self.h_hi)
    }

    /// Number of values outside the image interval.
    pub fn clamp_report(&self, values: &[f64]) -> usize {
        let (lo, hi) = self.image();
        values.iter().filter(|&&w| !(lo..=hi).contains(&w)).count()
    }

    fn v_raw(&self, h: f64) -> f64 {
        match self.kind {
            FlowKind::Mcf => h,
            FlowKind::Imcf => -1.0 / h,
            FlowKind::PowerMcf { alpha } => h.powf(alpha),
            FlowKind::PowerImcf { alpha } => -h.powf(-alpha),
            FlowKind::LogMcf { h_tilde } => (h + h_tilde) / (h + h_tilde).ln(),
        }
    }

    /// Newton safeguarded by bisection on `[h_lo, h_hi]`; `V` is increasing there.
    fn invert_newton(&self, w: f64) -> f64 {
        let (mut lo, mut hi) = (self.h_lo, self.h_hi);
        let mut h = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = self.v_raw(h) - w;
            if r > 0.0 {
                hi = h;
            } else {
                lo = h;
            }
            let step = r / self.v_prime(h);
            let mut next = h - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - h).abs() <= 1e-15 * h.abs() {
                return next;
            }
            h = next;
        }
        h
    }
}
