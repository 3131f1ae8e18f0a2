//! Coefficients of the q-step BDF method and its extrapolation.

use num_rational::Rational64;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 5;

fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

/// Exact coefficients `(delta_0..delta_q, gamma_0..gamma_{q-1})` of
/// `delta(z) = sum_{l=1}^q (1 - z)^l / l` and `gamma(z) = (1 - (1 - z)^q) / z`.
pub fn bdf_coefficients(q: usize) -> Result<(Vec<Rational64>, Vec<Rational64>)> {
    if !(1..=MAX_ORDER).contains(&q) {
        return Err(Error::Config(format!("BDF order {q} outside 1..={MAX_ORDER}")));
    }
    let mut delta = vec![Rational64::from_integer(0); q + 1];
    for l in 1..=q {
        for (j, d) in delta.iter_mut().enumerate().take(l + 1) {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            *d += Rational64::new(sign * binomial(l, j), l as i64);
        }
    }
    let gamma = (1..=q)
        .map(|j| {
            let sign = if j % 2 == 1 { 1 } else { -1 };
            Rational64::from_integer(sign * binomial(q, j))
        })
        .collect();
    Ok((delta, gamma))
}

/// Floating-point BDF scheme of order `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct BdfScheme {
    q: usize,
    delta: Vec<f64>,
    gamma: Vec<f64>,
}

impl BdfScheme {
    pub fn new(q: usize) -> Result<Self> {
        let (d, g) = bdf_coefficients(q)?;
        let to_f64 = |r: &Rational64| *r.numer() as f64 / *r.denom() as f64;
        Ok(Self {
            q,
            delta: d.iter().map(to_f64).collect(),
            gamma: g.iter().map(to_f64).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.q
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// `sum_j gamma_j y^{n-1-j}`, with `previous[j] = y^{n-1-j}` (newest first).
    pub fn extrapolate(&self, previous: &[&[f64]]) -> Vec<f64> {
        self.combine(&self.gamma, previous)
    }

    /// `sum_{j>=1} delta_j y^{n-j}`, with `previous[j-1] = y^{n-j}` (newest first).
    pub fn history_sum(&self, previous: &[&[f64]]) -> Vec<f64> {
        self.combine(&self.delta[1..], previous)
    }

    /// Solve `(1/tau) sum_{j=0}^q delta_j y^{n-j} = rate` for `y^n`.
    pub fn advance(&self, tau: f64, rate: &[f64], previous: &[&[f64]]) -> Vec<f64> {
        let hist = self.history_sum(previous);
        rate.iter()
            .zip(&hist)
            .map(|(r, h)| (tau * r - h) / self.delta[0])
            .collect()
    }

    fn combine(&self, coeffs: &[f64], previous: &[&[f64]]) -> Vec<f64> {
        assert!(previous.len() >= self.q, "need {} previous levels", self.q);
        let mut out = vec![0.0; previous[0].len()];
        for (c, level) in coeffs.iter().zip(previous) {
            for (o, y) in out.iter_mut().zip(level.iter()) {
                *o += c * y;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn known_low_orders() {
        let (d, g) = bdf_coefficients(1).unwrap();
        assert_eq!(d, vec![r(1, 1), r(-1, 1)]);
        assert_eq!(g, vec![r(1, 1)]);
        let (d, g) = bdf_coefficients(2).unwrap();
        assert_eq!(d, vec![r(3, 2), r(-2, 1), r(1, 2)]);
        assert_eq!(g, vec![r(2, 1), r(-1, 1)]);
        let (d, g) = bdf_coefficients(3).unwrap();
        assert_eq!(d, vec![r(11, 6), r(-3, 1), r(3, 2), r(-1, 3)]);
        assert_eq!(g, vec![r(3, 1), r(-3, 1), r(1, 1)]);
    }

    #[test]
    fn consistency_identities() {
        for q in 1..=MAX_ORDER {
            let (d, g) = bdf_coefficients(q).unwrap();
            assert_eq!(d.iter().sum::<Rational64>(), r(0, 1));
            assert_eq!(g.iter().sum::<Rational64>(), r(1, 1));
            let first: Rational64 = d.iter().enumerate().map(|(j, c)| c * r(j as i64, 1)).sum();
            assert_eq!(first, r(-1, 1));
            assert!(d[0] > r(0, 1));
        }
    }

    #[test]
    fn order_outside_range_rejected() {
        assert!(bdf_coefficients(0).is_err());
        assert!(bdf_coefficients(6).is_err());
    }

    #[test]
    fn extrapolation_of_constant_and_linear_history() {
        let s = BdfScheme::new(2).unwrap();
        let a = [1.5, -2.0];
        assert_eq!(s.extrapolate(&[&a, &a]), a.to_vec());
        // y(t) = 3 + 2t sampled at t = 2, 1; predicted at t = 3
        let (y1, y0) = ([7.0], [5.0]);
        assert_eq!(s.extrapolate(&[&y1, &y0]), vec![9.0]);
    }

    #[test]
    fn quadratic_history_extrapolation_error() {
        // y = t^2 at t = 1, 0 (tau = 1); prediction 2 y1 - y0 = 2 vs y(2) = 4:
        // error is tau^2 times the second difference 2
        let s = BdfScheme::new(2).unwrap();
        let e = 4.0 - s.extrapolate(&[&[1.0], &[0.0]])[0];
        assert_eq!(e, 2.0);
    }

    #[test]
    fn q1_extrapolation_returns_previous() {
        let s = BdfScheme::new(1).unwrap();
        let a = [0.25, 4.0];
        assert_eq!(s.extrapolate(&[&a]), a.to_vec());
    }
}
