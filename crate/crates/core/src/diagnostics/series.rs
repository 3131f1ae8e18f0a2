//! Scalar time series with CSV output.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    names: Vec<String>,
    times: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Self {
            names: names.into_iter().map(Into::into).collect(),
            times: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn push(&mut self, time: f64, values: Vec<f64>) -> Result<()> {
        if values.len() != self.names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.names.len(),
                got: values.len(),
            });
        }
        if let Some(&last) = self.times.last() {
            if !(time > last) {
                return Err(Error::InvalidState {
                    node: 0,
                    reason: format!("series time {time} does not follow {last}"),
                });
            }
        }
        self.times.push(time);
        self.rows.push(values);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    /// Header `time,<names>`; every value with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time");
        for n in &self.names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for (t, row) in self.times.iter().zip(&self.rows) {
            let _ = write!(s, "{t:.16e}");
            for v in row {
                let _ = write!(s, ",{v:.16e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    NonDecreasing,
    NonIncreasing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneVerdict {
    /// Largest step against the expected direction (0 if none).
    pub max_violation: f64,
    /// Every step within `tol (1 + |m|)`.
    pub monotone: bool,
}

/// Check consecutive values against `direction` with per-step tolerance `tol (1 + |m_n|)`.
pub fn monotonicity(values: &[f64], direction: Direction, tol: f64) -> MonotoneVerdict {
    let mut max_violation = 0.0_f64;
    let mut monotone = true;
    for w in values.windows(2) {
        let drop = match direction {
            Direction::NonDecreasing => w[0] - w[1],
            Direction::NonIncreasing => w[1] - w[0],
        };
        if drop > 0.0 {
            max_violation = max_violation.max(drop);
        }
        if !(drop <= tol * (1.0 + w[0].abs())) {
            monotone = false;
        }
    }
    MonotoneVerdict {
        max_violation,
        monotone,
    }
}
