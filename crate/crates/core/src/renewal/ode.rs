//! Truncated forward equations for the state probabilities `P_n(t)` of the
//! variant A chain started at 2 with state 1 made absorbing:
//!
//! ```text
//! P_1' = 2 P_2
//! P_2' = -4 P_2 + 3 P_3
//! P_n' = -2n P_n + (n+1) P_{n+1} + (n-1) P_{n-1},   n ≥ 3
//! ```
//!
//! The system is closed at `n_max` by dropping the inflow from `n_max + 1`,
//! so probability leaks out of the top state; the leak is reported as the
//! mass deficit rather than renormalized away.

use serde::{Deserialize, Serialize};

use super::{grid_len, GridFunction, GridKind};
use crate::error::{invalid, Error, Result};

/// Real-axis stability limit of the classical fourth-order Runge–Kutta scheme.
const RK4_REAL_LIMIT: f64 = 2.785;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeTruncation {
    pub n_max: usize,
    pub step: f64,
    pub horizon: f64,
    pub record_step: f64,
    /// `p[i][n - 1] = P_n(i·record_step)`.
    pub p: Vec<Vec<f64>>,
    /// `1 - Σ_n P_n` at each recorded time.
    pub mass_deficit: Vec<f64>,
}

impl OdeTruncation {
    /// Gershgorin bound on the spectral radius of the truncated generator.
    pub fn spectral_bound(n_max: usize) -> f64 {
        4.0 * n_max as f64
    }

    /// `P_1` on the record grid.
    pub fn p1(&self) -> GridFunction {
        GridFunction::new(
            self.record_step,
            self.p.iter().map(|row| row[0]).collect(),
            GridKind::Cdf,
        )
    }

    pub fn record_index(&self, t: f64) -> Result<usize> {
        if t > self.horizon * (1.0 + 1e-12) || t < 0.0 {
            return Err(Error::BeyondHorizon {
                what: "t",
                requested: t,
                horizon: self.horizon,
            });
        }
        let i = (t / self.record_step).round();
        if (i * self.record_step - t).abs() > 1e-9 * t.max(1.0) {
            return Err(invalid("t", format!("{t} is not on the record grid")));
        }
        Ok(i as usize)
    }

    /// Truncated generating function `Σ_{n ≤ n_max} P_n(t) s^n` at a recorded time.
    pub fn generating_function(&self, s: f64, t: f64) -> Result<f64> {
        let row = &self.p[self.record_index(t)?];
        // Horner from the top state down.
        Ok(row.iter().rev().fold(0.0, |acc, &p| (acc + p) * s))
    }

    pub fn max_mass_deficit(&self) -> f64 {
        self.mass_deficit.iter().copied().fold(0.0, f64::max)
    }
}

fn derivative(y: &[f64], out: &mut [f64]) {
    let m = y.len();
    out[0] = 2.0 * y[1];
    for i in 1..m {
        let n = (i + 1) as f64;
        let mut d = -2.0 * n * y[i];
        if i + 1 < m {
            d += (n + 1.0) * y[i + 1];
        }
        if i >= 2 {
            d += (n - 1.0) * y[i - 1];
        }
        out[i] = d;
    }
}

/// Integrate the truncated system with classical RK4 at `step`, recording all
/// states every `record_step`.
pub fn solve_ode_truncation(
    n_max: usize,
    step: f64,
    horizon: f64,
    record_step: f64,
) -> Result<OdeTruncation> {
    if n_max < 3 {
        return Err(invalid("n_max", format!("must be at least 3, got {n_max}")));
    }
    let records = grid_len(record_step, horizon)?;
    let stride = (record_step / step).round();
    if !(step > 0.0) || stride < 1.0 || ((stride * step - record_step) / record_step).abs() > 1e-9 {
        return Err(invalid(
            "step",
            format!("record step {record_step} must be a positive multiple of {step}"),
        ));
    }
    let bound = OdeTruncation::spectral_bound(n_max);
    if step * bound > RK4_REAL_LIMIT {
        return Err(Error::UnstableStep {
            step,
            spectral_bound: bound,
            suggested: 2.5 / bound,
        });
    }
    let stride = stride as usize;

    let mut y = vec![0.0; n_max];
    y[1] = 1.0;
    let mut k1 = vec![0.0; n_max];
    let mut k2 = vec![0.0; n_max];
    let mut k3 = vec![0.0; n_max];
    let mut k4 = vec![0.0; n_max];
    let mut tmp = vec![0.0; n_max];

    let mut p = Vec::with_capacity(records);
    let mut mass_deficit = Vec::with_capacity(records);
    let mut record = |y: &[f64]| {
        mass_deficit.push(1.0 - y.iter().sum::<f64>());
        p.push(y.to_vec());
    };
    record(&y);
    for _ in 1..records {
        for _ in 0..stride {
            derivative(&y, &mut k1);
            for i in 0..n_max {
                tmp[i] = y[i] + 0.5 * step * k1[i];
            }
            derivative(&tmp, &mut k2);
            for i in 0..n_max {
                tmp[i] = y[i] + 0.5 * step * k2[i];
            }
            derivative(&tmp, &mut k3);
            for i in 0..n_max {
                tmp[i] = y[i] + step * k3[i];
            }
            derivative(&tmp, &mut k4);
            for i in 0..n_max {
                y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        record(&y);
    }
    Ok(OdeTruncation {
        n_max,
        step,
        horizon,
        record_step,
        p,
        mass_deficit,
    })
}
