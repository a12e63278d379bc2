use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerated negative quadrature noise in a density.
pub const DENSITY_FLOOR: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    Cdf,
    Density,
    Generic,
}

/// Samples of a function at `t_i = i·step`, `i = 0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    step: f64,
    values: Vec<f64>,
    kind: GridKind,
}

impl GridFunction {
    pub fn new(step: f64, values: Vec<f64>, kind: GridKind) -> Self {
        assert!(step > 0.0, "grid step must be positive");
        assert!(!values.is_empty(), "grid needs at least one point");
        GridFunction { step, values, kind }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.time(i))
    }

    /// Linear interpolation; `t` must lie in `[0, horizon]`.
    pub fn at(&self, t: f64) -> Result<f64> {
        let horizon = self.horizon();
        if t < 0.0 {
            return Err(invalid("t", format!("must be nonnegative, got {t}")));
        }
        if t > horizon * (1.0 + 1e-12) {
            return Err(Error::BeyondHorizon {
                what: "t",
                requested: t,
                horizon,
            });
        }
        let pos = (t / self.step).min((self.values.len() - 1) as f64);
        let i = pos.floor() as usize;
        if i + 1 >= self.values.len() {
            return Ok(self.values[self.values.len() - 1]);
        }
        let frac = pos - i as f64;
        Ok(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
    }

    /// Check the invariants of the grid's kind.
    pub fn check(&self) -> Result<()> {
        match self.kind {
            GridKind::Cdf => {
                if self.values[0] != 0.0 {
                    return Err(invalid("cdf", "value at t = 0 must be 0"));
                }
                if let Some(i) = self.values.windows(2).position(|w| w[1] < w[0]) {
                    return Err(invalid("cdf", format!("decreases after t = {}", self.time(i))));
                }
                if self.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(invalid("cdf", "values must lie in [0, 1]"));
                }
            }
            GridKind::Density => {
                if let Some(i) = self.values.iter().position(|&v| v < DENSITY_FLOOR) {
                    return Err(invalid(
                        "density",
                        format!("value {} at t = {} is negative", self.values[i], self.time(i)),
                    ));
                }
            }
            GridKind::Generic => {}
        }
        Ok(())
    }

    /// `a = T·(1 - F(T))`, the coefficient of the `a/t` tail model used beyond
    /// the horizon of a CDF grid.
    pub fn tail_coefficient(&self) -> f64 {
        self.horizon() * (1.0 - self.values[self.values.len() - 1])
    }

    /// Restrict to `[0, horizon]` (rounded to the grid).
    pub fn truncate(&self, horizon: f64) -> GridFunction {
        let n = ((horizon / self.step).round() as usize + 1).min(self.values.len());
        GridFunction::new(self.step, self.values[..n].to_vec(), self.kind)
    }
}
