//! Numerical check of the generating-function identity
//!
//! ```text
//! P(s,t) - ((s - (s-1)t) / (1 - t(s-1)))² = -∫_0^t P_1(y) / (y - t + 1/(s-1))² dy
//! ```
//!
//! The left side uses the truncated series from [`OdeTruncation`]; the right
//! side integrates a solved `P_1` grid with composite Simpson weights.

use serde::{Deserialize, Serialize};

use super::{GridFunction, OdeTruncation};
use crate::error::{invalid, Error, Result};
use crate::quad::simpson_samples;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GfResidual {
    pub s: f64,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Closed-form part of the left side: the generating function the chain
/// would have if `P_1` stayed zero.
pub fn homogeneous_part(s: f64, t: f64) -> f64 {
    let r = (s - (s - 1.0) * t) / (1.0 - t * (s - 1.0));
    r * r
}

pub fn gf_identity_residual(s: f64, t: f64, p1: &GridFunction, ode: &OdeTruncation) -> Result<GfResidual> {
    if !(0.0..1.0).contains(&s) {
        return Err(invalid("s", format!("must lie in [0, 1), got {s}")));
    }
    if t > p1.horizon() * (1.0 + 1e-12) {
        return Err(Error::BeyondHorizon {
            what: "t",
            requested: t,
            horizon: p1.horizon(),
        });
    }
    let intervals = (t / p1.step()).round();
    if (intervals * p1.step() - t).abs() > 1e-9 * t.max(1.0) {
        return Err(invalid("t", format!("{t} is not on the P_1 grid")));
    }
    let n = intervals as usize;
    let pole = 1.0 / (s - 1.0);
    let integrand: Vec<f64> = p1.values()[..=n]
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let d = p1.time(j) - t + pole;
            p / (d * d)
        })
        .collect();
    let rhs = -simpson_samples(&integrand, p1.step());
    let lhs = ode.generating_function(s, t)? - homogeneous_part(s, t);
    Ok(GfResidual {
        s,
        t,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::{solve_ode_truncation, solve_renewal};

    #[test]
    fn both_sides_vanish_at_time_zero() {
        let ode = solve_ode_truncation(20, 0.001, 0.1, 0.01).unwrap();
        let f = solve_renewal(0.01, 0.1).unwrap();
        let r = gf_identity_residual(0.5, 0.0, &f, &ode).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs, 0.0);
    }

    #[test]
    fn rejects_s_outside_unit_interval() {
        let ode = solve_ode_truncation(20, 0.001, 0.1, 0.01).unwrap();
        let f = solve_renewal(0.01, 0.1).unwrap();
        assert!(gf_identity_residual(1.0, 0.05, &f, &ode).is_err());
        assert!(gf_identity_residual(-0.1, 0.05, &f, &ode).is_err());
        assert!(gf_identity_residual(0.5, 0.2, &f, &ode).is_err());
    }

    #[test]
    fn homogeneous_part_at_zero_time_is_s_squared() {
        for s in [0.0, 0.3, 0.9] {
            assert!((homogeneous_part(s, 0.0) - s * s).abs() < 1e-15);
        }
    }
}
