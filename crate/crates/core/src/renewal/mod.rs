//! The hitting-time CDF `F(t) = P(H ≤ t)` of the variant A chain from state 2
//! to state 1.
//!
//! `F` solves the renewal equation
//!
//! ```text
//! F(t) = g(t) + ∫_0^t k(t - y) F(y) dy,   g(t) = 2t/(1+t)^3,   k(u) = 2/(1+u)^3
//! ```
//!
//! which is solved here by product-trapezoidal time stepping. The truncated
//! forward equations in [`ode`] give an independent route to the same function,
//! and [`gf`] checks the generating-function identity that links the two.

mod grid;
pub mod gf;
pub mod ode;

pub use gf::{gf_identity_residual, GfResidual};
pub use grid::{GridFunction, GridKind};
pub use ode::{solve_ode_truncation, OdeTruncation};

use crate::error::{invalid, Error, Result};
use crate::quad;

/// Forcing term `g(t) = 2t/(1+t)^3`.
#[inline]
pub fn forcing_g(t: f64) -> f64 {
    2.0 * t / (1.0 + t).powi(3)
}

/// `g'(t) = (2 - 4t)/(1+t)^4`.
#[inline]
pub fn forcing_g_prime(t: f64) -> f64 {
    (2.0 - 4.0 * t) / (1.0 + t).powi(4)
}

/// Convolution kernel `k(u) = 2/(1+u)^3`; total mass 1.
#[inline]
pub fn kernel_k(u: f64) -> f64 {
    2.0 / (1.0 + u).powi(3)
}

/// `k'(u) = -6/(1+u)^4`.
#[inline]
pub fn kernel_k_prime(u: f64) -> f64 {
    -6.0 / (1.0 + u).powi(4)
}

fn grid_len(step: f64, horizon: f64) -> Result<usize> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("step", format!("must be positive, got {step}")));
    }
    if !(horizon >= step && horizon.is_finite()) {
        return Err(invalid("horizon", format!("must be at least the step, got {horizon}")));
    }
    let intervals = (horizon / step).round();
    if ((intervals * step - horizon) / horizon).abs() > 1e-9 {
        return Err(invalid(
            "horizon",
            format!("{horizon} is not an integer multiple of step {step}"),
        ));
    }
    Ok(intervals as usize + 1)
}

/// Product-trapezoid weights of a kernel over the cell `u ∈ [c·h, (c+1)·h]`
/// against the linear hat functions of its two end nodes: `near` pairs with
/// the node at `u = c·h`, `far` with the node at `u = (c+1)·h`.
#[derive(Debug, Clone, Copy)]
struct CellWeights {
    near: f64,
    far: f64,
}

/// Exact weights for `k(u) = 2/(1+u)^3`.
fn kernel_weights(c: usize, h: f64) -> CellWeights {
    let w0 = 1.0 + c as f64 * h;
    let w1 = w0 + h;
    CellWeights {
        near: h / (w0 * w0 * w1),
        far: h / (w0 * w1 * w1),
    }
}

/// Exact weights for `k'(u) = -6/(1+u)^4`.
fn kernel_prime_weights(c: usize, h: f64) -> CellWeights {
    let w0 = 1.0 + c as f64 * h;
    let w1 = w0 + h;
    CellWeights {
        near: -h * (3.0 * w0 + 2.0 * h) / (w0 * w0 * w0 * w1 * w1),
        far: -h * (3.0 * w0 + h) / (w0 * w0 * w1 * w1 * w1),
    }
}

/// Combined weight of the node at lag `d ≥ 1` (it is the near node of cell
/// `d` and the far node of cell `d - 1`).
fn lag_weights(len: usize, h: f64, cell: fn(usize, f64) -> CellWeights) -> (f64, Vec<f64>) {
    let cells: Vec<CellWeights> = (0..len).map(|c| cell(c, h)).collect();
    let mut lag = vec![0.0; len];
    for d in 1..len {
        lag[d] = cells[d - 1].far + if d < len - 1 { cells[d].near } else { 0.0 };
    }
    (cells[0].near, lag)
}

/// Solve the renewal equation on `t_i = i·step`, `0 ≤ t_i ≤ horizon`, by the
/// product trapezoidal rule: `F` is piecewise linear between grid nodes and
/// the kernel is integrated exactly against it, so the discrete kernel keeps
/// its exact mass on every window `[0, t_i]`.
///
/// Work is quadratic in the number of grid points; the error is `O(h²)`.
pub fn solve_renewal(step: f64, horizon: f64) -> Result<GridFunction> {
    let len = grid_len(step, horizon)?;
    let denominator = 1.0 - 0.5 * step * kernel_k(0.0);
    if denominator <= 0.0 {
        return Err(Error::StepTooLarge { step, denominator });
    }
    let (self_weight, lag) = lag_weights(len, step, kernel_weights);
    let mut values = vec![0.0; len];
    for i in 1..len {
        let t = i as f64 * step;
        // F_0 = 0, so lag i contributes nothing.
        let history: f64 = values[1..i]
            .iter()
            .zip(lag[1..i].iter().rev())
            .map(|(f, w)| f * w)
            .sum();
        values[i] = (forcing_g(t) + history) / (1.0 - self_weight);
    }
    Ok(GridFunction::new(step, values, GridKind::Cdf))
}

/// Richardson-extrapolated solution on the `step` grid: combines the solves
/// at `step` and `step/2` as `(4·F_{h/2} - F_h)/3`, cancelling the leading
/// `h²` error term. Used for long horizons, where the critical kernel lets
/// discretization error accumulate roughly linearly in `t`.
pub fn solve_renewal_richardson(step: f64, horizon: f64) -> Result<GridFunction> {
    let coarse = solve_renewal(step, horizon)?;
    let fine = solve_renewal(0.5 * step, horizon)?;
    let values = coarse
        .values()
        .iter()
        .enumerate()
        .map(|(i, &c)| (4.0 * fine.values()[2 * i] - c) / 3.0)
        .collect();
    Ok(GridFunction::new(step, values, GridKind::Cdf))
}

/// The density `F'` on the grid of `cdf`, from the differentiated equation
///
/// ```text
/// F'(t) = g'(t) + ∫_0^t k(t-y) F'(y) dy = g'(t) + k(0) F(t) + ∫_0^t k'(t-y) F(y) dy
/// ```
///
/// The right-hand form (integration by parts, `F(0) = 0`) is evaluated on the
/// already-solved `F` with the same product trapezoidal weights, now for `k'`.
pub fn f_prime(cdf: &GridFunction) -> GridFunction {
    let step = cdf.step();
    let f = cdf.values();
    let (self_weight, lag) = lag_weights(f.len(), step, kernel_prime_weights);
    let values = (0..f.len())
        .map(|i| {
            let t = i as f64 * step;
            let history: f64 = f[1..i.max(1)]
                .iter()
                .zip(lag[1..i.max(1)].iter().rev())
                .map(|(a, w)| a * w)
                .sum();
            let own = if i == 0 { 0.0 } else { self_weight * f[i] };
            forcing_g_prime(t) + kernel_k(0.0) * f[i] + own + history
        })
        .collect();
    GridFunction::new(step, values, GridKind::Density)
}

/// Hitting-time CDF of the classical chain (0 absorbing) from 1 to 0.
pub fn model_b_cdf(t: f64) -> f64 {
    t / (1.0 + t)
}

/// `|∫_0^{F(t)} ds/(1-s)² - t|` with `F` the closed form, by quadrature.
pub fn model_b_integral_check(t: f64) -> f64 {
    let upper = model_b_cdf(t);
    let integral = quad::integrate(|s| 1.0 / ((1.0 - s) * (1.0 - s)), 0.0, upper, 1e-13);
    (integral - t).abs()
}
