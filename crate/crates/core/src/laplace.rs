//! Laplace transforms of the hitting-time law and the large-time diagnostics
//! derived from them.
//!
//! Transforms of `F'`, `tF'` and `t²F'` are computed from a solved CDF grid as
//! Stieltjes sums over its increments, optionally extended past the grid
//! horizon with the tail model `1 - F(t) ≈ a/t`. The explicit kernels that
//! appear in the transformed renewal equation are integrated by quadrature,
//! which gives a second, grid-free route to the same transforms.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad;
use crate::renewal::GridFunction;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Tail share above which a transform value is not trusted.
pub const MAX_TAIL_SHARE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weight {
    One,
    T,
    T2,
}

impl Weight {
    #[inline]
    fn at(self, t: f64) -> f64 {
        match self {
            Weight::One => 1.0,
            Weight::T => t,
            Weight::T2 => t * t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tail {
    None,
    /// Extend with `1 - F(t) = a/t`, `a = T·(1 - F(T))`.
    Reciprocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEval {
    pub s: f64,
    pub value: f64,
    /// Fraction of `head + tail` carried by the extrapolated tail. With
    /// [`Tail::None`] this is the share the truncation leaves out.
    pub tail_share: f64,
    pub reliable: bool,
}

/// `∫_0^∞ e^{-st} w(t) dF(t)` from a CDF grid.
pub fn laplace_of_increments(f: &GridFunction, s: f64, weight: Weight, tail: Tail) -> Result<LaplaceEval> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("must be positive, got {s}")));
    }
    let v = f.values();
    let h = f.step();
    let head: f64 = v
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let mid = (i as f64 + 0.5) * h;
            (-s * mid).exp() * weight.at(mid) * (w[1] - w[0])
        })
        .sum();
    let tail_value = reciprocal_tail(f.horizon(), f.tail_coefficient(), s, weight);
    let tail_share = if head + tail_value > 0.0 {
        tail_value / (head + tail_value)
    } else {
        0.0
    };
    let value = match tail {
        Tail::None => head,
        Tail::Reciprocal => head + tail_value,
    };
    Ok(LaplaceEval {
        s,
        value,
        tail_share,
        reliable: tail_share <= MAX_TAIL_SHARE,
    })
}

/// `∫_T^∞ e^{-st} w(t) a/t² dt`.
fn reciprocal_tail(horizon: f64, a: f64, s: f64, weight: Weight) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let scale = horizon.min(1.0 / s);
    let tol = 1e-13 * (a / horizon).max(1e-300) * (1.0 + weight.at(horizon));
    quad::integrate_to_infinity(
        |t| (-s * t).exp() * weight.at(t) * a / (t * t),
        horizon,
        scale,
        tol,
    )
}

/// Exponential integral `E1(s) = ∫_s^∞ e^{-u}/u du`, by power series for
/// `s ≤ 1` and a modified Lentz continued fraction above.
pub fn exp_integral_e1(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(invalid("s", format!("E1 is defined for s > 0, got {s}")));
    }
    if s.is_infinite() {
        return Ok(0.0);
    }
    if s <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -s / kf;
            let add = term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        Ok(-EULER_GAMMA - s.ln() - sum)
    } else {
        const TINY: f64 = 1e-300;
        let mut b = s + 1.0;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        Ok(h * (-s).exp())
    }
}

/// `ρ_n = n·sqrt(log n)`.
pub fn rho(n: f64) -> f64 {
    n * n.ln().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentIntegrals {
    pub h: f64,
    /// `∫_0^h t F'(t) dt`
    pub m: f64,
    /// `∫_0^h t² F'(t) dt`
    pub s2: f64,
}

/// Truncated first and second moments of `dF` as Stieltjes midpoint sums.
pub fn moment_integrals(f: &GridFunction, h: f64) -> Result<MomentIntegrals> {
    if !(h >= 0.0) {
        return Err(invalid("h", format!("must be nonnegative, got {h}")));
    }
    if h > f.horizon() * (1.0 + 1e-12) {
        return Err(Error::BeyondHorizon {
            what: "h",
            requested: h,
            horizon: f.horizon(),
        });
    }
    let step = f.step();
    let v = f.values();
    let full = ((h / step) * (1.0 + 1e-12)).floor() as usize;
    let full = full.min(v.len() - 1);
    let (mut m, mut s2) = (0.0, 0.0);
    for i in 0..full {
        let mid = (i as f64 + 0.5) * step;
        let df = v[i + 1] - v[i];
        m += mid * df;
        s2 += mid * mid * df;
    }
    let start = full as f64 * step;
    if h > start {
        let df = f.at(h)? - v[full];
        let mid = 0.5 * (start + h);
        m += mid * df;
        s2 += mid * mid * df;
    }
    Ok(MomentIntegrals { h, m, s2 })
}

/// The same moments from a density grid by the trapezoidal rule.
pub fn moment_integrals_from_density(density: &GridFunction, h: f64) -> Result<MomentIntegrals> {
    if h > density.horizon() * (1.0 + 1e-12) {
        return Err(Error::BeyondHorizon {
            what: "h",
            requested: h,
            horizon: density.horizon(),
        });
    }
    let n = (h / density.step()).round() as usize;
    let d = &density.values()[..=n];
    let t = |i: usize| density.time(i);
    let trap = |g: &dyn Fn(usize) -> f64| {
        let inner: f64 = (1..n).map(g).sum();
        density.step() * (0.5 * (g(0) + g(n)) + inner)
    };
    Ok(MomentIntegrals {
        h,
        m: trap(&|i| t(i) * d[i]),
        s2: trap(&|i| t(i) * t(i) * d[i]),
    })
}

/// `t·(1 - F(t))`.
pub fn tail_product(f: &GridFunction, t: f64) -> Result<f64> {
    Ok(t * (1.0 - f.at(t)?))
}

/// `∫_0^∞ e^{-st} g(t) dt` for an explicit, slowly decaying `g`, by geometric
/// panels followed by a mapped semi-infinite piece. `s = 0` is allowed when
/// `g` is integrable.
pub fn laplace_explicit<G: Fn(f64) -> f64>(g: G, s: f64) -> f64 {
    let f = |t: f64| (-s * t).exp() * g(t);
    let reach = if s > 0.0 { (64.0 / s).max(64.0) } else { 1e6 };
    let tol = 1e-14;
    let mut total = quad::integrate(&f, 0.0, 1.0, tol);
    let mut a = 1.0;
    while a < reach {
        total += quad::integrate(&f, a, 2.0 * a, tol);
        a *= 2.0;
    }
    total + quad::integrate_to_infinity(&f, a, a, tol)
}

/// Transformed kernel `K(s) = ŵ{2/(1+t)^3}(s)`.
pub fn kernel_transform(s: f64) -> f64 {
    laplace_explicit(|t| 2.0 / (1.0 + t).powi(3), s)
}

/// Which transformed identity to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Identity {
    /// `ŵ{F'} = ŵ{g'} + K·ŵ{F'}`
    Density,
    /// `ŵ{tF'} = ŵ{t g'} + ŵ{tk}·ŵ{F'} + K·ŵ{tF'}`
    FirstMoment,
    /// `ŵ{t²F'} = ŵ{t² g'} + ŵ{t²k}·ŵ{F'} + ŵ{2tk}·ŵ{tF'} + K·ŵ{t²F'}`
    SecondMoment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub s: f64,
    pub identity: Identity,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub reliable: bool,
}

fn g_prime_weighted(power: i32) -> impl Fn(f64) -> f64 {
    move |t| (2.0 - 4.0 * t) * t.powi(power) / (1.0 + t).powi(4)
}

fn kernel_weighted(power: i32, factor: f64) -> impl Fn(f64) -> f64 {
    move |t| factor * t.powi(power) / (1.0 + t).powi(3)
}

/// Both sides of a transformed renewal identity: the left from the grid,
/// the right from quadrature of the explicit kernels times grid transforms.
pub fn kernel_transform_identities(f: &GridFunction, s: f64, identity: Identity) -> Result<IdentityCheck> {
    let l0 = laplace_of_increments(f, s, Weight::One, Tail::Reciprocal)?;
    let k = kernel_transform(s);
    let (lhs, rhs, reliable) = match identity {
        Identity::Density => (l0.value, laplace_explicit(g_prime_weighted(0), s) + k * l0.value, l0.reliable),
        Identity::FirstMoment => {
            let l1 = laplace_of_increments(f, s, Weight::T, Tail::Reciprocal)?;
            let rhs = laplace_explicit(g_prime_weighted(1), s)
                + laplace_explicit(kernel_weighted(1, 2.0), s) * l0.value
                + k * l1.value;
            (l1.value, rhs, l0.reliable && l1.reliable)
        }
        Identity::SecondMoment => {
            let l1 = laplace_of_increments(f, s, Weight::T, Tail::Reciprocal)?;
            let l2 = laplace_of_increments(f, s, Weight::T2, Tail::Reciprocal)?;
            let rhs = laplace_explicit(g_prime_weighted(2), s)
                + laplace_explicit(kernel_weighted(2, 2.0), s) * l0.value
                + laplace_explicit(kernel_weighted(1, 4.0), s) * l1.value
                + k * l2.value;
            (l2.value, rhs, l0.reliable && l1.reliable && l2.reliable)
        }
    };
    Ok(IdentityCheck {
        s,
        identity,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        reliable,
    })
}

/// Transforms obtained by solving the transformed renewal equation for each
/// unknown in turn, using only quadrature of explicit functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivisionForms {
    pub s: f64,
    /// `1 - K(s)`
    pub denominator: f64,
    /// `ŵ{F'}(s)`
    pub density: f64,
    /// `ŵ{tF'}(s)`
    pub first_moment: f64,
    /// `ŵ{t²F'}(s)`
    pub second_moment: f64,
    /// `ŵ{t(1-F)}(s)`
    pub tail_weighted: f64,
}

pub fn division_forms(s: f64) -> Result<DivisionForms> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("must be positive, got {s}")));
    }
    // 1 - K(s) = s·∫ e^{-st} (1+t)^{-2} dt avoids cancellation for small s.
    let denominator = s * laplace_explicit(|t| 1.0 / (1.0 + t).powi(2), s);
    if !(denominator > 0.0) {
        return Err(Error::NonPositiveDenominator(denominator));
    }
    let density = laplace_explicit(g_prime_weighted(0), s) / denominator;
    let first_moment = (laplace_explicit(g_prime_weighted(1), s)
        + laplace_explicit(kernel_weighted(1, 2.0), s) * density)
        / denominator;
    let second_moment = (laplace_explicit(g_prime_weighted(2), s)
        + laplace_explicit(kernel_weighted(2, 2.0), s) * density
        + laplace_explicit(kernel_weighted(1, 4.0), s) * first_moment)
        / denominator;
    let survival = (1.0 - density) / s;
    let tail_weighted = (laplace_explicit(|t| t / (1.0 + t).powi(2), s)
        - laplace_explicit(kernel_weighted(2, 2.0), s)
        + laplace_explicit(kernel_weighted(1, 2.0), s) * survival)
        / denominator;
    Ok(DivisionForms {
        s,
        denominator,
        density,
        first_moment,
        second_moment,
        tail_weighted,
    })
}
