//! Adaptive quadrature built on the double-exponential rule from the
//! `quadrature` crate, with interval bisection when a single panel does not
//! meet the requested tolerance.

const MAX_DEPTH: u32 = 12;
const REL_TOL: f64 = 1e-13;

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    bisect(&f, a, b, tol, 0)
}

fn bisect<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let out = quadrature::integrate(f, a, b, tol);
    if out.error_estimate <= tol.max(REL_TOL * out.integral.abs()) || depth >= MAX_DEPTH {
        return out.integral;
    }
    let mid = 0.5 * (a + b);
    bisect(f, a, mid, 0.5 * tol, depth + 1) + bisect(f, mid, b, 0.5 * tol, depth + 1)
}

/// `∫_a^∞ f` via the map `t = a + scale·u/(1-u)`, `u ∈ [0, 1)`.
///
/// `scale` should be of the order of the length over which `f` decays.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64, tol: f64) -> f64 {
    let mapped = |u: f64| {
        let w = 1.0 - u;
        if w <= 0.0 {
            return 0.0;
        }
        let t = a + scale * u / w;
        let v = f(t) * scale / (w * w);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(mapped, 0.0, 1.0, tol)
}

/// Composite Simpson rule over equally spaced samples (3/8 rule on the last
/// three intervals when the interval count is odd).
pub fn simpson_samples(values: &[f64], step: f64) -> f64 {
    let intervals = values.len().saturating_sub(1);
    match intervals {
        0 => 0.0,
        1 => 0.5 * step * (values[0] + values[1]),
        2 => step / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ => {
            let (even_end, tail) = if intervals % 2 == 0 {
                (intervals, 0.0)
            } else {
                let k = intervals - 3;
                let v = &values[k..];
                (k, 3.0 * step / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]))
            };
            if even_end == 0 {
                return tail;
            }
            let mut acc = values[0] + values[even_end];
            for (i, v) in values[1..even_end].iter().enumerate() {
                acc += if i % 2 == 0 { 4.0 * v } else { 2.0 * v };
            }
            step / 3.0 * acc + tail
        }
    }
}
