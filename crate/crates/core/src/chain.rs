//! Exact simulation of the number of alive viral types.
//!
//! Two chain variants share the per-capita rates `birth = λn`, `death = n`:
//!
//! * [`Variant::A`] lives on `{1, 2, ...}` and state 1 cannot die, so the
//!   chain keeps returning to 1.
//! * [`Variant::B`] is the classical chain on `{0, 1, ...}` with 0 absorbing.
//!
//! Hitting times are simulated by competing exponential clocks. For long
//! heavy-tailed excursions a second exact sampler is available that draws the
//! level-crossing counts of an excursion instead of its individual jumps.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Geometric, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{exp_variate, open_uniform, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// State 1 is reflecting: it can only give birth.
    A,
    /// State 0 is absorbing.
    B,
}

impl Variant {
    fn name(self) -> &'static str {
        match self {
            Variant::A => "A",
            Variant::B => "B",
        }
    }

    /// Smallest state of the state space.
    pub fn floor(self) -> u64 {
        match self {
            Variant::A => 1,
            Variant::B => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub birth: f64,
    pub death: f64,
}

impl Rates {
    pub fn total(&self) -> f64 {
        self.birth + self.death
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    variant: Variant,
    lambda: f64,
}

impl ModelSpec {
    pub fn new(variant: Variant, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", format!("must be positive and finite, got {lambda}")));
        }
        Ok(ModelSpec { variant, lambda })
    }

    pub fn critical(variant: Variant) -> Self {
        ModelSpec {
            variant,
            lambda: 1.0,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Birth and death rates out of state `n`.
    pub fn rates(&self, n: u64) -> Result<Rates> {
        let nf = n as f64;
        match self.variant {
            Variant::A if n == 0 => Err(Error::InvalidState {
                state: n,
                variant: self.variant.name(),
            }),
            Variant::A if n == 1 => Ok(Rates {
                birth: self.lambda,
                death: 0.0,
            }),
            _ => Ok(Rates {
                birth: self.lambda * nf,
                death: nf,
            }),
        }
    }

    /// Rates without the state-space check; callers guarantee `n` is valid.
    #[inline]
    fn rates_unchecked(&self, n: u64) -> Rates {
        let nf = n as f64;
        let death = if self.variant == Variant::A && n == 1 {
            0.0
        } else {
            nf
        };
        Rates {
            birth: self.lambda * nf,
            death,
        }
    }

    /// Probability that a jump from a state with both moves possible is a birth.
    pub fn up_probability(&self) -> f64 {
        self.lambda / (1.0 + self.lambda)
    }
}

/// Per-trajectory resource limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub time: f64,
    pub events: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            time: 1e6,
            events: 10_000_000,
        }
    }
}

impl Caps {
    pub fn validate(&self) -> Result<()> {
        if !(self.time > 0.0) {
            return Err(invalid("time_cap", "must be positive"));
        }
        if self.events == 0 {
            return Err(invalid("event_cap", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingSample {
    pub time: f64,
    pub censored: bool,
    pub events: u64,
}

impl HittingSample {
    fn censored(caps: &Caps, events: u64) -> Self {
        HittingSample {
            time: caps.time,
            censored: true,
            events: events.min(caps.events),
        }
    }
}

fn check_endpoints(model: &ModelSpec, start: u64, target: u64) -> Result<()> {
    let floor = model.variant.floor();
    for s in [start, target] {
        if s < floor {
            return Err(Error::InvalidState {
                state: s,
                variant: model.variant.name(),
            });
        }
    }
    if start == target {
        return Err(Error::StartEqualsTarget(start));
    }
    // Upward passage needs a positive birth rate at the start.
    if target > start && model.rates_unchecked(start).birth == 0.0 {
        return Err(Error::Unreachable { start, target });
    }
    Ok(())
}

/// First passage time from `start` to `target` by competing exponential clocks.
pub fn simulate_hitting<R: Rng + ?Sized>(
    model: &ModelSpec,
    start: u64,
    target: u64,
    rng: &mut R,
    caps: &Caps,
) -> Result<HittingSample> {
    check_endpoints(model, start, target)?;
    caps.validate()?;
    let mut state = start;
    let mut time = 0.0;
    let mut events = 0u64;
    while state != target {
        if events >= caps.events {
            return Ok(HittingSample::censored(caps, events));
        }
        let rates = model.rates_unchecked(state);
        let total = rates.total();
        if total == 0.0 {
            // absorbed away from the target
            return Ok(HittingSample::censored(caps, events));
        }
        let dt = exp_variate(rng, total);
        if time + dt > caps.time {
            return Ok(HittingSample::censored(caps, events));
        }
        time += dt;
        events += 1;
        if open_uniform(rng) * total < rates.birth {
            state += 1;
        } else {
            state -= 1;
        }
    }
    Ok(HittingSample {
        time,
        censored: false,
        events,
    })
}

/// How excursions back to the target are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExcursionSampler {
    /// Jump-by-jump competing exponential clocks.
    Clocks,
    /// Level-crossing counts: the number of up-crossings of each edge above the
    /// start forms a Galton–Watson chain with geometric offspring, and the time
    /// spent at a level is a Gamma sum over its visits. Exact in law, with cost
    /// proportional to the highest level reached instead of the jump count.
    Levels,
}

/// Sum of `count` iid geometric variables counting up-steps before the first
/// down-step. `None` when the mixture rate leaves the range the Poisson sampler supports.
fn negative_binomial<R: Rng + ?Sized>(rng: &mut R, count: u64, p_up: f64) -> Option<u64> {
    let q = 1.0 - p_up;
    if count <= 16 {
        let geo = Geometric::new(q).expect("valid success probability");
        (0..count).try_fold(0u64, |acc, _| acc.checked_add(geo.sample(rng)))
    } else {
        // Gamma–Poisson mixture representation.
        let rate = Gamma::new(count as f64, p_up / q)
            .expect("valid gamma")
            .sample(rng);
        if rate <= 0.0 {
            return Some(0);
        }
        let draw = Poisson::new(rate).ok()?.sample(rng);
        Some(draw as u64)
    }
}

/// Sum of `count` iid Exp(rate) holding times.
fn gamma_time<R: Rng + ?Sized>(rng: &mut R, count: u64, rate: f64) -> f64 {
    if count == 1 {
        return exp_variate(rng, rate);
    }
    Gamma::new(count as f64, 1.0 / rate)
        .expect("valid gamma")
        .sample(rng)
}

/// One downward first passage `from -> from - 1` by level crossings.
/// Returns the elapsed time and jump count, or the jumps counted so far once a
/// cap is exceeded.
fn level_passage<R: Rng + ?Sized>(
    model: &ModelSpec,
    from: u64,
    rng: &mut R,
    time_budget: f64,
    event_budget: u64,
) -> std::result::Result<(f64, u64), u64> {
    let p_up = model.up_probability();
    let speed = 1.0 + model.lambda;
    let mut arrivals_from_below = 1u64;
    let mut level = from;
    let mut time = 0.0;
    let mut events = 0u64;
    loop {
        let Some(up) = negative_binomial(rng, arrivals_from_below, p_up) else {
            return Err(events);
        };
        let visits = arrivals_from_below.saturating_add(up);
        time += gamma_time(rng, visits, speed * level as f64);
        events = events.saturating_add(visits);
        if time > time_budget || events > event_budget {
            return Err(events);
        }
        if up == 0 {
            return Ok((time, events));
        }
        arrivals_from_below = up;
        level += 1;
    }
}

/// First passage time from `start` down to `target` drawn with the chosen sampler.
pub fn sample_passage<R: Rng + ?Sized>(
    model: &ModelSpec,
    start: u64,
    target: u64,
    rng: &mut R,
    caps: &Caps,
    sampler: ExcursionSampler,
) -> Result<HittingSample> {
    match sampler {
        ExcursionSampler::Clocks => simulate_hitting(model, start, target, rng, caps),
        ExcursionSampler::Levels => {
            check_endpoints(model, start, target)?;
            caps.validate()?;
            if target > start {
                return Err(invalid(
                    "sampler",
                    "level-crossing sampler only handles downward passages",
                ));
            }
            let (mut time, mut events) = (0.0, 0u64);
            for from in ((target + 1)..=start).rev() {
                match level_passage(model, from, rng, caps.time - time, caps.events - events) {
                    Ok((dt, de)) => {
                        time += dt;
                        events += de;
                    }
                    Err(de) => {
                        return Ok(HittingSample::censored(caps, events.saturating_add(de)))
                    }
                }
            }
            Ok(HittingSample {
                time,
                censored: false,
                events,
            })
        }
    }
}

/// Total time of `n` returns to state 1 under variant A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TnSample {
    pub n: u64,
    pub total_time: f64,
    /// Sum of the sojourns at state 1.
    pub sojourn_time: f64,
    /// Sum of the hitting times from 2 back to 1.
    pub hitting_time: f64,
    pub events: u64,
    pub censored: bool,
}

impl TnSample {
    /// `T_n / (n log n)`; undefined for `n = 1`.
    pub fn ratio(&self) -> f64 {
        let n = self.n as f64;
        self.total_time / (n * n.ln())
    }
}

/// Draw `T_n = Σ X_i + Σ H_i`. Excursion `i` uses stream `key.child(i)`.
pub fn sample_tn(
    model: &ModelSpec,
    n: u64,
    key: StreamKey,
    caps: &Caps,
    sampler: ExcursionSampler,
) -> Result<TnSample> {
    if model.variant != Variant::A {
        return Err(invalid("variant", "T_n is defined for variant A"));
    }
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    caps.validate()?;
    let sojourn_rate = model.rates_unchecked(1).birth;
    let mut out = TnSample {
        n,
        total_time: 0.0,
        sojourn_time: 0.0,
        hitting_time: 0.0,
        events: 0,
        censored: false,
    };
    for i in 0..n {
        let mut rng = key.child(i).stream();
        let x = exp_variate(&mut rng, sojourn_rate);
        let h = sample_passage(model, 2, 1, &mut rng, caps, sampler)?;
        out.sojourn_time += x;
        out.hitting_time += h.time;
        out.events = out.events.saturating_add(1 + h.events);
        out.censored |= h.censored;
    }
    out.total_time = out.sojourn_time + out.hitting_time;
    Ok(out)
}

/// `replicates` independent hitting samples, replicate `r` on `key.child(r)`.
/// Runs on the current rayon pool; output order is replicate order.
pub fn hitting_replicates(
    model: &ModelSpec,
    start: u64,
    target: u64,
    replicates: u64,
    key: StreamKey,
    caps: &Caps,
    sampler: ExcursionSampler,
) -> Result<Vec<HittingSample>> {
    check_endpoints(model, start, target)?;
    caps.validate()?;
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = key.child(r).stream();
            sample_passage(model, start, target, &mut rng, caps, sampler)
        })
        .collect()
}

/// `replicates` independent `T_n` samples, replicate `r` on `key.child(r)`.
pub fn tn_replicates(
    model: &ModelSpec,
    n: u64,
    replicates: u64,
    key: StreamKey,
    caps: &Caps,
    sampler: ExcursionSampler,
) -> Result<Vec<TnSample>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| sample_tn(model, n, key.child(r), caps, sampler))
        .collect()
}

/// A full jump-by-jump trajectory, for audits.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<u64>,
}

/// Record the path from `start` until `target` is hit or a cap is reached.
pub fn trace_path<R: Rng + ?Sized>(
    model: &ModelSpec,
    start: u64,
    target: u64,
    rng: &mut R,
    caps: &Caps,
) -> Result<Trajectory> {
    check_endpoints(model, start, target)?;
    let mut path = Trajectory {
        times: vec![0.0],
        states: vec![start],
    };
    let (mut state, mut time) = (start, 0.0);
    while state != target && (path.times.len() as u64) <= caps.events {
        let rates = model.rates_unchecked(state);
        let total = rates.total();
        if total == 0.0 {
            break;
        }
        time += exp_variate(rng, total);
        if time > caps.time {
            break;
        }
        state = if open_uniform(rng) * total < rates.birth {
            state + 1
        } else {
            state - 1
        };
        path.times.push(time);
        path.states.push(state);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(lambda: f64) -> ModelSpec {
        ModelSpec::new(Variant::A, lambda).unwrap()
    }

    #[test]
    fn rate_table_examples() {
        assert_eq!(a(1.0).rates(1).unwrap(), Rates { birth: 1.0, death: 0.0 });
        assert_eq!(a(1.0).rates(5).unwrap(), Rates { birth: 5.0, death: 5.0 });
        assert_eq!(a(2.0).rates(3).unwrap(), Rates { birth: 6.0, death: 3.0 });
        let b = ModelSpec::critical(Variant::B);
        assert_eq!(b.rates(0).unwrap(), Rates { birth: 0.0, death: 0.0 });
        assert_eq!(b.rates(1).unwrap(), Rates { birth: 1.0, death: 1.0 });
        assert!(matches!(a(1.0).rates(0), Err(Error::InvalidState { .. })));
    }

    #[test]
    fn lambda_must_be_positive() {
        assert!(ModelSpec::new(Variant::A, 0.0).is_err());
        assert!(ModelSpec::new(Variant::A, -1.0).is_err());
        assert!(ModelSpec::new(Variant::A, f64::NAN).is_err());
    }

    #[test]
    fn start_equal_target_rejected() {
        let mut rng = StreamKey::new(1).stream();
        let err = simulate_hitting(&a(1.0), 2, 2, &mut rng, &Caps::default()).unwrap_err();
        assert_eq!(err, Error::StartEqualsTarget(2));
        let b = ModelSpec::critical(Variant::B);
        assert!(matches!(
            simulate_hitting(&b, 0, 1, &mut rng, &Caps::default()),
            Err(Error::Unreachable { .. })
        ));
        assert!(simulate_hitting(&a(1.0), 2, 0, &mut rng, &Caps::default()).is_err());
    }

    #[test]
    fn censoring_reports_cap() {
        let caps = Caps {
            time: 1e-9,
            events: 10,
        };
        let mut rng = StreamKey::new(3).stream();
        let s = simulate_hitting(&a(1.0), 50, 1, &mut rng, &caps).unwrap();
        assert!(s.censored);
        assert_eq!(s.time, caps.time);

        let caps = Caps {
            time: 1e9,
            events: 5,
        };
        let s = simulate_hitting(&a(1.0), 50, 1, &mut rng, &caps).unwrap();
        assert!(s.censored);
        assert_eq!(s.events, 5);
        assert_eq!(s.time, caps.time);

        let s = sample_passage(&a(1.0), 50, 1, &mut rng, &caps, ExcursionSampler::Levels).unwrap();
        assert!(s.censored);
        assert_eq!(s.events, 5);
    }

    #[test]
    fn completed_passages_have_events() {
        let key = StreamKey::new(11);
        for sampler in [ExcursionSampler::Clocks, ExcursionSampler::Levels] {
            for r in 0..200 {
                let mut rng = key.child(r).stream();
                let s = sample_passage(&a(1.0), 2, 1, &mut rng, &Caps::default(), sampler).unwrap();
                if !s.censored {
                    assert!(s.events >= 1);
                    assert!(s.time > 0.0);
                    // an excursion from 2 to 1 has an odd number of jumps
                    assert_eq!(s.events % 2, 1);
                }
            }
        }
    }

    #[test]
    fn paths_move_by_one_and_respect_floor() {
        let key = StreamKey::new(5);
        for (variant, start, target) in [(Variant::A, 2, 1), (Variant::B, 1, 0), (Variant::A, 3, 40)] {
            let model = ModelSpec::new(variant, 1.0).unwrap();
            for r in 0..50 {
                let mut rng = key.child(r).stream();
                let p = trace_path(&model, start, target, &mut rng, &Caps { time: 100.0, events: 100_000 })
                    .unwrap();
                for w in p.times.windows(2) {
                    assert!(w[1] > w[0]);
                }
                for w in p.states.windows(2) {
                    assert_eq!(w[0].abs_diff(w[1]), 1);
                }
                assert!(p.states.iter().all(|&s| s >= variant.floor()));
            }
        }
    }

    #[test]
    fn tn_requires_variant_a() {
        let b = ModelSpec::critical(Variant::B);
        assert!(sample_tn(&b, 3, StreamKey::new(1), &Caps::default(), ExcursionSampler::Levels).is_err());
        assert!(sample_tn(&a(1.0), 0, StreamKey::new(1), &Caps::default(), ExcursionSampler::Levels).is_err());
    }

    #[test]
    fn tn_is_sum_of_parts_and_deterministic() {
        let key = StreamKey::new(9);
        let s1 = sample_tn(&a(1.0), 20, key, &Caps::default(), ExcursionSampler::Levels).unwrap();
        let s2 = sample_tn(&a(1.0), 20, key, &Caps::default(), ExcursionSampler::Levels).unwrap();
        assert_eq!(s1, s2);
        assert!(s1.total_time > 0.0);
        assert_eq!(s1.total_time, s1.sojourn_time + s1.hitting_time);
    }
}
