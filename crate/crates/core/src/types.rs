//! Fitness-ranked bookkeeping of alive viral types driven by the variant A
//! chain, and Monte Carlo estimation of how often the maximal type at time
//! `αt` is still the maximal type at time `t`.
//!
//! Each newborn type draws a Uniform(0, 1) fitness; a death removes the
//! least fit type. Since a lone type cannot die, the fittest type is never
//! removed, so a reduced state of `(count, max fitness, max id)` evolves
//! identically to the full population when both consume the same draws.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{Caps, ModelSpec, Variant};
use crate::error::{invalid, Error, Result};
use crate::rng::{exp_variate, open_uniform, StreamKey};

/// Fitness value ordered by `total_cmp`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Fitness(f64);

impl Eq for Fitness {}

impl PartialOrd for Fitness {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fitness {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Operations shared by the full and reduced type populations.
pub trait Population {
    fn size(&self) -> u64;
    /// Id of the fittest alive type.
    fn max_id(&self) -> u64;
    fn max_fitness(&self) -> f64;
    /// Add a type with the given fitness, returning its id.
    fn insert(&mut self, fitness: f64) -> u64;
    /// Whether a newborn with this fitness would collide with an alive type.
    fn collides(&self, fitness: f64) -> bool;
    /// Remove the least fit type.
    fn remove_min(&mut self) -> Result<()>;
}

/// Every alive type with its fitness and id.
#[derive(Debug, Clone, PartialEq)]
pub struct TypePopulation {
    alive: BTreeMap<Fitness, u64>,
    next_id: u64,
}

impl TypePopulation {
    /// A single founding type with id 0.
    pub fn founder(fitness: f64) -> Self {
        let mut pop = TypePopulation {
            alive: BTreeMap::new(),
            next_id: 0,
        };
        pop.insert(fitness);
        pop
    }

    /// `(fitness, id)` pairs in increasing fitness order.
    pub fn types(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.alive.iter().map(|(f, &id)| (f.0, id))
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    /// Add a newborn type with a fresh uniform fitness, resampling on collision.
    pub fn birth_event<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u64 {
        birth(self, rng).0
    }

    /// Remove the least fit type; forbidden with a single type alive.
    pub fn death_event(&mut self) -> Result<()> {
        self.remove_min()
    }
}

impl Population for TypePopulation {
    fn size(&self) -> u64 {
        self.alive.len() as u64
    }

    fn max_id(&self) -> u64 {
        *self.alive.last_key_value().expect("population is never empty").1
    }

    fn max_fitness(&self) -> f64 {
        self.alive.last_key_value().expect("population is never empty").0 .0
    }

    fn insert(&mut self, fitness: f64) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        let previous = self.alive.insert(Fitness(fitness), id);
        debug_assert!(previous.is_none(), "duplicate fitness");
        id
    }

    fn collides(&self, fitness: f64) -> bool {
        self.alive.contains_key(&Fitness(fitness))
    }

    fn remove_min(&mut self) -> Result<()> {
        if self.alive.len() < 2 {
            return Err(Error::ForbiddenDeath);
        }
        self.alive.pop_first();
        Ok(())
    }
}

/// Count of alive types plus the identity of the fittest one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedPopulation {
    pub count: u64,
    pub max_fitness: f64,
    pub max_id: u64,
    next_id: u64,
}

impl ReducedPopulation {
    pub fn founder(fitness: f64) -> Self {
        ReducedPopulation {
            count: 1,
            max_fitness: fitness,
            max_id: 0,
            next_id: 1,
        }
    }
}

impl Population for ReducedPopulation {
    fn size(&self) -> u64 {
        self.count
    }

    fn max_id(&self) -> u64 {
        self.max_id
    }

    fn max_fitness(&self) -> f64 {
        self.max_fitness
    }

    fn insert(&mut self, fitness: f64) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.count += 1;
        if fitness > self.max_fitness {
            self.max_fitness = fitness;
            self.max_id = id;
        }
        id
    }

    fn collides(&self, fitness: f64) -> bool {
        fitness == self.max_fitness
    }

    fn remove_min(&mut self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::ForbiddenDeath);
        }
        self.count -= 1;
        Ok(())
    }
}

fn birth<P: Population + ?Sized, R: Rng + ?Sized>(pop: &mut P, rng: &mut R) -> (u64, f64) {
    loop {
        let fitness = open_uniform(rng);
        if !pop.collides(fitness) {
            return (pop.insert(fitness), fitness);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Full,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Birth { fitness: f64, id: u64 },
    Death,
}

/// One applied event and the population's maximal type afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoggedEvent {
    pub time: f64,
    pub kind: EventKind,
    pub size_after: u64,
    pub max_id_after: u64,
    pub max_fitness_after: f64,
}

/// What one replicate observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplicateOutcome {
    Completed {
        max_id_at_alpha: u64,
        max_id_at_end: u64,
        max_fitness_at_alpha: f64,
        events: u64,
    },
    /// The event cap was reached before time `t`.
    Aborted { events: u64 },
}

impl ReplicateOutcome {
    pub fn same_max(&self) -> Option<bool> {
        match *self {
            ReplicateOutcome::Completed {
                max_id_at_alpha,
                max_id_at_end,
                ..
            } => Some(max_id_at_alpha == max_id_at_end),
            ReplicateOutcome::Aborted { .. } => None,
        }
    }
}

/// Run the variant A chain with type bookkeeping up to time `t`.
///
/// The maximal type at `αt` is read from the state after the last event at
/// or before `αt`. Draw order per event: holding time, event kind, and for a
/// birth the newborn's fitness.
pub fn run_replicate<P: Population, R: Rng + ?Sized>(
    pop: &mut P,
    model: &ModelSpec,
    alpha: f64,
    t: f64,
    rng: &mut R,
    caps: &Caps,
    mut log: Option<&mut Vec<LoggedEvent>>,
) -> Result<ReplicateOutcome> {
    let alpha_time = alpha * t;
    let mut time = 0.0;
    let mut events = 0u64;
    let mut at_alpha: Option<(u64, f64)> = None;
    loop {
        let rates = model.rates(pop.size())?;
        let dt = exp_variate(rng, rates.total());
        let next = time + dt;
        if at_alpha.is_none() && next > alpha_time {
            at_alpha = Some((pop.max_id(), pop.max_fitness()));
        }
        if next > t {
            let (max_id_at_alpha, max_fitness_at_alpha) = at_alpha.expect("recorded before t");
            return Ok(ReplicateOutcome::Completed {
                max_id_at_alpha,
                max_id_at_end: pop.max_id(),
                max_fitness_at_alpha,
                events,
            });
        }
        if events >= caps.events {
            return Ok(ReplicateOutcome::Aborted { events });
        }
        time = next;
        events += 1;
        let kind = if open_uniform(rng) * rates.total() < rates.birth {
            let (id, fitness) = birth(pop, rng);
            EventKind::Birth { fitness, id }
        } else {
            pop.remove_min()?;
            EventKind::Death
        };
        if let Some(log) = log.as_deref_mut() {
            log.push(LoggedEvent {
                time,
                kind,
                size_after: pop.size(),
                max_id_after: pop.max_id(),
                max_fitness_after: pop.max_fitness(),
            });
        }
    }
}

/// Run one replicate from a fresh founder with the given engine.
pub fn replicate<R: Rng + ?Sized>(
    engine: Engine,
    model: &ModelSpec,
    alpha: f64,
    t: f64,
    rng: &mut R,
    caps: &Caps,
    log: Option<&mut Vec<LoggedEvent>>,
) -> Result<ReplicateOutcome> {
    let founder = open_uniform(rng);
    match engine {
        Engine::Full => {
            let mut pop = TypePopulation::founder(founder);
            run_replicate(&mut pop, model, alpha, t, rng, caps, log)
        }
        Engine::Reduced => {
            let mut pop = ReducedPopulation::founder(founder);
            run_replicate(&mut pop, model, alpha, t, rng, caps, log)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceParams {
    pub lambda: f64,
    pub alpha: f64,
    pub t: f64,
    pub replicates: u64,
    pub caps: Caps,
    pub engine: Engine,
}

impl PersistenceParams {
    pub fn validate(&self) -> Result<ModelSpec> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(invalid("t", format!("must be positive, got {}", self.t)));
        }
        if self.replicates == 0 {
            return Err(invalid("replicates", "must be at least 1"));
        }
        self.caps.validate()?;
        ModelSpec::new(Variant::A, self.lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceEstimate {
    pub lambda: f64,
    pub alpha: f64,
    pub t: f64,
    pub replicates: u64,
    /// Replicates that reached time `t` within the event cap.
    pub completed: u64,
    pub same_count: u64,
    pub estimate: f64,
    pub stderr: f64,
}

impl PersistenceEstimate {
    fn from_counts(p: &PersistenceParams, completed: u64, same_count: u64) -> Self {
        let (estimate, stderr) = if completed == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let e = same_count as f64 / completed as f64;
            (e, (e * (1.0 - e) / completed as f64).sqrt())
        };
        PersistenceEstimate {
            lambda: p.lambda,
            alpha: p.alpha,
            t: p.t,
            replicates: p.replicates,
            completed,
            same_count,
            estimate,
            stderr,
        }
    }

    pub fn aborted(&self) -> u64 {
        self.replicates - self.completed
    }
}

/// Estimate `P(maximal type at αt is the maximal type at t)`; replicate `r`
/// draws from `key.child(r)`.
pub fn estimate_persistence(params: &PersistenceParams, key: StreamKey) -> Result<PersistenceEstimate> {
    let model = params.validate()?;
    let outcomes: Vec<ReplicateOutcome> = (0..params.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = key.child(r).stream();
            replicate(params.engine, &model, params.alpha, params.t, &mut rng, &params.caps, None)
        })
        .collect::<Result<_>>()?;
    let (completed, same) = outcomes.iter().fold((0u64, 0u64), |(c, s), o| match o.same_max() {
        Some(same) => (c + 1, s + u64::from(same)),
        None => (c, s),
    });
    Ok(PersistenceEstimate::from_counts(params, completed, same))
}
