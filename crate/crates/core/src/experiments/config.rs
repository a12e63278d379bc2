//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment, lists are comma separated. Every
//! key has a default and unknown keys are rejected.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::{Caps, ExcursionSampler, Variant};
use crate::error::{Error, Result};
use crate::types::Engine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    HittingCdf,
    RenewalSolve,
    OdeOracle,
    Tauberian,
    Persistence,
    TnScaling,
    GfIdentity,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::HittingCdf,
        ExperimentKind::RenewalSolve,
        ExperimentKind::OdeOracle,
        ExperimentKind::Tauberian,
        ExperimentKind::Persistence,
        ExperimentKind::TnScaling,
        ExperimentKind::GfIdentity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::HittingCdf => "hitting-cdf",
            ExperimentKind::RenewalSolve => "renewal-solve",
            ExperimentKind::OdeOracle => "ode-oracle",
            ExperimentKind::Tauberian => "tauberian",
            ExperimentKind::Persistence => "persistence",
            ExperimentKind::TnScaling => "tn-scaling",
            ExperimentKind::GfIdentity => "gf-identity",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerChoice {
    /// Level crossings for downward passages, clocks otherwise.
    Auto,
    Clocks,
    Levels,
}

impl SamplerChoice {
    pub fn resolve(self, start: u64, target: u64) -> ExcursionSampler {
        match self {
            SamplerChoice::Clocks => ExcursionSampler::Clocks,
            SamplerChoice::Levels => ExcursionSampler::Levels,
            SamplerChoice::Auto if target < start => ExcursionSampler::Levels,
            SamplerChoice::Auto => ExcursionSampler::Clocks,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(format!("expected csv or json, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub variant: Variant,
    pub lambda: f64,
    pub alpha: f64,
    pub t: f64,
    pub n_values: Vec<u64>,
    pub replicates: u64,
    pub start: u64,
    pub target: u64,
    pub time_cap: f64,
    pub event_cap: u64,
    pub sampler: SamplerChoice,
    pub engine: Engine,
    pub step: f64,
    pub horizon: f64,
    pub n_max: usize,
    pub ode_step: f64,
    pub s_values: Vec<f64>,
    pub h_values: Vec<f64>,
    pub t_values: Vec<f64>,
    pub gf_s_values: Vec<f64>,
    pub seed: u64,
    pub output: PathBuf,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let caps = Caps::default();
        ExperimentConfig {
            experiment: ExperimentKind::RenewalSolve,
            variant: Variant::A,
            lambda: 1.0,
            alpha: 0.5,
            t: 50.0,
            n_values: vec![1000],
            replicates: 1000,
            start: 2,
            target: 1,
            time_cap: caps.time,
            event_cap: caps.events,
            sampler: SamplerChoice::Auto,
            engine: Engine::Reduced,
            step: 0.01,
            horizon: 50.0,
            n_max: 400,
            ode_step: 0.00125,
            s_values: vec![0.001, 0.01, 0.1, 1.0],
            h_values: vec![100.0, 200.0, 400.0],
            t_values: vec![1.0, 5.0, 10.0],
            gf_s_values: vec![0.5],
            seed: 0,
            output: PathBuf::from("results.csv"),
            format: OutputFormat::Csv,
        }
    }
}

pub const KEYS: [&str; 24] = [
    "experiment",
    "variant",
    "lambda",
    "alpha",
    "t",
    "n_values",
    "replicates",
    "start",
    "target",
    "time_cap",
    "event_cap",
    "sampler",
    "engine",
    "step",
    "horizon",
    "n_max",
    "ode_step",
    "s_values",
    "h_values",
    "t_values",
    "gf_s_values",
    "seed",
    "output",
    "format",
];

fn parse_num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse_num(x.trim())).collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn caps(&self) -> Caps {
        Caps {
            time: self.time_cap,
            events: self.event_cap,
        }
    }

    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key {
            "experiment" => self.experiment = v.parse()?,
            "variant" => {
                self.variant = match v {
                    "A" | "a" => Variant::A,
                    "B" | "b" => Variant::B,
                    _ => return Err(format!("expected A or B, got `{v}`")),
                }
            }
            "lambda" => self.lambda = parse_num(v)?,
            "alpha" => self.alpha = parse_num(v)?,
            "t" => self.t = parse_num(v)?,
            "n_values" => self.n_values = parse_list(v)?,
            "replicates" => self.replicates = parse_num(v)?,
            "start" => self.start = parse_num(v)?,
            "target" => self.target = parse_num(v)?,
            "time_cap" => self.time_cap = parse_num(v)?,
            "event_cap" => self.event_cap = parse_num(v)?,
            "sampler" => {
                self.sampler = match v {
                    "auto" => SamplerChoice::Auto,
                    "clocks" => SamplerChoice::Clocks,
                    "levels" => SamplerChoice::Levels,
                    _ => return Err(format!("expected auto, clocks or levels, got `{v}`")),
                }
            }
            "engine" => {
                self.engine = match v {
                    "full" => Engine::Full,
                    "reduced" => Engine::Reduced,
                    _ => return Err(format!("expected full or reduced, got `{v}`")),
                }
            }
            "step" => self.step = parse_num(v)?,
            "horizon" => self.horizon = parse_num(v)?,
            "n_max" => self.n_max = parse_num(v)?,
            "ode_step" => self.ode_step = parse_num(v)?,
            "s_values" => self.s_values = parse_list(v)?,
            "h_values" => self.h_values = parse_list(v)?,
            "t_values" => self.t_values = parse_list(v)?,
            "gf_s_values" => self.gf_s_values = parse_list(v)?,
            "seed" => self.seed = parse_num(v)?,
            "output" => self.output = PathBuf::from(v),
            "format" => self.format = v.parse()?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Parse a config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut keys = Vec::new();
        let mut details = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                keys.push(format!("line {}", lineno + 1));
                details.push(format!("line {}: expected `key = value`", lineno + 1));
                continue;
            };
            let k = k.trim();
            if let Err(reason) = cfg.set(k, v) {
                keys.push(k.to_string());
                details.push(format!("{k}: {reason}"));
            }
        }
        if !keys.is_empty() {
            return Err(Error::Config { keys, details });
        }
        Ok(cfg)
    }

    /// Render every key, in a fixed order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// `(key, value)` pairs as they appear in [`serialize`](Self::serialize).
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let variant = match self.variant {
            Variant::A => "A",
            Variant::B => "B",
        };
        let sampler = match self.sampler {
            SamplerChoice::Auto => "auto",
            SamplerChoice::Clocks => "clocks",
            SamplerChoice::Levels => "levels",
        };
        let engine = match self.engine {
            Engine::Full => "full",
            Engine::Reduced => "reduced",
        };
        let format = match self.format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        let values = [
            self.experiment.as_str().to_string(),
            variant.to_string(),
            self.lambda.to_string(),
            self.alpha.to_string(),
            self.t.to_string(),
            join(&self.n_values),
            self.replicates.to_string(),
            self.start.to_string(),
            self.target.to_string(),
            self.time_cap.to_string(),
            self.event_cap.to_string(),
            sampler.to_string(),
            engine.to_string(),
            self.step.to_string(),
            self.horizon.to_string(),
            self.n_max.to_string(),
            self.ode_step.to_string(),
            join(&self.s_values),
            join(&self.h_values),
            join(&self.t_values),
            join(&self.gf_s_values),
            self.seed.to_string(),
            self.output.display().to_string(),
            format.to_string(),
        ];
        KEYS.into_iter().zip(values).collect()
    }

    /// Range checks on the values the chosen experiment reads.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<(&str, String)> = Vec::new();
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.lambda) {
            bad.push(("lambda", "must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            bad.push(("alpha", "must lie in (0, 1]".into()));
        }
        if !positive(self.t) {
            bad.push(("t", "must be positive".into()));
        }
        if self.replicates == 0 {
            bad.push(("replicates", "must be at least 1".into()));
        }
        if !(self.time_cap > 0.0) {
            bad.push(("time_cap", "must be positive".into()));
        }
        if self.event_cap == 0 {
            bad.push(("event_cap", "must be positive".into()));
        }
        if !positive(self.step) {
            bad.push(("step", "must be positive".into()));
        }
        if !positive(self.horizon) || self.horizon < self.step {
            bad.push(("horizon", "must be positive and at least one step".into()));
        }
        if !positive(self.ode_step) {
            bad.push(("ode_step", "must be positive".into()));
        }
        match self.experiment {
            ExperimentKind::TnScaling => {
                if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 2) {
                    bad.push(("n_values", "needs values of at least 2".into()));
                }
                if self.variant != Variant::A {
                    bad.push(("variant", "tn-scaling runs on variant A".into()));
                }
            }
            ExperimentKind::Tauberian => {
                if self.s_values.is_empty() || self.s_values.iter().any(|&s| !positive(s)) {
                    bad.push(("s_values", "needs positive values".into()));
                }
                if self.h_values.iter().any(|&h| !(h >= 0.0 && h <= self.horizon)) {
                    bad.push(("h_values", "must lie in [0, horizon]".into()));
                }
            }
            ExperimentKind::GfIdentity => {
                if self.gf_s_values.is_empty() || self.gf_s_values.iter().any(|s| !(0.0..1.0).contains(s)) {
                    bad.push(("gf_s_values", "must lie in [0, 1)".into()));
                }
                if self.t_values.is_empty() || self.t_values.iter().any(|&t| !(t > 0.0 && t <= self.horizon)) {
                    bad.push(("t_values", "must lie in (0, horizon]".into()));
                }
            }
            ExperimentKind::HittingCdf => {
                if self.start < self.variant.floor() {
                    bad.push(("start", "below the state space".into()));
                }
                if self.target < self.variant.floor() || self.target == self.start {
                    bad.push(("target", "below the state space or equal to start".into()));
                }
            }
            _ => {}
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config {
                keys: bad.iter().map(|(k, _)| k.to_string()).collect(),
                details: bad.iter().map(|(k, r)| format!("{k}: {r}")).collect(),
            })
        }
    }
}
