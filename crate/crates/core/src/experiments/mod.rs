//! Reproducible experiment runs: a config in, payload tables and a result
//! record out.
//!
//! Payload files depend only on the config (seed included). Timing and the
//! worker count live in the `<output>.record.json` sidecar.

mod config;
mod report;
mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, ExperimentKind, OutputFormat, SamplerChoice, KEYS};
pub use report::{read_record, report};
pub use table::{tables_to_json, Cell, Table};

use crate::chain::{hitting_replicates, tn_replicates, ModelSpec, Variant};
use crate::error::{Error, Result};
use crate::laplace::{
    kernel_transform_identities, laplace_of_increments, moment_integrals, tail_product, Identity, Tail, Weight,
};
use crate::renewal::{
    f_prime, gf_identity_residual, model_b_cdf, solve_ode_truncation, solve_renewal, solve_renewal_richardson,
    GridFunction,
};
use crate::rng::StreamKey;
use crate::stats::{dkw_epsilon, median_iqr, Ecdf};
use crate::types::{estimate_persistence, PersistenceParams};

pub const SEED_OVERRIDE_VAR: &str = "SEED_OVERRIDE";

/// Frozen CSV headers of the primary payload tables.
pub const HITTING_HEADER: &str = "replicate,time,censored,events";
pub const RENEWAL_HEADER: &str = "t,F,Fprime";
pub const MOMENTS_HEADER: &str = "h,m,s2,tail_product";
pub const LAPLACE_HEADER: &str = "s,value,tail_share";
pub const PERSISTENCE_HEADER: &str = "lambda,alpha,t,replicates,completed,same_count,estimate,stderr";
pub const TN_HEADER: &str = "n,replicate,total_time,ratio";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub replicates: u64,
    pub completed: u64,
    pub censored: u64,
}

/// Everything an experiment computes, before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// The first table is the primary payload.
    pub tables: Vec<Table>,
    pub summary: Table,
    pub counters: Counters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: ExperimentKind,
    pub version: String,
    pub config: ExperimentConfig,
    pub seed_override: Option<u64>,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub counters: Counters,
    pub summary: Table,
    pub outputs: Vec<PathBuf>,
}

impl ResultRecord {
    /// Some replicates hit a resource cap.
    pub fn partial(&self) -> bool {
        self.counters.censored > 0
    }
}

/// Apply `SEED_OVERRIDE` when set. Returns the override that was applied.
pub fn apply_seed_override(cfg: &mut ExperimentConfig) -> Result<Option<u64>> {
    match std::env::var(SEED_OVERRIDE_VAR) {
        Ok(v) => {
            let seed = v.trim().parse().map_err(|_| Error::Config {
                keys: vec![SEED_OVERRIDE_VAR.to_string()],
                details: vec![format!("{SEED_OVERRIDE_VAR}: cannot parse `{v}` as a 64-bit seed")],
            })?;
            cfg.seed = seed;
            Ok(Some(seed))
        }
        Err(_) => Ok(None),
    }
}

/// Compute an experiment on a pool of `workers` threads (all cores when `None`).
pub fn execute(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Outcome> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| match cfg.experiment {
        ExperimentKind::HittingCdf => hitting_cdf(cfg),
        ExperimentKind::RenewalSolve => renewal_solve(cfg),
        ExperimentKind::OdeOracle => ode_oracle(cfg),
        ExperimentKind::Tauberian => tauberian(cfg),
        ExperimentKind::Persistence => persistence(cfg),
        ExperimentKind::TnScaling => tn_scaling(cfg),
        ExperimentKind::GfIdentity => gf_identity(cfg),
    })
}

/// Execute, write the payload and the record sidecar, and return the record.
pub fn run(cfg: &ExperimentConfig, workers: Option<usize>, seed_override: Option<u64>) -> Result<ResultRecord> {
    let started = Instant::now();
    let outcome = execute(cfg, workers)?;
    let outputs = write_payload(&outcome.tables, &cfg.output, cfg.format)?;
    let record = ResultRecord {
        experiment: cfg.experiment,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        seed_override,
        workers: workers.unwrap_or_else(rayon::current_num_threads),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        counters: outcome.counters,
        summary: outcome.summary,
        outputs,
    };
    let text = serde_json::to_string_pretty(&record).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(record_path(&cfg.output), text + "\n")?;
    Ok(record)
}

pub fn record_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".record.json");
    PathBuf::from(name)
}

/// `dir/name.ext` becomes `dir/name.<table>.ext`.
pub fn sidecar_path(output: &Path, table: &str) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match output.extension() {
        Some(ext) => format!("{stem}.{table}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{table}"),
    };
    output.with_file_name(name)
}

fn write_payload(tables: &[Table], output: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    match format {
        OutputFormat::Json => {
            std::fs::write(output, tables_to_json(tables))?;
            Ok(vec![output.to_path_buf()])
        }
        OutputFormat::Csv => {
            let mut paths = Vec::with_capacity(tables.len());
            for (i, table) in tables.iter().enumerate() {
                let path = if i == 0 {
                    output.to_path_buf()
                } else {
                    sidecar_path(output, &table.name)
                };
                std::fs::write(&path, table.to_csv())?;
                paths.push(path);
            }
            Ok(paths)
        }
    }
}

fn grid_points(step: f64, upper: f64) -> Vec<f64> {
    let n = (upper / step + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

fn hitting_cdf(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = ModelSpec::new(cfg.variant, cfg.lambda)?;
    let sampler = cfg.sampler.resolve(cfg.start, cfg.target);
    let key = StreamKey::new(cfg.seed);
    let samples = hitting_replicates(&model, cfg.start, cfg.target, cfg.replicates, key, &cfg.caps(), sampler)?;

    let mut table = Table::new("samples", &["replicate", "time", "censored", "events"]);
    for (r, s) in samples.iter().enumerate() {
        table.push(vec![(r as u64).into(), s.time.into(), s.censored.into(), s.events.into()]);
    }
    let censored = samples.iter().filter(|s| s.censored).count() as u64;
    let observed: Vec<f64> = samples.iter().filter(|s| !s.censored).map(|s| s.time).collect();
    let times: Vec<f64> = samples.iter().map(|s| s.time).collect();
    let (median, _) = median_iqr(&times);
    let ecdf = Ecdf::with_censored(observed, samples.len());

    // Reference laws known in closed form or from the renewal equation.
    let upper = cfg.horizon.min(cfg.time_cap);
    let points = grid_points(cfg.step, upper);
    let critical = cfg.lambda == 1.0;
    let sup = match (cfg.variant, cfg.start, cfg.target) {
        (Variant::B, 1, 0) if critical => ecdf.sup_distance_on(&points, model_b_cdf),
        (Variant::A, 2, 1) if critical => {
            let f = solve_renewal(cfg.step, upper)?;
            ecdf.sup_distance_on(&points, |t| f.at(t).unwrap_or(f64::NAN))
        }
        _ => f64::NAN,
    };

    let mut summary = Table::new(
        "summary",
        &["replicates", "censored", "median_time", "sup_distance", "dkw_99"],
    );
    summary.push(vec![
        cfg.replicates.into(),
        censored.into(),
        median.into(),
        sup.into(),
        dkw_epsilon(samples.len(), 0.01).into(),
    ]);
    Ok(Outcome {
        tables: vec![table],
        summary,
        counters: Counters {
            replicates: cfg.replicates,
            completed: cfg.replicates - censored,
            censored,
        },
    })
}

fn renewal_table(f: &GridFunction, density: &GridFunction) -> Table {
    let mut table = Table::new("renewal", &["t", "F", "Fprime"]);
    for (i, (&v, &d)) in f.values().iter().zip(density.values()).enumerate() {
        table.push(vec![f.time(i).into(), v.into(), d.into()]);
    }
    table
}

fn renewal_solve(cfg: &ExperimentConfig) -> Result<Outcome> {
    let f = solve_renewal(cfg.step, cfg.horizon)?;
    let density = f_prime(&f);
    let mut summary = Table::new("summary", &["step", "horizon", "rows", "F_end", "tail_product_end"]);
    summary.push(vec![
        cfg.step.into(),
        f.horizon().into(),
        (f.len() as u64).into(),
        f.values()[f.len() - 1].into(),
        tail_product(&f, f.horizon())?.into(),
    ]);
    Ok(Outcome {
        tables: vec![renewal_table(&f, &density)],
        summary,
        counters: Counters::default(),
    })
}

fn ode_oracle(cfg: &ExperimentConfig) -> Result<Outcome> {
    let ode = solve_ode_truncation(cfg.n_max, cfg.ode_step, cfg.horizon, cfg.step)?;
    let f = solve_renewal(cfg.step, cfg.horizon)?;
    let p1 = ode.p1();
    let mut table = Table::new("oracle", &["t", "P1", "F", "abs_diff", "mass_deficit"]);
    let mut max_diff: f64 = 0.0;
    for (i, (&p, &v)) in p1.values().iter().zip(f.values()).enumerate() {
        let d = (p - v).abs();
        max_diff = max_diff.max(d);
        table.push(vec![f.time(i).into(), p.into(), v.into(), d.into(), ode.mass_deficit[i].into()]);
    }
    let mut summary = Table::new("summary", &["n_max", "step", "max_abs_diff", "max_mass_deficit"]);
    summary.push(vec![
        (cfg.n_max as u64).into(),
        cfg.step.into(),
        max_diff.into(),
        ode.max_mass_deficit().into(),
    ]);
    Ok(Outcome {
        tables: vec![table],
        summary,
        counters: Counters::default(),
    })
}

fn tauberian(cfg: &ExperimentConfig) -> Result<Outcome> {
    let f = solve_renewal_richardson(cfg.step, cfg.horizon)?;
    let mut moments = Table::new("moments", &["h", "m", "s2", "tail_product"]);
    for &h in &cfg.h_values {
        let mi = moment_integrals(&f, h)?;
        moments.push(vec![h.into(), mi.m.into(), mi.s2.into(), tail_product(&f, h)?.into()]);
    }
    let mut tables = vec![moments.clone()];
    for (name, weight) in [("laplace-1", Weight::One), ("laplace-t", Weight::T), ("laplace-t2", Weight::T2)] {
        let mut t = Table::new(name, &["s", "value", "tail_share"]);
        for &s in &cfg.s_values {
            let e = laplace_of_increments(&f, s, weight, Tail::Reciprocal)?;
            t.push(vec![s.into(), e.value.into(), e.tail_share.into()]);
        }
        tables.push(t);
    }
    let mut identities = Table::new("identities", &["s", "identity", "lhs", "rhs", "residual", "reliable"]);
    for &s in &cfg.s_values {
        for (label, id) in [
            ("density", Identity::Density),
            ("first-moment", Identity::FirstMoment),
            ("second-moment", Identity::SecondMoment),
        ] {
            let c = kernel_transform_identities(&f, s, id)?;
            identities.push(vec![
                s.into(),
                label.into(),
                c.lhs.into(),
                c.rhs.into(),
                c.residual.into(),
                c.reliable.into(),
            ]);
        }
    }
    tables.push(identities);
    Ok(Outcome {
        tables,
        summary: moments,
        counters: Counters::default(),
    })
}

fn persistence(cfg: &ExperimentConfig) -> Result<Outcome> {
    let params = PersistenceParams {
        lambda: cfg.lambda,
        alpha: cfg.alpha,
        t: cfg.t,
        replicates: cfg.replicates,
        caps: cfg.caps(),
        engine: cfg.engine,
    };
    let e = estimate_persistence(&params, StreamKey::new(cfg.seed))?;
    let mut table = Table::new(
        "persistence",
        &["lambda", "alpha", "t", "replicates", "completed", "same_count", "estimate", "stderr"],
    );
    table.push(vec![
        e.lambda.into(),
        e.alpha.into(),
        e.t.into(),
        e.replicates.into(),
        e.completed.into(),
        e.same_count.into(),
        e.estimate.into(),
        e.stderr.into(),
    ]);
    Ok(Outcome {
        tables: vec![table.clone()],
        summary: table,
        counters: Counters {
            replicates: e.replicates,
            completed: e.completed,
            censored: e.aborted(),
        },
    })
}

fn tn_scaling(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = ModelSpec::new(Variant::A, cfg.lambda)?;
    let sampler = cfg.sampler.resolve(2, 1);
    let key = StreamKey::new(cfg.seed);
    let mut table = Table::new("tn", &["n", "replicate", "total_time", "ratio"]);
    let mut summary = Table::new("summary", &["n", "replicates", "censored", "median_ratio", "iqr_ratio"]);
    let mut counters = Counters::default();
    for &n in &cfg.n_values {
        let samples = tn_replicates(&model, n, cfg.replicates, key.child(n), &cfg.caps(), sampler)?;
        let censored = samples.iter().filter(|s| s.censored).count() as u64;
        let ratios: Vec<f64> = samples.iter().map(|s| s.ratio()).collect();
        for (r, s) in samples.iter().enumerate() {
            table.push(vec![n.into(), (r as u64).into(), s.total_time.into(), s.ratio().into()]);
        }
        let (median, iqr) = median_iqr(&ratios);
        summary.push(vec![n.into(), cfg.replicates.into(), censored.into(), median.into(), iqr.into()]);
        counters.replicates += cfg.replicates;
        counters.completed += cfg.replicates - censored;
        counters.censored += censored;
    }
    Ok(Outcome {
        tables: vec![table],
        summary,
        counters,
    })
}

fn gf_identity(cfg: &ExperimentConfig) -> Result<Outcome> {
    let ode = solve_ode_truncation(cfg.n_max, cfg.ode_step, cfg.horizon, cfg.step)?;
    let p1 = solve_renewal_richardson(cfg.step, cfg.horizon)?;
    let mut table = Table::new("gf", &["s", "t", "lhs", "rhs", "residual"]);
    let mut worst: f64 = 0.0;
    for &s in &cfg.gf_s_values {
        for &t in &cfg.t_values {
            let r = gf_identity_residual(s, t, &p1, &ode)?;
            worst = worst.max(r.residual);
            table.push(vec![s.into(), t.into(), r.lhs.into(), r.rhs.into(), r.residual.into()]);
        }
    }
    let mut summary = Table::new("summary", &["n_max", "step", "max_residual"]);
    summary.push(vec![(cfg.n_max as u64).into(), cfg.step.into(), worst.into()]);
    Ok(Outcome {
        tables: vec![table],
        summary,
        counters: Counters::default(),
    })
}
