use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use super::{
    usage, AlphaArgs, BiasArgs, CliError, Common, InsensitivityArgs, PvalueArgs, ServeArgs, SweepAxis,
    SweepLengthArgs, SweepRankersArgs,
};
use crate::error::Error;
use crate::multileaver::Method;
use crate::ranking::CreditFunction;
use crate::service::{self, ServiceConfig};
use crate::simulator::population::{compare_pvalues, default_user_counts, PopulationConfig};
use crate::simulator::{
    self as sim, alpha_sensitivity, measure_bias_distribution, summarize, SimConfig, SweepRow, Variant,
};
use crate::stats::{BootstrapConfig, TestMode};

/// Files written by one command, before the manifest.
pub(super) struct Done {
    pub dir: PathBuf,
    pub stem: &'static str,
    pub outputs: Vec<PathBuf>,
    pub seed: u64,
    pub config: Option<serde_json::Value>,
    pub summary: Option<serde_json::Value>,
}

type Res<T> = Result<T, CliError>;

fn base_config(c: &Common, rankers: usize, length: usize) -> Res<SimConfig> {
    let cfg = SimConfig {
        rankers,
        length,
        numeval: c.numeval,
        numclick: c.numclick,
        click_bias_percent: c.click_bias,
        method: Method::Gom,
        credit: c.credit,
        candidates: c.candidates,
        alpha: c.alpha,
        rng_seed: c.seed,
        runs: c.runs,
        ..SimConfig::default()
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn methods(c: &Common, default: &[Variant]) -> Vec<Variant> {
    c.methods.clone().unwrap_or_else(|| default.to_vec())
}

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Res<PathBuf> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot create {}: {e}", dir.display()))))?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(Error::from)?;
    for row in rows {
        w.serialize(row).map_err(Error::from)?;
    }
    w.flush().map_err(Error::from)?;
    Ok(path)
}

fn to_json<T: Serialize>(v: &T) -> Option<serde_json::Value> {
    serde_json::to_value(v).ok()
}

fn stepped(min: usize, max: usize, step: usize, what: &str) -> Res<Vec<usize>> {
    if step == 0 {
        return usage(format!("--{what}-step must be at least 1"));
    }
    if min == 0 || max < min {
        return usage(format!("{what} range {min}..={max} is empty"));
    }
    Ok((min..=max).step_by(step).collect())
}

fn ranker_range(min: usize, max: usize) -> Res<Vec<usize>> {
    if min < 2 || max < min {
        return usage(format!("ranker range {min}..={max} must start at 2 or more and be non-empty"));
    }
    Ok((min..=max).collect())
}

fn sweep_outputs(dir: &Path, stem: &'static str, rows: &[SweepRow], base: &SimConfig) -> Res<Done> {
    let summary = write_csv(dir, &format!("{stem}.csv"), &summarize(rows))?;
    let runs = write_csv(dir, &format!("{stem}_runs.csv"), rows)?;
    Ok(Done {
        dir: dir.to_path_buf(),
        stem,
        outputs: vec![summary, runs],
        seed: base.rng_seed,
        config: to_json(base),
        summary: None,
    })
}

pub(super) fn sweep_rankers(a: &SweepRankersArgs) -> Res<Done> {
    let ns = ranker_range(a.n_min, a.n_max)?;
    let base = base_config(&a.common, ns[0], a.length)?;
    let rows = sim::sweep_rankers(&base, &methods(&a.common, &Variant::DEFAULT_SET), &ns)?;
    sweep_outputs(&a.common.out, "sweep_rankers", &rows, &base)
}

pub(super) fn sweep_length(a: &SweepLengthArgs) -> Res<Done> {
    let ls = stepped(a.l_min, a.l_max, a.length_step, "length")?;
    let base = base_config(&a.common, a.rankers, ls[0])?;
    let rows = sim::sweep_length(&base, &methods(&a.common, &Variant::DEFAULT_SET), &ls)?;
    sweep_outputs(&a.common.out, "sweep_length", &rows, &base)
}

#[derive(Serialize)]
struct InsensitivityRow {
    axis: &'static str,
    method: String,
    n: usize,
    l: usize,
    runs: usize,
    insensitivity: f64,
}

pub(super) fn insensitivity(a: &InsensitivityArgs) -> Res<Done> {
    let variants = methods(
        &a.common,
        &[Variant::Gom(CreditFunction::Inverse), Variant::Gom(CreditFunction::Personalization)],
    );
    let mut base = base_config(&a.common, 3, 10)?;
    base.shuffle_inputs = !a.identical_inputs;
    let mut out = Vec::new();
    let mut push = |axis: &'static str, rows: Vec<SweepRow>| {
        out.extend(summarize(&rows).into_iter().map(|s| InsensitivityRow {
            axis,
            method: s.method,
            n: s.n,
            l: s.l,
            runs: s.runs,
            insensitivity: s.insensitivity,
        }))
    };
    if matches!(a.over, SweepAxis::Rankers | SweepAxis::Both) {
        push("rankers", sim::sweep_rankers(&base, &variants, &ranker_range(a.n_min, a.n_max)?)?);
    }
    if matches!(a.over, SweepAxis::Length | SweepAxis::Both) {
        push("length", sim::sweep_length(&base, &variants, &stepped(a.l_min, a.l_max, a.length_step, "length")?)?);
    }
    let path = write_csv(&a.common.out, "insensitivity.csv", &out)?;
    Ok(Done {
        dir: a.common.out.clone(),
        stem: "insensitivity",
        outputs: vec![path],
        seed: base.rng_seed,
        config: to_json(&base),
        summary: None,
    })
}

#[derive(Serialize)]
struct BiasSample {
    generation: usize,
    bias: f64,
}

#[derive(Serialize)]
struct BiasSummary {
    method: String,
    n: usize,
    l: usize,
    generations: usize,
    mean: f64,
    std: f64,
    median: f64,
    relative_spread: f64,
    bell_shaped: bool,
}

pub(super) fn bias(a: &BiasArgs) -> Res<Done> {
    if a.generations == 0 {
        return usage("--generations must be at least 1");
    }
    let variants = methods(&a.common, &[Variant::Gom(CreditFunction::Personalization)]);
    let [variant] = variants[..] else {
        return usage("bias takes exactly one method");
    };
    let cfg = variant.apply(&base_config(&a.common, a.rankers, a.length)?);
    let dist = measure_bias_distribution(&cfg, a.generations)?;
    let samples: Vec<BiasSample> =
        dist.samples.iter().enumerate().map(|(generation, &bias)| BiasSample { generation, bias }).collect();
    let summary = BiasSummary {
        method: variant.label(),
        n: cfg.rankers,
        l: cfg.length,
        generations: a.generations,
        mean: dist.mean,
        std: dist.std,
        median: dist.median,
        relative_spread: dist.relative_spread(),
        bell_shaped: dist.bell_shaped(),
    };
    let dir = &a.common.out;
    let outputs = vec![
        write_csv(dir, "bias_samples.csv", &samples)?,
        write_csv(dir, "bias_summary.csv", std::slice::from_ref(&summary))?,
    ];
    Ok(Done { dir: dir.clone(), stem: "bias", outputs, seed: cfg.rng_seed, config: to_json(&cfg), summary: to_json(&summary) })
}

pub(super) fn alpha_study(a: &AlphaArgs) -> Res<Done> {
    if a.alphas.is_empty() || a.alphas.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return usage("--alphas must be non-negative numbers");
    }
    let variants = methods(&a.common, &[Variant::Gom(CreditFunction::Personalization)]);
    let [variant] = variants[..] else {
        return usage("alpha-study takes exactly one method");
    };
    let cfg = variant.apply(&base_config(&a.common, a.rankers, a.length)?);
    let (table, rows) = alpha_sensitivity(&cfg, &a.alphas)?;
    let dir = &a.common.out;
    let outputs = vec![write_csv(dir, "alpha_study.csv", &table)?, write_csv(dir, "alpha_study_runs.csv", &rows)?];
    Ok(Done { dir: dir.clone(), stem: "alpha_study", outputs, seed: cfg.rng_seed, config: to_json(&cfg), summary: None })
}

#[derive(Serialize)]
struct PvalueRow {
    population: &'static str,
    #[serde(rename = "N")]
    users: usize,
    method: &'static str,
    mean_p: f64,
}

pub(super) fn pvalue_compare(a: &PvalueArgs) -> Res<Done> {
    let population = PopulationConfig {
        users: a.users,
        algorithms: a.algorithms,
        effect: a.effect,
        heterogeneity: a.heterogeneity,
        noise: a.noise,
        activity_shape: a.activity_shape,
        group_bias: a.group_bias,
        rng_seed: a.seed,
        ..PopulationConfig::default()
    };
    population.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if a.replicates == 0 {
        return usage("--replicates must be at least 1");
    }
    let counts = a.user_counts.clone().unwrap_or_else(default_user_counts);
    let boot = BootstrapConfig { replicates: a.replicates, rng_seed: a.seed };
    let cmp = compare_pvalues(&population, &counts, &boot).map_err(|e| match e {
        Error::NotEnoughUsers { .. } | Error::TooFewSamples { .. } => CliError::Usage(e.to_string()),
        e => CliError::Runtime(e),
    })?;
    let rows: Vec<PvalueRow> = cmp
        .multileaving
        .iter()
        .zip(&cmp.ab_test)
        .flat_map(|(m, ab)| {
            [("multileaving", m), ("ab_test", ab)].map(|(method, p)| PvalueRow {
                population: "synthetic",
                users: p.users,
                method,
                mean_p: p.mean_p,
            })
        })
        .collect();
    let path = write_csv(&a.out, "pvalue_compare.csv", &rows)?;
    let summary = serde_json::json!({
        "population": "synthetic",
        "crossing_0_05": {
            "multileaving": cmp.crossing(TestMode::Paired, 0.05),
            "ab_test": cmp.crossing(TestMode::Unpaired, 0.05),
        },
    });
    Ok(Done {
        dir: a.out.clone(),
        stem: "pvalue_compare",
        outputs: vec![path],
        seed: a.seed,
        config: to_json(&population),
        summary: Some(summary),
    })
}

pub(super) fn serve(a: &ServeArgs) -> Res<()> {
    if a.candidates == 0 {
        return usage("--candidates must be at least 1");
    }
    let config = ServiceConfig {
        listen: a.listen,
        log_path: a.log_path.clone(),
        default_method: a.default_method,
        default_credit: a.default_credit,
        candidates: a.candidates,
        session_ttl: Duration::from_secs(a.session_ttl_secs),
        token: a.token.clone(),
        ..ServiceConfig::default()
    };
    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .try_init();
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(Error::from)?;
    runtime.block_on(service::serve(config))?;
    Ok(())
}
