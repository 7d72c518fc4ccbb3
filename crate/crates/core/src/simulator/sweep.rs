use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_once, Kernel, RunRecord, SimConfig, SimResult, Variant};
use crate::error::Result;
use crate::seed::derive_seed;

/// One CSV row: a single run of one variant at one parameter setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: String,
    pub credit: String,
    pub n: usize,
    pub l: usize,
    pub alpha: f64,
    pub run: usize,
    pub accuracy: f64,
    pub insensitivity: f64,
    pub bias_mean: f64,
    pub bias_std: f64,
    pub seed: u64,
}

/// Per-(variant, setting) averages over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub n: usize,
    pub l: usize,
    pub alpha: f64,
    pub runs: usize,
    pub accuracy: f64,
    pub accuracy_std: f64,
    pub insensitivity: f64,
    pub bias_mean: f64,
    pub bias_std: f64,
}

/// Settings share seeds across variants (and α values) so that every method
/// sees the same inputs and clicks.
fn setting(base: &SimConfig, variant: Variant, n: usize, l: usize) -> SimConfig {
    let mut c = variant.apply(base);
    c.rankers = n;
    c.length = l;
    c.rng_seed = derive_seed(base.rng_seed, &[n as u64, l as u64]);
    c
}

fn run_grid(configs: Vec<SimConfig>) -> Result<Vec<SweepRow>> {
    for c in &configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, usize)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| (0..c.runs).map(move |r| (i, r)))
        .collect();
    let records: Vec<RunRecord> = jobs
        .par_iter()
        .map_init(Kernel::default, |k, &(i, r)| run_once(k, &configs[i], r))
        .collect();
    Ok(jobs
        .iter()
        .zip(records)
        .map(|(&(i, _), rec)| {
            let c = &configs[i];
            SweepRow {
                method: c.variant().label(),
                credit: c.credit.name().to_string(),
                n: c.rankers,
                l: c.length,
                alpha: c.alpha,
                run: rec.run,
                accuracy: rec.accuracy,
                insensitivity: rec.insensitivity,
                bias_mean: rec.bias_mean,
                bias_std: rec.bias_std,
                seed: rec.seed,
            }
        })
        .collect())
}

/// Accuracy as the number of rankers varies, at `base.length`.
pub fn sweep_rankers(base: &SimConfig, variants: &[Variant], n_values: &[usize]) -> Result<Vec<SweepRow>> {
    let configs = n_values
        .iter()
        .flat_map(|&n| variants.iter().map(move |&v| setting(base, v, n, base.length)))
        .collect();
    run_grid(configs)
}

/// Accuracy as the ranking length varies, at `base.rankers`.
pub fn sweep_length(base: &SimConfig, variants: &[Variant], l_values: &[usize]) -> Result<Vec<SweepRow>> {
    let configs = l_values
        .iter()
        .flat_map(|&l| variants.iter().map(move |&v| setting(base, v, base.rankers, l)))
        .collect();
    run_grid(configs)
}

/// Averages rows per (method, n, l, alpha), keeping first-seen order.
pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut groups: indexmap::IndexMap<(String, usize, usize, u64), Vec<&SweepRow>> = indexmap::IndexMap::new();
    for r in rows {
        groups.entry((r.method.clone(), r.n, r.l, r.alpha.to_bits())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((method, n, l, alpha), rs)| {
            let k = rs.len() as f64;
            let accuracy = rs.iter().map(|r| r.accuracy).sum::<f64>() / k;
            let var = rs.iter().map(|r| (r.accuracy - accuracy).powi(2)).sum::<f64>() / k;
            let bias_mean = rs.iter().map(|r| r.bias_mean).sum::<f64>() / k;
            let second = rs.iter().map(|r| r.bias_std.powi(2) + r.bias_mean.powi(2)).sum::<f64>() / k;
            SummaryRow {
                method,
                n,
                l,
                alpha: f64::from_bits(alpha),
                runs: rs.len(),
                accuracy,
                accuracy_std: var.sqrt(),
                insensitivity: rs.iter().map(|r| r.insensitivity).sum::<f64>() / k,
                bias_mean,
                bias_std: (second - bias_mean * bias_mean).max(0.0).sqrt(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub accuracy: f64,
    pub insensitivity: f64,
    pub bias_std: f64,
}

/// Reruns `base` for each α, with identical seeds.
pub fn alpha_sensitivity(base: &SimConfig, alphas: &[f64]) -> Result<(Vec<AlphaRow>, Vec<SweepRow>)> {
    let configs: Vec<SimConfig> = alphas
        .iter()
        .map(|&alpha| {
            let mut c = setting(base, base.variant(), base.rankers, base.length);
            c.alpha = alpha;
            c
        })
        .collect();
    let rows = run_grid(configs)?;
    let table = alphas
        .iter()
        .map(|&alpha| {
            let runs: Vec<RunRecord> = rows
                .iter()
                .filter(|r| r.alpha.to_bits() == alpha.to_bits())
                .map(|r| RunRecord {
                    run: r.run,
                    seed: r.seed,
                    accuracy: r.accuracy,
                    insensitivity: r.insensitivity,
                    bias_mean: r.bias_mean,
                    bias_std: r.bias_std,
                    rankings: base.numeval * base.numclick,
                })
                .collect();
            let res = SimResult::from_runs(runs);
            AlphaRow { alpha, accuracy: res.accuracy, insensitivity: res.insensitivity, bias_std: res.bias_std }
        })
        .collect();
    Ok((table, rows))
}
