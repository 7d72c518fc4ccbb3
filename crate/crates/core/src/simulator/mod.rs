//! Offline click simulation in the personalized setting.
//!
//! Each evaluation round picks a preferred ranker `r`. Every click iteration
//! then draws fresh inputs (independent shuffles of a common random ranking of
//! `l` items), multileaves them, and clicks one displayed item taken from the
//! top `x%` of `I_r`. After `numclick` clicks the preferred ranker scores one
//! win for every other ranker it strictly out-credits, and accuracy is
//! `wins / (numeval * (n - 1))`.

mod bias;
pub mod population;
mod sweep;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multileaver::{normalize, Engine, Method, PositionWeight};
use crate::ranking::{CreditFunction, ItemId};
use crate::seed;
use crate::stats::{strict_wins, CreditVector};

pub use bias::{measure_bias_distribution, BiasDistribution};
pub use sweep::{
    alpha_sensitivity, summarize, sweep_length, sweep_rankers, AlphaRow, SummaryRow, SweepRow,
};

/// A multileaving method together with its credit function, e.g. `GOM-P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Tdm,
    Gom(CreditFunction),
}

impl Variant {
    pub const DEFAULT_SET: [Variant; 3] = [
        Variant::Tdm,
        Variant::Gom(CreditFunction::Inverse),
        Variant::Gom(CreditFunction::Personalization),
    ];

    pub fn label(self) -> String {
        match self {
            Variant::Tdm => "TDM".to_string(),
            Variant::Gom(c) => format!("GOM-{}", c.tag()),
        }
    }

    pub fn method(self) -> Method {
        match self {
            Variant::Tdm => Method::Tdm,
            Variant::Gom(_) => Method::Gom,
        }
    }

    /// Applies this variant to `config`. TDM keeps the config's credit
    /// function for its insensitivity and bias statistics.
    pub fn apply(self, config: &SimConfig) -> SimConfig {
        let mut c = config.clone();
        c.method = self.method();
        if let Variant::Gom(credit) = self {
            c.credit = credit;
        }
        c
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        match up.as_str() {
            "TDM" => Ok(Variant::Tdm),
            _ => match up.strip_prefix("GOM-") {
                Some(tag) => Ok(Variant::Gom(tag.parse()?)),
                None => Err(Error::UnknownMethod(s.to_string())),
            },
        }
    }
}

/// Parameters of the click simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of rankers `n`.
    pub rankers: usize,
    /// Ranking length `l`; also the size of each round's item universe.
    pub length: usize,
    pub numeval: usize,
    pub numclick: usize,
    /// Clicks come from the top `x` percent of the preferred ranking.
    pub click_bias_percent: f64,
    pub method: Method,
    pub credit: CreditFunction,
    /// GOM candidate pool size `m`.
    pub candidates: usize,
    pub alpha: f64,
    #[serde(default)]
    pub weight: PositionWeight,
    pub rng_seed: u64,
    pub runs: usize,
    /// When false, every ranker receives the same ranking (degenerate test mode).
    #[serde(default = "yes")]
    pub shuffle_inputs: bool,
    /// Count wins as `|{k : credit[k] > credit[r]}|` (the rule as printed)
    /// instead of `|{k != r : credit[r] > credit[k]}|`.
    #[serde(default)]
    pub literal_win_rule: bool,
}

fn yes() -> bool {
    true
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            rankers: 3,
            length: 10,
            numeval: 100,
            numclick: 100,
            click_bias_percent: 80.0,
            method: Method::Gom,
            credit: CreditFunction::Personalization,
            candidates: 10,
            alpha: 0.0,
            weight: PositionWeight::Reciprocal,
            rng_seed: 0,
            runs: 100,
            shuffle_inputs: true,
            literal_win_rule: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.rankers < 2 {
            return bad("rankers must be at least 2");
        }
        if self.length == 0 {
            return bad("length must be at least 1");
        }
        if !(self.click_bias_percent > 0.0 && self.click_bias_percent <= 100.0) {
            return bad("click bias must be in (0, 100]");
        }
        if self.numeval == 0 || self.numclick == 0 || self.runs == 0 {
            return bad("numeval, numclick and runs must be at least 1");
        }
        if self.candidates == 0 {
            return bad("candidates must be at least 1");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad("alpha must be a non-negative number");
        }
        Ok(())
    }

    pub fn variant(&self) -> Variant {
        match self.method {
            Method::Tdm => Variant::Tdm,
            Method::Gom => Variant::Gom(self.credit),
        }
    }

    /// Number of top positions of the preferred ranking that can be clicked.
    pub fn click_depth(&self) -> usize {
        ((self.click_bias_percent * self.length as f64 / 100.0).ceil() as usize).clamp(1, self.length)
    }

    pub(crate) fn run_seed(&self, run: usize) -> u64 {
        seed::derive_seed(self.rng_seed, &[run as u64])
    }
}

/// What a creditor sees for one simulated click.
#[derive(Debug, Clone, Copy)]
pub struct ClickView<'a> {
    /// Ranker the simulated user prefers (ground truth, 0-based).
    pub preferred: usize,
    /// 1-based position of the click in the output ranking.
    pub position: usize,
    pub item: ItemId,
    /// TDM team that contributed the clicked item.
    pub team: Option<usize>,
    /// δ(item, I_j) for every ranker under the configured credit function.
    pub deltas: &'a [f64],
}

/// Turns a simulated click into per-ranker credit.
pub trait ClickCreditor: Sync {
    fn credit_click(&self, click: &ClickView<'_>, acc: &mut [f64]);
}

/// The configured method's own credit rule: team credit for TDM, δ otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct MethodCreditor;

impl ClickCreditor for MethodCreditor {
    fn credit_click(&self, click: &ClickView<'_>, acc: &mut [f64]) {
        match click.team {
            Some(t) => acc[t] += 1.0,
            None => {
                for (a, d) in acc.iter_mut().zip(click.deltas) {
                    *a += d;
                }
            }
        }
    }
}

/// One simulated click, for traces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClickTrace {
    pub position: usize,
    pub item: ItemId,
    pub normalized_insensitivity: f64,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundOutcome {
    pub credits: CreditVector,
    pub clicks: Vec<ClickTrace>,
}

/// Per-run aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub accuracy: f64,
    /// Mean σ²/μ² over every constructed ranking.
    pub insensitivity: f64,
    /// Mean and standard deviation of the per-ranking bias statistic.
    pub bias_mean: f64,
    pub bias_std: f64,
    pub rankings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Accuracy averaged over runs.
    pub accuracy: f64,
    pub insensitivity: f64,
    pub bias_mean: f64,
    /// Pooled standard deviation of the bias statistic across all runs.
    pub bias_std: f64,
    pub runs: Vec<RunRecord>,
}

impl SimResult {
    pub fn from_runs(runs: Vec<RunRecord>) -> Self {
        let k = runs.len() as f64;
        let accuracy = runs.iter().map(|r| r.accuracy).sum::<f64>() / k;
        let insensitivity = runs.iter().map(|r| r.insensitivity).sum::<f64>() / k;
        let (bias_mean, bias_std) = pooled(&runs);
        SimResult { accuracy, insensitivity, bias_mean, bias_std, runs }
    }

    /// Standard deviation of per-run accuracy.
    pub fn accuracy_std(&self) -> f64 {
        let k = self.runs.len() as f64;
        let var = self.runs.iter().map(|r| (r.accuracy - self.accuracy).powi(2)).sum::<f64>() / k;
        var.sqrt()
    }
}

fn pooled(runs: &[RunRecord]) -> (f64, f64) {
    let total: f64 = runs.iter().map(|r| r.rankings as f64).sum();
    let mean = runs.iter().map(|r| r.bias_mean * r.rankings as f64).sum::<f64>() / total;
    let second = runs
        .iter()
        .map(|r| (r.bias_std * r.bias_std + r.bias_mean * r.bias_mean) * r.rankings as f64)
        .sum::<f64>()
        / total;
    (mean, (second - mean * mean).max(0.0).sqrt())
}

/// Reusable per-thread buffers for the round kernel.
#[derive(Debug, Default)]
pub(crate) struct Kernel {
    pub(crate) engine: Engine,
    lists: Vec<Vec<ItemId>>,
    output: Vec<u32>,
    teams: Vec<u32>,
    shown: Vec<bool>,
    eligible: Vec<u32>,
}

/// Running sums of per-ranking statistics.
#[derive(Debug, Default, Clone, Copy)]
struct Moments {
    count: usize,
    insensitivity: f64,
    bias: f64,
    bias_sq: f64,
}

impl Kernel {
    /// Draws `n` independent shuffles of a random ranking of `length` items.
    pub(crate) fn draw_inputs<R: Rng>(&mut self, config: &SimConfig, rng: &mut R) {
        let (n, l) = (config.rankers, config.length);
        self.lists.resize_with(n, Vec::new);
        if config.shuffle_inputs {
            for list in &mut self.lists {
                list.clear();
                list.extend((0..l as u64).map(ItemId));
                list.shuffle(rng);
            }
        } else {
            let first = &mut self.lists[0];
            first.clear();
            first.extend((0..l as u64).map(ItemId));
            first.shuffle(rng);
            let base = first.clone();
            for list in &mut self.lists[1..] {
                list.clone_from(&base);
            }
        }
        self.lists.truncate(n);
        self.engine.load_lists(&self.lists);
    }

    /// Builds the output ranking for the loaded inputs.
    pub(crate) fn construct<R: Rng>(&mut self, config: &SimConfig, rng: &mut R) {
        match config.method {
            Method::Tdm => {
                self.engine.tdm(config.length, rng, &mut self.output, &mut self.teams);
            }
            Method::Gom => {
                let sel = self.engine.gom(
                    config.length,
                    config.candidates,
                    config.alpha,
                    config.credit,
                    &config.weight,
                    rng,
                );
                self.output.clear();
                self.output.extend_from_slice(self.engine.candidate(sel.index));
                self.teams.clear();
            }
        }
        self.engine.credits(config.credit);
    }

    /// Bias statistic of the current output: mean λ_r divided by `n * l`.
    pub(crate) fn bias_statistic(&mut self, config: &SimConfig) -> f64 {
        let output = std::mem::take(&mut self.output);
        let b = self.engine.bias_mean_idx(&output) / (config.rankers * config.length) as f64;
        self.output = output;
        b
    }

    fn output_stats(&mut self, config: &SimConfig) -> (f64, f64) {
        let output = std::mem::take(&mut self.output);
        let (sigma2, mean) = self.engine.insensitivity_idx(&output, &config.weight);
        self.output = output;
        (normalize(sigma2, mean), self.bias_statistic(config))
    }

    /// Picks the clicked output position (0-based).
    fn click<R: Rng>(&mut self, config: &SimConfig, preferred: usize, rng: &mut R) -> usize {
        let u_len = self.engine.compiled.union_len();
        self.shown.clear();
        self.shown.resize(u_len, false);
        for &u in &self.output {
            self.shown[u as usize] = true;
        }
        let seq = self.engine.compiled.seq(preferred);
        let depth = config.click_depth().min(seq.len());
        self.eligible.clear();
        self.eligible.extend(seq[..depth].iter().copied().filter(|&u| self.shown[u as usize]));
        let u = if self.eligible.is_empty() {
            self.output[rng.random_range(0..self.output.len())]
        } else {
            self.eligible[rng.random_range(0..self.eligible.len())]
        };
        self.output.iter().position(|&x| x == u).expect("clicked item is displayed")
    }

    /// One evaluation round: `numclick` fresh impressions, each with one click.
    fn round(
        &mut self,
        config: &SimConfig,
        creditor: &dyn ClickCreditor,
        preferred: usize,
        stream: (u64, u64),
        moments: &mut Moments,
        mut trace: Option<&mut Vec<ClickTrace>>,
    ) -> Vec<f64> {
        let mut env = seed::stream(stream.0, &[stream.1, 0]);
        let mut construction = seed::stream(stream.0, &[stream.1, 1]);
        let mut acc = vec![0.0; config.rankers];
        for _ in 0..config.numclick {
            self.draw_inputs(config, &mut env);
            self.construct(config, &mut construction);
            let (ins, bias) = self.output_stats(config);
            moments.count += 1;
            moments.insensitivity += ins;
            moments.bias += bias;
            moments.bias_sq += bias * bias;

            let pos = self.click(config, preferred, &mut env);
            let u = self.output[pos];
            let view = ClickView {
                preferred,
                position: pos + 1,
                item: self.engine.union_item(u),
                team: self.teams.get(pos).map(|&t| t as usize),
                deltas: self.engine.credit_row(u),
            };
            creditor.credit_click(&view, &mut acc);
            if let Some(t) = trace.as_deref_mut() {
                t.push(ClickTrace { position: pos + 1, item: view.item, normalized_insensitivity: ins, bias });
            }
        }
        acc
    }

    fn run(&mut self, config: &SimConfig, creditor: &dyn ClickCreditor, run: usize) -> RunRecord {
        let run_seed = config.run_seed(run);
        let mut picker = seed::stream(run_seed, &[u64::MAX]);
        let mut wins = 0usize;
        let mut moments = Moments::default();
        for round in 0..config.numeval {
            let preferred = picker.random_range(0..config.rankers);
            let acc = self.round(config, creditor, preferred, (run_seed, round as u64), &mut moments, None);
            wins += if config.literal_win_rule {
                acc.iter().filter(|&&c| c > acc[preferred]).count()
            } else {
                strict_wins(&acc, preferred)
            };
        }
        let count = moments.count as f64;
        let bias_mean = moments.bias / count;
        RunRecord {
            run,
            seed: run_seed,
            accuracy: wins as f64 / (config.numeval * (config.rankers - 1)) as f64,
            insensitivity: moments.insensitivity / count,
            bias_mean,
            bias_std: (moments.bias_sq / count - bias_mean * bias_mean).max(0.0).sqrt(),
            rankings: moments.count,
        }
    }
}

/// Runs one evaluation round of `run` with an explicit preferred ranker and
/// returns its credit vector and click trace.
pub fn simulate_round(config: &SimConfig, preferred: usize, run: usize, round: usize) -> Result<RoundOutcome> {
    simulate_round_with(config, &MethodCreditor, preferred, run, round)
}

pub fn simulate_round_with(
    config: &SimConfig,
    creditor: &dyn ClickCreditor,
    preferred: usize,
    run: usize,
    round: usize,
) -> Result<RoundOutcome> {
    config.validate()?;
    if preferred >= config.rankers {
        return Err(Error::InvalidConfig(format!(
            "preferred ranker {preferred} is out of range for {} rankers",
            config.rankers
        )));
    }
    let mut kernel = Kernel::default();
    let mut trace = Vec::with_capacity(config.numclick);
    let acc = kernel.round(
        config,
        creditor,
        preferred,
        (config.run_seed(run), round as u64),
        &mut Moments::default(),
        Some(&mut trace),
    );
    Ok(RoundOutcome { credits: CreditVector(acc), clicks: trace })
}

/// Accuracy, insensitivity and bias over `config.runs` independent repetitions.
pub fn simulate_accuracy(config: &SimConfig) -> Result<SimResult> {
    simulate_accuracy_with(config, &MethodCreditor)
}

pub fn simulate_accuracy_with(config: &SimConfig, creditor: &dyn ClickCreditor) -> Result<SimResult> {
    config.validate()?;
    let runs: Vec<RunRecord> = (0..config.runs)
        .into_par_iter()
        .map_init(Kernel::default, |k, run| k.run(config, creditor, run))
        .collect();
    Ok(SimResult::from_runs(runs))
}

pub(crate) fn run_once(kernel: &mut Kernel, config: &SimConfig, run: usize) -> RunRecord {
    kernel.run(config, &MethodCreditor, run)
}
