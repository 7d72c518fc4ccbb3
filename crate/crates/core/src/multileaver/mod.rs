//! Output-ranking construction.
//!
//! Two methods are provided:
//!
//! - **Team-draft multileaving** ([`tdm_multileave`]): rankers take turns, in a
//!   fresh random order each round, appending their best item not yet shown.
//!   Each click credits the ranker that contributed the clicked item.
//! - **Greedy optimized multileaving** ([`gom_multileave`]): draw a small pool
//!   of prefix-respecting candidate rankings and keep the one minimizing
//!   `alpha * Σ_r λ_r + σ²`, where σ² is the insensitivity and λ_r the bias
//!   at depth `r` (see [`insensitivity`] and [`bias_profile`]).
//!
//! All constructions are deterministic given their seed.

mod compiled;
pub(crate) mod engine;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{CreditFunction, InputRankingSet, ItemId, Ranking};
pub(crate) use engine::Engine;

/// Click-probability weight `f(i)` applied to position `i` inside σ².
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionWeight {
    /// `f(i) = 1 / i`.
    #[default]
    Reciprocal,
    /// Explicit weights for positions `1..=len`; deeper positions reuse the last entry.
    Table(Vec<f64>),
}

impl PositionWeight {
    /// Validated custom table: entries must be positive and non-increasing.
    pub fn table(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidConfig("position weight table is empty".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidConfig("position weights must be positive".into()));
        }
        if weights.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidConfig("position weights must be non-increasing".into()));
        }
        Ok(PositionWeight::Table(weights))
    }

    /// Weight of 1-based position `i`.
    pub fn weight(&self, i: usize) -> f64 {
        match self {
            PositionWeight::Reciprocal => 1.0 / i as f64,
            PositionWeight::Table(t) => t[(i - 1).min(t.len() - 1)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Tdm,
    Gom,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Tdm => "tdm",
            Method::Gom => "gom",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tdm" => Ok(Method::Tdm),
            "gom" => Ok(Method::Gom),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

/// Parameters of a GOM construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GomConfig {
    /// Number of candidates drawn before deduplication (`m`).
    pub candidate_count: usize,
    /// Weight of the bias term.
    pub alpha: f64,
    pub credit: CreditFunction,
    pub output_length: usize,
    pub rng_seed: u64,
    #[serde(default)]
    pub weight: PositionWeight,
}

impl Default for GomConfig {
    fn default() -> Self {
        GomConfig {
            candidate_count: 10,
            alpha: 0.0,
            credit: CreditFunction::Personalization,
            output_length: 10,
            rng_seed: 0,
            weight: PositionWeight::Reciprocal,
        }
    }
}

impl GomConfig {
    pub fn validate(&self) -> Result<()> {
        if self.candidate_count == 0 {
            return Err(Error::InvalidConfig("candidate_count must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidConfig("alpha must be a non-negative number".into()));
        }
        Ok(())
    }
}

/// A constructed output ranking and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultileaveOutcome {
    pub output: Ranking,
    pub method: Method,
    /// TDM only: contributing ranker for each output position.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teams: Option<Vec<usize>>,
    /// GOM only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_value: Option<f64>,
    /// GOM only: distinct candidates scored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates_evaluated: Option<usize>,
}

impl MultileaveOutcome {
    /// TDM team that contributed `item`.
    pub fn team_of(&self, item: ItemId) -> Option<usize> {
        let pos = self.output.rank_of(item)?;
        self.teams.as_ref().map(|t| t[pos - 1])
    }

    /// Per-ranker team sizes (TDM only).
    pub fn team_sizes(&self, n: usize) -> Option<Vec<usize>> {
        self.teams.as_ref().map(|teams| {
            let mut sizes = vec![0; n];
            for &t in teams {
                sizes[t] += 1;
            }
            sizes
        })
    }
}

/// Team-draft multileaving of `inputs` into a ranking of `length` items.
pub fn tdm_multileave(inputs: &InputRankingSet, length: usize, rng_seed: u64) -> Result<MultileaveOutcome> {
    let mut engine = Engine::default();
    engine.load(inputs);
    engine.check_length(length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (mut output, mut teams) = (Vec::new(), Vec::new());
    engine.tdm(length, &mut rng, &mut output, &mut teams);
    Ok(MultileaveOutcome {
        output: engine.to_ranking(&output),
        method: Method::Tdm,
        teams: Some(teams.into_iter().map(|t| t as usize).collect()),
        objective_value: None,
        candidates_evaluated: None,
    })
}

/// Distinct prefix-respecting candidates from `count` random draws, in generation order.
pub fn candidate_rankings(
    inputs: &InputRankingSet,
    length: usize,
    count: usize,
    rng_seed: u64,
) -> Result<Vec<Ranking>> {
    let mut engine = Engine::default();
    engine.load(inputs);
    engine.check_length(length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let distinct = engine.generate_candidates(length, count, &mut rng);
    Ok((0..distinct).map(|k| engine.to_ranking(engine.candidate(k))).collect())
}

/// Greedy optimized multileaving.
///
/// Ties on the objective keep the earliest generated candidate.
pub fn gom_multileave(inputs: &InputRankingSet, config: &GomConfig) -> Result<MultileaveOutcome> {
    config.validate()?;
    let mut engine = Engine::default();
    engine.load(inputs);
    engine.check_length(config.output_length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let sel = engine.gom(
        config.output_length,
        config.candidate_count,
        config.alpha,
        config.credit,
        &config.weight,
        &mut rng,
    );
    Ok(MultileaveOutcome {
        output: engine.to_ranking(engine.candidate(sel.index)),
        method: Method::Gom,
        teams: None,
        objective_value: Some(sel.objective),
        candidates_evaluated: Some(sel.distinct),
    })
}

/// Insensitivity σ² of `output`: the spread of the position-weighted credit
/// sums across input rankings.
pub fn insensitivity(
    output: &Ranking,
    inputs: &InputRankingSet,
    credit: CreditFunction,
    weight: &PositionWeight,
) -> f64 {
    insensitivity_with_mean(output, inputs, credit, weight).0
}

/// `σ² / μ²`, the scale-free insensitivity used in reports. Zero when σ² is zero.
pub fn normalized_insensitivity(
    output: &Ranking,
    inputs: &InputRankingSet,
    credit: CreditFunction,
    weight: &PositionWeight,
) -> f64 {
    let (sigma2, mean) = insensitivity_with_mean(output, inputs, credit, weight);
    normalize(sigma2, mean)
}

pub(crate) fn normalize(sigma2: f64, mean: f64) -> f64 {
    if sigma2 == 0.0 {
        0.0
    } else {
        sigma2 / (mean * mean)
    }
}

fn insensitivity_with_mean(
    output: &Ranking,
    inputs: &InputRankingSet,
    credit: CreditFunction,
    weight: &PositionWeight,
) -> (f64, f64) {
    let n = inputs.len();
    let mut engine = Engine::default();
    engine.load(inputs);
    let rows = engine.output_rows(output, credit, inputs);
    let weights: Vec<f64> = (1..=output.len()).map(|i| weight.weight(i)).collect();
    let mut sums = Vec::new();
    let sigma2 = engine::insensitivity_of(rows.chunks_exact(n), &weights, n, &mut sums);
    (sigma2, sums.iter().sum::<f64>() / n as f64)
}

/// λ_r for r = 1..=|output|: the largest gap between any two inputs' prefix
/// credit sums over the top `r` output items.
pub fn bias_profile(output: &Ranking, inputs: &InputRankingSet, credit: CreditFunction) -> Vec<f64> {
    let n = inputs.len();
    let mut engine = Engine::default();
    engine.load(inputs);
    let rows = engine.output_rows(output, credit, inputs);
    let mut out = Vec::with_capacity(output.len());
    engine::each_lambda(rows.chunks_exact(n), n, &mut Vec::new(), |l| out.push(l));
    out
}

/// `alpha * Σ_r λ_r + σ²` for an arbitrary output ranking.
pub fn objective(
    output: &Ranking,
    inputs: &InputRankingSet,
    credit: CreditFunction,
    alpha: f64,
    weight: &PositionWeight,
) -> f64 {
    let sigma2 = insensitivity(output, inputs, credit, weight);
    if alpha == 0.0 {
        return sigma2;
    }
    sigma2 + alpha * bias_profile(output, inputs, credit).iter().sum::<f64>()
}

#[cfg(test)]
mod tests;
