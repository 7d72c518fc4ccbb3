//! Synthetic user population for comparing multileaving against A/B testing.
//!
//! Users differ in activity (impressions, heavy-tailed) and in baseline
//! engagement. Algorithm `k` adds `k * effect` to every score. Multileaving
//! observes all algorithms on the same user, so the baseline cancels in a
//! paired test; an A/B test sees each user under one arm only.

use rand::Rng;
use rand_distr::{Distribution, Normal, Pareto};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::stats::{bootstrap_pvalue_curve, BootstrapConfig, CurvePoint, TestMode, UserRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub users: usize,
    pub algorithms: usize,
    /// Score gap between consecutive algorithms.
    pub effect: f64,
    /// Standard deviation of per-user baseline engagement.
    pub heterogeneity: f64,
    /// Per-impression noise standard deviation.
    pub noise: f64,
    /// Pareto shape of the impressions-per-user distribution.
    pub activity_shape: f64,
    pub max_impressions: usize,
    /// Baseline shift per unit of log-activity (active users engage more).
    pub activity_coupling: f64,
    /// Arm that preferentially receives inactive users in the A/B split.
    #[serde(default)]
    pub group_bias: Option<usize>,
    pub rng_seed: u64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            users: 20_000,
            algorithms: 5,
            effect: 0.1,
            heterogeneity: 1.0,
            noise: 1.0,
            activity_shape: 1.5,
            max_impressions: 500,
            activity_coupling: 0.1,
            group_bias: None,
            rng_seed: 0,
        }
    }
}

impl PopulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms < 2 {
            return Err(Error::InvalidConfig("at least two algorithms are needed".into()));
        }
        if self.users < 2 * self.algorithms {
            return Err(Error::InvalidConfig("population is too small".into()));
        }
        if !(self.heterogeneity >= 0.0 && self.noise > 0.0 && self.activity_shape > 0.0) {
            return Err(Error::InvalidConfig("heterogeneity, noise and activity shape must be positive".into()));
        }
        if self.group_bias.is_some_and(|g| g >= self.algorithms) {
            return Err(Error::InvalidConfig("group-bias arm is out of range".into()));
        }
        Ok(())
    }
}

/// Draws the population. Deterministic given `config.rng_seed`.
pub fn generate_population(config: &PopulationConfig) -> Result<Vec<UserRecord>> {
    config.validate()?;
    let mut rng = seed::stream(config.rng_seed, &[0x5eed]);
    let activity = Pareto::new(1.0, config.activity_shape).expect("validated shape");
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let k = config.algorithms;
    Ok((0..config.users)
        .map(|_| {
            let impressions = (activity.sample(&mut rng).floor() as usize).clamp(1, config.max_impressions);
            let baseline = config.heterogeneity * std_normal.sample(&mut rng)
                + config.activity_coupling * (impressions as f64).ln();
            let per_user_noise = config.noise / (impressions as f64).sqrt();
            let multileave_scores = (0..k)
                .map(|a| baseline + config.effect * a as f64 + per_user_noise * std_normal.sample(&mut rng))
                .collect();
            let ab_arm = match config.group_bias {
                Some(g) if impressions == 1 && rng.random_bool(0.25) => g,
                _ => rng.random_range(0..k),
            };
            let ab_score = baseline + config.effect * ab_arm as f64 + per_user_noise * std_normal.sample(&mut rng);
            UserRecord { multileave_scores, ab_arm, ab_score }
        })
        .collect())
}

/// Both p-value curves for one population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueComparison {
    pub multileaving: Vec<CurvePoint>,
    pub ab_test: Vec<CurvePoint>,
}

impl PValueComparison {
    pub fn crossing(&self, mode: TestMode, threshold: f64) -> Option<usize> {
        let curve = match mode {
            TestMode::Paired => &self.multileaving,
            TestMode::Unpaired => &self.ab_test,
        };
        first_below(curve, threshold)
    }
}

/// Smallest user count whose mean p-value is below `threshold`.
pub fn first_below(curve: &[CurvePoint], threshold: f64) -> Option<usize> {
    curve.iter().find(|p| p.mean_p < threshold).map(|p| p.users)
}

pub fn compare_pvalues(
    population: &PopulationConfig,
    user_counts: &[usize],
    bootstrap: &BootstrapConfig,
) -> Result<PValueComparison> {
    let records = generate_population(population)?;
    let paired_cfg = BootstrapConfig { rng_seed: seed::derive_seed(bootstrap.rng_seed, &[0]), ..bootstrap.clone() };
    let ab_cfg = BootstrapConfig { rng_seed: seed::derive_seed(bootstrap.rng_seed, &[1]), ..bootstrap.clone() };
    Ok(PValueComparison {
        multileaving: bootstrap_pvalue_curve(&records, user_counts, TestMode::Paired, &paired_cfg)?,
        ab_test: bootstrap_pvalue_curve(&records, user_counts, TestMode::Unpaired, &ab_cfg)?,
    })
}

/// Default user-count grid, roughly log-spaced.
pub fn default_user_counts() -> Vec<usize> {
    vec![20, 50, 100, 200, 300, 500, 750, 1000, 1500, 2000, 3000, 4000, 5000, 6000]
}
