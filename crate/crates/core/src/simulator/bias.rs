use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Kernel, SimConfig};
use crate::error::Result;
use crate::seed;

/// Distribution of the per-ranking bias statistic over repeated generations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasDistribution {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

impl BiasDistribution {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let k = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / k;
        let std = (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / k).sqrt();
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 0 { 0.5 * (sorted[mid - 1] + sorted[mid]) } else { sorted[mid] };
        BiasDistribution { samples, mean, std, median }
    }

    /// Rough symmetry check: mean and median within a quarter standard deviation.
    pub fn bell_shaped(&self) -> bool {
        (self.mean - self.median).abs() < 0.25 * self.std || self.std == 0.0
    }

    /// Coefficient of variation; zero for a degenerate distribution.
    pub fn relative_spread(&self) -> f64 {
        if self.std == 0.0 {
            0.0
        } else {
            self.std / self.mean
        }
    }
}

/// Builds `generations` rankings with `config`'s method on fresh random
/// inputs and records the bias statistic of each: mean λ_r over depths,
/// divided by `n * l`.
pub fn measure_bias_distribution(config: &SimConfig, generations: usize) -> Result<BiasDistribution> {
    config.validate()?;
    let samples: Vec<f64> = (0..generations)
        .into_par_iter()
        .map_init(Kernel::default, |k, g| {
            let mut env = seed::stream(config.rng_seed, &[g as u64, 0]);
            let mut construction = seed::stream(config.rng_seed, &[g as u64, 1]);
            k.draw_inputs(config, &mut env);
            k.construct(config, &mut construction);
            k.bias_statistic(config)
        })
        .collect();
    Ok(BiasDistribution::from_samples(samples))
}
