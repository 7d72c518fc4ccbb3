//! p-value convergence curves by bootstrap subsampling of users.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ttest::{paired_t_test, unpaired_t_test};
use crate::error::{Error, Result};
use crate::seed;

/// What one user contributed to the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    /// Per-algorithm multileaving score (mean credit per impression).
    pub multileave_scores: Vec<f64>,
    /// Algorithm this user was assigned to in the A/B split.
    pub ab_arm: usize,
    /// Metric observed for the user under `ab_arm`.
    pub ab_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMode {
    /// Within-user comparison of multileaving scores (paired t-test).
    Paired,
    /// Between-group comparison of A/B arms (Welch t-test), `N/2` users per arm.
    Unpaired,
}

impl TestMode {
    pub fn label(self) -> &'static str {
        match self {
            TestMode::Paired => "multileaving",
            TestMode::Unpaired => "ab_test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Bootstrap replicates drawn per user count.
    pub replicates: usize,
    pub rng_seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { replicates: 50, rng_seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub users: usize,
    pub mean_p: f64,
}

/// Mean p-value over all algorithm pairs and replicates, for each user count
/// `N` in `user_counts`.
///
/// Each replicate draws users without replacement from `records`: `N` users
/// in paired mode, `N/2` users from each arm's assignees in unpaired mode.
pub fn bootstrap_pvalue_curve(
    records: &[UserRecord],
    user_counts: &[usize],
    mode: TestMode,
    config: &BootstrapConfig,
) -> Result<Vec<CurvePoint>> {
    if config.replicates == 0 {
        return Err(Error::InvalidConfig("replicates must be at least 1".into()));
    }
    let k = records.first().map_or(0, |r| r.multileave_scores.len());
    if k < 2 {
        return Err(Error::InvalidConfig("records must cover at least two algorithms".into()));
    }
    if let Some(bad) = records.iter().find(|r| r.multileave_scores.len() != k || r.ab_arm >= k) {
        return Err(Error::LengthMismatch(bad.multileave_scores.len(), k));
    }
    let mut arms: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, r) in records.iter().enumerate() {
        arms[r.ab_arm].push(i);
    }
    for &n in user_counts {
        match mode {
            TestMode::Paired if n > records.len() => {
                return Err(Error::NotEnoughUsers { requested: n, available: records.len() })
            }
            TestMode::Paired if n < 2 => return Err(Error::TooFewSamples { needed: 2, got: n }),
            TestMode::Unpaired => {
                let smallest = arms.iter().map(Vec::len).min().unwrap_or(0);
                if n / 2 > smallest {
                    return Err(Error::NotEnoughUsers { requested: n / 2, available: smallest });
                }
                if n / 2 < 2 {
                    return Err(Error::TooFewSamples { needed: 4, got: n });
                }
            }
            _ => {}
        }
    }

    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|p| (p + 1..k).map(move |q| (p, q))).collect();
    user_counts
        .par_iter()
        .enumerate()
        .map(|(idx, &n)| {
            let mut rng = seed::stream(config.rng_seed, &[idx as u64, n as u64]);
            let mut total = 0.0;
            let mut a = Vec::new();
            let mut b = Vec::new();
            for _ in 0..config.replicates {
                for &(p, q) in &pairs {
                    a.clear();
                    b.clear();
                    let t = match mode {
                        TestMode::Paired => {
                            for i in index::sample(&mut rng, records.len(), n) {
                                let r = &records[i];
                                a.push(r.multileave_scores[p]);
                                b.push(r.multileave_scores[q]);
                            }
                            paired_t_test(&a, &b)?
                        }
                        TestMode::Unpaired => {
                            let half = n / 2;
                            for i in index::sample(&mut rng, arms[p].len(), half) {
                                a.push(records[arms[p][i]].ab_score);
                            }
                            for i in index::sample(&mut rng, arms[q].len(), half) {
                                b.push(records[arms[q][i]].ab_score);
                            }
                            unpaired_t_test(&a, &b)?
                        }
                    };
                    total += t.p_value;
                }
            }
            Ok(CurvePoint { users: n, mean_p: total / (config.replicates * pairs.len()) as f64 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn users(scores: impl Fn(usize) -> (Vec<f64>, usize, f64), count: usize) -> Vec<UserRecord> {
        (0..count)
            .map(|i| {
                let (multileave_scores, ab_arm, ab_score) = scores(i);
                UserRecord { multileave_scores, ab_arm, ab_score }
            })
            .collect()
    }

    #[test]
    fn identical_records_give_p_one() {
        let recs = users(|i| (vec![0.5, 0.5, 0.5], i % 3, 0.5), 60);
        let cfg = BootstrapConfig { replicates: 10, rng_seed: 1 };
        for mode in [TestMode::Paired, TestMode::Unpaired] {
            let curve = bootstrap_pvalue_curve(&recs, &[4, 10, 40], mode, &cfg).unwrap();
            assert!(curve.iter().all(|p| p.mean_p == 1.0), "{mode:?} {curve:?}");
        }
    }

    #[test]
    fn strong_preference_detected_early() {
        let recs = users(|i| (vec![1.0, 0.0], i % 2, 0.0), 40);
        let curve = bootstrap_pvalue_curve(&recs, &[4, 8], TestMode::Paired, &BootstrapConfig::default()).unwrap();
        assert!(curve[0].mean_p < 0.05);
    }

    #[test]
    fn rejects_oversized_counts() {
        let recs = users(|i| (vec![1.0, 0.0], i % 2, 0.0), 10);
        let cfg = BootstrapConfig::default();
        assert!(matches!(
            bootstrap_pvalue_curve(&recs, &[11], TestMode::Paired, &cfg),
            Err(Error::NotEnoughUsers { .. })
        ));
        assert!(matches!(
            bootstrap_pvalue_curve(&recs, &[12], TestMode::Unpaired, &cfg),
            Err(Error::NotEnoughUsers { .. })
        ));
    }

    #[test]
    fn deterministic_under_seed() {
        let recs = users(|i| (vec![(i % 7) as f64, (i % 5) as f64], i % 2, (i % 3) as f64), 100);
        let cfg = BootstrapConfig { replicates: 20, rng_seed: 42 };
        let a = bootstrap_pvalue_curve(&recs, &[10, 50, 100], TestMode::Paired, &cfg).unwrap();
        let b = bootstrap_pvalue_curve(&recs, &[10, 50, 100], TestMode::Paired, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
