//! Credit aggregation, pairwise reports and significance tests.

mod bootstrap;
mod ttest;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multileaver::{Method, MultileaveOutcome};
use crate::ranking::{CreditFunction, InputRankingSet};

pub use bootstrap::{bootstrap_pvalue_curve, BootstrapConfig, CurvePoint, TestMode, UserRecord};
pub use ttest::{
    paired_t_test, regularized_incomplete_beta, student_t_cdf, two_sided_p, unpaired_t_test, TTest,
};

/// A click on a shown output ranking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickEvent {
    /// Session or simulation round the click belongs to.
    pub session: String,
    /// 1-based position within the output ranking.
    pub position: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_ms: Option<u64>,
}

impl ClickEvent {
    pub fn at(position: usize) -> Self {
        ClickEvent { session: String::new(), position, timestamp_ms: None }
    }
}

/// Accumulated credit per ranker.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CreditVector(pub Vec<f64>);

impl CreditVector {
    pub fn zeros(n: usize) -> Self {
        CreditVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn add(&mut self, other: &CreditVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
}

impl std::ops::Index<usize> for CreditVector {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// Adds the credit of one click to `acc`.
///
/// TDM outcomes credit the contributing team with 1. Other outcomes credit
/// every ranker with δ(clicked item, I_j) under `credit`; position weights are
/// not applied here.
pub fn aggregate_click(
    outcome: &MultileaveOutcome,
    inputs: &InputRankingSet,
    credit: CreditFunction,
    click: &ClickEvent,
    acc: &mut CreditVector,
) -> Result<()> {
    let len = outcome.output.len();
    let item = outcome
        .output
        .at(click.position)
        .ok_or(Error::PositionOutOfRange { position: click.position, len })?;
    if acc.len() != inputs.len() {
        return Err(Error::LengthMismatch(acc.len(), inputs.len()));
    }
    match (outcome.method, &outcome.teams) {
        (Method::Tdm, Some(teams)) => acc.0[teams[click.position - 1]] += 1.0,
        _ => {
            for (j, slot) in acc.0.iter_mut().enumerate() {
                *slot += credit.credit(item, j, inputs);
            }
        }
    }
    Ok(())
}

/// Rankers by descending credit, plus how many rankers a designated one strictly beats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WinnerSummary {
    pub order: Vec<usize>,
    pub strict_wins: usize,
}

/// Ties count for neither side. Order is stable for equal credit.
pub fn winner_set(acc: &CreditVector, designated: usize) -> WinnerSummary {
    let mut order: Vec<usize> = (0..acc.len()).collect();
    order.sort_by(|&a, &b| acc[b].total_cmp(&acc[a]));
    WinnerSummary { order, strict_wins: strict_wins(acc.as_slice(), designated) }
}

pub(crate) fn strict_wins(acc: &[f64], r: usize) -> usize {
    acc.iter().enumerate().filter(|&(k, &c)| k != r && acc[r] > c).count()
}

/// Antisymmetric matrix of credit differences, `entry(p, q) = acc[p] - acc[q]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseDifferenceTable {
    pub entries: Vec<Vec<f64>>,
}

impl PairwiseDifferenceTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row][col]
    }

    /// Writes the table as CSV with ranker names on the header row and first column.
    pub fn write_csv<W: Write>(&self, names: &[String], out: W) -> Result<()> {
        if names.len() != self.len() {
            return Err(Error::LengthMismatch(names.len(), self.len()));
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in names.iter().zip(&self.entries) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn pairwise_differences(acc: &CreditVector) -> PairwiseDifferenceTable {
    let v = acc.as_slice();
    let entries = v.iter().map(|&p| v.iter().map(|&q| p - q).collect()).collect();
    PairwiseDifferenceTable { entries }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::multileaver::{gom_multileave, tdm_multileave, GomConfig};
    use crate::ranking::{ItemId, Ranking};

    fn worked_inputs() -> InputRankingSet {
        let prefix: Vec<u64> = (1..=99).collect();
        let with = |tail: [u64; 3]| prefix.iter().copied().chain(tail).collect::<Vec<_>>();
        InputRankingSet::from_ids([with([100, 101, 102]), with([101, 102, 100]), with([102, 100, 101])])
            .unwrap()
    }

    fn gom_outcome(output: Ranking) -> MultileaveOutcome {
        MultileaveOutcome { output, method: Method::Gom, teams: None, objective_value: None, candidates_evaluated: None }
    }

    #[test]
    fn personalization_click_deltas() {
        let inputs = worked_inputs();
        let mut o: Vec<u64> = (1..=99).collect();
        o.extend([102, 101, 100]);
        let outcome = gom_outcome(Ranking::from_ids(o).unwrap());
        let pos = outcome.output.rank_of(ItemId(101)).unwrap();
        let mut acc = CreditVector::zeros(3);
        aggregate_click(&outcome, &inputs, CreditFunction::Personalization, &ClickEvent::at(pos), &mut acc)
            .unwrap();
        assert_eq!(acc.0, vec![-2.0, -1.0, -3.0]);
    }

    #[test]
    fn tdm_click_credits_team() {
        let inputs = InputRankingSet::from_ids([[1, 2], [3, 4], [5, 6]]).unwrap();
        let outcome = tdm_multileave(&inputs, 3, 4).unwrap();
        let pos = outcome.teams.as_ref().unwrap().iter().position(|&t| t == 1).unwrap() + 1;
        let mut acc = CreditVector::zeros(3);
        aggregate_click(&outcome, &inputs, CreditFunction::Personalization, &ClickEvent::at(pos), &mut acc)
            .unwrap();
        assert_eq!(acc.0, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn identical_inputs_shift_uniformly() {
        let inputs = InputRankingSet::from_ids([[1, 2, 3], [1, 2, 3], [1, 2, 3]]).unwrap();
        let outcome = gom_multileave(&inputs, &GomConfig { output_length: 3, ..GomConfig::default() }).unwrap();
        for pos in 1..=3 {
            let mut acc = CreditVector::zeros(3);
            aggregate_click(&outcome, &inputs, CreditFunction::Personalization, &ClickEvent::at(pos), &mut acc)
                .unwrap();
            assert_eq!(acc.0, vec![-3.0; 3]);
        }
    }

    #[test]
    fn click_position_checked() {
        let inputs = InputRankingSet::from_ids([[1, 2], [2, 1]]).unwrap();
        let outcome = gom_outcome(Ranking::from_ids([1, 2]).unwrap());
        let mut acc = CreditVector::zeros(2);
        for pos in [0, 3] {
            let err = aggregate_click(&outcome, &inputs, CreditFunction::Inverse, &ClickEvent::at(pos), &mut acc);
            assert!(matches!(err, Err(Error::PositionOutOfRange { .. })));
        }
        assert_eq!(acc.0, vec![0.0, 0.0]);
    }

    #[test]
    fn winner_counts() {
        assert_eq!(winner_set(&CreditVector(vec![5.0, 3.0, 3.0]), 0).strict_wins, 2);
        assert_eq!(winner_set(&CreditVector(vec![3.0, 3.0]), 0).strict_wins, 0);
        let w = winner_set(&CreditVector(vec![-10.0, -12.0, -30.0]), 0);
        assert_eq!(w.strict_wins, 2);
        assert_eq!(w.order, vec![0, 1, 2]);
        assert_eq!(winner_set(&CreditVector(vec![1.0, 4.0, 2.0]), 0).order, vec![1, 2, 0]);
    }

    #[test]
    fn pairwise_examples() {
        assert_eq!(pairwise_differences(&CreditVector(vec![0.0, 21111.0])).get(1, 0), 21111.0);
        assert_eq!(pairwise_differences(&CreditVector(vec![7.5, 7.5])).get(0, 1), 0.0);
        let t = pairwise_differences(&CreditVector(vec![1.0, 2.0, 4.0]));
        assert_eq!((t.get(1, 0), t.get(2, 0), t.get(2, 1)), (1.0, 3.0, 2.0));
    }

    #[test]
    fn pairwise_csv() {
        let t = pairwise_differences(&CreditVector(vec![1.0, 2.5]));
        let mut buf = Vec::new();
        t.write_csv(&["algo-A".into(), "algo-B".into()], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), ",algo-A,algo-B\nalgo-A,0,-1.5\nalgo-B,1.5,0\n");
    }

    proptest! {
        #[test]
        fn prop_pairwise_consistent(v in proptest::collection::vec(-1e6f64..1e6, 1..8)) {
            let t = pairwise_differences(&CreditVector(v.clone()));
            for p in 0..v.len() {
                prop_assert_eq!(t.get(p, p), 0.0);
                for q in 0..v.len() {
                    prop_assert!((t.get(p, q) + t.get(q, p)).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn prop_aggregation_order_independent(
            clicks in proptest::collection::vec(1usize..=6, 1..30),
            seed in any::<u64>(),
        ) {
            let inputs = InputRankingSet::from_ids([[1, 2, 3, 4, 5, 6], [6, 5, 4, 3, 2, 1], [3, 1, 6, 2, 5, 4]]).unwrap();
            let outcome = gom_multileave(&inputs, &GomConfig { output_length: 6, rng_seed: seed, ..GomConfig::default() }).unwrap();
            let run = |order: &[usize]| {
                let mut acc = CreditVector::zeros(3);
                for &p in order {
                    aggregate_click(&outcome, &inputs, CreditFunction::Personalization, &ClickEvent::at(p), &mut acc).unwrap();
                }
                acc
            };
            let mut reversed = clicks.clone();
            reversed.reverse();
            // integer-valued credits: exact under any summation order
            prop_assert_eq!(run(&clicks), run(&reversed));
        }
    }
}
