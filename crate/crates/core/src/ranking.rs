//! Items, rankings and the click-credit functions.
//!
//! Positions are 1-based throughout: the top item of a ranking has rank 1.
//! An item missing from a ranking of length `L` is treated as sitting at
//! rank `L + 1` by every credit function.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque item identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub u64);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for ItemId {
    fn from(v: u64) -> Self {
        ItemId(v)
    }
}

/// An ordered list of distinct items.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Ranking {
    items: Vec<ItemId>,
}

impl Ranking {
    /// Builds a ranking, rejecting duplicate items.
    pub fn new(items: Vec<ItemId>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(items.len());
        for item in &items {
            if !seen.insert(*item) {
                return Err(Error::DuplicateItem(*item));
            }
        }
        Ok(Ranking { items })
    }

    /// Convenience constructor from raw integer ids.
    pub fn from_ids<I: IntoIterator<Item = u64>>(ids: I) -> Result<Self> {
        Self::new(ids.into_iter().map(ItemId).collect())
    }

    /// Callers guarantee distinctness.
    pub(crate) fn from_distinct(items: Vec<ItemId>) -> Self {
        debug_assert_eq!(items.iter().collect::<HashSet<_>>().len(), items.len());
        Ranking { items }
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.items.contains(&item)
    }

    /// Item at 1-based `position`.
    pub fn at(&self, position: usize) -> Option<ItemId> {
        position.checked_sub(1).and_then(|i| self.items.get(i)).copied()
    }

    /// 1-based position of `item`, or `None` when absent.
    pub fn rank_of(&self, item: ItemId) -> Option<usize> {
        rank_of(item, self)
    }

    /// Rank used when comparing across rankings: absent items sit just past the end.
    pub fn effective_rank(&self, item: ItemId) -> usize {
        self.rank_of(item).unwrap_or(self.items.len() + 1)
    }

    /// First `len` items (or all of them when shorter).
    pub fn truncated(&self, len: usize) -> Ranking {
        Ranking {
            items: self.items.iter().take(len).copied().collect(),
        }
    }
}

impl<'de> Deserialize<'de> for Ranking {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let items = Vec::<ItemId>::deserialize(d)?;
        Ranking::new(items).map_err(serde::de::Error::custom)
    }
}

/// The rankings under comparison; index `j` identifies ranker `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct InputRankingSet {
    rankings: Vec<Ranking>,
}

impl InputRankingSet {
    /// Requires at least two rankers, each with a non-empty ranking.
    /// Rankings may differ in length and membership.
    pub fn new(rankings: Vec<Ranking>) -> Result<Self> {
        if rankings.len() < 2 {
            return Err(Error::TooFewRankers(rankings.len()));
        }
        if let Some(j) = rankings.iter().position(Ranking::is_empty) {
            return Err(Error::EmptyRanking(j));
        }
        Ok(InputRankingSet { rankings })
    }

    pub fn from_ids<I, R>(rankings: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = u64>,
    {
        let rankings = rankings
            .into_iter()
            .map(Ranking::from_ids)
            .collect::<Result<Vec<_>>>()?;
        Self::new(rankings)
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }

    pub fn get(&self, j: usize) -> Option<&Ranking> {
        self.rankings.get(j)
    }

    /// Number of rankers `n`.
    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    /// Distinct items across all inputs, in first-seen order
    /// (ranker 0 first, then ranker 1, ...).
    pub fn union(&self) -> Vec<ItemId> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for r in &self.rankings {
            for &item in r.items() {
                if seen.insert(item) {
                    out.push(item);
                }
            }
        }
        out
    }

    pub fn union_len(&self) -> usize {
        self.union().len()
    }
}

/// Click-credit function δ(item, I_j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreditFunction {
    /// `1 / rank`, absent items get `1 / (|I_j| + 1)`.
    Inverse,
    /// `-rank`, absent items get `-(|I_j| + 1)`.
    NegativeRank,
    /// Minus the number of inputs placing the item at or above its rank in the target.
    #[default]
    Personalization,
}

impl CreditFunction {
    pub const ALL: [CreditFunction; 3] = [
        CreditFunction::Inverse,
        CreditFunction::NegativeRank,
        CreditFunction::Personalization,
    ];

    /// Credit for `item` attributed to input ranking `target` of `inputs`.
    ///
    /// Panics if `target` is out of range.
    pub fn credit(self, item: ItemId, target: usize, inputs: &InputRankingSet) -> f64 {
        let ranking = &inputs.rankings()[target];
        match self {
            CreditFunction::Inverse => inverse_credit(item, ranking),
            CreditFunction::NegativeRank => negative_rank_credit(item, ranking) as f64,
            CreditFunction::Personalization => {
                personalization_credit(item, ranking, inputs) as f64
            }
        }
    }

    /// Short tag used in method labels (`GOM-I`, `GOM-N`, `GOM-P`).
    pub fn tag(self) -> &'static str {
        match self {
            CreditFunction::Inverse => "I",
            CreditFunction::NegativeRank => "N",
            CreditFunction::Personalization => "P",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CreditFunction::Inverse => "inverse",
            CreditFunction::NegativeRank => "negative_rank",
            CreditFunction::Personalization => "personalization",
        }
    }
}

impl fmt::Display for CreditFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CreditFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "inverse" | "i" => Ok(CreditFunction::Inverse),
            "negative_rank" | "negative-rank" | "n" => Ok(CreditFunction::NegativeRank),
            "personalization" | "p" => Ok(CreditFunction::Personalization),
            other => Err(Error::UnknownCredit(other.to_string())),
        }
    }
}

/// 1-based position of `item` in `ranking`, `None` when absent.
pub fn rank_of(item: ItemId, ranking: &Ranking) -> Option<usize> {
    ranking.items().iter().position(|&x| x == item).map(|i| i + 1)
}

pub fn inverse_credit(item: ItemId, ranking: &Ranking) -> f64 {
    1.0 / ranking.effective_rank(item) as f64
}

pub fn negative_rank_credit(item: ItemId, ranking: &Ranking) -> i64 {
    -(ranking.effective_rank(item) as i64)
}

/// Personalization credit of `item` for `target`, counted against every
/// ranking in `all_inputs` (including `target` itself).
///
/// When the item is missing from another input its rank there is taken as
/// that input's length plus one, and ties count.
pub fn personalization_credit(item: ItemId, target: &Ranking, all_inputs: &InputRankingSet) -> i64 {
    let Some(rank) = target.rank_of(item) else {
        return -(target.len() as i64 + 1);
    };
    let at_or_above = all_inputs
        .rankings()
        .iter()
        .filter(|other| other.effective_rank(item) <= rank)
        .count();
    -(at_or_above as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Ranking {
        Ranking::from_ids([1, 2, 3]).unwrap()
    }

    /// I_1=[1..99,100,101,102], I_2=[1..99,101,102,100], I_3=[1..99,102,100,101]
    fn worked_inputs() -> InputRankingSet {
        let prefix: Vec<u64> = (1..=99).collect();
        let with = |tail: [u64; 3]| prefix.iter().copied().chain(tail).collect::<Vec<_>>();
        InputRankingSet::from_ids([with([100, 101, 102]), with([101, 102, 100]), with([102, 100, 101])])
            .unwrap()
    }

    #[test]
    fn rank_lookup() {
        let r = abc();
        assert_eq!(rank_of(ItemId(2), &r), Some(2));
        assert_eq!(rank_of(ItemId(1), &r), Some(1));
        assert_eq!(rank_of(ItemId(26), &r), None);
    }

    #[test]
    fn inverse_credit_values() {
        let inputs = worked_inputs();
        let item = ItemId(101);
        assert_eq!(inverse_credit(item, &inputs.rankings()[0]), 1.0 / 101.0);
        assert_eq!(inverse_credit(item, &inputs.rankings()[1]), 1.0 / 100.0);
        assert_eq!(inverse_credit(item, &inputs.rankings()[2]), 1.0 / 102.0);
        assert_eq!(inverse_credit(ItemId(9), &abc()), 0.25);
    }

    #[test]
    fn negative_rank_values() {
        let r = abc();
        assert_eq!(negative_rank_credit(ItemId(1), &r), -1);
        assert_eq!(negative_rank_credit(ItemId(3), &r), -3);
        assert_eq!(negative_rank_credit(ItemId(9), &r), -4);
    }

    #[test]
    fn personalization_worked_example() {
        let inputs = worked_inputs();
        let item = ItemId(101);
        let got: Vec<i64> = inputs
            .rankings()
            .iter()
            .map(|r| personalization_credit(item, r, &inputs))
            .collect();
        assert_eq!(got, vec![-2, -1, -3]);
    }

    #[test]
    fn personalization_same_position_everywhere() {
        let inputs = InputRankingSet::from_ids([[1, 2, 3], [1, 2, 3], [1, 2, 3], [1, 2, 3]]).unwrap();
        for r in inputs.rankings() {
            assert_eq!(personalization_credit(ItemId(2), r, &inputs), -4);
        }
    }

    #[test]
    fn personalization_absent_cases() {
        let inputs = InputRankingSet::from_ids([vec![1, 2, 3], vec![4, 1]]).unwrap();
        // absent from target
        assert_eq!(personalization_credit(ItemId(4), &inputs.rankings()[0], &inputs), -4);
        // item 3 absent from I_2 (effective rank 3) ties with rank 3 in I_1
        assert_eq!(personalization_credit(ItemId(3), &inputs.rankings()[0], &inputs), -2);
        // item 4 in I_2 at rank 1; I_1 effective rank 4
        assert_eq!(personalization_credit(ItemId(4), &inputs.rankings()[1], &inputs), -1);
    }

    #[test]
    fn rejects_duplicates_and_small_sets() {
        assert!(matches!(Ranking::from_ids([1, 2, 1]), Err(Error::DuplicateItem(ItemId(1)))));
        assert!(matches!(InputRankingSet::from_ids([[1, 2]]), Err(Error::TooFewRankers(1))));
        assert!(matches!(
            InputRankingSet::from_ids([vec![1], vec![]]),
            Err(Error::EmptyRanking(1))
        ));
    }

    #[test]
    fn credit_function_parse() {
        assert_eq!("personalization".parse::<CreditFunction>().unwrap(), CreditFunction::Personalization);
        assert_eq!("negative-rank".parse::<CreditFunction>().unwrap(), CreditFunction::NegativeRank);
        assert!("ndcg".parse::<CreditFunction>().is_err());
    }

    #[test]
    fn union_is_first_seen_order() {
        let inputs = InputRankingSet::from_ids([vec![3, 1], vec![2, 3, 5]]).unwrap();
        assert_eq!(inputs.union(), vec![ItemId(3), ItemId(1), ItemId(2), ItemId(5)]);
    }
}
