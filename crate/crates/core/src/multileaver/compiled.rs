//! Dense, index-based view of an input set used on the construction hot path.

use std::collections::HashMap;

use crate::ranking::{CreditFunction, InputRankingSet, ItemId};

const ABSENT: u32 = u32::MAX;

/// Inputs re-expressed over union indices `0..union.len()`.
///
/// Buffers are reused across [`Compiled::load`] calls.
#[derive(Debug, Default, Clone)]
pub(crate) struct Compiled {
    n: usize,
    union: Vec<ItemId>,
    lens: Vec<usize>,
    /// Per input, its items as union indices in rank order.
    seqs: Vec<Vec<u32>>,
    /// `ranks[u * n + j]`: 1-based effective rank of union item `u` in input `j`.
    ranks: Vec<u32>,
    dense: Vec<u32>,
    sparse: HashMap<ItemId, u32>,
}

impl Compiled {
    #[cfg(test)]
    pub(crate) fn new(inputs: &InputRankingSet) -> Self {
        let mut c = Compiled::default();
        c.load(inputs);
        c
    }

    pub(crate) fn load(&mut self, inputs: &InputRankingSet) {
        let lists: Vec<&[ItemId]> = inputs.rankings().iter().map(|r| r.items()).collect();
        self.load_lists(&lists);
    }

    /// Loads raw item lists; callers guarantee each list is duplicate-free.
    pub(crate) fn load_lists<L: AsRef<[ItemId]>>(&mut self, lists: &[L]) {
        let n = lists.len();
        self.n = n;
        for &item in &self.union {
            if let Some(slot) = self.dense.get_mut(item.0 as usize) {
                *slot = ABSENT;
            }
        }
        self.union.clear();
        self.sparse.clear();
        self.lens.clear();
        self.lens.extend(lists.iter().map(|r| r.as_ref().len()));

        let total: usize = self.lens.iter().sum();
        let max_id = lists
            .iter()
            .flat_map(|r| r.as_ref())
            .map(|i| i.0)
            .max()
            .unwrap_or(0);
        let use_dense = max_id <= (4 * total as u64 + 64);
        if use_dense && self.dense.len() <= max_id as usize {
            self.dense.resize(max_id as usize + 1, ABSENT);
        }

        self.seqs.resize_with(n, Vec::new);
        for (j, ranking) in lists.iter().enumerate() {
            let seq = &mut self.seqs[j];
            seq.clear();
            for &item in ranking.as_ref() {
                let idx = if use_dense {
                    let slot = &mut self.dense[item.0 as usize];
                    if *slot == ABSENT {
                        *slot = self.union.len() as u32;
                        self.union.push(item);
                    }
                    *slot
                } else {
                    let next = self.union.len() as u32;
                    let idx = *self.sparse.entry(item).or_insert(next);
                    if idx == next {
                        self.union.push(item);
                    }
                    idx
                };
                seq.push(idx);
            }
        }
        let u_len = self.union.len();
        self.ranks.clear();
        self.ranks.resize(u_len * n, 0);
        for j in 0..n {
            let absent_rank = self.lens[j] as u32 + 1;
            for u in 0..u_len {
                self.ranks[u * n + j] = absent_rank;
            }
            for (pos, &u) in self.seqs[j].iter().enumerate() {
                self.ranks[u as usize * n + j] = pos as u32 + 1;
            }
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn union(&self) -> &[ItemId] {
        &self.union
    }

    pub(crate) fn union_len(&self) -> usize {
        self.union.len()
    }

    pub(crate) fn seq(&self, j: usize) -> &[u32] {
        &self.seqs[j]
    }

    pub(crate) fn index_of(&self, item: ItemId) -> Option<u32> {
        if let Some(&slot) = self.dense.get(item.0 as usize) {
            if slot != ABSENT && self.union.get(slot as usize) == Some(&item) {
                return Some(slot);
            }
        }
        self.sparse.get(&item).copied()
    }

    /// Fills `out[u * n + j]` with δ(union[u], I_j).
    pub(crate) fn fill_credits(&self, credit: CreditFunction, out: &mut Vec<f64>) {
        let n = self.n;
        out.clear();
        out.resize(self.union.len() * n, 0.0);
        for u in 0..self.union.len() {
            let row = &self.ranks[u * n..(u + 1) * n];
            let dst = &mut out[u * n..(u + 1) * n];
            for j in 0..n {
                let rank = row[j];
                let absent = rank as usize == self.lens[j] + 1;
                dst[j] = match credit {
                    CreditFunction::Inverse => 1.0 / rank as f64,
                    CreditFunction::NegativeRank => -(rank as f64),
                    CreditFunction::Personalization => {
                        if absent {
                            -(rank as f64)
                        } else {
                            -(row.iter().filter(|&&r| r <= rank).count() as f64)
                        }
                    }
                };
            }
        }
    }
}
