//! Allocation-reusing construction engine shared by the public entry points
//! and the click simulator.

use rand::seq::SliceRandom;
use rand::Rng;

use super::compiled::Compiled;
use super::PositionWeight;
use crate::error::{Error, Result};
use crate::ranking::{CreditFunction, InputRankingSet, ItemId, Ranking};

#[derive(Debug, Default)]
pub(crate) struct Engine {
    pub(crate) compiled: Compiled,
    credits: Vec<f64>,
    credits_for: Option<CreditFunction>,
    weights: Vec<f64>,
    used: Vec<bool>,
    ptr: Vec<usize>,
    live: Vec<u32>,
    order: Vec<u32>,
    pool: Vec<u32>,
    pool_len: usize,
    sums: Vec<f64>,
}

/// Result of a GOM selection, as indices into the engine's candidate pool.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Selection {
    pub index: usize,
    pub objective: f64,
    pub distinct: usize,
}

impl Engine {
    pub(crate) fn load(&mut self, inputs: &InputRankingSet) {
        self.compiled.load(inputs);
        self.credits_for = None;
        self.pool_len = 0;
    }

    pub(crate) fn load_lists<L: AsRef<[ItemId]>>(&mut self, lists: &[L]) {
        self.compiled.load_lists(lists);
        self.credits_for = None;
        self.pool_len = 0;
    }

    pub(crate) fn check_length(&self, length: usize) -> Result<()> {
        let available = self.compiled.union_len();
        if length == 0 || length > available {
            return Err(Error::InvalidLength { requested: length, available });
        }
        Ok(())
    }

    pub(crate) fn credits(&mut self, credit: CreditFunction) -> &[f64] {
        if self.credits_for != Some(credit) {
            self.compiled.fill_credits(credit, &mut self.credits);
            self.credits_for = Some(credit);
        }
        &self.credits
    }

    /// δ(union[u], I_j) for every j; valid after [`Engine::credits`].
    pub(crate) fn credit_row(&self, u: u32) -> &[f64] {
        let n = self.compiled.n();
        &self.credits[u as usize * n..(u as usize + 1) * n]
    }

    fn reset_draft(&mut self) {
        let n = self.compiled.n();
        self.used.clear();
        self.used.resize(self.compiled.union_len(), false);
        self.ptr.clear();
        self.ptr.resize(n, 0);
    }

    /// Highest-ranked unused item of input `j`, advancing its cursor.
    fn next_unused(&mut self, j: usize) -> Option<u32> {
        let seq = self.compiled.seq(j);
        let mut p = self.ptr[j];
        while p < seq.len() && self.used[seq[p] as usize] {
            p += 1;
        }
        self.ptr[j] = p;
        seq.get(p).copied()
    }

    /// Team-draft construction. Fills `output` and `teams` (ranker per position).
    pub(crate) fn tdm<R: Rng + ?Sized>(
        &mut self,
        length: usize,
        rng: &mut R,
        output: &mut Vec<u32>,
        teams: &mut Vec<u32>,
    ) {
        let n = self.compiled.n();
        self.reset_draft();
        output.clear();
        teams.clear();
        let mut order = std::mem::take(&mut self.order);
        order.clear();
        order.extend(0..n as u32);
        'rounds: while output.len() < length {
            order.shuffle(rng);
            for &j in order.iter() {
                if output.len() == length {
                    break 'rounds;
                }
                if let Some(u) = self.next_unused(j as usize) {
                    self.used[u as usize] = true;
                    output.push(u);
                    teams.push(j);
                }
            }
        }
        self.order = order;
    }

    /// One prefix-respecting candidate: every position takes the top unused
    /// item of a uniformly drawn non-exhausted input.
    fn draw_candidate<R: Rng + ?Sized>(&mut self, length: usize, rng: &mut R, start: usize) {
        let n = self.compiled.n();
        self.reset_draft();
        let mut live = std::mem::take(&mut self.live);
        live.clear();
        live.extend(0..n as u32);
        for pos in 0..length {
            loop {
                let k = rng.random_range(0..live.len());
                let j = live[k] as usize;
                match self.next_unused(j) {
                    Some(u) => {
                        self.used[u as usize] = true;
                        self.pool[start + pos] = u;
                        break;
                    }
                    None => {
                        live.swap_remove(k);
                    }
                }
            }
        }
        self.live = live;
    }

    /// Draws `count` candidates and keeps the distinct ones in generation order.
    pub(crate) fn generate_candidates<R: Rng + ?Sized>(
        &mut self,
        length: usize,
        count: usize,
        rng: &mut R,
    ) -> usize {
        self.pool.clear();
        self.pool.resize(length * (count + 1), 0);
        let mut distinct = 0;
        for _ in 0..count {
            let start = distinct * length;
            self.draw_candidate(length, rng, start);
            let fresh = &self.pool[start..start + length];
            let dup = (0..distinct).any(|k| &self.pool[k * length..(k + 1) * length] == fresh);
            if !dup {
                distinct += 1;
            }
        }
        self.pool.truncate(distinct * length);
        self.pool_len = distinct;
        distinct
    }

    pub(crate) fn candidate(&self, k: usize) -> &[u32] {
        let length = self.pool.len() / self.pool_len.max(1);
        &self.pool[k * length..(k + 1) * length]
    }

    fn fill_weights(&mut self, weight: &PositionWeight, length: usize) {
        self.weights.clear();
        self.weights.extend((1..=length).map(|i| weight.weight(i)));
    }

    /// Full GOM selection over a freshly generated pool.
    pub(crate) fn gom<R: Rng + ?Sized>(
        &mut self,
        length: usize,
        count: usize,
        alpha: f64,
        credit: CreditFunction,
        weight: &PositionWeight,
        rng: &mut R,
    ) -> Selection {
        let distinct = self.generate_candidates(length, count, rng);
        self.credits(credit);
        self.fill_weights(weight, length);
        let n = self.compiled.n();
        let mut sums = std::mem::take(&mut self.sums);
        let mut best = Selection { index: 0, objective: f64::INFINITY, distinct };
        for k in 0..distinct {
            let cand = &self.pool[k * length..(k + 1) * length];
            let rows = cand.iter().map(|&u| &self.credits[u as usize * n..(u as usize + 1) * n]);
            let mut value = insensitivity_of(rows.clone(), &self.weights, n, &mut sums);
            if alpha != 0.0 {
                value += alpha * bias_sum_of(rows, n, &mut sums);
            }
            if value < best.objective {
                best.index = k;
                best.objective = value;
            }
        }
        self.sums = sums;
        best
    }

    /// σ² of an index sequence under the currently loaded credits.
    pub(crate) fn insensitivity_idx(&mut self, seq: &[u32], weight: &PositionWeight) -> (f64, f64) {
        self.fill_weights(weight, seq.len());
        let n = self.compiled.n();
        let rows = seq.iter().map(|&u| &self.credits[u as usize * n..(u as usize + 1) * n]);
        let mut sums = std::mem::take(&mut self.sums);
        let sigma2 = insensitivity_of(rows, &self.weights, n, &mut sums);
        let mean = sums.iter().sum::<f64>() / n as f64;
        self.sums = sums;
        (sigma2, mean)
    }

    /// Mean of λ_r over r for an index sequence under the currently loaded credits.
    pub(crate) fn bias_mean_idx(&mut self, seq: &[u32]) -> f64 {
        let n = self.compiled.n();
        let rows = seq.iter().map(|&u| &self.credits[u as usize * n..(u as usize + 1) * n]);
        let mut sums = std::mem::take(&mut self.sums);
        let total = bias_sum_of(rows, n, &mut sums);
        self.sums = sums;
        total / seq.len() as f64
    }

    pub(crate) fn union_item(&self, u: u32) -> ItemId {
        self.compiled.union()[u as usize]
    }

    pub(crate) fn to_ranking(&self, seq: &[u32]) -> Ranking {
        let union = self.compiled.union();
        Ranking::from_distinct(seq.iter().map(|&u| union[u as usize]).collect())
    }

    /// Credit rows (flattened `len × n`) for arbitrary output items, including
    /// items that no input contains.
    pub(crate) fn output_rows(&mut self, output: &Ranking, credit: CreditFunction, inputs: &InputRankingSet) -> Vec<f64> {
        self.credits(credit);
        let n = self.compiled.n();
        let mut rows = Vec::with_capacity(output.len() * n);
        for &item in output.items() {
            match self.compiled.index_of(item) {
                Some(u) => rows.extend_from_slice(self.credit_row(u)),
                None => rows.extend(inputs.rankings().iter().map(|r| absent_credit(credit, r.len()))),
            }
        }
        rows
    }
}

fn absent_credit(credit: CreditFunction, len: usize) -> f64 {
    let rank = (len + 1) as f64;
    match credit {
        CreditFunction::Inverse => 1.0 / rank,
        CreditFunction::NegativeRank | CreditFunction::Personalization => -rank,
    }
}

/// σ² = Σ_j (S_j − μ)², S_j = Σ_i f(i)·δ(O_i, I_j). Leaves S_j in `sums`.
pub(crate) fn insensitivity_of<'a, I>(rows: I, weights: &[f64], n: usize, sums: &mut Vec<f64>) -> f64
where
    I: Iterator<Item = &'a [f64]>,
{
    sums.clear();
    sums.resize(n, 0.0);
    for (row, &w) in rows.zip(weights) {
        for (s, &d) in sums.iter_mut().zip(row) {
            *s += w * d;
        }
    }
    // Σ_j (S_j − μ)² written as pairwise gaps: exactly zero when all S_j agree
    let mut acc = 0.0;
    for (j, &a) in sums.iter().enumerate() {
        for &b in &sums[j + 1..] {
            acc += (a - b) * (a - b);
        }
    }
    acc / n as f64
}

/// Σ_r λ_r where λ_r is the spread of unweighted prefix credit sums at depth r.
pub(crate) fn bias_sum_of<'a, I>(rows: I, n: usize, prefix: &mut Vec<f64>) -> f64
where
    I: Iterator<Item = &'a [f64]>,
{
    let mut total = 0.0;
    each_lambda(rows, n, prefix, |l| total += l);
    total
}

pub(crate) fn each_lambda<'a, I, F>(rows: I, n: usize, prefix: &mut Vec<f64>, mut f: F)
where
    I: Iterator<Item = &'a [f64]>,
    F: FnMut(f64),
{
    prefix.clear();
    prefix.resize(n, 0.0);
    for row in rows {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (p, &d) in prefix.iter_mut().zip(row) {
            *p += d;
            lo = lo.min(*p);
            hi = hi.max(*p);
        }
        f(hi - lo);
    }
}
