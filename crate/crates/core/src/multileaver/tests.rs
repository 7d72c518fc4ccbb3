use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;

use super::*;
use crate::ranking::{personalization_credit, ItemId};

const A: u64 = 1;
const B: u64 = 2;
const C: u64 = 3;
const D: u64 = 4;

fn ids(r: &Ranking) -> Vec<u64> {
    r.items().iter().map(|i| i.0).collect()
}

fn set(rankings: &[&[u64]]) -> InputRankingSet {
    InputRankingSet::from_ids(rankings.iter().map(|r| r.to_vec())).unwrap()
}

/// Every prefix-respecting ranking of `length`, by exhaustive branching.
fn enumerate_prefix_respecting(inputs: &InputRankingSet, length: usize) -> BTreeSet<Vec<u64>> {
    fn go(inputs: &InputRankingSet, length: usize, cur: &mut Vec<u64>, out: &mut BTreeSet<Vec<u64>>) {
        if cur.len() == length {
            out.insert(cur.clone());
            return;
        }
        let mut tried = HashSet::new();
        for r in inputs.rankings() {
            if let Some(next) = r.items().iter().map(|i| i.0).find(|i| !cur.contains(i)) {
                if tried.insert(next) {
                    cur.push(next);
                    go(inputs, length, cur, out);
                    cur.pop();
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    go(inputs, length, &mut Vec::new(), &mut out);
    out
}

fn is_prefix_respecting(output: &Ranking, inputs: &InputRankingSet) -> bool {
    let mut used = HashSet::new();
    for &item in output.items() {
        let ok = inputs
            .rankings()
            .iter()
            .any(|r| r.items().iter().find(|i| !used.contains(*i)) == Some(&item));
        if !ok {
            return false;
        }
        used.insert(item);
    }
    true
}

#[test]
fn tdm_identical_inputs() {
    let inputs = set(&[&[A, B, C], &[A, B, C]]);
    for seed in 0..20 {
        let out = tdm_multileave(&inputs, 3, seed).unwrap();
        assert_eq!(ids(&out.output), vec![A, B, C]);
    }
}

#[test]
fn tdm_disjoint_pair_enumerates_both_orders() {
    let inputs = set(&[&[A, B], &[C, D]]);
    let mut seen = BTreeSet::new();
    for seed in 0..64 {
        let out = tdm_multileave(&inputs, 2, seed).unwrap();
        let got = ids(&out.output);
        assert!(got == vec![A, C] || got == vec![C, A], "{got:?}");
        assert_eq!(out.team_of(ItemId(A)), Some(0));
        assert_eq!(out.team_of(ItemId(C)), Some(1));
        seen.insert(got);
    }
    assert_eq!(seen.len(), 2);
}

#[test]
fn tdm_shared_top_item_first() {
    let inputs = set(&[&[A, B, C], &[A, C, B]]);
    for seed in 0..64 {
        let out = tdm_multileave(&inputs, 3, seed).unwrap();
        assert_eq!(out.output.at(1), Some(ItemId(A)));
    }
}

#[test]
fn tdm_rejects_bad_length() {
    let inputs = set(&[&[A, B], &[B, A]]);
    assert!(matches!(tdm_multileave(&inputs, 3, 0), Err(Error::InvalidLength { requested: 3, available: 2 })));
    assert!(matches!(tdm_multileave(&inputs, 0, 0), Err(Error::InvalidLength { .. })));
}

#[test]
fn candidates_identical_inputs_dedupe() {
    let inputs = set(&[&[A, B, C], &[A, B, C]]);
    let cands = candidate_rankings(&inputs, 3, 25, 9).unwrap();
    assert_eq!(cands.len(), 1);
    assert_eq!(ids(&cands[0]), vec![A, B, C]);
}

#[test]
fn candidates_swapped_pair_cover_both() {
    let inputs = set(&[&[A, B], &[B, A]]);
    let cands: BTreeSet<_> = candidate_rankings(&inputs, 2, 200, 1).unwrap().iter().map(ids).collect();
    let expected: BTreeSet<_> = [vec![A, B], vec![B, A]].into_iter().collect();
    assert_eq!(cands, expected);
    assert_eq!(cands, enumerate_prefix_respecting(&inputs, 2));
}

#[test]
fn candidates_disjoint_pair_within_enumeration() {
    let inputs = set(&[&[A, B], &[C, D]]);
    let allowed = enumerate_prefix_respecting(&inputs, 2);
    let expected: BTreeSet<_> = [vec![A, B], vec![A, C], vec![C, A], vec![C, D]].into_iter().collect();
    assert_eq!(allowed, expected);
    for c in candidate_rankings(&inputs, 2, 200, 3).unwrap() {
        assert!(allowed.contains(&ids(&c)));
    }
}

#[test]
fn insensitivity_swapped_pair() {
    let inputs = set(&[&[A, B], &[B, A]]);
    let out = Ranking::from_ids([A, B]).unwrap();
    let w = PositionWeight::Reciprocal;
    let s2 = insensitivity(&out, &inputs, CreditFunction::Personalization, &w);
    assert!((s2 - 0.125).abs() < 1e-12);
    let norm = normalized_insensitivity(&out, &inputs, CreditFunction::Personalization, &w);
    assert!((norm - 0.125 / 5.0625).abs() < 1e-12);
    assert!((norm - 0.02469).abs() < 1e-5);
}

#[test]
fn insensitivity_identical_inputs_is_zero() {
    let inputs = set(&[&[A, B, C], &[A, B, C], &[A, B, C]]);
    for credit in CreditFunction::ALL {
        let out = Ranking::from_ids([C, A]).unwrap();
        assert_eq!(insensitivity(&out, &inputs, credit, &PositionWeight::Reciprocal), 0.0);
        assert!(bias_profile(&out, &inputs, credit).iter().all(|&l| l == 0.0));
    }
}

#[test]
fn bias_swapped_pair() {
    let inputs = set(&[&[A, B], &[B, A]]);
    let out = Ranking::from_ids([A, B]).unwrap();
    assert_eq!(bias_profile(&out, &inputs, CreditFunction::Personalization), vec![1.0, 0.0]);
}

#[test]
fn bias_disjoint_inverse_positive() {
    let inputs = set(&[&[1, 2, 3], &[4, 5, 6]]);
    let out = inputs.rankings()[0].clone();
    let lambdas = bias_profile(&out, &inputs, CreditFunction::Inverse);
    let mut h = 0.0;
    for (r, l) in lambdas.iter().enumerate() {
        h += 1.0 / (r + 1) as f64;
        let expected = h - (r + 1) as f64 / 4.0;
        assert!(*l > 0.0);
        assert!((l - expected).abs() < 1e-12);
    }
}

#[test]
fn output_items_outside_union_use_absent_credit() {
    let inputs = set(&[&[A, B], &[B, A]]);
    let out = Ranking::from_ids([9]).unwrap();
    // absent everywhere: identical credits, no spread
    assert_eq!(insensitivity(&out, &inputs, CreditFunction::Inverse, &PositionWeight::Reciprocal), 0.0);
}

#[test]
fn gom_identical_inputs() {
    let inputs = set(&[&[A, B, C], &[A, B, C]]);
    let cfg = GomConfig { output_length: 3, ..GomConfig::default() };
    let out = gom_multileave(&inputs, &cfg).unwrap();
    assert_eq!(ids(&out.output), vec![A, B, C]);
    assert_eq!(out.objective_value, Some(0.0));
    assert_eq!(out.candidates_evaluated, Some(1));
}

#[test]
fn gom_tie_keeps_first_generated() {
    let inputs = set(&[&[A, B], &[B, A]]);
    for seed in 0..10 {
        let cfg = GomConfig { output_length: 2, candidate_count: 50, rng_seed: seed, ..GomConfig::default() };
        let out = gom_multileave(&inputs, &cfg).unwrap();
        assert!((out.objective_value.unwrap() - 0.125).abs() < 1e-12);
        let first = candidate_rankings(&inputs, 2, 50, seed).unwrap().remove(0);
        assert_eq!(out.output, first);
    }
}

#[test]
fn gom_alpha_extremes_agree_on_symmetric_inputs() {
    let inputs = set(&[&[A, B, C], &[A, C, B]]);
    let all = enumerate_prefix_respecting(&inputs, 3);
    let w = PositionWeight::Reciprocal;
    let p = CreditFunction::Personalization;
    let abc = Ranking::from_ids([A, B, C]).unwrap();
    let acb = Ranking::from_ids([A, C, B]).unwrap();
    assert!(all.contains(&ids(&abc)) && all.contains(&ids(&acb)));
    assert_eq!(insensitivity(&abc, &inputs, p, &w), insensitivity(&acb, &inputs, p, &w));

    for alpha in [0.0, 1000.0] {
        let best = all
            .iter()
            .map(|r| objective(&Ranking::from_ids(r.clone()).unwrap(), &inputs, p, alpha, &w))
            .fold(f64::INFINITY, f64::min);
        let cfg = GomConfig { output_length: 3, candidate_count: 200, alpha, ..GomConfig::default() };
        let out = gom_multileave(&inputs, &cfg).unwrap();
        assert!((out.objective_value.unwrap() - best).abs() < 1e-9);
        assert!(all.contains(&ids(&out.output)));
    }
}

#[test]
fn gom_objective_matches_public_objective() {
    let inputs = set(&[&[1, 2, 3, 4], &[4, 3, 2, 1], &[2, 4, 1]]);
    for alpha in [0.0, 0.5, 10.0] {
        let cfg = GomConfig { output_length: 4, candidate_count: 10, alpha, rng_seed: 5, ..GomConfig::default() };
        let out = gom_multileave(&inputs, &cfg).unwrap();
        let check = objective(&out.output, &inputs, cfg.credit, alpha, &cfg.weight);
        assert_eq!(out.objective_value.unwrap(), check);
    }
}

#[test]
fn gom_config_validation() {
    let inputs = set(&[&[A, B], &[B, A]]);
    let cfg = GomConfig { candidate_count: 0, output_length: 2, ..GomConfig::default() };
    assert!(matches!(gom_multileave(&inputs, &cfg), Err(Error::InvalidConfig(_))));
    let cfg = GomConfig { alpha: -1.0, output_length: 2, ..GomConfig::default() };
    assert!(gom_multileave(&inputs, &cfg).is_err());
}

#[test]
fn position_weight_table() {
    assert!(PositionWeight::table(vec![1.0, 2.0]).is_err());
    assert!(PositionWeight::table(vec![1.0, 0.0]).is_err());
    let w = PositionWeight::table(vec![1.0, 0.5]).unwrap();
    assert_eq!(w.weight(1), 1.0);
    assert_eq!(w.weight(7), 0.5);
}

#[test]
fn compiled_credits_match_direct_credit() {
    let inputs = set(&[&[5, 1, 9, 2], &[2, 5], &[9, 8, 7, 1, 5]]);
    let c = compiled::Compiled::new(&inputs);
    for credit in CreditFunction::ALL {
        let mut m = Vec::new();
        c.fill_credits(credit, &mut m);
        for (u, item) in c.union().iter().enumerate() {
            for j in 0..inputs.len() {
                assert_eq!(m[u * inputs.len() + j], credit.credit(*item, j, &inputs));
            }
        }
    }
    // sparse ids take the hash-map path
    let sparse = InputRankingSet::from_ids([vec![u64::MAX, 7], vec![7, 1 << 40]]).unwrap();
    let c = compiled::Compiled::new(&sparse);
    assert_eq!(c.union_len(), 3);
    assert_eq!(c.index_of(ItemId(1 << 40)), Some(2));
    let mut m = Vec::new();
    c.fill_credits(CreditFunction::Personalization, &mut m);
    assert_eq!(m[2 * 2], personalization_credit(ItemId(1 << 40), &sparse.rankings()[0], &sparse) as f64);
}

fn arb_inputs() -> impl Strategy<Value = InputRankingSet> {
    (2usize..5, 1usize..9).prop_flat_map(|(n, universe)| {
        let one = Just((0..universe as u64).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_flat_map(move |perm| (Just(perm), 1..=universe))
            .prop_map(|(perm, len)| perm[..len].to_vec());
        proptest::collection::vec(one, n).prop_map(|rs| InputRankingSet::from_ids(rs).unwrap())
    })
}

proptest! {
    #[test]
    fn prop_outputs_are_valid(inputs in arb_inputs(), seed in any::<u64>(), frac in 0.0f64..1.0) {
        let union: HashSet<_> = inputs.union().into_iter().collect();
        let length = 1 + ((union.len() - 1) as f64 * frac) as usize;
        let tdm = tdm_multileave(&inputs, length, seed).unwrap();
        let gom = gom_multileave(&inputs, &GomConfig { output_length: length, rng_seed: seed, ..GomConfig::default() }).unwrap();
        for out in [&tdm, &gom] {
            prop_assert_eq!(out.output.len(), length);
            prop_assert!(out.output.items().iter().all(|i| union.contains(i)));
            prop_assert!(is_prefix_respecting(&out.output, &inputs));
        }
        for c in candidate_rankings(&inputs, length, 10, seed).unwrap() {
            prop_assert!(is_prefix_respecting(&c, &inputs));
        }
        prop_assert_eq!(tdm.teams.as_ref().unwrap().len(), length);
    }

    #[test]
    fn prop_tdm_team_locality(inputs in arb_inputs(), seed in any::<u64>()) {
        let length = inputs.union_len();
        let out = tdm_multileave(&inputs, length, seed).unwrap();
        let teams = out.teams.as_ref().unwrap();
        for (pos, &item) in out.output.items().iter().enumerate() {
            let shown = &out.output.items()[..pos];
            let top = inputs.rankings()[teams[pos]].items().iter().find(|i| !shown.contains(i));
            prop_assert_eq!(top, Some(&item));
        }
    }

    #[test]
    fn prop_tdm_team_balance(universe in 2usize..10, n in 2usize..5, seed in any::<u64>()) {
        // full permutations of one universe: nobody runs dry early
        let perms: Vec<Vec<u64>> = (0..n)
            .map(|j| {
                let mut v: Vec<u64> = (0..universe as u64).collect();
                v.rotate_left(j % universe);
                v
            })
            .collect();
        let inputs = InputRankingSet::from_ids(perms).unwrap();
        let out = tdm_multileave(&inputs, universe, seed).unwrap();
        let sizes = out.team_sizes(n).unwrap();
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1, "{:?}", sizes);
    }

    #[test]
    fn prop_gom_deterministic(inputs in arb_inputs(), seed in any::<u64>(), alpha in 0.0f64..5.0) {
        let cfg = GomConfig { output_length: 1, rng_seed: seed, alpha, ..GomConfig::default() };
        let cfg = GomConfig { output_length: inputs.union_len(), ..cfg };
        let a = gom_multileave(&inputs, &cfg).unwrap();
        let b = gom_multileave(&inputs, &cfg).unwrap();
        prop_assert_eq!(a.output, b.output);
        prop_assert_eq!(a.objective_value.unwrap().to_bits(), b.objective_value.unwrap().to_bits());
    }

    #[test]
    fn prop_identical_inputs_give_common_ranking(perm in Just((0u64..8).collect::<Vec<_>>()).prop_shuffle(), n in 2usize..5, len in 1usize..=8, seed in any::<u64>()) {
        let inputs = InputRankingSet::from_ids(vec![perm.clone(); n]).unwrap();
        let expected = inputs.rankings()[0].truncated(len);
        prop_assert_eq!(&tdm_multileave(&inputs, len, seed).unwrap().output, &expected);
        let cfg = GomConfig { output_length: len, rng_seed: seed, ..GomConfig::default() };
        prop_assert_eq!(&gom_multileave(&inputs, &cfg).unwrap().output, &expected);
    }
}
