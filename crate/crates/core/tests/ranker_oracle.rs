//! The greedy ranker against the brute-force reference on random pools,
//! including items that carry several aspects.

mod common;

use std::collections::BTreeMap;

use common::{aspect_name, oracle_rank_scaled};
use fairlist::ranker::{check_constraints, derive_constraints, short_term_diversity, RankCandidate};
use proptest::prelude::*;

fn shares_strategy() -> impl Strategy<Value = Vec<u32>> {
    // 1..=4 aspects with shares in hundredths summing to 100
    proptest::collection::vec(0u32..=100, 1..=4).prop_map(|mut cuts| {
        cuts.sort();
        let mut shares = Vec::with_capacity(cuts.len());
        let mut prev = 0;
        for c in cuts.iter().skip(1) {
            shares.push(c - prev);
            prev = *c;
        }
        shares.push(100 - prev);
        shares
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn greedy_matches_reference(
        shares in shares_strategy(),
        raw in proptest::collection::vec(proptest::collection::btree_set(0usize..5, 1..=3), 1..=12),
        n in 1usize..=8,
    ) {
        let items: Vec<Vec<usize>> = raw.iter().map(|s| s.iter().copied().collect()).collect();
        let share_map: BTreeMap<String, f64> = shares
            .iter()
            .enumerate()
            .map(|(a, s)| (aspect_name(a), *s as f64 / 100.0))
            .collect();
        let constraints = derive_constraints(&share_map, n).unwrap();
        let pool: Vec<RankCandidate> = items
            .iter()
            .enumerate()
            .map(|(i, a)| RankCandidate {
                item_id: format!("i{i:02}"),
                aspects: a.iter().map(|&x| aspect_name(x)).collect(),
                utility: (items.len() - i) as f64,
                desired: 0.0,
            })
            .collect();
        let list = short_term_diversity(&pool, &constraints).unwrap();
        let expected = oracle_rank_scaled(&items, &shares, 100, n);
        let got: Vec<(usize, bool)> = list
            .positions
            .iter()
            .zip(&list.fallback)
            .map(|(id, f)| (id[1..].parse().unwrap(), *f))
            .collect();
        prop_assert_eq!(&got, &expected);

        let aspect_map = pool.iter().map(|c| (c.item_id.clone(), c.aspects.clone())).collect();
        let report = check_constraints(&list, &constraints, &aspect_map).unwrap();
        let flagged: Vec<usize> = expected.iter().enumerate().filter(|(_, e)| e.1).map(|(p, _)| p + 1).collect();
        prop_assert_eq!(report.fallback_positions, flagged);
        prop_assert!(report.violations.is_empty(), "{:?}", report.violations);
    }
}
