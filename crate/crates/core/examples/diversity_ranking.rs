//! Ranks a utility-sorted pool under prefix diversity bounds and audits the
//! result.

use std::collections::BTreeMap;

use fairlist::ranker::{check_constraints, derive_constraints, short_term_diversity, sort_by_utility, RankCandidate};

fn main() -> fairlist::Result<()> {
    let raw = [
        ("m1", "myths", 9.0),
        ("m2", "myths", 8.5),
        ("m3", "myths", 8.0),
        ("m4", "myths", 7.5),
        ("r1", "recipes", 6.0),
        ("r2", "recipes", 3.0),
        ("h1", "hygiene", 2.0),
    ];
    let mut pool: Vec<RankCandidate> = raw
        .iter()
        .map(|(id, a, u)| RankCandidate {
            item_id: id.to_string(),
            aspects: vec![a.to_string()],
            utility: *u,
            desired: *u,
        })
        .collect();
    sort_by_utility(&mut pool);
    let shares: BTreeMap<String, f64> = [("myths", 0.5), ("recipes", 0.3), ("hygiene", 0.2)]
        .iter()
        .map(|(a, s)| (a.to_string(), *s))
        .collect();
    let constraints = derive_constraints(&shares, 5)?;
    for a in shares.keys() {
        let bounds: Vec<usize> = (1..=5).map(|p| constraints.bound(a, p)).collect();
        println!("U[{a}] over p = 1..5: {bounds:?}");
    }
    let list = short_term_diversity(&pool, &constraints)?;
    for (i, id) in list.positions.iter().enumerate() {
        let note = if list.fallback[i] { " (fallback)" } else { "" };
        println!("rank {}: {id} utility {}{note}", i + 1, list.utilities[i]);
    }
    let aspects = pool.iter().map(|c| (c.item_id.clone(), c.aspects.clone())).collect();
    let report = check_constraints(&list, &constraints, &aspects)?;
    println!("violations: {}", report.violations.len());
    Ok(())
}
