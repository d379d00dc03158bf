//! Greedy diversity-constrained ranking and the long-term fairness loop that
//! re-ranks by remaining exposure between slots.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exposure::{ExposureLedger, ExposurePlan};
use crate::recommender::RecommendedPool;

/// Guards the ceiling against products like 0.3 × 10 = 3.0000000000000004.
const CEIL_SLACK: f64 = 1e-9;

/// Per-aspect prefix bounds: at most `bound(a, p)` items of aspect `a` among
/// the top `p` ranks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityConstraints {
    pub n: usize,
    pub shares: BTreeMap<String, f64>,
    bounds: BTreeMap<String, Vec<usize>>,
}

impl DiversityConstraints {
    /// Aspects outside the shares have bound 0. Prefixes beyond `n` use the
    /// bound at `n`.
    pub fn bound(&self, aspect: &str, p: usize) -> usize {
        match self.bounds.get(aspect) {
            Some(b) if p >= 1 => b[p.min(self.n) - 1],
            _ => 0,
        }
    }
}

/// U_jp = ⌈p · share_j⌉ for p in 1..=n.
pub fn derive_constraints(shares: &BTreeMap<String, f64>, n: usize) -> Result<DiversityConstraints> {
    if n == 0 {
        return Err(Error::InvalidInput("list length must be at least 1".into()));
    }
    let sum: f64 = shares.values().sum();
    if shares.is_empty() || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("shares must sum to 1, got {sum}")));
    }
    let bounds = shares
        .iter()
        .map(|(a, &s)| {
            let b = (1..=n)
                .map(|p| ((p as f64 * s - CEIL_SLACK).ceil().max(0.0) as usize).min(p))
                .collect();
            (a.clone(), b)
        })
        .collect();
    Ok(DiversityConstraints {
        n,
        shares: shares.clone(),
        bounds,
    })
}

/// An item offered to the ranker. `desired` only breaks utility ties.
#[derive(Clone, Debug, PartialEq)]
pub struct RankCandidate {
    pub item_id: String,
    pub aspects: Vec<String>,
    pub utility: f64,
    pub desired: f64,
}

/// Utility descending, then larger desired exposure, then item id.
pub fn sort_by_utility(candidates: &mut [RankCandidate]) {
    candidates.sort_by(|a, b| {
        b.utility
            .total_cmp(&a.utility)
            .then_with(|| b.desired.total_cmp(&a.desired))
            .then_with(|| a.item_id.cmp(&b.item_id))
    });
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub positions: Vec<String>,
    pub generated_at: usize,
    /// Utility of each item when it was placed.
    pub utilities: Vec<f64>,
    /// Whether each position was filled by the fallback rule.
    pub fallback: Vec<bool>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// A list with no fallback positions, e.g. one built by hand or read back.
    pub fn plain(positions: Vec<String>, utilities: Vec<f64>, generated_at: usize) -> Self {
        let fallback = vec![false; positions.len()];
        RankedList {
            positions,
            generated_at,
            utilities,
            fallback,
        }
    }
}

/// Greedy constrained ranking over a pool already sorted by utility. Rank j
/// takes the first unpicked item whose aspects all still fit under U_aj
/// (bounds are non-decreasing in p, so this covers every longer prefix too);
/// if none fits, the first unpicked item is taken regardless.
pub fn short_term_diversity(pool: &[RankCandidate], constraints: &DiversityConstraints) -> Result<RankedList> {
    if pool.is_empty() {
        return Err(Error::EmptyRankingPool);
    }
    let len = constraints.n.min(pool.len());
    let mut picked = vec![false; pool.len()];
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut list = RankedList::default();
    for j in 1..=len {
        let fits = |c: &RankCandidate, counts: &BTreeMap<&str, usize>| {
            c.aspects
                .iter()
                .all(|a| counts.get(a.as_str()).copied().unwrap_or(0) < constraints.bound(a, j))
        };
        let choice = (0..pool.len()).find(|&i| !picked[i] && fits(&pool[i], &counts));
        let (idx, fallback) = match choice {
            Some(i) => (i, false),
            None => ((0..pool.len()).find(|&i| !picked[i]).expect("len <= pool size"), true),
        };
        picked[idx] = true;
        let c = &pool[idx];
        for a in &c.aspects {
            *counts.entry(a.as_str()).or_insert(0) += 1;
        }
        list.positions.push(c.item_id.clone());
        list.utilities.push(c.utility);
        list.fallback.push(fallback);
    }
    Ok(list)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub position: usize,
    pub aspect: String,
    pub count: usize,
    pub bound: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintReport {
    pub violations: Vec<Violation>,
    /// 1-based positions filled by the fallback rule. They are not counted
    /// against the bounds.
    pub fallback_positions: Vec<usize>,
}

/// Checks every prefix of `list` against the bounds.
pub fn check_constraints(
    list: &RankedList,
    constraints: &DiversityConstraints,
    aspect_map: &BTreeMap<String, Vec<String>>,
) -> Result<ConstraintReport> {
    let mut report = ConstraintReport::default();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, id) in list.positions.iter().enumerate() {
        let p = i + 1;
        let aspects = aspect_map.get(id).ok_or_else(|| Error::UnknownItem(id.clone()))?;
        if list.fallback.get(i).copied().unwrap_or(false) {
            report.fallback_positions.push(p);
        } else {
            for a in aspects {
                *counts.entry(a.as_str()).or_insert(0) += 1;
            }
        }
        for (a, &count) in &counts {
            let bound = constraints.bound(a, p);
            if count > bound {
                report.violations.push(Violation {
                    position: p,
                    aspect: a.to_string(),
                    count,
                    bound,
                });
            }
        }
    }
    Ok(report)
}

/// Liked items of `pool` with utility D − E, sorted for ranking.
pub fn remaining_exposure_candidates(
    pool: &RecommendedPool,
    plan: &ExposurePlan,
    ledger: &ExposureLedger,
) -> Result<Vec<RankCandidate>> {
    let mut out = pool
        .liked_items()
        .into_iter()
        .map(|id| {
            let desired = plan.target(id)?;
            Ok(RankCandidate {
                item_id: id.to_string(),
                aspects: pool.aspects_of(id).to_vec(),
                utility: desired - ledger.achieved(id)? as f64,
                desired,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    sort_by_utility(&mut out);
    Ok(out)
}

/// Generates one list per slot. Each slot ranks by D − E from the ledger (so
/// a fresh ledger ranks the first slot by D), then hands the list to
/// `feedback`, whose reported listens go into the ledger before the next slot.
pub fn long_term_fairness(
    pool: &RecommendedPool,
    plan: &ExposurePlan,
    ledger: &mut ExposureLedger,
    constraints: &DiversityConstraints,
    num_slots: usize,
    mut feedback: impl FnMut(usize, &RankedList) -> Result<Vec<String>>,
) -> Result<Vec<RankedList>> {
    if num_slots == 0 {
        return Err(Error::InvalidInput("at least one slot is required".into()));
    }
    let mut lists = Vec::with_capacity(num_slots);
    for slot in 0..num_slots {
        let candidates = remaining_exposure_candidates(pool, plan, ledger)?;
        let mut list = short_term_diversity(&candidates, constraints)?;
        list.generated_at = slot;
        for item in feedback(slot, &list)? {
            ledger.record_listen(&item)?;
        }
        lists.push(list);
    }
    Ok(lists)
}

/// `slot,rank,item_id,aspect_list,utility_at_selection`, aspects joined by `|`.
pub fn write_lists<W: Write>(
    out: W,
    lists: &[RankedList],
    aspect_map: &BTreeMap<String, Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(["slot", "rank", "item_id", "aspect_list", "utility_at_selection"])
        .map_err(err)?;
    for list in lists {
        for (i, id) in list.positions.iter().enumerate() {
            let aspects = aspect_map.get(id).map(|a| a.join("|")).unwrap_or_default();
            let utility = list.utilities.get(i).copied().unwrap_or(f64::NAN);
            w.write_record([
                list.generated_at.to_string(),
                (i + 1).to_string(),
                id.clone(),
                aspects,
                utility.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Reads lists back in file order, grouping consecutive rows of one slot.
pub fn read_lists<R: std::io::Read>(input: R) -> Result<Vec<RankedList>> {
    let mut r = csv::Reader::from_reader(input);
    let mut lists: Vec<RankedList> = Vec::new();
    for row in r.deserialize::<(usize, usize, String, String, f64)>() {
        let (slot, rank, id, _, utility) = row.map_err(|e| Error::InvalidInput(e.to_string()))?;
        if rank == 1 || lists.last().is_none_or(|l| l.generated_at != slot) {
            lists.push(RankedList::plain(Vec::new(), Vec::new(), slot));
        }
        let l = lists.last_mut().expect("pushed above");
        l.positions.push(id);
        l.utilities.push(utility);
        l.fallback.push(false);
    }
    Ok(lists)
}
