//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fairlist::exposure::SlotSchedule;
use fairlist::recommender::{Item, Prediction, RecommendedPool};
use fairlist::simulator::synthetic::{generate_synthetic, SyntheticWorkload, SyntheticWorkloadSpec};
use fairlist::simulator::{run_comparison, DepthMode, ExposureOutcome, ModelVariant, ReplayContext};

/// Rank-by-rank reference ranking. `items[i]` lists the aspect indices of
/// item `i`; items are already in preference order. `tenths[a]` is aspect
/// `a`'s share in tenths, so the bound on aspect `a` in the top `p` ranks is
/// the exact integer ceil(p * tenths[a] / 10). At each rank every unpicked
/// item is tried in order and the prefix counts are recomputed from scratch;
/// the first feasible item wins, otherwise the first unpicked item is placed
/// and flagged. Returns (item index, flagged) per rank.
pub fn oracle_rank(items: &[Vec<usize>], tenths: &[u32], n: usize) -> Vec<(usize, bool)> {
    oracle_rank_scaled(items, tenths, 10, n)
}

/// As `oracle_rank`, with shares given as multiples of `1 / scale`.
pub fn oracle_rank_scaled(items: &[Vec<usize>], shares: &[u32], scale: u32, n: usize) -> Vec<(usize, bool)> {
    let bound = |a: usize, p: usize| -> usize {
        let s = shares.get(a).copied().unwrap_or(0) as usize;
        (p * s).div_ceil(scale as usize)
    };
    let mut out: Vec<(usize, bool)> = Vec::new();
    for p in 1..=n.min(items.len()) {
        let taken: BTreeSet<usize> = out.iter().map(|(i, _)| *i).collect();
        let feasible = |cand: usize| {
            items[cand].iter().all(|&a| {
                let count = out.iter().filter(|(i, _)| items[*i].contains(&a)).count() + 1;
                count <= bound(a, p)
            })
        };
        let open: Vec<usize> = (0..items.len()).filter(|i| !taken.contains(i)).collect();
        match open.iter().copied().find(|&c| feasible(c)) {
            Some(c) => out.push((c, false)),
            None => out.push((open[0], true)),
        }
    }
    out
}

pub fn aspect_name(a: usize) -> String {
    format!("a{a}")
}

/// One seed of the skewed synthetic workload with its ground-truth pool.
pub struct SkewedRun {
    pub seed: u64,
    pub workload: SyntheticWorkload,
    pub pool: RecommendedPool,
    pub schedule: SlotSchedule,
}

impl SkewedRun {
    pub fn new(seed: u64) -> Self {
        let spec = SyntheticWorkloadSpec::skewed();
        let workload = generate_synthetic(&spec, seed).expect("synthetic workload");
        let pool = RecommendedPool::from_liked(&spec.topic, 0, &workload.items, |it| {
            let s = workload.scores[&it.item_id];
            Some(Prediction {
                probability: (1.0 + s) / 2.0,
                label: s > 0.0,
            })
        })
        .expect("non-empty pool");
        SkewedRun {
            seed,
            workload,
            pool,
            schedule: SlotSchedule::default(),
        }
    }

    pub fn context(&self) -> ReplayContext<'_> {
        ReplayContext {
            sessions: &self.workload.sessions,
            items: &self.workload.items,
            pool: &self.pool,
            traffic: &self.workload.traffic,
            schedule: &self.schedule,
            depth_mode: DepthMode::SampleDepth,
            min_share: 0.05,
        }
    }

    pub fn run(&self, variants: &[ModelVariant]) -> BTreeMap<(usize, ModelVariant), ExposureOutcome> {
        run_comparison(&[(0, self.context())], variants, self.seed).expect("simulation")
    }

    pub fn items(&self) -> &[Item] {
        &self.workload.items
    }

    pub fn aspect_map(&self) -> BTreeMap<String, Vec<String>> {
        self.workload
            .items
            .iter()
            .map(|i| (i.item_id.clone(), i.aspects.iter().cloned().collect()))
            .collect()
    }

    pub fn ratings(&self) -> BTreeMap<String, u8> {
        self.workload.items.iter().map(|i| (i.item_id.clone(), i.rating)).collect()
    }
}
