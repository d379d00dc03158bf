//! Replays the skewed synthetic workload under all seven ranking models and
//! prints the fairness, diversity and deviation summary.
//!
//! cargo run --release --example compare_models -- [seed]

use std::collections::BTreeMap;

use fairlist::exposure::SlotSchedule;
use fairlist::metrics::{build_report, summary_table, ReportOptions};
use fairlist::recommender::{Prediction, RecommendedPool};
use fairlist::simulator::synthetic::{generate_synthetic, SyntheticWorkloadSpec};
use fairlist::simulator::{run_comparison, DepthMode, ModelVariant, ReplayContext};

fn main() -> fairlist::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed must be an integer"));
    let spec = SyntheticWorkloadSpec::skewed();
    let w = generate_synthetic(&spec, seed)?;
    // ground-truth audience scores stand in for a trained model
    let pool = RecommendedPool::from_liked(&spec.topic, 0, &w.items, |it| {
        let s = w.scores[&it.item_id];
        Some(Prediction {
            probability: (1.0 + s) / 2.0,
            label: s > 0.0,
        })
    })?;
    let schedule = SlotSchedule::default();
    let ctx = ReplayContext {
        sessions: &w.sessions,
        items: &w.items,
        pool: &pool,
        traffic: &w.traffic,
        schedule: &schedule,
        depth_mode: DepthMode::SampleDepth,
        min_share: 0.05,
    };
    let runs = run_comparison(&[(0, ctx)], &ModelVariant::ALL, seed)?;
    let aspects: BTreeMap<String, Vec<String>> = w
        .items
        .iter()
        .map(|i| (i.item_id.clone(), i.aspects.iter().cloned().collect()))
        .collect();
    let ratings = w.items.iter().map(|i| (i.item_id.clone(), i.rating)).collect();
    let report = build_report("compare", &runs, &aspects, &ratings, ReportOptions::default())?;
    println!("liked-item shares: {:?}\n", pool.beta);
    print!("{}", summary_table(&report));
    println!();
    for ((_, v), o) in &runs {
        let shares: Vec<String> = o
            .exposure_by_aspect
            .iter()
            .map(|(a, e)| format!("{a} {:.3}", *e as f64 / o.listens as f64))
            .collect();
        println!("{:<9} {} listens: {}", v.name(), o.listens, shares.join(", "));
    }
    Ok(())
}
