//! Computes the inequality, concentration and deviation metrics on toy data
//! and writes a report in both output formats.

use std::collections::BTreeMap;

use fairlist::metrics::{emit_report, gini, hhi, load_report, lorenz_points, MetricsReport, ReportFormat};
use fairlist::ranker::RankedList;
use fairlist::simulator::ModelVariant;

fn main() -> fairlist::Result<()> {
    let exposure = [120.0, 40.0, 25.0, 10.0, 5.0];
    println!("gini {:.4}", gini(&exposure)?);
    println!("gini of (1,0,0,0) {}", gini(&[1.0, 0.0, 0.0, 0.0])?);
    println!("lorenz {:?}", lorenz_points(&exposure)?);

    let aspects: BTreeMap<String, Vec<String>> = (0..10)
        .map(|i| (format!("i{i}"), vec![format!("a{}", i % 5)]))
        .collect();
    let list = RankedList::plain(aspects.keys().cloned().collect(), vec![0.0; 10], 0);
    println!("hhi of a 5-way uniform list {}", hhi(&list, &aspects)?);

    let mut report = MetricsReport {
        run_id: "toy".into(),
        variants: vec![ModelVariant::Policy3c],
        ..Default::default()
    };
    report.gini_by_variant.insert(ModelVariant::Policy3c, gini(&exposure)?);
    report.lorenz_points.insert(ModelVariant::Policy3c, lorenz_points(&exposure)?);
    report.hhi_distribution.insert(ModelVariant::Policy3c, vec![hhi(&list, &aspects)?]);
    report.rating_cdf.insert(ModelVariant::Policy3c, BTreeMap::new());

    let dir = std::env::temp_dir().join("fairlist-metrics-example");
    for format in [ReportFormat::Delimited, ReportFormat::Structured] {
        let files = emit_report(&report, &dir, format)?;
        let back = load_report(&dir, "toy", format)?;
        println!("{format:?}: {} file(s), round trip equal: {}", files.len(), back == report);
    }
    println!("written to {}", dir.display());
    Ok(())
}
