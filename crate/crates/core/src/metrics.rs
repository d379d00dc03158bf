//! Fairness, diversity and satisfaction metrics over simulation outcomes, and
//! report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranker::RankedList;
use crate::simulator::{ExposureOutcome, ModelVariant};

fn check_values(values: &[f64], what: &'static str) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput(format!("{what} needs at least one value")));
    }
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput(format!("{what} needs non-negative values")));
    }
    let total: f64 = values.iter().sum();
    if total == 0.0 {
        return Err(Error::AllZero(what));
    }
    Ok(total)
}

/// Gini coefficient, evaluated from the ascending sort as
/// Σ (2i − n − 1) x_(i) / (n Σ x).
pub fn gini(values: &[f64]) -> Result<f64> {
    let total = check_values(values, "gini")?;
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let weighted: f64 = v
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x)
        .sum();
    Ok((weighted / (n * total)).max(0.0))
}

/// Lorenz curve: (0, 0) followed by (k/n, share of the k smallest values).
pub fn lorenz_points(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_values(values, "lorenz")?;
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut cumulative = Vec::with_capacity(v.len());
    let mut running = 0.0;
    for x in &v {
        running += x;
        cumulative.push(running);
    }
    let mut points = vec![(0.0, 0.0)];
    points.extend(
        cumulative
            .iter()
            .enumerate()
            .map(|(k, c)| ((k as f64 + 1.0) / n, c / running)),
    );
    Ok(points)
}

/// Herfindahl-Hirschman index of the list's aspect-slot shares; an item with
/// several aspects fills one slot per aspect.
pub fn hhi(list: &RankedList, aspect_map: &BTreeMap<String, Vec<String>>) -> Result<f64> {
    if list.is_empty() {
        return Err(Error::EmptyList);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut slots = 0usize;
    for id in &list.positions {
        let aspects = aspect_map.get(id).ok_or_else(|| Error::UnknownItem(id.clone()))?;
        if aspects.is_empty() {
            return Err(Error::InvalidInput(format!("item {id} has no aspect")));
        }
        for a in aspects {
            *counts.entry(a).or_insert(0) += 1;
            slots += 1;
        }
    }
    // integer numerator so uniform lists give exact values such as 0.2
    let squares: usize = counts.values().map(|&c| c * c).sum();
    Ok(squares as f64 / (slots * slots) as f64)
}

/// RMSE of per-item exposure against `reference`, divided by the reference's
/// mean per-item exposure. Items missing on one side count as zero there.
pub fn normalized_rmse(outcome: &ExposureOutcome, reference: &ExposureOutcome) -> Result<f64> {
    nrmse_maps(&outcome.exposure_by_item, &reference.exposure_by_item)
}

fn nrmse_maps(outcome: &BTreeMap<String, u64>, reference: &BTreeMap<String, u64>) -> Result<f64> {
    let mut ids: Vec<&String> = reference.keys().chain(outcome.keys()).collect();
    ids.sort();
    ids.dedup();
    if ids.is_empty() {
        return Err(Error::ZeroReference);
    }
    let n = ids.len() as f64;
    let get = |m: &BTreeMap<String, u64>, id: &String| m.get(id).copied().unwrap_or(0) as f64;
    let mean_ref = ids.iter().map(|id| get(reference, id)).sum::<f64>() / n;
    if mean_ref == 0.0 {
        return Err(Error::ZeroReference);
    }
    let mse = ids
        .iter()
        .map(|id| {
            let d = get(outcome, id) - get(reference, id);
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(mse.sqrt() / mean_ref)
}

/// Per rating class, item exposures ascending paired with the cumulative
/// fraction of items.
pub fn rating_exposure_cdf(
    exposure_by_item: &BTreeMap<String, u64>,
    ratings: &BTreeMap<String, u8>,
) -> BTreeMap<u8, Vec<(f64, f64)>> {
    let mut by_rating: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for (id, &e) in exposure_by_item {
        if let Some(&r) = ratings.get(id) {
            by_rating.entry(r).or_default().push(e as f64);
        }
    }
    by_rating
        .into_iter()
        .map(|(r, mut v)| {
            v.sort_by(f64::total_cmp);
            let n = v.len() as f64;
            let points = v.into_iter().enumerate().map(|(k, e)| (e, (k as f64 + 1.0) / n)).collect();
            (r, points)
        })
        .collect()
}

/// Minimum, lower quartile, median, upper quartile and maximum, with linear
/// interpolation between order statistics.
pub fn quartiles(values: &[f64]) -> Option<[f64; 5]> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Some([v[0], q(0.25), q(0.5), q(0.75), v[v.len() - 1]])
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub run_id: String,
    pub variants: Vec<ModelVariant>,
    /// Over aspect exposure totals, summed across clusters.
    pub gini_by_variant: BTreeMap<ModelVariant, f64>,
    pub lorenz_points: BTreeMap<ModelVariant, Vec<(f64, f64)>>,
    pub hhi_distribution: BTreeMap<ModelVariant, Vec<f64>>,
    pub nrmse_by_variant_cluster: BTreeMap<ModelVariant, BTreeMap<usize, f64>>,
    pub rating_cdf: BTreeMap<ModelVariant, BTreeMap<u8, Vec<(f64, f64)>>>,
    /// Present when item-level Gini was requested.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub item_gini_by_variant: BTreeMap<ModelVariant, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
}

impl MetricsReport {
    pub fn median_hhi(&self, v: ModelVariant) -> Option<f64> {
        self.hhi_distribution.get(&v).and_then(|h| quartiles(h)).map(|q| q[2])
    }

    pub fn mean_nrmse(&self, v: ModelVariant) -> Option<f64> {
        let m = self.nrmse_by_variant_cluster.get(&v)?;
        (!m.is_empty()).then(|| m.values().sum::<f64>() / m.len() as f64)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReportOptions {
    pub item_gini: bool,
}

/// Builds the report from outcomes keyed by (cluster, variant). NRMSE is
/// computed per cluster against that cluster's UserPreference outcome; when
/// none was simulated it is left out and a notice is added.
pub fn build_report(
    run_id: &str,
    outcomes: &BTreeMap<(usize, ModelVariant), ExposureOutcome>,
    aspect_map: &BTreeMap<String, Vec<String>>,
    ratings: &BTreeMap<String, u8>,
    options: ReportOptions,
) -> Result<MetricsReport> {
    let mut report = MetricsReport {
        run_id: run_id.to_string(),
        ..Default::default()
    };
    let mut variants: Vec<ModelVariant> = outcomes.keys().map(|(_, v)| *v).collect();
    variants.sort();
    variants.dedup();
    for &v in &variants {
        let mine: Vec<&ExposureOutcome> = outcomes.iter().filter(|((_, w), _)| *w == v).map(|(_, o)| o).collect();
        let mut by_aspect: BTreeMap<&str, f64> = BTreeMap::new();
        let mut by_item: BTreeMap<String, u64> = BTreeMap::new();
        let mut hhis = Vec::new();
        for o in &mine {
            for (a, &e) in &o.exposure_by_aspect {
                *by_aspect.entry(a).or_insert(0.0) += e as f64;
            }
            for (id, &e) in &o.exposure_by_item {
                *by_item.entry(id.clone()).or_insert(0) += e;
            }
            for l in o.lists.iter().filter(|l| !l.is_empty()) {
                hhis.push(hhi(l, aspect_map)?);
            }
        }
        let aspect_values: Vec<f64> = by_aspect.values().copied().collect();
        match gini(&aspect_values) {
            Ok(g) => {
                report.gini_by_variant.insert(v, g);
                report.lorenz_points.insert(v, lorenz_points(&aspect_values)?);
            }
            Err(Error::AllZero(_)) | Err(Error::InvalidInput(_)) => {
                report.notices.push(format!("variant {v}: no exposure, gini and lorenz omitted"));
            }
            Err(e) => return Err(e),
        }
        if options.item_gini {
            let item_values: Vec<f64> = by_item.values().map(|&e| e as f64).collect();
            if let Ok(g) = gini(&item_values) {
                report.item_gini_by_variant.insert(v, g);
            }
        }
        report.hhi_distribution.insert(v, hhis);
        report.rating_cdf.insert(v, rating_exposure_cdf(&by_item, ratings));
    }
    if variants.contains(&ModelVariant::UserPreference) {
        for ((c, v), o) in outcomes {
            let reference = outcomes
                .get(&(*c, ModelVariant::UserPreference))
                .ok_or_else(|| Error::InvalidInput(format!("cluster {c} has no user_pref outcome")))?;
            report
                .nrmse_by_variant_cluster
                .entry(*v)
                .or_default()
                .insert(*c, normalized_rmse(o, reference)?);
        }
    } else if !variants.is_empty() {
        report
            .notices
            .push("user_pref was not simulated; normalized RMSE omitted".to_string());
    }
    report.variants = variants;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Delimited,
    Structured,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delimited" => Ok(ReportFormat::Delimited),
            "structured" => Ok(ReportFormat::Structured),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn pairs_text(header: &str, points: &[(f64, f64)]) -> String {
    let mut s = format!("{header}\n");
    for (x, y) in points {
        let _ = writeln!(s, "{x},{y}");
    }
    s
}

/// Writes the report into `dir` and returns the files written. Delimited
/// output has one `<run-id>.<metric>.<variant>.txt` file per metric and
/// variant plus `<run-id>.summary.txt`; structured output is a single
/// `<run-id>.report.json`.
pub fn emit_report(report: &MetricsReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let id = &report.run_id;
    let mut written = Vec::new();
    let mut emit = |name: String, text: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &text)?;
        written.push(path);
        Ok(())
    };
    if format == ReportFormat::Structured {
        let text = serde_json::to_string_pretty(report).map_err(|e| Error::InvalidInput(e.to_string()))?;
        emit(format!("{id}.report.json"), text + "\n")?;
        return Ok(written);
    }
    for &v in &report.variants {
        if let Some(g) = report.gini_by_variant.get(&v) {
            emit(format!("{id}.gini.{v}.txt"), format!("gini\n{g}\n"))?;
        }
        if let Some(g) = report.item_gini_by_variant.get(&v) {
            emit(format!("{id}.item_gini.{v}.txt"), format!("item_gini\n{g}\n"))?;
        }
        if let Some(p) = report.lorenz_points.get(&v) {
            emit(format!("{id}.lorenz.{v}.txt"), pairs_text("population_fraction,exposure_fraction", p))?;
        }
        let mut h = String::from("list,hhi\n");
        for (i, x) in report.hhi_distribution.get(&v).into_iter().flatten().enumerate() {
            let _ = writeln!(h, "{i},{x}");
        }
        emit(format!("{id}.hhi.{v}.txt"), h)?;
        if let Some(m) = report.nrmse_by_variant_cluster.get(&v) {
            let mut s = String::from("cluster,nrmse\n");
            for (c, x) in m {
                let _ = writeln!(s, "{c},{x}");
            }
            emit(format!("{id}.nrmse.{v}.txt"), s)?;
        }
        let mut s = String::from("rating,exposure,cumulative_fraction\n");
        for (r, points) in report.rating_cdf.get(&v).into_iter().flatten() {
            for (e, f) in points {
                let _ = writeln!(s, "{r},{e},{f}");
            }
        }
        emit(format!("{id}.rating_cdf.{v}.txt"), s)?;
    }
    emit(format!("{id}.summary.txt"), summary_table(report))?;
    Ok(written)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

/// One row per variant: Gini, median HHI and mean NRMSE across clusters.
pub fn summary_table(report: &MetricsReport) -> String {
    let mut s = format!("{:<10} {:>8} {:>11} {:>11}\n", "model", "gini", "median_hhi", "mean_nrmse");
    for &v in &report.variants {
        let _ = writeln!(
            s,
            "{:<10} {:>8} {:>11} {:>11}",
            v.name(),
            opt(report.gini_by_variant.get(&v).copied()),
            opt(report.median_hhi(v)),
            opt(report.mean_nrmse(v)),
        );
    }
    for n in &report.notices {
        let _ = writeln!(s, "# {n}");
    }
    s
}

fn parse_rows(path: &Path, text: &str, width: usize) -> Result<Vec<Vec<String>>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::format(path, e))?;
        if rec.len() != width {
            return Err(Error::format(path, format!("expected {width} columns, got {}", rec.len())));
        }
        rows.push(rec.iter().map(String::from).collect());
    }
    Ok(rows)
}

fn num<T: std::str::FromStr>(path: &Path, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::format(path, format!("bad number {s:?}")))
}

/// Reads back a report written by `emit_report` in either format. Notices
/// are not part of the delimited files.
pub fn load_report(dir: &Path, run_id: &str, format: ReportFormat) -> Result<MetricsReport> {
    if format == ReportFormat::Structured {
        let path = dir.join(format!("{run_id}.report.json"));
        let text = read_file(&path)?;
        return serde_json::from_str(&text).map_err(|e| Error::format(&path, e));
    }
    let summary_path = dir.join(format!("{run_id}.summary.txt"));
    let summary = read_file(&summary_path)?;
    let mut report = MetricsReport {
        run_id: run_id.to_string(),
        ..Default::default()
    };
    for line in summary.lines().skip(1).filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let name = line.split_whitespace().next().unwrap_or_default();
        report.variants.push(name.parse()?);
    }
    for &v in &report.variants.clone() {
        let file = |metric: &str| dir.join(format!("{run_id}.{metric}.{v}.txt"));
        let p = file("gini");
        if p.exists() {
            let rows = parse_rows(&p, &read_file(&p)?, 1)?;
            if let Some(r) = rows.first() {
                report.gini_by_variant.insert(v, num(&p, &r[0])?);
            }
        }
        let p = file("item_gini");
        if p.exists() {
            let rows = parse_rows(&p, &read_file(&p)?, 1)?;
            if let Some(r) = rows.first() {
                report.item_gini_by_variant.insert(v, num(&p, &r[0])?);
            }
        }
        let p = file("lorenz");
        if p.exists() {
            let rows = parse_rows(&p, &read_file(&p)?, 2)?;
            let pts = rows
                .iter()
                .map(|r| Ok((num(&p, &r[0])?, num(&p, &r[1])?)))
                .collect::<Result<Vec<_>>>()?;
            report.lorenz_points.insert(v, pts);
        }
        let p = file("hhi");
        let rows = parse_rows(&p, &read_file(&p)?, 2)?;
        report
            .hhi_distribution
            .insert(v, rows.iter().map(|r| num(&p, &r[1])).collect::<Result<Vec<_>>>()?);
        let p = file("nrmse");
        if p.exists() {
            let rows = parse_rows(&p, &read_file(&p)?, 2)?;
            let m = rows
                .iter()
                .map(|r| Ok((num(&p, &r[0])?, num(&p, &r[1])?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            report.nrmse_by_variant_cluster.insert(v, m);
        }
        let p = file("rating_cdf");
        let rows = parse_rows(&p, &read_file(&p)?, 3)?;
        let mut cdf: BTreeMap<u8, Vec<(f64, f64)>> = BTreeMap::new();
        for r in rows {
            cdf.entry(num(&p, &r[0])?)
                .or_default()
                .push((num(&p, &r[1])?, num(&p, &r[2])?));
        }
        report.rating_cdf.insert(v, cdf);
    }
    Ok(report)
}
