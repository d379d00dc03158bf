//! The command pipeline: ingest, cluster, train, plan, simulate, report.
//! Stages talk only through files under the output directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calllog::{
    assemble_sessions, estimate_traffic_profile, label_sessions, parse_call_logs, write_events, ColumnSchema,
    LabeledEvent, ListenEvent, Session, Source, TrafficProfile,
};
use crate::config::{ClassifierMode, KChoice, RunConfig};
use crate::error::{Error, Result};
use crate::exposure::{aspect_shares, inventory_window, item_targets};
use crate::metrics::{build_report, emit_report, summary_table, ReportOptions};
use crate::ranker::{read_lists, write_lists};
use crate::recommender::forest::{train, TreeEnsemble};
use crate::recommender::{
    label_items_for_cluster, read_items, recommended_pool, write_items, Item, ItemLabel, LikeModel, OracleModel,
    RecommendedPool, TopicFeatures,
};
use crate::simulator::{derive_seed, read_outcomes, run_comparison, write_outcomes, ExposureOutcome, ModelVariant, ReplayContext};
use crate::user_model::{
    cluster_cost_ratio, default_gamma, elbow_select_k, filter_engaged_users, global_preference_vector, k_prototypes,
    read_assignment, summarize_users, write_assignment, ClusterMetadata, PreferenceVector, SourceTopic,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Config,
    Ingest,
    Cluster,
    Train,
    Plan,
    Simulate,
    Report,
}

impl Stage {
    pub const PIPELINE: [Stage; 6] = [
        Stage::Ingest,
        Stage::Cluster,
        Stage::Train,
        Stage::Plan,
        Stage::Simulate,
        Stage::Report,
    ];

    /// 0 is success; train and plan failures share the simulate code since
    /// both only produce simulation inputs.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 1,
            Stage::Ingest => 2,
            Stage::Cluster => 3,
            Stage::Train | Stage::Plan | Stage::Simulate => 4,
            Stage::Report => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Cluster => "cluster",
            Stage::Train => "train",
            Stage::Plan => "plan",
            Stage::Simulate => "simulate",
            Stage::Report => "report",
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub stage: Stage,
    pub error: Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage.name(), self.error)
    }
}

impl std::error::Error for Failure {}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, Failure>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, Failure> {
        self.map_err(|error| Failure { stage, error })
    }
}

/// Output locations, all below `paths.output_dir`.
#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    fn dir(&self, stage: &str) -> PathBuf {
        self.root.join(stage)
    }

    pub fn events(&self) -> PathBuf {
        self.dir("ingest").join("events.csv")
    }
    pub fn items(&self) -> PathBuf {
        self.dir("ingest").join("items.csv")
    }
    pub fn traffic(&self) -> PathBuf {
        self.dir("ingest").join("traffic.json")
    }
    pub fn rejected(&self) -> PathBuf {
        self.dir("ingest").join("rejected.txt")
    }
    pub fn assignment(&self) -> PathBuf {
        self.dir("cluster").join("assignment.csv")
    }
    pub fn centroids(&self) -> PathBuf {
        self.dir("cluster").join("centroids.csv")
    }
    pub fn cost_curve(&self) -> PathBuf {
        self.dir("cluster").join("cost_curve.csv")
    }
    pub fn cluster_metadata(&self) -> PathBuf {
        self.dir("cluster").join("metadata.json")
    }
    pub fn model(&self, c: usize) -> PathBuf {
        self.dir("train").join(format!("cluster-{c}.model.json"))
    }
    pub fn pool_items(&self, c: usize) -> PathBuf {
        self.dir("train").join(format!("cluster-{c}.pool.csv"))
    }
    pub fn pool_scores(&self, c: usize) -> PathBuf {
        self.dir("train").join(format!("cluster-{c}.scores.csv"))
    }
    pub fn pool_beta(&self, c: usize) -> PathBuf {
        self.dir("train").join(format!("cluster-{c}.beta.csv"))
    }
    pub fn train_summary(&self) -> PathBuf {
        self.dir("train").join("summary.json")
    }
    pub fn cluster_traffic(&self, c: usize) -> PathBuf {
        self.dir("plan").join(format!("cluster-{c}.traffic.json"))
    }
    pub fn targets(&self, c: usize, v: ModelVariant) -> PathBuf {
        self.dir("plan").join(format!("cluster-{c}.{v}.targets.csv"))
    }
    pub fn shares(&self, c: usize, v: ModelVariant) -> PathBuf {
        self.dir("plan").join(format!("cluster-{c}.{v}.shares.csv"))
    }
    pub fn outcome(&self, c: usize, v: ModelVariant) -> PathBuf {
        self.dir("simulate").join(format!("{v}.cluster-{c}.csv"))
    }
    pub fn lists(&self, c: usize, v: ModelVariant) -> PathBuf {
        self.dir("simulate").join(format!("{v}.cluster-{c}.lists.csv"))
    }
    pub fn manifest(&self) -> PathBuf {
        self.dir("simulate").join("manifest.json")
    }
    pub fn report_dir(&self) -> PathBuf {
        self.dir("report")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Runs `write` into a fresh file, attaching the path to any error.
fn write_with(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    write(&mut w).map_err(|e| match e {
        Error::Io { .. } | Error::Format { .. } => e,
        other => Error::format(path, other),
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_with<T>(path: &Path, read: impl FnOnce(BufReader<File>) -> Result<T>) -> Result<T> {
    read(open(path)?).map_err(|e| match e {
        Error::Io { .. } | Error::Format { .. } => e,
        other => Error::format(path, other),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::InvalidInput(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    read_with(path, |r| serde_json::from_reader(r).map_err(|e| Error::InvalidInput(e.to_string())))
}

fn read_events(path: &Path) -> Result<Vec<ListenEvent>> {
    let parsed = read_with(path, |r| parse_call_logs(r, &ColumnSchema::default()))?;
    if let Some(d) = parsed.rejected.first() {
        return Err(Error::format(path, format!("stored events are malformed: {d}")));
    }
    Ok(parsed.events)
}

/// Summary of one ingest run.
#[derive(Clone, Debug, PartialEq)]
pub struct IngestSummary {
    pub events: usize,
    pub sessions: usize,
    pub rejected: usize,
    pub items: usize,
}

/// Parses every log file, writes the event store, item catalogue, traffic
/// profile and rejection diagnostics.
pub fn cmd_ingest(config: &RunConfig) -> Result<IngestSummary> {
    let layout = Layout::new(&config.paths.output_dir);
    if config.paths.logs.is_empty() {
        return Err(Error::Config("paths.logs lists no call-log files".into()));
    }
    let mut events = Vec::new();
    let mut diagnostics = Vec::new();
    for path in &config.paths.logs {
        let parsed = read_with(path, |r| parse_call_logs(r, &config.schema))?;
        for d in &parsed.rejected {
            eprintln!("{}: {d}", path.display());
            diagnostics.push(format!("{}: {d}", path.display()));
        }
        events.extend(parsed.events);
    }
    if events.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no valid events in {} file(s); {} row(s) rejected",
            config.paths.logs.len(),
            diagnostics.len()
        )));
    }
    let items = match &config.paths.items {
        Some(p) => read_with(p, read_items)?,
        None => crate::recommender::catalogue_from_events(&events),
    };
    let known: BTreeSet<&str> = items.iter().map(|i| i.item_id.as_str()).collect();
    if let Some(ev) = events.iter().find(|e| !known.contains(e.item_id.as_str())) {
        return Err(Error::UnknownItem(ev.item_id.clone()));
    }
    let sessions = assemble_sessions(events);
    let traffic = estimate_traffic_profile(&sessions, config.schedule.list_length)?;
    let flat: Vec<ListenEvent> = sessions.iter().flat_map(|s| s.events.iter().cloned()).collect();
    write_with(&layout.events(), |w| write_events(w, &flat))?;
    write_with(&layout.items(), |w| write_items(w, &items))?;
    write_json(&layout.traffic(), &traffic)?;
    write_with(&layout.rejected(), |w| {
        for d in &diagnostics {
            writeln!(w, "{d}").map_err(|e| Error::io(layout.rejected(), e))?;
        }
        Ok(())
    })?;
    let summary = IngestSummary {
        events: flat.len(),
        sessions: sessions.len(),
        rejected: diagnostics.len(),
        items: items.len(),
    };
    eprintln!(
        "ingest: {} events in {} sessions, {} rejected rows, {} items",
        summary.events, summary.sessions, summary.rejected, summary.items
    );
    Ok(summary)
}

fn labeled(config: &RunConfig, sessions: &[Session]) -> Result<Vec<LabeledEvent>> {
    label_sessions(sessions, config.thresholds.heard_threshold)
}

fn write_centroids<W: Write>(out: W, centroids: &[PreferenceVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(["cluster", "source", "topic", "score", "heard"]).map_err(err)?;
    for (c, v) in centroids.iter().enumerate() {
        for (k, p) in v.iter() {
            w.write_record([
                c.to_string(),
                k.source.to_string(),
                k.topic.clone(),
                p.score.to_string(),
                p.heard.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

fn read_centroids<R: std::io::Read>(input: R, k: usize) -> Result<Vec<PreferenceVector>> {
    let mut out = vec![PreferenceVector::new(); k];
    let mut r = csv::Reader::from_reader(input);
    for row in r.deserialize::<(usize, String, String, f64, bool)>() {
        let (c, source, topic, score, heard) = row.map_err(|e| Error::InvalidInput(e.to_string()))?;
        let source: Source = source.parse().map_err(Error::InvalidInput)?;
        out.get_mut(c)
            .ok_or(Error::UnknownCluster(c))?
            .set(SourceTopic::new(source, topic), score, heard);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSummary {
    pub users: usize,
    pub k: usize,
}

/// Filters engaged users, clusters them and writes the assignment,
/// centroids, cost curve and metadata.
pub fn cmd_cluster(config: &RunConfig) -> Result<ClusterSummary> {
    let layout = Layout::new(&config.paths.output_dir);
    let sessions = assemble_sessions(read_events(&layout.events())?);
    let labeled = labeled(config, &sessions)?;
    let activity = summarize_users(&labeled);
    let global = global_preference_vector(&labeled);
    let survivors = filter_engaged_users(&activity, &config.thresholds.filter, &global)?.divergent;
    eprintln!("cluster: {} of {} users pass the engagement filter", survivors.len(), activity.len());
    let vectors: Vec<PreferenceVector> = survivors.iter().map(|u| activity[u].vector.clone()).collect();
    let cc = &config.clustering;
    let gamma = cc.gamma.unwrap_or_else(|| default_gamma(&vectors));
    let (k, curve) = match cc.k {
        KChoice::Fixed(k) => (k, None),
        KChoice::Auto(_) => {
            let hi = cc.k_max.min(vectors.len());
            let e = elbow_select_k(&vectors, cc.k_min..=hi, gamma, cc.seed)?;
            (e.chosen_k, Some(e.curve))
        }
    };
    let assignment = k_prototypes(&vectors, k, gamma, cc.seed)?;
    let curve = curve.unwrap_or_else(|| vec![(k, cluster_cost_ratio(&vectors, &assignment))]);
    eprintln!("cluster: chose k = {k}");
    write_with(&layout.assignment(), |w| write_assignment(w, &survivors, &assignment))?;
    write_with(&layout.centroids(), |w| write_centroids(w, &assignment.centroids))?;
    write_with(&layout.cost_curve(), |w| {
        writeln!(w, "k,cost_ratio").map_err(|e| Error::io(layout.cost_curve(), e))?;
        for (k, c) in &curve {
            writeln!(w, "{k},{c}").map_err(|e| Error::io(layout.cost_curve(), e))?;
        }
        Ok(())
    })?;
    write_json(
        &layout.cluster_metadata(),
        &ClusterMetadata {
            k,
            gamma,
            seed: cc.seed,
            cost_curve: curve,
        },
    )?;
    Ok(ClusterSummary {
        users: survivors.len(),
        k,
    })
}

/// Everything the later stages read back from ingest and cluster.
struct Upstream {
    sessions: Vec<Session>,
    items: Vec<Item>,
    assignment: BTreeMap<String, usize>,
    k: usize,
}

fn load_upstream(layout: &Layout) -> Result<Upstream> {
    let sessions = assemble_sessions(read_events(&layout.events())?);
    let items = read_with(&layout.items(), read_items)?;
    let assignment = read_with(&layout.assignment(), read_assignment)?;
    let meta: ClusterMetadata = read_json(&layout.cluster_metadata())?;
    if let Some(&c) = assignment.values().find(|&&c| c >= meta.k) {
        return Err(Error::format(layout.assignment(), format!("cluster {c} exceeds k = {}", meta.k)));
    }
    Ok(Upstream {
        sessions,
        items,
        assignment,
        k: meta.k,
    })
}

/// The configured topic, or the only topic in the catalogue.
fn resolve_topic(config: &RunConfig, items: &[Item]) -> Result<String> {
    let topics: BTreeSet<&str> = items.iter().map(|i| i.topic.as_str()).collect();
    match &config.simulation.topic {
        Some(t) if topics.contains(t.as_str()) => Ok(t.clone()),
        Some(t) => Err(Error::Config(format!("topic {t:?} has no items"))),
        None if topics.len() == 1 => Ok(topics.into_iter().next().expect("one topic").to_string()),
        None => Err(Error::Config(format!(
            "simulation.topic must name one of {} topics",
            topics.len()
        ))),
    }
}

/// Sessions of one cluster's callers, restricted to listens on `topic`.
fn cluster_sessions(up: &Upstream, topic: &str, cluster: usize) -> Vec<Session> {
    up.sessions
        .iter()
        .filter(|s| up.assignment.get(&s.caller_id) == Some(&cluster))
        .filter_map(|s| {
            let events: Vec<ListenEvent> = s.events.iter().filter(|e| e.topic == topic).cloned().collect();
            (!events.is_empty()).then(|| Session {
                call_id: s.call_id.clone(),
                caller_id: s.caller_id.clone(),
                events,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub cluster: usize,
    pub mode: String,
    pub labeled_items: usize,
    pub liked_items: usize,
    pub validation_accuracy: Option<f64>,
    pub majority_baseline: Option<f64>,
}

/// Fits one like-model per cluster (or replays logged labels in oracle
/// mode) and writes each cluster's recommended pool.
pub fn cmd_train(config: &RunConfig) -> Result<Vec<TrainRecord>> {
    let layout = Layout::new(&config.paths.output_dir);
    let up = load_upstream(&layout)?;
    let centroids = read_with(&layout.centroids(), |r| read_centroids(r, up.k))?;
    let topic = resolve_topic(config, &up.items)?;
    let topic_items: Vec<Item> = up.items.iter().filter(|i| i.topic == topic).cloned().collect();
    let labeled = labeled(config, &up.sessions)?;
    let contributor_vectors: BTreeMap<String, PreferenceVector> =
        summarize_users(&labeled).into_iter().map(|(u, a)| (u, a.vector)).collect();
    let layout_features = TopicFeatures::from_items(&topic, &topic_items);
    let mut records = Vec::new();
    for (c, centroid) in centroids.iter().enumerate() {
        let cluster_events: Vec<LabeledEvent> = labeled
            .iter()
            .filter(|le| le.event.topic == topic && up.assignment.get(&le.event.caller_id) == Some(&c))
            .cloned()
            .collect();
        let labels = label_items_for_cluster(&cluster_events);
        let labeled_items: Vec<(&Item, bool)> = topic_items
            .iter()
            .filter_map(|it| match labels.get(&it.item_id) {
                Some(ItemLabel::Labeled { liked, .. }) => Some((it, *liked)),
                _ => None,
            })
            .collect();
        let mut record = TrainRecord {
            cluster: c,
            mode: String::new(),
            labeled_items: labeled_items.len(),
            liked_items: 0,
            validation_accuracy: None,
            majority_baseline: None,
        };
        let model: Box<dyn LikeModel> = match config.classifier.mode {
            ClassifierMode::Oracle => {
                record.mode = "oracle".into();
                Box::new(OracleModel::from_labels(&labels))
            }
            ClassifierMode::Ensemble => {
                record.mode = "ensemble".into();
                let features: Vec<_> = labeled_items
                    .iter()
                    .map(|(it, _)| layout_features.features(it, centroid, &contributor_vectors))
                    .collect();
                let targets: Vec<bool> = labeled_items.iter().map(|(_, l)| *l).collect();
                let seed = derive_seed(config.classifier.seed, c as u64);
                let trained = train(&features, &targets, &config.classifier.ensemble, seed)
                    .map_err(|e| Error::InvalidInput(format!("cluster {c}: {e}")))?;
                record.validation_accuracy = Some(trained.validation_accuracy);
                record.majority_baseline = Some(trained.majority_baseline);
                write_with(&layout.model(c), |w| trained.model.save(w))?;
                Box::new(trained.model)
            }
        };
        let mut pool = recommended_pool(model.as_ref(), &topic_items, centroid, &contributor_vectors)
            .map_err(|e| Error::InvalidInput(format!("cluster {c}: {e}")))?;
        pool.cluster = c;
        record.liked_items = pool.liked_items().len();
        write_with(&layout.pool_items(c), |w| pool.write_items(w))?;
        write_with(&layout.pool_scores(c), |w| pool.write_scores(w))?;
        write_with(&layout.pool_beta(c), |w| pool.write_beta(w))?;
        eprintln!(
            "train: cluster {c} ({}) {} labeled items, {} liked",
            record.mode, record.labeled_items, record.liked_items
        );
        records.push(record);
    }
    write_json(&layout.train_summary(), &records)?;
    Ok(records)
}

fn read_pool(layout: &Layout, topic: &str, c: usize) -> Result<RecommendedPool> {
    let items = open(&layout.pool_items(c))?;
    let scores = open(&layout.pool_scores(c))?;
    RecommendedPool::read(topic, c, items, scores).map_err(|e| Error::format(layout.pool_items(c), e))
}

/// Loads a persisted ensemble; used to check that a trained model exists.
pub fn load_model(layout: &Layout, c: usize) -> Result<TreeEnsemble> {
    read_with(&layout.model(c), TreeEnsemble::load)
}

/// Writes each cluster's traffic profile and, per policy variant, the first
/// planning window's aspect shares and item targets over the items available
/// when replay starts.
pub fn cmd_plan(config: &RunConfig) -> Result<usize> {
    let layout = Layout::new(&config.paths.output_dir);
    let up = load_upstream(&layout)?;
    let topic = resolve_topic(config, &up.items)?;
    let variants = config.variants()?;
    let ratings: BTreeMap<String, u8> = up.items.iter().map(|i| (i.item_id.clone(), i.rating)).collect();
    let created: BTreeMap<&str, _> = up.items.iter().map(|i| (i.item_id.as_str(), i.created_at)).collect();
    let mut written = 0;
    for c in 0..up.k {
        let sessions = cluster_sessions(&up, &topic, c);
        let traffic = estimate_traffic_profile(&sessions, config.schedule.list_length)
            .map_err(|e| Error::InvalidInput(format!("cluster {c}: {e}")))?;
        write_json(&layout.cluster_traffic(c), &traffic)?;
        let pool = read_pool(&layout, &topic, c)?;
        let origin = sessions.iter().map(Session::start).min().expect("non-empty sessions");
        let available = pool.restricted(|id| created.get(id).is_some_and(|t| *t <= origin));
        let inventory = inventory_window(&traffic, &config.schedule, 0, config.schedule.horizon_hours)?;
        for &v in variants.iter().filter(|v| ModelVariant::POLICIES.contains(v)) {
            let policy = v.policy(config.policy.min_share).expect("policy variant");
            let Some(pool) = available.as_ref() else {
                eprintln!("plan: cluster {c} has no liked item available at the start; {v} plan skipped");
                continue;
            };
            let shares = aspect_shares(policy.aspect_rule, &pool.beta)?;
            let plan = item_targets(&shares, pool, policy.item_rule, inventory, &ratings)?;
            write_with(&layout.targets(c, v), |w| plan.write(w))?;
            write_with(&layout.shares(c, v), |w| {
                writeln!(w, "aspect,share").map_err(|e| Error::io(layout.shares(c, v), e))?;
                for (a, s) in &shares {
                    writeln!(w, "{a},{s}").map_err(|e| Error::io(layout.shares(c, v), e))?;
                }
                Ok(())
            })?;
            written += 1;
        }
    }
    eprintln!("plan: {written} plan(s) for {} cluster(s)", up.k);
    Ok(written)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub seed: u64,
    pub config_hash: String,
    pub topic: String,
    pub variants: Vec<ModelVariant>,
    pub clusters: usize,
    pub listens: BTreeMap<String, u64>,
    pub skipped_sessions: usize,
}

fn aspect_map(items: &[Item]) -> BTreeMap<String, Vec<String>> {
    items
        .iter()
        .map(|i| (i.item_id.clone(), i.aspects.iter().cloned().collect()))
        .collect()
}

/// Replays every cluster under every configured variant and writes one
/// outcome file and one list file per (cluster, variant), plus the manifest.
pub fn cmd_simulate(config: &RunConfig) -> Result<RunManifest> {
    let layout = Layout::new(&config.paths.output_dir);
    let up = load_upstream(&layout)?;
    let topic = resolve_topic(config, &up.items)?;
    let variants = config.variants()?;
    let topic_items: Vec<Item> = up.items.iter().filter(|i| i.topic == topic).cloned().collect();
    let mut inputs = Vec::new();
    for c in 0..up.k {
        if config.classifier.mode == ClassifierMode::Ensemble {
            load_model(&layout, c)?;
        }
        let traffic: TrafficProfile = read_json(&layout.cluster_traffic(c))?;
        let pool = read_pool(&layout, &topic, c)?;
        for &v in variants.iter().filter(|v| ModelVariant::POLICIES.contains(v)) {
            let p = layout.targets(c, v);
            if !p.exists() {
                return Err(Error::io(p, std::io::Error::from(std::io::ErrorKind::NotFound)));
            }
        }
        inputs.push((c, cluster_sessions(&up, &topic, c), traffic, pool));
    }
    let contexts: Vec<(usize, ReplayContext<'_>)> = inputs
        .iter()
        .map(|(c, sessions, traffic, pool)| {
            (
                *c,
                ReplayContext {
                    sessions,
                    items: &topic_items,
                    pool,
                    traffic,
                    schedule: &config.schedule,
                    depth_mode: config.simulation.depth_mode,
                    min_share: config.policy.min_share,
                },
            )
        })
        .collect();
    let outcomes = run_comparison(&contexts, &variants, config.simulation.seed)?;
    let aspects = aspect_map(&topic_items);
    let mut listens = BTreeMap::new();
    let mut skipped = 0;
    for ((c, v), o) in &outcomes {
        write_with(&layout.outcome(*c, *v), |w| write_outcomes(w, [o], &aspects))?;
        write_with(&layout.lists(*c, *v), |w| write_lists(w, &o.lists, &aspects))?;
        listens.insert(format!("{v}.cluster-{c}"), o.listens);
        skipped += o.skipped.len();
    }
    let manifest = RunManifest {
        run_id: config.simulation.run_id.clone(),
        seed: config.simulation.seed,
        config_hash: config.hash()?,
        topic,
        variants,
        clusters: up.k,
        listens,
        skipped_sessions: skipped,
    };
    write_json(&layout.manifest(), &manifest)?;
    eprintln!(
        "simulate: {} outcome(s), {} session(s) skipped",
        outcomes.len(),
        skipped
    );
    Ok(manifest)
}

/// Reads one (cluster, variant) outcome and its lists.
pub fn load_outcome(layout: &Layout, c: usize, v: ModelVariant) -> Result<ExposureOutcome> {
    let mut map = read_with(&layout.outcome(c, v), read_outcomes)?;
    let mut o = map.remove(&(c, v)).unwrap_or_else(|| ExposureOutcome {
        variant: v,
        cluster: c,
        seed: 0,
        exposure_by_item: BTreeMap::new(),
        exposure_by_aspect: BTreeMap::new(),
        lists: Vec::new(),
        listens: 0,
        plans: Vec::new(),
        skipped: Vec::new(),
    });
    o.lists = read_with(&layout.lists(c, v), read_lists)?;
    Ok(o)
}

/// Computes every metric over the simulated outcomes and writes the report
/// files. Returns the summary table.
pub fn cmd_report(config: &RunConfig) -> Result<String> {
    let layout = Layout::new(&config.paths.output_dir);
    let manifest: RunManifest = read_json(&layout.manifest())?;
    let items = read_with(&layout.items(), read_items)?;
    let mut outcomes = BTreeMap::new();
    for &v in &config.variants()? {
        for c in 0..manifest.clusters {
            outcomes.insert((c, v), load_outcome(&layout, c, v)?);
        }
    }
    let ratings: BTreeMap<String, u8> = items.iter().map(|i| (i.item_id.clone(), i.rating)).collect();
    let options = ReportOptions {
        item_gini: config.report.item_gini,
    };
    let report = build_report(&config.simulation.run_id, &outcomes, &aspect_map(&items), &ratings, options)?;
    let files = emit_report(&report, &layout.report_dir(), config.report.format)?;
    for n in &report.notices {
        eprintln!("report: {n}");
    }
    eprintln!("report: {} file(s) in {}", files.len(), layout.report_dir().display());
    Ok(summary_table(&report))
}

/// Runs one stage, tagging any error with it.
pub fn run_stage(stage: Stage, config: &RunConfig) -> std::result::Result<(), Failure> {
    match stage {
        Stage::Config => Ok(()),
        Stage::Ingest => cmd_ingest(config).map(drop),
        Stage::Cluster => cmd_cluster(config).map(drop),
        Stage::Train => cmd_train(config).map(drop),
        Stage::Plan => cmd_plan(config).map(drop),
        Stage::Simulate => cmd_simulate(config).map(drop),
        Stage::Report => cmd_report(config).map(|table| print!("{table}")),
    }
    .at(stage)
}

/// Every stage in order, stopping at the first failure.
pub fn cmd_all(config: &RunConfig) -> std::result::Result<(), Failure> {
    Stage::PIPELINE.iter().try_for_each(|&s| run_stage(s, config))
}
