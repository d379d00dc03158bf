//! Per-user preference vectors over (source, topic) pairs, the engaged-user
//! filter cascade and k-prototypes clustering of the survivors.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calllog::{InteractionLabel, LabeledEvent, Source};
use crate::error::{Error, Result};

const KL_EPSILON: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceTopic {
    pub source: Source,
    pub topic: String,
}

impl SourceTopic {
    pub fn new(source: Source, topic: impl Into<String>) -> Self {
        SourceTopic {
            source,
            topic: topic.into(),
        }
    }
}

impl std::fmt::Display for SourceTopic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.source, self.topic)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairPreference {
    pub score: f64,
    pub heard: bool,
}

/// Signed preference per (source, topic) pair. Pairs that are absent read as
/// score 0 with the heard indicator off.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PreferenceVector {
    entries: BTreeMap<SourceTopic, PairPreference>,
}

impl PreferenceVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: SourceTopic, score: f64, heard: bool) {
        self.entries.insert(key, PairPreference { score, heard });
    }

    pub fn with(mut self, key: SourceTopic, score: f64, heard: bool) -> Self {
        self.set(key, score, heard);
        self
    }

    pub fn get(&self, key: &SourceTopic) -> PairPreference {
        self.entries.get(key).copied().unwrap_or_default()
    }

    pub fn score(&self, key: &SourceTopic) -> f64 {
        self.get(key).score
    }

    pub fn heard(&self, key: &SourceTopic) -> bool {
        self.get(key).heard
    }

    pub fn keys(&self) -> impl Iterator<Item = &SourceTopic> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SourceTopic, &PairPreference)> {
        self.entries.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn dense(&self, space: &PreferenceSpace) -> (Vec<f64>, Vec<bool>) {
        space
            .keys
            .iter()
            .map(|k| {
                let p = self.get(k);
                (p.score, p.heard)
            })
            .unzip()
    }

    /// Scores followed by 0/1 heard indicators over `space`.
    pub fn concatenated(&self, space: &PreferenceSpace) -> Vec<f64> {
        let (mut nums, cats) = self.dense(space);
        nums.extend(cats.into_iter().map(|b| if b { 1.0 } else { 0.0 }));
        nums
    }
}

/// A fixed, sorted index set of (source, topic) pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PreferenceSpace {
    keys: Vec<SourceTopic>,
}

impl PreferenceSpace {
    pub fn union<'a>(vectors: impl IntoIterator<Item = &'a PreferenceVector>) -> Self {
        let keys: BTreeSet<SourceTopic> = vectors
            .into_iter()
            .flat_map(|v| v.keys().cloned())
            .collect();
        PreferenceSpace {
            keys: keys.into_iter().collect(),
        }
    }

    pub fn keys(&self) -> &[SourceTopic] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    fn vector(&self, nums: &[f64], cats: &[bool]) -> PreferenceVector {
        let mut v = PreferenceVector::new();
        for ((k, &s), &h) in self.keys.iter().zip(nums).zip(cats) {
            v.set(k.clone(), s, h);
        }
        v
    }
}

/// Net preference: (positives − negatives) / items heard.
pub fn preference_score(n_positive: usize, n_negative: usize, n_heard: usize) -> Result<f64> {
    if n_heard == 0 {
        return Err(Error::NothingHeard);
    }
    if n_positive + n_negative > n_heard {
        return Err(Error::InvalidInput(format!(
            "{n_positive} positive + {n_negative} negative exceed {n_heard} heard"
        )));
    }
    Ok((n_positive as f64 - n_negative as f64) / n_heard as f64)
}

#[derive(Default, Clone, Copy)]
struct Counts {
    positive: usize,
    negative: usize,
    heard: usize,
}

fn vector_from_counts(counts: BTreeMap<SourceTopic, Counts>) -> PreferenceVector {
    let mut v = PreferenceVector::new();
    for (key, c) in counts {
        // heard > 0 for every key we inserted
        let score = preference_score(c.positive, c.negative, c.heard).unwrap_or(0.0);
        v.set(key, score, true);
    }
    v
}

fn tally<'a>(events: impl IntoIterator<Item = &'a LabeledEvent>) -> BTreeMap<SourceTopic, Counts> {
    let mut counts: BTreeMap<SourceTopic, Counts> = BTreeMap::new();
    for le in events {
        let c = counts
            .entry(SourceTopic::new(le.event.source, le.event.topic.clone()))
            .or_default();
        c.heard += 1;
        match le.label {
            InteractionLabel::Positive => c.positive += 1,
            InteractionLabel::Negative => c.negative += 1,
            InteractionLabel::Neutral => {}
        }
    }
    counts
}

/// Builds one user's vector from their labelled listens.
pub fn build_preference_vector<'a>(
    user_events: impl IntoIterator<Item = &'a LabeledEvent>,
) -> PreferenceVector {
    vector_from_counts(tally(user_events))
}

/// Activity summary used by the engaged-user filter.
#[derive(Clone, Debug, PartialEq)]
pub struct UserActivity {
    pub call_count: usize,
    pub keys_pressed: usize,
    pub total_call_seconds: f64,
    pub vector: PreferenceVector,
}

/// Groups labelled events by caller and summarises each caller. Call time is
/// approximated by the total seconds heard across their listens.
pub fn summarize_users(events: &[LabeledEvent]) -> BTreeMap<String, UserActivity> {
    let mut by_user: BTreeMap<&str, Vec<&LabeledEvent>> = BTreeMap::new();
    for le in events {
        by_user.entry(le.event.caller_id.as_str()).or_default().push(le);
    }
    by_user
        .into_iter()
        .map(|(user, evs)| {
            let calls: BTreeSet<&str> = evs.iter().map(|e| e.event.call_id.as_str()).collect();
            let activity = UserActivity {
                call_count: calls.len(),
                keys_pressed: evs.iter().filter(|e| e.event.key_pressed.is_pressed()).count(),
                total_call_seconds: evs.iter().map(|e| e.event.duration_heard).sum(),
                vector: build_preference_vector(evs.iter().copied()),
            };
            (user.to_string(), activity)
        })
        .collect()
}

/// Preference vector over every listen of every user.
pub fn global_preference_vector(events: &[LabeledEvent]) -> PreferenceVector {
    build_preference_vector(events)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterThresholds {
    /// Minimum number of calls (inclusive), i.e. more than seven by default.
    pub min_calls: usize,
    /// Minimum key presses per second of listening.
    pub min_keys_per_second: f64,
    /// Fraction of the remaining users kept, by largest divergence from the
    /// global vector.
    pub divergence_keep_fraction: f64,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        FilterThresholds {
            min_calls: 8,
            min_keys_per_second: 1.0 / 240.0,
            divergence_keep_fraction: 0.60,
        }
    }
}

impl FilterThresholds {
    pub fn validate(&self) -> Result<()> {
        if self.min_calls == 0
            || !(self.min_keys_per_second > 0.0)
            || !(self.divergence_keep_fraction > 0.0 && self.divergence_keep_fraction <= 1.0)
        {
            return Err(Error::InvalidInput(format!("invalid filter thresholds {self:?}")));
        }
        Ok(())
    }
}

/// Survivors of each filter stage, in cascade order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FilterOutcome {
    pub frequent: Vec<String>,
    pub active: Vec<String>,
    pub divergent: Vec<String>,
}

pub fn filter_engaged_users(
    users: &BTreeMap<String, UserActivity>,
    thresholds: &FilterThresholds,
    global_vector: &PreferenceVector,
) -> Result<FilterOutcome> {
    thresholds.validate()?;
    let frequent: Vec<String> = users
        .iter()
        .filter(|(_, a)| a.call_count >= thresholds.min_calls)
        .map(|(u, _)| u.clone())
        .collect();
    if frequent.is_empty() {
        return Err(Error::EmptyFilterStage { stage: "call-count" });
    }

    let active: Vec<String> = frequent
        .iter()
        .filter(|u| {
            let a = &users[*u];
            a.total_call_seconds > 0.0
                && a.keys_pressed as f64 / a.total_call_seconds >= thresholds.min_keys_per_second
        })
        .cloned()
        .collect();
    if active.is_empty() {
        return Err(Error::EmptyFilterStage { stage: "key-rate" });
    }

    let mut scored: Vec<(f64, &String)> = active
        .iter()
        .map(|u| (kl_divergence(&users[u].vector, global_vector), u))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let keep = (thresholds.divergence_keep_fraction * scored.len() as f64).round() as usize;
    if keep == 0 {
        return Err(Error::EmptyFilterStage { stage: "divergence" });
    }
    let mut divergent: Vec<String> = scored.into_iter().take(keep).map(|(_, u)| u.clone()).collect();
    divergent.sort();

    Ok(FilterOutcome {
        frequent,
        active,
        divergent,
    })
}

fn smoothed_distribution(v: &PreferenceVector, space: &PreferenceSpace) -> Vec<f64> {
    let raw: Vec<f64> = space
        .keys()
        .iter()
        .map(|k| v.score(k) + 1.0 + KL_EPSILON)
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// KL(p ‖ q) after shifting scores from [-1, 1] to [0, 2], adding a small
/// epsilon and normalising each vector to sum to one.
pub fn kl_divergence(p: &PreferenceVector, q: &PreferenceVector) -> f64 {
    let space = PreferenceSpace::union([p, q]);
    if space.is_empty() {
        return 0.0;
    }
    let pd = smoothed_distribution(p, &space);
    let qd = smoothed_distribution(q, &space);
    pd.iter()
        .zip(&qd)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Result of k-prototypes clustering; `labels[i]` is the cluster of the i-th
/// input vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAssignment {
    pub k: usize,
    pub labels: Vec<usize>,
    pub centroids: Vec<PreferenceVector>,
    pub gamma: f64,
    /// Objective after each iteration.
    pub cost_history: Vec<f64>,
}

impl ClusterAssignment {
    pub fn cost(&self) -> f64 {
        self.cost_history.last().copied().unwrap_or(0.0)
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == cluster)
            .map(|(i, _)| i)
    }

    pub fn centroid(&self, cluster: usize) -> Result<&PreferenceVector> {
        self.centroids.get(cluster).ok_or(Error::UnknownCluster(cluster))
    }
}

struct Dense {
    nums: Vec<Vec<f64>>,
    cats: Vec<Vec<bool>>,
}

impl Dense {
    fn new(vectors: &[PreferenceVector], space: &PreferenceSpace) -> Self {
        let (nums, cats) = vectors.iter().map(|v| v.dense(space)).unzip();
        Dense { nums, cats }
    }
}

#[derive(Clone, Debug)]
struct Prototype {
    nums: Vec<f64>,
    cats: Vec<bool>,
}

fn dissimilarity(nums: &[f64], cats: &[bool], proto: &Prototype, gamma: f64) -> f64 {
    let numeric: f64 = nums
        .iter()
        .zip(&proto.nums)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let mismatches = cats.iter().zip(&proto.cats).filter(|(a, b)| a != b).count();
    numeric + gamma * mismatches as f64
}

fn prototype_of(dense: &Dense, members: &[usize]) -> Prototype {
    let dims = dense.nums.first().map_or(0, Vec::len);
    let n = members.len() as f64;
    let mut nums = vec![0.0; dims];
    let mut trues = vec![0usize; dims];
    for &m in members {
        for d in 0..dims {
            nums[d] += dense.nums[m][d];
            if dense.cats[m][d] {
                trues[d] += 1;
            }
        }
    }
    for x in &mut nums {
        *x /= n;
    }
    // majority vote, ties to true
    let cats = trues.iter().map(|&t| 2 * t >= members.len()).collect();
    Prototype { nums, cats }
}

/// Mean of the scores and majority vote (ties to true) of the heard indicators.
pub fn centroid_of(members: &[&PreferenceVector]) -> Result<PreferenceVector> {
    if members.is_empty() {
        return Err(Error::InvalidInput("centroid of an empty cluster".into()));
    }
    let space = PreferenceSpace::union(members.iter().copied());
    let owned: Vec<PreferenceVector> = members.iter().map(|v| (*v).clone()).collect();
    let dense = Dense::new(&owned, &space);
    let all: Vec<usize> = (0..owned.len()).collect();
    let p = prototype_of(&dense, &all);
    Ok(space.vector(&p.nums, &p.cats))
}

/// Recomputes the centroid of `cluster` from the member vectors.
pub fn cluster_centroid(
    vectors: &[PreferenceVector],
    assignment: &ClusterAssignment,
    cluster: usize,
) -> Result<PreferenceVector> {
    if cluster >= assignment.k {
        return Err(Error::UnknownCluster(cluster));
    }
    let members: Vec<&PreferenceVector> = assignment.members(cluster).map(|i| &vectors[i]).collect();
    centroid_of(&members)
}

/// Half the mean per-dimension variance of the scores.
pub fn default_gamma(vectors: &[PreferenceVector]) -> f64 {
    let space = PreferenceSpace::union(vectors);
    if vectors.is_empty() || space.is_empty() {
        return 0.0;
    }
    let dense = Dense::new(vectors, &space);
    let n = vectors.len() as f64;
    let dims = space.len();
    let mut total_var = 0.0;
    for d in 0..dims {
        let mean = dense.nums.iter().map(|v| v[d]).sum::<f64>() / n;
        total_var += dense.nums.iter().map(|v| (v[d] - mean).powi(2)).sum::<f64>() / n;
    }
    0.5 * total_var / dims as f64
}

fn seed_prototypes(dense: &Dense, k: usize, gamma: f64, rng: &mut ChaCha8Rng) -> Vec<Prototype> {
    let n = dense.nums.len();
    let as_proto = |i: usize| Prototype {
        nums: dense.nums[i].clone(),
        cats: dense.cats[i].clone(),
    };
    let mut chosen = vec![rng.random_range(0..n)];
    while chosen.len() < k {
        let protos: Vec<Prototype> = chosen.iter().map(|&i| as_proto(i)).collect();
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                protos
                    .iter()
                    .map(|p| dissimilarity(&dense.nums[i], &dense.cats[i], p, gamma))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in weights.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            if weights[pick] == 0.0 {
                pick = weights
                    .iter()
                    .enumerate()
                    .rev()
                    .find(|(_, w)| **w > 0.0)
                    .map(|(i, _)| i)
                    .unwrap_or(pick);
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
    }
    chosen.into_iter().map(as_proto).collect()
}

fn objective(dense: &Dense, labels: &[usize], protos: &[Prototype], gamma: f64) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| dissimilarity(&dense.nums[i], &dense.cats[i], &protos[l], gamma))
        .sum()
}

/// Lloyd-style k-prototypes: squared Euclidean distance with mean centroids on
/// the scores, `gamma`-weighted mismatch count with mode centroids on the
/// heard indicators. Seeding is k-means++ style from `seed`.
pub fn k_prototypes(
    vectors: &[PreferenceVector],
    k: usize,
    gamma: f64,
    seed: u64,
) -> Result<ClusterAssignment> {
    let n = vectors.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be >= 0, got {gamma}")));
    }
    let space = PreferenceSpace::union(vectors);
    let dense = Dense::new(vectors, &space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut protos = seed_prototypes(&dense, k, gamma, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut cost_history = Vec::new();

    for _ in 0..MAX_ITERATIONS {
        let mut next: Vec<usize> = (0..n)
            .map(|i| {
                let mut best = (0, f64::INFINITY);
                for (c, p) in protos.iter().enumerate() {
                    let d = dissimilarity(&dense.nums[i], &dense.cats[i], p, gamma);
                    if d < best.1 {
                        best = (c, d);
                    }
                }
                best.0
            })
            .collect();

        // An empty cluster takes the point farthest from its prototype.
        for c in 0..k {
            if next.contains(&c) {
                continue;
            }
            let mut sizes = vec![0usize; k];
            for &l in &next {
                sizes[l] += 1;
            }
            let far = (0..n)
                .filter(|&i| sizes[next[i]] > 1)
                .map(|i| (i, dissimilarity(&dense.nums[i], &dense.cats[i], &protos[next[i]], gamma)))
                .fold(None::<(usize, f64)>, |acc, (i, d)| match acc {
                    Some((_, best)) if best >= d => acc,
                    _ => Some((i, d)),
                });
            if let Some((i, _)) = far {
                next[i] = c;
            }
        }

        let converged = next == labels;
        labels = next;
        protos = (0..k)
            .map(|c| {
                let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
                prototype_of(&dense, &members)
            })
            .collect();
        cost_history.push(objective(&dense, &labels, &protos, gamma));
        if converged {
            break;
        }
    }

    Ok(ClusterAssignment {
        k,
        labels,
        centroids: protos.iter().map(|p| space.vector(&p.nums, &p.cats)).collect(),
        gamma,
        cost_history,
    })
}

/// Mean member-to-centroid dissimilarity over mean pairwise centroid
/// dissimilarity.
pub fn cluster_cost_ratio(vectors: &[PreferenceVector], assignment: &ClusterAssignment) -> f64 {
    let space = PreferenceSpace::union(vectors.iter().chain(&assignment.centroids));
    let dense = Dense::new(vectors, &space);
    let protos: Vec<Prototype> = assignment
        .centroids
        .iter()
        .map(|c| {
            let (nums, cats) = c.dense(&space);
            Prototype { nums, cats }
        })
        .collect();
    let within = objective(&dense, &assignment.labels, &protos, assignment.gamma) / vectors.len() as f64;
    let mut between = 0.0;
    let mut pairs = 0usize;
    for a in 0..protos.len() {
        for b in (a + 1)..protos.len() {
            between += dissimilarity(&protos[a].nums, &protos[a].cats, &protos[b], assignment.gamma);
            pairs += 1;
        }
    }
    if pairs == 0 || between == 0.0 {
        return f64::INFINITY;
    }
    within / (between / pairs as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElbowCurve {
    pub chosen_k: usize,
    /// `(k, cost)` for every k in the requested range.
    pub curve: Vec<(usize, f64)>,
}

/// Runs k-prototypes for every k in `k_range` and picks the elbow by the
/// largest second difference of the cost ratio.
pub fn elbow_select_k(
    vectors: &[PreferenceVector],
    k_range: std::ops::RangeInclusive<usize>,
    gamma: f64,
    seed: u64,
) -> Result<ElbowCurve> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo < 2 {
        return Err(Error::InvalidInput(
            "elbow selection needs k >= 2 (inter-centroid distance is undefined for k = 1)".into(),
        ));
    }
    if hi < lo || hi > vectors.len() {
        return Err(Error::InvalidK { k: hi, n: vectors.len() });
    }
    let mut curve = Vec::new();
    for k in lo..=hi {
        let a = k_prototypes(vectors, k, gamma, seed)?;
        curve.push((k, cluster_cost_ratio(vectors, &a)));
    }
    let chosen_k = if curve.len() < 3 {
        curve
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|c| c.0)
            .unwrap_or(lo)
    } else {
        let mut best = (curve[1].0, f64::NEG_INFINITY);
        for w in curve.windows(3) {
            let second = w[0].1 - 2.0 * w[1].1 + w[2].1;
            if second > best.1 {
                best = (w[1].0, second);
            }
        }
        best.0
    };
    Ok(ElbowCurve { chosen_k, curve })
}

/// Sidecar record written next to an assignment export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterMetadata {
    pub k: usize,
    pub gamma: f64,
    pub seed: u64,
    pub cost_curve: Vec<(usize, f64)>,
}

pub fn write_assignment<W: Write>(out: W, users: &[String], assignment: &ClusterAssignment) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(["user_id", "cluster"]).map_err(err)?;
    for (u, l) in users.iter().zip(&assignment.labels) {
        w.write_record([u.as_str(), &l.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn read_assignment<R: Read>(input: R) -> Result<BTreeMap<String, usize>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = BTreeMap::new();
    for rec in r.deserialize::<(String, usize)>() {
        let (u, c) = rec.map_err(|e| Error::InvalidInput(e.to_string()))?;
        out.insert(u, c);
    }
    Ok(out)
}
