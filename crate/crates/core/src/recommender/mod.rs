//! Per-cluster item recommendation: item features, training labels from the
//! call log, pluggable like/dislike models and the recommended pool with its
//! aspect shares.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::calllog::{format_timestamp, parse_timestamp, InteractionLabel, LabeledEvent, ListenEvent};
use crate::error::{Error, Result};
use crate::user_model::{PreferenceSpace, PreferenceVector};

pub mod forest;

pub use forest::{train, EnsembleConfig, TrainedModel, TreeEnsemble};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub item_id: String,
    pub topic: String,
    pub aspects: BTreeSet<String>,
    pub rating: u8,
    pub contributor_id: String,
    pub created_at: NaiveDateTime,
}

impl Item {
    pub fn new(
        item_id: impl Into<String>,
        topic: impl Into<String>,
        aspects: impl IntoIterator<Item = impl Into<String>>,
        rating: u8,
    ) -> Self {
        Item {
            item_id: item_id.into(),
            topic: topic.into(),
            aspects: aspects.into_iter().map(Into::into).collect(),
            rating,
            contributor_id: String::new(),
            created_at: NaiveDateTime::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.aspects.is_empty() {
            return Err(Error::InvalidInput(format!("item {} has no aspect", self.item_id)));
        }
        if !(1..=5).contains(&self.rating) {
            return Err(Error::InvalidInput(format!(
                "item {} rating {} outside 1..5",
                self.item_id, self.rating
            )));
        }
        Ok(())
    }
}

/// Derives an item catalogue from listen events. Each item takes its
/// attributes from its first listen; creation time is the earliest listen.
pub fn catalogue_from_events(events: &[ListenEvent]) -> Vec<Item> {
    let mut items: BTreeMap<&str, Item> = BTreeMap::new();
    for ev in events {
        let item = items.entry(ev.item_id.as_str()).or_insert_with(|| Item {
            item_id: ev.item_id.clone(),
            topic: ev.topic.clone(),
            aspects: ev.aspect_labels().map(String::from).collect(),
            rating: ev.rating,
            contributor_id: ev.contributor_id.clone(),
            created_at: ev.timestamp,
        });
        item.created_at = item.created_at.min(ev.timestamp);
    }
    items.into_values().collect()
}

#[derive(Serialize, Deserialize)]
struct ItemRow {
    item_id: String,
    topic: String,
    aspects: String,
    rating: u8,
    contributor_id: String,
    created_at: String,
}

/// `item_id,topic,aspects,rating,contributor_id,created_at`, aspects joined by `|`.
pub fn write_items<W: Write>(out: W, items: &[Item]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for it in items {
        w.serialize(ItemRow {
            item_id: it.item_id.clone(),
            topic: it.topic.clone(),
            aspects: it.aspects.iter().cloned().collect::<Vec<_>>().join("|"),
            rating: it.rating,
            contributor_id: it.contributor_id.clone(),
            created_at: format_timestamp(&it.created_at),
        })
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn read_items<R: Read>(input: R) -> Result<Vec<Item>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize::<ItemRow>() {
        let row = row.map_err(|e| Error::InvalidInput(e.to_string()))?;
        let item = Item {
            item_id: row.item_id,
            topic: row.topic,
            aspects: row
                .aspects
                .split('|')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect(),
            rating: row.rating,
            contributor_id: row.contributor_id,
            created_at: parse_timestamp(&row.created_at).map_err(Error::InvalidInput)?,
        };
        item.validate()?;
        out.push(item);
    }
    Ok(out)
}

/// Classifier input for one item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub aspect_indicators: Vec<bool>,
    pub rating: u8,
    pub shared_context: f64,
}

impl FeatureVector {
    pub fn to_dense(&self) -> Vec<f64> {
        let mut x: Vec<f64> = self
            .aspect_indicators
            .iter()
            .map(|&a| if a { 1.0 } else { 0.0 })
            .collect();
        x.push(self.rating as f64);
        x.push(self.shared_context);
        x
    }
}

/// Cosine similarity of two preference vectors, scores and 0/1 heard
/// indicators concatenated. Zero-norm vectors share no context.
pub fn shared_context(contributor_vector: &PreferenceVector, centroid: &PreferenceVector) -> f64 {
    let space = PreferenceSpace::union([contributor_vector, centroid]);
    let a = contributor_vector.concatenated(&space);
    let b = centroid.concatenated(&space);
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// The aspect vocabulary of one topic; fixes the feature layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicFeatures {
    pub topic: String,
    pub aspects: Vec<String>,
}

impl TopicFeatures {
    pub fn from_items<'a>(topic: &str, items: impl IntoIterator<Item = &'a Item>) -> Self {
        let aspects: BTreeSet<String> = items
            .into_iter()
            .filter(|i| i.topic == topic)
            .flat_map(|i| i.aspects.iter().cloned())
            .collect();
        TopicFeatures {
            topic: topic.to_string(),
            aspects: aspects.into_iter().collect(),
        }
    }

    pub fn features(
        &self,
        item: &Item,
        centroid: &PreferenceVector,
        contributor_vectors: &BTreeMap<String, PreferenceVector>,
    ) -> FeatureVector {
        let shared = contributor_vectors
            .get(&item.contributor_id)
            .map(|v| shared_context(v, centroid))
            .unwrap_or(0.0);
        FeatureVector {
            aspect_indicators: self.aspects.iter().map(|a| item.aspects.contains(a)).collect(),
            rating: item.rating,
            shared_context: shared,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ItemLabel {
    Labeled { score: f64, liked: bool },
    /// No cluster member heard the item.
    Excluded,
}

/// Cluster-level training label for one item: (users with net-positive
/// listens − users with net-negative listens) / users who heard it.
pub fn label_item_for_cluster<'a>(
    item_id: &str,
    cluster_events: impl IntoIterator<Item = &'a LabeledEvent>,
) -> ItemLabel {
    let mut per_user: BTreeMap<&str, i64> = BTreeMap::new();
    for le in cluster_events {
        if le.event.item_id != item_id {
            continue;
        }
        let net = per_user.entry(le.event.caller_id.as_str()).or_insert(0);
        match le.label {
            InteractionLabel::Positive => *net += 1,
            InteractionLabel::Negative => *net -= 1,
            InteractionLabel::Neutral => {}
        }
    }
    if per_user.is_empty() {
        return ItemLabel::Excluded;
    }
    let positive = per_user.values().filter(|&&n| n > 0).count() as f64;
    let negative = per_user.values().filter(|&&n| n < 0).count() as f64;
    let score = (positive - negative) / per_user.len() as f64;
    ItemLabel::Labeled {
        score,
        liked: score > 0.0,
    }
}

/// Labels every item heard by the cluster at once.
pub fn label_items_for_cluster(cluster_events: &[LabeledEvent]) -> BTreeMap<String, ItemLabel> {
    let mut by_item: BTreeMap<&str, Vec<&LabeledEvent>> = BTreeMap::new();
    for le in cluster_events {
        by_item.entry(le.event.item_id.as_str()).or_default().push(le);
    }
    by_item
        .into_iter()
        .map(|(id, evs)| (id.to_string(), label_item_for_cluster(id, evs)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probability: f64,
    pub label: bool,
}

impl Prediction {
    /// Thresholds at 0.5, ties positive.
    pub fn from_probability(probability: f64) -> Self {
        Prediction {
            probability,
            label: probability >= 0.5,
        }
    }
}

/// Anything that can say whether a cluster will like an item.
pub trait LikeModel: Send + Sync {
    fn predict_item(&self, item: &Item, features: &FeatureVector) -> Result<Prediction>;
}

impl LikeModel for TreeEnsemble {
    fn predict_item(&self, _item: &Item, features: &FeatureVector) -> Result<Prediction> {
        self.predict(features)
    }
}

/// Replays known cluster-level scores instead of predicting. Items without a
/// score are predicted as not liked.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleModel {
    scores: BTreeMap<String, f64>,
}

impl OracleModel {
    pub fn from_scores(scores: BTreeMap<String, f64>) -> Self {
        OracleModel { scores }
    }

    pub fn from_labels(labels: &BTreeMap<String, ItemLabel>) -> Self {
        let scores = labels
            .iter()
            .filter_map(|(id, l)| match l {
                ItemLabel::Labeled { score, .. } => Some((id.clone(), *score)),
                ItemLabel::Excluded => None,
            })
            .collect();
        OracleModel { scores }
    }

    pub fn score(&self, item_id: &str) -> Option<f64> {
        self.scores.get(item_id).copied()
    }
}

impl LikeModel for OracleModel {
    /// Probability is the score mapped from [-1, 1] onto [0, 1]; the label is
    /// `score > 0`, as in the logged labels.
    fn predict_item(&self, item: &Item, _features: &FeatureVector) -> Result<Prediction> {
        Ok(match self.scores.get(&item.item_id) {
            Some(&s) => Prediction {
                probability: (1.0 + s) / 2.0,
                label: s > 0.0,
            },
            None => Prediction {
                probability: 0.0,
                label: false,
            },
        })
    }
}

/// Items predicted as liked, grouped by aspect, with normalised aspect shares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecommendedPool {
    pub topic: String,
    pub cluster: usize,
    /// Liked items per aspect; only aspects with at least one liked item.
    pub items_by_aspect: BTreeMap<String, BTreeSet<String>>,
    /// |B_j| / Σ_j' |B_j'|.
    pub beta: BTreeMap<String, f64>,
    /// Prediction for every scored item, liked or not.
    pub predictions: BTreeMap<String, Prediction>,
    /// Aspects of every scored item.
    pub item_aspects: BTreeMap<String, Vec<String>>,
}

pub fn beta_from(items_by_aspect: &BTreeMap<String, BTreeSet<String>>) -> BTreeMap<String, f64> {
    let total: usize = items_by_aspect.values().map(BTreeSet::len).sum();
    items_by_aspect
        .iter()
        .map(|(a, s)| (a.clone(), s.len() as f64 / total as f64))
        .collect()
}

impl RecommendedPool {
    /// Builds a pool from explicit per-aspect liked sets.
    pub fn from_liked(
        topic: impl Into<String>,
        cluster: usize,
        items: &[Item],
        liked: impl Fn(&Item) -> Option<Prediction>,
    ) -> Result<Self> {
        let mut items_by_aspect: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut predictions = BTreeMap::new();
        let mut item_aspects = BTreeMap::new();
        for it in items {
            let Some(pred) = liked(it) else { continue };
            predictions.insert(it.item_id.clone(), pred);
            item_aspects.insert(it.item_id.clone(), it.aspects.iter().cloned().collect());
            if pred.label {
                for a in &it.aspects {
                    items_by_aspect.entry(a.clone()).or_default().insert(it.item_id.clone());
                }
            }
        }
        if items_by_aspect.is_empty() {
            return Err(Error::EmptyPool);
        }
        Ok(RecommendedPool {
            topic: topic.into(),
            cluster,
            beta: beta_from(&items_by_aspect),
            items_by_aspect,
            predictions,
            item_aspects,
        })
    }

    /// Liked item ids, each once.
    pub fn liked_items(&self) -> BTreeSet<&str> {
        self.items_by_aspect
            .values()
            .flat_map(|s| s.iter().map(String::as_str))
            .collect()
    }

    pub fn aspects_of(&self, item_id: &str) -> &[String] {
        self.item_aspects.get(item_id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The pool restricted to items accepted by `keep`, with β recomputed.
    /// `None` when nothing liked remains.
    pub fn restricted(&self, keep: impl Fn(&str) -> bool) -> Option<RecommendedPool> {
        let items_by_aspect: BTreeMap<String, BTreeSet<String>> = self
            .items_by_aspect
            .iter()
            .map(|(a, s)| (a.clone(), s.iter().filter(|i| keep(i)).cloned().collect::<BTreeSet<_>>()))
            .filter(|(_, s)| !s.is_empty())
            .collect();
        if items_by_aspect.is_empty() {
            return None;
        }
        Some(RecommendedPool {
            topic: self.topic.clone(),
            cluster: self.cluster,
            beta: beta_from(&items_by_aspect),
            items_by_aspect,
            predictions: self.predictions.clone(),
            item_aspects: self.item_aspects.clone(),
        })
    }

    /// `item_id,aspect,liked` for every scored item and aspect.
    pub fn write_items<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::InvalidInput(e.to_string());
        w.write_record(["item_id", "aspect", "liked"]).map_err(err)?;
        for (id, aspects) in &self.item_aspects {
            let liked = self.predictions[id].label;
            for a in aspects {
                w.write_record([id.as_str(), a, if liked { "true" } else { "false" }])
                    .map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// `aspect,beta`.
    pub fn write_beta<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::InvalidInput(e.to_string());
        w.write_record(["aspect", "beta"]).map_err(err)?;
        for (a, b) in &self.beta {
            w.write_record([a.as_str(), &b.to_string()]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// `item_id,probability` for every scored item.
    pub fn write_scores<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::InvalidInput(e.to_string());
        w.write_record(["item_id", "probability"]).map_err(err)?;
        for (id, p) in &self.predictions {
            w.write_record([id.as_str(), &p.probability.to_string()]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// Rebuilds a pool from its `item_id,aspect,liked` and scores exports.
    pub fn read<R1: Read, R2: Read>(
        topic: &str,
        cluster: usize,
        items_csv: R1,
        scores_csv: R2,
    ) -> Result<Self> {
        let mut item_aspects: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut liked: BTreeMap<String, bool> = BTreeMap::new();
        let mut r = csv::Reader::from_reader(items_csv);
        for row in r.deserialize::<(String, String, bool)>() {
            let (id, aspect, l) = row.map_err(|e| Error::InvalidInput(e.to_string()))?;
            item_aspects.entry(id.clone()).or_default().push(aspect);
            liked.insert(id, l);
        }
        let mut probs: BTreeMap<String, f64> = BTreeMap::new();
        let mut r = csv::Reader::from_reader(scores_csv);
        for row in r.deserialize::<(String, f64)>() {
            let (id, p) = row.map_err(|e| Error::InvalidInput(e.to_string()))?;
            probs.insert(id, p);
        }
        let mut items_by_aspect: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut predictions = BTreeMap::new();
        for (id, aspects) in &item_aspects {
            let label = liked[id];
            predictions.insert(
                id.clone(),
                Prediction {
                    probability: probs.get(id).copied().unwrap_or(if label { 1.0 } else { 0.0 }),
                    label,
                },
            );
            if label {
                for a in aspects {
                    items_by_aspect.entry(a.clone()).or_default().insert(id.clone());
                }
            }
        }
        if items_by_aspect.is_empty() {
            return Err(Error::EmptyPool);
        }
        Ok(RecommendedPool {
            topic: topic.to_string(),
            cluster,
            beta: beta_from(&items_by_aspect),
            items_by_aspect,
            predictions,
            item_aspects,
        })
    }
}

/// Scores every item of one topic with `model` and collects the liked ones.
/// The pool's `cluster` field is left at 0 for the caller to set.
pub fn recommended_pool(
    model: &dyn LikeModel,
    items: &[Item],
    cluster_centroid: &PreferenceVector,
    contributor_vectors: &BTreeMap<String, PreferenceVector>,
) -> Result<RecommendedPool> {
    let Some(first) = items.first() else {
        return Err(Error::EmptyPool);
    };
    let topic = first.topic.clone();
    if let Some(other) = items.iter().find(|i| i.topic != topic) {
        return Err(Error::InvalidInput(format!(
            "pool mixes topics {topic:?} and {:?}",
            other.topic
        )));
    }
    let layout = TopicFeatures::from_items(&topic, items);
    let mut predictions = BTreeMap::new();
    for it in items {
        let fv = layout.features(it, cluster_centroid, contributor_vectors);
        predictions.insert(it.item_id.clone(), model.predict_item(it, &fv)?);
    }
    RecommendedPool::from_liked(topic, 0, items, |it| predictions.get(&it.item_id).copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calllog::tests::event;
    use crate::calllog::{KeyPress, Source};
    use crate::user_model::SourceTopic;

    fn k(s: &str) -> SourceTopic {
        SourceTopic::new(Source::User, s)
    }

    #[test]
    fn shared_context_extremes() {
        let v = PreferenceVector::new().with(k("a"), 0.5, false).with(k("b"), -0.2, false);
        assert!((shared_context(&v, &v) - 1.0).abs() < 1e-12);
        let neg = PreferenceVector::new().with(k("a"), -0.5, false).with(k("b"), 0.2, false);
        assert!((shared_context(&v, &neg) + 1.0).abs() < 1e-12);
        let x = PreferenceVector::new().with(k("a"), 1.0, false);
        let y = PreferenceVector::new().with(k("b"), 1.0, false);
        assert_eq!(shared_context(&x, &y), 0.0);
        assert_eq!(shared_context(&PreferenceVector::new(), &x), 0.0);
    }

    fn listen(user: &str, item: &str, label: InteractionLabel) -> LabeledEvent {
        let mut ev = event("k", item, 50.0, KeyPress::None, "2019-01-01T00:00:00");
        ev.caller_id = user.into();
        LabeledEvent { event: ev, label }
    }

    #[test]
    fn item_labels_from_cluster_users() {
        use InteractionLabel::*;
        let mut evs: Vec<_> = (0..4).map(|u| listen(&format!("u{u}"), "i", Positive)).collect();
        evs.push(listen("u9", "i", Negative));
        match label_item_for_cluster("i", &evs) {
            ItemLabel::Labeled { score, liked } => {
                assert!((score - 0.6).abs() < 1e-12);
                assert!(liked);
            }
            ItemLabel::Excluded => panic!(),
        }
        assert_eq!(label_item_for_cluster("other", &evs), ItemLabel::Excluded);
        let tie = vec![
            listen("a", "i", Positive),
            listen("b", "i", Positive),
            listen("c", "i", Negative),
            listen("d", "i", Negative),
        ];
        assert_eq!(
            label_item_for_cluster("i", &tie),
            ItemLabel::Labeled { score: 0.0, liked: false }
        );
    }

    struct LikeAll;
    impl LikeModel for LikeAll {
        fn predict_item(&self, _: &Item, _: &FeatureVector) -> Result<Prediction> {
            Ok(Prediction::from_probability(1.0))
        }
    }

    fn items(spec: &[(&str, usize)]) -> Vec<Item> {
        let mut out = Vec::new();
        for (aspect, n) in spec {
            for i in 0..*n {
                out.push(Item::new(format!("{aspect}{i}"), "MDD", [*aspect], 3));
            }
        }
        out
    }

    #[test]
    fn beta_is_liked_share_per_aspect() {
        let its = items(&[("A", 6), ("B", 4)]);
        let mut scores = BTreeMap::new();
        for it in &its {
            let liked = it.item_id == "B0" || it.item_id == "B1" || it.item_id.starts_with('A');
            scores.insert(it.item_id.clone(), if liked { 0.5 } else { -0.5 });
        }
        let oracle = OracleModel::from_scores(scores);
        let pool = recommended_pool(&oracle, &its, &PreferenceVector::new(), &BTreeMap::new()).unwrap();
        assert_eq!(pool.beta["A"], 0.75);
        assert_eq!(pool.beta["B"], 0.25);

        let all = recommended_pool(&LikeAll, &its, &PreferenceVector::new(), &BTreeMap::new()).unwrap();
        assert_eq!(all.beta["A"], 0.6);
        assert_eq!(all.beta["B"], 0.4);

        let single = recommended_pool(&LikeAll, &items(&[("A", 3)]), &PreferenceVector::new(), &BTreeMap::new())
            .unwrap();
        assert_eq!(single.beta["A"], 1.0);

        let none = OracleModel::default();
        assert!(matches!(
            recommended_pool(&none, &its, &PreferenceVector::new(), &BTreeMap::new()),
            Err(Error::EmptyPool)
        ));
    }

    #[test]
    fn oracle_pool_matches_positive_labels() {
        let its = items(&[("A", 5), ("B", 5)]);
        let mut labels = BTreeMap::new();
        for (i, it) in its.iter().enumerate() {
            let l = if i % 3 == 0 {
                ItemLabel::Excluded
            } else {
                let s = if i % 2 == 0 { 0.4 } else { -0.2 };
                ItemLabel::Labeled { score: s, liked: s > 0.0 }
            };
            labels.insert(it.item_id.clone(), l);
        }
        let oracle = OracleModel::from_labels(&labels);
        let pool = recommended_pool(&oracle, &its, &PreferenceVector::new(), &BTreeMap::new()).unwrap();
        let expected: BTreeSet<&str> = labels
            .iter()
            .filter(|(_, l)| matches!(l, ItemLabel::Labeled { liked: true, .. }))
            .map(|(id, _)| id.as_str())
            .collect();
        assert_eq!(pool.liked_items(), expected);
    }

    #[test]
    fn multi_aspect_items_join_every_aspect_pool() {
        let mut its = items(&[("A", 1), ("B", 1)]);
        its.push(Item::new("AB", "MDD", ["A", "B"], 4));
        let pool = recommended_pool(&LikeAll, &its, &PreferenceVector::new(), &BTreeMap::new()).unwrap();
        assert!(pool.items_by_aspect["A"].contains("AB"));
        assert!(pool.items_by_aspect["B"].contains("AB"));
        assert_eq!(pool.beta["A"], 0.5);
    }

    #[test]
    fn pool_exports_read_back() {
        let its = items(&[("A", 3), ("B", 2)]);
        let pool = recommended_pool(&LikeAll, &its, &PreferenceVector::new(), &BTreeMap::new()).unwrap();
        let (mut a, mut s) = (Vec::new(), Vec::new());
        pool.write_items(&mut a).unwrap();
        pool.write_scores(&mut s).unwrap();
        let back = RecommendedPool::read("MDD", 0, a.as_slice(), s.as_slice()).unwrap();
        assert_eq!(back, pool);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("item_id,aspect,liked\n"));
    }

    #[test]
    fn catalogue_round_trip() {
        let mut ev = event("k", "i1", 50.0, KeyPress::None, "2019-01-02T00:00:00");
        ev.aspect = "x|y".into();
        let mut early = ev.clone();
        early.timestamp = crate::calllog::tests::ts("2019-01-01T05:00:00");
        let cat = catalogue_from_events(&[ev, early]);
        assert_eq!(cat.len(), 1);
        assert_eq!(cat[0].aspects.len(), 2);
        assert_eq!(cat[0].created_at, crate::calllog::tests::ts("2019-01-01T05:00:00"));
        let mut buf = Vec::new();
        write_items(&mut buf, &cat).unwrap();
        assert_eq!(read_items(buf.as_slice()).unwrap(), cat);
    }
}
