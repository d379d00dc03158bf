//! Bagged CART ensemble used as the reference like/dislike classifier.

use std::cmp::Ordering;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureVector, Prediction};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Features tried per split; `None` means ⌈√d⌉.
    pub max_features: Option<usize>,
    /// Fraction of each class held out for validation.
    pub validation_fraction: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_trees: 50,
            max_depth: 6,
            min_samples_split: 2,
            max_features: None,
            validation_fraction: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        /// Fraction of positive training samples reaching the leaf.
        positive: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        /// Samples with `x[feature] <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    fn probability(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { positive, .. } => return *positive,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub config: EnsembleConfig,
    pub seed: u64,
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

impl TreeEnsemble {
    pub fn predict(&self, feature: &FeatureVector) -> Result<Prediction> {
        let x = feature.to_dense();
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let p = self.trees.iter().map(|t| t.probability(&x)).sum::<f64>() / self.trees.len() as f64;
        Ok(Prediction::from_probability(p))
    }

    pub fn save<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn load<R: Read>(input: R) -> Result<Self> {
        serde_json::from_reader(input).map_err(|e| Error::InvalidInput(format!("bad model file: {e}")))
    }
}

/// Trained ensemble with its held-out scores.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub model: TreeEnsemble,
    pub validation_accuracy: f64,
    /// Accuracy of always predicting the training majority class.
    pub majority_baseline: f64,
    pub n_train: usize,
    pub n_validation: usize,
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Trains the ensemble on a seeded stratified split, after oversampling the
/// training minority class with replacement up to parity.
///
/// Examples are put in a canonical order before any randomness is drawn, so
/// the result does not depend on input order.
pub fn train(
    features: &[FeatureVector],
    labels: &[bool],
    config: &EnsembleConfig,
    seed: u64,
) -> Result<TrainedModel> {
    if features.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if config.n_trees == 0 || !(config.validation_fraction > 0.0 && config.validation_fraction < 1.0) {
        return Err(Error::InvalidInput(format!("invalid ensemble config {config:?}")));
    }
    let xs: Vec<Vec<f64>> = features.iter().map(FeatureVector::to_dense).collect();
    let dims = xs.first().map_or(0, Vec::len);
    if let Some(bad) = xs.iter().find(|x| x.len() != dims) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            got: bad.len(),
        });
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    if positives < 2 || negatives < 2 {
        return Err(Error::InvalidInput(
            "need at least two examples of each class".into(),
        ));
    }

    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| lexicographic(&xs[a], &xs[b]).then(labels[a].cmp(&labels[b])));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for class in [false, true] {
        let mut members: Vec<usize> = order.iter().copied().filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let n_val = ((config.validation_fraction * members.len() as f64).round() as usize)
            .clamp(1, members.len() - 1);
        val_idx.extend_from_slice(&members[..n_val]);
        train_idx.extend_from_slice(&members[n_val..]);
    }

    let (pos, neg): (Vec<usize>, Vec<usize>) = train_idx.iter().partition(|&&i| labels[i]);
    let majority_is_positive = pos.len() > neg.len();
    let (majority, minority) = if majority_is_positive { (&pos, &neg) } else { (&neg, &pos) };
    let mut balanced = train_idx.clone();
    for _ in minority.len()..majority.len() {
        balanced.push(minority[rng.random_range(0..minority.len())]);
    }

    let mtry = config
        .max_features
        .unwrap_or_else(|| (dims as f64).sqrt().ceil() as usize)
        .clamp(1, dims.max(1));
    let mut trees = Vec::with_capacity(config.n_trees);
    for _ in 0..config.n_trees {
        let sample: Vec<usize> = (0..balanced.len())
            .map(|_| balanced[rng.random_range(0..balanced.len())])
            .collect();
        let mut builder = TreeBuilder {
            xs: &xs,
            labels,
            config,
            mtry,
            rng: &mut rng,
            nodes: Vec::new(),
        };
        builder.grow(sample, 0);
        trees.push(DecisionTree { nodes: builder.nodes });
    }

    let model = TreeEnsemble {
        config: config.clone(),
        seed,
        n_features: dims,
        trees,
    };
    let correct = val_idx
        .iter()
        .filter(|&&i| {
            model
                .predict(&features[i])
                .map(|p| p.label == labels[i])
                .unwrap_or(false)
        })
        .count();
    let majority_hits = val_idx.iter().filter(|&&i| labels[i] == majority_is_positive).count();
    let n_val = val_idx.len() as f64;
    Ok(TrainedModel {
        model,
        validation_accuracy: correct as f64 / n_val,
        majority_baseline: majority_hits as f64 / n_val,
        n_train: train_idx.len(),
        n_validation: val_idx.len(),
    })
}

struct TreeBuilder<'a> {
    xs: &'a [Vec<f64>],
    labels: &'a [bool],
    config: &'a EnsembleConfig,
    mtry: usize,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<Node>,
}

fn gini_impurity(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

impl TreeBuilder<'_> {
    fn grow(&mut self, sample: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        let pos = sample.iter().filter(|&&i| self.labels[i]).count();
        self.nodes.push(Node::Leaf {
            positive: pos as f64 / sample.len() as f64,
            samples: sample.len(),
        });
        if depth >= self.config.max_depth
            || sample.len() < self.config.min_samples_split
            || pos == 0
            || pos == sample.len()
        {
            return at;
        }
        let Some((feature, threshold)) = self.best_split(&sample, pos) else {
            return at;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            sample.iter().partition(|&&i| self.xs[i][feature] <= threshold);
        let left = self.grow(left, depth + 1);
        let right = self.grow(right, depth + 1);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }

    fn best_split(&mut self, sample: &[usize], pos: usize) -> Option<(usize, f64)> {
        let dims = self.xs[0].len();
        let mut features: Vec<usize> = (0..dims).collect();
        features.shuffle(self.rng);
        let parent = gini_impurity(pos, sample.len());
        let n = sample.len() as f64;
        let mut best: Option<(usize, f64, f64)> = None;
        // Try the random subset first; fall back to the rest if it holds no
        // usable split.
        for (tried, &f) in features.iter().enumerate() {
            if tried >= self.mtry && best.is_some() {
                break;
            }
            let mut vals: Vec<(f64, bool)> = sample.iter().map(|&i| (self.xs[i][f], self.labels[i])).collect();
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for j in 0..vals.len() - 1 {
                if vals[j].1 {
                    left_pos += 1;
                }
                if vals[j].0 == vals[j + 1].0 {
                    continue;
                }
                let nl = j + 1;
                let nr = vals.len() - nl;
                let weighted = (nl as f64 * gini_impurity(left_pos, nl)
                    + nr as f64 * gini_impurity(pos - left_pos, nr))
                    / n;
                let gain = parent - weighted;
                if gain > 1e-12 && best.is_none_or(|b| gain > b.2) {
                    best = Some((f, 0.5 * (vals[j].0 + vals[j + 1].0), gain));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }
}
