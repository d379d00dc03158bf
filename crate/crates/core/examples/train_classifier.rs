//! Trains the tree ensemble on a separable like/dislike task and compares it
//! with the majority-class baseline, then shows the label-replaying oracle.

use std::collections::BTreeMap;

use fairlist::recommender::forest::{train, EnsembleConfig};
use fairlist::recommender::{FeatureVector, Item, ItemLabel, LikeModel, OracleModel};

fn main() -> fairlist::Result<()> {
    // Liked iff the item covers aspect 0 or has rating 5.
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for i in 0..400u32 {
        let aspects = vec![i % 3 == 0, i % 3 == 1, i % 3 == 2];
        let rating = 3 + (i / 3 % 3) as u8;
        labels.push(aspects[0] || rating == 5);
        features.push(FeatureVector {
            aspect_indicators: aspects,
            rating,
            shared_context: ((i * 37) % 100) as f64 / 100.0,
        });
    }
    let trained = train(&features, &labels, &EnsembleConfig::default(), 3)?;
    println!(
        "{} trees, validation accuracy {:.3} vs majority baseline {:.3} ({} train / {} validation)",
        trained.model.trees.len(),
        trained.validation_accuracy,
        trained.majority_baseline,
        trained.n_train,
        trained.n_validation
    );
    let p = trained.model.predict(&features[1])?;
    println!("item 1: p(like) = {:.2}, label {}", p.probability, p.label);

    let logged: BTreeMap<String, ItemLabel> = [
        ("a".to_string(), ItemLabel::Labeled { score: 0.6, liked: true }),
        ("b".to_string(), ItemLabel::Labeled { score: -0.2, liked: false }),
    ]
    .into();
    let oracle = OracleModel::from_labels(&logged);
    for id in ["a", "b", "never-heard"] {
        let item = Item::new(id, "MDD", ["myths"], 4);
        let p = oracle.predict_item(&item, &features[0])?;
        println!("oracle {id}: p = {:.2}, liked {}", p.probability, p.label);
    }
    Ok(())
}
