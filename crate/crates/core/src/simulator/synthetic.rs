//! Synthetic call-log workloads with known ground-truth preferences.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDateTime};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::calllog::{parse_timestamp, KeyPress, ListenEvent, Session, Source, TrafficProfile};
use crate::error::{Error, Result};
use crate::recommender::Item;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AspectSpec {
    pub name: String,
    /// Items present at time zero. Arrivals pick aspects in the same proportions.
    pub initial_items: usize,
    /// Probability that the audience likes an item of this aspect.
    pub like_rate: f64,
    /// Liked items score uniformly in (0, preference_strength].
    pub preference_strength: f64,
    /// Weights of ratings 1..=5.
    pub rating_weights: [f64; 5],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWorkloadSpec {
    pub topic: String,
    pub num_users: usize,
    pub aspects: Vec<AspectSpec>,
    /// Mean calls per hour (Poisson).
    pub users_per_hour: f64,
    /// Gamma shape of per-caller activity weights; small values make a few
    /// callers dominate.
    pub activity_shape: f64,
    pub rank_reach_prob: Vec<f64>,
    pub hours: usize,
    pub item_arrival_rate: f64,
    /// Length of the lists the logged editor plays.
    pub list_length: usize,
    pub start: NaiveDateTime,
}

impl SyntheticWorkloadSpec {
    /// Five aspects whose liked-item shares come out near (0.5, 0.2, 0.15,
    /// 0.1, 0.05), over a catalogue skewed harder than that; 200 callers over
    /// 500 hours.
    pub fn skewed() -> Self {
        let aspect = |name: &str, initial_items, like_rate, preference_strength| AspectSpec {
            name: name.into(),
            initial_items,
            like_rate,
            preference_strength,
            rating_weights: [0.0, 0.0, 0.4, 0.35, 0.25],
        };
        SyntheticWorkloadSpec {
            topic: "MDD".into(),
            num_users: 200,
            aspects: vec![
                aspect("myths", 120, 0.556, 1.0),
                aspect("recipes", 36, 0.741, 0.35),
                aspect("hygiene", 20, 1.0, 0.35),
                aspect("schedule", 14, 0.952, 0.35),
                aspect("allergy", 10, 0.667, 0.35),
            ],
            users_per_hour: 15.0,
            activity_shape: 2.0,
            rank_reach_prob: vec![1.0, 0.8, 0.65, 0.5, 0.4, 0.3, 0.22, 0.15, 0.1, 0.06],
            hours: 500,
            item_arrival_rate: 0.4,
            list_length: 10,
            start: parse_timestamp("2024-01-01T00:00:00").expect("literal"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.num_users == 0 || self.aspects.is_empty() || self.list_length == 0 {
            return bad("users, aspects and list length must be positive");
        }
        if !(self.users_per_hour > 0.0) || !(self.activity_shape > 0.0) || !(self.item_arrival_rate >= 0.0) {
            return bad("rates must be positive");
        }
        for a in &self.aspects {
            if !(0.0..=1.0).contains(&a.like_rate) || !(a.preference_strength > 0.0 && a.preference_strength <= 1.0) {
                return bad("like rate and preference strength must lie in [0, 1]");
            }
            if a.rating_weights.iter().any(|w| *w < 0.0) || a.rating_weights.iter().sum::<f64>() <= 0.0 {
                return bad("rating weights must be non-negative with a positive sum");
            }
        }
        if self.aspects.iter().all(|a| a.initial_items == 0) {
            return bad("at least one aspect needs initial items");
        }
        TrafficProfile::new(vec![self.users_per_hour; 24], self.rank_reach_prob.clone()).map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticWorkload {
    pub items: Vec<Item>,
    pub sessions: Vec<Session>,
    pub traffic: TrafficProfile,
    /// Ground-truth audience score per item in [-1, 1]; liked iff > 0.
    pub scores: BTreeMap<String, f64>,
}

impl SyntheticWorkload {
    pub fn events(&self) -> impl Iterator<Item = &ListenEvent> {
        self.sessions.iter().flat_map(|s| s.events.iter())
    }
}

struct Drafted {
    item: Item,
    score: f64,
    duration: f64,
}

/// Builds a workload: initial items, Poisson item arrivals, Poisson calls per
/// hour from activity-weighted callers, and logged sessions that listen down
/// an editor's list (highest rating first, newest first within a rating) to a
/// depth drawn from the reach probabilities.
pub fn generate_synthetic(spec: &SyntheticWorkloadSpec, seed: u64) -> Result<SyntheticWorkload> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let err = |e: String| Error::InvalidInput(e);
    let ratings: Vec<WeightedIndex<f64>> = spec
        .aspects
        .iter()
        .map(|a| WeightedIndex::new(a.rating_weights).map_err(|e| err(e.to_string())))
        .collect::<Result<_>>()?;
    let aspect_pick =
        WeightedIndex::new(spec.aspects.iter().map(|a| a.initial_items as f64)).map_err(|e| err(e.to_string()))?;

    let mut drafted: Vec<Drafted> = Vec::new();
    let mut draft = |rng: &mut ChaCha8Rng, aspect: usize, at: NaiveDateTime| {
        let a = &spec.aspects[aspect];
        let u: f64 = rng.random();
        let score = if rng.random::<f64>() < a.like_rate {
            a.preference_strength * (1.0 - u)
        } else {
            -(1.0 - u)
        };
        let mut item = Item::new(
            format!("item-{:05}", drafted.len()),
            spec.topic.clone(),
            [a.name.clone()],
            ratings[aspect].sample(rng) as u8 + 1,
        );
        item.contributor_id = format!("contrib-{:02}", rng.random_range(0..20));
        item.created_at = at;
        let duration = rng.random_range(60.0..180.0f64).round();
        drafted.push(Drafted { item, score, duration });
    };
    for (j, a) in spec.aspects.iter().enumerate() {
        for _ in 0..a.initial_items {
            draft(&mut rng, j, spec.start);
        }
    }
    if spec.item_arrival_rate > 0.0 {
        let arrivals = Poisson::new(spec.item_arrival_rate).map_err(|e| err(e.to_string()))?;
        for h in 0..spec.hours {
            let k = arrivals.sample(&mut rng) as usize;
            for _ in 0..k {
                let at = spec.start + Duration::hours(h as i64) + Duration::seconds(rng.random_range(0..3600));
                let j = aspect_pick.sample(&mut rng);
                draft(&mut rng, j, at);
            }
        }
    }
    drafted.sort_by(|a, b| a.item.created_at.cmp(&b.item.created_at).then_with(|| a.item.item_id.cmp(&b.item.item_id)));

    let gamma = Gamma::new(spec.activity_shape, 1.0).map_err(|e| err(e.to_string()))?;
    let activity: Vec<f64> = (0..spec.num_users).map(|_| gamma.sample(&mut rng).max(1e-9)).collect();
    let callers = WeightedIndex::new(&activity).map_err(|e| err(e.to_string()))?;
    let calls = Poisson::new(spec.users_per_hour).map_err(|e| err(e.to_string()))?;

    let mut sessions = Vec::new();
    for h in 0..spec.hours {
        let hour_start = spec.start + Duration::hours(h as i64);
        let mut editor: Vec<&Drafted> = drafted.iter().filter(|d| d.item.created_at <= hour_start).collect();
        editor.sort_by(|a, b| {
            b.item
                .rating
                .cmp(&a.item.rating)
                .then_with(|| b.item.created_at.cmp(&a.item.created_at))
                .then_with(|| a.item.item_id.cmp(&b.item.item_id))
        });
        editor.truncate(spec.list_length);
        let n_calls = calls.sample(&mut rng) as usize;
        let mut starts: Vec<(i64, usize)> = (0..n_calls)
            .map(|_| (rng.random_range(0..3000), callers.sample(&mut rng)))
            .collect();
        starts.sort();
        for (i, (offset, caller)) in starts.into_iter().enumerate() {
            let u: f64 = rng.random();
            let depth = (1..=editor.len())
                .take_while(|&r| spec.rank_reach_prob.get(r - 1).copied().unwrap_or(0.0) > u)
                .count()
                .max(1)
                .min(editor.len());
            let call_id = format!("call-{h:05}-{i:03}");
            let mut at = hour_start + Duration::seconds(offset);
            let mut events = Vec::with_capacity(depth);
            for (r, d) in editor.iter().take(depth).enumerate() {
                let liked = d.score > 0.0;
                let fraction = if liked {
                    rng.random_range(0.5..=1.0)
                } else {
                    rng.random_range(0.05..0.4)
                };
                let key = match (liked, rng.random::<f64>()) {
                    (true, p) if p < 0.5 => KeyPress::Like,
                    (false, p) if p < 0.5 => KeyPress::Skip,
                    _ => KeyPress::None,
                };
                let heard = (d.duration * fraction).round().min(d.duration);
                events.push(ListenEvent {
                    call_id: call_id.clone(),
                    caller_id: format!("user-{caller:04}"),
                    item_id: d.item.item_id.clone(),
                    contributor_id: d.item.contributor_id.clone(),
                    item_duration: d.duration,
                    duration_heard: heard,
                    source: Source::User,
                    topic: spec.topic.clone(),
                    aspect: d.item.aspects.iter().next().cloned().unwrap_or_default(),
                    rating: d.item.rating,
                    key_pressed: key,
                    timestamp: at,
                    rank_position: Some(r as u32 + 1),
                });
                at += Duration::seconds(heard as i64 + 1);
            }
            sessions.push(Session {
                call_id,
                caller_id: format!("user-{caller:04}"),
                events,
            });
        }
    }

    let traffic = TrafficProfile::new(vec![spec.users_per_hour; 24], spec.rank_reach_prob.clone())?;
    let scores = drafted.iter().map(|d| (d.item.item_id.clone(), d.score)).collect();
    Ok(SyntheticWorkload {
        items: drafted.into_iter().map(|d| d.item).collect(),
        sessions,
        traffic,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_hours_has_only_initial_items() {
        let mut spec = SyntheticWorkloadSpec::skewed();
        spec.hours = 0;
        let w = generate_synthetic(&spec, 1).unwrap();
        assert!(w.sessions.is_empty());
        assert_eq!(w.items.len(), 200);
        assert!(w.items.iter().all(|i| i.created_at == spec.start));
    }

    #[test]
    fn arrivals_match_the_rate() {
        let mut spec = SyntheticWorkloadSpec::skewed();
        spec.hours = 100;
        spec.users_per_hour = 0.5;
        let counts: Vec<f64> = (0..100)
            .map(|s| (generate_synthetic(&spec, s).unwrap().items.len() - 200) as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        let expected = spec.item_arrival_rate * spec.hours as f64;
        // the mean of 100 Poisson(40) draws has standard deviation sqrt(40) / 10
        assert!((mean - expected).abs() < 3.0 * expected.sqrt() / 10.0, "{mean}");
    }

    #[test]
    fn seeds_control_the_stream() {
        let mut spec = SyntheticWorkloadSpec::skewed();
        spec.hours = 10;
        let a = generate_synthetic(&spec, 1).unwrap();
        assert_eq!(a, generate_synthetic(&spec, 1).unwrap());
        assert_ne!(a.sessions, generate_synthetic(&spec, 2).unwrap().sessions);
        for s in &a.sessions {
            assert!(!s.events.is_empty() && s.events.len() <= spec.list_length);
            assert!(s.events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        }
    }

    #[test]
    fn liked_shares_follow_the_design() {
        let spec = SyntheticWorkloadSpec::skewed();
        let w = generate_synthetic(&spec, 4).unwrap();
        let mut liked: BTreeMap<&str, f64> = BTreeMap::new();
        for it in &w.items {
            if w.scores[&it.item_id] > 0.0 {
                *liked.entry(it.aspects.iter().next().unwrap()).or_default() += 1.0;
            }
        }
        let total: f64 = liked.values().sum();
        assert!((liked["myths"] / total - 0.5).abs() < 0.1, "{liked:?}");
        assert!(liked["allergy"] / total < 0.1);
    }
}
