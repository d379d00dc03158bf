//! Seeded replay of call sessions under the seven ranking models.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calllog::{Session, TrafficProfile};
use crate::error::{Error, Result};
use crate::exposure::{
    aspect_shares, inventory_window, item_targets, AspectRule, ExposureLedger, ExposurePlan, FairnessPolicy,
    ItemRule, SlotSchedule,
};
use crate::ranker::{derive_constraints, remaining_exposure_candidates, short_term_diversity, DiversityConstraints, RankedList};
use crate::recommender::{Item, RecommendedPool};

pub mod seeds;
pub mod synthetic;

pub use seeds::derive_seed;

const DEPTH_STREAM: u64 = 0xD3E7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    RandomBaseline,
    ManualModeration,
    UserPreference,
    Policy3a,
    Policy3b,
    Policy3c,
    Policy3d,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 7] = [
        ModelVariant::RandomBaseline,
        ModelVariant::ManualModeration,
        ModelVariant::UserPreference,
        ModelVariant::Policy3a,
        ModelVariant::Policy3b,
        ModelVariant::Policy3c,
        ModelVariant::Policy3d,
    ];

    pub const POLICIES: [ModelVariant; 4] = [
        ModelVariant::Policy3a,
        ModelVariant::Policy3b,
        ModelVariant::Policy3c,
        ModelVariant::Policy3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::RandomBaseline => "random",
            ModelVariant::ManualModeration => "manual",
            ModelVariant::UserPreference => "user_pref",
            ModelVariant::Policy3a => "3a",
            ModelVariant::Policy3b => "3b",
            ModelVariant::Policy3c => "3c",
            ModelVariant::Policy3d => "3d",
        }
    }

    /// The fairness policy behind a policy variant; `min_share` applies to 3a and 3b.
    pub fn policy(self, min_share: f64) -> Option<FairnessPolicy> {
        let min = AspectRule::MinGuarantee { min_share };
        Some(match self {
            ModelVariant::Policy3a => FairnessPolicy::new(min, ItemRule::EqualWithinAspect),
            ModelVariant::Policy3b => FairnessPolicy::new(min, ItemRule::ProportionalToRating),
            ModelVariant::Policy3c => FairnessPolicy::new(AspectRule::EqualExposure, ItemRule::EqualWithinAspect),
            ModelVariant::Policy3d => FairnessPolicy::new(AspectRule::EqualExposure, ItemRule::ProportionalToRating),
            _ => return None,
        })
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_prefix("policy").unwrap_or(&key);
        ModelVariant::ALL
            .into_iter()
            .find(|v| v.name() == key)
            .or(match key {
                "randombaseline" | "baseline" => Some(ModelVariant::RandomBaseline),
                "manualmoderation" => Some(ModelVariant::ManualModeration),
                "userpreference" | "user-pref" => Some(ModelVariant::UserPreference),
                _ => None,
            })
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

/// How far down the list each replayed caller listens.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepthMode {
    /// The session's logged number of listens.
    #[default]
    #[serde(rename = "replay-depth")]
    ReplayDepth,
    /// Drawn from the traffic profile's rank-reach probabilities.
    #[serde(rename = "sample-depth")]
    SampleDepth,
}

impl FromStr for DepthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replay-depth" => Ok(DepthMode::ReplayDepth),
            "sample-depth" => Ok(DepthMode::SampleDepth),
            other => Err(Error::Config(format!("unknown depth mode {other:?}"))),
        }
    }
}

/// Everything one cluster's replay reads.
#[derive(Clone, Copy, Debug)]
pub struct ReplayContext<'a> {
    pub sessions: &'a [Session],
    /// The topic's catalogue; creation times gate availability.
    pub items: &'a [Item],
    pub pool: &'a RecommendedPool,
    pub traffic: &'a TrafficProfile,
    pub schedule: &'a SlotSchedule,
    pub depth_mode: DepthMode,
    pub min_share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedSession {
    pub call_id: String,
    pub reason: String,
}

/// Inventory and summed targets of one plan built during a replay.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub slot: usize,
    pub inventory: f64,
    pub total_desired: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExposureOutcome {
    pub variant: ModelVariant,
    pub cluster: usize,
    pub seed: u64,
    pub exposure_by_item: BTreeMap<String, u64>,
    /// A listen credits every aspect of the item.
    pub exposure_by_aspect: BTreeMap<String, u64>,
    pub lists: Vec<RankedList>,
    /// Number of (session, reached rank) pairs simulated.
    pub listens: u64,
    pub plans: Vec<PlanSummary>,
    pub skipped: Vec<SkippedSession>,
}

impl ExposureOutcome {
    fn empty(variant: ModelVariant, cluster: usize, seed: u64, items: &[Item]) -> Self {
        ExposureOutcome {
            variant,
            cluster,
            seed,
            exposure_by_item: items.iter().map(|i| (i.item_id.clone(), 0)).collect(),
            exposure_by_aspect: items
                .iter()
                .flat_map(|i| i.aspects.iter().map(|a| (a.clone(), 0)))
                .collect(),
            lists: Vec::new(),
            listens: 0,
            plans: Vec::new(),
            skipped: Vec::new(),
        }
    }

    fn credit(&mut self, item: &str, aspects: &[String]) {
        *self.exposure_by_item.entry(item.to_string()).or_insert(0) += 1;
        for a in aspects {
            *self.exposure_by_aspect.entry(a.clone()).or_insert(0) += 1;
        }
        self.listens += 1;
    }
}

/// Maps timestamps onto the repeating schedule. Day 0 of the cycle is the
/// date of the earliest session; slot-hour `t` counts scheduled hours from
/// its start.
struct Timeline {
    origin: NaiveDate,
    cycle: Vec<(u32, u32)>,
    cycle_days: u32,
}

impl Timeline {
    fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        let day = (ts.date() - self.origin).num_days();
        if day < 0 {
            return None;
        }
        let rounds = day as usize / self.cycle_days as usize;
        let key = ((day as u32) % self.cycle_days, ts.hour());
        let pos = self.cycle.binary_search(&key).ok()?;
        Some(rounds * self.cycle.len() + pos)
    }

    fn start_of(&self, t: usize) -> NaiveDateTime {
        let (d, h) = self.cycle[t % self.cycle.len()];
        let day = (t / self.cycle.len()) as i64 * self.cycle_days as i64 + d as i64;
        self.origin.and_hms_opt(0, 0, 0).expect("midnight") + Duration::days(day) + Duration::hours(h as i64)
    }
}

struct PolicyState {
    policy: FairnessPolicy,
    window: Option<usize>,
    window_start: usize,
    ledger: ExposureLedger,
    /// Targets of completed windows, per item.
    carried: BTreeMap<String, f64>,
    /// Targets of the current window under the latest plan.
    window_targets: BTreeMap<String, f64>,
    available: Vec<String>,
    active: Option<(RecommendedPool, ExposurePlan, DiversityConstraints)>,
}

/// Replays `ctx.sessions` under `variant`. Lists are regenerated every
/// `regen_interval` slot-hours from the items available at that moment; each
/// session in a slot-hour listens down the current list. Policy variants plan
/// one window of `horizon_hours` at a time and re-plan the current window
/// whenever newly available liked items appear. The ledger runs for the whole
/// replay, and targets of finished windows carry over, so an item's utility
/// is its desired exposure to date minus its listens to date.
pub fn replay(ctx: &ReplayContext<'_>, variant: ModelVariant, cluster: usize, seed: u64) -> Result<ExposureOutcome> {
    ctx.schedule.validate()?;
    let mut out = ExposureOutcome::empty(variant, cluster, seed, ctx.items);
    let catalogue: BTreeMap<&str, &Item> = ctx.items.iter().map(|i| (i.item_id.as_str(), i)).collect();
    let aspects_of = |id: &str| -> Vec<String> {
        match catalogue.get(id) {
            Some(it) => it.aspects.iter().cloned().collect(),
            None => ctx.pool.aspects_of(id).to_vec(),
        }
    };

    let Some(origin) = ctx.sessions.iter().map(|s| s.start().date()).min() else {
        return Ok(out);
    };
    let timeline = Timeline {
        origin,
        cycle: ctx.schedule.cycle_hours(),
        cycle_days: ctx.schedule.cycle_days(),
    };
    let mut buckets: BTreeMap<usize, Vec<&Session>> = BTreeMap::new();
    for s in ctx.sessions {
        match timeline.index_of(s.start()) {
            Some(t) => buckets.entry(t).or_default().push(s),
            None => out.skipped.push(SkippedSession {
                call_id: s.call_id.clone(),
                reason: format!("starts at {} outside every slot", s.start()),
            }),
        }
    }
    let Some(&last) = buckets.keys().next_back() else {
        return Ok(out);
    };

    if variant == ModelVariant::ManualModeration {
        for (&t, sessions) in &buckets {
            for s in sessions {
                let heard: Vec<String> = s
                    .events
                    .iter()
                    .filter(|e| catalogue.contains_key(e.item_id.as_str()))
                    .map(|e| e.item_id.clone())
                    .collect();
                for id in &heard {
                    out.credit(id, &aspects_of(id));
                }
                let n = heard.len();
                out.lists.push(RankedList::plain(heard, vec![0.0; n], t));
            }
        }
        return Ok(out);
    }

    let variant_seed = derive_seed(seed, variant.tag());
    let mut depth_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, DEPTH_STREAM));
    let n = ctx.schedule.list_length;
    let available_at = |id: &str, at: NaiveDateTime| catalogue.get(id).is_none_or(|it| it.created_at <= at);
    let mut policy = variant.policy(ctx.min_share).map(|policy| PolicyState {
        policy,
        window: None,
        window_start: 0,
        ledger: ExposureLedger::default(),
        carried: BTreeMap::new(),
        window_targets: BTreeMap::new(),
        available: Vec::new(),
        active: None,
    });
    let ratings: BTreeMap<String, u8> = ctx.items.iter().map(|i| (i.item_id.clone(), i.rating)).collect();
    let mut current = RankedList::default();

    for t in 0..=last {
        if t % ctx.schedule.regen_interval == 0 {
            let at = timeline.start_of(t);
            current = match variant {
                ModelVariant::RandomBaseline => {
                    let mut avail: Vec<&str> = ctx
                        .items
                        .iter()
                        .filter(|i| i.created_at <= at)
                        .map(|i| i.item_id.as_str())
                        .collect();
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(variant_seed, t as u64));
                    avail.shuffle(&mut rng);
                    avail.truncate(n);
                    let ids: Vec<String> = avail.into_iter().map(String::from).collect();
                    let k = ids.len();
                    RankedList::plain(ids, vec![0.0; k], t)
                }
                ModelVariant::UserPreference => {
                    let mut liked: Vec<(&str, f64)> = ctx
                        .pool
                        .liked_items()
                        .into_iter()
                        .filter(|id| available_at(id, at))
                        .map(|id| (id, ctx.pool.predictions.get(id).map_or(0.0, |p| p.probability)))
                        .collect();
                    liked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
                    liked.truncate(n);
                    let (ids, utils): (Vec<String>, Vec<f64>) =
                        liked.into_iter().map(|(id, p)| (id.to_string(), p)).unzip();
                    RankedList::plain(ids, utils, t)
                }
                _ => {
                    let st = policy.as_mut().expect("policy variant");
                    policy_list(st, ctx, t, at, &ratings, &available_at, &mut out.plans)?
                }
            };
            out.lists.push(current.clone());
        }
        let Some(sessions) = buckets.get(&t) else { continue };
        for s in sessions {
            let depth = match ctx.depth_mode {
                DepthMode::ReplayDepth => s.events.len(),
                DepthMode::SampleDepth => {
                    let u: f64 = depth_rng.random();
                    (1..=n).take_while(|&r| ctx.traffic.reach(r) > u).count()
                }
            };
            for id in current.positions.iter().take(depth) {
                out.credit(id, &aspects_of(id));
                if let Some(st) = policy.as_mut() {
                    st.ledger.record_listen(id)?;
                }
            }
        }
    }
    Ok(out)
}

fn policy_list(
    st: &mut PolicyState,
    ctx: &ReplayContext<'_>,
    t: usize,
    at: NaiveDateTime,
    ratings: &BTreeMap<String, u8>,
    available_at: &dyn Fn(&str, NaiveDateTime) -> bool,
    plans: &mut Vec<PlanSummary>,
) -> Result<RankedList> {
    let horizon = ctx.schedule.horizon_hours;
    let new_window = st.window != Some(t / horizon);
    if new_window {
        st.window = Some(t / horizon);
        st.window_start = t / horizon * horizon;
        for (id, d) in std::mem::take(&mut st.window_targets) {
            *st.carried.entry(id).or_insert(0.0) += d;
        }
        st.active = None;
    }
    let available: Vec<String> = ctx
        .pool
        .liked_items()
        .into_iter()
        .filter(|id| available_at(id, at))
        .map(String::from)
        .collect();
    if new_window || available != st.available {
        st.available = available;
        let keep: BTreeSet<&str> = st.available.iter().map(String::as_str).collect();
        st.active = match ctx.pool.restricted(|id| keep.contains(id)) {
            None => None,
            Some(pool) => {
                let shares = aspect_shares(st.policy.aspect_rule, &pool.beta)?;
                let inventory = inventory_window(ctx.traffic, ctx.schedule, st.window_start, horizon)?;
                let mut plan = item_targets(&shares, &pool, st.policy.item_rule, inventory, ratings)?;
                plans.push(PlanSummary {
                    slot: t,
                    inventory,
                    total_desired: plan.targets.values().sum(),
                });
                st.window_targets = plan.targets.clone();
                for (id, d) in &mut plan.targets {
                    st.ledger.track(id);
                    *d += st.carried.get(id).copied().unwrap_or(0.0);
                }
                plan.inventory += st.carried.values().sum::<f64>();
                let constraints = derive_constraints(&shares, ctx.schedule.list_length)?;
                Some((pool, plan, constraints))
            }
        };
    }
    let Some((pool, plan, constraints)) = &st.active else {
        return Ok(RankedList {
            generated_at: t,
            ..Default::default()
        });
    };
    let candidates = remaining_exposure_candidates(pool, plan, &st.ledger)?;
    let mut list = short_term_diversity(&candidates, constraints)?;
    list.generated_at = t;
    Ok(list)
}

/// Runs every variant for every cluster on the same sessions. Cluster `c`
/// replays with seed `derive_seed(seed, c)`; each variant then derives its own
/// stream, so the set of variants does not change any single outcome.
pub fn run_comparison(
    clusters: &[(usize, ReplayContext<'_>)],
    variants: &[ModelVariant],
    seed: u64,
) -> Result<BTreeMap<(usize, ModelVariant), ExposureOutcome>> {
    if variants.is_empty() {
        return Err(Error::InvalidInput("no variants to run".into()));
    }
    let jobs: Vec<(usize, &ReplayContext<'_>, ModelVariant)> = clusters
        .iter()
        .flat_map(|(c, ctx)| variants.iter().map(move |v| (*c, ctx, *v)))
        .collect();
    jobs.into_par_iter()
        .map(|(c, ctx, v)| replay(ctx, v, c, derive_seed(seed, c as u64)).map(|o| ((c, v), o)))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct OutcomeRow {
    variant: String,
    cluster: usize,
    item_id: String,
    aspect: String,
    exposure: u64,
}

/// `variant,cluster,item_id,aspect,exposure`: one row per item and aspect.
pub fn write_outcomes<'a, W: Write>(
    out: W,
    outcomes: impl IntoIterator<Item = &'a ExposureOutcome>,
    item_aspects: &BTreeMap<String, Vec<String>>,
) -> Result<()> {
    // header written by hand so an empty outcome set still has one
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(["variant", "cluster", "item_id", "aspect", "exposure"]).map_err(err)?;
    for o in outcomes {
        for (id, &e) in &o.exposure_by_item {
            let aspects = item_aspects.get(id).ok_or_else(|| Error::UnknownItem(id.clone()))?;
            for a in aspects {
                w.serialize(OutcomeRow {
                    variant: o.variant.name().to_string(),
                    cluster: o.cluster,
                    item_id: id.clone(),
                    aspect: a.clone(),
                    exposure: e,
                })
                .map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Reads outcomes back. Lists, plans and seeds are not part of the file.
pub fn read_outcomes<R: Read>(input: R) -> Result<BTreeMap<(usize, ModelVariant), ExposureOutcome>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out: BTreeMap<(usize, ModelVariant), ExposureOutcome> = BTreeMap::new();
    for row in r.deserialize::<OutcomeRow>() {
        let row = row.map_err(|e| Error::InvalidInput(e.to_string()))?;
        let variant: ModelVariant = row.variant.parse()?;
        let o = out.entry((row.cluster, variant)).or_insert_with(|| ExposureOutcome {
            variant,
            cluster: row.cluster,
            seed: 0,
            exposure_by_item: BTreeMap::new(),
            exposure_by_aspect: BTreeMap::new(),
            lists: Vec::new(),
            listens: 0,
            plans: Vec::new(),
            skipped: Vec::new(),
        });
        if o.exposure_by_item.insert(row.item_id, row.exposure).is_none() {
            o.listens += row.exposure;
        }
        *o.exposure_by_aspect.entry(row.aspect).or_insert(0) += row.exposure;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::synthetic::{generate_synthetic, SyntheticWorkloadSpec};
    use super::*;
    use crate::calllog::tests::{event, ts};
    use crate::calllog::{assemble_sessions, KeyPress};
    use crate::exposure::Slot;
    use crate::recommender::Prediction;

    fn small_world() -> (Vec<Item>, RecommendedPool, Vec<Session>, TrafficProfile, SlotSchedule) {
        let mut items = Vec::new();
        for i in 0..6 {
            let mut it = Item::new(format!("i{i}"), "MDD", [if i < 4 { "A" } else { "B" }], 3 + (i % 3) as u8);
            it.created_at = ts("2020-01-01T00:00:00");
            items.push(it);
        }
        let pool = RecommendedPool::from_liked("MDD", 0, &items, |it| {
            Some(Prediction::from_probability(if it.item_id == "i3" { 0.2 } else { 0.9 }))
        })
        .unwrap();
        let mut events = Vec::new();
        for h in 0..4 {
            for c in 0..3 {
                let call = format!("c{h}{c}");
                for (r, item) in ["i0", "i1", "i4"].iter().enumerate() {
                    events.push(event(&call, item, 80.0, KeyPress::None, &format!("2020-01-01T{:02}:{:02}:{:02}", 10 + h, c * 10, r)));
                }
            }
        }
        events.push(event("late", "i0", 80.0, KeyPress::None, "2020-01-01T22:00:00"));
        let sessions = assemble_sessions(events);
        let traffic = TrafficProfile::new(vec![3.0; 24], vec![1.0, 0.8, 0.6, 0.4]).unwrap();
        let schedule = SlotSchedule {
            slots: vec![Slot {
                day: 0,
                start_hour: 10,
                end_hour: 14,
            }],
            horizon_hours: 2,
            regen_interval: 1,
            list_length: 3,
        };
        (items, pool, sessions, traffic, schedule)
    }

    #[test]
    fn manual_passes_listens_through() {
        let (items, pool, sessions, traffic, schedule) = small_world();
        let ctx = ReplayContext {
            sessions: &sessions,
            items: &items,
            pool: &pool,
            traffic: &traffic,
            schedule: &schedule,
            depth_mode: DepthMode::ReplayDepth,
            min_share: 0.05,
        };
        let o = replay(&ctx, ModelVariant::ManualModeration, 0, 1).unwrap();
        assert_eq!(o.listens, 36);
        assert_eq!(o.exposure_by_item["i0"], 12);
        assert_eq!(o.exposure_by_item["i2"], 0);
        assert_eq!(o.skipped.len(), 1);
        assert_eq!(o.skipped[0].call_id, "late");
    }

    #[test]
    fn ranked_variants_conserve_and_repeat() {
        let (items, pool, sessions, traffic, schedule) = small_world();
        for mode in [DepthMode::ReplayDepth, DepthMode::SampleDepth] {
            let ctx = ReplayContext {
                sessions: &sessions,
                items: &items,
                pool: &pool,
                traffic: &traffic,
                schedule: &schedule,
                depth_mode: mode,
                min_share: 0.05,
            };
            for v in ModelVariant::ALL {
                let a = replay(&ctx, v, 0, 9).unwrap();
                let b = replay(&ctx, v, 0, 9).unwrap();
                assert_eq!(a, b);
                assert_eq!(a.exposure_by_item.values().sum::<u64>(), a.listens);
                assert!(a.exposure_by_aspect.values().sum::<u64>() >= a.listens);
                if v != ModelVariant::ManualModeration {
                    assert_eq!(a.lists.len(), 4);
                }
                if mode == DepthMode::ReplayDepth && v != ModelVariant::ManualModeration {
                    assert_eq!(a.listens, 36, "{v}");
                }
                for p in &a.plans {
                    assert!((p.total_desired - p.inventory).abs() <= 1e-6 * p.inventory);
                }
            }
        }
    }

    #[test]
    fn user_preference_follows_probability() {
        let (items, pool, sessions, traffic, schedule) = small_world();
        let ctx = ReplayContext {
            sessions: &sessions,
            items: &items,
            pool: &pool,
            traffic: &traffic,
            schedule: &schedule,
            depth_mode: DepthMode::ReplayDepth,
            min_share: 0.05,
        };
        let o = replay(&ctx, ModelVariant::UserPreference, 0, 0).unwrap();
        assert_eq!(o.lists[0].positions, ["i0", "i1", "i2"]);
        assert_eq!(o.exposure_by_item["i3"], 0);
    }

    #[test]
    fn equal_exposure_balances_aspects() {
        let mut spec = SyntheticWorkloadSpec::skewed();
        spec.aspects.truncate(2);
        spec.hours = 2000;
        spec.users_per_hour = 10.0;
        let w = generate_synthetic(&spec, 3).unwrap();
        let pool = RecommendedPool::from_liked(&spec.topic, 0, &w.items, |it| {
            let s = w.scores[&it.item_id];
            Some(Prediction {
                probability: (1.0 + s) / 2.0,
                label: s > 0.0,
            })
        })
        .unwrap();
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
        let o = replay(&ctx, ModelVariant::Policy3c, 0, 5).unwrap();
        let v: Vec<f64> = o.exposure_by_aspect.values().map(|&e| e as f64).collect();
        assert!((v[0] - v[1]).abs() / v[0].max(v[1]) < 0.05, "{v:?}");
    }

    #[test]
    fn comparison_keys_and_manual_stability() {
        let (items, pool, sessions, traffic, schedule) = small_world();
        let ctx = ReplayContext {
            sessions: &sessions,
            items: &items,
            pool: &pool,
            traffic: &traffic,
            schedule: &schedule,
            depth_mode: DepthMode::SampleDepth,
            min_share: 0.05,
        };
        let runs = run_comparison(&[(0, ctx), (1, ctx)], &ModelVariant::ALL, 11).unwrap();
        assert_eq!(runs.len(), 14);
        let again = run_comparison(&[(0, ctx)], &[ModelVariant::ManualModeration, ModelVariant::Policy3c], 11).unwrap();
        assert_eq!(again[&(0, ModelVariant::ManualModeration)], runs[&(0, ModelVariant::ManualModeration)]);
        assert_eq!(again[&(0, ModelVariant::Policy3c)], runs[&(0, ModelVariant::Policy3c)]);
        assert!(run_comparison(&[(0, ctx)], &[], 1).is_err());
    }

    #[test]
    fn outcomes_round_trip() {
        let (items, pool, sessions, traffic, schedule) = small_world();
        let ctx = ReplayContext {
            sessions: &sessions,
            items: &items,
            pool: &pool,
            traffic: &traffic,
            schedule: &schedule,
            depth_mode: DepthMode::ReplayDepth,
            min_share: 0.05,
        };
        let o = replay(&ctx, ModelVariant::Policy3a, 2, 0).unwrap();
        let aspects: BTreeMap<String, Vec<String>> = items
            .iter()
            .map(|i| (i.item_id.clone(), i.aspects.iter().cloned().collect()))
            .collect();
        let mut buf = Vec::new();
        write_outcomes(&mut buf, [&o], &aspects).unwrap();
        let back = read_outcomes(buf.as_slice()).unwrap();
        let b = &back[&(2, ModelVariant::Policy3a)];
        assert_eq!(b.exposure_by_item, o.exposure_by_item);
        assert_eq!(b.exposure_by_aspect, o.exposure_by_aspect);
        assert_eq!(b.listens, o.listens);
    }

    #[test]
    fn variant_names_parse() {
        for v in ModelVariant::ALL {
            assert_eq!(v.name().parse::<ModelVariant>().unwrap(), v);
        }
        assert_eq!("Policy3b".parse::<ModelVariant>().unwrap(), ModelVariant::Policy3b);
        assert!("4e".parse::<ModelVariant>().is_err());
    }
}
