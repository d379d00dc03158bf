//! Exposure inventory, editorial fairness policies, per-item desired exposure
//! and the ledger of exposure achieved so far.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calllog::TrafficProfile;
use crate::error::{Error, Result};
use crate::recommender::RecommendedPool;

const SHARE_TOLERANCE: f64 = 1e-9;

/// How the inventory is split across aspects.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AspectRule {
    /// Shares follow the liked-item shares β unchanged.
    UserPreference,
    /// Every aspect gets at least `min_share`; the rest follows β.
    MinGuarantee { min_share: f64 },
    /// 1/|aspects| each.
    EqualExposure,
}

/// How an aspect's budget is split across its items.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ItemRule {
    EqualWithinAspect,
    ProportionalToRating,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessPolicy {
    pub aspect_rule: AspectRule,
    pub item_rule: ItemRule,
}

impl FairnessPolicy {
    pub const fn new(aspect_rule: AspectRule, item_rule: ItemRule) -> Self {
        FairnessPolicy {
            aspect_rule,
            item_rule,
        }
    }
}

/// The policy block of a run config:
/// `aspect_rule = user_pref | min_guarantee | equal`, `min_share`, `item_rule = equal | rating`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub aspect_rule: String,
    pub min_share: f64,
    pub item_rule: String,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            aspect_rule: "min_guarantee".into(),
            min_share: 0.05,
            item_rule: "equal".into(),
        }
    }
}

impl TryFrom<&PolicyConfig> for FairnessPolicy {
    type Error = Error;

    fn try_from(c: &PolicyConfig) -> Result<Self> {
        let aspect_rule = match c.aspect_rule.as_str() {
            "user_pref" => AspectRule::UserPreference,
            "min_guarantee" => AspectRule::MinGuarantee {
                min_share: c.min_share,
            },
            "equal" => AspectRule::EqualExposure,
            other => return Err(Error::Config(format!("unknown aspect_rule {other:?}"))),
        };
        let item_rule = match c.item_rule.as_str() {
            "equal" => ItemRule::EqualWithinAspect,
            "rating" => ItemRule::ProportionalToRating,
            other => return Err(Error::Config(format!("unknown item_rule {other:?}"))),
        };
        Ok(FairnessPolicy::new(aspect_rule, item_rule))
    }
}

/// A daily window `[start_hour, end_hour)` on day `day` of the schedule cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    #[serde(default)]
    pub day: u32,
    pub start_hour: u32,
    pub end_hour: u32,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "day {} {:02}-{:02}h", self.day, self.start_hour, self.end_hour)
    }
}

/// When a topic is on air, how far ahead exposure is planned and how often
/// lists are regenerated. The slot pattern repeats every `cycle_days()` days.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlotSchedule {
    pub slots: Vec<Slot>,
    /// Planning horizon, in slot-hours.
    pub horizon_hours: usize,
    /// Slot-hours between list regenerations.
    pub regen_interval: usize,
    /// Items per generated list.
    pub list_length: usize,
}

impl Default for SlotSchedule {
    fn default() -> Self {
        SlotSchedule {
            slots: vec![Slot {
                day: 0,
                start_hour: 0,
                end_hour: 24,
            }],
            horizon_hours: 100,
            regen_interval: 1,
            list_length: 10,
        }
    }
}

impl SlotSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.slots.is_empty() {
            return Err(Error::EmptySchedule);
        }
        if self.horizon_hours == 0 || self.regen_interval == 0 || self.list_length == 0 {
            return Err(Error::InvalidInput(
                "horizon, regeneration interval and list length must be positive".into(),
            ));
        }
        for s in &self.slots {
            if s.start_hour >= s.end_hour || s.end_hour > 24 {
                return Err(Error::InvalidInput(format!("bad slot {s}")));
            }
        }
        Ok(())
    }

    pub fn cycle_days(&self) -> u32 {
        self.slots.iter().map(|s| s.day).max().map_or(1, |d| d + 1)
    }

    /// Distinct (day-of-cycle, hour) pairs, in time order.
    pub fn cycle_hours(&self) -> Vec<(u32, u32)> {
        let set: BTreeSet<(u32, u32)> = self
            .slots
            .iter()
            .flat_map(|s| (s.start_hour..s.end_hour).map(move |h| (s.day, h)))
            .collect();
        set.into_iter().collect()
    }

    pub fn contains(&self, day_index: i64, hour: u32) -> bool {
        let day = day_index.rem_euclid(self.cycle_days() as i64) as u32;
        self.slots
            .iter()
            .any(|s| s.day == day && (s.start_hour..s.end_hour).contains(&hour))
    }
}

/// Expected listens over `hours` slot-hours starting at slot-hour
/// `start_index` of the repeating schedule.
pub fn inventory_window(
    traffic: &TrafficProfile,
    schedule: &SlotSchedule,
    start_index: usize,
    hours: usize,
) -> Result<f64> {
    schedule.validate()?;
    if schedule.list_length > traffic.rank_reach_prob.len() {
        return Err(Error::InvalidInput(format!(
            "list length {} exceeds the {} ranks of the traffic profile",
            schedule.list_length,
            traffic.rank_reach_prob.len()
        )));
    }
    let cycle = schedule.cycle_hours();
    let per_listener = traffic.expected_depth(schedule.list_length);
    let users: f64 = (start_index..start_index + hours)
        .map(|i| traffic.users_per_hour[cycle[i % cycle.len()].1 as usize])
        .sum();
    Ok(users * per_listener)
}

/// Expected listens over the planning horizon: callers per scheduled hour
/// times the expected number of ranks each caller reaches.
pub fn total_inventory(traffic: &TrafficProfile, schedule: &SlotSchedule) -> Result<f64> {
    inventory_window(traffic, schedule, 0, schedule.horizon_hours)
}

fn check_shares(beta: &BTreeMap<String, f64>) -> Result<()> {
    if beta.is_empty() {
        return Err(Error::InvalidInput("no aspects".into()));
    }
    let sum: f64 = beta.values().sum();
    if (sum - 1.0).abs() > SHARE_TOLERANCE || beta.values().any(|&b| !(0.0..=1.0).contains(&b)) {
        return Err(Error::InvalidInput(format!("aspect shares must sum to 1, got {sum}")));
    }
    Ok(())
}

/// Adjusts liked-item shares β according to the aspect rule.
pub fn aspect_shares(rule: AspectRule, beta: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    check_shares(beta)?;
    match rule {
        AspectRule::UserPreference => Ok(beta.clone()),
        AspectRule::EqualExposure => {
            let each = 1.0 / beta.len() as f64;
            Ok(beta.keys().map(|a| (a.clone(), each)).collect())
        }
        AspectRule::MinGuarantee { min_share } => {
            if !(min_share > 0.0) || min_share * beta.len() as f64 > 1.0 + SHARE_TOLERANCE {
                return Err(Error::InfeasibleMinShare {
                    min_share,
                    aspects: beta.len(),
                });
            }
            let mut pinned: BTreeSet<&String> = BTreeSet::new();
            loop {
                let free: Vec<&String> = beta.keys().filter(|a| !pinned.contains(a)).collect();
                let newly: Vec<&String> = if pinned.is_empty() {
                    free.iter().copied().filter(|a| beta[*a] < min_share).collect()
                } else {
                    let remaining = 1.0 - min_share * pinned.len() as f64;
                    let free_sum: f64 = free.iter().map(|a| beta[*a]).sum();
                    free.iter()
                        .copied()
                        .filter(|a| scaled(beta[*a], free_sum, remaining, free.len()) < min_share)
                        .collect()
                };
                if newly.is_empty() {
                    break;
                }
                pinned.extend(newly);
            }
            if pinned.is_empty() {
                return Ok(beta.clone());
            }
            let remaining = 1.0 - min_share * pinned.len() as f64;
            let free: Vec<&String> = beta.keys().filter(|a| !pinned.contains(a)).collect();
            let free_sum: f64 = free.iter().map(|a| beta[*a]).sum();
            Ok(beta
                .iter()
                .map(|(a, &b)| {
                    let s = if pinned.contains(a) {
                        min_share
                    } else {
                        scaled(b, free_sum, remaining, free.len())
                    };
                    (a.clone(), s)
                })
                .collect())
        }
    }
}

fn scaled(b: f64, free_sum: f64, remaining: f64, n_free: usize) -> f64 {
    if free_sum > 0.0 {
        remaining * b / free_sum
    } else {
        remaining / n_free as f64
    }
}

/// Desired exposure per item plus the shares and inventory it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExposurePlan {
    pub targets: BTreeMap<String, f64>,
    pub aspect_shares: BTreeMap<String, f64>,
    pub inventory: f64,
}

impl ExposurePlan {
    pub fn target(&self, item: &str) -> Result<f64> {
        self.targets
            .get(item)
            .copied()
            .ok_or_else(|| Error::UnknownItem(item.to_string()))
    }

    /// `item_id,desired_exposure`.
    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::InvalidInput(e.to_string());
        w.write_record(["item_id", "desired_exposure"]).map_err(err)?;
        for (id, d) in &self.targets {
            w.write_record([id.as_str(), &d.to_string()]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Splits `inventory` over aspects by `shares`, then over each aspect's liked
/// items by `item_rule`. Items in several aspects collect a target from each.
pub fn item_targets(
    shares: &BTreeMap<String, f64>,
    pool: &RecommendedPool,
    item_rule: ItemRule,
    inventory: f64,
    ratings: &BTreeMap<String, u8>,
) -> Result<ExposurePlan> {
    if !(inventory >= 0.0) {
        return Err(Error::InvalidInput(format!("inventory {inventory} must be >= 0")));
    }
    let mut targets: BTreeMap<String, f64> = BTreeMap::new();
    for items in pool.items_by_aspect.values() {
        for id in items {
            targets.insert(id.clone(), 0.0);
        }
    }
    for (aspect, &share) in shares {
        let members = pool.items_by_aspect.get(aspect);
        let Some(members) = members.filter(|m| !m.is_empty()) else {
            if share > 0.0 {
                return Err(Error::EmptyAspect(aspect.clone()));
            }
            continue;
        };
        let budget = share * inventory;
        match item_rule {
            ItemRule::EqualWithinAspect => {
                let each = budget / members.len() as f64;
                for id in members {
                    *targets.get_mut(id).expect("seeded above") += each;
                }
            }
            ItemRule::ProportionalToRating => {
                let rating = |id: &String| -> Result<f64> {
                    ratings
                        .get(id)
                        .map(|&r| r as f64)
                        .ok_or_else(|| Error::UnknownItem(id.clone()))
                };
                let total = members.iter().map(rating).sum::<Result<f64>>()?;
                for id in members {
                    *targets.get_mut(id).expect("seeded above") += budget * rating(id)? / total;
                }
            }
        }
    }
    Ok(ExposurePlan {
        targets,
        aspect_shares: shares.clone(),
        inventory,
    })
}

/// Listens achieved per item. Counts only ever grow.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposureLedger {
    achieved: BTreeMap<String, u64>,
}

impl ExposureLedger {
    pub fn for_plan(plan: &ExposurePlan) -> Self {
        ExposureLedger {
            achieved: plan.targets.keys().map(|k| (k.clone(), 0)).collect(),
        }
    }

    /// Starts tracking `item` at zero if it is not tracked yet.
    pub fn track(&mut self, item: &str) {
        self.achieved.entry(item.to_string()).or_insert(0);
    }

    pub fn record_listen(&mut self, item: &str) -> Result<()> {
        match self.achieved.get_mut(item) {
            Some(e) => {
                *e += 1;
                Ok(())
            }
            None => Err(Error::UnknownItem(item.to_string())),
        }
    }

    pub fn achieved(&self, item: &str) -> Result<u64> {
        self.achieved
            .get(item)
            .copied()
            .ok_or_else(|| Error::UnknownItem(item.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &u64)> {
        self.achieved.iter()
    }

    pub fn total(&self) -> u64 {
        self.achieved.values().sum()
    }

    /// `item_id,achieved_exposure`.
    pub fn write_checkpoint<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::InvalidInput(e.to_string());
        w.write_record(["item_id", "achieved_exposure"]).map_err(err)?;
        for (id, e) in &self.achieved {
            w.write_record([id.as_str(), &e.to_string()]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn read_checkpoint<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut achieved = BTreeMap::new();
        for row in r.deserialize::<(String, u64)>() {
            let (id, e) = row.map_err(|e| Error::InvalidInput(e.to_string()))?;
            achieved.insert(id, e);
        }
        Ok(ExposureLedger { achieved })
    }
}

/// D − E for one item; negative once the item is over-served.
pub fn remaining_exposure(plan: &ExposurePlan, ledger: &ExposureLedger, item: &str) -> Result<f64> {
    Ok(plan.target(item)? - ledger.achieved(item)? as f64)
}

impl FromStr for ItemRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal" => Ok(ItemRule::EqualWithinAspect),
            "rating" => Ok(ItemRule::ProportionalToRating),
            other => Err(Error::Config(format!("unknown item_rule {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recommender::{Item, Prediction};
    use proptest::prelude::*;

    fn shares(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(a, s)| (a.to_string(), *s)).collect()
    }

    fn pool(spec: &[(&str, &[&str])]) -> RecommendedPool {
        let mut items = Vec::new();
        for (aspect, ids) in spec {
            for id in *ids {
                items.push(Item::new(*id, "T", [*aspect], 3));
            }
        }
        RecommendedPool::from_liked("T", 0, &items, |_| Some(Prediction::from_probability(1.0))).unwrap()
    }

    fn one_hour_schedule(n: usize) -> SlotSchedule {
        SlotSchedule {
            slots: vec![Slot {
                day: 0,
                start_hour: 18,
                end_hour: 19,
            }],
            horizon_hours: 1,
            regen_interval: 1,
            list_length: n,
        }
    }

    fn traffic(users_at_18: f64, reach: Vec<f64>) -> TrafficProfile {
        let mut u = vec![0.0; 24];
        u[18] = users_at_18;
        TrafficProfile::new(u, reach).unwrap()
    }

    #[test]
    fn inventory_arithmetic() {
        let t = traffic(10.0, vec![1.0, 0.5, 0.25]);
        assert_eq!(total_inventory(&t, &one_hour_schedule(3)).unwrap(), 17.5);
        let mut doubled = one_hour_schedule(3);
        doubled.horizon_hours = 2;
        assert_eq!(total_inventory(&t, &doubled).unwrap(), 35.0);
        assert_eq!(total_inventory(&traffic(0.0, vec![1.0]), &one_hour_schedule(1)).unwrap(), 0.0);
        let mut empty = one_hour_schedule(3);
        empty.slots.clear();
        assert!(matches!(total_inventory(&t, &empty), Err(Error::EmptySchedule)));
    }

    #[test]
    fn min_guarantee_examples() {
        let m = AspectRule::MinGuarantee { min_share: 0.05 };
        assert_eq!(aspect_shares(m, &shares(&[("A", 0.75), ("B", 0.25)])).unwrap(), shares(&[("A", 0.75), ("B", 0.25)]));
        let out = aspect_shares(m, &shares(&[("A", 0.98), ("B", 0.02)])).unwrap();
        assert!((out["A"] - 0.95).abs() < 1e-12);
        assert_eq!(out["B"], 0.05);
        let eq = aspect_shares(AspectRule::EqualExposure, &shares(&[("a", 0.5), ("b", 0.2), ("c", 0.1), ("d", 0.1), ("e", 0.1)])).unwrap();
        assert!(eq.values().all(|&s| s == 0.2));
        assert!(matches!(
            aspect_shares(AspectRule::MinGuarantee { min_share: 0.3 }, &shares(&[("a", 0.5), ("b", 0.3), ("c", 0.2), ("d", 0.0)])),
            Err(Error::InfeasibleMinShare { .. })
        ));
    }

    #[test]
    fn min_guarantee_cascades() {
        // Raising c and d pushes b below the floor on the second pass.
        let out = aspect_shares(
            AspectRule::MinGuarantee { min_share: 0.2 },
            &shares(&[("a", 0.7), ("b", 0.21), ("c", 0.05), ("d", 0.04)]),
        )
        .unwrap();
        assert!((out.values().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(out.values().all(|&s| s >= 0.2 - 1e-12), "{out:?}");
        assert!((out["a"] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn targets_equal_and_rating() {
        let p = pool(&[("A", &["i1", "i2", "i3", "i4"])]);
        let plan = item_targets(&shares(&[("A", 1.0)]), &p, ItemRule::EqualWithinAspect, 100.0, &BTreeMap::new()).unwrap();
        assert!(plan.targets.values().all(|&d| d == 25.0));

        let p = pool(&[("A", &["r3", "r4", "r5"])]);
        let ratings: BTreeMap<String, u8> = [("r3", 3), ("r4", 4), ("r5", 5)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let plan = item_targets(&shares(&[("A", 1.0)]), &p, ItemRule::ProportionalToRating, 90.0, &ratings).unwrap();
        assert!((plan.targets["r3"] - 22.5).abs() < 1e-12);
        assert!((plan.targets["r4"] - 30.0).abs() < 1e-12);
        assert!((plan.targets["r5"] - 37.5).abs() < 1e-12);

        let p = pool(&[("A", &["a"]), ("B", &["b"])]);
        let plan = item_targets(&shares(&[("A", 0.5), ("B", 0.5)]), &p, ItemRule::EqualWithinAspect, 100.0, &BTreeMap::new()).unwrap();
        assert_eq!(plan.targets["a"], 50.0);
        assert_eq!(plan.targets["b"], 50.0);

        let err = item_targets(&shares(&[("A", 0.5), ("C", 0.5)]), &p, ItemRule::EqualWithinAspect, 100.0, &BTreeMap::new());
        assert!(matches!(err, Err(Error::EmptyAspect(a)) if a == "C"));
    }

    #[test]
    fn ledger_counts_and_remaining() {
        let p = pool(&[("A", &["x", "y"])]);
        let plan = item_targets(&shares(&[("A", 1.0)]), &p, ItemRule::EqualWithinAspect, 50.0, &BTreeMap::new()).unwrap();
        let mut ledger = ExposureLedger::for_plan(&plan);
        assert_eq!(remaining_exposure(&plan, &ledger, "x").unwrap(), 25.0);
        ledger.record_listen("x").unwrap();
        assert_eq!(ledger.achieved("x").unwrap(), 1);
        for _ in 0..29 {
            ledger.record_listen("x").unwrap();
        }
        assert_eq!(ledger.achieved("x").unwrap(), 30);
        assert_eq!(ledger.achieved("y").unwrap(), 0);
        assert_eq!(remaining_exposure(&plan, &ledger, "x").unwrap(), -5.0);
        assert!(matches!(ledger.record_listen("nope"), Err(Error::UnknownItem(_))));
        assert!(remaining_exposure(&plan, &ledger, "nope").is_err());

        let mut buf = Vec::new();
        ledger.write_checkpoint(&mut buf).unwrap();
        assert_eq!(ExposureLedger::read_checkpoint(buf.as_slice()).unwrap(), ledger);
    }

    #[test]
    fn policy_config_parsing() {
        let c = PolicyConfig {
            aspect_rule: "equal".into(),
            min_share: 0.05,
            item_rule: "rating".into(),
        };
        let p = FairnessPolicy::try_from(&c).unwrap();
        assert_eq!(p, FairnessPolicy::new(AspectRule::EqualExposure, ItemRule::ProportionalToRating));
        let bad = PolicyConfig {
            aspect_rule: "loud".into(),
            ..Default::default()
        };
        assert!(FairnessPolicy::try_from(&bad).is_err());
    }

    fn arb_beta() -> impl Strategy<Value = BTreeMap<String, f64>> {
        proptest::collection::vec(0.001f64..1.0, 2..8).prop_map(|raw| {
            let total: f64 = raw.iter().sum();
            raw.iter()
                .enumerate()
                .map(|(i, r)| (format!("a{i}"), r / total))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn min_guarantee_properties(beta in arb_beta(), m in 0.01f64..0.12) {
            prop_assume!(m * beta.len() as f64 <= 1.0);
            let out = aspect_shares(AspectRule::MinGuarantee { min_share: m }, &beta).unwrap();
            prop_assert!((out.values().sum::<f64>() - 1.0).abs() < 1e-9);
            for s in out.values() {
                prop_assert!(*s >= m - 1e-12);
            }
            // aspects that were never raised keep their relative proportions
            let kept: Vec<&String> = beta.keys().filter(|a| out[*a] > m + 1e-12).collect();
            for a in &kept {
                for b in &kept {
                    prop_assert!((out[*a] / out[*b] - beta[*a] / beta[*b]).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn targets_conserve_inventory(sizes in proptest::collection::vec(1usize..6, 1..5), inventory in 0.0f64..1e5, rating_rule in any::<bool>()) {
            let mut items = Vec::new();
            let mut ratings = BTreeMap::new();
            for (a, n) in sizes.iter().enumerate() {
                for i in 0..*n {
                    let id = format!("a{a}-{i}");
                    ratings.insert(id.clone(), (i % 5 + 1) as u8);
                    items.push(Item::new(id, "T", [format!("a{a}")], 3));
                }
            }
            let p = RecommendedPool::from_liked("T", 0, &items, |_| Some(Prediction::from_probability(1.0))).unwrap();
            let sh = aspect_shares(AspectRule::EqualExposure, &p.beta).unwrap();
            let rule = if rating_rule { ItemRule::ProportionalToRating } else { ItemRule::EqualWithinAspect };
            let plan = item_targets(&sh, &p, rule, inventory, &ratings).unwrap();
            let total: f64 = plan.targets.values().sum();
            prop_assert!((total - inventory).abs() <= 1e-6 * inventory.max(1e-9));
            if rating_rule {
                for (a, members) in &p.items_by_aspect {
                    let _ = a;
                    let v: Vec<&String> = members.iter().collect();
                    for w in v.windows(2) {
                        if plan.targets[w[1]] > 0.0 {
                            let lhs = plan.targets[w[0]] / plan.targets[w[1]];
                            let rhs = ratings[w[0]] as f64 / ratings[w[1]] as f64;
                            prop_assert!((lhs - rhs).abs() < 1e-9);
                        }
                    }
                }
            }
        }

        #[test]
        fn replaying_listens_twice_doubles_ledger(listens in proptest::collection::vec(0usize..4, 0..50)) {
            let p = pool(&[("A", &["i0", "i1", "i2", "i3"])]);
            let plan = item_targets(&shares(&[("A", 1.0)]), &p, ItemRule::EqualWithinAspect, 1.0, &BTreeMap::new()).unwrap();
            let mut once = ExposureLedger::for_plan(&plan);
            let mut twice = ExposureLedger::for_plan(&plan);
            for l in &listens {
                once.record_listen(&format!("i{l}")).unwrap();
            }
            for _ in 0..2 {
                for l in &listens {
                    twice.record_listen(&format!("i{l}")).unwrap();
                }
            }
            for (id, e) in once.iter() {
                prop_assert_eq!(twice.achieved(id).unwrap(), 2 * e);
            }
        }
    }
}
