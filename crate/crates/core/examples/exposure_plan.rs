//! Turns a traffic profile into listen inventory and splits it into
//! per-aspect and per-item exposure targets under each policy rule.

use fairlist::calllog::TrafficProfile;
use fairlist::exposure::{aspect_shares, item_targets, total_inventory, AspectRule, ItemRule, SlotSchedule};
use fairlist::recommender::{Item, Prediction, RecommendedPool};

fn main() -> fairlist::Result<()> {
    let items = vec![
        Item::new("m1", "MDD", ["myths"], 3),
        Item::new("m2", "MDD", ["myths"], 5),
        Item::new("m3", "MDD", ["myths"], 4),
        Item::new("r1", "MDD", ["recipes"], 4),
        Item::new("h1", "MDD", ["hygiene"], 5),
    ];
    let pool = RecommendedPool::from_liked("MDD", 0, &items, |_| Some(Prediction::from_probability(0.9)))?;
    let ratings = items.iter().map(|i| (i.item_id.clone(), i.rating)).collect();

    let traffic = TrafficProfile::new(vec![2.0; 24], vec![1.0, 0.8, 0.5, 0.3, 0.2, 0.1, 0.1, 0.05, 0.05, 0.05])?;
    let schedule = SlotSchedule::default();
    let inventory = total_inventory(&traffic, &schedule)?;
    println!("beta {:?}", pool.beta);
    println!("inventory over {} h: {inventory:.1} listens", schedule.horizon_hours);

    for rule in [
        AspectRule::UserPreference,
        AspectRule::MinGuarantee { min_share: 0.25 },
        AspectRule::EqualExposure,
    ] {
        let shares = aspect_shares(rule, &pool.beta)?;
        println!("\n{rule:?}: shares {shares:?}");
        for item_rule in [ItemRule::EqualWithinAspect, ItemRule::ProportionalToRating] {
            let plan = item_targets(&shares, &pool, item_rule, inventory, &ratings)?;
            let t: Vec<String> = plan.targets.iter().map(|(id, d)| format!("{id}={d:.1}")).collect();
            println!("  {item_rule:?}: {}", t.join(" "));
        }
    }
    Ok(())
}
