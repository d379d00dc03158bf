//! Serves a sequence of lists whose ranking utility is remaining exposure,
//! with simulated listeners feeding the ledger after every slot.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fairlist::exposure::{aspect_shares, item_targets, AspectRule, ExposureLedger, ItemRule};
use fairlist::ranker::{derive_constraints, long_term_fairness};
use fairlist::recommender::{Item, Prediction, RecommendedPool};

fn main() -> fairlist::Result<()> {
    let mut items = Vec::new();
    for (aspect, count) in [("myths", 8), ("recipes", 3), ("hygiene", 1)] {
        for i in 0..count {
            items.push(Item::new(format!("{aspect}-{i}"), "MDD", [aspect], 3 + (i % 3) as u8));
        }
    }
    let pool = RecommendedPool::from_liked("MDD", 0, &items, |_| Some(Prediction::from_probability(0.8)))?;
    let ratings = items.iter().map(|i| (i.item_id.clone(), i.rating)).collect();
    let reach = [1.0, 0.8, 0.6, 0.4, 0.2];
    let slots = 200;
    let callers_per_slot = 5;
    let inventory = slots as f64 * callers_per_slot as f64 * reach.iter().sum::<f64>();

    let shares = aspect_shares(AspectRule::EqualExposure, &pool.beta)?;
    let plan = item_targets(&shares, &pool, ItemRule::EqualWithinAspect, inventory, &ratings)?;
    let constraints = derive_constraints(&shares, reach.len())?;
    let mut ledger = ExposureLedger::for_plan(&plan);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lists = long_term_fairness(&pool, &plan, &mut ledger, &constraints, slots, |_, list| {
        let mut heard = Vec::new();
        for _ in 0..callers_per_slot {
            let u: f64 = rng.random();
            heard.extend(list.positions.iter().zip(reach).take_while(|(_, r)| *r > u).map(|(id, _)| id.clone()));
        }
        Ok(heard)
    })?;
    println!("first list: {:?}", lists[0].positions);
    let mut by_aspect: BTreeMap<&str, (f64, u64)> = BTreeMap::new();
    for it in &items {
        let a = it.aspects.iter().next().expect("one aspect");
        let e = by_aspect.entry(a).or_default();
        e.0 += plan.target(&it.item_id)?;
        e.1 += ledger.achieved(&it.item_id)?;
    }
    for (a, (target, achieved)) in by_aspect {
        println!("{a:<8} target {target:>7.1} achieved {achieved:>5}");
    }
    Ok(())
}
