//! Builds preference vectors from a synthetic call log, applies the
//! engaged-user filter cascade and clusters the survivors with k-prototypes,
//! choosing k by the elbow rule.

use fairlist::calllog::{label_sessions, DEFAULT_HEARD_THRESHOLD};
use fairlist::simulator::synthetic::{generate_synthetic, SyntheticWorkloadSpec};
use fairlist::user_model::{
    default_gamma, elbow_select_k, filter_engaged_users, global_preference_vector, k_prototypes, summarize_users,
    FilterThresholds, PreferenceVector,
};

fn main() -> fairlist::Result<()> {
    let w = generate_synthetic(&SyntheticWorkloadSpec::skewed(), 4)?;
    let labeled = label_sessions(&w.sessions, DEFAULT_HEARD_THRESHOLD)?;
    let users = summarize_users(&labeled);
    let global = global_preference_vector(&labeled);
    let f = filter_engaged_users(&users, &FilterThresholds::default(), &global)?;
    println!(
        "{} callers -> {} frequent -> {} active -> {} divergent",
        users.len(),
        f.frequent.len(),
        f.active.len(),
        f.divergent.len()
    );
    let vectors: Vec<PreferenceVector> = f.divergent.iter().map(|u| users[u].vector.clone()).collect();
    let gamma = default_gamma(&vectors);
    let elbow = elbow_select_k(&vectors, 2..=6, gamma, 7)?;
    for (k, ratio) in &elbow.curve {
        println!("k = {k}: cost ratio {ratio:.4}");
    }
    let a = k_prototypes(&vectors, elbow.chosen_k, gamma, 7)?;
    println!("chosen k = {}, gamma = {gamma:.3}, final cost {:.3}", a.k, a.cost());
    for c in 0..a.k {
        let members = a.members(c).count();
        let centroid = a.centroid(c)?;
        let scores: Vec<String> = centroid.iter().map(|(k, p)| format!("{k}={:+.2}", p.score)).collect();
        println!("cluster {c}: {members} users, centroid {}", scores.join(" "));
    }
    Ok(())
}
