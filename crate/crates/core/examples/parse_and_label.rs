//! Parses a small call log, reports rejected rows, groups listens into
//! sessions, labels each listen and estimates the traffic profile.

use fairlist::calllog::{
    assemble_sessions, estimate_traffic_profile, label_sessions, parse_call_logs, ColumnSchema,
    DEFAULT_HEARD_THRESHOLD,
};

const LOG: &str = "\
call_id,caller_id,item_id,contributor_id,item_duration,duration_heard,source,topic,aspect,rating,key_pressed,timestamp
c1,u1,i1,k1,60,60,user,MDD,recipes,4,like,2024-01-01T08:00:00
c1,u1,i2,k2,60,10,studio,MDD,myths,3,skip,2024-01-01T08:01:00
c1,u1,i3,k1,60,5,user,MDD,hygiene,5,none,2024-01-01T08:02:00
c2,u2,i2,k2,60,50,studio,MDD,myths,3,none,2024-01-01T09:00:00
c3,u2,i1,k1,0,0,user,MDD,recipes,4,none,2024-01-01T10:00:00
c4,u3,i9,k1,60,30,radio,MDD,myths,3,none,2024-01-01T10:00:00
";

fn main() -> fairlist::Result<()> {
    let parsed = parse_call_logs(LOG.as_bytes(), &ColumnSchema::default())?;
    for d in &parsed.rejected {
        println!("rejected {d}");
    }
    let sessions = assemble_sessions(parsed.events);
    let labeled = label_sessions(&sessions, DEFAULT_HEARD_THRESHOLD)?;
    for le in &labeled {
        println!(
            "{} {} heard {:>3.0}% key {:<5} -> {:?}",
            le.event.call_id,
            le.event.item_id,
            100.0 * le.event.duration_heard / le.event.item_duration,
            le.event.key_pressed.as_str(),
            le.label
        );
    }
    let traffic = estimate_traffic_profile(&sessions, 3)?;
    println!("rank reach probabilities: {:?}", traffic.rank_reach_prob);
    let busy: Vec<(usize, f64)> = traffic
        .users_per_hour
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, u)| *u > 0.0)
        .collect();
    println!("callers per hour of day: {busy:?}");
    Ok(())
}
