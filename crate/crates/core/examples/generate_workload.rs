//! Writes the skewed synthetic workload as a call log, an item catalogue and
//! a run config, ready for `fairlist all`.
//!
//! cargo run --example generate_workload -- <dir> [seed]

use std::fs::{self, File};
use std::path::PathBuf;

use fairlist::calllog::write_events;
use fairlist::recommender::write_items;
use fairlist::simulator::synthetic::{generate_synthetic, SyntheticWorkloadSpec};

fn main() -> fairlist::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "workload".into()));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed must be an integer"));
    fs::create_dir_all(&dir).expect("create output directory");

    let spec = SyntheticWorkloadSpec::skewed();
    let w = generate_synthetic(&spec, seed)?;
    let events: Vec<_> = w.events().cloned().collect();
    write_events(File::create(dir.join("calls.csv")).expect("create calls.csv"), &events)?;
    write_items(File::create(dir.join("items.csv")).expect("create items.csv"), &w.items)?;
    let config = format!(
        "[paths]\nlogs = [\"calls.csv\"]\nitems = \"items.csv\"\noutput_dir = \"out\"\n\n\
         [clustering]\nk = 2\n\n[classifier]\nmode = \"oracle\"\n\n\
         [simulation]\ndepth_mode = \"sample-depth\"\nseed = {seed}\n"
    );
    fs::write(dir.join("fairlist.toml"), config).expect("write config");
    println!(
        "{} events, {} sessions, {} items written to {}",
        events.len(),
        w.sessions.len(),
        w.items.len(),
        dir.display()
    );
    Ok(())
}
