//! Distributed vs. client/server best accuracy for each fixed topology.
//!
//! `cargo run --release --example baseline_gap -- [seed ...]`

use meshfl::protocol::{into_report, run_centralized_baseline, run_simulation};
use meshfl::topology::TopologyKind;
use meshfl::SimConfig;

fn main() -> meshfl::Result<()> {
    let seeds: Vec<u64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let seeds = if seeds.is_empty() { vec![1] } else { seeds };
    println!("topology  seed  distributed  centralized");
    for kind in TopologyKind::ALL {
        for &seed in &seeds {
            let cfg = SimConfig::default().with_topology(kind).with_seed(seed);
            let dist = into_report(run_simulation(&cfg))?;
            let cent = into_report(run_centralized_baseline(&cfg))?;
            println!(
                "{:<8}  {:>4}  {:>11.4}  {:>11.4}",
                kind.name(),
                seed,
                dist.best_accuracy(),
                cent.best_accuracy()
            );
        }
    }
    Ok(())
}
