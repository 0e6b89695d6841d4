//! Seeded campaign: Clarke outcomes on random equal-capacity markets.

use capvcg::fuzz::{run_fuzz, CapacityMode, FuzzConfig};
use capvcg::Mechanism;

fn main() -> capvcg::Result<()> {
    let config = FuzzConfig {
        max_agents: 4,
        max_goods: 5,
        mode: CapacityMode::Homo,
        mechanism: Mechanism::Clarke,
        seed: 0,
        count: 500,
    };
    let records = run_fuzz(&config)?;
    let passed = records.iter().filter(|r| r.pass).count();
    println!("{passed}/{} pass: {}", records.len(), records[0].property);
    Ok(())
}
