// Planned schedules against fixed FedAvg-style baselines, analytically and
// in simulation.

use defl::commands::cmd_compare;
use defl::config::load_config;

pub fn run_example() -> defl::Result<()> {
    let cfg = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_defaults.json"))?;
    print!("{}", cmd_compare(&cfg, false, 0)?.to_text());

    let mut sim = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/sim_trend.json"))?;
    sim.sim.seeds = 5;
    print!("{}", cmd_compare(&sim, true, 0)?.to_text());
    Ok(())
}

#[allow(dead_code)]
fn main() -> defl::Result<()> {
    run_example()
}
