// Simulate the planned schedule and print the CSV trace.

use defl::commands::cmd_simulate;
use defl::config::load_config;

pub fn run_example() -> defl::Result<()> {
    let mut cfg = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_defaults.json"))?;
    cfg.sim.rounds = Some(20);
    let mut csv = Vec::new();
    let summary = cmd_simulate(&cfg, 7, &mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    println!("ran b={} V={} H={}", summary.batch, summary.local_rounds, summary.rounds);
    Ok(())
}

#[allow(dead_code)]
fn main() -> defl::Result<()> {
    run_example()
}
