// Overall time along each decision axis, as plot-ready CSV.

use defl::commands::cmd_sweep;
use defl::config::{load_config, SweepAxis};

pub fn run_example() -> defl::Result<()> {
    let cfg = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_defaults.json"))?;
    let sweeps = [
        (SweepAxis::Epsilon, vec![0.1, 0.01, 0.001]),
        (SweepAxis::B, vec![1.0, 16.0, 32.0, 64.0, 1024.0]),
        (SweepAxis::Theta, vec![0.05, 0.15, 0.5, 0.9, 1.2]),
    ];
    for (axis, values) in sweeps {
        println!("## {axis}");
        let mut out = Vec::new();
        cmd_sweep(&cfg, axis, &values, false, 0)?.write_csv(&mut out)?;
        print!("{}", String::from_utf8_lossy(&out));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> defl::Result<()> {
    run_example()
}
