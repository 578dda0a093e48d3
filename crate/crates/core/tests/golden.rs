//! Regression values pinned after verified runs on the bundled configs.

use std::path::PathBuf;

use defl::commands::{cmd_simulate, TRACE_HEADER};
use defl::config::load_config;
use defl::planner::oracle_plan;

fn manifest(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

#[test]
fn oracle_triple_on_default_config() {
    let cfg = load_config(manifest("configs/paper_defaults.json")).unwrap();
    let inputs = cfg.plan_inputs().unwrap();
    let best = oracle_plan(&inputs, &cfg.planner).unwrap().plan.continuous;
    // The profile minimum over alpha at b = 1024 is sqrt(1/3)/1024 with
    // overall time 0.036445808667664817... (40-digit reference).
    assert_eq!(best.b, 1024.0);
    assert!((best.alpha - 5.638_186_222_554_939e-4).abs() / 5.638_186_222_554_939e-4 < 1e-6);
    assert!((best.overall_time - 0.036_445_808_667_664_817).abs() / 0.036_445_808_667_664_817 < 1e-12);
}

#[test]
fn default_trace_matches_golden_csv() {
    let cfg = load_config(manifest("configs/paper_defaults.json")).unwrap();
    let mut out = Vec::new();
    cmd_simulate(&cfg, 0, &mut out).unwrap();
    let golden = std::fs::read(manifest("tests/data/paper_defaults_seed0.csv")).unwrap();
    assert!(out == golden, "trace drifted from tests/data/paper_defaults_seed0.csv");

    let text = String::from_utf8(golden).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(text.lines().next().unwrap(), TRACE_HEADER);
    assert_eq!(rows.len(), 100);
    // Wall-clock is an exact multiple of T_cm + V T_cp = 0.005 + 1024 * 0.015.
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0] as usize, i + 1);
        assert_eq!(r[1], (i + 1) as f64 * 15.365);
        assert!(r[3] >= 0.0);
    }
    assert!(rows.last().unwrap()[3] < rows[0][3]);
}
