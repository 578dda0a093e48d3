// Brute-force minimization of overall time and its KKT certificate.

use defl::config::load_config;
use defl::planner::{closed_form_plan, gap_ratio, kkt_residuals, oracle_plan};

pub fn run_example() -> defl::Result<()> {
    let cfg = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_defaults.json"))?;
    let inputs = cfg.plan_inputs()?;
    let out = oracle_plan(&inputs, &cfg.planner)?;
    let best = out.plan.continuous;
    println!(
        "oracle: b = {:.1}, alpha = {:.4e}, overall = {:.4e} s ({} evaluations)",
        best.b, best.alpha, best.overall_time, out.evaluations
    );
    for p in out.per_batch.iter().step_by(3) {
        println!("  b = {:>5}: best alpha {:.4e}, overall {:.4e} s", p.b, p.alpha, p.overall_time);
    }
    let cert = kkt_residuals(best.b, best.alpha, best.t_cp, &inputs, Some(cfg.planner.b_max))?;
    println!(
        "certificate: max scaled residual {:.2e}, search-cap dual {:.3e}, passes(1e-5) = {}",
        cert.max_scaled_residual(),
        cert.lambda_cap,
        cert.passes(1e-5)
    );
    let (closed, _) = closed_form_plan(&inputs)?;
    println!("closed form is {:.1}x slower", 1.0 + gap_ratio(&closed, &out.plan));
    Ok(())
}

#[allow(dead_code)]
fn main() -> defl::Result<()> {
    run_example()
}
