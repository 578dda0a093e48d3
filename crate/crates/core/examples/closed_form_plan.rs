// The published stationary point for the bundled default setting.

use defl::config::load_config;
use defl::planner::closed_form_plan;

pub fn run_example() -> defl::Result<()> {
    let cfg = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_defaults.json"))?;
    let (plan, cert) = closed_form_plan(&cfg.plan_inputs()?)?;
    println!("alpha* = {:.6}, theta* = {:.6}", plan.alpha_star(), plan.theta_star());
    println!("b (continuous) = {:.6}, rounded to {}", plan.b_cont(), plan.b_rounded());
    println!("T_cp* = {:.6e} s, overall time = {:.4} s", plan.continuous.t_cp, plan.continuous.overall_time);
    println!(
        "KKT scaled residuals at this point: {:?} (printed alpha variant {:.3e})",
        cert.stationarity_scaled, cert.alpha_residual_printed_variant
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> defl::Result<()> {
    run_example()
}
