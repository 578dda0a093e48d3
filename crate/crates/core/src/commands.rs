//! Report builders behind the `defl` subcommands. Each returns a typed report
//! that can be rendered as a text table, JSON or CSV.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BaselineSpec, ExperimentConfig, SweepAxis};
use crate::delay_model::{integer_local_rounds, integer_rounds, LocalAccuracy};
use crate::error::{ensure, DeflError, Result};
use crate::planner::{
    closed_form_plan, gap_ratio, kkt_residuals, oracle_plan, KktCertificate, OracleOutcome, Plan, PlanInputs,
    PlanPoint, PlanSource,
};
use crate::sim::{run_defl_partial, time_to_target, SimConfig, SimTrace};
use crate::system_model::{bottleneck_device, Bottleneck};

/// Environment variable capping worker threads (`0` or unset means automatic).
pub const THREADS_ENV: &str = "DEFL_THREADS";

/// Builds a rayon pool sized from [`THREADS_ENV`].
pub fn thread_pool_from_env() -> Result<rayon::ThreadPool> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| DeflError::Config(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}")))?,
        _ => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| DeflError::Io(e.to_string()))
}

/// Floats in CSV output: 17 significant digits.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Planner results for one config.
#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub config: ExperimentConfig,
    pub inputs: PlanInputs,
    pub bottleneck: Bottleneck,
    pub closed_form: Plan,
    pub closed_form_kkt: KktCertificate,
    pub oracle: OracleOutcome,
    /// Certificate at the oracle's continuous optimum, including the search
    /// cap `b <= b_max` as a constraint.
    pub oracle_kkt: KktCertificate,
    /// `(closed - oracle) / oracle` overall time.
    pub gap_ratio: f64,
}

pub fn cmd_plan(cfg: &ExperimentConfig) -> Result<PlanReport> {
    let inputs = cfg.plan_inputs()?;
    let bottleneck = bottleneck_device(&cfg.fleet()?)?;
    let (closed_form, closed_form_kkt) = closed_form_plan(&inputs)?;
    let oracle = oracle_plan(&inputs, &cfg.planner)?;
    let o = &oracle.plan.continuous;
    let oracle_kkt = kkt_residuals(o.b, o.alpha, o.t_cp, &inputs, Some(cfg.planner.b_max))?;
    let gap_ratio = gap_ratio(&closed_form, &oracle.plan);
    Ok(PlanReport {
        config: cfg.clone(),
        inputs,
        bottleneck,
        closed_form,
        closed_form_kkt,
        oracle,
        oracle_kkt,
        gap_ratio,
    })
}

fn point_line(out: &mut String, label: &str, p: &PlanPoint) {
    let _ = writeln!(
        out,
        "{label:<22} {:>12.6} {:>12.6e} {:>10.6} {:>12.6e} {:>12.6e} {:>12.6e} {:>12.6e}",
        p.b, p.alpha, p.theta, p.rounds, p.t_cp, p.round_time, p.overall_time
    );
}

fn kkt_lines(out: &mut String, label: &str, k: &KktCertificate) {
    let _ = writeln!(
        out,
        "{label}: scaled residuals [db, dalpha, dT_cp] = [{:.3e}, {:.3e}, {:.3e}], duals >= 0: {}, feasible: {}, fd check: {:.1e}",
        k.stationarity_scaled[0],
        k.stationarity_scaled[1],
        k.stationarity_scaled[2],
        k.duals_nonnegative(),
        k.feasibility.all(),
        k.fd_discrepancy,
    );
    let _ = writeln!(
        out,
        "  lambda1={:.3e} lambda2={:.3e} lambda_cap={:.3e} mu[bottleneck]={:.3e}; printed-alpha-variant residual {:.3e}",
        k.lambda1,
        k.lambda2,
        k.lambda_cap,
        k.mu.iter().cloned().fold(0.0, f64::max),
        k.alpha_residual_printed_variant,
    );
}

impl PlanReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let i = &self.inputs;
        let _ = writeln!(
            out,
            "devices={} T_cm={:.6e}s bottleneck={} (G/f={:.6e} s/sample) eps={} nu={} c={}",
            i.ratios.len(),
            i.t_cm,
            self.bottleneck.id,
            self.bottleneck.ratio,
            i.learning.epsilon,
            i.learning.nu,
            i.learning.c
        );
        let _ = writeln!(
            out,
            "{:<22} {:>12} {:>12} {:>10} {:>12} {:>12} {:>12} {:>12}",
            "plan", "b", "alpha", "theta", "H", "T_cp", "T", "overall"
        );
        point_line(&mut out, "closed_form", &self.closed_form.continuous);
        point_line(&mut out, "closed_form (pow2)", &self.closed_form.projected);
        point_line(&mut out, "oracle", &self.oracle.plan.continuous);
        point_line(&mut out, "oracle (pow2)", &self.oracle.plan.projected);
        let _ = writeln!(out, "closed-form vs oracle overall-time gap: {:+.4}%", 100.0 * self.gap_ratio);
        kkt_lines(&mut out, "kkt at closed form", &self.closed_form_kkt);
        kkt_lines(&mut out, "kkt at oracle", &self.oracle_kkt);
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| DeflError::Io(e.to_string()))
    }
}

/// Integer schedule `(b, V, H)` for simulation: the oracle's power-of-two
/// plan, with any overrides from the config applied.
pub fn planned_schedule(cfg: &ExperimentConfig) -> Result<(u64, usize, usize)> {
    let inputs = cfg.plan_inputs()?;
    let (b, v, h) = oracle_plan(&inputs, &cfg.planner)?.plan.simulation_schedule();
    let s = &cfg.sim;
    Ok((s.batch.unwrap_or(b), s.local_rounds.unwrap_or(v), s.rounds.unwrap_or(h)))
}

pub fn sim_config(cfg: &ExperimentConfig, batch: u64, local_rounds: usize, rounds: usize, seed: u64) -> Result<SimConfig> {
    Ok(SimConfig {
        batch,
        local_rounds,
        rounds,
        step_size: cfg.sim.step_size,
        seed,
        stop_at_gap: None,
        fleet: cfg.fleet()?,
    })
}

/// Summary of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub batch: u64,
    pub local_rounds: usize,
    pub rounds: usize,
    pub eta: f64,
    pub final_gap: Option<f64>,
    pub overall_time: f64,
}

pub const TRACE_HEADER: &str = "round,wall_clock_s,global_loss,opt_gap";

/// Writes the trace rows. An unknown gap is an empty field.
pub fn write_trace(trace: &SimTrace, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in &trace.rows {
        let gap = r.opt_gap.map(fmt_f).unwrap_or_default();
        writeln!(out, "{},{},{},{}", r.round, fmt_f(r.wall_clock), fmt_f(r.global_loss), gap)?;
    }
    Ok(())
}

/// Simulates the planned schedule and writes the CSV trace with a `#`
/// summary footer. On divergence the completed rows are written followed by
/// a `# error:` row, and the divergence is returned.
pub fn cmd_simulate(cfg: &ExperimentConfig, seed: u64, out: &mut impl Write) -> Result<SimSummary> {
    let (b, v, h) = planned_schedule(cfg)?;
    let task = cfg.build_task(seed)?;
    let sim = sim_config(cfg, b, v, h, seed)?;
    let (trace, failure) = run_defl_partial(&task, &sim)?;
    write_trace(&trace, out)?;
    if let Some(e) = failure {
        writeln!(out, "# error: {e}")?;
        out.flush()?;
        return Err(e);
    }
    let summary = SimSummary {
        batch: b,
        local_rounds: v,
        rounds: h,
        eta: trace.eta,
        final_gap: trace.final_gap(),
        overall_time: trace.rows.last().map_or(0.0, |r| r.wall_clock),
    };
    writeln!(
        out,
        "# summary: b={b} V={v} H={h} eta={} final_gap={} overall_time_s={}",
        fmt_f(summary.eta),
        summary.final_gap.map(fmt_f).unwrap_or_else(|| "NA".into()),
        fmt_f(summary.overall_time)
    )?;
    out.flush()?;
    Ok(summary)
}

/// One sweep value's analytic evaluation, or the reason it failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub point: Option<PlanPoint>,
    pub sim_gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    /// Held-fixed base point `(b, alpha)`: the oracle's power-of-two plan.
    pub base: (f64, f64),
    pub rows: Vec<SweepRow>,
}

fn sweep_point(axis: SweepAxis, value: f64, base: (f64, f64), cfg: &ExperimentConfig) -> Result<PlanPoint> {
    let (b0, a0) = base;
    match axis {
        SweepAxis::Epsilon => {
            let mut c = cfg.clone();
            c.learning.epsilon = value;
            PlanPoint::evaluate(b0, a0, &c.plan_inputs()?)
        }
        SweepAxis::B => {
            ensure(value.is_finite() && value >= 1.0, || DeflError::InvalidBatch(value))?;
            PlanPoint::evaluate(value, a0, &cfg.plan_inputs()?)
        }
        SweepAxis::Theta => {
            let acc = LocalAccuracy::from_theta(value)?;
            PlanPoint::evaluate(b0, acc.alpha(), &cfg.plan_inputs()?)
        }
    }
}

/// Evaluates the delay model along one axis with the other decision
/// variable held at the oracle's power-of-two plan. Bad values yield an
/// error row and the sweep continues. With `simulate`, each row also runs
/// the simulator at its integer schedule (rounds capped at `sim.max_rounds`).
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    simulate: bool,
    seed: u64,
) -> Result<SweepReport> {
    let inputs = cfg.plan_inputs()?;
    let p = oracle_plan(&inputs, &cfg.planner)?.plan.projected;
    let base = (p.b, p.alpha);
    let task = if simulate { Some(cfg.build_task(seed)?) } else { None };
    let rows = values
        .par_iter()
        .map(|&value| {
            let point = match sweep_point(axis, value, base, cfg) {
                Ok(p) => p,
                Err(e) => {
                    return SweepRow { value, point: None, sim_gap: None, error: Some(e.to_string()) };
                }
            };
            let mut row = SweepRow { value, point: Some(point), sim_gap: None, error: None };
            if let Some(task) = &task {
                let h = integer_rounds(point.rounds).min(cfg.sim.max_rounds);
                let sim = sim_config(cfg, point.b.round() as u64, integer_local_rounds(point.v), h, seed)
                    .and_then(|s| crate::sim::run_defl(task, &s));
                match sim {
                    Ok(trace) => row.sim_gap = trace.final_gap(),
                    Err(e) => row.error = Some(e.to_string()),
                }
            }
            row
        })
        .collect();
    Ok(SweepReport { axis, base, rows })
}

impl SweepReport {
    pub const HEADER: &'static str = "value,b,theta,v,h,t_cm,t_cp,t,overall_time,sim_gap,error";

    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "{}", Self::HEADER)?;
        for r in &self.rows {
            let gap = r.sim_gap.map(fmt_f).unwrap_or_default();
            let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            match &r.point {
                Some(p) => writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{gap},{err}",
                    fmt_f(r.value),
                    fmt_f(p.b),
                    fmt_f(p.theta),
                    fmt_f(p.v),
                    fmt_f(p.rounds),
                    fmt_f(p.t_cm),
                    fmt_f(p.t_cp),
                    fmt_f(p.round_time),
                    fmt_f(p.overall_time)
                )?,
                None => writeln!(out, "{},,,,,,,,,{gap},{err}", fmt_f(r.value))?,
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Simulated time to reach the target gap, over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeToTarget {
    pub reached: usize,
    pub seeds: usize,
    /// Median over seeds, counting unreached seeds as infinite.
    pub median_wall_clock: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub source: PlanSource,
    pub b: f64,
    pub theta: f64,
    pub v: f64,
    pub h: f64,
    pub t_cm: f64,
    pub t_cp: f64,
    pub t: f64,
    pub overall_time: f64,
    /// `(baseline name, 100 (1 - overall / baseline overall))`.
    pub reductions: Vec<(String, f64)>,
    pub note: Option<String>,
    pub simulated: Option<TimeToTarget>,
}

impl ReportRow {
    fn from_point(label: &str, source: PlanSource, p: &PlanPoint, note: Option<String>) -> Self {
        Self {
            label: label.into(),
            source,
            b: p.b,
            theta: p.theta,
            v: p.v,
            h: p.rounds,
            t_cm: p.t_cm,
            t_cp: p.t_cp,
            t: p.round_time,
            overall_time: p.overall_time,
            reductions: Vec::new(),
            note,
            simulated: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub rows: Vec<ReportRow>,
    pub caveat: String,
}

pub const COMPARE_CAVEAT: &str = "model-level analog: overall times come from the analytic delay model with c and nu \
as configured; reductions measured with trained CNNs are not reproduced here";

/// Evaluates a baseline `(b, V)` through the delay model.
pub fn baseline_point(b: &BaselineSpec, inputs: &PlanInputs) -> Result<(PlanPoint, Option<String>)> {
    let nu = inputs.learning.nu;
    let (acc, note) = match b.theta {
        Some(theta) => (LocalAccuracy::from_theta(theta)?, None),
        None => (
            LocalAccuracy::from_local_rounds(b.local_rounds as f64, nu)?,
            Some(format!("theta = exp(-V/nu) from V={}", b.local_rounds)),
        ),
    };
    Ok((PlanPoint::evaluate(b.batch as f64, acc.alpha(), inputs)?, note))
}

/// Oracle (power-of-two), closed-form (power-of-two) and baseline rows with
/// percent reductions against each baseline. With `simulate`, each row also
/// gets the simulated time to `target_gap` over `sim.seeds` seeds.
pub fn cmd_compare(cfg: &ExperimentConfig, simulate: bool, seed: u64) -> Result<CompareReport> {
    ensure(!cfg.baselines.is_empty(), || DeflError::Config("no baselines defined".into()))?;
    let inputs = cfg.plan_inputs()?;
    let oracle = oracle_plan(&inputs, &cfg.planner)?;
    let (closed, _) = closed_form_plan(&inputs)?;
    let mut rows = vec![
        ReportRow::from_point("oracle", PlanSource::Oracle, &oracle.plan.projected, None),
        ReportRow::from_point("closed_form", PlanSource::ClosedForm, &closed.projected, None),
    ];
    for b in &cfg.baselines {
        let (p, note) = baseline_point(b, &inputs)?;
        rows.push(ReportRow::from_point(&b.name, PlanSource::Baseline, &p, note));
    }
    let baselines: Vec<(String, f64)> = rows[2..].iter().map(|r| (r.label.clone(), r.overall_time)).collect();
    for r in &mut rows {
        r.reductions = baselines
            .iter()
            .map(|(name, t)| (name.clone(), 100.0 * (1.0 - r.overall_time / t)))
            .collect();
    }
    if simulate {
        let target = cfg.target_gap();
        for r in &mut rows {
            let v = integer_local_rounds(r.v);
            let times = (0..cfg.sim.seeds as u64)
                .into_par_iter()
                .map(|i| {
                    let s = seed.wrapping_add(i);
                    let task = cfg.build_task(s)?;
                    let sim = sim_config(cfg, r.b.round() as u64, v, cfg.sim.max_rounds, s)?;
                    Ok(time_to_target(&task, &sim, target)?.map_or(f64::INFINITY, |(_, w)| w))
                })
                .collect::<Result<Vec<f64>>>()?;
            r.simulated = Some(summarize_times(times));
        }
    }
    Ok(CompareReport { rows, caveat: COMPARE_CAVEAT.into() })
}

fn summarize_times(mut times: Vec<f64>) -> TimeToTarget {
    let seeds = times.len();
    let reached = times.iter().filter(|t| t.is_finite()).count();
    times.sort_by(f64::total_cmp);
    let median = if seeds % 2 == 1 {
        times[seeds / 2]
    } else {
        0.5 * (times[seeds / 2 - 1] + times[seeds / 2])
    };
    TimeToTarget { reached, seeds, median_wall_clock: median }
}

impl CompareReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "{:<14} {:<12} {:>8} {:>10} {:>10} {:>12} {:>12} {:>12} {:>14}",
            "label", "source", "b", "theta", "V", "H", "T_cp", "T", "overall"
        );
        for (name, _) in &self.rows[0].reductions {
            let _ = write!(out, " {:>14}", format!("vs {name}"));
        }
        let simulated = self.rows.iter().any(|r| r.simulated.is_some());
        if simulated {
            let _ = write!(out, " {:>16}", "sim median s");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{:<14} {:<12} {:>8} {:>10.6} {:>10.4} {:>12.5e} {:>12.5e} {:>12.5e} {:>14.6e}",
                r.label,
                r.source.to_string(),
                r.b,
                r.theta,
                r.v,
                r.h,
                r.t_cp,
                r.t,
                r.overall_time
            );
            for (_, pct) in &r.reductions {
                let _ = write!(out, " {:>13.2}%", pct);
            }
            if let Some(s) = &r.simulated {
                let _ = write!(out, " {:>10.4e} ({}/{})", s.median_wall_clock, s.reached, s.seeds);
            }
            if let Some(n) = &r.note {
                let _ = write!(out, "  [{n}]");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "# {}", self.caveat);
        out
    }

    pub const HEADER: &'static str = "label,source,b,theta,v,h,t_cm,t_cp,t,overall_time";

    /// CSV with one `reduction_vs_<name>` column per baseline.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        write!(out, "{}", Self::HEADER)?;
        for (name, _) in &self.rows[0].reductions {
            write!(out, ",reduction_vs_{name}")?;
        }
        writeln!(out, ",sim_median_wall_clock_s,sim_reached,note")?;
        for r in &self.rows {
            write!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.label,
                r.source,
                fmt_f(r.b),
                fmt_f(r.theta),
                fmt_f(r.v),
                fmt_f(r.h),
                fmt_f(r.t_cm),
                fmt_f(r.t_cp),
                fmt_f(r.t),
                fmt_f(r.overall_time)
            )?;
            for (_, pct) in &r.reductions {
                write!(out, ",{}", fmt_f(*pct))?;
            }
            match &r.simulated {
                Some(s) => write!(out, ",{},{}", fmt_f(s.median_wall_clock), s.reached)?,
                None => write!(out, ",,")?,
            }
            writeln!(out, ",{}", r.note.as_deref().unwrap_or("").replace(',', ";"))?;
        }
        writeln!(out, "# {}", self.caveat)?;
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::sim::StepSize;

    fn cfg() -> ExperimentConfig {
        parse_config(include_str!("../configs/paper_defaults.json"), "paper_defaults").unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn plan_report_matches_closed_form() {
        let r = cmd_plan(&cfg()).unwrap();
        assert!(rel(r.closed_form.alpha_star(), 0.577_350_269_189_625_8) < 1e-12);
        assert!(rel(r.closed_form.b_cont(), 1.154_700_538_379_251_5) < 1e-12);
        assert_eq!(r.bottleneck.index, 0);
        assert!(r.oracle.plan.continuous.overall_time <= r.closed_form.continuous.overall_time);
        assert!(r.to_text().contains("oracle (pow2)"));
        let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(json["config"]["learning"]["c"], 1.0);
    }

    #[test]
    fn theta_sweep_rounds_increase() {
        let r = cmd_sweep(&cfg(), SweepAxis::Theta, &[0.05, 0.15, 0.5, 0.9], false, 0).unwrap();
        let h: Vec<f64> = r.rows.iter().map(|r| r.point.unwrap().rounds).collect();
        assert!(h.windows(2).all(|w| w[1] > w[0]), "{h:?}");
    }

    #[test]
    fn epsilon_sweep_time_increases_as_epsilon_shrinks() {
        let r = cmd_sweep(&cfg(), SweepAxis::Epsilon, &[0.1, 0.01, 0.001], false, 0).unwrap();
        let t: Vec<f64> = r.rows.iter().map(|r| r.point.unwrap().overall_time).collect();
        assert!(t.windows(2).all(|w| w[1] > w[0]), "{t:?}");
    }

    #[test]
    fn sweep_keeps_going_after_bad_value() {
        let r = cmd_sweep(&cfg(), SweepAxis::Theta, &[0.5, 1.5, 0.2], false, 0).unwrap();
        assert!(r.rows[0].error.is_none() && r.rows[2].error.is_none());
        assert!(r.rows[1].error.is_some());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        let bad = text.lines().nth(2).unwrap();
        assert!(bad.contains(",,,,,,,,,,") && bad.contains("theta"), "{bad}");
    }

    #[test]
    fn compare_rows_consistent() {
        let r = cmd_compare(&cfg(), false, 0).unwrap();
        let fedavg = r.rows.iter().find(|r| r.label == "FedAvg").unwrap();
        assert_eq!((fedavg.b, fedavg.v), (10.0, 20.0));
        assert!(fedavg.note.as_deref().unwrap().contains("V=20"));
        for row in &r.rows {
            let t = row.t_cm + row.v * row.t_cp;
            assert!(rel(row.h * t, row.overall_time) < 1e-9);
            assert!(rel(row.t, t) < 1e-12);
        }
        for row in &r.rows[2..] {
            assert!(r.rows[0].overall_time <= row.overall_time);
        }
        assert!(r.to_text().contains(COMPARE_CAVEAT));
    }

    #[test]
    fn simulate_writes_header_rows_and_footer() {
        let mut c = cfg();
        c.sim.rounds = Some(3);
        c.sim.step_size = StepSize::Fixed(0.5);
        let mut buf = Vec::new();
        let s = cmd_simulate(&c, 7, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("1,"));
        assert!(lines[4].starts_with("# summary"));
        assert_eq!(s.rounds, 3);
    }

    #[test]
    fn divergence_flushes_partial_trace() {
        let mut c = cfg();
        c.sim.step_size = StepSize::Fixed(1e3);
        c.sim.rounds = Some(500);
        let mut buf = Vec::new();
        let err = cmd_simulate(&c, 1, &mut buf).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().last().unwrap().starts_with("# error: simulation diverged in round"));
    }

    #[test]
    fn median_counts_unreached_as_infinite() {
        let s = summarize_times(vec![3.0, f64::INFINITY, 1.0]);
        assert_eq!((s.reached, s.median_wall_clock), (2, 3.0));
    }
}
