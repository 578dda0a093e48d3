//! Brute-force reference solver.
//!
//! A log-spaced grid over `(b, alpha)` locates the basin, then coordinate
//! descent with golden-section line searches polishes the point until a full
//! sweep improves the objective by less than `1e-12` relative. The
//! power-of-two problem is solved separately by enumerating every admissible
//! `b` and refining `alpha` for each.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::objective_eval;
use super::{Plan, PlanInputs, PlanPoint, PlanSource};
use crate::error::{ensure, DeflError, Result};

const REFINE_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 200;
const GOLDEN_ITERS: usize = 200;

/// Search box and resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleGrid {
    pub b_max: f64,
    pub b_points: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_points: usize,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self {
            b_max: 1024.0,
            b_points: 256,
            alpha_min: 1e-4,
            alpha_max: 20.0,
            alpha_points: 256,
        }
    }
}

impl OracleGrid {
    pub fn validate(&self) -> Result<()> {
        ensure(self.b_points >= 1 && self.alpha_points >= 1, || {
            DeflError::EmptyGrid(format!(
                "need at least one point per axis, got {} x {}",
                self.b_points, self.alpha_points
            ))
        })?;
        ensure(self.b_max.is_finite() && self.b_max >= 1.0, || {
            DeflError::EmptyGrid(format!("b_max must be at least 1, got {}", self.b_max))
        })?;
        ensure(
            self.alpha_min > 0.0 && self.alpha_max.is_finite() && self.alpha_max >= self.alpha_min,
            || {
                DeflError::EmptyGrid(format!(
                    "alpha range [{}, {}] is empty",
                    self.alpha_min, self.alpha_max
                ))
            },
        )
    }

    pub fn batch_axis(&self) -> Vec<f64> {
        log_space(1.0, self.b_max, self.b_points)
    }

    pub fn alpha_axis(&self) -> Vec<f64> {
        log_space(self.alpha_min, self.alpha_max, self.alpha_points)
    }

    /// Powers of two not exceeding `b_max`.
    pub fn batch_powers(&self) -> Vec<u64> {
        std::iter::successors(Some(1u64), |b| b.checked_mul(2))
            .take_while(|&b| b as f64 <= self.b_max)
            .collect()
    }

    pub fn contains(&self, b: f64, alpha: f64) -> bool {
        (1.0..=self.b_max).contains(&b) && (self.alpha_min..=self.alpha_max).contains(&alpha)
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || lo == hi {
        return vec![lo; n];
    }
    let (a, z) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..n)
        .map(|i| (a + (z - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    // Pin the endpoints so the box corners are represented exactly.
    v[0] = lo;
    v[n - 1] = hi;
    v
}

/// Oracle result: the plan plus search diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleOutcome {
    /// `continuous` is the refined box optimum; `projected` the best
    /// power-of-two point.
    pub plan: Plan,
    /// Best grid point before refinement: `(b, alpha, objective)`.
    pub grid_best: (f64, f64, f64),
    /// Constrained optimum for each admissible power of two.
    pub per_batch: Vec<PlanPoint>,
    pub evaluations: usize,
    pub grid: OracleGrid,
}

#[derive(Debug, Clone, Copy)]
struct Cand {
    value: f64,
    b: f64,
    alpha: f64,
}

// Deterministic ordering: objective, then lexicographic (b, alpha).
fn better(x: &Cand, y: &Cand) -> bool {
    match x.value.total_cmp(&y.value) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => (x.b, x.alpha) < (y.b, y.alpha),
    }
}

/// Exhaustive grid search plus coordinate refinement.
pub fn oracle_plan(inputs: &PlanInputs, grid: &OracleGrid) -> Result<OracleOutcome> {
    inputs.validate()?;
    grid.validate()?;
    let bs = grid.batch_axis();
    let alphas = grid.alpha_axis();

    // Each row is reduced independently, then rows are reduced in order.
    let rows: Vec<Cand> = bs
        .par_iter()
        .map(|&b| -> Result<Cand> {
            let mut best: Option<Cand> = None;
            for &alpha in &alphas {
                let c = Cand { value: objective_eval(b, alpha, inputs)?, b, alpha };
                if best.as_ref().is_none_or(|cur| better(&c, cur)) {
                    best = Some(c);
                }
            }
            Ok(best.expect("non-empty alpha axis"))
        })
        .collect::<Result<_>>()?;
    let mut start = rows[0];
    for c in &rows[1..] {
        if better(c, &start) {
            start = *c;
        }
    }
    let mut evaluations = bs.len() * alphas.len();

    let step_b = axis_step(&bs);
    let step_a = axis_step(&alphas);
    let (refined, evals) = refine(inputs, grid, start, step_b, step_a)?;
    evaluations += evals;

    let mut per_batch = Vec::new();
    for b in grid.batch_powers() {
        let (alpha, evals) = best_alpha(b as f64, inputs, grid, &alphas)?;
        evaluations += evals;
        per_batch.push(PlanPoint::evaluate(b as f64, alpha, inputs)?);
    }
    let projected = *per_batch
        .iter()
        .min_by(|x, y| x.overall_time.total_cmp(&y.overall_time).then(x.b.total_cmp(&y.b)))
        .expect("b = 1 is always admissible");

    Ok(OracleOutcome {
        plan: Plan {
            source: PlanSource::Oracle,
            continuous: PlanPoint::evaluate(refined.b, refined.alpha, inputs)?,
            projected,
        },
        grid_best: (start.b, start.alpha, start.value),
        per_batch,
        evaluations,
        grid: *grid,
    })
}

/// Log-step between adjacent grid points (zero for a single point).
fn axis_step(axis: &[f64]) -> f64 {
    if axis.len() < 2 {
        0.0
    } else {
        (axis[1] / axis[0]).ln()
    }
}

fn refine(
    inputs: &PlanInputs,
    grid: &OracleGrid,
    start: Cand,
    step_b: f64,
    step_a: f64,
) -> Result<(Cand, usize)> {
    let mut cur = start;
    let mut evals = 0;
    // Bracket half-widths in log space; start one grid cell either side.
    let mut wb = step_b.max(1e-3);
    let mut wa = step_a.max(1e-3);
    for _ in 0..MAX_SWEEPS {
        let before = cur.value;

        let (lo, hi) = bracket(cur.b, wb, 1.0, grid.b_max);
        let line = golden_log(|b| objective_eval(b, cur.alpha, inputs), lo, hi)?;
        evals += line.evals;
        let b_on_edge = line.on_inner_edge(1.0, grid.b_max);
        if line.value < cur.value {
            cur = Cand { value: line.value, b: line.x, alpha: cur.alpha };
        }

        let (lo, hi) = bracket(cur.alpha, wa, grid.alpha_min, grid.alpha_max);
        let line = golden_log(|a| objective_eval(cur.b, a, inputs), lo, hi)?;
        evals += line.evals;
        let a_on_edge = line.on_inner_edge(grid.alpha_min, grid.alpha_max);
        if line.value < cur.value {
            cur = Cand { value: line.value, b: cur.b, alpha: line.x };
        }

        let improvement = (before - cur.value) / cur.value.abs().max(f64::MIN_POSITIVE);
        if !b_on_edge {
            wb *= 0.5;
        }
        if !a_on_edge {
            wa *= 0.5;
        }
        if improvement < REFINE_TOL && !b_on_edge && !a_on_edge {
            break;
        }
    }
    Ok((cur, evals))
}

fn bracket(x: f64, half_width: f64, lo: f64, hi: f64) -> (f64, f64) {
    let l = (x.ln() - half_width).exp().max(lo);
    let h = (x.ln() + half_width).exp().min(hi);
    (l.min(x), h.max(x))
}

/// Best `alpha` for a fixed batch size: grid scan, then golden refinement
/// between the neighbouring grid points.
fn best_alpha(b: f64, inputs: &PlanInputs, grid: &OracleGrid, alphas: &[f64]) -> Result<(f64, usize)> {
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for (i, &a) in alphas.iter().enumerate() {
        let v = objective_eval(b, a, inputs)?;
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = alphas[best_i.saturating_sub(1)].max(grid.alpha_min);
    let hi = alphas[(best_i + 1).min(alphas.len() - 1)].min(grid.alpha_max);
    let line = golden_log(|a| objective_eval(b, a, inputs), lo, hi)?;
    let evals = alphas.len() + line.evals;
    if line.value < best_v {
        Ok((line.x, evals))
    } else {
        Ok((alphas[best_i], evals))
    }
}

struct LineMin {
    x: f64,
    value: f64,
    lo: f64,
    hi: f64,
    evals: usize,
}

impl LineMin {
    /// Whether the minimizer sits on a bracket edge that is not also a box edge.
    fn on_inner_edge(&self, box_lo: f64, box_hi: f64) -> bool {
        (self.x == self.lo && self.lo > box_lo) || (self.x == self.hi && self.hi < box_hi)
    }
}

/// Golden-section search in `ln x` over `[lo, hi]`; the endpoints are
/// evaluated exactly and compete with the interior minimizer.
fn golden_log(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<LineMin> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut evals = 0;
    let mut eval = |x: f64| -> Result<f64> {
        evals += 1;
        f(x)
    };
    let f_lo = eval(lo)?;
    let f_hi = eval(hi)?;
    let (mut best_x, mut best_v) = if f_hi < f_lo { (hi, f_hi) } else { (lo, f_lo) };
    if hi > lo {
        let (mut a, mut z) = (lo.ln(), hi.ln());
        let mut c = z - INV_PHI * (z - a);
        let mut d = a + INV_PHI * (z - a);
        let mut fc = eval(c.exp().clamp(lo, hi))?;
        let mut fd = eval(d.exp().clamp(lo, hi))?;
        for _ in 0..GOLDEN_ITERS {
            if (z - a).abs() <= 1e-13 * (1.0 + a.abs().max(z.abs())) {
                break;
            }
            if fc < fd {
                z = d;
                d = c;
                fd = fc;
                c = z - INV_PHI * (z - a);
                fc = eval(c.exp().clamp(lo, hi))?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (z - a);
                fd = eval(d.exp().clamp(lo, hi))?;
            }
        }
        for (u, v) in [(c, fc), (d, fd)] {
            if v < best_v {
                best_v = v;
                best_x = u.exp().clamp(lo, hi);
            }
        }
    }
    Ok(LineMin { x: best_x, value: best_v, lo, hi, evals })
}
