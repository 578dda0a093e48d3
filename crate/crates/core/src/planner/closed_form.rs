use super::kkt::{kkt_residuals, KktCertificate};
use super::objective::objective_eval;
use super::{Plan, PlanInputs, PlanPoint, PlanSource};
use crate::error::{ensure, DeflError, Result};

/// Published stationary point, evaluated at the bottleneck device
/// `m* = argmax G_m / f_m`:
///
/// * `alpha* = sqrt(T_cm f / (M^2 eps nu^2 G))`
/// * `b* = 2 c M sqrt(T_cm f eps / G)`, clamped to `b >= 1`
/// * `T_cp* = G b* / f`
///
/// The certificate is evaluated at `(b*, alpha*, T_cp*)` without any upper
/// bound on `b`.
pub fn closed_form_plan(inputs: &PlanInputs) -> Result<(Plan, KktCertificate)> {
    inputs.validate()?;
    ensure(inputs.t_cm > 0.0, || DeflError::Domain("closed form needs T_cm > 0".into()))?;
    let l = &inputs.learning;
    let m = l.devices as f64;
    // f_m / G_m at the bottleneck.
    let speed = 1.0 / inputs.r_max();

    let alpha = (inputs.t_cm * speed / (m * m * l.epsilon * l.nu * l.nu)).sqrt();
    let b_cont = (2.0 * l.c * m * (inputs.t_cm * speed * l.epsilon).sqrt()).max(1.0);
    ensure(alpha.is_finite() && alpha > 0.0 && b_cont.is_finite(), || {
        DeflError::Domain(format!("degenerate closed form: alpha={alpha}, b={b_cont}"))
    })?;

    let continuous = PlanPoint::evaluate(b_cont, alpha, inputs)?;
    let b_rounded = round_batch(b_cont, alpha, inputs)?;
    let projected = PlanPoint::evaluate(b_rounded as f64, alpha, inputs)?;
    let cert = kkt_residuals(b_cont, alpha, continuous.t_cp, inputs, None)?;
    Ok((
        Plan {
            source: PlanSource::ClosedForm,
            continuous,
            projected,
        },
        cert,
    ))
}

/// Projects a continuous batch size onto the neighbouring powers of two,
/// keeping whichever has the smaller objective (the smaller `b` on ties).
pub fn round_batch(b_cont: f64, alpha: f64, inputs: &PlanInputs) -> Result<u64> {
    ensure(b_cont.is_finite() && b_cont >= 1.0, || DeflError::InvalidBatch(b_cont))?;
    ensure(b_cont < (1u64 << 62) as f64, || {
        DeflError::Domain(format!("batch size {b_cont} out of range"))
    })?;
    let mut lo: u64 = 1 << (b_cont.log2().floor() as u32);
    while lo as f64 > b_cont {
        lo /= 2;
    }
    while ((lo * 2) as f64) <= b_cont {
        lo *= 2;
    }
    if lo as f64 == b_cont {
        return Ok(lo);
    }
    let hi = lo * 2;
    let f_lo = objective_eval(lo as f64, alpha, inputs)?;
    let f_hi = objective_eval(hi as f64, alpha, inputs)?;
    Ok(if f_hi < f_lo { hi } else { lo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay_model::LearningParams;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn inputs(t_cm: f64, r: f64, eps: f64, nu: f64, c: f64, m: usize) -> PlanInputs {
        let l = LearningParams::new(eps, nu, c, m).unwrap();
        PlanInputs::new(t_cm, vec![r; m], l).unwrap()
    }

    fn paper() -> PlanInputs {
        inputs(0.005, 3e7 / 2e9, 0.01, 1.0, 1.0, 10)
    }

    #[test]
    fn paper_operating_point() {
        let (plan, _) = closed_form_plan(&paper()).unwrap();
        // 40-digit references: sqrt(1/3), exp(-sqrt(1/3)), 20 sqrt(1/300), 0.015 * b.
        assert!(rel(plan.alpha_star(), 0.577_350_269_189_625_8) < 1e-12);
        assert!(rel(plan.theta_star(), 0.561_383_913_798_928_2) < 1e-12);
        assert!(rel(plan.b_cont(), 1.154_700_538_379_251_5) < 1e-12);
        assert!(rel(plan.continuous.t_cp, 0.017_320_508_075_688_773) < 1e-12);
        assert_eq!(plan.source, PlanSource::ClosedForm);
    }

    #[test]
    fn unit_radical_gives_batch_two() {
        // T_cm f eps / G = 1 with M = 1, c = 1.
        let p = inputs(2.0, 0.5, 0.25, 1.0, 1.0, 1);
        let (plan, _) = closed_form_plan(&p).unwrap();
        assert_eq!(plan.b_cont(), 2.0);
    }

    #[test]
    fn paper_batch_rounds_up_to_two() {
        let p = paper();
        let (plan, _) = closed_form_plan(&p).unwrap();
        let alpha = plan.alpha_star();
        let f1 = objective_eval(1.0, alpha, &p).unwrap();
        let f2 = objective_eval(2.0, alpha, &p).unwrap();
        assert!(f2 < f1);
        assert_eq!(round_batch(plan.b_cont(), alpha, &p).unwrap(), 2);
        assert_eq!(plan.b_rounded(), 2);
    }

    #[test]
    fn exact_powers_kept() {
        let p = paper();
        assert_eq!(round_batch(4.0, 0.5, &p).unwrap(), 4);
        assert_eq!(round_batch(1.0, 0.5, &p).unwrap(), 1);
        assert_eq!(round_batch(1024.0, 0.5, &p).unwrap(), 1024);
        assert!(round_batch(0.5, 0.5, &p).is_err());
    }

    #[test]
    fn scaling_laws() {
        let base = inputs(0.01, 1e-3, 0.01, 1.0, 1.0, 4);
        let (p0, _) = closed_form_plan(&base).unwrap();
        let (p1, _) = closed_form_plan(&inputs(0.02, 1e-3, 0.01, 1.0, 1.0, 4)).unwrap();
        assert!(rel(p1.b_cont() / p0.b_cont(), 2f64.sqrt()) < 1e-12);
        let (p2, _) = closed_form_plan(&inputs(0.01, 1e-3, 0.01, 1.0, 1.0, 8)).unwrap();
        assert!(rel(p2.b_cont() / p0.b_cont(), 2.0) < 1e-12);
        assert!(rel(p2.alpha_star() / p0.alpha_star(), 0.5) < 1e-12);
        let (p3, _) = closed_form_plan(&inputs(0.01, 1e-3, 0.01, 2.0, 1.0, 4)).unwrap();
        assert!(rel(p3.alpha_star() / p0.alpha_star(), 0.5) < 1e-12);
    }

    #[test]
    fn heterogeneous_fleet_uses_bottleneck() {
        let l = LearningParams::new(0.01, 1.0, 1.0, 3).unwrap();
        let hetero = PlanInputs::new(0.005, vec![1e-3, 0.015, 2e-3], l).unwrap();
        let (a, _) = closed_form_plan(&hetero).unwrap();
        let (b, _) = closed_form_plan(&inputs(0.005, 0.015, 0.01, 1.0, 1.0, 3)).unwrap();
        assert_eq!(a.alpha_star(), b.alpha_star());
        assert_eq!(a.b_cont(), b.b_cont());
    }

    proptest! {
        #[test]
        fn rounding_never_worse_than_nearest(
            b in 1.0f64..2000.0, alpha in 1e-3f64..10.0, t_cm in 1e-3f64..1.0, r in 1e-5f64..1e-1,
        ) {
            let p = inputs(t_cm, r, 0.05, 1.0, 1.0, 5);
            let chosen = round_batch(b, alpha, &p).unwrap();
            prop_assert!(chosen.is_power_of_two());
            let nearest = 2f64.powf(b.log2().round());
            let f_chosen = objective_eval(chosen as f64, alpha, &p).unwrap();
            let f_nearest = objective_eval(nearest, alpha, &p).unwrap();
            prop_assert!(f_chosen <= f_nearest * (1.0 + 1e-15));
        }
    }
}
