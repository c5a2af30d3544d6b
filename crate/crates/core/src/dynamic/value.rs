use super::{DynamicScenario, MeanFieldState, Policy};
use crate::error::{Error, Result};

fn check_horizon(dyn_scenario: &DynamicScenario) -> Result<()> {
    if dyn_scenario.discount.powi(dyn_scenario.horizon as i32) > super::scenario::TRUNCATION_TOLERANCE {
        return Err(Error::validation("horizon", "too short for the truncation tolerance"));
    }
    Ok(())
}

fn check_slot(dyn_scenario: &DynamicScenario, policy: &Policy, t: usize) -> Result<()> {
    check_horizon(dyn_scenario)?;
    if t + dyn_scenario.horizon > policy.plan.len() {
        return Err(Error::Precondition(format!(
            "plan of length {} does not cover {} slots from slot {t}",
            policy.plan.len(),
            dyn_scenario.horizon
        )));
    }
    Ok(())
}

/// Expected discounted utility from slot `t + 1` on for an agent of type
/// `theta` whose slot-`t` allocation falls in `bin`, following the plan.
///
/// The agent's own type distribution is propagated exactly through the
/// kernel; the sum runs to the end of the plan (at least `horizon` terms
/// from `t`).
pub fn continuation_value(dyn_scenario: &DynamicScenario, policy: &Policy, theta: usize, bin: usize, t: usize) -> Result<f64> {
    check_slot(dyn_scenario, policy, t)?;
    let s = &dyn_scenario.static_scenario;
    let kernel = &dyn_scenario.kernel;
    let mut own = kernel.column(theta, bin);
    let mut weight = 1.0;
    let mut total = 0.0;
    for k in t + 1..policy.plan.len() {
        weight *= dyn_scenario.discount;
        let plan = &policy.plan[k];
        total += weight * own.iter().enumerate().map(|(th, pi)| pi * s.utility_of(th, &plan[th])).sum::<f64>();
        if k + 1 < policy.plan.len() {
            let mut next = vec![0.0; own.len()];
            for (now, pi) in own.iter().enumerate().filter(|(_, pi)| **pi > 0.0) {
                let column = kernel.column(now, kernel.bin(&plan[now])?);
                next.iter_mut().zip(&column).for_each(|(n, q)| *n += pi * q);
            }
            own = next;
        }
    }
    Ok(total)
}

/// Discounted value of type `theta` receiving `z` in slot `state.t` and
/// following the plan afterwards.
pub fn value_u_sigma(dyn_scenario: &DynamicScenario, policy: &Policy, theta: usize, z: &[f64], state: &MeanFieldState) -> Result<f64> {
    let s = &dyn_scenario.static_scenario;
    let now = s.utility.value(theta, z)?;
    let bin = dyn_scenario.kernel.bin(z)?;
    Ok(now + continuation_value(dyn_scenario, policy, theta, bin, state.t)?)
}

/// Discounted population welfare of the plan from slot `t` to its end.
pub fn welfare_from(dyn_scenario: &DynamicScenario, policy: &Policy, t: usize) -> f64 {
    let s = &dyn_scenario.static_scenario;
    let mut weight = 1.0;
    let mut total = 0.0;
    for k in t..policy.plan.len() {
        let rho = &policy.trajectory[k];
        total += weight * (0..rho.len()).filter(|th| rho[*th] > 0.0).map(|th| rho[th] * s.utility_of(th, &policy.plan[k][th])).sum::<f64>();
        weight *= dyn_scenario.discount;
    }
    total
}

/// Discounted welfare of the whole plan.
pub fn plan_welfare(dyn_scenario: &DynamicScenario, policy: &Policy) -> f64 {
    welfare_from(dyn_scenario, policy, 0)
}
