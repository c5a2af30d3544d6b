use super::super::model::{Scenario, TypePair};

/// Maximizer of `w·ln(1+z) − p·(a z + b z²)` over `[lo, hi]`.
///
/// The stationarity condition `w/(1+z) = p(a + 2bz)` is a quadratic in `z`
/// with exactly one root above −1; the objective is strictly concave, so the
/// box maximizer is that root clamped to the box.
pub fn best_response_scalar(w: f64, a: f64, b: f64, p: f64, lo: f64, hi: f64) -> f64 {
    if p <= 0.0 {
        return hi;
    }
    let excess = w - p * a;
    let root = if b == 0.0 {
        excess / (p * a)
    } else {
        let s = p * (a + 2.0 * b);
        let disc = p * p * (a - 2.0 * b) * (a - 2.0 * b) + 8.0 * p * b * w;
        2.0 * excess / (s + disc.sqrt())
    };
    root.clamp(lo, hi)
}

/// Price-taking best response of type `pair` over `[0, z_max]^N`.
pub fn best_response(scenario: &Scenario, pair: TypePair, p: &[f64]) -> Vec<f64> {
    (0..scenario.num_resources())
        .map(|n| {
            let (a, b) = scenario.influence.coefficients(pair.zeta, n);
            best_response_scalar(scenario.utility.weight(pair.theta, n), a, b, p[n], 0.0, scenario.z_max)
        })
        .collect()
}
