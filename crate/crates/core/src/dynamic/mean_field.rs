use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::TransitionKernel;
use crate::error::{Error, Result};

const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Population distribution over preference types at slot `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    pub rho: Vec<f64>,
    pub t: usize,
}

impl MeanFieldState {
    pub fn new(rho: Vec<f64>, t: usize) -> Result<Self> {
        let total: f64 = rho.iter().sum();
        if rho.is_empty() || rho.iter().any(|r| !(*r >= 0.0)) || (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::validation("rho", format!("not a distribution (sum {total})")));
        }
        Ok(MeanFieldState { rho, t })
    }
}

/// Deterministic population flow: `ρ'(θ') = Σ_θ ρ(θ) Q(θ' | θ, bin(z_θ))`.
///
/// `allocations[θ]` is the bundle handed to type `θ`; it is ignored (but
/// still range checked) for types with zero share.
pub fn mean_field_step(state: &MeanFieldState, allocations: &[Vec<f64>], kernel: &TransitionKernel) -> Result<MeanFieldState> {
    let t = kernel.num_theta();
    if state.rho.len() != t || allocations.len() != t {
        return Err(Error::validation("rho", "length does not match the kernel"));
    }
    let mut next = vec![0.0; t];
    for (now, z) in allocations.iter().enumerate() {
        let bin = kernel.bin(z)?;
        if state.rho[now] == 0.0 {
            continue;
        }
        for (to, slot) in next.iter_mut().enumerate() {
            *slot += state.rho[now] * kernel.probabilities[to][now][bin];
        }
    }
    // Column sums are 1 only to 1e-12; renormalize so long rollouts stay on the simplex.
    let total: f64 = next.iter().sum();
    next.iter_mut().for_each(|r| *r /= total);
    Ok(MeanFieldState {
        rho: next,
        t: state.t + 1,
    })
}

/// Apportion `total` items by `shares` so that counts sum exactly to
/// `total` (Hamilton's method; ties go to the lower index).
pub fn largest_remainder(shares: &[f64], total: u64) -> Vec<u64> {
    let exact: Vec<f64> = shares.iter().map(|s| s * total as f64).collect();
    let mut counts: Vec<u64> = exact.iter().map(|e| e.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

/// Empirical next-slot distribution of `num_agents` independent chains
/// started from the largest-remainder apportionment of `state.rho`.
pub fn mean_field_monte_carlo<R: Rng>(
    state: &MeanFieldState,
    allocations: &[Vec<f64>],
    kernel: &TransitionKernel,
    num_agents: u64,
    rng: &mut R,
) -> Result<MeanFieldState> {
    let t = kernel.num_theta();
    let counts = largest_remainder(&state.rho, num_agents);
    let mut next = vec![0u64; t];
    for (now, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let column = kernel.column(now, kernel.bin(&allocations[now])?);
        let draw = WeightedIndex::new(&column).map_err(|e| Error::Numerical(e.to_string()))?;
        for _ in 0..count {
            next[draw.sample(rng)] += 1;
        }
    }
    let rho = next.iter().map(|&c| c as f64 / num_agents as f64).collect();
    Ok(MeanFieldState { rho, t: state.t + 1 })
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
