//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lsvcg::dynamic::{
    dynamic_incentive_gap, mean_field_monte_carlo, mean_field_step, plan_policy, total_variation, DynamicConfig,
    DynamicScenario, MeanFieldState, PlanMode, TransitionKernel,
};
use lsvcg::incentives::{log_log_slope, verify_epsilon_ic};
use lsvcg::mechanisms::{ir_audit, large_scale_vcg_mean_field, shadow_payment_gap, mean_field_dsic_margin};
use lsvcg::model::{random_scenario, InfluenceParams, ScenarioShape, UtilityParams};
use lsvcg::solver::{objective, price_sensitivity, sensitivity_norm_bound_check, solve_tnum, solve_weighted};
use lsvcg::superimpose::{obedience_check, run_algorithm, AlgorithmConfig, DecisionRule};
use lsvcg::{AgentCount, Error, Population, Scenario, SolverConfig, TypeSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn run(number: usize, name: &str, limit: Duration, check: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = check();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = v.pass && in_time;
    println!(
        "criterion {number:>2} {name}: {} ({}; {:.1}s of {}s)",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn identity_two_type(weights: [f64; 2], shares: Vec<f64>, agents: AgentCount, beta: f64, z_max: f64) -> Scenario {
    Scenario::new(
        TypeSpace::new(2, 1, 1).unwrap(),
        UtilityParams::new(vec![vec![weights[0]], vec![weights[1]]]).unwrap(),
        InfluenceParams::identity(1, 1),
        Population::new(shares, agents).unwrap(),
        vec![1.0],
        beta,
        z_max,
    )
    .unwrap()
}

fn benchmark() -> Scenario {
    identity_two_type([1.0, 1.5], vec![0.5, 0.5], AgentCount::Infinite, 1.0, 50.0)
}

fn random_shape(rng: &mut ChaCha8Rng) -> ScenarioShape {
    let shapes = [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 2), (1, 4), (4, 1)];
    let (t, z) = shapes[rng.gen_range(0..shapes.len())];
    ScenarioShape::new(t, z, rng.gen_range(1..=2))
}

/// Inverse of `a x + b x²` on `x ≥ 0`.
fn inverse_influence(a: f64, b: f64, y: f64) -> f64 {
    if b == 0.0 {
        y / a
    } else {
        (-a + (a * a + 4.0 * b * y).sqrt()) / (2.0 * b)
    }
}

struct Line {
    weight: f64,
    w: f64,
    a: f64,
    b: f64,
}

/// Grid search over the first `K − 1` types of one resource (200 points per
/// dimension, refined twice around the best point); the last type
/// takes the remaining capacity.
fn grid_resource(lines: &[Line], capacity: f64, z_max: f64) -> f64 {
    let (last, head) = lines.split_last().unwrap();
    let fill = |load: f64| -> Option<f64> {
        let left = capacity - load;
        if left < 0.0 {
            return None;
        }
        Some(last.weight * last.w * inverse_influence(last.a, last.b, left / last.weight).min(z_max).ln_1p())
    };
    let mut ranges: Vec<(f64, f64)> = head
        .iter()
        .map(|l| (0.0, inverse_influence(l.a, l.b, capacity / l.weight).min(z_max)))
        .collect();
    let mut best = (f64::NEG_INFINITY, vec![0.0; head.len()]);
    if head.is_empty() {
        return fill(0.0).unwrap();
    }
    const POINTS: usize = 200;
    for _ in 0..3 {
        let grids: Vec<Vec<(f64, f64, f64)>> = head
            .iter()
            .zip(&ranges)
            .map(|(l, (lo, hi))| {
                (0..POINTS)
                    .map(|i| {
                        let z = lo + (hi - lo) * i as f64 / (POINTS - 1) as f64;
                        (z, l.weight * l.w * z.ln_1p(), l.weight * (l.a * z + l.b * z * z))
                    })
                    .collect()
            })
            .collect();
        let mut index = vec![0usize; head.len()];
        loop {
            let (mut value, mut load) = (0.0, 0.0);
            for (d, i) in index.iter().enumerate() {
                value += grids[d][*i].1;
                load += grids[d][*i].2;
            }
            if let Some(rest) = fill(load) {
                if value + rest > best.0 {
                    best = (value + rest, index.iter().enumerate().map(|(d, i)| grids[d][*i].0).collect());
                }
            }
            let mut d = 0;
            while d < index.len() {
                index[d] += 1;
                if index[d] < POINTS {
                    break;
                }
                index[d] = 0;
                d += 1;
            }
            if d == index.len() {
                break;
            }
        }
        ranges = ranges
            .iter()
            .zip(&best.1)
            .zip(head)
            .map(|(((lo, hi), c), l)| {
                let step = (hi - lo) / (POINTS - 1) as f64;
                let cap = inverse_influence(l.a, l.b, capacity / l.weight).min(z_max);
                ((c - step).max(0.0), (c + step).min(cap))
            })
            .collect();
    }
    best.0
}

fn grid_oracle(s: &Scenario) -> f64 {
    (0..s.num_resources())
        .map(|n| {
            let lines: Vec<Line> = s
                .pairs()
                .enumerate()
                .map(|(r, p)| {
                    let (a, b) = s.influence.coefficients(p.zeta, n);
                    Line {
                        weight: s.population.share(r),
                        w: s.utility.weight(p.theta, n),
                        a,
                        b,
                    }
                })
                .collect();
            grid_resource(&lines, s.capacities[n], s.z_max)
        })
        .sum()
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cfg = SolverConfig::default();
    let (mut worst_kkt, mut worst_rel) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let shape = random_shape(&mut rng);
        let s = random_scenario(&mut rng, &shape);
        let sol = solve_tnum(&s, &s.population, &cfg).unwrap();
        worst_kkt = worst_kkt.max(sol.kkt_residual);
        let value = objective(&s, s.population.shares(), &sol.z);
        let oracle = grid_oracle(&s);
        worst_rel = worst_rel.max((value - oracle).abs() / oracle.abs());
    }
    verdict(
        worst_kkt <= 1e-8 && worst_rel <= 1e-4,
        format!("max KKT residual {worst_kkt:.2e}, max objective gap to grid {worst_rel:.2e}"),
    )
}

fn budget_draws() -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    (0..100)
        .map(|_| {
            let shape = random_shape(&mut rng);
            random_scenario(&mut rng, &shape)
        })
        .collect()
}

fn criterion_2() -> Verdict {
    let cfg = SolverConfig::default();
    let (mut worst, mut worst_strong) = (0.0f64, 0.0f64);
    for base in budget_draws() {
        for beta in [0.0, 0.5, 1.0] {
            let mut s = base.clone();
            s.beta = beta;
            let out = large_scale_vcg_mean_field(&s, &s.population, &cfg).unwrap();
            let total = out.total_payments();
            let priced: f64 = out.prices.iter().zip(&s.capacities).map(|(p, c)| p * c).sum();
            let predicted = (1.0 - beta) * priced;
            worst = worst.max((total - predicted).abs() / priced.max(1.0));
            if beta == 1.0 {
                worst_strong = worst_strong.max(total.abs());
            }
        }
    }
    verdict(
        worst <= 1e-8 && worst_strong <= 1e-8,
        format!("max scaled identity error {worst:.2e}, max |total| at full rebate {worst_strong:.2e}"),
    )
}

fn criterion_3() -> Verdict {
    let cfg = SolverConfig::default();
    let mut worst = f64::INFINITY;
    for base in budget_draws() {
        for beta in [0.0, 0.5, 1.0] {
            let mut s = base.clone();
            s.beta = beta;
            worst = worst.min(ir_audit(&large_scale_vcg_mean_field(&s, &s.population, &cfg).unwrap()));
        }
    }
    verdict(worst >= -1e-9, format!("min truthful payoff {worst:.3e}"))
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let cfg = SolverConfig::default();
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let shape = random_shape(&mut rng);
        let s = random_scenario(&mut rng, &shape);
        worst = worst.min(mean_field_dsic_margin(&s, &cfg).unwrap());
    }
    verdict(worst >= -1e-9, format!("min truthfulness margin {worst:.3e}"))
}

fn criterion_5() -> Verdict {
    let s = benchmark();
    let cfg = SolverConfig::default();
    let gaps: Vec<f64> = [4u64, 8, 16, 32, 64]
        .iter()
        .map(|i| {
            let agents = s.population.with_agents(AgentCount::Finite(*i)).unwrap().assignments(&s.type_space).unwrap();
            shadow_payment_gap(&agents, &s, &cfg).unwrap().into_iter().fold(0.0, f64::max)
        })
        .collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    let fast = gaps[4] <= gaps[1] / 4.0;
    verdict(monotone && fast, format!("max payment gaps {}", sci(&gaps)))
}

fn criterion_6() -> Verdict {
    let s = benchmark();
    let sizes: Vec<u64> = (0..8).map(|k| 10 << k).collect();
    let table = verify_epsilon_ic(&s, &s.population, &sizes, &SolverConfig::default()).unwrap();
    let dominated = table.rows.iter().all(|r| r.holds);
    let slope_ok = table.slope.is_some_and(|m| (-2.5..=-1.5).contains(&m));
    let gaps: Vec<f64> = table.rows.iter().map(|r| r.max_gap).collect();
    verdict(
        dominated && slope_ok,
        format!("bound dominates: {dominated}; slope {:?}; gaps {}", table.slope, sci(&gaps)),
    )
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let cfg = SolverConfig::default();
    let h = 1e-5;
    let (mut checked, mut bounded, mut draws) = (0, 0, 0);
    let mut worst_rel = 0.0f64;
    let mut bound_failures = 0;
    let mut unscaled = 0.0f64;
    while bounded < 100 && draws < 10_000 {
        draws += 1;
        let shape = random_shape(&mut rng).agents(AgentCount::Finite(60));
        let s = random_scenario(&mut rng, &shape);
        let sol = solve_tnum(&s, &s.population, &cfg).unwrap();
        let sens = match price_sensitivity(&s, &s.population, &sol) {
            Ok(v) => v,
            Err(Error::Precondition(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        if checked < 20 {
            let shares = s.population.shares();
            for t in 0..s.num_types() {
                let shifted = |sign: f64| -> Vec<f64> {
                    let rho: Vec<f64> = shares
                        .iter()
                        .enumerate()
                        .map(|(r, v)| v + sign * h * ((r == t) as u8 as f64 - v))
                        .collect();
                    solve_weighted(&s, &rho, &s.capacities, &cfg).unwrap().p
                };
                let (up, down) = (shifted(1.0), shifted(-1.0));
                let analytic = sens.simplex_direction(t, shares);
                let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if scale == 0.0 {
                    continue;
                }
                let err = (0..s.num_resources())
                    .map(|n| ((up[n] - down[n]) / (2.0 * h) - analytic[n]).abs())
                    .fold(0.0, f64::max);
                worst_rel = worst_rel.max(err / scale);
            }
            checked += 1;
        }
        bounded += 1;
        let check = sensitivity_norm_bound_check(&s, &s.population, &sol).unwrap();
        if !check.holds {
            bound_failures += 1;
        }
        // The bound scaled back up by I: the left side does not depend on I.
        unscaled = unscaled.max(check.lhs / (check.rhs * 60.0));
    }
    verdict(
        checked == 20 && bounded == 100 && worst_rel <= 1e-4 && bound_failures == 0,
        format!("{checked} finite-difference instances, worst relative error {worst_rel:.2e}; norm bound failed on {bound_failures}/{bounded} at I = 60, max lhs/(I·rhs) {unscaled:.3}"),
    )
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let acfg = AlgorithmConfig::default();
    let cfg = SolverConfig::default();
    let (mut worst_margin, mut worst_fixed) = (f64::INFINITY, 0.0f64);
    for k in 0..10 {
        let shape = ScenarioShape::new(2, 1, 1 + k % 2);
        let first = rng.gen_range(200u64..800);
        let s = random_scenario(&mut rng, &shape)
            .with_population(Population::from_counts(&[first, 1000 - first]).unwrap())
            .unwrap();
        for pair in s.pairs() {
            let o = obedience_check(&s, 1000, pair, &acfg).unwrap();
            worst_margin = worst_margin.min(o.margin / (1e-3 * o.obedient_payoff.abs()));
        }
        let agents = s.population.assignments(&s.type_space).unwrap();
        let trace = run_algorithm(&DecisionRule::obedient(&s).actions_for(&s, &agents), &s, &acfg).unwrap();
        let central = solve_tnum(&s, &s.population, &cfg).unwrap();
        for (t, x) in agents.iter().zip(&trace.final_allocations) {
            let r = s.type_space.index(*t);
            for (a, b) in x.iter().zip(&central.z[r]) {
                worst_fixed = worst_fixed.max((a - b).abs());
            }
        }
        for (a, b) in trace.final_prices.iter().zip(&central.p) {
            worst_fixed = worst_fixed.max((a - b).abs());
        }
    }
    verdict(
        worst_margin >= -1.0 && worst_fixed <= 1e-6,
        format!("min margin in units of 1e-3·|payoff| {worst_margin:.3}; max distance to centralized solution {worst_fixed:.2e}"),
    )
}

fn dynamic_mixing(slots: usize) -> DynamicScenario {
    let s = identity_two_type([1.0, 1.8], vec![0.6, 0.4], AgentCount::Infinite, 1.0, 10.0);
    let kernel = TransitionKernel::allocation_independent(vec![vec![0.8, 0.3], vec![0.2, 0.7]], 1, 10.0).unwrap();
    DynamicScenario::new(s, kernel, 0.5, DynamicScenario::horizon_for(0.5), vec![0.6, 0.4], slots).unwrap()
}

fn criterion_9() -> Verdict {
    let cfg = DynamicConfig::default();
    let d = dynamic_mixing(3);
    let myopic = plan_policy(&d, PlanMode::Myopic, &cfg).unwrap();
    let oracle = plan_policy(&d, PlanMode::LookaheadOracle, &cfg).unwrap();
    let welfare_gap = (myopic.welfare - oracle.welfare).abs() / myopic.welfare.abs();

    let continuum = dynamic_incentive_gap(&d, &myopic, AgentCount::Infinite, &cfg).unwrap();
    let margin = continuum.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);

    let sizes: Vec<u64> = (0..8).map(|k| 10 << k).collect();
    let tables: Vec<_> = sizes
        .iter()
        .map(|i| dynamic_incentive_gap(&d, &myopic, AgentCount::Finite(*i), &cfg).unwrap())
        .collect();
    let dominated = tables.iter().all(|t| t.rows.iter().all(|r| r.holds));
    let slopes: Vec<Option<f64>> = (0..d.slots)
        .map(|t| {
            let points: Vec<(f64, f64)> = sizes.iter().zip(&tables).map(|(i, tab)| (*i as f64, tab.rows[t].max_gap)).collect();
            log_log_slope(&points)
        })
        .collect();
    let slopes_ok = slopes.iter().all(|m| m.is_some_and(|m| (-2.5..=-1.5).contains(&m)));

    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let t = 3;
    let bins = 4;
    let mut p = vec![vec![vec![0.0; bins]; t]; t];
    for now in 0..t {
        for bin in 0..bins {
            let raw: Vec<f64> = (0..t).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            for next in 0..t {
                p[next][now][bin] = raw[next] / total;
            }
        }
    }
    let kernel = TransitionKernel::new(p, vec![TransitionKernel::uniform_edges(10.0, bins)]).unwrap();
    let state = MeanFieldState::new(vec![0.25, 0.45, 0.3], 0).unwrap();
    let z = vec![vec![0.7], vec![4.2], vec![9.9]];
    let exact = mean_field_step(&state, &z, &kernel).unwrap();
    let sampled = mean_field_monte_carlo(&state, &z, &kernel, 1_000_000, &mut rng).unwrap();
    let tv = total_variation(&exact.rho, &sampled.rho);

    verdict(
        welfare_gap <= 1e-4 && margin >= -1e-9 && dominated && slopes_ok && tv <= 3e-3,
        format!(
            "welfare gap {welfare_gap:.2e}; continuum margin {margin:.2e}; bound dominates: {dominated}; per-slot slopes {slopes:?}; Monte Carlo TV {tv:.2e}"
        ),
    )
}

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_lsvcg")).args(args).status().unwrap().success()
}

fn same_tree(a: &Path, b: &Path) -> bool {
    let mut names: Vec<_> = std::fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let mut other: Vec<_> = std::fs::read_dir(b).unwrap().map(|e| e.unwrap().file_name()).collect();
    other.sort();
    names == other && names.iter().all(|n| std::fs::read(a.join(n)).unwrap() == std::fs::read(b.join(n)).unwrap())
}

fn criterion_10() -> Verdict {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let bench = root.join("benchmark.json");
    let mixing = root.join("dynamic_mixing.json");
    let bench = bench.to_str().unwrap();
    let mixing = mixing.to_str().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["solve", "--scenario", bench],
        vec!["vcg", "--scenario", bench, "--set", "num_agents=20"],
        vec!["lsvcg", "--scenario", bench, "--beta", "0.5"],
        vec!["incentive-sweep", "--scenario", bench, "--i-list", "10,20,40", "--profiles", "3", "--seed", "7"],
        vec!["sensitivity", "--scenario", bench],
        vec!["superimpose", "--scenario", bench],
        vec!["dynamic", "--scenario", mixing, "--i-list", "inf,20"],
        vec!["generate", "--seed", "42", "--set", "generate.num_theta=3"],
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    for (k, args) in runs.iter().enumerate() {
        let a = tmp.path().join(format!("{k}a"));
        let b = tmp.path().join(format!("{k}b"));
        for dir in [&a, &b] {
            let mut full = args.clone();
            full.extend(["--out", dir.to_str().unwrap()]);
            if !cli(&full) {
                differing.push(format!("{} failed", args[0]));
            }
        }
        if !same_tree(&a, &b) {
            differing.push(args[0].to_string());
        }
    }
    verdict(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} subcommands rerun byte-identically", runs.len())
        } else {
            format!("differences: {differing:?}")
        },
    )
}

fn main() {
    let minute = Duration::from_secs(60);
    let results = [
        run(1, "solver correctness", minute, criterion_1),
        run(2, "budget identity", minute, criterion_2),
        run(3, "individual rationality", minute, criterion_3),
        run(4, "continuum truthfulness", minute, criterion_4),
        run(5, "exact and shadow payments converge", 5 * minute, criterion_5),
        run(6, "finite-population incentive bound and rate", 10 * minute, criterion_6),
        run(7, "price sensitivity", 10 * minute, criterion_7),
        run(8, "obedience", 10 * minute, criterion_8),
        run(9, "dynamic reductions and bounds", 10 * minute, criterion_9),
        run(10, "reproducibility", 10 * minute, criterion_10),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
