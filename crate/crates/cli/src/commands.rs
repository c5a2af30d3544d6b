use std::fs;
use std::time::Instant;

use lsvcg::dynamic::{
    dynamic_incentive_gap, load_dynamic_scenario, plan_policy, DynamicConfig, DynamicScenario, PlanMode,
};
use lsvcg::incentives::{sampled_opponent_gaps, verify_epsilon_ic};
use lsvcg::mechanisms::{budget_audit, ir_audit, large_scale_vcg, large_scale_vcg_mean_field, shadow_payment_gap, vcg_exact, Outcome};
use lsvcg::model::{load_scenario, random_scenario, save_scenario, ScenarioShape};
use lsvcg::solver::{price_sensitivity, sensitivity_norm_bound_check, solve_tnum};
use lsvcg::superimpose::{obedience_check, run_algorithm, superimposed_outcome, AlgorithmConfig, DecisionRule};
use lsvcg::{exec, AgentCount, Population, Scenario, SolverConfig, TypePair};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::output::{columns, num, Run};
use crate::overrides::Overrides;
use crate::{Common, Failure, Mode};

const DEFAULT_SIZES: [u64; 8] = [10, 20, 40, 80, 160, 320, 640, 1280];

struct Context<'a> {
    common: &'a Common,
    name: &'static str,
    overrides: Overrides,
    started: Instant,
}

impl<'a> Context<'a> {
    fn new(common: &'a Common, name: &'static str) -> Result<Self, Failure> {
        if let Some(n) = common.workers {
            if n == 0 {
                return Err(Failure::Usage("--workers must be positive".into()));
            }
            exec::init_workers(n);
        }
        Ok(Context {
            common,
            name,
            overrides: Overrides::parse(&common.set)?,
            started: Instant::now(),
        })
    }

    fn read_scenario(&self) -> Result<Vec<u8>, Failure> {
        let path = self
            .common
            .scenario
            .as_ref()
            .ok_or_else(|| Failure::Usage(format!("`{}` needs --scenario", self.name)))?;
        fs::read(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
    }

    fn apply(&mut self, s: &mut Scenario) -> Result<(), Failure> {
        if let Some(beta) = self.overrides.get::<f64>("beta")? {
            s.beta = beta;
        }
        if let Some(beta) = self.common.beta {
            s.beta = beta;
        }
        if let Some(z_max) = self.overrides.get::<f64>("z_max")? {
            s.z_max = z_max;
        }
        if let Some(c) = self.overrides.list("capacities")? {
            s.capacities = c;
        }
        let shares = self.overrides.list("shares")?;
        let agents = match self.overrides.get::<String>("num_agents")? {
            Some(raw) => Some(parse_count(&raw)?),
            None => None,
        };
        if shares.is_some() || agents.is_some() {
            let shares = shares.unwrap_or_else(|| s.population.shares().to_vec());
            let agents = agents.unwrap_or(s.population.num_agents());
            s.population = Population::new(shares, agents)?;
        }
        s.validate()?;
        Ok(())
    }

    fn scenario(&mut self) -> Result<Scenario, Failure> {
        let mut s = load_scenario(&self.read_scenario()?)?;
        self.apply(&mut s)?;
        Ok(s)
    }

    fn solver(&mut self) -> Result<SolverConfig, Failure> {
        let mut c = SolverConfig::default();
        if let Some(v) = self.overrides.get("solver.price_tolerance")? {
            c.price_tolerance = v;
        }
        if let Some(v) = self.overrides.get("solver.stationarity_tolerance")? {
            c.stationarity_tolerance = v;
        }
        if let Some(v) = self.overrides.get("solver.max_bisection_iters")? {
            c.max_bisection_iters = v;
        }
        Ok(c)
    }

    fn algorithm(&mut self) -> Result<AlgorithmConfig, Failure> {
        let mut c = AlgorithmConfig::default();
        if let Some(v) = self.overrides.get("algorithm.tolerance")? {
            c.tolerance = v;
        }
        if let Some(v) = self.overrides.get("algorithm.max_rounds")? {
            c.max_rounds = v;
        }
        if let Some(v) = self.overrides.get::<f64>("algorithm.step0")? {
            c.step0 = Some(v);
        }
        Ok(c)
    }

    fn sizes(&self, default: &[AgentCount]) -> Result<Vec<AgentCount>, Failure> {
        match &self.common.i_list {
            None => Ok(default.to_vec()),
            Some(raw) => raw.split(',').map(|t| parse_count(t.trim())).collect(),
        }
    }

    /// Reject unread overrides and open the output directory.
    fn open(&self, solver: Option<&SolverConfig>) -> Result<Run, Failure> {
        self.overrides.finish()?;
        let scenario = self
            .common
            .scenario
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let set: Vec<String> = self.overrides.map().iter().map(|(k, v)| format!("{k}={v}")).collect();
        let header = vec![
            ("tool".to_string(), format!("lsvcg {}", env!("CARGO_PKG_VERSION"))),
            ("subcommand".to_string(), self.name.to_string()),
            ("scenario".to_string(), scenario.clone()),
            ("seed".to_string(), self.common.seed.to_string()),
            ("overrides".to_string(), set.join(";")),
        ];
        let mut meta = Map::new();
        meta.insert("tool".into(), json!("lsvcg"));
        meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        meta.insert("subcommand".into(), json!(self.name));
        meta.insert("scenario".into(), json!(scenario));
        meta.insert("seed".into(), json!(self.common.seed));
        meta.insert("overrides".into(), json!(self.overrides.map()));
        if let Some(c) = solver {
            meta.insert(
                "solver".into(),
                json!({
                    "price_tolerance": c.price_tolerance,
                    "stationarity_tolerance": c.stationarity_tolerance,
                    "max_bisection_iters": c.max_bisection_iters,
                }),
            );
        }
        Ok(Run::new(&self.common.out, header, meta)?)
    }

    fn close(&self, mut run: Run, results: Value) -> Result<(), Failure> {
        run.meta.insert("results".into(), results);
        if self.common.record_timing {
            run.meta.insert("wall_time_s".into(), json!(self.started.elapsed().as_secs_f64()));
        }
        Ok(run.finish()?)
    }
}

fn parse_count(raw: &str) -> Result<AgentCount, Failure> {
    match raw {
        "inf" | "infinite" => Ok(AgentCount::Infinite),
        _ => raw
            .parse::<u64>()
            .map(AgentCount::Finite)
            .map_err(|_| Failure::Usage(format!("`{raw}` is not a population size"))),
    }
}

fn finite_agents(s: &Scenario, command: &str) -> Result<Vec<TypePair>, Failure> {
    s.population
        .assignments(&s.type_space)
        .ok_or_else(|| Failure::Input(format!("`{command}` needs a finite population (set num_agents)")))
}

fn type_columns(prefix: &str, s: &Scenario) -> Vec<String> {
    (0..s.num_types()).map(|r| format!("{prefix}_{r}")).collect()
}

fn allocation_columns(s: &Scenario) -> Vec<String> {
    (0..s.num_resources()).map(|n| format!("z_{n}")).collect()
}

fn nums(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| num(*x)).collect()
}

pub fn solve(common: &Common) -> Result<(), Failure> {
    let mut ctx = Context::new(common, "solve")?;
    let s = ctx.scenario()?;
    let cfg = ctx.solver()?;
    let mut run = ctx.open(Some(&cfg))?;
    let sol = solve_tnum(&s, &s.population, &cfg)?;
    let mut rows = Vec::new();
    for (r, pair) in s.pairs().enumerate() {
        for n in 0..s.num_resources() {
            rows.push(vec![
                r.to_string(),
                pair.theta.to_string(),
                pair.zeta.to_string(),
                n.to_string(),
                num(sol.z[r][n]),
                num(sol.p[n]),
                num(sol.kkt_residual),
                num(sol.constraint_slack[n]),
            ]);
        }
    }
    run.table(
        "solution.csv",
        &columns(["type", "theta", "zeta", "resource", "z", "price", "kkt_residual", "slack"]),
        &rows,
    )?;
    ctx.close(
        run,
        json!({"kkt_residual": sol.kkt_residual, "iterations": sol.iterations, "prices": sol.p}),
    )
}

pub fn vcg(common: &Common) -> Result<(), Failure> {
    let mut ctx = Context::new(common, "vcg")?;
    let s = ctx.scenario()?;
    let cfg = ctx.solver()?;
    let agents = finite_agents(&s, "vcg")?;
    let mut run = ctx.open(Some(&cfg))?;
    let exact = vcg_exact(&agents, &agents, &s, &cfg)?;
    let gaps = shadow_payment_gap(&agents, &s, &cfg)?;
    let mut header = columns(["agent", "theta", "zeta"]);
    header.extend(allocation_columns(&s));
    header.extend(columns(["payment", "payoff", "shadow_gap"]));
    let rows: Vec<Vec<String>> = agents
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut row = vec![i.to_string(), t.theta.to_string(), t.zeta.to_string()];
            row.extend(nums(&exact.allocations[i]));
            row.extend([num(exact.payments[i]), num(exact.payoffs[i]), num(gaps[i])]);
            row
        })
        .collect();
    run.table("vcg.csv", &header, &rows)?;
    let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
    ctx.close(
        run,
        json!({"num_agents": agents.len(), "total_payments": exact.total_payments(), "max_shadow_gap": max_gap}),
    )
}

fn outcome_rows(s: &Scenario, out: &Outcome) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = columns(["entry", "theta", "zeta", "mass"]);
    header.extend(allocation_columns(s));
    header.extend(columns(["payment", "payoff"]));
    let rows = (0..out.num_agents())
        .map(|i| {
            let t = out.true_types[i];
            let mut row = vec![i.to_string(), t.theta.to_string(), t.zeta.to_string(), num(out.mass[i])];
            row.extend(nums(&out.allocations[i]));
            row.extend([num(out.payments[i]), num(out.payoffs[i])]);
            row
        })
        .collect();
    (header, rows)
}

pub fn lsvcg(common: &Common) -> Result<(), Failure> {
    let mut ctx = Context::new(common, "lsvcg")?;
    let s = ctx.scenario()?;
    let cfg = ctx.solver()?;
    let mut run = ctx.open(Some(&cfg))?;
    let out = match s.population.assignments(&s.type_space) {
        Some(agents) => large_scale_vcg(&agents, &agents, &s, &cfg)?,
        None => large_scale_vcg_mean_field(&s, &s.population, &cfg)?,
    };
    let (header, rows) = outcome_rows(&s, &out);
    run.table("payments.csv", &header, &rows)?;
    let audit = budget_audit(&out, &s);
    let min_payoff = ir_audit(&out);
    run.table(
        "budget.csv",
        &columns(["beta", "total_payments", "predicted", "binding", "passes", "min_payoff"]),
        &[vec![
            num(s.beta),
            num(audit.total_payments),
            num(audit.predicted),
            audit.binding.to_string(),
            audit.passes.to_string(),
            num(min_payoff),
        ]],
    )?;
    ctx.close(
        run,
        json!({"total_payments": audit.total_payments, "predicted": audit.predicted, "budget_passes": audit.passes, "min_payoff": min_payoff}),
    )
}

pub fn incentive_sweep(common: &Common, profiles: usize) -> Result<(), Failure> {
    let mut ctx = Context::new(common, "incentive-sweep")?;
    let s = ctx.scenario()?;
    let cfg = ctx.solver()?;
    let default: Vec<AgentCount> = DEFAULT_SIZES.iter().map(|i| AgentCount::Finite(*i)).collect();
    let sizes = ctx
        .sizes(&default)?
        .into_iter()
        .map(|c| c.finite().ok_or_else(|| Failure::Usage("incentive-sweep needs finite sizes".into())))
        .collect::<Result<Vec<u64>, _>>()?;
    let mut run = ctx.open(Some(&cfg))?;
    let table = verify_epsilon_ic(&s, &s.population, &sizes, &cfg)?;
    let mut header = columns(["num_agents", "max_gap", "bound", "holds"]);
    header.extend(type_columns("gap", &s));
    header.extend(type_columns("best_misreport", &s));
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.num_agents.to_string(), num(r.max_gap), num(r.bound), r.holds.to_string()];
            row.extend(nums(&r.per_type_gap));
            row.extend(r.best_misreport.iter().map(|m| m.map(|v| v.to_string()).unwrap_or_default()));
            row
        })
        .collect();
    run.table("incentive.csv", &header, &rows)?;
    if profiles > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
        let mut rows = Vec::new();
        for i in &sizes {
            for g in sampled_opponent_gaps(&s, *i, profiles, &mut rng, &cfg)? {
                rows.push(vec![
                    i.to_string(),
                    g.profile.to_string(),
                    g.true_type.to_string(),
                    num(g.max_gap),
                    g.bound.map(num).unwrap_or_default(),
                    g.holds().map(|h| h.to_string()).unwrap_or_default(),
                ]);
            }
        }
        run.table(
            "sampled.csv",
            &columns(["num_agents", "profile", "true_type", "max_gap", "bound", "holds"]),
            &rows,
        )?;
    }
    let all_hold = table.rows.iter().all(|r| r.holds);
    ctx.close(run, json!({"slope": table.slope, "all_hold": all_hold}))
}

pub fn sensitivity(common: &Common) -> Result<(), Failure> {
    let mut ctx = Context::new(common, "sensitivity")?;
    let s = ctx.scenario()?;
    let cfg = ctx.solver()?;
    let mut run = ctx.open(Some(&cfg))?;
    let sol = solve_tnum(&s, &s.population, &cfg)?;
    let sens = price_sensitivity(&s, &s.population, &sol)?;
    let mut rows = Vec::new();
    for r in 0..s.num_types() {
        let along = sens.simplex_direction(r, s.population.shares());
        for n in 0..s.num_resources() {
            rows.push(vec![n.to_string(), r.to_string(), num(sens.dp_drho[n][r]), num(along[n])]);
        }
    }
    run.table("sensitivity.csv", &columns(["resource", "type", "dp_drho", "simplex_direction"]), &rows)?;
    let mut results = json!({"prices": sol.p});
    if !s.population.num_agents().is_infinite() {
        let check = sensitivity_norm_bound_check(&s, &s.population, &sol)?;
        run.table(
            "norm.csv",
            &columns(["lhs", "rhs", "holds"]),
            &[vec![num(check.lhs), num(check.rhs), check.holds.to_string()]],
        )?;
        results["norm_bound_holds"] = json!(check.holds);
    }
    ctx.close(run, results)
}

pub fn superimpose(common: &Common) -> Result<(), Failure> {
    let mut ctx = Context::new(common, "superimpose")?;
    let s = ctx.scenario()?;
    let cfg = ctx.solver()?;
    let acfg = ctx.algorithm()?;
    let agents = finite_agents(&s, "superimpose")?;
    let mut run = ctx.open(Some(&cfg))?;
    run.meta.insert(
        "algorithm".into(),
        json!({"tolerance": acfg.tolerance, "max_rounds": acfg.max_rounds, "step0": acfg.step0}),
    );
    let actions = DecisionRule::obedient(&s).actions_for(&s, &agents);
    let trace = run_algorithm(&actions, &s, &acfg)?;
    let out = superimposed_outcome(&trace, &agents, &s, s.beta)?;
    let central = solve_tnum(&s, &s.population, &cfg)?;

    let mut header = columns(["round"]);
    header.extend((0..s.num_resources()).map(|n| format!("price_{n}")));
    header.extend((0..s.num_resources()).map(|n| format!("excess_{n}")));
    let rows: Vec<Vec<String>> = trace
        .rounds
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let mut row = vec![k.to_string()];
            row.extend(nums(&r.prices));
            row.extend(nums(&r.excess));
            row
        })
        .collect();
    run.table("rounds.csv", &header, &rows)?;
    let (header, rows) = outcome_rows(&s, &out);
    run.table("payments.csv", &header, &rows)?;

    let num_agents = agents.len() as u64;
    let pairs: Vec<TypePair> = s.pairs().filter(|p| s.population.share(s.type_space.index(*p)) > 0.0).collect();
    let mut rows = Vec::new();
    for pair in &pairs {
        let o = obedience_check(&s, num_agents, *pair, &acfg)?;
        rows.push(vec![
            s.type_space.index(*pair).to_string(),
            pair.theta.to_string(),
            pair.zeta.to_string(),
            num(o.obedient_payoff),
            num(o.best_deviation_payoff),
            o.best_deviation.map(|d| s.type_space.index(d).to_string()).unwrap_or_default(),
            num(o.margin),
            num(o.max_price_shift),
        ]);
    }
    run.table(
        "obedience.csv",
        &columns([
            "type",
            "theta",
            "zeta",
            "obedient_payoff",
            "best_deviation_payoff",
            "best_deviation",
            "margin",
            "max_price_shift",
        ]),
        &rows,
    )?;
    let allocation_error = agents
        .iter()
        .zip(&trace.final_allocations)
        .flat_map(|(t, x)| {
            let r = s.type_space.index(*t);
            x.iter().zip(&central.z[r]).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    let price_error = trace.final_prices.iter().zip(&central.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ctx.close(
        run,
        json!({
            "converged": trace.converged,
            "rounds_used": trace.rounds_used,
            "max_allocation_error": allocation_error,
            "max_price_error": price_error,
            "total_payments": out.total_payments(),
        }),
    )
}

pub fn dynamic(common: &Common) -> Result<(), Failure> {
    let mut ctx = Context::new(common, "dynamic")?;
    let d = load_dynamic_scenario(&ctx.read_scenario()?)?;
    let mut s = d.static_scenario.clone();
    ctx.apply(&mut s)?;
    let slots = ctx.overrides.get::<usize>("dynamic.slots")?.unwrap_or(d.slots);
    let d = DynamicScenario::new(s, d.kernel, d.discount, d.horizon, d.rho0, slots)?;
    let mut dcfg = DynamicConfig {
        solver: ctx.solver()?,
        ..DynamicConfig::default()
    };
    if let Some(v) = ctx.overrides.get("dynamic.rebate")? {
        dcfg.rebate = v;
    }
    if let Some(v) = ctx.overrides.get("dynamic.oracle_grid")? {
        dcfg.oracle_grid = v;
    }
    let mode = match common.mode.unwrap_or(Mode::Myopic) {
        Mode::Myopic => PlanMode::Myopic,
        Mode::Oracle => PlanMode::LookaheadOracle,
    };
    let sizes = ctx.sizes(&[AgentCount::Infinite])?;
    let mut run = ctx.open(Some(&dcfg.solver))?;
    let policy = plan_policy(&d, mode, &dcfg)?;
    let s = &d.static_scenario;
    let num_theta = d.num_theta();
    let theta_cols = |prefix: &str| (0..num_theta).map(|th| format!("{prefix}_{th}")).collect::<Vec<_>>();
    let bundle_cols = || {
        (0..num_theta)
            .flat_map(|th| (0..s.num_resources()).map(move |n| format!("z_{th}_{n}")))
            .collect::<Vec<_>>()
    };

    let mut header = columns(["slot"]);
    header.extend(theta_cols("rho"));
    header.extend(bundle_cols());
    let rows: Vec<Vec<String>> = policy
        .plan
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let mut row = vec![k.to_string()];
            row.extend(nums(&policy.trajectory[k]));
            row.extend(z.iter().flat_map(|b| nums(b)));
            row
        })
        .collect();
    run.table("plan.csv", &header, &rows)?;

    let mut header = columns(["num_agents", "t"]);
    header.extend(theta_cols("rho"));
    header.extend(bundle_cols());
    header.extend((0..s.num_resources()).map(|n| format!("price_{n}")));
    header.extend(theta_cols("payment"));
    header.extend(theta_cols("gap"));
    header.extend(columns(["margin", "bound", "holds"]));
    let mut rows = Vec::new();
    let mut all_hold = true;
    for size in &sizes {
        let table = dynamic_incentive_gap(&d, &policy, *size, &dcfg)?;
        for r in &table.rows {
            all_hold &= r.holds;
            let mut row = vec![size.to_string(), r.t.to_string()];
            row.extend(nums(&r.rho));
            row.extend(r.outcome.allocations.iter().flat_map(|b| nums(b)));
            row.extend(nums(&r.outcome.prices));
            row.extend(nums(&r.outcome.payments));
            row.extend(nums(&r.per_type_gap));
            row.extend([num(r.margin), num(r.bound), r.holds.to_string()]);
            rows.push(row);
        }
    }
    run.table("slots.csv", &header, &rows)?;
    ctx.close(
        run,
        json!({
            "mode": format!("{mode:?}"),
            "welfare": policy.welfare,
            "plan_length": d.plan_length(),
            "horizon": d.horizon,
            "all_hold": all_hold,
        }),
    )
}

pub fn generate(common: &Common) -> Result<(), Failure> {
    let mut ctx = Context::new(common, "generate")?;
    let mut shape = ScenarioShape::new(
        ctx.overrides.get("generate.num_theta")?.unwrap_or(2),
        ctx.overrides.get("generate.num_zeta")?.unwrap_or(1),
        ctx.overrides.get("generate.num_resources")?.unwrap_or(1),
    );
    if let Some(raw) = ctx.overrides.get::<String>("generate.num_agents")? {
        shape = shape.agents(parse_count(&raw)?);
    }
    if let Some(b) = ctx.overrides.get("generate.quadratic_max")? {
        shape = shape.quadratic_max(b);
    }
    if let Some(b) = common.beta {
        shape = shape.beta(b);
    }
    if shape.num_theta == 0 || shape.num_zeta == 0 || shape.num_resources == 0 {
        return Err(Failure::Usage("generated dimensions must be positive".into()));
    }
    if let AgentCount::Finite(i) = shape.num_agents {
        if (i as usize) < shape.num_theta * shape.num_zeta {
            return Err(Failure::Usage("generate.num_agents must cover every type".into()));
        }
    }
    let mut run = ctx.open(None)?;
    let s = random_scenario(&mut ChaCha8Rng::seed_from_u64(common.seed), &shape);
    run.raw("scenario.json", &save_scenario(&s))?;
    ctx.close(run, json!({"num_types": s.num_types(), "num_resources": s.num_resources()}))
}
