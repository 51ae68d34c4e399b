use regime_frontier::bsde::{self, BackwardSolution, BsdeError, DeltaValue, G_UPPER_SLACK};
use regime_frontier::chain::ChainError;
use regime_frontier::config::{BuiltConfig, ConfigError, ModelConfig};
use regime_frontier::frontier::{self, EfficientFrontier, FrontierError, FrontierInputs, FrontierPoint};
use regime_frontier::montecarlo::{
    self, dual_cost_check, AllBond, SimConfig, SimError, SimResult, Strategy, MIN_PATHS_FOR_VARIANCE,
};
use regime_frontier::{Error, Model};
use serde::Serialize;
use serde_json::json;

use crate::output::{fmt_num, Csv, Outputs};
use crate::zgrid;
use crate::{Common, FrontierArgs, LawKind, SimulateArgs, ValidateArgs};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_BELOW_MINIMUM: u8 = 4;
pub const EXIT_VALIDATION_FAILED: u8 = 5;
const EXIT_IO: u8 = 1;
const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Usage(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

macro_rules! from_lib {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Lib(e.into())
            }
        }
    )*};
}

from_lib!(Error, ConfigError, BsdeError, FrontierError, SimError, ChainError);

impl CliError {
    pub fn code(&self) -> String {
        match self {
            CliError::Lib(e) => e.code(),
            CliError::Usage(_) => "InvalidArgument".into(),
            CliError::Io(_) => "Io".into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(
                Error::Config(_) | Error::Chain(_) | Error::Market(_) | Error::Horizon(_) | Error::Model(_),
            ) => EXIT_CONFIG,
            CliError::Lib(Error::Frontier(FrontierError::ZBelowMinimum { .. })) => EXIT_BELOW_MINIMUM,
            CliError::Lib(Error::Sim(SimError::Frontier(FrontierError::ZBelowMinimum { .. }))) => {
                EXIT_BELOW_MINIMUM
            }
            CliError::Lib(_) => EXIT_SOLVER,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

fn load(common: &Common) -> Result<(ModelConfig, BuiltConfig), CliError> {
    let config = ModelConfig::from_path(&common.config)?;
    let mut built = config.build()?;
    if let Some(step) = common.step {
        if !(step > 0.0 && step <= built.model.terminal_time()) {
            return Err(CliError::Usage(format!("--step must lie in (0, T], got {step}")));
        }
        built.step = step;
    }
    Ok((config, built))
}

fn commit(out: Outputs) -> Result<(), CliError> {
    out.commit().map_err(|e| CliError::Io(format!("cannot write outputs: {e}")))?;
    Ok(())
}

/// Solver-level quantities that exist even when the frontier does not.
struct Analysis {
    solution: BackwardSolution,
    delta: DeltaValue,
    gamma: f64,
    z_zero: f64,
    inputs: Result<FrontierInputs, FrontierError>,
}

fn analyze(model: &Model, step: f64, x0: f64, i0: usize) -> Result<Analysis, CliError> {
    let solution = bsde::solve(model, step)?;
    let occupation = model.generator().occupation_probabilities(i0, solution.grid.times())?;
    let delta = bsde::compute_delta(
        &solution.grid,
        &solution.p,
        &solution.g,
        model.horizon(),
        &occupation,
        model.generator(),
    )?;
    let gamma = frontier::feasibility_gamma(&solution.grid, &solution.psi, model.market(), &occupation)?;
    let z_zero = frontier::z_zero(&solution.psi, x0, i0);
    let inputs =
        FrontierInputs::new(solution.p.initial(i0), solution.g.initial(i0), delta.delta, x0, i0);
    Ok(Analysis { solution, delta, gamma, z_zero, inputs })
}

pub fn solve(args: &Common) -> Result<u8, CliError> {
    let (_, built) = load(args)?;
    let a = analyze(&built.model, built.step, built.x0, built.i0)?;
    let s = &a.solution;
    let mut csv = Csv::new(&["t", "regime", "psi", "p", "g"]);
    for (k, &t) in s.grid.times().iter().enumerate() {
        for i in 0..built.model.n_regimes() {
            csv.row(&[
                fmt_num(t),
                (i + 1).to_string(),
                fmt_num(s.psi.at(i, k)),
                fmt_num(s.p.at(i, k)),
                fmt_num(s.g.at(i, k)),
            ]);
        }
    }
    let p0 = s.p.initial(built.i0);
    let g0 = s.g.initial(built.i0);
    let condition_value = 0.5 * p0 * g0 * g0 + a.delta.delta - 1.0;
    let vertex = a.inputs.as_ref().ok().and_then(|i| frontier::min_variance(i).ok());
    let feasible = a.gamma > 0.0;
    if !feasible {
        log::warn!("gamma = 0: no target other than z_zero = {} is attainable", a.z_zero);
    }
    let summary = json!({
        "delta": a.delta.delta,
        "f_part": a.delta.f_part,
        "jump_part": a.delta.jump_part,
        "gamma": a.gamma,
        "feasible": feasible,
        "z_zero": a.z_zero,
        "p0": p0,
        "g0": g0,
        "condition_61": condition_value < 0.0,
        "condition_value": condition_value,
        "z_min": vertex.map(|v| v.z),
        "var_min": vertex.map(|v| v.variance),
        "x0": built.x0,
        "initial_regime": built.i0 + 1,
        "step": s.grid.step(),
        "lower_bound_b": s.lower_bound_b,
        "upper_bound_b": s.upper_bound_b,
    });
    let mut out = Outputs::new(&args.out);
    out.add("solutions.csv", csv.into_string());
    out.add_json("summary.json", &summary);
    commit(out)?;
    Ok(0)
}

fn frontier_csv(points: &[FrontierPoint]) -> String {
    let mut csv = Csv::new(&["z", "lambda_star", "variance", "std_dev"]);
    for p in points {
        csv.row(&[fmt_num(p.z), fmt_num(p.lambda_star), fmt_num(p.variance), fmt_num(p.std_dev)]);
    }
    csv.into_string()
}

#[derive(Serialize)]
struct FrontierSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<String>,
    p0: f64,
    g0: f64,
    delta: f64,
    f_part: f64,
    jump_part: f64,
    z_min: f64,
    var_min: f64,
    gamma: f64,
    z_zero: f64,
}

impl FrontierSummary {
    fn new(ef: &EfficientFrontier, density: Option<f64>, file: Option<String>) -> Self {
        let i = ef.inputs();
        let min = ef.min_variance();
        Self {
            density,
            file,
            p0: i.p0,
            g0: i.g0,
            delta: i.delta,
            f_part: ef.delta().f_part,
            jump_part: ef.delta().jump_part,
            z_min: min.z,
            var_min: min.variance,
            gamma: ef.gamma(),
            z_zero: ef.z_zero(),
        }
    }
}

/// 21 targets from `z_lo` up by half the initial wealth.
fn default_targets(z_lo: f64, x0: f64) -> Vec<f64> {
    let span = if x0 != 0.0 { 0.5 * x0.abs() } else { 0.5 };
    (0..=20).map(|k| z_lo + span * k as f64 / 20.0).collect()
}

fn parse_z(spec: &Option<String>) -> Result<Option<Vec<f64>>, CliError> {
    spec.as_deref().map(zgrid::parse_targets).transpose().map_err(CliError::Usage)
}

pub fn frontier(args: &FrontierArgs) -> Result<u8, CliError> {
    let (config, built) = load(&args.common)?;
    let explicit = parse_z(&args.z)?.or_else(|| (!built.z_targets.is_empty()).then(|| built.z_targets.clone()));
    let mut out = Outputs::new(&args.common.out);
    match &args.density_overlay {
        None => {
            let ef = EfficientFrontier::build(&built.model, built.step, built.x0, built.i0)?;
            let targets = explicit.unwrap_or_else(|| default_targets(ef.min_variance().z, built.x0));
            let points = ef.curve(&targets)?;
            out.add("frontier.csv", frontier_csv(&points));
            out.add_json("frontier_summary.json", &FrontierSummary::new(&ef, None, None));
        }
        Some(spec) => {
            let densities = zgrid::list(spec).map_err(CliError::Usage)?;
            let mut frontiers = Vec::with_capacity(densities.len());
            for &f in &densities {
                let b = config.with_constant_density(f).build()?;
                frontiers.push(EfficientFrontier::build(&b.model, built.step, b.x0, b.i0)?);
            }
            let targets = explicit.unwrap_or_else(|| {
                let z_lo = frontiers.iter().map(|ef| ef.min_variance().z).fold(f64::NEG_INFINITY, f64::max);
                default_targets(z_lo, built.x0)
            });
            let mut summaries = Vec::with_capacity(densities.len());
            for (&f, ef) in densities.iter().zip(&frontiers) {
                let name = format!("frontier_f{}.csv", fmt_num(f));
                out.add(name.clone(), frontier_csv(&ef.curve(&targets)?));
                summaries.push(FrontierSummary::new(ef, Some(f), Some(name)));
            }
            out.add_json("frontier_summary.json", &json!({ "overlay": summaries }));
        }
    }
    commit(out)?;
    Ok(0)
}

fn sim_config(base: SimConfig, paths: Option<usize>, seed: Option<u64>) -> SimConfig {
    SimConfig {
        n_paths: paths.unwrap_or(base.n_paths),
        base_seed: seed.unwrap_or(base.base_seed),
        ..base
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<u8, CliError> {
    let (_, built) = load(&args.common)?;
    let mut cfg = sim_config(built.sim, args.paths, args.seed);
    cfg.record_paths = args.per_path;
    let model = &built.model;
    let target = || {
        args.z
            .or_else(|| built.z_targets.first().copied())
            .ok_or_else(|| CliError::Usage("no target: pass --z or set z_targets in the config".into()))
    };
    let (result, analytic): (SimResult, Option<FrontierPoint>) = match args.law {
        LawKind::AllBond => {
            let s = bsde::solve(model, built.step)?;
            let z0 = frontier::z_zero(&s.psi, built.x0, built.i0);
            let law = AllBond { n_assets: model.market().n_assets(), target: z0 };
            (montecarlo::simulate(model, &law, built.x0, built.i0, &cfg)?, None)
        }
        kind => {
            let ef = EfficientFrontier::build(model, built.step, built.x0, built.i0)?;
            match kind {
                LawKind::Optimal => {
                    let z = target()?;
                    let point = ef.curve(&[z])?[0];
                    (run(model, &ef.law(z)?, &built, &cfg)?, Some(point))
                }
                LawKind::MinVariance => (run(model, &ef.min_variance_law(), &built, &cfg)?, Some(ef.min_variance())),
                _ => (run(model, &ef.feasible_portfolio(target()?)?, &built, &cfg)?, None),
            }
        }
    };
    let mut report = json!({
        "law": format!("{:?}", args.law),
        "target": result.target,
        "config": SimConfig { record_paths: false, ..cfg },
        "result": SimResult { paths: None, ..result.clone() },
        "dual_cost": dual_cost_check(&result),
        "mean_z_score": result.mean_z_score(result.target),
    });
    if let Some(p) = analytic {
        report["analytic_variance"] = json!(p.variance);
        report["lambda_star"] = json!(p.lambda_star);
        report["variance_z_score"] = json!(result.var_z_score(p.variance));
    }
    let mut out = Outputs::new(&args.common.out);
    out.add_json("simulation.json", &report);
    if let Some(paths) = &result.paths {
        let mut csv = Csv::new(&["path_id", "tau", "x_at_exit"]);
        for p in paths {
            csv.row(&[p.path_id.to_string(), fmt_num(p.tau), fmt_num(p.x_at_exit)]);
        }
        out.add("paths.csv", csv.into_string());
    }
    commit(out)?;
    Ok(0)
}

fn run<S: Strategy>(model: &Model, law: &S, built: &BuiltConfig, cfg: &SimConfig) -> Result<SimResult, CliError> {
    Ok(montecarlo::simulate(model, law, built.x0, built.i0, cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Serialize)]
struct Criterion {
    name: String,
    status: Status,
    value: f64,
    detail: String,
}

fn check(name: impl Into<String>, ok: bool, value: f64, detail: impl Into<String>) -> Criterion {
    Criterion {
        name: name.into(),
        status: if ok { Status::Pass } else { Status::Fail },
        value,
        detail: detail.into(),
    }
}

fn solver_criteria(model: &Model, a: &Analysis) -> Vec<Criterion> {
    let s = &a.solution;
    let last = s.grid.n_steps();
    let regimes = 0..model.n_regimes();
    let strict = model.market().min_rate() > 0.0;
    let g_ok = regimes.clone().all(|i| {
        (0..=last).all(|k| {
            let g = s.g.at(i, k);
            g > 0.0 && g <= 1.0 + G_UPPER_SLACK && (!strict || k == last || g < 1.0)
        })
    });
    let g_max_before_t = regimes.clone().flat_map(|i| (0..last).map(move |k| s.g.at(i, k))).fold(f64::NEG_INFINITY, f64::max);
    let cond = match &a.inputs {
        Ok(i) => i.condition_value(),
        Err(FrontierError::DenominatorNonNegative { value }) => *value,
        Err(_) => f64::NAN,
    };
    vec![
        check("p_positive", s.p.min() > 0.0, s.p.min(), "min P over the grid"),
        check("psi_positive", s.psi.min() > 0.0, s.psi.min(), "min Psi over the grid"),
        check(
            "g_bounds",
            g_ok && s.g.min() > 0.0,
            g_max_before_t,
            if strict { "0 < G <= 1, and G < 1 before T" } else { "0 < G <= 1" },
        ),
        check(
            "delta_nonnegative",
            a.delta.f_part >= 0.0 && a.delta.jump_part >= 0.0,
            a.delta.delta,
            "f_part >= 0 and jump_part >= 0",
        ),
        check("condition_61", cond < 0.0, cond, "0.5 p0 g0^2 + delta - 1 < 0"),
        check("feasibility", a.gamma > 0.0, a.gamma, "gamma > 0"),
    ]
}

pub fn validate(args: &ValidateArgs) -> Result<u8, CliError> {
    let (_, built) = load(&args.common)?;
    let cfg = sim_config(built.sim, args.paths, args.seed);
    let model = &built.model;
    let a = analyze(model, built.step, built.x0, built.i0)?;
    let mut criteria = solver_criteria(model, &a);
    let solver_ok = criteria.iter().all(|c| c.status == Status::Pass);
    let conclusive = cfg.n_paths >= MIN_PATHS_FOR_VARIANCE;
    let mc_status = |ok: bool| match (conclusive, ok) {
        (false, _) => Status::Inconclusive,
        (true, true) => Status::Pass,
        (true, false) => Status::Fail,
    };
    if solver_ok {
        let ef = EfficientFrontier::build(model, built.step, built.x0, built.i0)?;
        let min = ef.min_variance();
        let mut targets = parse_z(&args.z)?.unwrap_or_else(|| built.z_targets.clone());
        if !targets.iter().any(|&z| z == min.z) {
            targets.insert(0, min.z);
        }
        let points = ef.curve(&targets)?;
        for point in points {
            let z = point.z;
            let law = if point.lambda_star == 0.0 { ef.min_variance_law() } else { ef.law(z)? };
            let r = run(model, &law, &built, &cfg)?;
            let zm = r.mean_z_score(z);
            let zv = r.var_z_score(point.variance);
            let dual = dual_cost_check(&r);
            let label = fmt_num(z);
            criteria.push(Criterion {
                name: format!("mean[z={label}]"),
                status: mc_status(zm.abs() <= 3.0),
                value: zm,
                detail: format!("simulated {} +- {} vs target", fmt_num(r.mean_terminal), fmt_num(r.se_mean)),
            });
            criteria.push(Criterion {
                name: format!("variance[z={label}]"),
                status: mc_status(zv.abs() <= 3.0),
                value: zv,
                detail: format!(
                    "simulated {} +- {} vs analytic {}",
                    fmt_num(r.var_terminal),
                    fmt_num(r.se_var),
                    fmt_num(point.variance)
                ),
            });
            criteria.push(Criterion {
                name: format!("dual_cost[z={label}]"),
                status: mc_status(dual.pass),
                value: dual.z_score,
                detail: "sampled vs weighted cost estimators".into(),
            });
        }
    } else {
        criteria.push(check("monte_carlo", false, f64::NAN, "skipped: solver criteria failed"));
    }
    let any_fail = criteria.iter().any(|c| c.status == Status::Fail);
    let any_inconclusive = criteria.iter().any(|c| c.status == Status::Inconclusive);
    let overall = if any_fail {
        Status::Fail
    } else if any_inconclusive {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    if any_inconclusive {
        log::warn!(
            "Monte Carlo criteria are inconclusive with {} paths (need at least {MIN_PATHS_FOR_VARIANCE})",
            cfg.n_paths
        );
    }
    let report = json!({
        "status": overall,
        "n_paths": cfg.n_paths,
        "euler_step": cfg.euler_step,
        "base_seed": cfg.base_seed,
        "criteria": criteria,
    });
    let mut out = Outputs::new(&args.common.out);
    out.add_json("validation.json", &report);
    commit(out)?;
    Ok(if any_fail { EXIT_VALIDATION_FAILED } else { 0 })
}
