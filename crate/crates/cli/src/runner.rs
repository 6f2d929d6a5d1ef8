//! Turns a validated config into result rows.

use std::cmp::Ordering;
use std::path::PathBuf;
use std::time::Instant;

use freeutil::envs::{make_bernoulli_bandit, make_finite_mdp, run_interaction, Environment};
use freeutil::finite_prob::{Alphabet, CausalModel, IoType, VariableSpec, VpMode};
use freeutil::gvp::{GvpProblem, UtilityTable};
use freeutil::numeric::{sample_categorical, validate_distribution};
use freeutil::solvers::{solve_optimal_control, BcrAgent, ControlProblem, EstimationProblem, SamplingMode};
use freeutil::verify::{self, Mutation, Suite, SuiteReport, VerifyOptions};
use freeutil::Temperature;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{
    BcrSection, ControlSection, EnvironmentKind, EstimateSection, ExperimentConfig, IoSpec, Kind, LogBase, ModeSpec,
    Sampling, VariableSection,
};
use crate::error::CliError;

pub const DEFAULT_CONTROL_HORIZON: usize = 1;
pub const DEFAULT_ESTIMATE_HORIZON: usize = 100;
pub const DEFAULT_BCR_HORIZON: usize = 1000;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub alpha: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub horizon: Option<usize>,
    pub out: Option<PathBuf>,
    pub log_base: Option<LogBase>,
    pub jobs: usize,
    pub timing: bool,
    pub mutation: Option<Mutation>,
    pub suites: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment_id: String,
    pub kind: Kind,
    /// Absent for experiments that do not depend on the temperature.
    pub alpha: Option<f64>,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub suites: Vec<SuiteReport>,
}

impl RunOutput {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }
}

/// Deterministic row order: alpha, seed, metric, then experiment id.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        let alpha = match (a.alpha, b.alpha) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(x), Some(y)) => x.total_cmp(&y),
        };
        alpha
            .then(a.seed.cmp(&b.seed))
            .then_with(|| a.metric.cmp(&b.metric))
            .then_with(|| a.experiment_id.cmp(&b.experiment_id))
    });
}

enum Plan {
    Control(ControlProblem),
    Estimate(EstimationProblem),
    Bcr(BcrPlan),
    Gvp(CausalModel, UtilityTable),
    Verify(Vec<Suite>),
}

struct BcrPlan {
    env: Box<dyn Environment>,
    bandit_means: Option<Vec<Vec<f64>>>,
    section: BcrSection,
    horizon: usize,
}

type Metrics = Vec<(&'static str, f64)>;

pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let kind = config
        .kind
        .ok_or_else(|| CliError::Config("`kind` is required (control, estimate, bcr, gvp or verify)".into()))?;
    let alphas = match &opts.alpha {
        Some(a) => a.clone(),
        None => config.alpha.as_ref().map_or(Ok(vec![1.0]), |a| a.values())?,
    };
    if alphas.is_empty() {
        return Err(CliError::Config("alpha sweep list is empty".into()));
    }
    let seeds = match &opts.seeds {
        Some(s) => s.clone(),
        None => {
            let default_seed = if kind == Kind::Verify { VerifyOptions::default().seed } else { 0 };
            config.seeds.as_ref().map_or(Ok(vec![default_seed]), |s| s.values())?
        }
    };
    let horizon = opts.horizon.or(config.horizon);
    let log_base = opts.log_base.or(config.log_base).unwrap_or_default();
    let plan = build_plan(kind, config, horizon, opts)?;

    let alpha_axis: Vec<Option<f64>> = match &plan {
        Plan::Control(_) | Plan::Gvp(..) => alphas.iter().copied().map(Some).collect(),
        Plan::Bcr(b) if b.section.soft_controllers => alphas.iter().copied().map(Some).collect(),
        _ => vec![None],
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} worker threads: {e}", opts.jobs)))?;

    if let Plan::Verify(suites) = &plan {
        let cells: Vec<(u64, Suite)> = seeds.iter().flat_map(|&seed| suites.iter().map(move |&s| (seed, s))).collect();
        let results = pool.install(|| {
            cells
                .par_iter()
                .map(|&(seed, suite)| {
                    let options = VerifyOptions {
                        seed,
                        mutation: opts.mutation,
                    };
                    verify::run_suite(suite, &options).map(|r| (seed, r))
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        let mut rows: Vec<ResultRow> = results
            .iter()
            .map(|(seed, r)| ResultRow {
                experiment_id: format!("{}/{}", config.id, r.suite.name()),
                kind,
                alpha: None,
                seed: *seed,
                metric: "max_violation".into(),
                value: r.max_violation,
                wall_ms: r.runtime.as_secs_f64() * 1e3,
            })
            .collect();
        let reports = results.into_iter().map(|(_, r)| r).collect();
        sort_rows(&mut rows);
        return Ok(RunOutput { rows, suites: reports });
    }

    let cells: Vec<(Option<f64>, u64)> = alpha_axis
        .iter()
        .flat_map(|&a| seeds.iter().map(move |&s| (a, s)))
        .collect();
    let results = pool.install(|| {
        cells
            .par_iter()
            .map(|&(alpha, seed)| {
                let start = Instant::now();
                let metrics = run_cell(&plan, alpha, seed, log_base)?;
                Ok((alpha, seed, metrics, start.elapsed().as_secs_f64() * 1e3))
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let mut rows = Vec::new();
    for (alpha, seed, metrics, wall_ms) in results {
        for (metric, value) in metrics {
            if value.is_nan() {
                return Err(CliError::Output(format!("metric `{metric}` is NaN (alpha {alpha:?}, seed {seed})")));
            }
            rows.push(ResultRow {
                experiment_id: config.id.clone(),
                kind,
                alpha,
                seed,
                metric: metric.into(),
                value,
                wall_ms,
            });
        }
    }
    sort_rows(&mut rows);
    Ok(RunOutput { rows, suites: Vec::new() })
}

fn section<'a, T>(s: &'a Option<T>, name: &str, kind: Kind) -> Result<&'a T, CliError> {
    s.as_ref()
        .ok_or_else(|| CliError::Config(format!("a `{kind}` experiment needs a [{name}] section")))
}

fn build_plan(kind: Kind, config: &ExperimentConfig, horizon: Option<usize>, opts: &RunOptions) -> Result<Plan, CliError> {
    match kind {
        Kind::Control => {
            let c = section(&config.control, "control", kind)?;
            Ok(Plan::Control(control_problem(c, horizon.unwrap_or(DEFAULT_CONTROL_HORIZON))?))
        }
        Kind::Estimate => {
            let e = section(&config.estimate, "estimate", kind)?;
            Ok(Plan::Estimate(estimation_problem(e, horizon.unwrap_or(DEFAULT_ESTIMATE_HORIZON))?))
        }
        Kind::Bcr => {
            let b = section(&config.bcr, "bcr", kind)?;
            bcr_plan(b, horizon.unwrap_or(DEFAULT_BCR_HORIZON)).map(Plan::Bcr)
        }
        Kind::Gvp => {
            let (model, utility) = gvp_model(config)?;
            Ok(Plan::Gvp(model, utility))
        }
        Kind::Verify => {
            let mut names: Vec<String> = opts.suites.clone();
            if names.is_empty() {
                if let Some(list) = config.verify.as_ref().and_then(|v| v.suites.clone()) {
                    names = list;
                }
            }
            let suites = if names.is_empty() {
                Suite::ALL.to_vec()
            } else {
                names
                    .iter()
                    .map(|n| {
                        Suite::from_name(n).ok_or_else(|| {
                            let valid: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                            CliError::Config(format!("unknown suite `{n}`; valid suites: {}", valid.join(", ")))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?
            };
            Ok(Plan::Verify(suites))
        }
    }
}

fn check_rows(name: &str, rows: &[Vec<f64>], width: usize) -> Result<Vec<Vec<f64>>, CliError> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != width {
                return Err(CliError::Config(format!(
                    "`{name}` row {i} has {} entries, expected {width}",
                    row.len()
                )));
            }
            Ok(validate_distribution(row, &format!("`{name}` row {i}"))?)
        })
        .collect()
}

fn check_count<T>(name: &str, rows: &[T], expected: usize) -> Result<(), CliError> {
    if rows.len() != expected {
        return Err(CliError::Config(format!(
            "`{name}` has {} rows, expected {expected}",
            rows.len()
        )));
    }
    Ok(())
}

fn control_problem(c: &ControlSection, horizon: usize) -> Result<ControlProblem, CliError> {
    let n_a = c.actions.len();
    let n_o = c.observations.len();
    if n_a == 0 || n_o == 0 {
        return Err(CliError::Config("control actions and observations must be non-empty".into()));
    }
    let reference = match &c.reference {
        Some(r) => check_rows("control.reference", std::slice::from_ref(r), n_a)?.remove(0),
        None => vec![1.0 / n_a as f64; n_a],
    };
    check_count("control.environment", &c.environment, n_a)?;
    let environment = check_rows("control.environment", &c.environment, n_o)?;
    let action_reward = c.action_reward.clone().unwrap_or_else(|| vec![0.0; n_a]);
    if action_reward.len() != n_a {
        return Err(CliError::Config(format!("`control.action_reward` needs {n_a} entries")));
    }
    let observation_reward = c.observation_reward.clone().unwrap_or_else(|| vec![vec![0.0; n_o]; n_a]);
    check_count("control.observation_reward", &observation_reward, n_a)?;
    if let Some(i) = observation_reward.iter().position(|r| r.len() != n_o) {
        return Err(CliError::Config(format!("`control.observation_reward` row {i} needs {n_o} entries")));
    }
    Ok(ControlProblem::stationary(horizon, reference, environment, action_reward, observation_reward)?)
}

fn estimation_problem(e: &EstimateSection, horizon: usize) -> Result<EstimationProblem, CliError> {
    let prior = check_rows("estimate.prior", std::slice::from_ref(&e.prior), e.prior.len())?.remove(0);
    check_count("estimate.sources", &e.sources, prior.len())?;
    let width = e.sources.first().map_or(0, Vec::len);
    let sources = check_rows("estimate.sources", &e.sources, width)?;
    Ok(EstimationProblem::iid(prior, sources, horizon)?)
}

fn bcr_plan(b: &BcrSection, horizon: usize) -> Result<BcrPlan, CliError> {
    let prior = check_rows("bcr.prior", std::slice::from_ref(&b.prior), b.prior.len())?.remove(0);
    let true_prior = match &b.true_prior {
        Some(t) => check_rows("bcr.true_prior", std::slice::from_ref(t), prior.len())?.remove(0),
        None => prior.clone(),
    };
    let missing = |key: &str| CliError::Config(format!("a {:?} environment needs `bcr.{key}`", b.environment));
    let (env, bandit_means): (Box<dyn Environment>, _) = match b.environment {
        EnvironmentKind::Bandit => {
            let means = b.means.clone().ok_or_else(|| missing("means"))?;
            check_count("bcr.means", &means, prior.len())?;
            (Box::new(make_bernoulli_bandit(means.clone(), true_prior)?), Some(means))
        }
        EnvironmentKind::Mdp => {
            if b.soft_controllers {
                return Err(CliError::Config("`bcr.soft_controllers` is only available for bandits".into()));
            }
            let transitions = b.transitions.clone().ok_or_else(|| missing("transitions"))?;
            check_count("bcr.transitions", &transitions, prior.len())?;
            let mut mdp = make_finite_mdp(
                transitions,
                b.reward_symbols.clone().ok_or_else(|| missing("reward_symbols"))?,
                b.reward_values.clone().ok_or_else(|| missing("reward_values"))?,
                b.initial_state,
                true_prior,
            )?;
            if let Some(d) = b.discount {
                mdp = mdp.with_discount(d)?;
            }
            (Box::new(mdp), None)
        }
    };
    Ok(BcrPlan {
        env,
        bandit_means,
        section: b.clone(),
        horizon,
    })
}

fn variable_spec(v: &VariableSection) -> Result<VariableSpec, CliError> {
    let alphabet = Alphabet::new(v.symbols.labels())?;
    let io = match v.io {
        IoSpec::Output => IoType::Output,
        IoSpec::Disclosed => IoType::DisclosedInput,
        IoSpec::Undisclosed => IoType::UndisclosedInput,
    };
    let mode = match v.mode {
        Some(ModeSpec::Controlled) => VpMode::Controlled,
        Some(ModeSpec::Estimated) => VpMode::Estimated,
        None if io == IoType::Output => VpMode::Controlled,
        None => VpMode::Estimated,
    };
    Ok(VariableSpec::new(v.name.clone(), alphabet, io, mode))
}

fn expand_rows(name: &str, what: &str, rows: Vec<Vec<f64>>, count: usize) -> Result<Vec<Vec<f64>>, CliError> {
    if rows.len() == 1 && count > 1 {
        return Ok(vec![rows[0].clone(); count]);
    }
    if rows.len() != count {
        return Err(CliError::Config(format!(
            "variable `{name}`: {what} has {} rows, expected {count} (one per history of the preceding variables) or 1",
            rows.len()
        )));
    }
    Ok(rows)
}

fn gvp_model(config: &ExperimentConfig) -> Result<(CausalModel, UtilityTable), CliError> {
    if config.variables.is_empty() {
        return Err(CliError::Config("a `gvp` experiment needs at least one [[variable]]".into()));
    }
    let vars = config.variables.iter().map(variable_spec).collect::<Result<Vec<_>, _>>()?;
    for (i, v) in vars.iter().enumerate() {
        if vars[..i].iter().any(|w| w.name == v.name) {
            return Err(CliError::Config(format!("variable name `{}` is used twice", v.name)));
        }
    }
    let mut count = 1usize;
    let mut tables = Vec::with_capacity(vars.len());
    let mut utilities = Vec::with_capacity(vars.len());
    for (section, spec) in config.variables.iter().zip(&vars) {
        let rows = match (&section.table, &section.table_file) {
            (Some(t), None) => t.clone(),
            (None, Some(f)) => crate::config::read_table_file(&config.base_dir.join(f))?,
            (Some(_), Some(_)) => {
                return Err(CliError::Config(format!(
                    "variable `{}`: give either `table` or `table_file`, not both",
                    spec.name
                )))
            }
            (None, None) => {
                return Err(CliError::Config(format!("variable `{}` has no `table`", spec.name)));
            }
        };
        tables.push(expand_rows(&spec.name, "table", rows, count)?);
        let utility = match &section.utility {
            Some(u) => expand_rows(&spec.name, "utility", u.clone(), count)?,
            None => vec![vec![0.0; spec.size()]; count],
        };
        utilities.push(utility);
        count = count
            .checked_mul(spec.size())
            .ok_or_else(|| CliError::Config("model too large".into()))?;
    }
    let model = CausalModel::from_rows(vars.clone(), tables)?;
    let utility = UtilityTable::from_rows(&vars, utilities)?;
    Ok((model, utility))
}

/// Expected utility, divergence cost (in the chosen base) and objective of a candidate.
fn objective_metrics(problem: &GvpProblem, candidate: &CausalModel, log_base: LogBase) -> Result<Metrics, CliError> {
    let terms = problem.objective_terms(candidate)?;
    let eu: f64 = terms.iter().map(|t| t.expected_utility).sum();
    let kl_bits: f64 = terms.iter().map(|t| t.divergence_bits).sum();
    Ok(vec![
        ("expected_utility", eu),
        ("kl_cost", kl_bits * log_base.from_bits()),
        ("objective", eu - problem.alpha().value() * kl_bits),
    ])
}

fn run_cell(plan: &Plan, alpha: Option<f64>, seed: u64, log_base: LogBase) -> Result<Metrics, CliError> {
    let temperature = || -> Result<Temperature, CliError> {
        Ok(Temperature::new(alpha.expect("alpha axis present"))?)
    };
    match plan {
        Plan::Control(problem) => {
            let t = temperature()?;
            let policy = solve_optimal_control(problem, t)?;
            let gvp = problem.to_gvp(t)?;
            objective_metrics(&gvp, &problem.policy_model(&policy)?, log_base)
        }
        Plan::Gvp(model, utility) => {
            let gvp = GvpProblem::new(model.clone(), utility.clone(), temperature()?)?;
            let solution = gvp.solve()?;
            objective_metrics(&gvp, &solution.candidate, log_base)
        }
        Plan::Estimate(problem) => estimate_cell(problem, seed, log_base),
        Plan::Bcr(b) => bcr_cell(b, alpha, seed),
        Plan::Verify(_) => unreachable!("verify runs per suite"),
    }
}

fn estimate_cell(problem: &EstimationProblem, seed: u64, log_base: LogBase) -> Result<Metrics, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = sample_categorical(problem.prior(), &mut rng)?;
    let mut posterior = problem.prior().to_vec();
    let mut history = Vec::with_capacity(problem.horizon());
    let mut loss_bits = 0.0;
    let mut truth_bits = 0.0;
    for _ in 0..problem.horizon() {
        let source = problem.likelihood(theta, &history).to_vec();
        let o = sample_categorical(&source, &mut rng)?;
        let predictive = problem.mixture(&posterior, &history);
        loss_bits -= predictive[o].log2();
        truth_bits -= source[o].log2();
        for (k, w) in posterior.iter_mut().enumerate() {
            *w *= problem.likelihood(k, &history)[o];
        }
        let z: f64 = posterior.iter().sum();
        posterior.iter_mut().for_each(|w| *w /= z);
        history.push(o);
    }
    let scale = log_base.from_bits();
    Ok(vec![
        ("excess_log_loss", (loss_bits - truth_bits) * scale),
        ("log_loss", loss_bits * scale),
        ("posterior_truth_mass", posterior[theta]),
    ])
}

fn bcr_cell(plan: &BcrPlan, alpha: Option<f64>, seed: u64) -> Result<Metrics, CliError> {
    let b = &plan.section;
    let hypotheses = match (alpha, &plan.bandit_means) {
        (Some(a), Some(means)) => {
            make_bernoulli_bandit(means.clone(), b.prior.clone())?.soft_hypotheses(Temperature::new(a)?)?
        }
        _ => plan.env.hypotheses(),
    };
    let mut agent = BcrAgent::new(b.prior.clone(), hypotheses, plan.env.n_actions(), plan.env.n_observations())?
        .with_sampling_mode(match b.sampling {
            Sampling::Mixture => SamplingMode::Mixture,
            Sampling::Posterior => SamplingMode::PosteriorSample,
        });
    if let Some(eps) = b.likelihood_floor {
        agent = agent.with_likelihood_floor(eps)?;
    }
    let record = run_interaction(agent, plan.env.as_ref(), plan.horizon, seed)?;
    let truth = if plan.horizon == 0 {
        b.prior[record.theta]
    } else {
        record.truth_mass(plan.horizon).unwrap_or(f64::NAN)
    };
    Ok(vec![("cum_regret", record.cumulative_regret), ("posterior_truth_mass", truth)])
}
