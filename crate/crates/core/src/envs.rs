//! Environments with a hidden parameter and the agent/environment loop.
//!
//! An environment is a family of observation models indexed by `theta`. The
//! loop draws `theta` from the environment prior once per trial and keeps it
//! to itself: agents only ever see their own actions and the observations.
//! Rewards are carried by observation symbols.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conjugate::{measure_from_utility, Temperature};
use crate::error::{Error, Result};
use crate::numeric::{argmax, sample_categorical, validate_distribution};
use crate::solvers::{BcrAgent, Hypothesis, Interaction};

/// Discount used to score actions in Markov decision problems.
pub const DEFAULT_DISCOUNT: f64 = 0.95;

pub trait Environment: Send + Sync {
    fn n_actions(&self) -> usize;

    fn n_observations(&self) -> usize;

    fn prior(&self) -> &[f64];

    /// `P(o | theta, history, action)`. Environments hold no state between calls.
    fn observation_distribution(&self, theta: usize, history: &[Interaction], action: usize) -> Vec<f64>;

    /// Reward carried by an observation symbol.
    fn reward(&self, observation: usize) -> f64;

    fn expected_reward(&self, theta: usize, history: &[Interaction], action: usize) -> f64 {
        self.observation_distribution(theta, history, action)
            .iter()
            .enumerate()
            .map(|(o, p)| p * self.reward(o))
            .sum()
    }

    /// Expected shortfall of `action` against the best action for `theta`. Never negative.
    fn regret(&self, theta: usize, history: &[Interaction], action: usize) -> f64 {
        let best = (0..self.n_actions())
            .map(|a| self.expected_reward(theta, history, a))
            .fold(f64::NEG_INFINITY, f64::max);
        (best - self.expected_reward(theta, history, action)).max(0.0)
    }

    /// Per-parameter controllers that act optimally for their parameter, paired with
    /// that parameter's observation model.
    fn hypotheses(&self) -> Vec<Arc<dyn Hypothesis>>;
}

/// Builds a Bayesian control rule agent whose prior and hypotheses are the environment's.
pub fn bcr_agent(env: &dyn Environment) -> Result<BcrAgent> {
    BcrAgent::new(env.prior().to_vec(), env.hypotheses(), env.n_actions(), env.n_observations())
}

pub trait Agent: Sized {
    fn n_actions(&self) -> usize;

    fn n_observations(&self) -> usize;

    fn act<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize>;

    fn observe(self, action: usize, observation: usize) -> Result<Self>;

    /// Current belief over the parameter, if the agent keeps one.
    fn belief(&self) -> Option<Vec<f64>> {
        None
    }
}

impl Agent for BcrAgent {
    fn n_actions(&self) -> usize {
        BcrAgent::n_actions(self)
    }

    fn n_observations(&self) -> usize {
        BcrAgent::n_observations(self)
    }

    fn act<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        BcrAgent::act(self, rng)
    }

    fn observe(self, action: usize, observation: usize) -> Result<Self> {
        BcrAgent::observe(self, action, observation)
    }

    fn belief(&self) -> Option<Vec<f64>> {
        Some(self.posterior().to_vec())
    }
}

/// Acts from a fixed action distribution and ignores what it sees.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryAgent {
    policy: Vec<f64>,
    n_observations: usize,
}

impl StationaryAgent {
    pub fn new(policy: Vec<f64>, n_observations: usize) -> Result<Self> {
        Ok(Self {
            policy: validate_distribution(&policy, "stationary policy")?,
            n_observations,
        })
    }
}

impl Agent for StationaryAgent {
    fn n_actions(&self) -> usize {
        self.policy.len()
    }

    fn n_observations(&self) -> usize {
        self.n_observations
    }

    fn act<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        sample_categorical(&self.policy, rng)
    }

    fn observe(self, _: usize, _: usize) -> Result<Self> {
        Ok(self)
    }
}

fn bernoulli(mean: f64) -> Vec<f64> {
    vec![1.0 - mean, mean]
}

/// Bernoulli arms; observation 1 is a unit reward.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliBandit {
    means: Vec<Vec<f64>>,
    prior: Vec<f64>,
}

/// `means[theta][arm]` is the success probability of `arm` under `theta`.
pub fn make_bernoulli_bandit(means: Vec<Vec<f64>>, prior: Vec<f64>) -> Result<BernoulliBandit> {
    let prior = validate_distribution(&prior, "bandit prior")?;
    if means.len() != prior.len() {
        return Err(Error::LengthMismatch {
            expected: prior.len(),
            got: means.len(),
        });
    }
    let arms = means.first().map_or(0, Vec::len);
    if arms == 0 || means.iter().any(|m| m.len() != arms) {
        return Err(Error::Validation("every parameter needs the same non-zero number of arms".into()));
    }
    for (theta, row) in means.iter().enumerate() {
        if let Some(m) = row.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(Error::InvalidProbability {
                context: format!("mean of parameter {theta}"),
                value: *m,
            });
        }
    }
    Ok(BernoulliBandit { means, prior })
}

impl BernoulliBandit {
    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    /// Hypotheses whose controllers are bounded-rational: `P(a | theta) ∝ 2^{mean/alpha}`
    /// against a uniform reference, instead of the greedy arm.
    pub fn soft_hypotheses(&self, alpha: Temperature) -> Result<Vec<Arc<dyn Hypothesis>>> {
        self.means
            .iter()
            .map(|m| {
                let (policy, _) = measure_from_utility(m, alpha)?;
                Ok(Arc::new(BanditHypothesis { means: m.clone(), policy }) as Arc<dyn Hypothesis>)
            })
            .collect()
    }
}

struct BanditHypothesis {
    means: Vec<f64>,
    policy: Vec<f64>,
}

impl Hypothesis for BanditHypothesis {
    fn action_distribution(&self, _: &[Interaction]) -> Vec<f64> {
        self.policy.clone()
    }

    fn observation_likelihood(&self, _: &[Interaction], action: usize, observation: usize) -> f64 {
        bernoulli(self.means[action])[observation]
    }
}

impl Environment for BernoulliBandit {
    fn n_actions(&self) -> usize {
        self.means[0].len()
    }

    fn n_observations(&self) -> usize {
        2
    }

    fn prior(&self) -> &[f64] {
        &self.prior
    }

    fn observation_distribution(&self, theta: usize, _: &[Interaction], action: usize) -> Vec<f64> {
        bernoulli(self.means[theta][action])
    }

    fn reward(&self, observation: usize) -> f64 {
        observation as f64
    }

    fn hypotheses(&self) -> Vec<Arc<dyn Hypothesis>> {
        self.means
            .iter()
            .map(|m| {
                Arc::new(BanditHypothesis {
                    means: m.clone(),
                    policy: crate::numeric::one_hot(m.len(), argmax(m)),
                }) as Arc<dyn Hypothesis>
            })
            .collect()
    }
}

/// Markov decision problem whose transition matrix depends on the parameter.
///
/// Observation `o = next_state * n_reward_symbols + reward_symbol`. The reward
/// symbol of a transition `(s, a, s')` is fixed across parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    /// `[theta][s][a][s']`.
    transitions: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[s][a][s']`.
    reward_symbols: Vec<Vec<Vec<usize>>>,
    reward_values: Vec<f64>,
    initial_state: usize,
    prior: Vec<f64>,
    discount: f64,
    /// `[theta][s][a]`, optimal discounted action values.
    q_values: Vec<Vec<Vec<f64>>>,
}

/// Validates the tables and computes per-parameter optimal action values with
/// discount [`DEFAULT_DISCOUNT`].
pub fn make_finite_mdp(
    transitions: Vec<Vec<Vec<Vec<f64>>>>,
    reward_symbols: Vec<Vec<Vec<usize>>>,
    reward_values: Vec<f64>,
    initial_state: usize,
    prior: Vec<f64>,
) -> Result<FiniteMdp> {
    let prior = validate_distribution(&prior, "MDP prior")?;
    if transitions.len() != prior.len() {
        return Err(Error::LengthMismatch {
            expected: prior.len(),
            got: transitions.len(),
        });
    }
    let n_states = transitions[0].len();
    let n_actions = transitions[0].first().map_or(0, Vec::len);
    if n_states == 0 || n_actions == 0 {
        return Err(Error::Validation("MDP needs at least one state and one action".into()));
    }
    if initial_state >= n_states {
        return Err(Error::InvalidSymbol {
            variable: "initial state".into(),
            index: initial_state,
            size: n_states,
        });
    }
    let mut checked = Vec::with_capacity(transitions.len());
    for (theta, per_s) in transitions.iter().enumerate() {
        if per_s.len() != n_states {
            return Err(Error::Validation(format!("parameter {theta}: expected {n_states} states")));
        }
        let mut rows_s = Vec::with_capacity(n_states);
        for (s, per_a) in per_s.iter().enumerate() {
            if per_a.len() != n_actions {
                return Err(Error::Validation(format!("parameter {theta} state {s}: expected {n_actions} actions")));
            }
            let mut rows_a = Vec::with_capacity(n_actions);
            for (a, row) in per_a.iter().enumerate() {
                let ctx = format!("transition row (parameter {theta}, state {s}, action {a})");
                if row.len() != n_states {
                    return Err(Error::Validation(format!("{ctx}: expected {n_states} entries")));
                }
                rows_a.push(validate_distribution(row, &ctx)?);
            }
            rows_s.push(rows_a);
        }
        checked.push(rows_s);
    }
    if reward_values.is_empty() || reward_values.iter().any(|r| !r.is_finite()) {
        return Err(Error::Validation("reward values must be finite and non-empty".into()));
    }
    let shape_ok = reward_symbols.len() == n_states
        && reward_symbols
            .iter()
            .all(|per_a| per_a.len() == n_actions && per_a.iter().all(|row| row.len() == n_states));
    if !shape_ok {
        return Err(Error::Validation(format!(
            "reward symbols must be indexed [state][action][next state] with {n_states} states and {n_actions} actions"
        )));
    }
    if let Some(&r) = reward_symbols.iter().flatten().flatten().find(|&&r| r >= reward_values.len()) {
        return Err(Error::InvalidSymbol {
            variable: "reward symbol".into(),
            index: r,
            size: reward_values.len(),
        });
    }
    let mut mdp = FiniteMdp {
        n_states,
        n_actions,
        transitions: checked,
        reward_symbols,
        reward_values,
        initial_state,
        prior,
        discount: DEFAULT_DISCOUNT,
        q_values: Vec::new(),
    };
    mdp.q_values = (0..mdp.prior.len()).map(|theta| mdp.value_iteration(theta)).collect();
    Ok(mdp)
}

impl FiniteMdp {
    pub fn with_discount(mut self, discount: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::Validation(format!("discount must lie in [0, 1), got {discount}")));
        }
        self.discount = discount;
        self.q_values = (0..self.prior.len()).map(|theta| self.value_iteration(theta)).collect();
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_reward_symbols(&self) -> usize {
        self.reward_values.len()
    }

    pub fn encode(&self, next_state: usize, reward_symbol: usize) -> usize {
        next_state * self.n_reward_symbols() + reward_symbol
    }

    /// `(next_state, reward_symbol)`.
    pub fn decode(&self, observation: usize) -> (usize, usize) {
        (observation / self.n_reward_symbols(), observation % self.n_reward_symbols())
    }

    /// Current state: the initial state, or the one announced by the last observation.
    pub fn state(&self, history: &[Interaction]) -> usize {
        history.last().map_or(self.initial_state, |&(_, o)| self.decode(o).0)
    }

    pub fn q_values(&self, theta: usize) -> &[Vec<f64>] {
        &self.q_values[theta]
    }

    fn value_iteration(&self, theta: usize) -> Vec<Vec<f64>> {
        let t = &self.transitions[theta];
        let mut q = vec![vec![0.0; self.n_actions]; self.n_states];
        for _ in 0..100_000 {
            let v: Vec<f64> = q.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
            let mut delta = 0.0f64;
            for s in 0..self.n_states {
                for a in 0..self.n_actions {
                    let new: f64 = (0..self.n_states)
                        .map(|s2| {
                            t[s][a][s2] * (self.reward_values[self.reward_symbols[s][a][s2]] + self.discount * v[s2])
                        })
                        .sum();
                    delta = delta.max((new - q[s][a]).abs());
                    q[s][a] = new;
                }
            }
            if delta < 1e-12 {
                break;
            }
        }
        q
    }

    fn distribution(&self, theta: usize, state: usize, action: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.n_states * self.n_reward_symbols()];
        for (s2, &prob) in self.transitions[theta][state][action].iter().enumerate() {
            p[self.encode(s2, self.reward_symbols[state][action][s2])] += prob;
        }
        p
    }
}

struct MdpHypothesis {
    mdp: Arc<FiniteMdp>,
    theta: usize,
}

impl Hypothesis for MdpHypothesis {
    fn action_distribution(&self, history: &[Interaction]) -> Vec<f64> {
        let s = self.mdp.state(history);
        crate::numeric::one_hot(self.mdp.n_actions, argmax(&self.mdp.q_values[self.theta][s]))
    }

    fn observation_likelihood(&self, history: &[Interaction], action: usize, observation: usize) -> f64 {
        self.mdp.distribution(self.theta, self.mdp.state(history), action)[observation]
    }
}

impl Environment for FiniteMdp {
    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn n_observations(&self) -> usize {
        self.n_states * self.n_reward_symbols()
    }

    fn prior(&self) -> &[f64] {
        &self.prior
    }

    fn observation_distribution(&self, theta: usize, history: &[Interaction], action: usize) -> Vec<f64> {
        self.distribution(theta, self.state(history), action)
    }

    fn reward(&self, observation: usize) -> f64 {
        self.reward_values[self.decode(observation).1]
    }

    /// Discounted advantage `V*(s) - Q*(s, a)`.
    fn regret(&self, theta: usize, history: &[Interaction], action: usize) -> f64 {
        let q = &self.q_values[theta][self.state(history)];
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (best - q[action]).max(0.0)
    }

    fn hypotheses(&self) -> Vec<Arc<dyn Hypothesis>> {
        let shared = Arc::new(self.clone());
        (0..self.prior.len())
            .map(|theta| {
                Arc::new(MdpHypothesis {
                    mdp: Arc::clone(&shared),
                    theta,
                }) as Arc<dyn Hypothesis>
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub action: usize,
    pub observation: usize,
    pub reward: f64,
    /// Expected shortfall of the chosen action against the best one for the true parameter.
    pub regret: f64,
    /// Agent belief after the observation, when it keeps one.
    pub posterior: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    /// The parameter drawn for this trial, revealed only after the run.
    pub theta: usize,
    pub steps: Vec<StepRecord>,
    pub cumulative_reward: f64,
    /// Sum of per-step regrets: the oracle's expected reward minus the expected reward of the chosen actions.
    pub cumulative_regret: f64,
}

impl TrialRecord {
    /// Posterior mass on the true parameter after `step` observations (`step >= 1`).
    pub fn truth_mass(&self, step: usize) -> Option<f64> {
        self.steps.get(step.checked_sub(1)?)?.posterior.as_ref().map(|w| w[self.theta])
    }

    /// Mean regret over the 1-based inclusive step range.
    pub fn mean_regret(&self, first: usize, last: usize) -> f64 {
        let slice = &self.steps[first - 1..last];
        slice.iter().map(|s| s.regret).sum::<f64>() / slice.len() as f64
    }
}

/// Runs one trial: draws `theta` from the prior, then `horizon` act/respond/observe cycles.
pub fn run_interaction<A: Agent, E: Environment + ?Sized>(
    agent: A,
    env: &E,
    horizon: usize,
    seed: u64,
) -> Result<TrialRecord> {
    if agent.n_actions() != env.n_actions() || agent.n_observations() != env.n_observations() {
        return Err(Error::Validation(format!(
            "agent alphabets ({} actions, {} observations) do not match environment ({}, {})",
            agent.n_actions(),
            agent.n_observations(),
            env.n_actions(),
            env.n_observations()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = sample_categorical(env.prior(), &mut rng)?;
    let mut agent = agent;
    let mut history: Vec<Interaction> = Vec::with_capacity(horizon);
    let mut steps = Vec::with_capacity(horizon);
    let mut cumulative_reward = 0.0;
    let mut cumulative_regret = 0.0;
    for _ in 0..horizon {
        let action = agent.act(&mut rng)?;
        if action >= env.n_actions() {
            return Err(Error::InvalidSymbol {
                variable: "action".into(),
                index: action,
                size: env.n_actions(),
            });
        }
        let dist = env.observation_distribution(theta, &history, action);
        let observation = sample_categorical(&dist, &mut rng)?;
        let reward = env.reward(observation);
        let regret = env.regret(theta, &history, action);
        agent = agent.observe(action, observation)?;
        cumulative_reward += reward;
        cumulative_regret += regret;
        steps.push(StepRecord {
            action,
            observation,
            reward,
            regret,
            posterior: agent.belief(),
        });
        history.push((action, observation));
    }
    Ok(TrialRecord {
        seed,
        theta,
        steps,
        cumulative_reward,
        cumulative_regret,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bandit() -> BernoulliBandit {
        make_bernoulli_bandit(vec![vec![0.8, 0.2], vec![0.2, 0.8]], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn bandit_examples() {
        let b = make_bernoulli_bandit(vec![vec![1.0, 0.0]], vec![1.0]).unwrap();
        assert_eq!(b.observation_distribution(0, &[], 0), vec![0.0, 1.0]);
        let b = make_bernoulli_bandit(vec![vec![0.5, 0.5]], vec![1.0]).unwrap();
        assert_eq!(b.observation_distribution(0, &[], 1), vec![0.5, 0.5]);
        assert!(make_bernoulli_bandit(vec![vec![1.2, 0.0]], vec![1.0]).is_err());
    }

    #[test]
    fn bandit_empirical_mean() {
        let b = make_bernoulli_bandit(vec![vec![0.8, 0.2]], vec![1.0]).unwrap();
        let agent = StationaryAgent::new(vec![1.0, 0.0], 2).unwrap();
        let n = 10_000;
        let r = run_interaction(agent, &b, n, 5).unwrap();
        let mean = r.cumulative_reward / n as f64;
        assert!((mean - 0.8).abs() < 3.0 * (0.16 / n as f64).sqrt());
        assert_eq!(r.cumulative_regret, 0.0);
    }

    #[test]
    fn soft_controllers_follow_the_gibbs_measure() {
        let hyps = bandit().soft_hypotheses(Temperature::new(1.0).unwrap()).unwrap();
        let p = hyps[0].action_distribution(&[]);
        // 2^{0.8} : 2^{0.2}
        assert!((p[0] / p[1] - 0.6f64.exp2()).abs() < 1e-12);
        let cold = bandit().soft_hypotheses(Temperature::new(1e-6).unwrap()).unwrap();
        assert_eq!(cold[1].action_distribution(&[]), vec![0.0, 1.0]);
    }

    #[test]
    fn horizon_zero_is_empty() {
        let r = run_interaction(bcr_agent(&bandit()).unwrap(), &bandit(), 0, 1).unwrap();
        assert!(r.steps.is_empty());
        assert_eq!(r.cumulative_reward, 0.0);
    }

    #[test]
    fn deterministic_single_parameter_trial() {
        let b = make_bernoulli_bandit(vec![vec![0.0, 1.0]], vec![1.0]).unwrap();
        let r = run_interaction(bcr_agent(&b).unwrap(), &b, 5, 42).unwrap();
        assert!(r.steps.iter().all(|s| s.action == 1 && s.observation == 1 && s.regret == 0.0));
        assert_eq!(r.cumulative_reward, 5.0);
    }

    #[test]
    fn trials_are_reproducible() {
        let b = bandit();
        let a = run_interaction(bcr_agent(&b).unwrap(), &b, 200, 9).unwrap();
        let c = run_interaction(bcr_agent(&b).unwrap(), &b, 200, 9).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn alphabet_mismatch_is_rejected() {
        let agent = StationaryAgent::new(vec![0.5, 0.3, 0.2], 2).unwrap();
        assert!(run_interaction(agent, &bandit(), 3, 0).is_err());
    }

    fn chain(p_stay: [f64; 2]) -> FiniteMdp {
        let t = vec![vec![vec![p_stay[0], 1.0 - p_stay[0]]], vec![vec![1.0 - p_stay[1], p_stay[1]]]];
        make_finite_mdp(vec![t], vec![vec![vec![0, 0]]; 2], vec![0.0], 0, vec![1.0]).unwrap()
    }

    #[test]
    fn identity_transitions_keep_the_state() {
        let m = chain([1.0, 1.0]);
        let r = run_interaction(StationaryAgent::new(vec![1.0], 2).unwrap(), &m, 50, 3).unwrap();
        assert!(r.steps.iter().all(|s| m.decode(s.observation).0 == 0));
    }

    #[test]
    fn deterministic_cycle_alternates() {
        let m = chain([0.0, 0.0]);
        let r = run_interaction(StationaryAgent::new(vec![1.0], 2).unwrap(), &m, 20, 3).unwrap();
        for (k, s) in r.steps.iter().enumerate() {
            assert_eq!(m.decode(s.observation).0, (k + 1) % 2);
        }
    }

    #[test]
    fn visit_frequencies_match_stationary_distribution() {
        let m = chain([0.9, 0.7]);
        // power iteration on the 2x2 chain
        let mut pi = [0.5, 0.5];
        for _ in 0..1000 {
            pi = [pi[0] * 0.9 + pi[1] * 0.3, pi[0] * 0.1 + pi[1] * 0.7];
        }
        let n = 10_000;
        let r = run_interaction(StationaryAgent::new(vec![1.0], 2).unwrap(), &m, n, 17).unwrap();
        let in_zero = r.steps.iter().filter(|s| m.decode(s.observation).0 == 0).count() as f64 / n as f64;
        assert!((in_zero - pi[0]).abs() < 0.02);
    }

    #[test]
    fn rejects_non_stochastic_transitions() {
        let t = vec![vec![vec![0.5, 0.4]], vec![vec![0.5, 0.5]]];
        assert!(make_finite_mdp(vec![t], vec![vec![vec![0, 0]]; 2], vec![0.0], 0, vec![1.0]).is_err());
    }

    #[test]
    fn mdp_regret_and_controllers() {
        // state 0: action 1 moves to the rewarding state 1 under parameter 0, stays under parameter 1
        let t0 = vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0], vec![0.0, 1.0]]];
        let t1 = vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![vec![0.0, 1.0], vec![0.0, 1.0]]];
        let symbols = vec![vec![vec![0, 1]; 2]; 2];
        let m = make_finite_mdp(vec![t0, t1], symbols, vec![0.0, 1.0], 0, vec![0.5, 0.5]).unwrap();
        assert_eq!(m.regret(0, &[], 1), 0.0);
        assert!(m.regret(0, &[], 0) > 0.5);
        let hyps = m.hypotheses();
        assert_eq!(hyps[0].action_distribution(&[]), vec![0.0, 1.0]);
        assert_eq!(hyps[1].action_distribution(&[]), vec![1.0, 0.0]);
        let agent = bcr_agent(&m).unwrap().observe(1, m.encode(1, 1)).unwrap();
        assert_eq!(agent.posterior(), &[1.0, 0.0]);
    }
}
