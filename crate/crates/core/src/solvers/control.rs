//! Finite-horizon control against a known environment.
//!
//! The soft solution is computed by a backward pass over every interaction
//! history `ao_<t`:
//!
//! ```text
//! P(a|h) = R(a|h) / Z(h) * 2^{ r(a|h)/alpha + sum_o Q(o|ha) [ r(o|ha)/alpha + log2 Z(hao) ] }
//! ```
//!
//! with `log2 Z` of a complete history equal to zero. As `alpha -> 0` this
//! concentrates on the dynamic-programming action; as `alpha -> inf` it
//! returns the reference policy.

use crate::conjugate::Temperature;
use crate::error::{Error, Result};
use crate::finite_prob::{Alphabet, CausalModel, IoType, VariableSpec, VpMode};
use crate::gvp::{GvpProblem, UtilityTable};
use crate::numeric::{log2_sum_exp2, validate_distribution};

/// Upper bound on the total number of table entries of a control problem.
pub const MAX_CONTROL_ENTRIES: u128 = 1 << 22;

/// A completed interaction `(action, observation)`.
pub type Interaction = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct ControlProblem {
    horizon: usize,
    n_actions: usize,
    n_observations: usize,
    /// `[t]`: `R(a_t | h)` for every history of `t` interactions, `count(t) * A`.
    reference: Vec<Vec<f64>>,
    /// `[t]`: `Q(o_t | h a_t)`, `count(t) * A * O`.
    environment: Vec<Vec<f64>>,
    action_reward: Vec<Vec<f64>>,
    observation_reward: Vec<Vec<f64>>,
}

fn decode_interactions(index: usize, t: usize, n_actions: usize, n_obs: usize) -> Vec<Interaction> {
    let mut out = vec![(0, 0); t];
    let mut i = index;
    for k in (0..t).rev() {
        let digit = i % (n_actions * n_obs);
        i /= n_actions * n_obs;
        out[k] = (digit / n_obs, digit % n_obs);
    }
    out
}

impl ControlProblem {
    /// Builds a problem from callbacks evaluated on every interaction history.
    ///
    /// - `reference(h)`: distribution over actions;
    /// - `environment(h, a)`: distribution over observations;
    /// - `action_reward(h)`: reward per action;
    /// - `observation_reward(h, a)`: reward per observation.
    pub fn from_fns<R, E, RA, RO>(
        horizon: usize,
        n_actions: usize,
        n_observations: usize,
        mut reference: R,
        mut environment: E,
        mut action_reward: RA,
        mut observation_reward: RO,
    ) -> Result<Self>
    where
        R: FnMut(&[Interaction]) -> Vec<f64>,
        E: FnMut(&[Interaction], usize) -> Vec<f64>,
        RA: FnMut(&[Interaction]) -> Vec<f64>,
        RO: FnMut(&[Interaction], usize) -> Vec<f64>,
    {
        if n_actions == 0 || n_observations == 0 {
            return Err(Error::Validation("action and observation alphabets must be non-empty".into()));
        }
        let ao = (n_actions * n_observations) as u128;
        let required: u128 = (0..horizon as u32)
            .map(|t| ao.saturating_pow(t).saturating_mul(ao))
            .fold(0u128, u128::saturating_add);
        if required > MAX_CONTROL_ENTRIES {
            return Err(Error::Capacity {
                required,
                limit: MAX_CONTROL_ENTRIES,
            });
        }
        let mut p = Self {
            horizon,
            n_actions,
            n_observations,
            reference: Vec::with_capacity(horizon),
            environment: Vec::with_capacity(horizon),
            action_reward: Vec::with_capacity(horizon),
            observation_reward: Vec::with_capacity(horizon),
        };
        let mut count = 1usize;
        for t in 0..horizon {
            let mut r = Vec::with_capacity(count * n_actions);
            let mut e = Vec::with_capacity(count * n_actions * n_observations);
            let mut ra = Vec::with_capacity(count * n_actions);
            let mut ro = Vec::with_capacity(count * n_actions * n_observations);
            for h in 0..count {
                let hist = decode_interactions(h, t, n_actions, n_observations);
                let ctx = format!("reference policy at step {t}, history {hist:?}");
                r.extend(check_len(validate_distribution(&reference(&hist), &ctx)?, n_actions, &ctx)?);
                let ctx = format!("action rewards at step {t}, history {hist:?}");
                ra.extend(check_rewards(action_reward(&hist), n_actions, &ctx)?);
                for a in 0..n_actions {
                    let ctx = format!("environment at step {t}, history {hist:?}, action {a}");
                    e.extend(check_len(validate_distribution(&environment(&hist, a), &ctx)?, n_observations, &ctx)?);
                    let ctx = format!("observation rewards at step {t}, history {hist:?}, action {a}");
                    ro.extend(check_rewards(observation_reward(&hist, a), n_observations, &ctx)?);
                }
            }
            p.reference.push(r);
            p.environment.push(e);
            p.action_reward.push(ra);
            p.observation_reward.push(ro);
            count *= n_actions * n_observations;
        }
        Ok(p)
    }

    /// Problem whose tables do not depend on the history.
    pub fn stationary(
        horizon: usize,
        reference: Vec<f64>,
        environment: Vec<Vec<f64>>,
        action_reward: Vec<f64>,
        observation_reward: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n_actions = reference.len();
        let n_obs = environment.first().map_or(0, Vec::len);
        if environment.len() != n_actions || observation_reward.len() != n_actions {
            return Err(Error::Validation("environment and observation rewards need one row per action".into()));
        }
        Self::from_fns(
            horizon,
            n_actions,
            n_obs,
            |_| reference.clone(),
            |_, a| environment[a].clone(),
            |_| action_reward.clone(),
            |_, a| observation_reward[a].clone(),
        )
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_observations(&self) -> usize {
        self.n_observations
    }

    fn branching(&self) -> usize {
        self.n_actions * self.n_observations
    }

    /// Number of histories with `t` completed interactions.
    pub fn count(&self, t: usize) -> usize {
        self.branching().pow(t as u32)
    }

    pub fn history_index(&self, history: &[Interaction]) -> usize {
        history
            .iter()
            .fold(0, |acc, &(a, o)| acc * self.branching() + a * self.n_observations + o)
    }

    pub fn decode(&self, t: usize, index: usize) -> Vec<Interaction> {
        decode_interactions(index, t, self.n_actions, self.n_observations)
    }

    pub fn reference_row(&self, t: usize, h: usize) -> &[f64] {
        let n = self.n_actions;
        &self.reference[t][h * n..(h + 1) * n]
    }

    pub fn environment_row(&self, t: usize, h: usize, a: usize) -> &[f64] {
        let n = self.n_observations;
        let i = h * self.n_actions + a;
        &self.environment[t][i * n..(i + 1) * n]
    }

    pub fn action_rewards(&self, t: usize, h: usize) -> &[f64] {
        let n = self.n_actions;
        &self.action_reward[t][h * n..(h + 1) * n]
    }

    pub fn observation_rewards(&self, t: usize, h: usize, a: usize) -> &[f64] {
        let n = self.n_observations;
        let i = h * self.n_actions + a;
        &self.observation_reward[t][i * n..(i + 1) * n]
    }

    fn child(&self, h: usize, a: usize, o: usize) -> usize {
        h * self.branching() + a * self.n_observations + o
    }

    /// Variables `A_1, O_1, ..., A_T, O_T`: actions are controlled outputs,
    /// observations estimated disclosed inputs.
    pub fn variables(&self) -> Vec<VariableSpec> {
        let actions = Alphabet::indexed(self.n_actions);
        let observations = Alphabet::indexed(self.n_observations);
        (0..self.horizon)
            .flat_map(|t| {
                [
                    VariableSpec::new(format!("a{}", t + 1), actions.clone(), IoType::Output, VpMode::Controlled),
                    VariableSpec::new(format!("o{}", t + 1), observations.clone(), IoType::DisclosedInput, VpMode::Estimated),
                ]
            })
            .collect()
    }

    /// Causal model using `actions[t]` (flat, `count(t) * A`) for the action conditionals
    /// and the environment for the observations.
    fn model_with_actions(&self, actions: &[Vec<f64>]) -> Result<CausalModel> {
        let mut rows = Vec::with_capacity(2 * self.horizon);
        for (action_table, environment) in actions.iter().zip(&self.environment).take(self.horizon) {
            rows.push(action_table.chunks(self.n_actions).map(<[f64]>::to_vec).collect());
            rows.push(environment.chunks(self.n_observations).map(<[f64]>::to_vec).collect());
        }
        CausalModel::from_rows(self.variables(), rows)
    }

    /// The reference system: reference policy plus known environment.
    pub fn reference_model(&self) -> Result<CausalModel> {
        self.model_with_actions(&self.reference)
    }

    /// The system obtained by running `policy` in the environment.
    pub fn policy_model(&self, policy: &Policy) -> Result<CausalModel> {
        self.model_with_actions(&policy.action_probs)
    }

    pub fn utility_table(&self) -> Result<UtilityTable> {
        let mut rows = Vec::with_capacity(2 * self.horizon);
        for t in 0..self.horizon {
            rows.push(self.action_reward[t].chunks(self.n_actions).map(<[f64]>::to_vec).collect());
            rows.push(self.observation_reward[t].chunks(self.n_observations).map(<[f64]>::to_vec).collect());
        }
        UtilityTable::from_rows(&self.variables(), rows)
    }

    /// The equivalent sequence-level variational problem.
    pub fn to_gvp(&self, alpha: Temperature) -> Result<GvpProblem> {
        GvpProblem::new(self.reference_model()?, self.utility_table()?, alpha)
    }

    /// `sum_o Q(o|ha) [r(o|ha) + next(hao)]` for each action.
    fn observation_backup(&self, t: usize, h: usize, next: &[f64], scale: f64) -> Vec<f64> {
        (0..self.n_actions)
            .map(|a| {
                let q = self.environment_row(t, h, a);
                let r = self.observation_rewards(t, h, a);
                q.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(o, &p)| {
                        let tail = next.get(self.child(h, a, o)).copied().unwrap_or(0.0);
                        p * (r[o] * scale + tail)
                    })
                    .sum()
            })
            .collect()
    }
}

fn check_len(v: Vec<f64>, n: usize, ctx: &str) -> Result<Vec<f64>> {
    if v.len() != n {
        return Err(Error::Validation(format!("{ctx}: {} entries, expected {n}", v.len())));
    }
    Ok(v)
}

fn check_rewards(v: Vec<f64>, n: usize, ctx: &str) -> Result<Vec<f64>> {
    let v = check_len(v, n, ctx)?;
    if v.iter().any(|r| !r.is_finite()) {
        return Err(Error::Validation(format!("{ctx}: rewards must be finite")));
    }
    Ok(v)
}

/// Soft-optimal action distributions and partition values per history.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    n_actions: usize,
    /// `[t]`: `P(a_t | h)`, `count(t) * A`.
    action_probs: Vec<Vec<f64>>,
    /// `[t]`: `log2 Z(h)` per history of length `t`.
    log_partition: Vec<Vec<f64>>,
}

impl Policy {
    pub fn horizon(&self) -> usize {
        self.action_probs.len()
    }

    pub fn action_distribution(&self, t: usize, h: usize) -> &[f64] {
        let n = self.n_actions;
        &self.action_probs[t][h * n..(h + 1) * n]
    }

    /// `V(h) = log2 Z(h)`.
    pub fn log2_partition(&self, t: usize, h: usize) -> f64 {
        self.log_partition[t][h]
    }

    pub fn action_tables(&self) -> &[Vec<f64>] {
        &self.action_probs
    }
}

/// Soft-optimal policy at temperature `alpha` by the backward partition-function pass.
pub fn solve_optimal_control(problem: &ControlProblem, alpha: Temperature) -> Result<Policy> {
    let alpha = alpha.value();
    let n = problem.n_actions;
    let horizon = problem.horizon;
    let mut action_probs = vec![Vec::new(); horizon];
    let mut log_partition = vec![Vec::new(); horizon];
    let mut next: Vec<f64> = Vec::new();
    for t in (0..horizon).rev() {
        let count = problem.count(t);
        let mut probs = Vec::with_capacity(count * n);
        let mut logz = Vec::with_capacity(count);
        for h in 0..count {
            let backup = problem.observation_backup(t, h, &next, 1.0 / alpha);
            let r = problem.reference_row(t, h);
            let ra = problem.action_rewards(t, h);
            let exponents: Vec<f64> = (0..n)
                .map(|a| {
                    if r[a] > 0.0 {
                        r[a].log2() + ra[a] / alpha + backup[a]
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            let lz = log2_sum_exp2(&exponents);
            if !lz.is_finite() {
                return Err(Error::Degenerate(format!("partition function at step {t} history {h} is {lz}")));
            }
            probs.extend(exponents.iter().map(|e| (e - lz).exp2()));
            logz.push(lz);
        }
        action_probs[t] = probs;
        log_partition[t] = logz.clone();
        next = logz;
    }
    Ok(Policy {
        n_actions: n,
        action_probs,
        log_partition,
    })
}

/// Deterministic maximum-expected-utility policy and its value table.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicPolicy {
    /// `[t][h]`: chosen action.
    pub actions: Vec<Vec<usize>>,
    /// `[t][h]`: `V0(h)`.
    pub values: Vec<Vec<f64>>,
}

impl DeterministicPolicy {
    pub fn value(&self) -> f64 {
        self.values.first().map_or(0.0, |v| v[0])
    }
}

/// Dynamic-programming recursion
/// `V0(h) = max_a { r(a|h) + sum_o Q(o|ha) [r(o|ha) + V0(hao)] }`, ties to the lowest action.
pub fn dp_limit(problem: &ControlProblem) -> DeterministicPolicy {
    let horizon = problem.horizon;
    let mut actions = vec![Vec::new(); horizon];
    let mut values = vec![Vec::new(); horizon];
    let mut next: Vec<f64> = Vec::new();
    for t in (0..horizon).rev() {
        let count = problem.count(t);
        let mut best_actions = Vec::with_capacity(count);
        let mut best_values = Vec::with_capacity(count);
        for h in 0..count {
            let backup = problem.observation_backup(t, h, &next, 1.0);
            let ra = problem.action_rewards(t, h);
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for a in 0..problem.n_actions {
                let v = ra[a] + backup[a];
                if v > best_v {
                    best = a;
                    best_v = v;
                }
            }
            best_actions.push(best);
            best_values.push(best_v);
        }
        actions[t] = best_actions;
        values[t] = best_values.clone();
        next = best_values;
    }
    DeterministicPolicy { actions, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{max_abs_diff, one_hot, total_variation};
    use crate::transform::{control_solution, TransformProblem};

    fn t(a: f64) -> Temperature {
        Temperature::new(a).unwrap()
    }

    fn one_step() -> ControlProblem {
        ControlProblem::stationary(1, vec![0.5, 0.5], vec![vec![1.0], vec![1.0]], vec![1.0, 0.0], vec![vec![0.0], vec![0.0]]).unwrap()
    }

    /// Two steps, binary actions and observations; the best first action trades
    /// immediate reward against a better continuation.
    fn two_step() -> ControlProblem {
        ControlProblem::from_fns(
            2,
            2,
            2,
            |_| vec![0.5, 0.5],
            |h, a| match (h.len(), a) {
                (0, 0) => vec![0.9, 0.1],
                (0, _) => vec![0.2, 0.8],
                (_, 0) => vec![0.6, 0.4],
                _ => vec![0.3, 0.7],
            },
            |h| if h.is_empty() { vec![0.3, 0.0] } else { vec![0.0, 0.1 * h[0].1 as f64] },
            |_, _| vec![0.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn one_step_reduces_to_transform() {
        let p = solve_optimal_control(&one_step(), t(1.0)).unwrap();
        let closed = control_solution(&TransformProblem::new(vec![0.5, 0.5], vec![1.0, 0.0], t(1.0)).unwrap()).unwrap();
        assert!(max_abs_diff(p.action_distribution(0, 0), &closed) < 1e-15);
        assert!((p.action_distribution(0, 0)[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dp_limit_examples() {
        let d = dp_limit(&one_step());
        assert_eq!(d.actions[0][0], 0);
        assert_eq!(d.value(), 1.0);

        let zero = ControlProblem::stationary(2, vec![0.5, 0.5], vec![vec![0.5, 0.5]; 2], vec![0.0, 0.0], vec![vec![0.0, 0.0]; 2]).unwrap();
        let d = dp_limit(&zero);
        assert!(d.values.iter().flatten().all(|&v| v == 0.0));
        assert!(d.actions.iter().flatten().all(|&a| a == 0));
    }

    #[test]
    fn dp_value_by_hand() {
        // Step 2 from history (a, o): action 1 gives 0.1*o + 0.7, action 0 gives 0.4.
        // Step 1: action 0: 0.3 + 0.1 + E[V(a0 o)] with V = 0.7 or 0.8;
        // 0.9*0.7 + 0.1*0.8 = 0.71 -> 1.11. Action 1: 0.8 + 0.2*0.7 + 0.8*0.8 = 1.58.
        let d = dp_limit(&two_step());
        assert!((d.value() - 1.58).abs() < 1e-12);
        assert_eq!(d.actions[0][0], 1);
    }

    #[test]
    fn temperature_limits() {
        let p = two_step();
        let cold = solve_optimal_control(&p, t(1e-6)).unwrap();
        let d = dp_limit(&p);
        for step in 0..2 {
            for h in 0..p.count(step) {
                let target = one_hot(2, d.actions[step][h]);
                assert!(total_variation(cold.action_distribution(step, h), &target) < 1e-3);
            }
        }
        let hot = solve_optimal_control(&p, t(1e6)).unwrap();
        for step in 0..2 {
            for h in 0..p.count(step) {
                assert!(total_variation(hot.action_distribution(step, h), p.reference_row(step, h)) < 1e-3);
            }
        }
    }

    #[test]
    fn scaled_log_partition_approaches_dp_value() {
        let p = two_step();
        let soft = solve_optimal_control(&p, t(1e-3)).unwrap();
        assert!((1e-3 * soft.log2_partition(0, 0) - dp_limit(&p).value()).abs() < 0.01);
    }

    #[test]
    fn agrees_with_sequence_level_solver() {
        let p = two_step();
        for alpha in [0.3, 1.0, 4.0] {
            let policy = solve_optimal_control(&p, t(alpha)).unwrap();
            let gvp = p.to_gvp(t(alpha)).unwrap();
            let sol = gvp.solve().unwrap();
            for step in 0..2 {
                assert!(max_abs_diff(sol.candidate.conditional(2 * step).flat(), &policy.action_tables()[step]) < 1e-9);
            }
            let model = p.policy_model(&policy).unwrap();
            assert!((gvp.objective(&model).unwrap() - alpha * policy.log2_partition(0, 0)).abs() < 1e-9);
        }
    }

    #[test]
    fn capacity_is_enforced() {
        let err = ControlProblem::stationary(30, vec![0.5, 0.5], vec![vec![0.5, 0.5]; 2], vec![0.0; 2], vec![vec![0.0; 2]; 2]).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
    }

    #[test]
    fn rejects_unnormalized_environment() {
        let err = ControlProblem::stationary(1, vec![0.5, 0.5], vec![vec![0.5, 0.4]; 2], vec![0.0; 2], vec![vec![0.0; 2]; 2]).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }
}
