//! Slow reference implementations and random instance generators.
//!
//! Everything here works by enumeration or search and shares as little code
//! with the solvers as practical, so agreement between the two is evidence.

use rand::Rng;

use crate::conjugate::{free_utility, Temperature};
use crate::error::{Error, Result};
use crate::finite_prob::{Alphabet, CausalModel, IoType, VariableSpec, VpMode};
use crate::gvp::{observable_classes, GvpProblem, UtilityTable};
use crate::solvers::{ControlProblem, Interaction};

/// Uniform draw from the probability simplex (flat Dirichlet).
pub fn random_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Log-uniform temperature in `[lo, hi]`.
pub fn random_temperature<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> Temperature {
    let a = (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp();
    Temperature::new(a).expect("positive bounds")
}

/// Model with every conditional row drawn uniformly from the simplex.
pub fn random_model<R: Rng + ?Sized>(variables: Vec<VariableSpec>, rng: &mut R) -> Result<CausalModel> {
    let sizes: Vec<usize> = variables.iter().map(VariableSpec::size).collect();
    CausalModel::from_fn(variables, |t, _| random_simplex(sizes[t], rng))
}

/// Binary variables with random io types and modes. Undisclosed inputs are estimated
/// and carry zero utility.
pub fn random_gvp_problem<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<GvpProblem> {
    let vars: Vec<VariableSpec> = (0..len)
        .map(|t| {
            let (io, mode) = match rng.gen_range(0..4) {
                0 => (IoType::UndisclosedInput, VpMode::Estimated),
                1 => (IoType::DisclosedInput, VpMode::Estimated),
                2 => (IoType::Output, VpMode::Controlled),
                _ => {
                    let io = if rng.gen_bool(0.5) { IoType::Output } else { IoType::DisclosedInput };
                    let mode = if rng.gen_bool(0.5) { VpMode::Controlled } else { VpMode::Estimated };
                    (io, mode)
                }
            };
            VariableSpec::new(format!("x{}", t + 1), Alphabet::binary(), io, mode)
        })
        .collect();
    let reference = random_model(vars.clone(), rng)?;
    let utility = UtilityTable::from_fn(&vars, |t, _| {
        if vars[t].io_type == IoType::UndisclosedInput {
            vec![0.0; 2]
        } else {
            (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }
    })?;
    GvpProblem::new(reference, utility, random_temperature(0.2, 5.0, rng))
}

/// Candidate rows indexed `[t][class]`, expanded to a model.
#[derive(Debug, Clone)]
struct ClassRows {
    classes: Vec<Vec<Vec<usize>>>,
    rows: Vec<Vec<Vec<f64>>>,
}

impl ClassRows {
    fn new(problem: &GvpProblem) -> Self {
        let reference = problem.reference();
        let layout = reference.layout();
        let classes: Vec<Vec<Vec<usize>>> = (0..layout.len())
            .map(|t| observable_classes(reference.variables(), layout, t))
            .collect();
        let rows = classes
            .iter()
            .enumerate()
            .map(|(t, cs)| vec![vec![1.0 / layout.sizes()[t] as f64; layout.sizes()[t]]; cs.len()])
            .collect();
        Self { classes, rows }
    }

    fn randomize<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for per_t in &mut self.rows {
            for row in per_t.iter_mut() {
                *row = random_simplex(row.len(), rng);
            }
        }
    }

    fn model(&self, problem: &GvpProblem) -> Result<CausalModel> {
        let reference = problem.reference();
        let layout = reference.layout();
        let mut rows = Vec::with_capacity(layout.len());
        for t in 0..layout.len() {
            let mut per_h = vec![Vec::new(); layout.count(t)];
            for (k, class) in self.classes[t].iter().enumerate() {
                for &h in class {
                    per_h[h] = self.rows[t][k].clone();
                }
            }
            rows.push(per_h);
        }
        CausalModel::from_rows(reference.variables().to_vec(), rows)
    }
}

/// Random candidate whose conditionals depend only on the observable history.
pub fn random_candidate<R: Rng + ?Sized>(problem: &GvpProblem, rng: &mut R) -> Result<CausalModel> {
    let mut rows = ClassRows::new(problem);
    rows.randomize(rng);
    rows.model(problem)
}

/// Best objective among `samples` random candidates.
pub fn best_random_objective<R: Rng + ?Sized>(problem: &GvpProblem, samples: usize, rng: &mut R) -> Result<f64> {
    let mut rows = ClassRows::new(problem);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples {
        rows.randomize(rng);
        best = best.max(problem.objective(&rows.model(problem)?)?);
    }
    Ok(best)
}

fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Block coordinate ascent over candidate rows, one observable class at a time.
///
/// Each row is improved by golden-section search along mass transfers between
/// pairs of symbols. Starts from uniform rows and stops when a full sweep gains
/// less than `tol` or after `max_sweeps`.
pub fn coordinate_ascent(problem: &GvpProblem, max_sweeps: usize, tol: f64) -> Result<(CausalModel, f64)> {
    let mut rows = ClassRows::new(problem);
    let mut current = problem.objective(&rows.model(problem)?)?;
    for _ in 0..max_sweeps {
        let start = current;
        for t in 0..rows.rows.len() {
            for k in 0..rows.rows[t].len() {
                let n = rows.rows[t][k].len();
                for i in 0..n {
                    for j in i + 1..n {
                        let total = rows.rows[t][k][i] + rows.rows[t][k][j];
                        let mut trial = rows.clone();
                        let mut eval = |s: f64| {
                            trial.rows[t][k][i] = s;
                            trial.rows[t][k][j] = total - s;
                            trial
                                .model(problem)
                                .and_then(|m| problem.objective(&m))
                                .unwrap_or(f64::NEG_INFINITY)
                        };
                        let (s, v) = golden_section_max(&mut eval, 0.0, total, 80);
                        if v > current {
                            rows.rows[t][k][i] = s;
                            rows.rows[t][k][j] = total - s;
                            current = v;
                        }
                    }
                }
            }
        }
        if current - start < tol {
            break;
        }
    }
    Ok((rows.model(problem)?, current))
}

/// Random control problem with rewards in `[0, 1)` and random tables.
pub fn random_control_problem<R: Rng + ?Sized>(
    horizon: usize,
    n_actions: usize,
    n_observations: usize,
    rng: &mut R,
) -> Result<ControlProblem> {
    let rng = std::cell::RefCell::new(rng);
    ControlProblem::from_fns(
        horizon,
        n_actions,
        n_observations,
        |_| random_simplex(n_actions, &mut **rng.borrow_mut()),
        |_, _| random_simplex(n_observations, &mut **rng.borrow_mut()),
        |_| (0..n_actions).map(|_| rng.borrow_mut().gen::<f64>()).collect(),
        |_, _| (0..n_observations).map(|_| rng.borrow_mut().gen::<f64>()).collect(),
    )
}

/// Action values `r(a|h) + sum_o Q(o|ha)[r(o|ha) + V(hao)]` at `history`, by plain recursion.
pub fn recursive_action_values(problem: &ControlProblem, history: &mut Vec<Interaction>) -> Vec<f64> {
    let t = history.len();
    let h = problem.history_index(history);
    (0..problem.n_actions())
        .map(|a| {
            let mut v = problem.action_rewards(t, h)[a];
            let q = problem.environment_row(t, h, a).to_vec();
            let r = problem.observation_rewards(t, h, a).to_vec();
            for (o, p) in q.into_iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                history.push((a, o));
                let tail = if t + 1 < problem.horizon() {
                    recursive_action_values(problem, history)
                        .into_iter()
                        .fold(f64::NEG_INFINITY, f64::max)
                } else {
                    0.0
                };
                history.pop();
                v += p * (r[o] + tail);
            }
            v
        })
        .collect()
}

/// Smallest gap between the best and second-best action value over every history.
pub fn min_action_gap(problem: &ControlProblem) -> f64 {
    let mut gap = f64::INFINITY;
    for t in 0..problem.horizon() {
        for h in 0..problem.count(t) {
            let mut hist = problem.decode(t, h);
            let mut q = recursive_action_values(problem, &mut hist);
            q.sort_by(|a, b| b.total_cmp(a));
            if q.len() > 1 {
                gap = gap.min(q[0] - q[1]);
            }
        }
    }
    gap
}

/// Random problem whose optimal action beats the runner-up by at least `gap` at every history.
pub fn random_gapped_control_problem<R: Rng + ?Sized>(
    horizon: usize,
    n_actions: usize,
    n_observations: usize,
    gap: f64,
    rng: &mut R,
) -> Result<ControlProblem> {
    for _ in 0..10_000 {
        let p = random_control_problem(horizon, n_actions, n_observations, rng)?;
        if min_action_gap(&p) >= gap {
            return Ok(p);
        }
    }
    Err(Error::Degenerate(format!("no problem with action gap {gap} found")))
}

/// Expected total reward of a deterministic policy given as one action per history, by forward enumeration.
pub fn evaluate_deterministic(problem: &ControlProblem, actions: &[Vec<usize>]) -> f64 {
    fn go(p: &ControlProblem, actions: &[Vec<usize>], hist: &mut Vec<Interaction>) -> f64 {
        let t = hist.len();
        if t == p.horizon() {
            return 0.0;
        }
        let h = p.history_index(hist);
        let a = actions[t][h];
        let mut v = p.action_rewards(t, h)[a];
        let q = p.environment_row(t, h, a).to_vec();
        for (o, prob) in q.into_iter().enumerate() {
            if prob > 0.0 {
                let r = p.observation_rewards(t, h, a)[o];
                hist.push((a, o));
                v += prob * (r + go(p, actions, hist));
                hist.pop();
            }
        }
        v
    }
    go(problem, actions, &mut Vec::new())
}

/// Best expected total reward over every deterministic history-dependent policy.
pub fn enumerate_deterministic_policies(problem: &ControlProblem) -> Result<(f64, Vec<Vec<usize>>)> {
    let points: Vec<usize> = (0..problem.horizon()).map(|t| problem.count(t)).collect();
    let decisions: usize = points.iter().sum();
    let n = problem.n_actions();
    let total = (n as u128).checked_pow(decisions as u32).unwrap_or(u128::MAX);
    let limit = 1u128 << 24;
    if total > limit {
        return Err(Error::Capacity { required: total, limit });
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for code in 0..total as usize {
        let mut c = code;
        let actions: Vec<Vec<usize>> = points
            .iter()
            .map(|&k| {
                (0..k)
                    .map(|_| {
                        let a = c % n;
                        c /= n;
                        a
                    })
                    .collect()
            })
            .collect();
        let v = evaluate_deterministic(problem, &actions);
        if v > best.0 {
            best = (v, actions);
        }
    }
    Ok(best)
}

/// Largest free utility among `samples` random simplex points.
pub fn best_random_free_utility<R: Rng + ?Sized>(u: &[f64], alpha: Temperature, samples: usize, rng: &mut R) -> f64 {
    (0..samples)
        .map(|_| free_utility(&random_simplex(u.len(), rng), u, alpha).total)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simplex_points_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for n in 1..8 {
            let p = random_simplex(n, &mut rng);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, _) = golden_section_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 80);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn enumeration_and_recursion_agree_on_a_tiny_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_control_problem(2, 2, 2, &mut rng).unwrap();
        let (best, _) = enumerate_deterministic_policies(&p).unwrap();
        let q = recursive_action_values(&p, &mut Vec::new());
        assert!((best - q.into_iter().fold(f64::NEG_INFINITY, f64::max)).abs() < 1e-12);
    }

    #[test]
    fn coordinate_ascent_never_beats_exact_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..3 {
            let p = random_gvp_problem(3, &mut rng).unwrap();
            let exact = p.solve().unwrap().objective();
            let (_, ca) = coordinate_ascent(&p, 200, 1e-12).unwrap();
            assert!(ca <= exact + 1e-9);
            assert!(ca >= exact - 1e-4);
        }
    }

    #[test]
    fn random_candidates_respect_observable_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_gvp_problem(3, &mut rng).unwrap();
        let c = random_candidate(&p, &mut rng).unwrap();
        let layout = c.layout();
        for t in 0..3 {
            for class in observable_classes(c.variables(), layout, t) {
                let first = c.conditional(t).row(class[0]);
                assert!(class.iter().all(|&h| c.conditional(t).row(h) == first));
            }
        }
    }
}
