//! Sequence prediction for a source drawn from a finite family.

use crate::error::{Error, Result};
use crate::finite_prob::{Alphabet, CausalModel, IoType, VariableSpec, VpMode};
use crate::numeric::validate_distribution;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationProblem {
    prior: Vec<f64>,
    n_observations: usize,
    horizon: usize,
    likelihoods: Likelihoods,
}

#[derive(Debug, Clone, PartialEq)]
enum Likelihoods {
    /// `[theta]`: one symbol distribution per parameter.
    Iid(Vec<Vec<f64>>),
    /// `[theta][t]`: `P(o_t | theta, o_<t)`, flat over `O^t` histories times `O`.
    Table(Vec<Vec<Vec<f64>>>),
}

impl EstimationProblem {
    /// `likelihood(theta, history)` gives the distribution of the next symbol.
    pub fn from_fn<F>(prior: Vec<f64>, n_observations: usize, horizon: usize, mut likelihood: F) -> Result<Self>
    where
        F: FnMut(usize, &[usize]) -> Vec<f64>,
    {
        let prior = validate_distribution(&prior, "parameter prior")?;
        if n_observations == 0 {
            return Err(Error::Validation("observation alphabet must be non-empty".into()));
        }
        let required = (0..horizon as u32)
            .map(|t| (n_observations as u128).saturating_pow(t + 1))
            .fold(0u128, u128::saturating_add)
            .saturating_mul(prior.len() as u128);
        let limit = crate::finite_prob::MAX_SEQUENCES as u128;
        if required > limit {
            return Err(Error::Capacity { required, limit });
        }
        let mut likelihoods = Vec::with_capacity(prior.len());
        for theta in 0..prior.len() {
            let mut per_t = Vec::with_capacity(horizon);
            let mut count = 1usize;
            for t in 0..horizon {
                let mut flat = Vec::with_capacity(count * n_observations);
                for h in 0..count {
                    let hist = decode(h, t, n_observations);
                    let ctx = format!("likelihood of parameter {theta} at history {hist:?}");
                    let row = validate_distribution(&likelihood(theta, &hist), &ctx)?;
                    if row.len() != n_observations {
                        return Err(Error::LengthMismatch {
                            expected: n_observations,
                            got: row.len(),
                        });
                    }
                    flat.extend(row);
                }
                per_t.push(flat);
                count *= n_observations;
            }
            likelihoods.push(per_t);
        }
        Ok(Self {
            prior,
            n_observations,
            horizon,
            likelihoods: Likelihoods::Table(likelihoods),
        })
    }

    /// Independent, identically distributed sources: `sources[theta]` is the symbol
    /// distribution. Stored without per-history tables, so any horizon is allowed.
    pub fn iid(prior: Vec<f64>, sources: Vec<Vec<f64>>, horizon: usize) -> Result<Self> {
        let prior = validate_distribution(&prior, "parameter prior")?;
        if sources.len() != prior.len() {
            return Err(Error::LengthMismatch {
                expected: prior.len(),
                got: sources.len(),
            });
        }
        let n_observations = sources.first().map_or(0, Vec::len);
        if n_observations == 0 {
            return Err(Error::Validation("observation alphabet must be non-empty".into()));
        }
        let sources = sources
            .iter()
            .enumerate()
            .map(|(theta, row)| {
                if row.len() != n_observations {
                    return Err(Error::LengthMismatch {
                        expected: n_observations,
                        got: row.len(),
                    });
                }
                validate_distribution(row, &format!("source of parameter {theta}"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            prior,
            n_observations,
            horizon,
            likelihoods: Likelihoods::Iid(sources),
        })
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn n_parameters(&self) -> usize {
        self.prior.len()
    }

    pub fn n_observations(&self) -> usize {
        self.n_observations
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `P(. | theta, history)`.
    pub fn likelihood(&self, theta: usize, history: &[usize]) -> &[f64] {
        match &self.likelihoods {
            Likelihoods::Iid(sources) => &sources[theta],
            Likelihoods::Table(tables) => {
                let n = self.n_observations;
                let h = history.iter().fold(0, |acc, &o| acc * n + o);
                &tables[theta][history.len()][h * n..(h + 1) * n]
            }
        }
    }

    fn check_history(&self, history: &[usize], max_len: usize) -> Result<()> {
        if history.len() > max_len {
            return Err(Error::Validation(format!(
                "history of length {} exceeds the allowed {max_len}",
                history.len()
            )));
        }
        if let Some(&o) = history.iter().find(|&&o| o >= self.n_observations) {
            return Err(Error::InvalidSymbol {
                variable: "observation".into(),
                index: o,
                size: self.n_observations,
            });
        }
        Ok(())
    }

    /// Posterior after `history`, updated one symbol at a time.
    pub fn posterior(&self, history: &[usize]) -> Result<Vec<f64>> {
        self.check_history(history, self.horizon)?;
        let mut w = self.prior.clone();
        for k in 0..history.len() {
            for (theta, wt) in w.iter_mut().enumerate() {
                *wt *= self.likelihood(theta, &history[..k])[history[k]];
            }
            let z: f64 = w.iter().sum();
            if z <= 0.0 {
                return Err(Error::ZeroProbability(format!(
                    "observation history {:?} has probability zero under every parameter",
                    &history[..=k]
                )));
            }
            w.iter_mut().for_each(|x| *x /= z);
        }
        Ok(w)
    }

    /// Mixture distribution of the next symbol given a posterior.
    pub fn mixture(&self, posterior: &[f64], history: &[usize]) -> Vec<f64> {
        let mut p = vec![0.0; self.n_observations];
        for (theta, &w) in posterior.iter().enumerate() {
            if w > 0.0 {
                for (pi, l) in p.iter_mut().zip(self.likelihood(theta, history)) {
                    *pi += w * l;
                }
            }
        }
        p
    }

    /// Latent-parameter model: `theta` undisclosed, then `horizon` disclosed observations.
    pub fn to_causal_model(&self) -> Result<CausalModel> {
        let mut vars = vec![VariableSpec::new(
            "theta",
            Alphabet::indexed(self.prior.len()),
            IoType::UndisclosedInput,
            VpMode::Estimated,
        )];
        let obs = Alphabet::indexed(self.n_observations);
        vars.extend((0..self.horizon).map(|t| VariableSpec::input(format!("o{}", t + 1), obs.clone())));
        CausalModel::from_fn(vars, |t, prefix| {
            if t == 0 {
                self.prior.clone()
            } else {
                self.likelihood(prefix[0], &prefix[1..]).to_vec()
            }
        })
    }
}

fn decode(mut index: usize, t: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; t];
    for k in (0..t).rev() {
        out[k] = index % n;
        index /= n;
    }
    out
}

/// Posterior over parameters and predictive distribution of the next symbol after `history`.
pub fn predictive_update(problem: &EstimationProblem, history: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    problem.check_history(history, problem.horizon.saturating_sub(1))?;
    if problem.horizon == 0 {
        return Err(Error::Validation("no symbol left to predict at horizon 0".into()));
    }
    let posterior = problem.posterior(history)?;
    let predictive = problem.mixture(&posterior, history);
    Ok((posterior, predictive))
}

/// Batch Bayes: the full-history product of likelihoods, normalized once.
pub fn batch_posterior(problem: &EstimationProblem, history: &[usize]) -> Result<Vec<f64>> {
    problem.check_history(history, problem.horizon)?;
    let w: Vec<f64> = (0..problem.n_parameters())
        .map(|theta| {
            (0..history.len()).fold(problem.prior[theta], |acc, k| {
                acc * problem.likelihood(theta, &history[..k])[history[k]]
            })
        })
        .collect();
    let z: f64 = w.iter().sum();
    if z <= 0.0 {
        return Err(Error::ZeroProbability(format!("observation history {history:?}")));
    }
    Ok(w.into_iter().map(|x| x / z).collect())
}
