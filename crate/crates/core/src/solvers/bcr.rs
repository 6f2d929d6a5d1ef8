//! Adaptive control by posterior mixing of per-parameter controllers.
//!
//! Actions are the agent's own interventions, so only observations carry
//! evidence about the parameter. The agent keeps just the posterior and the
//! interaction log, so long runs stay cheap.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::{sample_categorical, validate_distribution};
use crate::solvers::control::Interaction;

/// One parameter value: a controller and an observation model.
pub trait Hypothesis: Send + Sync {
    /// `P(a_t | theta, history)`.
    fn action_distribution(&self, history: &[Interaction]) -> Vec<f64>;

    /// `P(o_t | theta, history, a_t)`.
    fn observation_likelihood(&self, history: &[Interaction], action: usize, observation: usize) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// Sample from the posterior-weighted mixture of controllers.
    #[default]
    Mixture,
    /// Sample a parameter from the posterior, then an action from its controller.
    PosteriorSample,
}

#[derive(Clone)]
pub struct BcrAgent {
    hypotheses: Vec<Arc<dyn Hypothesis>>,
    posterior: Vec<f64>,
    n_actions: usize,
    n_observations: usize,
    log: Vec<Interaction>,
    likelihood_floor: Option<f64>,
    mode: SamplingMode,
}

impl fmt::Debug for BcrAgent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BcrAgent")
            .field("posterior", &self.posterior)
            .field("n_actions", &self.n_actions)
            .field("n_observations", &self.n_observations)
            .field("steps", &self.log.len())
            .field("likelihood_floor", &self.likelihood_floor)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

impl BcrAgent {
    pub fn new(
        prior: Vec<f64>,
        hypotheses: Vec<Arc<dyn Hypothesis>>,
        n_actions: usize,
        n_observations: usize,
    ) -> Result<Self> {
        let posterior = validate_distribution(&prior, "parameter prior")?;
        if hypotheses.len() != posterior.len() {
            return Err(Error::LengthMismatch {
                expected: posterior.len(),
                got: hypotheses.len(),
            });
        }
        if n_actions == 0 || n_observations == 0 {
            return Err(Error::Validation("action and observation alphabets must be non-empty".into()));
        }
        Ok(Self {
            hypotheses,
            posterior,
            n_actions,
            n_observations,
            log: Vec::new(),
            likelihood_floor: None,
            mode: SamplingMode::default(),
        })
    }

    /// Replaces likelihoods below `eps` by `eps`. Off by default, in which case a
    /// zero likelihood removes a parameter for good.
    pub fn with_likelihood_floor(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Validation(format!("likelihood floor must lie in (0, 1), got {eps}")));
        }
        self.likelihood_floor = Some(eps);
        Ok(self)
    }

    pub fn with_sampling_mode(mut self, mode: SamplingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn sampling_mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    pub fn history(&self) -> &[Interaction] {
        &self.log
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_observations(&self) -> usize {
        self.n_observations
    }

    fn controller(&self, theta: usize) -> Result<Vec<f64>> {
        let p = self.hypotheses[theta].action_distribution(&self.log);
        if p.len() != self.n_actions {
            return Err(Error::LengthMismatch {
                expected: self.n_actions,
                got: p.len(),
            });
        }
        validate_distribution(&p, &format!("controller of parameter {theta}"))
    }

    /// `sum_theta w(theta) P(a | theta, history)`.
    pub fn action_distribution(&self) -> Result<Vec<f64>> {
        let mut mix = vec![0.0; self.n_actions];
        for (theta, &w) in self.posterior.iter().enumerate() {
            if w > 0.0 {
                for (m, p) in mix.iter_mut().zip(self.controller(theta)?) {
                    *m += w * p;
                }
            }
        }
        Ok(mix)
    }

    /// Samples an action with the agent's sampling mode.
    pub fn act<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        self.act_with(rng, self.mode)
    }

    pub fn act_with<R: Rng + ?Sized>(&self, rng: &mut R, mode: SamplingMode) -> Result<usize> {
        match mode {
            SamplingMode::Mixture => sample_categorical(&self.action_distribution()?, rng),
            SamplingMode::PosteriorSample => {
                let theta = sample_categorical(&self.posterior, rng)?;
                sample_categorical(&self.controller(theta)?, rng)
            }
        }
    }

    /// Bayes update on the observation alone; the action adds no likelihood factor.
    pub fn observe(mut self, action: usize, observation: usize) -> Result<Self> {
        if action >= self.n_actions {
            return Err(Error::InvalidSymbol {
                variable: "action".into(),
                index: action,
                size: self.n_actions,
            });
        }
        if observation >= self.n_observations {
            return Err(Error::InvalidSymbol {
                variable: "observation".into(),
                index: observation,
                size: self.n_observations,
            });
        }
        let mut z = 0.0;
        for (theta, w) in self.posterior.iter_mut().enumerate() {
            if *w > 0.0 {
                let mut l = self.hypotheses[theta].observation_likelihood(&self.log, action, observation);
                if let Some(eps) = self.likelihood_floor {
                    l = l.max(eps);
                }
                *w *= l;
                z += *w;
            }
        }
        if z.is_nan() || z <= 0.0 {
            return Err(Error::ZeroProbability(format!(
                "observation {observation} after action {action} at step {} is impossible under every parameter",
                self.log.len() + 1
            )));
        }
        self.posterior.iter_mut().for_each(|w| *w /= z);
        self.log.push((action, observation));
        Ok(self)
    }
}
