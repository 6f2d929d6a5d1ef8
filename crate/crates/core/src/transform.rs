//! Constrained transformation of a single-variable measure.
//!
//! Adding a target utility `u*` to a system with measure `p_i` changes its
//! free utility by `sum p_f u* - alpha KL(p_f || p_i)`. Fixing `p_i` and
//! maximizing over `p_f` is control; fixing `p_f` and optimizing over `p_i`
//! is estimation.

use crate::conjugate::Temperature;
use crate::error::{Error, Result};
use crate::numeric::{expectation, kl_bits, log2_sum_exp2, normalize_log2, validate_distribution};

#[derive(Debug, Clone, PartialEq)]
pub struct TransformProblem {
    prior: Vec<f64>,
    target_utility: Vec<f64>,
    alpha: Temperature,
}

impl TransformProblem {
    pub fn new(prior: Vec<f64>, target_utility: Vec<f64>, alpha: Temperature) -> Result<Self> {
        let prior = validate_distribution(&prior, "prior")?;
        if prior.len() != target_utility.len() {
            return Err(Error::Validation(format!(
                "prior has {} symbols, target utility {}",
                prior.len(),
                target_utility.len()
            )));
        }
        if target_utility.iter().any(|u| u.is_nan() || *u == f64::INFINITY) {
            return Err(Error::Validation("target utilities must be real or -inf".into()));
        }
        Ok(Self {
            prior,
            target_utility,
            alpha,
        })
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn target_utility(&self) -> &[f64] {
        &self.target_utility
    }

    pub fn alpha(&self) -> Temperature {
        self.alpha
    }

    fn log_weights(&self) -> Vec<f64> {
        let a = self.alpha.value();
        self.prior
            .iter()
            .zip(&self.target_utility)
            .map(|(&p, &u)| {
                if p > 0.0 {
                    p.log2() + u / a
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }

    /// Optimal value of the control problem, `alpha log2 sum p_i 2^{u*/alpha}`.
    pub fn log_partition_value(&self) -> f64 {
        self.alpha.value() * log2_sum_exp2(&self.log_weights())
    }
}

/// `sum p_f u* - alpha KL(p_f || p_i)` in utility units; `-inf` when `p_f` is
/// not absolutely continuous with respect to `p_i`.
pub fn free_utility_difference(p_i: &[f64], p_f: &[f64], u_star: &[f64], alpha: Temperature) -> f64 {
    assert_eq!(p_i.len(), p_f.len());
    assert_eq!(p_f.len(), u_star.len());
    let kl = kl_bits(p_f, p_i);
    if kl == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    expectation(p_f, u_star) - alpha.value() * kl
}

/// `p_f(x) ∝ p_i(x) 2^{u*(x)/alpha}`, the maximizer of [`free_utility_difference`].
pub fn control_solution(problem: &TransformProblem) -> Result<Vec<f64>> {
    normalize_log2(&problem.log_weights())
        .map(|(p, _)| p)
        .map_err(|_| Error::Degenerate("prior support and finite target utilities are disjoint".into()))
}

/// The minimum relative entropy estimate of a fixed final measure is that measure.
pub fn estimation_solution(p_f: &[f64]) -> Vec<f64> {
    p_f.to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{one_hot, total_variation};

    fn t(a: f64) -> Temperature {
        Temperature::new(a).unwrap()
    }

    #[test]
    fn free_utility_difference_examples() {
        let p = [0.3, 0.7];
        assert_eq!(free_utility_difference(&p, &p, &[0.0, 0.0], t(1.0)), 0.0);
        assert_eq!(free_utility_difference(&[0.5, 0.5], &[1.0, 0.0], &[0.0, 0.0], t(1.0)), -1.0);
        let v = free_utility_difference(&[0.5, 0.5], &[2.0 / 3.0, 1.0 / 3.0], &[1.0, 0.0], t(1.0));
        // equals log2(3) - 1
        assert!((v - (3f64.log2() - 1.0)).abs() < 1e-12);
        assert!((v - 0.585).abs() < 1e-3);
    }

    #[test]
    fn free_utility_difference_is_neg_inf_without_absolute_continuity() {
        let v = free_utility_difference(&[1.0, 0.0], &[0.5, 0.5], &[0.0, 10.0], t(1.0));
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn control_solution_examples() {
        let p = TransformProblem::new(vec![0.5, 0.5], vec![1.0, 0.0], t(1.0)).unwrap();
        let s = control_solution(&p).unwrap();
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-15);

        let prior = vec![0.1, 0.2, 0.3, 0.4];
        let u = vec![0.5, 2.0, 1.0, -1.0];
        let cold = TransformProblem::new(prior.clone(), u.clone(), t(1e-6)).unwrap();
        assert!(total_variation(&control_solution(&cold).unwrap(), &one_hot(4, 1)) < 1e-3);
        let hot = TransformProblem::new(prior.clone(), u, t(1e6)).unwrap();
        assert!(total_variation(&control_solution(&hot).unwrap(), &prior) < 1e-3);
    }

    #[test]
    fn control_solution_value_equals_log_partition() {
        let p = TransformProblem::new(vec![0.2, 0.5, 0.3], vec![1.0, -0.5, 2.0], t(0.8)).unwrap();
        let s = control_solution(&p).unwrap();
        let v = free_utility_difference(p.prior(), &s, p.target_utility(), p.alpha());
        assert!((v - p.log_partition_value()).abs() < 1e-12);
    }

    #[test]
    fn control_solution_preserves_zero_support_and_errors_when_empty() {
        let p = TransformProblem::new(vec![0.0, 1.0, 0.0], vec![5.0, 0.0, 1.0], t(1.0)).unwrap();
        assert_eq!(control_solution(&p).unwrap(), vec![0.0, 1.0, 0.0]);
        let p = TransformProblem::new(vec![1.0, 0.0], vec![f64::NEG_INFINITY, 0.0], t(1.0)).unwrap();
        assert!(matches!(control_solution(&p), Err(Error::Degenerate(_))));
    }

    #[test]
    fn estimation_solution_is_identity() {
        assert_eq!(estimation_solution(&[0.3, 0.7]), vec![0.3, 0.7]);
        assert_eq!(estimation_solution(&[0.0, 1.0]), vec![0.0, 1.0]);
        assert_eq!(estimation_solution(&[0.25; 4]), vec![0.25; 4]);
    }

    #[test]
    fn problem_validation() {
        assert!(TransformProblem::new(vec![0.5, 0.4], vec![0.0, 0.0], t(1.0)).is_err());
        assert!(TransformProblem::new(vec![0.5, 0.5], vec![0.0], t(1.0)).is_err());
    }
}
