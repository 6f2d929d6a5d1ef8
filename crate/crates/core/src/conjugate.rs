//! Conversion between probability measures and utility functions.
//!
//! A measure `p` and utility `u` are conjugate at temperature `alpha` when
//! `u(x) = alpha * log2 p(x) + beta` for a constant `beta`. Read the other way,
//! `p` is the Gibbs measure `p(x) ∝ 2^{u(x)/alpha}`, and it is the unique
//! maximizer of the free utility `sum p u - alpha sum p log2 p`, whose maximum
//! value is `beta`.

use crate::error::{Error, Result};
use crate::numeric::{entropy_bits, expectation, normalize_log2, validate_distribution};

/// Gap tolerance used by [`verify_conjugacy`].
pub const CONJUGACY_TOL: f64 = 1e-9;

/// Conversion factor between bits and utility. Strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidTemperature(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Temperature {
    type Error = Error;

    fn try_from(alpha: f64) -> Result<Self> {
        Self::new(alpha)
    }
}

/// Utilities over an alphabet; `-inf` marks impossible symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityVector {
    pub values: Vec<f64>,
    /// Utility of the sure event.
    pub beta: f64,
}

impl UtilityVector {
    pub fn new(values: Vec<f64>, beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::Validation(format!("beta must be finite, got {beta}")));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Validation("utilities must be real or -inf".into()));
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(Error::Degenerate("every utility is -inf".into()));
        }
        Ok(Self { values, beta })
    }

    /// Energy levels `E(x) = -U(x)`.
    pub fn energies(&self) -> Vec<f64> {
        self.values.iter().map(|u| -u).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeUtilityReport {
    pub expected_utility: f64,
    /// `alpha * H(p)` in utility units.
    pub entropy_term: f64,
    pub total: f64,
}

/// `U(x) = alpha * log2 p(x) + beta`; zero probabilities map to `-inf`.
pub fn utility_from_measure(p: &[f64], alpha: Temperature, beta: f64) -> Result<UtilityVector> {
    let p = validate_distribution(p, "measure")?;
    let values = p.iter().map(|&pi| alpha.0 * pi.log2() + beta).collect();
    UtilityVector::new(values, beta)
}

/// Gibbs measure of `u` at temperature `alpha`, and the `beta = alpha * log2 Z`
/// that makes the pair conjugate.
pub fn measure_from_utility(u: &[f64], alpha: Temperature) -> Result<(Vec<f64>, f64)> {
    if u.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::Validation("utilities must be real or -inf".into()));
    }
    let scaled: Vec<f64> = u.iter().map(|&v| v / alpha.0).collect();
    let (p, log_z) = normalize_log2(&scaled)
        .map_err(|_| Error::Degenerate("every utility is -inf".into()))?;
    Ok((p, alpha.0 * log_z))
}

/// Free utility `sum p u - alpha sum p log2 p`, with `0 log 0 = 0` and `0 * (-inf) = 0`.
///
/// Mass on a `-inf` utility makes the total `-inf`.
pub fn free_utility(p: &[f64], u: &[f64], alpha: Temperature) -> FreeUtilityReport {
    assert_eq!(p.len(), u.len(), "measure and utility over different alphabets");
    let expected_utility = expectation(p, u);
    let entropy_term = alpha.0 * entropy_bits(p);
    FreeUtilityReport {
        expected_utility,
        entropy_term,
        total: expected_utility + entropy_term,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugacyCheck {
    pub conjugate: bool,
    /// Spread of `u(x) - alpha log2 p(x)` over the support of `p`.
    pub max_deviation: f64,
}

/// Checks that `u - alpha log2 p` is constant on the support of `p` and that
/// `u = -inf` exactly off the support.
pub fn verify_conjugacy(p: &[f64], u: &[f64], alpha: Temperature) -> ConjugacyCheck {
    let reject = ConjugacyCheck {
        conjugate: false,
        max_deviation: f64::INFINITY,
    };
    if p.len() != u.len() {
        return reject;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&pi, &ui) in p.iter().zip(u) {
        if pi > 0.0 {
            if !ui.is_finite() {
                return reject;
            }
            let gap = ui - alpha.0 * pi.log2();
            lo = lo.min(gap);
            hi = hi.max(gap);
        } else if ui != f64::NEG_INFINITY {
            return reject;
        }
    }
    if lo > hi {
        return reject;
    }
    let max_deviation = hi - lo;
    ConjugacyCheck {
        conjugate: max_deviation <= CONJUGACY_TOL,
        max_deviation,
    }
}
