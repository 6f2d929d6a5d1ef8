//! Base-2 log-domain arithmetic and simplex helpers.
//!
//! All information quantities in this crate are measured in bits.

use crate::error::{Error, Result};

/// Tolerance on the sum of a probability vector accepted as already normalized.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Vectors whose sum is off by less than this are renormalized; others are rejected.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// `log2(sum_i 2^{x_i})`, stable for large magnitudes. Returns `-inf` when every
/// term is `-inf` or the slice is empty.
pub fn log2_sum_exp2(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp2()).sum();
    max + sum.log2()
}

/// Normalizes base-2 log weights into a probability vector.
///
/// Returns the vector together with `log2` of the normalizer.
pub fn normalize_log2(log_weights: &[f64]) -> Result<(Vec<f64>, f64)> {
    let log_z = log2_sum_exp2(log_weights);
    if !log_z.is_finite() {
        return Err(Error::Degenerate(format!(
            "log-normalizer is {log_z}; no finite weight to normalize"
        )));
    }
    let p = log_weights.iter().map(|&w| (w - log_z).exp2()).collect();
    Ok((p, log_z))
}

/// Checks that `p` is a probability vector, renormalizing small drift.
pub fn validate_distribution(p: &[f64], context: &str) -> Result<Vec<f64>> {
    if p.is_empty() {
        return Err(Error::Validation(format!("{context}: empty distribution")));
    }
    for &v in p {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidProbability {
                context: context.to_string(),
                value: v,
            });
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() <= NORMALIZATION_TOL {
        Ok(p.to_vec())
    } else if (sum - 1.0).abs() <= RENORMALIZE_TOL {
        Ok(p.iter().map(|v| v / sum).collect())
    } else {
        Err(Error::NotNormalized {
            context: context.to_string(),
            sum,
        })
    }
}

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.log2())
        .sum::<f64>()
}

/// `KL(p || q)` in bits. `+inf` when `p` puts mass where `q` has none.
pub fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return f64::INFINITY;
        }
        acc += pi * (pi / qi).log2();
    }
    acc
}

/// `sum_i p_i u_i` with the convention `0 * (-inf) = 0`.
pub fn expectation(p: &[f64], u: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), u.len());
    p.iter()
        .zip(u)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &ui)| pi * ui)
        .sum()
}

/// Total-variation distance.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// One-hot vector of length `n` at `index`.
pub fn one_hot(n: usize, index: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[index] = 1.0;
    v
}

/// Draws an index from a probability vector.
pub fn sample_categorical<R: rand::Rng + ?Sized>(p: &[f64], rng: &mut R) -> Result<usize> {
    use rand::distributions::{Distribution, WeightedIndex};
    let dist = WeightedIndex::new(p).map_err(|e| Error::Degenerate(format!("cannot sample from {p:?}: {e}")))?;
    Ok(dist.sample(rng))
}

/// Largest absolute componentwise difference.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if x == y {
                0.0
            } else {
                (x - y).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log2_sum_exp2_matches_direct_sum() {
        let xs = [1.0, 0.0, -3.0];
        let direct = (2f64 + 1.0 + 0.125).log2();
        assert!((log2_sum_exp2(&xs) - direct).abs() < 1e-14);
    }

    #[test]
    fn log2_sum_exp2_survives_huge_exponents() {
        let xs = [1e6, 1e6];
        assert!((log2_sum_exp2(&xs) - (1e6 + 1.0)).abs() < 1e-9);
        assert_eq!(log2_sum_exp2(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert_eq!(log2_sum_exp2(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn validation_renormalizes_small_drift_only() {
        let p = validate_distribution(&[0.5, 0.5 + 5e-10], "t").unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(
            validate_distribution(&[0.5, 0.4], "row 3"),
            Err(Error::NotNormalized { .. })
        ));
        assert!(validate_distribution(&[1.5, -0.5], "t").is_err());
    }

    #[test]
    fn kl_handles_support_mismatch() {
        assert_eq!(kl_bits(&[1.0, 0.0], &[0.5, 0.5]), 1.0);
        assert_eq!(kl_bits(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
        assert_eq!(kl_bits(&[0.0, 1.0], &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }
}
