//! Exact likelihoods by enumeration, for tiny instances and for testing the
//! scalable code paths.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::profiles::{FrequencyProfile, Profile, PseudoProfile, SampleSequence};

use super::DiscreteDistribution;

pub const ORACLE_MAX_DOMAIN: usize = 8;
pub const ORACLE_MAX_LENGTH: usize = 8;

/// `prod_i p(y_i)`. Symbols outside the distribution's domain have
/// probability 0.
pub fn sequence_probability(p: &DiscreteDistribution, seq: &SampleSequence) -> f64 {
    let probs = p.probabilities();
    seq.symbols()
        .iter()
        .map(|&s| probs.get(s as usize).copied().unwrap_or(0.0))
        .product()
}

fn check_scale(domain: usize, length: usize) -> Result<()> {
    if domain > ORACLE_MAX_DOMAIN || length > ORACLE_MAX_LENGTH {
        return Err(Error::OracleScale {
            domain,
            length,
            max_domain: ORACLE_MAX_DOMAIN,
            max_length: ORACLE_MAX_LENGTH,
        });
    }
    Ok(())
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Sum over all ways of giving each listed symbol a count from the profile
/// (or zero) that use up the profile exactly, of
/// `n! / (prod_x c_x! * n_out!) * prod_x p_x^{c_x} * q^{n_out}`.
fn enumerate(probs: &[f64], phi: &BTreeMap<usize, usize>, n: usize, q: f64) -> f64 {
    let freqs: Vec<usize> = phi.keys().copied().collect();
    let mut remaining: Vec<usize> = phi.values().copied().collect();
    let left: usize = remaining.iter().sum();

    fn rec(
        probs: &[f64],
        freqs: &[usize],
        remaining: &mut [usize],
        left: usize,
        idx: usize,
        acc: f64,
    ) -> f64 {
        if left == 0 {
            return acc;
        }
        if idx == probs.len() || probs.len() - idx < left {
            return 0.0;
        }
        let p = probs[idx];
        // this symbol unseen
        let mut total = rec(probs, freqs, remaining, left, idx + 1, acc);
        for k in 0..freqs.len() {
            if remaining[k] == 0 || p == 0.0 {
                continue;
            }
            let j = freqs[k];
            remaining[k] -= 1;
            let w = p.powi(j as i32) / factorial(j);
            total += rec(probs, freqs, remaining, left - 1, idx + 1, acc * w);
            remaining[k] += 1;
        }
        total
    }

    let inner = rec(probs, &freqs, &mut remaining, left, 0, 1.0);
    let seen: usize = phi.iter().map(|(j, c)| j * c).sum();
    let n_out = n - seen;
    inner * factorial(n) / factorial(n_out) * q.powi(n_out as i32)
}

/// Exact probability that a sample of length `n` drawn from `p` has profile
/// `phi`.
pub fn profile_probability_exact(p: &DiscreteDistribution, phi: &Profile) -> Result<f64> {
    check_scale(p.domain_size(), phi.length())?;
    Ok(enumerate(&p.probabilities(), phi.phi(), phi.length(), 0.0))
}

/// Exact probability that a full-domain sample of length `n` from `p` has
/// `S`-restricted profile `phi_s`; draws outside `S` are unconstrained.
pub fn pseudo_profile_probability_exact(p: &DiscreteDistribution, phi_s: &PseudoProfile) -> Result<f64> {
    check_scale(p.domain_size(), phi_s.length())?;
    let all = p.probabilities();
    let in_s: Vec<f64> = phi_s
        .subset()
        .iter()
        .map(|s| all.get(s as usize).copied().unwrap_or(0.0))
        .collect();
    let q = (1.0 - in_s.iter().sum::<f64>()).max(0.0);
    Ok(enumerate(&in_s, phi_s.phi(), phi_s.length(), q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::SymbolSet;
    use approx::assert_abs_diff_eq;

    fn half() -> DiscreteDistribution {
        DiscreteDistribution::from_probs(&[0.5, 0.5]).unwrap()
    }

    #[test]
    fn sequence_examples() {
        let s = SampleSequence::new(vec![0, 1], 2).unwrap();
        assert_eq!(sequence_probability(&half(), &s), 0.25);
        let point = DiscreteDistribution::from_probs(&[1.0]).unwrap();
        let s = SampleSequence::new(vec![0, 0, 0], 1).unwrap();
        assert_eq!(sequence_probability(&point, &s), 1.0);
        let s = SampleSequence::new(vec![0, 2], 3).unwrap();
        assert_eq!(sequence_probability(&half(), &s), 0.0);
    }

    #[test]
    fn profile_examples() {
        let phi = Profile::new([(2, 1)], 2).unwrap();
        assert_abs_diff_eq!(profile_probability_exact(&half(), &phi).unwrap(), 0.5, epsilon = 1e-15);
        let phi = Profile::new([(1, 2)], 2).unwrap();
        assert_abs_diff_eq!(profile_probability_exact(&half(), &phi).unwrap(), 0.5, epsilon = 1e-15);
        let point = DiscreteDistribution::from_probs(&[1.0]).unwrap();
        let phi = Profile::new([(3, 1)], 1).unwrap();
        assert_abs_diff_eq!(profile_probability_exact(&point, &phi).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pseudo_examples() {
        let s0 = SymbolSet::from_symbols(2, [0]).unwrap();
        let phi = PseudoProfile::new(s0, [(1, 1)], 2).unwrap();
        assert_abs_diff_eq!(
            pseudo_profile_probability_exact(&half(), &phi).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        let empty = PseudoProfile::new(SymbolSet::empty(2), [], 3).unwrap();
        assert_abs_diff_eq!(
            pseudo_profile_probability_exact(&half(), &empty).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn scale_cap() {
        let p = DiscreteDistribution::uniform(9, 9).unwrap();
        let phi = Profile::new([(1, 2)], 9).unwrap();
        assert!(matches!(
            profile_probability_exact(&p, &phi),
            Err(Error::OracleScale { .. })
        ));
    }
}
