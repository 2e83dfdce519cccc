//! Exhaustive search over distributions on the geometric grid, for tiny
//! instances.
//!
//! A grid distribution gives each of `s` symbols a weight `r^-t` with
//! integer exponents `0 = t_1 <= ... <= t_s <= T`, normalized to sum to one
//! (to `1 - q` for pseudo profiles). `T = ceil(ln(n N) / ln r)` keeps the
//! smallest value above `1/(n N)` of the largest. Multisets are enumerated
//! depth first while a per-symbol dynamic program over the frequency
//! buckets still to be placed is extended incrementally.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::profiles::FrequencyProfile;

use super::likelihood::{lnfact, ProfileData};

/// Largest instance the exhaustive search accepts.
pub const GRID_MAX_SYMBOLS: usize = 8;
pub const GRID_MAX_LENGTH: usize = 8;

/// Best grid distribution for one domain size.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBest {
    pub domain_size: usize,
    pub log_likelihood: f64,
    /// Exponents `t` of the optimal multiset, ascending.
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub ratio: f64,
    /// One entry per domain size from the distinct count up to the maximum.
    pub per_domain: Vec<GridBest>,
}

impl GridOptimum {
    pub fn best_for(&self, domain_size: usize) -> Option<&GridBest> {
        self.per_domain.iter().find(|b| b.domain_size == domain_size)
    }
}

/// Largest grid exponent for sample length `n` and domain size `N`.
pub fn max_exponent(n: usize, domain_size: usize, ratio: f64) -> u32 {
    let x = ((n.max(1) * domain_size.max(1)) as f64).ln() / ratio.ln();
    x.ceil().max(0.0) as u32
}

struct Search<'a> {
    pd: &'a ProfileData,
    /// `w_t^j / j!` per exponent and bucket.
    pow: Vec<Vec<f64>>,
    weight: Vec<f64>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    nstates: usize,
    max_symbols: usize,
    t_limit: Vec<u32>,
    constant: f64,
    seen_draws: f64,
}

#[derive(Clone)]
struct Best {
    value: Vec<f64>,
    arg: Vec<Vec<u32>>,
}

impl Best {
    fn new(k: usize) -> Self {
        Self {
            value: vec![f64::NEG_INFINITY; k],
            arg: vec![Vec::new(); k],
        }
    }

    fn merge(mut self, other: Best) -> Best {
        for i in 0..self.value.len() {
            if other.value[i] > self.value[i] {
                self.value[i] = other.value[i];
                self.arg[i] = other.arg[i].clone();
            }
        }
        self
    }
}

impl Search<'_> {
    fn extend(&self, dp: &[f64], t: u32) -> Vec<f64> {
        let mut next = dp.to_vec();
        let pw = &self.pow[t as usize];
        for (r_idx, &v) in dp.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut rem = r_idx;
            for k in 0..self.dims.len() {
                let rk = rem % self.dims[k];
                rem /= self.dims[k];
                if rk > 0 {
                    next[r_idx - self.strides[k]] += v * pw[k];
                }
            }
        }
        next
    }

    fn record(&self, best: &mut Best, stack: &[u32], dp0: f64, wsum: f64) {
        if dp0 <= 0.0 {
            return;
        }
        let value = self.constant + dp0.ln() - self.seen_draws * wsum.ln();
        let s = stack.len();
        let t_last = *stack.last().expect("non-empty");
        for (i, &limit) in self.t_limit.iter().enumerate() {
            let domain = self.pd.distinct + i;
            if domain >= s && t_last <= limit && value > best.value[i] {
                best.value[i] = value;
                best.arg[i] = stack.to_vec();
            }
        }
    }

    fn dfs(&self, best: &mut Best, stack: &mut Vec<u32>, dp: &[f64], wsum: f64) {
        self.record(best, stack, dp[0], wsum);
        if stack.len() == self.max_symbols {
            return;
        }
        let t_max = *self.t_limit.last().expect("non-empty");
        let from = *stack.last().expect("non-empty");
        for t in from..=t_max {
            let next = self.extend(dp, t);
            stack.push(t);
            self.dfs(best, stack, &next, wsum + self.weight[t as usize]);
            stack.pop();
        }
    }
}

/// Exhaustive grid optimum of a profile for every domain size from its
/// distinct count up to `max_domain`, or of a pseudo profile over its subset
/// with outside mass `outside` (default `n_out / n`).
pub fn grid_optimum<P: FrequencyProfile + ?Sized>(
    phi: &P,
    max_domain: usize,
    ratio: f64,
    outside: Option<f64>,
) -> Result<GridOptimum> {
    let pd = ProfileData::new(phi);
    let max_domain = if pd.pseudo {
        pd.eligible
    } else {
        max_domain
    };
    if max_domain > GRID_MAX_SYMBOLS || pd.n > GRID_MAX_LENGTH {
        return Err(Error::OracleScale {
            domain: max_domain,
            length: pd.n,
            max_domain: GRID_MAX_SYMBOLS,
            max_length: GRID_MAX_LENGTH,
        });
    }
    if !(ratio > 1.0) {
        return Err(Error::Config(format!("grid ratio {ratio} must exceed 1")));
    }
    if pd.distinct == 0 || max_domain < pd.distinct {
        return Err(Error::Invalid("grid search needs a non-empty feasible profile".into()));
    }
    let domains: Vec<usize> = (pd.distinct..=max_domain).collect();
    let t_limit: Vec<u32> = domains.iter().map(|&d| max_exponent(pd.n, d, ratio)).collect();
    let t_max = *t_limit.last().expect("non-empty") as usize;
    let weight: Vec<f64> = (0..=t_max).map(|t| ratio.powi(-(t as i32))).collect();
    let pow: Vec<Vec<f64>> = weight
        .iter()
        .map(|&w| pd.freqs.iter().map(|&j| w.powi(j as i32) / lnfact(j as f64).exp()).collect())
        .collect();
    let dims: Vec<usize> = pd.counts.iter().map(|c| c + 1).collect();
    let mut strides = vec![1usize; dims.len()];
    for k in 1..dims.len() {
        strides[k] = strides[k - 1] * dims[k - 1];
    }
    let nstates: usize = dims.iter().product();
    let seen_draws = (pd.n - pd.n_out) as f64;
    let q = if pd.n_out > 0 {
        outside.unwrap_or(pd.n_out as f64 / pd.n as f64)
    } else {
        outside.unwrap_or(0.0)
    };
    let mut constant = lnfact(pd.n as f64) - lnfact(pd.n_out as f64);
    if pd.n_out > 0 {
        constant += pd.n_out as f64 * q.ln();
    }
    if seen_draws > 0.0 {
        constant += seen_draws * (1.0 - q).ln();
    }
    let search = Search {
        pd: &pd,
        pow,
        weight,
        dims,
        strides,
        nstates,
        max_symbols: max_domain,
        t_limit,
        constant,
        seen_draws,
    };

    let mut root = vec![0.0; search.nstates];
    root[search.nstates - 1] = 1.0;
    let first = search.extend(&root, 0);
    let w0 = search.weight[0];

    let mut best = Best::new(domains.len());
    search.record(&mut best, &[0], first[0], w0);
    let branches: Vec<Best> = if max_domain >= 2 {
        (0..=t_max as u32)
            .into_par_iter()
            .map(|t2| {
                let mut b = Best::new(domains.len());
                let mut stack = vec![0, t2];
                let dp = search.extend(&first, t2);
                search.dfs(&mut b, &mut stack, &dp, w0 + search.weight[t2 as usize]);
                b
            })
            .collect()
    } else {
        Vec::new()
    };
    for b in branches {
        best = best.merge(b);
    }
    Ok(GridOptimum {
        ratio,
        per_domain: domains
            .iter()
            .enumerate()
            .map(|(i, &d)| GridBest {
                domain_size: d,
                log_likelihood: best.value[i],
                exponents: best.arg[i].clone(),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pml::{profile_probability_exact, DiscreteDistribution};
    use crate::profiles::Profile;
    use approx::assert_abs_diff_eq;

    #[test]
    fn max_exponent_examples() {
        // ln(36) / ln(1.05) = 73.4
        assert_eq!(max_exponent(6, 6, 1.05), 74);
        assert_eq!(max_exponent(1, 1, 1.05), 0);
    }

    #[test]
    fn optimum_value_matches_oracle() {
        let phi = Profile::new([(2, 1), (1, 1)], 4).unwrap();
        let opt = grid_optimum(&phi, 4, 1.05, None).unwrap();
        for b in &opt.per_domain {
            let w: Vec<f64> = b.exponents.iter().map(|&t| 1.05f64.powi(-(t as i32))).collect();
            let tot: f64 = w.iter().sum();
            let mut probs: Vec<f64> = w.iter().map(|x| x / tot).collect();
            probs.resize(b.domain_size, 0.0);
            let d = DiscreteDistribution::from_probs(&probs).unwrap();
            let exact = profile_probability_exact(&d, &phi).unwrap().ln();
            assert_abs_diff_eq!(b.log_likelihood, exact, epsilon = 1e-10);
        }
    }

    #[test]
    fn all_distinct_prefers_uniform() {
        let phi = Profile::new([(1, 2)], 3).unwrap();
        let opt = grid_optimum(&phi, 3, 1.05, None).unwrap();
        let b = opt.best_for(3).unwrap();
        assert_eq!(b.exponents, vec![0, 0, 0]);
        // uniform over 3: 3 * 2 / 9
        assert_abs_diff_eq!(b.log_likelihood, (6.0f64 / 9.0).ln(), epsilon = 1e-12);
    }
}
