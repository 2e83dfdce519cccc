//! Property evaluation and the estimators used on each side of the
//! partition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pml::DiscreteDistribution;
use crate::poly::{
    dtu_poly_config, dtu_radius, entropy_poly_config, falling_factorial_estimate, raw_monomial_estimate,
    select_dtu_case, DtuCase, PolyApprox, PolyConfig,
};
use crate::profiles::{Histogram, SymbolSet};

/// A separable symmetric property `sum_x g(p_x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Property {
    /// Shannon entropy in nats.
    Entropy,
    /// L1 distance to the uniform distribution on `domain_size` symbols.
    Dtu { domain_size: usize },
    /// Number of symbols with positive probability; `k` bounds the inverse
    /// of the smallest nonzero probability.
    Support { k: usize },
}

impl Property {
    pub fn name(&self) -> &'static str {
        match self {
            Property::Entropy => "entropy",
            Property::Dtu { .. } => "dtu",
            Property::Support { .. } => "support",
        }
    }

    pub fn g(&self, p: f64) -> f64 {
        match *self {
            Property::Entropy => {
                if p <= 0.0 {
                    0.0
                } else {
                    -p * p.ln()
                }
            }
            Property::Dtu { domain_size } => (p - 1.0 / domain_size as f64).abs(),
            Property::Support { .. } => {
                if p > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Largest value of the property on a domain of size `domain_size`.
    pub fn max_value(&self, domain_size: usize) -> f64 {
        match *self {
            Property::Entropy => (domain_size.max(1) as f64).ln(),
            Property::Dtu { .. } => 2.0,
            Property::Support { k } => k.min(domain_size) as f64,
        }
    }
}

/// Bias correction added to the empirical part.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    None,
    /// `1/(2n)` per symbol of the set seen in the sample.
    #[default]
    PerSymbolHalf,
    /// `|set| / n`.
    SBarOverN,
}

/// Output of the end-to-end estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Clamped sum of the three components.
    pub value: f64,
    pub bad_set_value: f64,
    pub good_set_value: f64,
    pub bias_correction: f64,
    pub s_size: usize,
    pub s_bar_size: usize,
    pub emp_frac: f64,
}

/// `sum_x g(p_x)` over `subset`, or over the whole domain.
pub fn plugin_property(p: &DiscreteDistribution, prop: Property, subset: Option<&SymbolSet>) -> f64 {
    match subset {
        None => {
            let zeros = p.domain_size() - p.support_size();
            p.levels().iter().map(|l| l.mult as f64 * prop.g(l.prob)).sum::<f64>() + zeros as f64 * prop.g(0.0)
        }
        Some(s) => {
            let probs = p.probabilities();
            s.iter()
                .map(|x| prop.g(probs.get(x as usize).copied().unwrap_or(0.0)))
                .sum()
        }
    }
}

/// `sum_{x in subset} g(n_x / n)`; symbols of the subset missing from the
/// histogram contribute `g(0)`.
pub fn empirical_plugin(hist: &Histogram, prop: Property, subset: &SymbolSet) -> f64 {
    let n = hist.total();
    if n == 0 {
        return subset.len() as f64 * prop.g(0.0);
    }
    let mut seen = 0usize;
    let mut total = 0.0;
    for (s, c) in hist.iter() {
        if subset.contains(s) {
            seen += 1;
            total += prop.g(c as f64 / n as f64);
        }
    }
    total + (subset.len() - seen) as f64 * prop.g(0.0)
}

/// The additive bias correction of the empirical part. Only entropy is
/// corrected.
pub fn bias_correction(hist: &Histogram, prop: Property, subset: &SymbolSet, correction: Correction) -> f64 {
    let n = hist.total();
    if n == 0 || prop != Property::Entropy {
        return 0.0;
    }
    match correction {
        Correction::None => 0.0,
        Correction::PerSymbolHalf => {
            let seen = hist.iter().filter(|&(s, _)| subset.contains(s)).count();
            seen as f64 / (2.0 * n as f64)
        }
        Correction::SBarOverN => subset.len() as f64 / n as f64,
    }
}

/// Empirical plug-in on `subset` plus the chosen correction.
pub fn empirical_with_bias(hist: &Histogram, prop: Property, subset: &SymbolSet, correction: Correction) -> f64 {
    empirical_plugin(hist, prop, subset) + bias_correction(hist, prop, subset, correction)
}

/// Which rule the per-symbol estimator applies to a symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Polynomial,
    Zero,
    PlugIn,
}

/// The polynomial and branch thresholds of the per-symbol estimator.
#[derive(Debug, Clone)]
pub struct PerSymbolRule {
    pub prop: Property,
    pub cfg: PolyConfig,
    pub approx: PolyApprox,
    pub dtu_case: Option<DtuCase>,
}

impl PerSymbolRule {
    pub fn new(prop: Property, cfg: &PolyConfig) -> Result<Self> {
        let (approx, dtu_case) = match prop {
            Property::Entropy => (entropy_poly_config(cfg)?, None),
            Property::Dtu { domain_size } => {
                if domain_size != cfg.domain_size {
                    return Err(Error::Invalid(format!(
                        "property domain {domain_size} differs from estimator domain {}",
                        cfg.domain_size
                    )));
                }
                let case = select_dtu_case(cfg);
                (dtu_poly_config(cfg, case)?, Some(case))
            }
            Property::Support { .. } => {
                return Err(Error::Invalid("the per-symbol estimator covers entropy and dtu".into()))
            }
        };
        Ok(Self {
            prop,
            cfg: *cfg,
            approx,
            dtu_case,
        })
    }

    /// Plug-in branch offset `g_n`.
    pub fn g_n(&self) -> f64 {
        match self.prop {
            Property::Entropy => 1.0 / (2.0 * self.cfg.n as f64),
            _ => 0.0,
        }
    }

    pub fn branch(&self, first: usize, second: usize) -> Branch {
        let ln_nn = (self.cfg.domain_size as f64).ln();
        let n = self.cfg.n as f64;
        let (first_small, second_small) = match self.dtu_case {
            Some(DtuCase::Centered) => {
                let u = 1.0 / self.cfg.domain_size as f64;
                (
                    (first as f64 / n - u).abs() < dtu_radius(self.cfg.c2, &self.cfg),
                    (second as f64 / n - u).abs() < dtu_radius(self.cfg.c1, &self.cfg),
                )
            }
            _ => ((first as f64) < self.cfg.c2 * ln_nn, (second as f64) < self.cfg.c1 * ln_nn),
        };
        match (first_small, second_small) {
            (true, true) => Branch::Polynomial,
            (true, false) => Branch::Zero,
            (false, _) => Branch::PlugIn,
        }
    }

    /// Contribution `g_y` of one symbol with first-half count `first` and
    /// second-half count `second`.
    pub fn value(&self, first: usize, second: usize) -> Result<f64> {
        let n = self.cfg.n;
        Ok(match self.branch(first, second) {
            Branch::Polynomial => {
                if self.cfg.raw_monomials {
                    raw_monomial_estimate(&self.approx, second, n)?
                } else {
                    falling_factorial_estimate(&self.approx, second, n)?
                }
            }
            Branch::Zero => 0.0,
            Branch::PlugIn => {
                let g_n = if second > 0 { self.g_n() } else { 0.0 };
                self.prop.g(second as f64 / n as f64) + g_n
            }
        })
    }
}

/// Unclamped sum of the per-symbol values over `subset`.
pub fn per_symbol_sum(hist1: &Histogram, hist2: &Histogram, subset: &SymbolSet, rule: &PerSymbolRule) -> Result<f64> {
    let mut total = 0.0;
    let mut touched = 0usize;
    let mut symbols: Vec<u32> = hist1
        .iter()
        .chain(hist2.iter())
        .map(|(s, _)| s)
        .filter(|&s| subset.contains(s))
        .collect();
    symbols.sort_unstable();
    symbols.dedup();
    for s in symbols {
        touched += 1;
        total += rule.value(hist1.count(s), hist2.count(s))?;
    }
    let untouched = subset.len() - touched;
    if untouched > 0 {
        total += untouched as f64 * rule.value(0, 0)?;
    }
    Ok(total)
}

/// The per-symbol piecewise estimator over `subset`, clamped to
/// `[0, f_max]`.
pub fn per_symbol_estimator(
    hist1: &Histogram,
    hist2: &Histogram,
    subset: &SymbolSet,
    prop: Property,
    cfg: &PolyConfig,
) -> Result<f64> {
    let rule = PerSymbolRule::new(prop, cfg)?;
    let raw = per_symbol_sum(hist1, hist2, subset, &rule)?;
    Ok(raw.clamp(0.0, prop.max_value(cfg.domain_size)))
}

/// `n * max_i |g(i/n) - g((i-1)/n)|`.
pub fn lipschitz_constant(prop: Property, n: usize) -> f64 {
    let nf = n as f64;
    (1..=n)
        .map(|i| (prop.g(i as f64 / nf) - prop.g((i - 1) as f64 / nf)).abs())
        .fold(0.0, f64::max)
        * nf
}

/// `9 * max(e^{L^2/n} max|b_i|, L_g/n, g(c1 ln n / n), g_n)`: the bound on the
/// change of the per-symbol estimator when one second-half sample changes.
pub fn sensitivity_bound(rule: &PerSymbolRule) -> f64 {
    let n = rule.cfg.n as f64;
    let l = rule.approx.degree as f64;
    let terms = [
        (l * l / n).exp() * rule.approx.max_abs_coeff(),
        lipschitz_constant(rule.prop, rule.cfg.n) / n,
        rule.prop.g(rule.cfg.c1 * n.ln() / n),
        rule.g_n(),
    ];
    9.0 * terms.iter().copied().fold(0.0, f64::max)
}
