//! The end-to-end estimator: split the sample, partition the domain by the
//! first half's frequencies, estimate the rarely seen part from the
//! second half's pseudo profile and the frequently seen part empirically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    bias_correction, empirical_plugin, per_symbol_estimator, Correction, Estimate, Property,
};
use crate::pml::{approximate_pml, constrained_pml_support, PmlResult, SolverOptions};
use crate::poly::PolyConfig;
use crate::profiles::{
    partition_domain, profile_of, pseudo_profile, FrequencySet, Histogram, SampleSequence, SymbolSet,
};

/// Default frequency threshold of the experimental preset.
pub const DEFAULT_THRESHOLD: usize = 18;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `F = [0, threshold]` for every property.
    #[default]
    Threshold,
    /// The frequency sets of the analysis, driven by `c1`.
    Theory,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    Halves,
    /// The whole sample plays both roles.
    None,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BadSetMethod {
    #[default]
    PseudoPml,
    PerSymbolPoly,
}

/// Parameters of the polynomial estimator; `c1` defaults per property.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolyParams {
    pub alpha: f64,
    pub c1: Option<f64>,
    pub c2: f64,
    pub raw_monomials: bool,
}

impl Default for PolyParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            c1: None,
            c2: 35.0,
            raw_monomials: false,
        }
    }
}

impl PolyParams {
    pub fn resolve(&self, prop: Property, n: usize, domain_size: usize) -> PolyConfig {
        let base = match prop {
            Property::Dtu { .. } => PolyConfig::dtu_defaults(n, domain_size),
            _ => PolyConfig::entropy_defaults(n, domain_size),
        };
        PolyConfig {
            alpha: self.alpha,
            c1: self.c1.unwrap_or(base.c1),
            c2: self.c2,
            raw_monomials: self.raw_monomials,
            ..base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameworkConfig {
    pub property: Property,
    /// Explicit frequency set; `None` resolves it from the preset.
    pub frequency_set: Option<FrequencySet>,
    pub preset: Preset,
    pub threshold: usize,
    pub solver: SolverOptions,
    pub poly: PolyParams,
    pub correction: Correction,
    pub bad_set_method: BadSetMethod,
    pub split: Split,
    /// Fix the pseudo-PML mass outside `S` to the first half's empirical
    /// mass outside `S` instead of optimizing it.
    pub pin_s_mass: bool,
}

impl Default for FrameworkConfig {
    fn default() -> Self {
        Self {
            property: Property::Entropy,
            frequency_set: None,
            preset: Preset::Threshold,
            threshold: DEFAULT_THRESHOLD,
            solver: SolverOptions::default(),
            poly: PolyParams::default(),
            correction: Correction::PerSymbolHalf,
            bad_set_method: BadSetMethod::PseudoPml,
            split: Split::Halves,
            pin_s_mass: false,
        }
    }
}

impl FrameworkConfig {
    pub fn new(property: Property) -> Self {
        Self {
            property,
            ..Self::default()
        }
    }
}

/// The frequency set `F` a preset uses for sample size `n` (the length of
/// the half the partition is computed on) and domain size `N`.
pub fn default_frequency_set(
    prop: Property,
    n: usize,
    domain_size: usize,
    preset: Preset,
    threshold: usize,
    c1: f64,
) -> Result<FrequencySet> {
    if n == 0 || domain_size == 0 {
        return Err(Error::Invalid("frequency set needs n, N >= 1".into()));
    }
    match (preset, prop) {
        (Preset::Theory, Property::Entropy) => {
            FrequencySet::range(0, (c1 * (n as f64).ln()).round().max(0.0) as usize)
        }
        (Preset::Theory, Property::Dtu { .. }) => {
            let nf = n as f64;
            let center = nf / domain_size as f64;
            let r = (c1 * nf * nf.ln() / domain_size as f64).sqrt();
            let lo = (center - r).round().max(0.0) as usize;
            let hi = ((center + r).round() as usize).min(n);
            FrequencySet::range(lo.min(hi), hi)
        }
        _ => FrequencySet::range(0, threshold),
    }
}

/// Fraction of second-half samples whose symbol falls in the good set.
pub fn emp_frac(hist1: &Histogram, hist2: &Histogram, f: &FrequencySet) -> f64 {
    let n = hist2.total();
    if n == 0 {
        return 0.0;
    }
    let good: usize = hist2
        .iter()
        .filter(|&(s, _)| !f.contains(hist1.count(s)))
        .map(|(_, c)| c)
        .sum();
    good as f64 / n as f64
}

fn halves(x: &SampleSequence, split: Split) -> Result<(Histogram, Histogram)> {
    match split {
        Split::Halves => {
            let (a, b) = x.split_halves()?;
            Ok((Histogram::from_sequence(&a), Histogram::from_sequence(&b)))
        }
        Split::None => {
            let h = Histogram::from_sequence(x);
            Ok((h.clone(), h))
        }
    }
}

/// `sum_v m_v g(p_v)` plus `g(0)` for the symbols of `S` the levels leave out.
pub fn pml_subset_value(res: &PmlResult, prop: Property, subset_size: usize) -> f64 {
    let d = &res.distribution;
    let placed = d.support_size().min(subset_size);
    d.levels().iter().map(|l| l.mult as f64 * prop.g(l.prob)).sum::<f64>()
        + (subset_size - placed) as f64 * prop.g(0.0)
}

/// The pseudo-PML fit used for the bad set.
pub fn fit_bad_set(hist1: &Histogram, hist2: &Histogram, bad: &SymbolSet, cfg: &FrameworkConfig) -> Result<PmlResult> {
    let phi_s = pseudo_profile(hist2, bad);
    let mut opts = cfg.solver.clone();
    if cfg.pin_s_mass && hist1.total() > 0 {
        let inside: usize = hist1.iter().filter(|&(s, _)| bad.contains(s)).map(|(_, c)| c).sum();
        let n = hist2.total().max(1) as f64;
        let q = (hist1.total() - inside) as f64 / hist1.total() as f64;
        // keep both sides feasible for the observed second half
        let lo = 0.5 / n;
        opts.pin_outside_mass = Some(q.clamp(lo, 1.0 - lo));
    }
    approximate_pml(&phi_s, &opts)
}

/// Algorithm: split, partition by `F`, estimate each side, combine.
pub fn estimate(x: &SampleSequence, cfg: &FrameworkConfig) -> Result<Estimate> {
    estimate_with_fit(x, cfg).map(|(e, _)| e)
}

/// [`estimate`], also returning the pseudo-PML fit of the bad set when one
/// was computed (or the constrained PML fit for support).
pub fn estimate_with_fit(x: &SampleSequence, cfg: &FrameworkConfig) -> Result<(Estimate, Option<PmlResult>)> {
    let domain = x.domain_size();
    if let Property::Support { k } = cfg.property {
        let phi = profile_of(&Histogram::from_sequence(x));
        let fit = constrained_pml_support(&phi, k, &cfg.solver)?;
        let s = fit.distribution.support_size();
        let e = Estimate {
            value: s as f64,
            bad_set_value: s as f64,
            good_set_value: 0.0,
            bias_correction: 0.0,
            s_size: domain,
            s_bar_size: 0,
            emp_frac: 0.0,
        };
        return Ok((e, Some(fit)));
    }
    let (h1, h2) = halves(x, cfg.split)?;
    let n = h2.total();
    let prop = cfg.property;
    let c1 = cfg.poly.resolve(prop, n.max(2), domain.max(2)).c1;
    let f = match &cfg.frequency_set {
        Some(f) => f.clone(),
        None => default_frequency_set(prop, h1.total().max(1), domain, cfg.preset, cfg.threshold, c1)?,
    };
    let (bad, good) = partition_domain(&h1, &f);

    let mut fit = None;
    let bad_set_value = if bad.is_empty() {
        0.0
    } else {
        match cfg.bad_set_method {
            BadSetMethod::PseudoPml => {
                let res = fit_bad_set(&h1, &h2, &bad, cfg)?;
                let v = pml_subset_value(&res, prop, bad.len());
                fit = Some(res);
                v
            }
            BadSetMethod::PerSymbolPoly => {
                let pc = cfg.poly.resolve(prop, n, domain);
                per_symbol_estimator(&h1, &h2, &bad, prop, &pc)?
            }
        }
    };
    let good_set_value = empirical_plugin(&h2, prop, &good);
    let bias = bias_correction(&h2, prop, &good, cfg.correction);
    let total = bad_set_value + good_set_value + bias;
    let e = Estimate {
        value: total.clamp(0.0, prop.max_value(domain)),
        bad_set_value,
        good_set_value,
        bias_correction: bias,
        s_size: bad.len(),
        s_bar_size: good.len(),
        emp_frac: emp_frac(&h1, &h2, &f),
    };
    Ok((e, fit))
}

/// Support of the PML distribution constrained to probabilities `>= 1/k`.
pub fn support_estimate(x: &SampleSequence, k: usize, opts: &SolverOptions) -> Result<usize> {
    let phi = profile_of(&Histogram::from_sequence(x));
    Ok(constrained_pml_support(&phi, k, opts)?.distribution.support_size())
}
