//! Synthetic distributions, seeded sampling and the Monte Carlo harness.
//!
//! Every trial draws from its own `ChaCha8Rng` seeded with
//! `seed_base + trial`, so results are reproducible across platforms and
//! independent of how trials are scheduled.

use std::io::Write;
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{plugin_property, Property};
use crate::framework::{emp_frac, estimate, BadSetMethod, FrameworkConfig, Split, DEFAULT_THRESHOLD};
use crate::pml::{DiscreteDistribution, SolverOptions};
use crate::profiles::{FrequencySet, Histogram, SampleSequence, Symbol};

/// Header of the benchmark CSV.
pub const CSV_HEADER: [&str; 11] = [
    "estimator",
    "dist",
    "N",
    "alpha",
    "n",
    "trials",
    "rmse",
    "mean_error",
    "emp_frac",
    "seconds_per_trial",
    "seed_base",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistKind {
    Uniform,
    MixTwoUniforms,
    Zipf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDist {
    pub kind: DistKind,
    #[serde(rename = "N")]
    pub domain_size: usize,
    #[serde(default)]
    pub alpha: Option<f64>,
}

impl SyntheticDist {
    pub fn uniform(domain_size: usize) -> Self {
        Self {
            kind: DistKind::Uniform,
            domain_size,
            alpha: None,
        }
    }

    pub fn mix_two_uniforms(domain_size: usize) -> Self {
        Self {
            kind: DistKind::MixTwoUniforms,
            domain_size,
            alpha: None,
        }
    }

    pub fn zipf(domain_size: usize, alpha: f64) -> Self {
        Self {
            kind: DistKind::Zipf,
            domain_size,
            alpha: Some(alpha),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DistKind::Uniform => "uniform",
            DistKind::MixTwoUniforms => "mix_two_uniforms",
            DistKind::Zipf => "zipf",
        }
    }

    /// The probability vector, symbol `i` at index `i`.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        let n = self.domain_size;
        if n == 0 {
            return Err(Error::Invalid("domain size must be positive".into()));
        }
        match self.kind {
            DistKind::Uniform => Ok(vec![1.0 / n as f64; n]),
            DistKind::MixTwoUniforms => {
                if n < 10 {
                    return Err(Error::Invalid(format!("mix_two_uniforms needs N >= 10, got {n}")));
                }
                let head = n / 10;
                let (a, b) = (0.5 / head as f64, 0.5 / (n - head) as f64);
                Ok((0..n).map(|i| if i < head { a } else { b }).collect())
            }
            DistKind::Zipf => {
                let alpha = self.alpha.unwrap_or(1.0);
                if !alpha.is_finite() || alpha < 0.0 {
                    return Err(Error::Invalid(format!("zipf exponent {alpha}")));
                }
                let w: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-alpha)).collect();
                let z: f64 = w.iter().sum();
                Ok(w.into_iter().map(|x| x / z).collect())
            }
        }
    }
}

pub fn make_distribution(spec: &SyntheticDist) -> Result<DiscreteDistribution> {
    DiscreteDistribution::from_probs(&spec.probabilities()?)
}

fn sampler(dist: &DiscreteDistribution) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(dist.probabilities())
        .map_err(|e| Error::Invalid(format!("cannot sample distribution: {e}")))
}

fn draw(index: &WeightedIndex<f64>, domain_size: usize, n: usize, seed: u64) -> Result<SampleSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols: Vec<Symbol> = (0..n).map(|_| index.sample(&mut rng) as Symbol).collect();
    SampleSequence::new(symbols, domain_size)
}

/// `n` i.i.d. draws from `dist`, deterministic per `seed`.
pub fn sample(dist: &DiscreteDistribution, n: usize, seed: u64) -> Result<SampleSequence> {
    if n == 0 {
        return SampleSequence::new(Vec::new(), dist.domain_size());
    }
    draw(&sampler(dist)?, dist.domain_size(), n, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchEstimator {
    /// The full pipeline with pseudo PML on the bad set.
    PseudoPml,
    /// Empirical plug-in with bias correction on the whole domain.
    MleCorrected,
    /// The pipeline with the per-symbol polynomial estimator on the bad set.
    PerSymbolPoly,
    /// PML plug-in on the whole profile.
    PmlPlugin,
}

impl BenchEstimator {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PseudoPml => "pseudo_pml",
            Self::MleCorrected => "mle_corrected",
            Self::PerSymbolPoly => "per_symbol_poly",
            Self::PmlPlugin => "pml_plugin",
        }
    }

    /// Framework configuration realizing this estimator on samples of length `n`.
    pub fn config(&self, base: &FrameworkConfig, n: usize) -> Result<FrameworkConfig> {
        let mut cfg = base.clone();
        match self {
            Self::PseudoPml => {}
            Self::MleCorrected => cfg.frequency_set = Some(FrequencySet::empty()),
            Self::PerSymbolPoly => cfg.bad_set_method = BadSetMethod::PerSymbolPoly,
            Self::PmlPlugin => {
                cfg.frequency_set = Some(FrequencySet::range(0, n)?);
                cfg.bad_set_method = BadSetMethod::PseudoPml;
            }
        }
        Ok(cfg)
    }
}

/// A benchmark description, usually read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchSpec {
    pub estimators: Vec<BenchEstimator>,
    pub distributions: Vec<SyntheticDist>,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed_base: u64,
    pub property: Property,
    pub threshold: usize,
    pub split: Split,
    pub solver: SolverOptions,
    /// Record wall time per trial. Off by default so output is byte-stable.
    pub timing: bool,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            estimators: vec![BenchEstimator::PseudoPml, BenchEstimator::MleCorrected],
            distributions: Vec::new(),
            sizes: Vec::new(),
            trials: 50,
            seed_base: 0,
            property: Property::Entropy,
            threshold: DEFAULT_THRESHOLD,
            split: Split::None,
            solver: SolverOptions::default(),
            timing: false,
        }
    }
}

impl BenchSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn base_config(&self, domain_size: usize) -> FrameworkConfig {
        let property = match self.property {
            Property::Dtu { .. } => Property::Dtu { domain_size },
            p => p,
        };
        FrameworkConfig {
            property,
            threshold: self.threshold,
            split: self.split,
            solver: self.solver.clone(),
            ..FrameworkConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub estimator: String,
    pub dist: SyntheticDist,
    pub n: usize,
    pub trials: usize,
    pub rmse: f64,
    pub mean_error: f64,
    pub emp_frac_mean: f64,
    pub emp_frac_std: f64,
    pub seconds_per_trial: Option<f64>,
    pub seed_base: u64,
    pub failures: usize,
    pub truth: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    (m, v.sqrt())
}

struct Trial {
    value: f64,
    emp_frac: f64,
    seconds: f64,
}

/// Runs every (estimator, distribution, size) cell of `spec`.
pub fn run_benchmark(spec: &BenchSpec) -> Result<Vec<TrialReport>> {
    if spec.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let mut reports = Vec::new();
    for ds in &spec.distributions {
        let dist = make_distribution(ds)?;
        let index = sampler(&dist)?;
        let base = spec.base_config(ds.domain_size);
        let truth = plugin_property(&dist, base.property, None);
        for &n in &spec.sizes {
            for est in &spec.estimators {
                let cfg = est.config(&base, n)?;
                let trials: Vec<Result<Trial>> = (0..spec.trials)
                    .into_par_iter()
                    .map(|t| {
                        let x = draw(&index, ds.domain_size, n, spec.seed_base + t as u64)?;
                        let start = Instant::now();
                        let e = estimate(&x, &cfg)?;
                        Ok(Trial {
                            value: e.value,
                            emp_frac: e.emp_frac,
                            seconds: start.elapsed().as_secs_f64(),
                        })
                    })
                    .collect();
                let mut errors = Vec::new();
                let mut fracs = Vec::new();
                let mut seconds = 0.0;
                let mut failures = 0;
                for (t, r) in trials.into_iter().enumerate() {
                    match r {
                        Ok(tr) => {
                            errors.push(tr.value - truth);
                            fracs.push(tr.emp_frac);
                            seconds += tr.seconds;
                        }
                        Err(e) => {
                            log::warn!("{} on {} n={n} trial {t}: {e}", est.name(), ds.name());
                            failures += 1;
                        }
                    }
                }
                let ok = errors.len().max(1) as f64;
                let (emp_frac_mean, emp_frac_std) = mean_std(&fracs);
                reports.push(TrialReport {
                    estimator: est.name().to_string(),
                    dist: ds.clone(),
                    n,
                    trials: spec.trials,
                    rmse: (errors.iter().map(|e| e * e).sum::<f64>() / ok).sqrt(),
                    mean_error: errors.iter().sum::<f64>() / ok,
                    emp_frac_mean,
                    emp_frac_std,
                    seconds_per_trial: spec.timing.then(|| seconds / ok),
                    seed_base: spec.seed_base,
                    failures,
                    truth,
                });
            }
        }
    }
    Ok(reports)
}

fn alpha_field(d: &SyntheticDist) -> String {
    match (d.kind, d.alpha) {
        (DistKind::Zipf, a) => a.unwrap_or(1.0).to_string(),
        _ => String::new(),
    }
}

pub fn write_csv<W: Write>(reports: &[TrialReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in reports {
        w.write_record([
            r.estimator.clone(),
            r.dist.name().to_string(),
            r.dist.domain_size.to_string(),
            alpha_field(&r.dist),
            r.n.to_string(),
            r.trials.to_string(),
            r.rmse.to_string(),
            r.mean_error.to_string(),
            r.emp_frac_mean.to_string(),
            r.seconds_per_trial.map(|s| s.to_string()).unwrap_or_default(),
            r.seed_base.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpFracRow {
    pub dist: SyntheticDist,
    pub n: usize,
    pub trials: usize,
    pub threshold: usize,
    pub mean: f64,
    pub std: f64,
    pub seed_base: u64,
}

/// EmpFrac over `trials` samples per size, without splitting: the whole
/// sample decides the partition and is counted against it.
pub fn empfrac_table(
    ds: &SyntheticDist,
    sizes: &[usize],
    threshold: usize,
    trials: usize,
    seed_base: u64,
) -> Result<Vec<EmpFracRow>> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let dist = make_distribution(ds)?;
    let index = sampler(&dist)?;
    let f = FrequencySet::range(0, threshold)?;
    sizes
        .iter()
        .map(|&n| {
            let fracs = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let x = draw(&index, ds.domain_size, n, seed_base + t as u64)?;
                    let h = Histogram::from_sequence(&x);
                    Ok(emp_frac(&h, &h, &f))
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, std) = mean_std(&fracs);
            Ok(EmpFracRow {
                dist: ds.clone(),
                n,
                trials,
                threshold,
                mean,
                std,
                seed_base,
            })
        })
        .collect()
}

pub fn write_empfrac_csv<W: Write>(rows: &[EmpFracRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record(["dist", "N", "alpha", "n", "trials", "threshold", "emp_frac_mean", "emp_frac_std", "seed_base"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            r.dist.name().to_string(),
            r.dist.domain_size.to_string(),
            alpha_field(&r.dist),
            r.n.to_string(),
            r.trials.to_string(),
            r.threshold.to_string(),
            r.mean.to_string(),
            r.std.to_string(),
            r.seed_base.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn distribution_examples() {
        let z = SyntheticDist::zipf(3, 1.0).probabilities().unwrap();
        for (a, b) in z.iter().zip([6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let m = SyntheticDist::mix_two_uniforms(10).probabilities().unwrap();
        assert_eq!(m[0], 0.5);
        assert!(m[1..].iter().all(|&p| (p - 1.0 / 18.0).abs() < 1e-15));
        assert_eq!(SyntheticDist::uniform(4).probabilities().unwrap(), vec![0.25; 4]);
        assert!(SyntheticDist::mix_two_uniforms(9).probabilities().is_err());
    }

    #[test]
    fn sums_to_one() {
        for d in [
            SyntheticDist::uniform(1000),
            SyntheticDist::mix_two_uniforms(12345),
            SyntheticDist::zipf(100_000, 1.0),
            SyntheticDist::zipf(500, 0.6),
        ] {
            let s: f64 = d.probabilities().unwrap().iter().sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sampling_edge_cases() {
        let u = make_distribution(&SyntheticDist::uniform(5)).unwrap();
        assert!(sample(&u, 0, 1).unwrap().is_empty());
        let point = DiscreteDistribution::from_probs(&[0.0, 1.0, 0.0]).unwrap();
        assert!(sample(&point, 100, 7).unwrap().symbols().iter().all(|&s| s == 1));
        assert_eq!(sample(&u, 50, 3).unwrap(), sample(&u, 50, 3).unwrap());
    }

    #[test]
    fn uniform_two_concentrates() {
        // binomial sd at n = 1e6 is 5e-4, so 0.002 is four sd
        let u = make_distribution(&SyntheticDist::uniform(2)).unwrap();
        let x = sample(&u, 1_000_000, 11).unwrap();
        let zeros = x.symbols().iter().filter(|&&s| s == 0).count();
        assert!((zeros as f64 / 1e6 - 0.5).abs() < 0.002);
    }

    #[test]
    fn spec_parses_from_toml() {
        let spec = BenchSpec::from_toml(
            r#"
            estimators = ["pseudo_pml", "mle_corrected"]
            sizes = [1000]
            trials = 3
            [[distributions]]
            kind = "zipf"
            N = 1000
            alpha = 1.0
            "#,
        )
        .unwrap();
        assert_eq!(spec.distributions[0], SyntheticDist::zipf(1000, 1.0));
        assert_eq!(spec.trials, 3);
        assert_eq!(spec.split, Split::None);
    }
}
