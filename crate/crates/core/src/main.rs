use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pseudopml::bench::{
    empfrac_table, make_distribution, run_benchmark, sample, write_csv, write_empfrac_csv, BenchEstimator, BenchSpec,
    DistKind, SyntheticDist,
};
use pseudopml::estimators::Correction;
use pseudopml::framework::{estimate_with_fit, BadSetMethod, Preset, Split, DEFAULT_THRESHOLD};
use pseudopml::io::{read_samples, write_samples};
use pseudopml::{Error, Estimate, FrameworkConfig, Property, Result};

#[derive(Parser)]
#[command(name = "pseudopml", version, about = "Symmetric property estimation with pseudo PML")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a property from a sample file.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo benchmark and write CSV.
    Bench(BenchArgs),
    /// Tabulate the fraction of samples handled empirically.
    Empfrac(EmpfracArgs),
    /// Draw a seeded sample from a synthetic distribution.
    Sample(SampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PropertyArg {
    Entropy,
    Dtu,
    Support,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Threshold,
    Theory,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrectionArg {
    Half,
    OverN,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum BadSetArg {
    PseudoPml,
    PerSymbolPoly,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    MixTwoUniforms,
    Zipf,
}

#[derive(clap::Args)]
struct EstimateArgs {
    #[arg(long, value_enum, default_value = "entropy")]
    property: PropertyArg,
    /// Sample file, one symbol per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "threshold")]
    preset: PresetArg,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: usize,
    /// Use the whole sample for both the partition and the estimate.
    #[arg(long)]
    no_split: bool,
    #[arg(long, value_enum, default_value = "half")]
    correction: CorrectionArg,
    #[arg(long, value_enum, default_value = "pseudo-pml")]
    bad_set: BadSetArg,
    /// Inverse of the smallest nonzero probability (support only).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pin the outside mass to the first half's empirical value.
    #[arg(long)]
    pin_s_mass: bool,
    #[arg(long)]
    json: bool,
    /// Report entropy in bits instead of nats.
    #[arg(long)]
    bits: bool,
    /// Write the fitted PML distribution as JSON.
    #[arg(long)]
    dump_pml: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DistFlags {
    #[arg(long, value_enum, default_value = "zipf")]
    dist: DistArg,
    #[arg(long = "N", default_value_t = 10_000)]
    domain_size: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

impl DistFlags {
    fn spec(&self) -> SyntheticDist {
        match self.dist {
            DistArg::Uniform => SyntheticDist::uniform(self.domain_size),
            DistArg::MixTwoUniforms => SyntheticDist::mix_two_uniforms(self.domain_size),
            DistArg::Zipf => SyntheticDist::zipf(self.domain_size, self.alpha),
        }
    }
}

#[derive(clap::Args)]
struct BenchArgs {
    /// TOML benchmark description; flags are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    dist: DistFlags,
    #[arg(long, value_delimiter = ',', default_value = "1e3")]
    sizes: Vec<String>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "pseudo-pml,mle-corrected")]
    estimators: Vec<BadSetOrBaseline>,
    #[arg(long, value_enum, default_value = "entropy")]
    property: PropertyArg,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: usize,
    /// Record seconds per trial (makes output machine dependent).
    #[arg(long)]
    timing: bool,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BadSetOrBaseline {
    PseudoPml,
    MleCorrected,
    PerSymbolPoly,
    PmlPlugin,
}

#[derive(clap::Args)]
struct EmpfracArgs {
    #[command(flatten)]
    dist: DistFlags,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: usize,
    #[arg(long, value_delimiter = ',', default_value = "1e3,1e4,1e5,1e6")]
    sizes: Vec<String>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SampleArgs {
    #[command(flatten)]
    dist: DistFlags,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_size(s: &str) -> Result<usize> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Config(format!("bad sample size {s:?}")))?;
    if !(v >= 0.0) || v.fract() != 0.0 {
        return Err(Error::Config(format!("bad sample size {s:?}")));
    }
    Ok(v as usize)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn property(arg: PropertyArg, domain_size: usize, k: Option<usize>) -> Result<Property> {
    Ok(match arg {
        PropertyArg::Entropy => Property::Entropy,
        PropertyArg::Dtu => Property::Dtu { domain_size },
        PropertyArg::Support => Property::Support {
            k: k.ok_or_else(|| Error::Config("support estimation needs --k".into()))?,
        },
    })
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    property: &'static str,
    n: usize,
    domain_size: usize,
    #[serde(flatten)]
    estimate: &'a Estimate,
}

fn run_estimate(a: EstimateArgs) -> Result<()> {
    let x = read_samples(BufReader::new(File::open(&a.input)?))?;
    let mut cfg = FrameworkConfig::new(property(a.property, x.domain_size(), a.k)?);
    cfg.preset = match a.preset {
        PresetArg::Threshold => Preset::Threshold,
        PresetArg::Theory => Preset::Theory,
    };
    cfg.threshold = a.threshold;
    cfg.split = if a.no_split { Split::None } else { Split::Halves };
    cfg.correction = match a.correction {
        CorrectionArg::Half => Correction::PerSymbolHalf,
        CorrectionArg::OverN => Correction::SBarOverN,
        CorrectionArg::None => Correction::None,
    };
    cfg.bad_set_method = match a.bad_set {
        BadSetArg::PseudoPml => BadSetMethod::PseudoPml,
        BadSetArg::PerSymbolPoly => BadSetMethod::PerSymbolPoly,
    };
    cfg.pin_s_mass = a.pin_s_mass;
    cfg.solver.seed = a.seed;
    let (mut e, fit) = estimate_with_fit(&x, &cfg)?;
    if let Some(path) = &a.dump_pml {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &fit).map_err(|e| Error::Invalid(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
    }
    if a.bits {
        if cfg.property != Property::Entropy {
            return Err(Error::Config("--bits applies to entropy only".into()));
        }
        for v in [&mut e.value, &mut e.bad_set_value, &mut e.good_set_value, &mut e.bias_correction] {
            *v /= std::f64::consts::LN_2;
        }
    }
    let mut out = output(&None)?;
    if a.json {
        let o = EstimateOutput {
            property: cfg.property.name(),
            n: x.len(),
            domain_size: x.domain_size(),
            estimate: &e,
        };
        serde_json::to_writer_pretty(&mut out, &o).map_err(|e| Error::Invalid(e.to_string()))?;
        writeln!(out)?;
    } else {
        writeln!(out, "{} {}", cfg.property.name(), e.value)?;
        writeln!(out, "|S| {} |S_bar| {} emp_frac {}", e.s_size, e.s_bar_size, e.emp_frac)?;
    }
    out.flush()?;
    Ok(())
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let spec = match &a.config {
        Some(p) => BenchSpec::from_toml(&std::fs::read_to_string(p)?)?,
        None => BenchSpec {
            estimators: a
                .estimators
                .iter()
                .map(|e| match e {
                    BadSetOrBaseline::PseudoPml => BenchEstimator::PseudoPml,
                    BadSetOrBaseline::MleCorrected => BenchEstimator::MleCorrected,
                    BadSetOrBaseline::PerSymbolPoly => BenchEstimator::PerSymbolPoly,
                    BadSetOrBaseline::PmlPlugin => BenchEstimator::PmlPlugin,
                })
                .collect(),
            distributions: vec![a.dist.spec()],
            sizes: a.sizes.iter().map(|s| parse_size(s)).collect::<Result<_>>()?,
            trials: a.trials,
            seed_base: a.seed_base,
            property: property(a.property, a.dist.domain_size, Some(a.dist.domain_size))?,
            threshold: a.threshold,
            timing: a.timing,
            ..BenchSpec::default()
        },
    };
    let reports = run_benchmark(&spec)?;
    for r in &reports {
        if r.failures > 0 {
            log::warn!("{} on {} n={}: {} failed trials", r.estimator, r.dist.name(), r.n, r.failures);
        }
    }
    write_csv(&reports, output(&a.out)?)
}

fn run_empfrac(a: EmpfracArgs) -> Result<()> {
    let sizes: Vec<usize> = a.sizes.iter().map(|s| parse_size(s)).collect::<Result<_>>()?;
    let rows = empfrac_table(&a.dist.spec(), &sizes, a.threshold, a.trials, a.seed_base)?;
    write_empfrac_csv(&rows, output(&a.out)?)
}

fn run_sample(a: SampleArgs) -> Result<()> {
    let spec = a.dist.spec();
    if spec.kind == DistKind::Zipf && !(a.dist.alpha >= 0.0) {
        return Err(Error::Config("alpha must be non-negative".into()));
    }
    let x = sample(&make_distribution(&spec)?, a.n, a.seed)?;
    let mut out = output(&a.out)?;
    write_samples(&x, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Estimate(a) => run_estimate(a),
        Command::Bench(a) => run_bench(a),
        Command::Empfrac(a) => run_empfrac(a),
        Command::Sample(a) => run_sample(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
