//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion.
//! Exits non-zero on failure only when `ACCEPTANCE_STRICT=1`.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pseudopml::bench::{empfrac_table, make_distribution, run_benchmark, sample, BenchEstimator, BenchSpec, SyntheticDist};
use pseudopml::estimators::{per_symbol_sum, plugin_property, sensitivity_bound, PerSymbolRule};
use pseudopml::framework::{default_frequency_set, PolyParams, Preset};
use pseudopml::pml::{approximate_pml, grid_optimum, profile_probability_exact, pseudo_profile_probability_exact};
use pseudopml::poly::{best_uniform_approx, falling_ratio, TargetFn, REMEZ_TOL};
use pseudopml::profiles::{partition_domain, pseudo_profile, FrequencyProfile};
use pseudopml::{
    support_estimate, DiscreteDistribution, Histogram, Property, SampleSequence, SolverOptions,
    SymbolSet,
};

use common::{binomial_pmf, compositions, histogram_of, profiles};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run(id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = took <= budget;
    let pass = o.pass && in_time;
    let timing = if in_time {
        format!("{:.1}s", took.as_secs_f64())
    } else {
        format!("{:.1}s, over the {}s budget", took.as_secs_f64(), budget.as_secs())
    };
    println!(
        "[{}] #{id} {name}: {} ({timing})",
        if pass { "PASS" } else { "FAIL" },
        o.detail
    );
    pass
}

const EMPFRAC_TOL: f64 = 0.05;

fn empfrac() -> Outcome {
    let sizes = [1_000, 10_000, 100_000, 1_000_000];
    let expected = [0.184, 0.372, 0.562, 0.752];
    let rows = empfrac_table(&SyntheticDist::zipf(100_000, 1.0), &sizes, 18, 50, 0).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (r, e) in rows.iter().zip(expected) {
        ok &= (r.mean - e).abs() <= EMPFRAC_TOL;
        parts.push(format!("n={} {:.3} vs {e}", r.n, r.mean));
    }
    outcome(ok, format!("{} (tol {EMPFRAC_TOL})", parts.join(", ")))
}

const SUM_TOL: f64 = 1e-10;
const PSEUDO_TOL: f64 = 1e-12;

fn oracle() -> Outcome {
    let mut worst_sum: f64 = 0.0;
    let mut worst_pseudo: f64 = 0.0;
    let mut dists = 0;
    for domain in 1..=4 {
        for parts in compositions(4, domain) {
            let probs: Vec<f64> = parts.iter().map(|&c| c as f64 / 4.0).collect();
            let p = DiscreteDistribution::from_probs(&probs).unwrap();
            dists += 1;
            for n in 1..=6 {
                let mut total = 0.0;
                for phi in profiles(n, domain) {
                    let a = profile_probability_exact(&p, &phi).unwrap();
                    let h = histogram_of(&phi);
                    let b = pseudo_profile_probability_exact(&p, &pseudo_profile(&h, &SymbolSet::full(domain))).unwrap();
                    worst_pseudo = worst_pseudo.max((a - b).abs());
                    total += a;
                }
                worst_sum = worst_sum.max((total - 1.0).abs());
            }
        }
    }
    outcome(
        worst_sum <= SUM_TOL && worst_pseudo <= PSEUDO_TOL,
        format!(
            "{dists} distributions, max |sum - 1| = {worst_sum:.2e} (tol {SUM_TOL:e}), \
             max pseudo gap = {worst_pseudo:.2e} (tol {PSEUDO_TOL:e})"
        ),
    )
}

const QUALITY_RATIO: f64 = 0.99;

fn quality() -> Outcome {
    let opts = SolverOptions::default();
    let mut worst = f64::INFINITY;
    let mut at = String::new();
    let mut cases = 0;
    for n in 1..=6 {
        for phi in profiles(n, 6) {
            let grid = grid_optimum(&phi, 6, opts.grid_ratio, None).unwrap();
            let distinct: usize = phi.phi().values().sum();
            for domain in distinct..=6 {
                let phi = pseudopml::Profile::new(phi.phi().clone(), domain).unwrap();
                let res = approximate_pml(&phi, &opts).unwrap();
                let got = profile_probability_exact(&res.distribution, &phi).unwrap();
                let best = grid.best_for(domain).unwrap().log_likelihood.exp();
                let ratio = got / best;
                cases += 1;
                if ratio < worst {
                    worst = ratio;
                    at = format!("{:?} at N={domain}", phi.phi());
                }
            }
        }
    }
    outcome(
        worst >= QUALITY_RATIO,
        format!("{cases} cases, worst ratio {worst:.4} ({at}), threshold {QUALITY_RATIO}"),
    )
}

const SUPPORT_RATE: f64 = 0.95;

fn support() -> Outcome {
    let opts = SolverOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [10usize, 30, 100] {
        let n = (2.0 * k as f64 * (k as f64).ln()).ceil() as usize;
        let mut uniform = vec![1.0 / k as f64; k];
        uniform.resize(2 * k, 0.0);
        // k/5 symbols at 2/k and 3k/5 at 1/k
        let heavy = k / 5;
        let mut two_level = vec![2.0 / k as f64; heavy];
        two_level.extend(vec![1.0 / k as f64; k - 2 * heavy]);
        two_level.resize(2 * k, 0.0);
        for (label, probs) in [("uniform", uniform), ("two-level", two_level)] {
            let d = DiscreteDistribution::from_probs(&probs).unwrap();
            let truth = d.support_size();
            let hits = (0..100u64)
                .filter(|&s| support_estimate(&sample(&d, n, s).unwrap(), k, &opts).unwrap() == truth)
                .count();
            ok &= hits as f64 / 100.0 >= SUPPORT_RATE;
            parts.push(format!("k={k} {label} {hits}/100"));
        }
    }
    outcome(ok, format!("{} (need >= {SUPPORT_RATE})", parts.join(", ")))
}

const UNBIASED_TOL: f64 = 1e-12;

fn unbiased() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..=4 {
        for n in i.max(1)..=12 {
            for p in [0.1, 0.3, 0.7] {
                let e: f64 = (0..=n).map(|m| binomial_pmf(n, m, p) * falling_ratio(m, n, i)).sum();
                worst = worst.max((e - p.powi(i as i32)).abs());
            }
        }
    }
    outcome(
        worst <= UNBIASED_TOL,
        format!("max |E - p^i| = {worst:.2e} (tol {UNBIASED_TOL:e})"),
    )
}

const MINIMAX_TOL: f64 = 1e-6;
const EQUI_GRID: usize = 200_000;

/// Alternating extrema of the error on a dense grid: points where `|e|` is
/// within `MINIMAX_TOL` (relative) of the grid maximum, counted by sign runs.
fn alternations(e: &[f64]) -> (usize, f64) {
    let m = e.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut count = 0;
    let mut last = 0.0;
    for &v in e {
        if v.abs() >= m * (1.0 - MINIMAX_TOL) && v.signum() != last {
            count += 1;
            last = v.signum();
        }
    }
    (count, m)
}

fn minimax() -> Outcome {
    let sq = best_uniform_approx(&TargetFn::Monomials(vec![0.0, 0.0, 1.0]), 1, (0.0, 1.0), REMEZ_TOL).unwrap();
    let mut ok = (sq.sup_error - 0.125).abs() <= MINIMAX_TOL
        && (sq.coeffs[0] + 0.125).abs() <= MINIMAX_TOL
        && (sq.coeffs[1] - 1.0).abs() <= MINIMAX_TOL;
    let mut detail = format!(
        "x^2: sup {:.7}, P = {:.7} + {:.7} x",
        sq.sup_error, sq.coeffs[0], sq.coeffs[1]
    );
    let b = 0.01;
    for l in 1..=5 {
        let pa = best_uniform_approx(&TargetFn::NegXLogX, l, (0.0, b), REMEZ_TOL).unwrap();
        let e: Vec<f64> = (0..=EQUI_GRID)
            .map(|i| {
                let x = b * i as f64 / EQUI_GRID as f64;
                TargetFn::NegXLogX.eval(x) - pa.eval(x)
            })
            .collect();
        let (count, m) = alternations(&e);
        let sup_ok = (m - pa.sup_error).abs() <= 1e-4 * pa.sup_error;
        ok &= !pa.near_best_only && count >= l + 2 && sup_ok;
        detail.push_str(&format!("; L={l} {count} alternations, sup {:.3e}", pa.sup_error));
    }
    outcome(ok, format!("{detail} (tol {MINIMAX_TOL:e})"))
}

const CLOSED_TOL: f64 = 1e-12;

fn closed_forms() -> Outcome {
    let mut worst: f64 = 0.0;
    for domain in [2usize, 10, 1000] {
        let u = DiscreteDistribution::uniform(domain, domain).unwrap();
        let mut point = vec![0.0; domain];
        point[0] = 1.0;
        let point = DiscreteDistribution::from_probs(&point).unwrap();
        let dtu = Property::Dtu { domain_size: domain };
        worst = worst
            .max((plugin_property(&u, Property::Entropy, None) - (domain as f64).ln()).abs())
            .max(plugin_property(&u, dtu, None).abs())
            .max((plugin_property(&point, dtu, None) - 2.0 * (1.0 - 1.0 / domain as f64)).abs());
    }
    outcome(worst <= CLOSED_TOL, format!("max error {worst:.2e} (tol {CLOSED_TOL:e})"))
}

fn rmse() -> Outcome {
    let spec = BenchSpec {
        estimators: vec![BenchEstimator::PseudoPml, BenchEstimator::MleCorrected],
        distributions: vec![SyntheticDist::mix_two_uniforms(10_000), SyntheticDist::zipf(10_000, 1.0)],
        sizes: vec![1000],
        trials: 50,
        ..BenchSpec::default()
    };
    let reports = run_benchmark(&spec).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for ds in &spec.distributions {
        let get = |name: &str| {
            reports
                .iter()
                .find(|r| &r.dist == ds && r.estimator == name)
                .unwrap()
        };
        let (p, m) = (get(BenchEstimator::PseudoPml.name()), get(BenchEstimator::MleCorrected.name()));
        ok &= p.failures == 0 && p.rmse <= m.rmse;
        parts.push(format!("{}: pseudo-pml {:.4} vs mle {:.4}", ds.name(), p.rmse, m.rmse));
    }
    outcome(ok, parts.join(", "))
}

fn sensitivity() -> Outcome {
    let (n, domain) = (10_000usize, 1000usize);
    let prop = Property::Entropy;
    let pc = PolyParams::default().resolve(prop, n, domain);
    let rule = PerSymbolRule::new(prop, &pc).unwrap();
    let bound = sensitivity_bound(&rule);
    let d = make_distribution(&SyntheticDist::zipf(domain, 1.0)).unwrap();
    let x = sample(&d, 2 * n, 11).unwrap();
    let (a, b) = x.split_halves().unwrap();
    let h1 = Histogram::from_sequence(&a);
    let f = default_frequency_set(prop, n, domain, Preset::Theory, 18, pc.c1).unwrap();
    let (s, _) = partition_domain(&h1, &f);
    let base = per_symbol_sum(&h1, &Histogram::from_sequence(&b), &s, &rule).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let mut syms = b.symbols().to_vec();
        let i = rng.random_range(0..n);
        syms[i] = rng.random_range(0..domain as u32);
        let h2 = Histogram::from_sequence(&SampleSequence::new(syms, domain).unwrap());
        worst = worst.max((per_symbol_sum(&h1, &h2, &s, &rule).unwrap() - base).abs());
    }
    outcome(
        worst <= bound,
        format!("|S| = {}, max change {worst:.3e}, bound {bound:.3e}", s.len()),
    )
}

fn cli(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_pseudopml"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let sample_args = ["sample", "--dist", "zipf", "--N", "500", "--n", "400", "--seed", "7"];
    let s1 = cli(p, &sample_args);
    let s2 = cli(p, &sample_args);
    std::fs::write(p.join("x.txt"), &s1).unwrap();
    let runs: [&[&str]; 4] = [
        &["estimate", "--input", "x.txt", "--json", "--seed", "3"],
        &["estimate", "--input", "x.txt", "--json", "--property", "dtu", "--bad-set", "per-symbol-poly"],
        &[
            "bench", "--dist", "mix-two-uniforms", "--N", "200", "--sizes", "100,200", "--trials", "4",
            "--seed-base", "5",
        ],
        &["empfrac", "--dist", "zipf", "--N", "1000", "--sizes", "1e3,1e4", "--trials", "3"],
    ];
    let mut ok = s1 == s2;
    let mut checked = 1;
    for args in runs {
        ok &= cli(p, args) == cli(p, args);
        checked += 1;
    }
    outcome(ok, format!("{checked} invocations repeated, outputs byte-identical: {ok}"))
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run(1, "empfrac reproduction", secs(120), empfrac),
        run(2, "exact oracle equivalence", secs(30), oracle),
        run(3, "pml solver quality", secs(120), quality),
        run(4, "support recovery", secs(60), support),
        run(5, "falling-factorial unbiasedness", secs(10), unbiased),
        run(6, "minimax approximation", secs(30), minimax),
        run(7, "closed-form plug-ins", secs(10), closed_forms),
        run(8, "comparative rmse", secs(300), rmse),
        run(9, "sensitivity bound", secs(60), sensitivity),
        run(10, "cli determinism", secs(120), determinism),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").as_deref() == Ok("1") {
        std::process::exit(1);
    }
}
