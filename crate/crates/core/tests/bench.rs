use pseudopml::bench::{run_benchmark, write_csv, BenchEstimator, BenchSpec, SyntheticDist};

fn spec(trials: usize, seed_base: u64) -> BenchSpec {
    BenchSpec {
        estimators: vec![BenchEstimator::PseudoPml, BenchEstimator::MleCorrected],
        distributions: vec![SyntheticDist::mix_two_uniforms(100), SyntheticDist::zipf(100, 1.0)],
        sizes: vec![100, 200],
        trials,
        seed_base,
        ..BenchSpec::default()
    }
}

fn csv(spec: &BenchSpec) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(&run_benchmark(spec).unwrap(), &mut out).unwrap();
    out
}

#[test]
fn csv_is_byte_identical_across_runs() {
    let s = spec(3, 3);
    let a = csv(&s);
    assert_eq!(a, csv(&s));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);
    assert!(text.lines().nth(1).unwrap().contains(",3"));
}

#[test]
fn trials_aggregate_like_single_runs() {
    // a batch of trials from seed_base equals the single-trial runs it contains
    let batch = run_benchmark(&spec(4, 10)).unwrap();
    let singles: Vec<_> = (0..4).map(|t| run_benchmark(&spec(1, 10 + t)).unwrap()).collect();
    for (i, r) in batch.iter().enumerate() {
        let errs: Vec<f64> = singles.iter().map(|s| s[i].mean_error).collect();
        let mean = errs.iter().sum::<f64>() / 4.0;
        let rmse = (errs.iter().map(|e| e * e).sum::<f64>() / 4.0).sqrt();
        assert!((r.mean_error - mean).abs() < 1e-12, "{} vs {mean}", r.mean_error);
        assert!((r.rmse - rmse).abs() < 1e-12, "{} vs {rmse}", r.rmse);
        assert_eq!(r.failures, 0);
    }
}
