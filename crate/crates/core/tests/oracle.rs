mod common;

use proptest::prelude::*;

use pseudopml::pml::{profile_probability_exact, pseudo_profile_probability_exact, sequence_probability};
use pseudopml::poly::{falling_factorial_estimate, PolyApprox};
use pseudopml::profiles::{profile_of, pseudo_profile};
use pseudopml::{DiscreteDistribution, Histogram, SampleSequence, SymbolSet};

use common::{binomial_pmf, histogram_of, profiles};

fn dist() -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec(0.0f64..1.0, 1..5).prop_filter_map("all zero", |w| {
        let t: f64 = w.iter().sum();
        (t > 1e-3).then(|| DiscreteDistribution::from_probs(&w.iter().map(|x| x / t).collect::<Vec<_>>()).unwrap())
    })
}

fn poly(coeffs: Vec<f64>) -> PolyApprox {
    PolyApprox {
        degree: coeffs.len() - 1,
        interval: (0.0, 1.0),
        chebyshev: Vec::new(),
        sup_error: 0.0,
        near_best_only: false,
        reference: Vec::new(),
        iterations: 0,
        coeffs,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_probabilities_sum_to_one(p in dist(), n in 1usize..6) {
        let total: f64 = profiles(n, p.domain_size())
            .iter()
            .map(|phi| profile_probability_exact(&p, phi).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-10, "{}", total);
    }

    #[test]
    fn profile_probability_sums_sequences(p in dist(), n in 1usize..5) {
        // brute force over every sequence of length n
        let d = p.domain_size();
        let mut by_profile = std::collections::BTreeMap::new();
        for code in 0..d.pow(n as u32) {
            let mut c = code;
            let s: Vec<u32> = (0..n).map(|_| { let y = (c % d) as u32; c /= d; y }).collect();
            let x = SampleSequence::new(s, d).unwrap();
            let phi = profile_of(&Histogram::from_sequence(&x));
            *by_profile.entry(format!("{:?}", phi)).or_insert(0.0) += sequence_probability(&p, &x);
        }
        for phi in profiles(n, d) {
            let brute = by_profile.get(&format!("{:?}", phi)).copied().unwrap_or(0.0);
            prop_assert!((profile_probability_exact(&p, &phi).unwrap() - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn full_subset_matches_profile(p in dist(), n in 1usize..6) {
        let d = p.domain_size();
        for phi in profiles(n, d) {
            let a = profile_probability_exact(&p, &phi).unwrap();
            let b = pseudo_profile_probability_exact(&p, &pseudo_profile(&histogram_of(&phi), &SymbolSet::full(d))).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn falling_factorial_is_unbiased(
        coeffs in prop::collection::vec(-5.0f64..5.0, 1..6),
        n in 5usize..13,
        p in 0.0f64..1.0,
    ) {
        let pa = poly(coeffs.clone());
        let expected: f64 = (0..=n)
            .map(|m| binomial_pmf(n, m, p) * falling_factorial_estimate(&pa, m, n).unwrap())
            .sum();
        let target: f64 = coeffs.iter().enumerate().map(|(i, b)| b * p.powi(i as i32)).sum();
        prop_assert!((expected - target).abs() < 1e-10, "{} vs {}", expected, target);
    }
}
