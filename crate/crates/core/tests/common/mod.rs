#![allow(dead_code)]

use std::collections::BTreeMap;

use pseudopml::Profile;

/// Partitions of `n` into parts no larger than `max`, largest part first.
pub fn partitions(n: usize, max: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in (1..=n.min(max)).rev() {
        for mut rest in partitions(n - first, first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Every profile of length `n` with at most `domain_size` distinct symbols.
pub fn profiles(n: usize, domain_size: usize) -> Vec<Profile> {
    partitions(n, n)
        .into_iter()
        .filter(|p| p.len() <= domain_size)
        .map(|p| {
            let mut phi = BTreeMap::new();
            for j in p {
                *phi.entry(j).or_insert(0) += 1;
            }
            Profile::new(phi, domain_size).unwrap()
        })
        .collect()
}

/// Compositions of `total` into `parts` non-negative integers.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn binomial_pmf(n: usize, m: usize, p: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..m {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(m as i32) * (1.0 - p).powi((n - m) as i32)
}

/// A histogram realizing `phi`, symbols numbered from 0 by decreasing count.
pub fn histogram_of(phi: &Profile) -> pseudopml::Histogram {
    use pseudopml::profiles::FrequencyProfile;
    let counts: Vec<usize> = phi
        .phi()
        .iter()
        .rev()
        .flat_map(|(&j, &c)| std::iter::repeat_n(j, c))
        .collect();
    pseudopml::Histogram::from_counts(counts.into_iter().enumerate().map(|(s, c)| (s as u32, c)), phi.domain_size())
        .unwrap()
}
