//! Samples, histograms and profiles.
//!
//! A profile records, for every frequency `j >= 1`, how many domain elements
//! were seen exactly `j` times. It is the sufficient statistic for every
//! symmetric property. A pseudo profile does the same but only counts the
//! symbols of a designated subset `S`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symbol identifier; symbols of a domain of size `N` are `0..N`.
pub type Symbol = u32;

/// An ordered sequence of draws over a domain of size `N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSequence {
    symbols: Vec<Symbol>,
    domain_size: usize,
}

impl SampleSequence {
    pub fn new(symbols: Vec<Symbol>, domain_size: usize) -> Result<Self> {
        if let Some(&bad) = symbols.iter().find(|&&s| s as usize >= domain_size) {
            return Err(Error::DomainViolation {
                symbol: bad as u64,
                domain_size,
            });
        }
        Ok(Self {
            symbols,
            domain_size,
        })
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    /// First and second half, in order. Odd lengths are rejected; drop a
    /// sample explicitly before splitting.
    pub fn split_halves(&self) -> Result<(SampleSequence, SampleSequence)> {
        if self.symbols.len() % 2 != 0 {
            return Err(Error::OddLength(self.symbols.len()));
        }
        let (a, b) = self.symbols.split_at(self.symbols.len() / 2);
        Ok((
            SampleSequence {
                symbols: a.to_vec(),
                domain_size: self.domain_size,
            },
            SampleSequence {
                symbols: b.to_vec(),
                domain_size: self.domain_size,
            },
        ))
    }
}

/// Sparse per-symbol counts. Symbols with count zero are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    counts: BTreeMap<Symbol, usize>,
    total: usize,
    domain_size: usize,
}

impl Histogram {
    pub fn from_sequence(seq: &SampleSequence) -> Self {
        build_histogram(seq)
    }

    /// Builds a histogram from explicit counts; zero counts are dropped.
    pub fn from_counts(
        counts: impl IntoIterator<Item = (Symbol, usize)>,
        domain_size: usize,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut total = 0usize;
        for (s, c) in counts {
            if s as usize >= domain_size {
                return Err(Error::DomainViolation {
                    symbol: s as u64,
                    domain_size,
                });
            }
            if c > 0 {
                *map.entry(s).or_insert(0) += c;
                total += c;
            }
        }
        Ok(Self {
            counts: map,
            total,
            domain_size,
        })
    }

    pub fn count(&self, symbol: Symbol) -> usize {
        self.counts.get(&symbol).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<Symbol, usize> {
        &self.counts
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, usize)> + '_ {
        self.counts.iter().map(|(&s, &c)| (s, c))
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    /// Number of symbols with nonzero count.
    pub fn observed(&self) -> usize {
        self.counts.len()
    }
}

/// Counts occurrences of every symbol.
pub fn build_histogram(seq: &SampleSequence) -> Histogram {
    let mut counts = BTreeMap::new();
    if seq.domain_size <= 4 * seq.len().max(1) {
        let mut dense = vec![0usize; seq.domain_size];
        for &s in &seq.symbols {
            dense[s as usize] += 1;
        }
        for (s, c) in dense.into_iter().enumerate() {
            if c > 0 {
                counts.insert(s as Symbol, c);
            }
        }
    } else {
        for &s in &seq.symbols {
            *counts.entry(s).or_insert(0) += 1;
        }
    }
    Histogram {
        counts,
        total: seq.len(),
        domain_size: seq.domain_size,
    }
}

/// Common view over profiles and pseudo profiles.
pub trait FrequencyProfile {
    /// Map `j -> phi(j)` with only `j >= 1` and `phi(j) >= 1` present.
    fn phi(&self) -> &BTreeMap<usize, usize>;

    /// Length `n` of the sequence the profile was built from.
    fn length(&self) -> usize;

    /// Domain elements that may carry the profiled mass: `N` for a profile,
    /// `|S|` for an `S`-pseudo profile.
    fn eligible_symbols(&self) -> usize;

    /// Whether draws outside the profiled symbols are allowed.
    fn is_pseudo(&self) -> bool;

    /// Size `N` of the underlying domain.
    fn domain_size(&self) -> usize;

    /// Draws not accounted for by the profiled symbols.
    fn outside_draws(&self) -> usize {
        self.length() - self.phi().iter().map(|(j, c)| j * c).sum::<usize>()
    }
}

/// The profile of a sequence: `phi(j)` distinct symbols appeared exactly `j` times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    phi: BTreeMap<usize, usize>,
    length: usize,
    domain_size: usize,
}

impl Profile {
    /// Builds a profile from `(frequency, multiplicity)` pairs. Zero
    /// multiplicities are dropped; `j = 0` is rejected.
    pub fn new(
        entries: impl IntoIterator<Item = (usize, usize)>,
        domain_size: usize,
    ) -> Result<Self> {
        let mut phi = BTreeMap::new();
        for (j, c) in entries {
            if j == 0 {
                return Err(Error::Invalid("profiles carry no entry for frequency 0".into()));
            }
            if c > 0 {
                *phi.entry(j).or_insert(0) += c;
            }
        }
        let length = phi.iter().map(|(j, c)| j * c).sum();
        let distinct: usize = phi.values().sum();
        if distinct > domain_size {
            return Err(Error::Invalid(format!(
                "{distinct} distinct symbols exceed domain size {domain_size}"
            )));
        }
        Ok(Self {
            phi,
            length,
            domain_size,
        })
    }

    pub fn get(&self, j: usize) -> usize {
        self.phi.get(&j).copied().unwrap_or(0)
    }
}

impl FrequencyProfile for Profile {
    fn phi(&self) -> &BTreeMap<usize, usize> {
        &self.phi
    }
    fn length(&self) -> usize {
        self.length
    }
    fn eligible_symbols(&self) -> usize {
        self.domain_size
    }
    fn is_pseudo(&self) -> bool {
        false
    }
    fn domain_size(&self) -> usize {
        self.domain_size
    }
}

/// Profile of a histogram.
pub fn profile_of(hist: &Histogram) -> Profile {
    let mut phi = BTreeMap::new();
    for &c in hist.counts.values() {
        *phi.entry(c).or_insert(0) += 1;
    }
    Profile {
        phi,
        length: hist.total,
        domain_size: hist.domain_size,
    }
}

/// The `S`-pseudo profile: frequencies of the symbols of `S` only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoProfile {
    subset: SymbolSet,
    phi: BTreeMap<usize, usize>,
    length: usize,
}

impl PseudoProfile {
    pub fn new(
        subset: SymbolSet,
        entries: impl IntoIterator<Item = (usize, usize)>,
        length: usize,
    ) -> Result<Self> {
        let mut phi = BTreeMap::new();
        for (j, c) in entries {
            if j == 0 {
                return Err(Error::Invalid("profiles carry no entry for frequency 0".into()));
            }
            if c > 0 {
                *phi.entry(j).or_insert(0) += c;
            }
        }
        let mass: usize = phi.iter().map(|(j, c)| j * c).sum();
        let distinct: usize = phi.values().sum();
        if mass > length {
            return Err(Error::CountExceedsLength { count: mass, n: length });
        }
        if distinct > subset.len() {
            return Err(Error::Invalid(format!(
                "{distinct} distinct symbols exceed |S| = {}",
                subset.len()
            )));
        }
        Ok(Self {
            subset,
            phi,
            length,
        })
    }

    pub fn subset(&self) -> &SymbolSet {
        &self.subset
    }

    pub fn get(&self, j: usize) -> usize {
        self.phi.get(&j).copied().unwrap_or(0)
    }
}

impl FrequencyProfile for PseudoProfile {
    fn phi(&self) -> &BTreeMap<usize, usize> {
        &self.phi
    }
    fn length(&self) -> usize {
        self.length
    }
    fn eligible_symbols(&self) -> usize {
        self.subset.len()
    }
    fn is_pseudo(&self) -> bool {
        true
    }
    fn domain_size(&self) -> usize {
        self.subset.domain_size()
    }
}

/// Restricts the profile of `hist2` to the symbols of `subset`.
pub fn pseudo_profile(hist2: &Histogram, subset: &SymbolSet) -> PseudoProfile {
    let mut phi = BTreeMap::new();
    for (s, c) in hist2.iter() {
        if subset.contains(s) {
            *phi.entry(c).or_insert(0) += 1;
        }
    }
    PseudoProfile {
        subset: subset.clone(),
        phi,
        length: hist2.total,
    }
}

/// The set of distinct frequencies present in a (pseudo) profile.
pub fn freq_set<P: FrequencyProfile + ?Sized>(p: &P) -> BTreeSet<usize> {
    p.phi().keys().copied().collect()
}

/// Number of distinct observed symbols, `sum_j phi(j)`.
pub fn distinct_count<P: FrequencyProfile + ?Sized>(p: &P) -> usize {
    p.phi().values().sum()
}

/// Subset of a domain `[0, N)` stored as a membership bitmap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSet {
    members: Vec<bool>,
    len: usize,
}

impl SymbolSet {
    pub fn empty(domain_size: usize) -> Self {
        Self {
            members: vec![false; domain_size],
            len: 0,
        }
    }

    pub fn full(domain_size: usize) -> Self {
        Self {
            members: vec![true; domain_size],
            len: domain_size,
        }
    }

    pub fn from_symbols(domain_size: usize, symbols: impl IntoIterator<Item = Symbol>) -> Result<Self> {
        let mut set = Self::empty(domain_size);
        for s in symbols {
            if s as usize >= domain_size {
                return Err(Error::DomainViolation {
                    symbol: s as u64,
                    domain_size,
                });
            }
            set.insert(s);
        }
        Ok(set)
    }

    pub fn insert(&mut self, s: Symbol) {
        let slot = &mut self.members[s as usize];
        if !*slot {
            *slot = true;
            self.len += 1;
        }
    }

    pub fn remove(&mut self, s: Symbol) {
        let slot = &mut self.members[s as usize];
        if *slot {
            *slot = false;
            self.len -= 1;
        }
    }

    pub fn contains(&self, s: Symbol) -> bool {
        self.members.get(s as usize).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn domain_size(&self) -> usize {
        self.members.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(s, _)| s as Symbol)
    }

    pub fn complement(&self) -> Self {
        Self {
            members: self.members.iter().map(|m| !m).collect(),
            len: self.members.len() - self.len,
        }
    }
}

/// A union of disjoint closed integer intervals of frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencySet {
    intervals: Vec<(usize, usize)>,
}

impl FrequencySet {
    pub fn new(mut intervals: Vec<(usize, usize)>) -> Result<Self> {
        intervals.sort_unstable();
        for &(lo, hi) in &intervals {
            if lo > hi {
                return Err(Error::Invalid(format!("empty interval [{lo}, {hi}]")));
            }
        }
        for w in intervals.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(Error::Invalid(format!(
                    "intervals [{}, {}] and [{}, {}] overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(Self { intervals })
    }

    /// The single interval `[lo, hi]`.
    pub fn range(lo: usize, hi: usize) -> Result<Self> {
        Self::new(vec![(lo, hi)])
    }

    pub fn empty() -> Self {
        Self { intervals: vec![] }
    }

    pub fn intervals(&self) -> &[(usize, usize)] {
        &self.intervals
    }

    pub fn contains(&self, j: usize) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo <= j && j <= hi)
    }

    /// Number of integers in the set.
    pub fn cardinality(&self) -> usize {
        self.intervals.iter().map(|(lo, hi)| hi - lo + 1).sum()
    }
}

/// Splits the domain by first-half frequency: `S` holds the symbols whose
/// count lies in `F` (unseen symbols included when `0` is in `F`), `S_bar`
/// the rest.
pub fn partition_domain(hist1: &Histogram, f: &FrequencySet) -> (SymbolSet, SymbolSet) {
    let n_dom = hist1.domain_size();
    let zero_in = f.contains(0);
    let mut members = vec![zero_in; n_dom];
    for (s, c) in hist1.iter() {
        members[s as usize] = f.contains(c);
    }
    let len = members.iter().filter(|&&m| m).count();
    let s = SymbolSet { members, len };
    let s_bar = s.complement();
    (s, s_bar)
}
