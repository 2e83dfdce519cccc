//! Profile maximum likelihood.
//!
//! Distributions are represented by *levels*: a probability value shared by
//! a number of symbols. Profile probabilities only depend on the multiset of
//! probabilities, so this is lossless for the likelihood and keeps the
//! solver's state small.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{Histogram, Symbol, SymbolSet};

pub mod grid;
pub mod likelihood;
pub mod oracle;
pub mod solver;

pub use grid::{grid_optimum, GridOptimum};
pub use likelihood::{log_likelihood, surrogate_log_likelihood, Likelihood, Method};
pub use oracle::{profile_probability_exact, pseudo_profile_probability_exact, sequence_probability};
pub use solver::{approximate_pml, constrained_pml_support};

/// A probability value carried by `mult` symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub prob: f64,
    pub mult: usize,
}

/// A distribution over `[0, N)` stored as levels, plus the mass assigned to
/// symbols outside the modelled set (zero for ordinary profiles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    levels: Vec<Level>,
    domain_size: usize,
    outside_mass: f64,
    assignment: Option<BTreeMap<Symbol, usize>>,
}

impl DiscreteDistribution {
    pub fn new(levels: Vec<Level>, domain_size: usize) -> Result<Self> {
        Self::with_outside(levels, domain_size, 0.0)
    }

    /// Levels describing the symbols of a subset, with `outside_mass` left
    /// to the rest of the domain.
    pub fn with_outside(levels: Vec<Level>, domain_size: usize, outside_mass: f64) -> Result<Self> {
        let levels: Vec<Level> = levels.into_iter().filter(|l| l.mult > 0).collect();
        for l in &levels {
            if !(l.prob > 0.0 && l.prob <= 1.0 + 1e-12) {
                return Err(Error::Invalid(format!("level probability {} outside (0, 1]", l.prob)));
            }
        }
        let support: usize = levels.iter().map(|l| l.mult).sum();
        if support > domain_size {
            return Err(Error::Invalid(format!(
                "{support} symbols with positive probability exceed domain size {domain_size}"
            )));
        }
        if !(0.0..=1.0).contains(&outside_mass) {
            return Err(Error::Invalid(format!("outside mass {outside_mass} outside [0, 1]")));
        }
        Ok(Self {
            levels,
            domain_size,
            outside_mass,
            assignment: None,
        })
    }

    /// Per-symbol probabilities; symbols with equal values share a level
    /// and the symbol-to-level assignment is recorded.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        let mut by_value: BTreeMap<u64, Vec<Symbol>> = BTreeMap::new();
        for (s, &p) in probs.iter().enumerate() {
            if p < 0.0 || !p.is_finite() {
                return Err(Error::Invalid(format!("probability {p} of symbol {s}")));
            }
            if p > 0.0 {
                by_value.entry(p.to_bits()).or_default().push(s as Symbol);
            }
        }
        let mut levels = Vec::new();
        let mut assignment = BTreeMap::new();
        // descending probability
        for (bits, syms) in by_value.into_iter().rev() {
            let idx = levels.len();
            levels.push(Level {
                prob: f64::from_bits(bits),
                mult: syms.len(),
            });
            for s in syms {
                assignment.insert(s, idx);
            }
        }
        let mut d = Self::new(levels, probs.len())?;
        d.assignment = Some(assignment);
        Ok(d)
    }

    pub fn uniform(support: usize, domain_size: usize) -> Result<Self> {
        if support == 0 {
            return Err(Error::Invalid("uniform distribution needs positive support".into()));
        }
        Self::new(
            vec![Level {
                prob: 1.0 / support as f64,
                mult: support,
            }],
            domain_size,
        )
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn outside_mass(&self) -> f64 {
        self.outside_mass
    }

    pub fn assignment(&self) -> Option<&BTreeMap<Symbol, usize>> {
        self.assignment.as_ref()
    }

    /// Records which level each symbol takes. Every level must receive
    /// exactly its multiplicity.
    pub fn set_assignment(&mut self, assignment: BTreeMap<Symbol, usize>) -> Result<()> {
        let mut used = vec![0usize; self.levels.len()];
        for (&s, &v) in &assignment {
            if s as usize >= self.domain_size || v >= self.levels.len() {
                return Err(Error::Invalid(format!("bad assignment {s} -> level {v}")));
            }
            used[v] += 1;
        }
        if used.iter().zip(&self.levels).any(|(u, l)| *u != l.mult) {
            return Err(Error::Invalid("assignment does not match level multiplicities".into()));
        }
        self.assignment = Some(assignment);
        Ok(())
    }

    /// `sum_v m_v p_v`, excluding the outside mass.
    pub fn level_mass(&self) -> f64 {
        self.levels.iter().map(|l| l.mult as f64 * l.prob).sum()
    }

    /// Number of symbols with positive probability among the levels.
    pub fn support_size(&self) -> usize {
        self.levels.iter().map(|l| l.mult).sum()
    }

    /// Probability of every domain symbol. Without an assignment, levels
    /// fill symbols `0, 1, ...` in order.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.domain_size];
        match &self.assignment {
            Some(a) => {
                for (&s, &v) in a {
                    out[s as usize] = self.levels[v].prob;
                }
            }
            None => {
                let mut i = 0;
                for l in &self.levels {
                    for _ in 0..l.mult {
                        out[i] = l.prob;
                        i += 1;
                    }
                }
            }
        }
        out
    }

    /// All level values expanded by multiplicity, largest first.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .levels
            .iter()
            .flat_map(|l| std::iter::repeat(l.prob).take(l.mult))
            .collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

/// Counters reported by the solver.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: usize,
    pub grid_size: usize,
    pub restarts: usize,
    pub local_moves: usize,
    /// Whether the objective was the exact likelihood (small instances) or
    /// the scaling surrogate.
    pub exact_objective: bool,
    pub converged: bool,
    /// Accepted objective values of the continuous phase of the winning start.
    pub trace: Vec<f64>,
}

/// Output of the PML solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmlResult {
    pub distribution: DiscreteDistribution,
    /// Natural log of the (approximated) profile probability; at most 0.
    pub log_likelihood: f64,
    /// `exp(log_likelihood - best grid log-likelihood)` when the grid
    /// optimum was computed.
    pub beta_certificate: Option<f64>,
    pub stats: SolverStats,
}

/// Solver knobs. Defaults are the ones used throughout the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Ratio of the geometric probability grid.
    pub grid_ratio: f64,
    pub max_rounds: usize,
    /// Stop the continuous phase once the objective improves by less.
    pub tol: f64,
    pub seed: u64,
    /// Randomized restarts on top of the deterministic starts.
    pub restarts: usize,
    /// Largest dynamic-programming work for which the exact likelihood is used.
    pub exact_budget: f64,
    /// Fixes the mass outside the profiled subset instead of optimizing it.
    pub pin_outside_mass: Option<f64>,
    pub sinkhorn_tol: f64,
    pub sinkhorn_max_sweeps: usize,
    pub max_local_passes: usize,
    /// Objective evaluations allowed per local search.
    pub max_evaluations: usize,
    /// Compute the grid optimum for small instances and report the ratio.
    pub certify: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_ratio: 1.05,
            max_rounds: 200,
            tol: 1e-7,
            seed: 0,
            restarts: 2,
            exact_budget: 2e6,
            pin_outside_mass: None,
            sinkhorn_tol: 1e-6,
            sinkhorn_max_sweeps: 1000,
            max_local_passes: 200,
            max_evaluations: 3000,
            certify: false,
        }
    }
}

/// Matches level values to the symbols of `subset`: symbols sorted by
/// second-half count (descending, ties by id) receive the values sorted
/// descending; leftover symbols get probability 0.
pub fn assign_monotone(dist: &DiscreteDistribution, hist2: &Histogram, subset: &SymbolSet) -> BTreeMap<Symbol, f64> {
    let mut syms: Vec<(usize, Symbol)> = subset.iter().map(|s| (hist2.count(s), s)).collect();
    syms.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let values = dist.sorted_values();
    syms.into_iter()
        .enumerate()
        .map(|(i, (_, s))| (s, values.get(i).copied().unwrap_or(0.0)))
        .collect()
}
