//! Approximate PML.
//!
//! Each start runs a continuous phase of alternating updates on the scaling
//! surrogate:
//!
//! 1. couple frequency buckets to levels by matrix scaling;
//! 2. with the coupling fixed, set each multiplicity to the stationary point
//!    of its (separable) objective, respecting the symbol cap;
//! 3. set each level value to the coupling's weighted frequency average.
//!
//! Steps that lower the objective are damped and otherwise rejected, so the
//! recorded trace never decreases. The continuous solution is then rounded
//! to integer multiplicities, snapped to the geometric grid and polished by
//! a discrete local search on the final objective (exact on small
//! instances). The best of several deterministic and seeded starts wins.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::profiles::{distinct_count, FrequencyProfile, Profile};

use super::grid::{grid_optimum, max_exponent, GRID_MAX_LENGTH};
use super::likelihood::{exact_log_sum, level_log_likelihood, scale, ProfileData};
use super::{DiscreteDistribution, Level, PmlResult, SolverOptions, SolverStats};

/// Upper bound on levels used to decide whether the exact objective fits the budget.
const MAX_LEVELS: usize = 24;
/// Instances up to this size get certified against the grid optimum.
const CERTIFY_MAX_SYMBOLS: usize = 6;
/// Starts polished by local search when the objective is the surrogate.
const POLISHED_STARTS: usize = 2;

struct Problem<'a> {
    pd: ProfileData,
    opts: &'a SolverOptions,
    /// Largest total multiplicity.
    cap: usize,
    /// Fixed outside mass.
    q: f64,
    /// Draws inside the profiled set.
    seen: f64,
    min_prob: Option<f64>,
    exact: bool,
    t_max: i64,
    /// Objective evaluations spent by the current local search.
    evals: std::cell::Cell<usize>,
}

#[derive(Debug, Clone)]
struct Cont {
    p: Vec<f64>,
    m: Vec<f64>,
}

enum Rough {
    Grid(Vec<i64>, Vec<usize>),
    Levels(Vec<f64>, Vec<usize>),
}

#[derive(Debug, Clone)]
struct Candidate {
    probs: Vec<f64>,
    mults: Vec<usize>,
    value: f64,
    trace: Vec<f64>,
    rounds: usize,
    moves: usize,
    converged: bool,
}

/// Levels whose values agree to a relative `1e-4` describe the same
/// distribution; merging them keeps the support search small.
fn merge_close(p: &[f64], m: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
    let mut out_p: Vec<f64> = Vec::new();
    let mut out_m: Vec<usize> = Vec::new();
    for v in order {
        match (out_p.last_mut(), out_m.last_mut()) {
            (Some(lp), Some(lm)) if (*lp - p[v]).abs() <= 1e-4 * *lp => {
                *lp = (*lp * *lm as f64 + p[v] * m[v] as f64) / (*lm + m[v]) as f64;
                *lm += m[v];
            }
            _ => {
                out_p.push(p[v]);
                out_m.push(m[v]);
            }
        }
    }
    (out_p, out_m)
}

impl Problem<'_> {
    fn cont_value(&self, c: &Cont) -> f64 {
        level_log_likelihood(
            &self.pd,
            &c.p,
            &c.m,
            self.q,
            false,
            false,
            self.opts.sinkhorn_tol,
            self.opts.sinkhorn_max_sweeps,
        )
        .value
    }

    fn disc_value(&self, probs: &[f64], mults: &[usize]) -> f64 {
        self.evals.set(self.evals.get() + 1);
        let used: f64 = probs.iter().zip(mults).map(|(p, &m)| p * m as f64).sum();
        if used > (1.0 - self.q) * (1.0 + 1e-9) {
            return f64::NEG_INFINITY;
        }
        if self.exact {
            let sum = exact_log_sum(&self.pd, probs, mults);
            let v = self.pd.constant(self.q) + sum;
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v.min(0.0)
            }
        } else {
            let m: Vec<f64> = mults.iter().map(|&x| x as f64).collect();
            level_log_likelihood(
                &self.pd,
                probs,
                &m,
                self.q,
                false,
                true,
                self.opts.sinkhorn_tol,
                self.opts.sinkhorn_max_sweeps,
            )
            .value
        }
    }

    /// Seen counts and frequency mass per level under the scaled coupling.
    fn coupling_stats(&self, p: &[f64], m: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let sc = scale(&self.pd, p, m, self.opts.sinkhorn_tol, self.opts.sinkhorn_max_sweeps)?;
        let mut s = vec![0.0; p.len()];
        let mut a = vec![0.0; p.len()];
        for (row, &j) in sc.coupling.iter().zip(&sc.row_freq) {
            if j == 0 {
                continue;
            }
            for v in 0..p.len() {
                s[v] += row[v];
                a[v] += j as f64 * row[v];
            }
        }
        Some((s, a))
    }

    /// Level values from frequency masses: proportional to `a_v / m_v`,
    /// floored at the minimum probability when one is set.
    fn fit_probs(&self, a: &[f64], m: &[f64]) -> Vec<f64> {
        let mass = 1.0 - self.q;
        let base: Vec<f64> = a
            .iter()
            .zip(m)
            .map(|(&ai, &mi)| if mi > 0.0 { ai / mi } else { 0.0 })
            .collect();
        let p: Vec<f64> = match self.min_prob {
            None => base.iter().map(|b| mass * b / self.seen).collect(),
            Some(floor) => {
                let total = |lam: f64| -> f64 {
                    base.iter()
                        .zip(m)
                        .map(|(&b, &mi)| mi * (b / lam).max(floor))
                        .sum()
                };
                let mut lo = 1e-12f64;
                let mut hi = 1e12f64;
                let mt: f64 = m.iter().sum();
                if total(hi) >= mass * (1.0 - 1e-12) {
                    // the floor alone uses up the mass: every level sits at it
                    return vec![(mass / mt).min(1.0); base.len()];
                } else {
                    for _ in 0..200 {
                        let mid = (lo * hi).sqrt();
                        if total(mid) > mass {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                }
                base.iter().map(|&b| (b / hi).max(floor)).collect()
            }
        };
        p.into_iter().map(|x| x.clamp(1e-300, 1.0)).collect()
    }

    fn normalize(&self, p: &mut [f64], m: &[f64]) {
        let tot: f64 = p.iter().zip(m).map(|(a, b)| a * b).sum();
        if tot > 0.0 {
            let k = (1.0 - self.q) / tot;
            for x in p.iter_mut() {
                *x = (*x * k).min(1.0);
            }
        }
        if let Some(floor) = self.min_prob {
            for x in p.iter_mut() {
                *x = x.max(floor);
            }
        }
    }

    /// Per-level multiplicities maximizing the profiled objective with the
    /// coupling fixed, subject to the total cap.
    fn fit_mults(&self, s: &[f64], a: &[f64]) -> Vec<f64> {
        let cap = self.cap as f64;
        let solve = |sv: f64, av: f64, mu: f64| -> f64 {
            if sv <= 1e-12 {
                return 0.0;
            }
            // derivative of m ln m - (m - s) ln(m - s) - a ln m - mu m, with m = s + x
            let d = |x: f64| ((sv + x) / x).ln() - av / (sv + x) - mu;
            let hi = (cap - sv).max(1e-9);
            if d(hi) >= 0.0 {
                return sv + hi;
            }
            let (mut lo_l, mut hi_l) = ((sv * 1e-12).max(1e-300).ln(), hi.ln());
            for _ in 0..60 {
                let mid = 0.5 * (lo_l + hi_l);
                if d(mid.exp()) > 0.0 {
                    lo_l = mid;
                } else {
                    hi_l = mid;
                }
            }
            sv + hi_l.exp()
        };
        let at = |mu: f64| -> Vec<f64> { s.iter().zip(a).map(|(&sv, &av)| solve(sv, av, mu)).collect() };
        let m0 = at(0.0);
        if m0.iter().sum::<f64>() <= cap {
            return m0;
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while at(hi).iter().sum::<f64>() > cap && hi < 1e6 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if at(mid).iter().sum::<f64>() > cap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(hi)
    }

    fn prune(c: &mut Cont) {
        let keep: Vec<usize> = (0..c.m.len()).filter(|&v| c.m[v] > 1e-9).collect();
        c.p = keep.iter().map(|&v| c.p[v]).collect();
        c.m = keep.iter().map(|&v| c.m[v]).collect();
    }

    /// Alternating maximization; returns the final state, its value, the
    /// accepted trace and the number of rounds.
    fn continuous(&self, mut cur: Cont, fit_m: bool) -> (Cont, f64, Vec<f64>, usize, bool) {
        Self::prune(&mut cur);
        let mut value = self.cont_value(&cur);
        let mut trace = vec![value];
        let mut rounds = 0;
        let mut converged = false;
        for _ in 0..self.opts.max_rounds {
            rounds += 1;
            let Some((s, a)) = self.coupling_stats(&cur.p, &cur.m) else {
                break;
            };
            let m = if fit_m {
                let mut m = self.fit_mults(&s, &a);
                let total: f64 = m.iter().sum();
                if total < self.pd.distinct as f64 {
                    // keep the distinct count feasible
                    let k = self.pd.distinct as f64 / total.max(1e-300);
                    m.iter_mut().for_each(|x| *x *= k);
                }
                m
            } else {
                cur.m.clone()
            };
            let p = self.fit_probs(&a, &m);
            let mut next = Cont { p, m };
            Self::prune(&mut next);
            let mut next_value = self.cont_value(&next);
            if !(next_value >= value) {
                // damped steps toward the proposal
                let mut accepted = false;
                if next.m.len() == cur.m.len() {
                    for alpha in [0.5, 0.25, 0.125] {
                        let mut mixed = Cont {
                            p: cur
                                .p
                                .iter()
                                .zip(&next.p)
                                .map(|(a, b)| ((1.0 - alpha) * a.ln() + alpha * b.ln()).exp())
                                .collect(),
                            m: cur.m.iter().zip(&next.m).map(|(a, b)| (1.0 - alpha) * a + alpha * b).collect(),
                        };
                        self.normalize(&mut mixed.p, &mixed.m);
                        let v = self.cont_value(&mixed);
                        if v >= value {
                            next = mixed;
                            next_value = v;
                            accepted = true;
                            break;
                        }
                    }
                }
                if !accepted {
                    converged = true;
                    break;
                }
            }
            let gain = next_value - value;
            cur = next;
            value = next_value;
            trace.push(value);
            if gain < self.opts.tol * value.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        (cur, value, trace, rounds, converged)
    }

    /// Largest-remainder rounding of the multiplicities.
    fn round(&self, c: &Cont) -> (Vec<f64>, Vec<usize>) {
        let d = self.pd.distinct;
        let total = (c.m.iter().sum::<f64>().round() as usize).clamp(d.max(1), self.cap.max(d).max(1));
        let mut mi: Vec<usize> = c.m.iter().map(|x| x.floor() as usize).collect();
        let mut order: Vec<usize> = (0..c.m.len()).collect();
        order.sort_by(|&x, &y| {
            let fx = c.m[x] - c.m[x].floor();
            let fy = c.m[y] - c.m[y].floor();
            fy.total_cmp(&fx).then(x.cmp(&y))
        });
        let mut sum: usize = mi.iter().sum();
        let mut k = 0;
        while sum < total && !order.is_empty() {
            mi[order[k % order.len()]] += 1;
            sum += 1;
            k += 1;
        }
        while sum > total {
            let v = (0..mi.len()).filter(|&v| mi[v] > 0).min_by(|&x, &y| c.m[x].total_cmp(&c.m[y])).expect("positive");
            mi[v] -= 1;
            sum -= 1;
        }
        let keep: Vec<usize> = (0..mi.len()).filter(|&v| mi[v] > 0).collect();
        let p: Vec<f64> = keep.iter().map(|&v| c.p[v]).collect();
        let m: Vec<usize> = keep.iter().map(|&v| mi[v]).collect();
        (p, m)
    }

    fn grid_probs(&self, t: &[i64], m: &[usize]) -> Vec<f64> {
        let r = self.opts.grid_ratio;
        let w: Vec<f64> = t.iter().map(|&x| r.powi(-(x as i32))).collect();
        let tot: f64 = w.iter().zip(m).map(|(a, &b)| a * b as f64).sum();
        w.iter().map(|x| (1.0 - self.q) * x / tot).collect()
    }

    /// Sorts by exponent, merges equal exponents, drops empty levels and
    /// shifts the smallest exponent to zero. `None` when out of range.
    fn canonical(&self, t: &[i64], m: &[usize]) -> Option<(Vec<i64>, Vec<usize>)> {
        let mut pairs: Vec<(i64, usize)> = t.iter().copied().zip(m.iter().copied()).filter(|p| p.1 > 0).collect();
        if pairs.is_empty() {
            return None;
        }
        pairs.sort();
        let base = pairs[0].0;
        let mut out_t: Vec<i64> = Vec::new();
        let mut out_m: Vec<usize> = Vec::new();
        for (ti, mi) in pairs {
            let ti = ti - base;
            if ti > self.t_max {
                return None;
            }
            if out_t.last() == Some(&ti) {
                *out_m.last_mut().expect("non-empty") += mi;
            } else {
                out_t.push(ti);
                out_m.push(mi);
            }
        }
        let total: usize = out_m.iter().sum();
        if total < self.pd.distinct || total > self.cap || out_t.len() > MAX_LEVELS {
            return None;
        }
        Some((out_t, out_m))
    }

    fn snap(&self, p: &[f64], m: &[usize]) -> Option<(Vec<i64>, Vec<usize>)> {
        let pmax = p.iter().copied().fold(0.0, f64::max);
        let lr = self.opts.grid_ratio.ln();
        let t: Vec<i64> = p
            .iter()
            .map(|&x| (((pmax / x).ln() / lr).round() as i64).clamp(0, self.t_max))
            .collect();
        let mut m = m.to_vec();
        // merging may push the level count over the cap: fold extra levels into their neighbours
        let mut c = self.canonical(&t, &m);
        if c.is_none() {
            let total: usize = m.iter().sum();
            if total > self.cap {
                return None;
            }
            let mut tt = t.clone();
            while tt.len() > MAX_LEVELS {
                let v = m.iter().enumerate().min_by_key(|x| x.1).map(|x| x.0).expect("non-empty");
                let w = if v == 0 { 1 } else { v - 1 };
                m[w] += m[v];
                m.remove(v);
                tt.remove(v);
            }
            c = self.canonical(&tt, &m);
        }
        c
    }

    fn out_of_budget(&self) -> bool {
        self.evals.get() >= self.opts.max_evaluations
    }

    fn grid_local_search(&self, t: Vec<i64>, m: Vec<usize>, moves: &mut usize) -> (Vec<i64>, Vec<usize>, f64) {
        let mut cur = (t, m);
        let mut value = self.disc_value(&self.grid_probs(&cur.0, &cur.1), &cur.1);
        for _ in 0..self.opts.max_local_passes {
            if self.out_of_budget() {
                break;
            }
            let mut best: Option<((Vec<i64>, Vec<usize>), f64)> = None;
            let consider = |cand: Option<(Vec<i64>, Vec<usize>)>, best: &mut Option<((Vec<i64>, Vec<usize>), f64)>| {
                if let Some(c) = cand {
                    let v = self.disc_value(&self.grid_probs(&c.0, &c.1), &c.1);
                    let bar = best.as_ref().map_or(value, |b| b.1);
                    if v > bar + 1e-12 * bar.abs().max(1.0) {
                        *best = Some((c, v));
                    }
                }
            };
            // best improvement on exact objectives, first improvement otherwise
            let done = |best: &Option<((Vec<i64>, Vec<usize>), f64)>| !self.exact && best.is_some();
            let (t, m) = &cur;
            let nl = t.len();
            let total: usize = m.iter().sum();
            'scan: for v in 0..nl {
                for delta in [-16i64, -4, -1, 1, 4, 16] {
                    let mut t2 = t.clone();
                    t2[v] += delta;
                    consider(self.canonical(&t2, m), &mut best);
                    if m[v] >= 2 && delta.abs() <= 4 {
                        let mut t3 = t.clone();
                        let mut m3 = m.clone();
                        m3[v] -= 1;
                        t3.push(t[v] + delta);
                        m3.push(1);
                        consider(self.canonical(&t3, &m3), &mut best);
                    }
                    if done(&best) {
                        break 'scan;
                    }
                }
                for u in 0..nl {
                    if u != v {
                        let mut m2 = m.clone();
                        m2[v] -= 1;
                        m2[u] += 1;
                        consider(self.canonical(t, &m2), &mut best);
                        if done(&best) {
                            break 'scan;
                        }
                    }
                }
                let step = (m[v] / 8).max(1);
                for change in [step as i64, -(step as i64), 1, -1] {
                    let nv = m[v] as i64 + change;
                    let nt = total as i64 + change;
                    if nv < 0 || nt < self.pd.distinct as i64 || nt > self.cap as i64 {
                        continue;
                    }
                    let mut m2 = m.clone();
                    m2[v] = nv as usize;
                    consider(self.canonical(t, &m2), &mut best);
                    if done(&best) {
                        break 'scan;
                    }
                    if step == 1 {
                        break;
                    }
                }
            }
            match best {
                Some((c, v)) => {
                    cur = c;
                    value = v;
                    *moves += 1;
                }
                None => break,
            }
        }
        (cur.0, cur.1, value)
    }

    /// Level values for fixed integer multiplicities (support mode).
    fn refit(&self, p: &[f64], m: &[usize]) -> Vec<f64> {
        let mf: Vec<f64> = m.iter().map(|&x| x as f64).collect();
        let mut p = p.to_vec();
        self.normalize(&mut p, &mf);
        for _ in 0..50 {
            self.evals.set(self.evals.get() + 1);
            let Some((_, a)) = self.coupling_stats(&p, &mf) else {
                break;
            };
            let next = self.fit_probs(&a, &mf);
            let change = next
                .iter()
                .zip(&p)
                .map(|(x, y)| (x.ln() - y.ln()).abs())
                .fold(0.0, f64::max);
            p = next;
            if change < 1e-9 {
                break;
            }
        }
        p
    }

    fn support_local_search(&self, p: Vec<f64>, m: Vec<usize>, moves: &mut usize) -> (Vec<f64>, Vec<usize>, f64) {
        let mut cur_p = p;
        let mut cur_m = m;
        let mut value = self.disc_value(&cur_p, &cur_m);
        for _ in 0..self.opts.max_local_passes {
            if self.out_of_budget() {
                break;
            }
            let nl = cur_m.len();
            let total: usize = cur_m.iter().sum();
            let mut cands: Vec<Vec<usize>> = Vec::new();
            for v in 0..nl {
                let step = (cur_m[v] / 8).max(1);
                for change in [1i64, -1, step as i64, -(step as i64)] {
                    let nv = cur_m[v] as i64 + change;
                    let nt = total as i64 + change;
                    if nv < 0 || nt < self.pd.distinct as i64 || nt > self.cap as i64 {
                        continue;
                    }
                    let mut m2 = cur_m.clone();
                    m2[v] = nv as usize;
                    cands.push(m2);
                }
                for u in 0..nl {
                    if u != v && cur_m[v] > 0 {
                        let mut m2 = cur_m.clone();
                        m2[v] -= 1;
                        m2[u] += 1;
                        cands.push(m2);
                    }
                }
            }
            let mut best: Option<(Vec<f64>, Vec<usize>, f64)> = None;
            for m2 in cands {
                if self.out_of_budget() || (!self.exact && best.is_some()) {
                    break;
                }
                let keep: Vec<usize> = (0..m2.len()).filter(|&v| m2[v] > 0).collect();
                let mk: Vec<usize> = keep.iter().map(|&v| m2[v]).collect();
                let pk: Vec<f64> = keep.iter().map(|&v| cur_p[v]).collect();
                let pf = self.refit(&pk, &mk);
                let v = self.disc_value(&pf, &mk);
                let bar = best.as_ref().map_or(value, |b| b.2);
                if v > bar + 1e-12 * bar.abs().max(1.0) {
                    best = Some((pf, mk, v));
                }
            }
            match best {
                Some((p2, m2, v)) => {
                    cur_p = p2;
                    cur_m = m2;
                    value = v;
                    *moves += 1;
                }
                None => break,
            }
        }
        (cur_p, cur_m, value)
    }

    /// Continuous phase, rounding and (grid mode) snapping; no local search.
    fn rough(&self, init: Cont, fit_m: bool) -> Option<(Rough, Candidate)> {
        let (cont, _, trace, rounds, converged) = self.continuous(init, fit_m);
        if cont.m.is_empty() {
            return None;
        }
        let (p, m) = self.round(&cont);
        if m.is_empty() {
            return None;
        }
        let (rough, probs, mults) = if self.min_prob.is_some() {
            let (p, m) = merge_close(&self.refit(&p, &m), &m);
            let p = self.refit(&p, &m);
            (Rough::Levels(p.clone(), m.clone()), p, m)
        } else {
            let (t, m) = self.snap(&p, &m)?;
            (Rough::Grid(t.clone(), m.clone()), self.grid_probs(&t, &m), m)
        };
        let value = self.disc_value(&probs, &mults);
        Some((
            rough,
            Candidate {
                probs,
                mults,
                value,
                trace,
                rounds,
                moves: 0,
                converged,
            },
        ))
    }

    fn polish(&self, rough: Rough, mut c: Candidate) -> Candidate {
        self.evals.set(0);
        let mut moves = 0;
        let (probs, mults, value) = match rough {
            Rough::Levels(p, m) => self.support_local_search(p, m, &mut moves),
            Rough::Grid(t, m) => {
                let (t, m, v) = self.grid_local_search(t, m, &mut moves);
                (self.grid_probs(&t, &m), m, v)
            }
        };
        if value >= c.value {
            c.probs = probs;
            c.mults = mults;
            c.value = value;
        }
        c.moves = moves;
        c
    }

    fn empirical_start(&self, with_unseen: bool) -> Cont {
        let n = self.pd.n as f64;
        let lr = self.opts.grid_ratio.ln();
        let mut bins: Vec<(i64, f64, f64)> = Vec::new();
        for (&j, &c) in self.pd.freqs.iter().zip(&self.pd.counts) {
            let b = ((j as f64).ln() / lr).floor() as i64;
            match bins.last_mut() {
                Some(last) if last.0 == b => {
                    last.1 += c as f64;
                    last.2 += (j * c) as f64;
                }
                _ => bins.push((b, c as f64, (j * c) as f64)),
            }
        }
        let mut p: Vec<f64> = bins.iter().map(|b| b.2 / (n * b.1)).collect();
        let mut m: Vec<f64> = bins.iter().map(|b| b.1).collect();
        let spare = self.cap.saturating_sub(self.pd.distinct) as f64;
        if with_unseen && spare > 0.0 {
            let mu = spare.min(self.pd.distinct as f64).max(1.0);
            let floor = self.min_prob.unwrap_or(0.0);
            p.push((0.5 / n).max(floor));
            m.push(mu);
        }
        self.normalize(&mut p, &m);
        Cont { p, m }
    }

    fn uniform_start(&self, s: usize) -> Cont {
        Cont {
            p: vec![(1.0 - self.q) / s as f64],
            m: vec![s as f64],
        }
    }

    fn starts(&self) -> Vec<(Cont, bool)> {
        let mut out = vec![(self.empirical_start(true), true), (self.empirical_start(false), true)];
        let d = self.pd.distinct.max(1);
        let sizes: Vec<usize> = if self.cap <= 64 {
            (d..=self.cap).collect()
        } else {
            let mut v = Vec::new();
            let mut s = d as f64;
            while (s as usize) < self.cap {
                v.push(s as usize);
                s *= 2.0;
            }
            v.push(self.cap);
            v
        };
        // flat starts only pay off on small symbol counts
        for s in sizes.into_iter().filter(|_| self.cap <= 64) {
            if self.min_prob.map_or(true, |f| (1.0 - self.q) / s as f64 >= f - 1e-15) {
                out.push((self.uniform_start(s), false));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        for _ in 0..self.opts.restarts {
            let mut c = self.empirical_start(true);
            for x in c.p.iter_mut() {
                *x *= (rng.random::<f64>() - 0.5).exp();
            }
            for x in c.m.iter_mut() {
                *x = (*x * (0.5 + rng.random::<f64>())).max(1.0);
            }
            let total: f64 = c.m.iter().sum();
            if total > self.cap as f64 {
                let k = self.cap as f64 / total;
                c.m.iter_mut().for_each(|x| *x *= k);
            }
            self.normalize(&mut c.p, &c.m);
            out.push((c, true));
        }
        out
    }
}

fn solve<P: FrequencyProfile + ?Sized>(phi: &P, opts: &SolverOptions, support_k: Option<usize>) -> Result<PmlResult> {
    if !(opts.grid_ratio > 1.0) || !opts.grid_ratio.is_finite() {
        return Err(Error::Config(format!("grid ratio {} must exceed 1", opts.grid_ratio)));
    }
    let pd = ProfileData::new(phi);
    let domain = phi.domain_size();
    let eligible = pd.eligible;
    let (cap, min_prob) = match support_k {
        Some(k) => (eligible.min(k), Some(1.0 / k as f64)),
        None => (eligible, None),
    };
    let q = if pd.pseudo {
        match opts.pin_outside_mass {
            Some(q) => {
                if !(0.0..=1.0).contains(&q) || (q == 0.0 && pd.n_out > 0) || (q == 1.0 && pd.n > pd.n_out) {
                    return Err(Error::Config(format!("outside mass {q} incompatible with the profile")));
                }
                q
            }
            None => pd.n_out as f64 / pd.n.max(1) as f64,
        }
    } else {
        0.0
    };

    if pd.distinct == 0 {
        // nothing observed in the profiled set
        let dist = if eligible == 0 || (pd.pseudo && q >= 1.0) || (pd.pseudo && pd.n > 0 && opts.pin_outside_mass.is_none()) {
            DiscreteDistribution::with_outside(vec![], domain, if pd.pseudo { 1.0 } else { 0.0 })?
        } else {
            let s = cap.max(1).min(eligible);
            DiscreteDistribution::with_outside(
                vec![Level {
                    prob: (1.0 - q) / s as f64,
                    mult: s,
                }],
                domain,
                q,
            )?
        };
        let value = if pd.n_out > 0 { pd.constant(dist.outside_mass()).min(0.0) } else { 0.0 };
        return Ok(PmlResult {
            distribution: dist,
            log_likelihood: value,
            beta_certificate: None,
            stats: SolverStats {
                converged: true,
                exact_objective: true,
                ..Default::default()
            },
        });
    }

    let t_max = max_exponent(pd.n, eligible, opts.grid_ratio) as i64;
    let exact = pd.exact_work(MAX_LEVELS) <= opts.exact_budget;
    let problem = Problem {
        seen: (pd.n - pd.n_out) as f64,
        pd,
        opts,
        cap,
        q,
        min_prob,
        exact,
        t_max,
        evals: std::cell::Cell::new(0),
    };

    let starts = problem.starts();
    let nstarts = starts.len();
    let mut rough: Vec<(Rough, Candidate)> = starts.into_iter().filter_map(|(init, fit_m)| problem.rough(init, fit_m)).collect();
    // stable: ties keep start order
    rough.sort_by(|a, b| b.1.value.total_cmp(&a.1.value));
    let keep = if problem.exact { rough.len() } else { POLISHED_STARTS };
    let mut best: Option<Candidate> = None;
    for (r, c) in rough.into_iter().take(keep) {
        let c = problem.polish(r, c);
        if best.as_ref().map_or(true, |b| c.value > b.value) {
            best = Some(c);
        }
    }
    let best = best.ok_or_else(|| Error::Config("no start produced a feasible distribution".into()))?;

    let mut order: Vec<usize> = (0..best.probs.len()).collect();
    order.sort_by(|&a, &b| best.probs[b].total_cmp(&best.probs[a]));
    let levels: Vec<Level> = order
        .iter()
        .map(|&v| Level {
            prob: best.probs[v],
            mult: best.mults[v],
        })
        .collect();
    let distribution = DiscreteDistribution::with_outside(levels, domain, q)?;

    let beta_certificate = if opts.certify
        && support_k.is_none()
        && eligible <= CERTIFY_MAX_SYMBOLS
        && problem.pd.n <= GRID_MAX_LENGTH
    {
        let opt = grid_optimum(phi, eligible, opts.grid_ratio, Some(q))?;
        let mults: Vec<usize> = distribution.levels().iter().map(|l| l.mult).collect();
        let probs: Vec<f64> = distribution.levels().iter().map(|l| l.prob).collect();
        let exact_value = problem.pd.constant(q) + exact_log_sum(&problem.pd, &probs, &mults);
        opt.best_for(eligible).map(|b| (exact_value - b.log_likelihood).exp())
    } else {
        None
    };

    Ok(PmlResult {
        distribution,
        log_likelihood: best.value.min(0.0),
        beta_certificate,
        stats: SolverStats {
            iterations: best.rounds,
            grid_size: (t_max + 1) as usize,
            restarts: nstarts,
            local_moves: best.moves,
            exact_objective: exact,
            converged: best.converged,
            trace: best.trace,
        },
    })
}

/// Approximate maximizer of the (pseudo) profile likelihood.
pub fn approximate_pml<P: FrequencyProfile + ?Sized>(phi: &P, opts: &SolverOptions) -> Result<PmlResult> {
    solve(phi, opts, None)
}

/// PML restricted to distributions whose nonzero probabilities are all at
/// least `1/k`; the support of the result is the support estimate.
pub fn constrained_pml_support(phi: &Profile, k: usize, opts: &SolverOptions) -> Result<PmlResult> {
    let distinct = distinct_count(phi);
    if k == 0 || k < distinct {
        return Err(Error::InfeasibleSupport { k, distinct });
    }
    solve(phi, opts, Some(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pml::{log_likelihood, Level, Method};
    use crate::profiles::Profile;

    #[test]
    fn all_distinct_pair_prefers_wide_support() {
        let phi = Profile::new([(1, 2)], 10).unwrap();
        let r = approximate_pml(&phi, &SolverOptions::default()).unwrap();
        let exact = log_likelihood(&r.distribution, &phi, Method::Exact).unwrap().value.exp();
        assert!(exact >= 0.9 - 1e-6, "likelihood {exact}");
        assert!((r.log_likelihood - exact.ln()).abs() < 1e-9);
        // uniform over two symbols only reaches 0.5
        let two = DiscreteDistribution::uniform(2, 10).unwrap();
        assert!(log_likelihood(&two, &phi, Method::Exact).unwrap().value < exact.ln());
    }

    #[test]
    fn single_symbol_gives_point_mass() {
        let phi = Profile::new([(4, 1)], 3).unwrap();
        let r = approximate_pml(&phi, &SolverOptions::default()).unwrap();
        assert_eq!(r.distribution.levels(), &[Level { prob: 1.0, mult: 1 }]);
        assert_eq!(r.log_likelihood, 0.0);
    }

    #[test]
    fn empty_profile_gives_uniform() {
        let phi = Profile::new([], 7).unwrap();
        let r = approximate_pml(&phi, &SolverOptions::default()).unwrap();
        assert_eq!(r.distribution.levels(), &[Level { prob: 1.0 / 7.0, mult: 7 }]);
    }

    #[test]
    fn support_examples() {
        let opts = SolverOptions::default();
        // three symbols, four draws each
        let phi = Profile::new([(4, 3)], 4).unwrap();
        let r = constrained_pml_support(&phi, 4, &opts).unwrap();
        assert_eq!(r.distribution.support_size(), 3);

        let phi = Profile::new([(1, 6)], 6).unwrap();
        let r = constrained_pml_support(&phi, 6, &opts).unwrap();
        assert_eq!(r.distribution.support_size(), 6);

        let phi = Profile::new([(5, 1)], 1).unwrap();
        let r = constrained_pml_support(&phi, 1, &opts).unwrap();
        assert_eq!(r.distribution.support_size(), 1);

        let phi = Profile::new([(1, 3)], 9).unwrap();
        assert!(matches!(
            constrained_pml_support(&phi, 2, &opts),
            Err(Error::InfeasibleSupport { k: 2, distinct: 3 })
        ));
    }

    #[test]
    fn support_results_stay_normalized() {
        let opts = SolverOptions::default();
        for (phi, k) in [
            (vec![(2, 3), (3, 3), (5, 2)], 10),
            (vec![(1, 4), (2, 4), (4, 2)], 10),
            (vec![(3, 6)], 6),
        ] {
            let phi = Profile::new(phi, 2 * k).unwrap();
            let d = constrained_pml_support(&phi, k, &opts).unwrap().distribution;
            let mass: f64 = d.levels().iter().map(|l| l.prob * l.mult as f64).sum();
            assert!((mass - 1.0).abs() < 1e-9, "mass {mass}");
            assert!(d.levels().iter().all(|l| l.prob >= 1.0 / k as f64 - 1e-12));
        }
    }

    #[test]
    fn trace_is_monotone() {
        let phi = Profile::new([(1, 30), (2, 10), (3, 4), (7, 2), (20, 1)], 500).unwrap();
        let r = approximate_pml(&phi, &SolverOptions::default()).unwrap();
        for w in r.stats.trace.windows(2) {
            assert!(w[1] >= w[0], "{w:?}");
        }
        assert!(r.log_likelihood <= 0.0);
    }
}
