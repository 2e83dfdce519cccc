//! Profile log-likelihood of a level distribution.
//!
//! With levels `(p_v, m_v)` and profile `phi` the probability is
//!
//! ```text
//! n! / (prod_j j!^phi_j * n_out!) * q^n_out
//!   * sum_c prod_v m_v! / (c_0v! prod_j c_jv!) * prod_j p_v^(j c_jv)
//! ```
//!
//! where `c_jv` symbols of level `v` appear `j` times (`c_0v` unseen) and
//! `q` is the mass outside the profiled set. The sum over couplings `c` is
//! computed exactly by dynamic programming when cheap enough, and otherwise
//! approximated by matrix scaling: the Sinkhorn potentials give the saddle
//! point upper bound on the sum, which is then corrected by the Gaussian
//! volume term of the local limit theorem.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::profiles::FrequencyProfile;

use super::DiscreteDistribution;

/// How to evaluate the coupling sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exact when the dynamic program fits the work budget.
    Auto { budget: u64 },
    Exact,
    Surrogate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Likelihood {
    pub value: f64,
    pub exact: bool,
    /// False when matrix scaling hit its sweep cap; the value is still a
    /// valid (looser) bound.
    pub converged: bool,
}

pub(crate) fn lnfact(k: f64) -> f64 {
    ln_gamma(k + 1.0)
}

fn lse(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn lse_slice(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// The parts of a (pseudo) profile the likelihood needs.
#[derive(Debug, Clone)]
pub(crate) struct ProfileData {
    pub freqs: Vec<usize>,
    pub counts: Vec<usize>,
    pub n: usize,
    pub n_out: usize,
    pub distinct: usize,
    pub pseudo: bool,
    pub eligible: usize,
}

impl ProfileData {
    pub fn new<P: FrequencyProfile + ?Sized>(phi: &P) -> Self {
        let freqs: Vec<usize> = phi.phi().keys().copied().collect();
        let counts: Vec<usize> = phi.phi().values().copied().collect();
        Self {
            distinct: counts.iter().sum(),
            n: phi.length(),
            n_out: phi.outside_draws(),
            pseudo: phi.is_pseudo(),
            eligible: phi.eligible_symbols(),
            freqs,
            counts,
        }
    }

    /// `ln n! - sum_j phi_j ln j! - ln n_out! + n_out ln q`.
    pub fn constant(&self, q: f64) -> f64 {
        let mut c = lnfact(self.n as f64) - lnfact(self.n_out as f64);
        for (&j, &cnt) in self.freqs.iter().zip(&self.counts) {
            c -= cnt as f64 * lnfact(j as f64);
        }
        if self.n_out > 0 {
            c += if q > 0.0 {
                self.n_out as f64 * q.ln()
            } else {
                f64::NEG_INFINITY
            };
        }
        c
    }

    /// Operation count of the exact dynamic program with `levels` levels.
    pub fn exact_work(&self, levels: usize) -> f64 {
        let per_level: f64 = self
            .counts
            .iter()
            .map(|&c| (c as f64 + 1.0) * (c as f64 + 2.0) / 2.0)
            .product();
        let states: f64 = self.counts.iter().map(|&c| c as f64 + 1.0).product();
        levels.saturating_sub(1) as f64 * per_level + levels as f64 * states
    }
}

/// Log of the coupling sum for a single level (closed form).
fn single_level(pd: &ProfileData, p: f64, m: f64) -> f64 {
    let d = pd.distinct as f64;
    if m + 1e-9 < d {
        return f64::NEG_INFINITY;
    }
    let mut v = lnfact(m) - lnfact((m - d).max(0.0));
    for (&j, &c) in pd.freqs.iter().zip(&pd.counts) {
        v -= lnfact(c as f64);
        v += (j * c) as f64 * p.ln();
    }
    v
}

/// Exact log coupling sum, level by level over the vector of frequency
/// buckets still to be placed.
pub(crate) fn exact_log_sum(pd: &ProfileData, probs: &[f64], mults: &[usize]) -> f64 {
    let levels: Vec<(f64, usize)> = probs
        .iter()
        .zip(mults)
        .filter(|(_, &m)| m > 0)
        .map(|(&p, &m)| (p, m))
        .collect();
    if pd.distinct == 0 {
        return 0.0;
    }
    if levels.is_empty() {
        return f64::NEG_INFINITY;
    }
    if levels.len() == 1 {
        return single_level(pd, levels[0].0, levels[0].1 as f64);
    }
    let dims: Vec<usize> = pd.counts.iter().map(|c| c + 1).collect();
    let mut strides = vec![1usize; dims.len()];
    for k in 1..dims.len() {
        strides[k] = strides[k - 1] * dims[k - 1];
    }
    let nstates: usize = dims.iter().product();
    let digits_of = |mut idx: usize| -> Vec<usize> {
        dims.iter()
            .map(|&d| {
                let r = idx % d;
                idx /= d;
                r
            })
            .collect()
    };
    let table = |p: f64, m: usize| -> Vec<f64> {
        let lp = p.ln();
        (0..nstates)
            .map(|idx| {
                let c = digits_of(idx);
                let tot: usize = c.iter().sum();
                if tot > m {
                    return f64::NEG_INFINITY;
                }
                let mut w = lnfact(m as f64) - lnfact((m - tot) as f64);
                for (k, &ck) in c.iter().enumerate() {
                    w -= lnfact(ck as f64);
                    w += (pd.freqs[k] * ck) as f64 * lp;
                }
                w
            })
            .collect()
    };

    let mut dp = vec![f64::NEG_INFINITY; nstates];
    dp[nstates - 1] = 0.0;
    for &(p, m) in &levels[..levels.len() - 1] {
        let w = table(p, m);
        let mut next = vec![f64::NEG_INFINITY; nstates];
        for (r_idx, &base) in dp.iter().enumerate() {
            if base == f64::NEG_INFINITY {
                continue;
            }
            let r = digits_of(r_idx);
            // odometer over sub-vectors c <= r
            let mut c = vec![0usize; r.len()];
            let mut c_idx = 0usize;
            loop {
                let wc = w[c_idx];
                if wc > f64::NEG_INFINITY {
                    let t = r_idx - c_idx;
                    next[t] = lse(next[t], base + wc);
                }
                let mut k = 0;
                loop {
                    if k == r.len() {
                        break;
                    }
                    if c[k] < r[k] {
                        c[k] += 1;
                        c_idx += strides[k];
                        break;
                    }
                    c_idx -= c[k] * strides[k];
                    c[k] = 0;
                    k += 1;
                }
                if k == r.len() {
                    break;
                }
            }
        }
        dp = next;
    }
    let (p, m) = levels[levels.len() - 1];
    let w = table(p, m);
    lse_slice(dp.iter().zip(&w).map(|(a, b)| a + b))
}

/// Sinkhorn sweeps on the row-normalized kernel in the linear domain.
/// Returns the row log-potentials, or `None` on underflow.
fn sweep_linear(lk: &[Vec<f64>], rows: &[f64], cols: &[f64], tol: f64, max_sweeps: usize) -> Option<(Vec<f64>, bool)> {
    let nr = rows.len();
    let nc = cols.len();
    let row_max: Vec<f64> = lk.iter().map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let k: Vec<f64> = (0..nr)
        .flat_map(|r| (0..nc).map(move |c| (r, c)))
        .map(|(r, c)| (lk[r][c] - row_max[r]).exp())
        .collect();
    let mut u = vec![1.0; nr];
    let mut v = vec![0.0; nc];
    let mut converged = false;
    for _ in 0..max_sweeps {
        for c in 0..nc {
            let s: f64 = (0..nr).map(|r| u[r] * k[r * nc + c]).sum();
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            v[c] = cols[c] / s;
        }
        let mut err: f64 = 0.0;
        for r in 0..nr {
            let s: f64 = (0..nc).map(|c| k[r * nc + c] * v[c]).sum();
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            err = err.max((u[r] * s / rows[r] - 1.0).abs());
            u[r] = rows[r] / s;
        }
        if err <= tol {
            converged = true;
            break;
        }
    }
    let f: Vec<f64> = (0..nr).map(|r| u[r].ln() - row_max[r]).collect();
    if f.iter().all(|x| x.is_finite()) {
        Some((f, converged))
    } else {
        None
    }
}

fn sweep_log(lk: &[Vec<f64>], ln_r: &[f64], ln_m: &[f64], tol: f64, max_sweeps: usize) -> (Vec<f64>, bool) {
    let nr = ln_r.len();
    let nc = ln_m.len();
    let mut f = vec![0.0; nr];
    let mut g = vec![0.0; nc];
    for _ in 0..max_sweeps {
        for c in 0..nc {
            g[c] = ln_m[c] - lse_slice((0..nr).map(|r| f[r] + lk[r][c]));
        }
        let mut err: f64 = 0.0;
        for r in 0..nr {
            let s = lse_slice((0..nc).map(|c| g[c] + lk[r][c]));
            err = err.max(((s - ln_r[r]).exp() - 1.0).abs());
            f[r] = ln_r[r] - s;
        }
        if err <= tol {
            return (f, true);
        }
    }
    (f, false)
}

/// Sweeps tried before switching to Newton steps on the dual.
const WARMUP_SWEEPS: usize = 30;

/// Dual objective `sum_c m_c lse_r(f_r + lk_rc) - sum_r R_r f_r`, the
/// column distributions it induces (column-major, `nr` per column), the row
/// marginals and their largest relative error.
fn dual(lk: &[Vec<f64>], rows: &[f64], cols: &[f64], f: &[f64]) -> (f64, Vec<f64>, Vec<f64>, f64) {
    let nr = rows.len();
    let mut value = -rows.iter().zip(f).map(|(r, x)| r * x).sum::<f64>();
    let mut marg = vec![0.0; nr];
    let mut pi = vec![0.0; nr * cols.len()];
    for (c, &mc) in cols.iter().enumerate() {
        let col = &mut pi[c * nr..(c + 1) * nr];
        let mut mx = f64::NEG_INFINITY;
        for r in 0..nr {
            col[r] = f[r] + lk[r][c];
            mx = mx.max(col[r]);
        }
        let mut z = 0.0;
        for x in col.iter_mut() {
            *x = (*x - mx).exp();
            z += *x;
        }
        value += mc * (mx + z.ln());
        for r in 0..nr {
            col[r] /= z;
            marg[r] += mc * col[r];
        }
    }
    let err = (0..nr).map(|r| (marg[r] / rows[r] - 1.0).abs()).fold(0.0, f64::max);
    (value, pi, marg, err)
}

/// Damped Newton on the dual with the last potential held fixed, with a
/// ridge added when the Hessian is numerically singular. Returns `None` if
/// no step can be computed.
fn newton(lk: &[Vec<f64>], rows: &[f64], cols: &[f64], mut f: Vec<f64>, tol: f64, max_iter: usize) -> Option<(Vec<f64>, bool)> {
    let nr = rows.len();
    let d = nr - 1;
    let (mut value, mut pi, mut marg, mut err) = dual(lk, rows, cols, &f);
    for _ in 0..max_iter {
        if err <= tol {
            return Some((f, true));
        }
        let g = DVector::from_iterator(d, (0..d).map(|r| marg[r] - rows[r]));
        let mut h = DMatrix::<f64>::zeros(d, d);
        for (c, &mc) in cols.iter().enumerate() {
            let p = &pi[c * nr..c * nr + d];
            for b in 0..d {
                let wb = mc * p[b];
                if wb == 0.0 {
                    continue;
                }
                h[(b, b)] += wb;
                for a in 0..d {
                    h[(a, b)] -= wb * p[a];
                }
            }
        }
        let scale = (0..d).map(|a| h[(a, a)]).fold(0.0, f64::max).max(1e-300);
        let mut ridge = 0.0;
        let chol = loop {
            let mut hr = h.clone();
            for a in 0..d {
                hr[(a, a)] += ridge;
            }
            if let Some(c) = hr.cholesky() {
                break c;
            }
            ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 100.0 };
            if ridge > scale {
                return None;
            }
        };
        let step = chol.solve(&(-&g));
        let slope = g.dot(&step);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = (0..nr).map(|a| if a < d { f[a] + t * step[a] } else { f[a] }).collect();
            let (v, p, m, e) = dual(lk, rows, cols, &trial);
            // near the optimum the decrease drops below rounding; fall back on the residual
            if v <= value + 1e-4 * t * slope || e < err {
                (f, value, pi, marg, err) = (trial, v, p, m, e);
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Some((f, err <= tol))
}

/// Result of matrix scaling on the `(rows) x (levels)` kernel.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    /// Log of the scaled upper bound on the coupling sum.
    pub bound: f64,
    /// Expected coupling, rows in order: unseen (if present) then each
    /// profile frequency; `row_freq` gives each row's frequency.
    pub coupling: Vec<Vec<f64>>,
    pub row_freq: Vec<usize>,
    pub row_mass: Vec<f64>,
    /// Multiplicity and row distribution of each level with positive multiplicity.
    pub col_mult: Vec<f64>,
    pub col_pi: Vec<Vec<f64>>,
    pub converged: bool,
}

pub(crate) fn scale(pd: &ProfileData, probs: &[f64], mults: &[f64], tol: f64, max_sweeps: usize) -> Option<Scaling> {
    let total_m: f64 = mults.iter().sum();
    let r0 = total_m - pd.distinct as f64;
    if r0 < -1e-9 {
        return None;
    }
    let mut row_freq = Vec::new();
    let mut row_mass = Vec::new();
    if r0 > 1e-12 {
        row_freq.push(0);
        row_mass.push(r0);
    }
    for (&j, &c) in pd.freqs.iter().zip(&pd.counts) {
        row_freq.push(j);
        row_mass.push(c as f64);
    }
    let cols: Vec<usize> = (0..mults.len()).filter(|&v| mults[v] > 0.0).collect();
    let nr = row_freq.len();
    let nc = cols.len();
    if nr == 0 {
        return Some(Scaling {
            bound: 0.0,
            coupling: vec![],
            row_freq,
            row_mass,
            col_mult: vec![],
            col_pi: vec![],
            converged: true,
        });
    }
    if nc == 0 {
        return None;
    }
    let lk: Vec<Vec<f64>> = row_freq
        .iter()
        .map(|&j| cols.iter().map(|&v| j as f64 * probs[v].ln()).collect())
        .collect();
    let ln_m: Vec<f64> = cols.iter().map(|&v| mults[v].ln()).collect();
    let ln_r: Vec<f64> = row_mass.iter().map(|r| r.ln()).collect();

    let col_m: Vec<f64> = cols.iter().map(|&v| mults[v]).collect();
    let warm = max_sweeps.min(WARMUP_SWEEPS);
    let (mut f, mut converged) = match sweep_linear(&lk, &row_mass, &col_m, tol, warm) {
        Some(r) => r,
        None => sweep_log(&lk, &ln_r, &ln_m, tol, warm),
    };
    if !converged && nr > 1 && f.iter().all(|x| x.is_finite()) {
        // the bound holds for any potentials, so a stalled Newton run is kept
        match newton(&lk, &row_mass, &col_m, f.clone(), tol, 30) {
            Some((g, ok)) => {
                f = g;
                converged = ok;
            }
            None => {
                let more = max_sweeps - warm;
                (f, converged) = match sweep_linear(&lk, &row_mass, &col_m, tol, more) {
                    Some(r) => r,
                    None => sweep_log(&lk, &ln_r, &ln_m, tol, more),
                };
            }
        }
    }
    // columns exact for the final row potentials
    let col_lse: Vec<f64> = (0..nc)
        .map(|c| lse_slice((0..nr).map(|r| f[r] + lk[r][c])))
        .collect();
    let mut bound = 0.0;
    for c in 0..nc {
        bound += mults[cols[c]] * col_lse[c];
    }
    for r in 0..nr {
        bound -= row_mass[r] * f[r];
    }

    let mut coupling = vec![vec![0.0; mults.len()]; nr];
    let mut col_pi = Vec::with_capacity(nc);
    for c in 0..nc {
        let m = mults[cols[c]];
        let pi: Vec<f64> = (0..nr).map(|r| (f[r] + lk[r][c] - col_lse[c]).exp()).collect();
        for r in 0..nr {
            coupling[r][cols[c]] = m * pi[r];
        }
        col_pi.push(pi);
    }
    Some(Scaling {
        bound,
        coupling,
        row_freq,
        row_mass,
        col_mult: cols.iter().map(|&v| mults[v]).collect(),
        col_pi,
        converged,
    })
}

/// Number of ways to split `m` trials over `k` outcomes.
fn compositions(m: usize, k: usize) -> f64 {
    (1..k).map(|i| (m + i) as f64 / i as f64).product()
}

/// All outcome vectors (first `d` coordinates) of `m` multinomial trials
/// with probabilities `pi`, with their log probabilities.
fn multinomial_outcomes(m: usize, pi: &[f64]) -> Vec<(Vec<u32>, f64)> {
    fn rec(m: usize, pi: &[f64], k: usize, cur: &mut Vec<u32>, lp: f64, out: &mut Vec<(Vec<u32>, f64)>) {
        if k + 1 == pi.len() {
            let x = m as f64;
            let v = lp - lnfact(x) + if m > 0 { x * pi[k].ln() } else { 0.0 };
            out.push((cur.clone(), v));
            return;
        }
        for x in 0..=m {
            if x > 0 && pi[k] <= 0.0 {
                break;
            }
            cur.push(x as u32);
            let xf = x as f64;
            let term = if x > 0 { xf * pi[k].ln() } else { 0.0 };
            rec(m - x, pi, k + 1, cur, lp - lnfact(xf) + term, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, pi, 0, &mut Vec::new(), lnfact(m as f64), &mut out);
    out
}

const MAX_OUTCOMES: f64 = 300.0;
/// Budget on (state, outcome) pairs visited by the enumeration.
const MAX_WORK: f64 = 5e4;
/// Enumeration only runs when the lattice of partial row sums is this small.
const MAX_SPACE: f64 = 1e4;

impl Scaling {
    /// Log probability, under the scaled (tilted) column multinomials, that
    /// the row totals come out exactly right; `bound + log_volume` is the
    /// coupling sum. Levels with small integer multiplicity are enumerated
    /// exactly when `enumerate` is set; the rest are replaced by a Gaussian
    /// with the lattice correction `1/12` added to the variances.
    pub fn log_volume(&self, enumerate: bool) -> f64 {
        let nr = self.row_mass.len();
        if nr <= 1 {
            return 0.0;
        }
        let d = nr - 1;
        let target: Vec<f64> = self.row_mass[..d].to_vec();
        let mut order: Vec<usize> = (0..self.col_mult.len()).collect();
        order.sort_by(|&a, &b| self.col_mult[a].total_cmp(&self.col_mult[b]).then(a.cmp(&b)));

        // states are keyed by the mixed-radix index of the partial row sums
        let mut strides = vec![0u64; d];
        let mut space = 1.0f64;
        let integral = target.iter().all(|t| (t - t.round()).abs() < 1e-9);
        if integral {
            for a in 0..d {
                strides[a] = space as u64;
                space *= target[a].round() + 1.0;
            }
        }
        let mut small: Vec<usize> = Vec::new();
        if enumerate && integral && space <= MAX_SPACE {
            let mut states = 1.0f64;
            let mut work = 0.0;
            for &c in &order {
                let m = self.col_mult[c];
                if (m - m.round()).abs() > 1e-9 {
                    continue;
                }
                let k = compositions(m.round() as usize, nr);
                if k > MAX_OUTCOMES || work + states * k > MAX_WORK {
                    break;
                }
                work += states * k;
                states = (states * k).min(space);
                small.push(c);
            }
        }
        let big: Vec<usize> = order.iter().copied().filter(|c| !small.contains(c)).collect();

        // distribution of the enumerated columns' total
        let tgt: Vec<u32> = target.iter().map(|t| t.round() as u32).collect();
        let decode = |mut key: u64| -> Vec<u32> {
            let mut y = vec![0u32; d];
            for a in 0..d {
                let base = tgt[a] as u64 + 1;
                y[a] = (key % base) as u32;
                key /= base;
            }
            y
        };
        let mut dist: std::collections::BTreeMap<u64, f64> = std::collections::BTreeMap::new();
        dist.insert(0, 0.0);
        let mut small_total = 0.0;
        for &c in &small {
            let m = self.col_mult[c].round() as usize;
            small_total += m as f64;
            let outcomes: Vec<(Vec<u32>, u64, u32, f64)> = multinomial_outcomes(m, &self.col_pi[c])
                .into_iter()
                .filter(|(x, _)| x.iter().zip(&tgt).all(|(a, b)| a <= b))
                .map(|(x, lq)| {
                    let off = x.iter().zip(&strides).map(|(&a, &s)| a as u64 * s).sum();
                    let used = x.iter().sum();
                    (x, off, used, lq)
                })
                .collect();
            let mut next: std::collections::BTreeMap<u64, f64> = std::collections::BTreeMap::new();
            for (&key, &lp) in &dist {
                let y = decode(key);
                let used_y: u32 = y.iter().sum();
                for (x, off, used_x, lq) in &outcomes {
                    if small_total - (used_y + used_x) as f64 > self.row_mass[d] + 1e-9
                        || y.iter().zip(x).zip(&tgt).any(|((a, b), t)| a + b > *t)
                    {
                        continue;
                    }
                    let e = next.entry(key + off).or_insert(f64::NEG_INFINITY);
                    *e = lse(*e, lp + lq);
                }
            }
            dist = next;
        }

        let log_p = if big.is_empty() {
            let full: u64 = tgt.iter().zip(&strides).map(|(&t, &s)| t as u64 * s).sum();
            dist.get(&full).copied().unwrap_or(f64::NEG_INFINITY)
        } else {
            let mut mean = vec![0.0; d];
            let mut cov = DMatrix::<f64>::identity(d, d) / 12.0;
            for &c in &big {
                let m = self.col_mult[c];
                let pi = &self.col_pi[c];
                for a in 0..d {
                    mean[a] += m * pi[a];
                    cov[(a, a)] += m * pi[a];
                    for b in 0..d {
                        cov[(a, b)] -= m * pi[a] * pi[b];
                    }
                }
            }
            let Some(ch) = cov.cholesky() else {
                return 0.0;
            };
            let logdet: f64 = 2.0 * ch.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
            let norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + logdet);
            dist.iter()
                .map(|(&key, &lp)| {
                    let y = decode(key);
                    let diff = nalgebra::DVector::from_iterator(
                        d,
                        (0..d).map(|a| target[a] - y[a] as f64 - mean[a]),
                    );
                    let sol = ch.solve(&diff);
                    lp + norm - 0.5 * diff.dot(&sol)
                })
                .fold(f64::NEG_INFINITY, lse)
        };
        log_p.min(0.0)
    }
}

/// Surrogate log coupling sum (exact closed form for a single level).
pub(crate) fn surrogate_log_sum(
    pd: &ProfileData,
    probs: &[f64],
    mults: &[f64],
    tol: f64,
    sweeps: usize,
    enumerate: bool,
) -> (f64, bool) {
    let active: Vec<usize> = (0..mults.len()).filter(|&v| mults[v] > 0.0).collect();
    if pd.distinct == 0 {
        return (0.0, true);
    }
    if active.len() == 1 {
        let v = active[0];
        return (single_level(pd, probs[v], mults[v]), true);
    }
    match scale(pd, probs, mults, tol, sweeps) {
        Some(s) => (s.bound + s.log_volume(enumerate), s.converged),
        None => (f64::NEG_INFINITY, true),
    }
}

/// Log-likelihood of explicit levels; `q` is the outside mass.
pub(crate) fn level_log_likelihood(
    pd: &ProfileData,
    probs: &[f64],
    mults: &[f64],
    q: f64,
    exact: bool,
    enumerate: bool,
    tol: f64,
    sweeps: usize,
) -> Likelihood {
    let c = pd.constant(q);
    let (sum, converged) = if exact {
        let mi: Vec<usize> = mults.iter().map(|m| m.round() as usize).collect();
        (exact_log_sum(pd, probs, &mi), true)
    } else {
        surrogate_log_sum(pd, probs, mults, tol, sweeps, enumerate)
    };
    let value = c + sum;
    Likelihood {
        value: if value.is_nan() { f64::NEG_INFINITY } else { value.min(0.0) },
        exact,
        converged,
    }
}

fn dist_parts<P: FrequencyProfile + ?Sized>(dist: &DiscreteDistribution, phi: &P) -> Result<(ProfileData, Vec<f64>, Vec<f64>, f64)> {
    let pd = ProfileData::new(phi);
    if dist.support_size() > pd.eligible {
        return Err(Error::Invalid(format!(
            "distribution has {} symbols but the profile allows {}",
            dist.support_size(),
            pd.eligible
        )));
    }
    let probs: Vec<f64> = dist.levels().iter().map(|l| l.prob).collect();
    let mults: Vec<f64> = dist.levels().iter().map(|l| l.mult as f64).collect();
    let q = if pd.pseudo {
        dist.outside_mass()
    } else {
        0.0
    };
    Ok((pd, probs, mults, q))
}

/// Log profile probability of a level distribution. For pseudo profiles the
/// levels describe symbols of `S` and the outside mass covers the rest.
pub fn log_likelihood<P: FrequencyProfile + ?Sized>(dist: &DiscreteDistribution, phi: &P, method: Method) -> Result<Likelihood> {
    let (pd, probs, mults, q) = dist_parts(dist, phi)?;
    let exact = match method {
        Method::Exact => true,
        Method::Surrogate => false,
        Method::Auto { budget } => pd.exact_work(probs.len()) <= budget as f64,
    };
    Ok(level_log_likelihood(&pd, &probs, &mults, q, exact, true, 1e-8, 1000))
}

/// The matrix-scaling approximation, regardless of instance size.
pub fn surrogate_log_likelihood<P: FrequencyProfile + ?Sized>(dist: &DiscreteDistribution, phi: &P) -> Result<Likelihood> {
    log_likelihood(dist, phi, Method::Surrogate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pml::{profile_probability_exact, Level};
    use crate::profiles::Profile;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_matches_closed_form() {
        // uniform over m: P(phi) = m!/(m-D)! / prod phi_j! * n!/prod j!^phi_j * m^-n
        let phi = Profile::new([(1, 3), (2, 2), (5, 1)], 50).unwrap();
        let m = 40usize;
        let d = 6.0;
        let n = 12.0;
        let closed = lnfact(m as f64) - lnfact(m as f64 - d) - lnfact(3.0) - lnfact(2.0)
            + lnfact(n)
            - 2.0 * lnfact(2.0)
            - lnfact(5.0)
            - n * (m as f64).ln();
        let dist = DiscreteDistribution::uniform(m, 50).unwrap();
        for method in [Method::Exact, Method::Surrogate] {
            let l = log_likelihood(&dist, &phi, method).unwrap();
            assert_abs_diff_eq!(l.value, closed, epsilon = 1e-9);
        }
    }

    #[test]
    fn point_mass_is_certain() {
        let phi = Profile::new([(7, 1)], 3).unwrap();
        let dist = DiscreteDistribution::uniform(1, 3).unwrap();
        let l = surrogate_log_likelihood(&dist, &phi).unwrap();
        assert_abs_diff_eq!(l.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_dp_matches_oracle() {
        let dist = DiscreteDistribution::new(
            vec![
                Level { prob: 0.3, mult: 2 },
                Level { prob: 0.1, mult: 3 },
                Level { prob: 0.05, mult: 2 },
            ],
            8,
        )
        .unwrap();
        for phi in [
            Profile::new([(1, 4), (2, 1)], 8).unwrap(),
            Profile::new([(3, 1), (1, 2)], 8).unwrap(),
            Profile::new([(1, 7)], 8).unwrap(),
        ] {
            let exact = profile_probability_exact(&dist, &phi).unwrap().ln();
            let dp = log_likelihood(&dist, &phi, Method::Exact).unwrap().value;
            assert_abs_diff_eq!(dp, exact, epsilon = 1e-10);
        }
    }

    #[test]
    fn infeasible_support_is_impossible() {
        let phi = Profile::new([(1, 3)], 5).unwrap();
        let dist = DiscreteDistribution::uniform(2, 5).unwrap();
        for method in [Method::Exact, Method::Surrogate] {
            assert_eq!(log_likelihood(&dist, &phi, method).unwrap().value, f64::NEG_INFINITY);
        }
    }
}
