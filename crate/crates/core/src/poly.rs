//! Best uniform polynomial approximation and the unbiased estimators built
//! on top of it.
//!
//! The minimax polynomial is computed with the Remez exchange algorithm in
//! the Chebyshev basis on the interval mapped to `[-1, 1]`, then converted to
//! monomial coefficients on the original variable. Those monomial
//! coefficients `b_i` feed [`falling_factorial_estimate`], which is exactly
//! unbiased for `sum_i b_i p^i` when the count is `Binomial(n, p)`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iteration cap of the exchange loop.
pub const REMEZ_MAX_ITERS: usize = 50;
/// Default relative tolerance on the gap between the levelled error and the
/// observed maximum error.
pub const REMEZ_TOL: f64 = 1e-9;

/// Functions the estimators approximate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TargetFn {
    /// `-x ln x`, with value 0 at 0.
    NegXLogX,
    /// `|x - c|`.
    AbsDiff(f64),
    /// Polynomial given by monomial coefficients.
    Monomials(Vec<f64>),
}

impl TargetFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TargetFn::NegXLogX => {
                if x <= 0.0 {
                    0.0
                } else {
                    -x * x.ln()
                }
            }
            TargetFn::AbsDiff(c) => (x - c).abs(),
            TargetFn::Monomials(b) => horner(b, x),
        }
    }

    fn cache_key(&self) -> String {
        match self {
            TargetFn::NegXLogX => "negxlogx".to_string(),
            TargetFn::AbsDiff(c) => format!("abs:{:x}", c.to_bits()),
            TargetFn::Monomials(b) => {
                let parts: Vec<String> = b.iter().map(|v| format!("{:x}", v.to_bits())).collect();
                format!("mono:{}", parts.join(","))
            }
        }
    }
}

/// A degree-`L` polynomial approximation of a function on `[a, b]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyApprox {
    pub degree: usize,
    pub interval: (f64, f64),
    /// Monomial coefficients `b_0..=b_L` in the original variable.
    pub coeffs: Vec<f64>,
    /// Chebyshev coefficients in the variable mapped to `[-1, 1]`.
    pub chebyshev: Vec<f64>,
    /// Maximum of `|g(x) - P(x)|` over the interval, located by dense search
    /// with local refinement.
    pub sup_error: f64,
    /// Set when the exchange did not converge and the result is only
    /// near-best (Chebyshev interpolation or an unconverged iterate).
    pub near_best_only: bool,
    /// Final reference points (alternation set), in the original variable.
    pub reference: Vec<f64>,
    pub iterations: usize,
}

impl PolyApprox {
    /// Evaluates the polynomial through its Chebyshev form.
    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.chebyshev, to_unit(x, self.interval.0, self.interval.1))
    }

    /// Evaluates the monomial coefficients directly.
    pub fn eval_monomial(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    /// `max_{i >= 1} |b_i| * b^(i-1)` where `b` is the interval's upper end:
    /// the coefficient size once the variable is scaled to the interval.
    pub fn max_scaled_coeff(&self) -> f64 {
        let scale = self.interval.1;
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, b)| b.abs() * scale.powi(i as i32 - 1))
            .fold(0.0, f64::max)
    }

    /// `max_{i >= 1} |b_i|` on the raw monomial coefficients.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().skip(1).map(|b| b.abs()).fold(0.0, f64::max)
    }
}

fn horner(b: &[f64], x: f64) -> f64 {
    b.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn to_unit(x: f64, a: f64, b: f64) -> f64 {
    (2.0 * x - a - b) / (b - a)
}

fn from_unit(t: f64, a: f64, b: f64) -> f64 {
    a + (b - a) * (t + 1.0) / 2.0
}

fn clenshaw(c: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + c.first().copied().unwrap_or(0.0)
}

/// Chebyshev coefficients in `t` to monomial coefficients in `x`, where
/// `t = (2x - a - b) / (b - a)`.
fn chebyshev_to_monomial(cheb: &[f64], a: f64, b: f64) -> Vec<f64> {
    let deg = cheb.len().saturating_sub(1);
    // monomial coefficients in t
    let mut in_t = vec![0.0; deg + 1];
    let mut t_prev = vec![0.0; deg + 1];
    let mut t_cur = vec![0.0; deg + 1];
    t_prev[0] = 1.0;
    if deg >= 1 {
        t_cur[1] = 1.0;
    }
    for (k, &ck) in cheb.iter().enumerate() {
        let tk = match k {
            0 => t_prev.clone(),
            1 => t_cur.clone(),
            _ => {
                let mut next = vec![0.0; deg + 1];
                for i in 0..deg {
                    next[i + 1] += 2.0 * t_cur[i];
                }
                for i in 0..=deg {
                    next[i] -= t_prev[i];
                }
                t_prev = std::mem::replace(&mut t_cur, next);
                t_cur.clone()
            }
        };
        for i in 0..=deg {
            in_t[i] += ck * tk[i];
        }
    }
    let alpha = 2.0 / (b - a);
    let beta = -(a + b) / (b - a);
    let mut out = vec![0.0; deg + 1];
    for (k, &dk) in in_t.iter().enumerate() {
        if dk == 0.0 {
            continue;
        }
        let mut binom = 1.0;
        for i in 0..=k {
            out[i] += dk * binom * alpha.powi(i as i32) * beta.powi((k - i) as i32);
            binom = binom * (k - i) as f64 / (i + 1) as f64;
        }
    }
    out
}

fn golden_max(h: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = h(x1);
    let mut f2 = h(x2);
    for _ in 0..90 {
        if hi - lo <= 1e-16 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = h(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = h(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Signed local extrema of `err(t)` on `[-1, 1]`, in increasing `t`.
fn error_extrema(err: &dyn Fn(f64) -> f64, grid: &[f64]) -> Vec<(f64, f64)> {
    let vals: Vec<f64> = grid.iter().map(|&t| err(t)).collect();
    let m = grid.len();
    let mut out = Vec::new();
    for i in 0..m {
        let e = vals[i];
        if e == 0.0 {
            continue;
        }
        let s = e.signum();
        let left_ok = i == 0 || s * e >= s * vals[i - 1];
        let right_ok = i == m - 1 || s * e >= s * vals[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(m - 1)];
        let signed = |t: f64| s * err(t);
        let (mut tb, mut vb) = golden_max(&signed, lo, hi);
        if s * e > vb {
            tb = grid[i];
            vb = s * e;
        }
        for &edge in [lo, hi].iter() {
            if edge == -1.0 || edge == 1.0 {
                let ve = signed(edge);
                if ve > vb {
                    tb = edge;
                    vb = ve;
                }
            }
        }
        out.push((tb, s * vb));
    }
    // merge runs of equal sign, keeping the largest magnitude
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(out.len());
    for (t, e) in out {
        match merged.last_mut() {
            Some(last) if last.1.signum() == e.signum() => {
                if e.abs() > last.1.abs() {
                    *last = (t, e);
                }
            }
            _ => merged.push((t, e)),
        }
    }
    merged
}

fn search_grid(degree: usize) -> Vec<f64> {
    let m = (200 * (degree + 2)).max(2000);
    (0..m)
        .map(|i| -(std::f64::consts::PI * i as f64 / (m - 1) as f64).cos())
        .collect()
}

fn chebyshev_interpolant(f: &dyn Fn(f64) -> f64, degree: usize) -> Vec<f64> {
    let m = degree + 1;
    let nodes: Vec<f64> = (0..m)
        .map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / m as f64).cos())
        .collect();
    let vals: Vec<f64> = nodes.iter().map(|&t| f(t)).collect();
    (0..m)
        .map(|j| {
            let s: f64 = (0..m)
                .map(|k| vals[k] * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / m as f64).cos())
                .sum();
            let c = 2.0 * s / m as f64;
            if j == 0 {
                c / 2.0
            } else {
                c
            }
        })
        .collect()
}

/// Minimax approximation of an arbitrary function by a degree-`degree`
/// polynomial on `[a, b]`.
pub fn remez(f: &dyn Fn(f64) -> f64, degree: usize, a: f64, b: f64, tol: f64) -> Result<PolyApprox> {
    if !(b - a >= 1e-15) || !a.is_finite() || !b.is_finite() {
        return Err(Error::DegenerateInterval { a, b });
    }
    let ft = |t: f64| f(from_unit(t, a, b));
    let grid = search_grid(degree);
    let fscale = grid.iter().map(|&t| ft(t).abs()).fold(0.0, f64::max);
    let tiny = 1e-14 * (1.0 + fscale);
    let npts = degree + 2;

    let mut reference: Vec<f64> = (0..npts)
        .map(|k| -(std::f64::consts::PI * k as f64 / (npts - 1) as f64).cos())
        .collect();

    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..REMEZ_MAX_ITERS {
        iterations = it + 1;
        let mut mat = DMatrix::<f64>::zeros(npts, npts);
        let mut rhs = DVector::<f64>::zeros(npts);
        for (r, &t) in reference.iter().enumerate() {
            let mut tkm1 = 1.0;
            let mut tk = t;
            for j in 0..=degree {
                let v = match j {
                    0 => 1.0,
                    1 => t,
                    _ => {
                        let next = 2.0 * t * tk - tkm1;
                        tkm1 = tk;
                        tk = next;
                        next
                    }
                };
                mat[(r, j)] = v;
            }
            mat[(r, degree + 1)] = if r % 2 == 0 { 1.0 } else { -1.0 };
            rhs[r] = ft(t);
        }
        let Some(sol) = mat.lu().solve(&rhs) else {
            break;
        };
        let cheb: Vec<f64> = sol.iter().take(degree + 1).copied().collect();
        let levelled = sol[degree + 1].abs();
        let err = |t: f64| ft(t) - clenshaw(&cheb, t);
        let extrema = error_extrema(&err, &grid);
        let max_err = extrema.iter().map(|e| e.1.abs()).fold(0.0, f64::max);

        let improved = best.as_ref().map_or(true, |b| max_err < b.1);
        if improved {
            best = Some((cheb.clone(), max_err, reference.clone()));
        }
        if max_err <= tiny || (max_err - levelled) <= tol * max_err {
            best = Some((cheb, max_err, reference.clone()));
            converged = true;
            break;
        }
        if extrema.len() < npts {
            break;
        }
        let mut ex = extrema;
        while ex.len() > npts {
            if ex[0].1.abs() < ex[ex.len() - 1].1.abs() {
                ex.remove(0);
            } else {
                ex.pop();
            }
        }
        reference = ex.into_iter().map(|(t, _)| t).collect();
    }

    let (cheb, sup, refs, near_best_only) = if converged {
        let (c, s, r) = best.expect("converged iterate recorded");
        (c, s, r, false)
    } else {
        let interp = chebyshev_interpolant(&ft, degree);
        let err = |t: f64| ft(t) - clenshaw(&interp, t);
        let interp_sup = error_extrema(&err, &grid)
            .iter()
            .map(|e| e.1.abs())
            .fold(0.0, f64::max);
        match best {
            Some((c, s, r)) if s <= interp_sup => (c, s, r, true),
            _ => (interp, interp_sup, vec![], true),
        }
    };
    if near_best_only {
        log::warn!(
            "remez did not converge (degree {degree} on [{a:e}, {b:e}]); using near-best approximation"
        );
    }
    Ok(PolyApprox {
        degree,
        interval: (a, b),
        coeffs: chebyshev_to_monomial(&cheb, a, b),
        chebyshev: cheb,
        sup_error: sup,
        near_best_only,
        reference: refs.iter().map(|&t| from_unit(t, a, b)).collect(),
        iterations,
    })
}

type CacheKey = (String, usize, u64, u64, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, PolyApprox>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, PolyApprox>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Best uniform approximation of a target function, memoized per
/// `(g, L, interval, tol)`.
pub fn best_uniform_approx(g: &TargetFn, degree: usize, interval: (f64, f64), tol: f64) -> Result<PolyApprox> {
    let key = (
        g.cache_key(),
        degree,
        interval.0.to_bits(),
        interval.1.to_bits(),
        tol.to_bits(),
    );
    if let Some(hit) = cache().lock().expect("poisoned cache").get(&key) {
        return Ok(hit.clone());
    }
    let f = |x: f64| g.eval(x);
    let pa = remez(&f, degree, interval.0, interval.1, tol)?;
    cache()
        .lock()
        .expect("poisoned cache")
        .insert(key, pa.clone());
    Ok(pa)
}

/// `x (x-1) ... (x-i+1) / (n (n-1) ... (n-i+1))`, zero when `i > x`.
pub fn falling_ratio(x: usize, n: usize, i: usize) -> f64 {
    let mut r = 1.0;
    for k in 0..i {
        if k >= x {
            return 0.0;
        }
        r *= (x - k) as f64 / (n - k) as f64;
    }
    r
}

/// Unbiased estimate of `P(p) = sum_i b_i p^i` from a `Binomial(n, p)` count:
/// `sum_i b_i n_y^(i) / n^(i)` with falling powers. Degrees above `n` have no
/// unbiased estimator and contribute nothing.
pub fn falling_factorial_estimate(pa: &PolyApprox, n_y: usize, n: usize) -> Result<f64> {
    if n_y > n {
        return Err(Error::CountExceedsLength { count: n_y, n });
    }
    if n == 0 {
        return Err(Error::Invalid("sample size must be positive".into()));
    }
    Ok(pa
        .coeffs
        .iter()
        .enumerate()
        .take(n + 1)
        .map(|(i, &b)| b * falling_ratio(n_y, n, i))
        .sum())
}

/// The literal monomial form `sum_i b_i (n_y / n)^i` (biased); kept for comparison.
pub fn raw_monomial_estimate(pa: &PolyApprox, n_y: usize, n: usize) -> Result<f64> {
    if n_y > n {
        return Err(Error::CountExceedsLength { count: n_y, n });
    }
    if n == 0 {
        return Err(Error::Invalid("sample size must be positive".into()));
    }
    Ok(horner(&pa.coeffs, n_y as f64 / n as f64))
}

/// Parameters of the per-symbol polynomial estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyConfig {
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    /// Sample count `n` (length of one half).
    pub n: usize,
    pub domain_size: usize,
    /// Use `(n_y/n)^i` instead of falling powers in the polynomial branch.
    pub raw_monomials: bool,
}

impl PolyConfig {
    pub fn entropy_defaults(n: usize, domain_size: usize) -> Self {
        Self {
            alpha: 0.5,
            c1: 70.0,
            c2: 35.0,
            n,
            domain_size,
            raw_monomials: false,
        }
    }

    pub fn dtu_defaults(n: usize, domain_size: usize) -> Self {
        Self {
            c1: 71.0,
            ..Self::entropy_defaults(n, domain_size)
        }
    }

    /// `max(1, round(0.25 * alpha * ln n))`.
    pub fn degree(&self) -> usize {
        let l = (0.25 * self.alpha * (self.n as f64).ln()).round();
        if l.is_finite() && l >= 1.0 {
            l as usize
        } else {
            1
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.domain_size < 2 {
            return Err(Error::Invalid(format!(
                "polynomial estimator needs n >= 2 and N >= 2 (got n = {}, N = {})",
                self.n, self.domain_size
            )));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.alpha > 0.0) {
            return Err(Error::Invalid("alpha, c1 and c2 must be positive".into()));
        }
        Ok(())
    }
}

/// Approximation of `-x ln x` on `[0, c1 ln N / n]` (clamped to `[0, 1]`).
pub fn entropy_poly_config(cfg: &PolyConfig) -> Result<PolyApprox> {
    cfg.validate()?;
    let upper = cfg.c1 * (cfg.domain_size as f64).ln() / cfg.n as f64;
    let upper = if upper >= 1.0 {
        log::warn!("entropy approximation interval [0, {upper:.3}] clamped to [0, 1]");
        1.0
    } else {
        upper
    };
    best_uniform_approx(&TargetFn::NegXLogX, cfg.degree(), (0.0, upper), REMEZ_TOL)
}

/// The two regimes of the distance-to-uniformity estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DtuCase {
    /// `1/N < c2 ln N / n`: approximate near zero.
    NearZero,
    /// Otherwise: approximate around `1/N`.
    Centered,
}

pub fn select_dtu_case(cfg: &PolyConfig) -> DtuCase {
    let nn = cfg.domain_size as f64;
    if 1.0 / nn < cfg.c2 * nn.ln() / cfg.n as f64 {
        DtuCase::NearZero
    } else {
        DtuCase::Centered
    }
}

/// Radius `sqrt(c ln N / (N n))` of the centered regime.
pub fn dtu_radius(c: f64, cfg: &PolyConfig) -> f64 {
    let nn = cfg.domain_size as f64;
    (c * nn.ln() / (nn * cfg.n as f64)).sqrt()
}

/// Approximation of `|x - 1/N|` for the given regime.
pub fn dtu_poly_config(cfg: &PolyConfig, case: DtuCase) -> Result<PolyApprox> {
    cfg.validate()?;
    let nn = cfg.domain_size as f64;
    let interval = match case {
        DtuCase::NearZero => (0.0, (2.0 * cfg.c1 * nn.ln() / cfg.n as f64).min(1.0)),
        DtuCase::Centered => {
            let r = dtu_radius(cfg.c1, cfg);
            ((1.0 / nn - r).max(0.0), (1.0 / nn + r).min(1.0))
        }
    };
    best_uniform_approx(&TargetFn::AbsDiff(1.0 / nn), cfg.degree(), interval, REMEZ_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn square_by_line() {
        let pa = best_uniform_approx(&TargetFn::Monomials(vec![0.0, 0.0, 1.0]), 1, (0.0, 1.0), REMEZ_TOL)
            .unwrap();
        assert!(!pa.near_best_only);
        assert_abs_diff_eq!(pa.sup_error, 0.125, epsilon = 1e-9);
        assert_abs_diff_eq!(pa.coeffs[0], -0.125, epsilon = 1e-9);
        assert_abs_diff_eq!(pa.coeffs[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn abs_on_symmetric_interval_by_constant() {
        let f = |x: f64| x.abs();
        let pa = remez(&f, 1, -1.0, 1.0, REMEZ_TOL).unwrap();
        assert_abs_diff_eq!(pa.sup_error, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(pa.coeffs[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(pa.coeffs[1], 0.0, epsilon = 1e-9);

        // same problem rescaled to [0, 1]
        let pa = best_uniform_approx(&TargetFn::AbsDiff(0.5), 1, (0.0, 1.0), REMEZ_TOL).unwrap();
        assert_abs_diff_eq!(pa.sup_error, 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(pa.eval_monomial(0.3), 0.25, epsilon = 1e-9);
    }

    #[test]
    fn polynomial_targets_are_exact() {
        let g = TargetFn::Monomials(vec![0.3, -1.0, 2.0, 0.5]);
        for degree in 3..6 {
            let pa = best_uniform_approx(&g, degree, (0.0, 1.0), REMEZ_TOL).unwrap();
            assert!(pa.sup_error <= 1e-12, "degree {degree}: {}", pa.sup_error);
        }
    }

    #[test]
    fn degenerate_interval_rejected() {
        assert!(matches!(
            best_uniform_approx(&TargetFn::NegXLogX, 2, (0.1, 0.1), REMEZ_TOL),
            Err(Error::DegenerateInterval { .. })
        ));
    }

    #[test]
    fn monomial_and_chebyshev_forms_agree() {
        let pa = best_uniform_approx(&TargetFn::NegXLogX, 4, (0.0, 0.05), REMEZ_TOL).unwrap();
        for k in 0..=50 {
            let x = 0.05 * k as f64 / 50.0;
            assert_abs_diff_eq!(pa.eval(x), pa.eval_monomial(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn falling_factorial_examples() {
        let id = PolyApprox {
            degree: 1,
            interval: (0.0, 1.0),
            coeffs: vec![0.0, 1.0],
            chebyshev: vec![0.5, 0.5],
            sup_error: 0.0,
            near_best_only: false,
            reference: vec![],
            iterations: 0,
        };
        assert_abs_diff_eq!(falling_factorial_estimate(&id, 3, 10).unwrap(), 0.3, epsilon = 1e-15);

        let sq = PolyApprox {
            coeffs: vec![0.0, 0.0, 1.0],
            degree: 2,
            ..id.clone()
        };
        assert_abs_diff_eq!(falling_factorial_estimate(&sq, 3, 4).unwrap(), 0.5, epsilon = 1e-15);

        let with_const = PolyApprox {
            coeffs: vec![0.7, -2.0, 5.0],
            degree: 2,
            ..id.clone()
        };
        assert_eq!(falling_factorial_estimate(&with_const, 0, 9).unwrap(), 0.7);
        assert!(falling_factorial_estimate(&with_const, 10, 9).is_err());
    }

    #[test]
    fn degree_formula() {
        let cfg = PolyConfig {
            alpha: 1.0,
            ..PolyConfig::entropy_defaults(55, 100)
        };
        // 0.25 * ln(55) = 1.0018
        assert_eq!(cfg.degree(), 1);
        let cfg = PolyConfig::entropy_defaults(100_000, 100_000);
        // 0.125 * ln(1e5) = 1.439
        assert_eq!(cfg.degree(), 1);
        let cfg = PolyConfig {
            alpha: 2.0,
            ..PolyConfig::entropy_defaults(1_000_000, 1000)
        };
        // 0.5 * ln(1e6) = 6.91
        assert_eq!(cfg.degree(), 7);
    }

    #[test]
    fn entropy_interval() {
        let cfg = PolyConfig {
            c1: 40.0,
            ..PolyConfig::entropy_defaults(100_000, 100_000)
        };
        let pa = entropy_poly_config(&cfg).unwrap();
        assert_abs_diff_eq!(pa.interval.1, 40.0 * (1e5f64).ln() / 1e5, epsilon = 1e-15);
        assert_abs_diff_eq!(pa.interval.1, 4.605e-3, epsilon = 1e-6);
        assert_eq!(pa.degree, 1);

        let tiny = PolyConfig::entropy_defaults(10, 1000);
        let pa = entropy_poly_config(&tiny).unwrap();
        assert_eq!(pa.interval, (0.0, 1.0));
    }

    #[test]
    fn dtu_case_selection() {
        let cfg = PolyConfig::dtu_defaults(10_000, 100);
        // 0.01 < 35 ln(100) / 1e4 = 0.0161
        assert_eq!(select_dtu_case(&cfg), DtuCase::NearZero);
        let cfg = PolyConfig::dtu_defaults(10_000, 100_000);
        assert_eq!(select_dtu_case(&cfg), DtuCase::NearZero);
        let cfg = PolyConfig::dtu_defaults(1_000_000, 10);
        // 0.1 > 8.06e-5
        assert_eq!(select_dtu_case(&cfg), DtuCase::Centered);

        let pa = dtu_poly_config(&cfg, DtuCase::Centered).unwrap();
        let r = (71.0 * 10f64.ln() / (10.0 * 1e6)).sqrt();
        assert_abs_diff_eq!(pa.interval.0, 0.1 - r, epsilon = 1e-15);
        assert_abs_diff_eq!(pa.interval.1, 0.1 + r, epsilon = 1e-15);
    }
}
