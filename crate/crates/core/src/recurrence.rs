//! Three-term recurrence for the J-fraction polynomials.
//!
//! `Q_{n+1} = (lambda - b_n) Q_n - a_n Q_{n-1}` with `Q_0 = 1`, `Q_1 = lambda - b_0`,
//! and the same recurrence for `P` with `P_0 = 0`, `P_1 = 1`. All values are
//! carried as [`ScaledComplex`] so traces of any length stay finite.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::OperatorModel;
use crate::scalar::Real;
use crate::scaled::ScaledComplex;

/// `Q_n`, `P_n` and their bookkeeping for `n = 0..=N` at one `lambda`.
#[derive(Debug, Clone)]
pub struct RecurrenceTrace<T> {
    lambda: Complex<T>,
    n_max: usize,
    q: Vec<ScaledComplex<T>>,
    p: Vec<ScaledComplex<T>>,
    prod_a: Vec<ScaledComplex<T>>,
    h: Vec<ScaledComplex<T>>,
    a: Vec<Complex<T>>,
    b: Vec<Complex<T>>,
    model: OperatorModel<T>,
}

impl<T: Real> RecurrenceTrace<T> {
    pub fn lambda(&self) -> Complex<T> {
        self.lambda
    }

    /// Largest index `N` of the trace.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn q(&self, n: usize) -> ScaledComplex<T> {
        self.q[n]
    }

    pub fn p(&self, n: usize) -> ScaledComplex<T> {
        self.p[n]
    }

    /// `a_1 * ... * a_n` (1 for `n = 0`).
    pub fn prod_a(&self, n: usize) -> ScaledComplex<T> {
        self.prod_a[n]
    }

    pub fn h(&self, n: usize) -> ScaledComplex<T> {
        self.h[n]
    }

    /// `a_n` for `1 <= n <= N`.
    pub fn a(&self, n: usize) -> Complex<T> {
        self.a[n]
    }

    pub fn b(&self, n: usize) -> Complex<T> {
        self.b[n]
    }

    pub fn model(&self) -> &OperatorModel<T> {
        &self.model
    }

    pub fn qs(&self) -> &[ScaledComplex<T>] {
        &self.q
    }

    pub fn ps(&self) -> &[ScaledComplex<T>] {
        &self.p
    }

    /// `ln |Q_n h_n|`.
    pub fn ln_qh(&self, n: usize) -> f64 {
        (self.q[n] * self.h[n]).ln_abs()
    }
}

/// Runs the recurrence up to index `n_max`.
///
/// Only explicit-list operators can fail, when `n_max` reaches past the list.
pub fn evaluate_qp<T: Real>(
    model: &OperatorModel<T>,
    lambda: Complex<T>,
    n_max: usize,
) -> Result<RecurrenceTrace<T>> {
    if n_max < 1 {
        return Err(Error::InvalidArgument("trace length N must be at least 1".into()));
    }
    let mut a = Vec::with_capacity(n_max + 1);
    let mut b = Vec::with_capacity(n_max + 1);
    a.push(Complex::zero());
    b.push(model.b(0)?);
    for n in 1..=n_max {
        a.push(model.a(n)?);
        b.push(model.b(n)?);
    }

    let mut h = Vec::with_capacity(n_max + 1);
    let mut d = ScaledComplex::one();
    h.push(ScaledComplex::one());
    for k in 0..n_max {
        d = d.scale(model.gamma(k)?);
        h.push(d.abs().recip());
    }

    let mut prod_a = Vec::with_capacity(n_max + 1);
    prod_a.push(ScaledComplex::one());
    for n in 1..=n_max {
        let prev = prod_a[n - 1];
        prod_a.push(prev.scale(a[n]));
    }

    let mut q = Vec::with_capacity(n_max + 1);
    let mut p = Vec::with_capacity(n_max + 1);
    q.push(ScaledComplex::one());
    q.push(ScaledComplex::from_complex(lambda - b[0]));
    p.push(ScaledComplex::zero());
    p.push(ScaledComplex::one());
    for n in 1..n_max {
        let shift = lambda - b[n];
        q.push(q[n].scale(shift) - q[n - 1].scale(a[n]));
        p.push(p[n].scale(shift) - p[n - 1].scale(a[n]));
    }

    Ok(RecurrenceTrace {
        lambda,
        n_max,
        q,
        p,
        prod_a,
        h,
        a,
        b,
        model: model.clone(),
    })
}

/// How the remainder sequence was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemainderMode {
    /// `gamma` matches the minimal solution; `r` is that solution.
    Minimal,
    /// `r_n = Q_n gamma - P_n`, evaluated through the minimal solution when one exists.
    Direct,
}

/// `r_n = Q_n gamma - P_n` for `n = 0..=N`.
#[derive(Debug, Clone)]
pub struct RemainderTrace<T> {
    pub gamma: Complex<T>,
    pub r: Vec<ScaledComplex<T>>,
    pub mode: RemainderMode,
    /// `false` where rounding noise may dominate `r_n`.
    pub usable: Vec<bool>,
    /// `r_0` of the minimal solution, when backward recurrence converged.
    pub minimal_gamma: Option<Complex<T>>,
}

/// Backward recurrence `y_{n-1} = ((lambda - b_n) y_n - y_{n+1}) / a_n` from
/// `y_{L+1} = 0`, `y_L = 1`; returns `y_0..=y_L`.
pub fn backward_solution<T: Real>(
    model: &OperatorModel<T>,
    lambda: Complex<T>,
    l: usize,
) -> Option<Vec<ScaledComplex<T>>> {
    let mut y = vec![ScaledComplex::zero(); l + 2];
    y[l] = ScaledComplex::one();
    for n in (1..=l).rev() {
        let a = model.a(n).ok()?;
        let b = model.b(n).ok()?;
        let next = y[n].scale(lambda - b) - y[n + 1];
        y[n - 1] = next.scale(Complex::new(T::one(), T::zero()) / a);
    }
    y.truncate(l + 1);
    if y.iter().all(|v| v.is_finite()) {
        Some(y)
    } else {
        None
    }
}

/// Minimal solution normalized so that it is the remainder sequence of its own `gamma`.
fn minimal_candidate<T: Real>(
    model: &OperatorModel<T>,
    lambda: Complex<T>,
    n_max: usize,
    l: usize,
) -> Option<Vec<ScaledComplex<T>>> {
    let y = backward_solution(model, lambda, l)?;
    let b0 = model.b(0).ok()?;
    let first = y[1] - y[0].scale(lambda - b0);
    if first.is_zero() || !first.is_finite() {
        return None;
    }
    let c = -first.recip();
    let f: Vec<_> = y[..=n_max].iter().map(|v| *v * c).collect();
    if f.iter().all(|v| v.is_finite()) {
        Some(f)
    } else {
        None
    }
}

fn close<T: Real>(x: &ScaledComplex<T>, y: &ScaledComplex<T>, tol: f64) -> bool {
    if x.is_zero() && y.is_zero() {
        return true;
    }
    let scale = x.ln_abs().max(y.ln_abs());
    (*x - *y).ln_abs() <= tol.ln() + scale
}

fn agree<T: Real>(f: &[ScaledComplex<T>], g: &[ScaledComplex<T>], tol: f64) -> bool {
    f.iter().zip(g).all(|(x, y)| close(x, y, tol))
}

// A remainder value is usable when it exceeds its rounding-noise estimate by this factor.
const USABLE_MARGIN: f64 = 1e3;

fn tolerance<T: Real>() -> f64 {
    4096.0 * T::unit_roundoff().as_f64()
}

/// Minimal solution of the recurrence at the trace's `lambda` by backward
/// recurrence, accepted only when several truncation depths agree.
pub fn minimal_solution<T: Real>(trace: &RecurrenceTrace<T>) -> Option<Vec<ScaledComplex<T>>> {
    let n = trace.n_max;
    let tol = tolerance::<T>();
    let depths = [3 * n + 1, 3 * n, 2 * n + 1, 2 * n];
    let candidates: Vec<_> = depths
        .iter()
        .filter_map(|&l| minimal_candidate(&trace.model, trace.lambda, n, l))
        .collect();
    for (i, f) in candidates.iter().enumerate() {
        if candidates
            .iter()
            .enumerate()
            .any(|(j, g)| i != j && agree(f, g, tol))
        {
            return Some(f.clone());
        }
    }
    None
}

/// Builds `r_n = Q_n gamma - P_n`.
///
/// On the resolvent set forward evaluation cancels catastrophically, so the
/// minimal solution is computed by backward recurrence and `r` is assembled
/// as `(gamma - f_0) Q_n + f_n`. When `gamma` agrees with `f_0` to working
/// accuracy the minimal solution itself is returned, rescaled to `r_0 = gamma`.
pub fn evaluate_remainder<T: Real>(trace: &RecurrenceTrace<T>, gamma: Complex<T>) -> RemainderTrace<T> {
    let tol = tolerance::<T>();
    let ln_noise = (64.0 * T::unit_roundoff().as_f64()).ln();
    let minimal = minimal_solution(trace);
    let g = ScaledComplex::from_complex(gamma);
    if let Some(f) = &minimal {
        let f0 = f[0].to_complex();
        let len = f.len();
        if gamma == f0 {
            return RemainderTrace {
                gamma,
                r: f.clone(),
                mode: RemainderMode::Minimal,
                usable: vec![true; len],
                minimal_gamma: Some(f0),
            };
        }
        if !f[0].is_zero() && close(&g, &f[0], tol) {
            let ratio = g.div(&f[0]);
            let mut r: Vec<_> = f.iter().map(|v| *v * ratio).collect();
            r[0] = g;
            return RemainderTrace {
                gamma,
                r,
                mode: RemainderMode::Minimal,
                usable: vec![true; len],
                minimal_gamma: Some(f0),
            };
        }
        let delta = g - f[0];
        let mut r = Vec::with_capacity(len);
        let mut usable = Vec::with_capacity(len);
        for (n, fn_) in f.iter().enumerate() {
            let dq = trace.q[n] * delta;
            let v = if n == 0 { g } else { dq + *fn_ };
            let noise = ln_noise + log_add(dq.ln_abs(), fn_.ln_abs());
            usable.push(v.ln_abs() >= USABLE_MARGIN.ln() + noise);
            r.push(v);
        }
        return RemainderTrace {
            gamma,
            r,
            mode: RemainderMode::Direct,
            usable,
            minimal_gamma: Some(f0),
        };
    }
    direct_remainder(trace, gamma)
}

/// `r_n = Q_n gamma - P_n` evaluated term by term.
pub fn direct_remainder<T: Real>(trace: &RecurrenceTrace<T>, gamma: Complex<T>) -> RemainderTrace<T> {
    let ln_noise = (64.0 * T::unit_roundoff().as_f64()).ln();
    let mut r = Vec::with_capacity(trace.n_max + 1);
    let mut usable = Vec::with_capacity(trace.n_max + 1);
    for n in 0..=trace.n_max {
        let qg = trace.q[n].scale(gamma);
        let v = qg - trace.p[n];
        let noise = ln_noise + log_add(qg.ln_abs(), trace.p[n].ln_abs());
        usable.push(v.ln_abs() >= USABLE_MARGIN.ln() + noise);
        r.push(v);
    }
    RemainderTrace {
        gamma,
        r,
        mode: RemainderMode::Direct,
        usable,
        minimal_gamma: None,
    }
}

/// `ln(exp(x) + exp(y))`.
pub(crate) fn log_add(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    hi + (lo - hi).exp().ln_1p()
}

/// `|Q_{n-1} r_n - Q_n r_{n-1} + a_1...a_{n-1}| / |a_1...a_{n-1}|`.
pub fn casorati_residual<T: Real>(
    trace: &RecurrenceTrace<T>,
    remainder: &RemainderTrace<T>,
    n: usize,
) -> f64 {
    assert!(n >= 1 && n <= trace.n_max, "index {n} outside 1..={}", trace.n_max);
    let w = trace.q[n - 1] * remainder.r[n] - trace.q[n] * remainder.r[n - 1];
    relative(w + trace.prod_a[n - 1], &trace.prod_a[n - 1])
}

/// `|Q_{n-1} P_n - Q_n P_{n-1} - a_1...a_{n-1}| / |a_1...a_{n-1}|`.
pub fn casorati_residual_p<T: Real>(trace: &RecurrenceTrace<T>, n: usize) -> f64 {
    assert!(n >= 1 && n <= trace.n_max, "index {n} outside 1..={}", trace.n_max);
    let w = trace.q[n - 1] * trace.p[n] - trace.q[n] * trace.p[n - 1];
    relative(w - trace.prod_a[n - 1], &trace.prod_a[n - 1])
}

fn relative<T: Real>(diff: ScaledComplex<T>, scale: &ScaledComplex<T>) -> f64 {
    if diff.is_zero() {
        return 0.0;
    }
    (diff.ln_abs() - scale.ln_abs()).exp()
}

/// Largest `|Q_n h_n|^(1/n)` over `n` in `[N/2, N]`: a limsup estimate.
pub fn growth_exponent<T: Real>(trace: &RecurrenceTrace<T>) -> f64 {
    let n = trace.n_max;
    let start = (n / 2).max(1);
    (start..=n)
        .map(|k| (trace.ln_qh(k) / k as f64).exp())
        .fold(0.0, f64::max)
}

/// Thresholds of the eigenvalue series test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    /// Converges when both doubling ratios of the partial sums are within this of 1.
    pub converge_tol: f64,
    /// Diverges when both doubling ratios reach this factor.
    pub diverge_factor: f64,
    /// Largest relative mismatch of the first recurrence step accepted for
    /// continuing a sequence that sank below rounding noise.
    pub first_step_tol: f64,
}

impl Default for SeriesParams {
    fn default() -> Self {
        SeriesParams {
            converge_tol: 1e-6,
            diverge_factor: 10.0,
            first_step_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converges,
    Diverges,
    Indeterminate,
}

/// Outcome of testing whether `sum |Q_n h_n|^2` is finite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesVerdict {
    /// Natural logs of the partial sums `s_n = sum_{k<=n} |Q_k h_k|^2`.
    pub partial_sums: Vec<f64>,
    pub verdict: Verdict,
    /// `s_N / s_{N/2}`.
    pub tail_ratio: f64,
    /// `s_{N/2} / s_{N/4}`.
    pub head_ratio: f64,
    /// Last index up to which every term stands above rounding noise.
    pub resolved_len: usize,
    /// Whether terms past `resolved_len` were continued along the minimal solution.
    pub continued: bool,
}

pub fn eigen_series_test<T: Real>(
    model: &OperatorModel<T>,
    lambda: Complex<T>,
    n_max: usize,
) -> Result<SeriesVerdict> {
    eigen_series_test_with(model, lambda, n_max, &SeriesParams::default())
}

/// Series test with explicit thresholds.
///
/// At an eigenvalue `Q_n h_n` decays until the rounding error in `lambda`
/// (amplified like `dQ_n/dlambda`) takes over. Terms below that noise floor
/// are replaced by the backward-recurrence continuation when the minimal
/// solution satisfies the first recurrence step, which is the eigenvalue
/// condition itself.
pub fn eigen_series_test_with<T: Real>(
    model: &OperatorModel<T>,
    lambda: Complex<T>,
    n_max: usize,
    params: &SeriesParams,
) -> Result<SeriesVerdict> {
    if n_max < 16 {
        return Err(Error::InvalidArgument("series test needs N >= 16".into()));
    }
    let trace = evaluate_qp(model, lambda, n_max)?;
    Ok(series_from_trace(&trace, params))
}

pub(crate) fn series_from_trace<T: Real>(trace: &RecurrenceTrace<T>, params: &SeriesParams) -> SeriesVerdict {
    let n_max = trace.n_max;
    let lambda = trace.lambda;
    let u = T::unit_roundoff().as_f64();

    let mut spread = 0.0f64;
    for k in 0..=n_max {
        let mut s = trace.b[k].norm().as_f64();
        if k >= 1 {
            s += 2.0 * trace.a[k].norm().as_f64().sqrt();
        }
        spread = spread.max(s);
    }
    let ln_noise_scale = (64.0 * u * (lambda.norm().as_f64() + spread)).ln();

    let mut dq = vec![ScaledComplex::zero(); n_max + 1];
    dq[1] = ScaledComplex::one();
    for n in 1..n_max {
        let shift = lambda - trace.b[n];
        dq[n + 1] = trace.q[n] + dq[n].scale(shift) - dq[n - 1].scale(trace.a[n]);
    }

    let ln_qh: Vec<f64> = (0..=n_max).map(|n| trace.ln_qh(n)).collect();
    let resolved: Vec<bool> = (0..=n_max)
        .map(|n| {
            let noise = ln_noise_scale + (dq[n] * trace.h[n]).ln_abs();
            ln_qh[n] >= (1e3f64).ln() + noise
        })
        .collect();
    let resolved_len = resolved.iter().position(|&ok| !ok).map_or(n_max, |k| k.saturating_sub(1));

    let mut terms: Vec<f64> = ln_qh.iter().map(|x| 2.0 * x).collect();
    let mut continued = false;
    if resolved_len < n_max {
        let later = &resolved[resolved_len + 1..];
        let unresolved = later.iter().filter(|&&ok| !ok).count();
        if unresolved as f64 >= 0.9 * later.len() as f64 {
            if let Some(cont) = continuation(trace, resolved_len, params.first_step_tol) {
                for (k, v) in cont.into_iter().enumerate() {
                    terms[resolved_len + 1 + k] = 2.0 * v;
                }
                continued = true;
            }
        }
    }

    let mut partial_sums = Vec::with_capacity(n_max + 1);
    let mut acc = f64::NEG_INFINITY;
    for t in &terms {
        acc = log_add(acc, *t);
        partial_sums.push(acc);
    }
    let head_ratio = (partial_sums[n_max / 2] - partial_sums[n_max / 4]).exp();
    let tail_ratio = (partial_sums[n_max] - partial_sums[n_max / 2]).exp();
    let verdict = if head_ratio - 1.0 <= params.converge_tol && tail_ratio - 1.0 <= params.converge_tol {
        Verdict::Converges
    } else if head_ratio >= params.diverge_factor && tail_ratio >= params.diverge_factor {
        Verdict::Diverges
    } else {
        Verdict::Indeterminate
    };
    SeriesVerdict {
        partial_sums,
        verdict,
        tail_ratio,
        head_ratio,
        resolved_len,
        continued,
    }
}

/// `ln |Q_k h_k|` for `k > start`, continued along the minimal solution, or
/// `None` when the minimal solution does not satisfy the first step.
fn continuation<T: Real>(trace: &RecurrenceTrace<T>, start: usize, tol: f64) -> Option<Vec<f64>> {
    let n_max = trace.n_max;
    let y = backward_solution(&trace.model, trace.lambda, 2 * n_max)?;
    let first = y[1] - y[0].scale(trace.lambda - trace.b[0]);
    if y[1].is_zero() || y[start].is_zero() {
        return None;
    }
    let mismatch = (first.ln_abs() - y[1].ln_abs()).exp();
    if mismatch > tol {
        return None;
    }
    let base = trace.q[start].div(&y[start]);
    Some(
        (start + 1..=n_max)
            .map(|k| (base * y[k] * trace.h[k]).ln_abs())
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{build_operator, CoefficientSpec};

    fn cheb() -> OperatorModel<f64> {
        build_operator(&CoefficientSpec::chebyshev()).unwrap()
    }

    #[test]
    fn chebyshev_at_one() {
        let t = evaluate_qp(&cheb(), Complex::new(1.0, 0.0), 40).unwrap();
        for n in 0..=40 {
            let q = t.q(n).to_complex().re;
            let p = t.p(n).to_complex().re;
            assert_eq!(q, (n as f64 + 1.0) * 2f64.powi(-(n as i32)));
            assert_eq!(p, n as f64 * 2f64.powi(1 - n as i32));
        }
    }

    #[test]
    fn parity_zeros_at_origin() {
        let t = evaluate_qp(&cheb(), Complex::new(0.0, 0.0), 101).unwrap();
        for n in 0..=50 {
            assert!(t.q(2 * n + 1).is_zero());
            assert!(t.p(2 * n).is_zero());
        }
    }

    #[test]
    fn wronskian_first_step() {
        let t = evaluate_qp(&cheb(), Complex::new(0.3, 0.7), 10).unwrap();
        let rem = evaluate_remainder(&t, Complex::new(0.25, -1.0));
        assert_eq!(casorati_residual(&t, &rem, 1), 0.0);
    }

    #[test]
    fn gamma_zero_gives_minus_p() {
        let t = evaluate_qp(&cheb(), Complex::new(0.5, 0.0), 30).unwrap();
        let rem = evaluate_remainder(&t, Complex::new(0.0, 0.0));
        for n in 0..=30 {
            assert_eq!(rem.r[n], -t.p(n));
        }
    }

    #[test]
    fn minimal_remainder_at_two() {
        let t = evaluate_qp(&cheb(), Complex::new(2.0, 0.0), 200).unwrap();
        let phi = 2.0 * (2.0 - 3f64.sqrt());
        let rem = evaluate_remainder(&t, Complex::new(phi, 0.0));
        assert_eq!(rem.mode, RemainderMode::Minimal);
        let z = 2.0 + 3f64.sqrt();
        for n in [0usize, 10, 100, 200] {
            let rho = (rem.r[n] * t.h(n)).ln_abs();
            let expected = 2f64.ln() - (n as f64 + 1.0) * z.ln();
            assert!((rho - expected).abs() < 1e-10, "n = {n}");
        }
        for n in 1..=200 {
            assert!(casorati_residual(&t, &rem, n) < 1e-12);
        }
    }

    #[test]
    fn growth_at_two() {
        let t = evaluate_qp(&cheb(), Complex::new(2.0, 0.0), 256).unwrap();
        let g = growth_exponent(&t);
        assert!((g / (2.0 + 3f64.sqrt()) - 1.0).abs() < 0.01);
        // degenerate but finite
        let t = evaluate_qp(&cheb(), Complex::new(0.0, 0.0), 1).unwrap();
        assert!(growth_exponent(&t).is_finite());
    }

    #[test]
    fn series_verdicts() {
        let m = cheb();
        let v = eigen_series_test(&m, Complex::new(2.0, 0.0), 128).unwrap();
        assert_eq!(v.verdict, Verdict::Diverges);
        let v = eigen_series_test(&m, Complex::new(0.5, 0.0), 128).unwrap();
        assert_ne!(v.verdict, Verdict::Converges);
        assert!(v.partial_sums.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn series_converges_at_eigenvalue() {
        let m = build_operator::<f64>(&CoefficientSpec::perturbed_chebyshev(5.0)).unwrap();
        let v = eigen_series_test(&m, Complex::new(5.05, 0.0), 128).unwrap();
        assert_eq!(v.verdict, Verdict::Converges, "{v:?}");
        let v = eigen_series_test(&m, Complex::new(5.55, 0.0), 128).unwrap();
        assert_eq!(v.verdict, Verdict::Diverges);
    }
}
