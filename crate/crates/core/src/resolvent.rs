//! Resolvent entries, the decay criterion and point classification.
//!
//! In the `e_n` basis the resolvent `B = (lambda I - A)^{-1}` has the closed form
//! `B_{ij} = Q_i r_j / (a_1...a_j)` for `i <= j` and `r_i Q_j / (a_1...a_j)`
//! for `i >= j`, where `r_n = Q_n gamma - P_n`. `lambda` lies in the resolvent
//! set when the weighted entries `|B_{ij}| h_i / h_j` are bounded by
//! `C q^{|i-j|}` with `q < 1`.

use num_complex::{Complex, Complex64};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::operator::OperatorModel;
use crate::recurrence::{
    evaluate_qp, evaluate_remainder, growth_exponent, series_from_trace, RecurrenceTrace,
    RemainderTrace, SeriesParams, SeriesVerdict, Verdict,
};
use crate::scalar::Real;
use crate::scaled::ScaledComplex;

/// Least-squares `gamma` with `sum |Q_n gamma - P_n|^2 h_n^2` minimal.
#[derive(Debug, Clone, Copy)]
pub struct GammaEstimate<T> {
    pub gamma: Complex<T>,
    /// `sum |r_n h_n|^2 / sum |Q_n h_n|^2` over `n` in `[N/2, N]`.
    pub residual: f64,
    /// `1 / sqrt(sum_{n<=N} |Q_n h_n|^2)`: sensitivity of `gamma` to the data.
    pub condition: f64,
    /// `sum |Q_n h_n|^2` over `[N/2, N]`.
    pub window_weight: f64,
}

/// Smallest window weight accepted by [`estimate_gamma`].
pub const DEFAULT_GAMMA_WEIGHT_MIN: f64 = 1e-24;

pub fn estimate_gamma<T: Real>(trace: &RecurrenceTrace<T>) -> Result<GammaEstimate<T>> {
    estimate_gamma_with(trace, DEFAULT_GAMMA_WEIGHT_MIN).map(|(g, _)| g)
}

/// Also returns the remainder trace built from the estimate.
pub fn estimate_gamma_with<T: Real>(
    trace: &RecurrenceTrace<T>,
    weight_min: f64,
) -> Result<(GammaEstimate<T>, RemainderTrace<T>)> {
    let n = trace.n_max();
    let start = n / 2;
    let mut num = ScaledComplex::zero();
    let mut den = ScaledComplex::zero();
    let mut window = ScaledComplex::zero();
    for k in 0..=n {
        let h2 = trace.h(k).norm_sqr();
        let q = trace.q(k);
        num = num + q.conj() * trace.p(k) * h2;
        let w = q.norm_sqr() * h2;
        den = den + w;
        if k >= start {
            window = window + w;
        }
    }
    let window_weight = window.abs_f64();
    if window.is_zero() || window_weight < weight_min {
        return Err(Error::IllConditionedGamma {
            weight: window_weight,
        });
    }
    let gamma = num.div(&den).to_complex();
    let rem = evaluate_remainder(trace, gamma);
    let mut tail = ScaledComplex::zero();
    for k in start..=n {
        tail = tail + (rem.r[k] * trace.h(k)).norm_sqr();
    }
    let residual = if tail.is_zero() {
        0.0
    } else {
        (tail.ln_abs() - window.ln_abs()).exp()
    };
    let estimate = GammaEstimate {
        gamma,
        residual,
        condition: (-0.5 * den.ln_abs()).exp(),
        window_weight,
    };
    Ok((estimate, rem))
}

/// Entry `(i, j)` of the resolvent in the `e_n` basis.
#[derive(Debug, Clone, Copy)]
pub struct ResolventEntry<T> {
    pub i: usize,
    pub j: usize,
    pub value: ScaledComplex<T>,
}

pub fn resolvent_entry<T: Real>(
    trace: &RecurrenceTrace<T>,
    remainder: &RemainderTrace<T>,
    i: usize,
    j: usize,
) -> ResolventEntry<T> {
    let value = if i <= j {
        trace.q(i) * remainder.r[j]
    } else {
        remainder.r[i] * trace.q(j)
    }
    .div(&trace.prod_a(j));
    ResolventEntry { i, j, value }
}

/// Top-left `size x size` block of the resolvent converted to the orthonormal
/// basis, `B^g_{ij} = B_{ij} d_j / d_i`. Row-major.
pub fn resolvent_block<T: Real>(
    trace: &RecurrenceTrace<T>,
    remainder: &RemainderTrace<T>,
    size: usize,
) -> Result<Vec<Complex<T>>> {
    let mut d = Vec::with_capacity(size);
    let mut acc = ScaledComplex::one();
    for k in 0..size {
        d.push(acc);
        acc = acc.scale(trace.model().gamma(k)?);
    }
    let mut out = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            let e = resolvent_entry(trace, remainder, i, j).value;
            out.push((e * d[j]).div(&d[i]).to_complex());
        }
    }
    Ok(out)
}

/// Thresholds of the decay fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub q_max: f64,
    pub rms_max: f64,
    pub min_offsets: usize,
    /// Largest allowed rise (natural log) of the diagonal `w_{ii}` from the
    /// first half of the window to the second.
    pub diag_growth_max: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams {
            q_max: 0.95,
            rms_max: 0.5,
            min_offsets: 16,
            diag_growth_max: 100f64.ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayVerdict {
    Geometric,
    NotGeometric,
    InsufficientData,
}

/// Fit of `max_i w_{i,i+k}` (both diagonals, then its non-increasing
/// envelope) against the offset `k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub c: f64,
    pub q: f64,
    /// Offsets `k` in `fit_window.0..=fit_window.1`.
    pub fit_window: (usize, usize),
    pub rms_residual: f64,
    pub usable_offsets: usize,
    pub diag_growth: f64,
    pub verdict: DecayVerdict,
}

pub fn decay_fit<T: Real>(trace: &RecurrenceTrace<T>, remainder: &RemainderTrace<T>) -> DecayFit {
    decay_fit_with(trace, remainder, &DecayParams::default())
}

/// Weighted entries are evaluated in the log domain as
/// `ln w_{ij} = ln|Q_{min} h_{min}| + ln|r_{max} h_{max}| - ln(|a_1...a_j| h_j^2)`.
pub fn decay_fit_with<T: Real>(
    trace: &RecurrenceTrace<T>,
    remainder: &RemainderTrace<T>,
    params: &DecayParams,
) -> DecayFit {
    let n = trace.n_max();
    let k_max = n / 2;
    let ln_u: Vec<f64> = (0..=n).map(|k| trace.ln_qh(k)).collect();
    let ln_rho: Vec<f64> = (0..=n)
        .map(|k| {
            if remainder.usable[k] {
                (remainder.r[k] * trace.h(k)).ln_abs()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let ln_d: Vec<f64> = (0..=n)
        .map(|k| trace.prod_a(k).ln_abs() + 2.0 * trace.h(k).ln_abs())
        .collect();

    let mut pts = Vec::new();
    for k in 0..=k_max {
        let mut best = f64::NEG_INFINITY;
        for i in 0..=(n - k) {
            let j = i + k;
            let upper = ln_u[i] + ln_rho[j] - ln_d[j];
            let lower = ln_rho[j] + ln_u[i] - ln_d[i];
            best = best.max(upper).max(lower);
        }
        if best.is_finite() {
            pts.push((k as f64, best));
        }
    }
    // The bound C q^k must hold at every larger offset too: fit the
    // smallest non-increasing majorant.
    let mut running = f64::NEG_INFINITY;
    for p in pts.iter_mut().rev() {
        running = running.max(p.1);
        p.1 = running;
    }

    let diag: Vec<f64> = (0..=n).map(|i| ln_u[i] + ln_rho[i] - ln_d[i]).collect();
    let first = diag[..n / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let second = diag[n / 2..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let diag_growth = if first.is_finite() && second.is_finite() {
        second - first
    } else {
        0.0
    };

    let usable_offsets = pts.len();
    let fit = if usable_offsets >= params.min_offsets {
        fit_line(&pts)
    } else {
        None
    };
    match fit {
        None => DecayFit {
            c: f64::NAN,
            q: f64::NAN,
            fit_window: (0, k_max),
            rms_residual: f64::NAN,
            usable_offsets,
            diag_growth,
            verdict: DecayVerdict::InsufficientData,
        },
        Some(f) => {
            let q = f.slope.exp();
            let geometric =
                q <= params.q_max && f.rms <= params.rms_max && diag_growth <= params.diag_growth_max;
            DecayFit {
                c: f.intercept.exp(),
                q,
                fit_window: (0, k_max),
                rms_residual: f.rms,
                usable_offsets,
                diag_growth,
                verdict: if geometric {
                    DecayVerdict::Geometric
                } else {
                    DecayVerdict::NotGeometric
                },
            }
        }
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    pub n: usize,
    pub data: Vec<Complex<T>>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.n + j]
    }
}

/// `lambda I - A_N` in the orthonormal basis.
pub fn finite_section<T: Real>(model: &OperatorModel<T>, lambda: Complex<T>, n: usize) -> Result<DenseMatrix<T>> {
    let mut data = vec![Complex::zero(); n * n];
    for k in 0..n {
        data[k * n + k] = lambda - model.beta(k)?;
        if k > 0 {
            data[k * n + k - 1] = -model.alpha(k)?;
        }
        if k + 1 < n {
            data[k * n + k + 1] = -model.gamma(k)?;
        }
    }
    Ok(DenseMatrix { n, data })
}

/// Inverse of the `N x N` finite section `lambda I - A_N` (orthonormal basis)
/// by Gauss-Jordan elimination with partial pivoting.
pub fn finite_section_inverse<T: Real>(
    model: &OperatorModel<T>,
    lambda: Complex<T>,
    n: usize,
) -> Result<DenseMatrix<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("finite section needs N >= 1".into()));
    }
    let m = finite_section(model, lambda, n)?;
    let scale = m.data.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    let threshold = T::lit(1e-12) * scale;
    let mut a = m.data;
    let mut inv = vec![Complex::<T>::zero(); n * n];
    for k in 0..n {
        inv[k * n + k] = Complex::new(T::one(), T::zero());
    }
    for col in 0..n {
        let (piv, piv_abs) = (col..n)
            .map(|r| (r, a[r * n + col].norm()))
            .fold((col, T::neg_infinity()), |best, x| if x.1 > best.1 { x } else { best });
        if piv_abs.is_nan() || piv_abs < threshold || piv_abs.is_zero() {
            return Err(Error::SingularTruncation { pivot: col });
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
                inv.swap(piv * n + j, col * n + j);
            }
        }
        let p = Complex::new(T::one(), T::zero()) / a[col * n + col];
        for j in 0..n {
            a[col * n + j] = a[col * n + j] * p;
            inv[col * n + j] = inv[col * n + j] * p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col];
            if f.is_zero() {
                continue;
            }
            for j in 0..n {
                let (x, y) = (a[col * n + j], inv[col * n + j]);
                a[r * n + j] = a[r * n + j] - f * x;
                inv[r * n + j] = inv[r * n + j] - f * y;
            }
        }
    }
    Ok(DenseMatrix { n, data: inv })
}

/// All thresholds used by [`classify_point`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyParams {
    /// Trace length `N`.
    pub n: usize,
    /// Second attempt at this `N` for indeterminate points.
    pub escalate_n: Option<usize>,
    /// Label points beyond the norm bound as resolvent without recurrence work.
    pub fast_path: bool,
    pub series: SeriesParams,
    pub decay: DecayParams,
    /// Resolvent requires a growth exponent above this.
    pub growth_min: f64,
    /// Spectrum requires a growth exponent at most this.
    pub spectrum_growth_max: f64,
    pub gamma_weight_min: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            n: 128,
            escalate_n: Some(256),
            fast_path: true,
            series: SeriesParams::default(),
            decay: DecayParams::default(),
            growth_min: 1.0 + 1e-3,
            spectrum_growth_max: 1.02,
            gamma_weight_min: DEFAULT_GAMMA_WEIGHT_MIN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Resolvent,
    Eigenvalue,
    Spectrum,
    Indeterminate,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Resolvent => "resolvent",
            Label::Eigenvalue => "eigenvalue",
            Label::Spectrum => "spectrum",
            Label::Indeterminate => "indeterminate",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "resolvent" => Some(Label::Resolvent),
            "eigenvalue" => Some(Label::Eigenvalue),
            "spectrum" => Some(Label::Spectrum),
            "indeterminate" => Some(Label::Indeterminate),
            _ => None,
        }
    }
}

/// Diagnostics behind a label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evidence {
    /// Trace length of the decisive attempt.
    pub n: usize,
    pub fast_path: bool,
    pub norm_bound: Option<f64>,
    pub series: Option<SeriesVerdict>,
    pub growth: f64,
    pub gamma: Option<Complex64>,
    pub gamma_residual: f64,
    pub gamma_condition: f64,
    pub decay: Option<DecayFit>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointClassification {
    pub lambda: Complex64,
    pub label: Label,
    pub evidence: Evidence,
}

impl PointClassification {
    /// Fitted decay rate; 0 on the norm-bound fast path.
    pub fn q(&self) -> f64 {
        if self.evidence.fast_path {
            0.0
        } else {
            self.evidence.decay.as_ref().map_or(f64::NAN, |d| d.q)
        }
    }

    pub fn growth(&self) -> f64 {
        self.evidence.growth
    }

    pub fn residual(&self) -> f64 {
        self.evidence.gamma_residual
    }
}

fn to_c64<T: Real>(z: Complex<T>) -> Complex64 {
    Complex64::new(z.re.as_f64(), z.im.as_f64())
}

pub fn classify_point<T: Real>(
    model: &OperatorModel<T>,
    lambda: Complex<T>,
    params: &ClassifyParams,
) -> PointClassification {
    let first = classify_at(model, lambda, params, params.n);
    match params.escalate_n {
        Some(n2) if first.label == Label::Indeterminate && n2 > params.n && !first.evidence.fast_path => {
            let mut second = classify_at(model, lambda, params, n2);
            second
                .evidence
                .notes
                .insert(0, format!("escalated from N = {} to N = {n2}", params.n));
            second
        }
        _ => first,
    }
}

fn classify_at<T: Real>(
    model: &OperatorModel<T>,
    lambda: Complex<T>,
    params: &ClassifyParams,
    n: usize,
) -> PointClassification {
    let mut ev = Evidence {
        n,
        fast_path: false,
        norm_bound: None,
        series: None,
        growth: f64::NAN,
        gamma: None,
        gamma_residual: f64::NAN,
        gamma_condition: f64::NAN,
        decay: None,
        notes: Vec::new(),
    };
    let lam = to_c64(lambda);
    let done = |label, ev| PointClassification {
        lambda: lam,
        label,
        evidence: ev,
    };

    if let Ok(bound) = model.norm_upper_bound() {
        ev.norm_bound = Some(bound.value);
        if params.fast_path && lam.norm() > bound.value {
            ev.fast_path = true;
            ev.growth = f64::INFINITY;
            ev.notes
                .push(format!("|lambda| = {} exceeds the norm bound {}", lam.norm(), bound.value));
            return done(Label::Resolvent, ev);
        }
    }

    let trace = match evaluate_qp(model, lambda, n) {
        Ok(t) => t,
        Err(e) => {
            ev.notes.push(format!("recurrence failed: {e}"));
            return done(Label::Indeterminate, ev);
        }
    };
    ev.growth = growth_exponent(&trace);

    let series = if n >= 16 {
        Some(series_from_trace(&trace, &params.series))
    } else {
        ev.notes.push("N < 16: series test skipped".into());
        None
    };
    let series_verdict = series.as_ref().map(|s| s.verdict);
    ev.series = series;
    if series_verdict == Some(Verdict::Converges) {
        return done(Label::Eigenvalue, ev);
    }

    let (gamma, rem) = match estimate_gamma_with(&trace, params.gamma_weight_min) {
        Ok(x) => x,
        Err(e) => {
            ev.notes.push(e.to_string());
            return done(Label::Indeterminate, ev);
        }
    };
    ev.gamma = Some(to_c64(gamma.gamma));
    ev.gamma_residual = gamma.residual;
    ev.gamma_condition = gamma.condition;
    let decay = decay_fit_with(&trace, &rem, &params.decay);
    let verdict = decay.verdict;
    ev.decay = Some(decay);

    let label = if verdict == DecayVerdict::Geometric
        && ev.growth > params.growth_min
        && series_verdict == Some(Verdict::Diverges)
    {
        Label::Resolvent
    } else if verdict == DecayVerdict::NotGeometric && ev.growth <= params.spectrum_growth_max {
        Label::Spectrum
    } else {
        Label::Indeterminate
    };
    done(label, ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{build_operator, CoefficientSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cheb() -> OperatorModel<f64> {
        build_operator(&CoefficientSpec::chebyshev()).unwrap()
    }

    #[test]
    fn gamma_at_two() {
        let t = evaluate_qp(&cheb(), c(2.0, 0.0), 128).unwrap();
        let g = estimate_gamma(&t).unwrap();
        assert!((g.gamma - c(2.0 * (2.0 - 3f64.sqrt()), 0.0)).norm() < 1e-12);
        assert!(g.residual < 1e-30);
    }

    #[test]
    fn first_entries() {
        let t = evaluate_qp(&cheb(), c(2.0, 0.0), 64).unwrap();
        let g = estimate_gamma(&t).unwrap();
        let rem = evaluate_remainder(&t, g.gamma);
        assert_eq!(resolvent_entry(&t, &rem, 0, 0).value.to_complex(), g.gamma);
        let r1 = rem.r[1].to_complex();
        assert!((resolvent_entry(&t, &rem, 1, 0).value.to_complex() - r1).norm() < 1e-15);
        assert!((resolvent_entry(&t, &rem, 0, 1).value.to_complex() - r1 * 4.0).norm() < 1e-15);
    }

    #[test]
    fn one_by_one_section() {
        let inv = finite_section_inverse(&cheb(), c(0.3, 0.2), 1).unwrap();
        assert!((inv.get(0, 0) - c(1.0, 0.0) / c(0.3, 0.2)).norm() < 1e-15);
    }

    #[test]
    fn singular_section() {
        // 2x2 section of the Chebyshev matrix has eigenvalues +-1/2
        let err = finite_section_inverse(&cheb(), c(0.5, 0.0), 2).unwrap_err();
        assert!(matches!(err, Error::SingularTruncation { pivot: 1 }));
    }

    #[test]
    fn decay_at_two_and_inside() {
        let t = evaluate_qp(&cheb(), c(2.0, 0.0), 128).unwrap();
        let g = estimate_gamma(&t).unwrap();
        let rem = evaluate_remainder(&t, g.gamma);
        let d = decay_fit(&t, &rem);
        assert_eq!(d.verdict, DecayVerdict::Geometric);
        assert!((d.q / (2.0 - 3f64.sqrt()) - 1.0).abs() < 0.02);

        let t = evaluate_qp(&cheb(), c(0.5, 0.0), 128).unwrap();
        let g = estimate_gamma(&t).unwrap();
        let rem = evaluate_remainder(&t, g.gamma);
        assert_eq!(decay_fit(&t, &rem).verdict, DecayVerdict::NotGeometric);
    }

    #[test]
    fn labels() {
        let m = cheb();
        let p = ClassifyParams::default();
        assert_eq!(classify_point(&m, c(2.0, 0.0), &p).label, Label::Resolvent);
        let mid = classify_point(&m, c(0.5, 0.0), &p).label;
        assert!(matches!(mid, Label::Spectrum | Label::Indeterminate), "{mid:?}");
        let fast = classify_point(&m, c(3.0, 0.0), &p);
        assert!(fast.evidence.fast_path);
        assert_eq!(fast.q(), 0.0);
        let mut slow = p;
        slow.fast_path = false;
        assert_eq!(classify_point(&m, c(3.0, 0.0), &slow).label, Label::Resolvent);
    }
}
