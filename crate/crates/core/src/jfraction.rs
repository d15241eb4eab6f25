//! J-fraction convergents, moments and Padé remainder diagnostics.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::{Complex, Complex64};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_line, LineFit};
use crate::io::atomic_write;
use crate::recurrence::{evaluate_remainder, RecurrenceTrace};
use crate::scalar::Real;

/// One convergent `pi_n = P_n / Q_n`; `None` marks a pole (`Q_n = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergent<T> {
    pub n: usize,
    pub value: Option<Complex<T>>,
}

/// Convergents `pi_0..=pi_N` at one `lambda`.
#[derive(Debug, Clone)]
pub struct ConvergentTable<T> {
    pub lambda: Complex<T>,
    pub entries: Vec<Convergent<T>>,
    trace: Option<RecurrenceTrace<T>>,
}

impl<T: Real> ConvergentTable<T> {
    /// Table built from raw values, without a source trace.
    pub fn from_values(lambda: Complex<T>, values: Vec<Option<Complex<T>>>) -> Self {
        let entries = values
            .into_iter()
            .enumerate()
            .map(|(n, value)| Convergent { n, value })
            .collect();
        ConvergentTable {
            lambda,
            entries,
            trace: None,
        }
    }

    pub fn trace(&self) -> Option<&RecurrenceTrace<T>> {
        self.trace.as_ref()
    }

    pub fn n_max(&self) -> usize {
        self.entries.last().map_or(0, |e| e.n)
    }
}

pub fn convergents<T: Real>(trace: &RecurrenceTrace<T>) -> ConvergentTable<T> {
    let entries = (0..=trace.n_max())
        .map(|n| {
            let q = trace.q(n);
            let value = if q.is_zero() {
                None
            } else {
                Some(trace.p(n).div(&q).to_complex())
            };
            Convergent { n, value }
        })
        .collect();
    ConvergentTable {
        lambda: trace.lambda(),
        entries,
        trace: Some(trace.clone()),
    }
}

/// `|Q_n phi - P_n| h_n` and its fitted geometric rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemainderDiagnostics {
    /// `|r_n| h_n`, saturating to 0 below the `f64` range.
    pub values: Vec<f64>,
    /// `ln(|r_n| h_n)`, exact in range.
    pub ln_values: Vec<f64>,
    /// `exp(slope)` of the log-linear fit over `n >= 1`.
    pub rate: Option<f64>,
    pub fit_rms: Option<f64>,
}

pub fn remainder_diagnostics<T: Real>(trace: &RecurrenceTrace<T>, phi: Complex<T>) -> RemainderDiagnostics {
    let rem = evaluate_remainder(trace, phi);
    let ln_values: Vec<f64> = (0..=trace.n_max())
        .map(|n| (rem.r[n] * trace.h(n)).ln_abs())
        .collect();
    let pts: Vec<(f64, f64)> = ln_values
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(n, v)| v.is_finite() && rem.usable[*n])
        .map(|(n, v)| (n as f64, *v))
        .collect();
    let fit = fit_line(&pts);
    RemainderDiagnostics {
        values: ln_values.iter().map(|v| v.exp()).collect(),
        ln_values,
        rate: fit.map(|f| f.slope.exp()),
        fit_rms: fit.map(|f| f.rms),
    }
}

/// Thresholds for the geometric-subsequence detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsequenceParams {
    pub rho_max: f64,
    pub rms_max: f64,
    /// Points this far (natural log) above the running fit are left out.
    pub outlier_ln: f64,
}

impl Default for SubsequenceParams {
    fn default() -> Self {
        SubsequenceParams {
            rho_max: 0.95,
            rms_max: 0.5,
            outlier_ln: std::f64::consts::LN_10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsequenceVerdict {
    Geometric,
    NoneFound,
}

/// Indices `n` with `|phi - pi_n| <= C rho^n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometricSubsequence {
    pub indices: Vec<usize>,
    pub rate: f64,
    pub c: f64,
    /// Rate refitted on the indices in the upper half of the table.
    pub tail_rate: f64,
    pub rms: f64,
    pub verdict: SubsequenceVerdict,
    /// Whether every index `n >= 1` (except poles) qualified.
    pub whole_sequence: bool,
}

/// `ln |phi - pi_n|` for every entry; `None` at poles.
///
/// With a source trace the error is evaluated as `|r_n / Q_n|`, which keeps
/// full relative accuracy when the convergents have long since converged.
pub fn convergent_errors<T: Real>(table: &ConvergentTable<T>, phi: Complex<T>) -> Vec<Option<f64>> {
    match &table.trace {
        Some(trace) => {
            let rem = evaluate_remainder(trace, phi);
            (0..=trace.n_max())
                .map(|n| {
                    let q = trace.q(n);
                    if q.is_zero() {
                        None
                    } else {
                        Some(rem.r[n].ln_abs() - q.ln_abs())
                    }
                })
                .collect()
        }
        None => table
            .entries
            .iter()
            .map(|e| e.value.map(|v| (phi - v).norm().as_f64().ln()))
            .collect(),
    }
}

pub fn geometric_subsequence<T: Real>(table: &ConvergentTable<T>, phi: Complex<T>) -> GeometricSubsequence {
    geometric_subsequence_with(table, phi, &SubsequenceParams::default())
}

/// Greedy envelope fit: seed a line on the tail, then walk toward `n = 1`
/// adding every point not more than `outlier_ln` above the current line.
pub fn geometric_subsequence_with<T: Real>(
    table: &ConvergentTable<T>,
    phi: Complex<T>,
    params: &SubsequenceParams,
) -> GeometricSubsequence {
    let errors = convergent_errors(table, phi);
    let n_max = table.n_max();
    let needed = n_max.div_ceil(4).max(1);

    let mut zeros = Vec::new();
    let mut pts = Vec::new();
    let mut poles = 0;
    for (n, e) in errors.iter().enumerate().skip(1) {
        match e {
            None => poles += 1,
            Some(v) if *v == f64::NEG_INFINITY => zeros.push(n),
            Some(v) if v.is_finite() => pts.push((n as f64, *v)),
            Some(_) => {}
        }
    }

    let none = |indices: Vec<usize>| GeometricSubsequence {
        indices,
        rate: f64::NAN,
        c: f64::NAN,
        tail_rate: f64::NAN,
        rms: f64::NAN,
        verdict: SubsequenceVerdict::NoneFound,
        whole_sequence: false,
    };

    if pts.len() < 2 {
        if pts.is_empty() && !zeros.is_empty() {
            let whole = zeros.len() + poles == n_max;
            let verdict = if zeros.len() >= needed {
                SubsequenceVerdict::Geometric
            } else {
                SubsequenceVerdict::NoneFound
            };
            return GeometricSubsequence {
                indices: zeros,
                rate: 0.0,
                c: 0.0,
                tail_rate: 0.0,
                rms: 0.0,
                verdict,
                whole_sequence: whole && verdict == SubsequenceVerdict::Geometric,
            };
        }
        return none(zeros);
    }

    let seed = (n_max / 8).max(8).min(pts.len());
    let mut chosen: Vec<(f64, f64)> = pts[pts.len() - seed..].to_vec();
    let Some(mut fit) = fit_line(&chosen) else {
        return none(zeros);
    };
    for &(x, y) in pts[..pts.len() - seed].iter().rev() {
        if y <= fit.predict(x) + params.outlier_ln {
            chosen.push((x, y));
            if let Some(f) = fit_line(&chosen) {
                fit = f;
            }
        }
    }
    chosen.sort_by(|a, b| a.0.total_cmp(&b.0));
    let max_excess = chosen
        .iter()
        .map(|&(x, y)| y - fit.predict(x))
        .fold(0.0f64, f64::max);
    let half = n_max as f64 / 2.0;
    let tail: Vec<_> = chosen.iter().copied().filter(|p| p.0 >= half).collect();
    let tail_rate = fit_line(&tail).map_or(f64::NAN, |f: LineFit| f.slope.exp());

    let mut indices: Vec<usize> = chosen.iter().map(|p| p.0 as usize).chain(zeros).collect();
    indices.sort_unstable();
    let rate = fit.slope.exp();
    let geometric = rate <= params.rho_max
        && tail_rate <= params.rho_max
        && fit.rms <= params.rms_max
        && indices.len() >= needed;
    let whole = indices.len() + poles == n_max && poles == 0;
    GeometricSubsequence {
        whole_sequence: whole && geometric,
        indices,
        rate,
        c: (fit.intercept + max_excess).exp(),
        tail_rate,
        rms: fit.rms,
        verdict: if geometric {
            SubsequenceVerdict::Geometric
        } else {
            SubsequenceVerdict::NoneFound
        },
    }
}

/// Moments `c_0..=c_{2M}` of `phi(lambda) = sum c_k / lambda^(k+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence<T> {
    c: Vec<Complex<T>>,
}

impl<T: Real> MomentSequence<T> {
    /// Requires an odd count and `c_0 != 0`.
    pub fn new(c: Vec<Complex<T>>) -> Result<Self> {
        if c.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "moment count must be odd (2M+1), got {}",
                c.len()
            )));
        }
        if c[0].is_zero() {
            return Err(Error::InvalidArgument("c_0 must be nonzero".into()));
        }
        Ok(MomentSequence { c })
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.c
    }

    /// `M` for `2M + 1` moments.
    pub fn levels(&self) -> usize {
        self.c.len() / 2
    }
}

/// J-fraction coefficients: `b[k] = b_k` and `a[k] = a_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JFraction<T> {
    pub b: Vec<Complex<T>>,
    pub a: Vec<Complex<T>>,
}

/// `c_k = (A^k)_{00}` for the matrix with `b` on the diagonal, `a` below
/// and ones above, via `(Av)_i = a_i v_{i-1} + b_i v_i + v_{i+1}`.
///
/// Needs `b_0..b_{M-1}` and `a_1..a_M`; returns `c_0..=c_{2M}`.
pub fn jfraction_to_moments<T: Real>(jf: &JFraction<T>, m: usize) -> Result<MomentSequence<T>> {
    if m < 1 || jf.b.len() < m || jf.a.len() < m {
        return Err(Error::InvalidArgument(format!(
            "need b_0..b_{{M-1}} and a_1..a_M for M = {m}"
        )));
    }
    if jf.a[..m].iter().any(|a| a.is_zero()) {
        return Err(Error::InvalidArgument("a_n must be nonzero".into()));
    }
    let zero = Complex::zero();
    let b = |i: usize| jf.b.get(i).copied().unwrap_or(zero);
    let a = |i: usize| if i == 0 { zero } else { jf.a.get(i - 1).copied().unwrap_or(zero) };
    let mut v = vec![zero; m + 2];
    v[0] = Complex::new(T::one(), T::zero());
    let mut c = Vec::with_capacity(2 * m + 1);
    for k in 0..=2 * m {
        c.push(v[0]);
        if k == 2 * m {
            break;
        }
        // v_i after this step only reaches c_{<=2M} when i <= 2M - k - 1
        let top = (k + 1).min(2 * m - k - 1).min(m);
        let mut next = vec![zero; m + 2];
        for (i, slot) in next.iter_mut().enumerate().take(top + 1) {
            let below = if i > 0 { a(i) * v[i - 1] } else { zero };
            *slot = below + b(i) * v[i] + v[i + 1];
        }
        v = next;
    }
    MomentSequence::new(c)
}

/// Chebyshev algorithm: recovers `b_0..b_{M-1}` and `a_1..a_M` from `2M+1` moments.
///
/// Works on the table `sigma_{k,l} = sigma_{k-1,l+1} - b_{k-1} sigma_{k-1,l}
/// - a_{k-1} sigma_{k-2,l}` with pivots `sigma_{k,k}`. A pivot lost in
/// cancellation to rounding level marks the sequence degenerate at level `k`.
pub fn moments_to_jfraction<T: Real>(moments: &MomentSequence<T>) -> Result<JFraction<T>> {
    let c = &moments.c;
    let m = moments.levels();
    let u = T::unit_roundoff().as_f64();
    let zero = Complex::<T>::zero();
    let width = 2 * m + 1;

    let mut prev2 = vec![zero; width];
    let mut prev = c.clone();

    let mut b = vec![c[1] / c[0]];
    let mut a = Vec::with_capacity(m);
    let mut a_prev = zero;

    let partial = |b: &[Complex<T>]| -> Vec<[f64; 2]> {
        b.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect()
    };

    for k in 1..=m {
        let bk = b[k - 1];
        let mut row = vec![zero; width];
        let mut mag = vec![0.0f64; width];
        for l in k..=(2 * m - k) {
            row[l] = prev[l + 1] - bk * prev[l] - a_prev * prev2[l];
            mag[l] = prev[l + 1].norm().as_f64()
                + bk.norm().as_f64() * prev[l].norm().as_f64()
                + a_prev.norm().as_f64() * prev2[l].norm().as_f64();
        }
        let pivot = row[k];
        if pivot.is_zero() || pivot.norm().as_f64() <= 1e4 * u * mag[k] {
            return Err(Error::Degenerate {
                level: k,
                partial_b: partial(&b),
            });
        }
        let ak = pivot / prev[k - 1];
        a.push(ak);
        if k < m {
            b.push(row[k + 1] / pivot - prev[k] / prev[k - 1]);
        }
        a_prev = ak;
        prev2 = prev;
        prev = row;
    }
    Ok(JFraction { b, a })
}

/// Reads moments from CSV rows `re,im`; blank lines and `#` comments are skipped.
pub fn read_moments_csv(path: &Path) -> Result<MomentSequence<f64>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut c = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() != 2 {
            return Err(parse_err(format!("row {}: expected 2 fields, got {}", i + 1, rec.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(format!("row {}: not a finite number: {s:?}", i + 1)))
        };
        c.push(Complex64::new(num(&rec[0])?, num(&rec[1])?));
    }
    if c.is_empty() {
        return Err(parse_err("no moments found".into()));
    }
    MomentSequence::new(c)
}

/// Rows `n,re,im,abs_err`; poles are written as `n,pole,pole,`.
pub fn convergents_csv<T: Real>(table: &ConvergentTable<T>, phi: Option<Complex<T>>) -> String {
    let errors = phi.map(|p| convergent_errors(table, p));
    let mut out = String::from("n,re,im,abs_err\n");
    for e in &table.entries {
        match e.value {
            None => {
                let _ = writeln!(out, "{},pole,pole,", e.n);
            }
            Some(v) => {
                let err = errors
                    .as_ref()
                    .and_then(|errs| errs[e.n])
                    .map(|ln| format!("{:e}", ln.exp()))
                    .unwrap_or_default();
                let _ = writeln!(out, "{},{:e},{:e},{}", e.n, v.re.as_f64(), v.im.as_f64(), err);
            }
        }
    }
    out
}

/// Rows `n,b_re,b_im,a_re,a_im` for `n = 0..=M`; undefined entries are empty.
pub fn jfraction_csv<T: Real>(jf: &JFraction<T>) -> String {
    let mut out = String::from("n,b_re,b_im,a_re,a_im\n");
    let m = jf.b.len().max(jf.a.len());
    for n in 0..=m {
        let bs = jf
            .b
            .get(n)
            .map(|z| format!("{:e},{:e}", z.re.as_f64(), z.im.as_f64()))
            .unwrap_or_else(|| ",".into());
        let as_ = if n == 0 {
            ",".to_string()
        } else {
            jf.a
                .get(n - 1)
                .map(|z| format!("{:e},{:e}", z.re.as_f64(), z.im.as_f64()))
                .unwrap_or_else(|| ",".into())
        };
        let _ = writeln!(out, "{n},{bs},{as_}");
    }
    out
}

pub fn write_jfraction_csv<T: Real>(jf: &JFraction<T>, path: &Path) -> Result<()> {
    atomic_write(path, jfraction_csv(jf).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{build_operator, CoefficientSpec};
    use crate::recurrence::evaluate_qp;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn chebyshev_convergents_at_one() {
        let m = build_operator::<f64>(&CoefficientSpec::chebyshev()).unwrap();
        let t = evaluate_qp(&m, c(1.0), 30).unwrap();
        let table = convergents(&t);
        for e in &table.entries[1..] {
            let n = e.n as f64;
            let v = e.value.unwrap();
            assert!((v.re - 2.0 * n / (n + 1.0)).abs() <= 1e-12 * (2.0 * n / (n + 1.0)));
        }
    }

    #[test]
    fn poles_at_origin() {
        let m = build_operator::<f64>(&CoefficientSpec::chebyshev()).unwrap();
        let t = evaluate_qp(&m, c(0.0), 20).unwrap();
        let table = convergents(&t);
        for e in &table.entries {
            assert_eq!(e.value.is_none(), e.n % 2 == 1);
        }
    }

    #[test]
    fn remainder_is_two_at_one() {
        let m = build_operator::<f64>(&CoefficientSpec::chebyshev()).unwrap();
        let t = evaluate_qp(&m, c(1.0), 64).unwrap();
        let d = remainder_diagnostics(&t, c(2.0));
        for v in &d.values {
            assert_eq!(*v, 2.0);
        }
    }

    #[test]
    fn constant_table_is_geometric_at_floor() {
        let phi = c(0.75);
        let table = ConvergentTable::from_values(c(3.0), vec![Some(phi); 41]);
        let g = geometric_subsequence(&table, phi);
        assert_eq!(g.verdict, SubsequenceVerdict::Geometric);
        assert_eq!(g.rate, 0.0);
        assert_eq!(g.indices.len(), 40);
    }

    #[test]
    fn single_pole_moments_degenerate() {
        let beta = 0.3;
        let mom = MomentSequence::new((0..5).map(|k| c(f64::powi(beta, k))).collect()).unwrap();
        match moments_to_jfraction(&mom) {
            Err(Error::Degenerate { level, partial_b }) => {
                assert_eq!(level, 1);
                assert!((partial_b[0][0] - beta).abs() < 1e-15);
            }
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn chebyshev_weight_roundtrip() {
        let jf = JFraction {
            b: vec![c(0.0); 8],
            a: vec![c(0.25); 8],
        };
        let mom = jfraction_to_moments(&jf, 8).unwrap();
        let v = mom.values();
        assert_eq!(v[2], c(0.25));
        assert_eq!(v[4], c(0.125));
        assert_eq!(v[1], c(0.0));
        let back = moments_to_jfraction(&mom).unwrap();
        for z in &back.b {
            assert!(z.norm() < 1e-12);
        }
        for z in &back.a {
            assert!((z - c(0.25)).norm() < 1e-12);
        }
    }

    #[test]
    fn odd_count_required() {
        assert!(MomentSequence::new(vec![c(1.0), c(0.0)]).is_err());
    }

    #[test]
    fn jfraction_csv_layout() {
        let jf = JFraction {
            b: vec![c(1.0)],
            a: vec![c(0.5)],
        };
        let s = jfraction_csv(&jf);
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "n,b_re,b_im,a_re,a_im");
        assert_eq!(lines[1], "0,1e0,0e0,,");
        assert_eq!(lines[2], "1,,,5e-1,0e0");
    }
}
