//! Tridiagonal operators and the change to the `e_n = g_n / d_n` basis.
//!
//! In the orthonormal basis `{g_n}` row `k` of the matrix holds `alpha_k` on
//! the subdiagonal, `beta_k` on the diagonal and `gamma_k` on the
//! superdiagonal (`alpha_0` is never used). In the basis `{e_n}` the
//! superdiagonal becomes 1, the subdiagonal `a_n = alpha_n * gamma_{n-1}` and
//! the diagonal `b_n = beta_n`.

use num_complex::{Complex, Complex64};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::scaled::ScaledComplex;

/// How a coefficient sequence continues beyond its head values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecKind {
    ExplicitList,
    ConstantTail,
    PeriodicTail,
    AsymptoticallyPeriodicTail,
}

/// Per-sequence tail data: limit or period values for alpha, beta, gamma.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TailValues {
    #[serde(default)]
    pub alpha: Vec<Complex64>,
    #[serde(default)]
    pub beta: Vec<Complex64>,
    #[serde(default)]
    pub gamma: Vec<Complex64>,
}

/// Operator description as read from a config file.
///
/// Index `k` of a sequence is `head[k]` while `k < head.len()`. Beyond the
/// head the value is `tail[k % N]` where `N` is the tail length (1 for a
/// constant tail). For asymptotically periodic tails the correction list is
/// added on top: `tail[k % N] + corrections[k - head.len()]` while that
/// correction exists, and the limit values exactly afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSpec {
    pub kind: SpecKind,
    #[serde(default)]
    pub alpha: Vec<Complex64>,
    #[serde(default)]
    pub beta: Vec<Complex64>,
    #[serde(default)]
    pub gamma: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrections: Option<TailValues>,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl CoefficientSpec {
    /// Constant coefficients `alpha`, `beta`, `gamma` for every index.
    pub fn constant(alpha: Complex64, beta: Complex64, gamma: Complex64) -> Self {
        CoefficientSpec {
            kind: SpecKind::ConstantTail,
            alpha: vec![],
            beta: vec![],
            gamma: vec![],
            tail: Some(TailValues {
                alpha: vec![alpha],
                beta: vec![beta],
                gamma: vec![gamma],
            }),
            corrections: None,
        }
    }

    /// `alpha = gamma = 1/2`, `beta = 0`: the free Jacobi matrix with spectrum `[-1, 1]`.
    pub fn chebyshev() -> Self {
        Self::constant(c(0.5), c(0.0), c(0.5))
    }

    /// Chebyshev model with `beta_0 = b0`.
    pub fn perturbed_chebyshev(b0: f64) -> Self {
        let mut spec = Self::chebyshev();
        spec.beta = vec![c(b0)];
        spec
    }

    /// Symmetric period-2 model with `a_n` alternating `1/4` (odd n) and `1/16` (even n).
    pub fn period_two() -> Self {
        CoefficientSpec {
            kind: SpecKind::PeriodicTail,
            alpha: vec![],
            beta: vec![],
            gamma: vec![],
            tail: Some(TailValues {
                alpha: vec![c(0.25), c(0.5)],
                beta: vec![c(0.0), c(0.0)],
                gamma: vec![c(0.5), c(0.25)],
            }),
            corrections: None,
        }
    }

    pub fn explicit(alpha: Vec<Complex64>, beta: Vec<Complex64>, gamma: Vec<Complex64>) -> Self {
        CoefficientSpec {
            kind: SpecKind::ExplicitList,
            alpha,
            beta,
            gamma,
            tail: None,
            corrections: None,
        }
    }
}

#[derive(Debug, Clone)]
struct Sequence<T> {
    name: &'static str,
    head: Vec<Complex<T>>,
    tail: Vec<Complex<T>>,
    corrections: Vec<Complex<T>>,
}

impl<T: Real> Sequence<T> {
    fn get(&self, k: usize) -> Result<Complex<T>> {
        if k < self.head.len() {
            return Ok(self.head[k]);
        }
        if self.tail.is_empty() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.head.len(),
            });
        }
        let base = self.tail[k % self.tail.len()];
        match self.corrections.get(k - self.head.len()) {
            Some(corr) => Ok(base + corr),
            None => Ok(base),
        }
    }

    /// Supremum of `|x_k|` over `k >= first`.
    fn sup_abs(&self, first: usize) -> f64 {
        let mut sup = 0.0f64;
        for z in self.head.iter().skip(first) {
            sup = sup.max(z.norm().as_f64());
        }
        for z in &self.tail {
            sup = sup.max(z.norm().as_f64());
        }
        for (j, corr) in self.corrections.iter().enumerate() {
            let k = self.head.len() + j;
            let z = self.tail[k % self.tail.len()] + corr;
            sup = sup.max(z.norm().as_f64());
        }
        sup
    }

    /// Fails on a zero (or non-finite) value anywhere in the sequence from `first` on.
    fn check_nonzero(&self, first: usize) -> Result<()> {
        let bad = |z: &Complex<T>| z.is_zero() || !z.re.is_finite() || !z.im.is_finite();
        for (k, z) in self.head.iter().enumerate().skip(first) {
            if bad(z) {
                return Err(Error::ZeroCoefficient {
                    name: self.name,
                    index: k,
                });
            }
        }
        for (i, z) in self.tail.iter().enumerate() {
            if bad(z) {
                return Err(Error::ZeroCoefficient {
                    name: self.name,
                    index: first_tail_index(self.head.len(), i, self.tail.len()),
                });
            }
        }
        for j in 0..self.corrections.len() {
            let k = self.head.len() + j;
            if bad(&self.get(k)?) {
                return Err(Error::ZeroCoefficient {
                    name: self.name,
                    index: k,
                });
            }
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        let all = self.head.iter().chain(&self.tail).chain(&self.corrections);
        for z in all {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{} contains a non-finite value",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// First index `k >= head_len` with `k % period == phase`.
fn first_tail_index(head_len: usize, phase: usize, period: usize) -> usize {
    let base = head_len - head_len % period;
    let k = base + phase;
    if k < head_len {
        k + period
    } else {
        k
    }
}

/// Upper bound for the operator norm: `sup|alpha_k| + sup|beta_k| + sup|gamma_k|`.
///
/// Each term bounds the norm of one diagonal of the matrix, so the sum
/// bounds the whole operator and the spectrum lies in the closed disk of
/// this radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBound {
    pub value: f64,
}

/// Coefficients of the operator in the `e_n` basis at one index.
#[derive(Debug, Clone, Copy)]
pub struct Coefficients<T> {
    /// `a_n`; not defined for `n = 0`.
    pub a: Option<Complex<T>>,
    pub b: Complex<T>,
    /// `h_n = 1 / |d_n|` as a scaled real.
    pub h: ScaledComplex<T>,
}

/// A validated tridiagonal operator.
#[derive(Debug, Clone)]
pub struct OperatorModel<T> {
    spec: CoefficientSpec,
    alpha: Sequence<T>,
    beta: Sequence<T>,
    gamma: Sequence<T>,
}

fn convert<T: Real>(v: &[Complex64]) -> Vec<Complex<T>> {
    v.iter()
        .map(|z| Complex::new(T::lit(z.re), T::lit(z.im)))
        .collect()
}

/// Validates `spec` and builds the operator.
pub fn build_operator<T: Real>(spec: &CoefficientSpec) -> Result<OperatorModel<T>> {
    let empty = TailValues::default();
    let tail = spec.tail.as_ref().unwrap_or(&empty);
    let corrections = spec.corrections.as_ref().unwrap_or(&empty);
    match spec.kind {
        SpecKind::ExplicitList => {
            if spec.tail.is_some() {
                return Err(Error::MalformedTail("explicit-list specs take no tail".into()));
            }
        }
        SpecKind::ConstantTail | SpecKind::PeriodicTail | SpecKind::AsymptoticallyPeriodicTail => {
            let n = tail.alpha.len();
            if spec.tail.is_none() || n == 0 {
                return Err(Error::MalformedTail("tail values are required".into()));
            }
            if tail.beta.len() != n || tail.gamma.len() != n {
                return Err(Error::MalformedTail(format!(
                    "tail lengths differ (alpha {}, beta {}, gamma {})",
                    n,
                    tail.beta.len(),
                    tail.gamma.len()
                )));
            }
            if spec.kind == SpecKind::ConstantTail && n != 1 {
                return Err(Error::MalformedTail(format!(
                    "constant tail needs exactly one value per sequence, got {n}"
                )));
            }
        }
    }
    if spec.corrections.is_some() && spec.kind != SpecKind::AsymptoticallyPeriodicTail {
        return Err(Error::MalformedTail(
            "corrections are only allowed for asymptotically-periodic-tail".into(),
        ));
    }
    let seq = |name, head: &[Complex64], tail: &[Complex64], corr: &[Complex64]| Sequence::<T> {
        name,
        head: convert(head),
        tail: convert(tail),
        corrections: convert(corr),
    };
    let model = OperatorModel {
        spec: spec.clone(),
        alpha: seq("alpha", &spec.alpha, &tail.alpha, &corrections.alpha),
        beta: seq("beta", &spec.beta, &tail.beta, &corrections.beta),
        gamma: seq("gamma", &spec.gamma, &tail.gamma, &corrections.gamma),
    };
    model.beta.check_finite()?;
    model.alpha.check_nonzero(1)?;
    model.gamma.check_nonzero(0)?;
    Ok(model)
}

impl<T: Real> OperatorModel<T> {
    pub fn spec(&self) -> &CoefficientSpec {
        &self.spec
    }

    pub fn alpha(&self, k: usize) -> Result<Complex<T>> {
        self.alpha.get(k)
    }

    pub fn beta(&self, k: usize) -> Result<Complex<T>> {
        self.beta.get(k)
    }

    pub fn gamma(&self, k: usize) -> Result<Complex<T>> {
        self.gamma.get(k)
    }

    /// `a_n = alpha_n * gamma_{n-1}` for `n >= 1`.
    pub fn a(&self, n: usize) -> Result<Complex<T>> {
        if n == 0 {
            return Err(Error::InvalidArgument("a_0 is not defined".into()));
        }
        Ok(self.alpha.get(n)? * self.gamma.get(n - 1)?)
    }

    pub fn b(&self, n: usize) -> Result<Complex<T>> {
        self.beta.get(n)
    }

    /// `d_n = gamma_0 * ... * gamma_{n-1}`.
    pub fn d(&self, n: usize) -> Result<ScaledComplex<T>> {
        let mut d = ScaledComplex::one();
        for k in 0..n {
            d = d.scale(self.gamma.get(k)?);
        }
        Ok(d)
    }

    /// `h_n = 1 / |d_n|` as a scaled real.
    pub fn h(&self, n: usize) -> Result<ScaledComplex<T>> {
        Ok(self.d(n)?.abs().recip())
    }

    /// `(a_n, b_n, h_n)`.
    pub fn coefficient_at(&self, n: usize) -> Result<Coefficients<T>> {
        let a = if n == 0 { None } else { Some(self.a(n)?) };
        Ok(Coefficients {
            a,
            b: self.b(n)?,
            h: self.h(n)?,
        })
    }

    /// Number of usable indices for explicit lists, `None` for tailed specs.
    pub fn explicit_len(&self) -> Option<usize> {
        if self.spec.kind != SpecKind::ExplicitList {
            return None;
        }
        let n = self
            .alpha
            .head
            .len()
            .min(self.beta.head.len())
            .min(self.gamma.head.len());
        Some(n)
    }

    pub fn norm_upper_bound(&self) -> Result<NormBound> {
        if self.spec.kind == SpecKind::ExplicitList {
            return Err(Error::UnboundedSpec);
        }
        let value = self.alpha.sup_abs(1) + self.beta.sup_abs(0) + self.gamma.sup_abs(0);
        Ok(NormBound { value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_coefficients() {
        let m = build_operator::<f64>(&CoefficientSpec::chebyshev()).unwrap();
        let c3 = m.coefficient_at(3).unwrap();
        assert_eq!(c3.a, Some(c(0.25)));
        assert_eq!(c3.b, c(0.0));
        assert_eq!(c3.h.to_complex().re, 8.0);
        assert!(m.coefficient_at(0).unwrap().a.is_none());
        assert_eq!(m.norm_upper_bound().unwrap().value, 1.0);
    }

    #[test]
    fn identity_gamma_has_unit_norms() {
        let m = build_operator::<f64>(&CoefficientSpec::constant(c(1.0), c(0.0), c(1.0))).unwrap();
        for n in 0..50 {
            assert_eq!(m.h(n).unwrap().to_complex().re, 1.0);
            assert_eq!(m.d(n).unwrap().to_complex(), c(1.0));
        }
    }

    #[test]
    fn zero_offdiagonal_rejected() {
        let spec = CoefficientSpec::constant(c(0.0), c(0.0), c(0.5));
        assert!(matches!(
            build_operator::<f64>(&spec),
            Err(Error::ZeroCoefficient { name: "alpha", .. })
        ));
        let mut spec = CoefficientSpec::chebyshev();
        spec.gamma = vec![c(0.5), c(0.0)];
        assert!(matches!(
            build_operator::<f64>(&spec),
            Err(Error::ZeroCoefficient { name: "gamma", index: 1 })
        ));
        // alpha_0 never enters the matrix
        let spec = CoefficientSpec::explicit(vec![c(0.0), c(1.0)], vec![c(0.0); 2], vec![c(1.0); 2]);
        assert!(build_operator::<f64>(&spec).is_ok());
    }

    #[test]
    fn periodic_norms() {
        let spec = CoefficientSpec {
            kind: SpecKind::PeriodicTail,
            alpha: vec![],
            beta: vec![],
            gamma: vec![],
            tail: Some(TailValues {
                alpha: vec![c(1.0), c(1.0)],
                beta: vec![c(0.0), c(0.0)],
                gamma: vec![c(0.5), c(1.0 / 3.0)],
            }),
            corrections: None,
        };
        let m = build_operator::<f64>(&spec).unwrap();
        let h4 = m.h(4).unwrap().to_complex().re;
        assert!((h4 - 36.0).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_corrections() {
        let spec = CoefficientSpec {
            kind: SpecKind::AsymptoticallyPeriodicTail,
            alpha: vec![c(1.0)],
            beta: vec![],
            gamma: vec![],
            tail: Some(TailValues {
                alpha: vec![c(0.5), c(0.25)],
                beta: vec![c(0.0), c(1.0)],
                gamma: vec![c(0.5), c(0.25)],
            }),
            corrections: Some(TailValues {
                alpha: vec![c(0.1)],
                beta: vec![c(0.2), c(0.3)],
                gamma: vec![],
            }),
        };
        let m = build_operator::<f64>(&spec).unwrap();
        assert_eq!(m.alpha(0).unwrap(), c(1.0));
        assert_eq!(m.alpha(1).unwrap(), c(0.25 + 0.1));
        assert_eq!(m.alpha(2).unwrap(), c(0.5));
        assert_eq!(m.beta(0).unwrap(), c(0.2));
        assert_eq!(m.beta(1).unwrap(), c(1.3));
        assert_eq!(m.beta(3).unwrap(), c(1.0));
        assert!((m.norm_upper_bound().unwrap().value - (0.5 + 1.3 + 0.5)).abs() < 1e-15);

        let mut bad = spec.clone();
        bad.corrections.as_mut().unwrap().gamma = vec![c(-0.5)];
        assert!(matches!(build_operator::<f64>(&bad), Err(Error::ZeroCoefficient { .. })));
    }

    #[test]
    fn malformed_tails() {
        let mut spec = CoefficientSpec::chebyshev();
        spec.tail.as_mut().unwrap().beta.push(c(1.0));
        assert!(matches!(build_operator::<f64>(&spec), Err(Error::MalformedTail(_))));
        let mut spec = CoefficientSpec::chebyshev();
        spec.tail = None;
        assert!(matches!(build_operator::<f64>(&spec), Err(Error::MalformedTail(_))));
    }

    #[test]
    fn explicit_list_has_no_norm_bound() {
        let spec = CoefficientSpec::explicit(vec![c(1.0); 3], vec![c(0.0); 3], vec![c(1.0); 3]);
        let m = build_operator::<f64>(&spec).unwrap();
        assert!(matches!(m.norm_upper_bound(), Err(Error::UnboundedSpec)));
        assert!(matches!(m.b(3), Err(Error::IndexOutOfRange { index: 3, len: 3 })));
    }
}
