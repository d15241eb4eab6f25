//! Complex numbers with a separate power-of-two exponent.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Real;

/// `mantissa * 2^exponent`, with `max(|re|, |im|)` of the mantissa in
/// `[1/2, 1)` (so its modulus lies in `[1/2, 2)`), or the canonical zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex<T> {
    mantissa: Complex<T>,
    exponent: i64,
}

/// Exponent `e` such that `x = f * 2^e` with `|f|` in `[1/2, 1)`.
fn frexp_exponent<T: Real>(x: T) -> i64 {
    let (m, e, _) = x.integer_decode();
    if m == 0 {
        return 0;
    }
    let bits = 64 - m.leading_zeros() as i64;
    e as i64 + bits
}

/// Multiplies by `2^k`, in steps small enough to stay exact for every scalar.
pub(crate) fn ldexp<T: Real>(mut x: T, mut k: i64) -> T {
    while k != 0 {
        let step = k.clamp(-60, 60);
        x = x * T::lit(2f64.powi(step as i32));
        k -= step;
        if x.is_zero() || !x.is_finite() {
            break;
        }
    }
    x
}

fn ldexp_c<T: Real>(z: Complex<T>, k: i64) -> Complex<T> {
    Complex::new(ldexp(z.re, k), ldexp(z.im, k))
}

// Terms smaller than this many binary orders are dropped from a sum.
const ADD_CUTOFF: i64 = 240;

impl<T: Real> ScaledComplex<T> {
    pub fn zero() -> Self {
        ScaledComplex {
            mantissa: Complex::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_complex(Complex::new(T::one(), T::zero()))
    }

    /// Builds a normalized value from `z * 2^exponent`.
    pub fn new(z: Complex<T>, exponent: i64) -> Self {
        if z.re.is_zero() && z.im.is_zero() {
            return Self::zero();
        }
        if !z.re.is_finite() || !z.im.is_finite() {
            return ScaledComplex {
                mantissa: z,
                exponent,
            };
        }
        let e = frexp_exponent(z.re.abs().max(z.im.abs()));
        ScaledComplex {
            mantissa: ldexp_c(z, -e),
            exponent: exponent + e,
        }
    }

    pub fn from_complex(z: Complex<T>) -> Self {
        Self::new(z, 0)
    }

    pub fn from_real(x: T) -> Self {
        Self::new(Complex::new(x, T::zero()), 0)
    }

    pub fn mantissa(&self) -> Complex<T> {
        self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.re.is_zero() && self.mantissa.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.mantissa.re.is_finite() && self.mantissa.im.is_finite()
    }

    /// Plain value; overflows to infinity or underflows to zero when out of range.
    pub fn to_complex(&self) -> Complex<T> {
        ldexp_c(self.mantissa, self.exponent)
    }

    /// `|z|` as a scaled real.
    pub fn abs(&self) -> Self {
        Self::new(
            Complex::new(self.mantissa.re.hypot(self.mantissa.im), T::zero()),
            self.exponent,
        )
    }

    /// `|z|^2` as a scaled real.
    pub fn norm_sqr(&self) -> Self {
        Self::new(
            Complex::new(self.mantissa.norm_sqr(), T::zero()),
            2 * self.exponent,
        )
    }

    pub fn conj(&self) -> Self {
        ScaledComplex {
            mantissa: self.mantissa.conj(),
            exponent: self.exponent,
        }
    }

    /// Natural log of the modulus; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let m = self.mantissa.re.hypot(self.mantissa.im).as_f64();
        m.ln() + self.exponent as f64 * std::f64::consts::LN_2
    }

    /// Modulus as `f64`, saturating to 0 or infinity.
    pub fn abs_f64(&self) -> f64 {
        self.ln_abs().exp()
    }

    pub fn scale(&self, z: Complex<T>) -> Self {
        if self.is_zero() || (z.re.is_zero() && z.im.is_zero()) {
            return Self::zero();
        }
        Self::new(self.mantissa * z, self.exponent)
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return *self;
        }
        ScaledComplex {
            mantissa: self.mantissa,
            exponent: self.exponent + k,
        }
    }

    pub fn recip(&self) -> Self {
        Self::new(
            Complex::new(T::one(), T::zero()) / self.mantissa,
            -self.exponent,
        )
    }

    pub fn div(&self, other: &Self) -> Self {
        if self.is_zero() && !other.is_zero() {
            return Self::zero();
        }
        Self::new(self.mantissa / other.mantissa, self.exponent - other.exponent)
    }
}

impl<T: Real> Add for ScaledComplex<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exponent >= rhs.exponent {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let shift = big.exponent - small.exponent;
        if shift > ADD_CUTOFF {
            return big;
        }
        Self::new(
            big.mantissa + ldexp_c(small.mantissa, -shift),
            big.exponent,
        )
    }
}

impl<T: Real> Neg for ScaledComplex<T> {
    type Output = Self;
    fn neg(self) -> Self {
        if self.is_zero() {
            return self;
        }
        ScaledComplex {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl<T: Real> Sub for ScaledComplex<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: Real> Mul for ScaledComplex<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        Self::new(self.mantissa * rhs.mantissa, self.exponent + rhs.exponent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::DoubleDouble;

    #[test]
    fn normalization_bounds() {
        for (re, im) in [(3.0, 0.0), (0.0, -1e-300), (1e300, 1e300), (0.75, -0.2), (1.0, 1.0)] {
            let s = ScaledComplex::<f64>::from_complex(Complex::new(re, im));
            let m = s.mantissa();
            let big = m.re.abs().max(m.im.abs());
            assert!((0.5..1.0).contains(&big), "{s:?}");
            let n = m.norm();
            assert!((0.5..2.0).contains(&n));
            assert_eq!(s.to_complex(), Complex::new(re, im));
        }
    }

    #[test]
    fn zero_is_canonical() {
        let z = ScaledComplex::<f64>::from_complex(Complex::new(-0.0, 0.0));
        assert_eq!(z.exponent(), 0);
        assert!(z.is_zero());
        let x = ScaledComplex::<f64>::from_real(5.0);
        assert!((x - x).is_zero());
        assert_eq!((x - x).exponent(), 0);
        assert!((z * x).is_zero());
    }

    #[test]
    fn beyond_f64_range() {
        let mut x = ScaledComplex::<f64>::from_real(3.7);
        for _ in 0..1000 {
            x = x * ScaledComplex::from_real(3.7);
        }
        assert!(x.is_finite());
        let expected = 1001.0 * 3.7f64.ln();
        assert!((x.ln_abs() - expected).abs() < 1e-10);
        assert!(x.to_complex().re.is_infinite());
    }

    #[test]
    fn addition_aligns_exponents() {
        let a = ScaledComplex::<f64>::from_real(1.0).mul_pow2(2000);
        let b = ScaledComplex::<f64>::from_real(1.0).mul_pow2(1999);
        let s = a + b;
        assert!((s.ln_abs() - (1.5f64.ln() + 2000.0 * std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn works_in_double_double() {
        let third = DoubleDouble::splat(1.0) / DoubleDouble::splat(3.0);
        let s = ScaledComplex::from_real(third).mul_pow2(-5000);
        let back = s.mul_pow2(5000).to_complex().re;
        assert_eq!(back, third);
    }
}
