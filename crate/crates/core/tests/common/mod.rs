#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tridiag_resolvent::recurrence::{evaluate_remainder, minimal_solution};
use tridiag_resolvent::resolvent::estimate_gamma_with;
use tridiag_resolvent::{CoefficientSpec, RemainderTrace, Trace};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(2/pi) * int_{-1}^{1} sqrt(1-x^2) / (lambda - x) dx` by the trapezoidal
/// rule in `x = cos t`, doubling the panel count until it settles.
pub fn chebyshev_phi_quadrature(lambda: Complex64) -> Complex64 {
    let f = |t: f64| {
        let s = t.sin();
        c(s * s, 0.0) / (lambda - t.cos())
    };
    let mut n = 64usize;
    let mut prev = Complex64::new(f64::NAN, 0.0);
    loop {
        let h = std::f64::consts::PI / n as f64;
        let sum: Complex64 = (1..n).map(|k| f(k as f64 * h)).sum();
        let val = sum * h * (2.0 / std::f64::consts::PI);
        if (val - prev).norm() <= 1e-14 * val.norm().max(1.0) || n > 1 << 22 {
            return val;
        }
        prev = val;
        n *= 2;
    }
}

/// Chebyshev polynomial of the second kind at complex `x`, by the
/// `sin((n+1)t) / sin t` closed form with `x = cos t`.
pub fn chebyshev_u(n: usize, x: Complex64) -> Complex64 {
    let t = x.acos();
    let s = t.sin();
    if s.norm() < 1e-12 {
        let sign = if x.re > 0.0 || n.is_multiple_of(2) { 1.0 } else { -1.0 };
        return c(sign * (n + 1) as f64, 0.0);
    }
    (t * (n as f64 + 1.0)).sin() / s
}

/// Dense `e`-basis matrix powers: `c_k = (A^k)_{00}` for `k < count`.
pub fn brute_moments(b: &[Complex64], a: &[Complex64], count: usize) -> Vec<Complex64> {
    let n = count;
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        m[k * n + k] = b.get(k).copied().unwrap_or_default();
        if k + 1 < n {
            m[k * n + k + 1] = a.get(k).copied().unwrap_or_default();
            m[(k + 1) * n + k] = c(1.0, 0.0);
        }
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    v[0] = c(1.0, 0.0);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(v[0]);
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                w[i] += m[i * n + j] * v[j];
            }
        }
        v = w;
    }
    out
}

fn sample(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> Complex64 {
    let mag = r.gen_range(lo..hi);
    let arg = r.gen_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(mag, arg)
}

/// Explicit-list model with `len` rows, off-diagonals in `[1/2, 3/2]` and
/// diagonal in the disk of radius 1, all with random phases.
pub fn random_bounded_spec(seed: u64, len: usize) -> CoefficientSpec {
    let mut r = rng(seed);
    let alpha = (0..len).map(|_| sample(&mut r, 0.5, 1.5)).collect();
    let beta = (0..len).map(|_| sample(&mut r, 0.0, 1.0)).collect();
    let gamma = (0..len).map(|_| sample(&mut r, 0.5, 1.5)).collect();
    CoefficientSpec::explicit(alpha, beta, gamma)
}

/// Largest eigenvalue of a real symmetric tridiagonal matrix.
pub fn symmetric_top_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    });
    nalgebra::SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// All eigenvalues of a real symmetric tridiagonal matrix, ascending.
pub fn symmetric_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    });
    let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Remainder of the continued fraction itself: `gamma = f_0` of the minimal
/// solution when backward recurrence converges, else the least-squares
/// estimate, else `pi_N`.
pub fn natural_remainder(t: &Trace) -> RemainderTrace<f64> {
    if let Some(f) = minimal_solution(t) {
        return evaluate_remainder(t, f[0].to_complex());
    }
    match estimate_gamma_with(t, 0.0) {
        Ok((_, rem)) => rem,
        Err(_) => evaluate_remainder(t, t.p(t.n_max()).div(&t.q(t.n_max())).to_complex()),
    }
}
