//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// `(P_t φ)(x) = ∫ φ(x + z) e^{-z²/2t} / √(2πt) dz`, composite Simpson over
/// `|z| ≤ 12√t`.
pub fn heat_kernel_convolution(phi: impl Fn(f64) -> f64, x: f64, t: f64) -> f64 {
    let half = 12.0 * t.sqrt();
    let n = 40_000;
    let h = 2.0 * half / n as f64;
    let norm = 1.0 / (2.0 * PI * t).sqrt();
    let g = |z: f64| phi(x + z) * (-z * z / (2.0 * t)).exp() * norm;
    let mut s = g(-half) + g(half);
    for i in 1..n {
        let z = -half + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(z);
    }
    s * h / 3.0
}

/// Principal eigenvalue of the finite-difference discretization of
/// `½ u'' + λ u'` on `(-r, r)` with Dirichlet ends, `n` interior nodes.
///
/// The tridiagonal matrix is symmetrized by a diagonal similarity and its
/// largest eigenvalue located by Sturm-sequence bisection.
pub fn fd_principal_eigenvalue(lambda: f64, r: f64, n: usize) -> f64 {
    let h = 2.0 * r / (n + 1) as f64;
    let diag = -1.0 / (h * h);
    let sub = 0.5 / (h * h) - lambda / (2.0 * h);
    let sup = 0.5 / (h * h) + lambda / (2.0 * h);
    assert!(sub * sup > 0.0, "grid too coarse to symmetrize");
    let off2 = sub * sup;
    // eigenvalues strictly below sigma
    let below = |sigma: f64| {
        let mut count = 0;
        let mut q = diag - sigma;
        if q < 0.0 {
            count += 1;
        }
        for _ in 1..n {
            let prev = if q == 0.0 { 1e-300 } else { q };
            q = diag - sigma - off2 / prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let radius = 2.0 * off2.sqrt();
    let (mut lo, mut hi) = (diag - radius, diag + radius);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root of a monotone function on `[lo, hi]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn binomial_coefficient(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Relative error, falling back to absolute error at zero.
pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
