//! Independent numerical oracles for unit tests: Gauss-Legendre quadrature
//! with nodes computed from scratch, and direct brute-force evaluations.

use alloc::vec::Vec;
use core::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

/// Composite Gauss-Legendre over `panels` equal sub-intervals of [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let mut s = 0.0;
        for &(x, w) in &rule {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// erfc from its defining integral. For x >= 0 the tail integral is written as
/// `exp(-x^2) * integral_0^inf exp(-2 x u - u^2) du` to keep relative accuracy.
pub fn erfc_by_quadrature(x: f64) -> f64 {
    let two_over_sqrt_pi = 2.0 / libm::sqrt(PI);
    if x >= 0.0 {
        let tail = integrate(|u| libm::exp(-2.0 * x * u - u * u), 0.0, 40.0, 800);
        two_over_sqrt_pi * libm::exp(-x * x) * tail
    } else {
        let erf = two_over_sqrt_pi * integrate(|t| libm::exp(-t * t), 0.0, -x, 200);
        1.0 + erf
    }
}
