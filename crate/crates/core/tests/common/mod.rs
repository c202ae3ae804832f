//! Shared oracles for the integration suites. Everything here is
//! deliberately independent of the library's own closed forms: plain
//! quadrature and textbook densities only.

#![allow(dead_code)]

use statrs::function::gamma::ln_gamma;

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 40)
}

pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|&v| v * v).sum()
}

/// Log-density of `N(mean, s2 * I)` at `y`.
pub fn log_normal_pdf(y: &[f64], mean: &[f64], s2: f64) -> f64 {
    let d = y.len() as f64;
    let diff_sq: f64 = y
        .iter()
        .zip(mean)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    -0.5 * d * (2.0 * std::f64::consts::PI * s2).ln() - diff_sq / (2.0 * s2)
}

/// Log-density of Gamma(shape, rate) at `r`.
pub fn log_gamma_pdf(r: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * r.ln() - rate * r
}

/// Quadrature oracle for the MpCN proposal density: integrate the Gamma
/// mixture of normals over the precision `r` directly.
pub fn mpcn_density_by_quadrature(x: &[f64], y: &[f64], rho: f64) -> f64 {
    let d = x.len() as f64;
    let rate = norm_sq(x) / 2.0;
    let mean: Vec<f64> = x.iter().map(|&v| rho.sqrt() * v).collect();
    let shifted_sq: f64 = y
        .iter()
        .zip(&mean)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    // the combined integrand is r^(d-1) exp(-b r) up to constants
    let b = rate + shifted_sq / (2.0 * (1.0 - rho));
    let integrand = |r: f64| -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        (log_normal_pdf(y, &mean, (1.0 - rho) / r) + log_gamma_pdf(r, d / 2.0, rate)).exp()
    };
    let upper = (d + 12.0 * d.sqrt() + 40.0) / b;
    // coarse magnitude estimate to set an absolute tolerance
    let coarse: f64 = (1..=512)
        .map(|i| integrand(upper * i as f64 / 512.0) * upper / 512.0)
        .sum();
    adaptive_simpson(&integrand, 0.0, upper, coarse.max(1e-300) * 1e-10)
}

#[cfg(test)]
mod self_tests {
    use super::*;

    #[test]
    fn simpson_integrates_known_functions() {
        let one = adaptive_simpson(&|x: f64| x * x, 0.0, 3.0, 1e-12);
        assert!((one - 9.0).abs() < 1e-10);
        let gauss = adaptive_simpson(
            &|x: f64| (-x * x / 2.0).exp(),
            -40.0,
            40.0,
            1e-12,
        );
        assert!((gauss - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-9);
    }
}
