//! Scale-safe vector arithmetic.
//!
//! Chains on heavy-tailed targets visit radii from 1e-6 up to 1e16 and the
//! tail diagnostics evaluate log-densities out to 1e300, so plain
//! sum-of-squares norms are not enough: they overflow past ~1e154 and lose
//! subnormals near zero. Everything here works on the log scale or rescales
//! by the largest component first.

/// Euclidean norm, rescaled by the largest component to avoid overflow and
/// underflow of the intermediate sum of squares.
pub fn norm(x: &[f64]) -> f64 {
    let m = x.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    let sum_sq: f64 = x.iter().map(|&v| (v / m) * (v / m)).sum();
    m * sum_sq.sqrt()
}

/// Natural log of the Euclidean norm; finite for every nonzero finite vector,
/// including vectors whose squared norm would overflow or underflow.
pub fn ln_norm(x: &[f64]) -> f64 {
    let m = x.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()));
    if m == 0.0 {
        return f64::NEG_INFINITY;
    }
    let sum_sq: f64 = x.iter().map(|&v| (v / m) * (v / m)).sum();
    m.ln() + 0.5 * sum_sq.ln()
}

/// Squared Euclidean norm. May overflow to `inf` beyond ~1e154; callers that
/// care use [`ln_norm`] instead.
pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|&v| v * v).sum()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

/// Cosine of the angle between two nonzero vectors, clamped to [-1, 1].
/// Components are normalized before the product so the result stays finite
/// at any representable scale.
pub fn cosine(x: &[f64], y: &[f64]) -> f64 {
    let nx = norm(x);
    let ny = norm(y);
    let c: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (a / nx) * (b / ny))
        .sum();
    c.clamp(-1.0, 1.0)
}
