//! Truncated infinite-dimensional Heisenberg group `l^p x l^q x R`.
//!
//! Coordinates are laid out as `[x_1..x_N, y_1..y_N, z]`. The exponential is
//! the identity in these coordinates, so algebra vectors and group elements
//! share the layout.

pub(crate) fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

pub(crate) fn p_norm(v: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        return v.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return 0.0;
    }
    // scaled to avoid overflow for large p
    max * v.iter().map(|x| (x.abs() / max).powf(p)).sum::<f64>().powf(1.0 / p)
}

fn pairing(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) struct Split<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub z: f64,
}

pub(crate) fn split(v: &[f64], n: usize) -> Split<'_> {
    Split { x: &v[..n], y: &v[n..2 * n], z: v[2 * n] }
}

/// The symplectic form `<x1|y2> - <x2|y1>`.
pub(crate) fn omega(u: &[f64], v: &[f64], n: usize) -> f64 {
    let (a, b) = (split(u, n), split(v, n));
    pairing(a.x, b.y) - pairing(b.x, a.y)
}

pub(crate) fn mul(g: &[f64], h: &[f64], n: usize) -> Vec<f64> {
    let mut out: Vec<f64> = g.iter().zip(h).map(|(a, b)| a + b).collect();
    out[2 * n] += 0.5 * omega(g, h, n);
    out
}

pub(crate) fn bracket(u: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; 2 * n + 1];
    out[2 * n] = omega(u, v, n);
    out
}

pub(crate) fn norm(v: &[f64], n: usize, p: f64) -> f64 {
    let s = split(v, n);
    p_norm(s.x, p) + p_norm(s.y, conjugate_exponent(p)) + s.z.abs()
}
