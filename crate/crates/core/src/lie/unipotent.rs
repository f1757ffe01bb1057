//! Unipotent upper-triangular matrices `I + N`, `N` strictly upper triangular.
//!
//! Both algebra vectors and group elements store the strictly upper entries
//! row-major; for a group element these are the entries of `g - I`.

use nalgebra::DMatrix;

pub(crate) fn coord_len(n: usize) -> usize {
    n * (n - 1) / 2
}

pub(crate) fn to_matrix(c: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            m[(i, j)] = c[k];
            k += 1;
        }
    }
    m
}

pub(crate) fn from_matrix(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(coord_len(n));
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// `sum_{k=1}^{n-1} coeff(k) N^k`, exact for nilpotent `N` of order `n`.
fn nilpotent_series(a: &DMatrix<f64>, coeff: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    let mut power = a.clone();
    for k in 1..n {
        out += &power * coeff(k);
        power = &power * a;
    }
    out
}

pub(crate) fn mul(g: &[f64], h: &[f64], n: usize) -> Vec<f64> {
    let (a, b) = (to_matrix(g, n), to_matrix(h, n));
    let prod = &a * &b;
    from_matrix(&(a + b + prod))
}

pub(crate) fn inv(g: &[f64], n: usize) -> Vec<f64> {
    // (I + A)^{-1} = I - A + A^2 - ...
    let a = to_matrix(g, n);
    from_matrix(&nilpotent_series(&a, |k| if k % 2 == 1 { -1.0 } else { 1.0 }))
}

pub(crate) fn exp(v: &[f64], n: usize) -> Vec<f64> {
    let a = to_matrix(v, n);
    let mut fact = 1.0;
    let factorials: Vec<f64> = (0..n)
        .map(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            fact
        })
        .collect();
    from_matrix(&nilpotent_series(&a, |k| 1.0 / factorials[k]))
}

pub(crate) fn log(g: &[f64], n: usize) -> Vec<f64> {
    let a = to_matrix(g, n);
    from_matrix(&nilpotent_series(&a, |k| {
        let s = if k % 2 == 1 { 1.0 } else { -1.0 };
        s / k as f64
    }))
}

pub(crate) fn bracket(u: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    let (a, b) = (to_matrix(u, n), to_matrix(v, n));
    from_matrix(&(&a * &b - &b * &a))
}

/// Spectral (l2 operator) norm.
pub(crate) fn norm(v: &[f64], n: usize) -> f64 {
    if v.iter().all(|x| *x == 0.0) {
        return 0.0;
    }
    to_matrix(v, n).singular_values().max()
}
