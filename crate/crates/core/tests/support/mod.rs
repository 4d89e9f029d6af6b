//! Shared oracles for the integration suites: Kolmogorov-Smirnov
//! machinery against reference CDFs, Monte-Carlo estimators with
//! standard errors, adaptive quadrature, and seeded parameter
//! generation.

#![allow(dead_code)]

use bibeta::RngStream;
use statrs::distribution::{Beta, ContinuousCDF};

/// KS statistic of a sample against a reference CDF.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Large-sample one-sided critical value at significance 0.01.
pub fn ks_crit(n: usize) -> f64 {
    1.62762 / (n as f64).sqrt()
}

/// Panics unless the sample is KS-consistent with Beta(p, q) at
/// significance 0.01.
pub fn assert_beta_ks(sample: &mut [f64], p: f64, q: f64, label: &str) {
    let beta = Beta::new(p, q).expect("valid beta shapes");
    let d = ks_statistic(sample, |x| beta.cdf(x));
    let crit = ks_crit(sample.len());
    assert!(
        d <= crit,
        "{label}: KS statistic {d:.6} exceeds critical value {crit:.6} \
         for Beta({p}, {q}) on n = {}",
        sample.len()
    );
}

/// Two-sample KS statistic and its 0.01-level critical value.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> (f64, f64) {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let crit = 1.62762 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt();
    (d, crit)
}

/// Sample covariance (n-1 denominator) with the standard error of the
/// covariance estimator: the spread of the centered products over
/// sqrt(n).
pub fn cov_with_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let products: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (x - mean_x) * (y - mean_y))
        .collect();
    let mean_p = products.iter().sum::<f64>() / n;
    let var_p =
        products.iter().map(|p| (p - mean_p) * (p - mean_p)).sum::<f64>() / (n - 1.0);
    (mean_p * n / (n - 1.0), (var_p / n).sqrt())
}

/// Sample correlation with a delta-method standard error built from the
/// influence values psi_i = z_x z_y - (r/2)(z_x^2 + z_y^2).
pub fn corr_with_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        var_x += (x - mean_x) * (x - mean_x);
        var_y += (y - mean_y) * (y - mean_y);
        cov += (x - mean_x) * (y - mean_y);
    }
    let r = cov / (var_x * var_y).sqrt();
    let (sx, sy) = ((var_x / n).sqrt(), (var_y / n).sqrt());
    let psi: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let zx = (x - mean_x) / sx;
            let zy = (y - mean_y) / sy;
            zx * zy - 0.5 * r * (zx * zx + zy * zy)
        })
        .collect();
    let mean_psi = psi.iter().sum::<f64>() / n;
    let var_psi = psi.iter().map(|p| (p - mean_psi) * (p - mean_psi)).sum::<f64>() / (n - 1.0);
    (r, (var_psi / n).sqrt())
}

/// Mean with its standard error.
pub fn mean_with_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn simpson_slice(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_slice(a, m, fa, flm, fm);
    let right = simpson_slice(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson integral of f over [a, b].
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson_slice(a, b, fa, fm, fb);
    adaptive_step(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Adaptive 2-D integral of f over [0, 1]^2, inner axis y.
pub fn integrate_unit_square(f: impl Fn(f64, f64) -> f64, tol: f64) -> f64 {
    integrate(
        |x| integrate(|y| f(x, y), 0.0, 1.0, tol / 50.0),
        0.0,
        1.0,
        tol,
    )
}

/// Uniform draw in [lo, hi) from the shared stream type.
pub fn uniform_in(stream: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * stream.open01()
}
