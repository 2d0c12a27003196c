//! Independent oracles shared by the integration suites. Nothing here calls
//! into the library's Bessel or composition code.
#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;

pub const QUAD_POINTS: usize = 4096;

/// `J_l(theta) = (1/2π) ∫ cos(l x - θ sin x) dx` by the periodic trapezoid rule.
pub fn quad_bessel(l: i64, theta: f64) -> f64 {
    let m = QUAD_POINTS as f64;
    let step = 2.0 * std::f64::consts::PI / m;
    (0..QUAD_POINTS)
        .map(|j| {
            let x = j as f64 * step;
            (l as f64 * x - theta * x.sin()).cos()
        })
        .sum::<f64>()
        / m
}

/// Amplitude for hopping `l` bins under the temporal phase
/// `e^{i s θ sin Δωt}`, for fields written as `Σ E_m e^{-iω_m t}`:
/// `(1/2π) ∫ e^{i s θ sin x} e^{i l x} dx`.
pub fn quad_hop(l: i64, theta: f64, s: f64) -> Complex64 {
    let m = QUAD_POINTS as f64;
    let step = 2.0 * std::f64::consts::PI / m;
    (0..QUAD_POINTS)
        .map(|j| {
            let x = j as f64 * step;
            Complex64::from_polar(1.0, s * theta * x.sin() + l as f64 * x)
        })
        .sum::<Complex64>()
        / m
}

/// Dense `D · T · C` over bins `[-half_width, half_width]`.
/// `shaper` maps channel index to transmission; `s1`, `s2` are drive signs.
pub fn dense_transfer(
    theta1: f64,
    s1: f64,
    shaper: &dyn Fn(i64) -> Complex64,
    theta2: f64,
    s2: f64,
    half_width: i64,
) -> (i64, Array2<Complex64>) {
    let size = (2 * half_width + 1) as usize;
    let idx = |i: usize| i as i64 - half_width;
    let span = size as i64 - 1;
    let hops = |theta: f64, s: f64| -> Vec<Complex64> { (-span..=span).map(|l| quad_hop(l, theta, s)).collect() };
    let (h1, h2) = (hops(theta1, s1), hops(theta2, s2));
    let c = Array2::from_shape_fn((size, size), |(i, j)| h1[(idx(i) - idx(j) + span) as usize]);
    let d = Array2::from_shape_fn((size, size), |(i, j)| h2[(idx(i) - idx(j) + span) as usize]);
    let t = Array2::from_shape_fn((size, size), |(i, j)| {
        if i == j {
            shaper(idx(i))
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    (-half_width, d.dot(&t).dot(&c))
}

/// Canonical step-phase transmission.
pub fn step_shaper(channels: i64, alpha: f64) -> impl Fn(i64) -> Complex64 {
    move |k| {
        if k < 1 - channels / 2 || k > channels / 2 {
            Complex64::new(0.0, 0.0)
        } else if k <= 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, alpha)
        }
    }
}

/// Dense oracle for a canonical `(B, α, θ)` device, returned as the 2x2 block
/// plus column masses over the dense window.
pub fn dense_canonical(channels: i64, alpha: f64, theta: f64, half_width: i64) -> (i64, Array2<Complex64>) {
    let shaper = step_shaper(channels, alpha);
    dense_transfer(theta, 1.0, &shaper, theta, -1.0, half_width)
}

pub fn dense_entry(origin: i64, v: &Array2<Complex64>, m: i64, n: i64) -> Complex64 {
    v[[(m - origin) as usize, (n - origin) as usize]]
}
