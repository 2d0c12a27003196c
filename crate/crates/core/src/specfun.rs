//! Bessel functions of the first kind at integer order.
//!
//! Rows `J_0(θ) ..= J_K(θ)` are produced by downward (Miller) recurrence,
//! normalised with the Parseval sum `J_0² + 2 Σ J_k² = 1` and signed with the
//! even-order sum `J_0 + 2 Σ J_2k = 1`. Small arguments (`|θ| < 0.5`) use the
//! power series directly. Negative orders follow from `J_{-ℓ} = (-1)^ℓ J_ℓ`.

use crate::error::{Error, Result};

/// Largest `|θ|` accepted by the evaluators.
pub const THETA_ENVELOPE: f64 = 20.0;

/// Default tail tolerance used wherever sideband truncation is implicit.
pub const DEFAULT_TAIL_TOL: f64 = 1e-16;

/// Extra orders above `max(K, ceil|θ|)` where downward recurrence starts.
const MILLER_HEADROOM: usize = 60;

const SERIES_CUTOFF: f64 = 0.5;
const RESCALE_AT: f64 = 1e100;

fn check_theta(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta.abs() > THETA_ENVELOPE {
        return Err(Error::Domain(format!(
            "theta = {theta} is outside the supported envelope |theta| <= {THETA_ENVELOPE}"
        )));
    }
    Ok(())
}

/// `J_order(theta)` for any integer order.
pub fn bessel_j(order: i64, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let n = order.unsigned_abs() as usize;
    let value = nonneg_row(theta, n)[n];
    Ok(if order < 0 && n % 2 == 1 { -value } else { value })
}

/// Values `J_0(theta) ..= J_max_order(theta)`. Caller guarantees the envelope.
pub(crate) fn nonneg_row(theta: f64, max_order: usize) -> Vec<f64> {
    if theta == 0.0 {
        let mut row = vec![0.0; max_order + 1];
        row[0] = 1.0;
        return row;
    }
    let x = theta.abs();
    let mut row = if x < SERIES_CUTOFF {
        (0..=max_order).map(|n| series(n, x)).collect()
    } else {
        miller(x, max_order)
    };
    if theta < 0.0 {
        for (n, v) in row.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    row
}

fn series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    // (x/2)^n / n!, built incrementally so large n underflows to zero cleanly
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let q = half * half;
    let mut sum = term;
    let mut m = 0usize;
    while term.abs() > f64::EPSILON * sum.abs() * 1e-3 && m < 64 {
        m += 1;
        term *= -q / (m as f64 * (m + n) as f64);
        sum += term;
    }
    sum
}

fn miller(x: f64, max_order: usize) -> Vec<f64> {
    let start = max_order.max(x.ceil() as usize) + MILLER_HEADROOM;
    let mut f = vec![0.0; start + 2];
    f[start] = 1.0;
    for k in (1..=start).rev() {
        f[k - 1] = (2.0 * k as f64 / x) * f[k] - f[k + 1];
        if f[k - 1].abs() > RESCALE_AT {
            for v in &mut f[k - 1..] {
                *v /= RESCALE_AT;
            }
        }
    }
    let power = f[0] * f[0] + 2.0 * f[1..].iter().map(|v| v * v).sum::<f64>();
    let even = f[0] + 2.0 * f[2..].iter().step_by(2).sum::<f64>();
    let scale = even.signum() / power.sqrt();
    f.truncate(max_order + 1);
    for v in &mut f {
        *v *= scale;
    }
    f
}

/// `J_ℓ(theta)` for every `ℓ` in `[-K, K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselRow {
    theta: f64,
    max_order: usize,
    values: Vec<f64>,
}

impl BesselRow {
    pub fn new(theta: f64, max_order: usize) -> Result<Self> {
        check_theta(theta)?;
        let half = nonneg_row(theta, max_order);
        let mut values = Vec::with_capacity(2 * max_order + 1);
        for l in (1..=max_order).rev() {
            values.push(if l % 2 == 1 { -half[l] } else { half[l] });
        }
        values.extend_from_slice(&half);
        Ok(Self {
            theta,
            max_order,
            values,
        })
    }

    /// Row sized by [`truncation_order`] for the given tail tolerance.
    pub fn truncated(theta: f64, tail_tol: f64) -> Result<Self> {
        let k = truncation_order(theta, tail_tol)?;
        Self::new(theta, k)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// `J_order(theta)`; orders outside `[-K, K]` read as zero.
    pub fn get(&self, order: i64) -> f64 {
        let k = self.max_order as i64;
        if order < -k || order > k {
            0.0
        } else {
            self.values[(order + k) as usize]
        }
    }

    pub fn orders(&self) -> std::ops::RangeInclusive<i64> {
        let k = self.max_order as i64;
        -k..=k
    }

    /// Values ordered from `-K` to `K`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Σ J_ℓ²` over the row.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Smallest `K` with `1 - Σ_{|ℓ|≤K} J_ℓ(theta)² < tail_tol`.
///
/// The tail is summed directly from the high orders down, so the comparison
/// is not limited by cancellation against 1.
pub fn truncation_order(theta: f64, tail_tol: f64) -> Result<usize> {
    check_theta(theta)?;
    if !(tail_tol > 0.0) {
        return Err(Error::Domain(format!("tail_tol must be positive, got {tail_tol}")));
    }
    let top = theta.abs().ceil() as usize + MILLER_HEADROOM;
    let row = nonneg_row(theta, top);
    // tail[k] = 2 Σ_{ℓ>k} J_ℓ²
    let mut tail = vec![0.0; top + 1];
    for k in (0..top).rev() {
        tail[k] = tail[k + 1] + 2.0 * row[k + 1] * row[k + 1];
    }
    Ok(tail.iter().position(|&t| t < tail_tol).unwrap_or(top))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_values_at_origin() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(-7, 0.0).unwrap(), 0.0);
        assert_eq!(truncation_order(0.0, 1e-16).unwrap(), 0);
    }

    #[test]
    fn envelope_is_enforced() {
        assert!(matches!(bessel_j(0, 20.5), Err(Error::Domain(_))));
        assert!(matches!(bessel_j(0, f64::NAN), Err(Error::Domain(_))));
        assert!(bessel_j(3, -20.0).is_ok());
        assert!(matches!(truncation_order(1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn known_reference_values() {
        // Abramowitz & Stegun table 9.1
        assert!((bessel_j(0, 1.0).unwrap() - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1, 1.0).unwrap() - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(0, 10.0).unwrap() + 0.245_935_764_451_348_3).abs() < 1e-14);
        assert!((bessel_j(2, 0.3).unwrap() - 0.011_165_861_949_064_1).abs() < 1e-15);
    }

    #[test]
    fn series_and_recurrence_agree_at_the_cutoff() {
        for n in 0..12 {
            let a = series(n, SERIES_CUTOFF);
            let b = miller(SERIES_CUTOFF, 12)[n];
            assert!((a - b).abs() < 1e-15, "order {n}: {a} vs {b}");
        }
    }

    #[test]
    fn sideband_leakage_ratio() {
        let j0 = bessel_j(0, 0.8283).unwrap();
        let j2 = bessel_j(2, 0.8283).unwrap();
        let ratio = (j2 / j0).powi(2);
        assert!((0.0085..=0.0095).contains(&ratio), "{ratio}");
    }

    #[test]
    fn truncated_row_meets_parseval() {
        let row = BesselRow::truncated(0.8283, 1e-16).unwrap();
        assert!((row.power() - 1.0).abs() < 1e-12);
        assert_eq!(row.get(row.max_order() as i64 + 1), 0.0);
        assert_eq!(row.values().len(), 2 * row.max_order() + 1);
    }

    #[test]
    fn huge_orders_underflow_without_nan() {
        let row = nonneg_row(0.7, 300);
        assert!(row.iter().all(|v| v.is_finite()));
        assert_eq!(row[300], 0.0);
    }
}
