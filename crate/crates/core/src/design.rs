//! Parameter sweeps over `(B, α, θ)` and a derivative-free optimizer for the
//! modulation index.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{GateMetrics, SplitterRatios};
use crate::transfer::GateParams;

/// Default α sweep step.
pub const ALPHA_STEP: f64 = PI / 180.0;
/// Default θ sweep step.
pub const THETA_STEP: f64 = 5e-3;
/// Largest modulation index accepted by [`sweep_theta`].
pub const THETA_SWEEP_MAX: f64 = 1.2;
/// Resolution of the grid that confirms an optimizer result.
pub const GRID_CHECK_STEP: f64 = 1e-5;

const COARSE_POINTS: usize = 41;
const FLAT_RANGE: f64 = 1e-9;

/// Normalised `N`-point DFT. For `N = 2` this is exactly the Hadamard gate.
pub fn dft_target(n: usize) -> Array2<Complex64> {
    let norm = 1.0 / (n as f64).sqrt();
    Array2::from_shape_fn((n, n), |(j, k)| {
        Complex64::from_polar(norm, 2.0 * PI * (j * k) as f64 / n as f64)
    })
}

/// `start, start + step, ...` up to `stop` inclusive, with the count rounded
/// so accumulated floating error never drops or duplicates the endpoint.
pub fn stepped(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::Domain(format!("bad grid: start={start} stop={stop} step={step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "B")]
    Channels,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "theta")]
    Theta,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Channels => "B",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Theta => "theta",
        }
    }
}

/// Parameters held fixed during a sweep; the swept one is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedParams {
    pub channels: Option<usize>,
    pub alpha: Option<f64>,
    pub theta: Option<f64>,
    pub n_inputs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub params: GateParams,
    pub metrics: GateMetrics,
    /// Present when `N = 2`.
    pub ratios: Option<SplitterRatios>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub fixed: FixedParams,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn axis_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.axis_value).collect()
    }

    /// Interpolated axis values where `R_{0→1} - T_{0→0}` changes sign.
    pub fn crossovers(&self) -> Vec<f64> {
        let diffs: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter_map(|p| p.ratios.map(|r| (p.axis_value, r.r_01 - r.t_00)))
            .collect();
        let mut out = Vec::new();
        for pair in diffs.windows(2) {
            let ((x0, d0), (x1, d1)) = (pair[0], pair[1]);
            if d0 == 0.0 {
                out.push(x0);
            } else if d0.signum() != d1.signum() && d1 != 0.0 {
                out.push(x0 - d0 * (x1 - x0) / (d1 - d0));
            }
        }
        if let Some(&(x, d)) = diffs.last() {
            if d == 0.0 {
                out.push(x);
            }
        }
        out
    }
}

/// Metrics of one canonical device against the `N`-point DFT target.
pub fn evaluate(params: &GateParams, n_inputs: usize) -> Result<SweepPoint> {
    let v = params.transfer(n_inputs)?;
    let metrics = GateMetrics::evaluate(&v, &dft_target(n_inputs))?;
    let ratios = if n_inputs == 2 {
        Some(metrics.ratios()?)
    } else {
        None
    };
    Ok(SweepPoint {
        axis_value: 0.0,
        params: *params,
        metrics,
        ratios,
    })
}

fn check_increasing(values: &[f64], axis: SweepAxis) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Domain(format!("{} sweep has no points", axis.name())));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain(format!(
            "{} sweep values must be strictly increasing",
            axis.name()
        )));
    }
    Ok(())
}

fn run(
    axis: SweepAxis,
    fixed: FixedParams,
    values: &[f64],
    make: impl Fn(f64) -> GateParams + Sync,
) -> Result<SweepResult> {
    let points = values
        .par_iter()
        .map(|&x| {
            let mut p = evaluate(&make(x), fixed.n_inputs)?;
            p.axis_value = x;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis,
        fixed,
        points,
    })
}

pub fn sweep_channels(alpha: f64, theta: f64, channels: &[usize], n_inputs: usize) -> Result<SweepResult> {
    if let Some(b) = channels.iter().find(|&&b| b < 2 || b % 2 != 0) {
        return Err(Error::Specification(format!("channel count must be even and >= 2, got {b}")));
    }
    let values: Vec<f64> = channels.iter().map(|&b| b as f64).collect();
    check_increasing(&values, SweepAxis::Channels)?;
    let fixed = FixedParams {
        channels: None,
        alpha: Some(alpha),
        theta: Some(theta),
        n_inputs,
    };
    run(SweepAxis::Channels, fixed, &values, |b| {
        GateParams::new(b as usize, alpha, theta)
    })
}

pub fn sweep_alpha(channels: usize, theta: f64, alphas: &[f64], n_inputs: usize) -> Result<SweepResult> {
    check_increasing(alphas, SweepAxis::Alpha)?;
    if let Some(a) = alphas.iter().find(|a| !(0.0..=2.0 * PI + 1e-12).contains(*a)) {
        return Err(Error::Domain(format!("alpha = {a} is outside [0, 2pi]")));
    }
    let fixed = FixedParams {
        channels: Some(channels),
        alpha: None,
        theta: Some(theta),
        n_inputs,
    };
    run(SweepAxis::Alpha, fixed, alphas, |a| GateParams::new(channels, a, theta))
}

pub fn sweep_theta(channels: usize, alpha: f64, thetas: &[f64], n_inputs: usize) -> Result<SweepResult> {
    check_increasing(thetas, SweepAxis::Theta)?;
    if let Some(t) = thetas.iter().find(|t| !(0.0..=THETA_SWEEP_MAX).contains(*t)) {
        return Err(Error::Domain(format!("theta = {t} is outside [0, {THETA_SWEEP_MAX}]")));
    }
    let fixed = FixedParams {
        channels: Some(channels),
        alpha: Some(alpha),
        theta: None,
        n_inputs,
    };
    run(SweepAxis::Theta, fixed, thetas, |t| GateParams::new(channels, alpha, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    Fidelity,
    FidelityTimesSuccess,
}

impl Objective {
    fn value(self, metrics: &GateMetrics) -> f64 {
        match self {
            Objective::Fidelity => metrics.fidelity,
            Objective::FidelityTimesSuccess => metrics.fidelity * metrics.p_tilde,
        }
    }
}

/// Objective of a canonical device against the 2x2 Hadamard target.
pub fn objective_value(params: &GateParams, objective: Objective) -> Result<f64> {
    Ok(objective.value(&GateMetrics::hadamard(params)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenTrace {
    pub iterations: usize,
    pub brackets: Vec<(f64, f64)>,
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
pub fn golden_section_max(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iterations: usize,
) -> Result<(f64, f64, GoldenTrace)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut trace = GoldenTrace {
        iterations: 0,
        brackets: vec![(a, b)],
    };
    while b - a > tol && trace.iterations < max_iterations {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        trace.iterations += 1;
        trace.brackets.push((a, b));
    }
    let x = 0.5 * (a + b);
    let fx = f(x)?;
    Ok((x, fx, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCheck {
    pub step: f64,
    pub lo: f64,
    pub hi: f64,
    pub best_theta: f64,
    pub best_value: f64,
    /// `best grid value - value at the optimizer's argmax`.
    pub excess: f64,
}

/// Metrics summary without the complex submatrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub fidelity: f64,
    pub p: f64,
    pub p_tilde: f64,
    pub eta: f64,
    pub ratios: SplitterRatios,
}

impl MetricsSummary {
    pub fn of(params: &GateParams) -> Result<Self> {
        let m = GateMetrics::hadamard(params)?;
        Ok(Self {
            fidelity: m.fidelity,
            p: m.p,
            p_tilde: m.p_tilde,
            eta: m.eta,
            ratios: m.ratios()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimumReport {
    pub objective: Objective,
    pub channels: usize,
    pub alpha: f64,
    pub bracket: (f64, f64),
    pub theta: f64,
    pub value: f64,
    pub metrics: MetricsSummary,
    pub coarse_scan: Vec<(f64, f64)>,
    pub golden: GoldenTrace,
    pub grid_check: GridCheck,
    pub flat_objective: bool,
}

fn check_bracket(lo: f64, hi: f64, name: &str) -> Result<()> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Bracket(format!("{name} bracket [{lo}, {hi}] is empty")));
    }
    Ok(())
}

/// Maximises `objective` over θ for a canonical `(B, α)` device.
///
/// A coarse scan locates the best interior cell, golden-section refines it,
/// and a `1e-5` grid around the result confirms it.
pub fn optimize_theta(
    channels: usize,
    alpha: f64,
    bracket: (f64, f64),
    objective: Objective,
) -> Result<OptimumReport> {
    let (lo, hi) = bracket;
    check_bracket(lo, hi, "theta")?;
    if lo < 0.0 {
        return Err(Error::Bracket(format!("theta bracket starts below zero: {lo}")));
    }
    let f = |theta: f64| objective_value(&GateParams::new(channels, alpha, theta), objective);

    let step = (hi - lo) / (COARSE_POINTS - 1) as f64;
    let coarse = (0..COARSE_POINTS)
        .map(|i| {
            let x = if i + 1 == COARSE_POINTS { hi } else { lo + i as f64 * step };
            f(x).map(|y| (x, y))
        })
        .collect::<Result<Vec<_>>>()?;
    let (best, _) = coarse
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &(_, y))| if y > acc.1 { (i, y) } else { acc });
    let (min, max) = coarse
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, y)| (a.min(y), b.max(y)));
    let flat = max - min < FLAT_RANGE;

    if !flat && (best == 0 || best + 1 == COARSE_POINTS) {
        return Err(Error::Bracket(format!(
            "objective is maximal at the edge theta = {} of [{lo}, {hi}]; no interior maximum",
            coarse[best].0
        )));
    }
    let cell_lo = coarse[best.saturating_sub(1)].0;
    let cell_hi = coarse[(best + 1).min(COARSE_POINTS - 1)].0;
    let (theta, value, golden) = golden_section_max(f, cell_lo, cell_hi, 1e-10, 200)?;

    let half = 50.0 * GRID_CHECK_STEP;
    let (g_lo, g_hi) = ((theta - half).max(lo), (theta + half).min(hi));
    let grid = stepped(g_lo, g_hi, GRID_CHECK_STEP)?
        .into_iter()
        .map(|x| f(x).map(|y| (x, y)))
        .collect::<Result<Vec<_>>>()?;
    let &(best_theta, best_value) = grid
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is never empty");

    Ok(OptimumReport {
        objective,
        channels,
        alpha,
        bracket,
        theta,
        value,
        metrics: MetricsSummary::of(&GateParams::new(channels, alpha, theta))?,
        coarse_scan: coarse,
        golden,
        grid_check: GridCheck {
            step: GRID_CHECK_STEP,
            lo: g_lo,
            hi: g_hi,
            best_theta,
            best_value,
            excess: best_value - value,
        },
        flat_objective: flat,
    })
}

/// Fidelity-optimal θ for the Hadamard target.
pub fn optimize_hadamard(channels: usize, alpha: f64, bracket: (f64, f64)) -> Result<OptimumReport> {
    optimize_theta(channels, alpha, bracket, Objective::Fidelity)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointOptimum {
    pub objective: Objective,
    pub channels: usize,
    pub alpha: f64,
    pub theta: f64,
    pub value: f64,
    pub metrics: MetricsSummary,
    pub rounds: usize,
}

/// Cyclic coordinate search over `(α, θ)`, each coordinate by golden section.
pub fn optimize_joint(
    channels: usize,
    alpha_bracket: (f64, f64),
    theta_bracket: (f64, f64),
    objective: Objective,
) -> Result<JointOptimum> {
    check_bracket(alpha_bracket.0, alpha_bracket.1, "alpha")?;
    check_bracket(theta_bracket.0, theta_bracket.1, "theta")?;
    let mut alpha = 0.5 * (alpha_bracket.0 + alpha_bracket.1);
    let mut theta = 0.5 * (theta_bracket.0 + theta_bracket.1);
    let mut value = objective_value(&GateParams::new(channels, alpha, theta), objective)?;
    let mut rounds = 0;
    while rounds < 50 {
        rounds += 1;
        let (a, _, _) = golden_section_max(
            |a| objective_value(&GateParams::new(channels, a, theta), objective),
            alpha_bracket.0,
            alpha_bracket.1,
            1e-10,
            200,
        )?;
        let (t, v, _) = golden_section_max(
            |t| objective_value(&GateParams::new(channels, a, t), objective),
            theta_bracket.0,
            theta_bracket.1,
            1e-10,
            200,
        )?;
        let moved = (a - alpha).abs().max((t - theta).abs());
        alpha = a;
        theta = t;
        let improved = v - value;
        value = v;
        if moved < 1e-9 || improved.abs() < 1e-15 {
            break;
        }
    }
    Ok(JointOptimum {
        objective,
        channels,
        alpha,
        theta,
        value,
        metrics: MetricsSummary::of(&GateParams::new(channels, alpha, theta))?,
        rounds,
    })
}
