//! Coherent-state characterization of a 2x2 frequency beamsplitter.
//!
//! Single-line probes (one input bin lit) give the magnitudes
//! `γ_mn = |V_mn| / √η` after each output spectrum is normalised by its own
//! detected power. Dual-line probes (both bins lit, relative phase
//! `φ_i + φ_s`) give
//!
//! ```text
//! ρ0 = ½ [γ00² + γ01² + 2 γ00 γ01 cos(φ_i + φ_s)]
//! ρ1 = ½ [γ10² + γ11² + 2 γ10 γ11 cos(φ_i + φ_s + φ11)]
//! ```
//!
//! from which `φ_i` and then `φ11` are fitted. The phase reference makes the
//! first row and column of the reconstructed `W` real and non-negative.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use ndarray::{array, Array2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::metrics::hadamard;
use crate::transfer::{build_with_second_phase, DriveSign, ModulatorSpec, ShaperSpec, TransferMatrix};

/// Fitted sinusoid amplitudes at or below this are treated as flat.
pub const FLAT_AMPLITUDE: f64 = 1e-9;

/// Measurement noise. Each bin of each recorded spectrum is multiplied by
/// `1 + sigma·z`; every spectrum additionally carries a shared power factor
/// `1 + correlated_sigma·z'` that the per-spectrum normalisation removes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub sigma: f64,
    #[serde(default)]
    pub correlated_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub replicates: usize,
    /// Frequency-independent field transmission `L`.
    pub loss: f64,
    pub noise: NoiseModel,
    /// RF delay-line settings `φ_s`.
    pub phase_grid: Vec<f64>,
    /// Hidden instrument phase `φ_i`.
    pub phi_i: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            replicates: 5,
            loss: 0.1,
            noise: NoiseModel::default(),
            phase_grid: uniform_phase_grid(36),
            phi_i: 0.7,
            seed: 0,
        }
    }
}

/// `points` equally spaced phases over `[0, 2π)`.
pub fn uniform_phase_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| TAU * i as f64 / points as f64).collect()
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::config("probe.replicates", "need at least 2 replicates"));
        }
        if !(self.loss > 0.0 && self.loss <= 1.0) {
            return Err(Error::config("probe.loss", format!("loss {} is outside (0, 1]", self.loss)));
        }
        if !(self.noise.sigma >= 0.0) || !(self.noise.correlated_sigma >= 0.0) {
            return Err(Error::config("probe.noise", "noise sigmas must be non-negative"));
        }
        if self.phase_grid.len() < 8 {
            return Err(Error::config("probe.phase_grid", "need at least 8 phase settings"));
        }
        if self.phase_grid.iter().any(|p| !p.is_finite()) {
            return Err(Error::config("probe.phase_grid", "phases must be finite"));
        }
        // the settings must wrap the full circle without a gap wider than π/2
        let mut wrapped: Vec<f64> = self.phase_grid.iter().map(|p| p.rem_euclid(TAU)).collect();
        wrapped.sort_by(f64::total_cmp);
        let mut gap = TAU - wrapped[wrapped.len() - 1] + wrapped[0];
        for w in wrapped.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        if gap > PI / 2.0 {
            return Err(Error::config(
                "probe.phase_grid",
                format!("phase settings leave a gap of {gap:.3} rad; they must cover 2pi"),
            ));
        }
        if !self.phi_i.is_finite() {
            return Err(Error::config("probe.phi_i", "must be finite"));
        }
        Ok(())
    }
}

/// One recorded output spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Total detected power before normalisation.
    pub total: f64,
    /// Normalised powers over the output window; they sum to one.
    pub powers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleLineData {
    pub window: (i64, i64),
    /// `[input][replicate]`.
    pub inputs: Vec<Vec<Spectrum>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualLinePoint {
    pub phi_s: f64,
    pub replicates: Vec<Spectrum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualLineData {
    pub window: (i64, i64),
    pub points: Vec<DualLinePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeDataset {
    pub single_line: SingleLineData,
    pub dual_line: DualLineData,
}

fn bin_index(window: (i64, i64), m: i64) -> Result<usize> {
    if m < window.0 || m > window.1 {
        return Err(Error::Dimension(format!(
            "bin {m} is outside the recorded window [{}, {}]",
            window.0, window.1
        )));
    }
    Ok((m - window.0) as usize)
}

impl DualLineData {
    /// `(ρ0, ρ1)` of one replicate at one phase setting.
    pub fn rho(&self, point: usize, replicate: usize) -> Result<(f64, f64)> {
        let s = &self.points[point].replicates[replicate];
        let (i0, i1) = (bin_index(self.window, 0)?, bin_index(self.window, 1)?);
        Ok((s.powers[i0], s.powers[i1]))
    }
}

// splitmix64 finaliser
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard normal draw addressed by `(seed, measurement, replicate, slot)`,
/// independent of generation order.
fn normal_at(seed: u64, measurement: u64, replicate: u64, slot: u64) -> f64 {
    let key = mix(mix(mix(mix(seed) ^ measurement) ^ replicate) ^ slot);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    StandardNormal.sample(&mut rng)
}

const SHARED_SLOT: u64 = u64::MAX;

fn record(
    field: &[Complex64],
    cfg: &ProbeConfig,
    measurement: u64,
    replicate: u64,
) -> Result<Spectrum> {
    let l2 = cfg.loss * cfg.loss;
    let shared = if cfg.noise.correlated_sigma > 0.0 {
        (1.0 + cfg.noise.correlated_sigma * normal_at(cfg.seed, measurement, replicate, SHARED_SLOT)).max(0.0)
    } else {
        1.0
    };
    let raw: Vec<f64> = field
        .iter()
        .enumerate()
        .map(|(slot, a)| {
            let noise = if cfg.noise.sigma > 0.0 {
                (1.0 + cfg.noise.sigma * normal_at(cfg.seed, measurement, replicate, slot as u64)).max(0.0)
            } else {
                1.0
            };
            l2 * a.norm_sqr() * noise * shared
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedMetric("no power detected in a probe spectrum".into()));
    }
    Ok(Spectrum {
        total,
        powers: raw.iter().map(|p| p / total).collect(),
    })
}

fn require_two_inputs(v: &TransferMatrix) -> Result<()> {
    if v.n_inputs() != 2 {
        return Err(Error::Dimension(format!(
            "coherent-state probing models a 2x2 gate, got N = {}",
            v.n_inputs()
        )));
    }
    Ok(())
}

fn replicated(
    field: &[Complex64],
    cfg: &ProbeConfig,
    measurement: u64,
) -> Result<Vec<Spectrum>> {
    (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| record(field, cfg, measurement, r))
        .collect()
}

pub fn simulate_single_line(v: &TransferMatrix, cfg: &ProbeConfig) -> Result<SingleLineData> {
    require_two_inputs(v)?;
    cfg.validate()?;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let inputs = [[one, zero], [zero, one]]
        .iter()
        .enumerate()
        .map(|(n, input)| replicated(&v.apply(input)?, cfg, n as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(SingleLineData {
        window: v.output_window(),
        inputs,
    })
}

pub fn simulate_dual_line(v: &TransferMatrix, cfg: &ProbeConfig) -> Result<DualLineData> {
    require_two_inputs(v)?;
    cfg.validate()?;
    let points = cfg
        .phase_grid
        .iter()
        .enumerate()
        .map(|(j, &phi_s)| {
            let input = [
                Complex64::new(FRAC_1_SQRT_2, 0.0),
                Complex64::from_polar(FRAC_1_SQRT_2, cfg.phi_i + phi_s),
            ];
            Ok(DualLinePoint {
                phi_s,
                replicates: replicated(&v.apply(&input)?, cfg, 2 + j as u64)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DualLineData {
        window: v.output_window(),
        points,
    })
}

pub fn simulate(v: &TransferMatrix, cfg: &ProbeConfig) -> Result<ProbeDataset> {
    Ok(ProbeDataset {
        single_line: simulate_single_line(v, cfg)?,
        dual_line: simulate_dual_line(v, cfg)?,
    })
}

/// Least-squares fit of `y = offset + b cos x + c sin x`, reported as
/// `offset + amplitude · cos(x + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinusoidFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub phase_std: f64,
    pub amplitude_std: f64,
    pub residual_variance: f64,
    pub dof: usize,
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn invert3(a: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut inv = [[0.0; 3]; 3];
    for col in 0..3 {
        let mut e = [0.0; 3];
        e[col] = 1.0;
        let x = solve3(a, e)?;
        for row in 0..3 {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

pub fn fit_sinusoid(xs: &[f64], ys: &[f64]) -> Result<SinusoidFit> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(Error::Degenerate(format!(
            "sinusoid fit needs at least 4 paired samples, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let row = [1.0, x.cos(), x.sin()];
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let inv = invert3(ata).ok_or_else(|| Error::Degenerate("phase settings do not span the circle".into()))?;
    let coef: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| inv[i][j] * aty[j]).sum());
    let dof = xs.len() - 3;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (coef[0] + coef[1] * x.cos() + coef[2] * x.sin());
            r * r
        })
        .sum();
    let s2 = rss / dof as f64;
    let (b, c) = (coef[1], coef[2]);
    let (vbb, vcc, vbc) = (s2 * inv[1][1], s2 * inv[2][2], s2 * inv[1][2]);
    let a2 = b * b + c * c;
    let amplitude = a2.sqrt();
    // y = offset + A cos(x + phase) with b = A cos(phase), c = -A sin(phase)
    let phase = (-c).atan2(b);
    let (phase_var, amp_var) = if a2 > 0.0 {
        (
            (c * c * vbb + b * b * vcc - 2.0 * b * c * vbc) / (a2 * a2),
            (b * b * vbb + c * c * vcc + 2.0 * b * c * vbc) / a2,
        )
    } else {
        (f64::INFINITY, vbb.max(vcc))
    };
    Ok(SinusoidFit {
        offset: coef[0],
        amplitude,
        phase,
        phase_std: phase_var.max(0.0).sqrt(),
        amplitude_std: amp_var.max(0.0).sqrt(),
        residual_variance: s2,
        dof,
    })
}

/// Two-sided 95% Student-t quantile.
fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(1.959_963_984_540_054)
}

/// Magnitudes `γ` indexed `[m][n]` plus the gauge-invariant phase `φ11`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaPhase {
    pub gamma: [[f64; 2]; 2],
    pub phi_11: f64,
}

impl GammaPhase {
    /// Reconstructed `W = [[γ00, γ01], [γ10, γ11 e^{iφ11}]]`.
    pub fn matrix(&self) -> Array2<Complex64> {
        let g = self.gamma;
        array![
            [Complex64::new(g[0][0], 0.0), Complex64::new(g[0][1], 0.0)],
            [Complex64::new(g[1][0], 0.0), Complex64::from_polar(g[1][1], self.phi_11)]
        ]
    }

    /// Parameter vector `(γ00, γ01, γ10, γ11, φ11)`.
    pub fn as_vector(&self) -> [f64; 5] {
        let g = self.gamma;
        [g[0][0], g[0][1], g[1][0], g[1][1], self.phi_11]
    }

    pub fn from_vector(x: [f64; 5]) -> Self {
        Self {
            gamma: [[x[0], x[1]], [x[2], x[3]]],
            phi_11: x[4],
        }
    }

    /// `P̃ = (γ00² + γ01² + γ10² + γ11²) / 2`.
    pub fn p_tilde(&self) -> f64 {
        self.gamma.iter().flatten().map(|g| g * g).sum::<f64>() / 2.0
    }

    pub fn p_tilde_gradient(&self) -> [f64; 5] {
        let x = self.as_vector();
        [x[0], x[1], x[2], x[3], 0.0]
    }

    /// `|Tr U†W|² / (2 Tr W†W)` for a 2x2 unitary `U`.
    pub fn fidelity(&self, target: &Array2<Complex64>) -> f64 {
        let (s, q) = self.overlap(target);
        s.norm_sqr() / (2.0 * q)
    }

    fn coefficients(&self, target: &Array2<Complex64>) -> [Complex64; 4] {
        let rot = Complex64::from_polar(1.0, self.phi_11);
        [
            target[[0, 0]].conj(),
            target[[0, 1]].conj(),
            target[[1, 0]].conj(),
            target[[1, 1]].conj() * rot,
        ]
    }

    fn overlap(&self, target: &Array2<Complex64>) -> (Complex64, f64) {
        let x = self.as_vector();
        let a = self.coefficients(target);
        let s: Complex64 = (0..4).map(|i| a[i] * x[i]).sum();
        let q: f64 = x[..4].iter().map(|g| g * g).sum();
        (s, q)
    }

    /// Analytic gradient of [`GammaPhase::fidelity`] over `(γ00, γ01, γ10, γ11, φ11)`.
    pub fn fidelity_gradient(&self, target: &Array2<Complex64>) -> [f64; 5] {
        let x = self.as_vector();
        let a = self.coefficients(target);
        let (s, q) = self.overlap(target);
        let f = s.norm_sqr() / (2.0 * q);
        let mut g = [0.0; 5];
        for i in 0..4 {
            g[i] = (s.conj() * a[i]).re / q - 2.0 * f * x[i] / q;
        }
        g[4] = (s.conj() * Complex64::i() * a[3] * x[3]).re / q;
        g
    }
}

/// `gᵀ Σ g`.
pub fn propagate(gradient: &[f64; 5], covariance: &[[f64; 5]; 5]) -> f64 {
    let mut acc = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            acc += gradient[i] * gradient[j] * covariance[i][j];
        }
    }
    acc.max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub estimate: GammaPhase,
    pub phi_i_fit: f64,
    /// Over `(γ00, γ01, γ10, γ11, φ11)`.
    pub covariance: [[f64; 5]; 5],
    pub fidelity: f64,
    pub fidelity_err: f64,
    pub p_tilde: f64,
    pub p_tilde_err: f64,
    pub rho0_fit: SinusoidFit,
    pub rho1_fit: SinusoidFit,
}

impl Reconstruction {
    pub fn gamma(&self) -> [[f64; 2]; 2] {
        self.estimate.gamma
    }

    pub fn phi_11(&self) -> f64 {
        self.estimate.phi_11
    }
}

fn check_flat(fit: &SinusoidFit, channel: &str) -> Result<()> {
    if fit.amplitude <= FLAT_AMPLITUDE || fit.amplitude < 3.0 * fit.amplitude_std {
        return Err(Error::Degenerate(format!(
            "{channel} shows no interference (fitted amplitude {:.3e} +/- {:.3e}); \
             the phase is unidentifiable",
            fit.amplitude, fit.amplitude_std
        )));
    }
    Ok(())
}

/// Reconstruction against the Hadamard target.
pub fn reconstruct(ds: &ProbeDataset) -> Result<Reconstruction> {
    reconstruct_against(ds, &hadamard())
}

pub fn reconstruct_against(ds: &ProbeDataset, target: &Array2<Complex64>) -> Result<Reconstruction> {
    if target.dim() != (2, 2) {
        return Err(Error::Dimension("reconstruction target must be 2x2".into()));
    }
    let single = &ds.single_line;
    if single.inputs.len() != 2 {
        return Err(Error::Dimension("single-line data must cover inputs 0 and 1".into()));
    }
    let reps = single.inputs[0].len();
    if reps < 2 || single.inputs[1].len() != reps {
        return Err(Error::Degenerate(format!(
            "need at least 2 matching single-line replicates, got {} and {}",
            single.inputs[0].len(),
            single.inputs[1].len()
        )));
    }
    let (i0, i1) = (bin_index(single.window, 0)?, bin_index(single.window, 1)?);

    // samples ordered (γ00, γ01, γ10, γ11); γ_mn is output m for input n
    let samples: Vec<[f64; 4]> = (0..reps)
        .map(|r| {
            let a = &single.inputs[0][r].powers;
            let b = &single.inputs[1][r].powers;
            [a[i0].sqrt(), b[i0].sqrt(), a[i1].sqrt(), b[i1].sqrt()]
        })
        .collect();
    let mean: [f64; 4] = std::array::from_fn(|i| samples.iter().map(|s| s[i]).sum::<f64>() / reps as f64);
    let mut covariance = [[0.0; 5]; 5];
    for i in 0..4 {
        for j in 0..4 {
            covariance[i][j] = samples
                .iter()
                .map(|s| (s[i] - mean[i]) * (s[j] - mean[j]))
                .sum::<f64>()
                / (reps - 1) as f64;
        }
    }

    let dual = &ds.dual_line;
    let (d0, d1) = (bin_index(dual.window, 0)?, bin_index(dual.window, 1)?);
    let mut phis = Vec::new();
    let mut rho0 = Vec::new();
    let mut rho1 = Vec::new();
    for point in &dual.points {
        for s in &point.replicates {
            phis.push(point.phi_s);
            rho0.push(s.powers[d0]);
            rho1.push(s.powers[d1]);
        }
    }
    if dual.points.len() < 8 {
        return Err(Error::Degenerate("dual-line scan needs at least 8 phase settings".into()));
    }

    let rho0_fit = fit_sinusoid(&phis, &rho0)?;
    check_flat(&rho0_fit, "rho0 (output bin 0)")?;
    let phi_i = rho0_fit.phase;

    let shifted: Vec<f64> = phis.iter().map(|p| p + phi_i).collect();
    let rho1_fit = fit_sinusoid(&shifted, &rho1)?;
    check_flat(&rho1_fit, "rho1 (output bin 1)")?;
    let phi_11 = rho1_fit.phase.rem_euclid(TAU);

    // variance = (one quarter of the 95% confidence-interval width)²
    let ci_width = 2.0 * t_quantile_975(rho1_fit.dof) * rho1_fit.phase_std;
    covariance[4][4] = (ci_width / 4.0).powi(2);

    let estimate = GammaPhase {
        gamma: [[mean[0], mean[1]], [mean[2], mean[3]]],
        phi_11,
    };
    let fidelity = estimate.fidelity(target);
    let p_tilde = estimate.p_tilde();
    let fidelity_err = propagate(&estimate.fidelity_gradient(target), &covariance).sqrt();
    let p_tilde_err = propagate(&estimate.p_tilde_gradient(), &covariance).sqrt();

    Ok(Reconstruction {
        estimate,
        phi_i_fit: phi_i,
        covariance,
        fidelity,
        fidelity_err,
        p_tilde,
        p_tilde_err,
        rho0_fit,
        rho1_fit,
    })
}

/// Applies the phase-reference freedom at input and output so the first row
/// and column of `W` are real and non-negative.
pub fn gauge_fixed(w: &Array2<Complex64>) -> Array2<Complex64> {
    let (rows, cols) = w.dim();
    let arg = |z: Complex64| if z.norm() > 0.0 { z.arg() } else { 0.0 };
    let row_phase: Vec<f64> = (0..rows).map(|m| arg(w[[m, 0]])).collect();
    let col_phase: Vec<f64> = (0..cols).map(|n| arg(w[[0, n]]) - row_phase[0]).collect();
    Array2::from_shape_fn((rows, cols), |(m, n)| {
        w[[m, n]] * Complex64::from_polar(1.0, -row_phase[m] - col_phase[n])
    })
}

/// Noise-free `(γ, φ11)` implied by a transfer matrix.
pub fn ground_truth(v: &TransferMatrix) -> Result<GammaPhase> {
    require_two_inputs(v)?;
    let w = gauge_fixed(&crate::transfer::computational_submatrix(v)?);
    let eta = v.total_power() / 2.0;
    let s = eta.sqrt();
    Ok(GammaPhase {
        gamma: [[w[[0, 0]].norm() / s, w[[0, 1]].norm() / s], [w[[1, 0]].norm() / s, w[[1, 1]].norm() / s]],
        phi_11: w[[1, 1]].arg().rem_euclid(TAU),
    })
}

/// Geometry of the modulator phase-alignment probe.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentSetup {
    pub shaper: ShaperSpec,
    /// Side bin the CW laser is tuned to.
    pub probe_bin: i64,
    pub scan_points: usize,
}

impl Default for AlignmentSetup {
    fn default() -> Self {
        Self {
            shaper: ShaperSpec::step_phase(6, PI).expect("canonical shaper is valid"),
            probe_bin: -1,
            scan_points: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alignment {
    /// RF phase of the second modulator relative to the first, in `[0, 2π)`.
    pub phase: f64,
    pub residual: f64,
    pub degenerate: bool,
    /// `(phase, residual)` over the coarse scan.
    pub scan: Vec<(f64, f64)>,
}

/// Power leaving the probe bin when the second modulator is driven at
/// `phase` relative to the first.
pub fn sideband_residual(theta: f64, phase: f64, setup: &AlignmentSetup) -> Result<f64> {
    let first = ModulatorSpec::new(theta, DriveSign::Positive)?;
    let (m_min, out) =
        build_with_second_phase(&first, &setup.shaper, theta, phase, 1, setup.probe_bin, crate::specfun::DEFAULT_TAIL_TOL)?;
    Ok(out
        .column(0)
        .iter()
        .enumerate()
        .filter(|&(row, _)| m_min + row as i64 != setup.probe_bin)
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

pub fn align_out_of_phase(theta_small: f64, phase2_guess: f64) -> Result<Alignment> {
    align_out_of_phase_with(theta_small, phase2_guess, &AlignmentSetup::default())
}

/// Scans the second modulator's RF phase from `phase2_guess` around the
/// circle, then refines the best cell by golden section.
pub fn align_out_of_phase_with(theta: f64, phase2_guess: f64, setup: &AlignmentSetup) -> Result<Alignment> {
    if setup.scan_points < 8 {
        return Err(Error::Domain("alignment scan needs at least 8 points".into()));
    }
    let n = setup.scan_points;
    let scan = (0..n)
        .map(|j| {
            let psi = (phase2_guess + TAU * j as f64 / n as f64).rem_euclid(TAU);
            sideband_residual(theta, psi, setup).map(|r| (psi, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = scan
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, r)| (a.min(r), b.max(r)));
    if hi - lo <= 1e-15 * hi.max(1.0) {
        return Ok(Alignment {
            phase: phase2_guess.rem_euclid(TAU),
            residual: lo,
            degenerate: true,
            scan,
        });
    }
    let best = (0..n)
        .min_by(|&a, &b| scan[a].1.total_cmp(&scan[b].1))
        .expect("scan is non-empty");
    let step = TAU / n as f64;
    let centre = phase2_guess + TAU * best as f64 / n as f64;
    let (psi, neg, _) = crate::design::golden_section_max(
        |p| sideband_residual(theta, p, setup).map(|r| -r),
        centre - step,
        centre + step,
        1e-12,
        200,
    )?;
    Ok(Alignment {
        phase: psi.rem_euclid(TAU),
        residual: -neg,
        degenerate: false,
        scan,
    })
}
