//! Discrete frequency-bin transfer matrix of a modulator / shaper / modulator
//! cascade.
//!
//! Each phase modulator is a Toeplitz mode-hopping operator with Bessel
//! coefficients; the shaper is diagonal in frequency. The cascade element is
//!
//! ```text
//! V[m][n] = Σ_k d_{m-k} T_k c_{k-n}
//! ```
//!
//! with `k` running over the shaper channels only (out-of-band transmission
//! is zero).

use ndarray::{s, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{self, BesselRow, DEFAULT_TAIL_TOL};

/// Parity of the RF drive applied to a phase modulator.
///
/// Under the `e^{-iωt}` field convention a drive `e^{+iθ sin Δωt}` hops bin
/// `n` to bin `n + ℓ` with amplitude `J_{-ℓ}(θ)`; the opposite parity hops
/// with `J_ℓ(θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveSign {
    Positive,
    Negative,
}

impl DriveSign {
    pub fn from_i8(sign: i8) -> Result<Self> {
        match sign {
            1 => Ok(DriveSign::Positive),
            -1 => Ok(DriveSign::Negative),
            other => Err(Error::Specification(format!("drive sign must be +1 or -1, got {other}"))),
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            DriveSign::Positive => 1,
            DriveSign::Negative => -1,
        }
    }

    /// Equivalent RF phase offset of the drive.
    pub fn drive_phase(self) -> f64 {
        match self {
            DriveSign::Positive => 0.0,
            DriveSign::Negative => std::f64::consts::PI,
        }
    }
}

/// Sinusoidally driven phase modulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulatorSpec {
    pub theta: f64,
    pub sign: DriveSign,
}

impl ModulatorSpec {
    pub fn new(theta: f64, sign: DriveSign) -> Result<Self> {
        if !theta.is_finite() || theta < 0.0 {
            return Err(Error::Domain(format!(
                "modulation index must be finite and non-negative, got {theta}"
            )));
        }
        if theta > specfun::THETA_ENVELOPE {
            return Err(Error::Domain(format!(
                "modulation index {theta} exceeds the envelope {}",
                specfun::THETA_ENVELOPE
            )));
        }
        Ok(Self { theta, sign })
    }

    /// Mode-hopping coefficients over `[-k, k]`.
    pub(crate) fn coefficients(&self, k: usize) -> Result<HopCoefficients> {
        let row = BesselRow::new(self.theta, k)?;
        let flip = self.sign == DriveSign::Positive;
        let values = row
            .orders()
            .map(|l| {
                let j = row.get(l);
                let v = if flip && l.rem_euclid(2) == 1 { -j } else { j };
                Complex64::new(v, 0.0)
            })
            .collect();
        Ok(HopCoefficients { k, values })
    }
}

/// Mode-hopping coefficients of one modulator, indexed by hop `ℓ ∈ [-k, k]`.
#[derive(Debug, Clone)]
pub(crate) struct HopCoefficients {
    k: usize,
    values: Vec<Complex64>,
}

impl HopCoefficients {
    /// Coefficients for an arbitrary RF drive phase `psi`:
    /// `(-1)^ℓ J_ℓ(θ) e^{-iℓψ}`.
    pub(crate) fn with_drive_phase(theta: f64, psi: f64, k: usize) -> Result<Self> {
        let row = BesselRow::new(theta, k)?;
        let values = row
            .orders()
            .map(|l| {
                let sign = if l.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
                Complex64::from_polar(sign * row.get(l), -(l as f64) * psi)
            })
            .collect();
        Ok(Self { k, values })
    }

    fn get(&self, l: i64) -> Complex64 {
        let k = self.k as i64;
        if l < -k || l > k {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(l + k) as usize]
        }
    }
}

/// Line-by-line spectral filter with `B` contiguous channels
/// `k ∈ [-B/2 + 1, B/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShaperSpec {
    channel_count: usize,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
    bin_spacing_ghz: f64,
}

impl ShaperSpec {
    pub fn new(channel_count: usize, amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if channel_count < 2 || channel_count % 2 != 0 {
            return Err(Error::Specification(format!(
                "channel count must be even and >= 2, got {channel_count}"
            )));
        }
        if amplitudes.len() != channel_count || phases.len() != channel_count {
            return Err(Error::Specification(format!(
                "expected {channel_count} amplitudes and phases, got {} and {}",
                amplitudes.len(),
                phases.len()
            )));
        }
        if let Some(a) = amplitudes.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Specification(format!("channel amplitude {a} is outside [0, 1]")));
        }
        if let Some(p) = phases.iter().find(|p| !p.is_finite()) {
            return Err(Error::Specification(format!("channel phase {p} is not finite")));
        }
        Ok(Self {
            channel_count,
            amplitudes,
            phases,
            bin_spacing_ghz: 3.0,
        })
    }

    /// Unit amplitudes, phase 0 on `k ≤ 0` and `alpha` on `k ≥ 1`.
    pub fn step_phase(channel_count: usize, alpha: f64) -> Result<Self> {
        let half = channel_count / 2;
        let phases = (0..channel_count)
            .map(|i| if i < half { 0.0 } else { alpha })
            .collect();
        Self::new(channel_count, vec![1.0; channel_count], phases)
    }

    pub fn with_bin_spacing_ghz(mut self, ghz: f64) -> Result<Self> {
        if !(ghz > 0.0) || !ghz.is_finite() {
            return Err(Error::Specification(format!("bin spacing must be positive, got {ghz}")));
        }
        self.bin_spacing_ghz = ghz;
        Ok(self)
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    pub fn lowest_channel(&self) -> i64 {
        1 - (self.channel_count / 2) as i64
    }

    pub fn highest_channel(&self) -> i64 {
        (self.channel_count / 2) as i64
    }

    pub fn channel_indices(&self) -> std::ops::RangeInclusive<i64> {
        self.lowest_channel()..=self.highest_channel()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn bin_spacing_ghz(&self) -> f64 {
        self.bin_spacing_ghz
    }

    pub fn is_all_pass(&self) -> bool {
        self.amplitudes.iter().all(|&a| a == 1.0)
    }

    /// Complex transmission `T_k`; zero out of band.
    pub fn transmission(&self, k: i64) -> Complex64 {
        if k < self.lowest_channel() || k > self.highest_channel() {
            return Complex64::new(0.0, 0.0);
        }
        let i = (k - self.lowest_channel()) as usize;
        Complex64::from_polar(self.amplitudes[i], self.phases[i])
    }
}

/// Transfer matrix restricted to `N` computational inputs, over an explicit
/// output window `[m_min, m_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    n_inputs: usize,
    m_min: i64,
    m_max: i64,
    entries: Array2<Complex64>,
    tail_tol: f64,
}

impl TransferMatrix {
    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn output_window(&self) -> (i64, i64) {
        (self.m_min, self.m_max)
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// Rows are output bins `m_min..=m_max`, columns inputs `0..N`.
    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn output_bins(&self) -> std::ops::RangeInclusive<i64> {
        self.m_min..=self.m_max
    }

    /// `V[m][n]`; zero outside the window or input range.
    pub fn entry(&self, m: i64, n: usize) -> Complex64 {
        if m < self.m_min || m > self.m_max || n >= self.n_inputs {
            return Complex64::new(0.0, 0.0);
        }
        self.entries[[(m - self.m_min) as usize, n]]
    }

    /// `Σ_m |V[m][n]|²`.
    pub fn column_mass(&self, n: usize) -> f64 {
        self.entries.column(n).iter().map(|v| v.norm_sqr()).sum()
    }

    /// `Tr V†V`.
    pub fn total_power(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Output amplitudes for an arbitrary input vector over the computational
    /// bins.
    pub fn apply(&self, input: &[Complex64]) -> Result<Vec<Complex64>> {
        if input.len() != self.n_inputs {
            return Err(Error::Dimension(format!(
                "input has {} amplitudes, transfer matrix has {} inputs",
                input.len(),
                self.n_inputs
            )));
        }
        Ok(self
            .entries
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(input).map(|(v, a)| v * a).sum())
            .collect())
    }
}

/// Composes `d · T · c` over an explicit window. `c` and `d` are the first and
/// second modulator's hop coefficients.
pub(crate) fn compose(
    first: &HopCoefficients,
    shaper: &ShaperSpec,
    second: &HopCoefficients,
    n_inputs: usize,
    m_min: i64,
    m_max: i64,
) -> Array2<Complex64> {
    let rows = (m_max - m_min + 1) as usize;
    let mut out = Array2::zeros((rows, n_inputs));
    let channels: Vec<(i64, Complex64)> = shaper
        .channel_indices()
        .map(|k| (k, shaper.transmission(k)))
        .filter(|(_, t)| t.norm_sqr() > 0.0)
        .collect();
    for n in 0..n_inputs {
        let n_i = n as i64;
        for (row, m) in (m_min..=m_max).enumerate() {
            out[[row, n]] = channels
                .iter()
                .map(|&(k, t)| second.get(m - k) * t * first.get(k - n_i))
                .sum();
        }
    }
    out
}

fn check_inputs(n_inputs: usize, tail_tol: f64) -> Result<()> {
    if n_inputs == 0 {
        return Err(Error::Specification("n_inputs must be at least 1".into()));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::Domain(format!("tail_tol must be positive, got {tail_tol}")));
    }
    Ok(())
}

/// Builds the cascade transfer matrix. The output window is
/// `[-K - B/2, K + B/2 + N]` with `K = truncation_order(max θ, tail_tol)`.
pub fn build_transfer(
    first: &ModulatorSpec,
    shaper: &ShaperSpec,
    second: &ModulatorSpec,
    n_inputs: usize,
    tail_tol: f64,
) -> Result<TransferMatrix> {
    check_inputs(n_inputs, tail_tol)?;
    let k = specfun::truncation_order(first.theta.max(second.theta), tail_tol)?;
    // coefficients cover every hop that lands inside the window, so entries
    // are exact there and only the out-of-window tail is dropped
    let reach = k + shaper.channel_count() + n_inputs;
    let c = first.coefficients(reach)?;
    let d = second.coefficients(reach)?;
    let half = (shaper.channel_count() / 2) as i64;
    let m_min = -(k as i64) - half;
    let m_max = k as i64 + half + n_inputs as i64;
    let entries = compose(&c, shaper, &d, n_inputs, m_min, m_max);
    Ok(TransferMatrix {
        n_inputs,
        m_min,
        m_max,
        entries,
        tail_tol,
    })
}

/// Same cascade with an arbitrary RF phase on the second modulator. The first
/// modulator keeps its own drive sign.
pub(crate) fn build_with_second_phase(
    first: &ModulatorSpec,
    shaper: &ShaperSpec,
    second_theta: f64,
    second_phase: f64,
    n_inputs: usize,
    input_offset: i64,
    tail_tol: f64,
) -> Result<(i64, Array2<Complex64>)> {
    check_inputs(n_inputs, tail_tol)?;
    let k = specfun::truncation_order(first.theta.max(second_theta), tail_tol)?;
    let reach = k + shaper.channel_count() + n_inputs + 2 * input_offset.unsigned_abs() as usize;
    let c = first.coefficients(reach)?;
    let d = HopCoefficients::with_drive_phase(second_theta, second_phase, reach)?;
    // shift the input bins by `input_offset` by shifting the shaper frame
    let half = (shaper.channel_count() / 2) as i64;
    let m_min = -(k as i64) - half - input_offset.abs();
    let m_max = k as i64 + half + n_inputs as i64 + input_offset.abs();
    let rows = (m_max - m_min + 1) as usize;
    let mut out = Array2::zeros((rows, n_inputs));
    for n in 0..n_inputs {
        let n_i = n as i64 + input_offset;
        for (row, m) in (m_min..=m_max).enumerate() {
            out[[row, n]] = shaper
                .channel_indices()
                .map(|ch| d.get(m - ch) * shaper.transmission(ch) * c.get(ch - n_i))
                .sum();
        }
    }
    Ok((m_min, out))
}

/// Rows `m ∈ [0, N-1]` of `V`: the computational-basis block `W`.
pub fn computational_submatrix(v: &TransferMatrix) -> Result<Array2<Complex64>> {
    let n = v.n_inputs as i64;
    if v.m_min > 0 || v.m_max < n - 1 {
        return Err(Error::Dimension(format!(
            "output window [{}, {}] does not contain the computational bins [0, {}]",
            v.m_min,
            v.m_max,
            n - 1
        )));
    }
    let start = (-v.m_min) as usize;
    Ok(v.entries.slice(s![start..start + v.n_inputs, ..]).to_owned())
}

/// Closed-form element of the canonical step-phase beamsplitter:
///
/// `V_mn = Σ_{k=1}^{B/2} [J_{m+k-1}(θ) J_{n+k-1}(θ) + e^{iα} J_{m-k}(θ) J_{n-k}(θ)]`.
pub fn eq2_transfer(
    channels: usize,
    alpha: f64,
    theta: f64,
    n_inputs: usize,
    m: i64,
    n: usize,
) -> Result<Complex64> {
    if channels < 2 || channels % 2 != 0 {
        return Err(Error::Specification(format!(
            "channel count must be even and >= 2, got {channels}"
        )));
    }
    if n >= n_inputs {
        return Err(Error::Dimension(format!("input bin {n} outside [0, {}]", n_inputs as i64 - 1)));
    }
    let half = (channels / 2) as i64;
    let n = n as i64;
    let reach = m.abs().max(n) + half + 1;
    let row = BesselRow::new(theta, reach as usize)?;
    let (mut low, mut high) = (0.0, 0.0);
    for k in 1..=half {
        low += row.get(m + k - 1) * row.get(n + k - 1);
        high += row.get(m - k) * row.get(n - k);
    }
    Ok(Complex64::new(low, 0.0) + Complex64::from_polar(high, alpha))
}

/// Canonical out-of-phase beamsplitter `(B, α, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub channels: usize,
    pub alpha: f64,
    pub theta: f64,
}

impl GateParams {
    pub const HADAMARD: GateParams = GateParams {
        channels: 6,
        alpha: std::f64::consts::PI,
        theta: 0.8283,
    };

    pub fn new(channels: usize, alpha: f64, theta: f64) -> Self {
        Self {
            channels,
            alpha,
            theta,
        }
    }

    pub fn shaper(&self) -> Result<ShaperSpec> {
        ShaperSpec::step_phase(self.channels, self.alpha)
    }

    pub fn modulators(&self) -> Result<(ModulatorSpec, ModulatorSpec)> {
        Ok((
            ModulatorSpec::new(self.theta, DriveSign::Positive)?,
            ModulatorSpec::new(self.theta, DriveSign::Negative)?,
        ))
    }

    pub fn transfer(&self, n_inputs: usize) -> Result<TransferMatrix> {
        self.transfer_with_tol(n_inputs, DEFAULT_TAIL_TOL)
    }

    pub fn transfer_with_tol(&self, n_inputs: usize, tail_tol: f64) -> Result<TransferMatrix> {
        let (first, second) = self.modulators()?;
        build_transfer(&first, &self.shaper()?, &second, n_inputs, tail_tol)
    }
}
