//! JSON run configuration for the `qfp` command line tool.
//!
//! Every key has a default, unknown keys are rejected, and [`RunConfig::echo`]
//! writes the resolved configuration back out with all defaults filled in.
//! Angles may be given as numbers or as multiples of π: `"pi"`, `"-pi/2"`,
//! `"2pi/3"`, `"0.5*pi"`.

use std::f64::consts::PI;
use std::fmt;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::design::{Objective, SweepAxis, ALPHA_STEP, THETA_STEP};
use crate::error::{Error, Result};
use crate::probe::{uniform_phase_grid, NoiseModel, ProbeConfig};
use crate::specfun::DEFAULT_TAIL_TOL;
use crate::transfer::{build_transfer, DriveSign, GateParams, ModulatorSpec, ShaperSpec, TransferMatrix};

pub const SCHEMA_VERSION: u32 = 1;

/// Parses `"pi"`, `"3pi/4"`, `"-2*pi/3"`, or a plain decimal number.
pub fn parse_angle(text: &str) -> std::result::Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let bad = || format!("cannot read `{text}` as an angle");
    let Some(at) = s.find("pi").or_else(|| s.find('π')) else {
        return s.parse::<f64>().map_err(|_| bad());
    };
    let width = if s[at..].starts_with("pi") { 2 } else { 'π'.len_utf8() };
    let (head, tail) = (&s[..at], &s[at + width..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let factor = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let divisor = match tail {
        "" => 1.0,
        t => t
            .strip_prefix('/')
            .and_then(|d| d.parse::<f64>().ok())
            .filter(|d| *d != 0.0)
            .ok_or_else(bad)?,
    };
    let value = factor * PI / divisor;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// An angle in radians that deserializes from a number or a π expression.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Angle(pub f64);

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = Angle;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an expression such as \"pi/3\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<Angle, E> {
                Ok(Angle(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Angle, E> {
                parse_angle(v).map(Angle).map_err(E::custom)
            }
        }
        d.deserialize_any(Visitor)
    }
}

fn angles(values: &[Angle]) -> Vec<f64> {
    values.iter().map(|a| a.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceConfig {
    pub channels: usize,
    /// Step phase of the canonical shaper; ignored when `phases` is given.
    pub alpha: Angle,
    pub theta: f64,
    /// Second modulator index; defaults to `theta`.
    pub theta2: Option<f64>,
    /// Drive signs of the first and second modulator.
    pub signs: [i8; 2],
    /// Per-channel amplitudes, lowest channel first; defaults to all ones.
    pub amplitudes: Option<Vec<f64>>,
    /// Per-channel phases, lowest channel first; defaults to the step profile.
    pub phases: Option<Vec<Angle>>,
    pub bin_spacing_ghz: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            channels: GateParams::HADAMARD.channels,
            alpha: Angle(GateParams::HADAMARD.alpha),
            theta: GateParams::HADAMARD.theta,
            theta2: None,
            signs: [1, -1],
            amplitudes: None,
            phases: None,
            bin_spacing_ghz: 3.0,
        }
    }
}

impl DeviceConfig {
    fn resolve(&mut self) {
        self.theta2.get_or_insert(self.theta);
        let b = self.channels;
        self.amplitudes.get_or_insert_with(|| vec![1.0; b]);
        let alpha = self.alpha;
        self.phases
            .get_or_insert_with(|| (0..b).map(|i| if i < b / 2 { Angle(0.0) } else { alpha }).collect());
    }

    /// True when the device is the out-of-phase step-shaper family `(B, α, θ)`.
    pub fn is_canonical(&self) -> bool {
        let canonical = {
            let mut c = DeviceConfig {
                amplitudes: None,
                phases: None,
                theta2: None,
                ..self.clone()
            };
            c.resolve();
            c
        };
        self.signs == [1, -1]
            && self.theta2.is_none_or(|t| t == self.theta)
            && self.amplitudes.as_ref().is_none_or(|a| Some(a) == canonical.amplitudes.as_ref())
            && self.phases.as_ref().is_none_or(|p| Some(p) == canonical.phases.as_ref())
    }

    pub fn gate_params(&self) -> GateParams {
        GateParams::new(self.channels, self.alpha.0, self.theta)
    }

    pub fn shaper(&self) -> Result<ShaperSpec> {
        let b = self.channels;
        let amplitudes = self.amplitudes.clone().unwrap_or_else(|| vec![1.0; b]);
        let shaper = match &self.phases {
            Some(p) => ShaperSpec::new(b, amplitudes, angles(p))?,
            None => {
                let step = ShaperSpec::step_phase(b, self.alpha.0)?;
                ShaperSpec::new(b, amplitudes, step.phases().to_vec())?
            }
        };
        shaper.with_bin_spacing_ghz(self.bin_spacing_ghz)
    }

    pub fn transfer(&self, n_inputs: usize, tail_tol: f64) -> Result<TransferMatrix> {
        let first = ModulatorSpec::new(self.theta, DriveSign::from_i8(self.signs[0])?)?;
        let second = ModulatorSpec::new(self.theta2.unwrap_or(self.theta), DriveSign::from_i8(self.signs[1])?)?;
        build_transfer(&first, &self.shaper()?, &second, n_inputs, tail_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub tail_tol: f64,
    /// Computational bins `0 ..= N-1`; the target is the N-point DFT.
    pub n_inputs: usize,
    pub alpha_step: Angle,
    pub theta_step: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            tail_tol: DEFAULT_TAIL_TOL,
            n_inputs: 2,
            alpha_step: Angle(ALPHA_STEP),
            theta_step: THETA_STEP,
        }
    }
}

/// Either explicit axis values or an inclusive `start..=stop` range; a
/// missing `step` falls back to the numerics grid for that axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTask {
    pub axis: SweepAxis,
    #[serde(default)]
    pub values: Option<Vec<Angle>>,
    #[serde(default)]
    pub start: Option<Angle>,
    #[serde(default)]
    pub stop: Option<Angle>,
    #[serde(default)]
    pub step: Option<Angle>,
}

impl Default for SweepTask {
    fn default() -> Self {
        Self {
            axis: SweepAxis::Theta,
            values: None,
            start: Some(Angle(0.5)),
            stop: Some(Angle(1.0)),
            step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeTask {
    pub objective: Objective,
    pub bracket: [f64; 2],
    /// Also search α over `alpha_bracket`.
    pub joint: bool,
    pub alpha_bracket: [Angle; 2],
}

impl Default for OptimizeTask {
    fn default() -> Self {
        Self {
            objective: Objective::Fidelity,
            bracket: [0.5, 1.1],
            joint: false,
            alpha_bracket: [Angle(0.5 * PI), Angle(1.5 * PI)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TaskConfig {
    pub sweep: SweepTask,
    pub optimize: OptimizeTask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeBlock {
    pub replicates: usize,
    pub loss: f64,
    pub noise: NoiseModel,
    pub phase_points: usize,
    /// Explicit `φ_s` settings; overrides `phase_points`.
    pub phase_grid: Option<Vec<Angle>>,
    pub phi_i: Angle,
    pub seed: u64,
    /// Include the simulated spectra in the report.
    pub include_dataset: bool,
}

impl Default for ProbeBlock {
    fn default() -> Self {
        let d = ProbeConfig::default();
        Self {
            replicates: d.replicates,
            loss: d.loss,
            noise: d.noise,
            phase_points: d.phase_grid.len(),
            phase_grid: None,
            phi_i: Angle(d.phi_i),
            seed: d.seed,
            include_dataset: true,
        }
    }
}

impl ProbeBlock {
    pub fn probe_config(&self) -> Result<ProbeConfig> {
        let cfg = ProbeConfig {
            replicates: self.replicates,
            loss: self.loss,
            noise: self.noise,
            phase_grid: match &self.phase_grid {
                Some(g) => angles(g),
                None => uniform_phase_grid(self.phase_points),
            },
            phi_i: self.phi_i.0,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub format: OutputFormat,
    pub path: Option<String>,
    /// Decimal places of reported metrics.
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            format: OutputFormat::Json,
            path: None,
            precision: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub device: DeviceConfig,
    pub task: TaskConfig,
    pub numerics: NumericsConfig,
    pub probe: ProbeBlock,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            device: DeviceConfig::default(),
            task: TaskConfig::default(),
            numerics: NumericsConfig::default(),
            probe: ProbeBlock::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "$".to_string() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let d = &self.device;
        if d.channels < 2 || d.channels % 2 != 0 {
            return Err(Error::config("device.channels", format!("must be even and >= 2, got {}", d.channels)));
        }
        if let Some(a) = &d.amplitudes {
            if a.len() != d.channels {
                return Err(Error::config("device.amplitudes", format!("expected {} entries", d.channels)));
            }
        }
        if let Some(p) = &d.phases {
            if p.len() != d.channels {
                return Err(Error::config("device.phases", format!("expected {} entries", d.channels)));
            }
        }
        if d.signs.iter().any(|s| s.abs() != 1) {
            return Err(Error::config("device.signs", "each sign must be 1 or -1"));
        }
        if !(d.theta >= 0.0) || d.theta2.is_some_and(|t| !(t >= 0.0)) {
            return Err(Error::config("device.theta", "modulation indices must be non-negative"));
        }
        if !(self.numerics.tail_tol > 0.0) {
            return Err(Error::config("numerics.tail_tol", "must be positive"));
        }
        if self.numerics.n_inputs == 0 {
            return Err(Error::config("numerics.n_inputs", "must be at least 1"));
        }
        if !(self.numerics.theta_step > 0.0) || !(self.numerics.alpha_step.0 > 0.0) {
            return Err(Error::config("numerics", "grid steps must be positive"));
        }
        if self.output.precision > 17 {
            return Err(Error::config("output.precision", "at most 17 decimal places"));
        }
        self.probe.probe_config()?;
        Ok(())
    }

    /// Resolved configuration with every default written out.
    pub fn echo(&self) -> RunConfig {
        let mut c = self.clone();
        c.device.resolve();
        if c.task.sweep.values.is_none() && c.task.sweep.step.is_none() {
            c.task.sweep.step = Some(Angle(self.default_step(c.task.sweep.axis)));
        }
        if c.probe.phase_grid.is_none() {
            c.probe.phase_grid = Some(uniform_phase_grid(c.probe.phase_points).into_iter().map(Angle).collect());
        }
        c
    }

    /// Target unitary for metrics: the N-point DFT (Hadamard for N = 2).
    pub fn target(&self) -> Array2<Complex64> {
        crate::design::dft_target(self.numerics.n_inputs)
    }

    fn default_step(&self, axis: SweepAxis) -> f64 {
        match axis {
            SweepAxis::Channels => 2.0,
            SweepAxis::Alpha => self.numerics.alpha_step.0,
            SweepAxis::Theta => self.numerics.theta_step,
        }
    }

    /// Sweep axis values resolved from the task and numerics blocks.
    pub fn sweep_values(&self) -> Result<Vec<f64>> {
        let t = &self.task.sweep;
        let values = match (&t.values, t.start, t.stop) {
            (Some(v), _, _) => angles(v),
            (None, Some(start), Some(stop)) => {
                let step = t.step.map(|s| s.0).unwrap_or(self.default_step(t.axis));
                crate::design::stepped(start.0, stop.0, step)
                    .map_err(|e| Error::config("task.sweep", e.to_string()))?
            }
            _ => return Err(Error::config("task.sweep", "give either `values` or both `start` and `stop`")),
        };
        if values.is_empty() {
            return Err(Error::config("task.sweep", "sweep axis is empty"));
        }
        Ok(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_expressions() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("-pi").unwrap(), -PI);
        assert_eq!(parse_angle("pi/3").unwrap(), PI / 3.0);
        assert_eq!(parse_angle("2pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle(" 2 * PI / 3 ").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle("0.5pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_angle("π/2").unwrap(), PI / 2.0);
        assert_eq!(parse_angle("1.25").unwrap(), 1.25);
        for bad in ["pie", "pi/0", "x", "pi/", "2pi3", ""] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert!(cfg.device.is_canonical());
    }

    #[test]
    fn unknown_keys_report_their_path() {
        match RunConfig::from_json(r#"{"device": {"chanels": 4}}"#) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "device.chanels"),
            other => panic!("{other:?}"),
        }
        match RunConfig::from_json(r#"{"device": {"alpha": "tau"}}"#) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "device.alpha"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_paths() {
        let err = |json: &str| match RunConfig::from_json(json) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("{json}: {other:?}"),
        };
        assert_eq!(err(r#"{"device": {"channels": 5}}"#), "device.channels");
        assert_eq!(err(r#"{"schema_version": 2}"#), "schema_version");
        assert_eq!(err(r#"{"probe": {"replicates": 1}}"#), "probe.replicates");
        assert_eq!(err(r#"{"device": {"signs": [1, 0]}}"#), "device.signs");
    }

    #[test]
    fn echo_reparses_to_an_equivalent_config() {
        let cfg = RunConfig::from_json(r#"{"device": {"alpha": "pi/2", "channels": 4}}"#).unwrap();
        let echo = cfg.echo();
        assert_eq!(echo.device.theta2, Some(cfg.device.theta));
        assert_eq!(echo.device.phases.as_ref().unwrap().len(), 4);
        let text = serde_json::to_string(&echo).unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, echo);
        assert!(back.device.is_canonical());
        let v1 = cfg.device.transfer(2, 1e-16).unwrap();
        let v2 = back.device.transfer(2, 1e-16).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn custom_shaper_is_not_canonical() {
        let cfg = RunConfig::from_json(r#"{"device": {"channels": 2, "phases": [0, 1]}}"#).unwrap();
        assert!(!cfg.device.is_canonical());
        let cfg = RunConfig::from_json(r#"{"device": {"theta2": 0.5}}"#).unwrap();
        assert!(!cfg.device.is_canonical());
    }

    #[test]
    fn sweep_values_from_range() {
        let cfg = RunConfig::from_json(r#"{"task": {"sweep": {"axis": "theta", "start": 0.5, "stop": 1.0, "step": 0.01}}}"#)
            .unwrap();
        assert_eq!(cfg.sweep_values().unwrap().len(), 51);
        let cfg = RunConfig::from_json(r#"{"task": {"sweep": {"axis": "alpha", "values": []}}}"#).unwrap();
        assert!(cfg.sweep_values().is_err());
    }
}
