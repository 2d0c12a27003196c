//! The `qfp` command line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric or degenerate
//! failure.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use ndarray::Array2;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{OutputFormat, RunConfig, SCHEMA_VERSION};
use crate::design::{self, SweepAxis, SweepResult};
use crate::error::{Error, Result};
use crate::metrics::{fidelity, hadamard, splitter_ratios, GateMetrics, SplitterRatios};
use crate::probe;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qfp", version, about = "Electro-optic frequency-bin gate simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Overrides `probe.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps and simulation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Gate metrics and splitting ratios of the configured device.
    Metrics,
    /// Sweep one of B, alpha, theta for the canonical device.
    Sweep,
    /// Optimise theta (or alpha and theta) for the Hadamard target.
    Optimize,
    /// Simulate coherent-state probing and reconstruct the gate.
    Probe,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

/// Loads the configuration and applies command-line overrides.
pub fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    if let Some(seed) = cli.seed {
        cfg.probe.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.path = Some(out.display().to_string());
    }
    Ok(cfg)
}

/// Runs one subcommand and returns the report text.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<String> {
    let fmt = Fmt(cfg.output.precision);
    match (command, cfg.output.format) {
        (Command::Metrics, f) => cmd_metrics(cfg, fmt, f),
        (Command::Sweep, f) => cmd_sweep(cfg, fmt, f),
        (Command::Optimize, OutputFormat::Json) => cmd_optimize(cfg, fmt),
        (Command::Probe, OutputFormat::Json) => cmd_probe(cfg, fmt),
        (_, OutputFormat::Csv) => Err(Error::config(
            "output.format",
            "csv output is available for `metrics` and `sweep` only",
        )),
    }
}

/// Fixed-decimal reporting. Values are cut toward zero rather than rounded,
/// so a fidelity of 0.9999999 reads 0.999999 and never 1.
#[derive(Debug, Clone, Copy)]
struct Fmt(usize);

impl Fmt {
    fn round(self, x: f64) -> f64 {
        if !x.is_finite() {
            return x;
        }
        let scale = 10f64.powi(self.0 as i32);
        let y = x * scale;
        // values already on the decimal grid up to representation error stay put
        let cut = if (y - y.round()).abs() < 1e-6 { y.round() } else { y.trunc() };
        let r: f64 = format!("{:.*}", self.0, cut / scale).parse().unwrap_or(x);
        if r == 0.0 {
            0.0
        } else {
            r
        }
    }

    fn text(self, x: f64) -> String {
        format!("{:.*}", self.0, self.round(x))
    }

    /// Significant-digit rounding, for uncertainties far below the decimal grid.
    fn sig(self, x: f64) -> f64 {
        if x == 0.0 || !x.is_finite() {
            return x;
        }
        format!("{:.*e}", self.0.max(1) - 1, x).parse().unwrap_or(x)
    }

    fn complex_matrix(self, w: &Array2<Complex64>) -> Value {
        Value::Array(
            w.rows()
                .into_iter()
                .map(|row| row.iter().map(|z| json!([self.round(z.re), self.round(z.im)])).collect())
                .collect(),
        )
    }

    fn ratios(self, r: &SplitterRatios) -> Value {
        json!({
            "R_01": self.round(r.r_01),
            "R_10": self.round(r.r_10),
            "T_00": self.round(r.t_00),
            "T_11": self.round(r.t_11),
        })
    }
}

fn envelope(command: &str, cfg: &RunConfig, body: Value) -> Result<String> {
    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg.echo(),
    });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Domain(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn cmd_metrics(cfg: &RunConfig, fmt: Fmt, format: OutputFormat) -> Result<String> {
    let n = cfg.numerics.n_inputs;
    let v = cfg.device.transfer(n, cfg.numerics.tail_tol)?;
    let m = GateMetrics::evaluate(&v, &cfg.target())?;
    let ratios = if n == 2 { Some(m.ratios()?) } else { None };
    match format {
        OutputFormat::Json => envelope(
            "metrics",
            cfg,
            json!({
                "metrics": {
                    "fidelity": fmt.round(m.fidelity),
                    "p": fmt.round(m.p),
                    "p_tilde": fmt.round(m.p_tilde),
                    "eta": fmt.round(m.eta),
                },
                "ratios": ratios.map(|r| fmt.ratios(&r)),
                "output_window": v.output_window(),
                "w": fmt.complex_matrix(&m.w),
            }),
        ),
        OutputFormat::Csv => {
            let mut out = String::from("F,P,P_tilde,eta,R_01,R_10,T_00,T_11\n");
            write_row(&mut out, fmt, None, &m, ratios.as_ref());
            Ok(out)
        }
    }
}

fn write_row(out: &mut String, fmt: Fmt, axis: Option<String>, m: &GateMetrics, r: Option<&SplitterRatios>) {
    let mut cells: Vec<String> = axis.into_iter().collect();
    cells.extend([m.fidelity, m.p, m.p_tilde, m.eta].map(|x| fmt.text(x)));
    match r {
        Some(r) => cells.extend([r.r_01, r.r_10, r.t_00, r.t_11].map(|x| fmt.text(x))),
        None => cells.extend(std::iter::repeat_n(String::new(), 4)),
    }
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn require_canonical(cfg: &RunConfig, what: &str) -> Result<()> {
    if !cfg.device.is_canonical() {
        return Err(Error::config(
            "device",
            format!("{what} is defined for the canonical out-of-phase step-shaper device only"),
        ));
    }
    Ok(())
}

fn run_sweep(cfg: &RunConfig) -> Result<SweepResult> {
    require_canonical(cfg, "sweep")?;
    let values = cfg.sweep_values()?;
    let p = cfg.device.gate_params();
    let n = cfg.numerics.n_inputs;
    match cfg.task.sweep.axis {
        SweepAxis::Channels => {
            let channels = values
                .iter()
                .map(|&b| {
                    if b.fract() == 0.0 && b >= 2.0 && (b as usize) % 2 == 0 {
                        Ok(b as usize)
                    } else {
                        Err(Error::config("task.sweep", format!("channel count {b} is not an even integer >= 2")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            design::sweep_channels(p.alpha, p.theta, &channels, n)
        }
        SweepAxis::Alpha => design::sweep_alpha(p.channels, p.theta, &values, n),
        SweepAxis::Theta => design::sweep_theta(p.channels, p.alpha, &values, n),
    }
}

fn cmd_sweep(cfg: &RunConfig, fmt: Fmt, format: OutputFormat) -> Result<String> {
    let sweep = run_sweep(cfg)?;
    let axis = sweep.axis;
    let axis_text = |x: f64| match axis {
        SweepAxis::Channels => format!("{x:.0}"),
        _ => fmt.text(x),
    };
    match format {
        OutputFormat::Csv => {
            let f = sweep.fixed;
            let mut out = String::new();
            let mut fixed = Vec::new();
            if let Some(b) = f.channels {
                fixed.push(format!("B={b}"));
            }
            if let Some(a) = f.alpha {
                fixed.push(format!("alpha={}", fmt.text(a)));
            }
            if let Some(t) = f.theta {
                fixed.push(format!("theta={}", fmt.text(t)));
            }
            fixed.push(format!("N={}", f.n_inputs));
            let _ = writeln!(out, "# {}", fixed.join(","));
            let _ = writeln!(out, "{},F,P,P_tilde,eta,R_01,R_10,T_00,T_11", axis.name());
            for p in &sweep.points {
                write_row(&mut out, fmt, Some(axis_text(p.axis_value)), &p.metrics, p.ratios.as_ref());
            }
            Ok(out)
        }
        OutputFormat::Json => {
            let rows: Vec<Value> = sweep
                .points
                .iter()
                .map(|p| {
                    let m = &p.metrics;
                    json!({
                        "value": if axis == SweepAxis::Channels { json!(p.axis_value as u64) } else { json!(fmt.round(p.axis_value)) },
                        "fidelity": fmt.round(m.fidelity),
                        "p": fmt.round(m.p),
                        "p_tilde": fmt.round(m.p_tilde),
                        "eta": fmt.round(m.eta),
                        "ratios": p.ratios.map(|r| fmt.ratios(&r)),
                    })
                })
                .collect();
            let crossovers: Vec<f64> = if axis == SweepAxis::Channels {
                Vec::new()
            } else {
                sweep.crossovers().into_iter().map(|x| fmt.round(x)).collect()
            };
            envelope(
                "sweep",
                cfg,
                json!({
                    "axis": axis.name(),
                    "fixed": sweep.fixed,
                    "rows": rows,
                    "crossovers": crossovers,
                }),
            )
        }
    }
}

fn metrics_summary(fmt: Fmt, m: &design::MetricsSummary) -> Value {
    json!({
        "fidelity": fmt.round(m.fidelity),
        "p": fmt.round(m.p),
        "p_tilde": fmt.round(m.p_tilde),
        "eta": fmt.round(m.eta),
        "ratios": fmt.ratios(&m.ratios),
    })
}

fn cmd_optimize(cfg: &RunConfig, fmt: Fmt) -> Result<String> {
    require_canonical(cfg, "optimize")?;
    if cfg.numerics.n_inputs != 2 {
        return Err(Error::config("numerics.n_inputs", "optimisation targets the 2x2 Hadamard"));
    }
    let t = &cfg.task.optimize;
    let p = cfg.device.gate_params();
    let bracket = (t.bracket[0], t.bracket[1]);
    if t.joint {
        let j = design::optimize_joint(p.channels, (t.alpha_bracket[0].0, t.alpha_bracket[1].0), bracket, t.objective)?;
        return envelope(
            "optimize",
            cfg,
            json!({
                "mode": "joint",
                "objective": j.objective,
                "channels": j.channels,
                "alpha": fmt.round(j.alpha),
                "theta": fmt.round(j.theta),
                "value": fmt.round(j.value),
                "metrics": metrics_summary(fmt, &j.metrics),
                "rounds": j.rounds,
            }),
        );
    }
    let r = design::optimize_theta(p.channels, p.alpha, bracket, t.objective)?;
    envelope(
        "optimize",
        cfg,
        json!({
            "mode": "theta",
            "objective": r.objective,
            "channels": r.channels,
            "alpha": fmt.round(r.alpha),
            "bracket": r.bracket,
            "theta": fmt.round(r.theta),
            "value": fmt.round(r.value),
            "flat_objective": r.flat_objective,
            "metrics": metrics_summary(fmt, &r.metrics),
            "grid_check": {
                "step": r.grid_check.step,
                "lo": r.grid_check.lo,
                "hi": r.grid_check.hi,
                "best_theta": fmt.round(r.grid_check.best_theta),
                "best_value": fmt.round(r.grid_check.best_value),
                "excess": fmt.sig(r.grid_check.excess),
            },
            "trace": {
                "coarse_scan": r.coarse_scan,
                "golden_iterations": r.golden.iterations,
                "golden_brackets": r.golden.brackets,
            },
        }),
    )
}

fn cmd_probe(cfg: &RunConfig, fmt: Fmt) -> Result<String> {
    if cfg.numerics.n_inputs != 2 {
        return Err(Error::config("numerics.n_inputs", "probing models a 2x2 gate"));
    }
    let pc = cfg.probe.probe_config()?;
    let v = cfg.device.transfer(2, cfg.numerics.tail_tol)?;
    let ds = probe::simulate(&v, &pc)?;
    let r = probe::reconstruct_against(&ds, &hadamard())?;

    let w = crate::transfer::computational_submatrix(&v)?;
    let truth = probe::ground_truth(&v)?;
    let direct = GateMetrics::evaluate(&v, &hadamard())?;
    let direct_f = fidelity(&probe::gauge_fixed(&w), &hadamard())?;
    let g = r.gamma();
    let fit = |f: &probe::SinusoidFit| {
        json!({
            "offset": fmt.round(f.offset),
            "amplitude": fmt.round(f.amplitude),
            "phase": fmt.round(f.phase),
            "phase_std": fmt.sig(f.phase_std),
            "dof": f.dof,
        })
    };
    let mut body = json!({
        "reconstruction": {
            "gamma": g.map(|row| row.map(|x| fmt.round(x))),
            "phi_11": fmt.round(r.phi_11()),
            "phi_i_fit": fmt.round(r.phi_i_fit),
            "fidelity": fmt.round(r.fidelity),
            "fidelity_err": fmt.sig(r.fidelity_err),
            "p_tilde": fmt.round(r.p_tilde),
            "p_tilde_err": fmt.sig(r.p_tilde_err),
            "covariance": r.covariance.map(|row| row.map(|x| fmt.sig(x))),
            "fits": { "rho0": fit(&r.rho0_fit), "rho1": fit(&r.rho1_fit) },
        },
        "direct": {
            "fidelity": fmt.round(direct_f),
            "p_tilde": fmt.round(direct.p_tilde),
            "gamma": truth.gamma.map(|row| row.map(|x| fmt.round(x))),
            "phi_11": fmt.round(truth.phi_11),
            "ratios": fmt.ratios(&splitter_ratios(&w)?),
        },
    });
    if cfg.probe.include_dataset {
        body["dataset"] = serde_json::to_value(&ds).map_err(|e| Error::Domain(e.to_string()))?;
    }
    envelope("probe", cfg, body)
}
