//! Gate fidelity, success probabilities and splitting ratios.

use ndarray::{array, Array2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::transfer::{computational_submatrix, GateParams, TransferMatrix};

const UNITARY_TOL: f64 = 1e-12;

/// `H = (1/√2) [[1, 1], [1, -1]]`, with no phase freedom.
pub fn hadamard() -> Array2<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    array![
        [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
        [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)]
    ]
}

/// `Tr A†B`.
pub fn trace_inner(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `Tr W†W`.
pub fn frobenius_sq(w: &Array2<Complex64>) -> f64 {
    w.iter().map(|v| v.norm_sqr()).sum()
}

fn check_unitary(u: &Array2<Complex64>) -> Result<()> {
    let (r, c) = u.dim();
    if r != c {
        return Err(Error::Dimension(format!("target must be square, got {r}x{c}")));
    }
    for i in 0..r {
        for j in 0..r {
            let dot: Complex64 = (0..r).map(|k| u[[k, i]].conj() * u[[k, j]]).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            if (dot - expect).norm() > UNITARY_TOL {
                return Err(Error::Domain("target matrix is not unitary".into()));
            }
        }
    }
    Ok(())
}

/// `F = |Tr U†W|² / (Tr U†U · Tr W†W)`.
pub fn fidelity(w: &Array2<Complex64>, u: &Array2<Complex64>) -> Result<f64> {
    check_unitary(u)?;
    if w.dim() != u.dim() {
        return Err(Error::Dimension(format!(
            "submatrix is {:?} but target is {:?}",
            w.dim(),
            u.dim()
        )));
    }
    let ww = frobenius_sq(w);
    if !(ww > 0.0) {
        return Err(Error::UndefinedMetric("fidelity of a zero submatrix".into()));
    }
    let uu = u.nrows() as f64;
    Ok(trace_inner(u, w).norm_sqr() / (uu * ww))
}

/// Success probability `P`, modified success probability `P̃`, and the output
/// power fraction `η = Tr V†V / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuccessProbabilities {
    pub p: f64,
    pub p_tilde: f64,
    pub eta: f64,
}

pub fn success(v: &TransferMatrix, w: &Array2<Complex64>) -> Result<SuccessProbabilities> {
    let total = v.total_power();
    if !(total > 0.0) {
        return Err(Error::UndefinedMetric("transfer matrix carries no power".into()));
    }
    let n = v.n_inputs() as f64;
    let ww = frobenius_sq(w);
    let eta = total / n;
    Ok(SuccessProbabilities {
        p: ww / n,
        p_tilde: ww / total,
        eta,
    })
}

/// Reflectivities `R_{0→1} = |W_10|²`, `R_{1→0} = |W_01|²` and
/// transmissivities `T_{0→0} = |W_00|²`, `T_{1→1} = |W_11|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitterRatios {
    pub r_01: f64,
    pub r_10: f64,
    pub t_00: f64,
    pub t_11: f64,
}

pub fn splitter_ratios(w: &Array2<Complex64>) -> Result<SplitterRatios> {
    if w.dim() != (2, 2) {
        return Err(Error::Dimension(format!(
            "splitting ratios need a 2x2 submatrix, got {:?}",
            w.dim()
        )));
    }
    Ok(SplitterRatios {
        r_01: w[[1, 0]].norm_sqr(),
        r_10: w[[0, 1]].norm_sqr(),
        t_00: w[[0, 0]].norm_sqr(),
        t_11: w[[1, 1]].norm_sqr(),
    })
}

/// Everything reported for one device against one target.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMetrics {
    pub fidelity: f64,
    pub p: f64,
    pub p_tilde: f64,
    pub eta: f64,
    pub w: Array2<Complex64>,
}

impl GateMetrics {
    pub fn evaluate(v: &TransferMatrix, target: &Array2<Complex64>) -> Result<Self> {
        let w = computational_submatrix(v)?;
        let fidelity = fidelity(&w, target)?;
        let s = success(v, &w)?;
        Ok(Self {
            fidelity,
            p: s.p,
            p_tilde: s.p_tilde,
            eta: s.eta,
            w,
        })
    }

    /// Metrics of a canonical `(B, α, θ)` beamsplitter against Hadamard.
    pub fn hadamard(params: &GateParams) -> Result<Self> {
        Self::evaluate(&params.transfer(2)?, &hadamard())
    }

    pub fn ratios(&self) -> Result<SplitterRatios> {
        splitter_ratios(&self.w)
    }
}

/// One row of [`large_b_limit_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    pub channels: usize,
    pub p: f64,
    pub p_tilde: f64,
    pub gap: f64,
}

/// `P` and `P̃` for an ascending list of channel counts at fixed `(α, θ)`.
pub fn large_b_limit_check(alpha: f64, theta: f64, channels: &[usize]) -> Result<Vec<LimitRow>> {
    if channels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Specification("channel list must be strictly ascending".into()));
    }
    channels
        .iter()
        .map(|&b| {
            let v = GateParams::new(b, alpha, theta).transfer(2)?;
            let w = computational_submatrix(&v)?;
            let s = success(&v, &w)?;
            Ok(LimitRow {
                channels: b,
                p: s.p,
                p_tilde: s.p_tilde,
                gap: s.p_tilde - s.p,
            })
        })
        .collect()
}
