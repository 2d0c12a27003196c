//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line and then
//! asserts, so `cargo test --test acceptance -- --nocapture --test-threads 1`
//! reads as a checklist.

mod common;

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use common::{dense_canonical, dense_entry, quad_bessel};
use num_complex::Complex64;
use qfp_core::design::{optimize_hadamard, sweep_alpha, sweep_theta, stepped};
use qfp_core::metrics::{fidelity, hadamard, large_b_limit_check, GateMetrics};
use qfp_core::probe::{gauge_fixed, reconstruct, simulate, ProbeConfig};
use qfp_core::specfun::{bessel_j, truncation_order, BesselRow};
use qfp_core::transfer::{computational_submatrix, eq2_transfer, GateParams};

fn report(id: u32, title: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {verdict}: {title}: {detail}");
    assert!(pass, "criterion {id} failed: {detail}");
}

struct Lcg(u64);

impl Lcg {
    fn uniform(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Hadamard-target metrics plus the wall time of one cold evaluation.
fn timed_metrics(params: GateParams) -> (GateMetrics, Duration) {
    let start = Instant::now();
    let m = GateMetrics::hadamard(&params).unwrap();
    (m, start.elapsed())
}

#[test]
fn criterion_01_hadamard_operating_point() {
    let (m, t) = timed_metrics(GateParams::HADAMARD);
    let pass = m.fidelity >= 0.999998 && (m.p_tilde - 0.9747).abs() <= 5e-4 && t < Duration::from_millis(10);
    report(
        1,
        "Hadamard operating point (6, pi, 0.8283)",
        pass,
        format!("F = {:.8}, P~ = {:.6}, {:.2?}", m.fidelity, m.p_tilde, t),
    );
}

#[test]
fn criterion_02_four_channel_gate() {
    let (m, t) = timed_metrics(GateParams::new(4, PI, 0.8283));
    let pass =
        (m.fidelity - 0.999991).abs() <= 5e-6 && (m.p_tilde - 0.9696).abs() <= 5e-4 && t < Duration::from_millis(10);
    report(
        2,
        "four-channel gate (4, pi, 0.8283)",
        pass,
        format!("F = {:.8}, P~ = {:.6}, {:.2?}", m.fidelity, m.p_tilde, t),
    );
}

#[test]
fn criterion_03_sideband_leakage() {
    let ratio = (bessel_j(2, 0.8283).unwrap() / bessel_j(0, 0.8283).unwrap()).powi(2);
    let oracle = (quad_bessel(2, 0.8283) / quad_bessel(0, 0.8283)).powi(2);
    let pass = (0.0085..=0.0095).contains(&ratio) && (ratio - oracle).abs() < 1e-12;
    report(3, "sideband leakage |J2/J0|^2", pass, format!("{ratio:.6} (quadrature {oracle:.6})"));
}

#[test]
fn criterion_04_large_b_limit() {
    let k = truncation_order(0.8283, 1e-16).unwrap();
    let threshold = 2 * k + 2;
    let channels: Vec<usize> = [threshold, threshold + 2, threshold + 10, 40.max(threshold + 12)].to_vec();
    let rows = large_b_limit_check(PI, 0.8283, &channels).unwrap();
    let worst = rows.iter().map(|r| r.gap.abs()).fold(0.0, f64::max);
    let gap4 = large_b_limit_check(PI, 0.8283, &[4]).unwrap()[0].gap;
    let pass = worst < 1e-10 && (gap4 - 7e-3).abs() <= 1e-3;
    report(
        4,
        "large-B identity P~ = P",
        pass,
        format!("K = {k}, max |P~ - P| for B >= {threshold}: {worst:.1e}; B = 4 gap {gap4:.2e}"),
    );
}

/// Fidelity against Hadamard from the closed-form entries, with Bessel
/// values by quadrature.
fn oracle_fidelity(channels: i64, alpha: f64, theta: f64) -> f64 {
    let top = channels / 2 + 2;
    let j: Vec<f64> = (-top..=top).map(|l| quad_bessel(l, theta)).collect();
    let bj = |l: i64| j[(l + top) as usize];
    let v = |m: i64, n: i64| -> Complex64 {
        (1..=channels / 2)
            .map(|k| {
                Complex64::new(bj(m + k - 1) * bj(n + k - 1), 0.0)
                    + Complex64::from_polar(bj(m - k) * bj(n - k), alpha)
            })
            .sum()
    };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let overlap = h * (v(0, 0) + v(0, 1) + v(1, 0) - v(1, 1));
    let ww: f64 = [v(0, 0), v(0, 1), v(1, 0), v(1, 1)].iter().map(|z| z.norm_sqr()).sum();
    overlap.norm_sqr() / (2.0 * ww)
}

fn grid_argmax(lo: f64, hi: f64, step: f64) -> (f64, f64) {
    stepped(lo, hi, step)
        .unwrap()
        .into_iter()
        .map(|t| (t, oracle_fidelity(6, PI, t)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

#[test]
fn criterion_05_optimizer_rediscovery() {
    let start = Instant::now();
    let r = optimize_hadamard(6, PI, (0.5, 1.1)).unwrap();
    let elapsed = start.elapsed();
    // independent oracle: 1e-3 grid over the whole bracket, then 1e-5 around its best
    let (coarse, _) = grid_argmax(0.5, 1.1, 1e-3);
    let (fine, f_fine) = grid_argmax(coarse - 2e-3, coarse + 2e-3, 1e-5);
    let pass = (r.theta - 0.8283).abs() <= 1e-3
        && (r.theta - fine).abs() <= 1e-5
        && r.value >= f_fine - 1e-9
        && elapsed < Duration::from_secs(1);
    report(
        5,
        "optimizer rediscovers theta*",
        pass,
        format!(
            "theta* = {:.7}, F = {:.10}; 1e-5 grid oracle theta = {fine:.5}; {elapsed:.2?}",
            r.theta, r.value
        ),
    );
}

#[test]
fn criterion_06_theta_sweep_crossover() {
    let thetas = stepped(0.5, 1.0, 5e-3).unwrap();
    let sweep = sweep_theta(6, PI, &thetas, 2).unwrap();
    let crossings = sweep.crossovers();
    let opt = optimize_hadamard(6, PI, (0.5, 1.1)).unwrap();
    let p_end = sweep.points.last().unwrap().metrics.p_tilde;
    let p_star = opt.metrics.p_tilde;
    let pass = crossings.len() == 1 && (crossings[0] - opt.theta).abs() <= 2e-3 && p_end < p_star;
    report(
        6,
        "theta-sweep R = T crossover",
        pass,
        format!(
            "crossings {crossings:?}, theta* = {:.6}; P~(1.0) = {p_end:.6} < P~(theta*) = {p_star:.6}",
            opt.theta
        ),
    );
}

#[test]
fn criterion_07_alpha_sweep_balance() {
    let sweep = sweep_alpha(6, 0.8283, &[PI / 3.0, PI / 2.0, 2.0 * PI / 3.0, PI], 2).unwrap();
    let at_pi = sweep.points[3].ratios.unwrap();
    let asym = (at_pi.r_01 - at_pi.r_10).abs().max((at_pi.t_00 - at_pi.t_11).abs());
    let mut worst: f64 = 0.0;
    let mut pairs = Vec::new();
    for p in &sweep.points[..3] {
        let r = p.ratios.unwrap();
        let (o, d) = dense_canonical(6, p.axis_value, 0.8283, 14);
        let dense = [(1, 0), (0, 1), (0, 0), (1, 1)].map(|(m, n)| dense_entry(o, &d, m, n).norm_sqr());
        for (got, want) in [r.r_01, r.r_10, r.t_00, r.t_11].iter().zip(dense) {
            worst = worst.max((got - want).abs());
        }
        pairs.push(format!("(T {:.4}, R {:.4})", r.t_00, r.r_01));
    }
    let pass = asym < 1e-12 && worst < 1e-10;
    report(
        7,
        "alpha-sweep balance and dense oracle",
        pass,
        format!("alpha=pi asymmetry {asym:.1e}; pi/3, pi/2, 2pi/3 {} vs dense max diff {worst:.1e}", pairs.join(" ")),
    );
}

#[test]
fn criterion_08_tomography_round_trip() {
    let start = Instant::now();
    let mut rng = Lcg(0x00ac_ce97);
    let (mut tested, mut worst_f, mut worst_p) = (0, 0.0f64, 0.0f64);
    while tested < 100 {
        let params = GateParams::new(2 * (1 + (rng.uniform() * 4.0) as usize), TAU * rng.uniform(), 0.2 + rng.uniform());
        let v = params.transfer(2).unwrap();
        let w = computational_submatrix(&v).unwrap();
        if w.iter().any(|z| z.norm() <= 0.05) {
            continue;
        }
        tested += 1;
        let mut cfg = ProbeConfig::default();
        cfg.phi_i = TAU * rng.uniform();
        let r = reconstruct(&simulate(&v, &cfg).unwrap()).unwrap();
        let direct_f = fidelity(&gauge_fixed(&w), &hadamard()).unwrap();
        let direct = GateMetrics::evaluate(&v, &hadamard()).unwrap();
        worst_f = worst_f.max((r.fidelity - direct_f).abs());
        worst_p = worst_p.max((r.p_tilde - direct.p_tilde).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst_f < 1e-10 && worst_p < 1e-10 && elapsed < Duration::from_secs(5);
    report(
        8,
        "noiseless tomography round trip (100 configs)",
        pass,
        format!("max |dF| {worst_f:.1e}, max |dP~| {worst_p:.1e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_09_uncertainty_coverage() {
    let v = GateParams::HADAMARD.transfer(2).unwrap();
    let truth = GateMetrics::hadamard(&GateParams::HADAMARD).unwrap().fidelity;
    let mut cfg = ProbeConfig::default();
    cfg.noise.sigma = 0.005;
    cfg.replicates = 5;
    let mut hits = 0;
    let mut median_err = Vec::new();
    for seed in 0..200 {
        cfg.seed = seed;
        let r = reconstruct(&simulate(&v, &cfg).unwrap()).unwrap();
        if (r.fidelity - truth).abs() <= 3.0 * r.fidelity_err {
            hits += 1;
        }
        median_err.push(r.fidelity_err);
    }
    median_err.sort_by(f64::total_cmp);
    let fraction = hits as f64 / 200.0;
    report(
        9,
        "3-sigma coverage of F over 200 seeds",
        fraction >= 0.93,
        format!("{hits}/200 = {:.1}% covered, median dF = {:.2e}", 100.0 * fraction, median_err[100]),
    );
}

#[test]
fn criterion_10_numerical_hygiene() {
    let mut rng = Lcg(0x0bad_5eed);
    let (mut reflect, mut parseval, mut recur, mut quad) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let theta = 20.0 * rng.uniform();
        let k = truncation_order(theta, 1e-16).unwrap() as i64;
        let row = BesselRow::new(theta, k as usize + 1).unwrap();
        parseval = parseval.max((BesselRow::new(theta, k as usize).unwrap().power() - 1.0).abs());
        for l in 0..=k {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            reflect = reflect.max((bessel_j(-l, theta).unwrap() - sign * bessel_j(l, theta).unwrap()).abs());
        }
        if theta > 0.1 {
            for l in -k..=k {
                let lhs = row.get(l - 1) + row.get(l + 1);
                let rhs = 2.0 * l as f64 / theta * row.get(l);
                let scale = lhs.abs().max(rhs.abs()).max(1e-5);
                recur = recur.max((lhs - rhs).abs() / scale);
            }
        }
        let l = (rng.uniform() * 61.0) as i64 - 30;
        quad = quad.max((bessel_j(l, theta).unwrap() - quad_bessel(l, theta)).abs());
    }
    let mut eq2 = 0.0f64;
    for _ in 0..200 {
        let channels = 2 * (1 + (rng.uniform() * 4.0) as usize);
        let (alpha, theta) = (TAU * rng.uniform(), 1.2 * rng.uniform());
        let v = GateParams::new(channels, alpha, theta).transfer(2).unwrap();
        for m in v.output_bins() {
            for n in 0..2 {
                eq2 = eq2.max((eq2_transfer(channels, alpha, theta, 2, m, n).unwrap() - v.entry(m, n)).norm());
            }
        }
    }
    let pass = reflect < 1e-14 && parseval < 1e-12 && recur < 1e-10 && quad < 1e-12 && eq2 < 1e-12;
    report(
        10,
        "numerical hygiene",
        pass,
        format!(
            "reflection {reflect:.1e}, Parseval {parseval:.1e}, recurrence {recur:.1e}, quadrature {quad:.1e}, closed form vs builder {eq2:.1e}"
        ),
    );
}
