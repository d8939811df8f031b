//! Acceptance criteria A1 through A9. Each test prints one PASS/FAIL line.

mod common;

use std::path::Path;
use std::time::Instant;

use common::{balanced, report, unit};
use nonlocal_kpp::diagnostics::{decay_identity_residual, sup_distance_to_one, TraceRow};
use nonlocal_kpp::dynamics::{run, SimConfig, SimState};
use nonlocal_kpp::kernel::{
    certify_kernel_bochner, certify_positivity_eigen, ApplyPath, DEFAULT_CERTIFICATION_TOLERANCE,
};
use nonlocal_kpp::scenario::{execute_scenario, run_sweep, Scenario, SweepSpec};
use nonlocal_kpp::{Field, Grid, KernelProfile, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

fn logistic(u0: f64, t: f64) -> f64 {
    u0 * t.exp() / (1.0 - u0 + u0 * t.exp())
}

#[test]
fn a1_logistic_oracle() {
    assert!((logistic(0.2, 4f64.ln()) - 0.5).abs() < 1e-15);
    let started = Instant::now();
    let g = unit(128);
    let k = balanced(&g, KernelProfile::gaussian(0.2).unwrap());
    let config = SimConfig {
        mu: 1.0,
        dt: 1e-3,
        t_end: 10.0,
        snapshot_every: 0,
        ..SimConfig::default()
    };
    let mut max_err = 0.0f64;
    let mut at_ln4 = f64::NAN;
    let mut obs = |s: &SimState, _: &TraceRow| {
        let exact = logistic(0.2, s.t);
        for v in s.u.values() {
            max_err = max_err.max((v - exact).abs());
        }
        if (s.t - 4f64.ln()).abs() < 5e-4 {
            at_ln4 = s.u.values()[64];
        }
    };
    let (state, _) = run(&Field::constant(&g, 0.2), &g, &k, &config, &mut [&mut obs]).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let pass = max_err < 1e-3 && (state.t - 10.0).abs() < 1e-12 && secs < 10.0;
    report(
        "A1",
        "logistic oracle",
        pass,
        &format!(
            "max |u - u_logistic| = {max_err:.3e} < 1e-3, u(ln 4) = {at_ln4:.6}, {secs:.2}s < 10s"
        ),
    );
}

fn random_field(g: &Grid, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..g.len()).map(|_| rng.gen_range(0.5..1.5)).collect();
    Field::new(g, values).unwrap()
}

/// The runs shared by A2 and A3: 20 seeded data for each mu, gaussian
/// sigma = 0.2 balanced on 128 nodes, dt = 1e-2, t_end = 50.
fn theorem_runs() -> Vec<(f64, u64, Vec<TraceRow>)> {
    let g = unit(128);
    let k = balanced(&g, KernelProfile::gaussian(0.2).unwrap());
    let cases: Vec<(f64, u64)> = [0.5, 1.0, 5.0]
        .iter()
        .flat_map(|&mu| (0..20).map(move |seed| (mu, seed)))
        .collect();
    cases
        .par_iter()
        .map(|&(mu, seed)| {
            let config = SimConfig {
                mu,
                dt: 1e-2,
                t_end: 50.0,
                snapshot_every: 0,
                ..SimConfig::default()
            };
            let (_, trace) = run(&random_field(&g, 1000 + seed), &g, &k, &config, &mut []).unwrap();
            (mu, seed, trace.rows().to_vec())
        })
        .collect()
}

#[test]
fn a2_lyapunov_monotonicity() {
    let started = Instant::now();
    let runs = theorem_runs();
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut pairs = 0;
    for (_, _, rows) in &runs {
        let slack = 1e-8 * (1.0 + rows[0].v);
        for w in rows.windows(2) {
            pairs += 1;
            let excess = w[1].v - w[0].v - slack;
            worst = worst.max(w[1].v - w[0].v);
            if excess > 0.0 {
                violations += 1;
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    report(
        "A2",
        "Lyapunov monotonicity",
        violations == 0 && secs < 120.0,
        &format!(
            "{} runs, {pairs} pairs, {violations} violations, max V_(k+1) - V_k = {worst:.3e}, {secs:.1}s < 120s",
            runs.len()
        ),
    );
}

#[test]
fn a3_theorem_reproduction() {
    let runs = theorem_runs();
    let worst_sup = runs
        .iter()
        .map(|r| r.2.last().unwrap().sup_dist_one)
        .fold(0.0, f64::max);
    let worst_v = runs
        .iter()
        .map(|r| r.2.last().unwrap().v)
        .fold(0.0, f64::max);
    report(
        "A3",
        "convergence to u = 1",
        worst_sup < 1e-2 && worst_v < 1e-4,
        &format!("t_end = 50: max final sup|u-1| = {worst_sup:.3e} < 1e-2, max final V = {worst_v:.3e} < 1e-4"),
    );
}

#[test]
fn a4_decay_identity_order() {
    let g = unit(128);
    let k = balanced(&g, KernelProfile::gaussian(0.2).unwrap());
    let residual = |dt: f64| {
        let config = SimConfig {
            mu: 1.0,
            dt,
            t_end: 5.0,
            snapshot_every: 0,
            ..SimConfig::default()
        };
        let (_, trace) = run(&Field::constant(&g, 0.2), &g, &k, &config, &mut []).unwrap();
        (0..trace.len() - 1)
            .map(|i| decay_identity_residual(&trace, i).unwrap())
            .fold(0.0, f64::max)
    };
    let r: Vec<f64> = [4e-3, 2e-3, 1e-3].iter().map(|&dt| residual(dt)).collect();
    let orders = [(r[0] / r[1]).log2(), (r[1] / r[2]).log2()];
    report(
        "A4",
        "decay identity order",
        orders.iter().all(|&p| p >= 0.9),
        &format!(
            "residuals {:.3e}, {:.3e}, {:.3e}; observed orders {:.3}, {:.3} >= 0.9",
            r[0], r[1], r[2], orders[0], orders[1]
        ),
    );
}

#[test]
fn a5_certification() {
    let started = Instant::now();
    let g = unit(128);
    let tol = DEFAULT_CERTIFICATION_TOLERANCE;
    let gauss = balanced(&g, KernelProfile::gaussian(0.2).unwrap());
    let th = balanced(&g, KernelProfile::tophat(0.2).unwrap());
    let ge = certify_positivity_eigen(&gauss, tol);
    let gb = certify_kernel_bochner(&gauss, 8192, None, tol).unwrap();
    let te = certify_positivity_eigen(&th, tol);
    let tb = certify_kernel_bochner(&th, 8192, None, tol).unwrap();
    // The certificates report an absolute tolerance tol * scale.
    let floor = |c: &nonlocal_kpp::PositivityCertificate| -1e-10 * c.tolerance / tol;
    let omega = tb.witness_frequency.unwrap();
    let secs = started.elapsed().as_secs_f64();
    let pass = ge.verdict == Verdict::Positive
        && gb.verdict == Verdict::Positive
        && ge.witness >= floor(&ge)
        && gb.witness >= floor(&gb)
        && te.verdict == Verdict::NotPositive
        && tb.verdict == Verdict::NotPositive
        && te.witness < 0.0
        && tb.witness < 0.0
        && (omega * 0.2 - 4.4934).abs() < 0.05
        && secs < 10.0;
    report(
        "A5",
        "positivity certification",
        pass,
        &format!(
            "gaussian eigen {} {:.3e}, bochner {} {:.3e}; tophat eigen {} {:.3e}, bochner {} {:.3e} at omega*sigma = {:.4}; {secs:.2}s < 10s",
            ge.verdict.as_str(),
            ge.witness,
            gb.verdict.as_str(),
            gb.witness,
            te.verdict.as_str(),
            te.witness,
            tb.verdict.as_str(),
            tb.witness,
            omega * 0.2
        ),
    );
}

fn tophat_cosine_scenario(mu: f64, t_end: f64) -> serde_json::Value {
    json!({
        "name": "tophat-pattern",
        "grid": {"extents": [[0.0, 1.0]], "counts": [128]},
        "kernel": {"family": "tophat", "sigma": 0.2, "certify": {"bochner": false}},
        "initial": {"type": "cosine", "epsilon": 0.01, "mode": "most_unstable"},
        "sim": {"mu": mu, "dt": 1e-3, "t_end": t_end, "snapshot_every": 0}
    })
}

#[test]
fn a6_pattern_regime() {
    let started = Instant::now();
    let s = Scenario::from_value(tophat_cosine_scenario(50.0, 20.0), Path::new(".")).unwrap();
    let outcome = execute_scenario(&s).unwrap();
    let abscissa = outcome.spectral_abscissa.unwrap();
    let rows = outcome.trace.rows();
    let a0 = rows[0].sup_dist_one;
    let peak = rows.iter().map(|r| r.sup_dist_one).fold(0.0, f64::max);
    let last = rows.last().unwrap().sup_dist_one;
    let secs = started.elapsed().as_secs_f64();
    let pass = abscissa > 0.0 && peak >= 10.0 * a0 && last > 0.1 && secs < 60.0;
    report(
        "A6",
        "pattern regime (tophat, mu = 50)",
        pass,
        &format!(
            "mode k = {}, abscissa = {abscissa:.4e} > 0, growth factor = {:.3e} >= 10, final sup|u-1| = {last:.3e} > 0.1, {secs:.1}s < 60s",
            outcome.mode.unwrap(),
            peak / a0
        ),
    );
}

#[test]
fn a7_stability_consistency_sweep() {
    let mus: Vec<f64> = (1..=50).map(f64::from).collect();
    let sweep = SweepSpec::from_json_str(
        &json!({
            "name": "a7",
            "base": tophat_cosine_scenario(1.0, 5.0),
            "parameters": [{"path": "sim.mu", "values": mus}]
        })
        .to_string(),
        Path::new("."),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let rows = run_sweep(&sweep, dir.path(), 0).unwrap();
    let mut disagreements = Vec::new();
    let mut unstable = 0;
    for r in &rows {
        let abscissa = r.spectral_abscissa.unwrap_or(f64::NAN);
        let grows =
            r.sup_dist_one_final.unwrap_or(f64::NAN) > r.sup_dist_one_initial.unwrap_or(f64::NAN);
        if abscissa > 0.0 {
            unstable += 1;
        }
        if r.status != "ok" || (abscissa > 0.0) != grows {
            disagreements.push(r.value_a.clone());
        }
    }
    let max_abscissa = rows
        .iter()
        .filter_map(|r| r.spectral_abscissa)
        .fold(f64::NEG_INFINITY, f64::max);
    report(
        "A7",
        "stability consistency sweep",
        rows.len() == 50 && disagreements.is_empty(),
        &format!(
            "{} points, {unstable} with abscissa > 0 (max {max_abscissa:.3e}), disagreements at mu = {disagreements:?}",
            rows.len()
        ),
    );
}

#[test]
fn a8_conservation_and_steady_state() {
    let mut worst_mass = 0.0f64;
    let mut worst_drift = 0.0f64;
    let grids = [
        unit(128),
        Grid::rectangle((0.0, 1.0), (0.0, 1.0), (16, 16)).unwrap(),
    ];
    for g in &grids {
        let k = balanced(g, KernelProfile::gaussian(0.2).unwrap());
        let heat = SimConfig {
            mu: 0.0,
            dt: 1e-3,
            t_end: 0.5,
            snapshot_every: 0,
            ..SimConfig::default()
        };
        let (_, trace) = run(&random_field(g, 5), g, &k, &heat, &mut []).unwrap();
        for w in trace.rows().windows(2) {
            worst_mass = worst_mass.max((w[1].mass - w[0].mass).abs());
        }
        let steady = SimConfig {
            mu: 5.0,
            snapshot_every: 1,
            ..heat
        };
        let (_, trace) = run(&Field::constant(g, 1.0), g, &k, &steady, &mut []).unwrap();
        for w in trace.snapshots.windows(2) {
            let d = w[1]
                .field
                .values()
                .iter()
                .zip(w[0].field.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            worst_drift = worst_drift.max(d);
        }
        assert!(sup_distance_to_one(&trace.snapshots.last().unwrap().field) < 1e-10);
    }
    report(
        "A8",
        "conservation and steady state",
        worst_mass < 1e-10 && worst_drift < 1e-12,
        &format!("mu = 0 max per-step mass change {worst_mass:.3e} < 1e-10, u0 = 1 max per-step drift {worst_drift:.3e} < 1e-12"),
    );
}

#[test]
fn a9_fast_path_equivalence() {
    let mut worst = 0.0f64;
    let grids = [
        unit(256),
        Grid::rectangle((0.0, 1.0), (0.0, 2.0), (16, 16)).unwrap(),
    ];
    for g in &grids {
        for profile in [
            KernelProfile::gaussian(0.2).unwrap(),
            KernelProfile::tophat(0.2).unwrap(),
        ] {
            let k = balanced(g, profile);
            let dense = k.clone().with_apply_path(ApplyPath::Dense);
            let fft = k.with_apply_path(ApplyPath::Fft);
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            for _ in 0..50 {
                let f = Field::new(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .unwrap();
                let a = dense.apply(&f).unwrap();
                let b = fft.apply(&f).unwrap();
                let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let diff = a
                    .values()
                    .iter()
                    .zip(b.values())
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                worst = worst.max(diff / scale);
            }
        }
    }
    report(
        "A9",
        "FFT and dense kernel application agree",
        worst < 1e-10,
        &format!(
            "50 random fields per kernel, n = 256: max relative difference {worst:.3e} < 1e-10"
        ),
    );
}
