//! Comparisons against independent oracles: closed forms, a Jacobi
//! eigensolver and a direct discrete Fourier sum written here from scratch.

mod common;

use std::f64::consts::PI;

use common::{balanced, unit};
use nonlocal_kpp::diagnostics::{
    cosine_mode, decay_identity_residual, linear_stability, linearization_matrix,
    most_unstable_cosine_mode,
};
use nonlocal_kpp::dynamics::{run, SimConfig};
use nonlocal_kpp::kernel::{certify_positivity_bochner, certify_positivity_eigen};
use nonlocal_kpp::{Field, Grid, KernelProfile, Verdict};

fn quiet(mu: f64, dt: f64, t_end: f64) -> SimConfig {
    SimConfig {
        mu,
        dt,
        t_end,
        snapshot_every: 0,
        ..SimConfig::default()
    }
}

fn sup_diff(a: &Field, b: &Field) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn laplacian_is_second_order_on_the_neumann_eigenfunction() {
    let err = |n: usize| {
        let g = unit(n);
        let u = Field::from_fn(&g, |p| (PI * p[0]).cos());
        let lu = g.apply_neumann_laplacian(&u).unwrap();
        let exact = u.map(|v| -PI * PI * v);
        sup_diff(&lu, &exact)
    };
    let e: Vec<f64> = [51, 101, 201, 401].iter().map(|&n| err(n)).collect();
    assert!(e[2] <= 1e-3, "{e:?}");
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "observed order {order}, errors {e:?}");
    }
}

#[test]
fn implicit_heat_step_damps_cosine_modes_by_the_discrete_factor() {
    let n = 65;
    let g = unit(n);
    let k = balanced(&g, KernelProfile::gaussian(0.2).unwrap());
    let h = g.spacing()[0];
    let dt = 1e-3;
    let steps = 200;
    for mode in [1usize, 3, 10] {
        let c = cosine_mode(&g, mode, 0);
        let u0 = c.map(|v| 1.0 + 0.5 * v);
        let (state, _) = run(&u0, &g, &k, &quiet(0.0, dt, dt * steps as f64), &mut []).unwrap();
        // Discrete eigenvalue of the Neumann Laplacian for this mode.
        let lambda = 2.0 * (1.0 - (mode as f64 * PI * h).cos()) / (h * h);
        let factor = (1.0 + dt * lambda).powi(-steps);
        let expected = c.map(|v| 1.0 + 0.5 * factor * v);
        assert!(sup_diff(&state.u, &expected) < 1e-11, "mode {mode}");
    }
}

#[test]
fn logistic_error_halves_with_dt() {
    let g = unit(64);
    let k = balanced(&g, KernelProfile::gaussian(0.2).unwrap());
    let err = |dt: f64| {
        let mut worst = 0.0f64;
        let mut obs = |s: &nonlocal_kpp::dynamics::SimState,
                       _: &nonlocal_kpp::diagnostics::TraceRow| {
            let exact = 0.2 * s.t.exp() / (0.8 + 0.2 * s.t.exp());
            worst = worst.max(
                s.u.values()
                    .iter()
                    .fold(0.0f64, |m, v| m.max((v - exact).abs())),
            );
        };
        run(
            &Field::constant(&g, 0.2),
            &g,
            &k,
            &quiet(1.0, dt, 10.0),
            &mut [&mut obs],
        )
        .unwrap();
        worst
    };
    let e: Vec<f64> = [4e-3, 2e-3, 1e-3].iter().map(|&dt| err(dt)).collect();
    for w in e.windows(2) {
        assert!(w[0] / w[1] >= 1.8, "{e:?}");
    }
}

#[test]
fn narrow_kernel_approaches_the_local_equation() {
    let gap = |n: usize| {
        let g = unit(n);
        let h = g.spacing()[0];
        let k = balanced(&g, KernelProfile::gaussian(2.0 * h).unwrap());
        let u0 = Field::from_fn(&g, |p| {
            1.0 + 0.5 * (PI * p[0]).cos() + 0.3 * (2.0 * PI * p[0]).cos()
        });
        let nonlocal = quiet(5.0, 1e-3, 1.0);
        let local = SimConfig {
            local_mode: true,
            ..nonlocal.clone()
        };
        let (a, _) = run(&u0, &g, &k, &nonlocal, &mut []).unwrap();
        let (b, _) = run(&u0, &g, &k, &local, &mut []).unwrap();
        (2.0 * h, sup_diff(&a.u, &b.u))
    };
    let (s1, d1) = gap(33);
    let (s2, d2) = gap(65);
    let (s3, d3) = gap(129);
    assert!(
        d1 / (s1 * s1) < 1.0 && d3 / (s3 * s3) < 1.0,
        "{d1} {d2} {d3}"
    );
    let order = (d2 / d3).log2() / (s2 / s3).log2();
    assert!(order >= 1.8, "observed order {order}: {d1:e} {d2:e} {d3:e}");
}

#[test]
fn decay_identity_holds_for_a_non_uniform_datum() {
    let g = unit(128);
    let k = balanced(&g, KernelProfile::gaussian(0.2).unwrap());
    let u0 = Field::from_fn(&g, |p| 1.0 + 0.4 * (PI * p[0]).cos());
    let (_, trace) = run(&u0, &g, &k, &quiet(1.0, 1e-4, 0.2), &mut []).unwrap();
    let worst = (0..trace.len() - 1)
        .map(|i| decay_identity_residual(&trace, i).unwrap())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst}");
}

/// Cyclic Jacobi rotations; returns the eigenvalues of a symmetric matrix.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (rp, rq) = (a[p].clone(), a[q].clone());
                for k in 0..n {
                    a[p][k] = c * rp[k] - s * rq[k];
                    a[q][k] = s * rp[k] + c * rq[k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

#[test]
fn eigen_witness_matches_a_jacobi_eigensolver() {
    for profile in [
        KernelProfile::tophat(0.2).unwrap(),
        KernelProfile::gaussian(0.1).unwrap(),
    ] {
        let g = unit(48);
        let k = balanced(&g, profile);
        let w = g.weights();
        let m = k.matrix();
        let a: Vec<Vec<f64>> = (0..48)
            .map(|i| {
                (0..48)
                    .map(|j| w[i] * 0.5 * (m[(i, j)] + m[(j, i)]) * w[j])
                    .collect()
            })
            .collect();
        let oracle = jacobi_eigenvalues(a)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let cert = certify_positivity_eigen(&k, 1e-9);
        assert!(
            (cert.witness - oracle).abs() < 1e-12,
            "{} vs {oracle}",
            cert.witness
        );
    }
    // The tophat witness on 128 nodes, from an independent numpy eigensolve.
    let k = balanced(&unit(128), KernelProfile::tophat(0.2).unwrap());
    let cert = certify_positivity_eigen(&k, 1e-9);
    assert_eq!(cert.verdict, Verdict::NotPositive);
    assert!(
        (cert.witness + 1.5566932e-3).abs() < 1e-8,
        "{}",
        cert.witness
    );
}

#[test]
fn bochner_witness_matches_a_direct_fourier_sum() {
    let n = 2048;
    let half_width = 16.0;
    let dz = 2.0 * half_width / n as f64;
    for profile in [
        KernelProfile::tophat(1.0).unwrap(),
        KernelProfile::exponential(0.5).unwrap(),
        KernelProfile::mexican_hat(0.5, 0.6).unwrap(),
    ] {
        let cert = certify_positivity_bochner(&profile, n, half_width, 1e-12).unwrap();
        let samples: Vec<(f64, f64)> = (-(n as isize) / 2..n as isize / 2)
            .map(|m| (m as f64 * dz, profile.eval(m as f64 * dz)))
            .collect();
        let (omega, min) = (-(n as isize) / 2..n as isize / 2)
            .map(|k| {
                let omega = 2.0 * PI * k as f64 / (n as f64 * dz);
                let re: f64 = samples
                    .iter()
                    .map(|(z, f)| f * (omega * z).cos())
                    .sum::<f64>()
                    * dz;
                (omega, re)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(
            (cert.witness - min).abs() < 1e-12,
            "{:?}: {} vs {min}",
            profile.family(),
            cert.witness
        );
        assert!((cert.witness_frequency.unwrap().abs() - omega.abs()).abs() < 1e-9);
    }
    // Closed form: the tophat of half-width 1 has transform 2 sin(w)/w.
    let cert = certify_positivity_bochner(&KernelProfile::tophat(1.0).unwrap(), 8192, 200.0, 1e-12)
        .unwrap();
    assert!((cert.witness + 0.434467).abs() < 2e-3, "{}", cert.witness);
}

#[test]
fn tophat_patterns_form_above_the_onset() {
    let g = unit(128);
    let k = balanced(&g, KernelProfile::tophat(0.2).unwrap());
    let mu = 3000.0;
    assert!(linear_stability(&k, 2000.0).unwrap() < 0.0);
    let abscissa = linear_stability(&k, mu).unwrap();
    assert!(abscissa > 0.0, "{abscissa}");
    let (mode, rate) = most_unstable_cosine_mode(&g, &linearization_matrix(&k, mu), 0);
    assert!(rate > 0.0);
    let u0 = cosine_mode(&g, mode, 0).map(|c| 1.0 + 0.01 * c);
    let (state, trace) = run(&u0, &g, &k, &quiet(mu, 1e-4, 2.0), &mut []).unwrap();
    let rows = trace.rows();
    let peak = rows.iter().map(|r| r.sup_dist_one).fold(0.0, f64::max);
    assert!(peak >= 10.0 * rows[0].sup_dist_one);
    assert!(rows.last().unwrap().sup_dist_one > 0.1);
    assert!(state.u.min() > 0.0);
}

#[test]
fn two_dimensional_heat_mode_decays_at_the_discrete_rate() {
    let g = Grid::rectangle((0.0, 1.0), (0.0, 2.0), (17, 33)).unwrap();
    let k = balanced(&g, KernelProfile::gaussian(0.3).unwrap());
    let h = g.spacing().to_vec();
    let u0 = Field::from_fn(&g, |p| {
        1.0 + 0.3 * (PI * p[0]).cos() * (PI * p[1] / 2.0).cos()
    });
    let dt = 1e-3;
    let steps = 100;
    let (state, _) = run(&u0, &g, &k, &quiet(0.0, dt, dt * steps as f64), &mut []).unwrap();
    let l0 = 2.0 * (1.0 - (PI * h[0]).cos()) / (h[0] * h[0]);
    let l1 = 2.0 * (1.0 - (PI * h[1] / 2.0).cos()) / (h[1] * h[1]);
    // ADI factors (1 + dt l0)(1 + dt l1) per step.
    let factor = ((1.0 + dt * l0) * (1.0 + dt * l1)).powi(-steps);
    let expected = Field::from_fn(&g, |p| {
        1.0 + 0.3 * factor * (PI * p[0]).cos() * (PI * p[1] / 2.0).cos()
    });
    assert!(sup_diff(&state.u, &expected) < 1e-11);
}
