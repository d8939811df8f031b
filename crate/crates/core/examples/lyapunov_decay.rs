//! Lyapunov functional and the decay identity along a trajectory.
//!
//! Starts from a smooth random datum (a few cosine modes with random
//! amplitudes) with a gaussian kernel, prints the
//! Lyapunov value, its dissipation split and the distance to `u = 1` over
//! time, and the worst residual of `dV/dt = -D`.
//!
//! Run with `cargo run --example lyapunov_decay`.

use nonlocal_kpp::diagnostics::decay_identity_residual;
use nonlocal_kpp::dynamics::{run, SimConfig};
use nonlocal_kpp::{Field, Grid, Kernel, KernelProfile, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let g = Grid::interval(0.0, 1.0, 128)?;
    let k = Kernel::sample_convolution(&g, KernelProfile::gaussian(0.2)?)?
        .symmetrize_and_normalize(50_000, 1e-12)?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let amplitudes: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.12..0.12)).collect();
    let u0 = Field::from_fn(&g, |p| {
        1.0 + amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * p[0]).cos())
            .sum::<f64>()
    });
    let config = SimConfig {
        mu: 1.0,
        dt: 1e-3,
        t_end: 20.0,
        snapshot_every: 0,
        ..SimConfig::default()
    };
    let (_, trace) = run(&u0, &g, &k, &config, &mut [])?;

    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12}",
        "t", "V", "D_grad", "D_kernel", "sup|u-1|"
    );
    for r in trace.rows().iter().step_by(2000) {
        println!(
            "{:>6.1} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            r.t, r.v, r.d_grad, r.d_kernel, r.sup_dist_one
        );
    }
    let worst = (0..trace.len() - 1)
        .map(|i| decay_identity_residual(&trace, i))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!(
        "largest increase of V between steps: {:.3e}",
        trace.max_lyapunov_increase()
    );
    println!("largest decay identity residual: {worst:.3e}");
    Ok(())
}
