//! Pattern formation with a tophat kernel.
//!
//! Locates the onset of linear instability of `u = 1` by bisection on the
//! spectral abscissa, then simulates a cosine perturbation of the most
//! unstable mode above the onset and reports its growth and saturation.
//!
//! Run with `cargo run --release --example pattern_formation`.

use nonlocal_kpp::diagnostics::{
    cosine_mode, linear_stability, linearization_matrix, most_unstable_cosine_mode,
};
use nonlocal_kpp::dynamics::{run, SimConfig};
use nonlocal_kpp::{Grid, Kernel, KernelProfile, Result};

fn main() -> Result<()> {
    let grid = Grid::interval(0.0, 1.0, 128)?;
    let kernel = Kernel::sample_convolution(&grid, KernelProfile::tophat(0.2)?)?
        .symmetrize_and_normalize(50_000, 1e-12)?;

    println!("{:>8} {:>14}", "mu", "abscissa");
    for mu in [50.0, 500.0, 1000.0, 2000.0, 3000.0, 5000.0] {
        println!("{mu:>8} {:>14.6e}", linear_stability(&kernel, mu)?);
    }

    let (mut lo, mut hi) = (50.0, 5000.0);
    while hi - lo > 1.0 {
        let mid = 0.5 * (lo + hi);
        if linear_stability(&kernel, mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    println!("onset of instability: mu* in [{lo:.1}, {hi:.1}]");

    let mu = 3000.0;
    let j = linearization_matrix(&kernel, mu);
    let (k, rate) = most_unstable_cosine_mode(&grid, &j, 0);
    println!("mu = {mu}: most unstable cosine mode k = {k}, Rayleigh quotient {rate:.4e}");
    let u0 = cosine_mode(&grid, k, 0).map(|c| 1.0 + 0.01 * c);
    let config = SimConfig {
        mu,
        dt: 1e-4,
        t_end: 2.0,
        snapshot_every: 0,
        ..SimConfig::default()
    };
    let (state, trace) = run(&u0, &grid, &kernel, &config, &mut [])?;
    let rows = trace.rows();
    let peak = rows.iter().map(|r| r.sup_dist_one).fold(0.0, f64::max);
    println!(
        "sup|u-1|: initial {:.3e}, peak {:.3e}, final {:.3e}; min u final {:.3e}",
        rows[0].sup_dist_one,
        peak,
        rows.last().unwrap().sup_dist_one,
        state.u.min()
    );
    Ok(())
}
