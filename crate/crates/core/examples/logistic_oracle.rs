//! Constant data under a balanced kernel follow the logistic ODE.
//!
//! With `K[1] = 1` the spatially constant solution solves `u' = mu (1 - u) u`,
//! so the simulation can be compared with `u0 e^t / (1 - u0 + u0 e^t)`.
//!
//! Run with `cargo run --example logistic_oracle`.

use nonlocal_kpp::diagnostics::TraceRow;
use nonlocal_kpp::dynamics::{run, SimConfig, SimState};
use nonlocal_kpp::{Field, Grid, Kernel, KernelProfile, Result};

fn main() -> Result<()> {
    let g = Grid::interval(0.0, 1.0, 128)?;
    let k = Kernel::sample_convolution(&g, KernelProfile::gaussian(0.2)?)?
        .symmetrize_and_normalize(50_000, 1e-12)?;
    let u0 = 0.2;
    let exact = |t: f64| u0 * t.exp() / (1.0 - u0 + u0 * t.exp());
    println!("{:>8} {:>14} {:>12}", "dt", "max error", "ratio");
    let mut previous: Option<f64> = None;
    for dt in [4e-3, 2e-3, 1e-3, 5e-4] {
        let config = SimConfig {
            mu: 1.0,
            dt,
            t_end: 10.0,
            snapshot_every: 0,
            ..SimConfig::default()
        };
        let mut worst = 0.0f64;
        let mut obs = |s: &SimState, _: &TraceRow| {
            for v in s.u.values() {
                worst = worst.max((v - exact(s.t)).abs());
            }
        };
        run(&Field::constant(&g, u0), &g, &k, &config, &mut [&mut obs])?;
        let ratio = previous.map_or(String::from("-"), |p| format!("{:.3}", p / worst));
        println!("{dt:>8} {worst:>14.4e} {ratio:>12}");
        previous = Some(worst);
    }
    println!("closed form at t = ln 4: {}", exact(4f64.ln()));
    Ok(())
}
