//! A parameter sweep over mu for the tophat kernel.
//!
//! Builds a sweep in memory, runs it on all cores and prints the abscissa
//! next to the observed growth or decay of a cosine perturbation.
//!
//! Run with `cargo run --release --example stability_sweep`.

use std::path::Path;

use nonlocal_kpp::scenario::{run_sweep, SweepSpec};
use nonlocal_kpp::Result;
use serde_json::json;

fn main() -> Result<()> {
    let sweep = SweepSpec::from_json_str(
        &json!({
            "name": "tophat-mu",
            "base": {
                "grid": {"extents": [[0.0, 1.0]], "counts": [128]},
                "kernel": {"family": "tophat", "sigma": 0.2, "certify": {"bochner": false}},
                "initial": {"type": "cosine", "epsilon": 0.01, "mode": "most_unstable"},
                "sim": {"mu": 1.0, "dt": 1e-4, "t_end": 0.5, "snapshot_every": 0}
            },
            "parameters": [{"path": "sim.mu", "values": [50, 500, 1000, 2000, 2500, 3000, 5000]}]
        })
        .to_string(),
        Path::new("."),
    )?;
    let out = std::env::temp_dir().join("nlkpp_stability_sweep");
    let rows = run_sweep(&sweep, &out, 0)?;
    println!(
        "{:>6} {:>13} {:>12} {:>12} {:>8}",
        "mu", "abscissa", "amp(0)", "amp(0.5)", "verdict"
    );
    for r in &rows {
        let a0 = r.sup_dist_one_initial.unwrap_or(f64::NAN);
        let a1 = r.sup_dist_one_final.unwrap_or(f64::NAN);
        println!(
            "{:>6} {:>13.4e} {:>12.4e} {:>12.4e} {:>8}",
            r.value_a,
            r.spectral_abscissa.unwrap_or(f64::NAN),
            a0,
            a1,
            if a1 > a0 { "grows" } else { "decays" }
        );
    }
    println!("summary written to {}", out.join("summary.csv").display());
    Ok(())
}
