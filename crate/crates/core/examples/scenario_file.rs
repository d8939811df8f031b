//! Runs a scenario file the same way `nlkpp simulate` does.
//!
//! Defaults to the convergence scenario shipped next to this example; pass
//! another path as the first argument.
//!
//! Run with `cargo run --release --example scenario_file [-- path/to/scenario.json]`.

use std::path::PathBuf;

use nonlocal_kpp::scenario::{parse_scenario, resolve_output_dir, run_scenario};
use nonlocal_kpp::Result;

fn main() -> Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios/convergence.json")
        });
    let scenario = parse_scenario(&path)?;
    let out = resolve_output_dir(
        Some(&std::env::temp_dir().join("nlkpp_scenario_file")),
        &scenario,
    );
    let outcome = run_scenario(&scenario, &out)?;
    let r = &outcome.summary;
    println!("{} -> {}", scenario.name, out.display());
    println!(
        "final sup|u-1| = {:.3e}, final V = {:.3e}",
        r.sup_dist_one_final.unwrap(),
        r.v_final.unwrap()
    );
    println!(
        "eigen {} ({:?}), bochner {} ({:?})",
        r.eigen_verdict, r.eigen_witness, r.bochner_verdict, r.bochner_witness
    );
    println!(
        "spectral abscissa {:?}, wall time {:.2}s",
        r.spectral_abscissa, r.wall_time_s
    );
    Ok(())
}
