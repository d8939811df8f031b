//! Writing and reading fields and traces.
//!
//! Round-trips a 2D field through the binary format and a trace through CSV,
//! checking that every value comes back bit for bit.
//!
//! Run with `cargo run --example field_io`.

use nonlocal_kpp::dynamics::{run, SimConfig};
use nonlocal_kpp::io;
use nonlocal_kpp::{Field, Grid, Kernel, KernelProfile, Result};

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("nlkpp_field_io");
    std::fs::create_dir_all(&dir)?;

    let g = Grid::rectangle((0.0, 1.0), (-0.5, 0.5), (12, 9))?;
    let f = Field::from_fn(&g, |p| (p[0] * 7.0).sin() + p[1].powi(3));
    let path = dir.join("field.bin");
    io::write_field(&path, &f)?;
    let back = io::read_field(&path)?;
    println!(
        "{}: {} bytes, counts {:?}, identical: {}",
        path.display(),
        std::fs::metadata(&path)?.len(),
        back.grid().counts(),
        back == f
    );

    let g1 = Grid::interval(0.0, 1.0, 32)?;
    let k = Kernel::sample_convolution(&g1, KernelProfile::gaussian(0.2)?)?
        .symmetrize_and_normalize(50_000, 1e-12)?;
    let config = SimConfig {
        t_end: 0.1,
        dt: 0.01,
        ..SimConfig::default()
    };
    let (_, trace) = run(
        &Field::from_fn(&g1, |p| 0.5 + p[0]),
        &g1,
        &k,
        &config,
        &mut [],
    )?;
    let path = dir.join("trace.csv");
    io::write_trace_csv(&path, &trace)?;
    let back = io::read_trace_csv(&path)?;
    let same = back
        .rows()
        .iter()
        .zip(trace.rows())
        .all(|(a, b)| a.v.to_bits() == b.v.to_bits() && a.t.to_bits() == b.t.to_bits());
    println!("{}: {} rows, identical: {same}", path.display(), back.len());
    Ok(())
}
