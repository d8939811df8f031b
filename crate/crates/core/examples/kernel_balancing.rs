//! Column normalization and Sinkhorn balancing of sampled kernels.
//!
//! Shows the weighted row and column sums before and after each
//! normalization, and that a balanced kernel maps constants to themselves.
//!
//! Run with `cargo run --example kernel_balancing`.

use nonlocal_kpp::{Field, Grid, Kernel, KernelProfile, Result};

fn spread(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn main() -> Result<()> {
    let g = Grid::interval(0.0, 1.0, 64)?;
    let raw = Kernel::sample_convolution(&g, KernelProfile::gaussian(0.2)?)?;
    for (label, k) in [
        ("raw", raw.clone()),
        ("columns", raw.normalize_columns()?),
        ("balanced", raw.symmetrize_and_normalize(50_000, 1e-12)?),
    ] {
        let (rlo, rhi) = spread(&k.row_sums());
        let (clo, chi) = spread(&k.column_sums());
        println!(
            "{label:>9}: K[1] in [{rlo:.6}, {rhi:.6}], weighted column sums in [{clo:.6}, {chi:.6}], asymmetry {:.2e}",
            k.asymmetry()
        );
    }

    let balanced = raw.symmetrize_and_normalize(50_000, 1e-12)?;
    let image = balanced.apply(&Field::constant(&g, 3.0))?;
    let (lo, hi) = spread(image.values());
    println!("balanced K applied to u = 3: values in [{lo:.12}, {hi:.12}]");

    // Signed profiles cannot be balanced; column normalization still works.
    let hat = Kernel::sample_convolution(&g, KernelProfile::mexican_hat(0.1, 0.5)?)?;
    match hat.symmetrize_and_normalize(50_000, 1e-12) {
        Ok(_) => println!("mexican hat balanced"),
        Err(e) => println!("mexican hat: {e}"),
    }
    println!(
        "mexican hat columns normalized: {}",
        hat.normalize_columns()?.is_normalized()
    );
    Ok(())
}
