//! Dense versus FFT kernel application.
//!
//! Both paths compute the same discrete convolution; the FFT path pads to
//! avoid wrap-around and is much faster on large grids.
//!
//! Run with `cargo run --release --example fft_fast_path`.

use std::time::Instant;

use nonlocal_kpp::kernel::ApplyPath;
use nonlocal_kpp::{Field, Grid, Kernel, KernelProfile, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for g in [
        Grid::interval(0.0, 1.0, 1024)?,
        Grid::rectangle((0.0, 1.0), (0.0, 1.0), (48, 48))?,
    ] {
        let k =
            Kernel::sample_convolution(&g, KernelProfile::gaussian(0.1)?)?.normalize_columns()?;
        let f = Field::new(&g, (0..g.len()).map(|_| rng.gen_range(0.0..2.0)).collect())?;
        let dense = k.clone().with_apply_path(ApplyPath::Dense);
        let fft = k.with_apply_path(ApplyPath::Fft);

        let started = Instant::now();
        let a = dense.apply(&f)?;
        let t_dense = started.elapsed();
        let started = Instant::now();
        let b = fft.apply(&f)?;
        let t_fft = started.elapsed();

        let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = a
            .values()
            .iter()
            .zip(b.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        println!(
            "{}D grid with {} nodes: dense {:?}, fft {:?}, relative difference {:.2e}",
            g.dim(),
            g.len(),
            t_dense,
            t_fft,
            diff / scale
        );
    }
    Ok(())
}
