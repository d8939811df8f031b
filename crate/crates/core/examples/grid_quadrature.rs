//! Trapezoid quadrature and the Neumann Laplacian on a uniform grid.
//!
//! Prints the quadrature weights of a small grid, integrates a few functions,
//! and measures the second-order convergence of the Laplacian on the Neumann
//! eigenfunction `cos(pi x)`.
//!
//! Run with `cargo run --example grid_quadrature`.

use std::f64::consts::PI;

use nonlocal_kpp::{Field, Grid, Result};

fn main() -> Result<()> {
    let g = Grid::interval(0.0, 1.0, 5)?;
    println!("weights on 5 nodes: {:?}", g.weights());

    let g = Grid::interval(0.0, 1.0, 101)?;
    let x = Field::from_fn(&g, |p| p[0]);
    let exp = Field::from_fn(&g, |p| p[0].exp());
    println!("integral of x     = {:.12}", g.integrate(&x)?);
    println!(
        "integral of exp x = {:.12} (exact {:.12})",
        g.integrate(&exp)?,
        1f64.exp() - 1.0
    );

    let rect = Grid::rectangle((0.0, 2.0), (0.0, 1.0), (11, 21))?;
    println!("measure of [0,2]x[0,1] = {}", rect.measure());

    println!("{:>6} {:>12} {:>7}", "n", "max error", "order");
    let mut previous: Option<f64> = None;
    for n in [26, 51, 101, 201, 401] {
        let g = Grid::interval(0.0, 1.0, n)?;
        let u = Field::from_fn(&g, |p| (PI * p[0]).cos());
        let lu = g.apply_neumann_laplacian(&u)?;
        let err = lu
            .values()
            .iter()
            .zip(u.values())
            .fold(0.0f64, |m, (l, v)| m.max((l + PI * PI * v).abs()));
        let order = previous.map_or(String::from("-"), |e| format!("{:.3}", (e / err).log2()));
        println!("{n:>6} {err:>12.4e} {order:>7}");
        previous = Some(err);
    }
    Ok(())
}
