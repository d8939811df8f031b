//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::io::Write;

use nonlocal_kpp::{Grid, Kernel, KernelProfile};

/// Writes one result line past the test harness output capture, then fails
/// the test if `pass` is false.
pub fn report(id: &str, title: &str, pass: bool, detail: &str) {
    let line = format!(
        "[acceptance] {id} {title}: {} ({detail})\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "{id} {title} failed: {detail}");
}

pub fn unit(n: usize) -> Grid {
    Grid::interval(0.0, 1.0, n).unwrap()
}

pub fn balanced(grid: &Grid, profile: KernelProfile) -> Kernel {
    Kernel::sample_convolution(grid, profile)
        .unwrap()
        .symmetrize_and_normalize(50_000, 1e-12)
        .unwrap()
}
