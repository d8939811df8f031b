//! Zero-padded linear convolution through FFTs, for translation-invariant
//! kernels sampled on a uniform grid.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

/// Precomputed spectrum of the offset table `phi(m h)` for
/// `m = -(n-1)..=(n-1)` on each axis.
#[derive(Clone)]
pub(crate) struct FftConvolver {
    shape: [usize; 2],
    padded: [usize; 2],
    spectrum: Vec<Complex64>,
    forward: [Arc<dyn Fft<f64>>; 2],
    inverse: [Arc<dyn Fft<f64>>; 2],
}

impl fmt::Debug for FftConvolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftConvolver")
            .field("shape", &self.shape)
            .field("padded", &self.padded)
            .finish()
    }
}

fn signed_offset(k: usize, padded: usize) -> isize {
    if padded == 1 || k < padded / 2 {
        k as isize
    } else {
        k as isize - padded as isize
    }
}

impl FftConvolver {
    /// `phi_at(offset)` receives the per-axis integer offsets `(m0, m1)`.
    pub(crate) fn new(grid: &Grid, phi_at: impl Fn(isize, isize) -> f64) -> Self {
        let counts = grid.counts();
        let shape = [counts[0], counts.get(1).copied().unwrap_or(1)];
        let padded = shape.map(|n| {
            if n == 1 {
                1
            } else {
                (2 * n - 1).next_power_of_two()
            }
        });

        let mut planner = FftPlanner::new();
        let forward = padded.map(|p| planner.plan_fft_forward(p));
        let inverse = padded.map(|p| planner.plan_fft_inverse(p));

        let mut table = vec![Complex64::new(0.0, 0.0); padded[0] * padded[1]];
        for k0 in 0..padded[0] {
            let m0 = signed_offset(k0, padded[0]);
            if m0.unsigned_abs() >= shape[0] {
                continue;
            }
            for k1 in 0..padded[1] {
                let m1 = signed_offset(k1, padded[1]);
                if m1.unsigned_abs() >= shape[1] {
                    continue;
                }
                table[k0 * padded[1] + k1] = Complex64::new(phi_at(m0, m1), 0.0);
            }
        }
        let mut conv = FftConvolver {
            shape,
            padded,
            spectrum: Vec::new(),
            forward,
            inverse,
        };
        conv.transform(&mut table, false);
        conv.spectrum = table;
        conv
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let plans = if inverse {
            &self.inverse
        } else {
            &self.forward
        };
        let [p0, p1] = self.padded;
        if p1 > 1 {
            plans[1].process(data);
        }
        if p0 > 1 {
            if p1 == 1 {
                plans[0].process(data);
            } else {
                let mut column = vec![Complex64::new(0.0, 0.0); p0];
                for c in 0..p1 {
                    for r in 0..p0 {
                        column[r] = data[r * p1 + c];
                    }
                    plans[0].process(&mut column);
                    for r in 0..p0 {
                        data[r * p1 + c] = column[r];
                    }
                }
            }
        }
    }

    /// `out_i = Σ_j phi(x_i - x_j) v_j`.
    pub(crate) fn convolve(&self, v: &[f64], out: &mut [f64]) {
        let [n0, n1] = self.shape;
        let [p0, p1] = self.padded;
        let mut buf = vec![Complex64::new(0.0, 0.0); p0 * p1];
        for i0 in 0..n0 {
            for i1 in 0..n1 {
                buf[i0 * p1 + i1].re = v[i0 * n1 + i1];
            }
        }
        self.transform(&mut buf, false);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.transform(&mut buf, true);
        let scale = 1.0 / (p0 * p1) as f64;
        for i0 in 0..n0 {
            for i1 in 0..n1 {
                out[i0 * n1 + i1] = buf[i0 * p1 + i1].re * scale;
            }
        }
    }
}
