//! The interaction kernel `K(x, y)`: sampling, normalization, application
//! `K[u]_i = Σ_j w_j K_ij u_j`, and positivity certification.

mod certify;
mod fft;
mod profile;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use certify::{
    certify_kernel_bochner, certify_positivity_bochner, certify_positivity_bochner_2d,
    certify_positivity_eigen, CertificateMethod, PositivityCertificate, Verdict,
    DEFAULT_CERTIFICATION_TOLERANCE,
};
pub use profile::{KernelFamily, KernelProfile, MEXICAN_HAT_WIDTH_RATIO};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use fft::FftConvolver;

/// Node count from which [`Kernel::apply`] prefers the FFT path.
pub const FFT_THRESHOLD: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// Weighted column sums equal one.
    Columns,
    /// Weighted row and column sums equal one.
    Balanced,
}

/// Which evaluation route [`Kernel::apply`] takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyPath {
    Auto,
    Dense,
    Fft,
}

/// `K = diag(row_scale) Φ diag(col_scale)` with `Φ_ij = phi(x_i - x_j)`.
#[derive(Debug, Clone)]
struct Convolution {
    profile: KernelProfile,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    fft: FftConvolver,
}

/// A discretized kernel on a grid.
#[derive(Debug, Clone)]
pub struct Kernel {
    grid: Grid,
    matrix: DMatrix<f64>,
    convolution: Option<Convolution>,
    normalization: Normalization,
    path: ApplyPath,
}

fn check_finite(matrix: &DMatrix<f64>) -> Result<()> {
    if let Some((idx, v)) = matrix.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        let n = matrix.nrows();
        return Err(Error::InvalidKernel(format!(
            "non-finite entry {v} at ({}, {})",
            idx % n,
            idx / n
        )));
    }
    Ok(())
}

impl Kernel {
    /// Samples `K_ij = k(x_i, x_j)` for an arbitrary kernel function.
    pub fn sample_general(grid: &Grid, k: impl Fn(&[f64], &[f64]) -> f64) -> Result<Self> {
        let n = grid.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| k(grid.node(i), grid.node(j)));
        check_finite(&matrix)?;
        Ok(Kernel {
            grid: grid.clone(),
            matrix,
            convolution: None,
            normalization: Normalization::None,
            path: ApplyPath::Auto,
        })
    }

    /// Samples `K_ij = phi(x_i - x_j)`, using the Euclidean offset length in 2D.
    pub fn sample_convolution(grid: &Grid, profile: KernelProfile) -> Result<Self> {
        let h = grid.spacing().to_vec();
        let phi_at = |m0: isize, m1: isize| -> f64 {
            if h.len() == 1 {
                profile.eval(m0 as f64 * h[0])
            } else {
                let dx = m0 as f64 * h[0];
                let dy = m1 as f64 * h[1];
                profile.eval((dx * dx + dy * dy).sqrt())
            }
        };
        let n = grid.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            let a = grid.multi_index(i);
            let b = grid.multi_index(j);
            phi_at(a[0] as isize - b[0] as isize, a[1] as isize - b[1] as isize)
        });
        check_finite(&matrix)?;
        let fft = FftConvolver::new(grid, phi_at);
        Ok(Kernel {
            grid: grid.clone(),
            matrix,
            convolution: Some(Convolution {
                profile,
                row_scale: vec![1.0; n],
                col_scale: vec![1.0; n],
                fft,
            }),
            normalization: Normalization::None,
            path: ApplyPath::Auto,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Dense entries `K_ij` (without quadrature weights).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn is_normalized(&self) -> bool {
        self.normalization != Normalization::None
    }

    pub fn is_convolution(&self) -> bool {
        self.convolution.is_some()
    }

    pub fn profile(&self) -> Option<&KernelProfile> {
        self.convolution.as_ref().map(|c| &c.profile)
    }

    pub fn family(&self) -> KernelFamily {
        self.profile().map_or(KernelFamily::Custom, |p| p.family())
    }

    pub fn with_apply_path(mut self, path: ApplyPath) -> Self {
        self.path = path;
        self
    }

    /// Largest `|K_ij - K_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in (j + 1)..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry() == 0.0
    }

    pub fn min_entry(&self) -> f64 {
        self.matrix.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.matrix.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Weighted column sums `Σ_i w_i K_ij`.
    pub fn column_sums(&self) -> Vec<f64> {
        let w = DVector::from_column_slice(self.grid.weights());
        (self.matrix.transpose() * w).iter().copied().collect()
    }

    /// Weighted row sums `Σ_j w_j K_ij`, i.e. `K[1]`.
    pub fn row_sums(&self) -> Vec<f64> {
        let w = DVector::from_column_slice(self.grid.weights());
        (&self.matrix * w).iter().copied().collect()
    }

    fn rescale(&self, rows: &[f64], cols: &[f64]) -> Kernel {
        let mut out = self.clone();
        for (j, c) in cols.iter().enumerate() {
            for (i, r) in rows.iter().enumerate() {
                out.matrix[(i, j)] = r * self.matrix[(i, j)] * c;
            }
        }
        if let Some(conv) = out.convolution.as_mut() {
            for (s, r) in conv.row_scale.iter_mut().zip(rows) {
                *s *= r;
            }
            for (s, c) in conv.col_scale.iter_mut().zip(cols) {
                *s *= c;
            }
        }
        out
    }

    /// Returns `c K`; the normalization flag is cleared unless `c == 1`.
    pub fn scaled(&self, c: f64) -> Kernel {
        let n = self.matrix.nrows();
        let mut out = self.rescale(&vec![1.0; n], &vec![c; n]);
        if c != 1.0 {
            out.normalization = Normalization::None;
        }
        out
    }

    /// Rescales every column so that `Σ_i w_i K_ij = 1`.
    pub fn normalize_columns(&self) -> Result<Kernel> {
        let sums = self.column_sums();
        if let Some((column, &sum)) = sums
            .iter()
            .enumerate()
            .find(|(_, s)| !(**s > f64::MIN_POSITIVE))
        {
            return Err(Error::DegenerateKernel { column, sum });
        }
        let n = sums.len();
        let cols: Vec<f64> = sums.iter().map(|s| 1.0 / s).collect();
        let mut out = self.rescale(&vec![1.0; n], &cols);
        out.normalization = Normalization::Columns;
        Ok(out)
    }

    /// Sinkhorn balancing until weighted row and column sums are within
    /// `tol` of one.
    ///
    /// Symmetric inputs use the symmetric update `x <- x / sqrt(x ∘ K W x)`,
    /// so the result is exactly symmetric; other inputs alternate row and
    /// column scalings.
    pub fn symmetrize_and_normalize(&self, max_iterations: usize, tol: f64) -> Result<Kernel> {
        if self.min_entry() < 0.0 {
            return Err(Error::InvalidKernel(
                "balancing requires an entrywise non-negative kernel".into(),
            ));
        }
        let w = self.grid.weights();
        let n = w.len();
        let base = &self.matrix;
        for (j, s) in self.column_sums().into_iter().enumerate() {
            if s <= 0.0 {
                return Err(Error::DegenerateKernel { column: j, sum: s });
            }
        }
        if let Some((row, s)) = self
            .row_sums()
            .into_iter()
            .enumerate()
            .find(|(_, s)| *s <= 0.0)
        {
            return Err(Error::DegenerateKernel {
                column: row,
                sum: s,
            });
        }

        let symmetric = self.is_symmetric();
        let mut rows = vec![1.0; n];
        let mut cols = vec![1.0; n];
        let mut scratch = vec![0.0; n];
        let weighted = |scale: &[f64], out: &mut [f64]| {
            for ((o, s), wi) in out.iter_mut().zip(scale).zip(w) {
                *o = s * wi;
            }
        };

        let residual_of = |rows: &[f64], cols: &[f64]| -> f64 {
            let mut worst = 0.0f64;
            let mut col_acc = vec![0.0; n];
            for j in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    let k = rows[i] * base[(i, j)] * cols[j];
                    acc += w[i] * k;
                }
                col_acc[j] = acc;
            }
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += rows[i] * base[(i, j)] * cols[j] * w[j];
                }
                worst = worst.max((acc - 1.0).abs());
            }
            col_acc.iter().fold(worst, |m, c| m.max((c - 1.0).abs()))
        };

        let mut residual = f64::INFINITY;
        for iteration in 0..max_iterations {
            if symmetric {
                // row sums of diag(x) B diag(x) W
                weighted(&rows, &mut scratch);
                let bx = base * DVector::from_column_slice(&scratch);
                let mut worst = 0.0f64;
                for i in 0..n {
                    let sum = rows[i] * bx[i];
                    worst = worst.max((sum - 1.0).abs());
                    rows[i] /= sum.sqrt();
                }
                cols.copy_from_slice(&rows);
                residual = worst;
            } else {
                weighted(&cols, &mut scratch);
                let bc = base * DVector::from_column_slice(&scratch);
                for i in 0..n {
                    rows[i] = 1.0 / bc[i];
                }
                weighted(&rows, &mut scratch);
                let btr = base.tr_mul(&DVector::from_column_slice(&scratch));
                for j in 0..n {
                    cols[j] = 1.0 / btr[j];
                }
                // columns are exact after the column update; measure the rows
                weighted(&cols, &mut scratch);
                let bc = base * DVector::from_column_slice(&scratch);
                residual = (0..n).fold(0.0f64, |m, i| m.max((rows[i] * bc[i] - 1.0).abs()));
            }
            if residual <= 0.5 * tol || (iteration % 16 == 15 && residual <= tol) {
                let exact = residual_of(&rows, &cols);
                if exact <= tol {
                    let mut out = self.rescale(&rows, &cols);
                    out.normalization = Normalization::Balanced;
                    return Ok(out);
                }
                residual = exact;
            }
        }
        let exact = residual_of(&rows, &cols);
        if exact <= tol {
            let mut out = self.rescale(&rows, &cols);
            out.normalization = Normalization::Balanced;
            return Ok(out);
        }
        Err(Error::BalancingFailure {
            iterations: max_iterations,
            residual: residual.min(exact),
        })
    }

    /// `K[u]_i = Σ_j w_j K_ij u_j`.
    pub fn apply(&self, field: &Field) -> Result<Field> {
        self.check_field(field)?;
        let mut out = vec![0.0; self.grid.len()];
        self.apply_into(field.values(), &mut out);
        Ok(Field::from_parts(self.grid.clone(), out))
    }

    pub fn apply_dense(&self, field: &Field) -> Result<Field> {
        self.check_field(field)?;
        let mut out = vec![0.0; self.grid.len()];
        self.apply_dense_into(field.values(), &mut out);
        Ok(Field::from_parts(self.grid.clone(), out))
    }

    /// FFT route; fails for kernels without convolution structure.
    pub fn apply_fft(&self, field: &Field) -> Result<Field> {
        self.check_field(field)?;
        if self.convolution.is_none() {
            return Err(Error::InvalidKernel(
                "the FFT path needs a convolution kernel".into(),
            ));
        }
        let mut out = vec![0.0; self.grid.len()];
        self.apply_fft_into(field.values(), &mut out);
        Ok(Field::from_parts(self.grid.clone(), out))
    }

    fn check_field(&self, field: &Field) -> Result<()> {
        if field.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        self.grid.check_len(field.values())
    }

    fn uses_fft(&self) -> bool {
        match self.path {
            ApplyPath::Dense => false,
            ApplyPath::Fft => self.convolution.is_some(),
            ApplyPath::Auto => self.convolution.is_some() && self.grid.len() >= FFT_THRESHOLD,
        }
    }

    pub(crate) fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        if self.uses_fft() {
            self.apply_fft_into(u, out)
        } else {
            self.apply_dense_into(u, out)
        }
    }

    fn apply_dense_into(&self, u: &[f64], out: &mut [f64]) {
        let v: Vec<f64> = u
            .iter()
            .zip(self.grid.weights())
            .map(|(a, w)| a * w)
            .collect();
        let r = &self.matrix * DVector::from_vec(v);
        out.copy_from_slice(r.as_slice());
    }

    fn apply_fft_into(&self, u: &[f64], out: &mut [f64]) {
        let conv = self.convolution.as_ref().expect("checked by caller");
        let v: Vec<f64> = u
            .iter()
            .zip(self.grid.weights())
            .zip(&conv.col_scale)
            .map(|((a, w), c)| a * w * c)
            .collect();
        conv.fft.convolve(&v, out);
        for (o, r) in out.iter_mut().zip(&conv.row_scale) {
            *o *= r;
        }
    }
}
