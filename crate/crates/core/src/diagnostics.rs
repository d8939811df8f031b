//! Lyapunov functional, dissipation, the decay identity, and linear stability
//! of the homogeneous state `u ≡ 1`.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::kernel::Kernel;

/// `H(w) = w - 1 - ln w`, evaluated without cancellation near `w = 1`.
pub fn h_function(w: f64) -> f64 {
    let d = w - 1.0;
    if d.abs() < 1e-3 {
        // d - ln(1 + d) = d²/2 - d³/3 + d⁴/4 - ...
        let mut term = d * d;
        let mut sum = 0.0;
        for k in 2..=8 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * term / k as f64;
            term *= d;
        }
        sum.max(0.0)
    } else {
        (d - d.ln_1p()).max(0.0)
    }
}

fn check_positive(values: &[f64]) -> Result<()> {
    match values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        Some((node, &value)) => Err(Error::NonPositive { node, value }),
        None => Ok(()),
    }
}

/// `V(u) = Σ_i w_i H(u_i)`.
pub fn lyapunov_value(u: &Field) -> Result<f64> {
    check_positive(u.values())?;
    Ok(lyapunov_unchecked(u.grid(), u.values()))
}

fn lyapunov_unchecked(grid: &Grid, u: &[f64]) -> f64 {
    grid.weights()
        .iter()
        .zip(u)
        .map(|(w, &v)| w * h_function(v))
        .sum()
}

/// Parts of `D = -dV/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dissipation {
    pub total: f64,
    pub grad: f64,
    pub kernel: f64,
}

/// `Σ_e w_e (Δu/h)² / ū_e²`, with `ū_e` the edge-midpoint average.
pub fn gradient_dissipation(u: &Field) -> Result<f64> {
    check_positive(u.values())?;
    Ok(gradient_unchecked(u.grid(), u.values()))
}

fn gradient_unchecked(grid: &Grid, u: &[f64]) -> f64 {
    let h = grid.spacing();
    let mut total = 0.0;
    grid.for_each_edge(|a, b, axis, w| {
        let slope = (u[b] - u[a]) / h[axis];
        let mid = 0.5 * (u[a] + u[b]);
        total += w * slope * slope / (mid * mid);
    });
    total
}

/// `D_grad + μ Σ_ij w_i w_j K_ij (1 - u_i)(1 - u_j)`.
pub fn dissipation(u: &Field, kernel: &Kernel, mu: f64) -> Result<Dissipation> {
    check_positive(u.values())?;
    if !kernel.is_normalized() {
        return Err(Error::UnnormalizedKernel);
    }
    let deficit = u.map(|v| 1.0 - v);
    let k_deficit = kernel.apply(&deficit)?;
    Ok(dissipation_parts(
        u.grid(),
        u.values(),
        k_deficit.values(),
        mu,
    ))
}

/// Local-limit analogue, with `K` acting as the identity.
pub fn dissipation_local(u: &Field, mu: f64) -> Result<Dissipation> {
    check_positive(u.values())?;
    let deficit: Vec<f64> = u.values().iter().map(|v| 1.0 - v).collect();
    Ok(dissipation_parts(u.grid(), u.values(), &deficit, mu))
}

/// `k_deficit` is `K[1 - u]` (or `1 - u` in the local limit).
pub(crate) fn dissipation_parts(grid: &Grid, u: &[f64], k_deficit: &[f64], mu: f64) -> Dissipation {
    let grad = gradient_unchecked(grid, u);
    let form: f64 = grid
        .weights()
        .iter()
        .zip(u)
        .zip(k_deficit)
        .map(|((w, v), kd)| w * (1.0 - v) * kd)
        .sum();
    let kernel = mu * form;
    Dissipation {
        total: grad + kernel,
        grad,
        kernel,
    }
}

pub fn sup_distance_to_one(u: &Field) -> f64 {
    u.values()
        .iter()
        .fold(0.0f64, |m, v| m.max((v - 1.0).abs()))
}

/// One time level of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "D_total")]
    pub d_total: f64,
    #[serde(rename = "D_grad")]
    pub d_grad: f64,
    #[serde(rename = "D_kernel")]
    pub d_kernel: f64,
    pub sup_dist_one: f64,
    pub mass: f64,
    pub min_u: f64,
    pub dt_used: f64,
    /// Dissipation at the average of this field and the previous one.
    /// Not serialized.
    #[serde(skip)]
    pub d_mid: Option<f64>,
}

impl TraceRow {
    pub(crate) fn measure(
        grid: &Grid,
        t: f64,
        u: &[f64],
        d: Dissipation,
        dt_used: f64,
        d_mid: Option<f64>,
    ) -> Self {
        TraceRow {
            t,
            v: lyapunov_unchecked(grid, u),
            d_total: d.total,
            d_grad: d.grad,
            d_kernel: d.kernel,
            sup_dist_one: u.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs())),
            mass: grid.integrate_values(u),
            min_u: u.iter().copied().fold(f64::INFINITY, f64::min),
            dt_used,
            d_mid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub field: Field,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub scheme: String,
    pub implicit_solver: String,
    pub local_mode: bool,
    pub mu: f64,
    pub kernel_family: String,
    pub kernel_normalization: String,
    pub kernel_notes: Vec<String>,
    pub certificates: Vec<String>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Time series of diagnostics plus periodic snapshots.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    rows: Vec<TraceRow>,
    pub snapshots: Vec<Snapshot>,
    pub metadata: TraceMetadata,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a trace from rows; times must increase strictly.
    pub fn from_rows(rows: Vec<TraceRow>) -> Result<Self> {
        let mut trace = Trace::new();
        for row in rows {
            trace.push(row)?;
        }
        Ok(trace)
    }

    pub fn push(&mut self, row: TraceRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(row.t > last.t) {
                return Err(Error::NumericalFailure(format!(
                    "trace times must increase: {} after {}",
                    row.t, last.t
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Largest `V_{k+1} - V_k` over consecutive rows.
    pub fn max_lyapunov_increase(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|p| p[1].v - p[0].v)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `|(V_{k+1} - V_k)/dt + D_{k+1/2}|` between rows `k` and `k + 1`.
///
/// `D_{k+1/2}` is the dissipation at the average of the two fields, recorded
/// by the simulation. Traces loaded from disk do not carry it, and the
/// average `(D_k + D_{k+1})/2` is used instead.
pub fn decay_identity_residual(trace: &Trace, step_index: usize) -> Result<f64> {
    let rows = trace.rows();
    if step_index + 1 >= rows.len() {
        return Err(Error::IndexOutOfRange {
            index: step_index,
            len: rows.len().saturating_sub(1),
        });
    }
    let (a, b) = (&rows[step_index], &rows[step_index + 1]);
    let dt = b.t - a.t;
    let d_mid = b.d_mid.unwrap_or(0.5 * (a.d_total + b.d_total));
    Ok(((b.v - a.v) / dt + d_mid).abs())
}

/// Jacobian of `u ↦ Δu + μ(1 - K[u])u` at `u ≡ 1`:
/// `J = L - μ K W + μ diag(1 - K[1])`.
pub fn linearization_matrix(kernel: &Kernel, mu: f64) -> DMatrix<f64> {
    let grid = kernel.grid();
    let w = grid.weights();
    let k1 = kernel.row_sums();
    let k = kernel.matrix();
    let mut j = grid.laplacian_matrix().to_dense();
    let n = w.len();
    for c in 0..n {
        for r in 0..n {
            j[(r, c)] -= mu * k[(r, c)] * w[c];
        }
    }
    for i in 0..n {
        j[(i, i)] += mu * (1.0 - k1[i]);
    }
    j
}

/// Local-limit Jacobian `J = L - μ I`.
pub fn linearization_matrix_local(grid: &Grid, mu: f64) -> DMatrix<f64> {
    let mut j = grid.laplacian_matrix().to_dense();
    for i in 0..grid.len() {
        j[(i, i)] -= mu;
    }
    j
}

/// Largest real part over the spectrum of a square matrix.
pub fn spectral_abscissa(j: &DMatrix<f64>) -> Result<f64> {
    if !j.is_square() {
        return Err(Error::Shape {
            expected: j.nrows() * j.nrows(),
            actual: j.len(),
        });
    }
    let schur = Schur::try_new(j.clone(), f64::EPSILON, 100 * j.nrows().max(10))
        .ok_or_else(|| Error::NumericalFailure("Schur decomposition did not converge".into()))?;
    let eig = schur.complex_eigenvalues();
    Ok(eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Spectral abscissa of a `J` for which `W J` is symmetric, through the
/// symmetric similarity `W^{1/2} J W^{-1/2}`.
pub fn spectral_abscissa_weighted_symmetric(grid: &Grid, j: &DMatrix<f64>) -> Result<f64> {
    let s: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let n = s.len();
    let mut sym = DMatrix::from_fn(n, n, |r, c| s[r] * j[(r, c)] / s[c]);
    sym = (&sym + sym.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericalFailure("symmetric eigensolver did not converge".into()))?;
    Ok(eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Stability indicator of `u ≡ 1`: uses the symmetric route when the kernel is
/// symmetric and the general Schur route otherwise.
pub fn linear_stability(kernel: &Kernel, mu: f64) -> Result<f64> {
    let j = linearization_matrix(kernel, mu);
    if kernel.asymmetry() <= 1e-14 * kernel.max_abs_entry() {
        spectral_abscissa_weighted_symmetric(kernel.grid(), &j)
    } else {
        spectral_abscissa(&j)
    }
}

/// The Neumann cosine mode `cos(kπ(x - lo)/(hi - lo))` along `axis`.
pub fn cosine_mode(grid: &Grid, k: usize, axis: usize) -> Field {
    let (lo, hi) = grid.extents()[axis];
    Field::from_fn(grid, |p| {
        (k as f64 * std::f64::consts::PI * (p[axis] - lo) / (hi - lo)).cos()
    })
}

/// Among the non-constant cosine modes along `axis`, the one with the
/// largest weighted Rayleigh quotient `<c, J c>_W / <c, c>_W`.
pub fn most_unstable_cosine_mode(grid: &Grid, j: &DMatrix<f64>, axis: usize) -> (usize, f64) {
    let n = grid.counts()[axis];
    let w = grid.weights();
    (1..n)
        .map(|k| {
            let c = cosine_mode(grid, k, axis);
            let cv = nalgebra::DVector::from_column_slice(c.values());
            let jc = j * &cv;
            let num: f64 = (0..w.len()).map(|i| w[i] * cv[i] * jc[i]).sum();
            let den: f64 = (0..w.len()).map(|i| w[i] * cv[i] * cv[i]).sum();
            (k, num / den)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least two nodes per axis")
}
