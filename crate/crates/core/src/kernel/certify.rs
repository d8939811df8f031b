//! Positivity certificates for the quadratic form
//! `Q(f) = ∫∫ K(x, y) f(x) f(y) dx dy`.
//!
//! Two routes are provided. The eigen route works on the discrete form
//! `fᵀ D_w K D_w f` and applies to any sampled kernel. The Fourier route
//! samples a convolution profile on a symmetric window and checks the sign
//! of its discrete transform; a non-negative transform makes the form
//! non-negative on every bounded domain (zero-extend `f`).

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{Kernel, KernelProfile};
use crate::error::{Error, Result};

/// Relative tolerance applied when none is given explicitly.
pub const DEFAULT_CERTIFICATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMethod {
    Eigen,
    Bochner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Positive,
    NotPositive,
    Inconclusive,
}

impl CertificateMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CertificateMethod::Eigen => "eigen",
            CertificateMethod::Bochner => "bochner",
        }
    }
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Positive => "positive",
            Verdict::NotPositive => "not_positive",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of a positivity check.
///
/// `tolerance` is the absolute threshold that was applied to `witness`:
/// the verdict is positive exactly when `witness >= -tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityCertificate {
    pub method: CertificateMethod,
    pub verdict: Verdict,
    pub witness: f64,
    pub tolerance: f64,
    /// Grid nodes (eigen) or samples per axis (Fourier).
    pub grid_n: usize,
    /// Unit eigenvector with `fᵀ M f = witness`, on a `not_positive` eigen verdict.
    pub violating_direction: Option<Vec<f64>>,
    /// Angular frequency at which the transform is smallest.
    pub witness_frequency: Option<f64>,
}

fn verdict_for(witness: f64, tolerance: f64) -> Verdict {
    if witness >= -tolerance {
        Verdict::Positive
    } else {
        Verdict::NotPositive
    }
}

/// Minimum eigenvalue of the symmetric part of `M = D_w K D_w`.
///
/// Positive when `λ_min >= -tol · max(1, ‖M‖_∞)`.
pub fn certify_positivity_eigen(kernel: &Kernel, tol: f64) -> PositivityCertificate {
    let w = kernel.grid().weights();
    let n = w.len();
    let k = kernel.matrix();
    let m = DMatrix::from_fn(n, n, |i, j| w[i] * k[(i, j)] * w[j]);
    let norm_inf = (0..n)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let tolerance = tol * norm_inf.max(1.0);
    let sym = (&m + m.transpose()) * 0.5;

    let inconclusive = PositivityCertificate {
        method: CertificateMethod::Eigen,
        verdict: Verdict::Inconclusive,
        witness: f64::NAN,
        tolerance,
        grid_n: n,
        violating_direction: None,
        witness_frequency: None,
    };
    let Some(eig) = SymmetricEigen::try_new(sym, f64::EPSILON, 0) else {
        return inconclusive;
    };
    let Some((idx, &lambda_min)) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
    else {
        return inconclusive;
    };
    if !lambda_min.is_finite() {
        return inconclusive;
    }
    let verdict = verdict_for(lambda_min, tolerance);
    let violating_direction = (verdict == Verdict::NotPositive)
        .then(|| eig.eigenvectors.column(idx).iter().copied().collect());
    PositivityCertificate {
        method: CertificateMethod::Eigen,
        verdict,
        witness: lambda_min,
        tolerance,
        grid_n: n,
        violating_direction,
        witness_frequency: None,
    }
}

fn window_samples(n: usize, half_width: f64) -> Result<f64> {
    if n < 8 || !n.is_multiple_of(2) {
        return Err(Error::InvalidProfile(format!(
            "sample count must be even and at least 8, got {n}"
        )));
    }
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::InvalidProfile(format!(
            "window half-width must be positive, got {half_width}"
        )));
    }
    Ok(2.0 * half_width / n as f64)
}

/// Periodic layout position `k` to signed sample index.
fn signed(k: usize, n: usize) -> isize {
    if k < n / 2 {
        k as isize
    } else {
        k as isize - n as isize
    }
}

fn check_edge(profile: &KernelProfile, half_width: f64, peak: f64, tol: f64) -> Result<()> {
    let edge_value = profile
        .eval(half_width)
        .abs()
        .max(profile.eval(-half_width).abs());
    if edge_value >= tol * peak {
        return Err(Error::WindowTooSmall {
            half_width,
            edge_value,
        });
    }
    Ok(())
}

fn summarize(
    spectrum: &[Complex64],
    frequency: impl Fn(usize) -> f64,
    scale: f64,
    samples: usize,
    tol: f64,
) -> Result<PositivityCertificate> {
    let peak = spectrum.iter().fold(0.0f64, |m, c| m.max(c.norm())) * scale;
    let tolerance = tol * peak;
    let worst_imag = spectrum.iter().fold(0.0f64, |m, c| m.max(c.im.abs())) * scale;
    if worst_imag >= tolerance.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidProfile(format!(
            "profile is not even: imaginary part {worst_imag:e} of its transform exceeds {tolerance:e}"
        )));
    }
    let (idx, min_re) = spectrum
        .iter()
        .enumerate()
        .map(|(k, c)| (k, c.re * scale))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty spectrum");
    Ok(PositivityCertificate {
        method: CertificateMethod::Bochner,
        verdict: verdict_for(min_re, tolerance),
        witness: min_re,
        tolerance,
        grid_n: samples,
        violating_direction: None,
        witness_frequency: Some(frequency(idx)),
    })
}

/// Fourier certificate in 1D.
///
/// Samples `phi` at `z_m = m · 2h/n` for `m = -n/2 .. n/2-1`, transforms, and
/// reports the minimum real part, scaled by the sample spacing so that it
/// approximates the continuous transform. Positive when the minimum is at
/// least `-tol · max|phî|`.
pub fn certify_positivity_bochner(
    profile: &KernelProfile,
    n_samples: usize,
    half_width: f64,
    tol: f64,
) -> Result<PositivityCertificate> {
    let dz = window_samples(n_samples, half_width)?;
    let mut data: Vec<Complex64> = (0..n_samples)
        .map(|k| Complex64::new(profile.eval(signed(k, n_samples) as f64 * dz), 0.0))
        .collect();
    if let Some(v) = data.iter().find(|c| !c.re.is_finite()) {
        return Err(Error::InvalidProfile(format!("non-finite sample {}", v.re)));
    }
    let peak = data.iter().fold(0.0f64, |m, c| m.max(c.re.abs()));
    check_edge(profile, half_width, peak, tol)?;
    FftPlanner::new()
        .plan_fft_forward(n_samples)
        .process(&mut data);
    let dw = 2.0 * PI / (n_samples as f64 * dz);
    summarize(
        &data,
        |k| (signed(k, n_samples) as f64 * dw).abs(),
        dz,
        n_samples,
        tol,
    )
}

/// Fourier certificate for a radial profile in 2D, on the square window
/// `[-h, h]²` with `n_samples` points per axis.
pub fn certify_positivity_bochner_2d(
    profile: &KernelProfile,
    n_samples: usize,
    half_width: f64,
    tol: f64,
) -> Result<PositivityCertificate> {
    let dz = window_samples(n_samples, half_width)?;
    let n = n_samples;
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for k0 in 0..n {
        let x = signed(k0, n) as f64 * dz;
        for k1 in 0..n {
            let y = signed(k1, n) as f64 * dz;
            data[k0 * n + k1].re = profile.eval((x * x + y * y).sqrt());
        }
    }
    let peak = data.iter().fold(0.0f64, |m, c| m.max(c.re.abs()));
    check_edge(profile, half_width, peak, tol)?;

    let fft = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut data);
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            column[r] = data[r * n + c];
        }
        fft.process(&mut column);
        for r in 0..n {
            data[r * n + c] = column[r];
        }
    }
    let dw = 2.0 * PI / (n as f64 * dz);
    summarize(
        &data,
        |k| {
            let a = signed(k / n, n) as f64 * dw;
            let b = signed(k % n, n) as f64 * dw;
            (a * a + b * b).sqrt()
        },
        dz * dz,
        n,
        tol,
    )
}

/// Runs the Fourier certificate matching the kernel's grid dimension.
pub fn certify_kernel_bochner(
    kernel: &Kernel,
    n_samples: usize,
    half_width: Option<f64>,
    tol: f64,
) -> Result<PositivityCertificate> {
    let profile = kernel.profile().ok_or_else(|| {
        Error::InvalidKernel("the Fourier certificate needs a convolution kernel".into())
    })?;
    let half_width = match half_width {
        Some(h) => h,
        None => profile.default_half_width(tol).ok_or_else(|| {
            Error::InvalidProfile("custom profiles need an explicit window half-width".into())
        })?,
    };
    if kernel.grid().dim() == 2 {
        certify_positivity_bochner_2d(profile, n_samples, half_width, tol)
    } else {
        certify_positivity_bochner(profile, n_samples, half_width, tol)
    }
}
