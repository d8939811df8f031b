use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Gaussian,
    Tophat,
    Exponential,
    MexicanHat,
    Custom,
}

impl KernelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Tophat => "tophat",
            KernelFamily::Exponential => "exponential",
            KernelFamily::MexicanHat => "mexican_hat",
            KernelFamily::Custom => "custom",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Width of the subtracted gaussian of the mexican hat, in units of `sigma`.
pub const MEXICAN_HAT_WIDTH_RATIO: f64 = 2.0;

/// Relative slack on the tophat support so that offsets computed in floating
/// point land on the intended side of `|z| = sigma`.
const TOPHAT_SLACK: f64 = 1e-12;

/// Convolution profile `phi`, evaluated at a signed offset in 1D and at the
/// Euclidean distance in 2D. Peak value is 1 before normalization.
#[derive(Clone)]
pub struct KernelProfile {
    family: KernelFamily,
    sigma: f64,
    inhibition: f64,
    custom: Option<ProfileFn>,
}

impl fmt::Debug for KernelProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("KernelProfile");
        s.field("family", &self.family).field("sigma", &self.sigma);
        if self.family == KernelFamily::MexicanHat {
            s.field("inhibition", &self.inhibition);
        }
        s.finish()
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidProfile(format!(
            "length scale must be positive and finite, got {sigma}"
        )))
    }
}

impl KernelProfile {
    fn builtin(family: KernelFamily, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(KernelProfile {
            family,
            sigma,
            inhibition: 0.0,
            custom: None,
        })
    }

    /// `exp(-z^2 / (2 sigma^2))`.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::builtin(KernelFamily::Gaussian, sigma)
    }

    /// Indicator of `|z| <= sigma`. Not Lipschitz.
    pub fn tophat(sigma: f64) -> Result<Self> {
        Self::builtin(KernelFamily::Tophat, sigma)
    }

    /// `exp(-|z| / sigma)`.
    pub fn exponential(sigma: f64) -> Result<Self> {
        Self::builtin(KernelFamily::Exponential, sigma)
    }

    /// `exp(-z^2/(2 sigma^2)) - inhibition * exp(-z^2/(2 (2 sigma)^2))`.
    ///
    /// Signed for any `inhibition > 0`; in 1D its transform is negative near
    /// the origin once `inhibition > 1/2`.
    pub fn mexican_hat(sigma: f64, inhibition: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if !(inhibition.is_finite() && inhibition >= 0.0) {
            return Err(Error::InvalidProfile(format!(
                "inhibition ratio must be finite and non-negative, got {inhibition}"
            )));
        }
        Ok(KernelProfile {
            family: KernelFamily::MexicanHat,
            sigma,
            inhibition,
            custom: None,
        })
    }

    /// A user profile; `sigma` is only used as a reporting scale.
    pub fn custom(sigma: f64, phi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(KernelProfile {
            family: KernelFamily::Custom,
            sigma,
            inhibition: 0.0,
            custom: Some(Arc::new(phi)),
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn inhibition(&self) -> f64 {
        self.inhibition
    }

    pub fn eval(&self, z: f64) -> f64 {
        let s = self.sigma;
        match self.family {
            KernelFamily::Gaussian => (-z * z / (2.0 * s * s)).exp(),
            KernelFamily::Tophat => {
                if z.abs() <= s * (1.0 + TOPHAT_SLACK) {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::Exponential => (-z.abs() / s).exp(),
            KernelFamily::MexicanHat => {
                let wide = MEXICAN_HAT_WIDTH_RATIO * s;
                (-z * z / (2.0 * s * s)).exp()
                    - self.inhibition * (-z * z / (2.0 * wide * wide)).exp()
            }
            KernelFamily::Custom => (self
                .custom
                .as_ref()
                .expect("custom profile without closure"))(z),
        }
    }

    /// Whether the profile meets the Lipschitz regularity assumption.
    /// Custom profiles are not checked and report `None`.
    pub fn is_lipschitz(&self) -> Option<bool> {
        match self.family {
            KernelFamily::Tophat => Some(false),
            KernelFamily::Custom => None,
            _ => Some(true),
        }
    }

    /// Whether the profile is entrywise non-negative (required by balancing).
    pub fn is_nonnegative(&self) -> Option<bool> {
        match self.family {
            KernelFamily::MexicanHat => Some(self.inhibition == 0.0),
            KernelFamily::Custom => None,
            _ => Some(true),
        }
    }

    /// Whether the profile is strictly positive everywhere.
    pub fn is_strictly_positive(&self) -> Option<bool> {
        match self.family {
            KernelFamily::Gaussian | KernelFamily::Exponential => Some(true),
            KernelFamily::Tophat => Some(false),
            KernelFamily::MexicanHat => Some(false),
            KernelFamily::Custom => None,
        }
    }

    /// Radius beyond which `|phi| < tol`, for the built-in families.
    pub fn negligible_radius(&self, tol: f64) -> Option<f64> {
        let s = self.sigma;
        let log_inv = (1.0 / tol).ln().max(0.0);
        match self.family {
            KernelFamily::Gaussian => Some(s * (2.0 * log_inv).sqrt()),
            KernelFamily::Exponential => Some(s * log_inv),
            KernelFamily::Tophat => Some(s),
            KernelFamily::MexicanHat => {
                let wide = MEXICAN_HAT_WIDTH_RATIO * s;
                let amp = self.inhibition.max(1.0);
                Some(wide * (2.0 * (amp / tol).ln().max(0.0)).sqrt())
            }
            KernelFamily::Custom => None,
        }
    }

    /// A window half-width suitable for the Fourier certificate at `tol`.
    /// At least `50 sigma`, so the frequency grid spacing `pi / half_width`
    /// resolves features of the transform on the `1 / sigma` scale.
    pub fn default_half_width(&self, tol: f64) -> Option<f64> {
        self.negligible_radius(tol)
            .map(|r| (1.25 * r).max(50.0 * self.sigma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        let g = KernelProfile::gaussian(0.1).unwrap();
        assert_eq!(g.eval(0.0), 1.0);
        assert!((g.eval(0.1) - (-0.5f64).exp()).abs() < 1e-15);
        let t = KernelProfile::tophat(0.3).unwrap();
        assert_eq!(t.eval(0.25), 1.0);
        assert_eq!(t.eval(-0.3), 1.0);
        assert_eq!(t.eval(0.5), 0.0);
        let e = KernelProfile::exponential(2.0).unwrap();
        assert!((e.eval(-2.0) - (-1.0f64).exp()).abs() < 1e-15);
        let m = KernelProfile::mexican_hat(1.0, 0.75).unwrap();
        assert!((m.eval(0.0) - 0.25).abs() < 1e-15);
        assert!(m.eval(3.0) < 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(KernelProfile::gaussian(0.0).is_err());
        assert!(KernelProfile::tophat(-1.0).is_err());
        assert!(KernelProfile::exponential(f64::NAN).is_err());
        assert!(KernelProfile::mexican_hat(1.0, -0.1).is_err());
    }

    #[test]
    fn negligible_radius_is_tight() {
        for p in [
            KernelProfile::gaussian(0.2).unwrap(),
            KernelProfile::exponential(0.2).unwrap(),
            KernelProfile::mexican_hat(0.2, 0.8).unwrap(),
        ] {
            let r = p.negligible_radius(1e-12).unwrap();
            assert!(p.eval(1.01 * r).abs() < 1e-12, "{p:?}");
            assert!(p.eval(0.9 * r).abs() > 1e-12, "{p:?}");
        }
    }

    #[test]
    fn regularity_flags() {
        assert_eq!(
            KernelProfile::tophat(1.0).unwrap().is_lipschitz(),
            Some(false)
        );
        assert_eq!(
            KernelProfile::gaussian(1.0).unwrap().is_lipschitz(),
            Some(true)
        );
        assert_eq!(
            KernelProfile::custom(1.0, |z| z.cos())
                .unwrap()
                .is_lipschitz(),
            None
        );
    }
}
