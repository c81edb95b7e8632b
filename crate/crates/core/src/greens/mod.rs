//! Green's tensor providers and their static limits.
//!
//! Every provider exposes `ω²G(r, r', ω)`, which stays finite at `ω = 0` for
//! the media considered here; `G` itself is recovered by division.

mod free_space;
mod mirror;
mod mode_expansion;
mod nonreciprocal;
mod static_limits;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{Dyadic, Vec3};

pub use free_space::FreeSpace;
pub use mirror::MirrorHalfSpace;
pub use mode_expansion::ModeExpansion;
pub use nonreciprocal::SyntheticNonreciprocal;
pub use static_limits::{static_limits, LimitsBackend, RichardsonOptions, StaticLimits};

#[cfg(test)]
pub(crate) use free_space::static_d2 as free_static_d2;

/// What a provider does when asked for `r == r'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoincidentPolicy {
    /// Return only the regular scattered part; the free-space singular part
    /// and the delta term are reported separately by callers.
    ExcludeDelta,
    #[default]
    Error,
}

/// Closed-form curls of the static-limit tensors.
///
/// `left_d1 = ∇ × d1`, `right_d1 = d1 × ∇'`, `curl_curl_d2 = ∇ × d2 × ∇'`, where
/// `d1` and `d2` are the first and second ω-derivatives of `ω²G` at `ω = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StaticCurls {
    pub left_d1: Dyadic,
    pub right_d1: Dyadic,
    pub curl_curl_d2: Dyadic,
}

pub trait GreensProvider: Send + Sync {
    fn name(&self) -> &str;

    /// `G_{ij}(r, r', ω) = G_{ji}(r', r, ω)`.
    fn reciprocal(&self) -> bool;

    fn coincident_policy(&self) -> CoincidentPolicy {
        CoincidentPolicy::Error
    }

    /// Checks that both points lie in the region where the provider is defined.
    fn check_domain(&self, _r: &Vec3, _rp: &Vec3) -> Result<()> {
        Ok(())
    }

    /// `ω²G(r, r', ω)` at a complex frequency.
    fn w2g(&self, r: &Vec3, rp: &Vec3, omega: Complex64) -> Result<Dyadic>;

    /// `G(r, r', ω)`.
    fn eval(&self, r: &Vec3, rp: &Vec3, omega: Complex64) -> Result<Dyadic> {
        if omega == Complex64::default() {
            return Err(Error::SingularFrequency);
        }
        Ok(self.w2g(r, rp, omega)? * (1.0 / (omega * omega)))
    }

    /// Scattered (regular) part of `ω²G`, when the provider can separate it.
    fn scattered_w2g(&self, _r: &Vec3, _rp: &Vec3, _omega: Complex64) -> Option<Result<Dyadic>> {
        None
    }

    fn analytic_static_limits(&self, _r: &Vec3, _rp: &Vec3) -> Option<Result<StaticLimits>> {
        None
    }

    fn analytic_static_curls(&self, _r: &Vec3, _rp: &Vec3) -> Option<Result<StaticCurls>> {
        None
    }

    /// Closed-form `∇ × ω²G × ∇'`.
    fn curl_curl_w2g(&self, _r: &Vec3, _rp: &Vec3, _omega: Complex64) -> Option<Result<Dyadic>> {
        None
    }

    /// Closed-form `∇ × ω²G` and `ω²G × ∇'`.
    fn one_sided_curls_w2g(
        &self,
        _r: &Vec3,
        _rp: &Vec3,
        _omega: Complex64,
    ) -> Option<Result<(Dyadic, Dyadic)>> {
        None
    }

    /// Real frequencies near which `G` varies rapidly; used as quadrature breakpoints.
    fn resonances(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `G(r, r')` depends on `r - r'` only.
    fn translation_invariant(&self) -> bool {
        false
    }

    /// Lower bound on the distance from `r` to the nearest structure; `∞` for
    /// free space. Used to scale finite-difference steps.
    fn feature_length(&self, _r: &Vec3) -> f64 {
        f64::INFINITY
    }
}

pub(crate) fn coincident(r: &Vec3, rp: &Vec3, name: &str) -> Result<()> {
    if r == rp {
        Err(Error::CoincidentPoints {
            context: name.to_string(),
        })
    } else {
        Ok(())
    }
}

pub(crate) fn check_finite(r: &Vec3, rp: &Vec3) -> Result<()> {
    if r.iter().chain(rp.iter()).all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("position", "non-finite coordinate"))
    }
}

/// Provider names accepted by [`provider_by_name`].
pub const PROVIDER_NAMES: &[&str] = &["free_space", "mirror_halfspace", "synthetic_nonreciprocal"];

/// Builds one of the built-in providers with default parameters.
pub fn provider_by_name(name: &str) -> Result<Box<dyn GreensProvider>> {
    match name {
        "free_space" => Ok(Box::new(FreeSpace::default())),
        "mirror_halfspace" => Ok(Box::new(MirrorHalfSpace::default())),
        "synthetic_nonreciprocal" => Ok(Box::new(SyntheticNonreciprocal::default())),
        other => Err(Error::invalid(
            "provider",
            format!("unknown provider {other:?}; expected one of {PROVIDER_NAMES:?}"),
        )),
    }
}
