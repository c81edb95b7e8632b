use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_finite, coincident, CoincidentPolicy, GreensProvider, StaticCurls, StaticLimits};
use crate::error::Result;
use crate::tensor::{separation, Dyadic, Vec3};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this `|ωR|` the factor `e^{ix}(ix − 1)` is summed as a series.
pub(crate) const SERIES_SWITCH: f64 = 1e-2;
const SERIES_TERMS: usize = 12;

/// Homogeneous vacuum.
#[derive(Clone, Debug, Default)]
pub struct FreeSpace {
    pub policy: CoincidentPolicy,
}

/// `e^{ix}(ix − 1) = Σ_n (n − 1)/n! (ix)^n`.
fn near_field_factor(x: Complex64) -> Complex64 {
    if x.norm() < SERIES_SWITCH {
        let ix = I * x;
        let mut pow = Complex64::from(1.0);
        let mut fact = 1.0;
        let mut s = Complex64::from(-1.0);
        for n in 1..SERIES_TERMS {
            pow *= ix;
            fact *= n as f64;
            s += pow * ((n as f64 - 1.0) / fact);
        }
        s
    } else {
        (I * x).exp() * (I * x - 1.0)
    }
}

/// Direct (non-series) evaluation of `ω²G₀`, for testing the series branch.
#[cfg(test)]
pub fn free_w2g_direct(n: &Vec3, len: f64, omega: Complex64) -> Dyadic {
    let x = omega * len;
    let e = (I * x).exp();
    assemble(n, len, e * x * x, e * (I * x - 1.0))
}

fn assemble(n: &Vec3, len: f64, far: Complex64, near: Complex64) -> Dyadic {
    let nn = Dyadic::outer_real(n, n);
    let id = Dyadic::identity();
    ((id - nn) * far + (id - nn * 3.0) * near) * (1.0 / (4.0 * PI * len.powi(3)))
}

/// `ω²G₀` for unit separation vector `n` and distance `len`.
pub(crate) fn free_w2g(n: &Vec3, len: f64, omega: Complex64) -> Dyadic {
    let x = omega * len;
    assemble(n, len, (I * x).exp() * x * x, near_field_factor(x))
}

/// `∇_r × ω²G₀`, equal to `ω²G₀ × ∇_{r'}`.
pub(crate) fn free_curl_g(n: &Vec3, len: f64, omega: Complex64) -> Dyadic {
    let x = omega * len;
    let s = omega * omega * near_field_factor(x) / (4.0 * PI * len * len);
    Dyadic::cross_matrix(n) * (-s)
}

/// `lim ω²G₀ = (3nn − I)/(4πR³)`.
pub(crate) fn static_w2(n: &Vec3, len: f64) -> Dyadic {
    (Dyadic::outer_real(n, n) * 3.0 - Dyadic::identity()) * (1.0 / (4.0 * PI * len.powi(3)))
}

/// `∂²_ω(ω²G₀)|₀ = (I + nn)/(4πR)`.
pub(crate) fn static_d2(n: &Vec3, len: f64) -> Dyadic {
    (Dyadic::outer_real(n, n) + Dyadic::identity()) * (1.0 / (4.0 * PI * len))
}

impl FreeSpace {
    fn coincident_zero(&self, r: &Vec3, rp: &Vec3) -> Result<Option<()>> {
        if r == rp {
            if self.policy == CoincidentPolicy::ExcludeDelta {
                return Ok(Some(()));
            }
            coincident(r, rp, "free_space")?;
        }
        Ok(None)
    }
}

impl GreensProvider for FreeSpace {
    fn name(&self) -> &str {
        "free_space"
    }

    fn reciprocal(&self) -> bool {
        true
    }

    fn coincident_policy(&self) -> CoincidentPolicy {
        self.policy
    }

    fn check_domain(&self, r: &Vec3, rp: &Vec3) -> Result<()> {
        check_finite(r, rp)
    }

    fn w2g(&self, r: &Vec3, rp: &Vec3, omega: Complex64) -> Result<Dyadic> {
        check_finite(r, rp)?;
        if self.coincident_zero(r, rp)?.is_some() {
            return Ok(Dyadic::zero());
        }
        let (n, len) = separation(r, rp);
        Ok(free_w2g(&n, len, omega))
    }

    fn scattered_w2g(&self, _r: &Vec3, _rp: &Vec3, _omega: Complex64) -> Option<Result<Dyadic>> {
        Some(Ok(Dyadic::zero()))
    }

    fn analytic_static_limits(&self, r: &Vec3, rp: &Vec3) -> Option<Result<StaticLimits>> {
        Some((|| {
            check_finite(r, rp)?;
            if self.coincident_zero(r, rp)?.is_some() {
                return Ok(StaticLimits::zero());
            }
            let (n, len) = separation(r, rp);
            Ok(StaticLimits {
                w2: static_w2(&n, len),
                d1: Dyadic::zero(),
                d2: static_d2(&n, len),
                error: [0.0; 3],
            })
        })())
    }

    fn analytic_static_curls(&self, r: &Vec3, rp: &Vec3) -> Option<Result<StaticCurls>> {
        Some((|| {
            check_finite(r, rp)?;
            if self.coincident_zero(r, rp)?.is_some() {
                return Ok(StaticCurls {
                    left_d1: Dyadic::zero(),
                    right_d1: Dyadic::zero(),
                    curl_curl_d2: Dyadic::zero(),
                });
            }
            let (n, len) = separation(r, rp);
            Ok(StaticCurls {
                left_d1: Dyadic::zero(),
                right_d1: Dyadic::zero(),
                curl_curl_d2: static_w2(&n, len) * 2.0,
            })
        })())
    }

    fn curl_curl_w2g(&self, r: &Vec3, rp: &Vec3, omega: Complex64) -> Option<Result<Dyadic>> {
        // ∇ × G₀ × ∇' = k²G₀ away from r = r'.
        Some(self.w2g(r, rp, omega).map(|g| g * (omega * omega)))
    }

    fn one_sided_curls_w2g(
        &self,
        r: &Vec3,
        rp: &Vec3,
        omega: Complex64,
    ) -> Option<Result<(Dyadic, Dyadic)>> {
        Some((|| {
            check_finite(r, rp)?;
            if self.coincident_zero(r, rp)?.is_some() {
                return Ok((Dyadic::zero(), Dyadic::zero()));
            }
            let (n, len) = separation(r, rp);
            let c = free_curl_g(&n, len, omega);
            Ok((c, c))
        })())
    }

    fn translation_invariant(&self) -> bool {
        true
    }
}
