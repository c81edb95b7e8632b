use num_complex::Complex64;

use super::free_space::{free_curl_g, free_w2g, static_d2, static_w2};
use super::{check_finite, coincident, CoincidentPolicy, GreensProvider, StaticCurls, StaticLimits};
use crate::error::{Error, Result};
use crate::tensor::{separation, Dyadic, Vec3};

/// Half-space `z > plane_z` bounded by a perfectly conducting plane.
///
/// `G(r, r') = G₀(r, r') + G₀(r, M r') S` with the reflection
/// `M = diag(1, 1, −1)` about the plane and `S = −M`.
#[derive(Clone, Debug, Default)]
pub struct MirrorHalfSpace {
    pub plane_z: f64,
    pub policy: CoincidentPolicy,
}

fn reflection() -> Dyadic {
    let mut m = Dyadic::identity();
    m[(2, 2)] = Complex64::from(-1.0);
    m
}

impl MirrorHalfSpace {
    pub fn new(plane_z: f64) -> Self {
        MirrorHalfSpace {
            plane_z,
            policy: CoincidentPolicy::Error,
        }
    }

    fn image(&self, rp: &Vec3) -> Vec3 {
        Vec3::new(rp[0], rp[1], 2.0 * self.plane_z - rp[2])
    }

    /// Returns `true` when only the scattered part should be evaluated.
    fn prepare(&self, r: &Vec3, rp: &Vec3) -> Result<bool> {
        self.check_domain(r, rp)?;
        if r == rp {
            if self.policy == CoincidentPolicy::ExcludeDelta {
                return Ok(true);
            }
            coincident(r, rp, "mirror_halfspace")?;
        }
        Ok(false)
    }

    fn image_w2g(&self, r: &Vec3, rp: &Vec3, omega: Complex64) -> Dyadic {
        let (e, len) = separation(r, &self.image(rp));
        free_w2g(&e, len, omega) * (-reflection())
    }
}

impl GreensProvider for MirrorHalfSpace {
    fn name(&self) -> &str {
        "mirror_halfspace"
    }

    fn reciprocal(&self) -> bool {
        true
    }

    fn coincident_policy(&self) -> CoincidentPolicy {
        self.policy
    }

    fn check_domain(&self, r: &Vec3, rp: &Vec3) -> Result<()> {
        check_finite(r, rp)?;
        for p in [r, rp] {
            if p[2] <= self.plane_z {
                return Err(Error::OutOfDomain(format!(
                    "z = {} is not above the mirror at z = {}",
                    p[2], self.plane_z
                )));
            }
        }
        Ok(())
    }

    fn w2g(&self, r: &Vec3, rp: &Vec3, omega: Complex64) -> Result<Dyadic> {
        let scattered_only = self.prepare(r, rp)?;
        let img = self.image_w2g(r, rp, omega);
        if scattered_only {
            return Ok(img);
        }
        let (n, len) = separation(r, rp);
        Ok(free_w2g(&n, len, omega) + img)
    }

    fn scattered_w2g(&self, r: &Vec3, rp: &Vec3, omega: Complex64) -> Option<Result<Dyadic>> {
        Some(
            self.check_domain(r, rp)
                .map(|_| self.image_w2g(r, rp, omega)),
        )
    }

    fn analytic_static_limits(&self, r: &Vec3, rp: &Vec3) -> Option<Result<StaticLimits>> {
        Some((|| {
            let scattered_only = self.prepare(r, rp)?;
            let s = -reflection();
            let (e, li) = separation(r, &self.image(rp));
            let mut out = StaticLimits {
                w2: static_w2(&e, li) * s,
                d1: Dyadic::zero(),
                d2: static_d2(&e, li) * s,
                error: [0.0; 3],
            };
            if !scattered_only {
                let (n, len) = separation(r, rp);
                out.w2 += static_w2(&n, len);
                out.d2 += static_d2(&n, len);
            }
            Ok(out)
        })())
    }

    fn analytic_static_curls(&self, r: &Vec3, rp: &Vec3) -> Option<Result<StaticCurls>> {
        Some((|| {
            let scattered_only = self.prepare(r, rp)?;
            let (e, li) = separation(r, &self.image(rp));
            let mut cc = static_w2(&e, li) * reflection() * 2.0;
            if !scattered_only {
                let (n, len) = separation(r, rp);
                cc += static_w2(&n, len) * 2.0;
            }
            Ok(StaticCurls {
                left_d1: Dyadic::zero(),
                right_d1: Dyadic::zero(),
                curl_curl_d2: cc,
            })
        })())
    }

    fn curl_curl_w2g(&self, r: &Vec3, rp: &Vec3, omega: Complex64) -> Option<Result<Dyadic>> {
        Some((|| {
            let scattered_only = self.prepare(r, rp)?;
            let w2 = omega * omega;
            // The image term picks up det M = −1 under the primed curl.
            let mut out = self.image_w2g(r, rp, omega) * (-w2);
            if !scattered_only {
                let (n, len) = separation(r, rp);
                out += free_w2g(&n, len, omega) * w2;
            }
            Ok(out)
        })())
    }

    fn one_sided_curls_w2g(
        &self,
        r: &Vec3,
        rp: &Vec3,
        omega: Complex64,
    ) -> Option<Result<(Dyadic, Dyadic)>> {
        Some((|| {
            let scattered_only = self.prepare(r, rp)?;
            let m = reflection();
            let (e, li) = separation(r, &self.image(rp));
            let ci = free_curl_g(&e, li, omega);
            let mut left = ci * (-m);
            let mut right = ci * m;
            if !scattered_only {
                let (n, len) = separation(r, rp);
                let c0 = free_curl_g(&n, len, omega);
                left += c0;
                right += c0;
            }
            Ok((left, right))
        })())
    }

    fn feature_length(&self, r: &Vec3) -> f64 {
        r[2] - self.plane_z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curl::{left_curl, right_curl, two_sided_curl, DerivMode, FdOrder, FdStencil, FnField};
    use crate::greens::FreeSpace;

    #[test]
    fn reciprocity() {
        let p = MirrorHalfSpace::default();
        let r = Vec3::new(0.1, 0.2, 0.7);
        let rp = Vec3::new(-0.3, 0.5, 1.4);
        let omega = Complex64::new(0.8, 0.1);
        let a = p.w2g(&r, &rp, omega).unwrap();
        let b = p.w2g(&rp, &r, omega).unwrap().transpose();
        assert!(a.rel_diff(&b) < 1e-14);
    }

    #[test]
    fn tangential_field_vanishes_on_plane() {
        let p = MirrorHalfSpace::default();
        let rp = Vec3::new(0.2, -0.1, 0.9);
        let on_plane = Vec3::new(0.5, 0.3, 1e-12);
        let g = p.w2g(&on_plane, &rp, Complex64::new(1.7, 0.0)).unwrap();
        for j in 0..3 {
            assert!(g[(0, j)].norm() < 1e-9);
            assert!(g[(1, j)].norm() < 1e-9);
        }
    }

    #[test]
    fn distant_mirror_recovers_free_space() {
        let r = Vec3::new(0.0, 0.0, 0.0);
        let rp = Vec3::new(0.3, 0.4, 0.5);
        let omega = Complex64::new(0.2, 0.0);
        let free = FreeSpace::default().w2g(&r, &rp, omega).unwrap();
        let far = MirrorHalfSpace::new(-1e9).w2g(&r, &rp, omega).unwrap();
        assert!(far.rel_diff(&free) < 1e-10);
    }

    #[test]
    fn out_of_domain() {
        let p = MirrorHalfSpace::default();
        let err = p
            .w2g(&Vec3::new(0.0, 0.0, -1.0), &Vec3::new(0.0, 0.0, 1.0), Complex64::from(1.0))
            .unwrap_err();
        assert_eq!(err.kind(), "OutOfDomain");
    }

    #[test]
    fn exclude_delta_returns_image_part() {
        let p = MirrorHalfSpace {
            plane_z: 0.0,
            policy: CoincidentPolicy::ExcludeDelta,
        };
        let r = Vec3::new(0.0, 0.0, 0.5);
        let lim = p.analytic_static_limits(&r, &r).unwrap().unwrap();
        // Image dipole at distance 1 along z: (3zz − I) S / 4π.
        let pi4 = 4.0 * std::f64::consts::PI;
        assert!((lim.w2[(0, 0)].re - 1.0 / pi4).abs() < 1e-14);
        assert!((lim.w2[(2, 2)].re - 2.0 / pi4).abs() < 1e-14);
    }

    #[test]
    fn analytic_curls_match_finite_differences() {
        let p = MirrorHalfSpace::default();
        let r = Vec3::new(0.3, -0.2, 0.6);
        let rp = Vec3::new(-0.5, 0.4, 1.2);
        let omega = Complex64::new(1.1, 0.3);
        let field = FnField(|a: &Vec3, b: &Vec3| p.w2g(a, b, omega));
        let fd = DerivMode::FiniteDifference(FdStencil::with_step(1e-3, FdOrder::Fourth));
        let (lc, rc) = p.one_sided_curls_w2g(&r, &rp, omega).unwrap().unwrap();
        assert!(lc.rel_diff(&left_curl(&field, &r, &rp, fd).unwrap()) < 1e-9);
        assert!(rc.rel_diff(&right_curl(&field, &r, &rp, fd).unwrap()) < 1e-9);
        let cc = p.curl_curl_w2g(&r, &rp, omega).unwrap().unwrap();
        let cc_fd = two_sided_curl(&field, &r, &rp, fd).unwrap();
        assert!(cc.rel_diff(&cc_fd) < 1e-7, "{}", cc.rel_diff(&cc_fd));
    }
}
