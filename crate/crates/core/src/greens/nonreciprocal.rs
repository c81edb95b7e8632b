use std::f64::consts::PI;

use num_complex::Complex64;

use super::free_space::{free_w2g, static_d2, static_w2};
use super::{check_finite, coincident, GreensProvider, StaticCurls, StaticLimits};
use crate::error::Result;
use crate::tensor::{levi_civita, separation, Dyadic, Vec3};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Vacuum plus an antisymmetric gyrotropic term, `G = G₀ + [g]_× f(ω, R)` with
///
/// `ω² f = i ωR e^{iωR} / ((1 − iωR) 4πR³)`.
///
/// `f` is analytic in the upper half plane, obeys `f(−ω*) = f(ω)*`, and the
/// antisymmetric prefactor breaks `G_{ij}(r, r') = G_{ji}(r', r)`.
#[derive(Clone, Debug)]
pub struct SyntheticNonreciprocal {
    pub bias: Vec3,
}

impl Default for SyntheticNonreciprocal {
    fn default() -> Self {
        SyntheticNonreciprocal {
            bias: Vec3::new(0.0, 0.0, 0.5),
        }
    }
}

impl SyntheticNonreciprocal {
    pub fn new(bias: Vec3) -> Self {
        SyntheticNonreciprocal { bias }
    }

    fn gyro(&self) -> Dyadic {
        Dyadic::cross_matrix(&self.bias)
    }

    fn prepare(&self, r: &Vec3, rp: &Vec3) -> Result<(Vec3, f64)> {
        check_finite(r, rp)?;
        coincident(r, rp, "synthetic_nonreciprocal")?;
        Ok(separation(r, rp))
    }
}

/// `[∇ × (A φ(R))]` and `[(A φ(R)) × ∇']` for radial `φ` with derivative `dphi`.
fn radial_one_sided(a: &Dyadic, n: &Vec3, dphi: Complex64) -> (Dyadic, Dyadic) {
    let nx = Dyadic::cross_matrix(n);
    (nx * *a * (-dphi), *a * nx * (-dphi))
}

/// `∇ × (A ψ(R)) × ∇'` from the radial derivatives of `ψ`.
fn radial_curl_curl(a: &Dyadic, n: &Vec3, len: f64, d1: f64, d2: f64) -> Dyadic {
    // ∂_γ ∂'_μ ψ = −H_γμ
    let hess = |g: usize, m: usize| {
        let delta = if g == m { 1.0 } else { 0.0 };
        -(d2 * n[g] * n[m] + d1 / len * (delta - n[g] * n[m]))
    };
    Dyadic::from_fn(|al, be| {
        let mut s = Complex64::default();
        for g in 0..3 {
            for d in 0..3 {
                let e1 = levi_civita(al, g, d);
                if e1 == 0.0 {
                    continue;
                }
                for m in 0..3 {
                    for nu in 0..3 {
                        let e2 = levi_civita(be, m, nu);
                        if e2 != 0.0 {
                            s += a[(d, nu)] * (e1 * e2 * hess(g, m));
                        }
                    }
                }
            }
        }
        s
    })
}

impl GreensProvider for SyntheticNonreciprocal {
    fn name(&self) -> &str {
        "synthetic_nonreciprocal"
    }

    fn reciprocal(&self) -> bool {
        self.bias.norm() == 0.0
    }

    fn check_domain(&self, r: &Vec3, rp: &Vec3) -> Result<()> {
        check_finite(r, rp)
    }

    fn w2g(&self, r: &Vec3, rp: &Vec3, omega: Complex64) -> Result<Dyadic> {
        let (n, len) = self.prepare(r, rp)?;
        let x = omega * len;
        let s = I * x * (I * x).exp() / ((1.0 - I * x) * (4.0 * PI * len.powi(3)));
        Ok(free_w2g(&n, len, omega) + self.gyro() * s)
    }

    fn analytic_static_limits(&self, r: &Vec3, rp: &Vec3) -> Option<Result<StaticLimits>> {
        Some(self.prepare(r, rp).map(|(n, len)| {
            let a = self.gyro();
            StaticLimits {
                w2: static_w2(&n, len),
                d1: a * (I / (4.0 * PI * len * len)),
                d2: static_d2(&n, len) + a * (-1.0 / (PI * len)),
                error: [0.0; 3],
            }
        }))
    }

    fn analytic_static_curls(&self, r: &Vec3, rp: &Vec3) -> Option<Result<StaticCurls>> {
        Some(self.prepare(r, rp).map(|(n, len)| {
            let a = self.gyro();
            // d1 = A · i/(4πR²)
            let dphi = I * (-1.0 / (2.0 * PI * len.powi(3)));
            let (left, right) = radial_one_sided(&a, &n, dphi);
            // d2 gyro part: ψ = −1/(πR)
            let psi1 = 1.0 / (PI * len * len);
            let psi2 = -2.0 / (PI * len.powi(3));
            StaticCurls {
                left_d1: left,
                right_d1: right,
                curl_curl_d2: static_w2(&n, len) * 2.0
                    + radial_curl_curl(&a, &n, len, psi1, psi2),
            }
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curl::{left_curl, right_curl, two_sided_curl, DerivMode, FdOrder, FdStencil, FnField};

    fn pts() -> (Vec3, Vec3) {
        (Vec3::new(0.1, 0.2, 0.3), Vec3::new(-0.6, 0.4, 1.1))
    }

    #[test]
    fn not_reciprocal() {
        let p = SyntheticNonreciprocal::default();
        let (r, rp) = pts();
        let omega = Complex64::new(0.9, 0.0);
        let a = p.w2g(&r, &rp, omega).unwrap();
        let b = p.w2g(&rp, &r, omega).unwrap().transpose();
        assert!(a.rel_diff(&b) > 1e-3);
        assert!(!p.reciprocal());
    }

    #[test]
    fn schwarz_reflection() {
        let p = SyntheticNonreciprocal::default();
        let (r, rp) = pts();
        let omega = Complex64::new(0.7, 0.4);
        let a = p.w2g(&r, &rp, -omega.conj()).unwrap();
        let b = p.w2g(&r, &rp, omega).unwrap().conj();
        assert!(a.rel_diff(&b) < 1e-14);
    }

    #[test]
    fn static_curls_match_finite_differences() {
        let p = SyntheticNonreciprocal::default();
        let (r, rp) = pts();
        let fd = DerivMode::FiniteDifference(FdStencil::with_step(1e-3, FdOrder::Fourth));
        let lim = |a: &Vec3, b: &Vec3| p.analytic_static_limits(a, b).unwrap();
        let d1 = FnField(|a: &Vec3, b: &Vec3| lim(a, b).map(|l| l.d1));
        let d2 = FnField(|a: &Vec3, b: &Vec3| lim(a, b).map(|l| l.d2));
        let sc = p.analytic_static_curls(&r, &rp).unwrap().unwrap();
        let l = left_curl(&d1, &r, &rp, fd).unwrap();
        let rr = right_curl(&d1, &r, &rp, fd).unwrap();
        let cc = two_sided_curl(&d2, &r, &rp, fd).unwrap();
        assert!(sc.left_d1.rel_diff(&l) < 1e-9, "{}", sc.left_d1.rel_diff(&l));
        assert!(sc.right_d1.rel_diff(&rr) < 1e-9, "{}", sc.right_d1.rel_diff(&rr));
        assert!(sc.curl_curl_d2.rel_diff(&cc) < 1e-7, "{}", sc.curl_curl_d2.rel_diff(&cc));
    }
}
