//! Frequency-domain route: contour identities for Green's-tensor integrands
//! and the finite-frequency diamagnetic integral
//!
//! `Ω(r, r') = (1/2π) ∫₀^∞ dω ∇ × Im[G(r,r',ω) + Gᵀ(r',r,ω)] × ∇'`.
//!
//! The contour is `C = [−ρ, −η] ∪ (−C_η) ∪ [η, ρ] ∪ C_ρ`: the small arc is
//! traversed clockwise over the origin, the large arc counter-clockwise.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curl::{left_curl, right_curl, two_sided_curl, DerivMode, FdOrder, FdStencil, FnField};
use crate::error::{Error, Result};
use crate::greens::GreensProvider;
use crate::quadrature::{extrapolate_to_zero, integrate, QuadOptions};
use crate::tensor::{Dyadic, Vec3};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrandKind {
    /// `ω G`
    WG,
    /// `ω G × ∇'`
    GCurl,
    /// `ω ∇ × G`
    CurlG,
    /// `∇ × G × ∇' / ω`
    CurlGCurlOverW,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourSpec {
    pub eta: f64,
    pub rho: f64,
    /// Equal panels per segment before adaptive refinement.
    pub n_points: usize,
    pub kind: IntegrandKind,
    /// When false, each panel gets a single 21-point rule (no refinement).
    pub adaptive: bool,
}

impl ContourSpec {
    /// Defaults scaled to the separation: `η = 1e-4/R`, `ρ = 50/R`.
    pub fn for_separation(len: f64, kind: IntegrandKind) -> Self {
        ContourSpec {
            eta: 1e-4 / len,
            rho: 50.0 / len,
            n_points: 16,
            kind,
            adaptive: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < self.rho && self.rho.is_finite()) {
            return Err(Error::invalid("contour", "need 0 < eta < rho"));
        }
        if self.n_points < 16 {
            return Err(Error::invalid("contour.n_points", "need at least 16"));
        }
        Ok(())
    }
}

fn fd_mode(r: &Vec3, rp: &Vec3, p: &dyn GreensProvider) -> DerivMode {
    let len = (r - rp).norm();
    let h = 1e-3 * len.min(p.feature_length(r)).min(p.feature_length(rp));
    DerivMode::FiniteDifference(FdStencil::with_step(h, FdOrder::Fourth))
}

/// `χ(ω)` for the chosen integrand kind, from closed-form curls when the
/// provider has them and finite differences otherwise.
pub fn integrand(
    p: &dyn GreensProvider,
    kind: IntegrandKind,
    r: &Vec3,
    rp: &Vec3,
    omega: Complex64,
) -> Result<Dyadic> {
    let field = FnField(|a: &Vec3, b: &Vec3| p.w2g(a, b, omega));
    // ω²G-based quantities are divided by the appropriate power of ω.
    let (w2x, power) = match kind {
        IntegrandKind::WG => (p.w2g(r, rp, omega)?, 1),
        IntegrandKind::GCurl => (
            match p.one_sided_curls_w2g(r, rp, omega) {
                Some(c) => c?.1,
                None => right_curl(&field, r, rp, fd_mode(r, rp, p))?,
            },
            1,
        ),
        IntegrandKind::CurlG => (
            match p.one_sided_curls_w2g(r, rp, omega) {
                Some(c) => c?.0,
                None => left_curl(&field, r, rp, fd_mode(r, rp, p))?,
            },
            1,
        ),
        IntegrandKind::CurlGCurlOverW => (
            match p.curl_curl_w2g(r, rp, omega) {
                Some(c) => c?,
                None => two_sided_curl(&field, r, rp, fd_mode(r, rp, p))?,
            },
            3,
        ),
    };
    Ok(w2x * (1.0 / omega.powi(power)))
}

#[derive(Clone, Debug)]
pub struct ContourPieces {
    /// `∫_{[−ρ,−η] ∪ [η,ρ]} χ dω`
    pub real_axis: Dyadic,
    /// Integral over `−C_η` (clockwise).
    pub small_arc: Dyadic,
    /// Integral over `C_ρ`.
    pub large_arc: Dyadic,
    pub evaluations: usize,
}

impl ContourPieces {
    pub fn total(&self) -> Dyadic {
        self.real_axis + self.small_arc + self.large_arc
    }

    /// Closure residual relative to the largest segment.
    pub fn relative_closure(&self) -> f64 {
        let scale = self
            .real_axis
            .max_abs()
            .max(self.small_arc.max_abs())
            .max(self.large_arc.max_abs());
        if scale == 0.0 {
            0.0
        } else {
            self.total().max_abs() / scale
        }
    }
}

fn panels(a: f64, b: f64, n: usize) -> Vec<f64> {
    (1..n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
}

fn quad_opts(spec: &ContourSpec) -> QuadOptions {
    if spec.adaptive {
        QuadOptions::default()
    } else {
        QuadOptions {
            max_intervals: 0,
            ..QuadOptions::default()
        }
    }
}

fn arc(
    chi: &(dyn Fn(Complex64) -> Result<Dyadic> + Sync),
    radius: f64,
    from: f64,
    to: f64,
    spec: &ContourSpec,
) -> Result<(Dyadic, usize)> {
    let res = integrate(
        |phi| {
            let z = Complex64::from_polar(radius, phi);
            Ok(chi(z)? * (I * z))
        },
        from,
        to,
        &panels(from.min(to), from.max(to), spec.n_points),
        &quad_opts(spec),
    )?;
    Ok((res.value, res.evaluations))
}

/// The three contour pieces for an arbitrary integrand `χ(ω)`.
pub fn contour_pieces_fn(
    chi: &(dyn Fn(Complex64) -> Result<Dyadic> + Sync),
    spec: &ContourSpec,
    breakpoints: &[f64],
) -> Result<ContourPieces> {
    spec.validate()?;
    // Both half-lines at once: ∫_η^ρ [χ(ω) + χ(−ω)] dω.
    let mut bps = panels(spec.eta, spec.rho, spec.n_points);
    bps.extend(breakpoints.iter().copied());
    let line = integrate(
        |w| Ok(chi(Complex64::from(w))? + chi(Complex64::from(-w))?),
        spec.eta,
        spec.rho,
        &bps,
        &quad_opts(spec),
    )?;
    let (small, n_small) = arc(chi, spec.eta, PI, 0.0, spec)?;
    let (large, n_large) = arc(chi, spec.rho, 0.0, PI, spec)?;
    Ok(ContourPieces {
        real_axis: line.value,
        small_arc: small,
        large_arc: large,
        evaluations: 2 * line.evaluations + n_small + n_large,
    })
}

fn validate_pair(p: &dyn GreensProvider, r: &Vec3, rp: &Vec3) -> Result<()> {
    p.check_domain(r, rp)?;
    if r == rp {
        return Err(Error::CoincidentPoints {
            context: "contour integrand".into(),
        });
    }
    Ok(())
}

pub fn contour_pieces(
    p: &dyn GreensProvider,
    spec: &ContourSpec,
    r: &Vec3,
    rp: &Vec3,
) -> Result<ContourPieces> {
    validate_pair(p, r, rp)?;
    let chi = |w: Complex64| integrand(p, spec.kind, r, rp, w);
    contour_pieces_fn(&chi, spec, &p.resonances())
}

/// `∮_C χ dω`; vanishes for integrands analytic in the upper half plane.
pub fn contour_integral(
    p: &dyn GreensProvider,
    spec: &ContourSpec,
    r: &Vec3,
    rp: &Vec3,
) -> Result<Dyadic> {
    Ok(contour_pieces(p, spec, r, rp)?.total())
}

#[derive(Clone, Debug)]
pub struct ResidueDecomposition {
    pub real_axis: Dyadic,
    pub small_arc: Dyadic,
    pub large_arc: Dyadic,
    /// `Res[χ]₀`, from the small-arc values extrapolated to `η → 0`.
    pub residue: Dyadic,
    pub residue_error: f64,
    /// `(η, small-arc value)` for the halving ladder.
    pub eta_ladder: Vec<(f64, Dyadic)>,
    pub relative_closure: f64,
}

impl ResidueDecomposition {
    /// `∫_ℝ χ + ∫_{C_ρ} χ`, which tends to `iπ Res[χ]₀` as `η → 0`.
    pub fn real_axis_plus_large_arc(&self) -> Dyadic {
        self.real_axis + self.large_arc
    }
}

/// Contour pieces at `spec.eta` plus the residue at the origin from an
/// η-halving ladder (`levels` values).
pub fn residue_decomposition(
    p: &dyn GreensProvider,
    spec: &ContourSpec,
    r: &Vec3,
    rp: &Vec3,
    levels: usize,
) -> Result<ResidueDecomposition> {
    validate_pair(p, r, rp)?;
    let chi = |w: Complex64| integrand(p, spec.kind, r, rp, w);
    residue_decomposition_fn(&chi, spec, &p.resonances(), levels)
}

pub fn residue_decomposition_fn(
    chi: &(dyn Fn(Complex64) -> Result<Dyadic> + Sync),
    spec: &ContourSpec,
    breakpoints: &[f64],
    levels: usize,
) -> Result<ResidueDecomposition> {
    let pieces = contour_pieces_fn(chi, spec, breakpoints)?;
    let mut ladder = Vec::with_capacity(levels.max(2));
    let mut eta = spec.eta;
    for _ in 0..levels.max(2) {
        let (v, _) = arc(chi, eta, PI, 0.0, spec)?;
        ladder.push((eta, v));
        eta *= 0.5;
    }
    let xs: Vec<f64> = ladder.iter().map(|l| l.0).collect();
    let ys: Vec<Dyadic> = ladder.iter().map(|l| l.1).collect();
    let (arc0, err) = extrapolate_to_zero(&xs, &ys);
    // −C_η of Res/ω gives −iπ Res.
    let residue = arc0 * (1.0 / (-I * PI));
    Ok(ResidueDecomposition {
        real_axis: pieces.real_axis,
        small_arc: pieces.small_arc,
        large_arc: pieces.large_arc,
        residue,
        residue_error: err / PI,
        eta_ladder: ladder,
        relative_closure: pieces.relative_closure(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaSpectralOptions {
    /// Hard cutoff; `None` integrates until the damping factor is below 1e-17.
    pub omega_max: Option<f64>,
    /// Largest damping; `None` selects `R/2`.
    pub eta0: Option<f64>,
    pub levels: usize,
    pub rel_tol: f64,
}

impl Default for OmegaSpectralOptions {
    fn default() -> Self {
        OmegaSpectralOptions {
            omega_max: None,
            eta0: None,
            levels: 8,
            rel_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OmegaSpectral {
    pub value: Dyadic,
    /// Magnitude of the last Neville correction.
    pub error: f64,
    /// `(η, damped integral)` ladder.
    pub eta_ladder: Vec<(f64, Dyadic)>,
}

/// `Ω(r, r')` from the damped real-frequency integral, extrapolated to zero damping.
pub fn diamagnetic_omega_spectral(
    p: &dyn GreensProvider,
    r: &Vec3,
    rp: &Vec3,
    opts: &OmegaSpectralOptions,
) -> Result<OmegaSpectral> {
    validate_pair(p, r, rp)?;
    if opts.levels < 2 {
        return Err(Error::invalid("levels", "need at least 2 damping values"));
    }
    let len = (r - rp).norm();
    let eta0 = opts.eta0.unwrap_or(0.5 * len);
    if !(eta0 > 0.0 && eta0.is_finite()) {
        return Err(Error::invalid("eta0", "damping must be positive"));
    }
    let curl_curl = |a: &Vec3, b: &Vec3, w: Complex64| -> Result<Dyadic> {
        match p.curl_curl_w2g(a, b, w) {
            Some(c) => c,
            None => {
                let field = FnField(|x: &Vec3, y: &Vec3| p.w2g(x, y, w));
                two_sided_curl(&field, a, b, fd_mode(a, b, p))
            }
        }
    };
    let integrand = |w: f64| -> Result<Dyadic> {
        let wc = Complex64::from(w);
        let sum = curl_curl(r, rp, wc)? + curl_curl(rp, r, wc)?.transpose();
        Ok(sum.im() * (1.0 / (w * w)))
    };
    // Longest path between the points via the nearest structure; sets the
    // fastest oscillation in ω.
    let reach = {
        let via = p.feature_length(r) + p.feature_length(rp);
        if via.is_finite() { len + via } else { len }
    };
    let resonances = p.resonances();
    let mut ladder = Vec::with_capacity(opts.levels);
    let mut eta = eta0;
    for _ in 0..opts.levels {
        let upper = opts.omega_max.unwrap_or(40.0 / eta);
        // Panels of about one oscillation period keep the rule well inside its range.
        let period = 2.0 * PI / reach.max(f64::MIN_POSITIVE);
        let n_panels = ((upper / period).ceil() as usize).clamp(1, 200_000);
        let mut bps = panels(0.0, upper, n_panels);
        bps.extend(resonances.iter().copied());
        // Small damping leaves a large oscillating integrand with a small
        // integral; tolerate absolute errors at the scale of the first level.
        let abs_tol = ladder
            .first()
            .map_or(0.0, |l: &(f64, Dyadic)| opts.rel_tol * l.1.max_abs() * 2.0 * PI);
        let quad = QuadOptions {
            abs_tol,
            rel_tol: opts.rel_tol,
            max_intervals: 50_000,
            ..QuadOptions::default()
        };
        let res = integrate(
            |w| {
                if w == 0.0 {
                    return Ok(Dyadic::zero());
                }
                Ok(integrand(w)? * (-eta * w).exp())
            },
            0.0,
            upper,
            &bps,
            &quad,
        )?;
        if !res.converged {
            return Err(Error::NonConvergent(format!(
                "damped Ω integral at eta = {eta:e} (error {:e})",
                res.error
            )));
        }
        ladder.push((eta, res.value * (1.0 / (2.0 * PI))));
        eta *= 0.5;
    }
    let xs: Vec<f64> = ladder.iter().map(|l| l.0).collect();
    let ys: Vec<Dyadic> = ladder.iter().map(|l| l.1).collect();
    let (value, error) = extrapolate_to_zero(&xs, &ys);
    let scale = ys.iter().fold(0.0f64, |m, y| m.max(y.max_abs()));
    if !(error.is_finite() && error <= 1e-2 * scale.max(value.max_abs())) {
        return Err(Error::NonConvergent(format!(
            "η → 0 extrapolation of Ω diverges (last correction {error:e})"
        )));
    }
    Ok(OmegaSpectral {
        value,
        error,
        eta_ladder: ladder,
    })
}

/// Free-space `Ω(r, r') = (2nn − I)/(π² R⁴)`, the Abel limit of the damped integral.
pub fn free_space_omega_reference(r: &Vec3, rp: &Vec3) -> Dyadic {
    let d = r - rp;
    let len = d.norm();
    let n = d / len;
    (Dyadic::outer_real(&n, &n) * 2.0 - Dyadic::identity()) * (1.0 / (PI * PI * len.powi(4)))
}

/// Order-of-magnitude ratio `λ_γ / r` of diamagnetic to paramagnetic terms.
pub fn diamagnetic_ratio(lambda_compton: f64, r: f64) -> Result<f64> {
    if !(lambda_compton > 0.0 && lambda_compton.is_finite()) {
        return Err(Error::invalid("lambda_compton", "must be positive"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("r", "must be positive"));
    }
    Ok(lambda_compton / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{free_static_d2, FreeSpace};

    #[test]
    fn ratio_examples() {
        assert!((diamagnetic_ratio(1e-12, 1e-9).unwrap() - 1e-3).abs() < 1e-18);
        assert_eq!(diamagnetic_ratio(2.0, 2.0).unwrap(), 1.0);
        assert!((diamagnetic_ratio(2.43e-12, 1e-8).unwrap() - 2.43e-4).abs() < 1e-18);
        assert!(diamagnetic_ratio(0.0, 1.0).is_err());
    }

    #[test]
    fn pole_in_upper_half_plane_is_detected() {
        let pole = Complex64::new(0.3, 0.5);
        let chi = move |w: Complex64| Ok(Dyadic::identity() * (1.0 / (w - pole)));
        let spec = ContourSpec {
            eta: 1e-3,
            rho: 5.0,
            n_points: 16,
            kind: IntegrandKind::WG,
            adaptive: true,
        };
        let total = contour_pieces_fn(&chi, &spec, &[]).unwrap().total();
        let expected = 2.0 * PI * I;
        assert!((total[(0, 0)] - expected).norm() < 1e-6);
        assert!(total[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn free_space_wg_closure_and_residue() {
        let r = Vec3::new(0.0, 0.0, 0.0);
        let rp = Vec3::new(0.3, -0.2, 0.9);
        let len = (r - rp).norm();
        let p = FreeSpace::default();
        let spec = ContourSpec::for_separation(len, IntegrandKind::WG);
        let dec = residue_decomposition(&p, &spec, &r, &rp, 4).unwrap();
        assert!(dec.relative_closure < 1e-6, "{}", dec.relative_closure);
        let lim = p.analytic_static_limits(&r, &rp).unwrap().unwrap().w2;
        assert!(dec.residue.rel_diff(&lim) < 1e-8);
        let lhs = dec.real_axis_plus_large_arc();
        assert!(lhs.rel_diff(&(lim * (I * PI))) < 1e-5);
    }

    #[test]
    fn free_space_curl_curl_residue() {
        let r = Vec3::new(0.0, 0.0, 0.0);
        let rp = Vec3::new(0.0, 0.0, 1.0);
        let p = FreeSpace::default();
        let spec = ContourSpec::for_separation(1.0, IntegrandKind::CurlGCurlOverW);
        let dec = residue_decomposition(&p, &spec, &r, &rp, 4).unwrap();
        let field = FnField(|a: &Vec3, b: &Vec3| {
            let (n, l) = crate::tensor::separation(a, b);
            Ok(free_static_d2(&n, l))
        });
        let cc = two_sided_curl(
            &field,
            &r,
            &rp,
            DerivMode::FiniteDifference(FdStencil::with_step(1e-2, FdOrder::Fourth)),
        )
        .unwrap();
        let expected = cc * (0.5 * PI * I);
        assert!(dec.real_axis_plus_large_arc().rel_diff(&expected) < 1e-5);
    }

    #[test]
    fn free_space_omega_matches_abel_limit() {
        let r = Vec3::new(0.1, 0.0, 0.0);
        let rp = Vec3::new(0.4, 0.5, -0.6);
        let om = diamagnetic_omega_spectral(&FreeSpace::default(), &r, &rp, &Default::default()).unwrap();
        let reference = free_space_omega_reference(&r, &rp);
        assert!(om.value.rel_diff(&reference) < 1e-6, "{}", om.value.rel_diff(&reference));
    }
}
