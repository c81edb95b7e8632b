//! Zero-frequency coupling kernels `λ^{ee, em, me, mm}(r, r')`.
//!
//! With `d_k` the k-th ω-derivative of `ω²G` at `ω = 0` (natural units):
//!
//! * `λ^ee = ¼ [d₀(r,r') + d₀ᵀ(r',r)] + δ(r − r') I/2`
//! * `λ^em = (i/4) [d₁(r,r') − d₁ᵀ(r',r)] × ∇'`
//! * `λ^me = −(i/4) ∇ × [d₁(r,r') − d₁ᵀ(r',r)]`
//! * `λ^mm = ⅛ ∇ × [d₂(r,r') + d₂ᵀ(r',r)] × ∇'`
//!
//! Delta terms are never discretized; they are returned as coefficients.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curl::{left_curl, right_curl, two_sided_curl, DerivMode, FdOrder, FdStencil, FnField};
use crate::error::{Error, Result};
use crate::greens::{static_limits, GreensProvider, LimitsBackend, RichardsonOptions, StaticCurls};
use crate::tensor::{separation, Dyadic, Vec3};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Ee,
    Em,
    Me,
    Mm,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [KernelKind::Ee, KernelKind::Em, KernelKind::Me, KernelKind::Mm];

    pub fn as_str(&self) -> &'static str {
        match self {
            KernelKind::Ee => "ee",
            KernelKind::Em => "em",
            KernelKind::Me => "me",
            KernelKind::Mm => "mm",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ee" => Ok(KernelKind::Ee),
            "em" => Ok(KernelKind::Em),
            "me" => Ok(KernelKind::Me),
            "mm" => Ok(KernelKind::Mm),
            other => Err(Error::UnknownQuantityKind(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Closed-form static limits and curls supplied by the provider.
    ClosedForm,
    /// Richardson extrapolation in ω and finite-difference curls.
    StaticLimits,
    ModeSum,
    Spectral,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::ClosedForm => "closed-form",
            Route::StaticLimits => "static-limits",
            Route::ModeSum => "mode-sum",
            Route::Spectral => "spectral",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelResult {
    pub regular: Dyadic,
    /// Coefficient of `δ(r − r')`.
    pub delta_coefficient: Dyadic,
    pub kind: KernelKind,
    pub route: Route,
    /// Delta coefficients use `n⊗n δ(R) → I δ(R)/3`.
    pub smoothed: bool,
}

impl KernelResult {
    pub fn regular_only(regular: Dyadic, kind: KernelKind, route: Route) -> Self {
        KernelResult {
            regular,
            delta_coefficient: Dyadic::zero(),
            kind,
            route,
            smoothed: false,
        }
    }

    /// CSV header matching [`KernelResult::csv_row`].
    pub fn csv_header() -> String {
        let mut cols = vec!["x", "y", "z", "xp", "yp", "zp", "kind", "route"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        for prefix in ["reg", "delta"] {
            for i in 0..3 {
                for j in 0..3 {
                    cols.push(format!("{prefix}_{i}{j}"));
                }
            }
        }
        cols.join(",")
    }

    /// `r, r', kind, route`, then the nine regular and nine delta entries
    /// (real parts, row-major, 17 significant digits).
    pub fn csv_row(&self, r: &Vec3, rp: &Vec3) -> String {
        let mut cols: Vec<String> = r.iter().chain(rp.iter()).map(|x| fmt_f64(*x)).collect();
        cols.push(self.kind.to_string());
        cols.push(self.route.as_str().to_string());
        for d in [&self.regular, &self.delta_coefficient] {
            cols.extend(d.entries().iter().map(|z| fmt_f64(z.re)));
        }
        cols.join(",")
    }
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum KernelBackend {
    /// Closed forms when the provider has them, the generic pipeline otherwise.
    #[default]
    Auto,
    ClosedForm,
    /// Richardson static limits and finite-difference curls. `step = None`
    /// picks `1e-2 · min(R, feature length)` with the fourth-order stencil.
    Generic {
        limits: RichardsonOptions,
        step: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelOptions {
    pub backend: KernelBackend,
    /// Largest imaginary part, relative to the kernel scale, accepted before
    /// reporting [`Error::ImaginaryResidue`].
    pub imag_tol: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            backend: KernelBackend::Auto,
            imag_tol: 1e-8,
        }
    }
}

impl KernelOptions {
    pub fn generic() -> Self {
        KernelOptions {
            backend: KernelBackend::Generic {
                limits: RichardsonOptions::default(),
                step: None,
            },
            ..Default::default()
        }
    }

    pub fn closed_form() -> Self {
        KernelOptions {
            backend: KernelBackend::ClosedForm,
            ..Default::default()
        }
    }
}

enum Resolved {
    Closed,
    Generic { limits: RichardsonOptions, step: FdStencil },
}

fn resolve(p: &dyn GreensProvider, r: &Vec3, rp: &Vec3, opts: &KernelOptions) -> Result<Resolved> {
    p.check_domain(r, rp)?;
    if r == rp {
        return Err(Error::CoincidentPoints {
            context: "kernel regular part".into(),
        });
    }
    let generic = |limits: RichardsonOptions, step: Option<f64>| {
        let (_, len) = separation(r, rp);
        let h = step.unwrap_or_else(|| 1e-2 * len.min(p.feature_length(r)).min(p.feature_length(rp)));
        Resolved::Generic {
            limits,
            step: FdStencil::with_step(h, FdOrder::Fourth),
        }
    };
    Ok(match opts.backend {
        KernelBackend::ClosedForm => Resolved::Closed,
        KernelBackend::Generic { limits, step } => generic(limits, step),
        KernelBackend::Auto => {
            if p.analytic_static_limits(r, rp).is_some() && p.analytic_static_curls(r, rp).is_some() {
                Resolved::Closed
            } else {
                generic(RichardsonOptions::default(), None)
            }
        }
    })
}

fn closed_curls(p: &dyn GreensProvider, r: &Vec3, rp: &Vec3) -> Result<StaticCurls> {
    p.analytic_static_curls(r, rp).unwrap_or_else(|| {
        Err(Error::invalid(
            "backend",
            format!("{} has no closed-form static curls", p.name()),
        ))
    })
}

fn route_of(res: &Resolved) -> Route {
    match res {
        Resolved::Closed => Route::ClosedForm,
        Resolved::Generic { .. } => Route::StaticLimits,
    }
}

/// Drops the imaginary part after checking it is negligible against the
/// larger of the kernel itself and the dipolar scale `1/(4πR³)`.
fn take_real(d: Dyadic, tol: f64, r: &Vec3, rp: &Vec3) -> Result<Dyadic> {
    let natural = 1.0 / (4.0 * PI * (r - rp).norm().powi(3));
    let scale = d.max_abs().max(natural);
    let im = d.max_abs_imag();
    if im > tol * scale {
        return Err(Error::ImaginaryResidue {
            residue: im,
            tolerance: tol * scale,
        });
    }
    Ok(d.re())
}

pub fn lambda_ee(p: &dyn GreensProvider, r: &Vec3, rp: &Vec3, opts: &KernelOptions) -> Result<KernelResult> {
    let res = resolve(p, r, rp, opts)?;
    let backend = match &res {
        Resolved::Closed => LimitsBackend::Analytic,
        Resolved::Generic { limits, .. } => LimitsBackend::Richardson(*limits),
    };
    let a = static_limits(p, r, rp, backend)?.w2;
    let b = static_limits(p, rp, r, backend)?.w2;
    let regular = take_real((a + b.transpose()) * 0.25, opts.imag_tol, r, rp)?;
    Ok(KernelResult {
        regular,
        delta_coefficient: Dyadic::identity() * 0.5,
        kind: KernelKind::Ee,
        route: route_of(&res),
        smoothed: false,
    })
}

/// Single-term form `½ d₀(r, r')`, valid for reciprocal providers.
pub fn lambda_ee_reciprocal(p: &dyn GreensProvider, r: &Vec3, rp: &Vec3) -> Result<Dyadic> {
    reciprocal_only(p)?;
    Ok(static_limits(p, r, rp, LimitsBackend::Auto)?.w2.re() * 0.5)
}

/// Single-term form `¼ ∇ × d₂(r, r') × ∇'`, valid for reciprocal providers.
pub fn lambda_mm_reciprocal(p: &dyn GreensProvider, r: &Vec3, rp: &Vec3, opts: &KernelOptions) -> Result<Dyadic> {
    reciprocal_only(p)?;
    let cc = match resolve(p, r, rp, opts)? {
        Resolved::Closed => closed_curls(p, r, rp)?.curl_curl_d2,
        Resolved::Generic { limits, step } => {
            let f = FnField(|a: &Vec3, b: &Vec3| {
                Ok(static_limits(p, a, b, LimitsBackend::Richardson(limits))?.d2)
            });
            two_sided_curl(&f, r, rp, DerivMode::FiniteDifference(step))?
        }
    };
    Ok(cc.re() * 0.25)
}

fn reciprocal_only(p: &dyn GreensProvider) -> Result<()> {
    if p.reciprocal() {
        Ok(())
    } else {
        Err(Error::invalid(
            "provider",
            format!("{} is not reciprocal", p.name()),
        ))
    }
}

fn cross_kernel(
    p: &dyn GreensProvider,
    r: &Vec3,
    rp: &Vec3,
    opts: &KernelOptions,
    kind: KernelKind,
) -> Result<KernelResult> {
    let res = resolve(p, r, rp, opts)?;
    // [d₁(r,r') − d₁ᵀ(r',r)] × ∇'  (em)   or   ∇ × [ ... ]  (me)
    let combined = match &res {
        Resolved::Closed => {
            let fwd = closed_curls(p, r, rp)?;
            let bwd = closed_curls(p, rp, r)?;
            match kind {
                KernelKind::Em => fwd.right_d1 - bwd.left_d1.transpose(),
                _ => fwd.left_d1 - bwd.right_d1.transpose(),
            }
        }
        Resolved::Generic { limits, step } => {
            let lb = LimitsBackend::Richardson(*limits);
            let f = FnField(|a: &Vec3, b: &Vec3| {
                Ok(static_limits(p, a, b, lb)?.d1 - static_limits(p, b, a, lb)?.d1.transpose())
            });
            let mode = DerivMode::FiniteDifference(*step);
            match kind {
                KernelKind::Em => right_curl(&f, r, rp, mode)?,
                _ => left_curl(&f, r, rp, mode)?,
            }
        }
    };
    let sign = if kind == KernelKind::Em { 0.25 } else { -0.25 };
    let raw = combined * (I * sign);
    let regular = take_real(raw, opts.imag_tol, r, rp)?;
    Ok(KernelResult::regular_only(regular, kind, route_of(&res)))
}

pub fn lambda_em(p: &dyn GreensProvider, r: &Vec3, rp: &Vec3, opts: &KernelOptions) -> Result<KernelResult> {
    cross_kernel(p, r, rp, opts, KernelKind::Em)
}

pub fn lambda_me(p: &dyn GreensProvider, r: &Vec3, rp: &Vec3, opts: &KernelOptions) -> Result<KernelResult> {
    cross_kernel(p, r, rp, opts, KernelKind::Me)
}

pub fn lambda_mm(p: &dyn GreensProvider, r: &Vec3, rp: &Vec3, opts: &KernelOptions) -> Result<KernelResult> {
    let res = resolve(p, r, rp, opts)?;
    let sum = match &res {
        Resolved::Closed => {
            closed_curls(p, r, rp)?.curl_curl_d2 + closed_curls(p, rp, r)?.curl_curl_d2.transpose()
        }
        Resolved::Generic { limits, step } => {
            let lb = LimitsBackend::Richardson(*limits);
            let f = FnField(|a: &Vec3, b: &Vec3| {
                Ok(static_limits(p, a, b, lb)?.d2 + static_limits(p, b, a, lb)?.d2.transpose())
            });
            two_sided_curl(&f, r, rp, DerivMode::FiniteDifference(*step))?
        }
    };
    let regular = take_real(sum * 0.125, opts.imag_tol, r, rp)?;
    Ok(KernelResult::regular_only(regular, KernelKind::Mm, route_of(&res)))
}

pub fn lambda(
    p: &dyn GreensProvider,
    kind: KernelKind,
    r: &Vec3,
    rp: &Vec3,
    opts: &KernelOptions,
) -> Result<KernelResult> {
    match kind {
        KernelKind::Ee => lambda_ee(p, r, rp, opts),
        KernelKind::Em => lambda_em(p, r, rp, opts),
        KernelKind::Me => lambda_me(p, r, rp, opts),
        KernelKind::Mm => lambda_mm(p, r, rp, opts),
    }
}

/// Evaluates one kernel kind over a batch of point pairs in parallel.
pub fn lambda_batch(
    p: &dyn GreensProvider,
    kind: KernelKind,
    pairs: &[(Vec3, Vec3)],
    opts: &KernelOptions,
) -> Vec<Result<KernelResult>> {
    pairs
        .par_iter()
        .map(|(r, rp)| lambda(p, kind, r, rp, opts))
        .collect()
}

fn dipolar(r: &Vec3, rp: &Vec3) -> (Dyadic, Dyadic) {
    let (n, len) = separation(r, rp);
    let nn = Dyadic::outer_real(&n, &n);
    let regular = if len > 0.0 {
        (nn * 3.0 - Dyadic::identity()) * (1.0 / (8.0 * PI * len.powi(3)))
    } else {
        Dyadic::zero()
    };
    (regular, nn)
}

fn reference_delta(nn: Dyadic, smoothing: bool) -> Dyadic {
    let id = Dyadic::identity();
    if smoothing {
        id * (1.0 / 3.0)
    } else {
        (id - nn) * 0.5
    }
}

/// Free-space electric kernel `(3nn − I)/(8πR³) + ½(I − nn) δ(R)`.
///
/// At `r = r'` the direction `n` is undefined and taken as zero, so the
/// unsmoothed coefficient reduces to `I/2`.
pub fn free_space_lambda_ee_reference(r: &Vec3, rp: &Vec3, smoothing: bool) -> KernelResult {
    let (regular, nn) = dipolar(r, rp);
    KernelResult {
        regular,
        delta_coefficient: reference_delta(nn, smoothing),
        kind: KernelKind::Ee,
        route: Route::ClosedForm,
        smoothed: smoothing,
    }
}

/// Free-space magnetic kernel `(3nn − I)/(8πR³) + ½(I − nn) δ(R)`.
pub fn free_space_lambda_mm_reference(r: &Vec3, rp: &Vec3, smoothing: bool) -> KernelResult {
    let (regular, nn) = dipolar(r, rp);
    KernelResult {
        regular,
        delta_coefficient: reference_delta(nn, smoothing),
        kind: KernelKind::Mm,
        route: Route::ClosedForm,
        smoothed: smoothing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{FreeSpace, MirrorHalfSpace, SyntheticNonreciprocal};

    fn pair() -> (Vec3, Vec3) {
        (Vec3::new(0.1, -0.3, 0.7), Vec3::new(0.5, 0.2, 1.6))
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("mm".parse::<KernelKind>().unwrap(), KernelKind::Mm);
        assert_eq!("xx".parse::<KernelKind>().unwrap_err().kind(), "UnknownQuantityKind");
    }

    #[test]
    fn free_space_ee_matches_reference() {
        let (r, rp) = pair();
        let k = lambda_ee(&FreeSpace::default(), &r, &rp, &KernelOptions::default()).unwrap();
        let reference = free_space_lambda_ee_reference(&r, &rp, true);
        assert!(k.regular.rel_diff(&reference.regular) < 1e-13);
        assert_eq!(k.route, Route::ClosedForm);
        assert!(k.delta_coefficient.rel_diff(&(Dyadic::identity() * 0.5)) < 1e-15);
    }

    #[test]
    fn smoothing_flag_delta_coefficients() {
        let r = Vec3::zeros();
        let rp = Vec3::new(0.0, 0.0, 2.0);
        let third = Dyadic::identity() * (1.0 / 3.0);
        assert!(free_space_lambda_ee_reference(&r, &rp, true).delta_coefficient.rel_diff(&third) < 1e-15);
        assert!(free_space_lambda_mm_reference(&r, &rp, true).delta_coefficient.rel_diff(&third) < 1e-15);
        let raw = free_space_lambda_mm_reference(&r, &rp, false).delta_coefficient;
        assert!((raw[(2, 2)].re).abs() < 1e-15);
        assert!((raw[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn free_space_mm_closed_and_generic() {
        let (r, rp) = pair();
        let p = FreeSpace::default();
        let reference = free_space_lambda_mm_reference(&r, &rp, true).regular;
        let c = lambda_mm(&p, &r, &rp, &KernelOptions::closed_form()).unwrap();
        let g = lambda_mm(&p, &r, &rp, &KernelOptions::generic()).unwrap();
        assert!(c.regular.rel_diff(&reference) < 1e-13);
        assert!(g.regular.rel_diff(&reference) < 1e-5, "{}", g.regular.rel_diff(&reference));
        assert_eq!(g.route, Route::StaticLimits);
    }

    #[test]
    fn reciprocal_cross_kernels_vanish() {
        let (r, rp) = pair();
        for p in [&FreeSpace::default() as &dyn GreensProvider, &MirrorHalfSpace::default()] {
            for opts in [KernelOptions::closed_form(), KernelOptions::generic()] {
                let em = lambda_em(p, &r, &rp, &opts).unwrap();
                let me = lambda_me(p, &r, &rp, &opts).unwrap();
                assert!(em.regular.max_abs() < 1e-10);
                assert!(me.regular.max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn nonreciprocal_cross_kernels() {
        let (r, rp) = pair();
        let p = SyntheticNonreciprocal::default();
        let c_em = lambda_em(&p, &r, &rp, &KernelOptions::closed_form()).unwrap();
        let c_me = lambda_me(&p, &r, &rp, &KernelOptions::closed_form()).unwrap();
        assert!(c_em.regular.max_abs() > 1e-3);
        let g_em = lambda_em(&p, &r, &rp, &KernelOptions::generic()).unwrap();
        assert!(g_em.regular.rel_diff(&c_em.regular) < 1e-7, "{}", g_em.regular.rel_diff(&c_em.regular));
        let swapped = lambda_em(&p, &rp, &r, &KernelOptions::closed_form()).unwrap();
        assert!(c_me.regular.rel_diff(&swapped.regular.transpose()) < 1e-12);
    }

    #[test]
    fn reciprocal_single_term_forms() {
        let (r, rp) = pair();
        let p = MirrorHalfSpace::default();
        let ee = lambda_ee(&p, &r, &rp, &KernelOptions::default()).unwrap();
        assert!(ee.regular.rel_diff(&lambda_ee_reciprocal(&p, &r, &rp).unwrap()) < 1e-12);
        let mm = lambda_mm(&p, &r, &rp, &KernelOptions::default()).unwrap();
        let single = lambda_mm_reciprocal(&p, &r, &rp, &KernelOptions::default()).unwrap();
        assert!(mm.regular.rel_diff(&single) < 1e-12);
        assert!(lambda_ee_reciprocal(&SyntheticNonreciprocal::default(), &r, &rp).is_err());
    }

    #[test]
    fn coincident_points_rejected() {
        let r = Vec3::new(0.0, 0.0, 1.0);
        let err = lambda_ee(&FreeSpace::default(), &r, &r, &KernelOptions::default()).unwrap_err();
        assert_eq!(err.kind(), "CoincidentPoints");
    }

    #[test]
    fn csv_row_has_all_columns() {
        let (r, rp) = pair();
        let k = free_space_lambda_ee_reference(&r, &rp, true);
        let row = k.csv_row(&r, &rp);
        assert_eq!(row.split(',').count(), KernelResult::csv_header().split(',').count());
        assert!(row.contains(",ee,closed-form,"));
    }
}
