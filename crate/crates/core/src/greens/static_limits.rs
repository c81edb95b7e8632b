use num_complex::Complex64;

use super::GreensProvider;
use crate::error::{Error, Result};
use crate::quadrature::richardson;
use crate::tensor::{Dyadic, Vec3};

/// `ω²G` and its first two ω-derivatives at `ω = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StaticLimits {
    pub w2: Dyadic,
    pub d1: Dyadic,
    pub d2: Dyadic,
    /// Error estimates for `w2`, `d1`, `d2`; zero for closed forms.
    pub error: [f64; 3],
}

impl StaticLimits {
    pub fn zero() -> Self {
        StaticLimits {
            w2: Dyadic::zero(),
            d1: Dyadic::zero(),
            d2: Dyadic::zero(),
            error: [0.0; 3],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RichardsonOptions {
    /// Largest frequency step; `None` selects `1e-2 / |r − r'|`.
    pub h0: Option<f64>,
    pub levels: usize,
    /// Accepted error relative to the natural scale `|ω²G|·Rᵏ`.
    pub tol: f64,
}

impl Default for RichardsonOptions {
    fn default() -> Self {
        RichardsonOptions {
            h0: None,
            levels: 4,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum LimitsBackend {
    /// Closed forms when the provider has them, Richardson otherwise.
    #[default]
    Auto,
    Analytic,
    Richardson(RichardsonOptions),
}

/// Static limits of `ω²G(r, r', ω)` at `ω → 0`.
pub fn static_limits(
    provider: &dyn GreensProvider,
    r: &Vec3,
    rp: &Vec3,
    backend: LimitsBackend,
) -> Result<StaticLimits> {
    match backend {
        LimitsBackend::Analytic => provider.analytic_static_limits(r, rp).unwrap_or_else(|| {
            Err(Error::invalid(
                "limits_backend",
                format!("{} has no closed-form static limits", provider.name()),
            ))
        }),
        LimitsBackend::Auto => match provider.analytic_static_limits(r, rp) {
            Some(l) => l,
            None => richardson_limits(provider, r, rp, &RichardsonOptions::default()),
        },
        LimitsBackend::Richardson(opts) => richardson_limits(provider, r, rp, &opts),
    }
}

fn richardson_limits(
    provider: &dyn GreensProvider,
    r: &Vec3,
    rp: &Vec3,
    opts: &RichardsonOptions,
) -> Result<StaticLimits> {
    if opts.levels < 2 {
        return Err(Error::invalid("richardson.levels", "need at least 2 levels"));
    }
    let len = (r - rp).norm();
    let length = if len > 0.0 { len } else { provider.feature_length(r).min(1.0) };
    let h0 = opts.h0.unwrap_or(1e-2 / length);
    if !(h0.is_finite() && h0 > 0.0) {
        return Err(Error::DegenerateStep { step: h0, scale: length });
    }
    let f0 = provider.w2g(r, rp, Complex64::default())?;
    let mut first = Vec::with_capacity(opts.levels);
    let mut second = Vec::with_capacity(opts.levels);
    let mut scale = f0.max_abs();
    let mut h = h0;
    for _ in 0..opts.levels {
        let fp = provider.w2g(r, rp, Complex64::from(h))?;
        let fm = provider.w2g(r, rp, Complex64::from(-h))?;
        scale = scale.max(fp.max_abs()).max(fm.max_abs());
        first.push((fp - fm) * (0.5 / h));
        second.push((fp - f0 * 2.0 + fm) * (1.0 / (h * h)));
        h *= 0.5;
    }
    let (d1, e1) = richardson(&first, 2);
    let (d2, e2) = richardson(&second, 2);
    for (k, (v, e)) in [(1, (&d1, e1)), (2, (&d2, e2))] {
        let natural = scale * length.powi(k);
        if !(e <= opts.tol * natural.max(v.max_abs())) {
            return Err(Error::NonConvergent(format!(
                "Richardson estimate of the order-{k} ω-derivative has error {e:e} at scale {natural:e}"
            )));
        }
    }
    Ok(StaticLimits {
        w2: f0,
        d1,
        d2,
        error: [0.0, e1, e2],
    })
}
