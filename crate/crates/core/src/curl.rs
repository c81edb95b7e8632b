//! One- and two-sided curls of tensor fields of two spatial arguments.
//!
//! With `T = T(r, r')`:
//!
//! * left curl:  `[∇_r × T]^{αβ}      = ε^{αγδ} ∂^γ_r T^{δβ}`
//! * right curl: `[T × ∇_{r'}]^{αβ}   = ε^{βγδ} ∂^γ_{r'} T^{αδ}`
//! * two-sided:  `[∇_r × T × ∇_{r'}]^{αβ} = ε^{αγδ} ε^{βμν} ∂^γ_r ∂^μ_{r'} T^{δν}`
//!
//! Derivatives come either from the field itself (closed forms) or from
//! central finite differences of order 2 or 4.

use crate::error::{Error, Result};
use crate::tensor::{levi_civita, Dyadic, Vec3};

/// Partial derivatives `∂T/∂x_γ`, indexed by `γ`.
pub type Gradient = [Dyadic; 3];
/// Mixed partials `∂²T/∂r_γ ∂r'_μ`, indexed `[γ][μ]`.
pub type MixedGradient = [[Dyadic; 3]; 3];

pub trait TensorField2: Sync {
    fn eval(&self, r: &Vec3, rp: &Vec3) -> Result<Dyadic>;

    /// Closed-form `∂T/∂r_γ`, if the field provides it.
    fn grad_left(&self, _r: &Vec3, _rp: &Vec3) -> Option<Result<Gradient>> {
        None
    }

    /// Closed-form `∂T/∂r'_γ`, if the field provides it.
    fn grad_right(&self, _r: &Vec3, _rp: &Vec3) -> Option<Result<Gradient>> {
        None
    }

    /// Closed-form `∂²T/∂r_γ∂r'_μ`, if the field provides it.
    fn grad_mixed(&self, _r: &Vec3, _rp: &Vec3) -> Option<Result<MixedGradient>> {
        None
    }
}

/// A tensor field backed by a closure; finite differences only.
pub struct FnField<F>(pub F);

impl<F> TensorField2 for FnField<F>
where
    F: Fn(&Vec3, &Vec3) -> Result<Dyadic> + Sync,
{
    fn eval(&self, r: &Vec3, rp: &Vec3) -> Result<Dyadic> {
        (self.0)(r, rp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FdOrder {
    #[default]
    Second,
    Fourth,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FdStencil {
    /// Absolute step; `None` selects `1e-4 · max(1, |x|)`.
    pub step: Option<f64>,
    pub order: FdOrder,
}

impl FdStencil {
    pub fn with_step(step: f64, order: FdOrder) -> Self {
        FdStencil {
            step: Some(step),
            order,
        }
    }

    fn resolve(&self, x: &Vec3) -> Result<f64> {
        let scale = x.norm();
        let h = self.step.unwrap_or(1e-4 * scale.max(1.0));
        if !(h.is_finite() && h > 16.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::DegenerateStep { step: h, scale });
        }
        Ok(h)
    }

    fn weights(&self) -> &'static [(f64, f64)] {
        match self.order {
            FdOrder::Second => &[(-1.0, -0.5), (1.0, 0.5)],
            FdOrder::Fourth => &[
                (-2.0, 1.0 / 12.0),
                (-1.0, -8.0 / 12.0),
                (1.0, 8.0 / 12.0),
                (2.0, -1.0 / 12.0),
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum DerivMode {
    /// Closed forms when the field has them, default finite differences otherwise.
    #[default]
    Auto,
    Analytic,
    FiniteDifference(FdStencil),
}

fn unit(g: usize) -> Vec3 {
    let mut e = Vec3::zeros();
    e[g] = 1.0;
    e
}

fn fd_gradient(
    field: &dyn TensorField2,
    r: &Vec3,
    rp: &Vec3,
    stencil: &FdStencil,
    right: bool,
) -> Result<Gradient> {
    let h = stencil.resolve(if right { rp } else { r })?;
    let mut out = [Dyadic::zero(); 3];
    for (g, slot) in out.iter_mut().enumerate() {
        let e = unit(g);
        let mut acc = Dyadic::zero();
        for &(off, w) in stencil.weights() {
            let val = if right {
                field.eval(r, &(rp + e * (off * h)))?
            } else {
                field.eval(&(r + e * (off * h)), rp)?
            };
            acc += val * w;
        }
        *slot = acc * (1.0 / h);
    }
    Ok(out)
}

fn fd_mixed(
    field: &dyn TensorField2,
    r: &Vec3,
    rp: &Vec3,
    stencil: &FdStencil,
) -> Result<MixedGradient> {
    let h = stencil.resolve(r)?;
    let hp = stencil.resolve(rp)?;
    let weights = stencil.weights();
    let mut out = [[Dyadic::zero(); 3]; 3];
    for g in 0..3 {
        for m in 0..3 {
            let (eg, em) = (unit(g), unit(m));
            let mut acc = Dyadic::zero();
            for &(oa, wa) in weights {
                for &(ob, wb) in weights {
                    let val = field.eval(&(r + eg * (oa * h)), &(rp + em * (ob * hp)))?;
                    acc += val * (wa * wb);
                }
            }
            out[g][m] = acc * (1.0 / (h * hp));
        }
    }
    Ok(out)
}

fn missing(what: &str) -> Error {
    Error::invalid("deriv_mode", format!("field has no closed-form {what}"))
}

pub fn gradient_left(
    field: &dyn TensorField2,
    r: &Vec3,
    rp: &Vec3,
    mode: DerivMode,
) -> Result<Gradient> {
    match mode {
        DerivMode::Analytic => field
            .grad_left(r, rp)
            .unwrap_or_else(|| Err(missing("left gradient"))),
        DerivMode::Auto => match field.grad_left(r, rp) {
            Some(g) => g,
            None => fd_gradient(field, r, rp, &FdStencil::default(), false),
        },
        DerivMode::FiniteDifference(s) => fd_gradient(field, r, rp, &s, false),
    }
}

pub fn gradient_right(
    field: &dyn TensorField2,
    r: &Vec3,
    rp: &Vec3,
    mode: DerivMode,
) -> Result<Gradient> {
    match mode {
        DerivMode::Analytic => field
            .grad_right(r, rp)
            .unwrap_or_else(|| Err(missing("right gradient"))),
        DerivMode::Auto => match field.grad_right(r, rp) {
            Some(g) => g,
            None => fd_gradient(field, r, rp, &FdStencil::default(), true),
        },
        DerivMode::FiniteDifference(s) => fd_gradient(field, r, rp, &s, true),
    }
}

pub fn gradient_mixed(
    field: &dyn TensorField2,
    r: &Vec3,
    rp: &Vec3,
    mode: DerivMode,
) -> Result<MixedGradient> {
    match mode {
        DerivMode::Analytic => field
            .grad_mixed(r, rp)
            .unwrap_or_else(|| Err(missing("mixed gradient"))),
        DerivMode::Auto => match field.grad_mixed(r, rp) {
            Some(g) => g,
            None => fd_mixed(field, r, rp, &FdStencil::default()),
        },
        DerivMode::FiniteDifference(s) => fd_mixed(field, r, rp, &s),
    }
}

/// `[∇ × T]^{αβ} = ε^{αγδ} D_γ^{δβ}` for a left gradient `D`.
pub fn contract_left(grad: &Gradient) -> Dyadic {
    Dyadic::from_fn(|a, b| {
        let mut s = num_complex::Complex64::default();
        for g in 0..3 {
            for d in 0..3 {
                let e = levi_civita(a, g, d);
                if e != 0.0 {
                    s += grad[g][(d, b)] * e;
                }
            }
        }
        s
    })
}

/// `[T × ∇']^{αβ} = ε^{βγδ} D'_γ^{αδ}` for a right gradient `D'`.
pub fn contract_right(grad: &Gradient) -> Dyadic {
    Dyadic::from_fn(|a, b| {
        let mut s = num_complex::Complex64::default();
        for g in 0..3 {
            for d in 0..3 {
                let e = levi_civita(b, g, d);
                if e != 0.0 {
                    s += grad[g][(a, d)] * e;
                }
            }
        }
        s
    })
}

pub fn contract_two_sided(mixed: &MixedGradient) -> Dyadic {
    Dyadic::from_fn(|a, b| {
        let mut s = num_complex::Complex64::default();
        for g in 0..3 {
            for d in 0..3 {
                let e1 = levi_civita(a, g, d);
                if e1 == 0.0 {
                    continue;
                }
                for m in 0..3 {
                    for n in 0..3 {
                        let e2 = levi_civita(b, m, n);
                        if e2 != 0.0 {
                            s += mixed[g][m][(d, n)] * (e1 * e2);
                        }
                    }
                }
            }
        }
        s
    })
}

pub fn left_curl(field: &dyn TensorField2, r: &Vec3, rp: &Vec3, mode: DerivMode) -> Result<Dyadic> {
    Ok(contract_left(&gradient_left(field, r, rp, mode)?))
}

pub fn right_curl(
    field: &dyn TensorField2,
    r: &Vec3,
    rp: &Vec3,
    mode: DerivMode,
) -> Result<Dyadic> {
    Ok(contract_right(&gradient_right(field, r, rp, mode)?))
}

pub fn two_sided_curl(
    field: &dyn TensorField2,
    r: &Vec3,
    rp: &Vec3,
    mode: DerivMode,
) -> Result<Dyadic> {
    Ok(contract_two_sided(&gradient_mixed(field, r, rp, mode)?))
}

/// Left curl of a field, viewed as a new tensor field.
pub struct LeftCurl<'a> {
    pub inner: &'a dyn TensorField2,
    pub mode: DerivMode,
}

impl TensorField2 for LeftCurl<'_> {
    fn eval(&self, r: &Vec3, rp: &Vec3) -> Result<Dyadic> {
        left_curl(self.inner, r, rp, self.mode)
    }
}

/// Right curl of a field, viewed as a new tensor field.
pub struct RightCurl<'a> {
    pub inner: &'a dyn TensorField2,
    pub mode: DerivMode,
}

impl TensorField2 for RightCurl<'_> {
    fn eval(&self, r: &Vec3, rp: &Vec3) -> Result<Dyadic> {
        right_curl(self.inner, r, rp, self.mode)
    }
}
