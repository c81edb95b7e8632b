//! Discrete cavity modes and the mode-sum forms of the couplings.
//!
//! * `λ^ee = Σ Re[E_n ⊗ E_n*] / ω_n`
//! * `λ^em = Σ Im[E_n ⊗ (∇ × E_n)*] / ω_n²`, `λ^me = Σ Im[(∇ × E_n) ⊗ E_n*] / ω_n²`
//! * `λ^mm = Σ Re[B_n ⊗ B_n*] / ω_n`
//! * `Ω    = Σ Re[B_n ⊗ B_n*]`
//!
//! with `B_n = (∇ × E_n)/(iω_n)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::{KernelKind, KernelResult, Route};
use crate::curl::{two_sided_curl, DerivMode, FdOrder, FdStencil, FnField};
use crate::error::{Error, Result};
use crate::quadrature::wynn_epsilon;
use crate::tensor::{CVec3, Dyadic, Vec3};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A family of discrete modes indexed from 1.
pub trait ModeFamily: Send + Sync {
    fn geometry_tag(&self) -> String;

    /// Largest valid index, or `None` for an unbounded family.
    fn truncation(&self) -> Option<usize> {
        None
    }

    fn omega(&self, n: usize) -> f64;

    fn check_domain(&self, r: &Vec3) -> Result<()>;

    fn e_field(&self, n: usize, r: &Vec3) -> Result<CVec3>;

    /// `∇ × E_n`.
    fn curl_e(&self, n: usize, r: &Vec3) -> Result<CVec3>;

    fn b_field(&self, n: usize, r: &Vec3) -> Result<CVec3> {
        let w = self.omega(n);
        Ok(self.curl_e(n, r)? / (I * w))
    }

    /// Length scale of the field variation of mode `n`.
    fn wavelength(&self, n: usize) -> f64 {
        2.0 * PI / self.omega(n)
    }

    fn mode(&self, n: usize) -> Mode<'_>
    where
        Self: Sized,
    {
        Mode {
            family: self,
            index: n,
            omega: self.omega(n),
        }
    }
}

/// One mode of a family.
#[derive(Clone, Copy)]
pub struct Mode<'a> {
    pub family: &'a dyn ModeFamily,
    pub index: usize,
    pub omega: f64,
}

impl Mode<'_> {
    pub fn e_field(&self, r: &Vec3) -> Result<CVec3> {
        self.family.e_field(self.index, r)
    }

    pub fn b_field(&self, r: &Vec3) -> Result<CVec3> {
        self.family.b_field(self.index, r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    #[default]
    X,
    Y,
}

/// Fabry–Pérot modes between perfect mirrors at `z = 0` and `z = L`:
/// `E_n = N_n sin(nπz/L) ê`, `ω_n = nπ/L`.
///
/// `N_n² = 2/(L ω_n)` fixes the normalization: `Σ E_n E_n/ω_n` then equals
/// the Dirichlet Green's function `z<(L − z>)/L` of `−∂²_z` on `[0, L]`.
#[derive(Clone, Debug)]
pub struct PlanarCavity {
    pub length: f64,
    pub polarization: Polarization,
    pub truncation: Option<usize>,
}

pub fn planar_cavity_modes(length: f64, polarization: Polarization) -> Result<PlanarCavity> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::invalid("length", "cavity length must be positive"));
    }
    Ok(PlanarCavity {
        length,
        polarization,
        truncation: None,
    })
}

impl PlanarCavity {
    pub fn truncated(mut self, n: usize) -> Self {
        self.truncation = Some(n);
        self
    }

    fn norm(&self, n: usize) -> f64 {
        (2.0 / (self.length * self.omega(n))).sqrt()
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n == 0 || self.truncation.is_some_and(|t| n > t) {
            return Err(Error::invalid("mode index", format!("{n} outside the family")));
        }
        Ok(())
    }

    /// `z<(L − z>)/L`, the 1D electrostatic kernel the ee mode sum converges to.
    pub fn electrostatic_kernel(&self, z: f64, zp: f64) -> f64 {
        let (lo, hi) = if z < zp { (z, zp) } else { (zp, z) };
        lo * (self.length - hi) / self.length
    }
}

impl ModeFamily for PlanarCavity {
    fn geometry_tag(&self) -> String {
        format!("planar_cavity(L={})", self.length)
    }

    fn truncation(&self) -> Option<usize> {
        self.truncation
    }

    fn omega(&self, n: usize) -> f64 {
        n as f64 * PI / self.length
    }

    fn check_domain(&self, r: &Vec3) -> Result<()> {
        if !(r[2] > 0.0 && r[2] < self.length) || !r.iter().all(|x| x.is_finite()) {
            return Err(Error::OutOfDomain(format!(
                "z = {} outside the cavity (0, {})",
                r[2], self.length
            )));
        }
        Ok(())
    }

    fn e_field(&self, n: usize, r: &Vec3) -> Result<CVec3> {
        self.check_index(n)?;
        self.check_domain(r)?;
        let s = Complex64::from(self.norm(n) * (self.omega(n) * r[2]).sin());
        let zero = Complex64::default();
        Ok(match self.polarization {
            Polarization::X => CVec3::new(s, zero, zero),
            Polarization::Y => CVec3::new(zero, s, zero),
        })
    }

    fn curl_e(&self, n: usize, r: &Vec3) -> Result<CVec3> {
        self.check_index(n)?;
        self.check_domain(r)?;
        let k = self.omega(n);
        let c = Complex64::from(self.norm(n) * k * (k * r[2]).cos());
        let zero = Complex64::default();
        Ok(match self.polarization {
            Polarization::X => CVec3::new(zero, c, zero),
            Polarization::Y => CVec3::new(-c, zero, zero),
        })
    }
}

/// `F_n(r, r') = E_n(r) ⊗ E_n*(r')`.
pub fn f_tensor(f: &dyn ModeFamily, n: usize, r: &Vec3, rp: &Vec3) -> Result<Dyadic> {
    Ok(Dyadic::outer(&f.e_field(n, r)?, &f.e_field(n, rp)?.conjugate()))
}

fn mode_term(f: &dyn ModeFamily, kind: KernelKind, n: usize, r: &Vec3, rp: &Vec3) -> Result<Dyadic> {
    let w = f.omega(n);
    Ok(match kind {
        KernelKind::Ee => f_tensor(f, n, r, rp)?.re() * (1.0 / w),
        KernelKind::Em => {
            Dyadic::outer(&f.e_field(n, r)?, &f.curl_e(n, rp)?.conjugate()).im() * (1.0 / (w * w))
        }
        KernelKind::Me => {
            Dyadic::outer(&f.curl_e(n, r)?, &f.e_field(n, rp)?.conjugate()).im() * (1.0 / (w * w))
        }
        KernelKind::Mm => {
            Dyadic::outer(&f.b_field(n, r)?, &f.b_field(n, rp)?.conjugate()).re() * (1.0 / w)
        }
    })
}

/// Partial sums of a mode series.
#[derive(Clone, Debug)]
pub struct ConvergenceRecord {
    /// `(N, S_N)` at `N = 1, 10, 100, ...` and at the final `N`.
    pub checkpoints: Vec<(usize, Dyadic)>,
    /// Wynn-ε estimate of the limit, entry by entry, from the last partial
    /// sums; falls back to the plain partial sum when the acceleration
    /// disagrees with the observed tail.
    pub accelerated: Dyadic,
    /// `|S_N − S_{N/2}|`, a bound on the remaining tail for monotone series.
    pub tail_estimate: f64,
}

#[derive(Clone, Debug)]
pub struct ModeSumResult {
    pub kernel: KernelResult,
    pub record: ConvergenceRecord,
}

fn sum_terms(terms: &[Dyadic]) -> ConvergenceRecord {
    let n = terms.len();
    let mut checkpoints = Vec::new();
    let mut partial = Vec::with_capacity(n);
    let mut s = Dyadic::zero();
    let mut next_cp = 1;
    for (i, t) in terms.iter().enumerate() {
        s += *t;
        partial.push(s);
        if i + 1 == next_cp {
            checkpoints.push((i + 1, s));
            next_cp *= 10;
        }
    }
    if checkpoints.last().map(|c| c.0) != Some(n) {
        checkpoints.push((n, s));
    }
    let half = partial[(n / 2).max(1) - 1];
    let tail_estimate = (s - half).max_abs();
    let window = 15.min(n);
    let accelerated = if window >= 3 {
        let tail = &partial[n - window..];
        let acc = Dyadic::from_fn(|i, j| {
            let re: Vec<f64> = tail.iter().map(|d| d[(i, j)].re).collect();
            let im: Vec<f64> = tail.iter().map(|d| d[(i, j)].im).collect();
            Complex64::new(wynn_epsilon(&re), wynn_epsilon(&im))
        });
        if (acc - s).max_abs() <= tail_estimate.max(f64::EPSILON * s.max_abs()) {
            acc
        } else {
            s
        }
    } else {
        s
    };
    ConvergenceRecord {
        checkpoints,
        accelerated,
        tail_estimate,
    }
}

fn terms(
    f: &dyn ModeFamily,
    n_max: usize,
    term: impl Fn(usize) -> Result<Dyadic> + Sync + Send,
) -> Result<Vec<Dyadic>> {
    if n_max == 0 {
        return Err(Error::invalid("n_max", "need at least one mode"));
    }
    if let Some(t) = f.truncation() {
        if n_max > t {
            return Err(Error::invalid("n_max", format!("family has only {t} modes")));
        }
    }
    (1..=n_max).into_par_iter().map(term).collect()
}

/// Mode-sum kernel through `n_max` modes. The returned regular part is the
/// plain partial sum; the record carries the accelerated estimate.
pub fn lambda_modesum(
    f: &dyn ModeFamily,
    kind: KernelKind,
    r: &Vec3,
    rp: &Vec3,
    n_max: usize,
) -> Result<ModeSumResult> {
    f.check_domain(r)?;
    f.check_domain(rp)?;
    let ts = terms(f, n_max, |n| mode_term(f, kind, n, r, rp))?;
    let record = sum_terms(&ts);
    let last = record.checkpoints.last().expect("non-empty").1;
    Ok(ModeSumResult {
        kernel: KernelResult::regular_only(last, kind, Route::ModeSum),
        record,
    })
}

#[derive(Clone, Debug)]
pub struct OmegaModeSum {
    /// `Σ Re[B_n ⊗ B_n*]`.
    pub b_sum: Dyadic,
    /// `∇ × Σ Re[F_n]/ω_n² × ∇'` with finite-difference curls per mode.
    pub curl_curl_sum: Dyadic,
    /// Largest per-mode difference between the two forms, relative to the
    /// largest single-mode term.
    pub max_mode_rel_diff: f64,
    pub record: ConvergenceRecord,
}

/// Diamagnetic tensor `Ω(r, r')` by both mode-sum formulas.
pub fn diamagnetic_omega_modesum(
    f: &dyn ModeFamily,
    r: &Vec3,
    rp: &Vec3,
    n_max: usize,
) -> Result<OmegaModeSum> {
    f.check_domain(r)?;
    f.check_domain(rp)?;
    let b_terms = terms(f, n_max, |n| {
        Ok(Dyadic::outer(&f.b_field(n, r)?, &f.b_field(n, rp)?.conjugate()).re())
    })?;
    let cc_terms = terms(f, n_max, |n| {
        let w2 = f.omega(n).powi(2);
        let field = FnField(|a: &Vec3, b: &Vec3| Ok(f_tensor(f, n, a, b)?.re() * (1.0 / w2)));
        let h = 1e-3 * f.wavelength(n);
        let mode = DerivMode::FiniteDifference(FdStencil::with_step(h, FdOrder::Fourth));
        Ok(two_sided_curl(&field, r, rp, mode)?.re())
    })?;
    let scale = b_terms.iter().fold(f64::MIN_POSITIVE, |m, b| m.max(b.max_abs()));
    let max_mode_rel_diff = b_terms
        .iter()
        .zip(&cc_terms)
        .fold(0.0f64, |m, (b, c)| m.max((*b - *c).max_abs() / scale));
    let record = sum_terms(&b_terms);
    Ok(OmegaModeSum {
        b_sum: record.checkpoints.last().expect("non-empty").1,
        curl_curl_sum: cc_terms.iter().copied().sum(),
        max_mode_rel_diff,
        record,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cavity() -> PlanarCavity {
        planar_cavity_modes(1.0, Polarization::X).unwrap()
    }

    #[test]
    fn fundamental_frequency() {
        let c = planar_cavity_modes(2.0, Polarization::X).unwrap();
        assert!((c.omega(1) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn b_vanishes_at_e_maximum() {
        let c = cavity();
        let r = Vec3::new(0.0, 0.0, 0.5);
        assert!(c.b_field(1, &r).unwrap().norm() < 1e-15);
        assert!(c.e_field(1, &r).unwrap().norm() > 0.1);
    }

    #[test]
    fn out_of_domain() {
        let c = cavity();
        assert_eq!(
            c.e_field(1, &Vec3::new(0.0, 0.0, 1.5)).unwrap_err().kind(),
            "OutOfDomain"
        );
    }

    #[test]
    fn normalization_reproduces_electrostatic_kernel() {
        let c = cavity();
        let r = Vec3::new(0.0, 0.0, 0.3);
        let rp = Vec3::new(0.0, 0.0, 0.6);
        let res = lambda_modesum(&c, KernelKind::Ee, &r, &rp, 10_000).unwrap();
        let exact = c.electrostatic_kernel(0.3, 0.6);
        let got = res.record.accelerated[(0, 0)].re;
        assert!((got - exact).abs() < 1e-6 * exact, "{got} vs {exact}");
    }

    #[test]
    fn cross_kernels_vanish_for_real_profiles() {
        let c = cavity();
        let r = Vec3::new(0.1, 0.0, 0.3);
        let rp = Vec3::new(0.0, 0.2, 0.7);
        for kind in [KernelKind::Em, KernelKind::Me] {
            for n in [1, 7, 50] {
                let res = lambda_modesum(&c, kind, &r, &rp, n).unwrap();
                assert_eq!(res.kernel.regular.max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn f_tensor_rank_one_and_psd() {
        let c = planar_cavity_modes(1.0, Polarization::Y).unwrap();
        let r = Vec3::new(0.0, 0.0, 0.2);
        let f = f_tensor(&c, 3, &r, &r).unwrap();
        let m = f.real_matrix();
        assert!(m.determinant().abs() < 1e-15);
        assert!(m.symmetric_eigenvalues().iter().all(|&e| e > -1e-15));
    }

    #[test]
    fn omega_formulas_agree_and_are_symmetric() {
        let c = cavity();
        let r = Vec3::new(0.0, 0.0, 0.35);
        let rp = Vec3::new(0.0, 0.0, 0.8);
        let a = diamagnetic_omega_modesum(&c, &r, &rp, 20).unwrap();
        assert!(a.max_mode_rel_diff < 1e-9, "{}", a.max_mode_rel_diff);
        let b = diamagnetic_omega_modesum(&c, &rp, &r, 20).unwrap();
        assert!(a.b_sum.rel_diff(&b.b_sum.transpose()) < 1e-14);
    }

    #[test]
    fn truncated_family_limits_n() {
        let c = cavity().truncated(2);
        let r = Vec3::new(0.0, 0.0, 0.3);
        assert!(lambda_modesum(&c, KernelKind::Ee, &r, &r, 3).is_err());
        assert!(lambda_modesum(&c, KernelKind::Ee, &r, &r, 2).is_ok());
    }
}
