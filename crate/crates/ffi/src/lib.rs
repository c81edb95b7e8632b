//! C ABI over `cavity-kernels`.
//!
//! Every fallible function returns a [`CkStatus`]; on failure a message is
//! stored per thread and can be read with [`ck_last_error_message`]. Tensors
//! are written as 9 complex entries in row-major order. Points are `double[3]`.
//! Green's-tensor providers are opaque handles created by the
//! `ck_provider_*` constructors and released with [`ck_provider_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;

use cavity_kernels::cli::{self, Args};
use cavity_kernels::couplings::{lambda, KernelKind, KernelOptions};
use cavity_kernels::greens::{FreeSpace, GreensProvider, MirrorHalfSpace, ModeExpansion, SyntheticNonreciprocal};
use cavity_kernels::hamiltonian::{pairwise_dipole_energy, DipoleSite};
use cavity_kernels::mode_sum::{planar_cavity_modes, Polarization};
use cavity_kernels::spectral::{diamagnetic_ratio, residue_decomposition, ContourSpec, IntegrandKind};
use cavity_kernels::units::{convert_units_named, Direction};
use cavity_kernels::{Dyadic, Error, Vec3};
use num_complex::Complex64;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CkStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    InvalidInput = 2,
    /// Coincident points, points outside the provider domain or ω = 0 for `G`.
    Domain = 3,
    /// Extrapolation, quadrature or finite-difference failure.
    Numerical = 4,
    /// Dimension caps, regime violations and indefinite matrices.
    Limit = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CkComplex {
    pub re: f64,
    pub im: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CkKernelKind {
    Ee = 0,
    Em = 1,
    Me = 2,
    Mm = 3,
}

/// How static limits and curls are obtained.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CkBackend {
    /// Closed forms when available, generic otherwise.
    Auto = 0,
    ClosedForm = 1,
    Generic = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CkIntegrand {
    WG = 0,
    GCurl = 1,
    CurlG = 2,
    CurlGCurlOverW = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CkPolarization {
    X = 0,
    Y = 1,
}

/// Opaque Green's-tensor provider.
pub struct CkProvider {
    inner: Box<dyn GreensProvider>,
    name: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CkStatus {
    match e {
        Error::InvalidInput { .. } | Error::UnknownQuantityKind(_) => CkStatus::InvalidInput,
        Error::CoincidentPoints { .. } | Error::OutOfDomain(_) | Error::SingularFrequency => CkStatus::Domain,
        Error::DimensionCap { .. } | Error::RegimeViolation { .. } | Error::NotPositiveDefinite => CkStatus::Limit,
        _ => CkStatus::Numerical,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

/// Runs `f`, translating errors and panics into a status and the
/// thread-local message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CkStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CkStatus::Ok,
        Ok(Err(Fail::Null(arg))) => {
            set_error(format!("null pointer passed for `{arg}`"));
            CkStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(format!("{}: {e}", e.kind()));
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CkStatus::Panic
        }
    }
}

unsafe fn read_vec3(ptr: *const f64, arg: &'static str) -> Result<Vec3, Fail> {
    if ptr.is_null() {
        return Err(Fail::Null(arg));
    }
    let s = std::slice::from_raw_parts(ptr, 3);
    Ok(Vec3::new(s[0], s[1], s[2]))
}

unsafe fn provider<'a>(p: *const CkProvider) -> Result<&'a CkProvider, Fail> {
    p.as_ref().ok_or(Fail::Null("provider"))
}

unsafe fn write_dyadic(out: *mut CkComplex, d: &Dyadic) {
    let dst = std::slice::from_raw_parts_mut(out, 9);
    for (o, z) in dst.iter_mut().zip(d.entries()) {
        *o = CkComplex { re: z.re, im: z.im };
    }
}

unsafe fn emit(out: *mut *mut CkProvider, inner: Box<dyn GreensProvider>) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    let name = CString::new(inner.name()).expect("provider names are ASCII");
    *out = Box::into_raw(Box::new(CkProvider { inner, name }));
    Ok(())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ck_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failure on this thread, or null if the last
/// call succeeded. Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn ck_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn ck_provider_free_space(out: *mut *mut CkProvider) -> CkStatus {
    guard(|| emit(out, Box::new(FreeSpace::default())))
}

/// Perfect mirror occupying `z < plane_z`.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn ck_provider_mirror(plane_z: f64, out: *mut *mut CkProvider) -> CkStatus {
    guard(|| {
        if !plane_z.is_finite() {
            return Err(Error::invalid("plane_z", "must be finite").into());
        }
        emit(out, Box::new(MirrorHalfSpace::new(plane_z)))
    })
}

/// Free space plus an antisymmetric term along `bias` (`double[3]`).
///
/// # Safety
/// `bias` must point to 3 doubles and `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn ck_provider_nonreciprocal(bias: *const f64, out: *mut *mut CkProvider) -> CkStatus {
    guard(|| {
        let b = read_vec3(bias, "bias")?;
        if !b.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("bias", "must be finite").into());
        }
        emit(out, Box::new(SyntheticNonreciprocal::new(b)))
    })
}

/// Planar cavity of the given length as a truncated mode expansion with
/// `n_modes` modes and damping `gamma`.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn ck_provider_planar_cavity(
    length: f64,
    polarization: CkPolarization,
    n_modes: usize,
    gamma: f64,
    out: *mut *mut CkProvider,
) -> CkStatus {
    guard(|| {
        let pol = match polarization {
            CkPolarization::X => Polarization::X,
            CkPolarization::Y => Polarization::Y,
        };
        let family = planar_cavity_modes(length, pol)?;
        if n_modes == 0 {
            return Err(Error::invalid("n_modes", "need at least one mode").into());
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::invalid("gamma", "must be finite and non-negative").into());
        }
        emit(out, Box::new(ModeExpansion::new(Arc::new(family), n_modes, gamma)))
    })
}

/// Releases a provider. Null is ignored.
///
/// # Safety
/// `p` must come from a `ck_provider_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ck_provider_free(p: *mut CkProvider) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Provider name, owned by the handle.
///
/// # Safety
/// `p` must be a live provider handle or null.
#[no_mangle]
pub unsafe extern "C" fn ck_provider_name(p: *const CkProvider) -> *const c_char {
    p.as_ref().map_or(std::ptr::null(), |h| h.name.as_ptr())
}

/// `ω² G(r, r', ω)` written to `out[9]`.
///
/// # Safety
/// `r` and `rp` must point to 3 doubles, `out` to 9 writable complex values.
#[no_mangle]
pub unsafe extern "C" fn ck_w2g(
    p: *const CkProvider,
    r: *const f64,
    rp: *const f64,
    omega: CkComplex,
    out: *mut CkComplex,
) -> CkStatus {
    guard(|| {
        let h = provider(p)?;
        let (r, rp) = (read_vec3(r, "r")?, read_vec3(rp, "rp")?);
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let d = h.inner.w2g(&r, &rp, Complex64::new(omega.re, omega.im))?;
        write_dyadic(out, &d);
        Ok(())
    })
}

/// Static coupling kernel `λ^kind(r, r')`. The regular part goes to
/// `regular[9]`; the coefficient of `δ(r − r')` goes to `delta[9]` when
/// `delta` is non-null.
///
/// # Safety
/// `r` and `rp` must point to 3 doubles, `regular` (and `delta` if non-null)
/// to 9 writable complex values.
#[no_mangle]
pub unsafe extern "C" fn ck_kernel(
    p: *const CkProvider,
    kind: CkKernelKind,
    backend: CkBackend,
    r: *const f64,
    rp: *const f64,
    regular: *mut CkComplex,
    delta: *mut CkComplex,
) -> CkStatus {
    guard(|| {
        let h = provider(p)?;
        let (r, rp) = (read_vec3(r, "r")?, read_vec3(rp, "rp")?);
        if regular.is_null() {
            return Err(Fail::Null("regular"));
        }
        let kind = match kind {
            CkKernelKind::Ee => KernelKind::Ee,
            CkKernelKind::Em => KernelKind::Em,
            CkKernelKind::Me => KernelKind::Me,
            CkKernelKind::Mm => KernelKind::Mm,
        };
        let opts = match backend {
            CkBackend::Auto => KernelOptions::default(),
            CkBackend::ClosedForm => KernelOptions::closed_form(),
            CkBackend::Generic => KernelOptions::generic(),
        };
        let k = lambda(h.inner.as_ref(), kind, &r, &rp, &opts)?;
        write_dyadic(regular, &k.regular);
        if !delta.is_null() {
            write_dyadic(delta, &k.delta_coefficient);
        }
        Ok(())
    })
}

/// Keyhole-contour decomposition with contour radii scaled to `|r − r'|`.
/// Writes the real-axis plus large-arc integral to `sum[9]`, the residue at
/// the origin to `residue[9]` and the relative closure error to `closure`.
/// Any output pointer may be null.
///
/// # Safety
/// `r` and `rp` must point to 3 doubles; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_residue_decomposition(
    p: *const CkProvider,
    integrand: CkIntegrand,
    r: *const f64,
    rp: *const f64,
    levels: usize,
    sum: *mut CkComplex,
    residue: *mut CkComplex,
    closure: *mut f64,
) -> CkStatus {
    guard(|| {
        let h = provider(p)?;
        let (r, rp) = (read_vec3(r, "r")?, read_vec3(rp, "rp")?);
        let kind = match integrand {
            CkIntegrand::WG => IntegrandKind::WG,
            CkIntegrand::GCurl => IntegrandKind::GCurl,
            CkIntegrand::CurlG => IntegrandKind::CurlG,
            CkIntegrand::CurlGCurlOverW => IntegrandKind::CurlGCurlOverW,
        };
        let spec = ContourSpec::for_separation((r - rp).norm(), kind);
        let d = residue_decomposition(h.inner.as_ref(), &spec, &r, &rp, levels)?;
        if !sum.is_null() {
            write_dyadic(sum, &d.real_axis_plus_large_arc());
        }
        if !residue.is_null() {
            write_dyadic(residue, &d.residue);
        }
        if !closure.is_null() {
            *closure = d.relative_closure;
        }
        Ok(())
    })
}

/// Total pairwise dipole energy of `n` sites. `positions`, `d` and `m` are
/// `double[3 n]`; `d` or `m` may be null for zero moments.
///
/// # Safety
/// Non-null arrays must hold `3 n` doubles; `energy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_pairwise_energy(
    p: *const CkProvider,
    n: usize,
    positions: *const f64,
    d: *const f64,
    m: *const f64,
    energy: *mut f64,
) -> CkStatus {
    guard(|| {
        let h = provider(p)?;
        if positions.is_null() {
            return Err(Fail::Null("positions"));
        }
        if energy.is_null() {
            return Err(Fail::Null("energy"));
        }
        let moment = |ptr: *const f64, i: usize| {
            if ptr.is_null() {
                Vec3::zeros()
            } else {
                Vec3::new(*ptr.add(3 * i), *ptr.add(3 * i + 1), *ptr.add(3 * i + 2))
            }
        };
        let sites: Vec<DipoleSite> = (0..n)
            .map(|i| DipoleSite {
                position: moment(positions, i),
                d: moment(d, i),
                m: moment(m, i),
            })
            .collect();
        *energy = pairwise_dipole_energy(&sites, h.inner.as_ref(), &KernelOptions::default())?.total;
        Ok(())
    })
}

/// Size of the diamagnetic correction relative to the dipolar one for a
/// constituent with Compton wavelength `lambda_compton` at distance `r`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_diamagnetic_ratio(lambda_compton: f64, r: f64, out: *mut f64) -> CkStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        *out = diamagnetic_ratio(lambda_compton, r)?;
        Ok(())
    })
}

/// Converts `value` of the named quantity kind (for example `"length"`,
/// `"kernel_ee"`) between natural and SI units.
///
/// # Safety
/// `kind` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_convert_units(value: f64, kind: *const c_char, to_si: bool, out: *mut f64) -> CkStatus {
    guard(|| {
        if kind.is_null() {
            return Err(Fail::Null("kind"));
        }
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let kind = CStr::from_ptr(kind)
            .to_str()
            .map_err(|_| Error::invalid("kind", "not valid UTF-8"))?;
        let dir = if to_si { Direction::ToSi } else { Direction::ToNatural };
        *out = convert_units_named(value, kind, dir)?;
        Ok(())
    })
}

/// Runs a JSON configuration file as the command-line tool would and returns
/// its exit code (0 success, 1 failed checks or unwritable output, 2 invalid
/// input, 3 numerical failure). `out_dir` may be null; `threads` 0 uses all
/// cores.
///
/// # Safety
/// `config_path` and non-null `out_dir` must be nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn ck_run_config(config_path: *const c_char, out_dir: *const c_char, threads: usize) -> c_int {
    let mut code = 2;
    let status = guard(|| {
        if config_path.is_null() {
            return Err(Fail::Null("config_path"));
        }
        let path = |s: *const c_char| PathBuf::from(CStr::from_ptr(s).to_string_lossy().into_owned());
        let args = Args {
            config: path(config_path),
            out: (!out_dir.is_null()).then(|| path(out_dir)),
            threads: (threads > 0).then_some(threads),
            units: None,
            seed: None,
        };
        code = cli::run(&args);
        Ok(())
    });
    if status == CkStatus::Ok {
        code
    } else {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::NonConvergent("x".into())), CkStatus::Numerical);
        assert_eq!(status_of(&Error::SingularFrequency), CkStatus::Domain);
        assert_eq!(status_of(&Error::invalid("a", "b")), CkStatus::InvalidInput);
        assert_eq!(status_of(&Error::DimensionCap { dim: 2, cap: 1 }), CkStatus::Limit);
    }

    #[test]
    fn panics_are_contained() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, CkStatus::Panic);
        let msg = unsafe { CStr::from_ptr(ck_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }
}
