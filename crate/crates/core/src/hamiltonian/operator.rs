//! Matter-only Hamiltonian matrices for a few sites with operator-valued dipoles.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{check_distinct, kernels_at};
use crate::couplings::{KernelKind, KernelOptions};
use crate::error::{Error, Result};
use crate::greens::GreensProvider;
use crate::tensor::{Dyadic, Vec3};

pub const DEFAULT_SITE_CAP: usize = 8;

pub type CMatrix = DMatrix<Complex64>;

/// Site with a local Hamiltonian and Hermitian dipole operators on its own space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSite {
    pub position: Vec3,
    pub h_local: CMatrix,
    pub d: [CMatrix; 3],
    pub m: [CMatrix; 3],
}

impl OperatorSite {
    /// Site with vanishing dipole operators.
    pub fn new(position: Vec3, h_local: CMatrix) -> Self {
        let n = h_local.nrows();
        let z = || CMatrix::zeros(n, n);
        OperatorSite {
            position,
            h_local,
            d: [z(), z(), z()],
            m: [z(), z(), z()],
        }
    }

    pub fn with_d(mut self, d: [CMatrix; 3]) -> Self {
        self.d = d;
        self
    }

    pub fn with_m(mut self, m: [CMatrix; 3]) -> Self {
        self.m = m;
        self
    }

    pub fn dim(&self) -> usize {
        self.h_local.nrows()
    }

    fn check(&self, i: usize, tol: f64) -> Result<()> {
        let n = self.dim();
        let ops = std::iter::once(&self.h_local).chain(&self.d).chain(&self.m);
        for (k, op) in ops.enumerate() {
            if op.nrows() != n || op.ncols() != n {
                return Err(Error::invalid(format!("sites[{i}]"), format!("operator {k} is not {n}x{n}")));
            }
            if !op.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::invalid(format!("sites[{i}]"), format!("operator {k} is not finite")));
            }
            let scale = op.iter().map(|z| z.norm()).fold(1.0, f64::max);
            if (op - op.adjoint()).iter().any(|z| z.norm() > tol * scale) {
                return Err(Error::invalid(format!("sites[{i}]"), format!("operator {k} is not Hermitian")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorOptions {
    pub site_cap: usize,
    /// Cap on the product dimension.
    pub total_cap: usize,
    pub hermitian_tol: f64,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        OperatorOptions {
            site_cap: DEFAULT_SITE_CAP,
            total_cap: 1024,
            hermitian_tol: 1e-12,
        }
    }
}

struct Layout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl Layout {
    fn new(dims: Vec<usize>) -> Self {
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let total = dims.iter().product();
        Layout { dims, strides, total }
    }

    fn digit(&self, a: usize, k: usize) -> usize {
        (a / self.strides[k]) % self.dims[k]
    }

    fn add_local(&self, h: &mut CMatrix, k: usize, op: &CMatrix) {
        let (st, d) = (self.strides[k], self.dims[k]);
        for a in 0..self.total {
            let s = self.digit(a, k);
            let base = a - s * st;
            for t in 0..d {
                h[(a, base + t * st)] += op[(s, t)];
            }
        }
    }

    /// Adds an operator on the product of sites `i` and `j`, indexed `s_i · d_j + s_j`.
    fn add_pair(&self, h: &mut CMatrix, i: usize, j: usize, op: &CMatrix) {
        let (si, sj) = (self.strides[i], self.strides[j]);
        let (di, dj) = (self.dims[i], self.dims[j]);
        for a in 0..self.total {
            let (ai, aj) = (self.digit(a, i), self.digit(a, j));
            let base = a - ai * si - aj * sj;
            let row = ai * dj + aj;
            for ti in 0..di {
                for tj in 0..dj {
                    let v = op[(row, ti * dj + tj)];
                    if v != Complex64::default() {
                        h[(a, base + ti * si + tj * sj)] += v;
                    }
                }
            }
        }
    }
}

/// `Σ_{αβ} K_{αβ} A^α ⊗ B^β`.
fn contracted_pair(k: &Dyadic, a: &[CMatrix; 3], b: &[CMatrix; 3]) -> CMatrix {
    let (da, db) = (a[0].nrows(), b[0].nrows());
    let mut out = CMatrix::zeros(da * db, da * db);
    for al in 0..3 {
        for be in 0..3 {
            let c = k.0[(al, be)].re;
            if c != 0.0 {
                out += a[al].kronecker(&b[be]) * Complex64::from(c);
            }
        }
    }
    out
}

/// `H = H_le + Σ_i h_i − Σ_{i≠j} [d_i·K^ee_{ij}·d_j + d_i·K^em_{ij}·m_j
/// + m_i·K^me_{ij}·d_j + m_i·K^mm_{ij}·m_j]` on the tensor-product basis,
/// with `kernel(kind, i, j)` supplying `K_{ij}`.
pub fn effective_operator_matrix_with(
    sites: &[OperatorSite],
    h_le: Option<&CMatrix>,
    mut kernel: impl FnMut(KernelKind, usize, usize) -> Result<Dyadic>,
    opts: &OperatorOptions,
) -> Result<CMatrix> {
    if sites.is_empty() {
        return Err(Error::invalid("sites", "need at least one site"));
    }
    for (i, s) in sites.iter().enumerate() {
        if s.dim() == 0 {
            return Err(Error::invalid(format!("sites[{i}]"), "empty local space"));
        }
        if s.dim() > opts.site_cap {
            return Err(Error::DimensionCap {
                dim: s.dim(),
                cap: opts.site_cap,
            });
        }
        s.check(i, opts.hermitian_tol)?;
    }
    let layout = Layout::new(sites.iter().map(OperatorSite::dim).collect());
    if layout.total > opts.total_cap {
        return Err(Error::DimensionCap {
            dim: layout.total,
            cap: opts.total_cap,
        });
    }
    let mut h = match h_le {
        Some(m) if m.nrows() != layout.total || m.ncols() != layout.total => {
            return Err(Error::invalid(
                "h_le",
                format!("expected {0}x{0}, got {1}x{2}", layout.total, m.nrows(), m.ncols()),
            ));
        }
        Some(m) => m.clone(),
        None => CMatrix::zeros(layout.total, layout.total),
    };
    for (k, s) in sites.iter().enumerate() {
        layout.add_local(&mut h, k, &s.h_local);
    }
    for i in 0..sites.len() {
        for j in 0..sites.len() {
            if i == j {
                continue;
            }
            let (a, b) = (&sites[i], &sites[j]);
            let mut op = CMatrix::zeros(a.dim() * b.dim(), a.dim() * b.dim());
            for kind in KernelKind::ALL {
                let (x, y) = match kind {
                    KernelKind::Ee => (&a.d, &b.d),
                    KernelKind::Em => (&a.d, &b.m),
                    KernelKind::Me => (&a.m, &b.d),
                    KernelKind::Mm => (&a.m, &b.m),
                };
                if x.iter().chain(y.iter()).all(|o| o.iter().all(|z| *z == Complex64::default())) {
                    continue;
                }
                op += contracted_pair(&kernel(kind, i, j)?, x, y);
            }
            layout.add_pair(&mut h, i, j, &(-op));
        }
    }
    Ok(h)
}

/// [`effective_operator_matrix_with`] using kernels from a provider.
pub fn effective_operator_matrix(
    sites: &[OperatorSite],
    h_le: Option<&CMatrix>,
    p: &dyn GreensProvider,
    kernel_opts: &KernelOptions,
    opts: &OperatorOptions,
) -> Result<CMatrix> {
    check_distinct(sites.iter().map(|s| s.position))?;
    let mut cache: Vec<Option<[Dyadic; 4]>> = vec![None; sites.len() * sites.len()];
    effective_operator_matrix_with(
        sites,
        h_le,
        |kind, i, j| {
            let slot = &mut cache[i * sites.len() + j];
            if slot.is_none() {
                *slot = Some(kernels_at(p, &sites[i].position, &sites[j].position, kernel_opts)?);
            }
            let k = slot.as_ref().unwrap();
            Ok(k[KernelKind::ALL.iter().position(|x| *x == kind).unwrap()])
        },
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::FreeSpace;

    fn c(re: f64) -> Complex64 {
        Complex64::from(re)
    }

    fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
    }

    fn two_level(position: Vec3, gap: f64) -> OperatorSite {
        let h = CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(gap)]);
        let z = CMatrix::zeros(2, 2);
        OperatorSite::new(position, h).with_d([z.clone(), z, sigma_x()])
    }

    #[test]
    fn zero_kernels_leave_bare_hamiltonian() {
        let sites = [two_level(Vec3::zeros(), 1.0), two_level(Vec3::x(), 1.5)];
        let h_le = CMatrix::from_fn(4, 4, |i, j| if i == j { c(0.1 * i as f64) } else { c(0.0) });
        let h = effective_operator_matrix_with(&sites, Some(&h_le), |_, _, _| Ok(Dyadic::zero()), &Default::default())
            .unwrap();
        let mut expect = h_le.clone();
        // Local gaps on |01⟩, |10⟩, |11⟩.
        expect[(1, 1)] += c(1.5);
        expect[(2, 2)] += c(1.0);
        expect[(3, 3)] += c(2.5);
        assert_eq!(h, expect);
    }

    #[test]
    fn two_dipoles_give_xx_coupling() {
        let r = 2.0;
        let sites = [
            two_level(Vec3::zeros(), 1.0),
            two_level(Vec3::new(0.0, 0.0, r), 1.0),
        ];
        let h = effective_operator_matrix(&sites, None, &FreeSpace::default(), &Default::default(), &Default::default())
            .unwrap();
        // Both orderings of λ^ee_zz = 2/(8πR³).
        let j = 2.0 * 2.0 / (8.0 * std::f64::consts::PI * r.powi(3));
        let sx = sigma_x();
        let mut expect = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0), c(1.0), c(1.0), c(2.0)]));
        expect -= sx.kronecker(&sx) * c(j);
        assert!((h - expect).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn caps_are_enforced() {
        let big = OperatorSite::new(Vec3::zeros(), CMatrix::identity(9, 9));
        let err = effective_operator_matrix_with(&[big], None, |_, _, _| Ok(Dyadic::zero()), &Default::default())
            .unwrap_err();
        assert_eq!(err, Error::DimensionCap { dim: 9, cap: 8 });
    }

    #[test]
    fn non_hermitian_operator_rejected() {
        let mut s = two_level(Vec3::zeros(), 1.0);
        s.d[0][(0, 1)] = c(1.0);
        assert!(effective_operator_matrix_with(&[s], None, |_, _, _| Ok(Dyadic::zero()), &Default::default()).is_err());
    }
}
