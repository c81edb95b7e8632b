//! Exact diagonalization of harmonic matter dipoles bilinearly coupled to a
//! few field modes, for checking the effective matter Hamiltonian.
//!
//! Full model: `H = Σ_i ω_i b_i†b_i + Σ_n ν_n a_n†a_n − Σ_{in} g_in X_i Y_n`
//! with `X = b + b†`, `Y = a + a†`. Tracing out the modes at low matter
//! frequency gives `H_eff = Σ_i ω_i b_i†b_i − Σ_{ij} K_ij X_i X_j` with
//! `K_ij = Σ_n g_in g_jn / ν_n`.

mod eigen;
mod gaussian;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::KernelKind;
use crate::error::{Error, Result};
use crate::mode_sum::{lambda_modesum, ModeFamily};
use crate::tensor::{Dyadic, Vec3};

pub use eigen::{all_eigenvalues, lowest_eigenpairs, EigenOptions, Eigenpairs, SparseSym};
pub use gaussian::{gaussian_integral_identity_check, GaussianCheck};

pub const DEFAULT_DIM_CAP: usize = 4096;

/// Largest `ω_m/ω_c` accepted by the sweep.
pub const MAX_RATIO: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorModel {
    pub matter_freqs: Vec<f64>,
    pub mode_freqs: Vec<f64>,
    /// `coupling[i][n]` between matter oscillator `i` and mode `n`.
    pub coupling: Vec<Vec<f64>>,
    /// Fock states `0..n_max` kept per oscillator.
    pub n_max: usize,
}

impl OscillatorModel {
    pub fn validate(&self) -> Result<()> {
        if self.matter_freqs.is_empty() {
            return Err(Error::invalid("matter_freqs", "need at least one matter oscillator"));
        }
        for (name, fs) in [("matter_freqs", &self.matter_freqs), ("mode_freqs", &self.mode_freqs)] {
            if fs.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                return Err(Error::invalid(name, "frequencies must be positive"));
            }
        }
        if self.n_max < 4 {
            return Err(Error::invalid("n_max", "need at least 4 Fock states"));
        }
        if self.coupling.len() != self.matter_freqs.len()
            || self.coupling.iter().any(|row| row.len() != self.mode_freqs.len())
        {
            return Err(Error::invalid("coupling", "expected one row per matter oscillator, one column per mode"));
        }
        if self.coupling.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::invalid("coupling", "non-finite entry"));
        }
        Ok(())
    }

    /// Matter frequencies followed by mode frequencies.
    fn freqs(&self) -> Vec<f64> {
        self.matter_freqs.iter().chain(&self.mode_freqs).copied().collect()
    }

    pub fn dim(&self) -> usize {
        self.n_max.pow((self.matter_freqs.len() + self.mode_freqs.len()) as u32)
    }

    pub fn uncoupled(&self) -> Self {
        let mut m = self.clone();
        m.coupling.iter_mut().flatten().for_each(|g| *g = 0.0);
        m
    }

    /// `K_ij = Σ_n g_in g_jn / ν_n`.
    pub fn effective_kernel(&self) -> DMatrix<f64> {
        let nm = self.matter_freqs.len();
        DMatrix::from_fn(nm, nm, |i, j| {
            self.mode_freqs
                .iter()
                .enumerate()
                .map(|(n, nu)| self.coupling[i][n] * self.coupling[j][n] / nu)
                .sum()
        })
    }

    /// Couplings from a mode family: `g_in = d_i · E_n(r_i)` for real mode
    /// functions, so that `K_ij = d_i · λ^ee(r_i, r_j) · d_j` from the mode sum.
    pub fn from_mode_family(
        family: &dyn ModeFamily,
        n_modes: usize,
        sites: &[(Vec3, Vec3, f64)],
        n_max: usize,
    ) -> Result<Self> {
        let mut coupling = vec![vec![0.0; n_modes]; sites.len()];
        for (i, (r, d, _)) in sites.iter().enumerate() {
            for n in 1..=n_modes {
                let e = family.e_field(n, r)?;
                if e.iter().any(|z| z.im.abs() > 1e-12 * z.norm().max(1.0)) {
                    return Err(Error::invalid("family", "mode functions must be real"));
                }
                coupling[i][n - 1] = (0..3).map(|a| d[a] * e[a].re).sum();
            }
        }
        let m = OscillatorModel {
            matter_freqs: sites.iter().map(|s| s.2).collect(),
            mode_freqs: (1..=n_modes).map(|n| family.omega(n)).collect(),
            coupling,
            n_max,
        };
        m.validate()?;
        Ok(m)
    }
}

/// Mixed-radix index helpers over `count` oscillators with `n` levels each.
struct Fock {
    n: usize,
    strides: Vec<usize>,
    dim: usize,
}

impl Fock {
    fn new(n: usize, count: usize) -> Self {
        let mut strides = vec![1; count];
        for k in (0..count.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * n;
        }
        Fock {
            n,
            strides,
            dim: n.pow(count as u32),
        }
    }

    fn level(&self, idx: usize, k: usize) -> usize {
        (idx / self.strides[k]) % self.n
    }
}

fn check_cap(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        Err(Error::DimensionCap { dim, cap })
    } else {
        Ok(())
    }
}

/// Full light-matter Hamiltonian in the product Fock basis, matter first.
pub fn build_full_hamiltonian(m: &OscillatorModel, cap: usize) -> Result<SparseSym> {
    m.validate()?;
    let nm = m.matter_freqs.len();
    let freqs = m.freqs();
    let fock = Fock::new(m.n_max, freqs.len());
    check_cap(fock.dim, cap)?;
    let sq = |k: usize| (k as f64).sqrt();
    Ok(SparseSym::from_rows(fock.dim, |idx, push| {
        let diag: f64 = freqs.iter().enumerate().map(|(k, w)| w * fock.level(idx, k) as f64).sum();
        push(idx, diag);
        for (i, row) in m.coupling.iter().enumerate() {
            let li = fock.level(idx, i);
            for (n, &g) in row.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let k = nm + n;
                let ln = fock.level(idx, k);
                for (di, ai) in [(-1i64, sq(li)), (1, sq(li + 1))] {
                    for (dn, an) in [(-1i64, sq(ln)), (1, sq(ln + 1))] {
                        let ti = li as i64 + di;
                        let tn = ln as i64 + dn;
                        if ti < 0 || tn < 0 || ti >= m.n_max as i64 || tn >= m.n_max as i64 {
                            continue;
                        }
                        let col = (idx as i64 + di * fock.strides[i] as i64 + dn * fock.strides[k] as i64) as usize;
                        push(col, -g * ai * an);
                    }
                }
            }
        }
    }))
}

/// `Σ_i ω_i b_i†b_i − Σ_{ij} K_ij X_i X_j` on the matter Fock space.
/// `X_i²` is the square of the truncated `X_i`.
pub fn build_effective_hamiltonian(
    matter_freqs: &[f64],
    kernel: &DMatrix<f64>,
    n_max: usize,
    cap: usize,
) -> Result<SparseSym> {
    let nm = matter_freqs.len();
    if kernel.nrows() != nm || kernel.ncols() != nm {
        return Err(Error::invalid("kernel", "must be square with one row per matter oscillator"));
    }
    let fock = Fock::new(n_max, nm);
    check_cap(fock.dim, cap)?;
    let n = n_max as i64;
    let sq = |k: i64| (k as f64).sqrt();
    Ok(SparseSym::from_rows(fock.dim, |idx, push| {
        let diag: f64 = matter_freqs.iter().enumerate().map(|(k, w)| w * fock.level(idx, k) as f64).sum();
        push(idx, diag);
        for i in 0..nm {
            let li = fock.level(idx, i) as i64;
            let si = fock.strides[i] as i64;
            // Truncated X² has diagonal l + (l + 1) and ±2 entries √((l+1)(l+2)).
            let x2_diag = li as f64 + if li + 1 < n { (li + 1) as f64 } else { 0.0 };
            push(idx, -kernel[(i, i)] * x2_diag);
            if li + 2 < n {
                push((idx as i64 + 2 * si) as usize, -kernel[(i, i)] * sq((li + 1) * (li + 2)));
            }
            if li >= 2 {
                push((idx as i64 - 2 * si) as usize, -kernel[(i, i)] * sq(li * (li - 1)));
            }
            for j in 0..nm {
                if j == i || kernel[(i, j)] == 0.0 {
                    continue;
                }
                let lj = fock.level(idx, j) as i64;
                let sj = fock.strides[j] as i64;
                for (di, ai) in [(-1i64, sq(li)), (1, sq(li + 1))] {
                    for (dj, aj) in [(-1i64, sq(lj)), (1, sq(lj + 1))] {
                        let (ti, tj) = (li + di, lj + dj);
                        if ti < 0 || tj < 0 || ti >= n || tj >= n {
                            continue;
                        }
                        push((idx as i64 + di * si + dj * sj) as usize, -kernel[(i, j)] * ai * aj);
                    }
                }
            }
        }
    }))
}

/// `Z = Σ_k exp(−β E_k)`.
pub fn partition_function(eigenvalues: &[f64], beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", "must be positive"));
    }
    Ok(eigenvalues.iter().map(|e| (-beta * e).exp()).sum())
}

/// Partition function of a full Hamiltonian by dense diagonalization.
pub fn partition_function_of(h: &SparseSym, beta: f64) -> Result<f64> {
    partition_function(&all_eigenvalues(h), beta)
}

/// Normal-mode frequencies of the untruncated quadratic model.
pub fn normal_mode_frequencies(m: &OscillatorModel) -> Result<Vec<f64>> {
    m.validate()?;
    let freqs = m.freqs();
    let nm = m.matter_freqs.len();
    // In scaled coordinates q = x/√ω with x = X/√2 the potential matrix is
    // ω_k² δ_kl − 2 g √(ω_i ν_n) between matter i and mode n.
    let mut a = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        freqs.len(),
        freqs.iter().map(|w| w * w),
    ));
    for (i, row) in m.coupling.iter().enumerate() {
        for (n, g) in row.iter().enumerate() {
            let v = -2.0 * g * (freqs[i] * freqs[nm + n]).sqrt();
            a[(i, nm + n)] = v;
            a[(nm + n, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut out = Vec::with_capacity(freqs.len());
    for w2 in eig.eigenvalues.iter() {
        if *w2 <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        out.push(w2.sqrt());
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// `½ Σ Ω_k − ½ Σ ω_k`: zero-point shift of the coupled ground state.
pub fn normal_mode_ground_energy(m: &OscillatorModel) -> Result<f64> {
    let omegas = normal_mode_frequencies(m)?;
    Ok(0.5 * omegas.iter().sum::<f64>() - 0.5 * m.freqs().iter().sum::<f64>())
}

/// Model family for the sweep: at ratio `r`, matter oscillator `i` has
/// frequency `r · matter_weights[i] · min ν` and `g_in = pattern[i][n]
/// · √(κ ω_i ν_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub mode_freqs: Vec<f64>,
    pub matter_weights: Vec<f64>,
    pub pattern: Vec<Vec<f64>>,
    pub kappa: f64,
    pub n_max: usize,
    /// Number of excitation energies compared.
    pub levels: usize,
    pub dim_cap: usize,
    /// Inverse temperature for the low-lying free energy; optional.
    #[serde(default)]
    pub beta: Option<f64>,
}

impl SweepSpec {
    pub fn model(&self, ratio: f64) -> OscillatorModel {
        let nu0 = self.mode_freqs.iter().copied().fold(f64::INFINITY, f64::min);
        let matter: Vec<f64> = self.matter_weights.iter().map(|w| ratio * w * nu0).collect();
        let coupling = matter
            .iter()
            .zip(&self.pattern)
            .map(|(wi, row)| {
                row.iter()
                    .zip(&self.mode_freqs)
                    .map(|(p, nu)| p * (self.kappa * wi * nu).sqrt())
                    .collect()
            })
            .collect();
        OscillatorModel {
            matter_freqs: matter,
            mode_freqs: self.mode_freqs.clone(),
            coupling,
            n_max: self.n_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub ratio: f64,
    /// Largest excitation-energy mismatch relative to the largest induced shift.
    pub deviation: f64,
    /// Same measure at `g = 0`; subtracted from `deviation`.
    pub baseline: f64,
    pub exact_excitations: Vec<f64>,
    pub effective_excitations: Vec<f64>,
    /// Low-lying free-energy mismatch, when `beta` is given.
    pub free_energy_deviation: Option<f64>,
}

impl SweepRow {
    pub fn corrected(&self) -> f64 {
        (self.deviation - self.baseline).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log(deviation)` against `log(ratio)`.
    pub fitted_order: f64,
    /// Deviation decreases with every step down the ratio list.
    pub monotone: bool,
}

impl SweepTable {
    /// `ratio,deviation,baseline,corrected` lines followed by the fitted order.
    pub fn to_csv(&self) -> String {
        let f = crate::couplings::fmt_f64;
        let mut s = String::from("ratio,deviation,baseline,corrected\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", f(r.ratio), f(r.deviation), f(r.baseline), f(r.corrected())));
        }
        s.push_str(&format!("# fitted_order,{}\n", f(self.fitted_order)));
        s
    }
}

fn excitations(h: &SparseSym, levels: usize, opts: &EigenOptions) -> Result<Vec<f64>> {
    let e = lowest_eigenpairs(h, levels + 1, opts)?.values;
    Ok(e[1..].iter().map(|x| x - e[0]).collect())
}

fn low_free_energy(exc: &[f64], beta: f64) -> f64 {
    let z: f64 = 1.0 + exc.iter().map(|e| (-beta * e).exp()).sum::<f64>();
    -z.ln() / beta
}

fn mismatch(exact: &[f64], eff: &[f64], bare: &[f64]) -> f64 {
    let shift = eff.iter().zip(bare).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let diff = exact.iter().zip(eff).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if shift > 0.0 {
        diff / shift
    } else {
        diff
    }
}

fn sweep_row(spec: &SweepSpec, ratio: f64, opts: &EigenOptions) -> Result<SweepRow> {
    let model = spec.model(ratio);
    model.validate()?;
    let bare_model = model.uncoupled();
    let k = model.effective_kernel();
    let zero = DMatrix::zeros(k.nrows(), k.ncols());
    let exact = excitations(&build_full_hamiltonian(&model, spec.dim_cap)?, spec.levels, opts)?;
    let exact0 = excitations(&build_full_hamiltonian(&bare_model, spec.dim_cap)?, spec.levels, opts)?;
    let eff_h = build_effective_hamiltonian(&model.matter_freqs, &k, spec.n_max, spec.dim_cap)?;
    let eff = excitations(&eff_h, spec.levels, opts)?;
    let bare_h = build_effective_hamiltonian(&model.matter_freqs, &zero, spec.n_max, spec.dim_cap)?;
    let bare = excitations(&bare_h, spec.levels, opts)?;
    let deviation = mismatch(&exact, &eff, &bare);
    let baseline = mismatch(&exact0, &bare, &bare);
    let free_energy_deviation = spec
        .beta
        .map(|b| (low_free_energy(&exact, b) - low_free_energy(&eff, b)).abs());
    Ok(SweepRow {
        ratio,
        deviation,
        baseline,
        exact_excitations: exact,
        effective_excitations: eff,
        free_energy_deviation,
    })
}

/// Compares the low-lying spectrum of the full model against the effective
/// matter Hamiltonian over a ladder of `ω_m/ω_c` ratios.
pub fn effective_vs_exact_sweep(spec: &SweepSpec, ratios: &[f64], opts: &EigenOptions) -> Result<SweepTable> {
    if ratios.is_empty() {
        return Err(Error::invalid("ratios", "need at least one ratio"));
    }
    for &r in ratios {
        if !(r > 0.0) {
            return Err(Error::invalid("ratios", "must be positive"));
        }
        if r > MAX_RATIO {
            return Err(Error::RegimeViolation {
                ratio: r,
                limit: MAX_RATIO,
            });
        }
    }
    if spec.levels == 0 {
        return Err(Error::invalid("levels", "need at least one excitation"));
    }
    let rows = ratios
        .par_iter()
        .map(|&r| sweep_row(spec, r, opts))
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows.windows(2).all(|w| {
        let (a, b) = (&w[0], &w[1]);
        (b.ratio < a.ratio) == (b.corrected() < a.corrected())
    });
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.corrected() > 0.0)
        .map(|r| (r.ratio.ln(), r.corrected().ln()))
        .collect();
    let fitted_order = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    Ok(SweepTable {
        rows,
        fitted_order,
        monotone,
    })
}

/// `K_ij` from the mode-sum `λ^ee` of a family, contracted with site dipoles.
/// Agrees with [`OscillatorModel::effective_kernel`] of
/// [`OscillatorModel::from_mode_family`] by construction of the couplings.
pub fn mode_sum_kernel(family: &dyn ModeFamily, n_modes: usize, sites: &[(Vec3, Vec3, f64)]) -> Result<DMatrix<f64>> {
    let n = sites.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let lam = lambda_modesum(family, KernelKind::Ee, &sites[i].0, &sites[j].0, n_modes)?;
            k[(i, j)] = lam.kernel.regular.contract(&sites[i].1, &sites[j].1).re;
        }
    }
    Ok(k)
}

/// `Re⟨G|B̂(r) ⊗ B̂(r')|G⟩` in the exact ground state, with
/// `B̂ = Σ_n b_n P_n`, `P_n = i(a_n† − a_n)` and `B_n = −i b_n` for real
/// mode functions.
pub fn ground_state_magnetic_correlation(
    family: &dyn ModeFamily,
    model: &OscillatorModel,
    r: &Vec3,
    rp: &Vec3,
    cap: usize,
    opts: &EigenOptions,
) -> Result<Dyadic> {
    let h = build_full_hamiltonian(model, cap)?;
    let ground = lowest_eigenpairs(&h, 1, opts)?.vectors.remove(0);
    let nm = model.matter_freqs.len();
    let nmodes = model.mode_freqs.len();
    let fock = Fock::new(model.n_max, nm + nmodes);

    // ⟨P_n P_m⟩ for real ground states: P_n P_m is real with entries ±√ factors.
    let apply_p = |k: usize, v: &[f64]| -> Vec<f64> {
        // Returns the real vector w with P_k v = i w.
        let mut out = vec![0.0; v.len()];
        let st = fock.strides[k];
        for (idx, &x) in v.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let l = fock.level(idx, k);
            if l + 1 < model.n_max {
                out[idx + st] += ((l + 1) as f64).sqrt() * x;
            }
            if l >= 1 {
                out[idx - st] -= (l as f64).sqrt() * x;
            }
        }
        out
    };
    let pv: Vec<Vec<f64>> = (0..nmodes).map(|n| apply_p(nm + n, &ground)).collect();
    let mut corr = DMatrix::<f64>::zeros(nmodes, nmodes);
    for a in 0..nmodes {
        for b in 0..nmodes {
            // ⟨P_a P_b⟩ = (i w_a)†(i w_b) = w_a · w_b.
            corr[(a, b)] = pv[a].iter().zip(&pv[b]).map(|(x, y)| x * y).sum();
        }
    }
    let mut amps = Vec::with_capacity(nmodes);
    for n in 1..=nmodes {
        let (b1, b2) = (family.b_field(n, r)?, family.b_field(n, rp)?);
        // B_n = −i b_n with b_n real.
        let re = |b: &crate::tensor::CVec3| Vec3::new(-b[0].im, -b[1].im, -b[2].im);
        amps.push((re(&b1), re(&b2)));
    }
    let mut out = Dyadic::zero();
    for a in 0..nmodes {
        for b in 0..nmodes {
            out += Dyadic::outer_real(&amps[a].0, &amps[b].1) * corr[(a, b)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_sum::{diamagnetic_omega_modesum, planar_cavity_modes, Polarization};

    fn two_oscillators(wm: f64, wc: f64, g: f64, n_max: usize) -> OscillatorModel {
        OscillatorModel {
            matter_freqs: vec![wm],
            mode_freqs: vec![wc],
            coupling: vec![vec![g]],
            n_max,
        }
    }

    #[test]
    fn uncoupled_spectrum_is_sum_of_ladders() {
        let m = OscillatorModel {
            matter_freqs: vec![0.3],
            mode_freqs: vec![1.0, 1.7],
            coupling: vec![vec![0.0, 0.0]],
            n_max: 4,
        };
        let h = build_full_hamiltonian(&m, DEFAULT_DIM_CAP).unwrap();
        let ev = all_eigenvalues(&h);
        let mut expect = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    expect.push(0.3 * a as f64 + 1.0 * b as f64 + 1.7 * c as f64);
                }
            }
        }
        expect.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_oscillator_ground_state_matches_normal_modes() {
        let m = two_oscillators(0.3, 1.0, 0.1, 24);
        let h = build_full_hamiltonian(&m, DEFAULT_DIM_CAP).unwrap();
        assert!(h.asymmetry() < 1e-12);
        let e0 = lowest_eigenpairs(&h, 1, &EigenOptions::default()).unwrap().values[0];
        let exact = normal_mode_ground_energy(&m).unwrap();
        assert!((e0 - exact).abs() < 1e-8, "{e0} {exact}");
    }

    #[test]
    fn truncation_ladder_converges() {
        let e = |n| {
            let h = build_full_hamiltonian(&two_oscillators(0.2, 1.0, 0.05, n), DEFAULT_DIM_CAP).unwrap();
            lowest_eigenpairs(&h, 1, &EigenOptions::default()).unwrap().values[0]
        };
        assert!((e(20) - e(24)).abs() < 1e-8);
    }

    #[test]
    fn dimension_cap() {
        let m = OscillatorModel {
            matter_freqs: vec![0.1, 0.2],
            mode_freqs: vec![1.0, 2.0],
            coupling: vec![vec![0.0; 2]; 2],
            n_max: 10,
        };
        assert_eq!(
            build_full_hamiltonian(&m, DEFAULT_DIM_CAP).unwrap_err(),
            Error::DimensionCap { dim: 10_000, cap: 4096 }
        );
    }

    #[test]
    fn partition_function_limits() {
        let m = OscillatorModel {
            matter_freqs: vec![0.5],
            mode_freqs: vec![],
            coupling: vec![vec![]],
            n_max: 60,
        };
        let h = build_full_hamiltonian(&m, DEFAULT_DIM_CAP).unwrap();
        let beta = 2.0;
        let z = partition_function_of(&h, beta).unwrap();
        assert!((z - 1.0 / (1.0 - (-beta * 0.5f64).exp())).abs() < 1e-12);
        let zb = partition_function_of(&h, 80.0).unwrap();
        assert!((zb - 1.0).abs() < 1e-15);

        let two = OscillatorModel {
            matter_freqs: vec![0.5, 0.8],
            mode_freqs: vec![],
            coupling: vec![vec![], vec![]],
            n_max: 8,
        };
        let single = |w: f64| OscillatorModel {
            matter_freqs: vec![w],
            mode_freqs: vec![],
            coupling: vec![vec![]],
            n_max: 8,
        };
        let zt = partition_function_of(&build_full_hamiltonian(&two, DEFAULT_DIM_CAP).unwrap(), 1.3).unwrap();
        let za = partition_function_of(&build_full_hamiltonian(&single(0.5), DEFAULT_DIM_CAP).unwrap(), 1.3).unwrap();
        let zc = partition_function_of(&build_full_hamiltonian(&single(0.8), DEFAULT_DIM_CAP).unwrap(), 1.3).unwrap();
        assert!((zt - za * zc).abs() < 1e-12 * zt);
        assert!(partition_function(&[0.0], -1.0).is_err());
    }

    #[test]
    fn effective_hamiltonian_matches_closed_form() {
        // Single oscillator with −K X²: frequency ω √(1 − 4K/ω).
        let (w, k) = (0.3, 0.02);
        let h = build_effective_hamiltonian(&[w], &DMatrix::from_element(1, 1, k), 40, DEFAULT_DIM_CAP).unwrap();
        let e = lowest_eigenpairs(&h, 2, &EigenOptions::default()).unwrap().values;
        let expect = w * (1.0 - 4.0 * k / w).sqrt();
        assert!((e[1] - e[0] - expect).abs() < 1e-10);
    }

    #[test]
    fn sweep_deviation_shrinks() {
        let spec = SweepSpec {
            mode_freqs: vec![1.0],
            matter_weights: vec![1.0],
            pattern: vec![vec![1.0]],
            kappa: 0.05,
            n_max: 16,
            levels: 2,
            dim_cap: DEFAULT_DIM_CAP,
            beta: Some(5.0),
        };
        let t = effective_vs_exact_sweep(&spec, &[0.1, 0.05], &EigenOptions::default()).unwrap();
        assert!(t.monotone);
        assert!(t.fitted_order > 1.0, "{}", t.fitted_order);
        assert_eq!(
            effective_vs_exact_sweep(&spec, &[0.3], &EigenOptions::default()).unwrap_err().kind(),
            "RegimeViolation"
        );
        assert!(t.to_csv().starts_with("ratio,deviation"));
    }

    #[test]
    fn mode_family_couplings_reproduce_mode_sum_kernel() {
        let fam = planar_cavity_modes(1.0, Polarization::X).unwrap();
        let sites = [
            (Vec3::new(0.0, 0.0, 0.3), Vec3::new(1.0, 0.0, 0.0), 0.05),
            (Vec3::new(0.0, 0.0, 0.6), Vec3::new(0.5, 0.2, 0.0), 0.07),
        ];
        let m = OscillatorModel::from_mode_family(&fam, 3, &sites, 6).unwrap();
        let a = m.effective_kernel();
        let b = mode_sum_kernel(&fam, 3, &sites).unwrap();
        assert!((a - b).abs().max() < 1e-14);
    }

    #[test]
    fn vacuum_magnetic_correlation_matches_omega() {
        let fam = planar_cavity_modes(1.0, Polarization::X).unwrap().truncated(2);
        let sites = [(Vec3::new(0.0, 0.0, 0.37), Vec3::new(1e-3, 0.0, 0.0), 0.05)];
        let m = OscillatorModel::from_mode_family(&fam, 2, &sites, 6).unwrap();
        let r = Vec3::new(0.0, 0.0, 0.21);
        let rp = Vec3::new(0.0, 0.0, 0.64);
        let c = ground_state_magnetic_correlation(&fam, &m, &r, &rp, DEFAULT_DIM_CAP, &EigenOptions::default())
            .unwrap();
        let om = diamagnetic_omega_modesum(&fam, &r, &rp, 2).unwrap().b_sum;
        assert!(c.rel_diff(&om) < 1e-5, "{}", c.rel_diff(&om));
    }
}
