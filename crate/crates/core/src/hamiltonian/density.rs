//! Interaction energy of extended polarization and magnetization densities.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::kernels_at;
use crate::couplings::{lambda, KernelKind, KernelOptions};
use crate::error::{Error, Result};
use crate::greens::GreensProvider;
use crate::quadrature::{integrate, QuadOptions};
use crate::tensor::{Dyadic, Vec3};

/// Cell `(i, j, k)` sits at `origin + spacing·(i, j, k)`, stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularLayout {
    pub origin: Vec3,
    pub spacing: f64,
    pub shape: [usize; 3],
}

impl RegularLayout {
    fn len(&self) -> usize {
        self.shape.iter().product()
    }

    fn center(&self, idx: usize) -> Vec3 {
        let [_, n1, n2] = self.shape;
        let (i, j, k) = (idx / (n1 * n2), (idx / n2) % n1, idx % n2);
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }
}

/// Cell-centred samples of `P` and `M` on cells of equal volume.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub centers: Vec<Vec3>,
    pub cell_volume: f64,
    pub p: Vec<Vec3>,
    pub m: Vec<Vec3>,
    /// Present when the cells form a cubic lattice; enables the FFT path.
    pub layout: Option<RegularLayout>,
}

impl DensityGrid {
    pub fn new(centers: Vec<Vec3>, cell_volume: f64, p: Vec<Vec3>, m: Vec<Vec3>) -> Result<Self> {
        let g = DensityGrid {
            centers,
            cell_volume,
            p,
            m,
            layout: None,
        };
        g.validate()?;
        Ok(g)
    }

    /// Samples `f(r) = (P, M)` on a cubic lattice.
    pub fn regular(layout: RegularLayout, f: impl Fn(&Vec3) -> (Vec3, Vec3)) -> Result<Self> {
        if !(layout.spacing > 0.0 && layout.spacing.is_finite()) {
            return Err(Error::invalid("spacing", "must be positive"));
        }
        let centers: Vec<Vec3> = (0..layout.len()).map(|i| layout.center(i)).collect();
        let (p, m) = centers.iter().map(&f).unzip();
        let g = DensityGrid {
            centers,
            cell_volume: layout.spacing.powi(3),
            p,
            m,
            layout: Some(layout),
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let n = self.centers.len();
        if self.p.len() != n || self.m.len() != n {
            return Err(Error::invalid("grid", "P, M and centers must have equal lengths"));
        }
        if !(self.cell_volume > 0.0 && self.cell_volume.is_finite()) {
            return Err(Error::invalid("cell_volume", "must be positive"));
        }
        let finite = |v: &Vec3| v.iter().all(|x| x.is_finite());
        if !(self.centers.iter().all(finite) && self.p.iter().all(finite) && self.m.iter().all(finite)) {
            return Err(Error::invalid("grid", "non-finite value"));
        }
        Ok(())
    }

    fn source(&self, c: usize, idx: usize) -> f64 {
        if c < 3 {
            self.p[idx][c]
        } else {
            self.m[idx][c - 3]
        }
    }

    fn component_active(&self, c: usize) -> bool {
        (0..self.centers.len()).any(|i| self.source(c, i) != 0.0)
    }

    /// Largest jump of `(P, M)` between lattice neighbours relative to the
    /// largest value; near 1 means the density is not resolved.
    pub fn resolution_indicator(&self) -> Option<f64> {
        let l = self.layout?;
        let [n0, n1, n2] = l.shape;
        let mag = |i: usize| (self.p[i].norm_squared() + self.m[i].norm_squared()).sqrt();
        let peak = (0..self.centers.len()).map(mag).fold(0.0, f64::max);
        if peak == 0.0 {
            return Some(0.0);
        }
        let mut worst: f64 = 0.0;
        for i in 0..n0 {
            for j in 0..n1 {
                for k in 0..n2 {
                    let a = (i * n1 + j) * n2 + k;
                    let mut neighbours = Vec::with_capacity(3);
                    if i + 1 < n0 {
                        neighbours.push(a + n1 * n2);
                    }
                    if j + 1 < n1 {
                        neighbours.push(a + n2);
                    }
                    if k + 1 < n2 {
                        neighbours.push(a + 1);
                    }
                    for b in neighbours {
                        let jump = ((self.p[a] - self.p[b]).norm_squared() + (self.m[a] - self.m[b]).norm_squared())
                            .sqrt();
                        worst = worst.max(jump / peak);
                    }
                }
            }
        }
        Some(worst)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityMethod {
    /// FFT when the grid is regular and the provider translation invariant.
    #[default]
    Auto,
    Pairwise,
    Fft,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityOptions {
    pub method: DensityMethod,
    /// Replace `n⊗n δ(R)` by `I δ(R)/3` in the same-cell terms.
    pub smoothing: bool,
    pub kernel: KernelOptions,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions {
            method: DensityMethod::Auto,
            smoothing: true,
            kernel: KernelOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityEnergy {
    pub total: f64,
    /// Distinct-cell double sum.
    pub regular: f64,
    /// Same-cell delta terms.
    pub delta: f64,
    pub method: DensityMethod,
    pub resolution: Option<f64>,
}

/// Same-cell coefficient of the electric and magnetic delta terms.
fn delta_coefficient(smoothing: bool) -> f64 {
    if smoothing {
        1.0 / 3.0
    } else {
        0.5
    }
}

/// `−Σ_{a≠b} V² [P·λ^ee·P + P·λ^em·M + M·λ^me·P + M·λ^mm·M]` plus the
/// same-cell delta terms `−V c (|P|² + |M|²)`, with `c = 1/3` when smoothing
/// and `1/2` otherwise. The regular kernel is never evaluated inside a cell.
pub fn density_interaction_energy(
    g: &DensityGrid,
    p: &dyn GreensProvider,
    opts: &DensityOptions,
) -> Result<DensityEnergy> {
    g.validate()?;
    let method = match opts.method {
        DensityMethod::Auto if g.layout.is_some() && p.translation_invariant() => DensityMethod::Fft,
        DensityMethod::Auto => DensityMethod::Pairwise,
        DensityMethod::Fft if g.layout.is_none() => {
            return Err(Error::invalid("method", "FFT needs a regular layout"));
        }
        DensityMethod::Fft if !p.translation_invariant() => {
            return Err(Error::invalid(
                "method",
                format!("FFT needs a translation-invariant provider; {} is not", p.name()),
            ));
        }
        m => m,
    };
    let resolution = g.resolution_indicator();
    if let Some(r) = resolution {
        if r > 0.5 {
            log::warn!("density varies by {r:.2} of its peak between neighbouring cells; refine the grid");
        }
    }
    let regular = match method {
        DensityMethod::Fft => regular_fft(g, p, &opts.kernel)?,
        _ => regular_pairwise(g, p, &opts.kernel)?,
    };
    let c = delta_coefficient(opts.smoothing);
    let delta = -g.cell_volume
        * c
        * g.p
            .iter()
            .zip(&g.m)
            .map(|(a, b)| a.norm_squared() + b.norm_squared())
            .sum::<f64>();
    Ok(DensityEnergy {
        total: regular + delta,
        regular,
        delta,
        method,
        resolution,
    })
}

fn cell_energy(k: &[Dyadic; 4], pa: &Vec3, ma: &Vec3, pb: &Vec3, mb: &Vec3) -> f64 {
    k[0].contract(pa, pb).re + k[1].contract(pa, mb).re + k[2].contract(ma, pb).re + k[3].contract(ma, mb).re
}

fn regular_pairwise(g: &DensityGrid, p: &dyn GreensProvider, opts: &KernelOptions) -> Result<f64> {
    let active: Vec<usize> = (0..g.centers.len())
        .filter(|&i| g.p[i] != Vec3::zeros() || g.m[i] != Vec3::zeros())
        .collect();
    let rows = active
        .par_iter()
        .map(|&a| {
            let mut s = 0.0;
            for &b in &active {
                if a == b {
                    continue;
                }
                let k = kernels_at(p, &g.centers[a], &g.centers[b], opts)?;
                s += cell_energy(&k, &g.p[a], &g.m[a], &g.p[b], &g.m[b]);
            }
            Ok(s)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(-g.cell_volume * g.cell_volume * rows.iter().sum::<f64>())
}

struct Fft3 {
    shape: [usize; 3],
    plans: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    fn new(shape: [usize; 3], inverse: bool) -> Self {
        let mut planner = FftPlanner::new();
        let mut plan = |n| {
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        };
        let plans = [plan(shape[0]), plan(shape[1]), plan(shape[2])];
        Fft3 { shape, plans }
    }

    fn process(&self, data: &mut [Complex64]) {
        let [n0, n1, n2] = self.shape;
        self.plans[2].process(data);
        let p1 = &self.plans[1];
        data.par_chunks_mut(n1 * n2).for_each(|slab| {
            let mut line = vec![Complex64::default(); n1];
            for k in 0..n2 {
                for j in 0..n1 {
                    line[j] = slab[j * n2 + k];
                }
                p1.process(&mut line);
                for j in 0..n1 {
                    slab[j * n2 + k] = line[j];
                }
            }
        });
        let stride = n1 * n2;
        let mut line = vec![Complex64::default(); n0];
        for jk in 0..stride {
            for i in 0..n0 {
                line[i] = data[i * stride + jk];
            }
            self.plans[0].process(&mut line);
            for i in 0..n0 {
                data[i * stride + jk] = line[i];
            }
        }
    }
}

/// Lattice convolution with the kernel tabulated on all displacements,
/// zero-padded to twice the grid so the circular product is linear.
fn regular_fft(g: &DensityGrid, p: &dyn GreensProvider, opts: &KernelOptions) -> Result<f64> {
    let l = g.layout.expect("checked by caller");
    let [n0, n1, n2] = l.shape;
    let padded = [2 * n0, 2 * n1, 2 * n2];
    let total: usize = padded.iter().product();
    let active: Vec<usize> = (0..6).filter(|&c| g.component_active(c)).collect();
    if active.is_empty() {
        return Ok(0.0);
    }

    let to_padded = |idx: usize| {
        let (i, j, k) = (idx / (n1 * n2), (idx / n2) % n1, idx % n2);
        (i * padded[1] + j) * padded[2] + k
    };
    let forward = Fft3::new(padded, false);
    let inverse = Fft3::new(padded, true);

    let mut sources: Vec<Vec<Complex64>> = Vec::with_capacity(active.len());
    for &c in &active {
        let mut buf = vec![Complex64::default(); total];
        for idx in 0..g.centers.len() {
            buf[to_padded(idx)] = Complex64::from(g.source(c, idx));
        }
        forward.process(&mut buf);
        sources.push(buf);
    }

    // Kernel for every displacement, keeping only the (row, col) blocks that
    // couple active components.
    let wrap = |d: usize, n: usize| if d < n { d as f64 } else { d as f64 - 2.0 * n as f64 };
    let pairs: Vec<(usize, usize)> = active
        .iter()
        .flat_map(|&a| active.iter().map(move |&b| (a, b)))
        .collect();
    let kind_of = |a: usize, b: usize| 2 * (a / 3) + b / 3;
    let mut kinds = [false; 4];
    for &(a, b) in &pairs {
        kinds[kind_of(a, b)] = true;
    }
    let table: Vec<Vec<f64>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx / (padded[1] * padded[2]), (idx / padded[2]) % padded[1], idx % padded[2]);
            let out_of_range = i == n0 || j == n1 || k == n2;
            if idx == 0 || out_of_range {
                return Ok(vec![0.0; pairs.len()]);
            }
            let d = Vec3::new(wrap(i, n0), wrap(j, n1), wrap(k, n2)) * l.spacing;
            let r = l.origin + d;
            let mut ks: [Option<Dyadic>; 4] = [None; 4];
            for (k, kind) in KernelKind::ALL.iter().enumerate() {
                if kinds[k] {
                    ks[k] = Some(lambda(p, *kind, &r, &l.origin, opts)?.regular);
                }
            }
            Ok(pairs
                .iter()
                .map(|&(a, b)| ks[kind_of(a, b)].expect("kind marked as needed").0[(a % 3, b % 3)].re)
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut field: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); total]; active.len()];
    let mut kbuf = vec![Complex64::default(); total];
    for (pi, &(a, b)) in pairs.iter().enumerate() {
        for (slot, row) in kbuf.iter_mut().zip(&table) {
            *slot = Complex64::from(row[pi]);
        }
        forward.process(&mut kbuf);
        let ia = active.iter().position(|&c| c == a).unwrap();
        let ib = active.iter().position(|&c| c == b).unwrap();
        let src = &sources[ib];
        field[ia]
            .par_iter_mut()
            .zip(kbuf.par_iter().zip(src.par_iter()))
            .for_each(|(f, (k, s))| *f += k * s);
    }

    let norm = 1.0 / total as f64;
    let mut energy = 0.0;
    for (ia, &a) in active.iter().enumerate() {
        let mut q = std::mem::take(&mut field[ia]);
        inverse.process(&mut q);
        energy += (0..g.centers.len())
            .map(|idx| g.source(a, idx) * q[to_padded(idx)].re * norm)
            .sum::<f64>();
    }
    Ok(-g.cell_volume * g.cell_volume * energy)
}

/// Exact energy of a single Gaussian density
/// `X(r) = amplitude · u · exp(−Σ x_i²/2σ_i²)` in free space, where `X` is
/// either `P` (with `M = 0`) or `M` (with `P = 0`), and delta terms use the
/// smoothed `1/3` coefficient.
///
/// In Fourier space the energy is `−½ ∫ d³k/(2π)³ |X̂_⊥(k)|²`; the radial
/// integral is done in closed form and the angular one numerically.
pub fn gaussian_blob_energy_reference(amplitude: f64, direction: Vec3, sigma: [f64; 3]) -> Result<f64> {
    let u = direction
        .try_normalize(0.0)
        .ok_or_else(|| Error::invalid("direction", "must be non-zero"))?;
    if sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::invalid("sigma", "widths must be positive"));
    }
    let q = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 2000,
    };
    let angular = integrate(
        |c: f64| {
            let s = (1.0 - c * c).max(0.0).sqrt();
            let inner = integrate(
                |phi: f64| {
                    let k = Vec3::new(s * phi.cos(), s * phi.sin(), c);
                    let quad = (0..3).map(|i| (sigma[i] * k[i]).powi(2)).sum::<f64>();
                    Ok((1.0 - u.dot(&k).powi(2)) / quad.powf(1.5))
                },
                0.0,
                2.0 * PI,
                &[0.5 * PI, PI, 1.5 * PI],
                &q,
            )?;
            Ok(inner.value)
        },
        -1.0,
        1.0,
        &[0.0],
        &q,
    )?;
    let vol = sigma[0] * sigma[1] * sigma[2];
    Ok(-(PI.sqrt() / 8.0) * amplitude * amplitude * vol * vol * angular.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::FreeSpace;
    use crate::hamiltonian::{pairwise_dipole_energy, DipoleSite};

    fn blob(center: Vec3, sigma: f64, moment: Vec3) -> impl Fn(&Vec3) -> Vec3 {
        let norm = (2.0 * PI * sigma * sigma).powf(1.5);
        move |r: &Vec3| moment * ((-(r - center).norm_squared() / (2.0 * sigma * sigma)).exp() / norm)
    }

    #[test]
    fn spherical_blob_is_pure_delta() {
        // Spherical symmetry makes the regular part vanish in the continuum,
        // so the energy is −⅓ ∫ |P|².
        let sigma = 1.0;
        let exact = gaussian_blob_energy_reference(1.0, Vec3::z(), [sigma; 3]).unwrap();
        let int_p2 = (PI * sigma * sigma).powf(1.5);
        assert!((exact + int_p2 / 3.0).abs() < 1e-12 * int_p2);
    }

    #[test]
    fn fft_matches_pairwise() {
        let layout = RegularLayout {
            origin: Vec3::new(-2.0, -2.0, -2.5),
            spacing: 0.5,
            shape: [9, 9, 11],
        };
        let f = blob(Vec3::zeros(), 0.8, Vec3::new(0.3, -0.2, 1.0));
        let h = blob(Vec3::new(0.2, 0.0, 0.1), 0.6, Vec3::new(0.0, 0.5, 0.2));
        let g = DensityGrid::regular(layout, |r| (f(r), h(r))).unwrap();
        let p = FreeSpace::default();
        let mut opts = DensityOptions::default();
        opts.method = DensityMethod::Pairwise;
        let a = density_interaction_energy(&g, &p, &opts).unwrap();
        opts.method = DensityMethod::Fft;
        let b = density_interaction_energy(&g, &p, &opts).unwrap();
        assert!((a.regular - b.regular).abs() < 1e-11 * a.regular.abs(), "{} {}", a.regular, b.regular);
        assert_eq!(a.delta, b.delta);
    }

    #[test]
    fn distant_blobs_match_point_dipoles() {
        let sep = 6.0;
        let sigma = 0.35;
        let d = Vec3::z();
        let (c1, c2) = (Vec3::zeros(), Vec3::new(0.0, 0.0, sep));
        let layout = RegularLayout {
            origin: Vec3::new(-1.5, -1.5, -1.5),
            spacing: 0.125,
            shape: [25, 25, 73],
        };
        let (f1, f2) = (blob(c1, sigma, d), blob(c2, sigma, d));
        let g = DensityGrid::regular(layout, |r| (f1(r) + f2(r), Vec3::zeros())).unwrap();
        let p = FreeSpace::default();
        let e = density_interaction_energy(&g, &p, &DensityOptions::default()).unwrap();
        let self_only = |f: &dyn Fn(&Vec3) -> Vec3| {
            let gi = DensityGrid::regular(layout, |r| (f(r), Vec3::zeros())).unwrap();
            density_interaction_energy(&gi, &p, &DensityOptions::default()).unwrap().total
        };
        let cross = e.total - self_only(&f1) - self_only(&f2);
        let sites = [DipoleSite::electric(c1, d), DipoleSite::electric(c2, d)];
        let point = pairwise_dipole_energy(&sites, &p, &KernelOptions::default()).unwrap().total;
        assert!((cross - point).abs() < 1e-3 * point.abs(), "{cross} {point}");
    }

    #[test]
    fn magnetic_grid_matches_electric() {
        let layout = RegularLayout {
            origin: Vec3::new(-2.0, -2.0, -2.0),
            spacing: 0.5,
            shape: [9, 9, 9],
        };
        let f = blob(Vec3::zeros(), 0.7, Vec3::new(0.1, 0.2, 1.0));
        let ge = DensityGrid::regular(layout, |r| (f(r), Vec3::zeros())).unwrap();
        let gm = DensityGrid::regular(layout, |r| (Vec3::zeros(), f(r))).unwrap();
        let p = FreeSpace::default();
        let e = density_interaction_energy(&ge, &p, &DensityOptions::default()).unwrap();
        let m = density_interaction_energy(&gm, &p, &DensityOptions::default()).unwrap();
        assert!((e.total - m.total).abs() < 1e-12 * e.total.abs());
    }

    #[test]
    fn smoothing_flag_changes_delta_only() {
        let layout = RegularLayout {
            origin: Vec3::zeros(),
            spacing: 1.0,
            shape: [2, 1, 1],
        };
        let g = DensityGrid::regular(layout, |_| (Vec3::z(), Vec3::zeros())).unwrap();
        let p = FreeSpace::default();
        let mut opts = DensityOptions::default();
        let a = density_interaction_energy(&g, &p, &opts).unwrap();
        opts.smoothing = false;
        let b = density_interaction_energy(&g, &p, &opts).unwrap();
        assert_eq!(a.regular, b.regular);
        assert!((a.delta + 2.0 / 3.0).abs() < 1e-15);
        assert!((b.delta + 1.0).abs() < 1e-15);
    }

    #[test]
    fn fft_rejects_irregular_grid() {
        let g = DensityGrid::new(vec![Vec3::zeros()], 1.0, vec![Vec3::z()], vec![Vec3::zeros()]).unwrap();
        let opts = DensityOptions {
            method: DensityMethod::Fft,
            ..Default::default()
        };
        assert!(density_interaction_energy(&g, &FreeSpace::default(), &opts).is_err());
    }
}
