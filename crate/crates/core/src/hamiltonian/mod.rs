//! Effective matter Hamiltonians built from the coupling kernels.
//!
//! Energies use `H_eff = H̃_le − Σ_{i≠j} [d_i·λ^ee·d_j + d_i·λ^em·m_j
//! + m_i·λ^me·d_j + m_i·λ^mm·m_j]` over ordered pairs, so each unordered
//! pair enters twice. Self terms (`i = j`) are never evaluated.

mod density;
mod diamagnetic;
mod operator;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::{lambda, KernelKind, KernelOptions};
use crate::error::{Error, Result};
use crate::greens::GreensProvider;
use crate::tensor::{Dyadic, Vec3};

pub use density::{
    density_interaction_energy, gaussian_blob_energy_reference, DensityEnergy, DensityGrid, DensityMethod,
    DensityOptions, RegularLayout,
};
pub use diamagnetic::{
    compton_wavelength, diamagnetic_renormalization_dipole, Constituent, DiamagneticOptions, DiamagneticReport,
    DiamagneticSite,
};
pub use operator::{
    effective_operator_matrix, effective_operator_matrix_with, OperatorOptions, OperatorSite, DEFAULT_SITE_CAP,
};

/// Point site with classical dipole moments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleSite {
    pub position: Vec3,
    #[serde(default = "Vec3::zeros")]
    pub d: Vec3,
    #[serde(default = "Vec3::zeros")]
    pub m: Vec3,
}

impl DipoleSite {
    pub fn electric(position: Vec3, d: Vec3) -> Self {
        DipoleSite {
            position,
            d,
            m: Vec3::zeros(),
        }
    }

    pub fn magnetic(position: Vec3, m: Vec3) -> Self {
        DipoleSite {
            position,
            d: Vec3::zeros(),
            m,
        }
    }
}

/// Energy of one unordered pair, split by kernel kind. Both orderings are included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairEnergy {
    pub i: usize,
    pub j: usize,
    pub ee: f64,
    pub em: f64,
    pub me: f64,
    pub mm: f64,
}

impl PairEnergy {
    pub fn total(&self) -> f64 {
        self.ee + self.em + self.me + self.mm
    }
}

/// Weight multiplying `δ(0)` in a site's self term. Formally divergent and
/// absorbed into the bare matter Hamiltonian; reported, not added.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SelfTerm {
    pub site: usize,
    pub delta_weight_ee: f64,
    pub delta_weight_mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairwiseEnergy {
    pub total: f64,
    pub pairs: Vec<PairEnergy>,
    pub self_terms: Vec<SelfTerm>,
}

impl PairwiseEnergy {
    /// Symmetric matrix of pair energies; the diagonal is zero.
    pub fn pair_matrix(&self, n: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; n]; n];
        for p in &self.pairs {
            out[p.i][p.j] = p.total();
            out[p.j][p.i] = p.total();
        }
        out
    }
}

pub(crate) fn check_distinct(positions: impl Iterator<Item = Vec3> + Clone) -> Result<()> {
    let pts: Vec<Vec3> = positions.collect();
    for (i, a) in pts.iter().enumerate() {
        if !a.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid(format!("sites[{i}].position"), "non-finite coordinate"));
        }
        for b in &pts[..i] {
            if a == b {
                return Err(Error::CoincidentPoints {
                    context: format!("site {i} duplicates an earlier position"),
                });
            }
        }
    }
    Ok(())
}

/// All four kernels at `(r, r')` as real dyadics, in [`KernelKind::ALL`] order.
pub(crate) fn kernels_at(
    p: &dyn GreensProvider,
    r: &Vec3,
    rp: &Vec3,
    opts: &KernelOptions,
) -> Result<[Dyadic; 4]> {
    let mut out = [Dyadic::zero(); 4];
    for (slot, kind) in out.iter_mut().zip(KernelKind::ALL) {
        *slot = lambda(p, kind, r, rp, opts)?.regular;
    }
    Ok(out)
}

fn contract(k: &Dyadic, a: &Vec3, b: &Vec3) -> f64 {
    k.contract(a, b).re
}

/// Interaction energy of point dipoles, excluding self terms.
pub fn pairwise_dipole_energy(
    sites: &[DipoleSite],
    p: &dyn GreensProvider,
    opts: &KernelOptions,
) -> Result<PairwiseEnergy> {
    check_distinct(sites.iter().map(|s| s.position))?;
    let n = sites.len();
    let index: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let pairs = index
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&sites[i], &sites[j]);
            let kij = kernels_at(p, &a.position, &b.position, opts)?;
            let kji = kernels_at(p, &b.position, &a.position, opts)?;
            Ok(PairEnergy {
                i,
                j,
                ee: -(contract(&kij[0], &a.d, &b.d) + contract(&kji[0], &b.d, &a.d)),
                em: -(contract(&kij[1], &a.d, &b.m) + contract(&kji[1], &b.d, &a.m)),
                me: -(contract(&kij[2], &a.m, &b.d) + contract(&kji[2], &b.m, &a.d)),
                mm: -(contract(&kij[3], &a.m, &b.m) + contract(&kji[3], &b.m, &a.m)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = pairs.iter().map(PairEnergy::total).sum();
    let self_terms = sites
        .iter()
        .enumerate()
        .map(|(site, s)| SelfTerm {
            site,
            delta_weight_ee: 0.5 * s.d.norm_squared(),
            delta_weight_mm: 0.5 * s.m.norm_squared(),
        })
        .collect();
    Ok(PairwiseEnergy {
        total,
        pairs,
        self_terms,
    })
}
