//! Dipole-level diamagnetic renormalization of the bare matter Hamiltonian.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::GreensProvider;
use crate::spectral::{diamagnetic_omega_spectral, diamagnetic_ratio, OmegaSpectralOptions};
use crate::tensor::{levi_civita, Dyadic, Vec3};

/// Charged constituent of a matter element, positioned relative to its centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constituent {
    pub charge: f64,
    pub mass: f64,
    pub offset: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiamagneticSite {
    pub position: Vec3,
    pub constituents: Vec<Constituent>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiamagneticOptions {
    /// The coincident-point tensor is replaced by its value at
    /// `(r, r + split · direction)`.
    pub split: f64,
    pub direction: Vec3,
    /// Ratios `λ_γ / r` below this are flagged negligible.
    pub negligible_below: f64,
    pub spectral: OmegaSpectralOptions,
}

impl DiamagneticOptions {
    pub fn with_split(split: f64) -> Self {
        DiamagneticOptions {
            split,
            direction: Vec3::x(),
            negligible_below: 1e-2,
            // Structures far beyond the split make the damped integrand large
            // and oscillatory; a magnitude estimate does not need 1e-8.
            spectral: OmegaSpectralOptions {
                rel_tol: 1e-6,
                ..OmegaSpectralOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiamagneticReport {
    pub energy: f64,
    /// Largest `λ_γ / r` over constituents, with `r` the distance to the
    /// nearest structure or the split when the provider has none.
    pub ratio: f64,
    pub length_scale: f64,
    pub negligible: bool,
    /// Magnetic correlation tensor used, row-major.
    pub omega: [f64; 9],
}

/// `λ_γ = 2π/m` in natural units.
pub fn compton_wavelength(mass: f64) -> Result<f64> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::invalid("mass", "must be positive"));
    }
    Ok(2.0 * PI / mass)
}

/// `Tr{a × T × a}` with `(a × T)_{il} = ε_{ijk} a_j T_{kl}` and
/// `(T × a)_{kl} = T_{km} ε_{mnl} a_n`.
fn cross_trace(a: &Vec3, t: &Dyadic) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for m in 0..3 {
                    for n in 0..3 {
                        s += levi_civita(i, j, k) * a[j] * t.0[(k, m)].re * levi_civita(m, n, i) * a[n];
                    }
                }
            }
        }
    }
    s
}

/// `Σ_γ q_γ²/(16π²) · λ_γ · Tr{r̃_γ × J × r̃_γ}` with
/// `J = ∫₀^∞ dω ∇ × Im[G + Gᵀ] × ∇' = 2π Ω`, evaluated at split points.
pub fn diamagnetic_renormalization_dipole(
    site: &DiamagneticSite,
    p: &dyn GreensProvider,
    opts: &DiamagneticOptions,
) -> Result<DiamagneticReport> {
    if !(opts.split > 0.0 && opts.split.is_finite()) {
        return Err(Error::invalid("split", "must be positive"));
    }
    let dir = opts
        .direction
        .try_normalize(0.0)
        .ok_or_else(|| Error::invalid("direction", "must be non-zero"))?;
    let feature = p.feature_length(&site.position);
    let length_scale = if feature.is_finite() { feature } else { opts.split };

    let mut ratio: f64 = 0.0;
    for c in &site.constituents {
        ratio = ratio.max(diamagnetic_ratio(compton_wavelength(c.mass)?, length_scale)?);
    }

    let charged = site.constituents.iter().any(|c| c.charge != 0.0);
    let (energy, omega) = if charged {
        let rp = site.position + dir * opts.split;
        let om = diamagnetic_omega_spectral(p, &site.position, &rp, &opts.spectral)?.value;
        let j = om * (2.0 * PI);
        let mut e = 0.0;
        for c in &site.constituents {
            e += c.charge * c.charge / (16.0 * PI * PI) * compton_wavelength(c.mass)? * cross_trace(&c.offset, &j);
        }
        (e, om)
    } else {
        (0.0, Dyadic::zero())
    };

    let mut flat = [0.0; 9];
    for (slot, z) in flat.iter_mut().zip(omega.entries()) {
        *slot = z.re;
    }
    Ok(DiamagneticReport {
        energy,
        ratio,
        length_scale,
        negligible: ratio < opts.negligible_below,
        omega: flat,
    })
}
