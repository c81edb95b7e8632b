//! Conversion between natural units (`ħ = c = ε₀ = μ₀ = 1`, length unit
//! one metre) and SI.
//!
//! Every quantity kind carries exponents `(a, b, e, l)` such that
//! `SI value = natural value · ħ^a c^b ε₀^e m^l`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s (exact).
pub const C: f64 = 299_792_458.0;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability, `1/(ε₀c²)`.
pub const MU_0: f64 = 1.0 / (EPSILON_0 * C * C);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    #[default]
    Natural,
    Si,
}

impl FromStr for UnitSystem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "natural" => Ok(UnitSystem::Natural),
            "si" => Ok(UnitSystem::Si),
            other => Err(Error::invalid("units", format!("expected natural or si, got {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    ToSi,
    ToNatural,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantityKind {
    Dimensionless,
    Length,
    Time,
    AngularFrequency,
    Velocity,
    Energy,
    Mass,
    Charge,
    ElectricDipole,
    MagneticDipole,
    Permittivity,
    Permeability,
    /// `G(r, r', ω)`.
    GreensTensor,
    /// `ω²G/c²`.
    GreensTensorW2,
    /// `λ^ee`: energy per squared electric dipole.
    KernelEe,
    /// `λ^em` and `λ^me`.
    KernelCross,
    /// `λ^mm`: energy per squared magnetic dipole.
    KernelMm,
    /// Vacuum magnetic-field correlation `Ω`.
    MagneticCorrelation,
}

impl QuantityKind {
    pub const ALL: [QuantityKind; 18] = [
        QuantityKind::Dimensionless,
        QuantityKind::Length,
        QuantityKind::Time,
        QuantityKind::AngularFrequency,
        QuantityKind::Velocity,
        QuantityKind::Energy,
        QuantityKind::Mass,
        QuantityKind::Charge,
        QuantityKind::ElectricDipole,
        QuantityKind::MagneticDipole,
        QuantityKind::Permittivity,
        QuantityKind::Permeability,
        QuantityKind::GreensTensor,
        QuantityKind::GreensTensorW2,
        QuantityKind::KernelEe,
        QuantityKind::KernelCross,
        QuantityKind::KernelMm,
        QuantityKind::MagneticCorrelation,
    ];

    /// Exponents of `(ħ, c, ε₀, metre)`.
    fn exponents(&self) -> [f64; 4] {
        use QuantityKind::*;
        match self {
            Dimensionless => [0.0, 0.0, 0.0, 0.0],
            Length => [0.0, 0.0, 0.0, 1.0],
            GreensTensor => [0.0, 0.0, 0.0, -1.0],
            Time => [0.0, -1.0, 0.0, 1.0],
            AngularFrequency => [0.0, 1.0, 0.0, -1.0],
            Velocity => [0.0, 1.0, 0.0, 0.0],
            Energy => [1.0, 1.0, 0.0, -1.0],
            Mass => [1.0, -1.0, 0.0, -1.0],
            Charge => [0.5, 0.5, 0.5, 0.0],
            ElectricDipole => [0.5, 0.5, 0.5, 1.0],
            MagneticDipole => [0.5, 1.5, 0.5, 1.0],
            Permittivity => [0.0, 0.0, 1.0, 0.0],
            Permeability => [0.0, -2.0, -1.0, 0.0],
            GreensTensorW2 => [0.0, 0.0, 0.0, -3.0],
            KernelEe => [0.0, 0.0, -1.0, -3.0],
            KernelCross => [0.0, -1.0, -1.0, -3.0],
            KernelMm => [0.0, -2.0, -1.0, -3.0],
            MagneticCorrelation => [1.0, -1.0, -1.0, -4.0],
        }
    }

    pub fn as_str(&self) -> &'static str {
        use QuantityKind::*;
        match self {
            Dimensionless => "dimensionless",
            Length => "length",
            Time => "time",
            AngularFrequency => "angular_frequency",
            Velocity => "velocity",
            Energy => "energy",
            Mass => "mass",
            Charge => "charge",
            ElectricDipole => "electric_dipole",
            MagneticDipole => "magnetic_dipole",
            Permittivity => "permittivity",
            Permeability => "permeability",
            GreensTensor => "greens_tensor",
            GreensTensorW2 => "greens_tensor_w2",
            KernelEe => "kernel_ee",
            KernelCross => "kernel_cross",
            KernelMm => "kernel_mm",
            MagneticCorrelation => "magnetic_correlation",
        }
    }

    /// SI value of one natural unit of this quantity. The metre factor is 1.
    pub fn si_scale(&self) -> f64 {
        let [a, b, e, _] = self.exponents();
        HBAR.powf(a) * C.powf(b) * EPSILON_0.powf(e)
    }
}

impl fmt::Display for QuantityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuantityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        QuantityKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownQuantityKind(s.to_string()))
    }
}

pub fn convert_units(value: f64, kind: QuantityKind, direction: Direction) -> f64 {
    match direction {
        Direction::ToSi => value * kind.si_scale(),
        Direction::ToNatural => value / kind.si_scale(),
    }
}

/// String-keyed form of [`convert_units`].
pub fn convert_units_named(value: f64, kind: &str, direction: Direction) -> Result<f64> {
    Ok(convert_units(value, kind.parse()?, direction))
}
