//! Run configuration schema and validation.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::couplings::KernelKind;
use crate::error::{Error, Result};
use crate::greens::{FreeSpace, GreensProvider, MirrorHalfSpace, ModeExpansion, SyntheticNonreciprocal};
use crate::hamiltonian::{DensityMethod, DiamagneticSite, DipoleSite, RegularLayout};
use crate::mode_sum::{planar_cavity_modes, Polarization};
use crate::oracle::SweepSpec;
use crate::spectral::IntegrandKind;
use crate::tensor::Vec3;
use crate::units::UnitSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Kernels,
    Modesum,
    Spectral,
    Hamiltonian,
    Oracle,
    VerifyAll,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Kernels => "kernels",
            Command::Modesum => "modesum",
            Command::Spectral => "spectral",
            Command::Hamiltonian => "hamiltonian",
            Command::Oracle => "oracle",
            Command::VerifyAll => "verify-all",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirrorSpec {
    #[serde(default)]
    pub plane_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonreciprocalSpec {
    #[serde(default = "default_bias")]
    pub bias: Vec3,
}

fn default_bias() -> Vec3 {
    SyntheticNonreciprocal::default().bias
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarCavitySpec {
    pub length: f64,
    #[serde(default)]
    pub polarization: Polarization,
    pub n_modes: usize,
    /// Linewidth of every mode.
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ProviderSpec {
    FreeSpace(EmptySpec),
    MirrorHalfspace(MirrorSpec),
    SyntheticNonreciprocal(NonreciprocalSpec),
    PlanarCavity(PlanarCavitySpec),
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmptySpec {}

impl Default for ProviderSpec {
    fn default() -> Self {
        ProviderSpec::FreeSpace(EmptySpec {})
    }
}

impl ProviderSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProviderSpec::FreeSpace(_) => "free_space",
            ProviderSpec::MirrorHalfspace(_) => "mirror_halfspace",
            ProviderSpec::SyntheticNonreciprocal(_) => "synthetic_nonreciprocal",
            ProviderSpec::PlanarCavity(_) => "planar_cavity",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ProviderSpec::FreeSpace(_) => Ok(()),
            ProviderSpec::MirrorHalfspace(m) => finite("provider.plane_z", m.plane_z),
            ProviderSpec::SyntheticNonreciprocal(s) => finite_vec("provider.bias", &s.bias),
            ProviderSpec::PlanarCavity(c) => {
                positive("provider.length", c.length)?;
                positive("provider.gamma", c.gamma)?;
                if c.n_modes == 0 {
                    return Err(Error::invalid("provider.n_modes", "need at least one mode"));
                }
                Ok(())
            }
        }
    }

    pub fn build(&self) -> Result<Arc<dyn GreensProvider>> {
        Ok(match self {
            ProviderSpec::FreeSpace(_) => Arc::new(FreeSpace::default()),
            ProviderSpec::MirrorHalfspace(m) => Arc::new(MirrorHalfSpace::new(m.plane_z)),
            ProviderSpec::SyntheticNonreciprocal(s) => Arc::new(SyntheticNonreciprocal::new(s.bias)),
            ProviderSpec::PlanarCavity(c) => {
                let family = planar_cavity_modes(c.length, c.polarization)?;
                Arc::new(ModeExpansion::new(Arc::new(family), c.n_modes, c.gamma))
            }
        })
    }
}

/// Numerical tolerances shared by all commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest relative imaginary part accepted in a real kernel.
    #[serde(default = "d_imag")]
    pub imag: f64,
    /// Richardson acceptance for the static limits.
    #[serde(default = "d_richardson")]
    pub richardson: f64,
    #[serde(default = "d_levels")]
    pub richardson_levels: usize,
    /// Finite-difference step for curls; automatic when absent.
    #[serde(default)]
    pub fd_step: Option<f64>,
    /// Relative tolerance of the damped Ω integral.
    #[serde(default = "d_spectral")]
    pub spectral: f64,
    /// Lanczos residual.
    #[serde(default = "d_eigen")]
    pub eigen: f64,
}

fn d_imag() -> f64 {
    1e-8
}
fn d_richardson() -> f64 {
    1e-6
}
fn d_levels() -> usize {
    4
}
fn d_spectral() -> f64 {
    1e-8
}
fn d_eigen() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            imag: d_imag(),
            richardson: d_richardson(),
            richardson_levels: d_levels(),
            fd_step: None,
            spectral: d_spectral(),
            eigen: d_eigen(),
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        positive("tolerances.imag", self.imag)?;
        positive("tolerances.richardson", self.richardson)?;
        positive("tolerances.spectral", self.spectral)?;
        positive("tolerances.eigen", self.eigen)?;
        if self.richardson_levels < 2 {
            return Err(Error::invalid("tolerances.richardson_levels", "need at least 2"));
        }
        if let Some(h) = self.fd_step {
            positive("tolerances.fd_step", h)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Output directory; the `--out` flag takes precedence.
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

/// Pairs drawn uniformly from a box, both points independently.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPairs {
    pub count: usize,
    pub lo: Vec3,
    pub hi: Vec3,
    #[serde(default = "d_min_sep")]
    pub min_separation: f64,
}

fn d_min_sep() -> f64 {
    0.1
}

impl RandomPairs {
    fn validate(&self, path: &str) -> Result<()> {
        finite_vec(&format!("{path}.lo"), &self.lo)?;
        finite_vec(&format!("{path}.hi"), &self.hi)?;
        if (0..3).any(|i| self.hi[i] < self.lo[i]) {
            return Err(Error::invalid(format!("{path}.hi"), "must not be below lo"));
        }
        positive(&format!("{path}.min_separation"), self.min_separation)?;
        if (self.hi - self.lo).norm() <= self.min_separation {
            return Err(Error::invalid(format!("{path}.min_separation"), "box too small"));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<[Vec3; 2]> {
        let point = |rng: &mut ChaCha8Rng| Vec3::from_fn(|i, _| rng.gen_range(self.lo[i]..=self.hi[i]));
        let mut out = Vec::with_capacity(self.count);
        while out.len() < self.count {
            let (a, b) = (point(rng), point(rng));
            if (a - b).norm() >= self.min_separation {
                out.push([a, b]);
            }
        }
        out
    }
}

/// Explicit pairs followed by seeded random ones.
fn collect_pairs(explicit: &[[Vec3; 2]], random: &Option<RandomPairs>, seed: u64) -> Vec<[Vec3; 2]> {
    let mut pairs = explicit.to_vec();
    if let Some(r) = random {
        pairs.extend(r.sample(&mut ChaCha8Rng::seed_from_u64(seed)));
    }
    pairs
}

fn validate_pairs(path: &str, explicit: &[[Vec3; 2]], random: &Option<RandomPairs>) -> Result<()> {
    for (i, [a, b]) in explicit.iter().enumerate() {
        finite_vec(&format!("{path}.pairs[{i}]"), a)?;
        finite_vec(&format!("{path}.pairs[{i}]"), b)?;
        if a == b {
            return Err(Error::invalid(format!("{path}.pairs[{i}]"), "points coincide"));
        }
    }
    if let Some(r) = random {
        r.validate(&format!("{path}.random"))?;
    }
    if explicit.is_empty() && random.as_ref().is_none_or(|r| r.count == 0) {
        return Err(Error::invalid(format!("{path}.pairs"), "no point pairs given"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelRouteSpec {
    ClosedForm,
    StaticLimits,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelsSection {
    #[serde(default)]
    pub pairs: Vec<[Vec3; 2]>,
    #[serde(default)]
    pub random: Option<RandomPairs>,
    #[serde(default = "all_kinds")]
    pub kinds: Vec<KernelKind>,
    /// Defaults to both routes when the provider has closed forms and to
    /// `static-limits` otherwise.
    #[serde(default)]
    pub routes: Option<Vec<KernelRouteSpec>>,
}

fn all_kinds() -> Vec<KernelKind> {
    KernelKind::ALL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesumSection {
    /// Mirror separation of the planar cavity.
    pub length: f64,
    #[serde(default)]
    pub polarization: Polarization,
    #[serde(default = "d_n_modes")]
    pub n_modes: usize,
    #[serde(default = "ee_only")]
    pub kinds: Vec<KernelKind>,
    #[serde(default)]
    pub pairs: Vec<[Vec3; 2]>,
    #[serde(default)]
    pub random: Option<RandomPairs>,
}

fn d_n_modes() -> usize {
    10_000
}
fn ee_only() -> Vec<KernelKind> {
    vec![KernelKind::Ee]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    #[serde(default)]
    pub pairs: Vec<[Vec3; 2]>,
    #[serde(default)]
    pub random: Option<RandomPairs>,
    #[serde(default = "wg_only")]
    pub integrands: Vec<IntegrandKind>,
    /// Small-arc radius; `1e-4/R` when absent.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Large-arc radius; `50/R` when absent.
    #[serde(default)]
    pub rho: Option<f64>,
    /// Steps of the η-halving ladder for the residue.
    #[serde(default = "d_ladder")]
    pub levels: usize,
    /// Also evaluate the magnetic correlation `Ω`.
    #[serde(default)]
    pub omega: bool,
}

fn wg_only() -> Vec<IntegrandKind> {
    vec![IntegrandKind::WG]
}
fn d_ladder() -> usize {
    4
}

/// Gaussian density `X(r) = v · exp(−Σ (x_i − c_i)²/2σ_i²)` for `X ∈ {P, M}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub center: Vec3,
    pub sigma: [f64; 3],
    #[serde(default = "Vec3::zeros")]
    pub p: Vec3,
    #[serde(default = "Vec3::zeros")]
    pub m: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub layout: RegularLayout,
    pub blobs: Vec<BlobSpec>,
    #[serde(default)]
    pub method: DensityMethod,
    #[serde(default = "yes")]
    pub smoothing: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiamagneticSpec {
    pub site: DiamagneticSite,
    pub split: f64,
    #[serde(default)]
    pub direction: Option<Vec3>,
    #[serde(default)]
    pub negligible_below: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    #[serde(default)]
    pub sites: Vec<DipoleSite>,
    #[serde(default)]
    pub density: Option<DensitySpec>,
    #[serde(default)]
    pub diamagnetic: Option<DiamagneticSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub sweep: SweepSpec,
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Pairs for the provider checks; a built-in set when empty.
    #[serde(default)]
    pub pairs: Vec<[Vec3; 2]>,
    #[serde(default)]
    pub random: Option<RandomPairs>,
    #[serde(default = "d_ee_rel")]
    pub ee_rel: f64,
    #[serde(default = "d_mm_rel")]
    pub mm_rel: f64,
    #[serde(default = "d_reciprocity")]
    pub reciprocity: f64,
    #[serde(default = "d_closure")]
    pub closure: f64,
    #[serde(default = "d_contour")]
    pub contour: f64,
    #[serde(default = "d_omega")]
    pub omega: f64,
    #[serde(default = "d_modesum")]
    pub modesum: f64,
    #[serde(default = "yes")]
    pub include_omega: bool,
    #[serde(default = "yes")]
    pub include_modesum: bool,
}

fn d_ee_rel() -> f64 {
    1e-7
}
fn d_mm_rel() -> f64 {
    1e-5
}
fn d_reciprocity() -> f64 {
    1e-10
}
fn d_closure() -> f64 {
    1e-6
}
fn d_contour() -> f64 {
    1e-5
}
fn d_omega() -> f64 {
    1e-5
}
fn d_modesum() -> f64 {
    1e-3
}

impl Default for VerifySection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl VerifySection {
    pub fn default_pairs() -> Vec<[Vec3; 2]> {
        vec![
            [Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.3, -0.2, 1.8)],
            [Vec3::new(0.5, 0.5, 0.5), Vec3::new(0.5, 0.5, 2.5)],
            [Vec3::new(0.1, 0.2, 0.7), Vec3::new(1.1, 0.4, 1.2)],
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// Unit system of inputs and outputs; `--units` takes precedence.
    #[serde(default)]
    pub units: Option<UnitSystem>,
    /// Seed for random pair sampling; `--seed` takes precedence.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub provider: ProviderSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernels: Option<KernelsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modesum: Option<ModesumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    #[serde(rename = "verify-all", default, skip_serializing_if = "Option::is_none")]
    pub verify_all: Option<VerifySection>,
}

impl RunConfig {
    /// Parses JSON text; errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::invalid(if path == "." { "config".to_string() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Checks ranges and cross-field requirements.
    pub fn validate(&self) -> Result<()> {
        self.provider.validate()?;
        self.tolerances.validate()?;
        let missing = |name: &str| Error::invalid(name, format!("section required by command {}", self.command.as_str()));
        match self.command {
            Command::Kernels => {
                let k = self.kernels.as_ref().ok_or_else(|| missing("kernels"))?;
                validate_pairs("kernels", &k.pairs, &k.random)?;
                if k.kinds.is_empty() {
                    return Err(Error::invalid("kernels.kinds", "empty"));
                }
                if k.routes.as_ref().is_some_and(|r| r.is_empty()) {
                    return Err(Error::invalid("kernels.routes", "empty"));
                }
            }
            Command::Modesum => {
                let m = self.modesum.as_ref().ok_or_else(|| missing("modesum"))?;
                positive("modesum.length", m.length)?;
                if m.n_modes == 0 {
                    return Err(Error::invalid("modesum.n_modes", "need at least one mode"));
                }
                if m.kinds.is_empty() {
                    return Err(Error::invalid("modesum.kinds", "empty"));
                }
                validate_pairs("modesum", &m.pairs, &m.random)?;
            }
            Command::Spectral => {
                let s = self.spectral.as_ref().ok_or_else(|| missing("spectral"))?;
                validate_pairs("spectral", &s.pairs, &s.random)?;
                if let Some(eta) = s.eta {
                    positive("spectral.eta", eta)?;
                }
                if let Some(rho) = s.rho {
                    positive("spectral.rho", rho)?;
                }
                if s.levels < 2 {
                    return Err(Error::invalid("spectral.levels", "need at least 2"));
                }
            }
            Command::Hamiltonian => {
                let h = self.hamiltonian.as_ref().ok_or_else(|| missing("hamiltonian"))?;
                for (i, s) in h.sites.iter().enumerate() {
                    let path = format!("hamiltonian.sites[{i}]");
                    finite_vec(&format!("{path}.position"), &s.position)?;
                    finite_vec(&format!("{path}.d"), &s.d)?;
                    finite_vec(&format!("{path}.m"), &s.m)?;
                }
                if let Some(d) = &h.density {
                    positive("hamiltonian.density.layout.spacing", d.layout.spacing)?;
                    if d.layout.shape.contains(&0) {
                        return Err(Error::invalid("hamiltonian.density.layout.shape", "empty grid"));
                    }
                    for (i, b) in d.blobs.iter().enumerate() {
                        for s in b.sigma {
                            positive(&format!("hamiltonian.density.blobs[{i}].sigma"), s)?;
                        }
                    }
                }
                if let Some(d) = &h.diamagnetic {
                    positive("hamiltonian.diamagnetic.split", d.split)?;
                    for (i, c) in d.site.constituents.iter().enumerate() {
                        positive(&format!("hamiltonian.diamagnetic.site.constituents[{i}].mass"), c.mass)?;
                    }
                }
                if h.sites.is_empty() && h.density.is_none() && h.diamagnetic.is_none() {
                    return Err(Error::invalid("hamiltonian", "nothing to compute"));
                }
            }
            Command::Oracle => {
                let o = self.oracle.as_ref().ok_or_else(|| missing("oracle"))?;
                if o.ratios.is_empty() {
                    return Err(Error::invalid("oracle.ratios", "empty"));
                }
                for (i, r) in o.ratios.iter().enumerate() {
                    positive(&format!("oracle.ratios[{i}]"), *r)?;
                }
                positive("oracle.sweep.kappa", o.sweep.kappa)?;
                for (i, f) in o.sweep.mode_freqs.iter().enumerate() {
                    positive(&format!("oracle.sweep.mode_freqs[{i}]"), *f)?;
                }
            }
            Command::VerifyAll => {
                if let Some(v) = &self.verify_all {
                    if !v.pairs.is_empty() || v.random.is_some() {
                        validate_pairs("verify-all", &v.pairs, &v.random)?;
                    }
                    for (name, x) in [
                        ("ee_rel", v.ee_rel),
                        ("mm_rel", v.mm_rel),
                        ("reciprocity", v.reciprocity),
                        ("closure", v.closure),
                        ("contour", v.contour),
                        ("omega", v.omega),
                        ("modesum", v.modesum),
                    ] {
                        positive(&format!("verify-all.{name}"), x)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn kernel_pairs(&self) -> Vec<[Vec3; 2]> {
        self.kernels
            .as_ref()
            .map(|k| collect_pairs(&k.pairs, &k.random, self.seed()))
            .unwrap_or_default()
    }

    pub fn modesum_pairs(&self) -> Vec<[Vec3; 2]> {
        self.modesum
            .as_ref()
            .map(|m| collect_pairs(&m.pairs, &m.random, self.seed()))
            .unwrap_or_default()
    }

    pub fn spectral_pairs(&self) -> Vec<[Vec3; 2]> {
        self.spectral
            .as_ref()
            .map(|s| collect_pairs(&s.pairs, &s.random, self.seed()))
            .unwrap_or_default()
    }

    pub fn verify_pairs(&self) -> Vec<[Vec3; 2]> {
        match &self.verify_all {
            Some(v) if !v.pairs.is_empty() || v.random.is_some() => collect_pairs(&v.pairs, &v.random, self.seed()),
            _ => VerifySection::default_pairs(),
        }
    }
}

fn finite(path: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(path, "must be finite"))
    }
}

fn finite_vec(path: &str, v: &Vec3) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(path, "must be finite"))
    }
}

fn positive(path: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(path, format!("must be positive, got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(e: Error) -> String {
        match e {
            Error::InvalidInput { field, .. } => field,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn minimal_verify_config() {
        let c = RunConfig::from_json(r#"{"command": "verify-all"}"#).unwrap();
        assert_eq!(c.provider, ProviderSpec::default());
        assert_eq!(c.verify_pairs().len(), 3);
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let e = RunConfig::from_json(r#"{"command": "kernels", "kernels": {"pairs": [], "colour": 1}}"#).unwrap_err();
        assert_eq!(field_of(e), "kernels.colour");
        let e = RunConfig::from_json(r#"{"command": "kernels", "bogus": true}"#).unwrap_err();
        assert!(matches!(e, Error::InvalidInput { .. }));
        let e = RunConfig::from_json(r#"{"command":"verify-all","provider":{"name":"mirror_halfspace","z":1}}"#)
            .unwrap_err();
        assert!(matches!(e, Error::InvalidInput { .. }));
    }

    #[test]
    fn negative_length_names_field() {
        let e = RunConfig::from_json(
            r#"{"command": "modesum", "modesum": {"length": -1.0, "pairs": [[[0,0,0.2],[0,0,0.5]]]}}"#,
        )
        .unwrap_err();
        assert_eq!(field_of(e), "modesum.length");
        let e = RunConfig::from_json(
            r#"{"command": "verify-all", "provider": {"name": "planar_cavity", "length": -2, "n_modes": 10, "gamma": 0.01}}"#,
        )
        .unwrap_err();
        assert_eq!(field_of(e), "provider.length");
    }

    #[test]
    fn type_errors_carry_paths() {
        let e = RunConfig::from_json(r#"{"command": "oracle", "oracle": {"sweep": {"kappa": "x"}, "ratios": []}}"#)
            .unwrap_err();
        assert_eq!(field_of(e), "oracle.sweep.kappa");
    }

    #[test]
    fn missing_section() {
        let e = RunConfig::from_json(r#"{"command": "kernels"}"#).unwrap_err();
        assert_eq!(field_of(e), "kernels");
    }

    #[test]
    fn random_pairs_are_seeded() {
        let text = r#"{"command": "kernels", "seed": 7,
            "kernels": {"random": {"count": 5, "lo": [0,0,0], "hi": [1,1,1]}}}"#;
        let a = RunConfig::from_json(text).unwrap().kernel_pairs();
        let b = RunConfig::from_json(text).unwrap().kernel_pairs();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|[p, q]| (p - q).norm() >= 0.1));
        let mut c = RunConfig::from_json(text).unwrap();
        c.seed = Some(8);
        assert_ne!(c.kernel_pairs(), a);
    }

    #[test]
    fn serialized_config_round_trips() {
        let text = r#"{"command": "hamiltonian", "provider": {"name": "mirror_halfspace", "plane_z": 0.5},
            "hamiltonian": {"sites": [{"position": [0,0,1], "d": [0,0,1]}, {"position": [0,0,2], "d": [1,0,0]}]}}"#;
        let c = RunConfig::from_json(text).unwrap();
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
    }
}
