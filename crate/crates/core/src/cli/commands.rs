//! Command implementations. Each returns the artifacts to write.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Command, KernelRouteSpec, RunConfig, Tolerances, VerifySection};
use crate::couplings::{
    fmt_f64, free_space_lambda_ee_reference, free_space_lambda_mm_reference, lambda, KernelBackend, KernelKind,
    KernelOptions, KernelResult,
};
use crate::error::{Error, Result};
use crate::greens::{static_limits, GreensProvider, LimitsBackend, RichardsonOptions};
use crate::hamiltonian::{
    density_interaction_energy, diamagnetic_renormalization_dipole, pairwise_dipole_energy, DensityGrid,
    DensityOptions, DiamagneticOptions, DiamagneticSite, DipoleSite,
};
use crate::mode_sum::{lambda_modesum, planar_cavity_modes};
use crate::oracle::{effective_vs_exact_sweep, EigenOptions};
use crate::spectral::{
    diamagnetic_omega_spectral, free_space_omega_reference, residue_decomposition, ContourSpec, IntegrandKind,
    OmegaSpectralOptions,
};
use crate::tensor::{Dyadic, Vec3};
use crate::units::{convert_units, Direction, QuantityKind, UnitSystem};

pub struct Artifact {
    pub name: &'static str,
    pub contents: String,
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Names of failed verification checks.
    pub failed: Vec<String>,
}

impl Outcome {
    fn ok(artifacts: Vec<Artifact>) -> Self {
        Outcome {
            artifacts,
            failed: Vec::new(),
        }
    }
}

/// Converts between the configured unit system and natural units.
#[derive(Clone, Copy)]
struct Units(UnitSystem);

impl Units {
    fn out(&self, x: f64, kind: QuantityKind) -> f64 {
        match self.0 {
            UnitSystem::Natural => x,
            UnitSystem::Si => convert_units(x, kind, Direction::ToSi),
        }
    }

    fn input(&self, x: f64, kind: QuantityKind) -> f64 {
        match self.0 {
            UnitSystem::Natural => x,
            UnitSystem::Si => convert_units(x, kind, Direction::ToNatural),
        }
    }

    fn input_vec(&self, v: &Vec3, kind: QuantityKind) -> Vec3 {
        v.map(|x| self.input(x, kind))
    }

    fn kernel_kind(kind: KernelKind) -> QuantityKind {
        match kind {
            KernelKind::Ee => QuantityKind::KernelEe,
            KernelKind::Em | KernelKind::Me => QuantityKind::KernelCross,
            KernelKind::Mm => QuantityKind::KernelMm,
        }
    }

    fn kernel(&self, k: &KernelResult) -> KernelResult {
        let s = self.out(1.0, Self::kernel_kind(k.kind));
        KernelResult {
            regular: k.regular * s,
            delta_coefficient: k.delta_coefficient * s,
            ..*k
        }
    }
}

pub fn dispatch(cfg: &RunConfig, units: UnitSystem) -> Result<Outcome> {
    let p = cfg.provider.build()?;
    let u = Units(units);
    match cfg.command {
        Command::Kernels => kernels(cfg, p.as_ref(), u),
        Command::Modesum => modesum(cfg, u),
        Command::Spectral => spectral(cfg, p.as_ref(), u),
        Command::Hamiltonian => hamiltonian(cfg, p.as_ref(), u),
        Command::Oracle => oracle(cfg),
        Command::VerifyAll => verify_all(cfg, p.as_ref()),
    }
}

fn kernel_options(t: &Tolerances, route: KernelRouteSpec) -> KernelOptions {
    let backend = match route {
        KernelRouteSpec::ClosedForm => KernelBackend::ClosedForm,
        KernelRouteSpec::StaticLimits => KernelBackend::Generic {
            limits: RichardsonOptions {
                h0: None,
                levels: t.richardson_levels,
                tol: t.richardson,
            },
            step: t.fd_step,
        },
    };
    KernelOptions {
        backend,
        imag_tol: t.imag,
    }
}

fn has_closed_forms(p: &dyn GreensProvider, pairs: &[[Vec3; 2]]) -> bool {
    pairs
        .iter()
        .all(|[a, b]| p.analytic_static_limits(a, b).is_some() && p.analytic_static_curls(a, b).is_some())
}

fn pair_cols(i: usize, r: &Vec3, rp: &Vec3) -> String {
    let coords: Vec<String> = r.iter().chain(rp.iter()).map(|x| fmt_f64(*x)).collect();
    format!("{i},{}", coords.join(","))
}

const PAIR_HEADER: &str = "pair,x,y,z,xp,yp,zp";

fn component(i: usize) -> String {
    format!("{}{}", i / 3, i % 3)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn kernels(cfg: &RunConfig, p: &dyn GreensProvider, u: Units) -> Result<Outcome> {
    let sec = cfg.kernels.as_ref().expect("validated");
    let pairs = cfg.kernel_pairs();
    let closed = has_closed_forms(p, &pairs);
    let routes = sec.routes.clone().unwrap_or_else(|| {
        if closed {
            vec![KernelRouteSpec::ClosedForm, KernelRouteSpec::StaticLimits]
        } else {
            vec![KernelRouteSpec::StaticLimits]
        }
    });
    if routes.contains(&KernelRouteSpec::ClosedForm) && !closed {
        return Err(Error::invalid(
            "kernels.routes",
            format!("{} has no closed forms at every pair", p.name()),
        ));
    }
    let jobs: Vec<(usize, KernelKind, KernelRouteSpec)> = (0..pairs.len())
        .flat_map(|i| {
            let routes = &routes;
            sec.kinds.iter().flat_map(move |&k| routes.iter().map(move |&r| (i, k, r)))
        })
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(i, kind, route)| {
            let [r, rp] = &pairs[i];
            lambda(p, kind, r, rp, &kernel_options(&cfg.tolerances, route))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = format!("pair,{}\n", KernelResult::csv_header());
    for (&(i, _, _), k) in jobs.iter().zip(&results) {
        let [r, rp] = &pairs[i];
        csv.push_str(&format!("{i},{}\n", u.kernel(k).csv_row(r, rp)));
    }
    Ok(Outcome::ok(vec![Artifact {
        name: "kernels.csv",
        contents: csv,
    }]))
}

fn modesum(cfg: &RunConfig, u: Units) -> Result<Outcome> {
    let sec = cfg.modesum.as_ref().expect("validated");
    let family = planar_cavity_modes(sec.length, sec.polarization)?;
    let pairs = cfg.modesum_pairs();
    let mut csv = format!("{PAIR_HEADER},kind,stage,n,component,value\n");
    let axis = match sec.polarization {
        crate::mode_sum::Polarization::X => 0,
        crate::mode_sum::Polarization::Y => 4,
    };
    for (i, [r, rp]) in pairs.iter().enumerate() {
        let head = pair_cols(i, r, rp);
        for &kind in &sec.kinds {
            let res = lambda_modesum(&family, kind, r, rp, sec.n_modes)?;
            let scale = u.out(1.0, Units::kernel_kind(kind));
            let mut emit = |stage: &str, n: usize, d: &Dyadic| {
                for (c, z) in d.entries().iter().enumerate() {
                    csv.push_str(&format!("{head},{kind},{stage},{n},{},{}\n", component(c), fmt_f64(z.re * scale)));
                }
            };
            for (n, s) in &res.record.checkpoints {
                emit("partial", *n, s);
            }
            emit("accelerated", sec.n_modes, &res.record.accelerated);
            csv.push_str(&format!(
                "{head},{kind},tail_estimate,{},max,{}\n",
                sec.n_modes,
                fmt_f64(res.record.tail_estimate * scale)
            ));
            if kind == KernelKind::Ee {
                let v = family.electrostatic_kernel(r[2], rp[2]) * scale;
                csv.push_str(&format!(
                    "{head},{kind},reference,{},{},{}\n",
                    sec.n_modes,
                    component(axis),
                    fmt_f64(v)
                ));
            }
        }
    }
    Ok(Outcome::ok(vec![Artifact {
        name: "modesum.csv",
        contents: csv,
    }]))
}

fn contour_spec(len: f64, kind: IntegrandKind, eta: Option<f64>, rho: Option<f64>) -> ContourSpec {
    let mut spec = ContourSpec::for_separation(len, kind);
    if let Some(e) = eta {
        spec.eta = e;
    }
    if let Some(r) = rho {
        spec.rho = r;
    }
    spec
}

fn integrand_name(k: IntegrandKind) -> &'static str {
    match k {
        IntegrandKind::WG => "w-g",
        IntegrandKind::GCurl => "g-curl",
        IntegrandKind::CurlG => "curl-g",
        IntegrandKind::CurlGCurlOverW => "curl-g-curl-over-w",
    }
}

fn spectral(cfg: &RunConfig, p: &dyn GreensProvider, u: Units) -> Result<Outcome> {
    let sec = cfg.spectral.as_ref().expect("validated");
    let pairs = cfg.spectral_pairs();
    let mut csv = format!("{PAIR_HEADER},integrand,quantity,component,re,im\n");
    for (i, [r, rp]) in pairs.iter().enumerate() {
        let head = pair_cols(i, r, rp);
        let len = (r - rp).norm();
        let decs = sec
            .integrands
            .par_iter()
            .map(|&k| residue_decomposition(p, &contour_spec(len, k, sec.eta, sec.rho), r, rp, sec.levels))
            .collect::<Result<Vec<_>>>()?;
        for (&k, dec) in sec.integrands.iter().zip(&decs) {
            let name = integrand_name(k);
            for (q, d) in [
                ("real_axis", dec.real_axis),
                ("small_arc", dec.small_arc),
                ("large_arc", dec.large_arc),
                ("real_axis_plus_large_arc", dec.real_axis_plus_large_arc()),
                ("residue", dec.residue),
            ] {
                for (c, z) in d.entries().iter().enumerate() {
                    csv.push_str(&format!("{head},{name},{q},{},{},{}\n", component(c), fmt_f64(z.re), fmt_f64(z.im)));
                }
            }
            csv.push_str(&format!("{head},{name},relative_closure,max,{},0\n", fmt_f64(dec.relative_closure)));
            csv.push_str(&format!("{head},{name},residue_error,max,{},0\n", fmt_f64(dec.residue_error)));
        }
        if sec.omega {
            let opts = OmegaSpectralOptions {
                rel_tol: cfg.tolerances.spectral,
                ..Default::default()
            };
            let om = diamagnetic_omega_spectral(p, r, rp, &opts)?;
            let s = u.out(1.0, QuantityKind::MagneticCorrelation);
            for (c, z) in om.value.entries().iter().enumerate() {
                csv.push_str(&format!("{head},omega,value,{},{},0\n", component(c), fmt_f64(z.re * s)));
            }
            csv.push_str(&format!("{head},omega,error,max,{},0\n", fmt_f64(om.error * s)));
        }
    }
    Ok(Outcome::ok(vec![Artifact {
        name: "spectral.csv",
        contents: csv,
    }]))
}

#[derive(Serialize)]
struct HamiltonianReport {
    provider: String,
    units: UnitSystem,
    #[serde(skip_serializing_if = "Option::is_none")]
    pairwise: Option<crate::hamiltonian::PairwiseEnergy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<crate::hamiltonian::DensityEnergy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diamagnetic: Option<crate::hamiltonian::DiamagneticReport>,
}

fn hamiltonian(cfg: &RunConfig, p: &dyn GreensProvider, u: Units) -> Result<Outcome> {
    let sec = cfg.hamiltonian.as_ref().expect("validated");
    let kopts = KernelOptions {
        imag_tol: cfg.tolerances.imag,
        ..Default::default()
    };
    let energy = |x: f64| u.out(x, QuantityKind::Energy);

    let pairwise = if sec.sites.is_empty() {
        None
    } else {
        let sites: Vec<DipoleSite> = sec
            .sites
            .iter()
            .map(|s| DipoleSite {
                position: s.position,
                d: u.input_vec(&s.d, QuantityKind::ElectricDipole),
                m: u.input_vec(&s.m, QuantityKind::MagneticDipole),
            })
            .collect();
        let mut e = pairwise_dipole_energy(&sites, p, &kopts)?;
        e.total = energy(e.total);
        for pe in &mut e.pairs {
            pe.ee = energy(pe.ee);
            pe.em = energy(pe.em);
            pe.me = energy(pe.me);
            pe.mm = energy(pe.mm);
        }
        // Self-term weights are squared dipoles.
        let (se, sm) = (u.out(1.0, QuantityKind::ElectricDipole), u.out(1.0, QuantityKind::MagneticDipole));
        for st in &mut e.self_terms {
            st.delta_weight_ee *= se * se;
            st.delta_weight_mm *= sm * sm;
        }
        Some(e)
    };

    let density = match &sec.density {
        None => None,
        Some(d) => {
            let blobs: Vec<_> = d
                .blobs
                .iter()
                .map(|b| {
                    (
                        b.center,
                        b.sigma,
                        u.input_vec(&b.p, QuantityKind::ElectricDipole),
                        u.input_vec(&b.m, QuantityKind::MagneticDipole),
                    )
                })
                .collect();
            let grid = DensityGrid::regular(d.layout, |x| {
                let (mut pv, mut mv) = (Vec3::zeros(), Vec3::zeros());
                for (c, s, bp, bm) in &blobs {
                    let q: f64 = (0..3).map(|i| ((x[i] - c[i]) / s[i]).powi(2)).sum();
                    let w = (-0.5 * q).exp();
                    pv += bp * w;
                    mv += bm * w;
                }
                (pv, mv)
            })?;
            let opts = DensityOptions {
                method: d.method,
                smoothing: d.smoothing,
                kernel: kopts,
            };
            let mut e = density_interaction_energy(&grid, p, &opts)?;
            e.total = energy(e.total);
            e.regular = energy(e.regular);
            e.delta = energy(e.delta);
            Some(e)
        }
    };

    let diamagnetic = match &sec.diamagnetic {
        None => None,
        Some(d) => {
            let site = DiamagneticSite {
                position: d.site.position,
                constituents: d
                    .site
                    .constituents
                    .iter()
                    .map(|c| crate::hamiltonian::Constituent {
                        charge: u.input(c.charge, QuantityKind::Charge),
                        mass: u.input(c.mass, QuantityKind::Mass),
                        offset: c.offset,
                    })
                    .collect(),
            };
            let mut opts = DiamagneticOptions::with_split(d.split);
            if let Some(dir) = d.direction {
                opts.direction = dir;
            }
            if let Some(t) = d.negligible_below {
                opts.negligible_below = t;
            }
            let mut rep = diamagnetic_renormalization_dipole(&site, p, &opts)?;
            rep.energy = energy(rep.energy);
            let s = u.out(1.0, QuantityKind::MagneticCorrelation);
            rep.omega.iter_mut().for_each(|x| *x *= s);
            Some(rep)
        }
    };

    let report = HamiltonianReport {
        provider: p.name().to_string(),
        units: u.0,
        pairwise,
        density,
        diamagnetic,
    };
    Ok(Outcome::ok(vec![Artifact {
        name: "hamiltonian.json",
        contents: to_json(&report),
    }]))
}

fn oracle(cfg: &RunConfig) -> Result<Outcome> {
    let sec = cfg.oracle.as_ref().expect("validated");
    let opts = EigenOptions {
        tol: cfg.tolerances.eigen,
        ..Default::default()
    };
    let table = effective_vs_exact_sweep(&sec.sweep, &sec.ratios, &opts)?;
    Ok(Outcome::ok(vec![
        Artifact {
            name: "sweep.csv",
            contents: table.to_csv(),
        },
        Artifact {
            name: "oracle.json",
            contents: to_json(&table),
        },
    ]))
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pair: Option<usize>,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, pair: Option<usize>, value: f64, reference: f64, error: f64, tolerance: f64) -> Self {
        Check {
            name: name.to_string(),
            pair,
            value,
            reference,
            error,
            tolerance,
            pass: error <= tolerance,
        }
    }

    fn tensors(name: &str, pair: usize, got: &Dyadic, want: &Dyadic, tol: f64) -> Self {
        Check::new(name, Some(pair), got.max_abs(), want.max_abs(), got.rel_diff(want), tol)
    }

    fn label(&self) -> String {
        match self.pair {
            Some(i) => format!("{}[{i}]", self.name),
            None => self.name.clone(),
        }
    }
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    provider: &'a str,
    passed: usize,
    failed: usize,
    checks: &'a [Check],
}

/// Route-equivalence checks for one pair.
fn verify_pair(p: &dyn GreensProvider, i: usize, r: &Vec3, rp: &Vec3, v: &VerifySection, t: &Tolerances) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let generic = kernel_options(t, KernelRouteSpec::StaticLimits);
    let closed = has_closed_forms(p, &[[*r, *rp]]);
    let ee = lambda(p, KernelKind::Ee, r, rp, &generic)?;
    let mm = lambda(p, KernelKind::Mm, r, rp, &generic)?;
    if closed {
        let copts = kernel_options(t, KernelRouteSpec::ClosedForm);
        let ee_c = lambda(p, KernelKind::Ee, r, rp, &copts)?;
        let mm_c = lambda(p, KernelKind::Mm, r, rp, &copts)?;
        out.push(Check::tensors("ee_static_limits_vs_closed_form", i, &ee.regular, &ee_c.regular, v.ee_rel));
        out.push(Check::tensors("mm_static_limits_vs_closed_form", i, &mm.regular, &mm_c.regular, v.mm_rel));
    }
    if p.name() == "free_space" {
        let ee_ref = free_space_lambda_ee_reference(r, rp, true).regular;
        let mm_ref = free_space_lambda_mm_reference(r, rp, true).regular;
        out.push(Check::tensors("ee_vs_dipolar_reference", i, &ee.regular, &ee_ref, v.ee_rel));
        out.push(Check::tensors("mm_vs_dipolar_reference", i, &mm.regular, &mm_ref, v.mm_rel));
    }
    if p.reciprocal() {
        let scale = 1.0 / (4.0 * PI * (r - rp).norm().powi(3));
        let opts = KernelOptions {
            imag_tol: t.imag,
            ..Default::default()
        };
        for kind in [KernelKind::Em, KernelKind::Me] {
            let k = lambda(p, kind, r, rp, &opts)?;
            let name = format!("{kind}_vanishes_reciprocal");
            out.push(Check::new(&name, Some(i), k.regular.max_abs(), 0.0, k.regular.max_abs() / scale, v.reciprocity));
        }
    }

    let len = (r - rp).norm();
    let lim = static_limits(p, r, rp, LimitsBackend::Auto)?;
    let dec = residue_decomposition(p, &contour_spec(len, IntegrandKind::WG, None, None), r, rp, 4)?;
    out.push(Check::new("contour_closure_w_g", Some(i), dec.relative_closure, 0.0, dec.relative_closure, v.closure));
    let i_pi = Complex64::new(0.0, PI);
    out.push(Check::tensors("contour_identity_w_g", i, &dec.real_axis_plus_large_arc(), &(lim.w2 * i_pi), v.contour));
    if let Some(curls) = p.analytic_static_curls(r, rp) {
        let cc = curls?.curl_curl_d2;
        let spec = contour_spec(len, IntegrandKind::CurlGCurlOverW, None, None);
        let dec = residue_decomposition(p, &spec, r, rp, 4)?;
        out.push(Check::new(
            "contour_closure_curl_g_curl",
            Some(i),
            dec.relative_closure,
            0.0,
            dec.relative_closure,
            v.closure,
        ));
        out.push(Check::tensors(
            "contour_identity_curl_g_curl",
            i,
            &dec.real_axis_plus_large_arc(),
            &(cc * (i_pi * 0.5)),
            v.contour,
        ));
    }
    if v.include_omega && p.name() == "free_space" {
        let opts = OmegaSpectralOptions {
            rel_tol: 1e-2 * v.omega,
            ..Default::default()
        };
        let om = diamagnetic_omega_spectral(p, r, rp, &opts)?;
        out.push(Check::tensors("omega_vs_reference", i, &om.value, &free_space_omega_reference(r, rp), v.omega));
    }
    Ok(out)
}

fn modesum_checks(v: &VerifySection) -> Result<Vec<Check>> {
    let family = planar_cavity_modes(1.0, Default::default())?;
    let zs = [(0.2, 0.5), (0.3, 0.9), (0.7, 0.4), (0.15, 0.85)];
    zs.iter()
        .enumerate()
        .map(|(i, &(z, zp))| {
            let r = Vec3::new(0.1, 0.0, z);
            let rp = Vec3::new(-0.2, 0.3, zp);
            let res = lambda_modesum(&family, KernelKind::Ee, &r, &rp, 10_000)?;
            let got = res.record.accelerated[(0, 0)].re;
            let want = family.electrostatic_kernel(z, zp);
            Ok(Check::new("modesum_vs_electrostatic", Some(i), got, want, (got - want).abs() / want.abs(), v.modesum))
        })
        .collect()
}

fn verify_all(cfg: &RunConfig, p: &dyn GreensProvider) -> Result<Outcome> {
    let v = cfg.verify_all.clone().unwrap_or_default();
    let pairs = cfg.verify_pairs();
    let per_pair = pairs
        .par_iter()
        .enumerate()
        .map(|(i, [r, rp])| verify_pair(p, i, r, rp, &v, &cfg.tolerances))
        .collect::<Result<Vec<_>>>()?;
    let mut checks: Vec<Check> = per_pair.into_iter().flatten().collect();
    if v.include_modesum {
        checks.extend(modesum_checks(&v)?);
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(Check::label).collect();
    let mut csv = String::from("check,pair,value,reference,error,tolerance,pass\n");
    for c in &checks {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.name,
            c.pair.map(|i| i.to_string()).unwrap_or_default(),
            fmt_f64(c.value),
            fmt_f64(c.reference),
            fmt_f64(c.error),
            fmt_f64(c.tolerance),
            c.pass
        ));
    }
    let report = VerifyReport {
        provider: p.name(),
        passed: checks.len() - failed.len(),
        failed: failed.len(),
        checks: &checks,
    };
    Ok(Outcome {
        artifacts: vec![
            Artifact {
                name: "verify.csv",
                contents: csv,
            },
            Artifact {
                name: "verify.json",
                contents: to_json(&report),
            },
        ],
        failed,
    })
}
