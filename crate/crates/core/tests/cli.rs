use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cavity_kernels::cli::RunConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cavity-kernels"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.in.json");
    fs::write(&p, text).unwrap();
    p
}

fn stderr_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("error JSON on stderr");
    serde_json::from_str(line).unwrap()
}

#[test]
fn verify_all_free_space_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&configs().join("verify_free_space.json"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["failed"], 0);
    assert!(report["passed"].as_u64().unwrap() >= 30);
    let csv = fs::read_to_string(tmp.path().join("verify.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn verify_all_mirror_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&configs().join("verify_mirror.json"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn failed_checks_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"command": "verify-all", "verify-all": {"mm_rel": 1e-12, "include_omega": false, "include_modesum": false}}"#,
    );
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "VerificationFailed");
    assert!(err["failed"].as_array().unwrap().iter().any(|f| f.as_str().unwrap().starts_with("mm_")));
}

#[test]
fn negative_length_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"command": "modesum", "modesum": {"length": -1.0, "pairs": [[[0, 0, 0.2], [0, 0, 0.5]]]}}"#,
    );
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "InvalidInput");
    assert_eq!(err["field"], "modesum.length");
    assert_eq!(err["exit_code"], 2);
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn unknown_key_and_missing_file_are_validation_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"command": "verify-all", "verbose": true}"#);
    let o = run(&cfg, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("verbose"));
    let o = run(&tmp.path().join("absent.json"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["field"], "config");
}

#[test]
fn numerical_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"command": "kernels", "provider": {"name": "mirror_halfspace"}, "tolerances": {"richardson": 1e-30},
            "kernels": {"pairs": [[[0, 0, 1], [0, 0.3, 1.2]]], "kinds": ["mm"], "routes": ["static-limits"]}}"#,
    );
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "NonConvergent");
}

#[test]
fn kernels_writes_one_row_per_pair_kind_route() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&configs().join("kernels_mirror.json"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("kernels.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[..9], ["pair", "x", "y", "z", "xp", "yp", "zp", "kind", "route"]);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // 5 pairs × {ee, mm} × {closed-form, static-limits}.
    assert_eq!(rows.len(), 5 * 2 * 2);
    assert!(rows.iter().all(|r| r.len() == header.len()));
    let mut keys: Vec<(&str, &str, &str)> = rows.iter().map(|r| (r[0], r[7], r[8])).collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), rows.len());
    // Floats carry 17 significant digits.
    assert!(rows[0][9].contains('.') && rows[0][9].split('e').next().unwrap().len() >= 18);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    for name in ["kernels_mirror", "hamiltonian_mirror", "oracle_sweep", "modesum_planar", "verify_free_space"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = configs().join(format!("{name}.json"));
        assert_eq!(run(&cfg, a.path(), &["--threads", "1"]).status.code(), Some(0));
        assert_eq!(run(&cfg, b.path(), &["--threads", "3"]).status.code(), Some(0));
        let mut files: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        assert!(files.len() >= 2);
        for f in files {
            assert_eq!(
                fs::read(a.path().join(&f)).unwrap(),
                fs::read(b.path().join(&f)).unwrap(),
                "{name}: {f:?}"
            );
        }
    }
}

#[test]
fn seed_flag_changes_sampled_pairs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("kernels_mirror.json");
    run(&cfg, a.path(), &["--seed", "5"]);
    run(&cfg, b.path(), &["--seed", "6"]);
    let ka = fs::read_to_string(a.path().join("kernels.csv")).unwrap();
    let kb = fs::read_to_string(b.path().join("kernels.csv")).unwrap();
    assert_ne!(ka, kb);
    // The explicit pair comes first and is unaffected.
    assert_eq!(ka.lines().nth(1), kb.lines().nth(1));
    let resolved = RunConfig::from_json(&fs::read_to_string(a.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(resolved.seed, Some(5));
}

#[test]
fn emitted_config_round_trips() {
    for name in ["kernels_mirror", "hamiltonian_mirror", "oracle_sweep", "spectral_free_space", "density_free_space"] {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = configs().join(format!("{name}.json"));
        assert_eq!(run(&cfg, tmp.path(), &[]).status.code(), Some(0), "{name}");
        let text = fs::read_to_string(tmp.path().join("config.json")).unwrap();
        let parsed = RunConfig::from_json(&text).unwrap();
        let original = RunConfig::from_json(&fs::read_to_string(&cfg).unwrap()).unwrap();
        assert_eq!(parsed.command, original.command);
        assert_eq!(parsed.provider, original.provider);
        assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", text);
        for entry in fs::read_dir(tmp.path()).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "json") {
                let _: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
            }
        }
    }
}

fn first_kernel_entry(dir: &Path) -> f64 {
    let csv = fs::read_to_string(dir.join("kernels.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    row[9].parse().unwrap()
}

#[test]
fn si_units_scale_kernels() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"command": "kernels", "kernels": {"pairs": [[[0, 0, 0], [0, 0, 1]]], "kinds": ["ee"], "routes": ["closed-form"]}}"#,
    );
    let nat = tmp.path().join("nat");
    let si = tmp.path().join("si");
    assert_eq!(run(&cfg, &nat, &[]).status.code(), Some(0));
    assert_eq!(run(&cfg, &si, &["--units", "si"]).status.code(), Some(0));
    let ratio = first_kernel_entry(&si) / first_kernel_entry(&nat);
    let eps0 = cavity_kernels::units::EPSILON_0;
    assert!((ratio * eps0 - 1.0).abs() < 1e-12);
    let o = run(&cfg, &nat, &["--units", "cgs"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hamiltonian_report_contents() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&configs().join("hamiltonian_mirror.json"), tmp.path(), &[]).status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("hamiltonian.json")).unwrap()).unwrap();
    assert_eq!(v["provider"], "mirror_halfspace");
    assert_eq!(v["pairwise"]["pairs"].as_array().unwrap().len(), 3);
    assert_eq!(v["pairwise"]["self_terms"].as_array().unwrap().len(), 3);
    assert!(v["diamagnetic"]["ratio"].as_f64().unwrap() > 0.0);
    assert!(v["diamagnetic"]["negligible"].is_boolean());
}

#[test]
fn density_energy_matches_gaussian_reference() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&configs().join("density_free_space.json"), tmp.path(), &[]).status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("hamiltonian.json")).unwrap()).unwrap();
    let e = v["density"]["total"].as_f64().unwrap();
    let reference = cavity_kernels::hamiltonian::gaussian_blob_energy_reference(
        1.0,
        cavity_kernels::Vec3::z(),
        [1.0, 1.0, 1.6],
    )
    .unwrap();
    assert!(((e - reference) / reference).abs() < 2e-2, "{e} {reference}");
    assert_eq!(v["density"]["method"], "fft");
}

#[test]
fn log_level_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .env("CAVITY_KERNELS_LOG", "info")
        .arg("--config")
        .arg(configs().join("oracle_sweep.json"))
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("running oracle"));
}
