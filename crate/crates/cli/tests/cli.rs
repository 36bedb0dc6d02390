use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nli")).args(args).output().expect("runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

const TINY: &str = r#"
[scenario]
name = "tiny"
formats = ["PM-QPSK", "4D-64PRS"]
estimators = ["4D", "GN", "EGN", "RP1MC", "SSFM"]
channels = [0, 2]
seed = 7

[grid]
n_channels = 3
symbol_rate_gbaud = 45.0
spacing_ghz = 50.0
power_dbm = 0.0

[fiber]
raman_slope_per_w_km_thz = 1.12
span_length_km = 100.0

[model]
n_sci = 17
n_min = 17
n_max = 33

[mc]
symbols = 16
realizations = 20

[ssfm]
symbols = 256
frames = 2
"#;

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn list_formats_shows_builtins() {
    let o = nli(&["list-formats"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for n in nli_core::formats::builtin_names() {
        assert!(text.contains(n), "{n} missing");
    }
}

#[test]
fn shipped_configs_validate() {
    for name in ["desk_small.toml", "wdm23_flat.toml", "wdm23_isrs.toml"] {
        let o = nli(&["validate", s(&configs().join(name))]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.starts_with("# config_hash="));
        assert!(text.contains("window_symbols = \"auto\""), "defaults are materialized");
    }
}

#[test]
fn negative_span_length_is_rejected_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TINY.replace("span_length_km = 100.0", "span_length_km = -5.0");
    let p = write_cfg(dir.path(), "bad.toml", &cfg);
    let o = nli(&["validate", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    let line = cfg.lines().position(|l| l.contains("-5.0")).unwrap() + 1;
    assert!(err.contains(&format!("line {line}")), "{err}");
}

#[test]
fn empty_estimators_and_unknown_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_cfg(dir.path(), "a.toml", &TINY.replace(r#"["4D", "GN", "EGN", "RP1MC", "SSFM"]"#, "[]"));
    assert_eq!(nli(&["run", s(&p), "--out", s(&dir.path().join("o"))]).status.code(), Some(1));
    let p = write_cfg(dir.path(), "b.toml", &TINY.replace("seed = 7", "seed = 7\nspeed = 3"));
    let o = nli(&["validate", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("speed"));
}

#[test]
fn full_scale_needs_flag() {
    let o = nli(&["run", s(&configs().join("wdm23_isrs.toml")), "--out", "/nonexistent/never"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("--full"));
}

#[test]
fn run_is_reproducible_and_diffable() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_cfg(dir.path(), "tiny.toml", TINY);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = nli(&["run", s(&p), "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<String> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    for must in ["comparison.csv", "eta_vs_channel.svg", "config.resolved.toml", "eta_GN_Gaussian.csv", "eta_RP1MC_4D-64PRS.csv", "eta_SSFM_PM-QPSK.csv"] {
        assert!(names.iter().any(|n| n == must), "{must} missing from {names:?}");
    }
    for n in names.iter().filter(|n| n.ends_with(".csv")) {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n} differs");
    }
    let header = std::fs::read_to_string(a.join("eta_4D_4D-64PRS.csv")).unwrap();
    assert!(header.lines().nth(1).unwrap() == "channel_index,f_center_THz,eta_dB,sci_dB,xpm_dB,estimator,format,stderr_dB");
    assert_eq!(header.lines().count(), 2 + 3);
    let mc = std::fs::read_to_string(a.join("eta_RP1MC_4D-64PRS.csv")).unwrap();
    assert_eq!(mc.lines().count(), 2 + 2);
    let svg = std::fs::read_to_string(a.join("eta_vs_channel.svg")).unwrap();
    assert!(svg.contains("<!-- data") && svg.contains("stroke-dasharray=\"6,4\"") && svg.contains("<circle"));

    let f4d = a.join("eta_4D_4D-64PRS.csv");
    let o = nli(&["diff", s(&f4d), s(&f4d), "--assert", "--threshold", "0"]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("mean |gap| 0.000 dB"));

    let egn = a.join("eta_EGN_4D-64PRS.csv");
    let o = nli(&["diff", s(&f4d), s(&egn), "--threshold", "2", "--assert"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn diff_checks_hash_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let base = TINY.replace(r#"["4D", "GN", "EGN", "RP1MC", "SSFM"]"#, r#"["GN"]"#);
    let p1 = write_cfg(dir.path(), "one.toml", &base);
    let p2 = write_cfg(dir.path(), "two.toml", &base.replace("spacing_ghz = 50.0", "spacing_ghz = 60.0"));
    let p3 = write_cfg(dir.path(), "three.toml", &base.replace("seed = 7", "seed = 8"));
    for (p, o) in [(&p1, "o1"), (&p2, "o2"), (&p3, "o3")] {
        assert!(nli(&["run", s(p), "--out", s(&dir.path().join(o))]).status.success());
    }
    let f = |o: &str| dir.path().join(o).join("eta_GN_Gaussian.csv");
    assert_eq!(nli(&["diff", s(&f("o1")), s(&f("o3"))]).status.code(), Some(1));
    assert!(nli(&["diff", s(&f("o1")), s(&f("o3")), "--force"]).status.success());
    let o = nli(&["diff", s(&f("o1")), s(&f("o2")), "--force"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("grid mismatch"));
}

#[test]
fn seed_flag_changes_hash() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_cfg(dir.path(), "t.toml", &TINY.replace(r#"["4D", "GN", "EGN", "RP1MC", "SSFM"]"#, r#"["GN"]"#));
    let out = dir.path().join("o");
    assert!(nli(&["run", s(&p), "--out", s(&out), "--seed", "99"]).status.success());
    let text = std::fs::read_to_string(out.join("eta_GN_Gaussian.csv")).unwrap();
    assert!(text.starts_with("# config_hash=") && text.contains("seed=99 rng=ChaCha8"));
}
