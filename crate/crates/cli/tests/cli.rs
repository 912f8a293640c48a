use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn resopack(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resopack"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

fn catalog_file(dir: &Path) -> std::path::PathBuf {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("catalog-"))
        .expect("catalog written")
}

#[test]
fn unknown_preset_is_a_usage_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let r = resopack(&["poles", "--preset", "zz"], &out);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("unknown preset"));
    assert!(!out.exists());
}

#[test]
fn bad_flags_and_missing_system_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(resopack(&["poles", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(resopack(&["poles"], dir.path()).status.code(), Some(1));
    assert_eq!(resopack(&["validate", "--preset", "db", "--seed", "x"], dir.path()).status.code(), Some(1));
}

#[test]
fn double_barrier_poles_table() {
    let dir = tempfile::tempdir().unwrap();
    let r = resopack(&["poles", "--preset", "db"], dir.path());
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let rows = data_rows(&fs::read_to_string(dir.path().join("poles-db.csv")).unwrap());
    assert_eq!(rows.len(), 1000);
    let (e1, g1) = (rows[0][3], rows[0][4]);
    assert!((e1 - 0.0800).abs() < 1e-3, "E1 = {e1}");
    assert!((g1 - 1.03e-3).abs() < 0.02e-3, "Gamma1 = {g1}");
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert_eq!(stdout.lines().filter(|l| l.trim_start().starts_with(char::is_numeric)).count(), 11);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        assert!(resopack(&["poles", "--preset", "sb"], dir).status.success());
        assert!(resopack(&["spectrum", "--preset", "sb", "--poles", "10,100"], dir).status.success());
    }
    for name in ["poles-sb.csv", "spectrum-sb.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    assert_eq!(fs::read(catalog_file(a.path())).unwrap(), fs::read(catalog_file(b.path())).unwrap());
}

#[test]
fn catalog_cache_is_reused_and_rebuilt_when_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let first = resopack(&["poles", "--preset", "sb"], dir.path());
    assert!(String::from_utf8_lossy(&first.stderr).contains("catalog built"));
    let cat = catalog_file(dir.path());
    let original = fs::read(&cat).unwrap();

    let second = resopack(&["spectrum", "--preset", "sb"], dir.path());
    assert!(String::from_utf8_lossy(&second.stderr).contains("catalog reused"));

    let other = resopack(&["poles", "--preset", "sb", "--seed", "7"], dir.path());
    assert!(String::from_utf8_lossy(&other.stderr).contains("catalog built"));

    fs::write(&cat, "garbage").unwrap();
    let third = resopack(&["poles", "--preset", "sb"], dir.path());
    let err = String::from_utf8_lossy(&third.stderr);
    assert!(third.status.success());
    assert!(err.contains("unreadable catalog") && err.contains("catalog built"), "{err}");
    assert_eq!(fs::read(&cat).unwrap(), original);
}

#[test]
fn evolve_and_reconstruct_tables() {
    let dir = tempfile::tempdir().unwrap();
    let r = resopack(&["evolve", "--preset", "sb", "--samples", "12", "--tmax", "2"], dir.path());
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let rows = data_rows(&fs::read_to_string(dir.path().join("evolve-sb.csv")).unwrap());
    assert_eq!(rows.len(), 12);
    assert!((rows[11][1] - 2.0).abs() < 1e-12);
    assert!(rows.iter().all(|r| r.len() == 5 && r[2] >= 0.0 && r[3] >= 0.0));

    let r = resopack(&["reconstruct", "--preset", "sb", "--t0", "2e3L,2e5L"], dir.path());
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let rows = data_rows(&fs::read_to_string(dir.path().join("reconstruct-sb.csv")).unwrap());
    assert_eq!(rows.len(), 501);
    let worst = rows.iter().map(|r| (r[4] - r[2]).abs()).fold(0.0, f64::max);
    assert!(worst < 2e-2, "{worst}");

    assert_eq!(resopack(&["evolve", "--preset", "sb", "--xd", "0.5L"], dir.path()).status.code(), Some(1));
}

#[test]
fn custom_profile_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("triple.toml");
    fs::write(
        &cfg,
        "name = \"step\"\nlayers = [{ width = 3.0, height = 0.2 }, { width = 3.0, height = 0.1 }]\n[poles]\nn_seed = 200\n",
    )
    .unwrap();
    let r = Command::new(env!("CARGO_BIN_EXE_resopack"))
        .args(["poles", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(dir.path().join("poles-step.csv").exists());
    let v = Command::new(env!("CARGO_BIN_EXE_resopack"))
        .args(["validate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(v.status.code(), Some(1));
}

#[test]
fn tampered_catalog_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    assert!(resopack(&["poles", "--preset", "sb"], dir.path()).status.success());
    let cat = catalog_file(dir.path());
    let text = fs::read_to_string(&cat).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let first = lines.iter().position(|l| l.starts_with("1,")).unwrap();
    let mut cells: Vec<String> = lines[first].split(',').map(String::from).collect();
    let re: f64 = cells[1].parse().unwrap();
    cells[1] = format!("{:.16e}", re * 1.001);
    lines[first] = cells.join(",");
    fs::write(&cat, lines.join("\n") + "\n").unwrap();

    let r = resopack(&["validate", "--preset", "sb"], dir.path());
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(String::from_utf8_lossy(&r.stderr).contains("catalog reused"));
    assert_eq!(r.status.code(), Some(2), "{stdout}");
    assert!(stdout.lines().any(|l| l.starts_with("FAIL [1]")), "{stdout}");
    let report = fs::read_to_string(dir.path().join("validate-sb.csv")).unwrap();
    assert!(report.lines().any(|l| l.ends_with(",false")));
}
