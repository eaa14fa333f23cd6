use std::fs;
use std::process::Command;

fn superlind() -> Command {
    Command::new(env!("CARGO_BIN_EXE_superlind"))
}

#[test]
fn spectrum_at_zero_frequency() {
    let out = superlind().args(["spectrum", "--gamma0", "0.01", "--wc", "5", "--T", "0.5"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().find(|l| l.starts_with("0,")).expect("omega = 0 row");
    let gamma: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((gamma - 0.005).abs() < 1e-15);
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 102);
}

#[test]
fn sweep_writes_csv_and_dat_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    fs::write(&cfg, "[system]\ninv_v = 1, 2\nwindow = 10\n[bath]\nkind = dephasing\ngamma0 = 0.1\n[basis]\nmode = closed, superadiabatic\norder = 2\n").unwrap();
    let csv = dir.path().join("out.csv");
    let status = superlind()
        .args([
            "sweep",
            cfg.to_str().unwrap(),
            "--dat",
            "--order",
            "3",
            "--set",
            "bath.gamma0=0.03",
            "-o",
            csv.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.contains("# order = 3"));
    assert!(text.contains("# gamma0 = 0.03"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("1,closed"));
    assert!(rows[3].starts_with("2,superadiabatic"));
    assert!(dir.path().join("out.dat").exists());
}

#[test]
fn sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.cfg");
    fs::write(&cfg, "[system]\ninv_v = 1\nwindow = 10\n[bath]\nkind = ohmic\ngamma0 = 0.1\ntemperature = 0.5\n[solver]\nmethod = trajectories\ntrajectories = 30\nseed = 5\n").unwrap();
    let run = || superlind().args(["sweep", cfg.to_str().unwrap()]).output().unwrap().stdout;
    assert_eq!(run(), run());
}

#[test]
fn fig1_writes_three_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("f.cfg");
    fs::write(&cfg, "[system]\ninv_v = 2\n[output]\nmax_rows = 50\n").unwrap();
    let prefix = dir.path().join("paths");
    let status = superlind().args(["fig1", cfg.to_str().unwrap(), "-o", prefix.to_str().unwrap()]).status().unwrap();
    assert!(status.success());
    for label in ["instantaneous", "superadiabatic", "evolved"] {
        let text = fs::read_to_string(dir.path().join(format!("paths_{label}.csv"))).unwrap();
        assert!(text.contains("t,x,y,z"));
    }
}

#[test]
fn exit_codes_follow_error_category() {
    let dir = tempfile::tempdir().unwrap();
    let missing = superlind().args(["sweep", dir.path().join("none.cfg").to_str().unwrap()]).status().unwrap();
    assert_eq!(missing.code(), Some(2));

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "[system]\ninv_v = -1\nwindow = 2\n[basis]\norder = 40\n").unwrap();
    let out = superlind().args(["sweep", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    for key in ["system.inv_v", "system.window", "basis.order"] {
        assert!(err.contains(key), "{err}");
    }

    let domain = superlind().args(["spectrum", "--gamma0", "-1", "--wc", "5", "--T", "0.5"]).status().unwrap();
    assert_eq!(domain.code(), Some(4));
}
