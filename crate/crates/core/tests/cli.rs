use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn diffagg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffagg"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn derived(manifest: &str, key: &str) -> Option<String> {
    manifest
        .split("[derived]")
        .nth(1)?
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
}

#[test]
fn bound_mode_records_both_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_cfg(
        dir.path(),
        "b.cfg",
        "mode = bound\nb = 1\nepsilon = 1.5\nhorizon = 7\nthreshold = 0.3\n",
    );
    let r = diffagg(&["run", &cfg, "--output", out.to_str().unwrap()]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let manifest = fs::read_to_string(out.join("manifest.cfg")).unwrap();
    assert_eq!(
        derived(&manifest, "min_particle_count").as_deref(),
        Some("511")
    );
    assert_eq!(
        derived(&manifest, "reference_min_particle_count").as_deref(),
        Some("555")
    );
}

#[test]
fn weights_not_summing_to_one_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "bad.cfg",
        "mode = macro\n[component]\nalpha = 0.5\nbeta = 1\nT = 2\nx0 = -8\n\
         [component]\nalpha = 0.4\nbeta = 1\nT = 2\nx0 = 8\n",
    );
    let r = diffagg(&["run", &cfg]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("sum(alpha) = 1"));
}

#[test]
fn parse_errors_name_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "p.cfg", "mode = macro\n\neta = fast\n");
    let r = diffagg(&["run", &cfg]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("p.cfg:3"), "{err}");
    assert!(err.contains("eta"), "{err}");

    let r = diffagg(&["run", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn invariant_violation_names_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", "mode = macro\nsafety = 2\n");
    let r = diffagg(&["run", &cfg]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("safety in (0, 1]"));
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    v.sort();
    v
}

fn assert_same_csvs(a: &Path, b: &Path) {
    let names = csv_files(a);
    assert!(!names.is_empty());
    assert_eq!(names, csv_files(b));
    for n in names {
        assert_eq!(
            fs::read(a.join(&n)).unwrap(),
            fs::read(b.join(&n)).unwrap(),
            "{n}"
        );
    }
}

#[test]
fn manifest_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scenarios = [
        "mode = particle\npreset = initial2\neta = 1.2\nN = 30\nM = 6\ndt = 0.05\nhorizon = 1\ndx = 0.25\ntrajectory_replicas = 2\nseed = 3\n",
        "mode = macro\npreset = initial1\neta = 1\nhorizon = 1\ndx = 0.25\nsnapshots = 4\n",
        "mode = compare\npreset = initial1\neta = 1.5\nN = 10\nM = 4\nparticle_counts = 10, 20\ndt = 0.1\nhorizon = 1\ndx = 0.5\n",
        "mode = eoc\npreset = initial2\nlevels = 1, 2\nreference_level = 3\nhorizon = 1\n",
    ];
    for (k, text) in scenarios.iter().enumerate() {
        let cfg = write_cfg(dir.path(), &format!("s{k}.cfg"), text);
        let first = dir.path().join(format!("first{k}"));
        let r = diffagg(&[
            "run",
            &cfg,
            "--output",
            first.to_str().unwrap(),
            "--workers",
            "2",
        ]);
        assert_eq!(
            r.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&r.stderr)
        );
        let manifest = first.join("manifest.cfg");
        let second = dir.path().join(format!("second{k}"));
        let r = diffagg(&[
            "run",
            manifest.to_str().unwrap(),
            "--output",
            second.to_str().unwrap(),
            "--workers",
            "1",
        ]);
        assert_eq!(
            r.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&r.stderr)
        );
        assert_same_csvs(&first, &second);
    }
}

#[test]
fn seed_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let text = "mode = particle\nN = 20\nM = 2\ndt = 0.1\nhorizon = 0.5\ndx = 0.5\nseed = 1\n";
    let cfg = write_cfg(dir.path(), "s.cfg", text);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    diffagg(&["run", &cfg, "--output", a.to_str().unwrap(), "--seed", "2"]);
    diffagg(&["run", &cfg, "--output", b.to_str().unwrap()]);
    let ma = fs::read_to_string(a.join("manifest.cfg")).unwrap();
    assert_eq!(derived(&ma, "seed").as_deref(), Some("2"));
    assert_ne!(
        fs::read(a.join("density.csv")).unwrap(),
        fs::read(b.join("density.csv")).unwrap()
    );
}

#[test]
fn degenerate_coefficients_run() {
    let dir = tempfile::tempdir().unwrap();
    // pure aggregation (a = 0) and pure diffusion (b = 0) both step
    for (k, text) in ["eta = 0\n", "b = 0\neta = 1\n"].iter().enumerate() {
        let cfg = write_cfg(
            dir.path(),
            &format!("d{k}.cfg"),
            &format!("mode = macro\nhorizon = 0.5\ndx = 0.5\n{text}"),
        );
        let out = dir.path().join(format!("d{k}"));
        let r = diffagg(&["run", &cfg, "--output", out.to_str().unwrap()]);
        assert_eq!(
            r.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&r.stderr)
        );
    }
    // with neither term the horizon caps the step and u stays put
    let cfg = write_cfg(
        dir.path(),
        "d.cfg",
        "mode = macro\nhorizon = 0.5\nb = 0\neta = 0\n",
    );
    let out = dir.path().join("none");
    let r = diffagg(&["run", &cfg, "--output", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    let snaps = fs::read_to_string(out.join("snapshots.csv")).unwrap();
    let rows: Vec<&str> = snaps.lines().skip(2).collect();
    let first: Vec<&str> = rows
        .iter()
        .filter(|r| r.starts_with("0.0,"))
        .map(|r| r.split(',').nth(2).unwrap())
        .collect();
    let last: Vec<&str> = rows
        .iter()
        .filter(|r| r.starts_with("0.5,"))
        .map(|r| r.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(first, last);
}

#[test]
fn csv_header_is_versioned() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "m.cfg",
        "mode = macro\nhorizon = 0.5\ndx = 0.5\n",
    );
    let out = dir.path().join("m");
    diffagg(&["run", &cfg, "--output", out.to_str().unwrap()]);
    let s = fs::read_to_string(out.join("snapshots.csv")).unwrap();
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("# diffagg-csv v1 snapshots"));
    assert_eq!(lines.next(), Some("time,x_center,u"));
}
