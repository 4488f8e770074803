use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn raman_tda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_raman-tda"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_demo(dir: &Path) -> PathBuf {
    let out = raman_tda(&["demo", "--out", path_arg(dir), "--seed", "0"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    dir.join("manifest.json")
}

fn small_config(dir: &Path, manifest: &Path, grid: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        format!(
            "manifest = {:?}\nout = \"results\"\n[grid]\n{grid}\n",
            path_arg(manifest)
        ),
    )
    .unwrap();
    path
}

#[test]
fn validate_accepts_the_demo_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_demo(dir.path());
    let out = raman_tda(&["validate", path_arg(&manifest)]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["valid"], true);
    assert_eq!(report["patients"], 24);
    assert_eq!(report["samples"], 30);
}

#[test]
fn validate_reports_a_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = raman_tda(&["validate", path_arg(&dir.path().join("absent.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["valid"], false);
    assert!(report["errors"][0]
        .as_str()
        .unwrap()
        .contains("absent.json"));
}

#[test]
fn validate_names_mismatched_axes() {
    let dir = tempfile::tempdir().unwrap();
    let spectrum = |name: &str, offset: f64| {
        let mut csv = String::from("wavenumber,intensity\n");
        for i in 0..16 {
            csv.push_str(&format!("{},{}\n", 400.0 + offset + i as f64, i));
        }
        std::fs::write(dir.path().join(name), csv).unwrap();
    };
    spectrum("a.csv", 0.0);
    spectrum("b.csv", 0.25);
    let manifest = dir.path().join("manifest.json");
    std::fs::write(
        &manifest,
        r#"[{"patient_id":"P1","session_id":"S1","label":"AD","file":"a.csv"},
            {"patient_id":"P2","session_id":"S7","label":"noAD","file":"b.csv"}]"#,
    )
    .unwrap();
    let out = raman_tda(&["validate", path_arg(&manifest)]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("P1/S1") && text.contains("P2/S7"), "{text}");
}

#[test]
fn single_config_run_writes_one_result_line() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_demo(&dir.path().join("data"));
    let config = small_config(
        dir.path(),
        &manifest,
        "transforms = [\"raw\"]\nmethods = [\"betti_curve\"]\ncurve_resolutions = [25]\nclassifiers = [\"ridge\"]",
    );
    let out = raman_tda(&["run", "--config", path_arg(&config)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let results = dir.path().join("results");
    let jsonl = std::fs::read_to_string(results.join("results.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 1);
    let line: serde_json::Value = serde_json::from_str(jsonl.trim()).unwrap();
    assert_eq!(line["accuracy"], 1.0);
    let csv = std::fs::read_to_string(results.join("report.csv")).unwrap();
    assert!(csv.starts_with("Method,Accuracy,Vectorization and Classifier\n"));
    assert!(csv.contains("H0,1.000,BC (n=25) and Ridge"));
    assert!(results.join("ranking.csv").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Vectorization and Classifier"));
}

#[test]
fn demo_run_evaluates_the_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = raman_tda(&["run", "--demo", "--out", path_arg(dir.path())]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let jsonl = std::fs::read_to_string(dir.path().join("results.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 252);
}

#[test]
fn worker_count_leaves_outputs_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_demo(&dir.path().join("data"));
    let config = small_config(
        dir.path(),
        &manifest,
        "transforms = [\"raw\", \"autocorrelation\"]\nmethods = [\"landscape\", \"betti_curve\"]\ncurve_resolutions = [25]",
    );
    let run = |workers: &str, out: &Path| {
        let o = raman_tda(&[
            "run",
            "--config",
            path_arg(&config),
            "--workers",
            workers,
            "--out",
            path_arg(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let (a, b) = (dir.path().join("w1"), dir.path().join("w8"));
    run("1", &a);
    run("8", &b);
    for file in ["results.jsonl", "report.csv", "ranking.csv", "report.txt"] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn export_features_writes_expected_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_demo(&dir.path().join("data"));
    let out_dir = dir.path().join("features");
    let export = |extra: &[&str]| {
        let mut args = vec![
            "export-features",
            "--manifest",
            path_arg(&manifest),
            "--sample",
            "P01/S1",
            "--out",
            path_arg(&out_dir),
        ];
        args.extend_from_slice(extra);
        let o = raman_tda(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };

    export(&["--method", "PI", "--sigma", "0.1", "--resolution", "5"]);
    let pi = std::fs::read_to_string(out_dir.join("P01_S1_raw_persistence_image.csv")).unwrap();
    assert_eq!(pi.lines().count(), 5);
    assert!(pi.lines().all(|l| l.split(',').count() == 5));

    export(&[
        "--method",
        "betti_curve",
        "--resolution",
        "25",
        "--transform",
        "fourier",
    ]);
    let bc = std::fs::read_to_string(out_dir.join("P01_S1_fourier_betti_curve.csv")).unwrap();
    let rows: Vec<&str> = bc.lines().skip(1).collect();
    assert_eq!(bc.lines().next(), Some("t,value"));
    assert_eq!(rows.len(), 25);

    let diagram = std::fs::read_to_string(out_dir.join("P01_S1_raw_diagram.csv")).unwrap();
    assert!(diagram.starts_with("birth,death,essential\n"));
}

#[test]
fn export_of_unknown_sample_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_demo(&dir.path().join("data"));
    let out = raman_tda(&[
        "export-features",
        "--manifest",
        path_arg(&manifest),
        "--sample",
        "P99/S1",
        "--method",
        "PL",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("P99/S1"));
}

#[test]
fn run_without_a_manifest_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = raman_tda(&["run", "--out", path_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}
