use std::path::{Path, PathBuf};
use std::process::Command;

use num_complex::Complex64;
use pclstm::reference::{complex_relative_error, CASE_TOLERANCE, IMPEDANCE_CASES};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pclstm"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_geometry(dir: &Path, name: &str, spacings_wavelengths: &[f64]) -> PathBuf {
    let lam = pclstm::geometry::wavelength(3e9).unwrap();
    let d = pclstm::geometry::DipoleSpec::half_wave(3e9, 0.002, 4).unwrap();
    let doc = serde_json::json!({
        "schema_version": 1,
        "length_m": d.length_m,
        "radius_m": d.radius_m,
        "segments": 4,
        "spacings_m": spacings_wavelengths.iter().map(|s| s * lam).collect::<Vec<_>>(),
        "frequency_hz": 3e9,
    });
    let path = dir.join(name);
    std::fs::write(&path, doc.to_string()).unwrap();
    path
}

/// Small networks and datasets so the full pipeline runs in seconds.
fn tiny_config(dir: &Path) -> PathBuf {
    let doc = serde_json::json!({
        "seed": 5,
        "data": {"segments": 4, "two_port_samples": 12, "synthesis_samples": 6, "synthesis_sizes": [4]},
        "pann": {"segments": 4, "hidden": [8], "epochs": 20},
        "two_port": {"hidden": 6, "lstm_layers": 1, "epochs": 3, "batch_size": 4,
                      "pann": {"segments": 4, "hidden": [8], "epochs": 20}},
        "synthesis": {"hidden": 4, "lstm_layers": 1, "epochs": 2, "batch_size": 2},
    });
    let path = dir.join("tiny.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    path
}

#[test]
fn malformed_geometry_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("bad.json");
    std::fs::write(&g, "{ not json").unwrap();
    let out = dir.path().join("out");
    let (code, err) = run(&["--out", p(&out), "mom-solve", "--geometry", p(&g)]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("geometry"));
    let m = read_json(out.join("manifest.json"));
    assert_eq!(m["status"], "failed");
}

#[test]
fn single_element_solve_gives_scalar_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_geometry(dir.path(), "one.json", &[]);
    let out = dir.path().join("out");
    let (code, err) = run(&["--out", p(&out), "mom-solve", "--geometry", p(&g)]);
    assert_eq!(code, 0, "{err}");
    let z = read_json(out.join("zport.json"));
    assert_eq!(z["ports"], 1);
    let s_csv = std::fs::read_to_string(out.join("s.csv")).unwrap();
    assert_eq!(s_csv.lines().count(), 2);
    let m = read_json(out.join("manifest.json"));
    assert_eq!(m["config"]["seed"], 42);
    assert_eq!(m["status"], "ok");
    for name in ["zport.csv", "zport.json", "s.csv", "s.json"] {
        assert!(
            m["outputs"][name].is_string(),
            "{name} missing from manifest"
        );
    }
}

#[test]
fn case1_geometry_matches_reference_z11() {
    let dir = tempfile::tempdir().unwrap();
    let case = IMPEDANCE_CASES[0];
    let g = case.geometry(16).unwrap();
    let path = dir.path().join("case1.json");
    std::fs::write(&path, serde_json::to_string(&g).unwrap()).unwrap();
    let out = dir.path().join("out");
    let (code, err) = run(&["--out", p(&out), "mom-solve", "--geometry", p(&path)]);
    assert_eq!(code, 0, "{err}");
    let z = read_json(out.join("zport.json"));
    let z11 = &z["entries"][0][0];
    let z11 = Complex64::new(z11[0].as_f64().unwrap(), z11[1].as_f64().unwrap());
    assert!(complex_relative_error(z11, case.z11) <= CASE_TOLERANCE);
}

#[test]
fn unknown_table_and_command_exit_2() {
    assert_eq!(run(&["reproduce", "table7"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn help_documents_csv_columns() {
    let out = bin().arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for header in [
        "p,q,re,im",
        "epoch,L_r,L_i,w_r,w_i,L_total",
        "index,re_or_im,value",
        "item,computed,reference,metric,value,limit,verdict",
    ] {
        assert!(text.contains(header), "{header} not in --help");
    }
}

#[test]
fn missing_inputs_are_user_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let (code, err) = run(&["--out", p(&out), "train", "twoport"]);
    assert_eq!(code, 2);
    assert!(err.contains("missing training data"));
    let missing = dir.path().join("nope.json");
    let (code, _) = run(&[
        "--out",
        p(&out),
        "benchmark",
        "--bundle",
        p(&missing),
        "--model",
        p(&missing),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn zero_epoch_pann_writes_initial_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let (code, err) = run(&[
        "--out",
        p(&out),
        "train",
        "pann",
        "--epochs",
        "0",
        "--segments",
        "4",
    ]);
    assert_eq!(code, 0, "{err}");
    let ck = read_json(out.join("pann.json"));
    assert_eq!(ck["epoch"], 0);
    let hist = std::fs::read_to_string(out.join("loss_history.csv")).unwrap();
    assert_eq!(hist, "epoch,L_r,L_i,w_r,w_i,L_total\n");
}

#[test]
fn same_seed_gives_identical_history_and_manifest_rerun_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = ["train", "pann", "--epochs", "15", "--segments", "4"];
    for out in [&a, &b] {
        let mut full = vec!["--out", p(out)];
        full.extend(args);
        assert_eq!(run(&full).0, 0);
    }
    let ha = std::fs::read(a.join("loss_history.csv")).unwrap();
    assert_eq!(ha, std::fs::read(b.join("loss_history.csv")).unwrap());

    let c = dir.path().join("c");
    let manifest = a.join("manifest.json");
    let (code, err) = run(&["--out", p(&c), "--config", p(&manifest), "train", "pann"]);
    assert_eq!(code, 0, "{err}");
    let ma = read_json(manifest);
    let mc = read_json(c.join("manifest.json"));
    assert_eq!(ma["outputs"], mc["outputs"]);
    assert_eq!(ma["config"], mc["config"]);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("out");
    let (code, err) = run(&[
        "--out",
        p(&out),
        "--config",
        p(&cfg),
        "--seed",
        "9",
        "train",
        "pann",
        "--epochs",
        "3",
    ]);
    assert_eq!(code, 0, "{err}");
    let m = read_json(out.join("manifest.json"));
    assert_eq!(m["config"]["seed"], 9);
    assert_eq!(m["config"]["pann"]["seed"], 9);
    assert_eq!(m["config"]["pann"]["epochs"], 3);
    assert_eq!(m["config"]["pann"]["hidden"], serde_json::json!([8]));
}

#[test]
fn sweep_writes_one_row_per_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_geometry(dir.path(), "two.json", &[0.25]);
    let out = dir.path().join("out");
    let (code, err) = run(&[
        "--out",
        p(&out),
        "sweep",
        "--geometry",
        p(&g),
        "--f-start",
        "2.8e9",
        "--f-stop",
        "3.2e9",
        "--points",
        "5",
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("f_hz,s11_re,s11_im,s21_re,s21_im"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn tiny_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let d = dir.path();
    let c = |name: &str| d.join(name);

    let (code, err) = run(&[
        "--out",
        p(&c("d2")),
        "--config",
        p(&cfg),
        "gen-data",
        "--elements",
        "2",
    ]);
    assert_eq!(code, 0, "{err}");
    let (code, err) = run(&[
        "--out",
        p(&c("tp")),
        "--config",
        p(&cfg),
        "train",
        "twoport",
        "--data",
        p(&c("d2").join("dataset.jsonl")),
    ]);
    assert_eq!(code, 0, "{err}");
    let bundle = c("tp").join("bundle.json");
    let holdout = std::fs::read_to_string(c("tp").join("holdout.csv")).unwrap();
    assert_eq!(holdout.lines().count(), 1 + 2);

    let g2 = write_geometry(d, "g2.json", &[0.3]);
    let (code, err) = run(&[
        "--out",
        p(&c("pr")),
        "predict",
        "--bundle",
        p(&bundle),
        "--geometry",
        p(&g2),
    ]);
    assert_eq!(code, 0, "{err}");
    let pred = read_json(c("pr").join("prediction.json"));
    assert_eq!(
        pred["z_port"]["entries"][0][1],
        pred["z_port"]["entries"][1][0]
    );
    assert_eq!(
        pred["provenance"]["bundle_hash"].as_str().unwrap().len(),
        64
    );

    let (code, err) = run(&[
        "--out",
        p(&c("sy")),
        "--config",
        p(&cfg),
        "train",
        "synthesis",
        "--bundle",
        p(&bundle),
        "--generate",
    ]);
    assert_eq!(code, 0, "{err}");
    let model = c("sy").join("synthesis_model.json");

    let g4 = write_geometry(d, "g4.json", &[0.3, 0.4, 0.25]);
    let (code, err) = run(&[
        "--out",
        p(&c("sz")),
        "synthesize",
        "--bundle",
        p(&bundle),
        "--model",
        p(&model),
        "--geometry",
        p(&g4),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(c("sz").join("synthesis.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 20);

    let bad = write_geometry(d, "bad4.json", &[0.3, 0.2, 0.25]);
    let (code, err) = run(&[
        "--out",
        p(&c("sb")),
        "synthesize",
        "--bundle",
        p(&bundle),
        "--geometry",
        p(&bad),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("(1, 3)") || err.contains("elements"), "{err}");

    let (code, err) = run(&[
        "--out",
        p(&c("bm")),
        "--config",
        p(&cfg),
        "benchmark",
        "--bundle",
        p(&bundle),
        "--model",
        p(&model),
        "--repeats",
        "1",
    ]);
    assert_eq!(code, 0, "{err}");
    let report = read_json(c("bm").join("benchmark.json"));
    let sizes = report["sizes"].as_array().unwrap();
    let elements: Vec<u64> = sizes
        .iter()
        .map(|s| s["elements"].as_u64().unwrap())
        .collect();
    assert_eq!(elements, vec![2, 10, 30]);
    for s in sizes {
        let mom = s["mom_solve_seconds"].as_f64().unwrap();
        let inf = s["inference_seconds"].as_f64().unwrap();
        let ratio = s["ratio"].as_f64().unwrap();
        let expected = format!("{:.2e}", mom / inf).parse::<f64>().unwrap();
        assert!(
            (ratio - expected).abs() <= 1e-12 * expected.abs(),
            "{ratio} vs {expected}"
        );
    }
    let m = read_json(c("bm").join("manifest.json"));
    assert_eq!(m["volatile"], serde_json::json!(["benchmark.json"]));
}
