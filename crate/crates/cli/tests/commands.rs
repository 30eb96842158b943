//! End-to-end runs of the `fracwave` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fracwave(dir: &Path, line: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracwave"))
        .current_dir(dir)
        .args(line.split_whitespace())
        .env_remove("FRACWAVE_JOBS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut all = vec![r.headers().unwrap().iter().map(str::to_string).collect()];
    all.extend(r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()));
    all
}

const LONG_WAVE: &str = "solve --alpha 2 --lambda 5 --half-period 8 --n 128 --out wave.json";

#[test]
fn solve_then_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = fracwave(d, LONG_WAVE);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let p = read_json(&d.join("wave.json"));
    for key in ["alpha", "lambda", "a", "T", "N", "omega_energy", "omega_mass", "residual_l2", "energy", "phi_csv_path"] {
        assert!(p.get(key).is_some(), "missing {key}");
    }
    assert_eq!(p["N"], 128);
    assert!(p["residual_l2"].as_f64().unwrap() < 1e-10);
    let phi = rows(&d.join(p["phi_csv_path"].as_str().unwrap()));
    assert_eq!(phi[0], ["x", "value"]);
    assert_eq!(phi.len(), 129);
    // 17 significant digits: one leading digit and 16 decimals.
    let mantissa = phi[1][1].split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').len(), 18);

    let out = fracwave(d, "spectrum --profile wave.json --n-eigs 4 --out spec.json");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = read_json(&d.join("spec.json"));
    let reports = s["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert_eq!(r["n_neg_plus"], 1);
        assert_eq!(r["verdict"], "SpectrallyStable");
        assert!(r["vk_index"].as_f64().unwrap() < 0.0);
    }
    let lplus = rows(&d.join(reports[0]["eigenvalues_lplus_csv"].as_str().unwrap()));
    assert_eq!(lplus.len(), 5);
    assert!(lplus[1][1].parse::<f64>().unwrap() < 0.0);
    let dynamical = rows(&d.join(reports[1]["dynamical_eigenvalues_csv"].as_str().unwrap()));
    assert_eq!(dynamical[0], ["index", "re", "im"]);
    assert_eq!(dynamical.len(), 2 * 128 + 1);
}

#[test]
fn sweep_writes_csv_and_gnuplot_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = fracwave(d, "sweep --alpha 2 --lambda-min 1 --lambda-max 3 --count 3 --n 64 --out curve.csv");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let t = rows(&d.join("curve.csv"));
    assert_eq!(
        t[0],
        ["lambda", "m", "omega_energy", "omega_mass", "residual", "n_neg_plus", "vk_index", "seed_disagreement"]
    );
    assert_eq!(t.len(), 4);
    let dat = std::fs::read_to_string(d.join("curve.dat")).unwrap();
    assert_eq!(dat.lines().count(), 4);
    assert!(dat.starts_with('#'));
}

#[test]
fn evolve_is_reproducible_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&fracwave(d, LONG_WAVE)), 0);
    let line = "evolve --profile wave.json --equation nls --delta 0.01 --t-final 0.5 --record-every 50 --out run.csv";
    let out = fracwave(d, line);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(d.join("run.csv")).unwrap();
    let t = rows(&d.join("run.csv"));
    assert_eq!(t[0], ["t", "P", "H", "M_re", "M_im", "distance", "shift", "phase"]);
    assert_eq!(t.len(), 12);
    let dist: f64 = t[1][5].parse().unwrap();
    assert!(dist > 0.0 && dist <= 0.01 + 1e-12);

    assert_eq!(code(&fracwave(d, line)), 0);
    assert_eq!(first, std::fs::read(d.join("run.csv")).unwrap());
    let stray: Vec<_> = std::fs::read_dir(d)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains(".tmp"))
        .collect();
    assert!(stray.is_empty());
}

#[test]
fn dealiasing_matters_for_conservation() {
    // On the unit cell the α = 2 wave excites modes up to the grid limit, so
    // switching the 2/3 rule off must visibly worsen the Hamiltonian drift.
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&fracwave(d, "solve --alpha 2 --lambda 5 --n 256 --out w.json")), 0);
    let drift = |dealias: bool| {
        let line = format!(
            "evolve --profile w.json --equation kdv --delta 0.01 --t-final 5 --dealias {dealias} --out r.csv"
        );
        let out = fracwave(d, &line);
        assert_eq!(code(&out), 0);
        let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
        summary["drift_h"].as_f64().unwrap()
    };
    let (on, off) = (drift(true), drift(false));
    assert!(off > 3.0 * on, "with {on:e}, without {off:e}");
}

#[test]
fn stability_batch_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&fracwave(d, LONG_WAVE)), 0);
    std::fs::write(d.join("batch.json"), r#"{"deltas": [0.01], "seeds": 2, "t_final": 1}"#).unwrap();
    let out = fracwave(d, "stability --profile wave.json --batch batch.json --out report.json");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&d.join("report.json"));
    assert_eq!(r["runs"].as_array().unwrap().len(), 4);
    assert_eq!(r["within_ten_delta"], true);

    std::fs::write(d.join("batch.json"), r#"{"deltas": [0.01], "delta": 1}"#).unwrap();
    let out = fracwave(d, "stability --profile wave.json --batch batch.json --out report.json");
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&fracwave(d, "solve --alpha 2 --out p.json")), 2);
    assert_eq!(code(&fracwave(d, "solve --alpha 2 --lambda 5 --bogus 1 --out p.json")), 2);
    assert_eq!(code(&fracwave(d, "solve --alpha 3 --lambda 5 --out p.json")), 2);
    assert_eq!(code(&fracwave(d, "spectrum --profile missing.json --out s.json")), 2);
    assert_eq!(code(&fracwave(d, "--help")), 0);
    // One descent iteration from a bump cannot reach the residual target.
    let out = fracwave(d, "solve --alpha 2 --lambda 5 --half-period 8 --n 64 --max-iters 1 --seeds 1 --out p.json");
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!d.join("p.json").exists());
}

#[test]
fn verify_fast_reports_every_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = fracwave(d, "verify --suite fast --out verify.json");
    let r = read_json(&d.join("verify.json"));
    let criteria = r["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 11);
    for c in criteria {
        for key in ["id", "measured", "bound", "status"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
    assert!(criteria.iter().all(|c| c["status"] != "Error"));
    let all_pass = criteria.iter().all(|c| c["status"] == "Pass");
    assert_eq!(r["passed"], all_pass);
    assert_eq!(code(&out), if all_pass { 0 } else { 1 });
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().filter(|l| l.contains("criterion")).count(), 11);
}
