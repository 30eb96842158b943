use std::path::PathBuf;

use fracwave_cli::{parse_config, ConfigError, Subcommand};
use serde_json::json;

fn args(line: &str) -> Vec<String> {
    std::iter::once("fracwave".to_string())
        .chain(line.split_whitespace().map(str::to_string))
        .collect()
}

#[test]
fn solve_flags_with_defaults() {
    let cfg = parse_config(args("solve --alpha 2 --lambda 5 --a 0 --n 256 --out p.json")).unwrap();
    assert_eq!(cfg.subcommand, Subcommand::Solve);
    assert_eq!(cfg.f64("alpha"), 2.0);
    assert_eq!(cfg.f64("lambda"), 5.0);
    assert_eq!(cfg.usize("n"), 256);
    assert_eq!(cfg.f64("half_period"), 1.0);
    assert_eq!(cfg.output("out"), Some(PathBuf::from("p.json").as_path()));
    assert!(!cfg.parameters.contains_key("out"));
    assert_eq!(cfg.rng_seed, 24301);
}

#[test]
fn missing_key_is_named() {
    let err = parse_config(args("solve --alpha 2 --out p.json")).unwrap_err();
    assert!(matches!(&err, ConfigError::Missing { key } if key == "lambda"));
    assert!(err.to_string().contains("lambda"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.json");
    std::fs::write(&file, json!({"alpha": 1.5, "lambda": 2, "n": 64, "rng_seed": 9}).to_string()).unwrap();
    let line = format!("solve --config {} --lambda 3 --out p.json", file.display());
    let cfg = parse_config(args(&line)).unwrap();
    assert_eq!(cfg.f64("alpha"), 1.5);
    assert_eq!(cfg.f64("lambda"), 3.0);
    assert_eq!(cfg.usize("n"), 64);
    assert_eq!(cfg.rng_seed, 9);
}

#[test]
fn unknown_and_mistyped_file_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.json");
    std::fs::write(&file, json!({"alpha": 2, "lambda": 5, "lamda": 5}).to_string()).unwrap();
    let err = parse_config(args(&format!("solve --config {} --out p.json", file.display()))).unwrap_err();
    assert!(matches!(&err, ConfigError::UnknownKey { key, .. } if key == "lamda"), "{err}");

    std::fs::write(&file, json!({"alpha": "2", "lambda": 5}).to_string()).unwrap();
    let err = parse_config(args(&format!("solve --config {} --out p.json", file.display()))).unwrap_err();
    assert!(matches!(&err, ConfigError::BadValue { key, .. } if key == "alpha"), "{err}");
    assert!(err.to_string().contains("a number"));

    std::fs::write(&file, "[1, 2]").unwrap();
    let err = parse_config(args(&format!("solve --config {} --out p.json", file.display()))).unwrap_err();
    assert!(matches!(err, ConfigError::File { .. }));
}

#[test]
fn flag_values_are_type_checked() {
    let err = parse_config(args("solve --alpha two --lambda 5 --out p.json")).unwrap_err();
    assert!(matches!(&err, ConfigError::BadValue { key, .. } if key == "alpha"));
    let err = parse_config(args("sweep --alpha 2 --lambda-min 1 --lambda-max 2 --count 3.5 --out c.csv")).unwrap_err();
    assert!(matches!(&err, ConfigError::BadValue { key, .. } if key == "count"));
    let err = parse_config(args("evolve --profile p.json --equation kdf --out r.csv")).unwrap_err();
    assert!(err.to_string().contains("one of kdv, nls"), "{err}");
    let err = parse_config(args("spectrum --profile p.json --n-eigs 0 --out s.json")).unwrap_err();
    assert!(matches!(&err, ConfigError::BadValue { key, .. } if key == "n_eigs"));
}

#[test]
fn unknown_flags_are_usage_errors() {
    let err = parse_config(args("solve --alpha 2 --lambda 5 --omega 1 --out p.json")).unwrap_err();
    assert!(matches!(err, ConfigError::Clap(_)));
    let err = parse_config(args("frobnicate")).unwrap_err();
    assert!(matches!(err, ConfigError::Clap(_)));
}

#[test]
fn optional_keys_without_default_stay_absent() {
    let cfg = parse_config(args("evolve --profile p.json --equation nls --out r.csv")).unwrap();
    assert_eq!(cfg.opt_f64("dt"), None);
    assert!(cfg.bool("dealias"));
    let cfg = parse_config(args("evolve --profile p.json --equation nls --dt 5e-4 --dealias false --out r.csv")).unwrap();
    assert_eq!(cfg.opt_f64("dt"), Some(5e-4));
    assert!(!cfg.bool("dealias"));
    let cfg = parse_config(args("verify")).unwrap();
    assert_eq!(cfg.str("suite"), "fast");
    assert_eq!(cfg.output("out"), None);
}

#[test]
fn jobs_flag() {
    let cfg = parse_config(args("verify --jobs 3")).unwrap();
    assert_eq!(cfg.jobs, Some(3));
    let cfg = parse_config(args("-j 2 verify")).unwrap();
    assert_eq!(cfg.jobs, Some(2));
    assert!(matches!(parse_config(args("verify --jobs 0")), Err(ConfigError::Jobs(_))));
}
