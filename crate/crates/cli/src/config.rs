//! Run configuration: a JSON config file merged with command-line flags, both
//! validated against the key table of the chosen subcommand.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgAction, Command};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Solve,
    Spectrum,
    Sweep,
    Evolve,
    Stability,
    Verify,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::Solve,
        Subcommand::Spectrum,
        Subcommand::Sweep,
        Subcommand::Evolve,
        Subcommand::Stability,
        Subcommand::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Solve => "solve",
            Subcommand::Spectrum => "spectrum",
            Subcommand::Sweep => "sweep",
            Subcommand::Evolve => "evolve",
            Subcommand::Stability => "stability",
            Subcommand::Verify => "verify",
        }
    }

    fn about(self) -> &'static str {
        match self {
            Subcommand::Solve => "Compute a minimizing periodic wave and write it as JSON plus a CSV profile",
            Subcommand::Spectrum => "Spectral analysis of a stored profile (L+, L-, linearized operators)",
            Subcommand::Sweep => "Sweep the mass lambda and tabulate the energy curve",
            Subcommand::Evolve => "Evolve a perturbed wave and record conserved quantities and orbital distance",
            Subcommand::Stability => "Batch of perturbed-wave runs summarized in one JSON report",
            Subcommand::Verify => "Run the acceptance suite",
        }
    }

    fn keys(self) -> &'static [KeySpec] {
        match self {
            Subcommand::Solve => SOLVE,
            Subcommand::Spectrum => SPECTRUM,
            Subcommand::Sweep => SWEEP,
            Subcommand::Evolve => EVOLVE,
            Subcommand::Stability => STABILITY,
            Subcommand::Verify => VERIFY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Bool,
    Path,
    /// Output path; collected into [`RunConfig::output_paths`].
    Output,
    Choice(&'static [&'static str]),
    /// `all` or a positive integer.
    CountOrAll,
}

impl Kind {
    fn expected(self) -> String {
        match self {
            Kind::Float => "a number".into(),
            Kind::Int => "a non-negative integer".into(),
            Kind::Bool => "true or false".into(),
            Kind::Path | Kind::Output => "a path".into(),
            Kind::Choice(options) => format!("one of {}", options.join(", ")),
            Kind::CountOrAll => "`all` or a positive integer".into(),
        }
    }

    /// Parse a flag value.
    fn parse_flag(self, raw: &str) -> Option<Value> {
        match self {
            Kind::Float => raw.parse::<f64>().ok().filter(|v| v.is_finite()).map(Value::from),
            Kind::Int => raw.parse::<u64>().ok().map(Value::from),
            Kind::Bool => raw.parse::<bool>().ok().map(Value::from),
            Kind::Path | Kind::Output => (!raw.is_empty()).then(|| Value::from(raw)),
            Kind::Choice(options) => options.contains(&raw).then(|| Value::from(raw)),
            Kind::CountOrAll if raw == "all" => Some(Value::from(raw)),
            Kind::CountOrAll => raw.parse::<u64>().ok().filter(|&n| n > 0).map(Value::from),
        }
    }

    /// Check a value taken from a config file.
    fn check_value(self, v: &Value) -> Option<Value> {
        match (self, v) {
            (Kind::Float, Value::Number(n)) => n.as_f64().map(Value::from),
            (Kind::Int, Value::Number(n)) => n.as_u64().map(Value::from),
            (Kind::Bool, Value::Bool(_)) => Some(v.clone()),
            (Kind::Path | Kind::Output, Value::String(s)) if !s.is_empty() => Some(v.clone()),
            (Kind::Choice(options), Value::String(s)) if options.contains(&s.as_str()) => Some(v.clone()),
            (Kind::CountOrAll, Value::String(s)) => self.parse_flag(s),
            (Kind::CountOrAll, Value::Number(n)) => n.as_u64().filter(|&n| n > 0).map(Value::from),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: Kind,
    pub required: bool,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn req(name: &'static str, kind: Kind, help: &'static str) -> KeySpec {
    KeySpec { name, kind, required: true, default: None, help }
}

const fn opt(name: &'static str, kind: Kind, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec { name, kind, required: false, default: Some(default), help }
}

const fn maybe(name: &'static str, kind: Kind, help: &'static str) -> KeySpec {
    KeySpec { name, kind, required: false, default: None, help }
}

const SEED: KeySpec = opt("rng_seed", Kind::Int, "24301", "seed for every random draw");

const SOLVE: &[KeySpec] = &[
    req("alpha", Kind::Float, "dispersion order in (1/2, 2]"),
    req("lambda", Kind::Float, "mass constraint ∫φ² = λ"),
    opt("a", Kind::Float, "0", "constant a of the profile equation"),
    opt("half_period", Kind::Float, "1", "half period T of the cell [-T, T]"),
    opt("n", Kind::Int, "256", "number of grid points (even)"),
    opt("tol", Kind::Float, "1e-11", "Newton residual tolerance, relative to 1 + ‖φ‖"),
    opt("seeds", Kind::Int, "3", "number of starting points"),
    opt("max_iters", Kind::Int, "20000", "descent iteration cap per start"),
    SEED,
    req("out", Kind::Output, "profile JSON; the CSV profile is written next to it"),
];

const SPECTRUM: &[KeySpec] = &[
    req("profile", Kind::Path, "profile JSON written by `solve`"),
    opt("problem", Kind::Choice(&["kdv", "nls", "both"]), "both", "linearization(s) to analyse"),
    opt("n_eigs", Kind::CountOrAll, "all", "`all` or the number of lowest L± eigenvalues to write"),
    req("out", Kind::Output, "report JSON; eigenvalue CSVs are written next to it"),
];

const SWEEP: &[KeySpec] = &[
    req("alpha", Kind::Float, "dispersion order"),
    opt("a", Kind::Float, "0", "constant a of the profile equation"),
    req("lambda_min", Kind::Float, "smallest λ"),
    req("lambda_max", Kind::Float, "largest λ"),
    req("count", Kind::Int, "number of λ samples (at least 3)"),
    opt("half_period", Kind::Float, "1", "half period T"),
    opt("n", Kind::Int, "128", "number of grid points"),
    opt("seeds", Kind::Int, "3", "starting points per λ"),
    SEED,
    req("out", Kind::Output, "curve CSV; a gnuplot .dat file is written next to it"),
];

const EVOLVE: &[KeySpec] = &[
    req("profile", Kind::Path, "profile JSON written by `solve`"),
    req("equation", Kind::Choice(&["kdv", "nls"]), "equation to integrate"),
    opt("delta", Kind::Float, "0", "perturbation size δ (unit H^{α/2} direction)"),
    opt("perturbation", Kind::Choice(&["random", "eigen"]), "random", "random smooth field or the L+ ground state"),
    opt("t_final", Kind::Float, "10", "final time"),
    maybe("dt", Kind::Float, "time step (default: stability-limited, at most 1e-3)"),
    opt("record_every", Kind::Int, "100", "steps between recorded rows"),
    opt("dealias", Kind::Bool, "true", "2/3-rule dealiasing of the nonlinearity"),
    SEED,
    req("out", Kind::Output, "time-series CSV"),
];

const STABILITY: &[KeySpec] = &[
    req("profile", Kind::Path, "profile JSON written by `solve`"),
    req("batch", Kind::Path, "batch description JSON"),
    SEED,
    req("out", Kind::Output, "report JSON"),
];

const VERIFY: &[KeySpec] = &[
    opt("suite", Kind::Choice(&["fast", "full"]), "fast", "problem sizes of the acceptance suite"),
    maybe("out", Kind::Output, "JSON report"),
];

#[derive(Debug)]
pub enum ConfigError {
    /// Flag syntax errors, `--help` and `--version`, rendered by clap.
    Clap(clap::Error),
    UnknownKey { key: String, subcommand: &'static str },
    BadValue { key: String, expected: String, got: String },
    Missing { key: String },
    File { path: PathBuf, reason: String },
    Jobs(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Clap(e) => write!(f, "{e}"),
            ConfigError::UnknownKey { key, subcommand } => {
                write!(f, "unknown key `{key}` for `{subcommand}`")
            }
            ConfigError::BadValue { key, expected, got } => {
                write!(f, "key `{key}` expects {expected}, got {got}")
            }
            ConfigError::Missing { key } => write!(f, "missing required key `{key}`"),
            ConfigError::File { path, reason } => {
                write!(f, "cannot use config file {}: {reason}", path.display())
            }
            ConfigError::Jobs(msg) => write!(f, "invalid job count: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// A validated invocation: every required key is present with a value of the
/// right type, and defaults are filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub parameters: BTreeMap<String, Value>,
    pub output_paths: BTreeMap<String, PathBuf>,
    pub rng_seed: u64,
    /// Worker count from `--jobs` or `FRACWAVE_JOBS`; `None` means all cores.
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn f64(&self, key: &str) -> f64 {
        self.parameters[key].as_f64().expect("validated float")
    }

    pub fn opt_f64(&self, key: &str) -> Option<f64> {
        self.parameters.get(key).and_then(Value::as_f64)
    }

    pub fn usize(&self, key: &str) -> usize {
        self.parameters[key].as_u64().expect("validated integer") as usize
    }

    pub fn bool(&self, key: &str) -> bool {
        self.parameters[key].as_bool().expect("validated bool")
    }

    pub fn str(&self, key: &str) -> &str {
        self.parameters[key].as_str().expect("validated string")
    }

    pub fn path(&self, key: &str) -> PathBuf {
        PathBuf::from(self.str(key))
    }

    pub fn output(&self, key: &str) -> Option<&Path> {
        self.output_paths.get(key).map(PathBuf::as_path)
    }
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

pub fn command() -> Command {
    let mut cmd = Command::new("fracwave")
        .about("Periodic waves of the fractional KdV and NLS equations")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("jobs")
                .long("jobs")
                .short('j')
                .global(true)
                .value_name("N")
                .help("worker threads (default: FRACWAVE_JOBS, then all logical cores)"),
        );
    for sub in Subcommand::ALL {
        let mut sc = Command::new(sub.name()).about(sub.about()).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("JSON object of keys; flags override its values"),
        );
        for k in sub.keys() {
            let mut help = k.help.to_string();
            if let Some(d) = k.default {
                help.push_str(&format!(" [default: {d}]"));
            }
            if k.required {
                help.push_str(" [required]");
            }
            sc = sc.arg(
                Arg::new(k.name)
                    .long(flag_name(k.name))
                    .value_name("VALUE")
                    .action(ArgAction::Set)
                    .help(help),
            );
        }
        cmd = cmd.subcommand(sc);
    }
    cmd
}

fn describe(v: &Value) -> String {
    match v {
        Value::String(s) => format!("\"{s}\""),
        other => other.to_string(),
    }
}

fn check(spec: &KeySpec, v: &Value, flag: bool) -> Result<Value, ConfigError> {
    // Flags arrive as strings; file values must already have the right JSON type.
    let ok = match (v, flag) {
        (Value::String(s), true) => spec.kind.parse_flag(s),
        _ => spec.kind.check_value(v),
    };
    ok.ok_or_else(|| ConfigError::BadValue {
        key: spec.name.to_string(),
        expected: spec.kind.expected(),
        got: describe(v),
    })
}

fn read_config_file(path: &Path) -> Result<Map<String, Value>, ConfigError> {
    let err = |reason: String| ConfigError::File {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    match serde_json::from_str::<Value>(&text).map_err(|e| err(e.to_string()))? {
        Value::Object(m) => Ok(m),
        _ => Err(err("top level must be a JSON object".into())),
    }
}

fn parse_jobs(raw: &str, source: &str) -> Result<usize, ConfigError> {
    raw.parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError::Jobs(format!("{source} = {raw:?} is not a positive integer")))
}

/// Parse a full argument vector (program name first).
pub fn parse_config<I, S>(argv: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let matches = command().try_get_matches_from(argv).map_err(ConfigError::Clap)?;
    let (name, sub_m) = matches.subcommand().expect("subcommand is required");
    let sub = Subcommand::ALL
        .into_iter()
        .find(|s| s.name() == name)
        .expect("registered subcommand");
    let specs = sub.keys();

    let mut merged: BTreeMap<String, Value> = BTreeMap::new();
    if let Some(path) = sub_m.get_one::<String>("config") {
        for (key, v) in read_config_file(Path::new(path))? {
            let spec = specs
                .iter()
                .find(|s| s.name == key)
                .ok_or_else(|| ConfigError::UnknownKey {
                    key: key.clone(),
                    subcommand: sub.name(),
                })?;
            merged.insert(key, check(spec, &v, false)?);
        }
    }
    for spec in specs {
        if let Some(raw) = sub_m.get_one::<String>(spec.name) {
            merged.insert(spec.name.to_string(), check(spec, &Value::from(raw.as_str()), true)?);
        }
    }
    for spec in specs {
        if merged.contains_key(spec.name) {
            continue;
        }
        if let Some(d) = spec.default {
            merged.insert(spec.name.to_string(), check(spec, &Value::from(d), true)?);
        } else if spec.required {
            return Err(ConfigError::Missing {
                key: spec.name.to_string(),
            });
        }
    }

    let mut output_paths = BTreeMap::new();
    for spec in specs.iter().filter(|s| s.kind == Kind::Output) {
        if let Some(v) = merged.remove(spec.name) {
            output_paths.insert(spec.name.to_string(), PathBuf::from(v.as_str().expect("path")));
        }
    }
    let rng_seed = merged.get("rng_seed").and_then(Value::as_u64).unwrap_or(0);

    let jobs = match matches.get_one::<String>("jobs").or_else(|| sub_m.get_one::<String>("jobs")) {
        Some(raw) => Some(parse_jobs(raw, "--jobs")?),
        None => match std::env::var("FRACWAVE_JOBS") {
            Ok(raw) if !raw.is_empty() => Some(parse_jobs(&raw, "FRACWAVE_JOBS")?),
            _ => None,
        },
    };

    Ok(RunConfig {
        subcommand: sub,
        parameters: merged,
        output_paths,
        rng_seed,
        jobs,
    })
}
