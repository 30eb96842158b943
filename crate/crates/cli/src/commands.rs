use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fracwave::acceptance::{run_suite, Status, Suite};
use fracwave::analysis::{analyze, Problem, SpectrumReport};
use fracwave::curves::{sweep, SweepConfig};
use fracwave::evolution::{
    default_dt, lowest_eigen_perturbation, random_complex_perturbation, random_real_perturbation, run_experiment,
    Equation, EvolutionConfig, State, StabilityRunReport,
};
use fracwave::io::{fmt_f64, read_real_csv_file, write_atomic, write_real_csv};
use fracwave::profile::{minimize_multistart, smoothness_check};
use fracwave::{Grid, SolverOptions, WaveProfile};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, Subcommand};
use crate::CliError;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.subcommand {
        Subcommand::Solve => solve(cfg),
        Subcommand::Spectrum => spectrum(cfg),
        Subcommand::Sweep => sweep_cmd(cfg),
        Subcommand::Evolve => evolve(cfg),
        Subcommand::Stability => stability(cfg),
        Subcommand::Verify => verify(cfg),
    }
}

/// JSON number, or `null` for non-finite values (which JSON cannot hold).
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(fracwave::Error::from)?;
    text.push('\n');
    Ok(write_atomic(path, text.as_bytes())?)
}

/// `dir/stem.suffix` next to `path`, e.g. `out/profile.json` → `out/profile.phi.csv`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.output("out").expect("required");
    let grid = Grid::new(cfg.usize("n"), cfg.f64("half_period"))?;
    let opts = SolverOptions {
        newton_tol: cfg.f64("tol"),
        seeds: cfg.usize("seeds"),
        max_iters: cfg.usize("max_iters"),
        rng_seed: cfg.rng_seed,
        ..SolverOptions::default()
    };
    let ms = minimize_multistart(cfg.f64("lambda"), cfg.f64("a"), cfg.f64("alpha"), &grid, &opts)?;
    let p = &ms.best;
    let csv_path = sibling(out, "phi.csv");
    let mut buf = Vec::new();
    write_real_csv(&p.phi, &mut buf)?;
    write_atomic(&csv_path, &buf)?;
    let report = json!({
        "alpha": p.alpha,
        "lambda": p.lambda,
        "a": p.a_param,
        "T": p.half_period(),
        "N": grid.n_points(),
        "omega": p.omega,
        "omega_energy": p.omega_energy(),
        "omega_mass": num(p.omega_mass()),
        "omega_consistency": num(p.omega_consistency),
        "residual_l2": p.residual_l2,
        "energy": p.energy,
        "seed_disagreement": num(ms.seed_disagreement),
        "smoothness_tail_ratio": smoothness_check(&p.phi).tail_ratio,
        "phi_csv_path": file_name(&csv_path),
    });
    write_json(out, &report)?;
    println!(
        "ω = {}  residual = {:.3e}  energy = {}",
        fmt_f64(p.omega),
        p.residual_l2,
        fmt_f64(p.energy)
    );
    Ok(())
}

#[derive(Deserialize)]
struct StoredProfile {
    alpha: f64,
    lambda: f64,
    a: f64,
    omega: f64,
    phi_csv_path: PathBuf,
}

/// Reload a profile written by `solve`. A relative CSV path is resolved
/// against the JSON file's directory.
pub fn load_profile(path: &Path) -> Result<WaveProfile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    let stored: StoredProfile = serde_json::from_str(&text).map_err(|e| CliError::input(path, e))?;
    let csv = if stored.phi_csv_path.is_absolute() {
        stored.phi_csv_path.clone()
    } else {
        path.parent().unwrap_or(Path::new(".")).join(&stored.phi_csv_path)
    };
    let phi = read_real_csv_file(&csv).map_err(|e| CliError::input(&csv, e))?;
    Ok(WaveProfile::new(phi, stored.omega, stored.a, stored.lambda, stored.alpha)?)
}

fn problem_name(p: Problem) -> &'static str {
    match p {
        Problem::KdV => "kdv",
        Problem::Nls => "nls",
    }
}

fn values_csv(header: &str, values: impl Iterator<Item = String>) -> String {
    let mut s = format!("{header}\n");
    for (i, v) in values.enumerate() {
        let _ = writeln!(s, "{i},{v}");
    }
    s
}

fn spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.output("out").expect("required");
    let profile = load_profile(&cfg.path("profile"))?;
    let problems: Vec<Problem> = match cfg.str("problem") {
        "kdv" => vec![Problem::KdV],
        "nls" => vec![Problem::Nls],
        _ => vec![Problem::KdV, Problem::Nls],
    };
    let reports = problems
        .par_iter()
        .map(|&p| analyze(&profile, p))
        .collect::<fracwave::Result<Vec<SpectrumReport>>>()?;
    let first = &reports[0];
    let limit = match cfg.parameters["n_eigs"].as_u64() {
        Some(k) => k as usize,
        None => usize::MAX,
    };

    let plus_path = sibling(out, "lplus.csv");
    let minus_path = sibling(out, "lminus.csv");
    let kernel_path = sibling(out, "kernel.csv");
    let eig_rows = |v: &[f64]| values_csv("index,eigenvalue", v.iter().take(limit).map(|x| fmt_f64(*x)));
    write_atomic(&plus_path, eig_rows(&first.eigenvalues_lplus).as_bytes())?;
    write_atomic(&minus_path, eig_rows(&first.eigenvalues_lminus).as_bytes())?;
    let mut kernel = String::from("x");
    for i in 0..first.kernel_vectors.len() {
        let _ = write!(kernel, ",v{i}");
    }
    kernel.push('\n');
    for (j, x) in profile.grid().nodes().iter().enumerate() {
        kernel.push_str(&fmt_f64(*x));
        for v in &first.kernel_vectors {
            kernel.push(',');
            kernel.push_str(&fmt_f64(v.values()[j]));
        }
        kernel.push('\n');
    }
    write_atomic(&kernel_path, kernel.as_bytes())?;

    let mut entries = Vec::new();
    for r in &reports {
        let name = problem_name(r.problem);
        let dyn_path = sibling(out, &format!("{name}.dynamical.csv"));
        let mut eigs = r.dynamical.eigenvalues.clone();
        eigs.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
        let mut text = String::from("index,re,im\n");
        for (i, z) in eigs.iter().enumerate() {
            let _ = writeln!(text, "{i},{},{}", fmt_f64(z.re), fmt_f64(z.im));
        }
        write_atomic(&dyn_path, text.as_bytes())?;
        entries.push(json!({
            "problem": name,
            "n_neg_plus": r.n_neg_plus,
            "n_neg_minus": r.n_neg_minus,
            "kernel_dim_plus": r.kernel_dim_plus,
            "kernel_dim_minus": r.kernel_dim_minus,
            "kernel_tol_plus": r.kernel_tol_plus,
            "kernel_tol_minus": r.kernel_tol_minus,
            "phi_kernel_angle": r.phi_kernel_angle,
            "vk_index": r.vk_index.map(num),
            "coercivity_kappa": num(r.coercivity_kappa),
            "lplus_translation_residual": r.lplus_translation_residual,
            "lminus_phi_residual": r.lminus_phi_residual,
            "translation_modes": r.translation_modes,
            "sturm": {"counts": r.sturm.counts, "violations": r.sturm.violations},
            "symmetry_zeros": r.dynamical.symmetry_zeros,
            "max_real_part": r.max_real_part,
            "verdict": r.verdict,
            "eigenvalues_lplus_csv": file_name(&plus_path),
            "eigenvalues_lminus_csv": file_name(&minus_path),
            "kernel_vectors_csv": file_name(&kernel_path),
            "dynamical_eigenvalues_csv": file_name(&dyn_path),
        }));
        println!(
            "{name}: n(L+) = {}  VK = {}  max Re = {:.3e}  verdict {:?}",
            r.n_neg_plus,
            r.vk_index.map_or("undefined".into(), fmt_f64),
            r.max_real_part,
            r.verdict
        );
    }
    write_json(
        out,
        &json!({
            "profile": cfg.str("profile"),
            "omega": profile.omega,
            "reports": entries,
        }),
    )
}

fn sweep_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.output("out").expect("required");
    let sc = SweepConfig {
        lambda_min: cfg.f64("lambda_min"),
        lambda_max: cfg.f64("lambda_max"),
        count: cfg.usize("count"),
        a_param: cfg.f64("a"),
        alpha: cfg.f64("alpha"),
        half_period: cfg.f64("half_period"),
        n_points: cfg.usize("n"),
        solver: SolverOptions {
            seeds: cfg.usize("seeds"),
            rng_seed: cfg.rng_seed,
            ..SolverOptions::default()
        },
    };
    let outcome = sweep(&sc)?;
    let samples = outcome.samples();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "lambda",
        "m",
        "omega_energy",
        "omega_mass",
        "residual",
        "n_neg_plus",
        "vk_index",
        "seed_disagreement",
    ])
    .map_err(fracwave::Error::from)?;
    let mut dat = String::from("# lambda m omega\n");
    for s in &samples {
        w.write_record([
            fmt_f64(s.lambda),
            fmt_f64(s.energy_m),
            fmt_f64(s.omega_energy),
            fmt_f64(s.omega_mass),
            fmt_f64(s.residual),
            s.n_neg_plus.to_string(),
            fmt_f64(s.vk_index),
            fmt_f64(s.seed_disagreement),
        ])
        .map_err(fracwave::Error::from)?;
        if s.converged() {
            let _ = writeln!(dat, "{} {} {}", fmt_f64(s.lambda), fmt_f64(s.energy_m), fmt_f64(s.omega));
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write_atomic(out, &bytes)?;
    write_atomic(&sibling(out, "dat"), dat.as_bytes())?;
    let failed: Vec<String> = samples
        .iter()
        .filter_map(|s| s.failure.as_ref().map(|f| format!("λ = {}: {f}", s.lambda)))
        .collect();
    println!("{} of {} samples converged", samples.len() - failed.len(), samples.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(failed.join("\n")))
    }
}

fn parse_equation(s: &str) -> Equation {
    match s {
        "nls" => Equation::FNls,
        _ => Equation::FKdV,
    }
}

fn perturbation(profile: &WaveProfile, equation: Equation, kind: &str, seed: u64) -> fracwave::Result<State> {
    Ok(match (kind, equation) {
        ("eigen", _) => State::Real(lowest_eigen_perturbation(profile)?),
        (_, Equation::FKdV) => State::Real(random_real_perturbation(profile, seed)?),
        (_, Equation::FNls) => State::Complex(random_complex_perturbation(profile, seed)?),
    })
}

fn evolution_config(profile: &WaveProfile, equation: Equation, dt: Option<f64>, t_final: f64, record_every: usize, dealias: bool) -> EvolutionConfig {
    let grid = profile.grid().clone();
    let dt = dt.unwrap_or_else(|| default_dt(&grid, equation, profile.phi.norm_sup()));
    EvolutionConfig {
        equation,
        alpha: profile.alpha,
        dt,
        t_final,
        grid,
        dealias,
        record_every,
    }
}

fn run_csv(r: &StabilityRunReport) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| CliError::from(fracwave::Error::from(e));
    w.write_record(["t", "P", "H", "M_re", "M_im", "distance", "shift", "phase"]).map_err(wrap)?;
    for i in 0..r.times.len() {
        let c = &r.conserved[i];
        w.write_record([
            fmt_f64(r.times[i]),
            fmt_f64(c.momentum_p),
            fmt_f64(c.hamiltonian_h),
            fmt_f64(c.mass_m.re),
            fmt_f64(c.mass_m.im),
            fmt_f64(r.orbital_distance[i]),
            fmt_f64(r.shifts[i]),
            fmt_f64(r.phases[i]),
        ])
        .map_err(wrap)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn evolve(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.output("out").expect("required");
    let profile = load_profile(&cfg.path("profile"))?;
    let eq = parse_equation(cfg.str("equation"));
    let ec = evolution_config(&profile, eq, cfg.opt_f64("dt"), cfg.f64("t_final"), cfg.usize("record_every"), cfg.bool("dealias"));
    let q = perturbation(&profile, eq, cfg.str("perturbation"), cfg.rng_seed)?;
    let r = run_experiment(&profile, &q, cfg.f64("delta"), &ec)?;
    write_atomic(out, &run_csv(&r)?)?;
    println!(
        "{}",
        json!({
            "dt": ec.dt,
            "verdict_ratio": r.verdict_ratio,
            "drift_p": r.drift_p,
            "drift_h": r.drift_h,
            "drift_m": r.drift_m,
            "blew_up": r.blew_up,
        })
    );
    match r.blew_up {
        Some(t) => Err(CliError::Numerical(format!("solution blew up at t = {t}"))),
        None => Ok(()),
    }
}

/// Batch description for `stability`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Batch {
    #[serde(default = "Batch::default_equations")]
    pub equations: Vec<String>,
    pub deltas: Vec<f64>,
    /// Number of random perturbations per (equation, δ); seeds are
    /// `rng_seed, rng_seed + 1, …`.
    #[serde(default = "Batch::default_seeds")]
    pub seeds: u64,
    #[serde(default = "Batch::default_t_final")]
    pub t_final: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "Batch::default_record_every")]
    pub record_every: usize,
    #[serde(default = "Batch::default_perturbation")]
    pub perturbation: String,
}

impl Batch {
    fn default_equations() -> Vec<String> {
        vec!["kdv".into(), "nls".into()]
    }
    fn default_seeds() -> u64 {
        5
    }
    fn default_t_final() -> f64 {
        50.0
    }
    fn default_record_every() -> usize {
        100
    }
    fn default_perturbation() -> String {
        "random".into()
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
        let b: Batch = serde_json::from_str(&text).map_err(|e| CliError::input(path, e))?;
        if let Some(e) = b.equations.iter().find(|e| !matches!(e.as_str(), "kdv" | "nls")) {
            return Err(CliError::Usage(format!("batch: unknown equation {e:?} (expected kdv or nls)")));
        }
        if !matches!(b.perturbation.as_str(), "random" | "eigen") {
            return Err(CliError::Usage(format!("batch: unknown perturbation {:?}", b.perturbation)));
        }
        if b.deltas.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(CliError::Usage("batch: deltas must be non-negative numbers".into()));
        }
        Ok(b)
    }
}

fn stability(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.output("out").expect("required");
    let profile = load_profile(&cfg.path("profile"))?;
    let batch = Batch::load(&cfg.path("batch"))?;
    let seeds: Vec<u64> = (0..batch.seeds).map(|i| cfg.rng_seed + i).collect();
    let mut jobs = Vec::new();
    for e in &batch.equations {
        for &d in &batch.deltas {
            for &s in &seeds {
                jobs.push((e.as_str(), d, s));
            }
        }
    }
    let results = jobs
        .par_iter()
        .map(|&(e, delta, seed)| {
            let eq = parse_equation(e);
            let ec = evolution_config(&profile, eq, batch.dt, batch.t_final, batch.record_every, true);
            let q = perturbation(&profile, eq, &batch.perturbation, seed)?;
            let r = run_experiment(&profile, &q, delta, &ec)?;
            Ok(json!({
                "equation": e,
                "delta": delta,
                "seed": seed,
                "dt": ec.dt,
                "verdict_ratio": r.verdict_ratio,
                "max_distance": r.orbital_distance.iter().copied().fold(0.0, f64::max),
                "drift_p": r.drift_p,
                "drift_h": r.drift_h,
                "drift_m": r.drift_m,
                "blew_up": r.blew_up,
            }))
        })
        .collect::<fracwave::Result<Vec<Value>>>()?;
    let worst = results
        .iter()
        .filter_map(|r| r["verdict_ratio"].as_f64())
        .fold(0.0, f64::max);
    let blown: Vec<&Value> = results.iter().filter(|r| !r["blew_up"].is_null()).collect();
    write_json(
        out,
        &json!({
            "profile": cfg.str("profile"),
            "runs": results,
            "worst_verdict_ratio": worst,
            "within_ten_delta": worst <= 10.0 && blown.is_empty(),
        }),
    )?;
    println!("{} runs, worst distance/δ = {worst:.3}", jobs.len());
    if blown.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{} run(s) blew up", blown.len())))
    }
}

fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let suite = match cfg.str("suite") {
        "full" => Suite::Full,
        _ => Suite::Fast,
    };
    let results = run_suite(suite);
    for r in &results {
        println!("{}", r.summary());
    }
    let errored = results.iter().filter(|r| r.status == Status::Error).count();
    let failed = results.iter().filter(|r| r.status == Status::Fail).count();
    if let Some(out) = cfg.output("out") {
        write_json(
            out,
            &json!({
                "suite": suite,
                "passed": errored == 0 && failed == 0,
                "criteria": results,
            }),
        )?;
    }
    if errored > 0 {
        Err(CliError::Numerical(format!("{errored} criterion run(s) could not be evaluated")))
    } else if failed > 0 {
        Err(CliError::CriterionFailed(failed))
    } else {
        Ok(())
    }
}
