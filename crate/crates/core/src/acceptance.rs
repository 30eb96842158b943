//! The acceptance suite: each criterion is a list of numeric checks with
//! their bounds, run end to end through the public API.
//!
//! At `T = 1` the constrained minimizers in the tested parameter ranges are
//! constants, which makes several criteria vacuous there. Every criterion
//! that concerns wave shape is therefore also run on non-constant waves at
//! larger periods (`T = 8` for α = 2, `T = 12` for α = 1 and 1.5).

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{analyze, kdv_dynamical_spectrum, nls_dynamical_spectrum, Problem, SpectrumReport, Verdict};
use crate::curves::{
    check_concavity, check_derivative_identity, check_omega_monotone, check_omega_sign, check_upper_bound, sweep,
    SweepConfig, SweepOutcome,
};
use crate::error::Result;
use crate::evolution::{
    evolve, random_complex_perturbation, random_real_perturbation, run_experiment, Equation, EvolutionConfig, State,
    StabilityRunReport,
};
use crate::profile::{minimize_multistart, SolverOptions, WaveProfile};
use crate::spectral::{Grid, RealField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Suite {
    /// Reduced sizes and run lengths; a few minutes at most.
    Fast,
    /// Every criterion at its stated size.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    /// `measured ≤ bound`
    AtMost,
    /// `measured < bound`
    Below,
    /// `measured > bound`
    Above,
    /// `measured == bound`
    Equal,
    /// `|measured − 16| ≤ bound`, used for convergence ratios.
    WithinOf16,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub bound: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Check {
    pub fn new(label: impl Into<String>, measured: f64, relation: Relation, bound: f64) -> Self {
        let passed = match relation {
            Relation::AtMost => measured <= bound,
            Relation::Below => measured < bound,
            Relation::Above => measured > bound,
            Relation::Equal => measured == bound,
            Relation::WithinOf16 => (measured - 16.0).abs() <= bound,
        };
        Self {
            label: label.into(),
            measured,
            bound,
            relation,
            passed,
        }
    }

    fn at_most(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(label, measured, Relation::AtMost, bound)
    }

    fn equal(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(label, measured, Relation::Equal, bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Fail,
    /// The criterion could not be evaluated (a numerical routine errored).
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    /// The first failing check, or else the tightest one.
    pub measured: f64,
    pub bound: f64,
    pub status: Status,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// One human-readable line.
    pub fn summary(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
        };
        let mut line = format!(
            "[{tag}] criterion {:>2} {:<28} measured {:.3e} bound {:.3e} ({} checks, {:.1} s)",
            self.id,
            self.name,
            self.measured,
            self.bound,
            self.checks.len(),
            self.seconds
        );
        if let Some(e) = &self.error {
            line.push_str(&format!(": {e}"));
        } else if let Some(c) = self.checks.iter().find(|c| !c.passed) {
            line.push_str(&format!(": {}", c.label));
        }
        line
    }

    fn from_checks(id: u32, name: &'static str, checks: Vec<Check>, seconds: f64) -> Self {
        let focus = checks.iter().find(|c| !c.passed).or_else(|| {
            checks
                .iter()
                .filter(|c| c.relation == Relation::AtMost && c.bound > 0.0)
                .max_by(|a, b| (a.measured / a.bound).total_cmp(&(b.measured / b.bound)))
                .or(checks.first())
        });
        let (measured, bound) = focus.map_or((f64::NAN, f64::NAN), |c| (c.measured, c.bound));
        let status = if !checks.is_empty() && checks.iter().all(|c| c.passed) {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            id,
            name,
            measured,
            bound,
            status,
            checks,
            error: None,
            seconds,
        }
    }

    fn errored(id: u32, name: &'static str, error: String, seconds: f64) -> Self {
        Self {
            id,
            name,
            measured: f64::NAN,
            bound: f64::NAN,
            status: Status::Error,
            checks: Vec::new(),
            error: Some(error),
            seconds,
        }
    }
}

pub const CRITERIA: [(u32, &str); 11] = [
    (1, "Euler-Lagrange residual"),
    (2, "multiplier consistency"),
    (3, "constant-wave closed forms"),
    (4, "ODE collocation oracle"),
    (5, "spectral structure"),
    (6, "stability indices"),
    (7, "curve structure"),
    (8, "evolution exactness"),
    (9, "conservation"),
    (10, "empirical orbital stability"),
    (11, "rearrangement"),
];

/// Non-constant test waves: `(α, T)` with `a = 0`.
const LONG_PERIODS: [(f64, f64); 3] = [(2.0, 8.0), (1.5, 12.0), (1.0, 12.0)];

struct Solved {
    label: String,
    profile: std::result::Result<WaveProfile, String>,
}

struct Sweep {
    label: String,
    a: f64,
    half_period: f64,
    outcome: std::result::Result<SweepOutcome, String>,
}

struct Run {
    label: String,
    equation: Equation,
    delta: f64,
    report: std::result::Result<StabilityRunReport, String>,
}

/// KdV and NLS reports for one labelled profile.
type Analysis = (String, std::result::Result<(SpectrumReport, SpectrumReport), String>);

/// Lazily computed data shared between criteria.
pub struct Context {
    suite: Suite,
    grid_profiles: OnceLock<(Vec<Solved>, Duration)>,
    long_profiles: OnceLock<Vec<Solved>>,
    sweeps: OnceLock<Vec<Sweep>>,
    analyses: OnceLock<Vec<Analysis>>,
    runs: OnceLock<Vec<Run>>,
}

impl Context {
    pub fn new(suite: Suite) -> Self {
        Self {
            suite,
            grid_profiles: OnceLock::new(),
            long_profiles: OnceLock::new(),
            sweeps: OnceLock::new(),
            analyses: OnceLock::new(),
            runs: OnceLock::new(),
        }
    }

    fn full(&self) -> bool {
        self.suite == Suite::Full
    }

    /// The 27 `(α, λ, a)` cases at `T = 1`, `N = 256`, with total wall time.
    fn grid_profiles(&self) -> &(Vec<Solved>, Duration) {
        self.grid_profiles.get_or_init(|| {
            let start = Instant::now();
            let grid = Grid::new(256, 1.0).expect("valid grid");
            let mut cases = Vec::new();
            for alpha in [1.0, 1.5, 2.0] {
                for lambda in [0.5, 2.0, 5.0] {
                    for a in [-0.5, 0.0, 0.5] {
                        cases.push((alpha, lambda, a));
                    }
                }
            }
            let solved = cases
                .par_iter()
                .map(|&(alpha, lambda, a)| Solved {
                    label: format!("α={alpha} λ={lambda} a={a} T=1"),
                    profile: minimize_multistart(lambda, a, alpha, &grid, &SolverOptions::default())
                        .map(|m| m.best)
                        .map_err(|e| e.to_string()),
                })
                .collect();
            (solved, start.elapsed())
        })
    }

    /// Non-constant waves at `λ = 5`, `a = 0`, `N = 256`.
    fn long_profiles(&self) -> &[Solved] {
        self.long_profiles.get_or_init(|| {
            LONG_PERIODS
                .par_iter()
                .map(|&(alpha, t)| {
                    let profile = Grid::new(256, t)
                        .and_then(|g| minimize_multistart(5.0, 0.0, alpha, &g, &SolverOptions::default()))
                        .map(|m| m.best)
                        .map_err(|e| e.to_string());
                    Solved {
                        label: format!("α={alpha} λ=5 a=0 T={t}"),
                        profile,
                    }
                })
                .collect()
        })
    }

    fn sweeps(&self) -> &[Sweep] {
        self.sweeps.get_or_init(|| {
            let unit_n = if self.full() { 128 } else { 64 };
            let mut specs: Vec<(f64, f64, f64, f64, f64, usize)> = Vec::new();
            for alpha in [1.0, 1.5, 2.0] {
                specs.push((alpha, 0.0, 1.0, 0.5, 8.0, unit_n));
            }
            specs.push((2.0, 0.5, 1.0, 0.5, 8.0, unit_n));
            let long: &[(f64, f64)] = if self.full() { &LONG_PERIODS } else { &LONG_PERIODS[..1] };
            let long_n = if self.full() { 256 } else { 128 };
            for &(alpha, t) in long {
                specs.push((alpha, 0.0, t, 2.0, 6.0, long_n));
            }
            specs
                .into_iter()
                .map(|(alpha, a, t, lo, hi, n)| {
                    let cfg = SweepConfig {
                        lambda_min: lo,
                        lambda_max: hi,
                        count: 16,
                        a_param: a,
                        alpha,
                        half_period: t,
                        n_points: n,
                        solver: SolverOptions::default(),
                    };
                    Sweep {
                        label: format!("sweep α={alpha} a={a} T={t} N={n}"),
                        a,
                        half_period: t,
                        outcome: sweep(&cfg).map_err(|e| e.to_string()),
                    }
                })
                .collect()
        })
    }

    /// KdV and NLS reports for every profile of the `a = 0` sweeps.
    fn analyses(&self) -> &[Analysis] {
        self.analyses.get_or_init(|| {
            let mut jobs: Vec<(String, std::result::Result<WaveProfile, String>)> = Vec::new();
            for s in self.sweeps().iter().filter(|s| s.a == 0.0) {
                match &s.outcome {
                    Ok(out) => {
                        for p in &out.points {
                            let label = format!("{} λ={:.4}", s.label, p.sample.lambda);
                            let prof = p
                                .profile
                                .clone()
                                .ok_or_else(|| p.sample.failure.clone().unwrap_or_default());
                            jobs.push((label, prof));
                        }
                    }
                    Err(e) => jobs.push((s.label.clone(), Err(e.clone()))),
                }
            }
            jobs.into_par_iter()
                .map(|(label, prof)| {
                    let res = prof.and_then(|p| {
                        let k = analyze(&p, Problem::KdV).map_err(|e| e.to_string())?;
                        let n = analyze(&p, Problem::Nls).map_err(|e| e.to_string())?;
                        Ok((k, n))
                    });
                    (label, res)
                })
                .collect()
        })
    }

    /// Perturbed-wave runs shared by the conservation and orbital-stability
    /// criteria.
    fn runs(&self) -> &[Run] {
        self.runs.get_or_init(|| {
            let (deltas, seeds, t_final): (&[f64], u64, f64) = if self.full() {
                (&[1e-3, 1e-2], 5, 50.0)
            } else {
                (&[1e-2], 2, 10.0)
            };
            let mut waves: Vec<(String, f64, std::result::Result<WaveProfile, String>)> = Vec::new();
            for alpha in [1.0, 2.0] {
                let p = Grid::new(256, 1.0)
                    .and_then(|g| minimize_multistart(5.0, 0.0, alpha, &g, &SolverOptions::default()))
                    .map(|m| m.best)
                    .map_err(|e| e.to_string());
                waves.push((format!("α={alpha} λ=5 T=1"), alpha, p));
            }
            for (s, &(alpha, _)) in self.long_profiles().iter().zip(&LONG_PERIODS) {
                if alpha == 2.0 || (alpha == 1.0 && self.full()) {
                    waves.push((s.label.clone(), alpha, s.profile.clone()));
                }
            }
            let mut jobs = Vec::new();
            for (label, alpha, prof) in &waves {
                for eq in [Equation::FKdV, Equation::FNls] {
                    for &delta in deltas {
                        for seed in 0..seeds {
                            jobs.push((label.clone(), *alpha, prof.clone(), eq, delta, seed));
                        }
                    }
                }
            }
            jobs.into_par_iter()
                .map(|(label, alpha, prof, equation, delta, seed)| {
                    let report = prof.and_then(|p| {
                        let q = match equation {
                            Equation::FKdV => random_real_perturbation(&p, seed).map(State::Real),
                            Equation::FNls => random_complex_perturbation(&p, seed).map(State::Complex),
                        }
                        .map_err(|e| e.to_string())?;
                        let cfg = EvolutionConfig {
                            equation,
                            alpha,
                            dt: 1e-3,
                            t_final,
                            grid: p.grid().clone(),
                            dealias: true,
                            record_every: 100,
                        };
                        run_experiment(&p, &q, delta, &cfg).map_err(|e| e.to_string())
                    });
                    Run {
                        label: format!("{label} {equation:?} δ={delta} seed={seed}"),
                        equation,
                        delta,
                        report,
                    }
                })
                .collect()
        })
    }
}

/// Run the whole suite in criterion order.
pub fn run_suite(suite: Suite) -> Vec<CriterionResult> {
    let ctx = Context::new(suite);
    CRITERIA.iter().map(|&(id, _)| run_criterion(&ctx, id)).collect()
}

/// Run one criterion (ids 1 to 11).
pub fn run_criterion(ctx: &Context, id: u32) -> CriterionResult {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map_or("unknown criterion", |c| c.1);
    let start = Instant::now();
    let checks = match id {
        1 => residual_criterion(ctx),
        2 => multiplier_criterion(ctx),
        3 => closed_form_criterion(),
        4 => ode_oracle_criterion(ctx),
        5 => spectral_structure_criterion(ctx),
        6 => stability_index_criterion(ctx),
        7 => curve_criterion(ctx),
        8 => exactness_criterion(ctx),
        9 => conservation_criterion(ctx),
        10 => orbital_criterion(ctx),
        11 => rearrangement_criterion(ctx),
        _ => Err(format!("no criterion with id {id}")),
    };
    let secs = start.elapsed().as_secs_f64();
    match checks {
        Ok(c) => CriterionResult::from_checks(id, name, c, secs),
        Err(e) => CriterionResult::errored(id, name, e, secs),
    }
}

type Checks = std::result::Result<Vec<Check>, String>;

fn s<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn profiles<'a>(items: impl Iterator<Item = &'a Solved>) -> std::result::Result<Vec<(&'a str, &'a WaveProfile)>, String> {
    items
        .map(|x| match &x.profile {
            Ok(p) => Ok((x.label.as_str(), p)),
            Err(e) => Err(format!("{}: {e}", x.label)),
        })
        .collect()
}

fn residual_criterion(ctx: &Context) -> Checks {
    let (solved, took) = ctx.grid_profiles();
    let mut checks: Vec<Check> = profiles(solved.iter().chain(ctx.long_profiles()))?
        .into_iter()
        .map(|(label, p)| Check::at_most(format!("residual {label}"), p.residual_l2, 1e-10 * (1.0 + p.phi.norm_l2())))
        .collect();
    checks.push(Check::at_most("wall time of the 27 solves [s]", took.as_secs_f64(), 60.0));
    Ok(checks)
}

fn multiplier_criterion(ctx: &Context) -> Checks {
    let (solved, _) = ctx.grid_profiles();
    Ok(profiles(solved.iter().chain(ctx.long_profiles()))?
        .into_iter()
        .filter(|(_, p)| p.a_param != p.lambda / (2.0 * p.half_period()))
        .map(|(label, p)| Check::at_most(format!("ω gap {label}"), p.omega_consistency, 1e-6))
        .collect())
}

/// Distance from `target` to the nearest entry of `values`.
fn nearest(values: &[Complex64], target: Complex64) -> f64 {
    values.iter().map(|v| (v - target).norm()).fold(f64::INFINITY, f64::min)
}

fn closed_form_criterion() -> Checks {
    // At N = 32 the matrix norms stay small enough for 1e-12 absolute
    // accuracy of the dense eigensolvers; modes |k| ≤ 5 are all present.
    let grid = s(Grid::new(32, 1.0))?;
    let p = s(WaveProfile::new(RealField::constant(&grid, 1.0), 1.0, 0.0, 2.0, 1.0))?;
    let kdv = s(analyze(&p, Problem::KdV))?;
    let nls = s(analyze(&p, Problem::Nls))?;
    let tol = 1e-12;
    let mut checks = vec![
        Check::equal("n(L₊)", kdv.n_neg_plus as f64, 1.0),
        Check::at_most("lowest eigenvalue of L₊ + 1", (kdv.eigenvalues_lplus[0] + 1.0).abs(), tol),
        Check::at_most("VK index + 2", (kdv.vk_index.unwrap_or(f64::NAN) + 2.0).abs(), tol),
    ];
    let mut expected_minus: Vec<f64> = grid.wavenumbers().iter().map(|&k| PI * k.unsigned_abs() as f64).collect();
    expected_minus.sort_by(f64::total_cmp);
    let lminus_err = expected_minus
        .iter()
        .zip(&kdv.eigenvalues_lminus)
        .map(|(e, c)| (e - c).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("L₋ eigenvalues vs π|k|", lminus_err, tol));
    let kdv_dyn = s(kdv_dynamical_spectrum(&p))?;
    let nls_dyn = s(nls_dynamical_spectrum(&p))?;
    let (mut kdv_err, mut nls_err) = (0.0f64, 0.0f64);
    for k in -5i32..=5 {
        let kf = k as f64;
        let mu = PI * kf.abs();
        kdv_err = kdv_err.max(nearest(&kdv_dyn.eigenvalues, Complex64::new(0.0, PI * kf * (mu - 1.0))));
        let w = ((mu - 1.0) * mu).max(0.0).sqrt();
        for sign in [1.0, -1.0] {
            nls_err = nls_err.max(nearest(&nls_dyn.eigenvalues, Complex64::new(0.0, sign * w)));
        }
    }
    checks.push(Check::at_most("KdV eigenvalues iπk(π|k|−1), |k| ≤ 5", kdv_err, tol));
    checks.push(Check::at_most("NLS eigenvalues ±i√((π|k|−1)π|k|), |k| ≤ 5", nls_err, tol));
    checks.push(Check::equal("KdV verdict stable", (kdv.verdict == Verdict::SpectrallyStable) as u8 as f64, 1.0));
    checks.push(Check::equal("NLS verdict stable", (nls.verdict == Verdict::SpectrallyStable) as u8 as f64, 1.0));
    Ok(checks)
}

/// Solve `φ'' = ωφ − φ²`, `∫φ² = λ` on `M` points by Newton on fourth-order
/// central differences, pinned by `⟨φ − g, g'⟩ = 0` for the initial guess `g`
/// (a bordering multiplier μ keeps the system square). Returns `(φ, ω)`.
pub fn ode_collocation(guess: &[f64], omega_guess: f64, lambda: f64, half_period: f64) -> std::result::Result<(Vec<f64>, f64), String> {
    let m = guess.len();
    let h = 2.0 * half_period / m as f64;
    let at = |v: &[f64], j: isize| v[j.rem_euclid(m as isize) as usize];
    let d2 = |v: &[f64], j: usize| {
        let j = j as isize;
        (-at(v, j + 2) + 16.0 * at(v, j + 1) - 30.0 * at(v, j) + 16.0 * at(v, j - 1) - at(v, j - 2)) / (12.0 * h * h)
    };
    let psi: Vec<f64> = (0..m)
        .map(|j| {
            let j = j as isize;
            (-at(guess, j + 2) + 8.0 * at(guess, j + 1) - 8.0 * at(guess, j - 1) + at(guess, j - 2)) / (12.0 * h)
        })
        .collect();
    let mut phi = guess.to_vec();
    let (mut omega, mut mu) = (omega_guess, 0.0);
    let stencil = [(-2isize, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)];
    for _ in 0..30 {
        let mut f = DVector::zeros(m + 2);
        for j in 0..m {
            f[j] = d2(&phi, j) - omega * phi[j] + phi[j] * phi[j] + mu * psi[j];
        }
        f[m] = h * phi.iter().map(|v| v * v).sum::<f64>() - lambda;
        f[m + 1] = h * phi.iter().zip(guess).zip(&psi).map(|((p, g), q)| (p - g) * q).sum::<f64>();
        let mut jac = DMatrix::zeros(m + 2, m + 2);
        for j in 0..m {
            for &(o, c) in &stencil {
                let l = (j as isize + o).rem_euclid(m as isize) as usize;
                jac[(j, l)] += c / (12.0 * h * h);
            }
            jac[(j, j)] += 2.0 * phi[j] - omega;
            jac[(j, m)] = -phi[j];
            jac[(j, m + 1)] = psi[j];
            jac[(m, j)] = 2.0 * h * phi[j];
            jac[(m + 1, j)] = h * psi[j];
        }
        let step = jac.lu().solve(&(-f)).ok_or("singular collocation Jacobian")?;
        for j in 0..m {
            phi[j] += step[j];
        }
        omega += step[m];
        mu += step[m + 1];
        // The residual bottoms out near 1e-10 (roundoff times 1/h²) and the
        // updates near 1e-9, so stop on the size of the update.
        if step.amax() <= 1e-8 * (1.0 + phi.iter().fold(0.0f64, |a, v| a.max(v.abs()))) {
            return Ok((phi, omega));
        }
    }
    Err("collocation Newton did not converge".into())
}

/// Trigonometric interpolation of grid values onto `factor·N` points, by
/// direct summation.
fn interpolate(values: &[f64], factor: usize) -> Vec<f64> {
    let n = values.len();
    let coeffs: Vec<Complex64> = (0..n)
        .map(|k| {
            values
                .iter()
                .enumerate()
                .map(|(j, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * j) as f64 / n as f64))
                .sum::<Complex64>()
                / n as f64
        })
        .collect();
    (0..factor * n)
        .map(|i| {
            let u = i as f64 / (factor * n) as f64;
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
                    if k == n / 2 {
                        c.re * (2.0 * PI * kk * u).cos()
                    } else {
                        (c * Complex64::from_polar(1.0, 2.0 * PI * kk * u)).re
                    }
                })
                .sum()
        })
        .collect()
}

fn ode_oracle_criterion(ctx: &Context) -> Checks {
    let (solved, _) = ctx.grid_profiles();
    let unit = solved
        .iter()
        .find(|x| x.label == "α=2 λ=5 a=0 T=1")
        .ok_or("missing α=2 λ=5 a=0 profile")?;
    let long = &ctx.long_profiles()[0];
    let mut checks = Vec::new();
    for (label, p) in profiles([unit, long].into_iter())? {
        let t = p.half_period();
        let fine = interpolate(p.phi.values(), 4);
        // Start the oracle off the computed profile by an even perturbation.
        let guess: Vec<f64> = fine
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = -t + 2.0 * t * i as f64 / fine.len() as f64;
                v + 1e-3 * (PI * x / t).cos()
            })
            .collect();
        let (oracle, omega) = ode_collocation(&guess, p.omega, p.lambda, t)?;
        let diff = p
            .phi
            .values()
            .iter()
            .enumerate()
            .map(|(j, v)| (v - oracle[4 * j]).abs())
            .fold(0.0, f64::max);
        checks.push(Check::at_most(format!("L∞ profile vs oracle {label}"), diff, 1e-6));
        checks.push(Check::at_most(format!("ω vs oracle {label}"), (omega - p.omega).abs(), 1e-6));
    }
    Ok(checks)
}

fn each_analysis(ctx: &Context) -> std::result::Result<Vec<(&str, &SpectrumReport, &SpectrumReport)>, String> {
    ctx.analyses()
        .iter()
        .map(|(l, r)| match r {
            Ok((k, n)) => Ok((l.as_str(), k, n)),
            Err(e) => Err(format!("{l}: {e}")),
        })
        .collect()
}

fn spectral_structure_criterion(ctx: &Context) -> Checks {
    let mut checks = Vec::new();
    for (l, k, n) in each_analysis(ctx)? {
        checks.push(Check::equal(format!("n(L₊) {l}"), k.n_neg_plus as f64, 1.0));
        checks.push(Check::equal(
            format!("dim Ker L₊ − translation modes {l}"),
            k.kernel_dim_plus as f64,
            k.translation_modes as f64,
        ));
        checks.push(Check::at_most(format!("‖L₊φ′‖ scaled {l}"), k.lplus_translation_residual, 1e-7));
        checks.push(Check::at_most(format!("‖L₋φ‖/‖φ‖ {l}"), n.lminus_phi_residual, 1e-8));
        checks.push(Check::equal(format!("n(L₋) {l}"), n.n_neg_minus as f64, 0.0));
        checks.push(Check::equal(format!("Sturm violations {l}"), k.sturm.violations.len() as f64, 0.0));
    }
    Ok(checks)
}

fn stability_index_criterion(ctx: &Context) -> Checks {
    let mut checks = Vec::new();
    for (l, k, n) in each_analysis(ctx)? {
        checks.push(Check::new(format!("VK index {l}"), k.vk_index.unwrap_or(f64::NAN), Relation::Below, 0.0));
        checks.push(Check::new(format!("κ {l}"), k.coercivity_kappa, Relation::Above, 0.0));
        for (name, r) in [("KdV", k), ("NLS", n)] {
            checks.push(Check::equal(
                format!("{name} verdict stable {l}"),
                (r.verdict == Verdict::SpectrallyStable) as u8 as f64,
                1.0,
            ));
            checks.push(Check::at_most(format!("{name} max Re λ {l}"), r.max_real_part, 1e-7));
        }
    }
    Ok(checks)
}

fn curve_criterion(ctx: &Context) -> Checks {
    let mut checks = Vec::new();
    for sw in ctx.sweeps() {
        let out = sw.outcome.as_ref().map_err(|e| format!("{}: {e}", sw.label))?;
        let samples = out.samples();
        let l = &sw.label;
        if let Some(bad) = samples.iter().find(|x| !x.converged()) {
            return Err(format!("{l}: λ = {} failed: {}", bad.lambda, bad.failure.clone().unwrap_or_default()));
        }
        if sw.a != 0.0 {
            let sign = s(check_omega_sign(&samples, sw.a, sw.half_period))?;
            checks.push(Check::equal(format!("ω sign violations {l}"), sign.violations.len() as f64, 0.0));
            checks.push(Check::new(format!("samples on each side of λ = 2Ta {l}"), sign.worst, Relation::Above, 0.0));
            continue;
        }
        let conc = s(check_concavity(&samples, 1e-8, 1e-6))?;
        checks.push(Check::equal(format!("concavity violations {l}"), conc.violations.len() as f64, 0.0));
        let mono = s(check_omega_monotone(&samples, 1e-8))?;
        checks.push(Check::equal(format!("ω decreases {l}"), mono.violations.len() as f64, 0.0));
        let der = s(check_derivative_identity(&samples, 0.02, 0.01))?;
        checks.push(Check::at_most(format!("m′ vs −ω/2 relative {l}"), der.pointwise.worst, 0.02));
        checks.push(Check::at_most(format!("integrated identity relative {l}"), der.integrated_error, 0.01));
        // Constant minimizers attain the bound, so allow for roundoff.
        let bound = s(check_upper_bound(&samples, 0.0, sw.half_period, 1e-12))?;
        checks.push(Check::at_most(format!("m − constant-wave bound {l}"), bound.worst, 1e-12));
    }
    Ok(checks)
}

fn linf(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// L∞ error at `t_final` of the traveling (fKdV) or standing (fNLS) wave.
fn wave_error(p: &WaveProfile, equation: Equation, dt: f64, t_final: f64) -> std::result::Result<f64, String> {
    let cfg = EvolutionConfig {
        equation,
        alpha: p.alpha,
        dt,
        t_final,
        grid: p.grid().clone(),
        dealias: true,
        record_every: usize::MAX,
    };
    let t = cfg.n_steps() as f64 * dt;
    let (u0, exact) = match equation {
        Equation::FKdV => (State::Real(p.phi.clone()), p.phi.translate(p.omega * t).to_complex()),
        Equation::FNls => (
            State::Complex(p.phi.to_complex()),
            p.phi.to_complex().scale(Complex64::from_polar(1.0, p.omega * t)),
        ),
    };
    let u = s(evolve(&u0, &cfg))?;
    Ok(linf(u.to_complex().values(), exact.values()))
}

fn exactness_criterion(ctx: &Context) -> Checks {
    let (solved, _) = ctx.grid_profiles();
    let unit = solved.iter().filter(|x| x.label.contains("λ=5 a=0 T=1"));
    let long = ctx.long_profiles();
    let waves = if ctx.full() { profiles(unit.chain(long))? } else { profiles(unit.take(1).chain(&long[..1]))? };
    let t_final = if ctx.full() { 10.0 } else { 2.0 };
    let mut checks = Vec::new();
    for (l, p) in &waves {
        for eq in [Equation::FKdV, Equation::FNls] {
            let err = wave_error(p, eq, 1e-3, t_final)?;
            checks.push(Check::at_most(format!("{eq:?} wave error at t={t_final} {l}"), err, 1e-6));
        }
    }
    // Order of accuracy on the non-constant α = 2 wave. The errors must stay
    // above the ~1e-12 floor set by the multiplier's own accuracy (δω·t·|φ'|),
    // and fKdV loses RK4 stability a little above dt = 1e-2, so its range is
    // 8× rather than the decade used for fNLS.
    let p = long[0].profile.as_ref().map_err(|e| e.clone())?;
    let sequences: [(Equation, &[f64]); 2] = [
        (Equation::FKdV, &[1e-2, 5e-3, 2.5e-3, 1.25e-3]),
        (Equation::FNls, &[1.6e-2, 8e-3, 4e-3, 2e-3, 1e-3]),
    ];
    for (eq, dts) in sequences {
        let errs: Vec<f64> = dts.iter().map(|&dt| wave_error(p, eq, dt, 10.0)).collect::<std::result::Result<_, _>>()?;
        for (w, d) in errs.windows(2).zip(dts.windows(2)) {
            checks.push(Check::new(
                format!("{eq:?} error ratio dt {:e} → {:e}", d[0], d[1]),
                w[0] / w[1],
                Relation::WithinOf16,
                4.8,
            ));
        }
    }
    Ok(checks)
}

fn each_run(ctx: &Context) -> std::result::Result<Vec<(&Run, &StabilityRunReport)>, String> {
    ctx.runs()
        .iter()
        .map(|r| match &r.report {
            Ok(rep) => Ok((r, rep)),
            Err(e) => Err(format!("{}: {e}", r.label)),
        })
        .collect()
}

fn conservation_criterion(ctx: &Context) -> Checks {
    let mut checks = Vec::new();
    for (run, rep) in each_run(ctx)?.into_iter().filter(|(r, _)| r.delta == 1e-2) {
        let l = &run.label;
        checks.push(Check::equal(format!("no blow-up {l}"), rep.blew_up.is_some() as u8 as f64, 0.0));
        checks.push(Check::at_most(format!("P drift {l}"), rep.drift_p, 1e-10));
        checks.push(Check::at_most(format!("H drift {l}"), rep.drift_h, 1e-8));
        if run.equation == Equation::FKdV {
            checks.push(Check::at_most(format!("M drift {l}"), rep.drift_m, 1e-12));
        }
    }
    Ok(checks)
}

fn orbital_criterion(ctx: &Context) -> Checks {
    let mut checks = Vec::new();
    for (run, rep) in each_run(ctx)? {
        checks.push(Check::equal(format!("no blow-up {}", run.label), rep.blew_up.is_some() as u8 as f64, 0.0));
        checks.push(Check::at_most(format!("max distance / δ {}", run.label), rep.verdict_ratio, 10.0));
    }
    Ok(checks)
}

fn rearrangement_criterion(ctx: &Context) -> Checks {
    use rand::{Rng, SeedableRng};
    let grid = s(Grid::new(if ctx.full() { 128 } else { 64 }, 1.0))?;
    let n = grid.n_points();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let (mut multiset_bad, mut worst_growth, mut idempotent_bad) = (0usize, f64::NEG_INFINITY, 0usize);
    for i in 0..100 {
        // Alternate white noise with smooth random fields.
        let f = if i % 2 == 0 {
            let vals = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            s(RealField::new(&grid, vals))?
        } else {
            let modes: Vec<(f64, f64, f64)> =
                (1..=8).map(|k| (k as f64, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            RealField::from_fn(&grid, |x| {
                modes.iter().map(|&(k, a, b)| (a * (PI * k * x).cos() + b * (PI * k * x).sin()) / k).sum()
            })
        };
        let r = f.decreasing_rearrangement();
        let mut a = f.values().to_vec();
        let mut b = r.values().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        if a != b {
            multiset_bad += 1;
        }
        for alpha in [1.0, 1.5, 2.0] {
            let beta = alpha / 4.0;
            let (before, after) = (f.seminorm(beta), r.seminorm(beta));
            worst_growth = worst_growth.max((after - before) / before);
        }
        if r.decreasing_rearrangement().values() != r.values() {
            idempotent_bad += 1;
        }
    }
    // Bell-shaped input built symmetric by index distance from the centre.
    let c = grid.center_index();
    let bell_vals: Vec<f64> = (0..n)
        .map(|j| {
            let d = (j as isize - c as isize).unsigned_abs().min(n - (j as isize - c as isize).unsigned_abs());
            (-(d as f64 / 10.0).powi(2)).exp()
        })
        .collect();
    let bell = s(RealField::new(&grid, bell_vals))?;
    let bell_fixed = bell.decreasing_rearrangement().values() == bell.values();
    Ok(vec![
        Check::equal("fields with a changed value multiset", multiset_bad as f64, 0.0),
        Check::at_most("max relative growth of the H^{α/4} seminorm", worst_growth, 1e-12),
        Check::equal("rearranged fields not fixed by rearrangement", idempotent_bad as f64, 0.0),
        Check::equal("bell-shaped input fixed", bell_fixed as u8 as f64, 1.0),
    ])
}
