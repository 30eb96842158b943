//! Constrained minimization of `E_a[φ] = ½‖Λ^{α/2}φ‖² − ⅓∫|φ|³ + a∫|φ|` on
//! the sphere `∫φ² = λ`, and Newton refinement of the resulting profile
//! equation `Λ^αφ + ωφ − φ² + a = 0`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense;
use crate::error::{Error, Result};
use crate::spectral::{dot, Grid, RealField};

/// A solution of the profile equation together with its diagnostics.
#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub phi: RealField,
    pub omega: f64,
    pub a_param: f64,
    pub lambda: f64,
    pub alpha: f64,
    /// `‖Λ^αφ + ωφ − φ² + a‖_{L²}`.
    pub residual_l2: f64,
    /// Relative gap between the energy and mass formulas for ω.
    pub omega_consistency: f64,
    pub energy: f64,
}

impl WaveProfile {
    /// Bundle `phi` with its parameters and evaluate every diagnostic.
    pub fn new(phi: RealField, omega: f64, a: f64, lambda: f64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let residual_l2 = residual(&phi, omega, a, alpha)?;
        let w_energy = omega_from_energy(&phi, a, lambda, alpha)?;
        let omega_consistency = match omega_from_mass(&phi, a, lambda) {
            Ok(w_mass) => relative_gap(w_energy, w_mass),
            Err(_) => f64::NAN,
        };
        let energy = energy(&phi, a, alpha)?;
        Ok(Self {
            phi,
            omega,
            a_param: a,
            lambda,
            alpha,
            residual_l2,
            omega_consistency,
            energy,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    pub fn half_period(&self) -> f64 {
        self.phi.grid().half_period()
    }

    pub fn omega_energy(&self) -> f64 {
        omega_from_energy(&self.phi, self.a_param, self.lambda, self.alpha).unwrap_or(f64::NAN)
    }

    pub fn omega_mass(&self) -> f64 {
        omega_from_mass(&self.phi, self.a_param, self.lambda).unwrap_or(f64::NAN)
    }
}

fn relative_gap(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    /// Constant step length, no line search.
    Fixed(f64),
    /// Armijo backtracking starting from `initial`, multiplied by `shrink` on
    /// each rejection.
    Backtracking { initial: f64, shrink: f64 },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Backtracking {
            initial: 1.0,
            shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Descent stops once the tangential gradient drops below
    /// `grad_tol·(1 + ‖φ‖)`.
    pub grad_tol: f64,
    pub step_rule: StepRule,
    /// Rearrange every `m` iterations; 0 disables.
    pub rearrange_every: usize,
    pub newton_polish: bool,
    /// Newton stops at residual `newton_tol·(1 + ‖φ‖)`.
    pub newton_tol: f64,
    pub seed_profile: Option<RealField>,
    /// Number of starting points; the first is the seed profile (or the
    /// default bump), the rest are random.
    pub seeds: usize,
    pub rng_seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: 1e-9,
            step_rule: StepRule::default(),
            rearrange_every: 10,
            newton_polish: true,
            newton_tol: 1e-11,
            seed_profile: None,
            seeds: 3,
            rng_seed: 0x5eed,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::param("grad_tol", "must be positive"));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::param("newton_tol", "must be positive"));
        }
        if self.seeds == 0 {
            return Err(Error::param("seeds", "must be at least 1"));
        }
        match self.step_rule {
            StepRule::Fixed(t) if !(t > 0.0) => Err(Error::param("step_rule", "step must be positive")),
            StepRule::Backtracking { initial, shrink }
                if !(initial > 0.0) || !(shrink > 0.0 && shrink < 1.0) =>
            {
                Err(Error::param("step_rule", "need initial > 0 and 0 < shrink < 1"))
            }
            _ => Ok(()),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", format!("{alpha} is outside (0, 2]")))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::param("lambda", format!("{lambda} is not a positive number")))
    }
}

pub fn energy(phi: &RealField, a: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let h = phi.grid().spacing();
    let kinetic = phi.seminorm(alpha / 2.0).powi(2);
    let (cubic, abs) = phi
        .values()
        .iter()
        .fold((0.0, 0.0), |(c, m), v| (c + v.abs().powi(3), m + v.abs()));
    Ok(0.5 * kinetic - h * cubic / 3.0 + a * h * abs)
}

pub fn sphere_project(phi: &RealField, lambda: f64) -> Result<RealField> {
    check_lambda(lambda)?;
    let norm = phi.norm_l2();
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    if !norm.is_finite() {
        return Err(Error::NonFinite("sphere_project"));
    }
    Ok(phi.scale(lambda.sqrt() / norm))
}

/// Unconstrained gradient `Λ^αφ − |φ|φ + a·sgn φ` (with `sgn 0 = 1`).
fn free_gradient(phi: &RealField, a: f64, alpha: f64) -> Result<RealField> {
    let lap = phi.apply_symbol(alpha)?;
    lap.zip_map(phi, |l, p| l - p.abs() * p + if p < 0.0 { -a } else { a })
}

/// Tangential gradient `Λ^αφ − φ² + a + ωφ`, with ω chosen so that the result
/// is L²-orthogonal to φ. On the sphere this ω is the energy formula.
pub fn constrained_gradient(phi: &RealField, a: f64, alpha: f64, lambda: f64) -> Result<RealField> {
    check_lambda(lambda)?;
    let (g, _) = tangent_gradient(phi, a, alpha)?;
    Ok(g)
}

fn tangent_gradient(phi: &RealField, a: f64, alpha: f64) -> Result<(RealField, f64)> {
    let g = free_gradient(phi, a, alpha)?;
    let pp = dot(phi.values(), phi.values());
    if pp == 0.0 {
        return Err(Error::ZeroField);
    }
    let omega = -dot(g.values(), phi.values()) / pp;
    Ok((g.axpy(omega, phi)?, omega))
}

/// `ω = (∫φ³ − ‖Λ^{α/2}φ‖² − a∫φ)/λ`.
pub fn omega_from_energy(phi: &RealField, a: f64, lambda: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_lambda(lambda)?;
    let h = phi.grid().spacing();
    let cubic = h * phi.values().iter().map(|v| v.powi(3)).sum::<f64>();
    let kinetic = phi.seminorm(alpha / 2.0).powi(2);
    Ok((cubic - kinetic - a * phi.integral()) / lambda)
}

/// `ω = (λ − 2Ta)/∫φ`, from integrating the profile equation over the cell.
pub fn omega_from_mass(phi: &RealField, a: f64, lambda: f64) -> Result<f64> {
    let mean = phi.integral();
    let scale = phi.norm_l2() * (2.0 * phi.grid().half_period()).sqrt();
    if mean.abs() <= 1e-13 * scale || mean == 0.0 {
        return Err(Error::VanishingMean(mean));
    }
    Ok((lambda - 2.0 * phi.grid().half_period() * a) / mean)
}

fn residual_field(phi: &RealField, omega: f64, a: f64, alpha: f64) -> Result<RealField> {
    let lap = phi.apply_symbol(alpha)?;
    lap.zip_map(phi, |l, p| l + omega * p - p * p + a)
}

/// `‖Λ^αφ + ωφ − φ² + a‖_{L²}`.
pub fn residual(phi: &RealField, omega: f64, a: f64, alpha: f64) -> Result<f64> {
    Ok(residual_field(phi, omega, a, alpha)?.norm_l2())
}

/// Normalized `1 + cos(πx/T)` on the sphere of radius `√λ`.
pub fn bump_seed(grid: &Grid, lambda: f64) -> Result<RealField> {
    let t = grid.half_period();
    sphere_project(&RealField::from_fn(grid, |x| 1.0 + (PI * x / t).cos()), lambda)
}

/// Random positive band-limited field, normalized to the sphere.
pub fn random_seed(grid: &Grid, lambda: f64, rng_seed: u64) -> Result<RealField> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let t = grid.half_period();
    let modes: Vec<(f64, f64)> = (1..=8)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let f = RealField::from_fn(grid, |x| {
        let wave: f64 = modes
            .iter()
            .enumerate()
            .map(|(i, (c, s))| {
                let k = (i + 1) as f64;
                (c * (PI * k * x / t).cos() + s * (PI * k * x / t).sin()) / k
            })
            .sum();
        (1.5 + wave).max(0.05)
    });
    sphere_project(&f, lambda)
}

/// Grid-level bell shape: even about 0 and non-increasing in |x|, up to `slack`.
pub fn is_bell_shaped(f: &RealField, slack: f64) -> bool {
    let v = f.values();
    let n = v.len();
    let c = n / 2;
    let even = (1..c).all(|m| (v[c + m] - v[c - m]).abs() <= slack);
    // Walk right from the centre; the last step wraps to node 0 (x = ±T).
    let decreasing = (0..c).all(|m| v[(c + m + 1) % n] <= v[c + m] + slack);
    even && decreasing
}

struct Descent {
    phi: RealField,
    omega: f64,
    iterations: usize,
    grad_norm: f64,
    converged: bool,
}

/// Preconditioned projected gradient descent on the sphere.
///
/// The search direction is the tangential part of `(Λ^α + μ)⁻¹g`, where `g` is
/// the free gradient and `μ = 1 + |ω|`; the preconditioner makes unit steps
/// natural for every Fourier mode. Iterates are clipped to be nonnegative and
/// pulled back onto the sphere by scaling.
fn descend(seed: RealField, lambda: f64, a: f64, alpha: f64, opts: &SolverOptions, target: f64) -> Result<Descent> {
    let grid = seed.grid().clone();
    let sym = grid.symbol(alpha);
    let retract = |f: &RealField| sphere_project(&f.map(|v| v.max(0.0)), lambda);
    let mut phi = retract(&seed)?;
    let mut e = energy(&phi, a, alpha)?;
    let mut step = match opts.step_rule {
        StepRule::Fixed(t) => t,
        StepRule::Backtracking { initial, .. } => initial,
    };
    let mut grad_norm = f64::INFINITY;
    let mut omega = 0.0;
    for it in 0..opts.max_iters {
        if opts.rearrange_every > 0 && it > 0 && it % opts.rearrange_every == 0 {
            let r = phi.decreasing_rearrangement();
            let er = energy(&r, a, alpha)?;
            if er <= e {
                phi = r;
                e = er;
            }
        }
        let g = free_gradient(&phi, a, alpha)?;
        let pp = dot(phi.values(), phi.values());
        omega = -dot(g.values(), phi.values()) / pp;
        let tangential = g.axpy(omega, &phi)?;
        grad_norm = tangential.norm_l2();
        if !grad_norm.is_finite() {
            return Err(Error::NonFinite("gradient descent"));
        }
        if grad_norm <= target {
            return Ok(Descent {
                phi,
                omega,
                iterations: it,
                grad_norm,
                converged: true,
            });
        }
        let mu = 1.0 + omega.abs();
        let precond: Vec<f64> = sym.iter().map(|s| 1.0 / (s + mu)).collect();
        let pg = g.apply_real_multiplier(&precond);
        let pphi = phi.apply_real_multiplier(&precond);
        let beta = dot(pg.values(), phi.values()) / dot(pphi.values(), phi.values());
        let dir = pphi.scale(beta).axpy(-1.0, &pg)?;
        let slope = grid.spacing() * dot(g.values(), dir.values());
        match opts.step_rule {
            StepRule::Fixed(t) => {
                phi = retract(&phi.axpy(t, &dir)?)?;
                e = energy(&phi, a, alpha)?;
            }
            StepRule::Backtracking { initial, shrink } => {
                let mut accepted = false;
                while step > 1e-14 * initial {
                    let trial = retract(&phi.axpy(step, &dir)?)?;
                    let et = energy(&trial, a, alpha)?;
                    if et <= e + 1e-4 * step * slope || (et <= e + 1e-14 && slope.abs() * step < 1e-13) {
                        phi = trial;
                        e = et;
                        accepted = true;
                        break;
                    }
                    step *= shrink;
                }
                if !accepted {
                    // The line search can no longer resolve a decrease: the
                    // iterate is as good as energy evaluations allow.
                    return Ok(Descent {
                        phi,
                                omega,
                        iterations: it,
                        grad_norm,
                        converged: false,
                    });
                }
                step = (step / shrink).min(initial);
            }
        }
    }
    Ok(Descent {
        phi,
        omega,
        iterations: opts.max_iters,
        grad_norm,
        converged: false,
    })
}

/// Outcome of a multi-start minimization.
#[derive(Debug, Clone)]
pub struct MultiStart {
    pub best: WaveProfile,
    /// Final energy per start, `None` where the start failed.
    pub energies: Vec<Option<f64>>,
    /// Spread of the final energies over the successful starts.
    pub seed_disagreement: f64,
}

/// Minimize `E_a` on `∫φ² = λ`, returning the lowest-energy profile over the
/// configured starts.
pub fn minimize(lambda: f64, a: f64, alpha: f64, grid: &Grid, opts: &SolverOptions) -> Result<WaveProfile> {
    minimize_multistart(lambda, a, alpha, grid, opts).map(|m| m.best)
}

pub fn minimize_multistart(
    lambda: f64,
    a: f64,
    alpha: f64,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<MultiStart> {
    check_lambda(lambda)?;
    if !(alpha > 0.5 && alpha <= 2.0) {
        return Err(Error::param("alpha", format!("{alpha} is outside (1/2, 2]")));
    }
    if !a.is_finite() {
        return Err(Error::param("a", "must be finite"));
    }
    opts.validate()?;
    if let Some(seed) = &opts.seed_profile {
        if seed.grid() != grid {
            return Err(Error::GridMismatch);
        }
    }
    let runs: Vec<Result<WaveProfile>> = (0..opts.seeds)
        .into_par_iter()
        .map(|i| {
            let seed = match (i, &opts.seed_profile) {
                (0, Some(s)) => s.clone(),
                (0, None) => bump_seed(grid, lambda)?,
                _ => random_seed(grid, lambda, opts.rng_seed.wrapping_add(i as u64))?,
            };
            single_start(seed, lambda, a, alpha, opts)
        })
        .collect();

    let energies: Vec<Option<f64>> = runs.iter().map(|r| r.as_ref().ok().map(|p| p.energy)).collect();
    let mut best: Option<WaveProfile> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(p) => {
                if best.as_ref().is_none_or(|b| p.energy < b.energy) {
                    best = Some(p);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(best) = best else {
        return Err(first_err.expect("at least one start ran"));
    };
    let ok: Vec<f64> = energies.iter().flatten().copied().collect();
    let spread = ok.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - ok.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(MultiStart {
        best,
        energies,
        seed_disagreement: spread,
    })
}

fn single_start(seed: RealField, lambda: f64, a: f64, alpha: f64, opts: &SolverOptions) -> Result<WaveProfile> {
    let scale = 1.0 + lambda.sqrt();
    // With Newton to finish the job, descent only has to land in its basin.
    let target = if opts.newton_polish {
        (1e-6 * scale).max(opts.grad_tol * scale)
    } else {
        opts.grad_tol * scale
    };
    let d = descend(seed, lambda, a, alpha, opts, target)?;
    let raw = WaveProfile::new(d.phi.clone(), d.omega, a, lambda, alpha)?;
    if opts.newton_polish {
        match newton_polish(&raw, opts.newton_tol) {
            Ok(p) => return Ok(p),
            Err(_) if !d.converged => {
                return Err(Error::NonConvergence {
                    iterations: d.iterations,
                    grad_norm: d.grad_norm,
                    last: Box::new(raw),
                });
            }
            Err(e) => return Err(e),
        }
    }
    if d.converged {
        Ok(center_profile(&raw)?)
    } else {
        Err(Error::NonConvergence {
            iterations: d.iterations,
            grad_norm: d.grad_norm,
            last: Box::new(raw),
        })
    }
}

/// Translate so that the first Fourier coefficient is real and positive (the
/// mass sits around `x = 0`), then average with the reflection.
fn symmetrize(phi: &RealField) -> RealField {
    let c1 = phi.coeffs()[1];
    let shifted = if c1.norm() > 1e-10 * phi.norm_l2().max(f64::MIN_POSITIVE) {
        let x0 = -c1.arg() * phi.grid().half_period() / PI;
        phi.translate(-x0)
    } else {
        phi.clone()
    };
    let refl = shifted.reflect();
    shifted.zip_map(&refl, |p, q| 0.5 * (p + q)).expect("same grid")
}

fn center_profile(p: &WaveProfile) -> Result<WaveProfile> {
    let phi = sphere_project(&symmetrize(&p.phi), p.lambda)?;
    let (_, omega) = tangent_gradient(&phi, p.a_param, p.alpha)?;
    WaveProfile::new(phi, omega, p.a_param, p.lambda, p.alpha)
}

/// Newton iteration on `{Λ^αφ + ωφ − φ² + a = 0, ∫φ² = λ}` in `(φ, ω)`.
///
/// The profile is first centred and made even; the iteration then runs on the
/// even subspace, which removes the translational zero mode `φ'` from the
/// Jacobian. A remaining singularity (an even kernel element) is reported as
/// [`Error::SingularJacobian`].
pub fn newton_polish(profile: &WaveProfile, tol: f64) -> Result<WaveProfile> {
    let p = profile;
    let norm_scale = 1.0 + p.phi.norm_l2();
    let goal = tol * norm_scale;
    if p.residual_l2 <= goal {
        return Ok(p.clone());
    }
    if !(p.residual_l2 <= 1e-2 * norm_scale) {
        return Err(Error::NewtonDiverged {
            iterations: 0,
            residual: p.residual_l2,
        });
    }
    let grid = p.grid().clone();
    let n = grid.n_points();
    let half = n / 2;
    let h = grid.spacing();
    let lam = dense::symbol_matrix(&grid, p.alpha);
    // Reduced coordinate r ↔ node c + r (node 0 for r = N/2).
    let node = |r: usize| (half + r) % n;
    let orbit = |j: usize| (j as isize - half as isize).unsigned_abs();

    let mut phi = symmetrize(&p.phi).into_values();
    let mut omega = p.omega;
    let eval = |phi: &[f64], omega: f64| -> Result<(RealField, f64)> {
        let f = RealField::new(&grid, phi.to_vec())?;
        let r = residual_field(&f, omega, p.a_param, p.alpha)?;
        let c = h * dot(phi, phi) - p.lambda;
        Ok((r, c))
    };
    let (mut res, mut cons) = eval(&phi, omega)?;
    let start = res.norm_l2();
    let mut best = start;
    let mut reached = false;
    for it in 1..=30 {
        let m = half + 1;
        let mut jac = DMatrix::<f64>::zeros(m + 1, m + 1);
        let mut rhs = DVector::<f64>::zeros(m + 1);
        for r in 0..m {
            let row = node(r);
            for j in 0..n {
                jac[(r, orbit(j))] += lam[(row, j)];
            }
            jac[(r, r)] += omega - 2.0 * phi[row];
            jac[(r, m)] = phi[row];
            rhs[r] = -res.values()[row];
            let weight = if r == 0 || r == half { 1.0 } else { 2.0 };
            jac[(m, r)] = 2.0 * h * weight * phi[row];
        }
        rhs[m] = -cons;
        let lu = jac.lu();
        let u = lu.u();
        let diag = u.diagonal().map(f64::abs);
        let rcond = diag.min() / diag.max();
        if !(rcond > 1e-14) {
            return Err(Error::SingularJacobian { rcond });
        }
        let delta = lu.solve(&rhs).ok_or(Error::SingularJacobian { rcond })?;
        let trial: Vec<f64> = (0..n).map(|j| phi[j] + delta[orbit(j)]).collect();
        let trial_omega = omega + delta[m];
        let (tr, tc) = eval(&trial, trial_omega)?;
        let tnorm = tr.norm_l2();
        if !tnorm.is_finite() || tnorm > 1e3 * start.max(goal) {
            return Err(Error::NewtonDiverged {
                iterations: it,
                residual: tnorm,
            });
        }
        if reached && tnorm >= best {
            break;
        }
        let improved_a_lot = tnorm < 0.5 * best;
        phi = trial;
        omega = trial_omega;
        res = tr;
        cons = tc;
        best = best.min(tnorm);
        if tnorm <= goal {
            if reached || !improved_a_lot {
                break;
            }
            reached = true;
        }
    }
    if best > goal {
        return Err(Error::NewtonDiverged {
            iterations: 30,
            residual: best,
        });
    }
    let phi = RealField::new(&grid, phi)?;
    WaveProfile::new(phi, omega, p.a_param, p.lambda, p.alpha)
}

/// Map a profile on `[−T₀, T₀]` to `[−T, T]` via the scaling symmetry of the
/// profile equation: `φ(x) = s^{−α}Φ(x/s)` with `s = T/T₀`, `ω → s^{−α}ω`,
/// `a → s^{−2α}a` and `λ → s^{1−2α}λ`.
pub fn rescale_wave(profile: &WaveProfile, new_half_period: f64) -> Result<WaveProfile> {
    if !(new_half_period > 0.0 && new_half_period.is_finite()) {
        return Err(Error::param("half_period", "must be positive"));
    }
    let old = profile.half_period();
    if new_half_period == old {
        return Ok(profile.clone());
    }
    let s = new_half_period / old;
    let alpha = profile.alpha;
    let k = s.powf(-alpha);
    let grid = Grid::new(profile.grid().n_points(), new_half_period)?;
    let phi = RealField::new(&grid, profile.phi.values().iter().map(|v| k * v).collect())?;
    let lambda = profile.lambda * s.powf(1.0 - 2.0 * alpha);
    WaveProfile::new(phi, k * profile.omega, k * k * profile.a_param, lambda, alpha)
}

/// Fourier-decay diagnostic for a computed profile.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessReport {
    /// `(p, max_k |f̂(k)|(1+|k|)^p / max_k |f̂(k)|)` for p = 2, 4, 6.
    pub weighted_max: Vec<(u32, f64)>,
    /// Largest relative coefficient among `|k| ≥ N/4`.
    pub tail_ratio: f64,
    /// `tail_ratio ≤ 1e−10`.
    pub resolved: bool,
}

pub fn smoothness_check(phi: &RealField) -> SmoothnessReport {
    let coeffs = phi.coeffs();
    let ks = phi.grid().wavenumbers();
    let n = phi.grid().n_points() as i64;
    let peak = coeffs.iter().fold(0.0, |m: f64, c| m.max(c.norm()));
    let rel = |c: f64| if peak > 0.0 { c / peak } else { 0.0 };
    let weighted_max = [2u32, 4, 6]
        .iter()
        .map(|&p| {
            let w = coeffs
                .iter()
                .zip(ks)
                .map(|(c, &k)| rel(c.norm()) * (1.0 + k.abs() as f64).powi(p as i32))
                .fold(0.0, f64::max);
            (p, w)
        })
        .collect();
    let tail_ratio = coeffs
        .iter()
        .zip(ks)
        .filter(|(_, &k)| 4 * k.abs() >= n)
        .map(|(c, _)| rel(c.norm()))
        .fold(0.0, f64::max);
    SmoothnessReport {
        weighted_max,
        tail_ratio,
        resolved: tail_ratio <= 1e-10,
    }
}
