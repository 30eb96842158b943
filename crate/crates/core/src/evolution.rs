//! Pseudospectral time integration of
//!
//! * fKdV: `u_t − Λ^α u_x + (u²)_x = 0` (real `u`),
//! * fNLS: `i u_t − Λ^α u + |u|u = 0` (complex `u`),
//!
//! by integrating-factor RK4 with 2/3-rule dealiasing, plus conservation
//! monitors and orbital distances modulo translation (and phase).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{assemble_lplus, sym_spectrum};
use crate::error::{Error, Result};
use crate::profile::WaveProfile;
use crate::spectral::{ComplexField, Grid, RealField, SobolevIndex};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equation {
    FKdV,
    FNls,
}

#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub equation: Equation,
    pub alpha: f64,
    pub dt: f64,
    pub t_final: f64,
    pub grid: Grid,
    pub dealias: bool,
    /// Record diagnostics every this many steps (the final step is always
    /// recorded).
    pub record_every: usize,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::param("alpha", "must lie in (0, 2]"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(self.t_final >= self.dt) {
            return Err(Error::param("t_final", "must be at least dt"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil() as usize
    }
}

/// Default time step: `min(1e−3, 1/(κ_max·(1 + ‖u₀‖∞)))` with `κ_max` the
/// largest retained frequency. The linear part is integrated exactly, so only
/// the nonlinear term's frequency content limits the step.
pub fn default_dt(grid: &Grid, equation: Equation, sup_u0: f64) -> f64 {
    let rate = match equation {
        Equation::FKdV => PI * (grid.n_points() / 3) as f64 / grid.half_period() * (1.0 + sup_u0),
        Equation::FNls => 1.0 + sup_u0,
    };
    (1.0 / rate).min(1e-3)
}

/// Integrating-factor RK4 stepper working on raw FFT coefficients.
///
/// For fKdV the spatial mean `ū` is an exact invariant, so with `u = ū + v`
/// the transport term `2ū v_x` of `(u²)_x` is linear with constant
/// coefficients and goes into the exact propagator; only `(v²)_x` is left to
/// RK4. This keeps the scheme accurate when a large mean would otherwise make
/// the nonlinear term stiff.
#[derive(Clone)]
pub struct Integrator {
    grid: Grid,
    equation: Equation,
    dt: f64,
    mean: f64,
    e_half: Vec<Complex64>,
    e_full: Vec<Complex64>,
    /// Multiplier applied to the transform of the nonlinearity.
    nl_mult: Vec<Complex64>,
}

impl Integrator {
    /// `dt` may be negative (backward integration). `mean` is the spatial
    /// mean of the fKdV solution (ignored for fNLS).
    pub fn new(equation: Equation, alpha: f64, dt: f64, grid: &Grid, dealias: bool, mean: f64) -> Result<Self> {
        if !(dt != 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", "must be nonzero and finite"));
        }
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::param("alpha", "must lie in (0, 2]"));
        }
        let sym = grid.symbol(alpha);
        let deriv = grid.derivative_multiplier();
        let mask = grid.dealias_mask();
        let keep = |j: usize| if !dealias || mask[j] { 1.0 } else { 0.0 };
        let n = grid.n_points();
        let linear: Vec<Complex64> = (0..n)
            .map(|j| match equation {
                Equation::FKdV => deriv[j] * (sym[j] - 2.0 * mean),
                Equation::FNls => Complex64::new(0.0, -sym[j]),
            })
            .collect();
        let nl_mult = (0..n)
            .map(|j| match equation {
                Equation::FKdV => -deriv[j] * keep(j),
                Equation::FNls => Complex64::new(0.0, keep(j)),
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            equation,
            dt,
            mean: if equation == Equation::FKdV { mean } else { 0.0 },
            e_half: linear.iter().map(|l| (l * (0.5 * dt)).exp()).collect(),
            e_full: linear.iter().map(|l| (l * dt).exp()).collect(),
            nl_mult,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn nonlinear(&self, uhat: &[Complex64], out: &mut [Complex64]) {
        let n = uhat.len();
        out.copy_from_slice(uhat);
        self.grid.ifft_raw(out);
        let inv_n = 1.0 / n as f64;
        match self.equation {
            Equation::FKdV => {
                for v in out.iter_mut() {
                    let u = v.re * inv_n - self.mean;
                    *v = Complex64::new(u * u, 0.0);
                }
            }
            Equation::FNls => {
                for v in out.iter_mut() {
                    let u = *v * inv_n;
                    *v = u * u.norm();
                }
            }
        }
        self.grid.fft_raw(out);
        for (v, m) in out.iter_mut().zip(&self.nl_mult) {
            *v *= m;
        }
    }

    /// Advance raw coefficients by one step.
    pub fn step_coeffs(&self, uhat: &mut [Complex64]) {
        let n = uhat.len();
        let dt = self.dt;
        let (eh, ef) = (&self.e_half, &self.e_full);
        let mut k1 = vec![ZERO; n];
        let mut k2 = vec![ZERO; n];
        let mut k3 = vec![ZERO; n];
        let mut k4 = vec![ZERO; n];
        let mut tmp = vec![ZERO; n];

        self.nonlinear(uhat, &mut k1);
        for j in 0..n {
            tmp[j] = eh[j] * (uhat[j] + 0.5 * dt * k1[j]);
        }
        self.nonlinear(&tmp, &mut k2);
        for j in 0..n {
            tmp[j] = eh[j] * uhat[j] + 0.5 * dt * k2[j];
        }
        self.nonlinear(&tmp, &mut k3);
        for j in 0..n {
            tmp[j] = ef[j] * uhat[j] + dt * eh[j] * k3[j];
        }
        self.nonlinear(&tmp, &mut k4);
        for j in 0..n {
            uhat[j] = ef[j] * uhat[j]
                + dt / 6.0 * (ef[j] * k1[j] + 2.0 * eh[j] * (k2[j] + k3[j]) + k4[j]);
        }
        if self.equation == Equation::FKdV {
            // Keep the exact Hermitian symmetry of a real field.
            let nyq = n / 2;
            uhat[0].im = 0.0;
            uhat[nyq].im = 0.0;
        }
    }
}

fn raw_coeffs(values: impl Iterator<Item = Complex64>, grid: &Grid) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.collect();
    grid.fft_raw(&mut buf);
    buf
}

fn raw_to_values(uhat: &[Complex64], grid: &Grid) -> Vec<Complex64> {
    let mut buf = uhat.to_vec();
    grid.ifft_raw(&mut buf);
    let inv_n = 1.0 / uhat.len() as f64;
    buf.iter_mut().for_each(|v| *v *= inv_n);
    buf
}

/// One dealiased IF-RK4 step of fKdV.
pub fn step_fkdv(u: &RealField, dt: f64, alpha: f64) -> Result<RealField> {
    let grid = u.grid();
    let mean = u.integral() / (2.0 * grid.half_period());
    let integ = Integrator::new(Equation::FKdV, alpha, dt, grid, true, mean)?;
    let mut uhat = raw_coeffs(u.values().iter().map(|&v| Complex64::new(v, 0.0)), grid);
    integ.step_coeffs(&mut uhat);
    let vals: Vec<f64> = raw_to_values(&uhat, grid).iter().map(|c| c.re).collect();
    check_finite(&vals.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>(), dt)?;
    RealField::new(grid, vals)
}

/// One dealiased IF-RK4 step of fNLS.
pub fn step_fnls(u: &ComplexField, dt: f64, alpha: f64) -> Result<ComplexField> {
    let grid = u.grid();
    let integ = Integrator::new(Equation::FNls, alpha, dt, grid, true, 0.0)?;
    let mut uhat = raw_coeffs(u.values().iter().copied(), grid);
    integ.step_coeffs(&mut uhat);
    let vals = raw_to_values(&uhat, grid);
    check_finite(&vals, dt)?;
    ComplexField::new(grid, vals)
}

fn check_finite(vals: &[Complex64], time: f64) -> Result<()> {
    if vals.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::BlowUp { time })
    }
}

/// A real (fKdV) or complex (fNLS) state.
#[derive(Debug, Clone)]
pub enum State {
    Real(RealField),
    Complex(ComplexField),
}

impl State {
    pub fn grid(&self) -> &Grid {
        match self {
            State::Real(f) => f.grid(),
            State::Complex(f) => f.grid(),
        }
    }

    pub fn to_complex(&self) -> ComplexField {
        match self {
            State::Real(f) => f.to_complex(),
            State::Complex(f) => f.clone(),
        }
    }

    pub fn norm_sup(&self) -> f64 {
        match self {
            State::Real(f) => f.norm_sup(),
            State::Complex(f) => f.norm_sup(),
        }
    }
}

/// Evolve `u0` to `t_final` and return the final state (no diagnostics).
pub fn evolve(u0: &State, cfg: &EvolutionConfig) -> Result<State> {
    cfg.validate()?;
    let mut out = u0.clone();
    run_loop(u0, cfg, |_, _| Ok(()), &mut out)?;
    Ok(out)
}

/// Shared time loop; `observe(t, state)` is called at t = 0 and at every
/// recording step.
fn run_loop(
    u0: &State,
    cfg: &EvolutionConfig,
    mut observe: impl FnMut(f64, &State) -> Result<()>,
    last: &mut State,
) -> Result<Option<f64>> {
    let grid = &cfg.grid;
    if u0.grid() != grid {
        return Err(Error::GridMismatch);
    }
    match (cfg.equation, u0) {
        (Equation::FKdV, State::Real(_)) | (Equation::FNls, State::Complex(_)) => {}
        _ => return Err(Error::param("initial state", "real for fKdV, complex for fNLS")),
    }
    let mask = grid.dealias_mask();
    let mut uhat = raw_coeffs(u0.to_complex().values().iter().copied(), grid);
    if cfg.dealias {
        for (c, keep) in uhat.iter_mut().zip(&mask) {
            if !keep {
                *c = ZERO;
            }
        }
    }
    let mean = uhat[0].re / grid.n_points() as f64;
    let integ = Integrator::new(cfg.equation, cfg.alpha, cfg.dt, grid, cfg.dealias, mean)?;
    let to_state = |uhat: &[Complex64]| -> Result<State> {
        let vals = raw_to_values(uhat, grid);
        Ok(match cfg.equation {
            Equation::FKdV => State::Real(RealField::new(grid, vals.iter().map(|c| c.re).collect())?),
            Equation::FNls => State::Complex(ComplexField::new(grid, vals)?),
        })
    };
    let start = to_state(&uhat)?;
    observe(0.0, &start)?;
    let limit = 1e6 * (1.0 + start.norm_sup());
    *last = start;
    let steps = cfg.n_steps();
    for s in 1..=steps {
        integ.step_coeffs(&mut uhat);
        let t = s as f64 * cfg.dt;
        let record = s % cfg.record_every == 0 || s == steps;
        if record {
            let state = to_state(&uhat)?;
            let sup = state.norm_sup();
            if !sup.is_finite() || sup > limit {
                return Ok(Some(t));
            }
            observe(t, &state)?;
            *last = state;
        } else if !uhat[1].re.is_finite() {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedTriple {
    /// `∫|u|²`.
    pub momentum_p: f64,
    /// `½‖Λ^{α/2}u‖² − ⅓∫u³` (fKdV) or `− ⅓∫|u|³` (fNLS).
    pub hamiltonian_h: f64,
    /// `∫u`.
    pub mass_m: Complex64,
}

pub fn conserved_real(u: &RealField, alpha: f64) -> ConservedTriple {
    let h = u.grid().spacing();
    let cubic = h * u.values().iter().map(|v| v * v * v).sum::<f64>();
    ConservedTriple {
        momentum_p: u.norm_l2().powi(2),
        hamiltonian_h: 0.5 * u.seminorm(alpha / 2.0).powi(2) - cubic / 3.0,
        mass_m: Complex64::new(u.integral(), 0.0),
    }
}

pub fn conserved_complex(u: &ComplexField, alpha: f64) -> ConservedTriple {
    let h = u.grid().spacing();
    let cubic = h * u.values().iter().map(|v| v.norm().powi(3)).sum::<f64>();
    ConservedTriple {
        momentum_p: u.norm_l2().powi(2),
        hamiltonian_h: 0.5 * u.seminorm(alpha / 2.0).powi(2) - cubic / 3.0,
        mass_m: u.integral(),
    }
}

pub fn conserved(u: &State, alpha: f64) -> ConservedTriple {
    match u {
        State::Real(f) => conserved_real(f, alpha),
        State::Complex(f) => conserved_complex(f, alpha),
    }
}

/// `S(y) = Σ_k g_k e^{iπky/T}` (cosine at the Nyquist slot) and its first two
/// derivatives in `y`.
struct ShiftSeries {
    g: Vec<Complex64>,
    freq: Vec<f64>,
    nyq: usize,
}

impl ShiftSeries {
    fn eval(&self, y: f64) -> (Complex64, Complex64, Complex64) {
        let (mut s, mut d1, mut d2) = (ZERO, ZERO, ZERO);
        for (j, (g, &k)) in self.g.iter().zip(&self.freq).enumerate() {
            if j == self.nyq {
                let (sn, cs) = (k * y).sin_cos();
                s += g * cs;
                d1 += g * (-k * sn);
                d2 += g * (-k * k * cs);
            } else {
                let e = Complex64::from_polar(1.0, k * y);
                s += g * e;
                d1 += g * e * Complex64::new(0.0, k);
                d2 += g * e * (-k * k);
            }
        }
        (s, d1, d2)
    }

    /// `S` at the grid shifts `y_m = 2Tm/N`.
    fn on_grid(&self, grid: &Grid) -> Vec<Complex64> {
        let mut buf = self.g.clone();
        grid.ifft_raw(&mut buf);
        buf
    }
}

/// Maximize `f(S(y))` over `y`: grid scan, golden section on the bracket of
/// the best grid point, then Newton on `f′`.
fn maximize_shift(
    series: &ShiftSeries,
    grid: &Grid,
    f: impl Fn(Complex64, Complex64, Complex64) -> (f64, f64, f64),
) -> f64 {
    let h = grid.spacing();
    let n = grid.n_points();
    let on_grid = series.on_grid(grid);
    let best_m = (0..n)
        .max_by(|&a, &b| {
            let fa = f(on_grid[a], ZERO, ZERO).0;
            let fb = f(on_grid[b], ZERO, ZERO).0;
            fa.total_cmp(&fb)
        })
        .unwrap_or(0);
    let centre = best_m as f64 * h;
    let value = |y: f64| {
        let (s, d1, d2) = series.eval(y);
        f(s, d1, d2)
    };
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (centre - h, centre + h);
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let (mut f1, mut f2) = (value(x1).0, value(x2).0);
    for _ in 0..40 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = value(x2).0;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = value(x1).0;
        }
    }
    // Near the peak f is flat to rounding, so golden section only pins y to
    // about √ε; Newton steps are accepted while they shrink |f′|.
    let mut y = 0.5 * (lo + hi);
    let (_, mut d1, mut d2) = value(y);
    for _ in 0..8 {
        if !(d2 < 0.0) {
            break;
        }
        let next = y - d1 / d2;
        if !((next - y).abs() <= h) {
            break;
        }
        let (_, n1, n2) = value(next);
        if !(n1.abs() < d1.abs()) {
            break;
        }
        y = next;
        d1 = n1;
        d2 = n2;
    }
    y
}

fn wrap(y: f64, half_period: f64) -> f64 {
    let p = 2.0 * half_period;
    let mut w = (y + half_period).rem_euclid(p) - half_period;
    if w >= half_period {
        w -= p;
    }
    w
}

/// `‖Σ w_k |shifted_k − φ̂_k|²‖^{1/2}` with `shifted_k = e^{−iθ}û_k e^{iκ_k y}`.
fn modulated_distance(u: &[Complex64], phi: &[Complex64], weights: &[f64], freq: &[f64], nyq: usize, y: f64, theta: f64) -> f64 {
    let rot = Complex64::from_polar(1.0, -theta);
    let mut acc = 0.0;
    for j in 0..u.len() {
        let shift = if j == nyq {
            Complex64::new((freq[j] * y).cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, freq[j] * y)
        };
        acc += weights[j] * (rot * u[j] * shift - phi[j]).norm_sqr();
    }
    acc.sqrt()
}

/// `inf_y ‖u(· + y) − φ‖_{H^s}`, returned with the minimizing `y ∈ [−T, T)`.
pub fn orbital_distance_kdv(u: &RealField, phi: &RealField, s: SobolevIndex) -> Result<(f64, f64)> {
    if u.grid() != phi.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid();
    let w = grid.sobolev_weights(s);
    let (uc, pc) = (u.coeffs(), phi.coeffs());
    let series = ShiftSeries {
        g: (0..uc.len()).map(|j| w[j] * uc[j] * pc[j].conj()).collect(),
        freq: grid.frequencies(),
        nyq: grid.nyquist_slot(),
    };
    let y = maximize_shift(&series, grid, |s, d1, d2| (s.re, d1.re, d2.re));
    let d = modulated_distance(uc, pc, &w, &series.freq, series.nyq, y, 0.0);
    Ok((d, wrap(y, grid.half_period())))
}

/// `inf_{y, θ} ‖e^{−iθ}u(· + y) − φ‖_{H^s}`, returned with the minimizing
/// `y ∈ [−T, T)` and `θ ∈ [0, 2π)`.
pub fn orbital_distance_nls(u: &ComplexField, phi: &RealField, s: SobolevIndex) -> Result<(f64, f64, f64)> {
    if u.grid() != phi.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid();
    let w = grid.sobolev_weights(s);
    let (uc, pc) = (u.coeffs(), phi.coeffs());
    let series = ShiftSeries {
        g: (0..uc.len()).map(|j| w[j] * uc[j] * pc[j].conj()).collect(),
        freq: grid.frequencies(),
        nyq: grid.nyquist_slot(),
    };
    // Maximize |S|² ; its derivatives are 2Re(S̄S′) and 2(|S′|² + Re(S̄S″)).
    let y = maximize_shift(&series, grid, |s, d1, d2| {
        (
            s.norm_sqr(),
            2.0 * (s.conj() * d1).re,
            2.0 * (d1.norm_sqr() + (s.conj() * d2).re),
        )
    });
    let (sy, _, _) = series.eval(y);
    let theta = sy.arg().rem_euclid(2.0 * PI);
    let d = modulated_distance(uc, pc, &w, &series.freq, series.nyq, y, theta);
    Ok((d, wrap(y, grid.half_period()), theta))
}

/// Diagnostics of a perturbed-wave evolution.
#[derive(Debug, Clone)]
pub struct StabilityRunReport {
    pub times: Vec<f64>,
    pub conserved: Vec<ConservedTriple>,
    pub orbital_distance: Vec<f64>,
    pub shifts: Vec<f64>,
    /// Zero for fKdV.
    pub phases: Vec<f64>,
    pub perturbation_size: f64,
    /// `max distance / δ`, or the maximal distance itself when `δ = 0`.
    pub verdict_ratio: f64,
    pub drift_p: f64,
    pub drift_h: f64,
    pub drift_m: f64,
    /// Time at which the run was stopped by blow-up detection.
    pub blew_up: Option<f64>,
}

fn rel_drift(values: impl Iterator<Item = f64>, reference: f64) -> f64 {
    let scale = reference.abs().max(f64::MIN_POSITIVE);
    values.map(|v| (v - reference).abs() / scale).fold(0.0, f64::max)
}

/// Evolve `φ + δ·q` and record conserved quantities and the modulated
/// `H^{α/2}` distance to the wave. The equation comes from `cfg`; `q` must be
/// real for fKdV and may be real or complex for fNLS.
pub fn run_experiment(profile: &WaveProfile, perturbation: &State, delta: f64, cfg: &EvolutionConfig) -> Result<StabilityRunReport> {
    cfg.validate()?;
    let phi = &profile.phi;
    if phi.grid() != &cfg.grid || perturbation.grid() != &cfg.grid {
        return Err(Error::GridMismatch);
    }
    let u0 = match (cfg.equation, perturbation) {
        (Equation::FKdV, State::Real(q)) => State::Real(phi.axpy(delta, q)?),
        (Equation::FKdV, State::Complex(_)) => {
            return Err(Error::param("perturbation", "fKdV needs a real perturbation"))
        }
        (Equation::FNls, q) => State::Complex(phi.to_complex().axpy(Complex64::new(delta, 0.0), &q.to_complex())?),
    };
    let s = SobolevIndex::energy(cfg.alpha);
    let mut times = Vec::new();
    let mut cons = Vec::new();
    let mut dist = Vec::new();
    let mut shifts = Vec::new();
    let mut phases = Vec::new();
    let observe = |t: f64, u: &State| -> Result<()> {
        times.push(t);
        cons.push(conserved(u, cfg.alpha));
        let (d, y, th) = match u {
            State::Real(f) => {
                let (d, y) = orbital_distance_kdv(f, phi, s)?;
                (d, y, 0.0)
            }
            State::Complex(f) => orbital_distance_nls(f, phi, s)?,
        };
        dist.push(d);
        shifts.push(y);
        phases.push(th);
        Ok(())
    };
    let mut last = u0.clone();
    let blew_up = run_loop(&u0, cfg, observe, &mut last)?;
    let c0 = cons[0];
    let drift_p = rel_drift(cons.iter().map(|c| c.momentum_p), c0.momentum_p);
    let drift_h = rel_drift(cons.iter().map(|c| c.hamiltonian_h), c0.hamiltonian_h);
    let m0 = c0.mass_m.norm();
    let drift_m = cons
        .iter()
        .map(|c| (c.mass_m - c0.mass_m).norm() / m0.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let max_dist = dist.iter().copied().fold(0.0, f64::max);
    let verdict_ratio = if delta > 0.0 { max_dist / delta } else { max_dist };
    Ok(StabilityRunReport {
        times,
        conserved: cons,
        orbital_distance: dist,
        shifts,
        phases,
        perturbation_size: delta,
        verdict_ratio,
        drift_p,
        drift_h,
        drift_m,
        blew_up,
    })
}

/// Gram–Schmidt `f` against `basis` in L² (zero basis elements are skipped).
fn orthogonalize(f: &RealField, basis: &[RealField]) -> Result<RealField> {
    let mut out = f.clone();
    let mut done: Vec<RealField> = Vec::new();
    for b in basis {
        let mut v = b.clone();
        for d in &done {
            v = v.axpy(-v.inner_l2(d)?, d)?;
        }
        let nv = v.norm_l2();
        if nv > 1e-10 * b.norm_l2().max(f64::MIN_POSITIVE) && nv > 0.0 {
            done.push(v.scale(1.0 / nv));
        }
    }
    for _ in 0..2 {
        for d in &done {
            out = out.axpy(-out.inner_l2(d)?, d)?;
        }
    }
    Ok(out)
}

fn random_modes(grid: &Grid, rng: &mut ChaCha8Rng) -> RealField {
    let n = grid.n_points();
    let kmax = (n / 8).max(1);
    let t = grid.half_period();
    let modes: Vec<(f64, f64, f64)> = (1..=kmax)
        .map(|k| (k as f64, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    RealField::from_fn(grid, |x| {
        modes
            .iter()
            .map(|&(k, c, s)| {
                let arg = PI * k * x / t;
                // Decaying amplitudes keep the field smooth.
                (c * arg.cos() + s * arg.sin()) / (1.0 + k * k)
            })
            .sum()
    })
}

fn normalize_sobolev(f: RealField, s: SobolevIndex) -> Result<RealField> {
    let norm = f.norm_sobolev(s);
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(f.scale(1.0 / norm))
}

/// Random real perturbation with modes `1 ≤ |k| ≤ N/8`, L²-orthogonal to `φ`
/// and `φ'`, normalized to unit `H^{α/2}` norm.
pub fn random_real_perturbation(profile: &WaveProfile, seed: u64) -> Result<RealField> {
    let phi = &profile.phi;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_modes(phi.grid(), &mut rng);
    let q = orthogonalize(&q, &[phi.clone(), phi.derivative()])?;
    normalize_sobolev(q, SobolevIndex::energy(profile.alpha))
}

/// Random complex perturbation; real and imaginary parts are each
/// L²-orthogonal to `φ` and `φ'`, and the sum has unit `H^{α/2}` norm.
pub fn random_complex_perturbation(profile: &WaveProfile, seed: u64) -> Result<ComplexField> {
    let phi = &profile.phi;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = [phi.clone(), phi.derivative()];
    let re = orthogonalize(&random_modes(phi.grid(), &mut rng), &basis)?;
    let im = orthogonalize(&random_modes(phi.grid(), &mut rng), &basis)?;
    let s = SobolevIndex::energy(profile.alpha);
    let norm = (re.norm_sobolev(s).powi(2) + im.norm_sobolev(s).powi(2)).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    let vals = re
        .values()
        .iter()
        .zip(im.values())
        .map(|(&a, &b)| Complex64::new(a, b) / norm)
        .collect();
    ComplexField::new(phi.grid(), vals)
}

/// Ground state `χ` of `L₊`, signed to be positive at the centre and
/// normalized to unit `H^{α/2}` norm.
pub fn lowest_eigen_perturbation(profile: &WaveProfile) -> Result<RealField> {
    let spec = sym_spectrum(&assemble_lplus(profile))?;
    let chi = spec.vectors[0].clone();
    let c = chi.grid().center_index();
    let chi = if chi.values()[c] < 0.0 { chi.scale(-1.0) } else { chi };
    normalize_sobolev(chi, SobolevIndex::energy(profile.alpha))
}
