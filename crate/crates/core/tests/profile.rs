use std::f64::consts::PI;

use fracwave::profile::*;
use fracwave::{Error, Grid, RealField, SolverOptions, WaveProfile};

fn unit_grid(n: usize) -> Grid {
    Grid::new(n, 1.0).unwrap()
}

#[test]
fn omega_formulas_on_constants() {
    let g = unit_grid(32);
    let one = RealField::constant(&g, 1.0);
    let two = RealField::constant(&g, 2.0);
    assert!((omega_from_energy(&one, 0.0, 2.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
    assert!((omega_from_energy(&two, 0.0, 8.0, 1.0).unwrap() - 2.0).abs() < 1e-14);
    assert!((omega_from_mass(&one, 0.0, 2.0).unwrap() - 1.0).abs() < 1e-14);
    assert!((omega_from_mass(&one, 0.5, 2.0).unwrap() - 0.5).abs() < 1e-14);
    let cos = RealField::from_fn(&g, |x| (PI * x).cos());
    assert!(matches!(omega_from_mass(&cos, 0.0, 1.0), Err(Error::VanishingMean(_))));
}

#[test]
fn residual_of_constants() {
    let g = unit_grid(32);
    let one = RealField::constant(&g, 1.0);
    assert!(residual(&one, 1.0, 0.0, 1.5).unwrap() < 1e-14);
    assert!((residual(&one, 2.0, 0.0, 1.5).unwrap() - 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn small_mass_minimizer_is_nearly_constant() {
    let lambda = 0.01;
    let p = minimize(lambda, 0.0, 2.0, &unit_grid(128), &SolverOptions::default()).unwrap();
    let bound = -lambda.powf(1.5) / (3.0 * 2f64.sqrt());
    assert!(p.energy <= bound + 1e-15, "{} > {}", p.energy, bound);
    let c = (lambda / 2.0).sqrt();
    assert!(p.phi.values().iter().all(|v| (v - c).abs() < 1e-6 * c));
}

#[test]
fn minimizer_beats_the_constant_test_function() {
    let p = minimize(2.0, 0.0, 2.0, &unit_grid(128), &SolverOptions::default()).unwrap();
    assert!(p.energy <= -2.0 / 3.0 + 1e-12);
    assert!(p.residual_l2 <= 1e-10 * (1.0 + p.phi.norm_l2()));
}

/// Shooting oracle for `φ'' = ωφ − φ²` on `[0, T]` with `φ'(0) = φ'(T) = 0`
/// and `∫_{−T}^{T} φ² = λ`, by RK4 and a 2×2 Newton iteration in
/// `(φ(0), ω)`. Returns `φ` at `x = m·h/sub`, `m = 0..=n_half·sub`.
fn shoot(peak: f64, omega: f64, t: f64, n_half: usize, sub: usize) -> (Vec<f64>, f64) {
    let h = t / (n_half * sub) as f64;
    let rhs = |w: f64, y: [f64; 2]| [y[1], w * y[0] - y[0] * y[0]];
    let integrate = |p0: f64, w: f64| {
        let mut y = [p0, 0.0];
        let mut path = vec![p0];
        let mut mass = 0.0;
        for _ in 0..n_half * sub {
            let k1 = rhs(w, y);
            let k2 = rhs(w, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = rhs(w, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = rhs(w, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            let prev = y[0];
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            // Trapezoid rule; h is small enough for the tolerances below.
            mass += 0.5 * h * (prev * prev + y[0] * y[0]);
            path.push(y[0]);
        }
        (path, y[1], 2.0 * mass)
    };
    let (mut p0, mut w) = (peak, omega);
    let target = 5.0;
    for _ in 0..30 {
        let f = |p0: f64, w: f64| {
            let (_, slope, mass) = integrate(p0, w);
            [slope, mass - target]
        };
        let f0 = f(p0, w);
        let e = 1e-7;
        let fp = f(p0 + e, w);
        let fw = f(p0, w + e);
        let j = [
            [(fp[0] - f0[0]) / e, (fw[0] - f0[0]) / e],
            [(fp[1] - f0[1]) / e, (fw[1] - f0[1]) / e],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let dp = -(j[1][1] * f0[0] - j[0][1] * f0[1]) / det;
        let dw = -(-j[1][0] * f0[0] + j[0][0] * f0[1]) / det;
        p0 += dp;
        w += dw;
        if dp.abs().max(dw.abs()) < 1e-13 {
            break;
        }
    }
    (integrate(p0, w).0, w)
}

#[test]
fn alpha_two_profile_matches_shooting_oracle() {
    let t = 8.0;
    let n = 256;
    let p = minimize(5.0, 0.0, 2.0, &Grid::new(n, t).unwrap(), &SolverOptions::default()).unwrap();
    let c = n / 2;
    let sub = 64;
    let (path, w) = shoot(p.phi.values()[c], p.omega, t, n / 2, sub);
    // Trapezoid mass error is O(h²) ≈ 1e-8 relative at this step size.
    assert!((w - p.omega).abs() < 1e-6, "ω {w} vs {}", p.omega);
    let worst = (0..=n / 2)
        .map(|m| (p.phi.values()[(c + m) % n] - path[m * sub]).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "L∞ mismatch {worst:e}");
}

#[test]
fn newton_polish_fixed_point_and_recovery() {
    let g = unit_grid(64);
    let exact = WaveProfile::new(RealField::constant(&g, 1.0), 1.0, 0.0, 2.0, 1.0).unwrap();
    let again = newton_polish(&exact, 1e-12).unwrap();
    let moved = again.phi.axpy(-1.0, &exact.phi).unwrap().norm_sup();
    assert!(moved <= 1e-14 && (again.omega - 1.0).abs() <= 1e-14);

    let bumped = RealField::from_fn(&g, |x| 1.0 + 1e-3 * (PI * x).cos());
    let start = WaveProfile::new(bumped, 1.0, 0.0, 2.0, 1.0).unwrap();
    let fixed = newton_polish(&start, 1e-12).unwrap();
    assert!(fixed.residual_l2 <= 1e-12 * (1.0 + fixed.phi.norm_l2()));
    assert!((fixed.phi.norm_l2().powi(2) - 2.0).abs() < 1e-12);
}

#[test]
fn newton_polish_rejects_far_inputs() {
    let g = unit_grid(64);
    let noise = random_seed(&g, 2.0, 7).unwrap();
    let start = WaveProfile::new(noise, 3.0, 0.0, 2.0, 2.0).unwrap();
    assert!(matches!(newton_polish(&start, 1e-12), Err(Error::NewtonDiverged { .. })));
}

#[test]
fn rescaling() {
    let g = unit_grid(64);
    let p = WaveProfile::new(RealField::constant(&g, 1.0), 1.0, 0.0, 2.0, 1.0).unwrap();
    let same = rescale_wave(&p, 1.0).unwrap();
    assert_eq!(same.phi.values(), p.phi.values());
    let r = rescale_wave(&p, 2.0).unwrap();
    assert!(r.phi.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
    assert!((r.omega - 0.5).abs() < 1e-15);
    assert!(r.residual_l2 < 1e-15);
    assert!(rescale_wave(&p, 0.0).is_err());

    let alpha = 1.5;
    let q = minimize(3.0, 0.0, alpha, &unit_grid(128), &SolverOptions::default()).unwrap();
    let big = rescale_wave(&q, 3.0).unwrap();
    // φ, ω and a pick up T^{−α}, T^{−α}, T^{−2α}; the L² norm picks up √T.
    let scaled = q.residual_l2 * 3f64.powf(-2.0 * alpha) * 3f64.sqrt();
    assert!(big.residual_l2 <= 10.0 * scaled + 1e-15, "{} vs {}", big.residual_l2, scaled);
}

#[test]
fn smoothness_reports() {
    let g = unit_grid(128);
    assert!(smoothness_check(&RealField::constant(&g, 1.0)).resolved);
    let noise = RealField::new(&g, (0..128).map(|j| ((j * 7919) % 113) as f64 / 113.0 - 0.5).collect()).unwrap();
    assert!(!smoothness_check(&noise).resolved);
    let p = minimize(5.0, 0.0, 2.0, &Grid::new(256, 8.0).unwrap(), &SolverOptions::default()).unwrap();
    let report = smoothness_check(&p.phi);
    assert!(report.tail_ratio <= 1e-10, "{}", report.tail_ratio);
}

#[test]
fn gradient_is_tangent() {
    let g = unit_grid(64);
    for seed in 0..5 {
        let phi = random_seed(&g, 3.0, seed).unwrap();
        let grad = constrained_gradient(&phi, 0.2, 1.5, 3.0).unwrap();
        let dot = grad.inner_l2(&phi).unwrap().abs();
        assert!(dot <= 1e-10 * grad.norm_l2() * phi.norm_l2());
    }
}

#[test]
fn omega_sign_follows_a() {
    let g = unit_grid(128);
    let opts = SolverOptions::default();
    for (lambda, a, positive) in [(2.0, -0.5, true), (2.0, 0.0, true), (0.5, 0.5, false), (2.0, 0.5, true)] {
        let p = minimize(lambda, a, 2.0, &g, &opts).unwrap();
        assert_eq!(p.omega > 0.0, positive, "λ={lambda} a={a} ω={}", p.omega);
    }
}

#[test]
fn grid_refinement_converges() {
    let opts = SolverOptions::default();
    let coarse = minimize(5.0, 0.0, 2.0, &Grid::new(128, 8.0).unwrap(), &opts).unwrap();
    let fine = minimize(5.0, 0.0, 2.0, &Grid::new(256, 8.0).unwrap(), &opts).unwrap();
    let diff = (0..128)
        .map(|j| (coarse.phi.values()[j] - fine.phi.values()[2 * j]).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-8, "{diff:e}");
}

#[test]
fn multistart_agrees_and_is_bell_shaped() {
    let g = Grid::new(128, 8.0).unwrap();
    let ms = minimize_multistart(4.0, 0.0, 2.0, &g, &SolverOptions::default()).unwrap();
    assert!(ms.seed_disagreement <= 1e-8);
    assert!(ms.energies.iter().all(Option::is_some));
    assert!(is_bell_shaped(&ms.best.phi, 1e-10));
    assert!(ms.best.omega_consistency <= 1e-6);
}

#[test]
fn invalid_parameters_are_rejected() {
    let g = unit_grid(32);
    let opts = SolverOptions::default();
    assert!(minimize(-1.0, 0.0, 2.0, &g, &opts).is_err());
    assert!(minimize(1.0, 0.0, 0.4, &g, &opts).is_err());
    assert!(minimize(1.0, f64::NAN, 2.0, &g, &opts).is_err());
}
