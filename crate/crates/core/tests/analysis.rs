use std::f64::consts::PI;
use std::sync::OnceLock;

use fracwave::analysis::*;
use fracwave::profile::{minimize, random_seed};
use fracwave::{Grid, RealField, SolverOptions, WaveProfile};
use num_complex::Complex64;

fn constant_wave(n: usize, c: f64, alpha: f64) -> WaveProfile {
    let g = Grid::new(n, 1.0).unwrap();
    WaveProfile::new(RealField::constant(&g, c), c, 0.0, 2.0 * c * c, alpha).unwrap()
}

fn long_wave(n: usize) -> WaveProfile {
    minimize(5.0, 0.0, 2.0, &Grid::new(n, 8.0).unwrap(), &SolverOptions::default()).unwrap()
}

fn long_wave_256() -> &'static WaveProfile {
    static W: OnceLock<WaveProfile> = OnceLock::new();
    W.get_or_init(|| long_wave(256))
}

fn apply(op: &OperatorMatrix, v: &RealField) -> RealField {
    let out = &op.entries * nalgebra::DVector::from_column_slice(v.values());
    RealField::new(v.grid(), out.as_slice().to_vec()).unwrap()
}

/// `L₊v` through the FFT, for comparison with the dense assembly.
fn lplus_fft(p: &WaveProfile, v: &RealField) -> RealField {
    let lap = v.apply_symbol(p.alpha).unwrap();
    let pot = p.phi.map(|x| p.omega - 2.0 * x);
    lap.zip_map(&pot.zip_map(v, |a, b| a * b).unwrap(), |a, b| a + b).unwrap()
}

fn nearest(values: &[Complex64], target: Complex64) -> f64 {
    values.iter().map(|z| (z - target).norm()).fold(f64::INFINITY, f64::min)
}

#[test]
fn constant_state_closed_forms() {
    let p = constant_wave(32, 1.0, 1.0);
    let r = analyze(&p, Problem::KdV).unwrap();
    // L₊ has symbol π|k| − 1 and L₋ has symbol π|k|.
    assert_eq!(r.n_neg_plus, 1);
    assert!((r.eigenvalues_lplus[0] + 1.0).abs() < 1e-12);
    assert!((r.eigenvalues_lplus[1] - (PI - 1.0)).abs() < 1e-12);
    assert_eq!(r.kernel_dim_plus, 0);
    assert_eq!(r.n_neg_minus, 0);
    assert_eq!(r.kernel_dim_minus, 1);
    assert!(r.eigenvalues_lminus[0].abs() < 1e-12);
    assert!((r.eigenvalues_lminus[1] - PI).abs() < 1e-12);
    assert!((r.vk_index.unwrap() + 2.0).abs() < 1e-12);
    assert!((r.coercivity_kappa - (PI - 1.0)).abs() < 1e-10);
    assert_eq!(r.translation_modes, 0);
}

#[test]
fn constant_state_dynamical_spectra() {
    let p = constant_wave(32, 1.0, 1.0);
    let kdv = kdv_dynamical_spectrum(&p).unwrap();
    let nls = nls_dynamical_spectrum(&p).unwrap();
    for k in 1..=5 {
        let k = k as f64;
        let disp = PI * k * (PI * k - 1.0);
        assert!(nearest(&kdv.eigenvalues, Complex64::new(0.0, disp)) < 1e-10);
        assert!(nearest(&kdv.eigenvalues, Complex64::new(0.0, -disp)) < 1e-10);
        let w = ((PI * k - 1.0) * PI * k).sqrt();
        assert!(nearest(&nls.eigenvalues, Complex64::new(0.0, w)) < 1e-10);
        assert!(nearest(&nls.eigenvalues, Complex64::new(0.0, -w)) < 1e-10);
    }
    assert!(kdv.max_real_part <= 1e-8);
    // λ² = −(π|k|−1)π|k| at k = 0 vanishes; at k=±1 it is negative, so the
    // constant is spectrally stable for NLS as well.
    assert!(nls.max_real_part <= 1e-8);
}

#[test]
fn zero_state_with_unit_frequency() {
    let g = Grid::new(32, 1.0).unwrap();
    let p = WaveProfile::new(RealField::zeros(&g), 1.0, 0.0, 1.0, 1.5).unwrap();
    let spec = sym_spectrum(&assemble_lplus(&p)).unwrap();
    assert!((spec.values[0] - 1.0).abs() < 1e-12);
    let kappa = coercivity_gap(&assemble_lplus(&p), &[]).unwrap();
    assert!((kappa - 1.0).abs() < 1e-12);
}

#[test]
fn dense_assembly_matches_fft_application() {
    let p = long_wave(128);
    let lp = assemble_lplus(&p);
    for seed in 0..3 {
        let v = random_seed(p.grid(), 1.0, seed).unwrap();
        let dense = apply(&lp, &v);
        let fft = lplus_fft(&p, &v);
        let err = dense.axpy(-1.0, &fft).unwrap().norm_l2() / fft.norm_l2();
        assert!(err < 1e-12, "{err:e}");
    }
}

#[test]
fn lplus_is_self_adjoint() {
    let p = long_wave(128);
    let lp = assemble_lplus(&p);
    let u = random_seed(p.grid(), 1.0, 1).unwrap();
    let v = random_seed(p.grid(), 1.0, 2).unwrap().derivative();
    let left = lplus_fft(&p, &u).inner_l2(&v).unwrap();
    let right = u.inner_l2(&lplus_fft(&p, &v)).unwrap();
    assert!((left - right).abs() < 1e-10 * left.abs().max(1.0));
    assert!(sym_spectrum(&lp).is_ok());
    assert!(sym_spectrum(&assemble_kdv(&p)).is_err());
}

#[test]
fn eigenvectors_are_orthonormal_and_accurate() {
    let p = long_wave(64);
    let lp = assemble_lplus(&p);
    let spec = sym_spectrum(&lp).unwrap();
    for i in 0..spec.vectors.len() {
        for j in i..spec.vectors.len().min(i + 4) {
            let ip = spec.vectors[i].inner_l2(&spec.vectors[j]).unwrap();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((ip - want).abs() < 1e-12, "({i},{j}) {ip}");
        }
        let v = &spec.vectors[i];
        let r = apply(&lp, v).axpy(-spec.values[i], v).unwrap().norm_l2();
        assert!(r < 1e-9 * spec.norm, "residual {r:e} at {i}");
    }
}

#[test]
fn nonconstant_wave_indices() {
    let p = long_wave_256();
    let r = analyze(p, Problem::Nls).unwrap();
    assert_eq!(r.n_neg_plus, 1);
    assert_eq!(r.kernel_dim_plus, 1);
    assert_eq!(r.translation_modes, 1);
    let dphi = p.phi.derivative();
    let k = &r.kernel_vectors[0];
    let cos = k.inner_l2(&dphi).unwrap().abs() / (k.norm_l2() * dphi.norm_l2());
    assert!(cos > 1.0 - 1e-8, "{cos}");
    assert!(r.phi_kernel_angle <= 1e-8);
    assert!(r.vk_index.unwrap() < 0.0);
    assert!(r.coercivity_kappa > 0.0);
    assert!(r.sturm.passed());
    assert_eq!(r.verdict, Verdict::SpectrallyStable);
}

#[test]
fn vk_index_is_resolved() {
    let coarse = analyze(&long_wave(128), Problem::KdV).unwrap().vk_index.unwrap();
    let fine = analyze(long_wave_256(), Problem::KdV).unwrap().vk_index.unwrap();
    assert!((coarse - fine).abs() <= 1e-6 * fine.abs(), "{coarse} vs {fine}");
}

#[test]
fn translation_mode_has_two_sign_changes() {
    assert_eq!(sign_changes(&long_wave_256().phi.derivative()), 2);
    let g = Grid::new(64, 1.0).unwrap();
    assert_eq!(sign_changes(&RealField::from_fn(&g, |x| (3.0 * PI * x).sin())), 6);
    assert_eq!(sign_changes(&RealField::constant(&g, 1.0)), 0);
}

#[test]
fn dynamical_spectrum_has_hamiltonian_symmetry() {
    let p = long_wave(64);
    for spec in [kdv_dynamical_spectrum(&p).unwrap(), nls_dynamical_spectrum(&p).unwrap()] {
        let scale = spec.eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for z in &spec.eigenvalues {
            assert!(nearest(&spec.eigenvalues, -z) < 1e-8 * scale);
            assert!(nearest(&spec.eigenvalues, z.conj()) < 1e-8 * scale);
        }
        assert!(spec.max_real_part <= 1e-8, "{:e}", spec.max_real_part);
    }
}

#[test]
fn extra_negative_directions_block_stability() {
    // φ ≡ 4 with ω = 4: L₊ has symbol π|k| − 4, negative for k = 0, ±1.
    let p = constant_wave(32, 4.0, 1.0);
    for problem in [Problem::KdV, Problem::Nls] {
        let r = analyze(&p, problem).unwrap();
        assert_eq!(r.n_neg_plus, 3);
        assert!(!index_conditions_hold(&r, problem));
        assert_ne!(r.verdict, Verdict::SpectrallyStable);
    }
}

#[test]
fn count_negative_examples() {
    assert_eq!(count_negative(&[-1.0, -1e-9, 0.0, 2.0], 1e-8), (1, 2));
    assert_eq!(count_negative(&[], 1e-8), (0, 0));
}
