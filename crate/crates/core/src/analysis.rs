//! Linearized operators `L₊ = Λ^α + ω − 2φ`, `L₋ = Λ^α + ω − φ` about a
//! profile, their spectra, and the index-based stability verdict.
//!
//! All matrices act on nodal values. The nodal and unitary Fourier bases are
//! related by a unitary change of variables, so spectra coincide; L² inner
//! products are `h·(Euclidean)`, and eigenvectors returned as fields are
//! L²-normalized.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense;
use crate::error::{Error, Result};
use crate::profile::WaveProfile;
use crate::spectral::{Grid, RealField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    Lplus,
    Lminus,
    KdVLinearization,
    NLSLinearization,
}

impl OperatorKind {
    pub fn is_symmetric(self) -> bool {
        matches!(self, OperatorKind::Lplus | OperatorKind::Lminus)
    }
}

/// Dense operator in the nodal basis. The NLS linearization acts on
/// `(Re v, Im v)` stacked, so its dimension is `2N`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub grid: Grid,
    pub kind: OperatorKind,
    pub entries: DMatrix<f64>,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Problem {
    KdV,
    Nls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    SpectrallyStable,
    Unstable,
    Inconclusive,
}

fn schrodinger(profile: &WaveProfile, kind: OperatorKind, weight: f64) -> OperatorMatrix {
    let grid = profile.grid().clone();
    let potential: Vec<f64> = profile
        .phi
        .values()
        .iter()
        .map(|p| profile.omega - weight * p)
        .collect();
    let m = dense::schrodinger_matrix(&grid, profile.alpha, &potential);
    // The circulant part is symmetric only up to FFT rounding.
    let entries = (&m + m.transpose()) * 0.5;
    OperatorMatrix {
        grid,
        kind,
        entries,
        omega: profile.omega,
    }
}

pub fn assemble_lplus(profile: &WaveProfile) -> OperatorMatrix {
    schrodinger(profile, OperatorKind::Lplus, 2.0)
}

pub fn assemble_lminus(profile: &WaveProfile) -> OperatorMatrix {
    schrodinger(profile, OperatorKind::Lminus, 1.0)
}

/// `∂x L₊`.
pub fn assemble_kdv(profile: &WaveProfile) -> OperatorMatrix {
    let lp = assemble_lplus(profile);
    let d = dense::derivative_matrix(&lp.grid);
    OperatorMatrix {
        entries: d * &lp.entries,
        kind: OperatorKind::KdVLinearization,
        ..lp
    }
}

/// `[[0, L₋], [−L₊, 0]]` on `(Re v, Im v)`.
pub fn assemble_nls(profile: &WaveProfile) -> OperatorMatrix {
    let lp = assemble_lplus(profile);
    let lm = assemble_lminus(profile);
    let n = lp.grid.n_points();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, n), (n, n)).copy_from(&lm.entries);
    m.view_mut((n, 0), (n, n)).copy_from(&(-&lp.entries));
    OperatorMatrix {
        entries: m,
        kind: OperatorKind::NLSLinearization,
        ..lp
    }
}

/// Full spectrum of a symmetric operator, ascending, with L²-orthonormal
/// eigenvectors.
#[derive(Debug, Clone)]
pub struct SymSpectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<RealField>,
    /// Largest eigenvalue magnitude.
    pub norm: f64,
}

impl SymSpectrum {
    /// Eigenvectors as unit Euclidean columns, in the order of `values`.
    fn unit_columns(&self) -> Vec<DVector<f64>> {
        self.vectors
            .iter()
            .map(|v| {
                let h = v.grid().spacing();
                DVector::from_iterator(v.values().len(), v.values().iter().map(|x| x * h.sqrt()))
            })
            .collect()
    }

    /// Pseudo-inverse applied to `rhs` (nodal values), skipping eigenvalues
    /// with `|μ| ≤ tol`.
    pub fn deflated_solve(&self, rhs: &[f64], tol: f64) -> Vec<f64> {
        let b = DVector::from_column_slice(rhs);
        let mut x = DVector::zeros(rhs.len());
        for (mu, v) in self.values.iter().zip(self.unit_columns()) {
            if mu.abs() > tol {
                x += &v * (v.dot(&b) / mu);
            }
        }
        x.as_slice().to_vec()
    }
}

pub fn sym_spectrum(op: &OperatorMatrix) -> Result<SymSpectrum> {
    if !op.kind.is_symmetric() {
        return Err(Error::NotHermitian(f64::INFINITY));
    }
    let m = &op.entries;
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax() / scale;
    if asym > 1e-12 {
        return Err(Error::NotHermitian(asym));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigensolver("symmetric QR iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let h = op.grid.spacing();
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let col = eig.eigenvectors.column(i);
            RealField::new(&op.grid, col.iter().map(|x| x / h.sqrt()).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let norm = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(SymSpectrum { values, vectors, norm })
}

/// Default kernel threshold: `1e−7` relative to the operator norm.
pub fn kernel_tol(spec: &SymSpectrum) -> f64 {
    1e-7 * spec.norm.max(1.0)
}

/// `(#{μ < −tol}, #{|μ| ≤ tol})`.
pub fn count_negative(values: &[f64], tol: f64) -> (usize, usize) {
    let neg = values.iter().filter(|&&v| v < -tol).count();
    let ker = values.iter().filter(|&&v| v.abs() <= tol).count();
    (neg, ker)
}

/// Eigenvectors whose eigenvalues lie in `[−tol, tol]`.
pub fn kernel_basis(spec: &SymSpectrum, tol: f64) -> Vec<RealField> {
    spec.values
        .iter()
        .zip(&spec.vectors)
        .filter(|(v, _)| v.abs() <= tol)
        .map(|(_, f)| f.clone())
        .collect()
}

/// `max |⟨φ, v⟩|/(‖φ‖‖v‖)` over the kernel basis; 0 for an empty kernel.
pub fn weak_nondegeneracy(phi: &RealField, kernel: &[RealField]) -> Result<f64> {
    let pn = phi.norm_l2();
    let mut worst = 0.0f64;
    for v in kernel {
        let denom = pn * v.norm_l2();
        if denom > 0.0 {
            worst = worst.max(phi.inner_l2(v)?.abs() / denom);
        }
    }
    Ok(worst)
}

/// Tolerance of the weak non-degeneracy test.
pub const WEAK_NONDEGENERACY_TOL: f64 = 1e-8;

/// Vakhitov–Kolokolov index `⟨L₊⁻¹φ, φ⟩`, with the inverse taken on the
/// complement of the numerical kernel.
pub fn vk_index(phi: &RealField, lplus: &SymSpectrum, tol: f64) -> Result<f64> {
    let kernel = kernel_basis(lplus, tol);
    let angle = weak_nondegeneracy(phi, &kernel)?;
    if angle > WEAK_NONDEGENERACY_TOL {
        return Err(Error::IllPosed(format!(
            "profile is not orthogonal to Ker L+ (cosine {angle:e})"
        )));
    }
    let w = lplus.deflated_solve(phi.values(), tol);
    let w = RealField::new(phi.grid(), w)?;
    w.inner_l2(phi)
}

/// Smallest eigenvalue of `op` restricted to the L²-orthogonal complement of
/// `span`. Elements of `span` that are (numerically) zero or dependent are
/// ignored.
pub fn coercivity_gap(op: &OperatorMatrix, span: &[RealField]) -> Result<f64> {
    if !op.kind.is_symmetric() {
        return Err(Error::NotHermitian(f64::INFINITY));
    }
    let n = op.grid.n_points();
    let q = orthonormal_columns(span.iter().map(|f| DVector::from_column_slice(f.values())), n);
    let m = &op.entries;
    let mut p = DMatrix::<f64>::identity(n, n);
    for c in &q {
        p -= c * c.transpose();
    }
    let shift = 2.0 * m.amax() * n as f64 + 1.0;
    let mut reduced = &p * m * &p;
    for c in &q {
        reduced += c * c.transpose() * shift;
    }
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(reduced, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigensolver("symmetric QR iteration did not converge".into()))?;
    Ok(eig.eigenvalues.min())
}

/// Modified Gram–Schmidt (twice) in the Euclidean inner product, dropping
/// vectors that are negligible relative to their original size.
fn orthonormal_columns(vs: impl IntoIterator<Item = DVector<f64>>, n: usize) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in vs {
        assert_eq!(v.len(), n);
        let size = v.norm();
        if size == 0.0 {
            continue;
        }
        let mut w = v;
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&w);
                w -= q * c;
            }
        }
        let rest = w.norm();
        if rest > 1e-8 * size {
            out.push(w / rest);
        }
    }
    out
}

/// Cyclic sign-change counts of eigenfunctions.
#[derive(Debug, Clone, Serialize)]
pub struct SturmReport {
    /// Sign changes of eigenfunction `n` (0-based, ascending eigenvalue).
    pub counts: Vec<usize>,
    /// Indices `n` with more than `2n` sign changes.
    pub violations: Vec<usize>,
}

impl SturmReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Number of sign changes around the periodic cell, ignoring samples below
/// `1e−8` of the maximum.
pub fn sign_changes(f: &RealField) -> usize {
    let v = f.values();
    let floor = 1e-8 * f.norm_sup();
    let signs: Vec<bool> = v.iter().filter(|x| x.abs() > floor).map(|&x| x > 0.0).collect();
    if signs.len() < 2 {
        return 0;
    }
    let mut count = signs.windows(2).filter(|w| w[0] != w[1]).count();
    if signs[0] != signs[signs.len() - 1] {
        count += 1;
    }
    count
}

pub fn sturm_sign_check(eigenvectors: &[RealField], n_max: usize) -> SturmReport {
    let counts: Vec<usize> = eigenvectors.iter().take(n_max + 1).map(sign_changes).collect();
    let violations = counts
        .iter()
        .enumerate()
        .filter(|&(n, &c)| c > 2 * n)
        .map(|(n, _)| n)
        .collect();
    SturmReport { counts, violations }
}

/// Eigenvalues of a linearization after splitting off the generalized kernel
/// generated by the symmetries.
#[derive(Debug, Clone)]
pub struct DynamicalSpectrum {
    /// Every eigenvalue; the first `symmetry_zeros` are the exact zeros of
    /// the symmetry subspace.
    pub eigenvalues: Vec<Complex64>,
    pub symmetry_zeros: usize,
    pub max_real_part: f64,
}

/// Eigenvalues of `A` when `A·span(x) ⊆ span(x)`: with `[X Z]` orthonormal,
/// `A` is block triangular and the spectrum is `σ(XᵀAX) ∪ σ(ZᵀAZ)`. The first
/// block is nilpotent by construction and contributes exact zeros.
fn quotient_spectrum(a: &DMatrix<f64>, invariant: Vec<DVector<f64>>) -> Result<DynamicalSpectrum> {
    let n = a.nrows();
    let x = orthonormal_columns(invariant, n);
    let k = x.len();
    let mut basis = x;
    for e in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[e] = 1.0;
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v -= q * c;
            }
        }
        let rest = v.norm();
        // A unit vector keeps at least 1/√n of its length for some e.
        if rest > 0.5 / (n as f64).sqrt() {
            basis.push(v / rest);
        }
    }
    if basis.len() != n {
        return Err(Error::Eigensolver("could not complete an orthonormal basis".into()));
    }
    let z = DMatrix::from_columns(&basis[k..]);
    let reduced = z.transpose() * a * &z;
    let mut eigenvalues = vec![Complex64::new(0.0, 0.0); k];
    eigenvalues.extend(nonsymmetric_eigenvalues(reduced)?);
    let max_real_part = eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(DynamicalSpectrum {
        eigenvalues,
        symmetry_zeros: k,
        max_real_part,
    })
}

fn nonsymmetric_eigenvalues(m: DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let max_iter = 200 * m.nrows();
    let schur = Schur::try_new(m, f64::EPSILON, max_iter)
        .ok_or_else(|| Error::Eigensolver("Schur iteration did not converge".into()))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|c| Complex64::new(c.re, c.im))
        .collect())
}

/// Eigenvalues of the plain nodal matrix, without splitting off symmetries.
pub fn raw_eigenvalues(op: &OperatorMatrix) -> Result<Vec<Complex64>> {
    nonsymmetric_eigenvalues(op.entries.clone())
}

fn col(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

fn stack(top: &[f64], bottom: &[f64]) -> DVector<f64> {
    DVector::from_iterator(top.len() + bottom.len(), top.iter().chain(bottom).copied())
}

/// Spectrum of `∂x L₊`.
///
/// The generalized kernel spanned by `Ker L₊`, `L₊⁺1`, `L₊⁺(−1)^j` (the
/// preimages of `Ker ∂x`) and `L₊⁺(φ − φ̄)` (the Jordan partner of `φ'`) is
/// split off analytically, which keeps the rounding-sensitive Jordan block at
/// the origin out of the Schur iteration.
pub fn kdv_dynamical_spectrum(profile: &WaveProfile) -> Result<DynamicalSpectrum> {
    let lp = assemble_lplus(profile);
    let spec = sym_spectrum(&lp)?;
    let tol = kernel_tol(&spec);
    kdv_spectrum_with(&lp, &spec, tol, &profile.phi)
}

fn kdv_spectrum_with(lp: &OperatorMatrix, spec: &SymSpectrum, tol: f64, phi: &RealField) -> Result<DynamicalSpectrum> {
    let n = lp.grid.n_points();
    let d = dense::derivative_matrix(&lp.grid);
    let a = &d * &lp.entries;
    let ones = vec![1.0; n];
    let alternating: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let mean = phi.values().iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = phi.values().iter().map(|p| p - mean).collect();
    let mut inv = Vec::new();
    for f in kernel_basis(spec, tol) {
        inv.push(col(f.values()));
    }
    inv.push(col(&spec.deflated_solve(&ones, tol)));
    inv.push(col(&spec.deflated_solve(&alternating, tol)));
    if phi.derivative().norm_l2() > 1e-8 * phi.norm_l2() {
        inv.push(col(&spec.deflated_solve(&centered, tol)));
    }
    quotient_spectrum(&a, inv)
}

/// Spectrum of `[[0, L₋], [−L₊, 0]]`, with the generalized kernel built from
/// `Ker L±` and their Jordan partners split off as in
/// [`kdv_dynamical_spectrum`].
pub fn nls_dynamical_spectrum(profile: &WaveProfile) -> Result<DynamicalSpectrum> {
    let lp = assemble_lplus(profile);
    let lm = assemble_lminus(profile);
    let sp = sym_spectrum(&lp)?;
    let sm = sym_spectrum(&lm)?;
    nls_spectrum_with(profile, &sp, &sm)
}

fn nls_spectrum_with(profile: &WaveProfile, sp: &SymSpectrum, sm: &SymSpectrum) -> Result<DynamicalSpectrum> {
    let a = assemble_nls(profile).entries;
    let n = profile.grid().n_points();
    let zero = vec![0.0; n];
    let tp = kernel_tol(sp);
    let tm = kernel_tol(sm);
    let mut inv = Vec::new();
    for k in kernel_basis(sp, tp) {
        inv.push(stack(k.values(), &zero));
        inv.push(stack(&zero, &sm.deflated_solve(k.values(), tm)));
    }
    for k in kernel_basis(sm, tm) {
        inv.push(stack(&zero, k.values()));
        let v: Vec<f64> = sp.deflated_solve(k.values(), tp).iter().map(|x| -x).collect();
        inv.push(stack(&v, &zero));
    }
    quotient_spectrum(&a, inv)
}

/// Everything the stability verdict needs, for one profile.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub problem: Problem,
    pub eigenvalues_lplus: Vec<f64>,
    pub eigenvalues_lminus: Vec<f64>,
    pub kernel_tol_plus: f64,
    pub kernel_tol_minus: f64,
    pub n_neg_plus: usize,
    pub n_neg_minus: usize,
    pub kernel_dim_plus: usize,
    pub kernel_dim_minus: usize,
    pub kernel_vectors: Vec<RealField>,
    pub phi_kernel_angle: f64,
    /// `None` when φ is not orthogonal to the numerical kernel.
    pub vk_index: Option<f64>,
    pub coercivity_kappa: f64,
    /// `‖L₊φ'‖ / (‖Λ^αφ'‖ + ‖φ'‖)`, 0 for constant profiles.
    pub lplus_translation_residual: f64,
    /// `‖L₋φ‖ / ‖φ‖`.
    pub lminus_phi_residual: f64,
    /// `1` if `φ'` is numerically nonzero, else `0`: the expected kernel
    /// dimension of `L₊`.
    pub translation_modes: usize,
    pub sturm: SturmReport,
    pub dynamical: DynamicalSpectrum,
    pub max_real_part: f64,
    pub verdict: Verdict,
}

/// Spectral-stability threshold on the real parts of the dynamical spectrum.
pub const MAX_REAL_PART_TOL: f64 = 1e-7;

pub fn analyze(profile: &WaveProfile, problem: Problem) -> Result<SpectrumReport> {
    let lp = assemble_lplus(profile);
    let lm = assemble_lminus(profile);
    let sp = sym_spectrum(&lp)?;
    let sm = sym_spectrum(&lm)?;
    let tp = kernel_tol(&sp);
    let tm = kernel_tol(&sm);
    let (n_neg_plus, kernel_dim_plus) = count_negative(&sp.values, tp);
    let (n_neg_minus, kernel_dim_minus) = count_negative(&sm.values, tm);
    let kernel_vectors = kernel_basis(&sp, tp);
    let phi = &profile.phi;
    let phi_kernel_angle = weak_nondegeneracy(phi, &kernel_vectors)?;
    let vk = vk_index(phi, &sp, tp).ok();

    let dphi = phi.derivative();
    let translation_modes = usize::from(dphi.norm_l2() > 1e-8 * phi.norm_l2());
    let lplus_translation_residual = if translation_modes == 1 {
        let applied = lp.entries.clone() * col(dphi.values());
        let applied = RealField::new(phi.grid(), applied.as_slice().to_vec())?;
        applied.norm_l2() / (dphi.seminorm(profile.alpha) + dphi.norm_l2())
    } else {
        0.0
    };
    let lm_phi = lm.entries.clone() * col(phi.values());
    let lminus_phi_residual =
        RealField::new(phi.grid(), lm_phi.as_slice().to_vec())?.norm_l2() / phi.norm_l2();

    let coercivity_kappa = coercivity_gap(&lp, &[phi.clone(), dphi])?;
    let sturm = sturm_sign_check(&sp.vectors, 10);
    let dynamical = match problem {
        Problem::KdV => kdv_spectrum_with(&lp, &sp, tp, phi)?,
        Problem::Nls => nls_spectrum_with(profile, &sp, &sm)?,
    };
    let max_real_part = dynamical.max_real_part;
    let mut report = SpectrumReport {
        problem,
        eigenvalues_lplus: sp.values,
        eigenvalues_lminus: sm.values,
        kernel_tol_plus: tp,
        kernel_tol_minus: tm,
        n_neg_plus,
        n_neg_minus,
        kernel_dim_plus,
        kernel_dim_minus,
        kernel_vectors,
        phi_kernel_angle,
        vk_index: vk,
        coercivity_kappa,
        lplus_translation_residual,
        lminus_phi_residual,
        translation_modes,
        sturm,
        dynamical,
        max_real_part,
        verdict: Verdict::Inconclusive,
    };
    report.verdict = stability_verdict(&report, problem);
    Ok(report)
}

/// Index conditions of the VK criterion, without the dynamical cross-check.
pub fn index_conditions_hold(report: &SpectrumReport, problem: Problem) -> bool {
    let base = report.n_neg_plus == 1
        && report.phi_kernel_angle <= WEAK_NONDEGENERACY_TOL
        && report.vk_index.is_some_and(|v| v < 0.0);
    match problem {
        Problem::KdV => base,
        // Ker L₋ = span[φ]: one kernel direction, which φ satisfies.
        Problem::Nls => base && report.n_neg_minus == 0 && report.kernel_dim_minus == 1 && report.lminus_phi_residual <= 1e-8,
    }
}

/// Stable only when the index conditions and the computed dynamical spectrum
/// agree; unstable when both indicate instability; otherwise inconclusive.
pub fn stability_verdict(report: &SpectrumReport, problem: Problem) -> Verdict {
    let by_index = index_conditions_hold(report, problem);
    let by_spectrum = report.max_real_part <= MAX_REAL_PART_TOL;
    match (by_index, by_spectrum) {
        (true, true) => Verdict::SpectrallyStable,
        (false, false) => Verdict::Unstable,
        _ => Verdict::Inconclusive,
    }
}
