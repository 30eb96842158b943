//! Fourier discretization of 2T-periodic functions on `[-T, T]`.
//!
//! Coefficients use the unitary convention
//! `f̂(k) = (2T)^{-1/2} ∫ f(x) e^{-iπkx/T} dx`, evaluated exactly on the grid by
//! the rectangle rule, so that `Σ|f̂(k)|² = ‖f‖²_{L²}` holds to rounding. Slots
//! follow FFT order: slot `j` holds wavenumber `j` for `j ≤ N/2` and `j - N`
//! otherwise. The Nyquist slot `N/2` is treated as a cosine mode: it is kept by
//! even multipliers (such as `Λ^α`) and annihilated by odd ones (such as `∂x`).

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct GridInner {
    n: usize,
    half_period: f64,
    nodes: Vec<f64>,
    wavenumbers: Vec<i64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic collocation grid `x_j = -T + 2Tj/N`.
///
/// Cloning is cheap; FFT plans are shared between clones.
#[derive(Clone)]
pub struct Grid(Arc<GridInner>);

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_points", &self.0.n)
            .field("half_period", &self.0.half_period)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.0.n == other.0.n && self.0.half_period == other.0.half_period
    }
}

/// Build a grid with `n_points` nodes on `[-half_period, half_period)`.
pub fn make_grid(n_points: usize, half_period: f64) -> Result<Grid> {
    Grid::new(n_points, half_period)
}

impl Grid {
    pub fn new(n_points: usize, half_period: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_points must be even and at least 8, got {n_points}"
            )));
        }
        if !(half_period.is_finite() && half_period > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half_period must be positive, got {half_period}"
            )));
        }
        let n = n_points;
        let h = 2.0 * half_period / n as f64;
        let nodes = (0..n).map(|j| -half_period + h * j as f64).collect();
        let wavenumbers = (0..n)
            .map(|j| if j <= n / 2 { j as i64 } else { j as i64 - n as i64 })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Grid(Arc::new(GridInner {
            n,
            half_period,
            nodes,
            wavenumbers,
            forward,
            inverse,
        })))
    }

    pub fn n_points(&self) -> usize {
        self.0.n
    }

    pub fn half_period(&self) -> f64 {
        self.0.half_period
    }

    /// Node spacing `2T/N`, which is also the quadrature weight.
    pub fn spacing(&self) -> f64 {
        2.0 * self.0.half_period / self.0.n as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.0.nodes
    }

    /// Wavenumbers in coefficient-slot order.
    pub fn wavenumbers(&self) -> &[i64] {
        &self.0.wavenumbers
    }

    pub fn nyquist_slot(&self) -> usize {
        self.0.n / 2
    }

    /// Index of the node at `x = 0`.
    pub fn center_index(&self) -> usize {
        self.0.n / 2
    }

    /// Physical frequency `πk/T` of each slot.
    pub fn frequencies(&self) -> Vec<f64> {
        let scale = PI / self.0.half_period;
        self.0.wavenumbers.iter().map(|&k| scale * k as f64).collect()
    }

    /// Multiplier `(π|k|/T)^α` of `Λ^α`, slot order. The `k = 0` entry is 0.
    pub fn symbol(&self, alpha: f64) -> Vec<f64> {
        let scale = PI / self.0.half_period;
        self.0
            .wavenumbers
            .iter()
            .map(|&k| {
                if k == 0 {
                    0.0
                } else {
                    (scale * k.unsigned_abs() as f64).powf(alpha)
                }
            })
            .collect()
    }

    /// Multiplier `iπk/T` of `∂x`, with the Nyquist slot zeroed.
    pub fn derivative_multiplier(&self) -> Vec<Complex64> {
        let scale = PI / self.0.half_period;
        let nyq = self.nyquist_slot();
        self.0
            .wavenumbers
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                if j == nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, scale * k as f64)
                }
            })
            .collect()
    }

    /// Weights `(1 + k²)^s` of the `H^s` norm, slot order.
    pub fn sobolev_weights(&self, s: SobolevIndex) -> Vec<f64> {
        self.0
            .wavenumbers
            .iter()
            .map(|&k| (1.0 + (k * k) as f64).powf(s.0))
            .collect()
    }

    /// Multiplier realizing `f ↦ f(· - y)` for band-limited `f`.
    pub fn translation_multiplier(&self, y: f64) -> Vec<Complex64> {
        let scale = PI / self.0.half_period;
        let nyq = self.nyquist_slot();
        self.0
            .wavenumbers
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let theta = -scale * k as f64 * y;
                if j == nyq {
                    Complex64::new(theta.cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, theta)
                }
            })
            .collect()
    }

    /// Mask of the 2/3 rule: `true` for slots with `|k| ≤ N/3`.
    pub fn dealias_mask(&self) -> Vec<bool> {
        let cutoff = self.0.n as i64 / 3;
        self.0.wavenumbers.iter().map(|&k| k.abs() <= cutoff).collect()
    }

    /// Unnormalized in-place forward DFT.
    pub(crate) fn fft_raw(&self, buf: &mut [Complex64]) {
        self.0.forward.process(buf);
    }

    /// Unnormalized in-place inverse DFT.
    pub(crate) fn ifft_raw(&self, buf: &mut [Complex64]) {
        self.0.inverse.process(buf);
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.0.n {
            return Err(Error::LengthMismatch {
                expected: self.0.n,
                got: len,
            });
        }
        Ok(())
    }

    /// Grid samples to unitary Fourier coefficients.
    pub fn transform(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(values.len())?;
        let mut buf = values.to_vec();
        self.fft_raw(&mut buf);
        let scale = (2.0 * self.0.half_period).sqrt() / self.0.n as f64;
        for (j, c) in buf.iter_mut().enumerate() {
            let sign = if j % 2 == 0 { scale } else { -scale };
            *c *= sign;
        }
        Ok(buf)
    }

    /// Unitary Fourier coefficients back to grid samples.
    pub fn inverse_transform(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(coeffs.len())?;
        let scale = 1.0 / (2.0 * self.0.half_period).sqrt();
        let mut buf: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| if j % 2 == 0 { c * scale } else { -c * scale })
            .collect();
        self.ifft_raw(&mut buf);
        Ok(buf)
    }

    /// Apply a diagonal Fourier multiplier to real samples.
    pub(crate) fn multiply_real(&self, values: &[f64], mult: impl Fn(usize) -> Complex64) -> Vec<f64> {
        let n = self.0.n;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft_raw(&mut buf);
        for (j, c) in buf.iter_mut().enumerate() {
            *c *= mult(j);
        }
        self.ifft_raw(&mut buf);
        let inv = 1.0 / n as f64;
        buf.iter().map(|c| c.re * inv).collect()
    }

    /// Apply a diagonal Fourier multiplier to complex samples.
    pub(crate) fn multiply_complex(
        &self,
        values: &[Complex64],
        mult: impl Fn(usize) -> Complex64,
    ) -> Vec<Complex64> {
        let n = self.0.n;
        let mut buf = values.to_vec();
        self.fft_raw(&mut buf);
        for (j, c) in buf.iter_mut().enumerate() {
            *c *= mult(j);
        }
        self.ifft_raw(&mut buf);
        let inv = 1.0 / n as f64;
        buf.iter_mut().for_each(|c| *c *= inv);
        buf
    }
}

/// Order `s` of the Sobolev norm `‖f‖²_{H^s} = Σ (1+k²)^s |f̂(k)|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::param("s", "Sobolev order must be finite"));
        }
        Ok(SobolevIndex(s))
    }

    /// The energy space `H^{α/2}`.
    pub fn energy(alpha: f64) -> Self {
        SobolevIndex(alpha / 2.0)
    }

    pub fn order(self) -> f64 {
        self.0
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
    }
    Ok(())
}

/// A real periodic function sampled on a grid.
#[derive(Clone)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
    coeffs: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for RealField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealField")
            .field("grid", &self.grid)
            .field("values", &self.values)
            .finish()
    }
}

impl RealField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self::from_parts(grid, values))
    }

    pub(crate) fn from_parts(grid: &Grid, values: Vec<f64>) -> Self {
        RealField {
            grid: grid.clone(),
            values,
            coeffs: OnceLock::new(),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(grid, grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_parts(grid, vec![0.0; grid.n_points()])
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self::from_parts(grid, vec![c; grid.n_points()])
    }

    /// Rebuild a real field from coefficients; imaginary residue is dropped.
    pub fn from_coeffs(grid: &Grid, coeffs: &[Complex64]) -> Result<Self> {
        let v = grid.inverse_transform(coeffs)?;
        Ok(Self::from_parts(grid, v.iter().map(|c| c.re).collect()))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Unitary Fourier coefficients, computed once and cached.
    pub fn coeffs(&self) -> &[Complex64] {
        self.coeffs.get_or_init(|| {
            let buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            self.grid
                .transform(&buf)
                .expect("field length matches its grid")
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self::from_parts(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + c * b)
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `Λ^α f`, multiplier `(π|k|/T)^α`.
    pub fn apply_symbol(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let sym = self.grid.symbol(alpha);
        Ok(self.apply_real_multiplier(&sym))
    }

    pub(crate) fn apply_real_multiplier(&self, mult: &[f64]) -> Self {
        let v = self
            .grid
            .multiply_real(&self.values, |j| Complex64::new(mult[j], 0.0));
        Self::from_parts(&self.grid, v)
    }

    /// Spectral first derivative.
    pub fn derivative(&self) -> Self {
        let d = self.grid.derivative_multiplier();
        Self::from_parts(&self.grid, self.grid.multiply_real(&self.values, |j| d[j]))
    }

    /// `f(· - y)` for the trigonometric interpolant of `f`.
    pub fn translate(&self, y: f64) -> Self {
        let m = self.grid.translation_multiplier(y);
        Self::from_parts(&self.grid, self.grid.multiply_real(&self.values, |j| m[j]))
    }

    /// Reflection `f(-x)` on the grid.
    pub fn reflect(&self) -> Self {
        let n = self.values.len();
        Self::from_parts(
            &self.grid,
            (0..n).map(|j| self.values[(n - j) % n]).collect(),
        )
    }

    /// 2/3-rule truncation: coefficients with `|k| > N/3` are zeroed.
    pub fn dealias(&self) -> Self {
        let mask = self.grid.dealias_mask();
        let v = self.grid.multiply_real(&self.values, |j| {
            if mask[j] {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::from_parts(&self.grid, v)
    }

    /// `(2T/N) Σ f_j g_j`.
    pub fn inner_l2(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.grid.spacing() * dot(&self.values, &other.values))
    }

    pub fn norm_l2(&self) -> f64 {
        (self.grid.spacing() * dot(&self.values, &self.values)).sqrt()
    }

    pub fn norm_sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ f` by the rectangle rule.
    pub fn integral(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    pub fn norm_sobolev(&self, s: SobolevIndex) -> f64 {
        let w = self.grid.sobolev_weights(s);
        self.coeffs()
            .iter()
            .zip(&w)
            .map(|(c, w)| w * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖Λ^β f‖_{L²}` computed from the coefficients.
    pub fn seminorm(&self, beta: f64) -> f64 {
        let sym = self.grid.symbol(beta);
        self.coeffs()
            .iter()
            .zip(&sym)
            .map(|(c, s)| s * s * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Discrete symmetric-decreasing rearrangement.
    ///
    /// Samples are sorted in decreasing order; the largest lands on `x = 0`
    /// and the rest fill the nodes alternately to the right and to the left.
    pub fn decreasing_rearrangement(&self) -> Self {
        let mut sorted = self.values.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut out = vec![0.0; sorted.len()];
        for (slot, v) in rearrangement_order(self.values.len()).zip(sorted) {
            out[slot] = v;
        }
        Self::from_parts(&self.grid, out)
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField::from_parts(
            &self.grid,
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }
}

/// Node indices visited by the rearrangement: center, then right/left outward.
pub(crate) fn rearrangement_order(n: usize) -> impl Iterator<Item = usize> {
    let c = n / 2;
    std::iter::once(c)
        .chain((1..c).flat_map(move |m| [c + m, c - m]))
        .chain(std::iter::once(0))
}

/// A complex periodic function sampled on a grid.
#[derive(Clone)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
    coeffs: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for ComplexField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexField")
            .field("grid", &self.grid)
            .field("values", &self.values)
            .finish()
    }
}

impl ComplexField {
    pub fn new(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self::from_parts(grid, values))
    }

    pub(crate) fn from_parts(grid: &Grid, values: Vec<Complex64>) -> Self {
        ComplexField {
            grid: grid.clone(),
            values,
            coeffs: OnceLock::new(),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Self {
        Self::from_parts(grid, grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_parts(grid, vec![Complex64::new(0.0, 0.0); grid.n_points()])
    }

    pub fn from_coeffs(grid: &Grid, coeffs: &[Complex64]) -> Result<Self> {
        let v = grid.inverse_transform(coeffs)?;
        Ok(Self::from_parts(grid, v))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        self.coeffs.get_or_init(|| {
            self.grid
                .transform(&self.values)
                .expect("field length matches its grid")
        })
    }

    pub fn re(&self) -> RealField {
        RealField::from_parts(&self.grid, self.values.iter().map(|c| c.re).collect())
    }

    pub fn im(&self) -> RealField {
        RealField::from_parts(&self.grid, self.values.iter().map(|c| c.im).collect())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_parts(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| c * v)
    }

    pub fn axpy(&self, c: Complex64, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self::from_parts(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
        ))
    }

    pub fn apply_symbol(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let sym = self.grid.symbol(alpha);
        Ok(Self::from_parts(
            &self.grid,
            self.grid
                .multiply_complex(&self.values, |j| Complex64::new(sym[j], 0.0)),
        ))
    }

    pub fn derivative(&self) -> Self {
        let d = self.grid.derivative_multiplier();
        Self::from_parts(&self.grid, self.grid.multiply_complex(&self.values, |j| d[j]))
    }

    pub fn translate(&self, y: f64) -> Self {
        let m = self.grid.translation_multiplier(y);
        Self::from_parts(&self.grid, self.grid.multiply_complex(&self.values, |j| m[j]))
    }

    pub fn dealias(&self) -> Self {
        let mask = self.grid.dealias_mask();
        let v = self.grid.multiply_complex(&self.values, |j| {
            if mask[j] {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::from_parts(&self.grid, v)
    }

    /// Complex inner product `(2T/N) Σ f_j conj(g_j)`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.spacing())
    }

    /// Real part of [`Self::inner`], the `L²(ℝ²)` pairing of real and imaginary parts.
    pub fn inner_l2(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.re)
    }

    pub fn norm_l2(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn norm_sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.spacing()
    }

    pub fn norm_sobolev(&self, s: SobolevIndex) -> f64 {
        let w = self.grid.sobolev_weights(s);
        self.coeffs()
            .iter()
            .zip(&w)
            .map(|(c, w)| w * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn seminorm(&self, beta: f64) -> f64 {
        let sym = self.grid.symbol(beta);
        self.coeffs()
            .iter()
            .zip(&sym)
            .map(|(c, s)| s * s * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    /// Direct O(N²) evaluation of the unitary coefficients.
    fn dft_oracle(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
        let t = grid.half_period();
        let h = grid.spacing();
        grid.wavenumbers()
            .iter()
            .map(|&k| {
                let s: Complex64 = grid
                    .nodes()
                    .iter()
                    .zip(values)
                    .map(|(&x, &f)| f * Complex64::from_polar(1.0, -PI * k as f64 * x / t))
                    .sum();
                s * h / (2.0 * t).sqrt()
            })
            .collect()
    }

    #[test]
    fn grid_nodes_and_wavenumbers() {
        let g = make_grid(8, 1.0).unwrap();
        assert_eq!(g.nodes(), &[-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75]);
        let mut k = g.wavenumbers().to_vec();
        k.sort();
        assert_eq!(k, vec![-3, -2, -1, 0, 1, 2, 3, 4]);
        assert_eq!(make_grid(8, 2.0).unwrap().spacing(), 0.5);
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(make_grid(7, 1.0).is_err());
        assert!(make_grid(6, 1.0).is_err());
        assert!(make_grid(8, 0.0).is_err());
        assert!(make_grid(8, -1.0).is_err());
    }

    #[test]
    fn transform_of_constant_and_cosine() {
        let g = make_grid(16, 1.0).unwrap();
        let one = RealField::constant(&g, 1.0);
        let c = one.coeffs();
        assert!((c[0].re - 2f64.sqrt()).abs() < 1e-14);
        assert!(c[1..].iter().all(|z| z.norm() < 1e-14));

        let cosine = RealField::from_fn(&g, |x| (PI * x).cos());
        let c = cosine.coeffs();
        for (j, &k) in g.wavenumbers().iter().enumerate() {
            let expected = if k.abs() == 1 { 0.5f64.sqrt() } else { 0.0 };
            assert!((c[j] - Complex64::new(expected, 0.0)).norm() < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn transform_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[8usize, 16, 32] {
            let g = make_grid(n, 1.7).unwrap();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = RealField::new(&g, v.clone()).unwrap();
            let oracle = dft_oracle(&g, &v);
            let err = f
                .coeffs()
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-13, "n = {n}: {err}");
            let back = RealField::from_coeffs(&g, f.coeffs()).unwrap();
            let rt = back
                .values()
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(rt < 1e-13);
        }
    }

    #[test]
    fn transform_rejects_length_mismatch() {
        let g = make_grid(8, 1.0).unwrap();
        assert!(g.transform(&[Complex64::new(1.0, 0.0); 6]).is_err());
        assert!(RealField::new(&g, vec![0.0; 9]).is_err());
    }

    #[test]
    fn symbol_examples() {
        let g = make_grid(32, 1.0).unwrap();
        let one = RealField::constant(&g, 1.0);
        assert!(one.apply_symbol(1.3).unwrap().norm_sup() < 1e-14);

        let c1 = RealField::from_fn(&g, |x| (PI * x).cos());
        let out = c1.apply_symbol(1.0).unwrap();
        let expected = c1.scale(PI);
        assert!(out.axpy(-1.0, &expected).unwrap().norm_sup() < 1e-13);

        let c2 = RealField::from_fn(&g, |x| (2.0 * PI * x).cos());
        let out = c2.apply_symbol(1.5).unwrap();
        let expected = c2.scale((2.0 * PI).powf(1.5));
        assert!(out.axpy(-1.0, &expected).unwrap().norm_sup() < 1e-12);
    }

    #[test]
    fn derivative_examples() {
        let g = make_grid(32, 1.0).unwrap();
        assert!(RealField::constant(&g, 3.0).derivative().norm_sup() < 1e-14);
        let s = RealField::from_fn(&g, |x| (PI * x).sin());
        let ds = s.derivative();
        let exp = RealField::from_fn(&g, |x| PI * (PI * x).cos());
        assert!(ds.axpy(-1.0, &exp).unwrap().norm_sup() < 1e-13);
        let c = RealField::from_fn(&g, |x| (2.0 * PI * x).cos());
        let exp = RealField::from_fn(&g, |x| -2.0 * PI * (2.0 * PI * x).sin());
        assert!(c.derivative().axpy(-1.0, &exp).unwrap().norm_sup() < 1e-12);
        // the Nyquist mode (-1)^j has no real derivative
        let nyq = RealField::new(&g, (0..32).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect()).unwrap();
        assert!(nyq.derivative().norm_sup() < 1e-13);
        assert!(nyq.apply_symbol(1.0).unwrap().norm_sup() > 1.0);
    }

    #[test]
    fn inner_products_and_sobolev_norm() {
        let g = make_grid(64, 1.0).unwrap();
        let c = RealField::from_fn(&g, |x| (PI * x).cos());
        let s = RealField::from_fn(&g, |x| (PI * x).sin());
        assert!(close(c.inner_l2(&c).unwrap(), 1.0, 1e-14));
        assert!(c.inner_l2(&s).unwrap().abs() < 1e-15);
        let h = c.norm_sobolev(SobolevIndex::new(0.5).unwrap());
        assert!(close(h * h, 2f64.sqrt(), 1e-14));
        let other = make_grid(32, 1.0).unwrap();
        assert!(matches!(
            c.inner_l2(&RealField::constant(&other, 1.0)),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn dealias_examples() {
        let g = make_grid(32, 1.0).unwrap();
        let c = RealField::from_fn(&g, |x| (PI * x).cos());
        assert!(c.dealias().axpy(-1.0, &c).unwrap().norm_sup() < 1e-14);
        let nyq = RealField::new(&g, (0..32).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect()).unwrap();
        assert!(nyq.dealias().norm_sup() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = RealField::new(&g, (0..32).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let d1 = f.dealias();
        let d2 = d1.dealias();
        assert!(d1.axpy(-1.0, &d2).unwrap().norm_sup() < 1e-14);
    }

    #[test]
    fn rearrangement_small_example() {
        let g = make_grid(8, 1.0).unwrap();
        let f = RealField::new(&g, vec![0.0, 3.0, 1.0, 2.0, 7.0, 5.0, 6.0, 4.0]).unwrap();
        let r = f.decreasing_rearrangement();
        // max at x = 0 (node 4), then right (5), left (3), ...
        assert_eq!(r.values(), &[0.0, 1.0, 3.0, 5.0, 7.0, 6.0, 4.0, 2.0]);
    }

    #[test]
    fn rearrangement_fixes_bell_shapes() {
        let g = make_grid(32, 1.0).unwrap();
        let f = RealField::from_fn(&g, |x| (PI * x).cos());
        let r = f.decreasing_rearrangement();
        assert!(r.axpy(-1.0, &f).unwrap().norm_sup() < 1e-15);
    }

    #[test]
    fn translation_by_grid_step_is_a_shift() {
        let g = make_grid(16, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = RealField::new(&g, (0..16).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let shifted = f.translate(3.0 * g.spacing());
        for j in 0..16 {
            assert!((shifted.values()[(j + 3) % 16] - f.values()[j]).abs() < 1e-13);
        }
    }
}
