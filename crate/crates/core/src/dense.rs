//! Dense nodal-basis matrices of Fourier multipliers.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::spectral::Grid;

/// Nodal matrix of the multiplier `mult` (slot order): entry `(j, l)` is the
/// response at node `j` to a unit sample at node `l`.
///
/// The multiplier must be real-to-real (even real part, odd imaginary part),
/// which makes the matrix a real circulant.
pub(crate) fn circulant(grid: &Grid, mult: &[Complex64]) -> DMatrix<f64> {
    let n = grid.n_points();
    let mut col = mult.to_vec();
    grid.ifft_raw(&mut col);
    let first: Vec<f64> = col.iter().map(|c| c.re / n as f64).collect();
    DMatrix::from_fn(n, n, |j, l| first[(j + n - l) % n])
}

/// Nodal matrix of `Λ^α`.
pub(crate) fn symbol_matrix(grid: &Grid, alpha: f64) -> DMatrix<f64> {
    let sym: Vec<Complex64> = grid
        .symbol(alpha)
        .into_iter()
        .map(|s| Complex64::new(s, 0.0))
        .collect();
    circulant(grid, &sym)
}

/// Nodal matrix of `∂x` (Nyquist mode annihilated).
pub(crate) fn derivative_matrix(grid: &Grid) -> DMatrix<f64> {
    circulant(grid, &grid.derivative_multiplier())
}

/// `Λ^α + diag(potential)`.
pub(crate) fn schrodinger_matrix(grid: &Grid, alpha: f64, potential: &[f64]) -> DMatrix<f64> {
    let mut m = symbol_matrix(grid, alpha);
    for (j, v) in potential.iter().enumerate() {
        m[(j, j)] += v;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::RealField;
    use nalgebra::DVector;

    #[test]
    fn circulant_matches_fft_application() {
        let g = Grid::new(32, 1.3).unwrap();
        let f = RealField::from_fn(&g, |x| (x * 2.0).sin().exp());
        let m = symbol_matrix(&g, 1.4);
        let v = DVector::from_column_slice(f.values());
        let mv = &m * v;
        let direct = f.apply_symbol(1.4).unwrap();
        for (a, b) in mv.iter().zip(direct.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let d = derivative_matrix(&g);
        assert!((&d + d.transpose()).amax() < 1e-13);
        assert!((&m - m.transpose()).amax() < 1e-12);
    }
}
