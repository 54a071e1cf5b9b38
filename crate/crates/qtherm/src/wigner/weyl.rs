//! Weyl quantization of phase-space symbols and the H-functional.
//!
//! The dense operator of a symbol `F(X, J)` is
//! `M[i,j] = (ΔX ΔJ / 2πλ⁻¹) Σ_k F((x_i+x_j)/2, J_k) exp(iJ_k (x_i-x_j)/λ⁻¹)`,
//! Hermitian for real symbols. The flow grid must span exactly one
//! conjugate period, `ΔJ · n_J · ΔX = 2πλ⁻¹`, which makes the constant
//! symbol quantize to the identity exactly.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{WignerError, WignerField};

/// Dense Weyl operator of a gridded symbol (two-axis fields; midpoints are
/// linearly interpolated between force nodes).
pub fn weyl_quantize(field: &WignerField) -> Result<DMatrix<Complex64>, WignerError> {
    if field.grid.dim() != 2 {
        return Err(WignerError::BadInput("Weyl quantization needs an (X, J) field".into()));
    }
    let nx = field.grid.shape[0];
    let nj = field.grid.shape[1];
    if nx > 128 {
        return Err(WignerError::GridTooLarge(nx));
    }
    let lam = field.lambda_inv;
    let dx = field.grid.step(0);
    let dj = field.grid.step(1);
    let consistency = dj * nj as f64 * dx / (2.0 * std::f64::consts::PI * lam);
    if (consistency - 1.0).abs() > 1e-9 {
        return Err(WignerError::InconsistentGrids(consistency));
    }
    // symbol at the midpoint (x_i + x_j)/2: a node for even i+j, the mean
    // of the neighbouring nodes otherwise
    let value_at = |i: usize, j: usize, k: usize| -> f64 {
        let s = i + j;
        if s % 2 == 0 {
            field.values[(s / 2) * nj + k]
        } else {
            0.5 * (field.values[(s / 2) * nj + k] + field.values[(s / 2 + 1) * nj + k])
        }
    };
    weyl_matrix(nx, nj, lam, dx, dj, &field.grid, value_at)
}

/// Dense Weyl operator of a closure-backed symbol on the same grid layout.
pub fn weyl_quantize_fn(
    symbol: impl Fn(f64, f64) -> f64,
    field_grid: &crate::grid::RectGrid,
    lambda_inv: f64,
) -> Result<DMatrix<Complex64>, WignerError> {
    let nx = field_grid.shape[0];
    let nj = field_grid.shape[1];
    if nx > 128 {
        return Err(WignerError::GridTooLarge(nx));
    }
    let dx = field_grid.step(0);
    let dj = field_grid.step(1);
    let consistency = dj * nj as f64 * dx / (2.0 * std::f64::consts::PI * lambda_inv);
    if (consistency - 1.0).abs() > 1e-9 {
        return Err(WignerError::InconsistentGrids(consistency));
    }
    let value_at = |i: usize, j: usize, k: usize| -> f64 {
        let x_mid = 0.5 * (field_grid.coord(0, i) + field_grid.coord(0, j));
        symbol(x_mid, field_grid.coord(1, k))
    };
    weyl_matrix(nx, nj, lambda_inv, dx, dj, field_grid, value_at)
}

fn weyl_matrix(
    nx: usize,
    nj: usize,
    lam: f64,
    dx: f64,
    dj: f64,
    grid: &crate::grid::RectGrid,
    value_at: impl Fn(usize, usize, usize) -> f64,
) -> Result<DMatrix<Complex64>, WignerError> {
    let pref = dx * dj / (2.0 * std::f64::consts::PI * lam);
    let mut m = DMatrix::from_element(nx, nx, Complex64::new(0.0, 0.0));
    for i in 0..nx {
        for j in 0..=i {
            let sep = grid.coord(0, i) - grid.coord(0, j);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..nj {
                let jk = grid.coord(1, k);
                acc += value_at(i, j, k) * Complex64::from_polar(1.0, jk * sep / lam);
            }
            m[(i, j)] = acc * pref;
            m[(j, i)] = m[(i, j)].conj();
        }
    }
    // Hermiticity is structural for real symbols; guard anyway
    let mut defect: f64 = 0.0;
    for i in 0..nx {
        for j in 0..nx {
            defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if defect > 1e-10 {
        return Err(WignerError::BadInput(format!("Hermiticity defect {defect:.3e}")));
    }
    Ok(m)
}

/// Eigenvalues of a Hermitian complex matrix through the real symmetric
/// embedding `[[Re, -Im], [Im, Re]]` (each eigenvalue doubled).
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let n = m.nrows();
    let mut b = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = m[(i, j)].re;
            b[(i, n + j)] = -m[(i, j)].im;
            b[(n + i, j)] = m[(i, j)].im;
            b[(n + i, n + j)] = m[(i, j)].re;
        }
    }
    let mut eig: Vec<f64> = b.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (0..n).map(|k| 0.5 * (eig[2 * k] + eig[2 * k + 1])).collect()
}

/// `Tr(F̂ ln F̂) = Σ μ ln μ` over the Weyl-operator eigenvalues; the
/// operator must be positive definite (all eigenvalues above 1e-12).
pub fn h_functional(m: &DMatrix<Complex64>) -> Result<f64, WignerError> {
    let eig = hermitian_eigenvalues(m);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 1e-12 {
        return Err(WignerError::NonPositiveOperator(min));
    }
    Ok(eig.iter().map(|&mu| mu * mu.ln()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RectGrid;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Conjugate-consistent (X, J) grid: ΔJ·nj·ΔX = 2πλ⁻¹.
    fn weyl_grid(l: f64, nx: usize, lam: f64) -> RectGrid {
        let nj = 2 * nx;
        let dx = 2.0 * l / nx as f64;
        let dj = 2.0 * std::f64::consts::PI * lam / (nj as f64 * dx);
        let jmax = 0.5 * nj as f64 * dj;
        RectGrid::new(vec![-l, -jmax], vec![l, jmax], vec![nx, nj])
    }

    #[test]
    fn unit_symbol_is_identity() {
        let grid = weyl_grid(6.0, 32, 1.0);
        let m = weyl_quantize_fn(|_, _| 1.0, &grid, 1.0).unwrap();
        for i in 0..32 {
            for j in 0..32 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(m[(i, j)].re, want, epsilon = 1e-10);
                assert_abs_diff_eq!(m[(i, j)].im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn position_symbol_is_diagonal() {
        let grid = weyl_grid(5.0, 24, 1.0);
        let m = weyl_quantize_fn(|x, _| x, &grid, 1.0).unwrap();
        for i in 0..24 {
            for j in 0..24 {
                if i == j {
                    assert_abs_diff_eq!(m[(i, i)].re, grid.coord(0, i), epsilon = 1e-9);
                } else {
                    assert_abs_diff_eq!(m[(i, j)].norm(), 0.0, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn gaussian_symbol_spectrum_matches_thermal_form() {
        // symbol exp(-(X²+J²)/(2s²)) quantizes to a thermal-shaped operator
        // with eigenvalues (2s²/(2s²+λ⁻¹)) q^n, q = (2s²-λ⁻¹)/(2s²+λ⁻¹)
        let s2 = 1.0;
        let lam = 1.0;
        let grid = weyl_grid(8.0, 64, lam);
        let m = weyl_quantize_fn(|x, j| (-(x * x + j * j) / (2.0 * s2)).exp(), &grid, lam).unwrap();
        let mut eig = hermitian_eigenvalues(&m);
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let q = (2.0 * s2 - lam) / (2.0 * s2 + lam);
        let scale = 2.0 * s2 / (2.0 * s2 + lam);
        for n in 0..6 {
            let want = scale * q.powi(n as i32);
            assert_relative_eq!(eig[n], want, max_relative = 1e-3);
        }
    }

    #[test]
    fn h_functional_values() {
        use nalgebra::DMatrix;
        let id = DMatrix::from_diagonal_element(4, 4, Complex64::new(1.0, 0.0));
        assert_abs_diff_eq!(h_functional(&id).unwrap(), 0.0, epsilon = 1e-12);

        let two = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(0.25, 0.0),
            Complex64::new(0.75, 0.0),
        ]));
        let want = 0.25f64.ln() * 0.25 + 0.75f64.ln() * 0.75;
        assert_abs_diff_eq!(h_functional(&two).unwrap(), want, epsilon = 1e-12);
        assert_abs_diff_eq!(want, -0.5623, epsilon = 1e-4);
    }

    #[test]
    fn h_functional_rejects_nonpositive() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(-0.1, 0.0),
        ]));
        assert!(matches!(
            h_functional(&m),
            Err(WignerError::NonPositiveOperator(_))
        ));
    }

    #[test]
    fn h_functional_unitary_invariance() {
        // conjugate a positive diagonal by a unitary built from a Hermitian
        // generator: exp(iA) with A Hermitian, via its real embedding
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(0.9, 0.0),
            Complex64::new(0.4, 0.0),
            Complex64::new(0.2, 0.0),
        ]));
        // small rotation exp(iA) ≈ I + iA - A²/2 (unitary to third order is
        // not enough; build the Cayley transform instead: U = (I-iA)(I+iA)⁻¹)
        let mut a = DMatrix::from_element(3, 3, Complex64::new(0.0, 0.0));
        a[(0, 1)] = Complex64::new(0.3, 0.1);
        a[(1, 0)] = Complex64::new(0.3, -0.1);
        a[(1, 2)] = Complex64::new(-0.2, 0.25);
        a[(2, 1)] = Complex64::new(-0.2, -0.25);
        let id = DMatrix::from_diagonal_element(3, 3, Complex64::new(1.0, 0.0));
        let ia = a.map(|z| Complex64::new(0.0, 1.0) * z);
        let u = (&id - &ia) * (&id + &ia).try_inverse().unwrap();
        let conj = &u * &d * u.adjoint();
        let h0 = h_functional(&d).unwrap();
        let h1 = h_functional(&conj).unwrap();
        assert_abs_diff_eq!(h0, h1, epsilon = 1e-10);
    }
}
