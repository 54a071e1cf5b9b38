//! Reconstruction of the dressed potential from the divergence-free
//! excess-flow field.
//!
//! Given `Y_i(x) = Σ_j D̃_ij β_j(x)` on `ℝ^{2d}` with `div Y = 0`, the
//! rotated field `JᵀY` is curl-consistent and line-integrates to the
//! dressed potential `V` with `Y_s = ∂V/∂x_{d+s}`, `Y_{d+s} = -∂V/∂x_s`.
//! The scalar potential `Φ` with `∇Φ = Y` exists only when `Y` is itself a
//! gradient field; it is returned when the loop integrals close and left
//! out otherwise.

use super::{symplectic_j, EvolutionError, StateField};
use crate::grid::RectGrid;

/// A sampled vector field on a rectangular grid, one component array per
/// axis.
pub struct VectorField {
    pub grid: RectGrid,
    pub components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn from_fn(grid: RectGrid, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let dim = grid.dim();
        let mut components = vec![Vec::with_capacity(grid.len()); dim];
        for i in 0..grid.len() {
            let v = f(&grid.point(i));
            assert_eq!(v.len(), dim);
            for (a, comp) in components.iter_mut().enumerate() {
                comp.push(v[a]);
            }
        }
        VectorField { grid, components }
    }

    /// L² norm of the central-difference divergence over interior cells.
    pub fn divergence_l2(&self) -> f64 {
        let grid = &self.grid;
        let dim = grid.dim();
        let strides = grid.strides();
        let mut acc = 0.0;
        let mut count = 0usize;
        'cells: for i in 0..grid.len() {
            let m = grid.unravel(i);
            for a in 0..dim {
                if m[a] == 0 || m[a] + 1 >= grid.shape[a] {
                    continue 'cells;
                }
            }
            let mut div = 0.0;
            for a in 0..dim {
                div += (self.components[a][i + strides[a]] - self.components[a][i - strides[a]])
                    / (2.0 * grid.step(a));
            }
            acc += div * div;
            count += 1;
        }
        (acc * self.grid.cell_volume()).sqrt() * if count == 0 { 0.0 } else { 1.0 }
    }
}

pub struct PotentialReconstruction {
    /// scalar potential with `∇Φ = Y`, present when `Y` is curl-consistent
    pub phi: Option<StateField>,
    /// dressed potential, anchored to zero at the first cell
    pub v: StateField,
    pub divergence_l2: f64,
    pub phi_loop_residual: f64,
    pub v_loop_residual: f64,
    /// max residual of `Y_s = ∂V/∂x_{d+s}`, `Y_{d+s} = -∂V/∂x_s` over
    /// interior cells
    pub reconstruction_residual: f64,
}

/// Cumulative-trapezoid line integral of a gradient-candidate field along
/// axis order `order`; anchored to zero at the first cell.
fn line_integral(grid: &RectGrid, g: &[Vec<f64>], order: &[usize]) -> Vec<f64> {
    let strides = grid.strides();
    let mut out = vec![f64::NAN; grid.len()];
    out[0] = 0.0;
    // integrate axis by axis: after handling axis `order[0..=k]`, all cells
    // whose later-axis indices are zero are filled
    for (depth, &axis) in order.iter().enumerate() {
        let filled: Vec<usize> = (0..grid.len())
            .filter(|&i| {
                let m = grid.unravel(i);
                order[depth..].iter().all(|&b| m[b] == 0)
            })
            .collect();
        for &base in &filled {
            let mut prev = base;
            for _ in 1..grid.shape[axis] {
                let next = prev + strides[axis];
                out[next] =
                    out[prev] + 0.5 * grid.step(axis) * (g[axis][prev] + g[axis][next]);
                prev = next;
            }
        }
    }
    debug_assert!(out.iter().all(|v| v.is_finite()));
    out
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Reconstruct `(Φ, V)` from the excess-flow field.
///
/// Errors with `NonZeroDivergence` when `div Y` exceeds 1e-6 in L², and
/// with `PathDependence` when a required line integral fails to close
/// (`Φ` is only required when `require_phi` is set).
pub fn reconstruct_potential(
    y: &VectorField,
    require_phi: bool,
) -> Result<PotentialReconstruction, EvolutionError> {
    let grid = &y.grid;
    let dim = grid.dim();
    assert!(dim % 2 == 0, "phase space dimension must be even");
    let d = dim / 2;
    let div = y.divergence_l2();
    if div > 1e-6 {
        return Err(EvolutionError::NonZeroDivergence(div));
    }

    // ∇V = JᵀY = -JY
    let j = symplectic_j(d);
    let mut grad_v = vec![vec![0.0; grid.len()]; dim];
    for i in 0..dim {
        for k in 0..dim {
            let w = -j[(i, k)];
            if w == 0.0 {
                continue;
            }
            for c in 0..grid.len() {
                grad_v[i][c] += w * y.components[k][c];
            }
        }
    }

    let order_fwd: Vec<usize> = (0..dim).collect();
    let order_rev: Vec<usize> = (0..dim).rev().collect();
    let v_a = line_integral(grid, &grad_v, &order_fwd);
    let v_b = line_integral(grid, &grad_v, &order_rev);
    let v_loop = max_abs_diff(&v_a, &v_b);
    let v_scale = v_a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if v_loop > 1e-6 * v_scale.max(1.0) {
        return Err(EvolutionError::PathDependence { candidate: "V", residual: v_loop });
    }

    let phi_a = line_integral(grid, &y.components, &order_fwd);
    let phi_b = line_integral(grid, &y.components, &order_rev);
    let phi_loop = max_abs_diff(&phi_a, &phi_b);
    let phi_scale = phi_a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let phi_ok = phi_loop <= 1e-6 * phi_scale.max(1.0);
    if require_phi && !phi_ok {
        return Err(EvolutionError::PathDependence { candidate: "Phi", residual: phi_loop });
    }

    // verify Y_s = ∂V/∂x_{d+s}, Y_{d+s} = -∂V/∂x_s on interior cells
    let strides = grid.strides();
    let mut recon: f64 = 0.0;
    'cells: for c in 0..grid.len() {
        let m = grid.unravel(c);
        for a in 0..dim {
            if m[a] == 0 || m[a] + 1 >= grid.shape[a] {
                continue 'cells;
            }
        }
        for s in 0..d {
            let dv_flow =
                (v_a[c + strides[d + s]] - v_a[c - strides[d + s]]) / (2.0 * grid.step(d + s));
            recon = recon.max((y.components[s][c] - dv_flow).abs());
            let dv_force = (v_a[c + strides[s]] - v_a[c - strides[s]]) / (2.0 * grid.step(s));
            recon = recon.max((y.components[d + s][c] + dv_force).abs());
        }
    }

    Ok(PotentialReconstruction {
        phi: phi_ok.then(|| StateField::new(grid.clone(), phi_a)),
        v: StateField::new(grid.clone(), v_a),
        divergence_l2: div,
        phi_loop_residual: phi_loop,
        v_loop_residual: v_loop,
        reconstruction_residual: recon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid2() -> RectGrid {
        RectGrid::new(vec![-1.5, -1.5], vec![1.5, 1.5], vec![96, 96])
    }

    #[test]
    fn zero_field_gives_zero_potentials() {
        let y = VectorField::from_fn(grid2(), |_| vec![0.0, 0.0]);
        let rec = reconstruct_potential(&y, true).unwrap();
        assert!(rec.v.values.iter().all(|&v| v == 0.0));
        assert!(rec.phi.unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn harmonic_potential_recovered_without_phi() {
        // V = ½ω²x₁² gives Y = (∂V/∂x₂, -∂V/∂x₁) = (0, -ω²x₁):
        // divergence-free but not a gradient, so Φ is unavailable while V
        // comes back up to its anchor constant.
        let om2 = 1.7;
        let y = VectorField::from_fn(grid2(), move |x| vec![0.0, -om2 * x[0]]);
        let rec = reconstruct_potential(&y, false).unwrap();
        assert!(rec.phi.is_none(), "loop residual {}", rec.phi_loop_residual);
        let grid = rec.v.grid.clone();
        let anchor = grid.point(0);
        let offset = 0.5 * om2 * anchor[0] * anchor[0];
        for i in (0..grid.len()).step_by(7) {
            let x = grid.point(i);
            let want = 0.5 * om2 * x[0] * x[0] - offset;
            assert_abs_diff_eq!(rec.v.values[i], want, epsilon = 1e-8);
        }
        assert!(rec.reconstruction_residual < 1e-6);
        // asking for Φ on this field is a path-dependence error
        let err = reconstruct_potential(&y, true);
        assert!(matches!(err, Err(EvolutionError::PathDependence { candidate: "Phi", .. })));
    }

    #[test]
    fn harmonic_conjugate_pair_recovers_both() {
        // V = ½ω²(x₁² - x₂²) is harmonic; Y = (-ω²x₂, -ω²x₁) is both
        // divergence-free and curl-free with Φ = -ω²x₁x₂.
        let om2 = 0.9;
        let y = VectorField::from_fn(grid2(), move |x| vec![-om2 * x[1], -om2 * x[0]]);
        let rec = reconstruct_potential(&y, true).unwrap();
        let grid = rec.v.grid.clone();
        let anchor = grid.point(0);
        let v_off = 0.5 * om2 * (anchor[0] * anchor[0] - anchor[1] * anchor[1]);
        let phi_off = -om2 * anchor[0] * anchor[1];
        let phi = rec.phi.unwrap();
        for i in (0..grid.len()).step_by(11) {
            let x = grid.point(i);
            assert_abs_diff_eq!(
                rec.v.values[i],
                0.5 * om2 * (x[0] * x[0] - x[1] * x[1]) - v_off,
                epsilon = 1e-8
            );
            assert_abs_diff_eq!(phi.values[i], -om2 * x[0] * x[1] - phi_off, epsilon = 1e-8);
        }
    }

    #[test]
    fn divergent_field_rejected() {
        let y = VectorField::from_fn(grid2(), |x| vec![x[0], x[1]]);
        let err = reconstruct_potential(&y, false);
        assert!(matches!(err, Err(EvolutionError::NonZeroDivergence(_))));
    }
}
