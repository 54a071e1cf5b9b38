//! Conservative finite-volume solver for the generalized Fokker-Planck
//! equation `∂F/∂t + ∂_i(v_i F) - ∂_i D_ij ∂_j F = 0` on a rectangular
//! box with no-flux boundaries.
//!
//! Fluxes are differenced through cell faces, so the total mass moves only
//! through the (closed) boundary; time stepping is explicit second-order
//! Runge-Kutta under a CFL guard.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{advection_scheme, EvolutionError, StateField};

type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type MatFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Bare flows `u_i`, diffusion matrix `D_ij`, and the optional intensive
/// fields `β_j` of the statistical weight; the acting drift is
/// `v_i = u_i + Σ_j D_ij β_j`.
pub struct DriftDiffusionSpec {
    pub dim: usize,
    u: VecFn,
    diffusion: MatFn,
    beta: Option<VecFn>,
}

impl DriftDiffusionSpec {
    pub fn new(
        dim: usize,
        u: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        diffusion: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        DriftDiffusionSpec {
            dim,
            u: Arc::new(u),
            diffusion: Arc::new(diffusion),
            beta: None,
        }
    }

    /// Attach the weight log-gradient fields `β_j = k_B ∂_j ln Γ`.
    pub fn with_weight_gradient(
        mut self,
        beta: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.beta = Some(Arc::new(beta));
        self
    }

    pub fn bare_flow(&self, a: &[f64]) -> Vec<f64> {
        (self.u)(a)
    }

    pub fn diffusion(&self, a: &[f64]) -> DMatrix<f64> {
        (self.diffusion)(a)
    }

    /// Acting drift `v = u + D·β`.
    pub fn drift(&self, a: &[f64]) -> Vec<f64> {
        let mut v = (self.u)(a);
        if let Some(beta) = &self.beta {
            let b = beta(a);
            let d = (self.diffusion)(a);
            for i in 0..self.dim {
                for j in 0..self.dim {
                    v[i] += d[(i, j)] * b[j];
                }
            }
        }
        v
    }

    /// Smallest diffusion eigenvalue over the grid nodes.
    pub fn min_diffusion_eigenvalue(&self, grid: &crate::grid::RectGrid) -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..grid.len() {
            let d = self.diffusion(&grid.point(i));
            let sym = 0.5 * (&d + &d.transpose());
            for l in sym.symmetric_eigen().eigenvalues.iter() {
                min = min.min(*l);
            }
        }
        min
    }
}

#[derive(Debug, Clone)]
pub struct FpOptions {
    /// registered advection scheme name
    pub scheme: String,
    /// keep every `stride`-th step in the trajectory (0 keeps only the end)
    pub snapshot_stride: usize,
    /// verify the initial mass is one
    pub normalized_mode: bool,
}

impl Default for FpOptions {
    fn default() -> Self {
        FpOptions {
            scheme: "linear-upwind".into(),
            snapshot_stride: 0,
            normalized_mode: false,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FpDiagnostics {
    pub steps: usize,
    pub max_mass_drift_per_step: f64,
    pub total_clipped_mass: f64,
    pub min_density_seen: f64,
    /// set when clipping had to remove mass below -1e-8
    pub negative_density_warning: bool,
}

pub struct FpTrajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<StateField>,
    pub final_state: StateField,
    pub diagnostics: FpDiagnostics,
}

struct Stencil {
    /// per-axis face drift velocity, indexed by `face_index(axis, cell, k)`
    face_v: Vec<Vec<f64>>,
    /// per-axis face diffusion row `D_a·`, same indexing
    face_d: Vec<Vec<Vec<f64>>>,
    has_cross_terms: bool,
}

/// Flat index of the `k`-th face along `axis` (k in 0..=shape[axis]) at the
/// transverse position of cell `multi`.
fn face_flat(grid: &crate::grid::RectGrid, axis: usize, multi: &[usize], k: usize) -> usize {
    let mut flat = 0usize;
    for a in 0..grid.dim() {
        let n = if a == axis { grid.shape[a] + 1 } else { grid.shape[a] };
        let i = if a == axis { k } else { multi[a] };
        flat = flat * n + i;
    }
    flat
}

fn build_stencil(grid: &crate::grid::RectGrid, spec: &DriftDiffusionSpec) -> Stencil {
    let dim = grid.dim();
    let mut face_v = Vec::with_capacity(dim);
    let mut face_d = Vec::with_capacity(dim);
    let mut has_cross = false;
    for axis in 0..dim {
        let count: usize = (0..dim)
            .map(|a| if a == axis { grid.shape[a] + 1 } else { grid.shape[a] })
            .product();
        let mut v = vec![0.0; count];
        let mut drow = vec![vec![0.0; count]; dim];
        // iterate over transverse cells and face positions
        for cell in 0..grid.len() {
            let multi = grid.unravel(cell);
            if multi[axis] != 0 {
                continue; // enumerate each transverse line once
            }
            for k in 0..=grid.shape[axis] {
                let mut pt = grid.point(cell);
                pt[axis] = grid.lo[axis] + k as f64 * grid.step(axis);
                let fi = face_flat(grid, axis, &multi, k);
                v[fi] = spec.drift(&pt)[axis];
                let d = spec.diffusion(&pt);
                for b in 0..dim {
                    drow[b][fi] = d[(axis, b)];
                    if b != axis && d[(axis, b)] != 0.0 {
                        has_cross = true;
                    }
                }
            }
        }
        face_v.push(v);
        face_d.push(drow);
    }
    Stencil { face_v, face_d, has_cross_terms: has_cross }
}

/// Explicit CFL bound `0.9 · min(h/|v|, h²/(2 tr D))` over the grid.
pub fn cfl_bound(grid: &crate::grid::RectGrid, spec: &DriftDiffusionSpec) -> f64 {
    let mut bound = f64::INFINITY;
    for i in 0..grid.len() {
        let pt = grid.point(i);
        let v = spec.drift(&pt);
        let d = spec.diffusion(&pt);
        let tr: f64 = (0..grid.dim()).map(|a| d[(a, a)]).sum();
        for a in 0..grid.dim() {
            let h = grid.step(a);
            if v[a].abs() > 0.0 {
                bound = bound.min(h / v[a].abs());
            }
            if tr > 0.0 {
                bound = bound.min(h * h / (2.0 * tr));
            }
        }
    }
    0.9 * bound
}

/// Evolve a density under drift and diffusion with no-flux boundaries.
pub fn fp_evolve(
    state: &StateField,
    spec: &DriftDiffusionSpec,
    t_span: f64,
    dt: f64,
    opts: &FpOptions,
) -> Result<FpTrajectory, EvolutionError> {
    assert_eq!(state.grid.dim(), spec.dim);
    let grid = state.grid.clone();
    let scheme = advection_scheme(&opts.scheme)?;
    if opts.normalized_mode {
        state.check_normalized(1e-8)?;
    }
    let min_eig = spec.min_diffusion_eigenvalue(&grid);
    if min_eig < -1e-12 {
        return Err(EvolutionError::NotPositiveSemidefinite(min_eig));
    }
    let bound = cfl_bound(&grid, spec);
    if dt > bound {
        return Err(EvolutionError::CFLViolation { dt, bound });
    }

    let stencil = build_stencil(&grid, spec);
    let strides = grid.strides();
    let dim = grid.dim();

    let rhs = |f: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        // cell-centered derivatives for the cross-diffusion terms
        let mut grads: Vec<Vec<f64>> = Vec::new();
        if stencil.has_cross_terms {
            for b in 0..dim {
                let mut g = vec![0.0; f.len()];
                for i in 0..f.len() {
                    let mb = grid.unravel(i);
                    let h = grid.step(b);
                    let up = if mb[b] + 1 < grid.shape[b] { f[i + strides[b]] } else { f[i] };
                    let dn = if mb[b] > 0 { f[i - strides[b]] } else { f[i] };
                    let span = if mb[b] + 1 < grid.shape[b] && mb[b] > 0 { 2.0 } else { 1.0 };
                    g[i] = (up - dn) / (span * h);
                }
                grads.push(g);
            }
        }
        for axis in 0..dim {
            let h = grid.step(axis);
            for cell in 0..grid.len() {
                let multi = grid.unravel(cell);
                if multi[axis] != 0 {
                    continue;
                }
                // walk the 1D line along `axis`, accumulating interior
                // face fluxes; boundary faces carry zero flux
                for k in 1..grid.shape[axis] {
                    let right = cell + k * strides[axis];
                    let left = right - strides[axis];
                    let fll = if k >= 2 { f[left - strides[axis]] } else { f[left] };
                    let frr = if k + 1 < grid.shape[axis] { f[right + strides[axis]] } else { f[right] };
                    let fi = face_flat(&grid, axis, &multi, k);
                    let v = stencil.face_v[axis][fi];
                    let fface = scheme.face_value(v, fll, f[left], f[right], frr);
                    let mut flux = v * fface;
                    // diagonal diffusion through the face
                    flux -= stencil.face_d[axis][axis][fi] * (f[right] - f[left]) / h;
                    // cross terms: D_ab ∂_b F averaged across the face
                    if stencil.has_cross_terms {
                        for b in 0..dim {
                            if b == axis {
                                continue;
                            }
                            let gb = 0.5 * (grads[b][left] + grads[b][right]);
                            flux -= stencil.face_d[axis][b][fi] * gb;
                        }
                    }
                    out[left] -= flux / h;
                    out[right] += flux / h;
                }
            }
        }
    };

    let steps = (t_span / dt).round().max(0.0) as usize;
    let mut f = state.values.clone();
    let mut k1 = vec![0.0; f.len()];
    let mut k2 = vec![0.0; f.len()];
    let mut predictor = vec![0.0; f.len()];
    let mut times = vec![0.0];
    let mut snapshots = Vec::new();
    if opts.snapshot_stride > 0 {
        snapshots.push(StateField::new(grid.clone(), f.clone()));
    }
    let mut diag = FpDiagnostics {
        steps,
        max_mass_drift_per_step: 0.0,
        total_clipped_mass: 0.0,
        min_density_seen: f64::INFINITY,
        negative_density_warning: false,
    };
    let cell_vol = grid.cell_volume();
    for step in 1..=steps {
        let mass_before: f64 = f.iter().sum::<f64>() * cell_vol;
        rhs(&f, &mut k1);
        for i in 0..f.len() {
            predictor[i] = f[i] + dt * k1[i];
        }
        rhs(&predictor, &mut k2);
        for i in 0..f.len() {
            f[i] += 0.5 * dt * (k1[i] + k2[i]);
        }
        // clip round-off negatives, log the correction
        let mut clipped = 0.0;
        for v in f.iter_mut() {
            diag.min_density_seen = diag.min_density_seen.min(*v);
            if *v < 0.0 {
                if *v < -1e-8 {
                    diag.negative_density_warning = true;
                }
                clipped -= *v;
                *v = 0.0;
            }
        }
        diag.total_clipped_mass += clipped * cell_vol;
        let mass_after: f64 = f.iter().sum::<f64>() * cell_vol;
        diag.max_mass_drift_per_step = diag
            .max_mass_drift_per_step
            .max((mass_after - mass_before).abs());
        times.push(step as f64 * dt);
        if opts.snapshot_stride > 0 && step % opts.snapshot_stride == 0 {
            snapshots.push(StateField::new(grid.clone(), f.clone()));
        }
    }
    Ok(FpTrajectory {
        times,
        snapshots,
        final_state: StateField::new(grid, f),
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RectGrid;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn gaussian_field(grid: RectGrid, mean: f64, sigma: f64) -> StateField {
        StateField::from_fn(grid, |a| {
            (-0.5 * ((a[0] - mean) / sigma).powi(2)).exp()
                / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        })
    }

    #[test]
    fn zero_dynamics_is_identity() {
        let grid = RectGrid::line(-1.0, 1.0, 32);
        let state = gaussian_field(grid, 0.0, 0.2);
        let spec = DriftDiffusionSpec::new(1, |_| vec![0.0], |_| DMatrix::zeros(1, 1));
        let out = fp_evolve(&state, &spec, 0.5, 0.01, &FpOptions::default()).unwrap();
        for (a, b) in out.final_state.values.iter().zip(&state.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn pure_advection_moves_center_of_mass() {
        let grid = RectGrid::line(-2.0, 4.0, 256);
        let state = gaussian_field(grid, 0.0, 0.3);
        let v0 = 0.8;
        let spec = DriftDiffusionSpec::new(1, move |_| vec![v0], |_| DMatrix::zeros(1, 1));
        let t = 1.5;
        let out = fp_evolve(&state, &spec, t, 0.005, &FpOptions::default()).unwrap();
        assert_abs_diff_eq!(out.final_state.mean(0), v0 * t, epsilon = 5e-3);
        assert!(out.diagnostics.max_mass_drift_per_step <= 1e-12);
    }

    #[test]
    fn ou_relaxes_to_stationary_variance() {
        let gamma = 1.0f64;
        let d0 = 0.5f64;
        let sig_inf = (d0 / gamma).sqrt();
        let grid = RectGrid::line(-6.0 * sig_inf, 6.0 * sig_inf, 128);
        let state = gaussian_field(grid, 0.0, 0.6 * sig_inf).normalized();
        let spec = DriftDiffusionSpec::new(
            1,
            move |a| vec![-gamma * a[0]],
            move |_| DMatrix::from_element(1, 1, d0),
        );
        let dt = 0.8 * cfl_bound(&state.grid, &spec);
        let opts = FpOptions { scheme: "centered".into(), ..Default::default() };
        let out = fp_evolve(&state, &spec, 5.0 / gamma, dt, &opts).unwrap();
        assert_relative_eq!(out.final_state.variance(0), d0 / gamma, max_relative = 5e-3);
        assert!(out.diagnostics.max_mass_drift_per_step <= 1e-12);
    }

    #[test]
    fn drift_decomposition_matches() {
        // v - u = D·β pointwise
        let spec = DriftDiffusionSpec::new(
            2,
            |a| vec![a[1], -a[0]],
            |_| DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.2]),
        )
        .with_weight_gradient(|a| vec![-a[0], -2.0 * a[1]]);
        let a = [0.7, -0.4];
        let v = spec.drift(&a);
        let u = spec.bare_flow(&a);
        let d = spec.diffusion(&a);
        let b = [-a[0], -2.0 * a[1]];
        for i in 0..2 {
            let want = u[i] + d[(i, 0)] * b[0] + d[(i, 1)] * b[1];
            assert_abs_diff_eq!(v[i], want, epsilon = 1e-12);
        }
    }

    #[test]
    fn cfl_violation_rejected() {
        let grid = RectGrid::line(-1.0, 1.0, 64);
        let state = gaussian_field(grid, 0.0, 0.2);
        let spec = DriftDiffusionSpec::new(1, |_| vec![5.0], |_| DMatrix::zeros(1, 1));
        let err = fp_evolve(&state, &spec, 1.0, 0.5, &FpOptions::default());
        assert!(matches!(err, Err(EvolutionError::CFLViolation { .. })));
    }

    #[test]
    fn indefinite_diffusion_rejected() {
        let grid = RectGrid::line(-1.0, 1.0, 16);
        let state = gaussian_field(grid, 0.0, 0.2);
        let spec = DriftDiffusionSpec::new(1, |_| vec![0.0], |_| DMatrix::from_element(1, 1, -0.1));
        let err = fp_evolve(&state, &spec, 0.1, 1e-4, &FpOptions::default());
        assert!(matches!(err, Err(EvolutionError::NotPositiveSemidefinite(_))));
    }

    #[test]
    fn anisotropic_2d_diffusion_conserves_mass() {
        let grid = RectGrid::new(vec![-2.0, -2.0], vec![2.0, 2.0], vec![48, 48]);
        let state = StateField::from_fn(grid, |a| {
            (-2.0 * (a[0] * a[0] + a[1] * a[1])).exp()
        })
        .normalized();
        let spec = DriftDiffusionSpec::new(
            2,
            |_| vec![0.0, 0.0],
            |_| DMatrix::from_row_slice(2, 2, &[0.2, 0.05, 0.05, 0.1]),
        );
        let dt = 0.8 * cfl_bound(&state.grid, &spec);
        let out = fp_evolve(&state, &spec, 0.3, dt, &FpOptions::default()).unwrap();
        assert_abs_diff_eq!(out.final_state.mass(), 1.0, epsilon = 1e-9);
        // variance grows like 2 D t along each axis
        let dv = out.final_state.variance(0) - state.variance(0);
        assert_relative_eq!(dv, 2.0 * 0.2 * 0.3, max_relative = 0.05);
    }
}
