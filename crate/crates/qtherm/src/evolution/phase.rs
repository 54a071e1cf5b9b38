//! Phase-space transport of the fluctuation density on `ℝ^{2d}`:
//! Liouville advection by the self-consistent Hamiltonian
//! `H = ½ Σ x_{d+s}² + V(x)` plus a collision diffusion term.
//!
//! The Liouville part is discretized in the energy-friendly skew form
//! `½ (w·∇F + ∇·(wF))` with the velocity field taken as central
//! differences of the sampled Hamiltonian, which makes the discrete
//! advection generator exactly antisymmetric and its divergence vanish
//! identically away from the boundary.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{EvolutionError, StateField};
use crate::grid::RectGrid;

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Canonical symplectic matrix `J` on `ℝ^{2d}`:
/// `J_{i,j} = δ_{i,j-d} - δ_{i-d,j}` (1-based), satisfying
/// `J⁻¹ = Jᵀ = -J`.
pub fn symplectic_j(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * d, 2 * d);
    for s in 0..d {
        j[(s, d + s)] = 1.0;
        j[(d + s, s)] = -1.0;
    }
    j
}

/// Self-consistent Hamiltonian model: dressed potential, collision
/// diffusion, and an optional equilibrium weight for detailed-balance runs.
pub struct PhaseSpaceModel {
    /// number of force/flow pairs; the grid dimension is `2d`
    pub d: usize,
    potential: ScalarFn,
    /// constant collision diffusion matrix on `ℝ^{2d}`
    pub d_tilde: DMatrix<f64>,
    /// `ln Γ̃(x)`; when present (and `D̃` diagonal) the collision term is
    /// discretized as `∂_i D̃_ii Γ̃ ∂_i (F/Γ̃)`, which balances exactly on
    /// `F ∝ Γ̃`
    equilibrium_log_weight: Option<ScalarFn>,
}

impl PhaseSpaceModel {
    pub fn new(
        d: usize,
        potential: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        d_tilde: DMatrix<f64>,
    ) -> Self {
        assert_eq!(d_tilde.nrows(), 2 * d);
        assert_eq!(d_tilde.ncols(), 2 * d);
        PhaseSpaceModel {
            d,
            potential: Arc::new(potential),
            d_tilde,
            equilibrium_log_weight: None,
        }
    }

    pub fn with_equilibrium_weight(
        mut self,
        ln_weight: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.equilibrium_log_weight = Some(Arc::new(ln_weight));
        self
    }

    /// `H(x) = ½ Σ_s x_{d+s}² + V(x)`.
    pub fn hamiltonian(&self, x: &[f64]) -> f64 {
        let d = self.d;
        let kinetic: f64 = (0..d).map(|s| 0.5 * x[d + s] * x[d + s]).sum();
        kinetic + (self.potential)(x)
    }

    /// `∫ F·H / ∫ F` over a field.
    pub fn mean_h(&self, field: &StateField) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &v) in field.values.iter().enumerate() {
            num += v * self.hamiltonian(&field.grid.point(i));
            den += v;
        }
        num / den
    }
}

pub struct PhaseTrajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<StateField>,
    pub final_state: StateField,
    pub mass_trace: Vec<f64>,
    pub mean_h_trace: Vec<f64>,
    pub entropy_trace: Vec<f64>,
    pub max_mass_drift_per_step: f64,
}

/// CFL bound for the phase-space solver.
pub fn phase_cfl_bound(grid: &RectGrid, model: &PhaseSpaceModel) -> f64 {
    let velocities = hamiltonian_velocities(grid, model);
    let tr: f64 = (0..grid.dim()).map(|a| model.d_tilde[(a, a)]).sum();
    let mut bound = f64::INFINITY;
    for a in 0..grid.dim() {
        let h = grid.step(a);
        let vmax = velocities[a].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if vmax > 0.0 {
            bound = bound.min(h / vmax);
        }
        if tr > 0.0 {
            bound = bound.min(h * h / (2.0 * tr));
        }
    }
    0.9 * bound
}

/// Central-difference Hamiltonian velocities at cell centers:
/// `w_s = ∂H/∂x_{d+s}`, `w_{d+s} = -∂H/∂x_s`, from the sampled `H`, so the
/// discrete central divergence of `w` vanishes identically in the interior.
fn hamiltonian_velocities(grid: &RectGrid, model: &PhaseSpaceModel) -> Vec<Vec<f64>> {
    let model_h = |x: &[f64]| model.hamiltonian(x);
    hamiltonian_velocities_of(grid, model.d, &model_h)
}

/// Velocity field of an arbitrary sampled Hamiltonian on a `2d`-dim grid.
pub(crate) fn hamiltonian_velocities_of(
    grid: &RectGrid,
    d: usize,
    hamiltonian: &dyn Fn(&[f64]) -> f64,
) -> Vec<Vec<f64>> {
    let dim = grid.dim();
    let h_samples: Vec<f64> = (0..grid.len())
        .map(|i| hamiltonian(&grid.point(i)))
        .collect();
    let strides = grid.strides();
    let central = |axis: usize| -> Vec<f64> {
        let mut g = vec![0.0; grid.len()];
        let h = grid.step(axis);
        for i in 0..grid.len() {
            let m = grid.unravel(i);
            let up = if m[axis] + 1 < grid.shape[axis] {
                h_samples[i + strides[axis]]
            } else {
                h_samples[i]
            };
            let dn = if m[axis] > 0 { h_samples[i - strides[axis]] } else { h_samples[i] };
            let span = if m[axis] + 1 < grid.shape[axis] && m[axis] > 0 { 2.0 } else { 1.0 };
            g[i] = (up - dn) / (span * h);
        }
        g
    };
    let mut w = vec![Vec::new(); dim];
    for s in 0..d {
        w[s] = central(d + s);
        let mut g = central(s);
        g.iter_mut().for_each(|v| *v = -*v);
        w[d + s] = g;
    }
    w
}

/// Evolve a phase-space density by Liouville transport plus collision
/// diffusion, explicit second-order Runge-Kutta.
pub fn fp_phase_space_evolve(
    state: &StateField,
    model: &PhaseSpaceModel,
    t_span: f64,
    dt: f64,
    snapshot_stride: usize,
) -> Result<PhaseTrajectory, EvolutionError> {
    let grid = state.grid.clone();
    assert_eq!(grid.dim(), 2 * model.d);
    let dim = grid.dim();
    let strides = grid.strides();
    let bound = phase_cfl_bound(&grid, model);
    if dt > bound {
        return Err(EvolutionError::CFLViolation { dt, bound });
    }
    let sym = 0.5 * (&model.d_tilde + &model.d_tilde.transpose());
    let min_eig = sym
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &l| m.min(l));
    if min_eig < -1e-12 {
        return Err(EvolutionError::NotPositiveSemidefinite(min_eig));
    }
    let weighted = model.equilibrium_log_weight.is_some();
    if weighted {
        for i in 0..dim {
            for j in 0..dim {
                if i != j && model.d_tilde[(i, j)] != 0.0 {
                    return Err(EvolutionError::BadModel(
                        "equilibrium-weighted collision term needs a diagonal diffusion matrix"
                            .into(),
                    ));
                }
            }
        }
    }

    let w = hamiltonian_velocities(&grid, model);
    let g_weight: Vec<f64> = if let Some(lnw) = &model.equilibrium_log_weight {
        (0..grid.len()).map(|i| lnw(&grid.point(i)).exp()).collect()
    } else {
        Vec::new()
    };

    let rhs = |f: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        // skew-form Liouville advection, zero beyond the boundary
        for axis in 0..dim {
            let h2 = 2.0 * grid.step(axis);
            for i in 0..grid.len() {
                let m = grid.unravel(i);
                let fp = if m[axis] + 1 < grid.shape[axis] { f[i + strides[axis]] } else { 0.0 };
                let fm = if m[axis] > 0 { f[i - strides[axis]] } else { 0.0 };
                let wp = if m[axis] + 1 < grid.shape[axis] {
                    w[axis][i + strides[axis]]
                } else {
                    0.0
                };
                let wm = if m[axis] > 0 { w[axis][i - strides[axis]] } else { 0.0 };
                out[i] -= 0.5 * (w[axis][i] * (fp - fm) + (wp * fp - wm * fm)) / h2;
            }
        }
        // collision term
        for axis in 0..dim {
            let h = grid.step(axis);
            for i in 0..grid.len() {
                let m = grid.unravel(i);
                if m[axis] != 0 {
                    continue;
                }
                for k in 1..grid.shape[axis] {
                    let right = i + k * strides[axis];
                    let left = right - strides[axis];
                    let mut flux = 0.0;
                    if weighted {
                        let daa = model.d_tilde[(axis, axis)];
                        let gbar = 0.5 * (g_weight[left] + g_weight[right]);
                        flux -= daa * gbar
                            * (f[right] / g_weight[right] - f[left] / g_weight[left])
                            / h;
                    } else {
                        flux -= model.d_tilde[(axis, axis)] * (f[right] - f[left]) / h;
                        for b in 0..dim {
                            if b == axis || model.d_tilde[(axis, b)] == 0.0 {
                                continue;
                            }
                            // cross term with centered cell gradients
                            let gb = |c: usize| -> f64 {
                                let mc = grid.unravel(c);
                                let hb = grid.step(b);
                                let up = if mc[b] + 1 < grid.shape[b] { f[c + strides[b]] } else { f[c] };
                                let dn = if mc[b] > 0 { f[c - strides[b]] } else { f[c] };
                                let span = if mc[b] + 1 < grid.shape[b] && mc[b] > 0 { 2.0 } else { 1.0 };
                                (up - dn) / (span * hb)
                            };
                            flux -= model.d_tilde[(axis, b)] * 0.5 * (gb(left) + gb(right));
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
    let cell_vol = grid.cell_volume();
    let field_of = |vals: &Vec<f64>| StateField::new(grid.clone(), vals.clone());
    let mut traj = PhaseTrajectory {
        times: vec![0.0],
        snapshots: Vec::new(),
        final_state: field_of(&f),
        mass_trace: vec![f.iter().sum::<f64>() * cell_vol],
        mean_h_trace: vec![model.mean_h(&field_of(&f))],
        entropy_trace: vec![field_of(&f).gibbs_entropy()],
        max_mass_drift_per_step: 0.0,
    };
    if snapshot_stride > 0 {
        traj.snapshots.push(field_of(&f));
    }
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
        let mass_after: f64 = f.iter().sum::<f64>() * cell_vol;
        traj.max_mass_drift_per_step = traj
            .max_mass_drift_per_step
            .max((mass_after - mass_before).abs());
        traj.times.push(step as f64 * dt);
        traj.mass_trace.push(mass_after);
        let fld = field_of(&f);
        traj.mean_h_trace.push(model.mean_h(&fld));
        traj.entropy_trace.push(fld.gibbs_entropy());
        if snapshot_stride > 0 && step % snapshot_stride == 0 {
            traj.snapshots.push(fld);
        }
    }
    traj.final_state = field_of(&f);
    Ok(traj)
}

/// One right-hand-side evaluation; used for stationarity checks.
pub fn phase_space_rhs(state: &StateField, model: &PhaseSpaceModel) -> StateField {
    // evolve by a tiny step and difference; reuses the full discretization
    let dt = 1e-7 * phase_cfl_bound(&state.grid, model).min(1.0);
    let traj = fp_phase_space_evolve(state, model, dt, dt, 0).expect("tiny step under CFL");
    let vals: Vec<f64> = traj
        .final_state
        .values
        .iter()
        .zip(&state.values)
        .map(|(a, b)| (a - b) / dt)
        .collect();
    StateField::new(state.grid.clone(), vals)
}
