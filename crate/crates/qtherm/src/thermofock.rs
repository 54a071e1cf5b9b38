//! Desk-scale second quantization of thermocorpuscles.
//!
//! Phase space is tiled into cells that play the role of modes; the
//! symmetric Fock space is truncated at a total occupation `N_max`. The
//! discrete canonical commutation relations carry the cell volume:
//! `[a_k⁻, a_l⁺] = δ_{k,l}/Δ`, so the one-particle density
//! `F(x_k) = ⟨R, a_k⁺ a_k⁻ R⟩` keeps the continuum normalization
//! `Σ Δ F = particle number` under cell refinement.
//!
//! The kinetic generator is assembled from the Moyal-commutator kernels of
//! the interaction polynomials truncated at first order in the
//! quasithermodynamic parameter, where they reduce to Poisson-bracket
//! transport; the discretization is the same skew form the phase-space
//! Liouville solver uses, so the single-particle sector of the generator
//! matches that solver cell for cell. The generator is real antisymmetric
//! on the real state vector, i.e. `i K̂` is the self-adjoint presentation.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::evolution::{hamiltonian_velocities_of, StateField};
use crate::grid::RectGrid;
use crate::poly::Poly;

#[derive(Debug, Error)]
pub enum ThermofockError {
    #[error("truncated Fock dimension {0} exceeds the desk-scale budget 2e4")]
    DimensionExplosion(usize),
    #[error("kernel assembly lost antisymmetry (defect {0:.3e})")]
    NonHermitianKernel(f64),
    #[error("time step too large: dt·‖K‖ = {0:.3e} > 0.1")]
    StepTooLarge(f64),
    #[error("exponential weight overflow: exponent {0:.3e}")]
    WeightOverflow(f64),
    #[error("{0}")]
    BadModel(String),
}

/// Uniform tiling of the `2d`-dimensional phase-space box into mode cells.
#[derive(Debug, Clone)]
pub struct PhaseCellBasis {
    pub grid: RectGrid,
    /// force/flow pairs: the grid dimension is `2d`
    pub d: usize,
}

impl PhaseCellBasis {
    pub fn new(grid: RectGrid, d: usize) -> Self {
        assert_eq!(grid.dim(), 2 * d);
        PhaseCellBasis { grid, d }
    }

    pub fn cells(&self) -> usize {
        self.grid.len()
    }

    pub fn delta(&self) -> f64 {
        self.grid.cell_volume()
    }
}

/// Occupation-number basis of the truncated symmetric Fock space,
/// `Σ_k n_k ≤ n_max`.
pub struct FockBasis {
    pub cells: usize,
    pub n_max: usize,
    pub delta: f64,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

pub type FockVector = DVector<f64>;

impl FockBasis {
    pub fn build(basis: &PhaseCellBasis, n_max: usize) -> Result<Self, ThermofockError> {
        let cells = basis.cells();
        let mut states = Vec::new();
        let mut cur = vec![0u8; cells];
        fn rec(cur: &mut Vec<u8>, slot: usize, budget: usize, out: &mut Vec<Vec<u8>>) {
            if slot == cur.len() {
                out.push(cur.clone());
                return;
            }
            for n in 0..=budget {
                cur[slot] = n as u8;
                rec(cur, slot + 1, budget - n, out);
                if out.len() > 20_000 {
                    return;
                }
            }
            cur[slot] = 0;
        }
        rec(&mut cur, 0, n_max, &mut states);
        if states.len() > 20_000 {
            return Err(ThermofockError::DimensionExplosion(states.len()));
        }
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(FockBasis {
            cells,
            n_max,
            delta: basis.delta(),
            states,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn occupation(&self, state: usize) -> &[u8] {
        &self.states[state]
    }

    pub fn state_index(&self, occupation: &[u8]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn vacuum(&self) -> FockVector {
        let mut v = DVector::zeros(self.dim());
        v[self.state_index(&vec![0; self.cells]).unwrap()] = 1.0;
        v
    }

    /// Normalized one-particle state concentrated in `cell`.
    pub fn single_particle(&self, cell: usize) -> FockVector {
        let mut occ = vec![0u8; self.cells];
        occ[cell] = 1;
        let mut v = DVector::zeros(self.dim());
        v[self.state_index(&occ).unwrap()] = 1.0;
        v
    }

    /// Normalized one-particle state with cell amplitudes `amps`.
    pub fn one_particle_wave(&self, amps: &[f64]) -> FockVector {
        assert_eq!(amps.len(), self.cells);
        let norm: f64 = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut v = DVector::zeros(self.dim());
        for (k, &a) in amps.iter().enumerate() {
            let mut occ = vec![0u8; self.cells];
            occ[k] = 1;
            v[self.state_index(&occ).unwrap()] = a / norm;
        }
        v
    }

    /// Dense annihilation matrix `a_k⁻` (includes the `1/√Δ` cell scale).
    pub fn annihilation_matrix(&self, k: usize) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        let scale = 1.0 / self.delta.sqrt();
        for (col, occ) in self.states.iter().enumerate() {
            if occ[k] == 0 {
                continue;
            }
            let mut dst = occ.clone();
            dst[k] -= 1;
            let row = self.state_index(&dst).unwrap();
            m[(row, col)] = (occ[k] as f64).sqrt() * scale;
        }
        m
    }

    /// Dense creation matrix `a_k⁺`; occupation overflow past the top shell
    /// is truncated away.
    pub fn creation_matrix(&self, k: usize) -> DMatrix<f64> {
        self.annihilation_matrix(k).transpose()
    }

    /// Total occupation `Σ_k n_k` of a (normalized) state vector.
    pub fn number_expectation(&self, r: &FockVector) -> f64 {
        self.states
            .iter()
            .zip(r.iter())
            .map(|(occ, &c)| c * c * occ.iter().map(|&n| n as f64).sum::<f64>())
            .sum()
    }
}

/// Model data for the kinetic generator: interaction order, coupling, the
/// per-order Hamiltonian polynomials (variables ordered
/// `X⁰..J⁰, X¹..J¹, …`, coefficients already evaluated at the working λ),
/// the symmetry-breaking rate and the equilibrium state.
pub struct FockModel {
    pub basis: PhaseCellBasis,
    pub n_max: usize,
    /// interaction order cutoff M (0 or 1)
    pub m_order: usize,
    pub kappa: f64,
    /// `h_polys[m]` is `H⁽ᵐ⁾` on `2d(m+1)` variables
    pub h_polys: Vec<Poly>,
    pub epsilon: f64,
    pub lambda: f64,
}

impl FockModel {
    pub fn validate(&self) -> Result<(), ThermofockError> {
        if self.m_order > 1 {
            return Err(ThermofockError::BadModel(
                "interaction orders beyond m = 1 are out of scope".into(),
            ));
        }
        if self.h_polys.len() < self.m_order + 1 {
            return Err(ThermofockError::BadModel("missing interaction polynomial".into()));
        }
        for (m, p) in self.h_polys.iter().enumerate().take(self.m_order + 1) {
            let vars = 2 * self.basis.d * (m + 1);
            if p.nvars != vars {
                return Err(ThermofockError::BadModel(format!(
                    "H^({m}) must have {vars} variables, found {}",
                    p.nvars
                )));
            }
            for v in 0..vars {
                if p.degree_in(v) > 4 {
                    return Err(ThermofockError::BadModel(
                        "interaction polynomials are limited to degree 4 per argument".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Skew-form discretization of `-{H, ·}` on grid cells (zero beyond the
/// boundary): the Liouville right-hand side as a matrix. Exactly
/// antisymmetric by construction.
fn liouville_matrix(grid: &RectGrid, d: usize, hamiltonian: &dyn Fn(&[f64]) -> f64) -> DMatrix<f64> {
    let w = hamiltonian_velocities_of(grid, d, hamiltonian);
    let n = grid.len();
    let strides = grid.strides();
    let mut l = DMatrix::zeros(n, n);
    for axis in 0..grid.dim() {
        let h4 = 4.0 * grid.step(axis);
        for i in 0..n {
            let m = grid.unravel(i);
            if m[axis] + 1 < grid.shape[axis] {
                let j = i + strides[axis];
                l[(i, j)] -= (w[axis][i] + w[axis][j]) / h4;
            }
            if m[axis] > 0 {
                let j = i - strides[axis];
                l[(i, j)] += (w[axis][i] + w[axis][j]) / h4;
            }
        }
    }
    l
}

/// Assemble the kinetic generator `K̂` on the truncated Fock space:
/// `K̂ = Σ_m (ϰ^m/m!) Σ Δ^{m+1} a⁺…a⁺ K⁽ᵐ⁾ a⁻…a⁻` with `K⁽ᵐ⁾` the
/// Moyal-commutator kernel of `H⁽ᵐ⁾`, truncated at first order in `λ⁻¹`
/// (the Poisson-bracket transport kernel), discretized in skew form.
///
/// Returns the real matrix `G` with the evolution reading
/// `∂R/∂t = -G R - ε (R - R_eq)`; `G` is antisymmetric (`iG` self-adjoint)
/// and number-conserving.
pub fn build_kinetic_generator(
    model: &FockModel,
    fock: &FockBasis,
) -> Result<DMatrix<f64>, ThermofockError> {
    model.validate()?;
    let grid = &model.basis.grid;
    let d = model.basis.d;
    let dim = fock.dim();
    let cells = fock.cells;
    let mut g = DMatrix::zeros(dim, dim);

    // m = 0: single-particle transport lifted through a⁺ G₁ a⁻
    let h0 = &model.h_polys[0];
    let kernel0 = {
        let h = |x: &[f64]| h0.eval(x).re;
        // K̂ acts as +K on one-particle amplitudes and ∂R/∂t = -K̂R must
        // reproduce ∂f/∂t = L f, so the kernel is -L
        let l = liouville_matrix(grid, d, &h);
        -l
    };
    for (col, occ) in (0..dim).map(|c| (c, fock.occupation(c).to_vec())) {
        for l_cell in 0..cells {
            if occ[l_cell] == 0 {
                continue;
            }
            let amp_l = occ[l_cell] as f64;
            for k_cell in 0..cells {
                let kv = kernel0[(k_cell, l_cell)];
                if kv == 0.0 {
                    continue;
                }
                let mut dst = occ.clone();
                dst[l_cell] -= 1;
                let gain = (dst[k_cell] as f64 + 1.0).sqrt() * amp_l.sqrt();
                dst[k_cell] += 1;
                let row = fock.state_index(&dst).expect("number-conserving move");
                // Δ · (1/√Δ)² cancels
                g[(row, col)] += kv * gain;
            }
        }
    }

    // m = 1: two-particle kernel on the product grid
    if model.m_order >= 1 && model.kappa != 0.0 {
        let h1 = &model.h_polys[1];
        let mut lo = grid.lo.clone();
        lo.extend_from_slice(&grid.lo);
        let mut hi = grid.hi.clone();
        hi.extend_from_slice(&grid.hi);
        let mut shape = grid.shape.clone();
        shape.extend_from_slice(&grid.shape);
        let pair_grid = RectGrid::new(lo, hi, shape);
        let h = |x: &[f64]| h1.eval(x).re;
        let kernel1 = -liouville_matrix(&pair_grid, 2 * d, &h);
        let pair_index = |a: usize, b: usize| -> usize {
            // product grid raveling: cell a of particle 0 and b of particle 1
            let ma = grid.unravel(a);
            let mb = grid.unravel(b);
            let mut m = ma;
            m.extend(mb);
            pair_grid.ravel(&m)
        };
        let kappa = model.kappa;
        for (col, occ) in (0..dim).map(|c| (c, fock.occupation(c).to_vec())) {
            for l0 in 0..cells {
                if occ[l0] == 0 {
                    continue;
                }
                let mut occ1 = occ.clone();
                let amp0 = occ1[l0] as f64;
                occ1[l0] -= 1;
                for l1 in 0..cells {
                    if occ1[l1] == 0 {
                        continue;
                    }
                    let mut occ2 = occ1.clone();
                    let amp1 = occ2[l1] as f64;
                    occ2[l1] -= 1;
                    let from = pair_index(l0, l1);
                    for k0 in 0..cells {
                        for k1 in 0..cells {
                            let kv = kernel1[(pair_index(k0, k1), from)];
                            if kv == 0.0 {
                                continue;
                            }
                            let mut dst = occ2.clone();
                            let g1 = (dst[k1] as f64 + 1.0).sqrt();
                            dst[k1] += 1;
                            let g0 = (dst[k0] as f64 + 1.0).sqrt();
                            dst[k0] += 1;
                            let row = fock.state_index(&dst).expect("number conserving");
                            // Δ² · (1/√Δ)⁴ cancels
                            g[(row, col)] += kappa * kv * (amp0 * amp1).sqrt() * g0 * g1;
                        }
                    }
                }
            }
        }
    }

    let defect = (&g + &g.transpose()).amax();
    if defect > 1e-10 {
        return Err(ThermofockError::NonHermitianKernel(defect));
    }
    Ok(g)
}

pub struct FockTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<FockVector>,
}

impl FockTrajectory {
    pub fn last(&self) -> &FockVector {
        self.states.last().unwrap()
    }
}

/// Integrate `∂R/∂t = -G R - ε (R - R_eq)` with classical Runge-Kutta.
pub fn evolve_r(
    generator: &DMatrix<f64>,
    r0: &FockVector,
    r_eq: &FockVector,
    epsilon: f64,
    t_span: f64,
    dt: f64,
) -> Result<FockTrajectory, ThermofockError> {
    // row-sum norm bound on ‖K‖
    let norm = (0..generator.nrows())
        .map(|i| generator.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
        + epsilon;
    if dt * norm > 0.1 {
        return Err(ThermofockError::StepTooLarge(dt * norm));
    }
    let rhs = |r: &FockVector| -> FockVector { -(generator * r) - epsilon * (r - r_eq) };
    let steps = (t_span / dt).round().max(0.0) as usize;
    let mut r = r0.clone();
    let mut traj = FockTrajectory { times: vec![0.0], states: vec![r.clone()] };
    for step in 1..=steps {
        let k1 = rhs(&r);
        let k2 = rhs(&(&r + 0.5 * dt * &k1));
        let k3 = rhs(&(&r + 0.5 * dt * &k2));
        let k4 = rhs(&(&r + dt * &k3));
        r += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        traj.times.push(step as f64 * dt);
        traj.states.push(r.clone());
    }
    Ok(traj)
}

/// One-particle density `F(x_k) = ⟨R, a_k⁺ a_k⁻ R⟩ = ⟨n_k⟩/Δ` per cell.
pub fn density_f(r: &FockVector, fock: &FockBasis, basis: &PhaseCellBasis) -> StateField {
    let mut values = vec![0.0; fock.cells];
    for (s, &c) in r.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let w = c * c;
        for (k, &n) in fock.occupation(s).iter().enumerate() {
            values[k] += w * n as f64;
        }
    }
    let delta = fock.delta;
    for v in values.iter_mut() {
        *v /= delta;
    }
    StateField::new(basis.grid.clone(), values)
}

/// Rate of change of the one-particle density predicted by the generator:
/// `d⟨n̂_k⟩/dt = -2⟨GR, n̂_k R⟩` (the first link of the correlation
/// hierarchy).
pub fn density_rate(
    r: &FockVector,
    generator: &DMatrix<f64>,
    fock: &FockBasis,
) -> Vec<f64> {
    let gr = generator * r;
    let mut out = vec![0.0; fock.cells];
    for (s, (&c, &gc)) in r.iter().zip(gr.iter()).enumerate() {
        if c == 0.0 && gc == 0.0 {
            continue;
        }
        for (k, &n) in fock.occupation(s).iter().enumerate() {
            out[k] += -2.0 * gc * c * n as f64;
        }
    }
    let delta = fock.delta;
    for v in out.iter_mut() {
        *v /= delta;
    }
    out
}

/// Generating function of fluctuations
/// `Z(u) = Σ Δ F(x) exp((i/k_B) u·x)` and the real-exponent partition
/// variant `Σ Δ F(x) exp(-u·X/k_B)` with the flow components of `u` zero.
pub fn generating_z(
    f: &StateField,
    u: &[f64],
    k_b: f64,
    real_exponent: bool,
) -> Result<Complex64, ThermofockError> {
    assert_eq!(u.len(), f.grid.dim());
    let cell = f.grid.cell_volume();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &v) in f.values.iter().enumerate() {
        let pt = f.grid.point(i);
        let dot: f64 = pt.iter().zip(u).map(|(x, ui)| x * ui).sum();
        if real_exponent {
            let expo = -dot / k_b;
            if expo.abs() > 700.0 {
                return Err(ThermofockError::WeightOverflow(expo));
            }
            acc += Complex64::new(v * expo.exp(), 0.0);
        } else {
            acc += v * Complex64::from_polar(1.0, dot / k_b);
        }
    }
    Ok(acc * cell)
}

// ── shipped interaction presets ─────────────────────────────────────────

/// `H⁰ = ½ Σ J_s²`: free transport of thermocorpuscles.
pub fn preset_free_transport(d: usize) -> Poly {
    let nv = 2 * d;
    let mut p = Poly::zero(nv);
    for s in 0..d {
        let j = Poly::var(nv, d + s);
        p = p.add(&j.mul(&j).scaled(0.5));
    }
    p
}

/// `H⁰ = ½ Σ (J_s² + X_s²)`: harmonic single-particle rotation.
pub fn preset_harmonic(d: usize) -> Poly {
    let nv = 2 * d;
    let mut p = preset_free_transport(d);
    for s in 0..d {
        let x = Poly::var(nv, s);
        p = p.add(&x.mul(&x).scaled(0.5));
    }
    p
}

/// Quartic pair coupling `H¹ = (g/4)(X⁰ - X¹)⁴` on the first force
/// directions of the two particles.
pub fn preset_quartic_coupling(d: usize, g: f64) -> Poly {
    let nv = 4 * d;
    let x0 = Poly::var(nv, 0);
    let x1 = Poly::var(nv, 2 * d);
    let diff = x0.sub(&x1);
    let sq = diff.mul(&diff);
    sq.mul(&sq).scaled(0.25 * g)
}
