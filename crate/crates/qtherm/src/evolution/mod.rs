//! Phenomenological evolution: Onsager relaxation on the manifold,
//! statistical-weight constructions, and conservative finite-volume solvers
//! for the generalized Fokker-Planck equation in state space and in the
//! doubled (force/flow) phase space.

mod flux;
mod fp;
mod onsager;
mod phase;
mod potential;
mod weight;

pub use flux::{advection_scheme, AdvectionScheme, Centered, LinearUpwind, Upwind};
pub use fp::{cfl_bound, fp_evolve, DriftDiffusionSpec, FpDiagnostics, FpOptions, FpTrajectory};
pub use onsager::{heat_exchange_model, integrate_onsager, OnsagerModel, OnsagerTrajectory};
pub use phase::{fp_phase_space_evolve, phase_cfl_bound, phase_space_rhs, symplectic_j, PhaseSpaceModel, PhaseTrajectory};
pub(crate) use phase::hamiltonian_velocities_of;
pub use potential::{reconstruct_potential, PotentialReconstruction, VectorField};
pub use weight::{build_lambda_tilde, WeightModel};

use thiserror::Error;

use crate::grid::RectGrid;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("time step {dt:.3e} violates the CFL bound {bound:.3e}")]
    CFLViolation { dt: f64, bound: f64 },
    #[error("trajectory left the chart box at t = {t:.6}")]
    DomainExit { t: f64 },
    #[error("normalization integral is not finite")]
    DivergentNormalization,
    #[error("density not normalized: total mass {0}")]
    NonNormalizedDensity(f64),
    #[error("vector field has nonzero divergence (L2 norm {0:.3e})")]
    NonZeroDivergence(f64),
    #[error("{candidate} line integral is path dependent (loop residual {residual:.3e})")]
    PathDependence { candidate: &'static str, residual: f64 },
    #[error("diffusion matrix not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositiveSemidefinite(f64),
    #[error("unknown advection scheme '{0}'")]
    UnknownScheme(String),
    #[error("{0}")]
    BadModel(String),
}

/// A gridded density over a rectangular box, cell-centered.
///
/// `values` holds `F`; the normalized density is `f = F / ∫F` when the
/// field is used in normalized mode.
#[derive(Debug, Clone)]
pub struct StateField {
    pub grid: RectGrid,
    pub values: Vec<f64>,
}

impl StateField {
    pub fn new(grid: RectGrid, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len());
        StateField { grid, values }
    }

    pub fn from_fn(grid: RectGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = grid.sample(&f);
        StateField { grid, values }
    }

    pub fn zeros(grid: RectGrid) -> Self {
        let n = grid.len();
        StateField { grid, values: vec![0.0; n] }
    }

    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Rescale so the midpoint-rule mass is one.
    pub fn normalized(&self) -> StateField {
        let m = self.mass();
        assert!(m > 0.0, "cannot normalize zero or negative mass");
        StateField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v / m).collect(),
        }
    }

    pub fn check_normalized(&self, tol: f64) -> Result<(), EvolutionError> {
        let m = self.mass();
        if (m - 1.0).abs() > tol {
            return Err(EvolutionError::NonNormalizedDensity(m));
        }
        Ok(())
    }

    /// Raw moment `∫ a^orders F da / ∫ F da`.
    pub fn moment(&self, orders: &[usize]) -> f64 {
        assert_eq!(orders.len(), self.grid.dim());
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let pt = self.grid.point(i);
            let mono: f64 = pt
                .iter()
                .zip(orders)
                .map(|(x, &o)| x.powi(o as i32))
                .product();
            num += v * mono;
            den += v;
        }
        num / den
    }

    pub fn mean(&self, axis: usize) -> f64 {
        let mut orders = vec![0; self.grid.dim()];
        orders[axis] = 1;
        self.moment(&orders)
    }

    pub fn variance(&self, axis: usize) -> f64 {
        let m = self.mean(axis);
        let mut orders = vec![0; self.grid.dim()];
        orders[axis] = 2;
        self.moment(&orders) - m * m
    }

    /// Excess kurtosis along an axis.
    pub fn excess_kurtosis(&self, axis: usize) -> f64 {
        let m = self.mean(axis);
        let var = self.variance(axis);
        let mut o3 = vec![0; self.grid.dim()];
        o3[axis] = 3;
        let mut o4 = vec![0; self.grid.dim()];
        o4[axis] = 4;
        let m3 = self.moment(&o3);
        let m4 = self.moment(&o4);
        let mu4 = m4 - 4.0 * m * m3 + 6.0 * m * m * (var + m * m) - 3.0 * m.powi(4);
        mu4 / (var * var) - 3.0
    }

    /// `-∫ F ln F` (entropy-like functional; zero cells contribute zero).
    pub fn gibbs_entropy(&self) -> f64 {
        let dv = self.grid.cell_volume();
        -self
            .values
            .iter()
            .filter(|&&f| f > 0.0)
            .map(|&f| f * f.ln())
            .sum::<f64>()
            * dv
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV export: one row per cell, coordinates then value, floats at 17
    /// significant digits.
    pub fn to_csv(&self, value_name: &str) -> String {
        let d = self.grid.dim();
        let mut out = String::new();
        for a in 0..d {
            out.push_str(&format!("a{}", a + 1));
            out.push(',');
        }
        out.push_str(value_name);
        out.push('\n');
        for (i, v) in self.values.iter().enumerate() {
            let pt = self.grid.point(i);
            for x in pt {
                out.push_str(&format!("{x:.16e},"));
            }
            out.push_str(&format!("{v:.16e}\n"));
        }
        out
    }
}
