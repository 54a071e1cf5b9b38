//! Relaxation of extensive quantities driven by flows and Onsager
//! coefficients: `dx_i/dt = J_i + Σ_j L_{ij} y_j(x)`.
//!
//! The doubled variant carries flows as extra state components; its
//! flow-of-flow source terms are projected to zero each evaluation, which
//! restricts the admissible relaxation curves.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::EvolutionError;

type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type MatFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

pub struct OnsagerModel {
    /// state dimension: `d`, or `2d` for the doubled variant
    pub dim: usize,
    flows: VecFn,
    onsager: MatFn,
    intensive: VecFn,
    /// doubled (force/flow) form: the upper `d` components are flows and
    /// their sources are projected out
    pub doubled: bool,
    /// optional state box; leaving it aborts the integration
    pub domain: Option<(Vec<f64>, Vec<f64>)>,
}

impl OnsagerModel {
    pub fn new(
        dim: usize,
        flows: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        onsager: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        intensive: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        OnsagerModel {
            dim,
            flows: Arc::new(flows),
            onsager: Arc::new(onsager),
            intensive: Arc::new(intensive),
            doubled: false,
            domain: None,
        }
    }

    pub fn doubled(mut self) -> Self {
        assert!(self.dim % 2 == 0, "doubled form needs an even state dimension");
        self.doubled = true;
        self
    }

    pub fn with_domain(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.domain = Some((lo, hi));
        self
    }

    /// Right-hand side with the flow-of-flow projection applied.
    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        let mut j = (self.flows)(x);
        if self.doubled {
            let d = self.dim / 2;
            for s in 0..d {
                j[d + s] = 0.0;
            }
        }
        let l = (self.onsager)(x);
        let y = (self.intensive)(x);
        for i in 0..self.dim {
            for k in 0..self.dim {
                j[i] += l[(i, k)] * y[k];
            }
        }
        j
    }

    /// Magnitude of the flow-of-flow components before projection; a
    /// diagnostic for how strongly the constraint binds.
    pub fn flow_of_flow_residual(&self, x: &[f64]) -> f64 {
        if !self.doubled {
            return 0.0;
        }
        let j = (self.flows)(x);
        let d = self.dim / 2;
        (0..d).map(|s| j[d + s].abs()).fold(0.0, f64::max)
    }
}

pub struct OnsagerTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl OnsagerTrajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().unwrap()
    }
}

/// Classical fourth-order Runge-Kutta integration of the relaxation
/// equations over `t_span` with fixed step `dt`.
pub fn integrate_onsager(
    model: &OnsagerModel,
    initial: &[f64],
    t_span: f64,
    dt: f64,
) -> Result<OnsagerTrajectory, EvolutionError> {
    assert!(dt > 0.0 && t_span >= 0.0);
    assert_eq!(initial.len(), model.dim);
    let steps = (t_span / dt).round() as usize;
    let mut x = initial.to_vec();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x.clone());
    let mut t = 0.0;
    for _ in 0..steps {
        if let Some((lo, hi)) = &model.domain {
            if x.iter().zip(lo.iter().zip(hi)).any(|(v, (l, h))| v < l || v > h) {
                return Err(EvolutionError::DomainExit { t });
            }
        }
        let k1 = model.rhs(&x);
        let x2: Vec<f64> = x.iter().zip(&k1).map(|(v, k)| v + 0.5 * dt * k).collect();
        let k2 = model.rhs(&x2);
        let x3: Vec<f64> = x.iter().zip(&k2).map(|(v, k)| v + 0.5 * dt * k).collect();
        let k3 = model.rhs(&x3);
        let x4: Vec<f64> = x.iter().zip(&k3).map(|(v, k)| v + dt * k).collect();
        let k4 = model.rhs(&x4);
        for i in 0..model.dim {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += dt;
        times.push(t);
        states.push(x.clone());
    }
    Ok(OnsagerTrajectory { times, states })
}

/// Two-subsystem heat-exchange model: ideal-gas subsystems with heat
/// capacities `c_v ν`, symmetric coupling `ℓ > 0`, zero bare flows.
///
/// `dE_1/dt = ℓ(β_1 - β_2)`, `dE_2/dt = ℓ(β_2 - β_1)` with
/// `β_i = c_v ν_i / E_i`; the total energy is conserved exactly and the
/// combined entropy is nondecreasing.
pub fn heat_exchange_model(c_v: f64, nu: [f64; 2], coupling: f64) -> OnsagerModel {
    assert!(c_v > 0.0 && coupling > 0.0);
    OnsagerModel::new(
        2,
        |_x| vec![0.0, 0.0],
        move |_x| DMatrix::from_row_slice(2, 2, &[coupling, -coupling, -coupling, coupling]),
        move |x| vec![c_v * nu[0] / x[0], c_v * nu[1] / x[1]],
    )
    .with_domain(vec![1e-9, 1e-9], vec![f64::INFINITY, f64::INFINITY])
}
