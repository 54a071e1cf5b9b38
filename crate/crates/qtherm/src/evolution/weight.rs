//! Statistical-weight presentation of the fluctuation manifold: pairs
//! `(F, σ)` with `F(a) = Lⁿ exp(-Lⁿ σ(a)/k_B) Γ(a)` and the normalization
//! membership `∫ Γ exp(-Lⁿσ/k_B) da = 1`.

use std::sync::Arc;

use super::{EvolutionError, StateField};
use crate::grid::RectGrid;
use crate::manifold::ChartFunction;

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Statistical weight `Γ > 0` on a box, with the system size `L`, the
/// spatial dimension `n` (volume `V = Lⁿ`) and the entropy unit constant.
pub struct WeightModel {
    pub grid: RectGrid,
    gamma: ScalarFn,
    pub l_size: f64,
    pub n_vol: u32,
    /// units constant in the entropy formula `S = k_B ln(cΓ)`
    pub c_units: f64,
    pub k_b: f64,
}

impl WeightModel {
    pub fn new(
        grid: RectGrid,
        gamma: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        l_size: f64,
        n_vol: u32,
        c_units: f64,
        k_b: f64,
    ) -> Self {
        assert!(l_size > 0.0 && c_units > 0.0 && k_b > 0.0);
        WeightModel {
            grid,
            gamma: Arc::new(gamma),
            l_size,
            n_vol,
            c_units,
            k_b,
        }
    }

    pub fn gamma(&self, a: &[f64]) -> f64 {
        (self.gamma)(a)
    }

    pub fn volume(&self) -> f64 {
        self.l_size.powi(self.n_vol as i32)
    }

    /// Intensive fields `β_j(a) = k_B ∂_j ln Γ(a)` by central differences.
    pub fn beta_fields(&self, a: &[f64]) -> Vec<f64> {
        let d = self.grid.dim();
        let mut out = vec![0.0; d];
        let mut pt = a.to_vec();
        for j in 0..d {
            let h = 1e-6 * self.grid.step(j).max(1e-6);
            let x0 = pt[j];
            pt[j] = x0 + h;
            let lp = self.gamma(&pt).ln();
            pt[j] = x0 - h;
            let lm = self.gamma(&pt).ln();
            pt[j] = x0;
            out[j] = self.k_b * (lp - lm) / (2.0 * h);
        }
        out
    }

    /// Max residual of the Boltzmann link `S = k_B ln(cΓ)` against an
    /// entropy chart over the weight grid (chart coordinates are the `a`
    /// variables, any further chart slots pinned by `pad`).
    pub fn boltzmann_residual(&self, entropy: &ChartFunction, pad: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.len() {
            let a = self.grid.point(i);
            let mut coords = a.clone();
            coords.extend_from_slice(pad);
            let s_chart = entropy.value(&coords);
            let s_weight = self.k_b * (self.c_units * self.gamma(&a)).ln();
            worst = worst.max((s_chart - s_weight).abs());
        }
        worst
    }
}

/// Shift `σ` by the unique constant that makes
/// `∫ Γ exp(-Lⁿσ/k_B) da = 1`, and assemble the paired density
/// `F(a) = Lⁿ exp(-Lⁿσ(a)/k_B) Γ(a)`.
///
/// Returns the density field and the shifted `σ` sampled on the model grid.
pub fn build_lambda_tilde(
    model: &WeightModel,
    sigma: impl Fn(&[f64]) -> f64,
) -> Result<(StateField, StateField), EvolutionError> {
    let vol = model.volume();
    let kb = model.k_b;
    let raw: Vec<f64> = (0..model.grid.len())
        .map(|i| {
            let a = model.grid.point(i);
            model.gamma(&a) * (-vol * sigma(&a) / kb).exp()
        })
        .collect();
    let integral = model.grid.integrate(&raw);
    if !integral.is_finite() || integral <= 0.0 {
        return Err(EvolutionError::DivergentNormalization);
    }
    let shift = kb * integral.ln() / vol;
    let sigma_shifted = StateField::new(
        model.grid.clone(),
        (0..model.grid.len())
            .map(|i| sigma(&model.grid.point(i)) + shift)
            .collect(),
    );
    let density = StateField::new(
        model.grid.clone(),
        raw.iter().map(|r| vol * r / integral).collect(),
    );
    Ok((density, sigma_shifted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn constant_weight_gives_uniform_density() {
        let grid = RectGrid::line(0.0, 2.0, 64);
        let model = WeightModel::new(grid, |_| 3.0, 1.0, 1, 1.0, 1.0);
        let (f, _) = build_lambda_tilde(&model, |_| 0.7).unwrap();
        // ∫ f = ∫ L^{-n} F = 1
        assert_abs_diff_eq!(f.mass() / model.volume(), 1.0, epsilon = 1e-12);
        let spread = f.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - f.values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(spread, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_weight_quadratic_sigma_is_gaussian() {
        // ln Γ = -a²/2, σ = a²/4, L = 1: F ∝ exp(-a²/2 - a²/4), a Gaussian
        // with variance 1/(3/2) = 2/3
        let grid = RectGrid::line(-10.0, 10.0, 800);
        let model = WeightModel::new(grid, |a| (-0.5 * a[0] * a[0]).exp(), 1.0, 1, 1.0, 1.0);
        let (f, _) = build_lambda_tilde(&model, |a| 0.25 * a[0] * a[0]).unwrap();
        assert_abs_diff_eq!(f.mass(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(f.variance(0), 2.0 / 3.0, max_relative = 1e-8);
        assert_abs_diff_eq!(f.mean(0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn normalization_shift_is_idempotent() {
        let grid = RectGrid::line(-6.0, 6.0, 400);
        let model = WeightModel::new(grid, |a| (-(a[0] - 0.3).powi(2)).exp(), 1.3, 2, 1.0, 0.7);
        let (_, sigma1) = build_lambda_tilde(&model, |a| 0.1 * a[0] * a[0]).unwrap();
        let s1 = sigma1.values.clone();
        let grid2 = sigma1.grid.clone();
        let (_, sigma2) = build_lambda_tilde(&model, move |a| {
            // reuse the already-shifted sigma by nearest-cell lookup
            let i = ((a[0] - grid2.lo[0]) / grid2.step(0) - 0.5).round() as usize;
            s1[i.min(grid2.shape[0] - 1)]
        })
        .unwrap();
        for (a, b) in sigma1.values.iter().zip(&sigma2.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn boltzmann_link_reproduces_entropy_chart() {
        use crate::manifold::FocalChartSpec;
        // Γ(a) = exp(S(a)/k_B) with S the 1D chart section S(a) = 1.5 ln a;
        // the chart has a spectator slot pinned at 1.0
        let kb = 0.8;
        let grid = RectGrid::line(0.5, 3.0, 64);
        let model = WeightModel::new(
            grid,
            move |a| (1.5 * a[0].ln() / kb).exp(),
            1.0,
            1,
            1.0,
            kb,
        );
        let chart = ChartFunction::new(
            FocalChartSpec::new(2, []).unwrap(),
            vec![0.5, 0.5],
            vec![3.0, 2.0],
            |z| 1.5 * z[0].ln(),
        );
        assert!(model.boltzmann_residual(&chart, &[1.0]) <= 1e-8);
        // β field: k_B ∂_a ln Γ = 1.5/a
        let beta = model.beta_fields(&[2.0]);
        assert_relative_eq!(beta[0], 0.75, max_relative = 1e-6);
    }
}
