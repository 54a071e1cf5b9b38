//! Cumulants of quasithermodynamic fluctuations.
//!
//! On a focal chart the cumulants come from the derivative recipe: one
//! factor `(-k_B ∂/∂y_i)` per intensive chart direction and one factor
//! `(k_B λ⁻¹ ∂/∂x_j)` per extensive direction, applied to `λ S⁽λ⁾ / k_B`.
//! Fluctuating quantities are the conjugates of the chart coordinates, so
//! extensive fluctuations grow like `λ` and intensive ones decay like
//! `λ⁻¹`.
//!
//! For gridded densities the cumulants are log-derivatives of the
//! characteristic function `Z(b) = ∫ f exp((i/k_B) b·a) da`; substituting
//! `c = b/k_B` removes `k_B` from the numerics.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::evolution::StateField;
use crate::manifold::FocalChartSpec;

/// Physical value of the Planck constant, erg·s.
pub const HBAR_PHYS: f64 = 6.6262e-27;
/// Physical value of the Boltzmann constant, erg/K.
pub const K_B_PHYS: f64 = 1.3807e-16;

#[derive(Debug, Error, PartialEq)]
pub enum CumulantError {
    #[error("finite-difference step {0:.3e} is below the noise floor")]
    StepUnderflow(f64),
    #[error("density not normalized: total mass {0}")]
    NonNormalizedDensity(f64),
    #[error("the zero multi-index is not a cumulant")]
    ZeroMultiIndex,
    #[error("cumulant orders beyond 4 are out of scope, requested {0}")]
    OrderTooHigh(usize),
    #[error("moment table is missing the entry for {0:?}")]
    IncompleteMoments(Vec<usize>),
}

/// Rescaling parameter and entropy-unit constant used by the cumulant
/// recipes.
#[derive(Debug, Clone, Copy)]
pub struct ScaleParams {
    pub lambda: f64,
    pub k_b: f64,
}

impl ScaleParams {
    pub fn new(lambda: f64, k_b: f64) -> Self {
        assert!(lambda > 0.0 && k_b > 0.0);
        ScaleParams { lambda, k_b }
    }
}

/// Map from non-zero multi-indices to cumulant values.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantTable {
    entries: BTreeMap<Vec<usize>, f64>,
    pub max_order: usize,
}

impl CumulantTable {
    pub fn new(max_order: usize) -> Self {
        CumulantTable { entries: BTreeMap::new(), max_order }
    }

    pub fn insert(&mut self, multi: Vec<usize>, value: f64) {
        assert!(multi.iter().any(|&m| m > 0), "zero multi-index");
        self.entries.insert(multi, value);
    }

    pub fn get(&self, multi: &[usize]) -> Option<f64> {
        self.entries.get(multi).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &f64)> {
        self.entries.iter()
    }

    /// CSV with one exponent column per direction and the value last,
    /// floats at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let d = self.entries.keys().next().map_or(0, |k| k.len());
        let mut out = String::new();
        for a in 0..d {
            out.push_str(&format!("m{},", a + 1));
        }
        out.push_str("value\n");
        for (m, v) in &self.entries {
            for e in m {
                out.push_str(&format!("{e},"));
            }
            out.push_str(&format!("{v:.16e}\n"));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "max_order": self.max_order,
            "entries": self.entries.iter().map(|(m, v)| {
                serde_json::json!({"multi_index": m, "value": v})
            }).collect::<Vec<_>>(),
        })
    }
}

// ── finite differences, 4th-order central ──────────────────────────────

fn stencil4(order: usize) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-2, 1.0 / 12.0), (-1, -2.0 / 3.0), (1, 2.0 / 3.0), (2, -1.0 / 12.0)],
        2 => &[
            (-2, -1.0 / 12.0),
            (-1, 4.0 / 3.0),
            (0, -5.0 / 2.0),
            (1, 4.0 / 3.0),
            (2, -1.0 / 12.0),
        ],
        3 => &[
            (-3, 1.0 / 8.0),
            (-2, -1.0),
            (-1, 13.0 / 8.0),
            (1, -13.0 / 8.0),
            (2, 1.0),
            (3, -1.0 / 8.0),
        ],
        4 => &[
            (-3, -1.0 / 6.0),
            (-2, 2.0),
            (-1, -13.0 / 2.0),
            (0, 28.0 / 3.0),
            (1, -13.0 / 2.0),
            (2, 2.0),
            (3, -1.0 / 6.0),
        ],
        _ => panic!("derivative order {order} beyond the supported range"),
    }
}

/// Mixed partial `∂^orders f(x0)` by a tensor product of 4th-order central
/// stencils; `steps[a]` is the step along axis `a`.
fn fd_mixed4<F: Fn(&[f64]) -> Complex64>(
    f: &F,
    x0: &[f64],
    orders: &[usize],
    steps: &[f64],
) -> Complex64 {
    let axes: Vec<&[(i32, f64)]> = orders.iter().map(|&o| stencil4(o)).collect();
    let mut idx = vec![0usize; orders.len()];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let mut w = 1.0;
        let mut pt = x0.to_vec();
        for (a, &i) in idx.iter().enumerate() {
            let (off, coef) = axes[a][i];
            w *= coef;
            pt[a] += off as f64 * steps[a];
        }
        total += w * f(&pt);
        let mut a = 0;
        loop {
            if a == idx.len() {
                let denom: f64 = orders
                    .iter()
                    .zip(steps)
                    .map(|(&o, &h)| h.powi(o as i32))
                    .product();
                return total / denom;
            }
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

fn multi_indices(dims: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; dims];
    fn rec(cur: &mut Vec<usize>, slot: usize, budget: usize, out: &mut Vec<Vec<usize>>) {
        if slot == cur.len() {
            if cur.iter().any(|&m| m > 0) {
                out.push(cur.clone());
            }
            return;
        }
        for m in 0..=budget {
            cur[slot] = m;
            rec(cur, slot + 1, budget - m, out);
        }
        cur[slot] = 0;
    }
    rec(&mut cur, 0, max_order, &mut out);
    out
}

// ── cumulants from a chart function ─────────────────────────────────────

/// All cumulants with `1 ≤ |M| ≤ max_order` of the fluctuations seen from a
/// focal chart, by nested central differences of `λ S⁽λ⁾/k_B` at `point`.
///
/// `s_lambda(coords, λ)` is the chart generating function of the rescaled
/// family; `rel_step` scales the per-direction finite-difference steps
/// (`1e-3` of the coordinate scale by default).
pub fn cumulants_from_chart(
    s_lambda: &dyn Fn(&[f64], f64) -> f64,
    chart: &FocalChartSpec,
    point: &[f64],
    max_order: usize,
    scale: ScaleParams,
    rel_step: f64,
) -> Result<CumulantTable, CumulantError> {
    if max_order == 0 {
        return Err(CumulantError::ZeroMultiIndex);
    }
    if max_order > 4 {
        return Err(CumulantError::OrderTooHigh(max_order));
    }
    let n = chart.d_plus_1;
    assert_eq!(point.len(), n);
    let steps: Vec<f64> = point
        .iter()
        .map(|&c| {
            let coord_scale = if c.abs() > 1e-8 { c.abs() } else { 1.0 };
            rel_step * coord_scale
        })
        .collect();
    if let Some(&h) = steps.iter().find(|&&h| h <= 1e-12) {
        return Err(CumulantError::StepUnderflow(h));
    }
    let lambda = scale.lambda;
    let kb = scale.k_b;
    let target = |coords: &[f64]| Complex64::new(lambda * s_lambda(coords, lambda) / kb, 0.0);

    let mut table = CumulantTable::new(max_order);
    for multi in multi_indices(n, max_order) {
        let deriv = fd_mixed4(&target, point, &multi, &steps).re;
        let mut prefactor = 1.0;
        for (slot, k) in (1..=n).enumerate() {
            let m = multi[slot] as i32;
            if m == 0 {
                continue;
            }
            prefactor *= if chart.is_intensive(k) {
                (-kb).powi(m)
            } else {
                (kb / lambda).powi(m)
            };
        }
        table.insert(multi, prefactor * deriv);
    }
    Ok(table)
}

// ── cumulants from a gridded density ────────────────────────────────────

/// Cumulants of a density by log-derivatives of its characteristic
/// function on a small frequency stencil around zero.
///
/// In normalized mode the mass must be one to `1e-6`. The first cumulants
/// equal the density means up to quadrature round-off; `k_B` cancels from
/// the numerics (it only rescales the conjugate variable).
pub fn cumulants_from_density(
    field: &StateField,
    max_order: usize,
    _scale: ScaleParams,
    normalized: bool,
) -> Result<CumulantTable, CumulantError> {
    if max_order == 0 {
        return Err(CumulantError::ZeroMultiIndex);
    }
    if max_order > 4 {
        return Err(CumulantError::OrderTooHigh(max_order));
    }
    let mass = field.mass();
    if normalized && (mass - 1.0).abs() > 1e-6 {
        return Err(CumulantError::NonNormalizedDensity(mass));
    }
    let d = field.grid.dim();
    // frequency steps from the per-axis spread of the density
    let steps: Vec<f64> = (0..d)
        .map(|a| {
            let sigma = field.variance(a).max(0.0).sqrt();
            let amax = field.grid.lo[a].abs().max(field.grid.hi[a].abs()).max(1e-9);
            (0.04 / sigma.max(1e-9)).min(0.1 / amax)
        })
        .collect();
    if let Some(&h) = steps.iter().find(|&&h| h <= 1e-12) {
        return Err(CumulantError::StepUnderflow(h));
    }

    let cell_vol = field.grid.cell_volume();
    let points: Vec<Vec<f64>> = (0..field.grid.len()).map(|i| field.grid.point(i)).collect();
    let log_z = |c: &[f64]| -> Complex64 {
        let mut z = Complex64::new(0.0, 0.0);
        for (pt, &v) in points.iter().zip(&field.values) {
            let phase: f64 = pt.iter().zip(c).map(|(a, ci)| a * ci).sum();
            z += v * Complex64::from_polar(1.0, phase);
        }
        (z * cell_vol / mass).ln()
    };

    let origin = vec![0.0; d];
    let mut table = CumulantTable::new(max_order);
    for multi in multi_indices(d, max_order) {
        let order: usize = multi.iter().sum();
        let deriv = fd_mixed4(&log_z, &origin, &multi, &steps);
        // (-i)^{|M|} ∂^M ln Z is real for a real density
        let value = (Complex64::new(0.0, -1.0).powu(order as u32) * deriv).re;
        table.insert(multi, value);
    }
    Ok(table)
}

// ── moment/cumulant conversion ──────────────────────────────────────────

/// Set partitions of `{0..n-1}`.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for mut smaller in set_partitions(n - 1) {
        // new element in its own block
        let mut own = smaller.clone();
        own.push(vec![n - 1]);
        out.push(own);
        // or joined to each existing block
        for b in 0..smaller.len() {
            smaller[b].push(n - 1);
            out.push(smaller.clone());
            smaller[b].pop();
        }
    }
    out
}

fn multi_of_block(labels: &[usize], block: &[usize], d: usize) -> Vec<usize> {
    let mut m = vec![0usize; d];
    for &pos in block {
        m[labels[pos]] += 1;
    }
    m
}

fn expand_labels(multi: &[usize]) -> Vec<usize> {
    let mut labels = Vec::new();
    for (dir, &m) in multi.iter().enumerate() {
        labels.extend(std::iter::repeat(dir).take(m));
    }
    labels
}

/// Raw moments to cumulants via the set-partition Möbius sum
/// `c_M = Σ_π (-1)^{|π|-1}(|π|-1)! ∏_B m_B`.
pub fn moments_to_cumulants(
    moments: &BTreeMap<Vec<usize>, f64>,
    dims: usize,
    max_order: usize,
) -> Result<CumulantTable, CumulantError> {
    if max_order > 4 {
        return Err(CumulantError::OrderTooHigh(max_order));
    }
    let mut table = CumulantTable::new(max_order);
    for multi in multi_indices(dims, max_order) {
        let labels = expand_labels(&multi);
        let mut acc = 0.0;
        for part in set_partitions(labels.len()) {
            let blocks = part.len();
            let sign = if blocks % 2 == 1 { 1.0 } else { -1.0 };
            let weight: f64 = (1..blocks).map(|i| i as f64).product();
            let mut prod = sign * weight;
            for block in &part {
                let m = multi_of_block(&labels, block, dims);
                prod *= moments
                    .get(&m)
                    .copied()
                    .ok_or(CumulantError::IncompleteMoments(m))?;
            }
            acc += prod;
        }
        table.insert(multi, acc);
    }
    Ok(table)
}

/// Cumulants back to raw moments: `m_M = Σ_π ∏_B c_B`.
pub fn cumulants_to_moments(
    cumulants: &CumulantTable,
    dims: usize,
    max_order: usize,
) -> Result<BTreeMap<Vec<usize>, f64>, CumulantError> {
    let mut out = BTreeMap::new();
    for multi in multi_indices(dims, max_order) {
        let labels = expand_labels(&multi);
        let mut acc = 0.0;
        for part in set_partitions(labels.len()) {
            let mut prod = 1.0;
            for block in &part {
                let m = multi_of_block(&labels, block, dims);
                prod *= cumulants
                    .get(&m)
                    .ok_or(CumulantError::IncompleteMoments(m))?;
            }
            acc += prod;
        }
        out.insert(multi, acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RectGrid;
    use crate::manifold::R_GAS;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn chart(n: usize, focal: &[usize]) -> FocalChartSpec {
        FocalChartSpec::new(n, focal.iter().copied()).unwrap()
    }

    // ── chart cumulants ────────────────────────────────────────────────

    /// Ideal-gas chart of type {1}: S₁(β,V,ν) = ν(c_v ln(c_v/β) + R ln(V/ν)
    /// + s₀ - c_v); the closed-form transform of the entropy chart.
    fn ideal_gas_s1(cv: f64, s0: f64) -> impl Fn(&[f64], f64) -> f64 {
        move |z: &[f64], _lambda: f64| {
            let (beta, v, nu) = (z[0], z[1], z[2]);
            nu * (cv * (cv / beta).ln() + R_GAS * (v / nu).ln() + s0 - cv)
        }
    }

    #[test]
    fn energy_mean_matches_ideal_gas() {
        let cv = 1.5;
        let s1 = ideal_gas_s1(cv, 2.5);
        let scale = ScaleParams::new(1e3, 1.0);
        let point = [0.5, 3.0, 1.0]; // β, V, ν
        let table =
            cumulants_from_chart(&s1, &chart(3, &[1]), &point, 2, scale, 1e-3).unwrap();
        // C₁ in the β direction is the mean energy λ c_v ν T
        let want = scale.lambda * cv * 1.0 / 0.5;
        assert_relative_eq!(table.get(&[1, 0, 0]).unwrap(), want, max_relative = 1e-4);
        // variance k_B λ c_v ν T²
        let want2 = scale.k_b * scale.lambda * cv * 1.0 / (0.5 * 0.5);
        assert_relative_eq!(table.get(&[2, 0, 0]).unwrap(), want2, max_relative = 1e-4);
    }

    #[test]
    fn zero_multi_index_rejected() {
        let s = |_: &[f64], _: f64| 0.0;
        let err = cumulants_from_chart(&s, &chart(2, &[1]), &[1.0, 1.0], 0, ScaleParams::new(10.0, 1.0), 1e-3);
        assert_eq!(err.unwrap_err(), CumulantError::ZeroMultiIndex);
    }

    #[test]
    fn lambda_scaling_exponents() {
        let cv = 1.5;
        let s1 = ideal_gas_s1(cv, 2.5);
        let entropy = |z: &[f64], _l: f64| {
            let (e, v, nu) = (z[0], z[1], z[2]);
            nu * (cv * (e / nu).ln() + R_GAS * (v / nu).ln() + 2.5)
        };
        let fit = |values: &[(f64, f64)]| {
            let n = values.len() as f64;
            let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
            for &(l, v) in values {
                let x = l.ln();
                let y = v.abs().ln();
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            (n * sxy - sx * sy) / (n * sxx - sx * sx)
        };
        let lambdas = [1e2, 1e3, 1e4];
        let mut c1 = Vec::new();
        let mut c2 = Vec::new();
        let mut c2_int = Vec::new();
        for &l in &lambdas {
            let scale = ScaleParams::new(l, 1.0);
            let t1 = cumulants_from_chart(&s1, &chart(3, &[1]), &[0.5, 3.0, 1.0], 2, scale, 1e-3).unwrap();
            c1.push((l, t1.get(&[1, 0, 0]).unwrap()));
            c2.push((l, t1.get(&[2, 0, 0]).unwrap()));
            // dual chart: energy direction is extensive, conjugate β fluctuates
            let t2 = cumulants_from_chart(&entropy, &chart(3, &[]), &[3.0, 3.0, 1.0], 2, scale, 1e-3).unwrap();
            c2_int.push((l, t2.get(&[2, 0, 0]).unwrap()));
        }
        assert!((fit(&c1) - 1.0).abs() <= 0.05, "C1 exponent {}", fit(&c1));
        assert!((fit(&c2) - 1.0).abs() <= 0.05, "C2 exponent {}", fit(&c2));
        assert!((fit(&c2_int) + 1.0).abs() <= 0.05, "intensive exponent {}", fit(&c2_int));
    }

    #[test]
    fn uncertainty_product_near_kb() {
        // ΔE from the β-chart, Δβ from the entropy chart, at the matched
        // manifold point E = c_v ν / β
        let cv = 1.5;
        let kb = 0.7;
        let lambda = 1e3;
        let scale = ScaleParams::new(lambda, kb);
        let s1 = ideal_gas_s1(cv, 2.5);
        let entropy = |z: &[f64], _l: f64| {
            let (e, v, nu) = (z[0], z[1], z[2]);
            nu * (cv * (e / nu).ln() + R_GAS * (v / nu).ln() + 2.5)
        };
        let beta = 0.5;
        let e = cv * 1.0 / beta;
        let t1 = cumulants_from_chart(&s1, &chart(3, &[1]), &[beta, 3.0, 1.0], 2, scale, 1e-3).unwrap();
        let t0 = cumulants_from_chart(&entropy, &chart(3, &[]), &[e, 3.0, 1.0], 2, scale, 1e-3).unwrap();
        let de = t1.get(&[2, 0, 0]).unwrap().sqrt();
        let dbeta = t0.get(&[2, 0, 0]).unwrap().abs().sqrt();
        let product = de * dbeta;
        assert!(
            product > 0.5 * kb && product < 2.0 * kb,
            "ΔE·Δβ = {product}, k_B = {kb}"
        );
    }

    #[test]
    fn chart_independence_for_uncoupled_directions() {
        // S(x₁,x₂) = q(x₁) + r(x₂); transforming direction 2 cannot change
        // the direction-1 cumulants, which fluctuate y₁ in both charts.
        let q = |x: f64| 2.0f64 * x.ln() + 0.3 * x;
        let r = |x: f64| 1.3f64 * x.ln();
        let s_a = move |z: &[f64], _l: f64| q(z[0]) + r(z[1]);
        // chart {2}: closed-form Legendre in the second argument:
        // r₂(y₂) = stat_x [r(x) - y₂ x] = 1.3 ln(1.3/y₂) - 1.3
        let s_b = move |z: &[f64], _l: f64| q(z[0]) + 1.3f64 * ((1.3f64 / z[1]).ln()) - 1.3;
        let scale = ScaleParams::new(1e3, 1.0);
        let x = [1.7, 2.2];
        let y2 = 1.3 / x[1];
        let ta = cumulants_from_chart(&s_a, &chart(2, &[]), &x, 3, scale, 1e-3).unwrap();
        let tb = cumulants_from_chart(&s_b, &chart(2, &[2]), &[x[0], y2], 3, scale, 1e-3).unwrap();
        for m in 1..=3usize {
            let a = ta.get(&[m, 0]).unwrap();
            let b = tb.get(&[m, 0]).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-6, epsilon = 1e-10);
        }
    }

    #[test]
    fn first_cumulants_glue_across_coupled_charts() {
        // means agree exactly between the β-chart and the grand chart of
        // the ideal gas: both report the same manifold point
        let cv = 1.5;
        let s0 = 2.5;
        let s1 = ideal_gas_s1(cv, s0);
        let s13 = move |z: &[f64], _l: f64| {
            let (beta, v, y3) = (z[0], z[1], z[2]);
            let nu_star = v * ((s0 - cv - R_GAS - y3) / R_GAS).exp() * (cv / beta).powf(cv / R_GAS);
            R_GAS * nu_star
        };
        let scale = ScaleParams::new(1e3, 1.0);
        let (beta, v, nu) = (0.5f64, 3.0f64, 1.0f64);
        let y3 = cv * (cv / beta).ln() + R_GAS * (v / nu).ln() + s0 - cv - R_GAS;
        let t1 = cumulants_from_chart(&s1, &chart(3, &[1]), &[beta, v, nu], 1, scale, 1e-3).unwrap();
        let t13 = cumulants_from_chart(&s13, &chart(3, &[1, 3]), &[beta, v, y3], 1, scale, 1e-3).unwrap();
        // energy mean (direction 1, fluctuating x₁ in both charts)
        assert_relative_eq!(
            t1.get(&[1, 0, 0]).unwrap(),
            t13.get(&[1, 0, 0]).unwrap(),
            max_relative = 1e-6
        );
        // pressure-like mean (direction 2, fluctuating y₂ in both charts)
        assert_relative_eq!(
            t1.get(&[0, 1, 0]).unwrap(),
            t13.get(&[0, 1, 0]).unwrap(),
            max_relative = 1e-6
        );
    }

    // ── density cumulants ──────────────────────────────────────────────

    #[test]
    fn gaussian_density_cumulants() {
        let mean = 0.4;
        let sigma = 0.7;
        let grid = RectGrid::line(mean - 8.0 * sigma, mean + 8.0 * sigma, 400);
        let f = StateField::from_fn(grid, |a| {
            (-0.5 * ((a[0] - mean) / sigma).powi(2)).exp()
                / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        });
        let t = cumulants_from_density(&f, 3, ScaleParams::new(1.0, 1.0), true).unwrap();
        assert_abs_diff_eq!(t.get(&[1]).unwrap(), mean, epsilon = 1e-8);
        assert_relative_eq!(t.get(&[2]).unwrap(), sigma * sigma, max_relative = 1e-6);
        assert_abs_diff_eq!(t.get(&[3]).unwrap(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn two_cell_density_matches_brute_force() {
        let grid = RectGrid::line(0.0, 2.0, 2);
        // masses 0.3 and 0.7 at the two cell centers 0.5, 1.5
        let f = StateField::new(grid, vec![0.3, 0.7]);
        let t = cumulants_from_density(&f, 4, ScaleParams::new(1.0, 1.0), true).unwrap();
        let mut moments = BTreeMap::new();
        for m in 0..=4usize {
            let val = 0.3 * 0.5f64.powi(m as i32) + 0.7 * 1.5f64.powi(m as i32);
            moments.insert(vec![m], val);
        }
        let want = moments_to_cumulants(&moments, 1, 4).unwrap();
        for m in 1..=4usize {
            assert_relative_eq!(
                t.get(&[m]).unwrap(),
                want.get(&[m]).unwrap(),
                max_relative = 1e-5,
                epsilon = 5e-7
            );
        }
    }

    #[test]
    fn unnormalized_density_rejected_in_normalized_mode() {
        let grid = RectGrid::line(0.0, 1.0, 4);
        let f = StateField::new(grid, vec![1.0, 1.0, 1.0, 2.0]);
        let err = cumulants_from_density(&f, 2, ScaleParams::new(1.0, 1.0), true);
        assert!(matches!(err, Err(CumulantError::NonNormalizedDensity(_))));
    }

    #[test]
    fn gaussian_2d_cross_cumulant_vanishes() {
        let grid = RectGrid::new(vec![-6.0, -6.0], vec![6.0, 6.0], vec![96, 96]);
        let f = StateField::from_fn(grid, |a| {
            (-0.5 * (a[0] * a[0] + 2.0 * a[1] * a[1])).exp()
        })
        .normalized();
        let t = cumulants_from_density(&f, 2, ScaleParams::new(1.0, 1.0), true).unwrap();
        assert_abs_diff_eq!(t.get(&[1, 1]).unwrap(), 0.0, epsilon = 1e-8);
        assert_relative_eq!(t.get(&[2, 0]).unwrap(), 1.0, max_relative = 1e-4);
        assert_relative_eq!(t.get(&[0, 2]).unwrap(), 0.5, max_relative = 1e-4);
    }

    // ── moment/cumulant conversion ─────────────────────────────────────

    #[test]
    fn first_moment_is_first_cumulant() {
        let mut m = BTreeMap::new();
        m.insert(vec![1], 2.7);
        let t = moments_to_cumulants(&m, 1, 1).unwrap();
        assert_eq!(t.get(&[1]).unwrap(), 2.7);
    }

    #[test]
    fn centered_second_moment_is_variance() {
        let mut m = BTreeMap::new();
        m.insert(vec![1], 0.0);
        m.insert(vec![2], 0.81);
        let t = moments_to_cumulants(&m, 1, 2).unwrap();
        assert_abs_diff_eq!(t.get(&[2]).unwrap(), 0.81);
    }

    #[test]
    fn moment_cumulant_roundtrip() {
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..50 {
            let mut m = BTreeMap::new();
            for order in 1..=4usize {
                m.insert(vec![order], next());
            }
            let c = moments_to_cumulants(&m, 1, 4).unwrap();
            let back = cumulants_to_moments(&c, 1, 4).unwrap();
            for order in 1..=4usize {
                assert_abs_diff_eq!(
                    back.get(&vec![order]).unwrap(),
                    m.get(&vec![order]).unwrap(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn partition_count_is_bell_number() {
        assert_eq!(set_partitions(1).len(), 1);
        assert_eq!(set_partitions(2).len(), 2);
        assert_eq!(set_partitions(3).len(), 5);
        assert_eq!(set_partitions(4).len(), 15);
    }

    #[test]
    fn table_serialization_roundtrip_shape() {
        let mut t = CumulantTable::new(2);
        t.insert(vec![1, 0], 1.5);
        t.insert(vec![0, 2], -0.25);
        let csv = t.to_csv();
        assert!(csv.starts_with("m1,m2,value\n"));
        assert_eq!(csv.lines().count(), 3);
        let json = t.to_json();
        assert_eq!(json["entries"].as_array().unwrap().len(), 2);
    }
}
