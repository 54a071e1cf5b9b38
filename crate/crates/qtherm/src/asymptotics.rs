//! Stationary-phase transfer of fluctuation series between focal charts.
//!
//! Changing charts multiplies the underlying object by an oscillatory
//! kernel; the chart-to-chart map of the asymptotic coefficients follows
//! from the stationary-phase expansion of
//!
//! ```text
//! Q(ε) = (2πε)^{-k} ∫ f · exp{ (i/ε) [Φ_I - Σ_{j∈J\I} x_j y_j + Σ_{i∈I\J} x_i y_i] }
//! ```
//!
//! over the `k` swapped-out source coordinates. Normalizing out the target
//! phase, the unimodular constant `exp(iπμ/4)` and the remaining
//! `(2πε)^{-k/2}` scale leaves a series `Σ_n (-iε)^n V̂⁽ⁿ⁾[Φ, f]` whose
//! order-0 term is the positive multiplier `f(x*) |det Hess|^{-1/2}` and
//! whose order-1 term is the classical second-order transport correction.
//!
//! The nonlinear series map then runs in four steps: Legendre-transform the
//! leading coefficient, exponentiate the tail coefficients, push the
//! resulting amplitudes through `V̂⁽⁰⁾`, `V̂⁽¹⁾`, and take the logarithm.
//! Orders `n ≥ 2` of the transport expansion are out of scope; outputs are
//! truncated accordingly.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::grid::RectGrid;
use crate::manifold::{
    legendre_transform, solve_swap, swap_layout, ChartFunction, FocalChartSpec, ManifoldError,
};
use crate::series::{exp_coeffs, log_coeffs, SeriesField, TruncatedSeries};

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("quadrature did not converge (last relative change {0:.3e})")]
    QuadratureNonConvergence(f64),
    #[error("degenerate Hessian at the stationary point (|det| = {0:.3e})")]
    DegenerateHessian(f64),
    #[error("found {0} distinct stationary points in the domain")]
    MultipleStationaryPoints(usize),
    #[error("transfer supports at most 3 swapped coordinates, got {0}")]
    TooManySwaps(usize),
    #[error("input series must carry at least the leading coefficient")]
    EmptySeries,
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

pub type ScalarChartFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ComplexAmplitude<'a> = &'a dyn Fn(&[f64]) -> Complex64;

/// One chart-to-chart transfer: the source-chart leading coefficient (the
/// phase), the target chart, the unimodular normalization constant and the
/// ε grid used by the quadrature oracle.
#[derive(Clone)]
pub struct TransferSpec {
    /// Leading coefficient `Φ⁽⁰⁾` on the source chart.
    pub phase: ChartFunction,
    pub to_chart: FocalChartSpec,
    /// Exponent of the `exp(iπμ/4)` normalization, reduced mod 8 and fixed
    /// so the order-0 multiplier is positive; equals the signature of the
    /// swap Hessian.
    pub maslov_constant: i8,
    /// Decreasing ε values for oracle comparisons.
    pub epsilon_grid: Vec<f64>,
}

impl TransferSpec {
    /// Build a spec, fixing the normalization constant from the Hessian
    /// signature at a representative target point (the signature is locally
    /// constant wherever the transfer is nondegenerate).
    pub fn new(phase: ChartFunction, to_chart: FocalChartSpec) -> Result<Self, AsymptoticsError> {
        let probe: Vec<f64> = (0..phase.chart.d_plus_1)
            .map(|a| 0.5 * (phase.domain_lo[a] + phase.domain_hi[a]))
            .collect();
        let target = phase.complete_point(&probe).chart_coords(&to_chart);
        let mut spec = TransferSpec {
            phase,
            to_chart,
            maslov_constant: 0,
            epsilon_grid: vec![0.1, 0.05, 0.025, 0.0125],
        };
        let st = spec.stationary_data(&target)?;
        spec.maslov_constant = st.signature.rem_euclid(8) as i8;
        Ok(spec)
    }

    pub fn with_epsilon_grid(mut self, grid: Vec<f64>) -> Self {
        self.epsilon_grid = grid;
        self
    }

    pub fn from_chart(&self) -> &FocalChartSpec {
        &self.phase.chart
    }

    fn swap_count(&self) -> usize {
        swap_layout(&self.phase.chart, &self.to_chart).swap_slots.len()
    }

    /// `exp(iπμ/4)`.
    pub fn maslov_factor(&self) -> Complex64 {
        Complex64::from_polar(1.0, std::f64::consts::PI * self.maslov_constant as f64 / 4.0)
    }

    /// Full transfer phase restricted to the swap coordinates at a fixed
    /// target point.
    fn restricted_phase(&self, target: &[f64], swap: &[f64]) -> f64 {
        let layout = swap_layout(&self.phase.chart, &self.to_chart);
        let mut src = target.to_vec();
        for (v, &slot) in swap.iter().zip(&layout.swap_slots) {
            src[slot] = *v;
        }
        let mut v = self.phase.value(&src);
        for ((&slot, &sign), &s) in layout.swap_slots.iter().zip(&layout.bilinear_sign).zip(swap) {
            v += sign * s * target[slot];
        }
        v
    }

    /// Stationary point, Hessian data and glue point of the transfer at one
    /// target point.
    fn stationary_data(&self, target: &[f64]) -> Result<StationaryData, AsymptoticsError> {
        let layout = swap_layout(&self.phase.chart, &self.to_chart);
        if layout.swap_slots.len() > 3 {
            return Err(AsymptoticsError::TooManySwaps(layout.swap_slots.len()));
        }
        if layout.swap_slots.is_empty() {
            // identity transfer
            return Ok(StationaryData {
                swap_point: Vec::new(),
                source_coords: target.to_vec(),
                hess: DMatrix::zeros(0, 0),
                det: 1.0,
                signature: 0,
                phase_value: self.phase.value(target),
            });
        }
        let swap = solve_swap(&self.phase, &self.to_chart, target, &layout)?;
        let mut src = target.to_vec();
        for (v, &slot) in swap.iter().zip(&layout.swap_slots) {
            src[slot] = *v;
        }
        let hess_full = self.phase.hessian(&src);
        let k = layout.swap_slots.len();
        let mut hess = DMatrix::zeros(k, k);
        for (r, &sr) in layout.swap_slots.iter().enumerate() {
            for (c, &sc) in layout.swap_slots.iter().enumerate() {
                hess[(r, c)] = hess_full[(sr, sc)];
            }
        }
        let det = hess.determinant();
        if !det.is_finite() || det.abs() < 1e-10 {
            return Err(AsymptoticsError::DegenerateHessian(det.abs()));
        }
        let eig = hess.clone().symmetric_eigen();
        let signature: i32 = eig.eigenvalues.iter().map(|&l| if l > 0.0 { 1 } else { -1 }).sum();
        let value = self.restricted_phase(target, &swap);
        Ok(StationaryData {
            swap_point: swap,
            source_coords: src,
            hess,
            det,
            signature,
            phase_value: value,
        })
    }
}

struct StationaryData {
    /// stationary values of the swapped coordinates
    swap_point: Vec<f64>,
    /// full source-chart coordinates of the glue point
    source_coords: Vec<f64>,
    hess: DMatrix<f64>,
    det: f64,
    signature: i32,
    /// stationary phase value = Legendre transform of the leading coefficient
    phase_value: f64,
}

// ── oscillatory quadrature oracle ───────────────────────────────────────

/// Brute-force quadrature of the transfer integral `Q(ε)` with the
/// `(2πε)^{-k}` prefactor, over the swap axes of the phase domain.
///
/// Trapezoid quadrature, refined until two successive refinements agree to
/// 1e-6 relative. Test oracle only: the amplitude must die out inside the
/// integration box.
pub fn oscillatory_integral(
    spec: &TransferSpec,
    amplitude: ComplexAmplitude,
    epsilon: f64,
    target: &[f64],
) -> Result<Complex64, AsymptoticsError> {
    assert!(epsilon > 0.0);
    let layout = swap_layout(&spec.phase.chart, &spec.to_chart);
    let k = layout.swap_slots.len();
    if k == 0 {
        // identity transfer: no integration, Q reduces to the integrand
        let v = spec.phase.value(target);
        return Ok(amplitude(target) * Complex64::from_polar(1.0, v / epsilon));
    }
    if k > 2 {
        return Err(AsymptoticsError::TooManySwaps(k));
    }
    let lo: Vec<f64> = layout.swap_slots.iter().map(|&s| spec.phase.domain_lo[s]).collect();
    let hi: Vec<f64> = layout.swap_slots.iter().map(|&s| spec.phase.domain_hi[s]).collect();

    let eval_level = |n: usize| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut src = target.to_vec();
        match k {
            1 => {
                let h = (hi[0] - lo[0]) / n as f64;
                for i in 0..=n {
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    let s = lo[0] + i as f64 * h;
                    src[layout.swap_slots[0]] = s;
                    let phase = spec.restricted_phase(target, &[s]);
                    acc += w * amplitude(&src) * Complex64::from_polar(1.0, phase / epsilon);
                }
                acc * h
            }
            _ => {
                let h0 = (hi[0] - lo[0]) / n as f64;
                let h1 = (hi[1] - lo[1]) / n as f64;
                for i in 0..=n {
                    let wi = if i == 0 || i == n { 0.5 } else { 1.0 };
                    let s0 = lo[0] + i as f64 * h0;
                    for j in 0..=n {
                        let wj = if j == 0 || j == n { 0.5 } else { 1.0 };
                        let s1 = lo[1] + j as f64 * h1;
                        src[layout.swap_slots[0]] = s0;
                        src[layout.swap_slots[1]] = s1;
                        let phase = spec.restricted_phase(target, &[s0, s1]);
                        acc += wi * wj * amplitude(&src) * Complex64::from_polar(1.0, phase / epsilon);
                    }
                }
                acc * h0 * h1
            }
        }
    };

    let prefactor = (2.0 * std::f64::consts::PI * epsilon).powi(-(k as i32));
    let mut n = if k == 1 { 4096 } else { 256 };
    let max_n = if k == 1 { 1 << 20 } else { 1 << 12 };
    let mut prev = eval_level(n);
    let mut rel = f64::INFINITY;
    while n < max_n {
        n *= 2;
        let cur = eval_level(n);
        rel = (cur - prev).norm() / cur.norm().max(1e-300);
        if rel <= 1e-6 {
            return Ok(cur * prefactor);
        }
        prev = cur;
    }
    Err(AsymptoticsError::QuadratureNonConvergence(rel))
}

// ── finite-difference tensors ───────────────────────────────────────────

/// Central-difference stencils, 2nd order accurate, by derivative order.
fn stencil(order: usize) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        5 => &[(-3, -0.5), (-2, 2.0), (-1, -2.5), (1, 2.5), (2, -2.0), (3, 0.5)],
        6 => &[(-3, 1.0), (-2, -6.0), (-1, 15.0), (0, -20.0), (1, 15.0), (2, -6.0), (3, 1.0)],
        _ => panic!("unsupported derivative order {order}"),
    }
}

/// Mixed partial derivative `∂^orders f (x0)` by tensor-product central
/// stencils with one Richardson extrapolation step (leading error O(h⁴)).
fn fd_mixed(
    f: &dyn Fn(&[f64]) -> Complex64,
    x0: &[f64],
    orders: &[usize],
    h: f64,
) -> Complex64 {
    let eval_at_step = |step: f64| -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        let axes: Vec<&[(i32, f64)]> = orders.iter().map(|&o| stencil(o)).collect();
        let mut idx = vec![0usize; orders.len()];
        loop {
            let mut w = 1.0;
            let mut pt = x0.to_vec();
            for (a, &i) in idx.iter().enumerate() {
                let (off, coef) = axes[a][i];
                w *= coef;
                pt[a] += off as f64 * step;
            }
            total += w * f(&pt);
            // odometer over the stencil product
            let mut a = 0;
            loop {
                if a == idx.len() {
                    let denom: f64 = orders.iter().map(|&o| step.powi(o as i32)).product();
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
    };
    let coarse = eval_at_step(h);
    let fine = eval_at_step(h / 2.0);
    (4.0 * fine - coarse) / 3.0
}

/// Dense symmetric derivative tensor of total order `order` in `k`
/// variables, flattened in row-major index order; entries are cached by
/// their per-axis order vector since mixed partials commute.
fn derivative_tensor(
    f: &dyn Fn(&[f64]) -> Complex64,
    x0: &[f64],
    k: usize,
    order: usize,
    h: f64,
) -> Vec<Complex64> {
    let mut cache: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    let total = k.pow(order as u32);
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut orders = vec![0usize; k];
        let mut rem = flat;
        for _ in 0..order {
            orders[rem % k] += 1;
            rem /= k;
        }
        let v = *cache
            .entry(orders.clone())
            .or_insert_with(|| fd_mixed(f, x0, &orders, h));
        out.push(v);
    }
    out
}

fn tensor_at(t: &[Complex64], k: usize, idx: &[usize]) -> Complex64 {
    let mut flat = 0usize;
    for (pos, &i) in idx.iter().enumerate() {
        flat += i * k.pow(pos as u32);
    }
    t[flat]
}

// ── stationary-phase coefficients ───────────────────────────────────────

/// The transport coefficient `V̂⁽ⁿ⁾[Φ, f]` of the transfer at one target
/// point, for `n ∈ {0, 1}`: the coefficient of `(-iε)^n` in the normalized
/// expansion.
///
/// Order 0 is the positive multiplier `f(x*) |det H|^{-1/2}`. Order 1 is
/// `-|det H|^{-1/2}` times
/// `½⟨H⁻¹D,D⟩f - ⅛⟨H⁻¹D,D⟩²(gf) + (1/96)⟨H⁻¹D,D⟩³(g²f)`
/// at the stationary point, where `g` is the phase minus its second-order
/// Taylor model there (expanding `exp(iωg)` contributes a sign per power
/// of `g`); it touches at most fourth derivatives of the phase and second
/// derivatives of the amplitude.
pub fn stationary_phase_coeffs(
    spec: &TransferSpec,
    amplitude: ComplexAmplitude,
    order: usize,
    target: &[f64],
) -> Result<Complex64, AsymptoticsError> {
    assert!(order <= 1, "transport orders beyond 1 are out of scope");
    detect_multiple_stationary_points(spec, target)?;
    let st = spec.stationary_data(target)?;
    let mult = st.det.abs().powf(-0.5);
    let layout = swap_layout(&spec.phase.chart, &spec.to_chart);
    let k = layout.swap_slots.len();

    // amplitude restricted to the integration slice
    let amp_at = |swap: &[f64]| -> Complex64 {
        let mut src = target.to_vec();
        for (v, &slot) in swap.iter().zip(&layout.swap_slots) {
            src[slot] = *v;
        }
        amplitude(&src)
    };

    if order == 0 {
        return Ok(mult * amp_at(&st.swap_point));
    }
    if k == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }

    let hinv = st
        .hess
        .clone()
        .try_inverse()
        .ok_or(AsymptoticsError::DegenerateHessian(st.det.abs()))?;
    let x0 = st.swap_point.clone();
    // steps scale with the integration-box width
    let width: f64 = layout
        .swap_slots
        .iter()
        .map(|&s| spec.phase.domain_hi[s] - spec.phase.domain_lo[s])
        .fold(0.0, f64::max);

    let psi = {
        let spec = spec.clone();
        let target = target.to_vec();
        move |swap: &[f64]| Complex64::new(spec.restricted_phase(&target, swap), 0.0)
    };
    let famp = |swap: &[f64]| amp_at(swap);

    // Since g (the phase minus its quadratic model) vanishes to second
    // order at x*, the Leibniz expansions collapse:
    //   ∂⁴(g·f)   = g⁗ f + 4-way g‴ ∇f
    //   ∂⁶(g²·f)  = (3|3 splittings of six indices) g‴ g‴ · f
    // so only the third/fourth phase tensors and the amplitude value,
    // gradient and Hessian are needed.
    let f0 = amp_at(&x0);
    let grad_f = derivative_tensor(&famp, &x0, k, 1, 1e-4 * width);
    let hess_f = derivative_tensor(&famp, &x0, k, 2, 1e-3 * width);
    let t3_phase = derivative_tensor(&psi, &x0, k, 3, 5e-3 * width);
    let t4_phase = derivative_tensor(&psi, &x0, k, 4, 5e-3 * width);

    // t1 = ½ ⟨H⁻¹D,D⟩ f
    let mut t1 = Complex64::new(0.0, 0.0);
    for a in 0..k {
        for b in 0..k {
            t1 += hinv[(a, b)] * tensor_at(&hess_f, k, &[a, b]);
        }
    }
    t1 *= 0.5;

    // t2 contraction: Σ Hinv_ab Hinv_cd [ ψ_abcd f0 + 4 ψ_abc f_d ] / 8
    let mut t2 = Complex64::new(0.0, 0.0);
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                for d in 0..k {
                    let w = hinv[(a, b)] * hinv[(c, d)];
                    if w == 0.0 {
                        continue;
                    }
                    t2 += w
                        * (tensor_at(&t4_phase, k, &[a, b, c, d]) * f0
                            + 4.0 * tensor_at(&t3_phase, k, &[a, b, c]) * grad_f[d]);
                }
            }
        }
    }
    t2 /= 8.0;

    // t3 = (f0/96) Σ Hinv_ab Hinv_cd Hinv_ef Σ_{3|3 splittings} ψ_(3) ψ_(3)
    let splittings: Vec<[usize; 6]> = {
        let mut out = Vec::new();
        for m in 0..(1u32 << 6) {
            if m.count_ones() == 3 {
                let mut left = Vec::new();
                let mut right = Vec::new();
                for bit in 0..6 {
                    if m >> bit & 1 == 1 {
                        left.push(bit as usize);
                    } else {
                        right.push(bit as usize);
                    }
                }
                out.push([left[0], left[1], left[2], right[0], right[1], right[2]]);
            }
        }
        out
    };
    let mut t3 = Complex64::new(0.0, 0.0);
    let mut idx = [0usize; 6];
    loop {
        let w = hinv[(idx[0], idx[1])] * hinv[(idx[2], idx[3])] * hinv[(idx[4], idx[5])];
        if w != 0.0 {
            let mut s = Complex64::new(0.0, 0.0);
            for sp in &splittings {
                let l = [idx[sp[0]], idx[sp[1]], idx[sp[2]]];
                let r = [idx[sp[3]], idx[sp[4]], idx[sp[5]]];
                s += tensor_at(&t3_phase, k, &l) * tensor_at(&t3_phase, k, &r);
            }
            t3 += w * s;
        }
        let mut a = 0;
        loop {
            if a == 6 {
                t3 *= f0 / 96.0;
                return Ok(-mult * (t1 - t2 + t3));
            }
            idx[a] += 1;
            if idx[a] < k {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// Multi-start Newton probe; errors when several distinct stationary points
/// converge inside the integration box.
fn detect_multiple_stationary_points(
    spec: &TransferSpec,
    target: &[f64],
) -> Result<(), AsymptoticsError> {
    let layout = swap_layout(&spec.phase.chart, &spec.to_chart);
    let k = layout.swap_slots.len();
    if k == 0 {
        return Ok(());
    }
    let mut found: Vec<Vec<f64>> = Vec::new();
    let starts = 3usize.pow(k as u32);
    for s in 0..starts {
        let mut rem = s;
        let mut probe = spec.phase.clone();
        let mut lo = probe.domain_lo.clone();
        let mut hi = probe.domain_hi.clone();
        for &slot in &layout.swap_slots {
            let t = (rem % 3) as f64 / 2.0;
            rem /= 3;
            let width = hi[slot] - lo[slot];
            let c = lo[slot] + (0.17 + 0.66 * t) * width;
            lo[slot] = c - 1e-6 * width;
            hi[slot] = c + 1e-6 * width;
        }
        probe.domain_lo = lo;
        probe.domain_hi = hi;
        if let Ok(sw) = solve_swap(&probe, &spec.to_chart, target, &layout) {
            let inside = sw
                .iter()
                .zip(&layout.swap_slots)
                .all(|(v, &slot)| *v >= spec.phase.domain_lo[slot] && *v <= spec.phase.domain_hi[slot]);
            if !inside {
                continue;
            }
            let tol = 1e-5
                * layout
                    .swap_slots
                    .iter()
                    .map(|&a| spec.phase.domain_hi[a] - spec.phase.domain_lo[a])
                    .fold(1.0f64, f64::max);
            if !found.iter().any(|p| {
                p.iter().zip(&sw).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max) < tol
            }) {
                found.push(sw);
            }
        }
    }
    if found.len() > 1 {
        return Err(AsymptoticsError::MultipleStationaryPoints(found.len()));
    }
    Ok(())
}

// ── the four-step series transfer ───────────────────────────────────────

/// A fluctuation series on one chart in functional form: the leading
/// coefficient as a chart function and the tail coefficients
/// `Φ⁽¹⁾, Φ⁽²⁾, …` as closures on the chart coordinates.
#[derive(Clone)]
pub struct ChartSeries {
    pub phase: ChartFunction,
    pub tail: Vec<ScalarChartFn>,
}

impl ChartSeries {
    pub fn order(&self) -> usize {
        self.tail.len()
    }
}

/// Transfer diagnostics: the order-0 multiplier range and optional
/// quadrature-oracle residuals.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TransferDiagnostics {
    pub multiplier_min: f64,
    pub multiplier_max: f64,
    pub maslov_constant: i8,
    /// `(ε, |normalized quadrature - truncated series|)` pairs when the
    /// oracle comparison was requested.
    pub oracle_residuals: Vec<(f64, f64)>,
}

pub struct TransferResult {
    pub series_out: SeriesField,
    pub diagnostics: TransferDiagnostics,
}

/// Transferred coefficient values `[Φ⁽⁰⁾, Φ⁽¹⁾, Φ⁽²⁾]` (truncated to what
/// the input order supports) at one target point.
///
/// Steps: (1) the Legendre value of the phase; (2) exponentiate the tail;
/// (3) apply the transport coefficients `V̂⁽ⁿ⁻ᵐ⁾` and sum; (4) take the
/// series logarithm.
pub fn transfer_at(
    input: &ChartSeries,
    spec: &TransferSpec,
    target: &[f64],
) -> Result<Vec<f64>, AsymptoticsError> {
    if input.tail.is_empty() {
        // only the leading coefficient: pure Legendre transform
        let st = spec.stationary_data(target)?;
        return Ok(vec![st.phase_value]);
    }
    let st = spec.stationary_data(target)?;
    let mult = st.det.abs().powf(-0.5);
    debug_assert!(mult > 0.0);

    // step 2: a = exp of the tail at the glue point
    let glue = &st.source_coords;
    let b_vals: Vec<f64> = input.tail.iter().map(|f| f(glue)).collect();
    let a_series = exp_coeffs(&TruncatedSeries::new(b_vals));

    // step 3: a'_0 = V̂⁽⁰⁾[a_0]; a'_1 = V̂⁽⁰⁾[a_1] + V̂⁽¹⁾[a_0]
    let a0p = mult * a_series.coeff(0);
    let out_orders = input.tail.len().min(2);
    let mut a_prime = vec![a0p];
    if out_orders >= 2 {
        let tail0 = input.tail[0].clone();
        let amp0 = move |pt: &[f64]| Complex64::new(tail0(pt).exp(), 0.0);
        let v1 = stationary_phase_coeffs(spec, &amp0, 1, target)?;
        let a1p = mult * a_series.coeff(1) + v1.re;
        a_prime.push(a1p);
    }

    // step 4: b' = log of the transported series
    let b_prime = log_coeffs(&TruncatedSeries::new(a_prime)).map_err(|_| {
        AsymptoticsError::DegenerateHessian(st.det.abs())
    })?;

    let mut out = vec![st.phase_value];
    out.extend((0..out_orders).map(|m| b_prime.coeff(m)));
    Ok(out)
}

/// Gridded transfer onto the target chart; optionally compares against the
/// quadrature oracle at the first grid node.
pub fn transfer_series(
    input: &ChartSeries,
    spec: &TransferSpec,
    target_grid: &RectGrid,
    with_oracle: bool,
) -> Result<TransferResult, AsymptoticsError> {
    let mut nodes = Vec::with_capacity(target_grid.len());
    let mut mult_min = f64::INFINITY;
    let mut mult_max = f64::NEG_INFINITY;
    let mut order = None;
    for idx in 0..target_grid.len() {
        let pt = target_grid.point(idx);
        let vals = transfer_at(input, spec, &pt)?;
        let st = spec.stationary_data(&pt)?;
        let mult = st.det.abs().powf(-0.5);
        mult_min = mult_min.min(mult);
        mult_max = mult_max.max(mult);
        order.get_or_insert(vals.len() - 1);
        nodes.push(TruncatedSeries::new(vals));
    }
    let oracle_residuals = if with_oracle && !target_grid.is_empty() {
        oracle_residuals(input, spec, &target_grid.point(0))?
    } else {
        Vec::new()
    };
    Ok(TransferResult {
        series_out: SeriesField::new(target_grid.clone(), nodes),
        diagnostics: TransferDiagnostics {
            multiplier_min: mult_min,
            multiplier_max: mult_max,
            maslov_constant: spec.maslov_constant,
            oracle_residuals,
        },
    })
}

/// Functional transfer: the output series as closures on the target chart,
/// composable into cocycle chains.
pub fn transfer_chart_series(
    input: &ChartSeries,
    spec: &TransferSpec,
) -> Result<ChartSeries, AsymptoticsError> {
    let phase_out = legendre_transform(&spec.phase, &spec.to_chart)?;
    let out_orders = input.tail.len().min(2);
    let mut tail: Vec<ScalarChartFn> = Vec::new();
    for m in 1..=out_orders {
        let input = input.clone();
        let spec = spec.clone();
        tail.push(Arc::new(move |pt: &[f64]| {
            transfer_at(&input, &spec, pt)
                .unwrap_or_else(|e| panic!("series transfer failed at {pt:?}: {e}"))[m]
        }));
    }
    Ok(ChartSeries { phase: phase_out, tail })
}

/// Residual of the cocycle `N_{I,K} ∘ N_{K,J} ∘ N_{J,I} = id` per
/// coefficient order (0 and 1), over samples in the source chart.
pub fn check_cocycle_n(
    input: &ChartSeries,
    spec_ij: &TransferSpec,
    spec_jk: &TransferSpec,
    spec_ki: &TransferSpec,
    samples: &[Vec<f64>],
) -> Result<Vec<f64>, AsymptoticsError> {
    let leg1 = transfer_chart_series(input, spec_ij)?;
    let spec_jk = TransferSpec::new(leg1.phase.clone(), spec_jk.to_chart.clone())?;
    let leg2 = transfer_chart_series(&leg1, &spec_jk)?;
    let spec_ki = TransferSpec::new(leg2.phase.clone(), spec_ki.to_chart.clone())?;
    let leg3 = transfer_chart_series(&leg2, &spec_ki)?;

    let orders = 1 + input.tail.len().min(1);
    let mut residuals = vec![0.0f64; orders];
    for s in samples {
        residuals[0] = residuals[0].max((leg3.phase.value(s) - input.phase.value(s)).abs());
        if orders > 1 {
            residuals[1] = residuals[1].max((leg3.tail[0](s) - input.tail[0](s)).abs());
        }
    }
    Ok(residuals)
}

/// `(ε, remainder)` pairs comparing the normalized quadrature against the
/// truncated transport series at one target point.
///
/// The normalized quadrature is
/// `Q(ε) · exp(-iΦ_J⁽⁰⁾/ε) · exp(-iπμ/4) · (2πε)^{k/2}`, whose expansion is
/// `Σ_n (-iε)^n a'_n`; the remainder subtracts the `n ≤ 1` partial sum, so
/// it should shrink as `O(ε²)`.
pub fn oracle_residuals(
    input: &ChartSeries,
    spec: &TransferSpec,
    target: &[f64],
) -> Result<Vec<(f64, f64)>, AsymptoticsError> {
    let st = spec.stationary_data(target)?;
    let mult = st.det.abs().powf(-0.5);
    let glue = &st.source_coords;
    let b_vals: Vec<f64> = input.tail.iter().map(|f| f(glue)).collect();
    let a_series = exp_coeffs(&TruncatedSeries::new(b_vals.clone()));
    let a0p = mult * a_series.coeff(0);
    let a1p = if input.tail.len() >= 2 {
        let tail0 = input.tail[0].clone();
        let amp0 = move |pt: &[f64]| Complex64::new(tail0(pt).exp(), 0.0);
        mult * a_series.coeff(1) + stationary_phase_coeffs(spec, &amp0, 1, target)?.re
    } else {
        let tail0 = input.tail[0].clone();
        let amp0 = move |pt: &[f64]| Complex64::new(tail0(pt).exp(), 0.0);
        stationary_phase_coeffs(spec, &amp0, 1, target)?.re
    };

    let k = spec.swap_count();
    let mut out = Vec::new();
    for &eps in &spec.epsilon_grid {
        // ε-dependent amplitude exp(Σ (-iε)^m b_m / m!)
        let tails = input.tail.clone();
        let amp = move |pt: &[f64]| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut fac = 1.0;
            for (m, f) in tails.iter().enumerate() {
                if m > 0 {
                    fac *= m as f64;
                }
                acc += Complex64::new(0.0, -eps).powu(m as u32) * f(pt) / fac;
            }
            acc.exp()
        };
        let q = oscillatory_integral(spec, &amp, eps, target)?;
        let normalized = q
            * Complex64::from_polar(1.0, -st.phase_value / eps)
            * spec.maslov_factor().conj()
            * (2.0 * std::f64::consts::PI * eps).powf(k as f64 / 2.0);
        let truncated = Complex64::new(a0p, 0.0) + Complex64::new(0.0, -eps) * a1p;
        out.push((eps, (normalized - truncated).norm()));
    }
    Ok(out)
}

/// Least-squares slope of `ln r` against `ln ε`.
pub fn log_log_slope(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(e, r) in pairs {
        let x = e.ln();
        let y = r.max(1e-300).ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::FocalChartSpec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn spec_chart(n: usize, focal: &[usize]) -> FocalChartSpec {
        FocalChartSpec::new(n, focal.iter().copied()).unwrap()
    }

    /// 1D quadratic phase (plus spectator), Gaussian amplitude.
    fn quadratic_setup() -> TransferSpec {
        let phase = ChartFunction::new(
            spec_chart(2, &[]),
            vec![-8.0, 0.5],
            vec![8.0, 2.0],
            |z| 0.5 * z[0] * z[0],
        )
        .with_gradient(|z| vec![z[0], 0.0]);
        TransferSpec::new(phase, spec_chart(2, &[1])).unwrap()
    }

    fn gaussian_amp(z: &[f64]) -> Complex64 {
        Complex64::new((-0.5 * z[0] * z[0]).exp(), 0.0)
    }

    // ── oscillatory integral oracle ────────────────────────────────────

    #[test]
    fn quadratic_phase_matches_closed_form() {
        // With Φ = x²/2, amplitude e^{-x²/2} and target y = 0 the integral
        // is Gaussian: ∫ e^{-x²/2} e^{ix²/(2ε)} dx = √(2π/(1/ε... )) — in
        // closed form √(2π) (1 - i/ε)^{-1/2}.
        let spec = quadratic_setup();
        let eps = 0.05;
        let q = oscillatory_integral(&spec, &gaussian_amp, eps, &[0.0, 1.0]).unwrap();
        let alpha = Complex64::new(1.0, -1.0 / eps); // ∫ e^{-αx²/2} = √(2π/α)
        let want = (2.0 * std::f64::consts::PI / alpha).sqrt()
            / (2.0 * std::f64::consts::PI * eps);
        assert!(
            (q - want).norm() / want.norm() < 1e-6,
            "quadrature {q} vs closed form {want}"
        );
    }

    #[test]
    fn zero_amplitude_integrates_to_zero() {
        let spec = quadratic_setup();
        let amp = |_: &[f64]| Complex64::new(0.0, 0.0);
        let q = oscillatory_integral(&spec, &amp, 0.05, &[0.3, 1.0]).unwrap();
        assert_eq!(q, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn first_order_remainder_halves_with_epsilon() {
        // subtracting only the order-0 term leaves an O(ε) remainder
        let spec = quadratic_setup();
        let target = [0.0, 1.0];
        let v0 = stationary_phase_coeffs(&spec, &gaussian_amp, 0, &target).unwrap();
        let st_remainder = |eps: f64| {
            let q = oscillatory_integral(&spec, &gaussian_amp, eps, &target).unwrap();
            let norm = q
                * Complex64::from_polar(1.0, -spec.stationary_data(&target).unwrap().phase_value / eps)
                * spec.maslov_factor().conj()
                * (2.0 * std::f64::consts::PI * eps).sqrt();
            (norm - v0).norm()
        };
        let r1 = st_remainder(0.1);
        let r2 = st_remainder(0.05);
        let ratio = r1 / r2;
        assert!((ratio - 2.0).abs() < 0.25, "remainder ratio {ratio}");
    }

    // ── stationary-phase coefficients ──────────────────────────────────

    #[test]
    fn order0_is_positive_multiplier() {
        let spec = quadratic_setup();
        assert_eq!(spec.maslov_constant, 1); // signature +1 → e^{iπ/4}
        let v0 = stationary_phase_coeffs(&spec, &gaussian_amp, 0, &[0.4, 1.0]).unwrap();
        // |det H|^{-1/2} = 1, amplitude at x* = 0.4
        assert_relative_eq!(v0.re, (-0.5f64 * 0.16).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(v0.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn order1_quadratic_constant_amplitude_vanishes() {
        let spec = quadratic_setup();
        let amp = |_: &[f64]| Complex64::new(1.0, 0.0);
        let v1 = stationary_phase_coeffs(&spec, &amp, 1, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(v1.re, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn order0_vanishing_amplitude_at_stationary_point() {
        let spec = quadratic_setup();
        let amp = |z: &[f64]| Complex64::new(z[0] * z[0], 0.0); // zero value & gradient at x*=0
        let v0 = stationary_phase_coeffs(&spec, &amp, 0, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(v0.re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quartic_phase_order1_against_hand_value() {
        // Φ = x²/2 + 0.1x⁴, amplitude e^{-x²/2}, target y = 0: x* = 0,
        // H = 1, g = 0.1x⁴. By direct Gaussian moments
        //   ℓ₁ = ½ amp''(0) - ⅛ g⁗(0) amp(0) = -0.5 - 0.3 = -0.8,
        // and the (-iε)-convention coefficient is V̂¹ = -ℓ₁ = 0.8.
        let phase = ChartFunction::new(
            spec_chart(2, &[]),
            vec![-6.0, 0.5],
            vec![6.0, 2.0],
            |z| 0.5 * z[0] * z[0] + 0.1 * z[0].powi(4),
        )
        .with_gradient(|z| vec![z[0] + 0.4 * z[0].powi(3), 0.0]);
        let spec = TransferSpec::new(phase, spec_chart(2, &[1])).unwrap();
        let v1 = stationary_phase_coeffs(&spec, &gaussian_amp, 1, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(v1.re, 0.8, epsilon = 1e-5);
    }

    #[test]
    fn quartic_remainder_slope_near_two() {
        let phase = ChartFunction::new(
            spec_chart(2, &[]),
            vec![-6.0, 0.5],
            vec![6.0, 2.0],
            |z| 0.5 * z[0] * z[0] + 0.1 * z[0].powi(4),
        )
        .with_gradient(|z| vec![z[0] + 0.4 * z[0].powi(3), 0.0]);
        let spec = TransferSpec::new(phase, spec_chart(2, &[1])).unwrap();
        let input = ChartSeries {
            phase: spec.phase.clone(),
            tail: vec![Arc::new(|z: &[f64]| -0.5 * z[0] * z[0])],
        };
        let pairs = oracle_residuals(&input, &spec, &[0.0, 1.0]).unwrap();
        let slope = log_log_slope(&pairs);
        assert!(slope >= 1.8, "remainder slope {slope}, pairs {pairs:?}");
    }

    // ── series transfer ────────────────────────────────────────────────

    #[test]
    fn zero_tail_flat_phase_transfers_to_zero_tail() {
        // Unit-Hessian quadratic phase: multiplier ≡ 1, so a zero tail maps
        // to ln(1·e⁰) = 0.
        let spec = quadratic_setup();
        let input = ChartSeries {
            phase: spec.phase.clone(),
            tail: vec![Arc::new(|_: &[f64]| 0.0)],
        };
        let out = transfer_at(&input, &spec, &[0.7, 1.0]).unwrap();
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn order0_output_equals_numerical_legendre() {
        let spec = quadratic_setup();
        let input = ChartSeries {
            phase: spec.phase.clone(),
            tail: vec![Arc::new(|z: &[f64]| 0.3 * z[0])],
        };
        let leg = legendre_transform(&spec.phase, &spec.to_chart).unwrap();
        for y in [-0.8, 0.1, 1.2] {
            let out = transfer_at(&input, &spec, &[y, 1.0]).unwrap();
            assert_abs_diff_eq!(out[0], leg.value(&[y, 1.0]), epsilon = 1e-9);
        }
    }

    #[test]
    fn two_chart_round_trip_recovers_tail() {
        // I → J → I on a non-unit quadratic: the multiplier logs telescope
        let phase = ChartFunction::new(
            spec_chart(2, &[]),
            vec![-8.0, 0.5],
            vec![8.0, 2.0],
            |z| 1.7 * 0.5 * z[0] * z[0] + 0.2 * z[0],
        )
        .with_gradient(|z| vec![1.7 * z[0] + 0.2, 0.0]);
        let spec_fwd = TransferSpec::new(phase.clone(), spec_chart(2, &[1])).unwrap();
        let tail0: ScalarChartFn = Arc::new(|z: &[f64]| 0.3 * (0.8 * z[0]).sin() + 0.1);
        let input = ChartSeries { phase: phase.clone(), tail: vec![tail0.clone()] };
        let fwd = transfer_chart_series(&input, &spec_fwd).unwrap();
        let spec_back = TransferSpec::new(fwd.phase.clone(), spec_chart(2, &[])).unwrap();
        let back = transfer_chart_series(&fwd, &spec_back).unwrap();
        for x in [-1.1, 0.0, 0.9, 2.0] {
            let pt = [x, 1.0];
            assert_abs_diff_eq!(back.phase.value(&pt), phase.value(&pt), epsilon = 1e-8);
            assert_abs_diff_eq!(back.tail[0](&pt), tail0(&pt), epsilon = 1e-7);
        }
    }

    #[test]
    fn degenerate_cocycle_is_identity() {
        let spec = quadratic_setup();
        let input = ChartSeries {
            phase: spec.phase.clone(),
            tail: vec![Arc::new(|z: &[f64]| 0.1 * z[0])],
        };
        let id_spec = TransferSpec::new(spec.phase.clone(), spec.phase.chart.clone()).unwrap();
        let out = transfer_chart_series(&input, &id_spec).unwrap();
        for x in [-0.5, 0.2, 1.4] {
            let pt = [x, 1.0];
            assert_abs_diff_eq!(out.phase.value(&pt), input.phase.value(&pt), epsilon = 1e-12);
            assert_abs_diff_eq!(out.tail[0](&pt), 0.1 * x, epsilon = 1e-10);
        }
    }

    #[test]
    fn multiple_stationary_points_detected() {
        // double-well phase has two stationary points at target y = 0
        let phase = ChartFunction::new(
            spec_chart(2, &[]),
            vec![-3.0, 0.5],
            vec![3.0, 2.0],
            |z| 0.25 * z[0].powi(4) - 0.5 * z[0] * z[0],
        )
        .with_gradient(|z| vec![z[0].powi(3) - z[0], 0.0]);
        let spec = TransferSpec {
            phase,
            to_chart: spec_chart(2, &[1]),
            maslov_constant: 0,
            epsilon_grid: vec![0.1],
        };
        let err = stationary_phase_coeffs(&spec, &gaussian_amp, 0, &[0.0, 1.0]);
        assert!(matches!(err, Err(AsymptoticsError::MultipleStationaryPoints(_))));
    }
}
