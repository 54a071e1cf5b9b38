//! Thermodynamic Lagrangian manifolds presented through focal charts.
//!
//! A focal chart of type `I ⊂ {1..d+1}` mixes coordinates: position `k`
//! contributes the intensive coordinate `y_k` when `k ∈ I` and the extensive
//! coordinate `x_k` otherwise, in index order. A chart is described by a
//! generating function `S` through `y_i = ∂S/∂x_i`, `x_j = -∂S/∂y_j`;
//! switching charts is a Legendre transform
//! `S_J = S_I - Σ_{j∈J\I} x_j y_j + Σ_{i∈I\J} x_i y_i`
//! evaluated at the stationary point of the right-hand side over the
//! swapped-out coordinates.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Molar gas constant in the toolkit's entropy units.
pub const R_GAS: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("Newton iteration did not converge (residual {residual:.3e})")]
    NewtonDivergence { residual: f64 },
    #[error("degenerate Hessian (|det| = {det:.3e})")]
    DegenerateHessian { det: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("invalid focal chart: {0}")]
    BadChart(String),
}

/// Focal chart type: the subset of positions carried by intensive
/// coordinates. `I = {1..d+1}` is rejected; at least one coordinate of a
/// thermodynamic chart must be extensive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FocalChartSpec {
    pub d_plus_1: usize,
    pub focal_set: BTreeSet<usize>,
}

impl FocalChartSpec {
    pub fn new(d_plus_1: usize, focal: impl IntoIterator<Item = usize>) -> Result<Self, ManifoldError> {
        let focal_set: BTreeSet<usize> = focal.into_iter().collect();
        if d_plus_1 == 0 {
            return Err(ManifoldError::BadChart("need at least one coordinate".into()));
        }
        if focal_set.iter().any(|&k| k == 0 || k > d_plus_1) {
            return Err(ManifoldError::BadChart(format!(
                "focal indices must lie in 1..={d_plus_1}"
            )));
        }
        if focal_set.len() == d_plus_1 {
            return Err(ManifoldError::BadChart(
                "the all-intensive chart does not exist on a projectivizable manifold".into(),
            ));
        }
        Ok(FocalChartSpec { d_plus_1, focal_set })
    }

    pub fn dim(&self) -> usize {
        self.d_plus_1
    }

    /// Is position `k` (1-based) an intensive coordinate of this chart?
    pub fn is_intensive(&self, k: usize) -> bool {
        self.focal_set.contains(&k)
    }

    /// Positions whose chart coordinate is extensive, in index order.
    pub fn extensive_positions(&self) -> Vec<usize> {
        (1..=self.d_plus_1).filter(|k| !self.is_intensive(*k)).collect()
    }
}

/// A full phase-space point `(x, y)`, both vectors indexed by position
/// `1..=d+1` (stored zero-based).
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ManifoldPoint {
    /// Chart coordinates of this point in chart `spec`.
    pub fn chart_coords(&self, spec: &FocalChartSpec) -> Vec<f64> {
        (1..=spec.d_plus_1)
            .map(|k| if spec.is_intensive(k) { self.y[k - 1] } else { self.x[k - 1] })
            .collect()
    }

    /// Max residual of the chart equations `y_i = ∂S/∂x_i`,
    /// `x_j = -∂S/∂y_j` for a chart function defining this point.
    pub fn chart_residual(&self, f: &ChartFunction) -> f64 {
        let coords = self.chart_coords(&f.chart);
        let grad = f.gradient(&coords);
        let mut worst: f64 = 0.0;
        for (slot, k) in (1..=f.chart.d_plus_1).enumerate() {
            let r = if f.chart.is_intensive(k) {
                self.x[k - 1] + grad[slot]
            } else {
                self.y[k - 1] - grad[slot]
            };
            worst = worst.max(r.abs());
        }
        worst
    }
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A generating function on one focal chart: evaluator, optional analytic
/// gradient, and the rectangular box it is trusted on.
#[derive(Clone)]
pub struct ChartFunction {
    pub chart: FocalChartSpec,
    pub domain_lo: Vec<f64>,
    pub domain_hi: Vec<f64>,
    eval: ScalarFn,
    grad: Option<GradFn>,
}

impl std::fmt::Debug for ChartFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartFunction")
            .field("chart", &self.chart)
            .field("domain_lo", &self.domain_lo)
            .field("domain_hi", &self.domain_hi)
            .field("analytic_grad", &self.grad.is_some())
            .finish()
    }
}

impl ChartFunction {
    pub fn new(
        chart: FocalChartSpec,
        domain_lo: Vec<f64>,
        domain_hi: Vec<f64>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert_eq!(domain_lo.len(), chart.d_plus_1);
        assert_eq!(domain_hi.len(), chart.d_plus_1);
        ChartFunction {
            chart,
            domain_lo,
            domain_hi,
            eval: Arc::new(eval),
            grad: None,
        }
    }

    pub fn with_gradient(mut self, grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    /// Quadratic generating function `½ zᵀ A z + bᵀ z + c` with analytic
    /// gradient; the workhorse of the closed-form test models.
    pub fn quadratic(
        chart: FocalChartSpec,
        a: DMatrix<f64>,
        b: Vec<f64>,
        c: f64,
        domain_lo: Vec<f64>,
        domain_hi: Vec<f64>,
    ) -> Self {
        let n = chart.d_plus_1;
        assert_eq!(a.nrows(), n);
        assert_eq!(a.ncols(), n);
        assert_eq!(b.len(), n);
        let a2 = a.clone();
        let b2 = b.clone();
        ChartFunction::new(chart, domain_lo, domain_hi, move |z| {
            let zv = DVector::from_column_slice(z);
            0.5 * (&zv.transpose() * &a * &zv)[(0, 0)] + b.iter().zip(z).map(|(bi, zi)| bi * zi).sum::<f64>() + c
        })
        .with_gradient(move |z| {
            let zv = DVector::from_column_slice(z);
            let g = &a2 * zv;
            g.iter().zip(&b2).map(|(gi, bi)| gi + bi).collect()
        })
    }

    pub fn value(&self, coords: &[f64]) -> f64 {
        (self.eval)(coords)
    }

    /// Per-axis scale used for finite-difference steps.
    fn fd_scale(&self, axis: usize) -> f64 {
        self.domain_lo[axis]
            .abs()
            .max(self.domain_hi[axis].abs())
            .max(1.0)
    }

    pub fn gradient(&self, coords: &[f64]) -> Vec<f64> {
        if let Some(g) = &self.grad {
            return g(coords);
        }
        let n = coords.len();
        let mut out = vec![0.0; n];
        let mut pt = coords.to_vec();
        for a in 0..n {
            let h = 1e-5 * self.fd_scale(a);
            let x0 = pt[a];
            pt[a] = x0 + h;
            let fp = self.value(&pt);
            pt[a] = x0 - h;
            let fm = self.value(&pt);
            pt[a] = x0;
            out[a] = (fp - fm) / (2.0 * h);
        }
        out
    }

    /// Hessian by central differences of the gradient.
    pub fn hessian(&self, coords: &[f64]) -> DMatrix<f64> {
        let n = coords.len();
        let mut h = DMatrix::zeros(n, n);
        let mut pt = coords.to_vec();
        for a in 0..n {
            let step = 1e-5 * self.fd_scale(a);
            let x0 = pt[a];
            pt[a] = x0 + step;
            let gp = self.gradient(&pt);
            pt[a] = x0 - step;
            let gm = self.gradient(&pt);
            pt[a] = x0;
            for b in 0..n {
                h[(b, a)] = (gp[b] - gm[b]) / (2.0 * step);
            }
        }
        // symmetrize away finite-difference noise
        for a in 0..n {
            for b in 0..a {
                let s = 0.5 * (h[(a, b)] + h[(b, a)]);
                h[(a, b)] = s;
                h[(b, a)] = s;
            }
        }
        h
    }

    /// Complete a chart point to a full phase-space point via the chart
    /// equations.
    pub fn complete_point(&self, coords: &[f64]) -> ManifoldPoint {
        let n = self.chart.d_plus_1;
        let grad = self.gradient(coords);
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for (slot, k) in (1..=n).enumerate() {
            if self.chart.is_intensive(k) {
                y[k - 1] = coords[slot];
                x[k - 1] = -grad[slot];
            } else {
                x[k - 1] = coords[slot];
                y[k - 1] = grad[slot];
            }
        }
        ManifoldPoint { x, y }
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        coords
            .iter()
            .zip(self.domain_lo.iter().zip(&self.domain_hi))
            .all(|(c, (lo, hi))| *c >= *lo && *c <= *hi)
    }

    /// Max relative homogeneity residual
    /// `|S((ρx, y)_I) - ρ S((x, y)_I)| / (|ρ S| + 1)` over the samples.
    ///
    /// Only meaningful for charts of projectivizable manifolds; toy
    /// quadratic models are not expected to pass this.
    pub fn check_homogeneity(&self, rho: f64, samples: &[Vec<f64>]) -> f64 {
        let ext: Vec<usize> = self
            .chart
            .extensive_positions()
            .iter()
            .map(|k| self.chart_slot(*k))
            .collect();
        let mut worst: f64 = 0.0;
        for s in samples {
            let base = self.value(s);
            let mut scaled = s.clone();
            for &slot in &ext {
                scaled[slot] *= rho;
            }
            let lhs = self.value(&scaled);
            let denom = (rho * base).abs() + 1.0;
            worst = worst.max((lhs - rho * base).abs() / denom);
        }
        worst
    }

    /// Smallest `|det Hess|` over the samples.
    pub fn min_abs_hessian_det(&self, samples: &[Vec<f64>]) -> f64 {
        samples
            .iter()
            .map(|s| self.hessian(s).determinant().abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of position `k` in the ordered chart coordinate list.
    fn chart_slot(&self, k: usize) -> usize {
        k - 1
    }
}

/// Damped Newton iteration for `grad(s) = 0`.
///
/// `grad_hess` returns the gradient and Hessian of the stationarity
/// functional at `s`. Steps are halved until the residual decreases;
/// 50 iterations, residual target 1e-10 (relative to the coordinate scale).
fn newton_stationary(
    start: &[f64],
    scale: f64,
    bounds: &[(f64, f64)],
    grad_hess: &dyn Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>),
) -> Result<Vec<f64>, ManifoldError> {
    let tol = 1e-10 * scale.max(1.0);
    let clamp = |v: &mut DVector<f64>| {
        for (x, &(lo, hi)) in v.iter_mut().zip(bounds) {
            *x = x.clamp(lo, hi);
        }
    };
    let mut s = DVector::from_column_slice(start);
    clamp(&mut s);
    let (mut g, mut h) = grad_hess(s.as_slice());
    let mut res = g.norm();
    for _ in 0..50 {
        if res <= tol {
            return Ok(s.as_slice().to_vec());
        }
        let det = h.determinant();
        if !det.is_finite() || det.abs() < 1e-14 {
            return Err(ManifoldError::DegenerateHessian { det });
        }
        let step = h
            .clone()
            .lu()
            .solve(&g)
            .ok_or(ManifoldError::DegenerateHessian { det })?;
        let mut alpha = 1.0;
        loop {
            let mut trial = &s - alpha * &step;
            clamp(&mut trial);
            let (gt, ht) = grad_hess(trial.as_slice());
            let rt = gt.norm();
            if rt.is_finite() && (rt < res || alpha < 1.0 / 64.0) {
                s = trial;
                g = gt;
                h = ht;
                res = rt;
                break;
            }
            alpha *= 0.5;
        }
    }
    if res <= tol {
        Ok(s.as_slice().to_vec())
    } else {
        Err(ManifoldError::NewtonDivergence { residual: res })
    }
}

/// Where the Legendre stationarity problem lives: which source-chart slots
/// are solved for, and how source coordinates are assembled from target
/// coordinates plus the solved swap variables.
pub(crate) struct SwapLayout {
    /// slots (in source chart order) of solved-for variables
    pub swap_slots: Vec<usize>,
    /// for each swap slot: +1 if the bilinear term enters as `-x_j y_j`
    /// (position moves into the focal set), -1 for `+x_i y_i`
    pub bilinear_sign: Vec<f64>,
}

pub(crate) fn swap_layout(from: &FocalChartSpec, to: &FocalChartSpec) -> SwapLayout {
    let mut swap_slots = Vec::new();
    let mut bilinear_sign = Vec::new();

    for k in 1..=from.d_plus_1 {
        let in_i = from.is_intensive(k);
        let in_j = to.is_intensive(k);
        if in_i == in_j {
            continue;
        }
        swap_slots.push(k - 1);

        // k ∈ J\I: solve for x_k, bilinear -x_k y_k; k ∈ I\J: solve for y_k,
        // bilinear +x_k y_k
        bilinear_sign.push(if in_j { -1.0 } else { 1.0 });
    }
    SwapLayout { swap_slots, bilinear_sign }
}

/// Assemble source-chart coordinates from target-chart coordinates and the
/// current swap variables. Slots are indexed by position, so unswapped
/// slots carry the same value in both charts.
fn assemble_source(target: &[f64], swap: &[f64], layout: &SwapLayout) -> Vec<f64> {
    let mut src = target.to_vec();
    for (v, &slot) in swap.iter().zip(&layout.swap_slots) {
        src[slot] = *v;
    }
    src
}

/// Stationarity functional `ψ(swap) = S_I(src) + Σ ± x_k y_k` whose
/// stationary value is the Legendre transform.
fn stationarity_value(f: &ChartFunction, target: &[f64], swap: &[f64], layout: &SwapLayout) -> f64 {
    let src = assemble_source(target, swap, layout);
    let mut v = f.value(&src);
    for ((&slot, &sign), &s) in layout.swap_slots.iter().zip(&layout.bilinear_sign).zip(swap) {
        // bilinear pairs the solved variable with the fixed target coordinate
        v += sign * s * target[slot];
    }
    v
}

fn stationarity_grad_hess(
    f: &ChartFunction,
    target: &[f64],
    swap: &[f64],
    layout: &SwapLayout,
) -> (DVector<f64>, DMatrix<f64>) {
    let src = assemble_source(target, swap, layout);
    let grad_full = f.gradient(&src);
    let hess_full = f.hessian(&src);
    let m = layout.swap_slots.len();
    let mut g = DVector::zeros(m);
    let mut h = DMatrix::zeros(m, m);
    for (r, &slot) in layout.swap_slots.iter().enumerate() {
        g[r] = grad_full[slot] + layout.bilinear_sign[r] * target[slot];
        for (c, &slot2) in layout.swap_slots.iter().enumerate() {
            h[(r, c)] = hess_full[(slot, slot2)];
        }
    }
    (g, h)
}

/// Solve the Legendre stationarity problem at one target point; returns the
/// swap-variable values.
pub(crate) fn solve_swap(
    f: &ChartFunction,
    to: &FocalChartSpec,
    target: &[f64],
    layout: &SwapLayout,
) -> Result<Vec<f64>, ManifoldError> {
    debug_assert_eq!(to.d_plus_1, f.chart.d_plus_1);
    let start: Vec<f64> = layout
        .swap_slots
        .iter()
        .map(|&slot| 0.5 * (f.domain_lo[slot] + f.domain_hi[slot]))
        .collect();
    let scale = layout
        .swap_slots
        .iter()
        .map(|&slot| f.fd_scale(slot))
        .fold(1.0f64, f64::max);
    let bounds: Vec<(f64, f64)> = layout
        .swap_slots
        .iter()
        .map(|&slot| (f.domain_lo[slot], f.domain_hi[slot]))
        .collect();
    newton_stationary(&start, scale, &bounds, &|swap| {
        stationarity_grad_hess(f, target, swap, layout)
    })
}

/// Legendre transform `L_{J,I}` of a chart function onto chart `to`.
///
/// The value at a target point is the stationary value of
/// `S_I - Σ_{j∈J\I} x_j y_j + Σ_{i∈I\J} x_i y_i` over the swapped-out source
/// coordinates; the gradient comes for free from the chart equations of the
/// completed point (envelope property). `L_{I,I}` is the identity.
pub fn legendre_transform(
    f: &ChartFunction,
    to: &FocalChartSpec,
) -> Result<ChartFunction, ManifoldError> {
    if to.d_plus_1 != f.chart.d_plus_1 {
        return Err(ManifoldError::BadChart("chart dimensions differ".into()));
    }
    if *to == f.chart {
        return Ok(f.clone());
    }
    // Infer the target domain by mapping a sample of source points through
    // the glue map, then prove the stationarity problem solvable on it.
    // Later evaluations outside the validated box may panic.
    let (lo, hi) = infer_target_domain(f, to)?;
    {
        let layout = swap_layout(&f.chart, to);
        let n = f.chart.d_plus_1;
        for corner in 0..(1usize << n) {
            let target: Vec<f64> = (0..n)
                .map(|a| {
                    let t = if corner >> a & 1 == 1 { 0.75 } else { 0.25 };
                    lo[a] + t * (hi[a] - lo[a])
                })
                .collect();
            solve_swap(f, to, &target, &layout)?;
        }
    }

    let src = f.clone();
    let to_spec = to.clone();
    let eval = {
        let src = src.clone();
        let to_spec = to_spec.clone();
        move |target: &[f64]| -> f64 {
            let layout = swap_layout(&src.chart, &to_spec);
            let swap = solve_swap(&src, &to_spec, target, &layout)
                .unwrap_or_else(|e| panic!("Legendre evaluation failed at {target:?}: {e}"));
            stationarity_value(&src, target, &swap, &layout)
        }
    };
    let grad = {
        move |target: &[f64]| -> Vec<f64> {
            let layout = swap_layout(&src.chart, &to_spec);
            let swap = solve_swap(&src, &to_spec, target, &layout)
                .unwrap_or_else(|e| panic!("Legendre gradient failed at {target:?}: {e}"));
            let src_coords = assemble_source(target, &swap, &layout);
            let full = src.complete_point(&src_coords);
            full_to_chart_gradient(&full, &to_spec)
        }
    };
    Ok(ChartFunction::new(to.clone(), lo, hi, eval).with_gradient(grad))
}

/// Gradient of a chart generating function read off a completed point:
/// `∂S_J/∂x_j = y_j` on extensive slots and `∂S_J/∂y_i = -x_i` on intensive
/// slots.
fn full_to_chart_gradient(p: &ManifoldPoint, chart: &FocalChartSpec) -> Vec<f64> {
    (1..=chart.d_plus_1)
        .map(|k| {
            if chart.is_intensive(k) {
                -p.x[k - 1]
            } else {
                p.y[k - 1]
            }
        })
        .collect()
}

fn infer_target_domain(
    f: &ChartFunction,
    to: &FocalChartSpec,
) -> Result<(Vec<f64>, Vec<f64>), ManifoldError> {
    let n = f.chart.d_plus_1;
    let samples_per_axis = 3usize;
    let total = samples_per_axis.pow(n as u32);
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    let mut mapped = 0usize;
    for idx in 0..total {
        let mut rem = idx;
        let mut pt = vec![0.0; n];
        for a in 0..n {
            let i = rem % samples_per_axis;
            rem /= samples_per_axis;
            let t = (i as f64 + 0.5) / samples_per_axis as f64;
            pt[a] = f.domain_lo[a] + t * (f.domain_hi[a] - f.domain_lo[a]);
        }
        let full = f.complete_point(&pt);
        let coords = full.chart_coords(to);
        for a in 0..n {
            lo[a] = lo[a].min(coords[a]);
            hi[a] = hi[a].max(coords[a]);
        }
        mapped += 1;
    }
    if mapped == 0 {
        return Err(ManifoldError::DomainError("empty source domain".into()));
    }
    for a in 0..n {
        let pad = 0.05 * (hi[a] - lo[a]).abs().max(1e-6);
        lo[a] -= pad;
        hi[a] += pad;
    }
    Ok((lo, hi))
}

/// Glueing map between focal charts: the `to`-chart coordinates of the
/// manifold point whose `from`-chart coordinates are `point`, where `f`
/// generates the `from` chart.
pub fn glue_map(f: &ChartFunction, to: &FocalChartSpec, point: &[f64]) -> Vec<f64> {
    f.complete_point(point).chart_coords(to)
}

/// Max residual of the Legendre cocycle
/// `L_{I,K} ∘ L_{K,J} ∘ L_{J,I} = id` over sample points given in the
/// chart-`I` coordinates of `f`.
pub fn check_cocycle_l(
    f: &ChartFunction,
    j: &FocalChartSpec,
    k: &FocalChartSpec,
    samples: &[Vec<f64>],
) -> Result<f64, ManifoldError> {
    let f_j = legendre_transform(f, j)?;
    let f_k = legendre_transform(&f_j, k)?;
    let f_back = legendre_transform(&f_k, &f.chart)?;
    let mut worst: f64 = 0.0;
    for s in samples {
        worst = worst.max((f_back.value(s) - f.value(s)).abs());
    }
    Ok(worst)
}

/// Symplectic coordinate change `τ: (ξ, η) → (x, y)` between the
/// normalization-parameter presentation and the thermodynamic phase space.
///
/// Inputs are indexed `0..=d`; outputs are indexed `1..=d+1`:
/// `x_i = ξ_i`, `y_i = η_i - η_0` for `1 ≤ i ≤ d`, and
/// `x_{d+1} = ξ_0 + Σ_{i=1}^d ξ_i`, `y_{d+1} = η_0`.
pub fn tau_map(xi: &[f64], eta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(xi.len(), eta.len());
    let d = xi.len() - 1;
    let mut x = vec![0.0; d + 1];
    let mut y = vec![0.0; d + 1];
    for i in 1..=d {
        x[i - 1] = xi[i];
        y[i - 1] = eta[i] - eta[0];
    }
    x[d] = xi.iter().sum();
    y[d] = eta[0];
    (x, y)
}

/// Inverse of [`tau_map`].
pub fn tau_inverse(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(x.len(), y.len());
    let d = x.len() - 1;
    let mut xi = vec![0.0; d + 1];
    let mut eta = vec![0.0; d + 1];
    eta[0] = y[d];
    for i in 1..=d {
        xi[i] = x[i - 1];
        eta[i] = y[i - 1] + y[d];
    }
    xi[0] = x[d] - x[..d].iter().sum::<f64>();
    (xi, eta)
}

/// Entropy chart of the ideal-gas manifold with `d+1` extensive coordinates
/// `(E, V_1, …, V_{d-1}, ν)`:
///
/// `S = ν (c_v ln(E/ν) + R Σ_i ln(V_i/ν)) + ν s_0`,
///
/// homogeneous of degree one, with analytic gradient. Serves as the
/// closed-form oracle model for chart and cumulant tests.
pub fn ideal_gas_manifold(c_v: f64, d: usize) -> Result<ChartFunction, ManifoldError> {
    if c_v <= 0.0 {
        return Err(ManifoldError::DomainError(format!("c_v must be positive, got {c_v}")));
    }
    if d < 1 {
        return Err(ManifoldError::DomainError("need d >= 1".into()));
    }
    let n = d + 1;
    let chart = FocalChartSpec::new(n, [])?;
    let s0 = 2.5; // additive entropy constant, fixed by the anchor convention
    let lo = vec![0.1; n];
    let hi = vec![10.0; n];
    let eval = move |z: &[f64]| -> f64 {
        let nu = z[n - 1];
        let e = z[0];
        assert!(
            z.iter().all(|&v| v > 0.0),
            "ideal gas chart needs positive extensive coordinates, got {z:?}"
        );
        let mut s = c_v * (e / nu).ln();
        for vi in &z[1..n - 1] {
            s += R_GAS * (vi / nu).ln();
        }
        nu * (s + s0)
    };
    let grad = move |z: &[f64]| -> Vec<f64> {
        let nu = z[n - 1];
        let e = z[0];
        let mut g = vec![0.0; n];
        g[0] = c_v * nu / e;
        for (a, vi) in z[1..n - 1].iter().enumerate() {
            g[1 + a] = R_GAS * nu / vi;
        }
        let mut s = c_v * (e / nu).ln();
        for vi in &z[1..n - 1] {
            s += R_GAS * (vi / nu).ln();
        }
        g[n - 1] = s + s0 - c_v - (n - 2) as f64 * R_GAS;
        g
    };
    Ok(ChartFunction::new(chart, lo, hi, eval).with_gradient(grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn spec(n: usize, focal: &[usize]) -> FocalChartSpec {
        FocalChartSpec::new(n, focal.iter().copied()).unwrap()
    }

    #[test]
    fn all_intensive_chart_rejected() {
        assert!(FocalChartSpec::new(3, [1, 2, 3]).is_err());
        assert!(FocalChartSpec::new(3, [1, 3]).is_ok());
    }

    // ── Legendre transform ─────────────────────────────────────────────

    #[test]
    fn quadratic_legendre_closed_form() {
        // f(x₁) = x₁²/2 with a spectator second coordinate; transforming in
        // the first variable gives g(y₁) = stat_x [x₁²/2 - y₁x₁] = -y₁²/2
        // at the stationary point x₁ = y₁.
        let f = ChartFunction::new(spec(2, &[]), vec![-4.0, 0.5], vec![4.0, 2.0], |z| {
            0.5 * z[0] * z[0]
        });
        let g = legendre_transform(&f, &spec(2, &[1])).unwrap();
        for y in [-1.5, -0.3, 0.0, 0.9, 2.0] {
            assert_abs_diff_eq!(g.value(&[y, 1.0]), -0.5 * y * y, epsilon = 1e-9);
        }
    }

    #[test]
    fn ideal_gas_energy_leg_transform() {
        // s(ε) = c ln ε + s0 transforms to c ln(c/β) - c + s0 at ε = c/β;
        // the second coordinate is a spectator.
        let c = 1.5;
        let s0 = 0.7;
        let f = ChartFunction::new(spec(2, &[]), vec![0.05, 0.5], vec![20.0, 2.0], move |z| {
            c * z[0].ln() + s0
        })
        .with_gradient(move |z| vec![c / z[0], 0.0]);
        let g = legendre_transform(&f, &spec(2, &[1])).unwrap();
        for beta in [0.3, 1.0, 2.5] {
            let want = c * (c / beta).ln() - c + s0;
            assert_abs_diff_eq!(g.value(&[beta, 1.0]), want, epsilon = 1e-9);
        }
    }

    #[test]
    fn identity_transform_is_identity() {
        let f = ChartFunction::new(spec(2, &[]), vec![0.5, 0.5], vec![2.0, 2.0], |z| {
            z[0] * z[0] + 0.3 * z[0] * z[1] + z[1] * z[1]
        });
        let g = legendre_transform(&f, &spec(2, &[])).unwrap();
        assert_abs_diff_eq!(g.value(&[1.0, 1.3]), f.value(&[1.0, 1.3]));
    }

    #[test]
    fn involution_round_trip() {
        // L_{I,J} ∘ L_{J,I} = id on a strictly convex quadratic
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.5]);
        let f = ChartFunction::quadratic(
            spec(2, &[]),
            a,
            vec![0.1, -0.2],
            0.3,
            vec![-3.0, -3.0],
            vec![3.0, 3.0],
        );
        let j = spec(2, &[1]);
        let fj = legendre_transform(&f, &j).unwrap();
        let back = legendre_transform(&fj, &f.chart).unwrap();
        for pt in [[0.3, -0.4], [1.0, 1.0], [-1.2, 0.7]] {
            assert_abs_diff_eq!(back.value(&pt), f.value(&pt), epsilon = 1e-8);
        }
    }

    // ── cocycle ────────────────────────────────────────────────────────

    #[test]
    fn quadratic_cocycle_tight() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.8, 0.2, 0.1, 0.2, 1.4]);
        let f = ChartFunction::quadratic(
            spec(3, &[]),
            a,
            vec![0.0, 0.1, -0.1],
            0.0,
            vec![-2.0; 3],
            vec![2.0; 3],
        );
        let samples: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let t = i as f64 / 19.0 * 2.0 - 1.0;
                vec![t, 0.5 * t, -0.3 * t + 0.2]
            })
            .collect();
        let res = check_cocycle_l(&f, &spec(3, &[1]), &spec(3, &[1, 3]), &samples).unwrap();
        assert!(res <= 1e-9, "cocycle residual {res}");
    }

    #[test]
    fn degenerate_cycle_is_exact() {
        let f = ChartFunction::new(spec(2, &[]), vec![0.5, 0.5], vec![2.0, 2.0], |z| {
            z[0].powi(2) + z[1].powi(2)
        });
        let i = f.chart.clone();
        let res = check_cocycle_l(&f, &i, &i, &[vec![1.0, 1.0]]).unwrap();
        assert_eq!(res, 0.0);
    }

    // ── glue map ───────────────────────────────────────────────────────

    #[test]
    fn glue_identity() {
        let f = ideal_gas_manifold(1.5, 2).unwrap();
        let pt = vec![2.0, 3.0, 1.0];
        assert_eq!(glue_map(&f, &f.chart.clone(), &pt), pt);
    }

    #[test]
    fn ideal_gas_glue_beta_chart() {
        // (E,V,ν) → (β,V,ν) with β = c_v ν / E, then back via the
        // Legendre-transformed chart
        let cv = 1.5;
        let f = ideal_gas_manifold(cv, 2).unwrap();
        let to = spec(3, &[1]);
        let pt = vec![2.0, 3.0, 1.0];
        let mapped = glue_map(&f, &to, &pt);
        assert_relative_eq!(mapped[0], cv * 1.0 / 2.0, epsilon = 1e-12);
        assert_relative_eq!(mapped[1], 3.0);
        assert_relative_eq!(mapped[2], 1.0);

        let f1 = legendre_transform(&f, &to).unwrap();
        let back = glue_map(&f1, &f.chart, &mapped);
        for (a, b) in back.iter().zip(&pt) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    // ── τ map ──────────────────────────────────────────────────────────

    #[test]
    fn tau_zero_eta() {
        let xi = vec![0.5, 1.0, 2.0];
        let eta = vec![0.0, 0.0, 0.0];
        let (x, y) = tau_map(&xi, &eta);
        assert_eq!(y, vec![0.0, 0.0, 0.0]);
        assert_relative_eq!(x[2], 3.5);
    }

    #[test]
    fn tau_round_trip() {
        let xi = vec![0.3, -1.0, 2.5];
        let eta = vec![0.7, 0.1, -0.4];
        let (x, y) = tau_map(&xi, &eta);
        let (xi2, eta2) = tau_inverse(&x, &y);
        for (a, b) in xi.iter().zip(&xi2) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        for (a, b) in eta.iter().zip(&eta2) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn tau_is_symplectic() {
        // J_τᵀ Ω J_τ = Ω with Ω the canonical form on (x, y); the Jacobian
        // is taken by finite differences of the flattened map.
        let d = 2;
        let n = d + 1;
        let base: Vec<f64> = vec![0.4, -0.7, 1.3, 0.2, 0.9, -0.5];
        let map = |z: &[f64]| -> Vec<f64> {
            let (x, y) = tau_map(&z[..n], &z[n..]);
            x.into_iter().chain(y).collect()
        };
        let h = 1e-6;
        let mut jac = DMatrix::zeros(2 * n, 2 * n);
        for c in 0..2 * n {
            let mut zp = base.clone();
            let mut zm = base.clone();
            zp[c] += h;
            zm[c] -= h;
            let fp = map(&zp);
            let fm = map(&zm);
            for r in 0..2 * n {
                jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        let mut omega = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            omega[(i, n + i)] = -1.0; // dy ∧ dx orientation
            omega[(n + i, i)] = 1.0;
        }
        let pulled = jac.transpose() * &omega * &jac;
        assert!((pulled - omega).norm() < 1e-8);
    }

    // ── ideal gas chart ────────────────────────────────────────────────

    #[test]
    fn ideal_gas_homogeneous() {
        let f = ideal_gas_manifold(1.5, 2).unwrap();
        let samples: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let t = 0.5 + i as f64 / 19.0 * 4.0;
                vec![t, 1.0 + 0.5 * t, 0.3 + 0.1 * t]
            })
            .collect();
        assert!(f.check_homogeneity(2.0, &samples) <= 1e-12);
    }

    #[test]
    fn ideal_gas_gradient_matches_fd() {
        let f = ideal_gas_manifold(1.5, 2).unwrap();
        let pt = vec![2.0, 3.0, 1.0];
        let g = f.gradient(&pt);
        assert_relative_eq!(g[0], 1.5 / 2.0, epsilon = 1e-12);
        let h = 1e-6;
        for a in 0..3 {
            let mut pp = pt.clone();
            let mut pm = pt.clone();
            pp[a] += h;
            pm[a] -= h;
            let fd = (f.value(&pp) - f.value(&pm)) / (2.0 * h);
            assert_relative_eq!(g[a], fd, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn ideal_gas_maxwell_relation() {
        // mixed second partials of the entropy chart are symmetric
        let f = ideal_gas_manifold(1.5, 2).unwrap();
        let h = f.hessian(&[2.0, 3.0, 1.0]);
        assert_abs_diff_eq!(h[(0, 1)], h[(1, 0)], epsilon = 1e-8);
    }

    #[test]
    fn lagrangian_two_form_vanishes() {
        // mixed-partial symmetry of S means Σ dy ∧ dx pulls back to zero on
        // the chart; equivalently the Hessian is symmetric
        let f = ideal_gas_manifold(1.5, 2).unwrap();
        for pt in [[2.0, 3.0, 1.0], [1.0, 1.5, 0.5], [4.0, 2.0, 2.0]] {
            let h = f.hessian(&pt);
            let asym = (&h - &h.transpose()).norm();
            assert!(asym <= 1e-6, "antisymmetry residual {asym}");
        }
    }

    #[test]
    fn ideal_gas_rejects_nonpositive() {
        assert!(ideal_gas_manifold(-1.0, 2).is_err());
    }

    #[test]
    fn completed_point_satisfies_chart_equations() {
        let f = ideal_gas_manifold(1.5, 2).unwrap();
        let p = f.complete_point(&[2.0, 3.0, 1.0]);
        assert!(p.chart_residual(&f) <= 1e-8);
    }
}
