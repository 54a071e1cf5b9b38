//! Truncated Moyal star product `f ⋆ g = fg + Σ_s k_B^s B_s(f, g)`.
//!
//! The bidifferential operators follow the bracket convention
//! `{f, g} = Σ_s (∂f/∂J_s ∂g/∂X_s - ∂f/∂X_s ∂g/∂J_s)` (so `{X, J} = -1`),
//! with `B₁ = (i/2){f, g}` and `B₂ = -P²/8` the standard second term;
//! the Moyal bracket `(f⋆g - g⋆f)/(i k_B)` then reproduces the bracket at
//! leading order, matching the kinetic-generator kernel.

use num_complex::Complex64;

use crate::grid::RectGrid;
use crate::poly::Poly;

/// Star product truncated at `k_B^order`; `terms[s]` is the coefficient of
/// `k_B^s`.
#[derive(Debug, Clone)]
pub struct StarProduct {
    pub terms: Vec<Poly>,
}

impl StarProduct {
    /// Evaluate `Σ k_B^s B_s` at a phase-space point.
    pub fn eval(&self, x: &[f64], k_b: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pw = 1.0;
        for t in &self.terms {
            acc += t.eval(x) * pw;
            pw *= k_b;
        }
        acc
    }
}

/// Poisson bracket in the flows-first convention
/// `{f, g} = Σ_s (f_{J_s} g_{X_s} - f_{X_s} g_{J_s})`; variables are
/// ordered `X_1..X_d, J_1..J_d`.
pub fn poisson_bracket(f: &Poly, g: &Poly) -> Poly {
    let nv = f.nvars;
    assert_eq!(nv, g.nvars);
    assert!(nv % 2 == 0);
    let d = nv / 2;
    let mut acc = Poly::zero(nv);
    for s in 0..d {
        acc = acc.add(&f.diff(d + s).mul(&g.diff(s)));
        acc = acc.sub(&f.diff(s).mul(&g.diff(d + s)));
    }
    acc
}

/// Second-order bidifferential power
/// `P²(f,g) = Σ_{s,t} [f_{J_sJ_t} g_{X_sX_t} - 2 f_{J_sX_t} g_{X_sJ_t}
///  + f_{X_sX_t} g_{J_sJ_t}]`.
fn bracket_power2(f: &Poly, g: &Poly) -> Poly {
    let nv = f.nvars;
    let d = nv / 2;
    let mut acc = Poly::zero(nv);
    for s in 0..d {
        for t in 0..d {
            acc = acc.add(&f.diff(d + s).diff(d + t).mul(&g.diff(s).diff(t)));
            acc = acc.sub(&f.diff(d + s).diff(t).mul(&g.diff(s).diff(d + t)).scaled(2.0));
            acc = acc.add(&f.diff(s).diff(t).mul(&g.diff(d + s).diff(d + t)));
        }
    }
    acc
}

/// `f ⋆ g` truncated at `k_B^order`, `order ≤ 2`.
pub fn star_product(f: &Poly, g: &Poly, order: usize) -> StarProduct {
    assert!(order <= 2, "star product implemented to second order");
    let mut terms = vec![f.mul(g)];
    if order >= 1 {
        terms.push(poisson_bracket(f, g).scaled(Complex64::new(0.0, 0.5)));
    }
    if order >= 2 {
        terms.push(bracket_power2(f, g).scaled(-0.125));
    }
    StarProduct { terms }
}

/// Star product of truncated `k_B`-series: `c_n = Σ_{s+a+b=n} B_s(f_a, g_b)`.
pub fn star_series(f: &[Poly], g: &[Poly], order: usize) -> Vec<Poly> {
    assert!(!f.is_empty() && !g.is_empty());
    let nv = f[0].nvars;
    let mut out = vec![Poly::zero(nv); order + 1];
    for (a, fa) in f.iter().enumerate().take(order + 1) {
        for (b, gb) in g.iter().enumerate().take(order + 1 - a) {
            let budget = order - a - b;
            let prod = star_product(fa, gb, budget.min(2));
            for (s, term) in prod.terms.iter().enumerate() {
                if a + b + s <= order {
                    out[a + b + s] = out[a + b + s].add(term);
                }
            }
        }
    }
    out
}

/// Moyal bracket `(f⋆g - g⋆f)/(i k_B)` at leading order: the Poisson
/// bracket, exact on polynomials.
pub fn moyal_bracket(f: &Poly, g: &Poly) -> Poly {
    let fg = star_product(f, g, 1);
    let gf = star_product(g, f, 1);
    // k_B¹ coefficient of the commutator divided by i
    fg.terms[1]
        .sub(&gf.terms[1])
        .scaled(Complex64::new(0.0, -1.0))
}

/// Grid-function star product truncated at `k_B^order`, with derivatives by
/// central differences (one-sided at the boundary). High orders on coarse
/// grids amplify noise; keep `order ≤ 2` and smooth data.
pub fn star_product_grid(
    f: &[f64],
    g: &[f64],
    grid: &RectGrid,
    order: usize,
    k_b: f64,
) -> Vec<Complex64> {
    assert!(order <= 2);
    assert_eq!(f.len(), grid.len());
    assert_eq!(g.len(), grid.len());
    let nv = grid.dim();
    assert!(nv % 2 == 0);
    let d = nv / 2;
    let strides = grid.strides();
    let deriv = |vals: &[f64], axis: usize| -> Vec<f64> {
        let h = grid.step(axis);
        (0..vals.len())
            .map(|i| {
                let m = grid.unravel(i);
                let up = if m[axis] + 1 < grid.shape[axis] { vals[i + strides[axis]] } else { vals[i] };
                let dn = if m[axis] > 0 { vals[i - strides[axis]] } else { vals[i] };
                let span = if m[axis] + 1 < grid.shape[axis] && m[axis] > 0 { 2.0 } else { 1.0 };
                (up - dn) / (span * h)
            })
            .collect()
    };
    let mut out: Vec<Complex64> = f
        .iter()
        .zip(g)
        .map(|(a, b)| Complex64::new(a * b, 0.0))
        .collect();
    if order >= 1 {
        for s in 0..d {
            let fj = deriv(f, d + s);
            let fx = deriv(f, s);
            let gj = deriv(g, d + s);
            let gx = deriv(g, s);
            for i in 0..out.len() {
                let pb = fj[i] * gx[i] - fx[i] * gj[i];
                out[i] += Complex64::new(0.0, 0.5 * k_b) * pb;
            }
        }
    }
    if order >= 2 {
        for s in 0..d {
            for t in 0..d {
                let fjj = deriv(&deriv(f, d + s), d + t);
                let fxx = deriv(&deriv(f, s), t);
                let fjx = deriv(&deriv(f, d + s), t);
                let gxx = deriv(&deriv(g, s), t);
                let gjj = deriv(&deriv(g, d + s), d + t);
                let gxj = deriv(&deriv(g, s), d + t);
                for i in 0..out.len() {
                    let p2 = fjj[i] * gxx[i] - 2.0 * fjx[i] * gxj[i] + fxx[i] * gjj[i];
                    out[i] += Complex64::new(-0.125 * k_b * k_b * p2, 0.0);
                }
            }
        }
    }
    out
}
