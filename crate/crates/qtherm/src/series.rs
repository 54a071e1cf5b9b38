//! Truncated formal power series in the quasithermodynamic small parameter.
//!
//! A series is stored through its Taylor coefficients `c_0..c_K` with the
//! factorials kept explicit: `a(ξ) = Σ_m c_m ξ^m / m!`. The exp/log
//! coefficient maps below are literal transcriptions of the multinomial
//! sums over integer compositions; with the factorial convention the
//! multinomial weights `m!/(m_1!…m_p!)` appear verbatim.

use std::ops::{Add, Mul};
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::grid::RectGrid;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    /// `log_coeffs` needs a strictly positive leading coefficient.
    #[error("leading coefficient must be positive, got {0}")]
    NonPositiveLeadingCoefficient(f64),
    #[error("incompatible truncation orders: {0} vs {1}")]
    OrderMismatch(usize, usize),
}

/// Finite list of Taylor coefficients of an asymptotic series, truncation
/// order `K = coeffs.len() - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant term");
        assert!(coeffs.iter().all(|c| c.is_finite()), "coefficients must be finite");
        TruncatedSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        TruncatedSeries::new(vec![0.0; order + 1])
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, m: usize) -> f64 {
        self.coeffs[m]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Evaluate `Σ c_m ξ^m / m!` at `xi`.
    pub fn eval(&self, xi: f64) -> f64 {
        let mut acc = 0.0;
        let mut term = 1.0; // ξ^m / m!
        for (m, &c) in self.coeffs.iter().enumerate() {
            if m > 0 {
                term *= xi / m as f64;
            }
            acc += c * term;
        }
        acc
    }

    /// Truncate (or keep) to order `k`.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.order());
        TruncatedSeries::new(self.coeffs[..=k].to_vec())
    }

    pub fn scale(&self, s: f64) -> Self {
        TruncatedSeries::new(self.coeffs.iter().map(|c| c * s).collect())
    }
}

/// Binary ops truncate to the smaller operand order rather than extending.
impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let k = self.order().min(rhs.order());
        TruncatedSeries::new((0..=k).map(|m| self.coeffs[m] + rhs.coeffs[m]).collect())
    }
}

/// Cauchy/Leibniz product in the factorial convention:
/// `c_n = Σ_k C(n,k) a_k b_{n-k}`.
impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let k = self.order().min(rhs.order());
        let mut out = vec![0.0; k + 1];
        for n in 0..=k {
            let mut acc = 0.0;
            for j in 0..=n {
                acc += binomial(n, j) * self.coeffs[j] * rhs.coeffs[n - j];
            }
            out[n] = acc;
        }
        TruncatedSeries::new(out)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Ordered compositions of `m` into parts ≥ 1, memoized for the small orders
/// the transfer machinery actually uses.
fn compositions(m: usize) -> &'static [Vec<usize>] {
    const MEMO_MAX: usize = 12;
    static TABLE: OnceLock<Vec<Vec<Vec<usize>>>> = OnceLock::new();
    assert!(
        m <= MEMO_MAX,
        "composition order {m} exceeds supported truncation {MEMO_MAX}"
    );
    let table = TABLE.get_or_init(|| {
        let mut table: Vec<Vec<Vec<usize>>> = vec![vec![vec![]]];
        for m in 1..=MEMO_MAX {
            let mut comps = Vec::new();
            for first in 1..=m {
                for rest in &table[m - first] {
                    let mut c = Vec::with_capacity(rest.len() + 1);
                    c.push(first);
                    c.extend_from_slice(rest);
                    comps.push(c);
                }
            }
            table.push(comps);
        }
        table
    });
    &table[m]
}

/// Coefficients of `a(ξ) = exp(b(ξ))` from the coefficients of `b`.
///
/// `a_0 = exp(b_0)` and for `m ≥ 1`
/// `a_m = e^{b_0} Σ_{p=1}^{m} (1/p!) Σ_{m_1+…+m_p=m, m_i≥1}
///        m!/(m_1!…m_p!) · b_{m_1}…b_{m_p}`.
pub fn exp_coeffs(b: &TruncatedSeries) -> TruncatedSeries {
    let k = b.order();
    let lead = b.coeff(0).exp();
    let mut out = vec![0.0; k + 1];
    out[0] = lead;
    for m in 1..=k {
        let mut sum = 0.0;
        for comp in compositions(m) {
            let p = comp.len();
            let mut w = factorial(m) / factorial(p);
            for &part in comp {
                w /= factorial(part);
                w *= b.coeff(part);
            }
            sum += w;
        }
        out[m] = lead * sum;
    }
    TruncatedSeries::new(out)
}

/// Coefficients of `b(ξ) = ln a(ξ)` from the coefficients of `a`; requires
/// `a_0 > 0`.
///
/// `b_0 = ln a_0` and for `m ≥ 1`
/// `b_m = Σ_{q=1}^{m} ((-1)^{q+1}/(q a_0^q)) Σ_{m_1+…+m_q=m, m_i≥1}
///        m!/(m_1!…m_q!) · a_{m_1}…a_{m_q}`,
/// the alternating signs of `ln(1+u) = Σ (-1)^{q+1} u^q / q`.
pub fn log_coeffs(a: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
    let a0 = a.coeff(0);
    if a0 <= 0.0 {
        return Err(SeriesError::NonPositiveLeadingCoefficient(a0));
    }
    let k = a.order();
    let mut out = vec![0.0; k + 1];
    out[0] = a0.ln();
    for m in 1..=k {
        let mut sum = 0.0;
        for comp in compositions(m) {
            let q = comp.len();
            let sign = if q % 2 == 1 { 1.0 } else { -1.0 };
            let mut w = sign / (q as f64 * a0.powi(q as i32)) * factorial(m);
            for &part in comp {
                w /= factorial(part);
                w *= a.coeff(part);
            }
            sum += w;
        }
        out[m] = sum;
    }
    Ok(TruncatedSeries::new(out))
}

/// A truncated series attached to every node of a rectangular grid; all
/// nodes share the same truncation order.
#[derive(Debug, Clone)]
pub struct SeriesField {
    pub grid: RectGrid,
    nodes: Vec<TruncatedSeries>,
}

impl SeriesField {
    pub fn new(grid: RectGrid, nodes: Vec<TruncatedSeries>) -> Self {
        assert_eq!(grid.len(), nodes.len(), "one series per grid node");
        if let Some(first) = nodes.first() {
            assert!(
                nodes.iter().all(|s| s.order() == first.order()),
                "all nodes must share the truncation order"
            );
        }
        SeriesField { grid, nodes }
    }

    /// Sample per-order coefficient functions over the grid.
    pub fn from_fns(grid: RectGrid, fns: &[&dyn Fn(&[f64]) -> f64]) -> Self {
        assert!(!fns.is_empty());
        let nodes = (0..grid.len())
            .map(|i| {
                let pt = grid.point(i);
                TruncatedSeries::new(fns.iter().map(|f| f(&pt)).collect())
            })
            .collect();
        SeriesField::new(grid, nodes)
    }

    pub fn order(&self) -> usize {
        self.nodes[0].order()
    }

    pub fn node(&self, idx: usize) -> &TruncatedSeries {
        &self.nodes[idx]
    }

    pub fn nodes(&self) -> &[TruncatedSeries] {
        &self.nodes
    }
}
