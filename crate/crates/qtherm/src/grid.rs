//! Uniform rectangular grids shared by the field-valued modules.
//!
//! Grids are cell-centered: axis `a` with `shape[a]` cells over
//! `[lo[a], hi[a]]` has nodes at `lo + (i + 1/2) h`. Cell-centered layouts
//! pair with the midpoint quadrature rule and with conservative
//! finite-volume fluxes through cell faces.

use serde::Serialize;

/// Uniform cell-centered rectangular grid in `dim()` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub shape: Vec<usize>,
}

impl RectGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert_eq!(lo.len(), shape.len());
        assert!(
            lo.iter().zip(&hi).all(|(a, b)| a < b),
            "grid box must have positive extent"
        );
        assert!(shape.iter().all(|&n| n > 0), "grid needs at least one cell");
        RectGrid { lo, hi, shape }
    }

    /// 1D convenience constructor.
    pub fn line(lo: f64, hi: f64, n: usize) -> Self {
        RectGrid::new(vec![lo], vec![hi], vec![n])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell width along axis `a`.
    pub fn step(&self, a: usize) -> f64 {
        (self.hi[a] - self.lo[a]) / self.shape[a] as f64
    }

    /// Volume of a single cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.step(a)).product()
    }

    /// Row-major strides: the last axis varies fastest.
    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    /// Center coordinate of cell `i` along axis `a`.
    pub fn coord(&self, a: usize, i: usize) -> f64 {
        self.lo[a] + (i as f64 + 0.5) * self.step(a)
    }

    /// Multi-index of flat index `idx`.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize; self.dim()];
        for a in 0..self.dim() {
            out[a] = idx / strides[a];
            idx %= strides[a];
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        let strides = self.strides();
        multi.iter().zip(&strides).map(|(i, s)| i * s).sum()
    }

    /// Center coordinates of the cell with flat index `idx`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.unravel(idx)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.coord(a, i))
            .collect()
    }

    /// Iterate over all cell centers in flat order.
    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Midpoint-rule integral of sampled values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().sum::<f64>() * self.cell_volume()
    }

    /// Sample a function at every cell center.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.point(i))).collect()
    }
}
