//! Small multivariate polynomials with complex coefficients.
//!
//! Used for exact Moyal star-product arithmetic and for the interaction
//! polynomials of the kinetic generator. Monomials are exponent vectors in
//! a fixed number of variables; coefficients are `Complex64` so star
//! products can carry their phases exactly.

use std::collections::BTreeMap;

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub nvars: usize,
    terms: BTreeMap<Vec<u8>, Complex64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: impl Into<Complex64>) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(&vec![0; nvars], c.into());
        p
    }

    /// The monomial `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut exps = vec![0u8; nvars];
        exps[i] = 1;
        let mut p = Poly::zero(nvars);
        p.add_term(&exps, Complex64::new(1.0, 0.0));
        p
    }

    pub fn add_term(&mut self, exps: &[u8], c: Complex64) {
        assert_eq!(exps.len(), self.nvars);
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry(exps.to_vec()).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() == 0.0 {
            self.terms.remove(exps);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &Complex64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest exponent of variable `i` over all monomials.
    pub fn degree_in(&self, i: usize) -> usize {
        self.terms.keys().map(|e| e[i] as usize).max().unwrap_or(0)
    }

    pub fn scaled(&self, s: impl Into<Complex64>) -> Poly {
        let s = s.into();
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e, c * s);
        }
        out
    }

    pub fn add(&self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e, *c);
        }
        out
    }

    pub fn sub(&self, rhs: &Poly) -> Poly {
        self.add(&rhs.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let exps: Vec<u8> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(&exps, ca * cb);
            }
        }
        out
    }

    /// Partial derivative with respect to variable `i`.
    pub fn diff(&self, i: usize) -> Poly {
        assert!(i < self.nvars);
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut exps = e.clone();
            exps[i] -= 1;
            out.add_term(&exps, c * Complex64::new(e[i] as f64, 0.0));
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        assert_eq!(x.len(), self.nvars);
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut mono = 1.0;
            for (xi, &p) in x.iter().zip(e) {
                mono *= xi.powi(p as i32);
            }
            acc += c * mono;
        }
        acc
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}
