//! Numerical toolkit for quasithermodynamic fluctuations.
//!
//! The crate treats a phenomenological thermodynamic system as a Lagrangian
//! manifold in the extensive/intensive phase space and provides the machinery
//! that lives on top of that picture:
//!
//! * [`series`] — truncated formal power series in the inverse rescaling
//!   parameter, with the exp/log coefficient maps linking partition-function
//!   and entropy level expansions.
//! * [`manifold`] — focal charts, generating functions, numerical Legendre
//!   transforms, glue maps and cocycle checks.
//! * [`asymptotics`] — stationary-phase transfer of fluctuation series
//!   between charts, with an oscillatory-integral oracle.
//! * [`cumulants`] — cumulants of fluctuations from chart functions and from
//!   gridded densities, with rescaling-parameter scaling laws.
//! * [`evolution`] — Onsager relaxation, statistical-weight constructions and
//!   conservative finite-volume solvers for the generalized Fokker-Planck
//!   equation in state space and in phase space.
//! * [`wigner`] — WKB wave packets, Wigner quasiprobability transforms,
//!   phase-space Bell (CHSH) scans, Weyl quantization, the H-functional and
//!   the truncated Moyal star product.
//! * [`thermofock`] — truncated bosonic Fock space over phase-space cells and
//!   the kinetic generator built from Moyal-commutator kernels.

pub mod asymptotics;
pub mod cumulants;
pub mod evolution;
pub mod grid;
pub mod manifold;
pub mod poly;
pub mod series;
pub mod thermofock;
pub mod wigner;

pub use grid::RectGrid;
pub use series::TruncatedSeries;
