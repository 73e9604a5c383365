//! Numerical laboratory for Möbius-invariant surface geometry in the n-sphere.
//!
//! Surfaces are given as closed-form conformal immersions into `S^n` and are
//! evaluated as truncated Taylor jets, so every derivative that enters the
//! invariants is exact up to floating-point rounding. On top of the canonical
//! lift the crate computes the Schwarzian, the Hopf differential, the conformal
//! Gauss map and the Willmore residual, builds Lorentzian 2-plane lifts from
//! solutions of the Riccati equation, assembles the adapted frame with its
//! Maurer–Cartan form and checks flatness of the loop-parameter family
//! `d + α^λ`.

pub mod config;
pub mod error;
pub mod frames;
pub mod invariants;
pub mod jets;
pub mod lifts;
pub mod minkowski;
pub mod report;
pub mod surfaces;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
