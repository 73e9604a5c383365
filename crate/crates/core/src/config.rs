//! Default tolerances and grid settings, overridable from the command line
//! and embedded in every report.

use serde::{Deserialize, Serialize};

use crate::frames::{DEFAULT_LAMBDA_SAMPLES, FRAME_TOL};
use crate::invariants::CONFORMAL_TOL;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Threshold on `√⟨W, W̄⟩` for the Willmore residual classifier.
    pub willmore: f64,
    /// Threshold on `‖2D_z̄L − μ̄L‖` for the L-lift classifier.
    pub l_equation: f64,
    /// Flatness passes below this multiple of the λ = ±1 noise floor.
    pub flatness_factor: f64,
    /// Gauss, Codazzi and Ricci residuals.
    pub structure: f64,
    /// `|θ|` for accepting μ as a Riccati solution.
    pub riccati: f64,
    pub conformal: f64,
    pub frame: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            willmore: 1e-6,
            l_equation: 1e-6,
            flatness_factor: 10.0,
            structure: 1e-8,
            riccati: 1e-8,
            conformal: CONFORMAL_TOL,
            frame: FRAME_TOL,
        }
    }
}

impl Tolerances {
    /// Replaces both classifier thresholds with `tol`.
    pub fn with_classifier_tol(mut self, tol: f64) -> Self {
        self.willmore = tol;
        self.l_equation = tol;
        self
    }
}

pub const DEFAULT_GRID: (usize, usize) = (64, 64);
pub const DEFAULT_LAMBDA: usize = DEFAULT_LAMBDA_SAMPLES;
pub const DEFAULT_ENERGY_GRID: usize = 64;
/// Box used for μ fields that are not periodic on a torus chart.
pub const DEFAULT_POLE_BOX: [f64; 4] = [0.2, 1.2, 0.2, 1.2];
