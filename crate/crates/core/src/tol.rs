//! Default numerical tolerances.
//!
//! Every routine that compares against one of these also accepts an
//! override through its `_with` variant or a `Tolerances` argument.

/// Slack applied to strict inequalities (Schur test, lens membership,
/// the two-sided (ω, η) solvability chain, ρ-balance).
pub const INEQUALITY: f64 = 1e-9;

/// Residual of the variety equation along a constructed disc.
pub const RESIDUAL: f64 = 1e-10;

/// Deviation of a unimodular constant from the unit circle.
pub const UNIMODULAR: f64 = 1e-12;

/// Unit-circle modulus check for Blaschke validation by sampling.
pub const BLASCHKE_SAMPLING: f64 = 1e-9;

/// Denominators below this are treated as poles.
pub const POLE_FLOOR: f64 = 1e-13;

/// Target residual for inverting the slice map ψ_x.
pub const INVERSION: f64 = 1e-9;

/// Runtime-configurable tolerance bundle used by the higher-level routines.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub inequality: f64,
    pub residual: f64,
    pub unimodular: f64,
    pub inversion: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            inequality: INEQUALITY,
            residual: RESIDUAL,
            unimodular: UNIMODULAR,
            inversion: INVERSION,
        }
    }
}
