//! Numerical thresholds shared across modules.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub log_gamma_rel: f64,
    pub digamma_rel: f64,
    pub unit_modulus: f64,
    pub mellin_hankel: f64,
    /// Bisection width is `sturm_rel * max(1, |E|)`.
    pub sturm_rel: f64,
    pub bs_root: f64,
    pub quadrature_rel: f64,
    pub turning_point_residual: f64,
    pub fit_warn_rms: f64,
    pub chart_residual: f64,
    pub transition_rounding: f64,
    pub chart_condition: f64,
    pub critical_clearance: f64,
    pub mc_max_rel_stderr: f64,
}

pub const DEFAULT: Tolerances = Tolerances {
    log_gamma_rel: 1e-12,
    digamma_rel: 1e-10,
    unit_modulus: 1e-12,
    mellin_hankel: 1e-10,
    sturm_rel: 1e-12,
    bs_root: 1e-12,
    quadrature_rel: 1e-9,
    turning_point_residual: 1e-10,
    fit_warn_rms: 0.05,
    chart_residual: 0.05,
    transition_rounding: 0.1,
    chart_condition: 1e3,
    critical_clearance: 1e-4,
    mc_max_rel_stderr: 0.05,
};

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT
    }
}
