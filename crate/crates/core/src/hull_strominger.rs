//! The Hull–Strominger system with flat gauge bundle on balanced
//! almost-abelian structures:
//!
//! ```text
//! i∂∂̄ω = (α'/4) tr(Ω^τ ∧ Ω^τ),    d(‖Ψ‖_ω ω²) = 0.
//! ```
//!
//! The Hermitian–Yang–Mills block holds trivially for `F = 0` and is only
//! reported.

use serde::{Deserialize, Serialize};

use crate::algebra::{AlmostAbelianStructure, BalancedParams, HermitianMetric};
use crate::connections::{self, InstantonStatus};
use crate::exterior::{self, KForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnsolvableReason {
    ChernOrLichnerowicz,
    ZeroCurvatureTrace,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Classification {
    KahlerAnySlope,
    SolvableWithSlope(f64),
    Unsolvable(UnsolvableReason),
}

impl Classification {
    pub fn is_solution(&self) -> bool {
        !matches!(self, Classification::Unsolvable(_))
    }

    pub fn slope(&self) -> Option<f64> {
        match self {
            Classification::SolvableWithSlope(a) => Some(*a),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HSReport {
    pub tau: f64,
    pub kahler: bool,
    #[serde(rename = "K")]
    pub k: f64,
    pub anomaly_residual_norm: f64,
    pub conformally_balanced_residual_norm: f64,
    pub classification: Classification,
    pub instanton_status: InstantonStatus,
    /// Hermitian–Yang–Mills equations for the flat bundle, satisfied by `F = 0`.
    pub hym_satisfied: bool,
}

/// `i∂∂̄ω - (α'/4) tr(Ω^τ ∧ Ω^τ)`, both sides computed from the structure
/// constants.
pub fn anomaly_residual(p: &BalancedParams, tau: f64, alpha_prime: f64) -> KForm {
    let c = p.structure_constants();
    let ddc = c
        .del_delbar(&exterior::reference_fundamental_form())
        .expect("degree 2");
    let trace = connections::generic_trace(&c, tau);
    &ddc - &trace.scale(alpha_prime / 4.0)
}

/// `‖d(‖Ψ‖ ω²)‖` for the reference metric, where `‖Ψ‖` is constant.
pub fn conformally_balanced_residual(p: &BalancedParams) -> f64 {
    conformally_balanced_residual_structure(&p.structure())
}

pub fn conformally_balanced_residual_structure(s: &AlmostAbelianStructure) -> f64 {
    let psi = HermitianMetric::identity().psi_norm_sq(1.0).sqrt();
    psi * s.d_omega_sq_norm()
}

fn is_named(tau: f64) -> bool {
    tau.abs() <= 1e-12 || (tau - 1.0).abs() <= 1e-12
}

pub fn classify(p: &BalancedParams, tau: f64) -> HSReport {
    let kahler = p.kahler_check();
    let k = connections::proportionality_K(p, tau);
    let classification = if kahler {
        Classification::KahlerAnySlope
    } else if is_named(tau) {
        Classification::Unsolvable(UnsolvableReason::ChernOrLichnerowicz)
    } else if k == 0.0 || !(4.0 / k).is_finite() {
        Classification::Unsolvable(UnsolvableReason::ZeroCurvatureTrace)
    } else {
        Classification::SolvableWithSlope(4.0 / k)
    };
    let alpha_prime = classification.slope().unwrap_or(1.0);
    HSReport {
        tau,
        kahler,
        k,
        anomaly_residual_norm: anomaly_residual(p, tau, alpha_prime).max_abs(),
        conformally_balanced_residual_norm: conformally_balanced_residual(p),
        classification,
        instanton_status: connections::instanton_check(p, tau),
        hym_satisfied: true,
    }
}
