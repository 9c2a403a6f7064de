//! The reduced Anomaly flow in both pictures: the bracket flow on the
//! matrix `A` with the metric fixed, and the metric flow on `ν` with the
//! bracket fixed.

pub mod ode;

use nalgebra::{Matrix4, Matrix6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{
    self, j_n1, j_vectors, matrix_parts, AlgebraError, AlmostAbelianStructure, BalancedParams,
    HermitianMetric,
};
use crate::connections::{generic_proportionality, tau_factor};
use crate::exterior::{self, ExteriorError, KForm, StructureConstants, DIM};

use ode::{Control, OdeError, OdeOptions};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

/// Output sample times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    /// `t_k = (1 + t_end)^{k/(n-1)} - 1`.
    Geometric { count: usize },
    Linear { count: usize },
    Explicit { times: Vec<f64> },
}

impl Sampling {
    pub fn times(&self, t_end: f64) -> Vec<f64> {
        let mut out = match self {
            Sampling::Geometric { count } | Sampling::Linear { count } if *count < 2 => {
                vec![t_end]
            }
            Sampling::Geometric { count } => {
                let n = *count as f64 - 1.0;
                (0..*count)
                    .map(|k| (1.0 + t_end).powf(k as f64 / n) - 1.0)
                    .collect()
            }
            Sampling::Linear { count } => {
                let n = *count as f64 - 1.0;
                (0..*count).map(|k| t_end * k as f64 / n).collect()
            }
            Sampling::Explicit { times } => times
                .iter()
                .copied()
                .filter(|t| (0.0..=t_end).contains(t))
                .collect(),
        };
        if let Some(last) = out.last_mut() {
            if !matches!(self, Sampling::Explicit { .. }) {
                *last = t_end;
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub tau: f64,
    pub alpha_prime: f64,
    /// `‖Ψ‖⁻²` of the fixed metric in the bracket picture.
    pub psi_norm_sq_inv: f64,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    pub initial_step: Option<f64>,
    /// Threshold on `‖A^+‖`.
    pub convergence_eps: f64,
    /// Consecutive accepted steps below the threshold before stopping.
    pub convergence_window: usize,
    /// Blow-up threshold on `‖A‖`.
    pub norm_ceiling: f64,
    pub max_steps: usize,
    pub sampling: Sampling,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            tau: -1.0,
            alpha_prime: 0.0,
            psi_norm_sq_inv: 1.0,
            t_end: 100.0,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: None,
            initial_step: None,
            convergence_eps: 1e-8,
            convergence_window: 3,
            norm_ceiling: 1e12,
            max_steps: 1_000_000,
            sampling: Sampling::Geometric { count: 200 },
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: &str| Err(FlowError::InvalidConfig(m.to_string()));
        for (name, v) in [
            ("tau", self.tau),
            ("alpha_prime", self.alpha_prime),
            ("psi_norm_sq_inv", self.psi_norm_sq_inv),
            ("t_end", self.t_end),
        ] {
            if !v.is_finite() {
                return bad(&format!("{name} must be finite"));
            }
        }
        if self.t_end < 0.0 {
            return bad("t_end must be >= 0");
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.psi_norm_sq_inv <= 0.0 {
            return bad("psi_norm_sq_inv must be positive");
        }
        if matches!(self.max_step, Some(h) if !(h > 0.0)) {
            return bad("max_step must be positive");
        }
        if matches!(self.initial_step, Some(h) if !(h > 0.0)) {
            return bad("initial_step must be positive");
        }
        if !(self.convergence_eps >= 0.0) {
            return bad("convergence_eps must be >= 0");
        }
        if !(self.norm_ceiling > 0.0) {
            return bad("norm_ceiling must be positive");
        }
        if self.convergence_window == 0 || self.max_steps == 0 {
            return bad("convergence_window and max_steps must be positive");
        }
        if let Sampling::Explicit { times } = &self.sampling {
            if times.iter().any(|t| !t.is_finite()) {
                return bad("sample times must be finite");
            }
        }
        Ok(())
    }

    fn ode_options(&self) -> OdeOptions {
        OdeOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            initial_step: self.initial_step.unwrap_or(0.0),
            max_step: self.max_step.unwrap_or(f64::INFINITY),
            max_steps: self.max_steps,
        }
    }

    /// `(α'/4) τ(τ-1)²/8 ‖Ψ‖⁻²`, so that `f = 1 - slope_coefficient · ‖A^+‖²`.
    pub fn slope_coefficient(&self) -> f64 {
        self.alpha_prime / 4.0 * tau_factor(self.tau) * self.psi_norm_sq_inv
    }
}

/// `f(A) = 1 - (α'/4) K(ω, τ) ‖Ψ‖⁻²`.
pub fn slope_f(p: &BalancedParams, cfg: &FlowConfig) -> f64 {
    slope_f_matrix(&p.matrix(), cfg)
}

pub fn slope_f_matrix(a: &Matrix4<f64>, cfg: &FlowConfig) -> f64 {
    if cfg.alpha_prime == 0.0 {
        return 1.0;
    }
    let plus = matrix_parts(a).norm_plus_sq;
    1.0 - cfg.slope_coefficient() * plus
}

/// `‖Ψ‖⁻² f(A) (2[[A^+, A^-], A] - ‖A^+‖² A)`.
pub fn bracket_rhs_matrix(a: &Matrix4<f64>, cfg: &FlowConfig) -> Matrix4<f64> {
    let parts = matrix_parts(a);
    let f = slope_f_matrix(a, cfg);
    let c = parts.commutator;
    (2.0 * (c * a - a * c) - parts.norm_plus_sq * a) * (cfg.psi_norm_sq_inv * f)
}

pub fn bracket_rhs(p: &BalancedParams, cfg: &FlowConfig) -> BalancedParams {
    BalancedParams::from_matrix(&bracket_rhs_matrix(&p.matrix(), cfg))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monitors {
    #[serde(rename = "norm_A_sq")]
    pub norm_a_sq: f64,
    #[serde(rename = "norm_Aplus_sq")]
    pub norm_aplus_sq: f64,
    pub norm_comm_sq: f64,
    pub f_value: f64,
    #[serde(rename = "tr_A")]
    pub tr_a: f64,
    #[serde(rename = "tr_JA")]
    pub tr_ja: f64,
    pub decay_bound_rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub params: BalancedParams,
    pub monitors: Monitors,
    /// The full integrated matrix, including any drift off the balanced
    /// pattern.
    #[serde(skip)]
    pub matrix: Matrix4<f64>,
}

impl TrajectoryPoint {
    fn new(t: f64, a: Matrix4<f64>, cfg: &FlowConfig, aplus0_sq: f64) -> Self {
        let parts = matrix_parts(&a);
        Self {
            t,
            params: BalancedParams::from_matrix(&a),
            monitors: Monitors {
                norm_a_sq: parts.norm_sq,
                norm_aplus_sq: parts.norm_plus_sq,
                norm_comm_sq: parts.norm_comm_sq,
                f_value: slope_f_matrix(&a, cfg),
                tr_a: a.trace(),
                tr_ja: (j_n1() * a).trace(),
                decay_bound_rhs: aplus0_sq / (1.0 + 0.5 * aplus0_sq * t),
            },
            matrix: a,
        }
    }

    /// `‖dΨ‖` of the bracket at this point.
    pub fn d_psi_norm(&self) -> f64 {
        AlmostAbelianStructure::new_unchecked(0.0, [0.0; 4], self.matrix).d_psi_norm()
    }
}

pub const CSV_HEADER: &str = "t,A22,A23,A24,A25,A32,A35,norm_A_sq,norm_Aplus_sq,norm_comm_sq,f_value,tr_A,tr_JA,decay_bound_rhs";

/// CSV with a header row and 17 significant digits per value.
pub fn trajectory_csv(points: &[TrajectoryPoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        let m = &p.monitors;
        let mut vals = vec![p.t];
        vals.extend(p.params.to_array());
        vals.extend([
            m.norm_a_sq,
            m.norm_aplus_sq,
            m.norm_comm_sq,
            m.f_value,
            m.tr_a,
            m.tr_ja,
            m.decay_bound_rhs,
        ]);
        let row: Vec<String> = vals.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    ReachedEnd,
    Converged,
    StepUnderflow,
    MaxSteps,
    NonFinite,
    BlowUp,
    /// `f` reached zero from a positive start.
    SlopeSignViolation,
}

impl FlowStatus {
    pub fn is_success(self) -> bool {
        matches!(self, FlowStatus::ReachedEnd | FlowStatus::Converged)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureRecord {
    pub t: f64,
    pub params: BalancedParams,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowRun {
    pub status: FlowStatus,
    /// `f(A_0) <= 0`.
    pub outside_hypotheses: bool,
    pub initial_f: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// One point per accepted step, starting with `t = 0`.
    pub steps: Vec<TrajectoryPoint>,
    /// Points at the requested sample times.
    pub samples: Vec<TrajectoryPoint>,
    pub failure: Option<FailureRecord>,
}

impl FlowRun {
    pub fn last(&self) -> &TrajectoryPoint {
        self.steps.last().expect("the initial point is always recorded")
    }
}

fn to_matrix(y: &[f64]) -> Matrix4<f64> {
    Matrix4::from_row_slice(y)
}

fn to_state(a: &Matrix4<f64>) -> Vec<f64> {
    a.transpose().iter().copied().collect()
}

pub fn integrate_bracket_flow(p0: &BalancedParams, cfg: &FlowConfig) -> Result<FlowRun, FlowError> {
    integrate_bracket_flow_matrix(&p0.matrix(), cfg)
}

/// Bracket flow from an arbitrary initial matrix.
pub fn integrate_bracket_flow_matrix(
    a0: &Matrix4<f64>,
    cfg: &FlowConfig,
) -> Result<FlowRun, FlowError> {
    cfg.validate()?;
    if a0.iter().any(|x| !x.is_finite()) {
        return Err(FlowError::InvalidConfig("initial matrix is not finite".into()));
    }
    let aplus0_sq = matrix_parts(a0).norm_plus_sq;
    let initial_f = slope_f_matrix(a0, cfg);
    let first = TrajectoryPoint::new(0.0, *a0, cfg, aplus0_sq);
    let times = cfg.sampling.times(cfg.t_end);
    let mut run = FlowRun {
        status: FlowStatus::ReachedEnd,
        outside_hypotheses: initial_f <= 0.0,
        initial_f,
        accepted_steps: 0,
        rejected_steps: 0,
        steps: vec![first.clone()],
        samples: Vec::new(),
        failure: None,
    };
    let mut next = 0;
    while next < times.len() && times[next] <= 0.0 {
        run.samples.push(first.clone());
        next += 1;
    }
    if aplus0_sq.sqrt() < cfg.convergence_eps {
        run.status = FlowStatus::Converged;
        if run.samples.is_empty() {
            run.samples.push(first);
        }
        return Ok(run);
    }
    if cfg.t_end == 0.0 {
        return Ok(run);
    }

    let mut below = 0usize;
    let mut status = FlowStatus::ReachedEnd;
    let mut steps = std::mem::take(&mut run.steps);
    let mut samples = std::mem::take(&mut run.samples);
    let result = ode::integrate(
        |_, y, dy| {
            let rhs = bracket_rhs_matrix(&to_matrix(y), cfg);
            dy.copy_from_slice(&to_state(&rhs));
        },
        0.0,
        &to_state(a0),
        cfg.t_end,
        &cfg.ode_options(),
        |t, y, dense| {
            while next < times.len() && times[next] <= t {
                let s = times[next];
                let a = if s == t {
                    to_matrix(y)
                } else {
                    to_matrix(&dense.eval(s))
                };
                samples.push(TrajectoryPoint::new(s, a, cfg, aplus0_sq));
                next += 1;
            }
            let point = TrajectoryPoint::new(t, to_matrix(y), cfg, aplus0_sq);
            let norm_a = point.monitors.norm_a_sq.sqrt();
            let aplus = point.monitors.norm_aplus_sq.sqrt();
            let f = point.monitors.f_value;
            steps.push(point.clone());
            if !(norm_a <= cfg.norm_ceiling) {
                status = FlowStatus::BlowUp;
                return Control::Stop;
            }
            if initial_f > 0.0 && f <= 0.0 {
                status = FlowStatus::SlopeSignViolation;
                return Control::Stop;
            }
            if aplus < cfg.convergence_eps {
                below += 1;
                if below >= cfg.convergence_window {
                    status = FlowStatus::Converged;
                    if samples.last().map_or(true, |p| p.t < t) {
                        samples.push(point);
                    }
                    return Control::Stop;
                }
            } else {
                below = 0;
            }
            Control::Continue
        },
    );
    run.steps = steps;
    run.samples = samples;
    match result {
        Ok(stats) => {
            run.accepted_steps = stats.accepted;
            run.rejected_steps = stats.rejected;
            run.status = status;
            if !status.is_success() {
                let last = run.last();
                run.failure = Some(FailureRecord {
                    t: last.t,
                    params: last.params,
                    message: format!("{status:?}"),
                });
            }
        }
        Err(e) => {
            let (t, y, status) = match &e {
                OdeError::StepUnderflow { t, y, .. } => (*t, y.clone(), FlowStatus::StepUnderflow),
                OdeError::MaxSteps { t, y, .. } => (*t, y.clone(), FlowStatus::MaxSteps),
                OdeError::NonFinite { t, y } => (*t, y.clone(), FlowStatus::NonFinite),
            };
            run.accepted_steps = run.steps.len() - 1;
            run.status = status;
            run.failure = Some(FailureRecord {
                t,
                params: BalancedParams::from_matrix(&to_matrix(&y)),
                message: e.to_string(),
            });
        }
    }
    Ok(run)
}

/// Finite-difference check of the monitored scalar evolutions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorReport {
    pub points_checked: usize,
    /// `d‖A‖²/dt = 2‖Ψ‖⁻² f (-4‖[A^+,A^-]‖² - ‖A^+‖²‖A‖²)`.
    pub norm_identity_max_rel_err: f64,
    /// `d‖A^+‖²/dt = ‖Ψ‖⁻² f (-4‖[A^+,A^-]‖² - 2‖A^+‖⁴)`.
    pub aplus_identity_max_rel_err: f64,
    /// `df/dt = c ‖Ψ‖⁻² f (4‖[A^+,A^-]‖² + 2‖A^+‖⁴)` with
    /// `c = (α'/4) τ(τ-1)²/8 ‖Ψ‖⁻²`.
    pub f_identity_max_rel_err: f64,
    /// The same with coefficient `½` on `‖A^+‖⁴`.
    pub f_identity_half_max_rel_err: f64,
}

/// Relative errors are taken against `max(|rhs|, floor)` with
/// `floor = 1e-8`.
pub fn monitor_identities(traj: &[TrajectoryPoint], cfg: &FlowConfig) -> MonitorReport {
    const FLOOR: f64 = 1e-8;
    let n = traj.len();
    let mut report = MonitorReport {
        points_checked: 0,
        norm_identity_max_rel_err: 0.0,
        aplus_identity_max_rel_err: 0.0,
        f_identity_max_rel_err: 0.0,
        f_identity_half_max_rel_err: 0.0,
    };
    if n < 5 {
        return report;
    }
    let psi = cfg.psi_norm_sq_inv;
    let c = cfg.slope_coefficient();
    let rel = |fd: f64, rhs: f64| (fd - rhs).abs() / rhs.abs().max(FLOOR);
    for i in 2..n - 2 {
        let h = (traj[i + 2].t - traj[i - 2].t) / 4.0;
        let fd = |get: &dyn Fn(&Monitors) -> f64| {
            (get(&traj[i - 2].monitors) - 8.0 * get(&traj[i - 1].monitors)
                + 8.0 * get(&traj[i + 1].monitors)
                - get(&traj[i + 2].monitors))
                / (12.0 * h)
        };
        let m = &traj[i].monitors;
        let (comm, plus, norm, f) = (m.norm_comm_sq, m.norm_aplus_sq, m.norm_a_sq, m.f_value);
        let r_norm = 2.0 * psi * f * (-4.0 * comm - plus * norm);
        let r_plus = psi * f * (-4.0 * comm - 2.0 * plus * plus);
        let r_f = c * psi * f * (4.0 * comm + 2.0 * plus * plus);
        let r_f_half = c * psi * f * (4.0 * comm + 0.5 * plus * plus);
        let d_norm = fd(&|m| m.norm_a_sq);
        let d_plus = fd(&|m| m.norm_aplus_sq);
        let d_f = fd(&|m| m.f_value);
        report.norm_identity_max_rel_err = report.norm_identity_max_rel_err.max(rel(d_norm, r_norm));
        report.aplus_identity_max_rel_err = report.aplus_identity_max_rel_err.max(rel(d_plus, r_plus));
        report.f_identity_max_rel_err = report.f_identity_max_rel_err.max(rel(d_f, r_f));
        report.f_identity_half_max_rel_err =
            report.f_identity_half_max_rel_err.max(rel(d_f, r_f_half));
        report.points_checked += 1;
    }
    report
}

/// `P_μ`, block-diagonal over `ℝe_1 ⊕ n_1 ⊕ ℝe_6`.
#[derive(Clone, Debug, PartialEq)]
pub struct PMuEndomorphism {
    pub p: Matrix6<f64>,
}

pub fn p_mu(p: &BalancedParams, cfg: &FlowConfig) -> PMuEndomorphism {
    p_mu_matrix(&p.matrix(), cfg)
}

pub fn p_mu_matrix(a: &Matrix4<f64>, cfg: &FlowConfig) -> PMuEndomorphism {
    let parts = matrix_parts(a);
    let s = cfg.psi_norm_sq_inv * slope_f_matrix(a, cfg);
    let mut p = Matrix6::zeros();
    p[(0, 0)] = parts.norm_plus_sq;
    p[(5, 5)] = parts.norm_plus_sq;
    p.fixed_view_mut::<4, 4>(1, 1)
        .copy_from(&(2.0 * parts.commutator));
    PMuEndomorphism { p: p * s }
}

/// `π(E)μ(x, y) = Eμ(x, y) - μ(Ex, y) - μ(x, Ey)` as structure constants.
pub fn pi_action(e: &Matrix6<f64>, c: &StructureConstants) -> StructureConstants {
    let col = |i: usize| -> [f64; DIM] { std::array::from_fn(|k| e[(k, i)]) };
    let unit = |i: usize| -> [f64; DIM] { std::array::from_fn(|k| if k == i { 1.0 } else { 0.0 }) };
    StructureConstants::from_bracket(|i, j| {
        let mu = c.bracket(i, j);
        let e_mu: [f64; DIM] = std::array::from_fn(|k| (0..DIM).map(|l| e[(k, l)] * mu[l]).sum());
        let a = c.bracket_vectors(&col(i), &unit(j));
        let b = c.bracket_vectors(&unit(i), &col(j));
        std::array::from_fn(|k| e_mu[k] - a[k] - b[k])
    })
}

/// The `A`-block of almost-abelian structure constants:
/// `A_i^j = c^{i+1}_{j+1, 5}`.
pub fn a_block(c: &StructureConstants) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| c.get(i + 1, j + 1, 5))
}

/// `π(P_μ)μ` restricted to the `A`-block, for comparison with
/// [`bracket_rhs_matrix`].
pub fn reduced_pi_rhs(a: &Matrix4<f64>, cfg: &FlowConfig) -> Matrix4<f64> {
    let c = AlmostAbelianStructure::new_unchecked(0.0, [0.0; 4], *a).structure_constants();
    a_block(&pi_action(&p_mu_matrix(a, cfg).p, &c))
}

// Metric picture.

/// Structure constants in a `g`-orthonormal, `J`-adapted frame
/// `f_a = Σ_b L_{ba} e_b` with `L = g^{-1/2}`.
pub fn orthonormal_constants(c: &StructureConstants, g: &Matrix6<f64>) -> StructureConstants {
    let eig = g.symmetric_eigen();
    let inv_sqrt = eig.eigenvalues.map(|x| 1.0 / x.sqrt());
    let l = eig.eigenvectors * Matrix6::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    let l_inv = eig.eigenvectors
        * Matrix6::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
        * eig.eigenvectors.transpose();
    StructureConstants::from_bracket(|i, j| {
        let x: [f64; DIM] = std::array::from_fn(|k| l[(k, i)]);
        let y: [f64; DIM] = std::array::from_fn(|k| l[(k, j)]);
        let b = c.bracket_vectors(&x, &y);
        std::array::from_fn(|k| (0..DIM).map(|m| l_inv[(k, m)] * b[m]).sum())
    })
}

/// `f(ω) = 1 - (α'/4) K(ω, τ)` for an arbitrary metric, with `K` fitted
/// from the generic curvature in an orthonormal frame (`0` when
/// `i∂∂̄ω = 0`).
pub fn metric_slope_f(c: &StructureConstants, g: &Matrix6<f64>, cfg: &FlowConfig) -> f64 {
    if cfg.alpha_prime == 0.0 {
        return 1.0;
    }
    let k = generic_proportionality(&orthonormal_constants(c, g), cfg.tau).map_or(0.0, |r| r.0);
    1.0 - cfg.alpha_prime / 4.0 * k
}

/// `‖Ψ‖⁻²_ν f(‖Ψ‖⁻²_ν ν) ι_ν(i∂∂̄ν)` as a 2-form.
pub fn metric_rhs_form(
    nu: &HermitianMetric,
    c: &StructureConstants,
    cfg: &FlowConfig,
) -> Result<KForm, FlowError> {
    let form = nu.fundamental_form();
    let phi = c.del_delbar(&form)?;
    let beta = exterior::lefschetz_solve(&phi, &form)?;
    let psi_inv = 1.0 / nu.psi_norm_sq(1.0);
    let f = metric_slope_f(c, &(nu.matrix() * psi_inv), cfg);
    Ok(beta.scale(psi_inv * f))
}

/// Tangent of the metric matrix `g` along the metric flow.
pub fn metric_rhs(
    nu: &HermitianMetric,
    c: &StructureConstants,
    cfg: &FlowConfig,
) -> Result<Matrix6<f64>, FlowError> {
    Ok(j_vectors() * algebra::matrix_from_form(&metric_rhs_form(nu, c, cfg)?))
}

fn form_to_coords(f: &KForm) -> Vec<f64> {
    exterior::real_11_basis()
        .iter()
        .map(|b| {
            let (mask, _) = b.terms().next().expect("nonzero basis element");
            f.coeff_by_mask(mask)
        })
        .collect()
}

fn coords_to_form(x: &[f64]) -> KForm {
    let mut f = KForm::zero(2);
    for (b, &w) in exterior::real_11_basis().iter().zip(x) {
        f += &b.scale(w);
    }
    f
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricPoint {
    pub t: f64,
    /// Coefficients of `ν` in the lexicographic basis of 2-forms.
    pub nu: Vec<f64>,
    pub psi_norm_sq: f64,
    pub f_value: f64,
    pub min_eigenvalue: f64,
}

impl MetricPoint {
    fn new(t: f64, nu: &HermitianMetric, c: &StructureConstants, cfg: &FlowConfig) -> Self {
        let psi_inv = 1.0 / nu.psi_norm_sq(1.0);
        Self {
            t,
            nu: nu.fundamental_form().coeffs().to_vec(),
            psi_norm_sq: nu.psi_norm_sq(1.0),
            f_value: metric_slope_f(c, &(nu.matrix() * psi_inv), cfg),
            min_eigenvalue: nu.min_eigenvalue(),
        }
    }

    pub fn form(&self) -> KForm {
        KForm::from_coeffs(2, self.nu.clone()).expect("15 coefficients")
    }

    /// Coefficients of `e^{16}`, `e^{25}`, `e^{34}`.
    pub fn diagonal(&self) -> (f64, f64, f64) {
        let f = self.form();
        (f.coeff(&[1, 6]), f.coeff(&[2, 5]), f.coeff(&[3, 4]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFlowStatus {
    ReachedEnd,
    PositivityLost,
    StepUnderflow,
    MaxSteps,
    NonFinite,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricFlowRun {
    pub status: MetricFlowStatus,
    pub accepted_steps: usize,
    pub samples: Vec<MetricPoint>,
    pub failure: Option<String>,
}

/// Integrates the metric flow with the bracket fixed. The state is the
/// coordinate vector of `ν` in the basis of real `(1,1)`-forms, so `ν`
/// stays `J`-invariant exactly.
pub fn integrate_metric_flow(
    nu0: &HermitianMetric,
    cfg: &FlowConfig,
    c: &StructureConstants,
) -> Result<MetricFlowRun, FlowError> {
    cfg.validate()?;
    let times = cfg.sampling.times(cfg.t_end);
    let mut samples = Vec::new();
    let mut next = 0;
    let first = MetricPoint::new(0.0, nu0, c, cfg);
    while next < times.len() && times[next] <= 0.0 {
        samples.push(first.clone());
        next += 1;
    }
    let mut run = MetricFlowRun {
        status: MetricFlowStatus::ReachedEnd,
        accepted_steps: 0,
        samples: Vec::new(),
        failure: None,
    };
    if cfg.t_end == 0.0 {
        run.samples = samples;
        return Ok(run);
    }
    let metric_of = |x: &[f64]| HermitianMetric::from_fundamental_form(&coords_to_form(x));
    let mut rhs_error: Option<String> = None;
    let mut status = MetricFlowStatus::ReachedEnd;
    let mut sample_error: Option<String> = None;
    let result = ode::integrate(
        |_, x, dx| {
            match metric_of(x)
                .map_err(FlowError::from)
                .and_then(|nu| metric_rhs_form(&nu, c, cfg))
            {
                Ok(beta) => dx.copy_from_slice(&form_to_coords(&beta)),
                Err(e) => {
                    rhs_error.get_or_insert(e.to_string());
                    dx.fill(f64::NAN);
                }
            }
        },
        0.0,
        &form_to_coords(&nu0.fundamental_form()),
        cfg.t_end,
        &cfg.ode_options(),
        |t, x, dense| {
            if let Err(e) = metric_of(x) {
                status = MetricFlowStatus::PositivityLost;
                sample_error = Some(format!("t = {t}: {e}"));
                return Control::Stop;
            }
            while next < times.len() && times[next] <= t {
                let s = times[next];
                let xs = if s == t { x.to_vec() } else { dense.eval(s) };
                match metric_of(&xs) {
                    Ok(nu) => samples.push(MetricPoint::new(s, &nu, c, cfg)),
                    Err(e) => {
                        status = MetricFlowStatus::PositivityLost;
                        sample_error = Some(format!("t = {s}: {e}"));
                        return Control::Stop;
                    }
                }
                next += 1;
            }
            Control::Continue
        },
    );
    run.samples = samples;
    match result {
        Ok(stats) => {
            run.accepted_steps = stats.accepted;
            run.status = status;
            run.failure = sample_error;
        }
        Err(e) => {
            run.status = match e {
                OdeError::StepUnderflow { .. } => MetricFlowStatus::StepUnderflow,
                OdeError::MaxSteps { .. } => MetricFlowStatus::MaxSteps,
                OdeError::NonFinite { .. } => MetricFlowStatus::NonFinite,
            };
            run.failure = Some(match rhs_error {
                Some(r) => format!("{e}; {r}"),
                None => e.to_string(),
            });
        }
    }
    Ok(run)
}

/// The nilpotent example: `de^3 = √2 e^{26}`, `de^4 = √2 e^{56}`, i.e.
/// `dζ^3 = i ζ^{12} + i ζ^{2\bar 1}` in the unitary coframe
/// `ζ^j = e^j + i e^{7-j}`.
pub fn nilpotent_example() -> StructureConstants {
    let mut c = StructureConstants::zero();
    let s = std::f64::consts::SQRT_2;
    c.set(2, 1, 5, s);
    c.set(3, 4, 5, s);
    c
}

/// The closed form printed for the nilpotent example:
/// `a = b = e^{√(2t+1) - 1}`, `c = (2t+1)^{-1/2}`.
pub fn example_closed_form(t: f64) -> (f64, f64, f64) {
    let r = (2.0 * t + 1.0).sqrt();
    let a = (r - 1.0).exp();
    (a, a, 1.0 / r)
}

/// Exact solution of `a' = ac²`, `b' = bc²`, `c' = -c³` from `(1, 1, 1)`.
pub fn example_ode_solution(t: f64) -> (f64, f64, f64) {
    let r = (2.0 * t + 1.0).sqrt();
    (r, r, 1.0 / r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleRow {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub a_closed: f64,
    pub c_closed: f64,
    pub a_ode: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleReport {
    pub rows: Vec<ExampleRow>,
    /// Max `|a - a_closed|, |b - b_closed|, |c - c_closed|`.
    pub max_dev_closed_form: f64,
    /// Max `|c - c_closed|` alone.
    pub max_dev_c: f64,
    /// Max deviation from the exact solution of the reduced ODE system.
    pub max_dev_ode_solution: f64,
    /// Max `|‖Ψ‖²_ν abc - 1|`.
    pub psi_consistency: f64,
    /// Max `|ν - (a e^{16} + b e^{25} + c e^{34})|` over off-diagonal entries.
    pub off_diagonal: f64,
    pub status: MetricFlowStatus,
}

/// Metric flow of the nilpotent example from `ν_0 = e^{16} + e^{25} + e^{34}`
/// sampled at `samples` equally spaced times on `[0, t_end]`.
pub fn run_example(t_end: f64, samples: usize) -> Result<ExampleReport, FlowError> {
    let cfg = FlowConfig {
        t_end,
        rel_tol: 1e-11,
        abs_tol: 1e-13,
        sampling: Sampling::Linear { count: samples },
        ..FlowConfig::default()
    };
    let run = integrate_metric_flow(&HermitianMetric::identity(), &cfg, &nilpotent_example())?;
    let mut report = ExampleReport {
        rows: Vec::new(),
        max_dev_closed_form: 0.0,
        max_dev_c: 0.0,
        max_dev_ode_solution: 0.0,
        psi_consistency: 0.0,
        off_diagonal: 0.0,
        status: run.status,
    };
    for p in &run.samples {
        let (a, b, c) = p.diagonal();
        let (ac, bc, cc) = example_closed_form(p.t);
        let (ao, bo, co) = example_ode_solution(p.t);
        let diag = KForm::term(&[1, 6], a) + KForm::term(&[2, 5], b) + KForm::term(&[3, 4], c);
        report.max_dev_closed_form = report
            .max_dev_closed_form
            .max((a - ac).abs())
            .max((b - bc).abs())
            .max((c - cc).abs());
        report.max_dev_c = report.max_dev_c.max((c - cc).abs());
        report.max_dev_ode_solution = report
            .max_dev_ode_solution
            .max((a - ao).abs())
            .max((b - bo).abs())
            .max((c - co).abs());
        report.psi_consistency = report
            .psi_consistency
            .max((p.psi_norm_sq * a * b * c - 1.0).abs());
        report.off_diagonal = report.off_diagonal.max((&p.form() - &diag).max_abs());
        report.rows.push(ExampleRow {
            t: p.t,
            a,
            b,
            c,
            a_closed: ac,
            c_closed: cc,
            a_ode: ao,
        });
    }
    Ok(report)
}
