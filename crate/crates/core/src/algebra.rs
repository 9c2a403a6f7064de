//! Almost-abelian Lie algebras `g = span{e_1, ..., e_6}` with abelian ideal
//! `n = span{e_1, ..., e_5}` and `ad_{e_6}` given by `(a, v, A)`:
//!
//! ```text
//! ad_{e_6} = ( a 0 0 )     acting on (e_1 | e_2..e_5 | e_6)
//!            ( v A 0 )
//!            ( 0 0 0 )
//! ```
//!
//! The matrix is stored as `A[(i, j)] = A_i^j` with `ad_{e_6} e_j = Σ_i A_i^j e_i`,
//! so that `de^i` carries `A_i^j e^{j6}`.

use nalgebra::{Matrix4, Matrix6, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exterior::{self, KForm, StructureConstants, DIM};

/// Tolerance for structural predicates.
pub const STRUCT_TOL: f64 = 1e-12;
/// Tolerance for comparisons against a derived oracle.
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("complex structure is not integrable: ‖[A, J]‖ = {residual:e}")]
    NotIntegrable { residual: f64 },
    #[error("field `{0}` must be a finite number")]
    NotFinite(String),
    #[error("invalid structure input: {0}")]
    InvalidInput(String),
    #[error("metric is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("metric is not J-compatible (‖J^T g J - g‖ = {0:e})")]
    NotJCompatible(f64),
    #[error("metric is not positive definite")]
    NotPositive,
}

/// `J` restricted to `n_1 = span{e_2, ..., e_5}`: `e_2 ↦ e_5`, `e_3 ↦ e_4`,
/// `e_4 ↦ -e_3`, `e_5 ↦ -e_2` (columns are images).
pub fn j_n1() -> Matrix4<f64> {
    let mut j = Matrix4::zeros();
    j[(3, 0)] = 1.0;
    j[(2, 1)] = 1.0;
    j[(1, 2)] = -1.0;
    j[(0, 3)] = -1.0;
    j
}

/// `J` on the whole frame: `J e_i = e_{7-i}`, `J e_{7-i} = -e_i` for `i ≤ 3`.
pub fn j_vectors() -> Matrix6<f64> {
    let mut j = Matrix6::zeros();
    for i in 0..3 {
        j[(DIM - 1 - i, i)] = 1.0;
        j[(i, DIM - 1 - i)] = -1.0;
    }
    j
}

fn frobenius(m: &Matrix4<f64>) -> f64 {
    m.norm()
}

/// `(a, v, A)` data of an almost-abelian algebra with integrable `J`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlmostAbelianStructure {
    pub(crate) a: f64,
    pub(crate) v: Vector4<f64>,
    pub(crate) matrix: Matrix4<f64>,
}

impl AlmostAbelianStructure {
    /// Validates integrability, `[A, J|_{n_1}] = 0`.
    pub fn new(a: f64, v: [f64; 4], matrix: Matrix4<f64>) -> Result<Self, AlgebraError> {
        if !a.is_finite() {
            return Err(AlgebraError::NotFinite("a".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(AlgebraError::NotFinite("v".into()));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(AlgebraError::NotFinite("A".into()));
        }
        let s = Self::new_unchecked(a, v, matrix);
        let residual = s.integrability_residual();
        if residual > STRUCT_TOL * frobenius(&matrix).max(1.0) {
            return Err(AlgebraError::NotIntegrable { residual });
        }
        Ok(s)
    }

    /// Skips the integrability check; used for perturbation tests and
    /// diagnostics on deliberately broken data.
    pub fn new_unchecked(a: f64, v: [f64; 4], matrix: Matrix4<f64>) -> Self {
        Self {
            a,
            v: Vector4::from(v),
            matrix,
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn v(&self) -> [f64; 4] {
        self.v.into()
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    /// `‖[A, J]‖` (Frobenius).
    pub fn integrability_residual(&self) -> f64 {
        let j = j_n1();
        frobenius(&(self.matrix * j - j * self.matrix))
    }

    pub fn trace_a(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn trace_ja(&self) -> f64 {
        (j_n1() * self.matrix).trace()
    }

    /// Structure constants with `de^1 = a e^{16}`,
    /// `de^i = v_i e^{16} + Σ_j A_i^j e^{j6}` and `de^6 = 0`.
    pub fn structure_constants(&self) -> StructureConstants {
        let mut c = StructureConstants::zero();
        c.set(0, 0, 5, self.a);
        for i in 0..4 {
            c.set(i + 1, 0, 5, self.v[i]);
            for j in 0..4 {
                c.set(i + 1, j + 1, 5, self.matrix[(i, j)]);
            }
        }
        c
    }

    /// Checked version of [`structure_constants`](Self::structure_constants).
    pub fn try_structure_constants(&self) -> Result<StructureConstants, AlgebraError> {
        let residual = self.integrability_residual();
        if residual > STRUCT_TOL * frobenius(&self.matrix).max(1.0) {
            return Err(AlgebraError::NotIntegrable { residual });
        }
        Ok(self.structure_constants())
    }

    fn scale(&self) -> f64 {
        self.a
            .abs()
            .max(self.v.amax())
            .max(self.matrix.amax())
            .max(1.0)
    }

    /// Trivial canonical bundle: `tr A = -2a` and `tr(JA) = 0`.
    pub fn canonical_trivial_check(&self) -> bool {
        let tol = STRUCT_TOL * self.scale();
        (self.trace_a() + 2.0 * self.a).abs() <= tol && self.trace_ja().abs() <= tol
    }

    /// Max-norm of `dΨ` for the holomorphic volume form.
    pub fn d_psi_norm(&self) -> f64 {
        let c = self.structure_constants();
        c.d(&exterior::holomorphic_volume_form())
            .expect("degree 3")
            .max_abs()
    }

    /// Balanced: `tr A = 0` and `v = 0`.
    pub fn balanced_check(&self) -> bool {
        let tol = STRUCT_TOL * self.scale();
        self.trace_a().abs() <= tol && self.v.amax() <= tol
    }

    /// `d*ω` on the frame vectors, from `tr ad_{JX}` and the bracket term.
    ///
    /// Computed as `tr ad_{JX} - ½ Σ_i ω([Je_i, e_i], JX)` with
    /// `ω(X, Y) = g(JX, Y)`.
    pub fn codifferential_omega(&self) -> [f64; DIM] {
        let c = self.structure_constants();
        let j = j_vectors();
        let omega = exterior::reference_fundamental_form();
        let e = |i: usize| -> [f64; DIM] { std::array::from_fn(|b| (b == i) as u8 as f64) };
        let col = |m: &Matrix6<f64>, i: usize| -> [f64; DIM] { std::array::from_fn(|b| m[(b, i)]) };
        let apply = |x: &[f64; DIM]| -> [f64; DIM] {
            std::array::from_fn(|r| (0..DIM).map(|s| j[(r, s)] * x[s]).sum())
        };
        let mut bracket_sum = [0.0; DIM];
        for i in 0..DIM {
            let b = c.bracket_vectors(&col(&j, i), &e(i));
            for (acc, x) in bracket_sum.iter_mut().zip(b) {
                *acc += x;
            }
        }
        std::array::from_fn(|x| {
            let jx = apply(&e(x));
            let mut tr = 0.0;
            for k in 0..DIM {
                tr += c.bracket_vectors(&jx, &e(k))[k];
            }
            tr - 0.5 * omega.eval(&[bracket_sum, jx])
        })
    }

    /// Max-norm of `d(ω ∧ ω)` for the reference metric.
    pub fn d_omega_sq_norm(&self) -> f64 {
        let c = self.structure_constants();
        let w = exterior::reference_fundamental_form();
        c.d(&w.wedge(&w).expect("degree 4")).expect("degree 5").max_abs()
    }

    /// Max-norm of `dω` for the reference metric.
    pub fn d_omega_norm(&self) -> f64 {
        let c = self.structure_constants();
        c.d(&exterior::reference_fundamental_form())
            .expect("degree 3")
            .max_abs()
    }

    /// Extracts balanced parameters when the structure is balanced with
    /// trivial canonical bundle and its matrix has the reduced pattern.
    pub fn to_balanced_params(&self) -> Option<BalancedParams> {
        if !(self.balanced_check() && self.canonical_trivial_check()) {
            return None;
        }
        let m = &self.matrix;
        let p = BalancedParams {
            a22: m[(0, 0)],
            a23: m[(0, 1)],
            a24: m[(0, 2)],
            a25: m[(0, 3)],
            a32: m[(1, 0)],
            a35: m[(1, 3)],
        };
        let diff = (p.matrix() - m).amax();
        (diff <= STRUCT_TOL * self.scale()).then_some(p)
    }
}

/// The six free entries of a balanced almost-abelian structure with closed
/// `(3,0)`-form (`a = 0`, `v = 0`, `tr A = tr JA = 0`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalancedParams {
    #[serde(rename = "A22")]
    pub a22: f64,
    #[serde(rename = "A23")]
    pub a23: f64,
    #[serde(rename = "A24")]
    pub a24: f64,
    #[serde(rename = "A25")]
    pub a25: f64,
    #[serde(rename = "A32")]
    pub a32: f64,
    #[serde(rename = "A35")]
    pub a35: f64,
}

impl BalancedParams {
    pub const NAMES: [&'static str; 6] = ["A22", "A23", "A24", "A25", "A32", "A35"];

    pub fn new(a22: f64, a23: f64, a24: f64, a25: f64, a32: f64, a35: f64) -> Self {
        Self {
            a22,
            a23,
            a24,
            a25,
            a32,
            a35,
        }
    }

    pub fn from_array(x: [f64; 6]) -> Self {
        Self::new(x[0], x[1], x[2], x[3], x[4], x[5])
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.a22, self.a23, self.a24, self.a25, self.a32, self.a35]
    }

    /// Rows `e_2..e_5` of the reduced matrix.
    pub fn matrix(&self) -> Matrix4<f64> {
        let Self {
            a22,
            a23,
            a24,
            a25,
            a32,
            a35,
        } = *self;
        Matrix4::new(
            a22, a23, a24, a25, //
            a32, -a22, -a25, a35, //
            -a35, a25, -a22, a32, //
            -a25, -a24, a23, a22,
        )
    }

    /// Reads the six entries back from a matrix, ignoring the rest.
    pub fn from_matrix(m: &Matrix4<f64>) -> Self {
        Self::new(
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(0, 3)],
            m[(1, 0)],
            m[(1, 3)],
        )
    }

    pub fn structure(&self) -> AlmostAbelianStructure {
        AlmostAbelianStructure::new_unchecked(0.0, [0.0; 4], self.matrix())
    }

    pub fn structure_constants(&self) -> StructureConstants {
        self.structure().structure_constants()
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// `‖A^+‖² = 4A22² + (A23+A32)² + (A24-A35)²`.
    pub fn norm_aplus_sq(&self) -> f64 {
        4.0 * self.a22 * self.a22
            + (self.a23 + self.a32).powi(2)
            + (self.a24 - self.a35).powi(2)
    }

    /// Kähler iff the expanded matrix is skew: `A22 = 0`, `A23 + A32 = 0`,
    /// `A24 - A35 = 0`.
    pub fn kahler_check(&self) -> bool {
        let tol = STRUCT_TOL * self.max_abs().max(1.0);
        self.a22.abs() <= tol
            && (self.a23 + self.a32).abs() <= tol
            && (self.a24 - self.a35).abs() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// Symmetric/skew split of a 4×4 matrix and the norms used by the flow.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixParts {
    pub plus: Matrix4<f64>,
    pub minus: Matrix4<f64>,
    pub commutator: Matrix4<f64>,
    pub norm_sq: f64,
    pub norm_plus_sq: f64,
    pub norm_comm_sq: f64,
}

pub fn matrix_parts(a: &Matrix4<f64>) -> MatrixParts {
    let plus = (a + a.transpose()) * 0.5;
    let minus = (a - a.transpose()) * 0.5;
    let commutator = plus * minus - minus * plus;
    MatrixParts {
        norm_sq: a.norm_squared(),
        norm_plus_sq: plus.norm_squared(),
        norm_comm_sq: commutator.norm_squared(),
        plus,
        minus,
        commutator,
    }
}

/// A `J`-compatible inner product on the frame, `g[(i, j)] = g(e_i, e_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMetric {
    g: Matrix6<f64>,
}

impl HermitianMetric {
    pub fn new(g: Matrix6<f64>) -> Result<Self, AlgebraError> {
        let scale = g.amax().max(1.0);
        let asym = (g - g.transpose()).amax();
        if asym > STRUCT_TOL * scale {
            return Err(AlgebraError::NotSymmetric(asym));
        }
        let j = j_vectors();
        let jc = (j.transpose() * g * j - g).amax();
        if jc > STRUCT_TOL * scale {
            return Err(AlgebraError::NotJCompatible(jc));
        }
        if g.iter().any(|x| !x.is_finite()) || g.cholesky().is_none() {
            return Err(AlgebraError::NotPositive);
        }
        Ok(Self { g })
    }

    pub fn identity() -> Self {
        Self {
            g: Matrix6::identity(),
        }
    }

    /// `g = diag(a, b, c, c, b, a)`, i.e. `ν = a e^{16} + b e^{25} + c e^{34}`.
    pub fn diagonal(a: f64, b: f64, c: f64) -> Result<Self, AlgebraError> {
        Self::new(Matrix6::from_diagonal(&nalgebra::Vector6::new(
            a, b, c, c, b, a,
        )))
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.g
    }

    /// Matrix of the fundamental form, `ω(e_a, e_b) = g(Je_a, e_b)`.
    pub fn form_matrix(&self) -> Matrix6<f64> {
        j_vectors().transpose() * self.g
    }

    pub fn fundamental_form(&self) -> KForm {
        form_from_matrix(&self.form_matrix())
    }

    /// Inverse of [`fundamental_form`](Self::fundamental_form).
    pub fn from_fundamental_form(omega: &KForm) -> Result<Self, AlgebraError> {
        if omega.degree() != 2 {
            return Err(AlgebraError::InvalidInput(format!(
                "fundamental form must have degree 2, got {}",
                omega.degree()
            )));
        }
        Self::new(j_vectors() * matrix_from_form(omega))
    }

    /// Positivity margin: smallest eigenvalue of `g`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.g.symmetric_eigenvalues().min()
    }

    pub fn is_positive(&self) -> bool {
        self.g.cholesky().is_some()
    }

    /// `‖Ψ‖² = |k|² / det(g_{i j̄})`, with `det(g_{i j̄}) = sqrt(det g)` for a
    /// `J`-compatible metric.
    pub fn psi_norm_sq(&self, k: f64) -> f64 {
        k * k / self.g.determinant().sqrt()
    }
}

/// Antisymmetric matrix `m[(a, b)] = α(e_a, e_b)` of a 2-form.
pub fn matrix_from_form(f: &KForm) -> Matrix6<f64> {
    assert_eq!(f.degree(), 2);
    let mut m = Matrix6::zeros();
    for (mask, c) in f.terms() {
        let l = exterior::mask_labels(mask);
        m[(l[0] - 1, l[1] - 1)] = c;
        m[(l[1] - 1, l[0] - 1)] = -c;
    }
    m
}

/// 2-form with `α(e_a, e_b) = m[(a, b)]`, reading the upper triangle.
pub fn form_from_matrix(m: &Matrix6<f64>) -> KForm {
    let mut f = KForm::zero(2);
    for a in 0..DIM {
        for b in (a + 1)..DIM {
            if m[(a, b)] != 0.0 {
                f += &KForm::term(&[a + 1, b + 1], m[(a, b)]);
            }
        }
    }
    f
}

/// Parsed structure input.
#[derive(Clone, Debug, PartialEq)]
pub enum StructureSpec {
    Balanced(BalancedParams),
    General(AlmostAbelianStructure),
}

impl StructureSpec {
    pub fn structure(&self) -> AlmostAbelianStructure {
        match self {
            Self::Balanced(p) => p.structure(),
            Self::General(s) => s.clone(),
        }
    }

    /// Balanced parameters, directly or by exact extraction.
    pub fn balanced_params(&self) -> Option<BalancedParams> {
        match self {
            Self::Balanced(p) => Some(*p),
            Self::General(s) => s.to_balanced_params(),
        }
    }
}

fn number(v: &serde_json::Value, field: &str) -> Result<f64, AlgebraError> {
    let x = v.as_f64().ok_or_else(|| {
        AlgebraError::InvalidInput(format!("field `{field}` must be a number, got {v}"))
    })?;
    if !x.is_finite() {
        return Err(AlgebraError::NotFinite(field.into()));
    }
    Ok(x)
}

/// Parses `{"a": .., "v": [4], "A": [[4x4]]}` or
/// `{"balanced_params": {"A22": .., ...}}`.
pub fn parse_structure_json(text: &str) -> Result<StructureSpec, AlgebraError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| AlgebraError::InvalidInput(format!("malformed JSON: {e}")))?;
    parse_structure_value(&value)
}

pub fn parse_structure_value(value: &serde_json::Value) -> Result<StructureSpec, AlgebraError> {
    let obj = value
        .as_object()
        .ok_or_else(|| AlgebraError::InvalidInput("top level must be a JSON object".into()))?;
    if let Some(bp) = obj.get("balanced_params") {
        if obj.len() != 1 {
            return Err(AlgebraError::InvalidInput(
                "`balanced_params` must be the only top-level field".into(),
            ));
        }
        let inner = bp.as_object().ok_or_else(|| {
            AlgebraError::InvalidInput("field `balanced_params` must be an object".into())
        })?;
        for key in inner.keys() {
            if !BalancedParams::NAMES.contains(&key.as_str()) {
                return Err(AlgebraError::InvalidInput(format!(
                    "unknown field `balanced_params.{key}` (expected one of {:?})",
                    BalancedParams::NAMES
                )));
            }
        }
        let mut x = [0.0; 6];
        for (slot, name) in x.iter_mut().zip(BalancedParams::NAMES) {
            let field = format!("balanced_params.{name}");
            let v = inner
                .get(name)
                .ok_or_else(|| AlgebraError::InvalidInput(format!("missing field `{field}`")))?;
            *slot = number(v, &field)?;
        }
        return Ok(StructureSpec::Balanced(BalancedParams::from_array(x)));
    }
    for key in obj.keys() {
        if !["a", "v", "A"].contains(&key.as_str()) {
            return Err(AlgebraError::InvalidInput(format!(
                "unknown field `{key}` (expected `a`, `v`, `A` or `balanced_params`)"
            )));
        }
    }
    let get = |k: &str| {
        obj.get(k)
            .ok_or_else(|| AlgebraError::InvalidInput(format!("missing field `{k}`")))
    };
    let a = number(get("a")?, "a")?;
    let v_arr = get("v")?
        .as_array()
        .filter(|v| v.len() == 4)
        .ok_or_else(|| AlgebraError::InvalidInput("field `v` must be an array of 4 numbers".into()))?;
    let mut v = [0.0; 4];
    for (i, x) in v_arr.iter().enumerate() {
        v[i] = number(x, &format!("v[{i}]"))?;
    }
    let rows = get("A")?
        .as_array()
        .filter(|r| r.len() == 4)
        .ok_or_else(|| AlgebraError::InvalidInput("field `A` must be a 4x4 array".into()))?;
    let mut m = Matrix4::zeros();
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .filter(|r| r.len() == 4)
            .ok_or_else(|| AlgebraError::InvalidInput(format!("row `A[{i}]` must have 4 numbers")))?;
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] = number(x, &format!("A[{i}][{j}]"))?;
        }
    }
    Ok(StructureSpec::General(AlmostAbelianStructure::new(a, v, m)?))
}
