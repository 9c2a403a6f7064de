//! Gauduchon connections `∇^τ` of the reference metric, their curvature and
//! the curvature trace `tr(Ω ∧ Ω)`.
//!
//! Connection forms are stored as the matrix `θ^i_j` of the connection in the
//! orthonormal frame, `∇_X e_j = Σ_i θ^i_j(X) e_i`, with
//!
//! ```text
//! θ^i_j(e_k) = ½(c^i_{jk} - c^k_{ij} + c^j_{ki})
//!              - (τ-1)/4 dω(Je_k, Je_j, Je_i) - (τ+1)/4 dω(Je_k, e_j, e_i)
//! ```
//!
//! The tabulated closed forms `σ^τ` use the opposite overall sign, see
//! [`TABLE_SIGN`]. Curvature is `Ω^i_j = dθ^i_j + Σ_k θ^i_k ∧ θ^k_j`.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::algebra::{j_vectors, matrix_parts, BalancedParams};
use crate::exterior::{self, KForm, StructureConstants, DIM};

/// Sign relating the tabulated connection forms to the connection matrix,
/// `σ_table = TABLE_SIGN · θ`.
pub const TABLE_SIGN: f64 = -1.0;

pub type FormArray = [[KForm; DIM]; DIM];

fn zero_array(degree: usize) -> FormArray {
    std::array::from_fn(|_| std::array::from_fn(|_| KForm::zero(degree)))
}

/// Connection matrix of a Hermitian connection on the reference frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionForms {
    pub tau: f64,
    sigma: FormArray,
}

impl ConnectionForms {
    /// `θ^i_j` for 1-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> &KForm {
        &self.sigma[i - 1][j - 1]
    }

    pub fn forms(&self) -> &FormArray {
        &self.sigma
    }

    /// Entries in the sign convention of the tabulated closed forms.
    pub fn table_forms(&self) -> FormArray {
        std::array::from_fn(|i| std::array::from_fn(|j| self.sigma[i][j].scale(TABLE_SIGN)))
    }

    /// `θ(e_k)` as a 6×6 matrix.
    pub fn matrix_at(&self, k: usize) -> nalgebra::Matrix6<f64> {
        nalgebra::Matrix6::from_fn(|i, j| self.sigma[i][j].coeffs()[k])
    }

    pub fn max_abs(&self) -> f64 {
        self.sigma
            .iter()
            .flatten()
            .fold(0.0f64, |m, f| m.max(f.max_abs()))
    }
}

fn unit(i: usize) -> [f64; DIM] {
    std::array::from_fn(|b| (b == i) as u8 as f64)
}

fn j_col(i: usize) -> [f64; DIM] {
    let j = j_vectors();
    std::array::from_fn(|b| j[(b, i)])
}

fn build(tau: f64, entry: impl Fn(usize, usize, usize) -> f64) -> ConnectionForms {
    let mut sigma = zero_array(1);
    for i in 0..DIM {
        for j in (i + 1)..DIM {
            let coeffs: Vec<f64> = (0..DIM).map(|k| entry(i, j, k)).collect();
            let f = KForm::from_coeffs(1, coeffs).expect("six coefficients");
            sigma[j][i] = -&f;
            sigma[i][j] = f;
        }
    }
    ConnectionForms { tau, sigma }
}

fn lc_entry(c: &StructureConstants, i: usize, j: usize, k: usize) -> f64 {
    0.5 * (c.get(i, j, k) - c.get(k, i, j) + c.get(j, k, i))
}

/// Levi-Civita connection of the reference metric.
pub fn levi_civita_forms(c: &StructureConstants) -> ConnectionForms {
    build(f64::NAN, |i, j, k| lc_entry(c, i, j, k))
}

/// The Gauduchon connection `∇^τ` (`τ = 1` Chern, `τ = 0` Lichnerowicz,
/// `τ = -1` Bismut).
pub fn gauduchon_forms(c: &StructureConstants, tau: f64) -> ConnectionForms {
    let domega = c
        .d(&exterior::reference_fundamental_form())
        .expect("degree 3");
    build(tau, |i, j, k| {
        let t1 = domega.eval(&[j_col(k), j_col(j), j_col(i)]);
        let t2 = domega.eval(&[j_col(k), unit(j), unit(i)]);
        lc_entry(c, i, j, k) - (tau - 1.0) / 4.0 * t1 - (tau + 1.0) / 4.0 * t2
    })
}

/// Curvature 2-forms.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureForms {
    omega2: FormArray,
}

impl CurvatureForms {
    pub fn from_array(omega2: FormArray) -> Self {
        Self { omega2 }
    }

    /// `Ω^i_j` for 1-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> &KForm {
        &self.omega2[i - 1][j - 1]
    }

    pub fn forms(&self) -> &FormArray {
        &self.omega2
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.omega2)
    }
}

pub fn max_abs(arr: &FormArray) -> f64 {
    arr.iter().flatten().fold(0.0f64, |m, f| m.max(f.max_abs()))
}

/// Entrywise max-norm distance between two arrays of forms.
pub fn max_distance(a: &FormArray, b: &FormArray) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..DIM {
        for j in 0..DIM {
            worst = worst.max((&a[i][j] - &b[i][j]).max_abs());
        }
    }
    worst
}

/// `dθ^i_j` and `Λ^i_j = Σ_k θ^i_k ∧ θ^k_j`.
pub fn curvature_parts(sigma: &ConnectionForms, c: &StructureConstants) -> (FormArray, FormArray) {
    let th = &sigma.sigma;
    let mut dsig = zero_array(2);
    let mut lam = zero_array(2);
    for i in 0..DIM {
        for j in (i + 1)..DIM {
            let d = c.d(&th[i][j]).expect("degree 2");
            let mut l = KForm::zero(2);
            for k in 0..DIM {
                l += &th[i][k].wedge(&th[k][j]).expect("degree 2");
            }
            dsig[j][i] = -&d;
            dsig[i][j] = d;
            lam[j][i] = -&l;
            lam[i][j] = l;
        }
    }
    (dsig, lam)
}

pub fn curvature_forms(sigma: &ConnectionForms, c: &StructureConstants) -> CurvatureForms {
    let (dsig, lam) = curvature_parts(sigma, c);
    CurvatureForms {
        omega2: std::array::from_fn(|i| std::array::from_fn(|j| &dsig[i][j] + &lam[i][j])),
    }
}

/// `Σ_{i<j} Ω^i_j ∧ Ω^i_j`.
pub fn trace_curvature_wedge(omega: &CurvatureForms) -> KForm {
    trace_wedge(&omega.omega2)
}

/// `Σ_{i<j} X^i_j ∧ X^i_j` for any array of 2-forms.
pub fn trace_wedge(arr: &FormArray) -> KForm {
    let mut out = KForm::zero(4);
    for i in 0..DIM {
        for j in (i + 1)..DIM {
            out += &arr[i][j].wedge(&arr[i][j]).expect("degree 4");
        }
    }
    out
}

/// Curvature trace of `∇^τ` computed from the structure constants.
pub fn generic_trace(c: &StructureConstants, tau: f64) -> KForm {
    trace_curvature_wedge(&curvature_forms(&gauduchon_forms(c, tau), c))
}

// Shorthand combinations of the six parameters shared by the closed forms.
struct Combos {
    s: f64,
    p1: f64,
    p2: f64,
    q1: f64,
    q2: f64,
    r: f64,
    d: f64,
    w1: f64,
    w2: f64,
    sp: f64,
    sm: f64,
}

fn combos(p: &BalancedParams) -> Combos {
    let BalancedParams {
        a22,
        a23,
        a24,
        a25,
        a32,
        a35,
    } = *p;
    let sp = a23 + a32;
    let sm = a24 - a35;
    Combos {
        s: 4.0 * a22 * a22 + sp * sp + sm * sm,
        p1: a22 * (a24 + a35) - a25 * sp,
        p2: a22 * (a23 - a32) + a25 * sm,
        q1: 2.0 * a22 * a22 + a32 * a32 + a35 * a35 + a23 * a32 - a24 * a35,
        q2: 2.0 * a22 * a22 + a23 * a23 + a24 * a24 + a23 * a32 - a24 * a35,
        r: 2.0 * a22 * a25 + a23 * a35 + a24 * a32,
        d: a23 * a23 - a32 * a32 + a24 * a24 - a35 * a35,
        w1: 4.0 * (a22 * a22 + a32 * a32 + a35 * a35) - (a23 - a32).powi(2) - (a24 + a35).powi(2),
        w2: 4.0 * (a22 * a22 + a23 * a23 + a24 * a24) - (a23 - a32).powi(2) - (a24 + a35).powi(2),
        sp,
        sm,
    }
}

fn lin(terms: &[(&[usize], f64)]) -> KForm {
    let degree = terms[0].0.len();
    let mut f = KForm::zero(degree);
    for (labels, v) in terms {
        f += &KForm::term(labels, *v);
    }
    f
}

fn put(arr: &mut FormArray, i: usize, j: usize, f: KForm) {
    arr[j - 1][i - 1] = -&f;
    arr[i - 1][j - 1] = f;
}

/// Fills the entries determined by the symmetry relations
/// `X^5_6 = -X^1_2`, `X^4_6 = -X^1_3`, `X^3_6 = X^1_4`, `X^2_6 = X^1_5`,
/// `X^4_5 = -X^2_3`, `X^3_5 = X^2_4`.
fn fill_relations(arr: &mut FormArray) {
    let rel = [
        ((5, 6), (1, 2), -1.0),
        ((4, 6), (1, 3), -1.0),
        ((3, 6), (1, 4), 1.0),
        ((2, 6), (1, 5), 1.0),
        ((4, 5), (2, 3), -1.0),
        ((3, 5), (2, 4), 1.0),
    ];
    for ((i, j), (k, l), s) in rel {
        let f = arr[k - 1][l - 1].scale(s);
        put(arr, i, j, f);
    }
}

/// Tabulated connection forms `σ^τ` for balanced parameters.
pub fn closed_form_sigma(p: &BalancedParams, tau: f64) -> FormArray {
    let u = tau - 1.0;
    let t = tau;
    let BalancedParams {
        a22,
        a23,
        a24,
        a25,
        a32,
        a35,
    } = *p;
    let sp = a23 + a32;
    let sm = a24 - a35;
    let mut s = zero_array(1);
    put(&mut s, 1, 2, lin(&[(&[3], -u / 4.0 * sm), (&[4], u / 4.0 * sp), (&[5], u / 2.0 * a22)]));
    put(&mut s, 1, 3, lin(&[(&[2], u / 4.0 * sm), (&[4], -u / 2.0 * a22), (&[5], u / 4.0 * sp)]));
    put(&mut s, 1, 4, lin(&[(&[2], -u / 4.0 * sp), (&[3], u / 2.0 * a22), (&[5], u / 4.0 * sm)]));
    put(&mut s, 1, 5, lin(&[(&[2], -u / 2.0 * a22), (&[3], -u / 4.0 * sp), (&[4], -u / 4.0 * sm)]));
    put(&mut s, 2, 3, lin(&[(&[1], -t / 2.0 * sm), (&[6], 0.5 * (a32 - a23))]));
    put(&mut s, 2, 4, lin(&[(&[1], t / 2.0 * sp), (&[6], -0.5 * (a24 + a35))]));
    put(&mut s, 3, 4, lin(&[(&[1], -t * a22), (&[6], a25)]));
    put(&mut s, 2, 5, lin(&[(&[1], t * a22), (&[6], -a25)]));
    fill_relations(&mut s);
    s
}

/// Closed forms of `dσ^i_j` and `Λ^i_j` for balanced parameters.
pub fn closed_form_dsigma_lambda(p: &BalancedParams, tau: f64) -> (FormArray, FormArray) {
    let Combos {
        s,
        p1,
        p2,
        q1,
        q2,
        r,
        d,
        sp,
        sm,
        ..
    } = combos(p);
    let a22 = p.a22;
    let u = tau - 1.0;
    let t = tau;
    let u2 = u * u;

    let mut ds = zero_array(2);
    put(&mut ds, 1, 2, lin(&[(&[2, 6], u / 4.0 * r), (&[3, 6], u / 4.0 * p1), (&[4, 6], -u / 4.0 * p2), (&[5, 6], -u / 4.0 * q1)]));
    put(&mut ds, 1, 3, lin(&[(&[2, 6], -u / 4.0 * p1), (&[3, 6], u / 4.0 * r), (&[4, 6], -u / 4.0 * q2), (&[5, 6], -u / 4.0 * p2)]));
    put(&mut ds, 1, 4, lin(&[(&[2, 6], u / 4.0 * p2), (&[3, 6], u / 4.0 * q2), (&[4, 6], u / 4.0 * r), (&[5, 6], -u / 4.0 * p1)]));
    put(&mut ds, 1, 5, lin(&[(&[2, 6], u / 4.0 * q1), (&[3, 6], u / 4.0 * p2), (&[4, 6], u / 4.0 * p1), (&[5, 6], u / 4.0 * r)]));
    fill_relations(&mut ds);

    let tus = -t * u / 8.0 * s;
    let m23 = u2 / 16.0 * (4.0 * a22 * a22 + sp * sp - sm * sm);
    let m24 = u2 / 16.0 * (4.0 * a22 * a22 - sp * sp + sm * sm);
    let x = u2 / 8.0 * sp * sm;
    let y = u2 / 4.0 * a22 * sm;
    let z = u2 / 4.0 * a22 * sp;
    let n = u2 / 8.0 * (sp * sp + sm * sm);
    let h = u2 / 2.0 * a22 * a22;

    let mut lam = zero_array(2);
    put(&mut lam, 1, 2, lin(&[(&[1, 2], tus), (&[2, 6], -u / 4.0 * r), (&[3, 6], u / 4.0 * p1), (&[4, 6], -u / 4.0 * p2), (&[5, 6], u / 8.0 * d)]));
    put(&mut lam, 1, 3, lin(&[(&[1, 3], tus), (&[2, 6], -u / 4.0 * p1), (&[3, 6], -u / 4.0 * r), (&[4, 6], -u / 8.0 * d), (&[5, 6], -u / 4.0 * p2)]));
    put(&mut lam, 1, 4, lin(&[(&[1, 4], tus), (&[2, 6], u / 4.0 * p2), (&[3, 6], u / 8.0 * d), (&[4, 6], -u / 4.0 * r), (&[5, 6], -u / 4.0 * p1)]));
    put(&mut lam, 1, 5, lin(&[(&[1, 5], tus), (&[2, 6], -u / 8.0 * d), (&[3, 6], u / 4.0 * p2), (&[4, 6], u / 4.0 * p1), (&[5, 6], -u / 4.0 * r)]));
    put(&mut lam, 2, 3, lin(&[(&[1, 6], t * p1), (&[2, 3], m23), (&[4, 5], -m23), (&[2, 4], x), (&[3, 5], x), (&[2, 5], y), (&[3, 4], -y)]));
    put(&mut lam, 2, 4, lin(&[(&[1, 6], -t * p2), (&[2, 3], x), (&[4, 5], -x), (&[2, 4], m24), (&[3, 5], m24), (&[2, 5], -z), (&[3, 4], z)]));
    put(&mut lam, 3, 4, lin(&[(&[1, 6], -t / 2.0 * d), (&[2, 3], -y), (&[4, 5], y), (&[2, 4], z), (&[3, 5], z), (&[2, 5], -n), (&[3, 4], -h)]));
    put(&mut lam, 2, 5, lin(&[(&[1, 6], t / 2.0 * d), (&[2, 3], y), (&[4, 5], -y), (&[2, 4], -z), (&[3, 5], -z), (&[2, 5], -h), (&[3, 4], -n)]));
    put(&mut lam, 1, 6, lin(&[(&[2, 5], u2 / 8.0 * s), (&[3, 4], u2 / 8.0 * s)]));
    fill_relations(&mut lam);
    (ds, lam)
}

/// Closed forms of the curvature `Ω^τ` for balanced parameters.
pub fn closed_form_curvature(p: &BalancedParams, tau: f64) -> CurvatureForms {
    let Combos {
        s,
        p1,
        p2,
        d,
        w1,
        w2,
        sp,
        sm,
        ..
    } = combos(p);
    let a22 = p.a22;
    let u = tau - 1.0;
    let t = tau;
    let u2 = u * u;
    let tus = -t * u / 8.0 * s;
    let m23 = u2 / 16.0 * (4.0 * a22 * a22 + sp * sp - sm * sm);
    let m24 = u2 / 16.0 * (4.0 * a22 * a22 - sp * sp + sm * sm);
    let x = u2 / 8.0 * sp * sm;
    let y = u2 / 4.0 * a22 * sm;
    let z = u2 / 4.0 * a22 * sp;
    let n = u2 / 8.0 * (sp * sp + sm * sm);
    let h = u2 / 2.0 * a22 * a22;

    let mut om = zero_array(2);
    put(&mut om, 1, 2, lin(&[(&[1, 2], tus), (&[3, 6], u / 2.0 * p1), (&[4, 6], -u / 2.0 * p2), (&[5, 6], -u / 8.0 * w1)]));
    put(&mut om, 1, 3, lin(&[(&[1, 3], tus), (&[2, 6], -u / 2.0 * p1), (&[4, 6], -u / 8.0 * w2), (&[5, 6], -u / 2.0 * p2)]));
    put(&mut om, 1, 4, lin(&[(&[1, 4], tus), (&[2, 6], u / 2.0 * p2), (&[3, 6], u / 8.0 * w2), (&[5, 6], -u / 2.0 * p1)]));
    put(&mut om, 1, 5, lin(&[(&[1, 5], tus), (&[2, 6], u / 8.0 * w1), (&[3, 6], u / 2.0 * p2), (&[4, 6], u / 2.0 * p1)]));
    put(&mut om, 2, 3, lin(&[(&[1, 6], t * p1), (&[2, 3], m23), (&[4, 5], -m23), (&[2, 4], x), (&[3, 5], x), (&[2, 5], y), (&[3, 4], -y)]));
    put(&mut om, 2, 4, lin(&[(&[1, 6], -t * p2), (&[2, 3], x), (&[4, 5], -x), (&[2, 4], m24), (&[3, 5], m24), (&[2, 5], -z), (&[3, 4], z)]));
    put(&mut om, 3, 4, lin(&[(&[1, 6], -t / 2.0 * d), (&[2, 3], -y), (&[4, 5], y), (&[2, 4], z), (&[3, 5], z), (&[2, 5], -n), (&[3, 4], -h)]));
    put(&mut om, 2, 5, lin(&[(&[1, 6], t / 2.0 * d), (&[2, 3], y), (&[4, 5], -y), (&[2, 4], -z), (&[3, 5], -z), (&[2, 5], -h), (&[3, 4], -n)]));
    put(&mut om, 1, 6, lin(&[(&[2, 5], u2 / 8.0 * s), (&[3, 4], u2 / 8.0 * s)]));
    fill_relations(&mut om);
    CurvatureForms { omega2: om }
}

/// Closed form of `tr(Ω^τ ∧ Ω^τ)` for balanced parameters.
pub fn closed_form_trace(p: &BalancedParams, tau: f64) -> KForm {
    closed_form_trace_signed(p, tau, 1.0)
}

pub(crate) fn closed_form_trace_signed(p: &BalancedParams, tau: f64, sign: f64) -> KForm {
    let Combos { s, p1, p2, q1, q2, .. } = combos(p);
    let k = tau * (tau - 1.0).powi(2) / 4.0 * s;
    lin(&[
        (&[1, 2, 3, 6], -sign * p1),
        (&[1, 4, 5, 6], p1),
        (&[1, 2, 4, 6], p2),
        (&[1, 3, 5, 6], p2),
        (&[1, 2, 5, 6], q1),
        (&[1, 3, 4, 6], q2),
    ])
    .scale(k)
}

/// Closed form of `i∂∂̄ω = dd^c ω` for balanced parameters.
pub fn closed_form_ddc_omega(p: &BalancedParams) -> KForm {
    let Combos { p1, p2, q1, q2, .. } = combos(p);
    lin(&[
        (&[1, 2, 3, 6], -p1),
        (&[1, 4, 5, 6], p1),
        (&[1, 2, 4, 6], p2),
        (&[1, 3, 5, 6], p2),
        (&[1, 2, 5, 6], q1),
        (&[1, 3, 4, 6], q2),
    ])
    .scale(2.0)
}

/// `τ(τ-1)²/8`.
pub fn tau_factor(tau: f64) -> f64 {
    tau * (tau - 1.0).powi(2) / 8.0
}

/// `K(ω, τ) = τ(τ-1)²/8 · (4A22² + (A23+A32)² + (A24-A35)²)`.
#[allow(non_snake_case)]
pub fn proportionality_K(p: &BalancedParams, tau: f64) -> f64 {
    tau_factor(tau) * p.norm_aplus_sq()
}

/// `K` through `tr(S(A)²)` with `S(A) = A^+` the symmetric part of the matrix.
pub fn proportionality_k_from_matrix(a: &Matrix4<f64>, tau: f64) -> f64 {
    let plus = matrix_parts(a).plus;
    tau_factor(tau) * (plus * plus).trace()
}

/// Least-squares ratio `K` with `tr(Ω ∧ Ω) ≈ K dd^c ω` for arbitrary structure
/// constants, together with the max-norm residual. Returns `None` when
/// `dd^c ω` vanishes.
pub fn generic_proportionality(c: &StructureConstants, tau: f64) -> Option<(f64, f64)> {
    let trace = generic_trace(c, tau);
    let ddc = c
        .del_delbar(&exterior::reference_fundamental_form())
        .expect("degree 2");
    let nn = ddc.dot(&ddc);
    if nn.sqrt() <= 1e-14 * c.max_abs().powi(2).max(1e-300) {
        return None;
    }
    let k = trace.dot(&ddc) / nn;
    let residual = (&trace - &ddc.scale(k)).max_abs();
    Some((k, residual))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstantonStatus {
    FlatInstanton,
    NotInstanton,
    KahlerInstanton,
    /// Instanton conditions hold with non-zero curvature on a non-Kähler
    /// structure; never produced for balanced parameters.
    CurvedInstanton,
}

/// Instanton conditions for `∇^τ`: `Ω(e_1,e_6) + Ω(e_2,e_5) + Ω(e_3,e_4) = 0`
/// and no `(2,0)` or `(0,2)` components.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstantonReport {
    pub status: InstantonStatus,
    pub trace_residual: f64,
    pub type_20_residual: f64,
    pub curvature_norm: f64,
}

pub fn instanton_report(p: &BalancedParams, tau: f64) -> InstantonReport {
    let c = p.structure_constants();
    let omega = curvature_forms(&gauduchon_forms(&c, tau), &c);
    let scale = (1.0 + p.max_abs()).powi(2) * (1.0 + tau.abs()).powi(3);
    let tol = 1e-10 * scale;
    let mut trace_residual = 0.0f64;
    let mut type_20_residual = 0.0f64;
    for i in 0..DIM {
        for j in (i + 1)..DIM {
            let f = &omega.omega2[i][j];
            let contraction = f.coeff(&[1, 6]) + f.coeff(&[2, 5]) + f.coeff(&[3, 4]);
            trace_residual = trace_residual.max(contraction.abs());
            let fc = f.to_complex();
            let p20 = exterior::bidegree_project(&fc, 2, 0).expect("degree 2");
            let p02 = exterior::bidegree_project(&fc, 0, 2).expect("degree 2");
            type_20_residual = type_20_residual.max(p20.max_abs()).max(p02.max_abs());
        }
    }
    let curvature_norm = omega.max_abs();
    let instanton = trace_residual <= tol && type_20_residual <= tol;
    let flat = curvature_norm <= tol;
    let is_one = (tau - 1.0).abs() <= 1e-12;
    let status = if !instanton {
        InstantonStatus::NotInstanton
    } else if p.kahler_check() && !(is_one && p.max_abs() == 0.0) {
        InstantonStatus::KahlerInstanton
    } else if flat {
        InstantonStatus::FlatInstanton
    } else {
        InstantonStatus::CurvedInstanton
    };
    InstantonReport {
        status,
        trace_residual,
        type_20_residual,
        curvature_norm,
    }
}

pub fn instanton_check(p: &BalancedParams, tau: f64) -> InstantonStatus {
    instanton_report(p, tau).status
}

/// `‖θ^1_6 + θ^2_5 + θ^3_4‖`, which vanishes iff `∇Ψ = 0`.
pub fn su3_check(sigma: &ConnectionForms) -> f64 {
    let s = sigma.get(1, 6) + sigma.get(2, 5) + sigma.get(3, 4);
    s.norm()
}
