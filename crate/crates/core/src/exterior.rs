//! Exterior calculus on a fixed 6-dimensional frame `{e_1, ..., e_6}` and its
//! coframe `{e^1, ..., e^6}`.
//!
//! Forms are stored densely: a `k`-form holds `binomial(6, k)` coefficients
//! indexed by strictly increasing multi-indices in lexicographic order. Public
//! index arguments are 1-based frame labels (`&[1, 6]` is `e^{16}`).
//!
//! The complex structure acts on the coframe by `J e^i = e^{7-i}` and
//! `J e^{7-i} = -e^i` for `i = 1, 2, 3`, and on `r`-forms argument-wise,
//! `(Jα)(X_1, ..., X_r) = α(J^{-1}X_1, ..., J^{-1}X_r)`. On vectors this is
//! `J e_i = e_{7-i}`. The holomorphic coframe is `ζ^j = e^j + i e^{7-j}`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Real dimension of the underlying vector space.
pub const DIM: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExteriorError {
    #[error("invalid wedge: degree {lhs} + degree {rhs} exceeds {DIM}")]
    DegreeOverflow { lhs: usize, rhs: usize },
    #[error("degree {0} is out of range 0..={DIM}")]
    InvalidDegree(usize),
    #[error("a {degree}-form needs {expected} coefficients, got {got}")]
    CoeffLength {
        degree: usize,
        expected: usize,
        got: usize,
    },
    #[error("bidegree ({p},{q}) does not match form degree {degree}")]
    BidegreeMismatch { p: usize, q: usize, degree: usize },
    #[error("expected a {expected}-form, got a {got}-form")]
    WrongDegree { expected: usize, got: usize },
    #[error("Lefschetz map is singular (smallest singular value {sigma_min:e}); the (1,1)-form is not positive")]
    SingularLefschetz { sigma_min: f64 },
    #[error("4-form is not in the image of the Lefschetz map (residual {residual:e})")]
    LefschetzResidual { residual: f64 },
}

pub type Result<T> = std::result::Result<T, ExteriorError>;

/// Scalar type of form coefficients: `f64` or `Complex64`.
pub trait Coeff:
    Copy
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    fn zero() -> Self;
    fn from_f64(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn is_zero(self) -> bool {
        self == Self::zero()
    }
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Coeff for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

struct Tables {
    masks: [Vec<u8>; DIM + 1],
    position: [usize; 1 << DIM],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut masks: [Vec<u8>; DIM + 1] = Default::default();
        // lexicographic order on sorted index tuples
        fn rec(start: usize, k: usize, acc: u8, out: &mut Vec<u8>) {
            if k == 0 {
                out.push(acc);
                return;
            }
            for i in start..DIM {
                rec(i + 1, k - 1, acc | (1 << i), out);
            }
        }
        for (k, slot) in masks.iter_mut().enumerate() {
            rec(0, k, 0, slot);
        }
        let mut position = [0usize; 1 << DIM];
        for list in &masks {
            for (p, &m) in list.iter().enumerate() {
                position[m as usize] = p;
            }
        }
        Tables { masks, position }
    })
}

/// Multi-index masks of degree `k` in storage order.
pub fn basis_masks(k: usize) -> &'static [u8] {
    &tables().masks[k]
}

fn position(mask: u8) -> usize {
    tables().position[mask as usize]
}

/// Number of coefficients of a `k`-form.
pub fn dimension(k: usize) -> usize {
    basis_masks(k).len()
}

/// Sign of `e^{m1} ∧ e^{m2}` relative to `e^{m1|m2}`; zero if they overlap.
pub fn wedge_sign(m1: u8, m2: u8) -> i32 {
    if m1 & m2 != 0 {
        return 0;
    }
    let mut swaps = 0u32;
    for b in 0..DIM {
        if m2 >> b & 1 == 1 {
            swaps += (m1 >> (b + 1)).count_ones();
        }
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

fn mask_bits(mask: u8) -> impl Iterator<Item = usize> {
    (0..DIM).filter(move |b| mask >> b & 1 == 1)
}

/// 1-based labels of a mask, e.g. `0b100001 -> [1, 6]`.
pub fn mask_labels(mask: u8) -> Vec<usize> {
    mask_bits(mask).map(|b| b + 1).collect()
}

fn mask_from_labels(labels: &[usize]) -> Option<(u8, i32)> {
    let mut mask = 0u8;
    let mut sign = 1;
    for &l in labels {
        assert!((1..=DIM).contains(&l), "frame label {l} out of range 1..=6");
        let bit = 1u8 << (l - 1);
        if mask & bit != 0 {
            return None;
        }
        sign *= wedge_sign(mask, bit);
        mask |= bit;
    }
    Some((mask, sign))
}

/// An exterior form on the fixed frame.
#[derive(Clone, PartialEq)]
pub struct Form<T> {
    degree: usize,
    coeffs: Vec<T>,
}

/// Real exterior form.
pub type KForm = Form<f64>;
/// Complex exterior form.
pub type ComplexForm = Form<Complex64>;

impl<T: Coeff> Form<T> {
    pub fn zero(degree: usize) -> Self {
        assert!(degree <= DIM, "degree {degree} out of range");
        Self {
            degree,
            coeffs: vec![T::zero(); dimension(degree)],
        }
    }

    pub fn from_coeffs(degree: usize, coeffs: Vec<T>) -> Result<Self> {
        if degree > DIM {
            return Err(ExteriorError::InvalidDegree(degree));
        }
        let expected = dimension(degree);
        if coeffs.len() != expected {
            return Err(ExteriorError::CoeffLength {
                degree,
                expected,
                got: coeffs.len(),
            });
        }
        Ok(Self { degree, coeffs })
    }

    /// The basis product `e^{l_1} ∧ ... ∧ e^{l_k}` for 1-based labels in any order.
    pub fn basis(labels: &[usize]) -> Self {
        Self::term(labels, T::from_f64(1.0))
    }

    /// `value · e^{l_1} ∧ ... ∧ e^{l_k}`.
    pub fn term(labels: &[usize], value: T) -> Self {
        let mut f = Self::zero(labels.len());
        if let Some((mask, sign)) = mask_from_labels(labels) {
            f.coeffs[position(mask)] = value * T::from_f64(sign as f64);
        }
        f
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff_by_mask(&self, mask: u8) -> T {
        debug_assert_eq!(mask.count_ones() as usize, self.degree);
        self.coeffs[position(mask)]
    }

    fn add_by_mask(&mut self, mask: u8, value: T) {
        self.coeffs[position(mask)] += value;
    }

    /// Coefficient of `e^{l_1 ... l_k}`, with labels given in any order.
    pub fn coeff(&self, labels: &[usize]) -> T {
        assert_eq!(labels.len(), self.degree, "label count must match degree");
        match mask_from_labels(labels) {
            Some((mask, sign)) => self.coeffs[position(mask)] * T::from_f64(sign as f64),
            None => T::zero(),
        }
    }

    /// Non-zero terms as (mask, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (u8, T)> + '_ {
        basis_masks(self.degree)
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| !c.is_zero())
            .map(|(&m, &c)| (m, c))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.modulus()).fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.modulus().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    /// Exterior product.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        let degree = self.degree + other.degree;
        if degree > DIM {
            return Err(ExteriorError::DegreeOverflow {
                lhs: self.degree,
                rhs: other.degree,
            });
        }
        let mut out = Self::zero(degree);
        for (m1, a) in self.terms() {
            for (m2, b) in other.terms() {
                let s = wedge_sign(m1, m2);
                if s != 0 {
                    out.add_by_mask(m1 | m2, a * b * T::from_f64(s as f64));
                }
            }
        }
        Ok(out)
    }

    /// Evaluates the form on `degree` vectors (determinant convention,
    /// `e^{12}(e_1, e_2) = 1`).
    pub fn eval(&self, vectors: &[[f64; DIM]]) -> T {
        assert_eq!(vectors.len(), self.degree);
        if self.degree == 0 {
            return self.coeffs[0];
        }
        let k = self.degree;
        let mut total = T::zero();
        for (mask, c) in self.terms() {
            let rows: Vec<usize> = mask_bits(mask).collect();
            let sub = DMatrix::from_fn(k, k, |r, s| vectors[s][rows[r]]);
            total += c * T::from_f64(sub.determinant());
        }
        total
    }

    /// Argument-wise action of the complex structure.
    pub fn j_action(&self) -> Self {
        let mut out = Self::zero(self.degree);
        for (mask, c) in self.terms() {
            let (image, sign) = j_on_mask(mask);
            out.add_by_mask(image, c * T::from_f64(sign as f64));
        }
        out
    }
}

/// `J e^{mask} = sign · e^{image}`.
fn j_on_mask(mask: u8) -> (u8, i32) {
    let mut image = 0u8;
    let mut sign = 1;
    for b in mask_bits(mask) {
        let (target, s) = if b < 3 { (DIM - 1 - b, 1) } else { (DIM - 1 - b, -1) };
        let bit = 1u8 << target;
        sign *= s * wedge_sign(image, bit);
        image |= bit;
    }
    (image, sign)
}

impl KForm {
    pub fn to_complex(&self) -> ComplexForm {
        ComplexForm {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.degree, other.degree);
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }
}

impl ComplexForm {
    pub fn re(&self) -> KForm {
        KForm {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c.re).collect(),
        }
    }

    pub fn im(&self) -> KForm {
        KForm {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c.im).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn from_parts(re: &KForm, im: &KForm) -> Self {
        assert_eq!(re.degree, im.degree);
        Self {
            degree: re.degree,
            coeffs: re
                .coeffs
                .iter()
                .zip(&im.coeffs)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
        }
    }
}

impl<T: Coeff> fmt::Debug for Form<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-form[", self.degree)?;
        let mut first = true;
        for (mask, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let label: String = mask_labels(mask).iter().map(|l| l.to_string()).collect();
            write!(f, "{c:?} e^{label}")?;
        }
        write!(f, "]")
    }
}

macro_rules! impl_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl<T: Coeff> $tr<&Form<T>> for &Form<T> {
            type Output = Form<T>;
            fn $method(self, rhs: &Form<T>) -> Form<T> {
                assert_eq!(self.degree, rhs.degree, "degree mismatch");
                Form {
                    degree: self.degree,
                    coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(&a, &b)| a $op b).collect(),
                }
            }
        }
        impl<T: Coeff> $tr<Form<T>> for Form<T> {
            type Output = Form<T>;
            fn $method(self, rhs: Form<T>) -> Form<T> {
                (&self).$method(&rhs)
            }
        }
        impl<T: Coeff> $tr<&Form<T>> for Form<T> {
            type Output = Form<T>;
            fn $method(self, rhs: &Form<T>) -> Form<T> {
                (&self).$method(rhs)
            }
        }
    };
}

impl_binop!(Add, add, +);
impl_binop!(Sub, sub, -);

impl<T: Coeff> AddAssign<&Form<T>> for Form<T> {
    fn add_assign(&mut self, rhs: &Form<T>) {
        assert_eq!(self.degree, rhs.degree, "degree mismatch");
        for (a, &b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl<T: Coeff> SubAssign<&Form<T>> for Form<T> {
    fn sub_assign(&mut self, rhs: &Form<T>) {
        assert_eq!(self.degree, rhs.degree, "degree mismatch");
        for (a, &b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl<T: Coeff> Neg for Form<T> {
    type Output = Form<T>;
    fn neg(self) -> Form<T> {
        self.scale(T::from_f64(-1.0))
    }
}

impl<T: Coeff> Neg for &Form<T> {
    type Output = Form<T>;
    fn neg(self) -> Form<T> {
        self.scale(T::from_f64(-1.0))
    }
}

impl<T: Coeff> Mul<T> for &Form<T> {
    type Output = Form<T>;
    fn mul(self, rhs: T) -> Form<T> {
        self.scale(rhs)
    }
}

impl<T: Coeff> Mul<T> for Form<T> {
    type Output = Form<T>;
    fn mul(self, rhs: T) -> Form<T> {
        self.scale(rhs)
    }
}

/// Structure constants `c^k_{ij}` with `de^k = Σ_{i<j} c^k_{ij} e^{ij}`.
///
/// Indices are 0-based in the array, `c[k][i][j]`. With the convention
/// `dα(X, Y) = Xα(Y) - Yα(X) - α([X, Y])` the bracket reads
/// `[e_i, e_j] = -Σ_k c^k_{ij} e_k`.
#[derive(Clone, PartialEq, Debug)]
pub struct StructureConstants {
    c: [[[f64; DIM]; DIM]; DIM],
}

impl Default for StructureConstants {
    fn default() -> Self {
        Self::zero()
    }
}

impl StructureConstants {
    pub fn zero() -> Self {
        Self {
            c: [[[0.0; DIM]; DIM]; DIM],
        }
    }

    /// Builds constants from an array that is antisymmetrized in `(i, j)`:
    /// only entries with `i < j` are read.
    pub fn from_upper(c: [[[f64; DIM]; DIM]; DIM]) -> Self {
        let mut out = Self::zero();
        for k in 0..DIM {
            for i in 0..DIM {
                for j in (i + 1)..DIM {
                    out.set(k, i, j, c[k][i][j]);
                }
            }
        }
        out
    }

    /// Sets `c^k_{ij}` and its antisymmetric partner (0-based indices).
    pub fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        assert!(i != j || value == 0.0, "c^k_ii must vanish");
        self.c[k][i][j] = value;
        self.c[k][j][i] = -value;
    }

    /// `c^k_{ij}` (0-based indices).
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.c[k][i][j]
    }

    pub fn as_array(&self) -> &[[[f64; DIM]; DIM]; DIM] {
        &self.c
    }

    /// Components of `[e_i, e_j]` in the frame.
    pub fn bracket(&self, i: usize, j: usize) -> [f64; DIM] {
        std::array::from_fn(|k| -self.c[k][i][j])
    }

    /// Bracket of arbitrary vectors.
    pub fn bracket_vectors(&self, x: &[f64; DIM], y: &[f64; DIM]) -> [f64; DIM] {
        let mut out = [0.0; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o -= w * self.c[k][i][j];
                }
            }
        }
        out
    }

    /// Builds constants from a bracket given on frame pairs.
    pub fn from_bracket(bracket: impl Fn(usize, usize) -> [f64; DIM]) -> Self {
        let mut out = Self::zero();
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                let b = bracket(i, j);
                for (k, v) in b.iter().enumerate() {
                    out.set(k, i, j, -v);
                }
            }
        }
        out
    }

    /// `de^k` for a 0-based coframe index.
    pub fn d_coframe(&self, k: usize) -> KForm {
        let mut f = KForm::zero(2);
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                let v = self.c[k][i][j];
                if v != 0.0 {
                    f.add_by_mask((1 << i) | (1 << j), v);
                }
            }
        }
        f
    }

    /// Max-norm of the cyclic Jacobi sum over all frame triples.
    pub fn jacobi_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                for k in (j + 1)..DIM {
                    let e = |a: usize| -> [f64; DIM] { std::array::from_fn(|b| (a == b) as u8 as f64) };
                    let t1 = self.bracket_vectors(&self.bracket(i, j), &e(k));
                    let t2 = self.bracket_vectors(&self.bracket(j, k), &e(i));
                    let t3 = self.bracket_vectors(&self.bracket(k, i), &e(j));
                    for n in 0..DIM {
                        worst = worst.max((t1[n] + t2[n] + t3[n]).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.c
            .iter()
            .flatten()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Entrywise difference, as a tangent vector to the space of brackets.
    pub fn sub(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for k in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    out.c[k][i][j] = self.c[k][i][j] - other.c[k][i][j];
                }
            }
        }
        out
    }

    /// Exterior derivative of a left-invariant form, extended from the
    /// coframe as a degree-one antiderivation.
    pub fn d<T: Coeff>(&self, form: &Form<T>) -> Result<Form<T>> {
        let deg = form.degree;
        if deg + 1 > DIM {
            return Err(ExteriorError::DegreeOverflow { lhs: deg, rhs: 1 });
        }
        let mut out = Form::<T>::zero(deg + 1);
        for (mask, value) in form.terms() {
            for (s, b) in mask_bits(mask).enumerate() {
                let below = mask & ((1u8 << b) - 1);
                let above = mask & !((1u8 << (b + 1)) - 1);
                let rest = below | above;
                let sign_s = if s % 2 == 0 { 1.0 } else { -1.0 };
                for i in 0..DIM {
                    for j in (i + 1)..DIM {
                        let c = self.c[b][i][j];
                        if c == 0.0 {
                            continue;
                        }
                        let pair = (1u8 << i) | (1u8 << j);
                        if pair & rest != 0 {
                            continue;
                        }
                        let sign = wedge_sign(below, pair) * wedge_sign(below | pair, above);
                        out.add_by_mask(rest | pair, value * T::from_f64(sign_s * sign as f64 * c));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Real Dolbeault operator `d^c = (-1)^r J d J` on `r`-forms.
    pub fn dc<T: Coeff>(&self, form: &Form<T>) -> Result<Form<T>> {
        let sign = if form.degree % 2 == 0 { 1.0 } else { -1.0 };
        Ok(self.d(&form.j_action())?.j_action().scale(T::from_f64(sign)))
    }

    /// `dd^c α`, the operator written `i∂∂̄` on (1,1)-forms throughout the
    /// crate. With the bidegree splitting below it equals `2i∂∂̄`.
    pub fn del_delbar<T: Coeff>(&self, form: &Form<T>) -> Result<Form<T>> {
        self.d(&self.dc(form)?)
    }

    /// `∂α`: the `(p+1, q)` parts of `d` applied to each `(p, q)` part.
    pub fn partial(&self, form: &ComplexForm) -> Result<ComplexForm> {
        self.split_d(form, true)
    }

    /// `∂̄α`.
    pub fn partial_bar(&self, form: &ComplexForm) -> Result<ComplexForm> {
        self.split_d(form, false)
    }

    fn split_d(&self, form: &ComplexForm, holomorphic: bool) -> Result<ComplexForm> {
        let r = form.degree;
        let mut out = ComplexForm::zero(r + 1);
        for p in 0..=r {
            let q = r - p;
            let piece = bidegree_project(form, p, q)?;
            if piece.is_zero() {
                continue;
            }
            let dp = self.d(&piece)?;
            let (pp, qq) = if holomorphic { (p + 1, q) } else { (p, q + 1) };
            out += &bidegree_project(&dp, pp, qq)?;
        }
        Ok(out)
    }
}

struct HoloBasis {
    to_holo: Vec<DMatrix<Complex64>>,
    from_holo: Vec<DMatrix<Complex64>>,
}

fn exterior_power(t: &DMatrix<Complex64>, k: usize) -> DMatrix<Complex64> {
    let masks = basis_masks(k);
    let n = masks.len();
    if k == 0 {
        return DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    }
    DMatrix::from_fn(n, n, |r, c| {
        let rows: Vec<usize> = mask_bits(masks[r]).collect();
        let cols: Vec<usize> = mask_bits(masks[c]).collect();
        DMatrix::from_fn(k, k, |a, b| t[(rows[a], cols[b])]).determinant()
    })
}

fn holo_basis() -> &'static HoloBasis {
    static BASIS: OnceLock<HoloBasis> = OnceLock::new();
    BASIS.get_or_init(|| {
        // f^j = ζ^j = e^j + i e^{7-j}, f^{3+j} = conj(ζ^j); e^i = Σ_a T[a][i] f^a
        let half = Complex64::new(0.5, 0.0);
        let i_half = Complex64::new(0.0, 0.5);
        let mut t = DMatrix::from_element(DIM, DIM, Complex64::new(0.0, 0.0));
        let mut tinv = t.clone();
        for j in 0..3 {
            let jb = DIM - 1 - j;
            t[(j, j)] = half;
            t[(3 + j, j)] = half;
            t[(j, jb)] = -i_half;
            t[(3 + j, jb)] = i_half;
            tinv[(j, j)] = Complex64::new(1.0, 0.0);
            tinv[(jb, j)] = Complex64::new(0.0, 1.0);
            tinv[(j, 3 + j)] = Complex64::new(1.0, 0.0);
            tinv[(jb, 3 + j)] = Complex64::new(0.0, -1.0);
        }
        HoloBasis {
            to_holo: (0..=DIM).map(|k| exterior_power(&t, k)).collect(),
            from_holo: (0..=DIM).map(|k| exterior_power(&tinv, k)).collect(),
        }
    })
}

/// Component of bidegree `(p, q)` with respect to the holomorphic coframe
/// `ζ^j = e^j + i e^{7-j}`.
pub fn bidegree_project(form: &ComplexForm, p: usize, q: usize) -> Result<ComplexForm> {
    let k = form.degree;
    if p + q != k {
        return Err(ExteriorError::BidegreeMismatch { p, q, degree: k });
    }
    let basis = holo_basis();
    let coeffs = DVector::from_column_slice(&form.coeffs);
    let mut holo = &basis.to_holo[k] * coeffs;
    for (idx, &mask) in basis_masks(k).iter().enumerate() {
        let hp = (mask & 0b000111).count_ones() as usize;
        if hp != p {
            holo[idx] = Complex64::new(0.0, 0.0);
        }
    }
    let back = &basis.from_holo[k] * holo;
    Ok(ComplexForm {
        degree: k,
        coeffs: back.iter().copied().collect(),
    })
}

/// All bidegree components `(p, k-p)` for `p = 0..=k`.
pub fn bidegree_split(form: &ComplexForm) -> Vec<ComplexForm> {
    (0..=form.degree)
        .map(|p| bidegree_project(form, p, form.degree - p).expect("p + q = degree"))
        .collect()
}

/// Real `(1,1)`-forms: a basis of the `J`-invariant 2-forms (dimension 9).
pub fn real_11_basis() -> &'static [KForm] {
    static BASIS: OnceLock<Vec<KForm>> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut out = Vec::new();
        let mut seen = 0u64;
        for &mask in basis_masks(2) {
            if seen >> mask & 1 == 1 {
                continue;
            }
            let (image, sign) = j_on_mask(mask);
            seen |= 1 << mask | 1 << image;
            let mut f = KForm::zero(2);
            f.add_by_mask(mask, 1.0);
            if image == mask {
                if sign == 1 {
                    out.push(f);
                }
            } else {
                f.add_by_mask(image, sign as f64);
                out.push(f);
            }
        }
        out
    })
}

/// The fundamental form `e^{16} + e^{25} + e^{34}` of the reference metric.
pub fn reference_fundamental_form() -> KForm {
    KForm::basis(&[1, 6]) + KForm::basis(&[2, 5]) + KForm::basis(&[3, 4])
}

/// The `(3,0)`-form `(e^1 + i e^6) ∧ (e^2 + i e^5) ∧ (e^3 + i e^4)`.
pub fn holomorphic_volume_form() -> ComplexForm {
    let zeta = |j: usize| {
        ComplexForm::basis(&[j]) + ComplexForm::term(&[DIM + 1 - j], Complex64::new(0.0, 1.0))
    };
    zeta(1)
        .wedge(&zeta(2))
        .and_then(|f| f.wedge(&zeta(3)))
        .expect("degree 3")
}

/// Factor of the Lefschetz map `β ↦ LEFSCHETZ_FACTOR · ν ∧ β` whose inverse
/// realizes the contraction `ι_ν` on `(2,2)`-forms.
pub const LEFSCHETZ_FACTOR: f64 = 2.0;

/// Solves `2 ν ∧ β = Φ` for a real `(1,1)`-form `β`.
pub fn lefschetz_solve(phi: &KForm, nu: &KForm) -> Result<KForm> {
    if nu.degree != 2 {
        return Err(ExteriorError::WrongDegree {
            expected: 2,
            got: nu.degree,
        });
    }
    if phi.degree != 4 {
        return Err(ExteriorError::WrongDegree {
            expected: 4,
            got: phi.degree,
        });
    }
    let basis = real_11_basis();
    let n4 = dimension(4);
    let mut m = DMatrix::<f64>::zeros(n4, basis.len());
    for (col, b) in basis.iter().enumerate() {
        let img = nu.wedge(b)?.scale(LEFSCHETZ_FACTOR);
        for (row, v) in img.coeffs.iter().enumerate() {
            m[(row, col)] = *v;
        }
    }
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin <= 1e-12 * smax {
        return Err(ExteriorError::SingularLefschetz { sigma_min: smin });
    }
    let rhs = DVector::from_column_slice(&phi.coeffs);
    let qr = m.clone().qr();
    let x = qr
        .r()
        .solve_upper_triangular(&(qr.q().transpose() * &rhs))
        .ok_or(ExteriorError::SingularLefschetz { sigma_min: smin })?;
    let mut beta = KForm::zero(2);
    for (b, &w) in basis.iter().zip(x.iter()) {
        beta += &b.scale(w);
    }
    let residual = (&m * &x - &rhs).amax();
    let scale = 1.0f64.max(phi.max_abs());
    if residual > 1e-10 * scale {
        return Err(ExteriorError::LefschetzResidual { residual });
    }
    Ok(beta)
}

/// Complex version of [`lefschetz_solve`], applied to real and imaginary parts.
pub fn lefschetz_solve_complex(phi: &ComplexForm, nu: &KForm) -> Result<ComplexForm> {
    let re = lefschetz_solve(&phi.re(), nu)?;
    let im = lefschetz_solve(&phi.im(), nu)?;
    Ok(ComplexForm::from_parts(&re, &im))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_order_is_lexicographic() {
        let labels: Vec<Vec<usize>> = basis_masks(2).iter().map(|&m| mask_labels(m)).collect();
        assert_eq!(labels[0], vec![1, 2]);
        assert_eq!(labels[1], vec![1, 3]);
        assert_eq!(labels[5], vec![2, 3]);
        assert_eq!(labels[14], vec![5, 6]);
        for k in 0..=DIM {
            let n = (0..k).fold(1usize, |acc, i| acc * (DIM - i) / (i + 1));
            assert_eq!(dimension(k), n);
        }
    }

    #[test]
    fn wedge_basis_products() {
        let e16 = KForm::basis(&[1]).wedge(&KForm::basis(&[6])).unwrap();
        assert_eq!(e16, KForm::basis(&[1, 6]));
        let a = KForm::basis(&[1, 6]).wedge(&KForm::basis(&[2, 5])).unwrap();
        let b = KForm::basis(&[2, 5]).wedge(&KForm::basis(&[1, 6])).unwrap();
        assert_eq!(a, KForm::basis(&[1, 2, 5, 6]));
        assert_eq!(a, b);
        assert_eq!(KForm::basis(&[6, 1]), -KForm::basis(&[1, 6]));
        assert!(KForm::basis(&[2, 2]).is_zero());
    }

    #[test]
    fn omega_cubed() {
        let w = reference_fundamental_form();
        let w3 = w.wedge(&w).unwrap().wedge(&w).unwrap();
        assert_eq!(w3, KForm::basis(&[1, 2, 3, 4, 5, 6]).scale(6.0));
    }

    #[test]
    fn wedge_overflow_is_an_error() {
        let a = KForm::basis(&[1, 2, 3, 4]);
        let b = KForm::basis(&[5, 6]).wedge(&KForm::basis(&[1])).unwrap();
        assert!(matches!(
            a.wedge(&b),
            Err(ExteriorError::DegreeOverflow { lhs: 4, rhs: 3 })
        ));
    }

    #[test]
    fn eval_uses_determinant_convention() {
        let e = |i: usize| -> [f64; DIM] { std::array::from_fn(|b| (b == i - 1) as u8 as f64) };
        let f = KForm::basis(&[3, 4, 6]);
        assert_eq!(f.eval(&[e(3), e(4), e(6)]), 1.0);
        assert_eq!(f.eval(&[e(6), e(4), e(3)]), -1.0);
        assert_eq!(f.eval(&[e(6), e(3), e(4)]), 1.0);
    }

    #[test]
    fn j_on_coframe() {
        assert_eq!(KForm::basis(&[1]).j_action(), KForm::basis(&[6]));
        assert_eq!(KForm::basis(&[6]).j_action(), -KForm::basis(&[1]));
        assert_eq!(KForm::basis(&[2]).j_action(), KForm::basis(&[5]));
        assert_eq!(KForm::basis(&[4]).j_action(), -KForm::basis(&[3]));
        let w = reference_fundamental_form();
        assert_eq!(w.j_action(), w);
    }

    #[test]
    fn j_factorwise_matches_argumentwise() {
        // J e^{ab} = J e^a ∧ J e^b, and (Jα)(X,Y) = α(J^{-1}X, J^{-1}Y)
        let jinv = |v: [f64; DIM]| -> [f64; DIM] {
            // J e_i = e_{7-i} (i <= 3), J e_{7-i} = -e_i, J^{-1} = -J
            let mut out = [0.0; DIM];
            for i in 0..3 {
                out[DIM - 1 - i] -= v[i];
                out[i] += v[DIM - 1 - i];
            }
            out
        };
        let e = |i: usize| -> [f64; DIM] { std::array::from_fn(|b| (b == i) as u8 as f64) };
        for &mask in basis_masks(2) {
            let labels = mask_labels(mask);
            let f = KForm::basis(&labels);
            let factorwise = KForm::basis(&[labels[0]])
                .j_action()
                .wedge(&KForm::basis(&[labels[1]]).j_action())
                .unwrap();
            assert_eq!(f.j_action(), factorwise);
            for a in 0..DIM {
                for b in 0..DIM {
                    let lhs = f.j_action().eval(&[e(a), e(b)]);
                    let rhs = f.eval(&[jinv(e(a)), jinv(e(b))]);
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn j_squared_is_graded_sign() {
        for k in 0..=DIM {
            for &mask in basis_masks(k) {
                let f = KForm::basis(&mask_labels(mask));
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(f.j_action().j_action(), f.scale(sign));
            }
        }
    }

    #[test]
    fn bidegree_of_standard_forms() {
        let w = reference_fundamental_form().to_complex();
        let w11 = bidegree_project(&w, 1, 1).unwrap();
        assert!((&w11 - &w).max_abs() < 1e-14);
        let psi = holomorphic_volume_form();
        let p30 = bidegree_project(&psi, 3, 0).unwrap();
        assert!((&p30 - &psi).max_abs() < 1e-14);
        assert!(bidegree_project(&psi, 2, 1).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn bidegree_of_e12_reconstructs() {
        let f = ComplexForm::basis(&[1, 2]);
        let parts = bidegree_split(&f);
        assert_eq!(parts.len(), 3);
        for part in &parts {
            assert!(part.max_abs() > 0.1);
        }
        let mut sum = ComplexForm::zero(2);
        for part in &parts {
            sum += part;
        }
        assert!((&sum - &f).max_abs() < 1e-14);
        // (2,0) part of e^{12} is ¼ ζ^1∧ζ^2 = ¼(e^{12} + i e^{15} - i e^{26} + e^{56})
        let p20 = &parts[2];
        assert!((p20.coeff(&[1, 2]) - c(0.25, 0.0)).norm() < 1e-14);
        assert!((p20.coeff(&[1, 5]) - c(0.0, 0.25)).norm() < 1e-14);
        assert!((p20.coeff(&[2, 6]) - c(0.0, -0.25)).norm() < 1e-14);
    }

    #[test]
    fn bidegree_mismatch_is_rejected() {
        let f = ComplexForm::basis(&[1, 2]);
        assert!(matches!(
            bidegree_project(&f, 2, 1),
            Err(ExteriorError::BidegreeMismatch { .. })
        ));
    }

    #[test]
    fn bidegree_eigenvalues_under_j() {
        // (p,q)-forms satisfy J α = i^{q-p} α with the argument-wise action
        let f = ComplexForm::from_coeffs(
            3,
            (0..20).map(|n| c((n as f64 * 0.37).sin(), (n as f64 * 0.11).cos())).collect(),
        )
        .unwrap();
        for p in 0..=3 {
            let q = 3 - p;
            let piece = bidegree_project(&f, p, q).unwrap();
            let eig = Complex64::i().powi(q as i32 - p as i32);
            assert!((&piece.j_action() - &piece.scale(eig)).max_abs() < 1e-13);
        }
    }

    #[test]
    fn real_11_basis_has_dimension_nine() {
        let b = real_11_basis();
        assert_eq!(b.len(), 9);
        for f in b {
            assert_eq!(&f.j_action(), f);
        }
    }

    #[test]
    fn lefschetz_round_trip_on_reference_metric() {
        let nu = reference_fundamental_form();
        let beta0 = KForm::basis(&[1, 6]).scale(0.3)
            + KForm::basis(&[2, 3]) + KForm::basis(&[5, 4])
            + KForm::basis(&[3, 4]).scale(-2.0);
        assert_eq!(beta0.j_action(), beta0);
        let phi = nu.wedge(&beta0).unwrap().scale(2.0);
        let beta = lefschetz_solve(&phi, &nu).unwrap();
        assert!((&beta - &beta0).max_abs() < 1e-12);
    }

    #[test]
    fn lefschetz_rejects_degenerate_form() {
        let nu = KForm::basis(&[1, 6]);
        let phi = KForm::basis(&[1, 2, 5, 6]);
        assert!(matches!(
            lefschetz_solve(&phi, &nu),
            Err(ExteriorError::SingularLefschetz { .. })
        ));
    }
}
