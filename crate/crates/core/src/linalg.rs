//! Linear algebra on ℂ₁ⁿ⁺¹: the signature-(1, n) Hermitian form, the
//! pseudo-unitary group U(1, n), its Lie algebra 𝔲(1, n) and the matrix
//! exponential.
//!
//! Coordinates are indexed `0..=n`; index 0 carries the negative sign.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;

/// The imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A coordinate vector in ℂ₁ⁿ⁺¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndefVector {
    coords: Vec<C64>,
}

impl IndefVector {
    /// Fails unless there are at least two coordinates (n ≥ 1).
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a vector in C_1^(n+1) needs n >= 1, got {} coordinates",
                coords.len()
            )));
        }
        Ok(Self { coords })
    }

    pub(crate) fn from_vec(coords: Vec<C64>) -> Self {
        debug_assert!(coords.len() >= 2);
        Self { coords }
    }

    pub fn zeros(dim_n: usize) -> Self {
        Self {
            coords: vec![C64::new(0.0, 0.0); dim_n + 1],
        }
    }

    /// The standard basis vector e_k.
    pub fn basis(dim_n: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim_n);
        v.coords[k] = c(1.0);
        v
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| c(x)).collect())
    }

    pub fn dim_n(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [C64] {
        &mut self.coords
    }

    pub fn to_dvector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.coords)
    }

    pub fn from_dvector(v: &DVector<C64>) -> Self {
        Self::from_vec(v.iter().copied().collect())
    }

    /// Multiplication by the complex structure i.
    pub fn times_i(&self) -> Self {
        self.scale(I)
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::from_vec(self.coords.iter().map(|&a| a * z).collect())
    }

    pub fn conj(&self) -> Self {
        Self::from_vec(self.coords.iter().map(|a| a.conj()).collect())
    }

    /// Euclidean coordinate norm, used for residuals.
    pub fn euclid_norm(&self) -> f64 {
        self.coords.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Real coordinates (Re z₀, Im z₀, Re z₁, …).
    pub fn to_real_parts(&self) -> Vec<f64> {
        self.coords.iter().flat_map(|a| [a.re, a.im]).collect()
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(
            self.coords.len(),
            other.coords.len(),
            "IndefVector arithmetic on mismatched dimensions"
        );
        Self::from_vec(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }
}

macro_rules! impl_vec_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&IndefVector> for &IndefVector {
            type Output = IndefVector;
            fn $method(self, rhs: &IndefVector) -> IndefVector {
                self.zip_with(rhs, |a, b| a $op b)
            }
        }
        impl $trait<IndefVector> for IndefVector {
            type Output = IndefVector;
            fn $method(self, rhs: IndefVector) -> IndefVector {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&IndefVector> for IndefVector {
            type Output = IndefVector;
            fn $method(self, rhs: &IndefVector) -> IndefVector {
                (&self).$method(rhs)
            }
        }
        impl $trait<IndefVector> for &IndefVector {
            type Output = IndefVector;
            fn $method(self, rhs: IndefVector) -> IndefVector {
                self.$method(&rhs)
            }
        }
    };
}

impl_vec_binop!(Add, add, +);
impl_vec_binop!(Sub, sub, -);

impl Neg for IndefVector {
    type Output = IndefVector;
    fn neg(self) -> IndefVector {
        self.scale(c(-1.0))
    }
}

impl Neg for &IndefVector {
    type Output = IndefVector;
    fn neg(self) -> IndefVector {
        self.scale(c(-1.0))
    }
}

impl Mul<C64> for &IndefVector {
    type Output = IndefVector;
    fn mul(self, z: C64) -> IndefVector {
        self.scale(z)
    }
}

impl Mul<C64> for IndefVector {
    type Output = IndefVector;
    fn mul(self, z: C64) -> IndefVector {
        self.scale(z)
    }
}

impl Mul<f64> for &IndefVector {
    type Output = IndefVector;
    fn mul(self, x: f64) -> IndefVector {
        self.scale(c(x))
    }
}

impl Mul<f64> for IndefVector {
    type Output = IndefVector;
    fn mul(self, x: f64) -> IndefVector {
        self.scale(c(x))
    }
}

fn check_dims(z: &IndefVector, w: &IndefVector) -> Result<()> {
    if z.dim_n() != w.dim_n() {
        return Err(Error::DimensionMismatch {
            expected: z.dim_n(),
            found: w.dim_n(),
        });
    }
    Ok(())
}

/// ((z, w)) = −z₀w̄₀ + Σₖ zₖw̄ₖ, linear in the first slot.
pub fn herm_form(z: &IndefVector, w: &IndefVector) -> Result<C64> {
    check_dims(z, w)?;
    Ok(herm_unchecked(z, w))
}

pub(crate) fn herm_unchecked(z: &IndefVector, w: &IndefVector) -> C64 {
    let (a, b) = (z.coords(), w.coords());
    let head = -a[0] * b[0].conj();
    a[1..]
        .iter()
        .zip(&b[1..])
        .fold(head, |acc, (x, y)| acc + x * y.conj())
}

/// ⟨z, w⟩ = Re((z, w)).
pub fn real_form(z: &IndefVector, w: &IndefVector) -> Result<f64> {
    herm_form(z, w).map(|h| h.re)
}

pub(crate) fn real_unchecked(z: &IndefVector, w: &IndefVector) -> f64 {
    herm_unchecked(z, w).re
}

/// Scalar product of signature (2n+2, 2n+2) on ℂ₁ⁿ⁺¹ × ℂ₁ⁿ⁺¹:
/// −⟨X₋, Y₋⟩ + ⟨X₊, Y₊⟩.
pub fn pair_form(x: (&IndefVector, &IndefVector), y: (&IndefVector, &IndefVector)) -> Result<f64> {
    check_dims(x.0, x.1)?;
    check_dims(x.0, y.0)?;
    check_dims(x.0, y.1)?;
    Ok(-real_unchecked(x.0, y.0) + real_unchecked(x.1, y.1))
}

/// Whether w lies on H₁^{2n+1} = {((w, w)) = −1}.
pub fn is_anti_de_sitter(w: &IndefVector, tol: f64) -> bool {
    (herm_unchecked(w, w) + c(1.0)).norm() <= tol
}

/// S = diag(−1, 1, …, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignatureMatrix {
    dim_n: usize,
}

impl SignatureMatrix {
    pub fn new(dim_n: usize) -> Self {
        Self { dim_n }
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        let mut s = DMatrix::identity(self.dim_n + 1, self.dim_n + 1);
        s[(0, 0)] = c(-1.0);
        s
    }

    pub fn apply(&self, v: &IndefVector) -> IndefVector {
        let mut out = v.clone();
        out.coords_mut()[0] = -out.coords()[0];
        out
    }
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|a| a.norm()).fold(0.0, f64::max)
}

fn check_square(m: &DMatrix<C64>) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() < 2 {
        return Err(Error::InvalidInput(format!(
            "expected a square matrix of size n+1 >= 2, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return Err(Error::NonFinite("matrix"));
    }
    Ok(m.nrows() - 1)
}

/// ‖A*SA − S‖_max.
pub fn group_residual(a: &DMatrix<C64>) -> f64 {
    let s = SignatureMatrix::new(a.nrows() - 1).matrix();
    max_abs(&(a.adjoint() * &s * a - s))
}

/// ‖X*S + SX‖_max.
pub fn algebra_residual(x: &DMatrix<C64>) -> f64 {
    let s = SignatureMatrix::new(x.nrows() - 1).matrix();
    max_abs(&(x.adjoint() * &s + &s * x))
}

/// An element of U(1, n).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    matrix: DMatrix<C64>,
    tol: f64,
}

impl GroupElement {
    pub fn identity(dim_n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim_n + 1, dim_n + 1),
            tol: 0.0,
        }
    }

    pub fn dim_n(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn residual(&self) -> f64 {
        group_residual(&self.matrix)
    }

    pub fn apply(&self, v: &IndefVector) -> IndefVector {
        assert_eq!(v.dim_n(), self.dim_n(), "group element / vector dimension mismatch");
        IndefVector::from_dvector(&(&self.matrix * v.to_dvector()))
    }

    /// Product of two group elements; the tolerance is inflated by the
    /// operand norms so the bound stays meaningful for large boosts.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let matrix = &self.matrix * &other.matrix;
        let tol = scaled_tol(&matrix, tol::MEMBERSHIP.max(self.tol.max(other.tol)));
        GroupElement { matrix, tol }
    }

    pub fn inverse(&self) -> GroupElement {
        // A⁻¹ = S A* S
        let s = SignatureMatrix::new(self.dim_n()).matrix();
        GroupElement {
            matrix: &s * self.matrix.adjoint() * &s,
            tol: self.tol,
        }
    }
}

/// An element of 𝔲(1, n).
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    matrix: DMatrix<C64>,
    tol: f64,
}

impl AlgebraElement {
    pub fn zero(dim_n: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dim_n + 1, dim_n + 1),
            tol: 0.0,
        }
    }

    pub fn dim_n(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn residual(&self) -> f64 {
        algebra_residual(&self.matrix)
    }

    /// Linear combination Σ cₖ Xₖ of algebra elements of the same size.
    pub fn combine(terms: &[(f64, &AlgebraElement)]) -> Result<AlgebraElement> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidInput("empty linear combination".into()))?;
        let size = first.1.matrix.nrows();
        let mut m = DMatrix::zeros(size, size);
        let mut tol: f64 = 0.0;
        for (coef, x) in terms {
            if x.matrix.nrows() != size {
                return Err(Error::DimensionMismatch {
                    expected: size - 1,
                    found: x.dim_n(),
                });
            }
            m += x.matrix.map(|a| a * *coef);
            tol = tol.max(x.tol * coef.abs());
        }
        Ok(AlgebraElement { matrix: m, tol })
    }

    /// Commutator [X, Y].
    pub fn bracket(&self, other: &AlgebraElement) -> DMatrix<C64> {
        &self.matrix * &other.matrix - &other.matrix * &self.matrix
    }
}

fn scaled_tol(a: &DMatrix<C64>, base: f64) -> f64 {
    let scale = max_abs(a).max(1.0);
    base * scale * scale
}

pub fn validate_group(a: DMatrix<C64>, tol: f64) -> Result<GroupElement> {
    check_square(&a)?;
    let residual = group_residual(&a);
    if residual > tol {
        return Err(Error::Validation {
            what: "U(1,n) membership",
            residual,
            tol,
        });
    }
    Ok(GroupElement { matrix: a, tol })
}

pub fn validate_algebra(x: DMatrix<C64>, tol: f64) -> Result<AlgebraElement> {
    check_square(&x)?;
    let residual = algebra_residual(&x);
    if residual > tol {
        return Err(Error::Validation {
            what: "u(1,n) membership",
            residual,
            tol,
        });
    }
    Ok(AlgebraElement { matrix: x, tol })
}

/// Order of the truncated Taylor series used after scaling.
pub const EXP_SERIES_ORDER: usize = 18;
/// Scaling target for ‖tX / 2ᵏ‖₁.
pub const EXP_SCALING_BOUND: f64 = 0.5;

fn one_norm(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|a| a.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// exp(tX) by scaling and squaring.
///
/// The returned element carries the membership tolerance
/// `1e-10 · max(1, ‖exp(tX)‖_max)²`: the residual ‖A*SA − S‖ of a correctly
/// rounded result already grows with the square of the entries.
pub fn matrix_exp(x: &AlgebraElement, t: f64) -> Result<GroupElement> {
    if !t.is_finite() {
        return Err(Error::NonFinite("exponent parameter t"));
    }
    let size = x.matrix.nrows();
    let scaled = x.matrix.map(|a| a * t);
    if scaled.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return Err(Error::NonFinite("tX"));
    }
    let norm = one_norm(&scaled);
    let squarings = if norm > EXP_SCALING_BOUND {
        (norm / EXP_SCALING_BOUND).log2().ceil() as i32
    } else {
        0
    };
    let y = scaled.map(|a| a / 2f64.powi(squarings));

    // Horner evaluation of Σ_{k ≤ 18} Yᵏ/k!.
    let id = DMatrix::<C64>::identity(size, size);
    let mut acc = id.clone();
    for k in (1..=EXP_SERIES_ORDER).rev() {
        acc = &id + (&y * acc).map(|a| a / k as f64);
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    if acc.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return Err(Error::NonFinite("matrix exponential"));
    }
    let tol = scaled_tol(&acc, tol::MEMBERSHIP);
    validate_group(acc, tol)
}
