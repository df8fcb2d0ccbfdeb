//! CKO-forms: constant-coefficient 𝔲(1,n)-valued 1-forms whose primitives
//! g generate Hopf hypersurfaces with μ = 2, the Maurer–Cartan conditions,
//! and the one-parameter family in ℂH².
//!
//! Every 1-form is stored by its values on the coordinate directions
//! e₁, …, e_{dim_g} of ℝ^{dim_g}.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hopf::{verify_hopf, HopfTolerances, HypersurfacePatch, PatchFn, ShapeReport};
use crate::linalg::{c, matrix_exp, max_abs, validate_algebra, AlgebraElement, GroupElement, IndefVector, C64, I};
use crate::tol;
use crate::twistor::Sign;

/// Tolerance of the pointwise wedge condition ⟨y₀(Y), y₁(Z)⟩ = ⟨y₀(Z), y₁(Y)⟩.
pub const WEDGE_TOL: f64 = 1e-12;

/// A constant-coefficient CKO-form on ℝ^{dim_g} with values in 𝔲(1, n).
///
/// Vector-valued forms are stored per direction: `x[a]` is 𝐱(e_a) ∈ ℝ^{n−1},
/// `w1[a]` is the (n−1)×(n−1) matrix w₁(e_a), row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CkoFormRaw", into = "CkoFormRaw")]
pub struct CKOForm {
    dim_n: usize,
    alpha0: Vec<f64>,
    alpha1: Vec<f64>,
    x: Vec<Vec<f64>>,
    y0: Vec<Vec<f64>>,
    y1: Vec<Vec<f64>>,
    w1: Vec<Vec<Vec<f64>>>,
    w2: Vec<Vec<Vec<f64>>>,
}

/// Unvalidated serialized form of [`CKOForm`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CkoFormRaw {
    pub dim_n: usize,
    pub alpha0: Vec<f64>,
    pub alpha1: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y0: Vec<Vec<f64>>,
    pub y1: Vec<Vec<f64>>,
    pub w1: Vec<Vec<Vec<f64>>>,
    pub w2: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<CkoFormRaw> for CKOForm {
    type Error = Error;
    fn try_from(s: CkoFormRaw) -> Result<Self> {
        CKOForm::new(s)
    }
}

impl From<CKOForm> for CkoFormRaw {
    fn from(f: CKOForm) -> Self {
        CkoFormRaw {
            dim_n: f.dim_n,
            alpha0: f.alpha0,
            alpha1: f.alpha1,
            x: f.x,
            y0: f.y0,
            y1: f.y1,
            w1: f.w1,
            w2: f.w2,
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidCkoForm(msg.into())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl CKOForm {
    pub fn new(s: CkoFormRaw) -> Result<Self> {
        let n = s.dim_n;
        if n < 2 {
            return Err(bad(format!("n must be at least 2, got {n}")));
        }
        let g = n - 1;
        let m = n - 1;
        if s.alpha0.len() != g || s.alpha1.len() != g {
            return Err(bad(format!("alpha0 and alpha1 need dim_g = n - 1 = {g} entries")));
        }
        for (name, v) in [("x", &s.x), ("y0", &s.y0), ("y1", &s.y1)] {
            if v.len() != g || v.iter().any(|row| row.len() != m) {
                return Err(bad(format!("{name} needs {g} directions of length {m}")));
            }
        }
        for (name, v) in [("w1", &s.w1), ("w2", &s.w2)] {
            if v.len() != g || v.iter().any(|mat| mat.len() != m || mat.iter().any(|row| row.len() != m)) {
                return Err(bad(format!("{name} needs {g} matrices of size {m}x{m}")));
            }
        }
        let all = s
            .alpha0
            .iter()
            .chain(&s.alpha1)
            .chain(s.x.iter().flatten())
            .chain(s.y0.iter().flatten())
            .chain(s.y1.iter().flatten())
            .chain(s.w1.iter().flatten().flatten())
            .chain(s.w2.iter().flatten().flatten());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("CKO form coefficients"));
        }
        for (a, mat) in s.w1.iter().enumerate() {
            let mut pairs = (0..m).flat_map(|i| (0..m).map(move |j| (i, j)));
            if let Some((i, j)) = pairs.find(|&(i, j)| mat[i][j] != -mat[j][i]) {
                return Err(bad(format!("w1(e{}) is not alternating at ({i}, {j})", a + 1)));
            }
            if n == 2 && mat[0][0] != 0.0 {
                return Err(bad("w1 must vanish when n = 2"));
            }
        }
        for (a, mat) in s.w2.iter().enumerate() {
            let mut pairs = (0..m).flat_map(|i| (0..i).map(move |j| (i, j)));
            if let Some((i, j)) = pairs.find(|&(i, j)| mat[i][j] != mat[j][i]) {
                return Err(bad(format!("w2(e{}) is not symmetric at ({i}, {j})", a + 1)));
            }
        }
        for a in 0..g {
            for b in a + 1..g {
                let r = dot(&s.y0[a], &s.y1[b]) - dot(&s.y0[b], &s.y1[a]);
                if r.abs() > WEDGE_TOL {
                    return Err(bad(format!(
                        "y0 and y1 violate the wedge condition on (e{}, e{}): residual {r:.3e}",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        Ok(Self {
            dim_n: n,
            alpha0: s.alpha0,
            alpha1: s.alpha1,
            x: s.x,
            y0: s.y0,
            y1: s.y1,
            w1: s.w1,
            w2: s.w2,
        })
    }

    /// The zero form on ℝ^{n−1}.
    pub fn zero(dim_n: usize) -> Result<Self> {
        let g = dim_n.saturating_sub(1);
        let m = g;
        Self::new(CkoFormRaw {
            dim_n,
            alpha0: vec![0.0; g],
            alpha1: vec![0.0; g],
            x: vec![vec![0.0; m]; g],
            y0: vec![vec![0.0; m]; g],
            y1: vec![vec![0.0; m]; g],
            w1: vec![vec![vec![0.0; m]; m]; g],
            w2: vec![vec![vec![0.0; m]; m]; g],
        })
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    pub fn dim_g(&self) -> usize {
        self.alpha0.len()
    }

    pub fn raw(&self) -> CkoFormRaw {
        self.clone().into()
    }

    /// Coefficients on a direction Y ∈ ℝ^{dim_g}.
    fn on(&self, y: &[f64]) -> Blocks {
        let m = self.dim_n - 1;
        let vec = |v: &[Vec<f64>]| -> Vec<f64> { (0..m).map(|i| v.iter().zip(y).map(|(d, c)| d[i] * c).sum()).collect() };
        let mat = |v: &[Vec<Vec<f64>>]| -> DMatrix<f64> {
            DMatrix::from_fn(m, m, |i, j| v.iter().zip(y).map(|(d, c)| d[i][j] * c).sum())
        };
        Blocks {
            a0: dot(&self.alpha0, y),
            a1: dot(&self.alpha1, y),
            x: vec(&self.x),
            y0: vec(&self.y0),
            y1: vec(&self.y1),
            w1: mat(&self.w1),
            w2: mat(&self.w2),
        }
    }

    fn basis_blocks(&self) -> Vec<Blocks> {
        let g = self.dim_g();
        (0..g)
            .map(|a| {
                let mut e = vec![0.0; g];
                e[a] = 1.0;
                self.on(&e)
            })
            .collect()
    }
}

/// Values of the component forms on one direction.
#[derive(Debug, Clone)]
struct Blocks {
    a0: f64,
    a1: f64,
    x: Vec<f64>,
    y0: Vec<f64>,
    y1: Vec<f64>,
    w1: DMatrix<f64>,
    w2: DMatrix<f64>,
}

fn omega_matrix(b: &Blocks) -> DMatrix<C64> {
    let m = b.x.len();
    let n = m + 1;
    let mut o = DMatrix::zeros(n + 1, n + 1);
    o[(0, 0)] = I * b.a0;
    o[(0, 1)] = I * (0.5 * (b.a0 - b.a1));
    o[(1, 0)] = I * (0.5 * (b.a1 - b.a0));
    o[(1, 1)] = I * b.a1;
    for k in 0..m {
        o[(0, k + 2)] = C64::new(b.x[k], -b.y0[k]);
        o[(1, k + 2)] = C64::new(-b.x[k], b.y1[k]);
        o[(k + 2, 0)] = C64::new(b.x[k], b.y0[k]);
        o[(k + 2, 1)] = C64::new(b.x[k], b.y1[k]);
        for l in 0..m {
            o[(k + 2, l + 2)] = C64::new(b.w1[(k, l)], b.w2[(k, l)]);
        }
    }
    o
}

/// Ω(Y) as an element of 𝔲(1, n).
pub fn assemble_omega(f: &CKOForm, y: &[f64]) -> Result<AlgebraElement> {
    if y.len() != f.dim_g() {
        return Err(Error::InvalidInput(format!(
            "direction needs {} components, got {}",
            f.dim_g(),
            y.len()
        )));
    }
    validate_algebra(omega_matrix(&f.on(y)), 1e-12)
}

// Wedge products of constant forms on a pair of basis directions (i, j):
// (σ∧τ)(e_i, e_j) = σ(e_i)τ(e_j) − σ(e_j)τ(e_i).

fn vs(u: &[f64], k: f64) -> Vec<f64> {
    u.iter().map(|v| v * k).collect()
}

fn vadd(terms: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; terms[0].len()];
    for t in terms {
        for (o, v) in out.iter_mut().zip(t) {
            *o += v;
        }
    }
    out
}

fn wedge_dot(p: &Blocks, q: &Blocks, s: fn(&Blocks) -> &Vec<f64>, t: fn(&Blocks) -> &Vec<f64>) -> f64 {
    dot(s(p), t(q)) - dot(s(q), t(p))
}

fn wedge_vec_scalar(p: &Blocks, q: &Blocks, s: fn(&Blocks) -> &Vec<f64>, t: fn(&Blocks) -> f64) -> Vec<f64> {
    vadd(&[vs(s(p), t(q)), vs(s(q), -t(p))])
}

fn wedge_mat_vec(p: &Blocks, q: &Blocks, s: fn(&Blocks) -> &DMatrix<f64>, t: fn(&Blocks) -> &Vec<f64>) -> Vec<f64> {
    let apply = |m: &DMatrix<f64>, v: &Vec<f64>| -> Vec<f64> {
        (0..v.len()).map(|i| (0..v.len()).map(|j| m[(i, j)] * v[j]).sum()).collect()
    };
    vadd(&[apply(s(p), t(q)), vs(&apply(s(q), t(p)), -1.0)])
}

fn wedge_outer(p: &Blocks, q: &Blocks, s: fn(&Blocks) -> &Vec<f64>, t: fn(&Blocks) -> &Vec<f64>) -> DMatrix<f64> {
    let m = s(p).len();
    DMatrix::from_fn(m, m, |i, j| s(p)[i] * t(q)[j] - s(q)[i] * t(p)[j])
}

fn wedge_mat(p: &Blocks, q: &Blocks, s: fn(&Blocks) -> &DMatrix<f64>, t: fn(&Blocks) -> &DMatrix<f64>) -> DMatrix<f64> {
    s(p) * t(q) - s(q) * t(p)
}

fn vmax(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// The integrability equations on the pair (p, q) = (Ω(e_i), Ω(e_j)); all
/// exterior derivatives vanish for constant coefficients.
///
/// The y₀ and y₁ equations carry ½(𝐱∧α₀ + 𝐱∧α₁), which is what the
/// imaginary parts of the lower-left blocks of Ω∧Ω produce.
fn mc_equations(p: &Blocks, q: &Blocks) -> [f64; 9] {
    fn x(b: &Blocks) -> &Vec<f64> {
        &b.x
    }
    fn y0(b: &Blocks) -> &Vec<f64> {
        &b.y0
    }
    fn y1(b: &Blocks) -> &Vec<f64> {
        &b.y1
    }
    fn a0(b: &Blocks) -> f64 {
        b.a0
    }
    fn a1(b: &Blocks) -> f64 {
        b.a1
    }
    fn w1(b: &Blocks) -> &DMatrix<f64> {
        &b.w1
    }
    fn w2(b: &Blocks) -> &DMatrix<f64> {
        &b.w2
    }

    let e_alpha0 = 2.0 * wedge_dot(p, q, x, y0);
    let e_alpha1 = -2.0 * wedge_dot(p, q, x, y1);
    let e_y = wedge_dot(p, q, y0, y1);

    let x_alpha = vs(&vadd(&[wedge_vec_scalar(p, q, x, a0), wedge_vec_scalar(p, q, x, a1)]), 0.5);
    let e_x0 = vadd(&[
        vs(&wedge_vec_scalar(p, q, y0, a0), -1.0),
        vs(&wedge_vec_scalar(p, q, y1, a1), -0.5),
        vs(&wedge_vec_scalar(p, q, y1, a0), 0.5),
        wedge_mat_vec(p, q, w1, x),
        vs(&wedge_mat_vec(p, q, w2, y0), -1.0),
    ]);
    let e_y0 = vadd(&[x_alpha.clone(), wedge_mat_vec(p, q, w2, x), wedge_mat_vec(p, q, w1, y0)]);
    let e_x1 = vadd(&[
        vs(&wedge_vec_scalar(p, q, y0, a0), -0.5),
        vs(&wedge_vec_scalar(p, q, y0, a1), 0.5),
        vs(&wedge_vec_scalar(p, q, y1, a1), -1.0),
        wedge_mat_vec(p, q, w1, x),
        vs(&wedge_mat_vec(p, q, w2, y1), -1.0),
    ]);
    let e_y1 = vadd(&[x_alpha, wedge_mat_vec(p, q, w1, y1), wedge_mat_vec(p, q, w2, x)]);
    let e_w1 = wedge_outer(p, q, y0, y0) - wedge_outer(p, q, y1, y1) + wedge_mat(p, q, w1, w1)
        - wedge_mat(p, q, w2, w2);
    let e_w2 = wedge_outer(p, q, y0, x) - wedge_outer(p, q, x, y0) + wedge_outer(p, q, x, y1)
        - wedge_outer(p, q, y1, x)
        + wedge_mat(p, q, w1, w2)
        + wedge_mat(p, q, w2, w1);
    [
        e_alpha0.abs(),
        e_alpha1.abs(),
        e_y.abs(),
        vmax(&e_x0),
        vmax(&e_y0),
        vmax(&e_x1),
        vmax(&e_y1),
        e_w1.amax(),
        e_w2.amax(),
    ]
}

/// Largest residual of the integrability equations over all basis pairs;
/// zero when dim_g < 2.
pub fn maurer_cartan_residual(f: &CKOForm) -> f64 {
    let blocks = f.basis_blocks();
    let mut worst: f64 = 0.0;
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            for r in mc_equations(&blocks[i], &blocks[j]) {
                worst = worst.max(r);
            }
        }
    }
    worst
}

/// Largest ‖[Ω(e_i), Ω(e_j)]‖_max over basis pairs, the same condition read
/// off the matrix commutator.
pub fn commutator_residual(f: &CKOForm) -> f64 {
    let mats: Vec<DMatrix<C64>> = f.basis_blocks().iter().map(omega_matrix).collect();
    let mut worst: f64 = 0.0;
    for i in 0..mats.len() {
        for j in i + 1..mats.len() {
            worst = worst.max(max_abs(&(&mats[i] * &mats[j] - &mats[j] * &mats[i])));
        }
    }
    worst
}

/// B₀ · exp(x₁Ω(e₁)) ⋯ exp(x_gΩ(e_g)), integrating g⁻¹dg = Ω along the
/// coordinate axes in order.
pub fn integrate_axes(f: &CKOForm, base: &GroupElement, x: &[f64], order: &[usize]) -> Result<GroupElement> {
    if x.len() != f.dim_g() || order.len() != f.dim_g() {
        return Err(Error::InvalidInput("axis path needs dim_g coordinates".into()));
    }
    let mut g = base.clone();
    for &a in order {
        let mut e = vec![0.0; f.dim_g()];
        e[a] = 1.0;
        g = g.compose(&matrix_exp(&assemble_omega(f, &e)?, x[a])?);
    }
    Ok(g)
}

/// ‖g_forward(x) − g_reverse(x)‖_max for the axis paths taken in opposite
/// orders; vanishes when Ω is integrable.
pub fn two_path_witness(f: &CKOForm, base: &GroupElement, x: &[f64]) -> Result<f64> {
    let forward: Vec<usize> = (0..f.dim_g()).collect();
    let reverse: Vec<usize> = forward.iter().rev().copied().collect();
    let a = integrate_axes(f, base, x, &forward)?;
    let b = integrate_axes(f, base, x, &reverse)?;
    Ok(max_abs(&(a.matrix() - b.matrix())))
}

/// Scalar constants of a one-parameter CKO-form on ℂH².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneParamConstants {
    pub alpha0: f64,
    pub alpha1: f64,
    pub x: f64,
    pub y0: f64,
    pub y1: f64,
    pub w: f64,
}

impl OneParamConstants {
    pub fn as_array(&self) -> [f64; 6] {
        [self.alpha0, self.alpha1, self.x, self.y0, self.y1, self.w]
    }

    /// The non-immersion case y₀ = y₁ = 0 with α₀ + α₁ = 2w.
    pub fn is_degenerate(&self) -> bool {
        self.y0 == 0.0 && self.y1 == 0.0 && (self.alpha0 + self.alpha1 - 2.0 * self.w).abs() <= 1e-12
    }

    /// (a, b) of the principal curvature ρ = a/b at λ.
    pub fn rho_terms(&self, lambda: f64) -> (f64, f64) {
        let a = lambda * (2.0 * self.w - self.alpha0 - self.alpha1)
            + 2.0 * self.y1
            + 3.0 * lambda * lambda * (self.y0 - self.y1);
        (a, a + 2.0 * (self.y0 - self.y1))
    }

    /// Uniform draw in [−1, 1]⁶ keeping |b(λ)| ≥ 0.1 on λ ∈ [0.5, 2].
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut d = || rng.random_range(-1.0..=1.0);
            let k = Self {
                alpha0: d(),
                alpha1: d(),
                x: d(),
                y0: d(),
                y1: d(),
                w: d(),
            };
            let safe = (0..=30).all(|i| k.rho_terms(0.5 + 1.5 * i as f64 / 30.0).1.abs() >= 0.1);
            if safe {
                return k;
            }
        }
    }

    /// The same as `random` with y₁ = y₀.
    pub fn random_horosphere<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut k = Self::random(rng);
            k.y1 = k.y0;
            if (0..=30).all(|i| k.rho_terms(0.5 + 1.5 * i as f64 / 30.0).1.abs() >= 0.1) {
                return k;
            }
        }
    }
}

/// One-parameter data: constants of Ω and the initial value B₀ = g(0).
#[derive(Debug, Clone, PartialEq)]
pub struct OneParamData {
    constants: OneParamConstants,
    omega: AlgebraElement,
    base: GroupElement,
}

impl OneParamData {
    pub fn new(constants: OneParamConstants, base: GroupElement) -> Result<Self> {
        let k = constants.as_array();
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("one-parameter constants"));
        }
        if k.iter().all(|&v| v == 0.0) {
            return Err(bad("the constants must not all vanish"));
        }
        if base.dim_n() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: base.dim_n(),
            });
        }
        let form = constants.to_form()?;
        let omega = assemble_omega(&form, &[1.0])?;
        Ok(Self {
            constants,
            omega,
            base,
        })
    }

    pub fn with_identity(constants: OneParamConstants) -> Result<Self> {
        Self::new(constants, GroupElement::identity(2))
    }

    pub fn constants(&self) -> &OneParamConstants {
        &self.constants
    }

    pub fn omega(&self) -> &AlgebraElement {
        &self.omega
    }

    pub fn base(&self) -> &GroupElement {
        &self.base
    }
}

impl OneParamConstants {
    /// The CKO-form on ℝ with these constants (n = 2, w₁ = 0, w₂ = w).
    pub fn to_form(&self) -> Result<CKOForm> {
        CKOForm::new(CkoFormRaw {
            dim_n: 2,
            alpha0: vec![self.alpha0],
            alpha1: vec![self.alpha1],
            x: vec![vec![self.x]],
            y0: vec![vec![self.y0]],
            y1: vec![vec![self.y1]],
            w1: vec![vec![vec![0.0]]],
            w2: vec![vec![vec![self.w]]],
        })
    }
}

/// g(t) = B₀ · exp(tΩ).
pub fn one_param_group(d: &OneParamData, t: f64) -> Result<GroupElement> {
    Ok(d.base.compose(&matrix_exp(&d.omega, t)?))
}

/// Sample box of the λ coordinate.
pub const LAMBDA_RANGE: (f64, f64) = (0.5, 2.0);

fn position_profile(lambda: f64, h: f64, p: &[f64]) -> Vec<C64> {
    let mut v = vec![C64::new(1.0 + 0.5 * lambda * lambda, -h), C64::new(-0.5 * lambda * lambda, h)];
    v.extend(p.iter().map(|&pk| c(lambda * pk)));
    v
}

fn normal_profile(lambda: f64, h: f64, p: &[f64]) -> Vec<C64> {
    let mut v = vec![C64::new(-0.5 * lambda * lambda, h), C64::new(0.5 * lambda * lambda - 1.0, -h)];
    v.extend(p.iter().map(|&pk| c(-lambda * pk)));
    v
}

/// Hemisphere chart of S^{n−2}: (s₁, …, s_{n−2}) ↦ (s, √(1 − |s|²)).
fn sphere_point(s: &[f64]) -> Vec<f64> {
    let mut p = s.to_vec();
    p.push((1.0 - s.iter().map(|v| v * v).sum::<f64>()).max(0.0).sqrt());
    p
}

/// Ψ̃(θ, x, h, λ, 𝐩) = e^{iθ} g(x)(1+λ²/2 − ih, −λ²/2 + ih, λ𝐩) with normal
/// lift N′ = e^{iθ} g(x)(−λ²/2 + ih, λ²/2 − 1 − ih, −λ𝐩), where
/// g(x) = B₀ exp(x₁X₁) ⋯ exp(x_g X_g).
///
/// Chart: θ, x₁..x_g, h, λ, then n − 2 hemisphere coordinates of 𝐩.
pub fn build_psi_general(
    label: impl Into<String>,
    generators: Vec<AlgebraElement>,
    base: GroupElement,
) -> Result<HypersurfacePatch> {
    let n = base.dim_n();
    if n < 2 {
        return Err(Error::InvalidInput(format!("n must be at least 2, got {n}")));
    }
    if generators.len() != n - 1 || generators.iter().any(|g| g.dim_n() != n) {
        return Err(Error::InvalidInput(format!("expected {} generators in u(1,{n})", n - 1)));
    }
    let g_dim = n - 1;
    let generators = Arc::new(generators);
    let base = Arc::new(base);
    let group_at = {
        let generators = generators.clone();
        let base = base.clone();
        move |x: &[f64]| -> DMatrix<C64> {
            let mut m = base.matrix().clone();
            for (gen, &t) in generators.iter().zip(x) {
                let e = matrix_exp(gen, t).expect("generators validated at construction");
                m = &m * e.matrix();
            }
            m
        }
    };
    let group_at = Arc::new(group_at);
    let make = |profile: fn(f64, f64, &[f64]) -> Vec<C64>| -> PatchFn {
        let group_at = group_at.clone();
        Arc::new(move |q: &[f64]| {
            let theta = q[0];
            let x = &q[1..1 + g_dim];
            let h = q[1 + g_dim];
            let lambda = q[2 + g_dim];
            let p = sphere_point(&q[3 + g_dim..]);
            let v = nalgebra::DVector::from_vec(profile(lambda, h, if n == 2 { &[1.0] } else { &p }));
            let w = group_at(x) * v * C64::from_polar(1.0, theta);
            IndefVector::from_dvector(&w)
        })
    };
    let eval = make(position_profile);
    let normal = make(normal_profile);

    let mut names = vec!["theta".to_string()];
    names.extend((1..=g_dim).map(|a| format!("x{a}")));
    names.push("h".into());
    names.push("lambda".into());
    names.extend((1..=n.saturating_sub(2)).map(|a| format!("s{a}")));
    let mut sample_box = vec![(-0.3, 0.3); 2 + g_dim];
    sample_box.push(LAMBDA_RANGE);
    sample_box.extend(std::iter::repeat_n((-0.3, 0.3), n - 2));
    let patch = HypersurfacePatch::new(label, Sign::Zero, 0.0, n, names, sample_box, Some(2.0), eval, normal)?;
    patch.validate_at(&patch.center(), tol::FD_STEP)?;
    Ok(patch)
}

/// The μ = 2 patch of one-parameter data on ℂH², chart (θ, x, h, λ).
pub fn build_psi(d: &OneParamData) -> Result<HypersurfacePatch> {
    if d.constants.is_degenerate() {
        return Err(Error::Degenerate(
            "y0 = y1 = 0 with alpha0 + alpha1 = 2w: the map is not an immersion".into(),
        ));
    }
    let k = d.constants;
    build_psi_general(
        format!(
            "cko(alpha0={}, alpha1={}, x={}, y0={}, y1={}, w={})",
            k.alpha0, k.alpha1, k.x, k.y0, k.y1, k.w
        ),
        vec![d.omega.clone()],
        d.base.clone(),
    )
}

/// The patch of a CKO-form on ℝ^{n−1}; requires the integrability equations
/// to hold to `1e-12` so that the axis-ordered product is a primitive.
pub fn build_psi_form(f: &CKOForm, base: GroupElement) -> Result<HypersurfacePatch> {
    if base.dim_n() != f.dim_n() {
        return Err(Error::DimensionMismatch {
            expected: f.dim_n(),
            found: base.dim_n(),
        });
    }
    let res = maurer_cartan_residual(f);
    if res > 1e-12 {
        return Err(bad(format!("Maurer-Cartan residual {res:.3e}: no primitive g exists")));
    }
    let g = f.dim_g();
    let generators = (0..g)
        .map(|a| {
            let mut e = vec![0.0; g];
            e[a] = 1.0;
            assemble_omega(f, &e)
        })
        .collect::<Result<Vec<_>>>()?;
    build_psi_general(format!("cko-form(n={})", f.dim_n()), generators, base)
}

/// ρ = a/b at λ.
pub fn predicted_rho(d: &OneParamConstants, lambda: f64) -> Result<f64> {
    let (a, b) = d.rho_terms(lambda);
    if b.abs() <= 1e-12 {
        return Err(Error::Degenerate(format!("b = 0 at lambda = {lambda}: the immersion degenerates")));
    }
    Ok(a / b)
}

/// y₀ = y₁, which characterises the horosphere among one-parameter data.
pub fn horosphere_test(d: &OneParamConstants) -> bool {
    d.y0 == d.y1
}

/// The principal curvature on ξ^⊥ farthest from 1 at a grid point.
pub fn measured_rho(eigenvalues_perp: &[f64]) -> Option<f64> {
    eigenvalues_perp
        .iter()
        .copied()
        .max_by(|a, b| (a - 1.0).abs().total_cmp(&(b - 1.0).abs()))
}

/// Certifies Aξ = 2ξ and dim V₁ ≥ n − 1 over a grid; failures are appended
/// to the report.
pub fn verify_axi2xi(p: &HypersurfacePatch, grid: &[Vec<f64>], step: f64, tol: &HopfTolerances) -> ShapeReport {
    let mut report = verify_hopf(p, grid, step, tol);
    let need = p.dim_n() - 1;
    for pt in &report.points {
        let ones = pt.eigenvalues_perp.iter().filter(|v| (*v - 1.0).abs() <= tol.mu).count();
        if ones < need {
            report.failures.push(format!(
                "eigenvalue 1 has multiplicity {ones} < {need} at {:?}",
                pt.params
            ));
        }
    }
    report.certified = report.failures.is_empty();
    report
}
