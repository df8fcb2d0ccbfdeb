//! Stiefel pairs (u₋, u₊), the para-quaternionic frame I₁, I₂, I₃ on the
//! Grassmannian of signature-(1,1) planes, the three twistor classes and the
//! curve families γ_r^s.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibration::ParamCurve;
use crate::linalg::{c, herm_unchecked, matrix_exp, validate_algebra, IndefVector, C64, I};
use crate::tol;

/// The sign s of a twistor space: −a² + b² + c² = s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
    Zero,
}

impl Sign {
    pub const ALL: [Sign; 3] = [Sign::Plus, Sign::Minus, Sign::Zero];

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
            Sign::Zero => "zero",
        }
    }

    /// Curvature of the projected curves γ_r^s: 2coth 2r, 2tanh 2r, 2.
    pub fn curve_curvature(self, r: f64) -> f64 {
        match self {
            Sign::Plus => 2.0 / (2.0 * r).tanh(),
            Sign::Minus => 2.0 * (2.0 * r).tanh(),
            Sign::Zero => 2.0,
        }
    }

    /// Hopf curvature of Φ_r^s for the normal N′: −2coth 2r, −2tanh 2r, −2.
    pub fn hopf_curvature(self, r: f64) -> f64 {
        -self.curve_curvature(r)
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Sign::Plus),
            "minus" | "-" => Ok(Sign::Minus),
            "zero" | "0" => Ok(Sign::Zero),
            other => Err(Error::InvalidInput(format!("unknown sign '{other}'"))),
        }
    }
}

/// Residual of the Stiefel conditions ((u₋,u₋)) = −1, ((u₊,u₊)) = 1, ((u₋,u₊)) = 0.
pub fn stiefel_residual(u_minus: &IndefVector, u_plus: &IndefVector) -> f64 {
    let a = (herm_unchecked(u_minus, u_minus) + 1.0).norm();
    let b = (herm_unchecked(u_plus, u_plus) - 1.0).norm();
    let m = herm_unchecked(u_minus, u_plus).norm();
    a.max(b).max(m)
}

/// A point (u₋, u₊) of the indefinite Stiefel manifold V_{1,1}(ℂ₁ⁿ⁺¹).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StiefelPoint {
    u_minus: IndefVector,
    u_plus: IndefVector,
}

impl StiefelPoint {
    pub fn new(u_minus: IndefVector, u_plus: IndefVector) -> Result<Self> {
        Self::with_tol(u_minus, u_plus, tol::MEMBERSHIP)
    }

    pub fn with_tol(u_minus: IndefVector, u_plus: IndefVector, tol: f64) -> Result<Self> {
        if u_minus.dim_n() != u_plus.dim_n() {
            return Err(Error::DimensionMismatch {
                expected: u_minus.dim_n(),
                found: u_plus.dim_n(),
            });
        }
        if !(u_minus.is_finite() && u_plus.is_finite()) {
            return Err(Error::NonFinite("Stiefel pair"));
        }
        let residual = stiefel_residual(&u_minus, &u_plus);
        if residual > tol {
            return Err(Error::Validation {
                what: "Stiefel membership",
                residual,
                tol,
            });
        }
        Ok(Self { u_minus, u_plus })
    }

    pub(crate) fn new_unchecked(u_minus: IndefVector, u_plus: IndefVector) -> Self {
        Self { u_minus, u_plus }
    }

    /// (e₀, e₁).
    pub fn standard(dim_n: usize) -> Self {
        Self {
            u_minus: IndefVector::basis(dim_n, 0),
            u_plus: IndefVector::basis(dim_n, 1),
        }
    }

    /// The first two columns of exp(X) for a random X ∈ 𝔲(1, n) with
    /// entries of size at most `spread`.
    pub fn random<R: Rng + ?Sized>(dim_n: usize, spread: f64, rng: &mut R) -> Result<Self> {
        let size = dim_n + 1;
        let mut k = DMatrix::<C64>::zeros(size, size);
        for i in 0..size {
            k[(i, i)] = C64::new(0.0, rng.random_range(-spread..=spread));
            for j in i + 1..size {
                let z = C64::new(rng.random_range(-spread..=spread), rng.random_range(-spread..=spread));
                k[(i, j)] = z;
                k[(j, i)] = -z.conj();
            }
        }
        // X = S·K lies in 𝔲(1, n) whenever K is skew-Hermitian.
        for j in 0..size {
            k[(0, j)] = -k[(0, j)];
        }
        let g = matrix_exp(&validate_algebra(k, 1e-12)?, 1.0)?;
        let m = g.matrix();
        let col = |j: usize| IndefVector::from_vec(m.column(j).iter().copied().collect());
        Self::with_tol(col(0), col(1), 1e-9)
    }

    pub fn u_minus(&self) -> &IndefVector {
        &self.u_minus
    }

    pub fn u_plus(&self) -> &IndefVector {
        &self.u_plus
    }

    pub fn dim_n(&self) -> usize {
        self.u_minus.dim_n()
    }

    pub fn residual(&self) -> f64 {
        stiefel_residual(&self.u_minus, &self.u_plus)
    }

    /// Component of v orthogonal to span{u₋, u₊}.
    pub fn orthogonal_part(&self, v: &IndefVector) -> IndefVector {
        let a = herm_unchecked(v, &self.u_minus);
        let b = herm_unchecked(v, &self.u_plus);
        v + &self.u_minus * a - &self.u_plus * b
    }

    /// (u₋, u₊)·M for a 2×2 matrix M = [[m00, m01], [m10, m11]].
    pub fn right_mul(&self, m: [[C64; 2]; 2]) -> StiefelPoint {
        StiefelPoint {
            u_minus: &self.u_minus * m[0][0] + &self.u_plus * m[1][0],
            u_plus: &self.u_minus * m[0][1] + &self.u_plus * m[1][1],
        }
    }

    /// Coefficients M with (v₋, v₊) = (u₋, u₊)·M, and the residual of that
    /// reconstruction.
    pub fn coefficients_of(&self, other: &StiefelPoint) -> ([[C64; 2]; 2], f64) {
        let coef = |v: &IndefVector| (-herm_unchecked(v, &self.u_minus), herm_unchecked(v, &self.u_plus));
        let (a, b) = coef(&other.u_minus);
        let (c1, d) = coef(&other.u_plus);
        let m = [[a, c1], [b, d]];
        let back = self.right_mul(m);
        let residual = (&back.u_minus - &other.u_minus)
            .euclid_norm()
            .max((&back.u_plus - &other.u_plus).euclid_norm());
        (m, residual)
    }
}

/// A tangent vector (X₋, X₊) ∈ {u₋,u₊}^⊥ × {u₋,u₊}^⊥ at a Stiefel point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPair {
    x_minus: IndefVector,
    x_plus: IndefVector,
    base: StiefelPoint,
}

impl TangentPair {
    pub fn new(x_minus: IndefVector, x_plus: IndefVector, base: StiefelPoint, tol: f64) -> Result<Self> {
        let n = base.dim_n();
        for v in [&x_minus, &x_plus] {
            if v.dim_n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: v.dim_n(),
                });
            }
        }
        let residual = [&x_minus, &x_plus]
            .iter()
            .flat_map(|v| [herm_unchecked(v, base.u_minus()).norm(), herm_unchecked(v, base.u_plus()).norm()])
            .fold(0.0, f64::max);
        if residual > tol {
            return Err(Error::Validation {
                what: "tangent pair orthogonality",
                residual,
                tol,
            });
        }
        Ok(Self { x_minus, x_plus, base })
    }

    /// A random pair obtained by projecting random coordinate vectors.
    pub fn random<R: Rng + ?Sized>(base: &StiefelPoint, rng: &mut R) -> Self {
        let n = base.dim_n();
        let mut draw = || {
            let v = IndefVector::from_vec(
                (0..=n)
                    .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect(),
            );
            base.orthogonal_part(&v)
        };
        let x_minus = draw();
        let x_plus = draw();
        Self {
            x_minus,
            x_plus,
            base: base.clone(),
        }
    }

    pub fn x_minus(&self) -> &IndefVector {
        &self.x_minus
    }

    pub fn x_plus(&self) -> &IndefVector {
        &self.x_plus
    }

    pub fn base(&self) -> &StiefelPoint {
        &self.base
    }

    fn with(&self, x_minus: IndefVector, x_plus: IndefVector) -> Self {
        Self {
            x_minus,
            x_plus,
            base: self.base.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        self.with(-&self.x_minus, -&self.x_plus)
    }

    pub fn sub(&self, other: &TangentPair) -> Self {
        self.with(&self.x_minus - &other.x_minus, &self.x_plus - &other.x_plus)
    }

    /// Largest coordinate modulus of either component.
    pub fn max_abs(&self) -> f64 {
        self.x_minus
            .coords()
            .iter()
            .chain(self.x_plus.coords())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// I₁(X₋,X₊) = (iX₋, −iX₊), I₂(X₋,X₊) = (X₊, X₋), I₃(X₋,X₊) = (iX₊, −iX₋).
pub fn apply_i(k: u8, v: &TangentPair) -> Result<TangentPair> {
    let (a, b) = (&v.x_minus, &v.x_plus);
    match k {
        1 => Ok(v.with(a.times_i(), -b.times_i())),
        2 => Ok(v.with(b.clone(), a.clone())),
        3 => Ok(v.with(b.times_i(), -a.times_i())),
        other => Err(Error::InvalidInput(format!("para-quaternionic index must be 1, 2 or 3, got {other}"))),
    }
}

/// The product I_a I_b of the frame, acting on the right of the row
/// (X₋, X₊): v ↦ v·M_a·M_b, so I_a is applied first.
pub fn frame_product(a: u8, b: u8, v: &TangentPair) -> Result<TangentPair> {
    apply_i(b, &apply_i(a, v)?)
}

/// Pair form −⟨X₋,Y₋⟩ + ⟨X₊,Y₊⟩ of two tangent pairs.
pub fn tangent_pair_form(x: &TangentPair, y: &TangentPair) -> Result<f64> {
    crate::linalg::pair_form((&x.x_minus, &x.x_plus), (&y.x_minus, &y.x_plus))
}

/// A point of the twistor space M_Z^s, stored as a Stiefel representative.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistorClass {
    pub sign: Sign,
    pub rep: StiefelPoint,
}

impl TwistorClass {
    pub fn new(sign: Sign, rep: StiefelPoint) -> Self {
        Self { sign, rep }
    }

    /// Whether the representatives differ by a common phase e^{iθ} combined
    /// with the action attached to the sign.
    pub fn equivalent(&self, other: &TwistorClass, tol: f64) -> bool {
        if self.sign != other.sign || self.rep.dim_n() != other.rep.dim_n() {
            return false;
        }
        let (m, residual) = self.rep.coefficients_of(&other.rep);
        if residual > tol {
            return false;
        }
        let near = |a: C64, b: C64| (a - b).norm() <= tol;
        let zero = c(0.0);
        match self.sign {
            // diag(e^{i(θ+t)}, e^{i(θ−t)})
            Sign::Plus => {
                near(m[0][1], zero)
                    && near(m[1][0], zero)
                    && (m[0][0].norm() - 1.0).abs() <= tol
                    && (m[1][1].norm() - 1.0).abs() <= tol
            }
            // e^{iθ}[[cosh t, sinh t], [sinh t, cosh t]]
            Sign::Minus => {
                let ch = m[0][0].norm();
                if ch < 1.0 - tol {
                    return false;
                }
                let phase = m[0][0] / ch;
                let n01 = m[0][1] / phase;
                let sh = n01.re;
                n01.im.abs() <= tol
                    && near(m[1][0], m[0][1])
                    && near(m[1][1], m[0][0])
                    && (ch * ch - sh * sh - 1.0).abs() <= tol * ch.max(1.0) * 4.0
            }
            // e^{iθ}[[1+it, t], [t, 1−it]]
            Sign::Zero => {
                let phase = (m[0][0] + m[1][1]) * 0.5;
                if (phase.norm() - 1.0).abs() > tol {
                    return false;
                }
                let n = |z: C64| z / phase;
                let t = n(m[0][1]);
                t.im.abs() <= tol
                    && near(n(m[1][0]), t)
                    && near(n(m[0][0]), c(1.0) + I * t.re)
                    && near(n(m[1][1]), c(1.0) - I * t.re)
            }
        }
    }
}

/// Gauge action of (θ, t) for the given sign.
pub fn gauge_action(sign: Sign, p: &StiefelPoint, theta: f64, t: f64) -> StiefelPoint {
    let phase = C64::from_polar(1.0, theta);
    let m = match sign {
        Sign::Plus => [[C64::from_polar(1.0, t), c(0.0)], [c(0.0), C64::from_polar(1.0, -t)]],
        Sign::Minus => [[c(t.cosh()), c(t.sinh())], [c(t.sinh()), c(t.cosh())]],
        Sign::Zero => [[C64::new(1.0, t), c(t)], [c(t), C64::new(1.0, -t)]],
    };
    p.right_mul([[m[0][0] * phase, m[0][1] * phase], [m[1][0] * phase, m[1][1] * phase]])
}

/// Coefficients (a₋, a₊) with γ_r^s(t) = a₋u₋ + a₊u₊.
pub fn gamma_coefficients(s: Sign, r: f64, t: f64) -> (C64, C64) {
    let (chr, shr) = (r.cosh(), r.sinh());
    match s {
        Sign::Plus => (C64::from_polar(chr, t), C64::from_polar(shr, -t)),
        Sign::Minus => (
            C64::new(chr * t.cosh(), shr * t.sinh()),
            C64::new(chr * t.sinh(), shr * t.cosh()),
        ),
        Sign::Zero => {
            let er = r.exp();
            (C64::new(chr, t * er), C64::new(t * er, shr))
        }
    }
}

/// Coefficients of the unit horizontal field T_r^s(t) along γ_r^s.
pub fn tangent_coefficients(s: Sign, r: f64, t: f64) -> Result<(C64, C64)> {
    let (chr, shr) = (r.cosh(), r.sinh());
    match s {
        Sign::Plus => {
            if r == 0.0 {
                return Err(Error::DegenerateRadius);
            }
            Ok((-I * C64::from_polar(shr, t), -I * C64::from_polar(chr, -t)))
        }
        Sign::Minus => Ok((
            C64::new(chr * t.sinh(), -shr * t.cosh()),
            C64::new(chr * t.cosh(), -shr * t.sinh()),
        )),
        Sign::Zero => {
            let er = r.exp();
            Ok((C64::new(t * er, -shr), C64::new(chr, -t * er)))
        }
    }
}

fn combine(p: &StiefelPoint, (a, b): (C64, C64)) -> IndefVector {
    p.u_minus() * a + p.u_plus() * b
}

/// Parameter interval on which γ curves are defined.
pub const CURVE_DOMAIN: (f64, f64) = (-20.0, 20.0);

/// The curve t ↦ γ_r^s(t) through the plane of p.
pub fn gamma_curve(s: Sign, r: f64, p: &StiefelPoint) -> ParamCurve {
    let p = p.clone();
    ParamCurve::new(CURVE_DOMAIN, move |t| combine(&p, gamma_coefficients(s, r, t)))
}

pub fn gamma_point(s: Sign, r: f64, p: &StiefelPoint, t: f64) -> IndefVector {
    combine(p, gamma_coefficients(s, r, t))
}

/// T_r^s(t), the unit horizontal tangent of γ_r^s.
pub fn unit_horizontal_t(s: Sign, r: f64, p: &StiefelPoint, t: f64) -> Result<IndefVector> {
    Ok(combine(p, tangent_coefficients(s, r, t)?))
}

/// ‖cosh r′·γ_r(t) + sinh r′·iT_r(t) − γ_{r+r′}(t)‖.
pub fn parallel_shift_residual(s: Sign, r: f64, r_prime: f64, p: &StiefelPoint, t: f64) -> Result<f64> {
    let tt = unit_horizontal_t(s, r, p, t)?;
    let shifted = gamma_point(s, r, p, t) * r_prime.cosh() + tt.times_i() * r_prime.sinh();
    Ok((shifted - gamma_point(s, r + r_prime, p, t)).euclid_norm())
}

/// Coefficients of du₋ = iα₋u₋ + βu₊ + w₋, du₊ = β̄u₋ + iα₊u₊ + w₊ along
/// one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftCoefficients {
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub beta: C64,
    pub w_minus: IndefVector,
    pub w_plus: IndefVector,
    /// Reconstruction residual of both differentials.
    pub residual: f64,
}

/// Reconstruction residual above which a lift is rejected.
pub const LIFT_RECONSTRUCTION_TOL: f64 = 1e-8;

/// A one-parameter family of Stiefel pairs.
pub type Lift1d = Arc<dyn Fn(f64) -> StiefelPoint + Send + Sync>;

fn difference(lift: &(dyn Fn(f64) -> StiefelPoint + Send + Sync), x: f64, h: f64) -> (IndefVector, IndefVector) {
    let (a, b) = (lift(x + h), lift(x - h));
    let k = 0.5 / h;
    ((&a.u_minus - &b.u_minus) * k, (&a.u_plus - &b.u_plus) * k)
}

/// Extracts the lift coefficients at x from central differences, with one
/// level of Richardson extrapolation.
pub fn lift_coefficients(lift: &(dyn Fn(f64) -> StiefelPoint + Send + Sync), x: f64, step: f64) -> Result<LiftCoefficients> {
    if !(step > 0.0 && step.is_finite() && x.is_finite()) {
        return Err(Error::InvalidInput(format!("invalid step {step} at x = {x}")));
    }
    let p = lift(x);
    let (dm1, dp1) = difference(lift, x, step);
    let (dm2, dp2) = difference(lift, x, 0.5 * step);
    let dm = (dm2 * 4.0 - dm1) * (1.0 / 3.0);
    let dp = (dp2 * 4.0 - dp1) * (1.0 / 3.0);
    let (um, up) = (p.u_minus(), p.u_plus());

    let i_alpha_minus = -herm_unchecked(&dm, um);
    let beta = herm_unchecked(&dm, up);
    let i_alpha_plus = herm_unchecked(&dp, up);
    let w_minus = p.orthogonal_part(&dm);
    let w_plus = p.orthogonal_part(&dp);

    let recon_minus = um * i_alpha_minus + up * beta + &w_minus;
    let recon_plus = um * beta.conj() + up * i_alpha_plus + &w_plus;
    let scale = dm.euclid_norm().max(dp.euclid_norm()).max(1.0);
    let residual = ((&recon_minus - &dm).euclid_norm()).max((&recon_plus - &dp).euclid_norm()) / scale;
    // The α must be real and the u₋ component of du₊ must be β̄.
    let skew = i_alpha_minus.re.abs().max(i_alpha_plus.re.abs()) / scale;
    let residual = residual.max(skew).max(p.residual());
    if residual > LIFT_RECONSTRUCTION_TOL {
        return Err(Error::NotStiefelValued { residual });
    }
    Ok(LiftCoefficients {
        alpha_minus: i_alpha_minus.im,
        alpha_plus: i_alpha_plus.im,
        beta,
        w_minus,
        w_plus,
        residual,
    })
}

/// Horizontality of a lift for the twistor fibration of sign s.
pub fn horizontality_residual(s: Sign, c: &LiftCoefficients) -> f64 {
    match s {
        Sign::Plus => c.beta.norm(),
        Sign::Minus => (c.alpha_minus - c.alpha_plus).abs().max(c.beta.im.abs()),
        Sign::Zero => (c.alpha_minus - c.alpha_plus - 2.0 * c.beta.re)
            .abs()
            .max(c.beta.im.abs()),
    }
}

pub fn is_horizontal(s: Sign, c: &LiftCoefficients, tol: f64) -> bool {
    horizontality_residual(s, c) <= tol
}

/// Right-hand side (dθ, dt) of the gauge system removing the u₋, u₊
/// components of a horizontal lift.
fn gauge_rate(s: Sign, c: &LiftCoefficients) -> (f64, f64) {
    match s {
        Sign::Plus => (-(c.alpha_minus + c.alpha_plus) / 2.0, (c.alpha_plus - c.alpha_minus) / 2.0),
        Sign::Minus | Sign::Zero => (-(c.alpha_minus + c.alpha_plus) / 2.0, -c.beta.re),
    }
}

/// Number of integrator steps per unit length of parameter.
pub const GAUGE_STEPS_PER_UNIT: f64 = 100.0;

/// A horizontal lift composed with the gauge (θ(x), t(x)) that makes
/// du₋ = w₋ and du₊ = w₊.
#[derive(Clone)]
pub struct NormalizedLift {
    lift: Lift1d,
    sign: Sign,
    x0: f64,
    step: f64,
}

impl fmt::Debug for NormalizedLift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormalizedLift")
            .field("sign", &self.sign)
            .field("x0", &self.x0)
            .finish_non_exhaustive()
    }
}

impl NormalizedLift {
    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Gauge parameters (θ(x), t(x)) with θ(x₀) = t(x₀) = 0, integrated by
    /// the classical fourth-order Runge–Kutta method.
    pub fn gauge(&self, x: f64) -> Result<(f64, f64)> {
        let span = x - self.x0;
        let steps = ((span.abs() * GAUGE_STEPS_PER_UNIT).ceil() as usize).max(1);
        let h = span / steps as f64;
        let rate = |y: f64| -> Result<(f64, f64)> {
            let c = lift_coefficients(self.lift.as_ref(), y, self.step)?;
            Ok(gauge_rate(self.sign, &c))
        };
        let (mut theta, mut t) = (0.0, 0.0);
        let mut y = self.x0;
        // The rate depends on x alone, so the two midpoint stages coincide.
        let mut k_start = rate(y)?;
        for _ in 0..steps {
            let k_mid = rate(y + 0.5 * h)?;
            let k_end = rate(y + h)?;
            theta += h / 6.0 * (k_start.0 + 4.0 * k_mid.0 + k_end.0);
            t += h / 6.0 * (k_start.1 + 4.0 * k_mid.1 + k_end.1);
            y += h;
            k_start = k_end;
        }
        Ok((theta, t))
    }

    pub fn eval(&self, x: f64) -> Result<StiefelPoint> {
        let (theta, t) = self.gauge(x)?;
        Ok(gauge_action(self.sign, &(self.lift)(x), theta, t))
    }
}

/// Normalizes a one-parameter horizontal lift starting at x₀.
pub fn normalize_lift_1d(lift: Lift1d, s: Sign, x0: f64) -> Result<NormalizedLift> {
    let step = tol::FD_STEP;
    let c = lift_coefficients(lift.as_ref(), x0, step)?;
    let residual = horizontality_residual(s, &c);
    if residual > tol::HORIZONTAL {
        return Err(Error::NotHorizontal(format!(
            "sign {s}: horizontality residual {residual:.3e} at x = {x0}"
        )));
    }
    Ok(NormalizedLift {
        lift,
        sign: s,
        x0,
        step,
    })
}
