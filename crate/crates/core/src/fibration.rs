//! The Hopf fibration π: H₁^{2n+1} → ℂHⁿ, horizontal projections and
//! finite-difference curve geometry.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{herm_unchecked, real_unchecked, IndefVector, C64};
use crate::tol;

/// A point of the anti-de Sitter space ((w, w)) = −1.
#[derive(Debug, Clone, PartialEq)]
pub struct AdSPoint {
    vec: IndefVector,
}

impl AdSPoint {
    pub fn new(vec: IndefVector) -> Result<Self> {
        Self::with_tol(vec, tol::MEMBERSHIP)
    }

    pub fn with_tol(vec: IndefVector, tol: f64) -> Result<Self> {
        if !vec.is_finite() {
            return Err(Error::NonFinite("anti-de Sitter point"));
        }
        let residual = (herm_unchecked(&vec, &vec) + 1.0).norm();
        if residual > tol {
            return Err(Error::Validation {
                what: "anti-de Sitter membership",
                residual,
                tol,
            });
        }
        Ok(Self { vec })
    }

    pub fn vec(&self) -> &IndefVector {
        &self.vec
    }

    pub fn into_vec(self) -> IndefVector {
        self.vec
    }

    pub fn dim_n(&self) -> usize {
        self.vec.dim_n()
    }
}

/// A point of ℂHⁿ stored as a gauge-fixed representative of its fibre.
#[derive(Debug, Clone, PartialEq)]
pub struct CHPoint {
    rep: AdSPoint,
}

impl CHPoint {
    /// Rotates the representative so its first nonvanishing coordinate is
    /// real and positive.
    pub fn new(p: AdSPoint) -> Self {
        let coords = p.vec.coords();
        let phase = coords
            .iter()
            .find(|z| z.norm() > 1e-12)
            .map(|z| z.conj() / z.norm())
            .unwrap_or(C64::new(1.0, 0.0));
        let mut vec = p.vec.scale(phase);
        // Remove the residual imaginary part left by rounding.
        if let Some(z) = vec.coords_mut().iter_mut().find(|z| z.norm() > 1e-12) {
            *z = C64::new(z.norm(), 0.0);
        }
        Self { rep: AdSPoint { vec } }
    }

    pub fn rep(&self) -> &AdSPoint {
        &self.rep
    }
}

/// Whether two points lie on the same fibre: | |((a, b))| − 1 | ≤ tol.
pub fn ch_equal(a: &CHPoint, b: &CHPoint, tol: f64) -> bool {
    a.rep.dim_n() == b.rep.dim_n() && (herm_unchecked(a.rep.vec(), b.rep.vec()).norm() - 1.0).abs() <= tol
}

type CurveFn = dyn Fn(f64) -> IndefVector + Send + Sync;

/// A parametrised curve into H₁^{2n+1} on a closed interval.
#[derive(Clone)]
pub struct ParamCurve {
    eval: Arc<CurveFn>,
    domain: (f64, f64),
}

impl fmt::Debug for ParamCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamCurve").field("domain", &self.domain).finish_non_exhaustive()
    }
}

impl ParamCurve {
    pub fn new(domain: (f64, f64), eval: impl Fn(f64) -> IndefVector + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            domain,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// The raw coordinate vector, without the hyperquadric check.
    pub fn raw(&self, t: f64) -> IndefVector {
        (self.eval)(t)
    }

    pub fn eval(&self, t: f64) -> Result<AdSPoint> {
        let (lo, hi) = self.domain;
        if !(lo..=hi).contains(&t) {
            return Err(Error::Domain { t, step: 0.0, lo, hi });
        }
        AdSPoint::new(self.raw(t))
    }

    fn check_window(&self, t: f64, reach: f64) -> Result<()> {
        let (lo, hi) = self.domain;
        if !(t.is_finite() && reach.is_finite() && reach > 0.0) || t - reach < lo || t + reach > hi {
            return Err(Error::Domain { t, step: reach, lo, hi });
        }
        Ok(())
    }
}

fn tangency_tol(x: &IndefVector) -> f64 {
    tol::TANGENCY * x.euclid_norm().max(1.0)
}

/// 𝓗X = X + ⟨X, iw⟩ iw.
pub fn horizontal_part(x: &IndefVector, w: &AdSPoint) -> Result<IndefVector> {
    if x.dim_n() != w.dim_n() {
        return Err(Error::DimensionMismatch {
            expected: w.dim_n(),
            found: x.dim_n(),
        });
    }
    let residual = real_unchecked(x, w.vec()).abs();
    if residual > tangency_tol(x) {
        return Err(Error::NotTangent { residual });
    }
    Ok(horizontal_unchecked(x, w.vec()))
}

pub(crate) fn horizontal_unchecked(x: &IndefVector, w: &IndefVector) -> IndefVector {
    let iw = w.times_i();
    x + &iw * real_unchecked(x, &iw)
}

/// X + ⟨X, w⟩ w, the projection onto the tangent space of H₁^{2n+1} at w.
pub fn tangent_project_ads(x: &IndefVector, w: &AdSPoint) -> IndefVector {
    tangent_unchecked(x, w.vec())
}

pub(crate) fn tangent_unchecked(x: &IndefVector, w: &IndefVector) -> IndefVector {
    x + w * real_unchecked(x, w)
}

/// Norm of a spacelike vector for the real form; 0 for null or timelike input.
pub(crate) fn form_norm(x: &IndefVector) -> f64 {
    real_unchecked(x, x).max(0.0).sqrt()
}

/// Central difference (c(t+h) − c(t−h)) / 2h.
pub fn numeric_derivative(c: &ParamCurve, t: f64, step: f64) -> Result<IndefVector> {
    c.check_window(t, step)?;
    Ok(central(c, t, step))
}

fn central(c: &ParamCurve, t: f64, h: f64) -> IndefVector {
    (c.raw(t + h) - c.raw(t - h)) * (0.5 / h)
}

/// Curvature of the projected curve π∘c at t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveCurvature {
    /// κ = ‖∇_T T‖ ≥ 0.
    pub kappa: f64,
    /// ‖∇_T T − σκ iT‖ for the better sign σ.
    pub residual: f64,
    /// Orientation sign σ ∈ {+1, −1}.
    pub sign: f64,
}

/// Unit horizontal tangent of π∘c at t together with the horizontal speed
/// and the vertical rate ⟨c′, ic⟩.
fn unit_tangent(c: &ParamCurve, t: f64, h: f64) -> Result<(IndefVector, f64, f64)> {
    let p = c.raw(t);
    let d = central(c, t, h);
    let hd = horizontal_unchecked(&d, &p);
    let speed = form_norm(&hd);
    if speed < 1e-8 {
        return Err(Error::DegenerateCurve { speed });
    }
    let vertical = real_unchecked(&d, &p.times_i());
    Ok((hd * (1.0 / speed), speed, vertical))
}

/// Computes κ and the residual of the circle equation ∇_T T = σκ iT for the
/// projection of c, by central differences with step `step`.
///
/// T is extended along the fibre equivariantly, so the derivative along the
/// vertical part of c′ contributes ⟨c′, ic⟩ · iT.
pub fn curve_curvature(c: &ParamCurve, t: f64, step: f64) -> Result<CurveCurvature> {
    c.check_window(t, 2.0 * step)?;
    let p = c.raw(t);
    let (tt, speed, vertical) = unit_tangent(c, t, step)?;
    let (t_plus, _, _) = unit_tangent(c, t + step, step)?;
    let (t_minus, _, _) = unit_tangent(c, t - step, step)?;
    let dt = (t_plus - t_minus) * (0.5 / step);
    let ambient = (dt + tt.times_i() * vertical) * (1.0 / speed);
    let nabla = horizontal_unchecked(&tangent_unchecked(&ambient, &p), &p);
    let kappa = form_norm(&nabla);
    let it = tt.times_i();
    let res = |sign: f64| form_norm(&(&nabla - &it * (sign * kappa)));
    let (r_plus, r_minus) = (res(1.0), res(-1.0));
    let (sign, residual) = if r_plus <= r_minus { (1.0, r_plus) } else { (-1.0, r_minus) };
    Ok(CurveCurvature { kappa, residual, sign })
}
