//! Hopf hypersurface patches Φ̃_r^s in H₁^{2n+1} built from horizontal
//! Stiefel data, their normal lifts, and the classical examples.

mod examples;
mod shape;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fibration::{horizontal_unchecked, tangent_unchecked};
use crate::linalg::{herm_unchecked, real_unchecked, IndefVector, C64, I};
use crate::tol;
use crate::twistor::{
    gamma_coefficients, horizontality_residual, lift_coefficients, tangent_coefficients, Sign, StiefelPoint,
};

pub use examples::{example_horosphere, example_tube_chk, example_tube_rhn, ExampleKind};
pub use shape::{
    cluster_eigenvalues, hopf_pc2_residual, pc2_denominator, shape_operator, verify_hopf, Eigenvalue, HopfTolerances,
    Pc2Pair, PointReport, ShapeOperator, ShapeReport, Trichotomy,
};

pub type PatchFn = Arc<dyn Fn(&[f64]) -> IndefVector + Send + Sync>;
pub type ChartFn = Arc<dyn Fn(&[f64]) -> StiefelPoint + Send + Sync>;

/// A horizontal Stiefel lift over a chart of dimension 2n − 2.
#[derive(Clone)]
pub struct ChartLift {
    pub dim_n: usize,
    pub names: Vec<String>,
    pub sample_box: Vec<(f64, f64)>,
    pub map: ChartFn,
}

impl fmt::Debug for ChartLift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartLift")
            .field("dim_n", &self.dim_n)
            .field("names", &self.names)
            .field("sample_box", &self.sample_box)
            .finish_non_exhaustive()
    }
}

/// A parametrised map into H₁^{2n+1} with a horizontal unit normal lift N′.
///
/// Chart coordinate 0 is always the fibre angle θ.
#[derive(Clone)]
pub struct HypersurfacePatch {
    label: String,
    sign: Sign,
    r: f64,
    dim_n: usize,
    names: Vec<String>,
    sample_box: Vec<(f64, f64)>,
    expected_mu: Option<f64>,
    eval: PatchFn,
    normal: PatchFn,
}

impl fmt::Debug for HypersurfacePatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HypersurfacePatch")
            .field("label", &self.label)
            .field("sign", &self.sign)
            .field("r", &self.r)
            .field("dim_n", &self.dim_n)
            .field("names", &self.names)
            .finish_non_exhaustive()
    }
}

/// Residuals of the patch invariants at one chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchResiduals {
    pub ads: f64,
    pub normal_unit: f64,
    pub normal_horizontal: f64,
    pub normal_orthogonal: f64,
    pub sigma_min: f64,
}

impl HypersurfacePatch {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        sign: Sign,
        r: f64,
        dim_n: usize,
        names: Vec<String>,
        sample_box: Vec<(f64, f64)>,
        expected_mu: Option<f64>,
        eval: PatchFn,
        normal: PatchFn,
    ) -> Result<Self> {
        if dim_n < 2 {
            return Err(Error::InvalidInput(format!("hypersurface patches need n >= 2, got {dim_n}")));
        }
        if names.len() != 2 * dim_n || sample_box.len() != 2 * dim_n {
            return Err(Error::InvalidInput(format!(
                "a patch in CH^{dim_n} needs {} chart coordinates, got {} names and {} ranges",
                2 * dim_n,
                names.len(),
                sample_box.len()
            )));
        }
        if sample_box.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return Err(Error::InvalidInput("malformed sample box".into()));
        }
        Ok(Self {
            label: label.into(),
            sign,
            r,
            dim_n,
            names,
            sample_box,
            expected_mu,
            eval,
            normal,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    pub fn sample_box(&self) -> &[(f64, f64)] {
        &self.sample_box
    }

    /// Hopf curvature predicted for the normal N′, if known.
    pub fn expected_mu(&self) -> Option<f64> {
        self.expected_mu
    }

    pub fn center(&self) -> Vec<f64> {
        self.sample_box.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    fn check_params(&self, at: &[f64]) -> Result<()> {
        if at.len() != 2 * self.dim_n {
            return Err(Error::InvalidInput(format!(
                "expected {} chart coordinates, got {}",
                2 * self.dim_n,
                at.len()
            )));
        }
        if at.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("chart coordinates"));
        }
        Ok(())
    }

    /// Ψ̃ at a chart point.
    pub fn eval(&self, at: &[f64]) -> Result<IndefVector> {
        self.check_params(at)?;
        Ok((self.eval)(at))
    }

    /// N′ at a chart point.
    pub fn normal_lift(&self, at: &[f64]) -> Result<IndefVector> {
        self.check_params(at)?;
        Ok((self.normal)(at))
    }

    pub(crate) fn eval_raw(&self, at: &[f64]) -> IndefVector {
        (self.eval)(at)
    }

    pub(crate) fn normal_raw(&self, at: &[f64]) -> IndefVector {
        (self.normal)(at)
    }

    /// Central differences of Ψ̃ and N′ along chart coordinate j.
    pub(crate) fn partials(&self, at: &[f64], j: usize, h: f64) -> (IndefVector, IndefVector) {
        let mut plus = at.to_vec();
        let mut minus = at.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let k = 0.5 / h;
        (
            (self.eval_raw(&plus) - self.eval_raw(&minus)) * k,
            (self.normal_raw(&plus) - self.normal_raw(&minus)) * k,
        )
    }

    /// Residuals of the AdS, unit-normal, horizontality, orthogonality and
    /// immersion conditions at a chart point.
    pub fn residuals(&self, at: &[f64], step: f64) -> Result<PatchResiduals> {
        self.check_params(at)?;
        let psi = self.eval_raw(at);
        let n = self.normal_raw(at);
        let ads = (herm_unchecked(&psi, &psi) + 1.0).norm();
        let normal_unit = (real_unchecked(&n, &n) - 1.0).abs();
        let normal_horizontal = real_unchecked(&n, &psi.times_i()).abs().max(real_unchecked(&n, &psi).abs());
        let mut normal_orthogonal: f64 = 0.0;
        let mut frame = Vec::with_capacity(2 * self.dim_n - 1);
        for j in 0..2 * self.dim_n {
            let (dpsi, _) = self.partials(at, j, step);
            normal_orthogonal = normal_orthogonal.max(real_unchecked(&dpsi, &n).abs());
            if j > 0 {
                frame.push(horizontal_unchecked(&dpsi, &psi));
            }
        }
        let sigma_min = shape::smallest_singular_value(&frame);
        Ok(PatchResiduals {
            ads,
            normal_unit,
            normal_horizontal,
            normal_orthogonal,
            sigma_min,
        })
    }

    /// Checks every invariant at a chart point, returning the first failure.
    pub fn validate_at(&self, at: &[f64], step: f64) -> Result<PatchResiduals> {
        let res = self.residuals(at, step)?;
        if res.ads > tol::NORMAL {
            return Err(Error::Validation {
                what: "anti-de Sitter membership of the patch",
                residual: res.ads,
                tol: tol::NORMAL,
            });
        }
        if res.sigma_min <= tol::IMMERSION {
            return Err(Error::Immersion { sigma: res.sigma_min });
        }
        let worst = res.normal_unit.max(res.normal_horizontal).max(res.normal_orthogonal);
        if worst > tol::NORMAL {
            return Err(Error::NotNormal { residual: worst });
        }
        Ok(res)
    }

    /// A grid over the sample box: `density` samples per coordinate in
    /// lexicographic order, evenly thinned to at most `cap` points.
    pub fn sample_grid(&self, density: usize, cap: usize) -> Result<Vec<Vec<f64>>> {
        sample_grid(&self.sample_box, density, cap)
    }

    /// `count` points drawn uniformly from the sample box.
    pub fn random_points<R: rand::Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                self.sample_box
                    .iter()
                    .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo })
                    .collect()
            })
            .collect()
    }
}

/// Lexicographic product grid over a box, evenly thinned to `cap` points.
pub fn sample_grid(sample_box: &[(f64, f64)], density: usize, cap: usize) -> Result<Vec<Vec<f64>>> {
    if density < 2 {
        return Err(Error::InvalidInput(format!("grid density must be at least 2, got {density}")));
    }
    if cap == 0 {
        return Err(Error::InvalidInput("grid cap must be positive".into()));
    }
    let dims = sample_box.len();
    let total = density
        .checked_pow(dims as u32)
        .ok_or_else(|| Error::InvalidInput("grid too large".into()))?;
    let count = total.min(cap);
    let axis = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (density - 1) as f64;
    Ok((0..count)
        .map(|k| {
            // Evenly spaced indices into the full product, endpoints included.
            let mut idx = if count == total || count == 1 {
                k
            } else {
                k * (total - 1) / (count - 1)
            };
            let mut point = vec![0.0; dims];
            for d in (0..dims).rev() {
                point[d] = axis(sample_box[d], idx % density);
                idx /= density;
            }
            point
        })
        .collect())
}

/// ξ′ = −iN′, the horizontal lift of the structure vector.
pub fn xi_lift(p: &HypersurfacePatch, at: &[f64]) -> Result<IndefVector> {
    Ok(p.normal_lift(at)?.scale(-I))
}

/// φX = iX − ⟨iX, N′⟩N′ for a horizontal tangent vector X.
pub fn phi_of(p: &HypersurfacePatch, at: &[f64], x: &IndefVector) -> Result<IndefVector> {
    let psi = p.eval(at)?;
    let n = p.normal_raw(at);
    if x.dim_n() != p.dim_n {
        return Err(Error::DimensionMismatch {
            expected: p.dim_n,
            found: x.dim_n(),
        });
    }
    let residual = real_unchecked(x, &psi)
        .abs()
        .max(real_unchecked(x, &psi.times_i()).abs())
        .max(real_unchecked(x, &n).abs());
    if residual > tol::NORMAL * x.euclid_norm().max(1.0) {
        return Err(Error::NotTangent { residual });
    }
    Ok(phi_unchecked(x, &n))
}

pub(crate) fn phi_unchecked(x: &IndefVector, n: &IndefVector) -> IndefVector {
    let ix = x.times_i();
    let k = real_unchecked(&ix, n);
    ix - n * k
}

/// ‖cosh r′ Ψ̃_r + sinh r′ N′_r − Ψ̃_{r+r′}‖ at a chart point.
pub fn parallel_family_residual(
    base: &HypersurfacePatch,
    shifted: &HypersurfacePatch,
    r_prime: f64,
    at: &[f64],
) -> Result<f64> {
    let lhs = base.eval(at)? * r_prime.cosh() + base.normal_raw(at) * r_prime.sinh();
    Ok((lhs - shifted.eval(at)?).euclid_norm())
}

fn default_names(dim_n: usize) -> Vec<String> {
    let mut names = vec!["theta".to_string(), "t".to_string()];
    names.extend((0..2 * dim_n - 2).map(|k| format!("q{k}")));
    names
}

/// Φ̃_r^s(θ, t, q) = e^{iθ} γ_r^s(t) for the Stiefel pair u(q), with normal
/// lift N′ = e^{iθ} i T_r^s(t).
pub fn build_phi(s: Sign, r: f64, lift: &ChartLift) -> Result<HypersurfacePatch> {
    let n = lift.dim_n;
    if n < 2 {
        return Err(Error::InvalidInput(format!("n must be at least 2, got {n}")));
    }
    if lift.sample_box.len() != 2 * n - 2 {
        return Err(Error::InvalidInput(format!(
            "a lift over CH^{n} needs {} base coordinates, got {}",
            2 * n - 2,
            lift.sample_box.len()
        )));
    }
    if !r.is_finite() {
        return Err(Error::NonFinite("radius"));
    }
    if s == Sign::Plus && r == 0.0 {
        return Err(Error::DegenerateRadius);
    }
    check_lift_horizontal(s, lift)?;

    let map = lift.map.clone();
    let eval: PatchFn = Arc::new(move |p: &[f64]| {
        let u = map(&p[2..]);
        let (a, b) = gamma_coefficients(s, r, p[1]);
        (u.u_minus() * a + u.u_plus() * b).scale(C64::from_polar(1.0, p[0]))
    });
    let map = lift.map.clone();
    let normal: PatchFn = Arc::new(move |p: &[f64]| {
        let u = map(&p[2..]);
        let (a, b) = tangent_coefficients(s, r, p[1]).expect("radius checked at construction");
        (u.u_minus() * a + u.u_plus() * b).scale(I * C64::from_polar(1.0, p[0]))
    });

    let mut names = default_names(n);
    for (k, name) in lift.names.iter().enumerate() {
        names[k + 2] = name.clone();
    }
    let mut sample_box = vec![(-0.3, 0.3), (-0.3, 0.3)];
    sample_box.extend(lift.sample_box.iter().copied());
    let patch = HypersurfacePatch::new(
        format!("phi-{s}"),
        s,
        r,
        n,
        names,
        sample_box,
        Some(s.hopf_curvature(r)),
        eval,
        normal,
    )?;
    patch.validate_at(&patch.center(), tol::FD_STEP)?;
    Ok(patch)
}

fn check_lift_horizontal(s: Sign, lift: &ChartLift) -> Result<()> {
    let center: Vec<f64> = lift.sample_box.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
    for j in 0..center.len() {
        let map = lift.map.clone();
        let base = center.clone();
        let along = move |x: f64| {
            let mut q = base.clone();
            q[j] = x;
            map(&q)
        };
        let c = lift_coefficients(&along, center[j], tol::FD_STEP)?;
        let residual = horizontality_residual(s, &c);
        if residual > tol::HORIZONTAL {
            return Err(Error::NotHorizontal(format!(
                "sign {s}: residual {residual:.3e} along base coordinate {}",
                lift.names.get(j).map(String::as_str).unwrap_or("?")
            )));
        }
    }
    Ok(())
}

/// 𝓗-projected tangent-space component of an ambient vector at Ψ.
pub(crate) fn horizontal_tangent(x: &IndefVector, psi: &IndefVector) -> IndefVector {
    horizontal_unchecked(&tangent_unchecked(x, psi), psi)
}

#[cfg(test)]
pub(crate) fn norm_of(x: &IndefVector) -> f64 {
    crate::fibration::form_norm(x)
}
