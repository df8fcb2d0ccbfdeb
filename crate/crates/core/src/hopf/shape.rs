//! Finite-difference shape operators and Hopf certification.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{horizontal_tangent, phi_unchecked, HypersurfacePatch};
use crate::error::{Error, Result};
use crate::linalg::{real_unchecked, IndefVector, I};
use crate::tol;
use crate::twistor::Sign;

/// The shape operator in an orthonormal horizontal frame whose first vector
/// is ξ′.
#[derive(Debug, Clone)]
pub struct ShapeOperator {
    pub matrix: DMatrix<f64>,
    pub frame: Vec<IndefVector>,
    pub sigma_min: f64,
    /// Worst relative residual of 𝓗DN′ against the span of the frame.
    pub lsq_residual: f64,
    /// Largest |⟨dΨ̃(∂_j), N′⟩| over chart directions.
    pub normal_residual: f64,
}

fn gram(a: &[IndefVector], b: &[IndefVector]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| real_unchecked(&a[i], &b[j]))
}

pub(crate) fn smallest_singular_value(frame: &[IndefVector]) -> f64 {
    if frame.is_empty() {
        return 0.0;
    }
    let g = gram(frame, frame);
    let g = (&g + g.transpose()) * 0.5;
    SymmetricEigen::new(g).eigenvalues.min().max(0.0).sqrt()
}

fn combination(coefs: &DVector<f64>, vectors: &[IndefVector]) -> IndefVector {
    vectors
        .iter()
        .zip(coefs.iter())
        .fold(IndefVector::zeros(vectors[0].dim_n()), |acc, (v, &c)| acc + v * c)
}

/// Estimates A from central differences of Ψ̃ and N′ with step `step`,
/// using the Weingarten relation 𝓗 D_{dΨ̃(Z)} N′ = −dΨ̃(AZ).
///
/// Each chart tangent is made horizontal by adding its vertical component
/// ⟨dΨ̃, iΨ̃⟩ iΨ̃, and the derivative of N′ along iΨ̃ is iN′.
pub fn shape_operator(p: &HypersurfacePatch, at: &[f64], step: f64) -> Result<ShapeOperator> {
    if !(step > 0.0 && step <= 1e-2) {
        return Err(Error::InvalidInput(format!("finite-difference step must lie in (0, 1e-2], got {step}")));
    }
    let psi = p.eval(at)?;
    let n = p.normal_raw(at);
    let ipsi = psi.times_i();
    let i_n = n.times_i();
    let dims = 2 * p.dim_n();

    let mut xs = Vec::with_capacity(dims - 1);
    let mut ws = Vec::with_capacity(dims - 1);
    let mut normal_residual: f64 = 0.0;
    for j in 0..dims {
        let (dpsi, dn) = p.partials(at, j, step);
        normal_residual = normal_residual.max(real_unchecked(&dpsi, &n).abs());
        if j == 0 {
            continue;
        }
        let a = real_unchecked(&dpsi, &ipsi);
        xs.push(&dpsi + &ipsi * a);
        let dn = dn + &i_n * a;
        ws.push(-horizontal_tangent(&dn, &psi));
    }
    let m = xs.len();

    let g = gram(&xs, &xs);
    let g = (&g + g.transpose()) * 0.5;
    let sigma_min = SymmetricEigen::new(g.clone()).eigenvalues.min().max(0.0).sqrt();
    if sigma_min <= tol::IMMERSION {
        return Err(Error::Immersion { sigma: sigma_min });
    }
    let chol = g
        .clone()
        .cholesky()
        .ok_or(Error::Immersion { sigma: sigma_min })?;
    let mw = gram(&xs, &ws);

    // Least-squares fit of each 𝓗DN′ in the span of the chart tangents.
    let coef = chol.solve(&mw);
    let mut lsq_residual: f64 = 0.0;
    for (j, w) in ws.iter().enumerate() {
        let fit = combination(&coef.column(j).into_owned(), &xs);
        let scale = w.euclid_norm().max(1.0);
        lsq_residual = lsq_residual.max((w - fit).euclid_norm() / scale);
    }
    if lsq_residual > 1e-4 {
        return Err(Error::NotCertifiable { residual: lsq_residual });
    }

    // Orthonormal frame, greedily from ξ′.
    let xi = n.scale(-I);
    let b = DVector::from_iterator(m, xs.iter().map(|x| real_unchecked(x, &xi)));
    let c_xi = chol.solve(&b);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m);
    let candidates = std::iter::once(c_xi).chain((0..m).map(|k| DVector::from_fn(m, |i, _| if i == k { 1.0 } else { 0.0 })));
    for mut v in candidates {
        if basis.len() == m {
            break;
        }
        for u in &basis {
            let proj = (u.transpose() * &g * &v)[(0, 0)];
            v -= u * proj;
        }
        let norm = (v.transpose() * &g * &v)[(0, 0)].max(0.0).sqrt();
        if norm > 1e-6 {
            basis.push(v / norm);
        }
    }
    if basis.len() < m {
        return Err(Error::Immersion { sigma: sigma_min });
    }
    let c = DMatrix::from_columns(&basis);
    let matrix = c.transpose() * &mw * &c;
    let frame = basis.iter().map(|v| combination(v, &xs)).collect();
    Ok(ShapeOperator {
        matrix,
        frame,
        sigma_min,
        lsq_residual,
        normal_residual,
    })
}

/// A principal curvature with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub value: f64,
    pub multiplicity: usize,
}

/// Groups sorted values into buckets whose consecutive gaps are at most tol.
pub fn cluster_eigenvalues(values: &[f64], tol: f64) -> Vec<Eigenvalue> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize, f64)> = Vec::new();
    for v in sorted {
        match out.last_mut() {
            Some((sum, count, last)) if v - *last <= tol => {
                *sum += v;
                *count += 1;
                *last = v;
            }
            _ => out.push((v, 1, v)),
        }
    }
    out.into_iter()
        .map(|(sum, count, _)| Eigenvalue {
            value: sum / count as f64,
            multiplicity: count,
        })
        .collect()
}

/// 2λ − μ, the denominator of the principal-curvature relation.
pub fn pc2_denominator(lambda: f64, mu: f64) -> f64 {
    2.0 * lambda - mu
}

/// |λ* − (λμ + 2c)/(2λ − μ)| with c = −1.
pub fn hopf_pc2_residual(lambda: f64, lambda_star: f64, mu: f64) -> Result<f64> {
    let den = pc2_denominator(lambda, mu);
    if den.abs() <= 1e-8 {
        return Err(Error::ExceptionalCase { denominator: den });
    }
    Ok((lambda_star - (lambda * mu - 2.0) / den).abs())
}

/// A principal curvature λ on ξ^⊥ paired with λ*, the curvature on the
/// eigenspace carrying most of φ(V_λ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pc2Pair {
    pub lambda: f64,
    pub lambda_star: f64,
    /// None in the exceptional case |2λ − μ| ≤ 1e-3.
    pub residual: Option<f64>,
}

/// Shape data at one grid point, for the normal N′.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub params: Vec<f64>,
    pub mu: f64,
    pub eigenvalues: Vec<f64>,
    /// Spectrum of the block on ξ^⊥.
    pub eigenvalues_perp: Vec<f64>,
    pub hopf_residual: f64,
    pub symmetry_residual: f64,
    pub normal_residual: f64,
    pub sigma_min: f64,
    pub pc2: Vec<Pc2Pair>,
}

fn analyze_point(p: &HypersurfacePatch, at: &[f64], step: f64) -> Result<PointReport> {
    let op = shape_operator(p, at, step)?;
    let a = &op.matrix;
    let m = a.nrows();
    let mu = a[(0, 0)];
    let hopf_residual = (1..m).map(|k| a[(k, 0)] * a[(k, 0)]).sum::<f64>().sqrt();
    let symmetry_residual = (a - a.transpose()).amax();
    let sym = (a + a.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(sym.clone()).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let mut eigenvalues_perp: Vec<f64> = if m > 1 {
        SymmetricEigen::new(sym.view((1, 1), (m - 1, m - 1)).into_owned())
            .eigenvalues
            .iter()
            .copied()
            .collect()
    } else {
        Vec::new()
    };
    eigenvalues_perp.sort_by(f64::total_cmp);
    let pc2 = pair_principal_curvatures(p, at, &op, &sym, mu);
    Ok(PointReport {
        params: at.to_vec(),
        mu,
        eigenvalues,
        eigenvalues_perp,
        hopf_residual,
        symmetry_residual,
        normal_residual: op.normal_residual,
        sigma_min: op.sigma_min,
        pc2,
    })
}

fn pair_principal_curvatures(
    p: &HypersurfacePatch,
    at: &[f64],
    op: &ShapeOperator,
    sym: &DMatrix<f64>,
    mu: f64,
) -> Vec<Pc2Pair> {
    let m = sym.nrows();
    if m < 2 {
        return Vec::new();
    }
    let reduced = sym.view((1, 1), (m - 1, m - 1)).into_owned();
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..m - 1).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    // Buckets of eigenvector indices.
    let mut buckets: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &i in &order {
        let v = eig.eigenvalues[i];
        match buckets.last_mut() {
            Some((_, idx)) if v - last <= tol::CLUSTER => idx.push(i),
            _ => buckets.push((v, vec![i])),
        }
        last = v;
    }
    for (value, idx) in &mut buckets {
        *value = idx.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / idx.len() as f64;
    }

    let n = p.normal_raw(at);
    let frame = &op.frame[1..];
    let coords_of_phi = |i: usize| -> DVector<f64> {
        let v = eig.eigenvectors.column(i);
        let x = frame
            .iter()
            .zip(v.iter())
            .fold(IndefVector::zeros(p.dim_n()), |acc, (e, &c)| acc + e * c);
        let phix = phi_unchecked(&x, &n);
        DVector::from_iterator(frame.len(), frame.iter().map(|e| real_unchecked(&phix, e)))
    };

    buckets
        .iter()
        .map(|(lambda, idx)| {
            let images: Vec<DVector<f64>> = idx.iter().map(|&i| coords_of_phi(i)).collect();
            let (star, _) = buckets
                .iter()
                .map(|(value, target)| {
                    let weight: f64 = images
                        .iter()
                        .map(|y| {
                            target
                                .iter()
                                .map(|&k| eig.eigenvectors.column(k).dot(y).powi(2))
                                .sum::<f64>()
                        })
                        .sum();
                    (*value, weight)
                })
                .fold((f64::NAN, f64::NEG_INFINITY), |best, cand| if cand.1 > best.1 { cand } else { best });
            let residual = if pc2_denominator(*lambda, mu).abs() > 1e-3 {
                hopf_pc2_residual(*lambda, star, mu).ok()
            } else {
                None
            };
            Pc2Pair {
                lambda: *lambda,
                lambda_star: star,
                residual,
            }
        })
        .collect()
}

/// Thresholds used when certifying a patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfTolerances {
    pub hopf: f64,
    pub symmetry: f64,
    pub mu_constant: f64,
    pub mu: f64,
    pub pc2: f64,
}

impl Default for HopfTolerances {
    fn default() -> Self {
        Self {
            hopf: 1e-4,
            symmetry: 1e-5,
            mu_constant: 1e-4,
            mu: 1e-4,
            pc2: 1e-4,
        }
    }
}

/// Which side of |μ| = 2 the patch falls on, with its margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trichotomy {
    /// |μ| − 2.
    pub margin: f64,
    pub holds: bool,
}

impl Trichotomy {
    fn evaluate(sign: Sign, mu: f64, tol: f64) -> Self {
        let margin = mu.abs() - 2.0;
        let holds = match sign {
            Sign::Plus => margin > tol,
            Sign::Minus => margin < -tol,
            Sign::Zero => margin.abs() <= tol,
        };
        Self { margin, holds }
    }
}

/// Aggregated shape data over a grid.
///
/// `mu` and `eigenvalues` refer to the normal N′; `eigenvalues_flipped` to −N′.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub label: String,
    pub sign: Sign,
    pub r: f64,
    pub dim_n: usize,
    pub mu: f64,
    pub mu_spread: f64,
    pub mu_expected: Option<f64>,
    pub trichotomy: Trichotomy,
    pub eigenvalues: Vec<Eigenvalue>,
    pub eigenvalues_flipped: Vec<Eigenvalue>,
    pub spectrum_spread: f64,
    pub hopf_residual: f64,
    pub symmetry_residual: f64,
    pub normal_residual: f64,
    pub pc2_residuals: Vec<f64>,
    pub pc2_exceptional: usize,
    pub grid_size: usize,
    pub points: Vec<PointReport>,
    pub certified: bool,
    pub failures: Vec<String>,
}

impl ShapeReport {
    pub fn max_pc2_residual(&self) -> f64 {
        self.pc2_residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn fmt_point(at: &[f64]) -> String {
    let parts: Vec<String> = at.iter().map(|x| format!("{x:.4}")).collect();
    format!("({})", parts.join(", "))
}

/// Evaluates the shape operator at every grid point (in parallel) and
/// certifies the Hopf condition, constancy of μ, the expected value of μ,
/// the |μ| trichotomy and the principal-curvature relation.
pub fn verify_hopf(p: &HypersurfacePatch, grid: &[Vec<f64>], step: f64, tol: &HopfTolerances) -> ShapeReport {
    let results: Vec<Result<PointReport>> = grid.par_iter().map(|at| analyze_point(p, at, step)).collect();
    let mut failures = Vec::new();
    let mut points = Vec::with_capacity(grid.len());
    for (at, res) in grid.iter().zip(results) {
        match res {
            Ok(pt) => points.push(pt),
            Err(e) => failures.push(format!("{}: {e}", fmt_point(at))),
        }
    }
    if grid.is_empty() {
        failures.push("empty grid".to_string());
    }

    let worst = |f: fn(&PointReport) -> f64| -> (f64, Option<&PointReport>) {
        points
            .iter()
            .map(|pt| (f(pt), pt))
            .fold((0.0, None), |acc, (v, pt)| if v > acc.0 || v.is_nan() { (v, Some(pt)) } else { acc })
    };
    let (hopf_residual, hopf_at) = worst(|pt| pt.hopf_residual);
    let (symmetry_residual, sym_at) = worst(|pt| pt.symmetry_residual);
    let (normal_residual, _) = worst(|pt| pt.normal_residual);
    if hopf_residual > tol.hopf {
        failures.push(format!(
            "Hopf residual {hopf_residual:.3e} exceeds {:.1e} at {}",
            tol.hopf,
            fmt_point(&hopf_at.map(|pt| pt.params.clone()).unwrap_or_default())
        ));
    }
    if symmetry_residual > tol.symmetry {
        failures.push(format!(
            "symmetry residual {symmetry_residual:.3e} exceeds {:.1e} at {}",
            tol.symmetry,
            fmt_point(&sym_at.map(|pt| pt.params.clone()).unwrap_or_default())
        ));
    }
    if normal_residual > tol::NORMAL {
        failures.push(format!("normal orthogonality residual {normal_residual:.3e}"));
    }

    let (mu, mu_spread) = if points.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mean = points.iter().map(|pt| pt.mu).sum::<f64>() / points.len() as f64;
        let lo = points.iter().map(|pt| pt.mu).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|pt| pt.mu).fold(f64::NEG_INFINITY, f64::max);
        (mean, hi - lo)
    };
    if mu_spread > tol.mu_constant {
        failures.push(format!("mu varies by {mu_spread:.3e} over the grid"));
    }
    if let Some(expected) = p.expected_mu() {
        if (mu - expected).abs() > tol.mu || mu.is_nan() {
            failures.push(format!("mu = {mu:.9} differs from expected {expected:.9}"));
        }
    }
    let trichotomy = Trichotomy::evaluate(p.sign(), mu, tol.mu);
    if !trichotomy.holds {
        failures.push(format!("|mu| - 2 = {:.3e} violates the {} trichotomy", trichotomy.margin, p.sign()));
    }

    let size = 2 * p.dim_n() - 1;
    let (mean_spectrum, spectrum_spread) = if points.is_empty() {
        (Vec::new(), f64::NAN)
    } else {
        let mean: Vec<f64> = (0..size)
            .map(|k| points.iter().map(|pt| pt.eigenvalues[k]).sum::<f64>() / points.len() as f64)
            .collect();
        let spread = points
            .iter()
            .flat_map(|pt| pt.eigenvalues.iter().zip(&mean).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        (mean, spread)
    };
    let eigenvalues = cluster_eigenvalues(&mean_spectrum, tol::CLUSTER);
    let flipped: Vec<f64> = mean_spectrum.iter().map(|v| -v).collect();
    let eigenvalues_flipped = cluster_eigenvalues(&flipped, tol::CLUSTER);

    let pc2_residuals: Vec<f64> = points
        .iter()
        .flat_map(|pt| pt.pc2.iter().filter_map(|pair| pair.residual))
        .collect();
    let pc2_exceptional = points
        .iter()
        .flat_map(|pt| pt.pc2.iter().filter(|pair| pair.residual.is_none()))
        .count();
    let pc2_max = pc2_residuals.iter().copied().fold(0.0, f64::max);
    if pc2_max > tol.pc2 {
        failures.push(format!("principal-curvature relation residual {pc2_max:.3e}"));
    }

    ShapeReport {
        label: p.label().to_string(),
        sign: p.sign(),
        r: p.r(),
        dim_n: p.dim_n(),
        mu,
        mu_spread,
        mu_expected: p.expected_mu(),
        trichotomy,
        eigenvalues,
        eigenvalues_flipped,
        spectrum_spread,
        hopf_residual,
        symmetry_residual,
        normal_residual,
        pc2_residuals,
        pc2_exceptional,
        grid_size: grid.len(),
        points,
        certified: failures.is_empty(),
        failures,
    }
}

/// Horizontal part of dΨ̃(∂_j) at a chart point.
#[cfg(test)]
pub(crate) fn horizontal_partial(p: &HypersurfacePatch, at: &[f64], j: usize, step: f64) -> IndefVector {
    let psi = p.eval_raw(at);
    let (d, _) = p.partials(at, j, step);
    crate::fibration::horizontal_unchecked(&d, &psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopf::{example_horosphere, example_tube_chk, xi_lift};

    #[test]
    fn pc2_examples() {
        let r: f64 = 0.5;
        let mu = -2.0 / (2.0 * r).tanh();
        assert!(hopf_pc2_residual(-r.tanh(), -r.tanh(), mu).unwrap() < 1e-12);
        assert!(hopf_pc2_residual(-1.0 / r.tanh(), -1.0 / r.tanh(), mu).unwrap() < 1e-12);
        assert!(matches!(hopf_pc2_residual(1.0, 1.0, 2.0), Err(Error::ExceptionalCase { .. })));
    }

    #[test]
    fn clustering() {
        let c = cluster_eigenvalues(&[1.0, 2.0, 1.0001, 0.9998], 5e-4);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].multiplicity, 3);
        assert_eq!(c[1], Eigenvalue { value: 2.0, multiplicity: 1 });
    }

    #[test]
    fn geodesic_sphere_spectrum() {
        let p = example_tube_chk(2, 0, 0.5).unwrap();
        let op = shape_operator(&p, &p.center(), 1e-4).unwrap();
        let sym = (&op.matrix + op.matrix.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let expected = [-2.0 / 1f64.tanh(), -1.0 / 0.5f64.tanh(), -1.0 / 0.5f64.tanh()];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-4, "{ev:?}");
        }
        assert!((op.matrix[(0, 0)] + 2.0 / 1f64.tanh()).abs() < 1e-5);
    }

    #[test]
    fn first_frame_vector_is_xi() {
        let p = example_horosphere(2, 0.0).unwrap();
        let at = p.center();
        let op = shape_operator(&p, &at, 1e-4).unwrap();
        let xi = xi_lift(&p, &at).unwrap();
        assert!((&op.frame[0] - &xi).euclid_norm() < 1e-8);
        // ξ′ is the horizontal part of the derivative along t.
        let ht = horizontal_partial(&p, &at, 1, 1e-5);
        let scale = crate::hopf::norm_of(&ht);
        assert!((ht * (1.0 / scale) - xi).euclid_norm() < 1e-8);
    }

    #[test]
    fn step_is_validated() {
        let p = example_horosphere(2, 0.0).unwrap();
        assert!(shape_operator(&p, &p.center(), 0.1).is_err());
    }
}
