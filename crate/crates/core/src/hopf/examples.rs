//! Tubes over ℂHᵏ, tubes over ℝHⁿ and horospheres.

use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{build_phi, ChartLift, HypersurfacePatch};
use crate::error::{Error, Result};
use crate::linalg::{c, matrix_exp, validate_algebra, IndefVector, C64, I};
use crate::twistor::{Sign, StiefelPoint};

/// The classical families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleKind {
    TubeChk,
    TubeRhn,
    Horosphere,
}

impl ExampleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExampleKind::TubeChk => "tube-chk",
            ExampleKind::TubeRhn => "tube-rhn",
            ExampleKind::Horosphere => "horosphere",
        }
    }

    pub fn sign(self) -> Sign {
        match self {
            ExampleKind::TubeChk => Sign::Plus,
            ExampleKind::TubeRhn => Sign::Minus,
            ExampleKind::Horosphere => Sign::Zero,
        }
    }

    pub fn build(self, n: usize, k: usize, r: f64) -> Result<HypersurfacePatch> {
        match self {
            ExampleKind::TubeChk => example_tube_chk(n, k, r),
            ExampleKind::TubeRhn => example_tube_rhn(n, r),
            ExampleKind::Horosphere => example_horosphere(n, r),
        }
    }
}

impl FromStr for ExampleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tube-chk" => Ok(ExampleKind::TubeChk),
            "tube-rhn" => Ok(ExampleKind::TubeRhn),
            "horosphere" => Ok(ExampleKind::Horosphere),
            other => Err(Error::InvalidInput(format!("unknown example '{other}'"))),
        }
    }
}

const BASE_BOX: (f64, f64) = (-0.3, 0.3);

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("n must be at least 2, got {n}")));
    }
    Ok(())
}

fn complex_names(prefix: &str, count: usize) -> Vec<String> {
    (0..count)
        .flat_map(|k| [format!("re_{prefix}{k}"), format!("im_{prefix}{k}")])
        .collect()
}

fn complex_coords(q: &[f64]) -> Vec<C64> {
    q.chunks(2).map(|p| C64::new(p[0], p[1])).collect()
}

/// Tube of radius r over a totally geodesic ℂHᵏ.
///
/// The lift is (ũ₋, 0) and (0, ũ₊) with ũ₋ = (√(1+|a|²), a) on H₁^{2k+1} and
/// ũ₊ = (√(1−|b|²), b) on S^{2n−2k−1}; a ∈ ℂᵏ, b ∈ ℂ^{n−k−1}.
pub fn example_tube_chk(n: usize, k: usize, r: f64) -> Result<HypersurfacePatch> {
    check_n(n)?;
    if k > n - 1 {
        return Err(Error::InvalidInput(format!("k must lie in [0, {}], got {k}", n - 1)));
    }
    if r == 0.0 {
        return Err(Error::DegenerateRadius);
    }
    let mut names = complex_names("a", k);
    names.extend(complex_names("b", n - k - 1));
    let map = Arc::new(move |q: &[f64]| {
        let a = complex_coords(&q[..2 * k]);
        let b = complex_coords(&q[2 * k..]);
        let mut um = vec![c(0.0); n + 1];
        let mut up = vec![c(0.0); n + 1];
        um[0] = c((1.0 + a.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt());
        um[1..=k].copy_from_slice(&a);
        up[k + 1] = c((1.0 - b.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt());
        up[k + 2..].copy_from_slice(&b);
        StiefelPoint::new_unchecked(IndefVector::from_vec(um), IndefVector::from_vec(up))
    });
    let lift = ChartLift {
        dim_n: n,
        sample_box: vec![BASE_BOX; names.len()],
        names,
        map,
    };
    let patch = build_phi(Sign::Plus, r, &lift)?;
    Ok(patch.relabel(format!("tube-chk(n={n}, k={k}, r={r})")))
}

/// Generators of so(1, n) moving (e₀, e₁): boosts e₀ ↔ e_a and rotations
/// e₁ ↔ e_a for a = 2, …, n.
fn rhn_generators(n: usize) -> Vec<DMatrix<C64>> {
    let mut out = Vec::with_capacity(2 * n - 2);
    for a in 2..=n {
        let mut boost = DMatrix::zeros(n + 1, n + 1);
        boost[(0, a)] = c(1.0);
        boost[(a, 0)] = c(1.0);
        out.push(boost);
    }
    for a in 2..=n {
        let mut rot = DMatrix::zeros(n + 1, n + 1);
        rot[(1, a)] = c(-1.0);
        rot[(a, 1)] = c(1.0);
        out.push(rot);
    }
    out
}

/// Tube of radius r over a totally geodesic ℝHⁿ, from real Stiefel pairs
/// (u₋, u₊) = g(q)(e₀, e₁) with g the exponential of a combination of
/// so(1, n) generators.
pub fn example_tube_rhn(n: usize, r: f64) -> Result<HypersurfacePatch> {
    check_n(n)?;
    if r == 0.0 {
        return Err(Error::Degenerate(
            "r = 0 gives the totally geodesic RH^n, which is not a hypersurface".into(),
        ));
    }
    let generators = rhn_generators(n);
    let mut names: Vec<String> = (2..=n).map(|a| format!("boost{a}")).collect();
    names.extend((2..=n).map(|a| format!("rot{a}")));
    let map = Arc::new(move |q: &[f64]| {
        let x = generators
            .iter()
            .zip(q)
            .fold(DMatrix::zeros(n + 1, n + 1), |acc, (g, &t)| acc + g * c(t));
        let g = validate_algebra(x, 1e-12)
            .and_then(|x| matrix_exp(&x, 1.0))
            .expect("real so(1,n) combinations exponentiate into U(1,n)");
        let m = g.matrix();
        let col = |j: usize| IndefVector::from_vec(m.column(j).iter().copied().collect());
        StiefelPoint::new_unchecked(col(0), col(1))
    });
    let lift = ChartLift {
        dim_n: n,
        sample_box: vec![BASE_BOX; names.len()],
        names,
        map,
    };
    let patch = build_phi(Sign::Minus, r, &lift)?;
    Ok(patch.relabel(format!("tube-rhn(n={n}, r={r})")))
}

/// Horosphere |z₀ − z₁|² = e^{2r}, from u₋ = (1+|p|²/2, |p|²/2, p) and
/// u₊ = (−i|p|²/2, i(1−|p|²/2), −ip), p ∈ ℂ^{n−1}.
pub fn example_horosphere(n: usize, r: f64) -> Result<HypersurfacePatch> {
    check_n(n)?;
    let names = complex_names("p", n - 1);
    let map = Arc::new(move |q: &[f64]| {
        let p = complex_coords(q);
        let half = 0.5 * p.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let mut um = vec![c(1.0 + half), c(half)];
        um.extend(p.iter().copied());
        let mut up = vec![C64::new(0.0, -half), C64::new(0.0, 1.0 - half)];
        up.extend(p.iter().map(|z| -I * z));
        StiefelPoint::new_unchecked(IndefVector::from_vec(um), IndefVector::from_vec(up))
    });
    let lift = ChartLift {
        dim_n: n,
        sample_box: vec![BASE_BOX; names.len()],
        names,
        map,
    };
    let patch = build_phi(Sign::Zero, r, &lift)?;
    Ok(patch.relabel(format!("horosphere(n={n}, r={r})")))
}

impl HypersurfacePatch {
    pub(crate) fn relabel(mut self, label: String) -> Self {
        self.label = label;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopf::{parallel_family_residual, verify_hopf, HopfTolerances};
    use crate::linalg::herm_unchecked;

    #[test]
    fn horosphere_matches_closed_form() {
        let r: f64 = 0.35;
        let p = example_horosphere(3, r).unwrap();
        for at in p.sample_grid(2, 20).unwrap() {
            let z = p.eval(&at).unwrap();
            let (theta, t) = (at[0], at[1]);
            let pv = complex_coords(&at[2..]);
            let half = 0.5 * pv.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let phase = C64::from_polar(1.0, theta);
            let head = C64::new(half, t) * r.exp();
            let mut expected = vec![(head + r.cosh()) * phase, (head - r.sinh()) * phase];
            expected.extend(pv.iter().map(|w| w * r.exp() * phase));
            let diff = &z - &IndefVector::from_vec(expected);
            assert!(diff.euclid_norm() < 1e-12);
            let gap = (z.coords()[0] - z.coords()[1]).norm_sqr();
            assert!((gap - (2.0 * r).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn tube_chk_focal_set_is_chk() {
        // Shifting back by r along N′ lands on the focal ℂHᵏ: z_{k+1..n} = 0.
        let r: f64 = 0.4;
        let p = example_tube_chk(3, 1, r).unwrap();
        let at = [0.1, 0.2, 0.1, -0.1, 0.2, 0.05];
        let z = p.eval(&at).unwrap() * r.cosh() - p.normal_lift(&at).unwrap() * r.sinh();
        assert!(z.coords()[2..].iter().all(|w| w.norm() < 1e-12));
        assert!((herm_unchecked(&z, &z) + 1.0).norm() < 1e-12);
    }

    #[test]
    fn tube_rhn_zero_radius_is_degenerate() {
        assert!(matches!(example_tube_rhn(2, 0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn invalid_k_is_rejected() {
        assert!(example_tube_chk(2, 2, 0.5).is_err());
        assert!(example_horosphere(1, 0.0).is_err());
    }

    #[test]
    fn parallel_families() {
        for kind in [ExampleKind::TubeChk, ExampleKind::TubeRhn, ExampleKind::Horosphere] {
            let (r, rp) = (0.4, 0.25);
            let a = kind.build(2, 1, r).unwrap();
            let b = kind.build(2, 1, r + rp).unwrap();
            for at in a.sample_grid(2, 16).unwrap() {
                assert!(parallel_family_residual(&a, &b, rp, &at).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn tube_rhn_is_hopf() {
        let p = example_tube_rhn(2, 0.3).unwrap();
        let grid = p.sample_grid(2, 8).unwrap();
        let report = verify_hopf(&p, &grid, 1e-4, &HopfTolerances::default());
        assert!(report.certified, "{:?}", report.failures);
        assert!((report.mu.abs() - 2.0 * 0.6f64.tanh()).abs() < 1e-4);
    }
}
