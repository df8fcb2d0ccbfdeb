use hopf_twistor::cko::{
    commutator_residual, maurer_cartan_residual, predicted_rho, CKOForm, CkoFormRaw, OneParamConstants,
};
use hopf_twistor::fibration::{horizontal_part, AdSPoint};
use hopf_twistor::hopf::{cluster_eigenvalues, sample_grid};
use hopf_twistor::linalg::{group_residual, herm_form, matrix_exp, real_form, validate_algebra, SignatureMatrix};
use hopf_twistor::report::{from_json, to_json, Check, ReportEnvelope, RunConfig, ARTIFACT_VERSION};
use hopf_twistor::twistor::{
    apply_i, frame_product, gauge_action, parallel_shift_residual, Sign, StiefelPoint, TangentPair, TwistorClass,
};
use hopf_twistor::{IndefVector, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| C64::new(a, b)), len)
}

fn sign() -> impl Strategy<Value = Sign> {
    prop::sample::select(Sign::ALL.to_vec())
}

fn algebra(n: usize) -> impl Strategy<Value = DMatrix<C64>> {
    complex_vec((n + 1) * (n + 1)).prop_map(move |v| {
        let k = DMatrix::from_vec(n + 1, n + 1, v);
        SignatureMatrix::new(n).matrix() * (&k - k.adjoint()) * C64::new(0.5, 0.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hermitian_form_is_conjugate_symmetric(z in complex_vec(4), w in complex_vec(4)) {
        let z = IndefVector::new(z).unwrap();
        let w = IndefVector::new(w).unwrap();
        let a = herm_form(&z, &w).unwrap();
        let b = herm_form(&w, &z).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
        prop_assert!((real_form(&z, &w).unwrap() - a.re).abs() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn exponential_lands_in_the_group(x in algebra(3), t in -1.5f64..1.5) {
        let x = validate_algebra(x, 1e-12).unwrap();
        let g = matrix_exp(&x, t).unwrap();
        let h = matrix_exp(&x, -t).unwrap();
        let scale = g.matrix().iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(group_residual(g.matrix()) <= 1e-12 * scale * scale);
        let id = g.compose(&h);
        prop_assert!((id.matrix() - DMatrix::identity(4, 4)).iter().all(|z| z.norm() <= 1e-10 * scale * scale));
    }

    #[test]
    fn horizontal_projection_is_idempotent(seed in 0u64..1000, x in complex_vec(3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = StiefelPoint::random(2, 0.7, &mut rng).unwrap().u_minus().clone();
        let w = AdSPoint::new(w).unwrap();
        let x = IndefVector::new(x).unwrap();
        let tangent = &x + &(w.vec() * real_form(&x, w.vec()).unwrap());
        let h = horizontal_part(&tangent, &w).unwrap();
        let hh = horizontal_part(&h, &w).unwrap();
        prop_assert!((&h - &hh).euclid_norm() <= 1e-10 * (1.0 + h.euclid_norm()));
        prop_assert!(real_form(&h, &w.vec().times_i()).unwrap().abs() <= 1e-10 * (1.0 + h.euclid_norm()));
    }

    #[test]
    fn frame_table_holds_on_random_pairs(seed in 0u64..10_000, n in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = StiefelPoint::random(n, 0.8, &mut rng).unwrap();
        let v = TangentPair::random(&base, &mut rng);
        let scale = 1.0 + v.max_abs();
        prop_assert!(frame_product(2, 3, &v).unwrap().sub(&apply_i(1, &v).unwrap()).max_abs() <= 1e-12 * scale);
        prop_assert!(frame_product(3, 2, &v).unwrap().sub(&apply_i(1, &v).unwrap().neg()).max_abs() <= 1e-12 * scale);
        prop_assert!(frame_product(1, 1, &v).unwrap().sub(&v.neg()).max_abs() <= 1e-12 * scale);
    }

    #[test]
    fn gauge_action_preserves_the_twistor_class(seed in 0u64..10_000, s in sign(), theta in -3.0f64..3.0, t in -1.5f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = StiefelPoint::random(3, 0.5, &mut rng).unwrap();
        let q = gauge_action(s, &p, theta, t);
        prop_assert!(q.residual() <= 1e-10 * (1.0 + t.abs().exp()).powi(2));
        prop_assert!(TwistorClass::new(s, p).equivalent(&TwistorClass::new(s, q), 1e-8));
    }

    #[test]
    fn parallel_shift_holds_everywhere(seed in 0u64..1000, s in sign(), r in 0.1f64..1.5, rp in -0.8f64..0.8, t in -1.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = StiefelPoint::random(2, 0.5, &mut rng).unwrap();
        prop_assert!(parallel_shift_residual(s, r, rp, &p, t).unwrap() <= 1e-10);
    }

    #[test]
    fn maurer_cartan_routes_agree(
        a0 in prop::collection::vec(-1.0f64..1.0, 2),
        a1 in prop::collection::vec(-1.0f64..1.0, 2),
        x in prop::collection::vec(-1.0f64..1.0, 4),
        y in prop::collection::vec(-1.0f64..1.0, 4),
        c in -1.0f64..1.0,
        w in prop::collection::vec(-1.0f64..1.0, 8),
    ) {
        // y₁ = c·y₀ direction-wise satisfies the wedge condition.
        let raw = CkoFormRaw {
            dim_n: 3,
            alpha0: a0,
            alpha1: a1,
            x: vec![x[..2].to_vec(), x[2..].to_vec()],
            y0: vec![y[..2].to_vec(), y[2..].to_vec()],
            y1: vec![vec![c * y[0], c * y[1]], vec![c * y[2], c * y[3]]],
            w1: vec![vec![vec![0.0, w[0]], vec![-w[0], 0.0]], vec![vec![0.0, w[1]], vec![-w[1], 0.0]]],
            w2: vec![
                vec![vec![w[2], w[3]], vec![w[3], w[4]]],
                vec![vec![w[5], w[6]], vec![w[6], w[7]]],
            ],
        };
        let f = CKOForm::new(raw).unwrap();
        let res = maurer_cartan_residual(&f);
        let comm = commutator_residual(&f);
        prop_assert!(res <= comm + 1e-14);
        prop_assert!(comm <= 2.0 * res + 1e-14);
    }

    #[test]
    fn commuting_block_forms_are_integrable(m in prop::collection::vec(-1.0f64..1.0, 2), d in prop::collection::vec(-1.0f64..1.0, 2), w in prop::collection::vec(-1.0f64..1.0, 4)) {
        let raw = CkoFormRaw {
            dim_n: 3,
            alpha0: vec![m[0] + d[0], m[1] + d[1]],
            alpha1: vec![m[0] - d[0], m[1] - d[1]],
            x: vec![vec![0.0; 2]; 2],
            y0: vec![vec![0.0; 2]; 2],
            y1: vec![vec![0.0; 2]; 2],
            w1: vec![vec![vec![0.0; 2]; 2]; 2],
            w2: vec![vec![vec![w[0], 0.0], vec![0.0, w[1]]], vec![vec![w[2], 0.0], vec![0.0, w[3]]]],
        };
        let f = CKOForm::new(raw).unwrap();
        prop_assert!(maurer_cartan_residual(&f) <= 1e-15);
    }

    #[test]
    fn equal_y_gives_unit_rho(a0 in -1.0f64..1.0, a1 in -1.0f64..1.0, x in -1.0f64..1.0, y in 0.2f64..1.0, w in -1.0f64..1.0, lambda in 0.5f64..2.0) {
        let k = OneParamConstants { alpha0: a0, alpha1: a1, x, y0: y, y1: y, w };
        if let Ok(rho) = predicted_rho(&k, lambda) {
            prop_assert!((rho - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn clustering_preserves_count(mut v in prop::collection::vec(-5.0f64..5.0, 1..12)) {
        v.sort_by(f64::total_cmp);
        let clusters = cluster_eigenvalues(&v, 1e-3);
        prop_assert_eq!(clusters.iter().map(|c| c.multiplicity).sum::<usize>(), v.len());
        prop_assert!(clusters.windows(2).all(|p| p[0].value < p[1].value));
    }

    #[test]
    fn grids_stay_in_the_box(density in 2usize..5, dims in 1usize..5, cap in 1usize..50) {
        let bx: Vec<(f64, f64)> = (0..dims).map(|i| (-(i as f64) - 0.5, i as f64 + 0.25)).collect();
        let g = sample_grid(&bx, density, cap).unwrap();
        prop_assert_eq!(g.len(), density.pow(dims as u32).min(cap));
        prop_assert!(g.iter().all(|p| p.iter().zip(&bx).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)));
    }

    #[test]
    fn report_floats_round_trip(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..8)) {
        let env = ReportEnvelope {
            artifact_version: ARTIFACT_VERSION.to_string(),
            config: RunConfig::default(),
            checks: values.iter().enumerate().map(|(i, &v)| Check::bound(format!("c{i}"), v, 1e-4)).collect(),
            reports: Vec::new(),
            errors: Vec::new(),
            certified: false,
            wall_time_ms: None,
        };
        let text = to_json(&env).unwrap();
        prop_assert_eq!(from_json(&text).unwrap(), env);
    }
}
