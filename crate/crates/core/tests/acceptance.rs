//! End-to-end acceptance run: one PASS/FAIL line per item, non-zero exit if
//! any item fails. Tolerances and runtime budgets are fixed here.

use std::time::{Duration, Instant};

use hopf_twistor::cko::{
    build_psi, build_psi_form, horosphere_test, maurer_cartan_residual, predicted_rho, two_path_witness,
    verify_axi2xi, CKOForm, CkoFormRaw, OneParamConstants, OneParamData,
};
use hopf_twistor::fibration::curve_curvature;
use hopf_twistor::hopf::{example_horosphere, verify_hopf, ExampleKind, HopfTolerances};
use hopf_twistor::linalg::{group_residual, matrix_exp, validate_algebra, SignatureMatrix};
use hopf_twistor::report::{
    self, expected_spectrum, measure_rho_at, oriented_spectrum, spectrum_checks, Command, RunConfig,
    RHO_LAMBDAS, RHO_SAMPLES,
};
use hopf_twistor::twistor::{
    apply_i, frame_product, gamma_curve, parallel_shift_residual, tangent_pair_form, Sign, StiefelPoint,
    TangentPair,
};
use hopf_twistor::C64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-4;
const RADII: [f64; 5] = [-1.0, -0.5, 0.2, 0.5, 1.0];
const TIMES: [f64; 5] = [-0.8, -0.4, 0.0, 0.4, 0.8];

type Outcome = Result<(bool, String), String>;

fn fold_max(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

fn curve_curvatures() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bases = [StiefelPoint::standard(2), StiefelPoint::random(3, 0.5, &mut rng).map_err(|e| e.to_string())?];
    let (mut dev, mut circle) = (0.0f64, 0.0f64);
    for base in &bases {
        for s in Sign::ALL {
            for r in RADII {
                let c = gamma_curve(s, r, base);
                let expected = s.curve_curvature(r).abs();
                for t in TIMES {
                    let k = curve_curvature(&c, t, STEP).map_err(|e| format!("s={s} r={r} t={t}: {e}"))?;
                    dev = dev.max((k.kappa - expected).abs());
                    circle = circle.max(k.residual);
                }
            }
        }
    }
    Ok((
        dev <= 1e-4 && circle <= 1e-4,
        format!("max |kappa - closed form| = {dev:.2e}, max circle residual = {circle:.2e} (tol 1e-4)"),
    ))
}

fn parallel_identity() -> Outcome {
    let shifts = [-0.4, -0.2, 0.1, 0.3, 0.5];
    let base = StiefelPoint::random(3, 0.5, &mut ChaCha8Rng::seed_from_u64(12)).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for s in Sign::ALL {
        for r in RADII {
            for rp in shifts {
                for t in TIMES {
                    worst = worst.max(parallel_shift_residual(s, r, rp, &base, t).map_err(|e| e.to_string())?);
                }
            }
        }
    }
    Ok((worst <= 1e-10, format!("max residual over 3 x 125 samples = {worst:.2e} (tol 1e-10)")))
}

fn frame_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut table, mut skew) = (0.0f64, 0.0f64);
    for draw in 0..100 {
        let base = StiefelPoint::random(2 + draw % 3, 0.6, &mut rng).map_err(|e| e.to_string())?;
        let v = TangentPair::random(&base, &mut rng);
        let w = TangentPair::random(&base, &mut rng);
        let i = |k: u8, x: &TangentPair| apply_i(k, x).unwrap();
        let p = |a: u8, b: u8| frame_product(a, b, &v).unwrap();
        let identities = [
            p(1, 1).sub(&v.neg()),
            p(2, 2).sub(&v),
            p(3, 3).sub(&v),
            p(1, 2).sub(&i(3, &v).neg()),
            p(2, 1).sub(&i(3, &v)),
            p(2, 3).sub(&i(1, &v)),
            p(3, 2).sub(&i(1, &v).neg()),
            p(3, 1).sub(&i(2, &v).neg()),
            p(1, 3).sub(&i(2, &v)),
        ];
        table = table.max(fold_max(identities.iter().map(|d| d.max_abs())));
        for k in 1..=3 {
            let lhs = tangent_pair_form(&i(k, &v), &w).map_err(|e| e.to_string())?;
            let rhs = tangent_pair_form(&v, &i(k, &w)).map_err(|e| e.to_string())?;
            skew = skew.max((lhs + rhs).abs() / (1.0 + lhs.abs()));
        }
    }
    Ok((
        table <= 1e-12 && skew <= 1e-12,
        format!("nine products: max deviation {table:.2e}; skew-adjointness {skew:.2e} (tol 1e-12)"),
    ))
}

fn spectrum_outcome(kind: ExampleKind, n: usize, k: usize, r: f64, tol: f64) -> Result<(bool, String), String> {
    let p = kind.build(n, k, r).map_err(|e| e.to_string())?;
    let grid = p.sample_grid(2, 24).map_err(|e| e.to_string())?;
    let report = verify_hopf(&p, &grid, STEP, &HopfTolerances::default());
    let checks = spectrum_checks("s", oriented_spectrum(&report), &expected_spectrum(kind, n, k, r), tol);
    let worst = fold_max(
        checks
            .iter()
            .filter(|c| c.name.ends_with("/value"))
            .map(|c| (c.value - c.expected.unwrap_or(f64::NAN)).abs()),
    );
    let spectrum: Vec<String> = oriented_spectrum(&report)
        .iter()
        .map(|e| format!("{:.6} x{}", -e.value, e.multiplicity))
        .collect();
    Ok((
        report.certified && checks.iter().all(|c| c.pass),
        format!("{} -> {{{}}} max dev {worst:.2e}", p.label(), spectrum.join(", ")),
    ))
}

fn example_tube_chk_spectra() -> Outcome {
    let a = spectrum_outcome(ExampleKind::TubeChk, 2, 0, 0.5, 1e-4)?;
    let b = spectrum_outcome(ExampleKind::TubeChk, 3, 1, 0.4, 1e-4)?;
    Ok((a.0 && b.0, format!("{}; {}", a.1, b.1)))
}

fn example_tube_rhn() -> Outcome {
    let p = ExampleKind::TubeRhn.build(2, 0, 0.3).map_err(|e| e.to_string())?;
    let grid = p.sample_grid(2, 16).map_err(|e| e.to_string())?;
    let report = verify_hopf(&p, &grid, STEP, &HopfTolerances::default());
    let expected = 2.0 * 0.6f64.tanh();
    let dev = (report.mu.abs() - expected).abs();
    let pc2 = report.max_pc2_residual();
    let pairs = report.pc2_residuals.len();
    Ok((
        report.certified && dev <= 1e-4 && pc2 <= 1e-4 && pairs > 0,
        format!(
            "certified={}, |mu| = {:.6} vs 2tanh0.6 = {expected:.6}, {pairs} paired curvatures, max pc2 residual {pc2:.2e}",
            report.certified,
            report.mu.abs()
        ),
    ))
}

fn example_horospheres() -> Outcome {
    let r: f64 = 0.35;
    let p = example_horosphere(2, r).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for at in p.sample_grid(3, 81).map_err(|e| e.to_string())? {
        let z = p.eval(&at).map_err(|e| e.to_string())?;
        worst = worst.max(((z.coords()[0] - z.coords()[1]).norm_sqr() - (2.0 * r).exp()).abs());
    }
    let a = spectrum_outcome(ExampleKind::Horosphere, 2, 0, r, 1e-4)?;
    let b = spectrum_outcome(ExampleKind::Horosphere, 3, 0, r, 1e-4)?;
    Ok((
        worst <= 1e-12 && a.0 && b.0,
        format!("defining relation residual {worst:.2e}; {}; {}", a.1, b.1),
    ))
}

fn trichotomy() -> Outcome {
    let cfg = RunConfig {
        command: Command::VerifyHopf,
        n: 2,
        ..RunConfig::default()
    };
    let env = report::run(&cfg).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for r in &env.reports {
        lines.push(format!(
            "{}: |mu|-2 = {:+.6} (spread {:.1e})",
            r.label, r.trichotomy.margin, r.mu_spread
        ));
    }
    Ok((env.certified && env.reports.len() == 3, lines.join("; ")))
}

fn draws() -> Vec<OneParamConstants> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..10).map(|_| OneParamConstants::random(&mut rng)).collect()
}

fn axi2xi() -> Outcome {
    let mut worst_mu = 0.0f64;
    let mut worst_hopf = 0.0f64;
    let mut failed = Vec::new();
    for (i, k) in draws().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let p = build_psi(&OneParamData::with_identity(*k).map_err(|e| e.to_string())?)
            .map_err(|e| format!("draw {i}: {e}"))?;
        let grid = p.random_points(5, &mut rng);
        let report = verify_axi2xi(&p, &grid, STEP, &HopfTolerances::default());
        worst_mu = worst_mu.max(fold_max(report.points.iter().map(|pt| (pt.mu - 2.0).abs())));
        worst_hopf = worst_hopf.max(report.hopf_residual);
        if !report.certified || report.points.len() != 5 {
            failed.push(format!("draw {i}: {:?}", report.failures));
        }
    }
    Ok((
        failed.is_empty() && worst_mu <= 1e-4 && worst_hopf <= 1e-4,
        format!(
            "10 draws x 5 points: max |mu - 2| = {worst_mu:.2e}, max Hopf residual = {worst_hopf:.2e}{}",
            if failed.is_empty() { String::new() } else { format!("; failures: {}", failed.join(" | ")) }
        ),
    ))
}

fn measured_vs_predicted(k: &OneParamConstants, seed: u64) -> Result<Vec<(f64, f64, Vec<f64>)>, String> {
    let p = build_psi(&OneParamData::with_identity(*k).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RHO_LAMBDAS
        .iter()
        .map(|&lambda| {
            let predicted = predicted_rho(k, lambda).map_err(|e| e.to_string())?;
            let measured = measure_rho_at(&p, lambda, RHO_SAMPLES, STEP, &mut rng).map_err(|e| e.to_string())?;
            Ok((lambda, predicted, measured))
        })
        .collect()
}

fn prototype() -> OneParamConstants {
    OneParamConstants {
        alpha0: 0.0,
        alpha1: 0.0,
        x: 1.0,
        y0: 1.0,
        y1: 0.0,
        w: 0.0,
    }
}

fn principal_curvature_law() -> Outcome {
    let mut worst = 0.0f64;
    let mut spread = 0.0f64;
    for (i, k) in draws().iter().enumerate() {
        for (_, predicted, measured) in measured_vs_predicted(k, 200 + i as u64)? {
            worst = worst.max(fold_max(measured.iter().map(|m| (m - predicted).abs())));
            let lo = measured.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = measured.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            spread = spread.max(hi - lo);
        }
    }
    let proto = measured_vs_predicted(&prototype(), 300)?;
    let rho1 = proto[1].2.iter().sum::<f64>() / proto[1].2.len() as f64;
    Ok((
        worst <= 1e-4 && spread <= 1e-4 && (rho1 - 0.6).abs() <= 1e-4,
        format!(
            "10 draws x 3 lambdas x 5 points: max |rho - a/b| = {worst:.2e}, spread at fixed lambda {spread:.2e}; reference rho(1) = {rho1:.8}"
        ),
    ))
}

fn horosphere_characterization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4048);
    let mut worst = 0.0f64;
    let mut all_flagged = true;
    for i in 0..5 {
        let k = OneParamConstants::random_horosphere(&mut rng);
        all_flagged &= horosphere_test(&k);
        for (_, _, measured) in measured_vs_predicted(&k, 400 + i)? {
            worst = worst.max(fold_max(measured.iter().map(|m| (m - 1.0).abs())));
        }
    }
    let proto = measured_vs_predicted(&prototype(), 500)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let gap = (mean(&proto[1].2) - mean(&proto[2].2)).abs();
    Ok((
        all_flagged && worst <= 1e-4 && gap > 0.1 && !horosphere_test(&prototype()),
        format!("y0 = y1 draws: max |rho - 1| = {worst:.2e}; y0 != y1 reference: |rho(1) - rho(2)| = {gap:.6}"),
    ))
}

fn zero_spec(n: usize) -> CkoFormRaw {
    CKOForm::zero(n).unwrap().raw()
}

fn maurer_cartan() -> Outcome {
    let mut forms = Vec::new();
    let mut s = zero_spec(3);
    s.x = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
    forms.push(("x-only", s));
    let mut s = zero_spec(3);
    s.alpha0 = vec![1.0, 1.0];
    s.alpha1 = vec![1.0, -1.0];
    s.w2 = vec![vec![vec![0.2, 0.0], vec![0.0, -0.4]], vec![vec![0.5, 0.0], vec![0.0, -0.3]]];
    forms.push(("commuting I/N blocks", s));
    let mut s = zero_spec(3);
    let (a, b) = (0.8, -0.6);
    s.alpha0 = vec![0.3 * a, 0.3 * b];
    s.alpha1 = vec![-0.2 * a, -0.2 * b];
    s.x = vec![vec![0.4 * a, 0.1 * a], vec![0.4 * b, 0.1 * b]];
    s.y0 = vec![vec![0.7 * a, -0.2 * a], vec![0.7 * b, -0.2 * b]];
    s.y1 = vec![vec![-0.1 * a, 0.5 * a], vec![-0.1 * b, 0.5 * b]];
    s.w1 = vec![vec![vec![0.0, 0.3 * a], vec![-0.3 * a, 0.0]], vec![vec![0.0, 0.3 * b], vec![-0.3 * b, 0.0]]];
    s.w2 = vec![vec![vec![0.5 * a, 0.1 * a], vec![0.1 * a, -0.2 * a]], vec![vec![0.5 * b, 0.1 * b], vec![0.1 * b, -0.2 * b]]];
    forms.push(("rank one", s));
    let mut s = zero_spec(3);
    s.x = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
    s.y0 = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
    s.w2 = vec![vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![vec![0.0, 0.0], vec![0.0, 0.7]]];
    forms.push(("prototype plus phase", s));

    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut details = Vec::new();
    let mut ok = true;
    for (name, raw) in forms {
        let f = CKOForm::new(raw).map_err(|e| format!("{name}: {e}"))?;
        let res = maurer_cartan_residual(&f);
        let base = hopf_twistor::GroupElement::identity(3);
        let witness = fold_max((0..5).map(|_| {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            two_path_witness(&f, &base, &x).unwrap_or(f64::NAN)
        }));
        ok &= res <= 1e-12 && witness <= 1e-6;
        details.push(format!("{name}: residual {res:.1e}, witness {witness:.1e}"));
    }
    // The patch of the integrable form with two independent directions.
    let mut s = zero_spec(3);
    s.x = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
    s.y0 = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
    s.w2 = vec![vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![vec![0.0, 0.0], vec![0.0, 0.7]]];
    let f = CKOForm::new(s).map_err(|e| e.to_string())?;
    let p = build_psi_form(&f, hopf_twistor::GroupElement::identity(3)).map_err(|e| e.to_string())?;
    let report = verify_axi2xi(&p, &p.random_points(5, &mut rng), STEP, &HopfTolerances::default());
    ok &= report.certified;
    details.push(format!("n=3 patch Axi=2xi certified={}", report.certified));

    let mut corrupted = zero_spec(3);
    corrupted.w1[0] = vec![vec![0.0, 0.4], vec![0.1, 0.0]];
    let rejected = CKOForm::new(corrupted).is_err();
    ok &= rejected;
    details.push(format!("corrupted w1 rejected={rejected}"));
    Ok((ok, details.join("; ")))
}

fn infrastructure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6000);
    let mut worst = 0.0f64;
    for draw in 0..200 {
        let n = 2 + draw % 3;
        let k = DMatrix::from_fn(n + 1, n + 1, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let k = (&k - k.adjoint()) * C64::new(0.5, 0.0);
        let x = SignatureMatrix::new(n).matrix() * k;
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let x = validate_algebra(x.map(|z| z / norm), 1e-12).map_err(|e| e.to_string())?;
        for t in [0.5, 2.0, 5.0, 8.0, 10.0] {
            let g = matrix_exp(&x, t).map_err(|e| e.to_string())?;
            worst = worst.max(group_residual(g.matrix()));
        }
    }
    let cfg = RunConfig {
        command: Command::CkoRun,
        seed: 99,
        constants: Some(report::CkoConstants::OneParam(prototype())),
        ..RunConfig::default()
    };
    let a = report::to_json(&report::run(&cfg).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let b = pool
        .install(|| report::run(&cfg))
        .and_then(|env| report::to_json(&env))
        .map_err(|e| e.to_string())?;
    let identical = a == b;
    Ok((
        worst <= 1e-10 && identical,
        format!(
            "max |A*SA - S| over 200 draws with |tX|_F <= 10: {worst:.2e} (tol 1e-10); seeded reports byte-identical across thread counts: {identical}"
        ),
    ))
}

fn main() {
    type Item = (u32, &'static str, fn() -> Outcome, Option<u64>);
    let items: [Item; 12] = [
        (1, "curve curvatures", curve_curvatures, Some(5)),
        (2, "parallel identity", parallel_identity, Some(1)),
        (3, "para-quaternionic frame", frame_identities, Some(1)),
        (4, "tube over CH^k spectra", example_tube_chk_spectra, Some(10)),
        (5, "tube over RH^n", example_tube_rhn, None),
        (6, "horosphere", example_horospheres, None),
        (7, "Hopf curvature trichotomy", trichotomy, None),
        (8, "A xi = 2 xi on CKO draws", axi2xi, Some(30)),
        (9, "principal curvature law", principal_curvature_law, None),
        (10, "horosphere characterization", horosphere_characterization, None),
        (11, "Maurer-Cartan module", maurer_cartan, None),
        (12, "infrastructure", infrastructure, None),
    ];
    let mut failures = 0;
    for (id, title, f, budget) in items {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let within = budget.is_none_or(|b| elapsed <= Duration::from_secs(b));
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && within, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let timing = match budget {
            Some(b) => format!("{:.2} s (budget {b} s)", elapsed.as_secs_f64()),
            None => format!("{:.2} s", elapsed.as_secs_f64()),
        };
        println!("[{}] {id:>2} {title}: {detail}; {timing}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failures += 1;
        }
    }
    println!("acceptance: {} of 12 passed", 12 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
