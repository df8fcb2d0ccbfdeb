//! Run configuration, the verification commands, and the JSON / CSV report
//! envelope shared by the command-line driver and the Python bindings.

use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cko::{
    build_psi, build_psi_form, commutator_residual, horosphere_test, maurer_cartan_residual, measured_rho,
    predicted_rho, two_path_witness, verify_axi2xi, CKOForm, OneParamConstants, OneParamData,
};
use crate::error::{Error, Result};
use crate::fibration::curve_curvature;
use crate::hopf::{verify_hopf, Eigenvalue, ExampleKind, HopfTolerances, HypersurfacePatch, ShapeReport};
use crate::linalg::GroupElement;
use crate::twistor::{gamma_curve, parallel_shift_residual, Sign, StiefelPoint};

pub const ARTIFACT_VERSION: &str = "hopf-twistor-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyCurves,
    BuildExample,
    VerifyHopf,
    CkoRun,
    McCheck,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::VerifyCurves => "verify-curves",
            Command::BuildExample => "build-example",
            Command::VerifyHopf => "verify-hopf",
            Command::CkoRun => "cko-run",
            Command::McCheck => "mc-check",
        }
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            Command::VerifyCurves,
            Command::BuildExample,
            Command::VerifyHopf,
            Command::CkoRun,
            Command::McCheck,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
        .ok_or_else(|| Error::InvalidInput(format!("unknown command '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidInput(format!("unknown format '{other}'"))),
        }
    }
}

/// Constants of a CKO run: scalar one-parameter data on ℂH² or a full form.
/// The initial value B₀ is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CkoConstants {
    OneParam(OneParamConstants),
    CkoForm(CKOForm),
}

/// Default tolerances by name.
pub const DEFAULT_TOLERANCES: [(&str, f64); 12] = [
    ("curvature", 1e-4),
    ("circle", 1e-4),
    ("parallel", 1e-10),
    ("hopf", 1e-4),
    ("symmetry", 1e-5),
    ("mu_constant", 1e-4),
    ("mu", 1e-4),
    ("pc2", 1e-4),
    ("spectrum", 1e-4),
    ("rho", 1e-4),
    ("mc", 1e-12),
    ("witness", 1e-6),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    /// Restricts sweeps to one sign.
    pub s: Option<Sign>,
    /// Overrides the default radius (or radius sweep).
    pub r: Option<f64>,
    pub k: usize,
    pub example: Option<ExampleKind>,
    pub grid_density: usize,
    pub max_points: usize,
    pub fd_step: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
    pub output_path: Option<String>,
    pub format: Format,
    pub constants: Option<CkoConstants>,
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::VerifyCurves,
            n: 2,
            s: None,
            r: None,
            k: 0,
            example: None,
            grid_density: 3,
            max_points: 81,
            fd_step: 1e-4,
            tolerances: DEFAULT_TOLERANCES.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            seed: 0,
            output_path: None,
            format: Format::Json,
            constants: None,
            timing: false,
        }
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(config_error(format!("n must be at least 2, got {}", self.n)));
        }
        if self.grid_density < 2 {
            return Err(config_error(format!("grid density must be at least 2, got {}", self.grid_density)));
        }
        if self.max_points == 0 {
            return Err(config_error("max_points must be positive"));
        }
        if !(self.fd_step > 0.0 && self.fd_step <= 1e-2) {
            return Err(config_error(format!("fd_step must lie in (0, 1e-2], got {}", self.fd_step)));
        }
        if let Some(r) = self.r {
            if !r.is_finite() {
                return Err(config_error("r must be finite"));
            }
        }
        for (name, v) in &self.tolerances {
            if !DEFAULT_TOLERANCES.iter().any(|(k, _)| k == name) {
                return Err(config_error(format!("unknown tolerance '{name}'")));
            }
            if !(v.is_finite() && *v > 0.0) {
                return Err(config_error(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        if self.command == Command::BuildExample {
            let kind = self.example_kind();
            if kind == ExampleKind::TubeChk && self.k > self.n - 1 {
                return Err(config_error(format!("k must lie in [0, {}] for tube-chk, got {}", self.n - 1, self.k)));
            }
        }
        if matches!(self.command, Command::CkoRun | Command::McCheck) && self.constants.is_none() {
            return Err(config_error(format!("{} needs --constants", self.command.as_str())));
        }
        Ok(())
    }

    /// Sets a tolerance from a `name=value` pair.
    pub fn set_tolerance(&mut self, pair: &str) -> Result<()> {
        let (name, value) = pair
            .split_once('=')
            .ok_or_else(|| config_error(format!("tolerance '{pair}' is not name=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| config_error(format!("tolerance '{pair}' has a malformed value")))?;
        self.tolerances.insert(name.trim().to_string(), value);
        Ok(())
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .or_else(|| DEFAULT_TOLERANCES.iter().find(|(k, _)| *k == name).map(|&(_, v)| v))
            .expect("tolerance names are fixed")
    }

    pub fn hopf_tolerances(&self) -> HopfTolerances {
        HopfTolerances {
            hopf: self.tol("hopf"),
            symmetry: self.tol("symmetry"),
            mu_constant: self.tol("mu_constant"),
            mu: self.tol("mu"),
            pc2: self.tol("pc2"),
        }
    }

    fn example_kind(&self) -> ExampleKind {
        self.example.unwrap_or(match self.s {
            Some(Sign::Minus) => ExampleKind::TubeRhn,
            Some(Sign::Zero) => ExampleKind::Horosphere,
            _ => ExampleKind::TubeChk,
        })
    }
}

/// One scalar check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when value ≤ tolerance.
    pub fn bound(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected: None,
            tolerance,
            pass: value <= tolerance,
        }
    }

    /// Passes when |value − expected| ≤ tolerance.
    pub fn matches(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected: Some(expected),
            tolerance,
            pass: (value - expected).abs() <= tolerance,
        }
    }

    pub fn flag(name: impl Into<String>, value: f64, tolerance: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            value,
            expected: None,
            tolerance,
            pass: pass && !value.is_nan(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub artifact_version: String,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub reports: Vec<ShapeReport>,
    pub errors: Vec<String>,
    pub certified: bool,
    /// Only recorded when timing is requested, so reports stay reproducible.
    pub wall_time_ms: Option<u64>,
}

#[derive(Default)]
struct Collector {
    checks: Vec<Check>,
    reports: Vec<ShapeReport>,
    errors: Vec<String>,
}

impl Collector {
    fn error(&mut self, ctx: &str, e: Error) {
        self.errors.push(format!("{ctx}: {e}"));
    }
}

/// Runs the configured command. Configuration problems are errors;
/// verification failures are recorded in the envelope.
pub fn run(cfg: &RunConfig) -> Result<ReportEnvelope> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = Collector::default();
    match cfg.command {
        Command::VerifyCurves => verify_curves(cfg, &mut out),
        Command::BuildExample => build_example(cfg, &mut out),
        Command::VerifyHopf => verify_hopf_cmd(cfg, &mut out),
        Command::CkoRun => cko_run(cfg, &mut out),
        Command::McCheck => mc_check(cfg, &mut out),
    }
    let certified = out.errors.is_empty()
        && out.checks.iter().all(|c| c.pass)
        && out.reports.iter().all(|r| r.certified)
        && !(out.checks.is_empty() && out.reports.is_empty());
    Ok(ReportEnvelope {
        artifact_version: ARTIFACT_VERSION.to_string(),
        config: cfg.clone(),
        checks: out.checks,
        reports: out.reports,
        errors: out.errors,
        certified,
        wall_time_ms: cfg.timing.then(|| start.elapsed().as_millis() as u64),
    })
}

pub const CURVE_RADII: [f64; 5] = [-1.0, -0.5, 0.2, 0.5, 1.0];
pub const CURVE_TIMES: [f64; 5] = [-0.8, -0.4, 0.0, 0.4, 0.8];
pub const PARALLEL_SHIFTS: [f64; 2] = [-0.3, 0.25];

fn verify_curves(cfg: &RunConfig, out: &mut Collector) {
    let signs: Vec<Sign> = cfg.s.map_or(Sign::ALL.to_vec(), |s| vec![s]);
    let radii: Vec<f64> = cfg.r.map_or(CURVE_RADII.to_vec(), |r| vec![r]);
    let base = StiefelPoint::standard(cfg.n);
    for &s in &signs {
        for &r in &radii {
            let tag = format!("curve/{s}/r={r}");
            if s == Sign::Plus && r == 0.0 {
                if cfg.r.is_some() {
                    out.error(&tag, Error::DegenerateRadius);
                }
                continue;
            }
            let curve = gamma_curve(s, r, &base);
            let expected = s.curve_curvature(r).abs();
            for &t in &CURVE_TIMES {
                match curve_curvature(&curve, t, cfg.fd_step) {
                    Ok(k) => {
                        out.checks
                            .push(Check::matches(format!("{tag}/t={t}/kappa"), k.kappa, expected, cfg.tol("curvature")));
                        out.checks
                            .push(Check::bound(format!("{tag}/t={t}/circle"), k.residual, cfg.tol("circle")));
                    }
                    Err(e) => out.error(&format!("{tag}/t={t}"), e),
                }
                for &rp in &PARALLEL_SHIFTS {
                    match parallel_shift_residual(s, r, rp, &base, t) {
                        Ok(v) => out.checks.push(Check::bound(
                            format!("{tag}/t={t}/parallel/r'={rp}"),
                            v,
                            cfg.tol("parallel"),
                        )),
                        Err(e) => out.error(&format!("{tag}/t={t}/parallel/r'={rp}"), e),
                    }
                }
            }
        }
    }
}

/// Closed-form spectrum for the normal with μ > 0, as (value, multiplicity).
pub fn expected_spectrum(kind: ExampleKind, n: usize, k: usize, r: f64) -> Vec<(f64, usize)> {
    let r = r.abs();
    let mut out = match kind {
        ExampleKind::TubeChk => vec![
            (2.0 / (2.0 * r).tanh(), 1),
            (1.0 / r.tanh(), 2 * (n - k - 1)),
            (r.tanh(), 2 * k),
        ],
        ExampleKind::TubeRhn => vec![(2.0 * (2.0 * r).tanh(), 1), (r.tanh(), n - 1), (1.0 / r.tanh(), n - 1)],
        ExampleKind::Horosphere => vec![(2.0, 1), (1.0, 2 * n - 2)],
    };
    out.retain(|&(_, m)| m > 0);
    // Merge coincident values.
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, usize)> = Vec::new();
    for (v, m) in out {
        match merged.last_mut() {
            Some(last) if (last.0 - v).abs() < 1e-9 => last.1 += m,
            _ => merged.push((v, m)),
        }
    }
    merged
}

/// Compares a clustered spectrum with a closed form: multiplicities exactly,
/// values within `tol`.
pub fn spectrum_checks(prefix: &str, measured: &[Eigenvalue], expected: &[(f64, usize)], tol: f64) -> Vec<Check> {
    let mut out = vec![Check::flag(
        format!("{prefix}/cluster_count"),
        measured.len() as f64,
        0.0,
        measured.len() == expected.len(),
    )];
    for (i, &(value, mult)) in expected.iter().enumerate() {
        match measured.get(i) {
            Some(m) => {
                out.push(Check::matches(format!("{prefix}/{i}/value"), m.value, value, tol));
                out.push(Check::matches(
                    format!("{prefix}/{i}/multiplicity"),
                    m.multiplicity as f64,
                    mult as f64,
                    0.0,
                ));
            }
            None => out.push(Check::flag(format!("{prefix}/{i}/value"), f64::NAN, tol, false)),
        }
    }
    out
}

/// The measured spectrum with μ made positive.
pub fn oriented_spectrum(report: &ShapeReport) -> &[Eigenvalue] {
    if report.mu < 0.0 {
        &report.eigenvalues_flipped
    } else {
        &report.eigenvalues
    }
}

fn default_radius(kind: ExampleKind) -> f64 {
    match kind {
        ExampleKind::TubeRhn => 0.3,
        _ => 0.5,
    }
}

fn grid_for(cfg: &RunConfig, p: &HypersurfacePatch) -> Result<Vec<Vec<f64>>> {
    p.sample_grid(cfg.grid_density, cfg.max_points)
}

fn build_example(cfg: &RunConfig, out: &mut Collector) {
    let kind = cfg.example_kind();
    let r = cfg.r.unwrap_or(default_radius(kind));
    let tag = format!("{}/n={}/k={}/r={r}", kind.as_str(), cfg.n, cfg.k);
    let patch = match kind.build(cfg.n, cfg.k, r) {
        Ok(p) => p,
        Err(e) => return out.error(&tag, e),
    };
    let grid = match grid_for(cfg, &patch) {
        Ok(g) => g,
        Err(e) => return out.error(&tag, e),
    };
    let report = verify_hopf(&patch, &grid, cfg.fd_step, &cfg.hopf_tolerances());
    let expected = expected_spectrum(kind, cfg.n, cfg.k, r);
    out.checks.extend(spectrum_checks(
        &format!("{tag}/spectrum"),
        oriented_spectrum(&report),
        &expected,
        cfg.tol("spectrum"),
    ));
    out.checks
        .push(Check::bound(format!("{tag}/pc2"), report.max_pc2_residual(), cfg.tol("pc2")));
    out.reports.push(report);
}

fn verify_hopf_cmd(cfg: &RunConfig, out: &mut Collector) {
    let kinds: Vec<ExampleKind> = match (cfg.example, cfg.s) {
        (Some(kind), _) => vec![kind],
        (None, Some(_)) => vec![cfg.example_kind()],
        (None, None) => vec![ExampleKind::TubeChk, ExampleKind::TubeRhn, ExampleKind::Horosphere],
    };
    for kind in kinds {
        let r = cfg.r.unwrap_or(default_radius(kind));
        let tag = format!("{}/n={}/r={r}", kind.as_str(), cfg.n);
        let patch = match kind.build(cfg.n, cfg.k.min(cfg.n - 1), r) {
            Ok(p) => p,
            Err(e) => {
                out.error(&tag, e);
                continue;
            }
        };
        let grid = match grid_for(cfg, &patch) {
            Ok(g) => g,
            Err(e) => {
                out.error(&tag, e);
                continue;
            }
        };
        let report = verify_hopf(&patch, &grid, cfg.fd_step, &cfg.hopf_tolerances());
        let relation = match kind.sign() {
            Sign::Plus => "|mu|>2",
            Sign::Minus => "|mu|<2",
            Sign::Zero => "|mu|=2",
        };
        out.checks.push(Check::flag(
            format!("{tag}/trichotomy/{relation}"),
            report.trichotomy.margin,
            cfg.tol("mu"),
            report.trichotomy.holds,
        ));
        out.checks
            .push(Check::bound(format!("{tag}/mu_spread"), report.mu_spread, cfg.tol("mu_constant")));
        out.checks
            .push(Check::bound(format!("{tag}/hopf_residual"), report.hopf_residual, cfg.tol("hopf")));
        out.reports.push(report);
    }
}

/// The λ values of the principal-curvature law.
pub const RHO_LAMBDAS: [f64; 3] = [0.5, 1.0, 2.0];
/// Chart samples per λ in the ρ comparison.
pub const RHO_SAMPLES: usize = 5;

/// Measured ρ at `count` random (θ, x, h) samples with λ fixed.
pub fn measure_rho_at(
    p: &HypersurfacePatch,
    lambda: f64,
    count: usize,
    step: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let mut pts = p.random_points(count, rng);
    let li = p.param_names().iter().position(|n| n == "lambda").expect("CKO charts carry lambda");
    for pt in &mut pts {
        pt[li] = lambda;
    }
    let report = verify_hopf(p, &pts, step, &HopfTolerances::default());
    if report.points.len() != pts.len() {
        return Err(Error::Degenerate(report.failures.join("; ")));
    }
    Ok(report
        .points
        .iter()
        .map(|pt| measured_rho(&pt.eigenvalues_perp).unwrap_or(f64::NAN))
        .collect())
}

fn one_param_checks(cfg: &RunConfig, k: &OneParamConstants, out: &mut Collector) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let patch = match OneParamData::with_identity(*k).and_then(|d| build_psi(&d)) {
        Ok(p) => p,
        Err(e) => return out.error("cko/build", e),
    };
    let grid = patch.random_points(cfg.max_points.min(RHO_SAMPLES.max(cfg.grid_density)), &mut rng);
    let report = verify_axi2xi(&patch, &grid, cfg.fd_step, &cfg.hopf_tolerances());
    out.checks.push(Check::matches("cko/mu", report.mu, 2.0, cfg.tol("mu")));
    out.checks.push(Check::bound("cko/hopf_residual", report.hopf_residual, cfg.tol("hopf")));
    out.reports.push(report);

    let tol = cfg.tol("rho");
    let mut means = Vec::new();
    for &lambda in &RHO_LAMBDAS {
        let tag = format!("cko/rho/lambda={lambda}");
        let expected = match predicted_rho(k, lambda) {
            Ok(v) => v,
            Err(e) => {
                out.error(&tag, e);
                continue;
            }
        };
        match measure_rho_at(&patch, lambda, RHO_SAMPLES, cfg.fd_step, &mut rng) {
            Ok(vals) => {
                let worst = vals.iter().map(|v| (v - expected).abs()).fold(0.0, f64::max);
                let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                out.checks.push(Check::matches(format!("{tag}/measured"), mean, expected, tol));
                out.checks.push(Check::bound(format!("{tag}/deviation"), worst, tol));
                out.checks.push(Check::bound(format!("{tag}/spread"), hi - lo, tol));
                means.push(mean);
            }
            Err(e) => out.error(&tag, e),
        }
    }
    let horo = horosphere_test(k);
    let variation = means.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
    let constant = means.len() == RHO_LAMBDAS.len() && variation <= tol;
    out.checks.push(Check::flag(
        format!("cko/horosphere_test={horo}"),
        variation,
        tol,
        horo == constant,
    ));
}

fn form_checks(cfg: &RunConfig, f: &CKOForm, out: &mut Collector) {
    let mc = maurer_cartan_residual(f);
    out.checks.push(Check::bound("cko/maurer_cartan", mc, cfg.tol("mc")));
    out.checks.push(Check::bound(
        "cko/commutator",
        commutator_residual(f),
        2.0 * cfg.tol("mc"),
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let base = GroupElement::identity(f.dim_n());
    let witness = (0..RHO_SAMPLES)
        .map(|_| {
            let x: Vec<f64> = (0..f.dim_g()).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
            two_path_witness(f, &base, &x)
        })
        .collect::<Result<Vec<f64>>>();
    match witness {
        Ok(w) => out.checks.push(Check::bound(
            "cko/two_path_witness",
            w.into_iter().fold(0.0, f64::max),
            cfg.tol("witness"),
        )),
        Err(e) => out.error("cko/two_path_witness", e),
    }
}

fn cko_run(cfg: &RunConfig, out: &mut Collector) {
    match cfg.constants.as_ref().expect("validated") {
        CkoConstants::OneParam(k) => one_param_checks(cfg, k, out),
        CkoConstants::CkoForm(f) => {
            form_checks(cfg, f, out);
            if maurer_cartan_residual(f) > cfg.tol("mc") {
                return;
            }
            match build_psi_form(f, GroupElement::identity(f.dim_n())) {
                Ok(patch) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
                    let grid = patch.random_points(RHO_SAMPLES, &mut rng);
                    out.reports
                        .push(verify_axi2xi(&patch, &grid, cfg.fd_step, &cfg.hopf_tolerances()));
                }
                Err(e) => out.error("cko/build", e),
            }
        }
    }
}

fn mc_check(cfg: &RunConfig, out: &mut Collector) {
    match cfg.constants.as_ref().expect("validated") {
        CkoConstants::OneParam(k) => match k.to_form() {
            Ok(f) => out.checks.push(Check::bound("cko/maurer_cartan", maurer_cartan_residual(&f), cfg.tol("mc"))),
            Err(e) => out.error("cko/form", e),
        },
        CkoConstants::CkoForm(f) => form_checks(cfg, f, out),
    }
}

/// Writes floats as 17 significant digits and non-finite values as null.
struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialized envelope with a trailing newline; byte-identical for
/// identical inputs.
pub fn to_json(env: &ReportEnvelope) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    env.serialize(&mut ser)
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn from_json(text: &str) -> Result<ReportEnvelope> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("malformed report: {e}")))
}

fn sig17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

/// One row per (grid point, eigenvalue), then one row per check.
pub fn to_csv(env: &ReportEnvelope) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidInput(format!("csv output failed: {e}"));
    w.write_record(["kind", "label", "point", "params", "index", "value", "expected", "tolerance", "pass"])
        .map_err(io)?;
    for report in &env.reports {
        for (pi, pt) in report.points.iter().enumerate() {
            let params: Vec<String> = pt.params.iter().map(|v| sig17(*v)).collect();
            for (ei, ev) in pt.eigenvalues.iter().enumerate() {
                w.write_record([
                    "eigenvalue",
                    &report.label,
                    &pi.to_string(),
                    &params.join(";"),
                    &ei.to_string(),
                    &sig17(*ev),
                    "",
                    "",
                    "",
                ])
                .map_err(io)?;
            }
        }
    }
    for c in &env.checks {
        w.write_record([
            "check",
            &c.name,
            "",
            "",
            "",
            &sig17(c.value),
            &c.expected.map(sig17).unwrap_or_default(),
            &sig17(c.tolerance),
            if c.pass { "true" } else { "false" },
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv output failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
}

pub fn render(env: &ReportEnvelope, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(env),
        Format::Csv => to_csv(env),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: Command) -> RunConfig {
        RunConfig {
            command,
            ..RunConfig::default()
        }
    }

    #[test]
    fn validation() {
        let mut c = cfg(Command::VerifyCurves);
        c.validate().unwrap();
        c.fd_step = 0.1;
        assert!(c.validate().is_err());
        let mut c = cfg(Command::VerifyCurves);
        c.grid_density = 1;
        assert!(c.validate().is_err());
        let mut c = cfg(Command::VerifyCurves);
        c.set_tolerance("bogus=1").unwrap();
        assert!(c.validate().is_err());
        assert!(c.set_tolerance("hopf").is_err());
        assert!(cfg(Command::CkoRun).validate().is_err());
        let mut c = cfg(Command::BuildExample);
        c.k = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn curves_are_certified() {
        let env = run(&cfg(Command::VerifyCurves)).unwrap();
        assert!(env.certified, "{:?}", env.errors);
        assert_eq!(env.checks.len(), 3 * 5 * 5 * 4);
    }

    #[test]
    fn plus_zero_radius_is_recorded() {
        let mut c = cfg(Command::VerifyCurves);
        c.s = Some(Sign::Plus);
        c.r = Some(0.0);
        let env = run(&c).unwrap();
        assert!(!env.certified);
        assert_eq!(env.errors.len(), 1);
    }

    #[test]
    fn json_uses_seventeen_digits_and_round_trips() {
        let mut c = cfg(Command::VerifyCurves);
        c.s = Some(Sign::Zero);
        c.r = Some(0.5);
        let env = run(&c).unwrap();
        let text = to_json(&env).unwrap();
        assert!(text.contains("\"value\":2.0000000"));
        assert_eq!(from_json(&text).unwrap(), env);
        assert_eq!(to_json(&run(&c).unwrap()).unwrap(), text);
    }

    #[test]
    fn expected_spectra() {
        let s = expected_spectrum(ExampleKind::TubeChk, 2, 0, 0.5);
        assert_eq!(s.len(), 2);
        assert!((s[0].0 - 2.163953).abs() < 1e-6 && s[0].1 == 2);
        assert!((s[1].0 - 2.626070).abs() < 1e-6 && s[1].1 == 1);
        assert_eq!(expected_spectrum(ExampleKind::Horosphere, 3, 0, 0.1), vec![(1.0, 4), (2.0, 1)]);
    }

    #[test]
    fn constants_parse_by_kind() {
        let k: CkoConstants =
            serde_json::from_str(r#"{"kind":"one_param","alpha0":0,"alpha1":0,"x":1,"y0":1,"y1":0,"w":0}"#).unwrap();
        assert!(matches!(k, CkoConstants::OneParam(c) if c.y0 == 1.0));
        let f = r#"{"kind":"cko_form","dim_n":2,"alpha0":[1],"alpha1":[0],"x":[[0]],"y0":[[0]],"y1":[[0]],
                    "w1":[[[0]]],"w2":[[[0]]]}"#;
        assert!(matches!(serde_json::from_str::<CkoConstants>(f).unwrap(), CkoConstants::CkoForm(_)));
        let bad = f.replace("\"w1\":[[[0]]]", "\"w1\":[[[1]]]");
        assert!(serde_json::from_str::<CkoConstants>(&bad).is_err());
    }

    #[test]
    fn csv_has_eigenvalue_rows() {
        let mut c = cfg(Command::BuildExample);
        c.example = Some(ExampleKind::Horosphere);
        c.max_points = 3;
        let env = run(&c).unwrap();
        let text = to_csv(&env).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("eigenvalue")).count(), 3 * 3);
    }
}
