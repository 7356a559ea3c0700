//! Runs one scenario through the kernel and assembles the report and the
//! export documents. Everything here is deterministic given the config;
//! the only time-dependent value is written by `main` into the header.

use crate::config::{CaseName, ConfigError, ScenarioConfig, VectorSpec};
use linhom::checks::{Check, VerificationReport};
use linhom::curvature::{kahler_zeta_obstruction, quat_zeta_obstruction, theorem_kahler_check, theorem_quat_check};
use linhom::geodesics::{
    causal_character, closed_form_deviation, integrate, timelike_parameters, CausalKind, Direction, GeodesicState,
    KGroupMetric, Trajectory,
};
use linhom::lineartype::{KahlerLinearData, QuatLinearData, TOL_DEG};
use linhom::linalg::Vector;
use linhom::nomizu::{
    homomorphism_residual, jacobi_residual, kahler_pair, matrix_realization, nomizu_build, quat_pair, run_chain,
    verify_reference_brackets, LieAlgebraSC, ModelCase, Part, ReferenceCase,
};
use linhom::pseudolinear::random_anisotropic_vector;
use linhom::structures::{make_standard_eps_complex, make_standard_eps_quat};
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

pub const REPORT_VERSION: &str = "1";
pub const ALGEBRA_FILE: &str = "algebra.json";

/// r of the time-like family (1, r) used by the geodesic stage.
pub const TIMELIKE_R: f64 = 0.6;

pub enum Datum {
    Kahler(KahlerLinearData),
    Quat(QuatLinearData),
}

impl Datum {
    fn g_xi(&self) -> f64 {
        match self {
            Self::Kahler(k) => k.structure.space.norm2(&k.xi),
            Self::Quat(q) => q.structure.space.norm2(&q.xi),
        }
    }

    fn reference(&self) -> ReferenceCase<'_> {
        match self {
            Self::Kahler(k) => ReferenceCase::Kahler(k),
            Self::Quat(q) => ReferenceCase::Quat(q),
        }
    }
}

fn vector(spec: &VectorSpec, d: usize, what: &str, seeded: impl FnOnce(u64) -> Vector) -> Result<Vector, ConfigError> {
    Ok(match spec.components(d, what)? {
        Some(c) => Vector::from_vec(c),
        None => match spec {
            VectorSpec::Seeded { seed } => seeded(*seed),
            _ => unreachable!("non-seeded specs have components"),
        },
    })
}

/// Model space, structure and linear data of the scenario.
pub fn build_datum(cfg: &ScenarioConfig) -> Result<Datum, ConfigError> {
    let kernel = |e: linhom::Error| ConfigError::Invalid(e.to_string());
    let d = cfg.dim();
    let zeta = |name: &str| -> Result<Vector, ConfigError> {
        match cfg.zetas().into_iter().find(|(k, _)| *k == name) {
            Some((_, v)) => vector(v, d, name, |_| Vector::zeros(d)),
            None => Ok(Vector::zeros(d)),
        }
    };
    let datum = if cfg.case.is_quat() {
        let e2 = if cfg.case.is_para() { 1.0 } else { -1.0 };
        let (space, t) = make_standard_eps_quat(cfg.n, cfg.s, [-1.0, e2, e2]).map_err(kernel)?;
        let xi = vector(&cfg.xi, d, "xi", |seed| random_anisotropic_vector(&space, seed))?;
        Datum::Quat(QuatLinearData { xi, zeta: [zeta("zeta1")?, zeta("zeta2")?, zeta("zeta3")?], structure: t })
    } else {
        let eps = if cfg.case.is_para() { 1.0 } else { -1.0 };
        let (space, j) = make_standard_eps_complex(cfg.n, cfg.s, eps).map_err(kernel)?;
        let xi = vector(&cfg.xi, d, "xi", |seed| random_anisotropic_vector(&space, seed))?;
        Datum::Kahler(KahlerLinearData { xi, zeta: zeta("zeta1")?, structure: j })
    };
    let g = datum.g_xi();
    if g.abs() <= TOL_DEG {
        return Err(ConfigError::Invalid(format!("g(xi,xi) = {g:e} is degenerate; only the non-degenerate case is supported")));
    }
    Ok(datum)
}

#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub tool: String,
    pub timestamp: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicSummary {
    pub family: String,
    /// Label used by the incompleteness proof (opposite to the metric sign).
    pub causal_label: CausalKind,
    pub initial: [f64; 2],
    pub direction: Direction,
    pub t_max: f64,
    pub blowup: Option<Bracket>,
    pub expected_singular_time: Option<f64>,
    pub closed_form_deviation: f64,
    pub character_drift: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Bracket {
    pub t_low: f64,
    pub t_high: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub version: String,
    pub header: Option<Header>,
    pub scenario: ScenarioConfig,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub holonomy_dim: Option<usize>,
    pub algebra_ref: Option<String>,
    pub geodesics: Vec<GeodesicSummary>,
    pub verdict: String,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.verdict == "pass"
    }

    pub fn failing(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BasisEntry {
    pub label: String,
    pub part: Part,
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraExport {
    pub version: String,
    pub case: CaseName,
    pub n: usize,
    pub s: usize,
    pub basis: Vec<BasisEntry>,
    /// Nonzero c^k_{ij} with i < j: [b_i, b_j] = Σ_k c^k_{ij} b_k.
    pub brackets: Vec<BracketEntry>,
}

pub fn algebra_export(cfg: &ScenarioConfig, l: &LieAlgebraSC) -> AlgebraExport {
    AlgebraExport {
        version: REPORT_VERSION.into(),
        case: cfg.case,
        n: cfg.n,
        s: cfg.s,
        basis: l.labels().iter().map(|b| BasisEntry { label: b.label.clone(), part: b.part }).collect(),
        brackets: l.bracket_entries().into_iter().map(|(i, j, k, value)| BracketEntry { i, j, k, value }).collect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryExport {
    pub version: String,
    pub family: String,
    pub initial: GeodesicState,
    pub direction: Direction,
    /// (t, γ₁, γ₂) at accepted steps.
    pub points: Vec<[f64; 3]>,
    pub blowup: Option<Bracket>,
}

/// One of the reference families of the group K.
pub struct Family {
    pub name: &'static str,
    pub init: (f64, f64),
    pub direction: Direction,
    pub t_max: f64,
    pub kind: CausalKind,
    pub r: f64,
    pub expected: Option<f64>,
}

pub fn families() -> Vec<Family> {
    let (s, k) = timelike_parameters(TIMELIKE_R).expect("0 < r < 1");
    vec![
        Family { name: "spacelike", init: (0.0, 1.0), direction: Direction::Forward, t_max: 3.0, kind: CausalKind::Spacelike, r: 0.0, expected: Some(FRAC_PI_2) },
        Family { name: "null", init: (1.0, 1.0), direction: Direction::Forward, t_max: 3.0, kind: CausalKind::Null, r: 0.0, expected: Some(1.0) },
        Family { name: "timelike", init: (1.0, TIMELIKE_R), direction: Direction::Forward, t_max: 10.0, kind: CausalKind::Timelike, r: TIMELIKE_R, expected: Some(k / s) },
        Family { name: "stationary", init: (1.0, 0.0), direction: Direction::Forward, t_max: 100.0, kind: CausalKind::Timelike, r: 0.0, expected: None },
    ]
}

/// Integration tolerance of the geodesic stage.
pub const INTEGRATION_TOL: f64 = 1e-12;

pub fn integrate_family(f: &Family) -> Result<(Trajectory, Option<Bracket>), linhom::Error> {
    let (traj, b) = integrate(GeodesicState::new(f.init.0, f.init.1), f.direction, f.t_max, INTEGRATION_TOL)?;
    Ok((traj, b.detected.then_some(Bracket { t_low: b.t_low, t_high: b.t_high })))
}

pub fn trajectory_export(f: &Family) -> Result<TrajectoryExport, linhom::Error> {
    let (traj, blowup) = integrate_family(f)?;
    Ok(TrajectoryExport {
        version: REPORT_VERSION.into(),
        family: f.name.into(),
        initial: traj.initial,
        direction: traj.direction,
        points: traj.points.iter().map(|p| [p.t, p.gamma1, p.gamma2]).collect(),
        blowup,
    })
}

fn model_case(c: CaseName) -> ModelCase {
    match c {
        CaseName::KahlerPara => ModelCase::ParaKahler,
        CaseName::KahlerPseudo => ModelCase::PseudoKahler,
        CaseName::QuatPara => ModelCase::ParaQuat,
        CaseName::QuatPseudo => ModelCase::PseudoQuat,
    }
}

struct Run {
    checks: VerificationReport,
    notes: Vec<String>,
}

impl Run {
    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn extend(&mut self, r: VerificationReport) {
        self.checks.checks.extend(r.checks);
    }

    /// Kernel errors become failing checks named after the stage.
    fn error(&mut self, stage: &str, e: &linhom::Error) {
        self.push(Check::at_most(&format!("{stage}_error"), stage, f64::NAN, 0.0));
        self.notes.push(format!("{stage}: {e}"));
    }
}

fn bracket_miss(b: &Bracket, t: f64) -> f64 {
    (b.t_low - t).max(t - b.t_high).max(0.0)
}

/// The full pipeline. Returns the report and the Nomizu algebra (if built).
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(Report, Option<LieAlgebraSC>), ConfigError> {
    let datum = build_datum(cfg)?;
    let mut run = Run { checks: VerificationReport::default(), notes: Vec::new() };
    let g = datum.g_xi();

    // theorem stage, including the scenario's own ζ
    let tol = cfg.tol("theorem");
    let theorem = match &datum {
        Datum::Kahler(k) => theorem_kahler_check(k, tol),
        Datum::Quat(q) => theorem_quat_check(q, tol),
    };
    match theorem {
        Ok(r) => run.extend(r),
        Err(e) => run.error("theorem", &e),
    }
    if !cfg.zetas().is_empty() {
        let obstruction = match &datum {
            Datum::Kahler(k) => Ok(kahler_zeta_obstruction(&k.structure, &k.xi, &k.zeta)),
            Datum::Quat(q) => quat_zeta_obstruction(&q.structure, &q.xi, &q.zeta),
        };
        match obstruction {
            Ok(v) => run.push(Check::at_most("scenario_zeta_obstruction", "zeta-vanishing", v, cfg.tol("zeta"))),
            Err(e) => run.error("scenario_zeta_obstruction", &e),
        }
    }

    // Nomizu stage
    let pair = match &datum {
        Datum::Kahler(k) => kahler_pair(k),
        Datum::Quat(q) => quat_pair(q),
    };
    let algebra = match pair.and_then(|(s, r)| nomizu_build(&s, &r)) {
        Ok(l) => Some(l),
        Err(e) => {
            run.error("nomizu", &e);
            None
        }
    };
    let expected_hol = if cfg.case.is_quat() { 3 } else { 1 };
    if let Some(l) = &algebra {
        run.push(Check::at_most("jacobi", "nomizu-jacobi", jacobi_residual(l), cfg.tol("jacobi")));
        run.push(Check::at_most("antisymmetry", "nomizu-jacobi", l.antisymmetry_residual(), cfg.tol("jacobi")));
        run.push(Check::at_most("holonomy_dim", "holonomy-dimension", l.holonomy_dim().abs_diff(expected_hol) as f64, 0.0));
        match verify_reference_brackets(l, datum.reference(), cfg.tol("brackets")) {
            Ok(r) => run.extend(r),
            Err(e) => run.error("brackets", &e),
        }
    }

    // realization and involution chain, within the realization range only
    let mut k_from_chain = false;
    match matrix_realization(model_case(cfg.case), cfg.n, cfg.s, g) {
        Err(linhom::Error::Range(why)) => {
            run.notes.push(format!("matrix realization and involution chain skipped: {why}"));
        }
        Err(e) => run.error("realization", &e),
        Ok(m) => {
            run.push(Check::at_most("homomorphism", "matrix-realization", homomorphism_residual(&m.phi, &m.algebra), cfg.tol("homomorphism")));
            run.push(Check::at_most("membership", "matrix-realization", m.membership_residual, cfg.tol("membership")));
            if let Some(t) = m.trace_residual {
                run.push(Check::at_most("generator_trace", "matrix-realization", t, cfg.tol("trace")));
            }
            match run_chain(&m) {
                Err(e) => run.error("chain", &e),
                Ok(c) => {
                    let tol = cfg.tol("chain");
                    for st in &c.steps {
                        let name = st.name.as_str();
                        run.push(Check::at_most(&format!("chain_{name}_involutive"), "involution-chain", st.involutive_residual, tol));
                        run.push(Check::at_most(&format!("chain_{name}_automorphism"), "involution-chain", st.automorphism_residual, tol));
                        run.push(Check::at_most(&format!("chain_{name}_isometry"), "involution-chain", st.isometry_residual, tol));
                    }
                    let t = &c.terminal;
                    run.push(Check::at_most("k_bracket", "completeness-k", t.bracket_residual, tol));
                    run.push(Check::at_most("k_orthogonal", "completeness-k", t.av.abs(), tol));
                    let signs = if t.metric_signs == (1, -1) { 0.0 } else { 1.0 };
                    run.push(Check::at_most("k_metric_signs", "completeness-k", signs, 0.0));
                    k_from_chain = true;
                }
            }
        }
    }

    // geodesics of K
    let lemma = KGroupMetric::lemma();
    run.notes.push(format!(
        "geodesic stage uses the group K {}; causal labels follow the incompleteness proof (g(γ̇,γ̇) < 0 is called space-like)",
        if k_from_chain { "reached by the involution chain (homothetic to the normalized model)" } else { "in its normalized form" }
    ));
    match lemma.derive_connection() {
        Ok(t) => {
            let expected = [[[0.0, 0.0], [0.0, 0.0]], [[0.0, -1.0], [-1.0, 0.0]]];
            let mut r: f64 = 0.0;
            for x in 0..2 {
                for y in 0..2 {
                    for k in 0..2 {
                        r = r.max((t[x][y][k] - expected[x][y][k]).abs());
                    }
                }
            }
            run.push(Check::at_most("k_connection", "completeness-k", r, 0.0));
        }
        Err(e) => run.error("k_connection", &e),
    }
    let mut geodesics = Vec::new();
    for f in families() {
        let (traj, blowup) = match integrate_family(&f) {
            Ok(x) => x,
            Err(e) => {
                run.error(&format!("geodesic_{}", f.name), &e);
                continue;
            }
        };
        let dev = match f.name {
            "stationary" => traj
                .points
                .iter()
                .map(|p| (p.gamma1 - 1.0).abs().max(p.gamma2.abs()))
                .fold(0.0, f64::max),
            _ => closed_form_deviation(&traj, f.kind, f.r, 0.9).unwrap_or(f64::NAN),
        };
        run.push(Check::at_most(&format!("closed_form_{}", f.name), "completeness-k", dev, cfg.tol("closed_form")));
        match (f.expected, blowup) {
            (Some(t0), Some(b)) => {
                run.push(Check::at_most(&format!("escape_{}_bracket", f.name), "completeness-k", bracket_miss(&b, t0), 0.0));
                run.push(Check::at_most(&format!("escape_{}_width", f.name), "completeness-k", b.t_high - b.t_low, cfg.tol("escape_width")));
            }
            (Some(_), None) => {
                run.push(Check::at_most(&format!("escape_{}_bracket", f.name), "completeness-k", f64::INFINITY, 0.0));
            }
            (None, Some(b)) => {
                run.push(Check::at_most(&format!("{}_no_blowup", f.name), "completeness-k", b.t_low.abs(), 0.0));
            }
            (None, None) => {
                let last = traj.points.last().map(|p| p.t).unwrap_or(0.0);
                run.push(Check::at_most(&format!("{}_reaches_t_max", f.name), "completeness-k", (f.t_max - last).abs(), 0.0));
            }
        }
        geodesics.push(GeodesicSummary {
            family: f.name.into(),
            causal_label: causal_character(&traj.initial),
            initial: [f.init.0, f.init.1],
            direction: f.direction,
            t_max: f.t_max,
            blowup,
            expected_singular_time: f.expected,
            closed_form_deviation: dev,
            character_drift: traj.character_drift,
        });
    }

    let pass = run.checks.pass();
    let report = Report {
        version: REPORT_VERSION.into(),
        header: None,
        scenario: cfg.clone(),
        checks: run.checks.checks,
        notes: run.notes,
        holonomy_dim: algebra.as_ref().map(|l| l.holonomy_dim()),
        algebra_ref: algebra.as_ref().map(|_| ALGEBRA_FILE.to_string()),
        geodesics,
        verdict: if pass { "pass" } else { "fail" }.into(),
    };
    Ok((report, algebra))
}

/// Configurations of the full suite: the given scenario followed by each
/// case at its smallest dimension, seeded like the given one.
pub fn suite_configs(cfg: &ScenarioConfig) -> Vec<ScenarioConfig> {
    let seed = match cfg.xi {
        VectorSpec::Seeded { seed } => seed,
        _ => 0,
    };
    let mut out = vec![cfg.clone()];
    for case in CaseName::ALL {
        out.push(ScenarioConfig {
            case,
            n: 2,
            s: if case.is_para() { 0 } else { 1 },
            xi: VectorSpec::Seeded { seed },
            zeta: None,
            tolerances: cfg.tolerances.clone(),
            output_path: cfg.output_path.clone(),
        });
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub version: String,
    pub header: Option<Header>,
    pub reports: Vec<Report>,
    pub verdict: String,
}

pub fn run_suite(cfg: &ScenarioConfig) -> Result<SuiteReport, ConfigError> {
    let mut reports = Vec::new();
    for c in suite_configs(cfg) {
        reports.push(run_scenario(&c)?.0);
    }
    let pass = reports.iter().all(Report::pass);
    Ok(SuiteReport { version: REPORT_VERSION.into(), header: None, reports, verdict: if pass { "pass" } else { "fail" }.into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;
    use std::path::PathBuf;

    fn cfg(case: CaseName, n: usize, s: usize, xi: VectorSpec) -> ScenarioConfig {
        ScenarioConfig { case, n, s, xi, zeta: None, tolerances: BTreeMap::new(), output_path: PathBuf::from("out") }
    }

    #[test]
    fn quat_pseudo_unit_xi_passes() {
        let (r, l) = run_scenario(&cfg(CaseName::QuatPseudo, 2, 0, VectorSpec::Unit("e1".into()))).unwrap();
        assert!(r.pass(), "{:?}", r.failing().collect::<Vec<_>>());
        assert_eq!(r.holonomy_dim, Some(3));
        assert_eq!(l.unwrap().dim(), 11);
        let sp = r.geodesics.iter().find(|g| g.family == "spacelike").unwrap();
        let b = sp.blowup.unwrap();
        assert!(b.t_low <= FRAC_PI_2 && FRAC_PI_2 <= b.t_high);
    }

    #[test]
    fn degenerate_xi_is_config_error() {
        let c = cfg(CaseName::KahlerPara, 2, 0, VectorSpec::Components(vec![1.0, 1.0, 0.0, 0.0]));
        assert!(matches!(run_scenario(&c), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn suite_covers_all_cases() {
        let c = cfg(CaseName::KahlerPara, 2, 0, VectorSpec::Seeded { seed: 7 });
        let cs = suite_configs(&c);
        assert_eq!(cs.len(), 5);
        assert!(cs.iter().all(|x| x.validate().is_ok()));
    }
}
