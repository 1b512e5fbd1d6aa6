//! Config-driven runs: a versioned JSON document lists scenarios, each is
//! executed and the run produces one JSON report plus CSV tables.

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::classifiers::Verdict;
use crate::error::{Error, Result};
use crate::levy::{LevyAtom, LogPeriodic, RadialProfile};
use crate::sampling::{MultGSpec, ZLaw};
use crate::semigroups::ConeSemigroup;
use crate::subordination::SubordinatorSpec;
use crate::suites::*;

pub const SCHEMA: &str = "v1";
pub const SEED_ENV: &str = "LEVYSUB_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    Validate(ValidateParams),
    Subordinate(SubordinateParams),
    Classify(ClassifyParams),
    VerifyLemma1(Lemma1Params),
    VerifyThm1(Thm1Params),
    VerifyThm2i(Thm2iParams),
    VerifyThm2ii(Thm2iiParams),
    VerifyProp2(Prop2Params),
    ExploreRemark3(Remark3Params),
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Validate(_) => "validate",
            ScenarioKind::Subordinate(_) => "subordinate",
            ScenarioKind::Classify(_) => "classify",
            ScenarioKind::VerifyLemma1(_) => "verify_lemma1",
            ScenarioKind::VerifyThm1(_) => "verify_thm1",
            ScenarioKind::VerifyThm2i(_) => "verify_thm2i",
            ScenarioKind::VerifyThm2ii(_) => "verify_thm2ii",
            ScenarioKind::VerifyProp2(_) => "verify_prop2",
            ScenarioKind::ExploreRemark3(_) => "explore_remark3",
        }
    }

    /// Exploratory scenarios are recorded but never change the exit code.
    pub fn asserted(&self) -> bool {
        match self {
            ScenarioKind::Subordinate(_) | ScenarioKind::ExploreRemark3(_) => false,
            ScenarioKind::Classify(p) => p.expect.is_some(),
            _ => true,
        }
    }

    fn execute(&self, seed: u64) -> Result<Outcome> {
        match self {
            ScenarioKind::Validate(p) => validate(p),
            ScenarioKind::Subordinate(p) => subordinate(p),
            ScenarioKind::Classify(p) => classify_scenario(p),
            ScenarioKind::VerifyLemma1(p) => verify_lemma1(p),
            ScenarioKind::VerifyThm1(p) => verify_thm1(p),
            ScenarioKind::VerifyThm2i(p) => verify_thm2i(p),
            ScenarioKind::VerifyThm2ii(p) => verify_thm2ii(p),
            ScenarioKind::VerifyProp2(p) => verify_prop2(p, seed),
            ScenarioKind::ExploreRemark3(p) => explore_remark3(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub kind: ScenarioKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub schema: String,
    #[serde(default)]
    pub seed: u64,
    pub scenarios: Vec<Scenario>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let c: Config = serde_json::from_str(text).map_err(|e| Error::input(format!("config: {e}")))?;
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::input(format!("unsupported schema {:?}, expected {SCHEMA:?}", self.schema)));
        }
        let mut seen = HashSet::new();
        for s in &self.scenarios {
            if s.id.is_empty() || !s.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::input(format!("scenario id {:?} must be non-empty [A-Za-z0-9_-]", s.id)));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::input(format!("duplicate scenario id {:?}", s.id)));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical (sorted-key) JSON form.
    pub fn hash(&self) -> String {
        let v = serde_json::to_value(self).expect("config json");
        let bytes = serde_json::to_vec(&v).expect("config json");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Value of `LEVYSUB_SEED`, if set.
pub fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| Error::input(format!("{SEED_ENV}={v:?} is not a u64"))),
        Err(_) => Ok(None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub id: String,
    pub kind: String,
    pub seed: u64,
    pub asserted: bool,
    pub status: Status,
    pub margin: Option<f64>,
    pub details: Value,
    pub tables: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenarios: usize,
    pub asserted: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub scenarios: Vec<ScenarioReport>,
    pub summary: Summary,
    pub exit_code: i32,
}

/// A finished run: the report and the CSV files keyed by file name.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub files: Vec<(String, String)>,
}

impl RunOutput {
    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report json");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::input(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("report.json"), self.report_json()).map_err(io)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body).map_err(io)?;
        }
        Ok(())
    }
}

/// Runs every scenario (in parallel) with seeds overridden by `seed`, if given.
pub fn run(config: &Config, seed: Option<u64>) -> Result<RunOutput> {
    config.check()?;
    let base = seed.unwrap_or(config.seed);
    let results: Vec<(ScenarioReport, Vec<(String, String)>)> = config
        .scenarios
        .par_iter()
        .map(|s| {
            let sseed = seed.or(s.seed).unwrap_or(config.seed);
            let asserted = s.kind.asserted();
            let mut rep = ScenarioReport {
                id: s.id.clone(),
                kind: s.kind.name().into(),
                seed: sseed,
                asserted,
                status: Status::Error,
                margin: None,
                details: Value::Null,
                tables: Vec::new(),
                error: None,
                exit_code: 0,
            };
            let mut files = Vec::new();
            match s.kind.execute(sseed) {
                Ok(o) => {
                    rep.status = match o.verdict {
                        Verdict::Pass => Status::Pass,
                        Verdict::Fail => Status::Fail,
                        Verdict::Inconclusive => Status::Inconclusive,
                    };
                    rep.margin = o.margin.filter(|m| m.is_finite());
                    rep.details = o.details;
                    for t in o.tables {
                        let name = format!("{}.{}.csv", s.id, t.name);
                        rep.tables.push(name.clone());
                        files.push((name, t.to_csv()));
                    }
                    if asserted && rep.status != Status::Pass {
                        rep.exit_code = 1;
                    }
                }
                Err(e) => {
                    rep.error = Some(e.to_string());
                    if asserted {
                        rep.exit_code = e.exit_code();
                    }
                }
            }
            (rep, files)
        })
        .collect();
    let mut results = results;
    results.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    let codes: Vec<i32> = results.iter().map(|r| r.0.exit_code).collect();
    let exit_code = [2, 3, 1].into_iter().find(|c| codes.contains(c)).unwrap_or(0);
    let mut scenarios = Vec::new();
    let mut files = Vec::new();
    for (r, f) in results {
        scenarios.push(r);
        files.extend(f);
    }
    let summary = Summary {
        scenarios: scenarios.len(),
        asserted: scenarios.iter().filter(|s| s.asserted).count(),
        passed: scenarios.iter().filter(|s| s.asserted && s.status == Status::Pass).count(),
        failed: scenarios.iter().filter(|s| s.asserted && matches!(s.status, Status::Fail | Status::Inconclusive)).count(),
        errors: scenarios.iter().filter(|s| s.status == Status::Error).count(),
    };
    let report = Report {
        schema: SCHEMA.into(),
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: config.hash(),
        seed: base,
        scenarios,
        summary,
        exit_code,
    };
    Ok(RunOutput { report, files })
}

/// Reads, parses and runs a config file, honouring `LEVYSUB_SEED`.
pub fn run_file(path: &Path) -> Result<RunOutput> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    let config = Config::parse(&text)?;
    run(&config, seed_override()?)
}

fn scenario(id: &str, kind: ScenarioKind) -> Scenario {
    Scenario { id: id.into(), seed: None, kind }
}

fn semistable_subordinator(alpha: f64, b: f64, h: Vec<f64>) -> Result<LevyAtom> {
    Ok(LevyAtom { direction: vec![1.0], weight: 1.0, profile: RadialProfile::LogPeriodic(LogPeriodic::new(alpha, b, h)?) })
}

fn on_half_line(atoms: Vec<LevyAtom>) -> Result<SubordinatorSpec> {
    SubordinatorSpec::new(crate::cones::Cone::orthant(1)?, vec![0.0], atoms)
}

fn gamma_mix_m() -> Vec<Vec<f64>> {
    vec![vec![2.0, 1.0], vec![1.0, 1.0]]
}

/// Built-in scenarios, one group per verified statement. `suite` is `all`
/// or one of `lemma1`, `thm1`, `thm2i`, `thm2ii`, `prop2`, `separation`, `remark3`.
pub fn builtin_config(suite: &str) -> Result<Config> {
    let brownian = brownian();
    let gamma = SubordinatorSpec::gamma(1.0, 1.0)?;
    let line25 = line_grid(-3.0, 3.0, 25);
    let mut groups: Vec<(&str, Vec<Scenario>)> = Vec::new();

    groups.push(("lemma1", vec![scenario("lemma1_grid", ScenarioKind::VerifyLemma1(Lemma1Params::default()))]));

    let (cone_sg, cone_rho) = cone_instance()?;
    groups.push((
        "thm1",
        vec![
            scenario(
                "thm1_closed_form",
                ScenarioKind::VerifyThm1(Thm1Params {
                    subordinand: brownian.clone(),
                    subordinator: gamma.clone(),
                    grid: None,
                    reference: Some(RadialProfile::Exponential { c: 1.0, q: std::f64::consts::SQRT_2 }),
                    reference_tol: 1e-6,
                    tol: 1e-9,
                }),
            ),
            scenario(
                "thm1_cone",
                ScenarioKind::VerifyThm1(Thm1Params {
                    subordinand: cone_sg,
                    subordinator: cone_rho,
                    grid: None,
                    reference: None,
                    reference_tol: 1e-6,
                    tol: 1e-9,
                }),
            ),
        ],
    ));

    let witness: crate::levy::PolarLevyMeasure = serde_json::from_value(serde_json::json!({
        "dim": 1,
        "atoms": [{ "direction": [1.0], "weight": 1.0,
                    "profile": { "type": "log_periodic", "alpha": 1.0, "b": 2.0, "h": [1.0, 2.0] } }]
    }))
    .map_err(|e| Error::input(e.to_string()))?;
    let input = ClassifyInput::Measure(witness);
    let classify = |test, span, expect| ClassifyParams {
        input: input.clone(),
        test,
        span,
        order: None,
        alpha: None,
        z_grid: None,
        expect: Some(expect),
    };
    groups.push((
        "separation",
        vec![
            scenario("separation_ssd", ScenarioKind::Classify(classify(TestKind::Ssd, Some(2.0), Verdict::Pass))),
            scenario("separation_sd", ScenarioKind::Classify(classify(TestKind::Sd, None, Verdict::Fail))),
        ],
    ));

    let m0_rho = on_half_line(vec![semistable_subordinator(0.5, 2.0, vec![1.0, 1.5])?])?;
    let stable04 = LevyAtom {
        direction: vec![1.0],
        weight: 1.0,
        profile: RadialProfile::PowerExp { c: 0.3, theta: 0.4, q: 0.0 },
    };
    let m1_rho = on_half_line(vec![semistable_subordinator(0.7, 2.0, vec![1.0, 2.0, 1.5])?, stable04])?;
    let thm2i = |rho: SubordinatorSpec, m, sg: ConeSemigroup, alpha, b, levy, fact: Option<FactorizationCheck>| {
        ScenarioKind::VerifyThm2i(Thm2iParams {
            subordinand: sg,
            subordinator: rho,
            alpha,
            b,
            m,
            tol: 1e-8,
            grid: None,
            levy,
            factorization: fact,
        })
    };
    groups.push((
        "thm2i",
        vec![
            scenario("thm2i_m0", thm2i(m0_rho, 0, cauchy(), 1.0, 2.0, true, None)),
            scenario("thm2i_m1", thm2i(m1_rho, 1, cauchy(), 1.0, 2.0, true, None)),
            scenario(
                "thm2i_factorization",
                thm2i(gamma.clone(), 0, brownian.clone(), 2.0, 2.0, false, Some(FactorizationCheck { z_grid: line25.clone(), tol: 1e-8 })),
            ),
        ],
    ));

    groups.push((
        "thm2ii",
        vec![scenario(
            "thm2ii_cauchy",
            ScenarioKind::VerifyThm2ii(Thm2iiParams {
                subordinand: brownian.clone(),
                subordinator: SubordinatorSpec::positive_stable(0.5, std::f64::consts::SQRT_2)?,
                alpha: 2.0,
                alpha_prime: 0.5,
                b: 4.0,
                z_grid: line25.clone(),
                tol: 1e-6,
                cauchy_scale: Some(1.0),
                closed_form_tol: 1e-8,
            }),
        )],
    ));

    let square = square_grid(-1.0, 1.0, 5);
    groups.push((
        "prop2",
        vec![
            scenario(
                "prop2_gamma",
                ScenarioKind::VerifyProp2(Prop2Params {
                    spec: MultGSpec::new(2, ZLaw::GammaScaledPsd { shape: 1.0, rate: 1.0, m: gamma_mix_m() })?,
                    n: 100_000,
                    z_grid: square.clone(),
                    mode: Prop2Mode::Analytic,
                    exponent: None,
                    span: None,
                    cutoff: crate::sampling::DEFAULT_CUTOFF,
                    threshold: 4.0,
                }),
            ),
            scenario(
                "prop2_semistable",
                ScenarioKind::VerifyProp2(Prop2Params {
                    spec: MultGSpec::new(
                        2,
                        ZLaw::SemistableScalarPsd { alpha_prime: 0.5, b: 4.0, h: vec![1.0, 1.5], m: gamma_mix_m() },
                    )?,
                    n: 25_000,
                    z_grid: square,
                    mode: Prop2Mode::SpanIdentity,
                    exponent: Some(1.0),
                    span: Some(2.0),
                    cutoff: crate::sampling::DEFAULT_CUTOFF,
                    threshold: 4.0,
                }),
            ),
        ],
    ));

    groups.push(("remark3", vec![scenario("remark3_planar", ScenarioKind::ExploreRemark3(Remark3Params::default()))]));

    let scenarios: Vec<Scenario> = if suite == "all" {
        groups.into_iter().flat_map(|g| g.1).collect()
    } else {
        groups
            .into_iter()
            .find(|g| g.0 == suite)
            .map(|g| g.1)
            .ok_or_else(|| Error::input(format!("unknown suite {suite:?}")))?
    };
    Ok(Config { schema: SCHEMA.into(), seed: 1234, scenarios })
}
