//! Verification scenarios. Each one builds its objects from plain parameters,
//! runs the relevant checks and returns a verdict, a margin, JSON details and
//! tables for CSV output.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classifiers::{
    is_selfdecomposable, is_semi_sd, is_strictly_semistable_cf, lm_membership, strict_1_semistable_cone_guard,
    ClassVerdict, Verdict,
};
use crate::cones::Cone;
use crate::error::{Error, Result};
use crate::levy::{Integrability, LevyTriplet, PolarLevyMeasure, RadialProfile};
use crate::numerics::{gaussian_interval_mass, integrate_with_breaks, Tolerance};
use crate::sampling::{mc_vs_analytic, span_identity, MultGSpec, RandomStream, DEFAULT_CUTOFF};
use crate::semigroups::{ConeSemigroup, SemigroupSpec};
use crate::subordination::{
    factorization_check, subordinate_cf, subordinated_levy_gaussian, subordinated_levy_kernel, LevyTransform,
    ProfileGrid, SubordinatorSpec,
};

type C64 = Complex64;

/// Named numeric table, written as one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    /// Header line plus one line per row, values as `{:.16e}`.
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub verdict: Verdict,
    pub margin: Option<f64>,
    pub details: Value,
    pub tables: Vec<Table>,
}

fn verdict_of(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// `n` equally spaced points on `[lo, hi]`, each as a 1-vector.
pub fn line_grid(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64]).collect()
}

/// `n × n` product grid on `[lo, hi]²`.
pub fn square_grid(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
    let t: Vec<f64> = line_grid(lo, hi, n).into_iter().map(|v| v[0]).collect();
    t.iter().flat_map(|x| t.iter().map(move |y| vec![*x, *y])).collect()
}

fn check_grid(z_grid: &[Vec<f64>]) -> Result<()> {
    if z_grid.is_empty() {
        return Err(Error::input("z grid is empty"));
    }
    Ok(())
}

fn profile_values(law: &LevyTriplet, grid: &ProfileGrid) -> (Vec<f64>, Vec<f64>) {
    let nodes = grid.nodes();
    let mut plus = vec![0.0; grid.n];
    let mut minus = vec![0.0; grid.n];
    for a in law.levy().atoms() {
        let side = if a.direction[0] > 0.0 { &mut plus } else { &mut minus };
        for (v, r) in side.iter_mut().zip(&nodes) {
            *v += a.weight * a.profile.value(*r);
        }
    }
    (plus, minus)
}

fn levy_transform(subordinand: &ConeSemigroup, rho: &SubordinatorSpec, grid: &ProfileGrid) -> Result<LevyTransform> {
    match subordinand.spec() {
        SemigroupSpec::Gaussian1d { .. } => subordinated_levy_gaussian(subordinand, rho, grid),
        _ => subordinated_levy_kernel(subordinand, rho, grid),
    }
}

fn subordinator_order() -> Integrability {
    Integrability::Subordinator
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateParams {
    pub profile: RadialProfile,
    #[serde(default = "subordinator_order")]
    pub order: Integrability,
    #[serde(default = "yes")]
    pub expect_valid: bool,
}

pub fn validate(p: &ValidateParams) -> Result<Outcome> {
    let (valid, details) = match p.profile.integrability(p.order) {
        Ok(q) => (true, json!({ "valid": true, "integral": q.value, "abs_error": q.abs_error_estimate })),
        Err(e @ (Error::Validation { .. } | Error::Input(_))) => (false, json!({ "valid": false, "reason": e.to_string() })),
        Err(e) => return Err(e),
    };
    Ok(Outcome { verdict: verdict_of(valid == p.expect_valid), margin: None, details, tables: Vec::new() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubordinateParams {
    pub subordinand: ConeSemigroup,
    pub subordinator: SubordinatorSpec,
    pub z_grid: Vec<Vec<f64>>,
    /// Also tabulate the Lévy profiles (one-dimensional subordinands only).
    #[serde(default)]
    pub levy: bool,
    #[serde(default)]
    pub grid: Option<ProfileGrid>,
}

pub fn subordinate(p: &SubordinateParams) -> Result<Outcome> {
    check_grid(&p.z_grid)?;
    let law = subordinate_cf(&p.subordinand, &p.subordinator)?;
    let d = p.subordinand.state_dim();
    let mut header: Vec<String> = (0..d).map(|i| format!("z{i}")).collect();
    header.extend(["re".into(), "im".into()]);
    let mut cf = Table { name: "cf".into(), header, rows: Vec::new() };
    for z in &p.z_grid {
        let v = law.cf(z)?;
        let mut row = z.clone();
        row.extend([v.re, v.im]);
        cf.rows.push(row);
    }
    let mut tables = vec![cf];
    let mut details = json!({ "subordinand": p.subordinand.family(), "subordinator": p.subordinator.descriptor() });
    if p.levy {
        let grid = p.grid.unwrap_or_default();
        let t = levy_transform(&p.subordinand, &p.subordinator, &grid)?;
        let (plus, minus) = profile_values(&t.triplet, &grid);
        let mut prof = Table::new("profile", &["r", "k_plus", "k_minus"]);
        for (j, r) in grid.nodes().into_iter().enumerate() {
            prof.rows.push(vec![r, plus[j], minus[j]]);
        }
        tables.push(prof);
        details["gaussian"] = json!(t.triplet.gaussian()[(0, 0)]);
        details["drift"] = json!(t.triplet.drift()[0]);
        details["warnings"] = json!(t.warnings);
    }
    Ok(Outcome { verdict: Verdict::Pass, margin: None, details, tables })
}

/// Lévy data to classify: a full triplet or just the measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassifyInput {
    Triplet(LevyTriplet),
    Measure(PolarLevyMeasure),
}

impl ClassifyInput {
    pub fn measure(&self) -> &PolarLevyMeasure {
        match self {
            ClassifyInput::Triplet(t) => t.levy(),
            ClassifyInput::Measure(m) => m,
        }
    }

    fn triplet(&self) -> Result<LevyTriplet> {
        match self {
            ClassifyInput::Triplet(t) => Ok(t.clone()),
            ClassifyInput::Measure(m) => {
                let d = m.dim();
                LevyTriplet::new(nalgebra::DMatrix::zeros(d, d), m.clone(), vec![0.0; d])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Sd,
    Ssd,
    Lm,
    Semistable,
}

/// Default CF grid: 12 multiples of each coordinate axis and of the diagonal.
pub fn default_cf_grid(d: usize) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    if d > 1 {
        dirs.push(vec![1.0 / (d as f64).sqrt(); d]);
    }
    let mut out = Vec::new();
    for dir in dirs {
        for t in [-3.0, -1.5, -0.75, -0.3, -0.1, -0.02, 0.02, 0.1, 0.3, 0.75, 1.5, 3.0] {
            out.push(dir.iter().map(|x| x * t).collect());
        }
    }
    out
}

pub fn classify(
    input: &ClassifyInput,
    test: TestKind,
    span: Option<f64>,
    order: Option<usize>,
    alpha: Option<f64>,
    z_grid: Option<&[Vec<f64>]>,
) -> Result<ClassVerdict> {
    let need_span = || span.ok_or_else(|| Error::input("this test needs --span"));
    match test {
        TestKind::Sd => Ok(is_selfdecomposable(input.measure())),
        TestKind::Ssd => is_semi_sd(input.measure(), need_span()?),
        TestKind::Lm => lm_membership(input.measure(), need_span()?, order.unwrap_or(0)),
        TestKind::Semistable => {
            let alpha = alpha.ok_or_else(|| Error::input("the semistable test needs --alpha"))?;
            let t = input.triplet()?;
            let default = default_cf_grid(t.dim());
            let grid = z_grid.unwrap_or(&default);
            check_grid(grid)?;
            let cf = |z: &[f64]| Ok(t.cumulant(z)?.exp());
            is_strictly_semistable_cf(&cf, alpha, need_span()?, grid, 1e-6)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyParams {
    pub input: ClassifyInput,
    pub test: TestKind,
    #[serde(default)]
    pub span: Option<f64>,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub z_grid: Option<Vec<Vec<f64>>>,
    /// Asserted verdict; without it the scenario only records the result.
    #[serde(default)]
    pub expect: Option<Verdict>,
}

pub fn classify_scenario(p: &ClassifyParams) -> Result<Outcome> {
    let v = classify(&p.input, p.test, p.span, p.order, p.alpha, p.z_grid.as_deref())?;
    let verdict = match p.expect {
        Some(e) => verdict_of(v.verdict == e),
        None => v.verdict,
    };
    Ok(Outcome { verdict, margin: Some(v.margin), details: serde_json::to_value(&v).expect("verdict json"), tables: Vec::new() })
}

/// Finite union of intervals `(x1, x2]`, none containing 0.
pub type IntervalSet = Vec<[f64; 2]>;

fn lemma_profiles() -> Vec<RadialProfile> {
    vec![
        RadialProfile::Exponential { c: 1.0, q: 1.0 },
        RadialProfile::Indicator { c: 1.0, cutoff: 1.0 },
        RadialProfile::InversePower { c: 1.0, s: 1.0, p: 3.0 },
    ]
}

/// Eight test sets: single intervals on each side, two-sided unions, near-zero and far pieces.
pub fn lemma_sets() -> Vec<IntervalSet> {
    vec![
        vec![[1.0, 2.0]],
        vec![[0.5, 3.0]],
        vec![[-2.0, -1.0]],
        vec![[-3.0, -0.5]],
        vec![[-2.0, -1.0], [1.0, 2.0]],
        vec![[0.1, 0.2], [4.0, 8.0]],
        vec![[2.0, 1e6]],
        vec![[-1e6, -1.0], [0.25, 0.5]],
    ]
}

fn default_a() -> Vec<f64> {
    vec![0.0, 1.0, 2.0]
}

fn default_gamma() -> Vec<f64> {
    vec![-1.0, 0.0, 3.0]
}

fn default_spans() -> Vec<f64> {
    vec![1.5, 4.0]
}

fn tol_1e9() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Params {
    #[serde(default = "default_a")]
    pub a: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: Vec<f64>,
    #[serde(default = "lemma_profiles")]
    pub profiles: Vec<RadialProfile>,
    #[serde(default = "default_spans")]
    pub spans: Vec<f64>,
    #[serde(default = "lemma_sets")]
    pub sets: Vec<IntervalSet>,
    #[serde(default = "tol_1e9")]
    pub tol: f64,
}

impl Default for Lemma1Params {
    fn default() -> Self {
        Lemma1Params {
            a: default_a(),
            gamma: default_gamma(),
            profiles: lemma_profiles(),
            spans: default_spans(),
            sets: lemma_sets(),
            tol: tol_1e9(),
        }
    }
}

fn check_decreasing(f: &RadialProfile) -> Result<()> {
    let mut pts = f.check_points(None);
    pts.sort_by(f64::total_cmp);
    let mut prev = f64::INFINITY;
    for r in pts {
        let v = f.value(r);
        if v < 0.0 {
            return Err(Error::Precondition(format!("{} is negative at r = {r}", f.label())));
        }
        if v > prev * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!("{} is not decreasing: it increases at r = {r}", f.label())));
        }
        prev = v;
    }
    Ok(())
}

fn check_set(set: &IntervalSet) -> Result<()> {
    if set.is_empty() {
        return Err(Error::input("interval set is empty"));
    }
    for [x1, x2] in set {
        if !(x1 < x2 && x1.is_finite() && x2.is_finite()) {
            return Err(Error::input(format!("bad interval ({x1}, {x2}]")));
        }
        if *x1 < 0.0 && *x2 >= 0.0 {
            return Err(Error::input(format!("interval ({x1}, {x2}] contains 0")));
        }
    }
    Ok(())
}

/// `∫₀^∞ G_{ra, rγ}(B) r⁻¹ f(r) dr`.
pub fn mixed_set_mass(a: f64, gamma: f64, f: &RadialProfile, set: &IntervalSet) -> Result<f64> {
    check_set(set)?;
    let mut breaks: Vec<f64> = (-8..=8).map(|e| 10f64.powi(e)).collect();
    breaks.extend(f.breakpoints(0.0, f64::INFINITY));
    for [x1, x2] in set {
        for x in [x1, x2] {
            if gamma != 0.0 && x / gamma > 0.0 {
                breaks.push(x / gamma);
            }
            if a > 0.0 {
                breaks.push(x * x / a);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let g = |r: f64| {
        if r <= 0.0 {
            return 0.0;
        }
        let m: f64 = set.iter().map(|[x1, x2]| gaussian_interval_mass(r * a, r * gamma, *x1, *x2).unwrap_or(0.0)).sum();
        if m == 0.0 {
            0.0
        } else {
            m * f.value(r) / r
        }
    };
    Ok(integrate_with_breaks(g, 0.0, f64::INFINITY, &breaks, Tolerance::new(1e-12, 1e-15))?.value)
}

/// `∫ G_{ra,rγ}(b⁻¹B) r⁻¹ f dr - ∫ G_{ra,rγ}(B) r⁻¹ f dr` with both sides.
pub fn lemma1_margin(a: f64, gamma: f64, f: &RadialProfile, b: f64, set: &IntervalSet) -> Result<(f64, f64)> {
    if !(a >= 0.0) {
        return Err(Error::input("a must be nonnegative"));
    }
    if !(b > 1.0) {
        return Err(Error::input("b must exceed 1"));
    }
    check_decreasing(f)?;
    let shrunk: IntervalSet = set.iter().map(|[x1, x2]| [x1 / b, x2 / b]).collect();
    Ok((mixed_set_mass(a, gamma, f, &shrunk)?, mixed_set_mass(a, gamma, f, set)?))
}

pub fn verify_lemma1(p: &Lemma1Params) -> Result<Outcome> {
    for f in &p.profiles {
        check_decreasing(f)?;
        f.integrability(Integrability::Subordinator)?;
    }
    let mut cases = Vec::new();
    for &a in &p.a {
        for &g in &p.gamma {
            for fi in 0..p.profiles.len() {
                for &b in &p.spans {
                    for si in 0..p.sets.len() {
                        cases.push((a, g, fi, b, si));
                    }
                }
            }
        }
    }
    let rows = cases
        .par_iter()
        .map(|&(a, g, fi, b, si)| {
            let (lhs, rhs) = lemma1_margin(a, g, &p.profiles[fi], b, &p.sets[si])?;
            Ok(vec![a, g, fi as f64, b, si as f64, lhs, rhs, lhs - rhs])
        })
        .collect::<Result<Vec<_>>>()?;
    let margin = rows.iter().map(|r| r[7]).fold(f64::INFINITY, f64::min);
    let mut table = Table::new("cases", &["a", "gamma", "profile", "b", "set", "lhs", "rhs", "margin"]);
    table.rows = rows;
    let combos = p.a.len() * p.gamma.len() * p.profiles.len() * p.spans.len();
    let details = json!({ "combinations": combos, "sets": p.sets.len(), "cases": table.rows.len(), "tol": p.tol });
    Ok(Outcome { verdict: verdict_of(margin >= -p.tol), margin: Some(margin), details, tables: vec![table] })
}

fn tol_1e6() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm1Params {
    pub subordinand: ConeSemigroup,
    pub subordinator: SubordinatorSpec,
    #[serde(default)]
    pub grid: Option<ProfileGrid>,
    /// Closed-form profile expected on both sides.
    #[serde(default)]
    pub reference: Option<RadialProfile>,
    #[serde(default = "tol_1e6")]
    pub reference_tol: f64,
    #[serde(default = "tol_1e9")]
    pub tol: f64,
}

fn min_step(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
}

pub fn verify_thm1(p: &Thm1Params) -> Result<Outcome> {
    let pre = is_selfdecomposable(p.subordinator.levy());
    if !pre.passed() {
        return Err(Error::Precondition(format!("subordinator is not selfdecomposable (margin {:e})", pre.margin)));
    }
    let grid = p.grid.unwrap_or_default();
    let t = subordinated_levy_gaussian(&p.subordinand, &p.subordinator, &grid)?;
    let (plus, minus) = profile_values(&t.triplet, &grid);
    let step = min_step(&plus).min(min_step(&minus));
    let sd = is_selfdecomposable(t.triplet.levy());
    let mut table = Table::new("profile", &["r", "k_plus", "k_minus", "reference"]);
    let mut ref_err: f64 = 0.0;
    for (j, r) in grid.nodes().into_iter().enumerate() {
        let want = p.reference.as_ref().map_or(f64::NAN, |f| f.value(r));
        if p.reference.is_some() {
            for k in [plus[j], minus[j]] {
                ref_err = ref_err.max(((k - want) / want).abs());
            }
        }
        table.rows.push(vec![r, plus[j], minus[j], want]);
    }
    let ref_ok = p.reference.is_none() || ref_err <= p.reference_tol;
    let ok = step >= -p.tol && sd.passed() && ref_ok;
    let details = json!({
        "monotone_margin": step,
        "selfdecomposable": sd,
        "reference_max_rel_error": if p.reference.is_some() { json!(ref_err) } else { Value::Null },
        "gaussian": t.triplet.gaussian()[(0, 0)],
        "drift": t.triplet.drift()[0],
        "warnings": t.warnings,
    });
    Ok(Outcome { verdict: verdict_of(ok), margin: Some(step), details, tables: vec![table] })
}

fn tol_1e8() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationCheck {
    pub z_grid: Vec<Vec<f64>>,
    #[serde(default = "tol_1e8")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm2iParams {
    pub subordinand: ConeSemigroup,
    pub subordinator: SubordinatorSpec,
    /// Strict semistability index of the subordinand.
    pub alpha: f64,
    /// Span of the subordinator's class.
    pub b: f64,
    #[serde(default)]
    pub m: usize,
    #[serde(default = "tol_1e8")]
    pub tol: f64,
    #[serde(default)]
    pub grid: Option<ProfileGrid>,
    #[serde(default = "yes")]
    pub levy: bool,
    #[serde(default)]
    pub factorization: Option<FactorizationCheck>,
}

/// Grid with 8 nodes per span covering `[1e-4, 1e3]`.
pub fn span_grid(span: f64) -> ProfileGrid {
    let q = span.powf(0.125);
    ProfileGrid { r0: 1e-4, q, n: (1e7f64.ln() / q.ln()).ceil() as usize + 1 }
}

/// `min_j min_{i ≤ m+1} Δ^i k(r_j)` over node shifts by `p` that stay on the grid.
fn table_difference_margin(values: &[f64], p: usize, m: usize) -> f64 {
    let mut worst = f64::INFINITY;
    for i in 1..=m + 1 {
        for j in 0..values.len() {
            if j + i * p >= values.len() {
                break;
            }
            let d: f64 = (0..=i)
                .map(|l| {
                    let c = (0..l).fold(1.0, |acc, t| acc * (i - t) as f64 / (t + 1) as f64);
                    (if l % 2 == 0 { c } else { -c }) * values[j + l * p]
                })
                .sum();
            worst = worst.min(d);
        }
    }
    worst
}

pub fn verify_thm2i(p: &Thm2iParams) -> Result<Outcome> {
    if !(p.alpha > 0.0 && p.alpha <= 2.0) {
        return Err(Error::input("alpha must lie in (0, 2]"));
    }
    let span = p.b.powf(1.0 / p.alpha);
    if !p.subordinand.is_strictly_semistable(p.alpha, span) {
        return Err(Error::Precondition(format!("subordinand is not strictly {}-semistable with span {span}", p.alpha)));
    }
    let pre = lm_membership(p.subordinator.levy(), p.b, p.m)?;
    if !pre.passed() {
        return Err(Error::Precondition(format!(
            "subordinator fails the order-{} class at span {} (margin {:e})",
            p.m, p.b, pre.margin
        )));
    }
    let mut details = json!({ "span": span, "m": p.m, "subordinator_margin": pre.margin });
    let mut tables = Vec::new();
    let mut ok = true;
    let mut margin = f64::INFINITY;
    if p.levy {
        let grid = p.grid.unwrap_or_else(|| span_grid(span));
        let shift = (span.ln() / grid.q.ln()).round();
        if shift < 1.0 || (grid.q.powf(shift) - span).abs() > 1e-9 * span {
            return Err(Error::input(format!("grid ratio {} does not divide the span {span}", grid.q)));
        }
        let t = levy_transform(&p.subordinand, &p.subordinator, &grid)?;
        let (plus, minus) = profile_values(&t.triplet, &grid);
        let m_plus = table_difference_margin(&plus, shift as usize, p.m);
        let m_minus = table_difference_margin(&minus, shift as usize, p.m);
        margin = m_plus.min(m_minus);
        let class = lm_membership(t.triplet.levy(), span, p.m)?;
        ok &= margin >= -p.tol && class.passed();
        let mut table = Table::new("profile", &["r", "k_plus", "k_minus"]);
        for (j, r) in grid.nodes().into_iter().enumerate() {
            table.rows.push(vec![r, plus[j], minus[j]]);
        }
        tables.push(table);
        details["grid_margin"] = json!(margin);
        details["class"] = serde_json::to_value(&class).expect("verdict json");
        details["warnings"] = json!(t.warnings);
    }
    if let Some(fc) = &p.factorization {
        check_grid(&fc.z_grid)?;
        let residual = factorization_check(&p.subordinand, &p.subordinator, p.alpha, p.b, &fc.z_grid)?;
        ok &= residual < fc.tol;
        margin = margin.min(fc.tol - residual);
        details["factorization_residual"] = json!(residual);
    }
    Ok(Outcome { verdict: verdict_of(ok), margin: margin.is_finite().then_some(margin), details, tables })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm2iiParams {
    pub subordinand: ConeSemigroup,
    pub subordinator: SubordinatorSpec,
    pub alpha: f64,
    pub alpha_prime: f64,
    /// Span of the subordinator.
    pub b: f64,
    pub z_grid: Vec<Vec<f64>>,
    #[serde(default = "tol_1e6")]
    pub tol: f64,
    /// Scale `c` of an expected symmetric Cauchy cf `e^{-c|z|}`.
    #[serde(default)]
    pub cauchy_scale: Option<f64>,
    #[serde(default = "tol_1e8")]
    pub closed_form_tol: f64,
}

pub fn verify_thm2ii(p: &Thm2iiParams) -> Result<Outcome> {
    check_grid(&p.z_grid)?;
    strict_1_semistable_cone_guard(&p.subordinator, p.alpha_prime)?;
    let span = p.b.powf(1.0 / p.alpha);
    if !p.subordinand.is_strictly_semistable(p.alpha, span) {
        return Err(Error::Precondition(format!("subordinand is not strictly {}-semistable with span {span}", p.alpha)));
    }
    let rho = &p.subordinator;
    let n = rho.cone().ambient_dim();
    let rho_cf = |t: &[f64]| {
        let w: Vec<C64> = vec![C64::new(0.0, t[0]); n];
        rho.complex_mgf(&w)
    };
    let pre = is_strictly_semistable_cf(&rho_cf, p.alpha_prime, p.b, &line_grid(0.05, 3.0, 12), p.tol)?;
    if !pre.passed() {
        return Err(Error::Precondition(format!(
            "subordinator is not strictly {}-semistable with span {} along the cone diagonal",
            p.alpha_prime, p.b
        )));
    }
    let law = subordinate_cf(&p.subordinand, rho)?;
    let cf = |z: &[f64]| law.cf(z);
    let v = is_strictly_semistable_cf(&cf, p.alpha * p.alpha_prime, span, &p.z_grid, p.tol)?;
    let mut ok = v.passed();
    let mut details = json!({ "index": p.alpha * p.alpha_prime, "span": span, "residual": p.tol - v.margin, "class": v });
    let mut table = Table::new("cf", &["z", "re", "im", "closed_form"]);
    if let Some(c) = p.cauchy_scale {
        let mut worst: f64 = 0.0;
        for z in &p.z_grid {
            let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            let got = law.cf(z)?;
            let want = (-c * norm).exp();
            worst = worst.max((got - want).norm());
            table.rows.push(vec![z[0], got.re, got.im, want]);
        }
        ok &= worst <= p.closed_form_tol;
        details["closed_form_error"] = json!(worst);
    }
    Ok(Outcome { verdict: verdict_of(ok), margin: Some(v.margin), details, tables: vec![table] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prop2Mode {
    /// Empirical cf against the analytic cf, `max |dev| / SE <= threshold`.
    Analytic,
    /// Empirical span identity `cf(span z) = cf(z)^{span^exponent}` within its budget.
    SpanIdentity,
}

fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}

fn four() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop2Params {
    pub spec: MultGSpec,
    pub n: usize,
    pub z_grid: Vec<Vec<f64>>,
    pub mode: Prop2Mode,
    #[serde(default)]
    pub exponent: Option<f64>,
    #[serde(default)]
    pub span: Option<f64>,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "four")]
    pub threshold: f64,
}

pub fn verify_prop2(p: &Prop2Params, seed: u64) -> Result<Outcome> {
    check_grid(&p.z_grid)?;
    let stream = RandomStream::new(seed, 0);
    match p.mode {
        Prop2Mode::Analytic => {
            let r = mc_vs_analytic(&p.spec, &p.z_grid, p.n, &stream, p.cutoff)?;
            let mut table = Table::new("mc", &["z0", "z1", "emp_re", "emp_im", "se", "analytic_re", "analytic_im", "deviation"]);
            for row in &r.rows {
                let z1 = row.z.get(1).copied().unwrap_or(f64::NAN);
                table.rows.push(vec![
                    row.z[0], z1, row.empirical.re, row.empirical.im, row.se, row.analytic.re, row.analytic.im,
                    row.deviation,
                ]);
            }
            let details = json!({ "n": r.n, "max_abs_deviation": r.max_abs_deviation, "threshold": p.threshold });
            Ok(Outcome {
                verdict: verdict_of(r.max_abs_deviation <= p.threshold),
                margin: Some(p.threshold - r.max_abs_deviation),
                details,
                tables: vec![table],
            })
        }
        Prop2Mode::SpanIdentity => {
            let exponent = p.exponent.ok_or_else(|| Error::input("span_identity needs an exponent"))?;
            let span = p.span.ok_or_else(|| Error::input("span_identity needs a span"))?;
            let r = span_identity(&p.spec, exponent, span, &p.z_grid, p.n, &stream, p.cutoff)?;
            let mut table = Table::new("span", &["z0", "z1", "residual", "se", "bias", "budget"]);
            let mut margin = f64::INFINITY;
            for row in &r.rows {
                let z1 = row.z.get(1).copied().unwrap_or(f64::NAN);
                table.rows.push(vec![row.z[0], z1, row.residual, row.se, row.bias, row.budget]);
                margin = margin.min(row.budget - row.residual);
            }
            let details = json!({
                "n": r.n, "exponent": r.exponent, "span": r.span, "epsilon": r.epsilon,
                "small_jump_mean": r.small_jump_mean,
            });
            Ok(Outcome { verdict: verdict_of(r.pass), margin: Some(margin), details, tables: vec![table] })
        }
    }
}

fn default_drift2() -> Vec<f64> {
    vec![1.0, 0.5]
}

fn sixteen() -> usize {
    16
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Remark3Params {
    #[serde(default = "default_drift2")]
    pub gamma: Vec<f64>,
    /// Gamma subordinator Lévy density `c s⁻¹ e^{-qs}`.
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "sixteen")]
    pub directions: usize,
    #[serde(default)]
    pub grid: Option<ProfileGrid>,
}

impl Default for Remark3Params {
    fn default() -> Self {
        Remark3Params { gamma: default_drift2(), c: 1.0, q: 1.0, directions: 16, grid: None }
    }
}

/// Lévy density at `x ∈ R²` of the gamma-subordinated planar Brownian motion with drift `γ`.
pub fn planar_density(x: [f64; 2], gamma: &[f64], c: f64, q: f64) -> Result<f64> {
    let xx = x[0] * x[0] + x[1] * x[1];
    let xg = x[0] * gamma[0] + x[1] * gamma[1];
    let gg = gamma[0] * gamma[0] + gamma[1] * gamma[1];
    let f = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let e = -(xx - 2.0 * s * xg + s * s * gg) / (2.0 * s) - q * s;
        c * e.exp() / (2.0 * PI * s * s)
    };
    let mut breaks: Vec<f64> = (-10..=6).map(|e| 10f64.powi(e)).collect();
    breaks.push(xx);
    breaks.push(xx.sqrt());
    if gg > 0.0 {
        breaks.push((xx / gg).sqrt());
    }
    breaks.sort_by(f64::total_cmp);
    Ok(integrate_with_breaks(f, 0.0, f64::INFINITY, &breaks, Tolerance::new(1e-10, 1e-300))?.value)
}

pub fn explore_remark3(p: &Remark3Params) -> Result<Outcome> {
    if p.gamma.len() != 2 {
        return Err(Error::input("drift must be two-dimensional"));
    }
    if !(p.c > 0.0 && p.q > 0.0) || p.directions < 1 {
        return Err(Error::input("need c, q > 0 and at least one direction"));
    }
    let grid = p.grid.unwrap_or_default();
    let nodes = grid.nodes();
    let dirs: Vec<[f64; 2]> = (0..p.directions)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / p.directions as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    let profiles = dirs
        .par_iter()
        .map(|u| {
            nodes.iter().map(|&r| Ok(r * r * planar_density([r * u[0], r * u[1]], &p.gamma, p.c, p.q)?)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut per_direction = Vec::new();
    let mut table = Table::new("profiles", &["angle", "r", "k"]);
    let mut any_increase = false;
    for (i, k) in profiles.iter().enumerate() {
        let angle = 2.0 * PI * i as f64 / p.directions as f64;
        let mut worst = (f64::INFINITY, f64::NAN);
        for j in 0..k.len() - 1 {
            let slack = k[j] - k[j + 1];
            if slack < worst.0 {
                worst = (slack, nodes[j]);
            }
        }
        let increasing = worst.0 < -1e-9 * (1.0 + k.iter().cloned().fold(0.0, f64::max));
        any_increase |= increasing;
        per_direction.push(json!({ "angle": angle, "margin": worst.0, "at_r": worst.1, "non_increasing": !increasing }));
        for (j, v) in k.iter().enumerate() {
            table.rows.push(vec![angle, nodes[j], *v]);
        }
    }
    let details = json!({
        "directions": per_direction,
        "selfdecomposable_on_grid": !any_increase,
        "note": "recorded only; no outcome is asserted",
    });
    Ok(Outcome { verdict: Verdict::Pass, margin: None, details, tables: vec![table] })
}

pub fn brownian() -> ConeSemigroup {
    ConeSemigroup::gaussian1d(Cone::orthant(1).expect("orthant"), vec![1.0], vec![0.0]).expect("brownian")
}

pub fn cauchy() -> ConeSemigroup {
    ConeSemigroup::stable(1.0, vec![1.0]).expect("cauchy")
}

/// Gaussian subordinand on `R₊²` with `a = (1, 2)`, `γ = (1, -1)`, mixed by independent gamma atoms on the axes.
pub fn cone_instance() -> Result<(ConeSemigroup, SubordinatorSpec)> {
    use crate::levy::LevyAtom;
    let cone = Cone::orthant(2)?;
    let sg = ConeSemigroup::gaussian1d(cone.clone(), vec![1.0, 2.0], vec![1.0, -1.0])?;
    let atoms = vec![
        LevyAtom { direction: vec![1.0, 0.0], weight: 1.0, profile: RadialProfile::Exponential { c: 1.0, q: 1.0 } },
        LevyAtom { direction: vec![0.0, 1.0], weight: 1.0, profile: RadialProfile::Exponential { c: 0.5, q: 2.0 } },
    ];
    Ok((sg, SubordinatorSpec::new(cone, vec![0.0, 0.0], atoms)?))
}
