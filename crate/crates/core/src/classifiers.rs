//! Class membership tests on Lévy data (selfdecomposable, semi-selfdecomposable,
//! `L_m(b⁻¹)`) and on characteristic functions (strict semistability).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{PolarLevyMeasure, RadialProfile};
use crate::subordination::SubordinatorSpec;

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Where an inequality broke: `point` is `[r]` for Lévy-level tests and `z` for CF tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atom: Option<usize>,
    pub point: Vec<f64>,
    pub quantity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Smallest slack seen; negative on failure.
    pub margin: f64,
}

impl ClassVerdict {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn pass(margin: f64) -> Self {
        ClassVerdict { verdict: Verdict::Pass, witness: None, margin: if margin.is_finite() { margin } else { 0.0 } }
    }
}

/// Running minimum of `slack` over checks, remembering the first violating point.
struct Tracker {
    margin: f64,
    witness: Option<Witness>,
    worst_violation: f64,
}

impl Tracker {
    fn new() -> Self {
        Tracker { margin: f64::INFINITY, witness: None, worst_violation: 0.0 }
    }

    fn observe(&mut self, slack: f64, allowance: f64, atom: usize, r: f64) {
        self.margin = self.margin.min(slack);
        if slack < -allowance && slack < self.worst_violation {
            self.worst_violation = slack;
            self.witness = Some(Witness { atom: Some(atom), point: vec![r], quantity: slack });
        }
    }

    fn finish(self) -> ClassVerdict {
        match self.witness {
            Some(w) => ClassVerdict { verdict: Verdict::Fail, witness: Some(w), margin: self.margin },
            None => ClassVerdict::pass(self.margin),
        }
    }
}

fn slack_tol(k: f64) -> f64 {
    1e-9 * (1.0 + k.abs())
}

/// `(r, k(r))` samples in increasing `r`; log-periodic profiles also get the
/// left limit at each period end so jumps between periods are seen.
fn monotonicity_samples(profile: &RadialProfile) -> Vec<(f64, f64)> {
    match profile {
        RadialProfile::LogPeriodic(lp) => {
            let last = *lp.h.last().unwrap();
            let beta = lp.b.powf(-lp.alpha);
            let mut out = Vec::new();
            let mut pts = profile.check_points(None);
            pts.sort_by(f64::total_cmp);
            let mut n_prev: Option<i32> = None;
            for r in pts {
                let (n, _) = lp.locate(r);
                if let Some(p) = n_prev {
                    if n > p {
                        let end = lp.scale * lp.b.powi(p + 1);
                        out.push((end, beta.powi(p) * last));
                    }
                }
                n_prev = Some(n);
                out.push((r, lp.value(r)));
            }
            out
        }
        _ => {
            let mut pts = profile.check_points(None);
            pts.sort_by(f64::total_cmp);
            pts.into_iter().map(|r| (r, profile.value(r))).collect()
        }
    }
}

/// Every radial profile non-increasing, checked on adjacent samples and on
/// the shifts `k(r) >= k(br)` for `b ∈ {1.1, 2, 10}`.
pub fn is_selfdecomposable(nu: &PolarLevyMeasure) -> ClassVerdict {
    let mut t = Tracker::new();
    for (i, a) in nu.atoms().iter().enumerate() {
        let s = monotonicity_samples(&a.profile);
        for pair in s.windows(2) {
            let (r1, k1) = pair[0];
            let (_, k2) = pair[1];
            t.observe(k1 - k2, slack_tol(k1), i, r1);
        }
        for b in [1.1, 2.0, 10.0] {
            for r in a.profile.check_points(Some(b)) {
                let k = a.profile.value(r);
                t.observe(k - a.profile.value(b * r), slack_tol(k), i, r);
            }
        }
    }
    t.finish()
}

fn commensurate_step(profile: &RadialProfile, b: f64) -> Result<()> {
    match profile {
        RadialProfile::TabulatedGeometric(t) => {
            let p = b.ln() / t.q.ln();
            if p.round() < 1.0 || (p - p.round()).abs() > 1e-9 {
                return Err(Error::input(format!(
                    "table ratio {} is not commensurate with span {b}; regrid with q = b^(1/m)",
                    t.q
                )));
            }
            Ok(())
        }
        RadialProfile::Difference { base, .. } => commensurate_step(base, b),
        _ => Ok(()),
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Δ_b^j k(r) = Σ_i (-1)^i C(j,i) k(bⁱ r)`.
pub fn iterated_difference(profile: &RadialProfile, b: f64, j: usize, r: f64) -> f64 {
    (0..=j)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(j, i) * profile.value(b.powi(i as i32) * r)
        })
        .sum()
}

/// `Δ_b^j k >= 0` on the evaluation grid for `j = 1..=m+1`.
pub fn lm_membership(nu: &PolarLevyMeasure, b: f64, m: usize) -> Result<ClassVerdict> {
    if !(b > 1.0 && b.is_finite()) {
        return Err(Error::input(format!("span {b} must exceed 1")));
    }
    for a in nu.atoms() {
        commensurate_step(&a.profile, b)?;
    }
    let mut t = Tracker::new();
    for (i, a) in nu.atoms().iter().enumerate() {
        for r in a.profile.check_points(Some(b)) {
            let k = a.profile.value(r);
            for j in 1..=m + 1 {
                let d = iterated_difference(&a.profile, b, j, r);
                t.observe(d, slack_tol(k) * binomial(j, j / 2), i, r);
            }
        }
    }
    Ok(t.finish())
}

/// `k(r) >= k(br)` on the evaluation grid.
pub fn is_semi_sd(nu: &PolarLevyMeasure, b: f64) -> Result<ClassVerdict> {
    lm_membership(nu, b, 0)
}

/// `log cf` along the segment `0 → z`, continued from `log cf(0) = 0`.
/// `None` when `|cf|` gets below `1e-12` or a step turns by more than 1 radian.
fn continuous_log(cf: &dyn Fn(&[f64]) -> Result<C64>, z: &[f64], steps: usize) -> Result<Option<C64>> {
    let mut prev = C64::new(1.0, 0.0);
    let mut arg = 0.0;
    let mut last = C64::new(0.0, 0.0);
    for s in 1..=steps {
        let t = s as f64 / steps as f64;
        let zt: Vec<f64> = z.iter().map(|x| x * t).collect();
        let v = cf(&zt)?;
        if !(v.norm() >= 1e-12) {
            return Ok(None);
        }
        let turn = (v / prev).arg();
        if turn.abs() > 1.0 {
            return Ok(None);
        }
        arg += turn;
        prev = v;
        last = C64::new(v.norm().ln(), arg);
    }
    Ok(Some(last))
}

/// Checks `b^α log cf(z) = log cf(bz)` on the grid with logs continued from the origin.
pub fn is_strictly_semistable_cf(
    cf: &dyn Fn(&[f64]) -> Result<C64>,
    alpha: f64,
    b: f64,
    z_grid: &[Vec<f64>],
    tol: f64,
) -> Result<ClassVerdict> {
    if !(b > 1.0 && b.is_finite()) {
        return Err(Error::input(format!("span {b} must exceed 1")));
    }
    let ba = b.powf(alpha);
    let mut worst = 0.0f64;
    let mut witness = None;
    for z in z_grid {
        let bz: Vec<f64> = z.iter().map(|x| x * b).collect();
        let (Some(lz), Some(lbz)) = (continuous_log(cf, z, 64)?, continuous_log(cf, &bz, 64)?) else {
            return Ok(ClassVerdict {
                verdict: Verdict::Inconclusive,
                witness: Some(Witness { atom: None, point: z.clone(), quantity: 0.0 }),
                margin: 0.0,
            });
        };
        let d = (lz * ba - lbz).norm();
        if d > worst {
            worst = d;
            if d >= tol {
                witness = Some(Witness { atom: None, point: z.clone(), quantity: d });
            }
        }
    }
    let margin = tol - worst;
    Ok(match witness {
        Some(w) => ClassVerdict { verdict: Verdict::Fail, witness: Some(w), margin },
        None => ClassVerdict::pass(margin),
    })
}

/// Strictly 1-semistable laws on a proper cone are point masses, so a
/// subordinator with a Lévy part cannot be one.
pub fn strict_1_semistable_cone_guard(spec: &SubordinatorSpec, alpha_prime: f64) -> Result<()> {
    if (alpha_prime - 1.0).abs() < 1e-12 && !spec.levy().is_empty() {
        return Err(Error::input(
            "a strictly 1-semistable law on a proper cone is a delta distribution; this subordinator has a Lévy part",
        ));
    }
    Ok(())
}
