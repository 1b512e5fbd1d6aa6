//! Seedable Monte Carlo for subordinators on cones and type multG laws
//! `Z^{1/2} X`, plus empirical characteristic functions.

mod multg;
mod rng;

pub use multg::{mc_vs_analytic, sample_multg, span_identity, McReport, McRow, MultGSpec, PsdJump, SpanReport, SpanRow, ZLaw};
pub use rng::RandomStream;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{LogPeriodic, RadialProfile};
use crate::numerics::{gamma, Tolerance};
use crate::subordination::SubordinatorSpec;

/// Small-jump cutoff used for infinite-activity profiles without an exact sampler.
pub const DEFAULT_CUTOFF: f64 = 1e-5;

/// Samples are produced in chunks of this size, chunk `c` on substream `c`.
pub const CHUNK: usize = 1024;

const GUESS_CELLS: usize = 512;

/// Within-period inverse CDF of `h(x)/x dx` on `[1, b]`.
#[derive(Debug, Clone)]
struct PeriodLaw {
    pieces: Vec<(f64, f64, f64, f64)>,
    cum: Vec<f64>,
    guess: Vec<f64>,
}

impl PeriodLaw {
    fn new(lp: &LogPeriodic) -> Self {
        let pieces = lp.pieces();
        let mut cum = vec![0.0];
        for &(x1, x2, p, q) in &pieces {
            let m = p * (x2 / x1).ln() + q * (x2 - x1);
            cum.push(cum.last().unwrap() + m.max(0.0));
        }
        let mut law = PeriodLaw { pieces, cum, guess: Vec::new() };
        let guess = (0..=GUESS_CELLS).map(|i| law.solve(i as f64 / GUESS_CELLS as f64, None)).collect();
        law.guess = guess;
        law
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn invert(&self, u: f64) -> f64 {
        let t = u * GUESS_CELLS as f64;
        let i = (t as usize).min(GUESS_CELLS - 1);
        let start = self.guess[i] + (self.guess[i + 1] - self.guess[i]) * (t - i as f64);
        self.solve(u, Some(start))
    }

    fn solve(&self, u: f64, start: Option<f64>) -> f64 {
        let target = u * self.total();
        let j = match self.cum.iter().position(|c| *c >= target) {
            Some(0) | None => 0,
            Some(i) => i - 1,
        }
        .min(self.pieces.len() - 1);
        let (x1, x2, p, q) = self.pieces[j];
        let need = target - self.cum[j];
        if q == 0.0 {
            return if p > 0.0 { (x1 * (need / p).exp()).clamp(x1, x2) } else { x1 };
        }
        let f = |x: f64| p * (x / x1).ln() + q * (x - x1) - need;
        let piece_mass = self.cum[j + 1] - self.cum[j];
        let mut x = match start {
            Some(g) if g > x1 && g < x2 => g,
            _ if piece_mass > 0.0 => x1 + (x2 - x1) * need / piece_mass,
            _ => x1,
        };
        let (mut lo, mut hi) = (x1, x2);
        for _ in 0..60 {
            let fx = f(x);
            if fx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let step = fx / (p / x + q);
            if step.abs() <= 1e-13 * x {
                return (x - step).clamp(x1, x2);
            }
            let next = x - step;
            x = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-15 * x {
                break;
            }
        }
        x
    }
}

/// Jump-size law of a compound Poisson approximation on `(ε, ∞)`.
#[derive(Debug, Clone)]
enum JumpLaw {
    /// Period `n0 + K` with `K` geometric of ratio `b^{-α}`, position from `h(x)/x`.
    LogPeriodic { lp: LogPeriodic, period: PeriodLaw, beta: f64, base: f64 },
    /// Piecewise log-linear inverse of the tabulated radial distribution function.
    Table { radii: Vec<f64>, cum: Vec<f64> },
}

/// One-dimensional radial sampler for a single atom at time 1.
#[derive(Debug, Clone)]
enum RadialSampler {
    Gamma { shape: f64, rate: f64 },
    Stable { alpha: f64, scale: f64 },
    CompoundPoisson { rate: f64, jumps: JumpLaw, drift: f64 },
}

/// Cutoff bookkeeping for one atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffInfo {
    pub atom: usize,
    /// Cutoff actually used (log-periodic profiles round down to a period end).
    pub epsilon: f64,
    /// `w ∫₀^ε k(r) dr`, the mean of the discarded jumps, added back as drift.
    pub small_jump_mean: f64,
    /// Jump rate above the cutoff.
    pub rate: f64,
}

fn radial_sampler(weight: f64, profile: &RadialProfile, cutoff: Option<f64>) -> Result<(RadialSampler, Option<(f64, f64, f64)>)> {
    match profile {
        RadialProfile::Exponential { c, q } => return Ok((RadialSampler::Gamma { shape: weight * c, rate: *q }, None)),
        RadialProfile::PowerExp { c, theta, q } if *theta == 0.0 => {
            return Ok((RadialSampler::Gamma { shape: weight * c, rate: *q }, None))
        }
        RadialProfile::PowerExp { c, theta, q } if *q == 0.0 && *theta > 0.0 && *theta < 1.0 => {
            let scale = (-weight * c * gamma(-theta)).powf(1.0 / theta);
            return Ok((RadialSampler::Stable { alpha: *theta, scale }, None));
        }
        _ => {}
    }
    let Some(eps) = cutoff else {
        return Err(Error::Capability(format!(
            "{} has infinite activity and no exact sampler; use the compound-Poisson approximation with a \
             small-jump cutoff ε (jumps below ε replaced by their mean w∫₀^ε k(r)dr)",
            profile.label()
        )));
    };
    if !(eps > 0.0) {
        return Err(Error::input("small-jump cutoff must be positive"));
    }
    if let RadialProfile::LogPeriodic(lp) = profile {
        if lp.alpha >= 1.0 {
            return Err(Error::input("log-periodic subordinator profile needs alpha < 1"));
        }
        let n0 = lp.locate(eps).0;
        let eps_used = lp.scale * lp.b.powi(n0);
        let beta = lp.b.powf(-lp.alpha);
        let period = PeriodLaw::new(lp);
        let rate = weight * period.total() * beta.powi(n0) / (1.0 - beta);
        let h_int: f64 = lp
            .pieces()
            .iter()
            .map(|&(x1, x2, p, q)| p * (x2 - x1) + 0.5 * q * (x2 * x2 - x1 * x1))
            .sum();
        let bb = lp.b * beta;
        let drift = weight * lp.scale * h_int * bb.powi(n0) / (bb - 1.0);
        let base = lp.scale * lp.b.powi(n0);
        let jumps = JumpLaw::LogPeriodic { lp: lp.clone(), period, beta, base };
        return Ok((RadialSampler::CompoundPoisson { rate, jumps, drift }, Some((eps_used, drift, rate))));
    }
    let tol = Tolerance::new(1e-10, 1e-300);
    let drift = weight * profile.weighted_integral(&|r| r, 0.0, eps, &[], tol)?.value;
    let total = weight * profile.weighted_integral(&|_| 1.0, eps, f64::INFINITY, &[], tol)?.value;
    let ratio = 2f64.powf(1.0 / 64.0);
    let mut radii = vec![eps];
    let mut cum = vec![0.0];
    while cum.last().unwrap() < &(total * (1.0 - 1e-12)) && radii.len() < 40_000 {
        let r1 = *radii.last().unwrap();
        let r2 = r1 * ratio;
        let m = weight * profile.weighted_integral(&|_| 1.0, r1, r2, &[], tol)?.value;
        radii.push(r2);
        cum.push(cum.last().unwrap() + m.max(0.0));
    }
    let rate = *cum.last().unwrap();
    Ok((RadialSampler::CompoundPoisson { rate, jumps: JumpLaw::Table { radii, cum }, drift }, Some((eps, drift, rate))))
}

impl RadialSampler {
    fn draw(&self, s: &mut RandomStream) -> Result<f64> {
        match self {
            RadialSampler::Gamma { shape, rate } => s.gamma(*shape, *rate),
            RadialSampler::Stable { alpha, scale } => Ok(scale * s.positive_stable(*alpha)),
            RadialSampler::CompoundPoisson { rate, jumps, drift } => {
                let n = s.poisson(*rate)?;
                let mut total = *drift;
                for _ in 0..n {
                    total += jumps.draw(s);
                }
                Ok(total)
            }
        }
    }
}

impl JumpLaw {
    fn draw(&self, s: &mut RandomStream) -> f64 {
        match self {
            JumpLaw::LogPeriodic { lp, period, beta, base, .. } => {
                let u = s.uniform_open0();
                let t = u.ln() / beta.ln();
                let k = t.floor();
                let v = ((1.0 - u / beta.powi(k as i32)) / (1.0 - beta)).clamp(0.0, 1.0);
                base * lp.b.powi(k as i32) * period.invert(v)
            }
            JumpLaw::Table { radii, cum } => {
                let target = s.uniform() * cum.last().unwrap();
                let j = cum.partition_point(|c| *c < target).clamp(1, cum.len() - 1);
                let (c1, c2) = (cum[j - 1], cum[j]);
                let t = if c2 > c1 { (target - c1) / (c2 - c1) } else { 0.0 };
                radii[j - 1] * (radii[j] / radii[j - 1]).powf(t)
            }
        }
    }
}

/// Per-atom samplers of a subordinator plus cutoff bookkeeping.
#[derive(Debug, Clone)]
pub struct SubordinatorSampler {
    drift: Vec<f64>,
    atoms: Vec<(Vec<f64>, RadialSampler)>,
    pub cutoffs: Vec<CutoffInfo>,
}

impl SubordinatorSampler {
    /// `cutoff` enables the compound-Poisson approximation for profiles without an exact sampler.
    pub fn new(rho: &SubordinatorSpec, cutoff: Option<f64>) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut cutoffs = Vec::new();
        for (i, a) in rho.levy().atoms().iter().enumerate() {
            let (sampler, info) = radial_sampler(a.weight, &a.profile, cutoff)?;
            if let Some((epsilon, small_jump_mean, rate)) = info {
                cutoffs.push(CutoffInfo { atom: i, epsilon, small_jump_mean, rate });
            }
            atoms.push((a.direction.clone(), sampler));
        }
        Ok(SubordinatorSampler { drift: rho.drift().to_vec(), atoms, cutoffs })
    }

    pub fn draw(&self, s: &mut RandomStream) -> Result<Vec<f64>> {
        let mut x = self.drift.clone();
        for (dir, sampler) in &self.atoms {
            let r = sampler.draw(s)?;
            x.iter_mut().zip(dir).for_each(|(v, d)| *v += r * d);
        }
        Ok(x)
    }
}

/// `n` draws with chunk `c` taken from `stream.substream(c)`, concatenated in chunk order.
pub fn draw_chunked<T: Send>(
    n: usize,
    stream: &RandomStream,
    draw: impl Fn(&mut RandomStream) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let chunks = n.div_ceil(CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = stream.substream(c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| draw(&mut s)).collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<Vec<T>>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

pub fn sample_subordinator(
    rho: &SubordinatorSpec,
    n: usize,
    stream: &RandomStream,
    cutoff: Option<f64>,
) -> Result<Vec<Vec<f64>>> {
    let sampler = SubordinatorSampler::new(rho, cutoff)?;
    draw_chunked(n, stream, |s| sampler.draw(s))
}

/// Empirical characteristic function at one point with its standard error bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfEstimate {
    pub z: Vec<f64>,
    pub value: Complex64,
    pub se: f64,
}

/// `(1/n) Σ e^{i z·X_k}` with `SE = √((1 - |ĉf|²)/n)`.
pub fn empirical_cf(samples: &[Vec<f64>], z_grid: &[Vec<f64>]) -> Result<Vec<CfEstimate>> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::input("empirical characteristic function needs at least two samples"));
    }
    z_grid
        .par_iter()
        .map(|z| {
            if samples.iter().any(|x| x.len() != z.len()) {
                return Err(Error::input("sample and z dimensions differ"));
            }
            let (mut re, mut im) = (0.0, 0.0);
            for x in samples {
                let t: f64 = x.iter().zip(z).map(|(a, b)| a * b).sum();
                re += t.cos();
                im += t.sin();
            }
            let value = Complex64::new(re / n as f64, im / n as f64);
            let se = ((1.0 - value.norm_sqr()).max(0.0) / n as f64).sqrt();
            Ok(CfEstimate { z: z.clone(), value, se })
        })
        .collect()
}
