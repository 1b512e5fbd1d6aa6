use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{draw_chunked, empirical_cf, radial_sampler, RadialSampler, RandomStream};
use crate::cones::{vectorize_sym, Cone};
use crate::error::{Error, Result};
use crate::levy::{LevyAtom, LogPeriodic, RadialProfile};
use crate::semigroups::ConeSemigroup;
use crate::subordination::{subordinate_cf, SubordinatorSpec};

type C64 = Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdJump {
    pub m: Vec<Vec<f64>>,
    pub prob: f64,
}

/// Infinitely divisible law of the random matrix `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ZLaw {
    Deterministic { m: Vec<Vec<f64>> },
    /// `Z = G M` with `G ~ Gamma(shape, rate)`.
    GammaScaledPsd { shape: f64, rate: f64, m: Vec<Vec<f64>> },
    /// `Z = J_1 + ... + J_N`, `N ~ Poisson(rate)`, `J = m_k` with probability `prob_k`.
    CompoundPoissonPsd { rate: f64, jumps: Vec<PsdJump> },
    /// `Z = S M` with `S` the subordinator whose Lévy profile is `LogPeriodic{alpha_prime, b, h}`.
    SemistableScalarPsd { alpha_prime: f64, b: f64, h: Vec<f64>, m: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MultGDef {
    d: usize,
    z_law: ZLaw,
}

/// Type multG law `L(Z^{1/2} X)` with `X` standard Gaussian in `R^d`, independent of `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MultGDef", into = "MultGDef")]
pub struct MultGSpec {
    d: usize,
    z_law: ZLaw,
}

impl TryFrom<MultGDef> for MultGSpec {
    type Error = Error;
    fn try_from(m: MultGDef) -> Result<Self> {
        MultGSpec::new(m.d, m.z_law)
    }
}

impl From<MultGSpec> for MultGDef {
    fn from(m: MultGSpec) -> Self {
        MultGDef { d: m.d, z_law: m.z_law }
    }
}

fn psd_matrix(rows: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::input(format!("matrix must be {d}x{d}")));
    }
    let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
    let v = vectorize_sym(&m)?;
    if !Cone::psd(d)?.contains(&v)? {
        return Err(Error::input("matrix is not positive semidefinite"));
    }
    Ok(m)
}

/// Symmetric square root; eigenvalues down to `-1e-10 (1 + |M|)` are clamped to 0.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    let floor = -1e-10 * (1.0 + m.norm());
    if let Some(l) = eig.eigenvalues.iter().find(|l| **l < floor) {
        return Err(Error::Numerical {
            message: format!("realized matrix has eigenvalue {l:e}"),
            best: C64::new(*l, 0.0),
            abs_error: 0.0,
        });
    }
    let roots = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

impl MultGSpec {
    pub fn new(d: usize, z_law: ZLaw) -> Result<Self> {
        if d == 0 {
            return Err(Error::input("dimension must be positive"));
        }
        match &z_law {
            ZLaw::Deterministic { m } => {
                psd_matrix(m, d)?;
            }
            ZLaw::GammaScaledPsd { shape, rate, m } => {
                if !(*shape > 0.0 && *rate > 0.0 && shape.is_finite() && rate.is_finite()) {
                    return Err(Error::input("gamma shape and rate must be positive"));
                }
                psd_matrix(m, d)?;
            }
            ZLaw::CompoundPoissonPsd { rate, jumps } => {
                if !(*rate >= 0.0 && rate.is_finite()) {
                    return Err(Error::input("compound Poisson rate must be nonnegative"));
                }
                if jumps.is_empty() || jumps.iter().any(|j| !(j.prob >= 0.0)) {
                    return Err(Error::input("jump list must be non-empty with nonnegative probabilities"));
                }
                let total: f64 = jumps.iter().map(|j| j.prob).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::input(format!("jump probabilities sum to {total}, not 1")));
                }
                for j in jumps {
                    psd_matrix(&j.m, d)?;
                }
            }
            ZLaw::SemistableScalarPsd { alpha_prime, b, h, m } => {
                if !(*alpha_prime > 0.0 && *alpha_prime < 1.0) {
                    return Err(Error::input("alpha' must lie in (0, 1) for a subordinator"));
                }
                LogPeriodic::new(*alpha_prime, *b, h.clone())?;
                psd_matrix(m, d)?;
            }
        }
        Ok(MultGSpec { d, z_law })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn z_law(&self) -> &ZLaw {
        &self.z_law
    }

    fn scalar_profile(&self) -> Option<RadialProfile> {
        match &self.z_law {
            ZLaw::GammaScaledPsd { shape, rate, .. } => Some(RadialProfile::Exponential { c: *shape, q: *rate }),
            ZLaw::SemistableScalarPsd { alpha_prime, b, h, .. } => {
                Some(RadialProfile::LogPeriodic(LogPeriodic::new(*alpha_prime, *b, h.clone()).ok()?))
            }
            _ => None,
        }
    }

    /// The law of `Z` as a subordinator on the PSD cone (not available for compound Poisson jumps).
    pub fn subordinator(&self) -> Result<SubordinatorSpec> {
        let cone = Cone::psd(self.d)?;
        let zeros = vec![0.0; crate::cones::sym_dim(self.d)];
        let m = match &self.z_law {
            ZLaw::Deterministic { m } => {
                return SubordinatorSpec::drift_only(cone, vectorize_sym(&psd_matrix(m, self.d)?)?);
            }
            ZLaw::GammaScaledPsd { m, .. } | ZLaw::SemistableScalarPsd { m, .. } => m,
            ZLaw::CompoundPoissonPsd { .. } => {
                return Err(Error::Capability("compound Poisson matrix jumps have no polar radial profile".into()))
            }
        };
        let v = vectorize_sym(&psd_matrix(m, self.d)?)?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return SubordinatorSpec::drift_only(cone, zeros);
        }
        let profile = self.scalar_profile().expect("scalar law").scaled(norm)?;
        let atom = LevyAtom { direction: v.iter().map(|x| x / norm).collect(), weight: 1.0, profile };
        SubordinatorSpec::new(cone, zeros, vec![atom])
    }

    /// `E exp(-½ z'Zz)`, through CF-level subordination of the canonical PSD semigroup when possible.
    pub fn analytic_cf(&self, z: &[f64]) -> Result<C64> {
        if z.len() != self.d {
            return Err(Error::input("z has the wrong dimension"));
        }
        match &self.z_law {
            ZLaw::CompoundPoissonPsd { rate, jumps } => {
                let zv = DVector::from_column_slice(z);
                let mut s = 0.0;
                for j in jumps {
                    let m = psd_matrix(&j.m, self.d)?;
                    s += j.prob * ((-0.5 * zv.dot(&(&m * &zv))).exp() - 1.0);
                }
                Ok(C64::new((rate * s).exp(), 0.0))
            }
            _ => {
                let sg = ConeSemigroup::canonical_psd(self.d)?;
                subordinate_cf(&sg, &self.subordinator()?)?.cf(z)
            }
        }
    }

    /// `½ z'Mz` for the scalar-mixing laws.
    fn half_form(&self, z: &[f64]) -> Option<f64> {
        match &self.z_law {
            ZLaw::GammaScaledPsd { m, .. } | ZLaw::SemistableScalarPsd { m, .. } | ZLaw::Deterministic { m } => {
                let mm = psd_matrix(m, self.d).ok()?;
                let zv = DVector::from_column_slice(z);
                Some(0.5 * zv.dot(&(&mm * &zv)))
            }
            _ => None,
        }
    }
}

enum ZSampler {
    Fixed(DMatrix<f64>),
    Scalar { root: DMatrix<f64>, s: RadialSampler },
    Jumps { rate: f64, cum: Vec<f64>, mats: Vec<DMatrix<f64>> },
}

/// Returns the sampler and the small-jump mean discarded by the cutoff (0 for exact samplers).
fn z_sampler(spec: &MultGSpec, cutoff: f64) -> Result<(ZSampler, f64)> {
    let d = spec.d;
    Ok(match &spec.z_law {
        ZLaw::Deterministic { m } => (ZSampler::Fixed(psd_sqrt(&psd_matrix(m, d)?)?), 0.0),
        ZLaw::GammaScaledPsd { m, .. } | ZLaw::SemistableScalarPsd { m, .. } => {
            let root = psd_sqrt(&psd_matrix(m, d)?)?;
            let (s, info) = radial_sampler(1.0, &spec.scalar_profile().expect("scalar law"), Some(cutoff))?;
            (ZSampler::Scalar { root, s }, info.map_or(0.0, |i| i.1))
        }
        ZLaw::CompoundPoissonPsd { rate, jumps } => {
            let mut cum = Vec::new();
            let mut acc = 0.0;
            for j in jumps {
                acc += j.prob;
                cum.push(acc);
            }
            let mats = jumps.iter().map(|j| psd_matrix(&j.m, d)).collect::<Result<Vec<_>>>()?;
            (ZSampler::Jumps { rate: *rate, cum, mats }, 0.0)
        }
    })
}

impl ZSampler {
    fn draw(&self, d: usize, s: &mut RandomStream) -> Result<Vec<f64>> {
        let root = match self {
            ZSampler::Fixed(r) => r.clone(),
            ZSampler::Scalar { root, s: sampler } => root * sampler.draw(s)?.max(0.0).sqrt(),
            ZSampler::Jumps { rate, cum, mats } => {
                let n = s.poisson(*rate)?;
                let mut z = DMatrix::zeros(d, d);
                for _ in 0..n {
                    let u = s.uniform() * cum.last().unwrap();
                    let k = cum.partition_point(|c| *c <= u).min(mats.len() - 1);
                    z += &mats[k];
                }
                psd_sqrt(&z)?
            }
        };
        let x = DVector::from_iterator(d, (0..d).map(|_| s.standard_normal()));
        Ok((root * x).iter().copied().collect())
    }
}

/// `n` draws of `Z^{1/2} X`; `cutoff` is the small-jump cutoff for semistable `Z`.
pub fn sample_multg(spec: &MultGSpec, n: usize, stream: &RandomStream, cutoff: f64) -> Result<Vec<Vec<f64>>> {
    let (sampler, _) = z_sampler(spec, cutoff)?;
    draw_chunked(n, stream, |s| sampler.draw(spec.d, s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub z: Vec<f64>,
    pub empirical: C64,
    pub se: f64,
    pub analytic: C64,
    /// `|empirical - analytic| / se`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub n: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub rows: Vec<McRow>,
    pub max_abs_deviation: f64,
}

fn standardized(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn mc_vs_analytic(
    spec: &MultGSpec,
    z_grid: &[Vec<f64>],
    n: usize,
    stream: &RandomStream,
    cutoff: f64,
) -> Result<McReport> {
    let samples = sample_multg(spec, n, stream, cutoff)?;
    let est = empirical_cf(&samples, z_grid)?;
    let mut rows = Vec::with_capacity(est.len());
    let mut worst: f64 = 0.0;
    for e in est {
        let analytic = spec.analytic_cf(&e.z)?;
        let deviation = standardized((e.value - analytic).norm(), e.se);
        worst = worst.max(deviation);
        rows.push(McRow { z: e.z, empirical: e.value, se: e.se, analytic, deviation });
    }
    Ok(McReport { n, seed: stream.seed(), stream_id: stream.stream_id(), rows, max_abs_deviation: worst })
}

fn cutoff_bias(lam: f64, m: f64, eps: f64) -> f64 {
    (lam * m).min(0.5 * lam * lam * (eps * m + m * m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanRow {
    pub z: Vec<f64>,
    pub cf_z: C64,
    pub cf_scaled: C64,
    /// `|ĉf(span z) - ĉf(z)^{span^exponent}|`.
    pub residual: f64,
    pub se: f64,
    pub bias: f64,
    /// `4 se + bias`.
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanReport {
    pub n: usize,
    pub exponent: f64,
    pub span: f64,
    pub epsilon: f64,
    pub small_jump_mean: f64,
    pub rows: Vec<SpanRow>,
    pub pass: bool,
}

/// Empirical check of `σ̂(span·z) = σ̂(z)^{span^exponent}`. The standard error
/// propagates as `se(span z) + p |ĉf(z)|^{p-1} se(z)`. Replacing the small jumps `X`
/// of `S` by their mean `m_ε` moves `E e^{-λS}` by at most
/// `min(λ m_ε, λ² (ε m_ε + m_ε²) / 2)`, `λ = ½ z'Mz`, since `Var X <= ε m_ε`.
pub fn span_identity(
    spec: &MultGSpec,
    exponent: f64,
    span: f64,
    z_grid: &[Vec<f64>],
    n: usize,
    stream: &RandomStream,
    cutoff: f64,
) -> Result<SpanReport> {
    let (_, small) = z_sampler(spec, cutoff)?;
    let samples = sample_multg(spec, n, stream, cutoff)?;
    let scaled: Vec<Vec<f64>> = z_grid.iter().map(|z| z.iter().map(|x| x * span).collect()).collect();
    let at_z = empirical_cf(&samples, z_grid)?;
    let at_sz = empirical_cf(&samples, &scaled)?;
    let p = span.powf(exponent);
    let mut rows = Vec::new();
    let mut pass = true;
    for (a, b) in at_z.iter().zip(&at_sz) {
        let residual = (b.value - a.value.powf(p)).norm();
        let se = b.se + p * a.value.norm().powf(p - 1.0) * a.se;
        let lam = spec.half_form(&a.z).unwrap_or(0.0);
        let bias = cutoff_bias(span * span * lam, small, cutoff) + p * cutoff_bias(lam, small, cutoff);
        let budget = 4.0 * se + bias;
        pass &= residual <= budget;
        rows.push(SpanRow { z: a.z.clone(), cf_z: a.value, cf_scaled: b.value, residual, se, bias, budget });
    }
    Ok(SpanReport { n, exponent, span, epsilon: cutoff, small_jump_mean: small, rows, pass })
}
