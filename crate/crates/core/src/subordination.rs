//! Subordination of cone-parameter semigroups: the mixed characteristic
//! function `σ̂(z) = ∫ μ̂_u(z) ρ(du)`, Lévy-measure level transforms and the
//! cofactor `μ̂(z) / μ̂(b⁻¹z)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones::{dot, Cone};
use crate::error::{Error, Result};
use crate::levy::{GeometricTable, Integrability, TableInterpolation, LevyAtom, LevyTriplet, LogPeriodic, PolarLevyMeasure, RadialProfile};
use crate::numerics::{truncated_gaussian_mean, Tolerance};
use crate::semigroups::{ConeSemigroup, Kernel, SemigroupSpec};

type C64 = Complex64;

#[derive(Serialize, Deserialize)]
struct SubordinatorDef {
    cone: Cone,
    #[serde(default)]
    drift: Option<Vec<f64>>,
    #[serde(default)]
    atoms: Vec<LevyAtom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

/// A subordinator on a proper cone `K`: drift `β ∈ K` plus a Lévy measure
/// with directions in `K` and the `r ∧ 1` integrability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SubordinatorDef", into = "SubordinatorDef")]
pub struct SubordinatorSpec {
    cone: Cone,
    drift: Vec<f64>,
    levy: PolarLevyMeasure,
    name: Option<String>,
}

impl TryFrom<SubordinatorDef> for SubordinatorSpec {
    type Error = Error;
    fn try_from(d: SubordinatorDef) -> Result<Self> {
        let n = d.cone.ambient_dim();
        let mut s = SubordinatorSpec::new(d.cone, d.drift.unwrap_or_else(|| vec![0.0; n]), d.atoms)?;
        s.name = d.name;
        Ok(s)
    }
}

impl From<SubordinatorSpec> for SubordinatorDef {
    fn from(s: SubordinatorSpec) -> Self {
        SubordinatorDef { cone: s.cone, drift: Some(s.drift), atoms: s.levy.atoms().to_vec(), name: s.name }
    }
}

impl SubordinatorSpec {
    pub fn new(cone: Cone, drift: Vec<f64>, atoms: Vec<LevyAtom>) -> Result<Self> {
        let n = cone.ambient_dim();
        if drift.len() != n {
            return Err(Error::input(format!("drift has dimension {}, cone has {n}", drift.len())));
        }
        if !cone.contains(&drift)? {
            return Err(Error::input("subordinator drift lies outside the cone"));
        }
        let levy = PolarLevyMeasure::new(n, atoms, Some(cone.clone()), Integrability::Subordinator)?;
        Ok(SubordinatorSpec { cone, drift, levy, name: None })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Deterministic subordinator `δ_β`.
    pub fn drift_only(cone: Cone, drift: Vec<f64>) -> Result<Self> {
        Self::new(cone, drift, Vec::new())
    }

    /// Gamma subordinator on `R₊` with `k(r) = c e^{-qr}`.
    pub fn gamma(c: f64, q: f64) -> Result<Self> {
        let atom = LevyAtom { direction: vec![1.0], weight: 1.0, profile: RadialProfile::Exponential { c, q } };
        Self::new(Cone::orthant(1)?, vec![0.0], vec![atom])
    }

    /// One-sided `alpha`-stable subordinator on `R₊` with `log E e^{-λZ} = -c λ^alpha`.
    pub fn positive_stable(alpha: f64, c: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::input(format!("positive stable index {alpha} outside (0, 1)")));
        }
        let c0 = -c / crate::numerics::gamma(-alpha);
        let profile = RadialProfile::PowerExp { c: c0, theta: alpha, q: 0.0 };
        let atom = LevyAtom { direction: vec![1.0], weight: 1.0, profile };
        Self::new(Cone::orthant(1)?, vec![0.0], vec![atom])
    }

    pub fn cone(&self) -> &Cone {
        &self.cone
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn levy(&self) -> &PolarLevyMeasure {
        &self.levy
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn descriptor(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let atoms: Vec<String> = self.levy.atoms().iter().map(|a| a.profile.label()).collect();
        format!("subordinator(drift={:?}, atoms=[{}])", self.drift, atoms.join(", "))
    }

    /// `log ∫ e^{⟨u,w⟩} ρ(du)`; needs `Re⟨ξ,w⟩ <= 0` along β and every Lévy direction.
    pub fn log_mgf(&self, w: &[C64]) -> Result<C64> {
        let n = self.cone.ambient_dim();
        if w.len() != n {
            return Err(Error::input(format!("w has dimension {}, cone has {n}", w.len())));
        }
        let wn = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let slack = 1e-12 * (1.0 + wn);
        let pair = |v: &[f64]| -> C64 { v.iter().zip(w).map(|(a, b)| b * *a).sum() };
        let drift_pair = pair(&self.drift);
        let dn = self.drift.iter().map(|x| x * x).sum::<f64>().sqrt();
        if dn > 0.0 && drift_pair.re > slack * dn {
            return Err(Error::domain("Re⟨β, w⟩ > 0: the moment generating function diverges"));
        }
        let mut total = drift_pair;
        for (i, a) in self.levy.atoms().iter().enumerate() {
            let mut p = pair(&a.direction);
            if p.re > slack {
                return Err(Error::domain(format!("Re⟨ξ, w⟩ > 0 along atom {i}: the moment generating function diverges")));
            }
            p.re = p.re.min(0.0);
            total += a.profile.laplace_exponent(p)? * a.weight;
        }
        Ok(total)
    }

    pub fn complex_mgf(&self, w: &[C64]) -> Result<C64> {
        Ok(self.log_mgf(w)?.exp())
    }

    /// Cofactor at span `b`: drift `(1 - b⁻¹)β`, profiles `k(r) - k(br)`.
    pub fn cofactor(&self, b: f64) -> Result<Cofactor<SubordinatorSpec>> {
        check_span(b)?;
        let atoms = match cofactor_atoms(self.levy.atoms(), b)? {
            Ok(a) => a,
            Err(w) => return Ok(Cofactor::Rejected(w)),
        };
        let drift: Vec<f64> = self.drift.iter().map(|x| x * (1.0 - 1.0 / b)).collect();
        assert!(self.cone.contains(&drift)?, "cofactor drift left the cone");
        let levy = PolarLevyMeasure::new(self.cone.ambient_dim(), atoms, Some(self.cone.clone()), Integrability::Subordinator)?;
        assert!(
            levy.atoms().iter().zip(self.levy.atoms()).all(|(a, o)| a.direction == o.direction),
            "cofactor changed the direction set"
        );
        Ok(Cofactor::Accepted(SubordinatorSpec {
            cone: self.cone.clone(),
            drift,
            levy,
            name: self.name.as_ref().map(|n| format!("{n} cofactor b={b}")),
        }))
    }
}

/// Mixed law `σ = ∫ μ_u ρ(du)`.
#[derive(Debug, Clone)]
pub struct SubordinatedLaw {
    pub subordinand: ConeSemigroup,
    pub subordinator: SubordinatorSpec,
    pub triplet: Option<LevyTriplet>,
}

impl SubordinatedLaw {
    pub fn log_cf(&self, z: &[f64]) -> Result<C64> {
        self.subordinator.log_mgf(&self.subordinand.eta(z)?)
    }

    pub fn cf(&self, z: &[f64]) -> Result<C64> {
        Ok(self.log_cf(z)?.exp())
    }

    pub fn provenance(&self) -> (String, String) {
        (self.subordinand.family().to_string(), self.subordinator.descriptor())
    }
}

pub fn complex_mgf(rho: &SubordinatorSpec, w: &[C64]) -> Result<C64> {
    rho.complex_mgf(w)
}

pub fn subordinate_cf(subordinand: &ConeSemigroup, rho: &SubordinatorSpec) -> Result<SubordinatedLaw> {
    if subordinand.param_cone() != rho.cone() {
        return Err(Error::input("subordinator cone differs from the semigroup parameter cone"));
    }
    Ok(SubordinatedLaw { subordinand: subordinand.clone(), subordinator: rho.clone(), triplet: None })
}

/// Geometric radii `r_j = r0 q^j`, `j < n`, on which profiles are tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileGrid {
    pub r0: f64,
    pub q: f64,
    pub n: usize,
}

impl Default for ProfileGrid {
    fn default() -> Self {
        ProfileGrid::span_aligned(2.0)
    }
}

impl ProfileGrid {
    /// `r0 = 1e-4`, `q = b^{1/8}`, 160 points.
    pub fn span_aligned(b: f64) -> Self {
        ProfileGrid { r0: 1e-4, q: b.powf(0.125), n: 160 }
    }

    pub fn node(&self, j: usize) -> f64 {
        self.r0 * self.q.powi(j as i32)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    fn check(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.q > 1.0 && self.q.is_finite() && self.n >= 2) {
            return Err(Error::input("profile grid needs r0 > 0, q > 1 and at least two points"));
        }
        Ok(())
    }
}

/// Lévy-level transform output: the triplet and anything worth flagging.
#[derive(Debug, Clone)]
pub struct LevyTransform {
    pub triplet: LevyTriplet,
    pub warnings: Vec<String>,
}

/// Table with power-law continuations fitted from the first two nodes and the last decade.
pub fn fit_table(grid: &ProfileGrid, values: Vec<f64>) -> GeometricTable {
    let n = values.len();
    let lq = grid.q.ln();
    let head_exponent = if values[0] > 0.0 && values[1] > 0.0 {
        ((values[0] / values[1]).ln() / lq).clamp(0.0, 1.999)
    } else {
        0.0
    };
    let m = ((10f64).ln() / lq).ceil() as usize;
    let m = m.min(n - 1);
    let (a, z) = (values[n - 1 - m], values[n - 1]);
    let tail_exponent = if a > 0.0 && z > 0.0 {
        let t = (a / z).ln() / (m as f64 * lq);
        if t > 1e-3 {
            t
        } else {
            1.0
        }
    } else {
        1.0
    };
    GeometricTable { r0: grid.r0, q: grid.q, values, tail_exponent, head_exponent, interpolation: TableInterpolation::LogCubic }
}

fn decade_breaks() -> Vec<f64> {
    (-10..=10).map(|e| 10f64.powi(e)).collect()
}

/// `Σ w ∫₀^∞ p_{sξ}(x) s⁻¹ k(s) ds` for mixing atoms with a closed-form kernel.
fn mixed_density(atoms: &[(f64, RadialProfile, Box<dyn Fn(f64) -> Kernel + Sync + '_>)], x: f64) -> Result<f64> {
    let mut g = 0.0;
    for (w, profile, kern) in atoms {
        let mut breaks = decade_breaks();
        match kern(1.0) {
            Kernel::Gaussian { var, mean } => {
                if mean != 0.0 && x / mean > 0.0 {
                    breaks.push(x / mean);
                }
                if var > 0.0 {
                    breaks.push(x * x / var);
                }
            }
            Kernel::Cauchy { scale } => {
                if scale > 0.0 {
                    breaks.push(x.abs() / scale);
                }
            }
        }
        let f = |s: f64| kern(s).density(x);
        g += w * profile.weighted_integral(&f, 0.0, f64::INFINITY, &breaks, Tolerance::relative(1e-10))?.value;
    }
    Ok(g)
}

type MixAtom<'a> = (f64, RadialProfile, Box<dyn Fn(f64) -> Kernel + Sync + 'a>);

fn tabulate_sides(atoms: &[MixAtom<'_>], grid: &ProfileGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    let nodes = grid.nodes();
    let plus = nodes
        .par_iter()
        .map(|&r| Ok(r * mixed_density(atoms, r)?))
        .collect::<Result<Vec<f64>>>()?;
    let minus = nodes
        .par_iter()
        .map(|&r| Ok(r * mixed_density(atoms, -r)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok((plus, minus))
}

fn two_sided_measure(grid: &ProfileGrid, plus: Vec<f64>, minus: Vec<f64>) -> Result<PolarLevyMeasure> {
    let mut atoms = Vec::new();
    for (dir, vals) in [(1.0, plus), (-1.0, minus)] {
        if vals.iter().any(|v| *v > 0.0) {
            let vals = vals.into_iter().map(|v| v.max(0.0)).collect();
            atoms.push(LevyAtom {
                direction: vec![dir],
                weight: 1.0,
                profile: RadialProfile::TabulatedGeometric(fit_table(grid, vals)),
            });
        }
    }
    PolarLevyMeasure::new(1, atoms, None, Integrability::General)
}

/// Lévy triplet of the law obtained by subordinating a one-dimensional
/// Gaussian semigroup `μ_u = G_{⟨u,a⟩, ⟨u,γ⟩}` with `ρ`.
pub fn subordinated_levy_gaussian(
    subordinand: &ConeSemigroup,
    rho: &SubordinatorSpec,
    grid: &ProfileGrid,
) -> Result<LevyTransform> {
    grid.check()?;
    let SemigroupSpec::Gaussian1d { a_vec, gamma_vec, .. } = subordinand.spec() else {
        return Err(Error::input("subordinated_levy_gaussian needs a gaussian1d subordinand"));
    };
    if subordinand.param_cone() != rho.cone() {
        return Err(Error::input("subordinator cone differs from the semigroup parameter cone"));
    }
    let mut warnings = Vec::new();
    let mut mix: Vec<MixAtom<'_>> = Vec::new();
    let mut transported_plus = vec![0.0; grid.n];
    let mut transported_minus = vec![0.0; grid.n];
    let mut drift = dot(&rho.drift, gamma_vec);
    let tol = Tolerance::relative(1e-10);
    for (i, atom) in rho.levy.atoms().iter().enumerate() {
        let a = dot(&atom.direction, a_vec);
        let g = dot(&atom.direction, gamma_vec);
        if a > 0.0 {
            let kern = move |s: f64| Kernel::Gaussian { var: s * a, mean: s * g };
            mix.push((atom.weight, atom.profile.clone(), Box::new(kern)));
            let m = |s: f64| truncated_gaussian_mean(s * a, s * g);
            drift += atom.weight * atom.profile.weighted_integral(&m, 0.0, f64::INFINITY, &decade_breaks(), tol)?.value;
        } else if g != 0.0 {
            let side = if g > 0.0 { &mut transported_plus } else { &mut transported_minus };
            for (j, v) in side.iter_mut().enumerate() {
                *v += atom.weight * atom.profile.value(grid.node(j) / g.abs());
            }
            let m = |s: f64| if s * g.abs() <= 1.0 { s * g } else { 0.0 };
            drift += atom.weight
                * atom.profile.weighted_integral(&m, 0.0, f64::INFINITY, &[1.0 / g.abs()], tol)?.value;
        } else {
            warnings.push(format!("atom {i}: a and γ both vanish along its direction, it contributes nothing"));
        }
    }
    let (mut plus, mut minus) = if mix.is_empty() {
        (vec![0.0; grid.n], vec![0.0; grid.n])
    } else {
        tabulate_sides(&mix, grid)?
    };
    plus.iter_mut().zip(&transported_plus).for_each(|(p, t)| *p += t);
    minus.iter_mut().zip(&transported_minus).for_each(|(p, t)| *p += t);
    let levy = two_sided_measure(grid, plus, minus)?;
    let gaussian = DMatrix::from_element(1, 1, dot(&rho.drift, a_vec));
    Ok(LevyTransform { triplet: LevyTriplet::new(gaussian, levy, vec![drift])?, warnings })
}

fn kernel_mix<'a>(subordinand: &ConeSemigroup, rho: &'a SubordinatorSpec) -> Result<Vec<MixAtom<'a>>> {
    if subordinand.state_dim() != 1 {
        return Err(Error::input("kernel-level subordination needs a one-dimensional subordinand"));
    }
    if subordinand.param_cone() != rho.cone() {
        return Err(Error::input("subordinator cone differs from the semigroup parameter cone"));
    }
    let mut mix: Vec<MixAtom<'_>> = Vec::new();
    for atom in rho.levy.atoms() {
        let base = subordinand.kernel(&atom.direction)?;
        if let Kernel::Gaussian { var, .. } = base {
            if var <= 0.0 {
                return Err(Error::input("degenerate Gaussian kernel along a subordinator direction"));
            }
        }
        let kern = move |s: f64| match base {
            Kernel::Gaussian { var, mean } => Kernel::Gaussian { var: s * var, mean: s * mean },
            Kernel::Cauchy { scale } => Kernel::Cauchy { scale: s * scale },
        };
        mix.push((atom.weight, atom.profile.clone(), Box::new(kern)));
    }
    Ok(mix)
}

/// `|x| Σ w ∫₀^∞ p_{sξ}(x) s⁻¹ k(s) ds`: the polar profile of the subordinated
/// Lévy measure on the side of `x`, evaluated off-grid.
pub fn mixed_profile_value(subordinand: &ConeSemigroup, rho: &SubordinatorSpec, x: f64) -> Result<f64> {
    let mix = kernel_mix(subordinand, rho)?;
    Ok(x.abs() * mixed_density(&mix, x)?)
}

/// Lévy triplet of a driftless subordination of a semigroup whose laws have a
/// closed-form density kernel (Gaussian or Cauchy).
pub fn subordinated_levy_kernel(
    subordinand: &ConeSemigroup,
    rho: &SubordinatorSpec,
    grid: &ProfileGrid,
) -> Result<LevyTransform> {
    grid.check()?;
    if rho.drift.iter().any(|x| *x != 0.0) {
        return Err(Error::input("kernel-level subordination needs a driftless subordinator"));
    }
    let mix = kernel_mix(subordinand, rho)?;
    let mut drift = 0.0;
    let tol = Tolerance::relative(1e-10);
    for (w, profile, kern) in &mix {
        if let Kernel::Gaussian { .. } = kern(1.0) {
            let m = |s: f64| match kern(s) {
                Kernel::Gaussian { var, mean } => truncated_gaussian_mean(var, mean),
                Kernel::Cauchy { .. } => 0.0,
            };
            drift += w * profile.weighted_integral(&m, 0.0, f64::INFINITY, &decade_breaks(), tol)?.value;
        }
    }
    let (plus, minus) = tabulate_sides(&mix, grid)?;
    let levy = two_sided_measure(grid, plus, minus)?;
    Ok(LevyTransform { triplet: LevyTriplet::new(DMatrix::zeros(1, 1), levy, vec![drift])?, warnings: Vec::new() })
}

/// Where a cofactor profile went negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeWitness {
    pub atom: usize,
    pub r: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cofactor<T> {
    Accepted(T),
    Rejected(NegativeWitness),
}

impl<T> Cofactor<T> {
    pub fn accepted(self) -> Option<T> {
        match self {
            Cofactor::Accepted(t) => Some(t),
            Cofactor::Rejected(_) => None,
        }
    }
}

fn check_span(b: f64) -> Result<()> {
    if !(b > 1.0 && b.is_finite()) {
        return Err(Error::input(format!("span {b} must exceed 1")));
    }
    Ok(())
}

/// `k(r) - k(br)`, exact for log-periodic profiles whose period divides the span.
pub fn cofactor_profile(profile: &RadialProfile, b: f64) -> RadialProfile {
    if let RadialProfile::LogPeriodic(lp) = profile {
        let m = b.ln() / lp.b.ln();
        if m.round() >= 1.0 && (m - m.round()).abs() < 1e-12 {
            let f = 1.0 - lp.b.powf(-lp.alpha).powi(m.round() as i32);
            return RadialProfile::LogPeriodic(LogPeriodic { h: lp.h.iter().map(|v| v * f).collect(), ..lp.clone() });
        }
    }
    RadialProfile::Difference { base: Box::new(profile.clone()), span: b }
}

/// Most negative `k(r) - k(br)` over the profile's check points, if below `-1e-10 (1 + k(r))`.
pub fn negative_cofactor_point(profile: &RadialProfile, b: f64) -> Option<(f64, f64)> {
    let mut worst: Option<(f64, f64)> = None;
    for r in profile.check_points(Some(b)) {
        let k = profile.value(r);
        let d = k - profile.value(b * r);
        if d < -1e-10 * (1.0 + k.abs()) && worst.map_or(true, |(_, v)| d < v) {
            worst = Some((r, d));
        }
    }
    worst
}

fn cofactor_atoms(atoms: &[LevyAtom], b: f64) -> Result<std::result::Result<Vec<LevyAtom>, NegativeWitness>> {
    let mut out = Vec::with_capacity(atoms.len());
    for (i, a) in atoms.iter().enumerate() {
        if let Some((r, value)) = negative_cofactor_point(&a.profile, b) {
            return Ok(Err(NegativeWitness { atom: i, r, value }));
        }
        out.push(LevyAtom { direction: a.direction.clone(), weight: a.weight, profile: cofactor_profile(&a.profile, b) });
    }
    Ok(Ok(out))
}

/// Triplet of `μ'` with `μ̂(z) = μ̂(b⁻¹z) μ̂'(z)`, or the point where `k(r) < k(br)`.
pub fn cofactor(law: &LevyTriplet, b: f64) -> Result<Cofactor<LevyTriplet>> {
    check_span(b)?;
    let nu = law.levy();
    let atoms = match cofactor_atoms(nu.atoms(), b)? {
        Ok(a) => a,
        Err(w) => return Ok(Cofactor::Rejected(w)),
    };
    let mut drift: Vec<f64> = law.drift().iter().map(|g| g * (1.0 - 1.0 / b)).collect();
    for a in nu.atoms() {
        let jump = a.weight * a.profile.weighted_integral(&|r| r, 1.0, b, &[], Tolerance::new(1e-12, 1e-14))?.value;
        for (d, xi) in drift.iter_mut().zip(&a.direction) {
            *d -= jump * xi / b;
        }
    }
    let gaussian = law.gaussian() * (1.0 - 1.0 / (b * b));
    let levy = PolarLevyMeasure::new(nu.dim(), atoms, nu.support().cloned(), nu.integrability())?;
    Ok(Cofactor::Accepted(LevyTriplet::new(gaussian, levy, drift)?))
}

/// `sup_z |σ̂(z) - σ̂(b^{-1/α} z) σ̂'(z)|` where `σ'` subordinates with the cofactor of `ρ` at span `b`.
pub fn factorization_check(
    subordinand: &ConeSemigroup,
    rho: &SubordinatorSpec,
    alpha: f64,
    b: f64,
    z_grid: &[Vec<f64>],
) -> Result<f64> {
    check_span(b)?;
    if !subordinand.is_strictly_semistable(alpha, b.powf(1.0 / alpha)) {
        return Err(Error::Precondition(format!(
            "subordinand is not strictly {alpha}-semistable with span {}",
            b.powf(1.0 / alpha)
        )));
    }
    let rho_prime = match rho.cofactor(b)? {
        Cofactor::Accepted(r) => r,
        Cofactor::Rejected(w) => {
            return Err(Error::Precondition(format!(
                "subordinator is not semi-selfdecomposable at span {b}: atom {} has k(r) - k(br) = {:e} at r = {}",
                w.atom, w.value, w.r
            )))
        }
    };
    let sigma = subordinate_cf(subordinand, rho)?;
    let sigma_prime = subordinate_cf(subordinand, &rho_prime)?;
    let shrink = b.powf(-1.0 / alpha);
    let mut worst: f64 = 0.0;
    for z in z_grid {
        let zs: Vec<f64> = z.iter().map(|x| x * shrink).collect();
        let lhs = sigma.cf(z)?;
        let rhs = sigma.cf(&zs)? * sigma_prime.cf(z)?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}
