use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::profile::{Integrability, RadialProfile};
use crate::cones::{dot, euclidean_norm, Cone};
use crate::error::{Error, Result};
use crate::numerics::QuadratureResult;

/// One atom `w δ_ξ` of the spherical part together with its radial profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyAtom {
    pub direction: Vec<f64>,
    pub weight: f64,
    pub profile: RadialProfile,
}

#[derive(Serialize, Deserialize)]
struct MeasureDef {
    dim: usize,
    #[serde(default)]
    atoms: Vec<LevyAtom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support: Option<Cone>,
    #[serde(default)]
    integrability: Integrability,
}

/// `ν(B) = Σ w ∫ 1_B(rξ) r⁻¹ k(r) dr` over finitely many atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDef", into = "MeasureDef")]
pub struct PolarLevyMeasure {
    dim: usize,
    atoms: Vec<LevyAtom>,
    support: Option<Cone>,
    order: Integrability,
}

impl TryFrom<MeasureDef> for PolarLevyMeasure {
    type Error = Error;
    fn try_from(d: MeasureDef) -> Result<Self> {
        PolarLevyMeasure::new(d.dim, d.atoms, d.support, d.integrability)
    }
}

impl From<PolarLevyMeasure> for MeasureDef {
    fn from(m: PolarLevyMeasure) -> Self {
        MeasureDef { dim: m.dim, atoms: m.atoms, support: m.support, integrability: m.order }
    }
}

/// Integrability integral of a single profile; fails with a validation error on divergence.
pub fn validate_profile(profile: &RadialProfile, order: Integrability) -> Result<QuadratureResult<f64>> {
    profile.integrability(order)
}

impl PolarLevyMeasure {
    pub fn new(dim: usize, atoms: Vec<LevyAtom>, support: Option<Cone>, order: Integrability) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("measure dimension must be at least 1"));
        }
        if let Some(c) = &support {
            if c.ambient_dim() != dim {
                return Err(Error::input(format!(
                    "support cone lives in dimension {}, measure in {dim}",
                    c.ambient_dim()
                )));
            }
        }
        let mut out = Vec::with_capacity(atoms.len());
        for (i, mut atom) in atoms.into_iter().enumerate() {
            if atom.direction.len() != dim {
                return Err(Error::input(format!("atom {i}: direction has wrong dimension")));
            }
            let n = euclidean_norm(&atom.direction);
            if !((n - 1.0).abs() <= 1e-9) {
                return Err(Error::input(format!("atom {i}: direction is not a unit vector (norm {n})")));
            }
            atom.direction.iter_mut().for_each(|x| *x /= n);
            if !(atom.weight.is_finite() && atom.weight > 0.0) {
                return Err(Error::input(format!("atom {i}: weight must be positive")));
            }
            if let Some(c) = &support {
                if !c.contains(&atom.direction)? {
                    return Err(Error::input(format!("atom {i}: direction lies outside the support cone")));
                }
            }
            validate_profile(&atom.profile, order)?;
            out.push(atom);
        }
        Ok(PolarLevyMeasure { dim, atoms: out, support, order })
    }

    pub fn empty(dim: usize) -> Self {
        PolarLevyMeasure { dim, atoms: Vec::new(), support: None, order: Integrability::General }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[LevyAtom] {
        &self.atoms
    }

    pub fn support(&self) -> Option<&Cone> {
        self.support.as_ref()
    }

    pub fn integrability(&self) -> Integrability {
        self.order
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `w ∫_{r1}^{r2} r⁻¹ k(r) dr` for one atom.
    pub fn levy_mass(&self, atom_index: usize, r1: f64, r2: f64) -> Result<f64> {
        let atom = self
            .atoms
            .get(atom_index)
            .ok_or_else(|| Error::input(format!("no atom with index {atom_index}")))?;
        Ok(atom.weight * atom.profile.mass(r1, r2)?)
    }

    /// `Σ w ∫ (r^p ∧ 1) r⁻¹ k(r) dr`.
    pub fn small_jump_integral(&self) -> Result<f64> {
        let mut total = 0.0;
        for a in &self.atoms {
            total += a.weight * a.profile.integrability(self.order)?.value;
        }
        Ok(total)
    }

    /// Image measure `B ↦ ν(c⁻¹B)`.
    pub fn scale(&self, c: f64) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                Ok(LevyAtom { direction: a.direction.clone(), weight: a.weight, profile: a.profile.scaled(c)? })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PolarLevyMeasure { atoms, ..self.clone() })
    }

    /// `Σ w ∫ (e^{i r⟨z,ξ⟩} - 1 - i r⟨z,ξ⟩ 1{r<=1}) r⁻¹ k(r) dr`.
    pub fn fourier_term(&self, z: &[f64]) -> Result<Complex64> {
        self.check_dim(z.len())?;
        let mut total = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            total += a.profile.fourier_exponent(dot(z, &a.direction))? * a.weight;
        }
        Ok(total)
    }

    /// `Σ w ∫ (e^{r⟨w,ξ⟩} - 1) r⁻¹ k(r) dr` for complex `w` with `Re⟨w,ξ⟩ <= 0`.
    pub fn laplace_term(&self, w: &[Complex64]) -> Result<Complex64> {
        self.check_dim(w.len())?;
        let mut total = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            let pair: Complex64 = w.iter().zip(&a.direction).map(|(x, y)| x * y).sum();
            total += a.profile.laplace_exponent(pair)? * a.weight;
        }
        Ok(total)
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return Err(Error::input(format!("argument has dimension {n}, measure has {}", self.dim)));
        }
        Ok(())
    }
}

/// Image of `ν` under `x ↦ c x`.
pub fn scale_levy(nu: &PolarLevyMeasure, c: f64) -> Result<PolarLevyMeasure> {
    nu.scale(c)
}

pub fn levy_mass(nu: &PolarLevyMeasure, atom_index: usize, r1: f64, r2: f64) -> Result<f64> {
    nu.levy_mass(atom_index, r1, r2)
}

#[derive(Serialize, Deserialize)]
struct TripletDef {
    gaussian: Vec<Vec<f64>>,
    levy: PolarLevyMeasure,
    drift: Vec<f64>,
}

/// Lévy–Khintchine triplet `(A, ν, γ)` with truncation `1{|x| <= 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TripletDef", into = "TripletDef")]
pub struct LevyTriplet {
    gaussian: DMatrix<f64>,
    levy: PolarLevyMeasure,
    drift: Vec<f64>,
}

impl TryFrom<TripletDef> for LevyTriplet {
    type Error = Error;
    fn try_from(t: TripletDef) -> Result<Self> {
        let d = t.gaussian.len();
        if t.gaussian.iter().any(|row| row.len() != d) {
            return Err(Error::input("gaussian part must be a square matrix"));
        }
        let a = DMatrix::from_fn(d, d, |i, j| t.gaussian[i][j]);
        LevyTriplet::new(a, t.levy, t.drift)
    }
}

impl From<LevyTriplet> for TripletDef {
    fn from(t: LevyTriplet) -> Self {
        let d = t.gaussian.nrows();
        TripletDef {
            gaussian: (0..d).map(|i| (0..d).map(|j| t.gaussian[(i, j)]).collect()).collect(),
            levy: t.levy,
            drift: t.drift,
        }
    }
}

impl LevyTriplet {
    pub fn new(gaussian: DMatrix<f64>, levy: PolarLevyMeasure, drift: Vec<f64>) -> Result<Self> {
        let d = drift.len();
        if gaussian.nrows() != d || gaussian.ncols() != d || levy.dim() != d {
            return Err(Error::input("triplet components have inconsistent dimensions"));
        }
        if gaussian.iter().chain(drift.iter()).any(|x| !x.is_finite()) {
            return Err(Error::input("triplet entries must be finite"));
        }
        let scale = 1.0 + gaussian.amax();
        if (&gaussian - gaussian.transpose()).amax() > 1e-12 * scale {
            return Err(Error::input("gaussian part is not symmetric"));
        }
        let sym = (&gaussian + gaussian.transpose()) * 0.5;
        if d > 0 && sym.clone().symmetric_eigenvalues().min() < -1e-12 * scale {
            return Err(Error::input("gaussian part is not positive semidefinite"));
        }
        Ok(LevyTriplet { gaussian: sym, levy, drift })
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    pub fn gaussian(&self) -> &DMatrix<f64> {
        &self.gaussian
    }

    pub fn levy(&self) -> &PolarLevyMeasure {
        &self.levy
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    /// `log μ̂(z) = -½ z'Az + i γ·z + Σ w ∫ (e^{irz·ξ} - 1 - irz·ξ 1{r<=1}) r⁻¹ k dr`.
    pub fn cumulant(&self, z: &[f64]) -> Result<Complex64> {
        if z.len() != self.dim() {
            return Err(Error::input(format!("z has dimension {}, triplet has {}", z.len(), self.dim())));
        }
        let zv = nalgebra::DVector::from_column_slice(z);
        let quad = zv.dot(&(&self.gaussian * &zv));
        Ok(Complex64::new(-0.5 * quad, dot(&self.drift, z)) + self.levy.fourier_term(z)?)
    }
}

pub fn cumulant(triplet: &LevyTriplet, z: &[f64]) -> Result<Complex64> {
    triplet.cumulant(z)
}
