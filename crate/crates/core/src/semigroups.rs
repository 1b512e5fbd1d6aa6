//! Cone-parameter convolution semigroups, stored as linear cumulant maps:
//! `log μ̂_u(z) = ⟨u, η(z)⟩`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cones::{direction_grid, dot, quadratic_form_coefficients, Cone};
use crate::error::{Error, Result};
use crate::levy::{LogPeriodic, RadialProfile};
use crate::numerics::gaussian_density;

type C64 = Complex64;

fn one() -> f64 {
    1.0
}

/// Constructor parameters, as they appear in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SemigroupSpec {
    Gaussian1d {
        cone: Cone,
        a_vec: Vec<f64>,
        gamma_vec: Vec<f64>,
    },
    CanonicalPsd {
        d: usize,
    },
    /// Symmetric strictly α-stable on `Orthant{N}`, `η_j(z) = -c_j |z|^α`.
    Stable {
        alpha: f64,
        scales: Vec<f64>,
    },
    /// Symmetric log-periodic Lévy measure on `Orthant{1}`.
    Semistable {
        alpha: f64,
        b: f64,
        h: Vec<f64>,
        #[serde(default = "one")]
        weight: f64,
        #[serde(default)]
        shift: f64,
    },
}

/// Closed-form density family of `μ_u`, used by kernel-level subordination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Gaussian { var: f64, mean: f64 },
    Cauchy { scale: f64 },
}

impl Kernel {
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Kernel::Gaussian { var, mean } => gaussian_density(var, mean, x),
            Kernel::Cauchy { scale } => {
                if scale == 0.0 {
                    0.0
                } else {
                    scale / (PI * (scale * scale + x * x))
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConeSemigroup {
    spec: SemigroupSpec,
    cone: Cone,
    state_dim: usize,
    semistable: Option<RadialProfile>,
    cache: Arc<Mutex<HashMap<Vec<u64>, Vec<C64>>>>,
}

impl PartialEq for ConeSemigroup {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Serialize for ConeSemigroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConeSemigroup {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = SemigroupSpec::deserialize(d)?;
        ConeSemigroup::new(spec).map_err(serde::de::Error::custom)
    }
}

/// Resolution of the direction grid used for construction-time checks.
const CHECK_RESOLUTION: usize = 16;

impl ConeSemigroup {
    pub fn new(spec: SemigroupSpec) -> Result<Self> {
        let (cone, state_dim, semistable) = match &spec {
            SemigroupSpec::Gaussian1d { cone, a_vec, gamma_vec } => {
                let n = cone.ambient_dim();
                if a_vec.len() != n || gamma_vec.len() != n {
                    return Err(Error::input("a_vec and gamma_vec must match the cone dimension"));
                }
                if a_vec.iter().chain(gamma_vec).any(|x| !x.is_finite()) {
                    return Err(Error::input("a_vec and gamma_vec must be finite"));
                }
                let grid = direction_grid(cone, CHECK_RESOLUTION)?;
                for u in &grid.directions {
                    let var = dot(u, a_vec);
                    if var < -1e-12 {
                        return Err(Error::input(format!("negative variance {var} in direction {u:?}")));
                    }
                }
                (cone.clone(), 1, None)
            }
            SemigroupSpec::CanonicalPsd { d } => (Cone::psd(*d)?, *d, None),
            SemigroupSpec::Stable { alpha, scales } => {
                if !(*alpha > 0.0 && *alpha <= 2.0) {
                    return Err(Error::input(format!("stable index {alpha} outside (0, 2]")));
                }
                if scales.is_empty() || scales.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                    return Err(Error::input("stable scales must be positive"));
                }
                (Cone::orthant(scales.len())?, 1, None)
            }
            SemigroupSpec::Semistable { alpha, b, h, weight, shift } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(Error::input(format!("semistable index {alpha} outside (0, 2)")));
                }
                if !(weight.is_finite() && *weight > 0.0) {
                    return Err(Error::input("semistable weight must be positive"));
                }
                if *shift != 0.0 && *alpha != 1.0 {
                    return Err(Error::input(
                        "a nonzero shift breaks strict semistability unless alpha = 1",
                    ));
                }
                let lp = LogPeriodic::new(*alpha, *b, h.clone())?;
                (Cone::orthant(1)?, 1, Some(RadialProfile::LogPeriodic(lp)))
            }
        };
        Ok(ConeSemigroup { spec, cone, state_dim, semistable, cache: Arc::new(Mutex::new(HashMap::new())) })
    }

    pub fn gaussian1d(cone: Cone, a_vec: Vec<f64>, gamma_vec: Vec<f64>) -> Result<Self> {
        Self::new(SemigroupSpec::Gaussian1d { cone, a_vec, gamma_vec })
    }

    pub fn canonical_psd(d: usize) -> Result<Self> {
        Self::new(SemigroupSpec::CanonicalPsd { d })
    }

    pub fn stable(alpha: f64, scales: Vec<f64>) -> Result<Self> {
        Self::new(SemigroupSpec::Stable { alpha, scales })
    }

    pub fn semistable(alpha: f64, b: f64, h: Vec<f64>) -> Result<Self> {
        Self::new(SemigroupSpec::Semistable { alpha, b, h, weight: 1.0, shift: 0.0 })
    }

    pub fn spec(&self) -> &SemigroupSpec {
        &self.spec
    }

    pub fn param_cone(&self) -> &Cone {
        &self.cone
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn family(&self) -> &'static str {
        match self.spec {
            SemigroupSpec::Gaussian1d { .. } => "gaussian1d",
            SemigroupSpec::CanonicalPsd { .. } => "canonical_psd",
            SemigroupSpec::Stable { .. } => "stable",
            SemigroupSpec::Semistable { .. } => "semistable",
        }
    }

    /// `η(z) ∈ C^N`.
    pub fn eta(&self, z: &[f64]) -> Result<Vec<C64>> {
        if z.len() != self.state_dim {
            return Err(Error::input(format!("z has dimension {}, expected {}", z.len(), self.state_dim)));
        }
        match &self.spec {
            SemigroupSpec::Gaussian1d { a_vec, gamma_vec, .. } => {
                let z = z[0];
                Ok(a_vec.iter().zip(gamma_vec).map(|(a, g)| C64::new(-0.5 * a * z * z, g * z)).collect())
            }
            SemigroupSpec::CanonicalPsd { .. } => {
                Ok(quadratic_form_coefficients(z).into_iter().map(|c| C64::new(-0.5 * c, 0.0)).collect())
            }
            SemigroupSpec::Stable { alpha, scales } => {
                let p = z[0].abs().powf(*alpha);
                Ok(scales.iter().map(|c| C64::new(-c * p, 0.0)).collect())
            }
            SemigroupSpec::Semistable { weight, shift, .. } => {
                let key = vec![z[0].to_bits()];
                if let Some(v) = self.cache.lock().expect("eta cache poisoned").get(&key) {
                    return Ok(v.clone());
                }
                let profile = self.semistable.as_ref().expect("semistable profile");
                // atoms at ±1: the imaginary parts cancel
                let f = profile.fourier_exponent(z[0])?;
                let v = vec![C64::new(2.0 * weight * f.re, shift * z[0])];
                self.cache.lock().expect("eta cache poisoned").insert(key, v.clone());
                Ok(v)
            }
        }
    }

    /// `⟨u, η(z)⟩ = log μ̂_u(z)`.
    pub fn log_mu_hat(&self, u: &[f64], z: &[f64]) -> Result<C64> {
        if u.len() != self.cone.ambient_dim() {
            return Err(Error::input("cone point has wrong dimension"));
        }
        if !self.cone.contains(u)? {
            return Err(Error::input(format!("{u:?} is not in the parameter cone")));
        }
        let eta = self.eta(z)?;
        Ok(u.iter().zip(&eta).map(|(a, e)| e * *a).sum())
    }

    pub fn eval_mu_hat(&self, u: &[f64], z: &[f64]) -> Result<C64> {
        Ok(self.log_mu_hat(u, z)?.exp())
    }

    /// Largest `Re⟨u, η(z)⟩` over unit directions of the cone and the given `z`s.
    pub fn validity_margin(&self, resolution: usize, z_grid: &[Vec<f64>]) -> Result<f64> {
        let grid = direction_grid(&self.cone, resolution)?;
        let mut worst = f64::NEG_INFINITY;
        for z in z_grid {
            let eta = self.eta(z)?;
            for u in &grid.directions {
                let re: f64 = u.iter().zip(&eta).map(|(a, e)| a * e.re).sum();
                worst = worst.max(re);
            }
        }
        Ok(worst)
    }

    /// Density family of `μ_u` when it has a closed form.
    pub fn kernel(&self, u: &[f64]) -> Result<Kernel> {
        match &self.spec {
            SemigroupSpec::Gaussian1d { a_vec, gamma_vec, .. } => {
                Ok(Kernel::Gaussian { var: dot(u, a_vec).max(0.0), mean: dot(u, gamma_vec) })
            }
            SemigroupSpec::Stable { alpha, scales } if *alpha == 1.0 => {
                Ok(Kernel::Cauchy { scale: dot(u, scales) })
            }
            SemigroupSpec::Stable { alpha, scales } if *alpha == 2.0 => {
                Ok(Kernel::Gaussian { var: 2.0 * dot(u, scales), mean: 0.0 })
            }
            _ => Err(Error::input(format!("the {} family has no closed-form density kernel", self.family()))),
        }
    }

    /// Whether each `μ_u` is strictly `alpha`-semistable with span `span`.
    pub fn is_strictly_semistable(&self, alpha: f64, span: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
        match &self.spec {
            SemigroupSpec::Gaussian1d { gamma_vec, .. } => close(alpha, 2.0) && gamma_vec.iter().all(|g| *g == 0.0),
            SemigroupSpec::CanonicalPsd { .. } => close(alpha, 2.0),
            SemigroupSpec::Stable { alpha: a, .. } => close(alpha, *a),
            SemigroupSpec::Semistable { alpha: a, b, .. } => {
                if !close(alpha, *a) {
                    return false;
                }
                let m = span.ln() / b.ln();
                m.round() >= 1.0 && (m - m.round()).abs() < 1e-9
            }
        }
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.lock().expect("eta cache poisoned").len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn brownian_semigroup() {
        let sg = ConeSemigroup::gaussian1d(Cone::orthant(1).unwrap(), vec![1.0], vec![0.0]).unwrap();
        assert_relative_eq!(sg.eval_mu_hat(&[2.0], &[1.0]).unwrap().re, (-1.0f64).exp(), max_relative = 1e-15);
        assert_eq!(sg.eval_mu_hat(&[0.0], &[3.0]).unwrap(), C64::new(1.0, 0.0));
        assert!(sg.eval_mu_hat(&[-1.0], &[1.0]).is_err());
    }

    #[test]
    fn gaussian1d_linearity_and_homogeneity() {
        let sg = ConeSemigroup::gaussian1d(Cone::orthant(2).unwrap(), vec![1.0, 2.0], vec![1.0, -1.0]).unwrap();
        let Kernel::Gaussian { var, mean } = sg.kernel(&[1.0, 1.0]).unwrap() else { panic!() };
        assert_eq!((var, mean), (3.0, 0.0));
        let Kernel::Gaussian { var, .. } = sg.kernel(&[5.0, 0.0]).unwrap() else { panic!() };
        assert_eq!(var, 5.0);
        assert!(ConeSemigroup::gaussian1d(Cone::orthant(2).unwrap(), vec![1.0, -0.5], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn canonical_psd() {
        let sg = ConeSemigroup::canonical_psd(2).unwrap();
        let id = [1.0, 0.0, 1.0];
        assert_relative_eq!(sg.log_mu_hat(&id, &[1.0, 1.0]).unwrap().re, -1.0, max_relative = 1e-15);
        assert_eq!(sg.log_mu_hat(&[0.0, 0.0, 0.0], &[1.0, 1.0]).unwrap(), C64::new(0.0, 0.0));
        let s = [2.0, 0.5, 1.0];
        let z = [0.3, -1.2];
        let direct = -0.5 * (2.0 * 0.09 + 2.0 * 0.5 * 0.3 * -1.2 + 1.44);
        assert_relative_eq!(sg.log_mu_hat(&s, &z).unwrap().re, direct, max_relative = 1e-14);
        let one = ConeSemigroup::canonical_psd(1).unwrap();
        let g = ConeSemigroup::gaussian1d(Cone::orthant(1).unwrap(), vec![1.0], vec![0.0]).unwrap();
        assert_eq!(one.eta(&[1.7]).unwrap(), g.eta(&[1.7]).unwrap());
    }

    #[test]
    fn stable_examples() {
        let bm = ConeSemigroup::stable(2.0, vec![0.5]).unwrap();
        assert_relative_eq!(bm.log_mu_hat(&[1.0], &[2.0]).unwrap().re, -2.0);
        let cauchy = ConeSemigroup::stable(1.0, vec![1.0]).unwrap();
        assert_relative_eq!(cauchy.eval_mu_hat(&[2.0], &[-1.5]).unwrap().re, (-3.0f64).exp(), max_relative = 1e-15);
        let s = ConeSemigroup::stable(0.7, vec![1.3]).unwrap();
        let lhs = s.log_mu_hat(&[1.0], &[0.4]).unwrap() * 3f64.powf(0.7);
        let rhs = s.log_mu_hat(&[1.0], &[1.2]).unwrap();
        assert_relative_eq!(lhs.re, rhs.re, max_relative = 1e-14);
        assert!(ConeSemigroup::stable(2.5, vec![1.0]).is_err());
    }

    #[test]
    fn semistable_constant_h_is_span_exact_and_cached() {
        let sg = ConeSemigroup::semistable(1.5, 2.0, vec![1.0, 0.6, 0.9]).unwrap();
        let b_alpha = 2f64.powf(1.5);
        let mut worst: f64 = 0.0;
        for j in 0..25 {
            let z = 0.1 * 100f64.powf(j as f64 / 24.0);
            let a = sg.eval_mu_hat(&[1.0], &[z]).unwrap().powf(b_alpha);
            let b = sg.eval_mu_hat(&[1.0], &[2.0 * z]).unwrap();
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-8, "span residual {worst}");
        assert!(sg.cached_entries() > 0);
        assert!(sg.is_strictly_semistable(1.5, 4.0));
        assert!(!sg.is_strictly_semistable(1.5, 3.0));
    }

    #[test]
    fn semistable_rejects_shift() {
        let spec = SemigroupSpec::Semistable { alpha: 0.5, b: 2.0, h: vec![1.0], weight: 1.0, shift: 0.3 };
        assert!(ConeSemigroup::new(spec).is_err());
        let spec = SemigroupSpec::Semistable { alpha: 1.0, b: 2.0, h: vec![1.0], weight: 1.0, shift: 0.3 };
        assert!(ConeSemigroup::new(spec).is_ok());
    }

    #[test]
    fn validity_on_grids() {
        let zs: Vec<Vec<f64>> = (0..10).map(|j| vec![0.3 * j as f64 - 1.0]).collect();
        let sg = ConeSemigroup::gaussian1d(Cone::orthant(2).unwrap(), vec![1.0, 2.0], vec![1.0, -1.0]).unwrap();
        assert!(sg.validity_margin(8, &zs).unwrap() <= 1e-9);
        let psd = ConeSemigroup::canonical_psd(2).unwrap();
        let zs2: Vec<Vec<f64>> = (0..10).map(|j| vec![0.3 * j as f64 - 1.0, 0.5]).collect();
        assert!(psd.validity_margin(8, &zs2).unwrap() <= 1e-9);
    }

    #[test]
    fn serde_round_trip() {
        let sg = ConeSemigroup::gaussian1d(Cone::orthant(2).unwrap(), vec![1.0, 2.0], vec![1.0, -1.0]).unwrap();
        let json = serde_json::to_string(&sg).unwrap();
        assert!(json.contains("\"family\":\"gaussian1d\""));
        let back: ConeSemigroup = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sg);
    }

    proptest! {
        #[test]
        fn ray_power_and_additivity(t in 0.0f64..5.0, u1 in 0.0f64..3.0, u2 in 0.0f64..3.0, z in -4.0f64..4.0) {
            let sg = ConeSemigroup::gaussian1d(Cone::orthant(2).unwrap(), vec![1.0, 2.0], vec![1.0, -1.0]).unwrap();
            let u = [u1, u2];
            let tu = [t * u1, t * u2];
            let a = sg.eval_mu_hat(&tu, &[z]).unwrap();
            // t-th power along the continuous branch of the cumulant
            let b = (sg.log_mu_hat(&u, &[z]).unwrap() * t).exp();
            prop_assert!((a - b).norm() < 1e-12);
            let v = [u2, u1];
            let sum = [u1 + u2, u1 + u2];
            let lhs = sg.eval_mu_hat(&sum, &[z]).unwrap();
            let rhs = sg.eval_mu_hat(&u, &[z]).unwrap() * sg.eval_mu_hat(&v, &[z]).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
            let small = sg.log_mu_hat(&[1e-12 * u1, 1e-12 * u2], &[z]).unwrap();
            prop_assert!(small.norm() < 1e-10);
        }
    }
}
