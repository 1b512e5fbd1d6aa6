//! Parameter cones: nonnegative orthants, the cone of symmetric nonnegative
//! definite matrices (stored as a lower-triangle vector) and cones generated
//! by finitely many rays.
//!
//! Lower triangles are vectorized in row-major order:
//! `(s11, s21, s22, s31, s32, s33, ...)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PSD_TOL: f64 = 1e-10;
const RAY_RESIDUAL_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", try_from = "ConeDef", into = "ConeDef")]
pub enum Cone {
    Orthant { n: usize },
    PsdMatrices { d: usize },
    RayGenerated { generators: Vec<Vec<f64>> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ConeDef {
    Orthant { n: usize },
    Psd { d: usize },
    Rays { generators: Vec<Vec<f64>> },
}

impl TryFrom<ConeDef> for Cone {
    type Error = Error;
    fn try_from(def: ConeDef) -> Result<Cone> {
        match def {
            ConeDef::Orthant { n } => Cone::orthant(n),
            ConeDef::Psd { d } => Cone::psd(d),
            ConeDef::Rays { generators } => Cone::rays(generators),
        }
    }
}

impl From<Cone> for ConeDef {
    fn from(c: Cone) -> ConeDef {
        match c {
            Cone::Orthant { n } => ConeDef::Orthant { n },
            Cone::PsdMatrices { d } => ConeDef::Psd { d },
            Cone::RayGenerated { generators } => ConeDef::Rays { generators },
        }
    }
}

pub fn sym_dim(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Position of entry `(j, k)`, `k <= j`, in the row-major lower triangle.
pub fn tri_index(j: usize, k: usize) -> usize {
    debug_assert!(k <= j);
    j * (j + 1) / 2 + k
}

/// Matrix dimension `d` for a lower-triangle vector of length `n`.
pub fn matrix_dim(n: usize) -> Option<usize> {
    let mut d = 0;
    while sym_dim(d) < n {
        d += 1;
    }
    (sym_dim(d) == n).then_some(d)
}

pub fn euclidean_norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Cone {
    pub fn orthant(n: usize) -> Result<Cone> {
        if n == 0 {
            return Err(Error::input("orthant dimension must be positive"));
        }
        Ok(Cone::Orthant { n })
    }

    pub fn psd(d: usize) -> Result<Cone> {
        if d == 0 {
            return Err(Error::input("matrix dimension must be positive"));
        }
        Ok(Cone::PsdMatrices { d })
    }

    /// Cone spanned by `generators`; they are normalized to unit length and
    /// the result must be proper (no generator whose negative is also inside).
    pub fn rays(generators: Vec<Vec<f64>>) -> Result<Cone> {
        let n = generators.first().map(Vec::len).unwrap_or(0);
        if n == 0 {
            return Err(Error::input("ray cone needs at least one nonempty generator"));
        }
        let mut unit = Vec::with_capacity(generators.len());
        for g in generators {
            if g.len() != n {
                return Err(Error::input("ray generators differ in dimension"));
            }
            let norm = euclidean_norm(&g);
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::input("ray generators must be finite and nonzero"));
            }
            unit.push(g.iter().map(|x| x / norm).collect::<Vec<_>>());
        }
        let cone = Cone::RayGenerated { generators: unit };
        if let Cone::RayGenerated { generators } = &cone {
            for g in generators {
                let neg: Vec<f64> = g.iter().map(|x| -x).collect();
                if cone.contains_unchecked(&neg) {
                    return Err(Error::input("ray cone contains a line through the origin"));
                }
            }
        }
        Ok(cone)
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Cone::Orthant { n } => *n,
            Cone::PsdMatrices { d } => sym_dim(*d),
            Cone::RayGenerated { generators } => generators[0].len(),
        }
    }

    fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.ambient_dim() {
            return Err(Error::input(format!(
                "point of dimension {} for a cone in R^{}",
                p.len(),
                self.ambient_dim()
            )));
        }
        Ok(())
    }

    /// Membership in the closed cone.
    pub fn contains(&self, p: &[f64]) -> Result<bool> {
        self.check_dim(p)?;
        Ok(self.contains_unchecked(p))
    }

    fn contains_unchecked(&self, p: &[f64]) -> bool {
        if p.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self {
            Cone::Orthant { .. } => p.iter().all(|&x| x >= 0.0),
            Cone::PsdMatrices { d } => {
                let m = devectorize_unchecked(p, *d);
                let norm = m.norm();
                let min_eig = m.symmetric_eigenvalues().min();
                min_eig >= -PSD_TOL * (1.0 + norm)
            }
            Cone::RayGenerated { generators } => {
                let (_, residual) = nnls(generators, p);
                residual <= RAY_RESIDUAL_TOL * (1.0 + euclidean_norm(p))
            }
        }
    }
}

/// Splits a nonzero point into radius and unit direction.
pub fn polar_decompose(p: &[f64]) -> Result<(f64, Vec<f64>)> {
    let r = euclidean_norm(p);
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain("polar decomposition of the zero (or non-finite) vector"));
    }
    Ok((r, p.iter().map(|x| x / r).collect()))
}

/// Row-major lower triangle of a symmetric matrix.
pub fn vectorize_sym(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(Error::input("matrix is not square"));
    }
    let scale = 1.0 + m.amax();
    for j in 0..d {
        for k in 0..j {
            if (m[(j, k)] - m[(k, j)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::input(format!("matrix not symmetric at ({j}, {k})")));
            }
        }
    }
    let mut v = Vec::with_capacity(sym_dim(d));
    for j in 0..d {
        for k in 0..=j {
            v.push(m[(j, k)]);
        }
    }
    Ok(v)
}

pub fn devectorize_sym(v: &[f64]) -> Result<DMatrix<f64>> {
    let d = matrix_dim(v.len())
        .ok_or_else(|| Error::input(format!("length {} is not a triangular number", v.len())))?;
    Ok(devectorize_unchecked(v, d))
}

fn devectorize_unchecked(v: &[f64], d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..=j {
            let x = v[tri_index(j, k)];
            m[(j, k)] = x;
            m[(k, j)] = x;
        }
    }
    m
}

/// Coefficients `c(z)` with `<vectorize(s), c(z)> = z' s z`: diagonal
/// entries carry `z_j^2`, off-diagonal entries the doubled `2 z_j z_k`.
pub fn quadratic_form_coefficients(z: &[f64]) -> Vec<f64> {
    let d = z.len();
    let mut c = Vec::with_capacity(sym_dim(d));
    for j in 0..d {
        for k in 0..=j {
            c.push(if j == k { z[j] * z[j] } else { 2.0 * z[j] * z[k] });
        }
    }
    c
}

/// Nonnegative least squares `min |G x - p|, x >= 0` (Lawson–Hanson) with the
/// generators as columns of `G`. Returns the coefficients and the residual norm.
fn nnls(generators: &[Vec<f64>], p: &[f64]) -> (Vec<f64>, f64) {
    let n = p.len();
    let m = generators.len();
    let g = DMatrix::from_fn(n, m, |i, j| generators[j][i]);
    let b = DVector::from_column_slice(p);
    let mut x = DVector::zeros(m);
    let mut passive = vec![false; m];
    let tol = 1e-12 * (1.0 + b.norm());

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..m).filter(|&j| passive[j]).collect();
        let sub = DMatrix::from_fn(n, idx.len(), |i, k| g[(i, idx[k])]);
        let sol = sub
            .svd(true, true)
            .solve(&b, 1e-14)
            .unwrap_or_else(|_| DVector::zeros(idx.len()));
        let mut full = DVector::zeros(m);
        for (k, &j) in idx.iter().enumerate() {
            full[j] = sol[k];
        }
        full
    };

    for _outer in 0..3 * m + 3 {
        let w = g.transpose() * (&b - &g * &x);
        let candidate = (0..m)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&a, &c| w[a].total_cmp(&w[c]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        for _inner in 0..3 * m + 3 {
            let s = solve_passive(&passive);
            let infeasible: Vec<usize> = (0..m).filter(|&i| passive[i] && s[i] <= 0.0).collect();
            if infeasible.is_empty() {
                x = s;
                break;
            }
            let alpha = infeasible
                .iter()
                .map(|&i| x[i] / (x[i] - s[i]))
                .fold(f64::INFINITY, f64::min);
            x = &x + (&s - &x) * alpha;
            for i in 0..m {
                if passive[i] && x[i] <= 1e-15 {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    let residual = (&g * &x - &b).norm();
    (x.iter().copied().collect(), residual)
}

/// A deterministic set of unit directions inside a cone.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionGrid {
    pub cone: Cone,
    pub directions: Vec<Vec<f64>>,
}

/// Builds a deterministic grid of unit directions inside `cone`.
///
/// * orthant: normalized lattice points of the simplex `sum x_i = max(resolution - 1, 1)`;
/// * psd: normalized `vec(w w')` for `w` on coordinate planes at angles
///   `pi k / resolution`, plus the normalized identity;
/// * rays: the generators and normalized convex combinations of pairs.
pub fn direction_grid(cone: &Cone, resolution: usize) -> Result<DirectionGrid> {
    if resolution == 0 {
        return Err(Error::input("direction grid resolution must be at least 1"));
    }
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    match cone {
        Cone::Orthant { n } => {
            let total = resolution.saturating_sub(1).max(1);
            let mut point = vec![0usize; *n];
            simplex_points(&mut point, 0, total, &mut |pt| {
                dirs.push(pt.iter().map(|&x| x as f64).collect());
            });
        }
        Cone::PsdMatrices { d } => {
            let d = *d;
            if d == 1 {
                dirs.push(vec![1.0]);
            } else {
                for i in 0..d {
                    for j in (i + 1)..d {
                        for k in 0..resolution {
                            let theta = std::f64::consts::PI * k as f64 / resolution as f64;
                            let mut w = vec![0.0; d];
                            w[i] = theta.cos();
                            w[j] = theta.sin();
                            dirs.push(outer_vec(&w));
                        }
                    }
                }
                dirs.push(vectorize_sym(&DMatrix::identity(d, d))?);
            }
        }
        Cone::RayGenerated { generators } => {
            dirs.extend(generators.iter().cloned());
            for a in 0..generators.len() {
                for b in (a + 1)..generators.len() {
                    for k in 1..resolution {
                        let t = k as f64 / resolution as f64;
                        dirs.push(
                            generators[a]
                                .iter()
                                .zip(&generators[b])
                                .map(|(x, y)| (1.0 - t) * x + t * y)
                                .collect(),
                        );
                    }
                }
            }
        }
    }
    let mut unit: Vec<Vec<f64>> = Vec::new();
    for v in dirs {
        let Ok((_, xi)) = polar_decompose(&v) else { continue };
        let duplicate = unit
            .iter()
            .any(|u| u.iter().zip(&xi).all(|(a, b)| (a - b).abs() < 1e-12));
        if !duplicate {
            unit.push(xi);
        }
    }
    Ok(DirectionGrid {
        cone: cone.clone(),
        directions: unit,
    })
}

fn outer_vec(w: &[f64]) -> Vec<f64> {
    let d = w.len();
    let mut v = Vec::with_capacity(sym_dim(d));
    for j in 0..d {
        for k in 0..=j {
            v.push(w[j] * w[k]);
        }
    }
    v
}

fn simplex_points(point: &mut Vec<usize>, pos: usize, remaining: usize, emit: &mut impl FnMut(&[usize])) {
    if pos + 1 == point.len() {
        point[pos] = remaining;
        emit(point);
        return;
    }
    for v in (0..=remaining).rev() {
        point[pos] = v;
        simplex_points(point, pos + 1, remaining - v, emit);
    }
}
