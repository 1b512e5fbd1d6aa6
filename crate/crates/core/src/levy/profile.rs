use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    cexpm1, clog1p, ein, expint_general, gamma, integrate, integrate_with_breaks,
    linear_piece_exp_integral, QuadValue, QuadratureResult, Tolerance,
};

type C64 = Complex64;

const CZERO: C64 = C64::new(0.0, 0.0);
const MAX_PERIODS: i32 = 20_000;

/// Which small-jump moment a profile has to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrability {
    /// `∫ (r ∧ 1) r⁻¹ k(r) dr < ∞`, the subordinator condition.
    Subordinator,
    /// `∫ (r² ∧ 1) r⁻¹ k(r) dr < ∞`, the general Lévy condition.
    #[default]
    General,
}

impl Integrability {
    fn power(self) -> i32 {
        match self {
            Integrability::Subordinator => 1,
            Integrability::General => 2,
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Log-periodic profile `k(r) = b^{-αn} h(x)` where `r / scale = bⁿ x`, `x ∈ [1, b)`.
///
/// `h` holds node values on a uniform grid over `[1, b]` (linear interpolation
/// in between); a single value means `h` is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPeriodic {
    pub alpha: f64,
    pub b: f64,
    pub h: Vec<f64>,
    #[serde(default = "one")]
    pub scale: f64,
}

/// How a [`GeometricTable`] fills in values between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TableInterpolation {
    /// Linear in `r`.
    #[default]
    Linear,
    /// Cubic through four neighbouring nodes in `(ln r, ln k)`; pieces whose
    /// stencil touches a zero value fall back to linear.
    LogCubic,
}

/// Table of values at `r_j = r0 q^j` with power laws `(r/r0)^{-head_exponent}`
/// below the first node and `(r/r_last)^{-tail_exponent}` beyond the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricTable {
    pub r0: f64,
    pub q: f64,
    pub values: Vec<f64>,
    pub tail_exponent: f64,
    #[serde(default)]
    pub head_exponent: f64,
    #[serde(default)]
    pub interpolation: TableInterpolation,
}

/// Radial part `k(r)` of a polar Lévy measure `w r⁻¹ k(r) dr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RadialProfile {
    /// `c e^{-qr}`
    Exponential { c: f64, q: f64 },
    /// `c r^{-θ} e^{-qr}`
    PowerExp { c: f64, theta: f64, q: f64 },
    LogPeriodic(LogPeriodic),
    TabulatedGeometric(GeometricTable),
    /// `c 1{r <= cutoff}`
    Indicator { c: f64, cutoff: f64 },
    /// `c (1 + r/s)^{-p}`
    InversePower { c: f64, s: f64, p: f64 },
    /// `base(r) - base(span r)`; may be negative, callers check the sign.
    Difference { base: Box<RadialProfile>, span: f64 },
}

fn finite_pos(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl LogPeriodic {
    pub fn new(alpha: f64, b: f64, h: Vec<f64>) -> Result<Self> {
        let lp = LogPeriodic { alpha, b, h, scale: 1.0 };
        lp.check()?;
        Ok(lp)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::input(format!("log-periodic alpha {} outside (0, 2]", self.alpha)));
        }
        if !(self.b > 1.0 && self.b.is_finite()) {
            return Err(Error::input(format!("log-periodic span {} must exceed 1", self.b)));
        }
        if !finite_pos(self.scale) {
            return Err(Error::input("log-periodic scale must be positive"));
        }
        if self.h.is_empty() || self.h.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::input("log-periodic h must be a non-empty list of nonnegative reals"));
        }
        Ok(())
    }

    /// Period index `n` and position `x ∈ [1, b)` with `r = scale bⁿ x`.
    pub fn locate(&self, r: f64) -> (i32, f64) {
        let y = r / self.scale;
        let mut n = (y.ln() / self.b.ln()).floor() as i32;
        let mut x = y / self.b.powi(n);
        if x < 1.0 {
            n -= 1;
            x = y / self.b.powi(n);
        } else if x >= self.b {
            n += 1;
            x = y / self.b.powi(n);
        }
        (n, x)
    }

    fn node(&self, j: usize) -> f64 {
        let m = self.h.len() - 1;
        if j == m {
            self.b
        } else {
            1.0 + j as f64 * (self.b - 1.0) / m as f64
        }
    }

    /// Interpolated `h(x)` for `x ∈ [1, b]`.
    pub fn h_at(&self, x: f64) -> f64 {
        let m = self.h.len() - 1;
        if m == 0 {
            return self.h[0];
        }
        let t = (x - 1.0) / (self.b - 1.0) * m as f64;
        let j = (t.floor().max(0.0) as usize).min(m - 1);
        let frac = t - j as f64;
        self.h[j] + frac * (self.h[j + 1] - self.h[j])
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= 0.0 || !r.is_finite() {
            return 0.0;
        }
        let (n, x) = self.locate(r);
        self.b.powf(-self.alpha).powi(n) * self.h_at(x)
    }

    /// Linear pieces `(x1, x2, p, q)` of `h(x) = p + q x`.
    pub fn pieces(&self) -> Vec<(f64, f64, f64, f64)> {
        let m = self.h.len() - 1;
        if m == 0 {
            return vec![(1.0, self.b, self.h[0], 0.0)];
        }
        (0..m)
            .map(|j| {
                let (x1, x2) = (self.node(j), self.node(j + 1));
                let q = (self.h[j + 1] - self.h[j]) / (x2 - x1);
                (x1, x2, self.h[j] - q * x1, q)
            })
            .collect()
    }

    /// `∫₁^b x^{k-1} h(x) dx`.
    fn moment(&self, k: i32) -> f64 {
        let kf = k as f64;
        self.pieces()
            .iter()
            .map(|&(x1, x2, p, q)| {
                p * (x2.powi(k) - x1.powi(k)) / kf + q * (x2.powi(k + 1) - x1.powi(k + 1)) / (kf + 1.0)
            })
            .sum()
    }

    /// `∫₁^b h(x)/x dx` and the variation bound of `h(x)/x` used in tail estimates.
    fn log_mass_and_variation(&self) -> (f64, f64) {
        let mut mass = 0.0;
        let mut tv = 0.0;
        for (x1, x2, p, q) in self.pieces() {
            mass += p * (x2 / x1).ln() + q * (x2 - x1);
            tv += (p / x2 + q - (p / x1 + q)).abs();
        }
        let first = self.h[0];
        let last = *self.h.last().unwrap() / self.b;
        (mass, first.abs() + last.abs() + tv)
    }

    /// `∫₀^∞ (e^{rw} - 1 - rw 1{r<=1}·[compensate]) r⁻¹ k(r) dr` for `Re w <= 0`.
    pub fn exp_integral(&self, w: C64, compensate: bool) -> Result<C64> {
        if w.norm() == 0.0 {
            return Ok(CZERO);
        }
        if w.re > 0.0 {
            return Err(Error::domain("exponent with positive real part"));
        }
        let order = if compensate { 2.0 } else { 1.0 };
        if self.alpha >= order {
            return Err(Error::domain(format!(
                "log-periodic profile with alpha {} has no {} exponent",
                self.alpha,
                if compensate { "compensated" } else { "Laplace" }
            )));
        }
        let b = self.b;
        let s = self.scale;
        let lb = b.ln();
        let beta = b.powf(-self.alpha);
        let aw = w.norm() * s;
        // Period containing r = 1.
        let n_one = self.locate(1.0).0;
        let mut n_low = ((0.5 / (b * aw)).ln() / lb).floor() as i32;
        while aw * b.powi(n_low + 1) >= 0.5 {
            n_low -= 1;
        }
        if compensate {
            n_low = n_low.min(n_one - 1);
        }

        // Periods n <= n_low by the power series in c_n = s bⁿ w.
        let c_low = w * (s * b.powi(n_low));
        let scale_low = beta.powi(n_low);
        let k0 = if compensate { 2 } else { 1 };
        let mut low = CZERO;
        let mut ck = c_low.powi(k0 - 1);
        let mut fact: f64 = (1..k0).map(|v| v as f64).product();
        for k in k0..200 {
            ck *= c_low;
            fact *= k as f64;
            let geo = 1.0 / (1.0 - b.powf(-(k as f64 - self.alpha)));
            let term = ck * (self.moment(k) / fact * geo);
            low += term;
            if term.norm() <= 1e-18 * low.norm() || term.norm() == 0.0 {
                break;
            }
        }
        low *= scale_low;

        let pieces = self.pieces();
        let (hmass, variation) = self.log_mass_and_variation();
        let mut sum = low;
        let mut n = n_low + 1;
        let mut weight = beta.powi(n);
        let mut count = 0;
        loop {
            let scale_n = s * b.powi(n);
            let c = w * scale_n;
            let comp_upper = if compensate { 1.0 / scale_n } else { 0.0 };
            let mut term = CZERO;
            for &(x1, x2, p, q) in &pieces {
                term += linear_piece_exp_integral(c, x1, x2, p, q, comp_upper);
            }
            sum += term * weight;
            n += 1;
            weight *= beta;
            count += 1;
            // Past r = 1 each further period contributes b^{-αn}(∫e^{cx}h/x - H);
            // the -H parts sum exactly, the oscillatory parts are bounded.
            if !compensate || n > n_one {
                let c_next = w.norm() * s * b.powi(n);
                let bound = weight * hmass.min(variation / c_next) / (1.0 - beta);
                if bound <= 1e-16 * sum.norm().max(1e-3) {
                    sum -= hmass * weight / (1.0 - beta);
                    return Ok(sum);
                }
            }
            if count > MAX_PERIODS {
                return Err(Error::Numerical {
                    message: "log-periodic period sum did not converge".into(),
                    best: sum,
                    abs_error: f64::NAN,
                });
            }
        }
    }

    fn scaled(&self, c: f64) -> LogPeriodic {
        LogPeriodic { scale: self.scale * c, ..self.clone() }
    }
}

impl GeometricTable {
    pub fn check(&self) -> Result<()> {
        if !finite_pos(self.r0) || !(self.q > 1.0 && self.q.is_finite()) {
            return Err(Error::input("tabulated profile needs r0 > 0 and q > 1"));
        }
        if self.values.is_empty() || self.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::input("tabulated profile values must be nonnegative reals"));
        }
        if !(self.tail_exponent.is_finite() && self.tail_exponent >= 0.0)
            || !(self.head_exponent.is_finite() && self.head_exponent >= 0.0)
        {
            return Err(Error::input("tabulated profile exponents must be nonnegative"));
        }
        Ok(())
    }

    pub fn node(&self, j: usize) -> f64 {
        self.r0 * self.q.powi(j as i32)
    }

    pub fn last_node(&self) -> f64 {
        self.node(self.values.len() - 1)
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= 0.0 || !r.is_finite() {
            return 0.0;
        }
        let n = self.values.len();
        if r <= self.r0 {
            return self.values[0] * (r / self.r0).powf(-self.head_exponent);
        }
        let rl = self.last_node();
        if r >= rl {
            return self.values[n - 1] * (r / rl).powf(-self.tail_exponent);
        }
        let mut j = ((r / self.r0).ln() / self.q.ln()).floor().max(0.0) as usize;
        j = j.min(n - 2);
        while j > 0 && self.node(j) > r {
            j -= 1;
        }
        while j + 2 < n && self.node(j + 1) <= r {
            j += 1;
        }
        if let Some(lo) = self.cubic_stencil(j) {
            let t = (r / self.r0).ln() / self.q.ln() - lo as f64;
            let i = t.round();
            if (t - i).abs() < 1e-11 {
                return self.values[lo + i as usize];
            }
            let y: Vec<f64> = (0..4).map(|i| self.values[lo + i].ln()).collect();
            // Lagrange weights on nodes 0, 1, 2, 3
            let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
            let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
            let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
            let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
            return (l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3]).exp();
        }
        let (x1, x2) = (self.node(j), self.node(j + 1));
        let t = (r - x1) / (x2 - x1);
        self.values[j] + t * (self.values[j + 1] - self.values[j])
    }

    /// First node of the four-point stencil for the piece `[r_j, r_{j+1}]`.
    fn cubic_stencil(&self, j: usize) -> Option<usize> {
        let n = self.values.len();
        if self.interpolation != TableInterpolation::LogCubic || n < 4 {
            return None;
        }
        let lo = j.saturating_sub(1).min(n - 4);
        self.values[lo..lo + 4].iter().all(|v| *v > 0.0).then_some(lo)
    }

    /// Same as [`LogPeriodic::exp_integral`] for the tabulated law.
    pub fn exp_integral(&self, w: C64, compensate: bool) -> Result<C64> {
        if w.norm() == 0.0 {
            return Ok(CZERO);
        }
        if w.re > 0.0 {
            return Err(Error::domain("exponent with positive real part"));
        }
        let order = if compensate { 2.0 } else { 1.0 };
        let v0 = self.values[0];
        let n = self.values.len();
        let vl = self.values[n - 1];
        if v0 > 0.0 && self.head_exponent >= order {
            return Err(Error::domain("tabulated head exponent too large for this exponent"));
        }
        if vl > 0.0 && self.tail_exponent <= 0.0 {
            return Err(Error::domain("tabulated tail is not integrable"));
        }
        let comp_upper = if compensate { 1.0 } else { 0.0 };
        let mut total = CZERO;

        // Head (0, r0]: series on (0, a], quadrature on (a, r0].
        if v0 > 0.0 {
            let th = self.head_exponent;
            let mut a = self.r0.min(1.0 / w.norm());
            if compensate {
                a = a.min(1.0);
            }
            let k0 = if compensate { 2 } else { 1 };
            let wa = w * a;
            let mut pow = wa.powi(k0 - 1);
            let mut fact: f64 = (1..k0).map(|v| v as f64).product();
            let mut series = CZERO;
            for k in k0..80 {
                pow *= wa;
                fact *= k as f64;
                let term = pow / (fact * (k as f64 - th));
                series += term;
                if term.norm() <= 1e-18 * series.norm() {
                    break;
                }
            }
            total += series * (v0 * (a / self.r0).powf(-th));
            if a < self.r0 {
                let f = |r: f64| {
                    let comp = if r <= comp_upper { w * r } else { CZERO };
                    (cexpm1(w * r) - comp) * (v0 * (r / self.r0).powf(-th) / r)
                };
                total += integrate_with_breaks(f, a, self.r0, &[1.0], Tolerance::new(1e-12, 1e-16))?.value;
            }
        }

        for j in 0..n - 1 {
            let (x1, x2) = (self.node(j), self.node(j + 1));
            let (y1, y2) = (self.values[j], self.values[j + 1]);
            if y1 == 0.0 && y2 == 0.0 {
                continue;
            }
            if self.cubic_stencil(j).is_some() {
                let f = |r: f64| {
                    let comp = if r <= comp_upper { w * r } else { CZERO };
                    (cexpm1(w * r) - comp) * (self.value(r) / r)
                };
                total += integrate_with_breaks(f, x1, x2, &[comp_upper], Tolerance::new(1e-12, 1e-16))?.value;
                continue;
            }
            let slope = (y2 - y1) / (x2 - x1);
            total += linear_piece_exp_integral(w, x1, x2, y1 - slope * x1, slope, comp_upper);
        }

        if vl > 0.0 {
            let rl = self.last_node();
            let mut tau = self.tail_exponent;
            if (tau - tau.round()).abs() < 1e-7 {
                tau = tau.round() + 1e-7;
            }
            // v_L r_L^τ ∫_{r_L}^∞ (e^{wr} - 1) r^{-1-τ} dr
            total += (expint_general(1.0 + tau, -w * rl) - 1.0 / tau) * vl;
            if compensate && rl < 1.0 {
                let m = if (tau - 1.0).abs() < 1e-12 {
                    -rl.ln()
                } else {
                    (1.0 - rl.powf(1.0 - tau)) / (1.0 - tau)
                };
                total -= w * (vl * rl.powf(tau) * m);
            }
        }
        Ok(total)
    }
}

impl RadialProfile {
    pub fn exponential(c: f64, q: f64) -> Result<Self> {
        let p = RadialProfile::Exponential { c, q };
        p.check()?;
        Ok(p)
    }

    /// Structural well-formedness (no integrability check).
    pub fn check(&self) -> Result<()> {
        match self {
            RadialProfile::Exponential { c, q } => {
                if !finite_pos(*c) || !finite_pos(*q) {
                    return Err(Error::input("exponential profile needs c > 0 and q > 0"));
                }
            }
            RadialProfile::PowerExp { c, theta, q } => {
                if !finite_pos(*c) || !(theta.is_finite() && *theta >= 0.0) || !(q.is_finite() && *q >= 0.0) {
                    return Err(Error::input("power-exponential profile needs c > 0, theta >= 0, q >= 0"));
                }
                if *q == 0.0 && *theta == 0.0 {
                    return Err(Error::input("power-exponential profile with q = 0 needs theta > 0"));
                }
            }
            RadialProfile::LogPeriodic(lp) => lp.check()?,
            RadialProfile::TabulatedGeometric(t) => t.check()?,
            RadialProfile::Indicator { c, cutoff } => {
                if !finite_pos(*c) || !finite_pos(*cutoff) {
                    return Err(Error::input("indicator profile needs c > 0 and cutoff > 0"));
                }
            }
            RadialProfile::InversePower { c, s, p } => {
                if !finite_pos(*c) || !finite_pos(*s) || !finite_pos(*p) {
                    return Err(Error::input("inverse-power profile needs c, s, p > 0"));
                }
            }
            RadialProfile::Difference { base, span } => {
                base.check()?;
                if !(*span > 1.0 && span.is_finite()) {
                    return Err(Error::input("difference profile span must exceed 1"));
                }
            }
        }
        Ok(())
    }

    /// Short human-readable name used in error messages.
    pub fn label(&self) -> String {
        match self {
            RadialProfile::Exponential { c, q } => format!("Exponential{{c={c},q={q}}}"),
            RadialProfile::PowerExp { c, theta, q } => format!("PowerExp{{c={c},theta={theta},q={q}}}"),
            RadialProfile::LogPeriodic(lp) => {
                format!("LogPeriodic{{alpha={},b={},nodes={}}}", lp.alpha, lp.b, lp.h.len())
            }
            RadialProfile::TabulatedGeometric(t) => {
                format!("TabulatedGeometric{{r0={},q={},n={}}}", t.r0, t.q, t.values.len())
            }
            RadialProfile::Indicator { c, cutoff } => format!("Indicator{{c={c},cutoff={cutoff}}}"),
            RadialProfile::InversePower { c, s, p } => format!("InversePower{{c={c},s={s},p={p}}}"),
            RadialProfile::Difference { base, span } => format!("Difference{{{},span={span}}}", base.label()),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= 0.0 || !r.is_finite() {
            return 0.0;
        }
        match self {
            RadialProfile::Exponential { c, q } => c * (-q * r).exp(),
            RadialProfile::PowerExp { c, theta, q } => c * r.powf(-theta) * (-q * r).exp(),
            RadialProfile::LogPeriodic(lp) => lp.value(r),
            RadialProfile::TabulatedGeometric(t) => t.value(r),
            RadialProfile::Indicator { c, cutoff } => {
                if r <= *cutoff {
                    *c
                } else {
                    0.0
                }
            }
            RadialProfile::InversePower { c, s, p } => c * (1.0 + r / s).powf(-p),
            RadialProfile::Difference { base, span } => base.value(r) - base.value(span * r),
        }
    }

    /// The profile of the image measure under `r ↦ c r`, i.e. `k(r / c)`.
    pub fn scaled(&self, c: f64) -> Result<RadialProfile> {
        if !finite_pos(c) {
            return Err(Error::input(format!("scale factor {c} must be positive")));
        }
        Ok(match self {
            RadialProfile::Exponential { c: c0, q } => RadialProfile::Exponential { c: *c0, q: q / c },
            RadialProfile::PowerExp { c: c0, theta, q } => RadialProfile::PowerExp {
                c: c0 * c.powf(*theta),
                theta: *theta,
                q: q / c,
            },
            RadialProfile::LogPeriodic(lp) => RadialProfile::LogPeriodic(lp.scaled(c)),
            RadialProfile::TabulatedGeometric(t) => {
                RadialProfile::TabulatedGeometric(GeometricTable { r0: t.r0 * c, ..t.clone() })
            }
            RadialProfile::Indicator { c: c0, cutoff } => RadialProfile::Indicator { c: *c0, cutoff: cutoff * c },
            RadialProfile::InversePower { c: c0, s, p } => RadialProfile::InversePower { c: *c0, s: s * c, p: *p },
            RadialProfile::Difference { base, span } => RadialProfile::Difference {
                base: Box::new(base.scaled(c)?),
                span: *span,
            },
        })
    }

    /// Points in `(lo, hi)` where the profile has kinks, jumps or a natural scale.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match self {
            RadialProfile::Exponential { q, .. } => out.push(1.0 / q),
            RadialProfile::PowerExp { q, .. } => {
                if *q > 0.0 {
                    out.push(1.0 / q)
                }
            }
            RadialProfile::LogPeriodic(lp) => {
                if lo > 0.0 && hi.is_finite() {
                    let (n1, _) = lp.locate(lo);
                    let (n2, _) = lp.locate(hi);
                    for n in n1..=n2 {
                        let sn = lp.scale * lp.b.powi(n);
                        for j in 0..lp.h.len().max(2) {
                            let x = if lp.h.len() == 1 { [1.0, lp.b][j] } else { lp.node(j) };
                            out.push(sn * x);
                        }
                    }
                }
            }
            RadialProfile::TabulatedGeometric(t) => out.extend((0..t.values.len()).map(|j| t.node(j))),
            RadialProfile::Indicator { cutoff, .. } => out.push(*cutoff),
            RadialProfile::InversePower { s, .. } => out.push(*s),
            RadialProfile::Difference { base, span } => {
                out.extend(base.breakpoints(lo, hi));
                out.extend(base.breakpoints(lo * span, hi * span).into_iter().map(|x| x / span));
            }
        }
        out.retain(|&x| x > lo && x < hi);
        out
    }

    /// `∫_lo^hi g(r) r⁻¹ k(r) dr` by adaptive quadrature.
    pub fn weighted_integral<T: QuadValue>(
        &self,
        g: &dyn Fn(f64) -> T,
        lo: f64,
        hi: f64,
        extra_breaks: &[f64],
        tol: Tolerance,
    ) -> Result<QuadratureResult<T>> {
        if !(lo >= 0.0) || !(hi > lo) {
            if hi == lo {
                return Ok(QuadratureResult { value: T::zero(), abs_error_estimate: 0.0, evaluations: 1 });
            }
            return Err(Error::input(format!("bad integration range ({lo}, {hi}]")));
        }
        match self {
            RadialProfile::LogPeriodic(lp) => lp_weighted_integral(lp, g, lo, hi, extra_breaks, tol),
            RadialProfile::Difference { base, span } => {
                let a = base.weighted_integral(g, lo, hi, extra_breaks, tol)?;
                let shifted = base.scaled(1.0 / span)?;
                let b = shifted.weighted_integral(g, lo, hi, extra_breaks, tol)?;
                Ok(QuadratureResult {
                    value: a.value - b.value,
                    abs_error_estimate: a.abs_error_estimate + b.abs_error_estimate,
                    evaluations: a.evaluations + b.evaluations,
                })
            }
            _ => {
                let mut breaks = self.breakpoints(lo, hi);
                breaks.extend(extra_breaks.iter().copied().filter(|&x| x > lo && x < hi));
                integrate_with_breaks(|r: f64| g(r) * (self.value(r) / r), lo, hi, &breaks, tol)
            }
        }
    }

    /// Radii at which pointwise criteria (monotonicity, span comparisons) are
    /// evaluated. Tables use their own nodes; log-periodic profiles use the
    /// midpoints of 8 equal cells per piece over 80 periods (never a period end,
    /// where the profile may jump); everything else a
    /// geometric grid `1e-6 q^j` up to `1e4` with `q = span^{1/8}` (default span 2).
    pub fn check_points(&self, span: Option<f64>) -> Vec<f64> {
        match self {
            RadialProfile::TabulatedGeometric(t) => (0..t.values.len()).map(|j| t.node(j)).collect(),
            RadialProfile::LogPeriodic(lp) => {
                let mut out = Vec::new();
                let pieces = lp.pieces();
                for n in -40..40 {
                    let sn = lp.scale * lp.b.powi(n);
                    for &(x1, x2, _, _) in &pieces {
                        for i in 0..8 {
                            out.push(sn * (x1 + (x2 - x1) * (i as f64 + 0.5) / 8.0));
                        }
                    }
                }
                out
            }
            RadialProfile::Difference { base, .. } => base.check_points(span),
            _ => {
                let q = span.unwrap_or(2.0).powf(0.125);
                let n = ((1e10f64).ln() / q.ln()).ceil() as i32;
                (0..=n).map(|j| 1e-6 * q.powi(j)).collect()
            }
        }
    }

    /// `∫_{r1}^{r2} r⁻¹ k(r) dr`.
    pub fn mass(&self, r1: f64, r2: f64) -> Result<f64> {
        if !(r1 > 0.0) || r2 < r1 {
            return Err(Error::input(format!("mass interval ({r1}, {r2}] must satisfy 0 < r1 <= r2")));
        }
        if r1 == r2 {
            return Ok(0.0);
        }
        Ok(self.weighted_integral(&|_| 1.0, r1, r2, &[], Tolerance::default())?.value)
    }

    fn divergence(&self, p: i32) -> Option<String> {
        let pf = p as f64;
        match self {
            RadialProfile::PowerExp { theta, q, .. } => {
                if *theta >= pf {
                    Some(format!("r^(-{theta}) singularity is not integrable against r^{p} near 0"))
                } else if *q == 0.0 && *theta <= 0.0 {
                    Some("no decay at infinity".into())
                } else {
                    None
                }
            }
            RadialProfile::LogPeriodic(lp) => {
                if lp.h.iter().all(|v| *v == 0.0) {
                    None
                } else if lp.alpha >= pf {
                    Some(format!("index {} is not below {p}", lp.alpha))
                } else {
                    None
                }
            }
            RadialProfile::TabulatedGeometric(t) => {
                if t.values[0] > 0.0 && t.head_exponent >= pf {
                    Some(format!("head exponent {} is not below {p}", t.head_exponent))
                } else if *t.values.last().unwrap() > 0.0 && t.tail_exponent <= 0.0 {
                    Some("tail exponent must be positive".into())
                } else {
                    None
                }
            }
            RadialProfile::Difference { base, .. } => base.divergence(p),
            _ => None,
        }
    }

    /// Integrability integral `∫ (r^p ∧ 1) r⁻¹ k(r) dr` with `p` from `order`.
    pub fn integrability(&self, order: Integrability) -> Result<QuadratureResult<f64>> {
        self.check()?;
        let p = order.power();
        let fail = |reason: String| Error::Validation { profile: self.label(), reason };
        if let Some(reason) = self.divergence(p) {
            return Err(fail(format!("divergent integral: {reason}")));
        }
        let tol = Tolerance::default();
        let head = self.weighted_integral(&|r: f64| r.powi(p), 0.0, 1.0, &[], tol);
        let tail = self.weighted_integral(&|_| 1.0, 1.0, f64::INFINITY, &[], tol);
        match (head, tail) {
            (Ok(a), Ok(b)) if a.value.is_finite() && b.value.is_finite() => Ok(QuadratureResult {
                value: a.value + b.value,
                abs_error_estimate: a.abs_error_estimate + b.abs_error_estimate,
                evaluations: a.evaluations + b.evaluations,
            }),
            (Err(e), _) | (_, Err(e)) => Err(fail(format!("divergent integral: {e}"))),
            _ => Err(fail("divergent integral".into())),
        }
    }

    /// `∫₀^∞ (e^{rw} - 1) r⁻¹ k(r) dr` for `Re w <= 0`.
    pub fn laplace_exponent(&self, w: C64) -> Result<C64> {
        if w.norm() == 0.0 {
            return Ok(CZERO);
        }
        if w.re > 0.0 {
            return Err(Error::domain("Laplace exponent needs Re w <= 0"));
        }
        match self {
            RadialProfile::Exponential { c, q } => Ok(-clog1p(-w / *q) * *c),
            RadialProfile::PowerExp { c, theta, q } => {
                if *theta == 0.0 {
                    Ok(-clog1p(-w / *q) * *c)
                } else if *theta < 1.0 {
                    let g = c * gamma(-theta);
                    if *q > 0.0 {
                        Ok(cexpm1(clog1p(-w / *q) * *theta) * (g * q.powf(*theta)))
                    } else {
                        Ok((-w).powf(*theta) * g)
                    }
                } else {
                    Err(Error::domain(format!("{} has no Laplace exponent", self.label())))
                }
            }
            RadialProfile::LogPeriodic(lp) => lp.exp_integral(w, false),
            RadialProfile::TabulatedGeometric(t) => t.exp_integral(w, false),
            RadialProfile::Indicator { c, cutoff } => Ok(-ein(-w * *cutoff) * *c),
            RadialProfile::Difference { base, span } => {
                Ok(base.laplace_exponent(w)? - base.scaled(1.0 / span)?.laplace_exponent(w)?)
            }
            RadialProfile::InversePower { .. } => {
                let g = |r: f64| cexpm1(w * r);
                Ok(self.weighted_integral(&g, 0.0, f64::INFINITY, &[], Tolerance::default())?.value)
            }
        }
    }

    /// `∫₀^∞ (e^{iθr} - 1 - iθr 1{r<=1}) r⁻¹ k(r) dr`.
    pub fn fourier_exponent(&self, theta: f64) -> Result<C64> {
        if theta == 0.0 {
            return Ok(CZERO);
        }
        let it = C64::new(0.0, theta);
        match self {
            RadialProfile::Exponential { c, q } => {
                Ok(self.laplace_exponent(it)? - it * (c * -(-q).exp_m1() / q))
            }
            RadialProfile::PowerExp { c, theta: th, q } if *th < 1.0 => {
                Ok(self.laplace_exponent(it)? - it * (c * power_exp_unit_moment(*th, *q)?))
            }
            RadialProfile::LogPeriodic(lp) => lp.exp_integral(it, true),
            RadialProfile::TabulatedGeometric(t) => t.exp_integral(it, true),
            RadialProfile::Indicator { c, cutoff } => Ok(-ein(-it * *cutoff) * *c - it * (c * cutoff.min(1.0))),
            RadialProfile::Difference { base, span } => {
                Ok(base.fourier_exponent(theta)? - base.scaled(1.0 / span)?.fourier_exponent(theta)?)
            }
            _ => {
                let g = |r: f64| {
                    let comp = if r <= 1.0 { it * r } else { CZERO };
                    cexpm1(it * r) - comp
                };
                Ok(self.weighted_integral(&g, 0.0, f64::INFINITY, &[1.0], Tolerance::default())?.value)
            }
        }
    }
}

/// `∫₀¹ r^{-θ} e^{-qr} dr` for `θ < 1`.
fn power_exp_unit_moment(theta: f64, q: f64) -> Result<f64> {
    if q <= 30.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 0..400 {
            if k > 0 {
                term *= -q / k as f64;
            }
            let t = term / (k as f64 + 1.0 - theta);
            sum += t;
            if t.abs() < 1e-18 * sum.abs() && k > q as usize {
                break;
            }
        }
        Ok(sum)
    } else {
        let tail = integrate(|r: f64| r.powf(-theta) * (-q * r).exp(), 1.0, f64::INFINITY, Tolerance::default())?;
        Ok(gamma(1.0 - theta) * q.powf(theta - 1.0) - tail.value)
    }
}

fn lp_weighted_integral<T: QuadValue>(
    lp: &LogPeriodic,
    g: &dyn Fn(f64) -> T,
    lo: f64,
    hi: f64,
    extra_breaks: &[f64],
    tol: Tolerance,
) -> Result<QuadratureResult<T>> {
    let nodes: Vec<f64> = if lp.h.len() == 1 {
        vec![1.0, lp.b]
    } else {
        (0..lp.h.len()).map(|j| lp.node(j)).collect()
    };
    let period = |n: i32| -> Result<QuadratureResult<T>> {
        let sn = lp.scale * lp.b.powi(n);
        let a = (sn).max(lo);
        let z = (sn * lp.b).min(hi);
        if z <= a {
            return Ok(QuadratureResult { value: T::zero(), abs_error_estimate: 0.0, evaluations: 1 });
        }
        let mut breaks: Vec<f64> = nodes.iter().map(|x| sn * x).filter(|&x| x > a && x < z).collect();
        breaks.extend(extra_breaks.iter().copied().filter(|&x| x > a && x < z));
        let weight = lp.b.powf(-lp.alpha).powi(n);
        // inside a period k(r) = weight · h(r / sn), with r / sn in [1, b]
        let f = |r: f64| g(r) * (weight * lp.h_at((r / sn).clamp(1.0, lp.b)) / r);
        integrate_with_breaks(f, a, z, &breaks, tol)
    };
    let n_lo = if lo > 0.0 { Some(lp.locate(lo).0) } else { None };
    let n_hi = if hi.is_finite() { Some(lp.locate(hi).0) } else { None };
    let start = lp.locate(1.0).0.clamp(n_lo.unwrap_or(i32::MIN), n_hi.unwrap_or(i32::MAX));
    let mut value = T::zero();
    let mut err = 0.0;
    let mut evals = 0;
    let first = period(start)?;
    value = value + first.value;
    err += first.abs_error_estimate;
    evals += first.evaluations;
    for dir in [-1i32, 1] {
        let mut n = start + dir;
        let mut small_run = 0;
        let mut last = f64::INFINITY;
        let mut count = 0;
        loop {
            if let Some(l) = n_lo {
                if n < l {
                    break;
                }
            }
            if let Some(h) = n_hi {
                if n > h {
                    break;
                }
            }
            let part = period(n)?;
            value = value + part.value;
            err += part.abs_error_estimate;
            evals += part.evaluations;
            let mag = part.value.magnitude();
            if mag <= 1e-16 * value.magnitude().max(1e-300) && mag <= last {
                small_run += 1;
            } else {
                small_run = 0;
            }
            last = mag;
            if small_run >= 3 {
                break;
            }
            count += 1;
            if count > 3000 {
                return Err(Error::Numerical {
                    message: "log-periodic period sum did not converge".into(),
                    best: value.to_complex(),
                    abs_error: err,
                });
            }
            n += dir;
        }
    }
    Ok(QuadratureResult { value, abs_error_estimate: err, evaluations: evals })
}
