use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximum bisection depth of any subinterval.
pub const MAX_DEPTH: u32 = 60;
const MAX_INTERVALS: usize = 20_000;

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
    fn to_complex(&self) -> Complex64;
    fn is_finite_value(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn to_complex(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn to_complex(&self) -> Complex64 {
        *self
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Relative and absolute accuracy goals. Convergence is declared once the
/// summed error estimate is below `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-9,
            abs: 1e-12,
        }
    }
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Self {
        Tolerance { rel, abs }
    }

    /// Purely relative goal, for integrals whose magnitude can be tiny.
    pub fn relative(rel: f64) -> Self {
        Tolerance { rel, abs: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<T> {
    pub value: T,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
    res_abs: f64,
    depth: u32,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        scaled = res_asc * (200.0 * scaled / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn kronrod<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64, depth: u32) -> Result<Segment<T>> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    let fc = f(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = fc.magnitude() * WGK[7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k = res_k + (f1 + f2) * WGK[j];
        res_abs += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            res_g = res_g + (f1 + f2) * WG[j / 2];
        }
    }
    if !res_k.is_finite_value() {
        return Err(Error::Numerical {
            message: format!("non-finite integrand on ({a}, {b})"),
            best: Complex64::new(f64::NAN, f64::NAN),
            abs_error: f64::INFINITY,
        });
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).magnitude();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).magnitude() + (fv2[j] - mean).magnitude());
    }
    let scale = half.abs();
    let err = (res_k - res_g).magnitude() * scale;
    let res_abs = res_abs * scale;
    Ok(Segment {
        a,
        b,
        value: res_k * half,
        err: rescale_error(err, res_abs, res_asc * scale),
        res_abs,
        depth,
    })
}

/// Integrates `f` over `(lo, hi)`; `hi` may be `+inf`.
pub fn integrate<T, F>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<QuadratureResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    integrate_with_breaks(f, lo, hi, &[], tol)
}

/// Adaptive global-bisection Gauss–Kronrod quadrature with an initial
/// partition at `breaks` (points outside `(lo, hi)` are ignored).
///
/// A half-infinite interval `(lo, inf)` is mapped onto `(0, 1)` by
/// `r = lo + t / (1 - t)`, `dr = dt / (1 - t)^2`; breakpoints are mapped
/// through the same substitution.
pub fn integrate_with_breaks<T, F>(
    f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<QuadratureResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if !(lo.is_finite()) || hi.is_nan() || hi <= lo {
        return Err(Error::input(format!("invalid integration interval ({lo}, {hi})")));
    }
    if !(tol.rel >= 0.0 && tol.abs >= 0.0) || (tol.rel == 0.0 && tol.abs == 0.0) {
        return Err(Error::input("tolerances must be nonnegative and not both zero"));
    }
    let infinite = hi == f64::INFINITY;
    let mut points: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi && x.is_finite())
        .map(|x| if infinite { (x - lo) / (1.0 + x - lo) } else { x })
        .collect();
    let (a0, b0) = if infinite { (0.0, 1.0) } else { (lo, hi) };
    points.push(a0);
    points.push(b0);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let g = |t: f64| -> T {
        if infinite {
            let s = 1.0 - t;
            if s <= 0.0 {
                return T::zero();
            }
            f(lo + t / s) * (1.0 / (s * s))
        } else {
            f(t)
        }
    };

    match adaptive(&g, &points, tol) {
        Ok(r) => Ok(r),
        Err((e, false)) => Err(e),
        Err((_, true)) => {
            // Endpoint singularity (or slowly decaying tail): cut the end cells
            // into geometric shells and sum them with a ratio-extrapolated tail.
            let n = points.len();
            let part = Tolerance::new(tol.rel, tol.abs / 3.0);
            let (left_end, right_start) = if n == 2 {
                let mid = 0.5 * (points[0] + points[1]);
                (mid, mid)
            } else {
                (points[1], points[n - 2])
            };
            let a = points[0];
            let len = left_end - a;
            let mut out = shells(&g, |j| (a + len * 0.5f64.powi(j + 1), a + len * 0.5f64.powi(j)), part)?;
            if n > 3 {
                let middle = adaptive(&g, &points[1..n - 1], part).map_err(|(e, _)| e)?;
                out = out.combine(middle);
            }
            let right = if infinite {
                let span = right_start / (1.0 - right_start);
                shells(&f, |j| (lo + span * 2f64.powi(j), lo + span * 2f64.powi(j + 1)), part)?
            } else {
                let b = points[n - 1];
                let len = b - right_start;
                shells(&g, |j| (b - len * 0.5f64.powi(j), b - len * 0.5f64.powi(j + 1)), part)?
            };
            Ok(out.combine(right))
        }
    }
}

impl<T: QuadValue> QuadratureResult<T> {
    fn combine(self, other: Self) -> Self {
        QuadratureResult {
            value: self.value + other.value,
            abs_error_estimate: self.abs_error_estimate + other.abs_error_estimate,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

type Attempt<T> = std::result::Result<QuadratureResult<T>, (Error, bool)>;

/// Global adaptive bisection over the partition `points`. On failure the flag
/// tells whether the offending interval touches an end of the partition.
fn adaptive<T: QuadValue, G: Fn(f64) -> T>(g: &G, points: &[f64], tol: Tolerance) -> Attempt<T> {
    let (a0, b0) = (points[0], points[points.len() - 1]);
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod(g, w[0], w[1], 0).map_err(|e| (e, false))?);
            evaluations += 15;
        }
    }

    loop {
        let mut total = T::zero();
        let mut err = 0.0;
        let mut res_abs = 0.0;
        for s in heap.iter() {
            total = total + s.value;
            err += s.err;
            res_abs += s.res_abs;
        }
        let goal = tol.abs.max(tol.rel * total.magnitude());
        if err <= goal || err <= 50.0 * f64::EPSILON * res_abs {
            return Ok(QuadratureResult { value: total, abs_error_estimate: err, evaluations });
        }
        let worst = heap.pop().expect("nonempty partition");
        let mid = 0.5 * (worst.a + worst.b);
        // Below ~1e3 ulps the Kronrod nodes no longer sample distinct points.
        let exhausted = worst.b - worst.a <= 1e3 * f64::EPSILON * worst.a.abs().max(worst.b.abs());
        if exhausted || worst.depth >= MAX_DEPTH || heap.len() + 2 > MAX_INTERVALS {
            let at_end = worst.a == a0 || worst.b == b0;
            return Err((
                Error::Numerical {
                    message: format!(
                        "quadrature on ({a0}, {b0}) did not converge (depth {}, {} intervals)",
                        worst.depth,
                        heap.len() + 1
                    ),
                    best: total.to_complex(),
                    abs_error: err,
                },
                at_end,
            ));
        }
        heap.push(kronrod(g, worst.a, mid, worst.depth + 1).map_err(|e| (e, false))?);
        heap.push(kronrod(g, mid, worst.b, worst.depth + 1).map_err(|e| (e, false))?);
        evaluations += 30;
    }
}

/// Sums `∫ g` over the shells `cell(0), cell(1), ...` until the shell
/// contributions are negligible or decay with a stable ratio, in which case the
/// remaining geometric tail is added.
fn shells<T: QuadValue, G: Fn(f64) -> T>(
    g: &G,
    cell: impl Fn(i32) -> (f64, f64),
    tol: Tolerance,
) -> Result<QuadratureResult<T>> {
    let mut total = T::zero();
    let mut err = 0.0;
    let mut evaluations = 0;
    let mut prev: Option<T> = None;
    let mut prev_ratio = f64::NAN;
    let mut best_tail: Option<(T, f64)> = None;
    for j in 0..1000 {
        let (x0, x1) = cell(j);
        if !(x1 > x0) || !x1.is_finite() {
            break;
        }
        let shell_tol = Tolerance::new(tol.rel * 0.1, tol.abs * 0.5f64.powi(j + 1));
        let r = adaptive(g, &[x0, x1], shell_tol).map_err(|(e, _)| e)?;
        total = total + r.value;
        err += r.abs_error_estimate;
        evaluations += r.evaluations;
        let goal = tol.abs.max(tol.rel * total.magnitude());
        let v = r.value;
        if v.magnitude() <= 1e-3 * goal {
            return Ok(QuadratureResult { value: total, abs_error_estimate: err, evaluations });
        }
        if let Some(p) = prev {
            let pc = p.to_complex();
            let vc = v.to_complex();
            let ratio = if pc.norm() > 0.0 { (vc * pc.conj()).re / pc.norm_sqr() } else { f64::NAN };
            if j >= 4 && ratio > 0.0 && ratio < 1.0 && prev_ratio.is_finite() {
                let tail = v * (ratio / (1.0 - ratio));
                let tail_err = tail.magnitude() * (10.0 * (ratio - prev_ratio).abs() / (1.0 - ratio))
                    + (vc - pc * ratio).norm() / (1.0 - ratio);
                if err + tail_err <= goal {
                    return Ok(QuadratureResult {
                        value: total + tail,
                        abs_error_estimate: err + tail_err,
                        evaluations,
                    });
                }
                best_tail = Some((tail, tail_err));
            }
            prev_ratio = ratio;
        }
        prev = Some(v);
    }
    let (tail, tail_err) = best_tail.unwrap_or((T::zero(), f64::INFINITY));
    Err(Error::Numerical {
        message: "endpoint shells did not converge".into(),
        best: (total + tail).to_complex(),
        abs_error: err + tail_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_on_half_line() {
        let r = integrate(|x: f64| (-x).exp(), 0.0, f64::INFINITY, Tolerance::default()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-10);
        assert!(r.evaluations >= 1);
        assert!(r.abs_error_estimate >= 0.0);
    }

    #[test]
    fn linear_on_unit_interval() {
        let r = integrate(|x: f64| x, 0.0, 1.0, Tolerance::default()).unwrap();
        assert_abs_diff_eq!(r.value, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn frullani_integrand() {
        // (e^{-r/2} - 1) e^{-r} / r integrates to -ln(3/2).
        let f = |r: f64| ((-0.5 * r).exp_m1()) * (-r).exp() / r;
        let r = integrate(f, 0.0, f64::INFINITY, Tolerance::default()).unwrap();
        assert_abs_diff_eq!(r.value, -(1.5f64).ln(), epsilon = 1e-10);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, Tolerance::default()).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn strong_endpoint_singularities() {
        let tight = Tolerance::new(1e-12, 1e-15);
        let r = integrate(|x: f64| x.powf(-0.9), 0.0, 1.0, tight).unwrap();
        assert_abs_diff_eq!(r.value, 10.0, epsilon = 1e-10);
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, tight).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-11);
        let r = integrate(|x: f64| x.ln(), 0.0, 1.0, tight).unwrap();
        assert_abs_diff_eq!(r.value, -1.0, epsilon = 1e-10);
        let r = integrate(|x: f64| x.powf(-1.1), 1.0, f64::INFINITY, Tolerance::default()).unwrap();
        assert_abs_diff_eq!(r.value, 10.0, epsilon = 1e-7);
    }

    #[test]
    fn complex_integrand() {
        let r = integrate(
            |x: f64| Complex64::new(0.0, x).exp(),
            0.0,
            std::f64::consts::PI,
            Tolerance::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.value.re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.value.im, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn breaks_resolve_narrow_peak() {
        let f = |x: f64| (-(x - 1e3).powi(2) / 2e-2).exp();
        let exact = (2e-2 * std::f64::consts::PI).sqrt();
        let r = integrate_with_breaks(f, 0.0, f64::INFINITY, &[999.0, 1001.0], Tolerance::default())
            .unwrap();
        assert_abs_diff_eq!(r.value, exact, epsilon = 1e-9 * exact);
    }

    #[test]
    fn divergent_integral_reports_failure() {
        let err = integrate(|x: f64| 1.0 / x, 0.0, 1.0, Tolerance::default()).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }

    #[test]
    fn rejects_bad_interval() {
        assert!(integrate(|x: f64| x, 1.0, 0.0, Tolerance::default()).is_err());
    }
}
