use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::cones::Cone;
use crate::error::Error;
use crate::numerics::{gamma, integrate, integrate_with_breaks, Tolerance};

type C64 = Complex64;

fn tight() -> Tolerance {
    Tolerance::new(1e-13, 1e-16)
}

fn e1_oracle(x: f64) -> f64 {
    integrate(|t: f64| (-t).exp() / t, x, f64::INFINITY, tight()).unwrap().value
}

fn atom(direction: Vec<f64>, profile: RadialProfile) -> LevyAtom {
    LevyAtom { direction, weight: 1.0, profile }
}

fn sym_exponential() -> PolarLevyMeasure {
    let p = RadialProfile::exponential(1.0, 1.0).unwrap();
    PolarLevyMeasure::new(
        1,
        vec![atom(vec![1.0], p.clone()), atom(vec![-1.0], p)],
        None,
        Integrability::General,
    )
    .unwrap()
}

#[test]
fn exponential_integrability() {
    let p = RadialProfile::exponential(1.0, 1.0).unwrap();
    let v = validate_profile(&p, Integrability::Subordinator).unwrap().value;
    let oracle = (1.0 - (-1.0f64).exp()) + e1_oracle(1.0);
    assert_relative_eq!(v, oracle, max_relative = 1e-10);
    assert_relative_eq!(v, 0.851504, epsilon = 1e-6);
}

#[test]
fn power_exp_theta_one_diverges() {
    let p = RadialProfile::PowerExp { c: 1.0, theta: 1.0, q: 1.0 };
    match validate_profile(&p, Integrability::Subordinator) {
        Err(Error::Validation { profile, .. }) => assert!(profile.contains("PowerExp")),
        other => panic!("expected validation error, got {other:?}"),
    }
}

#[test]
fn log_periodic_integrability_geometric_series() {
    let p = RadialProfile::LogPeriodic(LogPeriodic::new(1.0, 2.0, vec![1.0]).unwrap());
    let v = validate_profile(&p, Integrability::General).unwrap().value;
    // Σ_{n<0} 2^{-n}(4^{n+1}-4^n)/2 + Σ_{n>=0} 2^{-n} ln 2
    let lower: f64 = (1..80).map(|m| 1.5 * 0.5f64.powi(m)).sum();
    let upper: f64 = (0..80).map(|n| 0.5f64.powi(n) * 2f64.ln()).sum();
    assert_relative_eq!(v, lower + upper, max_relative = 1e-10);
    assert!(validate_profile(&p, Integrability::Subordinator).is_err());
}

#[test]
fn levy_mass_examples() {
    let nu = sym_exponential();
    assert_relative_eq!(nu.levy_mass(0, 1.0, f64::INFINITY).unwrap(), e1_oracle(1.0), max_relative = 1e-10);
    assert_relative_eq!(nu.levy_mass(0, 1.0, f64::INFINITY).unwrap(), 0.219384, epsilon = 1e-6);
    assert_eq!(nu.levy_mass(0, 0.7, 0.7).unwrap(), 0.0);
    let (a, b, c) = (0.1, 0.9, 3.0);
    let lhs = nu.levy_mass(1, a, b).unwrap() + nu.levy_mass(1, b, c).unwrap();
    assert_relative_eq!(lhs, nu.levy_mass(1, a, c).unwrap(), max_relative = 1e-12);
    assert!(matches!(nu.levy_mass(5, 1.0, 2.0), Err(Error::Input(_))));
    assert!(matches!(nu.levy_mass(0, 0.0, 2.0), Err(Error::Input(_))));
    assert!(matches!(nu.levy_mass(0, 3.0, 2.0), Err(Error::Input(_))));
}

#[test]
fn gaussian_cumulant() {
    let t = LevyTriplet::new(DMatrix::from_element(1, 1, 1.0), PolarLevyMeasure::empty(1), vec![0.0]).unwrap();
    assert_eq!(cumulant(&t, &[2.0]).unwrap(), C64::new(-2.0, 0.0));
    assert_eq!(cumulant(&t, &[0.0]).unwrap(), C64::new(0.0, 0.0));
}

#[test]
fn symmetric_cumulant_is_real_nonpositive() {
    let t = LevyTriplet::new(DMatrix::zeros(1, 1), sym_exponential(), vec![0.0]).unwrap();
    for &z in &[0.1, 0.5, 1.0, 3.0, 10.0] {
        let c = t.cumulant(&[z]).unwrap();
        assert!(c.im.abs() < 1e-13, "imaginary part {}", c.im);
        assert!(c.re <= 0.0);
        // symmetric exponential jumps: 2 ∫ (cos zr - 1) r⁻¹ e^{-r} dr = -ln(1 + z²)
        assert_relative_eq!(c.re, -(1.0 + z * z).ln(), max_relative = 1e-10);
    }
}

#[test]
fn gamma_subordinator_laplace_and_cf() {
    let p = RadialProfile::exponential(1.0, 1.0).unwrap();
    let nu = PolarLevyMeasure::new(1, vec![atom(vec![1.0], p)], None, Integrability::Subordinator).unwrap();
    let lap = nu.laplace_term(&[C64::new(-1.0, 0.0)]).unwrap();
    assert_relative_eq!(lap.re, -(2f64.ln()), max_relative = 1e-12);
    let oracle = integrate(|r: f64| (-r).exp_m1() * (-r).exp() / r, 0.0, f64::INFINITY, tight()).unwrap();
    assert_relative_eq!(lap.re, oracle.value, max_relative = 1e-10);

    // drift ∫₀¹ k dr makes the triplet the driftless subordinator with CF 1/(1 - iz)
    let t = LevyTriplet::new(DMatrix::zeros(1, 1), nu, vec![1.0 - (-1.0f64).exp()]).unwrap();
    for &z in &[0.3, 1.0, 4.0] {
        let want = -(C64::new(1.0, -z)).ln();
        assert!((t.cumulant(&[z]).unwrap() - want).norm() < 1e-12);
    }
}

#[test]
fn frullani_laplace() {
    let p = RadialProfile::exponential(1.0, 1.0).unwrap();
    let got = p.laplace_exponent(C64::new(-0.5, 0.0)).unwrap();
    let oracle =
        integrate(|r: f64| ((-r * 0.5).exp() - 1.0) * (-r).exp() / r, 0.0, f64::INFINITY, tight()).unwrap();
    assert_relative_eq!(got.re, oracle.value, max_relative = 1e-10);
    assert_relative_eq!(got.re, -(1.5f64.ln()), max_relative = 1e-12);
}

#[test]
fn scale_levy_examples() {
    let nu = sym_exponential();
    assert_eq!(scale_levy(&nu, 1.0).unwrap(), nu);
    let p = RadialProfile::Exponential { c: 1.0, q: 3.0 };
    assert_eq!(p.scaled(2.0).unwrap(), RadialProfile::Exponential { c: 1.0, q: 1.5 });
    let scaled = scale_levy(&nu, 2.5).unwrap();
    for (r1, r2) in [(0.2, 0.9), (1.0, 4.0)] {
        assert_relative_eq!(
            scaled.levy_mass(0, 2.5 * r1, 2.5 * r2).unwrap(),
            nu.levy_mass(0, r1, r2).unwrap(),
            max_relative = 1e-10
        );
    }
}

#[test]
fn scaling_keeps_support() {
    let cone = Cone::orthant(2).unwrap();
    let s = 0.5f64.sqrt();
    let nu = PolarLevyMeasure::new(
        2,
        vec![atom(vec![s, s], RadialProfile::exponential(1.0, 2.0).unwrap())],
        Some(cone.clone()),
        Integrability::Subordinator,
    )
    .unwrap();
    let scaled = nu.scale(7.0).unwrap();
    for a in scaled.atoms() {
        assert!(cone.contains(&a.direction).unwrap());
    }
    let outside = PolarLevyMeasure::new(
        2,
        vec![atom(vec![-1.0, 0.0], RadialProfile::exponential(1.0, 2.0).unwrap())],
        Some(cone),
        Integrability::Subordinator,
    );
    assert!(matches!(outside, Err(Error::Input(_))));
}

fn expm1_series(x: C64) -> C64 {
    if x.norm() > 1e-2 {
        return x.exp() - 1.0;
    }
    let mut term = x;
    let mut sum = x;
    for k in 2..12 {
        term = term * x / k as f64;
        sum += term;
    }
    sum
}

/// Brute-force `∫ (e^{rw} - 1 - rw 1{r<=1}·comp) r⁻¹ k(r) dr`, one quadrature per
/// cell between consecutive breakpoints (the last cell runs to `hi`).
fn brute_exponent(k: &dyn Fn(f64) -> f64, w: C64, comp: bool, breaks: &[f64], hi: f64) -> C64 {
    let f = |r: f64| {
        let c = if comp && r <= 1.0 { w * r } else { C64::new(0.0, 0.0) };
        (expm1_series(w * r) - c) * (k(r) / r)
    };
    let mut pts = vec![0.0];
    pts.extend(breaks.iter().copied().filter(|&x| x > 0.0 && x < hi));
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    let mut total = C64::new(0.0, 0.0);
    for cell in pts.windows(2) {
        let mut inner = Vec::new();
        if comp && cell[0] < 1.0 && cell[1] > 1.0 {
            inner.push(1.0);
        }
        total += integrate_with_breaks(f, cell[0], cell[1], &inner, Tolerance::new(1e-12, 1e-17)).unwrap().value;
    }
    total
}

#[test]
fn power_exp_exponents() {
    let (c, th, q) = (0.8, 0.5, 1.3);
    let p = RadialProfile::PowerExp { c, theta: th, q };
    let k = |r: f64| c * r.powf(-th) * (-q * r).exp();
    for w in [C64::new(-1.0, 0.0), C64::new(-0.2, 3.0), C64::new(0.0, 1.5)] {
        let got = p.laplace_exponent(w).unwrap();
        let want = brute_exponent(&k, w, false, &[1.0], f64::INFINITY);
        assert!((got - want).norm() < 1e-9 * (1.0 + want.norm()), "{got} vs {want}");
    }
    for theta in [0.4, 2.0, -7.0] {
        let got = p.fourier_exponent(theta).unwrap();
        let want = brute_exponent(&k, C64::new(0.0, theta), true, &[1.0], f64::INFINITY);
        assert!((got - want).norm() < 1e-9 * (1.0 + want.norm()), "{got} vs {want}");
    }
    // one-sided stable: Γ(-θ)(-w)^θ
    let s = RadialProfile::PowerExp { c: 1.0, theta: 0.6, q: 0.0 };
    let got = s.laplace_exponent(C64::new(-2.0, 0.0)).unwrap();
    assert_relative_eq!(got.re, gamma(-0.6) * 2f64.powf(0.6), max_relative = 1e-13);
}

fn lp_oracle_value(alpha: f64, b: f64, h: &[f64], r: f64) -> f64 {
    let mut n = 0i32;
    let mut x = r;
    while x >= b {
        x /= b;
        n += 1;
    }
    while x < 1.0 {
        x *= b;
        n -= 1;
    }
    let m = h.len() - 1;
    let t = (x - 1.0) / (b - 1.0) * m as f64;
    let j = (t as usize).min(m - 1);
    let hv = h[j] + (t - j as f64) * (h[j + 1] - h[j]);
    b.powf(-alpha * n as f64) * hv
}

#[test]
fn log_periodic_exponents_against_period_sums() {
    let (alpha, b) = (0.7, 2.0);
    let h = vec![1.0, 2.0, 0.5, 0.8];
    let lp = LogPeriodic::new(alpha, b, h.clone()).unwrap();
    let k = |r: f64| lp_oracle_value(alpha, b, &h, r);
    let mut breaks = Vec::new();
    for n in -60..40 {
        for j in 0..3 {
            breaks.push(b.powi(n) * (1.0 + j as f64 / 3.0));
        }
    }
    for (w, comp) in [
        (C64::new(-1.0, 0.0), false),
        (C64::new(-0.3, 2.0), false),
        (C64::new(-0.3, 2.0), true),
        (C64::new(-5.0, -0.5), true),
    ] {
        let got = lp.exp_integral(w, comp).unwrap();
        // beyond 2^40 only the -1 term survives: -Σ_{n>=40} b^{-αn} ∫₁^b h(x)/x dx
        let hmass = integrate_with_breaks(|x: f64| k(x) / x, 1.0, 2.0, &[4.0 / 3.0, 5.0 / 3.0], tight()).unwrap();
        let beta = b.powf(-alpha);
        let far = -hmass.value * beta.powi(40) / (1.0 - beta);
        let want = brute_exponent(&k, w, comp, &breaks, 2f64.powi(40)) + far;
        assert!((got - want).norm() < 1e-9 * (1.0 + want.norm()), "w={w} comp={comp}: {got} vs {want}");
    }
}

#[test]
fn log_periodic_power_law_matches_stable_exponent() {
    // h(x) = x^{-α} on a fine grid reproduces r^{-α}
    for &alpha in &[0.5, 1.5] {
        let b = 2.0;
        let h: Vec<f64> = (0..=4000).map(|j| (1.0 + j as f64 / 4000.0).powf(-alpha)).collect();
        let p = RadialProfile::LogPeriodic(LogPeriodic::new(alpha, b, h).unwrap());
        for &t in &[0.1, 1.0, 7.0] {
            let it = C64::new(0.0, t);
            let want = (-it).powf(alpha) * gamma(-alpha) + it / (alpha - 1.0);
            let got = p.fourier_exponent(t).unwrap();
            assert!((got - want).norm() < 1e-6 * want.norm(), "alpha={alpha} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn log_periodic_subordinator_period_invariance() {
    let lp = LogPeriodic::new(0.6, 3.0, vec![1.0, 0.4, 0.9]).unwrap();
    let p = RadialProfile::LogPeriodic(lp);
    // scaling by b multiplies the measure by b^α
    let w = C64::new(-0.7, 0.2);
    let a = p.scaled(3.0).unwrap().laplace_exponent(w).unwrap();
    let b = p.laplace_exponent(w).unwrap() * 3f64.powf(0.6);
    assert!((a - b).norm() < 1e-12 * b.norm());
}

fn table() -> GeometricTable {
    let q = 2f64.powf(0.25);
    let values = (0..40).map(|j| (-(0.01 * q.powi(j))).exp() * (0.01 * q.powi(j)).powf(-0.4)).collect();
    GeometricTable { r0: 0.01, q, values, tail_exponent: 1.5, head_exponent: 0.4, interpolation: TableInterpolation::Linear }
}

fn table_oracle_value(t: &GeometricTable, r: f64) -> f64 {
    let n = t.values.len();
    let rl = t.r0 * t.q.powi(n as i32 - 1);
    if r <= t.r0 {
        return t.values[0] * (r / t.r0).powf(-t.head_exponent);
    }
    if r >= rl {
        return t.values[n - 1] * (r / rl).powf(-t.tail_exponent);
    }
    for j in 0..n - 1 {
        let (a, b) = (t.r0 * t.q.powi(j as i32), t.r0 * t.q.powi(j as i32 + 1));
        if r >= a && r <= b {
            return t.values[j] + (r - a) / (b - a) * (t.values[j + 1] - t.values[j]);
        }
    }
    unreachable!()
}

#[test]
fn tabulated_exponents() {
    let t = table();
    let breaks: Vec<f64> = (0..40).map(|j| t.node(j)).collect();
    let k = |r: f64| table_oracle_value(&t, r);
    for r in [0.001, 0.0137, 0.5, 3.0, 100.0] {
        assert_relative_eq!(t.value(r), k(r), max_relative = 1e-14);
    }
    for (w, comp) in [
        (C64::new(-1.0, 0.0), false),
        (C64::new(-0.5, 1.0), false),
        (C64::new(-0.5, 1.0), true),
        (C64::new(-300.0, 0.0), false),
    ] {
        let got = t.exp_integral(w, comp).unwrap();
        let want = brute_exponent(&k, w, comp, &breaks, f64::INFINITY);
        assert!((got - want).norm() < 1e-9 * (1.0 + want.norm()), "w={w} comp={comp}: {got} vs {want}");
    }
}

#[test]
fn indicator_and_difference_exponents() {
    let ind = RadialProfile::Indicator { c: 2.0, cutoff: 3.0 };
    let k = |r: f64| if r <= 3.0 { 2.0 } else { 0.0 };
    let got = ind.fourier_exponent(1.7).unwrap();
    let want = brute_exponent(&k, C64::new(0.0, 1.7), true, &[1.0, 3.0], 3.0);
    assert!((got - want).norm() < 1e-10);

    let base = RadialProfile::exponential(1.0, 1.0).unwrap();
    let d = RadialProfile::Difference { base: Box::new(base), span: 2.0 };
    let kd = |r: f64| (-r).exp() - (-2.0 * r).exp();
    for w in [C64::new(-1.0, 0.5), C64::new(0.0, 3.0)] {
        let got = d.laplace_exponent(w).unwrap();
        let want = brute_exponent(&kd, w, false, &[1.0], f64::INFINITY);
        assert!((got - want).norm() < 1e-10, "{got} vs {want}");
    }
    assert_relative_eq!(d.value(0.3), kd(0.3), max_relative = 1e-15);
}

#[test]
fn inverse_power_is_integrable() {
    let p = RadialProfile::InversePower { c: 1.0, s: 1.0, p: 3.0 };
    let v = validate_profile(&p, Integrability::Subordinator).unwrap().value;
    let oracle = integrate(|r: f64| (1.0 + r).powi(-3), 0.0, 1.0, tight()).unwrap().value
        + integrate(|r: f64| (1.0 + r).powi(-3) / r, 1.0, f64::INFINITY, tight()).unwrap().value;
    assert_relative_eq!(v, oracle, max_relative = 1e-10);
}

#[test]
fn triplet_rejects_bad_gaussian() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(LevyTriplet::new(a, PolarLevyMeasure::empty(2), vec![0.0, 0.0]).is_err());
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    assert!(LevyTriplet::new(a, PolarLevyMeasure::empty(2), vec![0.0, 0.0]).is_err());
}

#[test]
fn triplet_serde_round_trip() {
    let lp = LogPeriodic::new(1.2, 2.0, vec![1.0, 0.5]).unwrap();
    let nu = PolarLevyMeasure::new(
        2,
        vec![
            atom(vec![1.0, 0.0], RadialProfile::LogPeriodic(lp)),
            atom(vec![0.0, -1.0], RadialProfile::TabulatedGeometric(table())),
            atom(vec![0.6, 0.8], RadialProfile::PowerExp { c: 0.1, theta: 0.3, q: 2.0 }),
        ],
        None,
        Integrability::General,
    )
    .unwrap();
    let t = LevyTriplet::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 1.0]), nu, vec![0.1, -0.2]).unwrap();
    let json = serde_json::to_string(&t).unwrap();
    let back: LevyTriplet = serde_json::from_str(&json).unwrap();
    assert_eq!(back, t);
    assert!(json.contains("\"type\":\"log_periodic\""));
}

proptest! {
    #[test]
    fn log_periodic_exact_scaling(r in 1e-6f64..1e6) {
        let lp = LogPeriodic::new(1.0, 2.0, vec![1.0, 3.0, 2.0]).unwrap();
        prop_assert_eq!(lp.value(2.0 * r), 0.5 * lp.value(r));
    }

    #[test]
    fn log_periodic_scaling_other_spans(r in 1e-6f64..1e6, alpha in 0.1f64..1.9, b in 1.2f64..5.0) {
        let lp = LogPeriodic::new(alpha, b, vec![1.0, 0.2, 2.0]).unwrap();
        let lhs = lp.value(b * r);
        let rhs = b.powf(-alpha) * lp.value(r);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn cf_modulus_bound(z in -15.0f64..15.0, z2 in -15.0f64..15.0) {
        let lp = LogPeriodic::new(1.3, 3.0, vec![0.5, 1.0]).unwrap();
        let nu = PolarLevyMeasure::new(
            2,
            vec![
                atom(vec![1.0, 0.0], RadialProfile::LogPeriodic(lp)),
                atom(vec![0.6, -0.8], RadialProfile::exponential(2.0, 0.5).unwrap()),
                atom(vec![0.0, 1.0], RadialProfile::Indicator { c: 1.0, cutoff: 2.0 }),
            ],
            None,
            Integrability::General,
        ).unwrap();
        let t = LevyTriplet::new(DMatrix::identity(2, 2) * 0.1, nu, vec![0.3, 0.0]).unwrap();
        let c = t.cumulant(&[z, z2]).unwrap();
        prop_assert!(c.re <= 1e-9);
        prop_assert_eq!(t.cumulant(&[0.0, 0.0]).unwrap(), C64::new(0.0, 0.0));
    }
}

#[test]
fn log_cubic_table_tracks_smooth_profiles() {
    let q = 2f64.powf(0.125);
    let r0 = 1e-4;
    let exact = RadialProfile::PowerExp { c: 1.0, theta: 0.3, q: 1.0 };
    let values: Vec<f64> = (0..200).map(|j| exact.value(r0 * q.powi(j))).collect();
    let power: Vec<f64> = (0..40).map(|j| (r0 * q.powi(j)).powf(-0.7)).collect();
    let pt = GeometricTable {
        r0,
        q,
        values: power,
        tail_exponent: 0.7,
        head_exponent: 0.7,
        interpolation: TableInterpolation::LogCubic,
    };
    for r in [2.3e-4, 1e-3, 0.0171] {
        assert_relative_eq!(pt.value(r), r.powf(-0.7), max_relative = 1e-12);
    }
    let t = RadialProfile::TabulatedGeometric(GeometricTable {
        r0,
        q,
        values,
        tail_exponent: 30.0,
        head_exponent: 0.3,
        interpolation: TableInterpolation::LogCubic,
    });
    // Lagrange remainder in t = ln r: (9/16) h⁴/4! · |d⁴ ln k / dt⁴| = 0.0234 h⁴ r
    let h4 = q.ln().powi(4);
    for r in [0.0013, 0.37, 1.0, 2.9, 11.0] {
        let rel = (t.value(r) / exact.value(r) - 1.0).abs();
        assert!(rel <= 0.0235 * h4 * r * 1.01 + 1e-14, "r = {r}: {rel}");
    }
    for w in [C64::new(-1.0, 0.0), C64::new(-0.2, 3.0), C64::new(0.0, -9.0)] {
        let a = t.laplace_exponent(w).unwrap();
        let b = exact.laplace_exponent(w).unwrap();
        assert!((a - b).norm() < 1e-6 * b.norm(), "w = {w}");
    }
    let a = t.fourier_exponent(4.0).unwrap();
    let b = exact.fourier_exponent(4.0).unwrap();
    assert!((a - b).norm() < 1e-6 * b.norm());
}
