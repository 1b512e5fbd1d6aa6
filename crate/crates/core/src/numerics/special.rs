use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use libm::erfc;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_4;

/// Standard normal distribution function.
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function `1 - Φ(x)`, accurate in the upper tail.
pub fn gaussian_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Density of the Gaussian law with variance `var > 0` and mean `mean` at `x`.
pub fn gaussian_density(var: f64, mean: f64, x: f64) -> f64 {
    let d = x - mean;
    (-(d * d) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Mass that `G_{var, mean}` gives to `(x1, x2]`. With `var = 0` the law is
/// the point mass at `mean`.
pub fn gaussian_interval_mass(var: f64, mean: f64, x1: f64, x2: f64) -> Result<f64> {
    if !(x1 < x2) {
        return Err(Error::input(format!("empty or reversed interval ({x1}, {x2}]")));
    }
    if !(var >= 0.0) {
        return Err(Error::input(format!("negative variance {var}")));
    }
    if var == 0.0 {
        return Ok(if mean > x1 && mean <= x2 { 1.0 } else { 0.0 });
    }
    let sd = var.sqrt();
    let u1 = (x1 - mean) / sd;
    let u2 = (x2 - mean) / sd;
    // Evaluate on the side of the median where cancellation is mild.
    let mass = if u1 >= 0.0 {
        gaussian_sf(u1) - gaussian_sf(u2)
    } else if u2 <= 0.0 {
        gaussian_cdf(u2) - gaussian_cdf(u1)
    } else {
        1.0 - gaussian_cdf(u1) - gaussian_sf(u2)
    };
    Ok(mass.max(0.0))
}

/// `E[X; |X| <= 1]` for `X ~ G_{var, mean}`.
pub fn truncated_gaussian_mean(var: f64, mean: f64) -> f64 {
    if var == 0.0 {
        return if mean.abs() <= 1.0 { mean } else { 0.0 };
    }
    let sd = var.sqrt();
    let lo = (-1.0 - mean) / sd;
    let hi = (1.0 - mean) / sd;
    let phi = |u: f64| (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
    let mass = gaussian_interval_mass(var, mean, -1.0, 1.0).unwrap_or(0.0);
    mean * mass + sd * (phi(lo) - phi(hi))
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Gamma function on the real line (negative non-integers included).
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `exp(w) - 1` without cancellation for small `|w|`.
pub fn cexpm1(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        // exp(a+ib)-1 = (e^a - 1) cos b + (cos b - 1) + i e^a sin b
        let em1 = w.re.exp_m1();
        let cosm1 = -2.0 * (0.5 * w.im).sin().powi(2);
        Complex64::new(
            em1 * w.im.cos() + cosm1,
            (em1 + 1.0) * w.im.sin(),
        )
    } else {
        w.exp() - 1.0
    }
}

/// Entire exponential integral `Ein(ζ) = ∫_0^ζ (1 - e^{-t}) / t dt`, for
/// `Re ζ >= 0`.
///
/// Power series for `|ζ| <= 5`; otherwise `Ein = E1(ζ) + ln ζ + γ` with `E1`
/// from its continued fraction (modified Lentz).
pub fn ein(zeta: Complex64) -> Complex64 {
    let m = zeta.norm();
    if m == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if m <= 5.0 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0); // (-1)^{k+1} ζ^k / k!
        for k in 1..200 {
            term = term * zeta / k as f64;
            let t = if k % 2 == 1 { term } else { -term };
            let contrib = t / k as f64;
            sum += contrib;
            if contrib.norm() <= 1e-17 * sum.norm().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        e1_continued_fraction(zeta) + zeta.ln() + EULER_GAMMA
    }
}

fn e1_continued_fraction(z: Complex64) -> Complex64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..2000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (d * an + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// `ln(1 + u)` for complex `u`, accurate for small `|u|`.
pub fn clog1p(u: Complex64) -> Complex64 {
    if u.norm() < 0.1 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut pow = u;
        for k in 1..40 {
            let t = pow / k as f64;
            sum += if k % 2 == 1 { t } else { -t };
            pow *= u;
        }
        sum
    } else {
        (u + 1.0).ln()
    }
}

/// Generalized exponential integral `E_p(ζ) = ∫_1^∞ e^{-ζt} t^{-p} dt` for
/// `p > 1` and `Re ζ >= 0`.
///
/// Uses the power series (non-integer `p`) for `|ζ| < 2` and the continued
/// fraction otherwise. Orders within `1e-7` of an integer are shifted off the
/// integer before the series is used.
pub fn expint_general(p: f64, zeta: Complex64) -> Complex64 {
    assert!(p > 1.0, "expint_general requires p > 1");
    if zeta.norm() >= 2.0 {
        const TINY: f64 = 1e-300;
        let mut b = zeta + p;
        let mut c = Complex64::new(1.0 / TINY, 0.0);
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..5000 {
            let an = -(i as f64) * (p - 1.0 + i as f64);
            b += 2.0;
            d = 1.0 / (d * an + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).norm() < 1e-16 {
                break;
            }
        }
        return h * (-zeta).exp();
    }
    let mut p = p;
    if (p - p.round()).abs() < 1e-7 {
        p = p.round() + 1e-7;
    }
    let lead = if zeta.norm() == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        zeta.powf(p - 1.0) * gamma(1.0 - p)
    };
    let mut sum = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0); // (-ζ)^k / k!
    for k in 0..200 {
        if k > 0 {
            term = term * (-zeta) / k as f64;
        }
        let contrib = term / (k as f64 + 1.0 - p);
        sum += contrib;
        if k > 2 && contrib.norm() < 1e-18 * sum.norm().max(1e-300) {
            break;
        }
    }
    lead - sum
}

/// `∫_{x1}^{x2} (e^{cx} - 1 - c x 1{x <= comp_upper}) (p/x + q) dx`, exact,
/// for `Re c <= 0` and `0 < x1 < x2`. Pass `comp_upper <= x1` for no
/// compensation.
pub fn linear_piece_exp_integral(
    c: Complex64,
    x1: f64,
    x2: f64,
    p: f64,
    q: f64,
    comp_upper: f64,
) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    if c.norm() == 0.0 {
        return zero;
    }
    let mut total = zero;
    if p != 0.0 {
        total += (ein(-c * x1) - ein(-c * x2)) * p;
    }
    if q != 0.0 {
        // ∫ (e^{cx} - 1) dx
        let width = x2 - x1;
        let e_part = if (c * x2).norm() < 1e-3 {
            // Σ_{k>=1} c^k (x2^{k+1} - x1^{k+1}) / (k+1)!
            let mut s = zero;
            let mut ck = Complex64::new(1.0, 0.0);
            let mut fact = 1.0;
            for k in 1..12 {
                ck *= c;
                fact *= (k + 1) as f64;
                s += ck * ((x2.powi(k + 1) - x1.powi(k + 1)) / fact);
            }
            s
        } else {
            (c * x1).exp() * cexpm1(c * width) / c - width
        };
        total += e_part * q;
    }
    if comp_upper > x1 {
        let xu = comp_upper.min(x2);
        total -= c * (p * (xu - x1) + q * (xu * xu - x1 * x1) / 2.0);
    }
    total
}
