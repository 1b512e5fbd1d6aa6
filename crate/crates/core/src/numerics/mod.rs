//! Shared numerical machinery: adaptive Gauss–Kronrod quadrature on finite and
//! half-infinite intervals, Gaussian distribution helpers and a few complex
//! special functions used for closed-form radial integrals.

mod quadrature;
mod special;

pub use quadrature::{
    integrate, integrate_with_breaks, QuadValue, QuadratureResult, Tolerance, MAX_DEPTH,
};
pub use special::{
    cexpm1, clog1p, ein, expint_general, gamma, linear_piece_exp_integral, gaussian_cdf, gaussian_density, gaussian_interval_mass, gaussian_sf,
    ln_gamma, truncated_gaussian_mean,
};
