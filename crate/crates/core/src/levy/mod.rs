//! Lévy–Khintchine data: radial profiles, polar Lévy measures and triplets.

mod measure;
mod profile;

pub use measure::{cumulant, levy_mass, scale_levy, validate_profile, LevyAtom, LevyTriplet, PolarLevyMeasure};
pub use profile::{GeometricTable, Integrability, TableInterpolation, LogPeriodic, RadialProfile};

#[cfg(test)]
mod tests;
