//! From shot records to stability figures: estimators, bounds, Allan deviation.

mod adev;
mod estimators;

pub use adev::{allan_deviation, fit_stability, AdevCurve, AdevPoint, StabilityFit};
pub use estimators::{optimize_estimators, phase_series, EstimatorMode, EstimatorSet};

use crate::error::{Error, Result};
use crate::num::Real;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Unbiased sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("series", format!("length mismatch {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: xs.len() });
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Singular { channel: "x" });
    }
    if syy == 0.0 {
        return Err(Error::Singular { channel: "y" });
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Projection-noise limit 1/(C_i√(N_A + N_B)) of the comparison, with C_i
/// as the fringe slope. Normalized to the pair as a whole; the
/// single-shot noise of φ_A − φ_B itself is [`qpn_limit_difference`].
pub fn qpn_limit<T: Real>(n_a: T, n_b: T, c_i: T) -> T {
    T::one() / (c_i * (n_a + n_b).sqrt())
}

/// Standard quantum limit counting only the C_i fraction of atoms as
/// participating, with ensemble B weighted by β_D:
/// ½·√(1/(C_i N_A) + β_D²/(C_i N_B)). Equals 1/√(C_i(N_A + N_B)) for
/// N_A = N_B and β_D = 1, the same normalization as [`qpn_limit`].
pub fn sql_limit<T: Real>(n_a: T, n_b: T, c_i: T, beta_d: T) -> T {
    sql_limit_difference(n_a, n_b, c_i, beta_d) / T::lit(2.0)
}

/// Single-shot projection noise of φ_A − φ_B: √(1/N_A + 1/N_B)/C_i.
pub fn qpn_limit_difference<T: Real>(n_a: T, n_b: T, c_i: T) -> T {
    (T::one() / n_a + T::one() / n_b).sqrt() / c_i
}

/// Standard quantum limit of φ_A − φ_B: √(1/(C_i N_A) + β_D²/(C_i N_B)).
pub fn sql_limit_difference<T: Real>(n_a: T, n_b: T, c_i: T, beta_d: T) -> T {
    (T::one() / (c_i * n_a) + beta_d * beta_d / (c_i * n_b)).sqrt()
}
