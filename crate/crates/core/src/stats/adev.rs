//! Overlapping Allan deviation of a per-shot differential phase series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdevPoint {
    pub tau: f64,
    pub sigma_y: f64,
    /// One-sigma error bar, σ/√(2·edf) with the white-FM degrees of freedom.
    pub error_bar: f64,
    /// Number of overlapping second differences averaged.
    pub n_samples: usize,
    /// The requested τ was not a multiple of the cycle time and was rounded.
    pub rounded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdevCurve {
    pub points: Vec<AdevPoint>,
    /// Always "overlapping".
    pub estimator: String,
}

/// Converts φ to fractional frequency y = φ/(2πTν) and evaluates the
/// overlapping Allan deviation at the τ values, each rounded to the nearest
/// multiple of `cycle_time`. Duplicate τ after rounding are dropped.
pub fn allan_deviation(
    phase_series: &[f64],
    ramsey_time: f64,
    cycle_time: f64,
    transition_frequency: f64,
    tau_list: &[f64],
) -> Result<AdevCurve> {
    if !(ramsey_time > 0.0 && cycle_time > 0.0 && transition_frequency > 0.0) {
        return Err(Error::invalid("adev", "times and transition frequency must be positive"));
    }
    let n = phase_series.len();
    let scale = 1.0 / (std::f64::consts::TAU * ramsey_time * transition_frequency);
    // integrated fractional frequency, x_k = Σ_{i<k} y_i
    let mut x = Vec::with_capacity(n + 1);
    x.push(0.0);
    let mut acc = 0.0;
    for &phi in phase_series {
        acc += phi * scale;
        x.push(acc);
    }

    let mut requested: Vec<(usize, bool)> = tau_list
        .iter()
        .map(|&tau| {
            let m = (tau / cycle_time).round().max(1.0) as usize;
            let rounded = (m as f64 * cycle_time - tau).abs() > 1e-9 * tau.abs().max(cycle_time);
            (m, rounded)
        })
        .collect();
    requested.sort_by_key(|r| r.0);
    requested.dedup_by_key(|r| r.0);
    if let Some(&(m_max, _)) = requested.last() {
        if n < 2 * m_max {
            return Err(Error::InsufficientData { needed: 2 * m_max, got: n });
        }
    }

    let points = requested
        .into_iter()
        .map(|(m, rounded)| {
            let terms = n - 2 * m + 1;
            let sum: f64 = (0..terms).map(|j| (x[j + 2 * m] - 2.0 * x[j + m] + x[j]).powi(2)).sum();
            let avar = sum / (2.0 * (m * m) as f64 * terms as f64);
            let sigma = avar.sqrt();
            AdevPoint {
                tau: m as f64 * cycle_time,
                sigma_y: sigma,
                error_bar: sigma / (2.0 * white_fm_edf(n, m)).sqrt(),
                n_samples: terms,
                rounded,
            }
        })
        .collect();
    Ok(AdevCurve { points, estimator: "overlapping".into() })
}

/// Equivalent degrees of freedom of the overlapping estimator for white FM.
fn white_fm_edf(n: usize, m: usize) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    let edf = (3.0 * (nf - 1.0) / (2.0 * mf) - 2.0 * (nf - 2.0) / nf) * 4.0 * mf * mf / (4.0 * mf * mf + 5.0);
    edf.max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityFit {
    /// c in σ_y(τ) = c·τ^(−1/2).
    pub coeff: f64,
    /// ln σ_y − ln(c τ^(−1/2)) per point.
    pub residuals: Vec<f64>,
}

/// Least-squares fit of c·τ^(−1/2) in log–log space. Points are weighted
/// by their inverse relative variance (σ/error_bar)² when every point has an
/// error bar, and equally otherwise.
pub fn fit_stability(curve: &AdevCurve) -> Result<StabilityFit> {
    let pts: Vec<&AdevPoint> = curve.points.iter().filter(|p| p.sigma_y > 0.0).collect();
    if pts.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let weighted = pts.iter().all(|p| p.error_bar > 0.0);
    let weight = |p: &AdevPoint| if weighted { (p.sigma_y / p.error_bar).powi(2) } else { 1.0 };
    let logs: Vec<f64> = pts.iter().map(|p| p.sigma_y.ln() + 0.5 * p.tau.ln()).collect();
    let wsum: f64 = pts.iter().map(|p| weight(p)).sum();
    let ln_c = pts.iter().zip(&logs).map(|(p, l)| weight(p) * l).sum::<f64>() / wsum;
    Ok(StabilityFit { coeff: ln_c.exp(), residuals: logs.iter().map(|l| l - ln_c).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn constant_series_is_zero() {
        let c = allan_deviation(&[0.3; 100], 0.014, 1.0, 4.29e14, &[1.0, 5.0, 10.0]).unwrap();
        let y = 0.3 / (std::f64::consts::TAU * 0.014 * 4.29e14);
        assert!(c.points.iter().all(|p| p.sigma_y < 1e-12 * y));
    }

    #[test]
    fn white_noise_follows_inverse_sqrt_tau() {
        let n = 1 << 18;
        let sigma_phi = 0.02;
        let (t, tc, nu) = (0.014, 1.5, 4.2923e14);
        let mut rng = stream(1, Purpose::Synthetic, 7);
        let series: Vec<f64> = (0..n).map(|_| sigma_phi * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        let taus: Vec<f64> = (0..9).map(|k| tc * (1 << k) as f64).collect();
        let curve = allan_deviation(&series, t, tc, nu, &taus).unwrap();
        let y1 = sigma_phi / (std::f64::consts::TAU * t * nu);
        for p in &curve.points {
            let expect = y1 * (tc / p.tau).sqrt();
            assert!((p.sigma_y / expect - 1.0).abs() < 0.05, "tau {} {}", p.tau, p.sigma_y / expect);
            assert!(p.error_bar > 0.0 && !p.rounded);
        }
        let fit = fit_stability(&curve).unwrap();
        assert!((fit.coeff / (y1 * tc.sqrt()) - 1.0).abs() < 0.03);
        // repeating the series leaves short-τ values within their error bars
        let doubled: Vec<f64> = series.iter().chain(&series).copied().collect();
        let c2 = allan_deviation(&doubled, t, tc, nu, &taus[..4]).unwrap();
        for (a, b) in curve.points.iter().zip(&c2.points) {
            assert!((a.sigma_y - b.sigma_y).abs() < a.error_bar);
        }
    }

    #[test]
    fn rounding_and_errors() {
        let series = vec![0.0, 1.0, 0.0, 1.0, 0.5, 0.2];
        let c = allan_deviation(&series, 1.0, 2.0, 1.0, &[2.9, 2.0]).unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!(c.points[0].tau, 2.0);
        let c = allan_deviation(&series, 1.0, 2.0, 1.0, &[2.9]).unwrap();
        assert!(c.points[0].rounded);
        assert!(allan_deviation(&series, 1.0, 1.0, 1.0, &[4.0]).is_err());
        assert_eq!(c.estimator, "overlapping");
    }

    #[test]
    fn stability_fit_exact_and_scaling() {
        let c = 1.58e-15;
        let curve = AdevCurve {
            points: [1.0, 3.0, 10.0, 100.0, 1000.0]
                .iter()
                .map(|&tau| AdevPoint { tau, sigma_y: c / f64::sqrt(tau), error_bar: 0.0, n_samples: 100, rounded: false })
                .collect(),
            estimator: "overlapping".into(),
        };
        let fit = fit_stability(&curve).unwrap();
        assert!((fit.coeff / c - 1.0).abs() < 1e-10);
        // τ → kτ with σ → σ/√k leaves c unchanged
        let k = 7.0;
        let scaled = AdevCurve {
            points: curve.points.iter().map(|p| AdevPoint { tau: p.tau * k, sigma_y: p.sigma_y / f64::sqrt(k), ..*p }).collect(),
            ..curve.clone()
        };
        assert!((fit_stability(&scaled).unwrap().coeff / c - 1.0).abs() < 1e-10);
        let ratio_db = 10.0 * ((1.58f64 / 1.25).powi(2)).log10();
        assert!((ratio_db - 2.03).abs() < 0.005);
    }
}
