//! Ramsey fringe scans over the phase of the final π/2 pulse.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{contrast_pair, css_population_difference, SequenceConfig};
use crate::error::{Error, Result};
use crate::linalg::Square;
use crate::rng::{stream, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub phase: f64,
    pub mean_dn: f64,
    /// Standard error of `mean_dn`.
    pub std_err: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// Fitted α·C.
    pub amplitude: f64,
    pub amplitude_err: f64,
    pub phase_offset: f64,
    pub offset: f64,
}

/// Mean population difference of ensemble A against the scan phase, with
/// the laser noise of the configuration applied shot by shot.
pub fn ramsey_fringe_scan(config: &SequenceConfig, phase_list: &[f64], shots_per_phase: usize, seed: u64) -> Result<Vec<FringePoint>> {
    if phase_list.len() < 5 {
        return Err(Error::InsufficientData { needed: 5, got: phase_list.len() });
    }
    if shots_per_phase < 2 {
        return Err(Error::InsufficientData { needed: 2, got: shots_per_phase });
    }
    config.validate()?;
    let e = &config.ensemble_a;
    let slope = config.ramsey_fringe_amplitude * contrast_pair(config.mode, e).1;
    let sigma_final = config.final_readout_std();
    let n = e.n_eff.round() as u64;
    Ok(phase_list
        .par_iter()
        .enumerate()
        .map(|(k, &phase)| {
            let mut rng = stream(seed, Purpose::Fringe, k as u64);
            let dn: Vec<f64> = (0..shots_per_phase)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let phi = phase + config.laser_noise_std * z;
                    let d: f64 = StandardNormal.sample(&mut rng);
                    css_population_difference(n, &mut rng) + slope * phi.sin() + 2.0 * sigma_final * d
                })
                .collect();
            let m = crate::stats::mean(&dn);
            FringePoint { phase, mean_dn: m, std_err: (crate::stats::variance(&dn) / dn.len() as f64).sqrt() }
        })
        .collect())
}

/// Weighted linear fit of mean dN = A·sin φ + B·cos φ + c.
pub fn fit_fringe(points: &[FringePoint]) -> Result<FringeFit> {
    if points.len() < 4 {
        return Err(Error::InsufficientData { needed: 4, got: points.len() });
    }
    let mut m = Square::zeros(3);
    let mut rhs = [0.0; 3];
    for p in points {
        let w = if p.std_err > 0.0 { 1.0 / (p.std_err * p.std_err) } else { 1.0 };
        let basis = [p.phase.sin(), p.phase.cos(), 1.0];
        for i in 0..3 {
            rhs[i] += w * basis[i] * p.mean_dn;
            for j in 0..3 {
                *m.at_mut(i, j) += w * basis[i] * basis[j];
            }
        }
    }
    let cov = m.inverse_spd(1e-12).ok_or(Error::Singular { channel: "fringe phases" })?;
    let sol: Vec<f64> = (0..3).map(|i| (0..3).map(|j| cov.at(i, j) * rhs[j]).sum()).collect();
    let (a, b) = (sol[0], sol[1]);
    let amplitude = a.hypot(b);
    let amplitude_err = if amplitude > 0.0 {
        ((a * a * cov.at(0, 0) + b * b * cov.at(1, 1) + 2.0 * a * b * cov.at(0, 1)) / (amplitude * amplitude)).sqrt()
    } else {
        cov.at(0, 0).sqrt()
    };
    Ok(FringeFit { amplitude, amplitude_err, phase_offset: b.atan2(a), offset: sol[2] })
}
