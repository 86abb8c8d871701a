//! Ramsey-sequence Monte Carlo for two lattice ensembles sharing one probe laser.
//!
//! Each shot prepares both ensembles in a coherent state, optionally
//! pre-measures them with the QND probe, lets them accumulate the common
//! laser phase (ensemble B responds with gain 1 + asymmetry) and reads out
//! the population difference. The fringe is linearized at its zero
//! crossing: dN_f = dN₀ + α·C·φ + readout noise. Only the fraction C of
//! each ensemble carries signal, but all N atoms contribute projection noise.

mod compare;
mod fringe;

pub use compare::{analyze_run, compare_clocks, compare_runs, comparison_seeds, default_taus, ClockComparison, ComparisonResult};
pub use fringe::{fit_fringe, ramsey_fringe_scan, FringeFit, FringePoint};

use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose, StreamRng};
use crate::squeezing::{detection_noise, qnd_measure, ConditionalState, SqueezeConfig, STUDY_CONTRAST};
use crate::units::EnsembleSpec;

/// (C_i, C_f) of the two-ensemble comparison.
pub const COMPARISON_CONTRAST: (f64, f64) = (0.55, 0.50);
pub const COMPARISON_ATOMS: f64 = 8500.0;

const LASER_STREAM: u64 = 1 << 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    CssCss,
    SssSss,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaserNoise {
    #[default]
    White,
    /// Approximately 1/f: a sum of octave-spaced AR(1) processes.
    Flicker,
}

/// Per-shot population differences, in atom-number units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpinRecord {
    pub shot_index: u64,
    pub dn_a_pre: f64,
    pub dn_a_final: f64,
    pub dn_b_pre: f64,
    pub dn_b_final: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub mode: Mode,
    /// Ramsey dark time T, s.
    pub ramsey_time: f64,
    /// Full experimental cycle T_c, s.
    pub cycle_time: f64,
    pub n_shots: usize,
    /// Common-mode laser phase noise per shot, rad.
    pub laser_noise_std: f64,
    #[serde(default)]
    pub laser_noise_kind: LaserNoise,
    /// Ensemble B sees the laser phase scaled by 1 + asymmetry.
    pub asymmetry: f64,
    /// Constant clock phase of A relative to B, rad.
    #[serde(default)]
    pub differential_phase: f64,
    pub ensemble_a: EnsembleSpec,
    pub ensemble_b: EnsembleSpec,
    /// Pre-measurement probe. Its `final_readout_std` is not used here: the
    /// final readout noise follows from `final_photon_ratio`.
    pub squeeze: SqueezeConfig,
    /// Distance between the two ensembles, m. Bookkeeping only.
    pub separation: f64,
    /// α, the population-difference swing of a full-contrast fringe.
    pub ramsey_fringe_amplitude: f64,
    /// Final-readout photons relative to a pre-measurement.
    #[serde(default = "default_final_photon_ratio")]
    pub final_photon_ratio: f64,
}

fn default_final_photon_ratio() -> f64 {
    4.0
}

/// Ensemble with N atoms and the given contrast pair, at the thermal cloud
/// size of the apparatus.
pub fn ensemble(n: f64, contrast: (f64, f64)) -> EnsembleSpec {
    EnsembleSpec {
        n_total: n,
        n_eff: n,
        sigma_z: 24.6e-6,
        sigma_y: 24.6e-6,
        z_offset: 0.0,
        contrast_i: contrast.0,
        contrast_f: contrast.1,
    }
}

pub fn study_ensemble() -> EnsembleSpec {
    ensemble(crate::squeezing::STUDY_ATOMS, STUDY_CONTRAST)
}

pub fn comparison_ensemble() -> EnsembleSpec {
    ensemble(COMPARISON_ATOMS, COMPARISON_CONTRAST)
}

/// (C_i, C_f) in the given mode: without probe light the contrast is kept.
pub fn contrast_pair(mode: Mode, e: &EnsembleSpec) -> (f64, f64) {
    match mode {
        Mode::CssCss => css_contrast_pair(e),
        Mode::SssSss => sss_contrast_pair(e),
    }
}

pub fn css_contrast_pair(e: &EnsembleSpec) -> (f64, f64) {
    (e.contrast_i, e.contrast_i)
}

pub fn sss_contrast_pair(e: &EnsembleSpec) -> (f64, f64) {
    (e.contrast_i, e.contrast_f)
}

impl SequenceConfig {
    /// Calibrated two-ensemble comparison: C = 0.55 → 0.50 under the probe,
    /// pre-measurements weighted by β ≈ 0.485, ensemble B responding 10%
    /// more strongly to the laser phase.
    pub fn comparison_preset(mode: Mode) -> Self {
        let n = COMPARISON_ATOMS;
        let (c_i, c_f) = COMPARISON_CONTRAST;
        let mut squeeze = SqueezeConfig::default();
        squeeze.photons_per_measurement = (c_i / c_f).ln() / squeeze.scatter_loss_coeff;
        // β = N/(N + σ_p²) with σ_p the dN-unit pre-measurement noise
        let beta: f64 = 0.485;
        let sigma_jz = (n * (1.0 / beta - 1.0)).sqrt() / 2.0;
        squeeze.detection_noise_scale = sigma_jz * (squeeze.photons_per_measurement * squeeze.quantum_efficiency).sqrt();
        Self {
            mode,
            ramsey_time: 14e-3,
            cycle_time: 1.0,
            n_shots: 20_000,
            laser_noise_std: 0.25,
            laser_noise_kind: LaserNoise::White,
            asymmetry: 0.10,
            differential_phase: 0.0,
            ensemble_a: comparison_ensemble(),
            ensemble_b: comparison_ensemble(),
            squeeze,
            separation: 150e-6,
            ramsey_fringe_amplitude: n,
            final_photon_ratio: 12.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ramsey_time > 0.0) {
            return Err(Error::invalid("ramsey_time", "must be positive"));
        }
        if !(self.cycle_time >= self.ramsey_time) {
            return Err(Error::invalid("cycle_time", "must be at least the Ramsey time"));
        }
        if self.n_shots < 2 {
            return Err(Error::invalid("n_shots", "need at least 2 shots"));
        }
        if !(self.laser_noise_std >= 0.0 && self.laser_noise_std.is_finite()) {
            return Err(Error::invalid("laser_noise_std", "must be finite and non-negative"));
        }
        if !(self.asymmetry > -1.0 && self.asymmetry.is_finite()) {
            return Err(Error::invalid("asymmetry", "must be finite and above -1"));
        }
        if !(self.separation >= 0.0) {
            return Err(Error::invalid("separation", "must be non-negative"));
        }
        if !(self.ramsey_fringe_amplitude > 0.0) {
            return Err(Error::invalid("ramsey_fringe_amplitude", "must be positive"));
        }
        if !(self.final_photon_ratio > 0.0) {
            return Err(Error::invalid("final_photon_ratio", "must be positive"));
        }
        for e in [&self.ensemble_a, &self.ensemble_b] {
            e.validate()?;
            if !(e.n_eff >= 1.0) {
                return Err(Error::invalid("n_eff", "each ensemble needs at least one atom"));
            }
        }
        self.squeeze.validate()?;
        if self.mode == Mode::SssSss && !detection_noise(&self.squeeze).is_finite() {
            return Err(Error::invalid("squeeze.photons_per_measurement", "sss_sss mode needs probe photons"));
        }
        Ok(())
    }

    /// Final-readout noise in J_z units.
    pub fn final_readout_std(&self) -> f64 {
        let ratio_cfg = self.squeeze.with_photons(self.squeeze.photons_per_measurement * self.final_photon_ratio);
        let s = detection_noise(&ratio_cfg);
        if s.is_finite() {
            s
        } else {
            0.0
        }
    }

    /// Fringe slope α·C at the final readout of each ensemble.
    pub fn fringe_slopes(&self) -> (f64, f64) {
        let alpha = self.ramsey_fringe_amplitude;
        (alpha * contrast_pair(self.mode, &self.ensemble_a).1, alpha * contrast_pair(self.mode, &self.ensemble_b).1)
    }
}

fn laser_phases(config: &SequenceConfig, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, Purpose::Shot, LASER_STREAM);
    let s = config.laser_noise_std;
    let mut g = move || -> f64 { StandardNormal.sample(&mut rng) };
    match config.laser_noise_kind {
        LaserNoise::White => (0..config.n_shots).map(|_| s * g()).collect(),
        LaserNoise::Flicker => {
            const OCTAVES: usize = 10;
            // AR(1) with correlation time 2^k shots, each with unit variance
            let rho: Vec<f64> = (0..OCTAVES).map(|k| (-1.0 / (1u64 << k) as f64).exp()).collect();
            let mut state: Vec<f64> = (0..OCTAVES).map(|_| g()).collect();
            let norm = s / (OCTAVES as f64).sqrt();
            (0..config.n_shots)
                .map(|_| {
                    for (x, r) in state.iter_mut().zip(&rho) {
                        *x = r * *x + (1.0 - r * r).sqrt() * g();
                    }
                    norm * state.iter().sum::<f64>()
                })
                .collect()
        }
    }
}

/// Coherent-state population difference: 2·Binomial(N, ½) − N.
pub(crate) fn css_population_difference(n: u64, rng: &mut StreamRng) -> f64 {
    let up = Binomial::new(n, 0.5).expect("p = 1/2 is valid").sample(rng);
    n as f64 - 2.0 * up as f64
}

struct EnsembleShot {
    pre: f64,
    fin: f64,
}

fn shoot_ensemble(
    config: &SequenceConfig,
    e: &EnsembleSpec,
    slope: f64,
    phase: f64,
    sigma_final: f64,
    rng: &mut StreamRng,
) -> EnsembleShot {
    let n = e.n_eff.round() as u64;
    let dn0 = css_population_difference(n, rng);
    let pre = match config.mode {
        Mode::CssCss => 0.0,
        Mode::SssSss => {
            let state = ConditionalState::coherent(n as f64, e.contrast_i);
            let (out, _) = qnd_measure(&state, dn0 / 2.0, &config.squeeze, rng);
            2.0 * out.unwrap_or(0.0)
        }
    };
    let z: f64 = StandardNormal.sample(rng);
    let fin = (dn0 + slope * phase + 2.0 * sigma_final * z).clamp(-(n as f64), n as f64);
    EnsembleShot { pre, fin }
}

/// Shot records of one run. Each shot draws from its own stream, so the
/// output does not depend on the thread count.
pub fn run_sequence(config: &SequenceConfig, seed: u64) -> Result<Vec<SpinRecord>> {
    config.validate()?;
    let laser = laser_phases(config, seed);
    let (slope_a, slope_b) = config.fringe_slopes();
    let sigma_final = config.final_readout_std();
    let gain_b = 1.0 + config.asymmetry;
    Ok(laser
        .par_iter()
        .enumerate()
        .map(|(i, &phi_l)| {
            let mut rng = stream(seed, Purpose::Atoms, i as u64);
            let a = shoot_ensemble(config, &config.ensemble_a, slope_a, phi_l + config.differential_phase, sigma_final, &mut rng);
            let b = shoot_ensemble(config, &config.ensemble_b, slope_b, gain_b * phi_l, sigma_final, &mut rng);
            SpinRecord { shot_index: i as u64, dn_a_pre: a.pre, dn_a_final: a.fin, dn_b_pre: b.pre, dn_b_final: b.fin }
        })
        .collect())
}
