//! Measurement-based spin squeezing with a Gaussian QND readout.
//!
//! A population measurement with detection noise σ² fuses with the prior
//! J_z distribution; what remains is the conditional variance. The spin
//! noise reduction R compares the residual of the final readout, after
//! subtracting β times the pre-measurement, with the projection noise N/4.
//! All variances here are in J_z units.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::rng::{stream, Purpose};
use crate::units::{db_floored, ratio_from_db};

/// Contrast at the single-ensemble squeezing operating point, before and
/// after probing with 2.3×10⁴ photons.
pub const STUDY_CONTRAST: (f64, f64) = (0.71, 0.60);
pub const STUDY_PHOTONS: f64 = 2.3e4;
pub const STUDY_ATOMS: f64 = 2.4e4;
pub const STUDY_EFFICIENCY: f64 = 0.28;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezeConfig {
    /// Probe photons per pre-measurement.
    pub photons_per_measurement: f64,
    pub quantum_efficiency: f64,
    /// a in σ_det = a/√(n_ph·Q).
    pub detection_noise_scale: f64,
    /// η in C_f = C_i·exp(−η·n_ph).
    pub scatter_loss_coeff: f64,
    pub excess_antisqueeze_db: f64,
    /// Readout noise of the final measurement. `None` uses the
    /// pre-measurement σ_det.
    #[serde(default)]
    pub final_readout_std: Option<f64>,
}

impl Default for SqueezeConfig {
    fn default() -> Self {
        Self {
            photons_per_measurement: STUDY_PHOTONS,
            quantum_efficiency: STUDY_EFFICIENCY,
            detection_noise_scale: 0.0,
            scatter_loss_coeff: default_scatter_loss(),
            excess_antisqueeze_db: 9.0,
            final_readout_std: None,
        }
    }
}

/// η reproducing the 0.71 → 0.60 contrast drop at 2.3×10⁴ photons.
pub fn default_scatter_loss() -> f64 {
    (STUDY_CONTRAST.0 / STUDY_CONTRAST.1).ln() / STUDY_PHOTONS
}

impl SqueezeConfig {
    /// Operating point of the single-ensemble study: R = −4.8 dB observed,
    /// −6.7 dB after removing the final readout noise, at N = 2.4×10⁴.
    pub fn study_calibrated() -> Self {
        let qpn = STUDY_ATOMS / 4.0;
        let sigma_f = calibrate_final_readout(-4.8, -6.7, qpn).expect("static calibration");
        let scale = calibrate_noise_scale(-4.8, STUDY_PHOTONS, STUDY_EFFICIENCY, STUDY_ATOMS, Some(sigma_f))
            .expect("static calibration");
        Self { detection_noise_scale: scale, final_readout_std: Some(sigma_f), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("photons_per_measurement", self.photons_per_measurement),
            ("detection_noise_scale", self.detection_noise_scale),
            ("scatter_loss_coeff", self.scatter_loss_coeff),
            ("excess_antisqueeze_db", self.excess_antisqueeze_db),
        ];
        for (field, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(field, format!("must be finite and non-negative, got {v}")));
            }
        }
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(Error::invalid("quantum_efficiency", "must lie in (0, 1]"));
        }
        if let Some(s) = self.final_readout_std {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::invalid("final_readout_std", "must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn with_photons(self, n_ph: f64) -> Self {
        Self { photons_per_measurement: n_ph, ..self }
    }

    /// Contrast left after one pre-measurement.
    pub fn contrast_after(&self, c_i: f64) -> f64 {
        c_i * (-self.scatter_loss_coeff * self.photons_per_measurement).exp()
    }

    pub fn final_noise(&self) -> f64 {
        self.final_readout_std.unwrap_or_else(|| detection_noise(self))
    }
}

/// σ_det = a/√(n_ph·Q). Without photons no information is gained and the
/// result is +∞.
pub fn detection_noise(config: &SqueezeConfig) -> f64 {
    let nq = config.photons_per_measurement * config.quantum_efficiency;
    if nq <= 0.0 {
        return f64::INFINITY;
    }
    config.detection_noise_scale / nq.sqrt()
}

/// Gaussian fusion of a prior variance with a measurement of noise
/// variance `noise_var`.
pub fn fused_variance<T: Real>(prior_var: T, noise_var: T) -> T {
    if noise_var == T::zero() {
        return T::zero();
    }
    prior_var * noise_var / (prior_var + noise_var)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalState {
    pub mean_jz: f64,
    pub var_jz: f64,
    /// Variance of the conjugate quadrature.
    pub var_antisqueeze: f64,
    pub contrast: f64,
    /// Projection-noise variance N/4 of the coherent state.
    pub qpn_var: f64,
}

impl ConditionalState {
    pub fn coherent(n_atoms: f64, contrast: f64) -> Self {
        let v = n_atoms / 4.0;
        Self { mean_jz: 0.0, var_jz: v, var_antisqueeze: v, contrast, qpn_var: v }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.qpn_var > 0.0) {
            return Err(Error::invalid("qpn_var", "must be positive"));
        }
        if !(self.var_jz >= 0.0 && self.var_antisqueeze > 0.0) {
            return Err(Error::invalid("var_jz", "variances must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.contrast) {
            return Err(Error::invalid("contrast", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// One QND measurement of a spin whose actual projection is `true_jz`.
///
/// Returns the outcome (`None` when no photons are sent) and the state
/// conditioned on it. Backaction adds qpn²/(Q·σ²) to the conjugate
/// quadrature, the variance a Q = 1 probe of the same strength would leave
/// on a minimum-uncertainty state; the excess factor then scales the whole
/// conjugate variance once per measurement.
pub fn qnd_measure<R: Rng + ?Sized>(
    state: &ConditionalState,
    true_jz: f64,
    config: &SqueezeConfig,
    rng: &mut R,
) -> (Option<f64>, ConditionalState) {
    let sigma = detection_noise(config);
    if !sigma.is_finite() {
        return (None, *state);
    }
    let z: f64 = StandardNormal.sample(rng);
    let outcome = true_jz + sigma * z;
    let s2 = sigma * sigma;
    let (var, mean) = if s2 == 0.0 {
        (0.0, outcome)
    } else {
        let var = fused_variance(state.var_jz, s2);
        (var, var * (state.mean_jz / state.var_jz + outcome / s2))
    };
    let backaction = if s2 == 0.0 {
        f64::INFINITY
    } else {
        state.qpn_var * state.qpn_var / (config.quantum_efficiency * s2)
    };
    let next = ConditionalState {
        mean_jz: mean,
        var_jz: var,
        var_antisqueeze: (state.var_antisqueeze + backaction) * ratio_from_db(config.excess_antisqueeze_db),
        contrast: config.contrast_after(state.contrast),
        qpn_var: state.qpn_var,
    };
    (Some(outcome), next)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseReduction {
    /// Var(J_f − βJ_p)/qpn_var.
    pub ratio: f64,
    /// `ratio` in dB, floored at −60 dB.
    pub r_db: f64,
    pub beta: f64,
}

/// R = min_β Var(J_f − βJ_p)/(N/4) from (pre, final) pairs, β = Cov/Var.
pub fn spin_noise_reduction(records: &[(f64, f64)], qpn_var: f64) -> Result<NoiseReduction> {
    if records.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: records.len() });
    }
    if !(qpn_var > 0.0) {
        return Err(Error::domain("qpn variance must be positive", qpn_var));
    }
    let n = records.len() as f64;
    let (mp, mf) = records.iter().fold((0.0, 0.0), |(a, b), (p, f)| (a + p, b + f));
    let (mp, mf) = (mp / n, mf / n);
    let (mut vp, mut vf, mut cpf) = (0.0, 0.0, 0.0);
    for (p, f) in records {
        let (dp, df) = (p - mp, f - mf);
        vp += dp * dp;
        vf += df * df;
        cpf += dp * df;
    }
    if vp == 0.0 {
        return Err(Error::Singular { channel: "jz_pre" });
    }
    let beta = cpf / vp;
    let resid = ((vf - beta * cpf) / (n - 1.0)).max(0.0);
    let ratio = resid / qpn_var;
    Ok(NoiseReduction { ratio, r_db: db_floored(ratio), beta })
}

/// Removes the final-readout variance from an observed R.
pub fn inferred_intrinsic_squeezing(r_observed_db: f64, final_detection_var: f64, qpn_var: f64) -> Result<f64> {
    let observed = ratio_from_db(r_observed_db);
    let intrinsic = observed - final_detection_var / qpn_var;
    if !(intrinsic > 0.0) {
        return Err(Error::domain(
            "final detection variance exceeds the observed difference variance",
            final_detection_var,
        ));
    }
    Ok(db_floored(intrinsic))
}

/// ξ = R·C_i/C_f².
pub fn wineland_parameter<T: Real>(r_ratio: T, c_i: T, c_f: T) -> Result<T> {
    let one = T::one();
    if !(c_f > T::zero() && c_f <= one) {
        return Err(Error::domain("final contrast must lie in (0, 1]", c_f.to_f64_lossy()));
    }
    if !(c_i > T::zero() && c_i <= one) {
        return Err(Error::domain("initial contrast must lie in (0, 1]", c_i.to_f64_lossy()));
    }
    if !(r_ratio > T::zero()) {
        return Err(Error::domain("noise ratio must be positive", r_ratio.to_f64_lossy()));
    }
    Ok(r_ratio * c_i / (c_f * c_f))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyPoint {
    pub psi: f64,
    /// V(ψ)/(N/4) of the state.
    pub noise_rel_qpn: f64,
    /// Same for a minimum-uncertainty state with the same var_jz.
    pub unitary_rel_qpn: f64,
}

/// Noise of the quadrature rotated by ψ, relative to projection noise.
pub fn tomography_curve(state: &ConditionalState, psi_list: &[f64]) -> Result<Vec<TomographyPoint>> {
    state.validate()?;
    let v = state.qpn_var;
    let unitary_anti = if state.var_jz > 0.0 { v * v / state.var_jz } else { f64::INFINITY };
    Ok(psi_list
        .iter()
        .map(|&psi| {
            let (s, c) = psi.sin_cos();
            let mix = |anti: f64| {
                let s2 = s * s;
                // exact zeros of sin ψ must not multiply an infinite variance
                let a = if s2 == 0.0 { 0.0 } else { anti * s2 };
                (state.var_jz * c * c + a) / v
            };
            TomographyPoint { psi, noise_rel_qpn: mix(state.var_antisqueeze), unitary_rel_qpn: mix(unitary_anti) }
        })
        .collect())
}

/// Closed-form observed R for a CSS prior: x/(1+x) + f with x = σ_det²/V
/// and f = σ_final²/V.
pub fn model_noise_reduction(config: &SqueezeConfig, n_atoms: f64) -> f64 {
    let v = n_atoms / 4.0;
    let sigma = detection_noise(config);
    let f = config.final_noise().powi(2) / v;
    if !sigma.is_finite() {
        return 1.0 + f;
    }
    let x = sigma * sigma / v;
    x / (1.0 + x) + f
}

/// Detection-noise scale a that makes [`model_noise_reduction`] equal
/// `target_r_db` at the given operating point.
pub fn calibrate_noise_scale(
    target_r_db: f64,
    n_ph: f64,
    quantum_efficiency: f64,
    n_atoms: f64,
    final_readout_std: Option<f64>,
) -> Result<f64> {
    if !(target_r_db < 0.0) {
        return Err(Error::domain("target noise reduction must be below 0 dB", target_r_db));
    }
    if !(n_ph > 0.0 && quantum_efficiency > 0.0 && n_atoms > 0.0) {
        return Err(Error::invalid("calibration", "photons, efficiency and atom number must be positive"));
    }
    let v = n_atoms / 4.0;
    let r = ratio_from_db(target_r_db);
    let x = match final_readout_std {
        // equal noise on both windows: x/(1+x) + x = r
        None => {
            let b = 2.0 - r;
            (-b + (b * b + 4.0 * r).sqrt()) / 2.0
        }
        Some(sf) => {
            let s = r - sf * sf / v;
            if !(s > 0.0) {
                return Err(Error::domain("final readout noise alone exceeds the target", sf));
            }
            s / (1.0 - s)
        }
    };
    Ok((x * v * n_ph * quantum_efficiency).sqrt())
}

/// Final readout noise implied by an observed and an intrinsic R.
pub fn calibrate_final_readout(observed_db: f64, intrinsic_db: f64, qpn_var: f64) -> Result<f64> {
    let d = ratio_from_db(observed_db) - ratio_from_db(intrinsic_db);
    if !(d >= 0.0) {
        return Err(Error::domain("intrinsic R must not exceed the observed R", intrinsic_db));
    }
    Ok((d * qpn_var).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_ph: f64,
    pub r_db: f64,
    pub r_inferred_db: f64,
    pub contrast_i: f64,
    pub contrast_f: f64,
    /// C_i/C_f².
    pub penalty: f64,
    pub xi_db: f64,
    pub xi_inferred_db: f64,
    pub beta: f64,
    /// Closed-form R at this photon number, dB.
    pub r_model_db: f64,
}

const TRIALS_PER_STREAM: usize = 1024;

/// Simulated (pre, final) pairs for one photon number.
pub fn simulate_pairs(config: &SqueezeConfig, n_atoms: f64, contrast_i: f64, n_trials: usize, seed: u64, row: u64) -> Vec<(f64, f64)> {
    let qpn = n_atoms / 4.0;
    let sigma_f = config.final_noise();
    let chunks = n_trials.div_ceil(TRIALS_PER_STREAM);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream(seed, Purpose::Trial, (row << 24) | c as u64);
            let len = TRIALS_PER_STREAM.min(n_trials - c * TRIALS_PER_STREAM);
            (0..len)
                .map(|_| {
                    let state = ConditionalState::coherent(n_atoms, contrast_i);
                    let jz = qpn.sqrt() * Distribution::<f64>::sample(&StandardNormal, &mut rng);
                    let (pre, _) = qnd_measure(&state, jz, config, &mut rng);
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (pre.unwrap_or(0.0), jz + sigma_f * z)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// R, contrast penalty and ξ against probe photon number.
pub fn sweep_probe_strength(
    photon_list: &[f64],
    base: &SqueezeConfig,
    n_atoms: f64,
    contrast_i: f64,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if photon_list.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    base.validate()?;
    if n_trials < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n_trials });
    }
    let qpn = n_atoms / 4.0;
    photon_list
        .iter()
        .enumerate()
        .map(|(row, &n_ph)| {
            let config = base.with_photons(n_ph);
            config.validate()?;
            let pairs = simulate_pairs(&config, n_atoms, contrast_i, n_trials, seed, row as u64);
            let nr = if detection_noise(&config).is_finite() {
                spin_noise_reduction(&pairs, qpn)?
            } else {
                let finals: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                let ratio = crate::stats::variance(&finals) / qpn;
                NoiseReduction { ratio, r_db: db_floored(ratio), beta: 0.0 }
            };
            let final_var = config.final_noise().powi(2);
            let inferred_ratio = (nr.ratio - final_var / qpn).max(0.0);
            let c_f = config.contrast_after(contrast_i);
            let penalty = contrast_i / (c_f * c_f);
            Ok(SweepRow {
                n_ph,
                r_db: nr.r_db,
                r_inferred_db: db_floored(inferred_ratio),
                contrast_i,
                contrast_f: c_f,
                penalty,
                xi_db: db_floored(wineland_parameter(nr.ratio.max(1e-300), contrast_i, c_f)?),
                xi_inferred_db: db_floored(inferred_ratio * penalty),
                beta: nr.beta,
                r_model_db: db_floored(model_noise_reduction(&config, n_atoms)),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::db_from_ratio;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn study() -> SqueezeConfig {
        SqueezeConfig::study_calibrated()
    }

    #[test]
    fn detection_noise_scaling() {
        let c = SqueezeConfig { detection_noise_scale: 100.0, ..Default::default() };
        let s1 = detection_noise(&c);
        let s4 = detection_noise(&c.with_photons(4.0 * c.photons_per_measurement));
        assert_relative_eq!(s1 / s4, 2.0, max_relative = 1e-14);
        assert!(detection_noise(&c.with_photons(0.0)).is_infinite());
        assert!(detection_noise(&c.with_photons(1e30)) < 1e-10);
    }

    #[test]
    fn scatter_coefficient() {
        assert!((default_scatter_loss() - 7.319e-6).abs() < 1e-9);
        let c = SqueezeConfig::default();
        assert_relative_eq!(c.contrast_after(0.71), 0.60, max_relative = 1e-12);
        // two windows with half the photons each compose to the same loss
        let half = c.with_photons(c.photons_per_measurement / 2.0);
        assert_relative_eq!(half.contrast_after(half.contrast_after(0.71)), 0.60, max_relative = 1e-12);
    }

    #[test]
    fn single_measurement_fusion() {
        let n = 2.4e4;
        let c = study();
        let s = ConditionalState::coherent(n, 0.71);
        let (out, next) = qnd_measure(&s, 12.0, &c, &mut stream(1, Purpose::Synthetic, 0));
        let s2 = detection_noise(&c).powi(2);
        assert!(out.is_some());
        assert_relative_eq!(next.var_jz / s.qpn_var, s2 / (s.qpn_var + s2), max_relative = 1e-12);
        assert_relative_eq!(next.contrast, 0.60, max_relative = 1e-12);
        assert!(next.var_jz * next.var_antisqueeze >= s.qpn_var.powi(2));
    }

    #[test]
    fn noiseless_measurement() {
        let c = SqueezeConfig { detection_noise_scale: 0.0, ..Default::default() };
        let s = ConditionalState::coherent(1e4, 1.0);
        let (out, next) = qnd_measure(&s, 7.5, &c, &mut stream(1, Purpose::Synthetic, 0));
        assert_eq!(out, Some(7.5));
        assert_eq!(next.var_jz, 0.0);
        assert_eq!(next.mean_jz, 7.5);
    }

    #[test]
    fn no_photons_leaves_state_alone() {
        let c = study().with_photons(0.0);
        let s = ConditionalState::coherent(1e4, 0.7);
        let (out, next) = qnd_measure(&s, 3.0, &c, &mut stream(1, Purpose::Synthetic, 0));
        assert_eq!(out, None);
        assert_eq!(next, s);
    }

    #[test]
    fn excess_antisqueezing_shifts_tomography() {
        let n = 2.4e4;
        let s = ConditionalState::coherent(n, 0.71);
        let mut rng = stream(3, Purpose::Synthetic, 0);
        let (_, with) = qnd_measure(&s, 0.0, &study(), &mut rng);
        let plain = SqueezeConfig { excess_antisqueeze_db: 0.0, ..study() };
        let (_, without) = qnd_measure(&s, 0.0, &plain, &mut rng);
        let half_pi = std::f64::consts::FRAC_PI_2;
        let a = tomography_curve(&with, &[0.0, half_pi]).unwrap();
        let b = tomography_curve(&without, &[0.0, half_pi]).unwrap();
        assert_relative_eq!(a[0].noise_rel_qpn, with.var_jz / s.qpn_var, max_relative = 1e-12);
        let gap = db_from_ratio(a[1].noise_rel_qpn / b[1].noise_rel_qpn).unwrap();
        assert!((gap - 9.0).abs() < 1e-9, "{gap}");
        // Q-limited anti-squeezing lies above the unitary bound
        assert!(b[1].noise_rel_qpn > b[1].unitary_rel_qpn);
    }

    #[test]
    fn tomography_is_pi_periodic() {
        let s = ConditionalState { mean_jz: 0.0, var_jz: 1000.0, var_antisqueeze: 9e4, contrast: 0.6, qpn_var: 6000.0 };
        let psis: Vec<f64> = (0..40).map(|i| i as f64 * 0.1 - 2.0).collect();
        let shifted: Vec<f64> = psis.iter().map(|p| p + std::f64::consts::PI).collect();
        let a = tomography_curve(&s, &psis).unwrap();
        let b = tomography_curve(&s, &shifted).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_relative_eq!(p.noise_rel_qpn, q.noise_rel_qpn, max_relative = 1e-12);
            assert_relative_eq!(p.unitary_rel_qpn, q.unitary_rel_qpn, max_relative = 1e-12);
        }
    }

    #[test]
    fn noise_reduction_limits() {
        let same: Vec<(f64, f64)> = (0..100).map(|i| (i as f64, i as f64)).collect();
        let nr = spin_noise_reduction(&same, 25.0).unwrap();
        assert_eq!(nr.r_db, crate::units::DB_FLOOR);
        assert_relative_eq!(nr.beta, 1.0, max_relative = 1e-12);
        let mut rng = stream(4, Purpose::Synthetic, 0);
        let n = 1e4;
        let unc: Vec<(f64, f64)> = (0..20000)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                (a * 50.0, b * 50.0)
            })
            .collect();
        let nr = spin_noise_reduction(&unc, n / 4.0).unwrap();
        assert!(nr.r_db.abs() < 0.1 && nr.beta.abs() < 0.03, "{nr:?}");
        assert!(spin_noise_reduction(&[(1.0, 2.0), (1.0, 3.0)], 1.0).is_err());
    }

    #[test]
    fn beta_matches_numeric_minimum() {
        let pairs = simulate_pairs(&study(), 2.4e4, 0.71, 5000, 11, 0);
        let nr = spin_noise_reduction(&pairs, 6000.0).unwrap();
        let var_at = |b: f64| crate::stats::variance(&pairs.iter().map(|(p, f)| f - b * p).collect::<Vec<_>>());
        // the variance is quadratic in β: its vertex from three samples
        let h = 0.1;
        let (m, z, p) = (var_at(nr.beta - h), var_at(nr.beta), var_at(nr.beta + h));
        let vertex = nr.beta - h * (p - m) / (2.0 * (p - 2.0 * z + m));
        assert!((vertex - nr.beta).abs() < 1e-12, "{}", vertex - nr.beta);
        assert_relative_eq!(z / 6000.0, nr.ratio, max_relative = 1e-10);
    }

    #[test]
    fn wineland_values() {
        assert_relative_eq!(wineland_parameter(1.0f64, 1.0, 1.0).unwrap(), 1.0);
        let xi = wineland_parameter(ratio_from_db(-4.8f64), 0.71, 0.60).unwrap();
        assert!((xi - 0.653).abs() < 1e-3);
        let xi_db = db_from_ratio(xi).unwrap();
        assert!((xi_db + 1.85).abs() < 0.01, "{xi_db}");
        let xi_int = db_from_ratio(wineland_parameter(ratio_from_db(-6.7f64), 0.71, 0.60).unwrap()).unwrap();
        assert!((xi_int + 3.7).abs() < 0.06, "{xi_int}");
        assert!(wineland_parameter(0.5, 0.7, 0.0).is_err());
        assert!(wineland_parameter(0.5f32, 0.7, 0.6).is_ok());
    }

    #[test]
    fn calibration_values() {
        let c = study();
        assert!((c.detection_noise_scale - 3242.0).abs() < 5.0, "{}", c.detection_noise_scale);
        assert!((c.final_readout_std.unwrap() - 26.5).abs() < 0.1);
        let r = model_noise_reduction(&c, STUDY_ATOMS);
        assert!((db_from_ratio(r).unwrap() + 4.8).abs() < 1e-10);
        let inferred = inferred_intrinsic_squeezing(-4.8, c.final_noise().powi(2), STUDY_ATOMS / 4.0).unwrap();
        assert!((inferred + 6.7).abs() < 1e-10);
        assert_relative_eq!(inferred_intrinsic_squeezing(-3.0, 0.0, 100.0).unwrap(), -3.0, max_relative = 1e-12);
        assert!(calibrate_noise_scale(0.0, 2.3e4, 0.28, 2.4e4, None).is_err());
        // equal-noise model, round trip
        let a = calibrate_noise_scale(-3.0, 2.3e4, 0.28, 2.4e4, None).unwrap();
        let eq = SqueezeConfig { detection_noise_scale: a, final_readout_std: None, ..Default::default() };
        assert!((db_from_ratio(model_noise_reduction(&eq, 2.4e4)).unwrap() + 3.0).abs() < 1e-10);
    }

    #[test]
    fn halving_efficiency_costs_three_db() {
        // strong measurement, no final noise: R ≈ σ_det²/V ∝ 1/Q
        let c = SqueezeConfig { detection_noise_scale: 30.0, final_readout_std: Some(0.0), ..Default::default() };
        let half = SqueezeConfig { quantum_efficiency: c.quantum_efficiency / 2.0, ..c };
        let r1 = model_noise_reduction(&c, 1e4);
        let r2 = model_noise_reduction(&half, 1e4);
        assert!(r1 < 1e-3);
        let d = db_from_ratio(r2 / r1).unwrap();
        assert!((d - 3.01).abs() < 0.01, "{d}");
    }

    #[test]
    fn simulated_decomposition_matches_closed_form() {
        let c = SqueezeConfig { detection_noise_scale: 2500.0, final_readout_std: None, ..Default::default() };
        let n = 2.4e4;
        let rows = sweep_probe_strength(&[c.photons_per_measurement], &c, n, 0.71, 10_000, 21).unwrap();
        let v = n / 4.0;
        let s2 = detection_noise(&c).powi(2);
        let expect = (v * s2 / (v + s2) + s2) / v;
        let got = ratio_from_db(rows[0].r_db);
        // relative std of a variance estimate over 10⁴ trials is about √(2/10⁴)
        assert!((got / expect - 1.0).abs() < 3.0 * (2.0f64 / 1e4).sqrt(), "{got} {expect}");
    }

    #[test]
    fn sweep_shape() {
        let c = study();
        let photons: Vec<f64> = (1..=20).map(|i| i as f64 * 4e3).collect();
        let rows = sweep_probe_strength(&photons, &c, STUDY_ATOMS, 0.71, 2000, 5).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].r_model_db < w[0].r_model_db);
            assert!(w[1].penalty > w[0].penalty);
        }
        for r in &rows {
            assert!(r.xi_db >= r.r_db - 1e-12);
            assert!(r.penalty >= 1.0);
        }
        let model_xi: Vec<f64> = rows.iter().map(|r| r.r_model_db + db_from_ratio(r.penalty).unwrap()).collect();
        let k = (0..model_xi.len()).min_by(|&a, &b| model_xi[a].total_cmp(&model_xi[b])).unwrap();
        assert!(k > 0 && k < model_xi.len() - 1, "{k}");
        // bit-identical reruns
        let again = sweep_probe_strength(&photons[..3], &c, STUDY_ATOMS, 0.71, 2000, 5).unwrap();
        assert_eq!(&rows[..3], &again[..]);
    }

    #[test]
    fn no_probe_limit() {
        let c = SqueezeConfig { final_readout_std: Some(0.0), ..study() };
        let rows = sweep_probe_strength(&[0.0], &c, STUDY_ATOMS, 0.71, 20_000, 8).unwrap();
        assert!(rows[0].r_db.abs() < 0.1, "{:?}", rows[0]);
        assert_relative_eq!(rows[0].contrast_f, 0.71);
        // with a calibrated final readout the inferred value still reaches 0 dB
        let rows = sweep_probe_strength(&[0.0], &study(), STUDY_ATOMS, 0.71, 20_000, 8).unwrap();
        assert!(rows[0].r_inferred_db.abs() < 0.1, "{:?}", rows[0]);
    }

    proptest! {
        #[test]
        fn fusion_never_increases_variance(prior in 1e-3f64..1e6, noise in 0.0f64..1e6) {
            let v = fused_variance(prior, noise);
            prop_assert!(v <= prior && v <= noise.max(0.0) + 1e-12);
        }

        #[test]
        fn measurement_respects_uncertainty(scale in 1.0f64..1e4, q in 0.05f64..1.0, n_ph in 1.0f64..1e5, seed: u64) {
            let c = SqueezeConfig { detection_noise_scale: scale, quantum_efficiency: q, photons_per_measurement: n_ph, ..Default::default() };
            let s = ConditionalState::coherent(1e4, 0.7);
            let (_, next) = qnd_measure(&s, 1.0, &c, &mut stream(seed, Purpose::Synthetic, 0));
            prop_assert!(next.var_jz <= s.qpn_var);
            prop_assert!(next.var_jz * next.var_antisqueeze >= s.qpn_var.powi(2) * (1.0 - 1e-12));
            prop_assert!(next.contrast <= s.contrast && next.contrast >= 0.0);
        }

        #[test]
        fn wineland_at_least_r(r in 1e-3f64..10.0, ci in 0.05f64..1.0, frac in 0.05f64..1.0) {
            let cf = ci * frac;
            prop_assert!(wineland_parameter(r, ci, cf).unwrap() >= r);
        }
    }
}
