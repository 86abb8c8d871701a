//! CSS–CSS against SSS–SSS: estimators, phase noise, Allan deviation and bounds.

use serde::{Deserialize, Serialize};

use super::{contrast_pair, run_sequence, Mode, SequenceConfig, SpinRecord};
use crate::error::{Error, Result};
use crate::stats::{
    allan_deviation, fit_stability, optimize_estimators, qpn_limit_difference, sql_limit_difference, variance,
    AdevCurve, EstimatorMode, EstimatorSet,
};
use crate::units::db_from_ratio;

/// Seed offset separating the SSS run from the CSS run of one comparison.
const SSS_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// Analysis of one run. Phases and bounds refer to φ_A − φ_B per shot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub mode: Mode,
    pub estimators: EstimatorSet,
    pub phase_series: Vec<f64>,
    pub phase_std: f64,
    /// Standard error of `phase_std` for Gaussian shots.
    pub phase_std_err: f64,
    pub adev_curve: AdevCurve,
    /// c in σ_y(τ) = c·τ^(−1/2), with τ in seconds.
    pub stability_coeff: f64,
    pub qpn_bound: f64,
    pub sql_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockComparison {
    pub css: ComparisonResult,
    pub sss: ComparisonResult,
    /// 10·log₁₀ of the CSS/SSS phase variance ratio.
    pub enhancement_db: f64,
    /// Same from the squared ratio of the fitted stability coefficients.
    pub enhancement_adev_db: f64,
}

/// τ = m·T_c for m = 1, 2, 4, … while at least 50 disjoint τ windows fit.
pub fn default_taus(n_shots: usize, cycle_time: f64) -> Vec<f64> {
    let mut taus = Vec::new();
    let mut m = 1usize;
    while n_shots / m >= 50 {
        taus.push(m as f64 * cycle_time);
        m *= 2;
    }
    taus
}

/// Estimators, phase series, ADEV and bounds of one run. The fringe slope
/// used to convert dN to phase is α·C with C the final contrast of the mode.
pub fn analyze_run(
    records: &[SpinRecord],
    config: &SequenceConfig,
    taus: &[f64],
    transition_frequency: f64,
) -> Result<ComparisonResult> {
    let (slope, _) = config.fringe_slopes();
    let est_mode = match config.mode {
        Mode::CssCss => EstimatorMode::FinalOnly,
        Mode::SssSss => EstimatorMode::Full,
    };
    let (estimators, phase_series) = optimize_estimators(records, slope, est_mode)?;
    let adev_curve = allan_deviation(&phase_series, config.ramsey_time, config.cycle_time, transition_frequency, taus)?;
    let stability_coeff = fit_stability(&adev_curve)?.coeff;
    let phase_std = variance(&phase_series).sqrt();
    let (c_i, _) = contrast_pair(config.mode, &config.ensemble_a);
    let (n_a, n_b) = (config.ensemble_a.n_eff, config.ensemble_b.n_eff);
    Ok(ComparisonResult {
        mode: config.mode,
        estimators,
        phase_std_err: phase_std / (2.0 * (phase_series.len() as f64 - 1.0)).sqrt(),
        phase_std,
        phase_series,
        adev_curve,
        stability_coeff,
        qpn_bound: qpn_limit_difference(n_a, n_b, c_i),
        sql_bound: sql_limit_difference(n_a, n_b, c_i, estimators.beta_d),
    })
}

/// Seeds of the CSS and SSS runs of one comparison. The SSS seed is
/// derived from `seed` so the two runs are statistically independent.
pub fn comparison_seeds(seed: u64) -> (u64, u64) {
    (seed, seed ^ SSS_SEED_MIX)
}

/// Runs both modes and compares them.
pub fn compare_clocks(css: &SequenceConfig, sss: &SequenceConfig, seed: u64, transition_frequency: f64) -> Result<ClockComparison> {
    check_pair(css, sss)?;
    let (css_seed, sss_seed) = comparison_seeds(seed);
    let css_records = run_sequence(css, css_seed)?;
    let sss_records = run_sequence(sss, sss_seed)?;
    compare_runs(css, &css_records, sss, &sss_records, transition_frequency)
}

fn check_pair(css: &SequenceConfig, sss: &SequenceConfig) -> Result<()> {
    if css.mode != Mode::CssCss || sss.mode != Mode::SssSss {
        return Err(Error::invalid("mode", "comparison needs one css_css and one sss_sss configuration"));
    }
    if css.cycle_time != sss.cycle_time {
        return Err(Error::invalid("cycle_time", "both runs must share the cycle time"));
    }
    Ok(())
}

/// Comparison of two recorded runs on a common τ grid.
pub fn compare_runs(
    css: &SequenceConfig,
    css_records: &[SpinRecord],
    sss: &SequenceConfig,
    sss_records: &[SpinRecord],
    transition_frequency: f64,
) -> Result<ClockComparison> {
    check_pair(css, sss)?;
    let n = css_records.len().min(sss_records.len());
    let taus = default_taus(n, css.cycle_time);
    if taus.is_empty() {
        return Err(Error::InsufficientData { needed: 50, got: n });
    }
    let css_res = analyze_run(css_records, css, &taus, transition_frequency)?;
    let sss_res = analyze_run(sss_records, sss, &taus, transition_frequency)?;
    let enhancement_db = db_from_ratio((css_res.phase_std / sss_res.phase_std).powi(2))?;
    let enhancement_adev_db = db_from_ratio((css_res.stability_coeff / sss_res.stability_coeff).powi(2))?;
    Ok(ClockComparison { css: css_res, sss: sss_res, enhancement_db, enhancement_adev_db })
}
