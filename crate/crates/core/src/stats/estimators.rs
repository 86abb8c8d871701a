//! Optimal linear estimators for the differential clock phase
//!
//! φ_A − φ_B = [(dN_A,f − β_A dN_A,p) − β_D (dN_B,f − β_B dN_B,p)] / α.
//!
//! For fixed β_D the variance is quadratic in (β_A, β_D β_B) and is solved in
//! closed form; β_D is then found by a one-dimensional search of the profiled
//! variance, finished with an exact parabolic step.

use serde::{Deserialize, Serialize};

use super::{covariance, variance};
use crate::clock::SpinRecord;
use crate::error::{Error, Result};
use crate::linalg::Square;

const MIN_RECORDS: usize = 10;
const SUB_RANGES: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// Optimize β_A, β_B and β_D jointly.
    Full,
    /// No pre-measurement information: β_A = β_B = 0, only β_D is optimized.
    FinalOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSet {
    pub beta_a: f64,
    pub beta_b: f64,
    pub beta_d: f64,
    /// Spread of re-fits over dataset prefixes from half to full length.
    pub beta_a_err: f64,
    pub beta_b_err: f64,
    pub beta_d_err: f64,
    /// Mean of the prefix re-fits.
    pub sub_range_mean: [f64; 3],
    /// Variance of φ_A − φ_B at the optimum, rad².
    pub phase_variance: f64,
}

struct Channels {
    pa: Vec<f64>,
    fa: Vec<f64>,
    pb: Vec<f64>,
    fb: Vec<f64>,
}

impl Channels {
    fn new(records: &[SpinRecord]) -> Self {
        Self {
            pa: records.iter().map(|r| r.dn_a_pre).collect(),
            fa: records.iter().map(|r| r.dn_a_final).collect(),
            pb: records.iter().map(|r| r.dn_b_pre).collect(),
            fb: records.iter().map(|r| r.dn_b_final).collect(),
        }
    }
}

/// Sample moments of the four channels; everything the optimizer needs.
struct Moments {
    /// Covariance matrix over (pa, fa, pb, fb).
    c: [[f64; 4]; 4],
}

const PA: usize = 0;
const FA: usize = 1;
const PB: usize = 2;
const FB: usize = 3;

impl Moments {
    fn new(ch: &Channels) -> Self {
        let cols = [&ch.pa, &ch.fa, &ch.pb, &ch.fb];
        let mut c = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in i..4 {
                let v = if i == j { variance(cols[i]) } else { covariance(cols[i], cols[j]) };
                c[i][j] = v;
                c[j][i] = v;
            }
        }
        Self { c }
    }

    /// Variance of Σ w_k·channel_k.
    fn quad(&self, w: [f64; 4]) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += w[i] * w[j] * self.c[i][j];
            }
        }
        s
    }

    /// Inner closed-form solve at fixed β_D: returns (β_A, γ = β_D β_B, variance).
    fn inner(&self, beta_d: f64) -> Option<(f64, f64, f64)> {
        // y = fa − β_D fb; minimize Var(y − β_A pa + γ pb)
        let c = &self.c;
        let cov_y = |k: usize| c[FA][k] - beta_d * c[FB][k];
        let a = Square { n: 2, a: vec![c[PA][PA], -c[PA][PB], -c[PB][PA], c[PB][PB]] };
        let b = [cov_y(PA), -cov_y(PB)];
        let sol = a.solve_spd(&b, 1e-13)?;
        let (beta_a, gamma) = (sol[0], sol[1]);
        let v = self.quad([-beta_a, 1.0, gamma, -beta_d]);
        Some((beta_a, gamma, v))
    }

    fn final_only(&self) -> (f64, f64) {
        let beta_d = self.c[FA][FB] / self.c[FB][FB];
        (beta_d, self.quad([0.0, 1.0, 0.0, -beta_d]))
    }
}

fn check_channels(m: &Moments, mode: EstimatorMode) -> Result<()> {
    if !(m.c[FB][FB] > 0.0) {
        return Err(Error::Singular { channel: "dn_b_final" });
    }
    if !(m.c[FA][FA] > 0.0) {
        return Err(Error::Singular { channel: "dn_a_final" });
    }
    if mode == EstimatorMode::Full {
        if !(m.c[PA][PA] > 0.0) {
            return Err(Error::Singular { channel: "dn_a_pre" });
        }
        if !(m.c[PB][PB] > 0.0) {
            return Err(Error::Singular { channel: "dn_b_pre" });
        }
        let det = m.c[PA][PA] * m.c[PB][PB] - m.c[PA][PB].powi(2);
        if det <= 1e-12 * m.c[PA][PA] * m.c[PB][PB] {
            return Err(Error::Singular { channel: "dn_a_pre/dn_b_pre" });
        }
    }
    Ok(())
}

/// Returns (β_A, β_B, β_D, variance in dN² units).
fn solve(m: &Moments, mode: EstimatorMode) -> Result<(f64, f64, f64, f64)> {
    check_channels(m, mode)?;
    if mode == EstimatorMode::FinalOnly {
        let (bd, v) = m.final_only();
        return Ok((0.0, 0.0, bd, v));
    }
    let profile = |bd: f64| m.inner(bd).map(|r| r.2).unwrap_or(f64::INFINITY);

    // bracket around the final-only value, widened until it encloses a minimum
    let (start, _) = m.final_only();
    let mut half = 1.0_f64.max(start.abs());
    let (mut lo, mut hi) = (start - half, start + half);
    while profile(lo) < profile(start) || profile(hi) < profile(start) {
        half *= 2.0;
        lo = start - half;
        hi = start + half;
        if half > 1e6 {
            return Err(Error::Singular { channel: "dn_b_final" });
        }
    }
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (profile(x1), profile(x2));
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-9 * (1.0 + start.abs()) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = profile(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = profile(x2);
        }
    }
    // the profile is exactly quadratic in β_D: one parabolic step lands on the vertex
    let x0 = 0.5 * (lo + hi);
    let h = 1e-2 * (1.0 + x0.abs());
    let (fm, f0, fp) = (profile(x0 - h), profile(x0), profile(x0 + h));
    let curv = fp - 2.0 * f0 + fm;
    let beta_d = if curv > 0.0 { x0 - h * (fp - fm) / (2.0 * curv) } else { x0 };
    let (beta_a, gamma, v) = m.inner(beta_d).ok_or(Error::Singular { channel: "dn_a_pre/dn_b_pre" })?;
    let beta_b = if beta_d.abs() > 1e-300 { gamma / beta_d } else { 0.0 };
    Ok((beta_a, beta_b, beta_d, v))
}

/// Jointly optimal (β_A, β_B, β_D) and the resulting phase series.
/// `alpha` is the fitted Ramsey fringe amplitude in atom-number units.
pub fn optimize_estimators(records: &[SpinRecord], alpha: f64, mode: EstimatorMode) -> Result<(EstimatorSet, Vec<f64>)> {
    if records.len() < MIN_RECORDS {
        return Err(Error::InsufficientData { needed: MIN_RECORDS, got: records.len() });
    }
    if !(alpha > 0.0) {
        return Err(Error::domain("fringe amplitude must be positive", alpha));
    }
    let full = Channels::new(records);
    let (beta_a, beta_b, beta_d, v) = solve(&Moments::new(&full), mode)?;

    let n = records.len();
    let mut fits = Vec::with_capacity(SUB_RANGES);
    for k in 0..SUB_RANGES {
        let len = n / 2 + (n - n / 2) * k / (SUB_RANGES - 1);
        if len < MIN_RECORDS {
            continue;
        }
        if let Ok((a, b, d, _)) = solve(&Moments::new(&Channels::new(&records[..len])), mode) {
            fits.push([a, b, d]);
        }
    }
    let mut mean = [0.0; 3];
    let mut std = [0.0; 3];
    if !fits.is_empty() {
        for i in 0..3 {
            mean[i] = fits.iter().map(|f| f[i]).sum::<f64>() / fits.len() as f64;
            std[i] = if fits.len() > 1 {
                (fits.iter().map(|f| (f[i] - mean[i]).powi(2)).sum::<f64>() / (fits.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
        }
    }
    let set = EstimatorSet {
        beta_a,
        beta_b,
        beta_d,
        beta_a_err: std[0],
        beta_b_err: std[1],
        beta_d_err: std[2],
        sub_range_mean: mean,
        phase_variance: v / (alpha * alpha),
    };
    let phases = phase_series(records, &set, alpha);
    Ok((set, phases))
}

/// Per-shot differential phase for given estimators.
pub fn phase_series(records: &[SpinRecord], est: &EstimatorSet, alpha: f64) -> Vec<f64> {
    records
        .iter()
        .map(|r| ((r.dn_a_final - est.beta_a * r.dn_a_pre) - est.beta_d * (r.dn_b_final - est.beta_b * r.dn_b_pre)) / alpha)
        .collect()
}
