//! Atom–cavity coupling from mode and cloud geometry.
//!
//! Axes: X along the cavity, Y the other horizontal axis, Z vertical. The
//! standing wave along X is time-averaged, so an atom at (Y, Z) couples with
//! g_i² = (g0²/2)·exp(−2(Y² + Z²)/w0²). The cloud is Gaussian in Y and Z.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::quad::gaussian_expectation;
use crate::rng::{stream, Purpose};
use crate::units::{AngularFrequency, SPEED_OF_LIGHT};

const QUAD_TOL: f64 = 1e-11;
const SAMPLE_CHUNK: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeGeometry<T = f64> {
    /// 1/e² intensity waist, m.
    pub w0: T,
    /// Peak single-atom coupling.
    pub g0: AngularFrequency<T>,
}

impl<T: Real> ModeGeometry<T> {
    pub fn new(w0: T, g0: AngularFrequency<T>) -> Result<Self> {
        if !(w0 > T::zero()) {
            return Err(Error::invalid("w0", "mode waist must be positive"));
        }
        if !(g0.0 > T::zero()) {
            return Err(Error::invalid("g0", "peak coupling must be positive"));
        }
        Ok(Self { w0, g0 })
    }

    /// Relative intensity exp(−2ρ²/w0²) at squared transverse distance ρ².
    fn profile(&self, rho2: T) -> T {
        (-T::lit(2.0) * rho2 / (self.w0 * self.w0)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudDistribution<T = f64> {
    pub sigma_y: T,
    pub sigma_z: T,
    /// Cloud center relative to the mode axis along Z, m.
    pub z_center: T,
}

impl<T: Real> CloudDistribution<T> {
    pub fn new(sigma_y: T, sigma_z: T, z_center: T) -> Result<Self> {
        if !(sigma_y >= T::zero() && sigma_z >= T::zero()) {
            return Err(Error::invalid("sigma", "cloud widths must be non-negative"));
        }
        Ok(Self { sigma_y, sigma_z, z_center })
    }

    pub fn point() -> Self {
        Self { sigma_y: T::zero(), sigma_z: T::zero(), z_center: T::zero() }
    }

    pub fn shifted(self, z_center: T) -> Self {
        Self { z_center, ..self }
    }
}

/// Radial cloud width √(k_B T/(m ω_r²)) of a thermal cloud in a harmonic trap.
pub fn thermal_radius<T: Real>(temperature: T, trap_frequency_hz: T, mass: T) -> T {
    let omega = T::TAU() * trap_frequency_hz;
    (T::lit(crate::units::BOLTZMANN) * temperature / (mass * omega * omega)).sqrt()
}

/// Mode volume πw0²L/4 of a TEM00 standing-wave mode.
pub fn mode_volume<T: Real>(w0: T, cavity_length: T) -> T {
    T::PI() * w0 * w0 * cavity_length / T::lit(4.0)
}

/// Peak coupling g0 = d0√(ω/(2ε0ħV)) of a unit-strength transition, with d0
/// eliminated through the linewidth: g0² = 3cλ²Γ/(8πV).
pub fn peak_coupling<T: Real>(gamma: AngularFrequency<T>, lambda: T, w0: T, cavity_length: T) -> Result<AngularFrequency<T>> {
    for (what, v) in [("linewidth", gamma.0), ("wavelength", lambda), ("waist", w0), ("cavity length", cavity_length)] {
        if !(v > T::zero()) {
            return Err(Error::domain(what, v.to_f64_lossy()));
        }
    }
    let v = mode_volume(w0, cavity_length);
    let g2 = T::lit(3.0) * T::lit(SPEED_OF_LIGHT) * lambda * lambda * gamma.0 / (T::lit(8.0) * T::PI() * v);
    Ok(AngularFrequency(g2.sqrt()))
}

/// Effective coupling and the ratio N/N_tot of effective to total atoms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoupling<T = f64> {
    pub g_eff: AngularFrequency<T>,
    pub n_eff_fraction: T,
}

/// Gaussian moments ⟨exp(−2k u²/w²)⟩ for k = 1, 2 in one axis.
#[derive(Clone, Copy, Debug)]
struct AxisMoments<T> {
    first: T,
    second: T,
}

fn axis_closed_form<T: Real>(sigma: T, w0: T) -> AxisMoments<T> {
    let s = sigma * sigma / (w0 * w0);
    AxisMoments {
        first: T::one() / (T::one() + T::lit(4.0) * s).sqrt(),
        second: T::one() / (T::one() + T::lit(8.0) * s).sqrt(),
    }
}

fn axis_quadrature<T: Real>(mean: T, sigma: T, w0: T) -> Result<AxisMoments<T>> {
    let w2 = w0 * w0;
    let tol = T::lit(QUAD_TOL).max(T::epsilon() * T::lit(64.0));
    Ok(AxisMoments {
        first: gaussian_expectation(|u| (-T::lit(2.0) * u * u / w2).exp(), mean, sigma, tol)?,
        second: gaussian_expectation(|u| (-T::lit(4.0) * u * u / w2).exp(), mean, sigma, tol)?,
    })
}

fn combine<T: Real>(mode: &ModeGeometry<T>, y: AxisMoments<T>, z: AxisMoments<T>) -> EffectiveCoupling<T> {
    let g0sq_half = mode.g0.0 * mode.g0.0 / T::lit(2.0);
    // ⟨g²⟩ = (g0²/2)·Y1·Z1, ⟨g⁴⟩ = (g0²/2)²·Y2·Z2
    let m2 = g0sq_half * y.first * z.first;
    let m4 = g0sq_half * g0sq_half * y.second * z.second;
    EffectiveCoupling { g_eff: AngularFrequency((m4 / m2).sqrt()), n_eff_fraction: m2 * m2 / m4 }
}

/// g² = ⟨g_i⁴⟩/⟨g_i²⟩ and N/N_tot = ⟨g_i²⟩²/⟨g_i⁴⟩ over the cloud. Closed
/// form for a centered cloud, adaptive quadrature when the cloud is offset.
pub fn effective_coupling<T: Real>(mode: &ModeGeometry<T>, cloud: &CloudDistribution<T>) -> Result<EffectiveCoupling<T>> {
    if cloud.z_center == T::zero() {
        Ok(effective_coupling_closed_form(mode, cloud))
    } else {
        effective_coupling_quadrature(mode, cloud)
    }
}

/// Centered-cloud closed form; ignores `z_center`.
pub fn effective_coupling_closed_form<T: Real>(mode: &ModeGeometry<T>, cloud: &CloudDistribution<T>) -> EffectiveCoupling<T> {
    combine(mode, axis_closed_form(cloud.sigma_y, mode.w0), axis_closed_form(cloud.sigma_z, mode.w0))
}

pub fn effective_coupling_quadrature<T: Real>(mode: &ModeGeometry<T>, cloud: &CloudDistribution<T>) -> Result<EffectiveCoupling<T>> {
    let y = axis_quadrature(T::zero(), cloud.sigma_y, mode.w0)?;
    let z = axis_quadrature(cloud.z_center, cloud.sigma_z, mode.w0)?;
    Ok(combine(mode, y, z))
}

/// Draws `n_atoms` positions from the cloud and returns each atom's g_i².
/// Positions come in fixed-size chunks, each from its own stream, so the list
/// is identical for any thread count.
pub fn sample_atom_couplings(mode: &ModeGeometry, cloud: &CloudDistribution, n_atoms: usize, seed: u64) -> Vec<f64> {
    let g0sq_half = mode.g0.0 * mode.g0.0 / 2.0;
    sample_positions(cloud, n_atoms, seed)
        .into_iter()
        .map(|(y, z)| g0sq_half * mode.profile(y * y + z * z))
        .collect()
}

fn sample_positions(cloud: &CloudDistribution, n_atoms: usize, seed: u64) -> Vec<(f64, f64)> {
    let chunks = n_atoms.div_ceil(SAMPLE_CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream(seed, Purpose::Atoms, c as u64);
            let len = SAMPLE_CHUNK.min(n_atoms - c * SAMPLE_CHUNK);
            (0..len)
                .map(|_| {
                    let y: f64 = StandardNormal.sample(&mut rng);
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (cloud.sigma_y * y, cloud.z_center + cloud.sigma_z * z)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// g_eff and N/N_tot of an explicit list of g_i² weights.
pub fn effective_coupling_of_samples(weights: &[f64]) -> EffectiveCoupling {
    let n = weights.len() as f64;
    let m2 = weights.iter().sum::<f64>() / n;
    let m4 = weights.iter().map(|w| w * w).sum::<f64>() / n;
    EffectiveCoupling { g_eff: AngularFrequency((m4 / m2).sqrt()), n_eff_fraction: m2 * m2 / m4 }
}

/// Lattice transport velocity v = δ_l λ_l / (4π).
pub fn transport_velocity<T: Real>(delta_l: AngularFrequency<T>, lambda_l: T) -> T {
    delta_l.0 * lambda_l / (T::lit(4.0) * T::PI())
}

/// Settings of the sub-ensemble overlap simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSetup {
    pub n_atoms: usize,
    pub n_trials: usize,
    /// Detection noise std relative to each reading's projection noise.
    pub detection_noise: f64,
    /// Place the cloud midway between the two mode positions.
    pub symmetric: bool,
}

impl Default for CorrelationSetup {
    fn default() -> Self {
        Self { n_atoms: 20_000, n_trials: 4_000, detection_noise: 0.0, symmetric: true }
    }
}

/// Correlation of two weighted J_z readings and the resulting change of the
/// combined projection noise of J_z,A − J_z,B.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub separation: f64,
    pub pearson: f64,
    pub qpn_change_db: f64,
    /// Standard error of the Monte Carlo dB value from batch means.
    pub qpn_change_err_db: f64,
    pub analytic_pearson: f64,
    pub analytic_qpn_change_db: f64,
}

const BATCHES: usize = 20;

/// Monte Carlo of two readings of one frozen spin configuration through mode
/// weightings centered at Z = 0 and Z = `separation`.
pub fn ensemble_correlation_vs_separation(
    mode: &ModeGeometry,
    cloud: &CloudDistribution,
    separation: f64,
    setup: &CorrelationSetup,
    seed: u64,
) -> Result<CorrelationPoint> {
    if setup.n_trials < 2 {
        return Err(Error::InsufficientData { needed: 2, got: setup.n_trials });
    }
    if !(separation >= 0.0) {
        return Err(Error::domain("separation must be non-negative", separation));
    }
    if setup.n_atoms == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let cloud = if setup.symmetric { cloud.shifted(separation / 2.0) } else { *cloud };
    let positions = sample_positions(&cloud, setup.n_atoms, seed);
    let (wa, wb): (Vec<f64>, Vec<f64>) = positions
        .iter()
        .map(|&(y, z)| (mode.profile(y * y + z * z), mode.profile(y * y + (z - separation).powi(2))))
        .unzip();
    let mean_a = wa.iter().sum::<f64>() / wa.len() as f64;
    let mean_b = wb.iter().sum::<f64>() / wb.len() as f64;
    // projection-noise std of each normalized reading (spin variance 1/4)
    let qpn_a = (wa.iter().map(|w| w * w).sum::<f64>() / 4.0).sqrt() / mean_a;
    let qpn_b = (wb.iter().map(|w| w * w).sum::<f64>() / 4.0).sqrt() / mean_b;
    let noise = setup.detection_noise;

    let readings: Vec<(f64, f64)> = (0..setup.n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, Purpose::Trial, t as u64);
            let (mut ja, mut jb) = (0.0, 0.0);
            for (chunk_a, chunk_b) in wa.chunks(64).zip(wb.chunks(64)) {
                let bits: u64 = rng.random();
                for (k, (a, b)) in chunk_a.iter().zip(chunk_b).enumerate() {
                    let s = if (bits >> k) & 1 == 1 { 0.5 } else { -0.5 };
                    ja += a * s;
                    jb += b * s;
                }
            }
            ja /= mean_a;
            jb /= mean_b;
            if noise > 0.0 {
                let n = Normal::new(0.0, noise).expect("finite noise");
                ja += qpn_a * n.sample(&mut rng);
                jb += qpn_b * n.sample(&mut rng);
            }
            (ja, jb)
        })
        .collect();

    let xs: Vec<f64> = readings.iter().map(|r| r.0).collect();
    let ys: Vec<f64> = readings.iter().map(|r| r.1).collect();
    let pearson = crate::stats::pearson(&xs, &ys)?;
    let qpn_change_db = qpn_change_of(&readings);
    let batch = setup.n_trials / BATCHES;
    let qpn_change_err_db = if batch >= 2 {
        let vals: Vec<f64> = readings.chunks(batch).take(BATCHES).map(qpn_change_of).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        (var / vals.len() as f64).sqrt()
    } else {
        f64::NAN
    };
    let analytic = overlap_analytic(mode, &cloud, separation, noise)?;
    Ok(CorrelationPoint {
        separation,
        pearson,
        qpn_change_db,
        qpn_change_err_db,
        analytic_pearson: analytic.0,
        analytic_qpn_change_db: analytic.1,
    })
}

fn qpn_change_of(readings: &[(f64, f64)]) -> f64 {
    let n = readings.len() as f64;
    let (ma, mb) = readings.iter().fold((0.0, 0.0), |s, r| (s.0 + r.0, s.1 + r.1));
    let (ma, mb) = (ma / n, mb / n);
    let (mut va, mut vb, mut vd) = (0.0, 0.0, 0.0);
    for &(a, b) in readings {
        va += (a - ma).powi(2);
        vb += (b - mb).powi(2);
        vd += (a - ma - b + mb).powi(2);
    }
    crate::units::db_floored(vd / (va + vb))
}

/// Continuum overlap integrals: Pearson coefficient and the dB change of
/// Var(J_A − J_B) relative to independent ensembles, for weightings centered
/// at Z = 0 and Z = `separation` over the given cloud.
pub fn overlap_analytic(mode: &ModeGeometry, cloud: &CloudDistribution, separation: f64, detection_noise: f64) -> Result<(f64, f64)> {
    let w2 = mode.w0 * mode.w0;
    let y = axis_quadrature(0.0, cloud.sigma_y, mode.w0)?;
    let ez = |f: &dyn Fn(f64) -> f64| gaussian_expectation(f, cloud.z_center, cloud.sigma_z, QUAD_TOL);
    let prof = |z: f64, c: f64| (-2.0 * (z - c).powi(2) / w2).exp();
    let a1 = y.first * ez(&|z| prof(z, 0.0))?;
    let b1 = y.first * ez(&|z| prof(z, separation))?;
    let a2 = y.second * ez(&|z| prof(z, 0.0).powi(2))?;
    let b2 = y.second * ez(&|z| prof(z, separation).powi(2))?;
    let ab = y.second * ez(&|z| prof(z, 0.0) * prof(z, separation))?;
    let noise = 1.0 + detection_noise * detection_noise;
    let va = a2 / (a1 * a1) * noise;
    let vb = b2 / (b1 * b1) * noise;
    let cov = ab / (a1 * b1);
    let pearson = cov / (va * vb).sqrt();
    let change = crate::units::db_floored((va + vb - 2.0 * cov) / (va + vb));
    Ok((pearson, change))
}
