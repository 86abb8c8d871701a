//! Coupling-strength fit to measured projection-noise fluctuations.
//!
//! Model: σ(ω_sum) = √(qpn(ω_sum; g)² + offset² + (slope·ω_sum)²), solved by
//! damped Gauss–Newton (Levenberg–Marquardt with Marquardt's diagonal
//! scaling) on an analytic Jacobian. Frequencies are normalized by δ_c and
//! the largest measured std before iterating.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::qpn_shape;
use crate::error::{Error, Result};
use crate::linalg::Square;
use crate::rng::{stream, Purpose};
use crate::units::{AngularFrequency, CavityParams};

/// One point of the noise-versus-shift dataset, angular units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpnSample {
    pub omega_sum: f64,
    pub std: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl QpnSample {
    pub fn new(omega_sum: f64, std: f64) -> Self {
        Self { omega_sum, std, weight: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub include_rotation_noise: bool,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { include_rotation_noise: false, max_iterations: 500 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpnFitResult {
    pub g_fit: AngularFrequency,
    pub noise_offset: AngularFrequency,
    /// Coefficient of the term linear in ω_sum (rotation noise).
    pub rotation_noise_slope: f64,
    pub residual_rms: AngularFrequency,
    /// One-sigma standard errors from the scaled inverse normal matrix.
    pub g_err: AngularFrequency,
    pub offset_err: AngularFrequency,
    pub slope_err: f64,
    pub iterations: usize,
}

/// Model value σ(ω_sum) for given parameters, angular units.
pub fn qpn_fit_model(omega_sum: f64, g: f64, offset: f64, slope: f64, delta_c: f64) -> f64 {
    let h = qpn_shape(omega_sum / delta_c);
    (g * g * h + offset * offset + (slope * omega_sum).powi(2)).sqrt()
}

struct Problem {
    x: Vec<f64>,
    h: Vec<f64>,
    y: Vec<f64>,
    sw: Vec<f64>,
    n_params: usize,
}

impl Problem {
    fn model(&self, i: usize, p: &[f64]) -> f64 {
        let mut v = p[0] * p[0] * self.h[i] + p[1] * p[1];
        if self.n_params == 3 {
            v += (p[2] * self.x[i]).powi(2);
        }
        v.sqrt()
    }

    fn cost(&self, p: &[f64]) -> f64 {
        (0..self.y.len()).map(|i| (self.sw[i] * (self.model(i, p) - self.y[i])).powi(2)).sum()
    }

    /// Normal matrix JᵀWJ and gradient JᵀWr.
    fn normal(&self, p: &[f64]) -> (Square, Vec<f64>) {
        let np = self.n_params;
        let mut a = Square::zeros(np);
        let mut b = vec![0.0; np];
        for i in 0..self.y.len() {
            let s = self.model(i, p).max(1e-300);
            let mut j = [p[0] * self.h[i] / s, p[1] / s, 0.0];
            if np == 3 {
                j[2] = p[2] * self.x[i] * self.x[i] / s;
            }
            let w = self.sw[i] * self.sw[i];
            let r = s - self.y[i];
            for u in 0..np {
                b[u] += w * j[u] * r;
                for v in 0..np {
                    *a.at_mut(u, v) += w * j[u] * j[v];
                }
            }
        }
        (a, b)
    }
}

/// Fits g, the quadrature noise offset and (optionally) the rotation-noise slope.
pub fn fit_coupling(data: &[QpnSample], params: &CavityParams, options: FitOptions) -> Result<QpnFitResult> {
    let n_params = if options.include_rotation_noise { 3 } else { 2 };
    if data.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: data.len() });
    }
    for s in data {
        if !(s.std > 0.0 && s.std.is_finite()) {
            return Err(Error::domain("measured std must be positive", s.std));
        }
        if !(s.omega_sum >= 0.0 && s.omega_sum.is_finite()) {
            return Err(Error::domain("summed shift must be non-negative", s.omega_sum));
        }
        if !(s.weight >= 0.0 && s.weight.is_finite()) {
            return Err(Error::domain("weights must be non-negative", s.weight));
        }
    }
    let first = data[0].omega_sum;
    if data.iter().all(|s| s.omega_sum == first) {
        return Err(Error::Fit { reason: "degenerate data: all points share one ω_sum".into(), residual_rms: f64::NAN });
    }

    let delta = params.delta_c.0;
    let y_scale = data.iter().map(|s| s.std).fold(0.0, f64::max);
    let x: Vec<f64> = data.iter().map(|s| s.omega_sum / delta).collect();
    let prob = Problem {
        h: x.iter().map(|&v| qpn_shape(v)).collect(),
        x,
        y: data.iter().map(|s| s.std / y_scale).collect(),
        sw: data.iter().map(|s| s.weight.sqrt()).collect(),
        n_params,
    };

    let mut p = initial_guess(&prob);
    let mut cost = prob.cost(&p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        iterations += 1;
        let (a, b) = prob.normal(&p);
        let grad = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if grad < 1e-15 {
            converged = true;
            break;
        }
        let diag_floor = (0..n_params).map(|i| a.at(i, i)).fold(0.0, f64::max) * 1e-12;
        let mut improved = false;
        while lambda < 1e20 {
            let mut damped = a.clone();
            for i in 0..n_params {
                *damped.at_mut(i, i) += lambda * a.at(i, i).max(diag_floor);
            }
            let neg_b: Vec<f64> = b.iter().map(|v| -v).collect();
            let Some(step) = damped.solve_spd(&neg_b, 1e-300) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(&step).map(|(a, d)| a + d).collect();
            let trial_cost = prob.cost(&trial);
            if trial_cost <= cost {
                let rel = (cost - trial_cost) / cost.max(1e-300);
                let step_norm = step.iter().zip(&p).map(|(d, v)| (d / v.abs().max(1e-8)).abs()).fold(0.0, f64::max);
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel < 1e-15 || step_norm < 1e-12 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !improved {
            // no downhill step at any damping: stationary to working precision
            converged = true;
            break;
        }
    }

    let n = data.len() as f64;
    let residual_rms = (cost / n).sqrt() * y_scale;
    if !converged {
        return Err(Error::Fit {
            reason: format!("no convergence after {iterations} iterations"),
            residual_rms,
        });
    }

    let dof = n - n_params as f64;
    let s2 = if dof > 0.0 { cost / dof } else { f64::NAN };
    let (a, _) = prob.normal(&p);
    let cov = a.inverse_spd(1e-14).unwrap_or_else(|| {
        let mut reg = a.clone();
        let eps = (0..n_params).map(|i| a.at(i, i)).fold(0.0, f64::max) * 1e-10 + 1e-300;
        for i in 0..n_params {
            *reg.at_mut(i, i) += eps;
        }
        reg.inverse_spd(0.0).unwrap_or(Square { n: n_params, a: vec![f64::NAN; n_params * n_params] })
    });
    let se = |i: usize| (s2 * cov.at(i, i)).sqrt();
    let slope_scale = y_scale / delta;
    Ok(QpnFitResult {
        g_fit: AngularFrequency(p[0].abs() * y_scale),
        noise_offset: AngularFrequency(p[1].abs() * y_scale),
        rotation_noise_slope: if n_params == 3 { p[2].abs() * slope_scale } else { 0.0 },
        residual_rms: AngularFrequency(residual_rms),
        g_err: AngularFrequency(se(0) * y_scale),
        offset_err: AngularFrequency(se(1) * y_scale),
        slope_err: if n_params == 3 { se(2) * slope_scale } else { 0.0 },
        iterations,
    })
}

/// The model is linear in (g², offset², slope²) for σ², so ordinary least
/// squares on the squared data gives the starting point.
fn initial_guess(prob: &Problem) -> Vec<f64> {
    let np = prob.n_params;
    let mut a = Square::zeros(np);
    let mut b = vec![0.0; np];
    for i in 0..prob.y.len() {
        let row = [prob.h[i], 1.0, prob.x[i] * prob.x[i]];
        let w = prob.sw[i] * prob.sw[i];
        for u in 0..np {
            b[u] += w * row[u] * prob.y[i] * prob.y[i];
            for v in 0..np {
                *a.at_mut(u, v) += w * row[u] * row[v];
            }
        }
    }
    let coef = a.solve_spd(&b, 1e-14).unwrap_or_else(|| vec![1.0; np]);
    let ymin = prob.y.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut p: Vec<f64> = coef.iter().map(|c| c.max(0.0).sqrt()).collect();
    // keep every parameter off zero so its Jacobian column is live
    if p[0] < 1e-3 {
        p[0] = 1e-3;
    }
    if p[1] < 1e-3 * ymin {
        p[1] = 0.5 * ymin;
    }
    if np == 3 && p[2] < 1e-4 {
        p[2] = 1e-4;
    }
    p
}

/// Noise-versus-shift points drawn from the fit model, each std scaled by
/// (1 + scatter·z) with z standard normal. Angular units throughout.
pub fn synthetic_dataset(
    params: &CavityParams,
    g: f64,
    offset: f64,
    slope: f64,
    shifts: &[f64],
    scatter: f64,
    seed: u64,
) -> Vec<QpnSample> {
    let mut rng = stream(seed, Purpose::Synthetic, 0);
    shifts
        .iter()
        .map(|&w| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let clean = qpn_fit_model(w, g, offset, slope, params.delta_c.0);
            QpnSample::new(w, clean * (1.0 + scatter * z))
        })
        .collect()
}
