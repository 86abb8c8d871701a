//! Dressed atom–cavity response in the dispersive regime.
//!
//! `n` atoms in a state coupled to the cavity pull the cavity-like dressed
//! mode by ω = (−δ_c + √(δ_c² + Ω²))/2 with Ω = 2g√n. The shift is measured
//! from the bare cavity, so it vanishes for an empty cavity and inverts
//! exactly to `n = ω(δ_c + ω)/g²`.

mod fit;

pub use fit::{fit_coupling, qpn_fit_model, synthetic_dataset, FitOptions, QpnFitResult, QpnSample};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::units::{AngularFrequency, CavityParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Down,
    Up,
}

/// Pair of dispersive shifts for one J_z measurement: ω↓ from the |↓⟩
/// population, ω↑ measured after a π-pulse swaps the populations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftMeasurement<T = f64> {
    pub omega_down: AngularFrequency<T>,
    pub omega_up: AngularFrequency<T>,
    pub omega_sum: AngularFrequency<T>,
}

impl<T: Real> ShiftMeasurement<T> {
    pub fn new(omega_down: AngularFrequency<T>, omega_up: AngularFrequency<T>) -> Self {
        Self { omega_down, omega_up, omega_sum: omega_down + omega_up }
    }

    /// Simulated readout of a state with the given populations. `spin` is
    /// irrelevant for the shift itself: after the π-pulse the |↑⟩ atoms are
    /// the coupled ones.
    pub fn of_populations(n_down: T, n_up: T, params: &CavityParams<T>) -> Result<Self> {
        Ok(Self::new(
            dressed_shift(n_down, Spin::Down, params)?,
            dressed_shift(n_up, Spin::Up, params)?,
        ))
    }

    /// Population difference dN = N↓ − N↑ recovered through the exact inversion.
    pub fn population_difference(&self, params: &CavityParams<T>) -> Result<T> {
        Ok(atom_number_from_shift(self.omega_down, params)? - atom_number_from_shift(self.omega_up, params)?)
    }
}

/// Shift of the cavity-like dressed mode caused by `n_atoms` coupled atoms.
///
/// `spin` names which population is read out. Both populations couple with
/// the same g once swapped into |↓⟩, so the value only depends on `n_atoms`.
pub fn dressed_shift<T: Real>(n_atoms: T, _spin: Spin, params: &CavityParams<T>) -> Result<AngularFrequency<T>> {
    if !(n_atoms >= T::zero()) {
        return Err(Error::domain("atom number must be non-negative", n_atoms.to_f64_lossy()));
    }
    let delta = params.delta_c.0;
    if !(delta > T::zero()) {
        return Err(Error::domain("cavity detuning must be positive", delta.to_f64_lossy()));
    }
    let g2n = params.g_eff.0 * params.g_eff.0 * n_atoms;
    let four = T::lit(4.0);
    // (−δ + √(δ² + 4g²n))/2 written without cancellation
    let root = (delta * delta + four * g2n).sqrt();
    Ok(AngularFrequency(T::lit(2.0) * g2n / (delta + root)))
}

/// Vacuum Rabi splitting Ω = 2g√n of the resonant system.
pub fn vacuum_rabi_splitting<T: Real>(n_atoms: T, params: &CavityParams<T>) -> AngularFrequency<T> {
    AngularFrequency(T::lit(2.0) * params.g_eff.0 * n_atoms.sqrt())
}

/// Single-state inversion N = ω(δ_c/g²)(1 + ω/δ_c).
pub fn atom_number_from_shift<T: Real>(omega: AngularFrequency<T>, params: &CavityParams<T>) -> Result<T> {
    let (w, delta, g2) = inversion_inputs(omega, params)?;
    Ok(w * (delta / g2) * (T::one() + w / delta))
}

/// Total atom number of an equal superposition from ω_sum = ω↓ + ω↑:
/// N = ω_sum(δ_c/g²)(1 + ω_sum/(2δ_c)).
pub fn atom_number_from_sum_shift<T: Real>(omega_sum: AngularFrequency<T>, params: &CavityParams<T>) -> Result<T> {
    let (w, delta, g2) = inversion_inputs(omega_sum, params)?;
    Ok(w * (delta / g2) * (T::one() + w / (T::lit(2.0) * delta)))
}

fn inversion_inputs<T: Real>(omega: AngularFrequency<T>, params: &CavityParams<T>) -> Result<(T, T, T)> {
    let w = omega.0;
    if !(w >= T::zero()) {
        return Err(Error::domain("frequency shift must be non-negative", w.to_f64_lossy()));
    }
    let g2 = params.g_eff.0 * params.g_eff.0;
    if !(g2 > T::zero()) {
        return Err(Error::domain("coupling must be positive to invert a shift", params.g_eff.0.to_f64_lossy()));
    }
    Ok((w, params.delta_c.0, g2))
}

/// Projection-noise fluctuation Δ(ω↑ − ω↓) of a CSS as a function of the
/// summed shift: g·√[(ω_sum²/2 + δ_c ω_sum)/(ω_sum + δ_c)²].
pub fn qpn_shift_noise<T: Real>(omega_sum: AngularFrequency<T>, params: &CavityParams<T>) -> Result<AngularFrequency<T>> {
    let w = omega_sum.0;
    if !(w >= T::zero()) {
        return Err(Error::domain("frequency shift must be non-negative", w.to_f64_lossy()));
    }
    let delta = params.delta_c.0;
    Ok(AngularFrequency(params.g_eff.0 * qpn_shape(w / delta).sqrt()))
}

/// Dimensionless profile h(x) = (x²/2 + x)/(x + 1)² with x = ω_sum/δ_c.
pub(crate) fn qpn_shape<T: Real>(x: T) -> T {
    let one = T::one();
    (x * x / T::lit(2.0) + x) / ((x + one) * (x + one))
}

/// The same fluctuation expressed through the atom number:
/// g²√N / √(δ_c² + Ω↓²) with Ω↓ the splitting of N/2 atoms.
pub fn qpn_shift_noise_from_atoms<T: Real>(n_atoms: T, params: &CavityParams<T>) -> Result<AngularFrequency<T>> {
    if !(n_atoms >= T::zero()) {
        return Err(Error::domain("atom number must be non-negative", n_atoms.to_f64_lossy()));
    }
    let g = params.g_eff.0;
    let delta = params.delta_c.0;
    let omega_down = vacuum_rabi_splitting(n_atoms / T::lit(2.0), params).0;
    Ok(AngularFrequency(g * g * n_atoms.sqrt() / (delta * delta + omega_down * omega_down).sqrt()))
}

/// Summed shift ω↓ + ω↑ of an equal superposition of `n_atoms`.
pub fn sum_shift<T: Real>(n_atoms: T, params: &CavityParams<T>) -> Result<AngularFrequency<T>> {
    let half = n_atoms / T::lit(2.0);
    Ok(dressed_shift(half, Spin::Down, params)? + dressed_shift(half, Spin::Up, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand_distr::{Binomial, Distribution};

    fn params() -> CavityParams<f64> {
        CavityParams::strontium()
    }

    #[test]
    fn empty_cavity_has_no_shift() {
        assert_eq!(dressed_shift(0.0, Spin::Down, &params()).unwrap().0, 0.0);
        assert_eq!(atom_number_from_sum_shift(AngularFrequency(0.0), &params()).unwrap(), 0.0);
        assert_eq!(qpn_shift_noise(AngularFrequency(0.0), &params()).unwrap().0, 0.0);
    }

    #[test]
    fn negative_inputs_are_domain_errors() {
        assert!(dressed_shift(-1.0, Spin::Up, &params()).is_err());
        assert!(atom_number_from_sum_shift(AngularFrequency(-1.0), &params()).is_err());
        assert!(qpn_shift_noise(AngularFrequency(-1.0), &params()).is_err());
    }

    #[test]
    fn operating_point_shift() {
        // 8.8×10³ atoms split equally give a summed shift of ≈2π×215 kHz
        let p = params();
        let sum = sum_shift(8.8e3, &p).unwrap();
        assert!((sum.hz() - 214.87e3).abs() < 0.1e3, "{}", sum.hz());
        let n = atom_number_from_sum_shift(AngularFrequency::from_khz(215.0), &p).unwrap();
        assert!((n - 8806.0).abs() < 5.0, "{n}");
    }

    #[test]
    fn small_splitting_limit() {
        let p = params();
        let delta = p.delta_c.0;
        let g = p.g_eff.0;
        for &n in &[10.0, 100.0, 1000.0, 3000.0] {
            let omega = vacuum_rabi_splitting(n, &p).0;
            if omega / delta >= 0.2 {
                continue;
            }
            let shift = dressed_shift(n, Spin::Down, &p).unwrap().0;
            let lin = g * g * n / delta;
            assert!((shift / lin - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn single_state_inversion() {
        let p = params();
        for &n in &[1.0, 50.0, 4400.0, 9.0e4] {
            let w = dressed_shift(n, Spin::Down, &p).unwrap();
            assert_relative_eq!(atom_number_from_shift(w, &p).unwrap(), n, max_relative = 1e-11);
        }
    }

    #[test]
    fn shift_measurement_population_difference() {
        let p = params();
        let m = ShiftMeasurement::of_populations(5200.0, 4800.0, &p).unwrap();
        assert_eq!(m.omega_sum.0, m.omega_down.0 + m.omega_up.0);
        assert_relative_eq!(m.population_difference(&p).unwrap(), 400.0, max_relative = 1e-9);
    }

    #[test]
    fn qpn_noise_small_shift_limit() {
        // small-shift regime: Δ → g²√N/δ_c
        let p = params();
        for (n, tol) in [(10.0, 1e-3), (100.0, 5e-3)] {
            let sum = sum_shift(n, &p).unwrap();
            let eq5 = qpn_shift_noise(sum, &p).unwrap().0;
            let lim = p.g_eff.0.powi(2) * f64::sqrt(n) / p.delta_c.0;
            assert!((eq5 / lim - 1.0).abs() < tol);
        }
        // at N = 10⁴ the limit gives 2π×2.70 kHz
        let lim4 = p.g_eff.0.powi(2) * 100.0 / p.delta_c.0;
        assert!((AngularFrequency(lim4).hz() - 2704.0).abs() < 1.0);
    }

    #[test]
    fn binomial_sampling_matches_noise_formula() {
        let p = params();
        let n = 10_000u64;
        let trials = 100_000;
        let mut rng = stream(11, Purpose::Synthetic, 0);
        let bin = Binomial::new(n, 0.5).unwrap();
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..trials {
            let down = bin.sample(&mut rng) as f64;
            let up = n as f64 - down;
            let d = dressed_shift(up, Spin::Up, &p).unwrap().0 - dressed_shift(down, Spin::Down, &p).unwrap().0;
            s += d;
            s2 += d * d;
        }
        let mean = s / trials as f64;
        let std = (s2 / trials as f64 - mean * mean).sqrt();
        let model = qpn_shift_noise(sum_shift(n as f64, &p).unwrap(), &p).unwrap().0;
        assert!((std / model - 1.0).abs() < 0.02, "{std} vs {model}");
    }

    proptest! {
        #[test]
        fn sum_inversion_round_trip(n in 1e2f64..1e5) {
            let p = params();
            let back = atom_number_from_sum_shift(sum_shift(n, &p).unwrap(), &p).unwrap();
            prop_assert!((back / n - 1.0).abs() < 1e-9);
        }

        #[test]
        fn shift_is_monotone(n in 0.0f64..1e6, dn in 1e-3f64..1e3) {
            let p = params();
            let a = dressed_shift(n, Spin::Down, &p).unwrap().0;
            let b = dressed_shift(n + dn, Spin::Down, &p).unwrap().0;
            prop_assert!(b > a);
        }

        #[test]
        fn sum_form_equals_atom_form(n in 1e2f64..1e6) {
            let p = params();
            let a = qpn_shift_noise(sum_shift(n, &p).unwrap(), &p).unwrap().0;
            let b = qpn_shift_noise_from_atoms(n, &p).unwrap().0;
            prop_assert!((a / b - 1.0).abs() < 1e-9);
        }
    }
}
