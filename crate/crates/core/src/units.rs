//! Shared domain types, unit conventions and physical constants.
//!
//! Every frequency is stored as an angular frequency in rad/s. Values quoted
//! as "2π × f" are built with [`AngularFrequency::from_hz`] and shown with
//! [`AngularFrequency::hz`]. Atom counts are reals: Monte Carlo averages and
//! effective atom numbers are rarely integers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of a strontium-87 atom, kg.
pub const SR87_MASS: f64 = 86.908_877_5 * ATOMIC_MASS_UNIT;
/// Strontium-87 clock transition frequency, Hz.
pub const SR87_CLOCK_FREQUENCY_HZ: f64 = 4.2923e14;

/// Floor applied when a power ratio is reported in dB for a vanishing ratio.
pub const DB_FLOOR: f64 = -60.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngularFrequency<T = f64>(pub T);

impl<T: Real> AngularFrequency<T> {
    pub fn new(rad_per_s: T) -> Self {
        Self(rad_per_s)
    }

    /// `2π × hz`.
    pub fn from_hz(hz: T) -> Self {
        Self(T::TAU() * hz)
    }

    pub fn from_khz(khz: T) -> Self {
        Self::from_hz(khz * T::lit(1e3))
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn hz(self) -> T {
        self.0 / T::TAU()
    }

    pub fn zero() -> Self {
        Self(T::zero())
    }
}

impl<T: Real> fmt::Display for AngularFrequency<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2π×{} Hz", self.hz())
    }
}

impl<T: Real> std::ops::Add for AngularFrequency<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

/// Bare cavity and atomic transition constants of the coupled system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityParams<T = f64> {
    /// Effective single-atom vacuum coupling g.
    pub g_eff: AngularFrequency<T>,
    /// Cavity power decay rate κ.
    pub kappa: AngularFrequency<T>,
    /// Atomic linewidth Γ of the probed transition.
    pub gamma: AngularFrequency<T>,
    /// Cavity detuning from the |↓⟩→|e⟩ transition.
    pub delta_c: AngularFrequency<T>,
    /// Mode waist, m.
    pub w0: T,
    /// Cavity length, m.
    pub cavity_length: T,
    /// Probe transition wavelength, m.
    pub lambda_probe: T,
    /// Lattice wavelength, m.
    pub lambda_lattice: T,
}

impl<T: Real> CavityParams<T> {
    /// Parameters of the strontium cavity-QED apparatus.
    pub fn strontium() -> Self {
        Self {
            g_eff: AngularFrequency::from_khz(T::lit(5.2)),
            kappa: AngularFrequency::from_khz(T::lit(158.0)),
            gamma: AngularFrequency::from_khz(T::lit(7.48)),
            delta_c: AngularFrequency::from_khz(T::lit(1000.0)),
            w0: T::lit(71e-6),
            cavity_length: T::lit(6.9720e-2),
            lambda_probe: T::lit(689e-9),
            lambda_lattice: T::lit(813e-9),
        }
    }

    /// Checks the invariants. `g_eff` may be zero (uncoupled limit).
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kappa", self.kappa.0),
            ("gamma", self.gamma.0),
            ("delta_c", self.delta_c.0),
            ("w0", self.w0),
            ("cavity_length", self.cavity_length),
            ("lambda_probe", self.lambda_probe),
            ("lambda_lattice", self.lambda_lattice),
        ];
        for (field, v) in positive {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::invalid(field, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.g_eff.0 >= T::zero() && self.g_eff.0.is_finite()) {
            return Err(Error::invalid("g_eff", "must be non-negative and finite"));
        }
        if self.kappa.0 <= self.gamma.0 {
            return Err(Error::invalid("kappa", "expected kappa > gamma"));
        }
        if self.w0 >= self.cavity_length {
            return Err(Error::invalid("w0", "mode waist must be smaller than the cavity length"));
        }
        Ok(())
    }

    pub fn with_coupling(self, g_eff: AngularFrequency<T>) -> Self {
        Self { g_eff, ..self }
    }
}

/// Atom number, cloud geometry and contrast of one ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec<T = f64> {
    pub n_total: T,
    pub n_eff: T,
    /// Vertical cloud standard deviation, m.
    pub sigma_z: T,
    /// Radial cloud standard deviation, m.
    pub sigma_y: T,
    /// Cloud center relative to the mode axis, m.
    pub z_offset: T,
    pub contrast_i: T,
    pub contrast_f: T,
}

impl<T: Real> EnsembleSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_eff >= T::zero()) {
            return Err(Error::invalid("n_eff", "must be non-negative"));
        }
        if self.n_eff > self.n_total {
            return Err(Error::invalid("n_eff", "must not exceed n_total"));
        }
        if !(self.sigma_z >= T::zero() && self.sigma_y >= T::zero()) {
            return Err(Error::invalid("sigma", "cloud widths must be non-negative"));
        }
        let one = T::one();
        if !(self.contrast_i <= one && self.contrast_i >= T::zero()) {
            return Err(Error::invalid("contrast_i", "must lie in [0, 1]"));
        }
        if !(self.contrast_f >= T::zero() && self.contrast_f <= self.contrast_i) {
            return Err(Error::invalid("contrast_f", "must satisfy 0 <= contrast_f <= contrast_i"));
        }
        Ok(())
    }
}

/// Collective spin projection J_z = (N↓ − N↑)/2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinProjection<T = f64> {
    pub jz: T,
    pub n_down: T,
    pub n_up: T,
}

impl<T: Real> SpinProjection<T> {
    pub fn from_populations(n_down: T, n_up: T) -> Self {
        Self { jz: (n_down - n_up) / T::lit(2.0), n_down, n_up }
    }

    /// Population difference dN = N↓ − N↑ = 2 J_z.
    pub fn population_difference(&self) -> T {
        self.n_down - self.n_up
    }

    pub fn validate(&self, n_eff: T) -> Result<()> {
        if self.n_down < T::zero() || self.n_up < T::zero() {
            return Err(Error::invalid("spin_projection", "populations must be non-negative"));
        }
        if self.n_down + self.n_up > n_eff {
            return Err(Error::invalid("spin_projection", "populations exceed the ensemble size"));
        }
        Ok(())
    }
}

pub fn db_from_ratio<T: Real>(ratio: T) -> Result<T> {
    if !(ratio > T::zero()) || !ratio.is_finite() {
        return Err(Error::domain("power ratio must be positive and finite", ratio.to_f64_lossy()));
    }
    Ok(T::lit(10.0) * ratio.log10())
}

pub fn ratio_from_db<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// dB of a ratio, clamped to [`DB_FLOOR`] so degenerate (zero) ratios stay finite.
pub fn db_floored(ratio: f64) -> f64 {
    if ratio <= 0.0 {
        return DB_FLOOR;
    }
    (10.0 * ratio.log10()).max(DB_FLOOR)
}

/// Single-atom cooperativity 4g²/(κΓ).
pub fn cooperativity<T: Real>(params: &CavityParams<T>) -> T {
    let g = params.g_eff.0;
    T::lit(4.0) * g * g / (params.kappa.0 * params.gamma.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn db_examples() {
        assert_eq!(db_from_ratio(1.0_f64).unwrap(), 0.0);
        assert_relative_eq!(db_from_ratio(100.0_f64).unwrap(), 20.0, epsilon = 1e-12);
        let r = 10f64.powf(-0.48);
        assert_relative_eq!(db_from_ratio(r).unwrap(), -4.8, epsilon = 1e-12);
        assert_relative_eq!(db_from_ratio(0.331_f64).unwrap(), -4.8, epsilon = 0.01);
        assert!(db_from_ratio(0.0_f64).is_err());
        assert!(db_from_ratio(-1.0_f64).is_err());
    }

    #[test]
    fn db_floor() {
        assert_eq!(db_floored(0.0), DB_FLOOR);
        assert_eq!(db_floored(1e-12), DB_FLOOR);
        assert_relative_eq!(db_floored(0.5), -3.0103, epsilon = 1e-4);
    }

    #[test]
    fn cooperativity_of_apparatus() {
        let p = CavityParams::<f64>::strontium();
        let c = cooperativity(&p);
        assert_relative_eq!(c, 4.0 * 5.2 * 5.2 / (158.0 * 7.48), max_relative = 1e-12);
        assert!((c - 0.092).abs() < 0.0005);
        // collective cooperativity N·C at N = 10⁴
        assert!((1e4 * c - 915.0).abs() < 5.0);
        assert_eq!(cooperativity(&p.with_coupling(AngularFrequency::zero())), 0.0);
    }

    #[test]
    fn generic_over_f32() {
        let p = CavityParams::<f32>::strontium();
        assert!((cooperativity(&p) - 0.0915).abs() < 1e-3);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn display_round_trip() {
        let w = AngularFrequency::from_hz(158e3_f64);
        assert_relative_eq!(w.hz(), 158e3, max_relative = 1e-15);
        assert_eq!(format!("{}", AngularFrequency::from_hz(2.0_f64)), "2π×2 Hz");
    }

    #[test]
    fn invariants() {
        let mut p = CavityParams::<f64>::strontium();
        assert!(p.validate().is_ok());
        p.kappa = AngularFrequency::from_khz(1.0);
        assert!(p.validate().is_err());
        let e = EnsembleSpec {
            n_total: 1e4,
            n_eff: 5e3,
            sigma_z: 1e-4,
            sigma_y: 2e-5,
            z_offset: 0.0,
            contrast_i: 0.71,
            contrast_f: 0.8,
        };
        assert!(e.validate().is_err());
        let s = SpinProjection::from_populations(60.0, 40.0);
        assert_eq!(s.jz, 10.0);
        assert!(s.validate(90.0).is_err());
    }

    proptest! {
        #[test]
        fn db_round_trip(x in -60.0f64..60.0) {
            let back = db_from_ratio(ratio_from_db(x)).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
        }

        #[test]
        fn cooperativity_scaling(g in 1e2f64..1e5, k in 1e4f64..1e7, gam in 1e2f64..1e4, s in 0.1f64..10.0) {
            let base = CavityParams {
                g_eff: AngularFrequency(g), kappa: AngularFrequency(k), gamma: AngularFrequency(gam),
                ..CavityParams::strontium()
            };
            let c0 = cooperativity(&base);
            let cg = cooperativity(&CavityParams { g_eff: AngularFrequency(g * s.sqrt()), ..base });
            let ck = cooperativity(&CavityParams { kappa: AngularFrequency(k * s), ..base });
            let cgam = cooperativity(&CavityParams { gamma: AngularFrequency(gam * s), ..base });
            prop_assert!((cg / c0 - s).abs() < 1e-10 * s);
            prop_assert!((ck * s / c0 - 1.0).abs() < 1e-12);
            prop_assert!((cgam * s / c0 - 1.0).abs() < 1e-12);
        }
    }
}
