//! Scenario files: TOML with one `parameters` table per pipeline.
//!
//! Every section has defaults for the strontium apparatus, so a scenario
//! needs only `name`, `command` and `seed`. Units are in the key names.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sqclock::clock::{self, LaserNoise, Mode, SequenceConfig};
use sqclock::squeezing::{default_scatter_loss, SqueezeConfig, STUDY_ATOMS, STUDY_EFFICIENCY, STUDY_PHOTONS};
use sqclock::units::SR87_CLOCK_FREQUENCY_HZ;
use sqclock::{AngularFrequency, CavityParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CalibrateCoupling,
    QpnFit,
    SqueezeSweep,
    CorrelationSweep,
    CompareClocks,
    Adev,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CalibrateCoupling => "calibrate-coupling",
            Command::QpnFit => "qpn-fit",
            Command::SqueezeSweep => "squeeze-sweep",
            Command::CorrelationSweep => "correlation-sweep",
            Command::CompareClocks => "compare-clocks",
            Command::Adev => "adev",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub command: Command,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub parameters: Parameters,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Parameters {
    pub cavity: CavitySection,
    pub cloud: CloudSection,
    pub qpn_fit: QpnFitSection,
    pub squeeze: SqueezeSection,
    pub correlation: CorrelationSection,
    pub sequence: SequenceSection,
    pub adev: AdevSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavitySection {
    pub g_khz: f64,
    pub kappa_khz: f64,
    pub gamma_khz: f64,
    pub delta_c_khz: f64,
    pub w0_um: f64,
    pub length_cm: f64,
    pub lambda_probe_nm: f64,
    pub lambda_lattice_nm: f64,
}

impl Default for CavitySection {
    fn default() -> Self {
        Self {
            g_khz: 5.2,
            kappa_khz: 158.0,
            gamma_khz: 7.48,
            delta_c_khz: 1000.0,
            w0_um: 71.0,
            length_cm: 6.972,
            lambda_probe_nm: 689.0,
            lambda_lattice_nm: 813.0,
        }
    }
}

impl CavitySection {
    pub fn params(&self) -> CavityParams {
        CavityParams {
            g_eff: AngularFrequency::from_khz(self.g_khz),
            kappa: AngularFrequency::from_khz(self.kappa_khz),
            gamma: AngularFrequency::from_khz(self.gamma_khz),
            delta_c: AngularFrequency::from_khz(self.delta_c_khz),
            w0: self.w0_um * 1e-6,
            cavity_length: self.length_cm * 1e-2,
            lambda_probe: self.lambda_probe_nm * 1e-9,
            lambda_lattice: self.lambda_lattice_nm * 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudSection {
    pub temperature_nk: f64,
    pub trap_frequency_hz: f64,
    pub sigma_z_um: f64,
    pub z_center_um: f64,
    /// Peak coupling; computed from the cavity geometry when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g0_khz: Option<f64>,
    /// Atoms drawn for the Monte Carlo cross-check; 0 skips it.
    pub sample_atoms: usize,
    /// Lattice detuning for the transport velocity.
    pub transport_detuning_khz: f64,
}

impl Default for CloudSection {
    fn default() -> Self {
        Self {
            temperature_nk: 290.0,
            trap_frequency_hz: 34.0,
            sigma_z_um: 130.0,
            z_center_um: 0.0,
            g0_khz: None,
            sample_atoms: 1_000_000,
            transport_detuning_khz: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QpnFitSection {
    /// CSV with columns omega_sum_hz, std_hz, relative to the scenario
    /// file. Synthetic data from the settings below when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_file: Option<PathBuf>,
    pub g_khz: f64,
    pub offset_khz: f64,
    pub rotation_slope: f64,
    /// Relative scatter of each synthetic std.
    pub scatter: f64,
    pub n_points: usize,
    pub shift_min_khz: f64,
    pub shift_max_khz: f64,
    pub include_rotation_noise: bool,
}

impl Default for QpnFitSection {
    fn default() -> Self {
        Self {
            data_file: None,
            g_khz: 5.2,
            offset_khz: 0.76,
            rotation_slope: 0.0,
            scatter: 0.05,
            n_points: 30,
            shift_min_khz: 10.0,
            shift_max_khz: 400.0,
            include_rotation_noise: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqueezeSection {
    pub n_atoms: f64,
    pub contrast_i: f64,
    pub quantum_efficiency: f64,
    /// Photon number at which the detection scale is calibrated.
    pub operating_photons: f64,
    pub target_r_db: f64,
    pub target_intrinsic_db: f64,
    /// Overrides the calibration when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection_noise_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_readout_std: Option<f64>,
    pub scatter_loss_coeff: f64,
    pub excess_antisqueeze_db: f64,
    pub photons: Vec<f64>,
    pub n_trials: usize,
    pub tomography_points: usize,
}

impl Default for SqueezeSection {
    fn default() -> Self {
        Self {
            n_atoms: STUDY_ATOMS,
            contrast_i: 0.71,
            quantum_efficiency: STUDY_EFFICIENCY,
            operating_photons: STUDY_PHOTONS,
            target_r_db: -4.8,
            target_intrinsic_db: -6.7,
            detection_noise_scale: None,
            final_readout_std: None,
            scatter_loss_coeff: default_scatter_loss(),
            excess_antisqueeze_db: 9.0,
            photons: (0..=30).map(|k| 2e3 * k as f64).chain([STUDY_PHOTONS]).collect(),
            n_trials: 10_000,
            tomography_points: 37,
        }
    }
}

impl SqueezeSection {
    /// Probe configuration at the operating point, calibrating whatever is
    /// not given explicitly.
    pub fn config(&self) -> sqclock::Result<SqueezeConfig> {
        use sqclock::squeezing::{calibrate_final_readout, calibrate_noise_scale};
        let final_std = match self.final_readout_std {
            Some(s) => s,
            None => calibrate_final_readout(self.target_r_db, self.target_intrinsic_db, self.n_atoms / 4.0)?,
        };
        let scale = match self.detection_noise_scale {
            Some(a) => a,
            None => calibrate_noise_scale(
                self.target_r_db,
                self.operating_photons,
                self.quantum_efficiency,
                self.n_atoms,
                Some(final_std),
            )?,
        };
        Ok(SqueezeConfig {
            photons_per_measurement: self.operating_photons,
            quantum_efficiency: self.quantum_efficiency,
            detection_noise_scale: scale,
            scatter_loss_coeff: self.scatter_loss_coeff,
            excess_antisqueeze_db: self.excess_antisqueeze_db,
            final_readout_std: Some(final_std),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g0_khz: Option<f64>,
    /// Radial cloud width; thermal value from the cloud section when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_y_um: Option<f64>,
    pub sigma_z_um: f64,
    pub separations_um: Vec<f64>,
    pub n_atoms: usize,
    pub n_trials: usize,
    pub detection_noise: f64,
    pub symmetric: bool,
}

impl Default for CorrelationSection {
    fn default() -> Self {
        let w0 = CavitySection::default().w0_um;
        let mut seps: Vec<f64> = (0..=8).map(|k| 0.5 * w0 * k as f64).chain([150.0]).collect();
        seps.sort_by(f64::total_cmp);
        Self {
            g0_khz: None,
            sigma_y_um: None,
            sigma_z_um: 130.0,
            separations_um: seps,
            n_atoms: 20_000,
            n_trials: 4_000,
            detection_noise: 0.0,
            symmetric: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceSection {
    pub n_shots: usize,
    pub ramsey_time_ms: f64,
    pub cycle_time_s: f64,
    pub laser_noise_rad: f64,
    pub laser_noise_kind: LaserNoise,
    pub asymmetry: f64,
    pub n_atoms_a: f64,
    pub n_atoms_b: f64,
    pub contrast_i: f64,
    pub contrast_f: f64,
    /// Pre-measurement photons; the preset value gives C_i → C_f.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photons_per_measurement: Option<f64>,
    pub quantum_efficiency: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection_noise_scale: Option<f64>,
    pub final_photon_ratio: f64,
    pub excess_antisqueeze_db: f64,
    pub separation_um: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fringe_amplitude: Option<f64>,
    pub transition_frequency_hz: f64,
}

impl Default for SequenceSection {
    fn default() -> Self {
        let p = SequenceConfig::comparison_preset(Mode::SssSss);
        Self {
            n_shots: p.n_shots,
            ramsey_time_ms: p.ramsey_time * 1e3,
            cycle_time_s: p.cycle_time,
            laser_noise_rad: p.laser_noise_std,
            laser_noise_kind: p.laser_noise_kind,
            asymmetry: p.asymmetry,
            n_atoms_a: p.ensemble_a.n_eff,
            n_atoms_b: p.ensemble_b.n_eff,
            contrast_i: p.ensemble_a.contrast_i,
            contrast_f: p.ensemble_a.contrast_f,
            photons_per_measurement: None,
            quantum_efficiency: p.squeeze.quantum_efficiency,
            detection_noise_scale: None,
            final_photon_ratio: p.final_photon_ratio,
            excess_antisqueeze_db: p.squeeze.excess_antisqueeze_db,
            separation_um: p.separation * 1e6,
            fringe_amplitude: None,
            transition_frequency_hz: SR87_CLOCK_FREQUENCY_HZ,
        }
    }
}

impl SequenceSection {
    pub fn config(&self, mode: Mode) -> SequenceConfig {
        let mut c = SequenceConfig::comparison_preset(mode);
        c.n_shots = self.n_shots;
        c.ramsey_time = self.ramsey_time_ms * 1e-3;
        c.cycle_time = self.cycle_time_s;
        c.laser_noise_std = self.laser_noise_rad;
        c.laser_noise_kind = self.laser_noise_kind;
        c.asymmetry = self.asymmetry;
        c.ensemble_a = clock::ensemble(self.n_atoms_a, (self.contrast_i, self.contrast_f));
        c.ensemble_b = clock::ensemble(self.n_atoms_b, (self.contrast_i, self.contrast_f));
        if let Some(n) = self.photons_per_measurement {
            c.squeeze.photons_per_measurement = n;
        }
        c.squeeze.quantum_efficiency = self.quantum_efficiency;
        if let Some(a) = self.detection_noise_scale {
            c.squeeze.detection_noise_scale = a;
        }
        c.squeeze.excess_antisqueeze_db = self.excess_antisqueeze_db;
        c.final_photon_ratio = self.final_photon_ratio;
        c.separation = self.separation_um * 1e-6;
        c.ramsey_fringe_amplitude = self.fringe_amplitude.unwrap_or(self.n_atoms_a);
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdevSection {
    /// CSV with a phase_rad column, relative to the scenario file.
    /// Synthetic white phase noise when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_file: Option<PathBuf>,
    pub synthetic_samples: usize,
    pub sigma_phi_rad: f64,
    pub ramsey_time_ms: f64,
    pub cycle_time_s: f64,
    pub transition_frequency_hz: f64,
    /// Averaging times; octave grid with ≥ 50 windows when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taus_s: Option<Vec<f64>>,
}

impl Default for AdevSection {
    fn default() -> Self {
        Self {
            data_file: None,
            synthetic_samples: 1 << 16,
            sigma_phi_rad: 0.02,
            ramsey_time_ms: 14.0,
            cycle_time_s: 1.0,
            transition_frequency_hz: SR87_CLOCK_FREQUENCY_HZ,
            taus_s: None,
        }
    }
}

/// Parses a scenario. A run manifest is accepted too: its `scenario`
/// member is the resolved scenario of that run.
pub fn parse(text: &str) -> Result<Scenario, Vec<String>> {
    if text.trim().is_empty() {
        return Err(vec!["scenario file is empty".into()]);
    }
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| vec![format!("manifest: {e}")])?;
        let inner = value.get("scenario").cloned().ok_or_else(|| vec!["manifest: missing `scenario`".to_string()])?;
        return serde_path_to_error::deserialize(inner).map_err(|e| vec![format!("{}: {}", e.path(), e.inner())]);
    }
    let de = toml::de::Deserializer::parse(text).map_err(|e| vec![e.to_string()])?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let msg = e.into_inner().to_string();
        vec![if path == "." { msg } else { format!("{path}: {msg}") }]
    })
}

pub fn resolve_relative(scenario_path: &Path, file: &Path) -> PathBuf {
    if file.is_absolute() {
        file.to_path_buf()
    } else {
        scenario_path.parent().unwrap_or(Path::new(".")).join(file)
    }
}

struct Diagnostics {
    prefix: &'static str,
    items: Vec<String>,
}

impl Diagnostics {
    fn new(prefix: &'static str) -> Self {
        Self { prefix, items: Vec::new() }
    }

    fn push(&mut self, key: &str, msg: &str) {
        self.items.push(format!("parameters.{}.{key}: {msg}", self.prefix));
    }

    fn positive(&mut self, key: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(key, &format!("must be positive, got {v}"));
        }
    }

    fn non_negative(&mut self, key: &str, v: f64) {
        if !(v >= 0.0 && v.is_finite()) {
            self.push(key, &format!("must be non-negative, got {v}"));
        }
    }

    fn fraction(&mut self, key: &str, v: f64) {
        if !(v > 0.0 && v <= 1.0) {
            self.push(key, &format!("must lie in (0, 1], got {v}"));
        }
    }
}

/// Schema-level and invariant checks for the sections the command uses.
/// An empty list means the scenario can run.
pub fn validate(s: &Scenario) -> Vec<String> {
    let p = &s.parameters;
    let mut out = Vec::new();
    if s.name.trim().is_empty() {
        out.push("name: must not be empty".into());
    }
    let mut cav = Diagnostics::new("cavity");
    for (k, v) in [
        ("kappa_khz", p.cavity.kappa_khz),
        ("gamma_khz", p.cavity.gamma_khz),
        ("delta_c_khz", p.cavity.delta_c_khz),
        ("w0_um", p.cavity.w0_um),
        ("length_cm", p.cavity.length_cm),
        ("lambda_probe_nm", p.cavity.lambda_probe_nm),
        ("lambda_lattice_nm", p.cavity.lambda_lattice_nm),
    ] {
        cav.positive(k, v);
    }
    cav.non_negative("g_khz", p.cavity.g_khz);
    if cav.items.is_empty() {
        if let Err(e) = p.cavity.params().validate() {
            cav.items.push(format!("parameters.cavity: {e}"));
        }
    }
    let needs_cavity = matches!(s.command, Command::CalibrateCoupling | Command::QpnFit | Command::CorrelationSweep);
    if needs_cavity {
        out.append(&mut cav.items);
    }

    match s.command {
        Command::CalibrateCoupling => {
            let mut d = Diagnostics::new("cloud");
            d.positive("temperature_nk", p.cloud.temperature_nk);
            d.positive("trap_frequency_hz", p.cloud.trap_frequency_hz);
            d.non_negative("sigma_z_um", p.cloud.sigma_z_um);
            if !p.cloud.z_center_um.is_finite() {
                d.push("z_center_um", "must be finite");
            }
            if let Some(g0) = p.cloud.g0_khz {
                d.positive("g0_khz", g0);
            }
            d.non_negative("transport_detuning_khz", p.cloud.transport_detuning_khz);
            out.append(&mut d.items);
        }
        Command::QpnFit => {
            let q = &p.qpn_fit;
            let mut d = Diagnostics::new("qpn_fit");
            if q.data_file.is_none() {
                d.non_negative("g_khz", q.g_khz);
                d.non_negative("offset_khz", q.offset_khz);
                d.non_negative("rotation_slope", q.rotation_slope);
                d.non_negative("scatter", q.scatter);
                d.positive("shift_min_khz", q.shift_min_khz);
                d.positive("shift_max_khz", q.shift_max_khz);
                if q.shift_max_khz <= q.shift_min_khz {
                    d.push("shift_max_khz", "must exceed shift_min_khz");
                }
                if q.n_points < 4 {
                    d.push("n_points", "need at least 4 points");
                }
            }
            out.append(&mut d.items);
        }
        Command::SqueezeSweep => {
            let q = &p.squeeze;
            let mut d = Diagnostics::new("squeeze");
            d.positive("n_atoms", q.n_atoms);
            if !(q.contrast_i > 0.0 && q.contrast_i <= 1.0) {
                d.push("contrast_i", "must lie in (0, 1]");
            }
            d.fraction("quantum_efficiency", q.quantum_efficiency);
            d.positive("operating_photons", q.operating_photons);
            if !(q.target_r_db < 0.0) {
                d.push("target_r_db", "must be below 0 dB");
            }
            if !(q.target_intrinsic_db <= q.target_r_db) {
                d.push("target_intrinsic_db", "must not exceed target_r_db");
            }
            if let Some(a) = q.detection_noise_scale {
                d.non_negative("detection_noise_scale", a);
            }
            if let Some(a) = q.final_readout_std {
                d.non_negative("final_readout_std", a);
            }
            d.non_negative("scatter_loss_coeff", q.scatter_loss_coeff);
            d.non_negative("excess_antisqueeze_db", q.excess_antisqueeze_db);
            if q.photons.is_empty() {
                d.push("photons", "must not be empty");
            }
            for (i, n) in q.photons.iter().enumerate() {
                if !(*n >= 0.0 && n.is_finite()) {
                    d.push(&format!("photons[{i}]"), &format!("must be non-negative, got {n}"));
                }
            }
            if q.n_trials < 2 {
                d.push("n_trials", "need at least 2 trials");
            }
            out.append(&mut d.items);
        }
        Command::CorrelationSweep => {
            let c = &p.correlation;
            let mut d = Diagnostics::new("correlation");
            if let Some(g) = c.g0_khz {
                d.positive("g0_khz", g);
            }
            if let Some(s) = c.sigma_y_um {
                d.non_negative("sigma_y_um", s);
            }
            d.non_negative("sigma_z_um", c.sigma_z_um);
            d.non_negative("detection_noise", c.detection_noise);
            if c.separations_um.is_empty() {
                d.push("separations_um", "must not be empty");
            }
            for (i, s) in c.separations_um.iter().enumerate() {
                if !(*s >= 0.0 && s.is_finite()) {
                    d.push(&format!("separations_um[{i}]"), &format!("must be non-negative, got {s}"));
                }
            }
            if c.n_atoms < 1 {
                d.push("n_atoms", "must be positive");
            }
            if c.n_trials < 2 {
                d.push("n_trials", "need at least 2 trials");
            }
            out.append(&mut d.items);
        }
        Command::CompareClocks => {
            let q = &p.sequence;
            let mut d = Diagnostics::new("sequence");
            if let Some(n) = q.photons_per_measurement {
                d.non_negative("photons_per_measurement", n);
            }
            if let Some(a) = q.detection_noise_scale {
                d.non_negative("detection_noise_scale", a);
            }
            d.positive("transition_frequency_hz", q.transition_frequency_hz);
            if !(q.contrast_f <= q.contrast_i) {
                d.push("contrast_f", "must not exceed contrast_i");
            }
            if q.n_shots < 100 {
                d.push("n_shots", "need at least 100 shots for the stability analysis");
            }
            if d.items.is_empty() {
                for mode in [Mode::CssCss, Mode::SssSss] {
                    if let Err(e) = q.config(mode).validate() {
                        d.items.push(format!("parameters.sequence ({mode:?}): {e}"));
                        break;
                    }
                }
            }
            out.append(&mut d.items);
        }
        Command::Adev => {
            let a = &p.adev;
            let mut d = Diagnostics::new("adev");
            d.positive("ramsey_time_ms", a.ramsey_time_ms);
            d.positive("cycle_time_s", a.cycle_time_s);
            d.positive("transition_frequency_hz", a.transition_frequency_hz);
            if a.data_file.is_none() {
                d.non_negative("sigma_phi_rad", a.sigma_phi_rad);
                if a.synthetic_samples < 100 {
                    d.push("synthetic_samples", "need at least 100 samples");
                }
            }
            if let Some(t) = &a.taus_s {
                if t.is_empty() {
                    d.push("taus_s", "must not be empty");
                }
                for (i, v) in t.iter().enumerate() {
                    if !(*v > 0.0 && v.is_finite()) {
                        d.push(&format!("taus_s[{i}]"), &format!("must be positive, got {v}"));
                    }
                }
            }
            out.append(&mut d.items);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario_uses_defaults() {
        let s = parse("name = \"x\"\ncommand = \"compare-clocks\"\nseed = 5\n").unwrap();
        assert_eq!(s.parameters, Parameters::default());
        assert!(validate(&s).is_empty());
    }

    #[test]
    fn unknown_key_names_its_path() {
        let err = parse("name = \"x\"\ncommand = \"adev\"\nseed = 1\n[parameters.adev]\nsigma_phi = 1.0\n").unwrap_err();
        assert!(err[0].contains("parameters.adev"), "{err:?}");
        assert!(err[0].contains("sigma_phi"), "{err:?}");
    }

    #[test]
    fn seed_is_mandatory() {
        let err = parse("name = \"x\"\ncommand = \"adev\"\n").unwrap_err();
        assert!(err[0].contains("seed"), "{err:?}");
        assert!(parse("").is_err());
    }

    #[test]
    fn negative_photon_number_is_one_diagnostic() {
        let s = parse("name = \"x\"\ncommand = \"squeeze-sweep\"\nseed = 1\n[parameters.squeeze]\noperating_photons = -5.0\n").unwrap();
        let d = validate(&s);
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0].contains("parameters.squeeze.operating_photons"));
    }

    #[test]
    fn final_contrast_above_initial() {
        let s = parse("name = \"x\"\ncommand = \"compare-clocks\"\nseed = 1\n[parameters.sequence]\ncontrast_f = 0.6\n").unwrap();
        let d = validate(&s);
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0].contains("contrast_f"));
    }

    #[test]
    fn sequence_defaults_match_preset() {
        let p = SequenceConfig::comparison_preset(Mode::SssSss);
        assert_eq!(SequenceSection::default().config(Mode::SssSss), p);
    }

    #[test]
    fn manifest_round_trip() {
        let s = parse("name = \"x\"\ncommand = \"qpn-fit\"\nseed = 3\n").unwrap();
        let manifest = serde_json::json!({ "tool": "sqclock", "scenario": s });
        assert_eq!(parse(&manifest.to_string()).unwrap(), s);
    }
}
