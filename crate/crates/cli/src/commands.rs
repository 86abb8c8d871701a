//! One pipeline per scenario command. Each returns its artifacts and a
//! summary of headline numbers; nothing touches the disk here except
//! reading the scenario's input files.

use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde_json::json;
use sqclock::cavity::{fit_coupling, qpn_fit_model, synthetic_dataset, FitOptions, QpnSample};
use sqclock::clock::{compare_runs, comparison_seeds, run_sequence, Mode, SpinRecord};
use sqclock::geometry::{
    effective_coupling_closed_form, effective_coupling_of_samples, effective_coupling_quadrature,
    ensemble_correlation_vs_separation, peak_coupling, sample_atom_couplings, thermal_radius, transport_velocity,
    CloudDistribution, CorrelationSetup, ModeGeometry,
};
use sqclock::rng::{stream, Purpose};
use sqclock::squeezing::{qnd_measure, sweep_probe_strength, tomography_curve, wineland_parameter, ConditionalState};
use sqclock::stats::{allan_deviation, fit_stability, AdevCurve};
use sqclock::units::{cooperativity, SR87_MASS};
use sqclock::AngularFrequency;
use std::f64::consts::TAU;

use crate::output::{blob_hash, json_artifact, Artifact, InputEntry, Table};
use crate::scenario::{resolve_relative, CavitySection, CloudSection, Command, Scenario};

#[derive(Debug)]
pub enum Failure {
    /// Bad input: schema, invariants or a malformed data file.
    Schema(Vec<String>),
    /// A module returned an error.
    Numerical(sqclock::Error),
    Io(String),
}

impl From<sqclock::Error> for Failure {
    fn from(e: sqclock::Error) -> Self {
        Failure::Numerical(e)
    }
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: serde_json::Value,
    pub inputs: Vec<InputEntry>,
}

/// Makes data-file paths absolute so the resolved scenario in the manifest
/// can be re-run from any directory.
pub fn resolve_inputs(scenario: &mut Scenario, scenario_path: &Path) {
    let p = &mut scenario.parameters;
    for f in [&mut p.qpn_fit.data_file, &mut p.adev.data_file].into_iter().flatten() {
        let r = resolve_relative(scenario_path, f);
        *f = std::fs::canonicalize(&r).unwrap_or(r);
    }
}

pub fn run(scenario: &Scenario) -> Result<Outcome, Failure> {
    match scenario.command {
        Command::CalibrateCoupling => calibrate_coupling(scenario),
        Command::QpnFit => qpn_fit(scenario),
        Command::SqueezeSweep => squeeze_sweep(scenario),
        Command::CorrelationSweep => correlation_sweep(scenario),
        Command::CompareClocks => compare_clocks(scenario),
        Command::Adev => adev(scenario),
    }
}

fn khz(w: AngularFrequency) -> f64 {
    w.hz() / 1e3
}

fn read_input(path: &Path) -> Result<(String, InputEntry), Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let entry = InputEntry { path: path.to_path_buf(), sha256: blob_hash(&bytes) };
    let text = String::from_utf8(bytes).map_err(|_| Failure::Schema(vec![format!("{}: not UTF-8", path.display())]))?;
    Ok((text, entry))
}

/// Reads the named columns of a CSV with a header row.
fn read_columns(path: &Path, text: &str, wanted: &[&str]) -> Result<Vec<Vec<f64>>, Failure> {
    let bad = |msg: String| Failure::Schema(vec![format!("{}: {msg}", path.display())]);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let idx: Vec<usize> = wanted
        .iter()
        .map(|w| header.iter().position(|h| h.trim() == *w).ok_or_else(|| bad(format!("missing column `{w}`"))))
        .collect::<Result<_, _>>()?;
    let mut cols = vec![Vec::new(); wanted.len()];
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        for (c, &i) in idx.iter().enumerate() {
            let field = rec.get(i).unwrap_or("");
            let v: f64 = field.trim().parse().map_err(|_| bad(format!("row {}: `{field}` is not a number", line + 2)))?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

fn peak(cavity: &CavitySection, g0_khz: Option<f64>) -> Result<AngularFrequency, Failure> {
    Ok(match g0_khz {
        Some(g) => AngularFrequency::from_khz(g),
        None => {
            let p = cavity.params();
            peak_coupling(p.gamma, p.lambda_probe, p.w0, p.cavity_length)?
        }
    })
}

fn thermal_sigma_y(cloud: &CloudSection) -> f64 {
    thermal_radius(cloud.temperature_nk * 1e-9, cloud.trap_frequency_hz, SR87_MASS)
}

fn calibrate_coupling(s: &Scenario) -> Result<Outcome, Failure> {
    let p = &s.parameters;
    let params = p.cavity.params();
    let g0 = peak(&p.cavity, p.cloud.g0_khz)?;
    let mode = ModeGeometry::new(params.w0, g0)?;
    let sigma_y = thermal_sigma_y(&p.cloud);
    let cloud = CloudDistribution::new(sigma_y, p.cloud.sigma_z_um * 1e-6, p.cloud.z_center_um * 1e-6)?;
    let closed = effective_coupling_closed_form(&mode, &cloud);
    let quad = effective_coupling_quadrature(&mode, &cloud)?;

    let mut table = Table::new("coupling.csv", &["method", "g_eff_khz", "n_eff_fraction"]);
    let mut methods = vec![("closed_form", closed), ("quadrature", quad)];
    if p.cloud.sample_atoms > 0 {
        let w = sample_atom_couplings(&mode, &cloud, p.cloud.sample_atoms, s.seed);
        methods.push(("monte_carlo", effective_coupling_of_samples(&w)));
    }
    for (name, e) in &methods {
        table.labeled_row(name, &[khz(e.g_eff), e.n_eff_fraction]);
    }
    let velocity = transport_velocity(AngularFrequency::from_khz(p.cloud.transport_detuning_khz), params.lambda_lattice);
    let g_eff = if p.cloud.z_center_um == 0.0 { closed.g_eff } else { quad.g_eff };
    let summary = json!({
        "g0_khz": khz(g0),
        "sigma_y_um": sigma_y * 1e6,
        "g_eff_khz": khz(g_eff),
        "n_eff_fraction": quad.n_eff_fraction,
        "cooperativity": cooperativity(&params.with_coupling(g_eff)),
        "transport_velocity_um_per_s": velocity * 1e6,
    });
    Ok(Outcome { artifacts: vec![table.finish()], summary, inputs: Vec::new() })
}

fn qpn_fit(s: &Scenario) -> Result<Outcome, Failure> {
    let q = &s.parameters.qpn_fit;
    let params = s.parameters.cavity.params();
    let mut inputs = Vec::new();
    let data: Vec<QpnSample> = match &q.data_file {
        Some(path) => {
            let (text, entry) = read_input(path)?;
            inputs.push(entry);
            let cols = read_columns(path, &text, &["omega_sum_hz", "std_hz"])?;
            cols[0].iter().zip(&cols[1]).map(|(w, sd)| QpnSample::new(TAU * w, TAU * sd)).collect()
        }
        None => {
            let n = q.n_points;
            let shifts: Vec<f64> = (0..n)
                .map(|k| {
                    let khz = q.shift_min_khz + (q.shift_max_khz - q.shift_min_khz) * k as f64 / (n - 1) as f64;
                    AngularFrequency::from_khz(khz).0
                })
                .collect();
            let g = AngularFrequency::from_khz(q.g_khz).0;
            let offset = AngularFrequency::from_khz(q.offset_khz).0;
            synthetic_dataset(&params, g, offset, q.rotation_slope, &shifts, q.scatter, s.seed)
        }
    };
    let opts = FitOptions { include_rotation_noise: q.include_rotation_noise, ..FitOptions::default() };
    let fit = fit_coupling(&data, &params, opts)?;

    let mut table = Table::new("qpn_data.csv", &["omega_sum_hz", "std_hz"]);
    let mut model = Table::new("qpn_model.csv", &["omega_sum_hz", "std_hz", "model_std_hz"]);
    for d in &data {
        table.row(&[d.omega_sum / TAU, d.std / TAU]);
        let m = qpn_fit_model(d.omega_sum, fit.g_fit.0, fit.noise_offset.0, fit.rotation_noise_slope, params.delta_c.0);
        model.row(&[d.omega_sum / TAU, d.std / TAU, m / TAU]);
    }
    let summary = json!({
        "g_fit_khz": khz(fit.g_fit),
        "g_err_khz": khz(fit.g_err),
        "noise_offset_khz": khz(fit.noise_offset),
        "offset_err_khz": khz(fit.offset_err),
        "rotation_noise_slope": fit.rotation_noise_slope,
        "slope_err": fit.slope_err,
        "residual_rms_khz": khz(fit.residual_rms),
        "iterations": fit.iterations,
        "n_points": data.len(),
        "cooperativity": cooperativity(&params.with_coupling(fit.g_fit)),
    });
    Ok(Outcome { artifacts: vec![table.finish(), model.finish()], summary, inputs })
}

fn squeeze_sweep(s: &Scenario) -> Result<Outcome, Failure> {
    let q = &s.parameters.squeeze;
    let cfg = q.config()?;
    let rows = sweep_probe_strength(&q.photons, &cfg, q.n_atoms, q.contrast_i, q.n_trials, s.seed)?;
    let mut table = Table::new(
        "squeeze_sweep.csv",
        &["n_ph", "R_db", "R_inferred_db", "contrast_i", "contrast_f", "xi_db", "xi_inferred_db", "penalty", "beta", "R_model_db"],
    );
    for r in &rows {
        table.row(&[r.n_ph, r.r_db, r.r_inferred_db, r.contrast_i, r.contrast_f, r.xi_db, r.xi_inferred_db, r.penalty, r.beta, r.r_model_db]);
    }

    // conditional state after one measurement at the operating point
    let mut rng = stream(s.seed, Purpose::Trial, 1 << 47);
    let state = ConditionalState::coherent(q.n_atoms, q.contrast_i);
    let true_jz = (q.n_atoms / 4.0).sqrt() * Distribution::<f64>::sample(&StandardNormal, &mut rng);
    let (_, post) = qnd_measure(&state, true_jz, &cfg, &mut rng);
    let psis: Vec<f64> = (0..q.tomography_points)
        .map(|k| -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * k as f64 / (q.tomography_points.max(2) - 1) as f64)
        .collect();
    let mut tomo = Table::new("tomography.csv", &["psi_rad", "noise_rel_qpn", "unitary_rel_qpn"]);
    for t in tomography_curve(&post, &psis)? {
        tomo.row(&[t.psi, t.noise_rel_qpn, t.unitary_rel_qpn]);
    }

    let operating = rows
        .iter()
        .min_by(|a, b| (a.n_ph - q.operating_photons).abs().total_cmp(&(b.n_ph - q.operating_photons).abs()))
        .expect("photon list is non-empty");
    let best = rows.iter().filter(|r| r.xi_db.is_finite()).min_by(|a, b| a.xi_db.total_cmp(&b.xi_db));
    let c_f = cfg.contrast_after(q.contrast_i);
    let target_xi = wineland_parameter(sqclock::units::ratio_from_db(q.target_r_db), q.contrast_i, c_f)?;
    let summary = json!({
        "detection_noise_scale": cfg.detection_noise_scale,
        "final_readout_std": cfg.final_readout_std,
        "operating_point": {
            "n_ph": operating.n_ph,
            "R_db": operating.r_db,
            "R_inferred_db": operating.r_inferred_db,
            "R_model_db": operating.r_model_db,
            "contrast_f": operating.contrast_f,
            "xi_db": operating.xi_db,
            "xi_inferred_db": operating.xi_inferred_db,
        },
        "xi_target_db": sqclock::units::db_from_ratio(target_xi)?,
        "xi_min": best.map(|r| json!({ "n_ph": r.n_ph, "xi_db": r.xi_db })),
        "R_db": operating.r_db,
        "xi_db": operating.xi_db,
    });
    Ok(Outcome { artifacts: vec![table.finish(), tomo.finish()], summary, inputs: Vec::new() })
}

fn correlation_sweep(s: &Scenario) -> Result<Outcome, Failure> {
    let p = &s.parameters;
    let c = &p.correlation;
    let params = p.cavity.params();
    let mode = ModeGeometry::new(params.w0, peak(&p.cavity, c.g0_khz)?)?;
    let sigma_y = c.sigma_y_um.map(|v| v * 1e-6).unwrap_or_else(|| thermal_sigma_y(&p.cloud));
    let cloud = CloudDistribution::new(sigma_y, c.sigma_z_um * 1e-6, 0.0)?;
    let setup = CorrelationSetup {
        n_atoms: c.n_atoms,
        n_trials: c.n_trials,
        detection_noise: c.detection_noise,
        symmetric: c.symmetric,
    };
    let mut table = Table::new(
        "correlation_sweep.csv",
        &["separation_um", "pearson", "qpn_change_db", "analytic_qpn_change_db", "qpn_change_err_db", "analytic_pearson"],
    );
    let mut points = Vec::with_capacity(c.separations_um.len());
    for &sep in &c.separations_um {
        let pt = ensemble_correlation_vs_separation(&mode, &cloud, sep * 1e-6, &setup, s.seed)?;
        table.row(&[sep, pt.pearson, pt.qpn_change_db, pt.analytic_qpn_change_db, pt.qpn_change_err_db, pt.analytic_pearson]);
        points.push((sep, pt));
    }
    let max_dev = points
        .iter()
        .filter(|(_, pt)| pt.qpn_change_err_db > 0.0)
        .map(|(_, pt)| (pt.qpn_change_db - pt.analytic_qpn_change_db).abs() / pt.qpn_change_err_db)
        .fold(0.0, f64::max);
    let summary = json!({
        "w0_um": params.w0 * 1e6,
        "sigma_y_um": sigma_y * 1e6,
        "points": points.iter().map(|(sep, pt)| json!({
            "separation_um": sep, "pearson": pt.pearson, "qpn_change_db": pt.qpn_change_db,
            "analytic_qpn_change_db": pt.analytic_qpn_change_db,
        })).collect::<Vec<_>>(),
        "max_deviation_sigma": max_dev,
    });
    Ok(Outcome { artifacts: vec![table.finish()], summary, inputs: Vec::new() })
}

fn records_table(name: &str, records: &[SpinRecord]) -> Artifact {
    let mut t = Table::new(name, &["shot", "dn_a_pre", "dn_a_final", "dn_b_pre", "dn_b_final"]);
    for r in records {
        t.row(&[r.shot_index as f64, r.dn_a_pre, r.dn_a_final, r.dn_b_pre, r.dn_b_final]);
    }
    t.finish()
}

fn phase_table(name: &str, phases: &[f64]) -> Artifact {
    let mut t = Table::new(name, &["shot", "phase_rad"]);
    for (k, p) in phases.iter().enumerate() {
        t.row(&[k as f64, *p]);
    }
    t.finish()
}

fn adev_table(name: &str, curve: &AdevCurve) -> Artifact {
    let mut t = Table::new(name, &["tau_s", "sigma_y", "error_bar", "n_samples"]);
    for p in &curve.points {
        t.row(&[p.tau, p.sigma_y, p.error_bar, p.n_samples as f64]);
    }
    t.finish()
}

fn compare_clocks(s: &Scenario) -> Result<Outcome, Failure> {
    let q = &s.parameters.sequence;
    let css = q.config(Mode::CssCss);
    let sss = q.config(Mode::SssSss);
    let (css_seed, sss_seed) = comparison_seeds(s.seed);
    let css_records = run_sequence(&css, css_seed)?;
    let sss_records = run_sequence(&sss, sss_seed)?;
    let cmp = compare_runs(&css, &css_records, &sss, &sss_records, q.transition_frequency_hz)?;

    let artifacts = vec![
        records_table("records_css.csv", &css_records),
        records_table("records_sss.csv", &sss_records),
        phase_table("phase_css.csv", &cmp.css.phase_series),
        phase_table("phase_sss.csv", &cmp.sss.phase_series),
        adev_table("adev_css.csv", &cmp.css.adev_curve),
        adev_table("adev_sss.csv", &cmp.sss.adev_curve),
        json_artifact("estimators.json", &json!({ "css": cmp.css.estimators, "sss": cmp.sss.estimators })),
    ];
    let run = |r: &sqclock::clock::ComparisonResult| {
        json!({
            "phase_std_rad": r.phase_std,
            "phase_std_err_rad": r.phase_std_err,
            "qpn_bound_rad": r.qpn_bound,
            "sql_bound_rad": r.sql_bound,
            "std_over_qpn": r.phase_std / r.qpn_bound,
            "stability_coeff": r.stability_coeff,
            "beta_a": r.estimators.beta_a,
            "beta_b": r.estimators.beta_b,
            "beta_d": r.estimators.beta_d,
        })
    };
    let summary = json!({
        "enhancement_db": cmp.enhancement_db,
        "enhancement_adev_db": cmp.enhancement_adev_db,
        "css": run(&cmp.css),
        "sss": run(&cmp.sss),
        "bounds": { "qpn_rad": cmp.css.qpn_bound, "sql_rad": cmp.sss.sql_bound },
        "seeds": { "css": css_seed, "sss": sss_seed },
    });
    Ok(Outcome { artifacts, summary, inputs: Vec::new() })
}

fn adev(s: &Scenario) -> Result<Outcome, Failure> {
    let a = &s.parameters.adev;
    let mut inputs = Vec::new();
    let phases: Vec<f64> = match &a.data_file {
        Some(path) => {
            let (text, entry) = read_input(path)?;
            inputs.push(entry);
            read_columns(path, &text, &["phase_rad"])?.remove(0)
        }
        None => {
            let mut rng = stream(s.seed, Purpose::Synthetic, 0);
            (0..a.synthetic_samples)
                .map(|_| a.sigma_phi_rad * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect()
        }
    };
    let ramsey = a.ramsey_time_ms * 1e-3;
    let taus = a.taus_s.clone().unwrap_or_else(|| sqclock::clock::default_taus(phases.len(), a.cycle_time_s));
    let curve = allan_deviation(&phases, ramsey, a.cycle_time_s, a.transition_frequency_hz, &taus)?;
    let fit = fit_stability(&curve)?;
    let mut summary = json!({
        "n_samples": phases.len(),
        "stability_coeff": fit.coeff,
        "points": curve.points.iter().zip(&fit.residuals).map(|(p, r)| json!({
            "tau_s": p.tau, "sigma_y": p.sigma_y, "log_residual": r, "rounded": p.rounded,
        })).collect::<Vec<_>>(),
    });
    if a.data_file.is_none() {
        // white phase per shot: σ_y(τ) = σ_φ/(2πTν)·√(T_c/τ)
        let analytic = a.sigma_phi_rad / (TAU * ramsey * a.transition_frequency_hz) * a.cycle_time_s.sqrt();
        summary["analytic_coeff"] = json!(analytic);
        summary["coeff_ratio"] = json!(fit.coeff / analytic);
    }
    Ok(Outcome { artifacts: vec![adev_table("adev.csv", &curve)], summary, inputs })
}
