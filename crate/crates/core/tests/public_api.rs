use sqclock::clock::{
    compare_clocks, compare_runs, comparison_seeds, fit_fringe, ramsey_fringe_scan, run_sequence, Mode, SequenceConfig,
};
use sqclock::units::SR87_CLOCK_FREQUENCY_HZ;

fn short(mode: Mode) -> SequenceConfig {
    let mut c = SequenceConfig::comparison_preset(mode);
    c.n_shots = 2000;
    c
}

#[test]
fn compare_runs_reproduces_compare_clocks() {
    let (css, sss) = (short(Mode::CssCss), short(Mode::SssSss));
    let whole = compare_clocks(&css, &sss, 99, SR87_CLOCK_FREQUENCY_HZ).unwrap();
    let (a, b) = comparison_seeds(99);
    let parts = compare_runs(
        &css,
        &run_sequence(&css, a).unwrap(),
        &sss,
        &run_sequence(&sss, b).unwrap(),
        SR87_CLOCK_FREQUENCY_HZ,
    )
    .unwrap();
    assert_eq!(whole, parts);
}

#[test]
fn fringe_slope_matches_the_phase_conversion() {
    let mut c = short(Mode::SssSss);
    c.laser_noise_std = 0.0;
    let phases: Vec<f64> = (0..24).map(|k| k as f64 * std::f64::consts::TAU / 24.0).collect();
    let fit = fit_fringe(&ramsey_fringe_scan(&c, &phases, 400, 5).unwrap()).unwrap();
    let (slope, _) = c.fringe_slopes();
    assert!((fit.amplitude - slope).abs() < 4.0 * fit.amplitude_err, "{} vs {slope}", fit.amplitude);
}
