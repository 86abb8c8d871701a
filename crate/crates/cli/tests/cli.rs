use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sqclock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqclock")).args(args).output().expect("binary runs")
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn empty_scenario_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(tmp.path(), "empty.scenario", "");
    let o = sqclock(&["run", "--scenario", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn validate_reports_field_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(
        tmp.path(),
        "bad.scenario",
        "name = \"bad\"\ncommand = \"squeeze-sweep\"\nseed = 1\n[parameters.squeeze]\nphotons = [0.0, -10.0]\n",
    );
    let o = sqclock(&["validate", "--scenario", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("parameters.squeeze.photons[1]"), "{err}");

    let p = write(tmp.path(), "typo.scenario", "name = \"t\"\ncommand = \"adev\"\nseed = 1\n[parameters.adv]\n");
    let o = sqclock(&["validate", "--scenario", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("adv"), "{}", stderr(&o));
}

#[test]
fn validate_only_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = sqclock(&[
        "compare-clocks",
        "--scenario",
        preset("paper-repro.scenario").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--validate-only",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn subcommand_must_match_scenario() {
    let o = sqclock(&["adev", "--scenario", preset("qpn-fit.scenario").to_str().unwrap(), "--validate-only"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(
        tmp.path(),
        "short.scenario",
        "name = \"short\"\ncommand = \"adev\"\nseed = 1\n[parameters.adev]\nsynthetic_samples = 100\ntaus_s = [80.0]\n",
    );
    let o = sqclock(&["adev", "--scenario", p.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("insufficient data"), "{}", stderr(&o));
}

#[test]
fn qpn_fit_reads_data_file_and_records_its_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let synth = tmp.path().join("synth");
    let o = sqclock(&["qpn-fit", "--scenario", preset("qpn-fit.scenario").to_str().unwrap(), "--out", synth.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    fs::copy(synth.join("qpn_data.csv"), tmp.path().join("data.csv")).unwrap();
    let p = write(
        tmp.path(),
        "file.scenario",
        "name = \"f\"\ncommand = \"qpn-fit\"\nseed = 9\n[parameters.qpn_fit]\ndata_file = \"data.csv\"\n",
    );
    let out = tmp.path().join("fromfile");
    let o = sqclock(&["run", "--scenario", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let a: serde_json::Value = serde_json::from_slice(&fs::read(synth.join("summary.json")).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    let (ga, gb) = (a["g_fit_khz"].as_f64().unwrap(), b["g_fit_khz"].as_f64().unwrap());
    assert!((ga - gb).abs() < 1e-9 * ga, "{ga} vs {gb}");
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 1);
}

#[test]
fn adev_of_a_stored_phase_series() {
    let tmp = tempfile::tempdir().unwrap();
    let header_only = write(tmp.path(), "bad.csv", "shot,phase\n0,1\n");
    let p = write(
        tmp.path(),
        "a.scenario",
        &format!(
            "name = \"a\"\ncommand = \"adev\"\nseed = 1\n[parameters.adev]\ndata_file = {:?}\n",
            header_only.to_str().unwrap()
        ),
    );
    let o = sqclock(&["adev", "--scenario", p.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("phase_rad"));

    let series: String = (0..500).map(|k| format!("{k},{}\n", ((k * 7919) % 101) as f64 * 1e-3)).collect();
    write(tmp.path(), "ok.csv", &format!("shot,phase_rad\n{series}"));
    let p = write(tmp.path(), "b.scenario", "name = \"b\"\ncommand = \"adev\"\nseed = 1\n[parameters.adev]\ndata_file = \"ok.csv\"\n");
    let out = tmp.path().join("ok");
    let o = sqclock(&["adev", "--scenario", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("adev.csv")).unwrap();
    assert!(csv.starts_with("tau_s,sigma_y,error_bar,n_samples\n1,"));
    assert_eq!(csv.lines().count(), 1 + 4, "{csv}");
}

#[test]
fn seed_flag_overrides_file() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let o = sqclock(&[
            "adev",
            "--scenario",
            preset("adev.scenario").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out.join("adev.csv")).unwrap()
    };
    assert_ne!(run("11", "a"), run("12", "b"));
    assert_eq!(run("11", "a"), run("11", "c"));
}

#[test]
fn manifest_lists_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = sqclock(&["run", "--scenario", preset("calibrate-coupling.scenario").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let mut listed: Vec<String> =
        manifest["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap().to_string()).collect();
    listed.push("manifest.json".into());
    listed.sort();
    let mut on_disk: Vec<String> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["content_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let o = sqclock(&["run", "--scenario", preset("squeeze-sweep.scenario").to_str().unwrap(), "--out", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let again = tmp.path().join("again");
    let o = sqclock(&["run", "--scenario", first.join("manifest.json").to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for entry in fs::read_dir(&first).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(first.join(&name)).unwrap(), fs::read(again.join(&name)).unwrap(), "{name:?}");
    }
}
