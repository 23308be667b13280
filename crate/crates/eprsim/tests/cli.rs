use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const MINIMAL: &str = "[interferometer]\nsrc_detuning_hz = 2000.0\n";

fn eprsim(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_eprsim"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("EPRSIM_THREADS", t),
        None => cmd.env_remove("EPRSIM_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn run(dir: &Path, scenario: &str, config: &str, out: &str, extra: &[&str], threads: Option<&str>) -> Output {
    let out = dir.join(out);
    let mut args = vec!["run", scenario, "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    eprsim(&args, threads)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_scenario_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), MINIMAL);
    let o = run(tmp.path(), "bogus-scenario", &cfg, "out", &[], None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("bogus-scenario") && stderr(&o).contains("omc-sweep"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn missing_detuning_exits_3_and_names_the_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[interferometer]\nschnupp_m = 0.05\n");
    let o = run(tmp.path(), "sensitivity", &cfg, "out", &[], None);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("src_detuning_hz"), "{}", stderr(&o));
}

#[test]
fn missing_interferometer_section_exits_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[squeezer]\nepr_db = 10.0\n");
    let o = run(tmp.path(), "sensitivity", &cfg, "out", &[], None);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("interferometer"), "{}", stderr(&o));
}

#[test]
fn bad_keys_and_values_exit_3_with_line_numbers() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[interferometer]\nsrc_detuning_hz = 2000.0\n\n[losses]\nintput = 0.1\n");
    let o = run(tmp.path(), "sensitivity", &cfg, "out", &[], None);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 5") && stderr(&o).contains("intput"), "{}", stderr(&o));

    let cfg = write_config(tmp.path(), "[interferometer]\nsrc_detuning_hz = \"fast\"\n");
    let o = run(tmp.path(), "sensitivity", &cfg, "out", &[], None);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let cfg = write_config(tmp.path(), "[interferometer]\nsrc_detuning_hz = 2000.0\n\n[losses]\ninput = 1.5\n");
    let o = run(tmp.path(), "sensitivity", &cfg, "out", &[], None);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("losses.input"), "{}", stderr(&o));
}

#[test]
fn overrides_are_validated() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), MINIMAL);
    let o = run(tmp.path(), "sensitivity", &cfg, "out", &["--override", "squeezer.colour=blue"], None);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
    let o = run(tmp.path(), "sensitivity", &cfg, "out", &["--override", "epr_db"], None);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_thread_count_exits_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), MINIMAL);
    let o = run(tmp.path(), "homodyne-sweep", &cfg, "out", &[], Some("zero"));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn sensitivity_writes_four_curves_and_a_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), MINIMAL);
    let o = run(tmp.path(), "sensitivity", &cfg, "out", &[], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "sensitivity");
    assert_eq!(manifest["config"]["interferometer"]["src_detuning_hz"], 2000.0);
    let files: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert_eq!(files, ["nosqz_tuned.csv", "nosqz_detuned.csv", "dc_readout.csv", "epr_lower.csv"]);
    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = files.iter().map(|s| s.to_string()).collect();
    listed.sort();
    assert_eq!(on_disk, listed);

    let epr = fs::read_to_string(out.join("epr_lower.csv")).unwrap();
    let mut lines = epr.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    assert!(lines.next().unwrap().starts_with("# units: frequency_hz[Hz] value["));
    assert!(lines.next().unwrap().starts_with("frequency_hz,value,"));
    let improvement: Vec<f64> = lines.map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    let mean = improvement.iter().sum::<f64>() / improvement.len() as f64;
    assert!((mean - 10.0).abs() < 0.5, "mean EPR improvement {mean}");
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), MINIMAL);
    for scenario in ["sensitivity", "coupled-cavity"] {
        let a = run(tmp.path(), scenario, &cfg, "a", &["--override", "study.coupled_schnupp_m=[0.2]"], Some("1"));
        let b = run(tmp.path(), scenario, &cfg, "b", &["--override", "study.coupled_schnupp_m=[0.2]"], Some("3"));
        assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
        assert_eq!(b.status.code(), Some(0), "{}", stderr(&b));
        let mut names: Vec<_> = fs::read_dir(tmp.path().join("a"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .filter(|n| n.to_string_lossy().ends_with(".csv"))
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for n in names {
            let x = fs::read(tmp.path().join("a").join(&n)).unwrap();
            let y = fs::read(tmp.path().join("b").join(&n)).unwrap();
            assert!(x == y, "{scenario}: {n:?} differs");
        }
        fs::remove_dir_all(tmp.path().join("a")).unwrap();
        fs::remove_dir_all(tmp.path().join("b")).unwrap();
    }
}

#[test]
fn default_config_runs() {
    let o = eprsim(&["default-config"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &text);
    let o = run(tmp.path(), "homodyne-sweep", &cfg, "out", &[], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
