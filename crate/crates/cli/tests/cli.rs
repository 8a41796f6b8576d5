use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dce_core::sweep::{read_csv, ScanResult, ValidationReport, UNITS_LINE};
use dce_core::SystemConfig;

fn dce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dce"))
        .args(args)
        .output()
        .expect("running dce")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn figure_preset_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3c.csv");
    let o = dce(&["figure", "fig3c", "--grid", "3x4", "--out", path_str(&out), "--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let t = read_csv(fs::File::open(&out).unwrap()).unwrap();
    assert!(t.comments.iter().any(|c| c == UNITS_LINE));
    assert_eq!(
        t.columns,
        [
            "qd",
            "Omega_minus_2omega0",
            "I_minus",
            "engine",
            "overlay_pair_energies_1",
            "overlay_pair_energies_2",
            "overlay_pair_energies_3",
            "overlay_single_excitation_doubled_1",
            "overlay_single_excitation_doubled_2"
        ]
    );
    assert_eq!(t.rows.len(), 12);
    assert_eq!(t.config().unwrap().anharmonicity, 10.0);
    let om = t.numeric("Omega_minus_2omega0").unwrap();
    assert_eq!((om[0], om[3]), (Some(-10.0), Some(20.0)));
    assert!(t.numeric("I_minus").unwrap().iter().all(|v| v.unwrap() > 0.0));
}

#[test]
fn scan_from_config_and_axis_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pair.json");
    let out = dir.path().join("scan.json");
    let mut c = SystemConfig::uniform(2, 0.1, 10.0, 0.1, 0.0);
    c.drive_freq = 2.0 * c.omega0 + 10.0;
    fs::write(&cfg, serde_json::to_string(&c).unwrap()).unwrap();

    let o = dce(&[
        "scan",
        "--config",
        path_str(&cfg),
        "--axis1",
        "qd:0.5:1.5",
        "--axis2",
        "Omega:-2:12",
        "--grid",
        "2x3",
        "--observables",
        "I_minus,G2mm",
        "--engine",
        "all",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let r: ScanResult = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(r.axis2.reported, vec![-2.0, 5.0, 12.0]);
    assert_eq!(r.axis2.values[0], 2.0 * c.omega0 - 2.0);
    assert_eq!(r.provenance.config, c);
    // master, diagrams and analytic for both observables
    assert_eq!(r.arrays.len(), 6);
    assert!(r.failures.is_empty());
}

#[test]
fn scan_from_spec_file_with_regrid() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let s = dce_core::sweep::figure_preset("fig5a", Some((50, 50))).unwrap();
    fs::write(&spec, serde_json::to_string(&s).unwrap()).unwrap();

    let o = dce(&["scan", "--spec", path_str(&spec), "--grid", "2x2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = read_csv(o.stdout.as_slice()).unwrap();
    assert_eq!(t.rows.len(), 4);
    assert!(t.columns.contains(&"overlay_g2_zero".to_string()));
}

#[test]
fn spectrum_defaults_to_stdout() {
    let o = dce(&["spectrum", "--grid", "1x9", "--omega=-5:15"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = read_csv(o.stdout.as_slice()).unwrap();
    let w = t.numeric("omega_minus_omega0").unwrap();
    assert_eq!((w[0], w[8]), (Some(-5.0), Some(15.0)));
    assert!(t.numeric("spectrum").unwrap().iter().all(|v| v.unwrap() >= 0.0));
}

#[test]
fn bad_inputs_fail_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    let mut v = serde_json::to_value(SystemConfig::single(0.1, 10.0, 0.0)).unwrap();
    v["detuning"] = 1.0.into();
    fs::write(&cfg, v.to_string()).unwrap();

    let o = dce(&["spectrum", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("detuning"), "{}", stderr(&o));

    let o = dce(&["figure", "fig7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fig6b"));

    // I1 is a single-qubit observable
    let s = dce_core::sweep::figure_preset("fig3a", Some((2, 2))).unwrap();
    let mut v = serde_json::to_value(s).unwrap();
    v["observables"] = serde_json::json!(["I1"]);
    let spec = dir.path().join("spec.json");
    fs::write(&spec, v.to_string()).unwrap();
    assert_eq!(dce(&["scan", "--spec", path_str(&spec)]).status.code(), Some(2));

    assert!(!dce(&["figure", "fig2", "--grid", "0x3"]).status.success());
}

#[test]
fn validate_exit_status_follows_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = dce(&["validate", "--level", "quick", "--out", path_str(&out)]);
    let report: ValidationReport = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(o.status.success(), report.passed);
    assert_eq!(
        report.criteria.iter().map(|c| c.id).collect::<Vec<_>>(),
        vec![1, 2, 6, 10]
    );
    let lines = stderr(&o);
    assert!(lines.contains("[PASS]  1"), "{lines}");
}
