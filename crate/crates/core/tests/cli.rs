use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smooth-track"))
}

const SCENARIOS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");

#[test]
fn simulate_writes_trace_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .arg("simulate")
        .arg(format!("{SCENARIOS}/straight_kinematic.toml"))
        .arg("--out")
        .arg(dir.path())
        .arg("--plot")
        .status()
        .unwrap();
    assert!(status.success());
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.iter().any(|n| n.ends_with("_trace.csv")), "{names:?}");
    assert!(
        names.iter().any(|n| n.ends_with("_metrics.csv")),
        "{names:?}"
    );
    assert!(names.iter().any(|n| n.ends_with(".svg")), "{names:?}");
}

#[test]
fn tune_prints_a_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let limits = dir.path().join("limits.toml");
    std::fs::write(
        &limits,
        "delta_max = 0.5\nddelta_dt_max = 1.0\ndddelta_dt_max = 4.0\n",
    )
    .unwrap();
    let vehicle = dir.path().join("vehicle.toml");
    let params = smooth_track::plant::KineticParams::default();
    std::fs::write(&vehicle, toml::to_string(&params).unwrap()).unwrap();
    let out = bin()
        .args(["tune", "--v-max", "5", "--vehicle"])
        .arg(&vehicle)
        .arg("--limits")
        .arg(&limits)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6, "{text}");
}

#[test]
fn sweep_reports_one_row_per_value() {
    let out = bin()
        .args(["sweep", "--param", "speed", "--values", "4,6", "--scenario"])
        .arg(format!("{SCENARIOS}/straight_kinematic.toml"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.contains("speed=4"));
}

#[test]
fn missing_scenario_fails_cleanly() {
    let out = bin()
        .args(["simulate", "/nonexistent.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
