use std::fs;
use std::process::{Command, Output};

fn cellmis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellmis"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn presets_are_listed_and_printable() {
    let out = cellmis(&["presets"]);
    assert!(out.status.success());
    let list = stdout(&out);
    for name in ["minimal", "motivating", "grid-bounds", "rooms-dynamics"] {
        assert!(list.lines().any(|l| l.starts_with(name)), "{name} not in\n{list}");
    }
    let one = cellmis(&["presets", "minimal"]);
    assert!(one.status.success());
    assert!(stdout(&one).contains("[scenario]"));
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("res");
    let out = cellmis(&["run", "-p", "minimal", "-o", target.to_str().unwrap(), "--baselines", "stdma"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("proposed")));
    assert!(text.lines().any(|l| l.starts_with("stdma")));
    let metrics = fs::read_to_string(target.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("policy,objective,value"));
}

#[test]
fn run_accepts_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("minimal.toml");
    fs::write(&cfg, stdout(&cellmis(&["presets", "minimal"]))).unwrap();
    let target = dir.path().join("res");
    let out = cellmis(&[
        "run",
        cfg.to_str().unwrap(),
        "-o",
        target.to_str().unwrap(),
        "--objective",
        "sum",
        "--baselines",
        "",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn bounds_reports_grid_quantities() {
    let out = cellmis(&["bounds", "-p", "grid-bounds"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("max degree        4"), "{text}");
    assert!(text.contains("proof ratio       0.194"), "{text}");
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = cellmis(&["sweep", "-p", "minimal", "-a", "seed=1,2", "-o", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&csv).unwrap().lines().count() >= 3);
}

#[test]
fn events_from_script() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("events.txt");
    fs::write(&script, "exit 0\nenter 0 0.25 1000 5 0\n").unwrap();
    let csv = dir.path().join("events.csv");
    let out = cellmis(&[
        "events",
        "-p",
        "rooms-dynamics",
        "--script",
        script.to_str().unwrap(),
        "-o",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("entries satisfied: 1/1"), "{text}");
    assert!(text.contains("color clashes: 0"), "{text}");
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 3);
}

#[test]
fn bad_input_fails_cleanly() {
    let out = cellmis(&["run", "-p", "no-such-preset"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));
    assert!(!cellmis(&["run", "-p", "minimal", "--objective", "median"]).status.success());
    assert!(!cellmis(&["sweep", "-p", "minimal", "-a", "link.nope=1"]).status.success());
    assert!(!cellmis(&["events", "-p", "minimal"]).status.success());
}
