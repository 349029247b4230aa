use std::process::{Command, Output};

fn herald(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_herald"))
        .args(args)
        .env_remove("HERALD_THREADS")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field(out: &Output, key: &str) -> String {
    stdout(out)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")).map(str::to_string))
        .unwrap_or_else(|| panic!("no {key} in output:\n{}", stdout(out)))
}

const SMALL_GRID: &[&str] = &[
    "--r-min",
    "0.1",
    "--r-max",
    "1.2",
    "--r-steps",
    "4",
    "--t-min",
    "0.2",
    "--t-max",
    "0.8",
    "--t-steps",
    "3",
];

#[test]
fn tmsvs_reports_source_negativity() {
    let out = herald(&["tmsvs", "--r", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let e_n: f64 = field(&out, "E_N").parse().unwrap();
    assert!((e_n - std::f64::consts::LOG2_E).abs() < 1e-6);
    assert!(stdout(&out).contains("\nk,coefficient\n0,0.88681888397\n"));
}

#[test]
fn fock_input_at_kill_zero_is_annihilated() {
    let out = herald(&[
        "setup1",
        "--m",
        "1",
        "--m-prime",
        "1",
        "--T",
        "0.5",
        "--r",
        "1e-9",
        "--fock-input",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(field(&out, "annihilated"), "true");
    assert_eq!(field(&out, "E_N"), "");
}

#[test]
fn verify_passes() {
    let out = herald(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).ends_with("checks, 0 failed\n"));
}

#[test]
fn angle_flags_are_exclusive_and_required() {
    assert_eq!(
        herald(&["setup1", "--r", "0.5", "--T", "0.5", "--theta", "0.3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(herald(&["setup1", "--r", "0.5"]).status.code(), Some(2));
    assert_eq!(
        herald(&["setup1", "--r", "0.5", "--T", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        herald(&["setup1", "--r", "0.5", "--T", "0.5", "--theta-a", "0.7"])
            .status
            .code(),
        Some(2)
    );
    let bad = herald(&["pk", "--r", "0.5"]);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("Usage"));
}

#[test]
fn theta_and_transmittance_agree() {
    let by_t = herald(&["setup2", "--r", "0.3", "--T", "0.5", "--m", "1"]);
    let by_theta = herald(&[
        "setup2",
        "--r",
        "0.3",
        "--theta",
        "0.7853981633974483",
        "--m",
        "1",
    ]);
    assert_eq!(
        field(&by_t, "success_prob"),
        field(&by_theta, "success_prob")
    );
    assert_eq!(field(&by_t, "E_N"), field(&by_theta, "E_N"));
}

#[test]
fn truncation_guard_and_override() {
    let args = [
        "setup1", "--r", "1.5", "--T", "0.5", "--m", "1", "--cutoff", "60",
    ];
    assert_eq!(herald(&args).status.code(), Some(3));
    let mut lenient = args.to_vec();
    lenient.push("--allow-truncation");
    assert_eq!(herald(&lenient).status.code(), Some(0));
}

#[test]
fn sweep_is_deterministic_and_file_matches_stdout() {
    let mut args = vec!["sweep", "--protocol", "setup2", "--m", "1"];
    args.extend_from_slice(SMALL_GRID);
    let a = herald(&args);
    let b = herald(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(
        text.lines().next(),
        Some("r,T,success_prob,E_N,delta_E_N,spill")
    );
    assert_eq!(text.lines().count(), 1 + 12);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let mut to_file = args.clone();
    to_file.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let c = herald(&to_file);
    assert_eq!(c.status.code(), Some(0));
    assert!(c.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), a.stdout);

    let threaded = Command::new(env!("CARGO_BIN_EXE_herald"))
        .args(&args)
        .env("HERALD_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(threaded.stdout, a.stdout);
}

#[test]
fn json_lines_carry_schema_version() {
    let mut args = vec![
        "sweep",
        "--protocol",
        "setup1",
        "--m",
        "1",
        "--m-prime",
        "1",
        "--format",
        "json-lines",
    ];
    args.extend_from_slice(SMALL_GRID);
    let out = herald(&args);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("{\"schema_version\":1}"));
    let row: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert!(row.get("delta_E_N").is_some() && row.get("T").is_some());
}

#[test]
fn annihilated_cells_are_empty() {
    // Vacuum source with one photon heralded and none injected.
    let out = herald(&[
        "sweep",
        "--protocol",
        "setup1",
        "--m",
        "0",
        "--m-prime",
        "1",
        "--r-min",
        "0",
        "--r-max",
        "0",
        "--r-steps",
        "2",
        "--t-min",
        "0.25",
        "--t-max",
        "0.5",
        "--t-steps",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "r,T,success_prob,E_N,delta_E_N,spill\n0,0.25,0,,,0\n0,0.5,0,,,0\n0,0.25,0,,,0\n0,0.5,0,,,0\n"
    );
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let mut args = vec!["sweep", "--protocol", "setup1"];
    args.extend_from_slice(SMALL_GRID);
    let out = Command::new(env!("CARGO_BIN_EXE_herald"))
        .args(&args)
        .env("HERALD_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn optimize_reports_infeasible_floor() {
    let out = herald(&[
        "optimize",
        "--protocol",
        "setup1",
        "--m",
        "1",
        "--m-prime",
        "1",
        "--p-min",
        "0.999",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn optimize_finds_premixed_gain_above_half() {
    let out = herald(&[
        "optimize",
        "--protocol",
        "setup2_analytic",
        "--m",
        "1",
        "--p-min",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let delta: f64 = field(&out, "delta_E_N").parse().unwrap();
    let success: f64 = field(&out, "success_prob").parse().unwrap();
    assert!(delta > 0.0 && success >= 0.5);
}

#[test]
fn pk_lists_distribution_and_mode() {
    let out = herald(&["pk", "--r", "1.2", "--T", "0.95", "--k-limit", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(field(&out, "pk_mode"), "1");
    assert_eq!(
        stdout(&out)
            .lines()
            .filter(|l| l.starts_with(char::is_numeric))
            .count(),
        6
    );
}
