use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn smooth_cubes(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smooth-cubes"))
        .current_dir(dir)
        .args(args)
        .env_remove("SMOOTH_CUBES_H")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

#[test]
fn iterate_then_compare_against_bundled_table() {
    let dir = TempDir::new().unwrap();
    let run = smooth_cubes(
        dir.path(),
        &["iterate", "--h", "1e-4", "--mode", "dominant"],
    );
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert!(dir.path().join("out/grid.csv").exists());
    let log = fs::read_to_string(dir.path().join("out/sweeps.log")).unwrap();
    assert!(log.lines().any(|l| l.starts_with("sweep=1 changed=")));

    let compare = smooth_cubes(dir.path(), &["compare", "--tol", "1e-6"]);
    assert_eq!(code(&compare), 0, "{}", stdout(&compare));

    let query = smooth_cubes(dir.path(), &["query", "--s", "6"]);
    let delta: f64 = stdout(&query)
        .lines()
        .find_map(|l| l.strip_prefix("delta = "))
        .expect("delta line")
        .parse()
        .unwrap();
    assert!((delta - 0.24871567).abs() < 1e-7, "{delta}");

    let table = smooth_cubes(dir.path(), &["table"]);
    let rows = stdout(&table);
    assert_eq!(rows.lines().count(), 40);
    assert!(rows.contains("7.7 | 0.85000000 | 0.00000000"));
    assert!(dir.path().join("out/table.csv").exists());

    let derive = smooth_cubes(dir.path(), &["derive"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&derive)).unwrap();
    assert_eq!(json["beta_display"], "0.91709477");
    assert_eq!(json["waring_threshold_display"], "7.5906");
    assert!(dir.path().join("out/derived.json").exists());
}

#[test]
fn compare_beyond_tolerance_exits_five() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&smooth_cubes(dir.path(), &["iterate", "--h", "0.1"])),
        0
    );
    let compare = smooth_cubes(dir.path(), &["compare", "--tol", "1e-9"]);
    assert_eq!(code(&compare), 5);
    let reference = dir.path().join("ref.csv");
    fs::write(&reference, "s,delta,Delta\n4.0,0.5,1.5\n").unwrap();
    let custom = smooth_cubes(
        dir.path(),
        &[
            "compare",
            "--ref",
            reference.to_str().unwrap(),
            "--tol",
            "0.1",
        ],
    );
    assert_eq!(code(&custom), 5);
}

#[test]
fn oracle_prints_exact_counts() {
    let dir = TempDir::new().unwrap();
    let out = smooth_cubes(dir.path(), &["oracle", "--P", "8", "--R", "2", "--k", "2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "28");
    let csv = fs::read_to_string(dir.path().join("out/oracle.csv")).unwrap();
    assert!(csv.contains("P,R,k_or_hybrid,set_size,count\n8,2,2,4,28\n"));

    let hybrid = smooth_cubes(
        dir.path(),
        &["oracle", "--P", "2e0", "--R", "2", "--k", "hybrid"],
    );
    assert_eq!(stdout(&hybrid).trim(), "20");
}

#[test]
fn slope_over_a_series() {
    let dir = TempDir::new().unwrap();
    let out = smooth_cubes(dir.path(), &["slope", "--P", "10,20,40", "--k", "1"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("slope = 1.000000"));
    let fixed = smooth_cubes(
        dir.path(),
        &["slope", "--P", "10,20,40", "--policy", "fixed"],
    );
    assert_eq!(code(&fixed), 2);
    let short = smooth_cubes(dir.path(), &["slope", "--P", "10,20"]);
    assert_eq!(code(&short), 1);
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&smooth_cubes(dir.path(), &["iterate", "--h", "abc"])),
        2
    );
    assert_eq!(
        code(&smooth_cubes(dir.path(), &["iterate", "--h", "0.3"])),
        2
    );
    assert_eq!(code(&smooth_cubes(dir.path(), &["frobnicate"])), 2);
    assert_eq!(
        code(&smooth_cubes(
            dir.path(),
            &["oracle", "--P", "8", "--R", "2", "--k", "9"]
        )),
        2
    );
    assert_eq!(
        code(&smooth_cubes(
            dir.path(),
            &["iterate", "--h", "1e-5", "--mode", "full"]
        )),
        3
    );
    assert_eq!(
        code(&smooth_cubes(
            dir.path(),
            &["oracle", "--P", "1e5", "--R", "1e5"]
        )),
        3
    );
    assert_eq!(
        code(&smooth_cubes(
            dir.path(),
            &["iterate", "--h", "0.1", "--max-sweeps", "2"]
        )),
        4
    );
    // the unconverged grid was still written, but derived constants are refused
    assert_eq!(code(&smooth_cubes(dir.path(), &["derive"])), 4);
}

#[test]
fn artifacts_are_reproducible_without_timestamp() {
    let dir = TempDir::new().unwrap();
    let read = |name: &str| fs::read(dir.path().join("out").join(name)).unwrap();
    let args = ["--no-timestamp", "iterate", "--h", "0.01"];
    assert_eq!(code(&smooth_cubes(dir.path(), &args)), 0);
    let (grid, log) = (read("grid.csv"), read("sweeps.log"));
    assert_eq!(code(&smooth_cubes(dir.path(), &args)), 0);
    assert_eq!(grid, read("grid.csv"));
    assert_eq!(log, read("sweeps.log"));
    assert!(!String::from_utf8(grid).unwrap().contains("generated="));

    assert_eq!(
        code(&smooth_cubes(dir.path(), &["iterate", "--h", "0.01"])),
        0
    );
    assert!(String::from_utf8(read("grid.csv"))
        .unwrap()
        .starts_with("# generated="));
}

#[test]
fn settings_from_environment_and_config_file() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_smooth-cubes"))
        .current_dir(dir.path())
        .args(["iterate", "--max-sweeps", "1e4"])
        .env("SMOOTH_CUBES_H", "0.05")
        .env("SMOOTH_CUBES_OUT", "env-out")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let grid = fs::read_to_string(dir.path().join("env-out/grid.csv")).unwrap();
    assert!(grid.contains("# h=0.05"));

    let config = dir.path().join("run.cfg");
    fs::write(
        &config,
        "step_h = 0.02\nmode = full\ninflation_tau = 1e-9\n",
    )
    .unwrap();
    let out = smooth_cubes(
        dir.path(),
        &["iterate", "--config", config.to_str().unwrap()],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("mode = full"));

    fs::write(&config, "step_h = 0.02\nbogus = 1\n").unwrap();
    assert_eq!(
        code(&smooth_cubes(
            dir.path(),
            &["iterate", "--config", config.to_str().unwrap()]
        )),
        2
    );
}
