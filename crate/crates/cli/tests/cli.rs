use std::path::PathBuf;
use std::process::{Command, Output};

fn maslov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maslov"))
        .args(args)
        .env("MASLOV_LOG", "quiet")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("maslov-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn run_reports_the_first_example() {
    let o = maslov(&["run", "--problem", "example1", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("Maslov index: -1"));
    assert!(text.contains("crossings: 1"));
    assert!(text.contains("1.34981"));
}

#[test]
fn run_reports_the_second_example() {
    let o = maslov(&["run", "--problem", "example2", "--lambda", "1", "--c", "-1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("Maslov index: -3"));
    assert!(text.contains("crossings: 3"));
}

#[test]
fn essential_spectrum_is_a_numerical_failure() {
    let o = maslov(&["run", "--problem", "example1", "--lambda", "-2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lambda-in-essential-spectrum"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["run", "--lambda", "1"],
        vec!["run", "--problem", "nope", "--lambda", "1"],
        vec!["run", "--problem", "example1"],
        vec![
            "run",
            "--problem",
            "example1",
            "--lambda",
            "1",
            "--step",
            "-1",
        ],
        vec![
            "run",
            "--problem",
            "example1",
            "--lambda",
            "1",
            "--method",
            "euler",
        ],
        vec!["sweep", "--problem", "example1", "--lambda-from", "0"],
        vec!["frobnicate"],
        vec![],
    ] {
        let o = maslov(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(maslov(&["--help"]).status.code(), Some(0));
}

#[test]
fn trace_has_one_row_per_step_and_gaps_at_poles() {
    let dir = scratch("trace");
    let out = dir.join("t.csv");
    let o = maslov(&[
        "trace",
        "--problem",
        "example1",
        "--lambda",
        "1",
        "--domain-half-width",
        "5",
        "--step",
        "0.01",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,det_x,mu_1,nu_1");
    assert_eq!(lines.len(), 1 + 1000 + 1);
    assert!(!text.contains('\r'));
    // μ goes to −∞ before the pole and comes back from +∞ after it.
    let rows: Vec<(f64, Option<f64>)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[2].parse().ok())
        })
        .collect();
    let before = rows
        .iter()
        .rev()
        .find(|(x, _)| *x < 1.3498)
        .unwrap()
        .1
        .unwrap();
    let after = rows.iter().find(|(x, _)| *x > 1.3499).unwrap().1.unwrap();
    assert!(before < -50.0 && after > 50.0, "{before} {after}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn trace_is_bit_identical_across_runs() {
    let args = [
        "trace",
        "--problem",
        "example2",
        "--lambda",
        "1",
        "--domain-half-width",
        "4",
    ];
    let a = maslov(&args);
    let b = maslov(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("x,det_x,mu_1,mu_2,nu_1,nu_2\n"));
}

#[test]
fn free_trace_is_constant() {
    let o = maslov(&[
        "trace",
        "--problem",
        "free",
        "--lambda",
        "3",
        "--domain-half-width",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines().skip(1) {
        let mu: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((mu - 2.0).abs() < 1e-12);
    }
}

#[test]
fn sweep_keeps_failed_rows() {
    let o = maslov(&[
        "sweep",
        "--problem",
        "example1",
        "--lambda-from",
        "-1.5",
        "--lambda-to",
        "2",
        "--lambda-step",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,maslov_index,crossing_count,status");
    assert_eq!(lines[1], "-1.5,,,lambda-in-essential-spectrum");
    assert!(lines.contains(&"0.5,-1,1,ok"));
    assert!(lines.contains(&"1,-1,1,ok"));
    assert_eq!(*lines.last().unwrap(), "2,0,0,ok");
    assert_eq!(lines.len(), 9);
}

#[test]
fn sweep_single_lambda_gives_one_row() {
    let o = maslov(&[
        "sweep",
        "--problem",
        "example2",
        "--lambda",
        "1",
        "--c",
        "-1",
    ]);
    assert_eq!(
        stdout(&o),
        "lambda,maslov_index,crossing_count,status\n1,-3,3,ok\n"
    );
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = scratch("config");
    let cfg = dir.join("run.json");
    std::fs::write(
        &cfg,
        r#"{"problem": "example1", "lambda": 2.0, "out": "result.json"}"#,
    )
    .unwrap();
    let o = maslov(&["run", "--config", cfg.to_str().unwrap(), "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("Maslov index: -1"));
    let json = std::fs::read_to_string(dir.join("result.json")).unwrap();
    assert!(json.contains("\"maslov_index\": -1"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn tabulated_potential_from_csv() {
    let dir = scratch("csv");
    let path = dir.join("v.csv");
    let mut text = String::from("x,v11\n");
    for i in 0..=4000 {
        let x = -20.0 + 0.01 * f64::from(i);
        text.push_str(&format!("{x},{}\n", -1.0 + 3.0 / (0.5 * x).cosh().powi(2)));
    }
    std::fs::write(&path, text).unwrap();
    let o = maslov(&[
        "run",
        "--potential-csv",
        path.to_str().unwrap(),
        "--lambda",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("Maslov index: -1"));
    assert!(stdout(&o).contains("warning"));

    std::fs::write(&path, "x,v11\n0,1\n1,oops\n").unwrap();
    let o = maslov(&[
        "run",
        "--potential-csv",
        path.to_str().unwrap(),
        "--lambda",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_lists_and_passes() {
    let o = maslov(&["verify", "--list"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("step-halving"));
    assert!(!stdout(&o).contains("PASS"));
    let o = maslov(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn verify_detects_a_coarse_step() {
    let o = maslov(&["verify", "--step", "0.5"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("FAIL step-halving"));
}
