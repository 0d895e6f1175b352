use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run_with(args: &[&str], stdin: Option<&str>, env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ewit"));
    cmd.args(args).env_remove("EWIT_TOL");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let mut child = cmd.spawn().unwrap();
    if let Some(text) = stdin {
        child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    }
    let out = child.wait_with_output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn run(args: &[&str]) -> Run {
    run_with(args, None, &[])
}

fn csv_rows(text: &str) -> Vec<(f64, f64, String)> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,ne,verdict"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].to_string())
        })
        .collect()
}

#[test]
fn verify_two_correlators_of_chi3() {
    let r = run(&["verify", "--input", &data("chi3_7pi9.json"), "--set", "XX,ZZ"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc = r.json();
    assert_eq!(doc["command"], "verify");
    assert_eq!(doc["input_digest"].as_str().unwrap().len(), 64);
    let res = &doc["result"];
    assert!((res["ne"].as_f64().unwrap() - 1.36).abs() < 1e-6);
    assert_eq!(res["verdict"], "entangled");
    assert!(res["witness"]["tr_minus"].as_f64().unwrap() < 0.0);
    assert_eq!(res["class"]["class"], "TwoGeneric");
}

#[test]
fn verify_all_zero_grid_is_undetected() {
    let grid = r#"{"dims":[2,2],"correlators":{"XX":0,"YY":0,"ZZ":0}}"#;
    let r = run_with(&["verify", "--input", "-"], Some(grid), &[]);
    assert_eq!(r.code, 1, "{}", r.stderr);
    assert_eq!(r.json()["result"]["ne"].as_f64(), Some(0.0));
}

#[test]
fn verify_line_sets_never_detect() {
    for grid in [data("chi3_7pi9.json"), data("main_example.json")] {
        let r = run(&["verify", "--input", &grid, "--set", "XX,XY"]);
        assert_eq!(r.code, 1, "{}", r.stderr);
        let res = r.json()["result"].clone();
        assert!(res["note"].as_str().unwrap().contains("line pattern cannot detect"));
        assert_eq!(res["verdict"], "undetected");
    }
}

#[test]
fn verify_input_errors_exit_two() {
    let bad = [
        ("{\"dims\":[2,2],\"correlators\":{\"XX\":2.0}}", "outside"),
        ("{\"dims\":[2,2],\"correlators\":{\"XX\":0.1,\"XX\":0.2}}", "duplicate"),
        ("not json", "malformed"),
    ];
    for (text, needle) in bad {
        let r = run_with(&["verify", "--input", "-"], Some(text), &[]);
        assert_eq!(r.code, 2);
        assert!(r.stderr.contains(needle), "{}", r.stderr);
    }
    assert_eq!(run(&["verify", "--input", "/nonexistent/grid.json"]).code, 2);
    let r = run(&["verify", "--input", &data("main_example.json"), "--set", "ZZ,YY"]);
    assert_eq!(r.code, 2);
}

#[test]
fn csv_and_json_inputs_share_a_digest() {
    let csv = "a,b,value\nX,X,0.6964\nY,X,-0.5956\nZ,Y,0.6157\nZ,Z,0.6636\n";
    let a = run_with(&["verify", "--input", "-", "--format", "csv"], Some(csv), &[]);
    let b = run(&["verify", "--input", &data("chi3_7pi9.json")]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.json()["input_digest"], b.json()["input_digest"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn witness_for_the_three_correlator_example() {
    let r = run(&["witness", "--input", &data("main_example.json"), "--set", "XX,XY,ZX"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let res = r.json()["result"].clone();
    assert!((res["ne"].as_f64().unwrap() - 1.35).abs() < 5e-3);
    assert!(res["tr_minus"].as_f64().unwrap().min(res["tr_plus"].as_f64().unwrap()) < 0.0);
    assert_eq!(res["verdict"], "entangled");
}

#[test]
fn witness_with_explicit_expansion() {
    let r = run(&["witness", "--input", &data("chi3_7pi9.json"), "--coeffs", "XX=1,ZZ=1"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let res = r.json()["result"].clone();
    assert_eq!(res["bound"].as_f64(), Some(1.0));
    assert!((res["tr_minus"].as_f64().unwrap() + 0.36).abs() < 1e-12);
    assert!((res["ne"].as_f64().unwrap() - 1.36).abs() < 1e-12);
}

#[test]
fn chi1_sweep_peaks_at_the_bell_state() {
    let r = run(&["sweep", "--family", "chi1", "--set", "XX,YY,ZZ"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = csv_rows(&r.stdout);
    assert_eq!(rows.len(), 19);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
    let mid = &rows[9];
    assert_eq!(mid.0, 0.0);
    assert!((mid.1 - 3.0).abs() < 1e-6);
}

#[test]
fn psi_theta_sweep_follows_one_plus_sin() {
    let r = run(&["sweep", "--family", "psi_theta", "--set", "XX,ZZ", "--from", "-pi", "--to", "pi"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    for (theta, ne, verdict) in csv_rows(&r.stdout) {
        let expect = 1.0 + (2.0 * theta).sin().abs();
        assert!((ne - expect).abs() < 1e-6, "theta {theta}: {ne} vs {expect}");
        assert_eq!(verdict == "entangled", expect > 1.0 + 1e-6);
    }
}

#[test]
fn sampled_sweeps_are_reproducible() {
    let args = ["sweep", "--family", "chi3", "--set", "XX,YX,ZY,ZZ", "--shots", "500", "--steps", "7"];
    let a = run(&[&args[..], &["--seed", "11"]].concat());
    let b = run(&[&args[..], &["--seed", "11"]].concat());
    let c = run(&[&args[..], &["--seed", "12"]].concat());
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let j = run(&[&args[..], &["--seed", "11", "--format", "json"]].concat()).json();
    assert_eq!(j["result"]["rows"].as_array().unwrap().len(), 7);
    assert_eq!(j["result"]["rows"][0]["theta_pi"], "-pi");
}

#[test]
fn sweep_argument_errors() {
    assert_eq!(run(&["sweep", "--family", "chi1", "--set", "XX", "--shots", "10"]).code, 2);
    assert_eq!(run(&["sweep", "--family", "chi1", "--set", "XX", "--steps", "1"]).code, 2);
    assert_eq!(run(&["sweep", "--family", "chi1", "--set", "XX", "--from", "0.5"]).code, 2);
    assert_eq!(run(&["sweep", "--family", "chi1", "--set", "XX", "--noise", "1.5"]).code, 2);
}

#[test]
fn simulated_full_grid_dominates_four_correlators() {
    let r = run(&["simulate", "--family", "chi3", "--theta", "7pi/9"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let grid: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(grid["correlators"].as_object().unwrap().len(), 9);
    let full = run_with(&["verify", "--input", "-"], Some(&r.stdout), &[]);
    let four = run_with(&["verify", "--input", "-", "--set", "XX,YX,ZY,ZZ"], Some(&r.stdout), &[]);
    let (f, k) = (full.json()["result"]["ne"].as_f64().unwrap(), four.json()["result"]["ne"].as_f64().unwrap());
    assert!(k > 1.0, "{k}");
    assert!(f >= k - 1e-7, "{f} < {k}");
}

#[test]
fn fully_depolarized_grid_is_zero() {
    let r = run(&["simulate", "--family", "bell", "--noise", "1"]);
    let grid: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!(grid["correlators"].as_object().unwrap().values().all(|v| v.as_f64() == Some(0.0)));
}

#[test]
fn simulate_is_seeded_and_emits_csv() {
    let args = ["simulate", "--family", "chi1", "--theta", "pi/3", "--shots", "200"];
    let a = run(&[&args[..], &["--seed", "5"]].concat());
    let b = run(&[&args[..], &["--seed", "5"]].concat());
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    let csv = run(&["simulate", "--family", "bell", "--format", "csv"]);
    assert!(csv.stdout.starts_with("a,b,value\n"));
    assert_eq!(csv.stdout.lines().count(), 10);
}

#[test]
fn classify_and_orbit() {
    let r = run(&["classify", "--set", "XX,YY,ZZ"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json()["result"]["class"], "ThreeDiagonal");
    assert_eq!(r.json()["result"]["can_detect"], true);
    let r = run(&["classify", "--set", "XY,XZ"]);
    assert_eq!(r.json()["result"]["can_detect"], false);

    let doc = run(&["orbit", "--k", "3"]).json();
    let mut sizes: Vec<u64> = doc["result"]["sizes"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    sizes.sort_unstable();
    assert_eq!(sizes, vec![3, 3, 6, 18, 18, 36]);
    assert_eq!(run(&["orbit", "--k", "0"]).code, 2);
}

#[test]
fn spi_product_maximum_and_partition() {
    let obs = r#"[{"coeff": 1.0, "paulis": "ZZZ"}]"#;
    let r = run_with(&["spi", "--input", "-"], Some(obs), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!((r.json()["result"]["lambda_max"].as_f64().unwrap() - 1.0).abs() < 1e-10);

    let path = data("three_qubit_observable.json");
    let prod = run(&["spi", "--input", &path]).json();
    let block = run(&["spi", "--input", &path, "--partition", "0,1|2"]).json();
    assert!((prod["result"]["lambda_max"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!((block["result"]["lambda_max"].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert_eq!(run(&["spi", "--input", &path, "--partition", "0|0,2"]).code, 2);
}

#[test]
fn spi_multipartite_estimates() {
    let r = run(&["spi", "--input", &data("ghz_estimates.json"), "--ne"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let res = r.json()["result"].clone();
    assert!(res["ne"].as_f64().unwrap() > 1.0);
    assert_eq!(res["verdict"], "entangled");
}

#[test]
fn tolerance_env_is_overridden_by_flag() {
    let input = data("chi3_7pi9.json");
    assert_eq!(run_with(&["verify", "--input", &input], None, &[("EWIT_TOL", "oops")]).code, 2);
    let r = run_with(&["verify", "--input", &input, "--tol", "1e-9"], None, &[("EWIT_TOL", "oops")]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let loose = run_with(&["verify", "--input", &input], None, &[("EWIT_TOL", "1e-3")]).json();
    let gap = loose["result"]["diagnostics"]["duality_gap"].as_f64().unwrap();
    assert!(gap > 1e-8 && gap <= 1e-3, "{gap}");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for args in [
        vec!["verify", "--input", "X", "--set", "XX,YX,ZY"],
        vec!["witness", "--input", "X"],
    ] {
        let path = data("chi3_7pi9.json");
        let args: Vec<&str> = args.iter().map(|a| if *a == "X" { path.as_str() } else { a }).collect();
        assert_eq!(run(&args).stdout, run(&args).stdout);
    }
}
