use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fractal-mra"))
}

fn system(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("../../systems");
    p.push(format!("{name}.json"));
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn csv(out: &Output) -> (String, Vec<(f64, f64)>) {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| {
            let (x, y) = l.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    (header, rows)
}

#[test]
fn validate_auto_filled_third_cantor() {
    let out = run(&["validate", "--spec", &system("cantor3")]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["N"], 3);
    assert_eq!(v["result"]["A"], serde_json::json!([0, 2]));
    assert_eq!(v["result"]["auto_filled"], true);
    assert_eq!(v["result"]["passed"], true);
    assert_eq!(v["inputs"]["spec"].as_str().unwrap().len(), 64);
}

#[test]
fn validate_rejects_decreasing_map() {
    let out = run(&["validate", "--spec", &system("decreasing")]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    assert_eq!(v["result"]["passed"], false);
    let violations = v["result"]["violations"].to_string();
    assert!(violations.contains("not increasing"), "{violations}");
}

#[test]
fn validate_truncated_json_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"name\": \"cantor3\", \"core_maps\": [").unwrap();
    let out = run(&["validate", "--spec", path.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let missing = run(&["validate", "--spec", "/nonexistent/system.json"]);
    assert_eq!(code(&missing), 3);
}

#[test]
fn scaling_plot_data() {
    let out = run(&["scaling", "plot-data", "--spec", &system("nonlinear")]);
    assert_eq!(code(&out), 0);
    let (header, rows) = csv(&out);
    assert_eq!(header, "x,sigma");
    assert_eq!(rows.len(), 1001);
    assert_eq!(rows[0], (0.0, 0.0));
    let row = rows.iter().find(|r| r.0 == 0.75).unwrap();
    assert!((row.1 - 1.75).abs() < 1e-12, "{row:?}");

    let out = run(&["scaling", "plot-data", "--spec", &system("cantor3"), "--range", "-1,2", "--samples", "301"]);
    let (_, rows) = csv(&out);
    for (x, y) in rows {
        assert!((y - 3.0 * x).abs() < 1e-12, "{x} {y}");
    }
    let out = run(&["scaling", "plot-data", "--spec", &system("cantor3"), "--samples", "1"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn wavelet_reports_pass_and_share_the_gram_matrix() {
    let mut digests = Vec::new();
    for name in ["cantor3", "cantor4-gap", "nonlinear"] {
        let out = run(&["wavelet", "report", "--spec", &system(name), "--levels", "3", "--shifts", "8"]);
        assert_eq!(code(&out), 0, "{name}");
        let v = json(&out);
        assert!(v["result"]["max_deviation"].as_f64().unwrap() < 1e-10);
        assert_eq!(v["result"]["gram"]["dims"], 7 * 17 * 2);
        assert_eq!(v["tolerances"]["gram"], 1e-10);
        digests.push(v["result"]["gram_sha256"].as_str().unwrap().to_string());
    }
    assert_eq!(digests[0], digests[2]);
}

#[test]
fn wavelet_tolerance_breach_exits_two() {
    let out = run(&["wavelet", "report", "--spec", &system("cantor3"), "--levels", "1", "--shifts", "1", "--tol", "1e-300"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["result"]["exact_checks_passed"], true);
    let out = run(&["wavelet", "report", "--spec", &system("cantor3"), "--tol", "-1"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn reports_are_reproducible_and_record_the_seed() {
    let args = ["wavelet", "report", "--spec", &system("haar"), "--levels", "1", "--shifts", "2", "--seed", "17"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 17);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let mut with_out: Vec<&str> = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let c = run(&with_out);
    assert_eq!(code(&c), 0);
    assert!(c.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), a.stdout);
}

#[test]
fn fourier_quarter_cantor_auto_dual_set() {
    let out = run(&["fourier", "report", "-A", "0,3", "-N", "4"]);
    let v = json(&out);
    let r = &v["result"];
    assert_eq!(r["L"], serde_json::json!(["0", "2"]));
    assert_eq!(r["unitary"], true);
    assert!(r["unitarity_dev"].as_f64().unwrap() < 1e-12);
    assert!(r["gram_max_offdiag"].as_f64().unwrap() < 5e-6);
    assert_eq!(r["q_monotone"], true);
    assert!(r["q_max"].as_f64().unwrap() <= 1.0 + 1e-9);
    // the completeness sums level off near 0.466 at t = 1/2
    assert!((r["q_min"].as_f64().unwrap() - 0.4659).abs() < 1e-3);
    assert_eq!(r["verdict"], "inconclusive");
    assert_eq!(code(&out), 2);
}

#[test]
fn fourier_third_cantor_negative_result() {
    let out = run(&["fourier", "report", "-A", "0,2", "-N", "3"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["result"]["dual_sets_mod_N"], serde_json::json!([]));

    let out = run(&["fourier", "report", "-A", "0,2", "-N", "3", "-L", "0,3/4"]);
    assert_eq!(code(&out), 1);
    let r = json(&out)["result"].clone();
    assert_eq!(r["unitary"], true);
    assert_eq!(r["verdict"], "orthonormality-fails");
    let w = r["gram_witness"]["modulus"].as_f64().unwrap();
    assert!((w - 0.466).abs() < 1e-3, "{w}");
}

#[test]
fn fourier_dyadic_examples() {
    // Λ = ℕ misses the negative frequencies of Lebesgue measure
    let out = run(&["fourier", "report", "-A", "0,1", "-N", "2", "-L", "0,1"]);
    let r = json(&out)["result"].clone();
    assert!(r["gram_max_offdiag"].as_f64().unwrap() < 1e-12);
    assert!(r["q_min"].as_f64().unwrap() < 0.95);
    assert_eq!(code(&out), 2);

    let out = run(&["fourier", "report", "-A", "0,2", "-N", "4", "-L", "0,1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["result"]["verdict"], "ONB-consistent");
}

#[test]
fn fourier_bad_input() {
    assert_eq!(code(&run(&["fourier", "report", "-A", "0,x", "-N", "4"])), 3);
    assert_eq!(code(&run(&["fourier", "report", "-A", "1,3", "-N", "4"])), 3);
    assert_eq!(code(&run(&["fourier", "report", "-A", "0,3", "-N", "4", "-L", "0,a/b"])), 3);
    assert_eq!(code(&run(&["fourier"])), 3);
    assert_eq!(code(&run(&["no-such-command"])), 3);
}

#[test]
fn conjugacy_eval_digit_map() {
    let out = run(&[
        "conjugacy", "eval", "--source", &system("cantor4-gap"), "--target", &system("cantor3"),
        "--x", "3/4,3/16", "--depth", "30",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let rows = v["result"].as_array().unwrap();
    let expected = [2.0 / 3.0, 2.0 / 9.0];
    for (row, e) in rows.iter().zip(expected) {
        let value = row["phi"]["value"].as_f64().unwrap();
        let bound = row["phi"]["error_bound"].as_f64().unwrap();
        assert!(bound <= (1.0f64 / 3.0).powi(30) * 1.0001);
        assert!((value - e).abs() <= bound + 1e-15, "{value} {e}");
    }
    assert_eq!(v["inputs"].as_object().unwrap().len(), 2);
}

#[test]
fn conjugacy_plot_is_monotone() {
    let out = run(&[
        "conjugacy", "plot-data", "--source", &system("cantor4-gap"), "--target", &system("cantor3"),
        "--samples", "1024",
    ]);
    assert_eq!(code(&out), 0);
    let (header, rows) = csv(&out);
    assert_eq!(header, "x,phi");
    assert_eq!(rows.len(), 1024);
    assert_eq!(rows[0], (0.0, 0.0));
    assert_eq!(*rows.last().unwrap(), (1.0, 1.0));
    assert!(rows.windows(2).all(|w| w[0].1 <= w[1].1));
}

#[test]
fn conjugacy_gram_and_mismatch() {
    let out = run(&[
        "conjugacy", "gram", "--source", &system("cantor4-gap"), "--target", &system("cantor3"),
        "--count", "8", "--depth", "12", "--tol", "2e-3",
    ]);
    assert_eq!(code(&out), 0);
    let r = json(&out)["result"].clone();
    assert_eq!(r["N"], 4);
    assert_eq!(r["A"], serde_json::json!([0, 3]));
    assert_eq!(r["lambdas"].as_array().unwrap().len(), 8);
    assert!(r["quadrature_deviation"].as_f64().unwrap() < 2e-3);
    assert_eq!(r["change_of_variables_deviation"], 0.0);

    let out = run(&["conjugacy", "eval", "--source", &system("cantor4"), "--target", &system("cantor3"), "--x", "0.5"]);
    assert_eq!(code(&out), 3);
    let out = run(&["conjugacy", "gram", "--source", &system("nonlinear"), "--target", &system("cantor3")]);
    assert_eq!(code(&out), 3);
}
