use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;

use rhcan::quadrature::{gauss_legendre_grid, Interval};
use serde_json::{json, Value};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn rhcan(args: &[&str]) -> Run {
    rhcan_env(args, &[])
}

fn rhcan_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rhcan"));
    cmd.args(args).env_remove("RHCAN_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn json_of(run: &Run) -> Value {
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    serde_json::from_str(&run.stdout).expect("stdout is JSON")
}

fn temp_file(name: &str, body: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("rhcan-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, body).unwrap();
    path
}

type Cx = (f64, f64);

fn entry(v: &Value) -> Cx {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn mat(v: &Value) -> Vec<Vec<Cx>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|row| row.as_array().unwrap().iter().map(entry).collect())
        .collect()
}

fn dist(a: &[Vec<Cx>], b: &[Vec<Cx>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x.0 - y.0).hypot(x.1 - y.1))
        .fold(0.0, f64::max)
}

fn all_pass(doc: &Value) -> bool {
    doc["residuals"]
        .as_object()
        .unwrap()
        .values()
        .all(|c| c["pass"] == json!(true))
}

fn mul(a: Cx, b: Cx) -> Cx {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn conj(a: Cx) -> Cx {
    (a.0, -a.1)
}

fn cis(t: f64) -> Cx {
    (t.cos(), t.sin())
}

#[test]
fn list_examples_names_every_tag() {
    let run = rhcan(&["list-examples"]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.contains("rank-one (Eq. 46–49)"));
    assert!(run.stdout.contains("airy (Eq. 114)"));
    for tag in ["unitary-phi", "sine", "psi-form", "sine-gamma", "bessel"] {
        assert!(run.stdout.contains(tag), "missing {tag}");
    }
}

#[test]
fn solve_rank_one_matches_closed_form() {
    let doc = json_of(&rhcan(&["solve", "--example", "rank-one", "--n", "256", "--z", "0,2"]));
    assert!(all_pass(&doc));
    assert!(doc["residuals"]["f2_exact"]["value"].as_f64().unwrap() <= 1e-6);
    // F2 = [-q, q̄] with q(x) = x + 1/(2(π-1)) + iπ/(π-1)
    let d = PI - 1.0;
    let rows = doc["results"]["F2"].as_array().unwrap();
    assert_eq!(rows.len(), 256);
    for row in rows {
        let x = row["x"].as_f64().unwrap();
        let q = (x + 0.5 / d, PI / d);
        let want = vec![vec![(-q.0, -q.1), conj(q)]];
        assert!(dist(&mat(&row["value"]), &want) < 1e-6, "x = {x}");
    }
}

#[test]
fn solve_sine_jump_passes() {
    let run = rhcan(&["solve", "--example", "sine", "--u", "1.0", "--n", "256"]);
    let doc = json_of(&run);
    assert!(doc["residuals"]["jump"]["value"].as_f64().unwrap() <= 1e-4);
    assert_eq!(doc["results"]["W"].as_array().unwrap().len(), 3);
    assert!(run.stderr.contains("jump") && run.stderr.contains("PASS"));
}

#[test]
fn z_accepts_negative_real_parts() {
    let doc = json_of(&rhcan(&[
        "solve",
        "--example",
        "sine",
        "--n",
        "32",
        "--z",
        "-3,1",
        "--z=-0.5,-2",
    ]));
    let zs: Vec<Cx> = doc["meta"]["z_samples"].as_array().unwrap().iter().map(entry).collect();
    assert_eq!(zs, vec![(-3.0, 1.0), (-0.5, -2.0)]);
}

/// `Ψ - (1/π) ∫_0^ξ sin u(x-t)/(x-t) Ψ(t) dt = e^{-iux}` by Neumann iteration; the
/// kernel norm is at most uξ/π < 1 here.
fn psi_sine(u: f64, xi: f64, n: usize) -> (Vec<f64>, Vec<f64>, Vec<Cx>) {
    let g = gauss_legendre_grid(Interval::new(0.0, xi).unwrap(), n).unwrap();
    let (x, w) = (g.nodes().to_vec(), g.weights().to_vec());
    let k = |s: f64| {
        if s.abs() < 1e-12 {
            u / PI
        } else {
            (u * s).sin() / (PI * s)
        }
    };
    let rhs: Vec<Cx> = x.iter().map(|&t| cis(-u * t)).collect();
    let mut psi = rhs.clone();
    for _ in 0..200 {
        psi = (0..n)
            .map(|i| {
                (0..n).fold(rhs[i], |acc, j| {
                    let c = k(x[i] - x[j]) * w[j];
                    (acc.0 + c * psi[j].0, acc.1 + c * psi[j].1)
                })
            })
            .collect();
    }
    (x, w, psi)
}

#[test]
fn recover_sine_b_matches_scalar_assembly() {
    let u = 1.0;
    let doc = json_of(&rhcan(&[
        "recover",
        "--example",
        "sine",
        "--u",
        "1",
        "--n",
        "128",
        "--xi-points",
        "32",
    ]));
    assert!(all_pass(&doc));
    for row in doc["results"]["B"].as_array().unwrap().iter().skip(1).step_by(5) {
        let xi = row["xi"].as_f64().unwrap();
        let (x, w, psi) = psi_sine(u, xi, 40);
        let mut want = vec![vec![(0.0, 0.0); 2]; 2];
        for i in 0..x.len() {
            let (em, ep) = (cis(-u * x[i]), cis(u * x[i]));
            let (p, pb) = (psi[i], conj(psi[i]));
            let parts = [[mul(em, pb), mul(ep, pb)], [mul(em, p), mul(ep, p)]];
            let sign = [[1.0, -1.0], [-1.0, 1.0]];
            for r in 0..2 {
                for c in 0..2 {
                    let s = sign[r][c] * w[i] / (2.0 * PI);
                    want[r][c].0 += s * parts[r][c].0;
                    want[r][c].1 += s * parts[r][c].1;
                }
            }
        }
        assert!(dist(&mat(&row["value"]), &want) < 1e-6, "xi = {xi}");
    }
}

#[test]
fn recover_sine_u0_is_linear() {
    let doc = json_of(&rhcan(&[
        "recover",
        "--example",
        "sine",
        "--u",
        "0",
        "--n",
        "32",
        "--xi-points",
        "16",
    ]));
    let s = 1.0 / (2.0 * PI);
    for row in doc["results"]["B"].as_array().unwrap() {
        let xi = row["xi"].as_f64().unwrap();
        let want = vec![vec![(xi * s, 0.0), (-xi * s, 0.0)], vec![(-xi * s, 0.0), (xi * s, 0.0)]];
        assert!(dist(&mat(&row["value"]), &want) < 1e-13);
    }
}

#[test]
fn recover_rank_one_first_moment() {
    let doc = json_of(&rhcan(&["recover", "--example", "rank-one", "--n", "256"]));
    assert!(all_pass(&doc));
    // -(1/2πi) ∫ F2* F1 dx with F2 = [-q, q̄], F1 = [x + i, x - i]; the integrand is
    // quadratic in x so three Gauss nodes are exact
    let d = PI - 1.0;
    let g = gauss_legendre_grid(Interval::new(0.0, 1.0).unwrap(), 3).unwrap();
    let mut m1 = vec![vec![(0.0, 0.0); 2]; 2];
    for (&x, &w) in g.nodes().iter().zip(g.weights()) {
        let q = (x + 0.5 / d, PI / d);
        let f2 = [(-q.0, -q.1), conj(q)];
        let f1 = [(x, 1.0), (x, -1.0)];
        for r in 0..2 {
            for c in 0..2 {
                // -(1/2πi) a = (i/2π) a
                let a = mul(conj(f2[r]), f1[c]);
                let s = w / (2.0 * PI);
                m1[r][c].0 -= s * a.1;
                m1[r][c].1 += s * a.0;
            }
        }
    }
    assert!(dist(&mat(&doc["results"]["M1"]), &m1) < 1e-6);
}

fn verify_rows(run: &Run) -> Vec<String> {
    run.stdout
        .lines()
        .filter(|l| l.ends_with("PASS") || l.ends_with("FAIL"))
        .map(String::from)
        .collect()
}

#[test]
fn verify_rank_one_passes_everything() {
    let run = rhcan(&["verify", "--example", "rank-one", "--n", "256"]);
    assert_eq!(run.code, 0, "{}", run.stdout);
    let rows = verify_rows(&run);
    assert!(rows.len() >= 10);
    assert!(rows.iter().all(|r| r.ends_with("PASS")));
    assert!(rows.iter().any(|r| r.starts_with("f2_exact")));
}

#[test]
fn verify_scalar_and_gauge_rows() {
    let sine = rhcan(&["verify", "--example", "sine", "--n", "64", "--xi-points", "32"]);
    assert_eq!(sine.code, 0, "{}", sine.stdout);
    assert!(verify_rows(&sine).iter().any(|r| r.starts_with("nilpotency")));
    let psi = rhcan(&["verify", "--example", "psi-form", "--n", "64", "--xi-points", "32"]);
    assert_eq!(psi.code, 0, "{}", psi.stdout);
    assert!(verify_rows(&psi).iter().any(|r| r.starts_with("gauge_equivalence")));
}

#[test]
fn verify_writes_report_file() {
    let out = std::env::temp_dir().join(format!("rhcan-cli-{}-verify.json", std::process::id()));
    let run = rhcan(&[
        "verify",
        "--example",
        "airy",
        "--n",
        "64",
        "--xi-points",
        "32",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.code, 0, "{}", run.stdout);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["meta"]["command"], json!("verify"));
    assert!(all_pass(&doc));
    std::fs::remove_file(out).ok();
}

#[test]
fn output_is_deterministic() {
    let args = ["solve", "--example", "bessel", "--n", "64"];
    let a = rhcan(&args);
    let b = rhcan_env(&args, &[("RHCAN_THREADS", "2")]);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bad_thread_count_is_rejected() {
    let run = rhcan_env(&["solve", "--example", "sine", "--n", "16"], &[("RHCAN_THREADS", "0")]);
    assert_eq!(run.code, 2);
}

#[test]
fn csv_has_header_and_rows() {
    let run = rhcan(&["solve", "--example", "sine", "--n", "16", "--format", "csv"]);
    assert_eq!(run.code, 0);
    let lines: Vec<&str> = run.stdout.lines().collect();
    assert_eq!(lines[0], "x,F2_00_re,F2_00_im,F2_01_re,F2_01_im");
    assert_eq!(lines.len(), 17);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));
}

#[test]
fn invalid_input_exits_2() {
    assert_eq!(rhcan(&["solve", "--example", "nope"]).code, 2);
    assert_eq!(rhcan(&["solve", "--example", "sine", "--gamma", "2"]).code, 2);
    assert_eq!(rhcan(&["solve", "--example", "sine", "--z", "0.5,0"]).code, 2);
    assert_eq!(rhcan(&["solve", "--example", "sine", "--n", "4"]).code, 2);
    assert_eq!(rhcan(&["solve"]).code, 2);
}

#[test]
fn custom_bad_signature_exits_2() {
    let path = temp_file(
        "bad-j.json",
        r#"{"J": [[2, 0], [0, 1]], "interval": [0, 1], "F1": [[0, 1, 0], [1, 1, 0]]}"#,
    );
    let run = rhcan(&["solve", "--custom", path.to_str().unwrap()]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("J^2 = I"), "{}", run.stderr);
    std::fs::remove_file(path).ok();
}

fn f1_table(rows: usize, f: impl Fn(f64) -> [Cx; 2]) -> Vec<Value> {
    (0..rows)
        .map(|i| {
            let x = i as f64 / (rows - 1) as f64;
            let [a, b] = f(x);
            json!([x, [a.0, a.1], [b.0, b.1]])
        })
        .collect()
}

#[test]
fn custom_ill_conditioned_exits_3() {
    // F1 = [πx + i, πx - i] puts 1 in the spectrum of the kernel
    let doc =
        json!({"J": [[-1, 0], [0, 1]], "interval": [0, 1], "F1": f1_table(41, |x| [(PI * x, 1.0), (PI * x, -1.0)])});
    let path = temp_file("ill.json", &doc.to_string());
    let run = rhcan(&["solve", "--custom", path.to_str().unwrap(), "--n", "64"]);
    assert_eq!(run.code, 3, "{}", run.stderr);
    std::fs::remove_file(path).ok();
}

#[test]
fn tight_tolerances_exit_4() {
    let run = rhcan(&["solve", "--example", "sine", "--n", "64", "--tol-scale", "1e-12"]);
    assert_eq!(run.code, 4, "{}", run.stderr);
}

fn w_values(doc: &Value) -> Vec<Vec<Vec<Cx>>> {
    doc["results"]["W"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| mat(&w["value"]))
        .collect()
}

#[test]
fn custom_sine_tables_reproduce_builtin() {
    let u = 1.0;
    let reference = json_of(&rhcan(&["solve", "--example", "sine", "--n", "128"]));

    let f1 = json!({"J": [[-1, 0], [0, 1]], "interval": [0, 1], "F1": f1_table(201, |x| {
        let p = cis(2.0 * u * x);
        [(1.0, 0.0), (-p.0, -p.1)]
    })});
    // R² = I + J F1* F1 = [[0, φ], [-φ̄, 2]]
    let r2_rows: Vec<Value> = (0..201)
        .map(|i| {
            let x = i as f64 / 200.0;
            let p = cis(2.0 * u * x);
            json!([x, 0, [p.0, p.1], [-p.0, p.1], 2])
        })
        .collect();
    let r2 = json!({"J": [[-1, 0], [0, 1]], "interval": [0, 1], "R2": r2_rows});

    for (name, doc) in [("f1.json", f1), ("r2.json", r2)] {
        let path = temp_file(name, &doc.to_string());
        let got = json_of(&rhcan(&["solve", "--custom", path.to_str().unwrap(), "--n", "128"]));
        assert!(all_pass(&got), "{name}");
        for (a, b) in w_values(&got).iter().zip(w_values(&reference).iter()) {
            assert!(dist(a, b) < 1e-6, "{name}");
        }
        std::fs::remove_file(path).ok();
    }
}
