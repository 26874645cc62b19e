use std::path::Path;
use std::process::Command;

use gasketlab::expr::{figures, parse};
use gasketlab::{build_level_graph, sample};
use serde_json::Value;

struct Run {
    code: i32,
    out: String,
    err: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.out).unwrap_or_else(|e| panic!("{e}: {}", self.out))
    }

    fn error(&self) -> Value {
        serde_json::from_str(self.err.trim()).unwrap_or_else(|e| panic!("{e}: {}", self.err))
    }
}

fn run(args: &[&str]) -> Run {
    let mut argv = vec!["gasketlab"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = gasketlab_cli::run_with(argv, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Parses the vertex block of an ASCII PLY file into `(x, y, z)` triples.
fn ply_vertices(text: &str) -> Vec<[f64; 3]> {
    let count: usize = text
        .lines()
        .find_map(|l| l.strip_prefix("element vertex "))
        .unwrap()
        .parse()
        .unwrap();
    text.lines()
        .skip_while(|l| *l != "end_header")
        .skip(1)
        .take(count)
        .map(|l| {
            let v: Vec<f64> = l.split(' ').map(|t| t.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

#[test]
fn negative_level_is_a_usage_error() {
    let r = run(&["mesh", "--level", "-1"]);
    assert_eq!(r.code, 2);
    assert_eq!(r.error()["code"], "usage");
    assert!(r.out.is_empty());
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_gasketlab");
    let ok = Command::new(bin)
        .args(["mesh", "--level", "2"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["vertices"], 15);
    let bad = Command::new(bin)
        .args(["mesh", "--level", "x"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let e: Value = serde_json::from_slice(&bad.stderr).unwrap();
    assert_eq!(e["code"], "usage");
}

#[test]
fn help_is_not_an_error() {
    let r = run(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("reproduce"));
}

#[test]
fn figure_one_surface() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1.ply");
    let r = run(&[
        "fractal",
        "--f-expr",
        figures::F,
        "--b-expr",
        figures::B,
        "--alpha",
        "0.7",
        "--N",
        "1",
        "--level",
        "6",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v = r.json();
    assert_eq!(v["level"], 6);
    assert_eq!(v["junction_discrepancy"], 0.0);
    assert_eq!(v["error_bound"]["holds"], true);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("ply\nformat ascii 1.0\n"));
    let verts = ply_vertices(&text);
    assert_eq!(verts.len(), 1095);
    let f = parse(figures::F).unwrap();
    for [x, y, z] in &verts[..6] {
        let fv = f.eval(gasketlab::Point2::new(*x, *y)).unwrap();
        assert!((z - fv).abs() <= 1e-15);
    }
}

#[test]
fn level_is_rounded_up_to_a_multiple_of_n() {
    let r = run(&[
        "fractal", "--f-expr", "x*y", "--alpha", "0.4", "--N", "2", "--level", "3",
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v = r.json();
    assert_eq!(v["level"], 4);
    assert_eq!(v["requested_level"], 3);
    assert!(v["note"].as_str().unwrap().contains("rounded up"));
}

#[test]
fn domain_errors_exit_one() {
    let r = run(&[
        "fractal", "--f-expr", "x", "--b-expr", "x+1", "--alpha", "0.5", "--level", "3",
    ]);
    assert_eq!(
        (r.code, r.error()["code"].as_str()),
        (1, Some("boundary_mismatch"))
    );
    let r = run(&["fractal", "--f-expr", "x", "--alpha", "1.5", "--level", "3"]);
    assert_eq!(
        (r.code, r.error()["code"].as_str()),
        (1, Some("scaling_bound"))
    );
    let r = run(&[
        "fractal",
        "--f-expr",
        "1/(x-0.5)",
        "--alpha",
        "0.5",
        "--level",
        "3",
    ]);
    assert_eq!(r.code, 1);
}

#[test]
fn parse_errors_exit_two() {
    let r = run(&["energy", "--f-expr", "x +* y"]);
    assert_eq!(r.code, 2);
    assert_eq!(r.error()["code"], "parse");
    let r = run(&["fractal", "--f-expr", "x"]);
    assert_eq!(r.code, 2);
}

#[test]
fn level_cap_from_environment() {
    let bin = env!("CARGO_BIN_EXE_gasketlab");
    let out = Command::new(bin)
        .args(["mesh", "--level", "5"])
        .env("GASKETLAB_MAX_LEVEL", "4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let e: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(e["code"], "level_exceeds_max");
}

#[test]
fn constrain_reports_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("intervals.csv");
    let r = run(&[
        "constrain",
        "--f-expr",
        "x",
        "--Mtilde",
        "1",
        "--N",
        "1",
        "--level",
        "6",
        "--report",
        path_str(&report),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v = r.json();
    assert_eq!(v["range_holds"], true);
    let csv = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "word,lo,hi,feasible");
    assert_eq!(lines.len(), 4);
    assert!(!csv.contains("-0,"));
}

#[test]
fn infeasible_interval_exits_one_after_writing_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("intervals.csv");
    let r = run(&[
        "constrain",
        "--f-expr",
        "x",
        "--Mtilde",
        "0.5",
        "--level",
        "5",
        "--report",
        path_str(&report),
    ]);
    assert_eq!(r.code, 1);
    assert_eq!(r.error()["code"], "infeasible_interval");
    assert!(std::fs::read_to_string(&report).unwrap().contains("false"));
}

#[test]
fn approx_json_shape() {
    let r = run(&[
        "approx",
        "--mode",
        "chebyshev",
        "--k",
        "0",
        "--m",
        "5",
        "--f-expr",
        "x",
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v = r.json();
    assert_eq!(v["basis"], "Hk");
    assert_eq!(v["m"], 5);
    assert_eq!(v["coefficients"].as_array().unwrap().len(), 3);
    assert!(v["error"].as_f64().unwrap() > 0.0);

    let r = run(&[
        "approx", "--mode", "onesided", "--k", "1", "--alpha", "0.5", "--N", "1", "--m", "4",
        "--f-expr", "x*y",
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v = r.json();
    assert_eq!(v["basis"], "FalphaHk");
    assert_eq!(v["coefficients"].as_array().unwrap().len(), 6);
}

#[test]
fn constant_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("dim.csv");
    let r = run(&[
        "dimension",
        "--const",
        "1",
        "--n-min",
        "3",
        "--n-max",
        "8",
        "--csv",
        path_str(&csv),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let slope = r.json()["slope"].as_f64().unwrap();
    assert!((slope - 3f64.ln() / 2f64.ln()).abs() < 0.08, "{slope}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("n,N_delta,lower_env,upper_env\n3,"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn energy_and_laplacian_tables() {
    let dir = tempfile::tempdir().unwrap();
    let e = dir.path().join("energy.csv");
    let r = run(&[
        "energy",
        "--f-expr",
        "x",
        "--level",
        "4",
        "--holder-k",
        "1",
        "--holder-sigma",
        "1",
        "--out",
        path_str(&e),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.json()["envelope_holds"], true);
    assert!(std::fs::read_to_string(&e)
        .unwrap()
        .starts_with("m,E_m,envelope\n0,1.5,1.5\n"));

    let l = dir.path().join("lap.csv");
    let r = run(&[
        "laplacian",
        "--f-expr",
        "x*x",
        "--level",
        "3",
        "--pointwise",
        "--out",
        path_str(&l),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.json()["interior_vertices"], 39);
    assert_eq!(std::fs::read_to_string(&l).unwrap().lines().count(), 40);
}

#[test]
fn harmonic_surface_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let r = run(&[
        "harmonic",
        "--boundary",
        "1,0,0",
        "--level",
        "2",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let energies = r.json()["energies"].as_array().unwrap().clone();
    assert!(energies
        .iter()
        .all(|e| (e.as_f64().unwrap() - 2.0).abs() < 1e-12));
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .contains("\n3,0.5,0,0.4,1\n"));
    let r = run(&["harmonic", "--out", "surface.obj"]);
    assert_eq!(
        (r.code, r.error()["code"].as_str()),
        (2, Some("unsupported_format"))
    );
}

#[test]
fn alpha_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("alpha.txt");
    std::fs::write(&table, "# per-word scalings\n11 0.5\n23 -0.25\n").unwrap();
    let r = run(&[
        "fractal",
        "--f-expr",
        "x*y",
        "--alpha-table",
        path_str(&table),
        "--N",
        "2",
        "--level",
        "4",
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.json()["alpha_norm"], 0.5);

    let r = run(&[
        "fractal",
        "--f-expr",
        "x*y",
        "--alpha-table",
        path_str(&dir.path().join("missing")),
        "--N",
        "2",
    ]);
    assert_eq!(
        (r.code, r.error()["code"].as_str()),
        (2, Some("file_not_found"))
    );

    std::fs::write(&table, "1 0.5\n").unwrap();
    let r = run(&[
        "fractal",
        "--f-expr",
        "x*y",
        "--alpha-table",
        path_str(&table),
        "--N",
        "2",
    ]);
    assert_eq!(
        (r.code, r.error()["code"].as_str()),
        (2, Some("alpha_table"))
    );
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# fractal defaults\nf-expr = \"(x*y+113)/432\"\nalpha = 0.3\nlevel = 3\n",
    )
    .unwrap();
    let r = run(&["--config", path_str(&cfg), "fractal"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(
        (r.json()["level"].as_u64(), r.json()["alpha_norm"].as_f64()),
        (Some(3), Some(0.3))
    );
    let r = run(&["fractal", "--config", path_str(&cfg), "--level", "2"]);
    assert_eq!(
        (r.json()["level"].as_u64(), r.json()["alpha_norm"].as_f64()),
        (Some(2), Some(0.3))
    );

    std::fs::write(&cfg, "command = \"mesh\"\nlevel = 1\n").unwrap();
    let r = run(&["--config", path_str(&cfg)]);
    assert_eq!(r.json()["vertices"], 6);

    let r = run(&["--config", path_str(&dir.path().join("nope.cfg")), "mesh"]);
    assert_eq!(
        (r.code, r.error()["code"].as_str()),
        (2, Some("file_not_found"))
    );
}

#[test]
fn threads_do_not_change_results() {
    let args = [
        "dimension",
        "--f-expr",
        "sin(3*x)*y",
        "--n-min",
        "2",
        "--n-max",
        "6",
    ];
    let one = run(&[&["--threads", "1"], &args[..]].concat());
    let four = run(&[&["--threads", "4"], &args[..]].concat());
    let default = run(&args);
    assert_eq!(one.code, 0, "{}", one.err);
    assert_eq!(one.out, four.out);
    assert_eq!(one.out, default.out);
    assert_eq!(run(&[&["--threads", "0"], &args[..]].concat()).code, 2);
}

#[test]
fn reproduce_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let r = run(&[
        "reproduce",
        "--out-dir",
        path_str(&out),
        "--seed",
        "3",
        "--level",
        "6",
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let manifest = r.json();
    assert_eq!(manifest["files"].as_array().unwrap().len(), 11);
    assert_eq!(manifest["random_bounds_hold"], true);

    let read = |name: &str| ply_vertices(&std::fs::read_to_string(out.join(name)).unwrap());
    let low = read("fig2_alpha_0.3.ply");
    let high = read("fig2_alpha_0.6.ply");
    let diff = low
        .iter()
        .zip(&high)
        .map(|(a, b)| (a[2] - b[2]).abs())
        .fold(0.0, f64::max);
    assert!(diff > 1e-6);

    let first = read("fig1_iteration_1.ply");
    let g = build_level_graph(1).unwrap();
    let f = sample(&parse(figures::F).unwrap(), &g).unwrap();
    assert_eq!(first.len(), 6);
    for (v, fv) in first.iter().zip(f.values()) {
        assert_eq!(v[2], *fv);
    }

    let sweep = std::fs::read_to_string(out.join("alpha_sweep.csv")).unwrap();
    let errors: Vec<f64> = sweep
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errors.len(), 20);
    assert!(errors.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(manifest["sweep_nondecreasing"], true);
}
