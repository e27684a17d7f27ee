use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn graphtopo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphtopo")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|v| v.trim().parse().unwrap()).collect())
        .collect()
}

fn write(dir: &Path, name: &str, content: &str) {
    fs::write(dir.join(name), content).unwrap();
}

fn sample(dir: &Path, name: &str, file: &str) {
    let out = graphtopo(dir, &["gen", "sample", "--name", name, "--out", file]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

const CHAIN_R: &str = "1,1,1,1\n1,2,2,2\n1,2,3,3\n1,2,3,4\n";

#[test]
fn glasso_writes_precision_and_report() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "R.csv", CHAIN_R);
    let out = graphtopo(dir.path(), &["learn", "glasso", "--corr", "R.csv", "--rho", "0.3", "--out", "Q.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let q = read_csv(&dir.path().join("Q.csv"));
    assert_eq!(q.len(), 4);
    assert!(q.iter().all(|row| row.len() == 4));
    for i in 0..4 {
        for j in 0..4 {
            assert!((q[i][j] - q[j][i]).abs() < 1e-8);
        }
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "learn glasso");
    assert_eq!(report["parameters"]["rho"], 0.3);
    assert_eq!(report["converged"]["glasso"], true);
}

#[test]
fn pagerank_of_the_eight_pages() {
    let dir = TempDir::new().unwrap();
    sample(dir.path(), "pages", "pages.json");
    let out = graphtopo(dir.path(), &["solve", "pagerank", "--graph", "pages.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let values: Vec<f64> = String::from_utf8(out.stdout)
        .unwrap()
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().unwrap())
        .collect();
    let expected = [1.33, 1.52, 2.18, 0.79, 0.55, 0.18, 0.48, 0.97];
    assert_eq!(values.len(), 8);
    for (v, e) in values.iter().zip(expected) {
        assert!((v - e).abs() <= 0.01, "{values:?}");
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = graphtopo(dir.path(), &["solve", "pagerank", "--graph", "g.json", "--bogus"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
}

#[test]
fn help_exits_cleanly() {
    let dir = TempDir::new().unwrap();
    let out = graphtopo(dir.path(), &["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in ["gen", "learn", "solve", "lattice", "portfolio", "metro", "verify"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn dry_run_validates_without_writing() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "R.csv", CHAIN_R);
    let out =
        graphtopo(dir.path(), &["--dry-run", "learn", "glasso", "--corr", "R.csv", "--rho", "0.3", "--out", "Q.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("dry run"));
    let mut names: Vec<String> =
        fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert_eq!(names, ["R.csv"]);

    let missing = graphtopo(dir.path(), &["--dry-run", "learn", "glasso", "--corr", "absent.csv", "--out", "Q.csv"]);
    assert_eq!(code(&missing), 1);
}

#[test]
fn seeded_signals_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    sample(dir.path(), "circuit", "g.json");
    let args = |out: &'static str| {
        [
            "gen",
            "signal",
            "--graph",
            "g.json",
            "--mode",
            "diffusion",
            "--params",
            r#"{"h":[0.3,0.2,0.5]}"#,
            "--seed",
            "7",
            "--p",
            "50",
            "--out",
            out,
        ]
    };
    for name in ["a.csv", "b.csv"] {
        let out = graphtopo(dir.path(), &args(name));
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let (a, b) = (fs::read(dir.path().join("a.csv")).unwrap(), fs::read(dir.path().join("b.csv")).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let parallel = graphtopo(dir.path(), &[&["--threads", "4"][..], &args("c.csv")].concat());
    assert_eq!(code(&parallel), 0);
    assert_eq!(fs::read(dir.path().join("c.csv")).unwrap(), a);
}

#[test]
fn strict_non_convergence_exits_two() {
    let dir = TempDir::new().unwrap();
    sample(dir.path(), "pages", "pages.json");
    let args = ["solve", "pagerank", "--graph", "pages.json", "--max-iter", "5", "--out", "pr.csv"];
    let lenient = graphtopo(dir.path(), &args);
    assert_eq!(code(&lenient), 0, "{}", stderr(&lenient));
    let strict = graphtopo(dir.path(), &[&["--strict"][..], &args].concat());
    assert_eq!(code(&strict), 2, "{}", stderr(&strict));
}

#[test]
fn floating_component_is_a_numerical_error() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "g.json", r#"{"n": 4, "directed": false, "edges": [[0, 1, 1.0], [2, 3, 1.0]]}"#);
    write(dir.path(), "bc.csv", "0,1\n1,0\n");
    let out = graphtopo(dir.path(), &["solve", "circuit", "--graph", "g.json", "--bc", "bc.csv"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).starts_with("graphtopo: "), "{}", stderr(&out));
}

#[test]
fn invalid_input_exits_one() {
    let dir = TempDir::new().unwrap();
    sample(dir.path(), "circuit", "g.json");
    let out = graphtopo(dir.path(), &["solve", "hitting", "--graph", "g.json", "--target", "99"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn plot_data_is_written_beside_the_output() {
    let dir = TempDir::new().unwrap();
    sample(dir.path(), "pages", "pages.json");
    let out =
        graphtopo(dir.path(), &["--emit-plot-data", "solve", "pagerank", "--graph", "pages.json", "--out", "pr.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let plot = fs::read_to_string(dir.path().join("pr.plot.csv")).unwrap();
    let mut lines = plot.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, ["x", "y", "series"]);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.split(',').count() == header.len()));
}

#[test]
fn report_path_can_be_chosen() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "R.csv", CHAIN_R);
    let out =
        graphtopo(dir.path(), &["learn", "precision", "--corr", "R.csv", "--out", "C.csv", "--report", "run.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let c = read_csv(&dir.path().join("C.csv"));
    let expected = [[2.0, -1.0, 0.0, 0.0], [-1.0, 2.0, -1.0, 0.0], [0.0, -1.0, 2.0, -1.0], [0.0, 0.0, -1.0, 1.0]];
    for i in 0..4 {
        for j in 0..4 {
            assert!((c[i][j] - expected[i][j]).abs() < 1e-10);
        }
    }
    assert!(dir.path().join("run.json").exists());
    assert!(!dir.path().join("report.json").exists());
}
