//! End-to-end checks of the command-line surface: flag validation, exit
//! codes, and the stability of the machine-readable outputs.

use std::path::Path;
use std::process::{Command, Output};

fn hjfem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hjfem"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to spawn hjfem")
}

fn stdout_lines(output: &Output) -> Vec<String> {
    String::from_utf8_lossy(&output.stdout)
        .lines()
        .map(str::to_owned)
        .collect()
}

fn kv(lines: &[String], key: &str) -> String {
    lines
        .iter()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("missing key {key} in {lines:?}"))
        .to_string()
}

#[test]
fn gen_mesh_writes_file_and_reports_quality() {
    let dir = tempfile::tempdir().unwrap();
    let out = hjfem(dir.path(), &["gen-mesh", "--n", "23", "--perturb", "0.2", "--seed", "1", "--out", "m.txt"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert_eq!(kv(&lines, "n_vertices"), "529");
    assert_eq!(kv(&lines, "n_triangles"), "968");
    assert!(kv(&lines, "theta").parse::<f64>().unwrap() >= 1.0);
    let mesh = hjfem::mesh::load_mesh(dir.path().join("m.txt")).unwrap();
    assert_eq!(mesh.n_vertices(), 529);
}

#[test]
fn gen_mesh_rejects_single_vertex_side() {
    let dir = tempfile::tempdir().unwrap();
    let out = hjfem(dir.path(), &["gen-mesh", "--n", "1", "--out", "m.txt"]);
    assert!(!out.status.success());
    assert!(!dir.path().join("m.txt").exists());
}

#[test]
fn solve_preset_reports_residual_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = hjfem(dir.path(), &[
        "solve", "--preset", "euclid", "--n", "23", "--solver", "adaptive_gs", "--tol", "1e-8",
        "--out-solution", "sol.csv", "--out-stats", "stats.txt",
    ]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert!(kv(&lines, "final_residual").parse::<f64>().unwrap() <= 1e-8);
    assert_eq!(kv(&lines, "converged"), "true");

    let sol = std::fs::read_to_string(dir.path().join("sol.csv")).unwrap();
    assert!(sol.starts_with("x,y,u\n"));
    assert_eq!(sol.lines().count(), 1 + 529);

    let stats = std::fs::read_to_string(dir.path().join("stats.txt")).unwrap();
    for key in [
        "solver=adaptive_gs",
        "n_vertices=529",
        "n_triangles=968",
        "triangle_updates=",
        "sweeps_or_pops=",
        "final_residual=",
        "wall_time_s=",
    ] {
        assert!(stats.contains(key), "stats record missing {key}: {stats}");
    }
}

#[test]
fn solve_reports_mintime_anisotropy() {
    let dir = tempfile::tempdir().unwrap();
    let out = hjfem(dir.path(), &["solve", "--preset", "mintime", "--n", "23"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    let nu = kv(&lines, "anisotropy").parse::<f64>().unwrap();
    // Sampled at mesh vertices; approaches the analytic speed ratio 19 as
    // the sampling tightens, and stays well above isotropic on n=23.
    assert!(nu > 5.0 && nu <= 19.000001, "nu = {nu}");
}

#[test]
fn solve_gauss_seidel_and_adaptive_agree_on_torus() {
    let dir = tempfile::tempdir().unwrap();
    for (solver, file) in [("gauss_seidel", "a.csv"), ("adaptive_gs", "b.csv")] {
        let out = hjfem(dir.path(), &[
            "solve", "--preset", "torus", "--n", "45", "--solver", solver, "--tol", "1e-9",
            "--out-solution", file,
        ]);
        assert!(out.status.success());
    }
    let parse = |name: &str| -> Vec<f64> {
        std::fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .collect()
    };
    let a = parse("a.csv");
    let b = parse("b.csv");
    let worst = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    assert!(worst <= 2e-8, "fields differ by {worst}");
}

#[test]
fn solve_custom_mesh_with_diag_model() {
    let dir = tempfile::tempdir().unwrap();
    assert!(hjfem(dir.path(), &["gen-mesh", "--n", "11", "--out", "m.txt"]).status.success());
    let out = hjfem(dir.path(), &[
        "solve", "--mesh", "m.txt", "--model", "diag:4,1", "--g-spec", "zero",
        "--out-solution", "sol.csv",
    ]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert_eq!(kv(&lines, "converged"), "true");
}

#[test]
fn convergence_csv_has_decreasing_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = hjfem(dir.path(), &["convergence", "--preset", "euclid", "--n-list", "9,19,37"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "preset,n,solver,max_error,triangle_updates,residual"
    );
    let errors: Vec<f64> = lines
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errors.len(), 3);
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn compare_solvers_adaptive_has_fewest_updates() {
    let dir = tempfile::tempdir().unwrap();
    let out = hjfem(dir.path(), &["compare-solvers", "--preset", "torus", "--n", "23"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "preset,n,solver,triangle_updates,residual,max_diff_vs_adaptive"
    );
    let rows: Vec<(String, u64)> = lines
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            (cells[2].to_string(), cells[3].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 3);
    let updates = |name: &str| rows.iter().find(|(s, _)| s == name).unwrap().1;
    assert!(updates("adaptive_gs") < updates("gauss_seidel"));
    assert!(updates("gauss_seidel") <= updates("jacobi"));
}

#[test]
fn check_compat_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert!(hjfem(dir.path(), &["gen-mesh", "--n", "9", "--out", "m.txt"]).status.success());

    let out = hjfem(dir.path(), &["check-compat", "--mesh", "m.txt", "--g-spec", "zero", "--model", "euclid"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = stdout_lines(&out);
    assert_eq!(kv(&lines, "pass"), "true");

    // A big corner spike violates the Lipschitz-type bound.
    let out = hjfem(dir.path(), &["check-compat", "--mesh", "m.txt", "--g-spec", "spike:0,10", "--model", "euclid"]);
    assert_eq!(out.status.code(), Some(2));
    let lines = stdout_lines(&out);
    assert_eq!(kv(&lines, "pass"), "false");
    assert!(kv(&lines, "worst_margin").parse::<f64>().unwrap() > 0.0);
    assert!(lines.iter().any(|l| l.starts_with("worst_pair=0,")));
}

#[test]
fn solve_requires_exactly_one_problem_source() {
    let dir = tempfile::tempdir().unwrap();
    let out = hjfem(dir.path(), &["solve", "--n", "9"]);
    assert!(!out.status.success());
    let out = hjfem(dir.path(), &["solve", "--preset", "euclid"]);
    assert!(!out.status.success());
}

#[test]
fn solve_rejects_unknown_model_and_preset() {
    let dir = tempfile::tempdir().unwrap();
    assert!(hjfem(dir.path(), &["gen-mesh", "--n", "5", "--out", "m.txt"]).status.success());
    let out = hjfem(dir.path(), &["solve", "--mesh", "m.txt", "--model", "hyperbolic"]);
    assert!(!out.status.success());
    let out = hjfem(dir.path(), &["solve", "--preset", "sphere", "--n", "9"]);
    assert!(!out.status.success());
}
