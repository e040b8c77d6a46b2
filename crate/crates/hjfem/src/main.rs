//! Command-line interface: mesh generation, solving, diagnostics, and the
//! convergence/complexity studies.

use clap::{Args, Parser, Subcommand};
use hjfem::mesh::{load_mesh, mesh_quality, save_mesh};
use hjfem::metric::{check_boundary_compatibility, estimate_rho_bounds, MetricModel};
use hjfem::presets::{
    comparison_csv, convergence_csv, run_convergence_study, run_solver_comparison, solution_csv,
    PresetKind,
};
use hjfem::solver::{format_stats_record, solve, DirichletSpec, SolverConfig, SolverKind};
use hjfem::{generate_grid_mesh, TriMesh};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hjfem",
    about = "Hopf-Lax finite-element solver for static Hamilton-Jacobi equations on 2D triangulations",
    long_about = "Solves Dirichlet problems of static Hamilton-Jacobi equations on unstructured \
                  triangulations of [-0.5,0.5]^2 and reproduces the bundled benchmark problems.\n\n\
                  Models: `euclid` (identity metric), `diag:a,b` (constant diagonal metric), \
                  `torus` (Gram matrix of a torus immersion), `mintime` (drift speed model).\n\
                  Dirichlet specs: `zero`, `const:<v>`, `spike:<vertex>,<v>` (value at one \
                  boundary vertex, zero elsewhere).\n\n\
                  All outputs are plain text with `.`-decimal numbers; identical invocations \
                  produce identical outputs."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a perturbed criss-cross mesh and write it in the text format
    /// (`nv nt`, `nv` lines `x y`, `nt` lines `i j k`).
    GenMesh(GenMeshArgs),
    /// Solve a preset or a custom mesh/model problem.
    ///
    /// Writes the solution as CSV `x,y,u` (one row per vertex) and the stats
    /// record as `key=value` lines: solver, n_vertices, n_triangles,
    /// triangle_updates, sweeps_or_pops, final_residual, wall_time_s.
    /// Exit code 0 iff the final residual is at most the tolerance.
    Solve(SolveArgs),
    /// Run a mesh-refinement error study.
    ///
    /// CSV schema: preset,n,solver,max_error,triangle_updates,residual.
    /// For presets without an exact solution the last size in --n-list is
    /// solved unperturbed and used as the interpolation reference.
    Convergence(ConvergenceArgs),
    /// Solve one preset size with all three solvers and tabulate their cost.
    ///
    /// CSV schema: preset,n,solver,triangle_updates,residual,max_diff_vs_adaptive.
    CompareSolvers(CompareArgs),
    /// Check the boundary-data compatibility condition
    /// g(x) - g(y) <= (rho_*/theta) |x - y| over all boundary vertex pairs.
    ///
    /// Exit code 0 on pass, 2 on violation (worst pair printed either way).
    CheckCompat(CheckCompatArgs),
}

#[derive(Args)]
struct GenMeshArgs {
    /// Vertices per side (>= 2).
    #[arg(long)]
    n: usize,
    /// Interior perturbation as a fraction of the cell size, in [0, 0.25].
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
    /// Seed of the documented LCG perturbation stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output mesh file.
    #[arg(long)]
    out: PathBuf,
}

fn solver_kind(s: &str) -> Result<SolverKind, String> {
    s.parse()
}

fn preset_kind(s: &str) -> Result<PresetKind, String> {
    s.parse()
}

#[derive(Args)]
struct SolveArgs {
    /// Preset problem: euclid, torus, or mintime (requires --n).
    #[arg(long, conflicts_with = "mesh", value_parser = preset_kind)]
    preset: Option<PresetKind>,
    /// Mesh side count for --preset.
    #[arg(long)]
    n: Option<usize>,
    /// Mesh file for a custom run (with --model and --g-spec).
    #[arg(long, requires = "model")]
    mesh: Option<PathBuf>,
    /// Metric model for --mesh runs: euclid, diag:a,b, torus, mintime.
    #[arg(long)]
    model: Option<String>,
    /// Dirichlet data on the mesh boundary for --mesh runs: zero, const:<v>,
    /// spike:<vertex>,<v>.
    #[arg(long, default_value = "zero")]
    g_spec: String,
    #[arg(long, default_value = "adaptive_gs", value_parser = solver_kind)]
    solver: SolverKind,
    /// Absolute residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Safety cap on sweeps (or pops per free vertex for adaptive_gs).
    #[arg(long, default_value_t = 10_000)]
    max_sweeps: usize,
    /// Tolerance of the 1D edge minimization for models without closed form.
    #[arg(long, default_value_t = 1e-10)]
    tol_1d: f64,
    /// Write the solution CSV (x,y,u per vertex) here.
    #[arg(long)]
    out_solution: Option<PathBuf>,
    /// Write the stats record here.
    #[arg(long)]
    out_stats: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long, value_parser = preset_kind)]
    preset: PresetKind,
    /// Comma-separated ascending mesh side counts, e.g. 23,45,91.
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<usize>,
    #[arg(long, default_value = "adaptive_gs", value_parser = solver_kind)]
    solver: SolverKind,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, value_parser = preset_kind)]
    preset: PresetKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckCompatArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Dirichlet data on the boundary: zero, const:<v>, spike:<vertex>,<v>.
    #[arg(long, default_value = "zero")]
    g_spec: String,
    /// Metric model: euclid, diag:a,b, torus, mintime.
    #[arg(long, default_value = "euclid")]
    model: String,
    /// Directions sampled per vertex when estimating rho bounds.
    #[arg(long, default_value_t = 64)]
    n_dirs: usize,
}

fn parse_model(s: &str) -> Result<MetricModel, String> {
    match s {
        "euclid" => Ok(MetricModel::euclid()),
        "torus" => Ok(MetricModel::gram(hjfem::presets::torus_gram)),
        "mintime" => Ok(MetricModel::drift(hjfem::presets::mintime_drift)),
        other => {
            if let Some(rest) = other.strip_prefix("diag:") {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 2 {
                    return Err(format!("expected diag:a,b, got `{other}`"));
                }
                let a: f64 = parts[0].parse().map_err(|_| format!("bad diagonal entry `{}`", parts[0]))?;
                let b: f64 = parts[1].parse().map_err(|_| format!("bad diagonal entry `{}`", parts[1]))?;
                if a <= 0.0 || b <= 0.0 {
                    return Err("diagonal metric entries must be positive".into());
                }
                Ok(MetricModel::diag(a, b))
            } else {
                Err(format!(
                    "unknown model `{other}` (expected euclid, diag:a,b, torus, or mintime)"
                ))
            }
        }
    }
}

fn parse_g_spec(mesh: &TriMesh, s: &str) -> Result<DirichletSpec, String> {
    if s == "zero" {
        return Ok(DirichletSpec::constant_on_boundary(mesh, 0.0));
    }
    if let Some(rest) = s.strip_prefix("const:") {
        let value: f64 = rest.parse().map_err(|_| format!("bad constant `{rest}`"))?;
        return Ok(DirichletSpec::constant_on_boundary(mesh, value));
    }
    if let Some(rest) = s.strip_prefix("spike:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(format!("expected spike:<vertex>,<value>, got `{s}`"));
        }
        let vertex: usize = parts[0].parse().map_err(|_| format!("bad vertex index `{}`", parts[0]))?;
        let value: f64 = parts[1].parse().map_err(|_| format!("bad value `{}`", parts[1]))?;
        if vertex >= mesh.n_vertices() {
            return Err(format!("vertex {vertex} out of range"));
        }
        if !mesh.is_boundary(vertex) {
            return Err(format!("vertex {vertex} is not a boundary vertex"));
        }
        let mut spec = DirichletSpec::constant_on_boundary(mesh, 0.0);
        spec.set(vertex, value);
        return Ok(spec);
    }
    Err(format!(
        "unknown Dirichlet spec `{s}` (expected zero, const:<v>, or spike:<vertex>,<v>)"
    ))
}

fn write_or_print(path: &Option<PathBuf>, content: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::GenMesh(args) => {
            let mesh = generate_grid_mesh(args.n, args.perturb, args.seed).map_err(|e| e.to_string())?;
            save_mesh(&mesh, &args.out).map_err(|e| e.to_string())?;
            let quality = mesh_quality(&mesh);
            println!("n_vertices={}", mesh.n_vertices());
            println!("n_triangles={}", mesh.n_triangles());
            println!("h={}", quality.h);
            println!("theta={}", quality.theta);
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve(args) => {
            let config = SolverConfig {
                kind: args.solver,
                tol: args.tol,
                max_sweeps: args.max_sweeps,
                tol_1d: args.tol_1d,
            };
            let (mesh, model, dirichlet) = match (&args.preset, &args.mesh) {
                (Some(kind), None) => {
                    let n = args.n.ok_or("--preset requires --n")?;
                    let preset = kind.make(n).map_err(|e| e.to_string())?;
                    let mesh = preset.build_mesh().map_err(|e| e.to_string())?;
                    let dirichlet = preset.dirichlet(&mesh);
                    let diag = preset.diagnostics(&mesh).map_err(|e| e.to_string())?;
                    println!("preset={}", preset.name);
                    println!("rho_star_lower={}", diag.bounds.rho_star_lower);
                    println!("rho_star_upper={}", diag.bounds.rho_star_upper);
                    println!("anisotropy={}", diag.anisotropy);
                    println!("theta={}", diag.theta);
                    (mesh, preset.model, dirichlet)
                }
                (None, Some(path)) => {
                    let mesh = load_mesh(path).map_err(|e| e.to_string())?;
                    let model = parse_model(args.model.as_deref().unwrap())?;
                    let dirichlet = parse_g_spec(&mesh, &args.g_spec)?;
                    (mesh, model, dirichlet)
                }
                _ => return Err("exactly one of --preset or --mesh is required".into()),
            };

            let outcome = solve(&mesh, &model, &dirichlet, &config).map_err(|e| e.to_string())?;
            println!("final_residual={}", outcome.stats.final_residual);
            println!("triangle_updates={}", outcome.stats.triangle_updates);
            println!("converged={}", outcome.stats.converged);

            if let Some(path) = &args.out_solution {
                std::fs::write(path, solution_csv(&mesh, outcome.field.values()))
                    .map_err(|e| e.to_string())?;
            }
            if let Some(path) = &args.out_stats {
                let record = format_stats_record(args.solver.name(), &mesh, &outcome.stats);
                std::fs::write(path, record).map_err(|e| e.to_string())?;
            }
            Ok(if outcome.stats.converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Convergence(args) => {
            let config = SolverConfig {
                kind: args.solver,
                tol: args.tol,
                ..SolverConfig::default()
            };
            let reports =
                run_convergence_study(args.preset, &args.n_list, &config).map_err(|e| e.to_string())?;
            write_or_print(&args.out, &convergence_csv(&reports)).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CompareSolvers(args) => {
            let config = SolverConfig {
                tol: args.tol,
                ..SolverConfig::default()
            };
            let rows = run_solver_comparison(
                args.preset,
                args.n,
                &[SolverKind::Jacobi, SolverKind::GaussSeidel, SolverKind::AdaptiveGs],
                &config,
            )
            .map_err(|e| e.to_string())?;
            write_or_print(&args.out, &comparison_csv(&rows)).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckCompat(args) => {
            let mesh = load_mesh(&args.mesh).map_err(|e| e.to_string())?;
            let model = parse_model(&args.model)?;
            let g = parse_g_spec(&mesh, &args.g_spec)?;
            let bounds = estimate_rho_bounds(&model, &mesh, args.n_dirs).map_err(|e| e.to_string())?;
            let theta = mesh_quality(&mesh).theta;
            let report = check_boundary_compatibility(&mesh, &g, &bounds, theta);
            println!("rho_star_lower={}", bounds.rho_star_lower);
            println!("theta={}", theta);
            println!("threshold={}", report.threshold);
            match report.worst_pair {
                Some((a, b)) => println!("worst_pair={a},{b}"),
                None => println!("worst_pair=none"),
            }
            println!("worst_margin={}", report.worst_margin);
            println!("pass={}", report.pass);
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}
