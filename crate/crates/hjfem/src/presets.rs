//! Bundled benchmark problems on `[-0.5, 0.5]^2`, exact/reference error
//! analysis, and convergence/complexity studies.
//!
//! Three presets are provided:
//!
//! - `euclid`: identity metric with a point source at the origin; the exact
//!   solution is the Euclidean distance `|x|`, which makes this the
//!   validation preset.
//! - `torus`: geodesic distance on a torus pulled back to the parameter
//!   square through the Gram matrix of an explicit immersion; point source
//!   at the origin.
//! - `mintime`: value function of a min-time control problem with unit
//!   controls and a rotational drift field of magnitude up to 0.9 (speed
//!   anisotropy 19); point source at the origin.
//!
//! Point-source problems carry a large constant Dirichlet value on the
//! outer square boundary. The constant is `2 * diam * rho^*` with the
//! model's analytic `rho^*`, which no optimal path can reach from the
//! source, so the outer boundary never wins the local minimum and the
//! problem behaves like a pure point-source problem. The same constant is
//! used at every resolution so that reference-mesh error studies compare
//! identical problems.

use crate::mesh::{generate_grid_mesh, mesh_quality, LinearInterpolator, MeshError, TriMesh};
use crate::metric::{estimate_rho_bounds, MetricModel, RhoBounds};
use crate::solver::{
    solve, DirichletSpec, SolveOutcome, SolverConfig, SolverError, SolverKind,
};
use crate::{Mat2, Vec2};
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PresetError {
    #[error("preset requires an odd mesh side count so a vertex sits at the origin, got {0}")]
    EvenMeshSide(usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{0}")]
    InvalidStudy(String),
}

/// Mesh recipe of a preset: side count, perturbation fraction, seed.
#[derive(Debug, Clone, Copy)]
pub struct MeshRecipe {
    pub n: usize,
    pub perturb: f64,
    pub seed: u64,
}

impl MeshRecipe {
    pub fn build(&self) -> Result<TriMesh, MeshError> {
        generate_grid_mesh(self.n, self.perturb, self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetKind {
    Euclid,
    Torus,
    Mintime,
}

impl PresetKind {
    pub fn name(&self) -> &'static str {
        match self {
            PresetKind::Euclid => "euclid",
            PresetKind::Torus => "torus",
            PresetKind::Mintime => "mintime",
        }
    }

    pub fn make(&self, n: usize) -> Result<Preset, PresetError> {
        match self {
            PresetKind::Euclid => preset_point_source_euclid(n),
            PresetKind::Torus => preset_torus(n),
            PresetKind::Mintime => preset_mintime(n),
        }
    }
}

impl std::str::FromStr for PresetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclid" => Ok(PresetKind::Euclid),
            "torus" => Ok(PresetKind::Torus),
            "mintime" => Ok(PresetKind::Mintime),
            other => Err(format!("unknown preset `{other}` (expected euclid, torus, or mintime)")),
        }
    }
}

type ExactSolution = Box<dyn Fn(Vec2) -> f64 + Send + Sync>;

/// A fully determined benchmark problem: mesh recipe, metric model,
/// Dirichlet data (outer boundary constant plus point sources snapped to
/// the nearest vertex), and an optional exact solution.
pub struct Preset {
    pub name: String,
    pub recipe: MeshRecipe,
    pub model: MetricModel,
    pub boundary_value: f64,
    pub sources: Vec<(Vec2, f64)>,
    pub exact: Option<ExactSolution>,
}

const DOMAIN_DIAMETER: f64 = std::f64::consts::SQRT_2;

fn require_odd(n: usize) -> Result<(), PresetError> {
    if n < 3 || n % 2 == 0 {
        Err(PresetError::EvenMeshSide(n))
    } else {
        Ok(())
    }
}

fn default_recipe(n: usize) -> MeshRecipe {
    MeshRecipe {
        n,
        perturb: 0.2,
        seed: 1,
    }
}

/// Gram matrix `Df^T Df` of the torus immersion
/// `f(x1, x2) = (cos(2 pi x1) (5 + 4 cos(2 pi x2)),
///               sin(2 pi x1) (5 + 4 cos(2 pi x2)),
///               sin(2 pi x2))`.
pub fn torus_gram(x: Vec2) -> Mat2 {
    let tau = 2.0 * PI;
    let (s1, c1) = (tau * x.x).sin_cos();
    let (s2, c2) = (tau * x.y).sin_cos();
    let ring = 5.0 + 4.0 * c2;
    let d1 = nalgebra::Vector3::new(-tau * s1 * ring, tau * c1 * ring, 0.0);
    let d2 = nalgebra::Vector3::new(-4.0 * tau * c1 * s2, -4.0 * tau * s1 * s2, tau * c2);
    Mat2::new(d1.dot(&d1), d1.dot(&d2), d2.dot(&d1), d2.dot(&d2))
}

/// Drift field of the min-time preset:
/// `b(y) = -0.9 sin(4 pi y1) sin(4 pi y2) * y/|y|`, continued by `b(0) = 0`
/// (the sine factor vanishes at the origin faster than `y/|y|` is singular).
pub fn mintime_drift(y: Vec2) -> Vec2 {
    let norm = y.norm();
    if norm == 0.0 {
        return Vec2::zeros();
    }
    let scale = -0.9 * (4.0 * PI * y.x).sin() * (4.0 * PI * y.y).sin();
    scale / norm * y
}

/// Geodesic distance to the origin on the torus, as a Dirichlet problem for
/// the pulled-back metric. `n` must be odd so the source sits on a vertex.
pub fn preset_torus(n: usize) -> Result<Preset, PresetError> {
    require_odd(n)?;
    // rho^2 = <q, G q> <= (18 pi)^2 |q|^2: the largest singular value of the
    // immersion Jacobian is the outer ring radius factor 2 pi * 9.
    let rho_star_upper = 18.0 * PI;
    Ok(Preset {
        name: "torus".into(),
        recipe: default_recipe(n),
        model: MetricModel::gram(torus_gram),
        boundary_value: 2.0 * DOMAIN_DIAMETER * rho_star_upper,
        sources: vec![(Vec2::zeros(), 0.0)],
        exact: None,
    })
}

/// Min-time value function with the rotational drift field; speeds range
/// over `[0.1, 1.9]`, so `rho^* = 10`. `n` must be odd.
pub fn preset_mintime(n: usize) -> Result<Preset, PresetError> {
    require_odd(n)?;
    let rho_star_upper = 10.0;
    Ok(Preset {
        name: "mintime".into(),
        recipe: default_recipe(n),
        model: MetricModel::drift(mintime_drift),
        boundary_value: 2.0 * DOMAIN_DIAMETER * rho_star_upper,
        sources: vec![(Vec2::zeros(), 0.0)],
        exact: None,
    })
}

/// Euclidean point-source problem with exact solution `|x|`. `n` must be
/// odd so the source sits exactly at the origin.
pub fn preset_point_source_euclid(n: usize) -> Result<Preset, PresetError> {
    require_odd(n)?;
    Ok(Preset {
        name: "euclid".into(),
        recipe: default_recipe(n),
        model: MetricModel::euclid(),
        boundary_value: 2.0 * DOMAIN_DIAMETER,
        sources: vec![(Vec2::zeros(), 0.0)],
        exact: Some(Box::new(|p: Vec2| p.norm())),
    })
}

impl Preset {
    /// Same preset on a different mesh recipe (e.g. unperturbed).
    pub fn with_recipe(mut self, recipe: MeshRecipe) -> Self {
        self.recipe = recipe;
        self
    }

    pub fn build_mesh(&self) -> Result<TriMesh, PresetError> {
        Ok(self.recipe.build()?)
    }

    pub fn dirichlet(&self, mesh: &TriMesh) -> DirichletSpec {
        let mut spec = DirichletSpec::constant_on_boundary(mesh, self.boundary_value);
        for &(point, value) in &self.sources {
            spec = spec.with_point_source(mesh, point, value);
        }
        spec
    }

    /// Builds the mesh and solves the preset with the given configuration.
    pub fn solve(&self, config: &SolverConfig) -> Result<PresetRun, PresetError> {
        let mesh = self.build_mesh()?;
        let dirichlet = self.dirichlet(&mesh);
        let outcome = solve(&mesh, &self.model, &dirichlet, config)?;
        Ok(PresetRun { mesh, outcome })
    }

    /// Sampled metric bounds, anisotropy, and mesh quality on this preset's mesh.
    pub fn diagnostics(&self, mesh: &TriMesh) -> Result<PresetDiagnostics, PresetError> {
        let bounds = estimate_rho_bounds(&self.model, mesh, 64).map_err(SolverError::from)?;
        let quality = mesh_quality(mesh);
        Ok(PresetDiagnostics {
            anisotropy: bounds.anisotropy(),
            bounds,
            theta: quality.theta,
            h: quality.h,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PresetDiagnostics {
    pub bounds: RhoBounds,
    /// `rho^*/rho_*`, the sampled speed anisotropy.
    pub anisotropy: f64,
    pub theta: f64,
    pub h: f64,
}

pub struct PresetRun {
    pub mesh: TriMesh,
    pub outcome: SolveOutcome,
}

/// Maximum nodal error over the solver's free vertices against an exact
/// solution. Pinned vertices are constraints (the outer-boundary constant
/// is artificial), so they are not error-bearing.
pub fn max_error_vs_exact(mesh: &TriMesh, run: &SolveOutcome, exact: impl Fn(Vec2) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for v in 0..mesh.n_vertices() {
        if mesh.is_boundary(v) || run.field.is_dirichlet(v) {
            continue;
        }
        worst = worst.max((run.field.value(v) - exact(mesh.vertex(v))).abs());
    }
    worst
}

/// Maximum nodal error over free coarse vertices against the piecewise
/// linear interpolant of a reference solution on a finer mesh.
pub fn max_error_vs_reference(
    mesh: &TriMesh,
    run: &SolveOutcome,
    ref_mesh: &TriMesh,
    ref_values: &[f64],
) -> f64 {
    let interp = LinearInterpolator::new(ref_mesh, ref_values);
    let mut worst = 0.0f64;
    for v in 0..mesh.n_vertices() {
        if mesh.is_boundary(v) || run.field.is_dirichlet(v) {
            continue;
        }
        worst = worst.max((run.field.value(v) - interp.eval(mesh.vertex(v))).abs());
    }
    worst
}

/// One row of a convergence study.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub preset: String,
    pub n: usize,
    pub solver: String,
    pub max_error: f64,
    pub triangle_updates: u64,
    pub residual: f64,
}

/// Solves the preset family over ascending mesh sizes and reports the
/// maximum nodal error per size.
///
/// Presets with an exact solution produce one row per requested size. For
/// the others the last size is consumed as the reference level: it is
/// solved on an unperturbed mesh, interpolated to the coarse vertices, and
/// must carry at least four times the vertices of every measured size.
pub fn run_convergence_study(
    kind: PresetKind,
    ns: &[usize],
    config: &SolverConfig,
) -> Result<Vec<ErrorReport>, PresetError> {
    if ns.is_empty() {
        return Err(PresetError::InvalidStudy("empty mesh-size list".into()));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PresetError::InvalidStudy(format!(
            "mesh sizes must be strictly ascending, got {ns:?}"
        )));
    }

    let has_exact = kind.make(ns[0])?.exact.is_some();
    let (measured, reference) = if has_exact {
        (ns, None)
    } else {
        if ns.len() < 2 {
            return Err(PresetError::InvalidStudy(
                "reference-mesh studies need at least two sizes (the last is the reference)".into(),
            ));
        }
        let (last, rest) = ns.split_last().unwrap();
        for &n in rest {
            if last * last < 4 * n * n {
                return Err(PresetError::InvalidStudy(format!(
                    "reference mesh {last}^2 is too small for measured size {n}^2 (need a vertex ratio of at least 4)"
                )));
            }
        }
        (rest, Some(*last))
    };

    let reference_run = match reference {
        Some(ref_n) => {
            let preset = kind.make(ref_n)?.with_recipe(MeshRecipe {
                n: ref_n,
                perturb: 0.0,
                seed: 0,
            });
            Some(preset.solve(config)?)
        }
        None => None,
    };

    let mut reports = Vec::with_capacity(measured.len());
    for &n in measured {
        let preset = kind.make(n)?;
        let run = preset.solve(config)?;
        let max_error = match (&preset.exact, &reference_run) {
            (Some(exact), _) => max_error_vs_exact(&run.mesh, &run.outcome, exact),
            (None, Some(reference)) => max_error_vs_reference(
                &run.mesh,
                &run.outcome,
                &reference.mesh,
                reference.outcome.field.values(),
            ),
            (None, None) => unreachable!("reference solved above for presets without exact solution"),
        };
        reports.push(ErrorReport {
            preset: preset.name.clone(),
            n,
            solver: config.kind.name().into(),
            max_error,
            triangle_updates: run.outcome.stats.triangle_updates,
            residual: run.outcome.stats.final_residual,
        });
    }
    Ok(reports)
}

/// One row of a solver comparison.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub preset: String,
    pub n: usize,
    pub solver: String,
    pub triangle_updates: u64,
    pub residual: f64,
    pub max_diff_vs_adaptive: f64,
}

/// Solves one preset size with each requested solver and tabulates work,
/// residual, and the worst nodal difference against the adaptive solution.
pub fn run_solver_comparison(
    kind: PresetKind,
    n: usize,
    solvers: &[SolverKind],
    config: &SolverConfig,
) -> Result<Vec<ComparisonRow>, PresetError> {
    let preset = kind.make(n)?;
    let adaptive_config = SolverConfig {
        kind: SolverKind::AdaptiveGs,
        ..*config
    };
    let adaptive = preset.solve(&adaptive_config)?;

    let mut rows = Vec::with_capacity(solvers.len());
    for &kind_k in solvers {
        let run = if kind_k == SolverKind::AdaptiveGs {
            None
        } else {
            Some(preset.solve(&SolverConfig { kind: kind_k, ..*config })?)
        };
        let (stats, field) = match &run {
            Some(r) => (r.outcome.stats, &r.outcome.field),
            None => (adaptive.outcome.stats, &adaptive.outcome.field),
        };
        let max_diff = field
            .values()
            .iter()
            .zip(adaptive.outcome.field.values())
            .map(|(&a, &b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0f64, f64::max);
        rows.push(ComparisonRow {
            preset: preset.name.clone(),
            n,
            solver: kind_k.name().into(),
            triangle_updates: stats.triangle_updates,
            residual: stats.final_residual,
            max_diff_vs_adaptive: max_diff,
        });
    }
    Ok(rows)
}

pub fn convergence_csv(reports: &[ErrorReport]) -> String {
    let mut out = String::from("preset,n,solver,max_error,triangle_updates,residual\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.preset, r.n, r.solver, r.max_error, r.triangle_updates, r.residual
        );
    }
    out
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("preset,n,solver,triangle_updates,residual,max_diff_vs_adaptive\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.preset, r.n, r.solver, r.triangle_updates, r.residual, r.max_diff_vs_adaptive
        );
    }
    out
}

/// Per-vertex solution dump, `x,y,u` per line.
pub fn solution_csv(mesh: &TriMesh, values: &[f64]) -> String {
    let mut out = String::from("x,y,u\n");
    for (p, u) in mesh.vertices().iter().zip(values) {
        let _ = writeln!(out, "{},{},{}", p.x, p.y, u);
    }
    out
}
