//! Solver library for Dirichlet problems of static Hamilton-Jacobi equations
//! on unstructured 2D triangulations.
//!
//! The discretization represents the solution as a piecewise-linear nodal
//! field and requires it to satisfy, at every interior vertex, the local
//! variational principle
//!
//! ```text
//! u(x) = min over patch boundary y of ( u(y) + rho(x, x - y) )
//! ```
//!
//! where `rho(x, q)` is the support function of the zero-level set of the
//! Hamiltonian (the anisotropic cost of moving by `-q` near `x`). The
//! minimum over the patch boundary reduces to one convex 1D minimization
//! per incident triangle; for Riemannian metrics it has a closed form.
//!
//! The resulting fixed-point system is solved by one of three iterations:
//! synchronous sweeps (`jacobi`), in-place sweeps (`gauss_seidel`), or a
//! FIFO-queue driven relaxation (`adaptive_gs`) that only revisits vertices
//! whose neighborhood changed.
//!
//! Modules:
//! - [`mesh`]: triangulation storage, adjacency, shape quality, generation, file I/O
//! - [`metric`]: metric/speed models evaluating `rho(x, q)`, bounds, boundary-data diagnostics
//! - [`hopf_lax`]: the per-triangle and per-vertex update operator
//! - [`solver`]: the three fixed-point iterations, residuals, comparison runs
//! - [`presets`]: bundled benchmark problems, error analysis, convergence and complexity studies

pub mod hopf_lax;
pub mod mesh;
pub mod metric;
pub mod presets;
pub mod rng;
pub mod solver;

pub use hopf_lax::{hopf_lax_update, triangle_update_generic, triangle_update_riemannian, TriangleUpdateInput};
pub use mesh::{build_mesh, generate_grid_mesh, load_mesh, save_mesh, MeshError, MeshQuality, TriMesh};
pub use metric::{
    check_boundary_compatibility, estimate_rho_bounds, CompatReport, MetricError, MetricModel, RhoBounds,
};
pub use presets::{run_convergence_study, run_solver_comparison, ErrorReport, Preset, PresetKind};
pub use rng::Lcg64;
pub use solver::{
    compare_boundary_data, residual, solve, solve_adaptive_gs, solve_gauss_seidel, solve_jacobi, DirichletSpec,
    NodalField, SolveOutcome, SolveStats, SolverConfig, SolverError, SolverKind,
};

/// 2D point/vector type used throughout.
pub type Vec2 = nalgebra::Vector2<f64>;
/// 2x2 matrix type used for metric tensors.
pub type Mat2 = nalgebra::Matrix2<f64>;
