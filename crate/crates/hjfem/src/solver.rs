//! Fixed-point solvers for the nodal system `u = Lambda u` with Dirichlet
//! data, residual evaluation, and comparison runs.
//!
//! Three iterations are offered:
//!
//! - `jacobi`: synchronous full sweeps `u^(n+1) = Lambda u^n`, initialized
//!   at the minimum Dirichlet value so iterates increase monotonically;
//! - `gauss_seidel`: in-place sweeps in ascending vertex order, always
//!   using the most recent values;
//! - `adaptive_gs`: FIFO-queue relaxation starting from `+inf`, updating
//!   only vertices whose neighborhood recently changed; per-vertex values
//!   decrease monotonically.
//!
//! All three stop at the same absolute tolerance on the update residual and
//! converge to the same nodal solution (the fixed point is unique).

use crate::hopf_lax::hopf_lax_update;
use crate::mesh::TriMesh;
use crate::metric::{MetricError, MetricModel};
use crate::Vec2;
use std::collections::VecDeque;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("Dirichlet specification is empty")]
    EmptyDirichlet,
    #[error("Dirichlet value at vertex {vertex} is {value}; values must be finite")]
    NonFiniteDirichlet { vertex: usize, value: f64 },
    #[error("Dirichlet vertex {vertex} out of range (mesh has {n_vertices} vertices)")]
    VertexOutOfRange { vertex: usize, n_vertices: usize },
    #[error("{0}")]
    InvalidInput(String),
}

/// Dirichlet data: a set of pinned vertices with finite values. Pins are
/// usually boundary vertices, plus declared interior point sources.
#[derive(Debug, Clone, Default)]
pub struct DirichletSpec {
    entries: Vec<(usize, f64)>,
}

impl DirichletSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pins vertex `v` to `value`, replacing any previous pin.
    pub fn set(&mut self, v: usize, value: f64) {
        if let Some(entry) = self.entries.iter_mut().find(|(w, _)| *w == v) {
            entry.1 = value;
        } else {
            self.entries.push((v, value));
        }
    }

    pub fn constant_on_boundary(mesh: &TriMesh, value: f64) -> Self {
        Self::on_boundary(mesh, |_| value)
    }

    pub fn on_boundary(mesh: &TriMesh, g: impl Fn(Vec2) -> f64) -> Self {
        let mut spec = Self::new();
        for v in mesh.boundary_vertices() {
            spec.set(v, g(mesh.vertex(v)));
        }
        spec
    }

    /// Additionally pins the vertex nearest to `point`.
    pub fn with_point_source(mut self, mesh: &TriMesh, point: Vec2, value: f64) -> Self {
        let v = nearest_vertex(mesh, point);
        self.set(v, value);
        self
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn min_value(&self) -> Option<f64> {
        self.entries.iter().map(|&(_, g)| g).reduce(f64::min)
    }

    pub(crate) fn dense_map(&self, n: usize) -> Vec<Option<f64>> {
        let mut map = vec![None; n];
        for &(v, g) in &self.entries {
            map[v] = Some(g);
        }
        map
    }

    fn validate(&self, mesh: &TriMesh) -> Result<(), SolverError> {
        if self.entries.is_empty() {
            return Err(SolverError::EmptyDirichlet);
        }
        for &(v, g) in &self.entries {
            if v >= mesh.n_vertices() {
                return Err(SolverError::VertexOutOfRange {
                    vertex: v,
                    n_vertices: mesh.n_vertices(),
                });
            }
            if !g.is_finite() {
                return Err(SolverError::NonFiniteDirichlet { vertex: v, value: g });
            }
        }
        Ok(())
    }
}

pub fn nearest_vertex(mesh: &TriMesh, point: Vec2) -> usize {
    (0..mesh.n_vertices())
        .min_by(|&a, &b| {
            let da = (mesh.vertex(a) - point).norm_squared();
            let db = (mesh.vertex(b) - point).norm_squared();
            da.partial_cmp(&db).unwrap()
        })
        .expect("mesh has no vertices")
}

/// Per-vertex values (`+inf` allowed on non-pinned vertices) with the
/// Dirichlet mask.
#[derive(Debug, Clone)]
pub struct NodalField {
    values: Vec<f64>,
    dirichlet: Vec<bool>,
}

impl NodalField {
    /// A field with no pins, every vertex at `fill`.
    pub fn new(n: usize, fill: f64) -> Self {
        Self {
            values: vec![fill; n],
            dirichlet: vec![false; n],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len();
        Self {
            values,
            dirichlet: vec![false; n],
        }
    }

    /// Pins the spec's vertices at their values and fills the rest with
    /// `fill` (commonly `+inf` or the minimum Dirichlet value).
    pub fn from_dirichlet(mesh: &TriMesh, spec: &DirichletSpec, fill: f64) -> Result<Self, SolverError> {
        spec.validate(mesh)?;
        let mut field = Self::new(mesh.n_vertices(), fill);
        for &(v, g) in spec.entries() {
            field.values[v] = g;
            field.dirichlet[v] = true;
        }
        Ok(field)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn set(&mut self, v: usize, value: f64) {
        self.values[v] = value;
    }

    pub fn is_dirichlet(&self, v: usize) -> bool {
        self.dirichlet[v]
    }

    /// Vertices the solver may modify: interior and not pinned.
    pub fn free_vertices(&self, mesh: &TriMesh) -> Vec<usize> {
        (0..self.len())
            .filter(|&v| !self.dirichlet[v] && !mesh.is_boundary(v))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Jacobi,
    GaussSeidel,
    AdaptiveGs,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Jacobi => "jacobi",
            SolverKind::GaussSeidel => "gauss_seidel",
            SolverKind::AdaptiveGs => "adaptive_gs",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jacobi" => Ok(SolverKind::Jacobi),
            "gauss_seidel" => Ok(SolverKind::GaussSeidel),
            "adaptive_gs" => Ok(SolverKind::AdaptiveGs),
            other => Err(format!(
                "unknown solver `{other}` (expected jacobi, gauss_seidel, or adaptive_gs)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Absolute residual tolerance.
    pub tol: f64,
    /// Safety cap on full sweeps (Jacobi/Gauss-Seidel) or on queue pops in
    /// units of the free-vertex count (adaptive).
    pub max_sweeps: usize,
    /// Tolerance of the 1D edge minimization for models without a closed form.
    pub tol_1d: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::AdaptiveGs,
            tol: 1e-8,
            max_sweeps: 10_000,
            tol_1d: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn with_kind(kind: SolverKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }
}

/// Work and convergence accounting for one solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    /// Number of per-triangle update evaluations performed by the iteration.
    pub triangle_updates: u64,
    /// Full sweeps (Jacobi/Gauss-Seidel) or queue pops (adaptive).
    pub sweeps_or_pops: u64,
    /// `max |u - Lambda u|` over free vertices, measured after the iteration.
    pub final_residual: f64,
    pub wall_time: Duration,
    /// Whether `final_residual <= tol` was reached within the sweep cap.
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub field: NodalField,
    pub stats: SolveStats,
}

/// Dispatches to the solver selected in `config.kind`.
pub fn solve(
    mesh: &TriMesh,
    model: &MetricModel,
    g: &DirichletSpec,
    config: &SolverConfig,
) -> Result<SolveOutcome, SolverError> {
    match config.kind {
        SolverKind::Jacobi => solve_jacobi(mesh, model, g, config),
        SolverKind::GaussSeidel => solve_gauss_seidel(mesh, model, g, config),
        SolverKind::AdaptiveGs => solve_adaptive_gs(mesh, model, g, config),
    }
}

pub fn solve_jacobi(
    mesh: &TriMesh,
    model: &MetricModel,
    g: &DirichletSpec,
    config: &SolverConfig,
) -> Result<SolveOutcome, SolverError> {
    solve_jacobi_traced(mesh, model, g, config, |_, _, _| ())
}

/// Jacobi iteration with an observer called as `(vertex, old, new)` for
/// every committed per-vertex assignment, in commit order.
pub fn solve_jacobi_traced(
    mesh: &TriMesh,
    model: &MetricModel,
    g: &DirichletSpec,
    config: &SolverConfig,
    mut observer: impl FnMut(usize, f64, f64),
) -> Result<SolveOutcome, SolverError> {
    let start = Instant::now();
    g.validate(mesh)?;
    // The all-min-g start lies below the solution, so sweeps increase
    // monotonically toward it.
    let fill = g.min_value().unwrap();
    let mut field = NodalField::from_dirichlet(mesh, g, fill)?;
    let free = field.free_vertices(mesh);

    let mut stats = SolveStats {
        triangle_updates: 0,
        sweeps_or_pops: 0,
        final_residual: 0.0,
        wall_time: Duration::ZERO,
        converged: free.is_empty(),
    };

    let mut fresh = Vec::with_capacity(free.len());
    while !free.is_empty() && stats.sweeps_or_pops < config.max_sweeps as u64 {
        fresh.clear();
        let mut max_change = 0.0f64;
        for &v in &free {
            let new = hopf_lax_update(mesh, model, &field, v, config.tol_1d)?;
            stats.triangle_updates += mesh.patch(v).len() as u64;
            max_change = max_change.max(delta(field.value(v), new));
            fresh.push(new);
        }
        for (&v, &new) in free.iter().zip(&fresh) {
            observer(v, field.value(v), new);
            field.set(v, new);
        }
        stats.sweeps_or_pops += 1;
        if max_change <= config.tol {
            let r = residual_with(mesh, model, &field, config.tol_1d)?;
            if r <= config.tol {
                stats.final_residual = r;
                stats.converged = true;
                break;
            }
        }
    }
    if !stats.converged {
        stats.final_residual = residual_with(mesh, model, &field, config.tol_1d)?;
        stats.converged = stats.final_residual <= config.tol;
    }
    stats.wall_time = start.elapsed();
    Ok(SolveOutcome { field, stats })
}

pub fn solve_gauss_seidel(
    mesh: &TriMesh,
    model: &MetricModel,
    g: &DirichletSpec,
    config: &SolverConfig,
) -> Result<SolveOutcome, SolverError> {
    solve_gauss_seidel_traced(mesh, model, g, config, |_, _, _| ())
}

/// Gauss-Seidel iteration: in-place sweeps in ascending vertex order using
/// the most recent values. Observer as in [`solve_jacobi_traced`].
pub fn solve_gauss_seidel_traced(
    mesh: &TriMesh,
    model: &MetricModel,
    g: &DirichletSpec,
    config: &SolverConfig,
    mut observer: impl FnMut(usize, f64, f64),
) -> Result<SolveOutcome, SolverError> {
    let start = Instant::now();
    g.validate(mesh)?;
    let fill = g.min_value().unwrap();
    let mut field = NodalField::from_dirichlet(mesh, g, fill)?;
    let free = field.free_vertices(mesh);

    let mut stats = SolveStats {
        triangle_updates: 0,
        sweeps_or_pops: 0,
        final_residual: 0.0,
        wall_time: Duration::ZERO,
        converged: free.is_empty(),
    };

    while !free.is_empty() && stats.sweeps_or_pops < config.max_sweeps as u64 {
        let mut max_change = 0.0f64;
        for &v in &free {
            let old = field.value(v);
            let new = hopf_lax_update(mesh, model, &field, v, config.tol_1d)?;
            stats.triangle_updates += mesh.patch(v).len() as u64;
            max_change = max_change.max(delta(old, new));
            observer(v, old, new);
            field.set(v, new);
        }
        stats.sweeps_or_pops += 1;
        if max_change <= config.tol {
            let r = residual_with(mesh, model, &field, config.tol_1d)?;
            if r <= config.tol {
                stats.final_residual = r;
                stats.converged = true;
                break;
            }
        }
    }
    if !stats.converged {
        stats.final_residual = residual_with(mesh, model, &field, config.tol_1d)?;
        stats.converged = stats.final_residual <= config.tol;
    }
    stats.wall_time = start.elapsed();
    Ok(SolveOutcome { field, stats })
}

pub fn solve_adaptive_gs(
    mesh: &TriMesh,
    model: &MetricModel,
    g: &DirichletSpec,
    config: &SolverConfig,
) -> Result<SolveOutcome, SolverError> {
    solve_adaptive_gs_traced(mesh, model, g, config, |_, _, _| ())
}

/// Adaptive Gauss-Seidel iteration:
///
/// 1. Pin Dirichlet vertices, set every other vertex to `+inf`, and enqueue
///    the free vertices adjacent to a pinned vertex in ascending index order.
/// 2. Pop the front vertex (clearing its enqueued flag) and compute its
///    update value.
/// 3. If the value changed by more than `tol`, assign it and append every
///    not-yet-enqueued free neighbor to the queue.
/// 4. Repeat until the queue is empty.
///
/// Vertices may be re-enqueued after they are popped; the enqueued flag is
/// cleared before the update is computed so a vertex can be scheduled again
/// while its own update is in flight. Observer as in
/// [`solve_jacobi_traced`]; per-vertex assigned values never increase.
pub fn solve_adaptive_gs_traced(
    mesh: &TriMesh,
    model: &MetricModel,
    g: &DirichletSpec,
    config: &SolverConfig,
    mut observer: impl FnMut(usize, f64, f64),
) -> Result<SolveOutcome, SolverError> {
    let start = Instant::now();
    g.validate(mesh)?;
    let mut field = NodalField::from_dirichlet(mesh, g, f64::INFINITY)?;
    let free = field.free_vertices(mesh);
    let is_free: Vec<bool> = {
        let mut mask = vec![false; field.len()];
        for &v in &free {
            mask[v] = true;
        }
        mask
    };

    let mut enqueued = vec![false; field.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &v in &free {
        if mesh.neighbors(v).iter().any(|&w| field.is_dirichlet(w)) {
            enqueued[v] = true;
            queue.push_back(v);
        }
    }

    let mut stats = SolveStats {
        triangle_updates: 0,
        sweeps_or_pops: 0,
        final_residual: 0.0,
        wall_time: Duration::ZERO,
        converged: false,
    };

    let pop_budget = config.max_sweeps as u64 * free.len().max(1) as u64;
    while let Some(v) = queue.pop_front() {
        enqueued[v] = false;
        stats.sweeps_or_pops += 1;
        let new = hopf_lax_update(mesh, model, &field, v, config.tol_1d)?;
        stats.triangle_updates += mesh.patch(v).len() as u64;
        let old = field.value(v);
        // NaN from inf - inf compares false: an untouched infinite vertex
        // recomputed as infinite counts as unchanged.
        if delta(old, new) > config.tol {
            observer(v, old, new);
            field.set(v, new);
            for &w in mesh.neighbors(v) {
                if is_free[w] && !enqueued[w] {
                    enqueued[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if stats.sweeps_or_pops >= pop_budget {
            break;
        }
    }

    stats.final_residual = residual_with(mesh, model, &field, config.tol_1d)?;
    stats.converged = queue.is_empty() && stats.final_residual <= config.tol;
    stats.wall_time = start.elapsed();
    Ok(SolveOutcome { field, stats })
}

/// `|new - old|` with `inf`-vs-`inf` counting as no change.
fn delta(old: f64, new: f64) -> f64 {
    if old == new {
        0.0
    } else {
        (new - old).abs()
    }
}

/// `max |u - Lambda u|` over free vertices. A vertex that is infinite in
/// the field but finite under the operator (or vice versa) yields an
/// infinite residual; infinite in both counts as matched.
pub fn residual(mesh: &TriMesh, model: &MetricModel, field: &NodalField) -> Result<f64, MetricError> {
    residual_with(mesh, model, field, SolverConfig::default().tol_1d)
}

pub fn residual_with(
    mesh: &TriMesh,
    model: &MetricModel,
    field: &NodalField,
    tol_1d: f64,
) -> Result<f64, MetricError> {
    let mut worst = 0.0f64;
    for v in 0..field.len() {
        if mesh.is_boundary(v) || field.is_dirichlet(v) {
            continue;
        }
        let u = field.value(v);
        let lu = hopf_lax_update(mesh, model, field, v, tol_1d)?;
        worst = worst.max(delta(u, lu));
    }
    Ok(worst)
}

/// Applies the update operator to every interior vertex of an arbitrary
/// field (identity on the boundary), ignoring Dirichlet masks. This is the
/// plain operator used by the monotonicity/nonexpansiveness properties.
pub fn apply_hopf_lax(
    mesh: &TriMesh,
    model: &MetricModel,
    field: &NodalField,
    tol_1d: f64,
) -> Result<NodalField, MetricError> {
    let mut out = field.clone();
    for v in 0..field.len() {
        if !mesh.is_boundary(v) {
            out.set(v, hopf_lax_update(mesh, model, field, v, tol_1d)?);
        }
    }
    Ok(out)
}

/// Result of solving the same problem under two ordered boundary data.
#[derive(Debug, Clone)]
pub struct ComparisonOutcome {
    pub lower: SolveOutcome,
    pub upper: SolveOutcome,
    /// `max(u_lower - u_upper)` over all vertices; at most roundoff when
    /// the discrete comparison principle holds.
    pub max_violation: f64,
}

/// Solves with `g1` and `g2` where `g1 <= g2` vertexwise on an identical
/// Dirichlet set, and reports the worst ordering violation between the two
/// solutions.
pub fn compare_boundary_data(
    mesh: &TriMesh,
    model: &MetricModel,
    g1: &DirichletSpec,
    g2: &DirichletSpec,
    config: &SolverConfig,
) -> Result<ComparisonOutcome, SolverError> {
    let map1 = g1.dense_map(mesh.n_vertices());
    let map2 = g2.dense_map(mesh.n_vertices());
    for v in 0..mesh.n_vertices() {
        match (map1[v], map2[v]) {
            (None, None) => {}
            (Some(a), Some(b)) if a <= b => {}
            (Some(a), Some(b)) => {
                return Err(SolverError::InvalidInput(format!(
                    "boundary data not ordered at vertex {v}: {a} > {b}"
                )))
            }
            _ => {
                return Err(SolverError::InvalidInput(format!(
                    "Dirichlet sets differ at vertex {v}"
                )))
            }
        }
    }
    let lower = solve(mesh, model, g1, config)?;
    let upper = solve(mesh, model, g2, config)?;
    let max_violation = lower
        .field
        .values()
        .iter()
        .zip(upper.field.values())
        .map(|(&a, &b)| if a == b { 0.0 } else { a - b })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ComparisonOutcome {
        lower,
        upper,
        max_violation,
    })
}

/// Flat key-value stats record, one `key=value` per line.
pub fn format_stats_record(solver: &str, mesh: &TriMesh, stats: &SolveStats) -> String {
    format!(
        "solver={}\nn_vertices={}\nn_triangles={}\ntriangle_updates={}\nsweeps_or_pops={}\nfinal_residual={}\nwall_time_s={}\n",
        solver,
        mesh.n_vertices(),
        mesh.n_triangles(),
        stats.triangle_updates,
        stats.sweeps_or_pops,
        stats.final_residual,
        stats.wall_time.as_secs_f64(),
    )
}
