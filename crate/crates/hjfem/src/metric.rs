//! Metric and speed models: evaluation of the support function `rho(x, q)`
//! of the Hamiltonian's zero-level set, bound estimation, and the
//! boundary-data compatibility diagnostic.
//!
//! `rho(x, q)` is the anisotropic cost per unit displacement `-q` near `x`;
//! it is nonnegative, positively homogeneous, and convex in `q` for every
//! model offered here.

use crate::mesh::TriMesh;
use crate::solver::DirichletSpec;
use crate::{Mat2, Vec2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric matrix at ({x}, {y}) is not symmetric positive definite")]
    NotSpd { x: f64, y: f64 },
    #[error("speed function returned {value} at ({x}, {y}); speeds must be positive")]
    NonPositiveSpeed { value: f64, x: f64, y: f64 },
    #[error("drift magnitude {norm} at ({x}, {y}) violates |b| < 1")]
    DriftTooLarge { norm: f64, x: f64, y: f64 },
}

type MatrixField = Box<dyn Fn(Vec2) -> Mat2 + Send + Sync>;
type SpeedField = Box<dyn Fn(Vec2, Vec2) -> f64 + Send + Sync>;
type VectorField = Box<dyn Fn(Vec2) -> Vec2 + Send + Sync>;
type RhoField = Box<dyn Fn(Vec2, Vec2) -> f64 + Send + Sync>;

/// Evaluator of the support function `rho(x, q)`.
///
/// Variants differ in how the underlying Hamiltonian is described:
///
/// - `Riemannian`: `x -> M(x)` SPD; `rho(x, q) = |q|` in the `M(x)^-1` norm
///   (the dual of the `M(x)` norm, as for `|Du|_M = 1`).
/// - `GramRiemannian`: `x -> G(x)` used directly as `rho^2 = <q, G q>`
///   (e.g. `G = Df^T Df` of a surface immersion; equals `Riemannian` with
///   `M = G^-1` without performing the inversion).
/// - `HjbSpeed`: `(x, unit dir) -> f` with `0 < f`; `rho(x, q) = |q| / f(x, -q/|q|)`.
/// - `Drift`: `x -> b(x)` with `|b| < 1` for dynamics `y' = a + b(y)`,
///   `|a| = 1`; with `s = <b, q/|q|>`,
///   `rho(x, q) = |q| / (sqrt(1 - |b|^2 + s^2) - s)`.
/// - `Custom`: any `(x, q) -> rho` the caller asserts to be positively
///   homogeneous convex in `q` (see [`validate_model_sampling`]).
pub enum MetricModel {
    Riemannian(MatrixField),
    GramRiemannian(MatrixField),
    HjbSpeed(SpeedField),
    Drift(VectorField),
    Custom(RhoField),
}

impl std::fmt::Debug for MetricModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MetricModel::Riemannian(_) => "MetricModel::Riemannian",
            MetricModel::GramRiemannian(_) => "MetricModel::GramRiemannian",
            MetricModel::HjbSpeed(_) => "MetricModel::HjbSpeed",
            MetricModel::Drift(_) => "MetricModel::Drift",
            MetricModel::Custom(_) => "MetricModel::Custom",
        })
    }
}

impl MetricModel {
    /// The classic eikonal metric `M = I`.
    pub fn euclid() -> Self {
        MetricModel::Riemannian(Box::new(|_| Mat2::identity()))
    }

    /// Constant diagonal metric `M = diag(a, b)`.
    pub fn diag(a: f64, b: f64) -> Self {
        MetricModel::Riemannian(Box::new(move |_| Mat2::new(a, 0.0, 0.0, b)))
    }

    pub fn riemannian(m: impl Fn(Vec2) -> Mat2 + Send + Sync + 'static) -> Self {
        MetricModel::Riemannian(Box::new(m))
    }

    pub fn gram(g: impl Fn(Vec2) -> Mat2 + Send + Sync + 'static) -> Self {
        MetricModel::GramRiemannian(Box::new(g))
    }

    pub fn hjb_speed(f: impl Fn(Vec2, Vec2) -> f64 + Send + Sync + 'static) -> Self {
        MetricModel::HjbSpeed(Box::new(f))
    }

    pub fn drift(b: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static) -> Self {
        MetricModel::Drift(Box::new(b))
    }

    pub fn custom(rho: impl Fn(Vec2, Vec2) -> f64 + Send + Sync + 'static) -> Self {
        MetricModel::Custom(Box::new(rho))
    }

    /// The SPD matrix `W` with `<p, q>_x = <p, W q>` when the model's edge
    /// geometry at `x` is an inner product, enabling the closed-form
    /// triangle update. `None` for models that need the generic 1D search.
    pub fn local_gram(&self, x: Vec2) -> Option<Result<Mat2, MetricError>> {
        match self {
            MetricModel::Riemannian(m) => Some(invert_spd(m(x), x)),
            MetricModel::GramRiemannian(g) => {
                let w = g(x);
                Some(check_spd(&w, x).map(|_| w))
            }
            _ => None,
        }
    }
}

fn check_spd(m: &Mat2, x: Vec2) -> Result<(), MetricError> {
    let sym_tol = 1e-12 * (m.m11.abs() + m.m22.abs() + m.m12.abs() + m.m21.abs()).max(1.0);
    if m.m11 > 0.0 && m.determinant() > 0.0 && (m.m12 - m.m21).abs() <= sym_tol {
        Ok(())
    } else {
        Err(MetricError::NotSpd { x: x.x, y: x.y })
    }
}

fn invert_spd(m: Mat2, x: Vec2) -> Result<Mat2, MetricError> {
    check_spd(&m, x)?;
    m.try_inverse().ok_or(MetricError::NotSpd { x: x.x, y: x.y })
}

/// Evaluates the support function `rho(x, q)` for the given model.
///
/// `eval_rho(model, x, 0) = 0` for every model.
pub fn eval_rho(model: &MetricModel, x: Vec2, q: Vec2) -> Result<f64, MetricError> {
    match model {
        MetricModel::Riemannian(m) => {
            let w = invert_spd(m(x), x)?;
            Ok(norm_w(&w, q))
        }
        MetricModel::GramRiemannian(g) => {
            let w = g(x);
            check_spd(&w, x)?;
            Ok(norm_w(&w, q))
        }
        MetricModel::HjbSpeed(f) => {
            let norm = q.norm();
            if norm == 0.0 {
                return Ok(0.0);
            }
            let speed = f(x, -q / norm);
            if speed <= 0.0 {
                return Err(MetricError::NonPositiveSpeed {
                    value: speed,
                    x: x.x,
                    y: x.y,
                });
            }
            Ok(norm / speed)
        }
        MetricModel::Drift(b) => {
            let norm = q.norm();
            if norm == 0.0 {
                return Ok(0.0);
            }
            let bv = b(x);
            let bn = bv.norm();
            if bn >= 1.0 {
                return Err(MetricError::DriftTooLarge {
                    norm: bn,
                    x: x.x,
                    y: x.y,
                });
            }
            let bq = bv.dot(&q) / norm;
            Ok(norm / ((1.0 - bn * bn + bq * bq).sqrt() - bq))
        }
        MetricModel::Custom(rho) => Ok(rho(x, q)),
    }
}

/// `sqrt(<q, W q>)` for SPD `W`.
pub(crate) fn norm_w(w: &Mat2, q: Vec2) -> f64 {
    inner_w(w, q, q).max(0.0).sqrt()
}

/// `<p, W q>` for SPD `W`.
pub(crate) fn inner_w(w: &Mat2, p: Vec2, q: Vec2) -> f64 {
    p.dot(&(w * q))
}

/// Sampled estimates of the constants `rho_*`, `rho^*` with
/// `rho_* |q| <= rho(x, q) <= rho^* |q|`.
#[derive(Debug, Clone, Copy)]
pub struct RhoBounds {
    pub rho_star_lower: f64,
    pub rho_star_upper: f64,
}

impl RhoBounds {
    /// Anisotropy coefficient `rho^*/rho_*` (equals the speed ratio `f^*/f_*`
    /// for speed-type models).
    pub fn anisotropy(&self) -> f64 {
        self.rho_star_upper / self.rho_star_lower
    }
}

/// Estimates `rho_*`, `rho^*` by minimizing/maximizing `rho(x, q)` over all
/// mesh vertices and `n_dirs` equispaced unit directions. The estimates are
/// inner: the true `rho^*` is at least `rho_star_upper`, the sharpest valid
/// `rho_*` at least `rho_star_lower`.
pub fn estimate_rho_bounds(
    model: &MetricModel,
    mesh: &TriMesh,
    n_dirs: usize,
) -> Result<RhoBounds, MetricError> {
    assert!(n_dirs >= 4, "need at least 4 sampling directions");
    let mut lower = f64::INFINITY;
    let mut upper: f64 = 0.0;
    for &x in mesh.vertices() {
        for k in 0..n_dirs {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n_dirs as f64;
            let q = Vec2::new(angle.cos(), angle.sin());
            let value = eval_rho(model, x, q)?;
            lower = lower.min(value);
            upper = upper.max(value);
        }
    }
    Ok(RhoBounds {
        rho_star_lower: lower,
        rho_star_upper: upper,
    })
}

/// Outcome of the boundary-data compatibility check
/// `g(x) - g(y) <= (rho_*/theta) |x - y|` over ordered boundary pairs.
#[derive(Debug, Clone)]
pub struct CompatReport {
    pub pass: bool,
    /// Pair maximizing `g(x) - g(y) - (rho_*/theta)|x - y|`.
    pub worst_pair: Option<(usize, usize)>,
    /// The maximized margin; violation iff positive.
    pub worst_margin: f64,
    /// The factor `rho_*/theta` used.
    pub threshold: f64,
}

/// Checks the Lipschitz-type compatibility condition on Dirichlet boundary
/// data. A failing report does not prevent solving; the discrete system
/// remains solvable, but the solution may lose the uniform Lipschitz bound.
///
/// `g` must provide a value for every boundary vertex. `O(B^2)` in the
/// boundary vertex count `B`.
pub fn check_boundary_compatibility(
    mesh: &TriMesh,
    g: &DirichletSpec,
    bounds: &RhoBounds,
    theta: f64,
) -> CompatReport {
    let values = g.dense_map(mesh.n_vertices());
    let boundary: Vec<usize> = mesh.boundary_vertices().collect();
    for &v in &boundary {
        assert!(
            values[v].is_some(),
            "compatibility check requires g on all boundary vertices (missing {v})"
        );
    }
    let threshold = bounds.rho_star_lower / theta;
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_pair = None;
    for &a in &boundary {
        for &b in &boundary {
            if a == b {
                continue;
            }
            let dist = (mesh.vertex(a) - mesh.vertex(b)).norm();
            let margin = values[a].unwrap() - values[b].unwrap() - threshold * dist;
            if margin > worst_margin {
                worst_margin = margin;
                worst_pair = Some((a, b));
            }
        }
    }
    if worst_pair.is_none() {
        worst_margin = 0.0;
    }
    CompatReport {
        pass: worst_margin <= 0.0,
        worst_pair,
        worst_margin,
        threshold,
    }
}

/// Samples homogeneity and subadditivity of a model at the given points.
/// Intended for `Custom` models whose convexity cannot be certified from
/// point evaluations; returns the first violated property.
pub fn validate_model_sampling(
    model: &MetricModel,
    points: &[Vec2],
    n_dirs: usize,
    tol: f64,
) -> Result<(), String> {
    for &x in points {
        for k in 0..n_dirs {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n_dirs as f64;
            let q1 = Vec2::new(angle.cos(), angle.sin());
            let r1 = eval_rho(model, x, q1).map_err(|e| e.to_string())?;
            if r1 < 0.0 {
                return Err(format!("rho({x:?}, {q1:?}) = {r1} is negative"));
            }
            for t in [0.0, 0.5, 2.0, 7.5] {
                let rt = eval_rho(model, x, t * q1).map_err(|e| e.to_string())?;
                if (rt - t * r1).abs() > tol * (1.0 + t * r1) {
                    return Err(format!("homogeneity violated at x={x:?}, q={q1:?}, t={t}"));
                }
            }
            let angle2 = 2.0 * std::f64::consts::PI * ((k + n_dirs / 3) % n_dirs) as f64 / n_dirs as f64;
            let q2 = 1.7 * Vec2::new(angle2.cos(), angle2.sin());
            let r2 = eval_rho(model, x, q2).map_err(|e| e.to_string())?;
            let r12 = eval_rho(model, x, q1 + q2).map_err(|e| e.to_string())?;
            if r12 > r1 + r2 + tol * (1.0 + r1 + r2) {
                return Err(format!("subadditivity violated at x={x:?}, q1={q1:?}, q2={q2:?}"));
            }
        }
    }
    Ok(())
}
