//! The local Hopf-Lax update: per-triangle minimization of
//! `u(y) + rho(x, x - y)` over the edge opposite the update target, and the
//! patch-wide minimum defining the update operator at a vertex.
//!
//! For Riemannian-type models the per-triangle problem has a closed form
//! (three branches: two vertex updates and one interior foot point); for
//! all other models the edge minimum is found by golden-section search,
//! which is valid because the objective is convex along the edge.

use crate::mesh::TriMesh;
use crate::metric::{eval_rho, inner_w, norm_w, MetricError, MetricModel};
use crate::solver::NodalField;
use crate::{Mat2, Vec2};

/// One per-triangle update problem: target vertex `x`, opposite edge
/// `[y, z]` carrying values `uy`, `uz` (`+inf` allowed, meaning no
/// information), and the metric model evaluated at `x`.
#[derive(Clone, Copy)]
pub struct TriangleUpdateInput<'a> {
    pub x: Vec2,
    pub y: Vec2,
    pub z: Vec2,
    pub uy: f64,
    pub uz: f64,
    pub model: &'a MetricModel,
}

/// Closed-form per-triangle update in the inner-product geometry `W` frozen
/// at the target vertex (`W = M(x)^-1` or `G(x)`).
///
/// With `D = (uz - uy)/|z - y|`, `ca`, `cb` the cosines of the edge angles
/// at `y` and `z` (all in the `W` geometry), the minimum of
/// `u(y(t)) + |x - y(t)|` over the edge is
///
/// - `uy + |x - y|` when `ca <= D` (the minimum sits at `y`),
/// - `uz + |x - z|` when `D <= -cb` (the minimum sits at `z`),
/// - `uy + (ca*D + sqrt((1 - ca^2)(1 - D^2))) * |x - y|` otherwise
///   (interior foot point; the expression is the expanded cosine of the
///   angle difference).
///
/// Infinite `uy` or `uz` short-circuits to the opposite vertex branch.
pub fn triangle_update_in_gram(w: &Mat2, x: Vec2, y: Vec2, z: Vec2, uy: f64, uz: f64) -> f64 {
    let ey = x - y;
    let ez = x - z;
    if uy == f64::INFINITY {
        if uz == f64::INFINITY {
            return f64::INFINITY;
        }
        return uz + norm_w(w, ez);
    }
    if uz == f64::INFINITY {
        return uy + norm_w(w, ey);
    }

    let eyz = z - y;
    let ny = norm_w(w, ey);
    let nz = norm_w(w, ez);
    let nyz = norm_w(w, eyz);
    let delta = (uz - uy) / nyz;
    let c_alpha = inner_w(w, ey, eyz) / (ny * nyz);
    let c_beta = -inner_w(w, ez, eyz) / (nz * nyz);

    if c_alpha <= delta {
        uy + ny
    } else if delta <= -c_beta {
        uz + nz
    } else {
        // Radicand clamped at 0: floating-point dust can push it slightly
        // negative at the branch boundaries.
        let radicand = ((1.0 - c_alpha * c_alpha) * (1.0 - delta * delta)).max(0.0);
        uy + (c_alpha * delta + radicand.sqrt()) * ny
    }
}

/// Closed-form update for `Riemannian`/`GramRiemannian` models.
///
/// Panics if the model does not define an inner-product geometry; fails if
/// the metric matrix at `x` is not SPD.
pub fn triangle_update_riemannian(input: &TriangleUpdateInput) -> Result<f64, MetricError> {
    let w = input
        .model
        .local_gram(input.x)
        .expect("triangle_update_riemannian requires a Riemannian or GramRiemannian model")?;
    Ok(triangle_update_in_gram(&w, input.x, input.y, input.z, input.uy, input.uz))
}

// Interval reduction factor of golden-section search, (sqrt(5) - 1)/2.
const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Per-triangle update for arbitrary models: minimizes the convex function
/// `phi(t) = (1-t) uy + t uz + rho(x, x - ((1-t) y + t z))` over `t` in
/// `[0, 1]` by golden-section search with a fixed iteration count derived
/// from `tol_1d`, followed by one parabolic refinement step. The endpoints
/// are always candidates, so an infinite `uy` or `uz` pins the minimum at
/// the opposite vertex.
pub fn triangle_update_generic(input: &TriangleUpdateInput, tol_1d: f64) -> Result<f64, MetricError> {
    assert!(tol_1d > 0.0, "tol_1d must be positive");
    let TriangleUpdateInput { x, y, z, uy, uz, model } = *input;

    if uy == f64::INFINITY && uz == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let at_y = if uy == f64::INFINITY { f64::INFINITY } else { uy + eval_rho(model, x, x - y)? };
    if uz == f64::INFINITY {
        return Ok(at_y);
    }
    let at_z = uz + eval_rho(model, x, x - z)?;
    if uy == f64::INFINITY {
        return Ok(at_z);
    }

    let phi = |t: f64| -> Result<f64, MetricError> {
        let point = y + t * (z - y);
        Ok((1.0 - t) * uy + t * uz + eval_rho(model, x, x - point)?)
    };

    let mut a = 0.0;
    let mut b = 1.0;
    let n_iter = ((1.0 / tol_1d).ln() / (1.0 / GOLDEN).ln()).ceil() as usize;
    let mut t1 = b - GOLDEN * (b - a);
    let mut t2 = a + GOLDEN * (b - a);
    let mut f1 = phi(t1)?;
    let mut f2 = phi(t2)?;
    for _ in 0..n_iter {
        if f1 <= f2 {
            b = t2;
            t2 = t1;
            f2 = f1;
            t1 = b - GOLDEN * (b - a);
            f1 = phi(t1)?;
        } else {
            a = t1;
            t1 = t2;
            f1 = f2;
            t2 = a + GOLDEN * (b - a);
            f2 = phi(t2)?;
        }
    }
    let mut best = at_y.min(at_z).min(f1).min(f2);

    // One parabolic step through three interior samples.
    let tm = 0.5 * (a + b);
    let fm = phi(tm)?;
    best = best.min(fm);
    let denom = (t1 - tm) * (f2 - fm) - (t2 - tm) * (f1 - fm);
    if denom.abs() > 0.0 {
        let num = (t1 - tm).powi(2) * (f2 - fm) - (t2 - tm).powi(2) * (f1 - fm);
        let t_star = tm + 0.5 * num / denom;
        if (0.0..=1.0).contains(&t_star) && t_star.is_finite() {
            best = best.min(phi(t_star)?);
        }
    }
    Ok(best)
}

/// The update operator at vertex `v`: minimum of the per-triangle updates
/// over the patch of `v`, using the closed form when the model supports it.
/// On boundary vertices the operator is the identity.
pub fn hopf_lax_update(
    mesh: &TriMesh,
    model: &MetricModel,
    field: &NodalField,
    v: usize,
    tol_1d: f64,
) -> Result<f64, MetricError> {
    if mesh.is_boundary(v) {
        return Ok(field.value(v));
    }
    let patch = mesh.patch(v);
    assert!(!patch.is_empty(), "interior vertex {v} has an empty patch");
    let x = mesh.vertex(v);
    let gram = model.local_gram(x).transpose()?;

    let mut best = f64::INFINITY;
    for &t in patch {
        let (iy, iz) = mesh.opposite_edge(t, v);
        let (uy, uz) = (field.value(iy), field.value(iz));
        let value = match &gram {
            Some(w) => triangle_update_in_gram(w, x, mesh.vertex(iy), mesh.vertex(iz), uy, uz),
            None => triangle_update_generic(
                &TriangleUpdateInput {
                    x,
                    y: mesh.vertex(iy),
                    z: mesh.vertex(iz),
                    uy,
                    uz,
                    model,
                },
                tol_1d,
            )?,
        };
        best = best.min(value);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use crate::rng::Lcg64;
    use crate::solver::{DirichletSpec, NodalField};

    fn identity_input<'a>(model: &'a MetricModel, uy: f64, uz: f64) -> TriangleUpdateInput<'a> {
        TriangleUpdateInput {
            x: Vec2::new(0.0, 0.0),
            y: Vec2::new(1.0, 0.0),
            z: Vec2::new(0.0, 1.0),
            uy,
            uz,
            model,
        }
    }

    #[test]
    fn hand_computed_interior_branch() {
        let model = MetricModel::euclid();
        let value = triangle_update_riemannian(&identity_input(&model, 0.0, 0.0)).unwrap();
        assert!((value - 1.0 / 2.0f64.sqrt()).abs() < 1e-12, "value = {value}");
    }

    #[test]
    fn hand_computed_vertex_branch() {
        let model = MetricModel::euclid();
        let value = triangle_update_riemannian(&identity_input(&model, 0.0, 2.0)).unwrap();
        assert!((value - 1.0).abs() < 1e-12, "value = {value}");
    }

    #[test]
    fn hand_computed_equilateral() {
        let model = MetricModel::euclid();
        let input = TriangleUpdateInput {
            x: Vec2::new(0.5, 3.0f64.sqrt() / 2.0),
            y: Vec2::new(0.0, 0.0),
            z: Vec2::new(1.0, 0.0),
            uy: 0.0,
            uz: 0.0,
            model: &model,
        };
        let value = triangle_update_riemannian(&input).unwrap();
        assert!((value - 3.0f64.sqrt() / 2.0).abs() < 1e-12, "value = {value}");
    }

    #[test]
    fn hand_computed_anisotropic() {
        let model = MetricModel::diag(4.0, 1.0);
        let value = triangle_update_riemannian(&identity_input(&model, 0.0, 0.0)).unwrap();
        assert!((value - 0.2f64.sqrt()).abs() < 1e-12, "value = {value}");
    }

    #[test]
    fn infinite_values_short_circuit() {
        let model = MetricModel::euclid();
        let v = triangle_update_riemannian(&identity_input(&model, f64::INFINITY, 0.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let v = triangle_update_riemannian(&identity_input(&model, 0.0, f64::INFINITY)).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let v =
            triangle_update_riemannian(&identity_input(&model, f64::INFINITY, f64::INFINITY)).unwrap();
        assert_eq!(v, f64::INFINITY);
    }

    #[test]
    fn generic_pins_at_endpoint_for_infinite_value() {
        let model = MetricModel::euclid();
        let v = triangle_update_generic(&identity_input(&model, f64::INFINITY, 0.25), 1e-10).unwrap();
        assert!((v - 1.25).abs() < 1e-12, "v = {v}");
    }

    #[test]
    fn generic_matches_euclid_closed_form_for_zero_drift() {
        let drift = MetricModel::drift(|_| Vec2::zeros());
        let euclid = MetricModel::euclid();
        let mut rng = Lcg64::new(5);
        for _ in 0..50 {
            let input = random_triangle(&mut rng, &drift);
            let generic = triangle_update_generic(&input, 1e-10).unwrap();
            let closed = triangle_update_riemannian(&TriangleUpdateInput {
                model: &euclid,
                ..input
            })
            .unwrap();
            assert!(
                (generic - closed).abs() <= 1e-8 * (1.0 + closed.abs()),
                "generic {generic} vs closed {closed}"
            );
        }
    }

    fn random_triangle<'a>(rng: &mut Lcg64, model: &'a MetricModel) -> TriangleUpdateInput<'a> {
        loop {
            let x = Vec2::new(rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0));
            let y = Vec2::new(rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0));
            let z = Vec2::new(rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0));
            let area = 0.5 * ((y - x).x * (z - x).y - (y - x).y * (z - x).x);
            if area.abs() > 0.05 {
                return TriangleUpdateInput {
                    x,
                    y,
                    z,
                    uy: rng.next_in(0.0, 1.0),
                    uz: rng.next_in(0.0, 1.0),
                    model,
                };
            }
        }
    }

    #[test]
    fn generic_agrees_with_riemannian_closed_form() {
        let mut rng = Lcg64::new(77);
        for _ in 0..200 {
            let (a, b) = (rng.next_in(0.2, 5.0), rng.next_in(0.2, 5.0));
            let angle = rng.next_in(0.0, std::f64::consts::PI);
            let model = rotated_diag_model(a, b, angle);
            let input = random_triangle(&mut rng, &model);
            let closed = triangle_update_riemannian(&input).unwrap();
            let generic = triangle_update_generic(&input, 1e-10).unwrap();
            assert!(
                (generic - closed).abs() <= 1e-8 * (1.0 + closed.abs()),
                "a={a} b={b} angle={angle}: closed {closed} vs generic {generic}"
            );
        }
    }

    pub(crate) fn rotated_diag_model(a: f64, b: f64, angle: f64) -> MetricModel {
        let (s, c) = angle.sin_cos();
        let r = Mat2::new(c, -s, s, c);
        let m = r * Mat2::new(a, 0.0, 0.0, b) * r.transpose();
        MetricModel::riemannian(move |_| m)
    }

    #[test]
    fn branch_values_continuous_at_boundaries() {
        let mut rng = Lcg64::new(13);
        for _ in 0..100 {
            let (a, b) = (rng.next_in(0.2, 5.0), rng.next_in(0.2, 5.0));
            let model = rotated_diag_model(a, b, rng.next_in(0.0, 3.0));
            let mut input = random_triangle(&mut rng, &model);
            let w = model.local_gram(input.x).unwrap().unwrap();
            let ny = norm_w(&w, input.x - input.y);
            let nz = norm_w(&w, input.x - input.z);
            let nyz = norm_w(&w, input.z - input.y);
            let c_alpha = inner_w(&w, input.x - input.y, input.z - input.y) / (ny * nyz);
            let c_beta = -inner_w(&w, input.x - input.z, input.z - input.y) / (nz * nyz);

            let branch3 = |delta: f64| {
                let radicand = ((1.0 - c_alpha * c_alpha) * (1.0 - delta * delta)).max(0.0);
                input.uy + (c_alpha * delta + radicand.sqrt()) * ny
            };

            // Delta = c_alpha: interior expression meets the y-vertex branch.
            input.uz = input.uy + c_alpha * nyz;
            let dispatched = triangle_update_riemannian(&input).unwrap();
            assert!((dispatched - branch3(c_alpha)).abs() < 1e-10);
            assert!((dispatched - (input.uy + ny)).abs() < 1e-10);

            // Delta = -c_beta: interior expression meets the z-vertex branch.
            input.uz = input.uy - c_beta * nyz;
            let dispatched = triangle_update_riemannian(&input).unwrap();
            assert!((dispatched - branch3(-c_beta)).abs() < 1e-10);
            assert!((dispatched - (input.uz + nz)).abs() < 1e-10);
        }
    }

    #[test]
    fn update_is_monotone_in_data() {
        let mut rng = Lcg64::new(21);
        let model = MetricModel::euclid();
        for _ in 0..200 {
            let input = random_triangle(&mut rng, &model);
            let base = triangle_update_riemannian(&input).unwrap();
            let raised = TriangleUpdateInput {
                uy: input.uy + rng.next_in(0.0, 1.0),
                uz: input.uz + rng.next_in(0.0, 1.0),
                ..input
            };
            let higher = triangle_update_riemannian(&raised).unwrap();
            assert!(higher >= base - 1e-12);
        }
    }

    #[test]
    fn update_bounded_by_vertex_candidates_and_gains_over_data() {
        let mut rng = Lcg64::new(34);
        for _ in 0..200 {
            let (a, b) = (rng.next_in(0.2, 5.0), rng.next_in(0.2, 5.0));
            let model = rotated_diag_model(a, b, rng.next_in(0.0, 3.0));
            let input = random_triangle(&mut rng, &model);
            let w = model.local_gram(input.x).unwrap().unwrap();
            let value = triangle_update_riemannian(&input).unwrap();
            assert!(value <= input.uy + norm_w(&w, input.x - input.y) + 1e-12);
            assert!(value <= input.uz + norm_w(&w, input.x - input.z) + 1e-12);
            assert!(value > input.uy.min(input.uz));
        }
    }

    #[test]
    fn fan_center_update_is_half() {
        let mesh = build_mesh(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(0.0, 1.0),
                Vec2::new(0.5, 0.5),
            ],
            vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
        )
        .unwrap();
        let model = MetricModel::euclid();
        let spec = DirichletSpec::constant_on_boundary(&mesh, 0.0);
        let field = NodalField::from_dirichlet(&mesh, &spec, f64::INFINITY).unwrap();
        let value = hopf_lax_update(&mesh, &model, &field, 4, 1e-10).unwrap();
        assert!((value - 0.5).abs() < 1e-12, "value = {value}");

        // Boundary vertices are fixed points of the operator.
        let value = hopf_lax_update(&mesh, &model, &field, 0, 1e-10).unwrap();
        assert_eq!(value, 0.0);
    }

    #[test]
    fn update_with_all_infinite_patch_is_infinite() {
        let mesh = build_mesh(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(0.0, 1.0),
                Vec2::new(0.5, 0.5),
            ],
            vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
        )
        .unwrap();
        let model = MetricModel::euclid();
        let field = NodalField::new(mesh.n_vertices(), f64::INFINITY);
        let value = hopf_lax_update(&mesh, &model, &field, 4, 1e-10).unwrap();
        assert_eq!(value, f64::INFINITY);
    }
}
