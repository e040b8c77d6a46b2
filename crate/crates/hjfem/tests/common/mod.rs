//! Shared sampling oracles for the integration suites. These deliberately
//! avoid the closed-form branch logic under test: updates are checked by
//! dense sampling along the edge and support functions by dense sampling of
//! the Hamiltonian's zero-level set.

use hjfem::metric::{eval_rho, MetricModel};
use hjfem::rng::Lcg64;
use hjfem::{Mat2, Vec2};

/// Random SPD matrix with eigenvalues in `[lo, hi]`.
pub fn random_spd(rng: &mut Lcg64, lo: f64, hi: f64) -> Mat2 {
    let e1 = rng.next_in(lo, hi);
    let e2 = rng.next_in(lo, hi);
    let angle = rng.next_in(0.0, std::f64::consts::PI);
    let (s, c) = angle.sin_cos();
    let r = Mat2::new(c, -s, s, c);
    r * Mat2::new(e1, 0.0, 0.0, e2) * r.transpose()
}

/// Random triangle with vertices in `[-1, 1]^2` and area at least `min_area`.
pub fn random_triangle(rng: &mut Lcg64, min_area: f64) -> (Vec2, Vec2, Vec2) {
    loop {
        let x = Vec2::new(rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0));
        let y = Vec2::new(rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0));
        let z = Vec2::new(rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0));
        let area = 0.5 * ((y - x).x * (z - x).y - (y - x).y * (z - x).x).abs();
        if area >= min_area {
            return (x, y, z);
        }
    }
}

/// Minimum of `(1-t) uy + t uz + rho(x, x - ((1-t) y + t z))` over `n`
/// equispaced samples of `[0, 1]`, sharpened by one parabola through the
/// best sample and its two neighbors. Uses only sampled values.
pub fn edge_sampling_update(
    model: &MetricModel,
    x: Vec2,
    y: Vec2,
    z: Vec2,
    uy: f64,
    uz: f64,
    n: usize,
) -> f64 {
    let phi = |t: f64| {
        let p = y + t * (z - y);
        (1.0 - t) * uy + t * uz + eval_rho(model, x, x - p).unwrap()
    };
    let mut best = f64::INFINITY;
    let mut best_k = 0usize;
    for k in 0..=n {
        let value = phi(k as f64 / n as f64);
        if value < best {
            best = value;
            best_k = k;
        }
    }
    if best_k > 0 && best_k < n {
        let h = 1.0 / n as f64;
        let (fl, fc, fr) = (
            phi((best_k - 1) as f64 * h),
            best,
            phi((best_k + 1) as f64 * h),
        );
        let denom = fl - 2.0 * fc + fr;
        if denom > 0.0 {
            let offset = 0.5 * (fl - fr) / denom;
            if offset.abs() <= 1.0 {
                best = best.min(phi((best_k as f64 + offset) * h));
            }
        }
    }
    best
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| if x == y { 0.0 } else { (x - y).abs() })
        .fold(0.0f64, f64::max)
}
