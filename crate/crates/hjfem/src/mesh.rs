//! Planar triangulation storage, adjacency, shape quality, generation, and file I/O.
//!
//! A [`TriMesh`] stores vertices, positively oriented triangles, the set of
//! boundary vertices (endpoints of edges incident to exactly one triangle),
//! and for every vertex the list of incident triangles (its patch). The
//! patch of an interior vertex is the domain of the local Hopf-Lax update.

use crate::rng::Lcg64;
use crate::Vec2;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {triangle}: duplicate vertex in triangle")]
    DuplicateVertexInTriangle { triangle: usize },
    #[error("triangle {triangle}: vertex index {index} out of range (mesh has {n_vertices} vertices)")]
    VertexIndexOutOfRange {
        triangle: usize,
        index: usize,
        n_vertices: usize,
    },
    #[error("triangle {triangle}: zero-area triangle")]
    DegenerateTriangle { triangle: usize },
    #[error("edge ({a}, {b}) is shared by more than two triangles")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("vertex {vertex} has no edge path to the boundary")]
    DisconnectedVertex { vertex: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable planar triangulation with adjacency and boundary classification.
///
/// All triangles have strictly positive signed area. The structure never
/// mutates after construction, so shared read access from multiple threads
/// is safe.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    /// Incident triangle indices per vertex, ascending.
    patches: Vec<Vec<usize>>,
    /// Edge-adjacent vertex indices per vertex, ascending.
    neighbors: Vec<Vec<usize>>,
}

impl TriMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex(&self, v: usize) -> Vec2 {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_vertices()).filter(|&v| self.boundary[v])
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_vertices()).filter(|&v| !self.boundary[v])
    }

    /// Triangles incident to `v`.
    pub fn patch(&self, v: usize) -> &[usize] {
        &self.patches[v]
    }

    /// Vertices sharing an edge with `v`, ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// The two vertices of triangle `t` other than `v`, in stored order.
    ///
    /// Panics if `v` is not a vertex of `t`.
    pub fn opposite_edge(&self, t: usize, v: usize) -> (usize, usize) {
        let [a, b, c] = self.triangles[t];
        if a == v {
            (b, c)
        } else if b == v {
            (c, a)
        } else if c == v {
            (a, b)
        } else {
            panic!("vertex {v} is not a vertex of triangle {t}");
        }
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }
}

fn signed_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
}

/// Builds a [`TriMesh`] from raw vertex and triangle lists.
///
/// Triangles with negative signed area are reoriented by swapping two
/// indices. Fails on malformed input: out-of-range or repeated indices,
/// zero-area triangles, edges shared by more than two triangles, and
/// vertices without an edge path to the boundary.
pub fn build_mesh(vertices: Vec<Vec2>, triangles: Vec<[usize; 3]>) -> Result<TriMesh, MeshError> {
    let nv = vertices.len();
    let mut tris = triangles;
    for (t, tri) in tris.iter_mut().enumerate() {
        for &i in tri.iter() {
            if i >= nv {
                return Err(MeshError::VertexIndexOutOfRange {
                    triangle: t,
                    index: i,
                    n_vertices: nv,
                });
            }
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(MeshError::DuplicateVertexInTriangle { triangle: t });
        }
        let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        let longest = longest_edge(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        if area.abs() <= 1e-14 * longest * longest {
            return Err(MeshError::DegenerateTriangle { triangle: t });
        }
        if area < 0.0 {
            tri.swap(1, 2);
        }
    }

    // Edge incidence counting: an edge on exactly one triangle is boundary.
    let mut edge_count: HashMap<(usize, usize), u8> = HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let count = edge_count.entry(key).or_insert(0);
            *count += 1;
            if *count > 2 {
                let _ = t;
                return Err(MeshError::NonManifoldEdge { a: key.0, b: key.1 });
            }
        }
    }

    let mut boundary = vec![false; nv];
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (&(a, b), &count) in edge_count.iter() {
        neighbors[a].push(b);
        neighbors[b].push(a);
        if count == 1 {
            boundary[a] = true;
            boundary[b] = true;
        }
    }
    for list in neighbors.iter_mut() {
        list.sort_unstable();
    }

    let mut patches: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (t, tri) in tris.iter().enumerate() {
        for &v in tri.iter() {
            patches[v].push(t);
        }
    }

    // Every vertex must reach the boundary along edges (breadth-first from
    // all boundary vertices at once). Vertices in no triangle fail here too.
    let mut reached = boundary.clone();
    let mut queue: Vec<usize> = (0..nv).filter(|&v| boundary[v]).collect();
    while let Some(v) = queue.pop() {
        for &w in &neighbors[v] {
            if !reached[w] {
                reached[w] = true;
                queue.push(w);
            }
        }
    }
    if let Some(v) = (0..nv).find(|&v| !reached[v]) {
        return Err(MeshError::DisconnectedVertex { vertex: v });
    }

    Ok(TriMesh {
        vertices,
        triangles: tris,
        boundary,
        patches,
        neighbors,
    })
}

fn longest_edge(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).norm().max((c - b).norm()).max((a - c).norm())
}

/// Shape quality of a triangulation: mesh size `h`, per-triangle diameter
/// `h1` and minimal vertex height `h0`, and the regularity constant
/// `theta = max h1/h0`.
#[derive(Debug, Clone)]
pub struct MeshQuality {
    /// Maximum triangle diameter.
    pub h: f64,
    /// `(h1, h0)` per triangle.
    pub per_triangle: Vec<(f64, f64)>,
    /// Maximum of `h1/h0` over all triangles; `>= 1`.
    pub theta: f64,
}

/// Measures diameters, minimal heights, and the regularity constant.
///
/// For a triangle, `h1` is the longest edge and `h0` the smallest distance
/// from a vertex to the line through the opposite edge, i.e. `2A / h1`.
pub fn mesh_quality(mesh: &TriMesh) -> MeshQuality {
    let mut h = 0.0f64;
    let mut theta = 1.0f64;
    let mut per_triangle = Vec::with_capacity(mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let [a, b, c] = mesh.triangle(t);
        let (pa, pb, pc) = (mesh.vertex(a), mesh.vertex(b), mesh.vertex(c));
        let h1 = longest_edge(pa, pb, pc);
        let area = signed_area(pa, pb, pc);
        let h0 = 2.0 * area / h1;
        per_triangle.push((h1, h0));
        h = h.max(h1);
        theta = theta.max(h1 / h0);
    }
    MeshQuality {
        h,
        per_triangle,
        theta,
    }
}

/// Generates a perturbed criss-cross triangulation of `[-0.5, 0.5]^2` with
/// `n` vertices per side.
///
/// Each grid cell is split along a diagonal whose orientation alternates in
/// a checkerboard pattern. Interior vertices are displaced by a pseudo-random
/// offset of Euclidean magnitude at most `perturb * cell` where
/// `cell = 1/(n-1)`; the draw order is two uniforms per vertex in row-major
/// order from [`Lcg64`], so equal `(n, perturb, seed)` give bit-identical
/// meshes. For odd `n` the center vertex is kept exactly at the origin so
/// point sources land on a vertex. Perturbations up to 0.25 of the cell
/// cannot invert a triangle (the minimal height of the unperturbed cells is
/// `cell/sqrt(2)` and three vertex moves of `0.25*cell` cannot consume it).
pub fn generate_grid_mesh(n: usize, perturb: f64, seed: u64) -> Result<TriMesh, MeshError> {
    if n < 2 {
        return Err(MeshError::InvalidParameter(format!(
            "need at least 2 vertices per side, got {n}"
        )));
    }
    if !(0.0..=0.25).contains(&perturb) {
        return Err(MeshError::InvalidParameter(format!(
            "perturb must lie in [0, 0.25], got {perturb}"
        )));
    }

    let cell = 1.0 / (n - 1) as f64;
    // Component bound perturb*cell/sqrt(2) keeps the offset magnitude <= perturb*cell.
    let amp = perturb * cell / std::f64::consts::SQRT_2;
    let mut rng = Lcg64::new(seed);
    let mut vertices = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let dx = rng.next_in(-amp, amp);
            let dy = rng.next_in(-amp, amp);
            let on_hull = i == 0 || j == 0 || i == n - 1 || j == n - 1;
            let is_center = n % 2 == 1 && i == (n - 1) / 2 && j == (n - 1) / 2;
            let mut p = Vec2::new(-0.5 + i as f64 * cell, -0.5 + j as f64 * cell);
            if !on_hull && !is_center {
                p.x += dx;
                p.y += dy;
            }
            vertices.push(p);
        }
    }

    let mut triangles = Vec::with_capacity(2 * (n - 1) * (n - 1));
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let sw = j * n + i;
            let se = j * n + i + 1;
            let ne = (j + 1) * n + i + 1;
            let nw = (j + 1) * n + i;
            if (i + j) % 2 == 0 {
                triangles.push([sw, se, ne]);
                triangles.push([sw, ne, nw]);
            } else {
                triangles.push([sw, se, nw]);
                triangles.push([se, ne, nw]);
            }
        }
    }

    for (t, tri) in triangles.iter().enumerate() {
        let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        assert!(
            area > 0.0,
            "perturbation inverted triangle {t} (area {area}); impossible for perturb <= 0.25"
        );
    }

    build_mesh(vertices, triangles)
}

/// The line-oriented text format: `nv nt`, then `nv` lines `x y`, then `nt`
/// lines `i j k` (0-based indices). Coordinates use the shortest exact
/// decimal representation, so the format round-trips bit-exactly.
pub fn format_mesh(mesh: &TriMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", mesh.n_vertices(), mesh.n_triangles());
    for v in mesh.vertices() {
        let _ = writeln!(out, "{} {}", v.x, v.y);
    }
    for tri in mesh.triangles() {
        let _ = writeln!(out, "{} {} {}", tri[0], tri[1], tri[2]);
    }
    out
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}

/// Reads the text format written by [`save_mesh`]. `#` starts a comment,
/// blank lines are ignored, and errors carry 1-based line numbers.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    let content = std::fs::read_to_string(path)?;
    parse_mesh(&content)
}

pub fn parse_mesh(content: &str) -> Result<TriMesh, MeshError> {
    let mut lines = content.lines().enumerate().filter_map(|(idx, raw)| {
        let data = raw.split('#').next().unwrap_or("").trim();
        if data.is_empty() {
            None
        } else {
            Some((idx + 1, data))
        }
    });

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| MeshError::Parse {
            line: 1,
            message: "missing header line `nv nt`".into(),
        })?;
    let mut it = header.split_whitespace();
    let nv: usize = parse_field(it.next(), header_line, "vertex count")?;
    let nt: usize = parse_field(it.next(), header_line, "triangle count")?;
    if it.next().is_some() {
        return Err(MeshError::Parse {
            line: header_line,
            message: "header must be exactly `nv nt`".into(),
        });
    }

    let mut vertices = Vec::with_capacity(nv);
    let mut last_line = header_line;
    for k in 0..nv {
        let (line, text) = lines.next().ok_or_else(|| MeshError::Parse {
            line: last_line,
            message: format!("unexpected end of file: expected {nv} vertex lines, found {k}"),
        })?;
        last_line = line;
        let mut it = text.split_whitespace();
        let x: f64 = parse_field(it.next(), line, "x coordinate")?;
        let y: f64 = parse_field(it.next(), line, "y coordinate")?;
        if it.next().is_some() {
            return Err(MeshError::Parse {
                line,
                message: "vertex line must be exactly `x y`".into(),
            });
        }
        vertices.push(Vec2::new(x, y));
    }

    let mut triangles = Vec::with_capacity(nt);
    for k in 0..nt {
        let (line, text) = lines.next().ok_or_else(|| MeshError::Parse {
            line: last_line,
            message: format!("unexpected end of file: expected {nt} triangle lines, found {k}"),
        })?;
        last_line = line;
        let mut it = text.split_whitespace();
        let mut tri = [0usize; 3];
        for slot in tri.iter_mut() {
            let i: usize = parse_field(it.next(), line, "vertex index")?;
            if i >= nv {
                return Err(MeshError::Parse {
                    line,
                    message: format!("vertex index {i} out of range (mesh has {nv} vertices)"),
                });
            }
            *slot = i;
        }
        if it.next().is_some() {
            return Err(MeshError::Parse {
                line,
                message: "triangle line must be exactly `i j k`".into(),
            });
        }
        triangles.push(tri);
    }

    if let Some((line, _)) = lines.next() {
        return Err(MeshError::Parse {
            line,
            message: "trailing content after triangle list".into(),
        });
    }

    build_mesh(vertices, triangles)
}

fn parse_field<T: std::str::FromStr>(
    field: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, MeshError> {
    let text = field.ok_or_else(|| MeshError::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    text.parse().map_err(|_| MeshError::Parse {
        line,
        message: format!("cannot parse {what} from `{text}`"),
    })
}

/// Piecewise-linear evaluation of a nodal field at arbitrary points,
/// backed by a uniform bounding-box bin grid for triangle lookup.
pub struct LinearInterpolator<'a> {
    mesh: &'a TriMesh,
    values: &'a [f64],
    lo: Vec2,
    inv_cell: f64,
    dims: (usize, usize),
    bins: Vec<Vec<usize>>,
}

impl<'a> LinearInterpolator<'a> {
    pub fn new(mesh: &'a TriMesh, values: &'a [f64]) -> Self {
        assert_eq!(values.len(), mesh.n_vertices());
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in mesh.vertices() {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
        let side = ((mesh.n_triangles() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let cell = extent / side as f64;
        let nx = ((hi.x - lo.x) / cell).ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).ceil() as usize + 1;
        let mut bins = vec![Vec::new(); nx * ny];
        let clampi = |k: isize, n: usize| k.clamp(0, n as isize - 1) as usize;
        for t in 0..mesh.n_triangles() {
            let [a, b, c] = mesh.triangle(t);
            let (pa, pb, pc) = (mesh.vertex(a), mesh.vertex(b), mesh.vertex(c));
            let bx0 = clampi(((pa.x.min(pb.x).min(pc.x) - lo.x) / cell).floor() as isize, nx);
            let bx1 = clampi(((pa.x.max(pb.x).max(pc.x) - lo.x) / cell).floor() as isize, nx);
            let by0 = clampi(((pa.y.min(pb.y).min(pc.y) - lo.y) / cell).floor() as isize, ny);
            let by1 = clampi(((pa.y.max(pb.y).max(pc.y) - lo.y) / cell).floor() as isize, ny);
            for by in by0..=by1 {
                for bx in bx0..=bx1 {
                    bins[by * nx + bx].push(t);
                }
            }
        }
        Self {
            mesh,
            values,
            lo,
            inv_cell: 1.0 / cell,
            dims: (nx, ny),
            bins,
        }
    }

    /// Barycentric coordinates of `p` in triangle `t`.
    fn barycentric(&self, t: usize, p: Vec2) -> (f64, f64, f64) {
        let [a, b, c] = self.mesh.triangle(t);
        let (pa, pb, pc) = (self.mesh.vertex(a), self.mesh.vertex(b), self.mesh.vertex(c));
        let area = signed_area(pa, pb, pc);
        let wa = signed_area(p, pb, pc) / area;
        let wb = signed_area(pa, p, pc) / area;
        (wa, wb, 1.0 - wa - wb)
    }

    fn interpolate_in(&self, t: usize, w: (f64, f64, f64)) -> f64 {
        let [a, b, c] = self.mesh.triangle(t);
        w.0 * self.values[a] + w.1 * self.values[b] + w.2 * self.values[c]
    }

    /// Evaluates the field at `p`. Points outside every triangle (possible
    /// only through floating-point dust at the hull) are assigned the value
    /// of the least-bad candidate triangle with clamped weights.
    pub fn eval(&self, p: Vec2) -> f64 {
        let (nx, ny) = self.dims;
        let bx = (((p.x - self.lo.x) * self.inv_cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
        let by = (((p.y - self.lo.y) * self.inv_cell).floor() as isize).clamp(0, ny as isize - 1) as usize;

        let mut best: Option<(f64, usize, (f64, f64, f64))> = None;
        for ring in 0..=2isize {
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    let cx = bx as isize + dx;
                    let cy = by as isize + dy;
                    if cx < 0 || cy < 0 || cx >= nx as isize || cy >= ny as isize {
                        continue;
                    }
                    for &t in &self.bins[cy as usize * nx + cx as usize] {
                        let w = self.barycentric(t, p);
                        let min_w = w.0.min(w.1).min(w.2);
                        if min_w >= -1e-9 {
                            return self.interpolate_in(t, w);
                        }
                        if best.map_or(true, |(bw, _, _)| min_w > bw) {
                            best = Some((min_w, t, w));
                        }
                    }
                }
            }
            if let Some((bw, _, _)) = best {
                if bw >= -1e-6 {
                    break;
                }
            }
        }
        let (_, t, w) = best.unwrap_or_else(|| {
            // Outside the binned neighborhood entirely: scan everything.
            let mut fallback = (f64::NEG_INFINITY, 0, (0.0, 0.0, 0.0));
            for t in 0..self.mesh.n_triangles() {
                let w = self.barycentric(t, p);
                let min_w = w.0.min(w.1).min(w.2);
                if min_w > fallback.0 {
                    fallback = (min_w, t, w);
                }
            }
            fallback
        });
        let clamped = (w.0.max(0.0), w.1.max(0.0), w.2.max(0.0));
        let sum = clamped.0 + clamped.1 + clamped.2;
        self.interpolate_in(t, (clamped.0 / sum, clamped.1 / sum, clamped.2 / sum))
    }
}
