//! Domain geometry and triangulation.
//!
//! The domain is an ellipse with an optional circular hole (the impermeable
//! nucleus). Meshes are produced by a deterministic force-equilibration
//! scheme: points start on a hexagonal lattice, are relaxed by spring forces
//! along Delaunay edges, and are projected back onto the analytic boundary
//! curves whenever they drift outside. No randomness is involved, so equal
//! specs yield bitwise-equal meshes.

use crate::geometry::{dist, norm, sub, Ellipse, Vec2};
use delaunator::{triangulate, Point};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),
    #[error("mesh quality gate failed: {0}")]
    Quality(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mesh topology invalid: {0}")]
    Topology(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    Outer,
    Nucleus,
}

/// Oriented boundary edge; the domain lies to its left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, Copy)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    /// Longest edge over inradius diameter; sqrt(3) for equilateral.
    pub max_aspect: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh2D {
    pub vertices: Vec<Vec2>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub quality: MeshQuality,
}

/// Elliptical domain with an optional circular hole.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DomainSpec {
    pub semi_major: f64,
    pub semi_minor: f64,
    pub nucleus_center: Vec2,
    /// Zero disables the hole.
    pub nucleus_radius: f64,
    pub target_h: f64,
    /// Surface nodes per outer boundary mesh node.
    pub gamma_refine: usize,
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec {
            semi_major: 1.2,
            semi_minor: 0.8,
            nucleus_center: [0.2, 0.0],
            nucleus_radius: 0.4,
            target_h: 0.05,
            gamma_refine: 4,
        }
    }
}

impl DomainSpec {
    pub fn ellipse(&self) -> Ellipse {
        Ellipse { a: self.semi_major, b: self.semi_minor }
    }

    pub fn has_nucleus(&self) -> bool {
        self.nucleus_radius > 0.0
    }

    /// Signed distance to the domain: negative inside, positive outside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        let d_ell = self.ellipse().signed_distance(p);
        if self.has_nucleus() {
            let d_nuc = self.nucleus_radius - dist(p, self.nucleus_center);
            d_ell.max(d_nuc)
        } else {
            d_ell
        }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if !(self.semi_major > 0.0 && self.semi_minor > 0.0) {
            return Err(MeshError::InvalidSpec("semi-axes must be positive".into()));
        }
        if !(self.target_h > 0.0) {
            return Err(MeshError::InvalidSpec("target_h must be positive".into()));
        }
        if self.gamma_refine < 1 {
            return Err(MeshError::InvalidSpec("gamma_refine must be >= 1".into()));
        }
        if self.nucleus_radius < 0.0 {
            return Err(MeshError::InvalidSpec("nucleus_radius must be >= 0".into()));
        }
        if self.has_nucleus() {
            let ell = self.ellipse();
            let mut clearance = f64::INFINITY;
            let n = 4096;
            for i in 0..n {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                let gap = dist(ell.point(t), self.nucleus_center) - self.nucleus_radius;
                clearance = clearance.min(gap);
            }
            if clearance < self.target_h {
                return Err(MeshError::InvalidSpec(format!(
                    "nucleus clearance {clearance:.4} below target_h {:.4}",
                    self.target_h
                )));
            }
        }
        Ok(())
    }
}

/// Quadratic discretization of the outer boundary curve: a closed polygon of
/// `nodes` with one chord `midpoint` per segment, plus arclength coordinates
/// and analytic unit tangents at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    /// Counterclockwise, on the analytic ellipse.
    pub nodes: Vec<Vec2>,
    /// Chord midpoint of segment i = (node i, node i+1 mod n).
    pub midpoints: Vec<Vec2>,
    /// Cumulative polygon arclength at each node, starting at zero.
    pub arclength: Vec<f64>,
    /// Unit tangent of the analytic curve at each node, counterclockwise.
    pub tangents: Vec<Vec2>,
    /// Polygon perimeter.
    pub total_length: f64,
}

const RELAX_DT: f64 = 0.2;
const FORCE_SCALE: f64 = 1.2;
const MOVE_TOL: f64 = 0.002;
const RETRI_TOL: f64 = 0.1;
const MAX_RELAX_ITERS: usize = 500;

pub fn generate_mesh(spec: &DomainSpec) -> Result<Mesh2D, MeshError> {
    spec.validate()?;
    let h0 = spec.target_h;
    let geps = 1e-3 * h0;

    let mut pts = hex_lattice(spec, h0, geps);
    if pts.len() < 16 {
        return Err(MeshError::InvalidSpec("target_h too coarse for the domain".into()));
    }

    let mut edges = unique_edges(&interior_triangles(&pts, spec, geps));
    let mut last_retri = pts.clone();
    let mut need_retri = false;
    for _ in 0..MAX_RELAX_ITERS {
        if need_retri {
            edges = unique_edges(&interior_triangles(&pts, spec, geps));
            last_retri = pts.clone();
            need_retri = false;
        }

        let mut mean_sq = 0.0;
        let bars: Vec<(f64, Vec2)> = edges
            .iter()
            .map(|&(i, j)| {
                let d = sub(pts[i], pts[j]);
                let len = norm(d);
                mean_sq += len * len;
                (len, d)
            })
            .collect();
        mean_sq /= edges.len() as f64;
        let l0 = FORCE_SCALE * mean_sq.sqrt();

        let mut force = vec![[0.0f64; 2]; pts.len()];
        for (&(i, j), &(len, d)) in edges.iter().zip(&bars) {
            let f = (l0 - len).max(0.0) / len;
            force[i][0] += f * d[0];
            force[i][1] += f * d[1];
            force[j][0] -= f * d[0];
            force[j][1] -= f * d[1];
        }

        let mut interior_move: f64 = 0.0;
        for (p, f) in pts.iter_mut().zip(&force) {
            let step = [RELAX_DT * f[0], RELAX_DT * f[1]];
            p[0] += step[0];
            p[1] += step[1];
            let s = spec.signed_distance(*p);
            if s > 0.0 {
                *p = project_to_boundary(spec, *p);
            } else if s < -geps {
                interior_move = interior_move.max(norm(step));
            }
        }
        if interior_move < MOVE_TOL * h0 {
            break;
        }
        let drift = pts
            .iter()
            .zip(&last_retri)
            .map(|(p, q)| dist(*p, *q))
            .fold(0.0f64, f64::max);
        if drift > RETRI_TOL * h0 {
            need_retri = true;
        }
    }

    let tris = interior_triangles(&pts, spec, geps);
    finalize_mesh(pts, tris, spec, h0)
}

fn hex_lattice(spec: &DomainSpec, h0: f64, geps: f64) -> Vec<Vec2> {
    let a = spec.semi_major;
    let b = spec.semi_minor;
    let dy = h0 * 3.0f64.sqrt() / 2.0;
    let mut pts = Vec::new();
    let mut row = 0i64;
    let mut y = -b;
    while y <= b + dy {
        let shift = if row % 2 == 0 { 0.0 } else { 0.5 * h0 };
        let mut x = -a + shift;
        while x <= a + h0 {
            if spec.signed_distance([x, y]) < geps {
                pts.push([x, y]);
            }
            x += h0;
        }
        row += 1;
        y = -b + row as f64 * dy;
    }
    pts
}

fn project_to_boundary(spec: &DomainSpec, p: Vec2) -> Vec2 {
    let d_ell = spec.ellipse().signed_distance(p);
    let d_nuc = if spec.has_nucleus() {
        spec.nucleus_radius - dist(p, spec.nucleus_center)
    } else {
        f64::NEG_INFINITY
    };
    if d_ell >= d_nuc {
        spec.ellipse().project(p)
    } else {
        let c = spec.nucleus_center;
        let r = sub(p, c);
        let len = norm(r);
        if len == 0.0 {
            return [c[0] + spec.nucleus_radius, c[1]];
        }
        let s = spec.nucleus_radius / len;
        [c[0] + s * r[0], c[1] + s * r[1]]
    }
}

fn interior_triangles(pts: &[Vec2], spec: &DomainSpec, geps: f64) -> Vec<[usize; 3]> {
    let dpts: Vec<Point> = pts.iter().map(|p| Point { x: p[0], y: p[1] }).collect();
    let tri = triangulate(&dpts);
    let mut out = Vec::new();
    for t in tri.triangles.chunks_exact(3) {
        let (i, j, k) = (t[0], t[1], t[2]);
        let c = [
            (pts[i][0] + pts[j][0] + pts[k][0]) / 3.0,
            (pts[i][1] + pts[j][1] + pts[k][1]) / 3.0,
        ];
        if spec.signed_distance(c) < -geps {
            if signed_area(pts[i], pts[j], pts[k]) > 0.0 {
                out.push([i, j, k]);
            } else {
                out.push([i, k, j]);
            }
        }
    }
    out
}

fn unique_edges(tris: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = tris
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .map(|(i, j)| (i.min(j), i.max(j)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

fn signed_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn finalize_mesh(
    pts: Vec<Vec2>,
    tris: Vec<[usize; 3]>,
    spec: &DomainSpec,
    h0: f64,
) -> Result<Mesh2D, MeshError> {
    // Drop unused points and reindex.
    let mut new_id = vec![usize::MAX; pts.len()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::with_capacity(tris.len());
    for t in &tris {
        let mut mapped = [0usize; 3];
        for (slot, &v) in mapped.iter_mut().zip(t) {
            if new_id[v] == usize::MAX {
                new_id[v] = vertices.len();
                vertices.push(pts[v]);
            }
            *slot = new_id[v];
        }
        triangles.push(mapped);
    }

    // Snap boundary vertices exactly onto the nearer analytic curve.
    let boundary_pairs = one_sided_edges(&triangles)?;
    let mut on_boundary = vec![false; vertices.len()];
    for &(a, b) in &boundary_pairs {
        on_boundary[a] = true;
        on_boundary[b] = true;
    }
    for (v, flag) in on_boundary.iter().enumerate() {
        if *flag {
            vertices[v] = project_to_boundary(spec, vertices[v]);
        }
    }
    for t in &triangles {
        if signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) <= 0.0 {
            return Err(MeshError::Quality(
                "boundary snapping degenerated a triangle; decrease target_h".into(),
            ));
        }
    }

    let boundary_edges = tag_boundary_loops(&vertices, &boundary_pairs, spec)?;
    let quality = quality_stats(&vertices, &triangles);
    if quality.min_angle_deg < 20.0 {
        return Err(MeshError::Quality(format!(
            "min angle {:.2} deg below 20",
            quality.min_angle_deg
        )));
    }
    let max_edge = triangles
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .map(|(i, j)| dist(vertices[i], vertices[j]))
        .fold(0.0f64, f64::max);
    if max_edge > 1.5 * h0 {
        return Err(MeshError::Quality(format!(
            "max edge {max_edge:.4} exceeds 1.5 * target_h = {:.4}",
            1.5 * h0
        )));
    }

    let mesh = Mesh2D { vertices, triangles, boundary_edges, quality };
    validate_mesh(&mesh)?;
    Ok(mesh)
}

/// Oriented edges owned by exactly one triangle, domain on the left.
fn one_sided_edges(triangles: &[[usize; 3]]) -> Result<Vec<(usize, usize)>, MeshError> {
    let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for t in triangles {
        for (i, j) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *count.entry((i.min(j), i.max(j))).or_insert(0) += 1;
        }
    }
    if let Some((e, c)) = count.iter().find(|(_, &c)| c > 2) {
        return Err(MeshError::Topology(format!("edge {e:?} shared by {c} triangles")));
    }
    let mut out = Vec::new();
    for t in triangles {
        for (i, j) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            if count[&(i.min(j), i.max(j))] == 1 {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

fn tag_boundary_loops(
    vertices: &[Vec2],
    oriented: &[(usize, usize)],
    spec: &DomainSpec,
) -> Result<Vec<BoundaryEdge>, MeshError> {
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for &(a, b) in oriented {
        if next.insert(a, b).is_some() {
            return Err(MeshError::Topology(format!("vertex {a} has two outgoing boundary edges")));
        }
    }
    let mut visited: BTreeMap<usize, bool> = oriented.iter().map(|&(a, _)| (a, false)).collect();
    let mut loops: Vec<Vec<usize>> = Vec::new();
    for &(start, _) in oriented {
        if visited[&start] {
            continue;
        }
        let mut cycle = vec![start];
        visited.insert(start, true);
        let mut cur = next[&start];
        while cur != start {
            let seen = visited.insert(cur, true);
            if seen != Some(false) {
                return Err(MeshError::Topology("boundary loop does not close".into()));
            }
            cycle.push(cur);
            cur = *next
                .get(&cur)
                .ok_or_else(|| MeshError::Topology("dangling boundary edge".into()))?;
        }
        loops.push(cycle);
    }

    let expected = if spec.has_nucleus() { 2 } else { 1 };
    if loops.len() != expected {
        return Err(MeshError::Topology(format!(
            "expected {expected} boundary loop(s), found {}",
            loops.len()
        )));
    }

    let mut edges = Vec::new();
    let mut n_outer = 0;
    for cycle in &loops {
        let mean_ell: f64 = cycle
            .iter()
            .map(|&v| spec.ellipse().signed_distance(vertices[v]).abs())
            .sum::<f64>()
            / cycle.len() as f64;
        let mean_nuc: f64 = if spec.has_nucleus() {
            cycle
                .iter()
                .map(|&v| (dist(vertices[v], spec.nucleus_center) - spec.nucleus_radius).abs())
                .sum::<f64>()
                / cycle.len() as f64
        } else {
            f64::INFINITY
        };
        let tag = if mean_ell <= mean_nuc { BoundaryTag::Outer } else { BoundaryTag::Nucleus };
        if tag == BoundaryTag::Outer {
            n_outer += 1;
        }
        for (k, &a) in cycle.iter().enumerate() {
            edges.push(BoundaryEdge { a, b: cycle[(k + 1) % cycle.len()], tag });
        }
    }
    if n_outer != 1 {
        return Err(MeshError::Topology(format!("expected exactly 1 outer loop, found {n_outer}")));
    }
    Ok(edges)
}

fn quality_stats(vertices: &[Vec2], triangles: &[[usize; 3]]) -> MeshQuality {
    let mut min_angle = f64::INFINITY;
    let mut max_aspect: f64 = 0.0;
    for t in triangles {
        let p = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
        let l = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
        let area = signed_area(p[0], p[1], p[2]).abs();
        for i in 0..3 {
            let (a, b, c) = (l[i], l[(i + 1) % 3], l[(i + 2) % 3]);
            let cos = ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0);
            min_angle = min_angle.min(cos.acos().to_degrees());
        }
        let s = 0.5 * (l[0] + l[1] + l[2]);
        let inradius = area / s;
        max_aspect = max_aspect.max(l.iter().cloned().fold(0.0, f64::max) / (2.0 * inradius));
    }
    MeshQuality { min_angle_deg: min_angle, max_aspect }
}

/// Checks the structural invariants: index bounds, positive areas, edge
/// sharing, and that the tagged boundary matches the triangulation's actual
/// boundary.
pub fn validate_mesh(mesh: &Mesh2D) -> Result<(), MeshError> {
    let nv = mesh.vertices.len();
    for (ti, t) in mesh.triangles.iter().enumerate() {
        for &v in t {
            if v >= nv {
                return Err(MeshError::Topology(format!(
                    "triangle {ti} references missing vertex {v}"
                )));
            }
        }
        if signed_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]) <= 0.0 {
            return Err(MeshError::Topology(format!("triangle {ti} has non-positive area")));
        }
    }
    let actual = one_sided_edges(&mesh.triangles)?;
    let mut actual_sorted: Vec<(usize, usize)> =
        actual.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    actual_sorted.sort_unstable();
    let mut tagged: Vec<(usize, usize)> = mesh
        .boundary_edges
        .iter()
        .map(|e| (e.a.min(e.b), e.a.max(e.b)))
        .collect();
    tagged.sort_unstable();
    if actual_sorted != tagged {
        return Err(MeshError::Topology(
            "tagged boundary edges do not match the triangulation boundary".into(),
        ));
    }
    Ok(())
}

/// V - E + F: zero for an annulus, one for a disk-like domain.
pub fn euler_characteristic(mesh: &Mesh2D) -> i64 {
    let e = unique_edges(&mesh.triangles).len() as i64;
    mesh.vertices.len() as i64 - e + mesh.triangles.len() as i64
}

/// Ordered counterclockwise outer-loop vertex indices.
pub fn outer_loop(mesh: &Mesh2D) -> Result<Vec<usize>, MeshError> {
    let outer: Vec<&BoundaryEdge> = mesh
        .boundary_edges
        .iter()
        .filter(|e| e.tag == BoundaryTag::Outer)
        .collect();
    if outer.is_empty() {
        return Err(MeshError::Topology("mesh has no outer boundary loop".into()));
    }
    let next: BTreeMap<usize, usize> = outer.iter().map(|e| (e.a, e.b)).collect();
    let start = outer[0].a;
    let mut cycle = vec![start];
    let mut cur = next[&start];
    while cur != start {
        cycle.push(cur);
        cur = *next
            .get(&cur)
            .ok_or_else(|| MeshError::Topology("outer loop does not close".into()))?;
        if cycle.len() > next.len() {
            return Err(MeshError::Topology("outer loop does not close".into()));
        }
    }
    let area: f64 = cycle
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let p = mesh.vertices[i];
            let q = mesh.vertices[cycle[(k + 1) % cycle.len()]];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    if area < 0.0 {
        cycle.reverse();
    }
    Ok(cycle)
}

/// Refines the outer loop onto the analytic ellipse: each mesh boundary edge
/// becomes `gamma_refine` equal parameter intervals, nodes exactly on the
/// curve. Deterministic in the input.
pub fn extract_surface(mesh: &Mesh2D, spec: &DomainSpec) -> Result<SurfaceMesh, MeshError> {
    let ell = spec.ellipse();
    let loop_ids = outer_loop(mesh)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let params: Vec<f64> = loop_ids.iter().map(|&v| ell.param_of(mesh.vertices[v])).collect();

    let mut nodes = Vec::with_capacity(loop_ids.len() * spec.gamma_refine);
    let mut tangents = Vec::with_capacity(nodes.capacity());
    for (k, &t0) in params.iter().enumerate() {
        let t1 = params[(k + 1) % params.len()];
        let mut dt = (t1 - t0).rem_euclid(two_pi);
        if dt == 0.0 {
            dt = two_pi;
        }
        for s in 0..spec.gamma_refine {
            let t = t0 + dt * s as f64 / spec.gamma_refine as f64;
            nodes.push(ell.point(t));
            tangents.push(ell.tangent(t));
        }
    }

    let n = nodes.len();
    let mut arclength = Vec::with_capacity(n);
    let mut midpoints = Vec::with_capacity(n);
    let mut acc = 0.0;
    for i in 0..n {
        arclength.push(acc);
        let a = nodes[i];
        let b = nodes[(i + 1) % n];
        midpoints.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
        acc += dist(a, b);
    }
    Ok(SurfaceMesh { nodes, midpoints, arclength, tangents, total_length: acc })
}

pub fn save_mesh(mesh: &Mesh2D, path: &Path) -> Result<(), MeshError> {
    let mut out = String::new();
    out.push_str("blebsim-mesh v1\n");
    let _ = writeln!(out, "vertices {}", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{:.17e} {:.17e}", v[0], v[1]);
    }
    let _ = writeln!(out, "triangles {}", mesh.triangles.len());
    for t in &mesh.triangles {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "boundary {}", mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let tag = match e.tag {
            BoundaryTag::Outer => "OUTER",
            BoundaryTag::Nucleus => "NUCLEUS",
        };
        let _ = writeln!(out, "{} {} {}", e.a, e.b, tag);
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_mesh(path: &Path) -> Result<Mesh2D, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

pub fn parse_mesh(text: &str) -> Result<Mesh2D, MeshError> {
    // Meaningful lines with their 1-based file line numbers.
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut take = |what: &str| -> Result<(usize, &str), MeshError> {
        lines
            .next()
            .ok_or_else(|| MeshError::Parse { line: 0, message: format!("missing {what}") })
    };

    let (ln, header) = take("header")?;
    if header != "blebsim-mesh v1" {
        return Err(MeshError::Parse { line: ln, message: "expected header 'blebsim-mesh v1'".into() });
    }

    let section = |line: usize, text: &str, name: &str| -> Result<usize, MeshError> {
        let mut it = text.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(k), Some(n), None) if k == name => n.parse().map_err(|_| MeshError::Parse {
                line,
                message: format!("bad {name} count '{n}'"),
            }),
            _ => Err(MeshError::Parse { line, message: format!("expected '{name} N'") }),
        }
    };

    let (ln, l) = take("vertices section")?;
    let nv = section(ln, l, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = take("vertex line")?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(MeshError::Parse { line: ln, message: "expected 'x y'".into() });
        }
        let x = parts[0].parse().map_err(|_| MeshError::Parse { line: ln, message: format!("bad number '{}'", parts[0]) })?;
        let y = parts[1].parse().map_err(|_| MeshError::Parse { line: ln, message: format!("bad number '{}'", parts[1]) })?;
        vertices.push([x, y]);
    }

    let (ln, l) = take("triangles section")?;
    let nt = section(ln, l, "triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = take("triangle line")?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(MeshError::Parse { line: ln, message: "expected 'i j k'".into() });
        }
        let mut t = [0usize; 3];
        for (slot, p) in t.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| MeshError::Parse { line: ln, message: format!("bad index '{p}'") })?;
        }
        triangles.push(t);
    }

    let (ln, l) = take("boundary section")?;
    let nb = section(ln, l, "boundary")?;
    let mut boundary_edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, l) = take("boundary line")?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(MeshError::Parse { line: ln, message: "expected 'i j TAG'".into() });
        }
        let a = parts[0].parse().map_err(|_| MeshError::Parse { line: ln, message: format!("bad index '{}'", parts[0]) })?;
        let b = parts[1].parse().map_err(|_| MeshError::Parse { line: ln, message: format!("bad index '{}'", parts[1]) })?;
        let tag = match parts[2] {
            "OUTER" => BoundaryTag::Outer,
            "NUCLEUS" => BoundaryTag::Nucleus,
            other => {
                return Err(MeshError::Parse { line: ln, message: format!("unknown tag '{other}'") })
            }
        };
        boundary_edges.push(BoundaryEdge { a, b, tag });
    }

    if let Some((ln, _)) = lines.next() {
        return Err(MeshError::Parse { line: ln, message: "trailing content".into() });
    }

    let mut mesh = Mesh2D {
        vertices,
        triangles,
        boundary_edges,
        quality: MeshQuality { min_angle_deg: 0.0, max_aspect: 0.0 },
    };
    validate_mesh(&mesh)?;
    mesh.quality = quality_stats(&mesh.vertices, &mesh.triangles);
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dot;

    #[test]
    fn default_spec_meshes_with_two_loops() {
        let spec = DomainSpec::default();
        let mesh = generate_mesh(&spec).unwrap();
        assert_eq!(euler_characteristic(&mesh), 0);
        let outer = mesh.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Outer).count();
        let nucleus = mesh.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Nucleus).count();
        assert!(outer > 0 && nucleus > 0);
        for v in &mesh.vertices {
            assert!(spec.ellipse().signed_distance(*v) <= 1e-9, "vertex outside ellipse");
        }
        assert!(mesh.quality.min_angle_deg >= 20.0);
    }

    #[test]
    fn no_nucleus_gives_single_loop() {
        let spec = DomainSpec {
            nucleus_radius: 0.0,
            target_h: 0.1,
            ..DomainSpec::default()
        };
        let mesh = generate_mesh(&spec).unwrap();
        assert_eq!(euler_characteristic(&mesh), 1);
        assert!(mesh.boundary_edges.iter().all(|e| e.tag == BoundaryTag::Outer));
    }

    #[test]
    fn unit_disc_area_close_to_pi() {
        let spec = DomainSpec {
            semi_major: 1.0,
            semi_minor: 1.0,
            nucleus_radius: 0.0,
            target_h: 0.1,
            ..DomainSpec::default()
        };
        let mesh = generate_mesh(&spec).unwrap();
        let area: f64 = mesh
            .triangles
            .iter()
            .map(|t| signed_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]))
            .sum();
        assert!((area - std::f64::consts::PI).abs() < 0.02 * std::f64::consts::PI, "area {area}");
    }

    #[test]
    fn clearance_violation_rejected() {
        let spec = DomainSpec {
            nucleus_center: [0.9, 0.0],
            nucleus_radius: 0.4,
            ..DomainSpec::default()
        };
        assert!(matches!(generate_mesh(&spec), Err(MeshError::InvalidSpec(_))));
    }

    #[test]
    fn surface_counts_and_tangent() {
        let spec = DomainSpec::default();
        let mesh = generate_mesh(&spec).unwrap();
        let n_outer = mesh.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Outer).count();
        let surf = extract_surface(&mesh, &spec).unwrap();
        assert_eq!(surf.nodes.len(), n_outer * spec.gamma_refine);
        let ell = spec.ellipse();
        for p in &surf.nodes {
            assert!(ell.signed_distance(*p).abs() < 1e-12);
        }
        // Tangent at the rightmost point is vertical.
        let (i, _) = surf
            .nodes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1[0].total_cmp(&b.1[0]))
            .unwrap();
        if (surf.nodes[i][0] - spec.semi_major).abs() < 1e-9 && surf.nodes[i][1].abs() < 1e-9 {
            assert!((surf.tangents[i][0]).abs() < 1e-6 && (surf.tangents[i][1] - 1.0).abs() < 1e-6);
        }
        // Closed-loop arclength bookkeeping.
        let mut perim = 0.0;
        for k in 0..surf.nodes.len() {
            perim += dist(surf.nodes[k], surf.nodes[(k + 1) % surf.nodes.len()]);
        }
        assert!((perim - surf.total_length).abs() <= 1e-12 * perim);
        // Counterclockwise ordering: tangents align with node differences.
        for k in 0..surf.nodes.len() {
            let d = sub(surf.nodes[(k + 1) % surf.nodes.len()], surf.nodes[k]);
            assert!(dot(d, surf.tangents[k]) > 0.0);
        }
    }

    #[test]
    fn circle_surface_arclength_near_two_pi() {
        let spec = DomainSpec {
            semi_major: 1.0,
            semi_minor: 1.0,
            nucleus_radius: 0.0,
            target_h: 0.05,
            gamma_refine: 16,
            ..DomainSpec::default()
        };
        let mesh = generate_mesh(&spec).unwrap();
        let surf = extract_surface(&mesh, &spec).unwrap();
        assert!(surf.nodes.len() >= 1000);
        assert!((surf.total_length - 2.0 * std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn save_load_round_trip() {
        let spec = DomainSpec { target_h: 0.1, ..DomainSpec::default() };
        let mesh = generate_mesh(&spec).unwrap();
        let dir = std::env::temp_dir().join("blebsim-mesh-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("round_trip.mesh");
        save_mesh(&mesh, &path).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(mesh.triangles, back.triangles);
        assert_eq!(mesh.boundary_edges, back.boundary_edges);
        for (a, b) in mesh.vertices.iter().zip(&back.vertices) {
            assert!((a[0] - b[0]).abs() <= 1e-15 && (a[1] - b[1]).abs() <= 1e-15);
        }
    }

    #[test]
    fn parse_rejects_bad_inputs() {
        assert!(matches!(parse_mesh(""), Err(MeshError::Parse { .. })));
        let missing_vertex = "blebsim-mesh v1\nvertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 5\nboundary 0\n";
        assert!(matches!(parse_mesh(missing_vertex), Err(MeshError::Topology(_))));
        let bad_header = "blebsim-mesh v2\nvertices 0\ntriangles 0\nboundary 0\n";
        assert!(matches!(parse_mesh(bad_header), Err(MeshError::Parse { line: 1, .. })));
    }

    #[test]
    fn determinism() {
        let spec = DomainSpec { target_h: 0.1, ..DomainSpec::default() };
        let m1 = generate_mesh(&spec).unwrap();
        let m2 = generate_mesh(&spec).unwrap();
        assert_eq!(m1.vertices, m2.vertices);
        assert_eq!(m1.triangles, m2.triangles);
        let s1 = extract_surface(&m1, &spec).unwrap();
        let s2 = extract_surface(&m2, &spec).unwrap();
        assert_eq!(s1, s2);
    }
}
