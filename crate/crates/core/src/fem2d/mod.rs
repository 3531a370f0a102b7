//! Finite element spaces, quadrature, and matrix assembly.
//!
//! Bulk fields live on triangle meshes: continuous P1 for pressure, continuous
//! P2 (per component) for velocity, the classical inf-sup stable pairing on
//! triangles. Surface fields live on the closed boundary polygon as continuous
//! P2 in the segment arclength parameterization. Quadrature rules are exact
//! for every polynomial integrand assembled here: a degree-4 rule on triangles
//! and a 3-point Gauss rule (degree 5) on segments.

pub mod solve;
pub mod sparse;

pub use solve::{
    solve_bicgstab, solve_general, solve_spd, DenseLu, NullSpace, SolveStats, SolverError,
    DENSE_FALLBACK_LIMIT,
};
pub use sparse::{CsrMatrix, TripletBuilder};

use crate::geometry::{dist, Vec2};
use crate::mesh::{Mesh2D, SurfaceMesh};
use std::collections::BTreeMap;

/// Degree-4 quadrature on the reference triangle: (l0, l1, l2, weight) with
/// weights summing to one; multiply by the physical area.
pub const TRI_QUAD: [(f64, f64, f64, f64); 6] = [
    (0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011),
    (0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011),
    (0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011),
    (0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322),
    (0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322),
    (0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322),
];

/// 3-point Gauss rule on [0, 1]: (xi, weight), weights summing to one.
pub const SEG_QUAD: [(f64, f64); 3] = [
    (0.11270166537925831, 0.2777777777777778),
    (0.5, 0.4444444444444444),
    (0.8872983346207417, 0.2777777777777778),
];

/// P1 shape values at barycentric coordinates.
pub fn p1_values(l: [f64; 3]) -> [f64; 3] {
    l
}

/// P2 shape values at barycentric coordinates; dofs are the three vertices
/// followed by the midpoints of edges (0-1), (1-2), (2-0).
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Reference-coordinate gradients of P1 shapes (constant).
pub const P1_REF_GRADS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Reference-coordinate gradients of P2 shapes at barycentric coordinates.
pub fn p2_ref_grads(l: [f64; 3]) -> [[f64; 2]; 6] {
    let d = |i: usize| P1_REF_GRADS[i];
    let mut g = [[0.0; 2]; 6];
    for i in 0..3 {
        for c in 0..2 {
            g[i][c] = (4.0 * l[i] - 1.0) * d(i)[c];
        }
    }
    let pairs = [(0, 1), (1, 2), (2, 0)];
    for (k, (i, j)) in pairs.iter().enumerate() {
        for c in 0..2 {
            g[3 + k][c] = 4.0 * (l[*i] * d(*j)[c] + l[*j] * d(*i)[c]);
        }
    }
    g
}

/// Quadratic shape values on the reference segment [0, 1]; dofs are
/// (left corner, right corner, midpoint).
pub fn seg_values(xi: f64) -> [f64; 3] {
    [(1.0 - xi) * (1.0 - 2.0 * xi), xi * (2.0 * xi - 1.0), 4.0 * xi * (1.0 - xi)]
}

/// Derivatives of the quadratic segment shapes with respect to xi.
pub fn seg_derivs(xi: f64) -> [f64; 3] {
    [4.0 * xi - 3.0, 4.0 * xi - 1.0, 4.0 - 8.0 * xi]
}

/// Scalar finite element space on a triangle mesh (P1 or P2).
pub struct FeSpace2d {
    pub order: u8,
    pub n_dofs: usize,
    pub dofs_per_elem: usize,
    /// Element connectivity; P1 uses the first three slots.
    pub elem_dofs: Vec<[usize; 6]>,
    pub dof_coords: Vec<Vec2>,
    /// Edge-midpoint dof ids keyed by sorted vertex pair (P2 only).
    pub edge_dofs: BTreeMap<(usize, usize), usize>,
}

pub fn p1_space(mesh: &Mesh2D) -> FeSpace2d {
    let elem_dofs = mesh
        .triangles
        .iter()
        .map(|t| [t[0], t[1], t[2], usize::MAX, usize::MAX, usize::MAX])
        .collect();
    FeSpace2d {
        order: 1,
        n_dofs: mesh.vertices.len(),
        dofs_per_elem: 3,
        elem_dofs,
        dof_coords: mesh.vertices.clone(),
        edge_dofs: BTreeMap::new(),
    }
}

pub fn p2_space(mesh: &Mesh2D) -> FeSpace2d {
    let nv = mesh.vertices.len();
    let mut edge_dofs = BTreeMap::new();
    let mut dof_coords = mesh.vertices.clone();
    let mut elem_dofs = Vec::with_capacity(mesh.triangles.len());
    for t in &mesh.triangles {
        let mut dofs = [t[0], t[1], t[2], 0, 0, 0];
        for (k, (i, j)) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])].iter().enumerate() {
            let key = (*i.min(j), *i.max(j));
            let next_id = nv + edge_dofs.len();
            let id = *edge_dofs.entry(key).or_insert(next_id);
            if id == next_id && id == dof_coords.len() {
                let a = mesh.vertices[key.0];
                let b = mesh.vertices[key.1];
                dof_coords.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            }
            dofs[3 + k] = id;
        }
        elem_dofs.push(dofs);
    }
    FeSpace2d {
        order: 2,
        n_dofs: dof_coords.len(),
        dofs_per_elem: 6,
        elem_dofs,
        dof_coords,
        edge_dofs,
    }
}

struct ElemGeom {
    area: f64,
    /// Inverse-transpose Jacobian columns for mapping reference gradients.
    inv_t: [[f64; 2]; 2],
    v: [Vec2; 3],
}

fn elem_geom(mesh: &Mesh2D, t: usize) -> ElemGeom {
    let [i, j, k] = mesh.triangles[t];
    let v = [mesh.vertices[i], mesh.vertices[j], mesh.vertices[k]];
    let j11 = v[1][0] - v[0][0];
    let j21 = v[1][1] - v[0][1];
    let j12 = v[2][0] - v[0][0];
    let j22 = v[2][1] - v[0][1];
    let det = j11 * j22 - j12 * j21;
    let inv_t = [[j22 / det, -j21 / det], [-j12 / det, j11 / det]];
    ElemGeom { area: 0.5 * det.abs(), inv_t, v }
}

fn phys_grad(g: &ElemGeom, rg: [f64; 2]) -> [f64; 2] {
    [g.inv_t[0][0] * rg[0] + g.inv_t[0][1] * rg[1], g.inv_t[1][0] * rg[0] + g.inv_t[1][1] * rg[1]]
}

fn quad_point(g: &ElemGeom, l: [f64; 3]) -> Vec2 {
    [
        l[0] * g.v[0][0] + l[1] * g.v[1][0] + l[2] * g.v[2][0],
        l[0] * g.v[0][1] + l[1] * g.v[1][1] + l[2] * g.v[2][1],
    ]
}

fn shape_values(order: u8, l: [f64; 3]) -> ([f64; 6], usize) {
    if order == 1 {
        let v = p1_values(l);
        ([v[0], v[1], v[2], 0.0, 0.0, 0.0], 3)
    } else {
        (p2_values(l), 6)
    }
}

fn shape_grads(order: u8, l: [f64; 3]) -> ([[f64; 2]; 6], usize) {
    if order == 1 {
        let mut g = [[0.0; 2]; 6];
        g[..3].copy_from_slice(&P1_REF_GRADS);
        (g, 3)
    } else {
        (p2_ref_grads(l), 6)
    }
}

/// Mass matrix, optionally weighted by a scalar field evaluated pointwise at
/// the quadrature points.
pub fn mass_matrix(
    mesh: &Mesh2D,
    space: &FeSpace2d,
    weight: Option<&dyn Fn(Vec2) -> f64>,
) -> CsrMatrix {
    let mut tb = TripletBuilder::new(space.n_dofs, space.n_dofs);
    for t in 0..mesh.triangles.len() {
        let g = elem_geom(mesh, t);
        let dofs = &space.elem_dofs[t];
        for &(l0, l1, l2, w) in &TRI_QUAD {
            let l = [l0, l1, l2];
            let (vals, nd) = shape_values(space.order, l);
            let wq = w * g.area * weight.map_or(1.0, |f| f(quad_point(&g, l)));
            for i in 0..nd {
                for j in 0..nd {
                    tb.push(dofs[i], dofs[j], wq * vals[i] * vals[j]);
                }
            }
        }
    }
    tb.build()
}

/// Stiffness matrix (grad-grad form).
pub fn stiffness_matrix(mesh: &Mesh2D, space: &FeSpace2d) -> CsrMatrix {
    let mut tb = TripletBuilder::new(space.n_dofs, space.n_dofs);
    for t in 0..mesh.triangles.len() {
        let g = elem_geom(mesh, t);
        let dofs = &space.elem_dofs[t];
        for &(l0, l1, l2, w) in &TRI_QUAD {
            let (rg, nd) = shape_grads(space.order, [l0, l1, l2]);
            let wq = w * g.area;
            let grads: Vec<[f64; 2]> = (0..nd).map(|i| phys_grad(&g, rg[i])).collect();
            for i in 0..nd {
                for j in 0..nd {
                    tb.push(dofs[i], dofs[j], wq * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]));
                }
            }
        }
    }
    tb.build()
}

/// Mixed divergence matrix B of shape (2 * velocity dofs) x (pressure dofs):
/// for stacked velocity coefficients q and pressure coefficients p,
/// q^T B p equals the integral of p * div(q) over the mesh. The first
/// `velocity.n_dofs` rows belong to the x component, the rest to y.
pub fn mixed_matrix(mesh: &Mesh2D, velocity: &FeSpace2d, pressure: &FeSpace2d) -> CsrMatrix {
    let nv = velocity.n_dofs;
    let mut tb = TripletBuilder::new(2 * nv, pressure.n_dofs);
    for t in 0..mesh.triangles.len() {
        let g = elem_geom(mesh, t);
        let vd = &velocity.elem_dofs[t];
        let pd = &pressure.elem_dofs[t];
        for &(l0, l1, l2, w) in &TRI_QUAD {
            let l = [l0, l1, l2];
            let (pv, np) = shape_values(pressure.order, l);
            let (rg, nq) = shape_grads(velocity.order, l);
            let wq = w * g.area;
            for i in 0..nq {
                let gi = phys_grad(&g, rg[i]);
                for j in 0..np {
                    tb.push(vd[i], pd[j], wq * gi[0] * pv[j]);
                    tb.push(nv + vd[i], pd[j], wq * gi[1] * pv[j]);
                }
            }
        }
    }
    tb.build()
}

/// Mixed gradient matrix G of shape (2 * velocity dofs) x (pressure dofs):
/// for stacked velocity coefficients q and pressure coefficients p,
/// q^T G p equals the integral of q . grad(p) over the mesh. Unlike
/// `mixed_matrix` the derivative falls on the pressure basis, so G p is the
/// load vector of grad(p_h) against the velocity basis with no boundary
/// term; G and the divergence form differ exactly by the boundary integral
/// of p q.n.
pub fn grad_matrix(mesh: &Mesh2D, velocity: &FeSpace2d, pressure: &FeSpace2d) -> CsrMatrix {
    let nv = velocity.n_dofs;
    let mut tb = TripletBuilder::new(2 * nv, pressure.n_dofs);
    for t in 0..mesh.triangles.len() {
        let g = elem_geom(mesh, t);
        let vd = &velocity.elem_dofs[t];
        let pd = &pressure.elem_dofs[t];
        for &(l0, l1, l2, w) in &TRI_QUAD {
            let l = [l0, l1, l2];
            let (qv, nq) = shape_values(velocity.order, l);
            let (rg, np) = shape_grads(pressure.order, l);
            let wq = w * g.area;
            for j in 0..np {
                let gj = phys_grad(&g, rg[j]);
                for i in 0..nq {
                    tb.push(vd[i], pd[j], wq * qv[i] * gj[0]);
                    tb.push(nv + vd[i], pd[j], wq * qv[i] * gj[1]);
                }
            }
        }
    }
    tb.build()
}

/// Load vector of a scalar field: l_i = integral of f * phi_i.
pub fn load_vector(mesh: &Mesh2D, space: &FeSpace2d, f: &dyn Fn(Vec2) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; space.n_dofs];
    for t in 0..mesh.triangles.len() {
        let g = elem_geom(mesh, t);
        let dofs = &space.elem_dofs[t];
        for &(l0, l1, l2, w) in &TRI_QUAD {
            let l = [l0, l1, l2];
            let (vals, nd) = shape_values(space.order, l);
            let fv = f(quad_point(&g, l));
            for i in 0..nd {
                out[dofs[i]] += w * g.area * fv * vals[i];
            }
        }
    }
    out
}

/// Stacked vector load: l_(c*n + i) = integral of f_c * phi_i, with each
/// triangle uniformly subdivided `levels` times (4^levels congruent children)
/// before quadrature, to resolve sharply peaked integrands.
pub fn vector_load_subdivided(
    mesh: &Mesh2D,
    space: &FeSpace2d,
    f: &dyn Fn(Vec2) -> Vec2,
    levels: u32,
) -> Vec<f64> {
    let n = space.n_dofs;
    let mut out = vec![0.0; 2 * n];
    for t in 0..mesh.triangles.len() {
        let g = elem_geom(mesh, t);
        let dofs = &space.elem_dofs[t];
        for_subtriangles(levels, &mut |corners: [[f64; 3]; 3], frac| {
            for &(q0, q1, q2, w) in &TRI_QUAD {
                let mut l = [0.0; 3];
                for c in 0..3 {
                    l[c] = q0 * corners[0][c] + q1 * corners[1][c] + q2 * corners[2][c];
                }
                let (vals, nd) = shape_values(space.order, l);
                let fv = f(quad_point(&g, l));
                let wq = w * g.area * frac;
                for i in 0..nd {
                    out[dofs[i]] += wq * fv[0] * vals[i];
                    out[n + dofs[i]] += wq * fv[1] * vals[i];
                }
            }
        });
    }
    out
}

/// Gradient load: l_j = integral of f . grad(phi_j), subdivided as above.
pub fn gradient_load_subdivided(
    mesh: &Mesh2D,
    space: &FeSpace2d,
    f: &dyn Fn(Vec2) -> Vec2,
    levels: u32,
) -> Vec<f64> {
    let mut out = vec![0.0; space.n_dofs];
    for t in 0..mesh.triangles.len() {
        let g = elem_geom(mesh, t);
        let dofs = &space.elem_dofs[t];
        for_subtriangles(levels, &mut |corners: [[f64; 3]; 3], frac| {
            for &(q0, q1, q2, w) in &TRI_QUAD {
                let mut l = [0.0; 3];
                for c in 0..3 {
                    l[c] = q0 * corners[0][c] + q1 * corners[1][c] + q2 * corners[2][c];
                }
                let (rg, nd) = shape_grads(space.order, l);
                let fv = f(quad_point(&g, l));
                let wq = w * g.area * frac;
                for j in 0..nd {
                    let gj = phys_grad(&g, rg[j]);
                    out[dofs[j]] += wq * (fv[0] * gj[0] + fv[1] * gj[1]);
                }
            }
        });
    }
    out
}

/// Visits the barycentric corner triples of a uniform 4^levels subdivision of
/// the reference triangle; `frac` is each child's area fraction.
fn for_subtriangles(levels: u32, visit: &mut dyn FnMut([[f64; 3]; 3], f64)) {
    let m = 1usize << levels;
    let frac = 1.0 / (m * m) as f64;
    let bary = |i: usize, j: usize| -> [f64; 3] {
        let x = i as f64 / m as f64;
        let y = j as f64 / m as f64;
        [1.0 - x - y, x, y]
    };
    for i in 0..m {
        for j in 0..m - i {
            visit([bary(i, j), bary(i + 1, j), bary(i, j + 1)], frac);
            if i + j + 2 <= m {
                visit([bary(i + 1, j), bary(i + 1, j + 1), bary(i, j + 1)], frac);
            }
        }
    }
}

/// Continuous quadratic space on the closed boundary polygon. Dofs are the
/// corner nodes (in loop order) followed by one midpoint per segment; the
/// geometry of each segment is its straight chord.
#[derive(Debug, Clone)]
pub struct SurfaceSpace {
    pub n_segments: usize,
    pub n_dofs: usize,
    /// (left corner, right corner, midpoint) per segment.
    pub seg_dofs: Vec<[usize; 3]>,
    pub seg_lengths: Vec<f64>,
    pub dof_coords: Vec<Vec2>,
    /// Unit tangents: analytic at corners, chord direction at midpoints.
    pub dof_tangents: Vec<Vec2>,
    /// Arclength coordinate of each dof along the loop.
    pub dof_arclength: Vec<f64>,
    pub total_length: f64,
}

impl SurfaceSpace {
    pub fn from_surface(surface: &SurfaceMesh) -> Self {
        let n = surface.nodes.len();
        let mut seg_dofs = Vec::with_capacity(n);
        let mut seg_lengths = Vec::with_capacity(n);
        let mut dof_coords = surface.nodes.clone();
        let mut dof_tangents = surface.tangents.clone();
        let mut dof_arclength = surface.arclength.clone();
        dof_coords.extend_from_slice(&surface.midpoints);
        for s in 0..n {
            let a = surface.nodes[s];
            let b = surface.nodes[(s + 1) % n];
            let len = dist(a, b);
            seg_dofs.push([s, (s + 1) % n, n + s]);
            seg_lengths.push(len);
            let t = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
            dof_tangents.push(t);
            dof_arclength.push(surface.arclength[s] + 0.5 * len);
        }
        SurfaceSpace {
            n_segments: n,
            n_dofs: 2 * n,
            seg_dofs,
            seg_lengths,
            dof_coords,
            dof_tangents,
            dof_arclength,
            total_length: surface.total_length,
        }
    }

    pub fn point(&self, seg: usize, xi: f64) -> Vec2 {
        let [a, b, _] = self.seg_dofs[seg];
        let pa = self.dof_coords[a];
        let pb = self.dof_coords[b];
        [pa[0] + xi * (pb[0] - pa[0]), pa[1] + xi * (pb[1] - pa[1])]
    }

    /// Interpolates dof coefficients at (segment, xi).
    pub fn interpolate(&self, coeffs: &[f64], seg: usize, xi: f64) -> f64 {
        let v = seg_values(xi);
        let d = self.seg_dofs[seg];
        v[0] * coeffs[d[0]] + v[1] * coeffs[d[1]] + v[2] * coeffs[d[2]]
    }
}

/// Surface mass matrix with an optional pointwise weight evaluated at the
/// quadrature points as weight(segment, xi, x).
pub fn surface_mass_matrix(
    space: &SurfaceSpace,
    weight: Option<&dyn Fn(usize, f64, Vec2) -> f64>,
) -> CsrMatrix {
    let mut tb = TripletBuilder::new(space.n_dofs, space.n_dofs);
    for s in 0..space.n_segments {
        let dofs = space.seg_dofs[s];
        let len = space.seg_lengths[s];
        for &(xi, w) in &SEG_QUAD {
            let vals = seg_values(xi);
            let wq = w * len * weight.map_or(1.0, |f| f(s, xi, space.point(s, xi)));
            for i in 0..3 {
                for j in 0..3 {
                    tb.push(dofs[i], dofs[j], wq * vals[i] * vals[j]);
                }
            }
        }
    }
    tb.build()
}

/// Surface stiffness matrix (arclength-derivative form).
pub fn surface_stiffness_matrix(space: &SurfaceSpace) -> CsrMatrix {
    let mut tb = TripletBuilder::new(space.n_dofs, space.n_dofs);
    for s in 0..space.n_segments {
        let dofs = space.seg_dofs[s];
        let len = space.seg_lengths[s];
        for &(xi, w) in &SEG_QUAD {
            let der = seg_derivs(xi);
            let wq = w / len;
            for i in 0..3 {
                for j in 0..3 {
                    tb.push(dofs[i], dofs[j], wq * der[i] * der[j]);
                }
            }
        }
    }
    tb.build()
}

/// Surface advection matrix A with A_ij = integral of phi_j * omega * phi_i'
/// along the loop, where the signed tangential speed omega is the quadratic
/// interpolant of `dof_speeds`. Its column sums vanish identically, which is
/// what makes the transport term mass-conservative.
pub fn surface_advection_matrix(space: &SurfaceSpace, dof_speeds: &[f64]) -> CsrMatrix {
    assert_eq!(dof_speeds.len(), space.n_dofs);
    let mut tb = TripletBuilder::new(space.n_dofs, space.n_dofs);
    for s in 0..space.n_segments {
        let dofs = space.seg_dofs[s];
        for &(xi, w) in &SEG_QUAD {
            let vals = seg_values(xi);
            let der = seg_derivs(xi);
            let omega: f64 = (0..3).map(|k| dof_speeds[dofs[k]] * vals[k]).sum();
            for i in 0..3 {
                for j in 0..3 {
                    tb.push(dofs[i], dofs[j], w * vals[j] * omega * der[i]);
                }
            }
        }
    }
    tb.build()
}

/// Surface load vector l_i = integral of f * phi_i with f evaluated
/// pointwise at quadrature points as f(segment, xi, x).
pub fn surface_load(space: &SurfaceSpace, f: &dyn Fn(usize, f64, Vec2) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; space.n_dofs];
    for s in 0..space.n_segments {
        let dofs = space.seg_dofs[s];
        let len = space.seg_lengths[s];
        for &(xi, w) in &SEG_QUAD {
            let vals = seg_values(xi);
            let fv = f(s, xi, space.point(s, xi));
            for i in 0..3 {
                out[dofs[i]] += w * len * fv * vals[i];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
