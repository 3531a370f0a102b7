use super::*;
use crate::mesh::{generate_mesh, BoundaryEdge, BoundaryTag, DomainSpec, Mesh2D, MeshQuality, SurfaceMesh};

fn reference_triangle() -> Mesh2D {
    Mesh2D {
        vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        triangles: vec![[0, 1, 2]],
        boundary_edges: vec![
            BoundaryEdge { a: 0, b: 1, tag: BoundaryTag::Outer },
            BoundaryEdge { a: 1, b: 2, tag: BoundaryTag::Outer },
            BoundaryEdge { a: 2, b: 0, tag: BoundaryTag::Outer },
        ],
        quality: MeshQuality { min_angle_deg: 45.0, max_aspect: 2.0 },
    }
}

fn unit_square() -> Mesh2D {
    Mesh2D {
        vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        triangles: vec![[0, 1, 2], [0, 2, 3]],
        boundary_edges: vec![
            BoundaryEdge { a: 0, b: 1, tag: BoundaryTag::Outer },
            BoundaryEdge { a: 1, b: 2, tag: BoundaryTag::Outer },
            BoundaryEdge { a: 2, b: 3, tag: BoundaryTag::Outer },
            BoundaryEdge { a: 3, b: 0, tag: BoundaryTag::Outer },
        ],
        quality: MeshQuality { min_angle_deg: 45.0, max_aspect: 2.0 },
    }
}

fn square_loop() -> SurfaceMesh {
    let nodes = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let midpoints = vec![[0.5, 0.0], [1.0, 0.5], [0.5, 1.0], [0.0, 0.5]];
    let tangents = vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
    SurfaceMesh {
        nodes,
        midpoints,
        arclength: vec![0.0, 1.0, 2.0, 3.0],
        tangents,
        total_length: 4.0,
    }
}

#[test]
fn p1_mass_matches_closed_form() {
    let mesh = reference_triangle();
    let space = p1_space(&mesh);
    let m = mass_matrix(&mesh, &space, None).to_dense();
    let area = 0.5;
    let exact = [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((m[i][j] - area / 12.0 * exact[i][j]).abs() < 1e-14);
        }
    }
}

#[test]
fn p1_stiffness_matches_closed_form() {
    let mesh = reference_triangle();
    let space = p1_space(&mesh);
    let s = stiffness_matrix(&mesh, &space).to_dense();
    let exact = [[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((s[i][j] - 0.5 * exact[i][j]).abs() < 1e-14);
        }
    }
}

#[test]
fn tri_quadrature_exact_degree_four() {
    // x^4 over the reference triangle integrates to 1/30.
    let mut val = 0.0;
    for &(l0, l1, l2, w) in &TRI_QUAD {
        let _ = l0;
        let x = l1;
        let _ = l2;
        val += w * 0.5 * x.powi(4);
    }
    assert!((val - 1.0 / 30.0).abs() < 1e-15);
}

#[test]
fn seg_quadrature_exact_degree_five() {
    let mut val = 0.0;
    for &(xi, w) in &SEG_QUAD {
        val += w * xi.powi(5);
    }
    assert!((val - 1.0 / 6.0).abs() < 1e-15);
}

#[test]
fn partition_of_unity_mass_sums_to_area() {
    let mesh = unit_square();
    for space in [p1_space(&mesh), p2_space(&mesh)] {
        let m = mass_matrix(&mesh, &space, None);
        let ones = vec![1.0; space.n_dofs];
        let total: f64 = m.matvec_alloc(&ones).iter().sum();
        assert!((total - 1.0).abs() < 1e-13, "order {}: {total}", space.order);
    }
}

#[test]
fn weighted_mass_integrates_weight() {
    let mesh = unit_square();
    let space = p2_space(&mesh);
    // weight x*y integrates to 1/4 over the unit square.
    let m = mass_matrix(&mesh, &space, Some(&|p: [f64; 2]| p[0] * p[1]));
    let ones = vec![1.0; space.n_dofs];
    let total: f64 = m.matvec_alloc(&ones).iter().sum();
    assert!((total - 0.25).abs() < 1e-13);
}

#[test]
fn stiffness_kills_constants() {
    let mesh = unit_square();
    for space in [p1_space(&mesh), p2_space(&mesh)] {
        let s = stiffness_matrix(&mesh, &space);
        let ones = vec![1.0; space.n_dofs];
        for v in s.matvec_alloc(&ones) {
            assert!(v.abs() < 1e-13);
        }
    }
}

#[test]
fn p2_interpolates_quadratics_exactly() {
    let mesh = unit_square();
    let space = p2_space(&mesh);
    let f = |p: [f64; 2]| 1.0 + 2.0 * p[0] - p[1] + 3.0 * p[0] * p[1] + p[0] * p[0];
    let coeffs: Vec<f64> = space.dof_coords.iter().map(|&p| f(p)).collect();
    // Evaluating through the mass matrix: 1^T M f = integral of f.
    let m = mass_matrix(&mesh, &space, None);
    let total: f64 = m.matvec_alloc(&coeffs).iter().sum();
    // Exact: 1 + 1 - 1/2 + 3/4 + 1/3 over the unit square.
    let exact = 1.0 + 1.0 - 0.5 + 0.75 + 1.0 / 3.0;
    assert!((total - exact).abs() < 1e-13);
}

#[test]
fn mixed_matrix_reproduces_divergence_integral() {
    // q = (x, 0), p = 1: q^T B p equals the mesh area, close to pi on a disc.
    let spec = DomainSpec {
        semi_major: 1.0,
        semi_minor: 1.0,
        nucleus_radius: 0.0,
        target_h: 0.1,
        ..DomainSpec::default()
    };
    let mesh = generate_mesh(&spec).unwrap();
    let v = p2_space(&mesh);
    let p = p1_space(&mesh);
    let b = mixed_matrix(&mesh, &v, &p);
    let mut q = vec![0.0; 2 * v.n_dofs];
    for (i, c) in v.dof_coords.iter().enumerate() {
        q[i] = c[0];
    }
    let ones = vec![1.0; p.n_dofs];
    let bp = b.matvec_alloc(&ones);
    let val: f64 = q.iter().zip(&bp).map(|(a, b)| a * b).sum();
    let area: f64 = mesh
        .triangles
        .iter()
        .map(|t| {
            let [a, b, c] = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        })
        .sum();
    assert!((val - area).abs() < 1e-12 * area);
    assert!((val - std::f64::consts::PI).abs() < 0.02 * std::f64::consts::PI);
}

#[test]
fn grad_matrix_reproduces_gradient_integral() {
    // q = (x, y), p = x + 2y on the unit square: q^T G p equals the integral
    // of x + 2y, which is 3/2.
    let mesh = unit_square();
    let v = p2_space(&mesh);
    let p = p1_space(&mesh);
    let g = grad_matrix(&mesh, &v, &p);
    let n = v.n_dofs;
    let mut q = vec![0.0; 2 * n];
    for (i, c) in v.dof_coords.iter().enumerate() {
        q[i] = c[0];
        q[n + i] = c[1];
    }
    let pc: Vec<f64> = p.dof_coords.iter().map(|c| c[0] + 2.0 * c[1]).collect();
    let gp = g.matvec_alloc(&pc);
    let val: f64 = q.iter().zip(&gp).map(|(a, b)| a * b).sum();
    assert!((val - 1.5).abs() < 1e-13);
}

#[test]
fn grad_plus_div_forms_equal_boundary_flux() {
    // Divergence theorem: q^T (G + B) p = boundary integral of p q.n.
    // q = (x, 0), p = x on the unit square: flux only through x = 1, value 1.
    let mesh = unit_square();
    let v = p2_space(&mesh);
    let p = p1_space(&mesh);
    let g = grad_matrix(&mesh, &v, &p);
    let b = mixed_matrix(&mesh, &v, &p);
    let n = v.n_dofs;
    let mut q = vec![0.0; 2 * n];
    for (i, c) in v.dof_coords.iter().enumerate() {
        q[i] = c[0];
    }
    let pc: Vec<f64> = p.dof_coords.iter().map(|c| c[0]).collect();
    let total: f64 = q
        .iter()
        .zip(g.matvec_alloc(&pc).iter().zip(b.matvec_alloc(&pc)))
        .map(|(qi, (gi, bi))| qi * (gi + bi))
        .sum();
    assert!((total - 1.0).abs() < 1e-13);
}

#[test]
fn subdivided_loads_match_plain_quadrature_for_polynomials() {
    let mesh = unit_square();
    let space = p2_space(&mesh);
    let f = |p: [f64; 2]| [1.0 + p[0], 2.0 - p[1]];
    let plain = vector_load_subdivided(&mesh, &space, &f, 0);
    let fine = vector_load_subdivided(&mesh, &space, &f, 2);
    for (a, b) in plain.iter().zip(&fine) {
        assert!((a - b).abs() < 1e-13);
    }
    // x block sums to the integral of f_x = 3/2; y block to 3/2.
    let n = space.n_dofs;
    let sx: f64 = plain[..n].iter().sum();
    let sy: f64 = plain[n..].iter().sum();
    assert!((sx - 1.5).abs() < 1e-13);
    assert!((sy - 1.5).abs() < 1e-13);
}

#[test]
fn gradient_load_vanishes_for_constant_field_dotted_with_constants() {
    // g_j = integral of f . grad(phi_j); summing over j gives zero because
    // the shapes partition unity.
    let mesh = unit_square();
    let space = p1_space(&mesh);
    let g = gradient_load_subdivided(&mesh, &space, &|_| [0.3, -0.7], 0);
    let total: f64 = g.iter().sum();
    assert!(total.abs() < 1e-14);
    // Against the divergence theorem on the square: for f = (1, 0),
    // g_j = boundary integral of phi_j * n_x; check a corner dof.
    let gx = gradient_load_subdivided(&mesh, &space, &|_| [1.0, 0.0], 0);
    // Vertex (1,0) sees the right edge (n_x = 1, length 1, hat weight 1/2)
    // and the bottom edge (n_x = 0).
    assert!((gx[1] - 0.5).abs() < 1e-13);
}

#[test]
fn surface_mass_total_is_perimeter() {
    let space = SurfaceSpace::from_surface(&square_loop());
    let m = surface_mass_matrix(&space, None);
    let ones = vec![1.0; space.n_dofs];
    let total: f64 = m.matvec_alloc(&ones).iter().sum();
    assert!((total - 4.0).abs() < 1e-13);
}

#[test]
fn surface_stiffness_kills_constants() {
    let space = SurfaceSpace::from_surface(&square_loop());
    let s = surface_stiffness_matrix(&space);
    let ones = vec![1.0; space.n_dofs];
    for v in s.matvec_alloc(&ones) {
        assert!(v.abs() < 1e-13);
    }
}

#[test]
fn advection_column_sums_vanish() {
    let space = SurfaceSpace::from_surface(&square_loop());
    let speeds: Vec<f64> = (0..space.n_dofs).map(|i| (i as f64 * 0.7).sin() + 0.3).collect();
    let a = surface_advection_matrix(&space, &speeds);
    for c in a.column_sums() {
        assert!(c.abs() < 1e-13, "column sum {c}");
    }
    // Constant speed also kills row sums on a closed loop.
    let a1 = surface_advection_matrix(&space, &vec![1.0; space.n_dofs]);
    let ones = vec![1.0; space.n_dofs];
    for v in a1.matvec_alloc(&ones) {
        assert!(v.abs() < 1e-13);
    }
}

#[test]
fn surface_interpolation_reproduces_linears() {
    let space = SurfaceSpace::from_surface(&square_loop());
    let f = |p: [f64; 2]| 3.0 * p[0] - 2.0 * p[1] + 0.5;
    let coeffs: Vec<f64> = space.dof_coords.iter().map(|&p| f(p)).collect();
    for seg in 0..space.n_segments {
        for xi in [0.0, 0.25, 0.5, 0.9] {
            let x = space.point(seg, xi);
            assert!((space.interpolate(&coeffs, seg, xi) - f(x)).abs() < 1e-13);
        }
    }
}

#[test]
fn surface_load_integrates_linears() {
    let space = SurfaceSpace::from_surface(&square_loop());
    // f = x along the loop: integral = 0.5 + 1 + 0.5 + 0 = 2.
    let l = surface_load(&space, &|_, _, x| x[0]);
    let total: f64 = l.iter().sum();
    assert!((total - 2.0).abs() < 1e-13);
}

#[test]
fn p2_edge_dofs_are_shared_across_triangles() {
    let mesh = unit_square();
    let space = p2_space(&mesh);
    // 4 vertices + 5 unique edges.
    assert_eq!(space.n_dofs, 9);
    let d0 = space.elem_dofs[0];
    let d1 = space.elem_dofs[1];
    // Shared edge (0, 2) must map to the same midpoint dof: slot 2 of the
    // first triangle's edges is (2,0); slot 0 of the second's is (0,2).
    assert_eq!(d0[5], d1[3]);
}
