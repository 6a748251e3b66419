//! Assembled operators against closed-form element integrals and finite
//! differences.

use hvac_core::fem::assembly::{integrate_fields, p1_advection, p1_diffusion, p1_load, p1_mass};
use hvac_core::fem::basis::ElementGeometry;
use hvac_core::fem::{
    assemble_flow, convection, convection_jacobian, heater_load, Coefficients, DofMap,
};
use hvac_core::mesh::{generate, FloorPlan, Mesh, MeshPattern, Region};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn square(h: f64, pattern: MeshPattern) -> Mesh {
    generate(&FloorPlan::rectangle(1.0, 1.0), h, pattern).unwrap()
}

fn all(mesh: &Mesh) -> Vec<usize> {
    (0..mesh.num_triangles()).collect()
}

fn interior_p2_nodes(mesh: &Mesh, dofs: &DofMap) -> Vec<bool> {
    let mut interior = vec![true; dofs.num_p2_nodes()];
    for tag in [
        hvac_core::mesh::BoundaryTag::Wall,
        hvac_core::mesh::BoundaryTag::Inlet,
        hvac_core::mesh::BoundaryTag::Outlet1,
        hvac_core::mesh::BoundaryTag::Outlet2,
    ] {
        for (n, _) in dofs.boundary_p2_nodes(mesh, tag) {
            interior[n] = false;
        }
    }
    interior
}

fn geometry(mesh: &Mesh, k: usize) -> ElementGeometry {
    let t = mesh.triangles[k];
    ElementGeometry::new([mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]])
}

fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn constants_are_diffusion_and_advection_free() {
    let mesh = square(0.25, MeshPattern::Crossed);
    let dofs = DofMap::new(&mesh);
    let k = p1_diffusion(&mesh, &Coefficients::default());
    let ones = vec![1.0; mesh.num_vertices()];
    assert!(k.spmv(&ones).unwrap().iter().all(|v| v.abs() < 1e-14));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u: Vec<f64> = (0..dofs.num_velocity()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c = p1_advection(&mesh, &dofs, &u).unwrap();
    assert!(c.spmv(&ones).unwrap().iter().all(|v| v.abs() < 1e-13));
}

#[test]
fn mass_matrix_entries_sum_to_area() {
    let mesh = square(0.2, MeshPattern::Diagonal);
    let m = p1_mass(&mesh, &all(&mesh));
    let s: f64 = m.values().iter().sum();
    assert!((s - 1.0).abs() < 1e-13);
    // symmetric positive definite: symmetric and positive quadratic form
    let d = m.to_dense();
    for i in 0..d.len() {
        for j in 0..d.len() {
            assert!((d[i][j] - d[j][i]).abs() < 1e-15);
        }
    }
}

#[test]
fn advection_of_linear_field_by_uniform_flow() {
    let mesh = square(0.25, MeshPattern::Diagonal);
    let dofs = DofMap::new(&mesh);
    let mut u = vec![0.0; dofs.num_velocity()];
    for j in 0..dofs.num_p2_nodes() {
        u[DofMap::velocity_dof(j, 0)] = 1.0;
    }
    let c = p1_advection(&mesh, &dofs, &u).unwrap();
    let t: Vec<f64> = mesh.vertices.iter().map(|v| v[0]).collect();
    let ct = c.spmv(&t).unwrap();
    // ⟨1, ξ_k⟩ by element formula area/3 per incident triangle
    let mut oracle = vec![0.0; mesh.num_vertices()];
    for k in 0..mesh.num_triangles() {
        for &v in &mesh.triangles[k] {
            oracle[v] += mesh.triangle_area(k) / 3.0;
        }
    }
    for (a, b) in ct.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn divergence_of_uniform_flow_vanishes() {
    let mesh = square(0.25, MeshPattern::Crossed);
    let dofs = DofMap::new(&mesh);
    let ops = assemble_flow(&mesh, &dofs, &Coefficients::default());
    let mut u = vec![0.0; dofs.num_velocity()];
    for j in 0..dofs.num_p2_nodes() {
        u[DofMap::velocity_dof(j, 0)] = 1.0;
    }
    assert!(ops.b.spmv(&u).unwrap().iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn friction_free_operator_is_scaled_stiffness() {
    let fp = FloorPlan::canonical();
    let mesh = generate(&fp, 0.5, MeshPattern::Diagonal).unwrap();
    let dofs = DofMap::new(&mesh);
    let no_friction = Coefficients {
        alpha_wall: 0.0,
        ..Coefficients::default()
    };
    let unit = Coefficients {
        reynolds: 1.0,
        ..no_friction
    };
    let a = assemble_flow(&mesh, &dofs, &no_friction).a_u;
    let stiffness = assemble_flow(&mesh, &dofs, &unit).a_u;
    let diff = a.linear_combination(1.0, &stiffness, -1.0 / no_friction.reynolds).unwrap();
    assert!(diff.values().iter().all(|v| v.abs() < 1e-10));
}

/// Closed-form `∫ λ_i ∂N_a/∂x_c` on an affine triangle:
/// `∫ λ_i λ_j = A (1 + δ_ij) / 12`, `∫ λ_i = A / 3`.
fn divergence_oracle(mesh: &Mesh, dofs: &DofMap) -> Vec<Vec<f64>> {
    let mut b = vec![vec![0.0; dofs.num_velocity()]; dofs.num_pressure()];
    let edge_nodes = [[0, 1], [1, 2], [2, 0]];
    for k in 0..mesh.num_triangles() {
        let g = geometry(mesh, k);
        let a = g.area;
        let ll = |i: usize, j: usize| a * if i == j { 2.0 } else { 1.0 } / 12.0;
        let nodes = dofs.element_p2(k);
        let tri = mesh.triangles[k];
        for i in 0..3 {
            for c in 0..2 {
                for v in 0..3 {
                    let val = g.grad_lambda[v][c] * (4.0 * ll(i, v) - a / 3.0);
                    b[tri[i]][DofMap::velocity_dof(nodes[v], c)] += val;
                }
                for (m, [p, q]) in edge_nodes.iter().enumerate() {
                    let val = 4.0 * (ll(i, *q) * g.grad_lambda[*p][c] + ll(i, *p) * g.grad_lambda[*q][c]);
                    b[tri[i]][DofMap::velocity_dof(nodes[3 + m], c)] += val;
                }
            }
        }
    }
    b
}

#[test]
fn divergence_matrix_matches_symbolic_integrals() {
    for mesh in [square(1.0, MeshPattern::Diagonal), square(0.5, MeshPattern::Crossed)] {
        let dofs = DofMap::new(&mesh);
        let ops = assemble_flow(&mesh, &dofs, &Coefficients::default());
        let oracle = divergence_oracle(&mesh, &dofs);
        assert!(max_abs_diff(&ops.b.to_dense(), &oracle) < 1e-14);
    }
}

#[test]
fn gradient_operator_is_negative_divergence_transpose_in_the_interior() {
    // direct ⟨∇ψ_i, φ_(a,c)⟩ = ∂_c λ_i ∫ N_a, with ∫ N_vertex = 0, ∫ N_mid = A/3
    let mesh = square(0.25, MeshPattern::Crossed);
    let dofs = DofMap::new(&mesh);
    let ops = assemble_flow(&mesh, &dofs, &Coefficients::default());
    let mut direct = vec![vec![0.0; dofs.num_pressure()]; dofs.num_velocity()];
    for k in 0..mesh.num_triangles() {
        let g = geometry(&mesh, k);
        let nodes = dofs.element_p2(k);
        let tri = mesh.triangles[k];
        for m in 0..3 {
            for c in 0..2 {
                for i in 0..3 {
                    direct[DofMap::velocity_dof(nodes[3 + m], c)][tri[i]] += g.grad_lambda[i][c] * g.area / 3.0;
                }
            }
        }
    }
    let bg = ops.b_grad.to_dense();
    let bt = ops.b.transpose().to_dense();
    let interior = interior_p2_nodes(&mesh, &dofs);
    let mut boundary_differs = false;
    for row in 0..dofs.num_velocity() {
        for col in 0..dofs.num_pressure() {
            assert_eq!(bg[row][col], -bt[row][col]);
            let d = (bg[row][col] - direct[row][col]).abs();
            if interior[row / 2] {
                assert!(d < 1e-14, "row {row} col {col}: {d}");
            } else if d > 1e-8 {
                boundary_differs = true;
            }
        }
    }
    assert!(boundary_differs, "boundary rows carry the integration-by-parts term");
}

/// Reference P2 mass matrix on a triangle of area A, times 180 / A.
const P2_MASS: [[f64; 6]; 6] = [
    [6.0, -1.0, -1.0, 0.0, -4.0, 0.0],
    [-1.0, 6.0, -1.0, 0.0, 0.0, -4.0],
    [-1.0, -1.0, 6.0, -4.0, 0.0, 0.0],
    [0.0, 0.0, -4.0, 32.0, 16.0, 16.0],
    [-4.0, 0.0, 0.0, 16.0, 32.0, 16.0],
    [0.0, -4.0, 0.0, 16.0, 16.0, 32.0],
];

#[test]
fn p2_mass_entries_are_exact() {
    let mesh = square(0.5, MeshPattern::Crossed);
    let dofs = DofMap::new(&mesh);
    let coeffs = Coefficients {
        reynolds: 1e300,
        alpha_air: 1.0,
        ..Coefficients::default()
    };
    let a = assemble_flow(&mesh, &dofs, &coeffs).a_u.to_dense();
    let mut oracle = vec![vec![0.0; dofs.num_velocity()]; dofs.num_velocity()];
    for k in 0..mesh.num_triangles() {
        let area = mesh.triangle_area(k);
        let nodes = dofs.element_p2(k);
        for i in 0..6 {
            for j in 0..6 {
                for c in 0..2 {
                    oracle[DofMap::velocity_dof(nodes[i], c)][DofMap::velocity_dof(nodes[j], c)] +=
                        P2_MASS[i][j] * area / 180.0;
                }
            }
        }
    }
    assert!(max_abs_diff(&a, &oracle) < 1e-15);
}

#[test]
fn convection_vanishes_for_zero_and_constant_fields() {
    let mesh = square(0.25, MeshPattern::Diagonal);
    let dofs = DofMap::new(&mesh);
    let zero = vec![0.0; dofs.num_velocity()];
    assert!(convection(&mesh, &dofs, &zero).unwrap().iter().all(|&v| v == 0.0));
    assert!(convection_jacobian(&mesh, &dofs, &zero)
        .unwrap()
        .values()
        .iter()
        .all(|&v| v == 0.0));
    let constant: Vec<f64> = (0..dofs.num_velocity()).map(|i| if i % 2 == 0 { 0.7 } else { -0.3 }).collect();
    assert!(convection(&mesh, &dofs, &constant).unwrap().iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn convection_jacobian_matches_central_differences() {
    let mesh = square(0.34, MeshPattern::Crossed);
    let dofs = DofMap::new(&mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let eps = 1e-6;
    for _ in 0..20 {
        let u: Vec<f64> = (0..dofs.num_velocity()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..dofs.num_velocity()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let jw = convection_jacobian(&mesh, &dofs, &u).unwrap().spmv(&w).unwrap();
        let plus: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a - eps * b).collect();
        let np = convection(&mesh, &dofs, &plus).unwrap();
        let nm = convection(&mesh, &dofs, &minus).unwrap();
        let fd: Vec<f64> = np.iter().zip(&nm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let err = jw.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = jw.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(err <= 1e-6 * scale, "relative error {}", err / scale);
    }
}

#[test]
fn heater_load_has_unit_mass_and_local_support() {
    for h in [0.5, 0.25] {
        let mesh = generate(&FloorPlan::canonical(), h, MeshPattern::Diagonal).unwrap();
        for region in [Region::Heater1, Region::Heater2] {
            let l = heater_load(&mesh, region).unwrap();
            assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-10, "h={h} {region:?}");
            let mut touches = vec![false; mesh.num_vertices()];
            for k in 0..mesh.num_triangles() {
                if mesh.element_region[k] == region {
                    for &v in &mesh.triangles[k] {
                        touches[v] = true;
                    }
                }
            }
            for (v, &val) in l.iter().enumerate() {
                if !touches[v] {
                    assert_eq!(val, 0.0);
                }
            }
        }
    }
    let empty = square(0.5, MeshPattern::Diagonal);
    assert!(heater_load(&empty, Region::Heater1).is_err());
}

#[test]
fn operators_are_invariant_under_vertex_relabeling() {
    let fp = FloorPlan::rectangle(1.0, 1.0);
    let mesh = square(0.34, MeshPattern::Crossed);
    let n = mesh.num_vertices();
    // relabel vertices by a fixed shuffle and reverse the triangle order
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut verts = vec![[0.0; 2]; n];
    for (old, &new) in perm.iter().enumerate() {
        verts[new] = mesh.vertices[old];
    }
    let tris: Vec<[usize; 3]> = mesh
        .triangles
        .iter()
        .rev()
        .map(|t| [perm[t[1]], perm[t[2]], perm[t[0]]])
        .collect();
    let relabeled = Mesh::from_triangles(&fp, verts, tris).unwrap();

    let coeffs = Coefficients::default();
    let pairs = [
        (p1_mass(&mesh, &all(&mesh)), p1_mass(&relabeled, &all(&relabeled))),
        (p1_diffusion(&mesh, &coeffs), p1_diffusion(&relabeled, &coeffs)),
    ];
    for (a, b) in pairs {
        let (da, db) = (a.to_dense(), b.to_dense());
        for i in 0..n {
            for j in 0..n {
                assert!((da[i][j] - db[perm[i]][perm[j]]).abs() < 1e-14);
            }
        }
    }
    let oa = p1_load(&mesh, &all(&mesh), |p| p[0] * p[0] + p[1]);
    let ob = p1_load(&relabeled, &all(&relabeled), |p| p[0] * p[0] + p[1]);
    for i in 0..n {
        assert!((oa[i] - ob[perm[i]]).abs() < 1e-15);
    }
}

#[test]
fn field_integration_of_polynomials() {
    let mesh = square(0.5, MeshPattern::Crossed);
    let dofs = DofMap::new(&mesh);
    let x: Vec<f64> = mesh.vertices.iter().map(|v| v[0]).collect();
    let s = integrate_fields(&mesh, &dofs, &all(&mesh), None, Some(&x), |_, _, t| t);
    assert!((s - 0.5).abs() < 1e-14);
    let s2 = integrate_fields(&mesh, &dofs, &all(&mesh), None, None, |p, _, _| p[0] * p[0] * p[1] * p[1]);
    assert!((s2 - 1.0 / 9.0).abs() < 1e-14);
}
