//! Lagrange shape functions on triangles, written in barycentric
//! coordinates.
//!
//! P2 local node order: vertices 0, 1, 2, then the midpoints of edges
//! (0,1), (1,2), (2,0).

use crate::error::{Error, Result};

/// Reference-triangle gradients of the barycentric coordinates
/// `λ0 = 1 - ξ - η`, `λ1 = ξ`, `λ2 = η`.
const REF_GRAD_LAMBDA: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Endpoints of the local P2 midpoint nodes 3, 4, 5.
pub const P2_EDGE_NODES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

pub fn p1_values(l: [f64; 3]) -> [f64; 3] {
    l
}

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

/// P2 gradients given the (constant) gradients of the barycentric coordinates.
pub fn p2_gradients(l: [f64; 3], gl: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut g = [[0.0; 2]; 6];
    for d in 0..2 {
        for i in 0..3 {
            g[i][d] = (4.0 * l[i] - 1.0) * gl[i][d];
        }
        for (m, [i, j]) in P2_EDGE_NODES.iter().enumerate() {
            g[3 + m][d] = 4.0 * (l[*j] * gl[*i][d] + l[*i] * gl[*j][d]);
        }
    }
    g
}

/// Values and reference-coordinate gradients of the P1 (3) or P2 (6) shape
/// functions at barycentric point `l`.
pub fn reference_basis(order: usize, l: [f64; 3]) -> Result<(alloc::vec::Vec<f64>, alloc::vec::Vec<[f64; 2]>)> {
    match order {
        1 => Ok((p1_values(l).to_vec(), REF_GRAD_LAMBDA.to_vec())),
        2 => Ok((p2_values(l).to_vec(), p2_gradients(l, &REF_GRAD_LAMBDA).to_vec())),
        _ => Err(Error::InvalidParameter(alloc::format!(
            "Lagrange order {order} not supported (1 or 2)"
        ))),
    }
}

/// Affine data of one mesh triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    pub vertices: [[f64; 2]; 3],
    /// Physical gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(vertices: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let inv = 1.0 / det;
        let grad_lambda = [
            [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
            [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
            [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
        ];
        Self {
            area: 0.5 * det,
            vertices,
            grad_lambda,
        }
    }

    pub fn point(&self, l: [f64; 3]) -> [f64; 2] {
        let v = &self.vertices;
        [
            l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
            l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P2_NODES: [[f64; 3]; 6] = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.5, 0.5, 0.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
    ];

    #[test]
    fn p1_nodal_property() {
        let (v, _) = reference_basis(1, [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(v, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn p2_kronecker_delta_at_all_nodes() {
        for (i, node) in P2_NODES.iter().enumerate() {
            let v = p2_values(*node);
            for (j, &vj) in v.iter().enumerate() {
                assert_eq!(vj, if i == j { 1.0 } else { 0.0 }, "node {i} function {j}");
            }
        }
    }

    #[test]
    fn partition_of_unity_at_interior_points() {
        for l in [[0.2, 0.3, 0.5], [0.6, 0.1, 0.3], [1.0 / 3.0; 3], [0.05, 0.9, 0.05]] {
            for order in 1..=2 {
                let (v, g) = reference_basis(order, l).unwrap();
                assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                let gs = g.iter().fold([0.0; 2], |a, b| [a[0] + b[0], a[1] + b[1]]);
                assert!(gs[0].abs() < 1e-14 && gs[1].abs() < 1e-14);
            }
        }
        assert!(reference_basis(3, [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn p2_gradients_match_finite_differences() {
        let l = [0.2, 0.3, 0.5];
        let (_, g) = reference_basis(2, l).unwrap();
        let h = 1e-6;
        let at = |xi: f64, eta: f64| p2_values([1.0 - xi - eta, xi, eta]);
        let (xi, eta) = (l[1], l[2]);
        for i in 0..6 {
            let dx = (at(xi + h, eta)[i] - at(xi - h, eta)[i]) / (2.0 * h);
            let dy = (at(xi, eta + h)[i] - at(xi, eta - h)[i]) / (2.0 * h);
            assert!((dx - g[i][0]).abs() < 1e-8 && (dy - g[i][1]).abs() < 1e-8);
        }
    }

    #[test]
    fn element_geometry_of_reference_triangle() {
        let g = ElementGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(g.area, 0.5);
        assert_eq!(g.grad_lambda, REF_GRAD_LAMBDA);
    }
}
