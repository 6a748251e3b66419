use alloc::vec;
use alloc::vec::Vec;

use crate::mesh::{BoundaryTag, Mesh, Side};

/// Degree-of-freedom numbering.
///
/// Temperature and pressure use one dof per vertex. Velocity uses P2 nodes
/// (vertices, then edge midpoints) with interleaved components: node `j`
/// owns dofs `2j` (x) and `2j + 1` (y).
#[derive(Debug, Clone)]
pub struct DofMap {
    num_vertices: usize,
    num_edges: usize,
    element_p2: Vec<[usize; 6]>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let nv = mesh.num_vertices();
        let element_p2 = mesh
            .triangles
            .iter()
            .zip(&mesh.triangle_edges)
            .map(|(t, e)| [t[0], t[1], t[2], nv + e[0], nv + e[1], nv + e[2]])
            .collect();
        Self {
            num_vertices: nv,
            num_edges: mesh.num_edges(),
            element_p2,
        }
    }

    pub fn num_temperature(&self) -> usize {
        self.num_vertices
    }

    pub fn num_pressure(&self) -> usize {
        self.num_vertices
    }

    pub fn num_p2_nodes(&self) -> usize {
        self.num_vertices + self.num_edges
    }

    pub fn num_velocity(&self) -> usize {
        2 * self.num_p2_nodes()
    }

    /// P1 dofs of element `k` (its vertices).
    pub fn element_p1<'m>(&self, mesh: &'m Mesh, k: usize) -> &'m [usize; 3] {
        &mesh.triangles[k]
    }

    /// P2 node indices of element `k`.
    pub fn element_p2(&self, k: usize) -> &[usize; 6] {
        &self.element_p2[k]
    }

    #[inline]
    pub fn velocity_dof(node: usize, component: usize) -> usize {
        2 * node + component
    }

    /// P2 nodes on boundary edges with `tag`, with the side each lies on.
    /// Segment endpoints are included. Sorted by node index.
    pub fn boundary_p2_nodes(&self, mesh: &Mesh, tag: BoundaryTag) -> Vec<(usize, Side)> {
        let mut nodes = Vec::new();
        for be in mesh.boundary_edges.iter().filter(|b| b.tag == tag) {
            let [a, b] = mesh.edges[be.edge];
            nodes.push((a, be.side));
            nodes.push((b, be.side));
            nodes.push((self.num_vertices + be.edge, be.side));
        }
        nodes.sort_unstable_by_key(|&(n, s)| (n, s));
        nodes.dedup();
        nodes
    }

    /// Vertices (P1 dofs) on the outer boundary.
    pub fn boundary_p1_mask(&self, mesh: &Mesh) -> Vec<bool> {
        let mut mask = vec![false; self.num_vertices];
        for be in &mesh.boundary_edges {
            for v in mesh.edges[be.edge] {
                mask[v] = true;
            }
        }
        mask
    }
}
