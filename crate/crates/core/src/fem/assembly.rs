//! Element loops for every operator of the temperature and flow weak forms.
//!
//! All integrals use the degree-4 rule, which is exact for P2 x P2 products
//! and for the affine-element stiffness terms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::basis::{p2_gradients, p2_values, ElementGeometry};
use super::quadrature::{quadrature, QuadPoint};
use super::DofMap;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Region};
use crate::sparse::{CsrMatrix, Triplets};

const QUAD_ORDER: usize = 4;

fn rule() -> &'static [QuadPoint] {
    quadrature(QUAD_ORDER).expect("degree-4 rule exists")
}

/// Material and flow constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Coefficients {
    /// Thermal diffusivity in air, m²/s.
    pub kappa_air: f64,
    pub kappa_wall: f64,
    /// Brinkman friction in air, 1/s.
    pub alpha_air: f64,
    pub alpha_wall: f64,
    pub reynolds: f64,
    /// Air density, kg/m³. Pressure unknowns are `p / density`.
    pub density: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        Self {
            kappa_air: 1e-2,
            kappa_wall: 1e-4,
            alpha_air: 0.0,
            alpha_wall: 100.0,
            reynolds: 0.05,
            density: 1.2,
        }
    }
}

impl Coefficients {
    pub fn kappa(&self, region: Region) -> f64 {
        if region.is_wall() {
            self.kappa_wall
        } else {
            self.kappa_air
        }
    }

    pub fn alpha(&self, region: Region) -> f64 {
        if region.is_wall() {
            self.alpha_wall
        } else {
            self.alpha_air
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.kappa_air > 0.0
            && self.kappa_wall > 0.0
            && self.alpha_air >= 0.0
            && self.alpha_wall >= 0.0
            && self.reynolds > 0.0
            && self.density > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "coefficients must satisfy kappa > 0, alpha >= 0, Re > 0, rho > 0: {self:?}"
            )))
        }
    }
}

fn geometry(mesh: &Mesh, k: usize) -> ElementGeometry {
    let [a, b, c] = mesh.triangles[k];
    ElementGeometry::new([mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]])
}

fn check_velocity(dofs: &DofMap, velocity: &[f64]) -> Result<()> {
    if velocity.len() == dofs.num_velocity() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: dofs.num_velocity(),
            found: velocity.len(),
            context: "velocity coefficients",
        })
    }
}

/// Velocity and its gradient (`grad[c][d] = ∂u_c/∂x_d`) at a quadrature point.
fn local_velocity(velocity: &[f64], nodes: &[usize; 6], phi: &[f64; 6], dphi: &[[f64; 2]; 6]) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut u = [0.0; 2];
    let mut grad = [[0.0; 2]; 2];
    for a in 0..6 {
        for c in 0..2 {
            let coeff = velocity[DofMap::velocity_dof(nodes[a], c)];
            u[c] += coeff * phi[a];
            grad[c][0] += coeff * dphi[a][0];
            grad[c][1] += coeff * dphi[a][1];
        }
    }
    (u, grad)
}

/// Evaluates a P2 velocity field at barycentric point `l` of element `k`.
pub fn velocity_in_element(dofs: &DofMap, velocity: &[f64], k: usize, l: [f64; 3]) -> [f64; 2] {
    let nodes = dofs.element_p2(k);
    let phi = p2_values(l);
    let mut u = [0.0; 2];
    for a in 0..6 {
        u[0] += velocity[DofMap::velocity_dof(nodes[a], 0)] * phi[a];
        u[1] += velocity[DofMap::velocity_dof(nodes[a], 1)] * phi[a];
    }
    u
}

/// P1 mass matrix restricted to the listed elements.
pub fn p1_mass(mesh: &Mesh, elements: &[usize]) -> CsrMatrix {
    let n = mesh.num_vertices();
    let mut t = Triplets::with_capacity(n, n, 9 * elements.len());
    for &k in elements {
        let g = geometry(mesh, k);
        let tri = &mesh.triangles[k];
        // exact: ∫ λi λj = area (1 + δij) / 12
        for i in 0..3 {
            for j in 0..3 {
                let m = if i == j { g.area / 6.0 } else { g.area / 12.0 };
                t.push(tri[i], tri[j], m);
            }
        }
    }
    t.to_csr().expect("mesh indices are in range")
}

/// `∫ f ξ_k` over the listed elements.
pub fn p1_load(mesh: &Mesh, elements: &[usize], f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let mut load = vec![0.0; mesh.num_vertices()];
    for &k in elements {
        let g = geometry(mesh, k);
        let tri = &mesh.triangles[k];
        for q in rule() {
            let w = q.weight * 2.0 * g.area * f(g.point(q.bary));
            for i in 0..3 {
                load[tri[i]] += w * q.bary[i];
            }
        }
    }
    load
}

/// `∫ κ ∇ξ_j · ∇ξ_k`, symmetric positive semidefinite.
pub fn p1_diffusion(mesh: &Mesh, coeffs: &Coefficients) -> CsrMatrix {
    let n = mesh.num_vertices();
    let mut t = Triplets::with_capacity(n, n, 9 * mesh.num_triangles());
    for k in 0..mesh.num_triangles() {
        let g = geometry(mesh, k);
        let kappa = coeffs.kappa(mesh.element_region[k]);
        let tri = &mesh.triangles[k];
        for i in 0..3 {
            for j in 0..3 {
                let d = g.grad_lambda[i][0] * g.grad_lambda[j][0] + g.grad_lambda[i][1] * g.grad_lambda[j][1];
                t.push(tri[i], tri[j], kappa * g.area * d);
            }
        }
    }
    t.to_csr().expect("mesh indices are in range")
}

/// `C[k][j] = ∫ (u · ∇ξ_j) ξ_k` for a P2 velocity field.
pub fn p1_advection(mesh: &Mesh, dofs: &DofMap, velocity: &[f64]) -> Result<CsrMatrix> {
    check_velocity(dofs, velocity)?;
    let n = mesh.num_vertices();
    let mut t = Triplets::with_capacity(n, n, 9 * mesh.num_triangles());
    for k in 0..mesh.num_triangles() {
        let g = geometry(mesh, k);
        let tri = &mesh.triangles[k];
        let mut local = [[0.0; 3]; 3];
        for q in rule() {
            let u = velocity_in_element(dofs, velocity, k, q.bary);
            let w = q.weight * 2.0 * g.area;
            for j in 0..3 {
                let adv = u[0] * g.grad_lambda[j][0] + u[1] * g.grad_lambda[j][1];
                for (i, row) in local.iter_mut().enumerate() {
                    row[j] += w * adv * q.bary[i];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                t.push(tri[i], tri[j], local[i][j]);
            }
        }
    }
    t.to_csr()
}

/// Semi-discrete temperature operators: `M η' + (K + C) η = load`.
#[derive(Debug, Clone)]
pub struct TemperatureOperators {
    pub mass: CsrMatrix,
    pub diffusion: CsrMatrix,
    pub advection: CsrMatrix,
}

pub fn assemble_temperature(
    mesh: &Mesh,
    dofs: &DofMap,
    coeffs: &Coefficients,
    velocity: &[f64],
) -> Result<TemperatureOperators> {
    let all: Vec<usize> = (0..mesh.num_triangles()).collect();
    Ok(TemperatureOperators {
        mass: p1_mass(mesh, &all),
        diffusion: p1_diffusion(mesh, coeffs),
        advection: p1_advection(mesh, dofs, velocity)?,
    })
}

/// `∫_Θ ξ_k` for the elements of a heater region; the heat source of power
/// `v` contributes `v * L` to the temperature load.
pub fn heater_load(mesh: &Mesh, region: Region) -> Result<Vec<f64>> {
    let elements: Vec<usize> = (0..mesh.num_triangles())
        .filter(|&k| mesh.element_region[k] == region)
        .collect();
    if elements.is_empty() {
        return Err(Error::InvalidGeometry(format!("heater region {region:?} has no elements")));
    }
    Ok(p1_load(mesh, &elements, |_| 1.0))
}

/// Linear flow operators.
///
/// * `a_u`: `(1/Re) ∫ ∇φ_i : ∇φ_j + ∫ α φ_i · φ_j`
/// * `b`: `B[k][j] = ∫ ψ_k div φ_j` (pressure rows, velocity columns)
/// * `b_grad`: the pressure term of the momentum equation after
///   integration by parts, `-∫ p div φ_j`, i.e. `-Bᵀ`. The dropped boundary
///   integral is what turns open segments into do-nothing boundaries.
#[derive(Debug, Clone)]
pub struct FlowOperators {
    pub a_u: CsrMatrix,
    pub b: CsrMatrix,
    pub b_grad: CsrMatrix,
}

pub fn assemble_flow(mesh: &Mesh, dofs: &DofMap, coeffs: &Coefficients) -> FlowOperators {
    let nu = dofs.num_velocity();
    let np = dofs.num_pressure();
    let mut ta = Triplets::with_capacity(nu, nu, 72 * mesh.num_triangles());
    let mut tb = Triplets::with_capacity(np, nu, 36 * mesh.num_triangles());
    let inv_re = 1.0 / coeffs.reynolds;
    for k in 0..mesh.num_triangles() {
        let g = geometry(mesh, k);
        let alpha = coeffs.alpha(mesh.element_region[k]);
        let nodes = dofs.element_p2(k);
        let tri = &mesh.triangles[k];
        let mut a_loc = [[0.0; 6]; 6];
        let mut b_loc = [[[0.0; 2]; 6]; 3];
        for q in rule() {
            let w = q.weight * 2.0 * g.area;
            let phi = p2_values(q.bary);
            let dphi = p2_gradients(q.bary, &g.grad_lambda);
            for a in 0..6 {
                for b in 0..6 {
                    let stiff = dphi[a][0] * dphi[b][0] + dphi[a][1] * dphi[b][1];
                    a_loc[a][b] += w * (inv_re * stiff + alpha * phi[a] * phi[b]);
                }
                for i in 0..3 {
                    b_loc[i][a][0] += w * q.bary[i] * dphi[a][0];
                    b_loc[i][a][1] += w * q.bary[i] * dphi[a][1];
                }
            }
        }
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..2 {
                    ta.push(DofMap::velocity_dof(nodes[a], c), DofMap::velocity_dof(nodes[b], c), a_loc[a][b]);
                }
            }
            for i in 0..3 {
                for c in 0..2 {
                    tb.push(tri[i], DofMap::velocity_dof(nodes[a], c), b_loc[i][a][c]);
                }
            }
        }
    }
    let b = tb.to_csr().expect("mesh indices are in range");
    FlowOperators {
        a_u: ta.to_csr().expect("mesh indices are in range"),
        b_grad: b.transpose().scaled(-1.0),
        b,
    }
}

/// `N(u)_(a,c) = ∫ ((u · ∇) u)_c φ_a`.
pub fn convection(mesh: &Mesh, dofs: &DofMap, velocity: &[f64]) -> Result<Vec<f64>> {
    check_velocity(dofs, velocity)?;
    let mut out = vec![0.0; dofs.num_velocity()];
    for k in 0..mesh.num_triangles() {
        let g = geometry(mesh, k);
        let nodes = dofs.element_p2(k);
        for q in rule() {
            let w = q.weight * 2.0 * g.area;
            let phi = p2_values(q.bary);
            let dphi = p2_gradients(q.bary, &g.grad_lambda);
            let (u, grad) = local_velocity(velocity, nodes, &phi, &dphi);
            for c in 0..2 {
                let conv = u[0] * grad[c][0] + u[1] * grad[c][1];
                for a in 0..6 {
                    out[DofMap::velocity_dof(nodes[a], c)] += w * conv * phi[a];
                }
            }
        }
    }
    Ok(out)
}

/// Exact derivative of [`convection`]: `J(u) w = ∫ ((w·∇)u + (u·∇)w) · φ`.
pub fn convection_jacobian(mesh: &Mesh, dofs: &DofMap, velocity: &[f64]) -> Result<CsrMatrix> {
    check_velocity(dofs, velocity)?;
    let nu = dofs.num_velocity();
    let mut t = Triplets::with_capacity(nu, nu, 144 * mesh.num_triangles());
    for k in 0..mesh.num_triangles() {
        let g = geometry(mesh, k);
        let nodes = dofs.element_p2(k);
        // local[(a, c)][(b, d)]
        let mut local = [[[[0.0; 2]; 6]; 2]; 6];
        for q in rule() {
            let w = q.weight * 2.0 * g.area;
            let phi = p2_values(q.bary);
            let dphi = p2_gradients(q.bary, &g.grad_lambda);
            let (u, grad) = local_velocity(velocity, nodes, &phi, &dphi);
            for a in 0..6 {
                for b in 0..6 {
                    let transport = u[0] * dphi[b][0] + u[1] * dphi[b][1];
                    for c in 0..2 {
                        for d in 0..2 {
                            let mut v = phi[b] * grad[c][d];
                            if c == d {
                                v += transport;
                            }
                            local[a][c][b][d] += w * phi[a] * v;
                        }
                    }
                }
            }
        }
        for a in 0..6 {
            for c in 0..2 {
                for b in 0..6 {
                    for d in 0..2 {
                        t.push(
                            DofMap::velocity_dof(nodes[a], c),
                            DofMap::velocity_dof(nodes[b], d),
                            local[a][c][b][d],
                        );
                    }
                }
            }
        }
    }
    t.to_csr()
}

/// `∫ f · φ_(a,c)` for a vector body force.
pub fn velocity_load(mesh: &Mesh, dofs: &DofMap, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    let mut out = vec![0.0; dofs.num_velocity()];
    for k in 0..mesh.num_triangles() {
        let g = geometry(mesh, k);
        let nodes = dofs.element_p2(k);
        for q in rule() {
            let w = q.weight * 2.0 * g.area;
            let phi = p2_values(q.bary);
            let fx = f(g.point(q.bary));
            for a in 0..6 {
                for c in 0..2 {
                    out[DofMap::velocity_dof(nodes[a], c)] += w * fx[c] * phi[a];
                }
            }
        }
    }
    out
}

/// Quadrature of `f(x, u_h(x), p_h(x))` over the mesh (or element subset);
/// used for error norms and zone statistics.
pub fn integrate_fields(
    mesh: &Mesh,
    dofs: &DofMap,
    elements: &[usize],
    velocity: Option<&[f64]>,
    scalar_p1: Option<&[f64]>,
    f: impl Fn([f64; 2], [f64; 2], f64) -> f64,
) -> f64 {
    let mut total = 0.0;
    for &k in elements {
        let g = geometry(mesh, k);
        let tri = &mesh.triangles[k];
        for q in rule() {
            let u = velocity.map_or([0.0; 2], |v| velocity_in_element(dofs, v, k, q.bary));
            let s = scalar_p1.map_or(0.0, |p| q.bary[0] * p[tri[0]] + q.bary[1] * p[tri[1]] + q.bary[2] * p[tri[2]]);
            total += q.weight * 2.0 * g.area * f(g.point(q.bary), u, s);
        }
    }
    total
}
