//! Stationary penalized Navier-Stokes on a Taylor-Hood (P2/P1) mesh.
//!
//! Unknowns are stacked `[u (N_u); p (N_p)]`, with `p` the kinematic gauge
//! pressure `(p - p_A) / ρ`. Velocity Dirichlet values replace their
//! momentum rows. Pressure is fixed either by open (inlet) boundary
//! segments, where the momentum equation's natural condition is the
//! do-nothing traction `(1/Re) ∂u/∂n - p n = 0`, or by pinned pressure dofs.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fem::assembly::{integrate_fields, velocity_in_element, velocity_load};
use crate::fem::{assemble_flow, convection, convection_jacobian, Coefficients, DofMap, FlowOperators};
use crate::math::{hypot, norm_inf, sqrt};
use crate::mesh::{BoundaryTag, Mesh};
use crate::sparse::{CsrMatrix, LuFactorization, Triplets};

/// Fan speeds at the two outlets, m/s along the inward normal.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowBcs {
    pub fan_speed_1: f64,
    pub fan_speed_2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Absolute tolerance on the residual ∞-norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Maximum step halvings per iteration.
    pub max_halvings: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 25,
            max_halvings: 10,
        }
    }
}

/// Velocity and pressure coefficients with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    /// Length `N_u`, interleaved `(x, y)` per P2 node, m/s.
    pub velocity: Vec<f64>,
    /// Length `N_p`, gauge pressure divided by density.
    pub pressure: Vec<f64>,
    pub residual_norm: f64,
    pub newton_iterations: usize,
    /// Residual ∞-norm before each Newton step and after the last one.
    pub residual_history: Vec<f64>,
}

/// Which starting point Newton uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialGuess {
    #[default]
    Stokes,
    /// Zero interior velocity and pressure (boundary values imposed).
    Zero,
}

/// Assembled flow system plus boundary data.
#[derive(Debug, Clone)]
pub struct FlowProblem<'m> {
    mesh: &'m Mesh,
    dofs: DofMap,
    ops: FlowOperators,
    forcing: Vec<f64>,
    velocity_bc: BTreeMap<usize, f64>,
    pressure_pins: BTreeMap<usize, f64>,
    include_convection: bool,
}

impl<'m> FlowProblem<'m> {
    /// No boundary conditions yet; callers add them.
    pub fn new(mesh: &'m Mesh, coeffs: &Coefficients) -> Result<Self> {
        coeffs.validate()?;
        let dofs = DofMap::new(mesh);
        let ops = assemble_flow(mesh, &dofs, coeffs);
        Ok(Self {
            mesh,
            forcing: vec![0.0; dofs.num_velocity()],
            dofs,
            ops,
            velocity_bc: BTreeMap::new(),
            pressure_pins: BTreeMap::new(),
            include_convection: true,
        })
    }

    /// HVAC boundary conditions: prescribed inflow `speed * n̂` on both
    /// outlets, zero normal velocity on walls, free (do-nothing) inlet.
    pub fn hvac(mesh: &'m Mesh, coeffs: &Coefficients, bcs: FlowBcs) -> Result<Self> {
        let mut problem = Self::new(mesh, coeffs)?;
        let dofs = problem.dofs.clone();
        for (node, side) in dofs.boundary_p2_nodes(mesh, BoundaryTag::Wall) {
            problem.set_velocity(node, side.normal_component(), 0.0);
        }
        for (tag, speed) in [
            (BoundaryTag::Outlet1, bcs.fan_speed_1),
            (BoundaryTag::Outlet2, bcs.fan_speed_2),
        ] {
            for (node, side) in dofs.boundary_p2_nodes(mesh, tag) {
                let n = side.inward_normal();
                problem.set_velocity(node, 0, speed * n[0]);
                problem.set_velocity(node, 1, speed * n[1]);
            }
        }
        Ok(problem)
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn operators(&self) -> &FlowOperators {
        &self.ops
    }

    /// Prescribes one velocity component at a P2 node (overrides earlier values).
    pub fn set_velocity(&mut self, node: usize, component: usize, value: f64) {
        self.velocity_bc.insert(DofMap::velocity_dof(node, component), value);
    }

    /// Pins the pressure at a vertex; its continuity row is replaced.
    pub fn pin_pressure(&mut self, vertex: usize, value: f64) {
        self.pressure_pins.insert(vertex, value);
    }

    pub fn set_body_force(&mut self, f: impl Fn([f64; 2]) -> [f64; 2]) {
        self.forcing = velocity_load(self.mesh, &self.dofs, f);
    }

    /// Drops the convection term (Stokes-Brinkman problem).
    pub fn without_convection(mut self) -> Self {
        self.include_convection = false;
        self
    }

    fn has_pressure_reference(&self) -> bool {
        !self.pressure_pins.is_empty()
            || self
                .mesh
                .boundary_edges
                .iter()
                .any(|b| b.tag == BoundaryTag::Inlet)
    }

    fn size(&self) -> usize {
        self.dofs.num_velocity() + self.dofs.num_pressure()
    }

    /// Saddle-point matrix `[[A + J, B_grad], [B, 0]]` with constrained rows
    /// replaced by identity rows.
    fn system_matrix(&self, jacobian: Option<&CsrMatrix>) -> Result<CsrMatrix> {
        let nu = self.dofs.num_velocity();
        let n = self.size();
        let mut t = Triplets::with_capacity(n, n, 2 * self.ops.a_u.nnz() + 2 * self.ops.b.nnz());
        let push_block = |t: &mut Triplets, m: &CsrMatrix, r0: usize, c0: usize| {
            for r in 0..m.nrows() {
                let (cols, vals) = m.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    t.push(r0 + r, c0 + c, v);
                }
            }
        };
        push_block(&mut t, &self.ops.a_u, 0, 0);
        if let Some(j) = jacobian {
            push_block(&mut t, j, 0, 0);
        }
        push_block(&mut t, &self.ops.b_grad, 0, nu);
        push_block(&mut t, &self.ops.b, nu, 0);
        let mut constrained = vec![false; n];
        for &dof in self.velocity_bc.keys() {
            constrained[dof] = true;
        }
        for &v in self.pressure_pins.keys() {
            constrained[nu + v] = true;
        }
        t.to_csr()?.with_identity_rows(&constrained)
    }

    /// Full nonlinear residual at `z = [u; p]`.
    fn residual(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.residual_with(z, self.include_convection)
    }

    fn residual_with(&self, z: &[f64], with_convection: bool) -> Result<Vec<f64>> {
        let nu = self.dofs.num_velocity();
        let (u, p) = z.split_at(nu);
        let mut r = self.ops.a_u.spmv(u)?;
        if with_convection {
            let conv = convection(self.mesh, &self.dofs, u)?;
            for (ri, ci) in r.iter_mut().zip(&conv) {
                *ri += ci;
            }
        }
        let grad = self.ops.b_grad.spmv(p)?;
        for ((ri, gi), fi) in r.iter_mut().zip(&grad).zip(&self.forcing) {
            *ri += gi - fi;
        }
        r.extend(self.ops.b.spmv(u)?);
        for (&dof, &val) in &self.velocity_bc {
            r[dof] = z[dof] - val;
        }
        for (&v, &val) in &self.pressure_pins {
            r[nu + v] = z[nu + v] - val;
        }
        Ok(r)
    }

    fn factorize(&self, matrix: &CsrMatrix) -> Result<LuFactorization> {
        if !self.has_pressure_reference() {
            return Err(Error::MissingPressureReference);
        }
        LuFactorization::new(matrix)
    }

    fn pack(&self, z: Vec<f64>, history: Vec<f64>, iterations: usize) -> FlowField {
        let nu = self.dofs.num_velocity();
        let mut velocity = z;
        let pressure = velocity.split_off(nu);
        FlowField {
            velocity,
            pressure,
            residual_norm: *history.last().unwrap_or(&0.0),
            newton_iterations: iterations,
            residual_history: history,
        }
    }

    /// Linear solve with the convection term dropped.
    pub fn solve_stokes(&self) -> Result<FlowField> {
        let matrix = self.system_matrix(None)?;
        let lu = self.factorize(&matrix)?;
        let mut rhs = self.forcing.clone();
        rhs.resize(self.size(), 0.0);
        let nu = self.dofs.num_velocity();
        for (&dof, &val) in &self.velocity_bc {
            rhs[dof] = val;
        }
        for (&v, &val) in &self.pressure_pins {
            rhs[nu + v] = val;
        }
        let z = lu.solve(&rhs)?;
        let res = norm_inf(&self.residual_with(&z, false)?);
        Ok(self.pack(z, vec![res], 0))
    }

    /// Newton iteration from the Stokes solution.
    pub fn solve(&self, settings: &NewtonSettings) -> Result<FlowField> {
        self.solve_from(settings, InitialGuess::Stokes)
    }

    pub fn solve_from(&self, settings: &NewtonSettings, guess: InitialGuess) -> Result<FlowField> {
        if !self.include_convection {
            return self.solve_stokes();
        }
        let nu = self.dofs.num_velocity();
        let mut z = match guess {
            InitialGuess::Stokes => {
                let s = self.solve_stokes()?;
                let mut z = s.velocity;
                z.extend(s.pressure);
                z
            }
            InitialGuess::Zero => {
                let mut z = vec![0.0; self.size()];
                for (&dof, &val) in &self.velocity_bc {
                    z[dof] = val;
                }
                for (&v, &val) in &self.pressure_pins {
                    z[nu + v] = val;
                }
                z
            }
        };
        let mut r = self.residual(&z)?;
        let mut rnorm = norm_inf(&r);
        let mut history = vec![rnorm];
        let mut iterations = 0;
        while rnorm > settings.tolerance {
            if iterations == settings.max_iterations {
                return Err(Error::NewtonDiverged {
                    iterations,
                    residual: rnorm,
                });
            }
            let jac = convection_jacobian(self.mesh, &self.dofs, &z[..nu])?;
            let lu = self.factorize(&self.system_matrix(Some(&jac))?)?;
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let step = lu.solve(&neg)?;

            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..=settings.max_halvings {
                let trial: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + lambda * b).collect();
                let rt = self.residual(&trial)?;
                let nt = norm_inf(&rt);
                if nt < rnorm || nt <= settings.tolerance {
                    accepted = Some((trial, rt, nt));
                    break;
                }
                lambda *= 0.5;
            }
            let Some((zt, rt, nt)) = accepted else {
                return Err(Error::NewtonDiverged {
                    iterations,
                    residual: rnorm,
                });
            };
            z = zt;
            r = rt;
            rnorm = nt;
            iterations += 1;
            history.push(rnorm);
        }
        Ok(self.pack(z, history, iterations))
    }

    /// `‖B u‖∞` over continuity rows that are not replaced by pressure pins.
    pub fn divergence_residual(&self, field: &FlowField) -> Result<f64> {
        let bu = self.ops.b.spmv(&field.velocity)?;
        Ok(bu
            .iter()
            .enumerate()
            .filter(|(k, _)| !self.pressure_pins.contains_key(k))
            .fold(0.0, |m, (_, v)| m.max(v.abs())))
    }

    pub fn velocity_at(&self, field: &FlowField, p: [f64; 2]) -> Result<[f64; 2]> {
        velocity_at(self.mesh, &self.dofs, field, p)
    }
}

/// P2 interpolation of the velocity at a point of the mesh.
pub fn velocity_at(mesh: &Mesh, dofs: &DofMap, field: &FlowField, p: [f64; 2]) -> Result<[f64; 2]> {
    let (k, l) = mesh.locate(p)?;
    Ok(velocity_in_element(dofs, &field.velocity, k, l))
}

/// Mean speed `(1/|air|) ∫_air ‖u‖` over non-wall elements.
pub fn mean_air_speed(mesh: &Mesh, dofs: &DofMap, field: &FlowField) -> f64 {
    let air: Vec<usize> = (0..mesh.num_triangles())
        .filter(|&k| !mesh.element_region[k].is_wall())
        .collect();
    let area: f64 = air.iter().map(|&k| mesh.triangle_area(k)).sum();
    integrate_fields(mesh, dofs, &air, Some(&field.velocity), None, |_, u, _| {
        sqrt(u[0] * u[0] + u[1] * u[1])
    }) / area
}

/// Largest speed at the P2 nodes of wall elements.
pub fn max_wall_speed(mesh: &Mesh, dofs: &DofMap, field: &FlowField) -> f64 {
    let mut m: f64 = 0.0;
    for k in (0..mesh.num_triangles()).filter(|&k| mesh.element_region[k].is_wall()) {
        for &n in dofs.element_p2(k) {
            let (ux, uy) = (field.velocity[2 * n], field.velocity[2 * n + 1]);
            m = m.max(sqrt(ux * ux + uy * uy));
        }
    }
    m
}

// 3-point Gauss-Legendre on [0, 1]
const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// `∫_Γ f(x, u, p, n_out) ds` over boundary edges with `tag`, where `p`
/// is the P1 pressure trace and `n_out` the outward normal.
pub fn boundary_integral(
    mesh: &Mesh,
    field: &FlowField,
    tag: BoundaryTag,
    f: impl Fn([f64; 2], [f64; 2], f64, [f64; 2]) -> f64,
) -> f64 {
    let nv = mesh.num_vertices();
    let mut total = 0.0;
    for be in mesh.boundary_edges.iter().filter(|b| b.tag == tag) {
        let [a, b] = mesh.edges[be.edge];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = hypot(pb[0] - pa[0], pb[1] - pa[1]);
        let inward = be.side.inward_normal();
        let n_out = [-inward[0], -inward[1]];
        let m = nv + be.edge;
        for (s, w) in GAUSS3 {
            // 1D quadratic Lagrange on (a, m, b)
            let na = (1.0 - s) * (1.0 - 2.0 * s);
            let nm = 4.0 * s * (1.0 - s);
            let nb = s * (2.0 * s - 1.0);
            let mut u = [0.0; 2];
            for c in 0..2 {
                u[c] = na * field.velocity[2 * a + c] + nm * field.velocity[2 * m + c] + nb * field.velocity[2 * b + c];
            }
            let p = (1.0 - s) * field.pressure[a] + s * field.pressure[b];
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            total += w * len * f(x, u, p, n_out);
        }
    }
    total
}

/// Outward volume flux `∫ u · n_out ds` through segments with `tag`.
pub fn boundary_flux(mesh: &Mesh, field: &FlowField, tag: BoundaryTag) -> f64 {
    boundary_integral(mesh, field, tag, |_, u, _, n| u[0] * n[0] + u[1] * n[1])
}

/// Fan power per unit depth, `∫_{outlets} ‖u‖ (p - p_A) ds` in W/m, using
/// `density` to convert the kinematic pressure back to Pa.
pub fn outlet_power(mesh: &Mesh, field: &FlowField, density: f64) -> f64 {
    [BoundaryTag::Outlet1, BoundaryTag::Outlet2]
        .into_iter()
        .map(|tag| {
            boundary_integral(mesh, field, tag, |_, u, p, _| {
                sqrt(u[0] * u[0] + u[1] * u[1]) * density * p
            })
        })
        .sum()
}
