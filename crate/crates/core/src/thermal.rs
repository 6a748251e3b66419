//! θ-scheme time stepping of the temperature equation for a frozen flow.
//!
//! Temperatures are relative to the ambient value, so every boundary dof is
//! pinned to zero.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fem::assembly::p1_mass;
use crate::fem::{assemble_temperature, heater_load, Coefficients, DofMap};
use crate::math::{dot, exp, ln, sqrt};
use crate::mesh::{Mesh, Region};
use crate::sparse::{CsrMatrix, LuFactorization};

/// Semi-discrete system `M η' + (K + C) η = v1 L1 + v2 L2` with boundary
/// dofs removed.
#[derive(Debug, Clone)]
pub struct ThermalSystem {
    pub mass: CsrMatrix,
    /// Diffusion plus advection.
    pub transport: CsrMatrix,
    pub heater_loads: [Vec<f64>; 2],
    pub boundary: Vec<bool>,
}

impl ThermalSystem {
    pub fn new(mesh: &Mesh, coeffs: &Coefficients, velocity: &[f64]) -> Result<Self> {
        coeffs.validate()?;
        let dofs = DofMap::new(mesh);
        let ops = assemble_temperature(mesh, &dofs, coeffs, velocity)?;
        let heater = |r| heater_load(mesh, r).or_else(|_| Ok::<_, Error>(vec![0.0; mesh.num_vertices()]));
        Ok(Self {
            transport: ops.diffusion.linear_combination(1.0, &ops.advection, 1.0)?,
            mass: ops.mass,
            heater_loads: [heater(Region::Heater1)?, heater(Region::Heater2)?],
            boundary: dofs.boundary_p1_mask(mesh),
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.mass.nrows()
    }

    /// `sqrt(ηᵀ M η)`.
    pub fn mass_norm(&self, eta: &[f64]) -> Result<f64> {
        Ok(sqrt(dot(eta, &self.mass.spmv(eta)?).max(0.0)))
    }
}

/// Raised when the explicit scheme amplifies some mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityWarning {
    /// Power-iteration estimate of the transition spectral radius.
    pub spectral_radius: f64,
}

/// Factorized step `S η⁺ = P (R η + dt (v1 L1 + v2 L2))` where
/// `S = M + θ dt A`, `R = M - (1 - θ) dt A` and `P` zeroes boundary rows.
#[derive(Debug, Clone)]
pub struct ThermalStepper {
    dt: f64,
    theta: f64,
    lu: LuFactorization,
    explicit: CsrMatrix,
    loads: [Vec<f64>; 2],
    boundary: Vec<bool>,
    warning: Option<StabilityWarning>,
}

impl ThermalStepper {
    pub fn new(system: &ThermalSystem, dt: f64, theta: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step {dt} must be positive")));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta {theta} outside [0, 1]")));
        }
        let implicit = system
            .mass
            .linear_combination(1.0, &system.transport, theta * dt)?
            .with_identity_rows(&system.boundary)?;
        let explicit = system.mass.linear_combination(1.0, &system.transport, -(1.0 - theta) * dt)?;
        let mut stepper = Self {
            dt,
            theta,
            lu: LuFactorization::new(&implicit)?,
            explicit,
            loads: system.heater_loads.clone(),
            boundary: system.boundary.clone(),
            warning: None,
        };
        if theta == 0.0 {
            let rho = stepper.spectral_radius_estimate(200)?;
            if rho > 1.0 + 1e-9 {
                stepper.warning = Some(StabilityWarning { spectral_radius: rho });
            }
        }
        Ok(stepper)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn num_dofs(&self) -> usize {
        self.boundary.len()
    }

    pub fn warning(&self) -> Option<StabilityWarning> {
        self.warning
    }

    fn pin(&self, v: &mut [f64]) {
        for (x, &b) in v.iter_mut().zip(&self.boundary) {
            if b {
                *x = 0.0;
            }
        }
    }

    /// One step from `eta` with heater powers `v1`, `v2` (kW).
    pub fn step(&self, eta: &[f64], v1: f64, v2: f64) -> Result<Vec<f64>> {
        let mut rhs = self.explicit.spmv(eta)?;
        for ((r, l1), l2) in rhs.iter_mut().zip(&self.loads[0]).zip(&self.loads[1]) {
            *r += self.dt * (v1 * l1 + v2 * l2);
        }
        self.pin(&mut rhs);
        self.lu.solve(&rhs)
    }

    /// Homogeneous transition `η ↦ S⁻¹ P R η`.
    pub fn transition(&self, eta: &[f64]) -> Result<Vec<f64>> {
        self.step(eta, 0.0, 0.0)
    }

    /// `P S⁻ᵀ μ`: the backward solve shared by the transposed transition
    /// and the load sensitivities.
    pub fn adjoint_solve(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let mut w = self.lu.solve_transpose(mu)?;
        self.pin(&mut w);
        Ok(w)
    }

    /// `Rᵀ w`, completing the transposed transition after [`Self::adjoint_solve`].
    pub fn explicit_transpose(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.explicit.spmv_transpose(w)
    }

    /// `dt L_iᵀ w` for heater `i` (0 or 1).
    pub fn load_sensitivity(&self, heater: usize, w: &[f64]) -> f64 {
        self.dt * dot(&self.loads[heater], w)
    }

    fn spectral_radius_estimate(&self, iterations: usize) -> Result<f64> {
        let n = self.num_dofs();
        // deterministic start with components on many modes
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
        self.pin(&mut x);
        let norm = |v: &[f64]| sqrt(dot(v, v));
        let mut log_growth = 0.0;
        let mut counted = 0;
        let nx = norm(&x);
        if nx == 0.0 {
            return Ok(0.0);
        }
        x.iter_mut().for_each(|v| *v /= nx);
        for it in 0..iterations {
            let y = self.transition(&x)?;
            let ny = norm(&y);
            if ny == 0.0 {
                return Ok(0.0);
            }
            if it >= iterations / 2 {
                log_growth += ln(ny);
                counted += 1;
            }
            x = y.into_iter().map(|v| v / ny).collect();
        }
        Ok(exp(log_growth / counted as f64))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    /// Relative temperature at the vertices, °C.
    pub eta: Vec<f64>,
    /// Seconds.
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalTrajectory {
    /// `K + 1` states at `t_k = k dt`.
    pub states: Vec<ThermalState>,
    pub dt: f64,
    pub warning: Option<StabilityWarning>,
}

impl ThermalTrajectory {
    pub fn num_steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn last(&self) -> &ThermalState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Runs `v1.len()` steps from `eta0`.
pub fn simulate_from(stepper: &ThermalStepper, eta0: Vec<f64>, v1: &[f64], v2: &[f64]) -> Result<ThermalTrajectory> {
    if v1.len() != v2.len() {
        return Err(Error::DimensionMismatch {
            expected: v1.len(),
            found: v2.len(),
            context: "heater schedules",
        });
    }
    if eta0.len() != stepper.num_dofs() {
        return Err(Error::DimensionMismatch {
            expected: stepper.num_dofs(),
            found: eta0.len(),
            context: "initial temperature",
        });
    }
    let mut states = Vec::with_capacity(v1.len() + 1);
    states.push(ThermalState { eta: eta0, t: 0.0 });
    for (k, (&a, &b)) in v1.iter().zip(v2).enumerate() {
        let eta = stepper.step(&states[k].eta, a, b)?;
        states.push(ThermalState {
            eta,
            t: (k + 1) as f64 * stepper.dt,
        });
    }
    Ok(ThermalTrajectory {
        states,
        dt: stepper.dt,
        warning: stepper.warning,
    })
}

/// Runs from the ambient state `η0 = 0`.
pub fn simulate(stepper: &ThermalStepper, v1: &[f64], v2: &[f64]) -> Result<ThermalTrajectory> {
    simulate_from(stepper, vec![0.0; stepper.num_dofs()], v1, v2)
}

/// Quadratic pieces of zone integrals: `∫_z η² = ηᵀ M_z η`, `∫_z η = m_zᵀ η`.
#[derive(Debug, Clone)]
pub struct ZoneIntegrals {
    pub mass: CsrMatrix,
    pub load: Vec<f64>,
    pub area: f64,
}

impl ZoneIntegrals {
    pub fn new(mesh: &Mesh, elements: &[usize]) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidGeometry("zone contains no elements".into()));
        }
        let mass = p1_mass(mesh, elements);
        let area: f64 = elements.iter().map(|&k| mesh.triangle_area(k)).sum();
        let mut load = vec![0.0; mesh.num_vertices()];
        for &k in elements {
            let third = mesh.triangle_area(k) / 3.0;
            for &v in &mesh.triangles[k] {
                load[v] += third;
            }
        }
        Ok(Self { mass, load, area })
    }

    pub fn average(&self, eta: &[f64]) -> f64 {
        dot(&self.load, eta) / self.area
    }

    /// `∫_z (η - c)²`.
    pub fn squared_deviation(&self, eta: &[f64], c: f64) -> Result<f64> {
        let quad = dot(eta, &self.mass.spmv(eta)?);
        Ok(quad - 2.0 * c * dot(&self.load, eta) + c * c * self.area)
    }

    /// Gradient of [`Self::squared_deviation`] with respect to `η`.
    pub fn squared_deviation_gradient(&self, eta: &[f64], c: f64) -> Result<Vec<f64>> {
        let mut g = self.mass.spmv(eta)?;
        for (gi, li) in g.iter_mut().zip(&self.load) {
            *gi = 2.0 * (*gi - c * li);
        }
        Ok(g)
    }

    /// `∫_z |η - c|`, exact for the piecewise-linear field.
    pub fn absolute_deviation(&self, mesh: &Mesh, elements: &[usize], eta: &[f64], c: f64) -> f64 {
        elements
            .iter()
            .map(|&k| {
                let tri = mesh.triangles[k];
                let f = [eta[tri[0]] - c, eta[tri[1]] - c, eta[tri[2]] - c];
                linear_abs_integral(f, mesh.triangle_area(k))
            })
            .sum()
    }
}

/// `(1/|z|) ∫_z η` over an element set.
pub fn zone_average(mesh: &Mesh, elements: &[usize], eta: &[f64]) -> Result<f64> {
    Ok(ZoneIntegrals::new(mesh, elements)?.average(eta))
}

/// `∫_T |f|` for a linear `f` with vertex values `f` on a triangle of `area`.
fn linear_abs_integral(f: [f64; 3], area: f64) -> f64 {
    let mean = area * (f[0] + f[1] + f[2]) / 3.0;
    // ∫|f| = ∫f - 2 ∫ min(f, 0)
    mean - 2.0 * negative_part_integral(f, area)
}

fn negative_part_integral(mut f: [f64; 3], area: f64) -> f64 {
    f.sort_by(|a, b| a.total_cmp(b));
    let [a, b, c] = f;
    if a >= 0.0 {
        return 0.0;
    }
    if c <= 0.0 {
        return area * (a + b + c) / 3.0;
    }
    if b <= 0.0 {
        // positive corner (value c) is a sub-triangle cut at ratios a/(a-c), b/(b-c)
        let s = c / (c - a) * c / (c - b);
        return area * (a + b + c) / 3.0 - area * s * c / 3.0;
    }
    // single negative corner
    let s = a / (a - b) * a / (a - c);
    area * s * a / 3.0
}
