//! Reduced-space optimal control: flow and temperature are solved inside
//! every cost evaluation, heater gradients come from the discrete adjoint
//! and fan gradients from finite differences.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::error::{Error, Result};
use crate::fem::Coefficients;
use crate::flow::{outlet_power, FlowBcs, FlowField, FlowProblem, NewtonSettings};
use crate::math::{dot, round};
use crate::mesh::Mesh;
use crate::thermal::{simulate, ThermalStepper, ThermalSystem, ThermalTrajectory, ZoneIntegrals};

/// Time horizon split into equal steps.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Horizon {
    /// Final time, seconds.
    pub t_f: f64,
    /// Step, seconds.
    pub dt: f64,
}

impl Default for Horizon {
    fn default() -> Self {
        Self { t_f: 300.0, dt: 10.0 }
    }
}

impl Horizon {
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.t_f > 0.0 && self.t_f.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon t_f = {} and dt = {} must be positive",
                self.t_f, self.dt
            )));
        }
        let k = round(self.t_f / self.dt);
        if k < 1.0 || (k * self.dt - self.t_f).abs() > 1e-9 * self.t_f {
            return Err(Error::InvalidParameter(format!(
                "t_f = {} is not a multiple of dt = {}",
                self.t_f, self.dt
            )));
        }
        Ok(k as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostWeights {
    /// Weight on `∫ v² dt`, summed over both heaters.
    pub heater: f64,
    /// Weight on the squared fan speeds.
    pub fan: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { heater: 0.002, fan: 0.001 }
    }
}

/// Box constraints on the controls.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bounds {
    /// m/s.
    pub fan_min: f64,
    pub fan_max: f64,
    /// kW, per heater.
    pub heater1_min: f64,
    pub heater1_max: f64,
    pub heater2_min: f64,
    pub heater2_max: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            fan_min: 0.1,
            fan_max: 1.0,
            heater1_min: 0.0,
            heater1_max: 5.0,
            heater2_min: 0.0,
            heater2_max: 5.0,
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        for (name, lo, hi) in [
            ("fan", self.fan_min, self.fan_max),
            ("heater 1", self.heater1_min, self.heater1_max),
            ("heater 2", self.heater2_min, self.heater2_max),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParameter(format!("{name} box [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }

    /// Lower and upper bound vectors in [`ControlVector::to_flat`] order.
    pub fn flat(&self, steps: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![self.fan_min, self.fan_min];
        let mut hi = vec![self.fan_max, self.fan_max];
        lo.extend(core::iter::repeat_n(self.heater1_min, steps));
        hi.extend(core::iter::repeat_n(self.heater1_max, steps));
        lo.extend(core::iter::repeat_n(self.heater2_min, steps));
        hi.extend(core::iter::repeat_n(self.heater2_max, steps));
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControlVector {
    pub fan_speed_1: f64,
    pub fan_speed_2: f64,
    /// kW per step.
    pub heater1: Vec<f64>,
    pub heater2: Vec<f64>,
}

impl ControlVector {
    pub fn constant(fan: f64, heater1: f64, heater2: f64, steps: usize) -> Self {
        Self {
            fan_speed_1: fan,
            fan_speed_2: fan,
            heater1: vec![heater1; steps],
            heater2: vec![heater2; steps],
        }
    }

    /// Every control at its lower bound.
    pub fn lower_bounds(bounds: &Bounds, steps: usize) -> Self {
        Self {
            fan_speed_1: bounds.fan_min,
            fan_speed_2: bounds.fan_min,
            heater1: vec![bounds.heater1_min; steps],
            heater2: vec![bounds.heater2_min; steps],
        }
    }

    pub fn steps(&self) -> usize {
        self.heater1.len()
    }

    /// `[u1, u2, v1_0 .. v1_{K-1}, v2_0 .. v2_{K-1}]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut x = vec![self.fan_speed_1, self.fan_speed_2];
        x.extend_from_slice(&self.heater1);
        x.extend_from_slice(&self.heater2);
        x
    }

    pub fn from_flat(x: &[f64]) -> Result<Self> {
        if x.len() < 2 || (x.len() - 2) % 2 != 0 {
            return Err(Error::InvalidParameter(format!("control vector of length {}", x.len())));
        }
        let k = (x.len() - 2) / 2;
        Ok(Self {
            fan_speed_1: x[0],
            fan_speed_2: x[1],
            heater1: x[2..2 + k].to_vec(),
            heater2: x[2 + k..].to_vec(),
        })
    }

    pub fn is_feasible(&self, bounds: &Bounds) -> bool {
        let (lo, hi) = bounds.flat(self.steps());
        self.heater1.len() == self.heater2.len()
            && self.to_flat().iter().zip(lo.iter().zip(&hi)).all(|(x, (l, h))| l <= x && x <= h)
    }

    pub fn projected(&self, bounds: &Bounds) -> Self {
        let (lo, hi) = bounds.flat(self.steps());
        let x: Vec<f64> = self.to_flat().iter().zip(lo.iter().zip(&hi)).map(|(x, (l, h))| x.clamp(*l, *h)).collect();
        Self::from_flat(&x).expect("same length")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostBreakdown {
    /// `∫∫_z (T - T*)²`, °C² m² s.
    pub tracking: f64,
    pub heater_penalty: f64,
    pub fan_penalty: f64,
    pub total: f64,
}

/// Everything a cost evaluation needs besides the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSettings {
    pub coefficients: Coefficients,
    pub horizon: Horizon,
    pub theta: f64,
    /// Target temperature relative to ambient, °C.
    pub target: f64,
    pub weights: CostWeights,
    pub bounds: Bounds,
    pub newton: NewtonSettings,
    /// Finite-difference step for the fan speeds, m/s.
    pub fan_fd_step: f64,
}

impl Default for ProblemSettings {
    fn default() -> Self {
        Self {
            coefficients: Coefficients::default(),
            horizon: Horizon::default(),
            theta: 1.0,
            target: 1.0,
            weights: CostWeights::default(),
            bounds: Bounds::default(),
            newton: NewtonSettings::default(),
            fan_fd_step: 1e-3,
        }
    }
}

/// Flow-dependent state shared by all evaluations with the same fan speeds.
#[derive(Debug)]
pub struct FlowState {
    pub flow: FlowField,
    pub stepper: ThermalStepper,
    /// Fan power per unit depth, W/m.
    pub fan_power: f64,
}

/// Cost and state for one control vector.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub cost: CostBreakdown,
    pub trajectory: ThermalTrajectory,
    pub state: Rc<FlowState>,
}

const CACHE_LIMIT: usize = 32;

/// Reduced-space control problem on a fixed mesh and zone.
#[derive(Debug)]
pub struct ControlProblem<'m> {
    mesh: &'m Mesh,
    settings: ProblemSettings,
    steps: usize,
    zone_elements: Vec<usize>,
    zone: ZoneIntegrals,
    cache: RefCell<BTreeMap<(u64, u64), Rc<FlowState>>>,
}

impl<'m> ControlProblem<'m> {
    /// Tracks the temperature over the mesh's zone elements.
    pub fn new(mesh: &'m Mesh, settings: ProblemSettings) -> Result<Self> {
        Self::with_zone(mesh, settings, mesh.zone_elements.clone())
    }

    pub fn with_zone(mesh: &'m Mesh, settings: ProblemSettings, zone_elements: Vec<usize>) -> Result<Self> {
        let steps = settings.horizon.steps()?;
        settings.bounds.validate()?;
        settings.coefficients.validate()?;
        if !(settings.weights.heater >= 0.0 && settings.weights.fan >= 0.0) {
            return Err(Error::InvalidParameter("cost weights must be nonnegative".into()));
        }
        if !(settings.fan_fd_step > 0.0) {
            return Err(Error::InvalidParameter("fan finite-difference step must be positive".into()));
        }
        let zone = ZoneIntegrals::new(mesh, &zone_elements)?;
        Ok(Self {
            mesh,
            settings,
            steps,
            zone_elements,
            zone,
            cache: RefCell::new(BTreeMap::new()),
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn settings(&self) -> &ProblemSettings {
        &self.settings
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn zone_elements(&self) -> &[usize] {
        &self.zone_elements
    }

    pub fn zone(&self) -> &ZoneIntegrals {
        &self.zone
    }

    /// Flow solve and thermal factorization for a pair of fan speeds.
    pub fn flow_state(&self, fan_speed_1: f64, fan_speed_2: f64) -> Result<Rc<FlowState>> {
        let key = (fan_speed_1.to_bits(), fan_speed_2.to_bits());
        if let Some(s) = self.cache.borrow().get(&key) {
            return Ok(s.clone());
        }
        let wrap = |e: Error| Error::FlowFailed {
            fan_speed_1,
            fan_speed_2,
            source: alloc::boxed::Box::new(e),
        };
        let s = &self.settings;
        let bcs = FlowBcs { fan_speed_1, fan_speed_2 };
        let flow = FlowProblem::hvac(self.mesh, &s.coefficients, bcs)
            .and_then(|p| p.solve(&s.newton))
            .map_err(wrap)?;
        let system = ThermalSystem::new(self.mesh, &s.coefficients, &flow.velocity)?;
        let stepper = ThermalStepper::new(&system, s.horizon.dt, s.theta)?;
        let fan_power = outlet_power(self.mesh, &flow, s.coefficients.density);
        let state = Rc::new(FlowState { flow, stepper, fan_power });
        let mut cache = self.cache.borrow_mut();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, state.clone());
        Ok(state)
    }

    fn check(&self, c: &ControlVector) -> Result<()> {
        if c.heater1.len() != self.steps || c.heater2.len() != self.steps {
            return Err(Error::DimensionMismatch {
                expected: self.steps,
                found: c.heater1.len().min(c.heater2.len()),
                context: "heater schedule length",
            });
        }
        Ok(())
    }

    fn time_weight(&self, k: usize) -> f64 {
        let dt = self.settings.horizon.dt;
        if k == 0 || k == self.steps {
            0.5 * dt
        } else {
            dt
        }
    }

    /// Cost of a control vector, trapezoidal in time.
    pub fn evaluate(&self, c: &ControlVector) -> Result<Evaluation> {
        self.check(c)?;
        let state = self.flow_state(c.fan_speed_1, c.fan_speed_2)?;
        let trajectory = simulate(&state.stepper, &c.heater1, &c.heater2)?;
        let mut tracking = 0.0;
        for (k, s) in trajectory.states.iter().enumerate() {
            tracking += self.time_weight(k) * self.zone.squared_deviation(&s.eta, self.settings.target)?;
        }
        let w = &self.settings.weights;
        let dt = self.settings.horizon.dt;
        let heater_penalty = w.heater * dt * (dot(&c.heater1, &c.heater1) + dot(&c.heater2, &c.heater2));
        let fan_penalty = w.fan * (c.fan_speed_1 * c.fan_speed_1 + c.fan_speed_2 * c.fan_speed_2);
        Ok(Evaluation {
            cost: CostBreakdown {
                tracking: tracking.max(0.0),
                heater_penalty,
                fan_penalty,
                total: tracking.max(0.0) + heater_penalty + fan_penalty,
            },
            trajectory,
            state,
        })
    }

    /// `∂J/∂v1_k` and `∂J/∂v2_k` by a backward sweep over the steps.
    pub fn heater_gradient(&self, c: &ControlVector, eval: &Evaluation) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(c)?;
        let stepper = &eval.state.stepper;
        let states = &eval.trajectory.states;
        let target = self.settings.target;
        let k_end = self.steps;
        let scaled_grad = |k: usize| -> Result<Vec<f64>> {
            let mut g = self.zone.squared_deviation_gradient(&states[k].eta, target)?;
            let w = self.time_weight(k);
            g.iter_mut().for_each(|v| *v *= w);
            Ok(g)
        };
        let mut g1 = vec![0.0; k_end];
        let mut g2 = vec![0.0; k_end];
        let mut lambda = scaled_grad(k_end)?;
        for k in (0..k_end).rev() {
            let w = stepper.adjoint_solve(&lambda)?;
            g1[k] = stepper.load_sensitivity(0, &w);
            g2[k] = stepper.load_sensitivity(1, &w);
            if k > 0 {
                let mut next = scaled_grad(k)?;
                for (a, b) in next.iter_mut().zip(stepper.explicit_transpose(&w)?) {
                    *a += b;
                }
                lambda = next;
            }
        }
        let pen = 2.0 * self.settings.weights.heater * self.settings.horizon.dt;
        for k in 0..k_end {
            g1[k] += pen * c.heater1[k];
            g2[k] += pen * c.heater2[k];
        }
        Ok((g1, g2))
    }

    /// Central differences in each fan speed, one-sided at the box edges or
    /// when a probe fails to solve.
    pub fn fan_gradient(&self, c: &ControlVector, base_cost: f64) -> Result<[f64; 2]> {
        let b = &self.settings.bounds;
        let h = self.settings.fan_fd_step;
        let mut out = [0.0; 2];
        for (i, slot) in out.iter_mut().enumerate() {
            let x = if i == 0 { c.fan_speed_1 } else { c.fan_speed_2 };
            let probe = |value: f64| -> Result<f64> {
                let mut p = c.clone();
                if i == 0 {
                    p.fan_speed_1 = value;
                } else {
                    p.fan_speed_2 = value;
                }
                Ok(self.evaluate(&p)?.cost.total)
            };
            let up = if x + h <= b.fan_max { Some(probe(x + h)) } else { None };
            let down = if x - h >= b.fan_min { Some(probe(x - h)) } else { None };
            *slot = match (up, down) {
                (Some(Ok(a)), Some(Ok(d))) => (a - d) / (2.0 * h),
                (Some(Ok(a)), _) => (a - base_cost) / h,
                (_, Some(Ok(d))) => (base_cost - d) / h,
                (Some(Err(e)), _) | (_, Some(Err(e))) => return Err(e),
                (None, None) => 0.0,
            };
        }
        Ok(out)
    }

    /// Cost and full gradient in [`ControlVector::to_flat`] order.
    pub fn cost_and_gradient(&self, c: &ControlVector) -> Result<(Evaluation, Vec<f64>)> {
        let eval = self.evaluate(c)?;
        let (g1, g2) = self.heater_gradient(c, &eval)?;
        let fans = self.fan_gradient(c, eval.cost.total)?;
        let mut g = fans.to_vec();
        g.extend(g1);
        g.extend(g2);
        Ok((eval, g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    /// Converged when the projected-gradient ∞-norm is at most
    /// `gradient_tolerance * (1 + |J|)`.
    pub gradient_tolerance: f64,
    /// Converged when the accepted decrease is below this fraction of `|J|`.
    pub relative_decrease: f64,
    /// Stored correction pairs.
    pub memory: usize,
    pub max_backtracks: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            gradient_tolerance: 1e-6,
            relative_decrease: 1e-10,
            memory: 10,
            max_backtracks: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    pub iteration: usize,
    pub cost: CostBreakdown,
    pub projected_gradient: f64,
    /// Step halvings taken to reach this iterate.
    pub line_search_steps: usize,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub controls: ControlVector,
    pub cost: CostBreakdown,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trajectory: ThermalTrajectory,
    pub flow: FlowField,
    pub fan_power: f64,
    pub log: Vec<IterationRecord>,
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..x.len() {
        let p = (x[i] - g[i]).clamp(lo[i], hi[i]) - x[i];
        m = m.max(p.abs());
    }
    m
}

/// Search direction by the two-loop recursion restricted to free variables.
fn lbfgs_direction(g: &[f64], free: &[bool], pairs: &[(Vec<f64>, Vec<f64>)]) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(a, &f)| if f { *a } else { 0.0 }).collect() };
    let mut q = mask(g);
    let mut alphas = Vec::with_capacity(pairs.len());
    let mut used = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let (s, y) = (mask(s), mask(y));
        let sy = dot(&s, &y);
        if sy <= 1e-12 * crate::math::sqrt(dot(&s, &s) * dot(&y, &y)) {
            continue;
        }
        let rho = 1.0 / sy;
        let a = rho * dot(&s, &q);
        q.iter_mut().zip(&y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
        used.push((s, y, rho));
    }
    let gamma = match used.first() {
        Some((s, y, _)) => dot(s, y) / dot(y, y),
        None => {
            let gmax = crate::math::norm_inf(&q);
            if gmax > 0.0 {
                1.0 / gmax
            } else {
                1.0
            }
        }
    };
    q.iter_mut().for_each(|v| *v *= gamma);
    for ((s, y, rho), a) in used.iter().zip(&alphas).rev() {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Projected limited-memory quasi-Newton with Armijo backtracking along the
/// projection arc. Returns the best feasible point found.
pub fn optimize(problem: &ControlProblem<'_>, start: &ControlVector, settings: &OptimizerSettings) -> Result<OptimizationResult> {
    let bounds = problem.settings().bounds;
    let (lo, hi) = bounds.flat(problem.steps());
    let mut x = start.projected(&bounds).to_flat();
    let (mut eval, mut g) = problem.cost_and_gradient(&ControlVector::from_flat(&x)?)?;
    let mut pg = projected_gradient_norm(&x, &g, &lo, &hi);
    let mut log = vec![IterationRecord {
        iteration: 0,
        cost: eval.cost,
        projected_gradient: pg,
        line_search_steps: 0,
    }];
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let project = |v: Vec<f64>| -> Vec<f64> { v.into_iter().zip(lo.iter().zip(&hi)).map(|(a, (l, h))| a.clamp(*l, *h)).collect() };

    while iterations < settings.max_iterations {
        let j = eval.cost.total;
        if pg <= settings.gradient_tolerance * (1.0 + j.abs()) {
            converged = true;
            break;
        }
        // variables held at a bound by the gradient
        let free: Vec<bool> = (0..x.len())
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        let mut d = lbfgs_direction(&g, &free, &pairs);
        if dot(&d, &g) >= 0.0 {
            pairs.clear();
            d = lbfgs_direction(&g, &free, &pairs);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for halvings in 0..=settings.max_backtracks {
            let trial = project(x.iter().zip(&d).map(|(a, b)| a + step * b).collect());
            let decrease_model: f64 = trial.iter().zip(&x).zip(&g).map(|((t, xi), gi)| gi * (t - xi)).sum();
            if decrease_model < 0.0 {
                let ct = ControlVector::from_flat(&trial)?;
                let et = problem.evaluate(&ct)?;
                if et.cost.total <= j + 1e-4 * decrease_model {
                    accepted = Some((trial, halvings));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, halvings)) = accepted else {
            if pairs.is_empty() {
                break;
            }
            // retry along the projected steepest-descent direction
            pairs.clear();
            continue;
        };
        let (eval_new, g_new) = problem.cost_and_gradient(&ControlVector::from_flat(&x_new)?)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 * crate::math::sqrt(dot(&s, &s) * dot(&y, &y)) {
            pairs.push((s, y));
            if pairs.len() > settings.memory {
                pairs.remove(0);
            }
        }
        let decrease = j - eval_new.cost.total;
        x = x_new;
        eval = eval_new;
        g = g_new;
        pg = projected_gradient_norm(&x, &g, &lo, &hi);
        iterations += 1;
        log.push(IterationRecord {
            iteration: iterations,
            cost: eval.cost,
            projected_gradient: pg,
            line_search_steps: halvings,
        });
        if decrease < settings.relative_decrease * j.abs() {
            converged = true;
            break;
        }
    }
    if !converged && pg <= settings.gradient_tolerance * (1.0 + eval.cost.total.abs()) {
        converged = true;
    }
    Ok(OptimizationResult {
        controls: ControlVector::from_flat(&x)?,
        cost: eval.cost,
        gradient_norm: pg,
        iterations,
        converged,
        trajectory: eval.trajectory.clone(),
        flow: eval.state.flow.clone(),
        fan_power: eval.state.fan_power,
        log,
    })
}
