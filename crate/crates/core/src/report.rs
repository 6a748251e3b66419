//! Energy and error statistics of a controlled run.

use crate::control::ControlVector;
use crate::mesh::Mesh;
use crate::thermal::{ThermalTrajectory, ZoneIntegrals};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyReport {
    /// Wh.
    pub heater_energy: f64,
    pub heater1_energy: f64,
    pub heater2_energy: f64,
    /// Wh, from gauge pressure at the outlets.
    pub fan_energy: f64,
    pub total: f64,
    /// Mean of `|T - T*|` over the zone at the final time, °C.
    pub avg_abs_error_tf: f64,
    /// Change of the zone-average temperature over the horizon, °C.
    pub temperature_change: f64,
    /// Wh/°C; `None` when the temperature change is at most 0.01 °C.
    pub energy_per_degree: Option<f64>,
}

/// Heater energy by the rectangle rule over steps, fan energy as constant
/// power (W per metre of depth) over the horizon.
pub fn energy_report(
    mesh: &Mesh,
    zone_elements: &[usize],
    zone: &ZoneIntegrals,
    trajectory: &ThermalTrajectory,
    controls: &ControlVector,
    fan_power: f64,
    target: f64,
) -> EnergyReport {
    let dt = trajectory.dt;
    let t_f = dt * trajectory.num_steps() as f64;
    let wh = |kw: &[f64]| kw.iter().sum::<f64>() * 1000.0 * dt / 3600.0;
    let heater1_energy = wh(&controls.heater1);
    let heater2_energy = wh(&controls.heater2);
    let heater_energy = heater1_energy + heater2_energy;
    let fan_energy = fan_power.max(0.0) * t_f / 3600.0;
    let total = heater_energy + fan_energy;
    let last = &trajectory.last().eta;
    let avg_abs_error_tf = zone.absolute_deviation(mesh, zone_elements, last, target) / zone.area;
    let temperature_change = zone.average(last) - zone.average(&trajectory.states[0].eta);
    let energy_per_degree = (temperature_change > 0.01).then(|| total / temperature_change);
    EnergyReport {
        heater_energy,
        heater1_energy,
        heater2_energy,
        fan_energy,
        total,
        avg_abs_error_tf,
        temperature_change,
        energy_per_degree,
    }
}
