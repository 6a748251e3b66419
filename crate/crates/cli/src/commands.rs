//! The `simulate`, `optimize`, `sweep` and `mesh-info` commands.

use std::path::{Path, PathBuf};

use hvac_core::control::{optimize, ControlProblem, ControlVector, CostBreakdown, IterationRecord, OptimizationResult};
use hvac_core::flow::{mean_air_speed, FlowField};
use hvac_core::fem::DofMap;
use hvac_core::mesh::{generate, Mesh, CANONICAL_ZONE_COUNT};
use hvac_core::report::{energy_report, EnergyReport};
use hvac_core::thermal::ThermalTrajectory;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ScenarioConfig, ZoneSpec};
use crate::error::CliError;
use crate::output::{create_dir, num, opt_num, write_flow, write_json, write_temperature, Csv};
use crate::stats::{summarize, Summary};

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub zone: Option<ZoneSpec>,
    pub theta: Option<f64>,
    pub sequential: bool,
}

impl Overrides {
    pub fn apply(&self, mut cfg: ScenarioConfig) -> Result<(ScenarioConfig, PathBuf), CliError> {
        if let Some(z) = self.zone {
            cfg.zone = z;
        }
        if let Some(t) = self.theta {
            cfg.theta = t;
        }
        cfg.validate()?;
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
        Ok((cfg, out))
    }
}

pub fn build_mesh(cfg: &ScenarioConfig) -> Result<Mesh, CliError> {
    generate(&cfg.floor_plan(), cfg.mesh.target_h, cfg.mesh.pattern).map_err(|e| CliError::Config(format!("mesh: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub fan_speed_1: f64,
    pub fan_speed_2: f64,
    pub newton_iterations: usize,
    pub residual_norm: f64,
    pub mean_air_speed: f64,
    /// W per metre of depth.
    pub fan_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub zone: String,
    pub cost: CostBreakdown,
    pub energy: EnergyReport,
    /// Zone average at the final time, °C relative to ambient.
    pub final_zone_average: f64,
    /// Same, absolute °C.
    pub final_zone_temperature: f64,
    pub flow: FlowSummary,
    /// Spectral-radius estimate when the explicit scheme is unstable.
    pub stability_warning: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    #[serde(flatten)]
    pub run: RunReport,
    pub controls: ControlVector,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn flow_summary(mesh: &Mesh, flow: &FlowField, controls: &ControlVector, fan_power: f64) -> FlowSummary {
    FlowSummary {
        fan_speed_1: controls.fan_speed_1,
        fan_speed_2: controls.fan_speed_2,
        newton_iterations: flow.newton_iterations,
        residual_norm: flow.residual_norm,
        mean_air_speed: mean_air_speed(mesh, &DofMap::new(mesh), flow),
        fan_power,
    }
}

#[allow(clippy::too_many_arguments)]
fn run_report(
    cfg: &ScenarioConfig,
    problem: &ControlProblem<'_>,
    cost: CostBreakdown,
    trajectory: &ThermalTrajectory,
    flow: &FlowField,
    controls: &ControlVector,
    fan_power: f64,
) -> RunReport {
    let mesh = problem.mesh();
    let energy = energy_report(
        mesh,
        problem.zone_elements(),
        problem.zone(),
        trajectory,
        controls,
        fan_power,
        cfg.target(),
    );
    let avg = problem.zone().average(&trajectory.last().eta);
    RunReport {
        zone: cfg.zone.label(),
        cost,
        energy,
        final_zone_average: avg,
        final_zone_temperature: cfg.physics.ambient_temperature + avg,
        flow: flow_summary(mesh, flow, controls, fan_power),
        stability_warning: trajectory.warning.map(|w| w.spectral_radius),
    }
}

fn trajectory_csv(problem: &ControlProblem<'_>, trajectory: &ThermalTrajectory, target: f64) -> Csv {
    let zone = problem.zone();
    let mut csv = Csv::new(&["step", "t", "zone_average", "avg_abs_error"]);
    for (k, s) in trajectory.states.iter().enumerate() {
        let err = zone.absolute_deviation(problem.mesh(), problem.zone_elements(), &s.eta, target) / zone.area;
        csv.row([k.to_string(), num(s.t), num(zone.average(&s.eta)), num(err)]);
    }
    csv
}

fn controls_csv(controls: &ControlVector, dt: f64) -> Csv {
    let mut csv = Csv::new(&["step", "t_start", "t_end", "heater1_kw", "heater2_kw"]);
    for (k, (a, b)) in controls.heater1.iter().zip(&controls.heater2).enumerate() {
        csv.row([k.to_string(), num(k as f64 * dt), num((k + 1) as f64 * dt), num(*a), num(*b)]);
    }
    csv
}

fn iterations_csv(log: &[IterationRecord]) -> Csv {
    let mut csv = Csv::new(&[
        "iter",
        "cost",
        "tracking",
        "heater_penalty",
        "fan_penalty",
        "projected_gradient",
        "line_search_steps",
    ]);
    for r in log {
        csv.row([
            r.iteration.to_string(),
            num(r.cost.total),
            num(r.cost.tracking),
            num(r.cost.heater_penalty),
            num(r.cost.fan_penalty),
            num(r.projected_gradient),
            r.line_search_steps.to_string(),
        ]);
    }
    csv
}

/// Writes `trajectory.csv`, `controls.csv`, `flow.{vtk,csv}` and
/// temperature snapshots at the start, middle and end.
fn write_fields(
    dir: &Path,
    cfg: &ScenarioConfig,
    problem: &ControlProblem<'_>,
    trajectory: &ThermalTrajectory,
    flow: &FlowField,
    controls: &ControlVector,
) -> Result<(), CliError> {
    let mesh = problem.mesh();
    trajectory_csv(problem, trajectory, cfg.target()).write(&dir.join("trajectory.csv"))?;
    controls_csv(controls, trajectory.dt).write(&dir.join("controls.csv"))?;
    write_flow(dir, mesh, flow, cfg.physics.density)?;
    let k = trajectory.num_steps();
    let mut snaps = vec![0, k / 2, k];
    snaps.dedup();
    for i in snaps {
        let s = &trajectory.states[i];
        write_temperature(&dir.join(format!("temperature_{i:04}.vtk")), mesh, &s.eta, s.t)?;
    }
    Ok(())
}

pub fn simulate(cfg: &ScenarioConfig, out: &Path) -> Result<RunReport, CliError> {
    let mesh = build_mesh(cfg)?;
    let problem = ControlProblem::new(&mesh, cfg.problem_settings())?;
    let controls = cfg.controls()?;
    if !controls.is_feasible(&cfg.bounds) {
        return Err(CliError::Config("controls lie outside the configured bounds".into()));
    }
    let eval = problem.evaluate(&controls)?;
    create_dir(out)?;
    write_json(&out.join("config.json"), cfg)?;
    write_fields(out, cfg, &problem, &eval.trajectory, &eval.state.flow, &controls)?;
    let report = run_report(
        cfg,
        &problem,
        eval.cost,
        &eval.trajectory,
        &eval.state.flow,
        &controls,
        eval.state.fan_power,
    );
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

fn optimize_case(cfg: &ScenarioConfig) -> Result<(Mesh, OptimizationResult), CliError> {
    let mesh = build_mesh(cfg)?;
    let result = {
        let problem = ControlProblem::new(&mesh, cfg.problem_settings())?;
        let start = cfg.controls()?;
        optimize(&problem, &start, &cfg.optimizer_settings())?
    };
    Ok((mesh, result))
}

fn optimize_report(cfg: &ScenarioConfig, mesh: &Mesh, r: &OptimizationResult) -> Result<OptimizeReport, CliError> {
    let problem = ControlProblem::new(mesh, cfg.problem_settings())?;
    Ok(OptimizeReport {
        run: run_report(cfg, &problem, r.cost, &r.trajectory, &r.flow, &r.controls, r.fan_power),
        controls: r.controls.clone(),
        gradient_norm: r.gradient_norm,
        iterations: r.iterations,
        converged: r.converged,
    })
}

pub fn optimize_command(cfg: &ScenarioConfig, out: &Path) -> Result<OptimizeReport, CliError> {
    let (mesh, r) = optimize_case(cfg)?;
    let report = optimize_report(cfg, &mesh, &r)?;
    create_dir(out)?;
    write_json(&out.join("config.json"), cfg)?;
    let problem = ControlProblem::new(&mesh, cfg.problem_settings())?;
    write_fields(out, cfg, &problem, &r.trajectory, &r.flow, &r.controls)?;
    iterations_csv(&r.log).write(&out.join("iterations.csv"))?;
    write_json(&out.join("result.json"), &report)?;
    Ok(report)
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub zone: String,
    /// `"ok"` or the failure message.
    pub status: String,
    pub report: Option<OptimizeReport>,
    /// Zone energy per degree divided by the whole-apartment value.
    pub ratio_to_whole: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    pub zones_succeeded: usize,
    /// Over the zoned runs only.
    pub avg_abs_error: Option<Summary>,
    pub energy_per_degree: Option<Summary>,
    pub whole_avg_abs_error: Option<f64>,
    pub whole_energy_per_degree: Option<f64>,
}

/// Every canonical zone plus the whole apartment.
pub fn sweep(cfg: &ScenarioConfig, out: &Path, sequential: bool) -> Result<SweepSummary, CliError> {
    let cases: Vec<ZoneSpec> = (0..CANONICAL_ZONE_COUNT)
        .map(ZoneSpec::Index)
        .chain(std::iter::once(ZoneSpec::Whole))
        .collect();
    let run = |zone: &ZoneSpec| -> (ZoneSpec, Result<(ScenarioConfig, Mesh, OptimizationResult), CliError>) {
        let mut c = cfg.clone();
        c.zone = *zone;
        let r = c.validate().and_then(|_| optimize_case(&c)).map(|(m, r)| (c, m, r));
        (*zone, r)
    };
    let results: Vec<_> = if sequential {
        cases.iter().map(run).collect()
    } else {
        cases.par_iter().map(run).collect()
    };
    create_dir(out)?;
    let mut rows = Vec::with_capacity(results.len());
    for (zone, res) in results {
        let name = match zone {
            ZoneSpec::Index(i) => format!("zone_{i:02}"),
            _ => "whole".to_string(),
        };
        let row = match res.and_then(|(c, mesh, r)| {
            let rep = optimize_report(&c, &mesh, &r)?;
            let dir = out.join(&name);
            create_dir(&dir)?;
            iterations_csv(&r.log).write(&dir.join("iterations.csv"))?;
            let problem = ControlProblem::new(&mesh, c.problem_settings())?;
            trajectory_csv(&problem, &r.trajectory, c.target()).write(&dir.join("trajectory.csv"))?;
            controls_csv(&r.controls, r.trajectory.dt).write(&dir.join("controls.csv"))?;
            write_json(&dir.join("result.json"), &rep)?;
            Ok(rep)
        }) {
            Ok(rep) => SweepRow {
                zone: zone.label(),
                status: "ok".into(),
                report: Some(rep),
                ratio_to_whole: None,
            },
            Err(e @ CliError::Io { .. }) => return Err(e),
            Err(e) => SweepRow {
                zone: zone.label(),
                status: e.to_string(),
                report: None,
                ratio_to_whole: None,
            },
        };
        rows.push(row);
    }
    let whole = rows.last().and_then(|r| r.report.as_ref()).map(|r| r.run.energy);
    let whole_epd = whole.and_then(|e| e.energy_per_degree);
    for row in rows.iter_mut() {
        row.ratio_to_whole = match (row.report.as_ref().and_then(|r| r.run.energy.energy_per_degree), whole_epd) {
            (Some(z), Some(w)) if w > 0.0 => Some(z / w),
            _ => None,
        };
    }
    let zoned = &rows[..CANONICAL_ZONE_COUNT];
    let succeeded = zoned.iter().filter(|r| r.report.is_some()).count();
    let errors: Vec<f64> = zoned.iter().filter_map(|r| r.report.as_ref()).map(|r| r.run.energy.avg_abs_error_tf).collect();
    let epd: Vec<f64> = zoned
        .iter()
        .filter_map(|r| r.report.as_ref().and_then(|r| r.run.energy.energy_per_degree))
        .collect();
    let summary = SweepSummary {
        zones_succeeded: succeeded,
        avg_abs_error: summarize(&errors),
        energy_per_degree: summarize(&epd),
        whole_avg_abs_error: whole.map(|e| e.avg_abs_error_tf),
        whole_energy_per_degree: whole_epd,
        rows,
    };
    summary_csv(&summary).write(&out.join("summary.csv"))?;
    write_json(&out.join("summary.json"), &summary)?;
    if succeeded < 15 {
        return Err(CliError::Sweep {
            succeeded,
            total: CANONICAL_ZONE_COUNT,
        });
    }
    Ok(summary)
}

pub fn summary_csv(summary: &SweepSummary) -> Csv {
    let mut csv = Csv::new(&[
        "zone",
        "status",
        "avg_abs_error_tf",
        "heater1_energy_wh",
        "heater2_energy_wh",
        "fan_energy_wh",
        "total_energy_wh",
        "temperature_change",
        "energy_per_degree",
        "ratio_to_whole",
        "converged",
        "iterations",
    ]);
    for row in &summary.rows {
        let status = row.status.replace([',', '\n'], ";");
        match &row.report {
            Some(r) => {
                let e = &r.run.energy;
                csv.row([
                    row.zone.clone(),
                    status,
                    num(e.avg_abs_error_tf),
                    num(e.heater1_energy),
                    num(e.heater2_energy),
                    num(e.fan_energy),
                    num(e.total),
                    num(e.temperature_change),
                    opt_num(e.energy_per_degree),
                    opt_num(row.ratio_to_whole),
                    r.converged.to_string(),
                    r.iterations.to_string(),
                ]);
            }
            None => {
                let mut cells = vec![row.zone.clone(), status];
                cells.extend(std::iter::repeat_n(String::new(), 10));
                csv.row(cells);
            }
        }
    }
    csv
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshInfo {
    pub vertices: usize,
    pub triangles: usize,
    pub edges: usize,
    pub temperature_dofs: usize,
    pub pressure_dofs: usize,
    pub velocity_dofs: usize,
    pub area: f64,
    pub zone_area: f64,
    pub zone_elements: usize,
}

pub fn mesh_info(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<MeshInfo, CliError> {
    let mesh = build_mesh(cfg)?;
    let counts = mesh.node_counts();
    let info = MeshInfo {
        vertices: mesh.num_vertices(),
        triangles: mesh.num_triangles(),
        edges: mesh.num_edges(),
        temperature_dofs: counts.temperature,
        pressure_dofs: counts.pressure,
        velocity_dofs: counts.velocity,
        area: mesh.total_area(),
        zone_area: mesh.zone_area(),
        zone_elements: mesh.zone_elements.len(),
    };
    if let Some(dir) = out {
        create_dir(dir)?;
        crate::output::VtkWriter::new(&mesh, "mesh").write(&dir.join("mesh.vtk"))?;
        write_json(&dir.join("mesh.json"), &info)?;
    }
    Ok(info)
}
