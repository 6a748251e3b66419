//! CSV, VTK legacy ASCII and JSON writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hvac_core::flow::FlowField;
use hvac_core::mesh::Mesh;
use serde::Serialize;

use crate::error::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
    text.push('\n');
    write_text(path, &text)
}

/// Comma-separated table with a mandatory header row.
#[derive(Debug, Clone)]
pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            columns: header.len(),
            text,
        }
    }

    /// Appends a row of already formatted cells.
    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let cells: Vec<String> = cells.into_iter().map(|c| c.as_ref().to_string()).collect();
        assert_eq!(cells.len(), self.columns, "csv row width");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_text(path, &self.text)
    }
}

/// Shortest representation that round-trips; always uses `.`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Unstructured-grid VTK file on the P1 vertices of `mesh`.
pub struct VtkWriter<'a> {
    mesh: &'a Mesh,
    point_data: String,
    title: String,
}

impl<'a> VtkWriter<'a> {
    pub fn new(mesh: &'a Mesh, title: &str) -> Self {
        Self {
            mesh,
            point_data: String::new(),
            title: title.replace('\n', " "),
        }
    }

    pub fn scalars(mut self, name: &str, values: &[f64]) -> Self {
        assert_eq!(values.len(), self.mesh.num_vertices());
        let _ = writeln!(self.point_data, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values {
            let _ = writeln!(self.point_data, "{}", num(*v));
        }
        self
    }

    pub fn vectors(mut self, name: &str, values: &[[f64; 2]]) -> Self {
        assert_eq!(values.len(), self.mesh.num_vertices());
        let _ = writeln!(self.point_data, "VECTORS {name} double");
        for v in values {
            let _ = writeln!(self.point_data, "{} {} 0", num(v[0]), num(v[1]));
        }
        self
    }

    pub fn render(&self) -> String {
        let m = self.mesh;
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0\n{}\nASCII\nDATASET UNSTRUCTURED_GRID", self.title);
        let _ = writeln!(s, "POINTS {} double", m.num_vertices());
        for p in &m.vertices {
            let _ = writeln!(s, "{} {} 0", num(p[0]), num(p[1]));
        }
        let _ = writeln!(s, "CELLS {} {}", m.num_triangles(), 4 * m.num_triangles());
        for t in &m.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "CELL_TYPES {}", m.num_triangles());
        for _ in 0..m.num_triangles() {
            s.push_str("5\n");
        }
        let _ = writeln!(s, "CELL_DATA {}\nSCALARS region int 1\nLOOKUP_TABLE default", m.num_triangles());
        for r in &m.element_region {
            let _ = writeln!(s, "{}", r.code());
        }
        if !self.point_data.is_empty() {
            let _ = writeln!(s, "POINT_DATA {}", m.num_vertices());
            s.push_str(&self.point_data);
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_text(path, &self.render())
    }
}

/// Velocity at the vertices (the P2 vertex nodes).
pub fn vertex_velocity(mesh: &Mesh, flow: &FlowField) -> Vec<[f64; 2]> {
    (0..mesh.num_vertices())
        .map(|j| [flow.velocity[2 * j], flow.velocity[2 * j + 1]])
        .collect()
}

/// `flow.vtk` and `flow.csv`; pressure written as gauge Pa.
pub fn write_flow(dir: &Path, mesh: &Mesh, flow: &FlowField, density: f64) -> Result<Vec<PathBuf>, CliError> {
    let velocity = vertex_velocity(mesh, flow);
    let pressure: Vec<f64> = flow.pressure.iter().map(|p| density * p).collect();
    let vtk = dir.join("flow.vtk");
    VtkWriter::new(mesh, "flow field")
        .vectors("velocity", &velocity)
        .scalars("pressure", &pressure)
        .write(&vtk)?;
    let mut csv = Csv::new(&["x", "y", "ux", "uy", "p"]);
    for (j, p) in mesh.vertices.iter().enumerate() {
        csv.row([num(p[0]), num(p[1]), num(velocity[j][0]), num(velocity[j][1]), num(pressure[j])]);
    }
    let path = dir.join("flow.csv");
    csv.write(&path)?;
    Ok(vec![vtk, path])
}

pub fn write_temperature(path: &Path, mesh: &Mesh, eta: &[f64], t: f64) -> Result<(), CliError> {
    VtkWriter::new(mesh, &format!("temperature relative to ambient at t = {t} s"))
        .scalars("temperature", eta)
        .write(path)
}
