//! Lagrange finite elements: quadrature, shape functions, dof numbering and
//! operator assembly.

pub mod assembly;
pub mod basis;
mod dofmap;
pub mod quadrature;

pub use assembly::{
    assemble_flow, assemble_temperature, convection, convection_jacobian, heater_load, Coefficients,
    FlowOperators, TemperatureOperators,
};
pub use dofmap::DofMap;
pub use quadrature::{quadrature, QuadPoint};
