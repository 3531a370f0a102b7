//! Coupled bulk-surface finite element simulator of flow-driven membrane
//! protein polarization in a 2-D cell cross-section.
//!
//! The bulk problem is a pressure-driven Darcy flow in an elliptical cell
//! with an impermeable circular nucleus; the surface problem is a
//! semi-implicit advection-reaction-diffusion equation for the membrane-bound
//! protein density on the cell boundary curve. The two are coupled one-way:
//! the stationary flow field is traced onto the boundary and drives
//! advection and desorption of the surface species.

pub mod darcy;
pub mod fem2d;
pub mod kinetics;
pub mod geometry;
pub mod harness;
pub mod mesh;
pub mod nondim;
pub mod oracles;
pub mod surface_ezrin;
