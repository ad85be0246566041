//! Numerical laboratory for β-symplectic critical graph surfaces in flat `C²`.
//!
//! A [`GraphPatch`] samples `(x, y) ↦ (x, y, f(x, y), g(x, y))` on a rectangular grid.
//! From it the crate computes pointwise geometry ([`geometry`]), the Euler-Lagrange
//! residual of `L_β = ∫ cos^{-β}α dμ` ([`residual`]), solves the Dirichlet problem and
//! continues solutions in `β` ([`solver`]), evaluates the compactness diagnostics
//! ([`diagnostics`]) and performs curvature blow-up rescaling ([`rescale`]).

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod families;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod rescale;
pub mod residual;
pub mod solver;

pub use error::{Error, Result};
pub use families::{Family, Surface};
pub use geometry::{
    brioschi_curvature, compute_jet, extrinsic_data, first_fundamental, kahler_angle, surface_fields,
    ExtrinsicData, FirstFundamental, Jet, KahlerData, NodeGeometry, SurfaceFields, Vec4,
};
pub use grid::{GraphPatch, GridSpec};
pub use residual::{
    ealpha_residual, energy_report, energy_stationarity_test, exact_residual, residual_field, EalphaField,
    EnergyReport, ResidualField,
};
