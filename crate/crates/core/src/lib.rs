//! Scattering lab for two-level avoided crossings
//! `ih ψ' = H(t;ε) ψ`, `H = [[V, ε], [ε, −V]]`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod quad;
pub mod ode;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub mod potential;

pub use potential::{Family, Potential};
pub mod geometry;

pub use geometry::{CrossingGeometry, Side};
pub mod matrix;
pub mod propagator;

pub use propagator::{Regime, RegimeParams, ScatteringResult, Thresholds};
pub mod gamma;
pub mod ring;
pub mod transfer;
pub mod asymptotics;
pub mod wkb;
pub mod runner;
