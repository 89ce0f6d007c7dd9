//! Simulator of a polarization-preserving ultra-fast optical shutter.
//!
//! A calcite beam displacer splits the input into two orthogonally
//! polarized rails, a Pockels cell at 45 degrees swaps their polarizations
//! when driven to its half-wave voltage, and a second displacer recombines
//! them onto the output rail, where a pinhole selects the transmitted beam
//! and a half-wave plate restores the input polarization. Without drive the
//! two components are further separated and stopped by the pinhole.
//!
//! Every type is generic over the scalar ([`Real`]: `f32` or `f64`); the
//! aliases below fix the scalar for the common case.

// `!(x > y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod elements;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod polarization;
pub mod scalar;

pub use error::{Error, Result};
pub use polarization::{Polarization, RailIndex};
pub use scalar::Real;

pub type JonesVectorF64 = polarization::JonesVector<f64>;
pub type JonesMatrixF64 = polarization::JonesMatrix<f64>;
pub type RailStateF64 = polarization::RailState<f64>;
pub type DeviceF64 = elements::Device<f64>;
pub type ShutterParamsF64 = elements::ShutterParams<f64>;
pub type CellStateF64 = dynamics::CellState<f64>;
pub type SourceConfigF64 = engine::SourceConfig<f64>;
pub type SweepResultF64 = engine::SweepResult<f64>;
pub type CharacterizationRecordF64 = metrics::CharacterizationRecord<f64>;

pub type JonesVectorF32 = polarization::JonesVector<f32>;
pub type JonesMatrixF32 = polarization::JonesMatrix<f32>;
pub type RailStateF32 = polarization::RailState<f32>;
pub type DeviceF32 = elements::Device<f32>;
pub type ShutterParamsF32 = elements::ShutterParams<f32>;
pub type CellStateF32 = dynamics::CellState<f32>;
