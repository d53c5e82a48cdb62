//! Equilibrium computation, prize design and Monte Carlo verification for
//! rank-order contests whose designer cares about one of two ability groups.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! `*F64` aliases below name the double-precision instantiations used by the
//! command line tool.

// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod dist;
pub mod equilibrium;
pub mod error;
pub mod numerics;
pub mod orderstats;
pub mod real;
pub mod verify;

pub use error::{Error, Result};
pub use real::Real;

pub type AbilityDistributionF64 = dist::AbilityDistribution<f64>;
pub type AbilityDistributionF32 = dist::AbilityDistribution<f32>;
pub type PopulationModelF64 = dist::PopulationModel<f64>;
pub type PopulationModelF32 = dist::PopulationModel<f32>;
pub type MonotoneTableF64 = numerics::MonotoneTable<f64>;
pub type PrizeScheduleF64 = equilibrium::PrizeSchedule<f64>;
pub type ContestSpecF64 = equilibrium::ContestSpec<f64>;
pub type TabulatedStrategyF64 = equilibrium::TabulatedStrategy<f64>;
pub type LinkFunctionF64 = equilibrium::LinkFunction<f64>;
pub type EquilibriumF64 = equilibrium::Equilibrium<f64>;
pub type DesignResultF64 = design::DesignResult<f64>;
