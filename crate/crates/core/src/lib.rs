//! Constructive purification of finite quantum ensembles.
//!
//! Given an ensemble of pure states, [`purification::purify`] builds a pure
//! state on `S (x) K` whose reduced state on `S` is the ensemble's density
//! operator. Measuring `K` in the basis of a [`purification::SteeringPlan`]
//! prepares any chosen ensemble with that density operator.
//! [`dynamics`] supplies a Hamiltonian whose quarter-period evolution
//! performs the purification, and [`qubit_gates`] the two-qubit circuit
//! that does the same for a single qubit.

pub mod cli;
pub mod dynamics;
pub mod ensembles;
pub mod error;
pub mod formats;
pub mod numerics;
pub mod purification;
pub mod qubit_gates;

pub use ensembles::{DensityMatrix, Ensemble, SpectralEnsemble};
pub use error::{Error, Result};
pub use numerics::{CMatrix, CVector, StateVector, C64};
pub use purification::{BipartiteState, MeasurementOutcome, SteeringPlan};
