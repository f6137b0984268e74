//! Linear dimension witnesses for prepare-and-measure scenarios.
//!
//! * [`witness`]: scenarios, witnesses, behaviors and the CHSH witness.
//! * [`classical`]: exact classical bounds by strategy enumeration.
//! * [`quantum`]: seesaw lower bounds and closed-form CHSH optima.
//! * [`photonic`]: a four-mode single-photon setup with counting noise.
//! * [`analysis`]: error budgets, result tables, dimension certification.
//!
//! The algebra is generic over [`scalar::Scalar`]; the aliases below name
//! the common instantiations.

pub mod analysis;
pub mod classical;
pub mod error;
pub mod linalg;
pub mod photonic;
pub mod quantum;
pub mod record;
pub mod scalar;
pub mod seeding;
mod textfmt;
pub mod witness;

pub use error::{Error, Result};
pub use num_rational::Rational64;

pub type Witness64 = witness::Witness<f64>;
pub type Witness32 = witness::Witness<f32>;
/// Exact rational witness, for classical bounds without rounding.
pub type WitnessQ = witness::Witness<Rational64>;
pub type Behavior64 = witness::Behavior<f64>;
pub type BehaviorQ = witness::Behavior<Rational64>;
pub type ClassicalBound64 = classical::ClassicalBoundResult<f64>;
pub type ClassicalBoundQ = classical::ClassicalBoundResult<Rational64>;
pub type QuantumConfig64 = quantum::QuantumConfig<f64>;
pub type QuantumConfig32 = quantum::QuantumConfig<f32>;
pub type SeesawResult64 = quantum::SeesawResult<f64>;
pub type CMatrix64 = linalg::CMatrix<f64>;
pub type ModeState64 = photonic::ModeState<f64>;
