//! Finite-dimensional toolkit for generators of quantum Markov semigroups.
//!
//! Builds GKSL (Lindblad) generators and their preduals as explicit
//! superoperators, recovers special GKSL representations relative to a
//! faithful state, constructs s-dual semigroup generators for s in [0, 1],
//! decides when a dual is again a QMS via the modular automorphism, builds
//! privileged representations, and certifies quantum detailed balance in
//! both the standard (s = 0) and symmetric (s = 1/2) forms.

pub mod balance;
pub mod duals;
pub mod error;
pub mod gksl;
pub mod instances;
pub mod matrices;
pub mod modular;
pub mod qubit;
pub mod settings;
pub mod stationary;

pub use error::{Error, Result};
pub use gksl::{GOperator, GkslRep, Superoperator, SuperopKind};
pub use matrices::{C64, CMat, CVec, HermMat};
pub use modular::PrivilegedRep;
pub use settings::Tolerances;
pub use stationary::DensityState;
