//! Computational toolkit for the block multiplication `⊗` on finitely
//! supported basis vectors and for the greedy-basis constants that decide
//! when a basis behaves like the unit vector basis of `c₀` or `ℓ_p`.

pub mod constants;
pub mod error;
pub mod greedy;
pub mod harness;
pub mod norms;
pub mod sampler;
pub mod space;
pub mod vector;

pub use constants::{ConstantName, ConstantReport, Witness, WitnessInput};
pub use error::{Error, Result};
pub use norms::NormOracle;
pub use sampler::{parse_sampler, Sampler};
pub use space::{parse_space, Family, SpaceDescriptor};
pub use vector::{FiniteVector, Functional};
