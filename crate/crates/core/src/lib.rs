//! Exact tooling for d-dimensional 0-1 matrix pattern avoidance: tensors,
//! containment and interval-minor deciders, the Kronecker-product
//! constructions, exact extremal-function search and Monte Carlo estimates
//! for random permutation tensors.

pub mod cli;
pub mod constructions;
pub mod containment;
pub mod error;
pub mod extremal;
pub mod probability;
pub mod tensor;

pub use containment::{Decision, Embedding, GridWitness};
pub use error::{Error, Result};
pub use tensor::{PermutationTensor, TensorMatrix};
