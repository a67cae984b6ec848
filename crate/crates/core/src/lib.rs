//! Finite-field linear codes, random shortening and puncturing, exact bias
//! measurement and the counting bounds that predict when shortening produces
//! low-biased codes.

pub mod bounds;
pub mod code;
pub mod error;
pub mod experiment;
pub mod gf;
pub mod matrix;
pub mod mothers;
pub mod seed;
pub mod transform;

pub use code::{BiasReport, LinearCode, DEFAULT_ENUMERATION_CAP};
pub use error::{Error, Result};
pub use gf::{Field, FieldElem};
pub use matrix::Matrix;
pub use transform::{ExpanderGraph, IndexSet};
