//! Spaces of logarithmic differential forms on the projective line over
//! finite fields: arithmetic, validation, explicit constructions, exhaustive
//! searches, a polynomial identity oracle and Witt-vector lifts.

pub mod cli;
pub mod constructions;
pub mod error;
pub mod field;
pub mod forms;
pub mod instances;
pub mod lemma;
pub mod poly;
pub mod search;
pub mod serial;
pub mod space;
pub mod witt;

pub use error::{Error, Result};
pub use field::{Fe, Field};
pub use forms::DifferentialForm;
pub use poly::Poly;
pub use space::{validate_space, LogFormSpace, Validation};
