//! Row-operation complexity of matrix reduction over finite fields.
//!
//! - [`field`]: GF(q) arithmetic.
//! - [`matrix`]: dense matrices, cost-counted row operations, integer keys.
//! - [`elemword`]: words of elementary matrices and canonical products.
//! - [`reduce`]: Gauss–Jordan and striped elimination.
//! - [`cayley`]: exact distances by BFS over GL(n, q).
//! - [`bounds`]: group orders and counting bounds.

pub mod bounds;
pub mod cayley;
pub mod elemword;
pub mod error;
pub mod field;
pub mod gray;
pub mod matrix;
pub mod reduce;

pub use elemword::{AddMul, CanonicalWord, ElementaryOp, Scale, Swap, Word};
pub use error::{Error, Result};
pub use field::{FieldElement, FieldSpec};
pub use matrix::{GroupKey, Layout, Matrix, OpCounter};
pub use reduce::{Algorithm, ReductionResult};
