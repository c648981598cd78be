//! Exact tensor-rank and border-rank bounds for truncated polynomial
//! algebras A(d, n) and Kronecker powers of W-state tensors, together with
//! the supporting exact tensor algebra, a polynomial certificate for the
//! order-3 cube case, and a complex-valued alternating-least-squares
//! decomposition search.

pub mod algebra;
pub mod bounds;
pub mod combinatorics;
pub mod cpd;
pub mod error;
pub mod polyring;
pub mod tensor;

pub use algebra::{MonomialAlgebra, SizeBudget};
pub use bounds::{BoundReport, BoundTable};
pub use error::{Error, Result};
pub use tensor::{DenseTensor, ExactMatrix};
