//! Sparse linear algebra: triplet assembly, CSR storage and a left-looking
//! sparse LU with threshold partial pivoting.

mod csr;
mod lu;
mod ordering;
mod triplets;

pub use csr::CsrMatrix;
pub use lu::{lu_solve, LuFactorization};
pub use ordering::{reverse_cuthill_mckee, ColumnOrdering};
pub use triplets::Triplets;
