//! Linear-algebra kernel: sparse storage, dense helpers, exponentials,
//! eigendecompositions and linear solves.

pub mod dense;
pub mod eig;
pub mod solve;
pub mod sparse;

pub use eig::EigenDecomposition;
pub use sparse::CscMatrix;
