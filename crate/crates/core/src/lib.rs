//! Finite simplicial surjections between 1-dimensional complexes: openness and
//! branched-covering classification, weight functions, the `C(X)`-valued inner
//! product on `C(Y)`, conditional expectations and their index.

pub mod cli;
pub mod complex;
pub mod covermap;
pub mod expectation;
pub mod gallery;
pub mod hilbert;
pub mod index;
pub mod poly;
pub mod scalar;
pub mod weights;
