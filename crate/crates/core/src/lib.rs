//! Fixed points of mean-field self-consistent transfer operators on the
//! circle, discretised with Fejér-weighted Fourier truncation.
//!
//! A density `f` of order `N` is stored by its coefficients for
//! frequencies `-N+1..=N`. [`operator::assemble_transfer`] builds the matrix
//! of `Π_N L_S` for a grid-sampled map `S`, [`frechet`] differentiates
//! `f ↦ Π_N L_{T_{ε,f}} f`, and [`solvers`] finds its fixed point either by
//! plain iteration or by Newton's method.

pub mod dynamics;
pub mod ensemble;
pub mod experiments;
pub mod error;
pub mod fourier;
pub mod frechet;
pub mod linalg;
pub mod operator;
pub mod solvers;

pub use dynamics::{make_bump_kernel, CircleMap, Kernel, MeanFieldSystem};
pub use error::{Error, Result};
pub use fourier::FourierDensity;
pub use frechet::{assemble_frechet, DerivativeMode, FrechetAssembler};
pub use operator::{assemble_transfer, OperatorMatrix};
pub use solvers::{newton_solve, sequential_solve, Scheme, SolveTrace, SolverConfig};
