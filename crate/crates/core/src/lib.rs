//! Numerical toolkit for controlling quantum dynamics through the particle
//! density on 1D and 2D grid model systems.
//!
//! The crate is organized around the pipeline needed to construct, for a given
//! initial state, the time-dependent external potential that makes the system
//! follow a prescribed density:
//!
//! * [`grid`] — uniform spatial grids (periodic or zero boundary conditions)
//!   with spectral and high-order finite-difference operators.
//! * [`manybody`] — few-particle wave functions on configuration-space
//!   tensors, Hamiltonian application, observables and eigensolves.
//! * [`propagate`] — time-step operators (Crank–Nicolson, second-order
//!   differencing, split-operator, Lanczos) and time-stepping strategies.
//! * [`sturm`] — inversion of the variable-coefficient operator
//!   `-∇·(n ∇ ·)` that turns density residuals into potential updates.
//! * [`tracking`] — stepwise fixed-point construction of the tracking
//!   potential, plus dipole and scalar-observable tracking.
//! * [`kohnsham`] — orbital-based (non-interacting) tracking, ground-state
//!   density inversion and Hartree/exchange-correlation decompositions.
//! * [`oct`] — restricted-search optimal control over density paths.
//! * [`io`] — binary/CSV serialization for fields and wave functions.
//!
//! Atomic units are used throughout.

pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod kohnsham;
pub mod manybody;
pub mod oct;
pub mod propagate;
mod spectral;
pub mod sturm;
pub mod tracking;

pub use error::{CoreError, Result};
pub use field::{ComplexField, ScalarField, VectorField};
pub use grid::{Boundary, DiffScheme, Grid};
