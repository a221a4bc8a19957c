//! N-particle wave functions on configuration-space grids, Hamiltonian
//! application, and the observables used by tracking.
//!
//! Spin enters only through the spatial exchange symmetry: a two-electron
//! singlet has a symmetric spatial part, a spin-polarized state an
//! antisymmetric one. No spin-dependent operators appear.

mod eigen;
mod hamiltonian;
mod observables;
mod wavefunction;

pub use eigen::{eigenstates, EigenOptions};
pub(crate) use eigen::tridiag_eigen as tridiag_eigen_pub;
pub use hamiltonian::{AssembledHamiltonian, HamiltonianSpec, Interaction};
pub use observables::{
    current, density, dipole_moment, internal_force_divergence, momentum_expectation,
};
pub use wavefunction::{Symmetry, WaveFunction};
