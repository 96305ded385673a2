//! Independent reference solvers: a time-domain memory-kernel integrator,
//! exact diagonalization with a discretized bath, and a numerical
//! principal-value transform.

pub mod ed;
pub mod hilbert;
pub mod kernel;
mod tridiag;
pub mod volterra;

pub use ed::{ed_convergence, ed_simulate, ConvergenceRow, DiscretizedBath, Mode, Scheme};
pub use hilbert::pv_hilbert;
pub use kernel::MemoryKernel;
pub use volterra::{volterra_solve, volterra_trajectory};
