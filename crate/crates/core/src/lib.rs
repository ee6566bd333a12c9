//! Exact propagators for tight-binding particles on driven 1D, square and
//! triangular lattices (Wannier-Stark ladders with time-dependent hopping
//! and homogeneous field), the generalized two-index Bessel functions those
//! kernels require, and brute-force verification machinery.
//!
//! Layout:
//!
//! * [`drive`] — drive protocols and the phase integrals `f_i`, `F_ji`;
//! * [`specfun`] — ordinary and two-index Bessel functions plus the
//!   generating-function oracle;
//! * [`lattice`] — sigma-encoded lattice topology, the dynamical map and
//!   transformation-coefficient checks;
//! * [`kernel`] — closed-form kernel tables in both conventions;
//! * [`mm`] — recurrence residual operators and the separable reduction;
//! * [`oracle`] — Schrödinger integration on truncated windows, kernel
//!   comparison, operator matrices with algebra checks;
//! * [`config`] — the experiment configuration format used by the CLI;
//! * [`io`] — CSV/JSON artifact writers.

pub mod config;
pub mod drive;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod mm;
pub mod oracle;
pub mod specfun;

pub use drive::{closed_form_constant, DriveProtocol, Waveform};
pub use kernel::{
    apply_kernel, kernel_1d, kernel_square, kernel_triangular, validate_phase_constraint,
    AxisWindow, ConstraintPolicy, Convention, KernelTable, Window,
};
pub use lattice::{builtin_lattices, check_map_constraints, heisenberg_map, LatticeSpec};
pub use mm::{mm_residual_general, separable_reduce};
pub use oracle::{
    build_operator_matrices, commutator_report, compare_kernels, integrate_unitary,
    TruncatedHamiltonian,
};
pub use specfun::{bessel_j, two_index_bessel, two_index_bessel_oracle};
