//! Process fidelity versus 0-fidelity for n-qubit channels.
//!
//! * [`matrix`]: dense complex kernels (Kronecker products, partial traces,
//!   Hermitian eigensolver, real embedding).
//! * [`quantum`]: SIC-POVM product states, the maximally entangled state,
//!   channels as Choi matrices.
//! * [`fidelity`]: F₀ by two routes, F, F_avg, the linear bounds and a shot estimator.
//! * [`gamma`]: the Γ operator and checks of its spectrum and witnesses.
//! * [`sdp`]: a small dense SDP solver (Douglas–Rachford splitting).
//! * [`bounds`]: the extremal-fidelity SDPs and the sweep behind the bounds curves.

pub mod bounds;
pub mod error;
pub mod fidelity;
pub mod gamma;
pub mod matrix;
pub mod quantum;
pub mod sdp;

pub use bounds::{
    build_fidelity_sdp, feasible_f0_range, max_process_fidelity, min_process_fidelity, sweep,
    BoundsRow, FidelityExtremum, CSV_HEADER,
};
pub use error::{Error, Result};
pub use fidelity::{
    average_fidelity, estimate_zero_fidelity, process_fidelity, theorem1_bounds,
    zero_fidelity_choi, zero_fidelity_direct, Bounds, FidelityReport, ShotEstimate,
};
pub use gamma::{build_gamma, GammaOperator, WitnessReport};
pub use matrix::{
    hermitian_eig, kron, partial_trace, real_embed, ComplexMatrix, RealMatrix, Spectrum, Subsystem,
};
pub use num_complex::Complex64;
pub use quantum::{
    apply_channel, channel_from_kraus, conjugate_by_unitary, depolarizing, max_entangled,
    random_cptp, sic_states, validate_cptp, Channel, CptpReport, MaxEntangledState, SicEnsemble,
};
pub use sdp::{project_psd, solve, SdpProblem, SdpSolution, Sense, SolveStatus, SolverConfig};
