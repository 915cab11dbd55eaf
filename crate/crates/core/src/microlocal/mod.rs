//! Phase-space diagnostics: a Gaussian windowed transform standing in for
//! microlocalization, wavefront masks, bicharacteristics and the checks
//! built on them.

mod fbi;
mod flow;
mod propagation;
mod wavefront;

pub use fbi::{coherent_state, fbi_transform, AmplitudeField, PhaseGrid, AMPLITUDE_HEADER};
pub use flow::{
    escape_certificate, free_backward_ray, hamiltonian_flow, trapping_probe, PhasePoint, Trajectory, TrappingVerdict,
    DRIFT_TOLERANCE,
};
pub use propagation::{
    contradiction_chain, propagation_check, propagation_check_functions, ChainReport, PropagationMode, PropagationOptions,
    PropagationReport, PROPAGATION_HEADER,
};
pub use wavefront::{emptiness_verdict, normalized_peak, wavefront_mask, OrderVerdict, WavefrontMask, DEFAULT_DILATION, DEFAULT_THRESHOLD};
