//! Heralded non-Gaussian operations on two-mode squeezed vacuum.
//!
//! States live in a truncated Fock basis. Beam-splitter matrix elements are
//! evaluated in closed form, heralded branches are built for the direct
//! (one beam splitter per arm) and premixed (shared ancilla beam splitter)
//! circuits, and entanglement is reported as logarithmic negativity.

pub mod beamsplitter;
pub mod combinatorics;
pub mod entanglement;
pub mod error;
pub mod fock;
pub mod oracle;
pub mod protocols;
pub mod sweep;
pub mod verify;

pub use beamsplitter::{
    apply_conditional, apply_full_bs, bs_coefficient, make_conditional_op, BsAngle, ConditionalOp,
    Side,
};
pub use entanglement::{
    baseline_tmsvs, log_negativity_from_coefficients, log_negativity_pure, EntanglementReport,
};
pub use error::{Error, Result};
pub use fock::{
    normalize, schmidt, Cutoff, FockState, FourMode, FourModeState, Numerics, SchmidtSpectrum,
    TwoModeState,
};
pub use protocols::{
    pk_distribution, pk_mode, run_setup1, run_setup1_on_input, run_setup2,
    setup2_addition_analytic, tmsvs, HeraldSpec, ProtocolOutcome, SqueezeParam,
};
pub use sweep::{
    optimize, read_table, sweep, write_table, Bounds, OptimumReport, Protocol, SweepGrid, SweepRow,
    SweepTable, TableFormat,
};
