//! Finite-dimensional Gabor analysis over `Z_N x Z_N`: time-frequency shifts,
//! lattices and their adjoints, twisted group algebras, Gabor frames, the
//! Hilbert-module picture of multiwindow frames, and modulation-space norms.

pub mod algebra;
pub mod error;
pub mod fixtures;
pub mod frames;
pub mod hilbert_module;
pub mod lattice;
pub mod linalg;
pub mod modspace;
pub mod selftest;
pub mod tf;
pub mod weights;

pub use algebra::{coefficients_of, CoeffSeq, OperatorMatrix};
pub use error::{Error, Result};
pub use frames::{figa_check, janssen_representation, FrameBounds, GaborSystem};
pub use hilbert_module::{
    act_left, act_right, associativity_residual, frame_type_operator, inner_left, inner_right,
    min_windows, module_frame_check, tight_multiwindow, MinWindows, ModuleFrameReport,
};
pub use lattice::{Lattice, Volume};
pub use modspace::{feichtinger_norm, mod_norm, window_equivalence_ratio, ModNormSpec};
pub use tf::{cocycle, stft, symplectic_form, tf_shift, PhaseSpaceArray, Signal, TfPoint, C64};
pub use weights::{check_moderate, GrsReport, GrsVerdict, Weight};
