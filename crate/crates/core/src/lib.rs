//! Statevector simulation, construction, equivariance verification and
//! training of permutation-equivariant quantum convolutional networks.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below are the double-precision instantiations used by the CLI.

pub mod ansatz;
pub mod architectures;
pub mod circuit;
pub mod data;
pub mod error;
pub mod groups;
pub mod scalar;
pub mod simcore;
pub mod training;
pub mod verify;

pub use ansatz::{
    conv2_generic, conv2_swapsym, pool2, ring_brick_pairs, sn_layer, Ansatz, ParamGroup,
    ParamVector, SharedParamLayer,
};
pub use architectures::{
    build_baseline_qcnn, build_refl_rot_eqcnn, build_reflection_eqcnn, build_rot_eqcnn_variant,
    build_sn_eqcnn_circuit, build_sn_eqcnn_mixture, build_sn_eqnn, count_branches,
    enumerate_branches, ArchitectureId, ArchitectureSpec, Branch, BranchSet, Layer, LayerKind,
    PoolingStage, SymmetryClaim,
};
pub use circuit::{Angle, Circuit, GradientMethod, Model, Observable, ParamGate, Program, Term};
pub use error::{Error, Result};
pub use groups::{
    reduced_representation, reflection_perm, rotation_perm_as_written, symmetric_group_elements,
    Embedding, GroupName, GroupSpec, PixelMap, QubitPermutation,
};
pub use scalar::Real;
pub use simcore::{gate_matrix, Control, Gate, GateKind, Matrix, StateVector};

pub use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type StateVector64 = StateVector<f64>;
pub type StateVector32 = StateVector<f32>;
pub type Gate64 = Gate<f64>;
