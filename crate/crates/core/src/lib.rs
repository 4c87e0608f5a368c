//! Exact simulation of qudit block and convolutional codes: construction,
//! Fourier dualization, pasting, Knill-Laflamme verification, noisy channels
//! and classical correction-radius certificates.

pub mod channel;
pub mod classical;
pub mod code;
pub mod error;
pub mod kl;
pub mod operator;
pub mod pattern;
pub mod scalar;
pub mod state;
pub mod transform;

pub use channel::{
    decode_mld, run_trials, sample_channel, ChannelConfig, Decoded, Decoder, TrialRecord,
    TrialSummary,
};
pub use classical::{certify_radius, ClassicalReport, Counterexample};
pub use code::{
    classical_conv_encode, equivalent_up_to_phase, BuiltinCode, CodeSpec, Manifest, MuKind,
    MuMatrix, Recipe,
};
pub use error::{Error, Result};
pub use kl::{
    kl_check, lambda_matrix, reevaluate, KlOptions, KlReport, LambdaKind, Verdict, Witness,
};
pub use operator::{additive_basis, phase_basis, weyl_basis, SingleRegisterError};
pub use pattern::{ErrorPattern, PatternFamily};
pub use scalar::{root_of_unity, Magnitude, Overlap, PhaseScalar, Rational};
pub use state::{inner_product, BasisKet, RegisterState};
pub use transform::{dualize, paste, theorem2_pipeline};
