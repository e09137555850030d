//! Hidden-variable model families: local-realistic joint tables, stochastic
//! label models and contextual models with apparatus parameters.

pub mod clpm;
pub mod event;
pub mod lrhvm;
pub mod shvm;

pub use clpm::{
    clpm_expectation_exact, clpm_marginalized_run, clpm_simulate, ClpmModel, ClpmRun, Detection,
    FiniteClpm, MarginalizedRun, PhotonKernel, PhotonSignal,
};
pub use event::{Event, Outcome, SettingPair, Side};
pub use lrhvm::{
    chsh_exact_lrhvm, lrhvm_expectation, lrhvm_simulate, JointOutcomeTable, OutcomeAlphabet,
};
pub use shvm::{shvm_expectation_exact, shvm_run, ShvmEstimate, ShvmRecord, ShvmSpec};
