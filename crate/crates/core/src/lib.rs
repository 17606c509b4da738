//! Evidential multiclass classification with binary SVMs.
//!
//! Binary SVMs trained under a one-versus-one or one-versus-rest strategy
//! are turned into belief masses through an exponential model of their
//! decision values, fused with Dempster's rule, and decided on singletons,
//! unions of classes, or rejection.
//!
//! - [`belief`]: frames, mass functions, credibility, plausibility,
//!   pignistic probability, conjunctive and Dempster combination.
//! - [`svm`]: kernels and an SMO dual solver.
//! - [`multiclass`]: strategies, calibration, mass construction and fusion.
//! - [`decision`]: pignistic, credibility-with-reject and Appriou rules.
//! - [`texture`]: co-occurrence texture features for image tiles.
//! - [`data`], [`model_io`], [`report`]: datasets, persistence and evaluation.

pub mod belief;
pub mod data;
pub mod decision;
pub mod model_io;
pub mod multiclass;
pub mod report;
pub mod svm;
pub mod texture;

use thiserror::Error;

pub use belief::{Combined, FocalSet, Frame, MassFunction, World};
pub use data::Dataset;
pub use decision::{AppriouWeights, DecisionOutcome, DecisionRule};
pub use multiclass::{Calibration, EvidentialModel, LambdaMode, Scope, Strategy, TrainConfig};
pub use report::{EvalReport, RunConfig};
pub use svm::{Kernel, SvmModel, SvmProblem};

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Belief(#[from] belief::BeliefError),
    #[error(transparent)]
    Svm(#[from] svm::SvmError),
    #[error(transparent)]
    Multiclass(#[from] multiclass::MulticlassError),
    #[error(transparent)]
    Decision(#[from] decision::DecisionError),
    #[error(transparent)]
    Texture(#[from] texture::TextureError),
    #[error(transparent)]
    Data(#[from] data::DataError),
    #[error(transparent)]
    ModelIo(#[from] model_io::ModelIoError),
    #[error(transparent)]
    Eval(#[from] report::EvalError),
}

/// Coarse error classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use belief::BeliefError as B;
        use multiclass::MulticlassError as M;
        use svm::SvmError as S;

        fn svm_kind(e: &S) -> ErrorKind {
            match e {
                S::NotConverged { .. } => ErrorKind::Numeric,
                S::Kernel(_) => ErrorKind::Usage,
                _ => ErrorKind::Data,
            }
        }
        fn belief_kind(e: &B) -> ErrorKind {
            match e {
                B::TotalConflict { .. } => ErrorKind::Numeric,
                _ => ErrorKind::Data,
            }
        }
        fn multiclass_kind(e: &M) -> ErrorKind {
            match e {
                M::Svm(s) | M::Binary { source: s, .. } => svm_kind(s),
                M::Belief(b) => belief_kind(b),
                M::NonFinite(_) => ErrorKind::Numeric,
                M::WrongStrategy { .. } => ErrorKind::Usage,
                _ => ErrorKind::Data,
            }
        }

        match self {
            Error::Belief(b) => belief_kind(b),
            Error::Svm(s) => svm_kind(s),
            Error::Multiclass(m) => multiclass_kind(m),
            Error::Decision(decision::DecisionError::Belief(b)) => belief_kind(b),
            Error::Decision(_) => ErrorKind::Usage,
            Error::Eval(report::EvalError::Multiclass(m)) => multiclass_kind(m),
            Error::Eval(report::EvalError::Decision(decision::DecisionError::Belief(b))) => {
                belief_kind(b)
            }
            Error::Eval(report::EvalError::Decision(_)) => ErrorKind::Usage,
            Error::Eval(report::EvalError::Dimension { .. }) => ErrorKind::Data,
            Error::Texture(_) | Error::Data(_) | Error::ModelIo(_) => ErrorKind::Data,
        }
    }
}
