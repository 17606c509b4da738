//! One-versus-one and one-versus-rest assemblies of binary SVMs, their
//! calibration, and the conversion of decision values into belief masses.
//!
//! Each binary decision value `f` becomes a simple mass function with two
//! focal sets besides Θ. The positive side `A = {w_i}` receives
//! `α(1 − ½e^{−f/λp})` when `f ≥ 0` and `α·½e^{−f/λn}` when `f < 0`; the
//! negative side `B` takes the rest of `α`, and Θ keeps `1 − α`. `B` is the
//! complement of `w_i` for one-versus-rest and `{w_j}` for one-versus-one.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{dempster_combine, BeliefError, FocalSet, Frame, MassFunction};
use crate::svm::{train_binary_with, Kernel, SolverOptions, SvmError, SvmModel, SvmProblem};

/// Upper clamp on the discounting factor; keeps `m(Θ) > 0`.
pub const ALPHA_MAX: f64 = 1.0 - 1e-6;
/// Lower clamp on the discounting factor.
pub const ALPHA_MIN: f64 = 0.5;

#[derive(Debug, Error)]
pub enum MulticlassError {
    #[error("calibration needs at least one decision value")]
    EmptyCalibration,
    #[error("{values} decision values for {labels} labels")]
    CalibrationLength { values: usize, labels: usize },
    #[error("non-finite decision value {0}")]
    NonFinite(f64),
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),
    #[error("operation requires the {expected} strategy, model uses {actual}")]
    WrongStrategy {
        expected: Strategy,
        actual: Strategy,
    },
    #[error("training needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("class `{class}` has {count} samples; at least {needed} required")]
    TooFewSamples {
        class: String,
        count: usize,
        needed: usize,
    },
    #[error("label index {0} outside the frame")]
    LabelOutOfFrame(usize),
    #[error("{points} points but {labels} labels")]
    LengthMismatch { points: usize, labels: usize },
    #[error("binary classifier {scope}: {source}")]
    Binary {
        scope: String,
        #[source]
        source: SvmError,
    },
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Ovo,
    Ovr,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Ovo => "ovo",
            Strategy::Ovr => "ovr",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ovo" => Ok(Strategy::Ovo),
            "ovr" => Ok(Strategy::Ovr),
            _ => Err(format!("unknown strategy `{s}` (expected ovo or ovr)")),
        }
    }
}

/// How the exponential scale parameters are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaMode {
    /// Divide each one-sided sum by the total number of training points.
    #[default]
    Total,
    /// Divide each one-sided sum by the number of values on that side.
    Conditional,
}

impl FromStr for LambdaMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "total" => Ok(LambdaMode::Total),
            "conditional" => Ok(LambdaMode::Conditional),
            _ => Err(format!(
                "unknown lambda mode `{s}` (expected total or conditional)"
            )),
        }
    }
}

/// Which classes a binary classifier separates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Class `i` (positive) against every other class.
    Rest(usize),
    /// Class `i` (positive) against class `j` (negative), `i < j`.
    Pair(usize, usize),
}

impl Scope {
    pub fn positive(self) -> usize {
        match self {
            Scope::Rest(i) | Scope::Pair(i, _) => i,
        }
    }

    /// Focal sets `(A, B)` for the positive and negative sides.
    pub fn focal_sets(self, frame: &Frame) -> (FocalSet, FocalSet) {
        match self {
            Scope::Rest(i) => {
                let a = frame.singleton(i);
                (a, frame.complement(a))
            }
            Scope::Pair(i, j) => (frame.singleton(i), frame.singleton(j)),
        }
    }

    fn describe(self, frame: &Frame) -> String {
        match self {
            Scope::Rest(i) => format!("{} vs rest", frame.label(i)),
            Scope::Pair(i, j) => format!("{} vs {}", frame.label(i), frame.label(j)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub lambda_p: f64,
    pub lambda_n: f64,
    pub alpha: f64,
}

impl Calibration {
    pub fn validate(&self) -> Result<(), MulticlassError> {
        if !(self.lambda_p > 0.0 && self.lambda_p.is_finite()) {
            return Err(MulticlassError::InvalidCalibration(format!(
                "lambda_p must be > 0, got {}",
                self.lambda_p
            )));
        }
        if !(self.lambda_n < 0.0 && self.lambda_n.is_finite()) {
            return Err(MulticlassError::InvalidCalibration(format!(
                "lambda_n must be < 0, got {}",
                self.lambda_n
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(MulticlassError::InvalidCalibration(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Which side of the hyperplane had no training decision values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenerateSide {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub calibration: Calibration,
    /// Set when a λ had to fall back to `±1e-3·max|f|`.
    pub degenerate: Option<DegenerateSide>,
}

/// Estimates `(λp, λn, α)` from training decision values and their ±1
/// labels.
pub fn calibrate(
    decisions: &[f64],
    labels: &[i8],
    mode: LambdaMode,
) -> Result<CalibrationOutcome, MulticlassError> {
    if decisions.is_empty() {
        return Err(MulticlassError::EmptyCalibration);
    }
    if decisions.len() != labels.len() {
        return Err(MulticlassError::CalibrationLength {
            values: decisions.len(),
            labels: labels.len(),
        });
    }
    if let Some(&bad) = decisions.iter().find(|v| !v.is_finite()) {
        return Err(MulticlassError::NonFinite(bad));
    }
    let l = decisions.len() as f64;
    let (mut pos_sum, mut pos_n, mut neg_sum, mut neg_n, mut correct) = (0.0, 0, 0.0, 0, 0);
    let mut max_abs: f64 = 0.0;
    for (&f, &y) in decisions.iter().zip(labels) {
        max_abs = max_abs.max(f.abs());
        if f >= 0.0 {
            pos_sum += f;
            pos_n += 1;
            if y > 0 {
                correct += 1;
            }
        } else {
            neg_sum += f;
            neg_n += 1;
            if y < 0 {
                correct += 1;
            }
        }
    }
    let (mut lambda_p, mut lambda_n) = match mode {
        LambdaMode::Total => (pos_sum / l, neg_sum / l),
        LambdaMode::Conditional => (
            if pos_n > 0 {
                pos_sum / pos_n as f64
            } else {
                0.0
            },
            if neg_n > 0 {
                neg_sum / neg_n as f64
            } else {
                0.0
            },
        ),
    };
    let fallback = (1e-3 * max_abs).max(f64::EPSILON);
    let mut degenerate = None;
    if lambda_p <= 0.0 {
        warn!("no positive training decision values; lambda_p falls back to {fallback:e}");
        lambda_p = fallback;
        degenerate = Some(DegenerateSide::Positive);
    }
    if lambda_n >= 0.0 {
        warn!(
            "no negative training decision values; lambda_n falls back to {:e}",
            -fallback
        );
        lambda_n = -fallback;
        degenerate = Some(DegenerateSide::Negative);
    }
    let accuracy = correct as f64 / l;
    let alpha = accuracy.clamp(ALPHA_MIN, ALPHA_MAX);
    Ok(CalibrationOutcome {
        calibration: Calibration {
            lambda_p,
            lambda_n,
            alpha,
        },
        degenerate,
    })
}

/// Positive-side and negative-side masses `(m(A), m(B))` for a decision
/// value; they always sum to `α`.
pub fn side_masses(f: f64, cal: &Calibration) -> (f64, f64) {
    let a = cal.alpha;
    if f >= 0.0 {
        let b = a * 0.5 * (-f / cal.lambda_p).exp();
        (a - b, b)
    } else {
        let m_a = a * 0.5 * (-f / cal.lambda_n).exp();
        (m_a, a - m_a)
    }
}

/// Mass function induced by one binary decision value.
pub fn bba_from_decision(
    f: f64,
    cal: &Calibration,
    scope: Scope,
    frame: &Arc<Frame>,
) -> Result<MassFunction, MulticlassError> {
    if !f.is_finite() {
        return Err(MulticlassError::NonFinite(f));
    }
    let (a, b) = scope.focal_sets(frame);
    let (ma, mb) = side_masses(f, cal);
    let mut masses = vec![0.0; frame.powerset_size()];
    masses[a.mask() as usize] += ma;
    masses[b.mask() as usize] += mb;
    masses[frame.full().mask() as usize] += 1.0 - cal.alpha;
    Ok(MassFunction::from_dense(Arc::clone(frame), masses)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryClassifier {
    pub scope: Scope,
    pub svm: SvmModel,
    pub calibration: Calibration,
}

/// Fused mass for one pattern and the conflict before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Fusion {
    pub mass: MassFunction,
    pub conflict: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidentialModel {
    pub frame: Arc<Frame>,
    pub strategy: Strategy,
    pub kernel: Kernel,
    pub c: f64,
    pub lambda_mode: LambdaMode,
    pub classifiers: Vec<BinaryClassifier>,
}

impl EvidentialModel {
    /// Checks classifier count and scope layout against the strategy.
    pub fn validate(&self) -> Result<(), MulticlassError> {
        let n = self.frame.len();
        let expected: Vec<Scope> = expected_scopes(self.strategy, n);
        let actual: Vec<Scope> = self.classifiers.iter().map(|c| c.scope).collect();
        if expected != actual {
            return Err(MulticlassError::InvalidCalibration(format!(
                "{} model over {n} classes needs scopes {expected:?}, found {actual:?}",
                self.strategy
            )));
        }
        for c in &self.classifiers {
            c.calibration.validate()?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.classifiers.first().map_or(0, |c| c.svm.dim())
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>, MulticlassError> {
        self.classifiers
            .iter()
            .map(|c| c.svm.decision_function(x).map_err(MulticlassError::from))
            .collect()
    }

    /// One mass function per binary classifier.
    pub fn bbas(&self, x: &[f64]) -> Result<Vec<MassFunction>, MulticlassError> {
        let values = self.decision_values(x)?;
        self.bbas_from_values(&values)
    }

    pub fn bbas_from_values(&self, values: &[f64]) -> Result<Vec<MassFunction>, MulticlassError> {
        self.classifiers
            .iter()
            .zip(values)
            .map(|(c, &f)| bba_from_decision(f, &c.calibration, c.scope, &self.frame))
            .collect()
    }

    /// Dempster combination of every classifier's mass for `x`.
    pub fn fuse_pattern(&self, x: &[f64]) -> Result<Fusion, MulticlassError> {
        let values = self.decision_values(x)?;
        self.fuse_values(&values)
    }

    pub fn fuse_values(&self, values: &[f64]) -> Result<Fusion, MulticlassError> {
        let bbas = self.bbas_from_values(values)?;
        let combined = dempster_combine(&bbas)?;
        Ok(Fusion {
            mass: combined.mass,
            conflict: combined.conflict,
        })
    }

    /// Majority vote over pairwise classifiers; ties go to the lowest index.
    pub fn vote_ovo(&self, x: &[f64]) -> Result<usize, MulticlassError> {
        self.require(Strategy::Ovo)?;
        let values = self.decision_values(x)?;
        Ok(self.vote_values(&values))
    }

    pub(crate) fn vote_values(&self, values: &[f64]) -> usize {
        let mut votes = vec![0usize; self.frame.len()];
        for (c, &f) in self.classifiers.iter().zip(values) {
            if let Scope::Pair(i, j) = c.scope {
                votes[if f >= 0.0 { i } else { j }] += 1;
            }
        }
        argmax_first(votes.iter().map(|&v| v as f64))
    }

    /// Class of the largest one-versus-rest decision value.
    pub fn argmax_ovr(&self, x: &[f64]) -> Result<usize, MulticlassError> {
        self.require(Strategy::Ovr)?;
        let values = self.decision_values(x)?;
        Ok(argmax_first(values.iter().copied()))
    }

    pub(crate) fn require(&self, expected: Strategy) -> Result<(), MulticlassError> {
        if self.strategy == expected {
            Ok(())
        } else {
            Err(MulticlassError::WrongStrategy {
                expected,
                actual: self.strategy,
            })
        }
    }
}

/// Index of the first maximum.
pub(crate) fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

pub fn expected_scopes(strategy: Strategy, n: usize) -> Vec<Scope> {
    match strategy {
        Strategy::Ovr => (0..n).map(Scope::Rest).collect(),
        Strategy::Ovo => (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| Scope::Pair(i, j)))
            .collect(),
    }
}

/// Hyperparameters for [`train_multiclass`].
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub strategy: Strategy,
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    pub lambda_mode: LambdaMode,
    pub solver: SolverOptions,
}

impl TrainConfig {
    pub fn new(strategy: Strategy, kernel: Kernel, c: f64) -> Self {
        Self {
            strategy,
            kernel,
            c,
            tol: 1e-3,
            lambda_mode: LambdaMode::Total,
            solver: SolverOptions::default(),
        }
    }
}

/// Trains and calibrates every binary subproblem. `labels` are indices into
/// `frame`.
pub fn train_multiclass(
    points: &[Vec<f64>],
    labels: &[usize],
    frame: Arc<Frame>,
    config: &TrainConfig,
) -> Result<EvidentialModel, MulticlassError> {
    if points.len() != labels.len() {
        return Err(MulticlassError::LengthMismatch {
            points: points.len(),
            labels: labels.len(),
        });
    }
    let n = frame.len();
    if n < 2 {
        return Err(MulticlassError::TooFewClasses(n));
    }
    let mut counts = vec![0usize; n];
    for &y in labels {
        *counts
            .get_mut(y)
            .ok_or(MulticlassError::LabelOutOfFrame(y))? += 1;
    }
    let needed = match config.strategy {
        Strategy::Ovo => 2,
        Strategy::Ovr => 1,
    };
    for (i, &count) in counts.iter().enumerate() {
        if count < needed {
            return Err(MulticlassError::TooFewSamples {
                class: frame.label(i).to_string(),
                count,
                needed,
            });
        }
    }

    let scopes = expected_scopes(config.strategy, n);
    let classifiers = scopes
        .par_iter()
        .map(|&scope| train_scope(points, labels, scope, &frame, config))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(EvidentialModel {
        frame,
        strategy: config.strategy,
        kernel: config.kernel,
        c: config.c,
        lambda_mode: config.lambda_mode,
        classifiers,
    })
}

fn train_scope(
    points: &[Vec<f64>],
    labels: &[usize],
    scope: Scope,
    frame: &Frame,
    config: &TrainConfig,
) -> Result<BinaryClassifier, MulticlassError> {
    let (xs, ys): (Vec<Vec<f64>>, Vec<i8>) = points
        .iter()
        .zip(labels)
        .filter_map(|(x, &y)| match scope {
            Scope::Rest(i) => Some((x.clone(), if y == i { 1 } else { -1 })),
            Scope::Pair(i, _) if y == i => Some((x.clone(), 1)),
            Scope::Pair(_, j) if y == j => Some((x.clone(), -1)),
            Scope::Pair(..) => None,
        })
        .unzip();
    let problem = SvmProblem::new(xs, ys, config.c).with_tol(config.tol);
    let wrap = |source| MulticlassError::Binary {
        scope: scope.describe(frame),
        source,
    };
    let svm = train_binary_with(&problem, config.kernel, &config.solver).map_err(wrap)?;
    let decisions: Vec<f64> = problem
        .points
        .iter()
        .map(|x| svm.decision_unchecked(x))
        .collect();
    let outcome = calibrate(&decisions, &problem.labels, config.lambda_mode)?;
    if let Some(side) = outcome.degenerate {
        warn!(
            "classifier {}: degenerate calibration ({side:?} side empty)",
            scope.describe(frame)
        );
    }
    Ok(BinaryClassifier {
        scope,
        svm,
        calibration: outcome.calibration,
    })
}
