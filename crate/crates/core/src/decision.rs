//! Decisions on a fused mass function: pignistic argmax, maximum of
//! credibility with reject, Appriou's plausibility rule over the whole
//! powerset, and the two compositions of the last two.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::belief::{BeliefError, FocalSet, Frame, MassFunction};
use crate::multiclass::argmax_first;

/// Scores closer than this are ties.
const SCORE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecisionError {
    #[error("imprecision parameter r must lie in [0, 1], got {0}")]
    InvalidR(f64),
    #[error("expected {expected} subset weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("subset weight must be finite and > 0, got {0}")]
    InvalidWeight(f64),
    #[error("weights were built for {expected} classes, mass has {got}")]
    FrameSize { expected: usize, got: usize },
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecisionOutcome {
    Singleton(usize),
    /// A union of at least two classes.
    Union(FocalSet),
    Rejected,
}

impl DecisionOutcome {
    /// Singleton or union built from a non-empty subset.
    pub fn from_set(set: FocalSet) -> Self {
        debug_assert!(!set.is_empty());
        if set.is_singleton() {
            DecisionOutcome::Singleton(set.first().unwrap_or(0))
        } else {
            DecisionOutcome::Union(set)
        }
    }

    /// Subset chosen, `None` when rejected.
    pub fn set(self) -> Option<FocalSet> {
        match self {
            DecisionOutcome::Singleton(i) => Some(FocalSet::singleton(i)),
            DecisionOutcome::Union(s) => Some(s),
            DecisionOutcome::Rejected => None,
        }
    }

    pub fn is_rejected(self) -> bool {
        self == DecisionOutcome::Rejected
    }

    pub fn is_union(self) -> bool {
        matches!(self, DecisionOutcome::Union(_))
    }

    pub fn label(self, frame: &Frame) -> String {
        match self {
            DecisionOutcome::Singleton(i) => frame.label(i).to_string(),
            DecisionOutcome::Union(s) => frame.format_union(s),
            DecisionOutcome::Rejected => "reject".to_string(),
        }
    }
}

/// Argmax of the pignistic probability; ties go to the lowest index.
pub fn decide_pignistic(m: &MassFunction) -> Result<usize, DecisionError> {
    let p = m.betp()?;
    Ok(argmax_first(p.into_iter()))
}

/// Maximum of credibility over singletons, accepted only when
/// `bel({w_k}) ≥ bel(w_k^c)`.
pub fn decide_maxbel_reject(m: &MassFunction) -> DecisionOutcome {
    let frame = m.frame();
    let n = frame.len();
    let k = argmax_first((0..n).map(|i| m.mass(FocalSet::singleton(i))));
    let bel_k = m.mass(FocalSet::singleton(k));
    let bel_rest = m.bel_unchecked(frame.complement(FocalSet::singleton(k)));
    if bel_k >= bel_rest {
        DecisionOutcome::Singleton(k)
    } else {
        DecisionOutcome::Rejected
    }
}

/// Prior-like weights `m_b(X) = K_b·λ_X / |X|^r` over non-empty subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct AppriouWeights {
    r: f64,
    classes: usize,
    /// Indexed by subset mask; entry 0 is unused and kept at zero.
    weights: Vec<f64>,
}

impl AppriouWeights {
    /// Weights with `λ_X = 1` for every subset.
    pub fn new(classes: usize, r: f64) -> Result<Self, DecisionError> {
        let size = 1usize << classes;
        Self::with_lambdas(classes, r, &vec![1.0; size - 1])
    }

    /// `lambdas[k]` is `λ_X` for the subset with mask `k + 1`.
    pub fn with_lambdas(classes: usize, r: f64, lambdas: &[f64]) -> Result<Self, DecisionError> {
        if !(0.0..=1.0).contains(&r) {
            return Err(DecisionError::InvalidR(r));
        }
        let size = 1usize << classes;
        if lambdas.len() != size - 1 {
            return Err(DecisionError::WeightCount {
                expected: size - 1,
                got: lambdas.len(),
            });
        }
        if let Some(&bad) = lambdas.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(DecisionError::InvalidWeight(bad));
        }
        let mut weights = vec![0.0; size];
        for mask in 1..size {
            let card = (mask as u32).count_ones() as f64;
            weights[mask] = lambdas[mask - 1] / card.powf(r);
        }
        let k_b = 1.0 / weights.iter().sum::<f64>();
        for w in &mut weights {
            *w *= k_b;
        }
        Ok(Self {
            r,
            classes,
            weights,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn weight(&self, x: FocalSet) -> f64 {
        self.weights[x.mask() as usize]
    }

    /// Normalized weights indexed by subset mask.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `argmax_X m_b(X)·pl(X)` over non-empty subsets. Ties go to the smaller
/// subset, then to the lower mask. With `r = 0` the weights are uniform and
/// Θ, whose plausibility is maximal, is returned.
pub fn decide_appriou(
    m: &MassFunction,
    weights: &AppriouWeights,
) -> Result<DecisionOutcome, DecisionError> {
    let frame = m.frame();
    if frame.len() != weights.classes {
        return Err(DecisionError::FrameSize {
            expected: weights.classes,
            got: frame.len(),
        });
    }
    if weights.r == 0.0 && weights.weights[1..].windows(2).all(|w| w[0] == w[1]) {
        return Ok(DecisionOutcome::from_set(frame.full()));
    }
    let total: f64 = m.masses()[1..].iter().sum();
    let mut best: Option<(FocalSet, f64)> = None;
    for mask in 1..frame.powerset_size() as u32 {
        let x = FocalSet(mask);
        let score = weights.weight(x) * m.pl_from_bel(total, x);
        best = match best {
            None => Some((x, score)),
            Some((bx, bs)) => {
                let better = if (score - bs).abs() <= SCORE_EPS {
                    (x.cardinality(), x.mask()) < (bx.cardinality(), bx.mask())
                } else {
                    score > bs
                };
                if better {
                    Some((x, score))
                } else {
                    Some((bx, bs))
                }
            }
        };
    }
    let (set, _) = best.expect("frame has at least one class");
    Ok(DecisionOutcome::from_set(set))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessOrder {
    /// Reject first, then Appriou on accepted patterns.
    RejectThenAppriou,
    /// Appriou first, then reject test on union decisions only.
    AppriouThenReject,
}

pub fn decide_process(
    m: &MassFunction,
    weights: &AppriouWeights,
    order: ProcessOrder,
) -> Result<DecisionOutcome, DecisionError> {
    match order {
        ProcessOrder::RejectThenAppriou => match decide_maxbel_reject(m) {
            DecisionOutcome::Rejected => Ok(DecisionOutcome::Rejected),
            _ => decide_appriou(m, weights),
        },
        ProcessOrder::AppriouThenReject => match decide_appriou(m, weights)? {
            DecisionOutcome::Union(_) => Ok(decide_maxbel_reject(m)),
            other => Ok(other),
        },
    }
}

/// Decision rules selectable at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionRule {
    Pignistic,
    MaxBelReject,
    Appriou,
    Process12,
    Process21,
    Vote,
    Argmax,
}

impl DecisionRule {
    pub fn can_reject(self) -> bool {
        matches!(
            self,
            DecisionRule::MaxBelReject | DecisionRule::Process12 | DecisionRule::Process21
        )
    }

    /// Whether the rule works on the fused mass.
    pub fn uses_fusion(self) -> bool {
        !matches!(self, DecisionRule::Vote | DecisionRule::Argmax)
    }
}

impl FromStr for DecisionRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "pignistic" => DecisionRule::Pignistic,
            "maxbel-reject" => DecisionRule::MaxBelReject,
            "appriou" => DecisionRule::Appriou,
            "process-12" => DecisionRule::Process12,
            "process-21" => DecisionRule::Process21,
            "vote" => DecisionRule::Vote,
            "argmax" => DecisionRule::Argmax,
            _ => {
                return Err(format!(
                    "unknown rule `{s}` (expected pignistic, maxbel-reject, appriou, \
                     process-12, process-21, vote or argmax)"
                ))
            }
        })
    }
}

impl fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecisionRule::Pignistic => "pignistic",
            DecisionRule::MaxBelReject => "maxbel-reject",
            DecisionRule::Appriou => "appriou",
            DecisionRule::Process12 => "process-12",
            DecisionRule::Process21 => "process-21",
            DecisionRule::Vote => "vote",
            DecisionRule::Argmax => "argmax",
        })
    }
}
