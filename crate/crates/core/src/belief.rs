//! Mass functions over a finite frame of discernment.
//!
//! Subsets of the frame are encoded as bitmasks: bit `i` is set when the
//! subset contains `labels[i]`. A [`MassFunction`] stores one entry per
//! subset (dense `2^n` array), so `masses[0]` is the mass on the empty set
//! and `masses[2^n - 1]` the mass on the whole frame.
//!
//! Combination follows the unnormalized conjunctive rule (open world) and
//! Dempster's normalized rule (closed world). Several sources are folded
//! pairwise from the left.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Largest frame the dense powerset representation accepts.
pub const MAX_CLASSES: usize = 16;

/// Tolerance on the unit-sum constraint.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Conflict at or above `1 - CONFLICT_EPS` is treated as total.
pub const CONFLICT_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("frame must contain between 1 and {MAX_CLASSES} classes, got {0}")]
    FrameSize(usize),
    #[error("duplicate class label `{0}` in frame")]
    DuplicateLabel(String),
    #[error("unknown class label `{0}`")]
    UnknownLabel(String),
    #[error("subset mask {mask:#x} does not fit a frame of {classes} classes")]
    FrameMismatch { mask: u32, classes: usize },
    #[error("mass functions are defined on different frames")]
    DifferentFrames,
    #[error("expected {expected} mass entries, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("cannot combine an empty list of mass functions")]
    NoSources,
    #[error("total conflict (m(∅) = {conflict}): sources are contradictory")]
    TotalConflict { conflict: f64 },
}

/// Ordered set of exclusive class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    labels: Vec<String>,
}

impl Frame {
    pub fn new<I, S>(labels: I) -> Result<Self, BeliefError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() || labels.len() > MAX_CLASSES {
            return Err(BeliefError::FrameSize(labels.len()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(BeliefError::DuplicateLabel(l.clone()));
            }
        }
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Number of subsets, `2^n`.
    pub fn powerset_size(&self) -> usize {
        1usize << self.labels.len()
    }

    /// The whole frame Θ.
    pub fn full(&self) -> FocalSet {
        FocalSet((self.powerset_size() - 1) as u32)
    }

    pub fn singleton(&self, i: usize) -> FocalSet {
        assert!(i < self.len(), "class index {i} out of range");
        FocalSet::singleton(i)
    }

    /// Subset from class names.
    pub fn set_of<S: AsRef<str>>(&self, names: &[S]) -> Result<FocalSet, BeliefError> {
        let mut mask = 0u32;
        for n in names {
            let i = self
                .index_of(n.as_ref())
                .ok_or_else(|| BeliefError::UnknownLabel(n.as_ref().to_string()))?;
            mask |= 1 << i;
        }
        Ok(FocalSet(mask))
    }

    /// Complement within the frame.
    pub fn complement(&self, x: FocalSet) -> FocalSet {
        FocalSet(!x.0 & self.full().0)
    }

    pub fn contains_set(&self, x: FocalSet) -> bool {
        (x.0 as usize) < self.powerset_size()
    }

    fn check(&self, x: FocalSet) -> Result<(), BeliefError> {
        if self.contains_set(x) {
            Ok(())
        } else {
            Err(BeliefError::FrameMismatch {
                mask: x.0,
                classes: self.len(),
            })
        }
    }

    /// Subset notation, e.g. `{a,b}`; the empty set prints as `∅`.
    pub fn format_set(&self, x: FocalSet) -> String {
        if x.is_empty() {
            return "∅".to_string();
        }
        let names: Vec<&str> = x.members().map(|i| self.labels[i].as_str()).collect();
        format!("{{{}}}", names.join(","))
    }

    /// Union notation used in report columns, e.g. `a∪b`.
    pub fn format_union(&self, x: FocalSet) -> String {
        let names: Vec<&str> = x.members().map(|i| self.labels[i].as_str()).collect();
        names.join("∪")
    }
}

/// A subset of the frame, as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FocalSet(pub u32);

impl FocalSet {
    pub const EMPTY: FocalSet = FocalSet(0);

    pub fn singleton(i: usize) -> Self {
        FocalSet(1 << i)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn cardinality(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_singleton(self) -> bool {
        self.cardinality() == 1
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn intersect(self, other: FocalSet) -> FocalSet {
        FocalSet(self.0 & other.0)
    }

    pub fn union(self, other: FocalSet) -> FocalSet {
        FocalSet(self.0 | other.0)
    }

    pub fn is_subset_of(self, other: FocalSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Index of the lowest member; `None` for the empty set.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Member class indices in increasing order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros();
                rest &= rest - 1;
                Some(i as usize)
            }
        })
    }
}

/// Non-empty subsets of `x`, including `x` itself.
fn nonempty_subsets(x: FocalSet) -> impl Iterator<Item = FocalSet> {
    // Standard submask walk: s = (s - 1) & x.
    let mut next = Some(x.0);
    std::iter::from_fn(move || {
        let s = next?;
        if s == 0 {
            return None;
        }
        next = Some((s - 1) & x.0);
        Some(FocalSet(s))
    })
}

/// Whether mass on the empty set is admissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum World {
    Open,
    Closed,
}

/// First constraint a mass function breaks.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite { set: FocalSet },
    Negative { set: FocalSet, value: f64 },
    UnitSum { sum: f64 },
    EmptySetMass { value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { set } => write!(f, "non-finite mass on subset {:#x}", set.0),
            Violation::Negative { set, value } => {
                write!(f, "negative mass {value} on subset {:#x}", set.0)
            }
            Violation::UnitSum { sum } => write!(f, "masses sum to {sum}, not 1"),
            Violation::EmptySetMass { value } => {
                write!(f, "closed world requires m(∅) = 0, got {value}")
            }
        }
    }
}

/// Outcome of [`MassFunction::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Validity {
    Valid,
    Invalid(Violation),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

/// Basic belief assignment over the powerset of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction {
    frame: Arc<Frame>,
    masses: Vec<f64>,
}

impl MassFunction {
    /// Wraps a dense mass vector without checking its values; use
    /// [`MassFunction::validate`] for that.
    pub fn from_dense(frame: Arc<Frame>, masses: Vec<f64>) -> Result<Self, BeliefError> {
        let expected = frame.powerset_size();
        if masses.len() != expected {
            return Err(BeliefError::WrongLength {
                expected,
                got: masses.len(),
            });
        }
        Ok(Self { frame, masses })
    }

    /// Builds a mass function from `(subset, mass)` pairs; repeated subsets
    /// accumulate.
    pub fn from_focal(frame: Arc<Frame>, focal: &[(FocalSet, f64)]) -> Result<Self, BeliefError> {
        let mut masses = vec![0.0; frame.powerset_size()];
        for &(set, value) in focal {
            frame.check(set)?;
            masses[set.0 as usize] += value;
        }
        Ok(Self { frame, masses })
    }

    /// Total ignorance: all mass on Θ.
    pub fn vacuous(frame: Arc<Frame>) -> Self {
        let mut masses = vec![0.0; frame.powerset_size()];
        masses[frame.full().0 as usize] = 1.0;
        Self { frame, masses }
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, x: FocalSet) -> f64 {
        self.masses.get(x.0 as usize).copied().unwrap_or(0.0)
    }

    pub fn empty_mass(&self) -> f64 {
        self.masses[0]
    }

    /// Subsets carrying strictly positive mass.
    pub fn focal_elements(&self) -> impl Iterator<Item = (FocalSet, f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, &v)| (FocalSet(i as u32), v))
    }

    pub fn validate(&self, world: World) -> Validity {
        for (i, &v) in self.masses.iter().enumerate() {
            if !v.is_finite() {
                return Validity::Invalid(Violation::NonFinite {
                    set: FocalSet(i as u32),
                });
            }
            if v < 0.0 {
                return Validity::Invalid(Violation::Negative {
                    set: FocalSet(i as u32),
                    value: v,
                });
            }
        }
        let sum: f64 = self.masses.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Validity::Invalid(Violation::UnitSum { sum });
        }
        if world == World::Closed && self.masses[0] != 0.0 {
            return Validity::Invalid(Violation::EmptySetMass {
                value: self.masses[0],
            });
        }
        Validity::Valid
    }

    /// Credibility: total mass of the non-empty subsets of `x`.
    pub fn bel(&self, x: FocalSet) -> Result<f64, BeliefError> {
        self.frame.check(x)?;
        Ok(self.bel_unchecked(x))
    }

    pub(crate) fn bel_unchecked(&self, x: FocalSet) -> f64 {
        nonempty_subsets(x).map(|s| self.masses[s.0 as usize]).sum()
    }

    /// Plausibility: total mass of the subsets meeting `x`.
    pub fn pl(&self, x: FocalSet) -> Result<f64, BeliefError> {
        self.frame.check(x)?;
        Ok(self
            .masses
            .iter()
            .enumerate()
            .filter(|(y, _)| (*y as u32) & x.0 != 0)
            .map(|(_, &v)| v)
            .sum())
    }

    /// Plausibility computed as `Σ_{Y≠∅} m(Y) − bel(X^c)`. Never exceeds
    /// the same expression for Θ, whatever the rounding.
    pub(crate) fn pl_from_bel(&self, total_nonempty: f64, x: FocalSet) -> f64 {
        total_nonempty - self.bel_unchecked(self.frame.complement(x))
    }

    /// Pignistic probability of each singleton.
    pub fn betp(&self) -> Result<Vec<f64>, BeliefError> {
        let conflict = self.masses[0];
        if conflict >= 1.0 - CONFLICT_EPS {
            return Err(BeliefError::TotalConflict { conflict });
        }
        let scale = 1.0 - conflict;
        let mut p = vec![0.0; self.frame.len()];
        for (set, v) in self.focal_elements() {
            if set.is_empty() {
                continue;
            }
            let share = v / set.cardinality() as f64 / scale;
            for i in set.members() {
                p[i] += share;
            }
        }
        Ok(p)
    }

    fn ensure_same_frame(&self, other: &MassFunction) -> Result<(), BeliefError> {
        if Arc::ptr_eq(&self.frame, &other.frame) || *self.frame == *other.frame {
            Ok(())
        } else {
            Err(BeliefError::DifferentFrames)
        }
    }

    /// Binary conjunctive step over the focal elements of both operands.
    fn conjunctive_pair(&self, other: &MassFunction) -> MassFunction {
        let mut out = vec![0.0; self.masses.len()];
        let rhs: Vec<(FocalSet, f64)> = other.focal_elements().collect();
        for (a, va) in self.focal_elements() {
            for &(b, vb) in &rhs {
                out[(a.0 & b.0) as usize] += va * vb;
            }
        }
        MassFunction {
            frame: Arc::clone(&self.frame),
            masses: out,
        }
    }

    /// Clamps rounding residue in `(-1e-15, 0)` to zero and renormalizes
    /// when the total drifted by more than `1e-12`.
    fn tidy(&mut self) {
        for v in &mut self.masses {
            if *v < 0.0 && *v > -1e-15 {
                *v = 0.0;
            }
        }
        let sum: f64 = self.masses.iter().sum();
        if (sum - 1.0).abs() > 1e-12 && sum > 0.0 {
            for v in &mut self.masses {
                *v /= sum;
            }
        }
    }
}

impl fmt::Display for MassFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .focal_elements()
            .map(|(s, v)| format!("{}: {}", self.frame.format_set(s), v))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Unnormalized conjunctive combination; the result may carry conflict
/// on the empty set.
pub fn conjunctive_combine(ms: &[MassFunction]) -> Result<MassFunction, BeliefError> {
    let (first, rest) = ms.split_first().ok_or(BeliefError::NoSources)?;
    for m in rest {
        first.ensure_same_frame(m)?;
    }
    let mut acc = first.clone();
    for m in rest {
        acc = acc.conjunctive_pair(m);
    }
    acc.tidy();
    Ok(acc)
}

/// Result of Dempster's rule together with the pre-normalization conflict.
#[derive(Debug, Clone, PartialEq)]
pub struct Combined {
    pub mass: MassFunction,
    pub conflict: f64,
}

/// Dempster's normalized rule.
pub fn dempster_combine(ms: &[MassFunction]) -> Result<Combined, BeliefError> {
    let conj = conjunctive_combine(ms)?;
    normalize_conflict(conj)
}

/// Moves the empty-set mass out of a conjunctive result by renormalizing.
pub fn normalize_conflict(mut conj: MassFunction) -> Result<Combined, BeliefError> {
    let conflict = conj.masses[0];
    if conflict >= 1.0 - CONFLICT_EPS {
        return Err(BeliefError::TotalConflict { conflict });
    }
    let scale = 1.0 - conflict;
    conj.masses[0] = 0.0;
    for v in &mut conj.masses[1..] {
        *v /= scale;
    }
    conj.tidy();
    Ok(Combined {
        mass: conj,
        conflict,
    })
}
