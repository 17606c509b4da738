//! Per-pattern predictions and confusion tables with union and reject
//! columns.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::belief::{FocalSet, Frame};
use crate::data::Dataset;
use crate::decision::{
    decide_appriou, decide_maxbel_reject, decide_pignistic, decide_process, AppriouWeights,
    DecisionError, DecisionOutcome, DecisionRule, ProcessOrder,
};
use crate::multiclass::{EvidentialModel, MulticlassError, Strategy};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("model expects {expected} features, data has {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Multiclass(#[from] MulticlassError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
}

/// Decision settings applied to a trained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub rule: DecisionRule,
    /// Imprecision parameter of the Appriou rule.
    pub r: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rule: DecisionRule::Pignistic,
            r: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub outcome: DecisionOutcome,
    /// Conflict before normalization; absent for vote and argmax.
    pub conflict: Option<f64>,
}

/// Decides every row of `points`. Rows are processed in parallel and
/// returned in input order.
pub fn predict(
    model: &EvidentialModel,
    points: &[Vec<f64>],
    cfg: &RunConfig,
) -> Result<Vec<Prediction>, EvalError> {
    let expected = model.dim();
    if let Some(bad) = points.iter().find(|p| p.len() != expected) {
        return Err(EvalError::Dimension {
            expected,
            got: bad.len(),
        });
    }
    match cfg.rule {
        DecisionRule::Vote => model.require(Strategy::Ovo)?,
        DecisionRule::Argmax => model.require(Strategy::Ovr)?,
        _ => {}
    }
    let weights = AppriouWeights::new(model.frame.len(), cfg.r)?;
    points
        .par_iter()
        .map(|x| predict_one(model, x, cfg.rule, &weights))
        .collect()
}

fn predict_one(
    model: &EvidentialModel,
    x: &[f64],
    rule: DecisionRule,
    weights: &AppriouWeights,
) -> Result<Prediction, EvalError> {
    let values = model.decision_values(x)?;
    let plain = |outcome| Prediction {
        outcome,
        conflict: None,
    };
    match rule {
        DecisionRule::Vote => {
            return Ok(plain(DecisionOutcome::Singleton(
                model.vote_values(&values),
            )))
        }
        DecisionRule::Argmax => {
            return Ok(plain(DecisionOutcome::Singleton(
                crate::multiclass::argmax_first(values.iter().copied()),
            )))
        }
        _ => {}
    }
    let fusion = model.fuse_values(&values)?;
    let m = &fusion.mass;
    let outcome = match rule {
        DecisionRule::Pignistic => DecisionOutcome::Singleton(decide_pignistic(m)?),
        DecisionRule::MaxBelReject => decide_maxbel_reject(m),
        DecisionRule::Appriou => decide_appriou(m, weights)?,
        DecisionRule::Process12 => decide_process(m, weights, ProcessOrder::RejectThenAppriou)?,
        DecisionRule::Process21 => decide_process(m, weights, ProcessOrder::AppriouThenReject)?,
        DecisionRule::Vote | DecisionRule::Argmax => unreachable!(),
    };
    Ok(Prediction {
        outcome,
        conflict: Some(fusion.conflict),
    })
}

/// Report column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Column {
    Set(FocalSet),
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub learned: bool,
    pub total: usize,
    /// Counts per column, aligned with [`EvalReport::columns`].
    pub counts: Vec<usize>,
    pub conflict_sum: Option<f64>,
}

impl ReportRow {
    pub fn percent(&self, col: usize) -> f64 {
        100.0 * self.counts[col] as f64 / self.total as f64
    }

    pub fn mean_conflict(&self) -> Option<f64> {
        self.conflict_sum.map(|s| s / self.total as f64)
    }
}

/// Confusion table over true labels × decisions, in row percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub frame: Frame,
    pub rule: DecisionRule,
    pub r: f64,
    /// Singletons, then unions that occurred by (cardinality, mask), then
    /// reject for rules able to reject.
    pub columns: Vec<Column>,
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn column_name(&self, col: Column) -> String {
        match col {
            Column::Set(s) if s.is_singleton() => self.frame.label(s.first().unwrap_or(0)).into(),
            Column::Set(s) => self.frame.format_union(s),
            Column::Reject => "reject".into(),
        }
    }

    pub fn column_index(&self, col: Column) -> Option<usize> {
        self.columns.iter().position(|&c| c == col)
    }

    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Percentage of `label` rows decided as `col` (0 when absent).
    pub fn percent(&self, label: &str, col: Column) -> f64 {
        match (self.row(label), self.column_index(col)) {
            (Some(r), Some(c)) => r.percent(c),
            _ => 0.0,
        }
    }

    /// Fraction in `[0, 1]` of `label` rows that were rejected.
    pub fn reject_rate(&self, label: &str) -> f64 {
        self.percent(label, Column::Reject) / 100.0
    }

    pub fn total_patterns(&self) -> usize {
        self.rows.iter().map(|r| r.total).sum()
    }

    pub fn mean_conflict(&self) -> Option<f64> {
        let sum: Option<f64> = self.rows.iter().map(|r| r.conflict_sum).sum();
        sum.map(|s| s / self.total_patterns() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("true");
        for &c in &self.columns {
            s.push(',');
            s.push_str(&self.column_name(c));
        }
        s.push_str(",n,mean_conflict\n");
        for row in &self.rows {
            s.push_str(&row.label);
            for k in 0..self.columns.len() {
                let _ = write!(s, ",{:.2}", row.percent(k));
            }
            let _ = write!(s, ",{}", row.total);
            match row.mean_conflict() {
                Some(c) => {
                    let _ = writeln!(s, ",{c:.6}");
                }
                None => s.push_str(",\n"),
            }
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut header = vec!["%".to_string()];
        header.extend(self.columns.iter().map(|&c| self.column_name(c)));
        header.push("n".into());
        let mut body: Vec<Vec<String>> = Vec::new();
        for row in &self.rows {
            let mut cells = vec![if row.learned {
                row.label.clone()
            } else {
                format!("{}*", row.label)
            }];
            cells.extend((0..self.columns.len()).map(|k| format!("{:.2}", row.percent(k))));
            cells.push(row.total.to_string());
            body.push(cells);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|k| {
                body.iter()
                    .map(|r| r[k].chars().count())
                    .chain(std::iter::once(header[k].chars().count()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut s = String::new();
        let _ = writeln!(s, "rule: {}  r: {}", self.rule, self.r);
        for line in std::iter::once(&header).chain(&body) {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{}{c}", " ".repeat(w - c.chars().count())))
                .collect();
            let _ = writeln!(s, "{}", cells.join("  ").trim_end());
        }
        if self.rows.iter().any(|r| !r.learned) {
            s.push_str("* unlearned class\n");
        }
        if let Some(c) = self.mean_conflict() {
            let _ = writeln!(s, "mean conflict: {c:.6}");
        }
        s
    }
}

/// Tallies predictions against true labels.
pub fn build_report(
    frame: &Frame,
    labels: &[String],
    predictions: &[Prediction],
    cfg: &RunConfig,
) -> EvalReport {
    let unions: BTreeSet<(u32, u32)> = predictions
        .iter()
        .filter_map(|p| match p.outcome {
            DecisionOutcome::Union(s) => Some((s.cardinality(), s.mask())),
            _ => None,
        })
        .collect();
    let mut columns: Vec<Column> = (0..frame.len())
        .map(|i| Column::Set(FocalSet::singleton(i)))
        .collect();
    columns.extend(unions.into_iter().map(|(_, m)| Column::Set(FocalSet(m))));
    if cfg.rule.can_reject() {
        columns.push(Column::Reject);
    }

    let present: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
    let mut row_labels: Vec<(String, bool)> = frame
        .labels()
        .iter()
        .filter(|l| present.contains(l.as_str()))
        .map(|l| (l.clone(), true))
        .collect();
    row_labels.extend(
        present
            .iter()
            .filter(|l| frame.index_of(l).is_none())
            .map(|l| (l.to_string(), false)),
    );

    let mut rows: Vec<ReportRow> = row_labels
        .into_iter()
        .map(|(label, learned)| ReportRow {
            label,
            learned,
            total: 0,
            counts: vec![0; columns.len()],
            conflict_sum: cfg.rule.uses_fusion().then_some(0.0),
        })
        .collect();

    for (label, p) in labels.iter().zip(predictions) {
        let row = rows
            .iter_mut()
            .find(|r| &r.label == label)
            .expect("every label has a row");
        let col = match p.outcome.set() {
            Some(s) => Column::Set(s),
            None => Column::Reject,
        };
        let k = columns
            .iter()
            .position(|&c| c == col)
            .expect("every outcome has a column");
        row.total += 1;
        row.counts[k] += 1;
        if let (Some(sum), Some(c)) = (row.conflict_sum.as_mut(), p.conflict) {
            *sum += c;
        }
    }

    EvalReport {
        frame: frame.clone(),
        rule: cfg.rule,
        r: cfg.r,
        columns,
        rows,
    }
}

/// Predicts every row of `data` and tabulates the decisions.
pub fn evaluate(
    model: &EvidentialModel,
    data: &Dataset,
    cfg: &RunConfig,
) -> Result<EvalReport, EvalError> {
    if data.dim() != model.dim() {
        return Err(EvalError::Dimension {
            expected: model.dim(),
            got: data.dim(),
        });
    }
    let predictions = predict(model, &data.features, cfg)?;
    Ok(build_report(&model.frame, &data.labels, &predictions, cfg))
}
