//! Binary soft-margin SVM trained in the dual with Sequential Minimal
//! Optimization.
//!
//! The solver minimizes `½ αᵀQα − eᵀα` subject to `0 ≤ α_t ≤ C` and
//! `Σ y_t α_t = 0`, where `Q_tu = y_t y_u K(x_t, x_u)`. Each iteration picks
//! the maximal violating pair and solves the two-variable subproblem
//! analytically. Training stops once the KKT gap `m(α) − M(α)` drops to
//! `tol`, which bounds every margin condition by `tol`.
//!
//! Decision function: `f(x) = Σ_t y_t α_t K(x, x_t) + b`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid kernel: {0}")]
    Kernel(String),
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error("training needs both classes; only label {0:+} present")]
    SingleClass(i8),
    #[error("SMO did not converge after {iterations} iterations (KKT gap {gap:.3e})")]
    NotConverged {
        iterations: usize,
        gap: f64,
        best: Box<SvmModel>,
    },
}

/// Kernel function and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    /// `(x·y + 1)^degree`
    Polynomial {
        degree: u32,
    },
    /// `exp(−γ‖x − y‖²)`
    Rbf {
        gamma: f64,
    },
}

impl Kernel {
    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            Kernel::Linear => Ok(()),
            Kernel::Polynomial { degree } if degree >= 1 => Ok(()),
            Kernel::Polynomial { degree } => Err(SvmError::Kernel(format!(
                "polynomial degree must be ≥ 1, got {degree}"
            ))),
            Kernel::Rbf { gamma } if gamma > 0.0 && gamma.is_finite() => Ok(()),
            Kernel::Rbf { gamma } => Err(SvmError::Kernel(format!(
                "rbf gamma must be > 0, got {gamma}"
            ))),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, SvmError> {
        if x.len() != y.len() {
            return Err(SvmError::Dimension {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(self.compute(x, y))
    }

    #[inline]
    pub(crate) fn compute(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(x, y),
            Kernel::Polynomial { degree } => (dot(x, y) + 1.0).powi(degree as i32),
            Kernel::Rbf { gamma } => {
                // Summing (x−y)² directly keeps the kernel exactly symmetric.
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    /// Parses `linear`, `poly:δ` or `rbf:γ`. A bare `rbf` takes `γ = 1/dim`.
    pub fn parse_for_dim(s: &str, dim: usize) -> Result<Self, SvmError> {
        if s.trim() == "rbf" {
            if dim == 0 {
                return Err(SvmError::Kernel("rbf default gamma needs dim ≥ 1".into()));
            }
            return Ok(Kernel::Rbf {
                gamma: 1.0 / dim as f64,
            });
        }
        s.parse()
    }
}

impl FromStr for Kernel {
    type Err = SvmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let kernel = match (kind, arg) {
            ("linear", None) => Kernel::Linear,
            ("poly", Some(a)) => Kernel::Polynomial {
                degree: a
                    .parse()
                    .map_err(|_| SvmError::Kernel(format!("bad polynomial degree `{a}`")))?,
            },
            ("rbf", Some(a)) => Kernel::Rbf {
                gamma: a
                    .parse()
                    .map_err(|_| SvmError::Kernel(format!("bad rbf gamma `{a}`")))?,
            },
            _ => {
                return Err(SvmError::Kernel(format!(
                    "expected linear, poly:δ or rbf:γ, got `{s}`"
                )))
            }
        };
        kernel.validate()?;
        Ok(kernel)
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Linear => write!(f, "linear"),
            Kernel::Polynomial { degree } => write!(f, "poly:{degree}"),
            Kernel::Rbf { gamma } => write!(f, "rbf:{gamma}"),
        }
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Training data and hyperparameters for one binary task.
#[derive(Debug, Clone)]
pub struct SvmProblem {
    pub points: Vec<Vec<f64>>,
    /// `+1` or `−1` per point.
    pub labels: Vec<i8>,
    /// Error weight.
    pub c: f64,
    /// KKT tolerance.
    pub tol: f64,
}

impl SvmProblem {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<i8>, c: f64) -> Self {
        Self {
            points,
            labels,
            c,
            tol: 1e-3,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        let l = self.points.len();
        if l < 2 {
            return Err(SvmError::Problem(format!(
                "need at least 2 points, got {l}"
            )));
        }
        if self.labels.len() != l {
            return Err(SvmError::Problem(format!(
                "{} labels for {l} points",
                self.labels.len()
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvmError::Problem(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(SvmError::Problem(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        let d = self.dim();
        for (t, p) in self.points.iter().enumerate() {
            if p.len() != d {
                return Err(SvmError::Dimension {
                    expected: d,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(SvmError::Problem(format!(
                    "point {t} has a non-finite value"
                )));
            }
        }
        if let Some(bad) = self.labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(SvmError::Problem(format!("label {bad} is not ±1")));
        }
        let pos = self.labels.contains(&1);
        let neg = self.labels.contains(&-1);
        match (pos, neg) {
            (true, true) => Ok(()),
            (true, false) => Err(SvmError::SingleClass(1)),
            _ => Err(SvmError::SingleClass(-1)),
        }
    }
}

/// Solver knobs that do not change the optimization problem.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Iteration cap; `None` selects `10·l` passes of `l` pair updates,
    /// kept within `[10⁴, 10⁷]`.
    pub max_iter: Option<usize>,
    /// Memory budget for cached kernel rows, in bytes.
    pub cache_bytes: usize,
    /// Record the dual objective after every iteration.
    pub record_objective: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: None,
            cache_bytes: 64 << 20,
            record_objective: false,
        }
    }
}

/// Trained binary classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub support_vectors: Vec<Vec<f64>>,
    /// `y_t·α_t` for each support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    pub fn decision_function(&self, x: &[f64]) -> Result<f64, SvmError> {
        let d = self.dim();
        if x.len() != d {
            return Err(SvmError::Dimension {
                expected: d,
                got: x.len(),
            });
        }
        Ok(self.decision_unchecked(x))
    }

    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        let s: f64 = self
            .support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, c)| c * self.kernel.compute(x, sv))
            .sum();
        s + self.bias
    }
}

/// Full dual solution, including multipliers of non-support vectors.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Final `m(α) − M(α)`.
    pub gap: f64,
    /// Dual objective `Σα − ½αᵀQα` per iteration, when recorded.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

impl DualSolution {
    pub fn objective(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }

    fn to_model(&self, problem: &SvmProblem, kernel: Kernel) -> SvmModel {
        let mut support_vectors = Vec::new();
        let mut dual_coefs = Vec::new();
        for (t, &a) in self.alphas.iter().enumerate() {
            if a > 0.0 {
                support_vectors.push(problem.points[t].clone());
                dual_coefs.push(f64::from(problem.labels[t]) * a);
            }
        }
        SvmModel {
            kernel,
            support_vectors,
            dual_coefs,
            bias: self.bias,
        }
    }
}

/// LRU cache of kernel matrix rows.
struct KernelCache<'a> {
    points: &'a [Vec<f64>],
    kernel: Kernel,
    max_rows: usize,
    rows: HashMap<usize, (Arc<Vec<f64>>, u64)>,
    clock: u64,
}

impl<'a> KernelCache<'a> {
    fn new(points: &'a [Vec<f64>], kernel: Kernel, budget: usize) -> Self {
        let row_bytes = points.len().max(1) * std::mem::size_of::<f64>();
        Self {
            points,
            kernel,
            max_rows: (budget / row_bytes).max(2),
            rows: HashMap::new(),
            clock: 0,
        }
    }

    fn row(&mut self, i: usize) -> Arc<Vec<f64>> {
        self.clock += 1;
        if let Some((row, stamp)) = self.rows.get_mut(&i) {
            *stamp = self.clock;
            return Arc::clone(row);
        }
        if self.rows.len() >= self.max_rows {
            if let Some(&oldest) = self
                .rows
                .iter()
                .min_by_key(|(_, (_, stamp))| *stamp)
                .map(|(k, _)| k)
            {
                self.rows.remove(&oldest);
            }
        }
        let xi = &self.points[i];
        let row: Vec<f64> = self
            .points
            .iter()
            .map(|xj| self.kernel.compute(xi, xj))
            .collect();
        let row = Arc::new(row);
        self.rows.insert(i, (Arc::clone(&row), self.clock));
        row
    }
}

/// Small positive curvature used when the pair's kernel curvature is not
/// strictly positive.
const TAU: f64 = 1e-12;

/// Runs SMO and returns the dual solution even when the iteration cap is hit.
pub fn solve_dual(
    problem: &SvmProblem,
    kernel: Kernel,
    options: &SolverOptions,
) -> Result<DualSolution, SvmError> {
    problem.validate()?;
    kernel.validate()?;

    let l = problem.points.len();
    let c = problem.c;
    let y: Vec<f64> = problem.labels.iter().map(|&v| f64::from(v)).collect();
    let diag: Vec<f64> = problem
        .points
        .iter()
        .map(|x| kernel.compute(x, x))
        .collect();
    let max_iter = options
        .max_iter
        .unwrap_or_else(|| (10 * l * l).clamp(10_000, 10_000_000));

    let mut cache = KernelCache::new(&problem.points, kernel, options.cache_bytes);
    let mut alpha = vec![0.0; l];
    // Gradient of ½αᵀQα − eᵀα.
    let mut grad = vec![-1.0; l];
    let mut trace = Vec::new();
    if options.record_objective {
        trace.push(0.0);
    }

    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut gap;
    loop {
        // Maximal violating pair.
        let mut i = usize::MAX;
        let mut j = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        for t in 0..l {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < g_min {
                g_min = v;
                j = t;
            }
        }
        gap = g_max - g_min;
        if i == usize::MAX || j == usize::MAX || gap <= problem.tol {
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let ki = cache.row(i);
        let kj = cache.row(j);
        let (old_i, old_j) = (alpha[i], alpha[j]);

        if y[i] != y[j] {
            let mut quad = diag[i] + diag[j] - 2.0 * ki[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = diag[i] + diag[j] - 2.0 * ki[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        for t in 0..l {
            grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
        }
        if options.record_objective {
            trace.push(dual_objective(&alpha, &grad));
        }
    }

    let bias = recover_bias(&alpha, &y, &grad, c);
    Ok(DualSolution {
        alphas: alpha,
        bias,
        iterations,
        gap,
        objective_trace: trace,
        converged: gap <= problem.tol,
    })
}

/// `Σα − ½αᵀQα`, using `G = Qα − e`.
fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    -0.5 * alpha
        .iter()
        .zip(grad)
        .map(|(a, g)| a * (g - 1.0))
        .sum::<f64>()
}

/// Average of `y_t − Σ_u y_u α_u K_ut` over free vectors, or the midpoint of
/// the bracket implied by bound vectors when none is free.
fn recover_bias(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        // y_t − (Qα)_t·y_t = −y_t·G_t
        let v = -y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] > 0.0 {
                hi = hi.min(v);
            } else {
                lo = lo.max(v);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                lo = lo.max(v);
            } else {
                hi = hi.min(v);
            }
        } else {
            free += 1;
            free_sum += v;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    }
}

/// Trains a binary SVM with default solver options.
pub fn train_binary(problem: &SvmProblem, kernel: Kernel) -> Result<SvmModel, SvmError> {
    train_binary_with(problem, kernel, &SolverOptions::default())
}

pub fn train_binary_with(
    problem: &SvmProblem,
    kernel: Kernel,
    options: &SolverOptions,
) -> Result<SvmModel, SvmError> {
    let sol = solve_dual(problem, kernel, options)?;
    let model = sol.to_model(problem, kernel);
    if !sol.converged {
        return Err(SvmError::NotConverged {
            iterations: sol.iterations,
            gap: sol.gap,
            best: Box::new(model),
        });
    }
    Ok(model)
}
