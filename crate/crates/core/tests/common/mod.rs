//! Independent reference implementations used as test oracles, plus random
//! input generators.
//!
//! Everything here is written from the definitions, without reusing the
//! library's own folds or bit tricks, so agreement is meaningful.

#![allow(dead_code)]

use std::sync::Arc;

use evsvm::belief::{FocalSet, Frame, MassFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn frame(n: usize) -> Arc<Frame> {
    let labels: Vec<String> = (0..n)
        .map(|i| ((b'a' + i as u8) as char).to_string())
        .collect();
    Arc::new(Frame::new(labels).unwrap())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Explicit subset test: every member of `a` is a member of `b`.
pub fn subset(a: u32, b: u32, n: usize) -> bool {
    (0..n).all(|i| a & (1 << i) == 0 || b & (1 << i) != 0)
}

/// Explicit intersection by member listing.
pub fn meet(a: u32, b: u32, n: usize) -> u32 {
    (0..n)
        .filter(|&i| a & (1 << i) != 0 && b & (1 << i) != 0)
        .fold(0, |acc, i| acc | (1 << i))
}

pub fn bel_oracle(m: &[f64], x: u32, n: usize) -> f64 {
    (1..m.len() as u32)
        .filter(|&a| subset(a, x, n))
        .map(|a| m[a as usize])
        .sum()
}

pub fn pl_oracle(m: &[f64], x: u32, n: usize) -> f64 {
    (1..m.len() as u32)
        .filter(|&a| meet(a, x, n) != 0)
        .map(|a| m[a as usize])
        .sum()
}

pub fn betp_oracle(m: &[f64], n: usize) -> Vec<f64> {
    let open = 1.0 - m[0];
    (0..n)
        .map(|w| {
            (1..m.len() as u32)
                .filter(|&a| a & (1 << w) != 0)
                .map(|a| m[a as usize] / a.count_ones() as f64)
                .sum::<f64>()
                / open
        })
        .collect()
}

/// Conjunctive combination by enumerating every tuple of focal elements,
/// one from each source, and crediting the product to their intersection.
pub fn conjunctive_oracle(sources: &[Vec<f64>], n: usize) -> Vec<f64> {
    let size = 1usize << n;
    let focal: Vec<Vec<(u32, f64)>> = sources
        .iter()
        .map(|m| {
            (0..size as u32)
                .filter(|&a| m[a as usize] != 0.0)
                .map(|a| (a, m[a as usize]))
                .collect()
        })
        .collect();
    let mut out = vec![0.0; size];
    let mut idx = vec![0usize; sources.len()];
    'outer: loop {
        let mut set = (size - 1) as u32;
        let mut prod = 1.0;
        for (s, &k) in idx.iter().enumerate() {
            let (a, v) = focal[s][k];
            set = meet(set, a, n);
            prod *= v;
        }
        out[set as usize] += prod;
        for s in (0..idx.len()).rev() {
            idx[s] += 1;
            if idx[s] < focal[s].len() {
                continue 'outer;
            }
            idx[s] = 0;
        }
        break;
    }
    out
}

/// Dempster's rule from the conjunctive oracle: drop ∅ and rescale.
pub fn dempster_oracle(sources: &[Vec<f64>], n: usize) -> (Vec<f64>, f64) {
    let mut conj = conjunctive_oracle(sources, n);
    let k = conj[0];
    conj[0] = 0.0;
    for v in conj.iter_mut().skip(1) {
        *v /= 1.0 - k;
    }
    (conj, k)
}

/// A random closed-world mass on `focal` distinct random subsets.
pub fn random_mass(rng: &mut impl Rng, n: usize, focal: usize) -> Vec<f64> {
    random_mass_inner(rng, n, focal, false)
}

/// A random mass which may also put weight on ∅.
pub fn random_open_mass(rng: &mut impl Rng, n: usize, focal: usize) -> Vec<f64> {
    random_mass_inner(rng, n, focal, true)
}

fn random_mass_inner(rng: &mut impl Rng, n: usize, focal: usize, open: bool) -> Vec<f64> {
    let size = 1usize << n;
    let lo = if open { 0 } else { 1 };
    let mut m = vec![0.0; size];
    let mut total = 0.0;
    for _ in 0..focal {
        let a = rng.random_range(lo..size);
        let v: f64 = rng.random_range(0.01..1.0);
        m[a] += v;
        total += v;
    }
    for v in &mut m {
        *v /= total;
    }
    m
}

pub fn mass(frame: &Arc<Frame>, m: Vec<f64>) -> MassFunction {
    MassFunction::from_dense(Arc::clone(frame), m).unwrap()
}

pub fn set(mask: u32) -> FocalSet {
    FocalSet(mask)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// KKT residual of a dual solution, measured as the maximal violating pair
/// gap `max_{I_up} −y∇ − min_{I_low} −y∇` where `∇_t = y_t f(x_t) − 1`
/// without the bias. Computed from scratch with explicit kernel sums.
pub fn kkt_gap(
    points: &[Vec<f64>],
    labels: &[i8],
    alphas: &[f64],
    c: f64,
    kernel: &evsvm::Kernel,
) -> f64 {
    let l = points.len();
    let y: Vec<f64> = labels.iter().map(|&v| f64::from(v)).collect();
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for t in 0..l {
        let mut g = -1.0;
        for s in 0..l {
            g += y[t] * y[s] * alphas[s] * kernel.eval(&points[t], &points[s]).unwrap();
        }
        let v = -y[t] * g;
        let in_up = (y[t] > 0.0 && alphas[t] < c) || (y[t] < 0.0 && alphas[t] > 0.0);
        let in_low = (y[t] > 0.0 && alphas[t] > 0.0) || (y[t] < 0.0 && alphas[t] < c);
        if in_up {
            up = up.max(v);
        }
        if in_low {
            low = low.min(v);
        }
    }
    up - low
}

/// Two Gaussian-ish clusters that are separated by a margin along a random
/// direction.
pub fn separable_problem(rng: &mut impl Rng, l: usize, d: usize) -> (Vec<Vec<f64>>, Vec<i8>) {
    let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
    let dir: Vec<f64> = dir.iter().map(|v| v / norm).collect();
    let mut points = Vec::with_capacity(l);
    let mut labels = Vec::with_capacity(l);
    for t in 0..l {
        let y: i8 = if t % 2 == 0 { 1 } else { -1 };
        let mut x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let proj: f64 = x.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let shift = f64::from(y) * rng.random_range(0.5..2.0) - proj;
        for (xi, di) in x.iter_mut().zip(&dir) {
            *xi += shift * di;
        }
        points.push(x);
        labels.push(y);
    }
    (points, labels)
}
