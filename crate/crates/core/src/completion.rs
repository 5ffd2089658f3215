//! Trace-norm regularized completion of the co-occurrence matrix.
//!
//! Minimizes `1/2 * sum_{(i,j) in omega} (A_ij - X_ij)^2 + lambda * ||X||_*`
//! by proximal gradient descent,
//!
//! ```text
//! X_{k+1} = prox_{lambda * rho}( X_k + rho * (P_omega(A) - P_omega(X_k)) )
//! ```
//!
//! where the prox is singular value soft-thresholding. The smooth part has a
//! 1-Lipschitz gradient, so the default fixed step `rho = 1` gives monotone
//! descent. Iterates start from zero; the result is clamped to `[0, 1]` once,
//! after the last iteration.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::concepts::CoocMatrix;
use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix};

/// Singular values above this count toward the rank estimate.
pub const RANK_EPS: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionConfig {
    pub lambda: f64,
    pub step_size: f64,
    pub max_iters: usize,
    /// Relative objective change below which iteration stops.
    pub tol: f64,
    pub clamp_output: bool,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig {
            lambda: 0.0,
            step_size: 1.0,
            max_iters: 200,
            tol: 1e-5,
            clamp_output: true,
        }
    }
}

impl CompletionConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        CompletionConfig {
            lambda,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Invalid(format!(
                "step size must be > 0, got {}",
                self.step_size
            )));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Invalid(format!("tol must be >= 0, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CompletedMatrix {
    /// The completed matrix, concepts by sentences.
    pub a_hat: Matrix,
    pub iterations_run: usize,
    pub converged: bool,
    /// Objective at the starting point followed by one value per iteration.
    pub objective_trace: Vec<f64>,
    /// Rank after each prox step, aligned with `objective_trace[1..]`.
    pub rank_trace: Vec<usize>,
    pub rank_estimate: usize,
    /// Trace norm of the final iterate before clamping.
    pub nuclear_norm: f64,
    pub lambda: f64,
    sentence_ids: Vec<i64>,
    column_of: HashMap<i64, usize>,
}

impl CompletedMatrix {
    pub fn get(&self, concept: usize, column: usize) -> f64 {
        self.a_hat.get(concept, column)
    }

    pub fn sentence_ids(&self) -> &[i64] {
        &self.sentence_ids
    }

    pub fn column_of(&self, sentence_id: i64) -> Option<usize> {
        self.column_of.get(&sentence_id).copied()
    }

    /// Per-iteration diagnostics as `iter,objective,rank_estimate`.
    /// Iteration 0 is the starting point.
    pub fn write_trace_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "iter,objective,rank_estimate")?;
        for (k, f) in self.objective_trace.iter().enumerate() {
            let rank = if k == 0 { 0 } else { self.rank_trace[k - 1] };
            writeln!(out, "{k},{f:.12e},{rank}")?;
        }
        Ok(())
    }
}

struct Prox {
    value: Matrix,
    nuclear_norm: f64,
    rank: usize,
}

fn prox(m: &Matrix, t: f64) -> Result<Prox> {
    let s = svd(m)?;
    let shrunk: Vec<f64> = s.sigma.iter().map(|&x| (x - t).max(0.0)).collect();
    let rank = shrunk.iter().filter(|&&x| x > RANK_EPS).count();
    let nuclear_norm = shrunk.iter().sum();
    // prox_0 is the identity; skip the round trip through the factors
    let value = if t == 0.0 {
        m.clone()
    } else {
        s.reconstruct_with(|x| (x - t).max(0.0))
    };
    Ok(Prox {
        value,
        nuclear_norm,
        rank,
    })
}

/// Singular value soft-thresholding: `U diag((sigma - t)_+) V^T`.
pub fn soft_threshold(m: &Matrix, t: f64) -> Result<Matrix> {
    if !(t >= 0.0) {
        return Err(Error::Invalid(format!("threshold must be >= 0, got {t}")));
    }
    Ok(prox(m, t)?.value)
}

/// Keeps entries at `omega`, zeroes everything else.
pub fn project_omega(m: &Matrix, omega: &[(usize, usize)]) -> Result<Matrix> {
    let mut out = Matrix::zeros(m.nrows(), m.ncols());
    for &(i, j) in omega {
        check_bounds(m, i, j)?;
        out.set(i, j, m.get(i, j));
    }
    Ok(out)
}

fn check_bounds(m: &Matrix, i: usize, j: usize) -> Result<()> {
    if i >= m.nrows() || j >= m.ncols() {
        return Err(Error::OutOfBounds {
            row: i,
            col: j,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn check_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", a.nrows(), a.ncols()),
            found: format!("{}x{}", b.nrows(), b.ncols()),
        });
    }
    Ok(())
}

fn observed_loss(a: &Matrix, omega: &[(usize, usize)], a_hat: &Matrix) -> f64 {
    0.5 * omega
        .iter()
        .map(|&(i, j)| {
            let d = a.get(i, j) - a_hat.get(i, j);
            d * d
        })
        .sum::<f64>()
}

/// Completion objective for a binary matrix, with omega its support.
pub fn objective(a: &CoocMatrix, a_hat: &Matrix, lambda: f64) -> Result<f64> {
    objective_observed(&a.to_dense(), &a.omega(), a_hat, lambda)
}

/// Completion objective for arbitrary observed values and positions.
pub fn objective_observed(
    a: &Matrix,
    omega: &[(usize, usize)],
    a_hat: &Matrix,
    lambda: f64,
) -> Result<f64> {
    check_shape(a, a_hat)?;
    for &(i, j) in omega {
        check_bounds(a, i, j)?;
    }
    let nuclear = if lambda == 0.0 { 0.0 } else { svd(a_hat)?.nuclear_norm() };
    Ok(observed_loss(a, omega, a_hat) + lambda * nuclear)
}

/// Completes a binary co-occurrence matrix, observing its support.
pub fn complete(a: &CoocMatrix, cfg: &CompletionConfig) -> Result<CompletedMatrix> {
    let mut out = complete_observed(&a.to_dense(), &a.omega(), cfg)?;
    out.sentence_ids = a.sentence_ids().to_vec();
    out.column_of = out
        .sentence_ids
        .iter()
        .enumerate()
        .map(|(j, &id)| (id, j))
        .collect();
    Ok(out)
}

/// Proximal gradient completion of `a` observed at `omega`.
///
/// Columns of the result are labelled `0..ncols` as sentence ids; use
/// [`complete`] to carry real sentence ids.
pub fn complete_observed(
    a: &Matrix,
    omega: &[(usize, usize)],
    cfg: &CompletionConfig,
) -> Result<CompletedMatrix> {
    cfg.validate()?;
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Invalid("cannot complete an empty matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("observed matrix".into()));
    }
    for &(i, j) in omega {
        check_bounds(a, i, j)?;
    }

    let rho = cfg.step_size;
    let threshold = cfg.lambda * rho;
    let mut a_hat = Matrix::zeros(a.nrows(), a.ncols());
    let mut f_prev = observed_loss(a, omega, &a_hat);
    let mut objective_trace = vec![f_prev];
    let mut rank_trace = Vec::new();
    let mut nuclear_norm = 0.0;
    let mut converged = false;
    let mut iterations_run = 0;

    for k in 1..=cfg.max_iters {
        let mut step = a_hat.clone();
        for &(i, j) in omega {
            let g = a.get(i, j) - a_hat.get(i, j);
            step.set(i, j, a_hat.get(i, j) + rho * g);
        }
        let p = prox(&step, threshold)?;
        if !p.value.is_finite() || !p.nuclear_norm.is_finite() {
            return Err(Error::NonFinite(format!(
                "iterate {k} (lambda {}, step {rho})",
                cfg.lambda
            )));
        }
        a_hat = p.value;
        nuclear_norm = p.nuclear_norm;
        let f = observed_loss(a, omega, &a_hat) + cfg.lambda * nuclear_norm;
        objective_trace.push(f);
        rank_trace.push(p.rank);
        iterations_run = k;

        // the objective is non-negative, so zero is optimal
        if f == 0.0 || (f - f_prev).abs() <= cfg.tol * f_prev.abs() {
            converged = true;
            break;
        }
        f_prev = f;
    }

    if cfg.clamp_output {
        a_hat.map_inplace(|x| x.clamp(0.0, 1.0));
    }
    let rank_estimate = rank_trace.last().copied().unwrap_or(0);
    let sentence_ids: Vec<i64> = (0..a.ncols() as i64).collect();
    let column_of = sentence_ids.iter().map(|&id| (id, id as usize)).collect();
    log::debug!(
        "completion lambda={} iterations={} converged={} rank={}",
        cfg.lambda,
        iterations_run,
        converged,
        rank_estimate
    );
    Ok(CompletedMatrix {
        a_hat,
        iterations_run,
        converged,
        objective_trace,
        rank_trace,
        rank_estimate,
        nuclear_norm,
        lambda: cfg.lambda,
        sentence_ids,
        column_of,
    })
}
