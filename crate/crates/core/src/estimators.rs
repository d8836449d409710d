//! The sparse estimators: Dantzig selector, Lasso, and the sup-norm
//! (Chebyshev) fit used as its foil.
//!
//! Conventions, fixed once for the whole crate:
//! - The Lasso objective is `|Y - Xβ|² + λ Σ|β_j|` (penalty added to the
//!   squared error, no 1/2 or 1/n factor).
//! - The Dantzig constraint is the raw-scale `‖Xᵀ(Y - Xβ)‖_∞ ≤ λ`.
//! - On an orthogonal normalized design (XᵀX = nI) both reduce to soft
//!   thresholding and `dantzig_fit(λ)` agrees with `lasso_fit(2λ)`.

use crate::cv::{self, CvPlan};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::lp::{lp_solve, LinearProgram, LpStatus, VarBound};
use crate::problem::{CoefficientVector, RegressionProblem};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::collections::HashMap;

/// Which estimator produced a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    Dantzig,
    Lasso,
    Chebyshev,
    SoftThreshold,
}

/// Estimated coefficients plus solver metadata.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: CoefficientVector,
    pub lambda: f64,
    pub method: FitMethod,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Serialize for FitResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("FitResult", 7)?;
        s.serialize_field("method", &self.method)?;
        s.serialize_field("lambda", &self.lambda)?;
        s.serialize_field("coefficients", self.coefficients.values())?;
        s.serialize_field("objective", &self.objective_value)?;
        s.serialize_field("iterations", &self.iterations)?;
        s.serialize_field("converged", &self.converged)?;
        s.serialize_field("support", &self.coefficients.support())?;
        s.end()
    }
}

/// sign(z) · max(|z| - t, 0).
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Default λ for the raw-scale Dantzig constraint: σ·√(2 n log p).
///
/// On a normalized design this puts the per-coordinate threshold λ/n at the
/// universal level σ·√(2 log p / n). The discussion's stated order
/// σ·√(2 log n / p) inverts that expression; we ship the conventional form and
/// flag the discrepancy rather than resolve it.
pub fn lambda_default(sigma: f64, n: usize, p: usize) -> f64 {
    sigma * (2.0 * n as f64 * (p as f64).ln().max(0.0)).sqrt()
}

/// Feasibility slack accepted on the Dantzig constraint.
pub const DANTZIG_FEASIBILITY_TOLERANCE: f64 = 1e-6;

/// Solves min Σ|β_j| subject to ‖Xᵀ(Y - Xβ)‖_∞ ≤ λ.
///
/// The LP is solved by constraint generation: only the sup-norm constraint
/// rows that are active or violated ever enter the working problem, so the
/// tableau stays near support-sized even for large p. The returned vertex is
/// exactly optimal for the full LP (the relaxation's optimum became feasible).
pub fn dantzig_fit(problem: &RegressionProblem, lambda: f64) -> Result<FitResult> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgs("lambda must be nonnegative".into()));
    }
    let x = problem.design();
    let y = problem.response();
    let p = problem.p();
    let v = x.t_matvec(y); // XᵀY
    let scale = linalg::inf_norm(&v).max(1.0);
    let feas_tol = 1e-9 * scale;

    if linalg::inf_norm(&v) <= lambda + feas_tol {
        // β = 0 is feasible and l1-minimal.
        return Ok(FitResult {
            coefficients: CoefficientVector::zeros(p),
            lambda,
            method: FitMethod::Dantzig,
            objective_value: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    // Cached rows of XᵀX, computed on demand.
    let mut gram_rows: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut gram_row = |j: usize| -> Vec<f64> {
        gram_rows
            .entry(j)
            .or_insert_with(|| x.t_matvec(x.col(j)))
            .clone()
    };

    // Working set of (constraint index, side) pairs. side +1 encodes
    // v_j - g_jᵀβ ≤ λ, side -1 encodes g_jᵀβ - v_j ≤ λ.
    let mut working: Vec<(usize, i8)> = Vec::new();
    let mut in_working = vec![[false; 2]; p];
    let add = |working: &mut Vec<(usize, i8)>,
                   in_working: &mut Vec<[bool; 2]>,
                   j: usize,
                   side: i8|
     -> bool {
        let slot = if side > 0 { 0 } else { 1 };
        if in_working[j][slot] {
            return false;
        }
        in_working[j][slot] = true;
        working.push((j, side));
        true
    };

    // Seed with the most binding constraint at β = 0.
    let j0 = (0..p)
        .max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap())
        .unwrap();
    add(
        &mut working,
        &mut in_working,
        j0,
        if v[j0] >= 0.0 { 1 } else { -1 },
    );

    let max_outer = 4 * p + 50;
    let mut beta = vec![0.0; p];
    for outer in 1..=max_outer {
        // LP over (β⁺, β⁻) ≥ 0 with unit costs.
        let nv = 2 * p;
        let objective = vec![1.0; nv];
        let mut constraints = Vec::with_capacity(working.len());
        for &(j, side) in &working {
            let g = gram_row(j);
            let mut row = vec![0.0; nv];
            let sgn = side as f64;
            for k in 0..p {
                // side +1: -g_jᵀβ ≤ λ - v_j ; side -1: g_jᵀβ ≤ λ + v_j
                row[k] = -sgn * g[k];
                row[p + k] = sgn * g[k];
            }
            constraints.push((row, lambda - sgn * v[j]));
        }
        let lp = LinearProgram {
            objective,
            constraints,
            bounds: vec![VarBound::NonNeg; nv],
        };
        let sol = lp_solve(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::NumericalFailure(format!(
                "dantzig LP returned {:?}",
                sol.status
            )));
        }
        for k in 0..p {
            beta[k] = sol.x[k] - sol.x[p + k];
        }

        // Check the full constraint set.
        let fitted = x.matvec(&beta);
        let residual: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let corr = x.t_matvec(&residual);
        let mut added = false;
        // Add the most violated constraints (up to 3 per round).
        let mut viols: Vec<(f64, usize, i8)> = corr
            .iter()
            .enumerate()
            .filter_map(|(j, &c)| {
                let excess = c.abs() - lambda;
                if excess > feas_tol {
                    Some((excess, j, if c >= 0.0 { 1i8 } else { -1i8 }))
                } else {
                    None
                }
            })
            .collect();
        viols.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        for &(_, j, side) in viols.iter().take(3) {
            if add(&mut working, &mut in_working, j, side) {
                added = true;
            }
        }
        if !added {
            let objective_value: f64 = beta.iter().map(|b| b.abs()).sum();
            return Ok(FitResult {
                coefficients: CoefficientVector::new(beta),
                lambda,
                method: FitMethod::Dantzig,
                objective_value,
                iterations: outer,
                converged: true,
            });
        }
    }
    Err(Error::NumericalFailure(
        "dantzig constraint generation did not converge".into(),
    ))
}

/// ‖Xᵀ(Y - Xβ)‖_∞ for a candidate fit; the Dantzig feasibility certificate.
pub fn dantzig_feasibility(problem: &RegressionProblem, beta: &CoefficientVector) -> f64 {
    let fitted = problem.design().matvec(beta.values());
    let residual: Vec<f64> = problem
        .response()
        .iter()
        .zip(&fitted)
        .map(|(a, b)| a - b)
        .collect();
    linalg::inf_norm(&problem.design().t_matvec(&residual))
}

/// Lasso convergence: max coefficient change per sweep.
pub const LASSO_SWEEP_TOLERANCE: f64 = 1e-10;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

/// minimize |Y - Xβ|² + λ Σ|β_j| by pathwise cyclic coordinate descent.
///
/// The solver descends a geometric λ path from 2‖XᵀY‖_∞ (where the solution
/// is exactly zero) down to the requested λ, warm-starting each stage with the
/// previous one. Cold-started descent can otherwise crawl along flat
/// directions of a degenerate Gram at small λ; with warm starts each stage
/// begins near its optimum. `iterations` reports the total sweeps on the path.
pub fn lasso_fit(problem: &RegressionProblem, lambda: f64) -> Result<FitResult> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgs("lambda must be nonnegative".into()));
    }
    let lambda_max =
        2.0 * linalg::inf_norm(&problem.design().t_matvec(problem.response()));
    if lambda >= lambda_max {
        return lasso_fit_from(problem, lambda, None);
    }
    let mut stages: Vec<f64> = Vec::new();
    let mut t = 0.5 * lambda_max;
    while t > lambda && t > 1e-12 * lambda_max && stages.len() < 60 {
        stages.push(t);
        t *= 0.5;
    }
    stages.push(lambda);

    let mut warm: Option<CoefficientVector> = None;
    let mut total_sweeps = 0usize;
    let mut fit = None;
    for &stage_lambda in &stages {
        let stage = lasso_fit_from(problem, stage_lambda, warm.as_ref())?;
        total_sweeps += stage.iterations;
        warm = Some(stage.coefficients.clone());
        fit = Some(stage);
    }
    let mut fit = fit.expect("path has at least one stage");
    fit.iterations = total_sweeps;
    Ok(fit)
}

/// Same as [`lasso_fit`] but warm-started, for λ-grid reuse.
pub fn lasso_fit_from(
    problem: &RegressionProblem,
    lambda: f64,
    start: Option<&CoefficientVector>,
) -> Result<FitResult> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgs("lambda must be nonnegative".into()));
    }
    let x = problem.design();
    let y = problem.response();
    let n = problem.n();
    let p = problem.p();
    let sq_norms: Vec<f64> = (0..p).map(|j| linalg::dot(x.col(j), x.col(j))).collect();
    if sq_norms.iter().any(|&s| s == 0.0) {
        let j = sq_norms.iter().position(|&s| s == 0.0).unwrap();
        return Err(Error::ZeroColumn(j));
    }

    let mut beta = match start {
        Some(b) if b.len() == p => b.values().to_vec(),
        _ => vec![0.0; p],
    };
    let mut residual = {
        let fitted = x.matvec(&beta);
        y.iter()
            .zip(&fitted)
            .map(|(a, b)| a - b)
            .collect::<Vec<f64>>()
    };
    let half_lambda = 0.5 * lambda;

    let mut sweeps = 0usize;
    let mut converged = false;
    // Alternate full sweeps with cheap passes over the current active set.
    while sweeps < LASSO_MAX_SWEEPS {
        let delta = cd_sweep(x, &mut beta, &mut residual, &sq_norms, half_lambda, None);
        sweeps += 1;
        if delta <= LASSO_SWEEP_TOLERANCE {
            converged = true;
            break;
        }
        let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        if active.len() < p {
            while sweeps < LASSO_MAX_SWEEPS {
                let d = cd_sweep(
                    x,
                    &mut beta,
                    &mut residual,
                    &sq_norms,
                    half_lambda,
                    Some(&active),
                );
                sweeps += 1;
                if d <= LASSO_SWEEP_TOLERANCE {
                    break;
                }
            }
        }
        if sweeps % 200 == 0 {
            // Refresh the residual to cap incremental drift.
            let fitted = x.matvec(&beta);
            residual = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        }
    }

    let fitted = x.matvec(&beta);
    let residual: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss = linalg::dot(&residual, &residual);
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let _ = n;
    Ok(FitResult {
        coefficients: CoefficientVector::new(beta),
        lambda,
        method: FitMethod::Lasso,
        objective_value: rss + lambda * l1,
        iterations: sweeps,
        converged,
    })
}

fn cd_sweep(
    x: &Mat,
    beta: &mut [f64],
    residual: &mut [f64],
    sq_norms: &[f64],
    half_lambda: f64,
    subset: Option<&[usize]>,
) -> f64 {
    let p = beta.len();
    let mut max_delta = 0.0f64;
    let mut update = |j: usize, beta: &mut [f64], residual: &mut [f64]| {
        let col = x.col(j);
        let z = linalg::dot(col, residual) + sq_norms[j] * beta[j];
        let new = soft_threshold(z, half_lambda) / sq_norms[j];
        let delta = new - beta[j];
        if delta != 0.0 {
            for (r, c) in residual.iter_mut().zip(col) {
                *r -= delta * c;
            }
            beta[j] = new;
        }
        max_delta = max_delta.max(delta.abs());
    };
    match subset {
        Some(idx) => {
            for &j in idx {
                update(j, beta, residual);
            }
        }
        None => {
            for j in 0..p {
                update(j, beta, residual);
            }
        }
    }
    max_delta
}

/// Worst-case violation of the Lasso stationarity (KKT) conditions.
///
/// For β_j ≠ 0 this is |2X_jᵀ(Y - Xβ) - λ·sign(β_j)|, for β_j = 0 it is
/// max(0, |2X_jᵀ(Y - Xβ)| - λ).
pub fn lasso_kkt_residual(
    problem: &RegressionProblem,
    beta: &CoefficientVector,
    lambda: f64,
) -> f64 {
    let fitted = problem.design().matvec(beta.values());
    let residual: Vec<f64> = problem
        .response()
        .iter()
        .zip(&fitted)
        .map(|(a, b)| a - b)
        .collect();
    let grad = problem.design().t_matvec(&residual);
    beta.values()
        .iter()
        .zip(&grad)
        .map(|(&b, &g)| {
            if b != 0.0 {
                (2.0 * g - lambda * b.signum()).abs()
            } else {
                (2.0 * g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0f64, f64::max)
}

/// minimize max_i |Y_i - (Xβ)_i| via LP over (β, t).
pub fn chebyshev_fit(problem: &RegressionProblem) -> Result<FitResult> {
    let x = problem.design();
    let y = problem.response();
    let n = problem.n();
    let p = problem.p();
    // Variables: β (free, p entries) then t (nonnegative).
    let mut objective = vec![0.0; p + 1];
    objective[p] = 1.0;
    let mut constraints = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut row_hi = vec![0.0; p + 1];
        let mut row_lo = vec![0.0; p + 1];
        for j in 0..p {
            row_hi[j] = -x.get(i, j);
            row_lo[j] = x.get(i, j);
        }
        row_hi[p] = -1.0;
        row_lo[p] = -1.0;
        // y_i - (Xβ)_i ≤ t  and  (Xβ)_i - y_i ≤ t
        constraints.push((row_hi, -y[i]));
        constraints.push((row_lo, y[i]));
    }
    let mut bounds = vec![VarBound::Free; p];
    bounds.push(VarBound::NonNeg);
    let sol = lp_solve(&LinearProgram {
        objective,
        constraints,
        bounds,
    })?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NumericalFailure(format!(
            "chebyshev LP returned {:?}",
            sol.status
        )));
    }
    Ok(FitResult {
        coefficients: CoefficientVector::new(sol.x[..p].to_vec()),
        lambda: 0.0,
        method: FitMethod::Chebyshev,
        objective_value: sol.objective,
        iterations: sol.iterations,
        converged: true,
    })
}

/// Closed-form fit on an orthogonal normalized design: β_j = soft(X_jᵀY/n, t).
pub fn soft_threshold_fit(problem: &RegressionProblem, threshold: f64) -> FitResult {
    let n = problem.n() as f64;
    let z = problem.design().t_matvec(problem.response());
    let beta: Vec<f64> = z.iter().map(|&v| soft_threshold(v / n, threshold)).collect();
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    FitResult {
        coefficients: CoefficientVector::new(beta),
        lambda: threshold,
        method: FitMethod::SoftThreshold,
        objective_value: l1,
        iterations: 0,
        converged: true,
    }
}

/// Result of the residual-mean-square noise estimate.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaEstimate {
    pub sigma: f64,
    /// λ chosen by cross-validation for the underlying Lasso fit.
    pub lambda: f64,
    /// Support size of the final Lasso fit, used as degrees of freedom.
    pub df: usize,
}

/// σ̂ = √(RSS / (n - df)) after a cross-validated Lasso fit on all data,
/// with df the support size of that fit.
pub fn estimate_sigma(problem: &RegressionProblem) -> Result<SigmaEstimate> {
    let n = problem.n();
    if n < 3 {
        return Err(Error::InvalidArgs("estimate_sigma needs n >= 3".into()));
    }
    let v = problem.design().t_matvec(problem.response());
    let lambda_max = 2.0 * linalg::inf_norm(&v) * (1.0 + 1e-9);
    if lambda_max == 0.0 {
        // Y = 0: zero fit, zero residual.
        return Ok(SigmaEstimate {
            sigma: 0.0,
            lambda: 0.0,
            df: 0,
        });
    }
    // Wide geometric grid down to the noiseless regime.
    let npts = 17usize;
    let lo = lambda_max * 1e-8;
    let ratio = (lambda_max / lo).powf(1.0 / (npts - 1) as f64);
    let grid: Vec<f64> = (0..npts).map(|k| lo * ratio.powi(k as i32)).collect();
    let plan = CvPlan::new(cv::DEFAULT_FOLDS, grid, FitMethod::Lasso, 0x5eed)
        .with_default_test_size(n);
    let cv_result = cv::cross_validate(problem, &plan)?;
    let fit = lasso_fit(problem, cv_result.chosen_lambda)?;
    let df = fit.coefficients.sparsity();
    if df >= n {
        return Err(Error::DegenerateFit { df, n });
    }
    let fitted = problem.design().matvec(fit.coefficients.values());
    let rss: f64 = problem
        .response()
        .iter()
        .zip(&fitted)
        .map(|(y, f)| (y - f) * (y - f))
        .sum();
    Ok(SigmaEstimate {
        sigma: (rss / (n - df) as f64).sqrt(),
        lambda: cv_result.chosen_lambda,
        df,
    })
}
