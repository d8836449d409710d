//! V-fold cross-validation for λ with small held-out test subsets
//! (default size ⌈log n⌉) and selection by l₂ prediction error.

use crate::error::{Error, Result};
use crate::estimators::{self, FitMethod};
use crate::linalg::Mat;
use crate::problem::RegressionProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const DEFAULT_FOLDS: usize = 5;

/// Cross-validation layout and λ grid.
#[derive(Debug, Clone, Serialize)]
pub struct CvPlan {
    pub folds: usize,
    pub test_size: usize,
    /// Strictly ascending, all nonnegative.
    pub grid: Vec<f64>,
    pub method: FitMethod,
    pub seed: u64,
}

impl CvPlan {
    pub fn new(folds: usize, grid: Vec<f64>, method: FitMethod, seed: u64) -> Self {
        CvPlan {
            folds,
            test_size: 0,
            grid,
            method,
            seed,
        }
    }

    /// Sets the test size to the default ⌈log n⌉, shrunk to ⌊n/V⌋ when the
    /// folds would not fit.
    pub fn with_default_test_size(mut self, n: usize) -> Self {
        let log_n = (n as f64).ln().ceil().max(1.0) as usize;
        self.test_size = if log_n * self.folds > n {
            (n / self.folds).max(1)
        } else {
            log_n
        };
        self
    }

    pub fn with_test_size(mut self, test_size: usize) -> Self {
        self.test_size = test_size;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.folds == 0 || self.test_size == 0 {
            return Err(Error::InvalidArgs("folds and test_size must be positive".into()));
        }
        if self.test_size * self.folds > n {
            return Err(Error::InvalidArgs(format!(
                "test_size {} x folds {} exceeds n = {}",
                self.test_size, self.folds, n
            )));
        }
        if n - self.test_size < 2 {
            return Err(Error::InvalidArgs(
                "each training split must keep at least 2 observations".into(),
            ));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidArgs("lambda grid is empty".into()));
        }
        if self.grid.iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::InvalidArgs("lambda grid entries must be >= 0".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgs("lambda grid must be strictly ascending".into()));
        }
        Ok(())
    }
}

/// Per-λ held-out error summary.
#[derive(Debug, Clone, Serialize)]
pub struct CvErrorPoint {
    pub lambda: f64,
    pub mean_error: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CvResult {
    pub chosen_lambda: f64,
    pub table: Vec<CvErrorPoint>,
    /// Test-row indices per fold; disjoint by construction.
    pub folds: Vec<Vec<usize>>,
}

/// λ grid of the default shape: centered on `lambda_default`, spanning a
/// factor of 10 each way, with spacing `c·n·√(log n / p)` — the stated grid
/// width rescaled to the raw-Gram λ units — widened only as needed to keep at
/// least 10 points.
pub fn default_grid(problem: &RegressionProblem, sigma_hat: f64, c: f64) -> Vec<f64> {
    let n = problem.n();
    let p = problem.p();
    let center = estimators::lambda_default(sigma_hat, n, p);
    let lo = center / 10.0;
    let hi = 10.0 * center;
    let max_step = (hi - lo) / 9.0;
    let mut step = c * n as f64 * ((n as f64).ln() / p as f64).sqrt();
    if !(step > 0.0) || step > max_step {
        step = max_step;
    }
    let mut grid = vec![lo];
    let k_lo = ((lo - center) / step).ceil() as i64;
    let k_hi = ((hi - center) / step).floor() as i64;
    for k in k_lo..=k_hi {
        let lam = center + k as f64 * step;
        if lam > grid.last().copied().unwrap() * (1.0 + 1e-12) {
            grid.push(lam);
        }
    }
    if hi > grid.last().copied().unwrap() * (1.0 + 1e-12) {
        grid.push(hi);
    }
    grid
}

fn fit_for(
    problem: &RegressionProblem,
    method: FitMethod,
    lambda: f64,
    warm: Option<&crate::problem::CoefficientVector>,
) -> Result<crate::estimators::FitResult> {
    match method {
        FitMethod::Lasso => estimators::lasso_fit_from(problem, lambda, warm),
        FitMethod::Dantzig => estimators::dantzig_fit(problem, lambda),
        other => Err(Error::InvalidArgs(format!(
            "cross-validation supports dantzig and lasso, not {other:?}"
        ))),
    }
}

/// Runs the plan: per fold, fit every λ on the training rows and score the
/// squared prediction error on the held-out rows; pick the λ minimizing the
/// fold-averaged error, ties going to the smallest λ.
pub fn cross_validate(problem: &RegressionProblem, plan: &CvPlan) -> Result<CvResult> {
    let n = problem.n();
    plan.validate(n)?;

    let mut folds = draw_folds(n, plan, plan.seed);
    // A training column that is identically zero invalidates the fold split;
    // re-draw once with a shifted seed, then give up.
    if let Some(bad) = degenerate_column(problem, &folds) {
        folds = draw_folds(n, plan, plan.seed.wrapping_add(1));
        if let Some(bad2) = degenerate_column(problem, &folds) {
            let _ = bad;
            return Err(Error::DegenerateFold(bad2));
        }
    }

    let mut errors = vec![vec![0.0f64; plan.folds]; plan.grid.len()];
    for (f, test) in folds.iter().enumerate() {
        let mut in_test = vec![false; n];
        for &i in test {
            in_test[i] = true;
        }
        let train_rows: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
        let train = subproblem(problem, &train_rows);
        let mut warm: Option<crate::problem::CoefficientVector> = None;
        // Descend the grid so warm starts move from sparse to dense.
        for (gi, &lambda) in plan.grid.iter().enumerate().rev() {
            let fit = fit_for(&train, plan.method, lambda, warm.as_ref())?;
            let err = {
                let mut sum = 0.0;
                for &i in test {
                    let mut pred = 0.0;
                    for (j, &b) in fit.coefficients.values().iter().enumerate() {
                        if b != 0.0 {
                            pred += problem.design().get(i, j) * b;
                        }
                    }
                    let d = problem.response()[i] - pred;
                    sum += d * d;
                }
                sum / test.len() as f64
            };
            errors[gi][f] = err;
            warm = Some(fit.coefficients);
        }
    }

    let v = plan.folds as f64;
    let table: Vec<CvErrorPoint> = plan
        .grid
        .iter()
        .zip(&errors)
        .map(|(&lambda, errs)| {
            let mean = errs.iter().sum::<f64>() / v;
            let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
                / if plan.folds > 1 { v - 1.0 } else { 1.0 };
            CvErrorPoint {
                lambda,
                mean_error: mean,
                std_error: (var / v).sqrt(),
            }
        })
        .collect();

    // Ascending scan with strict improvement keeps the smallest λ on ties.
    let mut best = 0usize;
    for i in 1..table.len() {
        if table[i].mean_error < table[best].mean_error {
            best = i;
        }
    }
    Ok(CvResult {
        chosen_lambda: table[best].lambda,
        table,
        folds,
    })
}

fn draw_folds(n: usize, plan: &CvPlan, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    (0..plan.folds)
        .map(|f| {
            let mut fold = idx[f * plan.test_size..(f + 1) * plan.test_size].to_vec();
            fold.sort_unstable();
            fold
        })
        .collect()
}

fn degenerate_column(problem: &RegressionProblem, folds: &[Vec<usize>]) -> Option<usize> {
    let n = problem.n();
    for test in folds {
        let mut in_test = vec![false; n];
        for &i in test {
            in_test[i] = true;
        }
        for j in 0..problem.p() {
            let col = problem.column(j);
            let alive = (0..n).any(|i| !in_test[i] && col[i] != 0.0);
            if !alive {
                return Some(j);
            }
        }
    }
    None
}

fn subproblem(problem: &RegressionProblem, rows: &[usize]) -> RegressionProblem {
    let design = Mat::from_fn(rows.len(), problem.p(), |i, j| {
        problem.design().get(rows[i], j)
    });
    let response: Vec<f64> = rows.iter().map(|&i| problem.response()[i]).collect();
    RegressionProblem::new(design, response, problem.noise_sigma())
        .expect("row subset of a valid problem is valid")
}
