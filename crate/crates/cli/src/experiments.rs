//! The two batch experiments: the l₂ error-rate study (slope of estimation
//! error against √((s/n)·log p) over growing problems) and the out-of-sample
//! comparison of the Dantzig selector against the sup-norm fit when residuals
//! carry rare heavy spikes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use sparselab::error::{Error, Result};
use sparselab::estimators::{self, FitMethod};
use sparselab::linalg::Mat;
use sparselab::problem::{self, normalize_columns, DesignKind, SyntheticSpec};
use sparselab::RegressionProblem;

/// One (n, p, s, σ) simulation cell.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateCell {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub sigma: f64,
}

impl RateCell {
    /// The rate predictor √((s/n)·log p) the slope is fitted against.
    pub fn predictor(&self) -> f64 {
        (self.s as f64 / self.n as f64 * (self.p as f64).ln()).sqrt()
    }
}

/// Configuration of a rate study.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub cells: Vec<RateCell>,
    pub replications: usize,
    pub seed: u64,
    pub methods: Vec<FitMethod>,
}

impl ExperimentConfig {
    /// The growing-problem family: n ∈ {200, 400, 800, 1600}, p = 2n, s = 5,
    /// σ = 1, both estimators.
    pub fn rate_defaults(seed: u64, replications: usize) -> Self {
        ExperimentConfig {
            cells: [200usize, 400, 800, 1600]
                .iter()
                .map(|&n| RateCell {
                    n,
                    p: 2 * n,
                    s: 5,
                    sigma: 1.0,
                })
                .collect(),
            replications,
            seed,
            methods: vec![FitMethod::Dantzig, FitMethod::Lasso],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() || self.replications == 0 || self.methods.is_empty() {
            return Err(Error::InvalidArgs(
                "rate study needs cells, methods, and at least one replication".into(),
            ));
        }
        for c in &self.cells {
            if c.s > c.p || c.n == 0 {
                return Err(Error::InvalidArgs(format!(
                    "bad cell n={} p={} s={}",
                    c.n, c.p, c.s
                )));
            }
        }
        if self
            .methods
            .iter()
            .any(|m| !matches!(m, FitMethod::Dantzig | FitMethod::Lasso))
        {
            return Err(Error::InvalidArgs(
                "rate study supports dantzig and lasso".into(),
            ));
        }
        Ok(())
    }
}

/// One fitted replication; `l2_error` is absent when the estimator failed.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicationRecord {
    pub cell: usize,
    pub replication: usize,
    pub method: FitMethod,
    pub seed: u64,
    pub l2_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub cell: RateCell,
    pub method: FitMethod,
    pub predictor: f64,
    pub mean_error: f64,
    pub median_error: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSlope {
    pub method: FitMethod,
    /// OLS slope of log mean error against log predictor across cells;
    /// absent when fewer than two distinct cells exist.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateStudyResult {
    pub config: ExperimentConfig,
    pub cells: Vec<CellSummary>,
    pub slopes: Vec<MethodSlope>,
    pub records: Vec<ReplicationRecord>,
}

fn replication_seed(base: u64, cell: usize, rep: usize) -> u64 {
    base.wrapping_add((cell as u64).wrapping_mul(1_000_003))
        .wrapping_add(rep as u64)
}

/// Runs the study. Estimator failures are recorded per replication and
/// excluded from the summaries, never fatal.
pub fn run_rate_study(config: &ExperimentConfig) -> Result<RateStudyResult> {
    config.validate()?;
    let mut records = Vec::new();
    let mut cells = Vec::new();
    for (ci, cell) in config.cells.iter().enumerate() {
        let mut per_method: Vec<Vec<f64>> = vec![Vec::new(); config.methods.len()];
        let mut failures = vec![0usize; config.methods.len()];
        for rep in 0..config.replications {
            let seed = replication_seed(config.seed, ci, rep);
            let (prob, beta0) = problem::simulate(&SyntheticSpec {
                n: cell.n,
                p: cell.p,
                s: cell.s,
                sigma: cell.sigma,
                design_kind: DesignKind::IidGaussian,
                seed,
            })?;
            let lam = estimators::lambda_default(cell.sigma, cell.n, cell.p);
            for (mi, &method) in config.methods.iter().enumerate() {
                let fit = match method {
                    FitMethod::Dantzig => estimators::dantzig_fit(&prob, lam),
                    FitMethod::Lasso => estimators::lasso_fit(&prob, 2.0 * lam),
                    _ => unreachable!("validated above"),
                };
                match fit {
                    Ok(fit) => {
                        let err = fit.coefficients.l2_distance(&beta0);
                        per_method[mi].push(err);
                        records.push(ReplicationRecord {
                            cell: ci,
                            replication: rep,
                            method,
                            seed,
                            l2_error: Some(err),
                            failure: None,
                        });
                    }
                    Err(e) => {
                        failures[mi] += 1;
                        records.push(ReplicationRecord {
                            cell: ci,
                            replication: rep,
                            method,
                            seed,
                            l2_error: None,
                            failure: Some(e.to_string()),
                        });
                    }
                }
            }
        }
        for (mi, &method) in config.methods.iter().enumerate() {
            let errs = &mut per_method[mi];
            if errs.is_empty() {
                return Err(Error::NumericalFailure(format!(
                    "every replication failed in cell {ci} for {method:?}"
                )));
            }
            errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            let median = if errs.len() % 2 == 1 {
                errs[errs.len() / 2]
            } else {
                0.5 * (errs[errs.len() / 2 - 1] + errs[errs.len() / 2])
            };
            cells.push(CellSummary {
                cell: *cell,
                method,
                predictor: cell.predictor(),
                mean_error: mean,
                median_error: median,
                failures: failures[mi],
            });
        }
    }

    let slopes = config
        .methods
        .iter()
        .map(|&method| {
            let pts: Vec<(f64, f64)> = cells
                .iter()
                .filter(|c| c.method == method)
                .map(|c| (c.predictor.ln(), c.mean_error.ln()))
                .collect();
            match ols_line(&pts) {
                Some((slope, intercept)) => MethodSlope {
                    method,
                    slope: Some(slope),
                    intercept: Some(intercept),
                },
                None => MethodSlope {
                    method,
                    slope: None,
                    intercept: None,
                },
            }
        })
        .collect();

    Ok(RateStudyResult {
        config: config.clone(),
        cells,
        slopes,
        records,
    })
}

fn ols_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Configuration of the §-2-style objective comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonConfig {
    /// Training observations.
    pub n: usize,
    /// Cosine dictionary size.
    pub p: usize,
    /// Terms in the true expansion.
    pub s: usize,
    pub test_size: usize,
    pub replications: usize,
    pub sigma: f64,
    /// Probability of a heavy residual spike per observation.
    pub spike_prob: f64,
    /// Spike magnitude (sign random).
    pub spike_scale: f64,
    pub seed: u64,
}

impl ComparisonConfig {
    pub fn defaults(seed: u64, replications: usize) -> Self {
        ComparisonConfig {
            n: 100,
            p: 30,
            s: 5,
            test_size: 200,
            replications,
            sigma: 0.5,
            spike_prob: 0.01,
            spike_scale: 10.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < self.p || self.s > self.p || self.replications == 0 || self.test_size == 0 {
            return Err(Error::InvalidArgs(
                "comparison needs n >= p, s <= p, and positive sizes".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.spike_prob) || !(self.sigma >= 0.0) {
            return Err(Error::InvalidArgs("bad noise parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRecord {
    pub replication: usize,
    pub seed: u64,
    pub dantzig_mse: f64,
    pub chebyshev_mse: f64,
    pub dantzig_wins: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonResult {
    pub config: ComparisonConfig,
    pub records: Vec<ComparisonRecord>,
    pub dantzig_mean_mse: f64,
    pub chebyshev_mean_mse: f64,
    pub dantzig_win_rate: f64,
}

/// The dictionary: f_j(x) = √2·cos(πjx) on [0, 1].
fn cosine_row(x: f64, p: usize) -> Vec<f64> {
    (1..=p)
        .map(|j| std::f64::consts::SQRT_2 * (std::f64::consts::PI * j as f64 * x).cos())
        .collect()
}

fn draw_response(signal: f64, cfg: &ComparisonConfig, rng: &mut ChaCha8Rng) -> f64 {
    let noise: f64 = StandardNormal.sample(rng);
    let mut y = signal + cfg.sigma * noise;
    if rng.gen::<f64>() < cfg.spike_prob {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        y += sign * cfg.spike_scale;
    }
    y
}

/// Per replication: draw a training sample from the spiky family, fit the
/// Dantzig selector and the sup-norm (Chebyshev) objective, and score both on
/// fresh draws by mean squared prediction error.
pub fn run_objective_comparison(cfg: &ComparisonConfig) -> Result<ComparisonResult> {
    cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.replications);
    let mut d_sum = 0.0;
    let mut c_sum = 0.0;
    let mut wins = 0usize;
    for rep in 0..cfg.replications {
        let seed = replication_seed(cfg.seed, 0, rep);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        // 5-term expansion on a random support, coefficients ±1.
        let mut support: Vec<usize> = (0..cfg.p).collect();
        for i in 0..cfg.s {
            let j = rng.gen_range(i..cfg.p);
            support.swap(i, j);
        }
        let mut beta_true = vec![0.0; cfg.p];
        for &j in support.iter().take(cfg.s) {
            beta_true[j] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        }

        let xs: Vec<f64> = (0..cfg.n).map(|_| rng.gen::<f64>()).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| cosine_row(x, cfg.p)).collect();
        let design = Mat::from_fn(cfg.n, cfg.p, |i, j| rows[i][j]);
        let signal: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&beta_true).map(|(a, b)| a * b).sum())
            .collect();
        let response: Vec<f64> = signal
            .iter()
            .map(|&s| draw_response(s, cfg, &mut rng))
            .collect();

        let raw = RegressionProblem::new(design, response, Some(cfg.sigma))?;
        let prob = normalize_columns(&raw)?;
        let scales = prob.column_scales().unwrap().to_vec();

        let lam = estimators::lambda_default(cfg.sigma, cfg.n, cfg.p);
        let dantzig = estimators::dantzig_fit(&prob, lam)?;
        let cheb = estimators::chebyshev_fit(&prob)?;
        // Coefficients back on the raw dictionary scale.
        let to_raw = |b: &[f64]| -> Vec<f64> {
            b.iter().zip(&scales).map(|(v, s)| v * s).collect()
        };
        let d_raw = to_raw(dantzig.coefficients.values());
        let c_raw = to_raw(cheb.coefficients.values());

        let mut d_err = 0.0;
        let mut c_err = 0.0;
        for _ in 0..cfg.test_size {
            let x: f64 = rng.gen();
            let row = cosine_row(x, cfg.p);
            let truth: f64 = row.iter().zip(&beta_true).map(|(a, b)| a * b).sum();
            let y = draw_response(truth, cfg, &mut rng);
            let dp: f64 = row.iter().zip(&d_raw).map(|(a, b)| a * b).sum();
            let cp: f64 = row.iter().zip(&c_raw).map(|(a, b)| a * b).sum();
            d_err += (y - dp) * (y - dp);
            c_err += (y - cp) * (y - cp);
        }
        let d_mse = d_err / cfg.test_size as f64;
        let c_mse = c_err / cfg.test_size as f64;
        d_sum += d_mse;
        c_sum += c_mse;
        let win = d_mse < c_mse;
        if win {
            wins += 1;
        }
        records.push(ComparisonRecord {
            replication: rep,
            seed,
            dantzig_mse: d_mse,
            chebyshev_mse: c_mse,
            dantzig_wins: win,
        });
    }
    let r = cfg.replications as f64;
    Ok(ComparisonResult {
        config: cfg.clone(),
        records,
        dantzig_mean_mse: d_sum / r,
        chebyshev_mean_mse: c_sum / r,
        dantzig_win_rate: wins as f64 / r,
    })
}
