//! The regression problem data model and synthetic data generation.
//!
//! Columns follow the `|X_j|² = n` normalization convention. All Gram matrices
//! handed to the diagnostics are additionally rescaled to exact unit diagonal,
//! so the numeric thresholds of the recoverability conditions (1/32, "< 1",
//! "< 2") are meaningful on one common scale.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Threshold above which a coefficient counts as nonzero.
pub const SUPPORT_TOLERANCE: f64 = 1e-8;

/// Relative tolerance for the `|X_j|² = n` normalization check.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// A design matrix, a response, and (optionally) a known noise level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionProblem {
    design: Mat,
    response: Vec<f64>,
    noise_sigma: Option<f64>,
    /// Per-column scale factors applied by [`normalize_columns`], if any.
    column_scales: Option<Vec<f64>>,
}

impl RegressionProblem {
    pub fn new(design: Mat, response: Vec<f64>, noise_sigma: Option<f64>) -> Result<Self> {
        if design.rows() == 0 || design.cols() == 0 {
            return Err(Error::InvalidArgs("design must be at least 1x1".into()));
        }
        if response.len() != design.rows() {
            return Err(Error::InvalidArgs(format!(
                "response length {} != design rows {}",
                response.len(),
                design.rows()
            )));
        }
        if let Some(s) = noise_sigma {
            if !(s >= 0.0) {
                return Err(Error::InvalidArgs("noise sigma must be nonnegative".into()));
            }
        }
        Ok(RegressionProblem {
            design,
            response,
            noise_sigma,
            column_scales: None,
        })
    }

    pub fn n(&self) -> usize {
        self.design.rows()
    }

    pub fn p(&self) -> usize {
        self.design.cols()
    }

    pub fn design(&self) -> &Mat {
        &self.design
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn noise_sigma(&self) -> Option<f64> {
        self.noise_sigma
    }

    pub fn column(&self, j: usize) -> &[f64] {
        self.design.col(j)
    }

    pub fn column_scales(&self) -> Option<&[f64]> {
        self.column_scales.as_deref()
    }

    /// True when every column satisfies `|X_j|² = n` within tolerance.
    pub fn is_normalized(&self) -> bool {
        let n = self.n() as f64;
        (0..self.p()).all(|j| {
            let s = linalg::dot(self.column(j), self.column(j));
            (s - n).abs() <= NORMALIZATION_TOLERANCE * n
        })
    }

    pub fn with_response(&self, response: Vec<f64>) -> Result<Self> {
        Self::new(self.design.clone(), response, self.noise_sigma)
    }
}

/// A length-p coefficient vector with support accessors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    values: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(values: Vec<f64>) -> Self {
        CoefficientVector { values }
    }

    pub fn zeros(p: usize) -> Self {
        CoefficientVector {
            values: vec![0.0; p],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices with |β_j| above [`SUPPORT_TOLERANCE`].
    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > SUPPORT_TOLERANCE)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn sparsity(&self) -> usize {
        self.support().len()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn l2_distance(&self, other: &CoefficientVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Rescales every column so `|X_j|² = n` exactly, recording the scale factors.
pub fn normalize_columns(problem: &RegressionProblem) -> Result<RegressionProblem> {
    let n = problem.n();
    let mut cols = Vec::with_capacity(problem.p());
    let mut scales = Vec::with_capacity(problem.p());
    for j in 0..problem.p() {
        let col = problem.column(j);
        let norm = linalg::norm2(col);
        if norm == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        let scale = (n as f64).sqrt() / norm;
        scales.push(scale);
        cols.push(col.iter().map(|v| v * scale).collect());
    }
    Ok(RegressionProblem {
        design: Mat::from_cols(cols),
        response: problem.response.clone(),
        noise_sigma: problem.noise_sigma,
        column_scales: Some(scales),
    })
}

/// Unit-diagonal Gram matrix of the columns in `subset`:
/// D^{-1/2} (X_Lᵀ X_L / n) D^{-1/2}.
///
/// For a normalized problem this is exactly X_Lᵀ X_L / n; for raw columns the
/// diagonal rescale makes the result a (uncentered) correlation matrix, which is
/// the scale on which every recoverability threshold is stated.
pub fn gram(problem: &RegressionProblem, subset: &[usize]) -> Result<Mat> {
    if subset.is_empty() {
        return Err(Error::InvalidArgs("subset must be nonempty".into()));
    }
    for &j in subset {
        if j >= problem.p() {
            return Err(Error::IndexOutOfRange {
                index: j,
                p: problem.p(),
            });
        }
    }
    let k = subset.len();
    let norms: Vec<f64> = subset
        .iter()
        .map(|&j| linalg::norm2(problem.column(j)))
        .collect();
    for (idx, &nv) in norms.iter().enumerate() {
        if nv == 0.0 {
            return Err(Error::ZeroColumn(subset[idx]));
        }
    }
    let mut g = Mat::zeros(k, k);
    for b in 0..k {
        for a in 0..=b {
            let v = linalg::dot(problem.column(subset[a]), problem.column(subset[b]))
                / (norms[a] * norms[b]);
            g.set(a, b, v);
            g.set(b, a, v);
        }
    }
    Ok(g)
}

/// Least-squares fit of the response on a column subset.
#[derive(Debug, Clone)]
pub struct LeastSquaresFit {
    /// Coefficients in the order of the requested subset.
    pub coefficients: Vec<f64>,
    pub residual: Vec<f64>,
    pub rss: f64,
    /// RSS / (n - |L|).
    pub residual_mean_square: f64,
    /// Diagonal of (X_Lᵀ X_L)⁻¹.
    pub inv_gram_diag: Vec<f64>,
}

pub fn least_squares(problem: &RegressionProblem, subset: &[usize]) -> Result<LeastSquaresFit> {
    if subset.is_empty() {
        return Err(Error::InvalidArgs("subset must be nonempty".into()));
    }
    for &j in subset {
        if j >= problem.p() {
            return Err(Error::IndexOutOfRange {
                index: j,
                p: problem.p(),
            });
        }
    }
    let x = problem.design.select_cols(subset);
    let ls = linalg::least_squares_mat(&x, problem.response()).map_err(|e| match e {
        Error::RankDeficient(_) => Error::RankDeficient(subset.to_vec()),
        other => other,
    })?;
    let df = problem.n().saturating_sub(subset.len());
    let rms = if df > 0 { ls.rss / df as f64 } else { f64::NAN };
    Ok(LeastSquaresFit {
        coefficients: ls.coefficients,
        residual: ls.residual,
        rss: ls.rss,
        residual_mean_square: rms,
        inv_gram_diag: ls.inv_gram_diag,
    })
}

/// Design families for the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DesignKind {
    /// Entries i.i.d. N(0, 1).
    IidGaussian,
    /// p = 3 with X₂ = αX₁ + βX₃ and true signal Y = X₁ + X₂ + X₃.
    CollinearExample { alpha: f64, beta: f64 },
    /// Equicorrelated columns with pairwise population correlation r.
    CustomCorrelation { r: f64 },
}

/// Specification of a synthetic problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub sigma: f64,
    pub design_kind: DesignKind,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidSpec("n and p must be positive".into()));
        }
        if self.s > self.p {
            return Err(Error::InvalidSpec(format!(
                "s = {} exceeds p = {}",
                self.s, self.p
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidSpec("sigma must be nonnegative".into()));
        }
        match self.design_kind {
            DesignKind::CollinearExample { alpha, beta } => {
                if self.p != 3 {
                    return Err(Error::InvalidSpec(
                        "collinear-example fixes p = 3".into(),
                    ));
                }
                if alpha == 0.0 && beta == 0.0 {
                    return Err(Error::InvalidSpec(
                        "collinear-example needs alpha or beta nonzero".into(),
                    ));
                }
            }
            DesignKind::CustomCorrelation { r } => {
                if !(-1.0..=1.0).contains(&r) {
                    return Err(Error::InvalidSpec("correlation must be in [-1, 1]".into()));
                }
            }
            DesignKind::IidGaussian => {}
        }
        Ok(())
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws a problem from the spec. Deterministic given the seed.
///
/// Raw columns are drawn per `design_kind` and then column-normalized; the
/// returned true coefficients are expressed on the normalized columns, so
/// `Y = Xβ° + ε` holds for the returned design exactly.
pub fn simulate(spec: &SyntheticSpec) -> Result<(RegressionProblem, CoefficientVector)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let p = spec.p;

    let (raw_cols, beta_raw) = match spec.design_kind {
        DesignKind::IidGaussian => {
            let cols: Vec<Vec<f64>> = (0..p)
                .map(|_| (0..n).map(|_| standard_normal(&mut rng)).collect())
                .collect();
            let beta = random_sparse_beta(p, spec.s, &mut rng);
            (cols, beta)
        }
        DesignKind::CollinearExample { alpha, beta } => {
            let x1: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
            let x3: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
            let x2: Vec<f64> = x1
                .iter()
                .zip(&x3)
                .map(|(a, b)| alpha * a + beta * b)
                .collect();
            (vec![x1, x2, x3], vec![1.0, 1.0, 1.0])
        }
        DesignKind::CustomCorrelation { r } => {
            let common: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
            let w_common = r.max(0.0).sqrt();
            let w_own = (1.0 - w_common * w_common).sqrt();
            let cols: Vec<Vec<f64>> = (0..p)
                .map(|_| {
                    (0..n)
                        .map(|i| w_common * common[i] + w_own * standard_normal(&mut rng))
                        .collect()
                })
                .collect();
            let beta = random_sparse_beta(p, spec.s, &mut rng);
            (cols, beta)
        }
    };

    let signal: Vec<f64> = (0..n)
        .map(|i| {
            raw_cols
                .iter()
                .zip(&beta_raw)
                .map(|(c, b)| c[i] * b)
                .sum()
        })
        .collect();
    let response: Vec<f64> = signal
        .iter()
        .map(|s| s + spec.sigma * standard_normal(&mut rng))
        .collect();

    let raw = RegressionProblem::new(Mat::from_cols(raw_cols), response, Some(spec.sigma))?;
    let normalized = normalize_columns(&raw)?;
    let scales = normalized.column_scales.clone().unwrap();
    // Rescale the true coefficients so Y = Xβ° + ε holds on the normalized design.
    let beta_norm: Vec<f64> = beta_raw.iter().zip(&scales).map(|(b, c)| b / c).collect();
    Ok((normalized, CoefficientVector::new(beta_norm)))
}

fn random_sparse_beta(p: usize, s: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // Uniformly random support of size s, signs ±1 with equal probability.
    let mut idx: Vec<usize> = (0..p).collect();
    for i in 0..s {
        let j = rng.gen_range(i..p);
        idx.swap(i, j);
    }
    let mut beta = vec![0.0; p];
    for &j in idx.iter().take(s) {
        beta[j] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    }
    beta
}

/// Builds an exact problem from a population covariance: X = √n · Σ^{1/2} with
/// n = p rows, and noiseless response Y = Xβ°. Columns are left at raw scale.
pub fn population_problem(
    covariance: &Mat,
    beta0: &CoefficientVector,
) -> Result<(RegressionProblem, CoefficientVector)> {
    let p = covariance.rows();
    if covariance.cols() != p || beta0.len() != p {
        return Err(Error::InvalidArgs(
            "covariance must be p x p and beta0 length p".into(),
        ));
    }
    let root = linalg::sym_sqrt(covariance)?;
    let n = p;
    let design = Mat::from_fn(n, p, |i, j| (n as f64).sqrt() * root.get(i, j));
    let response = design.matvec(beta0.values());
    let problem = RegressionProblem::new(design, response, Some(0.0))?;
    Ok((problem, beta0.clone()))
}

/// Raw population covariance of the §-3 style collinear triple
/// (X₁, X₂ = αX₁ + βX₃, X₃) with independent unit-variance X₁, X₃.
pub fn collinear_covariance(alpha: f64, beta: f64) -> Mat {
    let vals = [
        [1.0, alpha, 0.0],
        [alpha, alpha * alpha + beta * beta, beta],
        [0.0, beta, 1.0],
    ];
    Mat::from_fn(3, 3, |i, j| vals[i][j])
}

/// Exact population version of the collinear example: raw-scale columns,
/// β° = (1, 1, 1), noiseless Y = X₁ + X₂ + X₃.
pub fn collinear_population_problem(
    alpha: f64,
    beta: f64,
) -> Result<(RegressionProblem, CoefficientVector)> {
    population_problem(
        &collinear_covariance(alpha, beta),
        &CoefficientVector::new(vec![1.0, 1.0, 1.0]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    #[test]
    fn normalize_identity_cases() {
        // (1,1,1,1) already has |col|^2 = 4 = n.
        let m = Mat::from_cols(vec![vec![1.0, 1.0, 1.0, 1.0]]);
        let p = RegressionProblem::new(m, vec![0.0; 4], None).unwrap();
        let q = normalize_columns(&p).unwrap();
        assert_eq!(q.column(0), &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(q.column_scales().unwrap(), &[1.0]);

        // (2,0,0,0) has norm^2 = 4 = n: unchanged. (1,0,0,0) scales to (2,0,0,0).
        let m = Mat::from_cols(vec![vec![2.0, 0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0, 0.0]]);
        let p = RegressionProblem::new(m, vec![0.0; 4], None).unwrap();
        let q = normalize_columns(&p).unwrap();
        assert_eq!(q.column(0), &[2.0, 0.0, 0.0, 0.0]);
        assert_eq!(q.column(1), &[2.0, 0.0, 0.0, 0.0]);
        assert!(q.is_normalized());
    }

    #[test]
    fn normalize_rejects_zero_column() {
        let m = Mat::from_cols(vec![vec![0.0, 0.0]]);
        let p = RegressionProblem::new(m, vec![0.0; 2], None).unwrap();
        assert!(matches!(normalize_columns(&p), Err(Error::ZeroColumn(0))));
    }

    #[test]
    fn gram_correlation_pair() {
        // Two columns with a known sample correlation.
        let a = vec![1.0, 1.0, -1.0, -1.0];
        let b = vec![1.0, -1.0, 1.0, -1.0];
        let mixed: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.8 * x + 0.6 * y).collect();
        let m = Mat::from_cols(vec![a.clone(), mixed.clone()]);
        let p = RegressionProblem::new(m, vec![0.0; 4], None).unwrap();
        let g = gram(&p, &[0, 1]).unwrap();
        let r = dot(&a, &mixed) / (linalg::norm2(&a) * linalg::norm2(&mixed));
        assert!((g.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((g.get(1, 1) - 1.0).abs() < 1e-12);
        assert!((g.get(0, 1) - r).abs() < 1e-12);
    }

    #[test]
    fn gram_collinear_population() {
        let (p, _) = collinear_population_problem(1.0, 1.0).unwrap();
        let g = gram(&p, &[0, 1, 2]).unwrap();
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert!((g.get(0, 1) - inv_sqrt2).abs() < 1e-10);
        assert!((g.get(1, 2) - inv_sqrt2).abs() < 1e-10);
        assert!(g.get(0, 2).abs() < 1e-10);
        for i in 0..3 {
            assert!((g.get(i, i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_rejects_bad_index() {
        let m = Mat::from_cols(vec![vec![1.0, 2.0]]);
        let p = RegressionProblem::new(m, vec![0.0; 2], None).unwrap();
        assert!(matches!(
            gram(&p, &[1]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn least_squares_collinear_substitution() {
        // Noiseless collinear example with alpha=1, beta=2:
        // Y = X1 + X2 + X3 = (1+alpha) X1 + (1+beta) X3 on the {1,3} support.
        let (p, _) = collinear_population_problem(1.0, 2.0).unwrap();
        let ls = least_squares(&p, &[0, 2]).unwrap();
        assert!((ls.coefficients[0] - 2.0).abs() < 1e-9);
        assert!((ls.coefficients[1] - 3.0).abs() < 1e-9);
        assert!(ls.rss < 1e-12);
    }

    #[test]
    fn simulate_deterministic_and_exact_noiseless() {
        let spec = SyntheticSpec {
            n: 30,
            p: 8,
            s: 3,
            sigma: 0.0,
            design_kind: DesignKind::IidGaussian,
            seed: 7,
        };
        let (p1, b1) = simulate(&spec).unwrap();
        let (p2, b2) = simulate(&spec).unwrap();
        assert_eq!(p1.design(), p2.design());
        assert_eq!(p1.response(), p2.response());
        assert_eq!(b1, b2);
        assert!(p1.is_normalized());
        assert_eq!(b1.sparsity(), 3);
        // sigma = 0 means Y = X beta exactly.
        let fitted = p1.design().matvec(b1.values());
        for (y, f) in p1.response().iter().zip(&fitted) {
            assert!((y - f).abs() < 1e-10);
        }
    }

    #[test]
    fn simulate_collinear_linear_identity() {
        let spec = SyntheticSpec {
            n: 50,
            p: 3,
            s: 3,
            sigma: 0.5,
            design_kind: DesignKind::CollinearExample {
                alpha: 1.5,
                beta: -0.7,
            },
            seed: 11,
        };
        let (prob, _) = simulate(&spec).unwrap();
        // Undo the column scaling and check X2_raw = alpha X1_raw + beta X3_raw.
        let scales = prob.column_scales().unwrap();
        for i in 0..prob.n() {
            let x1 = prob.column(0)[i] / scales[0];
            let x2 = prob.column(1)[i] / scales[1];
            let x3 = prob.column(2)[i] / scales[2];
            assert!((x2 - (1.5 * x1 - 0.7 * x3)).abs() < 1e-12);
        }
    }

    #[test]
    fn simulate_rejects_bad_spec() {
        let spec = SyntheticSpec {
            n: 10,
            p: 4,
            s: 5,
            sigma: 1.0,
            design_kind: DesignKind::IidGaussian,
            seed: 0,
        };
        assert!(matches!(simulate(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn support_tolerance_applied() {
        let b = CoefficientVector::new(vec![1.0, 1e-9, -2.0, 0.0]);
        assert_eq!(b.support(), vec![0, 2]);
        assert_eq!(b.sparsity(), 2);
    }
}
