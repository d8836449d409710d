//! Dense column-major matrices and the small-matrix eigen/least-squares kernels
//! everything else is built on.
//!
//! All matrices here are desk-scale (p up to a few thousand, eigenproblems up to
//! a few hundred), so a cyclic Jacobi eigensolver and explicit Gram-based least
//! squares are both adequate and dependency-free.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dense real matrix, column-major storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[j * rows + i] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from equal-length columns.
    pub fn from_cols(cols: Vec<Vec<f64>>) -> Self {
        let ncols = cols.len();
        let nrows = cols.first().map_or(0, |c| c.len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for c in &cols {
            assert_eq!(c.len(), nrows, "columns must have equal length");
            data.extend_from_slice(c);
        }
        Mat {
            rows: nrows,
            cols: ncols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    /// Column `j` as a contiguous slice.
    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for j in 0..self.cols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for (yi, aij) in y.iter_mut().zip(self.col(j)) {
                *yi += aij * xj;
            }
        }
        y
    }

    /// y = Aᵀ x.
    pub fn t_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols).map(|j| dot(self.col(j), x)).collect()
    }

    /// The submatrix with the given columns, in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> Mat {
        Mat::from_cols(cols.iter().map(|&j| self.col(j).to_vec()).collect())
    }

    /// AᵀA.
    pub fn gram(&self) -> Mat {
        let p = self.cols;
        let mut g = Mat::zeros(p, p);
        for j in 0..p {
            for i in 0..=j {
                let v = dot(self.col(i), self.col(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.cols {
            for i in 0..j {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Symmetric eigendecomposition A = Q Λ Qᵀ.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Columns are the matching eigenvectors.
    pub vectors: Mat,
}

const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigs(a: &Mat) -> Result<Vec<f64>> {
    Ok(sym_eigh(a)?.values)
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigh(a: &Mat) -> Result<SymEig> {
    if a.rows != a.cols {
        return Err(Error::NotSymmetric(f64::INFINITY));
    }
    let scale = a
        .data
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let asym = a.max_asymmetry();
    if asym > SYMMETRY_TOLERANCE * scale {
        return Err(Error::NotSymmetric(asym));
    }

    let n = a.rows;
    let mut m = a.clone();
    // Work on the exactly symmetrized matrix.
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    let mut q = Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 });

    let tol = 1e-14 * m.frobenius_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for j in 0..n {
            for i in 0..j {
                off = off.max(m.get(i, j).abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = m.get(p, r);
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(r, r);
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Apply the rotation on both sides.
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, r);
                    m.set(k, p, c * akp - s * akq);
                    m.set(k, r, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = m.get(p, k);
                    let aqk = m.get(r, k);
                    m.set(p, k, c * apk - s * aqk);
                    m.set(r, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let qkp = q.get(k, p);
                    let qkq = q.get(k, r);
                    q.set(k, p, c * qkp - s * qkq);
                    q.set(k, r, s * qkp + c * qkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).partial_cmp(&m.get(j, j)).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = Mat::from_cols(order.iter().map(|&j| q.col(j).to_vec()).collect());
    Ok(SymEig { values, vectors })
}

/// Largest singular value of a rectangular matrix.
pub fn max_singular_value(a: &Mat) -> f64 {
    if a.rows == 0 || a.cols == 0 {
        return 0.0;
    }
    // Use whichever Gram product is smaller.
    let g = if a.cols <= a.rows {
        a.gram()
    } else {
        a.transpose().gram()
    };
    let eig = sym_eigh(&g).expect("Gram matrix is symmetric by construction");
    eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Symmetric positive-semidefinite square root.
///
/// Eigenvalues below 1e-12 times the largest are truncated to zero rather
/// than rooted: the square root turns an O(ε) roundoff eigenvalue of an
/// exactly singular input into an O(√ε) spurious component, which would break
/// exact linear dependences between the output's columns.
pub fn sym_sqrt(a: &Mat) -> Result<Mat> {
    const TRUNCATION: f64 = 1e-12;
    let eig = sym_eigh(a)?;
    let n = a.rows();
    let cutoff = TRUNCATION * eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let mut out = Mat::zeros(n, n);
    for k in 0..n {
        let s = if eig.values[k] > cutoff {
            eig.values[k].sqrt()
        } else {
            0.0
        };
        let v = eig.vectors.col(k).to_vec();
        for j in 0..n {
            for i in 0..n {
                let cur = out.get(i, j);
                out.set(i, j, cur + s * v[i] * v[j]);
            }
        }
    }
    Ok(out)
}

/// Least squares of `y` on the columns of `x`, via the eigendecomposition of the Gram.
#[derive(Debug, Clone)]
pub struct LsSolution {
    pub coefficients: Vec<f64>,
    pub residual: Vec<f64>,
    pub rss: f64,
    /// Diagonal of (XᵀX)⁻¹, for coefficient standard errors.
    pub inv_gram_diag: Vec<f64>,
}

/// Relative rank cutoff: smallest singular value must exceed this times the largest.
pub const RANK_TOLERANCE: f64 = 1e-10;

pub fn least_squares_mat(x: &Mat, y: &[f64]) -> Result<LsSolution> {
    assert_eq!(x.rows(), y.len());
    let k = x.cols();
    let g = x.gram();
    let eig = sym_eigh(&g)?;
    let sig_max = eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    let sig_min = eig.values.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    if !(sig_min > RANK_TOLERANCE * sig_max) || sig_max == 0.0 {
        return Err(Error::RankDeficient((0..k).collect()));
    }
    let xty = x.t_matvec(y);
    // γ = Q Λ⁻¹ Qᵀ XᵀY
    let qtb = eig.vectors.t_matvec(&xty);
    let scaled: Vec<f64> = qtb
        .iter()
        .zip(&eig.values)
        .map(|(v, l)| v / l)
        .collect();
    let coefficients = eig.vectors.matvec(&scaled);
    let fitted = x.matvec(&coefficients);
    let residual: Vec<f64> = y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect();
    let rss = dot(&residual, &residual);
    let inv_gram_diag: Vec<f64> = (0..k)
        .map(|j| {
            (0..k)
                .map(|l| {
                    let v = eig.vectors.get(j, l);
                    v * v / eig.values[l]
                })
                .sum()
        })
        .collect();
    Ok(LsSolution {
        coefficients,
        residual,
        rss,
        inv_gram_diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigs_identity() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let e = sym_eigs(&a).unwrap();
        assert_eq!(e, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn eigs_2x2_closed_form() {
        for &r in &[0.3, -0.7, 0.0, 0.99] {
            let a = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { r });
            let e = sym_eigs(&a).unwrap();
            assert!((e[0] - (1.0 - r.abs())).abs() < 1e-12);
            assert!((e[1] - (1.0 + r.abs())).abs() < 1e-12);
        }
    }

    #[test]
    fn eigh_reconstructs() {
        // Fixed symmetric 4x4 with moderate entries.
        let vals = [
            [2.0, 0.5, -0.3, 0.1],
            [0.5, 1.0, 0.2, -0.4],
            [-0.3, 0.2, 3.0, 0.6],
            [0.1, -0.4, 0.6, 0.5],
        ];
        let a = Mat::from_fn(4, 4, |i, j| vals[i][j]);
        let e = sym_eigh(&a).unwrap();
        let mut recon = Mat::zeros(4, 4);
        for k in 0..4 {
            for j in 0..4 {
                for i in 0..4 {
                    let cur = recon.get(i, j);
                    recon.set(
                        i,
                        j,
                        cur + e.values[k] * e.vectors.get(i, k) * e.vectors.get(j, k),
                    );
                }
            }
        }
        let mut err = 0.0f64;
        for j in 0..4 {
            for i in 0..4 {
                err = err.max((recon.get(i, j) - a.get(i, j)).abs());
            }
        }
        assert!(err <= 1e-8 * a.frobenius_norm());
        // Ascending and trace-preserving.
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let trace: f64 = (0..4).map(|i| a.get(i, i)).sum();
        let sum: f64 = e.values.iter().sum();
        assert!((trace - sum).abs() <= 1e-8 * trace.abs().max(1.0));
    }

    #[test]
    fn not_symmetric_rejected() {
        let a = Mat::from_fn(2, 2, |i, j| (i * 2 + j) as f64);
        assert!(matches!(sym_eigs(&a), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn max_singular_basics() {
        assert_eq!(max_singular_value(&Mat::zeros(3, 2)), 0.0);
        let m = Mat::from_fn(1, 1, |_, _| -3.0);
        assert!((max_singular_value(&m) - 3.0).abs() < 1e-12);
        let d = Mat::from_fn(2, 2, |i, j| {
            if i == j {
                if i == 0 {
                    2.0
                } else {
                    5.0
                }
            } else {
                0.0
            }
        });
        assert!((max_singular_value(&d) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_exact_span() {
        let x = Mat::from_cols(vec![vec![1.0, 1.0, 1.0, 1.0]]);
        let y = vec![2.0, 2.0, 2.0, 2.0];
        let ls = least_squares_mat(&x, &y).unwrap();
        assert!((ls.coefficients[0] - 2.0).abs() < 1e-12);
        assert!(ls.rss < 1e-20);
    }

    #[test]
    fn least_squares_residual_orthogonal() {
        let x = Mat::from_cols(vec![
            vec![1.0, 2.0, -1.0, 0.5],
            vec![0.3, -0.2, 1.1, 2.0],
        ]);
        let y = vec![1.0, -1.0, 0.5, 2.0];
        let ls = least_squares_mat(&x, &y).unwrap();
        for j in 0..2 {
            assert!(dot(x.col(j), &ls.residual).abs() <= 1e-8 * 4.0);
        }
    }

    #[test]
    fn rank_deficiency_detected() {
        let c = vec![1.0, 2.0, 3.0];
        let x = Mat::from_cols(vec![c.clone(), c]);
        assert!(matches!(
            least_squares_mat(&x, &[1.0, 1.0, 1.0]),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn sym_sqrt_squares_back() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 0.5 });
        let s = sym_sqrt(&a).unwrap();
        let s2 = Mat::from_fn(2, 2, |i, j| dot(s.col(i), s.col(j)));
        for j in 0..2 {
            for i in 0..2 {
                assert!((s2.get(i, j) - a.get(i, j)).abs() < 1e-10);
            }
        }
    }
}
