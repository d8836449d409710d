//! Independent reimplementations used to cross-check the library in the
//! acceptance suite. Deliberately different algorithms: eigenvalues come from
//! Householder tridiagonalization plus Sturm-sequence bisection (the library
//! uses cyclic Jacobi), and the subset extrema come from naive bitmask
//! enumeration over an explicitly-looped Gram matrix.

/// Householder reduction of a symmetric matrix to tridiagonal form.
/// Returns (diagonal, off-diagonal).
pub fn tridiagonalize(a: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for k in 0..n.saturating_sub(2) {
        // Reflect column k below the subdiagonal.
        let mut alpha_sq = 0.0;
        for i in k + 1..n {
            alpha_sq += m[i][k] * m[i][k];
        }
        if alpha_sq <= 0.0 {
            continue;
        }
        let alpha = -m[k + 1][k].signum() * alpha_sq.sqrt();
        let r_sq = 0.5 * (alpha * alpha - m[k + 1][k] * alpha);
        if r_sq <= 0.0 {
            continue;
        }
        let r = r_sq.sqrt();
        let mut v = vec![0.0; n];
        v[k + 1] = (m[k + 1][k] - alpha) / (2.0 * r);
        for i in k + 2..n {
            v[i] = m[i][k] / (2.0 * r);
        }
        // m = (I - 2vvᵀ) m (I - 2vvᵀ)
        let mv: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| m[i][j] * v[j]).sum())
            .collect();
        let vmv: f64 = (0..n).map(|i| v[i] * mv[i]).sum();
        for i in 0..n {
            for j in 0..n {
                m[i][j] +=
                    -2.0 * v[i] * mv[j] - 2.0 * mv[i] * v[j] + 4.0 * vmv * v[i] * v[j];
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    let off: Vec<f64> = (1..n).map(|i| m[i][i - 1]).collect();
    (diag, off)
}

/// Number of eigenvalues of the tridiagonal matrix strictly below x
/// (Sturm sequence count).
fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..diag.len() {
        let e_sq = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if q != 0.0 { e_sq / q } else { e_sq / 1e-300 };
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
pub fn eigenvalue(a: &[Vec<f64>], k: usize) -> f64 {
    let n = a.len();
    assert!(k < n);
    let (diag, off) = tridiagonalize(a);
    // Gershgorin interval.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i + 1 < n {
            radius += off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let (mut lo, mut hi) = (lo - 1e-12 * scale, hi + 1e-12 * scale);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(&diag, &off, mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * scale {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn eig_min(a: &[Vec<f64>]) -> f64 {
    eigenvalue(a, 0)
}

pub fn eig_max(a: &[Vec<f64>]) -> f64 {
    eigenvalue(a, a.len() - 1)
}

/// Unit-diagonal Gram of raw columns, by explicit loops.
pub fn unit_gram(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = cols.len();
    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut g = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            let mut dot = 0.0;
            for k in 0..cols[i].len() {
                dot += cols[i][k] * cols[j][k];
            }
            g[i][j] = dot / (norms[i] * norms[j]);
        }
    }
    g
}

fn submatrix(g: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|&i| cols.iter().map(|&j| g[i][j]).collect())
        .collect()
}

fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|&b| mask & (1 << b) != 0).collect()
}

/// min over subsets of size 1..=m of the smallest eigenvalue.
pub fn phi_min(g: &[Vec<f64>], m: usize) -> f64 {
    let p = g.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << p) {
        let k = mask.count_ones() as usize;
        if k == 0 || k > m {
            continue;
        }
        let idx = mask_indices(mask);
        best = best.min(eig_min(&submatrix(g, &idx, &idx)));
    }
    best
}

pub fn phi_max(g: &[Vec<f64>], m: usize) -> f64 {
    let p = g.len();
    let mut best = f64::NEG_INFINITY;
    for mask in 1u32..(1 << p) {
        let k = mask.count_ones() as usize;
        if k == 0 || k > m {
            continue;
        }
        let idx = mask_indices(mask);
        best = best.max(eig_max(&submatrix(g, &idx, &idx)));
    }
    best
}

/// Restricted orthogonality over disjoint subsets |L| ≤ m', |L'| ≤ m:
/// the largest singular value of the cross block, via eig_max of BᵀB.
pub fn theta(g: &[Vec<f64>], m: usize, m_prime: usize) -> f64 {
    let p = g.len();
    let mut best = 0.0f64;
    for mask_l in 1u32..(1 << p) {
        let a = mask_l.count_ones() as usize;
        if a == 0 || a > m_prime {
            continue;
        }
        for mask_lp in 1u32..(1 << p) {
            let b = mask_lp.count_ones() as usize;
            if b == 0 || b > m || mask_l & mask_lp != 0 {
                continue;
            }
            let l = mask_indices(mask_l);
            let lp = mask_indices(mask_lp);
            let block = submatrix(g, &l, &lp);
            // BᵀB, |L'| x |L'|.
            let mut btb = vec![vec![0.0; lp.len()]; lp.len()];
            for i in 0..lp.len() {
                for j in 0..lp.len() {
                    for k in 0..l.len() {
                        btb[i][j] += block[k][i] * block[k][j];
                    }
                }
            }
            best = best.max(eig_max(&btb).max(0.0).sqrt());
        }
    }
    best
}

pub fn rho(g: &[Vec<f64>]) -> f64 {
    let p = g.len();
    let mut best = 0.0f64;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                best = best.max(g[i][j].abs());
            }
        }
    }
    best
}
