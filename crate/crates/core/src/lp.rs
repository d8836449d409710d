//! Dense two-phase simplex for the small linear programs behind the Dantzig
//! selector and the sup-norm (Chebyshev) fit.
//!
//! Pricing is Dantzig's rule (most negative reduced cost) with a switch to
//! Bland's rule after a run of degenerate pivots, which guarantees termination.

use crate::error::{Error, Result};

/// Variable sign restriction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    NonNeg,
    Free,
}

/// minimize cᵀx  subject to  A x ≤ b, with per-variable bounds.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    /// One inequality per entry: (row coefficients, right-hand side).
    pub constraints: Vec<(Vec<f64>, f64)>,
    pub bounds: Vec<VarBound>,
}

impl LinearProgram {
    pub fn validate(&self) -> Result<()> {
        let nv = self.objective.len();
        if self.bounds.len() != nv {
            return Err(Error::InvalidArgs("bounds length != objective length".into()));
        }
        for (row, rhs) in &self.constraints {
            if row.len() != nv {
                return Err(Error::InvalidArgs("constraint row length mismatch".into()));
            }
            if !rhs.is_finite() || row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgs("non-finite LP entry".into()));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgs("non-finite objective entry".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the original variables (empty unless optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;

struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major, width ncols + 1; last entry of each row is the rhs.
    rows: Vec<f64>,
    /// Objective row: reduced costs plus (negated) objective value at the end.
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// Columns barred from entering (artificials after phase 1).
    barred: Vec<bool>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.rows[i * (self.ncols + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.ncols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.ncols + 1;
        let piv = self.rows[r * w + c];
        let inv = 1.0 / piv;
        for j in 0..w {
            self.rows[r * w + j] *= inv;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.rows[i * w + c];
            if f == 0.0 {
                continue;
            }
            for j in 0..w {
                self.rows[i * w + j] -= f * self.rows[r * w + j];
            }
            self.rows[i * w + c] = 0.0;
        }
        let f = self.obj[c];
        if f != 0.0 {
            for j in 0..w {
                self.obj[j] -= f * self.rows[r * w + j];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs the simplex on the current objective row. Returns Ok(true) on
    /// optimal, Ok(false) on unbounded.
    fn solve(&mut self, iter_budget: &mut usize, total_iters: &mut usize) -> Result<bool> {
        let mut stall = 0usize;
        let stall_limit = 4 * (self.m + 10);
        loop {
            // Entering column.
            let use_bland = stall >= stall_limit;
            let mut enter = None;
            if use_bland {
                for j in 0..self.ncols {
                    if !self.barred[j] && self.obj[j] < -PIVOT_TOL {
                        enter = Some(j);
                        break;
                    }
                }
            } else {
                let mut best = -PIVOT_TOL;
                for j in 0..self.ncols {
                    if !self.barred[j] && self.obj[j] < best {
                        best = self.obj[j];
                        enter = Some(j);
                    }
                }
            }
            let Some(c) = enter else {
                return Ok(true);
            };

            // Ratio test; ties broken toward the smallest basis index (Bland).
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12
                                || (ratio < lr + 1e-12 && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio.abs() <= 1e-12 {
                stall += 1;
            } else {
                stall = 0;
            }
            self.pivot(r, c);

            *total_iters += 1;
            if *iter_budget == 0 {
                return Err(Error::NumericalFailure(
                    "simplex iteration limit exceeded".into(),
                ));
            }
            *iter_budget -= 1;
        }
    }
}

/// Solves the LP. Optimal solutions are exact vertices up to floating rounding.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let nv = lp.objective.len();
    let m = lp.constraints.len();

    // Structural columns: non-negative variables map to one column, free
    // variables split into a positive and a negative part.
    let mut col_of_var: Vec<(usize, Option<usize>)> = Vec::with_capacity(nv);
    let mut nstruct = 0usize;
    for b in &lp.bounds {
        match b {
            VarBound::NonNeg => {
                col_of_var.push((nstruct, None));
                nstruct += 1;
            }
            VarBound::Free => {
                col_of_var.push((nstruct, Some(nstruct + 1)));
                nstruct += 2;
            }
        }
    }

    let nslack = m;
    // Artificials only where the slack cannot start basic (negative rhs rows).
    let needs_artificial: Vec<bool> = lp.constraints.iter().map(|(_, b)| *b < 0.0).collect();
    let nart = needs_artificial.iter().filter(|&&v| v).count();
    let ncols = nstruct + nslack + nart;
    let w = ncols + 1;

    let mut rows = vec![0.0; m * w];
    let mut basis = vec![0usize; m];
    let mut art_idx = 0usize;
    for (i, (row, rhs)) in lp.constraints.iter().enumerate() {
        let flip = if needs_artificial[i] { -1.0 } else { 1.0 };
        for (v, &coef) in row.iter().enumerate() {
            let (cpos, cneg) = col_of_var[v];
            rows[i * w + cpos] += flip * coef;
            if let Some(cn) = cneg {
                rows[i * w + cn] -= flip * coef;
            }
        }
        rows[i * w + nstruct + i] = flip; // slack
        rows[i * w + ncols] = flip * rhs;
        if needs_artificial[i] {
            let c = nstruct + nslack + art_idx;
            rows[i * w + c] = 1.0;
            basis[i] = c;
            art_idx += 1;
        } else {
            basis[i] = nstruct + i;
        }
    }

    let mut tab = Tableau {
        m,
        ncols,
        rows,
        obj: vec![0.0; w],
        basis,
        barred: vec![false; ncols],
    };

    let mut iter_budget = 10_000 + 200 * (m + ncols);
    let mut total_iters = 0usize;

    // Phase 1: minimize the sum of artificials.
    if nart > 0 {
        for j in nstruct + nslack..ncols {
            tab.obj[j] = 1.0;
        }
        // Price out the basic artificials.
        for i in 0..m {
            if tab.basis[i] >= nstruct + nslack {
                for j in 0..w {
                    tab.obj[j] -= tab.rows[i * w + j];
                }
            }
        }
        let optimal = tab.solve(&mut iter_budget, &mut total_iters)?;
        let phase1 = -tab.obj[ncols];
        let scale = lp
            .constraints
            .iter()
            .map(|(_, b)| b.abs())
            .fold(1.0f64, f64::max);
        if !optimal && phase1 > FEAS_TOL * scale {
            // The phase-1 objective is bounded below by zero, so a reported
            // unbounded ray is rounding noise; it is only tolerable once the
            // artificials have already been driven to (numerical) zero.
            return Err(Error::NumericalFailure(
                "phase-1 simplex failed to converge".into(),
            ));
        }
        if phase1 > FEAS_TOL * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective: f64::NAN,
                iterations: total_iters,
            });
        }
        // Drive remaining artificials out of the basis where possible.
        for i in 0..m {
            if tab.basis[i] >= nstruct + nslack {
                let mut pivoted = false;
                for j in 0..nstruct + nslack {
                    if tab.at(i, j).abs() > PIVOT_TOL {
                        tab.pivot(i, j);
                        pivoted = true;
                        break;
                    }
                }
                let _ = pivoted; // redundant row: artificial stays basic at zero
            }
        }
        for j in nstruct + nslack..ncols {
            tab.barred[j] = true;
        }
    }

    // Phase 2: original objective.
    tab.obj = vec![0.0; w];
    for (v, &(cpos, cneg)) in col_of_var.iter().enumerate() {
        tab.obj[cpos] += lp.objective[v];
        if let Some(cn) = cneg {
            tab.obj[cn] -= lp.objective[v];
        }
    }
    for i in 0..m {
        let b = tab.basis[i];
        let f = tab.obj[b];
        if f != 0.0 {
            for j in 0..w {
                tab.obj[j] -= f * tab.rows[i * w + j];
            }
            tab.obj[b] = 0.0;
        }
    }
    let optimal = tab.solve(&mut iter_budget, &mut total_iters)?;
    if !optimal {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            objective: f64::NEG_INFINITY,
            iterations: total_iters,
        });
    }

    let mut col_vals = vec![0.0; ncols];
    for i in 0..m {
        col_vals[tab.basis[i]] = tab.rhs(i);
    }
    let x: Vec<f64> = col_of_var
        .iter()
        .map(|&(cpos, cneg)| col_vals[cpos] - cneg.map_or(0.0, |cn| col_vals[cn]))
        .collect();
    let objective: f64 = x
        .iter()
        .zip(&lp.objective)
        .map(|(xi, ci)| xi * ci)
        .sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations: total_iters,
    })
}
