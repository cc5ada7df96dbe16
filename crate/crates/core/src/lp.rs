//! Dense two-phase simplex solver with Bland's anti-cycling rule, plus a
//! brute-force vertex enumeration oracle for small problems.
//!
//! Problems are stated as  min c'x  s.t.  A x <= b,  lower <= x <= upper,
//! with `f64::NEG_INFINITY` / `f64::INFINITY` as unbounded sentinels.
//! Internally the problem is shifted/split to standard form (y >= 0) and
//! solved on a full tableau. Everything is deterministic for fixed input.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Minimum magnitude for a usable pivot element.
pub const PIVOT_TOL: f64 = 1e-10;
/// Constraint feasibility tolerance on returned solutions.
pub const FEAS_TOL: f64 = 1e-7;
/// Variable bound tolerance on returned solutions.
pub const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    /// Cost vector, length n.
    pub cost: Vec<f64>,
    /// Inequality rows for A x <= b, m rows of length n.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// Per-variable lower bounds (NEG_INFINITY allowed).
    pub lower: Vec<f64>,
    /// Per-variable upper bounds (INFINITY allowed).
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.a.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cost.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "bounds length {}/{} != n {}",
                self.lower.len(),
                self.upper.len(),
                n
            )));
        }
        if self.b.len() != self.a.len() {
            return Err(Error::DimensionMismatch(format!(
                "b length {} != row count {}",
                self.b.len(),
                self.a.len()
            )));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} length {} != n {n}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) || !self.b[i].is_finite() {
                return Err(Error::NonFinite(format!("constraint row {i}")));
            }
        }
        if self.cost.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cost vector".into()));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(Error::NonFinite(format!("bounds of variable {j}")));
            }
            if self.lower[j] > self.upper[j] {
                return Err(Error::DimensionMismatch(format!(
                    "lower {} > upper {} for variable {j}",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        Ok(())
    }

    /// Plain-text dump (objective row, constraint rows, bounds) for external
    /// cross-checking.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "minimize");
        let terms: Vec<String> = self
            .cost
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c:+.12e} x{j}"))
            .collect();
        let _ = writeln!(out, "  {}", terms.join(" "));
        let _ = writeln!(out, "subject to");
        for (row, b) in self.a.iter().zip(&self.b) {
            let terms: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(j, a)| format!("{a:+.12e} x{j}"))
                .collect();
            let _ = writeln!(out, "  {} <= {b:+.12e}", terms.join(" "));
        }
        let _ = writeln!(out, "bounds");
        for j in 0..self.num_vars() {
            let _ = writeln!(out, "  {:+.12e} <= x{j} <= {:+.12e}", self.lower[j], self.upper[j]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

// Column of the standard-form problem mapped back to an original variable.
#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// x_j = lower_j + y
    Shifted { var: usize },
    /// x_j = upper_j - y
    Flipped { var: usize },
    /// x_j = y_plus - y_minus; this column is the positive part.
    FreePos { var: usize },
    /// Negative part of a free split.
    FreeNeg { var: usize },
}

struct StandardForm {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    cost: Vec<f64>,
    cols: Vec<ColMap>,
}

fn to_standard_form(lp: &LinearProgram) -> StandardForm {
    let n = lp.num_vars();
    let mut cols = Vec::new();
    // col_of[j] = index of the (first) standard column for variable j.
    let mut col_of = vec![0usize; n];
    for j in 0..n {
        col_of[j] = cols.len();
        if lp.lower[j].is_finite() {
            cols.push(ColMap::Shifted { var: j });
        } else if lp.upper[j].is_finite() {
            cols.push(ColMap::Flipped { var: j });
        } else {
            cols.push(ColMap::FreePos { var: j });
            cols.push(ColMap::FreeNeg { var: j });
        }
    }
    let nc = cols.len();

    let expand = |orig: &[f64], out: &mut Vec<f64>| {
        for (idx, cm) in cols.iter().enumerate() {
            out[idx] = match cm {
                ColMap::Shifted { var } | ColMap::FreePos { var } => orig[*var],
                ColMap::Flipped { var } | ColMap::FreeNeg { var } => -orig[*var],
            };
        }
    };

    // Constant part of x given y = 0.
    let base_x: Vec<f64> = (0..n)
        .map(|j| {
            if lp.lower[j].is_finite() {
                lp.lower[j]
            } else if lp.upper[j].is_finite() {
                lp.upper[j]
            } else {
                0.0
            }
        })
        .collect();

    let mut a = Vec::new();
    let mut b = Vec::new();
    for (row, rhs) in lp.a.iter().zip(&lp.b) {
        let mut r = vec![0.0; nc];
        expand(row, &mut r);
        let shift: f64 = row.iter().zip(&base_x).map(|(aij, x0)| aij * x0).sum();
        a.push(r);
        b.push(rhs - shift);
    }
    // Two-sided bounds become rows y <= upper - lower.
    for j in 0..n {
        if lp.lower[j].is_finite() && lp.upper[j].is_finite() {
            let mut r = vec![0.0; nc];
            r[col_of[j]] = 1.0;
            a.push(r);
            b.push(lp.upper[j] - lp.lower[j]);
        }
    }

    let mut cost = vec![0.0; nc];
    expand(&lp.cost, &mut cost);

    StandardForm { a, b, cost, cols }
}

/// Solves the LP with a dense two-phase simplex using Bland's rule.
/// Infeasible/unbounded outcomes are status codes, not errors.
pub fn solve(lp: &LinearProgram, max_iterations: usize) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let sf = to_standard_form(lp);
    let m = sf.a.len();
    let nc = sf.cols.len();

    // Column layout: [structural | slacks | artificials]
    let slack0 = nc;
    let art0 = nc + m;
    let mut n_art = 0usize;
    let mut art_col_of_row = vec![usize::MAX; m];
    for i in 0..m {
        if sf.b[i] < 0.0 {
            art_col_of_row[i] = art0 + n_art;
            n_art += 1;
        }
    }
    let total = art0 + n_art;

    let fresh_rows = || -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut t: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = vec![0.0; total];
            let neg = sf.b[i] < 0.0;
            let sign = if neg { -1.0 } else { 1.0 };
            for j in 0..nc {
                row[j] = sign * sf.a[i][j];
            }
            row[slack0 + i] = sign;
            if neg {
                row[art_col_of_row[i]] = 1.0;
            }
            t.push(row);
            rhs.push(sign * sf.b[i]);
        }
        (t, rhs)
    };

    let (mut t, mut rhs) = fresh_rows();
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        if sf.b[i] < 0.0 {
            basis.push(art_col_of_row[i]);
        } else {
            basis.push(slack0 + i);
        }
    }

    // Rebuilds the canonical tableau for the current basis set directly from
    // the original data, discarding accumulated floating-point drift.
    // Gauss-Jordan with full pivoting over the basis columns; rows are
    // relabeled so basis[i] is the unit column of row i. Returns false if the
    // basis matrix is numerically singular (caller keeps the drifted tableau).
    let refactorize = |t: &mut Vec<Vec<f64>>, rhs: &mut Vec<f64>, basis: &mut Vec<usize>| -> bool {
        let (mut nt, mut nrhs) = fresh_rows();
        let cols: Vec<usize> = basis.clone();
        let mut col_done = vec![false; cols.len()];
        let mut row_done = vec![false; m];
        let mut new_basis = vec![usize::MAX; m];
        for _ in 0..m {
            let mut best: Option<(usize, usize, f64)> = None;
            for (ci, &c) in cols.iter().enumerate() {
                if col_done[ci] {
                    continue;
                }
                for (r, done) in row_done.iter().enumerate() {
                    if *done {
                        continue;
                    }
                    let mag = nt[r][c].abs();
                    if best.map_or(true, |(_, _, bm)| mag > bm) {
                        best = Some((r, ci, mag));
                    }
                }
            }
            let Some((r, ci, mag)) = best else { return false };
            if mag < PIVOT_TOL {
                return false;
            }
            let c = cols[ci];
            let p = nt[r][c];
            for v in nt[r].iter_mut() {
                *v /= p;
            }
            nrhs[r] /= p;
            for i in 0..m {
                if i == r {
                    continue;
                }
                let f = nt[i][c];
                if f != 0.0 {
                    let (head, tail) = if i < r {
                        let (a, b) = nt.split_at_mut(r);
                        (&mut a[i], &b[0])
                    } else {
                        let (a, b) = nt.split_at_mut(i);
                        (&mut b[0], &a[r])
                    };
                    for (hv, tv) in head.iter_mut().zip(tail.iter()) {
                        *hv -= f * tv;
                    }
                    nrhs[i] -= f * nrhs[r];
                }
            }
            col_done[ci] = true;
            row_done[r] = true;
            new_basis[r] = c;
        }
        // Basic values must stay (numerically) nonnegative; clip roundoff.
        for v in nrhs.iter_mut() {
            if *v < 0.0 && *v > -FEAS_TOL {
                *v = 0.0;
            }
        }
        *t = nt;
        *rhs = nrhs;
        *basis = new_basis;
        true
    };

    // Reduced-cost rows, kept canonical by pivoting alongside the tableau.
    // z1: phase-1 cost (sum of artificials); z2: real cost.
    let mut z1 = vec![0.0; total];
    for (i, row) in t.iter().enumerate() {
        if basis[i] >= art0 {
            for j in 0..total {
                z1[j] -= row[j];
            }
        }
    }
    for c in art0..total {
        z1[c] += 1.0;
    }
    let mut z2 = vec![0.0; total];
    z2[..nc].copy_from_slice(&sf.cost);

    let mut iterations = 0usize;

    let pivot = |t: &mut Vec<Vec<f64>>,
                 rhs: &mut Vec<f64>,
                 z1: &mut Vec<f64>,
                 z2: &mut Vec<f64>,
                 basis: &mut Vec<usize>,
                 r: usize,
                 c: usize| {
        let p = t[r][c];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        rhs[r] /= p;
        for i in 0..t.len() {
            if i == r {
                continue;
            }
            let f = t[i][c];
            if f != 0.0 {
                let (head, tail) = if i < r {
                    let (a, b) = t.split_at_mut(r);
                    (&mut a[i], &b[0])
                } else {
                    let (a, b) = t.split_at_mut(i);
                    (&mut b[0], &a[r])
                };
                for (hv, tv) in head.iter_mut().zip(tail.iter()) {
                    *hv -= f * tv;
                }
                rhs[i] -= f * rhs[r];
            }
        }
        for z in [z1, z2] {
            let f = z[c];
            if f != 0.0 {
                for (zv, tv) in z.iter_mut().zip(t[r].iter()) {
                    *zv -= f * tv;
                }
            }
        }
        basis[r] = c;
    };

    // Exact reduced costs from the current tableau: z_j = c_j - c_B' B^-1 A_j.
    // Incremental z-row updates drift over long pivot runs, so phases refresh
    // with this before trusting "no negative reduced cost" as optimality.
    let recompute_z = |t: &Vec<Vec<f64>>, basis: &Vec<usize>, z: &mut Vec<f64>, phase1: bool| {
        for (j, zv) in z.iter_mut().enumerate() {
            *zv = if phase1 {
                if j >= art0 {
                    1.0
                } else {
                    0.0
                }
            } else if j < nc {
                sf.cost[j]
            } else {
                0.0
            };
        }
        for (i, &bv) in basis.iter().enumerate() {
            let cb = if phase1 {
                if bv >= art0 {
                    1.0
                } else {
                    0.0
                }
            } else if bv < nc {
                sf.cost[bv]
            } else {
                0.0
            };
            if cb != 0.0 {
                for (zv, tv) in z.iter_mut().zip(t[i].iter()) {
                    *zv -= cb * tv;
                }
            }
        }
    };

    // phase 1 allows all columns; phase 2 excludes artificials.
    let run_phase = |t: &mut Vec<Vec<f64>>,
                         rhs: &mut Vec<f64>,
                         z1: &mut Vec<f64>,
                         z2: &mut Vec<f64>,
                         basis: &mut Vec<usize>,
                         iterations: &mut usize,
                         phase1: bool|
     -> Option<LpStatus> {
        // Dantzig entering for speed; after a run of degenerate pivots,
        // switch to Bland's smallest-index rule (on exact reduced costs)
        // until a pivot makes real progress. The progress bar is 1e-9, not
        // machine noise: resetting on noise-level ratios lets Dantzig undo
        // Bland's escape and reopens cycling.
        const STALL_LIMIT: usize = 30;
        const REFRESH_EVERY: usize = 64;
        let mut stalled = 0usize;
        let mut bland = false;
        let mut since_refresh = 1usize;
        let limit = if phase1 { total } else { art0 };
        let cost_of = |j: usize| -> f64 {
            if phase1 {
                if j >= art0 {
                    1.0
                } else {
                    0.0
                }
            } else if j < nc {
                sf.cost[j]
            } else {
                0.0
            }
        };
        // Exact reduced cost of a single column, O(m): z_j = c_j - c_B' B^-1 A_j.
        let exact_z = |t: &Vec<Vec<f64>>, basis: &Vec<usize>, j: usize| -> f64 {
            let mut z = cost_of(j);
            for (i, &bv) in basis.iter().enumerate() {
                let cb = cost_of(bv);
                if cb != 0.0 {
                    z -= cb * t[i][j];
                }
            }
            z
        };
        // Two-pass ratio test for an entering column. Pass 1 finds the
        // minimum ratio (rounding can leave rhs a hair negative, which is
        // clamped: a negative ratio would walk the basis away from
        // feasibility). Pass 2 breaks near-ties toward the largest pivot
        // element in the fast regime and toward the smallest basic variable
        // index in the anti-cycling regime, which Bland's termination
        // argument requires. Returns None when the column has no positive
        // entry (unbounded direction).
        let choose_leave = |t: &Vec<Vec<f64>>,
                            rhs: &Vec<f64>,
                            basis: &Vec<usize>,
                            c: usize,
                            bland: bool|
         -> Option<(usize, f64)> {
            let mut theta = f64::INFINITY;
            for i in 0..t.len() {
                if t[i][c] > PIVOT_TOL {
                    theta = theta.min(rhs[i].max(0.0) / t[i][c]);
                }
            }
            if !theta.is_finite() {
                return None;
            }
            let cut = theta + 1e-9 * (1.0 + theta) + 1e-12;
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..t.len() {
                let a = t[i][c];
                if a > PIVOT_TOL {
                    let ratio = rhs[i].max(0.0) / a;
                    if ratio <= cut {
                        let better = match leave {
                            None => true,
                            Some((bi, _)) => {
                                if bland {
                                    basis[i] < basis[bi]
                                } else {
                                    a > t[bi][c]
                                }
                            }
                        };
                        if better {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
            leave
        };
        // A pivot element below this is elimination residue, not data;
        // dividing the row by it multiplies accumulated roundoff into O(1)
        // tableau corruption. Columns whose minimum-ratio pivot is that
        // small are skipped in favor of the next candidate, and only used
        // as a last resort.
        const CLEAN_PIVOT: f64 = 1e-7;
        loop {
            if *iterations >= max_iterations {
                return Some(LpStatus::IterationLimit);
            }
            if stalled >= STALL_LIMIT {
                bland = true;
            }
            // (entering column, leaving row, ratio)
            let mut choice: Option<(usize, usize, f64)> = None;
            let mut fallback: Option<(usize, usize, f64)> = None;
            if bland {
                // Bland entering: smallest index with an exactly negative
                // reduced cost, computed per column on demand (termination
                // needs exact values; per-column evaluation is far cheaper
                // than refreshing the whole z row each pivot).
                for j in 0..limit {
                    if exact_z(t, basis, j) < -PIVOT_TOL {
                        match choose_leave(t, rhs, basis, j, true) {
                            None => {
                                // Exactly improving column with no positive
                                // entries: genuinely unbounded direction.
                                return Some(if phase1 {
                                    LpStatus::Infeasible
                                } else {
                                    LpStatus::Unbounded
                                });
                            }
                            Some((r, ratio)) => {
                                if t[r][j] > CLEAN_PIVOT {
                                    choice = Some((j, r, ratio));
                                    break;
                                }
                                if fallback.is_none() {
                                    fallback = Some((j, r, ratio));
                                }
                            }
                        }
                    }
                }
            } else {
                if since_refresh >= REFRESH_EVERY {
                    recompute_z(t, basis, if phase1 { z1 } else { z2 }, phase1);
                    since_refresh = 0;
                }
                let mut candidates: Vec<(usize, f64)> = Vec::new();
                let collect = |z: &Vec<f64>, out: &mut Vec<(usize, f64)>| {
                    out.clear();
                    for j in 0..limit {
                        if z[j] < -PIVOT_TOL {
                            out.push((j, z[j]));
                        }
                    }
                    out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
                };
                collect(if phase1 { z1 } else { z2 }, &mut candidates);
                if candidates.is_empty() && since_refresh > 0 {
                    // Looks optimal per the incrementally updated row; confirm
                    // on exact reduced costs before declaring the phase done.
                    recompute_z(t, basis, if phase1 { z1 } else { z2 }, phase1);
                    since_refresh = 0;
                    collect(if phase1 { z1 } else { z2 }, &mut candidates);
                }
                for &(j, _) in candidates.iter().take(32) {
                    match choose_leave(t, rhs, basis, j, false) {
                        None => {
                            // Verify on exact data before declaring
                            // unboundedness off a possibly drifted z entry.
                            if exact_z(t, basis, j) < -PIVOT_TOL {
                                return Some(if phase1 {
                                    LpStatus::Infeasible
                                } else {
                                    LpStatus::Unbounded
                                });
                            }
                        }
                        Some((r, ratio)) => {
                            if t[r][j] > CLEAN_PIVOT {
                                choice = Some((j, r, ratio));
                                break;
                            }
                            if fallback.is_none() {
                                fallback = Some((j, r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((c, r, ratio)) = choice.or(fallback) else {
                return None; // phase optimal
            };
            if ratio > 1e-9 {
                stalled = 0;
                bland = false;
            } else {
                stalled += 1;
            }
            pivot(t, rhs, z1, z2, basis, r, c);
            *iterations += 1;
            since_refresh += 1;
            // Long pivot runs accumulate elimination roundoff in the tableau
            // itself, not just the z rows; rebuild both from the original
            // data periodically to keep the walk on the true polytope.
            const REFACTOR_EVERY: usize = 1024;
            if *iterations % REFACTOR_EVERY == 0 && refactorize(t, rhs, basis) {
                recompute_z(t, basis, z1, true);
                recompute_z(t, basis, z2, false);
                since_refresh = 0;
            }
        }
    };

    if n_art > 0 {
        // Phase 1 with refactorization passes: after each claimed optimum,
        // rebuild the tableau exactly and re-verify before trusting it.
        for pass in 0..6 {
            if let Some(status) = run_phase(
                &mut t, &mut rhs, &mut z1, &mut z2, &mut basis, &mut iterations, true,
            ) {
                return Ok(LpSolution {
                    status,
                    x: vec![0.0; n],
                    objective: 0.0,
                    iterations,
                });
            }
            if pass == 5 || !refactorize(&mut t, &mut rhs, &mut basis) {
                break;
            }
            recompute_z(&t, &basis, &mut z1, true);
            recompute_z(&t, &basis, &mut z2, false);
            if !(0..total).any(|j| z1[j] < -PIVOT_TOL) {
                break;
            }
        }
        // Infeasibility test: artificial variables must be at zero.
        let art_sum: f64 = basis
            .iter()
            .zip(&rhs)
            .filter(|(b, _)| **b >= art0)
            .map(|(_, r)| r.max(0.0))
            .sum();
        if art_sum > FEAS_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: 0.0,
                iterations,
            });
        }
        // Drive remaining zero-level artificials out of the basis when a
        // usable pivot exists; redundant rows keep them harmlessly at zero.
        for r in 0..m {
            if basis[r] >= art0 {
                // Pivot on the largest available entry; a near-zero pivot
                // would blow up the tableau.
                let c = (0..art0).max_by(|&a, &b| {
                    t[r][a].abs().partial_cmp(&t[r][b].abs()).unwrap()
                });
                if let Some(c) = c.filter(|&c| t[r][c].abs() > PIVOT_TOL) {
                    pivot(&mut t, &mut rhs, &mut z1, &mut z2, &mut basis, r, c);
                    iterations += 1;
                }
            }
        }
    }

    for pass in 0..6 {
        if let Some(status) = run_phase(
            &mut t, &mut rhs, &mut z1, &mut z2, &mut basis, &mut iterations, false,
        ) {
            return Ok(LpSolution {
                status,
                x: vec![0.0; n],
                objective: 0.0,
                iterations,
            });
        }
        if pass == 5 || !refactorize(&mut t, &mut rhs, &mut basis) {
            break;
        }
        recompute_z(&t, &basis, &mut z1, true);
        recompute_z(&t, &basis, &mut z2, false);
        if !(0..art0).any(|j| z2[j] < -PIVOT_TOL) {
            break;
        }
    }

    // Rebuild the final basis exactly so the recovered solution carries the
    // original data's precision rather than accumulated pivot roundoff.
    refactorize(&mut t, &mut rhs, &mut basis);

    // Recover standard-form y, then map back to original variables.
    let mut y = vec![0.0; nc];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < nc {
            y[bv] = rhs[i];
        }
    }
    let mut x = vec![0.0; n];
    for (idx, cm) in sf.cols.iter().enumerate() {
        match cm {
            ColMap::Shifted { var } => x[*var] = lp.lower[*var] + y[idx],
            ColMap::Flipped { var } => x[*var] = lp.upper[*var] - y[idx],
            ColMap::FreePos { var } => x[*var] += y[idx],
            ColMap::FreeNeg { var } => x[*var] -= y[idx],
        }
    }
    let objective = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations,
    })
}

/// Brute-force LP oracle: enumerates basic solutions from all n-subsets of
/// the constraint/bound hyperplanes and returns the best feasible vertex.
/// Unboundedness is detected by re-solving inside a doubled bounding box.
/// Intended for tests on small instances only.
pub fn vertex_enumeration_oracle(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.num_rows();
    if n > 8 || m > 12 {
        return Err(Error::TooLarge(format!("n={n}, m={m} exceeds oracle guard")));
    }
    if n == 0 {
        return Ok(LpSolution {
            status: LpStatus::Optimal,
            x: vec![],
            objective: 0.0,
            iterations: 0,
        });
    }

    const BOX: f64 = 1e6;
    let first = best_boxed_vertex(lp, BOX);
    let Some((x1, obj1)) = first else {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: vec![0.0; n],
            objective: 0.0,
            iterations: 0,
        });
    };
    let (_, obj2) = best_boxed_vertex(lp, 2.0 * BOX).expect("larger box keeps feasibility");
    if obj2 < obj1 - 1e-6 * (1.0 + obj1.abs()) {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; n],
            objective: 0.0,
            iterations: 0,
        });
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x: x1,
        objective: obj1,
        iterations: 0,
    })
}

fn best_boxed_vertex(lp: &LinearProgram, box_bound: f64) -> Option<(Vec<f64>, f64)> {
    let n = lp.num_vars();
    // Hyperplane set: rows a.x = b, active bounds x_j = l/u, box walls.
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for (row, b) in lp.a.iter().zip(&lp.b) {
        planes.push((row.clone(), *b));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if lp.lower[j].is_finite() {
            planes.push((e.clone(), lp.lower[j]));
        } else {
            planes.push((e.iter().map(|v| -v).collect(), box_bound));
        }
        if lp.upper[j].is_finite() {
            planes.push((e, lp.upper[j]));
        } else {
            let mut e2 = vec![0.0; n];
            e2[j] = 1.0;
            planes.push((e2, box_bound));
        }
    }

    let feasible = |x: &[f64]| -> bool {
        for (row, b) in lp.a.iter().zip(&lp.b) {
            let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            if lhs > b + 1e-9 {
                return false;
            }
        }
        for j in 0..n {
            if x[j] < lp.lower[j] - 1e-9 || x[j] > lp.upper[j] + 1e-9 {
                return false;
            }
            if x[j].abs() > box_bound + 1e-3 {
                return false;
            }
        }
        true
    };

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        // Solve the n x n system of the selected planes.
        if let Some(x) = solve_square(&idx, &planes, n) {
            if feasible(&x) {
                let obj: f64 = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                let better = match &best {
                    None => true,
                    Some((_, bo)) => obj < bo - 1e-12,
                };
                if better {
                    best = Some((x, obj));
                }
            }
        }
        // Next lexicographic combination.
        let k = planes.len();
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] != i + k - n {
                break;
            }
            if i == 0 {
                return best;
            }
        }
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn solve_square(sel: &[usize], planes: &[(Vec<f64>, f64)], n: usize) -> Option<Vec<f64>> {
    let mut a: Vec<Vec<f64>> = sel.iter().map(|&i| planes[i].0.clone()).collect();
    let mut b: Vec<f64> = sel.iter().map(|&i| planes[i].1).collect();
    // Gaussian elimination with partial pivoting.
    for col in 0..n {
        let (pr, pv) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if pv < 1e-9 {
            return None;
        }
        a.swap(col, pr);
        b.swap(col, pr);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut v = b[r];
        for c in r + 1..n {
            v -= a[r][c] * x[c];
        }
        x[r] = v / a[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lp(cost: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> LinearProgram {
        LinearProgram { cost, a, b, lower, upper }
    }

    #[test]
    fn single_variable_vertex() {
        let p = lp(vec![-1.0], vec![], vec![], vec![0.0], vec![1.0]);
        let s = solve(&p, 100).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(s.objective, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_empty_set() {
        // x <= -1, x >= 0
        let p = lp(
            vec![0.0],
            vec![vec![1.0]],
            vec![-1.0],
            vec![0.0],
            vec![f64::INFINITY],
        );
        let s = solve(&p, 100).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        let o = vertex_enumeration_oracle(&p).unwrap();
        assert_eq!(o.status, LpStatus::Infeasible);
    }

    #[test]
    fn simplex_vertex_two_vars() {
        let p = lp(
            vec![-1.0, -1.0],
            vec![vec![1.0, 1.0]],
            vec![1.0],
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
        );
        let s = solve(&p, 100).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_relative_eq!(s.objective, -1.0, epsilon = 1e-9);
        let o = vertex_enumeration_oracle(&p).unwrap();
        assert_eq!(o.status, LpStatus::Optimal);
        assert_relative_eq!(o.objective, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn unbounded_detection() {
        let p = lp(
            vec![-1.0],
            vec![],
            vec![],
            vec![0.0],
            vec![f64::INFINITY],
        );
        assert_eq!(solve(&p, 100).unwrap().status, LpStatus::Unbounded);
        assert_eq!(
            vertex_enumeration_oracle(&p).unwrap().status,
            LpStatus::Unbounded
        );
    }

    #[test]
    fn redundant_constraint_invariance() {
        let base = lp(
            vec![-1.0],
            vec![vec![1.0]],
            vec![1.0],
            vec![0.0],
            vec![f64::INFINITY],
        );
        let redundant = lp(
            vec![-1.0],
            vec![vec![1.0], vec![1.0]],
            vec![1.0, 1.0],
            vec![0.0],
            vec![f64::INFINITY],
        );
        let a = vertex_enumeration_oracle(&base).unwrap();
        let b = vertex_enumeration_oracle(&redundant).unwrap();
        assert_eq!(a.status, LpStatus::Optimal);
        assert_relative_eq!(a.objective, b.objective, epsilon = 1e-9);
    }

    #[test]
    fn free_variable_split() {
        // min x s.t. x >= -3 expressed as -x <= 3 with free bounds.
        let p = lp(
            vec![1.0],
            vec![vec![-1.0]],
            vec![3.0],
            vec![f64::NEG_INFINITY],
            vec![f64::INFINITY],
        );
        let s = solve(&p, 100).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_relative_eq!(s.x[0], -3.0, epsilon = 1e-9);
    }

    #[test]
    fn negative_lower_bounds() {
        let p = lp(
            vec![1.0, 1.0],
            vec![vec![-1.0, -1.0]],
            vec![4.0],
            vec![-5.0, -5.0],
            vec![5.0, 5.0],
        );
        let s = solve(&p, 200).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        // Constraint: x0 + x1 >= -4 binds.
        assert_relative_eq!(s.objective, -4.0, epsilon = 1e-9);
    }

    #[test]
    fn solution_respects_tolerances() {
        let p = lp(
            vec![-2.0, -3.0, 1.0],
            vec![
                vec![1.0, 2.0, 1.0],
                vec![3.0, 1.0, 0.0],
                vec![0.0, 1.0, 2.0],
            ],
            vec![4.0, 5.0, 3.0],
            vec![0.0, 0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY, 2.0],
        );
        let s = solve(&p, 500).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        for (row, b) in p.a.iter().zip(&p.b) {
            let lhs: f64 = row.iter().zip(&s.x).map(|(a, v)| a * v).sum();
            assert!(lhs <= b + FEAS_TOL);
        }
        for j in 0..3 {
            assert!(s.x[j] >= p.lower[j] - BOUND_TOL);
            assert!(s.x[j] <= p.upper[j] + BOUND_TOL);
        }
        let o = vertex_enumeration_oracle(&p).unwrap();
        assert_relative_eq!(s.objective, o.objective, epsilon = 1e-7);
    }

    #[test]
    fn determinism() {
        let p = lp(
            vec![-1.0, -2.0, 0.5, -0.25],
            vec![
                vec![1.0, 1.0, 1.0, 1.0],
                vec![2.0, -1.0, 0.0, 1.0],
                vec![-1.0, 2.0, 1.0, 0.0],
            ],
            vec![10.0, 4.0, 6.0],
            vec![0.0; 4],
            vec![5.0; 4],
        );
        let a = solve(&p, 1000).unwrap();
        let b = solve(&p, 1000).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.x, b.x);
        assert_eq!(a.objective, b.objective);
    }

    #[test]
    fn dimension_mismatch_detected() {
        let p = lp(vec![1.0, 1.0], vec![vec![1.0]], vec![1.0], vec![0.0, 0.0], vec![1.0, 1.0]);
        assert!(matches!(solve(&p, 10), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn oracle_guard() {
        let p = lp(
            vec![0.0; 9],
            vec![],
            vec![],
            vec![0.0; 9],
            vec![1.0; 9],
        );
        assert!(matches!(
            vertex_enumeration_oracle(&p),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn dump_contains_rows() {
        let p = lp(
            vec![-1.0],
            vec![vec![1.0]],
            vec![1.0],
            vec![0.0],
            vec![f64::INFINITY],
        );
        let d = p.dump();
        assert!(d.contains("minimize"));
        assert!(d.contains("subject to"));
        assert!(d.contains("bounds"));
    }
}
