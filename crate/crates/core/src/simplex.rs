//! Exact-arithmetic primal simplex over standard-form LPs, plus a
//! brute-force vertex enumeration oracle for small instances.
//!
//! The solver is a dense two-phase tableau method with Bland's pivot rule
//! throughout, which guarantees termination under degeneracy. Free
//! variables are split internally into differences of nonnegative pairs;
//! callers never see the splitting. Every `Optimal` answer carries a basic
//! solution satisfying `A x = b` with no tolerance and an exact dual
//! certificate.

use std::collections::BTreeSet;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::linalg::{dot, solve_linear, solve_any, LinearSolution, Matrix};
use crate::scalar::Scalar;

/// Default cap on the number of candidate bases `enumerate_vertices` visits.
pub const DEFAULT_VERTEX_CAP: u128 = 200_000;

/// `max <c,x>  s.t.  A x = b,  x_j >= 0 for j not in free_vars`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpStandardForm<T> {
    pub a: Matrix<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
    /// 0-based indices of variables exempt from the sign constraint.
    pub free_vars: BTreeSet<usize>,
}

impl<T: Scalar> LpStandardForm<T> {
    pub fn new(a: Matrix<T>, b: Vec<T>, c: Vec<T>) -> Result<Self> {
        Self::with_free(a, b, c, BTreeSet::new())
    }

    pub fn with_free(
        a: Matrix<T>,
        b: Vec<T>,
        c: Vec<T>,
        free_vars: BTreeSet<usize>,
    ) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "b has length {}, matrix has {} rows",
                b.len(),
                a.rows()
            )));
        }
        if c.len() != a.cols() {
            return Err(Error::DimensionMismatch(format!(
                "c has length {}, matrix has {} columns",
                c.len(),
                a.cols()
            )));
        }
        if let Some(&j) = free_vars.iter().next_back() {
            if j >= a.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "free variable index {} out of range for {} columns",
                    j,
                    a.cols()
                )));
            }
        }
        Ok(LpStandardForm { a, b, c, free_vars })
    }

    pub fn num_constraints(&self) -> usize {
        self.a.rows()
    }

    pub fn num_vars(&self) -> usize {
        self.a.cols()
    }

    /// Exact feasibility test for a candidate point.
    pub fn is_feasible(&self, x: &[T]) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        if !(0..self.num_vars())
            .all(|j| self.free_vars.contains(&j) || !x[j].is_negative())
        {
            return false;
        }
        match self.a.mat_vec(x) {
            Ok(ax) => ax == self.b,
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::Optimal => write!(f, "optimal"),
            Status::Infeasible => write!(f, "infeasible"),
            Status::Unbounded => write!(f, "unbounded"),
        }
    }
}

/// Outcome of [`solve`]. `value`, `x`, `basis` and `dual` are present
/// exactly when the status is `Optimal`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub status: Status,
    pub value: Option<T>,
    pub x: Option<Vec<T>>,
    /// Columns of the optimal basis (0-based, sorted). Has one entry per
    /// independent constraint row, so fewer than `m` entries when the
    /// constraint matrix is row-rank deficient.
    pub basis: Option<Vec<usize>>,
    /// Dual certificate `y`: `y'b = value`, `y'A_j >= c_j` with equality on
    /// free and basic columns.
    pub dual: Option<Vec<T>>,
}

impl<T> SolveResult<T> {
    fn status_only(status: Status) -> Self {
        SolveResult {
            status,
            value: None,
            x: None,
            basis: None,
            dual: None,
        }
    }
}

/// A feasible basic solution found by [`enumerate_vertices`].
#[derive(Debug, Clone, PartialEq)]
pub struct VertexEntry<T> {
    pub basis: Vec<usize>,
    pub x: Vec<T>,
    pub value: T,
}

// Internal sign-split form: every column is sign-constrained, and each
// column remembers which original variable it represents and with which
// sign. A free x_j contributes the pair (A_j, +) and (-A_j, -); the two
// columns are negatives of each other and can never share a basis, so the
// map back to original indices is injective on any basis.
struct SplitLp<T> {
    a: Matrix<T>,
    b: Vec<T>,
    c: Vec<T>,
    col_orig: Vec<(usize, bool)>,
}

fn split_free<T: Scalar>(lp: &LpStandardForm<T>) -> SplitLp<T> {
    let m = lp.num_constraints();
    let n = lp.num_vars();
    let extra = lp.free_vars.len();
    let mut a = Matrix::zeros(m, n + extra);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = lp.a[(i, j)].clone();
        }
    }
    let mut c = lp.c.clone();
    let mut col_orig: Vec<(usize, bool)> = (0..n).map(|j| (j, false)).collect();
    for (k, &j) in lp.free_vars.iter().enumerate() {
        for i in 0..m {
            a[(i, n + k)] = -lp.a[(i, j)].clone();
        }
        c.push(-lp.c[j].clone());
        col_orig.push((j, true));
    }
    SplitLp {
        a,
        b: lp.b.clone(),
        c,
        col_orig,
    }
}

fn unsplit_point<T: Scalar>(split: &SplitLp<T>, n: usize, xhat: &[T]) -> Vec<T> {
    let mut x = vec![T::zero(); n];
    for (k, &(j, negated)) in split.col_orig.iter().enumerate() {
        if negated {
            x[j] = x[j].clone() - xhat[k].clone();
        } else {
            x[j] = x[j].clone() + xhat[k].clone();
        }
    }
    x
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    obj: Vec<T>,
    obj_val: T,
    basis: Vec<usize>,
    pivots_done: u128,
    pivot_fuse: u128,
}

enum LoopOutcome {
    OptimalReached,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    fn ncols(&self) -> usize {
        self.obj.len()
    }

    fn nrows(&self) -> usize {
        self.rows.len()
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.rows[row][col].clone();
        debug_assert!(!pivot.is_zero());
        for v in self.rows[row].iter_mut() {
            *v = v.clone() / pivot.clone();
        }
        self.rhs[row] = self.rhs[row].clone() / pivot;
        for i in 0..self.nrows() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col].clone();
            if factor.is_zero() {
                continue;
            }
            for j in 0..self.ncols() {
                let delta = factor.clone() * self.rows[row][j].clone();
                self.rows[i][j] = self.rows[i][j].clone() - delta;
            }
            let delta = factor * self.rhs[row].clone();
            self.rhs[i] = self.rhs[i].clone() - delta;
        }
        let factor = self.obj[col].clone();
        if !factor.is_zero() {
            for j in 0..self.ncols() {
                let delta = factor.clone() * self.rows[row][j].clone();
                self.obj[j] = self.obj[j].clone() - delta;
            }
            let delta = factor * self.rhs[row].clone();
            self.obj_val = self.obj_val.clone() + delta;
        }
        self.basis[row] = col;
        self.pivots_done += 1;
        assert!(
            self.pivots_done <= self.pivot_fuse,
            "Bland pivoting exceeded its termination budget; this is a bug"
        );
    }

    /// Runs Bland-rule pivoting until optimality or unboundedness.
    fn run(&mut self) -> LoopOutcome {
        loop {
            // Entering: smallest column index with positive reduced cost.
            let entering = (0..self.ncols()).find(|&j| self.obj[j].is_positive());
            let col = match entering {
                Some(j) => j,
                None => return LoopOutcome::OptimalReached,
            };
            // Leaving: minimum ratio; ties broken by the smallest basic
            // column index (the second half of Bland's rule).
            let mut leaving: Option<(usize, T)> = None;
            for i in 0..self.nrows() {
                if !self.rows[i][col].is_positive() {
                    continue;
                }
                let ratio = self.rhs[i].clone() / self.rows[i][col].clone();
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((best_i, best)) => {
                        if ratio < best
                            || (ratio == best && self.basis[i] < self.basis[best_i])
                        {
                            Some((i, ratio))
                        } else {
                            Some((best_i, best))
                        }
                    }
                };
            }
            match leaving {
                Some((row, _)) => self.pivot(row, col),
                None => return LoopOutcome::Unbounded,
            }
        }
    }
}

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc > u128::MAX / 2 {
            return u128::MAX;
        }
    }
    acc
}

/// Solves the LP exactly. See [`SolveResult`] for the contract.
pub fn solve<T: Scalar>(lp: &LpStandardForm<T>) -> SolveResult<T> {
    let split = split_free(lp);
    let m = lp.num_constraints();
    let nhat = split.col_orig.len();

    // Phase I: flip rows so the rhs is nonnegative, append one artificial
    // variable per row, and maximize minus their sum.
    let mut flipped = vec![false; m];
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut rhs: Vec<T> = Vec::with_capacity(m);
    for i in 0..m {
        let mut row: Vec<T> = (0..nhat).map(|j| split.a[(i, j)].clone()).collect();
        let mut b = split.b[i].clone();
        if b.is_negative() {
            flipped[i] = true;
            for v in row.iter_mut() {
                *v = -v.clone();
            }
            b = -b;
        }
        row.extend((0..m).map(|k| if k == i { T::one() } else { T::zero() }));
        rows.push(row);
        rhs.push(b);
    }
    let mut obj: Vec<T> = (0..nhat)
        .map(|j| (0..m).fold(T::zero(), |acc, i| acc + rows[i][j].clone()))
        .collect();
    obj.extend(std::iter::repeat(T::zero()).take(m));
    let obj_val = -rhs.iter().fold(T::zero(), |acc, b| acc + b.clone());
    let fuse = binom(nhat + m, m)
        .saturating_mul((nhat + 2 * m) as u128)
        .saturating_add(1_000);
    let mut tab = Tableau {
        rows,
        rhs,
        obj,
        obj_val,
        basis: (nhat..nhat + m).collect(),
        pivots_done: 0,
        pivot_fuse: fuse,
    };
    match tab.run() {
        LoopOutcome::OptimalReached => {}
        LoopOutcome::Unbounded => unreachable!("phase-I objective is bounded above by zero"),
    }
    if !tab.obj_val.is_zero() {
        return SolveResult::status_only(Status::Infeasible);
    }

    // Drive remaining artificial variables out of the basis; rows where
    // that is impossible are redundant and get dropped.
    let mut keep = vec![true; m];
    for i in 0..m {
        if tab.basis[i] < nhat {
            continue;
        }
        debug_assert!(tab.rhs[i].is_zero());
        match (0..nhat).find(|&j| !tab.rows[i][j].is_zero()) {
            Some(j) => tab.pivot(i, j),
            None => keep[i] = false,
        }
    }
    let survivors: Vec<usize> = (0..m).filter(|&i| keep[i]).collect();
    let mut tab = Tableau {
        rows: survivors
            .iter()
            .map(|&i| tab.rows[i][..nhat].to_vec())
            .collect(),
        rhs: survivors.iter().map(|&i| tab.rhs[i].clone()).collect(),
        obj: vec![T::zero(); nhat],
        obj_val: T::zero(),
        basis: survivors.iter().map(|&i| tab.basis[i]).collect(),
        pivots_done: 0,
        pivot_fuse: fuse,
    };

    // Phase II: real objective, expressed against the current basis.
    let basic_costs: Vec<T> = tab.basis.iter().map(|&j| split.c[j].clone()).collect();
    for j in 0..nhat {
        let z: T = (0..tab.nrows()).fold(T::zero(), |acc, i| {
            acc + basic_costs[i].clone() * tab.rows[i][j].clone()
        });
        tab.obj[j] = split.c[j].clone() - z;
    }
    tab.obj_val = (0..tab.nrows()).fold(T::zero(), |acc, i| {
        acc + basic_costs[i].clone() * tab.rhs[i].clone()
    });
    if let LoopOutcome::Unbounded = tab.run() {
        return SolveResult::status_only(Status::Unbounded);
    }

    // Assemble the primal solution in original coordinates.
    let mut xhat = vec![T::zero(); nhat];
    for (i, &j) in tab.basis.iter().enumerate() {
        xhat[j] = tab.rhs[i].clone();
    }
    let x = unsplit_point(&split, lp.num_vars(), &xhat);
    let value = tab.obj_val.clone();
    let mut basis: Vec<usize> = tab.basis.iter().map(|&j| split.col_orig[j].0).collect();
    basis.sort_unstable();

    // Dual certificate: any y with y'A_j = c_j on basic columns works,
    // because the basic columns span the column space. Solved against the
    // original (unflipped, undropped) rows.
    let eqs = Matrix::from_rows(
        tab.basis
            .iter()
            .map(|&j| {
                let orig = split.col_orig[j].0;
                (0..m).map(|i| lp.a[(i, orig)].clone()).collect()
            })
            .collect(),
    )
    .expect("basis equations are rectangular");
    let costs: Vec<T> = tab
        .basis
        .iter()
        .map(|&j| lp.c[split.col_orig[j].0].clone())
        .collect();
    let dual = solve_any(&eqs, &costs)
        .expect("dual system dimensions agree")
        .expect("a dual solution exists for an optimal basis");

    let result = SolveResult {
        status: Status::Optimal,
        value: Some(value),
        x: Some(x),
        basis: Some(basis),
        dual: Some(dual),
    };
    debug_assert!(check_certificates(lp, &result));
    result
}

/// Exact verification of an `Optimal` result: primal feasibility, objective
/// consistency, and the dual certificate (`y'b = value`, `y'A_j >= c_j`
/// with equality on free columns).
pub fn check_certificates<T: Scalar>(lp: &LpStandardForm<T>, res: &SolveResult<T>) -> bool {
    if res.status != Status::Optimal {
        return false;
    }
    let (Some(value), Some(x), Some(dual)) = (&res.value, &res.x, &res.dual) else {
        return false;
    };
    if !lp.is_feasible(x) {
        return false;
    }
    if dot(&lp.c, x) != *value {
        return false;
    }
    if dot(dual, &lp.b) != *value {
        return false;
    }
    for j in 0..lp.num_vars() {
        let ya: T = (0..lp.num_constraints())
            .fold(T::zero(), |acc, i| acc + dual[i].clone() * lp.a[(i, j)].clone());
        let slack = ya - lp.c[j].clone();
        if lp.free_vars.contains(&j) {
            if !slack.is_zero() {
                return false;
            }
        } else if slack.is_negative() {
            return false;
        }
    }
    true
}

/// Supremum of `x_j` over the feasible set: the LP with the objective
/// replaced by the j-th unit vector.
pub fn maximize_coordinate<T: Scalar>(lp: &LpStandardForm<T>, j: usize) -> SolveResult<T> {
    assert!(j < lp.num_vars(), "coordinate index out of range");
    let mut c = vec![T::zero(); lp.num_vars()];
    c[j] = T::one();
    let probe = LpStandardForm {
        a: lp.a.clone(),
        b: lp.b.clone(),
        c,
        free_vars: lp.free_vars.clone(),
    };
    solve(&probe)
}

/// All feasible basic solutions, sorted by objective value descending,
/// using the default candidate cap.
pub fn enumerate_vertices<T: Scalar>(lp: &LpStandardForm<T>) -> Result<Vec<VertexEntry<T>>> {
    enumerate_vertices_with_cap(lp, DEFAULT_VERTEX_CAP)
}

/// All feasible basic solutions of the LP (free variables pre-split), with
/// exact objective values, sorted by value descending. Returns an error if
/// the number of candidate bases exceeds `cap`.
pub fn enumerate_vertices_with_cap<T: Scalar>(
    lp: &LpStandardForm<T>,
    cap: u128,
) -> Result<Vec<VertexEntry<T>>> {
    let split = split_free(lp);
    let nhat = split.col_orig.len();

    // Reduce to an independent, consistent row system first: candidate
    // bases have one column per independent row.
    let mut work = Matrix::zeros(split.a.rows(), nhat + 1);
    for i in 0..split.a.rows() {
        for j in 0..nhat {
            work[(i, j)] = split.a[(i, j)].clone();
        }
        work[(i, nhat)] = split.b[i].clone();
    }
    let reduced = row_echelon_rows(work);
    let mut sys_rows = Vec::new();
    let mut sys_rhs = Vec::new();
    for row in &reduced {
        let all_zero = row[..nhat].iter().all(|v| v.is_zero());
        if all_zero {
            if !row[nhat].is_zero() {
                return Ok(Vec::new()); // inconsistent: infeasible, no vertices
            }
            continue;
        }
        sys_rows.push(row[..nhat].to_vec());
        sys_rhs.push(row[nhat].clone());
    }
    let r = sys_rows.len();
    let candidates = binom(nhat, r);
    if candidates > cap {
        return Err(Error::CapExceeded {
            needed: candidates,
            cap,
        });
    }
    let sys = Matrix::from_rows(sys_rows)?;

    let mut entries = Vec::new();
    for combo in (0..nhat).combinations(r) {
        let sub = sys.select_columns(&combo);
        let solved = solve_linear(&sub, &sys_rhs)?;
        let xj = match solved {
            LinearSolution::Unique(xj) => xj,
            LinearSolution::Singular => continue,
        };
        if xj.iter().any(|v| v.is_negative()) {
            continue;
        }
        let mut xhat = vec![T::zero(); nhat];
        for (k, &j) in combo.iter().enumerate() {
            xhat[j] = xj[k].clone();
        }
        let x = unsplit_point(&split, lp.num_vars(), &xhat);
        let value = dot(&lp.c, &x);
        let mut basis: Vec<usize> = combo.iter().map(|&j| split.col_orig[j].0).collect();
        basis.sort_unstable();
        entries.push(VertexEntry { basis, x, value });
    }
    entries.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .expect("totally ordered scalars")
            .then_with(|| a.basis.cmp(&b.basis))
    });
    Ok(entries)
}

fn row_echelon_rows<T: Scalar>(mut work: Matrix<T>) -> Vec<Vec<T>> {
    let rows = work.rows();
    let cols = work.cols();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let pivot_row = match (row..rows).find(|&r| !work[(r, col)].is_zero()) {
            Some(r) => r,
            None => continue,
        };
        if pivot_row != row {
            for j in 0..cols {
                let tmp = work[(row, j)].clone();
                work[(row, j)] = work[(pivot_row, j)].clone();
                work[(pivot_row, j)] = tmp;
            }
        }
        let pivot = work[(row, col)].clone();
        for r in 0..rows {
            if r == row {
                continue;
            }
            let factor = work[(r, col)].clone() / pivot.clone();
            if factor.is_zero() {
                continue;
            }
            for j in 0..cols {
                let delta = factor.clone() * work[(row, j)].clone();
                work[(r, j)] = work[(r, j)].clone() - delta;
            }
        }
        row += 1;
    }
    (0..rows).map(|i| work.row(i).to_vec()).collect()
}
