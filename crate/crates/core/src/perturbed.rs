//! The singularly perturbed LP family and its limiting problem.
//!
//! A [`PerturbedLp`] holds the six data pieces of the family
//! `max <c0+eps*c1, x> s.t. (A0+eps*A1)x = b0+eps*b1, x >= 0`. This module
//! instantiates the family at concrete `eps`, computes the index set `J0`
//! of coordinates that can be positive on the unperturbed feasible set,
//! builds the two variants of the limiting LP over paired variables
//! `(x0, x1)`, decides the Slater / extended-Slater / equivalence / rank
//! conditions as exact LP feasibility questions, classifies bases by the
//! generic (non)singularity of their eps-pencil, and runs eps-sweeps that
//! compare the perturbed optimal values against the limiting value.

use std::collections::BTreeSet;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::linalg::{self, det, generic_rank_pencil, inf_norm, rank, sub_vec, Matrix};
use crate::scalar::Scalar;
use crate::simplex::{
    enumerate_vertices_with_cap, maximize_coordinate, solve, LpStandardForm, SolveResult, Status,
    DEFAULT_VERTEX_CAP,
};

/// Default cap on `C(n, m)` for basis classification.
pub const DEFAULT_BASIS_CAP: u128 = 100_000;

/// The six data pieces of the perturbed family.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedLp<T> {
    pub a0: Matrix<T>,
    pub a1: Matrix<T>,
    pub b0: Vec<T>,
    pub b1: Vec<T>,
    pub c0: Vec<T>,
    pub c1: Vec<T>,
}

impl<T: Scalar> PerturbedLp<T> {
    pub fn new(
        a0: Matrix<T>,
        a1: Matrix<T>,
        b0: Vec<T>,
        b1: Vec<T>,
        c0: Vec<T>,
        c1: Vec<T>,
    ) -> Result<Self> {
        let (m, n) = (a0.rows(), a0.cols());
        if a1.rows() != m || a1.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A1 is {}x{}, expected {}x{}",
                a1.rows(),
                a1.cols(),
                m,
                n
            )));
        }
        if b0.len() != m || b1.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "b0/b1 have lengths {}/{}, expected {}",
                b0.len(),
                b1.len(),
                m
            )));
        }
        if c0.len() != n || c1.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "c0/c1 have lengths {}/{}, expected {}",
                c0.len(),
                c1.len(),
                n
            )));
        }
        Ok(PerturbedLp {
            a0,
            a1,
            b0,
            b1,
            c0,
            c1,
        })
    }

    pub fn num_constraints(&self) -> usize {
        self.a0.rows()
    }

    pub fn num_vars(&self) -> usize {
        self.a0.cols()
    }
}

/// Coordinates that can be strictly positive somewhere on the unperturbed
/// feasible set, with one feasible point witnessing all of them at once.
#[derive(Debug, Clone, PartialEq)]
pub struct J0Set<T> {
    /// 0-based variable indices.
    pub indices: BTreeSet<usize>,
    /// A point of `theta(0)` strictly positive exactly on `indices`.
    pub witness: Option<Vec<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitingVariant {
    /// Problem over `Theta_1`: first-order variables are sign-free on `J0`.
    Theta1,
    /// The simplified problem: both variable blocks fully sign-constrained.
    Simplified,
}

/// The eps-free limiting LP over stacked variables `(x0, x1)`.
///
/// Rows are exactly `{A0 x0 = b0}` followed by `{A1 x0 + A0 x1 = b1}`;
/// the objective is `<c0, x0>`. Columns `0..n` are `x0`, columns `n..2n`
/// are `x1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitingLp<T> {
    pub variant: LimitingVariant,
    pub inner: LpStandardForm<T>,
    /// Required for `Theta1`; informational (and possibly absent) for
    /// `Simplified`.
    pub j0: Option<J0Set<T>>,
}

/// Outcome of the extended-Slater (order 1) detector.
#[derive(Debug, Clone, PartialEq)]
pub struct Es1Report<T> {
    pub holds: bool,
    /// Optimal `t` of the detector LP; `None` when `Theta_1` is empty.
    pub margin: Option<T>,
    /// `(x0, x1)` strictly positive where the condition demands, present
    /// iff the condition holds.
    pub witness: Option<(Vec<T>, Vec<T>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquivalenceReason {
    /// `b0 = 0` (always sufficient).
    Corollary1,
    /// A positive kernel vector of the `J0` columns of `A0` exists.
    Proposition1,
    /// Optimal values of the two variants agree; necessary but not
    /// sufficient for set equality, so never a certificate.
    ValueMatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport<T> {
    pub equivalent_certified: bool,
    pub reason: Option<EquivalenceReason>,
    pub theta1_status: Status,
    pub theta1_value: Option<T>,
    pub simplified_status: Status,
    pub simplified_value: Option<T>,
}

/// Rank and boundedness checks. `h0star_probe` samples finitely many
/// epsilons, so it is evidence for the boundedness assumption, never a
/// proof of it.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport<T> {
    pub h1: bool,
    pub h2: bool,
    pub h0star_probe: bool,
    pub probe_epsilons: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisClass {
    /// The eps-pencil of the basis columns is nonsingular for all small
    /// positive eps.
    Omega1,
    /// The basis determinant vanishes identically in eps.
    Omega2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<T> {
    pub eps: T,
    pub status: Status,
    pub value: Option<T>,
    /// `|F*(eps) - F1*|`, exact, when both values exist.
    pub gap: Option<T>,
    /// Infinity-norm distance from the eps-solution to the nearest optimal
    /// vertex of the limiting LP, when vertex enumeration was affordable.
    pub distance: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport<T> {
    pub limit_status: Status,
    pub limit_value: Option<T>,
    pub points: Vec<SweepPoint<T>>,
}

/// The LP of the family at a fixed `eps >= 0`; no free variables.
pub fn instantiate<T: Scalar>(p: &PerturbedLp<T>, eps: &T) -> LpStandardForm<T> {
    let a = p
        .a0
        .add_scaled(&p.a1, eps)
        .expect("validated dimensions");
    let b = linalg::add_scaled_vec(&p.b0, &p.b1, eps);
    let c = linalg::add_scaled_vec(&p.c0, &p.c1, eps);
    LpStandardForm::new(a, b, c).expect("validated dimensions")
}

fn unperturbed_feasible_lp<T: Scalar>(p: &PerturbedLp<T>) -> LpStandardForm<T> {
    let mut lp = instantiate(p, &T::zero());
    lp.c = vec![T::zero(); lp.num_vars()];
    lp
}

/// Computes `J0` by maximizing each coordinate over `theta(0)`, and builds
/// the witness as the equal-weight average of the per-coordinate
/// maximizers. A coordinate with an unbounded supremum belongs to `J0`;
/// its representative point comes from a re-solve with the coordinate
/// capped just above a known feasible value.
pub fn compute_j0<T: Scalar>(p: &PerturbedLp<T>) -> Result<J0Set<T>> {
    let base = unperturbed_feasible_lp(p);
    let n = base.num_vars();
    let m = base.num_constraints();
    let feas = solve(&base);
    let anchor = match feas.status {
        Status::Optimal => feas.x.expect("optimal result carries a point"),
        _ => return Err(Error::UnperturbedInfeasible),
    };

    let mut indices = BTreeSet::new();
    let mut maximizers: Vec<Vec<T>> = Vec::with_capacity(n);
    for j in 0..n {
        let res = maximize_coordinate(&base, j);
        match res.status {
            Status::Optimal => {
                let value = res.value.expect("optimal value");
                if value.is_positive() {
                    indices.insert(j);
                }
                maximizers.push(res.x.expect("optimal point"));
            }
            Status::Unbounded => {
                indices.insert(j);
                // Cap x_j one above the anchor's coordinate; the capped
                // problem is feasible and its optimum is positive.
                let mut a = Matrix::zeros(m + 1, n + 1);
                for i in 0..m {
                    for k in 0..n {
                        a[(i, k)] = base.a[(i, k)].clone();
                    }
                }
                a[(m, j)] = T::one();
                a[(m, n)] = T::one();
                let mut b = base.b.clone();
                b.push(anchor[j].clone() + T::one());
                let mut c = vec![T::zero(); n + 1];
                c[j] = T::one();
                let capped = LpStandardForm::new(a, b, c).expect("capped LP dims");
                let res = solve(&capped);
                assert_eq!(res.status, Status::Optimal, "capped coordinate LP");
                let mut x = res.x.expect("optimal point");
                x.truncate(n);
                debug_assert!(x[j].is_positive());
                maximizers.push(x);
            }
            Status::Infeasible => unreachable!("theta(0) was just found feasible"),
        }
    }

    let witness = if n == 0 {
        None
    } else {
        let weight = T::one() / T::from_int(n as i64);
        let mut acc = vec![T::zero(); n];
        for point in &maximizers {
            for (a, v) in acc.iter_mut().zip(point) {
                *a = a.clone() + v.clone();
            }
        }
        Some(linalg::scale_vec(&acc, &weight))
    };
    Ok(J0Set { indices, witness })
}

/// Slater condition: `theta(0)` contains a strictly positive point,
/// equivalently `J0 = {all coordinates}`. Infeasible `theta(0)` counts as
/// false.
pub fn slater_holds<T: Scalar>(p: &PerturbedLp<T>) -> bool {
    match compute_j0(p) {
        Ok(j0) => j0.indices.len() == p.num_vars(),
        Err(_) => false,
    }
}

fn stacked_limiting_lp<T: Scalar>(
    p: &PerturbedLp<T>,
    free_vars: BTreeSet<usize>,
) -> LpStandardForm<T> {
    let m = p.num_constraints();
    let n = p.num_vars();
    let mut a = Matrix::zeros(2 * m, 2 * n);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = p.a0[(i, j)].clone();
            a[(m + i, j)] = p.a1[(i, j)].clone();
            a[(m + i, n + j)] = p.a0[(i, j)].clone();
        }
    }
    let mut b = p.b0.clone();
    b.extend(p.b1.iter().cloned());
    let mut c = p.c0.clone();
    c.extend(std::iter::repeat(T::zero()).take(n));
    LpStandardForm::with_free(a, b, c, free_vars).expect("stacked dims")
}

fn build_limiting_with_j0<T: Scalar>(
    p: &PerturbedLp<T>,
    variant: LimitingVariant,
    j0: Option<J0Set<T>>,
) -> LimitingLp<T> {
    let n = p.num_vars();
    let free_vars = match (variant, &j0) {
        (LimitingVariant::Theta1, Some(j0)) => j0.indices.iter().map(|&j| n + j).collect(),
        (LimitingVariant::Theta1, None) => unreachable!("Theta1 requires J0"),
        (LimitingVariant::Simplified, _) => BTreeSet::new(),
    };
    LimitingLp {
        variant,
        inner: stacked_limiting_lp(p, free_vars),
        j0,
    }
}

/// Builds the limiting LP. The `Theta1` variant needs `J0`, hence a
/// nonempty `theta(0)`; the `Simplified` variant never fails and carries
/// `J0` only when it is computable.
pub fn build_limiting<T: Scalar>(
    p: &PerturbedLp<T>,
    variant: LimitingVariant,
) -> Result<LimitingLp<T>> {
    let j0 = match variant {
        LimitingVariant::Theta1 => Some(compute_j0(p)?),
        LimitingVariant::Simplified => compute_j0(p).ok(),
    };
    Ok(build_limiting_with_j0(p, variant, j0))
}

/// Decides the extended Slater condition of order 1 with a single
/// detector LP: maximize `t` subject to `(x0, x1)` in `Theta_1`,
/// `x0_j >= t` on `J0`, `x1_j >= t` off `J0`, and `t <= 1`. The condition
/// holds iff the optimum is positive; the cap keeps the detector bounded
/// without affecting the optimum's sign.
pub fn check_es1<T: Scalar>(p: &PerturbedLp<T>) -> Result<Es1Report<T>> {
    let j0 = compute_j0(p)?;
    let m = p.num_constraints();
    let n = p.num_vars();

    // Columns: x0 (n) | x1 (n) | t | s (n) | s_t.
    let t_col = 2 * n;
    let s0 = 2 * n + 1;
    let st_col = 3 * n + 1;
    let cols = 3 * n + 2;
    let rows = 2 * m + n + 1;
    let mut a = Matrix::zeros(rows, cols);
    let mut b = vec![T::zero(); rows];
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = p.a0[(i, j)].clone();
            a[(m + i, j)] = p.a1[(i, j)].clone();
            a[(m + i, n + j)] = p.a0[(i, j)].clone();
        }
        b[i] = p.b0[i].clone();
        b[m + i] = p.b1[i].clone();
    }
    for j in 0..n {
        let row = 2 * m + j;
        // x0_j - t - s_j = 0 on J0, else x1_j - t - s_j = 0.
        if j0.indices.contains(&j) {
            a[(row, j)] = T::one();
        } else {
            a[(row, n + j)] = T::one();
        }
        a[(row, t_col)] = -T::one();
        a[(row, s0 + j)] = -T::one();
    }
    a[(rows - 1, t_col)] = T::one();
    a[(rows - 1, st_col)] = T::one();
    b[rows - 1] = T::one();

    let mut c = vec![T::zero(); cols];
    c[t_col] = T::one();
    let mut free: BTreeSet<usize> = j0.indices.iter().map(|&j| n + j).collect();
    free.insert(t_col);
    let detector = LpStandardForm::with_free(a, b, c, free).expect("detector dims");

    let res = solve(&detector);
    match res.status {
        Status::Infeasible => Ok(Es1Report {
            holds: false,
            margin: None,
            witness: None,
        }),
        Status::Unbounded => unreachable!("detector objective is capped at one"),
        Status::Optimal => {
            let margin = res.value.expect("optimal value");
            let holds = margin.is_positive();
            let witness = if holds {
                let x = res.x.expect("optimal point");
                Some((x[..n].to_vec(), x[n..2 * n].to_vec()))
            } else {
                None
            };
            Ok(Es1Report {
                holds,
                margin: Some(margin),
                witness,
            })
        }
    }
}

/// Equivalence of the `Theta1` and `Simplified` limiting problems:
/// certified by `b0 = 0`, else by a positive kernel vector of the `J0`
/// columns of `A0`, else compared by optimal value (uncertified).
pub fn check_equivalence<T: Scalar>(p: &PerturbedLp<T>) -> Result<EquivalenceReport<T>> {
    let j0 = compute_j0(p)?;
    let theta1 = build_limiting_with_j0(p, LimitingVariant::Theta1, Some(j0.clone()));
    let simplified = build_limiting_with_j0(p, LimitingVariant::Simplified, Some(j0.clone()));
    let r1 = solve(&theta1.inner);
    let r2 = solve(&simplified.inner);

    let mut report = EquivalenceReport {
        equivalent_certified: false,
        reason: None,
        theta1_status: r1.status,
        theta1_value: r1.value,
        simplified_status: r2.status,
        simplified_value: r2.value,
    };

    if p.b0.iter().all(|v| v.is_zero()) {
        report.equivalent_certified = true;
        report.reason = Some(EquivalenceReason::Corollary1);
        return Ok(report);
    }
    if positive_kernel_exists(&p.a0, &j0.indices) {
        report.equivalent_certified = true;
        report.reason = Some(EquivalenceReason::Proposition1);
        return Ok(report);
    }
    let values_match = report.theta1_status == report.simplified_status
        && report.theta1_value == report.simplified_value;
    if values_match {
        report.reason = Some(EquivalenceReason::ValueMatch);
    }
    Ok(report)
}

/// Is there `alpha` with `A0_{J0} alpha = 0` and every component positive?
/// Decided by maximizing a common lower bound `t <= 1` on the components.
fn positive_kernel_exists<T: Scalar>(a0: &Matrix<T>, j0: &BTreeSet<usize>) -> bool {
    let m = a0.rows();
    let k = j0.len();
    // Columns: alpha (k, free) | t (free) | s (k) | s_t.
    let t_col = k;
    let s0 = k + 1;
    let st_col = 2 * k + 1;
    let cols = 2 * k + 2;
    let rows = m + k + 1;
    let mut a = Matrix::zeros(rows, cols);
    let mut b = vec![T::zero(); rows];
    for (col, &j) in j0.iter().enumerate() {
        for i in 0..m {
            a[(i, col)] = a0[(i, j)].clone();
        }
    }
    for i in 0..k {
        let row = m + i;
        a[(row, i)] = T::one();
        a[(row, t_col)] = -T::one();
        a[(row, s0 + i)] = -T::one();
    }
    a[(rows - 1, t_col)] = T::one();
    a[(rows - 1, st_col)] = T::one();
    b[rows - 1] = T::one();
    let mut c = vec![T::zero(); cols];
    c[t_col] = T::one();
    let mut free: BTreeSet<usize> = (0..k).collect();
    free.insert(t_col);
    let lp = LpStandardForm::with_free(a, b, c, free).expect("kernel detector dims");
    let res = solve(&lp);
    res.status == Status::Optimal && res.value.map_or(false, |v| v.is_positive())
}

/// Checks (H1), (H2) exactly and probes (H0*) at `eps_probe`, `eps_probe/2`
/// and `eps_probe/4` by testing boundedness of the optimal face
/// coordinate by coordinate. A probe point that is not solvable to
/// optimality fails the probe.
pub fn check_assumptions<T: Scalar>(
    p: &PerturbedLp<T>,
    eps_probe: &T,
) -> Result<AssumptionReport<T>> {
    if !eps_probe.is_positive() {
        return Err(Error::InvalidInput(
            "eps_probe must be positive".to_string(),
        ));
    }
    let m = p.num_constraints();
    let h1 = rank(&p.a0) == m;
    let h2 = generic_rank_pencil(&p.a0, &p.a1)? == m;

    let half = T::ratio(1, 2);
    let probes = vec![
        eps_probe.clone(),
        eps_probe.clone() * half.clone(),
        eps_probe.clone() * half.clone() * half,
    ];
    let mut bounded = true;
    for eps in &probes {
        if !optimal_face_bounded(p, eps) {
            bounded = false;
            break;
        }
    }
    Ok(AssumptionReport {
        h1,
        h2,
        h0star_probe: bounded,
        probe_epsilons: probes,
    })
}

fn optimal_face_bounded<T: Scalar>(p: &PerturbedLp<T>, eps: &T) -> bool {
    let lp = instantiate(p, eps);
    let res = solve(&lp);
    if res.status != Status::Optimal {
        return false;
    }
    let value = res.value.expect("optimal value");
    // Intersect the feasible set with <c, x> = F*(eps).
    let m = lp.num_constraints();
    let n = lp.num_vars();
    let mut a = Matrix::zeros(m + 1, n);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = lp.a[(i, j)].clone();
        }
    }
    for j in 0..n {
        a[(m, j)] = lp.c[j].clone();
    }
    let mut b = lp.b.clone();
    b.push(value);
    for j in 0..n {
        for sign in [T::one(), -T::one()] {
            let mut c = vec![T::zero(); n];
            c[j] = sign;
            let face = LpStandardForm::new(a.clone(), b.clone(), c).expect("face dims");
            if solve(&face).status == Status::Unbounded {
                return false;
            }
        }
    }
    true
}

/// Tags every size-m column set `J`: `Omega2` iff `det((A0 + eps*A1)_J)`,
/// a polynomial in `eps` of degree at most `m`, is identically zero —
/// decided exactly by evaluation at `m + 1` distinct positive points.
pub fn classify_bases<T: Scalar>(
    p: &PerturbedLp<T>,
    cap: u128,
) -> Result<Vec<(Vec<usize>, BasisClass)>> {
    let m = p.num_constraints();
    let n = p.num_vars();
    let count = binom_u128(n, m);
    if count > cap {
        return Err(Error::CapExceeded { needed: count, cap });
    }
    let pencils: Vec<Matrix<T>> = (1..=m as i64 + 1)
        .map(|k| {
            p.a0.add_scaled(&p.a1, &T::ratio(1, k))
                .expect("validated dimensions")
        })
        .collect();
    let mut out = Vec::new();
    for combo in (0..n).combinations(m) {
        let identically_zero = pencils.iter().all(|at| {
            det(&at.select_columns(&combo))
                .expect("square selection")
                .is_zero()
        });
        let class = if identically_zero {
            BasisClass::Omega2
        } else {
            BasisClass::Omega1
        };
        out.push((combo, class));
    }
    Ok(out)
}

fn binom_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Geometric eps-schedule solve: `eps_k = eps0 * ratio^k` for
/// `k = 0..steps`, compared against the `Theta1` limiting value. Failed
/// points are recorded and the sweep continues.
pub fn sweep<T: Scalar>(
    p: &PerturbedLp<T>,
    eps0: &T,
    ratio: &T,
    steps: usize,
    vertex_cap: u128,
) -> Result<SweepReport<T>> {
    if !eps0.is_positive() {
        return Err(Error::InvalidInput("eps0 must be positive".to_string()));
    }
    if !ratio.is_positive() || *ratio >= T::one() {
        return Err(Error::InvalidInput(
            "ratio must lie strictly between 0 and 1".to_string(),
        ));
    }
    if steps == 0 {
        return Err(Error::InvalidInput("steps must be at least 1".to_string()));
    }

    let limiting = build_limiting(p, LimitingVariant::Theta1)?;
    let limit_res = solve(&limiting.inner);
    let n = p.num_vars();

    // Optimal vertices of the limiting LP, projected onto the x0 block,
    // for the distance column.
    let optimal_vertices: Option<Vec<Vec<T>>> = match (&limit_res.status, &limit_res.value) {
        (Status::Optimal, Some(star)) => {
            match enumerate_vertices_with_cap(&limiting.inner, vertex_cap) {
                Ok(vertices) => Some(
                    vertices
                        .into_iter()
                        .filter(|v| v.value == *star)
                        .map(|v| v.x[..n].to_vec())
                        .collect(),
                ),
                Err(Error::CapExceeded { .. }) => None,
                Err(e) => return Err(e),
            }
        }
        _ => None,
    };

    let mut points = Vec::with_capacity(steps);
    let mut eps = eps0.clone();
    for _ in 0..steps {
        let res = solve(&instantiate(p, &eps));
        let gap = match (&res.value, &limit_res.value) {
            (Some(v), Some(star)) => Some((v.clone() - star.clone()).abs()),
            _ => None,
        };
        let distance = match (&res.x, &optimal_vertices) {
            (Some(x), Some(vertices)) if !vertices.is_empty() => vertices
                .iter()
                .map(|v| inf_norm(&sub_vec(x, v)))
                .min_by(|a, b| a.partial_cmp(b).expect("totally ordered scalars")),
            _ => None,
        };
        points.push(SweepPoint {
            eps: eps.clone(),
            status: res.status,
            value: res.value,
            gap,
            distance,
        });
        eps = eps * ratio.clone();
    }
    Ok(SweepReport {
        limit_status: limit_res.status,
        limit_value: limit_res.value,
        points,
    })
}

/// Exact membership of `x0` in the projected limiting feasible set
/// `theta_1`: `x0` must lie in `theta(0)` and some `x1` with the `J0` sign
/// relaxation must solve the first-order constraint.
pub fn theta1_contains<T: Scalar>(p: &PerturbedLp<T>, j0: &J0Set<T>, x0: &[T]) -> Result<bool> {
    let zero_lp = unperturbed_feasible_lp(p);
    if !zero_lp.is_feasible(x0) {
        return Ok(false);
    }
    let m = p.num_constraints();
    let n = p.num_vars();
    let mut a = Matrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = p.a0[(i, j)].clone();
        }
    }
    let a1x = p.a1.mat_vec(x0)?;
    let b = sub_vec(&p.b1, &a1x);
    let free: BTreeSet<usize> = j0.indices.iter().copied().collect();
    let c = vec![T::zero(); n];
    let lp = LpStandardForm::with_free(a, b, c, free)?;
    Ok(solve(&lp).status == Status::Optimal)
}

/// Exact infinity-norm distance from `x` to `theta_1`, or `None` when
/// `Theta_1` is empty.
pub fn distance_to_theta1<T: Scalar>(
    p: &PerturbedLp<T>,
    j0: &J0Set<T>,
    x: &[T],
) -> Result<Option<T>> {
    let m = p.num_constraints();
    let n = p.num_vars();
    if x.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "point has length {}, expected {}",
            x.len(),
            n
        )));
    }
    // Columns: z (n) | w (n) | d | s_hi (n) | s_lo (n).
    let d_col = 2 * n;
    let hi0 = 2 * n + 1;
    let lo0 = 3 * n + 1;
    let cols = 4 * n + 1;
    let rows = 2 * m + 2 * n;
    let mut a = Matrix::zeros(rows, cols);
    let mut b = vec![T::zero(); rows];
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = p.a0[(i, j)].clone();
            a[(m + i, j)] = p.a1[(i, j)].clone();
            a[(m + i, n + j)] = p.a0[(i, j)].clone();
        }
        b[i] = p.b0[i].clone();
        b[m + i] = p.b1[i].clone();
    }
    for j in 0..n {
        // z_j + d - s_hi = x_j  and  z_j - d + s_lo = x_j.
        let hi = 2 * m + j;
        let lo = 2 * m + n + j;
        a[(hi, j)] = T::one();
        a[(hi, d_col)] = T::one();
        a[(hi, hi0 + j)] = -T::one();
        b[hi] = x[j].clone();
        a[(lo, j)] = T::one();
        a[(lo, d_col)] = -T::one();
        a[(lo, lo0 + j)] = T::one();
        b[lo] = x[j].clone();
    }
    let mut c = vec![T::zero(); cols];
    c[d_col] = -T::one();
    let free: BTreeSet<usize> = j0.indices.iter().map(|&j| n + j).collect();
    let lp = LpStandardForm::with_free(a, b, c, free)?;
    let res = solve(&lp);
    match res.status {
        Status::Optimal => Ok(Some(-res.value.expect("optimal value"))),
        Status::Infeasible => Ok(None),
        Status::Unbounded => unreachable!("distance objective is bounded above by zero"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, Rat};

    fn mat(rows: Vec<Vec<i64>>) -> Matrix<Rat> {
        Matrix::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|x| rat(x, 1)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn vec_r(entries: Vec<i64>) -> Vec<Rat> {
        entries.into_iter().map(|x| rat(x, 1)).collect()
    }

    fn zeros(n: usize) -> Vec<Rat> {
        vec![rat(0, 1); n]
    }

    /// One-row family used across the simple examples.
    fn simple_family() -> PerturbedLp<Rat> {
        PerturbedLp::new(
            mat(vec![vec![1, 1]]),
            mat(vec![vec![0, 0]]),
            vec_r(vec![1]),
            vec_r(vec![0]),
            vec_r(vec![1, 0]),
            zeros(2),
        )
        .unwrap()
    }

    #[test]
    fn instantiate_at_zero_is_unperturbed() {
        let p = simple_family();
        let lp = instantiate(&p, &rat(0, 1));
        assert_eq!(lp.a, p.a0);
        assert_eq!(lp.b, p.b0);
        assert_eq!(lp.c, p.c0);
        assert!(lp.free_vars.is_empty());
    }

    #[test]
    fn instantiate_zero_perturbation_is_constant() {
        let p = simple_family();
        assert_eq!(instantiate(&p, &rat(3, 7)), instantiate(&p, &rat(0, 1)));
    }

    #[test]
    fn instantiate_direct_arithmetic() {
        let p = PerturbedLp::new(
            mat(vec![vec![1, 1]]),
            mat(vec![vec![1, 0]]),
            vec_r(vec![1]),
            vec_r(vec![1]),
            zeros(2),
            zeros(2),
        )
        .unwrap();
        let lp = instantiate(&p, &rat(1, 2));
        assert_eq!(lp.a, Matrix::from_rows(vec![vec![rat(3, 2), rat(1, 1)]]).unwrap());
        assert_eq!(lp.b, vec![rat(3, 2)]);
    }

    #[test]
    fn j0_full_simplex() {
        let p = simple_family();
        let j0 = compute_j0(&p).unwrap();
        assert_eq!(j0.indices, [0usize, 1].into_iter().collect());
        assert_eq!(j0.witness, Some(vec![rat(1, 2), rat(1, 2)]));
        assert!(slater_holds(&p));
    }

    #[test]
    fn j0_forced_zero_coordinate() {
        // theta(0) = {(1, 0)}: x2 is forced to zero.
        let p = PerturbedLp::new(
            Matrix::identity(2),
            Matrix::zeros(2, 2),
            vec_r(vec![1, 0]),
            zeros(2),
            zeros(2),
            zeros(2),
        )
        .unwrap();
        let j0 = compute_j0(&p).unwrap();
        assert_eq!(j0.indices, [0usize].into_iter().collect());
        assert!(!slater_holds(&p));
    }

    #[test]
    fn j0_infeasible_unperturbed() {
        let p = PerturbedLp::new(
            mat(vec![vec![1]]),
            mat(vec![vec![0]]),
            vec_r(vec![-1]),
            vec_r(vec![0]),
            zeros(1),
            zeros(1),
        )
        .unwrap();
        assert_eq!(compute_j0(&p), Err(Error::UnperturbedInfeasible));
        assert!(!slater_holds(&p));
    }

    #[test]
    fn j0_unbounded_coordinate_counts() {
        // x1 - x2 = 1: both coordinates have unbounded suprema.
        let p = PerturbedLp::new(
            mat(vec![vec![1, -1]]),
            mat(vec![vec![0, 0]]),
            vec_r(vec![1]),
            vec_r(vec![0]),
            zeros(2),
            zeros(2),
        )
        .unwrap();
        let j0 = compute_j0(&p).unwrap();
        assert_eq!(j0.indices.len(), 2);
        let w = j0.witness.unwrap();
        assert!(w[0].is_positive() && w[1].is_positive());
        let lp = instantiate(&p, &rat(0, 1));
        assert!(lp.is_feasible(&w));
    }

    #[test]
    fn limiting_structure() {
        let p = simple_family();
        let lim = build_limiting(&p, LimitingVariant::Theta1).unwrap();
        let lp = &lim.inner;
        assert_eq!(lp.num_constraints(), 2);
        assert_eq!(lp.num_vars(), 4);
        // Rows: [A0 0; A1 A0].
        assert_eq!(lp.a.row(0), &[rat(1, 1), rat(1, 1), rat(0, 1), rat(0, 1)][..]);
        assert_eq!(lp.a.row(1), &[rat(0, 1), rat(0, 1), rat(1, 1), rat(1, 1)][..]);
        assert_eq!(lp.b, vec![rat(1, 1), rat(0, 1)]);
        assert_eq!(lp.c, vec![rat(1, 1), rat(0, 1), rat(0, 1), rat(0, 1)]);
        // Slater holds, so the whole x1 block is free.
        assert_eq!(lp.free_vars, [2usize, 3].into_iter().collect());

        let simplified = build_limiting(&p, LimitingVariant::Simplified).unwrap();
        assert!(simplified.inner.free_vars.is_empty());
    }

    #[test]
    fn limiting_value_matches_unperturbed_under_slater() {
        let p = simple_family();
        let lim = build_limiting(&p, LimitingVariant::Theta1).unwrap();
        let limit_value = solve(&lim.inner).value;
        let unperturbed = solve(&instantiate(&p, &rat(0, 1))).value;
        assert_eq!(limit_value, unperturbed);
        assert_eq!(limit_value, Some(rat(1, 1)));
    }

    #[test]
    fn es1_holds_on_slater_family() {
        let p = simple_family();
        let report = check_es1(&p).unwrap();
        assert!(report.holds);
        let margin = report.margin.unwrap();
        assert!(margin.is_positive());
        let (x0, _x1) = report.witness.unwrap();
        assert!(x0[0] >= margin && x0[1] >= margin);
    }

    #[test]
    fn es1_empty_theta1() {
        // Theta_1 forces x1_2 = -1 with 2 not in J0: empty.
        let p = PerturbedLp::new(
            Matrix::identity(2),
            Matrix::zeros(2, 2),
            vec_r(vec![1, 0]),
            vec_r(vec![0, -1]),
            zeros(2),
            zeros(2),
        )
        .unwrap();
        let report = check_es1(&p).unwrap();
        assert!(!report.holds);
        assert_eq!(report.margin, None);
        assert_eq!(report.witness, None);
    }

    #[test]
    fn equivalence_corollary1_when_b0_zero() {
        // The spec's kernel example has b0 = 0, so the b0 = 0 certificate
        // takes precedence over the kernel test.
        let p = PerturbedLp::new(
            mat(vec![vec![1, -1]]),
            mat(vec![vec![0, 0]]),
            vec_r(vec![0]),
            vec_r(vec![0]),
            zeros(2),
            zeros(2),
        )
        .unwrap();
        let report = check_equivalence(&p).unwrap();
        assert!(report.equivalent_certified);
        assert_eq!(report.reason, Some(EquivalenceReason::Corollary1));
    }

    #[test]
    fn equivalence_proposition1_kernel() {
        // x1 - x2 = 3: J0 = {1, 2} and alpha = (1, 1) spans the kernel.
        let p = PerturbedLp::new(
            mat(vec![vec![1, -1]]),
            mat(vec![vec![0, 0]]),
            vec_r(vec![3]),
            vec_r(vec![0]),
            vec_r(vec![-1, -1]),
            zeros(2),
        )
        .unwrap();
        let report = check_equivalence(&p).unwrap();
        assert!(report.equivalent_certified);
        assert_eq!(report.reason, Some(EquivalenceReason::Proposition1));
    }

    #[test]
    fn equivalence_value_match_fallback() {
        // J0 = {1} and the only kernel vector over J0 is zero: no
        // certificate, fall back to comparing values.
        let p = PerturbedLp::new(
            Matrix::identity(2),
            Matrix::zeros(2, 2),
            vec_r(vec![1, 0]),
            zeros(2),
            zeros(2),
            zeros(2),
        )
        .unwrap();
        let report = check_equivalence(&p).unwrap();
        assert!(!report.equivalent_certified);
        assert_eq!(report.reason, Some(EquivalenceReason::ValueMatch));
        assert_eq!(report.theta1_value, report.simplified_value);
    }

    #[test]
    fn assumptions_examples() {
        let probe = rat(1, 8);
        let p = PerturbedLp::new(
            mat(vec![vec![1, 1], vec![1, 1]]),
            Matrix::zeros(2, 2),
            vec_r(vec![1, 1]),
            zeros(2),
            zeros(2),
            zeros(2),
        )
        .unwrap();
        let rep = check_assumptions(&p, &probe).unwrap();
        assert!(!rep.h1);

        let p = PerturbedLp::new(
            mat(vec![vec![0, 0]]),
            mat(vec![vec![1, 0]]),
            zeros(1),
            zeros(1),
            zeros(2),
            zeros(2),
        )
        .unwrap();
        let rep = check_assumptions(&p, &probe).unwrap();
        assert!(!rep.h1);
        assert!(rep.h2);
    }

    #[test]
    fn assumptions_bounded_probe() {
        let p = simple_family();
        let rep = check_assumptions(&p, &rat(1, 8)).unwrap();
        assert!(rep.h1);
        assert!(rep.h2);
        assert!(rep.h0star_probe);
    }

    #[test]
    fn assumptions_unbounded_face_fails_probe() {
        // x1 - x2 = 1 with zero objective: the optimal face is the whole
        // unbounded feasible set.
        let p = PerturbedLp::new(
            mat(vec![vec![1, -1]]),
            Matrix::zeros(1, 2),
            vec_r(vec![1]),
            zeros(1),
            zeros(2),
            zeros(2),
        )
        .unwrap();
        let rep = check_assumptions(&p, &rat(1, 8)).unwrap();
        assert!(!rep.h0star_probe);
    }

    #[test]
    fn classify_bases_examples() {
        let p = PerturbedLp::new(
            Matrix::identity(2),
            Matrix::zeros(2, 2),
            zeros(2),
            zeros(2),
            zeros(2),
            zeros(2),
        )
        .unwrap();
        let classes = classify_bases(&p, DEFAULT_BASIS_CAP).unwrap();
        assert_eq!(classes, vec![(vec![0, 1], BasisClass::Omega1)]);

        let p = PerturbedLp::new(
            mat(vec![vec![1, 1]]),
            mat(vec![vec![0, 0]]),
            zeros(1),
            zeros(1),
            zeros(2),
            zeros(2),
        )
        .unwrap();
        let classes = classify_bases(&p, DEFAULT_BASIS_CAP).unwrap();
        assert_eq!(
            classes,
            vec![
                (vec![0], BasisClass::Omega1),
                (vec![1], BasisClass::Omega1)
            ]
        );

        // A zero column (in both pieces) makes every basis containing it
        // identically singular.
        let p = PerturbedLp::new(
            mat(vec![vec![1, 0], vec![0, 0]]),
            Matrix::zeros(2, 2),
            zeros(2),
            zeros(2),
            zeros(2),
            zeros(2),
        )
        .unwrap();
        let classes = classify_bases(&p, DEFAULT_BASIS_CAP).unwrap();
        assert_eq!(classes, vec![(vec![0, 1], BasisClass::Omega2)]);
    }

    #[test]
    fn classify_bases_cap() {
        let p = PerturbedLp::new(
            Matrix::zeros(2, 6),
            Matrix::zeros(2, 6),
            zeros(2),
            zeros(2),
            zeros(6),
            zeros(6),
        )
        .unwrap();
        assert!(matches!(
            classify_bases(&p, 10),
            Err(Error::CapExceeded { needed: 15, cap: 10 })
        ));
    }

    #[test]
    fn sweep_constant_family_has_zero_gaps() {
        let p = simple_family();
        let report = sweep(&p, &rat(1, 2), &rat(1, 2), 6, DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(report.limit_status, Status::Optimal);
        assert_eq!(report.points.len(), 6);
        for point in &report.points {
            assert_eq!(point.status, Status::Optimal);
            assert_eq!(point.gap, Some(rat(0, 1)));
            assert_eq!(point.distance, Some(rat(0, 1)));
        }
        // Epsilons strictly decrease.
        for w in report.points.windows(2) {
            assert!(w[0].eps > w[1].eps);
        }
    }

    #[test]
    fn sweep_records_infeasible_points() {
        // x1 = -eps: infeasible for every eps > 0 but feasible at 0.
        let p = PerturbedLp::new(
            mat(vec![vec![1]]),
            mat(vec![vec![0]]),
            zeros(1),
            vec_r(vec![-1]),
            zeros(1),
            zeros(1),
        )
        .unwrap();
        let report = sweep(&p, &rat(1, 2), &rat(1, 2), 3, DEFAULT_VERTEX_CAP).unwrap();
        assert!(report
            .points
            .iter()
            .all(|pt| pt.status == Status::Infeasible && pt.value.is_none()));
    }

    #[test]
    fn theta1_membership_and_distance() {
        let p = simple_family();
        let j0 = compute_j0(&p).unwrap();
        let inside = vec![rat(1, 2), rat(1, 2)];
        assert!(theta1_contains(&p, &j0, &inside).unwrap());
        assert_eq!(distance_to_theta1(&p, &j0, &inside).unwrap(), Some(rat(0, 1)));

        let outside = vec![rat(2, 1), rat(0, 1)];
        assert!(!theta1_contains(&p, &j0, &outside).unwrap());
        let d = distance_to_theta1(&p, &j0, &outside).unwrap().unwrap();
        assert!(d.is_positive());
    }
}
