//! Finite Markov decision processes: exact stationary-policy evaluation,
//! the discounted-optimality LP, and its reduction to the average-reward LP.
//!
//! The interest rate `eps = (1-alpha)/alpha` turns the discounted LP (in
//! slack form, after the change of variables `v = eps/(1+eps) * v~`) into a
//! perturbed family with `A0 = [D | -I]`, `A1 = [I | 0]`, `b0 = 0`,
//! `b1 = r`, where `D` stacks the rows `delta_ij - p_iaj`. Its simplified
//! limiting LP is, column permutation aside, exactly the classical
//! multichain average-reward LP; [`verify_reduction`] checks all of that on
//! a concrete instance, hypothesis by hypothesis.

use itertools::Itertools;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::linalg::{dot, solve_linear, LinearSolution, Matrix};
use crate::perturbed::{
    build_limiting, check_assumptions, check_es1, sweep, AssumptionReport, LimitingLp,
    LimitingVariant, PerturbedLp, SweepReport,
};
use crate::scalar::Scalar;
use crate::simplex::{solve, LpStandardForm, Status, DEFAULT_VERTEX_CAP};

/// Default cap on exhaustive deterministic-policy enumeration.
pub const DEFAULT_POLICY_CAP: u128 = 10_000;

/// Finite MDP with exact rational data.
///
/// States are `0..num_states()`, actions in state `i` are
/// `0..action_count(i)`. Transition rows are exactly stochastic and every
/// objective weight is positive; both are validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp<T> {
    rewards: Vec<Vec<T>>,
    transitions: Vec<Vec<Vec<T>>>,
    gamma: Vec<T>,
}

impl<T: Scalar> Mdp<T> {
    /// Builds and validates an MDP. `gamma = None` means uniform `1/N`.
    pub fn new(
        rewards: Vec<Vec<T>>,
        transitions: Vec<Vec<Vec<T>>>,
        gamma: Option<Vec<T>>,
    ) -> Result<Self> {
        let n = rewards.len();
        if n == 0 {
            return Err(Error::InvalidInput("MDP needs at least one state".into()));
        }
        if transitions.len() != n {
            return Err(Error::InvalidInput(format!(
                "transitions cover {} states, rewards cover {}",
                transitions.len(),
                n
            )));
        }
        for i in 0..n {
            if rewards[i].is_empty() {
                return Err(Error::InvalidInput(format!(
                    "state {} has no actions",
                    i + 1
                )));
            }
            if transitions[i].len() != rewards[i].len() {
                return Err(Error::InvalidInput(format!(
                    "state {} has {} reward entries but {} transition rows",
                    i + 1,
                    rewards[i].len(),
                    transitions[i].len()
                )));
            }
            for (a, row) in transitions[i].iter().enumerate() {
                if row.len() != n {
                    return Err(Error::InvalidInput(format!(
                        "transition row for state {} action {} has {} entries, expected {}",
                        i + 1,
                        a + 1,
                        row.len(),
                        n
                    )));
                }
                if row.iter().any(|p| p.is_negative()) {
                    return Err(Error::InvalidInput(format!(
                        "negative transition probability at state {} action {}",
                        i + 1,
                        a + 1
                    )));
                }
                let sum = row.iter().fold(T::zero(), |acc, p| acc + p.clone());
                if !sum.is_one() {
                    return Err(Error::InvalidInput(format!(
                        "transition row for state {} action {} sums to {}, expected 1",
                        i + 1,
                        a + 1,
                        sum
                    )));
                }
            }
        }
        let gamma = match gamma {
            Some(g) => {
                if g.len() != n {
                    return Err(Error::InvalidInput(format!(
                        "gamma has {} entries, expected {}",
                        g.len(),
                        n
                    )));
                }
                if g.iter().any(|v| !v.is_positive()) {
                    return Err(Error::InvalidInput(
                        "every gamma entry must be positive".into(),
                    ));
                }
                g
            }
            None => vec![T::ratio(1, n as i64); n],
        };
        Ok(Mdp {
            rewards,
            transitions,
            gamma,
        })
    }

    pub fn num_states(&self) -> usize {
        self.rewards.len()
    }

    pub fn action_count(&self, state: usize) -> usize {
        self.rewards[state].len()
    }

    pub fn action_counts(&self) -> Vec<usize> {
        self.rewards.iter().map(Vec::len).collect()
    }

    /// Total number of state-action pairs; the constraint-row count of the
    /// discounted LP.
    pub fn num_state_actions(&self) -> usize {
        self.rewards.iter().map(Vec::len).sum()
    }

    pub fn reward(&self, state: usize, action: usize) -> &T {
        &self.rewards[state][action]
    }

    pub fn transition(&self, state: usize, action: usize, next: usize) -> &T {
        &self.transitions[state][action][next]
    }

    pub fn gamma(&self) -> &[T] {
        &self.gamma
    }

    pub fn gamma_sum(&self) -> T {
        self.gamma.iter().fold(T::zero(), |acc, g| acc + g.clone())
    }

    /// State-action pairs in the fixed row order used by every LP here.
    pub fn state_action_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.num_states())
            .flat_map(|i| (0..self.action_count(i)).map(move |a| (i, a)))
            .collect()
    }

    pub fn deterministic_policy_count(&self) -> u128 {
        self.rewards
            .iter()
            .fold(1u128, |acc, r| acc.saturating_mul(r.len() as u128))
    }
}

/// Per-state distribution over actions.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPolicy<T> {
    pi: Vec<Vec<T>>,
}

impl<T: Scalar> StationaryPolicy<T> {
    pub fn new(mdp: &Mdp<T>, pi: Vec<Vec<T>>) -> Result<Self> {
        if pi.len() != mdp.num_states() {
            return Err(Error::InvalidInput(format!(
                "policy covers {} states, expected {}",
                pi.len(),
                mdp.num_states()
            )));
        }
        for (i, row) in pi.iter().enumerate() {
            if row.len() != mdp.action_count(i) {
                return Err(Error::InvalidInput(format!(
                    "policy row for state {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    mdp.action_count(i)
                )));
            }
            if row.iter().any(|p| p.is_negative()) {
                return Err(Error::InvalidInput(format!(
                    "negative action probability in state {}",
                    i + 1
                )));
            }
            let sum = row.iter().fold(T::zero(), |acc, p| acc + p.clone());
            if !sum.is_one() {
                return Err(Error::InvalidInput(format!(
                    "policy row for state {} sums to {}, expected 1",
                    i + 1,
                    sum
                )));
            }
        }
        Ok(StationaryPolicy { pi })
    }

    /// The 0/1 policy picking `choices[i]` in state `i`.
    pub fn deterministic(mdp: &Mdp<T>, choices: &[usize]) -> Result<Self> {
        if choices.len() != mdp.num_states() {
            return Err(Error::InvalidInput(format!(
                "policy picks actions for {} states, expected {}",
                choices.len(),
                mdp.num_states()
            )));
        }
        let mut pi = Vec::with_capacity(choices.len());
        for (i, &a) in choices.iter().enumerate() {
            if a >= mdp.action_count(i) {
                return Err(Error::InvalidInput(format!(
                    "state {} has no action {}",
                    i + 1,
                    a + 1
                )));
            }
            let mut row = vec![T::zero(); mdp.action_count(i)];
            row[a] = T::one();
            pi.push(row);
        }
        Ok(StationaryPolicy { pi })
    }

    pub fn probabilities(&self) -> &[Vec<T>] {
        &self.pi
    }
}

/// Exact evaluation of a stationary policy: transition matrix, reward,
/// Cesaro-limit matrix, gain and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEvaluation<T> {
    pub p: Matrix<T>,
    pub r: Vec<T>,
    pub pstar: Matrix<T>,
    pub g: Vec<T>,
    pub h: Vec<T>,
}

impl<T: Scalar> PolicyEvaluation<T> {
    /// Normalized discounted value `(1-alpha) (I - alpha P)^{-1} r`.
    pub fn discounted(&self, alpha: &T) -> Result<Vec<T>> {
        check_discount(alpha)?;
        let n = self.p.rows();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let d = if i == j { T::one() } else { T::zero() };
                m[(i, j)] = d - alpha.clone() * self.p[(i, j)].clone();
            }
        }
        match solve_linear(&m, &self.r)? {
            LinearSolution::Unique(x) => {
                let factor = T::one() - alpha.clone();
                Ok(x.into_iter().map(|v| factor.clone() * v).collect())
            }
            LinearSolution::Singular => unreachable!("I - alpha*P is nonsingular for alpha < 1"),
        }
    }
}

fn check_discount<T: Scalar>(alpha: &T) -> Result<()> {
    if !alpha.is_positive() || *alpha >= T::one() {
        return Err(Error::InvalidInput(
            "discount factor must lie strictly between 0 and 1".into(),
        ));
    }
    Ok(())
}

fn transition_and_reward<T: Scalar>(
    mdp: &Mdp<T>,
    pi: &StationaryPolicy<T>,
) -> (Matrix<T>, Vec<T>) {
    let n = mdp.num_states();
    let mut p = Matrix::zeros(n, n);
    let mut r = vec![T::zero(); n];
    for i in 0..n {
        for a in 0..mdp.action_count(i) {
            let w = pi.pi[i][a].clone();
            if w.is_zero() {
                continue;
            }
            r[i] = r[i].clone() + w.clone() * mdp.reward(i, a).clone();
            for j in 0..n {
                let delta = w.clone() * mdp.transition(i, a, j).clone();
                p[(i, j)] = p[(i, j)].clone() + delta;
            }
        }
    }
    (p, r)
}

/// Cesaro-limit matrix of a row-stochastic matrix, by exact chain
/// structure analysis: recurrent classes are the terminal strongly
/// connected components of the positive-probability graph; each class gets
/// its stationary distribution from one linear solve, and transient states
/// get exact absorption probabilities into each class.
fn cesaro_limit<T: Scalar>(p: &Matrix<T>) -> Matrix<T> {
    let n = p.rows();
    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)].is_positive() {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .map(|scc| {
            let mut states: Vec<usize> = scc.into_iter().map(|ix| ix.index()).collect();
            states.sort_unstable();
            states
        })
        .filter(|states| {
            states.iter().all(|&i| {
                (0..n).all(|j| !p[(i, j)].is_positive() || states.binary_search(&j).is_ok())
            })
        })
        .collect();
    classes.sort_by_key(|states| states[0]);

    let mut in_class = vec![usize::MAX; n];
    for (k, states) in classes.iter().enumerate() {
        for &i in states {
            in_class[i] = k;
        }
    }
    let transient: Vec<usize> = (0..n).filter(|&i| in_class[i] == usize::MAX).collect();

    // Stationary distribution of each recurrent class: the transposed
    // balance equations with the last one replaced by normalization.
    let mut stationary: Vec<Vec<T>> = Vec::with_capacity(classes.len());
    for states in &classes {
        let k = states.len();
        let mut m = Matrix::zeros(k, k);
        for r in 0..k {
            for c in 0..k {
                if r == k - 1 {
                    m[(r, c)] = T::one();
                } else {
                    let d = if r == c { T::one() } else { T::zero() };
                    m[(r, c)] = d - p[(states[c], states[r])].clone();
                }
            }
        }
        let mut rhs = vec![T::zero(); k];
        rhs[k - 1] = T::one();
        let mu = match solve_linear(&m, &rhs).expect("square system") {
            LinearSolution::Unique(mu) => mu,
            LinearSolution::Singular => {
                unreachable!("irreducible class has a unique stationary distribution")
            }
        };
        debug_assert!(mu.iter().all(|v| !v.is_negative()));
        stationary.push(mu);
    }

    // Absorption probabilities of transient states into each class.
    let t = transient.len();
    let mut absorption: Vec<Vec<T>> = vec![vec![T::zero(); classes.len()]; t];
    if t > 0 {
        let mut iq = Matrix::zeros(t, t);
        for (ri, &i) in transient.iter().enumerate() {
            for (rj, &j) in transient.iter().enumerate() {
                let d = if ri == rj { T::one() } else { T::zero() };
                iq[(ri, rj)] = d - p[(i, j)].clone();
            }
        }
        for (k, states) in classes.iter().enumerate() {
            let rhs: Vec<T> = transient
                .iter()
                .map(|&i| {
                    states
                        .iter()
                        .fold(T::zero(), |acc, &j| acc + p[(i, j)].clone())
                })
                .collect();
            let a = match solve_linear(&iq, &rhs).expect("square system") {
                LinearSolution::Unique(a) => a,
                LinearSolution::Singular => {
                    unreachable!("I - Q is nonsingular on transient states")
                }
            };
            for (ri, v) in a.into_iter().enumerate() {
                absorption[ri][k] = v;
            }
        }
    }

    let mut pstar = Matrix::zeros(n, n);
    for (k, states) in classes.iter().enumerate() {
        for &i in states {
            for (c, &j) in states.iter().enumerate() {
                pstar[(i, j)] = stationary[k][c].clone();
            }
        }
    }
    for (ri, &i) in transient.iter().enumerate() {
        for (k, states) in classes.iter().enumerate() {
            if absorption[ri][k].is_zero() {
                continue;
            }
            for (c, &j) in states.iter().enumerate() {
                pstar[(i, j)] = absorption[ri][k].clone() * stationary[k][c].clone();
            }
        }
    }
    pstar
}

/// Assembles `P(pi)`, `r(pi)`, the Cesaro limit `P*`, the gain `g = P* r`
/// and the bias `h = (I - P + P*)^{-1} (I - P*) r`, all exactly.
pub fn evaluate_policy<T: Scalar>(mdp: &Mdp<T>, pi: &StationaryPolicy<T>) -> PolicyEvaluation<T> {
    let (p, r) = transition_and_reward(mdp, pi);
    let n = p.rows();
    let pstar = cesaro_limit(&p);
    let g = pstar.mat_vec(&r).expect("square dims");
    let mut fundamental = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = if i == j { T::one() } else { T::zero() };
            fundamental[(i, j)] = d - p[(i, j)].clone() + pstar[(i, j)].clone();
        }
    }
    // (I - P*) r = r - g.
    let rhs: Vec<T> = r
        .iter()
        .zip(&g)
        .map(|(ri, gi)| ri.clone() - gi.clone())
        .collect();
    let h = match solve_linear(&fundamental, &rhs).expect("square system") {
        LinearSolution::Unique(h) => h,
        LinearSolution::Singular => unreachable!("I - P + P* is nonsingular"),
    };
    PolicyEvaluation { p, r, pstar, g, h }
}

/// Normalized discounted value `(1-alpha) (I - alpha P(pi))^{-1} r(pi)`.
pub fn discounted_value<T: Scalar>(
    mdp: &Mdp<T>,
    pi: &StationaryPolicy<T>,
    alpha: &T,
) -> Result<Vec<T>> {
    check_discount(alpha)?;
    let (p, r) = transition_and_reward(mdp, pi);
    let eval = PolicyEvaluation {
        p,
        r,
        pstar: Matrix::zeros(0, 0),
        g: Vec::new(),
        h: Vec::new(),
    };
    eval.discounted(alpha)
}

/// Second-and-higher-order remainder of the Blackwell expansion:
/// `v_alpha - g - (1-alpha) h`, exactly.
pub fn blackwell_gap<T: Scalar>(
    mdp: &Mdp<T>,
    pi: &StationaryPolicy<T>,
    alpha: &T,
) -> Result<Vec<T>> {
    check_discount(alpha)?;
    let eval = evaluate_policy(mdp, pi);
    let v = eval.discounted(alpha)?;
    let one_minus = T::one() - alpha.clone();
    Ok((0..v.len())
        .map(|i| {
            v[i].clone() - eval.g[i].clone() - one_minus.clone() * eval.h[i].clone()
        })
        .collect())
}

/// Adds `max(0, -min reward) + 1` to every immediate reward, making all
/// rewards strictly positive. Gains and normalized discounted values of
/// every policy shift by exactly the returned amount, so callers subtract
/// it from reported values.
pub fn shift_rewards<T: Scalar>(mdp: &Mdp<T>) -> (Mdp<T>, T) {
    let min = mdp
        .rewards
        .iter()
        .flatten()
        .cloned()
        .fold(None::<T>, |acc, r| match acc {
            None => Some(r),
            Some(m) => Some(if r < m { r } else { m }),
        })
        .expect("at least one state-action pair");
    let shift = if min.is_negative() {
        -min + T::one()
    } else {
        T::one()
    };
    let rewards = mdp
        .rewards
        .iter()
        .map(|row| row.iter().map(|r| r.clone() + shift.clone()).collect())
        .collect();
    let shifted = Mdp {
        rewards,
        transitions: mdp.transitions.clone(),
        gamma: mdp.gamma.clone(),
    };
    (shifted, shift)
}

/// Discounted-optimality LP in slack form, as a maximization of the
/// negated objective: one row per state-action pair,
/// `sum_j [d_ij - alpha p_iaj] v~_j - sigma_ia = r_ia`, variables
/// `(v~, sigma) >= 0`, objective `max -sum_j gamma_j v~_j`.
///
/// Rewards should be pre-shifted so that restricting to `v~ >= 0` loses
/// nothing.
pub fn build_discounted_lp<T: Scalar>(mdp: &Mdp<T>, alpha: &T) -> Result<LpStandardForm<T>> {
    check_discount(alpha)?;
    let n = mdp.num_states();
    let m = mdp.num_state_actions();
    let mut a = Matrix::zeros(m, n + m);
    let mut b = vec![T::zero(); m];
    for (row, (i, act)) in mdp.state_action_pairs().into_iter().enumerate() {
        for j in 0..n {
            let d = if i == j { T::one() } else { T::zero() };
            a[(row, j)] = d - alpha.clone() * mdp.transition(i, act, j).clone();
        }
        a[(row, n + row)] = -T::one();
        b[row] = mdp.reward(i, act).clone();
    }
    let mut c = mdp.gamma.iter().map(|g| -g.clone()).collect::<Vec<_>>();
    c.extend(std::iter::repeat(T::zero()).take(m));
    LpStandardForm::new(a, b, c)
}

/// Multichain average-reward LP in slack form, as a maximization of the
/// negated objective. Variables `(v~, u~, sigma0, sigma1) >= 0`; rows are
/// `sum_j [d_ij - p_iaj] v~_j - sigma0_ia = 0` for every pair, then
/// `v~_i + sum_j [d_ij - p_iaj] u~_j - sigma1_ia = r_ia`.
pub fn build_average_lp<T: Scalar>(mdp: &Mdp<T>) -> LpStandardForm<T> {
    let n = mdp.num_states();
    let m = mdp.num_state_actions();
    let mut a = Matrix::zeros(2 * m, 2 * n + 2 * m);
    let mut b = vec![T::zero(); 2 * m];
    for (row, (i, act)) in mdp.state_action_pairs().into_iter().enumerate() {
        for j in 0..n {
            let d = if i == j { T::one() } else { T::zero() };
            let coeff = d - mdp.transition(i, act, j).clone();
            a[(row, j)] = coeff.clone();
            a[(m + row, n + j)] = coeff;
        }
        a[(row, 2 * n + row)] = -T::one();
        a[(m + row, i)] = a[(m + row, i)].clone() + T::one();
        a[(m + row, 2 * n + m + row)] = -T::one();
        b[m + row] = mdp.reward(i, act).clone();
    }
    let mut c = mdp.gamma.iter().map(|g| -g.clone()).collect::<Vec<_>>();
    c.extend(std::iter::repeat(T::zero()).take(n + 2 * m));
    LpStandardForm::new(a, b, c).expect("consistent dims")
}

/// The discounted slack-form LP as a perturbed family in the interest rate
/// `eps = (1-alpha)/alpha`: `A0 = [D | -I]`, `A1 = [I | 0]`, `b0 = 0`,
/// `b1 = r`, objective pieces `c0 = [-gamma | 0]`, `c1 = 0`; columns are
/// the `v` block then the `sigma` block. The change of variables
/// `v = eps/(1+eps) * v~` is the bridge back to the discounted LP: the
/// instantiated value at `eps` equals `(1-alpha)` times the discounted-LP
/// value.
pub fn build_perturbed_from_discounted<T: Scalar>(mdp: &Mdp<T>) -> PerturbedLp<T> {
    let n = mdp.num_states();
    let m = mdp.num_state_actions();
    let mut a0 = Matrix::zeros(m, n + m);
    let mut a1 = Matrix::zeros(m, n + m);
    let mut b1 = vec![T::zero(); m];
    for (row, (i, act)) in mdp.state_action_pairs().into_iter().enumerate() {
        for j in 0..n {
            let d = if i == j { T::one() } else { T::zero() };
            a0[(row, j)] = d.clone() - mdp.transition(i, act, j).clone();
            a1[(row, j)] = d;
        }
        a0[(row, n + row)] = -T::one();
        b1[row] = mdp.reward(i, act).clone();
    }
    let mut c0 = mdp.gamma.iter().map(|g| -g.clone()).collect::<Vec<_>>();
    c0.extend(std::iter::repeat(T::zero()).take(m));
    PerturbedLp::new(a0, a1, vec![T::zero(); m], b1, c0, vec![T::zero(); n + m])
        .expect("consistent dims")
}

/// Simplified limiting LP of [`build_perturbed_from_discounted`]; its
/// constraint system coincides with [`build_average_lp`] up to
/// [`derived_to_average_permutation`].
pub fn derive_limiting_lp<T: Scalar>(mdp: &Mdp<T>) -> Result<LimitingLp<T>> {
    build_limiting(
        &build_perturbed_from_discounted(mdp),
        LimitingVariant::Simplified,
    )
}

/// Column permutation identifying the derived limiting LP with the average
/// LP: derived columns are `(v0, sigma0, v1, sigma1)`, average columns are
/// `(v~, u~, sigma0, sigma1)`; entry `k` is the average-LP column holding
/// derived column `k`.
pub fn derived_to_average_permutation(num_states: usize, num_pairs: usize) -> Vec<usize> {
    let n = num_states;
    let m = num_pairs;
    let mut perm = Vec::with_capacity(2 * (n + m));
    perm.extend(0..n); // v0 -> v~
    perm.extend((0..m).map(|k| 2 * n + k)); // sigma0 -> sigma0
    perm.extend((0..n).map(|j| n + j)); // v1 -> u~
    perm.extend((0..m).map(|k| 2 * n + m + k)); // sigma1 -> sigma1
    perm
}

/// Exact structural identity check: the derived limiting LP equals the
/// average LP after the documented column permutation — matrix, rhs,
/// objective and sign constraints alike.
pub fn derived_matches_average<T: Scalar>(mdp: &Mdp<T>) -> Result<bool> {
    let derived = derive_limiting_lp(mdp)?.inner;
    let average = build_average_lp(mdp);
    let perm = derived_to_average_permutation(mdp.num_states(), mdp.num_state_actions());
    if derived.num_vars() != average.num_vars()
        || derived.num_constraints() != average.num_constraints()
    {
        return Ok(false);
    }
    if derived.b != average.b {
        return Ok(false);
    }
    if !derived.free_vars.is_empty() || !average.free_vars.is_empty() {
        return Ok(false);
    }
    for (k, &target) in perm.iter().enumerate() {
        if derived.c[k] != average.c[target] {
            return Ok(false);
        }
        for i in 0..derived.num_constraints() {
            if derived.a[(i, k)] != average.a[(i, target)] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// All deterministic policies as action choices, in lexicographic order.
pub fn deterministic_policies<T: Scalar>(mdp: &Mdp<T>) -> Vec<Vec<usize>> {
    mdp.action_counts()
        .into_iter()
        .map(|m| 0..m)
        .multi_cartesian_product()
        .collect()
}

/// Exhaustive maximum of `<gamma, g(pi)>` over deterministic policies.
/// Fails if the policy count exceeds `cap`. Ties keep the
/// lexicographically first policy.
pub fn best_deterministic_gain<T: Scalar>(
    mdp: &Mdp<T>,
    cap: u128,
) -> Result<(Vec<usize>, T)> {
    let count = mdp.deterministic_policy_count();
    if count > cap {
        return Err(Error::CapExceeded { needed: count, cap });
    }
    let mut best: Option<(Vec<usize>, T)> = None;
    for choices in deterministic_policies(mdp) {
        let pi = StationaryPolicy::deterministic(mdp, &choices)?;
        let eval = evaluate_policy(mdp, &pi);
        let score = dot(mdp.gamma(), &eval.g);
        best = match best {
            None => Some((choices, score)),
            Some((bc, bs)) => {
                if score > bs {
                    Some((choices, score))
                } else {
                    Some((bc, bs))
                }
            }
        };
    }
    Ok(best.expect("at least one policy"))
}

/// Geometric eps-schedule for [`verify_reduction`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepParams<T> {
    pub eps0: T,
    pub ratio: T,
    pub steps: usize,
}

impl<T: Scalar> SweepParams<T> {
    /// `eps0 = 1/2`, `ratio = 1/2`, 12 steps: reaches `eps = 2^-12` while
    /// keeping rational bit-lengths manageable.
    pub fn default_schedule() -> Self {
        SweepParams {
            eps0: T::ratio(1, 2),
            ratio: T::ratio(1, 2),
            steps: 12,
        }
    }
}

/// Everything [`verify_reduction`] measures. All LP values are reported in
/// minimization units of the shifted MDP; `original_units_value` subtracts
/// `shift * sum(gamma)` to return to the input's reward scale. Failed
/// checks are recorded, never thrown.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport<T> {
    pub shift: T,
    pub assumptions: AssumptionReport<T>,
    pub es1_holds: bool,
    pub es1_margin: Option<T>,
    pub sweep: SweepReport<T>,
    pub limiting_value: Option<T>,
    pub average_value: Option<T>,
    pub brute_force_value: Option<T>,
    pub original_units_value: Option<T>,
    pub checks: Vec<(String, bool)>,
}

/// Runs the full reduction pipeline on one MDP: shift rewards, build the
/// perturbed family, check (H1)/(H2)/(H0* probe) and ES-1, sweep the
/// family against its limiting LP, and cross-check the limiting value
/// against the directly built average LP and (when affordable) exhaustive
/// deterministic-policy enumeration.
pub fn verify_reduction<T: Scalar>(
    mdp: &Mdp<T>,
    params: &SweepParams<T>,
    policy_cap: u128,
) -> Result<ReductionReport<T>> {
    let (shifted, shift) = shift_rewards(mdp);
    let perturbed = build_perturbed_from_discounted(&shifted);

    let assumptions = check_assumptions(&perturbed, &params.eps0)?;
    let es1 = check_es1(&perturbed)?;
    let sweep_report = sweep(
        &perturbed,
        &params.eps0,
        &params.ratio,
        params.steps,
        DEFAULT_VERTEX_CAP,
    )?;

    let derived = derive_limiting_lp(&shifted)?;
    let limiting_res = solve(&derived.inner);
    let average_res = solve(&build_average_lp(&shifted));
    // Re-negate: the LPs are stored as maximizations of the negated
    // objective.
    let limiting_value = limiting_res.value.map(|v| -v);
    let average_value = average_res.value.map(|v| -v);
    let brute_force_value = match best_deterministic_gain(&shifted, policy_cap) {
        Ok((_, v)) => Some(v),
        Err(Error::CapExceeded { .. }) => None,
        Err(e) => return Err(e),
    };

    let matrices_match = derived_matches_average(&shifted)?;
    let values_agree = limiting_res.status == Status::Optimal
        && average_res.status == Status::Optimal
        && limiting_value == average_value
        && brute_force_value
            .as_ref()
            .map_or(true, |bf| Some(bf) == limiting_value.as_ref());

    let gaps: Vec<Option<T>> = sweep_report.points.iter().map(|p| p.gap.clone()).collect();
    let all_points_solved = sweep_report
        .points
        .iter()
        .all(|p| p.status == Status::Optimal);
    let tail = gaps.len() / 2;
    let gaps_shrinking = all_points_solved
        && gaps.iter().all(Option::is_some)
        && gaps
            .windows(2)
            .skip(tail.saturating_sub(1))
            .all(|w| w[0].as_ref().unwrap() >= w[1].as_ref().unwrap())
        && gaps.last().unwrap() <= gaps.first().unwrap();

    let original_units_value = limiting_value
        .as_ref()
        .map(|v| v.clone() - shift.clone() * shifted.gamma_sum());

    let checks = vec![
        ("h1".to_string(), assumptions.h1),
        ("h2".to_string(), assumptions.h2),
        ("h0star_probe".to_string(), assumptions.h0star_probe),
        ("es1_holds".to_string(), es1.holds),
        ("matrices_match".to_string(), matrices_match),
        ("values_agree".to_string(), values_agree),
        ("gaps_shrinking".to_string(), gaps_shrinking),
    ];

    Ok(ReductionReport {
        shift,
        assumptions,
        es1_holds: es1.holds,
        es1_margin: es1.margin,
        sweep: sweep_report,
        limiting_value,
        average_value,
        brute_force_value,
        original_units_value,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbed::{check_equivalence, EquivalenceReason};
    use crate::{rat, Rat};

    fn r(n: i64) -> Rat {
        rat(n, 1)
    }

    /// Two-state deterministic cycle with rewards (0, 2).
    fn two_cycle() -> Mdp<Rat> {
        Mdp::new(
            vec![vec![r(0)], vec![r(2)]],
            vec![
                vec![vec![r(0), r(1)]],
                vec![vec![r(1), r(0)]],
            ],
            None,
        )
        .unwrap()
    }

    /// Two absorbing states with rewards (3, 5).
    fn two_absorbing() -> Mdp<Rat> {
        Mdp::new(
            vec![vec![r(3)], vec![r(5)]],
            vec![
                vec![vec![r(1), r(0)]],
                vec![vec![r(0), r(1)]],
            ],
            None,
        )
        .unwrap()
    }

    /// One state, two actions, rewards (1, 2), self-loops.
    fn one_state_two_actions() -> Mdp<Rat> {
        Mdp::new(
            vec![vec![r(1), r(2)]],
            vec![vec![vec![r(1)], vec![r(1)]]],
            None,
        )
        .unwrap()
    }

    fn single_policy<TM: Clone>(mdp: &Mdp<Rat>) -> StationaryPolicy<Rat> {
        let _ = std::marker::PhantomData::<TM>;
        StationaryPolicy::deterministic(mdp, &vec![0; mdp.num_states()]).unwrap()
    }

    #[test]
    fn stochasticity_is_validated() {
        let bad = Mdp::new(
            vec![vec![r(0)]],
            vec![vec![vec![rat(9, 10)]]],
            None,
        );
        assert!(matches!(bad, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn cycle_gain_is_time_average() {
        let mdp = two_cycle();
        let pi = single_policy::<()>(&mdp);
        let eval = evaluate_policy(&mdp, &pi);
        assert_eq!(eval.g, vec![r(1), r(1)]);
        // P* rows are the uniform cycle distribution.
        assert_eq!(eval.pstar[(0, 0)], rat(1, 2));
        assert_eq!(eval.pstar[(1, 1)], rat(1, 2));
    }

    #[test]
    fn absorbing_gain_and_bias() {
        let mdp = two_absorbing();
        let pi = single_policy::<()>(&mdp);
        let eval = evaluate_policy(&mdp, &pi);
        assert_eq!(eval.g, vec![r(3), r(5)]);
        assert_eq!(eval.h, vec![r(0), r(0)]);
        assert_eq!(eval.pstar, Matrix::identity(2));
    }

    #[test]
    fn pstar_identities() {
        // A chain with one transient state feeding two recurrent classes.
        let mdp = Mdp::new(
            vec![vec![r(0)], vec![r(1)], vec![r(4)]],
            vec![
                vec![vec![rat(0, 1), rat(1, 2), rat(1, 2)]],
                vec![vec![r(0), r(1), r(0)]],
                vec![vec![r(0), r(0), r(1)]],
            ],
            None,
        )
        .unwrap();
        let pi = single_policy::<()>(&mdp);
        let eval = evaluate_policy(&mdp, &pi);
        let pp = eval.p.mat_mul(&eval.pstar).unwrap();
        let ps_p = eval.pstar.mat_mul(&eval.p).unwrap();
        let ps_ps = eval.pstar.mat_mul(&eval.pstar).unwrap();
        assert_eq!(pp, eval.pstar);
        assert_eq!(ps_p, eval.pstar);
        assert_eq!(ps_ps, eval.pstar);
        // Gain of the transient state mixes the two absorbing gains.
        assert_eq!(eval.g[0], rat(5, 2));
    }

    #[test]
    fn discounted_absorbing_is_reward() {
        let mdp = two_absorbing();
        let pi = single_policy::<()>(&mdp);
        for alpha in [rat(1, 2), rat(2, 3), rat(9, 10)] {
            assert_eq!(
                discounted_value(&mdp, &pi, &alpha).unwrap(),
                vec![r(3), r(5)]
            );
        }
    }

    #[test]
    fn discounted_cycle_matches_truncated_series() {
        let mdp = two_cycle();
        let pi = single_policy::<()>(&mdp);
        let alpha = rat(1, 2);
        let v = discounted_value(&mdp, &pi, &alpha).unwrap();

        // Truncated geometric series oracle: (1-a) sum_{t<T} a^t P^t r,
        // with tail below 2^-30.
        let (p, rvec) = transition_and_reward(&mdp, &pi);
        let mut term = rvec.clone();
        let mut acc = vec![r(0), r(0)];
        let mut weight = rat(1, 2); // (1 - alpha)
        for _ in 0..36 {
            for i in 0..2 {
                acc[i] = acc[i].clone() + weight.clone() * term[i].clone();
            }
            term = p.mat_vec(&term).unwrap();
            weight = weight * alpha.clone();
        }
        let tol = Rat::new(1.into(), num_bigint::BigInt::from(2).pow(30));
        for i in 0..2 {
            assert!((v[i].clone() - acc[i].clone()).abs() <= tol);
        }
    }

    #[test]
    fn gain_matches_near_one_discount_probe() {
        // Fixed 3-state chain with denominators <= 8.
        let mdp = Mdp::new(
            vec![vec![r(2)], vec![r(-1)], vec![r(3)]],
            vec![
                vec![vec![rat(1, 2), rat(1, 4), rat(1, 4)]],
                vec![vec![rat(1, 8), rat(3, 4), rat(1, 8)]],
                vec![vec![r(0), rat(1, 2), rat(1, 2)]],
            ],
            None,
        )
        .unwrap();
        let pi = single_policy::<()>(&mdp);
        let eval = evaluate_policy(&mdp, &pi);
        let alpha = Rat::one() - Rat::new(1.into(), num_bigint::BigInt::from(2).pow(20));
        let v = eval.discounted(&alpha).unwrap();
        let tol = Rat::new(1.into(), num_bigint::BigInt::from(2).pow(10));
        for i in 0..3 {
            assert!((v[i].clone() - eval.g[i].clone()).abs() <= tol);
        }
    }

    #[test]
    fn blackwell_gap_absorbing_is_zero() {
        let mdp = two_absorbing();
        let pi = single_policy::<()>(&mdp);
        for k in [2, 5, 9] {
            let alpha = Rat::one() - rat(1, 1 << k);
            assert_eq!(
                blackwell_gap(&mdp, &pi, &alpha).unwrap(),
                vec![r(0), r(0)]
            );
        }
    }

    #[test]
    fn blackwell_gap_halves_on_cycle() {
        let mdp = two_cycle();
        let pi = single_policy::<()>(&mdp);
        let mut norms = Vec::new();
        for k in 8..=16 {
            let alpha = Rat::one() - rat(1, 1i64 << k);
            let gap = blackwell_gap(&mdp, &pi, &alpha).unwrap();
            norms.push(crate::linalg::inf_norm(&gap));
        }
        assert!(norms[0].is_positive());
        for w in norms.windows(2) {
            assert!(w[1].clone() + w[1].clone() <= w[0].clone());
        }
    }

    #[test]
    fn shift_rule() {
        let mdp = Mdp::new(
            vec![vec![r(-3), r(2)]],
            vec![vec![vec![r(1)], vec![r(1)]]],
            None,
        )
        .unwrap();
        let (shifted, shift) = shift_rewards(&mdp);
        assert_eq!(shift, r(4));
        assert_eq!(shifted.reward(0, 0), &r(1));
        assert_eq!(shifted.reward(0, 1), &r(6));

        // Already-positive rewards still get the uniform +1.
        let (shifted, shift) = shift_rewards(&one_state_two_actions());
        assert_eq!(shift, r(1));
        assert_eq!(shifted.reward(0, 0), &r(2));
    }

    #[test]
    fn shift_moves_gain_exactly() {
        let mdp = two_cycle();
        let (shifted, shift) = shift_rewards(&mdp);
        let pi = single_policy::<()>(&mdp);
        let before = evaluate_policy(&mdp, &pi);
        let after = evaluate_policy(&shifted, &pi);
        for i in 0..2 {
            assert_eq!(after.g[i], before.g[i].clone() + shift.clone());
        }
    }

    #[test]
    fn discounted_lp_single_action_geometric() {
        // One state, one action, reward c, alpha = 1/2: v~ = 2c.
        let mdp = Mdp::new(vec![vec![r(7)]], vec![vec![vec![r(1)]]], None).unwrap();
        let lp = build_discounted_lp(&mdp, &rat(1, 2)).unwrap();
        let res = solve(&lp);
        assert_eq!(res.status, Status::Optimal);
        // max -v~ subject to v~/2 - sigma = 7: optimum at v~ = 14.
        assert_eq!(res.value, Some(r(-14)));
        assert_eq!(res.x.unwrap()[0], r(14));
    }

    #[test]
    fn discounted_lp_picks_best_action() {
        let mdp = one_state_two_actions();
        let alpha = rat(1, 2);
        let lp = build_discounted_lp(&mdp, &alpha).unwrap();
        let res = solve(&lp);
        assert_eq!(res.status, Status::Optimal);
        let vtilde = res.x.unwrap()[0].clone();
        // Best action has reward 2: v~ = 2 / (1 - 1/2) = 4, so the
        // normalized policy value is 2.
        assert_eq!(vtilde, r(4));
        let normalized = (Rat::one() - alpha) * vtilde;
        assert_eq!(normalized, r(2));
    }

    #[test]
    fn average_lp_examples() {
        let res = solve(&build_average_lp(&two_absorbing()));
        assert_eq!(res.status, Status::Optimal);
        assert_eq!(res.value, Some(r(-4))); // min units: 4 = (3+5)/2

        let res = solve(&build_average_lp(&one_state_two_actions()));
        assert_eq!(res.value, Some(r(-2)));
    }

    #[test]
    fn average_lp_matches_policy_enumeration() {
        // 2 states x 2 actions with mixed chain structures.
        let mdp = Mdp::new(
            vec![vec![r(1), r(0)], vec![r(2), r(5)]],
            vec![
                vec![vec![r(1), r(0)], vec![r(0), r(1)]],
                vec![vec![rat(1, 2), rat(1, 2)], vec![r(1), r(0)]],
            ],
            None,
        )
        .unwrap();
        let lp_value = -solve(&build_average_lp(&mdp)).value.unwrap();
        let (_, brute) = best_deterministic_gain(&mdp, DEFAULT_POLICY_CAP).unwrap();
        assert_eq!(lp_value, brute);
    }

    #[test]
    fn perturbed_family_blocks() {
        let mdp = one_state_two_actions();
        let p = build_perturbed_from_discounted(&mdp);
        assert!(p.b0.iter().all(|v| v.is_zero()));
        assert_eq!(p.b1, vec![r(1), r(2)]);
        // A0 = [D | -I]: rank equals the row count.
        assert_eq!(crate::linalg::rank(&p.a0), 2);
        // b0 = 0 certifies equivalence via the zero-rhs corollary.
        let eq = check_equivalence(&p).unwrap();
        assert!(eq.equivalent_certified);
        assert_eq!(eq.reason, Some(EquivalenceReason::Corollary1));
    }

    #[test]
    fn interest_rate_bridge() {
        // alpha = 2/3 <=> eps = 1/2: the instantiated perturbed LP value
        // equals (1 - alpha) times the discounted-LP value.
        let (mdp, _) = shift_rewards(&one_state_two_actions());
        let alpha = rat(2, 3);
        let eps = rat(1, 2);
        let p = build_perturbed_from_discounted(&mdp);
        let eps_lp = crate::perturbed::instantiate(&p, &eps);
        let v_eps = solve(&eps_lp).value.unwrap();
        let v_disc = solve(&build_discounted_lp(&mdp, &alpha).unwrap())
            .value
            .unwrap();
        assert_eq!(v_eps, (Rat::one() - alpha) * v_disc);
    }

    #[test]
    fn derived_limiting_equals_average() {
        for mdp in [two_absorbing(), one_state_two_actions(), two_cycle()] {
            let (shifted, _) = shift_rewards(&mdp);
            assert!(derived_matches_average(&shifted).unwrap());
            let derived = derive_limiting_lp(&shifted).unwrap();
            let lim = solve(&derived.inner).value.unwrap();
            let avg = solve(&build_average_lp(&shifted)).value.unwrap();
            assert_eq!(lim, avg);
        }
    }

    #[test]
    fn derived_limiting_absorbing_value() {
        // Shift by 1, so the min value is 4 + 1 in shifted units.
        let (shifted, shift) = shift_rewards(&two_absorbing());
        assert_eq!(shift, r(1));
        let derived = derive_limiting_lp(&shifted).unwrap();
        let value = -solve(&derived.inner).value.unwrap();
        assert_eq!(value, r(5));
    }

    #[test]
    fn v_columns_always_in_j0() {
        let (mdp, _) = shift_rewards(&two_cycle());
        let p = build_perturbed_from_discounted(&mdp);
        let j0 = crate::perturbed::compute_j0(&p).unwrap();
        for j in 0..mdp.num_states() {
            assert!(j0.indices.contains(&j), "v column {} missing from J0", j);
        }
    }

    #[test]
    fn reduction_report_all_green() {
        let report = verify_reduction(
            &two_cycle(),
            &SweepParams::default_schedule(),
            DEFAULT_POLICY_CAP,
        )
        .unwrap();
        for (name, pass) in &report.checks {
            assert!(pass, "check {} failed: {:?}", name, report.checks);
        }
        assert_eq!(report.limiting_value, report.average_value);
        assert_eq!(report.limiting_value, report.brute_force_value);
        // Gain of the cycle is 1; shifted by 1 the LP sees 2, and the
        // original-units value recovers 1.
        assert_eq!(report.original_units_value, Some(r(1)));
    }
}
