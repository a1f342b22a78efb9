//! Classical solvers inside the reduced space: exhaustive enumeration over
//! `v`, and depth-first backtracking over the standard-form block `v'`.

use num_traits::{Float, FromPrimitive};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::gf2::BinVec;
use crate::instance::{status_from_counts, Assignment, ClauseStatus, Instance};
use crate::reduction::{reduce, Reduction, XorOutcome};

/// Largest reduced dimension the enumeration solvers accept.
pub const ENUMERATION_MAX_K: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("reduced dimension k = {k} exceeds guard {max}")]
    GuardExceeded { k: usize, max: usize },
    #[error("no tree sizes given")]
    EmptySample,
    #[error("variable count must be positive")]
    ZeroVariables,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveStatus {
    Sat(Assignment),
    Unsat,
}

impl SolveStatus {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveStatus::Sat(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Full-assignment checks performed.
    pub queries: u64,
}

/// Node counts of an explored decision tree.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct TreeStats {
    pub total_nodes: u64,
    pub nodes_per_depth: Vec<u64>,
}

impl TreeStats {
    /// The tree of an instance that never reaches the search stage.
    pub fn empty() -> Self {
        Self::default()
    }
}

fn guard(k: usize) -> Result<(), SolverError> {
    if k > ENUMERATION_MAX_K {
        Err(SolverError::GuardExceeded {
            k,
            max: ENUMERATION_MAX_K,
        })
    } else {
        Ok(())
    }
}

/// Checks the `2^k` candidates `x(v)` in increasing `v` order and returns the
/// first solution.
pub fn solve_enumerate(instance: &Instance) -> Result<SolveOutcome, SolverError> {
    let XorOutcome::Feasible(r) = reduce(instance) else {
        return Ok(SolveOutcome {
            status: SolveStatus::Unsat,
            queries: 0,
        });
    };
    guard(r.k())?;
    let mut queries = 0;
    for index in 0..1u64 << r.k() {
        let x = r.expand_index(index);
        queries += 1;
        if instance.satisfied_by(x.values()) {
            return Ok(SolveOutcome {
                status: SolveStatus::Sat(x),
                queries,
            });
        }
    }
    Ok(SolveOutcome {
        status: SolveStatus::Unsat,
        queries,
    })
}

/// Number of solutions, counted over all `2^k` candidates.
pub fn count_enumerate(instance: &Instance) -> Result<u64, SolverError> {
    let XorOutcome::Feasible(r) = reduce(instance) else {
        return Ok(0);
    };
    count_in_reduction(instance, &r)
}

/// Walks the reduced space in Gray-code order so consecutive candidates
/// differ by one kernel vector.
pub fn count_in_reduction(instance: &Instance, r: &Reduction) -> Result<u64, SolverError> {
    guard(r.k())?;
    let mut x = r.xi_bar().clone();
    let mut count = u64::from(instance.satisfied_by(&x));
    for step in 1..1u64 << r.k() {
        x.xor_assign(&r.kernel()[step.trailing_zeros() as usize]);
        count += u64::from(instance.satisfied_by(&x));
    }
    Ok(count)
}

/// A variable that becomes determinate once a given number of `v'`
/// coordinates are fixed.
#[derive(Debug, Clone, Copy)]
enum Fix {
    Free { var: usize, j: usize },
    Dependent { var: usize, row: usize },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    FirstSolution,
    Exhaust,
}

struct Backtracker<'a> {
    reduction: &'a Reduction,
    k: usize,
    // fixes[d]: variables determined once the first d coordinates are set
    fixes: Vec<Vec<Fix>>,
    occurrences: Vec<Vec<(usize, bool)>>,
    q: Vec<usize>,
    ones: Vec<usize>,
    unknown: Vec<usize>,
    values: Vec<Option<bool>>,
    prefix: Vec<bool>,
    v_prime: BinVec,
    stats: TreeStats,
    solutions: u64,
    leaves: u64,
    found: Option<Assignment>,
}

impl<'a> Backtracker<'a> {
    fn new(instance: &Instance, reduction: &'a Reduction) -> Self {
        let sf = reduction.standard();
        let k = sf.dim();
        let mut fixes = vec![Vec::new(); k + 1];
        for (j, &var) in sf.free_coordinates().iter().enumerate() {
            fixes[j + 1].push(Fix::Free { var, j });
        }
        for (row, &var) in sf.dependent_coordinates().iter().enumerate() {
            let ready = sf.h().row(row).ones().last().map_or(0, |j| j + 1);
            fixes[ready].push(Fix::Dependent { var, row });
        }
        let mut occurrences = vec![Vec::new(); instance.n()];
        for (ci, c) in instance.clauses().iter().enumerate() {
            for l in c.literals() {
                occurrences[l.var].push((ci, l.negated));
            }
        }
        Self {
            reduction,
            k,
            fixes,
            occurrences,
            q: instance.clauses().iter().map(|c| c.q()).collect(),
            ones: vec![0; instance.m()],
            unknown: instance.clauses().iter().map(|c| c.len()).collect(),
            values: vec![None; instance.n()],
            prefix: Vec::with_capacity(k),
            v_prime: BinVec::zeros(k),
            stats: TreeStats {
                total_nodes: 0,
                nodes_per_depth: vec![0; k + 1],
            },
            solutions: 0,
            leaves: 0,
            found: None,
        }
    }

    fn status(&self, clause: usize) -> ClauseStatus {
        status_from_counts(self.ones[clause], self.unknown[clause], self.q[clause])
    }

    fn value_of(&self, fix: Fix) -> (usize, bool) {
        let sf = self.reduction.standard();
        match fix {
            Fix::Free { var, j } => (var, self.v_prime.get(j)),
            Fix::Dependent { var, row } => (
                var,
                sf.h().row(row).dot(&self.v_prime) ^ sf.dependent_offset(row),
            ),
        }
    }

    /// Fixes the variables that become determinate at `depth`; returns
    /// whether every touched clause is still satisfiable.
    fn apply(&mut self, depth: usize) -> bool {
        let mut consistent = true;
        for idx in 0..self.fixes[depth].len() {
            let (var, value) = self.value_of(self.fixes[depth][idx]);
            self.values[var] = Some(value);
            for &(ci, negated) in &self.occurrences[var] {
                self.unknown[ci] -= 1;
                self.ones[ci] += usize::from(value ^ negated);
            }
            for &(ci, _) in &self.occurrences[var] {
                if status_from_counts(self.ones[ci], self.unknown[ci], self.q[ci])
                    == ClauseStatus::Violated
                {
                    consistent = false;
                }
            }
        }
        if depth == 0 {
            consistent &= (0..self.q.len()).all(|ci| self.status(ci) != ClauseStatus::Violated);
        }
        consistent
    }

    fn undo(&mut self, depth: usize) {
        for idx in 0..self.fixes[depth].len() {
            let var = match self.fixes[depth][idx] {
                Fix::Free { var, .. } | Fix::Dependent { var, .. } => var,
            };
            let value = self.values[var].take().expect("variable was fixed");
            for &(ci, negated) in &self.occurrences[var] {
                self.unknown[ci] += 1;
                self.ones[ci] -= usize::from(value ^ negated);
            }
        }
    }

    /// Returns true when the search should stop.
    fn visit(&mut self, depth: usize, mode: Mode, on_prune: &mut dyn FnMut(&[bool])) -> bool {
        self.stats.total_nodes += 1;
        self.stats.nodes_per_depth[depth] += 1;
        let consistent = self.apply(depth);
        let mut stop = false;
        if !consistent {
            on_prune(&self.prefix);
        } else if depth == self.k {
            self.leaves += 1;
            self.solutions += 1;
            if mode == Mode::FirstSolution {
                let x = BinVec::from_bools(
                    &self
                        .values
                        .iter()
                        .map(|v| v.expect("leaf assignment is complete"))
                        .collect::<Vec<_>>(),
                );
                self.found = Some(Assignment::new(x));
                stop = true;
            }
        } else {
            for bit in [false, true] {
                self.v_prime.set(depth, bit);
                self.prefix.push(bit);
                stop = self.visit(depth + 1, mode, on_prune);
                self.prefix.pop();
                if stop {
                    break;
                }
            }
            self.v_prime.set(depth, false);
        }
        self.undo(depth);
        stop
    }
}

/// Depth-first search over `v'` in index order, value 0 before 1, stopping
/// at the first solution. A branch is cut as soon as some clause cannot be
/// satisfied by any completion of the determinate variables.
pub fn backtrack_solve(instance: &Instance, reduction: &Reduction) -> (SolveOutcome, TreeStats) {
    let mut bt = Backtracker::new(instance, reduction);
    bt.visit(0, Mode::FirstSolution, &mut |_| {});
    let status = match bt.found {
        Some(x) => SolveStatus::Sat(x),
        None => SolveStatus::Unsat,
    };
    (
        SolveOutcome {
            status,
            queries: bt.leaves,
        },
        bt.stats,
    )
}

/// Exhausts the decision tree and counts solutions.
pub fn backtrack_count(instance: &Instance, reduction: &Reduction) -> (u64, TreeStats) {
    backtrack_count_observed(instance, reduction, |_| {})
}

/// [`backtrack_count`] reporting the `v'` prefix of every pruned node.
pub fn backtrack_count_observed(
    instance: &Instance,
    reduction: &Reduction,
    mut on_prune: impl FnMut(&[bool]),
) -> (u64, TreeStats) {
    let mut bt = Backtracker::new(instance, reduction);
    bt.visit(0, Mode::Exhaust, &mut on_prune);
    (bt.solutions, bt.stats)
}

/// Reduces first; an infeasible parity system gives `Unsat` with an empty tree.
pub fn backtrack_solve_instance(instance: &Instance) -> (SolveOutcome, TreeStats) {
    match reduce(instance) {
        XorOutcome::Feasible(r) => backtrack_solve(instance, &r),
        XorOutcome::Infeasible(_) => (
            SolveOutcome {
                status: SolveStatus::Unsat,
                queries: 0,
            },
            TreeStats::empty(),
        ),
    }
}

pub fn backtrack_count_instance(instance: &Instance) -> (u64, TreeStats) {
    match reduce(instance) {
        XorOutcome::Feasible(r) => backtrack_count(instance, &r),
        XorOutcome::Infeasible(_) => (0, TreeStats::empty()),
    }
}

/// Number of clauses with at least one variable in the free block.
pub fn free_block_score(instance: &Instance, reduction: &Reduction) -> usize {
    score_of(instance, reduction.standard().free_coordinates())
}

fn score_of(instance: &Instance, free: &[usize]) -> usize {
    let mut is_free = vec![false; instance.n()];
    for &c in free {
        is_free[c] = true;
    }
    instance
        .clauses()
        .iter()
        .filter(|c| c.vars().any(|v| is_free[v]))
        .count()
}

/// Pivot columns of the kernel rows when columns are scanned in `order`.
fn pivots_in_order(kernel: &[BinVec], order: &[usize]) -> Vec<usize> {
    let mut rows = kernel.to_vec();
    let mut pivots = Vec::with_capacity(rows.len());
    for &c in order {
        let r = pivots.len();
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| rows[i].get(c)) else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row.get(c) {
                row.xor_assign(&pivot);
            }
        }
        pivots.push(c);
    }
    pivots
}

/// Random-restart hill climbing over the choice of free coordinates,
/// maximising [`free_block_score`].
///
/// Each trial starts from the pivots of a random column order and repeatedly
/// swaps a free coordinate with a dependent one whose `H` row covers it,
/// accepting strict improvements. The best form seen, including the input,
/// is returned.
pub fn optimize_permutation(
    instance: &Instance,
    reduction: &Reduction,
    trials: usize,
    seed: u64,
) -> Reduction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = reduction.clone();
    let mut best_score = free_block_score(instance, &best);
    let k = reduction.k();
    if k == 0 || k == reduction.n() {
        return best;
    }
    let mut order: Vec<usize> = (0..reduction.n()).collect();
    for _ in 0..trials {
        order.shuffle(&mut rng);
        let free = pivots_in_order(reduction.kernel(), &order);
        let mut current = reduction
            .with_free_coordinates(&free)
            .expect("pivot columns form an invertible block");
        let mut score = free_block_score(instance, &current);
        loop {
            let sf = current.standard();
            let mut swaps: Vec<(usize, usize)> = (0..sf.h().nrows())
                .flat_map(|i| sf.h().row(i).ones().map(move |j| (i, j)))
                .collect();
            swaps.shuffle(&mut rng);
            let mut improved = None;
            for (i, j) in swaps {
                let mut candidate = sf.free_coordinates().to_vec();
                candidate[j] = sf.dependent_coordinates()[i];
                let s = score_of(instance, &candidate);
                if s > score {
                    improved = Some((candidate, s));
                    break;
                }
            }
            let Some((candidate, s)) = improved else {
                break;
            };
            current = current
                .with_free_coordinates(&candidate)
                .expect("swap along a nonzero H entry keeps the block invertible");
            score = s;
        }
        if score > best_score {
            best = current;
            best_score = score;
        }
    }
    best
}

/// `γ(n) = (1/n) log₂ ⟨√T⟩` over a sample of tree sizes.
pub fn gamma_estimate<F: Float + FromPrimitive>(
    tree_sizes: &[u64],
    n: usize,
) -> Result<F, SolverError> {
    if tree_sizes.is_empty() {
        return Err(SolverError::EmptySample);
    }
    if n == 0 {
        return Err(SolverError::ZeroVariables);
    }
    let sum = tree_sizes
        .iter()
        .map(|&t| {
            F::from_u64(t)
                .expect("tree size fits the float type")
                .sqrt()
        })
        .fold(F::zero(), |a, b| a + b);
    let mean = sum / F::from_usize(tree_sizes.len()).expect("sample size fits");
    Ok(mean.log2() / F::from_usize(n).expect("n fits"))
}
