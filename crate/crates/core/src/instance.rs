//! Occupation (q-in-p) instances: data model, evaluation and random generation.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::gf2::BinVec;

/// Largest `n` accepted by [`brute_force_solutions`].
pub const BRUTE_FORCE_MAX_VARS: usize = 24;

/// Full restarts attempted by [`gen_locked_random`] before giving up.
pub const GENERATION_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("clause has no literals")]
    EmptyClause,
    #[error("variable {var} appears more than once in a clause")]
    RepeatedVariable { var: usize },
    #[error("occupation q = {q} outside 1..={p}")]
    OccupationOutOfRange { q: usize, p: usize },
    #[error("variable index {var} out of range for n = {n}")]
    VariableOutOfRange { var: usize, n: usize },
    #[error("assignment has length {found}, instance has n = {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("brute force refused: n = {n} exceeds guard {max}")]
    BruteForceGuard { n: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerationError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("p*M = {slots} literal slots cannot give {n} variables degree >= 2")]
    InsufficientSlots { slots: usize, n: usize },
    #[error("degree repair failed after {0} restarts")]
    RetriesExhausted(usize),
}

/// A possibly negated occurrence of a variable (0-based index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Self {
            var,
            negated: false,
        }
    }

    pub fn neg(var: usize) -> Self {
        Self { var, negated: true }
    }

    /// Truth value of the literal given its variable's value.
    #[inline]
    pub fn value(self, x: bool) -> bool {
        x ^ self.negated
    }
}

/// Satisfied iff exactly `q` of its literals are true.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    literals: Vec<Literal>,
    q: usize,
}

impl Clause {
    pub fn new(literals: Vec<Literal>, q: usize) -> Result<Self, InstanceError> {
        if literals.is_empty() {
            return Err(InstanceError::EmptyClause);
        }
        if q == 0 || q > literals.len() {
            return Err(InstanceError::OccupationOutOfRange {
                q,
                p: literals.len(),
            });
        }
        Self::degree_constraint(literals, q)
    }

    /// Like [`Clause::new`] but allows `q > p` and an empty literal list.
    /// Such a clause can never be satisfied; the Hamiltonian-cycle reduction
    /// emits them for nodes of degree below two.
    pub fn degree_constraint(literals: Vec<Literal>, q: usize) -> Result<Self, InstanceError> {
        if q == 0 {
            return Err(InstanceError::OccupationOutOfRange {
                q,
                p: literals.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for l in &literals {
            if !seen.insert(l.var) {
                return Err(InstanceError::RepeatedVariable { var: l.var });
            }
        }
        Ok(Self { literals, q })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Arity `p`.
    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// Number of negated literals (ν).
    pub fn negations(&self) -> usize {
        self.literals.iter().filter(|l| l.negated).count()
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.literals.iter().map(|l| l.var)
    }

    pub fn contains_var(&self, var: usize) -> bool {
        self.literals.iter().any(|l| l.var == var)
    }

    /// Unchecked evaluation on a full assignment vector.
    #[inline]
    pub fn satisfied_by(&self, x: &BinVec) -> bool {
        let ones = self
            .literals
            .iter()
            .filter(|l| l.value(x.get(l.var)))
            .count();
        ones == self.q
    }

    pub fn eval(&self, a: &Assignment) -> Result<bool, InstanceError> {
        for l in &self.literals {
            if l.var >= a.len() {
                return Err(InstanceError::VariableOutOfRange {
                    var: l.var,
                    n: a.len(),
                });
            }
        }
        Ok(self.satisfied_by(a.values()))
    }

    pub fn eval_partial(&self, p: &PartialAssignment) -> ClauseStatus {
        let (mut ones, mut unknown) = (0usize, 0usize);
        for l in &self.literals {
            match p.get(l.var) {
                Some(x) => ones += usize::from(l.value(x)),
                None => unknown += 1,
            }
        }
        status_from_counts(ones, unknown, self.q)
    }
}

/// Clause status from the number of determinately true literals and the
/// number of undecided ones.
#[inline]
pub(crate) fn status_from_counts(ones: usize, unknown: usize, q: usize) -> ClauseStatus {
    if ones > q || ones + unknown < q {
        ClauseStatus::Violated
    } else if unknown == 0 {
        ClauseStatus::Satisfied
    } else {
        ClauseStatus::Indeterminate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClauseStatus {
    Satisfied,
    Violated,
    Indeterminate,
}

/// An Occupation instance over `n` variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    n: usize,
    clauses: Vec<Clause>,
}

impl Instance {
    pub fn new(n: usize, clauses: Vec<Clause>) -> Result<Self, InstanceError> {
        for c in &clauses {
            if let Some(var) = c.vars().find(|&v| v >= n) {
                return Err(InstanceError::VariableOutOfRange { var, n });
            }
        }
        Ok(Self { n, clauses })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of clauses `M`.
    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Clause density `M / n`.
    pub fn alpha(&self) -> f64 {
        self.m() as f64 / self.n as f64
    }

    /// Occurrence count of every variable.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for c in &self.clauses {
            for v in c.vars() {
                deg[v] += 1;
            }
        }
        deg
    }

    /// Every variable occurs in at least two clauses.
    pub fn is_locked(&self) -> bool {
        self.degrees().iter().all(|&d| d >= 2)
    }

    /// Unchecked evaluation; panics if `x` is shorter than `n`.
    #[inline]
    pub fn satisfied_by(&self, x: &BinVec) -> bool {
        self.clauses.iter().all(|c| c.satisfied_by(x))
    }

    pub fn eval(&self, a: &Assignment) -> Result<bool, InstanceError> {
        if a.len() != self.n {
            return Err(InstanceError::LengthMismatch {
                expected: self.n,
                found: a.len(),
            });
        }
        Ok(self.satisfied_by(a.values()))
    }
}

/// A complete truth assignment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(BinVec);

impl Assignment {
    pub fn new(values: BinVec) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &BinVec {
        &self.0
    }

    pub fn into_values(self) -> BinVec {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, var: usize) -> bool {
        self.0.get(var)
    }
}

impl From<BinVec> for Assignment {
    fn from(v: BinVec) -> Self {
        Self(v)
    }
}

impl std::fmt::Display for Assignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Per-variable value, `None` meaning indeterminate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialAssignment(Vec<Option<bool>>);

impl PartialAssignment {
    pub fn indeterminate(n: usize) -> Self {
        Self(vec![None; n])
    }

    pub fn from_values(values: Vec<Option<bool>>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Out-of-range variables read as indeterminate.
    pub fn get(&self, var: usize) -> Option<bool> {
        self.0.get(var).copied().flatten()
    }

    pub fn set(&mut self, var: usize, value: Option<bool>) {
        self.0[var] = value;
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    pub fn values(&self) -> &[Option<bool>] {
        &self.0
    }
}

impl From<&Assignment> for PartialAssignment {
    fn from(a: &Assignment) -> Self {
        Self(a.values().iter().map(Some).collect())
    }
}

/// All satisfying assignments in lexicographic order (variable 0 most
/// significant).
///
/// Evaluates clauses on packed integer masks rather than through
/// [`Clause::satisfied_by`], so it stays independent of the solver paths it
/// is used to check.
pub fn brute_force_solutions(instance: &Instance) -> Result<Vec<Assignment>, InstanceError> {
    let n = instance.n();
    if n > BRUTE_FORCE_MAX_VARS {
        return Err(InstanceError::BruteForceGuard {
            n,
            max: BRUTE_FORCE_MAX_VARS,
        });
    }
    let bit = |var: usize| 1u32 << (n - 1 - var);
    let masks: Vec<(u32, u32, u32)> = instance
        .clauses()
        .iter()
        .map(|c| {
            let vars = c.vars().fold(0, |m, v| m | bit(v));
            let neg = c
                .literals()
                .iter()
                .filter(|l| l.negated)
                .fold(0, |m, l| m | bit(l.var));
            (vars, neg, c.q() as u32)
        })
        .collect();
    Ok((0..1u64 << n)
        .map(|u| u as u32)
        .filter(|&x| {
            masks
                .iter()
                .all(|&(vars, neg, q)| ((x ^ neg) & vars).count_ones() == q)
        })
        .map(|x| Assignment(BinVec::from_index(u64::from(x), n)))
        .collect())
}

/// Parameters of a random locked ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockedParams {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub negation_prob: f64,
}

impl LockedParams {
    /// Clause count `⌊α n⌋`.
    pub fn with_alpha(n: usize, alpha: f64, p: usize, q: usize, negation_prob: f64) -> Self {
        Self {
            n,
            m: (alpha * n as f64).floor() as usize,
            p,
            q,
            negation_prob,
        }
    }

    /// Raises `m` to the smallest value for which a locked instance exists.
    pub fn at_least_lockable(mut self) -> Self {
        if self.p > 0 {
            self.m = self.m.max((2 * self.n).div_ceil(self.p));
        }
        self
    }
}

/// Random instance in which every variable occurs in at least two clauses.
///
/// Clauses start as uniform `p`-subsets; variables of degree below two are
/// then swapped into slots held by variables of degree above two. A restart
/// happens when no such slot exists.
pub fn gen_locked_random<R: Rng + ?Sized>(
    params: LockedParams,
    rng: &mut R,
) -> Result<Instance, GenerationError> {
    let LockedParams {
        n,
        m,
        p,
        q,
        negation_prob,
    } = params;
    if p == 0 || p > n {
        return Err(GenerationError::InvalidParameters(format!(
            "clause arity p = {p} must lie in 1..={n}"
        )));
    }
    if q == 0 || q > p {
        return Err(GenerationError::InvalidParameters(format!(
            "occupation q = {q} must lie in 1..={p}"
        )));
    }
    if !(0.0..=1.0).contains(&negation_prob) {
        return Err(GenerationError::InvalidParameters(format!(
            "negation probability {negation_prob} outside [0, 1]"
        )));
    }
    if p * m < 2 * n {
        return Err(GenerationError::InsufficientSlots { slots: p * m, n });
    }
    let vars: Vec<usize> = (0..n).collect();
    for _ in 0..GENERATION_RETRIES {
        let mut clauses: Vec<Vec<usize>> = (0..m)
            .map(|_| vars.choose_multiple(rng, p).copied().collect())
            .collect();
        if repair_degrees(&mut clauses, n, rng) {
            let clauses = clauses
                .into_iter()
                .map(|vs| {
                    let lits = vs
                        .into_iter()
                        .map(|var| Literal {
                            var,
                            negated: rng.gen_bool(negation_prob),
                        })
                        .collect();
                    Clause::new(lits, q).expect("generated clause is well formed")
                })
                .collect();
            return Ok(Instance::new(n, clauses).expect("generated indices are in range"));
        }
    }
    Err(GenerationError::RetriesExhausted(GENERATION_RETRIES))
}

fn repair_degrees<R: Rng + ?Sized>(clauses: &mut [Vec<usize>], n: usize, rng: &mut R) -> bool {
    let mut deg = vec![0usize; n];
    for c in clauses.iter() {
        for &v in c {
            deg[v] += 1;
        }
    }
    // Every swap lowers the total deficit by one and never creates a new one.
    while let Some(u) = (0..n).find(|&v| deg[v] < 2) {
        let slots: Vec<(usize, usize)> = clauses
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.contains(&u))
            .flat_map(|(ci, c)| {
                c.iter()
                    .enumerate()
                    .filter(|&(_, &v)| deg[v] > 2)
                    .map(move |(si, _)| (ci, si))
            })
            .collect();
        let Some(&(ci, si)) = slots.choose(rng) else {
            return false;
        };
        deg[clauses[ci][si]] -= 1;
        clauses[ci][si] = u;
        deg[u] += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn clause(lits: &[i64], q: usize) -> Clause {
        let lits = lits
            .iter()
            .map(|&l| Literal {
                var: (l.unsigned_abs() - 1) as usize,
                negated: l < 0,
            })
            .collect();
        Clause::new(lits, q).unwrap()
    }

    fn assignment(s: &str) -> Assignment {
        Assignment::new(s.parse().unwrap())
    }

    #[test]
    fn clause_evaluation() {
        let c = clause(&[1, -2, 3], 1);
        assert!(c.eval(&assignment("110")).unwrap());
        let c = clause(&[1, 2, 3], 1);
        assert!(!c.eval(&assignment("000")).unwrap());
        let c = clause(&[1, 2, 3], 3);
        assert!(c.eval(&assignment("111")).unwrap());
    }

    #[test]
    fn clause_rejects_short_assignment() {
        let c = clause(&[1, 4], 1);
        assert_eq!(
            c.eval(&assignment("10")),
            Err(InstanceError::VariableOutOfRange { var: 3, n: 2 })
        );
    }

    #[test]
    fn clause_invariants() {
        assert_eq!(
            Clause::new(vec![Literal::pos(1), Literal::neg(1)], 1),
            Err(InstanceError::RepeatedVariable { var: 1 })
        );
        assert!(Clause::new(vec![Literal::pos(0)], 2).is_err());
        assert!(Clause::new(vec![], 1).is_err());
        assert!(Clause::degree_constraint(vec![Literal::pos(0)], 2).is_ok());
    }

    #[test]
    fn partial_evaluation_examples() {
        let c = clause(&[1, 2, 3], 1);
        let p = |v: [Option<bool>; 3]| PartialAssignment::from_values(v.to_vec());
        assert_eq!(
            c.eval_partial(&p([Some(true), Some(true), None])),
            ClauseStatus::Violated
        );
        assert_eq!(
            c.eval_partial(&p([Some(true), Some(false), None])),
            ClauseStatus::Indeterminate
        );
        assert_eq!(
            c.eval_partial(&p([Some(true), Some(false), Some(false)])),
            ClauseStatus::Satisfied
        );
        assert_eq!(c.eval_partial(&p([None; 3])), ClauseStatus::Indeterminate);
        assert_eq!(
            c.eval_partial(&p([Some(false), Some(false), Some(false)])),
            ClauseStatus::Violated
        );
    }

    #[test]
    fn instance_evaluation() {
        let empty = Instance::new(3, vec![]).unwrap();
        assert!(empty.eval(&assignment("101")).unwrap());
        let i = Instance::new(3, vec![clause(&[1, 2], 1), clause(&[3], 1)]).unwrap();
        assert!(!i.eval(&assignment("100")).unwrap());
        assert!(i.eval(&assignment("101")).unwrap());
        assert!(matches!(
            i.eval(&assignment("10")),
            Err(InstanceError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn brute_force_examples() {
        let empty = Instance::new(3, vec![]).unwrap();
        assert_eq!(brute_force_solutions(&empty).unwrap().len(), 8);
        let i = Instance::new(2, vec![clause(&[1, 2], 2)]).unwrap();
        assert_eq!(brute_force_solutions(&i).unwrap(), vec![assignment("11")]);
        let big = Instance::new(25, vec![]).unwrap();
        assert!(matches!(
            brute_force_solutions(&big),
            Err(InstanceError::BruteForceGuard { n: 25, .. })
        ));
    }

    #[test]
    fn brute_force_is_lexicographic() {
        let i = Instance::new(3, vec![clause(&[1, 2, 3], 1)]).unwrap();
        let sols = brute_force_solutions(&i).unwrap();
        assert_eq!(
            sols,
            vec![assignment("001"), assignment("010"), assignment("100")]
        );
    }

    #[test]
    fn generator_small_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = LockedParams {
            n: 6,
            m: 4,
            p: 3,
            q: 1,
            negation_prob: 0.0,
        };
        let inst = gen_locked_random(params, &mut rng).unwrap();
        assert!(inst.is_locked());
        assert_eq!(inst.clauses().iter().map(Clause::len).sum::<usize>(), 12);
        assert!(inst.clauses().iter().all(|c| c.negations() == 0));
    }

    #[test]
    fn generator_rejects_infeasible_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = LockedParams {
            n: 10,
            m: 3,
            p: 3,
            q: 1,
            negation_prob: 0.5,
        };
        assert_eq!(
            gen_locked_random(params, &mut rng),
            Err(GenerationError::InsufficientSlots { slots: 9, n: 10 })
        );
    }

    #[test]
    fn generator_at_satisfiability_threshold() {
        let params = LockedParams::with_alpha(30, 0.789, 3, 1, 0.5);
        assert_eq!(params.m, 23);
        let a = gen_locked_random(params, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = gen_locked_random(params, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert!(a.is_locked());
        assert_eq!(a.m(), 23);
        assert!(a.clauses().iter().all(|c| c.len() == 3 && c.q() == 1));
    }

    #[test]
    fn lockable_floor() {
        let p = LockedParams::with_alpha(15, 0.5, 3, 1, 0.5).at_least_lockable();
        assert_eq!(p.m, 10);
    }
}
