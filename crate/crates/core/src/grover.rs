//! Grover search over the reduced space `{0,1}^k`.
//!
//! The phase oracle is applied index-wise: amplitude `v` is negated iff the
//! expanded assignment `x(v)` satisfies the instance (or `v` carries the
//! artificial mark). Gate-level structure of the oracle is summarised
//! separately by [`oracle_resources`].

use std::f64::consts::PI;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::instance::{Assignment, Instance};
use crate::reduction::Reduction;
use crate::search::{SolveOutcome, SolveStatus};

/// Largest `k` for which a statevector is allocated.
pub const SIMULATION_MAX_K: usize = 24;

/// Per-round growth of the iteration ceiling in the unknown-count schedule.
pub const GROWTH_FACTOR: f64 = 6.0 / 5.0;

/// Consecutive sightings of the artificial mark required before an
/// unknown-count search reports `Unsat`. With `V ≥ 1` true solutions each
/// sighting happens with probability at most 1/2.
pub const DEFAULT_CONFIRMATIONS: usize = 32;

/// Documented constant `c` with `total_gates ≤ c n²` for instances with
/// `M ≤ n` and clause arity `p ≤ 4`.
pub const GATE_BOUND_CONSTANT: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroverError {
    #[error("reduced dimension k = {k} exceeds simulation guard {max}")]
    GuardExceeded { k: usize, max: usize },
    #[error("marked count {marked} outside 1..={items}")]
    MarkedCountOutOfRange { marked: u64, items: u64 },
    #[error("artificial mark {index} outside the 2^{k} search space")]
    ArtificialOutOfRange { index: u64, k: usize },
    #[error("oracle dimension {found} does not match state dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("search exceeded its budget of {0} oracle calls")]
    BudgetExhausted(u64),
    #[error("independent clauses {m_prime} exceed variables {n}")]
    RankExceedsVariables { m_prime: usize, n: usize },
    #[error("solution count {v} exceeds the reduced space 2^{k}")]
    SolutionCountOutOfRange { v: u64, k: usize },
}

fn sim_guard(k: usize) -> Result<(), GroverError> {
    if k > SIMULATION_MAX_K {
        Err(GroverError::GuardExceeded {
            k,
            max: SIMULATION_MAX_K,
        })
    } else {
        Ok(())
    }
}

fn cast<T: FromPrimitive>(x: f64) -> T {
    T::from_f64(x).expect("value representable in the scalar type")
}

/// Amplitudes over the `2^k` basis states `|v⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    k: usize,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Float + FromPrimitive> StateVector<T> {
    /// Equal superposition over all `2^k` basis states.
    pub fn uniform(k: usize) -> Self {
        let len = 1usize << k;
        let a = cast::<T>(1.0 / (len as f64).sqrt());
        Self {
            k,
            amplitudes: vec![Complex::new(a, T::zero()); len],
        }
    }

    pub fn basis(k: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); 1 << k];
        amplitudes[index] = Complex::new(T::one(), T::zero());
        Self { k, amplitudes }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex<T>>) -> Option<Self> {
        let len = amplitudes.len();
        (len.is_power_of_two()).then(|| Self {
            k: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn qubits(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn probability(&self, index: usize) -> T {
        self.amplitudes[index].norm_sqr()
    }

    /// Total probability of the oracle's marked set.
    pub fn marked_probability(&self, oracle: &PhaseOracle) -> T {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| oracle.is_marked(*i))
            .fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr())
    }

    /// Inversion about the mean amplitude.
    pub fn diffuse(&mut self) {
        let len = cast::<T>(self.len() as f64);
        let sum = self
            .amplitudes
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &a| acc + a);
        let twice_mean = sum * (cast::<T>(2.0) / len);
        for a in &mut self.amplitudes {
            *a = twice_mean - *a;
        }
    }

    /// Computational-basis measurement.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr().to_f64().unwrap_or(0.0);
            if p > 0.0 {
                last_nonzero = i;
            }
            acc += p;
            if u < acc {
                return i;
            }
        }
        last_nonzero
    }
}

/// Index-wise phase flip on a fixed marked set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseOracle {
    k: usize,
    marked: Vec<bool>,
    count: u64,
}

impl PhaseOracle {
    pub fn from_indices(k: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut marked = vec![false; 1 << k];
        for i in indices {
            marked[i] = true;
        }
        let count = marked.iter().filter(|&&m| m).count() as u64;
        Self { k, marked, count }
    }

    pub fn qubits(&self) -> usize {
        self.k
    }

    pub fn is_marked(&self, index: usize) -> bool {
        self.marked[index]
    }

    pub fn marked_count(&self) -> u64 {
        self.count
    }

    pub fn marked_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.marked
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }

    pub fn apply<T: Float>(&self, state: &mut StateVector<T>) -> Result<(), GroverError> {
        if state.k != self.k {
            return Err(GroverError::DimensionMismatch {
                expected: state.k,
                found: self.k,
            });
        }
        for (a, &m) in state.amplitudes.iter_mut().zip(&self.marked) {
            if m {
                *a = -*a;
            }
        }
        Ok(())
    }
}

/// Oracle for an instance searched through its reduction.
#[derive(Debug, Clone, Copy)]
pub struct OracleSpec<'a> {
    pub instance: &'a Instance,
    pub reduction: &'a Reduction,
    /// Configuration accepted in addition to true solutions, so that an
    /// unsatisfiable instance still has one marked item.
    pub artificial_marked: Option<u64>,
}

impl<'a> OracleSpec<'a> {
    /// Artificial mark at `v = 0`.
    pub fn new(instance: &'a Instance, reduction: &'a Reduction) -> Self {
        Self {
            instance,
            reduction,
            artificial_marked: Some(0),
        }
    }

    pub fn without_artificial(instance: &'a Instance, reduction: &'a Reduction) -> Self {
        Self {
            instance,
            reduction,
            artificial_marked: None,
        }
    }

    pub fn k(&self) -> usize {
        self.reduction.k()
    }

    /// Classical check of a reduced-space point against the instance.
    pub fn is_solution(&self, index: u64) -> bool {
        self.instance
            .satisfied_by(self.reduction.expand_index(index).values())
    }

    fn validate(&self) -> Result<(), GroverError> {
        sim_guard(self.k())?;
        match self.artificial_marked {
            Some(index) if index >> self.k() != 0 => {
                Err(GroverError::ArtificialOutOfRange { index, k: self.k() })
            }
            _ => Ok(()),
        }
    }

    /// Materialises the marked set.
    pub fn compile(&self) -> Result<PhaseOracle, GroverError> {
        self.validate()?;
        let k = self.k();
        let marked = (0..1u64 << k)
            .filter(|&v| Some(v) == self.artificial_marked || self.is_solution(v))
            .map(|v| v as usize);
        Ok(PhaseOracle::from_indices(k, marked))
    }
}

/// Applies the instance oracle to a copy of `state`.
pub fn apply_oracle<T: Float>(
    spec: &OracleSpec<'_>,
    state: &StateVector<T>,
) -> Result<StateVector<T>, GroverError> {
    let oracle = spec.compile()?;
    let mut out = state.clone();
    oracle.apply(&mut out)?;
    Ok(out)
}

/// One Grover iteration: phase oracle, then inversion about the mean.
pub fn grover_iterate<T: Float + FromPrimitive>(
    oracle: &PhaseOracle,
    state: &mut StateVector<T>,
) -> Result<(), GroverError> {
    oracle.apply(state)?;
    state.diffuse();
    Ok(())
}

/// `⌊(π/4) √(N / V)⌋`.
pub fn optimal_iterations(items: u64, marked: u64) -> u64 {
    (PI / 4.0 * (items as f64 / marked as f64).sqrt()).floor() as u64
}

/// `sin²((2m + 1) asin √(V/N))`, the marked probability after `m`
/// iterations from the uniform state.
pub fn closed_form_success(items: u64, marked: u64, iterations: u64) -> f64 {
    let theta = (marked as f64 / items as f64).sqrt().asin();
    ((2 * iterations + 1) as f64 * theta).sin().powi(2)
}

/// State after `iterations` Grover iterations from the uniform superposition.
pub fn evolve<T: Float + FromPrimitive>(
    oracle: &PhaseOracle,
    iterations: u64,
) -> Result<StateVector<T>, GroverError> {
    sim_guard(oracle.k)?;
    let mut state = StateVector::uniform(oracle.k);
    for _ in 0..iterations {
        grover_iterate(oracle, &mut state)?;
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KnownSearch {
    pub measured: u64,
    pub success: bool,
    pub iterations: u64,
}

/// Grover search with the number of marked items supplied by the caller.
pub fn grover_search_known<T, R>(
    oracle: &PhaseOracle,
    marked: u64,
    rng: &mut R,
) -> Result<KnownSearch, GroverError>
where
    T: Float + FromPrimitive,
    R: Rng + ?Sized,
{
    sim_guard(oracle.k)?;
    let items = 1u64 << oracle.k;
    if marked == 0 || marked > items {
        return Err(GroverError::MarkedCountOutOfRange { marked, items });
    }
    let iterations = optimal_iterations(items, marked);
    let state = evolve::<T>(oracle, iterations)?;
    let measured = state.sample(rng);
    Ok(KnownSearch {
        measured: measured as u64,
        success: oracle.is_marked(measured),
        iterations,
    })
}

/// Result of one amplitude-amplification run with an unknown marked count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Amplified {
    pub measured: u64,
    pub queries: u64,
    pub rounds: u64,
}

/// Exponential-schedule search: each round draws an iteration count
/// uniformly from `0..⌈m⌉`, measures, and stops on a marked outcome;
/// otherwise `m ← min(λ m, √N)`.
pub fn amplify_unknown<T, R>(
    oracle: &PhaseOracle,
    budget: u64,
    rng: &mut R,
) -> Result<Amplified, GroverError>
where
    T: Float + FromPrimitive,
    R: Rng + ?Sized,
{
    sim_guard(oracle.k)?;
    let ceiling = ((1u64 << oracle.k) as f64).sqrt();
    let mut m = 1.0f64;
    let mut queries = 0u64;
    let mut rounds = 0u64;
    loop {
        rounds += 1;
        let j = rng.gen_range(0..m.ceil() as u64);
        let state = evolve::<T>(oracle, j)?;
        queries += j;
        let measured = state.sample(rng);
        if oracle.is_marked(measured) {
            return Ok(Amplified {
                measured: measured as u64,
                queries,
                rounds,
            });
        }
        if queries > budget {
            return Err(GroverError::BudgetExhausted(budget));
        }
        m = (GROWTH_FACTOR * m).min(ceiling);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownSearch {
    /// `queries` counts oracle applications over all rounds.
    pub outcome: SolveOutcome,
    pub artificial_hits: usize,
    pub rounds: u64,
}

/// Finds a solution without knowing how many exist, or certifies that none
/// does.
///
/// The oracle marks every true solution plus the artificial configuration.
/// Each measured marked item is verified classically; a true solution is
/// returned at once. Seeing only the artificial configuration
/// `confirmations` times in a row is reported as `Unsat`.
pub fn grover_search_unknown<T, R>(
    spec: &OracleSpec<'_>,
    confirmations: usize,
    rng: &mut R,
) -> Result<UnknownSearch, GroverError>
where
    T: Float + FromPrimitive,
    R: Rng + ?Sized,
{
    let spec = OracleSpec {
        artificial_marked: Some(spec.artificial_marked.unwrap_or(0)),
        ..*spec
    };
    let oracle = spec.compile()?;
    let budget = 1_000 * (1u64 << spec.k()).max(64);
    let mut queries = 0u64;
    let mut rounds = 0u64;
    let mut artificial_hits = 0usize;
    loop {
        let run = amplify_unknown::<T, R>(&oracle, budget, rng)?;
        queries += run.queries;
        rounds += run.rounds;
        let x = spec.reduction.expand_index(run.measured);
        if spec.instance.satisfied_by(x.values()) {
            return Ok(UnknownSearch {
                outcome: SolveOutcome {
                    status: SolveStatus::Sat(Assignment::new(x.into_values())),
                    queries,
                },
                artificial_hits,
                rounds,
            });
        }
        debug_assert_eq!(Some(run.measured), spec.artificial_marked);
        artificial_hits += 1;
        if artificial_hits >= confirmations.max(1) {
            return Ok(UnknownSearch {
                outcome: SolveOutcome {
                    status: SolveStatus::Unsat,
                    queries,
                },
                artificial_hits,
                rounds,
            });
        }
    }
}

/// `√(2^(n − M′))`.
pub fn query_cost_decision<F: Float + FromPrimitive>(
    n: usize,
    m_prime: usize,
) -> Result<F, GroverError> {
    if m_prime > n {
        return Err(GroverError::RankExceedsVariables { m_prime, n });
    }
    let half = F::from_usize(n - m_prime).expect("exponent fits") / cast::<F>(2.0);
    Ok(cast::<F>(2.0).powf(half))
}

/// `√(V · 2^(n − M′))`.
pub fn query_cost_count<F: Float + FromPrimitive>(
    n: usize,
    m_prime: usize,
    solutions: u64,
) -> Result<F, GroverError> {
    let base = query_cost_decision::<F>(n, m_prime)?;
    let k = n - m_prime;
    if k < 64 && solutions > 1u64 << k {
        return Err(GroverError::SolutionCountOutOfRange { v: solutions, k });
    }
    Ok(base * F::from_u64(solutions).expect("count fits").sqrt())
}

/// Gate and ancilla counts of the four-module oracle circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResourceReport {
    pub ancillas: u64,
    /// Builds `|x(v)⟩`: one CNOT per kernel-vector bit, one NOT per offset bit.
    pub gates_module_i: u64,
    /// Per-clause occupation checks.
    pub gates_module_ii: u64,
    /// Counter increments for unsatisfied clauses.
    pub gates_module_iii: u64,
    /// Final multi-controlled phase.
    pub gates_module_iv: u64,
    pub total_gates: u64,
}

impl ResourceReport {
    /// `total_gates / n²`.
    pub fn quadratic_ratio(&self, n: usize) -> f64 {
        self.total_gates as f64 / (n as f64).powi(2)
    }
}

/// Smallest `b` with `2^b ≥ x`.
pub fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        u64::from(64 - (x - 1).leading_zeros())
    }
}

/// Check cost of one clause of arity `p`: `p` controlled operations to load
/// the literals plus a threshold comparator of `p + ⌈log₂(p+1)⌉` gates.
pub fn clause_check_cost(p: usize) -> u64 {
    2 * p as u64 + ceil_log2(p as u64 + 1)
}

/// Resource estimate for the oracle of `instance` over `reduction`.
///
/// Every clause is checked, including clauses whose parity rows are
/// linearly dependent, so the counter needs `⌈log₂(M + 1)⌉` ancillas.
pub fn oracle_resources(instance: &Instance, reduction: &Reduction) -> ResourceReport {
    let m = instance.m() as u64;
    let ancillas = ceil_log2(m + 1);
    let gates_module_i = reduction
        .kernel()
        .iter()
        .map(|xi| xi.weight() as u64)
        .sum::<u64>()
        + reduction.xi_bar().weight() as u64;
    let gates_module_ii = instance
        .clauses()
        .iter()
        .map(|c| clause_check_cost(c.len()))
        .sum();
    let gates_module_iii = m * ancillas;
    let gates_module_iv = u64::from(m > 0);
    ResourceReport {
        ancillas,
        gates_module_i,
        gates_module_ii,
        gates_module_iii,
        gates_module_iv,
        total_gates: gates_module_i + gates_module_ii + gates_module_iii + gates_module_iv,
    }
}
