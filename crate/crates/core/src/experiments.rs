//! Ensemble sweeps over random locked instances: kernel excess statistics and
//! backtracking tree sizes, with CSV output.
//!
//! Samples run in parallel but results are collected in `(n, sample)` order,
//! and every sample draws from its own seeded stream, so output depends only
//! on the configuration.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::instance::{gen_locked_random, Instance, LockedParams};
use crate::reduction::{build_linear_system, reduce, XorOutcome};
use crate::search::{backtrack_count, gamma_estimate, optimize_permutation, ENUMERATION_MAX_K};

/// First line of every CSV the sweeps write.
pub const SCHEMA_HEADER: &str =
    concat!("# xorsat-reduce v", env!("CARGO_PKG_VERSION"), " schema=1");

/// Satisfiability threshold of locked 1-in-3 instances.
pub const ALPHA_SAT_1IN3: f64 = 0.789;
/// Satisfiability threshold of locked 2-in-4 instances.
pub const ALPHA_SAT_2IN4: f64 = 0.707;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SweepError {
    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Problem {
    Occ1in3,
    Occ2in4,
    Custom { p: usize, q: usize },
}

impl Problem {
    pub fn arity(self) -> usize {
        match self {
            Problem::Occ1in3 => 3,
            Problem::Occ2in4 => 4,
            Problem::Custom { p, .. } => p,
        }
    }

    pub fn occupation(self) -> usize {
        match self {
            Problem::Occ1in3 => 1,
            Problem::Occ2in4 => 2,
            Problem::Custom { q, .. } => q,
        }
    }

    pub fn alpha_sat(self) -> Option<f64> {
        match self {
            Problem::Occ1in3 => Some(ALPHA_SAT_1IN3),
            Problem::Occ2in4 => Some(ALPHA_SAT_2IN4),
            Problem::Custom { .. } => None,
        }
    }
}

impl FromStr for Problem {
    type Err = SweepError;

    /// `occ1in3`, `occ2in4`, or `<q>in<p>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "occ1in3" | "1in3" => Ok(Problem::Occ1in3),
            "occ2in4" | "2in4" => Ok(Problem::Occ2in4),
            other => {
                let body = other.strip_prefix("occ").unwrap_or(other);
                let (q, p) = body.split_once("in").ok_or_else(|| {
                    SweepError::InvalidConfig(format!("unknown problem {other:?}"))
                })?;
                let parse = |t: &str| {
                    t.parse::<usize>().map_err(|_| {
                        SweepError::InvalidConfig(format!("unknown problem {other:?}"))
                    })
                };
                Ok(Problem::Custom {
                    p: parse(p)?,
                    q: parse(q)?,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub problem: Problem,
    pub n_list: Vec<usize>,
    pub alpha: f64,
    pub samples: usize,
    pub seed: u64,
    pub negation_prob: f64,
    pub perm_trials: usize,
    /// Raise `M` to `⌈2n/p⌉` when `⌊αn⌋` is too small for a locked instance.
    pub lockable_floor: bool,
}

impl SweepConfig {
    pub fn new(
        problem: Problem,
        n_list: Vec<usize>,
        alpha: f64,
        samples: usize,
        seed: u64,
    ) -> Self {
        Self {
            problem,
            n_list,
            alpha,
            samples,
            seed,
            negation_prob: 0.5,
            perm_trials: 100,
            lockable_floor: false,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.samples == 0 {
            return Err(SweepError::InvalidConfig("samples must be >= 1".into()));
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return Err(SweepError::InvalidConfig("alpha must be positive".into()));
        }
        if self.n_list.is_empty() {
            return Err(SweepError::InvalidConfig("n list is empty".into()));
        }
        Ok(())
    }

    pub fn params(&self, n: usize) -> LockedParams {
        let p = LockedParams::with_alpha(
            n,
            self.alpha,
            self.problem.arity(),
            self.problem.occupation(),
            self.negation_prob,
        );
        if self.lockable_floor {
            p.at_least_lockable()
        } else {
            p
        }
    }

    fn jobs(&self) -> Vec<(usize, usize)> {
        self.n_list
            .iter()
            .flat_map(|&n| (0..self.samples).map(move |s| (n, s)))
            .collect()
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sample `sample` at size `n`.
pub fn derive_seed(base: u64, n: usize, sample: usize) -> u64 {
    mix(mix(mix(base) ^ n as u64) ^ sample as u64)
}

/// Instance for one sample of a sweep.
pub fn sample_instance(
    config: &SweepConfig,
    n: usize,
    sample: usize,
) -> (u64, Result<Instance, String>) {
    let seed = derive_seed(config.seed, n, sample);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = gen_locked_random(config.params(n), &mut rng).map_err(|e| e.to_string());
    (seed, inst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RecordStatus {
    Ok,
    GenerationFailed(String),
    GuardExceeded { k: usize },
}

/// Observables of one sampled instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub n: usize,
    pub sample: usize,
    pub seed: u64,
    pub m: usize,
    pub m_prime: usize,
    pub k: usize,
    pub delta_k: usize,
    pub xor_feasible: bool,
    pub solutions: Option<u64>,
    /// Tree size after permutation optimisation.
    pub tree_nodes: Option<u64>,
    /// Tree size with the default free coordinates.
    pub baseline_tree_nodes: Option<u64>,
    pub status: RecordStatus,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SweepRecord {
    fn failed(n: usize, sample: usize, seed: u64, reason: String, wall_time: Duration) -> Self {
        Self {
            n,
            sample,
            seed,
            m: 0,
            m_prime: 0,
            k: 0,
            delta_k: 0,
            xor_feasible: false,
            solutions: None,
            tree_nodes: None,
            baseline_tree_nodes: None,
            status: RecordStatus::GenerationFailed(reason),
            wall_time,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == RecordStatus::Ok
    }
}

fn structural_record(n: usize, sample: usize, seed: u64, inst: &Instance) -> SweepRecord {
    let sys = build_linear_system(inst);
    let m_prime = sys.a.rank();
    SweepRecord {
        n,
        sample,
        seed,
        m: inst.m(),
        m_prime,
        k: n - m_prime,
        delta_k: inst.m() - m_prime,
        xor_feasible: sys
            .a
            .solve_particular(&sys.b)
            .expect("dimensions agree")
            .is_some(),
        solutions: None,
        tree_nodes: None,
        baseline_tree_nodes: None,
        status: RecordStatus::Ok,
        wall_time: Duration::ZERO,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSummary {
    pub n: usize,
    pub count: usize,
    pub failures: usize,
    pub mean_dk_over_n: f64,
    pub min_dk_over_n: f64,
    pub max_dk_over_n: f64,
    pub max_delta_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSweep {
    pub config: SweepConfig,
    pub records: Vec<SweepRecord>,
    pub summaries: Vec<KernelSummary>,
}

pub fn run_kernel_sweep(config: &SweepConfig) -> Result<KernelSweep, SweepError> {
    config.validate()?;
    let records: Vec<SweepRecord> = config
        .jobs()
        .into_par_iter()
        .map(|(n, sample)| {
            let start = Instant::now();
            let (seed, inst) = sample_instance(config, n, sample);
            match inst {
                Ok(inst) => SweepRecord {
                    wall_time: start.elapsed(),
                    ..structural_record(n, sample, seed, &inst)
                },
                Err(e) => SweepRecord::failed(n, sample, seed, e, start.elapsed()),
            }
        })
        .collect();
    let summaries = config
        .n_list
        .iter()
        .map(|&n| {
            let group: Vec<&SweepRecord> = records.iter().filter(|r| r.n == n).collect();
            let ok: Vec<f64> = group
                .iter()
                .filter(|r| r.is_ok())
                .map(|r| r.delta_k as f64 / n as f64)
                .collect();
            let count = ok.len();
            KernelSummary {
                n,
                count,
                failures: group.len() - count,
                mean_dk_over_n: if count > 0 {
                    ok.iter().sum::<f64>() / count as f64
                } else {
                    f64::NAN
                },
                min_dk_over_n: ok.iter().copied().fold(f64::INFINITY, f64::min),
                max_dk_over_n: ok.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                max_delta_k: group
                    .iter()
                    .filter(|r| r.is_ok())
                    .map(|r| r.delta_k)
                    .max()
                    .unwrap_or(0),
            }
        })
        .collect();
    Ok(KernelSweep {
        config: config.clone(),
        records,
        summaries,
    })
}

impl KernelSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{SCHEMA_HEADER}").unwrap();
        writeln!(
            out,
            "kind,n,sample,seed,M,m_prime,k,delta_k,xor_feasible,status,count,failures,mean_dk_over_n,min_dk_over_n,max_dk_over_n,max_delta_k"
        )
        .unwrap();
        for r in &self.records {
            writeln!(
                out,
                "sample,{},{},{},{},{},{},{},{},{},,,,,,",
                r.n,
                r.sample,
                r.seed,
                r.m,
                r.m_prime,
                r.k,
                r.delta_k,
                r.xor_feasible,
                status_cell(&r.status)
            )
            .unwrap();
        }
        for s in &self.summaries {
            writeln!(
                out,
                "summary,{},,,,,,,,,{},{},{},{},{},{}",
                s.n,
                s.count,
                s.failures,
                s.mean_dk_over_n,
                s.min_dk_over_n,
                s.max_dk_over_n,
                s.max_delta_k
            )
            .unwrap();
        }
        out
    }
}

fn status_cell(s: &RecordStatus) -> String {
    match s {
        RecordStatus::Ok => "ok".into(),
        RecordStatus::GenerationFailed(_) => "generation_failed".into(),
        RecordStatus::GuardExceeded { k } => format!("guard_exceeded_k{k}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeSummary {
    pub n: usize,
    pub count: usize,
    pub skipped: usize,
    pub failures: usize,
    pub mean_sqrt_t: f64,
    pub gamma: f64,
    pub mean_sqrt_t_baseline: f64,
    pub gamma_baseline: f64,
    pub k_max: usize,
    /// `(k_max + 1) / (2n)`, the value of γ if every tree were complete.
    pub gamma_ceiling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeSweep {
    pub config: SweepConfig,
    pub records: Vec<SweepRecord>,
    pub summaries: Vec<TreeSummary>,
}

/// Backtracking statistics per sample: the tree is measured once with the
/// default free coordinates and once after [`optimize_permutation`].
/// Instances are not filtered for satisfiability; a parity-infeasible one
/// contributes `T = 0`.
pub fn run_tree_sweep(config: &SweepConfig) -> Result<TreeSweep, SweepError> {
    config.validate()?;
    let records: Vec<SweepRecord> = config
        .jobs()
        .into_par_iter()
        .map(|(n, sample)| {
            let start = Instant::now();
            let (seed, inst) = sample_instance(config, n, sample);
            let inst = match inst {
                Ok(i) => i,
                Err(e) => return SweepRecord::failed(n, sample, seed, e, start.elapsed()),
            };
            let mut rec = structural_record(n, sample, seed, &inst);
            match reduce(&inst) {
                XorOutcome::Infeasible(_) => {
                    rec.solutions = Some(0);
                    rec.tree_nodes = Some(0);
                    rec.baseline_tree_nodes = Some(0);
                }
                XorOutcome::Feasible(r) if r.k() > ENUMERATION_MAX_K => {
                    rec.status = RecordStatus::GuardExceeded { k: r.k() };
                }
                XorOutcome::Feasible(r) => {
                    let (v, base) = backtrack_count(&inst, &r);
                    let perm_seed = ChaCha8Rng::seed_from_u64(seed).gen::<u64>();
                    let tuned = optimize_permutation(&inst, &r, config.perm_trials, perm_seed);
                    let (v_tuned, tree) = backtrack_count(&inst, &tuned);
                    debug_assert_eq!(v, v_tuned);
                    rec.solutions = Some(v);
                    rec.tree_nodes = Some(tree.total_nodes);
                    rec.baseline_tree_nodes = Some(base.total_nodes);
                }
            }
            rec.wall_time = start.elapsed();
            rec
        })
        .collect();
    let summaries = config
        .n_list
        .iter()
        .map(|&n| {
            let group: Vec<&SweepRecord> = records.iter().filter(|r| r.n == n).collect();
            let ok: Vec<&SweepRecord> = group.iter().copied().filter(|r| r.is_ok()).collect();
            let failures = group
                .iter()
                .filter(|r| matches!(r.status, RecordStatus::GenerationFailed(_)))
                .count();
            let trees: Vec<u64> = ok.iter().filter_map(|r| r.tree_nodes).collect();
            let base: Vec<u64> = ok.iter().filter_map(|r| r.baseline_tree_nodes).collect();
            let k_max = ok.iter().map(|r| r.k).max().unwrap_or(0);
            let mean_sqrt =
                |ts: &[u64]| ts.iter().map(|&t| (t as f64).sqrt()).sum::<f64>() / ts.len() as f64;
            let gamma = |ts: &[u64]| gamma_estimate::<f64>(ts, n).unwrap_or(f64::NAN);
            TreeSummary {
                n,
                count: ok.len(),
                skipped: group.len() - ok.len() - failures,
                failures,
                mean_sqrt_t: mean_sqrt(&trees),
                gamma: gamma(&trees),
                mean_sqrt_t_baseline: mean_sqrt(&base),
                gamma_baseline: gamma(&base),
                k_max,
                gamma_ceiling: (k_max + 1) as f64 / (2 * n) as f64,
            }
        })
        .collect();
    Ok(TreeSweep {
        config: config.clone(),
        records,
        summaries,
    })
}

fn opt_cell<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TreeSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{SCHEMA_HEADER}").unwrap();
        writeln!(
            out,
            "kind,n,sample,seed,M,m_prime,k,delta_k,xor_feasible,status,V,T,T_baseline,count,skipped,failures,mean_sqrt_T,gamma,mean_sqrt_T_baseline,gamma_baseline,k_max,gamma_ceiling"
        )
        .unwrap();
        for r in &self.records {
            writeln!(
                out,
                "sample,{},{},{},{},{},{},{},{},{},{},{},{},,,,,,,,,",
                r.n,
                r.sample,
                r.seed,
                r.m,
                r.m_prime,
                r.k,
                r.delta_k,
                r.xor_feasible,
                status_cell(&r.status),
                opt_cell(r.solutions),
                opt_cell(r.tree_nodes),
                opt_cell(r.baseline_tree_nodes),
            )
            .unwrap();
        }
        for s in &self.summaries {
            writeln!(
                out,
                "summary,{},,,,,,,,,,,,{},{},{},{},{},{},{},{},{}",
                s.n,
                s.count,
                s.skipped,
                s.failures,
                s.mean_sqrt_t,
                s.gamma,
                s.mean_sqrt_t_baseline,
                s.gamma_baseline,
                s.k_max,
                s.gamma_ceiling
            )
            .unwrap();
        }
        out
    }
}

/// Percentile bootstrap interval for the mean of paired differences.
pub fn bootstrap_mean_interval(
    diffs: &[f64],
    resamples: usize,
    level: f64,
    seed: u64,
) -> (f64, f64) {
    assert!(
        !diffs.is_empty(),
        "bootstrap needs at least one observation"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = diffs.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| diffs[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| means[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    (at(tail), at(1.0 - tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_parsing() {
        assert_eq!("occ1in3".parse::<Problem>().unwrap(), Problem::Occ1in3);
        assert_eq!("occ2in4".parse::<Problem>().unwrap(), Problem::Occ2in4);
        assert_eq!(
            "3in5".parse::<Problem>().unwrap(),
            Problem::Custom { p: 5, q: 3 }
        );
        assert!("bogus".parse::<Problem>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = SweepConfig::new(Problem::Occ1in3, vec![10], 1.0, 1, 0);
        assert!(c.validate().is_ok());
        c.samples = 0;
        assert!(c.validate().is_err());
        let c = SweepConfig::new(Problem::Occ1in3, vec![], 1.0, 1, 0);
        assert!(c.validate().is_err());
        let c = SweepConfig::new(Problem::Occ1in3, vec![10], 0.0, 1, 0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn kernel_sweep_rows_are_consistent() {
        let c = SweepConfig::new(Problem::Occ1in3, vec![12, 24], 0.9, 3, 5);
        let sweep = run_kernel_sweep(&c).unwrap();
        assert_eq!(sweep.records.len(), 6);
        for r in &sweep.records {
            assert_eq!(r.delta_k, r.m - r.m_prime);
            assert_eq!(r.k, r.n - r.m_prime);
        }
        assert_eq!(sweep.to_csv(), run_kernel_sweep(&c).unwrap().to_csv());
        assert!(sweep.to_csv().starts_with("# xorsat-reduce v"));
    }

    #[test]
    fn single_sample_gives_one_row_per_n() {
        let c = SweepConfig::new(Problem::Occ1in3, vec![9, 12, 15], 1.0, 1, 2);
        let csv = run_kernel_sweep(&c).unwrap().to_csv();
        assert_eq!(csv.lines().filter(|l| l.starts_with("sample,")).count(), 3);
    }

    #[test]
    fn generation_failures_are_recorded() {
        let c = SweepConfig::new(Problem::Occ1in3, vec![12], 0.3, 2, 2);
        let sweep = run_kernel_sweep(&c).unwrap();
        assert!(sweep.records.iter().all(|r| !r.is_ok()));
        assert_eq!(sweep.summaries[0].failures, 2);
    }

    #[test]
    fn tree_sweep_stays_under_complete_tree() {
        let mut c = SweepConfig::new(Problem::Custom { p: 2, q: 1 }, vec![6], 1.0, 2, 1);
        c.perm_trials = 3;
        let sweep = run_tree_sweep(&c).unwrap();
        for r in sweep.records.iter().filter(|r| r.is_ok()) {
            assert!(r.tree_nodes.unwrap() < 1 << (r.k + 1));
        }
        let s = &sweep.summaries[0];
        assert!(s.gamma <= s.gamma_ceiling);
    }

    #[test]
    fn bootstrap_interval_brackets_constant() {
        let (lo, hi) = bootstrap_mean_interval(&[2.0; 10], 200, 0.95, 0);
        assert_eq!((lo, hi), (2.0, 2.0));
    }
}
