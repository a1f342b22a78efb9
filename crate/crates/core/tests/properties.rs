use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xorsat_core::format::{emit_instance, parse_instance};
use xorsat_core::instance::ClauseStatus;
use xorsat_core::search::backtrack_count;
use xorsat_core::{
    brute_force_solutions, build_linear_system, gamma_estimate, reduce, AffineSolution, Assignment,
    BinMatrix, BinVec, Clause, Instance, Literal, PartialAssignment, XorOutcome,
};

fn random_matrix(seed: u64, rows: usize, cols: usize) -> BinMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let density: f64 = rng.gen_range(0.1..0.7);
    let mut m = BinMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m.set(r, c, rng.gen_bool(density));
        }
    }
    m
}

/// Unrestricted small instance: mixed arities and occupations, no locking.
fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=10);
    let m = rng.gen_range(0..=8);
    let vars: Vec<usize> = (0..n).collect();
    let clauses = (0..m)
        .map(|_| {
            let p = rng.gen_range(1..=n.min(4));
            let lits = vars
                .choose_multiple(&mut rng, p)
                .map(|&var| Literal {
                    var,
                    negated: rng.gen_bool(0.5),
                })
                .collect();
            Clause::new(lits, rng.gen_range(1..=p)).unwrap()
        })
        .collect();
    Instance::new(n, clauses).unwrap()
}

fn all_vectors(len: usize) -> impl Iterator<Item = BinVec> {
    (0..1u64 << len).map(move |u| BinVec::from_index(u, len))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rank_plus_nullity_is_column_count(seed: u64, rows in 0usize..20, cols in 1usize..40) {
        let a = random_matrix(seed, rows, cols);
        let kernel = a.kernel_basis();
        prop_assert_eq!(a.rank() + kernel.len(), cols);
        for xi in &kernel {
            prop_assert!(a.matvec(xi).unwrap().is_zero());
        }
        let stacked = BinMatrix::from_rows(kernel.clone(), cols).unwrap();
        prop_assert_eq!(stacked.rank(), kernel.len());
        prop_assert_eq!(a.transpose().rank(), a.rank());
    }

    #[test]
    fn kernel_spans_whole_null_space(seed: u64, rows in 0usize..10, cols in 1usize..=14) {
        let a = random_matrix(seed, rows, cols);
        let null: BTreeSet<BinVec> = all_vectors(cols).filter(|x| a.matvec(x).unwrap().is_zero()).collect();
        let kernel = a.kernel_basis();
        let span: BTreeSet<BinVec> = all_vectors(kernel.len())
            .map(|v| {
                let mut x = BinVec::zeros(cols);
                for i in v.ones() {
                    x.xor_assign(&kernel[i]);
                }
                x
            })
            .collect();
        prop_assert_eq!(span, null);
    }

    #[test]
    fn affine_solve_matches_brute_force(seed: u64, rows in 1usize..10, cols in 1usize..=12) {
        let a = random_matrix(seed, rows, cols);
        let b = BinVec::from_index(seed % (1 << rows), rows);
        let solvable = all_vectors(cols).any(|x| a.matvec(&x).unwrap() == b);
        match a.solve_affine(&b).unwrap() {
            AffineSolution::Consistent { particular, .. } => {
                prop_assert!(solvable);
                prop_assert_eq!(a.matvec(&particular).unwrap(), b);
            }
            AffineSolution::Inconsistent { witness } => {
                prop_assert!(!solvable);
                let mut row = BinVec::zeros(cols);
                let mut rhs = false;
                for &i in &witness {
                    row.xor_assign(a.row(i));
                    rhs ^= b.get(i);
                }
                prop_assert!(row.is_zero() && rhs);
            }
        }
    }

    #[test]
    fn standard_form_parameterises_same_space(seed: u64) {
        let inst = random_instance(seed);
        if let XorOutcome::Feasible(r) = reduce(&inst) {
            let direct: BTreeSet<Assignment> = (0..1u64 << r.k()).map(|u| r.expand_index(u)).collect();
            let standard: BTreeSet<Assignment> = all_vectors(r.k())
                .map(|v| r.expand_standard(&v).unwrap())
                .collect();
            prop_assert_eq!(direct.len(), 1 << r.k());
            prop_assert_eq!(standard, direct);
            let sf = r.standard();
            for (i, &c) in sf.free_coordinates().iter().enumerate() {
                prop_assert_eq!(sf.perm()[i], c);
            }
        }
    }

    #[test]
    fn solutions_lie_in_parity_space(seed: u64) {
        let inst = random_instance(seed);
        let sys = build_linear_system(&inst);
        let solutions = brute_force_solutions(&inst).unwrap();
        for s in &solutions {
            prop_assert_eq!(sys.a.matvec(s.values()).unwrap(), sys.b.clone());
        }
        match reduce(&inst) {
            XorOutcome::Feasible(r) => {
                let space: BTreeSet<Assignment> = (0..1u64 << r.k()).map(|u| r.expand_index(u)).collect();
                prop_assert!(solutions.iter().all(|s| space.contains(s)));
                let (count, tree) = backtrack_count(&inst, &r);
                prop_assert_eq!(count, solutions.len() as u64);
                prop_assert!(tree.total_nodes < 1 << (r.k() + 1));
            }
            XorOutcome::Infeasible(_) => prop_assert!(solutions.is_empty()),
        }
    }

    #[test]
    fn instance_text_round_trips(seed: u64) {
        let inst = random_instance(seed);
        let text = emit_instance(&inst);
        prop_assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn clause_status_is_monotone_under_extension(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(seed);
        let n = inst.n();
        let mut partial: Vec<Option<bool>> = vec![None; n];
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut before: Vec<ClauseStatus> = inst
            .clauses()
            .iter()
            .map(|c| c.eval_partial(&PartialAssignment::from_values(partial.clone())))
            .collect();
        for var in order {
            partial[var] = Some(rng.gen_bool(0.5));
            let p = PartialAssignment::from_values(partial.clone());
            for (c, prev) in inst.clauses().iter().zip(before.iter_mut()) {
                let now = c.eval_partial(&p);
                if *prev != ClauseStatus::Indeterminate {
                    prop_assert_eq!(now, *prev);
                }
                *prev = now;
            }
        }
        let full = BinVec::from_bools(&partial.iter().map(|v| v.unwrap()).collect::<Vec<_>>());
        for (c, status) in inst.clauses().iter().zip(before) {
            prop_assert_eq!(status == ClauseStatus::Satisfied, c.satisfied_by(&full));
        }
    }

    #[test]
    fn quadrupling_tree_sizes_adds_one_over_n(sizes in prop::collection::vec(1u64..1_000_000, 1..50), n in 1usize..100) {
        let g: f64 = gamma_estimate(&sizes, n).unwrap();
        let scaled: Vec<u64> = sizes.iter().map(|t| 4 * t).collect();
        let g4: f64 = gamma_estimate(&scaled, n).unwrap();
        prop_assert!((g4 - g - 1.0 / n as f64).abs() < 1e-12);
    }
}
