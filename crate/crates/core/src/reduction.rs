//! Parity relaxation of an Occupation instance and its solution space.
//!
//! A clause with `p` literals, `ν` of them negated, can only hold exactly `q`
//! true literals if the XOR of its variables equals `(ν + q) mod 2`. Stacking
//! these constraints gives `A x = b` over GF(2), whose solution set
//! `{ v₁ξ₁ ⊕ … ⊕ v_kξ_k ⊕ ξ̄ }` contains every solution of the instance.

use crate::gf2::{AffineSolution, BinMatrix, BinVec, Gf2Error, StandardForm};
use crate::instance::{Assignment, Instance};

/// `A x = b`, one row per clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    pub a: BinMatrix,
    pub b: BinVec,
}

pub fn build_linear_system(instance: &Instance) -> LinearSystem {
    let n = instance.n();
    let mut a = BinMatrix::zeros(instance.m(), n);
    let mut b = BinVec::zeros(instance.m());
    for (row, c) in instance.clauses().iter().enumerate() {
        for v in c.vars() {
            a.set(row, v, true);
        }
        b.set(row, (c.negations() + c.q()) % 2 == 1);
    }
    LinearSystem { a, b }
}

/// The instance's parity relaxation has no solution, so neither does the
/// instance. `witness` lists clauses whose rows XOR to `0 = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorInfeasible {
    pub witness: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XorOutcome {
    Feasible(Reduction),
    Infeasible(XorInfeasible),
}

impl XorOutcome {
    pub fn feasible(&self) -> Option<&Reduction> {
        match self {
            XorOutcome::Feasible(r) => Some(r),
            XorOutcome::Infeasible(_) => None,
        }
    }

    pub fn into_feasible(self) -> Option<Reduction> {
        match self {
            XorOutcome::Feasible(r) => Some(r),
            XorOutcome::Infeasible(_) => None,
        }
    }
}

/// Affine parameterisation of the parity-relaxed solution space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    kernel: Vec<BinVec>,
    xi_bar: BinVec,
    m_prime: usize,
    standard: StandardForm,
}

pub fn reduce(instance: &Instance) -> XorOutcome {
    let LinearSystem { a, b } = build_linear_system(instance);
    match a
        .solve_affine(&b)
        .expect("system dimensions agree by construction")
    {
        AffineSolution::Inconsistent { witness } => {
            XorOutcome::Infeasible(XorInfeasible { witness })
        }
        AffineSolution::Consistent {
            particular,
            kernel,
            rank,
        } => {
            let standard = StandardForm::new(&kernel, &particular)
                .expect("kernel basis from elimination is independent");
            XorOutcome::Feasible(Reduction {
                kernel,
                xi_bar: particular,
                m_prime: rank,
                standard,
            })
        }
    }
}

impl Reduction {
    /// Number of variables.
    pub fn n(&self) -> usize {
        self.xi_bar.len()
    }

    /// Dimension of the reduced space.
    pub fn k(&self) -> usize {
        self.kernel.len()
    }

    /// Rank of `A`, i.e. the number of independent clauses.
    pub fn m_prime(&self) -> usize {
        self.m_prime
    }

    pub fn kernel(&self) -> &[BinVec] {
        &self.kernel
    }

    pub fn xi_bar(&self) -> &BinVec {
        &self.xi_bar
    }

    pub fn standard(&self) -> &StandardForm {
        &self.standard
    }

    /// Same solution space, different choice of free coordinates.
    pub fn with_free_coordinates(&self, free: &[usize]) -> Result<Reduction, Gf2Error> {
        let standard = StandardForm::with_free_coordinates(&self.kernel, &self.xi_bar, free)?;
        Ok(Reduction {
            standard,
            ..self.clone()
        })
    }

    /// `x(v) = v₁ξ₁ ⊕ … ⊕ v_kξ_k ⊕ ξ̄`.
    pub fn expand(&self, v: &BinVec) -> Result<Assignment, Gf2Error> {
        if v.len() != self.k() {
            return Err(Gf2Error::LengthMismatch {
                expected: self.k(),
                found: v.len(),
            });
        }
        let mut x = self.xi_bar.clone();
        for i in v.ones() {
            x.xor_assign(&self.kernel[i]);
        }
        Ok(Assignment::new(x))
    }

    /// Expansion of the `index`-th point of the reduced space, `v` read
    /// most-significant coordinate first.
    pub fn expand_index(&self, index: u64) -> Assignment {
        let k = self.k();
        let mut x = self.xi_bar.clone();
        for (i, xi) in self.kernel.iter().enumerate() {
            if (index >> (k - 1 - i)) & 1 == 1 {
                x.xor_assign(xi);
            }
        }
        Assignment::new(x)
    }

    /// Expansion through the standard form: free block `v'`, dependent block
    /// `H v' ⊕ ξ̄'`, mapped back to the original variable order.
    pub fn expand_standard(&self, v_prime: &BinVec) -> Result<Assignment, Gf2Error> {
        self.standard.expand(v_prime).map(Assignment::new)
    }

    /// `Δk = k − (n − M) = M − M′`.
    pub fn kernel_excess(&self, instance: &Instance) -> usize {
        instance.m() - self.m_prime
    }
}

/// Free function form of [`Reduction::kernel_excess`].
pub fn kernel_excess(instance: &Instance, reduction: &Reduction) -> usize {
    reduction.kernel_excess(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Clause, Literal};
    use std::collections::BTreeSet;

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

    fn three_clause() -> Instance {
        Instance::new(
            5,
            vec![
                clause(&[1, -2, 3], 1),
                clause(&[2, -3, 4], 1),
                clause(&[3, 4, 5], 1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn linear_system_of_three_clause_example() {
        let sys = build_linear_system(&three_clause());
        assert_eq!(
            sys.a,
            BinMatrix::from_strs(&["11100", "01110", "00111"]).unwrap()
        );
        assert_eq!(sys.b, "001".parse().unwrap());
    }

    #[test]
    fn right_hand_side_formula() {
        let all_negated = Instance::new(3, vec![clause(&[-1, -2, -3], 1)]).unwrap();
        assert!(!build_linear_system(&all_negated).b.get(0));
        let node = Instance::new(3, vec![clause(&[1, 2, 3], 2)]).unwrap();
        assert!(!build_linear_system(&node).b.get(0));
    }

    #[test]
    fn reduction_of_three_clause_example() {
        let inst = three_clause();
        let r = reduce(&inst).into_feasible().unwrap();
        assert_eq!((r.k(), r.m_prime()), (2, 3));
        assert_eq!(r.kernel_excess(&inst), 0);
        let space: BTreeSet<_> = (0..4).map(|u| r.expand_index(u)).collect();
        assert_eq!(space.len(), 4);
        let sys = build_linear_system(&inst);
        // Brute force over all 32 assignments for A x = b.
        let xor_solutions: BTreeSet<_> = (0..32)
            .map(|u| BinVec::from_index(u, 5))
            .filter(|x| sys.a.matvec(x).unwrap() == sys.b)
            .map(Assignment::new)
            .collect();
        assert_eq!(space, xor_solutions);
        let standard: BTreeSet<_> = (0..4)
            .map(|u| r.expand_standard(&BinVec::from_index(u, 2)).unwrap())
            .collect();
        assert_eq!(standard, xor_solutions);
    }

    #[test]
    fn contradictory_parity_is_infeasible() {
        let inst = Instance::new(2, vec![clause(&[1, 2], 1), clause(&[1, 2], 2)]).unwrap();
        match reduce(&inst) {
            XorOutcome::Infeasible(w) => assert_eq!(w.witness, vec![0, 1]),
            XorOutcome::Feasible(_) => panic!("expected infeasible"),
        }
    }

    #[test]
    fn unconstrained_instance() {
        let inst = Instance::new(4, vec![]).unwrap();
        let r = reduce(&inst).into_feasible().unwrap();
        assert_eq!((r.k(), r.m_prime()), (4, 0));
        assert!(r.xi_bar().is_zero());
    }

    #[test]
    fn expansion_examples() {
        let r = reduce(&three_clause()).into_feasible().unwrap();
        assert_eq!(r.expand(&BinVec::zeros(2)).unwrap().values(), r.xi_bar());
        assert_eq!(
            r.expand(&BinVec::unit(2, 1)).unwrap().values(),
            &r.kernel()[1].xor(r.xi_bar())
        );
        assert!(r.expand(&BinVec::zeros(3)).is_err());
        assert!(r.expand_standard(&BinVec::zeros(1)).is_err());
    }

    #[test]
    fn duplicated_clause_has_positive_excess() {
        let inst = Instance::new(3, vec![clause(&[1, 2, 3], 1), clause(&[1, 2, 3], 1)]).unwrap();
        let r = reduce(&inst).into_feasible().unwrap();
        assert_eq!(kernel_excess(&inst, &r), 1);
    }

    #[test]
    fn unused_variables_are_free_directions() {
        let inst = Instance::new(4, vec![clause(&[1, 2], 1)]).unwrap();
        let r = reduce(&inst).into_feasible().unwrap();
        assert_eq!(r.k(), 3);
        assert!(r.kernel().iter().any(|xi| xi == &BinVec::unit(4, 3)));
    }
}
