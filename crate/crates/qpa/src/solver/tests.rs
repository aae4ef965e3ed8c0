use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::expr::tests::{extends_to_model, random_condition};
use crate::expr::{
    close_over_inputs, BVExpr, BinOp, BitAssignment, BoolFunc, CmpOp, CnfFormula, InputLayout,
    Lit, Var,
};

fn layout(decls: &[(&str, u32)]) -> Arc<InputLayout> {
    let decls: Vec<(Arc<str>, u32)> =
        decls.iter().map(|(n, w)| (Arc::from(*n), *w)).collect();
    Arc::new(InputLayout::new(&decls).unwrap())
}

fn func(cond: &BVExpr, lay: &Arc<InputLayout>) -> BoolFunc {
    close_over_inputs(cond, &BTreeMap::new(), lay).unwrap()
}

fn brute_count(f: &BoolFunc, vars: &BTreeSet<crate::expr::BitId>) -> BigUint {
    // Truth-table oracle over `vars`, independent of the CNF machinery.
    let vars: Vec<_> = vars.iter().copied().collect();
    let mut n = BigUint::zero();
    for idx in 0..1u64 << vars.len() {
        let mut a = BitAssignment::new();
        for (i, bit) in vars.iter().enumerate() {
            a.set(*bit, idx >> i & 1 == 1);
        }
        if f.eval(&a) {
            n += 1u32;
        }
    }
    n
}

#[test]
fn empty_clause_set_is_sat() {
    let lay = layout(&[("e", 2)]);
    let cnf = CnfFormula::new(0, vec![], BTreeMap::new(), lay);
    assert!(Solver::default().is_sat(&cnf).unwrap());
}

#[test]
fn contradictory_units_are_unsat() {
    let lay = layout(&[("e", 2)]);
    let cnf = CnfFormula::new(
        1,
        vec![vec![Lit::pos(Var(1))], vec![Lit::neg(Var(1))]],
        BTreeMap::new(),
        lay,
    );
    assert!(!Solver::default().is_sat(&cnf).unwrap());
}

#[test]
fn modexp_branch_condition_is_sat() {
    let lay = layout(&[("e", 2)]);
    let e = BVExpr::input("e", 2);
    let one = BVExpr::constant(1, 2).unwrap();
    let cond =
        BVExpr::cmp(CmpOp::Eq, BVExpr::bin(BinOp::And, e, one.clone()).unwrap(), one).unwrap();
    let f = func(&cond, &lay);
    assert!(Solver::default().is_sat(&f.bit_blast()).unwrap());
}

#[test]
fn equiv_reflexive_and_negation() {
    let lay = layout(&[("b", 2)]);
    let solver = Solver::default();
    let b = BVExpr::input("b", 2);
    let one = BVExpr::constant(1, 2).unwrap();
    let b0 =
        BVExpr::cmp(CmpOp::Eq, BVExpr::bin(BinOp::And, b, one.clone()).unwrap(), one).unwrap();
    let f = func(&b0, &lay);
    assert!(solver.equiv(&f, &f).unwrap());
    assert!(!solver.equiv(&f, &f.negate()).unwrap());
}

#[test]
fn cofactors_wrt_irrelevant_bit_are_equivalent() {
    let lay = layout(&[("e", 2)]);
    let e = BVExpr::input("e", 2);
    let one = BVExpr::constant(1, 2).unwrap();
    let cond =
        BVExpr::cmp(CmpOp::Eq, BVExpr::bin(BinOp::And, e, one.clone()).unwrap(), one).unwrap();
    let f = func(&cond, &lay);
    let e1 = lay.bit("e", 1).unwrap();
    let solver = Solver::default();
    assert!(solver.equiv(&f.cofactor(e1, false), &f.cofactor(e1, true)).unwrap());
    let e0 = lay.bit("e", 0).unwrap();
    assert!(!solver.equiv(&f.cofactor(e0, false), &f.cofactor(e0, true)).unwrap());
}

#[test]
fn count_constant_true_over_k_vars() {
    let lay = layout(&[("x", 6)]);
    let f = BoolFunc::constant(true, &lay);
    let vars: BTreeSet<_> = lay.all_bits().collect();
    let r = Solver::default().model_count(&f, &vars).unwrap();
    assert_eq!(r.count, BigUint::from(64u32));
}

#[test]
fn count_single_bit_condition_is_one() {
    let lay = layout(&[("e", 8)]);
    let e = BVExpr::input("e", 8);
    let one = BVExpr::constant(1, 8).unwrap();
    let cond =
        BVExpr::cmp(CmpOp::Eq, BVExpr::bin(BinOp::And, e, one.clone()).unwrap(), one).unwrap();
    let f = func(&cond, &lay);
    let vars: BTreeSet<_> = f.bits().clone();
    assert_eq!(vars.len(), 1);
    let r = Solver::default().model_count(&f, &vars).unwrap();
    assert_eq!(r.count, BigUint::from(1u32));
}

#[test]
fn count_disjunction_is_three() {
    let lay = layout(&[("b", 2)]);
    let b = BVExpr::input("b", 2);
    let zero = BVExpr::constant(0, 2).unwrap();
    // b != 0  <=>  b0 | b1
    let cond = BVExpr::cmp(CmpOp::Ne, b, zero).unwrap();
    let f = func(&cond, &lay);
    let vars: BTreeSet<_> = lay.all_bits().collect();
    let r = Solver::default().model_count(&f, &vars).unwrap();
    assert_eq!(r.count, BigUint::from(3u32));
}

#[test]
fn count_tolerates_irrelevant_stray_bits() {
    // (x ^ x) has syntactic bits but no semantic support, so counting over a
    // var set that excludes them must still succeed.
    let lay = layout(&[("x", 3), ("y", 2)]);
    let x = BVExpr::input("x", 3);
    let y = BVExpr::input("y", 2);
    let xx = BVExpr::bin(BinOp::Xor, x.clone(), x).unwrap();
    let lhs = BVExpr::cmp(CmpOp::Eq, xx, BVExpr::constant(0, 3).unwrap()).unwrap();
    let rhs = BVExpr::cmp(CmpOp::Eq, y, BVExpr::constant(2, 2).unwrap()).unwrap();
    let cond = BVExpr::bool_bin(crate::expr::BoolOp::And, lhs, rhs).unwrap();
    let f = func(&cond, &lay);
    let vars: BTreeSet<_> = lay.bits_of("y").unwrap().collect();
    assert!(!f.bits().is_subset(&vars), "test needs stray syntactic bits");
    let r = Solver::default().model_count(&f, &vars).unwrap();
    assert_eq!(r.count, BigUint::from(1u32));
}

#[test]
fn count_rejects_relevant_bit_outside_vars() {
    let lay = layout(&[("x", 2)]);
    let x = BVExpr::input("x", 2);
    let cond = BVExpr::cmp(CmpOp::Eq, x, BVExpr::constant(3, 2).unwrap()).unwrap();
    let f = func(&cond, &lay);
    let vars: BTreeSet<_> = [lay.bit("x", 0).unwrap()].into();
    assert!(matches!(
        Solver::default().model_count(&f, &vars),
        Err(Error::SupportViolation { .. })
    ));
}

#[test]
fn count_matches_truth_table_on_random_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let lay = layout(&[("x", 7), ("y", 7)]);
    let solver = Solver::default();
    for _ in 0..50 {
        let cond = random_condition(&mut rng, &lay, 2);
        let f = func(&cond, &lay);
        let vars: BTreeSet<_> = lay.all_bits().collect();
        let got = solver.model_count(&f, &vars).unwrap();
        assert_eq!(got.count, brute_count(&f, &vars), "on {cond}");
        // is_sat <=> count > 0
        let sat = match f.as_const() {
            Some(c) => c,
            None => solver.is_sat(&f.bit_blast()).unwrap(),
        };
        assert_eq!(sat, !got.count.is_zero());
    }
}

#[test]
fn dpll_and_enumeration_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let lay = layout(&[("x", 6), ("y", 6)]);
    let enumerating = Solver::default();
    let dpll = Solver::new(SolverConfig { enumerate_threshold: 0, ..Default::default() });
    for _ in 0..40 {
        let cond = random_condition(&mut rng, &lay, 2);
        let f = func(&cond, &lay);
        let vars: BTreeSet<_> = lay.all_bits().collect();
        let a = enumerating.model_count(&f, &vars).unwrap();
        let b = dpll.model_count(&f, &vars).unwrap();
        assert_eq!(a.count, b.count, "on {cond}");
    }
}

#[test]
fn counting_is_deterministic_per_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let lay = layout(&[("x", 8)]);
    let cond = random_condition(&mut rng, &lay, 3);
    let f = func(&cond, &lay);
    let vars: BTreeSet<_> = lay.all_bits().collect();
    for seed in [0u64, 1, 99] {
        let solver =
            Solver::new(SolverConfig { seed, enumerate_threshold: 0, ..Default::default() });
        let a = solver.model_count(&f, &vars).unwrap();
        let b = solver.model_count(&f, &vars).unwrap();
        assert_eq!(a.count, b.count);
        assert_eq!(a.decisions, b.decisions);
    }
}

#[test]
fn decision_budget_reports_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let lay = layout(&[("x", 10), ("y", 10)]);
    let cond = random_condition(&mut rng, &lay, 3);
    let f = func(&cond, &lay);
    if f.as_const().is_some() {
        return; // folded to a constant; nothing to search
    }
    let vars: BTreeSet<_> = lay.all_bits().collect();
    let solver = Solver::new(SolverConfig { max_decisions: 1, ..Default::default() });
    assert!(matches!(solver.model_count(&f, &vars), Err(Error::Budget(_))));
}

#[test]
fn dimacs_unit_clause() {
    let lay = layout(&[("x", 1)]);
    let x = BVExpr::input("x", 1);
    let cond = BVExpr::cmp(CmpOp::Eq, x, BVExpr::constant(1, 1).unwrap()).unwrap();
    let f = func(&cond, &lay);
    let mut out = Vec::new();
    export_dimacs(&f.bit_blast(), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text, "c var x[0] 1\np cnf 1 1\n1 0\n");
}

#[test]
fn dimacs_empty_formula() {
    let lay = layout(&[("x", 1)]);
    let f = BoolFunc::constant(true, &lay);
    let mut out = Vec::new();
    export_dimacs(&f.bit_blast(), &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "p cnf 0 0\n");
}

/// Minimal DIMACS reader used to round-trip exports; counts models of the
/// parsed text by enumerating input assignments and unit-propagating the
/// auxiliaries, fully independent of the solver's search.
fn count_dimacs(text: &str) -> BigUint {
    let mut input_vars: Vec<u32> = Vec::new();
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut num_vars = 0u32;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("c var ") {
            let idx: u32 = rest.split_whitespace().nth(1).unwrap().parse().unwrap();
            input_vars.push(idx);
        } else if let Some(rest) = line.strip_prefix("p cnf ") {
            num_vars = rest.split_whitespace().next().unwrap().parse().unwrap();
        } else if !line.is_empty() {
            let lits: Vec<i32> =
                line.split_whitespace().map(|t| t.parse().unwrap()).collect();
            assert_eq!(*lits.last().unwrap(), 0);
            clauses.push(
                lits[..lits.len() - 1]
                    .iter()
                    .map(|&v| {
                        if v > 0 {
                            Lit::pos(Var(v as u32))
                        } else {
                            Lit::neg(Var((-v) as u32))
                        }
                    })
                    .collect(),
            );
        }
    }
    let mut count = BigUint::zero();
    for idx in 0..1u64 << input_vars.len() {
        let mut assign: Vec<Option<bool>> = vec![None; num_vars as usize + 1];
        for (i, v) in input_vars.iter().enumerate() {
            assign[*v as usize] = Some(idx >> i & 1 == 1);
        }
        let mut ok = true;
        loop {
            let mut changed = false;
            for c in &clauses {
                let mut unass = None;
                let mut n_unass = 0;
                let mut sat = false;
                for l in c {
                    match assign[l.var().0 as usize] {
                        Some(v) if v == l.is_positive() => {
                            sat = true;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            n_unass += 1;
                            unass = Some(*l);
                        }
                    }
                }
                if sat {
                    continue;
                }
                match n_unass {
                    0 => {
                        ok = false;
                        break;
                    }
                    1 => {
                        let l = unass.unwrap();
                        assign[l.var().0 as usize] = Some(l.is_positive());
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !ok || !changed {
                break;
            }
        }
        if ok {
            count += 1u32;
        }
    }
    count
}

#[test]
fn dimacs_round_trip_matches_internal_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let lay = layout(&[("x", 5), ("y", 3)]);
    let solver = Solver::default();
    let mut nontrivial = 0;
    for _ in 0..20 {
        let cond = random_condition(&mut rng, &lay, 2);
        let f = func(&cond, &lay);
        if f.as_const().is_some() {
            continue;
        }
        nontrivial += 1;
        let cnf = f.bit_blast();
        let mut out = Vec::new();
        export_dimacs(&cnf, &mut out).unwrap();
        let external = count_dimacs(&String::from_utf8(out).unwrap());
        let internal = solver.model_count(&f, f.bits()).unwrap();
        assert_eq!(external, internal.count, "on {cond}");
    }
    assert!(nontrivial >= 10);
}

#[test]
fn exported_models_extend_assignments() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let lay = layout(&[("x", 4)]);
    for _ in 0..20 {
        let cond = random_condition(&mut rng, &lay, 2);
        let f = func(&cond, &lay);
        if f.as_const().is_some() {
            continue;
        }
        let cnf = f.bit_blast();
        for idx in 0..16u64 {
            let a = BitAssignment::from_index(4, idx);
            assert_eq!(extends_to_model(&cnf, &a), f.eval(&a));
        }
    }
}
