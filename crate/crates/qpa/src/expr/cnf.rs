//! Definitional CNF for boolean functions.
//!
//! Every gate of the circuit gets an auxiliary variable constrained in both
//! directions, so each assignment of the input-bit variables extends to
//! exactly one total model iff the function is true there. Total model count
//! therefore equals the count of satisfying input assignments, which is what
//! lets an unprojected counter answer projected queries.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;
use std::sync::Arc;

use super::boolfunc::{BExpr, BoolFunc};
use super::{BitId, InputLayout};

/// 1-based CNF variable index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

/// Signed literal: positive or negative occurrence of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(i32);

impl Lit {
    pub fn pos(v: Var) -> Lit {
        Lit(v.0 as i32)
    }

    pub fn neg(v: Var) -> Lit {
        Lit(-(v.0 as i32))
    }

    pub fn var(self) -> Var {
        Var(self.0.unsigned_abs())
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn negated(self) -> Lit {
        Lit(-self.0)
    }

    /// DIMACS integer form.
    pub fn dimacs(self) -> i32 {
        self.0
    }
}

/// A CNF formula with its variables partitioned into input-bit variables and
/// auxiliary (definitional) variables.
#[derive(Debug, Clone)]
pub struct CnfFormula {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
    /// Input bit -> CNF variable, in ascending bit order.
    pub inputs: BTreeMap<BitId, Var>,
    layout: Arc<InputLayout>,
}

impl CnfFormula {
    /// Builds a formula directly; useful for hand-written clause sets.
    pub fn new(
        num_vars: u32,
        clauses: Vec<Vec<Lit>>,
        inputs: BTreeMap<BitId, Var>,
        layout: Arc<InputLayout>,
    ) -> CnfFormula {
        CnfFormula { num_vars, clauses, inputs, layout }
    }

    pub fn layout(&self) -> &Arc<InputLayout> {
        &self.layout
    }

    pub fn input_var(&self, bit: BitId) -> Option<Var> {
        self.inputs.get(&bit).copied()
    }

    pub fn aux_vars(&self) -> u32 {
        self.num_vars - self.inputs.len() as u32
    }

    /// True when the formula is the canonical encoding of `false` (contains
    /// an empty clause).
    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(|c| c.is_empty())
    }
}

impl BoolFunc {
    /// Tseitin encoding. Constant true yields the empty clause set; constant
    /// false yields a single empty clause.
    pub fn bit_blast(&self) -> CnfFormula {
        let layout = self.layout().clone();
        match &**self.root() {
            BExpr::Const(true) => {
                return CnfFormula {
                    num_vars: 0,
                    clauses: vec![],
                    inputs: BTreeMap::new(),
                    layout,
                }
            }
            BExpr::Const(false) => {
                return CnfFormula {
                    num_vars: 0,
                    clauses: vec![vec![]],
                    inputs: BTreeMap::new(),
                    layout,
                }
            }
            _ => {}
        }
        // Input variables first, in bit order, so numbering is stable.
        let mut inputs = BTreeMap::new();
        let mut next = 0u32;
        for bit in self.bits() {
            next += 1;
            inputs.insert(*bit, Var(next));
        }
        let mut enc = Encoder {
            next,
            clauses: Vec::new(),
            inputs: &inputs,
            memo: HashMap::new(),
        };
        let root = enc.encode(self.root());
        enc.clauses.push(vec![root]);
        CnfFormula { num_vars: enc.next, clauses: enc.clauses, inputs, layout }
    }
}

struct Encoder<'a> {
    next: u32,
    clauses: Vec<Vec<Lit>>,
    inputs: &'a BTreeMap<BitId, Var>,
    memo: HashMap<*const BExpr, Lit>,
}

impl Encoder<'_> {
    fn fresh(&mut self) -> Var {
        self.next += 1;
        Var(self.next)
    }

    fn encode(&mut self, e: &Rc<BExpr>) -> Lit {
        if let Some(&l) = self.memo.get(&Rc::as_ptr(e)) {
            return l;
        }
        let lit = match &**e {
            // Constants below the root are folded away by construction.
            BExpr::Const(_) => unreachable!("constant below circuit root"),
            BExpr::Bit(b) => Lit::pos(self.inputs[b]),
            BExpr::Not(a) => self.encode(a).negated(),
            BExpr::And(a, b) => {
                let (la, lb) = (self.encode(a), self.encode(b));
                let g = Lit::pos(self.fresh());
                self.clauses.push(vec![g.negated(), la]);
                self.clauses.push(vec![g.negated(), lb]);
                self.clauses.push(vec![g, la.negated(), lb.negated()]);
                g
            }
            BExpr::Or(a, b) => {
                let (la, lb) = (self.encode(a), self.encode(b));
                let g = Lit::pos(self.fresh());
                self.clauses.push(vec![g.negated(), la, lb]);
                self.clauses.push(vec![g, la.negated()]);
                self.clauses.push(vec![g, lb.negated()]);
                g
            }
            BExpr::Xor(a, b) => {
                let (la, lb) = (self.encode(a), self.encode(b));
                let g = Lit::pos(self.fresh());
                self.clauses.push(vec![g.negated(), la, lb]);
                self.clauses.push(vec![g.negated(), la.negated(), lb.negated()]);
                self.clauses.push(vec![g, la, lb.negated()]);
                self.clauses.push(vec![g, la.negated(), lb]);
                g
            }
        };
        self.memo.insert(Rc::as_ptr(e), lit);
        lit
    }
}
