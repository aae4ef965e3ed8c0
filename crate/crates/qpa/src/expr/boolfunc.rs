//! Input-closed boolean functions.
//!
//! A [`BoolFunc`] is a width-1 expression whose only free variables are input
//! bits, held as a boolean DAG so that cofactoring and Tseitin encoding are
//! structural walks. Smart constructors fold constants but perform no other
//! rewriting, so the cached syntactic bit set may strictly contain the
//! semantic support; the support analysis prunes the difference.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;
use std::sync::Arc;

use super::{BVExpr, BinOp, BitId, BoolOp, CmpOp, InputLayout, Node};
use crate::{Error, Result};

#[derive(Debug)]
pub(crate) enum BExpr {
    Const(bool),
    Bit(BitId),
    Not(Rc<BExpr>),
    And(Rc<BExpr>, Rc<BExpr>),
    Or(Rc<BExpr>, Rc<BExpr>),
    Xor(Rc<BExpr>, Rc<BExpr>),
}

pub(crate) fn b_const(v: bool) -> Rc<BExpr> {
    Rc::new(BExpr::Const(v))
}

pub(crate) fn b_bit(b: BitId) -> Rc<BExpr> {
    Rc::new(BExpr::Bit(b))
}

pub(crate) fn b_not(a: Rc<BExpr>) -> Rc<BExpr> {
    match &*a {
        BExpr::Const(v) => b_const(!v),
        BExpr::Not(inner) => inner.clone(),
        _ => Rc::new(BExpr::Not(a)),
    }
}

pub(crate) fn b_and(a: Rc<BExpr>, b: Rc<BExpr>) -> Rc<BExpr> {
    match (&*a, &*b) {
        (BExpr::Const(false), _) | (_, BExpr::Const(false)) => b_const(false),
        (BExpr::Const(true), _) => b,
        (_, BExpr::Const(true)) => a,
        _ => Rc::new(BExpr::And(a, b)),
    }
}

pub(crate) fn b_or(a: Rc<BExpr>, b: Rc<BExpr>) -> Rc<BExpr> {
    match (&*a, &*b) {
        (BExpr::Const(true), _) | (_, BExpr::Const(true)) => b_const(true),
        (BExpr::Const(false), _) => b,
        (_, BExpr::Const(false)) => a,
        _ => Rc::new(BExpr::Or(a, b)),
    }
}

pub(crate) fn b_xor(a: Rc<BExpr>, b: Rc<BExpr>) -> Rc<BExpr> {
    match (&*a, &*b) {
        (BExpr::Const(x), BExpr::Const(y)) => b_const(x ^ y),
        (BExpr::Const(false), _) => b,
        (_, BExpr::Const(false)) => a,
        (BExpr::Const(true), _) => b_not(b),
        (_, BExpr::Const(true)) => b_not(a),
        _ => Rc::new(BExpr::Xor(a, b)),
    }
}

fn b_xnor(a: Rc<BExpr>, b: Rc<BExpr>) -> Rc<BExpr> {
    b_not(b_xor(a, b))
}

/// if c then t else e
fn b_mux(c: Rc<BExpr>, t: Rc<BExpr>, e: Rc<BExpr>) -> Rc<BExpr> {
    match &*c {
        BExpr::Const(true) => t,
        BExpr::Const(false) => e,
        _ => b_or(b_and(c.clone(), t), b_and(b_not(c), e)),
    }
}

/// Assignment of truth values to input bits.
#[derive(Debug, Clone, Default)]
pub struct BitAssignment {
    set: BTreeSet<BitId>,
}

impl BitAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the assignment whose true bits are the 1-bits of `index` in the
    /// global bit ordering.
    pub fn from_index(total_bits: u32, index: u64) -> Self {
        let mut set = BTreeSet::new();
        for i in 0..total_bits {
            if index >> i & 1 == 1 {
                set.insert(BitId(i));
            }
        }
        BitAssignment { set }
    }

    pub fn set(&mut self, bit: BitId, value: bool) {
        if value {
            self.set.insert(bit);
        } else {
            self.set.remove(&bit);
        }
    }

    pub fn get(&self, bit: BitId) -> bool {
        self.set.contains(&bit)
    }
}

/// A boolean function of input bits: deterministic, total, pure.
#[derive(Clone)]
pub struct BoolFunc {
    root: Rc<BExpr>,
    bits: Arc<BTreeSet<BitId>>,
    layout: Arc<InputLayout>,
}

impl std::fmt::Debug for BoolFunc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<String> = self.bits.iter().map(|b| self.layout.bit_name(*b)).collect();
        write!(f, "BoolFunc over {{{}}}", names.join(", "))
    }
}

impl BoolFunc {
    /// Bit-blasts a width-1 input-only expression. Fails if the expression
    /// still references locals or mentions inputs absent from the layout.
    pub fn from_expr(e: &BVExpr, layout: &Arc<InputLayout>) -> Result<BoolFunc> {
        if e.width() != 1 {
            return Err(Error::Width(format!(
                "boolean function needs width 1, got {}",
                e.width()
            )));
        }
        let mut blaster = Blaster { layout, memo: HashMap::new() };
        let bits = blaster.blast(e)?;
        debug_assert_eq!(bits.len(), 1);
        Ok(BoolFunc::from_root(bits[0].clone(), layout))
    }

    pub(crate) fn from_root(root: Rc<BExpr>, layout: &Arc<InputLayout>) -> BoolFunc {
        let mut bits = BTreeSet::new();
        let mut seen = HashMap::new();
        collect_bits(&root, &mut bits, &mut seen);
        BoolFunc { root, bits: Arc::new(bits), layout: layout.clone() }
    }

    pub fn constant(value: bool, layout: &Arc<InputLayout>) -> BoolFunc {
        BoolFunc::from_root(b_const(value), layout)
    }

    /// Syntactically occurring input bits; a superset of the semantic support.
    pub fn bits(&self) -> &BTreeSet<BitId> {
        &self.bits
    }

    pub fn layout(&self) -> &Arc<InputLayout> {
        &self.layout
    }

    pub fn as_const(&self) -> Option<bool> {
        match &*self.root {
            BExpr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub(crate) fn root(&self) -> &Rc<BExpr> {
        &self.root
    }

    /// Evaluates under a total assignment to input bits.
    pub fn eval(&self, assignment: &BitAssignment) -> bool {
        let mut memo: HashMap<*const BExpr, bool> = HashMap::new();
        eval_b(&self.root, assignment, &mut memo)
    }

    /// The function with `bit` fixed to `value`; the bit no longer occurs.
    pub fn cofactor(&self, bit: BitId, value: bool) -> BoolFunc {
        if !self.bits.contains(&bit) {
            return self.clone();
        }
        let mut memo: HashMap<*const BExpr, Rc<BExpr>> = HashMap::new();
        let root = subst_bit(&self.root, bit, value, &mut memo);
        BoolFunc::from_root(root, &self.layout)
    }

    /// Conjunction of `self` and `other` (used for joint polarity formulas).
    pub fn and(&self, other: &BoolFunc) -> BoolFunc {
        BoolFunc::from_root(b_and(self.root.clone(), other.root.clone()), &self.layout)
    }

    pub fn negate(&self) -> BoolFunc {
        BoolFunc::from_root(b_not(self.root.clone()), &self.layout)
    }

    pub fn xor(&self, other: &BoolFunc) -> BoolFunc {
        BoolFunc::from_root(b_xor(self.root.clone(), other.root.clone()), &self.layout)
    }
}

fn collect_bits(
    e: &Rc<BExpr>,
    out: &mut BTreeSet<BitId>,
    seen: &mut HashMap<*const BExpr, ()>,
) {
    if seen.insert(Rc::as_ptr(e), ()).is_some() {
        return;
    }
    match &**e {
        BExpr::Const(_) => {}
        BExpr::Bit(b) => {
            out.insert(*b);
        }
        BExpr::Not(a) => collect_bits(a, out, seen),
        BExpr::And(a, b) | BExpr::Or(a, b) | BExpr::Xor(a, b) => {
            collect_bits(a, out, seen);
            collect_bits(b, out, seen);
        }
    }
}

fn eval_b(e: &Rc<BExpr>, a: &BitAssignment, memo: &mut HashMap<*const BExpr, bool>) -> bool {
    if let Some(&v) = memo.get(&Rc::as_ptr(e)) {
        return v;
    }
    let v = match &**e {
        BExpr::Const(c) => *c,
        BExpr::Bit(b) => a.get(*b),
        BExpr::Not(x) => !eval_b(x, a, memo),
        BExpr::And(x, y) => eval_b(x, a, memo) && eval_b(y, a, memo),
        BExpr::Or(x, y) => eval_b(x, a, memo) || eval_b(y, a, memo),
        BExpr::Xor(x, y) => eval_b(x, a, memo) ^ eval_b(y, a, memo),
    };
    memo.insert(Rc::as_ptr(e), v);
    v
}

fn subst_bit(
    e: &Rc<BExpr>,
    bit: BitId,
    value: bool,
    memo: &mut HashMap<*const BExpr, Rc<BExpr>>,
) -> Rc<BExpr> {
    if let Some(v) = memo.get(&Rc::as_ptr(e)) {
        return v.clone();
    }
    let out = match &**e {
        BExpr::Const(_) => e.clone(),
        BExpr::Bit(b) => {
            if *b == bit {
                b_const(value)
            } else {
                e.clone()
            }
        }
        BExpr::Not(a) => b_not(subst_bit(a, bit, value, memo)),
        BExpr::And(a, b) => b_and(subst_bit(a, bit, value, memo), subst_bit(b, bit, value, memo)),
        BExpr::Or(a, b) => b_or(subst_bit(a, bit, value, memo), subst_bit(b, bit, value, memo)),
        BExpr::Xor(a, b) => b_xor(subst_bit(a, bit, value, memo), subst_bit(b, bit, value, memo)),
    };
    memo.insert(Rc::as_ptr(e), out.clone());
    out
}

/// Word-level blaster: maps each bitvector node to one boolean circuit per
/// result bit, memoized over the expression DAG.
struct Blaster<'a> {
    layout: &'a Arc<InputLayout>,
    memo: HashMap<*const Node, Rc<Vec<Rc<BExpr>>>>,
}

impl<'a> Blaster<'a> {
    fn blast(&mut self, e: &BVExpr) -> Result<Rc<Vec<Rc<BExpr>>>> {
        if let Some(v) = self.memo.get(&e.ptr()) {
            return Ok(v.clone());
        }
        let w = e.width() as usize;
        let bits: Vec<Rc<BExpr>> = match &*e.node {
            Node::Input { name } => {
                let var = self.layout.var(name).ok_or_else(|| {
                    Error::UnboundVariable(name.clone())
                })?;
                if var.width != e.width() {
                    return Err(Error::Width(format!(
                        "input `{name}` used at width {}, declared {}",
                        e.width(),
                        var.width
                    )));
                }
                (0..var.width).map(|i| b_bit(BitId(var.offset + i))).collect()
            }
            Node::Local { name } => return Err(Error::UnboundVariable(name.clone())),
            Node::Const { value } => (0..w).map(|i| b_const(value >> i & 1 == 1)).collect(),
            Node::Not(a) => self.blast(a)?.iter().map(|b| b_not(b.clone())).collect(),
            Node::Bin { op, lhs, rhs } => {
                let a = self.blast(lhs)?;
                let b = self.blast(rhs)?;
                match op {
                    BinOp::And => zip_with(&a, &b, b_and),
                    BinOp::Or => zip_with(&a, &b, b_or),
                    BinOp::Xor => zip_with(&a, &b, b_xor),
                    BinOp::Add => add_bits(&a, &b, b_const(false)),
                    BinOp::Sub => {
                        let nb: Vec<_> = b.iter().map(|x| b_not(x.clone())).collect();
                        add_bits(&a, &nb, b_const(true))
                    }
                    BinOp::Mul => mul_bits(&a, &b),
                    BinOp::Shl => shift_bits(&a, rhs, &b, true)?,
                    BinOp::Shr => shift_bits(&a, rhs, &b, false)?,
                    BinOp::Rem => rem_bits(&a, &b),
                }
            }
            Node::Cmp { op, lhs, rhs } => {
                let a = self.blast(lhs)?;
                let b = self.blast(rhs)?;
                let bit = match op {
                    CmpOp::Eq => eq_bit(&a, &b),
                    CmpOp::Ne => b_not(eq_bit(&a, &b)),
                    CmpOp::Ult => ult_bit(&a, &b),
                };
                vec![bit]
            }
            Node::BoolBin { op, lhs, rhs } => {
                let a = self.blast(lhs)?;
                let b = self.blast(rhs)?;
                let bit = match op {
                    BoolOp::And => b_and(a[0].clone(), b[0].clone()),
                    BoolOp::Or => b_or(a[0].clone(), b[0].clone()),
                };
                vec![bit]
            }
            Node::BoolNot(a) => {
                let a = self.blast(a)?;
                vec![b_not(a[0].clone())]
            }
        };
        debug_assert_eq!(bits.len(), w);
        let bits = Rc::new(bits);
        self.memo.insert(e.ptr(), bits.clone());
        Ok(bits)
    }
}

fn zip_with(
    a: &[Rc<BExpr>],
    b: &[Rc<BExpr>],
    f: impl Fn(Rc<BExpr>, Rc<BExpr>) -> Rc<BExpr>,
) -> Vec<Rc<BExpr>> {
    a.iter().zip(b).map(|(x, y)| f(x.clone(), y.clone())).collect()
}

/// Ripple-carry addition truncated to the operand width.
fn add_bits(a: &[Rc<BExpr>], b: &[Rc<BExpr>], carry_in: Rc<BExpr>) -> Vec<Rc<BExpr>> {
    let mut carry = carry_in;
    let mut out = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        let xy = b_xor(x.clone(), y.clone());
        out.push(b_xor(xy.clone(), carry.clone()));
        // carry' = (x & y) | (carry & (x ^ y))
        carry = b_or(b_and(x.clone(), y.clone()), b_and(carry, xy));
    }
    out
}

/// Schoolbook shift-and-add product, truncated to the operand width.
fn mul_bits(a: &[Rc<BExpr>], b: &[Rc<BExpr>]) -> Vec<Rc<BExpr>> {
    let w = a.len();
    let mut acc: Vec<Rc<BExpr>> = (0..w).map(|_| b_const(false)).collect();
    for (j, bj) in b.iter().enumerate() {
        if let BExpr::Const(false) = &**bj {
            continue;
        }
        let row: Vec<Rc<BExpr>> = (0..w)
            .map(|i| {
                if i < j {
                    b_const(false)
                } else {
                    b_and(a[i - j].clone(), bj.clone())
                }
            })
            .collect();
        acc = add_bits(&acc, &row, b_const(false));
    }
    acc
}

/// Shift by a (possibly symbolic) amount; shifts of `>= width` produce zero.
fn shift_bits(
    a: &[Rc<BExpr>],
    amount_expr: &BVExpr,
    amount_bits: &[Rc<BExpr>],
    left: bool,
) -> Result<Vec<Rc<BExpr>>> {
    let w = a.len();
    // Constant shift amounts are just a rewiring.
    if let Node::Const { value } = &*amount_expr.node {
        let s = *value;
        let out = (0..w)
            .map(|i| {
                let src = if left { (i as i64) - s as i64 } else { i as i64 + s as i64 };
                if s >= w as u64 || src < 0 || src >= w as i64 {
                    b_const(false)
                } else {
                    a[src as usize].clone()
                }
            })
            .collect();
        return Ok(out);
    }
    // Barrel shifter over the low stages; any higher shift bit forces zero.
    let stages = 64 - (w as u64 - 1).leading_zeros(); // ceil(log2 w), w >= 1
    let stages = stages.max(1);
    let mut cur: Vec<Rc<BExpr>> = a.to_vec();
    for k in 0..stages.min(amount_bits.len() as u32) {
        let sel = amount_bits[k as usize].clone();
        let s = 1usize << k;
        cur = (0..w)
            .map(|i| {
                let src = if left { i.checked_sub(s) } else { (i + s < w).then_some(i + s) };
                let shifted = src.map_or_else(|| b_const(false), |j| cur[j].clone());
                b_mux(sel.clone(), shifted, cur[i].clone())
            })
            .collect();
    }
    // Zero unless every shift bit at or above 2^stages is clear, and for
    // non-power-of-two widths unless the in-range amount is < w.
    let mut oversize = b_const(false);
    for bit in amount_bits.iter().skip(stages as usize) {
        oversize = b_or(oversize, bit.clone());
    }
    if !w.is_power_of_two() {
        let low = &amount_bits[..stages.min(amount_bits.len() as u32) as usize];
        let w_bits: Vec<Rc<BExpr>> =
            (0..low.len()).map(|i| b_const(w >> i & 1 == 1)).collect();
        let ge_w = b_not(ult_bit(low, &w_bits));
        oversize = b_or(oversize, ge_w);
    }
    Ok(cur
        .into_iter()
        .map(|bit| b_and(b_not(oversize.clone()), bit))
        .collect())
}

fn eq_bit(a: &[Rc<BExpr>], b: &[Rc<BExpr>]) -> Rc<BExpr> {
    let mut acc = b_const(true);
    for (x, y) in a.iter().zip(b) {
        acc = b_and(acc, b_xnor(x.clone(), y.clone()));
    }
    acc
}

/// Unsigned a < b, built LSB-up: lt' = (!a_i & b_i) | ((a_i == b_i) & lt).
fn ult_bit(a: &[Rc<BExpr>], b: &[Rc<BExpr>]) -> Rc<BExpr> {
    let mut lt = b_const(false);
    for (x, y) in a.iter().zip(b) {
        lt = b_or(
            b_and(b_not(x.clone()), y.clone()),
            b_and(b_xnor(x.clone(), y.clone()), lt),
        );
    }
    lt
}

/// Restoring division remainder; `a % 0 = a`, matching concrete evaluation.
fn rem_bits(a: &[Rc<BExpr>], b: &[Rc<BExpr>]) -> Vec<Rc<BExpr>> {
    let w = a.len();
    // One extra working bit so the shifted remainder never overflows.
    let bx: Vec<Rc<BExpr>> = b.iter().cloned().chain([b_const(false)]).collect();
    let mut r: Vec<Rc<BExpr>> = (0..=w).map(|_| b_const(false)).collect();
    for i in (0..w).rev() {
        // r = (r << 1) | a_i
        let mut shifted = Vec::with_capacity(w + 1);
        shifted.push(a[i].clone());
        shifted.extend(r[..w].iter().cloned());
        // ge = shifted >= b  (with b == 0 this is always true and r - 0 = r)
        let ge = b_not(ult_bit(&shifted, &bx));
        let nb: Vec<_> = bx.iter().map(|x| b_not(x.clone())).collect();
        let diff = add_bits(&shifted, &nb, b_const(true));
        r = shifted
            .iter()
            .zip(&diff)
            .map(|(keep, sub)| b_mux(ge.clone(), sub.clone(), keep.clone()))
            .collect();
    }
    r.truncate(w);
    r
}
