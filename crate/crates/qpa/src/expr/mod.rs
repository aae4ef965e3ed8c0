//! Fixed-width bitvector expressions.
//!
//! [`BVExpr`] is the language of branch conditions and assignments: modular
//! arithmetic and bitwise operators over widths up to 64 bits, unsigned
//! comparisons yielding width-1 results, and boolean connectives over those.
//! Expressions are immutable DAGs (`Rc` children), so substituting a shared
//! subterm never duplicates work.
//!
//! A width-1 expression whose free variables are all input bits becomes a
//! [`BoolFunc`], which supports cofactoring and bit-blasting to CNF.

mod boolfunc;
mod cnf;

pub use boolfunc::{BitAssignment, BoolFunc};
pub use cnf::{CnfFormula, Lit, Var};

use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use crate::{Error, Result};

/// Maximum declared width of a single variable.
pub const MAX_WIDTH: u32 = 64;

/// A single input bit, identified by its index in the program's global input
/// bit ordering (see [`InputLayout`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitId(pub u32);

impl fmt::Display for BitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// The input bit set `I`: declared input variables laid out as a flat bit
/// vector, least significant bit of the first declaration first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputLayout {
    vars: Vec<InputVar>,
    total_bits: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputVar {
    pub name: Arc<str>,
    pub width: u32,
    pub offset: u32,
}

impl InputLayout {
    pub fn new(decls: &[(Arc<str>, u32)]) -> Result<Self> {
        let mut vars = Vec::with_capacity(decls.len());
        let mut offset = 0u32;
        for (name, width) in decls {
            if *width == 0 || *width > MAX_WIDTH {
                return Err(Error::Width(format!(
                    "input `{name}` declared with width {width}; must be 1..={MAX_WIDTH}"
                )));
            }
            vars.push(InputVar { name: name.clone(), width: *width, offset });
            offset = offset
                .checked_add(*width)
                .ok_or_else(|| Error::Width("total input width overflows".into()))?;
        }
        Ok(InputLayout { vars, total_bits: offset })
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn vars(&self) -> &[InputVar] {
        &self.vars
    }

    pub fn var(&self, name: &str) -> Option<&InputVar> {
        self.vars.iter().find(|v| &*v.name == name)
    }

    /// Global id of bit `bit` of input `name`.
    pub fn bit(&self, name: &str, bit: u32) -> Option<BitId> {
        let v = self.var(name)?;
        (bit < v.width).then(|| BitId(v.offset + bit))
    }

    /// All bit ids of input `name`.
    pub fn bits_of(&self, name: &str) -> Option<impl Iterator<Item = BitId>> {
        let v = self.var(name)?;
        Some((v.offset..v.offset + v.width).map(BitId))
    }

    /// Human-readable name such as `e[3]` for a global bit id.
    pub fn bit_name(&self, bit: BitId) -> String {
        for v in &self.vars {
            if bit.0 >= v.offset && bit.0 < v.offset + v.width {
                return format!("{}[{}]", v.name, bit.0 - v.offset);
            }
        }
        format!("{bit}")
    }

    pub fn all_bits(&self) -> impl Iterator<Item = BitId> {
        (0..self.total_bits).map(BitId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    And,
    Or,
    Xor,
    Add,
    Sub,
    Mul,
    Shl,
    Shr,
    Rem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Ult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug)]
enum Node {
    /// Reference to a declared input variable.
    Input { name: Arc<str> },
    /// Reference to a local (program-defined) variable.
    Local { name: Arc<str> },
    Const { value: u64 },
    Not(BVExpr),
    Bin { op: BinOp, lhs: BVExpr, rhs: BVExpr },
    Cmp { op: CmpOp, lhs: BVExpr, rhs: BVExpr },
    BoolBin { op: BoolOp, lhs: BVExpr, rhs: BVExpr },
    BoolNot(BVExpr),
}

/// A fixed-width bitvector expression. Every node has a definite width;
/// arithmetic wraps at that width, shifts by `>= width` yield 0, and `%` by
/// zero yields the dividend (SMT-LIB convention).
#[derive(Clone)]
pub struct BVExpr {
    node: Rc<Node>,
    width: u32,
}

impl fmt::Debug for BVExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BVExpr({self}, width {})", self.width)
    }
}

fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl BVExpr {
    pub fn input(name: impl Into<Arc<str>>, width: u32) -> BVExpr {
        BVExpr { node: Rc::new(Node::Input { name: name.into() }), width }
    }

    pub fn local(name: impl Into<Arc<str>>, width: u32) -> BVExpr {
        BVExpr { node: Rc::new(Node::Local { name: name.into() }), width }
    }

    pub fn constant(value: u64, width: u32) -> Result<BVExpr> {
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::Width(format!("constant width {width} out of range")));
        }
        if value & !mask(width) != 0 {
            return Err(Error::ConstantRange { value, width });
        }
        Ok(BVExpr { node: Rc::new(Node::Const { value }), width })
    }

    pub fn not(a: BVExpr) -> BVExpr {
        let width = a.width;
        BVExpr { node: Rc::new(Node::Not(a)), width }
    }

    pub fn bin(op: BinOp, lhs: BVExpr, rhs: BVExpr) -> Result<BVExpr> {
        if lhs.width != rhs.width {
            return Err(Error::Width(format!(
                "operands of {op:?} have widths {} and {}",
                lhs.width, rhs.width
            )));
        }
        let width = lhs.width;
        Ok(BVExpr { node: Rc::new(Node::Bin { op, lhs, rhs }), width })
    }

    pub fn cmp(op: CmpOp, lhs: BVExpr, rhs: BVExpr) -> Result<BVExpr> {
        if lhs.width != rhs.width {
            return Err(Error::Width(format!(
                "comparison operands have widths {} and {}",
                lhs.width, rhs.width
            )));
        }
        Ok(BVExpr { node: Rc::new(Node::Cmp { op, lhs, rhs }), width: 1 })
    }

    pub fn bool_bin(op: BoolOp, lhs: BVExpr, rhs: BVExpr) -> Result<BVExpr> {
        if lhs.width != 1 || rhs.width != 1 {
            return Err(Error::Width(format!(
                "boolean connective needs width-1 operands, got {} and {}",
                lhs.width, rhs.width
            )));
        }
        Ok(BVExpr { node: Rc::new(Node::BoolBin { op, lhs, rhs }), width: 1 })
    }

    pub fn bool_not(a: BVExpr) -> Result<BVExpr> {
        if a.width != 1 {
            return Err(Error::Width(format!("boolean not needs a width-1 operand, got {}", a.width)));
        }
        Ok(BVExpr { node: Rc::new(Node::BoolNot(a)), width: 1 })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    fn ptr(&self) -> *const Node {
        Rc::as_ptr(&self.node)
    }

    /// Names of local variables occurring in the expression.
    pub fn local_names(&self) -> Vec<Arc<str>> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        self.walk_locals(&mut seen, &mut out);
        out
    }

    fn walk_locals(
        &self,
        seen: &mut std::collections::HashSet<*const Node>,
        out: &mut Vec<Arc<str>>,
    ) {
        if !seen.insert(self.ptr()) {
            return;
        }
        match &*self.node {
            Node::Local { name } => {
                if !out.iter().any(|n| n == name) {
                    out.push(name.clone());
                }
            }
            Node::Input { .. } | Node::Const { .. } => {}
            Node::Not(a) | Node::BoolNot(a) => a.walk_locals(seen, out),
            Node::Bin { lhs, rhs, .. } | Node::Cmp { lhs, rhs, .. } | Node::BoolBin { lhs, rhs, .. } => {
                lhs.walk_locals(seen, out);
                rhs.walk_locals(seen, out);
            }
        }
    }
}

/// Total assignment for concrete evaluation: values for input variables and
/// for whatever locals the expression still references.
#[derive(Debug, Clone, Default)]
pub struct EvalEnv {
    values: BTreeMap<Arc<str>, u64>,
}

impl EvalEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: impl Into<Arc<str>>, value: u64) {
        self.values.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        self.values.get(name).copied()
    }
}

/// Concrete evaluation. Deterministic and total given a complete environment;
/// arithmetic wraps at the node width.
pub fn eval(e: &BVExpr, env: &EvalEnv) -> Result<u64> {
    let mut memo: std::collections::HashMap<*const Node, u64> = std::collections::HashMap::new();
    eval_rec(e, env, &mut memo)
}

fn eval_rec(
    e: &BVExpr,
    env: &EvalEnv,
    memo: &mut std::collections::HashMap<*const Node, u64>,
) -> Result<u64> {
    if let Some(&v) = memo.get(&e.ptr()) {
        return Ok(v);
    }
    let w = e.width;
    let m = mask(w);
    let v = match &*e.node {
        Node::Input { name } | Node::Local { name } => {
            env.get(name).ok_or_else(|| Error::UnboundVariable(name.clone()))? & m
        }
        Node::Const { value } => *value,
        Node::Not(a) => !eval_rec(a, env, memo)? & m,
        Node::Bin { op, lhs, rhs } => {
            let a = eval_rec(lhs, env, memo)?;
            let b = eval_rec(rhs, env, memo)?;
            match op {
                BinOp::And => a & b,
                BinOp::Or => a | b,
                BinOp::Xor => a ^ b,
                BinOp::Add => a.wrapping_add(b) & m,
                BinOp::Sub => a.wrapping_sub(b) & m,
                BinOp::Mul => a.wrapping_mul(b) & m,
                BinOp::Shl => {
                    if b >= w as u64 {
                        0
                    } else {
                        (a << b) & m
                    }
                }
                BinOp::Shr => {
                    if b >= w as u64 {
                        0
                    } else {
                        a >> b
                    }
                }
                BinOp::Rem => {
                    if b == 0 {
                        a
                    } else {
                        a % b
                    }
                }
            }
        }
        Node::Cmp { op, lhs, rhs } => {
            let a = eval_rec(lhs, env, memo)?;
            let b = eval_rec(rhs, env, memo)?;
            let r = match op {
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                CmpOp::Ult => a < b,
            };
            r as u64
        }
        Node::BoolBin { op, lhs, rhs } => {
            let a = eval_rec(lhs, env, memo)? != 0;
            let b = eval_rec(rhs, env, memo)? != 0;
            match op {
                BoolOp::And => (a && b) as u64,
                BoolOp::Or => (a || b) as u64,
            }
        }
        Node::BoolNot(a) => (eval_rec(a, env, memo)? == 0) as u64,
    };
    memo.insert(e.ptr(), v);
    Ok(v)
}

/// Substitutes `bindings` for local variables until the result is a function
/// of input bits alone, then converts it into a [`BoolFunc`].
///
/// Bindings must be acyclic and cover every local the expression (transitively)
/// references; the expression must have width 1.
pub fn close_over_inputs(
    e: &BVExpr,
    bindings: &BTreeMap<Arc<str>, BVExpr>,
    layout: &Arc<InputLayout>,
) -> Result<BoolFunc> {
    if e.width != 1 {
        return Err(Error::Width(format!(
            "condition has width {}, expected 1",
            e.width
        )));
    }
    let closed = substitute_locals(e, bindings)?;
    BoolFunc::from_expr(&closed, layout)
}

/// Replaces every local reference by its binding, recursively. Cycles and
/// missing bindings are structural errors.
pub fn substitute_locals(e: &BVExpr, bindings: &BTreeMap<Arc<str>, BVExpr>) -> Result<BVExpr> {
    let mut memo: std::collections::HashMap<*const Node, BVExpr> = std::collections::HashMap::new();
    let mut active: Vec<Arc<str>> = Vec::new();
    subst_rec(e, bindings, &mut memo, &mut active)
}

fn subst_rec(
    e: &BVExpr,
    bindings: &BTreeMap<Arc<str>, BVExpr>,
    memo: &mut std::collections::HashMap<*const Node, BVExpr>,
    active: &mut Vec<Arc<str>>,
) -> Result<BVExpr> {
    // The memo is keyed by node pointer; a local expanded once is reused.
    if let Some(v) = memo.get(&e.ptr()) {
        return Ok(v.clone());
    }
    let out = match &*e.node {
        Node::Input { .. } | Node::Const { .. } => e.clone(),
        Node::Local { name } => {
            if active.iter().any(|n| n == name) {
                return Err(Error::CyclicBinding(name.clone()));
            }
            let bound = bindings
                .get(name)
                .ok_or_else(|| Error::UnboundVariable(name.clone()))?;
            if bound.width() != e.width {
                return Err(Error::Width(format!(
                    "binding for `{name}` has width {}, variable has width {}",
                    bound.width(),
                    e.width
                )));
            }
            active.push(name.clone());
            let r = subst_rec(bound, bindings, memo, active)?;
            active.pop();
            r
        }
        Node::Not(a) => BVExpr::not(subst_rec(a, bindings, memo, active)?),
        Node::Bin { op, lhs, rhs } => BVExpr::bin(
            *op,
            subst_rec(lhs, bindings, memo, active)?,
            subst_rec(rhs, bindings, memo, active)?,
        )?,
        Node::Cmp { op, lhs, rhs } => BVExpr::cmp(
            *op,
            subst_rec(lhs, bindings, memo, active)?,
            subst_rec(rhs, bindings, memo, active)?,
        )?,
        Node::BoolBin { op, lhs, rhs } => BVExpr::bool_bin(
            *op,
            subst_rec(lhs, bindings, memo, active)?,
            subst_rec(rhs, bindings, memo, active)?,
        )?,
        Node::BoolNot(a) => BVExpr::bool_not(subst_rec(a, bindings, memo, active)?)?,
    };
    memo.insert(e.ptr(), out.clone());
    Ok(out)
}

impl fmt::Display for BVExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl BVExpr {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        let (prec, text): (u8, Option<&str>) = match &*self.node {
            Node::Input { .. } | Node::Local { .. } | Node::Const { .. } => (10, None),
            Node::Not(_) | Node::BoolNot(_) => (9, None),
            Node::Bin { op, .. } => match op {
                BinOp::Mul | BinOp::Rem => (8, Some(if *op == BinOp::Mul { "*" } else { "%" })),
                BinOp::Add | BinOp::Sub => (7, Some(if *op == BinOp::Add { "+" } else { "-" })),
                BinOp::Shl => (6, Some("<<")),
                BinOp::Shr => (6, Some(">>")),
                BinOp::And => (5, Some("&")),
                BinOp::Xor => (4, Some("^")),
                BinOp::Or => (3, Some("|")),
            },
            Node::Cmp { op, .. } => (
                2,
                Some(match op {
                    CmpOp::Eq => "==",
                    CmpOp::Ne => "!=",
                    CmpOp::Ult => "<",
                }),
            ),
            Node::BoolBin { op, .. } => {
                (1, Some(if *op == BoolOp::And { "&&" } else { "||" }))
            }
        };
        let need_parens = prec < parent;
        if need_parens {
            write!(f, "(")?;
        }
        match &*self.node {
            Node::Input { name } | Node::Local { name } => write!(f, "{name}")?,
            Node::Const { value } => write!(f, "{value}")?,
            Node::Not(a) => {
                write!(f, "~")?;
                a.fmt_prec(f, 9)?;
            }
            Node::BoolNot(a) => {
                write!(f, "!")?;
                a.fmt_prec(f, 9)?;
            }
            Node::Bin { lhs, rhs, .. } | Node::Cmp { lhs, rhs, .. } | Node::BoolBin { lhs, rhs, .. } => {
                lhs.fmt_prec(f, prec)?;
                write!(f, " {} ", text.unwrap())?;
                rhs.fmt_prec(f, prec + 1)?;
            }
        }
        if need_parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}
