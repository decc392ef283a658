//! Immutable symbolic expressions.
//!
//! [`Expr`] is a cheaply clonable handle to a shared expression tree. Smart
//! constructors fold constants and strip arithmetic identities (`x + 0`,
//! `1 * x`, `x^1`, ...) at build time, so trees produced by repeated
//! differentiation stay compact. Evaluation and differentiation memoize on
//! shared subtrees, which keeps work linear in the number of distinct nodes
//! even when the tree is a heavily shared DAG.

mod diff;
mod eval;
mod parse;

pub use eval::{Binding, EvalError};
pub use parse::ParseError;

use std::collections::BTreeSet;
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

/// A symbolic expression. Clones share the underlying tree.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

/// Unary operations. All but `Neg` are the function atoms of the expression
/// language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
    Atan,
}

impl UnaryOp {
    /// The surface name of a function operator; `None` for negation.
    pub fn func_name(self) -> Option<&'static str> {
        Some(match self {
            UnaryOp::Neg => return None,
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Sinh => "sinh",
            UnaryOp::Cosh => "cosh",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Atan => "atan",
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            UnaryOp::Neg => -v,
            UnaryOp::Sin => v.sin(),
            UnaryOp::Cos => v.cos(),
            UnaryOp::Tan => v.tan(),
            UnaryOp::Sinh => v.sinh(),
            UnaryOp::Cosh => v.cosh(),
            UnaryOp::Exp => v.exp(),
            UnaryOp::Log => v.ln(),
            UnaryOp::Sqrt => v.sqrt(),
            UnaryOp::Atan => v.atan(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug)]
pub enum Node {
    Num(f64),
    Sym(Arc<str>),
    Unary(UnaryOp, Expr),
    Binary(BinaryOp, Expr, Expr),
}

impl Expr {
    fn new(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    /// Numeric literal.
    pub fn num(v: f64) -> Self {
        Expr::new(Node::Num(v))
    }

    /// Free symbol.
    pub fn sym(name: impl AsRef<str>) -> Self {
        Expr::new(Node::Sym(Arc::from(name.as_ref())))
    }

    fn sym_arc(name: Arc<str>) -> Self {
        Expr::new(Node::Sym(name))
    }

    /// The literal's value if this node is a number.
    pub fn as_num(&self) -> Option<f64> {
        match self.node() {
            Node::Num(v) => Some(*v),
            _ => None,
        }
    }

    fn is_num(&self, v: f64) -> bool {
        matches!(self.node(), Node::Num(x) if *x == v)
    }

    /// `a + b` with constant folding and `x + 0` elimination.
    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => return Expr::num(x + y),
            (Some(x), None) if x == 0.0 => return b,
            (None, Some(y)) if y == 0.0 => return a,
            _ => {}
        }
        Expr::new(Node::Binary(BinaryOp::Add, a, b))
    }

    /// `a - b` with constant folding and `x - 0`, `0 - x` elimination.
    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => return Expr::num(x - y),
            (None, Some(y)) if y == 0.0 => return a,
            (Some(x), None) if x == 0.0 => return Expr::neg(b),
            _ => {}
        }
        Expr::new(Node::Binary(BinaryOp::Sub, a, b))
    }

    /// `a * b` with constant folding and 0/1 elimination.
    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => return Expr::num(x * y),
            (Some(x), None) => {
                if x == 0.0 {
                    return Expr::num(0.0);
                }
                if x == 1.0 {
                    return b;
                }
            }
            (None, Some(y)) => {
                if y == 0.0 {
                    return Expr::num(0.0);
                }
                if y == 1.0 {
                    return a;
                }
            }
            _ => {}
        }
        Expr::new(Node::Binary(BinaryOp::Mul, a, b))
    }

    /// `a / b` with constant folding, `x / 1` and `0 / x` elimination.
    ///
    /// `0 / x -> 0` is evaluation-equivalent on the common domain of both
    /// sides (points where `x` is finite and nonzero), which is the contract
    /// all simplifications here satisfy.
    pub fn div(a: Expr, b: Expr) -> Expr {
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            if y != 0.0 {
                return Expr::num(x / y);
            }
        }
        if b.is_num(1.0) {
            return a;
        }
        if a.is_num(0.0) && b.as_num() != Some(0.0) {
            return Expr::num(0.0);
        }
        Expr::new(Node::Binary(BinaryOp::Div, a, b))
    }

    /// `a ^ b` with constant folding and `x^0 -> 1`, `x^1 -> x`.
    pub fn pow(a: Expr, b: Expr) -> Expr {
        if let Some(y) = b.as_num() {
            if y == 0.0 {
                return Expr::num(1.0);
            }
            if y == 1.0 {
                return a;
            }
            if let Some(x) = a.as_num() {
                let v = x.powf(y);
                if v.is_finite() {
                    return Expr::num(v);
                }
            }
        }
        if let Some(x) = a.as_num() {
            if x == 1.0 {
                return Expr::num(1.0);
            }
        }
        Expr::new(Node::Binary(BinaryOp::Pow, a, b))
    }

    /// Negation; folds constants and collapses double negation.
    pub fn neg(a: Expr) -> Expr {
        if let Some(x) = a.as_num() {
            return Expr::num(-x);
        }
        if let Node::Unary(UnaryOp::Neg, inner) = a.node() {
            return inner.clone();
        }
        Expr::new(Node::Unary(UnaryOp::Neg, a))
    }

    /// Function application; folds constant arguments when the result is
    /// finite.
    pub fn unary(op: UnaryOp, a: Expr) -> Expr {
        if op == UnaryOp::Neg {
            return Expr::neg(a);
        }
        if let Some(x) = a.as_num() {
            let v = op.apply(x);
            if v.is_finite() {
                return Expr::num(v);
            }
        }
        Expr::new(Node::Unary(op, a))
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Sin, a)
    }
    pub fn cos(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Cos, a)
    }
    pub fn tan(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Tan, a)
    }
    pub fn sinh(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Sinh, a)
    }
    pub fn cosh(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Cosh, a)
    }
    pub fn exp(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Exp, a)
    }
    pub fn log(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Log, a)
    }
    pub fn sqrt(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Sqrt, a)
    }
    pub fn atan(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Atan, a)
    }

    /// Integer-exponent power with a numeric exponent node.
    pub fn powi(a: Expr, k: i32) -> Expr {
        Expr::pow(a, Expr::num(k as f64))
    }

    /// Parse an expression from the surface syntax.
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        parse::parse(src)
    }

    /// Rebuild the tree bottom-up through the smart constructors, folding any
    /// constant subtrees and identity operations the original construction
    /// did not see. Evaluation-equivalent to the input on the common domain.
    pub fn simplify_basic(&self) -> Expr {
        use std::collections::HashMap;
        fn go(e: &Expr, memo: &mut HashMap<*const Node, Expr>) -> Expr {
            if let Some(hit) = memo.get(&e.ptr()) {
                return hit.clone();
            }
            let out = match e.node() {
                Node::Num(v) => Expr::num(*v),
                Node::Sym(s) => Expr::sym_arc(s.clone()),
                Node::Unary(op, a) => Expr::unary(*op, go(a, memo)),
                Node::Binary(op, a, b) => {
                    let (a, b) = (go(a, memo), go(b, memo));
                    match op {
                        BinaryOp::Add => Expr::add(a, b),
                        BinaryOp::Sub => Expr::sub(a, b),
                        BinaryOp::Mul => Expr::mul(a, b),
                        BinaryOp::Div => Expr::div(a, b),
                        BinaryOp::Pow => Expr::pow(a, b),
                    }
                }
            };
            memo.insert(e.ptr(), out.clone());
            out
        }
        go(self, &mut HashMap::new())
    }

    /// The set of free symbols, sorted by name.
    pub fn free_symbols(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        let mut seen = HashSet::new();
        fn go(e: &Expr, out: &mut BTreeSet<Arc<str>>, seen: &mut HashSet<*const Node>) {
            if !seen.insert(e.ptr()) {
                return;
            }
            match e.node() {
                Node::Num(_) => {}
                Node::Sym(s) => {
                    out.insert(s.clone());
                }
                Node::Unary(_, a) => go(a, out, seen),
                Node::Binary(_, a, b) => {
                    go(a, out, seen);
                    go(b, out, seen);
                }
            }
        }
        go(self, &mut out, &mut seen);
        out
    }

    /// Whether `name` occurs free in the expression.
    pub fn contains_symbol(&self, name: &str) -> bool {
        let mut seen = HashSet::new();
        fn go(e: &Expr, name: &str, seen: &mut HashSet<*const Node>) -> bool {
            if !seen.insert(e.ptr()) {
                return false;
            }
            match e.node() {
                Node::Num(_) => false,
                Node::Sym(s) => &**s == name,
                Node::Unary(_, a) => go(a, name, seen),
                Node::Binary(_, a, b) => go(a, name, seen) || go(b, name, seen),
            }
        }
        go(self, name, &mut seen)
    }

    /// Replace every free occurrence of `name` by `value`.
    pub fn substitute(&self, name: &str, value: &Expr) -> Expr {
        use std::collections::HashMap;
        fn go(e: &Expr, name: &str, value: &Expr, memo: &mut HashMap<*const Node, Expr>) -> Expr {
            if let Some(hit) = memo.get(&e.ptr()) {
                return hit.clone();
            }
            let out = match e.node() {
                Node::Num(v) => Expr::num(*v),
                Node::Sym(s) => {
                    if &**s == name {
                        value.clone()
                    } else {
                        e.clone()
                    }
                }
                Node::Unary(op, a) => Expr::unary(*op, go(a, name, value, memo)),
                Node::Binary(op, a, b) => {
                    let (a, b) = (go(a, name, value, memo), go(b, name, value, memo));
                    match op {
                        BinaryOp::Add => Expr::add(a, b),
                        BinaryOp::Sub => Expr::sub(a, b),
                        BinaryOp::Mul => Expr::mul(a, b),
                        BinaryOp::Div => Expr::div(a, b),
                        BinaryOp::Pow => Expr::pow(a, b),
                    }
                }
            };
            memo.insert(e.ptr(), out.clone());
            out
        }
        go(self, name, value, &mut HashMap::new())
    }

    /// Number of distinct nodes in the DAG (diagnostic).
    pub fn node_count(&self) -> usize {
        let mut seen = HashSet::new();
        fn go(e: &Expr, seen: &mut HashSet<*const Node>) {
            if !seen.insert(e.ptr()) {
                return;
            }
            match e.node() {
                Node::Num(_) | Node::Sym(_) => {}
                Node::Unary(_, a) => go(a, seen),
                Node::Binary(_, a, b) => {
                    go(a, seen);
                    go(b, seen);
                }
            }
        }
        go(self, &mut seen);
        seen.len()
    }
}

impl PartialEq for Expr {
    /// Structural equality with a shared-pointer fast path.
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        match (self.node(), other.node()) {
            (Node::Num(a), Node::Num(b)) => a == b || (a.is_nan() && b.is_nan()),
            (Node::Sym(a), Node::Sym(b)) => a == b,
            (Node::Unary(op1, a1), Node::Unary(op2, a2)) => op1 == op2 && a1 == a2,
            (Node::Binary(op1, a1, b1), Node::Binary(op2, a2, b2)) => {
                op1 == op2 && a1 == a2 && b1 == b2
            }
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self)
    }
}

// Printing uses the same precedence levels as the parser, so the output
// reparses to a structurally identical tree: 1 add/sub, 2 mul/div, 3 pow,
// 4 unary minus, 5 atoms. Unary minus binds *tighter* than `^` in this
// grammar, so `(-a)^b` prints as `-a^b` while `-(a^b)` needs parentheses.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prec(self, f, 0)
    }
}

fn prec_of(e: &Expr) -> u8 {
    match e.node() {
        // A negative literal prints like a negation chain.
        Node::Num(v) if *v < 0.0 => 4,
        Node::Num(_) | Node::Sym(_) => 5,
        Node::Unary(UnaryOp::Neg, _) => 4,
        Node::Unary(..) => 5,
        Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
        Node::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
        Node::Binary(BinaryOp::Pow, ..) => 3,
    }
}

fn write_prec(e: &Expr, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
    let p = prec_of(e);
    let parens = p < min;
    if parens {
        write!(f, "(")?;
    }
    match e.node() {
        Node::Num(v) => write!(f, "{}", v)?,
        Node::Sym(s) => write!(f, "{}", s)?,
        Node::Unary(UnaryOp::Neg, a) => {
            write!(f, "-")?;
            write_prec(a, f, 4)?;
        }
        Node::Unary(op, a) => {
            write!(f, "{}(", op.func_name().expect("non-neg unary has a name"))?;
            write_prec(a, f, 0)?;
            write!(f, ")")?;
        }
        Node::Binary(op, a, b) => match op {
            BinaryOp::Add => {
                write_prec(a, f, 1)?;
                write!(f, " + ")?;
                write_prec(b, f, 2)?;
            }
            BinaryOp::Sub => {
                write_prec(a, f, 1)?;
                write!(f, " - ")?;
                write_prec(b, f, 2)?;
            }
            BinaryOp::Mul => {
                write_prec(a, f, 2)?;
                write!(f, "*")?;
                write_prec(b, f, 3)?;
            }
            BinaryOp::Div => {
                write_prec(a, f, 2)?;
                write!(f, "/")?;
                write_prec(b, f, 3)?;
            }
            BinaryOp::Pow => {
                // The base slot in the grammar is a `unary`, the exponent a
                // `factor`; printing the exponent at the pow level keeps
                // right-associative chains bare.
                write_prec(a, f, 4)?;
                write!(f, "^")?;
                write_prec(b, f, 3)?;
            }
        },
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}
