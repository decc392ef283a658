//! Pointwise evaluation of expressions over `f64`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use super::{BinaryOp, Expr, Node};

/// A symbol-to-value environment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Binding {
    map: BTreeMap<Arc<str>, f64>,
}

impl Binding {
    pub fn new() -> Self {
        Binding::default()
    }

    /// Build from `(name, value)` pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        let mut b = Binding::new();
        for (k, v) in pairs {
            b.set(k, v);
        }
        b
    }

    pub fn set(&mut self, name: impl AsRef<str>, value: f64) -> &mut Self {
        self.map.insert(Arc::from(name.as_ref()), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.map.get(name).copied()
    }

    /// Union of two environments; `other` wins on collisions.
    pub fn merged(&self, other: &Binding) -> Binding {
        let mut map = self.map.clone();
        for (k, v) in &other.map {
            map.insert(k.clone(), *v);
        }
        Binding { map }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Arc<str>, &f64)> {
        self.map.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Evaluation failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    /// A free symbol has no value in the binding.
    Unbound { symbol: String },
    /// An operation produced a non-finite value; `expr` is the offending
    /// subexpression and `detail` describes the operands.
    Domain { expr: String, detail: String },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Unbound { symbol } => write!(f, "unbound symbol '{}'", symbol),
            EvalError::Domain { expr, detail } => {
                write!(f, "domain violation in '{}': {}", expr, detail)
            }
        }
    }
}

impl std::error::Error for EvalError {}

impl Expr {
    /// Evaluate at the given binding. Shared subtrees are evaluated once.
    ///
    /// Any non-finite intermediate (division by zero, `log` of a
    /// non-positive value, `sqrt` of a negative value, overflow, ...) is
    /// reported as a [`EvalError::Domain`] naming the subexpression.
    pub fn eval(&self, binding: &Binding) -> Result<f64, EvalError> {
        let mut memo: HashMap<*const Node, f64> = HashMap::new();
        self.eval_memo(binding, &mut memo)
    }

    fn eval_memo(
        &self,
        binding: &Binding,
        memo: &mut HashMap<*const Node, f64>,
    ) -> Result<f64, EvalError> {
        if let Some(v) = memo.get(&self.ptr()) {
            return Ok(*v);
        }
        let v = match self.node() {
            Node::Num(v) => *v,
            Node::Sym(s) => binding.get(s).ok_or_else(|| EvalError::Unbound {
                symbol: s.to_string(),
            })?,
            Node::Unary(op, a) => {
                let x = a.eval_memo(binding, memo)?;
                let v = op.apply(x);
                if !v.is_finite() {
                    return Err(EvalError::Domain {
                        expr: self.to_string(),
                        detail: format!("operand {}", x),
                    });
                }
                v
            }
            Node::Binary(op, a, b) => {
                let x = a.eval_memo(binding, memo)?;
                let y = b.eval_memo(binding, memo)?;
                let v = match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => x / y,
                    BinaryOp::Pow => x.powf(y),
                };
                if !v.is_finite() {
                    return Err(EvalError::Domain {
                        expr: self.to_string(),
                        detail: format!("operands {} and {}", x, y),
                    });
                }
                v
            }
        };
        memo.insert(self.ptr(), v);
        Ok(v)
    }
}
