//! Exact symbolic differentiation.

use std::collections::HashMap;

use super::{BinaryOp, Expr, Node, UnaryOp};

impl Expr {
    /// Partial derivative with respect to `symbol`.
    ///
    /// The result is built through the folding constructors, so derivatives
    /// of constants collapse to `0` immediately and repeated differentiation
    /// stays compact. Shared subtrees are differentiated once per call.
    pub fn diff(&self, symbol: &str) -> Expr {
        let mut memo: HashMap<*const Node, Expr> = HashMap::new();
        self.diff_memo(symbol, &mut memo)
    }

    /// Convenience for iterated partials, e.g. `e.diff2("u", "v")`.
    pub fn diff2(&self, s1: &str, s2: &str) -> Expr {
        self.diff(s1).diff(s2)
    }

    fn diff_memo(&self, symbol: &str, memo: &mut HashMap<*const Node, Expr>) -> Expr {
        if let Some(hit) = memo.get(&self.ptr()) {
            return hit.clone();
        }
        let out = match self.node() {
            Node::Num(_) => Expr::num(0.0),
            Node::Sym(s) => {
                if &**s == symbol {
                    Expr::num(1.0)
                } else {
                    Expr::num(0.0)
                }
            }
            Node::Unary(op, a) => {
                let da = a.diff_memo(symbol, memo);
                match op {
                    UnaryOp::Neg => Expr::neg(da),
                    UnaryOp::Sin => Expr::mul(Expr::cos(a.clone()), da),
                    UnaryOp::Cos => Expr::neg(Expr::mul(Expr::sin(a.clone()), da)),
                    // d tan = (1 + tan^2) da keeps the derivative within the
                    // domain where tan itself is defined.
                    UnaryOp::Tan => Expr::mul(
                        Expr::add(
                            Expr::num(1.0),
                            Expr::powi(Expr::tan(a.clone()), 2),
                        ),
                        da,
                    ),
                    UnaryOp::Sinh => Expr::mul(Expr::cosh(a.clone()), da),
                    UnaryOp::Cosh => Expr::mul(Expr::sinh(a.clone()), da),
                    UnaryOp::Exp => Expr::mul(self.clone(), da),
                    UnaryOp::Log => Expr::div(da, a.clone()),
                    UnaryOp::Sqrt => Expr::div(
                        da,
                        Expr::mul(Expr::num(2.0), self.clone()),
                    ),
                    UnaryOp::Atan => Expr::div(
                        da,
                        Expr::add(Expr::num(1.0), Expr::powi(a.clone(), 2)),
                    ),
                }
            }
            Node::Binary(op, a, b) => match op {
                BinaryOp::Add => {
                    let (da, db) = (a.diff_memo(symbol, memo), b.diff_memo(symbol, memo));
                    Expr::add(da, db)
                }
                BinaryOp::Sub => {
                    let (da, db) = (a.diff_memo(symbol, memo), b.diff_memo(symbol, memo));
                    Expr::sub(da, db)
                }
                BinaryOp::Mul => {
                    let (da, db) = (a.diff_memo(symbol, memo), b.diff_memo(symbol, memo));
                    Expr::add(
                        Expr::mul(da, b.clone()),
                        Expr::mul(a.clone(), db),
                    )
                }
                BinaryOp::Div => {
                    let (da, db) = (a.diff_memo(symbol, memo), b.diff_memo(symbol, memo));
                    // (a/b)' = a'/b - a b'/b^2, assembled as a single
                    // quotient to limit growth.
                    Expr::div(
                        Expr::sub(
                            Expr::mul(da, b.clone()),
                            Expr::mul(a.clone(), db),
                        ),
                        Expr::powi(b.clone(), 2),
                    )
                }
                BinaryOp::Pow => {
                    let da = a.diff_memo(symbol, memo);
                    if let Some(k) = b.as_num() {
                        // Constant exponent: k a^(k-1) a'. Valid for integer
                        // k wherever a != 0 and for fractional k on a > 0,
                        // the same domain on which the power itself lives.
                        Expr::mul(
                            Expr::mul(
                                Expr::num(k),
                                Expr::pow(a.clone(), Expr::num(k - 1.0)),
                            ),
                            da,
                        )
                    } else {
                        let db = b.diff_memo(symbol, memo);
                        // General case via a^b = exp(b log a):
                        // (a^b)' = a^b (b' log a + b a'/a)
                        Expr::mul(
                            self.clone(),
                            Expr::add(
                                Expr::mul(db, Expr::log(a.clone())),
                                Expr::div(Expr::mul(b.clone(), da), a.clone()),
                            ),
                        )
                    }
                }
            },
        };
        memo.insert(self.ptr(), out.clone());
        out
    }
}
