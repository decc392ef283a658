//! Poisson brackets of phase-space functions.
//!
//! The bracket convention used throughout is
//!
//! ```text
//! {A, B} = sum_i ( dB/dx^i * dA/dp_i  -  dA/dx^i * dB/dp_i )
//! ```
//!
//! For two momentum-quadratic functions the bracket is cubic and odd in the
//! momenta; [`BracketPoly`] carries its exact monomial coefficients, which is
//! what the side-condition checks fit multipliers against.

use crate::expr::{Binding, EvalError, Expr};
use crate::quadform::QuadraticForm;

/// Generic symbolic bracket of two expressions over configuration symbols
/// `xsyms` and conjugate momentum symbols `psyms`.
pub fn bracket_expr(a: &Expr, b: &Expr, xsyms: &[&str], psyms: &[&str]) -> Expr {
    assert_eq!(xsyms.len(), psyms.len());
    let mut acc = Expr::num(0.0);
    for (x, p) in xsyms.iter().zip(psyms) {
        let term = Expr::sub(
            Expr::mul(b.diff(x), a.diff(p)),
            Expr::mul(a.diff(x), b.diff(p)),
        );
        acc = Expr::add(acc, term);
    }
    acc
}

/// The bracket of two diagonal momentum-quadratic functions, kept as exact
/// monomial coefficients: `{A, B} = sum_{i,k} cubic[i][k] p_i p_k^2 +
/// sum_i linear[i] p_i`.
#[derive(Debug, Clone)]
pub struct BracketPoly {
    /// Coefficient of `p_i * p_k^2`.
    pub cubic: Vec<Vec<Expr>>,
    /// Coefficient of `p_i`.
    pub linear: Vec<Expr>,
}

impl BracketPoly {
    /// `{a, b}` in the convention above.
    pub fn of(a: &QuadraticForm, b: &QuadraticForm, coords: &[impl AsRef<str>]) -> Self {
        let n = a.dim();
        assert_eq!(n, b.dim());
        assert_eq!(n, coords.len());
        let two = Expr::num(2.0);
        let mut cubic = vec![vec![Expr::num(0.0); n]; n];
        let mut linear = vec![Expr::num(0.0); n];
        for i in 0..n {
            let xi = coords[i].as_ref();
            for k in 0..n {
                // d/dp_i of A contributes 2 a_i p_i against dB/dx^i, and
                // symmetrically with A and B swapped.
                cubic[i][k] = Expr::mul(
                    two.clone(),
                    Expr::sub(
                        Expr::mul(a.coeffs[i].clone(), b.coeffs[k].diff(xi)),
                        Expr::mul(b.coeffs[i].clone(), a.coeffs[k].diff(xi)),
                    ),
                );
            }
            linear[i] = Expr::mul(
                two.clone(),
                Expr::sub(
                    Expr::mul(a.coeffs[i].clone(), b.w.diff(xi)),
                    Expr::mul(b.coeffs[i].clone(), a.w.diff(xi)),
                ),
            );
        }
        BracketPoly { cubic, linear }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    /// Evaluate at a configuration binding and momentum vector.
    pub fn eval(&self, binding: &Binding, p: &[f64]) -> Result<f64, EvalError> {
        let n = self.dim();
        assert_eq!(p.len(), n);
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..n {
                acc += self.cubic[i][k].eval(binding)? * p[i] * p[k] * p[k];
            }
            acc += self.linear[i].eval(binding)? * p[i];
        }
        Ok(acc)
    }

    /// Evaluate all monomial coefficients at a binding: the `n*n` cubic
    /// block in row-major order followed by the `n` linear entries. This is
    /// the exact coefficient vector the multiplier fits consume.
    pub fn coefficients_at(&self, binding: &Binding) -> Result<Vec<f64>, EvalError> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n + n);
        for i in 0..n {
            for k in 0..n {
                out.push(self.cubic[i][k].eval(binding)?);
            }
        }
        for i in 0..n {
            out.push(self.linear[i].eval(binding)?);
        }
        Ok(out)
    }

    /// Largest coefficient magnitude at a binding, used to scale residuals.
    pub fn scale_at(&self, binding: &Binding) -> Result<f64, EvalError> {
        Ok(self
            .coefficients_at(binding)?
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs())))
    }
}
