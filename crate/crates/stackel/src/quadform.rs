//! Momentum-quadratic phase-space functions.

use crate::expr::{Binding, EvalError, Expr};

/// A point of phase space: configuration `x` and conjugate momenta `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Self {
        assert_eq!(x.len(), p.len(), "configuration/momentum dimension mismatch");
        PhasePoint { x, p }
    }
}

/// A diagonal momentum-quadratic function `sum_j coeffs[j](x) p_j^2 + w(x)`.
///
/// The constants of the motion of a generalized Stäckel system all have this
/// shape: the coefficients are a row of the inverse Stäckel matrix and `w`
/// is the corresponding potential contraction.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    /// Coefficient of `p_j^2` for each coordinate index `j`.
    pub coeffs: Vec<Expr>,
    /// Momentum-free part.
    pub w: Expr,
}

impl QuadraticForm {
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Evaluate at a configuration binding and momentum vector.
    pub fn eval(&self, binding: &Binding, p: &[f64]) -> Result<f64, EvalError> {
        assert_eq!(p.len(), self.coeffs.len(), "momentum dimension mismatch");
        let mut acc = self.w.eval(binding)?;
        for (c, pj) in self.coeffs.iter().zip(p) {
            acc += c.eval(binding)? * pj * pj;
        }
        Ok(acc)
    }

    /// The same function as a symbolic expression in the coordinates plus
    /// momentum symbols `psyms[j]`.
    pub fn as_expr(&self, psyms: &[Expr]) -> Expr {
        let mut acc = self.w.clone();
        for (c, p) in self.coeffs.iter().zip(psyms) {
            acc = Expr::add(acc, Expr::mul(c.clone(), Expr::powi(p.clone(), 2)));
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_diagonal_quadratic() {
        let q = QuadraticForm {
            coeffs: vec![Expr::num(2.0), Expr::parse("u").unwrap()],
            w: Expr::parse("u + 1").unwrap(),
        };
        let b = Binding::from_pairs([("u", 3.0)]);
        // 2*1^2 + 3*2^2 + 4 = 18
        assert_eq!(q.eval(&b, &[1.0, 2.0]).unwrap(), 18.0);
    }
}
