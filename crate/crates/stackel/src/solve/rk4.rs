//! Classical fourth-order integration of the separated factor equations.

use crate::error::SolveError;
use crate::expr::{Binding, Expr};

use super::FactorGrid;

/// One separated factor equation `psi'' + f(x) psi' + q(x) psi = 0`.
///
/// For a frame row the factor equation in coordinate `x_l` is
/// `psi'' + f_l psi' + (v_l + sum_xi S_{l,xi} lambda_xi) psi = 0`; the
/// caller folds the separation constants into `q`.
#[derive(Debug, Clone)]
pub struct FactorOde {
    pub coord: String,
    pub f: Expr,
    pub q: Expr,
}

impl FactorOde {
    pub fn new(coord: impl Into<String>, f: Expr, q: Expr) -> Self {
        FactorOde {
            coord: coord.into(),
            f,
            q,
        }
    }

    fn rhs(&self, x: f64, y: [f64; 2]) -> Result<[f64; 2], SolveError> {
        let mut b = Binding::new();
        b.set(self.coord.clone(), x);
        let f = self
            .f
            .eval(&b)
            .map_err(|source| SolveError::CoefficientSingularity { x, source })?;
        let q = self
            .q
            .eval(&b)
            .map_err(|source| SolveError::CoefficientSingularity { x, source })?;
        if !f.is_finite() || !q.is_finite() {
            return Err(SolveError::BadInterval {
                reason: format!("coefficient not finite at x = {x}"),
            });
        }
        Ok([y[1], -f * y[1] - q * y[0]])
    }
}

/// Integrate a factor ODE over `[a, b]` with the classical Runge-Kutta
/// scheme. `h` is a requested step; the actual step divides the interval
/// evenly (`n = ceil((b-a)/h)`), so grid points are exact.
pub fn integrate_factor(
    ode: &FactorOde,
    a: f64,
    b: f64,
    h: f64,
    psi0: f64,
    dpsi0: f64,
) -> Result<FactorGrid, SolveError> {
    if !(b > a) || !(h > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(SolveError::BadInterval {
            reason: format!("interval [{a}, {b}] with step {h}"),
        });
    }
    let n = ((b - a) / h).ceil() as usize;
    let n = n.max(1);
    let h = (b - a) / n as f64;

    let mut xs = Vec::with_capacity(n + 1);
    let mut psi = Vec::with_capacity(n + 1);
    let mut dpsi = Vec::with_capacity(n + 1);
    let mut y = [psi0, dpsi0];
    xs.push(a);
    psi.push(y[0]);
    dpsi.push(y[1]);
    for i in 0..n {
        let x = a + h * i as f64;
        let k1 = ode.rhs(x, y)?;
        let k2 = ode.rhs(
            x + 0.5 * h,
            [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]],
        )?;
        let k3 = ode.rhs(
            x + 0.5 * h,
            [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]],
        )?;
        let k4 = ode.rhs(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]])?;
        y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        let xn = a + h * (i + 1) as f64;
        xs.push(xn);
        psi.push(y[0]);
        dpsi.push(y[1]);
    }
    Ok(FactorGrid {
        coord: ode.coord.clone(),
        xs,
        psi,
        dpsi,
    })
}

/// Endpoint-error convergence ratio `e(h) / e(h/2)` against a reference
/// solution; fourth-order schemes give ratios near 16.
pub fn convergence_ratio(
    ode: &FactorOde,
    a: f64,
    b: f64,
    h: f64,
    psi0: f64,
    dpsi0: f64,
    reference: impl Fn(f64) -> f64,
) -> Result<f64, SolveError> {
    let coarse = integrate_factor(ode, a, b, h, psi0, dpsi0)?;
    let fine = integrate_factor(ode, a, b, h / 2.0, psi0, dpsi0)?;
    let e1 = (coarse.psi.last().unwrap() - reference(b)).abs();
    let e2 = (fine.psi.last().unwrap() - reference(b)).abs();
    if e2 == 0.0 {
        return Err(SolveError::BadInterval {
            reason: "fine solution error is exactly zero; cannot form a ratio".into(),
        });
    }
    Ok(e1 / e2)
}
