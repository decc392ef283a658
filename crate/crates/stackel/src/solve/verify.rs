//! Residuals of assembled solutions against the equations they claim to
//! solve: exact symbolic residuals for closed forms, finite-difference
//! residuals for grids, and the conjugation identity that ties the ambient
//! operator to the separable frame.

use crate::error::SolveError;
use crate::expr::{Binding, Expr};
use crate::matrix::OrthogonalMetric;
use crate::sample::{DomainBox, DEFAULT_MARGIN, DEFAULT_SEED};

use super::{laplace_beltrami, DiffOperator, TensorGrid};

/// Scaled residual of `Op(theta) = E theta` at sampled points. The residual
/// is `|Op(theta) - E theta| / (1 + |E theta| + |theta|)`, so it is
/// meaningful near zeros of the solution as well.
pub fn pde_residual(
    op: &DiffOperator,
    theta: &Expr,
    e: f64,
    domain: &DomainBox,
    samples: usize,
    seed: u64,
) -> Result<f64, SolveError> {
    let applied = op.apply(theta);
    let pts = domain.sample(samples, DEFAULT_SEED ^ seed, DEFAULT_MARGIN);
    let mut worst = 0.0f64;
    for p in &pts {
        let b = domain.binding(p);
        let ev = |ex: &Expr| {
            ex.eval(&b).map_err(|source| SolveError::Eval {
                point: p.to_vec(),
                source,
            })
        };
        let lhs = ev(&applied)?;
        let th = ev(theta)?;
        let r = (lhs - e * th).abs() / (1.0 + (e * th).abs() + th.abs());
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Scaled residual of `Op(theta) = 0` (side conditions).
pub fn side_residual(
    op: &DiffOperator,
    theta: &Expr,
    domain: &DomainBox,
    samples: usize,
    seed: u64,
) -> Result<f64, SolveError> {
    pde_residual(op, theta, 0.0, domain, samples, seed)
}

/// Fourth-order finite-difference residual of `Op(values) = E values` on a
/// tensor grid, evaluated on interior points at least two cells from every
/// edge. The operator must be diagonal (as all operators here are), so each
/// axis contributes an independent five-point stencil.
pub fn pde_residual_grid(
    op: &DiffOperator,
    grid: &TensorGrid,
    e: f64,
) -> Result<f64, SolveError> {
    let shape = grid.shape();
    let n = shape.len();
    assert_eq!(op.dim(), n, "operator and grid dimension");
    for (k, &len) in shape.iter().enumerate() {
        if len < 5 {
            return Err(SolveError::Misassembled {
                reason: format!("axis {k} has {len} points; the stencil needs 5"),
            });
        }
    }
    let h: Vec<f64> = grid
        .axes
        .iter()
        .map(|xs| {
            let h0 = xs[1] - xs[0];
            debug_assert!(
                xs.windows(2).all(|w| ((w[1] - w[0]) - h0).abs() < 1e-9 * h0.abs()),
                "stencils assume uniform spacing"
            );
            h0
        })
        .collect();

    let mut worst = 0.0f64;
    let mut idx = vec![0usize; n];
    let total: usize = shape.iter().product();
    for flat in 0..total {
        let mut rem = flat;
        for k in (0..n).rev() {
            idx[k] = rem % shape[k];
            rem /= shape[k];
        }
        if idx
            .iter()
            .zip(&shape)
            .any(|(&i, &len)| i < 2 || i + 2 >= len)
        {
            continue;
        }
        let x = grid.point(&idx);
        let mut binding = Binding::new();
        for (k, name) in grid.names.iter().enumerate() {
            binding.set(name.clone(), x[k]);
        }
        let evc = |ex: &Expr| {
            ex.eval(&binding).map_err(|source| SolveError::Eval {
                point: x.clone(),
                source,
            })
        };
        let center = grid.values[flat];
        let mut lhs = evc(&op.c)? * center;
        for k in 0..n {
            let mut stencil = [0.0f64; 5];
            for (s, slot) in stencil.iter_mut().enumerate() {
                let mut j = idx.clone();
                j[k] = idx[k] + s - 2;
                *slot = grid.values[grid.index(&j)];
            }
            let d1 = (stencil[0] - 8.0 * stencil[1] + 8.0 * stencil[3] - stencil[4])
                / (12.0 * h[k]);
            let d2 = (-stencil[0] + 16.0 * stencil[1] - 30.0 * stencil[2]
                + 16.0 * stencil[3]
                - stencil[4])
                / (12.0 * h[k] * h[k]);
            lhs += evc(&op.a[k])? * d2 + evc(&op.b[k])? * d1;
        }
        let r = (lhs - e * center).abs() / (1.0 + (e * center).abs() + center.abs());
        worst = worst.max(r);
    }
    Ok(worst)
}

/// The conjugation identity connecting the ambient wave operator to the
/// separable frame: for every test function `phi`,
///
/// ```text
/// e^{-R} (Δ + V_amb)(e^R phi) = sum_l T^{1l} (d_l^2 + f_l d_l + v_l + shift_l) phi
/// ```
///
/// Both sides drop the eigenvalue term, which cancels identically. The
/// `shift` column absorbs constant reassignments between the ambient
/// potential and the separation potential column. Returns the worst scaled
/// residual over `n_fns` polynomial test functions plus one transcendental,
/// at `samples` points.
#[allow(clippy::too_many_arguments)]
pub fn r_identity_check(
    metric: &OrthogonalMetric,
    v_amb: &Expr,
    r: &Expr,
    t_row1: &[Expr],
    f: &[Expr],
    v: &[Expr],
    shift: &[f64],
    domain: &DomainBox,
    samples: usize,
    seed: u64,
) -> Result<f64, SolveError> {
    let n = metric.dim();
    assert_eq!(t_row1.len(), n);
    assert_eq!(shift.len(), n);
    let ambient = laplace_beltrami(metric).plus_potential(v_amb);
    // e^{-R} Op e^{R} is conjugation by -R.
    let lhs_op = ambient.conjugated(&Expr::neg(r.clone()));
    let v_shifted: Vec<Expr> = v
        .iter()
        .zip(shift)
        .map(|(vl, s)| Expr::add(vl.clone(), Expr::num(*s)))
        .collect();
    let rhs_op = super::separable_frame_op(metric.coords(), t_row1, f, &v_shifted);

    let mut worst = 0.0f64;
    for phi in test_functions(metric) {
        let lhs = lhs_op.apply(&phi);
        let rhs = rhs_op.apply(&phi);
        let pts = domain.sample(samples, DEFAULT_SEED ^ seed, DEFAULT_MARGIN);
        for p in &pts {
            let b = domain.binding(p);
            let ev = |ex: &Expr| {
                ex.eval(&b).map_err(|source| SolveError::Eval {
                    point: p.to_vec(),
                    source,
                })
            };
            let l = ev(&lhs)?;
            let rr = ev(&rhs)?;
            worst = worst.max((l - rr).abs() / (1.0 + l.abs().max(rr.abs())));
        }
    }
    Ok(worst)
}

/// Nine low-degree monomials plus one transcendental, adapted to the
/// dimension: enough variety to pin down every coefficient of a
/// second-order operator identity.
fn test_functions(metric: &OrthogonalMetric) -> Vec<Expr> {
    let xs: Vec<Expr> = metric
        .coords()
        .iter()
        .map(|c| Expr::sym(c.to_string()))
        .collect();
    let mut fns = vec![Expr::num(1.0)];
    for x in &xs {
        fns.push(x.clone());
        fns.push(Expr::mul(x.clone(), x.clone()));
    }
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            fns.push(Expr::mul(xs[i].clone(), xs[j].clone()));
        }
    }
    fns.truncate(9);
    let sum = xs
        .iter()
        .skip(1)
        .fold(xs[0].clone(), |acc, x| Expr::add(acc, x.clone()));
    fns.push(Expr::sin(sum));
    fns
}
