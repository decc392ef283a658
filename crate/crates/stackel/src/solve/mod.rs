//! Separated solutions: diagonal second-order operators, factor ODEs, and
//! verification of assembled solutions against the original equations.

pub mod rk4;
pub mod verify;

use std::sync::Arc;

use crate::error::SolveError;
use crate::expr::{Binding, Expr};
use crate::matrix::{GeneralizedStackelMatrix, OrthogonalMetric};
use crate::sample::{DomainBox, DEFAULT_MARGIN, DEFAULT_SEED};

/// A diagonal second-order linear operator
/// `sum_l a_l d^2/dx_l^2 + b_l d/dx_l + c`.
///
/// Every operator in the separation theory is of this shape: the
/// Laplace-Beltrami operator of an orthogonal metric, the frame operators
/// built from rows of the inverse matrix, and their conjugates by a
/// rescaling factor `e^R`.
#[derive(Debug, Clone)]
pub struct DiffOperator {
    coords: Vec<Arc<str>>,
    pub a: Vec<Expr>,
    pub b: Vec<Expr>,
    pub c: Expr,
}

impl DiffOperator {
    pub fn new(coords: Vec<Arc<str>>, a: Vec<Expr>, b: Vec<Expr>, c: Expr) -> Self {
        assert_eq!(coords.len(), a.len(), "second-order coefficient count");
        assert_eq!(coords.len(), b.len(), "first-order coefficient count");
        DiffOperator { coords, a, b, c }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Arc<str>] {
        &self.coords
    }

    /// Apply symbolically: exact derivatives, no discretization.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut acc = Expr::mul(self.c.clone(), f.clone());
        for (l, x) in self.coords.iter().enumerate() {
            let d1 = f.diff(x);
            let d2 = d1.diff(x);
            acc = Expr::add(
                acc,
                Expr::add(
                    Expr::mul(self.a[l].clone(), d2),
                    Expr::mul(self.b[l].clone(), d1),
                ),
            );
        }
        acc
    }

    /// The conjugate `e^R (this) e^{-R}`, again diagonal second order:
    /// second-order coefficients are unchanged,
    /// `b_l -> b_l - 2 a_l R_l`, and the zeroth coefficient picks up
    /// `sum_l a_l (R_l^2 - R_ll) - b_l R_l`.
    pub fn conjugated(&self, r: &Expr) -> DiffOperator {
        let mut c = self.c.clone();
        let mut b = Vec::with_capacity(self.b.len());
        for (l, x) in self.coords.iter().enumerate() {
            let rl = r.diff(x);
            let rll = rl.diff(x);
            b.push(Expr::sub(
                self.b[l].clone(),
                Expr::mul(Expr::num(2.0), Expr::mul(self.a[l].clone(), rl.clone())),
            ));
            c = Expr::add(
                c,
                Expr::sub(
                    Expr::mul(
                        self.a[l].clone(),
                        Expr::sub(Expr::mul(rl.clone(), rl.clone()), rll),
                    ),
                    Expr::mul(self.b[l].clone(), rl),
                ),
            );
        }
        DiffOperator::new(self.coords.clone(), self.a.clone(), b, c)
    }

    /// Add a zeroth-order term.
    pub fn plus_potential(&self, v: &Expr) -> DiffOperator {
        DiffOperator::new(
            self.coords.clone(),
            self.a.clone(),
            self.b.clone(),
            Expr::add(self.c.clone(), v.clone()),
        )
    }

    /// Evaluate all coefficients at a point.
    pub fn coefficients_at(&self, binding: &Binding) -> Result<(Vec<f64>, Vec<f64>, f64), SolveError> {
        let pt: Vec<f64> = Vec::new();
        let ev = |e: &Expr| {
            e.eval(binding).map_err(|source| SolveError::Eval {
                point: pt.clone(),
                source,
            })
        };
        let a = self.a.iter().map(ev).collect::<Result<_, _>>()?;
        let b = self.b.iter().map(ev).collect::<Result<_, _>>()?;
        let c = ev(&self.c)?;
        Ok((a, b, c))
    }
}

/// The Laplace-Beltrami operator of a diagonal (pseudo-)metric with inverse
/// coefficients `H_j^{-2}` (signs included for indefinite signatures):
///
/// ```text
/// ΔΨ = sum_j [ H_j^{-2} d_j^2 + (d_j H_j^{-2} - H_j^{-2}/2 sum_m d_j H_m^{-2} / H_m^{-2}) d_j ] Ψ
/// ```
///
/// The volume factor enters only through logarithmic derivatives of the
/// coefficients, so signature signs cancel and no absolute values are
/// needed.
pub fn laplace_beltrami(metric: &OrthogonalMetric) -> DiffOperator {
    let n = metric.dim();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for j in 0..n {
        let hj = metric.h_inv2(j).clone();
        let xj = metric.coord(j).to_string();
        let mut logsum = Expr::num(0.0);
        for m in 0..n {
            let hm = metric.h_inv2(m);
            logsum = Expr::add(logsum, Expr::div(hm.diff(&xj), hm.clone()));
        }
        b.push(Expr::sub(
            hj.diff(&xj),
            Expr::mul(Expr::mul(Expr::num(0.5), hj.clone()), logsum),
        ));
        a.push(hj);
    }
    DiffOperator::new(metric.coords().to_vec(), a, b, Expr::num(0.0))
}

/// A frame operator `sum_l t_l (d_l^2 + f_l d_l + v_l)` built from one row
/// of the inverse matrix, the first-order profile `f`, and the potential
/// column `v`.
pub fn separable_frame_op(
    coords: &[Arc<str>],
    t_row: &[Expr],
    f: &[Expr],
    v: &[Expr],
) -> DiffOperator {
    let n = coords.len();
    assert_eq!(t_row.len(), n);
    assert_eq!(f.len(), n);
    assert_eq!(v.len(), n);
    let a: Vec<Expr> = t_row.to_vec();
    let b: Vec<Expr> = (0..n)
        .map(|l| Expr::mul(t_row[l].clone(), f[l].clone()))
        .collect();
    let mut c = Expr::num(0.0);
    for l in 0..n {
        c = Expr::add(c, Expr::mul(t_row[l].clone(), v[l].clone()));
    }
    DiffOperator::new(coords.to_vec(), a, b, c)
}

/// Pointwise verification of a separated Hamilton-Jacobi solution.
#[derive(Debug, Clone, Copy)]
pub struct HjVerification {
    /// Scaled residual of `H = E` with the separated momenta inserted.
    pub hamiltonian_residual: f64,
    /// Scaled residual of the side form(s) vanishing.
    pub side_residual: f64,
    /// Number of (sample, coordinate) pairs where the separated momentum
    /// square came out negative. Such branches are still exact identities
    /// at the level of `p_i^2`; they only obstruct real momenta.
    pub negative_p2: usize,
    pub samples: usize,
}

/// Insert the separated-momenta squares
/// `p_i^2 = -v_i - sum_xi S_{i,xi} lambda_xi` into the Hamiltonian and side
/// forms and confirm `H = -lambda_1` and vanishing side forms pointwise.
/// `lambda` carries one entry per restricted column (the side columns have
/// no separation constants); `lambda[0] = -E`.
pub fn hj_pointwise_verify(
    s: &GeneralizedStackelMatrix,
    v: &[Expr],
    lambda: &[f64],
    domain: &DomainBox,
    samples: usize,
    seed: u64,
) -> Result<HjVerification, SolveError> {
    let n = s.dim();
    let sides = s.sides();
    let nl = n - sides;
    if lambda.len() != nl {
        return Err(SolveError::BadLambda {
            got: lambda.len(),
            expected: nl,
        });
    }
    assert_eq!(v.len(), n, "potential column length");
    let pts = domain.sample(samples, DEFAULT_SEED ^ seed, DEFAULT_MARGIN);
    let mut h_res = 0.0f64;
    let mut side_res = 0.0f64;
    let mut negative = 0usize;
    for p in &pts {
        let b = domain.binding(p);
        let ev = |e: &Expr| {
            e.eval(&b).map_err(|source| SolveError::Eval {
                point: p.to_vec(),
                source,
            })
        };
        let t = s.invert_at(p)?;
        let mut p2 = vec![0.0f64; n];
        for i in 0..n {
            let mut acc = -ev(&v[i])?;
            for (xi, l) in lambda.iter().enumerate() {
                acc -= ev(s.entry(i, xi))? * l;
            }
            if acc < 0.0 {
                negative += 1;
            }
            p2[i] = acc;
        }
        let vvals: Vec<f64> = v.iter().map(ev).collect::<Result<_, _>>()?;
        for row in 0..n {
            let mut form = 0.0;
            let mut scale = 1.0f64;
            for j in 0..n {
                let term = t[(row, j)] * (p2[j] + vvals[j]);
                form += term;
                scale = scale.max(term.abs());
            }
            if row == 0 {
                h_res = h_res.max((form + lambda[0]).abs() / scale.max(lambda[0].abs()));
            } else if row >= nl {
                side_res = side_res.max(form.abs() / scale);
            }
        }
    }
    Ok(HjVerification {
        hamiltonian_residual: h_res,
        side_residual: side_res,
        negative_p2: negative,
        samples: pts.len(),
    })
}

/// One separated factor sampled on a uniform grid of its own coordinate.
#[derive(Debug, Clone)]
pub struct FactorGrid {
    pub coord: String,
    pub xs: Vec<f64>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
}

impl FactorGrid {
    /// Sample a closed-form factor on a uniform grid.
    pub fn from_expr(
        coord: &str,
        e: &Expr,
        lo: f64,
        hi: f64,
        points: usize,
    ) -> Result<FactorGrid, SolveError> {
        if points < 5 || !(hi > lo) {
            return Err(SolveError::BadInterval {
                reason: format!("need an increasing interval and >= 5 points, got [{lo}, {hi}] with {points}"),
            });
        }
        let d = e.diff(coord);
        let mut xs = Vec::with_capacity(points);
        let mut psi = Vec::with_capacity(points);
        let mut dpsi = Vec::with_capacity(points);
        let h = (hi - lo) / (points - 1) as f64;
        for i in 0..points {
            let x = lo + h * i as f64;
            let mut b = Binding::new();
            b.set(coord.to_string(), x);
            let ev = |ex: &Expr| {
                ex.eval(&b).map_err(|source| SolveError::Eval {
                    point: vec![x],
                    source,
                })
            };
            xs.push(x);
            psi.push(ev(e)?);
            dpsi.push(ev(&d)?);
        }
        Ok(FactorGrid {
            coord: coord.to_string(),
            xs,
            psi,
            dpsi,
        })
    }
}

/// How separated factors combine into a full solution.
#[derive(Debug, Clone)]
pub enum Assembly {
    /// `W(x) = sum_l W_l(x_l)`: Hamilton-Jacobi complete integrals.
    Additive,
    /// `Theta(x) = e^{R(x)} prod_l psi_l(x_l)`: (R-)separated wave
    /// solutions. `R = 0` gives a plain product.
    ProductWithR(Expr),
}

/// A full solution tabulated on the tensor grid of the factor grids.
/// Values are stored row-major with the last axis fastest.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    pub names: Vec<String>,
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl TensorGrid {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        let mut flat = 0usize;
        for (k, &i) in idx.iter().enumerate() {
            flat = flat * self.axes[k].len() + i;
        }
        flat
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(k, &i)| self.axes[k][i])
            .collect()
    }
}

/// Combine factor grids into a tensor-product solution.
pub fn assemble(factors: &[FactorGrid], mode: &Assembly) -> Result<TensorGrid, SolveError> {
    if factors.is_empty() {
        return Err(SolveError::Misassembled {
            reason: "no factors given".into(),
        });
    }
    let names: Vec<String> = factors.iter().map(|f| f.coord.clone()).collect();
    {
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != names.len() {
            return Err(SolveError::Misassembled {
                reason: "duplicate factor coordinates".into(),
            });
        }
    }
    let axes: Vec<Vec<f64>> = factors.iter().map(|f| f.xs.clone()).collect();
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let mut values = vec![0.0f64; total];
    let mut idx = vec![0usize; shape.len()];
    for flat in 0..total {
        // Decode row-major index.
        let mut rem = flat;
        for k in (0..shape.len()).rev() {
            idx[k] = rem % shape[k];
            rem /= shape[k];
        }
        values[flat] = match mode {
            Assembly::Additive => idx
                .iter()
                .enumerate()
                .map(|(k, &i)| factors[k].psi[i])
                .sum(),
            Assembly::ProductWithR(r) => {
                let prod: f64 = idx
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| factors[k].psi[i])
                    .product();
                let mut b = Binding::new();
                for (k, &i) in idx.iter().enumerate() {
                    b.set(names[k].clone(), axes[k][i]);
                }
                let rv = r.eval(&b).map_err(|source| SolveError::Eval {
                    point: idx
                        .iter()
                        .enumerate()
                        .map(|(k, &i)| axes[k][i])
                        .collect(),
                    source,
                })?;
                rv.exp() * prod
            }
        };
    }
    Ok(TensorGrid {
        names,
        axes,
        values,
    })
}
