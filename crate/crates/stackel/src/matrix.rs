//! The generalized Stäckel matrix and quantities derived from it.
//!
//! An `N x N` matrix `S` over the expression language defines a separable
//! system when each of its first `N - sides` columns is single-variable —
//! entry `(i, xi)` may depend only on coordinate `i` — while the trailing
//! `sides` columns may depend on all coordinates. Those trailing columns are
//! what distinguish a *generalized* Stäckel matrix from the classical one;
//! they pay for their freedom with side conditions on the motion.
//!
//! With `T = S^{-1}`:
//!
//! * `H_j^{-2} = T[1][j]` are the inverse diagonal metric coefficients,
//! * `L^l = sum_j T[l][j] (p_j^2 + v_j)` are the constants of the motion,
//!   `L^1` being the Hamiltonian,
//! * the last `sides` of the `L^l` are constrained to vanish (the side
//!   conditions).

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::StackelError;
use crate::expr::{Binding, Expr};
use crate::quadform::QuadraticForm;
use crate::sample::{DomainBox, DEFAULT_MARGIN, DEFAULT_SEED};

/// Determinant threshold factor: `|det S| > EPS_DET * ||S||_inf^N` is
/// required at every inversion point.
pub const EPS_DET: f64 = 1e-12;

/// Round-trip bound factor: `||S T - I||_inf <= ROUND_TRIP_TOL * kappa(S)`.
pub const ROUND_TRIP_TOL: f64 = 1e-10;

/// Diagonal orthogonal metric in inverse form: `ds^2 = sum_j H_j^2 (dx^j)^2`
/// stored through the coefficients `H_j^{-2}` (which may be negative for
/// pseudo-Riemannian signatures).
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMetric {
    coords: Vec<Arc<str>>,
    h_inv2: Vec<Expr>,
}

impl OrthogonalMetric {
    pub fn new(coords: Vec<Arc<str>>, h_inv2: Vec<Expr>) -> Self {
        assert_eq!(coords.len(), h_inv2.len());
        OrthogonalMetric { coords, h_inv2 }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Arc<str>] {
        &self.coords
    }

    pub fn coord(&self, j: usize) -> &str {
        &self.coords[j]
    }

    /// `H_j^{-2}` as an expression.
    pub fn h_inv2(&self, j: usize) -> &Expr {
        &self.h_inv2[j]
    }

    pub fn h_inv2_all(&self) -> &[Expr] {
        &self.h_inv2
    }

    pub fn binding(&self, x: &[f64]) -> Binding {
        let mut b = Binding::new();
        for (name, v) in self.coords.iter().zip(x) {
            b.set(&**name, *v);
        }
        b
    }
}

/// See the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedStackelMatrix {
    coords: Vec<Arc<str>>,
    rows: Vec<Vec<Expr>>,
    sides: usize,
}

impl GeneralizedStackelMatrix {
    /// Validate and build. The first `N - sides` columns must be
    /// single-variable: row `i` may reference only coordinate `i` there.
    /// Violations name the offending entry 1-indexed.
    pub fn new(
        coords: Vec<&str>,
        rows: Vec<Vec<Expr>>,
        sides: usize,
    ) -> Result<Self, StackelError> {
        let dim = coords.len();
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(StackelError::Shape {
                rows: rows.len(),
                cols: rows.first().map_or(0, |r| r.len()),
                dim,
            });
        }
        if sides >= dim {
            return Err(StackelError::InvalidSides { sides, dim });
        }
        let coords: Vec<Arc<str>> = coords.into_iter().map(Arc::from).collect();
        let single_cols = dim - sides;
        for (i, row) in rows.iter().enumerate() {
            for (j, entry) in row.iter().take(single_cols).enumerate() {
                for sym in entry.free_symbols() {
                    if sym != coords[i] {
                        return Err(StackelError::Structure {
                            row: i + 1,
                            col: j + 1,
                            coord: coords[i].to_string(),
                            offending: sym.to_string(),
                        });
                    }
                }
            }
        }
        Ok(GeneralizedStackelMatrix { coords, rows, sides })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn sides(&self) -> usize {
        self.sides
    }

    pub fn coords(&self) -> &[Arc<str>] {
        &self.coords
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<Expr>] {
        &self.rows
    }

    pub fn binding(&self, x: &[f64]) -> Binding {
        let mut b = Binding::new();
        for (name, v) in self.coords.iter().zip(x) {
            b.set(&**name, *v);
        }
        b
    }

    /// Evaluate all entries at a point.
    pub fn eval_at(&self, x: &[f64]) -> Result<DMatrix<f64>, StackelError> {
        let b = self.binding(x);
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.rows[i][j].eval(&b).map_err(|source| StackelError::Eval {
                    point: x.to_vec(),
                    source,
                })?;
            }
        }
        Ok(m)
    }

    /// Numeric inverse at a point.
    ///
    /// Requires `|det S| > EPS_DET * ||S||_inf^N`, and verifies the
    /// round-trip residual `||S T - I||_inf` against `ROUND_TRIP_TOL`
    /// times the condition number.
    pub fn invert_at(&self, x: &[f64]) -> Result<DMatrix<f64>, StackelError> {
        let s = self.eval_at(x)?;
        let n = self.dim();
        let norm = inf_norm(&s).max(f64::MIN_POSITIVE);
        let det = s.clone().lu().determinant();
        let threshold = EPS_DET * norm.powi(n as i32);
        if det.abs() <= threshold {
            return Err(StackelError::Singular {
                point: x.to_vec(),
                det: det.abs(),
                threshold,
            });
        }
        let t = s.clone().try_inverse().ok_or(StackelError::Singular {
            point: x.to_vec(),
            det: det.abs(),
            threshold,
        })?;
        let kappa = self.condition_at_matrix(&s);
        let residual = inf_norm(&(&s * &t - DMatrix::identity(n, n)));
        let bound = ROUND_TRIP_TOL * kappa.max(1.0);
        if residual > bound {
            return Err(StackelError::IllConditioned {
                point: x.to_vec(),
                residual,
                bound,
            });
        }
        Ok(t)
    }

    /// Spectral condition number at a point.
    pub fn condition_at(&self, x: &[f64]) -> Result<f64, StackelError> {
        Ok(self.condition_at_matrix(&self.eval_at(x)?))
    }

    fn condition_at_matrix(&self, s: &DMatrix<f64>) -> f64 {
        let svd = s.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin == 0.0 {
            f64::INFINITY
        } else {
            smax / smin
        }
    }

    /// Symbolic determinant by cofactor expansion. Supported through
    /// dimension 4, which covers every cataloged system.
    pub fn det_expr(&self) -> Result<Expr, StackelError> {
        if self.dim() > 4 {
            return Err(StackelError::SymbolicDimension { dim: self.dim() });
        }
        Ok(det_expr(&self.rows))
    }

    /// Symbolic inverse `T = S^{-1}` by the cofactor formula, as rows of
    /// expressions. Supported through dimension 4.
    pub fn symbolic_inverse(&self) -> Result<Vec<Vec<Expr>>, StackelError> {
        if self.dim() > 4 {
            return Err(StackelError::SymbolicDimension { dim: self.dim() });
        }
        let n = self.dim();
        let det = det_expr(&self.rows);
        let mut t = vec![vec![Expr::num(0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                // T[i][j] = cofactor C[j][i] / det
                let minor = minor_of(&self.rows, j, i);
                let m = det_expr(&minor);
                let signed = if (i + j) % 2 == 0 { m } else { Expr::neg(m) };
                t[i][j] = Expr::div(signed, det.clone());
            }
        }
        Ok(t)
    }

    /// Extract the orthogonal metric `H_j^{-2} = T[1][j]`.
    ///
    /// Rejects matrices for which some coefficient vanishes identically on
    /// the sampled domain (the matrix is invertible but defines no
    /// orthogonal metric — the identity matrix is the canonical example).
    pub fn metric_from(&self, domain: &DomainBox) -> Result<OrthogonalMetric, StackelError> {
        let t = self.symbolic_inverse()?;
        let row1 = t.into_iter().next().expect("dim >= 1");
        let pts = domain.sample(20, DEFAULT_SEED, DEFAULT_MARGIN);
        for (j, h) in row1.iter().enumerate() {
            let mut all_zero = true;
            for p in &pts {
                let b = domain.binding(p);
                let v = h.eval(&b).map_err(|source| StackelError::Eval {
                    point: p.clone(),
                    source,
                })?;
                if v.abs() > 1e-12 {
                    all_zero = false;
                    break;
                }
            }
            if all_zero {
                return Err(StackelError::DegenerateMetric { index: j + 1 });
            }
        }
        Ok(OrthogonalMetric::new(self.coords.clone(), row1))
    }

    /// The full ladder of constants of the motion
    /// `L^l = sum_j T[l][j] (p_j^2 + v_j)`, `l = 1..N`, with `L^1` the
    /// Hamiltonian and the trailing `sides` rows the side conditions.
    ///
    /// Each potential component `v_j` must be single-variable in its own
    /// coordinate.
    pub fn constants_of_motion(&self, v: &[Expr]) -> Result<Vec<QuadraticForm>, StackelError> {
        self.validate_potential(v)?;
        let t = self.symbolic_inverse()?;
        Ok(t.into_iter()
            .map(|row| {
                let mut w = Expr::num(0.0);
                for (tj, vj) in row.iter().zip(v) {
                    w = Expr::add(w, Expr::mul(tj.clone(), vj.clone()));
                }
                QuadraticForm { coeffs: row, w }
            })
            .collect())
    }

    /// The Hamiltonian's momentum-free part `V = sum_j T[1][j] v_j`.
    pub fn assemble_potential(&self, v: &[Expr]) -> Result<Expr, StackelError> {
        self.validate_potential(v)?;
        let t = self.symbolic_inverse()?;
        let mut acc = Expr::num(0.0);
        for (tj, vj) in t[0].iter().zip(v) {
            acc = Expr::add(acc, Expr::mul(tj.clone(), vj.clone()));
        }
        Ok(acc)
    }

    fn validate_potential(&self, v: &[Expr]) -> Result<(), StackelError> {
        assert_eq!(v.len(), self.dim(), "potential component count mismatch");
        for (i, vi) in v.iter().enumerate() {
            for sym in vi.free_symbols() {
                if sym != self.coords[i] {
                    return Err(StackelError::ForeignPotential {
                        index: i + 1,
                        coord: self.coords[i].to_string(),
                        offending: sym.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// The eigenvalue ratios `rho^(l)_j = T[l][j] / T[1][j]` at a point, as
    /// an `N x N` matrix whose first row is identically 1.
    pub fn eigenvalues_rho(&self, x: &[f64]) -> Result<DMatrix<f64>, StackelError> {
        let t = self.invert_at(x)?;
        let n = self.dim();
        let scale = inf_norm(&t).max(f64::MIN_POSITIVE);
        let mut rho = DMatrix::zeros(n, n);
        for j in 0..n {
            let denom = t[(0, j)];
            if denom.abs() <= 1e-12 * scale {
                return Err(StackelError::ZeroMetricCoefficient {
                    index: j + 1,
                    point: x.to_vec(),
                });
            }
            rho[(0, j)] = 1.0;
            for l in 1..n {
                rho[(l, j)] = t[(l, j)] / denom;
            }
        }
        Ok(rho)
    }

    /// Rescale the last (side-condition) column by `f`, checking that `f`
    /// does not vanish on the sampled domain: a near-zero value or a sign
    /// change between samples (which forces a zero crossing of a continuous
    /// function) is rejected. The zero set of the side condition, and hence
    /// the separable structure, is unchanged.
    pub fn column_rescale(
        &self,
        f: &Expr,
        domain: &DomainBox,
    ) -> Result<GeneralizedStackelMatrix, StackelError> {
        let mut weakest: Option<(f64, Vec<f64>)> = None;
        let mut signs = (false, false);
        for p in domain.sample(20, DEFAULT_SEED, DEFAULT_MARGIN) {
            let b = domain.binding(&p);
            let v = f.eval(&b).map_err(|source| StackelError::Eval {
                point: p.clone(),
                source,
            })?;
            if v.abs() <= 1e-12 {
                return Err(StackelError::RescaleVanishes { point: p });
            }
            signs.0 |= v > 0.0;
            signs.1 |= v < 0.0;
            if weakest.as_ref().map_or(true, |(w, _)| v.abs() < *w) {
                weakest = Some((v.abs(), p));
            }
        }
        if signs.0 && signs.1 {
            let (_, point) = weakest.expect("at least one sample");
            return Err(StackelError::RescaleVanishes { point });
        }
        let n = self.dim();
        let mut rows = self.rows.clone();
        for row in rows.iter_mut() {
            row[n - 1] = Expr::mul(f.clone(), row[n - 1].clone());
        }
        Ok(GeneralizedStackelMatrix {
            coords: self.coords.clone(),
            rows,
            sides: self.sides,
        })
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn minor_of(rows: &[Vec<Expr>], skip_row: usize, skip_col: usize) -> Vec<Vec<Expr>> {
    rows.iter()
        .enumerate()
        .filter(|(i, _)| *i != skip_row)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(j, _)| *j != skip_col)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

fn det_expr(rows: &[Vec<Expr>]) -> Expr {
    let n = rows.len();
    if n == 1 {
        return rows[0][0].clone();
    }
    let mut acc = Expr::num(0.0);
    for i in 0..n {
        if rows[i][0].as_num() == Some(0.0) {
            continue;
        }
        let term = Expr::mul(rows[i][0].clone(), det_expr(&minor_of(rows, i, 0)));
        acc = if i % 2 == 0 {
            Expr::add(acc, term)
        } else {
            Expr::sub(acc, term)
        };
    }
    acc
}
