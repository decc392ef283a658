//! Commutator closure of the separation operators.
//!
//! The frame operators `L^b = sum_l T^{bl} (d_l^2 + f_l d_l + v_l)` built
//! from the rows of the inverse matrix commute only up to the side
//! operator(s): each commutator is a first-order multiple,
//!
//! ```text
//! [L^a, L^j] = (g^0 + sum_h g^h d_h) L^N
//! ```
//!
//! (a pair of first-order multipliers when there are two side conditions).
//! With two side conditions the pure-side commutator `[L^{N-1}, L^N]` must
//! vanish outright, and for an ordinary Stäckel matrix every commutator
//! vanishes.
//!
//! Coefficient extraction is exact, not discretized: applying an operator
//! of order at most three to the probe functions
//! `phi_E = prod_m (x_m - c_m)^{E_m} / E_m!` and evaluating at `x = c`
//! returns precisely the coefficient of `d^E`, because every other term of
//! the Taylor expansion dies at the base point. A commutator of two
//! diagonal second-order operators has order at most three (the symbol
//! parts commute), so probing all `|E| <= 3` determines it completely.

use std::sync::Arc;

use crate::error::CheckError;
use crate::expr::{Binding, Expr};
use crate::matrix::GeneralizedStackelMatrix;
use crate::report::{CheckReport, ResidualMax, Verdict};
use crate::sample::{DomainBox, DEFAULT_MARGIN, DEFAULT_SEED};
use crate::solve::{separable_frame_op, DiffOperator};

use super::lstsq;

use nalgebra::{DMatrix, DVector};

/// Pure-side commutators (and every commutator of an ordinary Stäckel
/// matrix) must vanish to this scaled tolerance.
pub const COMMUTE_TOL: f64 = 1e-10;

/// The full set of frame operators for a generalized matrix.
#[derive(Debug, Clone)]
pub struct SeparationOperators {
    coords: Vec<Arc<str>>,
    sides: usize,
    /// `ops[b]` is `L^{b+1}`; `ops[0]` is the Hamiltonian operator.
    pub ops: Vec<DiffOperator>,
}

impl SeparationOperators {
    /// Build all rows at once from the symbolic inverse. `f` and `v` are
    /// the per-coordinate first-order profile and potential columns and are
    /// expected to be single-variable; the closure check itself is the
    /// witness when they are not.
    pub fn build(
        s: &GeneralizedStackelMatrix,
        f: &[Expr],
        v: &[Expr],
    ) -> Result<Self, CheckError> {
        let t = s.symbolic_inverse()?;
        let ops = t
            .iter()
            .map(|row| separable_frame_op(s.coords(), row, f, v))
            .collect();
        Ok(SeparationOperators {
            coords: s.coords().to_vec(),
            sides: s.sides(),
            ops,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn sides(&self) -> usize {
        self.sides
    }

    pub fn hamiltonian(&self) -> &DiffOperator {
        &self.ops[0]
    }

    /// The side operator(s): the final `sides` rows.
    pub fn side_ops(&self) -> &[DiffOperator] {
        &self.ops[self.coords.len() - self.sides..]
    }
}

/// All multi-indices over `n` slots with total degree at most `maxdeg`.
pub(crate) fn multi_indices(n: usize, maxdeg: usize) -> Vec<Vec<usize>> {
    fn rec(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, slot: usize, left: usize, n: usize) {
        if slot == n {
            out.push(cur.clone());
            return;
        }
        for d in 0..=left {
            cur.push(d);
            rec(out, cur, slot + 1, left - d, n);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut out, &mut Vec::new(), 0, maxdeg, n);
    out
}

/// The probe `phi_E` for exact coefficient extraction, with base-point
/// parameters `_c_<coord>`.
pub(crate) fn probe(coords: &[Arc<str>], e: &[usize]) -> Expr {
    const FACT: [f64; 4] = [1.0, 1.0, 2.0, 6.0];
    let mut acc = Expr::num(1.0);
    let mut fact = 1.0;
    for (m, &deg) in e.iter().enumerate() {
        if deg > 0 {
            let x = Expr::sym(coords[m].to_string());
            let c = Expr::sym(format!("_c_{}", coords[m]));
            acc = Expr::mul(acc, Expr::powi(Expr::sub(x, c), deg as i32));
            fact *= FACT[deg];
        }
    }
    Expr::div(acc, Expr::num(fact))
}

/// Bind coordinates and their probe parameters to the same point.
fn probe_binding(domain: &DomainBox, coords: &[Arc<str>], p: &[f64]) -> Binding {
    let mut b = domain.binding(p);
    for (m, c) in coords.iter().enumerate() {
        b.set(format!("_c_{}", c), p[m]);
    }
    b
}

/// See the module docs. Gates on the least-squares closure residual at
/// `tol` and on pure-side/ordinary-Stäckel vanishing at [`COMMUTE_TOL`].
pub fn operator_commutator_closure(
    s: &GeneralizedStackelMatrix,
    f: &[Expr],
    v: &[Expr],
    domain: &DomainBox,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<CheckReport, CheckError> {
    let n = s.dim();
    let sides = s.sides();
    if sides == 0 || sides > 2 {
        return Err(CheckError::BadInput {
            check: "commutators".into(),
            requirement: format!("1 or 2 side conditions, got {}", sides),
        });
    }
    let sep = SeparationOperators::build(s, f, v)?;
    let coords = sep.coords.clone();
    let indices = multi_indices(n, 3);
    let probes: Vec<Expr> = indices.iter().map(|e| probe(&coords, e)).collect();

    // Applied expressions, built once. For each probe:
    //  - commutator of each pair,
    //  - side candidates L^s and d_h ∘ L^s.
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let is_side = |k: usize| k >= n - sides;

    let mut commutator_exprs: Vec<Vec<Expr>> = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let per_probe = probes
            .iter()
            .map(|phi| {
                Expr::sub(
                    sep.ops[i].apply(&sep.ops[j].apply(phi)),
                    sep.ops[j].apply(&sep.ops[i].apply(phi)),
                )
            })
            .collect();
        commutator_exprs.push(per_probe);
    }
    // candidates[si][column][probe]: column 0 is the plain side operator,
    // columns 1..n+1 are d_h ∘ side operator.
    let side_rows: Vec<usize> = (n - sides..n).collect();
    let mut candidate_exprs: Vec<Vec<Vec<Expr>>> = Vec::new();
    for &si in &side_rows {
        let mut cols: Vec<Vec<Expr>> = Vec::with_capacity(n + 1);
        let applied: Vec<Expr> = probes.iter().map(|phi| sep.ops[si].apply(phi)).collect();
        cols.push(applied.clone());
        for h in 0..n {
            cols.push(
                applied
                    .iter()
                    .map(|ap| ap.diff(coords[h].as_ref()))
                    .collect(),
            );
        }
        candidate_exprs.push(cols);
    }

    let stackel_like = (n - sides..n).all(|col| {
        (0..n).all(|k| {
            coords
                .iter()
                .enumerate()
                .all(|(m, x)| m == k || !s.entry(k, col).contains_symbol(x))
        })
    });

    let pts = domain.sample(samples, DEFAULT_SEED ^ seed, DEFAULT_MARGIN);
    let mut fit_max = ResidualMax::default();
    let mut pure_max = ResidualMax::default();
    let mut vanish_max = ResidualMax::default();
    let mut fitted_first: Vec<(String, Vec<f64>)> = Vec::new();

    for (pt_idx, p) in pts.iter().enumerate() {
        let b = probe_binding(domain, &coords, p);
        let ev = |e: &Expr| -> Result<f64, CheckError> {
            e.eval(&b).map_err(|source| CheckError::Eval {
                point: p.to_vec(),
                source,
            })
        };

        // Candidate coefficient table and its magnitude for scaling.
        let mut cand: Vec<Vec<Vec<f64>>> = Vec::with_capacity(side_rows.len());
        let mut scale = 1.0f64;
        for cols in &candidate_exprs {
            let mut numeric_cols = Vec::with_capacity(cols.len());
            for col in cols {
                let vals: Vec<f64> = col.iter().map(&ev).collect::<Result<_, _>>()?;
                for v in &vals {
                    scale = scale.max(v.abs());
                }
                numeric_cols.push(vals);
            }
            cand.push(numeric_cols);
        }

        for (q, &(i, j)) in pairs.iter().enumerate() {
            let k_coeffs: Vec<f64> = commutator_exprs[q]
                .iter()
                .map(&ev)
                .collect::<Result<_, _>>()?;
            let kmax = k_coeffs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let row_scale = scale.max(kmax);

            if is_side(i) && is_side(j) {
                // Pure-side pair: must vanish outright.
                pure_max.push(kmax / row_scale);
                continue;
            }

            let unknowns = side_rows.len() * (n + 1);
            let mut a = DMatrix::<f64>::zeros(indices.len(), unknowns);
            for (row, _) in indices.iter().enumerate() {
                for (si, cols) in cand.iter().enumerate() {
                    for (cidx, col) in cols.iter().enumerate() {
                        a[(row, si * (n + 1) + cidx)] = col[row];
                    }
                }
            }
            let rhs = DVector::from_column_slice(&k_coeffs);
            let fit = lstsq(&a, &rhs);
            fit_max.push(fit.max_residual / row_scale);
            if pt_idx == 0 {
                fitted_first.push((
                    format!("commutator_F_{}_{}", i + 1, j + 1),
                    fit.solution.iter().copied().collect(),
                ));
            }
            if stackel_like {
                vanish_max.push(kmax / row_scale);
            }
        }
    }

    let mut gate = fit_max.get().max(pure_max.get());
    if stackel_like {
        gate = gate.max(vanish_max.get());
    }
    let mut verdict = if fit_max.get() <= tol { Verdict::Pass } else { Verdict::Fail };
    if pure_max.get() > COMMUTE_TOL || (stackel_like && vanish_max.get() > COMMUTE_TOL) {
        verdict = Verdict::Fail;
    }

    let mut report = CheckReport::from_residual("commutators", tol, pts.len(), gate)
        .with_verdict(verdict)
        .note(format!(
            "closure fit residual {:.3e} over {} probe functions",
            fit_max.get(),
            indices.len()
        ));
    if sides == 2 {
        report = report.note(format!(
            "pure-side commutator residual {:.3e} (must vanish, tolerance {:.1e})",
            pure_max.get(),
            COMMUTE_TOL
        ));
    }
    if stackel_like {
        report = report.note(format!(
            "final column(s) single-variable: every commutator vanishes to {:.3e}",
            vanish_max.get()
        ));
    }
    for (key, vals) in fitted_first {
        report = report.multiplier(key, vals);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probes_extract_exact_coefficients() {
        // Op1 = d_u^2, Op2 = u d_v: [Op1, Op2] = 2 d_u d_v exactly.
        let coords: Vec<Arc<str>> = vec![Arc::from("u"), Arc::from("v")];
        let op1 = DiffOperator::new(
            coords.clone(),
            vec![Expr::num(1.0), Expr::num(0.0)],
            vec![Expr::num(0.0), Expr::num(0.0)],
            Expr::num(0.0),
        );
        let op2 = DiffOperator::new(
            coords.clone(),
            vec![Expr::num(0.0), Expr::num(0.0)],
            vec![Expr::num(0.0), Expr::sym("u")],
            Expr::num(0.0),
        );
        let box_ = DomainBox::new([("u", 0.5, 1.5), ("v", 0.5, 1.5)]);
        let p = vec![1.1, 0.7];
        let b = probe_binding(&box_, &coords, &p);
        for e in multi_indices(2, 3) {
            let phi = probe(&coords, &e);
            let k = Expr::sub(op1.apply(&op2.apply(&phi)), op2.apply(&op1.apply(&phi)));
            let got = k.eval(&b).unwrap();
            let expect = if e == [1, 1] { 2.0 } else { 0.0 };
            assert!(
                (got - expect).abs() < 1e-12,
                "coefficient at {:?}: {} vs {}",
                e,
                got,
                expect
            );
        }
    }

    fn canonical(fsrc: &str) -> GeneralizedStackelMatrix {
        let one = Expr::num(1.0);
        GeneralizedStackelMatrix::new(
            vec!["u".into(), "v".into()],
            vec![
                vec![one.clone(), one.clone()],
                vec![one.clone(), Expr::parse(fsrc).unwrap()],
            ],
            1,
        )
        .unwrap()
    }

    #[test]
    fn canonical_commutator_closes_on_side_operator() {
        let s = canonical("u+v");
        let f = vec![Expr::num(0.0), Expr::num(0.0)];
        let v = vec![Expr::parse("u^2").unwrap(), Expr::parse("v^2").unwrap()];
        let box_ = DomainBox::new([("u", 1.5, 2.5), ("v", 0.5, 0.9)]);
        let rep = operator_commutator_closure(&s, &f, &v, &box_, 8, 1e-8, 3).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "notes: {:?}", rep.notes);
        assert!(rep.multipliers.contains_key("commutator_F_1_2"));
    }

    #[test]
    fn first_order_profile_participates() {
        // Nonzero single-variable f keeps the closure intact.
        let s = canonical("u+v");
        let f = vec![Expr::parse("1/u").unwrap(), Expr::parse("v").unwrap()];
        let v = vec![Expr::num(0.0), Expr::num(1.0)];
        let box_ = DomainBox::new([("u", 1.5, 2.5), ("v", 0.5, 0.9)]);
        let rep = operator_commutator_closure(&s, &f, &v, &box_, 8, 1e-8, 3).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "notes: {:?}", rep.notes);
    }

    #[test]
    fn foreign_profile_breaks_closure() {
        // f_1 depending on v is outside the separable class.
        let s = canonical("u+v");
        let f = vec![Expr::parse("v").unwrap(), Expr::num(0.0)];
        let v = vec![Expr::num(0.0), Expr::num(0.0)];
        let box_ = DomainBox::new([("u", 1.5, 2.5), ("v", 0.5, 0.9)]);
        let rep = operator_commutator_closure(&s, &f, &v, &box_, 8, 1e-8, 3).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep.max_residual > 1e-4);
    }

    #[test]
    fn ordinary_stackel_commutators_vanish() {
        let s = canonical("v");
        let f = vec![Expr::num(0.0), Expr::num(0.0)];
        let v = vec![Expr::num(0.0), Expr::num(0.0)];
        let box_ = DomainBox::new([("u", 1.5, 2.5), ("v", 1.5, 2.5)]);
        let rep = operator_commutator_closure(&s, &f, &v, &box_, 8, 1e-8, 3).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(rep
            .notes
            .iter()
            .any(|n| n.contains("every commutator vanishes")));
    }
}
