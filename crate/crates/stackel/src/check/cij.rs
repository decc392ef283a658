//! The second-order `C` operator and the regular-separability test built
//! on it.
//!
//! For an orthogonal metric with inverse coefficients `H_i^{-2}`,
//!
//! ```text
//! C_ij(f) = d_i d_j f
//!         - (d_j H_i^{-2} / H_i^{-2}) d_i f
//!         - (d_i H_j^{-2} / H_j^{-2}) d_j f        (i != j)
//! ```
//!
//! Both first-order coefficients are logarithmic derivatives of the metric
//! coefficients. `C_ij` is symmetric in `(i, j)`. Regular orthogonal
//! separation of the Hamilton-Jacobi and Helmholtz equations is
//! characterized by `C_ij(H_k^{-2}) = 0` for all `k` and `C_ij(V) = 0`;
//! nonvanishing values are the raw material for the nonregular theory, where
//! their ratios produce the side-condition eigenvalue ratios `B_k`.

use crate::error::CheckError;
use crate::expr::Expr;
use crate::matrix::OrthogonalMetric;
use crate::report::{CheckReport, ResidualMax, Verdict};
use crate::sample::{DomainBox, DEFAULT_MARGIN, DEFAULT_SEED};

use super::{chain_member, chain_residual, ChainMember, ZERO_DEN};

/// The three terms of `C_ij(f)`: `C = d2 - t1 - t2`. Keeping them separate
/// lets residuals be scaled by the largest term magnitude.
pub(crate) struct CijParts {
    pub d2: Expr,
    pub t1: Expr,
    pub t2: Expr,
}

impl CijParts {
    pub(crate) fn build(metric: &OrthogonalMetric, f: &Expr, i: usize, j: usize) -> Self {
        assert_ne!(i, j, "C_ij requires distinct indices");
        let xi = metric.coord(i).to_string();
        let xj = metric.coord(j).to_string();
        let hi = metric.h_inv2(i);
        let hj = metric.h_inv2(j);
        let d2 = f.diff(&xi).diff(&xj);
        let t1 = Expr::mul(Expr::div(hi.diff(&xj), hi.clone()), f.diff(&xi));
        let t2 = Expr::mul(Expr::div(hj.diff(&xi), hj.clone()), f.diff(&xj));
        CijParts { d2, t1, t2 }
    }

    pub(crate) fn combined(&self) -> Expr {
        Expr::sub(self.d2.clone(), Expr::add(self.t1.clone(), self.t2.clone()))
    }
}

/// `C_ij(f)` as a symbolic expression. `i` and `j` are 0-based coordinate
/// indices and must differ.
pub fn cij_operator(metric: &OrthogonalMetric, f: &Expr, i: usize, j: usize) -> Expr {
    CijParts::build(metric, f, i, j).combined()
}

/// Test for regular orthogonal separability: `C_ij(H_k^{-2}) = 0` for all
/// `i < j`, `k`, and `C_ij(V) = 0`, at `samples` points of `domain`.
pub fn check_regular(
    metric: &OrthogonalMetric,
    v: &Expr,
    domain: &DomainBox,
    samples: usize,
    tol: f64,
) -> Result<CheckReport, CheckError> {
    let n = metric.dim();
    let mut exprs: Vec<(String, CijParts)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                exprs.push((
                    format!("C_{}{}(H_{}^-2)", i + 1, j + 1, k + 1),
                    CijParts::build(metric, metric.h_inv2(k), i, j),
                ));
            }
            exprs.push((
                format!("C_{}{}(V)", i + 1, j + 1),
                CijParts::build(metric, v, i, j),
            ));
        }
    }

    let mut max = ResidualMax::default();
    let mut worst = String::new();
    let pts = domain.sample(samples, DEFAULT_SEED, DEFAULT_MARGIN);
    for p in &pts {
        let b = domain.binding(p);
        for (label, parts) in &exprs {
            let d2 = parts.d2.eval(&b).map_err(|source| CheckError::Eval {
                point: p.clone(),
                source,
            })?;
            let t1 = parts.t1.eval(&b).map_err(|source| CheckError::Eval {
                point: p.clone(),
                source,
            })?;
            let t2 = parts.t2.eval(&b).map_err(|source| CheckError::Eval {
                point: p.clone(),
                source,
            })?;
            let scale = 1.0 + d2.abs().max(t1.abs()).max(t2.abs());
            let r = (d2 - t1 - t2).abs() / scale;
            if r > max.get() {
                worst = label.clone();
            }
            max.push(r);
        }
    }

    let mut report = CheckReport::from_residual("regular.cij", tol, pts.len(), max.get());
    report = report.note(
        "both first-order coefficients of the C operator are logarithmic \
         derivatives of the metric coefficients",
    );
    if report.verdict == Verdict::Fail {
        report = report.note(format!("largest residual from {}", worst));
    }
    Ok(report)
}

/// Candidate side-condition eigenvalue ratios from C-operator ratios:
/// `B_k = [C_ij(H_k^{-2}) / H_k^{-2}] / [C_ij(H_base^{-2}) / H_base^{-2}]`,
/// which must be independent of the pair `(i, j)` for a nonregular system.
///
/// The base index is the first coordinate whose denominator is healthy at
/// every sample; if every `C_ij(H_k^{-2})` vanishes, the metric is regular
/// and the verdict says so. Fitted `B_k` values are reported per sample as
/// multipliers `B_1 ... B_N` (with `B_base = 1`).
pub fn candidate_bn(
    metric: &OrthogonalMetric,
    domain: &DomainBox,
    samples: usize,
    tol: f64,
) -> Result<CheckReport, CheckError> {
    let n = metric.dim();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    // ratio[k][pair] = C_ij(H_k^{-2}) / H_k^{-2}, with term scales
    let mut parts: Vec<Vec<CijParts>> = Vec::new();
    for k in 0..n {
        parts.push(
            pairs
                .iter()
                .map(|&(i, j)| CijParts::build(metric, metric.h_inv2(k), i, j))
                .collect(),
        );
    }

    let pts = domain.sample(samples, DEFAULT_SEED, DEFAULT_MARGIN);
    // Collected C-ratio values: c[k][s][pair]
    let mut c = vec![vec![vec![0.0f64; pairs.len()]; pts.len()]; n];
    let mut c_scale = vec![vec![vec![0.0f64; pairs.len()]; pts.len()]; n];
    for (s, p) in pts.iter().enumerate() {
        let b = domain.binding(p);
        for k in 0..n {
            let hk = metric.h_inv2(k).eval(&b).map_err(|source| CheckError::Eval {
                point: p.clone(),
                source,
            })?;
            for (q, part) in parts[k].iter().enumerate() {
                let d2 = part.d2.eval(&b).map_err(|source| CheckError::Eval {
                    point: p.clone(),
                    source,
                })?;
                let t1 = part.t1.eval(&b).map_err(|source| CheckError::Eval {
                    point: p.clone(),
                    source,
                })?;
                let t2 = part.t2.eval(&b).map_err(|source| CheckError::Eval {
                    point: p.clone(),
                    source,
                })?;
                c[k][s][q] = (d2 - t1 - t2) / hk;
                c_scale[k][s][q] = (1.0 + d2.abs().max(t1.abs()).max(t2.abs())) / hk.abs();
            }
        }
    }

    // Regular metric: every C ratio vanishes.
    let all_zero = (0..n).all(|k| {
        c[k].iter().enumerate().all(|(s, row)| {
            row.iter()
                .enumerate()
                .all(|(q, v)| v.abs() <= tol * c_scale[k][s][q])
        })
    });
    if all_zero {
        return Ok(CheckReport::from_residual("nonregular.candidate_bn", tol, pts.len(), 0.0)
            .with_verdict(Verdict::Regular)
            .note("all C_ij(H_k^-2) vanish: metric is regular Stackel, no side condition needed"));
    }

    // Base coordinate: the one whose C ratio is healthy at the most
    // (sample, pair) entries. Pairs where the base ratio vanishes are
    // covered by the zero-denominator convention, which then requires the
    // numerator ratio to vanish as well.
    let healthy = |k: usize, s: usize, q: usize| {
        c[k][s][q].abs() >= ZERO_DEN * (1.0 + c_scale[k][s][q])
    };
    let counts: Vec<usize> = (0..n)
        .map(|k| {
            (0..pts.len())
                .map(|s| (0..pairs.len()).filter(|&q| healthy(k, s, q)).count())
                .sum()
        })
        .collect();
    let (base, &best) = counts
        .iter()
        .enumerate()
        .max_by_key(|(k, c)| (**c, std::cmp::Reverse(*k)))
        .expect("n >= 1");
    if best == 0 {
        return Ok(CheckReport::from_residual(
            "nonregular.candidate_bn",
            tol,
            pts.len(),
            f64::INFINITY,
        )
        .with_verdict(Verdict::Degenerate)
        .note(
            "no coordinate has a nonvanishing C ratio anywhere to serve as \
             the base of the eigenvalue-ratio candidates",
        ));
    }

    let mut max = ResidualMax::default();
    let mut b_values: Vec<Vec<f64>> = vec![Vec::with_capacity(pts.len()); n];
    for s in 0..pts.len() {
        for k in 0..n {
            let members: Vec<ChainMember> = (0..pairs.len())
                .map(|q| {
                    let scale = 1.0 + c_scale[k][s][q].max(c_scale[base][s][q]);
                    chain_member(c[k][s][q], c[base][s][q], scale)
                })
                .collect();
            max.push(chain_residual(&members));
            // Representative value: first healthy member, else 0.
            let val = members
                .iter()
                .find_map(|m| match m {
                    ChainMember::Value(v) => Some(*v),
                    _ => None,
                })
                .unwrap_or(0.0);
            b_values[k].push(val);
        }
    }

    let mut report =
        CheckReport::from_residual("nonregular.candidate_bn", tol, pts.len(), max.get());
    if base != 0 {
        report = report.note(format!(
            "base coordinate permuted to {} (coordinate 1 has vanishing C ratios)",
            base + 1
        ));
    }
    for (k, vals) in b_values.into_iter().enumerate() {
        report = report.multiplier(format!("B_{}", k + 1), vals);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn e(src: &str) -> Expr {
        Expr::parse(src).unwrap()
    }

    fn metric(coords: &[&str], h: &[&str]) -> OrthogonalMetric {
        OrthogonalMetric::new(
            coords.iter().map(|c| Arc::from(*c)).collect(),
            h.iter().map(|s| e(s)).collect(),
        )
    }

    #[test]
    fn cij_reduces_to_mixed_partial_for_flat_metric() {
        let m = metric(&["u", "v"], &["1", "1"]);
        let c = cij_operator(&m, &e("u*v"), 0, 1);
        let b = crate::expr::Binding::from_pairs([("u", 0.3), ("v", 0.8)]);
        assert_eq!(c.eval(&b).unwrap(), 1.0);
    }

    #[test]
    fn cij_is_symmetric() {
        let m = metric(&["u", "v"], &["u + v^2", "exp(u)"]);
        let f = e("sin(u)*v");
        let a = cij_operator(&m, &f, 0, 1);
        let b = cij_operator(&m, &f, 1, 0);
        let bind = crate::expr::Binding::from_pairs([("u", 0.4), ("v", 1.1)]);
        let (x, y) = (a.eval(&bind).unwrap(), b.eval(&bind).unwrap());
        assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn spherical_metric_is_regular() {
        let m = metric(
            &["r", "theta", "phi"],
            &["1", "1/r^2", "1/(r^2*sin(theta)^2)"],
        );
        let domain = DomainBox::new([
            ("r", 0.8, 2.0),
            ("theta", 0.4, 1.2),
            ("phi", 0.1, 1.5),
        ]);
        let rep = check_regular(&m, &e("1/r"), &domain, 30, 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "residual {}", rep.max_residual);
    }

    #[test]
    fn canonical_mixed_side_column_is_not_regular() {
        // H_u^{-2} = f/(f-1), H_v^{-2} = -1/(f-1) with f = u + v.
        let m = metric(
            &["u", "v"],
            &["(u + v)/(u + v - 1)", "-1/(u + v - 1)"],
        );
        let domain = DomainBox::new([("u", 1.5, 2.5), ("v", 0.5, 0.9)]);
        let rep = check_regular(&m, &e("0"), &domain, 20, 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
    }

    #[test]
    fn candidate_bn_recovers_f_for_canonical_metric() {
        let m = metric(
            &["u", "v"],
            &["(u + v)/(u + v - 1)", "-1/(u + v - 1)"],
        );
        let domain = DomainBox::new([("u", 1.5, 2.5), ("v", 0.5, 0.9)]);
        let rep = candidate_bn(&m, &domain, 20, 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "residual {}", rep.max_residual);
        // B_2 must equal f = u + v at each sample.
        let pts = domain.sample(20, DEFAULT_SEED, DEFAULT_MARGIN);
        let b2 = &rep.multipliers["B_2"];
        for (p, b) in pts.iter().zip(b2) {
            let f = p[0] + p[1];
            assert!((b - f).abs() <= 1e-8 * (1.0 + f.abs()), "B_2 = {} vs f = {}", b, f);
        }
    }

    #[test]
    fn candidate_bn_flags_regular_metric() {
        let m = metric(
            &["r", "theta", "phi"],
            &["1", "1/r^2", "1/(r^2*sin(theta)^2)"],
        );
        let domain = DomainBox::new([
            ("r", 0.8, 2.0),
            ("theta", 0.4, 1.2),
            ("phi", 0.1, 1.5),
        ]);
        let rep = candidate_bn(&m, &domain, 20, 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Regular);
    }
}
