//! Two-dimensional factorization test.
//!
//! For a 2D system presented through a single profile function `f(u, v)`,
//! R-separation of the Helmholtz equation with a scalar potential exists
//! precisely when `f` factors as `F1(u) * F2(v)`, i.e. when
//! `d_u d_v log f = 0`. Nonfactorizable profiles admit Hamilton-Jacobi
//! separation with a side condition but no Helmholtz analogue unless a
//! vector potential is brought in.

use crate::error::CheckError;
use crate::expr::Expr;
use crate::report::{CheckReport, ResidualMax, Verdict};
use crate::sample::{DomainBox, DEFAULT_MARGIN, DEFAULT_SEED};

/// The log-free form of `d_u d_v log f`:
///
/// ```text
/// (f * d_u d_v f - d_u f * d_v f) / f^2
/// ```
///
/// Agrees with the mixed logarithmic derivative wherever `f != 0`, without
/// taking logarithms of negative profiles.
pub fn mixed_log_derivative(f: &Expr, u: &str, v: &str) -> Expr {
    let fu = f.diff(u);
    let fv = f.diff(v);
    let fuv = fu.diff(v);
    Expr::div(
        Expr::sub(Expr::mul(f.clone(), fuv), Expr::mul(fu, fv)),
        Expr::powi(f.clone(), 2),
    )
}

/// Classify `f` over the box: `Factorizable` iff the mixed logarithmic
/// derivative vanishes at every sample to `tol` (scaled), else
/// `Nonfactorizable`. Raw values are reported in the `mixed_log_derivative`
/// multiplier channel.
pub fn nogo2d_check(
    f: &Expr,
    u: &str,
    v: &str,
    domain: &DomainBox,
    samples: usize,
    tol: f64,
) -> Result<CheckReport, CheckError> {
    let fu = f.diff(u);
    let fv = f.diff(v);
    let fuv = fu.diff(v);

    let mut max = ResidualMax::default();
    let mut values = Vec::new();
    let pts = domain.sample(samples, DEFAULT_SEED, DEFAULT_MARGIN);
    for p in &pts {
        let b = domain.binding(p);
        let ev = |e: &Expr| {
            e.eval(&b).map_err(|source| CheckError::Eval {
                point: p.clone(),
                source,
            })
        };
        let (f0, fu0, fv0, fuv0) = (ev(f)?, ev(&fu)?, ev(&fv)?, ev(&fuv)?);
        let num = f0 * fuv0 - fu0 * fv0;
        // Scale by the squared profile plus the term magnitudes, so the
        // classification is insensitive to the overall size of f.
        let scale = f0 * f0 + (f0 * fuv0).abs() + (fu0 * fv0).abs();
        max.push(num.abs() / scale.max(f64::MIN_POSITIVE));
        values.push(num / (f0 * f0));
    }

    let verdict = if max.get() <= tol {
        Verdict::Factorizable
    } else {
        Verdict::Nonfactorizable
    };
    let mut report = CheckReport::from_residual("nogo2d", tol, pts.len(), max.get())
        .with_verdict(verdict)
        .multiplier("mixed_log_derivative", values);
    report = match verdict {
        Verdict::Factorizable => report.note(
            "profile factors into single-variable parts: regular R-separation applies",
        ),
        _ => report.note(
            "profile does not factor: Hamilton-Jacobi separation with a side \
             condition only; no Helmholtz R-separation without a vector \
             potential",
        ),
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Binding;

    #[test]
    fn frozen_value_for_additive_profile() {
        // f = u + v: d_u d_v log f = -1/(u+v)^2, which is -0.25 at (1, 1).
        let f = Expr::parse("u + v").unwrap();
        let mld = mixed_log_derivative(&f, "u", "v");
        let b = Binding::from_pairs([("u", 1.0), ("v", 1.0)]);
        assert!((mld.eval(&b).unwrap() - (-0.25)).abs() < 1e-14);
    }

    #[test]
    fn product_profile_is_factorizable() {
        let f = Expr::parse("u*v").unwrap();
        let domain = DomainBox::new([("u", 0.5, 1.5), ("v", 0.5, 1.5)]);
        let rep = nogo2d_check(&f, "u", "v", &domain, 20, 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Factorizable);
        assert!(rep.max_residual <= 1e-12);
    }

    #[test]
    fn additive_profile_is_not_factorizable() {
        let f = Expr::parse("u + v").unwrap();
        let domain = DomainBox::new([("u", 0.5, 1.5), ("v", 0.5, 1.5)]);
        let rep = nogo2d_check(&f, "u", "v", &domain, 20, 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Nonfactorizable);
        assert!(rep.max_residual > 1e-3);
    }

    #[test]
    fn negative_factorizable_profile_is_handled() {
        // The log-free form needs no positivity.
        let f = Expr::parse("-(u^2)*exp(v)").unwrap();
        let domain = DomainBox::new([("u", 0.5, 1.5), ("v", 0.5, 1.5)]);
        let rep = nogo2d_check(&f, "u", "v", &domain, 20, 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Factorizable, "residual {}", rep.max_residual);
    }
}
