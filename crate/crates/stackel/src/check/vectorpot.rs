//! Two-dimensional compatibility of separation with a vector potential or a
//! drift field.
//!
//! Both branches start from the metric ratio `H_2 / H_1` of a
//! two-coordinate orthogonal metric. Product separation of the reduced
//! wave problem needs the ratio to factor, `d_1 d_2 log(H_2/H_1) = 0`; the
//! two branches then diverge:
//!
//! * **magnetic**: given right-hand data `w_j`, the rescaling split
//!   `r_1 = (f_1 - d_1 log ratio)/2`, `r_2 = (f_2 + d_2 log ratio)/2`
//!   determines a vector potential by one-dimensional quadratures,
//!
//!   ```text
//!   a^1 = 2 P1^{-1} e^{-R_1} [ g5 + ∫ e^{R_1} (w_1 P1 - g4 P1^{-1}) ]
//!   a^2 = 2 P1^{-2} P2^{-1} e^{-R_2} [ g6 + ∫ e^{R_2} (w_2 P2^{-1} + g4 P2) ]
//!   ```
//!
//!   with `P1(x^1) P2(x^2)` the factored ratio and `R_i' = r_i`. The
//!   construction is verified against the inhomogeneous first-order
//!   equation it came from (the `w`-equation below), whose residual is
//!   gauge-invariant even though the `a`'s themselves are not.
//!
//! * **solute/drift**: a given drift field `q^j` is compatible with
//!   R-separation iff
//!
//!   ```text
//!   q^1 = H_1^{-2} (-f_1 + d_1 log ratio + 2 d_1 R)
//!   q^2 = H_2^{-2} (-f_2 - d_2 log ratio + 2 d_2 R)
//!   ```
//!
//!   together with the differentiated consequences
//!   `4 d_1 d_2 R = d_2(H_1^2 q^1) + d_1(H_2^2 q^2)` and
//!   `2 d_1 d_2 log ratio = d_2(H_1^2 q^1) - d_1(H_2^2 q^2)`. The curl
//!   combination is reported: a nonzero value certifies the drift is
//!   genuinely rotational (no potential flow produces it).

use crate::error::CheckError;
use crate::expr::{Binding, EvalError, Expr};
use crate::matrix::OrthogonalMetric;
use crate::report::{CheckReport, ResidualMax, Verdict};
use crate::sample::{DomainBox, DEFAULT_MARGIN, DEFAULT_SEED};

use super::nogo::mixed_log_derivative;
use super::ZERO_DEN;

/// Which construction to verify.
#[derive(Debug, Clone)]
pub enum VectorPotBranch {
    /// Helmholtz with vector potential: right-hand data `w`, the three
    /// quadrature constants, and optionally a known potential to compare
    /// against (informational: vector potentials are gauge-dependent).
    Magnetic {
        w: [Expr; 2],
        gammas: [f64; 3],
        given: Option<[Expr; 2]>,
    },
    /// Hamilton-Jacobi with drift: the given drift components and the
    /// rescaling exponent `R`.
    Solute { drift: [Expr; 2], r: Expr },
}

/// Input bundle for [`vectorpotential2d_compat`].
#[derive(Debug, Clone)]
pub struct VectorPotInput {
    pub metric: OrthogonalMetric,
    pub f: [Expr; 2],
    pub v: [Expr; 2],
    pub branch: VectorPotBranch,
}

/// Requested accuracy of the one-dimensional quadratures.
pub const QUAD_TOL: f64 = 1e-12;

/// See the module docs.
pub fn vectorpotential2d_compat(
    input: &VectorPotInput,
    domain: &DomainBox,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<CheckReport, CheckError> {
    let metric = &input.metric;
    if metric.dim() != 2 || domain.dim() != 2 {
        return Err(CheckError::BadInput {
            check: "vectorpot".into(),
            requirement: "a two-coordinate metric and domain".into(),
        });
    }
    let x1 = metric.coord(0).to_string();
    let x2 = metric.coord(1).to_string();
    let h1 = metric.h_inv2(0).clone();
    let h2 = metric.h_inv2(1).clone();
    // ratio^2 = H_1^{-2} / H_2^{-2} = (H_2 / H_1)^2
    let ratio_sq = Expr::div(h1.clone(), h2.clone());
    let log_ratio = Expr::mul(Expr::num(0.5), Expr::log(ratio_sq.clone()));
    let d1_logratio = log_ratio.diff(&x1);
    let d2_logratio = log_ratio.diff(&x2);
    let sepcond = d1_logratio.diff(&x2);

    let pts = domain.sample(samples, DEFAULT_SEED ^ seed, DEFAULT_MARGIN);
    let ev = |e: &Expr, b: &Binding, p: &[f64]| {
        e.eval(b).map_err(|source| CheckError::Eval {
            point: p.to_vec(),
            source,
        })
    };

    let mut sep_max = ResidualMax::default();
    for p in &pts {
        let b = domain.binding(p);
        let s = ev(&sepcond, &b, p)?;
        let scale = 1.0 + ev(&d1_logratio, &b, p)?.abs().max(ev(&d2_logratio, &b, p)?.abs());
        sep_max.push(s.abs() / scale);
    }

    // The factorization condition gates only the magnetic construction:
    // drift compatibility is exactly the device that works when the ratio
    // does not factor.
    match &input.branch {
        VectorPotBranch::Magnetic { w, gammas, given } => magnetic_branch(
            input, domain, &pts, tol, sep_max, w, *gammas, given.as_ref(),
            MagneticPieces {
                x1, x2, h1, h2,
                ratio: Expr::sqrt(ratio_sq),
                d1_logratio, d2_logratio,
            },
        ),
        VectorPotBranch::Solute { drift, r } => solute_branch(
            input, domain, &pts, tol, drift, r,
            SolutePieces {
                x1, x2, h1, h2, ratio_sq, d1_logratio, d2_logratio,
            },
        ),
    }
}

struct MagneticPieces {
    x1: String,
    x2: String,
    h1: Expr,
    h2: Expr,
    ratio: Expr,
    d1_logratio: Expr,
    d2_logratio: Expr,
}

struct SolutePieces {
    x1: String,
    x2: String,
    h1: Expr,
    h2: Expr,
    ratio_sq: Expr,
    d1_logratio: Expr,
    d2_logratio: Expr,
}

/// A function of one coordinate, evaluated with the other frozen at the box
/// midpoint (legitimate whenever the factorization condition holds).
struct AxisFn<'a> {
    expr: &'a Expr,
    coord: &'a str,
    other: (&'a str, f64),
}

impl AxisFn<'_> {
    fn eval(&self, x: f64) -> Result<f64, EvalError> {
        let mut b = Binding::new();
        b.set(self.coord.to_string(), x);
        b.set(self.other.0.to_string(), self.other.1);
        self.expr.eval(&b)
    }
}

/// Integrate the coupled pair `R' = r(x)`, `F' = e^{R} g(x)` from `lo`
/// with `R(lo) = F(lo) = 0` by the classical fourth-order scheme on a step
/// fine enough for [`QUAD_TOL`] over unit-scale boxes.
fn integrate_pair(
    r: &AxisFn<'_>,
    g: &AxisFn<'_>,
    lo: f64,
    x: f64,
    point: &[f64],
) -> Result<(f64, f64), CheckError> {
    if (x - lo).abs() < 1e-15 {
        return Ok((0.0, 0.0));
    }
    let span = x - lo;
    let n = (span.abs() / 2.5e-4).ceil().max(8.0) as usize;
    let h = span / n as f64;
    let wrap = |e: Result<f64, EvalError>| {
        e.map_err(|source| CheckError::Eval {
            point: point.to_vec(),
            source,
        })
    };
    let mut rv = 0.0f64;
    let mut fv = 0.0f64;
    for i in 0..n {
        let t = lo + h * i as f64;
        let rhs = |tt: f64, y: (f64, f64)| -> Result<(f64, f64), CheckError> {
            let rr = wrap(r.eval(tt))?;
            let gg = wrap(g.eval(tt))?;
            Ok((rr, y.0.exp() * gg))
        };
        let y = (rv, fv);
        let k1 = rhs(t, y)?;
        let k2 = rhs(t + 0.5 * h, (y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1))?;
        let k3 = rhs(t + 0.5 * h, (y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1))?;
        let k4 = rhs(t + h, (y.0 + h * k3.0, y.1 + h * k3.1))?;
        rv += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        fv += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    Ok((rv, fv))
}

#[allow(clippy::too_many_arguments)]
fn magnetic_branch(
    input: &VectorPotInput,
    domain: &DomainBox,
    pts: &[Vec<f64>],
    tol: f64,
    sep_max: ResidualMax,
    w: &[Expr; 2],
    gammas: [f64; 3],
    given: Option<&[Expr; 2]>,
    pieces: MagneticPieces,
) -> Result<CheckReport, CheckError> {
    let MagneticPieces { x1, x2, h1, h2, ratio, d1_logratio, d2_logratio } = pieces;
    let [g4, g5, g6] = gammas;
    let mid = domain.midpoint();
    let lo = domain.shrink(DEFAULT_MARGIN);
    let (lo1, lo2) = (lo.lo()[0], lo.lo()[1]);
    let ev = |e: &Expr, b: &Binding, p: &[f64]| {
        e.eval(b).map_err(|source| CheckError::Eval {
            point: p.to_vec(),
            source,
        })
    };

    // Factor the ratio at the midpoint: P1(x1) = ratio(x1, m2),
    // P2(x2) = ratio(m1, x2) / ratio(m1, m2).
    let p1 = ratio.substitute(&x2, &Expr::num(mid[1]));
    let ratio_m1 = ratio.substitute(&x1, &Expr::num(mid[0]));
    let mut mid_b = Binding::new();
    mid_b.set(x1.clone(), mid[0]);
    mid_b.set(x2.clone(), mid[1]);
    let ratio_mm = ev(&ratio, &mid_b, &mid)?;
    let p2 = Expr::div(ratio_m1, Expr::num(ratio_mm));
    let dp1 = p1.diff(&x1);
    let dp2 = p2.diff(&x2);

    // Rescaling split.
    let r1 = Expr::mul(
        Expr::num(0.5),
        Expr::sub(input.f[0].clone(), d1_logratio.clone()),
    );
    let r2 = Expr::mul(
        Expr::num(0.5),
        Expr::add(input.f[1].clone(), d2_logratio.clone()),
    );

    // Effective scalar potential after absorbing the split:
    // Phi = sum_j H_j^{-2} v_j
    //     - H_1^{-2} (r_1' + r_1^2 + r_1 d_1 log ratio)
    //     - H_2^{-2} (r_2' + r_2^2 - r_2 d_2 log ratio).
    let phi = Expr::sub(
        Expr::add(
            Expr::mul(h1.clone(), input.v[0].clone()),
            Expr::mul(h2.clone(), input.v[1].clone()),
        ),
        Expr::add(
            Expr::mul(
                h1.clone(),
                Expr::add(
                    Expr::add(r1.diff(&x1), Expr::mul(r1.clone(), r1.clone())),
                    Expr::mul(r1.clone(), d1_logratio.clone()),
                ),
            ),
            Expr::mul(
                h2.clone(),
                Expr::sub(
                    Expr::add(r2.diff(&x2), Expr::mul(r2.clone(), r2.clone())),
                    Expr::mul(r2.clone(), d2_logratio.clone()),
                ),
            ),
        ),
    );

    // Quadrature integrands along each axis.
    let integrand1 = Expr::sub(
        Expr::mul(w[0].clone(), p1.clone()),
        Expr::div(Expr::num(g4), p1.clone()),
    );
    let integrand2 = Expr::add(
        Expr::div(w[1].clone(), p2.clone()),
        Expr::mul(Expr::num(g4), p2.clone()),
    );
    let r1_axis = AxisFn { expr: &r1, coord: &x1, other: (&x2, mid[1]) };
    let g1_axis = AxisFn { expr: &integrand1, coord: &x1, other: (&x2, mid[1]) };
    let r2_axis = AxisFn { expr: &r2, coord: &x2, other: (&x1, mid[0]) };
    let g2_axis = AxisFn { expr: &integrand2, coord: &x2, other: (&x1, mid[0]) };

    // Log-derivative sums for the verification equation.
    let dlog_h_sum_1 = Expr::mul(
        Expr::num(-0.5),
        Expr::add(
            Expr::div(h1.diff(&x1), h1.clone()),
            Expr::div(h2.diff(&x1), h2.clone()),
        ),
    );
    let dlog_h_sum_2 = Expr::mul(
        Expr::num(-0.5),
        Expr::add(
            Expr::div(h1.diff(&x2), h1.clone()),
            Expr::div(h2.diff(&x2), h2.clone()),
        ),
    );

    let mut weq_max = ResidualMax::default();
    let mut given_dev = ResidualMax::default();
    let mut phi_vals = Vec::with_capacity(pts.len());
    let mut a1_vals = Vec::with_capacity(pts.len());
    let mut a2_vals = Vec::with_capacity(pts.len());

    for p in pts {
        let b = domain.binding(p);
        let (rr1, ff1) = integrate_pair(&r1_axis, &g1_axis, lo1, p[0], p)?;
        let (rr2, ff2) = integrate_pair(&r2_axis, &g2_axis, lo2, p[1], p)?;
        let p1v = ev(&p1, &b, p)?;
        let p2v = ev(&p2, &b, p)?;
        let dp1v = ev(&dp1, &b, p)?;
        let dp2v = ev(&dp2, &b, p)?;
        let r1v = ev(&r1, &b, p)?;
        let r2v = ev(&r2, &b, p)?;
        let w1v = ev(&w[0], &b, p)?;
        let w2v = ev(&w[1], &b, p)?;
        let h1v = ev(&h1, &b, p)?;
        let h2v = ev(&h2, &b, p)?;

        let a1 = 2.0 / p1v * (-rr1).exp() * (g5 + ff1);
        let a2 = 2.0 / (p1v * p1v * p2v) * (-rr2).exp() * (g6 + ff2);
        // Analytic derivatives via the product rule; the integral terms
        // differentiate back to their integrands.
        let da1 = -(dp1v / p1v + r1v) * a1 + 2.0 * (w1v - g4 / (p1v * p1v));
        let da2 = -(dp2v / p2v + r2v) * a2
            + 2.0 / (p1v * p1v) * (w2v / (p2v * p2v) + g4);

        // The w-equation the construction solves:
        // H_1^{-2} w_1 + H_2^{-2} w_2
        //   = (1/2)[a^1 r_1 + a^2 r_2 + d_1 a^1 + d_2 a^2]
        //   + (1/2) a^1 [d_1 log H_1 + d_1 log H_2]
        //   + (1/2) a^2 [d_2 log H_1 + d_2 log H_2].
        let lhs = h1v * w1v + h2v * w2v;
        let t_div = 0.5 * (a1 * r1v + a2 * r2v + da1 + da2);
        let t_log1 = 0.5 * a1 * ev(&dlog_h_sum_1, &b, p)?;
        let t_log2 = 0.5 * a2 * ev(&dlog_h_sum_2, &b, p)?;
        let rhs = t_div + t_log1 + t_log2;
        let scale = 1.0 + lhs.abs().max(t_div.abs()).max(t_log1.abs()).max(t_log2.abs());
        weq_max.push((lhs - rhs).abs() / scale);

        phi_vals.push(ev(&phi, &b, p)?);
        a1_vals.push(a1);
        a2_vals.push(a2);
        if let Some(g) = given {
            let g1v = ev(&g[0], &b, p)?;
            let g2v = ev(&g[1], &b, p)?;
            given_dev.push((a1 - g1v).abs().max((a2 - g2v).abs()));
        }
    }

    let gate = sep_max.get().max(weq_max.get());
    let mut report = CheckReport::from_residual("vectorpot.magnetic", tol, pts.len(), gate)
        .note(format!(
            "ratio factorization residual {:.3e}",
            sep_max.get()
        ))
        .note(format!(
            "vector potential recovered by quadrature; defining-equation residual {:.3e}",
            weq_max.get()
        ))
        .multiplier("phi", phi_vals)
        .multiplier("a1", a1_vals)
        .multiplier("a2", a2_vals);
    if sep_max.get() > tol {
        report = report.note("the metric ratio does not factor into single-variable parts");
    }
    if given.is_some() {
        report = report.note(format!(
            "departure from the supplied potential {:.3e} (informational: gauge-dependent)",
            given_dev.get()
        ));
    }
    Ok(report)
}

fn solute_branch(
    input: &VectorPotInput,
    domain: &DomainBox,
    pts: &[Vec<f64>],
    tol: f64,
    drift: &[Expr; 2],
    r: &Expr,
    pieces: SolutePieces,
) -> Result<CheckReport, CheckError> {
    let SolutePieces { x1, x2, h1, h2, ratio_sq, d1_logratio, d2_logratio } = pieces;
    let ev = |e: &Expr, b: &Binding, p: &[f64]| {
        e.eval(b).map_err(|source| CheckError::Eval {
            point: p.to_vec(),
            source,
        })
    };

    // Compatibility equations for the drift components.
    let q1_expected = Expr::mul(
        h1.clone(),
        Expr::add(
            Expr::sub(d1_logratio.clone(), input.f[0].clone()),
            Expr::mul(Expr::num(2.0), r.diff(&x1)),
        ),
    );
    let q2_expected = Expr::mul(
        h2.clone(),
        Expr::add(
            Expr::sub(Expr::neg(input.f[1].clone()), d2_logratio.clone()),
            Expr::mul(Expr::num(2.0), r.diff(&x2)),
        ),
    );

    // Covariant combinations H_j^2 q^j and their cross derivatives.
    let cov1 = Expr::div(drift[0].clone(), h1.clone());
    let cov2 = Expr::div(drift[1].clone(), h2.clone());
    let d2_cov1 = cov1.diff(&x2);
    let d1_cov2 = cov2.diff(&x1);
    let mixed_r = r.diff(&x1).diff(&x2);
    let mixed_logratio = d1_logratio.diff(&x2);

    // Eigenvalue-shift function: the zeroth-order term of the conjugated
    // wave operator minus the potential contraction and the drift-R
    // coupling.
    let lap = crate::solve::laplace_beltrami(&input.metric);
    let conj_zero = lap.conjugated(&Expr::neg(r.clone())).c;
    let mu = Expr::sub(
        conj_zero,
        Expr::add(
            Expr::add(
                Expr::mul(h1.clone(), input.v[0].clone()),
                Expr::mul(h2.clone(), input.v[1].clone()),
            ),
            Expr::add(
                Expr::mul(drift[0].clone(), r.diff(&x1)),
                Expr::mul(drift[1].clone(), r.diff(&x2)),
            ),
        ),
    );

    let mut q_max = ResidualMax::default();
    let mut cons_max = ResidualMax::default();
    let mut curl_vals = Vec::with_capacity(pts.len());
    let mut mu_vals = Vec::with_capacity(pts.len());
    let mut speed_vals = Vec::with_capacity(pts.len());
    let mut drift_mag = 0.0f64;

    for p in pts {
        let b = domain.binding(p);
        let q1 = ev(&drift[0], &b, p)?;
        let q2 = ev(&drift[1], &b, p)?;
        let e1 = ev(&q1_expected, &b, p)?;
        let e2 = ev(&q2_expected, &b, p)?;
        q_max.push((q1 - e1).abs() / (1.0 + q1.abs().max(e1.abs())));
        q_max.push((q2 - e2).abs() / (1.0 + q2.abs().max(e2.abs())));
        drift_mag = drift_mag.max(q1.abs()).max(q2.abs());

        let dc1 = ev(&d2_cov1, &b, p)?;
        let dc2 = ev(&d1_cov2, &b, p)?;
        let mr = ev(&mixed_r, &b, p)?;
        let ml = ev(&mixed_logratio, &b, p)?;
        let s1 = 1.0 + dc1.abs().max(dc2.abs()).max((4.0 * mr).abs());
        cons_max.push((4.0 * mr - (dc1 + dc2)).abs() / s1);
        let s2 = 1.0 + dc1.abs().max(dc2.abs()).max((2.0 * ml).abs());
        cons_max.push((2.0 * ml - (dc1 - dc2)).abs() / s2);
        curl_vals.push(dc1 - dc2);
        mu_vals.push(ev(&mu, &b, p)?);

        let h1v = ev(&h1, &b, p)?;
        let h2v = ev(&h2, &b, p)?;
        speed_vals.push(q1 * q1 / h1v + q2 * q2 / h2v);
    }

    let gate = q_max.get().max(cons_max.get());
    let curl_max = curl_vals.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut report = CheckReport::from_residual("vectorpot.solute", tol, pts.len(), gate)
        .note(format!(
            "drift compatibility residual {:.3e}; differentiated consequences {:.3e}",
            q_max.get(),
            cons_max.get()
        ))
        .multiplier("curl", curl_vals)
        .multiplier("mu", mu_vals)
        .multiplier("drift_speed2", speed_vals);
    if curl_max > tol {
        report = report.note(
            "nonzero curl: the drift is genuinely rotational and cannot be \
             absorbed into a rescaling alone",
        );
    }

    if drift_mag <= ZERO_DEN {
        // No drift given: classification falls back to the factorization
        // question for the squared ratio.
        let mut fact_max = 0.0f64;
        let mld = mixed_log_derivative(&ratio_sq, &x1, &x2);
        for p in pts {
            let b = domain.binding(p);
            fact_max = fact_max.max(ev(&mld, &b, p)?.abs());
        }
        if fact_max > tol {
            report = report.with_verdict(Verdict::Nonfactorizable).note(
                "zero drift and a nonfactorizable metric ratio: no Helmholtz \
                 R-separation is available for this profile",
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn polar_input() -> (VectorPotInput, DomainBox) {
        let metric = OrthogonalMetric::new(
            vec![Arc::from("r"), Arc::from("th")],
            vec![Expr::num(1.0), Expr::parse("1/r^2").unwrap()],
        );
        let input = VectorPotInput {
            metric,
            f: [Expr::num(0.0), Expr::num(0.0)],
            v: [Expr::parse("r^2").unwrap(), Expr::parse("cos(th)").unwrap()],
            branch: VectorPotBranch::Magnetic {
                w: [Expr::num(0.0), Expr::num(0.0)],
                gammas: [1.0, 1.0, 1.0],
                given: None,
            },
        };
        let box_ = DomainBox::new([("r", 0.8, 2.0), ("th", 0.2, 1.4)]);
        (input, box_)
    }

    #[test]
    fn polar_effective_potential_is_exact() {
        // Phi = v_1 + v_2/r^2 - 1/(4 r^2): the split r_1 = -1/(2r) is the
        // hand value for ratio = r with f = 0.
        let (input, box_) = polar_input();
        let rep = vectorpotential2d_compat(&input, &box_, 12, 1e-8, 3).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "notes: {:?}", rep.notes);
        let pts = box_.sample(12, DEFAULT_SEED ^ 3, DEFAULT_MARGIN);
        let phi = &rep.multipliers["phi"];
        for (p, got) in pts.iter().zip(phi) {
            let (r, th) = (p[0], p[1]);
            let expect = r * r + th.cos() / (r * r) - 0.25 / (r * r);
            assert!(
                (got - expect).abs() <= 1e-10 * (1.0 + expect.abs()),
                "phi at {:?}: {} vs {}",
                p,
                got,
                expect
            );
        }
    }

    #[test]
    fn magnetic_quadratures_satisfy_their_equation() {
        // Nonzero right-hand data exercises both quadrature terms.
        let (mut input, box_) = polar_input();
        input.branch = VectorPotBranch::Magnetic {
            w: [Expr::parse("r").unwrap(), Expr::parse("sin(th)").unwrap()],
            gammas: [0.7, -0.3, 1.2],
            given: None,
        };
        let rep = vectorpotential2d_compat(&input, &box_, 10, 1e-8, 5).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "notes: {:?}", rep.notes);
    }

    #[test]
    fn nonfactorizable_ratio_fails_the_gate() {
        let metric = OrthogonalMetric::new(
            vec![Arc::from("u"), Arc::from("v")],
            vec![Expr::num(1.0), Expr::parse("1/(u+v)").unwrap()],
        );
        let input = VectorPotInput {
            metric,
            f: [Expr::num(0.0), Expr::num(0.0)],
            v: [Expr::num(0.0), Expr::num(0.0)],
            branch: VectorPotBranch::Magnetic {
                w: [Expr::num(0.0), Expr::num(0.0)],
                gammas: [0.0, 0.0, 0.0],
                given: None,
            },
        };
        let box_ = DomainBox::new([("u", 1.0, 2.0), ("v", 0.5, 1.5)]);
        let rep = vectorpotential2d_compat(&input, &box_, 10, 1e-8, 1).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep
            .notes
            .iter()
            .any(|n| n.contains("does not factor")));
    }

    #[test]
    fn drift_compatibility_detects_consistent_field() {
        // Build a drift from the compatibility equations themselves and
        // confirm the check recognizes it.
        let metric = OrthogonalMetric::new(
            vec![Arc::from("u"), Arc::from("v")],
            vec![Expr::parse("u^2").unwrap(), Expr::parse("1/(1+v^2)").unwrap()],
        );
        let r = Expr::parse("u*v").unwrap();
        // ratio^2 = u^2 (1+v^2); d_1 log ratio = 1/u, d_2 = v/(1+v^2).
        let q1 = Expr::parse("u^2*(1/u+2*v)").unwrap();
        let q2 = Expr::parse("(-v/(1+v^2)+2*u)/(1+v^2)").unwrap();
        let input = VectorPotInput {
            metric,
            f: [Expr::num(0.0), Expr::num(0.0)],
            v: [Expr::num(0.0), Expr::num(0.0)],
            branch: VectorPotBranch::Solute {
                drift: [q1, q2],
                r,
            },
        };
        let box_ = DomainBox::new([("u", 0.5, 1.5), ("v", 0.3, 1.1)]);
        let rep = vectorpotential2d_compat(&input, &box_, 12, 1e-8, 9).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "notes: {:?}", rep.notes);
    }

    #[test]
    fn zero_drift_with_bad_ratio_is_nonfactorizable() {
        let metric = OrthogonalMetric::new(
            vec![Arc::from("u"), Arc::from("v")],
            vec![Expr::num(1.0), Expr::parse("1/(u+v)").unwrap()],
        );
        let input = VectorPotInput {
            metric,
            f: [Expr::num(0.0), Expr::num(0.0)],
            v: [Expr::num(0.0), Expr::num(0.0)],
            branch: VectorPotBranch::Solute {
                drift: [Expr::num(0.0), Expr::num(0.0)],
                r: Expr::num(0.0),
            },
        };
        let box_ = DomainBox::new([("u", 1.0, 2.0), ("v", 0.5, 1.5)]);
        let rep = vectorpotential2d_compat(&input, &box_, 10, 1e-8, 1).unwrap();
        assert_eq!(rep.verdict, Verdict::Nonfactorizable, "notes: {:?}", rep.notes);
        assert!(rep
            .notes
            .iter()
            .any(|n| n.contains("no Helmholtz R-separation")));
    }
}
