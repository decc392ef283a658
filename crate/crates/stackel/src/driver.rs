//! Name-addressed check dispatch for system definitions.
//!
//! The command-line front end, the catalog tests, and the acceptance suite
//! all run checks the same way: a [`SystemDefinition`] plus a mode name from
//! [`CHECK_MODES`] and a [`CheckSettings`]. This module owns that dispatch so
//! every caller gets identical preprocessing (parameter resolution, domain
//! margin, side-form extraction, branch selection).

use crate::check::{
    check_bracket_side_condition, check_nonregular, check_regular, nogo2d_check,
    operator_commutator_closure, vectorpotential2d_compat, VectorPotBranch, VectorPotInput,
};
use crate::error::{CheckError, SolveError};
use crate::expr::Expr;
use crate::gallery::GalleryEntry;
use crate::matrix::ROUND_TRIP_TOL;
use crate::report::{CheckReport, Verdict};
use crate::sample::{DomainBox, DEFAULT_MARGIN, DEFAULT_SEED};
use crate::solve::verify::{pde_residual, side_residual};
use crate::solve::{laplace_beltrami, separable_frame_op};
use crate::sysdef::SystemDefinition;

/// All check mode names, in presentation order.
pub const CHECK_MODES: [&str; 6] = [
    "regular",
    "nonregular",
    "brackets",
    "commutators",
    "nogo2d",
    "vectorpot",
];

/// Knobs shared by every check run.
#[derive(Debug, Clone, Copy)]
pub struct CheckSettings {
    pub samples: usize,
    /// Overrides the per-mode default tolerance when set.
    pub tol: Option<f64>,
    pub seed: u64,
    /// Total fraction of each domain interval kept away from the ends.
    /// The samplers already stay [`DEFAULT_MARGIN`] inside; larger values
    /// shrink the box further, values below the floor are rejected.
    pub margin: f64,
}

impl Default for CheckSettings {
    fn default() -> Self {
        CheckSettings {
            samples: 50,
            tol: None,
            seed: 0,
            margin: DEFAULT_MARGIN,
        }
    }
}

/// Default gate for each mode. The commutator gate is tighter because its
/// residuals come from exact coefficient extraction, not pointwise fits.
pub fn default_tolerance(mode: &str) -> f64 {
    match mode {
        "commutators" => 1e-10,
        _ => 1e-8,
    }
}

/// The modes `--mode all` runs for this definition: the four structural
/// checks always, the two-dimensional ones when they apply.
pub fn applicable_modes(def: &SystemDefinition) -> Vec<&'static str> {
    let mut modes = vec!["regular", "nonregular", "brackets", "commutators"];
    if def.dim() == 2 {
        modes.push("nogo2d");
    }
    if def.vectorpot.is_some() {
        modes.push("vectorpot");
    }
    modes
}

/// Run one named check.
///
/// `first_order` supplies the single-variable frame profiles `f_l` for the
/// operator checks; when absent they default to the vector-potential `f`
/// data (two-dimensional definitions) or zero.
pub fn run_check(
    def: &SystemDefinition,
    first_order: Option<&[Expr]>,
    mode: &str,
    settings: &CheckSettings,
) -> Result<CheckReport, CheckError> {
    if !CHECK_MODES.contains(&mode) {
        return Err(CheckError::BadInput {
            check: mode.to_string(),
            requirement: format!("one of {}", CHECK_MODES.join(", ")),
        });
    }
    let def = def.resolved();
    let tol = settings.tol.unwrap_or_else(|| default_tolerance(mode));
    let domain = effective_domain(&def.domain_box(), settings.margin)?;
    let n = def.dim();
    let fallback: Vec<Expr>;
    let first_order = match first_order {
        Some(f) => f,
        None => {
            fallback = match (&def.vectorpot, n) {
                (Some(vp), 2) => vp.f.to_vec(),
                _ => vec![Expr::num(0.0); n],
            };
            &fallback
        }
    };

    match mode {
        "regular" => {
            let s = def.matrix()?;
            let metric = s.metric_from(&domain)?;
            let v = s.assemble_potential(&def.potential)?;
            check_regular(&metric, &v, &domain, settings.samples, tol)
        }
        "nonregular" => {
            if def.sides != 1 {
                return Ok(CheckReport::from_residual("nonregular", tol, 0, 0.0)
                    .with_verdict(Verdict::NotApplicable)
                    .note("the compatibility test covers a single side condition; \
                           this system declares two"));
            }
            let s = def.matrix()?;
            let metric = s.metric_from(&domain)?;
            let forms = s.constants_of_motion(&def.potential)?;
            let side = forms.last().expect("dim >= 2 forms");
            let v = s.assemble_potential(&def.potential)?;
            check_nonregular(&metric, side, &v, &domain, settings.samples, tol, settings.seed)
        }
        "brackets" => {
            let s = def.matrix()?;
            check_bracket_side_condition(&s, &def.potential, &domain, settings.samples, tol, settings.seed)
        }
        "commutators" => {
            let s = def.matrix()?;
            operator_commutator_closure(
                &s,
                first_order,
                &def.potential,
                &domain,
                settings.samples,
                tol,
                settings.seed,
            )
        }
        "nogo2d" => {
            if n != 2 {
                return Err(CheckError::BadInput {
                    check: "nogo2d".to_string(),
                    requirement: "a two-coordinate system".to_string(),
                });
            }
            let s = def.matrix()?;
            let metric = s.metric_from(&domain)?;
            let ratio = Expr::div(metric.h_inv2(0).clone(), metric.h_inv2(1).clone());
            let coords = def.coords.clone();
            nogo2d_check(&ratio, &coords[0], &coords[1], &domain, settings.samples, tol)
        }
        "vectorpot" => {
            let Some(vp) = def.vectorpot.clone() else {
                return Err(CheckError::BadInput {
                    check: "vectorpot".to_string(),
                    requirement: "a definition with vector-potential data".to_string(),
                });
            };
            if n != 2 {
                return Err(CheckError::BadInput {
                    check: "vectorpot".to_string(),
                    requirement: "a two-coordinate system".to_string(),
                });
            }
            let s = def.matrix()?;
            let metric = s.metric_from(&domain)?;
            // Nonzero drift data selects the convected branch; otherwise the
            // first-order (magnetic) branch runs on w and the gauge constants.
            let drift_zero = vp.drift.iter().all(|d| d.as_num() == Some(0.0));
            let branch = if drift_zero {
                VectorPotBranch::Magnetic {
                    w: vp.w.clone(),
                    gammas: vp.gammas,
                    given: None,
                }
            } else {
                VectorPotBranch::Solute {
                    drift: vp.drift.clone(),
                    r: def.rfactor.clone().unwrap_or_else(|| Expr::num(0.0)),
                }
            };
            let input = VectorPotInput {
                metric,
                f: vp.f.clone(),
                v: [def.potential[0].clone(), def.potential[1].clone()],
                branch,
            };
            vectorpotential2d_compat(&input, &domain, settings.samples, tol, settings.seed)
        }
        _ => unreachable!("mode validated above"),
    }
}

/// Invert the defining matrix across the sampled domain and report the worst
/// round-trip residual `||S T - I||_inf / kappa(S)`.
pub fn run_invert(
    def: &SystemDefinition,
    settings: &CheckSettings,
) -> Result<CheckReport, CheckError> {
    let def = def.resolved();
    let tol = settings.tol.unwrap_or(ROUND_TRIP_TOL);
    let domain = effective_domain(&def.domain_box(), settings.margin)?;
    let s = def.matrix()?;
    let n = def.dim();
    let pts = domain.sample(settings.samples, DEFAULT_SEED ^ settings.seed, DEFAULT_MARGIN);
    let mut worst = 0.0f64;
    let mut cond = (f64::INFINITY, 0.0f64);
    for p in &pts {
        let sm = s.eval_at(p)?;
        let t = s.invert_at(p)?;
        let kappa = s.condition_at(p)?.max(1.0);
        let prod = &sm * &t;
        let mut resid = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                resid = resid.max((prod[(i, j)] - target).abs());
            }
        }
        worst = worst.max(resid / kappa);
        cond = (cond.0.min(kappa), cond.1.max(kappa));
    }
    Ok(
        CheckReport::from_residual("invert.roundtrip", tol, pts.len(), worst)
            .multiplier("condition", vec![cond.0, cond.1])
            .note(format!(
                "condition number range [{:.3e}, {:.3e}]",
                cond.0, cond.1
            )),
    )
}

/// Verify a catalog entry's stored closed-form solution: the ambient
/// equation residual at the stored eigenvalue ("solve.pde") and the side
/// rows annihilating the bare separated product ("solve.side").
///
/// Systems without a stored solution are an error; this runs recipes, it
/// does not invent them.
pub fn run_solve(
    entry: &GalleryEntry,
    settings: &CheckSettings,
) -> Result<Vec<CheckReport>, SolveError> {
    let def = entry.def.resolved();
    let cf = entry.closed_form.as_ref().ok_or_else(|| SolveError::BadInterval {
        reason: format!(
            "'{}' stores no closed-form solution; solve covers catalog systems that declare one",
            def.name
        ),
    })?;
    let tol = settings.tol.unwrap_or(1e-9);
    let domain = effective_domain(&def.domain_box(), settings.margin)
        .map_err(|e| SolveError::BadInterval { reason: e.to_string() })?;
    let s = def.matrix()?;
    let metric = s.metric_from(&domain)?;

    // Ambient operator: Laplace-Beltrami plus the scalar potential, minus
    // any drift (the convected systems separate for Delta - g.grad).
    let mut ambient = laplace_beltrami(&metric).plus_potential(&entry.ambient_potential);
    if let Some(vp) = &def.vectorpot {
        for l in 0..2 {
            if vp.drift[l].as_num() != Some(0.0) {
                ambient.b[l] = Expr::sub(ambient.b[l].clone(), vp.drift[l].clone());
            }
        }
    }
    let pde = pde_residual(
        &ambient,
        &cf.theta,
        cf.energy,
        &domain,
        settings.samples,
        settings.seed,
    )?;
    let mut reports = vec![CheckReport::from_residual(
        "solve.pde",
        tol,
        settings.samples,
        pde,
    )
    .note(format!("ambient equation at eigenvalue {}", cf.energy))];

    let t = s.symbolic_inverse()?;
    let n = def.dim();
    let mut side_worst = 0.0f64;
    for row in (n - def.sides)..n {
        let op = separable_frame_op(metric.coords(), &t[row], &entry.first_order, &def.potential);
        let r = side_residual(&op, &cf.psi, &domain, settings.samples, settings.seed)?;
        side_worst = side_worst.max(r);
    }
    reports.push(
        CheckReport::from_residual("solve.side", tol, settings.samples, side_worst).note(
            format!(
                "{} side row(s) applied to the bare separated product",
                def.sides
            ),
        ),
    );
    Ok(reports)
}

/// Apply a requested total margin on top of the samplers' built-in floor.
///
/// The samplers keep [`DEFAULT_MARGIN`] of every interval clear at each end;
/// asking for a larger total margin `m` shrinks the interval so the combined
/// effect equals `m` of the declared length per end.
pub fn effective_domain(domain: &DomainBox, margin: f64) -> Result<DomainBox, CheckError> {
    if (margin - DEFAULT_MARGIN).abs() <= 1e-12 {
        return Ok(domain.clone());
    }
    if !(margin > DEFAULT_MARGIN && margin < 0.5) {
        return Err(CheckError::BadInput {
            check: "margin".to_string(),
            requirement: format!("a value in [{DEFAULT_MARGIN}, 0.5)"),
        });
    }
    let x = (margin - DEFAULT_MARGIN) / (1.0 - 2.0 * DEFAULT_MARGIN);
    let axes: Vec<(String, f64, f64)> = domain
        .names()
        .iter()
        .zip(domain.lo().iter().zip(domain.hi()))
        .map(|(name, (&lo, &hi))| {
            let len = hi - lo;
            (name.to_string(), lo + x * len, hi - x * len)
        })
        .collect();
    Ok(DomainBox::new(axes.iter().map(|(n, lo, hi)| (n.as_str(), *lo, *hi))))
}
