//! Checks for the check layer itself: the bracket polynomial against a
//! finite-difference oracle, and negative controls that confirm the
//! compatibility gates actually reject broken inputs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stackel::bracket::BracketPoly;
use stackel::check::{check_nonregular, nogo2d_check};
use stackel::driver::{run_check, CheckSettings};
use stackel::gallery;
use stackel::matrix::OrthogonalMetric;
use stackel::quadform::QuadraticForm;
use stackel::report::Verdict;
use stackel::sample::{DomainBox, DEFAULT_MARGIN, DEFAULT_SEED};
use stackel::{Binding, Expr};

fn binding_of(coords: &[String], x: &[f64]) -> Binding {
    let mut b = Binding::new();
    for (c, v) in coords.iter().zip(x) {
        b.set(c.clone(), *v);
    }
    b
}

/// Five-point central difference with guards against escaping the domain of
/// the evaluated expression.
fn five_point(f: &dyn Fn(f64) -> Option<f64>, x: f64, h: f64) -> Option<f64> {
    let v = |t: f64| -> Option<f64> {
        let y = f(t)?;
        if y.is_finite() && y.abs() <= 1e6 {
            Some(y)
        } else {
            None
        }
    };
    Some((8.0 * (v(x + h)? - v(x - h)?) - (v(x + 2.0 * h)? - v(x - 2.0 * h)?)) / (12.0 * h))
}

/// The bracket `{A, B}` assembled from finite differences of the raw
/// quadratic forms, term by term in the library's sign convention.
fn fd_bracket(
    a: &QuadraticForm,
    b: &QuadraticForm,
    coords: &[String],
    x: &[f64],
    p: &[f64],
    h_scale: f64,
) -> Option<f64> {
    let n = coords.len();
    let mut acc = 0.0;
    for i in 0..n {
        let h = h_scale * x[i].abs().max(1.0);
        let dx = |form: &QuadraticForm| -> Option<f64> {
            let eval_at = |t: f64| -> Option<f64> {
                let mut shifted = x.to_vec();
                shifted[i] = t;
                form.eval(&binding_of(coords, &shifted), p).ok()
            };
            five_point(&eval_at, x[i], h)
        };
        // The forms are exactly quadratic in the momenta, so a plain central
        // difference in p_i has no truncation error at all.
        let dp = |form: &QuadraticForm| -> Option<f64> {
            let b = binding_of(coords, x);
            let eval_at = |t: f64| -> Option<f64> {
                let mut shifted = p.to_vec();
                shifted[i] = t;
                form.eval(&b, &shifted).ok()
            };
            Some((eval_at(p[i] + 0.5)? - eval_at(p[i] - 0.5)?) / 1.0)
        };
        acc += dx(b)? * dp(a)? - dx(a)? * dp(b)?;
    }
    Some(acc)
}

/// The exact monomial bracket must agree with finite differences of the raw
/// forms, for every pair of separation constants of two catalog systems. A
/// comparison only counts when two step sizes agree with each other first,
/// so any excess is a symbolic error, not stencil noise.
#[test]
fn bracket_polynomials_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EC0_17AB);
    let mut admitted = 0usize;
    for name in ["minkowski3d", "dupin_cyclide"] {
        let entry = gallery::load(name).unwrap();
        let def = entry.def.resolved();
        let s = def.matrix().unwrap();
        let forms = s.constants_of_motion(&def.potential).unwrap();
        let domain = def.domain_box();
        let pts = domain.sample(5, DEFAULT_SEED ^ 7, DEFAULT_MARGIN);
        let n = def.dim();
        for i in 0..forms.len() {
            for j in (i + 1)..forms.len() {
                let poly = BracketPoly::of(&forms[i], &forms[j], &def.coords);
                let flip = BracketPoly::of(&forms[j], &forms[i], &def.coords);
                for x in &pts {
                    let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                    let b = binding_of(&def.coords, x);
                    let val = poly.eval(&b, &p).unwrap();
                    let anti = flip.eval(&b, &p).unwrap();
                    assert!(
                        (val + anti).abs() <= 1e-9 * (1.0 + val.abs()),
                        "{name} [{i},{j}] not antisymmetric at {x:?}"
                    );
                    let tol = 1e-6 * (1.0 + val.abs());
                    let coarse = fd_bracket(&forms[i], &forms[j], &def.coords, x, &p, 1e-3);
                    let fine = fd_bracket(&forms[i], &forms[j], &def.coords, x, &p, 5e-4);
                    let (Some(coarse), Some(fine)) = (coarse, fine) else {
                        continue;
                    };
                    if (coarse - fine).abs() > 0.1 * tol {
                        continue;
                    }
                    admitted += 1;
                    assert!(
                        (val - fine).abs() <= tol,
                        "{name} [{i},{j}] at {x:?}, p {p:?}: poly {val} vs fd {fine}"
                    );
                }
            }
        }
    }
    assert!(admitted >= 25, "only {admitted} comparisons admitted");
}

/// A ten-percent multiplicative dent in one metric coefficient must push the
/// nonregular compatibility residual far above the pass gate, while the
/// untouched system stays below it. The side form and potential are kept
/// clean so only the metric is wrong.
#[test]
fn nonregular_compatibility_rejects_a_perturbed_metric() {
    let entry = gallery::load("canonical2d").unwrap();
    let def = entry.def.resolved();
    let s = def.matrix().unwrap();
    let domain = def.domain_box();
    let metric = s.metric_from(&domain).unwrap();
    let forms = s.constants_of_motion(&def.potential).unwrap();
    let side = forms.last().unwrap();
    let v = s.assemble_potential(&def.potential).unwrap();

    let clean = check_nonregular(&metric, side, &v, &domain, 30, 1e-8, 0).unwrap();
    assert_eq!(clean.verdict, Verdict::Pass, "notes: {:?}", clean.notes);
    assert!(clean.max_residual <= 1e-8);

    let dented = OrthogonalMetric::new(
        metric.coords().to_vec(),
        vec![
            Expr::mul(
                metric.h_inv2(0).clone(),
                Expr::add(Expr::num(1.0), Expr::div(Expr::sym("u"), Expr::num(10.0))),
            ),
            metric.h_inv2(1).clone(),
        ],
    );
    let broken = check_nonregular(&dented, side, &v, &domain, 30, 1e-8, 0).unwrap();
    assert_eq!(broken.verdict, Verdict::Fail, "notes: {:?}", broken.notes);
    assert!(
        broken.max_residual >= 1e-3,
        "perturbation only reached {:.3e}",
        broken.max_residual
    );
}

/// Twenty random product profiles must all classify as factorizable, and the
/// catalog's convected profile must not.
#[test]
fn product_profiles_classify_regular_and_the_solute_profile_does_not() {
    let factor = |rng: &mut ChaCha8Rng, sym: &str| -> Expr {
        let s = Expr::sym(sym);
        let shape = match rng.gen_range(0..6) {
            0 => s,
            1 => Expr::add(Expr::num(1.0), Expr::mul(s.clone(), s)),
            2 => Expr::exp(Expr::mul(Expr::num(0.3), s)),
            3 => Expr::add(Expr::num(2.0), Expr::sin(s)),
            4 => Expr::cosh(s),
            _ => Expr::div(Expr::num(1.0), Expr::add(Expr::num(1.0), s)),
        };
        Expr::mul(Expr::num(rng.gen_range(5..20) as f64 / 10.0), shape)
    };
    let domain = DomainBox::new([("u", 0.5, 1.5), ("v", 0.4, 1.2)]);
    let mut rng = ChaCha8Rng::seed_from_u64(0xFAC7_0812);
    for case in 0..20 {
        let f = Expr::mul(factor(&mut rng, "u"), factor(&mut rng, "v"));
        let rep = nogo2d_check(&f, "u", "v", &domain, 25, 1e-8).unwrap();
        assert_eq!(
            rep.verdict,
            Verdict::Factorizable,
            "case {case}, f = {f}, notes: {:?}",
            rep.notes
        );
        assert!(rep
            .notes
            .iter()
            .any(|n| n.contains("regular R-separation applies")));
    }

    let solute = gallery::load("solute2d").unwrap();
    let rep = run_check(&solute.def, None, "nogo2d", &CheckSettings::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Nonfactorizable, "notes: {:?}", rep.notes);
    assert!(rep
        .notes
        .iter()
        .any(|n| n.contains("no Helmholtz R-separation")));
}

/// When the side condition has no real solutions anywhere on the patch the
/// bracket check reports the obstruction instead of a pass, but the
/// coefficient fit still has to hold.
#[test]
fn obstructed_bracket_sampling_still_gates_the_fit() {
    let entry = gallery::load("polar_magnetic").unwrap();
    let rep = run_check(&entry.def, None, "brackets", &CheckSettings::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Obstructed, "notes: {:?}", rep.notes);
    assert!(rep
        .notes
        .iter()
        .any(|n| n.contains("no real on-constraint momenta")));
    assert!(rep.max_residual <= 1e-8, "fit residual {:.3e}", rep.max_residual);
}

/// On-constraint bracket passes advertise the closed-form multiplier match.
#[test]
fn bracket_multipliers_are_checked_against_their_closed_form() {
    let entry = gallery::load("canonical2d").unwrap();
    let rep = run_check(&entry.def, None, "brackets", &CheckSettings::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass, "notes: {:?}", rep.notes);
    assert!(rep
        .notes
        .iter()
        .any(|n| n.contains("fitted multiplier agrees with closed form")));
    assert!(rep.multipliers.contains_key("bracket_c_1_2"));
}

/// A frame profile depending on the wrong coordinate is outside the
/// separable class, and the operator closure fit must say so.
#[test]
fn commutator_closure_rejects_a_foreign_frame_profile() {
    let entry = gallery::load("minkowski3d").unwrap();
    let foreign = [Expr::sym("v"), Expr::num(0.0), Expr::num(0.0)];
    let rep = run_check(
        &entry.def,
        Some(&foreign),
        "commutators",
        &CheckSettings::default(),
    )
    .unwrap();
    assert_eq!(rep.verdict, Verdict::Fail, "notes: {:?}", rep.notes);
    assert!(
        rep.max_residual >= 1e-3,
        "foreign profile only reached {:.3e}",
        rep.max_residual
    );
}
