//! Shared randomized-testing machinery: an expression generator and a
//! self-validating finite-difference derivative oracle.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use stackel::{Binding, Expr};

/// Random expression over the symbols `x` and `y`, depth-bounded.
///
/// The generator makes no attempt to stay inside function domains; callers
/// reject samples whose evaluations are non-finite or out of range.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_range(0..10) < 3 {
        return match rng.gen_range(0..10) {
            0..=3 => Expr::sym("x"),
            4..=5 => Expr::sym("y"),
            _ => Expr::num((rng.gen_range(-25..=25) as f64) / 10.0),
        };
    }
    if rng.gen_range(0..10) < 4 {
        let arg = random_expr(rng, depth - 1);
        return match rng.gen_range(0..9) {
            0 => Expr::sin(arg),
            1 => Expr::cos(arg),
            2 => Expr::tan(arg),
            3 => Expr::sinh(arg),
            4 => Expr::cosh(arg),
            5 => Expr::exp(arg),
            6 => Expr::log(arg),
            7 => Expr::sqrt(arg),
            _ => Expr::atan(arg),
        };
    }
    let lhs = random_expr(rng, depth - 1);
    let rhs = random_expr(rng, depth - 1);
    match rng.gen_range(0..5) {
        0 => Expr::add(lhs, rhs),
        1 => Expr::sub(lhs, rhs),
        2 => Expr::mul(lhs, rhs),
        3 => Expr::div(lhs, rhs),
        _ => {
            let k = [2.0, 3.0, 0.5, -1.0][rng.gen_range(0..4)];
            Expr::pow(lhs, Expr::num(k))
        }
    }
}

/// Five-point central difference for d(e)/d(sym) at `binding`.
///
/// Returns `None` when any stencil evaluation fails, is non-finite, or is
/// large enough for cancellation to matter.
pub fn fd_derivative(e: &Expr, sym: &str, binding: &Binding, h: f64) -> Option<f64> {
    let x0 = binding.get(sym)?;
    let value_at = |x: f64| -> Option<f64> {
        let mut b = binding.clone();
        b.set(sym, x);
        let v = e.eval(&b).ok()?;
        (v.is_finite() && v.abs() <= 1e3).then_some(v)
    };
    let fp1 = value_at(x0 + h)?;
    let fm1 = value_at(x0 - h)?;
    let fp2 = value_at(x0 + 2.0 * h)?;
    let fm2 = value_at(x0 - 2.0 * h)?;
    Some((8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * h))
}

/// Outcome of [`diff_fd_battery`]: how many comparisons were admitted and the
/// worst deviation measured in units of the local tolerance.
pub struct FdBattery {
    pub accepted: usize,
    pub worst_ratio: f64,
}

/// Compare symbolic derivatives against the finite-difference oracle on
/// `target` randomly generated expressions.
///
/// A sample is admitted only when the oracle itself converges: two step sizes
/// must agree to a tenth of the comparison tolerance, so any residual
/// discrepancy is attributable to the symbolic side. Tolerance per sample is
/// `max(1e-6, 1e-6 |d|)` for symbolic value `d`.
pub fn diff_fd_battery(target: usize, seed: u64) -> FdBattery {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = 0usize;
    let mut worst: f64 = 0.0;
    let mut attempts = 0usize;
    while accepted < target && attempts < target * 80 {
        attempts += 1;
        let e = random_expr(&mut rng, 4);
        if !e.contains_symbol("x") {
            continue;
        }
        let x = rng.gen_range(0.4..1.6);
        let y = rng.gen_range(0.4..1.6);
        let binding = Binding::from_pairs([("x", x), ("y", y)]);
        let Ok(sym) = e.diff("x").eval(&binding) else {
            continue;
        };
        if !sym.is_finite() || sym.abs() > 1e6 {
            continue;
        }
        let tol = 1e-6_f64.max(1e-6 * sym.abs());
        let h = 1e-3 * x.abs().max(1.0);
        let Some(coarse) = fd_derivative(&e, "x", &binding, h) else {
            continue;
        };
        let Some(fine) = fd_derivative(&e, "x", &binding, 0.5 * h) else {
            continue;
        };
        if (coarse - fine).abs() > 0.1 * tol {
            // stencil has not converged here; the oracle cannot arbitrate
            continue;
        }
        accepted += 1;
        worst = worst.max((sym - fine).abs() / tol);
    }
    FdBattery { accepted, worst_ratio: worst }
}

/// Random parser inputs: a mix of raw characters and plausible tokens.
pub fn random_source(rng: &mut ChaCha8Rng) -> String {
    const TOKENS: &[&str] = &[
        "sin(", "cos(", "tan(", "sinh(", "cosh(", "exp(", "log(", "sqrt(", "atan(", "x", "y",
        ")", "(", "+", "-", "*", "/", "^", "2", "3.25", "0.5", "1e-2", ",", ".",
    ];
    const CHARS: &[u8] = b"xy0123456789+-*/^(). eE_qz";
    let len = rng.gen_range(1..64);
    let mut s = String::new();
    while s.len() < len {
        if rng.gen_range(0..10) < 4 {
            s.push_str(TOKENS[rng.gen_range(0..TOKENS.len())]);
        } else {
            s.push(CHARS[rng.gen_range(0..CHARS.len())] as char);
        }
    }
    s
}

/// Throw `count` random sources at the parser; every `Ok` tree is then
/// evaluated, differentiated, printed, and reparsed. Returns how many parsed.
///
/// The property under test is the absence of panics and the reparsability of
/// printed trees, not any particular acceptance rate.
pub fn parse_fuzz_battery(count: usize, seed: u64) -> usize {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let binding = Binding::from_pairs([("x", 1.1), ("y", 0.7)]);
    let mut parsed = 0usize;
    for _ in 0..count {
        // Mix printed well-formed trees (exercising the success path) with
        // raw noise (exercising error recovery).
        let src = if rng.gen_range(0..10) < 3 {
            random_expr(&mut rng, 5).to_string()
        } else {
            random_source(&mut rng)
        };
        let Ok(e) = Expr::parse(&src) else { continue };
        parsed += 1;
        let _ = e.eval(&binding);
        let _ = e.diff("x");
        let printed = e.to_string();
        let again = Expr::parse(&printed)
            .unwrap_or_else(|err| panic!("printed form '{printed}' failed to reparse: {err}"));
        if let (Ok(a), Ok(b)) = (e.eval(&binding), again.eval(&binding)) {
            if a.is_finite() && b.is_finite() {
                let scale = 1.0_f64.max(a.abs());
                assert!(
                    (a - b).abs() <= 1e-9 * scale,
                    "printed form of '{src}' changed value: {a} vs {b}"
                );
            }
        }
    }
    parsed
}
