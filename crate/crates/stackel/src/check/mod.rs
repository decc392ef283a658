//! Separability-condition checkers.
//!
//! Each checker samples a domain box deterministically, evaluates exact
//! symbolic derivatives pointwise, and reports scaled residuals in a
//! [`crate::report::CheckReport`]. Conditions that involve unknown
//! multiplier functions fit them pointwise by least squares and gate on the
//! fit residual; the fitted values are reported for inspection.
//!
//! Residual scaling: a residual of an identity `lhs = rhs` is measured as
//! `|lhs - rhs| / scale` where `scale` is 1 plus the largest magnitude among
//! the identity's terms at that point, so tolerances mean the same thing for
//! large and small systems.
//!
//! Zero-denominator convention: conditions stated as equality of ratios are
//! checked through their members `num_k / den_k`. A member whose denominator
//! satisfies `|den| < 1e-10 * scale` is excluded from the equality chain and
//! instead contributes the requirement `|num| <= tol * scale`; this is how
//! identically-vanishing constants of the motion (common in the regular
//! limit) are handled without spurious failures.

pub mod brackets;
pub mod cij;
pub mod nogo;
pub mod nonregular;
pub mod operators;
pub mod vectorpot;

pub use brackets::check_bracket_side_condition;
pub use cij::{candidate_bn, check_regular, cij_operator};
pub use nogo::nogo2d_check;
pub use nonregular::check_nonregular;
pub use operators::{operator_commutator_closure, SeparationOperators};
pub use vectorpot::{vectorpotential2d_compat, VectorPotBranch, VectorPotInput};

use nalgebra::{DMatrix, DVector};

/// Denominators this far below the local scale are treated as vanishing.
pub(crate) const ZERO_DEN: f64 = 1e-10;

/// Outcome of a pointwise least-squares fit.
#[derive(Debug, Clone)]
pub(crate) struct FitOutcome {
    pub solution: Vec<f64>,
    /// Largest absolute row residual of `A x - b`.
    pub max_residual: f64,
    /// Numerical rank from the SVD threshold; a fit diagnostic, asserted on
    /// by the unit tests only.
    #[allow(dead_code)]
    pub rank: usize,
}

/// Minimum-norm least squares via SVD. Rank deficiency is not an error:
/// an all-zero system legitimately fits the zero multiplier.
pub(crate) fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> FitOutcome {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = 1e-12 * smax.max(f64::MIN_POSITIVE);
    let rank = svd.singular_values.iter().filter(|s| **s > eps).count();
    let x = svd
        .solve(b, eps)
        .expect("svd.solve with computed u/v cannot fail");
    let resid = a * &x - b;
    FitOutcome {
        solution: x.iter().copied().collect(),
        max_residual: resid.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        rank,
    }
}

/// A member of a ratio-equality chain, with the zero-denominator convention
/// applied: healthy members contribute their value to the chain, vanishing
/// denominators demand a vanishing numerator.
#[derive(Debug, Clone, Copy)]
pub(crate) enum ChainMember {
    Value(f64),
    /// Residual contribution of a vanishing-denominator member (already
    /// scaled): `|num| / scale`.
    ForcedZero(f64),
}

/// Classify `num/den` under the zero-denominator convention at local `scale`.
pub(crate) fn chain_member(num: f64, den: f64, scale: f64) -> ChainMember {
    if den.abs() < ZERO_DEN * scale {
        ChainMember::ForcedZero(num.abs() / scale)
    } else {
        ChainMember::Value(num / den)
    }
}

/// Residual of a chain: the spread of healthy member values (scaled by the
/// largest member magnitude) maxed with the forced-zero contributions.
pub(crate) fn chain_residual(members: &[ChainMember]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut forced = 0.0f64;
    let mut magnitude = 0.0f64;
    for m in members {
        match m {
            ChainMember::Value(v) => {
                lo = lo.min(*v);
                hi = hi.max(*v);
                magnitude = magnitude.max(v.abs());
            }
            ChainMember::ForcedZero(r) => forced = forced.max(*r),
        }
    }
    if hi >= lo {
        forced.max((hi - lo) / (1.0 + magnitude))
    } else {
        forced
    }
}
