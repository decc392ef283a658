//! Matrix-layer integration: inversion quality across the whole catalog, the
//! symbolic inverse against the numeric one, and the defining contraction
//! identities that tie the matrix to metrics, potentials, and first
//! integrals.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stackel::matrix::ROUND_TRIP_TOL;
use stackel::{gallery, Expr, GeneralizedStackelMatrix, StackelError};

fn e(src: &str) -> Expr {
    Expr::parse(src).expect("test expression parses")
}

fn max_abs_off_identity(m: &nalgebra::DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - target).abs());
        }
    }
    worst
}

#[test]
fn round_trip_inversion_is_condition_bounded_everywhere() {
    for name in gallery::list_systems() {
        let entry = gallery::load(name).expect("catalog entry");
        let s = entry.def.matrix().expect("matrix");
        let domain = entry.def.domain_box();
        for pt in domain.sample(50, 11, 0.05) {
            let sm = s.eval_at(&pt).expect("eval");
            let t = s.invert_at(&pt).expect("invert");
            let kappa = s.condition_at(&pt).expect("condition").max(1.0);
            let resid = max_abs_off_identity(&(&sm * &t));
            assert!(
                resid <= ROUND_TRIP_TOL * kappa,
                "{name} at {pt:?}: residual {resid:.3e} > {:.3e}",
                ROUND_TRIP_TOL * kappa
            );
        }
    }
}

#[test]
fn symbolic_inverse_agrees_with_the_numeric_inverse() {
    for name in gallery::list_systems() {
        let entry = gallery::load(name).expect("catalog entry");
        let s = entry.def.matrix().expect("matrix");
        let inv = s.symbolic_inverse().expect("symbolic inverse");
        let domain = entry.def.domain_box();
        for pt in domain.sample(20, 23, 0.05) {
            let t = s.invert_at(&pt).expect("invert");
            let kappa = s.condition_at(&pt).expect("condition").max(1.0);
            let binding = s.binding(&pt);
            for (i, row) in inv.iter().enumerate() {
                for (j, entry_ij) in row.iter().enumerate() {
                    let sym = entry_ij.eval(&binding).expect("symbolic entry evaluates");
                    let scale = 1.0_f64.max(t[(i, j)].abs());
                    assert!(
                        (sym - t[(i, j)]).abs() <= 1e-9 * kappa * scale,
                        "{name} T[{i}][{j}] at {pt:?}: symbolic {sym} vs numeric {}",
                        t[(i, j)]
                    );
                }
            }
        }
    }
}

/// The inversion identity behind the whole construction: contracting the
/// defining matrix with the first integrals returns the separated blocks,
/// `sum_l S_il L^l = p_i^2 + v_i`.
#[test]
fn contracting_the_matrix_recovers_the_separated_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for name in gallery::list_systems() {
        let entry = gallery::load(name).expect("catalog entry");
        let def = entry.def.resolved();
        let s = def.matrix().expect("matrix");
        let forms = s.constants_of_motion(&def.potential).expect("first integrals");
        let n = s.dim();
        let domain = def.domain_box();
        for pt in domain.sample(10, 59, 0.05) {
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let binding = s.binding(&pt);
            let values: Vec<f64> = forms
                .iter()
                .map(|form| form.eval(&binding, &p).expect("form evaluates"))
                .collect();
            let sm = s.eval_at(&pt).expect("eval");
            for i in 0..n {
                let contracted: f64 = (0..n).map(|l| sm[(i, l)] * values[l]).sum();
                let block = p[i] * p[i] + def.potential[i].eval(&binding).expect("potential");
                assert!(
                    (contracted - block).abs() <= 1e-9 * (1.0 + block.abs()),
                    "{name} block {i} at {pt:?}: contraction {contracted} vs {block}"
                );
            }
        }
    }
}

#[test]
fn metric_coefficients_are_the_inverse_first_row() {
    for name in gallery::list_systems() {
        let entry = gallery::load(name).expect("catalog entry");
        let def = entry.def.resolved();
        let s = def.matrix().expect("matrix");
        let domain = def.domain_box();
        let metric = s.metric_from(&domain).expect("metric");
        let v = s.assemble_potential(&def.potential).expect("potential");
        for pt in domain.sample(20, 97, 0.05) {
            let t = s.invert_at(&pt).expect("invert");
            let binding = s.binding(&pt);
            for j in 0..s.dim() {
                let h = metric.h_inv2(j).eval(&binding).expect("metric coefficient");
                assert!(
                    (h - t[(0, j)]).abs() <= 1e-9 * (1.0 + t[(0, j)].abs()),
                    "{name} H_{j}^-2 at {pt:?}"
                );
            }
            let assembled = v.eval(&binding).expect("assembled potential");
            let contracted: f64 = (0..s.dim())
                .map(|j| t[(0, j)] * def.potential[j].eval(&binding).expect("component"))
                .sum();
            assert!(
                (assembled - contracted).abs() <= 1e-9 * (1.0 + contracted.abs()),
                "{name} V at {pt:?}: {assembled} vs {contracted}"
            );
        }
    }
}

#[test]
fn singular_points_are_reported_with_their_location() {
    // S(u, v) = [[u, 1], [v, 1]] drops rank exactly on the diagonal u = v.
    let s = GeneralizedStackelMatrix::new(
        vec!["u", "v"],
        vec![vec![e("u"), e("1")], vec![e("v"), e("1")]],
        1,
    )
    .expect("valid shape");

    let err = s.invert_at(&[1.0, 1.0]).expect_err("singular on the diagonal");
    match &err {
        StackelError::Singular { point, .. } => assert_eq!(point, &vec![1.0, 1.0]),
        other => panic!("wrong error: {other:?}"),
    }
    assert!(err.to_string().contains("[1.0, 1.0]"), "message: {err}");

    // Off the diagonal the same matrix inverts cleanly.
    let t = s.invert_at(&[1.5, 0.5]).expect("regular point");
    let sm = s.eval_at(&[1.5, 0.5]).expect("eval");
    assert!(max_abs_off_identity(&(&sm * &t)) <= 1e-12);
}

#[test]
fn shape_and_side_count_are_validated_up_front() {
    let short_row = GeneralizedStackelMatrix::new(
        vec!["u", "v"],
        vec![vec![e("u")], vec![e("v"), e("1")]],
        1,
    );
    assert!(matches!(short_row, Err(StackelError::Shape { .. })));

    let all_sides = GeneralizedStackelMatrix::new(
        vec!["u", "v"],
        vec![vec![e("1"), e("1")], vec![e("1"), e("u")]],
        2,
    );
    assert!(matches!(all_sides, Err(StackelError::InvalidSides { sides: 2, dim: 2 })));

    // Zero side columns is the ordinary separable case and stays legal.
    let ordinary = GeneralizedStackelMatrix::new(
        vec!["u", "v"],
        vec![vec![e("1"), e("-1/u^2")], vec![e("0"), e("1")]],
        0,
    );
    assert!(ordinary.is_ok());
}

#[test]
fn foreign_symbols_in_single_variable_columns_are_rejected() {
    let err = GeneralizedStackelMatrix::new(
        vec!["u", "v", "w"],
        vec![
            vec![e("u"), e("u*v"), e("1")],
            vec![e("0"), e("v"), e("1")],
            vec![e("1"), e("0"), e("0")],
        ],
        1,
    )
    .expect_err("foreign reference");
    assert_eq!(
        err.to_string(),
        "entry at row 1 column 2 must depend only on coordinate 'u' but references 'v'"
    );
}
