use super::*;
use crate::equation::{parse_system, ParseMode};
use num::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn system(text: &str) -> EquationSystem {
    parse_system(text, ParseMode::Lenient).unwrap().system
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn unique(outcome: &SolveOutcome) -> &Bindings {
    match outcome {
        SolveOutcome::Unique(b) => b,
        other => panic!("expected unique solution, got {other:?}"),
    }
}

const LAUNDRY: &str = "raymond_laundry = sarah_laundry / 2\n\
sarah_laundry = 4 * david_laundry\n\
sarah_laundry = 400";

#[test]
fn laundry_system_by_substitution() {
    // Oracle: direct substitution, 400 / 2 and 400 / 4.
    let outcome = solve(&system(LAUNDRY));
    let b = unique(&outcome);
    assert_eq!(b["raymond_laundry"], Value::Exact(rat(200)));
    assert_eq!(b["sarah_laundry"], Value::Exact(rat(400)));
    assert_eq!(b["david_laundry"], Value::Exact(rat(100)));
    assert!(b.values().all(Value::is_exact));
}

#[test]
fn contradictory_constants_are_inconsistent() {
    match solve(&system("x = 1\nx = 2")) {
        SolveOutcome::Unsolvable(UnsolvableReason::Inconsistent) => {}
        other => panic!("expected inconsistent, got {other:?}"),
    }
}

#[test]
fn single_equation_two_unknowns_is_underdetermined() {
    match solve(&system("x + y = 3")) {
        SolveOutcome::Unsolvable(UnsolvableReason::Underdetermined(v)) => assert_eq!(v, "x"),
        other => panic!("expected underdetermined, got {other:?}"),
    }
}

#[test]
fn quadratic_yields_both_roots() {
    match solve(&system("x ^ 2 = 9")) {
        SolveOutcome::MultipleRoots {
            target,
            candidates,
            bindings_per_candidate,
        } => {
            assert_eq!(target, "x");
            let values: Vec<f64> = candidates.iter().map(Value::to_f64).collect();
            assert_eq!(values, vec![-3.0, 3.0]);
            // Residual oracle: both roots satisfy the equation.
            for b in &bindings_per_candidate {
                let v = b["x"].to_f64();
                assert!((v * v - 9.0).abs() <= 1e-9);
            }
        }
        other => panic!("expected multiple roots, got {other:?}"),
    }
}

#[test]
fn quadratic_with_dependent_variable() {
    // y is solved per candidate once x is pinned.
    match solve(&system("x ^ 2 = 9\ny = x + 1")) {
        SolveOutcome::MultipleRoots {
            target,
            bindings_per_candidate,
            ..
        } => {
            assert_eq!(target, "x");
            let ys: Vec<f64> = bindings_per_candidate
                .iter()
                .map(|b| b["y"].to_f64())
                .collect();
            assert_eq!(ys, vec![-2.0, 4.0]);
        }
        other => panic!("expected multiple roots, got {other:?}"),
    }
}

#[test]
fn linear_pair_before_univariate() {
    // The linear part is eliminated first, then z^2 = x becomes univariate.
    match solve(&system("x + y = 3\nx - y = 1\nz ^ 2 = x")) {
        SolveOutcome::MultipleRoots {
            target, candidates, ..
        } => {
            assert_eq!(target, "z");
            let values: Vec<f64> = candidates.iter().map(Value::to_f64).collect();
            assert!((values[0] + 2f64.sqrt()).abs() < 1e-9);
            assert!((values[1] - 2f64.sqrt()).abs() < 1e-9);
        }
        other => panic!("expected multiple roots, got {other:?}"),
    }
}

#[test]
fn division_by_bound_zero_reports_division_by_zero() {
    match solve(&system("y = 0\nx = 6 / y")) {
        SolveOutcome::Unsolvable(UnsolvableReason::DivisionByZero) => {}
        other => panic!("expected division by zero, got {other:?}"),
    }
}

#[test]
fn division_by_unknown_clears_denominator() {
    let b = match solve(&system("400 / x = 8")) {
        SolveOutcome::Unique(b) => b,
        other => panic!("expected unique, got {other:?}"),
    };
    assert_eq!(b["x"], Value::Exact(rat(50)));
}

#[test]
fn root_zeroing_denominator_is_rejected() {
    // x/(x-1) = 1/(x-1) expands to (x-1)^2 = 0 but x = 1 is undefined.
    match solve(&system("x / (x - 1) = 1 / (x - 1)")) {
        SolveOutcome::Unsolvable(UnsolvableReason::Inconsistent) => {}
        other => panic!("expected inconsistent, got {other:?}"),
    }
}

#[test]
fn multivariate_nonlinear_is_unsupported() {
    match solve(&system("x * y = 6\nx + y = 5")) {
        SolveOutcome::Unsolvable(UnsolvableReason::UnsupportedNonlinear) => {}
        other => panic!("expected unsupported nonlinear, got {other:?}"),
    }
}

#[test]
fn empty_system_is_empty() {
    let empty = EquationSystem::new(Vec::new(), String::new());
    match solve(&empty) {
        SolveOutcome::Unsolvable(UnsolvableReason::Empty) => {}
        other => panic!("expected empty, got {other:?}"),
    }
}

#[test]
fn is_solvable_answer_predicate() {
    let with_ans = system(&format!("{LAUNDRY}\nans = raymond_laundry - david_laundry"));
    assert!(is_solvable(&with_ans, "ans"));
    assert!(!is_solvable(&system("x = 1"), "ans")); // target absent
    assert!(!is_solvable(&system("ans = y + 1"), "ans")); // y unbound
}

#[test]
fn is_solvable_multiple_roots_only_for_target() {
    assert!(is_solvable(&system("ans ^ 2 = 9"), "ans"));
    // The ambiguity is on x, not ans, so the predicate refuses.
    assert!(!is_solvable(&system("x ^ 2 = 9\nans = x + 1"), "ans"));
}

#[test]
fn value_of_unique_and_policy() {
    let with_ans = system(&format!("{LAUNDRY}\nans = raymond_laundry - david_laundry"));
    let outcome = solve(&with_ans);
    let value = value_of(&outcome, "ans", RootPolicy::NonnegativeFirst).unwrap();
    assert_eq!(value, Value::Exact(rat(100)));

    let roots = solve(&system("x ^ 2 = 9"));
    let picked = value_of(&roots, "x", RootPolicy::NonnegativeFirst).unwrap();
    assert_eq!(picked.to_f64(), 3.0);

    let nothing = solve(&system("x = 1\nx = 2"));
    assert!(value_of(&nothing, "x", RootPolicy::NonnegativeFirst).is_none());
}

#[test]
fn value_of_prefers_all_nonnegative_bindings() {
    // Roots x = -3, 3; y = x + 4 is positive either way, so the chooser
    // falls through to the nonnegative target filter.
    let outcome = solve(&system("x ^ 2 = 9\ny = x + 4"));
    let picked = value_of(&outcome, "x", RootPolicy::NonnegativeFirst).unwrap();
    assert_eq!(picked.to_f64(), 3.0);
}

#[test]
fn verify_reports_exact_zero_residual() {
    let sys = system(LAUNDRY);
    let outcome = solve(&sys);
    let solution = verify(&sys, unique(&outcome)).unwrap();
    assert!(solution.exact);
    assert_eq!(solution.max_residual, 0.0);
}

#[test]
fn degree_eight_equation_finds_exact_roots() {
    match solve(&system("x ^ 8 = 256")) {
        SolveOutcome::MultipleRoots { candidates, .. } => {
            let values: Vec<f64> = candidates.iter().map(Value::to_f64).collect();
            assert_eq!(values, vec![-2.0, 2.0]);
            assert!(candidates.iter().all(Value::is_exact));
        }
        other => panic!("expected multiple roots, got {other:?}"),
    }
}

#[test]
fn cubic_without_pow_operator() {
    // Nonlinearity written as repeated multiplication.
    let outcome = solve(&system("x * x * x = 27"));
    let b = unique(&outcome);
    assert_eq!(b["x"], Value::Exact(rat(3)));
}

#[test]
fn rational_equation_clears_denominators() {
    // 6 / (x - 1) = 2  =>  x = 4.
    let outcome = solve(&system("6 / (x - 1) = 2"));
    let b = unique(&outcome);
    assert_eq!(b["x"], Value::Exact(rat(4)));
}

#[test]
fn irrational_roots_pass_residual_check() {
    // x^3 = 2 has the single real root 2^(1/3).
    let outcome = solve(&system("x ^ 3 = 2"));
    let b = unique(&outcome);
    let x = b["x"].to_f64();
    assert!((x - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
    assert!(!b["x"].is_exact());
}

#[test]
fn constant_equations_do_not_constrain() {
    let outcome = solve(&system("0 = 0"));
    let b = unique(&outcome);
    assert!(b.is_empty());
    match solve(&system("1 = 2")) {
        SolveOutcome::Unsolvable(UnsolvableReason::Inconsistent) => {}
        other => panic!("expected inconsistent, got {other:?}"),
    }
}

#[test]
fn tautological_variable_equation_is_underdetermined() {
    match solve(&system("y - y = 0")) {
        SolveOutcome::Unsolvable(UnsolvableReason::Underdetermined(v)) => assert_eq!(v, "y"),
        other => panic!("expected underdetermined, got {other:?}"),
    }
}

#[test]
fn quadratic_outcome_is_permutation_invariant() {
    let forward = solve(&system("x ^ 2 = 9\ny = x + 1\nz = y * 2"));
    let backward = solve(&system("z = y * 2\ny = x + 1\nx ^ 2 = 9"));
    match (&forward, &backward) {
        (
            SolveOutcome::MultipleRoots {
                candidates: a,
                bindings_per_candidate: ba,
                ..
            },
            SolveOutcome::MultipleRoots {
                candidates: b,
                bindings_per_candidate: bb,
                ..
            },
        ) => {
            assert_eq!(a, b);
            assert_eq!(ba, bb);
        }
        other => panic!("expected matching multiple roots, got {other:?}"),
    }
}

#[test]
fn percent_and_currency_flow_through_solving() {
    let outcome = solve(&system("price = $80\nrate = 25%\nans = price * rate"));
    let b = unique(&outcome);
    assert_eq!(b["ans"], Value::Exact(rat(20)));
}

// --- planted-system properties -------------------------------------------

/// Emit a random solvable linear system as text by choosing a solution and
/// a structurally nonsingular (permuted triangular) coefficient matrix.
pub(crate) fn planted_system(rng: &mut ChaCha8Rng) -> (String, Vec<(String, i64)>) {
    let n = rng.gen_range(1..=6usize);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let solution: Vec<i64> = (0..n).map(|_| rng.gen_range(-9..=9)).collect();

    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }

    let mut lines = Vec::new();
    for row in 0..n {
        // Lower-triangular in permuted order with nonzero diagonal.
        let mut coeffs = vec![0i64; n];
        for (k, &var) in perm.iter().enumerate().take(row + 1) {
            coeffs[var] = if k == row {
                let mut d = rng.gen_range(1..=9);
                if rng.gen_bool(0.5) {
                    d = -d;
                }
                d
            } else {
                rng.gen_range(-9..=9)
            };
        }
        let rhs: i64 = coeffs.iter().zip(&solution).map(|(c, s)| c * s).sum();
        let mut terms = String::new();
        let mut first = true;
        for (c, name) in coeffs.iter().zip(&names) {
            if *c == 0 {
                continue;
            }
            if first {
                if *c < 0 {
                    terms.push('-');
                }
                first = false;
            } else {
                terms.push_str(if *c < 0 { " - " } else { " + " });
            }
            let mag = c.abs();
            if mag == 1 {
                terms.push_str(name);
            } else {
                terms.push_str(&format!("{mag} * {name}"));
            }
        }
        if terms.is_empty() {
            terms.push('0');
        }
        lines.push(format!("{terms} = {rhs}"));
    }

    let planted = names.into_iter().zip(solution).collect();
    (lines.join("\n"), planted)
}

#[test]
fn planted_systems_solve_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let (text, planted) = planted_system(&mut rng);
        let sys = system(&text);
        let outcome = solve(&sys);
        let b = unique(&outcome);
        for (name, expected) in &planted {
            assert_eq!(b[name], Value::Exact(rat(*expected)), "system:\n{text}");
        }
    }
}

#[test]
fn permutation_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..50 {
        let (text, planted) = planted_system(&mut rng);
        let mut lines: Vec<&str> = text.lines().collect();
        for i in (1..lines.len()).rev() {
            let j = rng.gen_range(0..=i);
            lines.swap(i, j);
        }
        let shuffled = lines.join("\n");
        let outcome = solve(&system(&shuffled));
        let b = unique(&outcome);
        for (name, expected) in &planted {
            assert_eq!(b[name], Value::Exact(rat(*expected)), "system:\n{shuffled}");
        }
    }
}

#[test]
fn determinism_across_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (text, _) = planted_system(&mut rng);
    let sys = system(&text);
    let first = format!("{:?}", solve(&sys));
    for _ in 0..5 {
        assert_eq!(format!("{:?}", solve(&sys)), first);
    }
}
