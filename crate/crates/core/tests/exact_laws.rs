use prefattach_core::closed_form::{
    a_closed, p_closed, p_closed_both, p_closed_float, p_first_degree_max, p_first_degree_one,
};
use prefattach_core::combinatorics::{factorial, odd_product};
use prefattach_core::recurrence::{first_node_table, general_node_table, scaled_table};
use prefattach_core::validation::check_equivalence;
use prefattach_core::{ExactInteger, ExactRational};

const N_MAX: usize = 200;

#[test]
fn every_general_table_row_is_normalized_with_exact_support() {
    for m in [1, 2, 3, 4, 5, 17, 64, 99, 150, 199, N_MAX] {
        let table = general_node_table(m, N_MAX).unwrap();
        for row in table.rows() {
            let n = row.time();
            assert_eq!(row.total(), ExactRational::one(), "m = {m}, n = {n}");
            assert_eq!(row.max_degree(), n - m + 1);
            assert!(row.prob(0).is_zero());
            assert!(row.prob(n - m + 2).is_zero());
            assert!(row.probabilities().iter().all(|p| !p.is_negative()));
        }
    }
}

#[test]
fn first_node_support_grows_by_one_each_step() {
    let table = first_node_table(N_MAX).unwrap();
    for row in table.rows() {
        let n = row.time();
        let top = row.iter().filter(|(_, p)| !p.is_zero()).map(|(k, _)| k).max();
        assert_eq!(top, Some(n));
    }
}

#[test]
fn scaled_table_is_the_rescaled_probability_table() {
    let a = scaled_table(N_MAX).unwrap();
    let p = first_node_table(N_MAX).unwrap();
    for n in 1..=N_MAX {
        let row = p.distribution_at(n).unwrap();
        let scale_num = ExactInteger::pow2(n) * odd_product(n);
        for k in 1..=n {
            let forward =
                ExactRational::new(scale_num.clone(), ExactInteger::pow2(k) * factorial(n - 1)).unwrap() * row.prob(k);
            assert_eq!(a.get(n, k).unwrap(), &forward, "forward ({n}, {k})");
            let back = ExactRational::new(factorial(n - 1), ExactInteger::pow2(n - k) * odd_product(n)).unwrap()
                * a.get(n, k).unwrap().clone();
            assert_eq!(back, row.prob(k), "backward ({n}, {k})");
        }
    }
}

#[test]
fn scaled_table_boundaries() {
    let a = scaled_table(N_MAX).unwrap();
    for n in 1..=N_MAX {
        assert_eq!(a.get(n, n).unwrap(), &ExactRational::one());
        assert_eq!(
            a.get(n, 1).unwrap(),
            &ExactRational::from_integer(ExactInteger::pow2(2 * (n - 1)))
        );
        assert!(a.row(n).unwrap().iter().all(|x| !x.is_negative()));
    }
}

/// Not a contract: the scaled coefficients have so far always come out integral.
#[test]
fn scaled_coefficients_observed_integral() {
    let a = scaled_table(N_MAX).unwrap();
    for n in 1..=N_MAX {
        assert!(a.row(n).unwrap().iter().all(ExactRational::is_integer), "row {n}");
    }
}

#[test]
fn closed_form_matches_recurrence_and_normalizes() {
    let report = check_equivalence(N_MAX).unwrap();
    assert!(
        report.passed,
        "first mismatches: {:?}",
        &report.mismatches[..report.mismatches.len().min(3)]
    );
    assert_eq!(report.cells_compared, N_MAX * (N_MAX + 1));

    let table = first_node_table(N_MAX).unwrap();
    for n in (1..=N_MAX).step_by(13).chain([N_MAX]) {
        let total: ExactRational = (1..=n).map(|k| p_closed(n, k).unwrap().exact.unwrap()).sum();
        assert_eq!(total, ExactRational::one(), "n = {n}");
        let row = table.distribution_at(n).unwrap();
        for k in 1..=n {
            assert_eq!(p_closed(n, k).unwrap().exact.unwrap(), row.prob(k));
        }
    }
}

#[test]
fn boundary_laws_agree_with_closed_form() {
    for n in 1..=N_MAX {
        assert_eq!(p_closed(n, 1).unwrap().exact, p_first_degree_one(n).unwrap().exact);
        assert_eq!(p_closed(n, n).unwrap().exact, p_first_degree_max(n).unwrap().exact);
        assert_eq!(a_closed(n, n).unwrap().exact, Some(ExactRational::one()));
        assert_eq!(
            a_closed(n, 1).unwrap().exact,
            Some(ExactRational::from_integer(ExactInteger::pow2(2 * (n - 1))))
        );
    }
}

#[test]
fn near_diagonal_cells_match() {
    // k = n - 1 is the base of the induction on n - k.
    let a = scaled_table(N_MAX).unwrap();
    for n in 2..=N_MAX {
        assert_eq!(a.get(n, n - 1), a_closed(n, n - 1).unwrap().exact.as_ref());
    }
}

#[test]
fn float_path_within_1e_10_up_to_100() {
    let mut worst: f64 = 0.0;
    for n in 1..=100 {
        for k in 1..=n {
            let err = p_closed_both(n, k).unwrap().relative_error().unwrap();
            worst = worst.max(err);
        }
    }
    assert!(worst <= 1e-10, "worst relative error {worst:e}");
}

#[test]
fn float_path_stays_in_unit_interval_far_out() {
    for (n, k) in [
        (1_000, 1),
        (1_000, 1_000),
        (10_000, 37),
        (100_000, 5),
        (100_000, 100_000),
        (1_000_000, 3),
    ] {
        let p = p_closed_float(n, k).unwrap().approx.unwrap();
        let ln = p.ln().unwrap();
        assert!(ln.is_finite() && ln < 0.0, "({n}, {k}): ln p = {ln}");
    }
    let p = p_closed_float(100_000, 5).unwrap().approx.unwrap().to_f64();
    assert!(p > 0.0 && p < 1.0);
}

#[test]
fn float_path_approximately_normalizes_at_large_n() {
    let n = 2_000;
    let total: f64 = (1..=n)
        .map(|k| p_closed_float(n, k).unwrap().approx.unwrap().to_f64())
        .sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");
}
