use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use prefattach_core::recurrence::{first_node_table, general_node_table, graph_node_table};
use prefattach_core::simulator::{
    derive_stream, run_trials, simulate_graph, simulate_marginal, SimulationConfig, SimulationMode,
};
use prefattach_core::validation::{compare, tv_between, tv_distance, StatThresholds};
use prefattach_core::DegreeDistribution;

/// Every graph-growth history up to time `n` with its probability, as
/// `(degrees, probability)`. Each step branches over "attach to node i"
/// (weight degree_i) and "self-loop" (weight 2), all over 2t - 1.
fn enumerate_histories(n: usize) -> Vec<(Vec<u64>, BigRational)> {
    let mut states = vec![(vec![1u64], BigRational::one())];
    for t in 2..=n as u64 {
        let den = BigRational::from_integer((2 * t - 1).into());
        let mut next = Vec::new();
        for (degrees, p) in &states {
            for i in 0..degrees.len() {
                let mut d = degrees.clone();
                d[i] += 1;
                d.push(1);
                let w = BigRational::from_integer(degrees[i].into());
                next.push((d, p * &w / &den));
            }
            let mut d = degrees.clone();
            d.push(2);
            next.push((d, p * BigRational::from_integer(2.into()) / &den));
        }
        states = next;
    }
    states
}

fn node_marginal(histories: &[(Vec<u64>, BigRational)], m: usize) -> BTreeMap<u64, BigRational> {
    let mut law = BTreeMap::new();
    for (degrees, p) in histories {
        *law.entry(degrees[m - 1]).or_insert_with(BigRational::zero) += p;
    }
    law
}

fn as_map(row: &DegreeDistribution) -> BTreeMap<u64, BigRational> {
    row.iter()
        .filter(|(_, p)| !p.is_zero())
        .map(|(k, p)| {
            let num: BigRational = p.to_fraction_string().parse().unwrap();
            (k as u64, num)
        })
        .collect()
}

#[test]
fn exhaustive_histories_reproduce_first_node_table() {
    let table = first_node_table(4).unwrap();
    for n in 1..=4 {
        let histories = enumerate_histories(n);
        assert_eq!(histories.len(), (1..n).map(|t| t + 1).product::<usize>());
        let total: BigRational = histories.iter().map(|(_, p)| p.clone()).sum();
        assert!(total.is_one());
        assert!(histories.iter().all(|(d, _)| d.iter().sum::<u64>() == 2 * n as u64 - 1));
        assert_eq!(
            node_marginal(&histories, 1),
            as_map(table.distribution_at(n).unwrap()),
            "n = {n}"
        );
    }
}

#[test]
fn exhaustive_histories_reproduce_graph_node_tables() {
    for n in 1..=5 {
        let histories = enumerate_histories(n);
        for m in 1..=n {
            let table = graph_node_table(m, n).unwrap();
            assert_eq!(
                node_marginal(&histories, m),
                as_map(table.distribution_at(n).unwrap()),
                "m = {m}, n = {n}"
            );
        }
    }
}

/// Law of the dependent Bernoulli sequence by walking every success/failure
/// path from birth to time `n`.
fn enumerate_bernoulli_paths(m: usize, n: usize) -> BTreeMap<u64, BigRational> {
    fn walk(t: u64, n: u64, degree: u64, p: BigRational, out: &mut BTreeMap<u64, BigRational>) {
        if t > n {
            *out.entry(degree).or_insert_with(BigRational::zero) += p;
            return;
        }
        let den = BigRational::from_integer((2 * t - 1).into());
        let win = BigRational::from_integer(degree.into()) / &den;
        let lose = BigRational::one() - &win;
        walk(t + 1, n, degree + 1, &p * win, out);
        walk(t + 1, n, degree, p * lose, out);
    }
    let mut out = BTreeMap::new();
    walk(m as u64 + 1, n as u64, 1, BigRational::one(), &mut out);
    out.retain(|_, p| !p.is_zero());
    out
}

#[test]
fn exhaustive_bernoulli_paths_reproduce_general_tables() {
    for n in 1..=9 {
        for m in 1..=n {
            let table = general_node_table(m, n).unwrap();
            assert_eq!(
                enumerate_bernoulli_paths(m, n),
                as_map(table.distribution_at(n).unwrap()),
                "m = {m}, n = {n}"
            );
        }
    }
    let single = enumerate_bernoulli_paths(2, 3);
    assert_eq!(single[&2], "1/5".parse().unwrap());
}

#[test]
fn marginal_frequency_for_small_horizon() {
    let dist = run_trials(&SimulationConfig {
        mode: SimulationMode::Marginal,
        birth: 1,
        horizon: 3,
        trials: 1_000_000,
        master_seed: 2024,
    })
    .unwrap();
    assert!((dist.frequency(1) - 8.0 / 15.0).abs() <= 0.003, "{}", dist.frequency(1));
}

#[test]
fn graph_first_node_law_for_small_horizon() {
    let dist = run_trials(&SimulationConfig {
        mode: SimulationMode::Graph,
        birth: 1,
        horizon: 3,
        trials: 1_000_000,
        master_seed: 2024,
    })
    .unwrap();
    let law = first_node_table(3).unwrap();
    let tv = tv_distance(law.distribution_at(3).unwrap(), &dist).unwrap();
    assert!(tv <= 0.005, "tv = {tv}");
}

fn check_all_nodes(mode: SimulationMode, analytic: impl Fn(usize, usize) -> DegreeDistribution) {
    for n in 1..=6 {
        for m in 1..=n {
            let dist = run_trials(&SimulationConfig {
                mode,
                birth: m,
                horizon: n,
                trials: 1_000_000,
                master_seed: 99 + 10 * n as u64 + m as u64,
            })
            .unwrap();
            let law = analytic(m, n);
            let report = compare(&law, &dist, &StatThresholds::default()).unwrap();
            assert!(report.tv_distance <= 0.005, "m = {m}, n = {n}: {report:?}");
            if n > m {
                assert!(report.passed(), "m = {m}, n = {n}: {report:?}");
            }
        }
    }
}

#[test]
fn marginal_mode_matches_general_table_for_all_small_nodes() {
    check_all_nodes(SimulationMode::Marginal, |m, n| {
        general_node_table(m, n).unwrap().distribution_at(n).unwrap().clone()
    });
}

#[test]
fn graph_mode_matches_graph_table_for_all_small_nodes() {
    check_all_nodes(SimulationMode::Graph, |m, n| {
        graph_node_table(m, n).unwrap().distribution_at(n).unwrap().clone()
    });
}

#[test]
fn graph_law_differs_from_marginal_law_after_time_one() {
    // A node born at m >= 2 self-loops on arrival with probability 2/(2m-1).
    let to_f64 = |row: &DegreeDistribution| -> Vec<f64> { row.probabilities().iter().map(|p| p.to_f64()).collect() };
    let general = general_node_table(3, 10).unwrap();
    let graph = graph_node_table(3, 10).unwrap();
    let tv = tv_between(
        &to_f64(general.distribution_at(10).unwrap()),
        &to_f64(graph.distribution_at(10).unwrap()),
    );
    assert!((tv - 0.215_133_473_337_807_7).abs() < 1e-12, "{tv}");
    assert_eq!(graph_node_table(1, 10).unwrap(), general_node_table(1, 10).unwrap());
}

#[test]
fn same_stream_same_outcome() {
    for trial in 0..50 {
        let a = simulate_marginal(2, 40, &mut derive_stream(11, trial));
        let b = simulate_marginal(2, 40, &mut derive_stream(11, trial));
        assert_eq!(a, b);
        let ga = simulate_graph(30, &mut derive_stream(11, trial));
        let gb = simulate_graph(30, &mut derive_stream(11, trial));
        assert_eq!(ga, gb);
    }
}

#[test]
fn distinct_trial_streams_are_uncorrelated() {
    // First draws of neighbouring streams should look like independent
    // uniforms: compare the empirical lag-one correlation against zero.
    use rand::RngCore;
    let xs: Vec<f64> = (0..20_000)
        .map(|i| derive_stream(3, i).next_u64().to_f64().unwrap() / u64::MAX as f64)
        .collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    let cov = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>();
    assert!((mean - 0.5).abs() < 0.01);
    assert!((cov / var).abs() < 0.03, "lag-one correlation {}", cov / var);
}
