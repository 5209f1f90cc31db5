//! Cross-checks between the recurrence, the explicit solution, the algebraic
//! identities behind it, and simulation.

use rayon::prelude::*;

use crate::closed_form::{a_closed_column, p_closed_column};
use crate::combinatorics::{factorial_big, ExactInteger, ExactRational};
use crate::error::{Error, Result};
use crate::recurrence::{first_node_table, general_node_table, scaled_table, DegreeDistribution};
use crate::simulator::EmpiricalDistribution;

/// Default total-variation gate.
pub const DEFAULT_MAX_TV: f64 = 0.005;
/// Default minimum expected count per chi-square cell.
pub const DEFAULT_MIN_EXPECTED: f64 = 5.0;

/// Which pair of quantities a mismatch refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    /// Scaled coefficient `a(n, k)`: recurrence (left) vs explicit (right).
    Scaled,
    /// Probability `p(n, k)`: recurrence (left) vs explicit (right).
    Probability,
    /// `p^m(m + t, k)` (left) vs `p^1(1 + t, k)` (right); `n` is `m + t`.
    TimeShift,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub family: Family,
    pub n: usize,
    pub k: usize,
    pub left: ExactRational,
    pub right: ExactRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub n_max: usize,
    pub cells_compared: usize,
    /// Ordered by `(n, k, family)`.
    pub mismatches: Vec<Mismatch>,
    pub passed: bool,
}

impl EquivalenceReport {
    fn new(n_max: usize, cells_compared: usize, mut mismatches: Vec<Mismatch>) -> Self {
        mismatches.sort_by_key(|m| (m.n, m.k, m.family));
        let passed = mismatches.is_empty();
        Self {
            n_max,
            cells_compared,
            mismatches,
            passed,
        }
    }
}

/// Column-wise access to an explicit solution, so alternative (or
/// deliberately broken) implementations can be checked with the same code.
pub trait ClosedFormSource: Sync {
    /// `[a(k, k), ..., a(n_max, k)]`.
    fn scaled_column(&self, k: usize, n_max: usize) -> Vec<ExactRational>;
    /// `[p(k, k), ..., p(n_max, k)]`.
    fn probability_column(&self, k: usize, n_max: usize) -> Vec<ExactRational>;
}

/// The explicit solution from [`crate::closed_form`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ExplicitSolution;

impl ClosedFormSource for ExplicitSolution {
    fn scaled_column(&self, k: usize, n_max: usize) -> Vec<ExactRational> {
        a_closed_column(k, n_max).expect("k <= n_max checked by caller")
    }

    fn probability_column(&self, k: usize, n_max: usize) -> Vec<ExactRational> {
        p_closed_column(k, n_max).expect("k <= n_max checked by caller")
    }
}

/// Compares the recurrence tables against the explicit solution for all
/// `1 <= k <= n <= n_max`, exactly.
pub fn check_equivalence(n_max: usize) -> Result<EquivalenceReport> {
    check_equivalence_with(n_max, &ExplicitSolution)
}

pub fn check_equivalence_with(n_max: usize, source: &dyn ClosedFormSource) -> Result<EquivalenceReport> {
    let scaled = scaled_table(n_max)?;
    let probs = first_node_table(n_max)?;

    let per_column: Vec<Vec<Mismatch>> = (1..=n_max)
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::new();
            let a_col = source.scaled_column(k, n_max);
            let p_col = source.probability_column(k, n_max);
            for n in k..=n_max {
                let i = n - k;
                let a_rec = scaled.get(n, k).expect("cell within table");
                let a_exp = a_col.get(i).cloned().unwrap_or_else(ExactRational::zero);
                if a_rec != &a_exp {
                    out.push(Mismatch {
                        family: Family::Scaled,
                        n,
                        k,
                        left: a_rec.clone(),
                        right: a_exp,
                    });
                }
                let p_rec = probs.distribution_at(n).expect("row within table").prob(k);
                let p_exp = p_col.get(i).cloned().unwrap_or_else(ExactRational::zero);
                if p_rec != p_exp {
                    out.push(Mismatch {
                        family: Family::Probability,
                        n,
                        k,
                        left: p_rec,
                        right: p_exp,
                    });
                }
            }
            out
        })
        .collect();

    let cells = n_max * (n_max + 1);
    Ok(EquivalenceReport::new(
        n_max,
        cells,
        per_column.into_iter().flatten().collect(),
    ))
}

/// `(k + 2j)! / (k + j)!` style falling products as exact integers.
fn factorial_ratio(top: usize, bottom: usize) -> ExactInteger {
    ExactInteger::from_big_int(factorial_big(top) / factorial_big(bottom))
}

/// Both sides of the summation identity used in the induction proof:
///
/// ```text
/// Σ_{j=0}^{r} 2^{-2(j+1)}/(j+1)! [2(k-2)(k-1+2j)!/(k-1+j)! - (k-1)(k+2j)!/(k+j)!]
///   = 2^{-2(r+1)} (k+1+2r)! / ((r+1)! (k+r)!) - 1
/// ```
pub fn induction_identity_sides(k: usize, r: usize) -> (ExactRational, ExactRational) {
    assert!(k >= 2, "identity needs k >= 2");
    let k64 = k as i64;
    let lhs = (0..=r)
        .map(|j| {
            let first = ExactInteger::from(2 * (k64 - 2)) * factorial_ratio(k - 1 + 2 * j, k - 1 + j);
            let second = ExactInteger::from(k64 - 1) * factorial_ratio(k + 2 * j, k + j);
            let weight = ExactInteger::pow2(2 * (j + 1)) * ExactInteger::from_big_int(factorial_big(j + 1));
            ExactRational::new(first - second, weight).expect("positive weight")
        })
        .sum();
    let rhs_den = ExactInteger::pow2(2 * (r + 1))
        * ExactInteger::from_big_int(factorial_big(r + 1))
        * ExactInteger::from_big_int(factorial_big(k + r));
    let rhs = ExactRational::new(ExactInteger::from_big_int(factorial_big(k + 1 + 2 * r)), rhs_den)
        .expect("positive denominator")
        - ExactRational::one();
    (lhs, rhs)
}

pub fn check_induction_identity(k: usize, r: usize) -> bool {
    let (lhs, rhs) = induction_identity_sides(k, r);
    lhs == rhs
}

/// Both sides of the polynomial identity that closes the induction step,
/// `4(r+2)(k+r+1) + 2(k-2)(k+r+1) - (k-1)(k+2+2r) = (k+3+2r)(k+2+2r)`.
pub fn step_identity_sides(k: usize, r: usize) -> (ExactInteger, ExactInteger) {
    step_sides_with_leading(4, k, r)
}

fn step_sides_with_leading(leading: i64, k: usize, r: usize) -> (ExactInteger, ExactInteger) {
    let (k, r) = (ExactInteger::from(k as i64), ExactInteger::from(r as i64));
    let int = |v: i64| ExactInteger::from(v);
    let lhs = int(leading) * (&r + &int(2)) * (&k + &r + int(1)) + int(2) * (&k - &int(2)) * (&k + &r + int(1))
        - (&k - &int(1)) * (&k + &int(2) + int(2) * r.clone());
    let rhs = (&k + &int(3) + int(2) * r.clone()) * (&k + &int(2) + int(2) * r);
    (lhs, rhs)
}

pub fn check_step_identity(k: usize, r: usize) -> bool {
    assert!(k >= 2, "identity needs k >= 2");
    let (lhs, rhs) = step_identity_sides(k, r);
    lhs == rhs
}

/// `LHS - RHS` of the step identity with leading term
/// `2(r+2)(k+r+1)` in place of `4(r+2)(k+r+1)`. It equals `-2(r+2)(k+r+1)`, never zero; the correct
/// leading coefficient follows from multiplying the previous line through by
/// `2^{2(r+2)} (r+2)!`.
pub fn printed_step_identity_gap(k: usize, r: usize) -> ExactInteger {
    let (lhs, rhs) = step_sides_with_leading(2, k, r);
    lhs - rhs
}

/// Half the L1 distance between two probability vectors; the shorter one is
/// padded with zeros.
pub fn tv_between(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let sum: f64 = (0..len).map(|i| (at(a, i) - at(b, i)).abs()).sum();
    (0.5 * sum).clamp(0.0, 1.0)
}

fn check_same_coordinates(p: &DegreeDistribution, q: &EmpiricalDistribution) -> Result<()> {
    if p.birth() != q.birth() || p.time() != q.horizon() {
        return Err(Error::CoordinateMismatch {
            left_m: p.birth(),
            left_n: p.time(),
            right_m: q.birth(),
            right_n: q.horizon(),
        });
    }
    Ok(())
}

/// Total variation distance between an analytic law and empirical counts.
pub fn tv_distance(p: &DegreeDistribution, q: &EmpiricalDistribution) -> Result<f64> {
    check_same_coordinates(p, q)?;
    let analytic: Vec<f64> = p.probabilities().iter().map(ExactRational::to_f64).collect();
    let empirical: Vec<f64> = (1..=q.counts().len()).map(|k| q.frequency(k)).collect();
    Ok(tv_between(&analytic, &empirical))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Fewer than two cells survived pooling.
    Untestable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatThresholds {
    pub max_tv: f64,
    pub min_expected: f64,
}

impl Default for StatThresholds {
    fn default() -> Self {
        Self {
            max_tv: DEFAULT_MAX_TV,
            min_expected: DEFAULT_MIN_EXPECTED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatReport {
    pub tv_distance: f64,
    pub chi_square_statistic: f64,
    /// Pooled cell count minus one.
    pub degrees_of_freedom: usize,
    /// 0.999 quantile at `degrees_of_freedom`; `None` when untestable.
    pub critical_value: Option<f64>,
    pub trials: u64,
    pub verdict: Verdict,
}

impl StatReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// 0.999 quantiles of the chi-square law for 1..=64 degrees of freedom.
const CHI_SQUARE_999: [f64; 64] = [
    10.8276, 13.8155, 16.2662, 18.4668, 20.5150, 22.4577, 24.3219, 26.1245, 27.8772, 29.5883, 31.2641, 32.9095,
    34.5282, 36.1233, 37.6973, 39.2524, 40.7902, 42.3124, 43.8202, 45.3147, 46.7970, 48.2679, 49.7282, 51.1786,
    52.6197, 54.0520, 55.4760, 56.8923, 58.3012, 59.7031, 61.0983, 62.4872, 63.8701, 65.2472, 66.6188, 67.9852,
    69.3465, 70.7029, 72.0547, 73.4020, 74.7449, 76.0838, 77.4186, 78.7495, 80.0767, 81.4003, 82.7204, 84.0371,
    85.3506, 86.6608, 87.9680, 89.2722, 90.5734, 91.8718, 93.1675, 94.4605, 95.7510, 97.0388, 98.3242, 99.6072,
    100.8879, 102.1662, 103.4424, 104.7163,
];

/// 0.999 quantile of chi-square with `df >= 1` degrees of freedom. Tabulated
/// up to 64; Wilson-Hilferty beyond.
pub fn chi_square_critical_999(df: usize) -> f64 {
    assert!(df >= 1, "degrees of freedom must be positive");
    if let Some(&v) = CHI_SQUARE_999.get(df - 1) {
        return v;
    }
    const Z_999: f64 = 3.090_232_306_167_813;
    let d = df as f64;
    let c = 2.0 / (9.0 * d);
    d * (1.0 - c + Z_999 * c.sqrt()).powi(3)
}

/// Merges adjacent cells (in degree order) until each has expected count at
/// least `min_expected`; a short final remainder joins the last full cell.
/// Returns `(expected, observed)` per pooled cell.
fn pool_cells(expected: &[f64], observed: &[u64], min_expected: f64) -> Vec<(f64, u64)> {
    let mut cells: Vec<(f64, u64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0u64);
    for (&e, &o) in expected.iter().zip(observed) {
        e_acc += e;
        o_acc += o;
        if e_acc >= min_expected {
            cells.push((e_acc, o_acc));
            e_acc = 0.0;
            o_acc = 0;
        }
    }
    if e_acc > 0.0 || o_acc > 0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += e_acc;
                last.1 += o_acc;
            }
            None => cells.push((e_acc, o_acc)),
        }
    }
    cells
}

/// Pearson chi-square plus total variation, with the default TV gate.
pub fn chi_square(p: &DegreeDistribution, q: &EmpiricalDistribution, min_expected: f64) -> Result<StatReport> {
    compare(
        p,
        q,
        &StatThresholds {
            min_expected,
            ..StatThresholds::default()
        },
    )
}

/// Full statistical comparison of an analytic law against empirical counts.
pub fn compare(p: &DegreeDistribution, q: &EmpiricalDistribution, thresholds: &StatThresholds) -> Result<StatReport> {
    check_same_coordinates(p, q)?;
    if q.trials() == 0 {
        return Err(Error::InvalidArgument("no trials".into()));
    }
    let tv = tv_distance(p, q)?;
    let trials = q.trials() as f64;
    let expected: Vec<f64> = p.probabilities().iter().map(|x| x.to_f64() * trials).collect();
    let cells = pool_cells(&expected, q.counts(), thresholds.min_expected);

    if cells.len() < 2 {
        return Ok(StatReport {
            tv_distance: tv,
            chi_square_statistic: 0.0,
            degrees_of_freedom: 0,
            critical_value: None,
            trials: q.trials(),
            verdict: Verdict::Untestable,
        });
    }
    let statistic: f64 = cells
        .iter()
        .map(|&(e, o)| {
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum();
    let df = cells.len() - 1;
    let critical = chi_square_critical_999(df);
    let verdict = if tv <= thresholds.max_tv && statistic < critical {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(StatReport {
        tv_distance: tv,
        chi_square_statistic: statistic,
        degrees_of_freedom: df,
        critical_value: Some(critical),
        trials: q.trials(),
        verdict,
    })
}

/// Lists every cell where the law of node `m` after `t` steps differs from
/// the law of the first node after `t` steps, for `t` in `1..=t_max`.
///
/// Descriptive only; `passed` just records whether no difference was seen.
pub fn time_invariance_report(m: usize, t_max: usize) -> Result<EquivalenceReport> {
    if m < 2 {
        return Err(Error::InvalidArgument("time-shift comparison needs m >= 2".into()));
    }
    if t_max == 0 {
        return Ok(EquivalenceReport::new(m, 0, Vec::new()));
    }
    let shifted = general_node_table(m, m + t_max)?;
    let first = first_node_table(1 + t_max)?;
    let mut mismatches = Vec::new();
    let mut cells = 0;
    for t in 1..=t_max {
        let left = shifted.distribution_at(m + t)?;
        let right = first.distribution_at(1 + t)?;
        for k in 1..=left.max_degree().max(right.max_degree()) {
            cells += 1;
            let (l, r) = (left.prob(k), right.prob(k));
            if l != r {
                mismatches.push(Mismatch {
                    family: Family::TimeShift,
                    n: m + t,
                    k,
                    left: l,
                    right: r,
                });
            }
        }
    }
    Ok(EquivalenceReport::new(m + t_max, cells, mismatches))
}
