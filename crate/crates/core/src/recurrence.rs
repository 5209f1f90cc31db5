//! Exact dynamic programming over the degree master equation.
//!
//! Nodes are indexed by birth time starting at 1. A node born at time `m`
//! has degree 1 at time `m`, and between times `n - 1` and `n` its degree
//! goes from `k - 1` to `k` with probability `(k - 1) / (2n - 1)` or stays at
//! `k` with probability `(2n - 1 - k) / (2n - 1)`. The coefficients always use
//! the absolute time `n`, never `n - m`.
//!
//! The scaled coefficients `a(n, k) = 2^{n-k} (1·3⋯(2n-1)) / (n-1)! · p(n, k)`
//! obey an integer-friendly recurrence that [`scaled_table`] evaluates
//! directly.

use crate::combinatorics::{ExactInteger, ExactRational};
use crate::error::{Error, Result};

/// Law of the degree of node `birth` at time `time`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeDistribution {
    birth: usize,
    time: usize,
    /// `probs[k - 1] = P(X = k)`. Under the master equation from a degree-1
    /// birth this covers `1..=time - birth + 1`.
    probs: Vec<ExactRational>,
}

impl DegreeDistribution {
    /// Point mass at degree 1, the state at birth.
    pub fn at_birth(birth: usize) -> Self {
        Self {
            birth,
            time: birth,
            probs: vec![ExactRational::one()],
        }
    }

    pub fn birth(&self) -> usize {
        self.birth
    }

    pub fn time(&self) -> usize {
        self.time
    }

    /// Largest degree with a stored probability.
    pub fn max_degree(&self) -> usize {
        self.probs.len()
    }

    /// `P(X = k)`; zero outside the support.
    pub fn prob(&self, k: usize) -> ExactRational {
        k.checked_sub(1)
            .and_then(|i| self.probs.get(i))
            .cloned()
            .unwrap_or_else(ExactRational::zero)
    }

    /// Probabilities for degrees `1..=max_degree()`, in order.
    pub fn probabilities(&self) -> &[ExactRational] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &ExactRational)> {
        self.probs.iter().enumerate().map(|(i, p)| (i + 1, p))
    }

    pub fn total(&self) -> ExactRational {
        self.probs.iter().sum()
    }

    /// One master-equation step from time `n - 1` to `n`.
    fn advance(&self) -> Self {
        let n = self.time + 1;
        let denom = 2 * n as u64 - 1;
        let len = self.probs.len() + 1;
        let probs = (1..=len)
            .map(|k| {
                let k64 = k as u64;
                let mut acc = ExactRational::zero();
                if k >= 2 {
                    acc = acc + self.probs[k - 2].mul_int(k64 - 1);
                }
                if let Some(stay) = self.probs.get(k - 1) {
                    acc = acc + stay.mul_int(denom - k64);
                }
                acc.div_int(denom)
            })
            .collect();
        Self {
            birth: self.birth,
            time: n,
            probs,
        }
    }
}

/// Every row of a node's degree law from its birth to `n_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionTable {
    birth: usize,
    rows: Vec<DegreeDistribution>,
}

impl DistributionTable {
    pub fn birth(&self) -> usize {
        self.birth
    }

    pub fn n_max(&self) -> usize {
        self.birth + self.rows.len() - 1
    }

    pub fn rows(&self) -> &[DegreeDistribution] {
        &self.rows
    }

    /// The stored row for time `n`.
    pub fn distribution_at(&self, n: usize) -> Result<&DegreeDistribution> {
        n.checked_sub(self.birth)
            .and_then(|i| self.rows.get(i))
            .ok_or(Error::OutOfRange {
                n,
                first: self.birth,
                last: self.n_max(),
            })
    }
}

/// Degree law of the first node for every `n` in `1..=n_max`.
pub fn first_node_table(n_max: usize) -> Result<DistributionTable> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    general_node_table(1, n_max)
}

/// Degree law of node `m` for every `n` in `m..=n_max`.
pub fn general_node_table(m: usize, n_max: usize) -> Result<DistributionTable> {
    if m < 1 {
        return Err(Error::InvalidArgument("birth index m must be at least 1".into()));
    }
    if m > n_max {
        return Err(Error::InvalidArgument(format!(
            "birth index m = {m} exceeds n_max = {n_max}"
        )));
    }
    let mut rows = Vec::with_capacity(n_max - m + 1);
    rows.push(DegreeDistribution::at_birth(m));
    for _ in m..n_max {
        let next = rows.last().expect("table starts non-empty").advance();
        rows.push(next);
    }
    Ok(DistributionTable { birth: m, rows })
}

/// Exact law of node `m`'s degree when the whole graph grows with the
/// self-loop completion (see [`crate::simulator`]).
///
/// Node 1 is the initial state and starts at degree 1, so its table equals
/// [`general_node_table`]. A node born at `m >= 2` self-loops on arrival with
/// probability `2 / (2m - 1)`, so it starts at degree 2 with that probability
/// and its support reaches `n - m + 2`. Later steps follow the same master
/// equation as [`general_node_table`].
pub fn graph_node_table(m: usize, n_max: usize) -> Result<DistributionTable> {
    if m == 1 {
        return general_node_table(m, n_max);
    }
    let mut table = general_node_table(m, m)?;
    let birth_den = 2 * m as u64 - 1;
    let mut row = DegreeDistribution {
        birth: m,
        time: m,
        probs: vec![
            ExactRational::new(birth_den - 2, birth_den)?,
            ExactRational::new(2u64, birth_den)?,
        ],
    };
    table.rows.clear();
    table.rows.push(row.clone());
    for _ in m..n_max {
        row = row.advance();
        table.rows.push(row.clone());
    }
    Ok(table)
}

/// Triangular table of the scaled coefficients `a(n, k)`, `1 <= k <= n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledTable {
    rows: Vec<Vec<ExactRational>>,
}

impl ScaledTable {
    pub fn n_max(&self) -> usize {
        self.rows.len()
    }

    /// `a(n, k)`, or `None` outside `1 <= k <= n <= n_max`.
    pub fn get(&self, n: usize, k: usize) -> Option<&ExactRational> {
        let row = self.rows.get(n.checked_sub(1)?)?;
        row.get(k.checked_sub(1)?)
    }

    /// Row `n` as `[a(n, 1), ..., a(n, n)]`.
    pub fn row(&self, n: usize) -> Option<&[ExactRational]> {
        self.rows.get(n.checked_sub(1)?).map(Vec::as_slice)
    }
}

/// Builds `a(n, k)` for `n <= n_max`: boundary `a(n, 1) = 4^{n-1}` and
/// `a(n, n) = 1`, interior
/// `a(n, k) = [(k-1) a(n-1, k-1) + 2(2n-1-k) a(n-1, k)] / (n-1)`.
pub fn scaled_table(n_max: usize) -> Result<ScaledTable> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let mut rows: Vec<Vec<ExactRational>> = Vec::with_capacity(n_max);
    rows.push(vec![ExactRational::one()]);
    for n in 2..=n_max {
        let prev = &rows[n - 2];
        let n64 = n as u64;
        let row = (1..=n)
            .map(|k| {
                if k == n {
                    ExactRational::one()
                } else if k == 1 {
                    ExactRational::from_integer(ExactInteger::pow2(2 * (n - 1)))
                } else {
                    let k64 = k as u64;
                    let up = prev[k - 2].mul_int(k64 - 1);
                    let stay = prev[k - 1].mul_int(2 * (2 * n64 - 1 - k64));
                    (up + stay).div_int(n64 - 1)
                }
            })
            .collect();
        rows.push(row);
    }
    Ok(ScaledTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(num: u64, den: u64) -> ExactRational {
        ExactRational::new(num, den).unwrap()
    }

    #[test]
    fn first_node_rows_match_hand_steps() {
        let table = first_node_table(3).unwrap();
        assert_eq!(table.distribution_at(1).unwrap().probabilities(), &[q(1, 1)]);
        assert_eq!(table.distribution_at(2).unwrap().probabilities(), &[q(2, 3), q(1, 3)]);
        assert_eq!(
            table.distribution_at(3).unwrap().probabilities(),
            &[q(8, 15), q(1, 3), q(2, 15)]
        );
    }

    #[test]
    fn single_row_table() {
        let table = first_node_table(1).unwrap();
        assert_eq!(table.rows().len(), 1);
        assert_eq!(table.rows()[0].probabilities(), &[q(1, 1)]);
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(first_node_table(0).is_err());
        assert!(general_node_table(0, 3).is_err());
        assert!(general_node_table(4, 3).is_err());
        assert!(scaled_table(0).is_err());
    }

    #[test]
    fn distribution_at_out_of_range() {
        let table = first_node_table(3).unwrap();
        assert_eq!(
            table.distribution_at(4),
            Err(Error::OutOfRange {
                n: 4,
                first: 1,
                last: 3
            })
        );
        let later = general_node_table(3, 5).unwrap();
        assert!(later.distribution_at(2).is_err());
        assert_eq!(later.distribution_at(3).unwrap().probabilities(), &[q(1, 1)]);
    }

    #[test]
    fn general_node_uses_absolute_time() {
        assert_eq!(general_node_table(1, 3).unwrap(), first_node_table(3).unwrap());
        let m2 = general_node_table(2, 3).unwrap();
        assert_eq!(m2.distribution_at(2).unwrap().probabilities(), &[q(1, 1)]);
        assert_eq!(m2.distribution_at(3).unwrap().probabilities(), &[q(4, 5), q(1, 5)]);
    }

    #[test]
    fn general_node_step_matches_single_bernoulli_enumeration() {
        // Node 2 at time 3 faces one trial with success probability 1/(2*3-1).
        let success = q(1, 5);
        let fail = ExactRational::one() - success.clone();
        let m2 = general_node_table(2, 3).unwrap();
        let row = m2.distribution_at(3).unwrap();
        assert_eq!(row.prob(1), fail);
        assert_eq!(row.prob(2), success);
    }

    #[test]
    fn prob_is_zero_outside_support() {
        let table = first_node_table(4).unwrap();
        let row = table.distribution_at(4).unwrap();
        assert!(row.prob(0).is_zero());
        assert!(row.prob(5).is_zero());
        assert_eq!(row.max_degree(), 4);
    }

    #[test]
    fn graph_table_birth_mixture() {
        assert_eq!(graph_node_table(1, 6).unwrap(), first_node_table(6).unwrap());
        let g = graph_node_table(2, 3).unwrap();
        assert_eq!(g.distribution_at(2).unwrap().probabilities(), &[q(1, 3), q(2, 3)]);
        // From degree 1: gain w.p. 1/5; from degree 2: gain w.p. 2/5.
        assert_eq!(
            g.distribution_at(3).unwrap().probabilities(),
            &[q(4, 15), q(1, 15) + q(6, 15), q(4, 15)]
        );
        assert_eq!(g.distribution_at(3).unwrap().total(), q(1, 1));
    }

    #[test]
    fn scaled_table_hand_values() {
        let a = scaled_table(4).unwrap();
        assert_eq!(a.get(3, 1), Some(&q(16, 1)));
        assert_eq!(a.get(3, 2), Some(&q(5, 1)));
        assert_eq!(a.get(4, 2), Some(&q(22, 1)));
        assert_eq!(a.get(4, 3), Some(&q(6, 1)));
        assert_eq!(a.get(4, 5), None);
        assert_eq!(a.get(0, 1), None);
        assert_eq!(scaled_table(1).unwrap().row(1), Some(&[q(1, 1)][..]));
    }

    #[test]
    fn scaled_boundary_agrees_with_interior_recurrence() {
        // The k = 1 recurrence gives 4 a(n-1, 1), consistent with 4^{n-1}.
        let a = scaled_table(30).unwrap();
        for n in 2..=30 {
            let via_recurrence = a.get(n - 1, 1).unwrap().mul_int(4);
            assert_eq!(a.get(n, 1).unwrap(), &via_recurrence);
        }
    }
}
