//! Explicit degree laws of the first node.
//!
//! With `S(n, k) = Σ_{j=0}^{n-k-1} 2^{-2(j+1)} (k+2j)! / ((j+1)! (k+j)!)`:
//!
//! ```text
//! a(n, k) = 4^{n-k} [1 + (k-1) S(n, k)]                     (a(n, n) = 1)
//! p(n, k) = n! (n-1)! / (2n)! · 2^{2n-k} [1 + (k-1) S(n, k)]
//! p(n, 1) = 2^{n-1} (n-1)! / (1·3⋯(2n-1))
//! p(n, n) = (n-1)! / (1·3⋯(2n-1))
//! ```
//!
//! Exact evaluation sums the series left to right over rationals. The float
//! path works in log space: summands come from their exact term ratio and are
//! combined by pairwise log-sum-exp, so `n` up to `10^6` neither overflows nor
//! underflows.

use std::f64::consts::LN_2;

use num_bigint::BigInt;

use crate::combinatorics::{factorial_big, log_factorial, odd_product_big, sum_term, ExactRational, LogFloat};
use crate::error::{Error, Result};

/// One evaluated closed-form quantity together with its coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormValue {
    pub n: usize,
    pub k: usize,
    /// Birth index of the node; the closed forms describe the first node.
    pub m: usize,
    pub exact: Option<ExactRational>,
    pub approx: Option<LogFloat>,
}

impl ClosedFormValue {
    fn exact(n: usize, k: usize, value: ExactRational) -> Self {
        Self {
            n,
            k,
            m: 1,
            exact: Some(value),
            approx: None,
        }
    }

    /// `|approx - exact| / exact`, computed in log space so it is meaningful
    /// even when either value lies outside the `f64` range. `None` unless
    /// both fields are present and the exact value is positive.
    pub fn relative_error(&self) -> Option<f64> {
        let exact = self.exact.as_ref()?.ln()?;
        let approx = self.approx?;
        match approx.ln() {
            Some(ln) => Some((ln - exact).exp_m1().abs()),
            None => Some(1.0),
        }
    }
}

fn check_coordinates(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if k < 1 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in [1, n = {n}]")));
    }
    Ok(())
}

/// `P(first node has degree 1 at time n)`.
pub fn p_first_degree_one(n: usize) -> Result<ClosedFormValue> {
    check_coordinates(n, 1)?;
    let numerator = factorial_big(n - 1) << (n - 1);
    Ok(ClosedFormValue::exact(
        n,
        1,
        ExactRational::from_big(numerator, odd_product_big(n)),
    ))
}

/// `P(first node has degree n at time n)`, i.e. it won every trial.
pub fn p_first_degree_max(n: usize) -> Result<ClosedFormValue> {
    check_coordinates(n, n)?;
    Ok(ClosedFormValue::exact(
        n,
        n,
        ExactRational::from_big(factorial_big(n - 1), odd_product_big(n)),
    ))
}

/// `1 + (k-1) S(n, k)` for every `n` in `k..=n_max`, sharing prefix sums.
fn brackets(k: usize, n_max: usize) -> Vec<ExactRational> {
    let weight = (k - 1) as u64;
    let mut out = Vec::with_capacity(n_max + 1 - k);
    let mut partial = ExactRational::zero();
    out.push(ExactRational::one());
    for j in 0..n_max.saturating_sub(k) {
        if weight > 0 {
            partial = partial + sum_term(k, j);
        }
        out.push(ExactRational::one() + partial.mul_int(weight));
    }
    out
}

fn bracket(n: usize, k: usize) -> ExactRational {
    brackets(k, n).pop().expect("at least one bracket")
}

fn scaled_from_bracket(n: usize, k: usize, bracket: ExactRational) -> ExactRational {
    bracket * ExactRational::from_big(BigInt::from(1) << (2 * (n - k)), BigInt::from(1))
}

fn p_from_bracket(n: usize, k: usize, bracket: ExactRational) -> ExactRational {
    let numerator = (factorial_big(n) * factorial_big(n - 1)) << (2 * n - k);
    bracket * ExactRational::from_big(numerator, factorial_big(2 * n))
}

/// `a(n, k)` from the explicit solution; `k = n` is special-cased to 1.
pub fn a_closed(n: usize, k: usize) -> Result<ClosedFormValue> {
    check_coordinates(n, k)?;
    if k == n {
        return Ok(ClosedFormValue::exact(n, k, ExactRational::one()));
    }
    Ok(ClosedFormValue::exact(n, k, scaled_from_bracket(n, k, bracket(n, k))))
}

/// `a(n, k)` through the general branch only, with the empty-sum convention
/// at `k = n`.
pub fn a_closed_general_branch(n: usize, k: usize) -> Result<ExactRational> {
    check_coordinates(n, k)?;
    Ok(scaled_from_bracket(n, k, bracket(n, k)))
}

/// `[a(k, k), a(k+1, k), ..., a(n_max, k)]`, the column `k` of the explicit
/// solution. Equivalent to calling [`a_closed`] for each `n` but shares the
/// series prefix sums.
pub fn a_closed_column(k: usize, n_max: usize) -> Result<Vec<ExactRational>> {
    check_coordinates(n_max, k)?;
    Ok(brackets(k, n_max)
        .into_iter()
        .enumerate()
        .map(|(i, b)| scaled_from_bracket(k + i, k, b))
        .collect())
}

/// `P(first node has degree k at time n)` from the explicit formula.
pub fn p_closed(n: usize, k: usize) -> Result<ClosedFormValue> {
    check_coordinates(n, k)?;
    Ok(ClosedFormValue::exact(n, k, p_from_bracket(n, k, bracket(n, k))))
}

/// `[p(k, k), p(k+1, k), ..., p(n_max, k)]` from the explicit formula.
pub fn p_closed_column(k: usize, n_max: usize) -> Result<Vec<ExactRational>> {
    check_coordinates(n_max, k)?;
    Ok(brackets(k, n_max)
        .into_iter()
        .enumerate()
        .map(|(i, b)| p_from_bracket(k + i, k, b))
        .collect())
}

/// Log-space evaluation of the explicit formula.
pub fn p_closed_float(n: usize, k: usize) -> Result<ClosedFormValue> {
    check_coordinates(n, k)?;
    let mut terms = Vec::with_capacity(n - k + 1);
    terms.push(LogFloat::one());
    if k > 1 {
        let ln_weight = ((k - 1) as f64).ln();
        // s_0 = 1/4 for every k; s_{j+1}/s_j = (k+2j+1)(k+2j+2) / (4(j+2)(k+j+1)).
        let mut ln_term = -2.0 * LN_2;
        let kk = k as i128;
        for j in 0..(n - k) {
            terms.push(LogFloat::from_ln(ln_weight + ln_term));
            let jj = j as i128;
            let den = 4 * (jj + 2) * (kk + jj + 1);
            let diff = kk * kk - 5 * kk - 6 * jj - 6;
            ln_term += (diff as f64 / den as f64).ln_1p();
        }
    }
    let bracket = LogFloat::sum_pairwise(&terms);
    let ln_prefactor = log_factorial(n as u64).ln().unwrap_or(0.0) + log_factorial(n as u64 - 1).ln().unwrap_or(0.0)
        - log_factorial(2 * n as u64).ln().unwrap_or(0.0)
        + (2 * n - k) as f64 * LN_2;
    Ok(ClosedFormValue {
        n,
        k,
        m: 1,
        exact: None,
        approx: Some(LogFloat::from_ln(ln_prefactor) * bracket),
    })
}

/// Exact and log-space values side by side.
pub fn p_closed_both(n: usize, k: usize) -> Result<ClosedFormValue> {
    let mut value = p_closed(n, k)?;
    value.approx = p_closed_float(n, k)?.approx;
    Ok(value)
}
