//! Success-probability curves `q(t)`: the chance that a majority vote of `t`
//! workers matches the expert, defined on odd `t` only.
//!
//! Binomial curves keep both the upper tail `q(t)` and its complement, each
//! summed directly from the binomial terms. First-order differences are taken
//! on whichever side is far from 1, so small gains near certainty keep their
//! relative precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used by [`classify_curve`] callers that have no better value.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Largest `n` for which `C(n, r)` is computed in exact integer arithmetic.
const EXACT_BINOMIAL_LIMIT: usize = 63;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessCurve {
    k: usize,
    /// `values[i] = q(2i + 1)`.
    values: Vec<f64>,
    /// `tails[i] = 1 - q(2i + 1)`.
    tails: Vec<f64>,
}

impl SuccessCurve {
    /// Build a curve from explicit values at `t = 1, 3, 5, ...`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("a success curve needs at least q(1)".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("curve value {bad} is outside [0, 1]")));
        }
        let tails = values.iter().map(|v| 1.0 - v).collect();
        Ok(SuccessCurve { k: 2 * values.len() - 1, values, tails })
    }

    /// Largest odd worker count the curve is defined at.
    pub fn k(&self) -> usize {
        self.k
    }

    /// `q(t)`, or `None` when `t` is even, zero or above `k`.
    pub fn get(&self, t: usize) -> Option<f64> {
        if t % 2 == 1 && t <= self.k {
            Some(self.values[t / 2])
        } else {
            None
        }
    }

    /// `q(t)`; panics when `t` is not an odd count in `[1, k]`.
    pub fn value(&self, t: usize) -> f64 {
        self.get(t).unwrap_or_else(|| panic!("q({t}) is undefined for k = {}", self.k))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `q(t + 2) - q(t)` for odd `t <= k - 2`.
    pub fn gain(&self, t: usize) -> f64 {
        assert!(t % 2 == 1 && t + 2 <= self.k, "no increment from t = {t} with k = {}", self.k);
        self.gain_at_index(t / 2)
    }

    pub(crate) fn gain_at_index(&self, i: usize) -> f64 {
        if self.values[i] >= 0.5 {
            self.tails[i] - self.tails[i + 1]
        } else {
            self.values[i + 1] - self.values[i]
        }
    }

    /// All `(t, q(t + 2) - q(t))` in increasing `t`.
    pub fn first_order_differences(&self) -> Vec<(usize, f64)> {
        (0..self.values.len().saturating_sub(1)).map(|i| (2 * i + 1, self.gain_at_index(i))).collect()
    }
}

fn check_odd_k(k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::Domain(format!("k must be an odd positive integer, got {k}")));
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} is outside [0, 1]")));
    }
    Ok(())
}

/// `C(n, r)` rounded once to `f64`; exact integer arithmetic for `n <= 63`.
pub fn binomial_coefficient(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    if n <= EXACT_BINOMIAL_LIMIT {
        let mut c: u128 = 1;
        for i in 0..r {
            c = c * (n - i) as u128 / (i + 1) as u128;
        }
        c as f64
    } else {
        (0..r).fold(1.0, |c, i| c * (n - i) as f64 / (i + 1) as f64)
    }
}

/// `P(S = i)` for `S ~ Binomial(t, p)`.
pub fn binomial_pmf(t: usize, i: usize, p: f64) -> f64 {
    binomial_coefficient(t, i) * p.powi(i as i32) * (1.0 - p).powi((t - i) as i32)
}

fn sum_smallest_first(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

/// Majority-vote success and failure probabilities for `t` (odd) workers.
fn majority_tails(p: f64, t: usize) -> (f64, f64) {
    let majority = t.div_ceil(2);
    let upper = sum_smallest_first((majority..=t).map(|i| binomial_pmf(t, i, p)).collect());
    let lower = sum_smallest_first((0..majority).map(|i| binomial_pmf(t, i, p)).collect());
    (upper, lower)
}

/// Majority-vote curve for i.i.d. workers with success probability `p`.
pub fn binomial_success_curve(p: f64, k: usize) -> Result<SuccessCurve> {
    check_probability(p)?;
    check_odd_k(k)?;
    let (values, tails) = (1..=k).step_by(2).map(|t| majority_tails(p, t)).unzip();
    Ok(SuccessCurve { k, values, tails })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveClass {
    NonIncreasing,
    NonDecreasingConcave,
    Other,
}

impl CurveClass {
    /// Whether the greedy allocator is guaranteed optimal for this curve.
    pub fn is_greedy_safe(self) -> bool {
        !matches!(self, CurveClass::Other)
    }
}

/// Classify a curve against the greedy-optimality hypotheses. A constant curve
/// satisfies both and is reported as `NonDecreasingConcave`.
pub fn classify_curve(curve: &SuccessCurve, tol: f64) -> CurveClass {
    let diffs: Vec<f64> = curve.first_order_differences().into_iter().map(|(_, d)| d).collect();
    let non_decreasing = diffs.iter().all(|&d| d >= -tol);
    let concave = diffs.windows(2).all(|w| w[1] <= w[0] + tol);
    if non_decreasing && concave {
        CurveClass::NonDecreasingConcave
    } else if diffs.iter().all(|&d| d <= tol) {
        CurveClass::NonIncreasing
    } else {
        CurveClass::Other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub passed: bool,
    pub checked: usize,
    pub max_deviation: f64,
}

impl IdentityCheck {
    fn new() -> Self {
        IdentityCheck { passed: true, checked: 0, max_deviation: 0.0 }
    }

    fn record(&mut self, deviation: f64, tol: f64) {
        self.checked += 1;
        self.max_deviation = self.max_deviation.max(deviation);
        if deviation.is_nan() || deviation > tol {
            self.passed = false;
        }
    }
}

/// Outcome of checking the majority-vote closed forms against direct summation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub p: f64,
    pub k: usize,
    /// `q(t+2) - q(t) = P(S_t = m) (1-p)(2p-1)` with `t = 2m - 1`.
    pub difference: IdentityCheck,
    /// `(q(t+4) - q(t+2)) / (q(t+2) - q(t)) = 2p(1-p)(2m+1)/(m+1)`; `None` when
    /// the ratio is degenerate (`p` in {0, 1/2, 1}) or `k < 5`.
    pub ratio: Option<IdentityCheck>,
    /// Every observed ratio was strictly below one.
    pub ratio_below_one: Option<bool>,
    /// Monotonicity matches the sign of `p - 1/2` strictly.
    pub monotonicity: bool,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.difference.passed
            && self.monotonicity
            && self.ratio.as_ref().is_none_or(|r| r.passed)
            && self.ratio_below_one.unwrap_or(true)
    }
}

/// Check the majority-vote difference and concavity-ratio identities on every
/// odd `t` up to `k`.
pub fn verify_binomial_identities(p: f64, k: usize, tol: f64) -> Result<IdentityReport> {
    check_probability(p)?;
    check_odd_k(k)?;
    if k < 3 {
        return Err(Error::Domain("identity checks need k >= 3".into()));
    }
    let curve = binomial_success_curve(p, k)?;
    let diffs = curve.first_order_differences();

    let mut difference = IdentityCheck::new();
    for &(t, observed) in &diffs {
        let m = t.div_ceil(2);
        let closed = binomial_pmf(t, m, p) * (1.0 - p) * (2.0 * p - 1.0);
        difference.record((observed - closed).abs(), tol);
    }

    // At p in {0, 1} the curve is flat at 0 or 1.
    let monotonicity = diffs.iter().all(|&(_, d)| {
        if p == 0.0 || p == 1.0 {
            d == 0.0
        } else if p > 0.5 {
            d > 0.0
        } else if p < 0.5 {
            d < 0.0
        } else {
            d == 0.0
        }
    }) && (p != 0.5 || curve.values().iter().all(|&v| v == 0.5));

    let degenerate = p == 0.0 || p == 0.5 || p == 1.0 || k < 5;
    let (ratio, ratio_below_one) = if degenerate {
        (None, None)
    } else {
        let mut check = IdentityCheck::new();
        let mut below = true;
        for pair in diffs.windows(2) {
            let (t, first) = pair[0];
            let (_, second) = pair[1];
            let m = t.div_ceil(2) as f64;
            let observed = second / first;
            let closed = 2.0 * p * (1.0 - p) * (2.0 * m + 1.0) / (m + 1.0);
            check.record((observed - closed).abs(), tol);
            below &= observed < 1.0;
        }
        (Some(check), Some(below))
    };

    Ok(IdentityReport { p, k, difference, ratio, ratio_below_one, monotonicity })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn coefficients() {
        assert_eq!(binomial_coefficient(5, 2), 10.0);
        assert_eq!(binomial_coefficient(7, 0), 1.0);
        assert_eq!(binomial_coefficient(3, 4), 0.0);
        assert_eq!(binomial_coefficient(21, 10), 352_716.0);
        assert_eq!(binomial_coefficient(62, 31), 465_428_353_255_261_088u64 as f64);
    }

    #[test]
    fn fair_coin_is_flat() {
        let curve = binomial_success_curve(0.5, 7).unwrap();
        assert_eq!(curve.values(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn hand_summed_values() {
        // 0.9; 3(0.81)(0.1) + 0.729; 10(0.729)(0.01) + 5(0.6561)(0.1) + 0.59049
        let curve = binomial_success_curve(0.9, 5).unwrap();
        assert_eq!(curve.value(1), 0.9);
        assert!(close(curve.value(3), 0.972, 1e-12));
        assert!(close(curve.value(5), 0.99144, 1e-12));
        let diffs = curve.first_order_differences();
        assert_eq!(diffs.len(), 2);
        assert_eq!(diffs[0].0, 1);
        assert!(close(diffs[0].1, 0.072, 1e-12));
        assert_eq!(diffs[1].0, 3);
        assert!(close(diffs[1].1, 0.01944, 1e-12));
    }

    #[test]
    fn certainty() {
        let curve = binomial_success_curve(1.0, 9).unwrap();
        assert!(curve.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn single_worker_curve_has_no_differences() {
        assert!(binomial_success_curve(0.7, 1).unwrap().first_order_differences().is_empty());
        let flat = binomial_success_curve(0.5, 5).unwrap().first_order_differences();
        assert_eq!(flat, vec![(1, 0.0), (3, 0.0)]);
    }

    #[test]
    fn domain_errors() {
        assert!(binomial_success_curve(1.1, 3).is_err());
        assert!(binomial_success_curve(-0.1, 3).is_err());
        assert!(binomial_success_curve(0.7, 4).is_err());
        assert!(SuccessCurve::from_values(vec![0.5, 1.2]).is_err());
    }

    #[test]
    fn undefined_at_even_counts() {
        let curve = binomial_success_curve(0.7, 5).unwrap();
        assert_eq!(curve.get(2), None);
        assert_eq!(curve.get(7), None);
        assert_eq!(curve.get(0), None);
    }

    #[test]
    fn classification() {
        let tol = DEFAULT_TOLERANCE;
        assert_eq!(classify_curve(&binomial_success_curve(0.7, 7).unwrap(), tol), CurveClass::NonDecreasingConcave);
        assert_eq!(classify_curve(&binomial_success_curve(0.3, 7).unwrap(), tol), CurveClass::NonIncreasing);
        assert_eq!(classify_curve(&binomial_success_curve(0.5, 7).unwrap(), tol), CurveClass::NonDecreasingConcave);
        let bent = SuccessCurve::from_values(vec![0.5, 0.6, 0.9]).unwrap();
        assert_eq!(classify_curve(&bent, tol), CurveClass::Other);
    }

    #[test]
    fn identities_at_p_06() {
        let report = verify_binomial_identities(0.6, 7, 1e-12).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.difference.checked, 3);
        assert_eq!(report.ratio.as_ref().unwrap().checked, 2);
    }

    #[test]
    fn identities_at_fair_coin_skip_ratio() {
        let report = verify_binomial_identities(0.5, 7, 1e-12).unwrap();
        assert!(report.passed());
        assert!(report.ratio.is_none());
        assert_eq!(report.difference.max_deviation, 0.0);
    }

    #[test]
    fn first_difference_closed_form_by_hand() {
        // P(S_1 = 1) (1 - p)(2p - 1) = 0.9 * 0.1 * 0.8
        let curve = binomial_success_curve(0.9, 5).unwrap();
        assert!(close(curve.gain(1), 0.9 * 0.08, 1e-15));
    }

    /// Independent route: q(t+2) = q(t) + P(S_t = m)(1-p)(2p-1) starting from q(1) = p.
    fn recurrence_curve(p: f64, k: usize) -> Vec<f64> {
        let mut out = vec![p];
        let mut t = 1;
        while t + 2 <= k {
            let m = t.div_ceil(2);
            let mut coeff = 1.0;
            for i in 0..m {
                coeff = coeff * (t - i) as f64 / (i + 1) as f64;
            }
            let pmf = coeff * p.powi(m as i32) * (1.0 - p).powi((t - m) as i32);
            out.push(out.last().unwrap() + pmf * (1.0 - p) * (2.0 * p - 1.0));
            t += 2;
        }
        out
    }

    #[test]
    fn summation_agrees_with_recurrence() {
        for step in 0..=100 {
            let p = step as f64 / 100.0;
            for k in (1..=21).step_by(2) {
                let direct = binomial_success_curve(p, k).unwrap();
                for (a, b) in direct.values().iter().zip(recurrence_curve(p, k)) {
                    assert!(close(*a, b, 1e-12), "p={p} k={k}: {a} vs {b}");
                }
            }
        }
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn q1_is_p(p in 0.0f64..=1.0, half in 0usize..10) {
            let curve = binomial_success_curve(p, 2 * half + 1).unwrap();
            prop_assert_eq!(curve.value(1), p);
            prop_assert!(curve.values().iter().all(|v| (0.0..=1.0 + 1e-15).contains(v)));
        }

        #[test]
        fn strict_concavity_off_the_fair_coin(p in 0.001f64..0.999, half in 2usize..10) {
            prop_assume!((p - 0.5).abs() > 1e-3);
            let diffs = binomial_success_curve(p, 2 * half + 1).unwrap().first_order_differences();
            for w in diffs.windows(2) {
                prop_assert!(w[1].1 / w[0].1 < 1.0);
            }
        }
    }
}
