//! Closed-form tail bounds for component sizes at and near criticality.
//!
//! Every function returns a [`BoundReport`] even when the formula's
//! preconditions fail: the numeric value is kept and `valid` is cleared.
//! Exponents are assembled first and exponentiated last.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub text: String,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    /// `min(raw_value, 1)`
    pub value: f64,
    pub raw_value: f64,
    pub valid: bool,
    pub conditions: Vec<Condition>,
    /// Free-form qualifiers, e.g. asymptotic statements with no explicit threshold.
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Attached to the window bounds, which hold only "for n large enough".
pub const UNQUANTIFIED_N: &str = "asymptotic-validity: unquantified";

impl BoundReport {
    fn new(name: &str, raw_value: f64, conditions: Vec<(String, bool)>) -> Self {
        let conditions: Vec<Condition> = conditions
            .into_iter()
            .map(|(text, satisfied)| Condition { text, satisfied })
            .collect();
        Self {
            name: name.to_string(),
            value: raw_value.clamp(0.0, 1.0),
            raw_value,
            valid: conditions.iter().all(|c| c.satisfied),
            conditions,
            notes: Vec::new(),
        }
    }

    fn note(mut self, note: &str) -> Self {
        self.notes.push(note.to_string());
        self
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} = {x} must be positive and finite")))
    }
}

/// `P(|C1| > A n^{2/3}) <= 6 A^{-3/2}`, for `A > 1`.
pub fn easy_bound_c1(a: f64) -> Result<BoundReport> {
    positive("A", a)?;
    Ok(BoundReport::new(
        "easy_c1",
        6.0 / (a * a.sqrt()),
        vec![("A > 1".into(), a > 1.0)],
    ))
}

/// `P(|C(v)| > T) <= 3 / sqrt(T)`, for `9 <= T <= (n-3)^2`.
pub fn easy_bound_cv(t: u64, n: u64) -> Result<BoundReport> {
    if t == 0 || n == 0 {
        return Err(domain("T and n must be positive"));
    }
    let upper = (n.saturating_sub(3) as u128).pow(2);
    Ok(BoundReport::new(
        "easy_cv",
        3.0 / (t as f64).sqrt(),
        vec![
            ("T >= 9".into(), t >= 9),
            ("T <= (n-3)^2".into(), (t as u128) <= upper),
        ],
    ))
}

fn thm1_exponent(a: f64) -> f64 {
    -a * a * (a - 4.0) / 32.0
}

/// Upper tails above `A n^{2/3}` at `p = 1/n`: per vertex
/// `4 n^{-1/3} exp(-A^2 (A-4) / 32)` and for the largest component
/// `(4/A) exp(-A^2 (A-4) / 32)`; both for `n > 1000, A > 8`.
pub fn thm1_bounds(a: f64, n: u64) -> Result<(BoundReport, BoundReport)> {
    positive("A", a)?;
    if n == 0 {
        return Err(domain("n must be positive"));
    }
    let nf = n as f64;
    let conditions = vec![
        ("n > 1000".to_string(), n > 1000),
        ("A > 8".to_string(), a > 8.0),
    ];
    let e = thm1_exponent(a);
    let per_vertex = BoundReport::new(
        "thm1_cv",
        (4.0f64.ln() - nf.ln() / 3.0 + e).exp(),
        conditions.clone(),
    );
    let largest = BoundReport::new("thm1_c1", ((4.0 / a).ln() + e).exp(), conditions);
    Ok((per_vertex, largest))
}

/// `P(|C1| < floor(delta n^{2/3})) <= 15 delta^{3/5}`, for
/// `0 < delta < 1/10` and `n > 200 / delta^{3/5}`.
pub fn thm2_bound(delta: f64, n: u64) -> Result<BoundReport> {
    positive("delta", delta)?;
    let d35 = delta.powf(0.6);
    Ok(BoundReport::new(
        "thm2_c1",
        15.0 * d35,
        vec![
            ("delta < 1/10".into(), delta < 0.1),
            ("n > 200/delta^(3/5)".into(), n as f64 > 200.0 / d35),
        ],
    ))
}

fn thm5_exponent(a: f64, lambda: f64) -> f64 {
    let b = a - 1.0;
    let inner = b * b / 2.0 - b * lambda - 2.0;
    -inner * inner / (4.0 * a)
}

/// Upper tails at or above `A n^{2/3}` for `p = 1/n + lambda n^{-4/3}`,
/// `lambda != 0`. Prefactors:
///
/// * `lambda > 0`: `4 lambda / (1 - e^{-4 lambda}) + 16` (per vertex, times
///   `n^{-1/3}`), and `4 lambda / (A (1 - e^{-4 lambda})) + 16 / A` (largest).
/// * `lambda < 0`: `-2 lambda / (e^{-lambda} - 1) + min(5, -1/lambda)` (per
///   vertex, times `n^{-1/3}`), and
///   `-2 lambda / (A (e^{-lambda} - 1)) + min(5, -1/lambda)` (largest).
///
/// Both share `exp(-((A-1)^2/2 - (A-1) lambda - 2)^2 / (4A))`.
pub fn thm5_bounds(a: f64, lambda: f64, n: u64) -> Result<(BoundReport, BoundReport)> {
    positive("A", a)?;
    if n == 0 {
        return Err(domain("n must be positive"));
    }
    if !lambda.is_finite() {
        return Err(domain("lambda must be finite"));
    }
    if lambda == 0.0 {
        return Err(domain("lambda = 0 is the critical case; use thm1_bounds"));
    }
    let e = thm5_exponent(a, lambda);
    let (cv_pref, c1_pref, cond) = if lambda > 0.0 {
        let r = 4.0 * lambda / (-(-4.0 * lambda).exp_m1());
        (
            r + 16.0,
            (r + 16.0) / a,
            ("A > 2 lambda + 3".to_string(), a > 2.0 * lambda + 3.0),
        )
    } else {
        let r = -2.0 * lambda / (-lambda).exp_m1();
        let m = 5.0f64.min(-1.0 / lambda);
        (r + m, r / a + m, ("A > 3".to_string(), a > 3.0))
    };
    let scale = -(n as f64).ln() / 3.0;
    let per_vertex = BoundReport::new(
        "thm5_cv",
        (cv_pref.ln() + scale + e).exp(),
        vec![cond.clone()],
    )
    .note(UNQUANTIFIED_N);
    let largest =
        BoundReport::new("thm5_c1", (c1_pref.ln() + e).exp(), vec![cond]).note(UNQUANTIFIED_N);
    Ok((per_vertex, largest))
}

/// The tighter of the easy bound and the exponential bound for
/// `P(|C1| > A n^{2/3})` at `p = 1/n`, among those whose preconditions hold.
/// Returns the easy bound's report (flagged invalid) when neither applies.
pub fn c1_upper_bound(a: f64, n: u64) -> Result<BoundReport> {
    let easy = easy_bound_c1(a)?;
    let (_, thm1) = thm1_bounds(a, n)?;
    let chosen = match (easy.valid, thm1.valid) {
        (true, true) if thm1.value < easy.value => thm1,
        (false, true) => thm1,
        _ => easy,
    };
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn easy_values() {
        let b = easy_bound_c1(4.0).unwrap();
        assert!((b.raw_value - 0.75).abs() < 1e-15);
        assert!(b.valid);
        let b = easy_bound_c1(9.0).unwrap();
        assert!((b.raw_value - 6.0 / 27.0).abs() < 1e-15);
        let b = easy_bound_c1(1.0).unwrap();
        assert!(!b.valid);
        assert_eq!(b.value, 1.0);
        assert_eq!(b.raw_value, 6.0);
        assert!(easy_bound_c1(0.0).is_err());
        assert!(easy_bound_c1(-2.0).is_err());
    }

    #[test]
    fn thm1_values() {
        let (cv, c1) = thm1_bounds(10.0, 1_000_000).unwrap();
        let expected_c1 = 0.4 * (-18.75f64).exp();
        assert!((c1.raw_value / expected_c1 - 1.0).abs() < 1e-13);
        assert!((c1.raw_value - 2.877_653_212_130_153e-9).abs() < 1e-20);
        assert!((cv.raw_value / (4.0 * 0.01 * (-18.75f64).exp()) - 1.0).abs() < 1e-13);
        assert!(c1.valid && cv.valid);

        let (_, c1) = thm1_bounds(4.0, 1_000_000).unwrap();
        assert!((c1.raw_value - 1.0).abs() < 1e-15);
        assert!(!c1.valid);

        let (cv, _) = thm1_bounds(9.0, 2000).unwrap();
        let expected = 4.0 * 2000f64.powf(-1.0 / 3.0) * (-81.0 * 5.0 / 32.0f64).exp();
        assert!((cv.raw_value / expected - 1.0).abs() < 1e-13);
        assert!(cv.valid);
        assert!(!thm1_bounds(9.0, 1000).unwrap().0.valid);
        assert!(thm1_bounds(0.0, 10).is_err());
        assert!(thm1_bounds(9.0, 0).is_err());
    }

    #[test]
    fn thm2_values() {
        let b = thm2_bound(0.001, 1_000_000).unwrap();
        // 15 * 10^{-1.8}
        assert!((b.raw_value - 15.0 * 10f64.powf(-1.8)).abs() < 1e-14);
        assert!((b.raw_value - 0.237734).abs() < 1e-6);
        assert!(b.valid);
        // n threshold 200 / 10^{-1.8} = 12619.15
        assert!(!thm2_bound(0.001, 10_000).unwrap().valid);
        assert!(!thm2_bound(0.001, 12_619).unwrap().valid);
        assert!(thm2_bound(0.001, 12_620).unwrap().valid);
        let b = thm2_bound(0.2, 1_000_000).unwrap();
        assert!(!b.valid);
        assert!(thm2_bound(0.0, 100).is_err());
    }

    #[test]
    fn thm5_values() {
        let (cv, c1) = thm5_bounds(10.0, 1.0, 1_000_000).unwrap();
        let e = -(29.5f64 * 29.5) / 40.0;
        assert!((e + 21.75625).abs() < 1e-12);
        let pref = 4.0 / (1.0 - (-4.0f64).exp()) + 16.0;
        assert!((pref - 20.0746).abs() < 1e-4);
        assert!((cv.raw_value / (pref * 0.01 * e.exp()) - 1.0).abs() < 1e-12);
        assert!((c1.raw_value / (pref / 10.0 * e.exp()) - 1.0).abs() < 1e-12);
        assert!(cv.valid && c1.valid);
        assert!(c1.notes.iter().any(|s| s == UNQUANTIFIED_N));

        let (cv, c1) = thm5_bounds(10.0, -1.0, 1_000_000).unwrap();
        let pref = 2.0 / (1f64.exp() - 1.0) + 1.0;
        assert!((pref - 2.16395).abs() < 1e-5);
        // ((81/2 + 9 - 2)^2) / 40
        let e = -(47.5f64 * 47.5) / 40.0;
        assert!((cv.raw_value / (pref * 0.01 * e.exp()) - 1.0).abs() < 1e-12);
        let c1_pref = 2.0 / (10.0 * (1f64.exp() - 1.0)) + 1.0;
        assert!((c1.raw_value / (c1_pref * e.exp()) - 1.0).abs() < 1e-12);

        assert!(!thm5_bounds(4.0, 1.0, 1_000_000).unwrap().0.valid);
        assert!(thm5_bounds(5.5, 1.0, 1_000_000).unwrap().0.valid);
        assert!(!thm5_bounds(3.0, -1.0, 1_000_000).unwrap().1.valid);
        assert!(thm5_bounds(10.0, 0.0, 1_000_000).is_err());
    }

    #[test]
    fn thm5_negative_lambda_min_term() {
        // -1/lambda < 5 once lambda < -1/5
        let (a, b) = (
            thm5_bounds(10.0, -0.1, 1000).unwrap(),
            thm5_bounds(10.0, -2.0, 1000).unwrap(),
        );
        let e1 = thm5_exponent(10.0, -0.1);
        let p1 = 0.2 / (0.1f64.exp() - 1.0) + 5.0;
        assert!((a.0.raw_value / (p1 * 0.1 * e1.exp()) - 1.0).abs() < 1e-12);
        let e2 = thm5_exponent(10.0, -2.0);
        let p2 = 4.0 / (2f64.exp() - 1.0) + 0.5;
        assert!((b.0.raw_value / (p2 * 0.1 * e2.exp()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_arguments_do_not_overflow() {
        let (cv, c1) = thm1_bounds(1e6, 1_000_000).unwrap();
        assert_eq!(cv.value, 0.0);
        assert_eq!(c1.value, 0.0);
        assert!(easy_bound_c1(1e300).unwrap().value >= 0.0);
    }

    #[test]
    fn monotonicity() {
        let grid: Vec<f64> = (0..200).map(|i| 1.01 + i as f64 * 0.25).collect();
        for w in grid.windows(2) {
            assert!(
                easy_bound_c1(w[1]).unwrap().raw_value < easy_bound_c1(w[0]).unwrap().raw_value
            );
        }
        let grid: Vec<f64> = (0..100).map(|i| 8.01 + i as f64 * 0.05).collect();
        for w in grid.windows(2) {
            let (a0, b0) = thm1_bounds(w[0], 5000).unwrap();
            let (a1, b1) = thm1_bounds(w[1], 5000).unwrap();
            assert!(a1.raw_value < a0.raw_value && b1.raw_value < b0.raw_value);
        }
        let grid: Vec<f64> = (1..100).map(|i| i as f64 * 0.001).collect();
        for w in grid.windows(2) {
            assert!(
                thm2_bound(w[1], 10_000_000).unwrap().raw_value
                    > thm2_bound(w[0], 10_000_000).unwrap().raw_value
            );
        }
    }

    #[test]
    fn seam_takes_the_explicit_minimum() {
        let b = c1_upper_bound(2.0, 10_000).unwrap();
        assert_eq!(b.name, "easy_c1");
        let b = c1_upper_bound(9.0, 10_000).unwrap();
        assert_eq!(b.name, "thm1_c1");
        assert!(b.value < easy_bound_c1(9.0).unwrap().value);
        let b = c1_upper_bound(9.0, 500).unwrap();
        assert_eq!(b.name, "easy_c1");
        assert!(!c1_upper_bound(0.5, 10_000).unwrap().valid);
    }

    #[test]
    fn values_are_clamped() {
        for a in [1.0, 1.5, 2.0, 4.0, 9.0, 20.0] {
            for r in [easy_bound_c1(a).unwrap(), thm1_bounds(a, 2000).unwrap().1] {
                assert!((0.0..=1.0).contains(&r.value));
                assert_eq!(r.value, r.raw_value.min(1.0));
            }
        }
    }
}
