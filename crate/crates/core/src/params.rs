//! Model parameters and exact integerization of `n^{k/3}`-type scales.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Parameters of `G(n, p)`.
///
/// When `lambda` is set, `p` is the double nearest to `1/n + lambda n^{-4/3}`
/// (correctly rounded, decided with exact rational comparisons).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    pub n: u64,
    pub p: f64,
    pub lambda: Option<f64>,
}

impl GraphParams {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(domain("vertex count must be positive"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(domain(format!("edge probability {p} is outside [0, 1]")));
        }
        Ok(Self { n, p, lambda: None })
    }

    /// `p = 1/n`.
    pub fn critical(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(domain("vertex count must be positive"));
        }
        Ok(Self {
            n,
            p: 1.0 / n as f64,
            lambda: Some(0.0),
        })
    }

    /// `p = 1/n + lambda n^{-4/3}`.
    pub fn window(n: u64, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(domain("vertex count must be positive"));
        }
        Ok(Self {
            n,
            p: window_probability(n, lambda)?,
            lambda: Some(lambda),
        })
    }

    /// Drift `lambda` if these parameters sit in the critical window.
    pub fn drift(&self) -> Option<f64> {
        self.lambda
    }

    pub fn is_critical(&self) -> bool {
        self.lambda == Some(0.0) || (self.lambda.is_none() && self.p == 1.0 / self.n as f64)
    }
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

fn int(x: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// The double nearest to `1/n + lambda n^{-4/3}`.
pub fn window_probability(n: u64, lambda: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("vertex count must be positive"));
    }
    if !lambda.is_finite() {
        return Err(domain("window drift must be finite"));
    }
    let nf = n as f64;
    if lambda == 0.0 {
        return Ok(1.0 / nf);
    }
    let n_big = int(n);
    let lambda_cubed = rational(lambda).pow(3);
    // sign of (x n - 1)^3 n - lambda^3, increasing in x
    let side = |x: &BigRational| -> std::cmp::Ordering {
        let d = x * &n_big - BigRational::one();
        (d.pow(3) * &n_big).cmp(&lambda_cubed)
    };

    let mut x = lambda.mul_add(nf.cbrt().recip(), 1.0) / nf;
    if !x.is_finite() {
        return Err(domain("window probability is not finite"));
    }
    while side(&rational(x)).is_gt() {
        x = x.next_down();
    }
    while side(&rational(x.next_up())).is_le() {
        x = x.next_up();
    }
    let hi = x.next_up();
    let mid = (rational(x) + rational(hi)) / int(2);
    let p = match side(&mid) {
        std::cmp::Ordering::Less => hi,
        std::cmp::Ordering::Greater => x,
        std::cmp::Ordering::Equal => {
            if x.to_bits() & 1 == 0 {
                x
            } else {
                hi
            }
        }
    };
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!(
            "1/n + lambda n^(-4/3) = {p} is not a probability (n = {n}, lambda = {lambda})"
        )));
    }
    Ok(p)
}

/// Largest integer `m >= 0` with `m^k <= q`.
pub(crate) fn floor_root(q: &BigRational, k: u32) -> Result<u64> {
    if q.is_negative() {
        return Err(domain("root of a negative quantity"));
    }
    if q.is_zero() {
        return Ok(0);
    }
    let approx = q.to_f64().unwrap_or(f64::INFINITY).powf(1.0 / k as f64);
    if !approx.is_finite() || approx > 1.8e19 {
        return Err(domain("scale exceeds 64-bit range"));
    }
    let fits = |m: u64| int(m).pow(k as i32) <= *q;
    let mut m = approx.floor() as u64;
    while m > 0 && !fits(m) {
        m -= 1;
    }
    while fits(m + 1) {
        m += 1;
    }
    Ok(m)
}

/// Smallest integer `m >= 0` with `m^k >= q`.
pub(crate) fn ceil_root(q: &BigRational, k: u32) -> Result<u64> {
    let m = floor_root(q, k)?;
    if int(m).pow(k as i32) == *q {
        Ok(m)
    } else {
        Ok(m + 1)
    }
}

fn check_scale(coef: f64) -> Result<()> {
    if coef.is_finite() && coef >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "scale coefficient {coef} must be finite and nonnegative"
        )))
    }
}

/// `floor(coef * n^{2/3})`, exact.
pub fn floor_two_thirds(coef: f64, n: u64) -> Result<u64> {
    check_scale(coef)?;
    floor_root(&(rational(coef).pow(3) * int(n).pow(2)), 3)
}

/// `ceil(coef * n^{2/3})`, exact.
pub fn ceil_two_thirds(coef: f64, n: u64) -> Result<u64> {
    check_scale(coef)?;
    ceil_root(&(rational(coef).pow(3) * int(n).pow(2)), 3)
}

/// `floor(n^{1/3})`, exact.
pub fn floor_cube_root(n: u64) -> u64 {
    floor_root(&int(n), 3).expect("u64 cube root fits")
}

/// `ceil(n^{1/3})`, exact.
pub fn ceil_cube_root(n: u64) -> u64 {
    ceil_root(&int(n), 3).expect("u64 cube root fits")
}

/// `floor(delta^{1/5} n^{1/3} / 24^{1/5})`, exact: the largest `h` with
/// `24^3 h^15 <= delta^3 n^5`.
pub(crate) fn ascent_height(delta: f64, n: u64) -> Result<u64> {
    check_scale(delta)?;
    let q = rational(delta).pow(3) * int(n).pow(5) / int(24).pow(3);
    floor_root(&q, 15)
}
