//! Theory parameters, in exact rational arithmetic.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::Momentum;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub alpha: f64,
    /// `α` as an exact fraction, e.g. `"1/24"`.
    pub alpha_exact: String,
    #[serde(rename = "K")]
    pub k: u64,
    pub eta1: u64,
    pub eta2: u64,
}

/// The exact value of the shortest decimal representation of `x`
/// (so `0.1` is read as `1/10`).
fn decimal(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::Parameter(format!("{x} is not finite")));
    }
    let s = format!("{x}");
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.as_str()),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let num: BigInt = format!("{int}{frac}").parse().map_err(|_| Error::Parameter(format!("cannot read {s}")))?;
    let den = num::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(num, den);
    Ok(if neg { -r } else { r })
}

fn int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn to_u64(r: &BigInt, what: &str) -> Result<u64> {
    r.to_u64().ok_or_else(|| Error::Parameter(format!("{what} = {r} overflows")))
}

/// Smallest integer `n ≥ 1` with `pred(n)`, for a monotone predicate,
/// starting from a floating-point guess.
fn smallest(guess: f64, pred: impl Fn(&BigInt) -> bool) -> BigInt {
    let mut n = BigInt::from(guess.max(1.0).floor() as u64).max(BigInt::one());
    while n > BigInt::one() && pred(&(&n - 1)) {
        n -= 1;
    }
    while !pred(&n) {
        n += 1;
    }
    n
}

/// `(α, K, η₁, η₂)` of the convergence theorem.
///
/// - unaccelerated: `α = ι²ε/(24L²)`, `K = ⌈288L²/(ε²ι²)⌉`, `η₁ = ⌈2304L²/(ι²ε²)⌉`,
///   `η₂ = min(⌈20736L²T²/(ι²θ²ε²)⌉, T)`
/// - accelerated, with `n = ⌈(ULW)^{1/4}/√(ιθ)⌉`: `α = n⁻²/4`,
///   `K = 8n⌈ε^{−1/2}⌉`, `η₁ = ⌈45696L²/(ι²ε²)⌉`, `η₂ = min(⌈221184L²T²/(ι²θ²ε²)⌉, T)`
#[allow(clippy::too_many_arguments)]
pub fn theory_params(
    mode: Momentum,
    epsilon: f64,
    l: usize,
    iota: f64,
    theta: f64,
    horizon: usize,
    u: usize,
    w: usize,
) -> Result<TheoryParams> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Parameter(format!("ε = {epsilon} outside (0, 1]")));
    }
    if !(theta > 0.0 && theta <= horizon as f64) {
        return Err(Error::Parameter(format!("θ = {theta} outside (0, T = {horizon}]")));
    }
    if !(iota > 0.0 && iota <= 1.0) || l == 0 || horizon == 0 {
        return Err(Error::Parameter("need ι ∈ (0, 1], L ≥ 1 and T ≥ 1".into()));
    }
    let (eps, io, th) = (decimal(epsilon)?, decimal(iota)?, decimal(theta)?);
    let l2 = int(l as u64) * int(l as u64);
    let t = int(horizon as u64);
    let ie2 = &io * &io * &eps * &eps;
    let eta2_of = |c: u64| -> Result<u64> {
        let v = (int(c) * &l2 * &t * &t / (&ie2 * &th * &th)).ceil().to_integer();
        Ok(to_u64(&v, "eta2").unwrap_or(u64::MAX).min(horizon as u64))
    };
    let (alpha, k, eta1, eta2) = match mode {
        Momentum::Unaccelerated => {
            let alpha = &io * &io * &eps / (int(24) * &l2);
            let k = (int(288) * &l2 / &ie2).ceil().to_integer();
            let eta1 = (int(2304) * &l2 / &ie2).ceil().to_integer();
            (alpha, to_u64(&k, "K")?, to_u64(&eta1, "eta1")?, eta2_of(20736)?)
        }
        Momentum::Accelerated => {
            if u == 0 || w == 0 {
                return Err(Error::Parameter("accelerated parameters need U ≥ 1 and W ≥ 1".into()));
            }
            let ulw = int(u as u64) * int(l as u64) * int(w as u64);
            let it = &io * &th;
            let it2 = &it * &it;
            let guess = ((u * l * w) as f64).powf(0.25) / (iota * theta).sqrt();
            let n = smallest(guess, |n| {
                let n = BigRational::from_integer(n.clone());
                &n * &n * &n * &n * &it2 >= ulw
            });
            let r = smallest(epsilon.powf(-0.5), |r| {
                let r = BigRational::from_integer(r.clone());
                &r * &r * &eps >= BigRational::one()
            });
            let nr = BigRational::from_integer(n.clone());
            let alpha = BigRational::one() / (int(4) * &nr * &nr);
            let k = BigInt::from(8) * &n * &r;
            let eta1 = (int(45696) * &l2 / &ie2).ceil().to_integer();
            (alpha, to_u64(&k, "K")?, to_u64(&eta1, "eta1")?, eta2_of(221184)?)
        }
    };
    debug_assert!(alpha.is_positive() && !alpha.is_zero());
    Ok(TheoryParams {
        alpha: alpha.to_f64().unwrap_or(f64::NAN),
        alpha_exact: format!("{}/{}", alpha.numer(), alpha.denom()),
        k,
        eta1,
        eta2,
    })
}

/// `θ = ε ι T / (4V)`.
pub fn theta_default(epsilon: f64, horizon: usize, iota: f64, v: usize) -> Result<f64> {
    if !(epsilon > 0.0) || horizon == 0 || v == 0 || !(iota > 0.0) {
        return Err(Error::Parameter("θ default needs ε, ι > 0 and T, V ≥ 1".into()));
    }
    Ok(epsilon * iota * horizon as f64 / (4.0 * v as f64))
}
