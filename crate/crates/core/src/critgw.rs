//! Critical Galton-Watson process with Geom(1/2) offspring and one immigrant
//! per generation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::analytics::{hill_estimate, tail_constant_with, TailConstant, TailEstimate};
use crate::env::XiLaw;
use crate::error::{Error, Result};
use crate::numeric::{gamma, integrate_to_infinity};
use crate::sampling::GeomLaw;

const CRITICAL: GeomLaw = GeomLaw::FAIR;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CritMoments {
    pub n: u64,
    pub mean_z: u64,
    pub var_z: u64,
    pub mean_y: u64,
    pub var_y: u64,
    pub mean_w: u64,
}

pub fn crit_moments(n: u64) -> Result<CritMoments> {
    if n == 0 {
        return Err(Error::InvalidParam("generation must be >= 1".into()));
    }
    Ok(CritMoments {
        n,
        mean_z: 1,
        var_z: 2 * n,
        mean_y: n,
        var_y: n * (n + 1) * (2 * n + 1) / 3,
        mean_w: n * (n + 1) / 2,
    })
}

/// `W_n = Z_1 + ... + Z_n` started from `Z_0 = 0`.
pub fn simulate_w_crit<R: RngCore + ?Sized>(n: u64, rng: &mut R) -> u64 {
    let mut z = 0u64;
    let mut w = 0u64;
    for _ in 0..n {
        z = CRITICAL.sum_of(rng, z + 1);
        w += z;
    }
    w
}

/// Generation-`n` size and total progeny over generations `1..=n` of a single
/// particle, `(Z(1,n), Y(1,n))`.
pub fn simulate_lineage<R: RngCore + ?Sized>(n: u64, rng: &mut R) -> (u64, u64) {
    let mut z = 1u64;
    let mut y = 0u64;
    for _ in 0..n {
        if z == 0 {
            break;
        }
        z = CRITICAL.sum_of(rng, z);
        y += z;
    }
    (z, y)
}

/// `a_j(x) = E exp(x Y(1,j))` by `a_j = 1 / (2 - e^x a_{j-1})`, `a_0 = 1`.
/// Returns `+inf` once the denominator reaches zero.
pub fn lt_recursion(x: f64, j: u64) -> f64 {
    let ex = x.exp();
    let mut a = 1.0;
    for _ in 0..j {
        let d = 2.0 - ex * a;
        // A denominator within rounding of zero is zero.
        if d <= 8.0 * f64::EPSILON {
            return f64::INFINITY;
        }
        a = 1.0 / d;
    }
    a
}

/// Smallest `K` with `K - K^2 gamma > 1`, nudged just past the root.
pub fn b_bound_constant(gamma: f64) -> f64 {
    let k1 = (1.0 - (1.0 - 4.0 * gamma).sqrt()) / (2.0 * gamma);
    k1 * (1.0 + 1e-9)
}

/// Whether `e^x a_j(x) <= 1 + K x (j + 1)`.
pub fn b_bound_check(x: f64, j: u64, gamma: f64, x0: Option<f64>) -> Result<bool> {
    if !(gamma > 0.0 && gamma < 0.25) {
        return Err(Error::PreconditionViolated(format!("gamma={gamma} outside (0, 1/4)")));
    }
    if !(x >= 0.0) {
        return Err(Error::PreconditionViolated(format!("x={x} must be >= 0")));
    }
    let jj = j as f64;
    if jj * (jj + 1.0) * x > gamma {
        return Err(Error::PreconditionViolated(format!("j(j+1)x = {} exceeds gamma={gamma}", jj * (jj + 1.0) * x)));
    }
    if let Some(x0) = x0 {
        if !(x < x0) {
            return Err(Error::PreconditionViolated(format!("x={x} not below x0={x0}")));
        }
    }
    let k = b_bound_constant(gamma);
    Ok(x.exp() * lt_recursion(x, j) <= 1.0 + k * x * (jj + 1.0))
}

/// Euler numbers `E_0, E_2, ..., E_{2n}`.
fn euler_numbers(n: usize) -> Vec<BigInt> {
    let mut e: Vec<BigInt> = vec![BigInt::one()];
    for m in 1..=n {
        // sum_{k=0}^{m} C(2m, 2k) E_{2k} = 0
        let mut binom = BigInt::one();
        let mut acc = BigInt::zero();
        for (k, ek) in e.iter().enumerate() {
            acc += &binom * ek;
            let (a, b) = (2 * m - 2 * k, 2 * k + 1);
            binom = binom * BigInt::from(a) * BigInt::from(a - 1) / (BigInt::from(b) * BigInt::from(b + 1));
        }
        e.push(-acc);
    }
    e
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `E theta^k = (-1)^k k! E_{2k} / (2k)!`, where `E exp(-s theta) = 1/cosh(sqrt s)`.
pub fn theta_moment(k: u32) -> Result<BigRational> {
    if k == 0 {
        return Err(Error::InvalidParam("moment order must be >= 1".into()));
    }
    let k = k as usize;
    let e2k = euler_numbers(k).pop().expect("non-empty");
    let sign = if k.is_multiple_of(2) { BigInt::one() } else { -BigInt::one() };
    Ok(BigRational::new(sign * factorial(k) * e2k, factorial(2 * k)))
}

/// Power series coefficients of `1/cosh(sqrt s)`: `E_{2k} / (2k)!`.
fn sech_sqrt_coefficients(terms: usize) -> Vec<f64> {
    euler_numbers(terms - 1)
        .into_iter()
        .enumerate()
        .map(|(k, e)| BigRational::new(e, factorial(2 * k)).to_f64().expect("finite"))
        .collect()
}

/// `E theta^alpha` for real `alpha > 0`.
pub fn theta_moment_real(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParam(format!("alpha={alpha} must be positive")));
    }
    if alpha.fract() == 0.0 && alpha <= 60.0 {
        return Ok(theta_moment(alpha as u32)?.to_f64().expect("finite"));
    }
    // E X^a = Gamma(-a)^-1 int_0^inf (phi(s) - sum_{k<=a} phi_k s^k) s^(-a-1) ds.
    // On (0,1) the series integrates termwise; on (1,inf) the polynomial part
    // integrates in closed form.
    let c = sech_sqrt_coefficients(80);
    let series: f64 = c.iter().enumerate().map(|(k, ck)| ck / (k as f64 - alpha)).sum();
    let tail = integrate_to_infinity(|s| theta_lt(s) * s.powf(-alpha - 1.0), 1.0, 1e-12)?;
    Ok((series + tail) / gamma(-alpha))
}

pub fn theta_lt(s: f64) -> f64 {
    1.0 / s.sqrt().cosh()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WVarsigmaTail {
    pub alpha: f64,
    pub samples: usize,
    pub hill: TailEstimate,
    pub prefactor: TailConstant,
    /// `E theta^alpha`, the limit of the prefactor.
    pub theta_moment: f64,
}

/// Tail of `W_varsigma` for an independent random horizon `varsigma` whose
/// tail is regularly varying with index `2 alpha`.
pub fn tail_of_w_varsigma<R: RngCore + ?Sized>(
    varsigma: &XiLaw,
    alpha: f64,
    samples: usize,
    rng: &mut R,
) -> Result<WVarsigmaTail> {
    varsigma.validate()?;
    match varsigma.tail_index() {
        Some(b) if (b - 2.0 * alpha).abs() <= 1e-8 => {}
        Some(b) => {
            return Err(Error::InvalidParam(format!("horizon tail index {b} is not 2*alpha = {}", 2.0 * alpha)))
        }
        None => return Err(Error::InsufficientTail("horizon law has no regularly varying tail".into())),
    }
    let ws: Vec<f64> = (0..samples)
        .map(|_| simulate_w_crit(varsigma.sample(rng), rng) as f64)
        .collect();
    let prefactor = tail_constant_with(&ws, alpha, |x| x.powf(alpha) * varsigma.survival(x.sqrt()))?;
    let positive: Vec<f64> = ws.iter().copied().filter(|w| *w > 0.0).collect();
    let k = crate::analytics::default_hill_k(samples).min(positive.len().saturating_sub(1));
    let mut hill = hill_estimate(&positive, Some(k))?;
    hill.prefactor_hat = Some(prefactor.c_hat);
    Ok(WVarsigmaTail { alpha, samples, hill, prefactor, theta_moment: theta_moment_real(alpha)? })
}
