//! Closed-form block quantities, the perpetuity and tail estimators.

use num_traits::Num;
use rand::RngCore;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::env::{transience_check, EnvSpec};
use crate::error::{Error, Result};
use crate::harness::quantile_sorted;
use crate::rng::{split, tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DegenerateReason {
    ERhoGe1,
    ERhoxiInf,
    EXi2Inf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedReport {
    pub v: f64,
    pub inv_v: f64,
    pub e_xi: f64,
    pub e_xi2: f64,
    pub e_rho: f64,
    pub e_rhoxi: f64,
    pub degenerate_reason: Option<DegenerateReason>,
}

/// `v = (1 - E rho) E xi / ((1 - E rho) E xi^2 + 2 E xi E rho xi)`.
pub fn speed_formula<T: Num + Copy>(e_xi: T, e_xi2: T, e_rho: T, e_rhoxi: T) -> T {
    let one_minus = T::one() - e_rho;
    let two = T::one() + T::one();
    one_minus * e_xi / (one_minus * e_xi2 + two * e_xi * e_rhoxi)
}

fn block_moments(spec: &EnvSpec) -> Result<(f64, f64, f64, f64)> {
    let tr = transience_check(spec)?;
    if !tr.transient {
        return Err(Error::NotTransient { e_log_rho: tr.e_log_rho });
    }
    let e_xi = spec.xi_moment(1.0)?;
    if !e_xi.is_finite() {
        return Err(Error::InfiniteMeanXi);
    }
    Ok((e_xi, spec.xi_moment(2.0)?, spec.rho_moment(1.0)?, spec.joint_moment(1.0, 1.0)?))
}

fn degenerate(e_xi2: f64, e_rho: f64, e_rhoxi: f64) -> Option<DegenerateReason> {
    if !(e_rho < 1.0) {
        Some(DegenerateReason::ERhoGe1)
    } else if !e_rhoxi.is_finite() {
        Some(DegenerateReason::ERhoxiInf)
    } else if !e_xi2.is_finite() {
        Some(DegenerateReason::EXi2Inf)
    } else {
        None
    }
}

pub fn speed(spec: &EnvSpec) -> Result<SpeedReport> {
    let (e_xi, e_xi2, e_rho, e_rhoxi) = block_moments(spec)?;
    let reason = degenerate(e_xi2, e_rho, e_rhoxi);
    let v = if reason.is_some() { 0.0 } else { speed_formula(e_xi, e_xi2, e_rho, e_rhoxi) };
    Ok(SpeedReport {
        v,
        inv_v: if v > 0.0 { 1.0 / v } else { f64::INFINITY },
        e_xi,
        e_xi2,
        e_rho,
        e_rhoxi,
        degenerate_reason: reason,
    })
}

/// Expected total progeny of the immigrants of one block.
pub fn expected_y1(spec: &EnvSpec) -> Result<f64> {
    let (e_xi, e_xi2, e_rho, e_rhoxi) = block_moments(spec)?;
    if degenerate(e_xi2, e_rho, e_rhoxi).is_some() {
        return Ok(f64::INFINITY);
    }
    Ok(0.5 * (e_xi2 - e_xi) + e_xi * e_rhoxi / (1.0 - e_rho))
}

/// `E T_{S_1} = E xi / v`.
pub fn expected_first_block_passage(spec: &EnvSpec) -> Result<f64> {
    let s = speed(spec)?;
    Ok(if s.v > 0.0 { s.e_xi / s.v } else { f64::INFINITY })
}

pub const PERPETUITY_TERM_CAP: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerpetuityDraw {
    pub value: f64,
    pub terms: u64,
    /// Bound (deterministic) or estimate (stochastic) of the neglected tail.
    pub remainder: f64,
    pub deterministic_bound: bool,
}

/// Sampler for `xi_1 + rho_1 xi_2 + rho_1 rho_2 xi_3 + ...`.
#[derive(Clone, Debug)]
pub struct Perpetuity {
    spec: EnvSpec,
    eps: f64,
    /// Multiplies the running product to bound or estimate the remainder.
    tail_factor: f64,
    deterministic: bool,
}

impl Perpetuity {
    pub fn new(spec: &EnvSpec, eps: f64) -> Result<Self> {
        let e_log_rho = spec.e_log_rho();
        if !(e_log_rho < 0.0) {
            return Err(Error::NotTransient { e_log_rho });
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidParam("truncation tolerance must be positive".into()));
        }
        let rho_max = spec.lambda_law().rho_range().1;
        let xi_max = spec.xi_law().support_max();
        let e_xi = spec.xi_moment(1.0)?;
        let (tail_factor, deterministic) = match xi_max {
            Some(m) if rho_max < 1.0 => (m as f64 / (1.0 - rho_max), true),
            _ if rho_max < 1.0 => (e_xi / (1.0 - rho_max), false),
            _ => {
                let e_rho = spec.rho_moment(1.0)?;
                let decay = if e_rho < 1.0 { e_rho } else { e_log_rho.exp() };
                (e_xi / (1.0 - decay), false)
            }
        };
        Ok(Perpetuity { spec: spec.clone(), eps, tail_factor, deterministic })
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<PerpetuityDraw> {
        let mut sum = 0.0;
        let mut prod = 1.0;
        for j in 1..=PERPETUITY_TERM_CAP {
            let b = self.spec.sample_block(rng);
            sum += prod * b.xi as f64;
            prod *= b.rho;
            let remainder = prod * self.tail_factor;
            if remainder <= self.eps * sum {
                return Ok(PerpetuityDraw { value: sum, terms: j, remainder, deterministic_bound: self.deterministic });
            }
        }
        Err(Error::TruncationCap(PERPETUITY_TERM_CAP as usize))
    }
}

pub fn perpetuity_sample<R: RngCore + ?Sized>(spec: &EnvSpec, rng: &mut R, eps: f64) -> Result<PerpetuityDraw> {
    Perpetuity::new(spec, eps)?.sample(rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub index_hat: f64,
    pub k_used: usize,
    pub n: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_width: f64,
    pub prefactor_hat: Option<f64>,
    pub warning: Option<String>,
}

pub const HILL_MIN_K: usize = 10;
pub const HILL_BOOTSTRAP: usize = 200;
const HILL_BOOTSTRAP_SEED: u64 = 0x4869_6c6c;

pub fn default_hill_k(n: usize) -> usize {
    ((n as f64).powf(0.6).floor() as usize).max(HILL_MIN_K)
}

fn hill_from_top(top_desc: &[f64], k: usize) -> f64 {
    let base = top_desc[k].ln();
    let h = top_desc[..k].iter().map(|x| x.ln() - base).sum::<f64>() / k as f64;
    if h > 0.0 {
        1.0 / h
    } else {
        f64::INFINITY
    }
}

/// Hill estimate from the `k` largest order statistics with a bootstrap
/// 95% percentile interval.
pub fn hill_estimate(samples: &[f64], k: Option<usize>) -> Result<TailEstimate> {
    let n = samples.len();
    if let Some(&bad) = samples.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::NonpositiveSample(bad));
    }
    let k = k.unwrap_or_else(|| default_hill_k(n));
    if k < HILL_MIN_K || k >= n {
        return Err(Error::InvalidParam(format!("Hill needs {HILL_MIN_K} <= k < n, got k={k}, n={n}")));
    }
    let mut desc = samples.to_vec();
    // Only the k+1 largest values matter, for the estimate and for every resample.
    let depth = (4 * (k + 1)).min(n);
    desc.select_nth_unstable_by(depth - 1, |a, b| b.total_cmp(a));
    desc.truncate(depth);
    desc.sort_by(|a, b| b.total_cmp(a));
    let index_hat = hill_from_top(&desc, k);

    // A resample of size n keeps c_i copies of the i-th largest value, with
    // c_i ~ Binomial(n - c_1 - ... - c_{i-1}, 1/(n - i + 1)).
    let mut rng = split(HILL_BOOTSTRAP_SEED, tag::BOOTSTRAP, n as u64);
    let mut boot = Vec::with_capacity(HILL_BOOTSTRAP);
    let mut top = Vec::with_capacity(k + 1);
    for _ in 0..HILL_BOOTSTRAP {
        top.clear();
        let mut remaining = n as u64;
        let mut i = 0usize;
        while top.len() < k + 1 {
            let p = 1.0 / (n - i) as f64;
            let c = if p >= 1.0 { remaining } else { Binomial::new(remaining, p).expect("valid").sample(&mut rng) };
            remaining -= c;
            let x = if i < desc.len() { desc[i] } else { desc[desc.len() - 1] };
            for _ in 0..c.min((k + 1 - top.len()) as u64) {
                top.push(x);
            }
            i += 1;
        }
        boot.push(hill_from_top(&top, k));
    }
    boot.sort_by(f64::total_cmp);
    let ci_low = quantile_sorted(&boot, 0.025);
    let ci_high = quantile_sorted(&boot, 0.975);
    let warning = (!index_hat.is_finite()).then(|| "zero log-spacings among the top order statistics".to_string());
    Ok(TailEstimate {
        index_hat,
        k_used: k,
        n,
        ci_low,
        ci_high,
        ci_width: ci_high - ci_low,
        prefactor_hat: None,
        warning,
    })
}

pub const TAIL_WINDOW: (f64, f64) = (0.99, 0.9999);
pub const TAIL_MIN_POINTS: usize = 100;
pub const FLATNESS_SLOPE: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailConstant {
    pub c_hat: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// Slope of `log(x^alpha S(x))` against `log x` over the window.
    pub slope: f64,
    pub flat: bool,
}

/// `C` in `P{X > x} ~ C x^-alpha`, averaged over the upper window.
pub fn tail_constant_estimate(samples: &[f64], alpha: f64) -> Result<TailConstant> {
    tail_constant_with(samples, alpha, |_| 1.0)
}

/// As [`tail_constant_estimate`], dividing each point by `ell(x)` first.
/// Zeros are allowed and only count towards the sample size.
pub fn tail_constant_with<L: Fn(f64) -> f64>(samples: &[f64], alpha: f64, ell: L) -> Result<TailConstant> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParam("alpha must be positive".into()));
    }
    if let Some(&bad) = samples.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::NonpositiveSample(bad));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let lo = quantile_sorted(&xs, TAIL_WINDOW.0);
    let hi = quantile_sorted(&xs, TAIL_WINDOW.1);
    let mut logs = Vec::new();
    let mut vals = Vec::new();
    let start = xs.partition_point(|&x| x < lo || x <= 0.0);
    let mut i = start;
    while i < n && xs[i] <= hi {
        let x = xs[i];
        // Survival at x: fraction of samples strictly above it.
        let above = n - xs.partition_point(|&y| y <= x);
        if above > 0 {
            let v = x.powf(alpha) * above as f64 / n as f64 / ell(x);
            logs.push((x.ln(), v.ln()));
            vals.push(v);
        }
        let next = xs.partition_point(|&y| y <= x);
        i = next.max(i + 1);
    }
    if vals.len() < TAIL_MIN_POINTS || lo >= hi {
        return Err(Error::InsufficientTail(format!(
            "{} distinct points in the tail window, need {TAIL_MIN_POINTS}",
            vals.len()
        )));
    }
    let c_hat = vals.iter().sum::<f64>() / vals.len() as f64;
    let slope = ls_slope(&logs);
    Ok(TailConstant { c_hat, window: (lo, hi), points: vals.len(), slope, flat: slope.abs() < FLATNESS_SLOPE })
}

/// Least-squares slope and coefficient of determination.
pub fn ls_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

fn ls_slope(points: &[(f64, f64)]) -> f64 {
    ls_fit(points).0
}
