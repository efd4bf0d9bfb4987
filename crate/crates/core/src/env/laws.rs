//! Marginal laws of the block length `xi` and of the marked-site bias `lambda`.

use rand::{Rng, RngCore};
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, beta_quantile, beta_reg, integrate, ln_beta};
use crate::sampling::unit_open0;

const PROB_TOL: f64 = 1e-12;
/// Terms summed exactly before the Euler-Maclaurin tail of heavy-tailed series.
const SERIES_HEAD: u64 = 2_000;

/// Slowly varying factor attached to the discrete Pareto tail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlowFactor {
    /// `l(t) -> 1`.
    #[default]
    Constant,
    /// `l(t) ~ 1 / log t -> 0`.
    InverseLog,
    /// `l(t) ~ log t -> infinity`.
    Log,
}

impl SlowFactor {
    fn exponent(self) -> f64 {
        match self {
            SlowFactor::Constant => 0.0,
            SlowFactor::InverseLog => -1.0,
            SlowFactor::Log => 1.0,
        }
    }
}

/// Law of the spacing `xi` between consecutive marked sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum XiLaw {
    Deterministic { m: u64 },
    /// Uniform on `{1, ..., k}`.
    UniformInt { k: u64 },
    /// `P{xi = t} = p (1-p)^(t-1)` on `{1, 2, ...}`.
    Geometric1 { p: f64 },
    /// `P{xi >= t} = t^(-beta) (1 + ln t)^g` for integer `t >= 1`, with `g` in
    /// `{0, -1, 1}` selected by `slowly_varying`.
    DiscretePareto {
        beta: f64,
        #[serde(default)]
        slowly_varying: SlowFactor,
    },
    FiniteTable { values: Vec<u64>, probs: Vec<f64> },
}

/// Law of the bias `lambda` at marked sites; `rho = (1 - lambda) / lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaLaw {
    Constant { lambda: f64 },
    Beta { a: f64, b: f64 },
    /// `log rho ~ Normal(mean, variance)`, `lambda = 1 / (1 + rho)`.
    LogitOfLognormalRho { mean: f64, variance: f64 },
    FiniteTable { values: Vec<f64>, probs: Vec<f64> },
}

fn check_probs(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidParam(format!("{what}: empty probability vector")));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidParam(format!("{what}: probabilities must be finite and >= 0")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidParam(format!("{what}: probabilities sum to {total}, not 1")));
    }
    Ok(())
}

fn table_quantile<T: Copy>(sorted: &[(T, f64)], u: f64) -> T {
    let mut acc = 0.0;
    for &(v, p) in sorted {
        acc += p;
        if u <= acc {
            return v;
        }
    }
    sorted.last().expect("validated non-empty").0
}

/// Weight `g` in `E g(xi)`.
#[derive(Clone, Copy)]
enum Weight {
    Power(f64),
    Log,
}

impl Weight {
    fn eval(self, t: f64) -> f64 {
        match self {
            Weight::Power(s) => t.powf(s),
            Weight::Log => t.ln(),
        }
    }

    /// `ln g(t)` as a function of `ln t`.
    fn ln_eval(self, lt: f64) -> f64 {
        match self {
            Weight::Power(s) => s * lt,
            Weight::Log => lt.ln(),
        }
    }
}

impl XiLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            XiLaw::Deterministic { m } => {
                if *m < 1 {
                    return Err(Error::InvalidParam("xi must be >= 1 almost surely".into()));
                }
            }
            XiLaw::UniformInt { k } => {
                if *k < 1 {
                    return Err(Error::InvalidParam("uniform_int needs k >= 1".into()));
                }
            }
            XiLaw::Geometric1 { p } => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(Error::InvalidParam(format!("geometric1 needs p in (0,1], got {p}")));
                }
            }
            XiLaw::DiscretePareto { beta, slowly_varying } => {
                if !(beta.is_finite() && *beta > 0.0) {
                    return Err(Error::InvalidParam(format!("discrete_pareto needs beta > 0, got {beta}")));
                }
                if *slowly_varying == SlowFactor::Log && *beta <= 1.0 {
                    return Err(Error::InvalidParam(
                        "discrete_pareto with log factor needs beta > 1 for a monotone tail".into(),
                    ));
                }
            }
            XiLaw::FiniteTable { values, probs } => {
                if values.len() != probs.len() {
                    return Err(Error::InvalidParam("xi table: values and probs differ in length".into()));
                }
                if values.iter().any(|&v| v < 1) {
                    return Err(Error::InvalidParam("xi must be >= 1 almost surely".into()));
                }
                check_probs(probs, "xi table")?;
            }
        }
        Ok(())
    }

    fn sorted_table(&self) -> Option<Vec<(u64, f64)>> {
        match self {
            XiLaw::FiniteTable { values, probs } => {
                let mut t: Vec<(u64, f64)> = values.iter().copied().zip(probs.iter().copied()).collect();
                t.sort_by_key(|e| e.0);
                Some(t)
            }
            _ => None,
        }
    }

    /// `P{xi >= t}` for the Pareto family at real `t`.
    fn pareto_tail(beta: f64, g: f64, t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else {
            let lt = t.ln();
            (-beta * lt + g * lt.ln_1p()).exp()
        }
    }

    /// `P{xi = t}` for the Pareto family, computed without cancellation.
    fn pareto_pmf(beta: f64, g: f64, t: f64) -> f64 {
        if t < 1.0 {
            return 0.0;
        }
        let head = Self::pareto_tail(beta, g, t);
        let inv = 1.0 / t;
        let step = -beta * inv.ln_1p() + g * (inv.ln_1p() / (1.0 + t.ln())).ln_1p();
        head * -step.exp_m1()
    }

    fn pareto_inverse_tail(beta: f64, g: f64, v: f64) -> f64 {
        let target = -v.ln();
        if g == 0.0 {
            return (target / beta).exp();
        }
        // Solve beta*y - g*ln(1+y) = -ln v for y = ln t >= 0.
        let h = |y: f64| beta * y - g * y.ln_1p() - target;
        let mut y = target / beta;
        for _ in 0..50 {
            let hy = h(y);
            let dh = beta - g / (1.0 + y);
            let next = (y - hy / dh).max(0.0);
            if (next - y).abs() <= 1e-14 * (1.0 + y) {
                y = next;
                break;
            }
            y = next;
        }
        y.exp()
    }

    fn to_count(x: f64) -> u64 {
        if x >= 9.0e18 {
            9_000_000_000_000_000_000
        } else {
            (x.floor() as u64).max(1)
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            XiLaw::Deterministic { m } => *m,
            XiLaw::UniformInt { k } => 1 + rng.random_range(0..*k),
            XiLaw::Geometric1 { p } => {
                if *p >= 1.0 {
                    1
                } else {
                    1 + (unit_open0(rng).ln() / (-p).ln_1p()).floor() as u64
                }
            }
            XiLaw::DiscretePareto { beta, slowly_varying } => {
                Self::to_count(Self::pareto_inverse_tail(*beta, slowly_varying.exponent(), unit_open0(rng)))
            }
            XiLaw::FiniteTable { .. } => self.quantile(unit_open0(rng)),
        }
    }

    /// Left-continuous inverse of the distribution function, `u` in (0, 1].
    pub fn quantile(&self, u: f64) -> u64 {
        match self {
            XiLaw::Deterministic { m } => *m,
            XiLaw::UniformInt { k } => ((u * *k as f64).ceil() as u64).clamp(1, *k),
            XiLaw::Geometric1 { p } => {
                if *p >= 1.0 || u <= 0.0 {
                    1
                } else if u >= 1.0 {
                    u64::MAX / 4
                } else {
                    Self::to_count(((-u).ln_1p() / (-p).ln_1p()).ceil())
                }
            }
            XiLaw::DiscretePareto { beta, slowly_varying } => {
                let v = (1.0 - u).max(f64::MIN_POSITIVE);
                let v = if u <= 0.0 { 1.0 } else { v };
                Self::to_count(Self::pareto_inverse_tail(*beta, slowly_varying.exponent(), v))
            }
            XiLaw::FiniteTable { .. } => table_quantile(&self.sorted_table().expect("table"), u),
        }
    }

    /// `P{xi <= m}`.
    pub fn cdf(&self, m: u64) -> f64 {
        if m == 0 {
            return 0.0;
        }
        match self {
            XiLaw::Deterministic { m: d } => f64::from(u8::from(m >= *d)),
            XiLaw::UniformInt { k } => (m.min(*k)) as f64 / *k as f64,
            XiLaw::Geometric1 { p } => -((m as f64) * (-p).ln_1p()).exp_m1(),
            XiLaw::DiscretePareto { beta, slowly_varying } => {
                1.0 - Self::pareto_tail(*beta, slowly_varying.exponent(), m as f64 + 1.0)
            }
            XiLaw::FiniteTable { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(v, _)| **v <= m)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    /// `P{xi > t}` for real `t`.
    pub fn survival(&self, t: f64) -> f64 {
        if t < 1.0 {
            return 1.0;
        }
        let m = t.floor();
        match self {
            XiLaw::DiscretePareto { beta, slowly_varying } => {
                Self::pareto_tail(*beta, slowly_varying.exponent(), m + 1.0)
            }
            _ if m >= u64::MAX as f64 => 0.0,
            _ => 1.0 - self.cdf(m as u64),
        }
    }

    /// `P{xi = m}`.
    pub fn pmf(&self, m: u64) -> f64 {
        match self {
            XiLaw::DiscretePareto { beta, slowly_varying } => {
                Self::pareto_pmf(*beta, slowly_varying.exponent(), m as f64)
            }
            XiLaw::Geometric1 { p } => {
                if m == 0 {
                    0.0
                } else {
                    p * ((m - 1) as f64 * (-p).ln_1p()).exp()
                }
            }
            XiLaw::FiniteTable { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(v, _)| **v == m)
                .map(|(_, p)| p)
                .sum(),
            _ => self.cdf(m) - self.cdf(m.saturating_sub(1)),
        }
    }

    /// Largest support point, `None` for unbounded laws.
    pub fn support_max(&self) -> Option<u64> {
        match self {
            XiLaw::Deterministic { m } => Some(*m),
            XiLaw::UniformInt { k } => Some(*k),
            XiLaw::FiniteTable { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(v, _)| *v)
                .max(),
            _ => None,
        }
    }

    /// Regular-variation index of the tail, when the tail is polynomial.
    pub fn tail_index(&self) -> Option<f64> {
        match self {
            XiLaw::DiscretePareto { beta, .. } => Some(*beta),
            _ => None,
        }
    }

    pub fn slow_factor(&self) -> Option<SlowFactor> {
        match self {
            XiLaw::DiscretePareto { slowly_varying, .. } => Some(*slowly_varying),
            _ => None,
        }
    }

    /// `ln P{xi = t}` for the Pareto family, stable for huge `t`.
    fn pareto_ln_pmf(beta: f64, g: f64, t: f64) -> f64 {
        let lt = t.ln();
        let inv = 1.0 / t;
        let step = -beta * inv.ln_1p() + g * (inv.ln_1p() / (1.0 + lt)).ln_1p();
        -beta * lt + g * lt.ln_1p() + (-step.exp_m1()).ln()
    }

    /// `E[g(xi); xi >= start]`.
    fn tail_expectation(&self, g: Weight, start: u64) -> Result<f64> {
        let start = start.max(1);
        match self {
            XiLaw::Deterministic { .. } | XiLaw::UniformInt { .. } | XiLaw::FiniteTable { .. } => {
                let hi = self.support_max().unwrap_or(0);
                Ok((start..=hi).map(|m| g.eval(m as f64) * self.pmf(m)).sum())
            }
            XiLaw::Geometric1 { p } => {
                let mut total = 0.0;
                let mut m = start;
                loop {
                    let term = g.eval(m as f64) * self.pmf(m);
                    total += term;
                    if m > start + 10 && term.abs() <= 1e-18 * total.abs().max(1e-300) {
                        break;
                    }
                    if m - start > 100_000_000 || (*p >= 1.0 && m > 1) {
                        break;
                    }
                    m += 1;
                }
                Ok(total)
            }
            XiLaw::DiscretePareto { beta, slowly_varying } => {
                let gexp = slowly_varying.exponent();
                let f = |t: f64| g.eval(t) * Self::pareto_pmf(*beta, gexp, t);
                let head_end = start + SERIES_HEAD;
                let head: f64 = (start..head_end).map(|m| f(m as f64)).sum();
                // Euler-Maclaurin: sum_{m>=N} f(m) = int_N^inf f + f(N)/2 - f'(N)/12 + ...
                let n = head_end as f64;
                let integral = Self::pareto_log_integral(*beta, gexp, g, n)?;
                let h = 1e-2 * n;
                let df = (f(n + h) - f(n - h)) / (2.0 * h);
                let total = head + integral + 0.5 * f(n) - df / 12.0;
                if total.is_finite() {
                    Ok(total)
                } else {
                    Err(Error::NumericFailure("pareto series diverged numerically".into()))
                }
            }
        }
    }

    /// `int_n^inf g(t) P{xi = t} dt` with `t = n e^y`, integrated chunk by chunk
    /// in log space; a geometric remainder closes slowly decaying tails.
    fn pareto_log_integral(beta: f64, gexp: f64, g: Weight, n: f64) -> Result<f64> {
        const CHUNK: f64 = 4.0;
        const CHUNKS: usize = 170;
        let ln_n = n.ln();
        let integrand = |y: f64| {
            let lt = ln_n + y;
            (g.ln_eval(lt) + Self::pareto_ln_pmf(beta, gexp, lt.exp()) + lt).exp()
        };
        let mut total = 0.0;
        let mut prev = f64::NAN;
        for i in 0..CHUNKS {
            let lo = i as f64 * CHUNK;
            let c = integrate(integrand, lo, lo + CHUNK, 1e-12)?;
            total += c;
            if c <= 1e-16 * total {
                return Ok(total);
            }
            if i + 1 == CHUNKS {
                let r = c / prev;
                if r.is_finite() && r < 1.0 {
                    return Ok(total + c * r / (1.0 - r));
                }
            }
            prev = c;
        }
        Err(Error::NumericFailure("pareto tail integral did not settle".into()))
    }

    /// `E xi^s` for real `s >= 0`; `+inf` when divergent.
    pub fn moment(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(1.0);
        }
        match self {
            XiLaw::Deterministic { m } => Ok((*m as f64).powf(s)),
            XiLaw::DiscretePareto { beta, .. } if s >= *beta => Ok(f64::INFINITY),
            _ => self.tail_expectation(Weight::Power(s), 1),
        }
    }

    /// `E[xi^s; xi > m]`.
    pub fn moment_beyond(&self, s: f64, m: u64) -> Result<f64> {
        match self {
            XiLaw::DiscretePareto { beta, .. } if s >= *beta => Ok(f64::INFINITY),
            _ => self.tail_expectation(Weight::Power(s), m + 1),
        }
    }

    /// `E log xi`.
    pub fn log_moment(&self) -> Result<f64> {
        match self {
            XiLaw::Deterministic { m } => Ok((*m as f64).ln()),
            _ => self.tail_expectation(Weight::Log, 1),
        }
    }
}

impl LambdaLaw {
    pub fn validate(&self) -> Result<()> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        match self {
            LambdaLaw::Constant { lambda } => {
                if !open(*lambda) {
                    return Err(Error::InvalidParam(format!("lambda must lie in (0,1), got {lambda}")));
                }
            }
            LambdaLaw::Beta { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) {
                    return Err(Error::InvalidParam(format!("beta law needs a, b > 0, got ({a}, {b})")));
                }
            }
            LambdaLaw::LogitOfLognormalRho { mean, variance } => {
                if !(mean.is_finite() && variance.is_finite() && *variance >= 0.0) {
                    return Err(Error::InvalidParam("lognormal rho needs finite mean and variance >= 0".into()));
                }
            }
            LambdaLaw::FiniteTable { values, probs } => {
                if values.len() != probs.len() {
                    return Err(Error::InvalidParam("lambda table: values and probs differ in length".into()));
                }
                if values.iter().any(|&v| !open(v)) {
                    return Err(Error::InvalidParam("lambda values must lie in (0,1)".into()));
                }
                check_probs(probs, "lambda table")?;
            }
        }
        Ok(())
    }

    fn sorted_table(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            LambdaLaw::FiniteTable { values, probs } => {
                let mut t: Vec<(f64, f64)> = values.iter().copied().zip(probs.iter().copied()).collect();
                t.sort_by(|a, b| a.0.total_cmp(&b.0));
                Some(t)
            }
            _ => None,
        }
    }

    /// Pair `(lambda, rho)` from a value of lambda.
    pub fn pair_from_lambda(lambda: f64) -> (f64, f64) {
        let lambda = lambda.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        (lambda, (1.0 - lambda) / lambda)
    }

    fn pair_from_rho(rho: f64) -> (f64, f64) {
        let rho = rho.clamp(f64::MIN_POSITIVE, f64::MAX);
        (1.0 / (1.0 + rho), rho)
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self {
            LambdaLaw::Constant { lambda } => Self::pair_from_lambda(*lambda),
            LambdaLaw::Beta { a, b } => {
                let x: f64 = Beta::new(*a, *b).expect("validated").sample(rng);
                Self::pair_from_lambda(x)
            }
            LambdaLaw::LogitOfLognormalRho { mean, variance } => {
                let z: f64 = rng.sample(StandardNormal);
                Self::pair_from_rho((mean + variance.sqrt() * z).exp())
            }
            LambdaLaw::FiniteTable { .. } => self.quantile(unit_open0(rng)),
        }
    }

    /// `(lambda, rho)` at level `u`; lambda is nondecreasing in `u`.
    pub fn quantile(&self, u: f64) -> (f64, f64) {
        match self {
            LambdaLaw::Constant { lambda } => Self::pair_from_lambda(*lambda),
            LambdaLaw::Beta { a, b } => Self::pair_from_lambda(beta_quantile(*a, *b, u)),
            LambdaLaw::LogitOfLognormalRho { mean, variance } => {
                let z = numeric::normal_quantile(1.0 - u);
                Self::pair_from_rho((mean + variance.sqrt() * z).exp())
            }
            LambdaLaw::FiniteTable { .. } => {
                Self::pair_from_lambda(table_quantile(&self.sorted_table().expect("table"), u))
            }
        }
    }

    /// `E rho^s`, `s >= 0`; `+inf` when divergent.
    pub fn rho_moment(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(1.0);
        }
        Ok(match self {
            LambdaLaw::Constant { lambda } => Self::pair_from_lambda(*lambda).1.powf(s),
            LambdaLaw::FiniteTable { values, probs } => values
                .iter()
                .zip(probs)
                .map(|(&l, &p)| p * Self::pair_from_lambda(l).1.powf(s))
                .sum(),
            LambdaLaw::LogitOfLognormalRho { mean, variance } => (s * mean + 0.5 * s * s * variance).exp(),
            // E[(1-L)^s L^-s] = B(a-s, b+s) / B(a, b), finite iff s < a.
            LambdaLaw::Beta { a, b } => {
                if s >= *a {
                    f64::INFINITY
                } else {
                    (ln_beta(a - s, b + s) - ln_beta(*a, *b)).exp()
                }
            }
        })
    }

    /// `E log rho`.
    pub fn log_rho_moment(&self) -> f64 {
        match self {
            LambdaLaw::Constant { lambda } => Self::pair_from_lambda(*lambda).1.ln(),
            LambdaLaw::FiniteTable { values, probs } => values
                .iter()
                .zip(probs)
                .map(|(&l, &p)| p * Self::pair_from_lambda(l).1.ln())
                .sum(),
            LambdaLaw::LogitOfLognormalRho { mean, .. } => *mean,
            // E log(1-L) - E log L = (psi(b) - psi(a+b)) - (psi(a) - psi(a+b)).
            LambdaLaw::Beta { a, b } => numeric::digamma(*b) - numeric::digamma(*a),
        }
    }

    /// Bounds `(inf rho, sup rho)` of the support.
    pub fn rho_range(&self) -> (f64, f64) {
        match self {
            LambdaLaw::Constant { lambda } => {
                let r = Self::pair_from_lambda(*lambda).1;
                (r, r)
            }
            LambdaLaw::FiniteTable { values, probs } => {
                let rhos = values
                    .iter()
                    .zip(probs)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(&l, _)| Self::pair_from_lambda(l).1);
                rhos.fold((f64::INFINITY, 0.0), |(lo, hi), r| (lo.min(r), hi.max(r)))
            }
            LambdaLaw::LogitOfLognormalRho { mean, variance } if *variance == 0.0 => {
                (mean.exp(), mean.exp())
            }
            _ => (0.0, f64::INFINITY),
        }
    }

    /// `int_{u1}^{u2} rho(Q(u))^s du` where `Q` is the lambda quantile.
    pub fn partial_rho_moment(&self, s: f64, u1: f64, u2: f64) -> Result<f64> {
        let (u1, u2) = (u1.clamp(0.0, 1.0), u2.clamp(0.0, 1.0));
        if u2 <= u1 {
            return Ok(0.0);
        }
        Ok(match self {
            LambdaLaw::Constant { .. } => (u2 - u1) * self.rho_moment(s)?,
            LambdaLaw::FiniteTable { .. } => {
                let mut acc = 0.0;
                let mut total = 0.0;
                for (l, p) in self.sorted_table().expect("table") {
                    let lo = acc;
                    acc += p;
                    let overlap = (acc.min(u2) - lo.max(u1)).max(0.0);
                    total += overlap * Self::pair_from_lambda(l).1.powf(s);
                }
                total
            }
            LambdaLaw::LogitOfLognormalRho { mean, variance } => {
                // rho = exp(m + sd z) with z = Phi^-1(1-u).
                let sd = variance.sqrt();
                let z_hi = numeric::normal_quantile(1.0 - u1);
                let z_lo = numeric::normal_quantile(1.0 - u2);
                (s * mean + 0.5 * s * s * variance).exp()
                    * (numeric::normal_cdf(z_hi - s * sd) - numeric::normal_cdf(z_lo - s * sd))
            }
            LambdaLaw::Beta { a, b } => {
                let x1 = beta_quantile(*a, *b, u1);
                let x2 = beta_quantile(*a, *b, u2);
                if s < *a {
                    (ln_beta(a - s, b + s) - ln_beta(*a, *b)).exp()
                        * (beta_reg(a - s, b + s, x2) - beta_reg(a - s, b + s, x1))
                } else if x1 <= 0.0 {
                    f64::INFINITY
                } else {
                    let norm = ln_beta(*a, *b);
                    integrate(
                        |x| ((a - 1.0 - s) * x.ln() + (b - 1.0 + s) * (-x).ln_1p() - norm).exp(),
                        x1,
                        x2,
                        1e-10,
                    )?
                }
            }
        })
    }
}
