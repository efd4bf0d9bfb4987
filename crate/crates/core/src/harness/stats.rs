//! Two-sample tests, empirical transforms and quantile tables.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{split, tag};

pub const KS_MIN_SAMPLES: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub pvalue: f64,
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<KsResult> {
    for s in [a, b] {
        if s.len() < KS_MIN_SAMPLES {
            return Err(Error::TooFewSamples { needed: KS_MIN_SAMPLES, got: s.len() });
        }
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidParam("NaN in KS sample".into()));
    }
    let (sa, sb) = (sorted(a), sorted(b));
    let (n, m) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    // Walk the merged order, consuming ties on both sides before comparing.
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] == x {
            i += 1;
        }
        while j < sb.len() && sb[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d = d.max((i as f64 / n - j as f64 / m).abs());
    let ne = n * m / (n + m);
    Ok(KsResult { statistic: d, pvalue: kolmogorov_sf(ne.sqrt() * d) })
}

/// `P{K > x}` for the Kolmogorov distribution.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // P{K <= x} = sqrt(2 pi)/x sum_k exp(-(2k-1)^2 pi^2 / (8 x^2))
        let c = -std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let cdf: f64 = (1..=20)
            .map(|k| ((2 * k - 1) as f64).powi(2) * c)
            .map(f64::exp)
            .sum::<f64>()
            * (2.0 * std::f64::consts::PI).sqrt()
            / x;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let sf: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * x * x).exp()
            })
            .sum::<f64>()
            * 2.0;
        sf.clamp(0.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TransformKind {
    /// `E exp(-s X)`.
    Lt,
    /// `E exp(i u X)`.
    Cf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformPoint {
    pub arg: f64,
    pub re: f64,
    pub im: f64,
    pub se_re: f64,
    pub se_im: f64,
}

impl TransformPoint {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

fn mean_se(vals: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut n = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for x in vals {
        n += 1;
        let d = x - mean;
        mean += d / n as f64;
        m2 += d * (x - mean);
    }
    if n < 2 {
        return (mean, 0.0);
    }
    (mean, (m2 / (n - 1) as f64 / n as f64).sqrt())
}

pub fn empirical_transform(samples: &[f64], grid: &[f64], kind: TransformKind) -> Result<Vec<TransformPoint>> {
    if grid.is_empty() {
        return Err(Error::InvalidParam("empty transform grid".into()));
    }
    Ok(grid
        .iter()
        .map(|&t| match kind {
            TransformKind::Lt => {
                let (re, se_re) = mean_se(samples.iter().map(|x| (-t * x).exp()));
                TransformPoint { arg: t, re, im: 0.0, se_re, se_im: 0.0 }
            }
            TransformKind::Cf => {
                let (re, se_re) = mean_se(samples.iter().map(|x| (t * x).cos()));
                let (im, se_im) = mean_se(samples.iter().map(|x| (t * x).sin()));
                TransformPoint { arg: t, re, im, se_re, se_im }
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QqRow {
    pub p: f64,
    pub sample: f64,
    pub reference: f64,
}

/// Empirical quantile (type 7, linear interpolation) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub const QQ_LEVELS: [f64; 19] = [
    0.01, 0.025, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.975, 0.99,
];

pub fn qq_table(sample: &[f64], reference: &[f64], levels: &[f64]) -> Vec<QqRow> {
    let (a, b) = (sorted(sample), sorted(reference));
    levels
        .iter()
        .map(|&p| QqRow { p, sample: quantile_sorted(&a, p), reference: quantile_sorted(&b, p) })
        .collect()
}

/// Bootstrap standard error of the sample mean.
pub fn bootstrap_se_mean(xs: &[f64], resamples: usize, seed: u64) -> f64 {
    let n = xs.len();
    if n < 2 || resamples < 2 {
        return f64::NAN;
    }
    let mut rng = split(seed, tag::BOOTSTRAP, 0);
    let means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| xs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    mean_var(&means).1.sqrt()
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var)
}
