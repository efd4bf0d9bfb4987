//! Stable and Mittag-Leffler laws, and the centering/norming constants of
//! the limit theorems.
//!
//! `S_alpha` is normalized by
//! `-log E exp(-u S) = Gamma(1-alpha) u^alpha` for `alpha < 1`,
//! `log E exp(iuS) = -(pi/2)|u| - iu log|u|` for `alpha = 1`,
//! `log E exp(iuS) = |u|^alpha Gamma(2-alpha)/(alpha-1) (cos(pi alpha/2) - i sin(pi alpha/2) sign u)`
//! for `alpha` in `(1,2)`, and `S_2 ~ N(0,1)`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::{CaseLabel, RegimeReport};
use crate::error::{Error, Result};
use crate::harness::{quantile_sorted, TransformKind};
use crate::numeric::{gamma, ln_gamma};
use crate::sampling::unit_open0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableSpec {
    pub alpha: f64,
}

impl StableSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidParam(format!("stable index {alpha} outside (0, 2]")));
        }
        Ok(StableSpec { alpha })
    }

    /// Which transform pins down the law.
    pub fn transform_kind(&self) -> TransformKind {
        if self.alpha < 1.0 {
            TransformKind::Lt
        } else {
            TransformKind::Cf
        }
    }
}

/// Scale turning a standard totally skewed draw into `S_alpha`.
fn skewed_scale(alpha: f64) -> f64 {
    let c = (PI * alpha / 2.0).cos();
    if alpha < 1.0 {
        (gamma(1.0 - alpha) * c).powf(1.0 / alpha)
    } else {
        (-gamma(2.0 - alpha) / (alpha - 1.0) * c).powf(1.0 / alpha)
    }
}

/// Chambers-Mallows-Stuck draw with skewness 1, unit scale, no shift.
fn cms_skewed<R: RngCore + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (unit_open0(rng) - 0.5);
    let w = -unit_open0(rng).ln();
    if alpha == 1.0 {
        let a = FRAC_PI_2 + v;
        return (a * v.tan() - (FRAC_PI_2 * w * v.cos() / a).ln()) / FRAC_PI_2;
    }
    let t = (PI * alpha / 2.0).tan();
    let b = t.atan() / alpha;
    let s = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
    let av = alpha * (v + b);
    s * av.sin() / v.cos().powf(1.0 / alpha) * ((v - av).cos() / w).powf((1.0 - alpha) / alpha)
}

pub fn stable_sample<R: RngCore + ?Sized>(spec: &StableSpec, rng: &mut R) -> f64 {
    let alpha = spec.alpha;
    if alpha == 2.0 {
        return StandardNormal.sample(rng);
    }
    let x = cms_skewed(alpha, rng);
    if alpha == 1.0 {
        FRAC_PI_2 * x + FRAC_PI_2.ln()
    } else {
        skewed_scale(alpha) * x
    }
}

/// Laplace transform at `u >= 0` for `alpha < 1` (real part only), the
/// characteristic function at `u` otherwise.
pub fn stable_transform(spec: &StableSpec, u: f64) -> Complex64 {
    let alpha = spec.alpha;
    if alpha < 1.0 {
        return Complex64::new((-gamma(1.0 - alpha) * u.powf(alpha)).exp(), 0.0);
    }
    if u == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let log_cf = if alpha == 2.0 {
        Complex64::new(-u * u / 2.0, 0.0)
    } else if alpha == 1.0 {
        Complex64::new(-FRAC_PI_2 * u.abs(), -u * u.abs().ln())
    } else {
        let k = u.abs().powf(alpha) * gamma(2.0 - alpha) / (alpha - 1.0);
        let h = PI * alpha / 2.0;
        Complex64::new(k * h.cos(), -k * h.sin() * u.signum())
    };
    log_cf.exp()
}

/// A draw of `S_alpha^(-alpha)`.
pub fn mittag_leffler_sample<R: RngCore + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    let s = skewed_scale(alpha) * cms_skewed(alpha, rng);
    s.powf(-alpha)
}

/// `sum_n z^n / Gamma(1 + n alpha)`.
pub fn mittag_leffler_function(alpha: f64, z: f64) -> f64 {
    let mut total = 0.0;
    for n in 0..2000 {
        let term = if z == 0.0 {
            if n == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            let mag = n as f64 * z.abs().ln() - ln_gamma(1.0 + n as f64 * alpha);
            let sign = if z < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
            sign * mag.exp()
        };
        total += term;
        if n > 10 && term.abs() < 1e-17 * total.abs() {
            break;
        }
    }
    total
}

/// Empirical upper tail of a positive sample, with a Pareto continuation of
/// known index past the last `anchor` exceedances.
#[derive(Clone, Debug)]
pub struct TailTable {
    alpha: f64,
    sorted: Vec<f64>,
    cum1: Vec<f64>,
    cum2: Vec<f64>,
    anchor_rank: usize,
}

impl TailTable {
    pub fn new(samples: &[f64], alpha: f64) -> Result<Self> {
        if samples.len() < 1000 {
            return Err(Error::TooFewSamples { needed: 1000, got: samples.len() });
        }
        if let Some(&bad) = samples.iter().find(|x| !(**x >= 0.0)) {
            return Err(Error::NonpositiveSample(bad));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidParam("tail index must be positive".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut cum1 = Vec::with_capacity(sorted.len() + 1);
        let mut cum2 = Vec::with_capacity(sorted.len() + 1);
        let (mut s1, mut s2) = (0.0, 0.0);
        cum1.push(0.0);
        cum2.push(0.0);
        for x in &sorted {
            s1 += x;
            s2 += x * x;
            cum1.push(s1);
            cum2.push(s2);
        }
        let anchor_rank = (sorted.len() / 1000).max(10);
        Ok(TailTable { alpha, sorted, cum1, cum2, anchor_rank })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Anchor point `x0` and `P{W > x0}` of the Pareto continuation.
    fn anchor(&self) -> (f64, f64) {
        let n = self.sorted.len();
        let x0 = self.sorted[n - self.anchor_rank];
        (x0, self.empirical_survival(x0))
    }

    fn empirical_survival(&self, x: f64) -> f64 {
        let above = self.sorted.len() - self.sorted.partition_point(|&y| y <= x);
        above as f64 / self.sorted.len() as f64
    }

    /// `P{W > x}`.
    pub fn survival(&self, x: f64) -> f64 {
        let (x0, s0) = self.anchor();
        if x <= x0 {
            self.empirical_survival(x)
        } else {
            s0 * (x0 / x).powf(self.alpha)
        }
    }

    /// `c(t)` with `t P{W > c(t)} = 1`.
    pub fn c_alpha(&self, t: f64) -> f64 {
        let (x0, s0) = self.anchor();
        if t * s0 < 1.0 {
            return quantile_sorted(&self.sorted, 1.0 - 1.0 / t.max(1.0));
        }
        x0 * (t * s0).powf(1.0 / self.alpha)
    }

    /// `m(t) = int_0^t P{W > x} dx = E min(W, t)`.
    pub fn integrated_tail(&self, t: f64) -> f64 {
        let (x0, s0) = self.anchor();
        let n = self.sorted.len();
        let head = |t: f64| {
            let i = self.sorted.partition_point(|&y| y <= t);
            (self.cum1[i] + t * (n - i) as f64) / n as f64
        };
        if t <= x0 {
            return head(t);
        }
        let a = self.alpha;
        let extra = if (a - 1.0).abs() < 1e-12 {
            s0 * x0 * (t / x0).ln()
        } else {
            s0 * x0 / (1.0 - a) * ((t / x0).powf(1.0 - a) - 1.0)
        };
        head(x0) + extra
    }

    /// `E[W^2; W <= r]`.
    pub fn truncated_second_moment(&self, r: f64) -> f64 {
        let (x0, s0) = self.anchor();
        let n = self.sorted.len();
        let head = |r: f64| self.cum2[self.sorted.partition_point(|&y| y <= r)] / n as f64;
        if r <= x0 {
            return head(r);
        }
        let a = self.alpha;
        let c = a * s0 * x0.powf(a);
        let extra = if (a - 2.0).abs() < 1e-12 {
            c * (r / x0).ln()
        } else {
            c / (2.0 - a) * (r.powf(2.0 - a) - x0.powf(2.0 - a))
        };
        head(x0) + extra
    }

    /// `r_2(t)` with `t E[W^2; W <= r] / r^2 = 1`.
    pub fn r2(&self, t: f64) -> f64 {
        let g = |r: f64| (t * self.truncated_second_moment(r)).sqrt();
        let mut r = g(self.sorted[self.sorted.len() - 1]).max(1.0);
        for _ in 0..200 {
            let next = g(r);
            if (next - r).abs() <= 1e-12 * r {
                return next;
            }
            r = next;
        }
        r
    }

    /// Mean of the sample.
    pub fn mean(&self) -> f64 {
        self.cum1[self.sorted.len()] / self.sorted.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    /// Tail of the cycle progeny driven by `rho`.
    A,
    /// Driven by the block lengths.
    B,
    /// Finite variance.
    D,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReferenceLaw {
    Stable { alpha: f64 },
    MittagLeffler { alpha: f64 },
    Normal,
}

/// `shift + factor * Y` with `Y` drawn from `law`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    #[serde(flatten)]
    pub law: ReferenceLaw,
    pub factor: f64,
    pub shift: f64,
}

impl Reference {
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let y = match self.law {
            ReferenceLaw::Stable { alpha } => stable_sample(&StableSpec { alpha }, rng),
            ReferenceLaw::MittagLeffler { alpha } => mittag_leffler_sample(alpha, rng),
            ReferenceLaw::Normal => StandardNormal.sample(rng),
        };
        self.shift + self.factor * y
    }
}

/// Inputs estimated from regeneration cycles.
#[derive(Clone, Debug, Default)]
pub struct NormingEstimates {
    /// `E tau_1`.
    pub mu: Option<f64>,
    pub e_xi: Option<f64>,
    /// `E W_bar`, the mean cycle progeny.
    pub e_barw: Option<f64>,
    /// `C` in `P{W_bar > x} ~ C x^-alpha`.
    pub c_hat: Option<f64>,
    pub tail: Option<TailTable>,
    /// Standard deviation in the finite-variance central limit theorem.
    pub sigma0: Option<f64>,
}

/// Indices within this distance of 1 or 2 select the boundary forms.
pub const INDEX_SNAP: f64 = 1e-9;

/// Round a root-found index onto 1 or 2 when it is numerically one of them.
pub fn snap_index(alpha: f64) -> f64 {
    [1.0, 2.0].into_iter().find(|t| (alpha - t).abs() <= INDEX_SNAP).unwrap_or(alpha)
}

fn need(x: Option<f64>, name: &str) -> Result<f64> {
    x.filter(|v| v.is_finite()).ok_or_else(|| Error::MissingEstimate(name.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Form {
    /// `a = 0`, `b = (C t)^(1/alpha)`.
    ASlow,
    /// `a = n + 2 t m(C t)`, `b = C t`.
    AOne,
    /// `a = A n`, `b = (C t)^(1/alpha)`.
    AFast,
    /// `a = A n`, `b = (C t log t)^(1/2)`.
    ATwo,
    /// `a = 0`, `b = (mu E xi)^(-1/alpha) c(n)`.
    BSlow,
    /// `a = n + 2 t m(c(t))`, `b = (mu E xi)^-1 c(n)`.
    BOne,
    /// `a = A n`, `b = (mu E xi)^(-1/alpha) c(n)`.
    BFast,
    /// `a = A n`, `b = (mu E xi)^(-1/2) r_2(n)`.
    BTwo,
    /// `a = n / v`, `b = sigma_0 n^(1/2)`.
    Clt,
}

/// Centering and norming of `T_n` and of `X_k` for one regime.
#[derive(Clone, Debug, Serialize)]
pub struct NormingPlan {
    pub case: CaseLabel,
    pub family: Family,
    pub alpha: f64,
    pub mu: f64,
    pub e_xi: f64,
    pub e_barw: Option<f64>,
    pub c_hat: Option<f64>,
    /// `A_alpha = 1 + 2 E W_bar / (mu E xi)`, the inverse speed.
    pub a_alpha: Option<f64>,
    /// `B_alpha = 2 (C / (mu E xi))^(1/alpha)`.
    pub b_alpha: Option<f64>,
    pub sigma0: Option<f64>,
    pub a_fn: String,
    pub b_fn: String,
    form: Form,
    #[serde(skip)]
    tail: Option<TailTable>,
}

pub fn build_norming_plan(report: &RegimeReport, est: &NormingEstimates) -> Result<NormingPlan> {
    let alpha = snap_index(
        report
            .limit_index
            .ok_or_else(|| Error::UnsupportedCase(format!("no limit law for case {:?}", report.case_label)))?,
    );
    let family = match report.case_label {
        CaseLabel::A1 | CaseLabel::A2 | CaseLabel::A3 => Family::A,
        CaseLabel::B1 | CaseLabel::B2 => Family::B,
        CaseLabel::D => Family::D,
        CaseLabel::Unsupported => return Err(Error::UnsupportedCase("regime outside the classification".into())),
    };
    let mu = need(est.mu, "mu")?;
    let e_xi = need(est.e_xi, "e_xi")?;
    let t_factor = 1.0 / (mu * e_xi);
    let inverse_speed = |e_barw: f64| 1.0 + 2.0 * e_barw * t_factor;
    let mut plan = NormingPlan {
        case: report.case_label,
        family,
        alpha,
        mu,
        e_xi,
        e_barw: est.e_barw,
        c_hat: est.c_hat,
        a_alpha: None,
        b_alpha: None,
        sigma0: None,
        a_fn: String::new(),
        b_fn: String::new(),
        form: Form::Clt,
        tail: None,
    };
    let table = |what: &str| est.tail.clone().ok_or_else(|| Error::MissingEstimate(format!("tail table ({what})")));
    match family {
        Family::A => {
            let c = need(est.c_hat, "c_hat")?;
            plan.b_alpha = Some(2.0 * (c * t_factor).powf(1.0 / alpha));
            plan.form = if alpha < 1.0 {
                plan.a_fn = "0".into();
                plan.b_fn = format!("({} t)^(1/{alpha})", c);
                Form::ASlow
            } else if alpha == 1.0 {
                plan.tail = Some(table("integrated tail")?);
                plan.a_fn = format!("n + 2 t m({c} t)");
                plan.b_fn = format!("{c} t");
                Form::AOne
            } else {
                let a = inverse_speed(need(est.e_barw, "e_barw")?);
                plan.a_alpha = Some(a);
                plan.a_fn = format!("{a} n");
                if alpha < 2.0 {
                    plan.b_fn = format!("({c} t)^(1/{alpha})");
                    Form::AFast
                } else {
                    plan.b_fn = format!("({c} t log t)^(1/2)");
                    Form::ATwo
                }
            };
        }
        Family::B => {
            let tail = table("c_alpha / r_2")?;
            plan.tail = Some(tail);
            plan.form = if alpha < 1.0 {
                plan.a_fn = "0".into();
                plan.b_fn = format!("{} c_alpha(n)", t_factor.powf(1.0 / alpha));
                Form::BSlow
            } else if alpha == 1.0 {
                plan.a_fn = "n + 2 t m(c_1(t))".into();
                plan.b_fn = format!("{t_factor} c_1(n)");
                Form::BOne
            } else {
                let a = inverse_speed(need(est.e_barw, "e_barw")?);
                plan.a_alpha = Some(a);
                plan.a_fn = format!("{a} n");
                if alpha < 2.0 {
                    plan.b_fn = format!("{} c_alpha(n)", t_factor.powf(1.0 / alpha));
                    Form::BFast
                } else {
                    plan.b_fn = format!("{} r_2(n)", t_factor.sqrt());
                    Form::BTwo
                }
            };
        }
        Family::D => {
            let a = inverse_speed(need(est.e_barw, "e_barw")?);
            let s = need(est.sigma0, "sigma0")?;
            plan.a_alpha = Some(a);
            plan.sigma0 = Some(s);
            plan.a_fn = format!("{a} n");
            plan.b_fn = format!("{s} n^(1/2)");
            plan.form = Form::Clt;
        }
    }
    Ok(plan)
}

impl NormingPlan {
    fn t_factor(&self) -> f64 {
        1.0 / (self.mu * self.e_xi)
    }

    fn tail(&self) -> &TailTable {
        self.tail.as_ref().expect("table-backed plan carries its table")
    }

    /// Centering `a(n)` of `T_n`.
    pub fn t_center(&self, n: f64) -> f64 {
        let t = n * self.t_factor();
        match self.form {
            Form::ASlow | Form::BSlow => 0.0,
            Form::AOne => n + 2.0 * t * self.tail().integrated_tail(self.c_hat.unwrap_or(1.0) * t),
            Form::BOne => n + 2.0 * t * self.tail().integrated_tail(self.tail().c_alpha(t)),
            Form::AFast | Form::ATwo | Form::BFast | Form::BTwo | Form::Clt => self.a_alpha.unwrap_or(1.0) * n,
        }
    }

    /// Norming `b(n)` of `T_n`.
    pub fn t_scale(&self, n: f64) -> f64 {
        let tf = self.t_factor();
        let t = n * tf;
        let c = self.c_hat.unwrap_or(1.0);
        let a = self.alpha;
        match self.form {
            Form::ASlow | Form::AFast => (c * t).powf(1.0 / a),
            Form::AOne => c * t,
            Form::ATwo => (c * t * t.ln()).sqrt(),
            Form::BSlow | Form::BFast => tf.powf(1.0 / a) * self.tail().c_alpha(n),
            Form::BOne => tf * self.tail().c_alpha(n),
            Form::BTwo => tf.sqrt() * self.tail().r2(n),
            Form::Clt => self.sigma0.unwrap_or(1.0) * n.sqrt(),
        }
    }

    /// Limit law of `(T_n - a(n)) / b(n)`.
    pub fn t_reference(&self) -> Reference {
        let law = match self.form {
            Form::ATwo | Form::BTwo | Form::Clt => ReferenceLaw::Normal,
            _ => ReferenceLaw::Stable { alpha: self.alpha },
        };
        let factor = if self.form == Form::Clt { 1.0 } else { 2.0 };
        Reference { law, factor, shift: 0.0 }
    }

    /// Centering and norming of the position `X_k`, with its limit law.
    pub fn x_form(&self, k: f64) -> Result<(f64, f64, Reference)> {
        let a = self.alpha;
        let tf = self.t_factor();
        let std_ref = |law| Reference { law, factor: 1.0, shift: 0.0 };
        let neg_stable = Reference { law: ReferenceLaw::Stable { alpha: a }, factor: -1.0, shift: 0.0 };
        let inv = || self.a_alpha.ok_or_else(|| Error::MissingEstimate("e_barw".into()));
        match self.form {
            Form::ASlow => {
                let b = self.b_alpha.expect("set for family A");
                Ok((0.0, b.powf(-a) * k.powf(a), std_ref(ReferenceLaw::MittagLeffler { alpha: a })))
            }
            Form::AFast => {
                let (ai, b) = (inv()?, self.b_alpha.expect("set for family A"));
                Ok((k / ai, ai.powf(-(1.0 + 1.0 / a)) * b * k.powf(1.0 / a), neg_stable))
            }
            Form::ATwo => {
                let (ai, b) = (inv()?, self.b_alpha.expect("set for family A"));
                Ok((k / ai, ai.powf(-1.5) * b * (k * k.ln()).sqrt(), std_ref(ReferenceLaw::Normal)))
            }
            Form::BSlow => {
                let s = self.tail().survival(k);
                Ok((0.0, 2f64.powf(-a) / (tf * s), std_ref(ReferenceLaw::MittagLeffler { alpha: a })))
            }
            Form::BFast => {
                let ai = inv()?;
                let scale = 2.0 * tf.powf(1.0 / a) * ai.powf(-(1.0 + 1.0 / a)) * self.tail().c_alpha(k);
                Ok((k / ai, scale, neg_stable))
            }
            Form::BTwo => {
                let ai = inv()?;
                let scale = 2.0 * tf.sqrt() * ai.powf(-1.5) * self.tail().r2(k);
                Ok((k / ai, scale, std_ref(ReferenceLaw::Normal)))
            }
            Form::Clt => {
                let ai = inv()?;
                let s = self.sigma0.expect("set for family D");
                Ok((k / ai, s * ai.powf(-1.5) * k.sqrt(), std_ref(ReferenceLaw::Normal)))
            }
            Form::AOne | Form::BOne => {
                Err(Error::UnsupportedCase("position limit at alpha = 1 has unspecified centering".into()))
            }
        }
    }
}
