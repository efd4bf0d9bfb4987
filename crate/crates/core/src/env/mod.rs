//! Joint law of `(xi, lambda)` and the sparse environment it induces.

mod laws;
mod realization;
mod regime;

pub use laws::{LambdaLaw, SlowFactor, XiLaw};
pub use realization::{sample_env, Block, EnvRealization};
pub use regime::{classify_regime, CaseLabel, EllLimit, RegimeReport};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect;
use crate::sampling::unit_open0;

/// How `xi` and `lambda` are tied together within a block.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    #[default]
    Independent,
    /// `xi = Q_xi(U)`, `lambda = Q_lambda(U)` for a common uniform `U`.
    Comonotone,
    /// `matrix[i][j] = P{xi = xi.values[i], lambda = lambda.values[j]}`.
    JointFiniteTable { matrix: Vec<Vec<f64>> },
}

/// Unvalidated record as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpecConfig {
    pub xi: XiLaw,
    pub lambda: LambdaLaw,
    #[serde(default)]
    pub coupling: Coupling,
}

/// Validated joint law of one block `(xi, lambda)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvSpecConfig", into = "EnvSpecConfig")]
pub struct EnvSpec {
    xi: XiLaw,
    lambda: LambdaLaw,
    coupling: Coupling,
    /// Flattened joint table: `(xi, lambda, cumulative probability)`.
    joint: Vec<(u64, f64, f64)>,
}

impl TryFrom<EnvSpecConfig> for EnvSpec {
    type Error = Error;
    fn try_from(c: EnvSpecConfig) -> Result<Self> {
        build_env_spec(c)
    }
}

impl From<EnvSpec> for EnvSpecConfig {
    fn from(s: EnvSpec) -> Self {
        EnvSpecConfig { xi: s.xi, lambda: s.lambda, coupling: s.coupling }
    }
}

pub fn build_env_spec(config: EnvSpecConfig) -> Result<EnvSpec> {
    let EnvSpecConfig { xi, lambda, coupling } = config;
    xi.validate()?;
    lambda.validate()?;
    let mut joint = Vec::new();
    if let Coupling::JointFiniteTable { matrix } = &coupling {
        let (XiLaw::FiniteTable { values: xv, probs: xp }, LambdaLaw::FiniteTable { values: lv, probs: lp }) =
            (&xi, &lambda)
        else {
            return Err(Error::InvalidParam(
                "joint_finite_table coupling needs finite_table marginals for both xi and lambda".into(),
            ));
        };
        if matrix.len() != xv.len() || matrix.iter().any(|row| row.len() != lv.len()) {
            return Err(Error::InvalidParam("joint table shape does not match the marginals".into()));
        }
        let mut acc = 0.0;
        for (i, row) in matrix.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::InvalidParam("joint table entries must be finite and >= 0".into()));
                }
                acc += p;
                joint.push((xv[i], lv[j], acc));
            }
            let row_sum: f64 = row.iter().sum();
            if (row_sum - xp[i]).abs() > 1e-12 {
                return Err(Error::InvalidParam(format!("joint table row {i} sums to {row_sum}, expected {}", xp[i])));
            }
        }
        for (j, &want) in lp.iter().enumerate() {
            let col: f64 = matrix.iter().map(|r| r[j]).sum();
            if (col - want).abs() > 1e-12 {
                return Err(Error::InvalidParam(format!("joint table column {j} sums to {col}, expected {want}")));
            }
        }
        if (acc - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParam(format!("joint table sums to {acc}")));
        }
    }
    Ok(EnvSpec { xi, lambda, coupling, joint })
}

impl EnvSpec {
    pub fn new(xi: XiLaw, lambda: LambdaLaw, coupling: Coupling) -> Result<Self> {
        build_env_spec(EnvSpecConfig { xi, lambda, coupling })
    }

    pub fn independent(xi: XiLaw, lambda: LambdaLaw) -> Result<Self> {
        Self::new(xi, lambda, Coupling::Independent)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("EnvSpec serializes")
    }

    pub fn xi_law(&self) -> &XiLaw {
        &self.xi
    }

    pub fn lambda_law(&self) -> &LambdaLaw {
        &self.lambda
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    /// Draw one block `(xi, lambda, rho)`.
    pub fn sample_block<R: RngCore + ?Sized>(&self, rng: &mut R) -> Block {
        match self.coupling {
            Coupling::Independent => {
                let xi = self.xi.sample(rng);
                let (lambda, rho) = self.lambda.sample(rng);
                Block { xi, lambda, rho }
            }
            Coupling::Comonotone => {
                let u = unit_open0(rng);
                let xi = self.xi.quantile(u);
                let (lambda, rho) = self.lambda.quantile(u);
                Block { xi, lambda, rho }
            }
            Coupling::JointFiniteTable { .. } => {
                let u = unit_open0(rng);
                let idx = self.joint.partition_point(|e| e.2 < u).min(self.joint.len() - 1);
                let (xi, l, _) = self.joint[idx];
                let (lambda, rho) = LambdaLaw::pair_from_lambda(l);
                Block { xi, lambda, rho }
            }
        }
    }

    /// `E rho^s`.
    pub fn rho_moment(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::InvalidParam(format!("moment order must be >= 0, got {s}")));
        }
        self.lambda.rho_moment(s)
    }

    /// `E xi^s`.
    pub fn xi_moment(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::InvalidParam(format!("moment order must be >= 0, got {s}")));
        }
        self.xi.moment(s)
    }

    /// `E[rho^a xi^b]` under the declared coupling.
    pub fn joint_moment(&self, a: f64, b: f64) -> Result<f64> {
        if a == 0.0 {
            return self.xi_moment(b);
        }
        if b == 0.0 {
            return self.rho_moment(a);
        }
        match &self.coupling {
            Coupling::Independent => Ok(self.rho_moment(a)? * self.xi_moment(b)?),
            Coupling::JointFiniteTable { .. } => {
                let mut prev = 0.0;
                let mut total = 0.0;
                for &(x, l, cum) in &self.joint {
                    let rho = LambdaLaw::pair_from_lambda(l).1;
                    total += (cum - prev) * rho.powf(a) * (x as f64).powf(b);
                    prev = cum;
                }
                Ok(total)
            }
            Coupling::Comonotone => self.comonotone_moment(a, b),
        }
    }

    fn comonotone_moment(&self, a: f64, b: f64) -> Result<f64> {
        const MAX_TERMS: u64 = 20_000;
        let cap = self.xi.support_max().unwrap_or(u64::MAX);
        let mut total = 0.0;
        let mut f_prev = 0.0;
        let mut m = 0u64;
        while m < cap && m < MAX_TERMS {
            m += 1;
            let f = self.xi.cdf(m);
            if f > f_prev {
                total += (m as f64).powf(b) * self.lambda.partial_rho_moment(a, f_prev, f)?;
            }
            f_prev = f;
            if !total.is_finite() || 1.0 - f <= 0.0 {
                return Ok(total);
            }
        }
        if m >= cap {
            return Ok(total);
        }
        // Remainder over u > F(M): rho(Q(u)) is decreasing in u.
        let tail = self.xi.moment_beyond(b, m)?;
        let upper_rho = self.lambda.quantile(f_prev).1;
        let lower_rho = self.lambda.rho_range().0;
        if tail.is_infinite() {
            return if lower_rho > 0.0 {
                Ok(f64::INFINITY)
            } else {
                Err(Error::NumericFailure("comonotone moment: divergent xi tail against vanishing rho".into()))
            };
        }
        let hi = upper_rho.powf(a) * tail;
        let lo = lower_rho.powf(a) * tail;
        let estimate = total + 0.5 * (hi + lo);
        if 0.5 * (hi - lo) > 1e-8 * estimate {
            return Err(Error::NumericFailure("comonotone moment: remainder not resolved".into()));
        }
        Ok(estimate)
    }

    pub fn e_log_rho(&self) -> f64 {
        self.lambda.log_rho_moment()
    }

    pub fn e_log_xi(&self) -> Result<f64> {
        self.xi.log_moment()
    }
}

pub fn rho_moment(spec: &EnvSpec, s: f64) -> Result<f64> {
    spec.rho_moment(s)
}

const ALPHA_LO: f64 = 1e-4;
const ALPHA_HI: f64 = 64.0;

/// Positive root of `E rho^a = 1`, if one lies in the search window.
pub fn alpha_root(spec: &EnvSpec) -> Result<Option<f64>> {
    let e_log_rho = spec.e_log_rho();
    if !(e_log_rho < 0.0) {
        return Err(Error::NoRootRegion { e_log_rho });
    }
    let g = |s: f64| -> f64 {
        match spec.rho_moment(s) {
            Ok(m) if m.is_finite() => m.ln(),
            _ => f64::INFINITY,
        }
    };
    if g(ALPHA_HI) < 0.0 {
        return Ok(None);
    }
    let root = bisect(g, ALPHA_LO, ALPHA_HI, 200);
    let m = spec.rho_moment(root)?;
    if (m - 1.0).abs() > 1e-10 {
        return Err(Error::NumericFailure(format!("alpha root at {root} leaves E rho^a = {m}")));
    }
    Ok(Some(root))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transience {
    pub transient: bool,
    pub e_log_rho: f64,
    pub e_log_xi: f64,
}

pub fn transience_check(spec: &EnvSpec) -> Result<Transience> {
    let e_log_rho = spec.e_log_rho();
    let e_log_xi = spec.e_log_xi()?;
    Ok(Transience { transient: e_log_rho < 0.0 && e_log_xi.is_finite(), e_log_rho, e_log_xi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::split;
    use proptest::prelude::*;

    fn lognormal(m: f64, v: f64) -> EnvSpec {
        EnvSpec::independent(
            XiLaw::Deterministic { m: 1 },
            LambdaLaw::LogitOfLognormalRho { mean: m, variance: v },
        )
        .unwrap()
    }

    #[test]
    fn build_examples() {
        let s = EnvSpec::independent(XiLaw::Deterministic { m: 1 }, LambdaLaw::Constant { lambda: 2.0 / 3.0 }).unwrap();
        assert!((s.rho_moment(1.0).unwrap() - 0.5).abs() < 1e-15);
        let p = EnvSpec::independent(
            XiLaw::DiscretePareto { beta: 1.5, slowly_varying: SlowFactor::Constant },
            LambdaLaw::Beta { a: 2.0, b: 1.0 },
        );
        assert!(p.is_ok());
        let bad = EnvSpec::independent(XiLaw::Deterministic { m: 0 }, LambdaLaw::Constant { lambda: 0.5 });
        assert!(matches!(bad, Err(Error::InvalidParam(_))));
    }

    #[test]
    fn rho_moment_examples() {
        let s = EnvSpec::independent(XiLaw::Deterministic { m: 1 }, LambdaLaw::Constant { lambda: 2.0 / 3.0 }).unwrap();
        assert!((s.rho_moment(2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((lognormal(-0.5, 1.0).rho_moment(1.0).unwrap() - 1.0).abs() < 1e-15);
        let flat = EnvSpec::independent(XiLaw::Deterministic { m: 1 }, LambdaLaw::Beta { a: 1.0, b: 1.0 }).unwrap();
        assert!(flat.rho_moment(1.0).unwrap().is_infinite());
    }

    #[test]
    fn alpha_root_examples() {
        // exp(m a + a^2 v / 2) = 1  =>  a = -2m / v
        let a1 = alpha_root(&lognormal(-0.5, 1.0)).unwrap().unwrap();
        assert!((a1 - 1.0).abs() < 1e-9);
        let a2 = alpha_root(&lognormal(-1.0, 1.0)).unwrap().unwrap();
        assert!((a2 - 2.0).abs() < 1e-9);
        let c = EnvSpec::independent(XiLaw::Deterministic { m: 1 }, LambdaLaw::Constant { lambda: 2.0 / 3.0 }).unwrap();
        assert_eq!(alpha_root(&c).unwrap(), None);
        assert!(matches!(alpha_root(&lognormal(0.1, 1.0)), Err(Error::NoRootRegion { .. })));
    }

    #[test]
    fn alpha_root_beta_family() {
        let s = EnvSpec::independent(XiLaw::Deterministic { m: 1 }, LambdaLaw::Beta { a: 3.0, b: 1.0 }).unwrap();
        let a = alpha_root(&s).unwrap().unwrap();
        let m = s.rho_moment(a).unwrap();
        assert!((m - 1.0).abs() < 1e-10);
        assert!(a > 0.0 && a < 3.0);
    }

    #[test]
    fn transience_examples() {
        let s = EnvSpec::independent(XiLaw::Deterministic { m: 1 }, LambdaLaw::Constant { lambda: 2.0 / 3.0 }).unwrap();
        let t = transience_check(&s).unwrap();
        assert!(t.transient);
        assert!((t.e_log_rho + 2f64.ln()).abs() < 1e-15);
        assert_eq!(t.e_log_xi, 0.0);
        let flat = EnvSpec::independent(XiLaw::Deterministic { m: 1 }, LambdaLaw::Constant { lambda: 0.5 }).unwrap();
        let t = transience_check(&flat).unwrap();
        assert!(!t.transient);
        assert_eq!(t.e_log_rho, 0.0);
        // rho = 2 w.p. 1/4 (lambda = 1/3), rho = 1/4 w.p. 3/4 (lambda = 4/5)
        let two = EnvSpec::independent(
            XiLaw::Deterministic { m: 1 },
            LambdaLaw::FiniteTable { values: vec![1.0 / 3.0, 0.8], probs: vec![0.25, 0.75] },
        )
        .unwrap();
        let t = transience_check(&two).unwrap();
        assert!(t.transient);
        assert!((t.e_log_rho + 1.25 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let specs = [
            EnvSpec::new(
                XiLaw::FiniteTable { values: vec![1, 4], probs: vec![0.1, 0.9] },
                LambdaLaw::FiniteTable { values: vec![0.3, 0.7], probs: vec![0.4, 0.6] },
                Coupling::JointFiniteTable { matrix: vec![vec![0.1, 0.0], vec![0.3, 0.6]] },
            )
            .unwrap(),
            EnvSpec::new(
                XiLaw::DiscretePareto { beta: 1.0 / 3.0 + 1.0, slowly_varying: SlowFactor::Log },
                LambdaLaw::LogitOfLognormalRho { mean: -0.1 / 3.0, variance: 0.7 },
                Coupling::Comonotone,
            )
            .unwrap(),
        ];
        for s in specs {
            let text = s.to_json();
            let back = EnvSpec::from_json(&text).unwrap();
            assert_eq!(back, s);
            assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn json_rejects_invalid() {
        let bad = r#"{"xi":{"family":"deterministic","m":1},"lambda":{"family":"constant","lambda":1.5}}"#;
        assert!(EnvSpec::from_json(bad).is_err());
        let bad_joint = r#"{"xi":{"family":"finite_table","values":[1,2],"probs":[0.5,0.5]},
            "lambda":{"family":"finite_table","values":[0.6],"probs":[1.0]},
            "coupling":{"joint_finite_table":{"matrix":[[0.4],[0.6]]}}}"#;
        assert!(EnvSpec::from_json(bad_joint).is_err());
    }

    #[test]
    fn comonotone_rank_correlation_is_maximal() {
        let s = EnvSpec::new(
            XiLaw::FiniteTable { values: vec![1, 2, 5], probs: vec![0.2, 0.5, 0.3] },
            LambdaLaw::FiniteTable { values: vec![0.55, 0.7, 0.9], probs: vec![0.3, 0.3, 0.4] },
            Coupling::Comonotone,
        )
        .unwrap();
        let mut rng = split(11, 0, 0);
        let draws: Vec<Block> = (0..100_000).map(|_| s.sample_block(&mut rng)).collect();
        // Comonotone: no discordant pair exists, i.e. xi_i < xi_j forces lambda_i <= lambda_j.
        let mut by_xi: Vec<(u64, f64)> = draws.iter().map(|b| (b.xi, b.lambda)).collect();
        by_xi.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        assert!(by_xi.windows(2).all(|w| w[0].1 <= w[1].1));
        // Independent coupling does produce discordant pairs.
        let ind = EnvSpec::independent(s.xi_law().clone(), s.lambda_law().clone()).unwrap();
        let mut pairs: Vec<(u64, f64)> = (0..1000).map(|_| ind.sample_block(&mut rng)).map(|b| (b.xi, b.lambda)).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        assert!(pairs.windows(2).any(|w| w[0].1 > w[1].1));
    }

    #[test]
    fn comonotone_joint_moment_matches_monte_carlo() {
        let s = EnvSpec::new(
            XiLaw::Geometric1 { p: 0.4 },
            LambdaLaw::Beta { a: 5.0, b: 2.0 },
            Coupling::Comonotone,
        )
        .unwrap();
        let exact = s.joint_moment(1.0, 1.0).unwrap();
        let mut rng = split(12, 0, 0);
        let n = 400_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample_block(&mut rng)).map(|b| b.rho * b.xi as f64).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((m - exact).abs() < 4.0 * (v / n as f64).sqrt(), "{m} vs {exact}");
        // Anti-aligned coupling lowers E[rho xi] below the product of means.
        assert!(exact < s.rho_moment(1.0).unwrap() * s.xi_moment(1.0).unwrap());
    }

    #[test]
    fn joint_table_moment() {
        let s = EnvSpec::new(
            XiLaw::FiniteTable { values: vec![1, 4], probs: vec![0.5, 0.5] },
            LambdaLaw::FiniteTable { values: vec![0.5, 0.8], probs: vec![0.5, 0.5] },
            Coupling::JointFiniteTable { matrix: vec![vec![0.5, 0.0], vec![0.0, 0.5]] },
        )
        .unwrap();
        // (1, rho=1) and (4, rho=1/4) each with mass 1/2.
        assert!((s.joint_moment(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rho_sample_mean_matches_moment() {
        let specs = [
            lognormal(-0.5, 0.5),
            EnvSpec::independent(XiLaw::Deterministic { m: 1 }, LambdaLaw::Beta { a: 4.0, b: 2.0 }).unwrap(),
            EnvSpec::independent(
                XiLaw::Deterministic { m: 1 },
                LambdaLaw::FiniteTable { values: vec![1.0 / 3.0, 0.8], probs: vec![0.25, 0.75] },
            )
            .unwrap(),
        ];
        for (i, s) in specs.iter().enumerate() {
            let mut rng = split(13, i as u64, 0);
            let n = 1_000_000;
            let xs: Vec<f64> = (0..n).map(|_| s.sample_block(&mut rng).rho).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            let exact = s.rho_moment(1.0).unwrap();
            assert!((m - exact).abs() < 4.0 * (v / n as f64).sqrt(), "spec {i}: {m} vs {exact}");
        }
    }

    proptest! {
        #[test]
        fn rho_moment_is_log_convex(m in -2.0f64..0.5, v in 0.0f64..2.0, a in 0.5f64..8.0, b in 0.5f64..4.0,
                                    s1 in 0.0f64..1.0, d1 in 0.01f64..1.0, d2 in 0.01f64..1.0) {
            let s2 = s1 + d1;
            let s3 = s2 + d2;
            let laws = [
                LambdaLaw::LogitOfLognormalRho { mean: m, variance: v },
                LambdaLaw::Beta { a, b },
            ];
            for law in laws {
                let (l1, l2, l3) = (
                    law.rho_moment(s1).unwrap().ln(),
                    law.rho_moment(s2).unwrap().ln(),
                    law.rho_moment(s3).unwrap().ln(),
                );
                if l3.is_finite() {
                    let w = (s3 - s2) / (s3 - s1);
                    prop_assert!(l2 <= w * l1 + (1.0 - w) * l3 + 1e-9);
                }
            }
        }

        #[test]
        fn alpha_root_hits_one(m in -1.5f64..-0.05, v in 0.1f64..2.0) {
            let s = lognormal(m, v);
            if let Some(r) = alpha_root(&s).unwrap() {
                let e = s.rho_moment(r).unwrap();
                prop_assert!((e - 1.0).abs() <= 1e-8);
            }
        }
    }
}
