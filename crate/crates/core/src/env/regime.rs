use serde::{Deserialize, Serialize};

use super::{alpha_root, transience_check, EnvSpec, SlowFactor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaseLabel {
    A1,
    A2,
    A3,
    B1,
    B2,
    D,
    Unsupported,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE", tag = "kind", content = "c_ell")]
pub enum EllLimit {
    Zero,
    Positive(f64),
    Infinite,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub case_label: CaseLabel,
    /// Root of `E rho^a = 1`.
    pub alpha: Option<f64>,
    /// Tail index of `xi` when its tail is regularly varying.
    pub beta: Option<f64>,
    pub ell_limit: EllLimit,
    pub transient: bool,
    /// Index of the limiting stable law: `alpha`, `beta / 2` in case B2, 2 in case D.
    pub limit_index: Option<f64>,
    pub notes: Vec<String>,
}

const BETA_MATCH_TOL: f64 = 1e-8;
const EPS_PROBES: [f64; 3] = [1e-2, 1e-3, 1e-4];

fn finite(x: Result<f64>) -> Result<bool> {
    x.map(f64::is_finite)
}

/// `E(rho xi)^(s + eps) < infinity` for some probed `eps > 0`.
fn some_eps_finite(spec: &EnvSpec, s: f64, rho_extra: bool) -> Result<bool> {
    for eps in EPS_PROBES {
        let m = if rho_extra { spec.joint_moment(s, s + eps) } else { spec.joint_moment(s + eps, s + eps) };
        if finite(m)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `E rho^(a+eps) < infinity` and `E rho^a xi^(a+eps) < infinity` for some `eps > 0`.
fn a3_moments(spec: &EnvSpec, a: f64) -> Result<bool> {
    let rho_ok = EPS_PROBES.iter().any(|e| spec.rho_moment(a + e).is_ok_and(f64::is_finite));
    Ok(rho_ok && some_eps_finite(spec, a, true)?)
}

pub fn classify_regime(spec: &EnvSpec) -> Result<RegimeReport> {
    let tr = transience_check(spec)?;
    if !tr.transient {
        return Err(Error::NotTransient { e_log_rho: tr.e_log_rho });
    }
    if !spec.xi_moment(1.0)?.is_finite() {
        return Err(Error::InfiniteMeanXi);
    }
    let alpha = alpha_root(spec)?;
    let beta = spec.xi_law().tail_index();
    let ell_limit = match spec.xi_law().slow_factor() {
        Some(SlowFactor::Constant) => EllLimit::Positive(1.0),
        Some(SlowFactor::InverseLog) => EllLimit::Zero,
        Some(SlowFactor::Log) => EllLimit::Infinite,
        None => EllLimit::NotApplicable,
    };
    let mut notes = Vec::new();
    if spec.xi_law().slow_factor().is_some() {
        notes.push("slowly varying factor limited to the built-in shapes".to_string());
    }

    let mut report = RegimeReport {
        case_label: CaseLabel::Unsupported,
        alpha,
        beta,
        ell_limit,
        transient: true,
        limit_index: None,
        notes,
    };

    // Interval where E rho^x < 1: (0, alpha) when the root exists.
    let upper = alpha.unwrap_or(f64::INFINITY);
    let in_interval = |x: f64| x > 0.0 && x < upper;

    if let Some(a) = alpha.filter(|a| *a <= 2.0) {
        report.notes.push("log rho assumed nonarithmetic".to_string());
        report.notes.push("E rho^a log+ rho assumed finite".to_string());
        let matched = beta.is_some_and(|b| (b - 2.0 * a).abs() <= BETA_MATCH_TOL);
        let light = !matched && spec.xi_moment((2.0 * a).max(1.0))?.is_finite();
        if light {
            if finite(spec.joint_moment(a, a))? {
                report.case_label = CaseLabel::A1;
                report.limit_index = Some(a);
            }
            return Ok(report);
        }
        if matched {
            let tail_ok = finite(spec.joint_moment(a, a))?;
            let label = match ell_limit {
                EllLimit::Zero if a > 0.5 && tail_ok => CaseLabel::A2,
                EllLimit::Positive(_) if a > 0.5 && a < 2.0 && a3_moments(spec, a)? => CaseLabel::A3,
                EllLimit::Infinite if a > 0.5 && tail_ok => CaseLabel::B1,
                _ => CaseLabel::Unsupported,
            };
            report.case_label = label;
            if label != CaseLabel::Unsupported {
                report.limit_index = Some(a);
            }
            return Ok(report);
        }
        // beta < 2 alpha falls through to the rho2 row with alpha = beta / 2.
    }

    if let Some(b) = beta {
        if b > 1.0 && b < 4.0 && in_interval(b / 2.0) && some_eps_finite(spec, b / 2.0, false)? {
            report.case_label = CaseLabel::B2;
            report.limit_index = Some(b / 2.0);
            return Ok(report);
        }
    }
    if in_interval(2.0) && spec.xi_moment(4.0)?.is_finite() {
        report.case_label = CaseLabel::D;
        report.limit_index = Some(2.0);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{LambdaLaw, XiLaw};

    fn spec(xi: XiLaw, lambda: LambdaLaw) -> EnvSpec {
        EnvSpec::independent(xi, lambda).unwrap()
    }

    fn pareto(beta: f64, s: SlowFactor) -> XiLaw {
        XiLaw::DiscretePareto { beta, slowly_varying: s }
    }

    const HALF: LambdaLaw = LambdaLaw::Constant { lambda: 2.0 / 3.0 };

    #[test]
    fn table_examples() {
        let a1 = classify_regime(&spec(
            XiLaw::Deterministic { m: 1 },
            LambdaLaw::LogitOfLognormalRho { mean: -0.5, variance: 1.0 },
        ))
        .unwrap();
        assert_eq!(a1.case_label, CaseLabel::A1);
        assert!((a1.alpha.unwrap() - 1.0).abs() < 1e-9);

        let b2 = classify_regime(&spec(pareto(1.5, SlowFactor::Constant), HALF)).unwrap();
        assert_eq!(b2.case_label, CaseLabel::B2);
        assert_eq!(b2.limit_index, Some(0.75));

        let d = classify_regime(&spec(XiLaw::Deterministic { m: 2 }, HALF)).unwrap();
        assert_eq!(d.case_label, CaseLabel::D);
    }

    #[test]
    fn ell_split_at_beta_equal_two_alpha() {
        // alpha = -2m/v = 0.75
        let lam = LambdaLaw::LogitOfLognormalRho { mean: -0.375, variance: 1.0 };
        let cases = [
            (SlowFactor::InverseLog, CaseLabel::A2, EllLimit::Zero),
            (SlowFactor::Constant, CaseLabel::A3, EllLimit::Positive(1.0)),
            (SlowFactor::Log, CaseLabel::B1, EllLimit::Infinite),
        ];
        for (sf, label, ell) in cases {
            let r = classify_regime(&spec(pareto(1.5, sf), lam.clone())).unwrap();
            assert_eq!(r.case_label, label, "{sf:?}");
            assert_eq!(r.ell_limit, ell);
        }
    }

    #[test]
    fn heavier_xi_goes_to_b2() {
        // alpha = 1 but beta = 1.5 < 2: rho2 row with beta/2 = 0.75 in (0, 1).
        let lam = LambdaLaw::LogitOfLognormalRho { mean: -0.5, variance: 1.0 };
        let r = classify_regime(&spec(pareto(1.5, SlowFactor::Constant), lam)).unwrap();
        assert_eq!(r.case_label, CaseLabel::B2);
    }

    #[test]
    fn lighter_xi_is_a1() {
        let lam = LambdaLaw::LogitOfLognormalRho { mean: -0.5, variance: 1.0 };
        let r = classify_regime(&spec(pareto(3.0, SlowFactor::Constant), lam)).unwrap();
        assert_eq!(r.case_label, CaseLabel::A1);
    }

    #[test]
    fn errors() {
        let flat = spec(XiLaw::Deterministic { m: 1 }, LambdaLaw::Constant { lambda: 0.5 });
        assert!(matches!(classify_regime(&flat), Err(Error::NotTransient { .. })));
        let strong = spec(pareto(0.8, SlowFactor::Constant), HALF);
        assert!(matches!(classify_regime(&strong), Err(Error::InfiniteMeanXi)));
    }

    #[test]
    fn invariants_hold_for_labels() {
        let lams = [
            HALF,
            LambdaLaw::LogitOfLognormalRho { mean: -0.5, variance: 1.0 },
            LambdaLaw::LogitOfLognormalRho { mean: -0.3, variance: 0.2 },
            LambdaLaw::Beta { a: 3.0, b: 1.0 },
        ];
        let xis = [
            XiLaw::Deterministic { m: 2 },
            XiLaw::Geometric1 { p: 0.3 },
            pareto(1.5, SlowFactor::Constant),
            pareto(2.5, SlowFactor::Constant),
            pareto(3.5, SlowFactor::InverseLog),
        ];
        for lam in &lams {
            for xi in &xis {
                let s = spec(xi.clone(), lam.clone());
                let r = classify_regime(&s).unwrap();
                match r.case_label {
                    CaseLabel::A1 => {
                        let a = r.alpha.unwrap();
                        assert!(s.xi_moment((2.0 * a).max(1.0)).unwrap().is_finite());
                    }
                    CaseLabel::B2 => {
                        let b = r.beta.unwrap();
                        assert!(b > 1.0 && b < 4.0);
                        assert!(s.rho_moment(b / 2.0).unwrap() < 1.0);
                    }
                    _ => {}
                }
            }
        }
    }
}
