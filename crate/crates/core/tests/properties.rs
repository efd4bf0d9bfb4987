use proptest::prelude::*;
use rand::Rng;

use rwsre::analytics::{perpetuity_sample, speed};
use rwsre::branching::{simulate_block, simulate_regeneration};
use rwsre::env::{sample_env, EnvSpec, LambdaLaw, XiLaw};
use rwsre::harness::{mean_var, two_sample_ks};
use rwsre::rng::{split, tag};
use rwsre::walk::{first_passage_ladder, WalkOptions};

fn xi_law() -> impl Strategy<Value = XiLaw> {
    prop_oneof![
        (1u64..5).prop_map(|m| XiLaw::Deterministic { m }),
        (1u64..6).prop_map(|k| XiLaw::UniformInt { k }),
        (0.3f64..0.9).prop_map(|p| XiLaw::Geometric1 { p }),
    ]
}

fn transient_lambda() -> impl Strategy<Value = LambdaLaw> {
    prop_oneof![
        (0.55f64..0.95).prop_map(|lambda| LambdaLaw::Constant { lambda }),
        (2.0f64..6.0, 1.0f64..2.0).prop_map(|(a, b)| LambdaLaw::Beta { a, b }),
    ]
}

/// Mann-Kendall S with its normal-approximation two-sided p-value (no ties).
fn mann_kendall(xs: &[f64]) -> f64 {
    let n = xs.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += (xs[j] - xs[i]).signum() as i64;
        }
    }
    let var = (n * (n - 1) * (2 * n + 5)) as f64 / 18.0;
    let corrected = if s > 0 { (s - 1) as f64 } else if s < 0 { (s + 1) as f64 } else { 0.0 };
    let z = corrected / var.sqrt();
    2.0 * (1.0 - rwsre::numeric::normal_cdf(z.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn passage_identity_and_monotone_ladder(xi in xi_law(), lambda in transient_lambda(), seed in any::<u64>()) {
        let s = EnvSpec::independent(xi, lambda).unwrap();
        let mut env = sample_env(&s, seed);
        let mut rng = split(seed, tag::WALK, 0);
        let recs = first_passage_ladder(&mut env, &[3, 17, 60, 150], &mut rng, WalkOptions::default());
        for r in &recs {
            prop_assert!(!r.truncated);
            prop_assert_eq!(r.t_n, r.target_n as u64 + 2 * r.total_left());
        }
        prop_assert!(recs.windows(2).all(|w| w[0].t_n <= w[1].t_n));
    }

    #[test]
    fn ks_statistic_and_pvalue_are_probabilities(
        a in prop::collection::vec(-1e3f64..1e3, 25..200),
        b in prop::collection::vec(-1e3f64..1e3, 25..200),
    ) {
        let r = two_sample_ks(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.statistic));
        prop_assert!((0.0..=1.0).contains(&r.pvalue));
        prop_assert_eq!(two_sample_ks(&a, &a).unwrap().statistic, 0.0);
    }

    #[test]
    fn speed_lies_in_unit_interval(xi in xi_law(), lambda in transient_lambda()) {
        let s = EnvSpec::independent(xi, lambda).unwrap();
        let v = speed(&s).unwrap().v;
        prop_assert!((0.0..=1.0).contains(&v), "{}", v);
    }

    #[test]
    fn perpetuity_truncation_error_within_eps(m in 1u64..5, lambda in 0.55f64..0.95, eps in 1e-12f64..1e-3, seed in any::<u64>()) {
        let s = EnvSpec::independent(XiLaw::Deterministic { m }, LambdaLaw::Constant { lambda }).unwrap();
        let rho = (1.0 - lambda) / lambda;
        let exact = m as f64 / (1.0 - rho);
        let d = perpetuity_sample(&s, &mut split(seed, tag::PERPETUITY, 0), eps).unwrap();
        prop_assert!(d.deterministic_bound);
        prop_assert!(d.remainder <= eps * d.value);
        prop_assert!(exact - d.value <= eps * d.value * (1.0 + 1e-9) + 1e-12 * exact);
        prop_assert!(d.value <= exact * (1.0 + 1e-12));
    }
}

#[test]
fn negative_side_mass_has_no_trend() {
    let s = EnvSpec::independent(XiLaw::UniformInt { k: 3 }, LambdaLaw::Beta { a: 4.0, b: 2.0 }).unwrap();
    let sizes: Vec<i64> = (0..9).map(|j| 10f64.powf(2.0 + j as f64 / 4.0).round() as i64).collect();
    let means: Vec<f64> = sizes
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let xs: Vec<f64> = (0..2000u64)
                .map(|r| {
                    let seed = r + 10_000 * j as u64;
                    let mut env = sample_env(&s, seed);
                    let mut rng = split(seed, tag::WALK, 3);
                    first_passage_ladder(&mut env, &[n], &mut rng, WalkOptions::default())[0].left_neg as f64
                })
                .collect();
            mean_var(&xs).0
        })
        .collect();
    assert!(means.iter().all(|m| m.is_finite()));
    let p = mann_kendall(&means);
    assert!(p > 0.05, "trend in {means:?} (p = {p})");
}

#[test]
fn consecutive_cycles_are_independent() {
    let s = EnvSpec::independent(XiLaw::Deterministic { m: 1 }, LambdaLaw::Constant { lambda: 2.0 / 3.0 }).unwrap();
    let mut rng = split(21, tag::BRANCHING, 0);
    let cycles: Vec<(f64, f64)> = (0..10_000)
        .map(|_| {
            let c = simulate_regeneration(&s, &mut rng, 100_000).unwrap();
            (c.bar_w as f64, c.tau1 as f64)
        })
        .collect();
    // Lag-one cross covariance of consecutive (W, tau) pairs.
    let lag_cov = |w: &[(f64, f64)]| {
        let (mw, _) = mean_var(&w.iter().map(|c| c.0).collect::<Vec<_>>());
        let (mt, _) = mean_var(&w.iter().map(|c| c.1).collect::<Vec<_>>());
        w.windows(2).map(|p| (p[0].0 - mw) * (p[1].1 - mt) + (p[0].1 - mt) * (p[1].0 - mw)).sum::<f64>().abs()
    };
    let observed = lag_cov(&cycles);
    let mut perm = cycles.clone();
    let mut prng = split(22, tag::BOOTSTRAP, 0);
    let rounds = 199;
    let mut exceed = 0;
    for _ in 0..rounds {
        for i in (1..perm.len()).rev() {
            perm.swap(i, prng.random_range(0..=i));
        }
        if lag_cov(&perm) >= observed {
            exceed += 1;
        }
    }
    let p = (exceed + 1) as f64 / (rounds + 1) as f64;
    assert!(p > 0.05, "p = {p}");
}

#[test]
fn renewal_rate_matches_mean_cycle_length() {
    let s = EnvSpec::independent(XiLaw::UniformInt { k: 3 }, LambdaLaw::Beta { a: 4.0, b: 2.0 }).unwrap();
    let mut rng = split(23, tag::BRANCHING, 0);
    let taus: Vec<f64> =
        (0..200_000).map(|_| simulate_regeneration(&s, &mut rng, 100_000).unwrap().tau1 as f64).collect();
    let (mu, var) = mean_var(&taus);
    let n = 1_000_000u64;
    let mut rng = split(23, tag::BRANCHING, 1);
    let mut z = 0u64;
    let mut zeros = 0u64;
    for _ in 0..n {
        let b = s.sample_block(&mut rng);
        z = simulate_block(z, b.xi, b.lambda, &mut rng).z_out;
        zeros += u64::from(z == 0);
    }
    let rate = zeros as f64 / n as f64;
    let se = (var / (mu.powi(3) * n as f64)).sqrt();
    assert!((rate - 1.0 / mu).abs() < 3.0 * se + 3.0 * (var / taus.len() as f64).sqrt() / (mu * mu), "{rate} vs {}", 1.0 / mu);
}
