use std::process::ExitCode;
use std::time::Instant;

use rwsre::critgw::theta_lt;
use rwsre::env::{EnvSpec, LambdaLaw, XiLaw};
use rwsre::harness::{
    empirical_transform, execute, CritgwCheck, ExperimentConfig, ExperimentKind, RunOutput, StatReport, TransformKind,
};
use rwsre::rng::{split, tag};
use rwsre::stablelaws::{stable_sample, stable_transform, StableSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn spec(xi: XiLaw, lambda: LambdaLaw) -> EnvSpec {
    EnvSpec::independent(xi, lambda).expect("valid spec")
}

fn unit_xi(lambda: LambdaLaw) -> EnvSpec {
    spec(XiLaw::Deterministic { m: 1 }, lambda)
}

fn lognormal_rho(mean: f64) -> EnvSpec {
    unit_xi(LambdaLaw::LogitOfLognormalRho { mean, variance: 1.0 })
}

fn solomon(m: u64) -> EnvSpec {
    spec(XiLaw::Deterministic { m }, LambdaLaw::Constant { lambda: 2.0 / 3.0 })
}

fn run(cfg: &ExperimentConfig) -> RunOutput {
    execute(cfg).unwrap_or_else(|e| panic!("{:?} failed: {e}", cfg.kind))
}

fn failed_checks(r: &StatReport) -> String {
    let bad: Vec<String> = r
        .checks
        .iter()
        .filter(|c| !c.pass && !c.informational)
        .map(|c| format!("{}={:.5} (target {:?}, tol {:.5})", c.name, c.value, c.target, c.tolerance))
        .collect();
    if bad.is_empty() {
        String::new()
    } else {
        format!(" failing: {}", bad.join(", "))
    }
}

fn speed_formula() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (m, v) in [(1u64, 1.0 / 3.0), (2, 1.0 / 6.0)] {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Speed, Some(solomon(m)), 1000 + m, 200);
        cfg.n = Some(100_000);
        let t = Instant::now();
        let out = run(&cfg);
        let secs = t.elapsed().as_secs_f64();
        let c = &out.report.checks[0];
        let ok = out.report.pass && (out.report.speed.as_ref().unwrap().v - v).abs() < 1e-15 && secs < 120.0;
        pass &= ok;
        detail.push(format!("xi={m}: mean X_n/n {:.5} vs {:.5} (3 SE {:.5}), {secs:.1}s", c.value, v, c.tolerance));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn critgw_moments() -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Critgw, None, 2, 1_000_000);
    cfg.check = CritgwCheck::Moments;
    let t = Instant::now();
    let out = run(&cfg);
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        pass: out.report.pass && out.report.checks.len() == 10 && secs < 60.0,
        detail: format!("{} checks at n in {{1,2,5,10,20}}, {secs:.1}s{}", out.report.checks.len(), failed_checks(&out.report)),
    }
}

fn theta_checks() -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Critgw, None, 3, 100_000);
    cfg.check = CritgwCheck::Theta;
    let out = run(&cfg);
    let lt = out.report.checks.iter().find(|c| c.name == "theta_lt_n200_s1").unwrap();
    let m: Vec<String> =
        out.report.checks.iter().skip(1).map(|c| format!("{}={:.4}/{:.4}", c.name, c.value, c.target.unwrap())).collect();
    Outcome {
        pass: out.report.pass && (theta_lt(1.0) - 0.648054).abs() < 1e-6,
        detail: format!("LT {:.5} vs {:.6}; {}{}", lt.value, theta_lt(1.0), m.join(", "), failed_checks(&out.report)),
    }
}

fn lt_recursion() -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Critgw, None, 4, 1_000_000);
    cfg.check = CritgwCheck::Lt;
    let out = run(&cfg);
    let d: Vec<String> =
        out.report.checks.iter().map(|c| format!("{}: {:.6} vs {:.6}", c.name, c.value, c.target.unwrap())).collect();
    Outcome { pass: out.report.pass, detail: d.join("; ") }
}

fn identity() -> Outcome {
    let mixed = spec(
        XiLaw::UniformInt { k: 3 },
        LambdaLaw::Beta { a: 4.0, b: 2.0 },
    );
    let mut passes = 0;
    let seeds = 40;
    for s in 0..seeds {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Identity, Some(mixed.clone()), 500 + s, 10_000);
        cfg.n_blocks = Some(5);
        if run(&cfg).report.pass {
            passes += 1;
        }
    }
    Outcome { pass: passes * 100 >= 95 * seeds, detail: format!("p > 0.01 in {passes}/{seeds} seeds") }
}

fn regen_tail() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (mean, alpha, tol) in [(-0.5, 1.0, 0.15), (-0.75, 1.5, 0.2)] {
        let mut cfg = ExperimentConfig::new(ExperimentKind::RegenTail, Some(lognormal_rho(mean)), 6, 1_000_000);
        cfg.tolerance.hill = Some(tol);
        let t = Instant::now();
        let out = run(&cfg);
        let secs = t.elapsed().as_secs_f64();
        let h = out.report.hill.as_ref().unwrap();
        let hill_ok = out.report.checks.iter().find(|c| c.name == "hill_index").is_some_and(|c| c.pass);
        pass &= hill_ok && secs < 600.0;
        detail.push(format!("alpha={alpha}: Hill {:.4} (k={}), {secs:.1}s", h.index_hat, h.k_used));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn perpetuity_tail() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (mean, alpha) in [(-0.5, 1.0), (-0.75, 1.5)] {
        let cfg = ExperimentConfig::new(ExperimentKind::Perpetuity, Some(lognormal_rho(mean)), 7, 1_000_000);
        let out = run(&cfg);
        let h = out.report.hill.as_ref().unwrap();
        pass &= out.report.pass && !out.report.checks.is_empty();
        detail.push(format!("alpha={alpha}: Hill {:.4}", h.index_hat));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn tau_tail() -> Outcome {
    let cfg = ExperimentConfig::new(ExperimentKind::RegenTail, Some(solomon(1)), 8, 1_000_000);
    let out = run(&cfg);
    let get = |n: &str| out.report.checks.iter().find(|c| c.name == n).unwrap().clone();
    let (slope, r2) = (get("tau_tail_slope"), get("tau_tail_r2"));
    Outcome {
        pass: slope.pass && r2.pass,
        detail: format!("slope {:.4}, R^2 {:.5}, {:.0} cycles/s", slope.value, r2.value, out.report.timing.throughput),
    }
}

fn limit_checks() -> Outcome {
    let cases = [
        ("A1 alpha=1.5, T_n", ExperimentKind::LimitT, lognormal_rho(-0.75), 20_000u64),
        ("alpha=2 normal, T_n", ExperimentKind::LimitT, lognormal_rho(-1.0), 20_000),
        ("alpha=1.5 position, X_k", ExperimentKind::LimitX, lognormal_rho(-0.75), 160_000),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, kind, s, n) in cases {
        let mut cfg = ExperimentConfig::new(kind, Some(s), 9, 2000);
        cfg.n = Some(n);
        let out = run(&cfg);
        let ladder: Vec<String> = out.report.ladder.iter().map(|r| format!("{}:{:.4}", r.n, r.ks_stat)).collect();
        pass &= out.report.pass;
        detail.push(format!("{name} KS ladder [{}]", ladder.join(" ")));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn sampler_transform() -> Outcome {
    let grid: Vec<f64> = (1..=8).map(|i| i as f64 * 0.25).collect();
    let mut worst: Vec<String> = Vec::new();
    let mut pass = true;
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        let sp = StableSpec::new(alpha).unwrap();
        let mut rng = split(10, tag::REFERENCE, (alpha * 10.0) as u64);
        let xs: Vec<f64> = (0..1_000_000).map(|_| stable_sample(&sp, &mut rng)).collect();
        let kind = sp.transform_kind();
        let tol = if kind == TransformKind::Lt { 0.01 } else { 0.02 };
        let mut err: f64 = 0.0;
        for p in empirical_transform(&xs, &grid, kind).unwrap() {
            let exact = stable_transform(&sp, p.arg);
            let e = if kind == TransformKind::Lt {
                (p.re - exact.re).abs()
            } else {
                ((p.re - exact.re).powi(2) + (p.im - exact.im).powi(2)).sqrt()
            };
            err = err.max(e);
        }
        pass &= err <= tol;
        worst.push(format!("alpha={alpha}: max err {err:.4} (tol {tol})"));
    }
    Outcome { pass, detail: worst.join("; ") }
}

fn determinism() -> Outcome {
    let mut regen = ExperimentConfig::new(ExperimentKind::RegenTail, Some(lognormal_rho(-0.75)), 11, 20_000);
    regen.tolerance.hill = Some(0.3);
    let mut limit = ExperimentConfig::new(ExperimentKind::LimitT, Some(lognormal_rho(-0.75)), 11, 300);
    limit.n = Some(2_000);
    limit.cycles = Some(20_000);
    let mut identical = true;
    for base in [regen, limit] {
        let mut reports = Vec::new();
        for w in [1, 4, 16] {
            let mut cfg = base.clone();
            cfg.workers = w;
            reports.push(run(&cfg).report.canonical_json());
        }
        identical &= reports.windows(2).all(|w| w[0] == w[1]);
    }
    let cfg = ExperimentConfig::new(ExperimentKind::RegenTail, Some(solomon(1)), 12, 200_000);
    let rate = run(&cfg).report.timing.throughput;
    Outcome {
        pass: identical,
        detail: format!(
            "reports identical across 1/4/16 workers: {identical}; {rate:.0} cycles/s on one worker (target 1e5, reported only)"
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("speed formula", speed_formula),
        ("critical GW exact moments", critgw_moments),
        ("scaled critical progeny limit", theta_checks),
        ("Laplace transform recursion", lt_recursion),
        ("walk/branching identity in law", identity),
        ("regeneration progeny tail", regen_tail),
        ("perpetuity tail", perpetuity_tail),
        ("geometric regeneration time tail", tau_tail),
        ("stable limit checks", limit_checks),
        ("stable sampler vs transform", sampler_transform),
        ("determinism and throughput", determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut all = true;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        all &= o.pass;
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
