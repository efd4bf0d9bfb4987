use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{CritgwCheck, ExperimentConfig, ExperimentKind, OutputPaths};
use super::parallel::replicate;
use super::report::{write_jsonl, write_qq_csv, write_report, Check, LadderRung, StatReport};
use super::stats::{
    bootstrap_se_mean, empirical_transform, mean_var, qq_table, two_sample_ks, TransformKind, QQ_LEVELS,
};
use crate::analytics::{
    expected_y1, hill_estimate, ls_fit, speed, tail_constant_estimate, Perpetuity,
};
use crate::branching::{sample_annealed_progeny_with, simulate_regeneration, RegenSample, DEFAULT_BLOCK_BUDGET};
use crate::critgw::{
    crit_moments, lt_recursion, simulate_lineage, simulate_w_crit, tail_of_w_varsigma, theta_lt, theta_moment,
};
use crate::env::{alpha_root, classify_regime, CaseLabel, EnvRealization, EnvSpec, RegimeReport, SlowFactor, XiLaw};
use crate::error::{Error, Result};
use crate::rng::{child_seed, split, tag, Stream};
use crate::stablelaws::{build_norming_plan, snap_index, Family, NormingEstimates, TailTable};
use crate::walk::{annealed_left_steps_with, first_passage_ladder, position_ladder, simulate_position, WalkOptions, DEFAULT_STEP_BUDGET};

pub const DEFAULT_SE_MULTIPLE: f64 = 3.0;
pub const DEFAULT_PVALUE: f64 = 0.01;
pub const DEFAULT_HILL_TOL: f64 = 0.15;
pub const DEFAULT_KS: f64 = 0.08;
pub const DEFAULT_KS_ALPHA_ONE: f64 = 0.12;
pub const DEFAULT_CYCLES: usize = 200_000;
pub const DEFAULT_PERPETUITY_EPS: f64 = 1e-9;
/// Exceedances needed for a point of the empirical survival of `tau_1` to enter the fit.
pub const TAU_TAIL_MIN_COUNT: usize = 10;
pub const CRITGW_GENERATIONS: [u64; 5] = [1, 2, 5, 10, 20];
pub const CRITGW_LT_POINTS: [(f64, u64); 2] = [(0.05, 3), (0.02, 6)];

/// Report plus one raw record per replica.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: StatReport,
    pub raw: Vec<Value>,
}

fn stream_id(kind: ExperimentKind, purpose: u64) -> u64 {
    purpose ^ (kind.stream_id() << 48)
}

fn stream(cfg: &ExperimentConfig, purpose: u64, i: usize) -> Stream {
    split(cfg.seed, stream_id(cfg.kind, purpose), i as u64)
}

fn env_seed(cfg: &ExperimentConfig, i: usize) -> u64 {
    child_seed(cfg.seed, stream_id(cfg.kind, tag::ENV_POSITIVE), i as u64)
}

fn bootstrap_seed(cfg: &ExperimentConfig, i: usize) -> u64 {
    child_seed(cfg.seed, stream_id(cfg.kind, tag::BOOTSTRAP), i as u64)
}

fn se_multiple(cfg: &ExperimentConfig) -> f64 {
    cfg.tolerance.se.unwrap_or(DEFAULT_SE_MULTIPLE)
}

/// Raw records are only built when the config asks for them.
fn rows<T: Serialize>(cfg: &ExperimentConfig, xs: &[T]) -> Vec<Value> {
    if cfg.output.raw.is_none() {
        return Vec::new();
    }
    xs.iter().map(|x| serde_json::to_value(x).expect("row serializes")).collect()
}

/// Run one experiment without touching the file system.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = match cfg.kind {
        ExperimentKind::Speed => run_speed(cfg),
        ExperimentKind::Identity => run_identity_check(cfg),
        ExperimentKind::RegenTail => run_regen_tail(cfg),
        ExperimentKind::LimitT | ExperimentKind::LimitX => run_limit_check(cfg),
        ExperimentKind::Critgw => run_critgw(cfg),
        ExperimentKind::Perpetuity => run_perpetuity(cfg),
    }?;
    out.report.settle();
    let secs = start.elapsed().as_secs_f64();
    out.report.timing.runtime_secs = secs;
    if out.report.timing.throughput == 0.0 && secs > 0.0 {
        out.report.timing.throughput = cfg.replicas as f64 / secs;
    }
    Ok(out)
}

/// Write whichever outputs the config names.
pub fn persist(paths: &OutputPaths, out: &RunOutput) -> Result<()> {
    if let Some(p) = &paths.report {
        write_report(&out.report, p)?;
    }
    if let Some(p) = &paths.raw {
        write_jsonl(&out.raw, p)?;
    }
    if let Some(p) = &paths.qq {
        write_qq_csv(&out.report, p)?;
    }
    Ok(())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<StatReport> {
    let out = execute(cfg)?;
    persist(&cfg.output, &out)?;
    Ok(out.report)
}

fn new_report(cfg: &ExperimentConfig) -> StatReport {
    StatReport::new(cfg.kind, cfg.seed, cfg.replicas, cfg.spec.clone())
}

#[derive(Serialize)]
struct SpeedRow {
    x_over_n: f64,
    t_over_n: f64,
    truncated: bool,
}

pub fn run_speed(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = cfg.env()?;
    let sr = speed(spec)?;
    let n = *cfg.sizes().last().expect("validated");
    let budget = cfg.budget.unwrap_or(DEFAULT_STEP_BUDGET);
    let data = replicate(cfg.workers, cfg.replicas, |i| {
        let mut env = EnvRealization::new(spec, env_seed(cfg, i));
        let mut rng = stream(cfg, tag::WALK, i);
        let x = simulate_position(&mut env, n, &mut rng, false).x_k;
        let rec = first_passage_ladder(&mut env, &[n as i64], &mut rng, WalkOptions { budget, track_sites: false })
            .pop()
            .expect("one target");
        Ok(SpeedRow { x_over_n: x as f64 / n as f64, t_over_n: rec.t_n as f64 / n as f64, truncated: rec.truncated })
    })?;
    let xs: Vec<f64> = data.iter().map(|r| r.x_over_n).collect();
    let ts: Vec<f64> = data.iter().filter(|r| !r.truncated).map(|r| r.t_over_n).collect();
    let mut report = new_report(cfg);
    report.truncated = data.iter().filter(|r| r.truncated).count() as u64;
    let k = se_multiple(cfg);
    let (mx, _) = mean_var(&xs);
    let se_x = bootstrap_se_mean(&xs, 200, bootstrap_seed(cfg, 0));
    report.checks.push(Check::near("speed", mx, sr.v, k * se_x));
    if sr.v > 0.0 && !ts.is_empty() {
        let (mt, _) = mean_var(&ts);
        let se_t = bootstrap_se_mean(&ts, 200, bootstrap_seed(cfg, 1));
        report.checks.push(Check::near("inverse_speed", mt, sr.inv_v, k * se_t).informational());
    }
    report.speed = Some(sr);
    Ok(RunOutput { report, raw: rows(cfg, &data) })
}

pub fn run_identity_check(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = cfg.env()?;
    let nb = cfg.n_blocks.ok_or_else(|| Error::InvalidParam("IDENTITY_31 needs n_blocks".into()))?;
    if let Some(other) = cfg.n_blocks_branching.filter(|b| *b != nb) {
        return Err(Error::Misconfigured(format!("walk side uses {nb} blocks, branching side {other}")));
    }
    let budget = cfg.budget.unwrap_or(DEFAULT_STEP_BUDGET);
    let walk = replicate(cfg.workers, cfg.replicas, |i| {
        annealed_left_steps_with(spec, nb, &mut stream(cfg, tag::WALK, i), budget).map(|v| v as f64)
    })?;
    let bpi = replicate(cfg.workers, cfg.replicas, |i| {
        sample_annealed_progeny_with(spec, nb, &mut stream(cfg, tag::BRANCHING, i)).map(|v| v as f64)
    })?;
    let ks = two_sample_ks(&walk, &bpi)?;
    let mut report = new_report(cfg);
    report.ks_stat = Some(ks.statistic);
    report.ks_pvalue = Some(ks.pvalue);
    report.qq = qq_table(&walk, &bpi, &QQ_LEVELS);
    report.checks.push(Check::at_least("ks_pvalue", ks.pvalue, cfg.tolerance.pvalue.unwrap_or(DEFAULT_PVALUE)));
    let pairs: Vec<Value> = walk.iter().zip(&bpi).map(|(w, b)| json!({ "walk": w, "branching": b })).collect();
    let raw = rows(cfg, &pairs);
    Ok(RunOutput { report, raw })
}

fn regeneration_cycles(cfg: &ExperimentConfig, spec: &EnvSpec, count: usize, purpose: u64) -> Result<Vec<RegenSample>> {
    let budget = cfg.budget.unwrap_or(DEFAULT_BLOCK_BUDGET);
    replicate(cfg.workers, count, |i| simulate_regeneration(spec, &mut stream(cfg, purpose, i), budget))
}

/// Least-squares fit of `log P{tau_1 > m}` against `m`: `(slope, r2, points)`.
pub fn tau_tail_fit(taus: &[u64]) -> (f64, f64, usize) {
    let mut sorted = taus.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut pts = Vec::new();
    for m in 1.. {
        let above = sorted.len() - sorted.partition_point(|&t| t <= m);
        if above < TAU_TAIL_MIN_COUNT {
            break;
        }
        pts.push((m as f64, (above as f64 / n).ln()));
    }
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN, pts.len());
    }
    let (slope, _, r2) = ls_fit(&pts);
    (slope, r2, pts.len())
}

pub fn run_regen_tail(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = cfg.env()?;
    let start = Instant::now();
    let cycles = regeneration_cycles(cfg, spec, cfg.replicas, tag::BRANCHING)?;
    let secs = start.elapsed().as_secs_f64();
    let mut report = new_report(cfg);
    let regime = classify_regime(spec).ok();
    let target = match regime.as_ref().and_then(|r| r.limit_index) {
        Some(a) => Some(a),
        None => alpha_root(spec)?,
    };
    let bar_w: Vec<f64> = cycles.iter().map(|c| c.bar_w as f64).collect();
    let positive: Vec<f64> = bar_w.iter().copied().filter(|w| *w > 0.0).collect();
    match hill_estimate(&positive, None) {
        Ok(h) => {
            if let Some(a) = target {
                report.checks.push(Check::near("hill_index", h.index_hat, a, cfg.tolerance.hill.unwrap_or(DEFAULT_HILL_TOL)));
            }
            report.hill = Some(h);
        }
        Err(e) => report.notes.push(format!("hill: {e}")),
    }
    if let Some(a) = target {
        match tail_constant_estimate(&bar_w, a) {
            Ok(c) => report.tail_constant = Some(c),
            Err(e) => report.notes.push(format!("tail constant: {e}")),
        }
    }
    let taus: Vec<u64> = cycles.iter().map(|c| c.tau1).collect();
    let (slope, r2, points) = tau_tail_fit(&taus);
    report.checks.push(Check {
        name: "tau_tail_slope".into(),
        value: slope,
        target: None,
        tolerance: 0.0,
        pass: slope < 0.0,
        informational: false,
    });
    report.checks.push(Check::at_least("tau_tail_r2", r2, 0.95));
    report.notes.push(format!("tau tail fit over {points} points"));
    let (mu, _) = mean_var(&taus.iter().map(|&t| t as f64).collect::<Vec<_>>());
    report.notes.push(format!("mean regeneration time {mu}"));
    report.regime = regime;
    report.timing.throughput = if secs > 0.0 { cycles.len() as f64 / secs } else { 0.0 };
    Ok(RunOutput { report, raw: rows(cfg, &cycles) })
}

pub fn run_perpetuity(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = cfg.env()?;
    let sampler = Perpetuity::new(spec, cfg.eps.unwrap_or(DEFAULT_PERPETUITY_EPS))?;
    let draws = replicate(cfg.workers, cfg.replicas, |i| sampler.sample(&mut stream(cfg, tag::PERPETUITY, i)))?;
    let values: Vec<f64> = draws.iter().map(|d| d.value).collect();
    let mut report = new_report(cfg);
    let target = alpha_root(spec)?;
    match hill_estimate(&values, None) {
        Ok(h) => {
            if let Some(a) = target {
                report.checks.push(Check::near("hill_index", h.index_hat, a, cfg.tolerance.hill.unwrap_or(DEFAULT_HILL_TOL)));
            }
            report.hill = Some(h);
        }
        Err(e) => report.notes.push(format!("hill: {e}")),
    }
    report.transform = empirical_transform(&values, &[0.1, 0.5, 1.0, 2.0], TransformKind::Lt)?;
    Ok(RunOutput { report, raw: rows(cfg, &draws) })
}

fn critgw_pieces(check: CritgwCheck) -> [bool; 4] {
    match check {
        CritgwCheck::All => [true; 4],
        CritgwCheck::Moments => [true, false, false, false],
        CritgwCheck::Lt => [false, true, false, false],
        CritgwCheck::Theta => [false, false, true, false],
        CritgwCheck::Tail => [false, false, false, true],
    }
}

/// Generation counts for the moment checks: `n` alone when given.
fn critgw_generations(cfg: &ExperimentConfig) -> Vec<u64> {
    match (&cfg.ladder, cfg.n) {
        (None, None) => CRITGW_GENERATIONS.to_vec(),
        _ => cfg.sizes(),
    }
}

fn within_se(name: &str, xs: &[f64], target: f64, k: f64) -> Check {
    let (m, v) = mean_var(xs);
    Check::near(name, m, target, k * (v / xs.len() as f64).sqrt())
}

pub fn run_critgw(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let [moments, lt, theta, tail] = critgw_pieces(cfg.check);
    let k = se_multiple(cfg);
    let reps = cfg.replicas;
    let mut report = new_report(cfg);
    let mut raw = Vec::new();
    if moments {
        for n in critgw_generations(cfg) {
            let exact = crit_moments(n)?;
            let draws = replicate(cfg.workers, reps, |i| {
                let mut rng = stream(cfg, tag::CRITGW ^ n, i);
                let w = simulate_w_crit(n, &mut rng) as f64;
                Ok((w, simulate_lineage(n, &mut rng).1 as f64))
            })?;
            let ws: Vec<f64> = draws.iter().map(|d| d.0).collect();
            let ys: Vec<f64> = draws.iter().map(|d| d.1).collect();
            report.checks.push(within_se(&format!("mean_w_n{n}"), &ws, exact.mean_w as f64, k));
            let (_, vy) = mean_var(&ys);
            let target = exact.var_y as f64;
            report.checks.push(Check::near(&format!("var_y_n{n}"), vy, target, 0.05 * target));
            raw.push(json!({ "n": n, "mean_w": mean_var(&ws).0, "var_y": vy }));
        }
    }
    if lt {
        for (x, j) in CRITGW_LT_POINTS {
            let draws = replicate(cfg.workers, reps, |i| {
                let mut rng = stream(cfg, tag::CRITGW ^ (0x100 + j), i);
                Ok((x * simulate_lineage(j, &mut rng).1 as f64).exp())
            })?;
            report.checks.push(within_se(&format!("lt_recursion_x{x}_j{j}"), &draws, lt_recursion(x, j), k));
        }
    }
    if theta {
        let theta_reps = reps.min(100_000);
        let scaled = |n: u64, salt: u64| {
            replicate(cfg.workers, theta_reps, |i| {
                let mut rng = stream(cfg, tag::CRITGW ^ salt, i);
                Ok(simulate_w_crit(n, &mut rng) as f64 / (n * n) as f64)
            })
        };
        let w200 = scaled(200, 0x200)?;
        report.transform = empirical_transform(&w200, &[0.25, 0.5, 1.0, 2.0], TransformKind::Lt)?;
        let at_one = report.transform.iter().find(|p| p.arg == 1.0).expect("grid has 1").re;
        report.checks.push(Check::near("theta_lt_n200_s1", at_one, theta_lt(1.0), 0.005));
        let w500 = scaled(500, 0x500)?;
        for p in [1u32, 2] {
            let exact = num_traits::ToPrimitive::to_f64(&theta_moment(p)?).expect("finite");
            let m = w500.iter().map(|x| x.powi(p as i32)).sum::<f64>() / w500.len() as f64;
            report.checks.push(Check::near(&format!("theta_moment_{p}_n500"), m, exact, 0.05 * exact));
        }
    }
    if tail {
        let law = XiLaw::DiscretePareto { beta: 2.0, slowly_varying: SlowFactor::Constant };
        let t = tail_of_w_varsigma(&law, 1.0, reps, &mut stream(cfg, tag::CRITGW ^ 0x7a11, 0))?;
        report.checks.push(Check::near("w_varsigma_index", t.hill.index_hat, 1.0, cfg.tolerance.hill.unwrap_or(DEFAULT_HILL_TOL)));
        report.checks.push(Check::near("w_varsigma_prefactor", t.prefactor.c_hat, t.theta_moment, 0.25 * t.theta_moment));
        report.hill = Some(t.hill);
    }
    Ok(RunOutput { report, raw })
}

/// Norming inputs from `cycles` regeneration cycles.
pub fn norming_estimates(
    cfg: &ExperimentConfig,
    spec: &EnvSpec,
    regime: &RegimeReport,
    cycles: usize,
) -> Result<NormingEstimates> {
    let alpha = snap_index(regime.limit_index.ok_or_else(|| Error::UnsupportedCase(format!("{:?}", regime.case_label)))?);
    let samples = regeneration_cycles(cfg, spec, cycles, tag::ESTIMATES)?;
    let taus: Vec<f64> = samples.iter().map(|c| c.tau1 as f64).collect();
    let bar_w: Vec<f64> = samples.iter().map(|c| c.bar_w as f64).collect();
    let mu = mean_var(&taus).0;
    let e_xi = spec.xi_moment(1.0)?;
    let e_barw = match expected_y1(spec) {
        Ok(y) if y.is_finite() => Some(y * mu),
        _ if alpha > 1.0 => Some(mean_var(&bar_w).0),
        _ => None,
    };
    let family = match regime.case_label {
        CaseLabel::A1 | CaseLabel::A2 | CaseLabel::A3 => Family::A,
        CaseLabel::B1 | CaseLabel::B2 => Family::B,
        CaseLabel::D => Family::D,
        CaseLabel::Unsupported => return Err(Error::UnsupportedCase("regime outside the classification".into())),
    };
    let mut est = NormingEstimates { mu: Some(mu), e_xi: Some(e_xi), e_barw, ..Default::default() };
    if family == Family::A {
        est.c_hat = Some(tail_constant_estimate(&bar_w, alpha)?.c_hat);
    }
    if family == Family::B || (family == Family::A && alpha == 1.0) {
        est.tail = Some(TailTable::new(&bar_w, alpha)?);
    }
    if family == Family::D {
        let a = 1.0 + 2.0 * e_barw.expect("finite in case D") / (mu * e_xi);
        let resid: Vec<f64> =
            samples.iter().map(|c| (1.0 - a) * c.s_tau as f64 + 2.0 * c.bar_w as f64).collect();
        let e_len = samples.iter().map(|c| c.s_tau as f64).sum::<f64>() / samples.len() as f64;
        est.sigma0 = Some((mean_var(&resid).1 / e_len).sqrt());
    }
    Ok(est)
}

/// `n / 10`, `n / sqrt 10`, `n` unless a ladder is configured.
pub fn limit_sizes(cfg: &ExperimentConfig) -> Vec<u64> {
    if cfg.ladder.is_some() {
        return cfg.sizes();
    }
    let n = *cfg.sizes().last().expect("validated");
    let mut v: Vec<u64> = [n / 10, (n as f64 / 10f64.sqrt()).round() as u64, n].into_iter().filter(|x| *x >= 1).collect();
    v.dedup();
    v
}

pub fn run_limit_check(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = cfg.env()?;
    let regime = classify_regime(spec)?;
    let est = norming_estimates(cfg, spec, &regime, cfg.cycles.unwrap_or(DEFAULT_CYCLES))?;
    let plan = build_norming_plan(&regime, &est)?;
    let sizes = limit_sizes(cfg);
    let is_t = cfg.kind == ExperimentKind::LimitT;
    let (forms, reference) = if is_t {
        (sizes.iter().map(|&n| (plan.t_center(n as f64), plan.t_scale(n as f64))).collect::<Vec<_>>(), plan.t_reference())
    } else {
        let mut forms = Vec::new();
        let mut reference = None;
        for &k in &sizes {
            let (c, s, r) = plan.x_form(k as f64)?;
            forms.push((c, s));
            reference = Some(r);
        }
        (forms, reference.expect("nonempty ladder"))
    };
    let budget = cfg.budget.unwrap_or(DEFAULT_STEP_BUDGET);
    let opts = WalkOptions { budget, track_sites: false };
    let targets: Vec<i64> = sizes.iter().map(|&n| n as i64).collect();
    let values = replicate(cfg.workers, cfg.replicas, |i| {
        let mut env = EnvRealization::new(spec, env_seed(cfg, i));
        let mut rng = stream(cfg, tag::WALK, i);
        if is_t {
            let recs = first_passage_ladder(&mut env, &targets, &mut rng, opts);
            Ok((0..sizes.len())
                .map(|r| recs.get(r).filter(|x| !x.truncated).map_or((budget as f64, true), |x| (x.t_n as f64, false)))
                .collect::<Vec<_>>())
        } else {
            Ok(position_ladder(&mut env, &sizes, &mut rng).into_iter().map(|x| (x as f64, false)).collect())
        }
    })?;
    let refs = replicate(cfg.workers, cfg.replicas, |i| Ok(reference.sample(&mut stream(cfg, tag::REFERENCE, i))))?;
    let mut report = new_report(cfg);
    for (r, (&n, &(center, scale))) in sizes.iter().zip(&forms).enumerate() {
        let normalized: Vec<f64> = values.iter().map(|v| (v[r].0 - center) / scale).collect();
        let truncated = values.iter().filter(|v| v[r].1).count() as u64;
        let ks = two_sample_ks(&normalized, &refs)?;
        report.ladder.push(LadderRung {
            n,
            ks_stat: ks.statistic,
            ks_pvalue: ks.pvalue,
            truncated,
            qq: qq_table(&normalized, &refs, &QQ_LEVELS),
        });
    }
    let last = report.ladder.last().expect("nonempty ladder").clone();
    report.ks_stat = Some(last.ks_stat);
    report.ks_pvalue = Some(last.ks_pvalue);
    report.qq = last.qq;
    report.truncated = last.truncated;
    let tol = cfg.tolerance.ks.unwrap_or(if plan.alpha == 1.0 { DEFAULT_KS_ALPHA_ONE } else { DEFAULT_KS });
    report.checks.push(Check::at_most("ks_distance", last.ks_stat, tol));
    let monotone = report.ladder.windows(2).all(|w| w[1].ks_stat <= w[0].ks_stat);
    report.checks.push(Check::at_least("ladder_improves", f64::from(u8::from(monotone)), 1.0).informational());
    report.regime = Some(regime);
    report.norming = Some(plan);
    let records: Vec<Vec<f64>> = values.iter().map(|v| v.iter().map(|x| x.0).collect()).collect();
    let raw = rows(cfg, &records);
    Ok(RunOutput { report, raw })
}
