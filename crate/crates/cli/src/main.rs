use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use rwsre::analytics::speed;
use rwsre::branching::{sample_annealed_progeny_with, simulate_regeneration, DEFAULT_BLOCK_BUDGET};
use rwsre::env::{alpha_root, classify_regime, sample_env, EnvSpec};
use rwsre::harness::{
    execute, persist, qq_csv, replicate, CritgwCheck, ExperimentConfig, ExperimentKind, RunOutput,
};
use rwsre::rng::{child_seed, split, tag};
use rwsre::walk::{simulate_first_passage, simulate_position, WalkOptions, DEFAULT_STEP_BUDGET};
use rwsre::{Error, Result};

#[derive(Parser)]
#[command(name = "rwsre", version, about = "Random walks in sparse random environments: simulation and checks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Environment spec (JSON).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Master seed [default: 1, or the config file's seed].
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Worker threads [default: 1, or the config file's count].
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Statistic {
    /// First passage time `T_n`.
    T,
    /// Position `X_k`.
    X,
}

#[derive(Clone, Copy, ValueEnum)]
enum TailSource {
    Regen,
    Perpetuity,
}

#[derive(Subcommand)]
enum Command {
    /// First passage times (`--target`) or positions (`--steps`), one record per replica.
    SimulateWalk {
        #[arg(long, conflicts_with = "steps", required_unless_present = "steps")]
        target: Option<i64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Regeneration cycles, or total progeny over `--blocks` blocks.
    SimulateBpi {
        #[arg(long)]
        blocks: Option<u64>,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Critical Galton-Watson checks.
    Critgw {
        #[arg(long, value_enum, default_value = "all")]
        check: CheckArg,
        /// Generation count for the moment checks.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Analytic speed; with `--n` also the Monte Carlo check.
    Speed {
        #[arg(long)]
        n: Option<u64>,
    },
    /// Root of `E rho^a = 1` and the regime classification.
    AlphaRoot,
    /// Tail index of cycle progeny or of the perpetuity.
    Tails {
        #[arg(long, value_enum, default_value = "regen")]
        source: TailSource,
        #[arg(long)]
        hill_tol: Option<f64>,
    },
    /// Normalized `T_n` or `X_k` against the limit law.
    LimitCheck {
        #[arg(long, value_enum, default_value = "t")]
        statistic: Statistic,
        #[arg(long)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<u64>>,
        #[arg(long)]
        cycles: Option<usize>,
        #[arg(long)]
        ks_tol: Option<f64>,
    },
    /// Walk-side left steps against branching-side progeny.
    IdentityCheck {
        #[arg(long)]
        n_blocks: u64,
        #[arg(long)]
        n_blocks_branching: Option<u64>,
    },
    /// Run an experiment described by a config file.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    All,
    Moments,
    Lt,
    Theta,
    Tail,
}

impl From<CheckArg> for CritgwCheck {
    fn from(c: CheckArg) -> Self {
        match c {
            CheckArg::All => CritgwCheck::All,
            CheckArg::Moments => CritgwCheck::Moments,
            CheckArg::Lt => CritgwCheck::Lt,
            CheckArg::Theta => CritgwCheck::Theta,
            CheckArg::Tail => CritgwCheck::Tail,
        }
    }
}

impl Global {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }
}

fn read_spec(g: &Global) -> Result<EnvSpec> {
    let path = g.spec.as_ref().ok_or_else(|| Error::InvalidParam("--spec is required".into()))?;
    EnvSpec::from_json(&std::fs::read_to_string(path)?)
}

fn emit(g: &Global, text: &str) -> Result<()> {
    match &g.out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_rows<T: Serialize>(g: &Global, header: &[&str], rows: &[T], fields: impl Fn(&T) -> Vec<String>) -> Result<()> {
    let mut text = String::new();
    match g.format {
        Format::Json => {
            for r in rows {
                text.push_str(&serde_json::to_string(r)?);
                text.push('\n');
            }
        }
        Format::Csv => {
            text.push_str(&header.join(","));
            text.push('\n');
            for r in rows {
                text.push_str(&fields(r).join(","));
                text.push('\n');
            }
        }
    }
    emit(g, &text)
}

/// Run, print and map the verdict onto the exit code.
fn run_config(g: &Global, mut cfg: ExperimentConfig) -> Result<ExitCode> {
    if let Some(w) = g.workers {
        cfg.workers = w;
    }
    let out: RunOutput = execute(&cfg)?;
    persist(&cfg.output, &out)?;
    match g.format {
        Format::Json => emit(g, &format!("{}\n", out.report.to_json()))?,
        Format::Csv => {
            let rows = out.report.ladder.last().map(|r| r.qq.clone()).unwrap_or_else(|| out.report.qq.clone());
            emit(g, &qq_csv(&rows)?)?
        }
    }
    Ok(if out.report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn config(g: &Global, kind: ExperimentKind, spec: Option<EnvSpec>, default_replicas: usize) -> ExperimentConfig {
    ExperimentConfig::new(kind, spec, g.seed(), g.replicas.unwrap_or(default_replicas))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match cli.command {
        Command::SimulateWalk { target, steps, budget } => {
            let spec = read_spec(g)?;
            let reps = g.replicas.unwrap_or(1);
            let opts = WalkOptions { budget: budget.unwrap_or(DEFAULT_STEP_BUDGET), track_sites: false };
            let rows = replicate(g.workers(), reps, |i| {
                let mut env = sample_env(&spec, child_seed(g.seed(), tag::ENV_POSITIVE, i as u64));
                let mut rng = split(g.seed(), tag::WALK, i as u64);
                Ok(match (target, steps) {
                    (Some(n), _) => {
                        let r = simulate_first_passage(&mut env, n, &mut rng, opts)?;
                        json!({ "replica": i, "target_n": n, "t_n": r.t_n, "left_nonneg": r.left_nonneg,
                                "left_neg": r.left_neg, "truncated": r.truncated })
                    }
                    (None, Some(k)) => {
                        json!({ "replica": i, "k": k, "x_k": simulate_position(&mut env, k, &mut rng, false).x_k })
                    }
                    (None, None) => unreachable!("clap requires one of them"),
                })
            })?;
            let header: Vec<String> =
                rows.first().and_then(|r| r.as_object()).map(|o| o.keys().cloned().collect()).unwrap_or_default();
            let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
            emit_rows(g, &header_refs, &rows, |r| header.iter().map(|k| r[k].to_string()).collect())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SimulateBpi { blocks, budget } => {
            let spec = read_spec(g)?;
            let reps = g.replicas.unwrap_or(1);
            match blocks {
                Some(nb) => {
                    let rows = replicate(g.workers(), reps, |i| {
                        let w = sample_annealed_progeny_with(&spec, nb, &mut split(g.seed(), tag::BRANCHING, i as u64))?;
                        Ok(json!({ "replica": i, "n_blocks": nb, "progeny": w }))
                    })?;
                    emit_rows(g, &["replica", "n_blocks", "progeny"], &rows, |r| {
                        ["replica", "n_blocks", "progeny"].iter().map(|k| r[*k].to_string()).collect()
                    })?;
                }
                None => {
                    let budget = budget.unwrap_or(DEFAULT_BLOCK_BUDGET);
                    let rows = replicate(g.workers(), reps, |i| {
                        simulate_regeneration(&spec, &mut split(g.seed(), tag::BRANCHING, i as u64), budget)
                    })?;
                    emit_rows(g, &["tau1", "bar_w", "sum_w0", "sum_wdown", "sum_z", "s_tau"], &rows, |c| {
                        [c.tau1, c.bar_w, c.sum_w0, c.sum_wdown, c.sum_z, c.s_tau].iter().map(u64::to_string).collect()
                    })?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Critgw { check, n } => {
            let spec = g.spec.as_ref().map(|_| read_spec(g)).transpose()?;
            let mut cfg = config(g, ExperimentKind::Critgw, spec, 100_000);
            cfg.check = check.into();
            cfg.n = n;
            run_config(g, cfg)
        }
        Command::Speed { n } => {
            let spec = read_spec(g)?;
            match n {
                Some(n) => {
                    let mut cfg = config(g, ExperimentKind::Speed, Some(spec), 200);
                    cfg.n = Some(n);
                    run_config(g, cfg)
                }
                None => {
                    emit(g, &format!("{}\n", serde_json::to_string_pretty(&speed(&spec)?)?))?;
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
        Command::AlphaRoot => {
            let spec = read_spec(g)?;
            let alpha = alpha_root(&spec)?;
            let regime = classify_regime(&spec).ok();
            emit(g, &format!("{}\n", serde_json::to_string_pretty(&json!({ "alpha": alpha, "regime": regime }))?))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Tails { source, hill_tol } => {
            let kind = match source {
                TailSource::Regen => ExperimentKind::RegenTail,
                TailSource::Perpetuity => ExperimentKind::Perpetuity,
            };
            let mut cfg = config(g, kind, Some(read_spec(g)?), 1_000_000);
            cfg.tolerance.hill = hill_tol;
            run_config(g, cfg)
        }
        Command::LimitCheck { statistic, n, ladder, cycles, ks_tol } => {
            let kind = match statistic {
                Statistic::T => ExperimentKind::LimitT,
                Statistic::X => ExperimentKind::LimitX,
            };
            let mut cfg = config(g, kind, Some(read_spec(g)?), 2000);
            cfg.n = Some(n);
            cfg.ladder = ladder;
            cfg.cycles = cycles;
            cfg.tolerance.ks = ks_tol;
            run_config(g, cfg)
        }
        Command::IdentityCheck { n_blocks, n_blocks_branching } => {
            let mut cfg = config(g, ExperimentKind::Identity, Some(read_spec(g)?), 10_000);
            cfg.n_blocks = Some(n_blocks);
            cfg.n_blocks_branching = n_blocks_branching;
            run_config(g, cfg)
        }
        Command::Report { config: path } => {
            let mut cfg = ExperimentConfig::from_json(&std::fs::read_to_string(&path)?)?;
            if g.spec.is_some() {
                cfg.spec = Some(read_spec(g)?);
            }
            if let Some(r) = g.replicas {
                cfg.replicas = r;
            }
            if let Some(s) = g.seed {
                cfg.seed = s;
            }
            run_config(g, cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
