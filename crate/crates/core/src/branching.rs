//! Branching process with one immigrant per generation, run block by block.
//!
//! Generations `S_{i-1}+1, ..., S_i` form block `i`. The first `xi_i - 1`
//! transitions are critical (Geom(1/2) offspring), the last one uses the
//! marked bias `lambda_i`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::env::{sample_env, Block, EnvRealization, EnvSpec};
use crate::error::{Error, Result};
use crate::rng::{split, tag, Stream};
use crate::sampling::GeomLaw;

pub const DEFAULT_BLOCK_BUDGET: u64 = 100_000;

const CRITICAL: GeomLaw = GeomLaw::FAIR;

/// Next generation: `NegativeBinomial(z + 1, omega)`, immigrant included.
pub fn bpi_generation<R: RngCore + ?Sized>(z: u64, omega: f64, rng: &mut R) -> u64 {
    GeomLaw::new(omega).sum_of(rng, z.saturating_add(1))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStats {
    pub z_in: u64,
    pub z_out: u64,
    pub w_block: u64,
    /// Progeny of immigrants arriving inside the block, interior generations only.
    pub w0: u64,
    /// Progeny of the carried-in population, interior generations only.
    pub wdown: u64,
}

fn block_with<R: RngCore + ?Sized>(z_in: u64, xi: u64, marked: &GeomLaw, rng: &mut R) -> BlockStats {
    let mut carried = z_in;
    let mut born = 0u64;
    let mut w0 = 0u64;
    let mut wdown = 0u64;
    for _ in 1..xi {
        carried = CRITICAL.sum_of(rng, carried);
        born = CRITICAL.sum_of(rng, born + 1);
        w0 = w0.saturating_add(born);
        wdown = wdown.saturating_add(carried);
    }
    let z_out = marked.sum_of(rng, carried.saturating_add(born).saturating_add(1));
    BlockStats { z_in, z_out, w_block: w0.saturating_add(wdown).saturating_add(z_out), w0, wdown }
}

pub fn simulate_block<R: RngCore + ?Sized>(z_in: u64, xi: u64, lambda: f64, rng: &mut R) -> BlockStats {
    assert!(xi >= 1, "block length must be >= 1");
    block_with(z_in, xi, &GeomLaw::new(lambda), rng)
}

fn simulate_env_block<R: RngCore + ?Sized>(z_in: u64, b: &Block, rng: &mut R) -> BlockStats {
    block_with(z_in, b.xi, &GeomLaw::from_rho(b.rho), rng)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegenSample {
    pub tau1: u64,
    pub bar_w: u64,
    pub sum_w0: u64,
    pub sum_wdown: u64,
    pub sum_z: u64,
    pub s_tau: u64,
}

/// One cycle from an empty marked generation to the next one.
pub fn simulate_regeneration<R: RngCore + ?Sized>(spec: &EnvSpec, rng: &mut R, block_budget: u64) -> Result<RegenSample> {
    let mut out = RegenSample::default();
    let mut z = 0u64;
    for i in 1..=block_budget {
        let b = spec.sample_block(rng);
        let st = simulate_env_block(z, &b, rng);
        out.sum_w0 = out.sum_w0.saturating_add(st.w0);
        out.sum_wdown = out.sum_wdown.saturating_add(st.wdown);
        out.sum_z = out.sum_z.saturating_add(st.z_out);
        out.s_tau += b.xi;
        z = st.z_out;
        if z == 0 {
            out.tau1 = i;
            out.bar_w = out.sum_w0.saturating_add(out.sum_wdown).saturating_add(out.sum_z);
            return Ok(out);
        }
    }
    Err(Error::BudgetExceeded(format!("no regeneration within {block_budget} blocks")))
}

/// `W_{S_n} = sum_{k=1}^{S_n} Z_k` on a fresh environment drawn from `rng`.
pub fn sample_annealed_progeny_with(spec: &EnvSpec, n_blocks: u64, rng: &mut Stream) -> Result<u64> {
    if n_blocks < 1 {
        return Err(Error::InvalidParam("n_blocks must be >= 1".into()));
    }
    let mut env = sample_env(spec, rng.next_u64());
    let mut z = 0u64;
    let mut total = 0u64;
    for k in 1..=n_blocks as i64 {
        let st = simulate_env_block(z, &env.block(k), rng);
        total = total.saturating_add(st.w_block);
        z = st.z_out;
    }
    Ok(total)
}

pub fn sample_annealed_progeny(spec: &EnvSpec, n_blocks: u64, seed: u64) -> Result<u64> {
    sample_annealed_progeny_with(spec, n_blocks, &mut split(seed, tag::BRANCHING, 0))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sandwich {
    pub w_sn: u64,
    /// Number of regenerations among blocks `1..=n`.
    pub regenerations: u64,
    /// Total progeny of the completed cycles.
    pub lower: u64,
    /// `lower` plus the progeny of the cycle straddling block `n`.
    pub upper: u64,
}

/// Runs blocks `1..=n` and then finishes the open cycle, so both sides of
/// the two-sided regeneration estimate are available on one path.
pub fn sandwich_path<R: RngCore + ?Sized>(
    env: &mut EnvRealization,
    n_blocks: u64,
    rng: &mut R,
    block_budget: u64,
) -> Result<Sandwich> {
    let mut z = 0u64;
    let mut w_sn = 0u64;
    let mut lower = 0u64;
    let mut cycle = 0u64;
    let mut regenerations = 0u64;
    let mut k = 0i64;
    loop {
        k += 1;
        if k as u64 > n_blocks + block_budget {
            return Err(Error::BudgetExceeded("open cycle did not close".into()));
        }
        let st = simulate_env_block(z, &env.block(k), rng);
        z = st.z_out;
        cycle = cycle.saturating_add(st.w_block);
        if k as u64 <= n_blocks {
            w_sn = w_sn.saturating_add(st.w_block);
        }
        if z == 0 {
            if k as u64 <= n_blocks {
                regenerations += 1;
                lower = lower.saturating_add(cycle);
                cycle = 0;
            } else {
                return Ok(Sandwich { w_sn, regenerations, lower, upper: lower.saturating_add(cycle) });
            }
        }
    }
}

/// `R_k = rho_k (xi_k + R_{k-1})`, `R_0 = 0`: the quenched mean of `Z_{S_k}`.
pub fn quenched_mean_recursion(env: &mut EnvRealization, k: u64) -> f64 {
    (1..=k as i64).fold(0.0, |r, i| {
        let b = env.block(i);
        b.rho * (b.xi as f64 + r)
    })
}

/// `Z_{S_k}` on a frozen environment.
pub fn quenched_population<R: RngCore + ?Sized>(env: &mut EnvRealization, k: u64, rng: &mut R) -> u64 {
    (1..=k as i64).fold(0, |z, i| simulate_env_block(z, &env.block(i), rng).z_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{LambdaLaw, XiLaw};
    use crate::harness::{mean_var, two_sample_ks};
    use crate::sampling::negative_binomial_per_particle;

    fn constant(xi: u64, lambda: f64) -> EnvSpec {
        EnvSpec::independent(XiLaw::Deterministic { m: xi }, LambdaLaw::Constant { lambda }).unwrap()
    }

    fn mean_within(xs: &[f64], target: f64, tol: f64) {
        let (m, _) = mean_var(xs);
        assert!((m - target).abs() < tol, "mean {m} vs {target}");
    }

    #[test]
    fn generation_means() {
        let mut rng = split(1, tag::BRANCHING, 0);
        let a: Vec<f64> = (0..1_000_000).map(|_| bpi_generation(0, 0.5, &mut rng) as f64).collect();
        mean_within(&a, 1.0, 0.004);
        let b: Vec<f64> = (0..1_000_000).map(|_| bpi_generation(4, 0.5, &mut rng) as f64).collect();
        mean_within(&b, 5.0, 0.01);
    }

    #[test]
    fn generation_matches_per_particle() {
        let mut rng = split(2, tag::BRANCHING, 0);
        let a: Vec<f64> = (0..100_000).map(|_| bpi_generation(3, 0.3, &mut rng) as f64).collect();
        let b: Vec<f64> = (0..100_000).map(|_| negative_binomial_per_particle(&mut rng, 4, 0.3) as f64).collect();
        assert!(two_sample_ks(&a, &b).unwrap().pvalue > 0.01);
    }

    #[test]
    fn block_examples() {
        let mut rng = split(3, tag::BRANCHING, 0);
        for _ in 0..1000 {
            let st = simulate_block(0, 1, 0.7, &mut rng);
            assert_eq!((st.w0, st.wdown), (0, 0));
            assert_eq!(st.w_block, st.z_out);
        }
        let w0: Vec<f64> = (0..1_000_000).map(|_| simulate_block(0, 5, 0.6, &mut rng).w0 as f64).collect();
        mean_within(&w0, 10.0, 0.05);
        let wd: Vec<f64> = (0..1_000_000).map(|_| simulate_block(1, 2, 0.5, &mut rng).wdown as f64).collect();
        mean_within(&wd, 1.0, 0.01);
    }

    #[test]
    fn block_identity_is_exact() {
        let mut rng = split(4, tag::BRANCHING, 0);
        for i in 0..10_000u64 {
            let st = simulate_block(i % 37, 1 + i % 9, 0.3 + 0.05 * (i % 10) as f64, &mut rng);
            assert_eq!(st.w_block, st.w0 + st.wdown + st.z_out);
        }
    }

    #[test]
    fn regeneration_near_deterministic() {
        let s = constant(1, 1.0 - 1e-9);
        let mut rng = split(5, tag::BRANCHING, 0);
        for _ in 0..1000 {
            let r = simulate_regeneration(&s, &mut rng, DEFAULT_BLOCK_BUDGET).unwrap();
            assert_eq!((r.tau1, r.bar_w), (1, 0));
        }
    }

    #[test]
    fn regeneration_decomposition() {
        let s = EnvSpec::independent(XiLaw::UniformInt { k: 4 }, LambdaLaw::Beta { a: 4.0, b: 2.0 }).unwrap();
        let mut rng = split(6, tag::BRANCHING, 0);
        for _ in 0..10_000 {
            let r = simulate_regeneration(&s, &mut rng, DEFAULT_BLOCK_BUDGET).unwrap();
            assert_eq!(r.bar_w, r.sum_w0 + r.sum_wdown + r.sum_z);
            assert!(r.tau1 >= 1 && r.s_tau >= r.tau1);
        }
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        // rho = 3: supercritical at every marked site, the cycle never closes.
        let s = constant(1, 0.25);
        let mut rng = split(7, tag::BRANCHING, 0);
        assert!(matches!(simulate_regeneration(&s, &mut rng, 200), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn annealed_progeny_degenerate() {
        let s = constant(1, 1.0 - 1e-9);
        assert_eq!(sample_annealed_progeny(&s, 10, 1).unwrap(), 0);
    }

    #[test]
    fn sandwich_holds_pathwise() {
        let s = EnvSpec::independent(XiLaw::UniformInt { k: 3 }, LambdaLaw::Beta { a: 4.0, b: 2.0 }).unwrap();
        for seed in 0..2000 {
            let mut env = sample_env(&s, seed);
            let mut rng = split(seed, tag::BRANCHING, 9);
            let sw = sandwich_path(&mut env, 12, &mut rng, DEFAULT_BLOCK_BUDGET).unwrap();
            assert!(sw.lower <= sw.w_sn && sw.w_sn <= sw.upper, "{sw:?}");
        }
    }

    #[test]
    fn quenched_mean_examples() {
        let s = constant(1, 2.0 / 3.0);
        let mut env = sample_env(&s, 0);
        assert_eq!(quenched_mean_recursion(&mut env, 0), 0.0);
        assert!((quenched_mean_recursion(&mut env, 3) - 0.875).abs() < 1e-15);
    }

    #[test]
    fn quenched_mean_matches_monte_carlo() {
        let s = EnvSpec::independent(XiLaw::UniformInt { k: 3 }, LambdaLaw::Beta { a: 4.0, b: 2.0 }).unwrap();
        let mut env = sample_env(&s, 21);
        let r4 = quenched_mean_recursion(&mut env, 4);
        let mut rng = split(21, tag::BRANCHING, 0);
        let zs: Vec<f64> = (0..100_000).map(|_| quenched_population(&mut env, 4, &mut rng) as f64).collect();
        let (m, v) = mean_var(&zs);
        assert!((m - r4).abs() < 4.0 * (v / zs.len() as f64).sqrt(), "{m} vs {r4}");
    }
}
