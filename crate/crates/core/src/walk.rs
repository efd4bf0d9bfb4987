//! The quenched nearest-neighbour walk: first passage times and left steps.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::env::{sample_env, EnvRealization, EnvSpec};
use crate::error::{Error, Result};
use crate::rng::{split, tag, Stream};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000_000;

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;
const HALF_THRESHOLD: u64 = 1 << 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WalkOptions {
    pub budget: u64,
    /// Keep per-site left-step counts (memory grows with the range visited).
    pub track_sites: bool,
}

impl Default for WalkOptions {
    fn default() -> Self {
        WalkOptions { budget: DEFAULT_STEP_BUDGET, track_sites: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstPassageRecord {
    pub target_n: i64,
    /// Steps taken; equals `T_n` unless truncated.
    pub t_n: u64,
    /// `sum_{0 <= i <= n} U_i`.
    pub left_nonneg: u64,
    /// `sum_{i < 0} U_i`.
    pub left_neg: u64,
    /// `i -> U_i` for sites with a nonzero count, when tracked.
    pub left_counts: Option<BTreeMap<i64, u64>>,
    pub min_site: i64,
    pub final_site: i64,
    pub truncated: bool,
}

impl FirstPassageRecord {
    pub fn total_left(&self) -> u64 {
        self.left_nonneg + self.left_neg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkSample {
    pub k_steps: u64,
    pub x_k: i64,
    pub trajectory: Option<Vec<i64>>,
}

#[inline]
fn threshold(p: f64) -> u64 {
    if p == 0.5 {
        HALF_THRESHOLD
    } else {
        (p * TWO_POW_64) as u64
    }
}

/// Position plus the block `[S_k, S_{k+1})` containing it.
struct Cursor {
    x: i64,
    k: i64,
    lo: i64,
    hi: i64,
    marked: u64,
}

impl Cursor {
    fn new(env: &mut EnvRealization, x: i64) -> Self {
        let k = env.block_of(x);
        let mut c = Cursor { x, k, lo: 0, hi: 0, marked: 0 };
        c.load(env);
        c
    }

    fn load(&mut self, env: &mut EnvRealization) {
        self.lo = env.site(self.k);
        self.hi = env.site(self.k + 1);
        self.marked = threshold(env.block(self.k + 1).lambda);
    }

    /// One step driven by exactly one 64-bit draw; returns true for a step right.
    #[inline]
    fn step<R: RngCore + ?Sized>(&mut self, env: &mut EnvRealization, rng: &mut R) -> bool {
        let thr = if self.x == self.lo { self.marked } else { HALF_THRESHOLD };
        let right = rng.next_u64() < thr;
        if right {
            self.x += 1;
            if self.x == self.hi {
                self.k += 1;
                self.load(env);
            }
        } else {
            self.x -= 1;
            if self.x < self.lo {
                self.k -= 1;
                self.load(env);
            }
        }
        right
    }
}

struct SiteCounts {
    offset: i64,
    counts: Vec<u64>,
}

impl SiteCounts {
    fn bump(&mut self, site: i64) {
        if site < self.offset {
            let extra = (self.offset - site) as usize;
            let mut grown = vec![0; extra];
            grown.extend_from_slice(&self.counts);
            self.counts = grown;
            self.offset = site;
        }
        let i = (site - self.offset) as usize;
        if i >= self.counts.len() {
            self.counts.resize(i + 1, 0);
        }
        self.counts[i] += 1;
    }

    fn into_map(self) -> BTreeMap<i64, u64> {
        self.counts
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c > 0)
            .map(|(i, c)| (i as i64 + self.offset, c))
            .collect()
    }
}

/// First passage times at each of the increasing `targets`, along one trajectory from 0.
pub fn first_passage_ladder<R: RngCore + ?Sized>(
    env: &mut EnvRealization,
    targets: &[i64],
    rng: &mut R,
    opts: WalkOptions,
) -> Vec<FirstPassageRecord> {
    let mut out = Vec::with_capacity(targets.len());
    let mut cur = Cursor::new(env, 0);
    let mut steps = 0u64;
    let mut left_nonneg = 0u64;
    let mut left_neg = 0u64;
    let mut min_site = 0i64;
    let mut sites = opts.track_sites.then(|| SiteCounts { offset: 0, counts: Vec::new() });
    for &n in targets {
        let mut truncated = false;
        while cur.x < n {
            if steps >= opts.budget {
                truncated = true;
                break;
            }
            let from = cur.x;
            steps += 1;
            if !cur.step(env, rng) {
                if from >= 0 {
                    left_nonneg += 1;
                } else {
                    left_neg += 1;
                }
                if let Some(s) = sites.as_mut() {
                    s.bump(from);
                }
                min_site = min_site.min(cur.x);
            }
        }
        out.push(FirstPassageRecord {
            target_n: n,
            t_n: steps,
            left_nonneg,
            left_neg,
            left_counts: None,
            min_site,
            final_site: cur.x,
            truncated,
        });
        if truncated {
            break;
        }
    }
    if let (Some(s), Some(last)) = (sites, out.last_mut()) {
        last.left_counts = Some(s.into_map());
    }
    out
}

/// Run the walk from 0 until it first hits `n` (or the step budget runs out).
pub fn simulate_first_passage<R: RngCore + ?Sized>(
    env: &mut EnvRealization,
    n: i64,
    rng: &mut R,
    opts: WalkOptions,
) -> Result<FirstPassageRecord> {
    if n < 1 {
        return Err(Error::InvalidParam(format!("target site must be >= 1, got {n}")));
    }
    if opts.budget < n as u64 {
        return Err(Error::InvalidParam("step budget below the target distance".into()));
    }
    Ok(first_passage_ladder(env, &[n], rng, opts).pop().expect("one target"))
}

/// Position after exactly `k` steps from 0.
pub fn simulate_position<R: RngCore + ?Sized>(
    env: &mut EnvRealization,
    k: u64,
    rng: &mut R,
    keep_trajectory: bool,
) -> WalkSample {
    let mut cur = Cursor::new(env, 0);
    let mut path = keep_trajectory.then(|| {
        let mut v = Vec::with_capacity(k as usize + 1);
        v.push(0);
        v
    });
    for _ in 0..k {
        cur.step(env, rng);
        if let Some(p) = path.as_mut() {
            p.push(cur.x);
        }
    }
    WalkSample { k_steps: k, x_k: cur.x, trajectory: path }
}

/// Positions at each increasing step count in `ks`, along one trajectory.
pub fn position_ladder<R: RngCore + ?Sized>(env: &mut EnvRealization, ks: &[u64], rng: &mut R) -> Vec<i64> {
    let mut cur = Cursor::new(env, 0);
    let mut done = 0u64;
    ks.iter()
        .map(|&k| {
            while done < k {
                cur.step(env, rng);
                done += 1;
            }
            cur.x
        })
        .collect()
}

/// `sum_{0 <= j <= S_n} U_j^{(S_n)}` under the annealed law, drawing the
/// environment and the walk from `rng`.
pub fn annealed_left_steps_with(spec: &EnvSpec, n_blocks: u64, rng: &mut Stream, budget: u64) -> Result<u64> {
    if n_blocks < 1 {
        return Err(Error::InvalidParam("n_blocks must be >= 1".into()));
    }
    let mut env = sample_env(spec, rng.next_u64());
    let target = env.site(n_blocks as i64);
    let rec = simulate_first_passage(&mut env, target, rng, WalkOptions { budget, track_sites: false })?;
    if rec.truncated {
        return Err(Error::BudgetExceeded(format!("walk to S_{n_blocks} = {target} exceeded {budget} steps")));
    }
    Ok(rec.left_nonneg)
}

pub fn annealed_left_steps(spec: &EnvSpec, n_blocks: u64, seed: u64) -> Result<u64> {
    annealed_left_steps_with(spec, n_blocks, &mut split(seed, tag::WALK, 0), DEFAULT_STEP_BUDGET)
}
