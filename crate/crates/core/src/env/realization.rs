use serde::{Deserialize, Serialize};

use super::EnvSpec;
use crate::rng::{split, tag, Stream};

/// One block of the environment: spacing `xi_k = S_k - S_{k-1}` and the
/// bias `lambda_k` used at the marked site `S_{k-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub xi: u64,
    pub lambda: f64,
    pub rho: f64,
}

/// Lazily grown two-sided environment.
///
/// Block `k >= 1` lives in `pos[k-1]`, block `k <= 0` in `neg[-k]`.
/// `pos_sites[k] = S_k` for `k >= 0`, `neg_sites[j] = S_{-j}` for `j >= 0`.
#[derive(Clone, Debug)]
pub struct EnvRealization {
    spec: EnvSpec,
    pos: Vec<Block>,
    neg: Vec<Block>,
    pos_sites: Vec<i64>,
    neg_sites: Vec<i64>,
    pos_rng: Stream,
    neg_rng: Stream,
}

pub fn sample_env(spec: &EnvSpec, seed: u64) -> EnvRealization {
    EnvRealization::new(spec, seed)
}

impl EnvRealization {
    pub fn new(spec: &EnvSpec, seed: u64) -> Self {
        EnvRealization {
            spec: spec.clone(),
            pos: Vec::new(),
            neg: Vec::new(),
            pos_sites: vec![0],
            neg_sites: vec![0],
            pos_rng: split(seed, tag::ENV_POSITIVE, 0),
            neg_rng: split(seed, tag::ENV_NEGATIVE, 0),
        }
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn grow_pos(&mut self) {
        let b = self.spec.sample_block(&mut self.pos_rng);
        let last = *self.pos_sites.last().expect("S_0");
        self.pos_sites.push(last + b.xi as i64);
        self.pos.push(b);
    }

    fn grow_neg(&mut self) {
        let b = self.spec.sample_block(&mut self.neg_rng);
        let last = *self.neg_sites.last().expect("S_0");
        self.neg_sites.push(last - b.xi as i64);
        self.neg.push(b);
    }

    pub fn block(&mut self, k: i64) -> Block {
        if k >= 1 {
            let i = (k - 1) as usize;
            while self.pos.len() <= i {
                self.grow_pos();
            }
            self.pos[i]
        } else {
            let i = (-k) as usize;
            while self.neg.len() <= i {
                self.grow_neg();
            }
            self.neg[i]
        }
    }

    /// Marked site `S_k`.
    pub fn site(&mut self, k: i64) -> i64 {
        if k >= 0 {
            let i = k as usize;
            while self.pos_sites.len() <= i {
                self.grow_pos();
            }
            self.pos_sites[i]
        } else {
            let i = (-k) as usize;
            while self.neg_sites.len() <= i {
                self.grow_neg();
            }
            self.neg_sites[i]
        }
    }

    /// Index `k` of the block containing `n`: `S_k <= n < S_{k+1}`.
    pub fn block_of(&mut self, n: i64) -> i64 {
        if n >= 0 {
            while *self.pos_sites.last().expect("S_0") <= n {
                self.grow_pos();
            }
            (self.pos_sites.partition_point(|&s| s <= n) - 1) as i64
        } else {
            while *self.neg_sites.last().expect("S_0") > n {
                self.grow_neg();
            }
            // neg_sites is strictly decreasing; first j with S_{-j} <= n.
            -(self.neg_sites.partition_point(|&s| s > n) as i64)
        }
    }

    /// Probability of a step to the right from site `n`.
    pub fn omega_at(&mut self, n: i64) -> f64 {
        let k = self.block_of(n);
        if self.site(k) == n {
            self.block(k + 1).lambda
        } else {
            0.5
        }
    }

    /// Number of materialized blocks on each side.
    pub fn materialized(&self) -> (usize, usize) {
        (self.pos.len(), self.neg.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{LambdaLaw, SlowFactor, XiLaw};
    use rand::Rng;

    fn three_seven() -> EnvSpec {
        EnvSpec::independent(XiLaw::Deterministic { m: 3 }, LambdaLaw::Constant { lambda: 0.7 }).unwrap()
    }

    #[test]
    fn degenerate_env() {
        let mut e = sample_env(&three_seven(), 99);
        for k in -20..20 {
            let b = e.block(k);
            assert_eq!(b.xi, 3);
            assert_eq!(b.lambda, 0.7);
        }
        assert_eq!(e.omega_at(0), 0.7);
        assert_eq!(e.omega_at(1), 0.5);
        assert_eq!(e.omega_at(2), 0.5);
        assert_eq!(e.omega_at(3), 0.7);
        assert_eq!(e.omega_at(-3), 0.7);
        assert_eq!(e.omega_at(-1), 0.5);
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = EnvSpec::independent(
            XiLaw::DiscretePareto { beta: 1.5, slowly_varying: SlowFactor::Constant },
            LambdaLaw::Beta { a: 2.0, b: 1.0 },
        )
        .unwrap();
        let mut a = sample_env(&spec, 5);
        let mut b = sample_env(&spec, 5);
        // Different access orders must not matter.
        let fwd: Vec<Block> = (-50..50).map(|k| a.block(k)).collect();
        let bwd: Vec<Block> = (-50..50).rev().map(|k| b.block(k)).collect();
        assert!(fwd.iter().eq(bwd.iter().rev()));
        assert_eq!(a.block(7), a.block(7));
    }

    #[test]
    fn sites_and_probes() {
        let spec = EnvSpec::independent(XiLaw::UniformInt { k: 6 }, LambdaLaw::Beta { a: 3.0, b: 1.0 }).unwrap();
        let mut e = sample_env(&spec, 3);
        for k in -200..200i64 {
            let d = e.site(k) - e.site(k - 1);
            assert_eq!(d, e.block(k).xi as i64);
            assert!(d >= 1);
        }
        assert_eq!(e.site(0), 0);
        let mut rng = crate::rng::split(1, 2, 3);
        for _ in 0..1000 {
            let n: i64 = rng.random_range(-500..500);
            let k = e.block_of(n);
            let (lo, hi) = (e.site(k), e.site(k + 1));
            assert!(lo <= n && n < hi);
            if n == lo {
                assert_eq!(e.omega_at(n), e.block(k + 1).lambda);
            } else {
                assert_eq!(e.omega_at(n), 0.5);
            }
        }
    }
}
