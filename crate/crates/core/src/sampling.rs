//! Discrete samplers shared by the walk and branching simulators.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma, Poisson};

/// Largest count summed geometric-by-geometric before switching to the
/// gamma-Poisson mixture.
pub const DIRECT_SUM_LIMIT: u64 = 64;
/// Largest count for the exact bit-counting sampler at success probability 1/2.
const FAIR_COIN_LIMIT: u64 = 1 << 14;
/// Poisson means above this are drawn from the normal approximation.
const POISSON_NORMAL_LIMIT: f64 = 1e15;

/// Uniform on the half-open interval (0, 1].
#[inline]
pub fn unit_open0<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

/// Success/failure parametrization of a geometric law on {0,1,...}:
/// P{G = k} = p (1-p)^k. Holds `ln(1-p)` so that p close to one keeps full
/// precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeomLaw {
    pub p: f64,
    ln_q: f64,
    fair: bool,
}

impl GeomLaw {
    pub const FAIR: GeomLaw = GeomLaw { p: 0.5, ln_q: -std::f64::consts::LN_2, fair: true };

    pub fn new(p: f64) -> Self {
        debug_assert!(p > 0.0 && p < 1.0);
        Self { p, ln_q: (-p).ln_1p(), fair: p == 0.5 }
    }

    /// The geometric law whose mean `(1-p)/p` equals `rho`.
    pub fn from_rho(rho: f64) -> Self {
        let p = 1.0 / (1.0 + rho);
        let ln_q = -(1.0 / rho).ln_1p();
        Self { p, ln_q, fair: p == 0.5 }
    }

    pub fn mean(&self) -> f64 {
        self.ln_q.exp() / self.p
    }

    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.fair {
            return fair_negative_binomial(rng, 1);
        }
        let u = unit_open0(rng);
        let g = (u.ln() / self.ln_q).floor();
        if g >= u64::MAX as f64 {
            u64::MAX
        } else {
            g as u64
        }
    }

    /// Sum of `r` independent draws: NegativeBinomial(r, p) counting failures.
    pub fn sum_of<R: RngCore + ?Sized>(&self, rng: &mut R, r: u64) -> u64 {
        if r == 0 {
            return 0;
        }
        if self.fair && r <= FAIR_COIN_LIMIT {
            return fair_negative_binomial(rng, r);
        }
        if r <= DIRECT_SUM_LIMIT {
            let mut total = 0u64;
            for _ in 0..r {
                total = total.saturating_add(self.sample(rng));
            }
            return total;
        }
        gamma_poisson(rng, r as f64, self.ln_q.exp() / self.p)
    }
}

/// NegativeBinomial(r, 1/2) from raw coin flips: the number of zero bits
/// before the r-th one bit of the stream.
fn fair_negative_binomial<R: RngCore + ?Sized>(rng: &mut R, mut r: u64) -> u64 {
    let mut zeros = 0u64;
    loop {
        let mut w = rng.next_u64();
        let ones = w.count_ones() as u64;
        if ones >= r {
            for _ in 1..r {
                w &= w - 1;
            }
            let pos = w.trailing_zeros() as u64;
            return zeros + pos - (r - 1);
        }
        zeros += 64 - ones;
        r -= ones;
    }
}

/// Poisson(Gamma(shape, scale)) mixture, i.e. NegativeBinomial with
/// real-valued size `shape` and mean `shape * scale`.
pub fn gamma_poisson<R: RngCore + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> u64 {
    let lambda = Gamma::new(shape, scale)
        .expect("gamma parameters are positive")
        .sample(rng);
    poisson(rng, lambda)
}

pub fn poisson<R: RngCore + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    if lambda > POISSON_NORMAL_LIMIT {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        let x = (lambda + lambda.sqrt() * z).round();
        return if x <= 0.0 { 0 } else { x.min(u64::MAX as f64) as u64 };
    }
    Poisson::new(lambda).expect("finite positive mean").sample(rng) as u64
}

/// Reference sampler: one geometric draw per particle, regardless of size.
pub fn negative_binomial_per_particle<R: RngCore + ?Sized>(rng: &mut R, r: u64, p: f64) -> u64 {
    let ln_q = (-p).ln_1p();
    (0..r)
        .map(|_| (unit_open0(rng).ln() / ln_q).floor() as u64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::split;
    use crate::harness::two_sample_ks;

    fn mean(xs: &[u64]) -> f64 {
        xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64
    }

    #[test]
    fn geometric_half_mean_is_one() {
        let mut rng = split(1, 2, 3);
        let law = GeomLaw::new(0.5);
        let xs: Vec<u64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
        assert!((mean(&xs) - 1.0).abs() < 0.004, "{}", mean(&xs));
    }

    #[test]
    fn fair_negative_binomial_mean_and_variance() {
        let mut rng = split(1, 2, 4);
        let law = GeomLaw::new(0.5);
        for &r in &[1u64, 5, 63, 64, 65, 200] {
            let xs: Vec<u64> = (0..200_000).map(|_| law.sum_of(&mut rng, r)).collect();
            let m = mean(&xs);
            let v = xs.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            // NB(r, 1/2): mean r, variance 2r.
            let se = (2.0 * r as f64 / xs.len() as f64).sqrt();
            assert!((m - r as f64).abs() < 4.0 * se, "r={r} mean={m}");
            assert!((v / (2.0 * r as f64) - 1.0).abs() < 0.03, "r={r} var={v}");
        }
    }

    #[test]
    fn from_rho_matches_mean() {
        for &rho in &[1e-12, 0.3, 0.5, 1.0, 7.0] {
            let law = GeomLaw::from_rho(rho);
            assert!((law.mean() / rho - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn aggregated_matches_per_particle_in_law() {
        let grid = [(3u64, 0.3), (0, 0.7), (20, 0.5), (80, 0.45), (500, 0.6)];
        for (i, &(z, w)) in grid.iter().enumerate() {
            let law = GeomLaw::new(w);
            let mut a_rng = split(11, 1, i as u64);
            let mut b_rng = split(11, 2, i as u64);
            let a: Vec<f64> = (0..100_000).map(|_| law.sum_of(&mut a_rng, z + 1) as f64).collect();
            let b: Vec<f64> = (0..100_000)
                .map(|_| negative_binomial_per_particle(&mut b_rng, z + 1, w) as f64)
                .collect();
            let ks = two_sample_ks(&a, &b).unwrap();
            assert!(ks.pvalue > 0.01, "z={z} w={w} p={}", ks.pvalue);
        }
    }
}
