//! Discrete distributions, convex-order checks, and Monte Carlo simulators.
//!
//! Everything here is exact or seeded: distributions come from iterative
//! convolution (with an arbitrary-precision mode for test oracles), and the
//! simulators shard trials across substreams so that parallel and sequential
//! execution produce identical counts.

use std::sync::Arc;

use num::rational::BigRational;
use num::traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::rng::RngStream;
use crate::special_fn::ballot_f_f64;
use crate::{Error, Result};

/// Success probabilities of independent Bernoulli trials.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliVector(Vec<f64>);

impl BernoulliVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Finite distribution of a non-negative-integer random variable.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    support_offset: u64,
    pmf: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(support_offset: u64, pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() || pmf.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidArgument("pmf must be non-empty and non-negative".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("pmf sums to {total}, not 1")));
        }
        Ok(Self { support_offset, pmf })
    }

    pub fn point_mass(value: u64) -> Self {
        Self { support_offset: value, pmf: vec![1.0] }
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn support_max(&self) -> u64 {
        self.support_offset + self.pmf.len() as u64 - 1
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(k, p)| (self.support_offset + k as u64) as f64 * p)
            .sum()
    }

    /// `E[f(X)]` for an arbitrary integer function.
    pub fn expect_fn(&self, f: impl Fn(u64) -> f64) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(k, p)| p * f(self.support_offset + k as u64))
            .sum()
    }
}

/// A real-valued function on the non-negative integers, optionally certified
/// discrete-convex (`g(k) <= (g(k-1) + g(k+1))/2`) up to a horizon.
#[derive(Clone)]
pub struct ConvexIntFunction {
    eval: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    certified_to: Option<u64>,
}

impl ConvexIntFunction {
    pub fn from_fn(f: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f), certified_to: None }
    }

    pub fn value(&self, k: u64) -> f64 {
        (self.eval)(k)
    }

    pub fn certified_to(&self) -> Option<u64> {
        self.certified_to
    }

    /// Check the midpoint convexity inequalities up to `horizon` and mark the
    /// function certified on success. Allows 1e-12 slack relative to the
    /// local scale for rounding in the evaluator.
    pub fn certify_convex(mut self, horizon: u64) -> Result<Self> {
        for k in 1..=horizon {
            let mid = self.value(k);
            let avg = 0.5 * (self.value(k - 1) + self.value(k + 1));
            let scale = mid.abs().max(avg.abs()).max(1.0);
            if mid > avg + 1e-12 * scale {
                return Err(Error::InvalidArgument(format!(
                    "convexity fails at k = {k}: g(k) = {mid} > {avg}"
                )));
            }
        }
        self.certified_to = Some(horizon);
        Ok(self)
    }
}

impl std::fmt::Debug for ConvexIntFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvexIntFunction").field("certified_to", &self.certified_to).finish()
    }
}

/// `g(k) = (F(k) + F(k+1))/2`, the convex function produced by conditioning
/// a half-probability Bernoulli out of the ballot expectation.
pub fn ballot_pair_mean() -> ConvexIntFunction {
    ConvexIntFunction::from_fn(|k| 0.5 * (ballot_f_f64(k) + ballot_f_f64(k + 1)))
}

/// Exact law of `M = M_1 + ... + M_n` by iterative convolution; support
/// `{0, ..., n}`.
pub fn poisson_binomial_pmf(p: &BernoulliVector) -> DiscreteDist {
    let mut pmf = vec![1.0f64];
    for &pi in p.probs() {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &q) in pmf.iter().enumerate() {
            next[k] += q * (1.0 - pi);
            next[k + 1] += q * pi;
        }
        pmf = next;
    }
    DiscreteDist { support_offset: 0, pmf }
}

/// Exact-rational Poisson-binomial convolution; test-oracle mode for small n.
pub fn poisson_binomial_pmf_exact(p: &[BigRational]) -> Vec<BigRational> {
    let mut pmf = vec![BigRational::one()];
    for pi in p {
        let mut next = vec![BigRational::zero(); pmf.len() + 1];
        let comp = BigRational::one() - pi;
        for (k, q) in pmf.iter().enumerate() {
            next[k] += q * &comp;
            next[k + 1] += q * pi;
        }
        pmf = next;
    }
    pmf
}

/// Truncated, renormalized Poisson law with mean `z`. The truncation point
/// `K` (returned alongside the distribution) is the smallest integer whose
/// Chernoff tail bound `e^{-z} (ez/K)^K` falls below `tail_eps`.
pub fn poisson_truncated(z: f64, tail_eps: f64) -> Result<(DiscreteDist, u64)> {
    if z < 0.0 || !(0.0..=1e-6).contains(&tail_eps) || tail_eps == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "need z >= 0 and 0 < tail_eps <= 1e-6, got z = {z}, tail_eps = {tail_eps}"
        )));
    }
    if z == 0.0 {
        return Ok((DiscreteDist::point_mass(0), 0));
    }
    let mut k = z.ceil().max(1.0) as u64;
    // log of e^{-z} (ez/K)^K = -z + K (1 + ln z - ln K)
    while -z + k as f64 * (1.0 + z.ln() - (k as f64).ln()) >= tail_eps.ln() {
        k += 1;
    }
    let mut pmf = Vec::with_capacity(k as usize + 1);
    let mut term = (-z).exp();
    let mut total = 0.0;
    for i in 0..=k {
        if i > 0 {
            term *= z / i as f64;
        }
        pmf.push(term);
        total += term;
    }
    for p in &mut pmf {
        *p /= total;
    }
    Ok((DiscreteDist { support_offset: 0, pmf }, k))
}

/// `E[g(X)]` for a certified-or-not convex integer function.
pub fn expect(dist: &DiscreteDist, g: &ConvexIntFunction) -> f64 {
    dist.expect_fn(|k| g.value(k))
}

/// Outcome of the Bernoulli-sum vs Poisson convex-order comparison.
#[derive(Debug, Clone, Copy)]
pub struct MajorizationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compare `E[g(S)]` for `S` Poisson-binomial against `E[g(Z)]` for a Poisson
/// `Z` with the same mean. `g` must be certified convex on the union of both
/// supports plus two.
pub fn hoeffding_majorization_check(
    p: &BernoulliVector,
    g: &ConvexIntFunction,
) -> Result<MajorizationCheck> {
    let s_dist = poisson_binomial_pmf(p);
    let (z_dist, k) = poisson_truncated(p.mean(), 1e-12)?;
    let needed = s_dist.support_max().max(k) + 2;
    if g.certified_to().is_none_or(|h| h < needed) {
        return Err(Error::UncertifiedConvex);
    }
    let lhs = expect(&s_dist, g);
    let rhs = expect(&z_dist, g);
    Ok(MajorizationCheck { lhs, rhs, holds: lhs <= rhs + 1e-10 })
}

/// Monte Carlo estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_err: f64,
    pub trials: u64,
}

impl MonteCarloEstimate {
    fn from_successes(successes: u64, trials: u64) -> Self {
        let p = successes as f64 / trials as f64;
        Self { estimate: p, std_err: (p * (1.0 - p) / trials as f64).sqrt(), trials }
    }
}

// Trials per shard. Shard count depends only on the trial count, so results
// are identical whether shards run on one thread or many.
const SHARD_TRIALS: u64 = 1 << 14;

fn shard_successes<F>(trials: u64, stream: RngStream, parallel: bool, trial: F) -> u64
where
    F: Fn(&mut ChaCha12Rng) -> bool + Sync,
{
    let shards = trials.div_ceil(SHARD_TRIALS).max(1);
    let run_shard = |shard: u64| -> u64 {
        let begin = shard * SHARD_TRIALS;
        let count = SHARD_TRIALS.min(trials - begin);
        let mut rng = stream.substream(shard).rng();
        (0..count).filter(|_| trial(&mut rng)).count() as u64
    };
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..shards).into_par_iter().map(run_shard).sum();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = parallel;
    (0..shards).map(run_shard).sum()
}

/// Monte Carlo estimate of `P^n`: the probability that the reverse partial
/// sums of `Z_i = F_i - H_i` (both Bernoulli with success probability
/// `alpha_i`) stay non-negative for `k = n, ..., 1`.
///
/// `alphas[i]` holds `alpha_{i+1}`; `n <= alphas.len()`.
pub fn simulate_walk_nonneg(
    alphas: &[f64],
    n: usize,
    trials: u64,
    stream: RngStream,
) -> MonteCarloEstimate {
    simulate_walk_nonneg_with(alphas, n, trials, stream, true)
}

/// Same computation with explicit control over parallel sharding; used by
/// the benchmarks and the determinism tests.
pub fn simulate_walk_nonneg_with(
    alphas: &[f64],
    n: usize,
    trials: u64,
    stream: RngStream,
    parallel: bool,
) -> MonteCarloEstimate {
    assert!(n <= alphas.len(), "n exceeds schedule length");
    assert!(trials >= 1);
    if n == 0 {
        return MonteCarloEstimate { estimate: 1.0, std_err: 0.0, trials };
    }
    let successes = shard_successes(trials, stream, parallel, |rng| {
        let mut sum = 0i64;
        for k in (0..n).rev() {
            let a = alphas[k];
            let f = i64::from(rng.random::<f64>() < a);
            let h = i64::from(rng.random::<f64>() < a);
            sum += f - h;
            if sum < 0 {
                return false;
            }
        }
        true
    });
    MonteCarloEstimate::from_successes(successes, trials)
}

/// Monte Carlo estimate of `c_{mn}` by direct simulation of the pursuit
/// event: the hare escapes iff the fox's fall count on every suffix
/// `{k, ..., n}` strictly exceeds the hare's on `{k, ..., m}`.
pub fn simulate_fox_hare(
    alphas: &[f64],
    m: usize,
    n: usize,
    trials: u64,
    stream: RngStream,
) -> MonteCarloEstimate {
    simulate_fox_hare_with(alphas, m, n, trials, stream, true)
}

pub fn simulate_fox_hare_with(
    alphas: &[f64],
    m: usize,
    n: usize,
    trials: u64,
    stream: RngStream,
    parallel: bool,
) -> MonteCarloEstimate {
    assert!(m <= n && n <= alphas.len(), "need 0 <= m <= n <= schedule length");
    assert!(trials >= 1);
    if m == n {
        // the k = m+1 condition compares two empty sums, so the event is empty
        return MonteCarloEstimate { estimate: 0.0, std_err: 0.0, trials };
    }
    let successes = shard_successes(trials, stream, parallel, |rng| {
        let fox: Vec<i64> =
            (0..n).map(|i| i64::from(rng.random::<f64>() < alphas[i])).collect();
        let hare: Vec<i64> =
            (0..m).map(|i| i64::from(rng.random::<f64>() < alphas[i])).collect();
        // k = m+1: fox falls on {m+1..n}, hare sum empty
        let mut fox_sum: i64 = fox[m..].iter().sum();
        let mut hare_sum = 0i64;
        if fox_sum <= hare_sum {
            return false;
        }
        for k in (0..m).rev() {
            fox_sum += fox[k];
            hare_sum += hare[k];
            if fox_sum <= hare_sum {
                return false;
            }
        }
        true
    });
    MonteCarloEstimate::from_successes(successes, trials)
}
