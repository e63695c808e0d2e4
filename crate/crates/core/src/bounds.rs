//! Schedule-derived weights, the recursive bound table, the residual bound
//! `P^n` by independent routes, and the envelope constants.
//!
//! `c_{mn}` bounds `||x_m - x_n||` for any non-expansive map run with the
//! schedule; `P^n = c_{n,n+1} / alpha_{n+1}` bounds the residual itself, and
//! equals `E[F(M)]` for a Poisson-binomial `M` built from the schedule. The
//! product `sqrt(sum alpha_i (1 - alpha_i)) * P^n` never exceeds
//! `1/sqrt(pi)`.

use serde::{Deserialize, Serialize};

use crate::rng::RngStream;
use crate::special_fn::{ballot_f_f64, bessel_i_scaled, hyp2f1_terminating};
use crate::stochastic::{poisson_binomial_pmf, BernoulliVector};
use crate::{Error, Result, INV_SQRT_PI, SQRT_2_OVER_PI};

/// Relaxation parameters `alpha_1 .. alpha_N`, with the fixed conventions
/// `rho_0 = alpha_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    alphas: Vec<f64>,
}

impl StepSchedule {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidArgument(format!("alpha {a} outside [0, 1]")));
        }
        Ok(Self { alphas })
    }

    pub fn constant(alpha: f64, len: usize) -> Result<Self> {
        Self::new(vec![alpha; len])
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// `alpha_k`, 1-based, with `alpha_0 = 1` by convention.
    pub fn alpha(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.alphas[k - 1]
        }
    }

    /// `sum_{i=1}^n alpha_i (1 - alpha_i)`.
    pub fn sum_s(&self, n: usize) -> f64 {
        self.alphas[..n].iter().map(|a| a * (1.0 - a)).sum()
    }

    /// Bernoulli success probabilities `p_i = 2 alpha_i (1 - alpha_i)` of the
    /// move/stay variables, for `i = 1..n`.
    pub fn move_probs(&self, n: usize) -> BernoulliVector {
        let p: Vec<f64> = self.alphas[..n].iter().map(|a| 2.0 * a * (1.0 - a)).collect();
        BernoulliVector::new(p).expect("2a(1-a) lies in [0, 1/2]")
    }
}

/// `(pi_0^n, ..., pi_n^n)` with `pi_k^n = alpha_k prod_{j=k+1}^n (1 - alpha_j)`;
/// the weights expressing `x_n` as a convex combination of `T x_{k-1}`.
pub fn weights(sched: &StepSchedule, n: usize) -> Vec<f64> {
    assert!(n <= sched.len(), "n exceeds schedule length");
    let mut w = vec![0.0; n + 1];
    let mut suffix = 1.0;
    for k in (0..=n).rev() {
        w[k] = sched.alpha(k) * suffix;
        suffix *= 1.0 - sched.alpha(k);
    }
    w
}

/// Triangular table of the recursive distance bounds `c_{mn}`,
/// `-1 <= m <= n <= n_max`.
#[derive(Debug, Clone)]
pub struct BoundTable {
    n_max: usize,
    // rows[n][m + 1] = c_{m,n}
    rows: Vec<Vec<f64>>,
}

impl BoundTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `c_{mn}`; accepts `m = -1`.
    pub fn get(&self, m: isize, n: usize) -> f64 {
        assert!(m >= -1 && (m as i64) <= n as i64 && n <= self.n_max);
        self.rows[n][(m + 1) as usize]
    }

    fn set(&mut self, m: isize, n: usize, value: f64) {
        self.rows[n][(m + 1) as usize] = value;
    }

    fn empty(n_max: usize) -> Self {
        let rows = (0..=n_max).map(|n| vec![0.0; n + 2]).collect();
        Self { n_max, rows }
    }
}

/// Fill the table by the definitional double-sum recursion. O(n^4) but it is
/// the ground truth the fast path is validated against.
pub fn c_table(sched: &StepSchedule, n_max: usize) -> BoundTable {
    assert!(n_max <= sched.len(), "n_max exceeds schedule length");
    let w: Vec<Vec<f64>> = (0..=n_max).map(|n| weights(sched, n)).collect();
    let mut table = BoundTable::empty(n_max);
    for n in 0..=n_max {
        table.set(-1, n, 1.0);
        for m in 0..=n {
            let mut acc = 0.0;
            for j in 0..=m {
                let cj = if j == 0 {
                    // c_{-1,k-1} = 1 for every k
                    let s: f64 = (m + 1..=n).map(|k| w[n][k]).sum();
                    acc += w[m][0] * s;
                    continue;
                } else {
                    j as isize - 1
                };
                for k in m + 1..=n {
                    acc += w[m][j] * w[n][k] * table.get(cj, k - 1);
                }
            }
            table.set(m as isize, n, acc);
        }
    }
    table
}

/// Fill the table by the three-term recurrence; O(n^2). Produces the same
/// values as [`c_table`] up to rounding.
pub fn c_table_fast(sched: &StepSchedule, n_max: usize) -> BoundTable {
    assert!(n_max <= sched.len(), "n_max exceeds schedule length");
    let mut table = BoundTable::empty(n_max);
    for n in 0..=n_max {
        table.set(-1, n, 1.0);
        table.set(n as isize, n, 0.0);
        for m in 0..n {
            let am = sched.alpha(m);
            let an = sched.alpha(n);
            let (cm, cn) = (1.0 - am, 1.0 - an);
            let value = cm * table.get(m as isize - 1, n)
                + cn * table.get(m as isize, n - 1)
                + (an * am - cn * cm) * table.get(m as isize - 1, n - 1);
            table.set(m as isize, n, value);
        }
    }
    table
}

/// Maximum absolute residual of the three-term recurrence over
/// `1 <= m < n <= n_max`. A table built from the double-sum recursion
/// satisfies it to rounding; a perturbed table does not.
pub fn recurrence_check(table: &BoundTable, sched: &StepSchedule) -> f64 {
    let mut worst: f64 = 0.0;
    for n in 2..=table.n_max() {
        for m in 1..n {
            let am = sched.alpha(m);
            let an = sched.alpha(n);
            let (cm, cn) = (1.0 - am, 1.0 - an);
            let predicted = cm * table.get(m as isize - 1, n)
                + cn * table.get(m as isize, n - 1)
                + (an * am - cn * cm) * table.get(m as isize - 1, n - 1);
            worst = worst.max((table.get(m as isize, n) - predicted).abs());
        }
    }
    worst
}

/// `P^n` via the bound table: `c_{n,n+1} / alpha_{n+1}`.
///
/// Fails when `alpha_{n+1} = 0` (0/0); use [`pn_exact`] there.
pub fn pn_recursion(sched: &StepSchedule, n: usize) -> Result<f64> {
    if n + 1 > sched.len() {
        return Err(Error::InvalidArgument(format!(
            "recursion route needs alpha_{}, schedule has length {}",
            n + 1,
            sched.len()
        )));
    }
    let a = sched.alpha(n + 1);
    if a == 0.0 {
        return Err(Error::ZeroRelaxation(n + 1));
    }
    let table = c_table(sched, n + 1);
    Ok(table.get(n as isize, n + 1) / a)
}

/// `P^n` via the ballot expectation: `E[F(M)]` with
/// `M ~ PoissonBinomial(2 alpha_i (1 - alpha_i))`.
pub fn pn_exact(sched: &StepSchedule, n: usize) -> f64 {
    assert!(n <= sched.len(), "n exceeds schedule length");
    let dist = poisson_binomial_pmf(&sched.move_probs(n));
    dist.expect_fn(ballot_f_f64)
}

/// The assembled rate bound for one schedule prefix.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateReport {
    pub n: usize,
    pub sum_s: f64,
    pub pn: f64,
    pub product: f64,
    pub bound_ok: bool,
}

/// `sqrt(sum_s) * P^n` with `P^n` by the exact route; `bound_ok` checks the
/// product against `1/sqrt(pi)` at tolerance 1e-10.
pub fn rate_report(sched: &StepSchedule, n: usize) -> RateReport {
    let sum_s = sched.sum_s(n);
    let pn = pn_exact(sched, n);
    let product = sum_s.sqrt() * pn;
    RateReport { n, sum_s, pn, product, bound_ok: product <= INV_SQRT_PI + 1e-10 }
}

/// `R^n(p) = sqrt(p_1 + ... + p_n) E[F(M_1 + ... + M_n)]`; each `p_i` must
/// lie in [0, 1/2].
pub fn rn_value(p: &BernoulliVector) -> Result<f64> {
    if let Some(pi) = p.probs().iter().find(|pi| **pi > 0.5) {
        return Err(Error::InvalidArgument(format!("p = {pi} exceeds 1/2")));
    }
    let dist = poisson_binomial_pmf(p);
    Ok(p.mean().sqrt() * dist.expect_fn(ballot_f_f64))
}

fn golden_max(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Numerically maximize `R^n` over `[0, 1/2]^n` by multi-start coordinate
/// ascent with a golden-section line search per coordinate.
pub fn rn_maximize(n: usize, grid_steps: usize) -> (BernoulliVector, f64) {
    assert!(n >= 1 && grid_steps >= 2);
    let objective = |p: &[f64]| {
        rn_value(&BernoulliVector::new(p.to_vec()).expect("coords in [0, 1/2]"))
            .expect("coords below 1/2")
    };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for g in 1..=grid_steps {
        let u = 0.5 * g as f64 / grid_steps as f64;
        starts.push(vec![u; n]);
        // maximizer-shaped starts: some coordinates pinned at 1/2
        for fixed in 1..n {
            let mut p = vec![0.5; fixed];
            p.extend(std::iter::repeat_n(u, n - fixed));
            starts.push(p);
        }
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mut p in starts {
        let mut value = objective(&p);
        loop {
            let mut improved = false;
            for i in 0..n {
                let (xi, vi) = golden_max(0.0, 0.5, 1e-10, |x| {
                    let mut q = p.clone();
                    q[i] = x;
                    objective(&q)
                });
                if vi > value + 1e-13 {
                    p[i] = xi;
                    value = vi;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((p, value));
        }
    }
    let (p, value) = best.expect("at least one start");
    (BernoulliVector::new(p).expect("valid probabilities"), value)
}

/// `sqrt(n u) * E[F(Binomial(n, u))]` for `n = 1..n_max`; increases in `n`
/// toward `sqrt(2/pi)`.
pub fn equal_prob_curve(u: f64, n_max: usize) -> Vec<f64> {
    assert!(u > 0.0 && u <= 0.5, "u must lie in (0, 1/2]");
    (1..=n_max)
        .map(|n| ((n as f64) * u).sqrt() * hyp2f1_terminating(n as u64, u))
        .collect()
}

/// The Bessel envelope
/// `h(z) = sqrt(z + 1/2) e^{-z} [I_0(z) + (1 - 1/(2z)) I_1(z)]`,
/// evaluated through exponentially scaled Bessel values so it stays finite
/// for large `z`.
pub fn h_envelope(z: f64) -> f64 {
    assert!(z > 0.0, "z must be positive");
    let i0 = bessel_i_scaled(0, z);
    let i1 = bessel_i_scaled(1, z);
    (z + 0.5).sqrt() * (i0 + (1.0 - 0.5 / z) * i1)
}

/// The bracket constants of the sharpness discussion.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Constants {
    /// `1/sqrt(pi)`, the proved rate constant.
    pub kappa: f64,
    /// `sqrt(2/pi)`, the supremum of `R^n` and of the envelope.
    pub sqrt_2_over_pi: f64,
    /// `max_{x >= 0} sqrt(x) e^{-x} I_0(x)`, the lower end of the bracket.
    pub eta: f64,
    /// Location of the maximum defining `eta`.
    pub eta_argmax: f64,
}

/// Compute the bracket constants. `eta` comes from a golden-section search
/// on [0.1, 10]; unimodality of the objective there is checked first by the
/// sign pattern of finite differences on a grid.
pub fn constants() -> Constants {
    let f = |x: f64| x.sqrt() * bessel_i_scaled(0, x);
    let grid: Vec<f64> = (0..=400).map(|i| 0.1 + (10.0 - 0.1) * i as f64 / 400.0).collect();
    let mut sign_changes = 0;
    let mut last_up = true;
    for pair in grid.windows(2) {
        let up = f(pair[1]) >= f(pair[0]);
        if up != last_up {
            sign_changes += 1;
        }
        last_up = up;
    }
    assert!(sign_changes <= 1, "eta objective not unimodal on [0.1, 10]");
    let (eta_argmax, eta) = golden_max(0.1, 10.0, 1e-10, f);
    Constants { kappa: INV_SQRT_PI, sqrt_2_over_pi: SQRT_2_OVER_PI, eta, eta_argmax }
}

/// Declarative schedule description, the CLI/JSON-facing constructor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleSpec {
    /// `alpha_i = alpha` for `i = 1..len`.
    Const { alpha: f64, len: usize },
    /// The sharpness construction: `m` entries of `u/m` then `m` entries of
    /// `1 - u/m`.
    TwoBlock { m: usize, u: f64 },
    /// `alpha_i ~ Uniform[0, 1]`, seeded.
    UniformRandom { len: usize, seed: u64 },
    /// Explicit list.
    Explicit { alphas: Vec<f64> },
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<StepSchedule> {
        match self {
            Self::Const { alpha, len } => StepSchedule::constant(*alpha, *len),
            Self::TwoBlock { m, u } => {
                let m = *m;
                if m == 0 || *u <= 0.0 || *u >= m as f64 {
                    return Err(Error::InvalidArgument(format!(
                        "two-block needs m >= 1 and 0 < u < m, got m = {m}, u = {u}"
                    )));
                }
                let a = u / m as f64;
                let mut alphas = vec![a; m];
                alphas.extend(vec![1.0 - a; m]);
                StepSchedule::new(alphas)
            }
            Self::UniformRandom { len, seed } => {
                use rand::Rng;
                let mut rng = RngStream::new(*seed).rng();
                StepSchedule::new((0..*len).map(|_| rng.random()).collect())
            }
            Self::Explicit { alphas } => StepSchedule::new(alphas.clone()),
        }
    }
}
