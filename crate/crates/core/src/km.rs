//! The Krasnosel'skii-Mann iterator over abstract normed spaces, residual
//! traces, and bound certificates.
//!
//! Two concrete spaces are provided: dense Euclidean vectors under the `l2`
//! norm (a Hilbert space) and sparse non-negative summable sequences under
//! the `l1` norm. The right-shift isometry on the `l1` simplex-ball is the
//! sharpness example: its iterate coordinates are exactly the
//! Poisson-binomial pmf of the schedule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{constants, StepSchedule};
use crate::rng::RngStream;
use crate::stochastic::{poisson_binomial_pmf, BernoulliVector};
use crate::{Error, Result, INV_SQRT_PI};

/// A point in one of the supported spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Dense(Vec<f64>),
    /// Sorted `(index, value)` pairs; finitely supported sequence.
    Sparse(Vec<(usize, f64)>),
}

impl Point {
    pub fn dense(coords: &[f64]) -> Self {
        Self::Dense(coords.to_vec())
    }

    pub fn unit_sequence() -> Self {
        Self::Sparse(vec![(0, 1.0)])
    }

    /// Coordinate `i`, defaulting to 0 for sparse points.
    pub fn coord(&self, i: usize) -> f64 {
        match self {
            Self::Dense(v) => v[i],
            Self::Sparse(entries) => entries
                .iter()
                .find(|(j, _)| *j == i)
                .map_or(0.0, |(_, v)| *v),
        }
    }
}

/// Vector-space operations over [`Point`]; the inner product exists iff the
/// space is declared Hilbert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceHandle {
    /// Dense real vectors with the Euclidean norm.
    EuclideanL2,
    /// Sparse summable sequences with the `l1` norm.
    SequenceL1,
}

fn sparse_combine(a: f64, x: &[(usize, f64)], b: f64, y: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let (idx, v) = if j >= y.len() || (i < x.len() && x[i].0 < y[j].0) {
            let e = (x[i].0, a * x[i].1);
            i += 1;
            e
        } else if i >= x.len() || y[j].0 < x[i].0 {
            let e = (y[j].0, b * y[j].1);
            j += 1;
            e
        } else {
            let e = (x[i].0, a * x[i].1 + b * y[j].1);
            i += 1;
            j += 1;
            e
        };
        if v != 0.0 {
            out.push((idx, v));
        }
    }
    out
}

impl SpaceHandle {
    pub fn is_hilbert(&self) -> bool {
        matches!(self, Self::EuclideanL2)
    }

    /// `a x + b y`.
    pub fn combine(&self, a: f64, x: &Point, b: f64, y: &Point) -> Point {
        match (x, y) {
            (Point::Dense(xs), Point::Dense(ys)) => {
                assert_eq!(xs.len(), ys.len(), "dimension mismatch");
                Point::Dense(xs.iter().zip(ys).map(|(u, v)| a * u + b * v).collect())
            }
            (Point::Sparse(xs), Point::Sparse(ys)) => Point::Sparse(sparse_combine(a, xs, b, ys)),
            _ => panic!("mixed point representations"),
        }
    }

    pub fn add(&self, x: &Point, y: &Point) -> Point {
        self.combine(1.0, x, 1.0, y)
    }

    pub fn scale(&self, a: f64, x: &Point) -> Point {
        match x {
            Point::Dense(xs) => Point::Dense(xs.iter().map(|v| a * v).collect()),
            Point::Sparse(xs) => Point::Sparse(xs.iter().map(|(i, v)| (*i, a * v)).collect()),
        }
    }

    pub fn sub(&self, x: &Point, y: &Point) -> Point {
        self.combine(1.0, x, -1.0, y)
    }

    pub fn norm(&self, x: &Point) -> f64 {
        match (self, x) {
            (Self::EuclideanL2, Point::Dense(xs)) => {
                xs.iter().map(|v| v * v).sum::<f64>().sqrt()
            }
            (Self::SequenceL1, Point::Sparse(xs)) => xs.iter().map(|(_, v)| v.abs()).sum(),
            _ => panic!("point representation does not match the space"),
        }
    }

    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        self.norm(&self.sub(x, y))
    }

    /// Inner product; only defined on the Hilbert space.
    pub fn inner(&self, x: &Point, y: &Point) -> Result<f64> {
        match (self, x, y) {
            (Self::EuclideanL2, Point::Dense(xs), Point::Dense(ys)) => {
                assert_eq!(xs.len(), ys.len(), "dimension mismatch");
                Ok(xs.iter().zip(ys).map(|(u, v)| u * v).sum())
            }
            _ => Err(Error::NotHilbert),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum OperatorKind {
    Identity,
    Negation,
    Rotation { angle: f64 },
    ShiftRightL1,
}

/// A non-expansive self-map with optional declared metadata. The
/// non-expansiveness contract is declared, not proved; [`OperatorHandle::spot_check_nonexpansive`]
/// validates it statistically.
#[derive(Debug, Clone)]
pub struct OperatorHandle {
    kind: OperatorKind,
    pub declared_diameter: Option<f64>,
    pub declared_fixed_point: Option<Point>,
    dim: usize,
}

impl OperatorHandle {
    /// The identity map on `R^dim`.
    pub fn identity(dim: usize) -> Self {
        Self {
            kind: OperatorKind::Identity,
            declared_diameter: None,
            declared_fixed_point: None,
            dim,
        }
    }

    /// `x -> -x` on the unit ball of `R^dim`; fixed point at the origin.
    pub fn negation(dim: usize) -> Self {
        Self {
            kind: OperatorKind::Negation,
            declared_diameter: Some(2.0),
            declared_fixed_point: Some(Point::Dense(vec![0.0; dim])),
            dim,
        }
    }

    /// Rotation by `angle` radians on the unit disc of `R^2`; fixed point at
    /// the origin.
    pub fn rotation(angle: f64) -> Self {
        Self {
            kind: OperatorKind::Rotation { angle },
            declared_diameter: Some(2.0),
            declared_fixed_point: Some(Point::Dense(vec![0.0, 0.0])),
            dim: 2,
        }
    }

    /// The right-shift isometry on `C = {x : x^i >= 0, sum x^i <= 1}` in
    /// `l1`; diameter 2, no fixed point inside `C`'s interior behaviour is
    /// reached by the iterates.
    pub fn shift_l1() -> Self {
        Self {
            kind: OperatorKind::ShiftRightL1,
            declared_diameter: Some(2.0),
            declared_fixed_point: None,
            dim: 0,
        }
    }

    pub fn space(&self) -> SpaceHandle {
        match self.kind {
            OperatorKind::ShiftRightL1 => SpaceHandle::SequenceL1,
            _ => SpaceHandle::EuclideanL2,
        }
    }

    /// Natural starting point for the built-in examples.
    pub fn default_start(&self) -> Point {
        match self.kind {
            OperatorKind::ShiftRightL1 => Point::unit_sequence(),
            OperatorKind::Rotation { .. } => Point::dense(&[1.0, 0.0]),
            _ => {
                let mut coords = vec![0.0; self.dim];
                if !coords.is_empty() {
                    coords[0] = 1.0;
                }
                Point::Dense(coords)
            }
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        match (&self.kind, x) {
            (OperatorKind::Identity, _) => Ok(x.clone()),
            (OperatorKind::Negation, Point::Dense(xs)) => {
                Ok(Point::Dense(xs.iter().map(|v| -v).collect()))
            }
            (OperatorKind::Rotation { angle }, Point::Dense(xs)) if xs.len() == 2 => {
                let (sin, cos) = angle.sin_cos();
                Ok(Point::dense(&[
                    cos * xs[0] - sin * xs[1],
                    sin * xs[0] + cos * xs[1],
                ]))
            }
            (OperatorKind::ShiftRightL1, Point::Sparse(entries)) => {
                let total: f64 = entries.iter().map(|(_, v)| v).sum();
                if entries.iter().any(|(_, v)| *v < 0.0) || total > 1.0 + 1e-9 {
                    return Err(Error::OutsideDomain(format!(
                        "l1 shift domain needs non-negative entries summing to <= 1 (sum = {total})"
                    )));
                }
                Ok(Point::Sparse(entries.iter().map(|(i, v)| (i + 1, *v)).collect()))
            }
            _ => Err(Error::OutsideDomain("point representation does not match operator".into())),
        }
    }

    /// Sample random pairs in the operator's domain and verify
    /// `||Tx - Ty|| <= ||x - y|| (1 + 1e-10)`. Returns the worst ratio seen.
    pub fn spot_check_nonexpansive(&self, samples: u32, stream: RngStream) -> Result<f64> {
        let space = self.space();
        let mut rng = stream.rng();
        let draw = |rng: &mut rand_chacha::ChaCha12Rng| -> Point {
            match self.kind {
                OperatorKind::ShiftRightL1 => {
                    // random point of the simplex-ball with support size <= 6
                    let k = rng.random_range(1..=6usize);
                    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
                    let total: f64 = raw.iter().sum::<f64>() + rng.random::<f64>();
                    let mut idx: Vec<usize> = (0..k).map(|_| rng.random_range(0..32)).collect();
                    idx.sort_unstable();
                    idx.dedup();
                    Point::Sparse(
                        idx.iter().enumerate().map(|(j, i)| (*i, raw[j] / total)).collect(),
                    )
                }
                _ => {
                    let dim = self.dim.max(1);
                    let coords: Vec<f64> =
                        (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let norm = coords.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
                    Point::Dense(coords.iter().map(|v| v / norm).collect())
                }
            }
        };
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x = draw(&mut rng);
            let y = draw(&mut rng);
            let dist = space.distance(&x, &y);
            if dist == 0.0 {
                continue;
            }
            let mapped = space.distance(&self.apply(&x)?, &self.apply(&y)?);
            let ratio = mapped / dist;
            if ratio > 1.0 + 1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "non-expansiveness violated: ratio {ratio}"
                )));
            }
            worst = worst.max(ratio);
        }
        Ok(worst)
    }
}

/// Declarative operator description for CLI/JSON assembly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OperatorSpec {
    Identity { dim: usize },
    Negation { dim: usize },
    Rotation { degrees: f64 },
    ShiftL1,
}

impl OperatorSpec {
    pub fn build(&self) -> OperatorHandle {
        match self {
            Self::Identity { dim } => OperatorHandle::identity(*dim),
            Self::Negation { dim } => OperatorHandle::negation(*dim),
            Self::Rotation { degrees } => OperatorHandle::rotation(degrees.to_radians()),
            Self::ShiftL1 => OperatorHandle::shift_l1(),
        }
    }
}

/// Recorded run of the iteration: points `x_0..x_n` and residuals
/// `r_k = ||x_k - T x_k||`.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub points: Vec<Point>,
    pub residuals: Vec<f64>,
    pub schedule: StepSchedule,
    pub space: SpaceHandle,
}

impl IterationTrace {
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn last_residual(&self) -> f64 {
        *self.residuals.last().expect("trace is non-empty")
    }
}

/// Run `x_k = (1 - alpha_k) x_{k-1} + alpha_k T x_{k-1}` for `n` steps.
pub fn km_iterate(
    op: &OperatorHandle,
    x0: Point,
    sched: &StepSchedule,
    n: usize,
) -> Result<IterationTrace> {
    assert!(n <= sched.len(), "n exceeds schedule length");
    let space = op.space();
    let mut points = Vec::with_capacity(n + 1);
    let mut residuals = Vec::with_capacity(n + 1);
    let mut tx = op.apply(&x0)?;
    residuals.push(space.distance(&x0, &tx));
    points.push(x0);
    for k in 1..=n {
        let a = sched.alpha(k);
        let x = space.combine(1.0 - a, &points[k - 1], a, &tx);
        tx = op.apply(&x)?;
        residuals.push(space.distance(&x, &tx));
        points.push(x);
    }
    Ok(IterationTrace { points, residuals, schedule: sched.clone(), space })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    DiameterBound,
    FixpointTwoOverRootPi,
    FixpointHilbertOne,
    FixpointHilbertShifted,
}

/// Which fixed-point bound to certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixpointVariant {
    /// `kappa~ = 2/sqrt(pi)`, valid in any normed space.
    TwoOverRootPi,
    /// `kappa~ = 1`, Hilbert spaces only.
    HilbertOne,
    /// `kappa~ = 1` certifying `r_{n-1}`, Hilbert spaces only.
    HilbertShifted,
}

/// A computed residual bound attached to an iteration run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub value: f64,
    pub n: usize,
    pub sum_s: f64,
    /// The constant multiplying the scale (`1/sqrt(pi)`, `2/sqrt(pi)` or 1).
    pub constant: f64,
    /// Declared diameter or distance-to-fixed-point estimate.
    pub scale: f64,
}

/// Certify `r_n <= diam / sqrt(pi sum_s)`. When `sum_s = 0` the certificate
/// degenerates to the trivial bound `diam`.
pub fn certify_diameter(trace: &IterationTrace, diam: f64) -> Result<Certificate> {
    let n = trace.steps();
    let sum_s = trace.schedule.sum_s(n);
    let value = if sum_s == 0.0 {
        diam
    } else {
        diam / (std::f64::consts::PI * sum_s).sqrt()
    };
    let observed = trace.last_residual();
    if observed > value + 1e-10 {
        return Err(Error::CertificateViolated { observed, bound: value });
    }
    Ok(Certificate {
        kind: CertificateKind::DiameterBound,
        value,
        n,
        sum_s,
        constant: INV_SQRT_PI,
        scale: diam,
    })
}

/// Certify `r_n <= kappa~ dist0 / sqrt(sum_s)` (or `r_{n-1}` for the shifted
/// variant). `dist0` must upper-bound `dist(x_0, Fix(T))`; Hilbert variants
/// require the trace's space to carry an inner product. `||x - Tx|| <= 2
/// dist(x, Fix(T))` always, so the `sum_s = 0` fallback is `2 dist0`.
pub fn certify_fixpoint(
    trace: &IterationTrace,
    dist0: f64,
    variant: FixpointVariant,
) -> Result<Certificate> {
    let (kind, constant) = match variant {
        FixpointVariant::TwoOverRootPi => {
            (CertificateKind::FixpointTwoOverRootPi, 2.0 * INV_SQRT_PI)
        }
        FixpointVariant::HilbertOne => (CertificateKind::FixpointHilbertOne, 1.0),
        FixpointVariant::HilbertShifted => (CertificateKind::FixpointHilbertShifted, 1.0),
    };
    if constant == 1.0 && !trace.space.is_hilbert() {
        return Err(Error::NotHilbert);
    }
    let n = trace.steps();
    let certified_index = match variant {
        FixpointVariant::HilbertShifted => {
            if n == 0 {
                return Err(Error::InvalidArgument(
                    "shifted variant needs at least one step".into(),
                ));
            }
            n - 1
        }
        _ => n,
    };
    let sum_s = trace.schedule.sum_s(n);
    let value = if sum_s == 0.0 { 2.0 * dist0 } else { constant * dist0 / sum_s.sqrt() };
    let observed = trace.residuals[certified_index];
    if observed > value + 1e-10 {
        return Err(Error::CertificateViolated { observed, bound: value });
    }
    Ok(Certificate { kind, value, n, sum_s, constant, scale: dist0 })
}

/// Max residual of the parallelogram-style identity
/// `||(1-a) u + a v||^2 = (1-a)||u||^2 + a||v||^2 - a(1-a)||u - v||^2`
/// over random `(u, v, a)` triples in `R^dim`.
pub fn hilbert_identity_check(
    space: SpaceHandle,
    dim: usize,
    samples: u32,
    stream: RngStream,
) -> Result<f64> {
    if !space.is_hilbert() {
        return Err(Error::NotHilbert);
    }
    let mut rng = stream.rng();
    let draw = |rng: &mut rand_chacha::ChaCha12Rng| {
        Point::Dense((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
    };
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let u = draw(&mut rng);
        let v = draw(&mut rng);
        let a: f64 = rng.random();
        let mix = space.combine(1.0 - a, &u, a, &v);
        let lhs = space.inner(&mix, &mix)?;
        let nu = space.inner(&u, &u)?;
        let nv = space.inner(&v, &v)?;
        let diff = space.sub(&u, &v);
        let nd = space.inner(&diff, &diff)?;
        let rhs = (1.0 - a) * nu + a * nv - a * (1.0 - a) * nd;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Result of the `l1` right-shift sharpness run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SharpnessResult {
    pub m: usize,
    pub u: f64,
    pub observed: f64,
    pub eta: f64,
    pub gap: f64,
}

/// The two-block sharpness experiment: `2m` steps, half with
/// `alpha_i = u/m`, half with `1 - u/m`. The central iterate coordinate
/// `p_{2m}^m` equals `P(X = Y)` for iid Binomial(m, u/m) pairs; the observed
/// product approaches `eta` from below as `m` grows.
pub fn shift_sharpness_experiment(m: usize, u: f64) -> Result<SharpnessResult> {
    let sched = crate::bounds::ScheduleSpec::TwoBlock { m, u }.build()?;
    let probs = BernoulliVector::new(sched.alphas().to_vec()).expect("alphas in [0,1]");
    let pmf = poisson_binomial_pmf(&probs);
    let central = pmf.pmf()[m];
    let observed = central * sched.sum_s(2 * m).sqrt();
    let eta = constants().eta;
    Ok(SharpnessResult { m, u, observed, eta, gap: eta - observed })
}

/// The `u` that makes the sharpness experiment approach `eta`: half the
/// argmax of `sqrt(x) e^{-x} I_0(x)`.
pub fn sharpness_optimal_u() -> f64 {
    constants().eta_argmax / 2.0
}
