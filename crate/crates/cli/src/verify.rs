//! The `verify` property suites: randomized re-checks of the identities and
//! inequalities the rate bound is built from, with machine-readable
//! per-case results.

use std::fmt::Write as _;

use rand::Rng;
use serde_json::json;

use kmreg::bounds::{pn_exact, pn_recursion, ScheduleSpec};
use kmreg::km::{hilbert_identity_check, SpaceHandle};
use kmreg::rng::RngStream;
use kmreg::special_fn::{bessel_i_scaled, catalan, catalan_alternating_sum};
use kmreg::stochastic::{
    ballot_pair_mean, hoeffding_majorization_check, simulate_walk_nonneg, BernoulliVector,
    ConvexIntFunction,
};
use kmreg::Error as KmError;

use crate::Suite;

pub struct CaseResult {
    pub case: usize,
    pub pass: bool,
    pub detail: String,
}

pub struct SuiteReport {
    suite: &'static str,
    cases: Vec<CaseResult>,
}

impl SuiteReport {
    pub fn total(&self) -> usize {
        self.cases.len()
    }

    pub fn failures(&self) -> usize {
        self.cases.iter().filter(|c| !c.pass).count()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.cases {
            let line = json!({"suite": self.suite, "case": c.case, "pass": c.pass, "detail": c.detail});
            let _ = writeln!(s, "{line}");
        }
        let summary = json!({"suite": self.suite, "total": self.total(), "failures": self.failures()});
        let _ = writeln!(s, "{summary}");
        s
    }
}

pub fn run_suite(suite: Suite, seed: u64, cases: usize) -> SuiteReport {
    let results = match suite {
        Suite::Hoeffding => hoeffding(seed, cases),
        Suite::Catalan => catalan_suite(cases),
        Suite::Turan => turan(cases),
        Suite::IdentityHilbert => identity_hilbert(seed, cases),
        Suite::TripleAgreement => triple_agreement(seed, cases),
    };
    SuiteReport { suite: suite.label(), cases: results }
}

fn convex_family(index: usize, rng: &mut impl Rng) -> (ConvexIntFunction, String) {
    match index % 4 {
        0 => (ConvexIntFunction::from_fn(|k| (k * k) as f64), "k^2".into()),
        1 => (ConvexIntFunction::from_fn(|k| k as f64), "k".into()),
        2 => (ballot_pair_mean(), "(F(k)+F(k+1))/2".into()),
        _ => {
            let c = rng.random_range(0..=6u64);
            (
                ConvexIntFunction::from_fn(move |k| k.saturating_sub(c) as f64),
                format!("max(k-{c},0)"),
            )
        }
    }
}

fn hoeffding(seed: u64, cases: usize) -> Vec<CaseResult> {
    let mut rng = RngStream::with_stream(seed, 1).rng();
    (0..cases)
        .map(|case| {
            let n = rng.random_range(1..=12usize);
            let p: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let (g, g_name) = convex_family(case, &mut rng);
            let g = match g.certify_convex(200) {
                Ok(g) => g,
                Err(e) => {
                    return CaseResult { case, pass: false, detail: format!("certify: {e}") }
                }
            };
            let p = BernoulliVector::new(p).expect("probabilities in [0,1]");
            match hoeffding_majorization_check(&p, &g) {
                Ok(check) => CaseResult {
                    case,
                    pass: check.holds,
                    detail: format!(
                        "g={g_name} E[g(S)]={:.12} E[g(Z)]={:.12}",
                        check.lhs, check.rhs
                    ),
                },
                Err(e) => CaseResult { case, pass: false, detail: e.to_string() },
            }
        })
        .collect()
}

fn catalan_suite(cases: usize) -> Vec<CaseResult> {
    (0..=cases.clamp(30, 300) as u64)
        .map(|k| {
            let direct = catalan(k);
            let alternating = catalan_alternating_sum(k);
            CaseResult {
                case: k as usize,
                pass: direct == alternating,
                detail: format!("C_{k} = {direct}"),
            }
        })
        .collect()
}

fn turan(cases: usize) -> Vec<CaseResult> {
    let points = cases.max(2);
    (0..points)
        .map(|i| {
            let z = 0.01 * (100.0f64 / 0.01).powf(i as f64 / (points - 1) as f64);
            let i0 = bessel_i_scaled(0, z);
            let i1 = bessel_i_scaled(1, z);
            let i2 = i0 - 2.0 / z * i1;
            let scale = (i1 * i1).max(i0 * i2.abs());
            let turan_ok = i0 * i2 <= i1 * i1 + 1e-12 * scale;
            let envelope_ok = z * i0 <= 2.0 * (1.0 + z) * i1 * (1.0 + 1e-12);
            CaseResult {
                case: i,
                pass: turan_ok && envelope_ok,
                detail: format!("z={z:.6e} I0I2-I1^2={:.3e}", i0 * i2 - i1 * i1),
            }
        })
        .collect()
}

fn identity_hilbert(seed: u64, cases: usize) -> Vec<CaseResult> {
    (0..cases)
        .map(|case| {
            let stream = RngStream::with_stream(seed, case as u64);
            match hilbert_identity_check(SpaceHandle::EuclideanL2, 5, 1, stream) {
                Ok(residual) => CaseResult {
                    case,
                    pass: residual <= 1e-10,
                    detail: format!("residual={residual:.3e}"),
                },
                Err(e) => CaseResult { case, pass: false, detail: e.to_string() },
            }
        })
        .collect()
}

fn triple_agreement(seed: u64, cases: usize) -> Vec<CaseResult> {
    let mut rng = RngStream::with_stream(seed, 2).rng();
    (0..cases)
        .map(|case| {
            let n = rng.random_range(1..=20usize);
            let sched = ScheduleSpec::UniformRandom { len: n + 1, seed: rng.random() }
                .build()
                .expect("uniform draws lie in [0,1]");
            let exact = pn_exact(&sched, n);
            let recursion = match pn_recursion(&sched, n) {
                Ok(v) => v,
                Err(KmError::ZeroRelaxation(_)) => exact,
                Err(e) => {
                    return CaseResult { case, pass: false, detail: e.to_string() }
                }
            };
            let mc = simulate_walk_nonneg(
                sched.alphas(),
                n,
                100_000,
                RngStream::with_stream(seed, 1000 + case as u64),
            );
            let routes_agree = (exact - recursion).abs() <= 1e-12;
            let mc_agrees = (mc.estimate - exact).abs() <= 4.0 * mc.std_err + 1e-9;
            CaseResult {
                case,
                pass: routes_agree && mc_agrees,
                detail: format!(
                    "n={n} exact={exact:.12} recursion={recursion:.12} mc={:.5}+-{:.5}",
                    mc.estimate, mc.std_err
                ),
            }
        })
        .collect()
}
