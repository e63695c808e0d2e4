//! Randomized invariants over the whole input space, via proptest.

use proptest::collection::vec;
use proptest::prelude::*;

use kmreg::bounds::{c_table, c_table_fast, pn_exact, rn_value, StepSchedule};
use kmreg::km::{km_iterate, OperatorHandle};
use kmreg::special_fn::hyp2f1_terminating;
use kmreg::stochastic::{expect, poisson_binomial_pmf, BernoulliVector, ConvexIntFunction};
use kmreg::INV_SQRT_PI;

proptest! {
    /// The Poisson-binomial law, and hence any expectation under it, does
    /// not depend on the order of the success probabilities.
    #[test]
    fn poisson_binomial_is_permutation_invariant(
        mut probs in vec(0.0..=1.0f64, 1..12),
        rot in 0..12usize,
    ) {
        let g = ConvexIntFunction::from_fn(|k| (k as f64).powi(2)).certify_convex(16).unwrap();
        let before = expect(&poisson_binomial_pmf(&BernoulliVector::new(probs.clone()).unwrap()), &g);
        let rot = rot % probs.len();
        probs.rotate_left(rot);
        let after = expect(&poisson_binomial_pmf(&BernoulliVector::new(probs).unwrap()), &g);
        prop_assert!((before - after).abs() <= 1e-12 * (1.0 + before.abs()));
    }

    /// The pmf is a probability vector for any parameter choice.
    #[test]
    fn poisson_binomial_pmf_is_normalized(probs in vec(0.0..=1.0f64, 1..40)) {
        let pmf = poisson_binomial_pmf(&BernoulliVector::new(probs).unwrap());
        prop_assert!(pmf.pmf().iter().all(|p| (0.0..=1.0).contains(p)));
        let total: f64 = pmf.pmf().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    /// The product bound holds for every schedule, not just the sampled
    /// acceptance set.
    #[test]
    fn product_bound_is_universal(alphas in vec(0.0..=1.0f64, 1..30)) {
        let n = alphas.len();
        let sched = StepSchedule::new(alphas).unwrap();
        let product = sched.sum_s(n).sqrt() * pn_exact(&sched, n);
        prop_assert!(product <= INV_SQRT_PI + 1e-10);
    }

    /// For constant schedules the exact route collapses to the terminating
    /// hypergeometric sum with u = 2 alpha (1 - alpha).
    #[test]
    fn constant_schedule_matches_hypergeometric(alpha in 0.0..=1.0f64, n in 1..60usize) {
        let sched = StepSchedule::constant(alpha, n).unwrap();
        let u = 2.0 * alpha * (1.0 - alpha);
        let direct = pn_exact(&sched, n);
        let series = hyp2f1_terminating(n as u64, u);
        prop_assert!((direct - series).abs() <= 1e-11, "direct {direct} series {series}");
    }

    /// The fast three-term route and the literal double-sum route build the
    /// same table.
    #[test]
    fn c_table_routes_agree(alphas in vec(0.0..=1.0f64, 2..15)) {
        let n_max = alphas.len() - 1;
        let sched = StepSchedule::new(alphas).unwrap();
        let slow = c_table(&sched, n_max);
        let fast = c_table_fast(&sched, n_max);
        for n in 0..=n_max {
            for m in -1..=n as isize {
                let (a, b) = (slow.get(m, n), fast.get(m, n));
                prop_assert!((a - b).abs() <= 1e-12, "c_({m},{n}): {a} vs {b}");
            }
        }
    }

    /// R^n never exceeds sqrt(2/pi) anywhere on its domain [0, 1/2]^n.
    #[test]
    fn rn_value_below_supremum(probs in vec(0.0..=0.5f64, 1..20)) {
        let value = rn_value(&BernoulliVector::new(probs).unwrap()).unwrap();
        prop_assert!(value <= kmreg::SQRT_2_OVER_PI + 1e-12);
    }

    /// KM residuals are non-increasing for any non-expansive operator run.
    #[test]
    fn residuals_never_increase(
        alphas in vec(0.0..=1.0f64, 1..25),
        angle in 0.01..3.1f64,
    ) {
        let n = alphas.len();
        let sched = StepSchedule::new(alphas).unwrap();
        for op in [OperatorHandle::rotation(angle), OperatorHandle::negation(3), OperatorHandle::shift_l1()] {
            let trace = km_iterate(&op, op.default_start(), &sched, n).unwrap();
            for pair in trace.residuals.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-12);
            }
        }
    }
}
