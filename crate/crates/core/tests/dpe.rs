mod common;

use common::{arg, argmin, corrupt_oracle, double_sum, max_diff, reads, rng};
use kernelcorrupt::decision::{HypothesisClass, LearningProblem, LossFunction};
use kernelcorrupt::dpe::{
    factorized_corruption_identities, lift_to_case, transformed_set, verify_dpe, verify_dpe_with, DpeCase,
};
use kernelcorrupt::error::Error;
use kernelcorrupt::finite_prob::FiniteDistribution;
use kernelcorrupt::fixtures::recidivism;
use kernelcorrupt::kernel::{delta, single};
use kernelcorrupt::random;
use kernelcorrupt::scalar::BigRational;
use kernelcorrupt::taxonomy::{build_joint, CorruptionSpec};
use proptest::prelude::*;

fn risks(p: &[f64], fns: &[Vec<f64>]) -> Vec<f64> {
    fns.iter().map(|f| f.iter().zip(p).map(|(a, b)| a * b).sum()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn transformed_set_matches_double_sum(seed in any::<u64>(), case in 0usize..7) {
        let case = DpeCase::ALL[case];
        let mut r = rng(seed);
        let (x, y) = random::spaces(&mut r, 4, 3);
        let (dt, dl) = case.domains();
        let spec = random::factorized_spec(&mut r, &x, &y, dt, dl);
        let (tau, lambda) = spec.factors().unwrap();
        let loss = LossFunction::brier(&y).unwrap();
        let h = HypothesisClass::all_deterministic(&x, &y).unwrap();
        let set = transformed_set(&spec, &loss, &h, case).unwrap();
        let oracle: Vec<Vec<f64>> = h.hypotheses().iter().map(|k| double_sum(tau, lambda, &loss, k)).collect();
        for (f, o) in set.functions.iter().zip(&oracle) {
            prop_assert!(max_diff(f.values(), o) <= 1e-12);
        }

        let p = random::joint(&mut r, &x, &y);
        let corrupted = corrupt_oracle(p.weights(), tau, lambda);
        let plain: Vec<Vec<f64>> = h
            .hypotheses()
            .iter()
            .map(|k| {
                (0..x.len())
                    .flat_map(|xt| {
                        let pred: Vec<f64> = (0..y.len()).map(|c| *k.get(c, xt)).collect();
                        let loss = &loss;
                        (0..y.len()).map(move |yt| loss.eval(&pred, yt))
                    })
                    .collect()
            })
            .collect();
        let (lhs, lhs_ids) = argmin(&risks(&corrupted, &plain), 1e-9);
        let (rhs, rhs_ids) = argmin(&risks(p.weights(), &oracle), 1e-9);
        prop_assert!((lhs - rhs).abs() <= 1e-12);
        prop_assert_eq!(&lhs_ids, &rhs_ids);

        let problem = LearningProblem::new(loss, h, p).unwrap();
        let report = verify_dpe(&problem, &spec, case).unwrap();
        prop_assert!(report.pass);
        prop_assert!((report.br_corrupted - lhs).abs() <= 1e-12);
        prop_assert_eq!(report.argmin_corrupted.into_iter().collect::<Vec<_>>(), lhs_ids);
    }

    #[test]
    fn every_applicable_case_gives_the_same_answer(seed in any::<u64>(), case in 0usize..6) {
        let case = DpeCase::ALL[case];
        let mut r = rng(seed);
        let (x, y) = random::spaces(&mut r, 3, 3);
        let (dt, dl) = case.domains();
        let spec = random::factorized_spec(&mut r, &x, &y, dt, dl);
        let p = random::joint(&mut r, &x, &y);
        let problem = LearningProblem::new(
            LossFunction::brier(&y).unwrap(),
            HypothesisClass::all_deterministic(&x, &y).unwrap(),
            p,
        ).unwrap();
        let cases = DpeCase::applicable(&spec);
        prop_assert!(cases.contains(&case));
        prop_assert!(cases.contains(&DpeCase::TwoDepXTwoDepY));
        let base = verify_dpe(&problem, &spec, case).unwrap();
        for c in cases {
            let lifted = lift_to_case(&spec, c).unwrap();
            prop_assert!(build_joint(&lifted).unwrap().max_abs_diff(&build_joint(&spec).unwrap()).unwrap() <= 1e-15);
            let rep = verify_dpe(&problem, &spec, c).unwrap();
            prop_assert!(rep.pass);
            prop_assert!((rep.br_transformed_clean - base.br_transformed_clean).abs() <= 1e-12);
        }
    }

    #[test]
    fn routes_match_hand_summed_marginals(seed in any::<u64>(), case in 0usize..6) {
        let case = DpeCase::ALL[case];
        let mut r = rng(seed);
        let (x, y) = random::spaces(&mut r, 4, 3);
        let (dt, dl) = case.domains();
        let spec = random::factorized_spec(&mut r, &x, &y, dt, dl);
        let p = random::joint(&mut r, &x, &y);
        let report = factorized_corruption_identities(&p, &spec).unwrap();
        prop_assert_eq!(report.case, case);
        prop_assert!(report.pass(1e-12));
        let expected_routes = if matches!(case, DpeCase::SimpleSimple | DpeCase::OneDepYXOneDepXY) { 2 } else { 1 };
        prop_assert_eq!(report.routes.len(), expected_routes);

        // Rebuild through the experiment: Σ_y π(y) Σ_x E(x|y) τ(x̃|·) λ(ỹ|·).
        let (tau, lambda) = spec.factors().unwrap();
        let (nx, ny) = (x.len(), y.len());
        let (rt, rl) = (reads(tau), reads(lambda));
        let w = p.weights();
        let mut via_e = vec![0.0; nx * ny];
        for yc in 0..ny {
            let pi: f64 = (0..nx).map(|xc| w[xc * ny + yc]).sum();
            for xc in 0..nx {
                let e = w[xc * ny + yc] / pi;
                for xt in 0..nx {
                    for yt in 0..ny {
                        via_e[xt * ny + yt] += pi * e * tau.get(xt, arg(&rt, xc, yc, ny)) * lambda.get(yt, arg(&rl, xc, yc, ny));
                    }
                }
            }
        }
        prop_assert!(max_diff(&via_e, &corrupt_oracle(w, tau, lambda)) <= 1e-12);
    }
}

#[test]
fn fully_dependent_case_has_no_decomposition() {
    let mut r = rng(3);
    let fx = recidivism::<f64>();
    let spec = random::factorized_spec(&mut r, &fx.x, &fx.y, &["X", "Y"], &["X", "Y"]);
    assert!(matches!(
        factorized_corruption_identities(&fx.p2, &spec),
        Err(Error::DecompositionUnavailable(_))
    ));
}

#[test]
fn worked_example_routes_are_exact() {
    let fx = recidivism::<BigRational>();
    for p in [&fx.p1, &fx.p2] {
        let report = factorized_corruption_identities(p, &fx.spec).unwrap();
        assert_eq!(report.case, DpeCase::SimpleXTwoDepY);
        assert_eq!(report.max_abs_diff(), 0.0);
    }
}

#[test]
fn worked_example_dpe_holds() {
    let fx = recidivism::<f64>();
    for p in [&fx.p1, &fx.p2] {
        for loss in [LossFunction::brier(&fx.y).unwrap(), LossFunction::zero_one(&fx.y)] {
            let problem =
                LearningProblem::new(loss, HypothesisClass::all_deterministic(&fx.x, &fx.y).unwrap(), p.clone())
                    .unwrap();
            for case in DpeCase::applicable(&fx.spec) {
                assert!(verify_dpe(&problem, &fx.spec, case).unwrap().pass);
            }
        }
    }
}

#[test]
fn identity_corruption_changes_nothing() {
    let fx = recidivism::<f64>();
    let spec = CorruptionSpec::factorized(delta(single(&fx.x)), delta(single(&fx.y))).unwrap();
    let problem = LearningProblem::new(
        LossFunction::brier(&fx.y).unwrap(),
        HypothesisClass::all_deterministic(&fx.x, &fx.y).unwrap(),
        fx.p2.clone(),
    )
    .unwrap();
    let clean = problem.bayes_risk().unwrap();
    let cases = DpeCase::applicable(&spec);
    assert_eq!(cases.len(), 4);
    for case in cases {
        let rep = verify_dpe(&problem, &spec, case).unwrap();
        assert!(rep.pass);
        assert!((rep.br_corrupted - clean.value).abs() < 1e-15);
        assert_eq!(rep.argmin_corrupted, clean.argmin);
    }
}

#[test]
fn label_only_corruption_uses_simple_case() {
    let mut r = rng(5);
    let fx = recidivism::<f64>();
    let lambda = random::kernel(&mut r, single(&fx.y), single(&fx.y));
    let spec = CorruptionSpec::factorized(delta(single(&fx.x)), lambda).unwrap();
    assert_eq!(DpeCase::of_spec(&spec), Some(DpeCase::SimpleSimple));
    assert_eq!(
        DpeCase::applicable(&spec),
        vec![DpeCase::SimpleSimple, DpeCase::TwoDepXSimpleY, DpeCase::SimpleXTwoDepY, DpeCase::TwoDepXTwoDepY]
    );
}

#[test]
fn mismatched_observation_is_detected() {
    let fx = recidivism::<f64>();
    let problem = LearningProblem::new(
        LossFunction::zero_one(&fx.y),
        HypothesisClass::all_deterministic(&fx.x, &fx.y).unwrap(),
        fx.p2.clone(),
    )
    .unwrap();
    let wrong = FiniteDistribution::new(fx.p1.space().clone(), vec![0.7, 0.1, 0.1, 0.1]).unwrap();
    let rep = verify_dpe_with(&problem, &fx.spec, DpeCase::SimpleXTwoDepY, Some(&wrong), 1e-9).unwrap();
    assert!(!rep.pass);
}

#[test]
fn non_factorized_spec_only_fits_the_general_case() {
    let mut r = rng(6);
    let fx = recidivism::<f64>();
    let spec = random::joint_spec(&mut r, &fx.x, &fx.y);
    assert_eq!(DpeCase::applicable(&spec), vec![DpeCase::TwoDepXTwoDepY]);
    let problem = LearningProblem::new(
        LossFunction::brier(&fx.y).unwrap(),
        HypothesisClass::all_deterministic(&fx.x, &fx.y).unwrap(),
        fx.p2.clone(),
    )
    .unwrap();
    assert!(verify_dpe(&problem, &spec, DpeCase::TwoDepXTwoDepY).unwrap().pass);
    assert!(verify_dpe(&problem, &spec, DpeCase::SimpleSimple).is_err());
}
