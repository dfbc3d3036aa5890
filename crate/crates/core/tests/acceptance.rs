//! Acceptance gate. Runs each criterion at its stated size and tolerance and
//! prints one line per criterion; exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{corrupt_oracle, double_sum, max_diff, rng};
use kernelcorrupt::decision::{loss_of, HypothesisClass, LearningProblem, LossFunction};
use kernelcorrupt::dpe::{factorized_corruption_identities, verify_dpe, DpeCase};
use kernelcorrupt::error::Error;
use kernelcorrupt::finite_prob::{factorize, Direction, FiniteDistribution, ProductSpace};
use kernelcorrupt::fixtures::recidivism;
use kernelcorrupt::inversion::{
    bayesian_inverse, check_inverse_properties, cl_corrected_loss, corrected_argmin, gcl_case, gcl_corrected_loss,
    label_cleaning_kernel, match_optimal_scores,
};
use kernelcorrupt::kernel::{act_on_fn, delta, single, KernelSignature, MarkovKernel};
use kernelcorrupt::noncore::{
    compare_mcd_with_label_kernel, selection_bias_markov_witness, McdSpec, SelectionBiasSpec,
};
use kernelcorrupt::random;
use kernelcorrupt::scalar::{BigRational, Scalar};
use kernelcorrupt::taxonomy::{build_joint, check_pairwise_feasible, corrupt, CorruptionSpec, FEASIBLE_DOMAINS};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn worked_example() -> Outcome {
    let exact = recidivism::<BigRational>();
    for (p, want) in [(&exact.p1, exact.corrupted_p1()), (&exact.p2, exact.corrupted_p2())] {
        let got = corrupt(p, &exact.spec).map_err(|e| e.to_string())?;
        ensure(got.weights() == want.as_slice(), || format!("rational mismatch: {got:?}"))?;
    }
    let float = recidivism::<f64>();
    let (tau, lambda) = float.spec.factors().unwrap();
    let mut worst: f64 = 0.0;
    for (p, want) in [(&float.p1, float.corrupted_p1()), (&float.p2, float.corrupted_p2())] {
        let got = corrupt(p, &float.spec).map_err(|e| e.to_string())?;
        worst = worst.max(max_diff(got.weights(), &want));
        worst = worst.max(max_diff(&corrupt_oracle(p.weights(), tau, lambda), &want));
    }
    ensure(worst <= 1e-15, || format!("float gap {worst:e}"))?;
    Ok(format!("exact in rationals, float gap {worst:.1e}"))
}

fn feasibility_table() -> Outcome {
    let reads: [&[&str]; 3] = [&["X"], &["Y"], &["X", "Y"]];
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for dt in reads {
        for dl in reads {
            let ok = check_pairwise_feasible(&KernelSignature::new(dt, &["X"]), &KernelSignature::new(dl, &["Y"]));
            if ok { &mut accepted } else { &mut rejected }.push((dt.to_vec(), dl.to_vec()));
        }
    }
    ensure(accepted.len() == 7, || format!("{} pairs accepted", accepted.len()))?;
    for (dt, dl) in FEASIBLE_DOMAINS {
        ensure(accepted.contains(&(dt.to_vec(), dl.to_vec())), || format!("rejected {dt:?}/{dl:?}"))?;
    }
    let expected_rejections = vec![(vec!["X"], vec!["X"]), (vec!["Y"], vec!["Y"])];
    ensure(rejected == expected_rejections, || format!("rejected {rejected:?}"))?;
    Ok("7 accepted, (X⇝X, X⇝Y) and (Y⇝X, Y⇝Y) rejected".into())
}

fn dpe_suite() -> Outcome {
    let mut r = rng(0xD9E);
    let mut worst: f64 = 0.0;
    for case in DpeCase::ALL {
        let (dt, dl) = case.domains();
        for i in 0..500 {
            let (x, y) = random::spaces(&mut r, 4, 3);
            let spec = random::factorized_spec(&mut r, &x, &y, dt, dl);
            let p = random::joint(&mut r, &x, &y);
            let loss = LossFunction::brier(&y).map_err(|e| e.to_string())?;
            let h = HypothesisClass::all_deterministic(&x, &y).map_err(|e| e.to_string())?;
            if i % 25 == 0 {
                let (tau, lambda) = spec.factors().unwrap();
                for k in h.hypotheses() {
                    let set = act_on_fn(&build_joint(&spec).unwrap(), &loss_of(&loss, k).unwrap()).unwrap();
                    let gap = max_diff(set.values(), &double_sum(tau, lambda, &loss, k));
                    ensure(gap <= 1e-12, || format!("{case} #{i}: transformed loss off by {gap:e}"))?;
                }
            }
            let problem = LearningProblem::new(loss, h, p).map_err(|e| e.to_string())?;
            let rep = verify_dpe(&problem, &spec, case).map_err(|e| e.to_string())?;
            worst = worst.max(rep.abs_gap);
            ensure(rep.abs_gap <= 1e-9, || format!("{case} #{i}: gap {:e}", rep.abs_gap))?;
            ensure(rep.argmin_match, || {
                format!("{case} #{i}: argmin {:?} vs {:?}", rep.argmin_corrupted, rep.argmin_transformed)
            })?;
        }
    }
    Ok(format!("7 × 500 instances, max gap {worst:.1e}, all argmin sets equal"))
}

fn decomposition_routes() -> Outcome {
    let mut r = rng(0xDEC);
    let mut worst: f64 = 0.0;
    for case in &DpeCase::ALL[..6] {
        let (dt, dl) = case.domains();
        for i in 0..200 {
            let (x, y) = random::spaces(&mut r, 4, 3);
            let spec = random::factorized_spec(&mut r, &x, &y, dt, dl);
            let p = random::joint(&mut r, &x, &y);
            let rep = factorized_corruption_identities(&p, &spec).map_err(|e| e.to_string())?;
            ensure(rep.case == *case && !rep.routes.is_empty(), || format!("{case} #{i}: wrong report"))?;
            worst = worst.max(rep.max_abs_diff());
            ensure(rep.pass(1e-12), || format!("{case} #{i}: route gap {:e}", rep.max_abs_diff()))?;
        }
    }
    let (x, y) = random::spaces(&mut r, 4, 3);
    let full = random::factorized_spec(&mut r, &x, &y, &["X", "Y"], &["X", "Y"]);
    let p = random::joint(&mut r, &x, &y);
    ensure(
        matches!(factorized_corruption_identities(&p, &full), Err(Error::DecompositionUnavailable(_))),
        || "fully dependent case did not report DecompositionUnavailable".into(),
    )?;
    Ok(format!("6 × 200 instances, max route gap {worst:.1e}; fully dependent case unavailable"))
}

fn inverse_suite() -> Outcome {
    let mut r = rng(0x1A7);
    let (mut rev, mut cpl, mut exp, mut dbl) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..500 {
        let (x, y) = random::spaces(&mut r, 4, 3);
        let spec = if i % 2 == 0 {
            random::joint_spec(&mut r, &x, &y)
        } else {
            let (dt, dl) = FEASIBLE_DOMAINS[r.random_range(0..FEASIBLE_DOMAINS.len())];
            random::factorized_spec(&mut r, &x, &y, dt, dl)
        };
        let kappa = build_joint(&spec).map_err(|e| e.to_string())?;
        let p = random::joint(&mut r, &x, &y);
        let inv = bayesian_inverse(&kappa, &p).map_err(|e| e.to_string())?;
        let check = check_inverse_properties(&inv, 50, &mut r).map_err(|e| e.to_string())?;
        let d = inv.double_inverse_gap().map_err(|e| e.to_string())?;
        rev = rev.max(check.reverse_gap);
        cpl = cpl.max(check.coupling_gap);
        exp = exp.max(check.expectation_gap);
        dbl = dbl.max(d);
        ensure(check.functions_tested == 50, || "wrong number of test functions".into())?;
        ensure(check.pass(1e-10) && d <= 1e-10, || {
            format!("#{i}: reverse {:e}, coupling {:e}, expectation {:e}, double {d:e}", check.reverse_gap, check.coupling_gap, check.expectation_gap)
        })?;
    }
    Ok(format!("500 instances; max gaps reverse {rev:.1e}, coupling {cpl:.1e}, expectation {exp:.1e}, double {dbl:.1e}"))
}

fn cl_risk_identity() -> Outcome {
    let mut r = rng(0xC1);
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let simple = i % 2 == 0;
        let (x, y) = random::spaces(&mut r, 4, 3);
        let xy = ProductSpace::new(vec![x.clone(), y.clone()]).unwrap();
        let (lam, p) = if simple {
            (random::kernel(&mut r, single(&y), single(&y)), random::independent_joint(&mut r, &x, &y))
        } else {
            (random::kernel(&mut r, xy, single(&y)), random::joint(&mut r, &x, &y))
        };
        let spec = CorruptionSpec::factorized(delta(single(&x)), lam).map_err(|e| e.to_string())?;
        let corrupted = corrupt(&p, &spec).map_err(|e| e.to_string())?;
        let inv = bayesian_inverse(&build_joint(&spec).unwrap(), &p).map_err(|e| e.to_string())?;
        let cleaning = label_cleaning_kernel(&inv, 1e-9).map_err(|e| e.to_string())?;
        ensure(!simple || cleaning.domain().ids() == ["Y"], || format!("#{i}: simple cleaning kernel reads X"))?;
        let loss = LossFunction::brier(&y).unwrap();
        let cl = cl_corrected_loss(&cleaning, &loss)
            .and_then(|c| c.with_attributes(&x))
            .map_err(|e| e.to_string())?;
        let hs = HypothesisClass::all_deterministic(&x, &y).unwrap();
        let (_, argmin, risks) = corrected_argmin(&cl, &hs, &corrupted).map_err(|e| e.to_string())?;
        let problem = LearningProblem::new(loss.clone(), hs.clone(), p.clone()).unwrap();
        let clean = problem.bayes_risk().unwrap();
        let gap = max_diff(&risks, &clean.risks);
        worst = worst.max(gap);
        ensure(gap <= 1e-10, || format!("#{i}: per-hypothesis gap {gap:e}"))?;
        ensure(argmin == clean.argmin, || format!("#{i}: argmin {argmin:?} vs {:?}", clean.argmin))?;
    }
    Ok(format!("500 instances (250 simple, 250 two-dependent), max risk gap {worst:.1e}"))
}

fn gcl_identity() -> Outcome {
    let mut r = rng(0x6C1);
    let fx = recidivism::<f64>();
    let mut worst: f64 = 0.0;
    for case in 1u8..=4 {
        let pairs: Vec<_> = FEASIBLE_DOMAINS
            .iter()
            .filter(|(dt, dl)| {
                let probe = random::factorized_spec(&mut rng(0), &fx.x, &fx.y, dt, dl);
                gcl_case(&probe).ok() == Some(case)
            })
            .collect();
        ensure(!pairs.is_empty(), || format!("no pair maps to case {case}"))?;
        for i in 0..200 {
            let (x, y) = random::spaces(&mut r, 4, 3);
            let (dt, dl) = pairs[i % pairs.len()];
            let spec = random::factorized_spec(&mut r, &x, &y, dt, dl);
            let loss = LossFunction::brier(&y).unwrap();
            let h = if i % 2 == 0 {
                random::kernel(&mut r, single(&x), single(&y))
            } else {
                let labels: Vec<usize> = (0..x.len()).map(|_| r.random_range(0..y.len())).collect();
                kernelcorrupt::decision::deterministic(&x, &y, &labels).unwrap()
            };
            let gcl = gcl_corrected_loss(&spec, &loss, &h).map_err(|e| e.to_string())?;
            let table = gcl.table(&h).map_err(|e| e.to_string())?;
            let direct = act_on_fn(&build_joint(&spec).unwrap(), &loss_of(&loss, &h).unwrap()).unwrap();
            let gap = max_diff(table.values(), direct.values());
            worst = worst.max(gap);
            ensure(gap <= 1e-12, || format!("case {case} #{i}: gap {gap:e}"))?;
        }
    }
    let swap = MarkovKernel::new(single(&fx.x), single(&fx.x), vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    let cleaning = CorruptionSpec::factorized(swap, delta(single(&fx.y))).unwrap();
    let clean = FiniteDistribution::new(fx.p1.space().clone(), vec![0.4, 0.1, 0.15, 0.35]).unwrap();
    let hs = HypothesisClass::all_deterministic(&fx.x, &fx.y).unwrap();
    let m = match_optimal_scores(&cleaning, &LossFunction::brier(&fx.y).unwrap(), &hs, &clean, 1e-12)
        .map_err(|e| e.to_string())?;
    ensure(m.differs && !m.matching.is_empty(), || format!("witness did not differ: {m:?}"))?;
    Ok(format!(
        "4 × 200 instances, max gap {worst:.1e}; witness: clean minimizer {:?}, score-matching {:?}",
        m.clean_argmin, m.matching
    ))
}

fn non_markov_witnesses() -> Outcome {
    let mut r = rng(0x5B);
    for i in 0..100 {
        let (x, y) = random::spaces(&mut r, 4, 3);
        let p = random::joint(&mut r, &x, &y);
        let weights: Vec<f64> = (0..p.len()).map(|_| r.random_range(0.0..3.0)).collect();
        let (spec, _) = SelectionBiasSpec::from_weights(weights, p).map_err(|e| e.to_string())?;
        let w = selection_bias_markov_witness(&spec).map_err(|e| e.to_string())?;
        ensure(w.column_sums == spec.alpha, || format!("#{i}: column sums differ from α"))?;
        ensure(w.alpha_is_one || !w.is_markov, || format!("#{i}: α ≢ 1 yet Markov"))?;
        ensure(w.connecting_gap <= 1e-12, || format!("#{i}: connecting kernel gap {:e}", w.connecting_gap))?;
    }
    let fx = recidivism::<BigRational>();
    let q = BigRational::from_ratio;
    let ys = single(&fx.y);
    let mixing = MarkovKernel::new(ys.clone(), ys.clone(), vec![q(1, 1), q(1, 1), q(0, 1), q(0, 1)]).unwrap();
    let g = factorize(&fx.p2, Direction::Generative).unwrap();
    let prior = FiniteDistribution::new(ys, vec![q(1, 3), q(2, 3)]).unwrap();
    ensure(prior != g.prior, || "fixture prior matches the clean marginal".into())?;
    let cmp = compare_mcd_with_label_kernel(&McdSpec::new(mixing, g.conditional.clone(), prior).unwrap(), &fx.p2)
        .map_err(|e| e.to_string())?;
    let x_clean = fx.p2.marginal(&["X"]).unwrap();
    let x_mixed = cmp.mcd_joint.marginal(&["X"]).unwrap();
    ensure(cmp.min_gap > 0.0 && x_clean != x_mixed, || format!("mixture reproduced by a label kernel: {cmp:?}"))?;
    Ok(format!(
        "100 selection-bias specs non-Markov; mixture vs label kernels gap {:.3}, X-marginal moved",
        cmp.min_gap
    ))
}

fn properness() -> Outcome {
    let mut lines = Vec::new();
    for n in [2usize, 3] {
        let y = kernelcorrupt::finite_prob::FiniteSpace::indexed("Y", n).unwrap();
        let res = LossFunction::default_resolution(n);
        let brier = LossFunction::brier(&y).unwrap().check_proper(res);
        ensure(brier.proper, || format!("Brier |Y|={n} flagged: {:?}", brier.witness))?;
        let zo = LossFunction::zero_one(&y).check_proper(res);
        ensure(!zo.proper, || format!("zero-one |Y|={n} passed"))?;
        lines.push(format!("|Y|={n} grid {res}"));
    }
    Ok(format!("Brier proper, zero-one flagged ({})", lines.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("worked example", worked_example),
        ("feasibility table", feasibility_table),
        ("DPE suite", dpe_suite),
        ("decomposition routes", decomposition_routes),
        ("Bayesian inverse", inverse_suite),
        ("CL risk identity", cl_risk_identity),
        ("GCL pointwise identity", gcl_identity),
        ("non-Markov witnesses", non_markov_witnesses),
        ("properness", properness),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS [{secs:.2}s] {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL [{secs:.2}s] {detail}", n + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
