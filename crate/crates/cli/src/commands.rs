use std::collections::BTreeSet;

use kernelcorrupt::decision::{loss_of, risk, HypothesisClass, LearningProblem, LossFunction};
use kernelcorrupt::dpe::{factorized_corruption_identities, verify_dpe_with, DpeCase};
use kernelcorrupt::finite_prob::FiniteDistribution;
use kernelcorrupt::inversion::{
    bayesian_inverse, check_inverse_properties, cl_corrected_loss, gcl_corrected_loss, label_cleaning_kernel,
    CorrectedLoss,
};
use kernelcorrupt::kernel::MarkovKernel;
use kernelcorrupt::random;
use kernelcorrupt::scalar::Scalar;
use kernelcorrupt::taxonomy::{
    build_joint, check_pairwise_feasible, classify, corrupt, infeasibility_reason, split_joint, CorruptionSpec,
    CorruptionType, FEASIBLE_DOMAINS,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::problem::{Corruption, Problem};
use crate::report::{self, Report};
use crate::CliError;

/// Tolerance for split and support decisions on exact or float kernels.
const STRUCTURE_TOL: f64 = 1e-12;

fn tag<T: Scalar>(k: &MarkovKernel<T>) -> Result<String, CliError> {
    Ok(match classify(k)? {
        CorruptionType::Identity => format!("Identity({})", k.image()),
        other => other.name().to_string(),
    })
}

fn spec_of<T: Scalar>(p: &Problem<T>) -> Result<CorruptionSpec<T>, CliError> {
    Ok(match &p.corruption {
        Corruption::Factorized { tau, lambda } => CorruptionSpec::factorized(tau.clone(), lambda.clone())?,
        Corruption::Joint(k) => CorruptionSpec::non_factorized(k.clone())?,
    })
}

fn f64_problem<T: Scalar>(p: &Problem<T>) -> Result<LearningProblem, CliError> {
    Ok(LearningProblem::new(p.loss.clone(), p.hypotheses.clone(), p.joint.to_f64())?)
}

fn hypothesis_name(h: &MarkovKernel<f64>) -> String {
    let parts: Vec<String> = (0..h.cols())
        .map(|x| {
            let col = h.column(x);
            match col.iter().position(|v| *v == 1.0) {
                Some(y) => format!("{}→{}", h.domain().point_label(x), h.image().point_label(y)),
                None => format!("{}→{:?}", h.domain().point_label(x), col),
            }
        })
        .collect();
    format!("({})", parts.join(", "))
}

fn id_set(set: &BTreeSet<usize>) -> Value {
    json!(set.iter().collect::<Vec<_>>())
}

pub fn classify_cmd<T: Scalar>(p: &Problem<T>) -> Result<Report, CliError> {
    let mut r = Report::new("classify");
    match &p.corruption {
        Corruption::Factorized { tau, lambda } => {
            let (tt, tl) = (tag(tau)?, tag(lambda)?);
            let (st, sl) = (tau.signature(), lambda.signature());
            let feasible = check_pairwise_feasible(&st, &sl);
            r.set(
                "classification",
                json!({
                    "tau": {"signature": st.to_string(), "type": tt},
                    "lambda": {"signature": sl.to_string(), "type": tl},
                    "feasible": feasible,
                }),
            );
            if feasible {
                r.line(format!("τ: {tt}, λ: {tl}, joint: feasible"));
                let joint = build_joint(&spec_of(p)?)?;
                let jt = tag(&joint)?;
                r.line(format!("κ = τ⊗λ: {jt}"));
                r.set("joint_type", json!(jt));
            } else {
                let reason = infeasibility_reason(&st, &sl);
                r.line(format!("τ: {tt}, λ: {tl}, joint: infeasible"));
                r.line(format!("reason: {reason}"));
                r.set("reason", json!(reason));
                r.pass = false;
            }
        }
        Corruption::Joint(k) => {
            let kt = tag(k)?;
            r.line(format!("κ: {kt}, joint: feasible"));
            let mut c = json!({"kappa": {"signature": k.signature().to_string(), "type": kt}, "feasible": true});
            if let Some((tau, lambda)) = split_joint(k, STRUCTURE_TOL) {
                let (tt, tl) = (tag(&tau)?, tag(&lambda)?);
                r.line(format!("splits as τ: {tt} ({}), λ: {tl} ({})", tau.signature(), lambda.signature()));
                c["split"] = json!({
                    "tau": {"signature": tau.signature().to_string(), "type": tt},
                    "lambda": {"signature": lambda.signature().to_string(), "type": tl},
                });
            } else {
                r.line("does not split as τ⊗λ");
            }
            r.set("classification", c);
        }
    }
    Ok(r)
}

pub fn corrupt_cmd<T: Scalar>(p: &Problem<T>) -> Result<Report, CliError> {
    let mut r = Report::new("corrupt");
    let spec = spec_of(p)?;
    let out = corrupt(&p.joint, &spec)?;
    r.line(format!("P  = {}", report::render_distribution(&p.joint)));
    r.line(format!("P̃ = {}", report::render_distribution(&out)));
    r.set("joint_kernel", report::kernel(&build_joint(&spec)?));
    r.set("clean", report::distribution(&p.joint));
    r.set("corrupted", report::distribution(&out));
    if let Some(obs) = &p.observed {
        let gap = obs.max_abs_diff(&out)?;
        r.line(format!("observed joint differs from P∘κ by {}", gap.render()));
        r.set("observed_gap", report::float(gap));
    }
    Ok(r)
}

pub fn verify_cmd<T: Scalar>(p: &Problem<T>, case: &str, tol: f64) -> Result<Report, CliError> {
    let mut r = Report::new("verify");
    let spec = spec_of(p)?;
    let cases = if case == "all" {
        DpeCase::applicable(&spec)
    } else {
        let c: DpeCase = case.parse()?;
        if !DpeCase::applicable(&spec).contains(&c) {
            return Err(kernelcorrupt::Error::CaseMismatch(format!("{c} does not cover the given corruption")).into());
        }
        vec![c]
    };
    let problem = f64_problem(p)?;
    let spec64 = spec.to_f64();
    let corrupted = match &p.observed {
        Some(o) => o.clone(),
        None => corrupt(&p.joint, &spec)?,
    };
    r.line(format!("P̃ = {}", report::render_distribution(&corrupted)));
    r.set("corrupted", report::distribution(&corrupted));
    r.set("observed_override", json!(p.observed.is_some()));
    r.set("tolerance", report::float(tol));
    let observed = corrupted.to_f64();
    let mut reports = Vec::new();
    for c in cases {
        let rep = verify_dpe_with(&problem, &spec64, c, Some(&observed), tol)?;
        r.line(format!(
            "{c}: BR(P̃) = {}, BR(P; κ(ℓ∘H)) = {}, gap = {}, argmin {:?} vs {:?}: {}",
            rep.br_corrupted.render(),
            rep.br_transformed_clean.render(),
            rep.abs_gap.render(),
            rep.argmin_corrupted,
            rep.argmin_transformed,
            if rep.pass { "pass" } else { "FAIL" }
        ));
        r.pass &= rep.pass;
        reports.push(json!({
            "case": c.tag(),
            "br_corrupted": report::float(rep.br_corrupted),
            "br_transformed_clean": report::float(rep.br_transformed_clean),
            "abs_gap": report::float(rep.abs_gap),
            "argmin_corrupted": id_set(&rep.argmin_corrupted),
            "argmin_transformed": id_set(&rep.argmin_transformed),
            "argmin_match": rep.argmin_match,
            "pass": rep.pass,
        }));
    }
    r.set("dpe", Value::Array(reports));
    if spec.factors().is_some() {
        match factorized_corruption_identities(&p.joint, &spec) {
            Ok(d) => {
                let ok = d.pass(STRUCTURE_TOL);
                for route in &d.routes {
                    r.line(format!("route {}: max gap {}", route.route, route.max_abs_diff.render()));
                }
                r.pass &= ok;
                r.set(
                    "decomposition",
                    json!({
                        "case": d.case.tag(),
                        "routes": d.routes.iter().map(|x| json!({"route": x.route, "max_abs_diff": report::float(x.max_abs_diff)})).collect::<Vec<_>>(),
                        "pass": ok,
                    }),
                );
            }
            Err(kernelcorrupt::Error::DecompositionUnavailable(why)) => {
                r.line(format!("no factorized route: {why}"));
                r.set("decomposition", json!({"available": false, "reason": why}));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(r)
}

fn correction_tables(
    r: &mut Report,
    hs: &HypothesisClass,
    loss: &LossFunction,
    clean: &FiniteDistribution<f64>,
    corrupted: &FiniteDistribution<f64>,
    tol: f64,
    corrected: impl Fn(&MarkovKernel<f64>) -> Result<CorrectedLoss, CliError>,
) -> Result<Vec<Value>, CliError> {
    let mut out = Vec::new();
    for (i, h) in hs.hypotheses().iter().enumerate() {
        let cl = corrected(h)?;
        let table = cl.table(h)?;
        let lhs = cl.risk(h, corrupted)?;
        let rhs = risk(&loss_of(loss, h)?, clean)?;
        let gap = (lhs - rhs).abs();
        let ok = gap <= tol;
        r.pass &= ok;
        r.line(format!(
            "  h{i} {}: ℓ̃ = [{}], E_P̃[ℓ̃] = {}, E_P[ℓ] = {}{}",
            hypothesis_name(h),
            table.values().iter().map(Scalar::render).collect::<Vec<_>>().join(", "),
            lhs.render(),
            rhs.render(),
            if ok { "" } else { "  MISMATCH" }
        ));
        out.push(json!({
            "hypothesis": i,
            "name": hypothesis_name(h),
            "construction": cl.construction.tag(),
            "table": report::floats(table.values()),
            "corrected_risk": report::float(lhs),
            "clean_risk": report::float(rhs),
            "pass": ok,
        }));
    }
    Ok(out)
}

pub fn invert_cmd<T: Scalar>(p: &Problem<T>, seed: u64, tol: f64) -> Result<Report, CliError> {
    let mut r = Report::new("invert");
    let spec = spec_of(p)?;
    let kappa = build_joint(&spec)?;
    let inv = bayesian_inverse(&kappa, &p.joint)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let check = check_inverse_properties(&inv, 50, &mut rng)?;
    let double = inv.double_inverse_gap()?;
    let props_ok = check.pass(tol) && double <= tol;
    r.pass &= props_ok;
    r.line("κ† (cleaning kernel):");
    r.lines.extend(report::render_kernel("κ†", &inv.inverse));
    if !inv.off_support.is_empty() {
        let pts: Vec<String> = inv.off_support.iter().map(|&i| inv.inverse.domain().point_label(i)).collect();
        r.line(format!("off-support columns filled uniformly: {}", pts.join(", ")));
    }
    r.line(format!(
        "checks: reverse {}, coupling {}, expectation {} ({} functions), double inverse {}",
        check.reverse_gap.render(),
        check.coupling_gap.render(),
        check.expectation_gap.render(),
        check.functions_tested,
        double.render()
    ));
    r.set("inverse", report::kernel(&inv.inverse));
    r.set(
        "off_support",
        json!(inv.off_support.iter().map(|&i| inv.inverse.domain().point_label(i)).collect::<Vec<_>>()),
    );
    r.set(
        "checks",
        json!({
            "reverse_gap": report::float(check.reverse_gap),
            "coupling_gap": report::float(check.coupling_gap),
            "expectation_gap": report::float(check.expectation_gap),
            "functions_tested": check.functions_tested,
            "double_inverse_gap": report::float(double),
            "seed": seed,
            "pass": props_ok,
        }),
    );

    let clean = p.joint.to_f64();
    let corrupted = inv.target.to_f64();
    let label_only = matches!(&p.corruption, Corruption::Factorized { tau, .. } if classify(tau)? == CorruptionType::Identity);
    let correction = if label_only {
        let lambda = label_cleaning_kernel(&inv, STRUCTURE_TOL)?.to_f64();
        let cl = cl_corrected_loss(&lambda, &p.loss)?.with_attributes(&p.x)?;
        let path = cl.construction.tag();
        r.line(format!("correction: CL ({path}), λ': {}", lambda.signature()));
        let rows = correction_tables(&mut r, &p.hypotheses, &p.loss, &clean, &corrupted, tol, |_| Ok(cl.clone()))?;
        json!({"path": "cl", "construction": path, "lambda_clean": report::kernel(&lambda), "hypotheses": rows})
    } else {
        match split_joint(&inv.inverse, STRUCTURE_TOL) {
            Some((tc, lc)) => {
                let cleaning = CorruptionSpec::factorized(tc.to_f64(), lc.to_f64())?;
                let (t, l) = cleaning.factors().expect("factorized");
                let case = kernelcorrupt::inversion::gcl_case(&cleaning)?;
                r.line(format!("correction: GCL (gcl_case_{case}), τ': {}, λ': {}", t.signature(), l.signature()));
                let rows = correction_tables(&mut r, &p.hypotheses, &p.loss, &clean, &corrupted, tol, |h| {
                    Ok(gcl_corrected_loss(&cleaning, &p.loss, h)?)
                })?;
                json!({
                    "path": "gcl",
                    "construction": format!("gcl_case_{case}"),
                    "tau_clean": report::kernel(t),
                    "lambda_clean": report::kernel(l),
                    "hypotheses": rows,
                })
            }
            None => {
                r.line("correction: none (κ† does not split as τ'⊗λ')");
                json!({"path": "none"})
            }
        }
    };
    r.set("correction", correction);
    Ok(r)
}

pub fn suite_cmd(seed: u64, instances: usize, case: &str, tol: f64) -> Result<Report, CliError> {
    let mut r = Report::new("suite");
    let cases: Vec<DpeCase> = if case == "all" { DpeCase::ALL.to_vec() } else { vec![case.parse()?] };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for c in cases {
        let (dt, dl) = c.domains();
        let (mut worst, mut failures) = (0.0f64, 0usize);
        for _ in 0..instances {
            let (x, y) = random::spaces(&mut rng, 4, 3);
            let spec = random::factorized_spec(&mut rng, &x, &y, dt, dl);
            let p = random::joint(&mut rng, &x, &y);
            let problem =
                LearningProblem::new(LossFunction::brier(&y)?, HypothesisClass::all_deterministic(&x, &y)?, p)?;
            let rep = verify_dpe_with(&problem, &spec, c, None, tol)?;
            worst = worst.max(rep.abs_gap);
            failures += usize::from(!rep.pass);
        }
        r.pass &= failures == 0;
        r.line(format!("{c}: {instances} instances, max gap {}, failures {failures}", worst.render()));
        rows.push(json!({"case": c.tag(), "instances": instances, "max_gap": report::float(worst), "failures": failures}));
    }
    debug_assert_eq!(FEASIBLE_DOMAINS.len(), DpeCase::ALL.len());
    r.set("seed", json!(seed));
    r.set("tolerance", report::float(tol));
    r.set("cases", Value::Array(rows));
    Ok(r)
}
