//! Data-processing equalities for Bayes risk.
//!
//! For a factorized corruption `κ = τ ⊗ λ` the Bayes risk of `ℓ ∘ H` on the
//! corrupted joint `P ∘ κ` equals the Bayes risk on the clean joint `P` of the
//! transformed set `{κ(ℓ ∘ h)}`, with the same minimizing hypotheses. This
//! module builds the transformed sets, checks the equality, and rebuilds the
//! corrupted joint through the factorized routes available for each case.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::decision::{bayes_risk, compose_loss_class, loss_of, HypothesisClass, LearningProblem, LossFunction, MinimizationSet};
use crate::error::{Error, Result};
use crate::finite_prob::{factorize, Direction, FiniteDistribution};
use crate::kernel::{act_on_dist, act_on_fn, chain, partial_chain, superpose, MarkovKernel};
use crate::scalar::Scalar;
use crate::taxonomy::{build_joint, corrupt, xy_space, CorruptionSpec};
use crate::{EPS_DPE, X, Y};

/// The seven feasible pairs, named by what `τ` and `λ` read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DpeCase {
    /// `τ: X ⇝ X`, `λ: Y ⇝ Y`.
    SimpleSimple,
    /// `τ: X × Y ⇝ X`, `λ: Y ⇝ Y`.
    TwoDepXSimpleY,
    /// `τ: X ⇝ X`, `λ: X × Y ⇝ Y`.
    SimpleXTwoDepY,
    /// `τ: Y ⇝ X`, `λ: X × Y ⇝ Y`.
    OneDepYXTwoDepY,
    /// `τ: X × Y ⇝ X`, `λ: X ⇝ Y`.
    TwoDepXOneDepXY,
    /// `τ: Y ⇝ X`, `λ: X ⇝ Y`.
    OneDepYXOneDepXY,
    /// `τ: X × Y ⇝ X`, `λ: X × Y ⇝ Y`.
    TwoDepXTwoDepY,
}

impl DpeCase {
    pub const ALL: [DpeCase; 7] = [
        DpeCase::SimpleSimple,
        DpeCase::TwoDepXSimpleY,
        DpeCase::SimpleXTwoDepY,
        DpeCase::OneDepYXTwoDepY,
        DpeCase::TwoDepXOneDepXY,
        DpeCase::OneDepYXOneDepXY,
        DpeCase::TwoDepXTwoDepY,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            DpeCase::SimpleSimple => "simple_simple",
            DpeCase::TwoDepXSimpleY => "twodepx_simpley",
            DpeCase::SimpleXTwoDepY => "simplex_twodepy",
            DpeCase::OneDepYXTwoDepY => "onedepyx_twodepy",
            DpeCase::TwoDepXOneDepXY => "twodepx_onedepxy",
            DpeCase::OneDepYXOneDepXY => "onedepyx_onedepxy",
            DpeCase::TwoDepXTwoDepY => "twodepx_twodepy",
        }
    }

    /// Domains of `τ` and `λ`.
    pub fn domains(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            DpeCase::SimpleSimple => (&[X], &[Y]),
            DpeCase::TwoDepXSimpleY => (&[X, Y], &[Y]),
            DpeCase::SimpleXTwoDepY => (&[X], &[X, Y]),
            DpeCase::OneDepYXTwoDepY => (&[Y], &[X, Y]),
            DpeCase::TwoDepXOneDepXY => (&[X, Y], &[X]),
            DpeCase::OneDepYXOneDepXY => (&[Y], &[X]),
            DpeCase::TwoDepXTwoDepY => (&[X, Y], &[X, Y]),
        }
    }

    /// The case whose domains are exactly those of the corruption's factors.
    pub fn of_spec<T: Scalar>(spec: &CorruptionSpec<T>) -> Option<DpeCase> {
        let (tau, lambda) = spec.factors()?;
        let (dt, dl) = (tau.domain().id_set(), lambda.domain().id_set());
        DpeCase::ALL.into_iter().find(|c| {
            let (a, b) = c.domains();
            dt == a.iter().copied().collect() && dl == b.iter().copied().collect()
        })
    }

    /// Cases whose factor domains contain those of the spec. A kernel
    /// reading fewer factors is the special case that ignores the others.
    /// Non-factorized specs fit only the fully dependent case.
    pub fn applicable<T: Scalar>(spec: &CorruptionSpec<T>) -> Vec<DpeCase> {
        let Some((tau, lambda)) = spec.factors() else {
            return vec![DpeCase::TwoDepXTwoDepY];
        };
        let (dt, dl) = (tau.domain().id_set(), lambda.domain().id_set());
        DpeCase::ALL
            .into_iter()
            .filter(|c| {
                let (a, b) = c.domains();
                let a: BTreeSet<&str> = a.iter().copied().collect();
                let b: BTreeSet<&str> = b.iter().copied().collect();
                dt.is_subset(&a) && dl.is_subset(&b)
            })
            .collect()
    }
}

impl fmt::Display for DpeCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DpeCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DpeCase::ALL
            .into_iter()
            .find(|c| c.tag() == s)
            .ok_or_else(|| Error::CaseMismatch(format!("unknown case `{s}`")))
    }
}

/// The corruption with both factors read as the given case.
pub fn lift_to_case<T: Scalar>(spec: &CorruptionSpec<T>, case: DpeCase) -> Result<CorruptionSpec<T>> {
    if !DpeCase::applicable(spec).contains(&case) {
        return Err(Error::CaseMismatch(format!("{case} does not cover the given corruption")));
    }
    let Some((tau, lambda)) = spec.factors() else {
        return Ok(spec.clone());
    };
    let xy = xy_space(&tau.domain().union(tau.image())?, &lambda.domain().union(lambda.image())?)?;
    let (dt, dl) = case.domains();
    let tau = tau.lift_domain(&xy.select(dt)?)?;
    let lambda = lambda.lift_domain(&xy.select(dl)?)?;
    CorruptionSpec::factorized(tau, lambda)
}

/// `{κ(ℓ ∘ h) : h ∈ H}` on the clean `X × Y`.
pub fn transformed_set(
    spec: &CorruptionSpec<f64>,
    loss: &LossFunction,
    hypotheses: &HypothesisClass,
    case: DpeCase,
) -> Result<MinimizationSet> {
    let joint = build_joint(&lift_to_case(spec, case)?)?;
    let functions = hypotheses
        .hypotheses()
        .iter()
        .map(|h| act_on_fn(&joint, &loss_of(loss, h)?))
        .collect::<Result<Vec<_>>>()?;
    MinimizationSet::new(functions, (0..hypotheses.len()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpeReport {
    pub case: DpeCase,
    pub br_corrupted: f64,
    pub br_transformed_clean: f64,
    pub abs_gap: f64,
    pub argmin_corrupted: BTreeSet<usize>,
    pub argmin_transformed: BTreeSet<usize>,
    pub argmin_match: bool,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn verify_dpe(problem: &LearningProblem, spec: &CorruptionSpec<f64>, case: DpeCase) -> Result<DpeReport> {
    verify_dpe_with(problem, spec, case, None, EPS_DPE)
}

/// As [`verify_dpe`], optionally evaluating the corrupted side on an
/// externally supplied joint instead of `P ∘ κ`.
pub fn verify_dpe_with(
    problem: &LearningProblem,
    spec: &CorruptionSpec<f64>,
    case: DpeCase,
    observed: Option<&FiniteDistribution<f64>>,
    tolerance: f64,
) -> Result<DpeReport> {
    let corrupted = match observed {
        Some(p) => p.clone(),
        None => corrupt(&problem.joint, spec)?,
    };
    let lhs = bayes_risk(&compose_loss_class(&problem.loss, &problem.hypotheses)?, &corrupted)?;
    let rhs = bayes_risk(&transformed_set(spec, &problem.loss, &problem.hypotheses, case)?, &problem.joint)?;
    let abs_gap = (lhs.value - rhs.value).abs();
    let argmin_match = lhs.argmin == rhs.argmin;
    Ok(DpeReport {
        case,
        br_corrupted: lhs.value,
        br_transformed_clean: rhs.value,
        abs_gap,
        argmin_corrupted: lhs.argmin,
        argmin_transformed: rhs.argmin,
        argmin_match,
        tolerance,
        pass: abs_gap <= tolerance && argmin_match,
    })
}

/// One factorized rebuild of the corrupted joint.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteCheck {
    pub route: &'static str,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub case: DpeCase,
    pub routes: Vec<RouteCheck>,
}

impl DecompositionReport {
    pub fn max_abs_diff(&self) -> f64 {
        self.routes.iter().map(|r| r.max_abs_diff).fold(0.0, f64::max)
    }

    pub fn pass(&self, tol: f64) -> bool {
        self.max_abs_diff() <= tol
    }
}

/// Rebuilds `P ∘ (τ ⊗ λ)` from the experiment `(π_Y, E)` or posterior
/// `(π_X, F)` of `P`, along every route the corruption's case admits, and compares
/// each to direct corruption.
pub fn factorized_corruption_identities<T: Scalar>(
    p: &FiniteDistribution<T>,
    spec: &CorruptionSpec<T>,
) -> Result<DecompositionReport> {
    let (tau, lambda) = spec.factors().ok_or_else(|| {
        Error::DecompositionUnavailable("a corruption given as a single joint kernel".into())
    })?;
    let case = DpeCase::of_spec(spec)
        .ok_or_else(|| Error::CaseMismatch(format!("τ: {}, λ: {}", tau.signature(), lambda.signature())))?;
    if case == DpeCase::TwoDepXTwoDepY {
        return Err(Error::DecompositionUnavailable(format!("{case}: both factors read X and Y")));
    }
    let gen = factorize(p, Direction::Generative)?;
    let disc = factorize(p, Direction::Discriminative)?;
    let (pi_y, e) = (&gen.prior, &gen.conditional);
    let (pi_x, f) = (&disc.prior, &disc.conditional);
    let via = |prior: &FiniteDistribution<T>, k: MarkovKernel<T>| act_on_dist(&k, prior);
    let rebuilt: Vec<(&'static str, FiniteDistribution<T>)> = match case {
        DpeCase::SimpleSimple => vec![
            ("π_Y∘((E∘τ)⊗λ)", via(pi_y, superpose(&chain(e, tau)?, lambda)?)?),
            ("π_X∘(τ⊗(F∘λ))", via(pi_x, superpose(tau, &chain(f, lambda)?)?)?),
        ],
        DpeCase::TwoDepXSimpleY => {
            vec![("π_Y∘((E∘_Xτ)⊗λ)", via(pi_y, superpose(&partial_chain(e, tau, &[X])?, lambda)?)?)]
        }
        DpeCase::SimpleXTwoDepY => {
            vec![("π_X∘(τ⊗(F∘_Yλ))", via(pi_x, superpose(tau, &partial_chain(f, lambda, &[Y])?)?)?)]
        }
        DpeCase::OneDepYXTwoDepY => {
            vec![("π_Y∘(τ⊗(E∘_Xλ))", via(pi_y, superpose(tau, &partial_chain(e, lambda, &[X])?)?)?)]
        }
        DpeCase::TwoDepXOneDepXY => {
            vec![("π_X∘((F∘_Yτ)⊗λ)", via(pi_x, superpose(&partial_chain(f, tau, &[Y])?, lambda)?)?)]
        }
        DpeCase::OneDepYXOneDepXY => vec![
            ("π_Y∘(τ⊗(E∘λ))", via(pi_y, superpose(tau, &chain(e, lambda)?)?)?),
            ("π_X∘((F∘τ)⊗λ)", via(pi_x, superpose(&chain(f, tau)?, lambda)?)?),
        ],
        DpeCase::TwoDepXTwoDepY => unreachable!("handled above"),
    };
    let direct = corrupt(p, spec)?;
    let routes = rebuilt
        .into_iter()
        .map(|(route, q)| Ok(RouteCheck { route, max_abs_diff: direct.max_abs_diff(&q)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecompositionReport { case, routes })
}
