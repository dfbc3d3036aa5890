//! Classification of corruption kernels and construction of joint corruptions
//! on `X × Y`.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::finite_prob::{FiniteDistribution, ProductSpace};
use crate::kernel::{act_on_dist, constant, superpose, KernelSignature, MarkovKernel};
use crate::scalar::Scalar;
use crate::{EPS_MASS, X, Y};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CorruptionType {
    SimpleX,
    SimpleY,
    OneDependentYX,
    OneDependentXY,
    TwoDependentX,
    TwoDependentY,
    OneParamJointFromX,
    OneParamJointFromY,
    Joint,
    Identity,
    Constant,
}

impl CorruptionType {
    pub fn name(self) -> &'static str {
        match self {
            CorruptionType::SimpleX => "SimpleX",
            CorruptionType::SimpleY => "SimpleY",
            CorruptionType::OneDependentYX => "OneDependentYX",
            CorruptionType::OneDependentXY => "OneDependentXY",
            CorruptionType::TwoDependentX => "TwoDependentX",
            CorruptionType::TwoDependentY => "TwoDependentY",
            CorruptionType::OneParamJointFromX => "OneParamJointFromX",
            CorruptionType::OneParamJointFromY => "OneParamJointFromY",
            CorruptionType::Joint => "Joint",
            CorruptionType::Identity => "Identity",
            CorruptionType::Constant => "Constant",
        }
    }
}

impl fmt::Display for CorruptionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_roles(sig: &KernelSignature) -> Result<()> {
    match sig.domain.iter().chain(&sig.image).find(|id| *id != X && *id != Y) {
        Some(id) => Err(Error::UnknownRole(id.clone())),
        None => Ok(()),
    }
}

#[derive(Clone, Copy)]
enum Roles {
    X,
    Y,
    Both,
}

fn role_kind(set: &BTreeSet<&str>) -> Roles {
    match (set.contains(X), set.contains(Y)) {
        (true, true) => Roles::Both,
        (true, false) => Roles::X,
        _ => Roles::Y,
    }
}

/// Tag of a kernel by the roles it reads and writes.
///
/// Identity and constant kernels are reported as such before the
/// signature is considered.
pub fn classify<T: Scalar>(kappa: &MarkovKernel<T>) -> Result<CorruptionType> {
    let sig = kappa.signature();
    check_roles(&sig)?;
    if kappa.is_identity(EPS_MASS) {
        return Ok(CorruptionType::Identity);
    }
    if kappa.domain().is_unit() || kappa.is_constant(EPS_MASS) {
        return Ok(CorruptionType::Constant);
    }
    let (d, i) = (role_kind(&sig.domain_set()), role_kind(&sig.image_set()));
    let tag = match (d, i) {
        (Roles::X, Roles::X) => CorruptionType::SimpleX,
        (Roles::Y, Roles::Y) => CorruptionType::SimpleY,
        (Roles::Y, Roles::X) => CorruptionType::OneDependentYX,
        (Roles::X, Roles::Y) => CorruptionType::OneDependentXY,
        (Roles::Both, Roles::X) => CorruptionType::TwoDependentX,
        (Roles::Both, Roles::Y) => CorruptionType::TwoDependentY,
        (Roles::X, Roles::Both) => CorruptionType::OneParamJointFromX,
        (Roles::Y, Roles::Both) => CorruptionType::OneParamJointFromY,
        (Roles::Both, Roles::Both) => CorruptionType::Joint,
    };
    Ok(tag)
}

/// Whether `τ ⊗ λ` with these signatures is a joint corruption of `X × Y`.
///
/// `τ` must write `X` and `λ` must write `Y`, each must read something, and
/// together they must read both `X` and `Y`. This rules out pairing a
/// simple corruption with a one-dependent one on the same input.
pub fn check_pairwise_feasible(sig_tau: &KernelSignature, sig_lambda: &KernelSignature) -> bool {
    let only = |v: &[String], role: &str| v.len() == 1 && v[0] == role;
    let valid_domain = |v: &[String]| {
        !v.is_empty() && v.iter().all(|id| id == X || id == Y) && v.iter().collect::<BTreeSet<_>>().len() == v.len()
    };
    if !only(&sig_tau.image, X) || !only(&sig_lambda.image, Y) {
        return false;
    }
    if !valid_domain(&sig_tau.domain) || !valid_domain(&sig_lambda.domain) {
        return false;
    }
    let union: BTreeSet<&str> = sig_tau.domain_set().union(&sig_lambda.domain_set()).copied().collect();
    union == BTreeSet::from([X, Y])
}

/// Why a pair fails [`check_pairwise_feasible`], in words.
pub fn infeasibility_reason(sig_tau: &KernelSignature, sig_lambda: &KernelSignature) -> String {
    format!(
        "τ: {sig_tau} and λ: {sig_lambda} cannot be superposed into a joint corruption; \
         τ must write X, λ must write Y, and together they must read both X and Y \
         (a simple corruption cannot be paired with a one-dependent corruption reading the same space)"
    )
}

/// A joint corruption of `X × Y`, given whole or as a feasible pair.
#[derive(Debug, Clone, PartialEq)]
pub enum CorruptionSpec<T> {
    NonFactorized(MarkovKernel<T>),
    Factorized { tau: MarkovKernel<T>, lambda: MarkovKernel<T> },
}

impl<T: Scalar> CorruptionSpec<T> {
    pub fn factorized(tau: MarkovKernel<T>, lambda: MarkovKernel<T>) -> Result<Self> {
        let (st, sl) = (tau.signature(), lambda.signature());
        check_roles(&st)?;
        check_roles(&sl)?;
        if !check_pairwise_feasible(&st, &sl) {
            return Err(Error::InfeasibleFactorization(infeasibility_reason(&st, &sl)));
        }
        Ok(CorruptionSpec::Factorized { tau, lambda })
    }

    pub fn non_factorized(kappa: MarkovKernel<T>) -> Result<Self> {
        let sig = kappa.signature();
        check_roles(&sig)?;
        let full = BTreeSet::from([X, Y]);
        if sig.domain_set() != full || sig.image_set() != full {
            return Err(Error::SignatureMismatch(format!("joint corruption must be X×Y⇝X×Y, got {sig}")));
        }
        Ok(CorruptionSpec::NonFactorized(kappa))
    }

    /// `(τ, λ)` for factorized specs.
    pub fn factors(&self) -> Option<(&MarkovKernel<T>, &MarkovKernel<T>)> {
        match self {
            CorruptionSpec::Factorized { tau, lambda } => Some((tau, lambda)),
            CorruptionSpec::NonFactorized(_) => None,
        }
    }

    pub fn to_f64(&self) -> CorruptionSpec<f64> {
        match self {
            CorruptionSpec::NonFactorized(k) => CorruptionSpec::NonFactorized(k.to_f64()),
            CorruptionSpec::Factorized { tau, lambda } => {
                CorruptionSpec::Factorized { tau: tau.to_f64(), lambda: lambda.to_f64() }
            }
        }
    }
}

/// The `X × Y` space a kernel reads or writes, in `[X, Y]` order.
pub(crate) fn xy_space(a: &ProductSpace, b: &ProductSpace) -> Result<ProductSpace> {
    let u = a.union(b)?;
    u.select(&[X, Y])
}

/// The joint kernel `X × Y ⇝ X × Y`, both sides enumerated `[X, Y]`.
pub fn build_joint<T: Scalar>(spec: &CorruptionSpec<T>) -> Result<MarkovKernel<T>> {
    match spec {
        CorruptionSpec::NonFactorized(k) => {
            let xy = xy_space(k.domain(), k.image())?;
            k.reorder(&xy, &xy)
        }
        CorruptionSpec::Factorized { tau, lambda } => {
            let (st, sl) = (tau.signature(), lambda.signature());
            if !check_pairwise_feasible(&st, &sl) {
                return Err(Error::InfeasibleFactorization(infeasibility_reason(&st, &sl)));
            }
            let joint = superpose(tau, lambda)?;
            let xy = xy_space(joint.domain(), joint.image())?;
            joint.reorder(&xy, &xy)
        }
    }
}

/// `P̃ = P ∘ κ`.
pub fn corrupt<T: Scalar>(p: &FiniteDistribution<T>, spec: &CorruptionSpec<T>) -> Result<FiniteDistribution<T>> {
    act_on_dist(&build_joint(spec)?, p)
}

/// A Markov kernel taking `p` to `p_tilde`: the independent coupling, whose
/// columns all equal `p_tilde`. Many other kernels do the same job.
pub fn find_connecting_kernel<T: Scalar>(
    p: &FiniteDistribution<T>,
    p_tilde: &FiniteDistribution<T>,
) -> Result<MarkovKernel<T>> {
    if !p.space().same_set(p_tilde.space()) {
        return Err(Error::SpaceMismatch(format!("{} vs {}", p.space(), p_tilde.space())));
    }
    Ok(constant(&p_tilde.reorder(p.space())?, p.space().clone()))
}

/// Restriction of a kernel to the listed domain factors, if it ignores the rest.
pub fn restrict_domain<T: Scalar>(kappa: &MarkovKernel<T>, ids: &[&str], tol: f64) -> Option<MarkovKernel<T>> {
    let target = kappa.domain().select(ids).ok()?;
    let map = kappa.domain().projector(&target).ok()?;
    let mut first = vec![None; target.len()];
    for (d, &t) in map.iter().enumerate() {
        first[t].get_or_insert(d);
    }
    let cols = target.len();
    let mut matrix = Vec::with_capacity(kappa.rows() * cols);
    for i in 0..kappa.rows() {
        for f in &first {
            matrix.push(kappa.get(i, f.expect("projector is onto")).clone());
        }
    }
    let restricted = MarkovKernel::from_parts(target, kappa.image().clone(), matrix);
    let ok = (0..kappa.cols()).all(|d| (0..kappa.rows()).all(|i| kappa.get(i, d).close_to(restricted.get(i, map[d]), tol)));
    ok.then_some(restricted)
}

/// Feasible domain pairs `(τ reads, λ reads)`, simplest first.
pub const FEASIBLE_DOMAINS: [(&[&str], &[&str]); 7] = [
    (&[X], &[Y]),
    (&[Y], &[X]),
    (&[X, Y], &[Y]),
    (&[X], &[X, Y]),
    (&[Y], &[X, Y]),
    (&[X, Y], &[X]),
    (&[X, Y], &[X, Y]),
];

/// Writes a joint `X × Y ⇝ X × Y` kernel as a feasible `τ ⊗ λ` when it is one,
/// choosing the smallest domains that reproduce it.
pub fn split_joint<T: Scalar>(kappa: &MarkovKernel<T>, tol: f64) -> Option<(MarkovKernel<T>, MarkovKernel<T>)> {
    let xy = xy_space(kappa.domain(), kappa.image()).ok()?;
    let kappa = kappa.reorder(&xy, &xy).ok()?;
    let nx = xy.factors()[0].len();
    let ny = xy.factors()[1].len();
    let x_space = xy.select(&[X]).ok()?;
    let y_space = xy.select(&[Y]).ok()?;
    let cols = kappa.cols();
    let mut tau_m = vec![T::zero(); nx * cols];
    let mut lam_m = vec![T::zero(); ny * cols];
    for a in 0..nx {
        for b in 0..ny {
            for d in 0..cols {
                let v = kappa.get(a * ny + b, d).clone();
                tau_m[a * cols + d] = tau_m[a * cols + d].clone() + v.clone();
                lam_m[b * cols + d] = lam_m[b * cols + d].clone() + v;
            }
        }
    }
    let tau = MarkovKernel::from_parts(xy.clone(), x_space, tau_m);
    let lambda = MarkovKernel::from_parts(xy.clone(), y_space, lam_m);
    let rebuilt = superpose(&tau, &lambda).ok()?;
    if kappa.max_abs_diff(&rebuilt).ok()? > tol {
        return None;
    }
    FEASIBLE_DOMAINS.iter().find_map(|(dt, dl)| {
        Some((restrict_domain(&tau, dt, tol)?, restrict_domain(&lambda, dl, tol)?))
    })
}
