//! Bayesian inversion of kernels and corrected losses.
//!
//! The inverse of `κ: Z ⇝ Z̃` relative to `P` is the kernel
//! `κ†(z | z̃) = P(z) κ(z̃ | z) / P̃(z̃)` with `P̃ = P ∘ κ`. It sends `P̃` back
//! to `P` and induces the same coupling. Where `P̃(z̃) = 0` the column is
//! filled uniformly and recorded.

use std::collections::BTreeSet;

use rand::Rng;

use crate::decision::{bayes_risk, compose_loss_class, loss_of, HypothesisClass, LossFunction};
use crate::error::{Error, Result};
use crate::finite_prob::{FiniteDistribution, ProductSpace};
use crate::kernel::{act_on_dist, act_on_fn, MarkovKernel, RealFunction};
use crate::scalar::Scalar;
use crate::taxonomy::{build_joint, restrict_domain, xy_space, CorruptionSpec};
use crate::{EPS_MASS, EPS_TIE, X, Y};

#[derive(Debug, Clone, PartialEq)]
pub struct BayesianInverse<T> {
    pub forward: MarkovKernel<T>,
    pub source: FiniteDistribution<T>,
    /// `P̃ = P ∘ κ`.
    pub target: FiniteDistribution<T>,
    /// `κ†: image ⇝ domain`.
    pub inverse: MarkovKernel<T>,
    /// Columns of `κ†` where `P̃` has no mass.
    pub off_support: Vec<usize>,
}

pub fn bayesian_inverse<T: Scalar>(kappa: &MarkovKernel<T>, p: &FiniteDistribution<T>) -> Result<BayesianInverse<T>> {
    if !p.space().same_set(kappa.domain()) {
        return Err(Error::SpaceMismatch(format!(
            "source on {} for kernel {}",
            p.space(),
            kappa.signature()
        )));
    }
    let source = p.reorder(kappa.domain())?;
    let target = act_on_dist(kappa, &source)?;
    let (nz, nzt) = (kappa.cols(), kappa.rows());
    let uniform = T::one() / T::from_usize(nz);
    let mut off_support = Vec::new();
    let mut matrix = vec![T::zero(); nz * nzt];
    for zt in 0..nzt {
        let mass = &target.weights()[zt];
        if mass.is_zero() {
            off_support.push(zt);
        }
        for z in 0..nz {
            matrix[z * nzt + zt] = if mass.is_zero() {
                uniform.clone()
            } else {
                source.weights()[z].clone() * kappa.get(zt, z).clone() / mass.clone()
            };
        }
    }
    let inverse = MarkovKernel::new(kappa.image().clone(), kappa.domain().clone(), matrix)?;
    Ok(BayesianInverse { forward: kappa.clone(), source, target, inverse, off_support })
}

impl<T: Scalar> BayesianInverse<T> {
    /// Wraps an arbitrary candidate inverse, e.g. to show that it fails the checks.
    pub fn from_parts(
        forward: MarkovKernel<T>,
        source: FiniteDistribution<T>,
        inverse: MarkovKernel<T>,
    ) -> Result<Self> {
        if !inverse.domain().same_set(forward.image()) || !inverse.image().same_set(forward.domain()) {
            return Err(Error::SignatureMismatch(format!(
                "{} does not reverse {}",
                inverse.signature(),
                forward.signature()
            )));
        }
        let source = source.reorder(forward.domain())?;
        let target = act_on_dist(&forward, &source)?;
        let inverse = inverse.reorder(forward.image(), forward.domain())?;
        Ok(BayesianInverse { forward, source, target, inverse, off_support: Vec::new() })
    }

    /// `max |P̃ ∘ κ† − P|`.
    pub fn reverse_gap(&self) -> Result<f64> {
        act_on_dist(&self.inverse, &self.target)?.max_abs_diff(&self.source)
    }

    /// `max |P(z) κ(z̃|z) − P̃(z̃) κ†(z|z̃)|` over all pairs.
    pub fn coupling_gap(&self) -> f64 {
        let mut gap: f64 = 0.0;
        for z in 0..self.forward.cols() {
            for zt in 0..self.forward.rows() {
                let lhs = self.source.weights()[z].clone() * self.forward.get(zt, z).clone();
                let rhs = self.target.weights()[zt].clone() * self.inverse.get(z, zt).clone();
                gap = gap.max((lhs - rhs).abs().to_f64());
            }
        }
        gap
    }

    /// `|E_P[f] − E_P̃[κ† f]|`.
    pub fn expectation_gap(&self, f: &RealFunction<T>) -> Result<f64> {
        let lhs = f.integrate(&self.source)?;
        let rhs = act_on_fn(&self.inverse, f)?.integrate(&self.target)?;
        Ok((lhs - rhs).abs().to_f64())
    }

    /// Inverts `κ†` relative to `P̃` and compares with `κ` on the support of `P`.
    pub fn double_inverse_gap(&self) -> Result<f64> {
        let twice = bayesian_inverse(&self.inverse, &self.target)?;
        let mut gap: f64 = 0.0;
        for z in self.source.support() {
            for zt in 0..self.forward.rows() {
                gap = gap.max((twice.inverse.get(zt, z).clone() - self.forward.get(zt, z).clone()).abs().to_f64());
            }
        }
        Ok(gap)
    }
}

/// Gaps of the defining properties of an inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseCheck {
    pub reverse_gap: f64,
    pub coupling_gap: f64,
    /// Worst gap over the sampled test functions.
    pub expectation_gap: f64,
    pub functions_tested: usize,
}

impl InverseCheck {
    pub fn max_gap(&self) -> f64 {
        self.reverse_gap.max(self.coupling_gap).max(self.expectation_gap)
    }

    pub fn pass(&self, tol: f64) -> bool {
        self.max_gap() <= tol
    }
}

/// Checks reversal, coupling equality, and expectation preservation for
/// `functions` random test functions with values in `[-1, 1]`.
pub fn check_inverse_properties<T: Scalar, R: Rng + ?Sized>(
    inv: &BayesianInverse<T>,
    functions: usize,
    rng: &mut R,
) -> Result<InverseCheck> {
    let space = inv.forward.domain().clone();
    let mut expectation_gap: f64 = 0.0;
    for _ in 0..functions {
        let values = (0..space.len())
            .map(|_| T::from_f64(rng.random_range(-1.0..=1.0)).expect("finite"))
            .collect();
        let f = RealFunction::new(space.clone(), values)?;
        expectation_gap = expectation_gap.max(inv.expectation_gap(&f)?);
    }
    Ok(InverseCheck {
        reverse_gap: inv.reverse_gap()?,
        coupling_gap: inv.coupling_gap(),
        expectation_gap,
        functions_tested: functions,
    })
}

/// The label part `λ'` of an inverse of the form `δ_X ⊗ λ'` on `X × Y`.
///
/// Returns `λ': Y ⇝ Y` when it ignores the attribute and `λ': X × Y ⇝ Y`
/// otherwise. Off-support columns become uniform over `Y`.
pub fn label_cleaning_kernel<T: Scalar>(inv: &BayesianInverse<T>, tol: f64) -> Result<MarkovKernel<T>> {
    let k = &inv.inverse;
    let xy = xy_space(k.domain(), k.image()).map_err(|_| {
        Error::SignatureMismatch(format!("expected an inverse on X×Y, got {}", k.signature()))
    })?;
    if !k.domain().same_set(&xy) || !k.image().same_set(&xy) {
        return Err(Error::SignatureMismatch(format!("expected X×Y⇝X×Y, got {}", k.signature())));
    }
    let k = k.reorder(&xy, &xy)?;
    let off: BTreeSet<usize> = {
        let map = inv.forward.image().projector(&xy)?;
        inv.off_support.iter().map(|&i| map[i]).collect()
    };
    let ny = xy.factors()[1].len();
    let y_space = xy.select(&[Y])?;
    let cols = xy.len();
    let mut matrix = vec![T::zero(); ny * cols];
    for col in 0..cols {
        let xt = col / ny;
        for row in 0..cols {
            let (x, y) = (row / ny, row % ny);
            let v = k.get(row, col).clone();
            if off.contains(&col) {
                matrix[y * cols + col] = T::one() / T::from_usize(ny);
            } else if x == xt {
                matrix[y * cols + col] = v;
            } else if !v.close_to(&T::zero(), tol) {
                return Err(Error::SignatureMismatch(format!(
                    "inverse moves mass from {} to {}",
                    xy.point_label(col),
                    xy.point_label(row)
                )));
            }
        }
    }
    let lambda = MarkovKernel::new(xy, y_space, matrix)?;
    Ok(restrict_domain(&lambda, &[Y], tol).unwrap_or(lambda))
}

/// How a corrected loss was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// Label-only cleaning with `λ: Y ⇝ Y`.
    ClSimple,
    /// Label-only cleaning with `λ: X × Y ⇝ Y`.
    ClDependent,
    /// Attribute-involving cleaning; the number selects which inputs the
    /// pushforward and the label kernel read.
    Gcl(u8),
}

impl Construction {
    pub fn tag(self) -> String {
        match self {
            Construction::ClSimple => "cl_simple".into(),
            Construction::ClDependent => "cl_dependent".into(),
            Construction::Gcl(c) => format!("gcl_case_{c}"),
        }
    }
}

/// Mixture of predictions `h(x)` with weights `τ(args, x)`, duplicates merged.
#[derive(Debug, Clone, PartialEq)]
pub struct PushforwardDistribution {
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Column of `τ` the weights were read from.
    pub index: usize,
}

/// `(τ # h)(index)`.
pub fn pushforward(tau: &MarkovKernel<f64>, h: &MarkovKernel<f64>, index: usize) -> Result<PushforwardDistribution> {
    if tau.image() != h.domain() {
        return Err(Error::SpaceMismatch(format!(
            "τ writes {} but h reads {}",
            tau.image(),
            h.domain()
        )));
    }
    if index >= tau.cols() {
        return Err(Error::DimensionMismatch { expected: tau.cols(), found: index + 1 });
    }
    let mut support: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for x in 0..tau.rows() {
        let u = h.column(x);
        let w = *tau.get(x, index);
        match support
            .iter()
            .position(|s| s.iter().zip(&u).all(|(a, b)| (a - b).abs() <= EPS_MASS))
        {
            Some(k) => weights[k] += w,
            None => {
                support.push(u);
                weights.push(w);
            }
        }
    }
    Ok(PushforwardDistribution { support, weights, index })
}

/// `ℓ̃(h, x̃, ỹ)`, an expected loss under a cleaning kernel.
#[derive(Debug, Clone)]
pub struct CorrectedLoss {
    pub construction: Construction,
    /// `τ` lifted to read `[X, Y]`; `None` means `δ_X`.
    tau: Option<MarkovKernel<f64>>,
    /// `λ` lifted to read `[X, Y]`.
    lambda: MarkovKernel<f64>,
    loss: LossFunction,
    /// The hypothesis a hypothesis-dependent correction was built for.
    pub hypothesis: Option<MarkovKernel<f64>>,
    xy: ProductSpace,
}

impl CorrectedLoss {
    pub fn loss(&self) -> &LossFunction {
        &self.loss
    }

    pub fn space(&self) -> &ProductSpace {
        &self.xy
    }

    /// `Σ_y λ(args, y) ℓ(u, y)` at the corrupted point with flat index `zt`.
    fn lambda_loss(&self, u: &[f64], zt: usize) -> f64 {
        (0..self.lambda.rows()).map(|y| self.lambda.get(y, zt) * self.loss.eval(u, y)).sum()
    }

    /// `ℓ̃(h, x̃, ỹ)` for label indices into `X` and `Y`.
    pub fn value(&self, h: &MarkovKernel<f64>, xt: usize, yt: usize) -> Result<f64> {
        let ny = self.xy.factors()[1].len();
        let zt = xt * ny + yt;
        match &self.tau {
            None => Ok(self.lambda_loss(&h.column(xt), zt)),
            Some(tau) => {
                let push = pushforward(tau, h, zt)?;
                Ok(push.support.iter().zip(&push.weights).map(|(u, w)| w * self.lambda_loss(u, zt)).sum())
            }
        }
    }

    /// `ℓ̃(h, ·, ·)` as a function on `[X, Y]`.
    pub fn table(&self, h: &MarkovKernel<f64>) -> Result<RealFunction<f64>> {
        let (nx, ny) = (self.xy.factors()[0].len(), self.xy.factors()[1].len());
        let mut values = Vec::with_capacity(nx * ny);
        for xt in 0..nx {
            for yt in 0..ny {
                values.push(self.value(h, xt, yt)?);
            }
        }
        RealFunction::new(self.xy.clone(), values)
    }

    /// `E_P̃[ℓ̃(h, ·, ·)]`.
    pub fn risk(&self, h: &MarkovKernel<f64>, corrupted: &FiniteDistribution<f64>) -> Result<f64> {
        self.table(h)?.integrate(corrupted)
    }
}

/// Corrected loss for a label-only cleaning kernel `δ_X ⊗ λ`.
pub fn cl_corrected_loss(lambda_clean: &MarkovKernel<f64>, loss: &LossFunction) -> Result<CorrectedLoss> {
    let sig = lambda_clean.signature();
    if sig.image != [Y] {
        return Err(Error::SignatureMismatch(format!("label cleaning kernel must write Y, got {sig}")));
    }
    let construction = match sig.domain_set().into_iter().collect::<Vec<_>>().as_slice() {
        [y] if *y == Y => Construction::ClSimple,
        [a, b] if *a == X && *b == Y => Construction::ClDependent,
        _ => {
            return Err(Error::SignatureMismatch(format!(
                "label cleaning kernel must be Y⇝Y or X×Y⇝Y, got {sig}"
            )))
        }
    };
    if lambda_clean.rows() != loss.labels() {
        return Err(Error::DimensionMismatch { expected: loss.labels(), found: lambda_clean.rows() });
    }
    let xy = match construction {
        Construction::ClDependent => lambda_clean.domain().select(&[X, Y])?,
        _ => {
            return Ok(CorrectedLoss {
                construction,
                tau: None,
                lambda: lambda_clean.clone(),
                loss: loss.clone(),
                hypothesis: None,
                xy: lambda_clean.domain().clone(),
            })
        }
    };
    Ok(CorrectedLoss {
        construction,
        tau: None,
        lambda: lambda_clean.lift_domain(&xy)?,
        loss: loss.clone(),
        hypothesis: None,
        xy,
    })
}

impl CorrectedLoss {
    /// Gives a simple label correction an attribute space to index.
    pub fn with_attributes(mut self, x: &crate::finite_prob::FiniteSpace) -> Result<Self> {
        if self.xy.contains(X) {
            return Ok(self);
        }
        let xy = ProductSpace::new(vec![x.clone(), self.lambda.domain().factors()[0].clone()])?;
        self.lambda = self.lambda.lift_domain(&xy)?;
        self.xy = xy;
        Ok(self)
    }
}

/// Which of the four corrected-loss forms a cleaning pair `τ ⊗ λ` takes.
pub fn gcl_case<T: Scalar>(spec: &CorruptionSpec<T>) -> Result<u8> {
    let (tau, lambda) = spec.factors().ok_or_else(|| {
        Error::InfeasibleFactorization("the cleaning kernel is not given as τ⊗λ".into())
    })?;
    let (dt, dl) = (tau.domain().id_set(), lambda.domain().id_set());
    let x = BTreeSet::from([X]);
    let y = BTreeSet::from([Y]);
    let xy = BTreeSet::from([X, Y]);
    let case = if (dt == x && (dl == y || dl == xy)) || (dt == xy && dl == y) {
        1
    } else if dt == y && dl == x {
        2
    } else if (dt == y && dl == xy) || (dt == xy && dl == x) {
        3
    } else if dt == xy && dl == xy {
        4
    } else {
        return Err(Error::InfeasibleFactorization(format!(
            "τ: {}, λ: {}",
            tau.signature(),
            lambda.signature()
        )));
    };
    Ok(case)
}

/// Hypothesis-dependent corrected loss for a cleaning kernel `τ ⊗ λ`:
/// `ℓ̃(h, x̃, ỹ) = E_{u ∼ (τ # h)(args_τ)} Σ_y λ(args_λ, y) ℓ(u, y)`.
pub fn gcl_corrected_loss(
    clean_spec: &CorruptionSpec<f64>,
    loss: &LossFunction,
    h: &MarkovKernel<f64>,
) -> Result<CorrectedLoss> {
    let case = gcl_case(clean_spec)?;
    let (tau, lambda) = clean_spec.factors().expect("checked by gcl_case");
    let xy = xy_space(&tau.domain().union(tau.image())?, &lambda.domain().union(lambda.image())?)?;
    if h.domain() != tau.image() {
        return Err(Error::SpaceMismatch(format!("h reads {} but τ writes {}", h.domain(), tau.image())));
    }
    Ok(CorrectedLoss {
        construction: Construction::Gcl(case),
        tau: Some(tau.lift_domain(&xy)?),
        lambda: lambda.lift_domain(&xy)?,
        loss: loss.clone(),
        hypothesis: Some(h.clone()),
        xy,
    })
}

/// Outcome of searching a class for hypotheses whose transformed scores
/// reproduce the clean optimal scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatch {
    /// Minimizers `h*` of the clean problem.
    pub clean_argmin: BTreeSet<usize>,
    /// Hypotheses `h'` with `κ†(ℓ ∘ h') = ℓ ∘ h*` for some clean minimizer.
    pub matching: BTreeSet<usize>,
    /// Some matching hypothesis is not a clean minimizer.
    pub differs: bool,
}

/// For a cleaning kernel `κ†`, finds the hypotheses `h'` whose corrected
/// scores `κ†(ℓ ∘ h')` coincide pointwise with the clean optimal scores
/// `ℓ ∘ h*`.
pub fn match_optimal_scores(
    cleaning: &CorruptionSpec<f64>,
    loss: &LossFunction,
    hypotheses: &HypothesisClass,
    clean: &FiniteDistribution<f64>,
    tol: f64,
) -> Result<ScoreMatch> {
    let joint = build_joint(cleaning)?;
    let clean_argmin = bayes_risk(&compose_loss_class(loss, hypotheses)?, clean)?.argmin;
    let hs = hypotheses.hypotheses();
    let targets = clean_argmin
        .iter()
        .map(|&i| loss_of(loss, &hs[i]))
        .collect::<Result<Vec<_>>>()?;
    let mut matching = BTreeSet::new();
    for (j, h) in hs.iter().enumerate() {
        let scores = act_on_fn(&joint, &loss_of(loss, h)?)?;
        for t in &targets {
            let t = t.reorder(scores.space())?;
            if scores.values().iter().zip(t.values()).all(|(a, b)| (a - b).abs() <= tol) {
                matching.insert(j);
            }
        }
    }
    let differs = matching.iter().any(|j| !clean_argmin.contains(j));
    Ok(ScoreMatch { clean_argmin, matching, differs })
}

/// Minimizers of `E_P̃[ℓ̃(h, ·, ·)]` over a class for a label correction.
pub fn corrected_argmin(
    corrected: &CorrectedLoss,
    hypotheses: &HypothesisClass,
    corrupted: &FiniteDistribution<f64>,
) -> Result<(f64, BTreeSet<usize>, Vec<f64>)> {
    let risks = hypotheses
        .hypotheses()
        .iter()
        .map(|h| corrected.risk(h, corrupted))
        .collect::<Result<Vec<_>>>()?;
    let best = risks.iter().copied().fold(f64::INFINITY, f64::min);
    let argmin = (0..risks.len()).filter(|&i| risks[i] <= best + EPS_TIE).collect();
    Ok((best, argmin, risks))
}
