//! Corruption models that are not a single Markov kernel acting on the joint:
//! mutually contaminated distributions and selection bias.

use crate::error::{Error, Result};
use crate::finite_prob::FiniteDistribution;
use crate::kernel::{act_on_dist, chain, delta, product, single, superpose, MarkovKernel};
use crate::scalar::Scalar;
use crate::taxonomy::find_connecting_kernel;
use crate::{EPS_MASS, X, Y};

/// Class-conditionals mixed by a matrix, with an independently given
/// marginal on the corrupted classes.
///
/// `mixing` is stored as a kernel from the `M` corrupted classes to the `K`
/// clean ones: column `m` holds `(π_{m,1}, …, π_{m,K})`, the weights of the
/// clean conditionals in the `m`-th contaminated conditional.
#[derive(Debug, Clone, PartialEq)]
pub struct McdSpec<T> {
    pub mixing: MarkovKernel<T>,
    /// `E: Y ⇝ X`, one conditional per clean class.
    pub clean_conditionals: MarkovKernel<T>,
    /// Marginal on the corrupted classes.
    pub corrupted_prior: FiniteDistribution<T>,
}

impl<T: Scalar> McdSpec<T> {
    pub fn new(
        mixing: MarkovKernel<T>,
        clean_conditionals: MarkovKernel<T>,
        corrupted_prior: FiniteDistribution<T>,
    ) -> Result<Self> {
        if clean_conditionals.domain().ids() != [Y] || clean_conditionals.image().ids() != [X] {
            return Err(Error::SignatureMismatch(format!(
                "class-conditionals must be Y⇝X, got {}",
                clean_conditionals.signature()
            )));
        }
        if mixing.image() != clean_conditionals.domain() {
            return Err(Error::DimensionMismatch {
                expected: clean_conditionals.domain().len(),
                found: mixing.image().len(),
            });
        }
        if corrupted_prior.space() != mixing.domain() {
            return Err(Error::DimensionMismatch { expected: mixing.domain().len(), found: corrupted_prior.len() });
        }
        Ok(McdSpec { mixing, clean_conditionals, corrupted_prior })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McdOutcome<T> {
    /// `Ẽ: Ỹ ⇝ X`, column `m` being `P̃_m`.
    pub corrupted_conditionals: MarkovKernel<T>,
    /// `π̃ × Ẽ` on `[X, Ỹ]`.
    pub corrupted_joint: FiniteDistribution<T>,
}

/// `P̃_m = Σ_k π_{m,k} P_k` and the joint they form with the corrupted prior.
pub fn mcd_corrupt<T: Scalar>(spec: &McdSpec<T>) -> Result<McdOutcome<T>> {
    let conditionals = chain(&spec.mixing, &spec.clean_conditionals)?;
    let prior = MarkovKernel::from_distribution(&spec.corrupted_prior);
    let joint = product(&prior, &conditionals)?.to_distribution()?;
    let target = joint.space().select(&[X, Y])?;
    Ok(McdOutcome { corrupted_conditionals: conditionals, corrupted_joint: joint.reorder(&target)? })
}

/// Mixing kernel reproducing class-conditional noise `λ_C: Y ⇝ Y` under the
/// clean class prior: `π_{m,k} = λ_C(m | k) π_k / Σ_j λ_C(m | j) π_j`.
pub fn ccn_to_mcd<T: Scalar>(lambda_c: &MarkovKernel<T>, prior: &FiniteDistribution<T>) -> Result<MarkovKernel<T>> {
    if lambda_c.domain() != prior.space() {
        return Err(Error::DimensionMismatch { expected: lambda_c.cols(), found: prior.len() });
    }
    let (m, k) = (lambda_c.rows(), lambda_c.cols());
    let mut matrix = vec![T::zero(); k * m];
    for row in 0..m {
        let terms: Vec<T> = (0..k).map(|j| lambda_c.get(row, j).clone() * prior.weights()[j].clone()).collect();
        let total = terms.iter().cloned().fold(T::zero(), |a, b| a + b);
        if total.is_zero() {
            return Err(Error::ZeroDenominator(row));
        }
        for (j, t) in terms.into_iter().enumerate() {
            matrix[j * m + row] = t / total.clone();
        }
    }
    MarkovKernel::new(lambda_c.image().clone(), lambda_c.domain().clone(), matrix)
}

/// Distance between the mixture joint and every joint obtainable by acting
/// on the clean joint with `δ_X ⊗ K`, where `K` is the mixing matrix read as
/// a label kernel in either orientation that is stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct McdComparison<T> {
    pub mcd_joint: FiniteDistribution<T>,
    pub markov_joints: Vec<FiniteDistribution<T>>,
    /// Smallest sup-distance between the mixture joint and a kernel action.
    pub min_gap: f64,
}

pub fn compare_mcd_with_label_kernel<T: Scalar>(
    spec: &McdSpec<T>,
    clean_joint: &FiniteDistribution<T>,
) -> Result<McdComparison<T>> {
    let mcd_joint = mcd_corrupt(spec)?.corrupted_joint;
    let y = clean_joint.space().select(&[Y])?;
    let x = clean_joint.space().select(&[X])?;
    if spec.mixing.domain() != &y || spec.mixing.image() != &y {
        return Err(Error::SpaceMismatch("mixing matrix must be square over the label space".into()));
    }
    let n = y.len();
    let as_is = spec.mixing.matrix().to_vec();
    let transposed: Vec<T> = (0..n * n).map(|k| as_is[(k % n) * n + k / n].clone()).collect();
    let mut markov_joints = Vec::new();
    for matrix in [as_is, transposed] {
        if let Ok(label) = MarkovKernel::new(y.clone(), y.clone(), matrix) {
            let joint = superpose(&delta(x.clone()), &label)?;
            let out = act_on_dist(&joint, clean_joint)?;
            markov_joints.push(out.reorder(mcd_joint.space())?);
        }
    }
    let min_gap = markov_joints
        .iter()
        .map(|j| mcd_joint.max_abs_diff(j))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(McdComparison { mcd_joint, markov_joints, min_gap })
}

/// Reweighting of a distribution by a density `α` with `Σ α P = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionBiasSpec<T> {
    pub alpha: Vec<T>,
    pub base: FiniteDistribution<T>,
}

impl<T: Scalar> SelectionBiasSpec<T> {
    pub fn new(alpha: Vec<T>, base: FiniteDistribution<T>) -> Result<Self> {
        if alpha.len() != base.len() {
            return Err(Error::DimensionMismatch { expected: base.len(), found: alpha.len() });
        }
        if let Some((index, a)) = alpha.iter().enumerate().find(|(_, a)| **a < T::zero()) {
            return Err(Error::NegativeWeight { index, value: a.to_f64() });
        }
        let total = base.expect(&alpha);
        if !total.close_to(&T::one(), EPS_MASS) {
            return Err(Error::NotADensity { total: total.to_f64() });
        }
        Ok(SelectionBiasSpec { alpha, base })
    }

    /// Rescales arbitrary non-negative weights into a density, returning the
    /// scale factor applied.
    pub fn from_weights(weights: Vec<T>, base: FiniteDistribution<T>) -> Result<(Self, T)> {
        if weights.len() != base.len() {
            return Err(Error::DimensionMismatch { expected: base.len(), found: weights.len() });
        }
        let total = base.expect(&weights);
        if total <= T::zero() {
            return Err(Error::NotADensity { total: total.to_f64() });
        }
        let scale = T::one() / total;
        let alpha = weights.into_iter().map(|w| w * scale.clone()).collect();
        Ok((Self::new(alpha, base)?, scale))
    }
}

/// `P̃(z) = α(z) P(z)`, without renormalization.
pub fn selection_bias_corrupt<T: Scalar>(spec: &SelectionBiasSpec<T>) -> Result<FiniteDistribution<T>> {
    let weights = spec.alpha.iter().zip(spec.base.weights()).map(|(a, p)| a.clone() * p.clone()).collect();
    FiniteDistribution::new(spec.base.space().clone(), weights)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionBiasWitness<T> {
    /// `diag(α)`, row-major.
    pub diagonal: Vec<T>,
    pub column_sums: Vec<T>,
    pub is_markov: bool,
    pub alpha_is_one: bool,
    /// A genuine Markov kernel with `P ∘ κ = P̃`.
    pub connecting_kernel: MarkovKernel<T>,
    pub connecting_gap: f64,
}

/// Builds the diagonal transition `κ(z, ·) = α(z) δ_z` and reports that it
/// conserves mass only when `α ≡ 1`, alongside a Markov kernel that does
/// connect `P` to `P̃`.
pub fn selection_bias_markov_witness<T: Scalar>(spec: &SelectionBiasSpec<T>) -> Result<SelectionBiasWitness<T>> {
    let n = spec.alpha.len();
    let mut diagonal = vec![T::zero(); n * n];
    for (z, a) in spec.alpha.iter().enumerate() {
        diagonal[z * n + z] = a.clone();
    }
    let column_sums: Vec<T> = (0..n)
        .map(|d| (0..n).fold(T::zero(), |acc, i| acc + diagonal[i * n + d].clone()))
        .collect();
    let is_markov = column_sums.iter().all(|s| s.close_to(&T::one(), EPS_MASS));
    let alpha_is_one = spec.alpha.iter().all(|a| a.close_to(&T::one(), EPS_MASS));
    let biased = selection_bias_corrupt(spec)?;
    let connecting_kernel = find_connecting_kernel(&spec.base, &biased)?;
    let connecting_gap = act_on_dist(&connecting_kernel, &spec.base)?.max_abs_diff(&biased)?;
    Ok(SelectionBiasWitness { diagonal, column_sums, is_markov, alpha_is_one, connecting_kernel, connecting_gap })
}

/// Class-conditional noise seen on a joint: `δ_X ⊗ λ_C` applied to `P`.
pub fn ccn_corrupt<T: Scalar>(p: &FiniteDistribution<T>, lambda_c: &MarkovKernel<T>) -> Result<FiniteDistribution<T>> {
    let x = single(p.space().factor(X).ok_or_else(|| Error::NotAJoint(format!("{}", p.space())))?);
    act_on_dist(&superpose(&delta(x), lambda_c)?, p)
}
