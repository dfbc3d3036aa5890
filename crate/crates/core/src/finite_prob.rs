//! Finite spaces, distributions over them, and the two Bayes factorizations
//! of a joint on `X × Y`.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::kernel::{product, MarkovKernel};
use crate::scalar::Scalar;
use crate::EPS_MASS;

/// A named finite space with ordered, unique point labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteSpace {
    id: String,
    labels: Vec<String>,
}

impl FiniteSpace {
    pub fn new<I, S>(id: impl Into<String>, labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let id = id.into();
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptySpace(id));
        }
        let mut seen = BTreeSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel { space: id, label: label.clone() });
            }
        }
        Ok(FiniteSpace { id, labels })
    }

    /// Space with points labelled `0..n`.
    pub fn indexed(id: impl Into<String>, n: usize) -> Result<Self> {
        Self::new(id, (0..n).map(|i| i.to_string()))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Ordered product of finite spaces with distinct ids.
///
/// Points are enumerated with the first factor outermost, so for `[X, Y]` the
/// index of `(x, y)` is `x·|Y| + y`. The empty product is the one-point space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductSpace {
    factors: Vec<FiniteSpace>,
}

impl ProductSpace {
    pub fn new(factors: Vec<FiniteSpace>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for f in &factors {
            if !seen.insert(f.id()) {
                return Err(Error::SpaceMismatch(format!("factor `{}` appears twice", f.id())));
            }
        }
        Ok(ProductSpace { factors })
    }

    /// The one-point space `{*}`.
    pub fn unit() -> Self {
        ProductSpace { factors: Vec::new() }
    }

    pub fn factors(&self) -> &[FiniteSpace] {
        &self.factors
    }

    pub fn ids(&self) -> Vec<&str> {
        self.factors.iter().map(FiniteSpace::id).collect()
    }

    pub fn id_set(&self) -> BTreeSet<&str> {
        self.factors.iter().map(FiniteSpace::id).collect()
    }

    pub fn is_unit(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn len(&self) -> usize {
        self.factors.iter().map(FiniteSpace::len).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn factor(&self, id: &str) -> Option<&FiniteSpace> {
        self.factors.iter().find(|f| f.id() == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.id() == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.position(id).is_some()
    }

    /// Flat index of a coordinate tuple.
    pub fn index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.factors.len());
        coords
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&c, f)| acc * f.len() + c)
    }

    /// Coordinate tuple of a flat index.
    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, f) in out.iter_mut().zip(&self.factors).rev() {
            *slot = index % f.len();
            index /= f.len();
        }
        out
    }

    /// Human-readable label of a point, e.g. `(b,+1)`.
    pub fn point_label(&self, index: usize) -> String {
        match self.factors.len() {
            0 => "*".to_string(),
            1 => self.factors[0].labels()[index].clone(),
            _ => {
                let parts: Vec<&str> = self
                    .coords(index)
                    .iter()
                    .zip(&self.factors)
                    .map(|(&c, f)| f.labels()[c].as_str())
                    .collect();
                format!("({})", parts.join(","))
            }
        }
    }

    /// `true` when both spaces have the same factors up to order.
    pub fn same_set(&self, other: &ProductSpace) -> bool {
        self.factors.len() == other.factors.len()
            && other.factors.iter().all(|f| self.factor(f.id()) == Some(f))
    }

    /// Factors of `self` whose ids are listed, in the listed order.
    pub fn select(&self, ids: &[&str]) -> Result<ProductSpace> {
        let factors = ids
            .iter()
            .map(|id| {
                self.factor(id)
                    .cloned()
                    .ok_or_else(|| Error::SpaceMismatch(format!("no factor `{id}` in {self}")))
            })
            .collect::<Result<Vec<_>>>()?;
        ProductSpace::new(factors)
    }

    /// Factors of `self` not present in `other`, in `self`'s order.
    pub fn without(&self, other: &ProductSpace) -> ProductSpace {
        ProductSpace {
            factors: self.factors.iter().filter(|f| !other.contains(f.id())).cloned().collect(),
        }
    }

    /// Concatenation; shared ids must carry identical spaces and are kept once.
    pub fn union(&self, other: &ProductSpace) -> Result<ProductSpace> {
        let mut factors = self.factors.clone();
        for f in &other.factors {
            match self.factor(f.id()) {
                Some(existing) if existing != f => {
                    return Err(Error::SpaceMismatch(format!(
                        "factor `{}` has different points on each side",
                        f.id()
                    )))
                }
                Some(_) => {}
                None => factors.push(f.clone()),
            }
        }
        ProductSpace::new(factors)
    }

    /// Maps every index of `self` to the index of its restriction to `target`.
    ///
    /// Every factor of `target` must appear in `self` with the same points.
    pub fn projector(&self, target: &ProductSpace) -> Result<Vec<usize>> {
        let mut positions = Vec::with_capacity(target.factors.len());
        for f in &target.factors {
            match self.position(f.id()) {
                Some(p) if self.factors[p] == *f => positions.push(p),
                Some(_) => {
                    return Err(Error::SpaceMismatch(format!(
                        "factor `{}` has different points in {self} and {target}",
                        f.id()
                    )))
                }
                None => {
                    return Err(Error::SpaceMismatch(format!(
                        "factor `{}` of {target} is missing from {self}",
                        f.id()
                    )))
                }
            }
        }
        Ok((0..self.len())
            .map(|i| {
                let c = self.coords(i);
                let sub: Vec<usize> = positions.iter().map(|&p| c[p]).collect();
                target.index(&sub)
            })
            .collect())
    }
}

impl From<FiniteSpace> for ProductSpace {
    fn from(space: FiniteSpace) -> Self {
        ProductSpace { factors: vec![space] }
    }
}

impl fmt::Display for ProductSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "{{*}}");
        }
        write!(f, "{}", self.ids().join("×"))
    }
}

/// Probability vector over a product space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution<T> {
    space: ProductSpace,
    weights: Vec<T>,
}

impl<T: Scalar> FiniteDistribution<T> {
    pub fn new(space: impl Into<ProductSpace>, weights: Vec<T>) -> Result<Self> {
        let space = space.into();
        if weights.len() != space.len() {
            return Err(Error::DimensionMismatch { expected: space.len(), found: weights.len() });
        }
        let mut total = T::zero();
        for (index, w) in weights.iter().enumerate() {
            if *w < T::zero() {
                return Err(Error::NegativeWeight { index, value: w.to_f64() });
            }
            total = total + w.clone();
        }
        if !total.close_to(&T::one(), EPS_MASS) {
            return Err(Error::NotNormalized { total: total.to_f64() });
        }
        Ok(FiniteDistribution { space, weights })
    }

    pub(crate) fn from_parts(space: ProductSpace, weights: Vec<T>) -> Self {
        debug_assert_eq!(space.len(), weights.len());
        FiniteDistribution { space, weights }
    }

    pub fn uniform(space: impl Into<ProductSpace>) -> Self {
        let space = space.into();
        let n = space.len();
        let w = T::one() / T::from_usize(n);
        FiniteDistribution { weights: vec![w; n], space }
    }

    pub fn point(space: impl Into<ProductSpace>, index: usize) -> Result<Self> {
        let space = space.into();
        if index >= space.len() {
            return Err(Error::DimensionMismatch { expected: space.len(), found: index + 1 });
        }
        let mut weights = vec![T::zero(); space.len()];
        weights[index] = T::one();
        Ok(FiniteDistribution { space, weights })
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Marginal on the listed factors, in the listed order.
    pub fn marginal(&self, ids: &[&str]) -> Result<FiniteDistribution<T>> {
        let target = self.space.select(ids)?;
        let map = self.space.projector(&target)?;
        let mut weights = vec![T::zero(); target.len()];
        for (i, w) in self.weights.iter().enumerate() {
            weights[map[i]] = weights[map[i]].clone() + w.clone();
        }
        Ok(FiniteDistribution { space: target, weights })
    }

    /// Same distribution with factors enumerated in the order of `target`.
    pub fn reorder(&self, target: &ProductSpace) -> Result<FiniteDistribution<T>> {
        if !self.space.same_set(target) {
            return Err(Error::SpaceMismatch(format!(
                "cannot reorder a distribution on {} as {target}",
                self.space
            )));
        }
        let map = self.space.projector(target)?;
        let mut weights = vec![T::zero(); target.len()];
        for (i, w) in self.weights.iter().enumerate() {
            weights[map[i]] = w.clone();
        }
        Ok(FiniteDistribution { space: target.clone(), weights })
    }

    /// Largest pointwise difference; spaces must agree up to factor order.
    pub fn max_abs_diff(&self, other: &FiniteDistribution<T>) -> Result<f64> {
        let other = other.reorder(&self.space)?;
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64())
            .fold(0.0, f64::max))
    }

    /// Expectation of a function given on the same points.
    pub fn expect(&self, values: &[T]) -> T {
        self.weights
            .iter()
            .zip(values)
            .fold(T::zero(), |acc, (w, v)| acc + w.clone() * v.clone())
    }

    pub fn to_f64(&self) -> FiniteDistribution<f64> {
        FiniteDistribution {
            space: self.space.clone(),
            weights: self.weights.iter().map(Scalar::to_f64).collect(),
        }
    }

    /// Indices carrying positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > T::zero()).collect()
    }
}

/// Joint distribution on `X × Y` with `X` outermost.
pub fn make_joint<T: Scalar>(
    x: &FiniteSpace,
    y: &FiniteSpace,
    weights: Vec<T>,
) -> Result<FiniteDistribution<T>> {
    FiniteDistribution::new(ProductSpace::new(vec![x.clone(), y.clone()])?, weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Prior on `Y` and experiment `E: Y ⇝ X`.
    Generative,
    /// Prior on `X` and posterior `F: X ⇝ Y`.
    Discriminative,
}

/// A joint written as prior times conditional.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization<T> {
    pub direction: Direction,
    pub prior: FiniteDistribution<T>,
    pub conditional: MarkovKernel<T>,
    /// Prior points with zero mass, whose conditional was filled uniformly.
    pub flagged: Vec<usize>,
    joint_space: ProductSpace,
}

impl<T: Scalar> Factorization<T> {
    pub fn joint_space(&self) -> &ProductSpace {
        &self.joint_space
    }
}

/// Splits a two-factor joint into prior and conditional.
pub fn factorize<T: Scalar>(p: &FiniteDistribution<T>, direction: Direction) -> Result<Factorization<T>> {
    let factors = p.space().factors();
    if factors.len() != 2 {
        return Err(Error::NotAJoint(format!("{} has {} factors", p.space(), factors.len())));
    }
    let (given, other) = match direction {
        Direction::Generative => (&factors[1], &factors[0]),
        Direction::Discriminative => (&factors[0], &factors[1]),
    };
    let prior = p.marginal(&[given.id()])?;
    let ordered = p.reorder(&ProductSpace::new(vec![given.clone(), other.clone()])?)?;
    let n_other = other.len();
    let mut flagged = Vec::new();
    let mut matrix = vec![T::zero(); n_other * given.len()];
    for g in 0..given.len() {
        let mass = &prior.weights()[g];
        if mass.is_zero() {
            flagged.push(g);
        }
        for o in 0..n_other {
            matrix[o * given.len() + g] = if mass.is_zero() {
                T::one() / T::from_usize(n_other)
            } else {
                ordered.weights()[g * n_other + o].clone() / mass.clone()
            };
        }
    }
    let conditional = MarkovKernel::new(
        ProductSpace::from(given.clone()),
        ProductSpace::from(other.clone()),
        matrix,
    )?;
    Ok(Factorization { direction, prior, conditional, flagged, joint_space: p.space().clone() })
}

/// Recombines prior and conditional into the joint they came from.
pub fn reassemble<T: Scalar>(f: &Factorization<T>) -> Result<FiniteDistribution<T>> {
    let prior = MarkovKernel::from_distribution(&f.prior);
    let joint = product(&prior, &f.conditional)?.to_distribution()?;
    joint.reorder(&f.joint_space)
}
