//! Markov kernels between finite product spaces and their composition rules.
//!
//! A kernel `κ: D ⇝ I` is stored as a column-stochastic `|I| × |D|` matrix, so
//! acting on a distribution is a matrix-vector product. Spaces are matched by
//! factor id, never by position: operands whose factors appear in different
//! orders are aligned before any arithmetic.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::finite_prob::{FiniteDistribution, FiniteSpace, ProductSpace};
use crate::scalar::Scalar;
use crate::EPS_MASS;

/// Factor ids read and written by a kernel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelSignature {
    pub domain: Vec<String>,
    pub image: Vec<String>,
}

impl KernelSignature {
    pub fn new(domain: &[&str], image: &[&str]) -> Self {
        KernelSignature {
            domain: domain.iter().map(|s| s.to_string()).collect(),
            image: image.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn domain_set(&self) -> BTreeSet<&str> {
        self.domain.iter().map(String::as_str).collect()
    }

    pub fn image_set(&self) -> BTreeSet<&str> {
        self.image.iter().map(String::as_str).collect()
    }
}

impl std::fmt::Display for KernelSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let side = |v: &[String]| if v.is_empty() { "*".to_string() } else { v.join("×") };
        write!(f, "{}⇝{}", side(&self.domain), side(&self.image))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel<T> {
    domain: ProductSpace,
    image: ProductSpace,
    /// Row-major, rows indexed by image points and columns by domain points.
    matrix: Vec<T>,
}

impl<T: Scalar> MarkovKernel<T> {
    /// Validates shape, sign and column sums.
    pub fn new(domain: ProductSpace, image: ProductSpace, matrix: Vec<T>) -> Result<Self> {
        let expected = domain.len() * image.len();
        if matrix.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: matrix.len() });
        }
        let k = MarkovKernel { domain, image, matrix };
        k.validate()?;
        Ok(k)
    }

    pub(crate) fn from_parts(domain: ProductSpace, image: ProductSpace, matrix: Vec<T>) -> Self {
        debug_assert_eq!(matrix.len(), domain.len() * image.len());
        MarkovKernel { domain, image, matrix }
    }

    /// Builds a kernel from `entry(image_index, domain_index)`.
    pub fn from_fn(
        domain: ProductSpace,
        image: ProductSpace,
        mut entry: impl FnMut(usize, usize) -> T,
    ) -> Result<Self> {
        let cols = domain.len();
        let matrix = (0..image.len() * cols).map(|k| entry(k / cols, k % cols)).collect();
        Self::new(domain, image, matrix)
    }

    fn validate(&self) -> Result<()> {
        for (index, v) in self.matrix.iter().enumerate() {
            if *v < T::zero() {
                return Err(Error::NegativeWeight { index, value: v.to_f64() });
            }
        }
        for d in 0..self.cols() {
            let total = (0..self.rows()).fold(T::zero(), |acc, i| acc + self.get(i, d).clone());
            if !total.close_to(&T::one(), EPS_MASS) {
                return Err(Error::NotStochastic { column: d, total: total.to_f64() });
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> &ProductSpace {
        &self.domain
    }

    pub fn image(&self) -> &ProductSpace {
        &self.image
    }

    pub fn matrix(&self) -> &[T] {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.image.len()
    }

    pub fn cols(&self) -> usize {
        self.domain.len()
    }

    /// `κ(d, {i})`.
    pub fn get(&self, i: usize, d: usize) -> &T {
        &self.matrix[i * self.cols() + d]
    }

    pub fn column(&self, d: usize) -> Vec<T> {
        (0..self.rows()).map(|i| self.get(i, d).clone()).collect()
    }

    pub fn signature(&self) -> KernelSignature {
        KernelSignature::new(&self.domain.ids(), &self.image.ids())
    }

    /// Column sums; all equal one for a valid kernel.
    pub fn column_sums(&self) -> Vec<T> {
        (0..self.cols())
            .map(|d| (0..self.rows()).fold(T::zero(), |acc, i| acc + self.get(i, d).clone()))
            .collect()
    }

    /// Domain and image carry the same factors and the aligned matrix is the identity.
    pub fn is_identity(&self, tol: f64) -> bool {
        if !self.domain.same_set(&self.image) {
            return false;
        }
        let Ok(map) = self.domain.projector(&self.image) else {
            return false;
        };
        (0..self.cols()).all(|d| {
            (0..self.rows()).all(|i| {
                let want = if map[d] == i { T::one() } else { T::zero() };
                self.get(i, d).close_to(&want, tol)
            })
        })
    }

    /// All columns agree, so the output ignores the input.
    pub fn is_constant(&self, tol: f64) -> bool {
        (1..self.cols()).all(|d| (0..self.rows()).all(|i| self.get(i, d).close_to(self.get(i, 0), tol)))
    }

    /// The distribution seen as a kernel from the one-point space.
    pub fn from_distribution(dist: &FiniteDistribution<T>) -> Self {
        MarkovKernel {
            domain: ProductSpace::unit(),
            image: dist.space().clone(),
            matrix: dist.weights().to_vec(),
        }
    }

    /// Inverse of [`MarkovKernel::from_distribution`].
    pub fn to_distribution(&self) -> Result<FiniteDistribution<T>> {
        if !self.domain.is_unit() {
            return Err(Error::SpaceMismatch(format!(
                "kernel on {} is not a distribution",
                self.domain
            )));
        }
        Ok(FiniteDistribution::from_parts(self.image.clone(), self.matrix.clone()))
    }

    /// Same kernel with domain and image factors enumerated in the given orders.
    pub fn reorder(&self, domain: &ProductSpace, image: &ProductSpace) -> Result<Self> {
        if !self.domain.same_set(domain) || !self.image.same_set(image) {
            return Err(Error::SpaceMismatch(format!(
                "cannot reorder {} as {domain}⇝{image}",
                self.signature()
            )));
        }
        let dmap = self.domain.projector(domain)?;
        let imap = self.image.projector(image)?;
        let mut matrix = vec![T::zero(); self.matrix.len()];
        let cols = domain.len();
        for i in 0..self.rows() {
            for d in 0..self.cols() {
                matrix[imap[i] * cols + dmap[d]] = self.get(i, d).clone();
            }
        }
        Ok(MarkovKernel { domain: domain.clone(), image: image.clone(), matrix })
    }

    /// Extends the domain to a superset, ignoring the added factors.
    pub fn lift_domain(&self, domain: &ProductSpace) -> Result<Self> {
        let map = domain.projector(&self.domain)?;
        let cols = domain.len();
        let mut matrix = Vec::with_capacity(self.rows() * cols);
        for i in 0..self.rows() {
            for &d in &map {
                matrix.push(self.get(i, d).clone());
            }
        }
        Ok(MarkovKernel { domain: domain.clone(), image: self.image.clone(), matrix })
    }

    /// Largest entrywise difference after aligning `other` to this kernel's order.
    pub fn max_abs_diff(&self, other: &MarkovKernel<T>) -> Result<f64> {
        let other = other.reorder(&self.domain, &self.image)?;
        Ok(self
            .matrix
            .iter()
            .zip(&other.matrix)
            .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64())
            .fold(0.0, f64::max))
    }

    pub fn to_f64(&self) -> MarkovKernel<f64> {
        MarkovKernel {
            domain: self.domain.clone(),
            image: self.image.clone(),
            matrix: self.matrix.iter().map(Scalar::to_f64).collect(),
        }
    }
}

/// A real-valued function on a product space.
#[derive(Debug, Clone, PartialEq)]
pub struct RealFunction<T> {
    space: ProductSpace,
    values: Vec<T>,
}

impl<T: Scalar> RealFunction<T> {
    pub fn new(space: impl Into<ProductSpace>, values: Vec<T>) -> Result<Self> {
        let space = space.into();
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch { expected: space.len(), found: values.len() });
        }
        Ok(RealFunction { space, values })
    }

    pub fn constant(space: impl Into<ProductSpace>, c: T) -> Self {
        let space = space.into();
        RealFunction { values: vec![c; space.len()], space }
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn reorder(&self, target: &ProductSpace) -> Result<Self> {
        if !self.space.same_set(target) {
            return Err(Error::SpaceMismatch(format!("cannot reorder {} as {target}", self.space)));
        }
        let map = self.space.projector(target)?;
        let mut values = vec![T::zero(); self.values.len()];
        for (i, v) in self.values.iter().enumerate() {
            values[map[i]] = v.clone();
        }
        Ok(RealFunction { space: target.clone(), values })
    }

    /// `⟨μ, f⟩`.
    pub fn integrate(&self, mu: &FiniteDistribution<T>) -> Result<T> {
        let f = self.reorder(mu.space())?;
        Ok(mu.expect(&f.values))
    }
}

/// Identity kernel on a space.
pub fn delta<T: Scalar>(space: impl Into<ProductSpace>) -> MarkovKernel<T> {
    let space = space.into();
    let n = space.len();
    let matrix = (0..n * n).map(|k| if k / n == k % n { T::one() } else { T::zero() }).collect();
    MarkovKernel::from_parts(space.clone(), space, matrix)
}

/// Kernel whose every column equals `target`.
pub fn constant<T: Scalar>(target: &FiniteDistribution<T>, domain: impl Into<ProductSpace>) -> MarkovKernel<T> {
    let domain = domain.into();
    let cols = domain.len();
    let mut matrix = Vec::with_capacity(target.len() * cols);
    for w in target.weights() {
        matrix.extend(std::iter::repeat_n(w.clone(), cols));
    }
    MarkovKernel::from_parts(domain, target.space().clone(), matrix)
}

/// `μκ`, the image of a distribution under a kernel.
pub fn act_on_dist<T: Scalar>(kappa: &MarkovKernel<T>, mu: &FiniteDistribution<T>) -> Result<FiniteDistribution<T>> {
    if !mu.space().same_set(kappa.domain()) {
        return Err(Error::SpaceMismatch(format!(
            "distribution on {} fed to kernel {}",
            mu.space(),
            kappa.signature()
        )));
    }
    let mu = mu.reorder(kappa.domain())?;
    let weights = (0..kappa.rows())
        .map(|i| {
            (0..kappa.cols()).fold(T::zero(), |acc, d| acc + kappa.get(i, d).clone() * mu.weights()[d].clone())
        })
        .collect();
    Ok(FiniteDistribution::from_parts(kappa.image().clone(), weights))
}

/// `κf`, the expectation of `f` under each column.
pub fn act_on_fn<T: Scalar>(kappa: &MarkovKernel<T>, f: &RealFunction<T>) -> Result<RealFunction<T>> {
    if !f.space().same_set(kappa.image()) {
        return Err(Error::SpaceMismatch(format!(
            "function on {} fed to kernel {}",
            f.space(),
            kappa.signature()
        )));
    }
    let f = f.reorder(kappa.image())?;
    let values = (0..kappa.cols())
        .map(|d| {
            (0..kappa.rows()).fold(T::zero(), |acc, i| acc + kappa.get(i, d).clone() * f.values()[i].clone())
        })
        .collect();
    Ok(RealFunction { space: kappa.domain().clone(), values })
}

/// Chain composition `κ ∘ λ`: first `κ`, then `λ` on its output.
pub fn chain<T: Scalar>(kappa: &MarkovKernel<T>, lambda: &MarkovKernel<T>) -> Result<MarkovKernel<T>> {
    if !kappa.image().same_set(lambda.domain()) {
        return Err(Error::SpaceMismatch(format!(
            "chain of {} into {}",
            kappa.signature(),
            lambda.signature()
        )));
    }
    let lambda = lambda.reorder(kappa.image(), lambda.image())?;
    let (rows, cols, inner) = (lambda.rows(), kappa.cols(), kappa.rows());
    let mut matrix = Vec::with_capacity(rows * cols);
    for j in 0..rows {
        for d in 0..cols {
            let s = (0..inner).fold(T::zero(), |acc, m| acc + lambda.get(j, m).clone() * kappa.get(m, d).clone());
            matrix.push(s);
        }
    }
    Ok(MarkovKernel::from_parts(kappa.domain().clone(), lambda.image().clone(), matrix))
}

/// Product composition `κ × λ: D ⇝ I × J` for `κ: D ⇝ I` and `λ: D × I ⇝ J`.
pub fn product<T: Scalar>(kappa: &MarkovKernel<T>, lambda: &MarkovKernel<T>) -> Result<MarkovKernel<T>> {
    let (d, i) = (kappa.domain(), kappa.image());
    if d.ids().iter().any(|id| i.contains(id)) {
        return Err(Error::SpaceMismatch(format!(
            "product needs disjoint domain and image, got {}",
            kappa.signature()
        )));
    }
    let joint_in = d.union(i)?;
    if !joint_in.same_set(lambda.domain()) {
        return Err(Error::SpaceMismatch(format!(
            "product of {} with {}: second kernel must read {joint_in}",
            kappa.signature(),
            lambda.signature()
        )));
    }
    let image = i.union(lambda.image())?;
    if image.factors().len() != i.factors().len() + lambda.image().factors().len() {
        return Err(Error::IllDefinedSuperposition(format!("{image}")));
    }
    let lambda = lambda.reorder(&joint_in, lambda.image())?;
    let (ni, nj, nd) = (i.len(), lambda.rows(), d.len());
    let mut matrix = Vec::with_capacity(ni * nj * nd);
    for a in 0..ni {
        for b in 0..nj {
            for col in 0..nd {
                matrix.push(kappa.get(a, col).clone() * lambda.get(b, col * ni + a).clone());
            }
        }
    }
    Ok(MarkovKernel::from_parts(d.clone(), image, matrix))
}

/// Superposition `κ ⊗ λ`, reading the union of both domains.
///
/// Factors read by both kernels are shared rather than duplicated. The
/// images must be disjoint, otherwise two measures would be placed on the
/// same output factor.
pub fn superpose<T: Scalar>(kappa: &MarkovKernel<T>, lambda: &MarkovKernel<T>) -> Result<MarkovKernel<T>> {
    if let Some(id) = kappa.image().ids().into_iter().find(|id| lambda.image().contains(id)) {
        return Err(Error::IllDefinedSuperposition(id.to_string()));
    }
    let domain = kappa.domain().union(lambda.domain())?;
    let image = ProductSpace::new(
        kappa.image().factors().iter().chain(lambda.image().factors()).cloned().collect(),
    )?;
    let pk = domain.projector(kappa.domain())?;
    let pl = domain.projector(lambda.domain())?;
    let (nk, nl, nd) = (kappa.rows(), lambda.rows(), domain.len());
    let mut matrix = Vec::with_capacity(nk * nl * nd);
    for a in 0..nk {
        for b in 0..nl {
            for col in 0..nd {
                matrix.push(kappa.get(a, pk[col]).clone() * lambda.get(b, pl[col]).clone());
            }
        }
    }
    Ok(MarkovKernel::from_parts(domain, image, matrix))
}

/// Partial chain `κ ∘_over λ` for `κ: A ⇝ over` and `λ: R × over ⇝ J` with
/// `R ⊆ A`: the output of `κ` is fed into `λ` while `λ` keeps reading the
/// rest of its inputs from the shared domain.
pub fn partial_chain<T: Scalar>(
    kappa: &MarkovKernel<T>,
    lambda: &MarkovKernel<T>,
    over: &[&str],
) -> Result<MarkovKernel<T>> {
    let over_set: BTreeSet<&str> = over.iter().copied().collect();
    if over_set != kappa.image().id_set() {
        return Err(Error::SpaceMismatch(format!(
            "partial chain over {over:?} but first kernel writes {}",
            kappa.image()
        )));
    }
    if over.iter().any(|id| kappa.domain().contains(id)) {
        return Err(Error::SpaceMismatch(format!(
            "partial chain over {over:?} but first kernel also reads it"
        )));
    }
    let chained = kappa.image();
    for f in chained.factors() {
        if lambda.domain().factor(f.id()) != Some(f) {
            return Err(Error::SpaceMismatch(format!(
                "second kernel {} does not read `{}`",
                lambda.signature(),
                f.id()
            )));
        }
    }
    let rest = lambda.domain().without(chained);
    let rest_map = kappa.domain().projector(&rest)?;
    let lambda_in = rest.union(chained)?;
    let lambda = lambda.reorder(&lambda_in, lambda.image())?;
    let no = chained.len();
    let (rows, cols) = (lambda.rows(), kappa.cols());
    let mut matrix = Vec::with_capacity(rows * cols);
    for j in 0..rows {
        for d in 0..cols {
            let base = rest_map[d] * no;
            let s = (0..no).fold(T::zero(), |acc, o| {
                acc + kappa.get(o, d).clone() * lambda.get(j, base + o).clone()
            });
            matrix.push(s);
        }
    }
    Ok(MarkovKernel::from_parts(kappa.domain().clone(), lambda.image().clone(), matrix))
}

/// Convenience: one-factor product space.
pub fn single(space: &FiniteSpace) -> ProductSpace {
    ProductSpace::from(space.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    fn xy() -> (FiniteSpace, FiniteSpace) {
        (
            FiniteSpace::new("X", ["b", "w"]).unwrap(),
            FiniteSpace::new("Y", ["+1", "-1"]).unwrap(),
        )
    }

    fn recidivism_lambda() -> MarkovKernel<BigRational> {
        let (x, y) = xy();
        let domain = ProductSpace::new(vec![x, y.clone()]).unwrap();
        MarkovKernel::new(
            domain,
            single(&y),
            vec![q(9, 10), q(0, 1), q(4, 5), q(0, 1), q(1, 10), q(1, 1), q(1, 5), q(1, 1)],
        )
        .unwrap()
    }

    #[test]
    fn delta_is_identity_matrix() {
        let (x, _) = xy();
        let d = delta::<BigRational>(single(&x));
        assert_eq!(d.matrix(), &[q(1, 1), q(0, 1), q(0, 1), q(1, 1)]);
        assert!(d.is_identity(0.0));
    }

    #[test]
    fn rejects_non_stochastic_columns() {
        let (x, _) = xy();
        let err = MarkovKernel::new(single(&x), single(&x), vec![0.5, 0.5, 0.6, 0.5]).unwrap_err();
        assert!(matches!(err, Error::NotStochastic { column: 0, .. }));
    }

    #[test]
    fn superposition_of_delta_and_label_kernel_is_block_diagonal() {
        let (x, _) = xy();
        let joint = superpose(&delta(single(&x)), &recidivism_lambda()).unwrap();
        let expected = [
            [q(9, 10), q(0, 1), q(0, 1), q(0, 1)],
            [q(1, 10), q(1, 1), q(0, 1), q(0, 1)],
            [q(0, 1), q(0, 1), q(4, 5), q(0, 1)],
            [q(0, 1), q(0, 1), q(1, 5), q(1, 1)],
        ];
        assert_eq!(joint.domain().ids(), ["X", "Y"]);
        assert_eq!(joint.image().ids(), ["X", "Y"]);
        for (i, row) in expected.iter().enumerate() {
            for (d, v) in row.iter().enumerate() {
                assert_eq!(joint.get(i, d), v);
            }
        }
    }

    #[test]
    fn superposition_rejects_two_measures_on_one_space() {
        let (x, y) = xy();
        let tau = delta::<f64>(single(&x));
        let lam = constant(&FiniteDistribution::uniform(single(&x)), single(&y));
        assert!(matches!(superpose(&tau, &lam), Err(Error::IllDefinedSuperposition(id)) if id == "X"));
    }

    #[test]
    fn delta_superposition_is_joint_delta() {
        let (x, y) = xy();
        let joint = superpose(&delta::<f64>(single(&x)), &delta(single(&y))).unwrap();
        assert!(joint.is_identity(0.0));
    }

    #[test]
    fn constant_kernel_forgets_input() {
        let (x, _) = xy();
        let nu = FiniteDistribution::new(single(&x), vec![q(1, 3), q(2, 3)]).unwrap();
        let k = constant(&nu, single(&x));
        let mu = FiniteDistribution::new(single(&x), vec![q(1, 5), q(4, 5)]).unwrap();
        assert_eq!(act_on_dist(&k, &mu).unwrap(), nu);
        assert!(k.is_constant(0.0));
        let unit = constant(&nu, ProductSpace::unit());
        assert_eq!(unit.to_distribution().unwrap(), nu);
    }

    #[test]
    fn act_on_fn_preserves_constants() {
        let lam = recidivism_lambda();
        let f = RealFunction::constant(lam.image().clone(), q(7, 3));
        let g = act_on_fn(&lam, &f).unwrap();
        assert!(g.values().iter().all(|v| *v == q(7, 3)));
    }

    #[test]
    fn chain_checks_spaces() {
        let (x, y) = xy();
        let a = delta::<f64>(single(&x));
        let b = delta::<f64>(single(&y));
        assert!(matches!(chain(&a, &b), Err(Error::SpaceMismatch(_))));
        assert_eq!(chain(&a, &a).unwrap(), a);
    }

    #[test]
    fn partial_chain_with_delta_renames() {
        let (x, y) = xy();
        let lam = recidivism_lambda();
        let id = delta::<BigRational>(single(&x));
        let lifted = id.lift_domain(&ProductSpace::new(vec![y.clone()]).unwrap());
        assert!(lifted.is_err());
        // δ on the chained factor, read from a fresh copy of X.
        let x2 = FiniteSpace::new("X0", ["b", "w"]).unwrap();
        let rename = MarkovKernel::new(single(&x2), single(&x), id.matrix().to_vec()).unwrap();
        let out = partial_chain(&rename, &lam, &["X"]);
        assert!(out.is_err(), "rest factor Y must be read by the first kernel");
        let rename_y = rename.lift_domain(&ProductSpace::new(vec![x2.clone(), y.clone()]).unwrap()).unwrap();
        let out = partial_chain(&rename_y, &lam, &["X"]).unwrap();
        assert_eq!(out.domain().ids(), ["X0", "Y"]);
        assert_eq!(out.matrix(), lam.matrix());
    }

    #[test]
    fn product_builds_joint_from_prior_and_posterior() {
        let (x, y) = xy();
        let prior = FiniteDistribution::new(single(&x), vec![q(1, 2), q(1, 2)]).unwrap();
        let post = MarkovKernel::new(single(&x), single(&y), vec![q(3, 5), q(1, 2), q(2, 5), q(1, 2)]).unwrap();
        let joint = product(&MarkovKernel::from_distribution(&prior), &post)
            .unwrap()
            .to_distribution()
            .unwrap();
        assert_eq!(joint.weights(), &[q(3, 10), q(1, 5), q(1, 4), q(1, 4)]);
    }

    #[test]
    fn reorder_round_trip() {
        let lam = recidivism_lambda();
        let (x, y) = xy();
        let yx = ProductSpace::new(vec![y, x]).unwrap();
        let r = lam.reorder(&yx, lam.image()).unwrap();
        assert_eq!(*r.get(0, 1), q(4, 5));
        assert_eq!(r.reorder(lam.domain(), lam.image()).unwrap(), lam);
    }

    #[test]
    fn signature_display() {
        assert_eq!(recidivism_lambda().signature().to_string(), "X×Y⇝Y");
    }
}
