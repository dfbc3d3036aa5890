//! Random full-support instances for property suites.
//!
//! Distributions and kernel columns are drawn uniformly from the simplex
//! (normalized exponential samples), so every entry is positive.

use rand::Rng;
use rand_distr::Exp1;

use crate::finite_prob::{FiniteDistribution, FiniteSpace, ProductSpace};
use crate::kernel::{MarkovKernel, RealFunction};
use crate::taxonomy::CorruptionSpec;
use crate::{X, Y};

/// A uniform draw from the probability simplex of dimension `n`.
pub fn simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && draws.iter().all(|&d| d > 0.0) {
            return draws.into_iter().map(|d| d / total).collect();
        }
    }
}

/// Attribute and label spaces with `1..=max_x` and `2..=max_y` points.
pub fn spaces<R: Rng + ?Sized>(rng: &mut R, max_x: usize, max_y: usize) -> (FiniteSpace, FiniteSpace) {
    let nx = rng.random_range(1..=max_x.max(1));
    let ny = rng.random_range(2..=max_y.max(2));
    (
        FiniteSpace::new(X, (0..nx).map(|i| format!("x{i}"))).expect("labels are distinct"),
        FiniteSpace::new(Y, (0..ny).map(|i| format!("y{i}"))).expect("labels are distinct"),
    )
}

pub fn distribution<R: Rng + ?Sized>(rng: &mut R, space: impl Into<ProductSpace>) -> FiniteDistribution<f64> {
    let space = space.into();
    let w = simplex(rng, space.len());
    FiniteDistribution::new(space, w).expect("simplex draw is a distribution")
}

/// Full-support joint on `[X, Y]`.
pub fn joint<R: Rng + ?Sized>(rng: &mut R, x: &FiniteSpace, y: &FiniteSpace) -> FiniteDistribution<f64> {
    distribution(rng, ProductSpace::new(vec![x.clone(), y.clone()]).expect("distinct ids"))
}

/// Product of independent random marginals on `X` and `Y`.
pub fn independent_joint<R: Rng + ?Sized>(rng: &mut R, x: &FiniteSpace, y: &FiniteSpace) -> FiniteDistribution<f64> {
    let px = simplex(rng, x.len());
    let py = simplex(rng, y.len());
    let w = px.iter().flat_map(|a| py.iter().map(move |b| a * b)).collect();
    FiniteDistribution::new(ProductSpace::new(vec![x.clone(), y.clone()]).expect("distinct ids"), w)
        .expect("product of distributions")
}

pub fn kernel<R: Rng + ?Sized>(rng: &mut R, domain: ProductSpace, image: ProductSpace) -> MarkovKernel<f64> {
    let (rows, cols) = (image.len(), domain.len());
    let columns: Vec<Vec<f64>> = (0..cols).map(|_| simplex(rng, rows)).collect();
    MarkovKernel::from_fn(domain, image, |i, d| columns[d][i]).expect("columns are distributions")
}

/// Function with values uniform in `[-bound, bound]`.
pub fn function<R: Rng + ?Sized>(rng: &mut R, space: ProductSpace, bound: f64) -> RealFunction<f64> {
    let values = (0..space.len()).map(|_| rng.random_range(-bound..=bound)).collect();
    RealFunction::new(space, values).expect("length matches")
}

/// Random `τ ⊗ λ` with `τ` reading `tau_reads` and `λ` reading `lambda_reads`.
pub fn factorized_spec<R: Rng + ?Sized>(
    rng: &mut R,
    x: &FiniteSpace,
    y: &FiniteSpace,
    tau_reads: &[&str],
    lambda_reads: &[&str],
) -> CorruptionSpec<f64> {
    let xy = ProductSpace::new(vec![x.clone(), y.clone()]).expect("distinct ids");
    let tau = kernel(rng, xy.select(tau_reads).expect("roles exist"), ProductSpace::from(x.clone()));
    let lambda = kernel(rng, xy.select(lambda_reads).expect("roles exist"), ProductSpace::from(y.clone()));
    CorruptionSpec::factorized(tau, lambda).expect("caller passes a feasible pair")
}

/// A random joint kernel `X × Y ⇝ X × Y`, in general not a superposition.
pub fn joint_spec<R: Rng + ?Sized>(rng: &mut R, x: &FiniteSpace, y: &FiniteSpace) -> CorruptionSpec<f64> {
    let xy = ProductSpace::new(vec![x.clone(), y.clone()]).expect("distinct ids");
    CorruptionSpec::non_factorized(kernel(rng, xy.clone(), xy)).expect("roles are X and Y")
}
