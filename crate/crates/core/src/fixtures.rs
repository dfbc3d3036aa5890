//! Hand-computable instances used by tests, examples and the CLI.

use crate::finite_prob::{make_joint, FiniteDistribution, FiniteSpace, ProductSpace};
use crate::kernel::{delta, single, MarkovKernel};
use crate::scalar::Scalar;
use crate::taxonomy::CorruptionSpec;
use crate::{X, Y};

/// Two-group arrest example: positives of group `b` are relabelled negative
/// with probability 1/10, those of group `w` with probability 1/5, and
/// negatives are never flipped.
#[derive(Debug, Clone)]
pub struct Recidivism<T> {
    pub x: FiniteSpace,
    pub y: FiniteSpace,
    /// `λ: X × Y ⇝ Y`.
    pub lambda: MarkovKernel<T>,
    /// `δ_X ⊗ λ`.
    pub spec: CorruptionSpec<T>,
    /// Uniform joint.
    pub p1: FiniteDistribution<T>,
    /// `[3/10, 2/10, 1/4, 1/4]`.
    pub p2: FiniteDistribution<T>,
}

pub fn recidivism<T: Scalar>() -> Recidivism<T> {
    let x = FiniteSpace::new(X, ["b", "w"]).expect("distinct labels");
    let y = FiniteSpace::new(Y, ["+1", "-1"]).expect("distinct labels");
    let q = T::from_ratio;
    let xy = ProductSpace::new(vec![x.clone(), y.clone()]).expect("distinct ids");
    let lambda = MarkovKernel::new(
        xy,
        single(&y),
        vec![q(9, 10), q(0, 1), q(4, 5), q(0, 1), q(1, 10), q(1, 1), q(1, 5), q(1, 1)],
    )
    .expect("columns sum to one");
    let spec = CorruptionSpec::factorized(delta(single(&x)), lambda.clone()).expect("feasible pair");
    let p1 = make_joint(&x, &y, vec![q(1, 4); 4]).expect("uniform");
    let p2 = make_joint(&x, &y, vec![q(3, 10), q(2, 10), q(1, 4), q(1, 4)]).expect("normalized");
    Recidivism { x, y, lambda, spec, p1, p2 }
}

impl<T: Scalar> Recidivism<T> {
    /// The label kernel of group `b` alone, `Y ⇝ Y`.
    pub fn lambda_b(&self) -> MarkovKernel<T> {
        let q = T::from_ratio;
        MarkovKernel::new(single(&self.y), single(&self.y), vec![q(9, 10), q(0, 1), q(1, 10), q(1, 1)])
            .expect("columns sum to one")
    }

    /// `[45, 55, 40, 60] / 200`.
    pub fn corrupted_p1(&self) -> Vec<T> {
        [45, 55, 40, 60].iter().map(|&n| T::from_ratio(n, 200)).collect()
    }

    /// `[54, 46, 40, 60] / 200`.
    pub fn corrupted_p2(&self) -> Vec<T> {
        [54, 46, 40, 60].iter().map(|&n| T::from_ratio(n, 200)).collect()
    }
}
