//! Losses, hypothesis classes, risks and exhaustive Bayes risk.
//!
//! Decision-theoretic quantities are computed in `f64`; exact kernels are
//! converted with [`MarkovKernel::to_f64`] before entering this layer.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::finite_prob::{factorize, Direction, FiniteDistribution, FiniteSpace, ProductSpace};
use crate::kernel::{single, MarkovKernel, RealFunction};
use crate::{EPS_TIE, X, Y};

/// Default limit on `|Y|^|X|` for enumerated hypothesis classes.
pub const DEFAULT_CAP: usize = 4096;

type Evaluator = Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;

/// `ℓ(p, y)` for a predicted distribution `p` over `Y` and a label index `y`.
#[derive(Clone)]
pub struct LossFunction {
    name: String,
    labels: usize,
    bound: f64,
    proper: bool,
    eval: Evaluator,
}

impl fmt::Debug for LossFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LossFunction")
            .field("name", &self.name)
            .field("labels", &self.labels)
            .field("bound", &self.bound)
            .field("proper", &self.proper)
            .finish()
    }
}

impl LossFunction {
    pub fn new(
        name: impl Into<String>,
        labels: usize,
        bound: f64,
        proper: bool,
        eval: impl Fn(&[f64], usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        LossFunction { name: name.into(), labels, bound, proper, eval: Arc::new(eval) }
    }

    /// `Σ_k (p_k − 1[k = y])²`.
    pub fn brier(y: &FiniteSpace) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::Invalid("Brier loss needs at least two labels".into()));
        }
        Ok(Self::new("brier", y.len(), 2.0, true, |p, y| {
            p.iter()
                .enumerate()
                .map(|(k, &pk)| {
                    let d = pk - if k == y { 1.0 } else { 0.0 };
                    d * d
                })
                .sum()
        }))
    }

    /// `1[argmax p ≠ y]`, ties going to the lowest index.
    pub fn zero_one(y: &FiniteSpace) -> Self {
        Self::new("zero_one", y.len(), 1.0, false, |p, y| if argmax(p) == y { 0.0 } else { 1.0 })
    }

    /// `ℓ(p, y) = Σ_k p_k · table[k][y]`, linear in the prediction.
    pub fn table(name: impl Into<String>, table: Vec<Vec<f64>>, bound: f64, proper: bool) -> Result<Self> {
        let n = table.len();
        if n == 0 || table.iter().any(|row| row.len() != n) {
            return Err(Error::Invalid("loss table must be square and nonempty".into()));
        }
        if let Some(v) = table.iter().flatten().find(|v| !v.is_finite() || **v < 0.0 || **v > bound) {
            return Err(Error::Invalid(format!("loss table entry {v} outside [0, {bound}]")));
        }
        Ok(Self::new(name, n, bound, proper, move |p, y| {
            p.iter().zip(&table).map(|(pk, row)| pk * row[y]).sum()
        }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn declared_proper(&self) -> bool {
        self.proper
    }

    pub fn eval(&self, p: &[f64], y: usize) -> f64 {
        (self.eval)(p, y)
    }

    /// Spot-checks `0 ≤ ℓ ≤ bound` on a simplex grid.
    pub fn check_bounded(&self, resolution: usize) -> bool {
        simplex_grid(self.labels, resolution).iter().all(|p| {
            (0..self.labels).all(|y| {
                let v = self.eval(p, y);
                v >= 0.0 && v <= self.bound + 1e-12
            })
        })
    }

    /// Grid search for strict properness.
    ///
    /// For every grid point `p`, the grid minimizers of `q ↦ Σ_y p_y ℓ(q, y)`
    /// (within `1e-6` of the minimum) must contain `p` and lie within one grid
    /// step of it. Losses whose expected value is flat around `p` fail.
    pub fn check_proper(&self, resolution: usize) -> ProperReport {
        let grid = simplex_grid(self.labels, resolution);
        let losses: Vec<Vec<f64>> = grid
            .iter()
            .map(|q| (0..self.labels).map(|y| self.eval(q, y)).collect())
            .collect();
        let step = 1.0 / resolution as f64;
        let mut expected = vec![0.0; grid.len()];
        for (pi, p) in grid.iter().enumerate() {
            let mut best = f64::INFINITY;
            for (e, l) in expected.iter_mut().zip(&losses) {
                *e = p.iter().zip(l).map(|(a, b)| a * b).sum();
                best = best.min(*e);
            }
            let minimizers: Vec<usize> = (0..grid.len()).filter(|&qi| expected[qi] <= best + 1e-6).collect();
            let far = minimizers.iter().find(|&&qi| {
                grid[qi].iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) > step + 1e-9
            });
            if !minimizers.contains(&pi) || far.is_some() {
                let q = far.map_or_else(|| grid[minimizers[0]].clone(), |&qi| grid[qi].clone());
                return ProperReport { resolution, proper: false, witness: Some((p.clone(), q)) };
            }
        }
        ProperReport { resolution, proper: true, witness: None }
    }

    /// Largest grid resolution keeping the simplex grid near 5000 points.
    pub fn default_resolution(labels: usize) -> usize {
        let mut m = 100;
        while m > 1 && binomial(m + labels - 1, labels - 1) > 5151 {
            m -= 1;
        }
        m
    }
}

/// Outcome of [`LossFunction::check_proper`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProperReport {
    pub resolution: usize,
    pub proper: bool,
    /// A true distribution `p` and a grid minimizer `q` that is not `p`.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All probability vectors of length `n` with entries in `{0, 1/m, …, 1}`.
pub fn simplex_grid(n: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.iter().map(|&k| k as f64 / m as f64).collect());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, left - k, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, m, m, &mut Vec::new(), &mut out);
    }
    out
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    AllDeterministic,
    UserProvided,
}

/// A finite list of decision rules `X ⇝ Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisClass {
    hypotheses: Vec<MarkovKernel<f64>>,
    origin: Origin,
}

impl HypothesisClass {
    /// Every labelling function `X → Y`, in mixed-radix order with the first
    /// point of `X` as the most significant digit.
    pub fn all_deterministic(x: &FiniteSpace, y: &FiniteSpace) -> Result<Self> {
        Self::all_deterministic_capped(x, y, DEFAULT_CAP)
    }

    pub fn all_deterministic_capped(x: &FiniteSpace, y: &FiniteSpace, cap: usize) -> Result<Self> {
        let count = (y.len() as u128).checked_pow(x.len() as u32).unwrap_or(u128::MAX);
        if count > cap as u128 {
            return Err(Error::CapExceeded { count, cap });
        }
        let hypotheses = (0..count as usize)
            .map(|mut i| {
                let mut labels = vec![0; x.len()];
                for slot in labels.iter_mut().rev() {
                    *slot = i % y.len();
                    i /= y.len();
                }
                deterministic(x, y, &labels)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HypothesisClass { hypotheses, origin: Origin::AllDeterministic })
    }

    pub fn user_provided(hypotheses: Vec<MarkovKernel<f64>>) -> Result<Self> {
        let first = hypotheses
            .first()
            .ok_or_else(|| Error::Invalid("hypothesis class is empty".into()))?;
        for h in &hypotheses {
            if h.domain().ids() != [X] || h.image().ids() != [Y] {
                return Err(Error::SignatureMismatch(format!("hypothesis must be X⇝Y, got {}", h.signature())));
            }
            if h.domain() != first.domain() || h.image() != first.image() {
                return Err(Error::SpaceMismatch("hypotheses disagree on X or Y".into()));
            }
        }
        Ok(HypothesisClass { hypotheses, origin: Origin::UserProvided })
    }

    pub fn hypotheses(&self) -> &[MarkovKernel<f64>] {
        &self.hypotheses
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }
}

/// The kernel of a labelling function given as one label index per `x`.
pub fn deterministic(x: &FiniteSpace, y: &FiniteSpace, labels: &[usize]) -> Result<MarkovKernel<f64>> {
    if labels.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: labels.len() });
    }
    MarkovKernel::from_fn(single(x), single(y), |k, d| if labels[d] == k { 1.0 } else { 0.0 })
}

/// Functions on `X × Y` to be minimized in expectation, tagged by the
/// hypothesis that generated each.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizationSet {
    pub space: ProductSpace,
    pub functions: Vec<RealFunction<f64>>,
    pub provenance: Vec<usize>,
}

impl MinimizationSet {
    pub fn new(functions: Vec<RealFunction<f64>>, provenance: Vec<usize>) -> Result<Self> {
        if functions.len() != provenance.len() {
            return Err(Error::DimensionMismatch { expected: functions.len(), found: provenance.len() });
        }
        let space = functions
            .first()
            .map(|f| f.space().clone())
            .ok_or_else(|| Error::Invalid("minimization set is empty".into()))?;
        Ok(MinimizationSet { space, functions, provenance })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

/// `(x, y) ↦ ℓ(h(x), y)` on `[X, Y]`.
pub fn loss_of(loss: &LossFunction, h: &MarkovKernel<f64>) -> Result<RealFunction<f64>> {
    let (xs, ys) = (h.domain(), h.image());
    if ys.len() != loss.labels() {
        return Err(Error::DimensionMismatch { expected: loss.labels(), found: ys.len() });
    }
    let space = xs.union(ys)?;
    let mut values = Vec::with_capacity(space.len());
    for x in 0..xs.len() {
        let p = h.column(x);
        values.extend((0..ys.len()).map(|y| loss.eval(&p, y)));
    }
    RealFunction::new(space, values)
}

/// `ℓ ∘ H`.
pub fn compose_loss_class(loss: &LossFunction, hypotheses: &HypothesisClass) -> Result<MinimizationSet> {
    let functions = hypotheses
        .hypotheses()
        .iter()
        .map(|h| loss_of(loss, h))
        .collect::<Result<Vec<_>>>()?;
    MinimizationSet::new(functions, (0..hypotheses.len()).collect())
}

/// `E_P[f]`.
pub fn risk(f: &RealFunction<f64>, p: &FiniteDistribution<f64>) -> Result<f64> {
    f.integrate(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesRisk {
    pub value: f64,
    /// Hypothesis ids within [`EPS_TIE`] of the minimum.
    pub argmin: BTreeSet<usize>,
    pub risks: Vec<f64>,
}

/// Exhaustive minimum of the risk over a minimization set.
pub fn bayes_risk(set: &MinimizationSet, p: &FiniteDistribution<f64>) -> Result<BayesRisk> {
    let risks = set.functions.iter().map(|f| risk(f, p)).collect::<Result<Vec<_>>>()?;
    let value = risks.iter().copied().fold(f64::INFINITY, f64::min);
    let argmin = risks
        .iter()
        .zip(&set.provenance)
        .filter(|(r, _)| **r <= value + EPS_TIE)
        .map(|(_, &id)| id)
        .collect();
    Ok(BayesRisk { value, argmin, risks })
}

/// A loss, a hypothesis class and a joint distribution on `X × Y`.
#[derive(Debug, Clone)]
pub struct LearningProblem {
    pub loss: LossFunction,
    pub hypotheses: HypothesisClass,
    pub joint: FiniteDistribution<f64>,
}

impl LearningProblem {
    pub fn new(loss: LossFunction, hypotheses: HypothesisClass, joint: FiniteDistribution<f64>) -> Result<Self> {
        let joint = joint.reorder(&joint.space().select(&[X, Y])?)?;
        let h = hypotheses
            .hypotheses()
            .first()
            .ok_or_else(|| Error::Invalid("hypothesis class is empty".into()))?;
        let xy = h.domain().union(h.image())?;
        if xy != *joint.space() {
            return Err(Error::SpaceMismatch(format!(
                "hypotheses act on {xy}, joint lives on {}",
                joint.space()
            )));
        }
        if loss.labels() != h.image().len() {
            return Err(Error::DimensionMismatch { expected: h.image().len(), found: loss.labels() });
        }
        Ok(LearningProblem { loss, hypotheses, joint })
    }

    pub fn x_space(&self) -> &FiniteSpace {
        &self.joint.space().factors()[0]
    }

    pub fn y_space(&self) -> &FiniteSpace {
        &self.joint.space().factors()[1]
    }

    pub fn loss_class(&self) -> Result<MinimizationSet> {
        compose_loss_class(&self.loss, &self.hypotheses)
    }

    pub fn bayes_risk(&self) -> Result<BayesRisk> {
        bayes_risk(&self.loss_class()?, &self.joint)
    }

    /// Hypotheses agreeing with the true posterior `F` wherever `X` has mass.
    pub fn posterior_matches(&self, tol: f64) -> Result<Vec<usize>> {
        let f = factorize(&self.joint, Direction::Discriminative)?;
        let support: Vec<usize> = f.prior.support();
        Ok(self
            .hypotheses
            .hypotheses()
            .iter()
            .enumerate()
            .filter(|(_, h)| {
                support.iter().all(|&x| {
                    (0..h.rows()).all(|y| (h.get(y, x) - f.conditional.get(y, x)).abs() <= tol)
                })
            })
            .map(|(i, _)| i)
            .collect())
    }

    /// Optional well-specification check: the class contains the posterior
    /// and that hypothesis attains the Bayes risk.
    pub fn satisfies_a2(&self, tol: f64) -> Result<bool> {
        let matches = self.posterior_matches(tol)?;
        let br = self.bayes_risk()?;
        Ok(matches.iter().any(|i| br.argmin.contains(i)))
    }
}
