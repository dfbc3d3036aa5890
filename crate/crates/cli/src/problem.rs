//! Problem files: TOML schema and conversion into library types.

use std::path::Path;

use kernelcorrupt::decision::{deterministic, HypothesisClass, LossFunction};
use kernelcorrupt::finite_prob::{FiniteDistribution, FiniteSpace, ProductSpace};
use kernelcorrupt::kernel::{delta, MarkovKernel};
use kernelcorrupt::scalar::Scalar;
use kernelcorrupt::{X, Y};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A number written as a string (`"3/10"`, `"0.3"`) or a bare TOML number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    fn value<T: Scalar>(&self, field: &str) -> Result<T, CliError> {
        let parsed = match self {
            Num::Int(i) => Some(T::from_ratio(*i, 1)),
            Num::Float(f) => T::from_f64(*f),
            Num::Text(s) => T::parse(s),
        };
        parsed.ok_or_else(|| CliError::input(field, format!("cannot read {self:?} as a number")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub spaces: Spaces,
    pub joint: Joint,
    #[serde(default)]
    pub loss: LossSpec,
    #[serde(default)]
    pub hypotheses: HypothesesSpec,
    pub corruption: CorruptionFile,
    /// Observed corrupted joint, used instead of `P ∘ κ` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrupted: Option<Joint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spaces {
    #[serde(rename = "X")]
    pub x: Vec<String>,
    #[serde(rename = "Y")]
    pub y: Vec<String>,
}

/// Weights on `X × Y`, `X` outer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Joint {
    pub weights: Vec<Num>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossSpec {
    #[default]
    Brier,
    ZeroOne,
    /// `table[k][y]` is the cost of predicting `k` when the label is `y`.
    Table { table: Vec<Vec<f64>>, bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HypothesesSpec {
    #[default]
    AllDeterministic,
    /// One label per point of `X`, by label name.
    Explicit { labels: Vec<Vec<String>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorruptionFile {
    Factorized { tau: KernelFile, lambda: KernelFile },
    /// A kernel `X × Y ⇝ X × Y`.
    Joint { shape: [usize; 2], values: Vec<Num> },
}

/// `signature` such as `"X×Y⇝Y"` (ASCII `"X*Y -> Y"` also works); rows of
/// the matrix are image points, columns domain points, domain factors
/// enumerated in signature order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub signature: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub identity: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<Num>,
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem files serialize")
    }
}

/// The factors of a corruption as read from the file, before feasibility
/// is checked.
#[derive(Debug, Clone)]
pub enum Corruption<T> {
    Factorized { tau: MarkovKernel<T>, lambda: MarkovKernel<T> },
    Joint(MarkovKernel<T>),
}

#[derive(Debug, Clone)]
pub struct Problem<T> {
    pub x: FiniteSpace,
    pub joint: FiniteDistribution<T>,
    pub corruption: Corruption<T>,
    pub observed: Option<FiniteDistribution<T>>,
    pub loss: LossFunction,
    pub hypotheses: HypothesisClass,
}

impl ProblemFile {
    pub fn build<T: Scalar>(&self) -> Result<Problem<T>, CliError> {
        let x = FiniteSpace::new(X, self.spaces.x.clone()).map_err(|e| CliError::input("spaces.X", e))?;
        let y = FiniteSpace::new(Y, self.spaces.y.clone()).map_err(|e| CliError::input("spaces.Y", e))?;
        let xy = ProductSpace::new(vec![x.clone(), y.clone()]).map_err(|e| CliError::input("spaces", e))?;
        let joint = distribution(&xy, &self.joint, "joint.weights")?;
        let observed = self
            .corrupted
            .as_ref()
            .map(|j| distribution(&xy, j, "corrupted.weights"))
            .transpose()?;
        let corruption = match &self.corruption {
            CorruptionFile::Factorized { tau, lambda } => Corruption::Factorized {
                tau: tau.build(&x, &y, "corruption.tau")?,
                lambda: lambda.build(&x, &y, "corruption.lambda")?,
            },
            CorruptionFile::Joint { shape, values } => {
                Corruption::Joint(matrix(xy.clone(), xy.clone(), Some(*shape), values, "corruption")?)
            }
        };
        let loss = match &self.loss {
            LossSpec::Brier => LossFunction::brier(&y).map_err(|e| CliError::input("loss", e))?,
            LossSpec::ZeroOne => LossFunction::zero_one(&y),
            LossSpec::Table { table, bound } => {
                if table.len() != y.len() {
                    return Err(CliError::input("loss.table", format!("needs {} rows", y.len())));
                }
                LossFunction::table("table", table.clone(), *bound, false).map_err(|e| CliError::input("loss.table", e))?
            }
        };
        let hypotheses = match &self.hypotheses {
            HypothesesSpec::AllDeterministic => {
                HypothesisClass::all_deterministic(&x, &y).map_err(|e| CliError::input("hypotheses", e))?
            }
            HypothesesSpec::Explicit { labels } => {
                let kernels = labels
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        let field = format!("hypotheses.labels[{i}]");
                        let idx = row
                            .iter()
                            .map(|l| y.index_of(l).ok_or_else(|| CliError::input(&field, format!("unknown label `{l}`"))))
                            .collect::<Result<Vec<_>, _>>()?;
                        deterministic(&x, &y, &idx).map_err(|e| CliError::input(&field, e))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                HypothesisClass::user_provided(kernels).map_err(|e| CliError::input("hypotheses", e))?
            }
        };
        Ok(Problem { x, joint, corruption, observed, loss, hypotheses })
    }
}

impl KernelFile {
    fn build<T: Scalar>(&self, x: &FiniteSpace, y: &FiniteSpace, field: &str) -> Result<MarkovKernel<T>, CliError> {
        let (domain, image) = parse_signature(&self.signature)
            .ok_or_else(|| CliError::input(format!("{field}.signature"), format!("cannot read `{}`", self.signature)))?;
        let space = |ids: &[String]| -> Result<ProductSpace, CliError> {
            let factors = ids
                .iter()
                .map(|id| match id.as_str() {
                    X => Ok(x.clone()),
                    Y => Ok(y.clone()),
                    other => Err(CliError::input(format!("{field}.signature"), format!("unknown space `{other}`"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            ProductSpace::new(factors).map_err(|e| CliError::input(format!("{field}.signature"), e))
        };
        let (domain, image) = (space(&domain)?, space(&image)?);
        if self.identity {
            if domain != image {
                return Err(CliError::input(field, "an identity kernel needs equal domain and image"));
            }
            if !self.values.is_empty() {
                return Err(CliError::input(field, "give either `identity` or `values`, not both"));
            }
            return Ok(delta(domain));
        }
        matrix(domain, image, self.shape, &self.values, field)
    }
}

/// Splits `"X×Y⇝Y"` into `(["X", "Y"], ["Y"])`.
pub fn parse_signature(text: &str) -> Option<(Vec<String>, Vec<String>)> {
    let (d, i) = text.split_once('⇝').or_else(|| text.split_once("->"))?;
    let ids = |s: &str| -> Option<Vec<String>> {
        let v: Vec<String> = s
            .split(['×', '*', ','])
            .map(|t| t.trim().to_string())
            .collect();
        v.iter().all(|t| !t.is_empty()).then_some(v)
    };
    Some((ids(d)?, ids(i)?))
}

fn distribution<T: Scalar>(space: &ProductSpace, j: &Joint, field: &str) -> Result<FiniteDistribution<T>, CliError> {
    let w = j
        .weights
        .iter()
        .enumerate()
        .map(|(k, v)| v.value(&format!("{field}[{k}]")))
        .collect::<Result<Vec<T>, _>>()?;
    FiniteDistribution::new(space.clone(), w).map_err(|e| CliError::input(field, e))
}

fn matrix<T: Scalar>(
    domain: ProductSpace,
    image: ProductSpace,
    shape: Option<[usize; 2]>,
    values: &[Num],
    field: &str,
) -> Result<MarkovKernel<T>, CliError> {
    let want = [image.len(), domain.len()];
    let shape = shape.ok_or_else(|| CliError::input(format!("{field}.shape"), "missing"))?;
    if shape != want {
        return Err(CliError::input(
            format!("{field}.shape"),
            format!("{domain}⇝{image} needs [{}, {}], got {shape:?}", want[0], want[1]),
        ));
    }
    if values.len() != want[0] * want[1] {
        return Err(CliError::input(
            format!("{field}.values"),
            format!("expected {} entries, found {}", want[0] * want[1], values.len()),
        ));
    }
    let m = values
        .iter()
        .enumerate()
        .map(|(k, v)| v.value(&format!("{field}.values[{k}]")))
        .collect::<Result<Vec<T>, _>>()?;
    MarkovKernel::new(domain, image, m).map_err(|e| CliError::input(format!("{field}.values"), e))
}
