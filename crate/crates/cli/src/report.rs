//! Reports: a text rendering for reading and a JSON document for scripts.
//!
//! The JSON layout is versioned by its `schema` field. Floats are written
//! with 17 significant digits; in rational mode exact values are strings
//! `"p/q"`.

use kernelcorrupt::finite_prob::{FiniteDistribution, ProductSpace};
use kernelcorrupt::kernel::MarkovKernel;
use kernelcorrupt::scalar::{format_sig17, Scalar};
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "kernelcorrupt-report/1";

#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub lines: Vec<String>,
    fields: Map<String, Value>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report { command, lines: Vec::new(), fields: Map::new(), pass: true }
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.fields.insert(key.to_string(), value);
    }

    pub fn to_text(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push_str(&format!("\nresult: {}\n", if self.pass { "PASS" } else { "FAIL" }));
        out
    }

    pub fn to_json(&self) -> Value {
        let mut doc = Map::new();
        doc.insert("schema".into(), json!(SCHEMA));
        doc.insert("command".into(), json!(self.command));
        for (k, v) in &self.fields {
            doc.insert(k.clone(), v.clone());
        }
        doc.insert("pass".into(), json!(self.pass));
        Value::Object(doc)
    }
}

pub fn float(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    serde_json::from_str(&format_sig17(v)).unwrap_or(Value::Null)
}

pub fn scalar<T: Scalar>(v: &T) -> Value {
    if T::EXACT {
        Value::String(v.render())
    } else {
        float(v.to_f64())
    }
}

pub fn scalars<T: Scalar>(vs: &[T]) -> Value {
    Value::Array(vs.iter().map(scalar).collect())
}

pub fn floats(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|v| float(*v)).collect())
}

pub fn point_labels(space: &ProductSpace) -> Vec<String> {
    (0..space.len()).map(|i| space.point_label(i)).collect()
}

pub fn distribution<T: Scalar>(d: &FiniteDistribution<T>) -> Value {
    json!({
        "space": d.space().ids(),
        "points": point_labels(d.space()),
        "weights": scalars(d.weights()),
    })
}

pub fn kernel<T: Scalar>(k: &MarkovKernel<T>) -> Value {
    json!({
        "signature": k.signature().to_string(),
        "domain_points": point_labels(k.domain()),
        "image_points": point_labels(k.image()),
        "shape": [k.rows(), k.cols()],
        "values": scalars(k.matrix()),
    })
}

/// `(b, +1): 9/40, …` on one line.
pub fn render_distribution<T: Scalar>(d: &FiniteDistribution<T>) -> String {
    (0..d.len())
        .map(|i| format!("{}: {}", d.space().point_label(i), d.weights()[i].render()))
        .collect::<Vec<_>>()
        .join(", ")
}

/// One line per input point: `κ(· | point) = [..]`.
pub fn render_kernel<T: Scalar>(name: &str, k: &MarkovKernel<T>) -> Vec<String> {
    (0..k.cols())
        .map(|d| {
            let col: Vec<String> = (0..k.rows())
                .map(|i| format!("{} ↦ {}", k.image().point_label(i), k.get(i, d).render()))
                .collect();
            format!("  {name}(· | {}) = {}", k.domain().point_label(d), col.join(", "))
        })
        .collect()
}
