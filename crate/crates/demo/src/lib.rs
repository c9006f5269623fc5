//! Browser bindings: relation type from sign parameters, explanation
//! rendering, and Cohen's kappa over pasted label pairs.
//!
//! Every export takes and returns strings; results are JSON objects with
//! either the payload fields or an `error` field.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use earkit::agreement::ConfusionMatrix;
use earkit::catalog::{derive_relation_type, AcParams, TargetKind};
use earkit::{render_explanation, Catalog, SlotName};

fn error(message: impl std::fmt::Display) -> String {
    json!({ "error": message.to_string() }).to_string()
}

fn parse<T: serde::de::DeserializeOwned>(what: &str, value: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(value.to_string()))
        .map_err(|_| format!("unknown {what} `{value}`"))
}

/// Relation type implied by the parameters plus the catalog patterns
/// declaring exactly these parameters.
#[wasm_bindgen]
pub fn derive_relation(target: &str, claim: &str, val_y: &str, antecedent: &str, causality: &str) -> String {
    let run = || -> Result<Value, String> {
        let target: TargetKind = parse("target", target)?;
        let params = AcParams {
            claim: parse("value", claim)?,
            val_y: parse("value", val_y)?,
            antecedent: parse("antecedent", antecedent)?,
            causality: parse("causality", causality)?,
        };
        let implied = params.implied_sign();
        let relation = derive_relation_type(target, &params).map_err(|e| e.to_string())?;
        let patterns: Vec<String> = Catalog::shipped()
            .of_relation(relation)
            .filter(|p| p.ac == Some(params))
            .map(|p| p.id.clone())
            .collect();
        Ok(json!({
            "relation": relation.as_str(),
            "implied_sign": implied,
            "patterns": patterns,
        }))
    };
    run().map_or_else(error, |v| v.to_string())
}

/// Explanation sentence for `pattern_id`; `fills` is a JSON object mapping
/// slot names to text.
#[wasm_bindgen]
pub fn render(pattern_id: &str, fills: &str) -> String {
    let run = || -> Result<String, String> {
        let catalog = Catalog::shipped();
        let pattern = catalog
            .get(pattern_id)
            .ok_or_else(|| format!("unknown pattern `{pattern_id}`"))?;
        let raw: BTreeMap<String, String> =
            serde_json::from_str(fills).map_err(|e| format!("fills: {e}"))?;
        let mut map = BTreeMap::new();
        for (k, v) in raw {
            let slot: SlotName = k.parse()?;
            map.insert(slot, v);
        }
        render_explanation(pattern, &map).map_err(|e| e.to_string())
    };
    run().map_or_else(error, |text| json!({ "text": text }).to_string())
}

/// Kappa over whitespace-separated label pairs, one pair per line.
#[wasm_bindgen]
pub fn kappa(pairs: &str) -> String {
    let run = || -> Result<Value, String> {
        let mut parsed = Vec::new();
        for (i, line) in pairs.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => parsed.push((a.to_string(), b.to_string())),
                _ => return Err(format!("line {}: expected two labels", i + 1)),
            }
        }
        let matrix = ConfusionMatrix::from_pairs(&parsed);
        let k = matrix.kappa().map_err(|e| e.to_string())?;
        Ok(json!({ "kappa": k, "n": parsed.len(), "labels": matrix.labels, "counts": matrix.counts }))
    };
    run().map_or_else(error, |v| v.to_string())
}

/// The shipped catalog as JSON, for building the pickers.
#[wasm_bindgen]
pub fn catalog() -> String {
    serde_json::to_string(Catalog::shipped().patterns()).expect("catalog serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn derives_r03() {
        let out = v(derive_relation("segment", "good", "bad", "happens", "promote"));
        assert_eq!(out["relation"], "rebuttal");
        assert_eq!(out["patterns"], json!(["R03"]));
        let out = v(derive_relation("relation", "good", "good", "happens", "promote"));
        assert!(out["error"].as_str().unwrap().contains("not an attack"));
        let out = v(derive_relation("segment", "great", "bad", "happens", "promote"));
        assert_eq!(out["error"], "unknown value `great`");
    }

    #[test]
    fn renders_with_fills() {
        let out = v(render("R03", r#"{"x": "shopping on Sundays", "y": "staff"}"#));
        let text = out["text"].as_str().unwrap();
        assert!(text.contains("shopping on Sundays") && text.contains("staff"));
        assert!(v(render("R03", r#"{"x": "a"}"#))["error"].is_string());
        assert!(v(render("Z99", "{}"))["error"].is_string());
    }

    #[test]
    fn kappa_from_text() {
        let out = v(kappa("A A\nA B\nB A\nB B\n"));
        assert!(out["kappa"].as_f64().unwrap().abs() < 1e-9);
        assert_eq!(out["n"], 4);
        assert!(v(kappa(""))["error"].is_string());
        assert!(v(kappa("A"))["error"].is_string());
    }

    #[test]
    fn catalog_lists_35() {
        let list: Vec<Value> = serde_json::from_str(&catalog()).unwrap();
        assert_eq!(list.len(), 35);
    }
}
