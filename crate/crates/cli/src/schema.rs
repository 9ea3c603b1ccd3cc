//! Published report schemas and a structural checker for them.
//!
//! Schemas use a small JSON-Schema subset: `type`, `required`, `properties`,
//! `items` and `enum`. They describe the default (nats) output; under
//! `--bits` a required `*_nats` key may appear as `*_bits` instead.

use serde_json::{json, Value};

use crate::args::SchemaName;

fn ranked_candidates() -> Value {
    json!({
        "type": "array",
        "items": {
            "type": "object",
            "required": ["label", "codelength_nats", "data_nats", "prior_nats", "dimension", "rank"],
            "properties": {
                "label": {"type": "string"},
                "codelength_nats": {"type": "number"},
                "data_nats": {"type": "number"},
                "prior_nats": {"type": "number"},
                "dimension": {"type": "integer"},
                "rank": {"type": "integer"}
            }
        }
    })
}

fn symbol_map() -> Value {
    json!({
        "type": "object",
        "required": ["column", "indexing", "labels"],
        "properties": {
            "column": {"type": "string"},
            "indexing": {"type": "string", "enum": ["by_value", "first_appearance"]},
            "labels": {"type": "array", "items": {"type": "string"}}
        }
    })
}

fn tie_break() -> Value {
    json!({"type": "string", "enum": ["none", "dimension", "label"]})
}

pub fn schema(name: SchemaName) -> Value {
    match name {
        SchemaName::Complexity => json!({
            "type": "object",
            "required": ["family", "n", "r", "order", "method", "comp_nats", "normalizer"],
            "properties": {
                "family": {"type": "string"},
                "n": {"type": "integer"},
                "r": {"type": "integer"},
                "order": {"type": "integer"},
                "method": {"type": "string", "enum": ["exactsum", "recurrence", "szpankowski", "asymptotic"]},
                "comp_nats": {"type": "number"},
                "normalizer": {"type": "number"}
            }
        }),
        SchemaName::Select => json!({
            "type": "object",
            "required": ["column", "n", "symbols", "candidates", "winner", "tie_break", "notes"],
            "properties": {
                "column": {"type": "string"},
                "n": {"type": "integer"},
                "symbols": symbol_map(),
                "candidates": ranked_candidates(),
                "winner": {"type": "string"},
                "tie_break": tie_break(),
                "notes": {"type": "array", "items": {"type": "string"}}
            }
        }),
        SchemaName::Varsel => json!({
            "type": "object",
            "required": ["response", "covariates", "selected", "selected_indices", "strategy", "sigma2", "scale",
                         "n", "evaluated", "candidates", "winner", "tie_break", "notes"],
            "properties": {
                "response": {"type": "string"},
                "covariates": {"type": "array", "items": {"type": "string"}},
                "selected": {"type": "array", "items": {"type": "string"}},
                "selected_indices": {"type": "array", "items": {"type": "integer"}},
                "strategy": {"type": "string", "enum": ["exhaustive", "greedy_forward"]},
                "sigma2": {"type": "number"},
                "scale": {"type": "number"},
                "n": {"type": "integer"},
                "evaluated": {"type": "integer"},
                "candidates": ranked_candidates(),
                "winner": {"type": "string"},
                "tie_break": tie_break(),
                "notes": {"type": "array", "items": {"type": "string"}}
            }
        }),
        SchemaName::Markov => json!({
            "type": "object",
            "required": ["column", "n", "max_order", "order", "symbols", "candidates", "winner", "tie_break", "notes"],
            "properties": {
                "column": {"type": "string"},
                "n": {"type": "integer"},
                "max_order": {"type": "integer"},
                "order": {"type": "integer"},
                "symbols": symbol_map(),
                "candidates": ranked_candidates(),
                "winner": {"type": "string"},
                "tie_break": tie_break(),
                "notes": {"type": "array", "items": {"type": "string"}}
            }
        }),
        SchemaName::Bn => json!({
            "type": "object",
            "required": ["score", "nodes", "adjacency", "locals_nats", "total_nats", "iterations", "converged",
                         "cache_hits", "cache_misses", "seed", "trace", "symbols"],
            "properties": {
                "score": {"type": "string"},
                "nodes": {"type": "array", "items": {"type": "string"}},
                "adjacency": {"type": "object"},
                "locals_nats": {"type": "object"},
                "total_nats": {"type": "number"},
                "iterations": {"type": "integer"},
                "converged": {"type": "boolean"},
                "cache_hits": {"type": "integer"},
                "cache_misses": {"type": "integer"},
                "seed": {"type": "integer"},
                "trace": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["iteration", "move", "gain_nats", "codelength_nats"],
                        "properties": {
                            "iteration": {"type": "integer"},
                            "move": {"type": "string"},
                            "gain_nats": {"type": "number"},
                            "codelength_nats": {"type": "number"}
                        }
                    }
                },
                "symbols": {"type": "array", "items": symbol_map()},
                "orientations": {
                    "type": "object",
                    "required": ["forward", "backward", "forward_nats", "backward_nats", "equal"],
                    "properties": {
                        "forward": {"type": "string"},
                        "backward": {"type": "string"},
                        "forward_nats": {"type": "number"},
                        "backward_nats": {"type": "number"},
                        "equal": {"type": "boolean"}
                    }
                }
            }
        }),
        SchemaName::Preq => json!({
            "type": "object",
            "required": ["column", "kind", "n", "predictors", "hindsight_ml_nats"],
            "properties": {
                "column": {"type": "string"},
                "kind": {"type": "string", "enum": ["categorical", "real"]},
                "n": {"type": "integer"},
                "predictors": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["name", "codelength_nats", "regret_nats"],
                        "properties": {
                            "name": {"type": "string"},
                            "codelength_nats": {"type": "number"},
                            "regret_nats": {"type": "number"}
                        }
                    }
                },
                "hindsight_ml_nats": {"type": "number"},
                "curve": {"type": "string"},
                "symbols": symbol_map()
            }
        }),
        SchemaName::Test => json!({
            "type": "object",
            "required": ["null", "alt", "alpha", "n", "D_nats", "ratio", "p_conservative", "decision", "batches"],
            "properties": {
                "null": {"type": "string"},
                "alt": {"type": "string"},
                "alpha": {"type": "number"},
                "n": {"type": "integer"},
                "D_nats": {"type": "number"},
                "ratio": {"type": "number"},
                "p_conservative": {"type": "number"},
                "decision": {"type": "string", "enum": ["reject", "retain"]},
                "batches": {"type": "integer"},
                "continuation": {"type": "string", "enum": ["restart", "condition"]},
                "per_batch_D_nats": {"type": "array", "items": {"type": "number"}}
            }
        }),
        SchemaName::Simulate => json!({
            "type": "object",
            "required": ["null", "alt", "alpha", "n", "trials", "rejections", "rate", "bound", "within_bound", "seed"],
            "properties": {
                "null": {"type": "string"},
                "alt": {"type": "string"},
                "alpha": {"type": "number"},
                "n": {"type": "integer"},
                "trials": {"type": "integer"},
                "rejections": {"type": "integer"},
                "rate": {"type": "number"},
                "bound": {"type": "number"},
                "within_bound": {"type": "boolean"},
                "seed": {"type": "integer"}
            }
        }),
    }
}

/// Checks `value` against `schema`, returning every violation found.
pub fn validate(value: &Value, schema: &Value) -> Result<(), Vec<String>> {
    let mut errors = Vec::new();
    check(value, schema, "$", &mut errors);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

fn type_matches(value: &Value, ty: &str) -> bool {
    match ty {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "boolean" => value.is_boolean(),
        "integer" => value.is_u64() || value.is_i64(),
        "number" => value.is_number(),
        _ => false,
    }
}

fn bits_alias(key: &str) -> Option<String> {
    key.strip_suffix("_nats").map(|stem| format!("{stem}_bits"))
}

fn check(value: &Value, schema: &Value, path: &str, errors: &mut Vec<String>) {
    if let Some(ty) = schema.get("type").and_then(Value::as_str) {
        if !type_matches(value, ty) {
            errors.push(format!("{path}: expected {ty}, found {value}"));
            return;
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            errors.push(format!("{path}: {value} is not one of {options:?}"));
        }
    }
    if let (Some(obj), Some(props)) = (value.as_object(), schema.get("properties").and_then(Value::as_object)) {
        let lookup = |key: &str| obj.get(key).or_else(|| bits_alias(key).and_then(|b| obj.get(&b)));
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten().filter_map(Value::as_str) {
            if lookup(key).is_none() {
                errors.push(format!("{path}: missing required field {key:?}"));
            }
        }
        for (key, sub) in props {
            if let Some(v) = lookup(key) {
                check(v, sub, &format!("{path}.{key}"), errors);
            }
        }
    }
    if let (Some(items), Some(item_schema)) = (value.as_array(), schema.get("items")) {
        for (i, item) in items.iter().enumerate() {
            check(item, item_schema, &format!("{path}[{i}]"), errors);
        }
    }
}
