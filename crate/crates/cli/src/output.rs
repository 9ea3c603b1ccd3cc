//! Rendering of reports as JSON or TSV.

use serde_json::{Map, Value};

use crate::args::Format;

const NATS_SUFFIX: &str = "_nats";

/// Renames every `*_nats` key to `*_bits` and converts its numbers.
pub fn to_bits(value: Value) -> Value {
    match value {
        Value::Object(map) => Value::Object(
            map.into_iter()
                .map(|(k, v)| match k.strip_suffix(NATS_SUFFIX) {
                    Some(stem) => (format!("{stem}_bits"), scale_numbers(v)),
                    None => (k, to_bits(v)),
                })
                .collect(),
        ),
        Value::Array(items) => Value::Array(items.into_iter().map(to_bits).collect()),
        other => other,
    }
}

fn scale_numbers(value: Value) -> Value {
    match value {
        Value::Number(n) => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(x / std::f64::consts::LN_2))
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(scale_numbers).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, scale_numbers(v))).collect()),
        other => other,
    }
}

pub fn render(value: &Value, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
            s.push('\n');
            s
        }
        Format::Tsv => render_tsv(value),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        Value::Array(items) if items.iter().all(|i| !i.is_array() && !i.is_object()) => {
            items.iter().map(scalar).collect::<Vec<_>>().join(",")
        }
        other => other.to_string(),
    }
}

fn is_record_array(v: &Value) -> bool {
    matches!(v, Value::Array(items) if !items.is_empty() && items.iter().all(Value::is_object))
}

/// Scalars as `key<TAB>value` lines, then each array of records as a table.
fn render_tsv(value: &Value) -> String {
    let Value::Object(map) = value else {
        return scalar(value) + "\n";
    };
    let mut out = String::new();
    let mut flat = Vec::new();
    flatten("", map, &mut flat);
    for (k, v) in &flat {
        out.push_str(&format!("{k}\t{v}\n"));
    }
    for (key, v) in map {
        let Value::Array(rows) = v else { continue };
        if !is_record_array(v) {
            continue;
        }
        let mut columns: Vec<&str> = Vec::new();
        for row in rows {
            for k in row.as_object().into_iter().flat_map(Map::keys) {
                if !columns.contains(&k.as_str()) {
                    columns.push(k);
                }
            }
        }
        out.push_str(&format!("\n# {key}\n{}\n", columns.join("\t")));
        for row in rows {
            let cells: Vec<String> = columns.iter().map(|c| row.get(*c).map(scalar).unwrap_or_default()).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
    }
    out
}

fn flatten(prefix: &str, map: &Map<String, Value>, out: &mut Vec<(String, String)>) {
    for (k, v) in map {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(inner) => flatten(&key, inner, out),
            v if is_record_array(v) => {}
            v => out.push((key, scalar(v))),
        }
    }
}
