//! Text and CSV views of the JSON output.

use serde_json::Value;

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("null".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn cell(v: &Value) -> String {
    scalar(v).unwrap_or_else(|| v.to_string())
}

// Arrays of flat objects render as aligned tables.
fn is_flat_table(items: &[Value]) -> bool {
    !items.is_empty()
        && items.iter().all(|i| {
            i.as_object()
                .is_some_and(|o| o.values().all(|v| scalar(v).is_some() || v.as_array().is_some_and(|a| a.iter().all(|x| scalar(x).is_some()))))
        })
}

fn columns(items: &[Value]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for i in items {
        if let Some(o) = i.as_object() {
            for k in o.keys() {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
    }
    cols
}

fn table(items: &[Value], indent: usize, out: &mut String) {
    let cols = columns(items);
    let rows: Vec<Vec<String>> = items
        .iter()
        .map(|i| cols.iter().map(|c| i.get(c).map(cell).unwrap_or_default()).collect())
        .collect();
    let widths: Vec<usize> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| rows.iter().map(|r| r[j].chars().count()).chain([c.chars().count()]).max().unwrap_or(0))
        .collect();
    let line = |vals: &[String]| {
        let cells: Vec<String> = vals
            .iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v:<w$}"))
            .collect();
        format!("{}{}\n", " ".repeat(indent), cells.join("  ").trim_end())
    };
    out.push_str(&line(&cols));
    for r in &rows {
        out.push_str(&line(r));
    }
}

fn walk(key: Option<&str>, v: &Value, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    let label = key.map(|k| format!("{k}:")).unwrap_or_default();
    match v {
        Value::Object(o) => {
            if key.is_some() {
                out.push_str(&format!("{pad}{label}\n"));
            }
            let inner = if key.is_some() { indent + 2 } else { indent };
            for (k, x) in o {
                walk(Some(k), x, inner, out);
            }
        }
        Value::Array(items) if items.iter().all(|x| scalar(x).is_some()) => {
            let vals: Vec<String> = items.iter().map(cell).collect();
            out.push_str(&format!("{pad}{label} [{}]\n", vals.join(", ")));
        }
        Value::Array(items) if is_flat_table(items) => {
            out.push_str(&format!("{pad}{label}\n"));
            table(items, indent + 2, out);
        }
        Value::Array(items) => {
            out.push_str(&format!("{pad}{label}\n"));
            for (i, x) in items.iter().enumerate() {
                walk(Some(&format!("[{i}]")), x, indent + 2, out);
            }
        }
        _ => out.push_str(&format!("{pad}{label} {}\n", cell(v))),
    }
}

/// Indented key/value tree with flat arrays as aligned tables.
pub fn text(v: &Value) -> String {
    let mut out = String::new();
    walk(None, v, 0, &mut out);
    out
}

/// The array at `pointer` as CSV, one column per key.
pub fn csv(v: &Value, pointer: &str) -> anyhow::Result<String> {
    let items = v
        .pointer(pointer)
        .and_then(Value::as_array)
        .ok_or_else(|| anyhow::anyhow!("no table at {pointer}"))?;
    let cols = columns(items);
    let mut w = ::csv::Writer::from_writer(Vec::new());
    w.write_record(&cols)?;
    for i in items {
        w.write_record(cols.iter().map(|c| i.get(c).map(cell).unwrap_or_default()))?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
