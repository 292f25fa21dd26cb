//! Canonical serialization for reports.
//!
//! Reports are compared byte-for-byte across reruns and across execution
//! modes, so the JSON layer pins everything the default serializer leaves
//! loose: object keys are sorted, and every float is printed with 17
//! significant digits (`{:.16e}`), which round-trips `f64` exactly.
//! Non-finite floats serialize as `null`.

use serde::Serialize;
use serde_json::Value;

/// Canonical compact JSON: sorted keys, fixed float formatting.
pub fn to_canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, None, 0);
    Ok(out)
}

/// Canonical pretty JSON (two-space indent), same number formatting.
pub fn to_canonical_json_pretty<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, Some(2), 0);
    Ok(out)
}

fn write_value(out: &mut String, v: &Value, indent: Option<usize>, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(f) = n.as_f64() {
                out.push_str(&format!("{f:.16e}"));
            } else {
                out.push_str("null");
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline_indent(out, indent, level + 1);
                write_value(out, item, indent, level + 1);
            }
            newline_indent(out, indent, level);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            // serde_json's default map is a BTreeMap: iteration is key-sorted.
            out.push('{');
            for (i, (key, val)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline_indent(out, indent, level + 1);
                out.push_str(&serde_json::to_string(key).expect("keys are valid strings"));
                out.push(':');
                if indent.is_some() {
                    out.push(' ');
                }
                write_value(out, val, indent, level + 1);
            }
            newline_indent(out, indent, level);
            out.push('}');
        }
    }
}

fn newline_indent(out: &mut String, indent: Option<usize>, level: usize) {
    if let Some(width) = indent {
        out.push('\n');
        out.extend(std::iter::repeat_n(' ', width * level));
    }
}

/// Render rows as CSV with a header. Floats use the same canonical format
/// as the JSON writer.
pub fn to_csv(header: &[&str], rows: &[Vec<CsvField>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(CsvField::render).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug)]
pub enum CsvField {
    Int(i64),
    UInt(u64),
    Float(f64),
    Text(String),
}

impl CsvField {
    fn render(&self) -> String {
        match self {
            CsvField::Int(i) => i.to_string(),
            CsvField::UInt(u) => u.to_string(),
            CsvField::Float(f) => format!("{f:.16e}"),
            CsvField::Text(t) => {
                if t.contains(',') || t.contains('"') {
                    format!("\"{}\"", t.replace('"', "\"\""))
                } else {
                    t.clone()
                }
            }
        }
    }
}
