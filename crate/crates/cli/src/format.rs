//! Number rounding and the json / csv / text renderers.

use serde_json::{Map, Number, Value};

/// Significant digits of JSON numbers.
pub const JSON_DIGITS: usize = 12;
/// Significant digits of CSV and text numbers.
pub const DISPLAY_DIGITS: usize = 6;

/// Rounds `x` to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

/// Rounds every float in `value` to [`JSON_DIGITS`] significant digits.
pub fn round_json(value: Value) -> Value {
    map_numbers(value, &|x| round_sig(x, JSON_DIGITS))
}

fn map_numbers(value: Value, f: &dyn Fn(f64) -> f64) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| Number::from_f64(f(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(|v| map_numbers(v, f)).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, map_numbers(v, f))).collect()),
        other => other,
    }
}

/// Shortest decimal for `x` rounded to [`DISPLAY_DIGITS`] significant digits.
pub fn csv_number(x: f64) -> String {
    round_sig(x, DISPLAY_DIGITS).to_string()
}

/// `x` with exactly [`DISPLAY_DIGITS`] significant digits, trailing zeros kept.
pub fn text_number(x: f64) -> String {
    if x == 0.0 {
        return format!("{:.*}", DISPLAY_DIGITS - 1, 0.0);
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = round_sig(x, DISPLAY_DIGITS).abs().log10().floor() as i32;
    if (-5..15).contains(&exponent) {
        let decimals = (DISPLAY_DIGITS as i32 - 1 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{:.*e}", DISPLAY_DIGITS - 1, x)
    }
}

fn scalar(value: &Value, number: fn(f64) -> String) -> String {
    match value {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => number(x),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Flattens nested objects and arrays into dotted keys.
pub fn flatten(value: &Value) -> Vec<(String, Value)> {
    fn go(prefix: &str, value: &Value, out: &mut Vec<(String, Value)>) {
        let key = |k: &str| {
            if prefix.is_empty() {
                k.to_owned()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match value {
            Value::Object(map) => map.iter().for_each(|(k, v)| go(&key(k), v, out)),
            Value::Array(items) => items
                .iter()
                .enumerate()
                .for_each(|(i, v)| go(&key(&i.to_string()), v, out)),
            leaf => out.push((prefix.to_owned(), leaf.clone())),
        }
    }
    let mut out = Vec::new();
    go("", value, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

/// Renders one response. Arrays of objects become table rows in CSV.
pub fn render(value: &Value, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
            s.push('\n');
            s
        }
        Format::Csv => match value {
            Value::Array(rows) if rows.iter().all(Value::is_object) => csv_rows(rows),
            other => csv_rows(std::slice::from_ref(other)),
        },
        Format::Text => match value {
            Value::Array(rows) => rows
                .iter()
                .map(text_block)
                .collect::<Vec<_>>()
                .join("\n"),
            other => text_block(other),
        },
    }
}

fn csv_rows(rows: &[Value]) -> String {
    let flat: Vec<Vec<(String, Value)>> = rows.iter().map(flatten).collect();
    let header: Vec<String> = flat
        .first()
        .map(|r| r.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(&header).expect("in-memory write");
    for row in &flat {
        let lookup: Map<String, Value> = row.iter().cloned().collect();
        let cells = header
            .iter()
            .map(|k| lookup.get(k).map_or(String::new(), |v| scalar(v, csv_number)));
        writer.write_record(cells).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn text_block(value: &Value) -> String {
    flatten(value)
        .into_iter()
        .map(|(k, v)| {
            let k = if k.is_empty() { "value".to_owned() } else { k };
            format!("{k}: {}\n", scalar(&v, text_number))
        })
        .collect()
}
