//! Report serialization: floats rounded to 10 significant digits, object
//! keys sorted by the JSON map, pretty-printed with a trailing newline, so
//! identical runs produce identical bytes.

use anyhow::{Context, Result};
use serde_json::{Number, Value};
use std::fs;
use std::path::Path;

/// Rounds to 10 significant digits through a decimal round trip.
pub fn round10(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        format!("{x:.9e}").parse().expect("decimal round trip")
    }
}

/// Recursively rounds every float in the document; integers pass through.
pub fn sanitize(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("checked is_f64");
                if let Some(r) = Number::from_f64(round10(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(sanitize),
        Value::Object(map) => map.values_mut().for_each(sanitize),
        _ => {}
    }
}

/// Writes the sanitized report to `out`, or stdout when no path is given.
pub fn write_report(out: Option<&Path>, mut value: Value) -> Result<()> {
    sanitize(&mut value);
    let text = serde_json::to_string_pretty(&value).context("serializing report")? + "\n";
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing report to {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounds_to_ten_significant_digits() {
        assert_eq!(round10(2.0 / 3.0), 0.6666666667);
        assert_eq!(round10(13.0 / 3.0), 4.333333333);
        assert_eq!(round10(-5.0), -5.0);
        assert_eq!(round10(0.0), 0.0);
        assert_eq!(round10(1.23456789012345e-7), 1.23456789e-7);
    }

    #[test]
    fn sanitize_preserves_integers_and_strings() {
        let mut v = json!({"a": 5, "b": 2.0 / 3.0, "c": "x", "d": [1.0 / 3.0]});
        sanitize(&mut v);
        assert_eq!(v["a"], json!(5));
        assert_eq!(v["b"], json!(0.6666666667));
        assert_eq!(v["c"], json!("x"));
        assert_eq!(v["d"][0], json!(0.3333333333));
    }
}
