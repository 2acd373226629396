//! Canonical JSON: object keys sorted, floats rounded to 9 significant
//! digits, negative zero folded to zero. Used for every persisted report
//! and metric table so that identical inputs give identical bytes.

use serde::Serialize;
use serde_json::{Map, Number, Value};

pub const SIGNIFICANT_DIGITS: usize = 9;

pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    s.parse().unwrap_or(x)
}

pub fn canonicalize(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            // serde_json's default map is ordered by key
            let sorted: Map<String, Value> =
                map.into_iter().map(|(k, v)| (k, canonicalize(v))).collect();
            Value::Object(sorted)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        Value::Number(n) if n.is_f64() => {
            let x = round_significant(n.as_f64().unwrap_or(0.0));
            Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        other => other,
    }
}

pub fn to_canonical_value<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<Value> {
    Ok(canonicalize(serde_json::to_value(value)?))
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&to_canonical_value(value)?)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounds_and_sorts() {
        let v = json!({"b": 1.0/3.0, "a": [-0.0, 2, 123456789.987]});
        let s = to_canonical_string(&v).unwrap();
        let a = s.find("\"a\"").unwrap();
        let b = s.find("\"b\"").unwrap();
        assert!(a < b);
        assert!(s.contains("0.333333333"));
        assert!(!s.contains("0.3333333333"));
        assert!(s.contains("123456790"));
        assert!(!s.contains("-0"));
    }

    #[test]
    fn significant_digit_rounding() {
        assert_eq!(round_significant(1.23456789012), 1.23456789);
        assert_eq!(round_significant(-0.0), 0.0);
        assert_eq!(round_significant(121.22), 121.22);
    }
}
