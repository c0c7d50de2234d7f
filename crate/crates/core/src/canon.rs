//! Canonical JSON output.
//!
//! Every emitter in the crate builds a [`Json`] tree and prints it compactly.
//! Object fields keep insertion order and floats are written with 17
//! significant digits, so the same value always prints to the same bytes.

use std::fmt::{self, Write as _};

use num_complex::Complex64;

use crate::linalg::LocalVector;

#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj<K: Into<String>>(fields: impl IntoIterator<Item = (K, Json)>) -> Json {
        Json::Obj(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn str(s: impl Into<String>) -> Json {
        Json::Str(s.into())
    }

    pub fn strs<S: AsRef<str>>(items: impl IntoIterator<Item = S>) -> Json {
        Json::Arr(items.into_iter().map(|s| Json::Str(s.as_ref().to_owned())).collect())
    }

    pub fn complex(z: Complex64) -> Json {
        Json::Arr(vec![Json::Num(z.re), Json::Num(z.im)])
    }

    pub fn vector(v: &LocalVector) -> Json {
        Json::Arr(v.entries().iter().map(|&z| Json::complex(z)).collect())
    }

    pub fn vectors(vs: &[LocalVector]) -> Json {
        Json::Arr(vs.iter().map(Json::vector).collect())
    }
}

/// Formats a float with 17 significant digits. Negative zero prints as zero.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        return "0.0000000000000000e0".to_owned();
    }
    if !x.is_finite() {
        // Not representable in JSON; constructors reject these upstream.
        return "null".to_owned();
    }
    format!("{x:.16e}")
}

fn write_str(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_json(out: &mut String, v: &Json) {
    match v {
        Json::Null => out.push_str("null"),
        Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Json::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Json::Num(x) => out.push_str(&format_f64(*x)),
        Json::Str(s) => write_str(out, s),
        Json::Arr(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_json(out, item);
            }
            out.push(']');
        }
        Json::Obj(fields) => {
            out.push('{');
            for (i, (k, item)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_str(out, k);
                out.push(':');
                write_json(out, item);
            }
            out.push('}');
        }
    }
}

impl fmt::Display for Json {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_json(&mut s, self);
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.1, -1.0 / 3.0, 2f64.sqrt(), 1e-300, 123456.789] {
            let s = format_f64(x);
            let back: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(back, x, "{s}");
        }
        assert_eq!(format_f64(-0.0), format_f64(0.0));
    }

    #[test]
    fn compact_and_ordered() {
        let j = Json::obj([("leaf", Json::str("Ψ1")), ("a", Json::Arr(vec![Json::Int(1), Json::Null]))]);
        assert_eq!(j.to_string(), r#"{"leaf":"Ψ1","a":[1,null]}"#);
        let esc = Json::str("a\"b\\c\n");
        assert_eq!(esc.to_string(), r#""a\"b\\c\n""#);
    }
}
