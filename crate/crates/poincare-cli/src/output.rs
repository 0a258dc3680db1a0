//! One-line JSON envelopes with every float written to 17 significant digits.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{json, Value};

struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_line<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser).expect("JSON values always serialize");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn envelope(result: Value, seed: Option<u64>) -> String {
    to_line(&json!({
        "result": result,
        "meta": { "version": env!("CARGO_PKG_VERSION"), "seed": seed },
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        let line = to_line(&json!({"a": 0.1, "b": 3, "c": [1.0, -2.5e-7]}));
        assert!(line.starts_with(r#"{"a":1.0000000000000001e-1,"b":3,"c":[1.0000000000000000e0,"#));
        let back: Value = serde_json::from_str(&line).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
        assert_eq!(back["c"][1].as_f64(), Some(-2.5e-7));
    }

    #[test]
    fn non_finite_becomes_null() {
        assert_eq!(to_line(&vec![f64::NAN]), "[null]");
    }
}
