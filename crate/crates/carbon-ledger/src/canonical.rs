//! Canonical value encoding.
//!
//! Every hash in the system (state roots, block hashes, transaction digests)
//! is computed over this encoding, and every durable file (.genesis, .txlog,
//! .snap) stores it, so the rules are strict by construction:
//!
//! - map keys sorted by UTF-8 byte order, duplicates rejected
//! - no insignificant whitespace
//! - unsigned integers only, decimal, no leading zeros
//! - byte strings enter the value domain as lowercase-hex text
//! - floats and null do not exist in the value domain; the parser rejects them
//!
//! The parser accepts exactly the writer's output: for every value `v`,
//! `parse(write(v)) == v`, and for every accepted byte string `b`,
//! `write(parse(b)) == b`. Distinct values therefore have distinct encodings.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// A structured value in the canonical domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Map(BTreeMap<String, Value>),
    List(Vec<Value>),
    UInt(u128),
    Bool(bool),
    Text(String),
}

impl Value {
    pub fn text(s: impl Into<String>) -> Value {
        Value::Text(s.into())
    }

    pub fn uint(n: impl Into<u128>) -> Value {
        Value::UInt(n.into())
    }

    /// Byte strings are represented as lowercase-hex text.
    pub fn bytes(b: &[u8]) -> Value {
        Value::Text(hex::encode(b))
    }

    pub fn list(items: Vec<Value>) -> Value {
        Value::List(items)
    }

    /// Builds a map value from (key, value) pairs. Panics on duplicate keys;
    /// callers pass literal field names.
    pub fn record<const N: usize>(pairs: [(&str, Value); N]) -> Value {
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            let prev = map.insert(k.to_string(), v);
            assert!(prev.is_none(), "duplicate key {k:?} in record literal");
        }
        Value::Map(map)
    }
}

/// Serializes a value to its unique canonical byte form.
pub fn to_bytes(value: &Value) -> Vec<u8> {
    let mut out = Vec::new();
    write_value(&mut out, value);
    out
}

fn write_value(out: &mut Vec<u8>, value: &Value) {
    match value {
        Value::Map(m) => {
            out.push(b'{');
            for (i, (k, v)) in m.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_text(out, k);
                out.push(b':');
                write_value(out, v);
            }
            out.push(b'}');
        }
        Value::List(items) => {
            out.push(b'[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_value(out, v);
            }
            out.push(b']');
        }
        Value::UInt(n) => {
            out.extend_from_slice(n.to_string().as_bytes());
        }
        Value::Bool(b) => {
            out.extend_from_slice(if *b { b"true" } else { b"false" });
        }
        Value::Text(s) => write_text(out, s),
    }
}

fn write_text(out: &mut Vec<u8>, s: &str) {
    out.push(b'"');
    for c in s.chars() {
        match c {
            '"' => out.extend_from_slice(b"\\\""),
            '\\' => out.extend_from_slice(b"\\\\"),
            '\n' => out.extend_from_slice(b"\\n"),
            '\r' => out.extend_from_slice(b"\\r"),
            '\t' => out.extend_from_slice(b"\\t"),
            '\u{8}' => out.extend_from_slice(b"\\b"),
            '\u{c}' => out.extend_from_slice(b"\\f"),
            c if (c as u32) < 0x20 => {
                out.extend_from_slice(format!("\\u{:04x}", c as u32).as_bytes());
            }
            c => {
                let mut buf = [0u8; 4];
                out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            }
        }
    }
    out.push(b'"');
}

/// Errors raised while parsing a canonical document.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CanonicalError {
    #[error("input is not valid UTF-8")]
    Utf8,
    #[error("unsupported value at byte {pos}: {what}")]
    Unsupported { pos: usize, what: &'static str },
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: &'static str },
    #[error("non-canonical form at byte {pos}: {msg}")]
    NonCanonical { pos: usize, msg: &'static str },
}

/// Parses a canonical document, rejecting any byte sequence the writer
/// would not produce.
pub fn parse(bytes: &[u8]) -> Result<Value, CanonicalError> {
    let text = std::str::from_utf8(bytes).map_err(|_| CanonicalError::Utf8)?;
    let mut p = Parser { input: text.as_bytes(), pos: 0 };
    let value = p.parse_value()?;
    if p.pos != p.input.len() {
        return Err(CanonicalError::Syntax { pos: p.pos, msg: "trailing bytes after value" });
    }
    Ok(value)
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn bump(&mut self) -> Result<u8, CanonicalError> {
        let b = self.peek().ok_or(CanonicalError::Syntax {
            pos: self.pos,
            msg: "unexpected end of input",
        })?;
        self.pos += 1;
        Ok(b)
    }

    fn expect(&mut self, want: u8, msg: &'static str) -> Result<(), CanonicalError> {
        let pos = self.pos;
        if self.bump()? != want {
            return Err(CanonicalError::Syntax { pos, msg });
        }
        Ok(())
    }

    fn parse_value(&mut self) -> Result<Value, CanonicalError> {
        match self.peek() {
            Some(b'{') => self.parse_map(),
            Some(b'[') => self.parse_list(),
            Some(b'"') => Ok(Value::Text(self.parse_text()?)),
            Some(b't') | Some(b'f') => self.parse_bool(),
            Some(b'0'..=b'9') => self.parse_uint(),
            Some(b'n') => Err(CanonicalError::Unsupported { pos: self.pos, what: "null" }),
            Some(b'-') => Err(CanonicalError::Unsupported { pos: self.pos, what: "negative number" }),
            Some(_) => Err(CanonicalError::Syntax { pos: self.pos, msg: "unexpected byte" }),
            None => Err(CanonicalError::Syntax { pos: self.pos, msg: "unexpected end of input" }),
        }
    }

    fn parse_map(&mut self) -> Result<Value, CanonicalError> {
        self.expect(b'{', "expected '{'")?;
        let mut map = BTreeMap::new();
        if self.peek() == Some(b'}') {
            self.pos += 1;
            return Ok(Value::Map(map));
        }
        let mut last_key: Option<String> = None;
        loop {
            let key_pos = self.pos;
            let key = self.parse_text()?;
            if let Some(prev) = &last_key {
                if *prev == key {
                    return Err(CanonicalError::NonCanonical { pos: key_pos, msg: "duplicate map key" });
                }
                if prev.as_str() > key.as_str() {
                    return Err(CanonicalError::NonCanonical {
                        pos: key_pos,
                        msg: "map keys not in byte order",
                    });
                }
            }
            self.expect(b':', "expected ':' after map key")?;
            let value = self.parse_value()?;
            map.insert(key.clone(), value);
            last_key = Some(key);
            match self.bump()? {
                b',' => continue,
                b'}' => return Ok(Value::Map(map)),
                _ => {
                    return Err(CanonicalError::Syntax {
                        pos: self.pos - 1,
                        msg: "expected ',' or '}' in map",
                    })
                }
            }
        }
    }

    fn parse_list(&mut self) -> Result<Value, CanonicalError> {
        self.expect(b'[', "expected '['")?;
        let mut items = Vec::new();
        if self.peek() == Some(b']') {
            self.pos += 1;
            return Ok(Value::List(items));
        }
        loop {
            items.push(self.parse_value()?);
            match self.bump()? {
                b',' => continue,
                b']' => return Ok(Value::List(items)),
                _ => {
                    return Err(CanonicalError::Syntax {
                        pos: self.pos - 1,
                        msg: "expected ',' or ']' in list",
                    })
                }
            }
        }
    }

    fn parse_bool(&mut self) -> Result<Value, CanonicalError> {
        if self.input[self.pos..].starts_with(b"true") {
            self.pos += 4;
            Ok(Value::Bool(true))
        } else if self.input[self.pos..].starts_with(b"false") {
            self.pos += 5;
            Ok(Value::Bool(false))
        } else {
            Err(CanonicalError::Syntax { pos: self.pos, msg: "expected 'true' or 'false'" })
        }
    }

    fn parse_uint(&mut self) -> Result<Value, CanonicalError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        let digits = &self.input[start..self.pos];
        match self.peek() {
            Some(b'.') => return Err(CanonicalError::Unsupported { pos: self.pos, what: "floating point" }),
            Some(b'e') | Some(b'E') => {
                return Err(CanonicalError::Unsupported { pos: self.pos, what: "exponent notation" })
            }
            _ => {}
        }
        if digits.len() > 1 && digits[0] == b'0' {
            return Err(CanonicalError::NonCanonical { pos: start, msg: "leading zero in integer" });
        }
        let text = std::str::from_utf8(digits).expect("digits are ASCII");
        let n: u128 = text
            .parse()
            .map_err(|_| CanonicalError::Syntax { pos: start, msg: "integer out of range" })?;
        Ok(Value::UInt(n))
    }

    fn parse_text(&mut self) -> Result<String, CanonicalError> {
        self.expect(b'"', "expected '\"'")?;
        let mut s = String::new();
        loop {
            let pos = self.pos;
            let b = self.bump()?;
            match b {
                b'"' => return Ok(s),
                b'\\' => {
                    let esc = self.bump()?;
                    match esc {
                        b'"' => s.push('"'),
                        b'\\' => s.push('\\'),
                        b'n' => s.push('\n'),
                        b'r' => s.push('\r'),
                        b't' => s.push('\t'),
                        b'b' => s.push('\u{8}'),
                        b'f' => s.push('\u{c}'),
                        b'u' => {
                            let mut code = 0u32;
                            for _ in 0..4 {
                                let h = self.bump()?;
                                let digit = match h {
                                    b'0'..=b'9' => h - b'0',
                                    b'a'..=b'f' => h - b'a' + 10,
                                    b'A'..=b'F' => {
                                        return Err(CanonicalError::NonCanonical {
                                            pos: self.pos - 1,
                                            msg: "uppercase hex in escape",
                                        })
                                    }
                                    _ => {
                                        return Err(CanonicalError::Syntax {
                                            pos: self.pos - 1,
                                            msg: "invalid hex digit in escape",
                                        })
                                    }
                                };
                                code = code * 16 + u32::from(digit);
                            }
                            // The writer uses \uXXXX only for control characters
                            // that have no short escape; anything else here is a
                            // second spelling of the same string.
                            if code >= 0x20 || matches!(code, 0x8 | 0x9 | 0xa | 0xc | 0xd) {
                                return Err(CanonicalError::NonCanonical {
                                    pos,
                                    msg: "escape for character that must not be \\u-escaped",
                                });
                            }
                            s.push(char::from_u32(code).expect("control code is a valid char"));
                        }
                        _ => {
                            return Err(CanonicalError::Syntax {
                                pos: self.pos - 1,
                                msg: "unknown escape",
                            })
                        }
                    }
                }
                0x00..=0x1f => {
                    return Err(CanonicalError::NonCanonical {
                        pos,
                        msg: "raw control character in text",
                    })
                }
                _ => {
                    // Re-assemble the UTF-8 sequence starting at `pos`.
                    let text = std::str::from_utf8(self.input).expect("validated at entry");
                    let c = text[pos..].chars().next().expect("in bounds");
                    s.push(c);
                    self.pos = pos + c.len_utf8();
                }
            }
        }
    }
}

/// Error interpreting a parsed value as a domain record.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("decode: {0}")]
pub struct DecodeError(pub String);

pub fn decode_err(msg: impl Into<String>) -> DecodeError {
    DecodeError(msg.into())
}

impl Value {
    pub fn as_map(&self) -> Result<&BTreeMap<String, Value>, DecodeError> {
        match self {
            Value::Map(m) => Ok(m),
            other => Err(decode_err(format!("expected map, got {}", other.kind()))),
        }
    }

    pub fn as_list(&self) -> Result<&[Value], DecodeError> {
        match self {
            Value::List(l) => Ok(l),
            other => Err(decode_err(format!("expected list, got {}", other.kind()))),
        }
    }

    pub fn as_u128(&self) -> Result<u128, DecodeError> {
        match self {
            Value::UInt(n) => Ok(*n),
            other => Err(decode_err(format!("expected integer, got {}", other.kind()))),
        }
    }

    pub fn as_u64(&self) -> Result<u64, DecodeError> {
        let n = self.as_u128()?;
        u64::try_from(n).map_err(|_| decode_err(format!("integer {n} exceeds u64 range")))
    }

    pub fn as_bool(&self) -> Result<bool, DecodeError> {
        match self {
            Value::Bool(b) => Ok(*b),
            other => Err(decode_err(format!("expected bool, got {}", other.kind()))),
        }
    }

    pub fn as_text(&self) -> Result<&str, DecodeError> {
        match self {
            Value::Text(s) => Ok(s),
            other => Err(decode_err(format!("expected text, got {}", other.kind()))),
        }
    }

    /// Decodes lowercase-hex text back into bytes.
    pub fn as_hex_bytes(&self) -> Result<Vec<u8>, DecodeError> {
        let s = self.as_text()?;
        if s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(decode_err("hex text must be lowercase"));
        }
        hex::decode(s).map_err(|e| decode_err(format!("bad hex text: {e}")))
    }

    fn kind(&self) -> &'static str {
        match self {
            Value::Map(_) => "map",
            Value::List(_) => "list",
            Value::UInt(_) => "integer",
            Value::Bool(_) => "bool",
            Value::Text(_) => "text",
        }
    }
}

/// Accessor for a required map field.
pub fn field<'a>(map: &'a BTreeMap<String, Value>, key: &str) -> Result<&'a Value, DecodeError> {
    map.get(key).ok_or_else(|| decode_err(format!("missing field {key:?}")))
}

/// Rejects maps carrying fields the decoder did not consume.
pub fn expect_fields(map: &BTreeMap<String, Value>, known: &[&str]) -> Result<(), DecodeError> {
    for key in map.keys() {
        if !known.contains(&key.as_str()) {
            return Err(decode_err(format!("unexpected field {key:?}")));
        }
    }
    Ok(())
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from_utf8_lossy(&to_bytes(self)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roundtrip(v: &Value) -> Value {
        parse(&to_bytes(v)).expect("writer output must parse")
    }

    #[test]
    fn empty_map_is_two_bytes() {
        assert_eq!(to_bytes(&Value::Map(BTreeMap::new())), b"{}");
    }

    #[test]
    fn keys_sort_by_byte_order() {
        let v = Value::record([("b", Value::uint(2u64)), ("a", Value::uint(1u64))]);
        assert_eq!(to_bytes(&v), br#"{"a":1,"b":2}"#);
    }

    #[test]
    fn bytes_render_as_lowercase_hex() {
        let v = Value::bytes(&[0xbe, 0xef]);
        assert_eq!(to_bytes(&v), br#""beef""#);
    }

    #[test]
    fn integers_have_no_leading_zeros() {
        assert_eq!(to_bytes(&Value::uint(0u64)), b"0");
        assert_eq!(to_bytes(&Value::uint(1_000_000u64)), b"1000000");
        assert!(matches!(
            parse(b"01"),
            Err(CanonicalError::NonCanonical { msg: "leading zero in integer", .. })
        ));
    }

    #[test]
    fn rejects_null_float_negative() {
        assert!(matches!(parse(b"null"), Err(CanonicalError::Unsupported { what: "null", .. })));
        assert!(matches!(
            parse(b"1.5"),
            Err(CanonicalError::Unsupported { what: "floating point", .. })
        ));
        assert!(matches!(
            parse(b"1e3"),
            Err(CanonicalError::Unsupported { what: "exponent notation", .. })
        ));
        assert!(matches!(
            parse(b"-4"),
            Err(CanonicalError::Unsupported { what: "negative number", .. })
        ));
    }

    #[test]
    fn rejects_whitespace_and_unsorted_keys() {
        assert!(parse(br#"{"a": 1}"#).is_err());
        assert!(parse(b" {}").is_err());
        assert!(matches!(
            parse(br#"{"b":1,"a":2}"#),
            Err(CanonicalError::NonCanonical { msg: "map keys not in byte order", .. })
        ));
        assert!(matches!(
            parse(br#"{"a":1,"a":2}"#),
            Err(CanonicalError::NonCanonical { msg: "duplicate map key", .. })
        ));
    }

    #[test]
    fn rejects_noncanonical_escapes() {
        // "A" spelled as a \u escape parses as non-canonical.
        assert!(parse(b"\"\\u0041\"").is_err());
        // Tab must use the short escape, not \u0009 and not a raw byte.
        assert!(parse(b"\"\\u0009\"").is_err());
        assert!(parse(b"\"\t\"").is_err());
        assert_eq!(parse(b"\"\\t\"").unwrap(), Value::text("\t"));
        // Uppercase hex rejected; lowercase vertical-tab escape accepted.
        assert!(parse(b"\"\\u000B\"").is_err());
        assert_eq!(parse(b"\"\\u000b\"").unwrap(), Value::text("\u{b}"));
    }

    #[test]
    fn control_characters_roundtrip() {
        let v = Value::text("line1\nline2\ttab\u{1}\u{1f}");
        assert_eq!(roundtrip(&v), v);
    }

    #[test]
    fn trailing_bytes_rejected() {
        assert!(matches!(
            parse(b"{}{}"),
            Err(CanonicalError::Syntax { msg: "trailing bytes after value", .. })
        ));
    }

    #[test]
    fn u128_range_handled() {
        let v = Value::UInt(u128::MAX);
        assert_eq!(roundtrip(&v), v);
        assert!(parse(b"340282366920938463463374607431768211456").is_err());
    }

    fn value_strategy() -> impl Strategy<Value = Value> {
        let leaf = prop_oneof![
            any::<u128>().prop_map(Value::UInt),
            any::<bool>().prop_map(Value::Bool),
            ".{0,24}".prop_map(Value::Text),
            proptest::collection::vec(any::<u8>(), 0..24).prop_map(|b| Value::bytes(&b)),
        ];
        leaf.prop_recursive(3, 48, 6, |inner| {
            prop_oneof![
                proptest::collection::vec(inner.clone(), 0..6).prop_map(Value::List),
                proptest::collection::btree_map(".{0,8}", inner, 0..6).prop_map(Value::Map),
            ]
        })
    }

    proptest! {
        #[test]
        fn roundtrip_identity(v in value_strategy()) {
            prop_assert_eq!(&roundtrip(&v), &v);
        }

        // Injectivity on the value domain: distinct values encode distinctly,
        // and re-serializing a parse yields the input bytes.
        #[test]
        fn distinct_values_encode_distinctly(a in value_strategy(), b in value_strategy()) {
            let ea = to_bytes(&a);
            let eb = to_bytes(&b);
            prop_assert_eq!(a == b, ea == eb);
            prop_assert_eq!(to_bytes(&parse(&ea).unwrap()), ea);
        }
    }
}
