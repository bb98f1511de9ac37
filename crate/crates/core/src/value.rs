//! Runtime values stored in table rows and graph properties.
//!
//! Values carry their own kind (`null`, integer, float, text) independently of
//! declared column types. Two orderings matter here:
//!
//! - the *total order* used for sorting: null < numbers < text, numbers
//!   compared numerically across integer/float, text byte-lexicographic;
//! - *widened equality* used for endpoint matching and result comparison,
//!   where integer 1 equals float 1.0.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Null,
    Integer,
    Float,
    Text,
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Null => ValueKind::Null,
            Value::Int(_) => ValueKind::Integer,
            Value::Float(_) => ValueKind::Float,
            Value::Text(_) => ValueKind::Text,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn text(s: impl Into<String>) -> Value {
        Value::Text(s.into())
    }

    /// Numeric view used by widened comparisons.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    /// Canonical form under numeric widening: integral floats collapse to
    /// integers, -0.0 collapses to 0. Hashable and totally ordered, so it can
    /// key indexes and multisets.
    pub fn canonical(&self) -> ValueKey {
        match self {
            Value::Null => ValueKey::Null,
            Value::Int(i) => ValueKey::Int(*i),
            Value::Float(f) => {
                let f = if *f == 0.0 { 0.0 } else { *f };
                if f.fract() == 0.0 && f >= i64::MIN as f64 && f <= i64::MAX as f64 {
                    ValueKey::Int(f as i64)
                } else {
                    ValueKey::Float(f.to_bits())
                }
            }
            Value::Text(s) => ValueKey::Text(s.clone()),
        }
    }

    /// Equality after numeric widening: 1 == 1.0, null == null.
    pub fn widened_eq(&self, other: &Value) -> bool {
        self.canonical() == other.canonical()
    }

    /// SQL-style comparison: any null operand or a number/text kind mismatch
    /// yields `None` (unknown); otherwise numeric or byte-lexicographic order.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => None,
            (Value::Text(a), Value::Text(b)) => Some(a.as_bytes().cmp(b.as_bytes())),
            (Value::Text(_), _) | (_, Value::Text(_)) => None,
            (a, b) => {
                let (x, y) = (a.as_f64().unwrap(), b.as_f64().unwrap());
                x.partial_cmp(&y)
            }
        }
    }

    /// Total order for deterministic sorting: null < numbers < text.
    pub fn total_cmp(&self, other: &Value) -> Ordering {
        fn rank(v: &Value) -> u8 {
            match v {
                Value::Null => 0,
                Value::Int(_) | Value::Float(_) => 1,
                Value::Text(_) => 2,
            }
        }
        match rank(self).cmp(&rank(other)) {
            Ordering::Equal => match (self, other) {
                (Value::Null, Value::Null) => Ordering::Equal,
                (Value::Text(a), Value::Text(b)) => a.as_bytes().cmp(b.as_bytes()),
                (a, b) => {
                    let (x, y) = (a.as_f64().unwrap(), b.as_f64().unwrap());
                    x.total_cmp(&y)
                }
            },
            ord => ord,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => write!(f, "null"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => {
                if x.fract() == 0.0 && x.is_finite() {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x}")
                }
            }
            Value::Text(s) => write!(f, "{s}"),
        }
    }
}

/// Canonical, hashable key for a [`Value`] under numeric widening.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueKey {
    Null,
    Int(i64),
    Float(u64),
    Text(String),
}

/// Canonical key for a whole row; used for dedup and multiset comparison.
pub fn row_key(row: &[Value]) -> Vec<ValueKey> {
    row.iter().map(Value::canonical).collect()
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Null => ser.serialize_unit(),
            Value::Int(i) => ser.serialize_i64(*i),
            Value::Float(f) => ser.serialize_f64(*f),
            Value::Text(s) => ser.serialize_str(s),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Value, D::Error> {
        struct ValueVisitor;
        impl<'de> Visitor<'de> for ValueVisitor {
            type Value = Value;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("null, a number, or a string")
            }
            fn visit_unit<E>(self) -> Result<Value, E> {
                Ok(Value::Null)
            }
            fn visit_none<E>(self) -> Result<Value, E> {
                Ok(Value::Null)
            }
            fn visit_bool<E>(self, b: bool) -> Result<Value, E> {
                Ok(Value::Int(b as i64))
            }
            fn visit_i64<E>(self, i: i64) -> Result<Value, E> {
                Ok(Value::Int(i))
            }
            fn visit_u64<E: de::Error>(self, u: u64) -> Result<Value, E> {
                i64::try_from(u)
                    .map(Value::Int)
                    .map_err(|_| E::custom("integer out of range"))
            }
            fn visit_f64<E>(self, f: f64) -> Result<Value, E> {
                Ok(Value::Float(f))
            }
            fn visit_str<E>(self, s: &str) -> Result<Value, E> {
                Ok(Value::Text(s.to_string()))
            }
        }
        de.deserialize_any(ValueVisitor)
    }
}

/// Serialize a property map with deterministic key order.
pub type PropertyMap = BTreeMap<String, Value>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widening_across_numeric_kinds() {
        assert!(Value::Int(1).widened_eq(&Value::Float(1.0)));
        assert!(!Value::Int(1).widened_eq(&Value::Float(1.5)));
        assert!(Value::Float(-0.0).widened_eq(&Value::Int(0)));
        assert!(Value::Null.widened_eq(&Value::Null));
        assert!(!Value::Text("1".into()).widened_eq(&Value::Int(1)));
    }

    #[test]
    fn total_order_ranks_kinds() {
        let mut vals = vec![
            Value::text("b"),
            Value::Int(2),
            Value::Null,
            Value::Float(1.5),
            Value::text("a"),
        ];
        vals.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(
            vals,
            vec![
                Value::Null,
                Value::Float(1.5),
                Value::Int(2),
                Value::text("a"),
                Value::text("b"),
            ]
        );
    }

    #[test]
    fn sql_compare_is_three_valued() {
        assert_eq!(Value::Null.compare(&Value::Int(1)), None);
        assert_eq!(Value::Int(1).compare(&Value::text("1")), None);
        assert_eq!(
            Value::Int(1).compare(&Value::Float(1.0)),
            Some(Ordering::Equal)
        );
        assert_eq!(
            Value::text("a").compare(&Value::text("b")),
            Some(Ordering::Less)
        );
    }

    #[test]
    fn json_round_trip_preserves_kind() {
        for v in [
            Value::Null,
            Value::Int(7),
            Value::Float(7.0),
            Value::text("x"),
        ] {
            let s = serde_json::to_string(&v).unwrap();
            let back: Value = serde_json::from_str(&s).unwrap();
            assert_eq!(v, back);
        }
    }
}
