use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::TypeTag;

/// A runtime value in the typed literal encoding used by problem files and
/// the sandbox wire protocol (`{"int": 61}` vs `{"str": "="}`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    /// A character as its integer code point.
    Char(u32),
    Str(String),
    List(Vec<Value>),
    /// Entries in insertion order.
    Map(Vec<(Value, Value)>),
    Set(Vec<Value>),
    Null,
}

/// How an actual output is matched against the expected one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Exact,
    /// Reals match when `|a - b| <= rel * max(|a|, |b|)`.
    RealTolerance { rel: f64 },
}

pub const DEFAULT_REAL_TOLERANCE: f64 = 1e-6;

impl Default for Comparison {
    fn default() -> Self {
        Comparison::RealTolerance {
            rel: DEFAULT_REAL_TOLERANCE,
        }
    }
}

impl Value {
    pub fn str(s: &str) -> Self {
        Value::Str(s.to_string())
    }

    pub fn ch(c: char) -> Self {
        Value::Char(c as u32)
    }

    /// Whether the value inhabits `ty`. Empty containers inhabit any
    /// container type of the right shape.
    pub fn has_type(&self, ty: &TypeTag) -> bool {
        match (self, ty) {
            (Value::Int(_), TypeTag::Int)
            | (Value::Real(_), TypeTag::Real)
            | (Value::Bool(_), TypeTag::Bool)
            | (Value::Char(_), TypeTag::Char)
            | (Value::Str(_), TypeTag::String) => true,
            (Value::List(items), TypeTag::List(elem)) => items.iter().all(|v| v.has_type(elem)),
            (Value::Set(items), TypeTag::Set(elem)) => items.iter().all(|v| v.has_type(elem)),
            (Value::Map(entries), TypeTag::Map(k, v)) => entries
                .iter()
                .all(|(ek, ev)| ek.has_type(k) && ev.has_type(v)),
            _ => false,
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    /// Test-oracle equality: ints and reals compare numerically, a char
    /// equals a one-character string holding it, maps and sets compare
    /// without regard to order, reals obey `cmp`.
    pub fn matches(&self, other: &Value, cmp: Comparison) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Real(_), Value::Int(_) | Value::Real(_))
            | (Value::Int(_), Value::Real(_)) => {
                let (a, b) = (self.as_f64().unwrap(), other.as_f64().unwrap());
                match cmp {
                    Comparison::Exact => a == b,
                    Comparison::RealTolerance { rel } => {
                        a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
                    }
                }
            }
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Char(a), Value::Char(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Char(c), Value::Str(s)) | (Value::Str(s), Value::Char(c)) => {
                let mut chars = s.chars();
                matches!((chars.next(), chars.next()), (Some(x), None) if x as u32 == *c)
            }
            (Value::List(a), Value::List(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.matches(y, cmp))
            }
            (Value::Set(a), Value::Set(b)) => {
                a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| x.matches(y, cmp)))
            }
            (Value::Map(a), Value::Map(b)) => {
                a.len() == b.len()
                    && a.iter().all(|(k, v)| {
                        b.iter()
                            .any(|(k2, v2)| k.matches(k2, cmp) && v.matches(v2, cmp))
                    })
            }
            (Value::Null, Value::Null) => true,
            _ => false,
        }
    }

    /// Coarse shape used by failure analysis: string-like vs list-like vs scalar.
    pub fn shape(&self) -> &'static str {
        match self {
            Value::Str(_) | Value::Char(_) => "string",
            Value::List(_) => "list",
            Value::Map(_) => "map",
            Value::Set(_) => "set",
            Value::Null => "null",
            _ => "scalar",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, items: &[Value]) -> fmt::Result {
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Char(c) => match char::from_u32(*c) {
                Some(ch) => write!(f, "{ch:?}"),
                None => write!(f, "char({c})"),
            },
            Value::Str(s) => write!(f, "{s:?}"),
            Value::List(items) => {
                f.write_str("[")?;
                join(f, items)?;
                f.write_str("]")
            }
            Value::Set(items) => {
                f.write_str("{")?;
                join(f, items)?;
                f.write_str("}")
            }
            Value::Map(entries) => {
                f.write_str("{")?;
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                f.write_str("}")
            }
            Value::Null => f.write_str("null"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_literal_encoding_is_unambiguous() {
        let int = serde_json::to_string(&Value::Int(61)).unwrap();
        let s = serde_json::to_string(&Value::str("=")).unwrap();
        assert_eq!(int, r#"{"int":61}"#);
        assert_eq!(s, r#"{"str":"="}"#);
        assert_eq!(serde_json::to_string(&Value::Null).unwrap(), r#""null""#);
        let map = Value::Map(vec![(Value::Int(1), Value::str("a"))]);
        let text = serde_json::to_string(&map).unwrap();
        assert_eq!(text, r#"{"map":[[{"int":1},{"str":"a"}]]}"#);
        assert_eq!(serde_json::from_str::<Value>(&text).unwrap(), map);
    }

    #[test]
    fn numeric_and_char_matching() {
        let tol = Comparison::default();
        assert!(Value::Int(3).matches(&Value::Real(3.0), tol));
        assert!(Value::Real(1.0).matches(&Value::Real(1.0 + 1e-9), tol));
        assert!(!Value::Real(1.0).matches(&Value::Real(1.0 + 1e-9), Comparison::Exact));
        assert!(Value::ch('=').matches(&Value::str("="), tol));
        assert!(!Value::ch('=').matches(&Value::str("=="), tol));
        assert!(!Value::Bool(true).matches(&Value::Int(1), tol));
        let a = Value::Set(vec![Value::Int(1), Value::Int(2)]);
        let b = Value::Set(vec![Value::Int(2), Value::Int(1)]);
        assert!(a.matches(&b, tol));
    }

    #[test]
    fn has_type_checks_nested_containers() {
        let grid = Value::List(vec![Value::List(vec![Value::Int(1)]), Value::List(vec![])]);
        assert!(grid.has_type(&TypeTag::list(TypeTag::list(TypeTag::Int))));
        assert!(!grid.has_type(&TypeTag::list(TypeTag::Int)));
    }
}
