use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::uast::doc::{self, ParseError};
use crate::uast::interp::{interpret, InterpError, Limits};
use crate::uast::{Comparison, Program, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct TestCase {
    pub inputs: Vec<Value>,
    pub expected: Value,
    pub comparison: Comparison,
}

impl TestCase {
    pub fn new(inputs: Vec<Value>, expected: Value) -> Self {
        TestCase {
            inputs,
            expected,
            comparison: Comparison::default(),
        }
    }

    pub fn to_json(&self) -> Json {
        json!({
            "input": self.inputs,
            "output": self.expected,
            "comparison": self.comparison,
        })
    }

    fn from_json(value: &Json, path: &str) -> Result<Self, ParseError> {
        let field = |name: &str| {
            value.get(name).ok_or_else(|| ParseError::Malformed {
                path: path.to_string(),
                message: format!("missing field {name:?}"),
            })
        };
        let comparison = match value.get("comparison") {
            None | Some(Json::Null) => Comparison::default(),
            Some(c) => serde_json::from_value(c.clone()).map_err(|e| ParseError::Malformed {
                path: format!("{path}.comparison"),
                message: e.to_string(),
            })?,
        };
        Ok(TestCase {
            inputs: doc::values_from_json(field("input")?, &format!("{path}.input"))?,
            expected: doc::value_from_json(field("output")?, &format!("{path}.output"))?,
            comparison,
        })
    }
}

/// A program together with its input/output tests.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub id: String,
    pub program: Program,
    pub tests: Vec<TestCase>,
}

impl Problem {
    /// Parses a problem file: `{"id", "uast", "tests": [{"input", "output"}]}`.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let value: Json = serde_json::from_str(text)?;
        let id = value
            .get("id")
            .and_then(Json::as_str)
            .ok_or_else(|| ParseError::Malformed {
                path: "$".into(),
                message: "missing string field \"id\"".into(),
            })?
            .to_string();
        let uast = value.get("uast").ok_or_else(|| ParseError::Malformed {
            path: "$".into(),
            message: "missing field \"uast\"".into(),
        })?;
        let program = doc::program_from_json(uast, "$.uast")?;
        let tests = match value.get("tests") {
            None | Some(Json::Null) => Vec::new(),
            Some(Json::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, t)| TestCase::from_json(t, &format!("$.tests[{i}]")))
                .collect::<Result<Vec<_>, _>>()?,
            Some(_) => {
                return Err(ParseError::Malformed {
                    path: "$.tests".into(),
                    message: "expected an array".into(),
                })
            }
        };
        if let Some(entry) = program.entry_func() {
            for (i, t) in tests.iter().enumerate() {
                let fits = t.inputs.len() == entry.params.len()
                    && t.inputs.iter().zip(&entry.params).all(|(v, p)| v.has_type(&p.ty));
                if !fits {
                    return Err(ParseError::Malformed {
                        path: format!("$.tests[{i}].input"),
                        message: format!("inputs do not match the signature of {}", entry.name),
                    });
                }
            }
        }
        Ok(Problem { id, program, tests })
    }

    pub fn to_json(&self) -> Json {
        json!({
            "id": self.id,
            "uast": doc::program_to_json(&self.program),
            "tests": tests_to_json(&self.tests),
        })
    }

    /// Canonical problem file text.
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("problem JSON always serializes");
        s.push('\n');
        s
    }
}

/// The test list in the wire encoding the sandbox shim reads.
pub fn tests_to_json(tests: &[TestCase]) -> Json {
    Json::Array(tests.iter().map(TestCase::to_json).collect())
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("input {index} ({inputs:?}): {error}")]
pub struct DeriveFailure {
    pub index: usize,
    pub inputs: Vec<Value>,
    pub error: InterpError,
}

/// Computes expected outputs with the interpreter, one result per input.
pub fn derive_tests(
    program: &Program,
    inputs: &[Vec<Value>],
    limits: Limits,
) -> Vec<Result<TestCase, DeriveFailure>> {
    inputs
        .iter()
        .enumerate()
        .map(|(index, args)| match interpret(program, args, limits) {
            Ok(expected) => Ok(TestCase::new(args.clone(), expected)),
            Err(error) => Err(DeriveFailure {
                index,
                inputs: args.clone(),
                error,
            }),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uast::build::*;
    use crate::uast::interp::FaultKind;
    use crate::uast::{InterpError, TypeTag};

    fn divider() -> Program {
        Program::new(
            vec![],
            vec![func(
                "__main__",
                vec![b("var0", TypeTag::Int), b("var1", TypeTag::Int)],
                TypeTag::Int,
                vec![],
                vec![ret(div(var("var0"), var("var1")))],
            )],
            "__main__",
        )
    }

    #[test]
    fn derive_reports_each_input() {
        let inputs: Vec<Vec<Value>> = (1..=10).map(|i| vec![Value::Int(i * 3), Value::Int(i)]).collect();
        let derived = derive_tests(&divider(), &inputs, Limits::default());
        assert_eq!(derived.len(), 10);
        assert!(derived.iter().all(|t| matches!(t, Ok(tc) if tc.expected == Value::Int(3))));
        assert!(derive_tests(&divider(), &[], Limits::default()).is_empty());
        let bad = derive_tests(&divider(), &[vec![Value::Int(1), Value::Int(0)]], Limits::default());
        assert!(matches!(
            &bad[0],
            Err(DeriveFailure { index: 0, error: InterpError::Fault(f), .. }) if f.kind == FaultKind::DivByZero
        ));
    }

    #[test]
    fn problem_round_trip() {
        let p = Problem {
            id: "p1".into(),
            program: divider(),
            tests: vec![TestCase::new(vec![Value::Int(6), Value::Int(3)], Value::Int(2))],
        };
        let text = p.to_text();
        let back = Problem::parse(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn mismatched_test_inputs_are_rejected() {
        let mut p = Problem {
            id: "p1".into(),
            program: divider(),
            tests: vec![TestCase::new(vec![Value::Int(6)], Value::Int(2))],
        };
        let err = Problem::parse(&p.to_text()).unwrap_err();
        assert!(matches!(err, ParseError::Malformed { path, .. } if path == "$.tests[0].input"));
        p.tests[0].inputs = vec![Value::str("6"), Value::Int(1)];
        assert!(Problem::parse(&p.to_text()).is_err());
    }
}
