use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::value::{Matrix, Value};

/// A task's payload: a closed set of interpretable operations plus named
/// pure functions looked up in an [`OpRegistry`].
///
/// Inputs to every op are the upstream values in `deps` order followed by the
/// node's inline arguments.
#[derive(Debug, Clone, PartialEq)]
pub enum OpSpec {
    /// Emits `value`; takes no inputs.
    Const { value: Value },
    /// Wrapping integer sum of all inputs plus `addend`.
    Add { addend: i64 },
    /// Same as [`OpSpec::Add`] but consumes `delay_ms` of clock time first.
    SleepAdd { delay_ms: f64 },
    /// Element-wise sum; integers or equally shaped matrices.
    Sum,
    /// Product of a `rows x inner` and an `inner x cols` block.
    MatmulBlock { rows: usize, inner: usize, cols: usize },
    Custom { name: String },
}

impl OpSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            OpSpec::Const { .. } => "const",
            OpSpec::Add { .. } => "add",
            OpSpec::SleepAdd { .. } => "sleep_add",
            OpSpec::Sum => "sum",
            OpSpec::MatmulBlock { .. } => "matmul_block",
            OpSpec::Custom { .. } => "custom",
        }
    }

    /// Simulated compute time charged before the value is produced.
    pub fn delay_ms(&self) -> f64 {
        match self {
            OpSpec::SleepAdd { delay_ms } => *delay_ms,
            _ => 0.0,
        }
    }

    pub fn apply(&self, inputs: &[Value], registry: &OpRegistry) -> Result<Value, OpError> {
        match self {
            OpSpec::Const { value } => {
                if !inputs.is_empty() {
                    return Err(OpError::Arity {
                        op: "const",
                        expected: 0,
                        got: inputs.len(),
                    });
                }
                Ok(value.clone())
            }
            OpSpec::Add { addend } => int_sum(inputs, *addend, "add"),
            OpSpec::SleepAdd { .. } => int_sum(inputs, 0, "sleep_add"),
            OpSpec::Sum => elementwise_sum(inputs),
            OpSpec::MatmulBlock { rows, inner, cols } => {
                let [a, b] = inputs else {
                    return Err(OpError::Arity {
                        op: "matmul_block",
                        expected: 2,
                        got: inputs.len(),
                    });
                };
                let (Some(a), Some(b)) = (a.as_matrix(), b.as_matrix()) else {
                    return Err(OpError::TypeMismatch("matmul_block expects matrices".into()));
                };
                if (a.rows, a.cols, b.rows, b.cols) != (*rows, *inner, *inner, *cols) {
                    return Err(OpError::TypeMismatch(format!(
                        "matmul_block {rows}x{inner}x{cols} got {}x{} * {}x{}",
                        a.rows, a.cols, b.rows, b.cols
                    )));
                }
                // Shapes checked above.
                Ok(Value::Matrix(a.matmul(b).expect("checked shapes")))
            }
            OpSpec::Custom { name } => {
                let f = registry
                    .get(name)
                    .ok_or_else(|| OpError::UnknownCustom(name.clone()))?;
                f(inputs).map_err(OpError::Custom)
            }
        }
    }
}

fn int_sum(inputs: &[Value], addend: i64, op: &'static str) -> Result<Value, OpError> {
    let mut acc = addend;
    for v in inputs {
        let x = v
            .as_int()
            .ok_or_else(|| OpError::TypeMismatch(format!("{op} expects integers")))?;
        acc = acc.wrapping_add(x);
    }
    Ok(Value::Int(acc))
}

fn elementwise_sum(inputs: &[Value]) -> Result<Value, OpError> {
    let Some(first) = inputs.first() else {
        return Err(OpError::Arity {
            op: "sum",
            expected: 1,
            got: 0,
        });
    };
    match first {
        Value::Int(_) => int_sum(inputs, 0, "sum"),
        Value::Matrix(m0) => {
            let mut acc = Matrix::zeros(m0.rows, m0.cols);
            for v in inputs {
                let m = v
                    .as_matrix()
                    .filter(|m| m.rows == acc.rows && m.cols == acc.cols)
                    .ok_or_else(|| OpError::TypeMismatch("sum expects equal-shape matrices".into()))?;
                for (a, b) in acc.data.iter_mut().zip(&m.data) {
                    *a += b;
                }
            }
            Ok(Value::Matrix(acc))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpError {
    #[error("{op} expects {expected} input(s), got {got}")]
    Arity {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("custom op `{0}` is not registered")]
    UnknownCustom(String),
    #[error("custom op failed: {0}")]
    Custom(String),
}

pub type CustomFn = Arc<dyn Fn(&[Value]) -> Result<Value, String> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("custom op `{0}` is already registered")]
pub struct DuplicateName(pub String);

/// Named pure functions available to `custom` ops. Populate it before a run
/// starts; engines only read it.
#[derive(Clone, Default)]
pub struct OpRegistry {
    fns: BTreeMap<String, CustomFn>,
}

impl OpRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F>(&mut self, name: impl Into<String>, f: F) -> Result<(), DuplicateName>
    where
        F: Fn(&[Value]) -> Result<Value, String> + Send + Sync + 'static,
    {
        let name = name.into();
        if self.fns.contains_key(&name) {
            return Err(DuplicateName(name));
        }
        self.fns.insert(name, Arc::new(f));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&CustomFn> {
        self.fns.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.fns.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fns.keys().map(String::as_str)
    }
}

impl fmt::Debug for OpRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OpRegistry")
            .field("names", &self.fns.keys().collect::<Vec<_>>())
            .finish()
    }
}
