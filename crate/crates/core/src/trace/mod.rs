// SPDX-License-Identifier: Apache-2.0

//! Explicit-trace semantics for the generated property kinds.
//!
//! A trace is a finite table of signal values, optionally closed into a
//! lasso (`loop_start`) so that liveness can be decided. Unknown values are
//! `None`; they read as 0 everywhere except inside `!$isunknown(..)`.

mod csvio;
mod enumerate;
mod eval;
mod model;
mod sim;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use csvio::{read_csv, write_csv};
pub use enumerate::{enumerate_traces, TraceIter, TraceSpace, DEFAULT_SPACE_BOUND};
pub use eval::{eval_property, CompiledProperty};
pub use model::{
    check_bundle_on_model, choose_model, ModelReport, PropertyTally, ReferenceModel,
    DEFAULT_PREFIX_LEN,
};
pub use sim::{AuxSimulator, CompiledSim};

pub type Value = Option<u64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("trace space of {0} traces exceeds the bound of {1}")]
    SpaceTooLarge(u128, u128),
    #[error("column `{name}` has {got} entries, expected {expected}")]
    RaggedColumn {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("loop start {0} is outside the trace")]
    BadLoopStart(usize),
    #[error("auxiliary state at the loop back edge differs from the loop start")]
    LassoMismatch,
    #[error("malformed trace file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    names: Vec<String>,
    index: HashMap<String, usize>,
    cols: Vec<Vec<Value>>,
    len: usize,
    loop_start: Option<usize>,
}

impl Trace {
    /// An empty trace (length 0) over the given signals.
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Trace, TraceError> {
        let mut t = Trace::default();
        for n in names {
            t.add_column(n.into(), Vec::new())?;
        }
        Ok(t)
    }

    pub fn from_columns<S: Into<String>>(
        cols: impl IntoIterator<Item = (S, Vec<Value>)>,
    ) -> Result<Trace, TraceError> {
        let mut t = Trace::default();
        let mut first = true;
        for (n, c) in cols {
            if first {
                t.len = c.len();
                first = false;
            }
            t.add_column(n.into(), c)?;
        }
        Ok(t)
    }

    /// Convenience for fully known traces.
    pub fn from_known<S: Into<String>>(
        cols: impl IntoIterator<Item = (S, Vec<u64>)>,
    ) -> Result<Trace, TraceError> {
        Trace::from_columns(
            cols.into_iter()
                .map(|(n, c)| (n, c.into_iter().map(Some).collect())),
        )
    }

    pub fn add_column(&mut self, name: String, col: Vec<Value>) -> Result<usize, TraceError> {
        if self.index.contains_key(&name) {
            return Err(TraceError::DuplicateColumn(name));
        }
        if col.len() != self.len {
            return Err(TraceError::RaggedColumn {
                name,
                got: col.len(),
                expected: self.len,
            });
        }
        let i = self.cols.len();
        self.index.insert(name.clone(), i);
        self.names.push(name);
        self.cols.push(col);
        Ok(i)
    }

    pub fn push_row(&mut self, row: &[Value]) {
        assert_eq!(row.len(), self.cols.len(), "row width");
        for (c, v) in self.cols.iter_mut().zip(row) {
            c.push(*v);
        }
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn col_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn column(&self, name: &str) -> Option<&[Value]> {
        self.col_index(name).map(|i| self.cols[i].as_slice())
    }

    pub fn get(&self, name: &str, cycle: usize) -> Option<Value> {
        self.column(name).and_then(|c| c.get(cycle).copied())
    }

    #[inline]
    pub(crate) fn at(&self, col: usize, cycle: usize) -> Value {
        self.cols[col][cycle]
    }

    /// Value by column index. Panics when out of range.
    #[inline]
    pub fn value(&self, col: usize, cycle: usize) -> Value {
        self.cols[col][cycle]
    }

    #[inline]
    pub fn set(&mut self, col: usize, cycle: usize, v: Value) {
        self.cols[col][cycle] = v;
    }

    /// Truncates or extends every column to `len`; new cells are unknown.
    /// A loop start that no longer fits is dropped.
    pub fn resize(&mut self, len: usize) {
        for c in &mut self.cols {
            c.resize(len, None);
        }
        self.len = len;
        if self.loop_start.is_some_and(|s| s >= len) {
            self.loop_start = None;
        }
    }

    pub(crate) fn col_mut(&mut self, col: usize) -> &mut Vec<Value> {
        &mut self.cols[col]
    }

    pub(crate) fn set_len(&mut self, len: usize) {
        self.len = len;
    }

    pub fn loop_start(&self) -> Option<usize> {
        self.loop_start
    }

    /// Marks the trace as a lasso: after the last cycle it continues at
    /// `start`.
    pub fn set_loop_start(&mut self, start: Option<usize>) -> Result<(), TraceError> {
        if let Some(s) = start {
            if s >= self.len {
                return Err(TraceError::BadLoopStart(s));
            }
        }
        self.loop_start = start;
        Ok(())
    }

    /// Cycle following `c`, if any.
    #[inline]
    pub(crate) fn succ(&self, c: usize) -> Option<usize> {
        if c + 1 < self.len {
            Some(c + 1)
        } else {
            self.loop_start
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Holds,
    /// Earliest violating cycle. For obligations that wrap around a lasso
    /// the cycle is counted along the unrolled trace.
    Violated(usize),
    /// The antecedent never fired (or a cover was never hit).
    Vacuous,
    /// A liveness obligation is still open at the end of a finite trace.
    Pending,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Holds => f.write_str("holds"),
            Outcome::Violated(c) => write!(f, "violated at cycle {c}"),
            Outcome::Vacuous => f.write_str("vacuous"),
            Outcome::Pending => f.write_str("pending"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub property: String,
    pub outcome: Outcome,
}
