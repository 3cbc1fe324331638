// SPDX-License-Identifier: Apache-2.0

//! Formal testbench generation for annotated SystemVerilog interfaces.
//!
//! The pipeline mirrors the way a designer uses the tool:
//!
//! 1. [`parser`] reads the module header and the `AUTOSVA` annotations.
//! 2. [`transaction`] turns relations and attribute bindings into validated
//!    [`transaction::Transaction`]s.
//! 3. [`synth`] creates the modeling signals (handshakes, counters, symbolic
//!    tracking registers).
//! 4. [`props`] maps attributes onto SVA properties with the right
//!    assert/assume polarity.
//! 5. [`emit`] renders the property module, bind file and tool scripts.
//!
//! [`trace`] is an explicit-trace evaluator for the generated property kinds,
//! used to check the generator against reference transaction machines
//! without a formal tool.

pub mod cli;
pub mod emit;
pub mod expr;
pub mod parser;
pub mod props;
pub mod span;
pub mod synth;
pub mod trace;
pub mod transaction;

pub use emit::{GeneratedFile, TestbenchBundle};
pub use parser::{parse_module, ParsedModule};
pub use props::{Directive, GeneratedProperty, PropertyKind};
pub use span::SourceSpan;
pub use transaction::{build_transactions, Transaction};
