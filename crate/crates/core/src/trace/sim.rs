// SPDX-License-Identifier: Apache-2.0

use super::eval::CompiledExpr;
use super::{Trace, TraceError, Value};
use crate::synth::{AuxRule, AuxSignal, SynthOutput};

/// Computes the columns of generated handshakes and registers from the
/// interface columns of a trace, cycle by cycle, the way the emitted
/// modeling code would.
#[derive(Debug, Clone)]
pub struct AuxSimulator {
    signals: Vec<AuxSignal>,
}

#[derive(Debug, Clone)]
enum Rule {
    Wire(CompiledExpr),
    Counter {
        inc: CompiledExpr,
        dec: CompiledExpr,
        mask: u64,
    },
    Inflight {
        set: CompiledExpr,
        clear: CompiledExpr,
    },
    Sample {
        enable: CompiledExpr,
        value: CompiledExpr,
    },
}

/// An [`AuxSimulator`] resolved against a column layout.
#[derive(Debug, Clone)]
pub struct CompiledSim {
    items: Vec<(usize, Rule)>,
}

impl AuxSimulator {
    pub fn new(aux: &SynthOutput) -> Self {
        AuxSimulator {
            signals: aux.signals().cloned().collect(),
        }
    }

    pub fn from_signals(signals: Vec<AuxSignal>) -> Self {
        AuxSimulator { signals }
    }

    /// Columns this simulator writes. Symbolic values are not among them:
    /// they are inputs of the trace.
    pub fn output_names(&self) -> impl Iterator<Item = &str> {
        self.signals
            .iter()
            .filter(|s| s.rule != AuxRule::Symbolic)
            .map(|s| s.name.as_str())
    }

    /// Resolves every rule against `layout`, which must already carry the
    /// output columns.
    pub fn compile(&self, layout: &Trace) -> Result<CompiledSim, TraceError> {
        let mut items = Vec::new();
        for s in &self.signals {
            let col = || {
                layout
                    .col_index(&s.name)
                    .ok_or_else(|| TraceError::UnknownSignal(s.name.clone()))
            };
            let rule = match &s.rule {
                AuxRule::Symbolic => {
                    col()?;
                    continue;
                }
                AuxRule::Wire(e) => Rule::Wire(CompiledExpr::new(e, layout)?),
                AuxRule::Counter { inc, dec, bits } => Rule::Counter {
                    inc: CompiledExpr::new(inc, layout)?,
                    dec: CompiledExpr::new(dec, layout)?,
                    mask: if *bits >= 64 {
                        u64::MAX
                    } else {
                        (1u64 << bits) - 1
                    },
                },
                AuxRule::Inflight { set, clear } => Rule::Inflight {
                    set: CompiledExpr::new(set, layout)?,
                    clear: CompiledExpr::new(clear, layout)?,
                },
                AuxRule::Sample { enable, value } => Rule::Sample {
                    enable: CompiledExpr::new(enable, layout)?,
                    value: CompiledExpr::new(value, layout)?,
                },
            };
            items.push((col()?, rule));
        }
        Ok(CompiledSim { items })
    }

    /// Returns a copy of `base` with the output columns added and filled.
    pub fn augment(&self, base: &Trace) -> Result<Trace, TraceError> {
        let mut t = base.clone();
        for n in self.output_names() {
            t.add_column(n.to_string(), vec![None; base.len()])?;
        }
        self.compile(&t)?.run(&mut t)?;
        Ok(t)
    }
}

impl CompiledSim {
    /// Overwrites the output columns of `t` for its current length. On a
    /// lasso, the register state reached after the last cycle must equal
    /// the state at the loop start.
    pub fn run(&self, t: &mut Trace) -> Result<(), TraceError> {
        self.run_from(t, 0)
    }

    /// Like [`CompiledSim::run`], but keeps the outputs of cycles before
    /// `from`. Only valid when those cycles and their inputs are unchanged
    /// since the last run over a trace of the same length.
    pub fn run_from(&self, t: &mut Trace, from: usize) -> Result<(), TraceError> {
        let n = t.len();
        let mut from = from;
        for (col, _) in &self.items {
            if t.col_mut(*col).len() != n {
                t.col_mut(*col).resize(n, None);
                from = 0;
            }
        }
        for c in from..n {
            for (col, rule) in &self.items {
                if !matches!(rule, Rule::Wire(_)) {
                    let v = if c == 0 {
                        Some(0)
                    } else {
                        Self::next(t, *col, rule, c - 1)
                    };
                    t.col_mut(*col)[c] = v;
                }
            }
            for (col, rule) in &self.items {
                if let Rule::Wire(e) = rule {
                    let v = u64::from(e.holds_at(t, c));
                    t.col_mut(*col)[c] = Some(v);
                }
            }
        }
        if let (Some(ls), Some(last)) = (t.loop_start(), n.checked_sub(1)) {
            for (col, rule) in &self.items {
                if !matches!(rule, Rule::Wire(_))
                    && Self::next(t, *col, rule, last) != t.at(*col, ls)
                {
                    return Err(TraceError::LassoMismatch);
                }
            }
        }
        Ok(())
    }

    /// Register value after cycle `c`.
    #[inline]
    fn next(t: &Trace, col: usize, rule: &Rule, c: usize) -> Value {
        let cur = t.at(col, c);
        match rule {
            Rule::Wire(_) => unreachable!("wires carry no state"),
            Rule::Counter { inc, dec, mask } => {
                let up = u64::from(inc.holds_at(t, c));
                let down = u64::from(dec.holds_at(t, c));
                Some(cur.unwrap_or(0).wrapping_add(up).wrapping_sub(down) & mask)
            }
            Rule::Inflight { set, clear } => {
                let held = cur.unwrap_or(0) != 0;
                let set = set.holds_at(t, c);
                let clear = clear.holds_at(t, c);
                let next = if held { !clear || set } else { set && !clear };
                Some(u64::from(next))
            }
            Rule::Sample { enable, value } => {
                if enable.holds_at(t, c) {
                    value.value_at(t, c)
                } else {
                    cur
                }
            }
        }
    }
}
