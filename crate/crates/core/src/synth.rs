// SPDX-License-Identifier: Apache-2.0

//! Auxiliary modeling signals: handshakes, the outstanding-request counter
//! and the symbolic transaction-ID tracker.

use std::collections::{BTreeMap, HashSet};

use crate::expr::{sig, Expr};
use crate::parser::{AttribDecl, ParsedModule, Suffix};
use crate::span::Warning;
use crate::transaction::{transaction_kind, InterfaceSide, Transaction, TxnKind};

pub const DEFAULT_MAX_OUTSTANDING: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuxKind {
    HandshakeWire,
    Symbolic,
    CounterReg,
    InflightReg,
    SampledDataReg,
}

/// How an auxiliary signal gets its value each cycle. Registers start at
/// zero after reset and take their next value at the clock edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuxRule {
    Wire(Expr),
    /// Free variable, held constant by an assumption.
    Symbolic,
    /// `+1` on `inc`, `-1` on `dec`, wrapping at `bits`.
    Counter {
        inc: Expr,
        dec: Expr,
        bits: u32,
    },
    /// Set on `set`, cleared on `clear`. When both fire, an already
    /// in-flight ID stays in flight (a new request replaces the completed
    /// one) while an idle ID stays idle (same-cycle pass-through).
    Inflight {
        set: Expr,
        clear: Expr,
    },
    /// Captures `value` whenever `enable` holds.
    Sample {
        enable: Expr,
        value: Expr,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxSignal {
    pub name: String,
    pub kind: AuxKind,
    /// Verbatim range, empty for a single bit.
    pub width_expr: String,
    pub init_expr: String,
    /// Next-value (registers) or value (wires) text; empty for symbolics.
    pub update_expr: String,
    pub rule: AuxRule,
}

/// Names of the modeling signals for one transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxnAux {
    pub tname: String,
    pub p_hsk: String,
    pub q_hsk: String,
    pub outstanding: String,
    pub max_outstanding: u32,
    pub counter_bits: u32,
    /// Parameter holding the maximum outstanding count.
    pub max_param: String,
    /// Localparam holding the counter width.
    pub width_param: String,
    pub symb: Option<String>,
    pub inflight: Option<String>,
    pub sampled: Option<String>,
    /// Signals introduced for this transaction. A handshake shared with an
    /// earlier transaction is listed only there.
    pub signals: Vec<AuxSignal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthOutput {
    pub txns: Vec<TxnAux>,
    pub warnings: Vec<Warning>,
}

impl SynthOutput {
    pub fn signals(&self) -> impl Iterator<Item = &AuxSignal> {
        self.txns.iter().flat_map(|t| t.signals.iter())
    }

    pub fn for_txn(&self, tname: &str) -> Option<&TxnAux> {
        self.txns.iter().find(|t| t.tname == tname)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynthOptions {
    pub max_outstanding: Option<u32>,
    pub per_txn: BTreeMap<String, u32>,
}

impl SynthOptions {
    pub fn max_for(&self, tname: &str) -> u32 {
        self.per_txn
            .get(tname)
            .copied()
            .or(self.max_outstanding)
            .unwrap_or(DEFAULT_MAX_OUTSTANDING)
    }
}

/// Bits needed to count up to `max`: `ceil(log2(max + 1))`.
pub fn counter_bits(max: u32) -> u32 {
    (u32::BITS - max.leading_zeros()).max(1)
}

struct Names {
    taken: HashSet<String>,
    warnings: Vec<Warning>,
}

impl Names {
    fn alloc(&mut self, base: String) -> String {
        if self.taken.insert(base.clone()) {
            return base;
        }
        let mut n = 1;
        while self.taken.contains(&format!("{base}_{n}")) {
            n += 1;
        }
        let name = format!("{base}_{n}");
        self.warnings.push(Warning::new(
            None,
            format!("generated name `{base}` collides with an existing name; using `{name}`"),
        ));
        self.taken.insert(name.clone());
        name
    }
}

fn binding_ref(side: &InterfaceSide, s: Suffix) -> Option<Expr> {
    side.get(s).map(|b| sig(&b.signal))
}

fn handshake(side: &InterfaceSide, name: String) -> AuxSignal {
    let val = binding_ref(side, Suffix::Val).unwrap_or(Expr::Const(0));
    let e = match binding_ref(side, Suffix::Ack) {
        Some(ack) => Expr::all(vec![val, ack]),
        None => val,
    };
    AuxSignal {
        name,
        kind: AuxKind::HandshakeWire,
        width_expr: String::new(),
        init_expr: String::new(),
        update_expr: e.render(),
        rule: AuxRule::Wire(e),
    }
}

struct Synth {
    names: Names,
    hsk: BTreeMap<String, String>,
}

impl Synth {
    fn handshakes(&mut self, t: &Transaction, out: &mut Vec<AuxSignal>) -> (String, String) {
        let mut get = |side: &InterfaceSide, out: &mut Vec<AuxSignal>| {
            if let Some(n) = self.hsk.get(&side.name) {
                return n.clone();
            }
            let name = self.names.alloc(format!("{}_hsk", side.name));
            out.push(handshake(side, name.clone()));
            self.hsk.insert(side.name.clone(), name.clone());
            name
        };
        let p = get(&t.p, out);
        let q = get(&t.q, out);
        (p, q)
    }

    fn txn(&mut self, t: &Transaction, max: u32) -> TxnAux {
        let mut signals = Vec::new();
        let (p_hsk, q_hsk) = self.handshakes(t, &mut signals);
        let max_param = self.names.alloc(format!("{}_MAX_OUTSTANDING", t.tname));
        let width_param = self.names.alloc(format!("{}_CNT_W", t.tname));
        let outstanding = self.names.alloc(format!("{}_outstanding", t.tname));
        let bits = counter_bits(max);
        signals.push(AuxSignal {
            name: outstanding.clone(),
            kind: AuxKind::CounterReg,
            width_expr: format!("[{width_param}-1:0]"),
            init_expr: "'0".into(),
            update_expr: format!("{outstanding} + {p_hsk} - {q_hsk}"),
            rule: AuxRule::Counter {
                inc: sig(&p_hsk),
                dec: sig(&q_hsk),
                bits,
            },
        });
        let mut aux = TxnAux {
            tname: t.tname.clone(),
            p_hsk,
            q_hsk,
            outstanding,
            max_outstanding: max,
            counter_bits: bits,
            max_param,
            width_param,
            symb: None,
            inflight: None,
            sampled: None,
            signals,
        };
        if transaction_kind(t) == TxnKind::Tracked {
            self.tracking(t, &mut aux);
        }
        aux
    }

    fn tracking(&mut self, t: &Transaction, aux: &mut TxnAux) {
        let ptid = t.p.get(Suffix::Transid).expect("tracked");
        let qtid = t.q.get(Suffix::Transid).expect("tracked");
        let symb = self.names.alloc(format!("symb_{}_transid", t.tname));
        let inflight = self.names.alloc(format!("{}_inflight", t.tname));
        aux.signals.push(AuxSignal {
            name: symb.clone(),
            kind: AuxKind::Symbolic,
            width_expr: ptid.width_expr.clone(),
            init_expr: String::new(),
            update_expr: String::new(),
            rule: AuxRule::Symbolic,
        });
        let set = Expr::all(vec![sig(&aux.p_hsk), sig(&ptid.signal).eq(sig(&symb))]);
        let clear = Expr::all(vec![sig(&aux.q_hsk), sig(&qtid.signal).eq(sig(&symb))]);
        let cur = sig(&inflight);
        let next = Expr::any(vec![
            Expr::all(vec![
                cur.clone(),
                Expr::any(vec![clear.clone().negate(), set.clone()]),
            ]),
            Expr::all(vec![cur.negate(), set.clone(), clear.clone().negate()]),
        ]);
        aux.signals.push(AuxSignal {
            name: inflight.clone(),
            kind: AuxKind::InflightReg,
            width_expr: String::new(),
            init_expr: "1'b0".into(),
            update_expr: next.render(),
            rule: AuxRule::Inflight {
                set: set.clone(),
                clear,
            },
        });
        if let (Some(pd), Some(_)) = (t.p.get(Suffix::Data), t.q.get(Suffix::Data)) {
            let sampled = self.names.alloc(format!("{}_sampled_data", t.tname));
            aux.signals.push(AuxSignal {
                name: sampled.clone(),
                kind: AuxKind::SampledDataReg,
                width_expr: pd.width_expr.clone(),
                init_expr: "'0".into(),
                update_expr: format!("({}) ? {} : {sampled}", set.render(), pd.signal),
                rule: AuxRule::Sample {
                    enable: set,
                    value: sig(&pd.signal),
                },
            });
            aux.sampled = Some(sampled);
        }
        aux.symb = Some(symb);
        aux.inflight = Some(inflight);
    }
}

/// Modeling signals for every transaction of a module. Generated names are
/// kept clear of ports, parameters and attribute signals.
pub fn synthesize(pm: &ParsedModule, txns: &[Transaction], opts: &SynthOptions) -> SynthOutput {
    let mut taken: HashSet<String> = pm.signals.iter().map(|s| s.name.clone()).collect();
    taken.extend(pm.parameters.iter().map(|p| p.name.clone()));
    taken.insert("ASSERT_INPUTS".into());
    for a in pm.attribs() {
        if matches!(a.decl, AttribDecl::Input | AttribDecl::Output) {
            taken.insert(a.field.full());
        }
    }
    for t in txns {
        taken.extend(t.bindings().map(|b| b.signal.clone()));
    }
    let mut s = Synth {
        names: Names {
            taken,
            warnings: Vec::new(),
        },
        hsk: BTreeMap::new(),
    };
    let out: Vec<TxnAux> = txns
        .iter()
        .map(|t| s.txn(t, opts.max_for(&t.tname)))
        .collect();
    SynthOutput {
        txns: out,
        warnings: s.names.warnings,
    }
}

fn fresh(t: &Transaction) -> Synth {
    Synth {
        names: Names {
            taken: t.bindings().map(|b| b.signal.clone()).collect(),
            warnings: Vec::new(),
        },
        hsk: BTreeMap::new(),
    }
}

/// Handshake wires of a single transaction.
pub fn synth_handshakes(t: &Transaction) -> Vec<AuxSignal> {
    let mut out = Vec::new();
    fresh(t).handshakes(t, &mut out);
    out
}

/// Counter and tracking signals of a single transaction (handshakes excluded).
pub fn synth_tracking(t: &Transaction, max_outstanding: u32) -> Vec<AuxSignal> {
    fresh(t)
        .txn(t, max_outstanding)
        .signals
        .into_iter()
        .filter(|s| s.kind != AuxKind::HandshakeWire)
        .collect()
}
