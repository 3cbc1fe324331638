// SPDX-License-Identifier: Apache-2.0

//! Generator invariants over randomly shaped annotated modules.

use std::collections::BTreeSet;

use proptest::prelude::*;
use regex::Regex;

use autoft::emit::{generate, EmitOptions, Testbench};
use autoft::expr::Temporal;
use autoft::parser::{literal_width, parse_module, render_module};
use autoft::trace::{eval_property, AuxSimulator, Outcome, Trace};

#[derive(Debug, Clone)]
struct TxnShape {
    incoming: bool,
    p_ack: bool,
    q_ack: bool,
    transid: bool,
    unique: bool,
    data: bool,
    stable: bool,
    active: bool,
    id_bits: u32,
}

fn txn_shape() -> impl Strategy<Value = TxnShape> {
    (any::<[bool; 8]>(), 1u32..=3).prop_map(|(b, id_bits)| TxnShape {
        incoming: b[0],
        p_ack: b[1],
        q_ack: b[2],
        transid: b[3],
        unique: b[3] && b[4],
        data: b[5],
        stable: b[6],
        active: b[7],
        id_bits,
    })
}

fn range(bits: u32) -> String {
    if bits == 1 {
        String::new()
    } else {
        format!("[{}:0] ", bits - 1)
    }
}

/// Source text of a module with one transaction per shape.
fn render_source(shapes: &[TxnShape]) -> String {
    let mut ann = String::new();
    let mut ports = vec!["input wire clk".to_string(), "input wire rst_n".to_string()];
    for (i, s) in shapes.iter().enumerate() {
        let (p, q) = (format!("a{i}"), format!("b{i}"));
        ann.push_str(&format!(
            "  t{i}: {p} {} {q}\n",
            if s.incoming { "-in>" } else { "-out>" }
        ));
        // direction of signals driven by the requester and by the responder
        let (req, rsp) = if s.incoming {
            ("input", "output")
        } else {
            ("output", "input")
        };
        let id = range(s.id_bits);
        ports.push(format!("{req} wire {p}_val"));
        if s.p_ack {
            ports.push(format!("{rsp} wire {p}_ack"));
        }
        if s.transid {
            ports.push(format!("{req} wire {id}{p}_transid"));
        }
        if s.unique {
            ann.push_str(&format!("  {p}_transid_unique = {p}_transid\n"));
        }
        if s.data {
            ports.push(format!("{req} wire [1:0] {p}_data"));
        }
        if s.stable {
            ports.push(format!("{req} wire [1:0] {p}_stable"));
        }
        if s.active {
            ann.push_str(&format!("  {p}_active = busy{i}\n"));
            ports.push(format!("output wire busy{i}"));
        }
        ports.push(format!("{rsp} wire {q}_val"));
        if s.q_ack {
            ports.push(format!("{req} wire {q}_ack"));
        }
        if s.transid {
            ports.push(format!("{rsp} wire {id}{q}_transid"));
        }
        if s.data {
            ports.push(format!("{rsp} wire [1:0] {q}_data"));
        }
    }
    format!(
        "module gen (\n  /*AUTOSVA\n{ann}  */\n  {}\n);\nendmodule\n",
        ports.join(",\n  ")
    )
}

fn shapes() -> impl Strategy<Value = Vec<TxnShape>> {
    prop::collection::vec(txn_shape(), 1..=3)
}

fn bench(shapes: &[TxnShape]) -> Testbench {
    let pm = parse_module(&render_source(shapes)).expect("generated module parses");
    Testbench::build(&pm, &EmitOptions::default()).expect("generated module validates")
}

/// Fully known base trace over every port and symbolic column. `pool`
/// supplies raw values; each is masked to the column width.
fn base_trace(tb: &Testbench, len: usize, pool: &[u64]) -> Trace {
    let mut cols: Vec<(String, u32)> = tb
        .pm
        .signals
        .iter()
        .map(|s| (s.name.clone(), literal_width(&s.width_expr).unwrap_or(1)))
        .collect();
    for b in tb.transactions.iter().flat_map(|t| t.bindings()) {
        if !cols.iter().any(|(n, _)| *n == b.signal) {
            cols.push((b.signal.clone(), b.literal_width().unwrap_or(1)));
        }
    }
    for (t, a) in tb.transactions.iter().zip(&tb.aux.txns) {
        if let Some(symb) = &a.symb {
            let w =
                t.p.get(autoft::parser::Suffix::Transid)
                    .and_then(|b| b.literal_width())
                    .unwrap_or(1);
            cols.push((symb.clone(), w));
        }
    }
    let mut k = 0;
    let mut next = || {
        k += 1;
        pool[k % pool.len()]
    };
    Trace::from_known(cols.into_iter().map(|(name, w)| {
        let mask = (1u64 << w) - 1;
        let column = if name.starts_with("symb_") {
            vec![next() & mask; len]
        } else {
            (0..len).map(|_| next() & mask).collect()
        };
        (name, column)
    }))
    .expect("distinct columns")
}

const KEYWORDS: &[&str] = &[
    "module",
    "endmodule",
    "parameter",
    "localparam",
    "input",
    "wire",
    "reg",
    "default",
    "clocking",
    "cb",
    "posedge",
    "endclocking",
    "disable",
    "iff",
    "always_ff",
    "begin",
    "end",
    "if",
    "else",
    "assert",
    "assume",
    "cover",
    "property",
    "generate",
    "endgenerate",
    "s_eventually",
    "and",
    "or",
    "not",
    "anyconst",
    "ifdef",
    "endif",
    "XPROP",
];

/// Identifiers used in `text` but never declared in it.
fn undeclared(text: &str) -> BTreeSet<String> {
    let no_comments = Regex::new(r"//[^\n]*").unwrap().replace_all(text, "");
    let no_literals = Regex::new(r"\d*'[bdhBDH]?[0-9a-fA-F_xXzZ]+")
        .unwrap()
        .replace_all(&no_comments, " ");
    let decl = Regex::new(
        r"(?:parameter|localparam|wire|reg)\s+(?:\[[^\]]*\]\s*)?([A-Za-z_]\w*)|([A-Za-z_]\w*)\s*:\s*(?:assert|assume|cover)|begin\s*:\s*([A-Za-z_]\w*)|module\s+([A-Za-z_]\w*)",
    )
    .unwrap();
    let declared: BTreeSet<&str> = decl
        .captures_iter(&no_literals)
        .filter_map(|c| c.iter().skip(1).flatten().next().map(|m| m.as_str()))
        .collect();
    let ident = Regex::new(r"[$`]?\b[A-Za-z_]\w*").unwrap();
    ident
        .find_iter(&no_literals)
        .map(|m| m.as_str())
        .filter(|s| !s.starts_with('$') && !s.starts_with('`'))
        .filter(|s| !declared.contains(s) && !KEYWORDS.contains(s))
        .map(str::to_string)
        .collect()
}

fn is_safety(body: &Temporal) -> bool {
    match body {
        Temporal::Always(_) | Temporal::Implies { .. } => true,
        Temporal::Conj(parts) => parts.iter().all(is_safety),
        Temporal::Eventually { .. } | Temporal::Cover(_) => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn render_round_trip(s in shapes()) {
        let pm = parse_module(&render_source(&s)).unwrap();
        let again = parse_module(&render_module(&pm)).unwrap();
        prop_assert_eq!(render_module(&again), render_module(&pm));
        prop_assert_eq!(again.annotations.len(), pm.annotations.len());
    }

    #[test]
    fn generation_is_deterministic(s in shapes()) {
        let pm = parse_module(&render_source(&s)).unwrap();
        let a = generate(&pm, &EmitOptions::default()).unwrap();
        let b = generate(&pm, &EmitOptions::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn emitted_identifiers_are_declared(s in shapes()) {
        let pm = parse_module(&render_source(&s)).unwrap();
        for assert_inputs in [false, true] {
            let opts = EmitOptions { assert_inputs, ..EmitOptions::default() };
            let bundle = generate(&pm, &opts).unwrap();
            let missing = undeclared(&bundle.property_module.text);
            prop_assert!(missing.is_empty(), "{:?} in\n{}", missing, bundle.property_module.text);
        }
    }

    #[test]
    fn counter_tracks_handshakes(
        s in shapes(),
        len in 1usize..=8,
        pool in prop::collection::vec(any::<u64>(), 1..64),
    ) {
        let tb = bench(&s);
        let t = AuxSimulator::new(&tb.aux).augment(&base_trace(&tb, len, &pool)).unwrap();
        for a in &tb.aux.txns {
            let modulus = 1i64 << a.counter_bits;
            let hsk = |name: &str, c: usize| i64::from(t.get(name, c).unwrap().unwrap() != 0);
            let mut expect = 0i64;
            for c in 0..len {
                prop_assert_eq!(t.get(&a.outstanding, c).unwrap(), Some(expect as u64));
                expect = (expect + hsk(&a.p_hsk, c) - hsk(&a.q_hsk, c)).rem_euclid(modulus);
            }
        }
    }

    #[test]
    fn safety_violations_survive_extension(
        s in shapes(),
        len in 1usize..=6,
        extra in 1usize..=3,
        pool in prop::collection::vec(any::<u64>(), 1..64),
    ) {
        let tb = bench(&s);
        let sim = AuxSimulator::new(&tb.aux);
        let long = sim.augment(&base_trace(&tb, len + extra, &pool)).unwrap();
        let mut short = long.clone();
        short.resize(len);
        for p in tb.properties.iter().filter(|p| is_safety(&p.body)) {
            let before = eval_property(p, &short).unwrap().outcome;
            if let Outcome::Violated(c) = before {
                let after = eval_property(p, &long).unwrap().outcome;
                prop_assert_eq!(after, Outcome::Violated(c), "{}", p.name);
            }
        }
    }
}

#[test]
fn undeclared_scan_catches_typos() {
    let text = "module m #(parameter W = 1) (input wire a);\n  wire b = a && c;\nendmodule\n";
    assert_eq!(undeclared(text), BTreeSet::from(["c".to_string()]));
}
