// SPDX-License-Identifier: Apache-2.0

//! Attribute to property mapping and assert/assume polarity.

use std::fmt;
use std::str::FromStr;

use crate::expr::{sig, Expr, Temporal};
use crate::parser::{Suffix, TxnDirection};
use crate::synth::TxnAux;
use crate::transaction::{InterfaceSide, Side, Transaction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PropertyKind {
    Liveness,
    ResponseHadRequest,
    CounterNoUnderflow,
    AckEventually,
    Stability,
    ActiveCovered,
    TransidIntegrity,
    Uniqueness,
    DataIntegrity,
    Xprop,
}

impl PropertyKind {
    pub const ALL: [PropertyKind; 10] = [
        PropertyKind::Liveness,
        PropertyKind::ResponseHadRequest,
        PropertyKind::CounterNoUnderflow,
        PropertyKind::AckEventually,
        PropertyKind::Stability,
        PropertyKind::ActiveCovered,
        PropertyKind::TransidIntegrity,
        PropertyKind::Uniqueness,
        PropertyKind::DataIntegrity,
        PropertyKind::Xprop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PropertyKind::Liveness => "liveness",
            PropertyKind::ResponseHadRequest => "response_had_request",
            PropertyKind::CounterNoUnderflow => "counter_no_underflow",
            PropertyKind::AckEventually => "ack_eventually",
            PropertyKind::Stability => "stability",
            PropertyKind::ActiveCovered => "active_covered",
            PropertyKind::TransidIntegrity => "transid_integrity",
            PropertyKind::Uniqueness => "uniqueness",
            PropertyKind::DataIntegrity => "data_integrity",
            PropertyKind::Xprop => "xprop",
        }
    }
}

impl fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PropertyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        PropertyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown property kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Directive {
    Assert,
    Assume,
    Cover,
}

impl Directive {
    pub fn keyword(self) -> &'static str {
        match self {
            Directive::Assert => "assert",
            Directive::Assume => "assume",
            Directive::Cover => "cover",
        }
    }
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Guard {
    Xprop,
}

impl Guard {
    pub fn macro_name(self) -> &'static str {
        match self {
            Guard::Xprop => "XPROP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedProperty {
    pub name: String,
    pub kind: PropertyKind,
    pub directive: Directive,
    pub ltl_text: String,
    pub guard: Option<Guard>,
    pub body: Temporal,
    pub tname: String,
}

/// Directive for a property kind on a transaction of the given direction.
pub fn plan_polarity(direction: TxnDirection, kind: PropertyKind) -> Directive {
    use PropertyKind::*;
    let incoming = direction == TxnDirection::Incoming;
    match kind {
        Liveness | ResponseHadRequest | CounterNoUnderflow | AckEventually | TransidIntegrity
        | DataIntegrity => {
            if incoming {
                Directive::Assert
            } else {
                Directive::Assume
            }
        }
        Stability | Uniqueness => {
            if incoming {
                Directive::Assume
            } else {
                Directive::Assert
            }
        }
        ActiveCovered | Xprop => Directive::Assert,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GenOptions {
    /// Replace `s_eventually` with a `##[0:N]` window.
    pub bounded: Option<u32>,
}

struct Builder<'a> {
    t: &'a Transaction,
    out: Vec<GeneratedProperty>,
}

impl Builder<'_> {
    fn push(&mut self, kind: PropertyKind, suffix: &str, directive: Directive, body: Temporal) {
        let name = format!("{}_{}{suffix}", self.t.tname, kind.as_str());
        let guard = (kind == PropertyKind::Xprop).then_some(Guard::Xprop);
        self.out.push(GeneratedProperty {
            name,
            kind,
            directive,
            ltl_text: body.render(),
            guard,
            body,
            tname: self.t.tname.clone(),
        });
    }

    fn planned(&mut self, kind: PropertyKind, body: Temporal) {
        let d = plan_polarity(self.t.direction, kind);
        self.push(kind, "", d, body);
    }
}

fn bound(side: &InterfaceSide, s: Suffix) -> Option<Expr> {
    side.get(s).map(|b| sig(&b.signal))
}

fn xprop(side: &InterfaceSide) -> Expr {
    let val = bound(side, Suffix::Val).expect("validated");
    let others: Vec<Expr> = side
        .bindings
        .iter()
        .filter(|(s, _)| **s != Suffix::Val && **s != Suffix::Active)
        .map(|(_, b)| sig(&b.signal))
        .collect();
    if others.is_empty() {
        return Expr::Known(vec![val]);
    }
    Expr::all(vec![
        Expr::Known(vec![val.clone()]),
        Expr::any(vec![val.negate(), Expr::Known(others)]),
    ])
}

/// Properties for one transaction, in a fixed order.
pub fn gen_properties(t: &Transaction, aux: &TxnAux, opts: &GenOptions) -> Vec<GeneratedProperty> {
    use PropertyKind::*;
    let mut b = Builder { t, out: Vec::new() };
    let p_hsk = sig(&aux.p_hsk);
    let q_hsk = sig(&aux.q_hsk);
    let cnt = sig(&aux.outstanding).nonzero();
    let p_val = bound(&t.p, Suffix::Val).expect("validated");
    let q_val = bound(&t.q, Suffix::Val).expect("validated");

    let tracking = match (&aux.symb, &aux.inflight) {
        (Some(s), Some(i)) => {
            let symb = sig(s);
            let req = Expr::all(vec![
                p_hsk.clone(),
                bound(&t.p, Suffix::Transid).unwrap().eq(symb.clone()),
            ]);
            let q_tid = bound(&t.q, Suffix::Transid).unwrap().eq(symb);
            Some((req, q_tid, sig(i)))
        }
        _ => None,
    };

    let live = match &tracking {
        Some((req, q_tid, inflight)) => Temporal::Eventually {
            ante: Expr::any(vec![req.clone(), inflight.clone()]),
            cons: Expr::all(vec![q_val.clone(), q_tid.clone()]),
            bound: opts.bounded,
        },
        None => Temporal::Eventually {
            ante: Expr::any(vec![p_hsk.clone(), cnt.clone()]),
            cons: q_val.clone(),
            bound: opts.bounded,
        },
    };
    b.planned(Liveness, live);
    b.planned(
        ResponseHadRequest,
        Temporal::Implies {
            ante: q_val.clone(),
            cons: Expr::any(vec![cnt.clone(), p_hsk.clone()]),
            next: false,
        },
    );
    b.planned(
        CounterNoUnderflow,
        Temporal::Implies {
            ante: Expr::all(vec![q_hsk.clone(), p_hsk.clone().negate()]),
            cons: cnt.clone(),
            next: false,
        },
    );

    if let Some(ack) = bound(&t.p, Suffix::Ack) {
        let d = plan_polarity(t.direction, AckEventually);
        if t.p.has(Suffix::Stable) {
            let body = Temporal::Eventually {
                ante: p_val.clone(),
                cons: ack.clone(),
                bound: opts.bounded,
            };
            b.push(AckEventually, "", d, body);
        } else {
            b.push(
                AckEventually,
                "",
                Directive::Cover,
                Temporal::Cover(Expr::all(vec![p_val.clone(), ack.clone()])),
            );
        }
        if let Some(stable) = bound(&t.p, Suffix::Stable) {
            b.planned(
                Stability,
                Temporal::Implies {
                    ante: Expr::all(vec![p_val.clone(), ack.negate()]),
                    cons: Expr::all(vec![p_val.clone(), stable.stable()]),
                    next: true,
                },
            );
        }
    }

    if let Some(active) = &t.active {
        let active = sig(&active.signal);
        b.planned(
            ActiveCovered,
            Temporal::Conj(vec![
                Temporal::Implies {
                    ante: cnt.clone(),
                    cons: active.clone(),
                    next: false,
                },
                Temporal::Implies {
                    ante: active,
                    cons: Expr::any(vec![cnt.clone(), p_hsk.clone(), q_val.clone()]),
                    next: false,
                },
            ]),
        );
    }

    if let Some((req, q_tid, inflight)) = &tracking {
        let resp = Expr::all(vec![q_hsk.clone(), q_tid.clone()]);
        b.planned(
            TransidIntegrity,
            Temporal::Implies {
                ante: resp.clone(),
                cons: Expr::any(vec![inflight.clone(), req.clone()]),
                next: false,
            },
        );
        if t.p.has(Suffix::TransidUnique) {
            b.planned(
                Uniqueness,
                Temporal::Implies {
                    ante: req.clone(),
                    cons: inflight.clone().negate(),
                    next: false,
                },
            );
        }
        if let (Some(sampled), Some(q_data)) = (&aux.sampled, bound(&t.q, Suffix::Data)) {
            b.planned(
                DataIntegrity,
                Temporal::Implies {
                    ante: Expr::all(vec![resp, inflight.clone()]),
                    cons: q_data.eq(sig(sampled)),
                    next: false,
                },
            );
        }
    }

    for side in [Side::P, Side::Q] {
        let body = Temporal::Always(xprop(t.side(side)));
        b.push(Xprop, &format!("_{}", side.tag()), Directive::Assert, body);
    }
    b.out
}

/// How a property set is used in the testbench being generated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkMode {
    Standalone,
    /// Included in a parent testbench; names are prefixed with the scope.
    AsSubmodule(String),
    /// Every assumption is checked as an assertion.
    AssertAll,
}

/// Rewrites names and directives. Bodies are never touched.
pub fn apply_link_transforms(
    props: &[GeneratedProperty],
    mode: &LinkMode,
    assert_inputs: bool,
) -> Vec<GeneratedProperty> {
    props
        .iter()
        .map(|p| {
            let mut p = p.clone();
            if let LinkMode::AsSubmodule(scope) = mode {
                p.name = format!("{scope}_{}", p.name);
            }
            if (assert_inputs || *mode == LinkMode::AssertAll) && p.directive == Directive::Assume {
                p.directive = Directive::Assert;
            }
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_module;
    use crate::synth::{synthesize, SynthOptions};
    use crate::transaction::build_transactions;

    fn gen(src: &str, opts: GenOptions) -> Vec<GeneratedProperty> {
        let pm = parse_module(src).unwrap();
        let m = build_transactions(&pm).unwrap();
        let aux = synthesize(&pm, &m.transactions, &SynthOptions::default());
        m.transactions
            .iter()
            .zip(&aux.txns)
            .flat_map(|(t, a)| gen_properties(t, a, &opts))
            .collect()
    }

    fn summary(props: &[GeneratedProperty]) -> Vec<(String, Directive)> {
        props
            .iter()
            .map(|p| (p.name.clone(), p.directive))
            .collect()
    }

    #[test]
    fn polarity_table() {
        use Directive::*;
        use PropertyKind::*;
        let expect = [
            (Liveness, Assert, Assume),
            (ResponseHadRequest, Assert, Assume),
            (CounterNoUnderflow, Assert, Assume),
            (AckEventually, Assert, Assume),
            (Stability, Assume, Assert),
            (ActiveCovered, Assert, Assert),
            (TransidIntegrity, Assert, Assume),
            (Uniqueness, Assume, Assert),
            (DataIntegrity, Assert, Assume),
            (Xprop, Assert, Assert),
        ];
        for (k, i, o) in expect {
            assert_eq!(plan_polarity(TxnDirection::Incoming, k), i, "{k}");
            assert_eq!(plan_polarity(TxnDirection::Outgoing, k), o, "{k}");
        }
    }

    #[test]
    fn val_only_incoming() {
        let props = gen(
            "module m (// AUTOSVA t: p -in> q
             input wire p_val, output wire q_val);",
            GenOptions::default(),
        );
        let names: Vec<_> = props.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "t_liveness",
                "t_response_had_request",
                "t_counter_no_underflow",
                "t_xprop_p",
                "t_xprop_q"
            ]
        );
        assert!(props.iter().all(|p| p.directive == Directive::Assert));
        assert_eq!(
            props[0].ltl_text,
            "(p_hsk || t_outstanding > 0) |-> s_eventually (q_val)"
        );
        assert_eq!(props[3].ltl_text, "!$isunknown(p_val)");
        assert_eq!(props[3].guard, Some(Guard::Xprop));
        assert!(props[..3].iter().all(|p| p.guard.is_none()));
    }

    #[test]
    fn outgoing_liveness_is_assumed() {
        let props = gen(
            "module m (// AUTOSVA t: p -out> q
             output wire p_val, input wire q_val);",
            GenOptions::default(),
        );
        assert_eq!(props[0].directive, Directive::Assume);
    }

    #[test]
    fn tracked_liveness_matches_symbolic() {
        let props = gen(
            "module lsu (
  // AUTOSVA lsu_load: lsu_req -in> lsu_res
  input wire lsu_req_val, output wire lsu_req_ack, input wire [3:0] lsu_req_transid,
  input wire lsu_req_transid_unique,
  output wire lsu_res_val, output wire [3:0] lsu_res_transid);",
            GenOptions::default(),
        );
        assert_eq!(
            props[0].ltl_text,
            "((lsu_req_hsk && lsu_req_transid == symb_lsu_load_transid) || lsu_load_inflight) \
             |-> s_eventually (lsu_res_val && lsu_res_transid == symb_lsu_load_transid)"
        );
        let s = summary(&props);
        assert!(s.contains(&("lsu_load_uniqueness".into(), Directive::Assume)));
        assert!(s.contains(&("lsu_load_transid_integrity".into(), Directive::Assert)));
        assert!(s.contains(&("lsu_load_ack_eventually".into(), Directive::Cover)));
    }

    #[test]
    fn stability_and_bounded() {
        let props = gen(
            "module m (/*AUTOSVA
  t: a -in> b
  [7:0] a_stable = a_payload
  */
  input wire a_val, output wire a_ack, input wire [7:0] a_payload, output wire b_val);",
            GenOptions { bounded: Some(5) },
        );
        let st = props
            .iter()
            .find(|p| p.kind == PropertyKind::Stability)
            .unwrap();
        assert_eq!(
            st.ltl_text,
            "(a_val && !a_ack) |=> (a_val && $stable(a_stable))"
        );
        assert_eq!(st.directive, Directive::Assume);
        let ack = props
            .iter()
            .find(|p| p.kind == PropertyKind::AckEventually)
            .unwrap();
        assert_eq!(ack.ltl_text, "a_val |-> ##[0:5] a_ack");
        assert_eq!(ack.directive, Directive::Assert);
        assert_eq!(
            props[0].ltl_text,
            "(a_hsk || t_outstanding > 0) |-> ##[0:5] b_val"
        );
    }

    #[test]
    fn transforms() {
        let props = gen(
            "module m (/*AUTOSVA
  t: a -out> b
  [7:0] a_stable = a_payload
  */
  output wire a_val, input wire a_ack, output wire [7:0] a_payload, input wire b_val);",
            GenOptions::default(),
        );
        assert!(props.iter().any(|p| p.directive == Directive::Assume));
        let same = apply_link_transforms(&props, &LinkMode::Standalone, false);
        assert_eq!(same, props);
        for out in [
            apply_link_transforms(&props, &LinkMode::Standalone, true),
            apply_link_transforms(&props, &LinkMode::AssertAll, false),
        ] {
            assert!(out.iter().all(|p| p.directive != Directive::Assume));
            for (a, b) in props.iter().zip(&out) {
                assert_eq!(a.ltl_text, b.ltl_text);
                assert_eq!(a.name, b.name);
            }
        }
        let sub = apply_link_transforms(&props, &LinkMode::AsSubmodule("ptw".into()), false);
        assert_eq!(sub[0].name, "ptw_t_liveness");
        assert_eq!(sub[0].directive, props[0].directive);
    }

    #[test]
    fn xprop_with_payload() {
        let props = gen(
            "module m (// AUTOSVA t: p -in> q
             input wire p_val, output wire p_ack, input wire [3:0] p_data,
             output wire q_val, output wire [3:0] q_data);",
            GenOptions::default(),
        );
        let x = props.iter().find(|p| p.name == "t_xprop_p").unwrap();
        assert_eq!(
            x.ltl_text,
            "!$isunknown(p_val) && (!p_val || !$isunknown({p_ack, p_data}))"
        );
    }
}
