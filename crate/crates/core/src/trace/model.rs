// SPDX-License-Identifier: Apache-2.0

//! Executable reference machines that drive a transaction's interface
//! signals, and the harness that checks generated properties against them.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use super::eval::CompiledProperty;
use super::sim::AuxSimulator;
use super::{Outcome, Trace, Value};
use crate::emit::Testbench;
use crate::parser::Suffix;
use crate::props::{Directive, PropertyKind};
use crate::synth::AuxKind;
use crate::transaction::{transaction_kind, Transaction, TxnKind};

pub const DEFAULT_PREFIX_LEN: usize = 4;
const MAX_TAIL: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReferenceModel {
    /// In-order buffer. With the bug, the request ack ignores the full
    /// condition and requests accepted while full are lost.
    Fifo { depth: usize, deadlock_bug: bool },
    /// Single outstanding request, response one cycle after acceptance.
    /// With double issue, a second request is accepted while busy.
    Pipeline { double_issue: bool },
}

impl ReferenceModel {
    pub const NAMES: [&'static str; 4] =
        ["fifo", "fifo-deadlock", "pipeline", "pipeline-double-issue"];

    pub fn name(self) -> &'static str {
        match self {
            ReferenceModel::Fifo {
                deadlock_bug: false,
                ..
            } => "fifo",
            ReferenceModel::Fifo { .. } => "fifo-deadlock",
            ReferenceModel::Pipeline {
                double_issue: false,
            } => "pipeline",
            ReferenceModel::Pipeline { .. } => "pipeline-double-issue",
        }
    }

    pub fn is_buggy(self) -> bool {
        matches!(
            self,
            ReferenceModel::Fifo {
                deadlock_bug: true,
                ..
            } | ReferenceModel::Pipeline { double_issue: true }
        )
    }

    fn capacity(self) -> usize {
        match self {
            ReferenceModel::Fifo { depth, .. } => depth,
            ReferenceModel::Pipeline { double_issue } => 1 + usize::from(double_issue),
        }
    }

    /// Whether the environment may reuse an ID that is still in flight.
    fn env_reuses_ids(self) -> bool {
        matches!(self, ReferenceModel::Pipeline { .. })
    }
}

impl fmt::Display for ReferenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReferenceModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fifo" => Ok(ReferenceModel::Fifo {
                depth: 2,
                deadlock_bug: false,
            }),
            "fifo-deadlock" => Ok(ReferenceModel::Fifo {
                depth: 2,
                deadlock_bug: true,
            }),
            "pipeline" => Ok(ReferenceModel::Pipeline {
                double_issue: false,
            }),
            "pipeline-double-issue" => Ok(ReferenceModel::Pipeline { double_issue: true }),
            _ => Err(format!(
                "unknown model `{s}` (expected one of {})",
                ReferenceModel::NAMES.join(", ")
            )),
        }
    }
}

/// Model named by an `// autoft: model=<name>` comment, or one chosen by
/// the shape of the transactions: a pipeline when some request interface
/// declares `transid_unique`, a FIFO otherwise.
pub fn choose_model(source: &str, tb: &Testbench) -> Result<ReferenceModel, String> {
    for line in source.lines() {
        if let Some(rest) = line.trim().strip_prefix("//") {
            if let Some(name) = rest.trim().strip_prefix("autoft: model=") {
                return name.trim().parse();
            }
        }
    }
    let unique = tb
        .transactions
        .iter()
        .any(|t| t.p.has(Suffix::TransidUnique));
    Ok(if unique {
        ReferenceModel::Pipeline {
            double_issue: false,
        }
    } else {
        ReferenceModel::Fifo {
            depth: 2,
            deadlock_bug: false,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Req {
    id: u64,
    data: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct State {
    queue: VecDeque<Req>,
    pending: Option<Req>,
    /// IDs the environment considers in flight.
    issued: Vec<u64>,
}

/// Which sides bind an ack signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct AckPorts {
    p: bool,
    q: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Choice {
    new: Option<Req>,
    q_ack: bool,
}

/// Interface values of one cycle, by role.
#[derive(Debug, Clone, Copy, Default)]
struct Roles {
    p_val: bool,
    p_ack: bool,
    p_id: u64,
    p_data: u64,
    q_val: bool,
    q_ack: bool,
    q_id: u64,
    q_data: u64,
    active: bool,
}

impl State {
    fn new() -> Self {
        State {
            queue: VecDeque::new(),
            pending: None,
            issued: Vec::new(),
        }
    }

    /// Applies the environment choice, returns the cycle's roles and
    /// advances to the next cycle.
    fn step(&mut self, model: ReferenceModel, ports: AckPorts, choice: Choice) -> Roles {
        if self.pending.is_none() {
            self.pending = choice.new;
        }
        // without a P-side ack the design cannot push back
        let full = ports.p && self.queue.len() >= model.capacity();
        let p_ack = match model {
            ReferenceModel::Fifo {
                deadlock_bug: true, ..
            } => true,
            _ => !full,
        };
        let front = self.queue.front().copied();
        let r = Roles {
            p_val: self.pending.is_some(),
            p_ack,
            p_id: self.pending.map_or(0, |q| q.id),
            p_data: self.pending.map_or(0, |q| q.data),
            q_val: front.is_some(),
            q_ack: choice.q_ack,
            q_id: front.map_or(0, |q| q.id),
            q_data: front.map_or(0, |q| q.data),
            active: front.is_some(),
        };
        if r.q_val && r.q_ack {
            let done = self.queue.pop_front().expect("q_val");
            if let Some(i) = self.issued.iter().position(|&x| x == done.id) {
                self.issued.remove(i);
            }
        }
        if r.p_val && r.p_ack {
            let req = self.pending.take().expect("p_val");
            self.issued.push(req.id);
            if !full {
                self.queue.push_back(req);
            }
        }
        r
    }

    fn choices(
        &self,
        ports: AckPorts,
        avoid_reuse: bool,
        ids: &[u64],
        datas: &[u64],
    ) -> Vec<Choice> {
        let mut news = vec![None];
        if self.pending.is_none() {
            for &id in ids {
                if avoid_reuse && self.issued.contains(&id) {
                    continue;
                }
                for &data in datas {
                    news.push(Some(Req { id, data }));
                }
            }
        }
        let acks: &[bool] = if ports.q { &[false, true] } else { &[true] };
        let mut out = Vec::new();
        for new in news {
            for &q_ack in acks {
                out.push(Choice { new, q_ack });
            }
        }
        out
    }
}

type RoleWriter = fn(&Roles) -> u64;

/// Writes role values into the columns bound to them.
struct RoleColumns {
    writes: Vec<(usize, RoleWriter)>,
}

impl RoleColumns {
    fn new(t: &Transaction, layout: &Trace) -> Self {
        let mut writes: Vec<(usize, RoleWriter)> = Vec::new();
        let mut bind = |sig: &str, f: fn(&Roles) -> u64| {
            if let Some(i) = layout.col_index(sig) {
                writes.push((i, f));
            }
        };
        for (s, b) in &t.p.bindings {
            let f: fn(&Roles) -> u64 = match s {
                Suffix::Val => |r| u64::from(r.p_val),
                Suffix::Ack => |r| u64::from(r.p_ack),
                Suffix::Transid | Suffix::TransidUnique => |r| r.p_id,
                Suffix::Data => |r| r.p_data,
                Suffix::Stable => |r| (r.p_id << 1) | r.p_data,
                Suffix::Active => continue,
            };
            bind(&b.signal, f);
        }
        for (s, b) in &t.q.bindings {
            let f: fn(&Roles) -> u64 = match s {
                Suffix::Val => |r| u64::from(r.q_val),
                Suffix::Ack => |r| u64::from(r.q_ack),
                Suffix::Transid | Suffix::TransidUnique => |r| r.q_id,
                Suffix::Data => |r| r.q_data,
                Suffix::Stable => |r| (r.q_id << 1) | r.q_data,
                Suffix::Active => continue,
            };
            bind(&b.signal, f);
        }
        if let Some(a) = &t.active {
            bind(&a.signal, |r| u64::from(r.active));
        }
        RoleColumns { writes }
    }

    fn row(&self, roles: &Roles, row: &mut [Value]) {
        for (i, f) in &self.writes {
            row[*i] = Some(f(roles));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyTally {
    pub name: String,
    pub kind: PropertyKind,
    pub directive: Directive,
    pub holds: usize,
    pub vacuous: usize,
    pub pending: usize,
    pub violated: usize,
    /// Earliest violating cycle and the offending trace (auxiliary columns
    /// included) for the first violation found.
    pub counterexample: Option<(usize, Trace)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelReport {
    pub model: ReferenceModel,
    pub traces: usize,
    pub tallies: Vec<PropertyTally>,
    pub errors: Vec<String>,
}

impl ModelReport {
    pub fn violations(&self) -> impl Iterator<Item = &PropertyTally> {
        self.tallies.iter().filter(|t| t.violated > 0)
    }

    /// No property was violated on any trace and every trace was well formed.
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty() && self.violations().next().is_none()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model {}: {} traces", self.model, self.traces);
        for t in &self.tallies {
            let status = if t.violated > 0 {
                "VIOLATED"
            } else if t.directive == Directive::Cover {
                if t.holds > 0 {
                    "covered"
                } else {
                    "not covered"
                }
            } else {
                "ok"
            };
            let _ = write!(
                out,
                "  {:<40} {:<6} {:<12} holds={} vacuous={} pending={} violated={}",
                t.name, t.directive, status, t.holds, t.vacuous, t.pending, t.violated
            );
            if let Some((c, _)) = &t.counterexample {
                let _ = write!(out, " first-at-cycle={c}");
            }
            out.push('\n');
        }
        for e in &self.errors {
            let _ = writeln!(out, "  error: {e}");
        }
        out
    }
}

fn layout(tb: &Testbench, sim: &AuxSimulator) -> Trace {
    let mut names: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut add = |n: &str| {
        if seen.insert(n.to_string()) {
            names.push(n.to_string());
        }
    };
    for t in &tb.transactions {
        for b in t.bindings() {
            add(&b.signal);
        }
    }
    for s in tb.aux.signals().filter(|s| s.kind == AuxKind::Symbolic) {
        add(&s.name);
    }
    for n in sim.output_names() {
        add(n);
    }
    Trace::new(names).expect("distinct names")
}

/// Runs every transaction of the testbench against the reference model
/// and evaluates that transaction's properties on each generated trace.
///
/// The environment explores all request/response-ack patterns over the
/// first `prefix_len` cycles, then stops issuing and acks every response
/// until the whole state repeats, which closes the trace into a lasso.
pub fn check_bundle_on_model(
    tb: &Testbench,
    model: ReferenceModel,
    prefix_len: usize,
) -> ModelReport {
    let sim = AuxSimulator::new(&tb.aux);
    let base = layout(tb, &sim);
    let mut report = ModelReport {
        model,
        traces: 0,
        tallies: Vec::new(),
        errors: Vec::new(),
    };
    let compiled_sim = match sim.compile(&base) {
        Ok(s) => s,
        Err(e) => {
            report.errors.push(e.to_string());
            return report;
        }
    };
    for (t, aux) in tb.transactions.iter().zip(&tb.aux.txns) {
        let props: Vec<_> = tb
            .properties
            .iter()
            .filter(|p| p.tname == t.tname)
            .collect();
        let compiled: Vec<CompiledProperty> = match props
            .iter()
            .map(|p| CompiledProperty::new(p, &base))
            .collect()
        {
            Ok(c) => c,
            Err(e) => {
                report.errors.push(e.to_string());
                continue;
            }
        };
        let first = report.tallies.len();
        report.tallies.extend(props.iter().map(|p| PropertyTally {
            name: p.name.clone(),
            kind: p.kind,
            directive: p.directive,
            holds: 0,
            vacuous: 0,
            pending: 0,
            violated: 0,
            counterexample: None,
        }));
        let tracked = transaction_kind(t) == TxnKind::Tracked;
        let ids: Vec<u64> = if tracked { vec![0, 1] } else { vec![0] };
        let avoid_reuse = tracked && !model.env_reuses_ids();
        let ports = AckPorts {
            p: t.p.has(Suffix::Ack),
            q: t.q.has(Suffix::Ack),
        };
        let datas: Vec<u64> = if t.p.has(Suffix::Data) {
            vec![0, 1]
        } else {
            vec![0]
        };
        let roles = RoleColumns::new(t, &base);
        let symb_col = aux.symb.as_ref().and_then(|s| base.col_index(s));
        let symbs: Vec<u64> = if symb_col.is_some() {
            ids.clone()
        } else {
            vec![0]
        };

        let mut prefixes: Vec<Vec<Choice>> = Vec::new();
        let mut stack: Vec<(State, Vec<Choice>)> = vec![(State::new(), Vec::new())];
        while let Some((st, path)) = stack.pop() {
            if path.len() == prefix_len {
                prefixes.push(path);
                continue;
            }
            for ch in st
                .choices(ports, avoid_reuse, &ids, &datas)
                .into_iter()
                .rev()
            {
                let mut next = st.clone();
                next.step(model, ports, ch);
                let mut p = path.clone();
                p.push(ch);
                stack.push((next, p));
            }
        }

        let mut trace = base.clone();
        let mut row: Vec<Value> = vec![Some(0); base.names().len()];
        for prefix in &prefixes {
            for &symb in &symbs {
                let mut st = State::new();
                let mut rows: Vec<Vec<Value>> = Vec::new();
                let mut emit = |st: &mut State, ch: Choice, rows: &mut Vec<Vec<Value>>| {
                    let r = st.step(model, ports, ch);
                    row.iter_mut().for_each(|v| *v = Some(0));
                    roles.row(&r, &mut row);
                    if let Some(c) = symb_col {
                        row[c] = Some(symb);
                    }
                    rows.push(row.clone());
                };
                for &ch in prefix {
                    emit(&mut st, ch, &mut rows);
                }
                let quiet = Choice {
                    new: None,
                    q_ack: true,
                };
                let mut seen: HashMap<State, usize> = HashMap::new();
                let loop_start = loop {
                    if let Some(&k) = seen.get(&st) {
                        break k;
                    }
                    if rows.len() > prefix_len + MAX_TAIL {
                        unreachable!("reference model failed to settle");
                    }
                    seen.insert(st.clone(), rows.len());
                    emit(&mut st, quiet, &mut rows);
                };
                let trace_len = rows.len();
                let cols = trace.names().len();
                for i in 0..cols {
                    let col = trace.col_mut(i);
                    col.clear();
                    col.extend(rows.iter().map(|r| r[i]));
                }
                trace.set_len(trace_len);
                trace
                    .set_loop_start(Some(loop_start))
                    .expect("inside trace");
                if let Err(e) = compiled_sim.run(&mut trace) {
                    report.errors.push(format!("{}: {e}", t.tname));
                    continue;
                }
                report.traces += 1;
                for (k, cp) in compiled.iter().enumerate() {
                    let tally = &mut report.tallies[first + k];
                    match cp.outcome(&trace) {
                        Outcome::Holds => tally.holds += 1,
                        Outcome::Vacuous => tally.vacuous += 1,
                        Outcome::Pending => tally.pending += 1,
                        Outcome::Violated(c) => {
                            tally.violated += 1;
                            if tally.counterexample.is_none() {
                                tally.counterexample = Some((c, trace.clone()));
                            }
                        }
                    }
                }
            }
        }
    }
    report
}
