// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use super::{Outcome, Trace, TraceError, Verdict};
use crate::expr::{Expr, Temporal};
use crate::props::GeneratedProperty;

#[derive(Debug, Clone)]
enum Node {
    Sig(usize),
    Const(u64),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Eq(Box<Node>, Box<Node>),
    NonZero(Box<Node>),
    Stable(Box<Node>),
    Known(Vec<usize>),
}

fn compile_node(e: &Expr, t: &Trace) -> Result<Node, TraceError> {
    let col = |n: &str| {
        t.col_index(n)
            .ok_or_else(|| TraceError::UnknownSignal(n.to_string()))
    };
    Ok(match e {
        Expr::Sig(n) => Node::Sig(col(n)?),
        Expr::Const(v) => Node::Const(*v),
        Expr::Not(x) => Node::Not(Box::new(compile_node(x, t)?)),
        Expr::And(v) => Node::And(
            v.iter()
                .map(|x| compile_node(x, t))
                .collect::<Result<_, _>>()?,
        ),
        Expr::Or(v) => Node::Or(
            v.iter()
                .map(|x| compile_node(x, t))
                .collect::<Result<_, _>>()?,
        ),
        Expr::Eq(a, b) => Node::Eq(Box::new(compile_node(a, t)?), Box::new(compile_node(b, t)?)),
        Expr::NonZero(x) => Node::NonZero(Box::new(compile_node(x, t)?)),
        Expr::Stable(x) => Node::Stable(Box::new(compile_node(x, t)?)),
        Expr::Known(v) => {
            let mut names = BTreeSet::new();
            v.iter().for_each(|x| x.signals(&mut names));
            Node::Known(names.iter().map(|n| col(n)).collect::<Result<_, _>>()?)
        }
    })
}

fn compile_expr(e: &Expr, t: &Trace) -> Result<C, TraceError> {
    compile_node(e, t).map(|n| lower(&n))
}

/// Tree walked per cycle. Leaf-only conjunctions and disjunctions get
/// their own variants since they dominate generated properties.
#[derive(Debug, Clone)]
enum C {
    Sig(usize),
    Const(u64),
    Not(Box<C>),
    And(Box<[C]>),
    Or(Box<[C]>),
    AndSigs(Box<[usize]>),
    OrSigs(Box<[usize]>),
    Eq(Box<C>, Box<C>),
    NonZero(Box<C>),
    Stable(Box<C>),
    Known(Box<[usize]>),
}

fn lower(n: &Node) -> C {
    let sigs = |v: &[Node]| -> Option<Box<[usize]>> {
        v.iter()
            .map(|x| match x {
                Node::Sig(i) => Some(*i),
                _ => None,
            })
            .collect()
    };
    match n {
        Node::Sig(i) => C::Sig(*i),
        Node::Const(v) => C::Const(*v),
        Node::Not(x) => C::Not(Box::new(lower(x))),
        Node::And(v) => match sigs(v) {
            Some(s) => C::AndSigs(s),
            None => C::And(v.iter().map(lower).collect()),
        },
        Node::Or(v) => match sigs(v) {
            Some(s) => C::OrSigs(s),
            None => C::Or(v.iter().map(lower).collect()),
        },
        Node::Eq(a, b) => C::Eq(Box::new(lower(a)), Box::new(lower(b))),
        Node::NonZero(x) => C::NonZero(Box::new(lower(x))),
        Node::Stable(x) => C::Stable(Box::new(lower(x))),
        Node::Known(cols) => C::Known(cols.clone().into_boxed_slice()),
    }
}

impl C {
    fn val(&self, t: &Trace, c: usize, prev: Option<usize>) -> u64 {
        match self {
            C::Sig(i) => t.at(*i, c).unwrap_or(0),
            C::Const(v) => *v,
            C::Not(x) => u64::from(!x.holds(t, c, prev)),
            C::And(v) => u64::from(v.iter().all(|x| x.holds(t, c, prev))),
            C::Or(v) => u64::from(v.iter().any(|x| x.holds(t, c, prev))),
            C::AndSigs(v) => u64::from(v.iter().all(|&i| t.at(i, c).is_some_and(|x| x != 0))),
            C::OrSigs(v) => u64::from(v.iter().any(|&i| t.at(i, c).is_some_and(|x| x != 0))),
            C::Eq(a, b) => u64::from(a.val(t, c, prev) == b.val(t, c, prev)),
            C::NonZero(x) => u64::from(x.val(t, c, prev) != 0),
            C::Stable(x) => match prev {
                None => 1,
                Some(p) => u64::from(x.val(t, c, prev) == x.val(t, p, None)),
            },
            C::Known(cols) => u64::from(cols.iter().all(|i| t.at(*i, c).is_some())),
        }
    }

    #[inline]
    fn holds(&self, t: &Trace, c: usize, prev: Option<usize>) -> bool {
        match self {
            C::Sig(i) => t.at(*i, c).is_some_and(|x| x != 0),
            _ => self.val(t, c, prev) != 0,
        }
    }

    #[inline]
    fn at(&self, t: &Trace, c: usize) -> bool {
        self.holds(t, c, c.checked_sub(1))
    }
}

#[derive(Debug, Clone)]
enum CT {
    Always(C),
    Implies {
        ante: C,
        cons: C,
        next: bool,
    },
    Eventually {
        ante: C,
        cons: C,
        bound: Option<u32>,
    },
    Conj(Vec<CT>),
    Cover(C),
}

fn compile_temporal(b: &Temporal, t: &Trace) -> Result<CT, TraceError> {
    Ok(match b {
        Temporal::Always(e) => CT::Always(compile_expr(e, t)?),
        Temporal::Cover(e) => CT::Cover(compile_expr(e, t)?),
        Temporal::Implies { ante, cons, next } => CT::Implies {
            ante: compile_expr(ante, t)?,
            cons: compile_expr(cons, t)?,
            next: *next,
        },
        Temporal::Eventually { ante, cons, bound } => CT::Eventually {
            ante: compile_expr(ante, t)?,
            cons: compile_expr(cons, t)?,
            bound: *bound,
        },
        Temporal::Conj(parts) => CT::Conj(
            parts
                .iter()
                .map(|p| compile_temporal(p, t))
                .collect::<Result<_, _>>()?,
        ),
    })
}

/// Position in the trace of unrolled cycle `idx`, with its predecessor.
fn unroll(t: &Trace, idx: usize) -> Option<(usize, Option<usize>)> {
    let pos = |i: usize| -> Option<usize> {
        if i < t.len() {
            Some(i)
        } else {
            let ls = t.loop_start()?;
            Some(ls + (i - t.len()) % (t.len() - ls))
        }
    };
    let p = pos(idx)?;
    let prev = if idx == 0 { None } else { pos(idx - 1) };
    Some((p, prev))
}

impl CT {
    fn eval(&self, t: &Trace) -> Outcome {
        let n = t.len();
        match self {
            CT::Always(e) => (0..n)
                .find(|&c| !e.at(t, c))
                .map_or(Outcome::Holds, Outcome::Violated),
            CT::Cover(e) => {
                if (0..n).any(|c| e.at(t, c)) {
                    Outcome::Holds
                } else {
                    Outcome::Vacuous
                }
            }
            CT::Implies { ante, cons, next } => {
                let mut fired = false;
                for c in 0..n {
                    if !ante.at(t, c) {
                        continue;
                    }
                    fired = true;
                    if !*next {
                        if !cons.at(t, c) {
                            return Outcome::Violated(c);
                        }
                    } else if let Some(s) = t.succ(c) {
                        if !cons.holds(t, s, Some(c)) {
                            return Outcome::Violated(c + 1);
                        }
                    }
                }
                if fired {
                    Outcome::Holds
                } else {
                    Outcome::Vacuous
                }
            }
            CT::Eventually {
                ante,
                cons,
                bound: None,
            } => {
                let in_loop = t
                    .loop_start()
                    .is_some_and(|ls| (ls..n).any(|c| cons.at(t, c)));
                // seen[c]: the consequent holds somewhere in [c, n).
                let mut fired = false;
                let mut open: Option<usize> = None;
                let mut seen = false;
                for c in (0..n).rev() {
                    seen |= cons.at(t, c);
                    if ante.at(t, c) {
                        fired = true;
                        if !seen && !in_loop {
                            open = Some(c);
                        }
                    }
                }
                match (open, t.loop_start()) {
                    (Some(c), Some(_)) => Outcome::Violated(c),
                    (Some(_), None) => Outcome::Pending,
                    (None, _) if fired => Outcome::Holds,
                    (None, _) => Outcome::Vacuous,
                }
            }
            CT::Eventually {
                ante,
                cons,
                bound: Some(b),
            } => {
                let b = *b as usize;
                let mut fired = false;
                let mut pending = false;
                for c in 0..n {
                    if !ante.at(t, c) {
                        continue;
                    }
                    fired = true;
                    let mut found = false;
                    let mut ran_out = false;
                    for j in c..=c + b {
                        match unroll(t, j) {
                            Some((p, prev)) => {
                                if cons.holds(t, p, prev) {
                                    found = true;
                                    break;
                                }
                            }
                            None => {
                                ran_out = true;
                                break;
                            }
                        }
                    }
                    if !found {
                        if ran_out {
                            pending = true;
                        } else {
                            return Outcome::Violated(c + b);
                        }
                    }
                }
                if pending {
                    Outcome::Pending
                } else if fired {
                    Outcome::Holds
                } else {
                    Outcome::Vacuous
                }
            }
            CT::Conj(parts) => combine(parts.iter().map(|p| p.eval(t))),
        }
    }
}

fn combine(outcomes: impl Iterator<Item = Outcome>) -> Outcome {
    let mut viol: Option<usize> = None;
    let (mut pending, mut holds) = (false, false);
    for o in outcomes {
        match o {
            Outcome::Violated(c) => viol = Some(viol.map_or(c, |v| v.min(c))),
            Outcome::Pending => pending = true,
            Outcome::Holds => holds = true,
            Outcome::Vacuous => {}
        }
    }
    match viol {
        Some(c) => Outcome::Violated(c),
        None if pending => Outcome::Pending,
        None if holds => Outcome::Holds,
        None => Outcome::Vacuous,
    }
}

/// An expression resolved against the column layout of a trace.
#[derive(Debug, Clone)]
pub(crate) struct CompiledExpr(C);

impl CompiledExpr {
    pub(crate) fn new(e: &Expr, layout: &Trace) -> Result<Self, TraceError> {
        compile_expr(e, layout).map(CompiledExpr)
    }

    #[inline]
    pub(crate) fn holds_at(&self, t: &Trace, c: usize) -> bool {
        self.0.at(t, c)
    }

    /// Raw value at cycle `c`, `None` when any referenced signal is X.
    pub(crate) fn value_at(&self, t: &Trace, c: usize) -> Option<u64> {
        match &self.0 {
            C::Sig(i) => t.at(*i, c),
            e => Some(e.val(t, c, c.checked_sub(1))),
        }
    }
}

/// A property resolved against the column layout of a trace. Reusable for
/// any trace with the same columns in the same order.
#[derive(Debug, Clone)]
pub struct CompiledProperty {
    name: String,
    body: CT,
}

impl CompiledProperty {
    pub fn new(p: &GeneratedProperty, layout: &Trace) -> Result<Self, TraceError> {
        Self::from_body(&p.name, &p.body, layout)
    }

    pub fn from_body(name: &str, body: &Temporal, layout: &Trace) -> Result<Self, TraceError> {
        Ok(CompiledProperty {
            name: name.to_string(),
            body: compile_temporal(body, layout)?,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn outcome(&self, t: &Trace) -> Outcome {
        self.body.eval(t)
    }
}

/// Evaluates one property over a trace that carries every column the
/// property references, auxiliary signals included.
pub fn eval_property(p: &GeneratedProperty, t: &Trace) -> Result<Verdict, TraceError> {
    let c = CompiledProperty::new(p, t)?;
    Ok(Verdict {
        property: p.name.clone(),
        outcome: c.outcome(t),
    })
}
