// SPDX-License-Identifier: Apache-2.0

//! Naive per-kind checker. Each function restates one attribute contract
//! directly over per-cycle role values, with its own bookkeeping for the
//! outstanding count, the in-flight bit and the sampled payload.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Naive {
    Holds,
    Violated(usize),
    Vacuous,
    Pending,
}

/// Role values of one cycle. Sides without an ack port have `ack` set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Cycle {
    pub p_val: bool,
    pub p_ack: bool,
    pub p_id: u64,
    pub p_data: u64,
    pub stable: u64,
    pub q_val: bool,
    pub q_ack: bool,
    pub q_id: u64,
    pub q_data: u64,
    pub active: bool,
    pub x_p_val: bool,
    pub x_p_ack: bool,
    pub x_q_val: bool,
    pub x_q_ack: bool,
}

impl Cycle {
    fn p_hsk(&self) -> bool {
        self.p_val && self.p_ack
    }

    fn q_hsk(&self) -> bool {
        self.q_val && self.q_ack
    }
}

pub struct Run<'a> {
    pub cycles: &'a [Cycle],
    pub loop_start: Option<usize>,
    pub symb: u64,
    /// Both sides carry a transid, so the in-flight and sampled registers exist.
    pub tracked: bool,
    pub counter_bits: u32,
}

pub const MAX_CYCLES: usize = 8;

/// Register contents seen during each cycle.
pub struct Ghost {
    pub cnt: [u64; MAX_CYCLES],
    pub inflight: [bool; MAX_CYCLES],
    pub sampled: [u64; MAX_CYCLES],
    /// False when the state after the last cycle differs from the state at
    /// the loop start.
    pub consistent: bool,
}

impl Run<'_> {
    fn n(&self) -> usize {
        self.cycles.len()
    }

    fn req(&self, c: usize) -> bool {
        let x = &self.cycles[c];
        x.p_hsk() && x.p_id == self.symb
    }

    fn resp(&self, c: usize) -> bool {
        let x = &self.cycles[c];
        x.q_hsk() && x.q_id == self.symb
    }

    pub fn ghost(&self) -> Ghost {
        let modulus = 1u64 << self.counter_bits;
        let (mut cnt, mut inflight, mut sampled) = (0u64, false, 0u64);
        let mut g = Ghost {
            cnt: [0; MAX_CYCLES],
            inflight: [false; MAX_CYCLES],
            sampled: [0; MAX_CYCLES],
            consistent: true,
        };
        for c in 0..self.n() {
            g.cnt[c] = cnt;
            g.inflight[c] = inflight;
            g.sampled[c] = sampled;
            let x = &self.cycles[c];
            let mut next = cnt as i64;
            if x.p_hsk() {
                next += 1;
            }
            if x.q_hsk() {
                next -= 1;
            }
            cnt = next.rem_euclid(modulus as i64) as u64;
            let (req, resp) = (self.req(c), self.resp(c));
            if req && !resp {
                inflight = true;
            } else if resp && !req {
                inflight = false;
            }
            if req {
                sampled = x.p_data;
            }
        }
        if let Some(ls) = self.loop_start {
            g.consistent = g.cnt[ls] == cnt;
            if self.tracked {
                g.consistent &= g.inflight[ls] == inflight && g.sampled[ls] == sampled;
            }
        }
        g
    }

    /// Cycles reachable from `c` on the infinite path, in order, up to one
    /// pass through the loop.
    fn future(&self, c: usize) -> impl Iterator<Item = usize> {
        let back = match self.loop_start {
            Some(ls) => ls..c.max(ls),
            None => 0..0,
        };
        (c..self.n()).chain(back)
    }

    /// Position of unrolled cycle `i`.
    fn unrolled(&self, i: usize) -> Option<usize> {
        let n = self.n();
        if i < n {
            return Some(i);
        }
        let ls = self.loop_start?;
        Some(ls + (i - n) % (n - ls))
    }

    fn same_cycle(&self, ante: impl Fn(usize) -> bool, cons: impl Fn(usize) -> bool) -> Naive {
        let mut fired = false;
        for c in 0..self.n() {
            if ante(c) {
                if !cons(c) {
                    return Naive::Violated(c);
                }
                fired = true;
            }
        }
        if fired {
            Naive::Holds
        } else {
            Naive::Vacuous
        }
    }

    fn eventually(&self, ante: impl Fn(usize) -> bool, cons: impl Fn(usize) -> bool) -> Naive {
        let mut fired = false;
        for c in 0..self.n() {
            if !ante(c) {
                continue;
            }
            fired = true;
            if !self.future(c).any(&cons) {
                return match self.loop_start {
                    Some(_) => Naive::Violated(c),
                    None => Naive::Pending,
                };
            }
        }
        if fired {
            Naive::Holds
        } else {
            Naive::Vacuous
        }
    }

    fn within(
        &self,
        bound: usize,
        ante: impl Fn(usize) -> bool,
        cons: impl Fn(usize) -> bool,
    ) -> Naive {
        let mut fired = false;
        let mut pending = false;
        let mut worst: Option<usize> = None;
        for c in 0..self.n() {
            if !ante(c) {
                continue;
            }
            fired = true;
            let mut seen = false;
            let mut short = false;
            for i in c..=c + bound {
                match self.unrolled(i) {
                    Some(j) if cons(j) => {
                        seen = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        short = true;
                        break;
                    }
                }
            }
            if !seen {
                if short {
                    pending = true;
                } else {
                    worst = Some(worst.map_or(c + bound, |w: usize| w.min(c + bound)));
                }
            }
        }
        match worst {
            Some(w) => Naive::Violated(w),
            None if pending => Naive::Pending,
            None if fired => Naive::Holds,
            None => Naive::Vacuous,
        }
    }

    // val row
    pub fn liveness(&self, g: &Ghost, bound: Option<usize>) -> Naive {
        let ante = |c: usize| self.cycles[c].p_hsk() || g.cnt[c] > 0;
        let cons = |c: usize| self.cycles[c].q_val;
        match bound {
            None => self.eventually(ante, cons),
            Some(b) => self.within(b, ante, cons),
        }
    }

    pub fn response_had_request(&self, g: &Ghost) -> Naive {
        self.same_cycle(
            |c| self.cycles[c].q_val,
            |c| g.cnt[c] > 0 || self.cycles[c].p_hsk(),
        )
    }

    pub fn counter_no_underflow(&self, g: &Ghost) -> Naive {
        self.same_cycle(
            |c| self.cycles[c].q_hsk() && !self.cycles[c].p_hsk(),
            |c| g.cnt[c] > 0,
        )
    }

    // ack row
    pub fn ack_eventually(&self) -> Naive {
        self.eventually(|c| self.cycles[c].p_val, |c| self.cycles[c].p_ack)
    }

    pub fn ack_cover(&self) -> Naive {
        if self.cycles.iter().any(Cycle::p_hsk) {
            Naive::Holds
        } else {
            Naive::Vacuous
        }
    }

    // stable row
    pub fn stability(&self) -> Naive {
        let mut fired = false;
        for c in 0..self.n() {
            let x = &self.cycles[c];
            if !(x.p_val && !x.p_ack) {
                continue;
            }
            fired = true;
            let next = if c + 1 < self.n() {
                Some(c + 1)
            } else {
                self.loop_start
            };
            if let Some(s) = next {
                let y = &self.cycles[s];
                if !(y.p_val && y.stable == x.stable) {
                    return Naive::Violated(c + 1);
                }
            }
        }
        if fired {
            Naive::Holds
        } else {
            Naive::Vacuous
        }
    }

    // active row
    pub fn active_covered(&self, g: &Ghost) -> Naive {
        let busy = self.same_cycle(|c| g.cnt[c] > 0, |c| self.cycles[c].active);
        let owed = self.same_cycle(
            |c| self.cycles[c].active,
            |c| g.cnt[c] > 0 || self.cycles[c].p_hsk() || self.cycles[c].q_val,
        );
        match (busy, owed) {
            (Naive::Violated(a), Naive::Violated(b)) => Naive::Violated(a.min(b)),
            (Naive::Violated(a), _) | (_, Naive::Violated(a)) => Naive::Violated(a),
            (Naive::Holds, _) | (_, Naive::Holds) => Naive::Holds,
            _ => Naive::Vacuous,
        }
    }

    // transid rows
    pub fn tracked_liveness(&self, g: &Ghost) -> Naive {
        self.eventually(
            |c| self.req(c) || g.inflight[c],
            |c| self.cycles[c].q_val && self.cycles[c].q_id == self.symb,
        )
    }

    pub fn transid_integrity(&self, g: &Ghost) -> Naive {
        self.same_cycle(|c| self.resp(c), |c| g.inflight[c] || self.req(c))
    }

    pub fn uniqueness(&self, g: &Ghost) -> Naive {
        self.same_cycle(|c| self.req(c), |c| !g.inflight[c])
    }

    // data row
    pub fn data_integrity(&self, g: &Ghost) -> Naive {
        self.same_cycle(
            |c| self.resp(c) && g.inflight[c],
            |c| self.cycles[c].q_data == g.sampled[c],
        )
    }

    // X checks: the valid is known, and when it is high so is the rest
    pub fn xprop_p(&self) -> Naive {
        self.always(|x| !x.x_p_val && (!x.p_val || !x.x_p_ack))
    }

    pub fn xprop_q(&self) -> Naive {
        self.always(|x| !x.x_q_val && (!x.q_val || !x.x_q_ack))
    }

    fn always(&self, ok: impl Fn(&Cycle) -> bool) -> Naive {
        match self.cycles.iter().position(|x| !ok(x)) {
            Some(c) => Naive::Violated(c),
            None => Naive::Holds,
        }
    }
}
