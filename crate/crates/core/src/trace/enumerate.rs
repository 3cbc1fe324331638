// SPDX-License-Identifier: Apache-2.0

use super::{Trace, TraceError};

pub const DEFAULT_SPACE_BOUND: u128 = 1 << 20;

/// Every trace over `signals` (name, width in bits) of length 1 to
/// `max_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSpace {
    pub signals: Vec<(String, u32)>,
    pub max_len: usize,
    pub bound: u128,
}

impl TraceSpace {
    pub fn new<S: Into<String>>(
        signals: impl IntoIterator<Item = (S, u32)>,
        max_len: usize,
    ) -> Self {
        TraceSpace {
            signals: signals.into_iter().map(|(n, w)| (n.into(), w)).collect(),
            max_len,
            bound: DEFAULT_SPACE_BOUND,
        }
    }

    pub fn with_bound(mut self, bound: u128) -> Self {
        self.bound = bound;
        self
    }

    fn row_bits(&self) -> u32 {
        self.signals.iter().map(|(_, w)| *w).sum()
    }

    /// Number of traces in the space, saturating at `u128::MAX`.
    pub fn total(&self) -> u128 {
        let bits = self.row_bits();
        let mut sum: u128 = 0;
        for len in 1..=self.max_len {
            let Some(exp) = (bits as u128).checked_mul(len as u128) else {
                return u128::MAX;
            };
            if exp >= 128 {
                return u128::MAX;
            }
            sum = sum.saturating_add(1u128 << exp);
        }
        sum
    }

    fn check(&self) -> Result<u128, TraceError> {
        let total = self.total();
        if total > self.bound || self.row_bits() >= 64 {
            return Err(TraceError::SpaceTooLarge(total, self.bound));
        }
        Ok(total)
    }

    fn layout(&self) -> Trace {
        Trace::new(self.signals.iter().map(|(n, _)| n.clone())).expect("distinct signal names")
    }

    fn write_row(&self, t: &mut Trace, cycle: usize, mut row: u64) {
        for (i, (_, w)) in self.signals.iter().enumerate().rev() {
            let mask = if *w >= 64 { u64::MAX } else { (1u64 << w) - 1 };
            t.col_mut(i)[cycle] = Some(row & mask);
            row >>= w;
        }
    }

    /// The `idx`-th trace in enumeration order: shorter traces first, then
    /// lexicographic with cycle 0 most significant and the first signal
    /// most significant within a cycle.
    pub fn trace_at(&self, idx: u128) -> Result<Option<Trace>, TraceError> {
        let total = self.check()?;
        if idx >= total {
            return Ok(None);
        }
        let bits = self.row_bits();
        let mut rest = idx;
        let mut len = 1;
        loop {
            let count = 1u128 << (bits as usize * len);
            if rest < count {
                break;
            }
            rest -= count;
            len += 1;
        }
        let mut t = self.layout();
        for i in 0..self.signals.len() {
            t.col_mut(i).resize(len, None);
        }
        t.set_len(len);
        let row_mask = if bits == 0 { 0 } else { (1u128 << bits) - 1 };
        for cycle in (0..len).rev() {
            self.write_row(&mut t, cycle, (rest & row_mask) as u64);
            rest >>= bits;
        }
        Ok(Some(t))
    }

    /// Visits the whole space in enumeration order, reusing one trace
    /// buffer. Much cheaper than iterating when traces are only inspected.
    pub fn for_each(&self, mut f: impl FnMut(&Trace)) -> Result<(), TraceError> {
        self.check()?;
        let bits = self.row_bits();
        let rows: u64 = 1u64 << bits;
        let mut t = self.layout();
        let mut digits: Vec<u64> = Vec::with_capacity(self.max_len);
        for len in 1..=self.max_len {
            digits.clear();
            digits.resize(len, 0);
            for i in 0..self.signals.len() {
                t.col_mut(i).resize(len, None);
            }
            t.set_len(len);
            for c in 0..len {
                self.write_row(&mut t, c, 0);
            }
            'space: loop {
                f(&t);
                let mut c = len;
                loop {
                    if c == 0 {
                        break 'space;
                    }
                    c -= 1;
                    digits[c] += 1;
                    if digits[c] < rows {
                        self.write_row(&mut t, c, digits[c]);
                        continue 'space;
                    }
                    digits[c] = 0;
                    self.write_row(&mut t, c, 0);
                }
            }
        }
        Ok(())
    }
}

/// Iterator over a [`TraceSpace`].
#[derive(Debug, Clone)]
pub struct TraceIter {
    space: TraceSpace,
    next: u128,
    total: u128,
}

impl TraceIter {
    pub fn total(&self) -> u128 {
        self.total
    }
}

impl Iterator for TraceIter {
    type Item = Trace;

    fn next(&mut self) -> Option<Trace> {
        if self.next >= self.total {
            return None;
        }
        let t = self.space.trace_at(self.next).ok().flatten();
        self.next += 1;
        t
    }
}

pub fn enumerate_traces(space: &TraceSpace) -> Result<TraceIter, TraceError> {
    let total = space.check()?;
    Ok(TraceIter {
        space: space.clone(),
        next: 0,
        total,
    })
}
