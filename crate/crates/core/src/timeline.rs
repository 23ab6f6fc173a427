use serde::{Deserialize, Serialize};

/// Half-open busy interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: u32,
    pub end: u32,
}

impl Interval {
    pub fn new(start: u32, end: u32) -> Self {
        Interval { start, end }
    }

    pub fn len(&self) -> u32 {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Half-open overlap test; touching intervals do not overlap.
#[inline]
pub fn overlaps(a: &Interval, b: &Interval) -> bool {
    a.start < b.end && b.start < a.end
}

/// Busy periods of one unary resource, sorted by start and pairwise disjoint.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Timeline {
    intervals: Vec<Interval>,
}

impl Timeline {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// End of the last busy interval, 0 when idle.
    pub fn horizon(&self) -> u32 {
        self.intervals.last().map_or(0, |iv| iv.end)
    }

    /// Index of the first interval ending after `t`.
    #[inline]
    fn first_ending_after(&self, t: u32) -> usize {
        self.intervals.partition_point(|iv| iv.end <= t)
    }

    /// Earliest `t >= from` with `[t, t + len)` idle, filling gaps.
    pub fn earliest_fit(&self, from: u32, len: u32) -> u32 {
        let mut t = from;
        let mut i = self.first_ending_after(t);
        while let Some(iv) = self.intervals.get(i) {
            if iv.start >= t + len {
                break;
            }
            t = t.max(iv.end);
            i += 1;
        }
        t
    }

    /// First busy interval overlapping `query`, if any.
    pub fn conflict(&self, query: Interval) -> Option<Interval> {
        let i = self.first_ending_after(query.start);
        self.intervals
            .get(i)
            .copied()
            .filter(|iv| overlaps(iv, &query))
    }

    pub fn insert(&mut self, iv: Interval) -> Result<(), Interval> {
        if let Some(busy) = self.conflict(iv) {
            return Err(busy);
        }
        self.insert_unchecked(iv);
        Ok(())
    }

    /// Inserts keeping start order without checking disjointness; used when
    /// rebuilding possibly-invalid schedules for validation.
    pub(crate) fn insert_unchecked(&mut self, iv: Interval) {
        let at = self.intervals.partition_point(|x| x.start <= iv.start);
        self.intervals.insert(at, iv);
    }

    pub fn remove(&mut self, iv: Interval) -> bool {
        match self.intervals.iter().position(|x| *x == iv) {
            Some(i) => {
                self.intervals.remove(i);
                true
            }
            None => false,
        }
    }

    /// Total busy time within `[from, until)`.
    pub fn busy_between(&self, from: u32, until: u32) -> u32 {
        self.intervals
            .iter()
            .map(|iv| iv.end.min(until).saturating_sub(iv.start.max(from)))
            .sum()
    }

    /// Earliest time by which `work` units of idle time have accumulated
    /// after `from`.
    pub(crate) fn fill_idle(&self, from: u32, work: u32) -> u32 {
        let mut t = from;
        let mut remaining = work;
        for iv in &self.intervals[self.first_ending_after(from)..] {
            let start = iv.start.max(t);
            let idle = start - t;
            if idle >= remaining {
                return t + remaining;
            }
            remaining -= idle;
            t = iv.end.max(t);
        }
        t + remaining
    }
}

/// Earliest `t >= from` at which `[t, t + len)` is idle on every timeline.
pub fn earliest_common_fit(timelines: &[&Timeline], from: u32, len: u32) -> u32 {
    let mut t = from;
    loop {
        let next = timelines
            .iter()
            .fold(t, |acc, tl| tl.earliest_fit(acc, len));
        // No timeline moved the candidate, so all of them accept it.
        if next == t {
            return t;
        }
        t = next;
    }
}
