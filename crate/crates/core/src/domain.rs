//! Integer finite domains, the variable store and the trail.
//!
//! A [`FiniteDomain`] is an interval `[min, max]` plus a bitset marking holes.
//! Bits outside the current bounds are meaningless, which makes bound
//! tightening a matter of moving `min`/`max` and counting the dropped bits.
//!
//! The [`DomainStore`] owns every domain together with a [`Trail`] of undo
//! records. Levels are opened with [`DomainStore::push_level`] and undone with
//! [`DomainStore::restore_to`]; nothing is trailed at level 0, so root changes
//! are permanent.

use std::fmt;

/// Integer value held by a domain.
pub type Value = i64;

/// Dense identifier of a decision variable.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(u32);

impl VarId {
    pub fn new(index: usize) -> Self {
        VarId(u32::try_from(index).expect("variable index overflows u32"))
    }

    pub const fn from_u32(index: u32) -> Self {
        VarId(index)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Result of a single domain update.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ChangeOutcome {
    Unchanged,
    Shrunk,
    /// The update would empty the domain. The store is left untouched.
    WouldEmpty,
}

impl ChangeOutcome {
    #[inline]
    pub fn is_failure(self) -> bool {
        self == ChangeOutcome::WouldEmpty
    }
}

/// A non-empty set of integers stored as bounds plus a hole bitset.
#[derive(Clone, Debug)]
pub struct FiniteDomain {
    base: Value,
    words: Vec<u64>,
    min: Value,
    max: Value,
    size: u64,
}

impl FiniteDomain {
    /// The interval `lo..=hi`. Panics if `lo > hi`.
    pub fn interval(lo: Value, hi: Value) -> Self {
        assert!(lo <= hi, "empty interval {lo}..={hi}");
        let span = (hi - lo + 1) as usize;
        let mut words = vec![u64::MAX; span.div_ceil(64)];
        let tail = span % 64;
        if tail != 0 {
            *words.last_mut().unwrap() = (1u64 << tail) - 1;
        }
        FiniteDomain {
            base: lo,
            words,
            min: lo,
            max: hi,
            size: span as u64,
        }
    }

    /// Domain holding exactly the given values. Returns `None` when empty.
    pub fn from_values<I: IntoIterator<Item = Value>>(values: I) -> Option<Self> {
        let mut vals: Vec<Value> = values.into_iter().collect();
        vals.sort_unstable();
        vals.dedup();
        let (&lo, &hi) = (vals.first()?, vals.last()?);
        let span = (hi - lo + 1) as usize;
        let mut words = vec![0u64; span.div_ceil(64)];
        for v in &vals {
            let off = (v - lo) as usize;
            words[off / 64] |= 1 << (off % 64);
        }
        Some(FiniteDomain {
            base: lo,
            words,
            min: lo,
            max: hi,
            size: vals.len() as u64,
        })
    }

    #[inline]
    pub fn min(&self) -> Value {
        self.min
    }

    #[inline]
    pub fn max(&self) -> Value {
        self.max
    }

    #[inline]
    pub fn size(&self) -> u64 {
        self.size
    }

    #[inline]
    pub fn is_fixed(&self) -> bool {
        self.size == 1
    }

    /// The assigned value of a singleton domain.
    #[inline]
    pub fn value(&self) -> Option<Value> {
        self.is_fixed().then_some(self.min)
    }

    #[inline]
    fn bit(&self, v: Value) -> bool {
        let off = (v - self.base) as usize;
        self.words[off / 64] >> (off % 64) & 1 == 1
    }

    #[inline]
    pub fn contains(&self, v: Value) -> bool {
        v >= self.min && v <= self.max && self.bit(v)
    }

    /// Values in ascending order.
    pub fn values(&self) -> impl Iterator<Item = Value> + '_ {
        let mut next = Some(self.min);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur >= self.max {
                None
            } else {
                self.next_member(cur + 1)
            };
            Some(cur)
        })
    }

    /// Smallest member `>= v` (within the current bounds).
    fn next_member(&self, v: Value) -> Option<Value> {
        if v > self.max {
            return None;
        }
        let v = v.max(self.min);
        let mut off = (v - self.base) as usize;
        let end = (self.max - self.base) as usize;
        let mut w = off / 64;
        let mut word = self.words[w] & (u64::MAX << (off % 64));
        loop {
            if word != 0 {
                off = w * 64 + word.trailing_zeros() as usize;
                return (off <= end).then(|| self.base + off as Value);
            }
            w += 1;
            if w * 64 > end {
                return None;
            }
            word = self.words[w];
        }
    }

    /// Largest member `<= v` (within the current bounds).
    fn prev_member(&self, v: Value) -> Option<Value> {
        if v < self.min {
            return None;
        }
        let v = v.min(self.max);
        let off = (v - self.base) as usize;
        let start = (self.min - self.base) as usize;
        let mut w = off / 64;
        let shift = 63 - (off % 64);
        let mut word = (self.words[w] << shift) >> shift;
        loop {
            if word != 0 {
                let found = w * 64 + 63 - word.leading_zeros() as usize;
                return (found >= start).then(|| self.base + found as Value);
            }
            if w == 0 || w * 64 <= start {
                return None;
            }
            w -= 1;
            word = self.words[w];
        }
    }

    /// Number of members in `lo..=hi` (clamped to the current bounds).
    fn count_range(&self, lo: Value, hi: Value) -> u64 {
        let lo = lo.max(self.min);
        let hi = hi.min(self.max);
        if lo > hi {
            return 0;
        }
        let a = (lo - self.base) as usize;
        let b = (hi - self.base) as usize;
        let (wa, wb) = (a / 64, b / 64);
        let low_mask = u64::MAX << (a % 64);
        let high_mask = u64::MAX >> (63 - b % 64);
        if wa == wb {
            return (self.words[wa] & low_mask & high_mask).count_ones() as u64;
        }
        let mut n = (self.words[wa] & low_mask).count_ones() as u64;
        n += self.words[wa + 1..wb]
            .iter()
            .map(|w| w.count_ones() as u64)
            .sum::<u64>();
        n + (self.words[wb] & high_mask).count_ones() as u64
    }
}

impl PartialEq for FiniteDomain {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.values().eq(other.values())
    }
}

impl Eq for FiniteDomain {}

impl fmt::Display for FiniteDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.size == (self.max - self.min + 1) as u64 {
            return write!(f, "{}..{}", self.min, self.max);
        }
        write!(f, "{{")?;
        for (i, v) in self.values().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Debug)]
enum UndoRecord {
    Bounds {
        var: VarId,
        min: Value,
        max: Value,
        size: u64,
    },
    Word {
        var: VarId,
        index: usize,
        bits: u64,
    },
}

/// Stack of undo records, grouped by level.
#[derive(Clone, Debug, Default)]
pub struct Trail {
    entries: Vec<UndoRecord>,
    marks: Vec<usize>,
}

impl Trail {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// All variable domains plus the machinery to undo changes.
#[derive(Clone, Debug)]
pub struct DomainStore {
    domains: Vec<FiniteDomain>,
    trail: Trail,
    // Bounds are saved at most once per var per level; a stamp equal to the
    // current epoch means the var's bounds are already on the trail.
    stamps: Vec<u64>,
    epochs: Vec<u64>,
    next_epoch: u64,
    touched: Vec<VarId>,
    touched_flag: Vec<bool>,
    pending: Vec<VarId>,
    pending_flag: Vec<bool>,
}

impl DomainStore {
    pub fn new(domains: Vec<FiniteDomain>) -> Self {
        let n = domains.len();
        DomainStore {
            domains,
            trail: Trail::default(),
            stamps: vec![0; n],
            epochs: vec![0],
            next_epoch: 1,
            touched: Vec::new(),
            touched_flag: vec![false; n],
            pending: Vec::new(),
            pending_flag: vec![false; n],
        }
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    #[inline]
    pub fn domain(&self, x: VarId) -> &FiniteDomain {
        &self.domains[x.index()]
    }

    pub fn domains(&self) -> &[FiniteDomain] {
        &self.domains
    }

    #[inline]
    pub fn min(&self, x: VarId) -> Value {
        self.domains[x.index()].min
    }

    #[inline]
    pub fn max(&self, x: VarId) -> Value {
        self.domains[x.index()].max
    }

    #[inline]
    pub fn size(&self, x: VarId) -> u64 {
        self.domains[x.index()].size
    }

    #[inline]
    pub fn is_fixed(&self, x: VarId) -> bool {
        self.domains[x.index()].size == 1
    }

    #[inline]
    pub fn contains(&self, x: VarId, v: Value) -> bool {
        self.domains[x.index()].contains(v)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> {
        (0..self.domains.len()).map(VarId::new)
    }

    pub fn all_fixed(&self) -> bool {
        self.domains.iter().all(FiniteDomain::is_fixed)
    }

    /// Current decision level; 0 is the root.
    #[inline]
    pub fn level(&self) -> usize {
        self.epochs.len() - 1
    }

    pub fn trail(&self) -> &Trail {
        &self.trail
    }

    /// Opens a new level and returns its number.
    pub fn push_level(&mut self) -> usize {
        self.trail.marks.push(self.trail.entries.len());
        self.epochs.push(self.next_epoch);
        self.next_epoch += 1;
        self.level()
    }

    /// Undoes every change made since `push_level` returned `level`; the store
    /// ends up at `level - 1`.
    pub fn restore_to(&mut self, level: usize) {
        assert!(
            level >= 1 && level <= self.level(),
            "cannot restore to level {level} from {}",
            self.level()
        );
        let mark = self.trail.marks[level - 1];
        while self.trail.entries.len() > mark {
            match self.trail.entries.pop().unwrap() {
                UndoRecord::Bounds {
                    var,
                    min,
                    max,
                    size,
                } => {
                    let d = &mut self.domains[var.index()];
                    d.min = min;
                    d.max = max;
                    d.size = size;
                }
                UndoRecord::Word { var, index, bits } => {
                    self.domains[var.index()].words[index] = bits;
                }
            }
        }
        self.trail.marks.truncate(level - 1);
        self.epochs.truncate(level);
        // Propagation bookkeeping refers to the abandoned state.
        self.clear_pending();
    }

    fn save_bounds(&mut self, x: VarId) {
        if self.epochs.len() == 1 {
            return;
        }
        let epoch = *self.epochs.last().unwrap();
        if self.stamps[x.index()] == epoch {
            return;
        }
        self.stamps[x.index()] = epoch;
        let d = &self.domains[x.index()];
        self.trail.entries.push(UndoRecord::Bounds {
            var: x,
            min: d.min,
            max: d.max,
            size: d.size,
        });
    }

    fn note_change(&mut self, x: VarId) {
        let i = x.index();
        if !self.touched_flag[i] {
            self.touched_flag[i] = true;
            self.touched.push(x);
        }
        if !self.pending_flag[i] {
            self.pending_flag[i] = true;
            self.pending.push(x);
        }
    }

    /// Removes `v` from `D(x)`.
    pub fn remove_value(&mut self, x: VarId, v: Value) -> ChangeOutcome {
        let d = &self.domains[x.index()];
        if !d.contains(v) {
            return ChangeOutcome::Unchanged;
        }
        if d.size == 1 {
            return ChangeOutcome::WouldEmpty;
        }
        if v == d.min {
            return self.tighten_min(x, v + 1);
        }
        if v == d.max {
            return self.tighten_max(x, v - 1);
        }
        let off = (v - d.base) as usize;
        let (index, bits) = (off / 64, d.words[off / 64]);
        self.save_bounds(x);
        if self.epochs.len() > 1 {
            self.trail.entries.push(UndoRecord::Word {
                var: x,
                index,
                bits,
            });
        }
        let d = &mut self.domains[x.index()];
        d.words[index] = bits & !(1u64 << (off % 64));
        d.size -= 1;
        self.note_change(x);
        ChangeOutcome::Shrunk
    }

    /// Reduces `D(x)` to `{v}`.
    pub fn assign(&mut self, x: VarId, v: Value) -> ChangeOutcome {
        let d = &self.domains[x.index()];
        if !d.contains(v) {
            return ChangeOutcome::WouldEmpty;
        }
        if d.size == 1 {
            return ChangeOutcome::Unchanged;
        }
        self.save_bounds(x);
        let d = &mut self.domains[x.index()];
        d.min = v;
        d.max = v;
        d.size = 1;
        self.note_change(x);
        ChangeOutcome::Shrunk
    }

    /// Removes every value below `lb`.
    pub fn tighten_min(&mut self, x: VarId, lb: Value) -> ChangeOutcome {
        let d = &self.domains[x.index()];
        if lb <= d.min {
            return ChangeOutcome::Unchanged;
        }
        if lb > d.max {
            return ChangeOutcome::WouldEmpty;
        }
        let new_min = d.next_member(lb).expect("max is a member");
        let dropped = d.count_range(d.min, new_min - 1);
        self.save_bounds(x);
        let d = &mut self.domains[x.index()];
        d.min = new_min;
        d.size -= dropped;
        self.note_change(x);
        ChangeOutcome::Shrunk
    }

    /// Removes every value above `ub`.
    pub fn tighten_max(&mut self, x: VarId, ub: Value) -> ChangeOutcome {
        let d = &self.domains[x.index()];
        if ub >= d.max {
            return ChangeOutcome::Unchanged;
        }
        if ub < d.min {
            return ChangeOutcome::WouldEmpty;
        }
        let new_max = d.prev_member(ub).expect("min is a member");
        let dropped = d.count_range(new_max + 1, d.max);
        self.save_bounds(x);
        let d = &mut self.domains[x.index()];
        d.max = new_max;
        d.size -= dropped;
        self.note_change(x);
        ChangeOutcome::Shrunk
    }

    /// `ln S(P)` where `S(P)` is the product of all domain sizes.
    pub fn search_space_log_size(&self) -> f64 {
        self.domains.iter().map(|d| (d.size as f64).ln()).sum()
    }

    /// Variables shrunk since the last [`clear_touched`](Self::clear_touched),
    /// in first-change order.
    pub fn touched(&self) -> &[VarId] {
        &self.touched
    }

    pub fn clear_touched(&mut self) {
        for x in self.touched.drain(..) {
            self.touched_flag[x.index()] = false;
        }
    }

    /// Drains the variables changed since the previous drain. Used by the
    /// propagation engine to schedule watchers.
    pub(crate) fn drain_pending(&mut self, out: &mut Vec<VarId>) {
        for &x in &self.pending {
            self.pending_flag[x.index()] = false;
        }
        out.append(&mut self.pending);
    }

    pub(crate) fn clear_pending(&mut self) {
        for x in self.pending.drain(..) {
            self.pending_flag[x.index()] = false;
        }
    }

    /// Values of every domain, for diagnostics and tests.
    pub fn snapshot(&self) -> Vec<Vec<Value>> {
        self.domains.iter().map(|d| d.values().collect()).collect()
    }

    /// Assigned values when every variable is fixed.
    pub fn assignment(&self) -> Option<Vec<Value>> {
        self.domains.iter().map(FiniteDomain::value).collect()
    }
}
