// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};
use std::fmt;

/// Half-open word interval `[beg, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub beg: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(beg: usize, end: usize) -> Self {
        Span { beg, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.beg)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.beg
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.beg <= idx && idx < self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.beg < other.end && other.beg < self.end
    }

    pub fn is_within(&self, outer: &Span) -> bool {
        outer.beg <= self.beg && self.end <= outer.end
    }

    pub fn iter(&self) -> std::ops::Range<usize> {
        self.beg..self.end
    }
}

impl From<[usize; 2]> for Span {
    fn from(v: [usize; 2]) -> Self {
        Span::new(v[0], v[1])
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.beg, s.end]
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.beg, self.end)
    }
}
