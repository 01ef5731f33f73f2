//! Source subsets as bitmasks over dense source indices.
//!
//! A subset is a `u64` bitmask, which caps a dataset at 64 sources. The
//! enumeration helpers fix the order used by the inclusion–exclusion sums:
//! increasing subset size, then increasing bitmask value, so floating-point
//! summation order is identical on every run.

use std::fmt;

/// Set of sources, one bit per dense source index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SourceSubset(u64);

/// Hard limit imposed by the bitmask representation.
pub const MAX_SOURCES: usize = 64;

impl SourceSubset {
    pub const EMPTY: SourceSubset = SourceSubset(0);

    pub fn from_bits(bits: u64) -> Self {
        SourceSubset(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(index: usize) -> Self {
        debug_assert!(index < MAX_SOURCES);
        SourceSubset(1 << index)
    }

    /// All sources `0..n`.
    pub fn all(n: usize) -> Self {
        debug_assert!(n <= MAX_SOURCES);
        if n == MAX_SOURCES {
            SourceSubset(u64::MAX)
        } else {
            SourceSubset((1u64 << n) - 1)
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut bits = 0u64;
        for i in indices {
            debug_assert!(i < MAX_SOURCES);
            bits |= 1 << i;
        }
        SourceSubset(bits)
    }

    pub fn contains(self, index: usize) -> bool {
        index < MAX_SOURCES && self.0 & (1 << index) != 0
    }

    pub fn insert(&mut self, index: usize) {
        debug_assert!(index < MAX_SOURCES);
        self.0 |= 1 << index;
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        SourceSubset(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        SourceSubset(self.0 & other.0)
    }

    /// Elements of `self` that are not in `other`.
    pub fn difference(self, other: Self) -> Self {
        SourceSubset(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Iterator over member indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }
}

impl fmt::Debug for SourceSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// All subsets of `base` with exactly `size` members, in increasing bitmask
/// order.
///
/// Uses Gosper's hack on a compact word of `base.len()` bits, expanding each
/// combination back onto the member positions of `base`; the expansion is
/// monotone, so compact-word order is bitmask order.
pub fn combinations(base: SourceSubset, size: usize) -> Combinations {
    let positions: Vec<u8> = base.iter().map(|i| i as u8).collect();
    let k = positions.len();
    let current = if size > k {
        None
    } else if size == 0 {
        Some(0u64)
    } else {
        Some((1u64 << size) - 1)
    };
    Combinations {
        positions,
        size,
        current,
    }
}

/// All subsets of `base`, enumerated by increasing size then increasing
/// bitmask value.
pub fn subsets_by_size(base: SourceSubset) -> impl Iterator<Item = SourceSubset> {
    (0..=base.len()).flat_map(move |l| combinations(base, l))
}

pub struct Combinations {
    positions: Vec<u8>,
    size: usize,
    current: Option<u64>,
}

impl Iterator for Combinations {
    type Item = SourceSubset;

    fn next(&mut self) -> Option<SourceSubset> {
        let compact = self.current?;
        let mut expanded = 0u64;
        let mut bits = compact;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            expanded |= 1 << self.positions[j];
        }
        // Advance with Gosper's hack; stop once the combination no longer
        // fits in the compact width.
        self.current = if self.size == 0 || compact == 0 {
            None
        } else {
            let c = compact & compact.wrapping_neg();
            let r = compact + c;
            let next = (((r ^ compact) >> 2) / c) | r;
            if self.positions.len() == 64 || next < (1u64 << self.positions.len()) {
                Some(next)
            } else {
                None
            }
        };
        Some(SourceSubset::from_bits(expanded))
    }
}
