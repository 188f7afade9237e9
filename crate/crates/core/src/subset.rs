//! Atom subsets: sorted index lists at the API boundary, bitmasks inside
//! exhaustive scans.

use std::cmp::Ordering;

/// Bitmask over at most 64 atoms.
pub type Mask = u64;

pub fn mask_of(subset: &[usize]) -> Mask {
    subset.iter().fold(0, |m, &x| m | (1 << x))
}

pub fn members(mask: Mask) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut m = mask;
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

/// Maps a mask over positions `0..sub.len()` back to atom indices.
pub fn members_in(mask: Mask, sub: &[usize]) -> Vec<usize> {
    members(mask).into_iter().map(|i| sub[i]).collect()
}

pub fn full_mask(n: usize) -> Mask {
    if n == 64 {
        !0
    } else {
        (1 << n) - 1
    }
}

/// Sorted, deduplicated copy of a subset.
pub fn normalized(subset: &[usize]) -> Vec<usize> {
    let mut v = subset.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

pub fn complement(n: usize, subset: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; n];
    for &x in subset {
        inside[x] = true;
    }
    (0..n).filter(|&x| !inside[x]).collect()
}

/// Lexicographic order on the sorted index lists of two masks.
pub fn lex_cmp(a: Mask, b: Mask) -> Ordering {
    let (mut a, mut b) = (a, b);
    loop {
        match (a == 0, b == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (ia, ib) = (a.trailing_zeros(), b.trailing_zeros());
        if ia != ib {
            return ia.cmp(&ib);
        }
        a &= a - 1;
        b &= b - 1;
    }
}

/// Running minimum with relative-tolerance ties broken by the
/// lexicographically smallest subset.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ArgMin {
    pub value: f64,
    pub mask: Mask,
    pub found: bool,
}

impl ArgMin {
    pub fn new() -> Self {
        Self { value: f64::INFINITY, mask: 0, found: false }
    }

    pub fn offer(&mut self, value: f64, mask: Mask) {
        if !self.found {
            *self = Self { value, mask, found: true };
            return;
        }
        let slack = crate::tol::TIE_REL * value.abs().max(self.value.abs());
        if value < self.value - slack {
            *self = Self { value, mask, found: true };
        } else if value <= self.value + slack && lex_cmp(mask, self.mask) == Ordering::Less {
            self.mask = mask;
            self.value = self.value.min(value);
        }
    }

    pub fn merge(&mut self, other: ArgMin) {
        if other.found {
            self.offer(other.value, other.mask);
        }
    }
}

/// Running maximum, ties broken by the lexicographically smallest pair.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ArgMax {
    pub value: f64,
    pub a: Mask,
    pub c: Mask,
}

impl ArgMax {
    pub fn new() -> Self {
        Self { value: 0.0, a: 0, c: 0 }
    }

    pub fn offer(&mut self, value: f64, a: Mask, c: Mask) {
        let slack = crate::tol::TIE_REL * value.abs().max(self.value.abs());
        if value > self.value + slack {
            *self = Self { value, a, c };
        } else if value >= self.value - slack {
            let order = lex_cmp(a, self.a).then(lex_cmp(c, self.c));
            if order == Ordering::Less {
                self.a = a;
                self.c = c;
                self.value = self.value.max(value);
            }
        }
    }
}

/// Splits `0..count` into fixed-size chunks, runs `scan(start, end)` on
/// each (in parallel when there are many) and returns the results in chunk
/// order, so sequential folding stays independent of the thread count.
pub(crate) fn chunked<R: Send>(count: u64, scan: impl Fn(u64, u64) -> R + Sync) -> Vec<R> {
    use rayon::prelude::*;
    const CHUNK: u64 = 1 << 12;
    let chunks = count.div_ceil(CHUNK);
    let run = |c: u64| scan(c * CHUNK, ((c + 1) * CHUNK).min(count));
    if chunks > 4 {
        (0..chunks).into_par_iter().map(run).collect()
    } else {
        (0..chunks).map(run).collect()
    }
}

/// Gray code of `i`; consecutive codes differ in bit `(i+1).trailing_zeros()`.
pub(crate) fn gray(i: u64) -> Mask {
    i ^ (i >> 1)
}
