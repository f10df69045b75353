//! Fixed-width `n`-bit sets over `Z_n` with word-parallel cyclic shifts.
//!
//! Bit `i` of word `w` stands for the residue `64 * w + i`. The bits above `n`
//! in the last word are always zero.

/// Number of `u64` words for an `n`-bit set.
#[inline]
pub fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

#[inline]
fn top_mask(n: usize) -> u64 {
    match n % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// `dst |= src << s` truncated to `n` bits (non-cyclic).
fn or_shl(dst: &mut [u64], src: &[u64], s: usize, n: usize) {
    let ws = s / 64;
    let bs = s % 64;
    let len = dst.len();
    for i in (ws..len).rev() {
        let lo = src[i - ws];
        let mut v = lo << bs;
        if bs != 0 && i > ws {
            v |= src[i - ws - 1] >> (64 - bs);
        }
        dst[i] |= v;
    }
    dst[len - 1] &= top_mask(n);
}

/// `dst |= src >> s` (logical, non-cyclic).
fn or_shr(dst: &mut [u64], src: &[u64], s: usize) {
    let ws = s / 64;
    let bs = s % 64;
    let len = dst.len();
    for i in 0..len.saturating_sub(ws) {
        let mut v = src[i + ws] >> bs;
        if bs != 0 && i + ws + 1 < len {
            v |= src[i + ws + 1] << (64 - bs);
        }
        dst[i] |= v;
    }
}

/// `dst |= rotate(src, s)`: residue `r` of `src` lands on `(r + s) mod n`.
/// `dst` and `src` must not alias.
pub fn or_rotated(dst: &mut [u64], src: &[u64], s: usize, n: usize) {
    debug_assert_eq!(dst.len(), src.len());
    let s = s % n;
    if s == 0 {
        for (d, &v) in dst.iter_mut().zip(src) {
            *d |= v;
        }
        return;
    }
    or_shl(dst, src, s, n);
    or_shr(dst, src, n - s);
}

#[inline]
pub fn test_bit(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

#[inline]
pub fn set_bit(words: &mut [u64], i: usize) {
    words[i / 64] |= 1u64 << (i % 64);
}

/// An owned `n`-bit set over `Z_n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ResidueBits {
    n: usize,
    words: Vec<u64>,
}

impl ResidueBits {
    pub fn new(n: usize) -> Self {
        ResidueBits {
            n,
            words: vec![0; words_for(n)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut b = ResidueBits {
            n,
            words: vec![u64::MAX; words_for(n)],
        };
        let last = b.words.len() - 1;
        b.words[last] &= top_mask(n);
        b
    }

    pub fn from_iter(n: usize, items: impl IntoIterator<Item = u64>) -> Self {
        let mut b = ResidueBits::new(n);
        for x in items {
            b.insert((x % n as u64) as usize);
        }
        b
    }

    pub fn width(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        set_bit(&mut self.words, i);
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.n && test_bit(&self.words, i)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.n
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn union_with(&mut self, other: &ResidueBits) {
        for (d, &s) in self.words.iter_mut().zip(&other.words) {
            *d |= s;
        }
    }

    pub fn intersect_with(&mut self, other: &ResidueBits) {
        for (d, &s) in self.words.iter_mut().zip(&other.words) {
            *d &= s;
        }
    }

    /// `self |= other + s`.
    pub fn union_rotated(&mut self, other: &ResidueBits, s: u64) {
        or_rotated(&mut self.words, &other.words, (s % self.n as u64) as usize, self.n);
    }

    /// `{x + s : x ∈ self}`.
    pub fn rotated(&self, s: u64) -> ResidueBits {
        let mut out = ResidueBits::new(self.n);
        out.union_rotated(self, s);
        out
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(wi as u64 * 64 + b)
            })
        })
    }
}

impl std::fmt::Debug for ResidueBits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_rotate(items: &[u64], s: u64, n: u64) -> Vec<u64> {
        let mut v: Vec<u64> = items.iter().map(|&x| (x + s) % n).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    #[test]
    fn rotate_small() {
        let b = ResidueBits::from_iter(5, [0, 4]);
        assert_eq!(b.rotated(1).iter().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(b.rotated(5).iter().collect::<Vec<_>>(), vec![0, 4]);
    }

    #[test]
    fn full_has_n_members() {
        for n in [1usize, 5, 63, 64, 65, 128, 200] {
            assert_eq!(ResidueBits::full(n).len(), n);
        }
    }

    proptest! {
        #[test]
        fn rotation_matches_naive(n in 2u64..300, s in 0u64..600, raw in proptest::collection::vec(0u64..300, 0..40)) {
            let items: Vec<u64> = raw.iter().map(|x| x % n).collect();
            let b = ResidueBits::from_iter(n as usize, items.iter().copied());
            let got: Vec<u64> = b.rotated(s).iter().collect();
            prop_assert_eq!(got, naive_rotate(&items, s, n));
        }
    }
}
