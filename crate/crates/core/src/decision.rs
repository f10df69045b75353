//! Exact decision procedures for weighted Davenport and Erdős Z-sequences.
//!
//! Reachable residues are kept as `n`-bit sets; taking weight `a` on entry
//! `x_i` is a cyclic rotation by `a·x_i`. The table forms keep every layer so
//! one witness can be read back; the `is_*` forms keep a single rolling layer
//! and stop as soon as the answer is known.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::{self, ResidueBits};
use crate::error::{Error, Result};
use crate::group::{divisors, gcd, Modulus, WeightSet, WitnessVector, ZnSequence};

/// Largest table the witness-producing DPs will allocate, in bits.
pub const TABLE_BIT_LIMIT: u128 = 1 << 34;

/// Largest coefficient space brute force will walk.
pub const BRUTE_FORCE_LIMIT: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZKind {
    Davenport,
    Erdos,
}

impl fmt::Display for ZKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZKind::Davenport => "davenport",
            ZKind::Erdos => "erdos",
        })
    }
}

impl FromStr for ZKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "davenport" => Ok(ZKind::Davenport),
            "erdos" => Ok(ZKind::Erdos),
            other => Err(Error::InvalidInput(format!("unknown kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub is_z_sequence: bool,
    pub witness: Option<WitnessVector>,
}

impl DecisionOutcome {
    fn no() -> Self {
        DecisionOutcome {
            is_z_sequence: false,
            witness: None,
        }
    }

    fn yes(witness: WitnessVector) -> Self {
        DecisionOutcome {
            is_z_sequence: true,
            witness: Some(witness),
        }
    }
}

/// Per-entry transitions: `(weight, a·x_i mod n)` in ascending weight order.
fn weighted_shifts(x: &ZnSequence, weights: &[u64]) -> Vec<Vec<(u64, u64)>> {
    let n = x.modulus();
    x.entries()
        .iter()
        .map(|&xi| weights.iter().map(|&a| (a, n.mul(a, xi))).collect())
        .collect()
}

/// Distinct shifts only, for the forward passes.
fn distinct_shifts(row: &[(u64, u64)]) -> Vec<u64> {
    let mut s: Vec<u64> = row.iter().map(|&(_, s)| s).collect();
    s.sort_unstable();
    s.dedup();
    s
}

fn check_modulus(x: &ZnSequence, a: &WeightSet) -> Result<()> {
    if x.modulus() != a.modulus() {
        return Err(Error::ModulusMismatch {
            left: x.modulus().get(),
            right: a.modulus().get(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Layer {
    /// Support count of `sets[0]` (Erdős); always 0 for Davenport.
    lo: usize,
    sets: Vec<ResidueBits>,
}

impl Layer {
    fn get(&self, c: usize) -> Option<&ResidueBits> {
        c.checked_sub(self.lo).and_then(|i| self.sets.get(i))
    }
}

/// Layered reachable-state table for one sequence.
///
/// Davenport layers hold the residues reachable by a nonempty selection of the
/// prefix (the empty selection is the implicit state `(0, unused)`). Erdős
/// layers hold, per support count, the reachable residues; only the counts
/// that can still end at exactly `n` are kept.
#[derive(Debug, Clone)]
pub struct ReachabilityTable {
    kind: ZKind,
    n: Modulus,
    layers: Vec<Layer>,
}

impl ReachabilityTable {
    pub fn kind(&self) -> ZKind {
        self.kind
    }

    /// Number of prefix layers built (`m + 1` unless the Davenport pass stopped early).
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Reachable residues after `i` entries with support `count`.
    pub fn reachable(&self, i: usize, count: usize) -> Option<&ResidueBits> {
        self.layers.get(i).and_then(|l| l.get(count))
    }

    pub fn modulus(&self) -> Modulus {
        self.n
    }
}

fn davenport_table(x: &ZnSequence, weights: &[u64]) -> Result<(ReachabilityTable, Option<usize>)> {
    let n = x.modulus();
    let size = n.size();
    let m = x.len();
    let bits = (m as u128 + 1) * size as u128;
    if bits > TABLE_BIT_LIMIT {
        return Err(Error::GuardExceeded(format!("Davenport table needs {bits} bits")));
    }
    let shifts = weighted_shifts(x, weights);
    let mut layers = vec![Layer {
        lo: 0,
        sets: vec![ResidueBits::new(size)],
    }];
    let mut hit = None;
    for (i, row) in shifts.iter().enumerate() {
        let prev = &layers[i].sets[0];
        let mut next = prev.clone();
        for s in distinct_shifts(row) {
            next.union_rotated(prev, s);
            next.insert(s as usize);
        }
        let done = next.contains(0);
        layers.push(Layer {
            lo: 0,
            sets: vec![next],
        });
        if done {
            hit = Some(i + 1);
            break;
        }
    }
    Ok((
        ReachabilityTable {
            kind: ZKind::Davenport,
            n,
            layers,
        },
        hit,
    ))
}

/// Support counts that can still finish at exactly `n` after `i` of `m` entries.
fn erdos_window(i: usize, m: usize, n: usize) -> (usize, usize) {
    let lo = n.saturating_sub(m - i);
    let hi = i.min(n);
    (lo, hi)
}

fn erdos_table(x: &ZnSequence, weights: &[u64]) -> Result<ReachabilityTable> {
    let n = x.modulus();
    let size = n.size();
    let m = x.len();
    let width = (m - size).min(size) as u128 + 1;
    let bits = (m as u128 + 1) * width * size as u128;
    if bits > TABLE_BIT_LIMIT {
        return Err(Error::GuardExceeded(format!("Erdős table needs {bits} bits")));
    }
    let shifts = weighted_shifts(x, weights);
    let mut first = ResidueBits::new(size);
    first.insert(0);
    let mut layers = vec![Layer {
        lo: 0,
        sets: vec![first],
    }];
    for (i, row) in shifts.iter().enumerate() {
        let row = distinct_shifts(row);
        let (lo, hi) = erdos_window(i + 1, m, size);
        let prev = &layers[i];
        let mut sets = Vec::with_capacity(hi + 1 - lo);
        for c in lo..=hi {
            let mut cur = prev.get(c).cloned().unwrap_or_else(|| ResidueBits::new(size));
            if let Some(below) = c.checked_sub(1).and_then(|c1| prev.get(c1)) {
                for &s in &row {
                    cur.union_rotated(below, s);
                }
            }
            sets.push(cur);
        }
        layers.push(Layer { lo, sets });
    }
    Ok(ReachabilityTable {
        kind: ZKind::Erdos,
        n,
        layers,
    })
}

/// Decides whether `x` is an `A`-weighted Davenport Z-sequence and returns a
/// witness when it is.
///
/// Witness readback prefers coefficient 0 at each index, then the smallest
/// weight, walking from the last needed index down to the first.
pub fn decide_davenport(x: &ZnSequence, a: &WeightSet) -> Result<DecisionOutcome> {
    check_modulus(x, a)?;
    let weights = a.members()?;
    let (table, hit) = davenport_table(x, weights)?;
    let Some(end) = hit else {
        return Ok(DecisionOutcome::no());
    };
    let n = x.modulus();
    let mut coeffs = vec![0u64; x.len()];
    let mut r = 0u64;
    let mut i = end;
    'walk: while i > 0 {
        let prev = &table.layers[i - 1].sets[0];
        if prev.contains(r as usize) {
            i -= 1;
            continue;
        }
        let xi = x.entries()[i - 1];
        for &w in weights {
            let s = n.mul(w, xi);
            if s == r {
                coeffs[i - 1] = w;
                break 'walk;
            }
            let back = n.sub(r, s);
            if prev.contains(back as usize) {
                coeffs[i - 1] = w;
                r = back;
                i -= 1;
                continue 'walk;
            }
        }
        unreachable!("reachable state without predecessor");
    }
    Ok(DecisionOutcome::yes(WitnessVector::new(coeffs)))
}

/// Decides whether `x` is an `A`-weighted Erdős Z-sequence (exactly `n`
/// nonzero coefficients) and returns a witness when it is.
pub fn decide_erdos(x: &ZnSequence, a: &WeightSet) -> Result<DecisionOutcome> {
    check_modulus(x, a)?;
    let weights = a.members()?;
    let n = x.modulus();
    let size = n.size();
    let m = x.len();
    if m < size {
        return Ok(DecisionOutcome::no());
    }
    let table = erdos_table(x, weights)?;
    if !table.layers[m].get(size).is_some_and(|s| s.contains(0)) {
        return Ok(DecisionOutcome::no());
    }
    let mut coeffs = vec![0u64; m];
    let (mut r, mut c) = (0u64, size);
    for i in (1..=m).rev() {
        let prev = &table.layers[i - 1];
        if prev.get(c).is_some_and(|s| s.contains(r as usize)) {
            continue;
        }
        let below = prev.get(c - 1).expect("window covers predecessor");
        let xi = x.entries()[i - 1];
        let w = weights
            .iter()
            .copied()
            .find(|&w| below.contains(n.sub(r, n.mul(w, xi)) as usize))
            .expect("reachable state without predecessor");
        coeffs[i - 1] = w;
        r = n.sub(r, n.mul(w, xi));
        c -= 1;
    }
    debug_assert_eq!((r, c), (0, 0));
    Ok(DecisionOutcome::yes(WitnessVector::new(coeffs)))
}

pub fn decide(x: &ZnSequence, a: &WeightSet, kind: ZKind) -> Result<DecisionOutcome> {
    match kind {
        ZKind::Davenport => decide_davenport(x, a),
        ZKind::Erdos => decide_erdos(x, a),
    }
}

/// Existence-only Davenport check with a single rolling layer.
///
/// Units weight sets go through [`UnitsDavenportKernel`], which is exact and
/// does not need the weights materialized.
pub fn is_davenport_z(x: &ZnSequence, a: &WeightSet) -> Result<bool> {
    check_modulus(x, a)?;
    if matches!(a.kind(), crate::group::WeightKind::Units) {
        return UnitsDavenportKernel::new(x.modulus())?.is_z(x);
    }
    let weights = a.members()?;
    let n = x.modulus();
    let size = n.size();
    let mut reach = ResidueBits::new(size);
    let mut scratch = ResidueBits::new(size);
    for &xi in x.entries() {
        scratch.clone_from(&reach);
        for &w in weights {
            let s = n.mul(w, xi);
            scratch.union_rotated(&reach, s);
            scratch.insert(s as usize);
        }
        std::mem::swap(&mut reach, &mut scratch);
        if reach.contains(0) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Existence-only Erdős check keeping one windowed layer.
pub fn is_erdos_z(x: &ZnSequence, a: &WeightSet) -> Result<bool> {
    check_modulus(x, a)?;
    let weights = a.members()?;
    let n = x.modulus();
    let size = n.size();
    let m = x.len();
    if m < size {
        return Ok(false);
    }
    let words = bits::words_for(size);
    let mut lo = 0usize;
    let mut cur: Vec<u64> = vec![0; words];
    bits::set_bit(&mut cur, 0);
    let mut next: Vec<u64> = Vec::new();
    let mut shifts: Vec<u64> = Vec::with_capacity(weights.len());
    for (i, &xi) in x.entries().iter().enumerate() {
        shifts.clear();
        shifts.extend(weights.iter().map(|&w| n.mul(w, xi)));
        shifts.sort_unstable();
        shifts.dedup();
        let (nlo, nhi) = erdos_window(i + 1, m, size);
        let prev_hi = lo + cur.len() / words - 1;
        next.clear();
        next.resize((nhi + 1 - nlo) * words, 0);
        for c in nlo..=nhi {
            let dst = &mut next[(c - nlo) * words..(c - nlo + 1) * words];
            if c >= lo && c <= prev_hi {
                let src = &cur[(c - lo) * words..(c - lo + 1) * words];
                dst.copy_from_slice(src);
            }
            if c >= 1 && c > lo && c - 1 <= prev_hi {
                let src = &cur[(c - 1 - lo) * words..(c - lo) * words];
                for &s in &shifts {
                    bits::or_rotated(dst, src, s as usize, size);
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        lo = nlo;
    }
    let last = (size - lo) * words;
    Ok(bits::test_bit(&cur[last..last + words], 0))
}

pub fn is_z(x: &ZnSequence, a: &WeightSet, kind: ZKind) -> Result<bool> {
    match kind {
        ZKind::Davenport => is_davenport_z(x, a),
        ZKind::Erdos => is_erdos_z(x, a),
    }
}

/// Exact Davenport decision for `A = Z_n^*`.
///
/// The set of sums reachable with unit weights is closed under multiplication
/// by units, so it is a union of classes `{y : gcd(y, n) = d}`. The state is a
/// bitmask over the divisors of `n`, and `class(d) + class(g)` is tabulated once.
#[derive(Debug, Clone)]
pub struct UnitsDavenportKernel {
    n: Modulus,
    class_of: Vec<u8>,
    /// `sums[d * τ + g]`: classes met by `d + class(g)`.
    sums: Vec<u128>,
    tau: usize,
    zero_class: usize,
}

/// Largest modulus the units kernel tabulates.
pub const UNITS_KERNEL_LIMIT: u64 = 2_000_000;

impl UnitsDavenportKernel {
    pub fn new(n: Modulus) -> Result<Self> {
        let nv = n.get();
        if nv > UNITS_KERNEL_LIMIT {
            return Err(Error::GuardExceeded(format!(
                "units kernel limited to n ≤ {UNITS_KERNEL_LIMIT}"
            )));
        }
        let divs = divisors(nv);
        let tau = divs.len();
        if tau > 128 {
            return Err(Error::GuardExceeded(format!("n = {nv} has {tau} divisors (> 128)")));
        }
        let size = nv as usize;
        let class_of: Vec<u8> = (0..nv)
            .map(|y| divs.binary_search(&gcd(y, nv)).expect("gcd divides n") as u8)
            .collect();
        let mut sums = vec![0u128; tau * tau];
        for (di, &d) in divs.iter().enumerate() {
            let rep = (d % nv) as usize;
            for y in 0..size {
                let g = class_of[y] as usize;
                let t = (rep + y) % size;
                sums[di * tau + g] |= 1u128 << class_of[t];
            }
        }
        let zero_class = tau - 1;
        Ok(UnitsDavenportKernel {
            n,
            class_of,
            sums,
            tau,
            zero_class,
        })
    }

    pub fn modulus(&self) -> Modulus {
        self.n
    }

    pub fn is_z(&self, x: &ZnSequence) -> Result<bool> {
        if x.modulus() != self.n {
            return Err(Error::ModulusMismatch {
                left: x.modulus().get(),
                right: self.n.get(),
            });
        }
        let mut reach: u128 = 0;
        for &xi in x.entries() {
            let g = self.class_of[xi as usize] as usize;
            let mut next = reach | (1u128 << g);
            let mut rest = reach;
            while rest != 0 {
                let d = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                next |= self.sums[d * self.tau + g];
            }
            reach = next;
            if reach >> self.zero_class & 1 == 1 {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Applies the definitions literally by walking every coefficient vector in
/// `(A ∪ {0})^m`.
pub fn brute_force_decide(x: &ZnSequence, a: &WeightSet, kind: ZKind) -> Result<bool> {
    check_modulus(x, a)?;
    let weights = a.members()?;
    let m = x.len() as u32;
    let space = (weights.len() as u128 + 1).checked_pow(m).unwrap_or(u128::MAX);
    if space > BRUTE_FORCE_LIMIT {
        return Err(Error::GuardExceeded(format!(
            "brute force over {space} coefficient vectors"
        )));
    }
    let n = x.modulus();
    let mut choices = Vec::with_capacity(weights.len() + 1);
    choices.push(0u64);
    choices.extend_from_slice(weights);
    let mut coeffs = vec![0u64; x.len()];
    loop {
        if satisfies_definition(x, n, &coeffs, kind) {
            return Ok(true);
        }
        // odometer step over indices into `choices`
        let mut i = 0;
        loop {
            if i == coeffs.len() {
                return Ok(false);
            }
            let pos = choices.iter().position(|&c| c == coeffs[i]).unwrap();
            if pos + 1 < choices.len() {
                coeffs[i] = choices[pos + 1];
                break;
            }
            coeffs[i] = choices[0];
            i += 1;
        }
    }
}

fn satisfies_definition(x: &ZnSequence, n: Modulus, coeffs: &[u64], kind: ZKind) -> bool {
    let support = coeffs.iter().filter(|&&c| c != 0).count();
    let ok_support = match kind {
        ZKind::Davenport => support > 0,
        ZKind::Erdos => support as u64 == n.get(),
    };
    if !ok_support {
        return false;
    }
    let total = coeffs
        .iter()
        .zip(x.entries())
        .fold(0u128, |acc, (&c, &xi)| acc + c as u128 * xi as u128);
    total % n.get() as u128 == 0
}

/// Re-checks a witness from scratch: length, membership, support and sum.
pub fn verify_witness(x: &ZnSequence, a: &WeightSet, kind: ZKind, w: &WitnessVector) -> bool {
    if w.len() != x.len() {
        return false;
    }
    if !w.coefficients().iter().all(|&c| c == 0 || a.contains(c)) {
        return false;
    }
    satisfies_definition(x, x.modulus(), w.coefficients(), kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: u64) -> Modulus {
        Modulus::new(n).unwrap()
    }

    fn seq(n: u64, v: &[u64]) -> ZnSequence {
        ZnSequence::new(m(n), v.iter().copied())
    }

    #[test]
    fn davenport_examples() {
        let ones5 = WeightSet::ones(m(5));
        assert!(!decide_davenport(&seq(5, &[1, 1, 1, 1]), &ones5).unwrap().is_z_sequence);
        let pm16 = WeightSet::explicit(m(16), [1, 15]).unwrap();
        assert!(!decide_davenport(&seq(16, &[1, 2, 4, 8]), &pm16).unwrap().is_z_sequence);
        let out = decide_davenport(&seq(5, &[0]), &ones5).unwrap();
        assert_eq!(out.witness.unwrap().coefficients(), &[1]);
        let out = decide_davenport(&seq(5, &[2, 3]), &ones5).unwrap();
        assert_eq!(out.witness.unwrap().coefficients(), &[1, 1]);
    }

    #[test]
    fn erdos_examples() {
        let ones5 = WeightSet::ones(m(5));
        assert!(
            !decide_erdos(&seq(5, &[0, 0, 0, 0, 1, 1, 1, 1]), &ones5)
                .unwrap()
                .is_z_sequence
        );
        assert!(
            !decide_erdos(&seq(5, &[1, 2, 3]), &WeightSet::units(m(5)))
                .unwrap()
                .is_z_sequence
        );
        let out = decide_erdos(&seq(5, &[1, 1, 1, 1, 1]), &ones5).unwrap();
        assert_eq!(out.witness.unwrap().support(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn brute_force_examples() {
        assert!(brute_force_decide(&seq(5, &[2, 3]), &WeightSet::ones(m(5)), ZKind::Davenport).unwrap());
        assert!(brute_force_decide(&seq(2, &[1, 1]), &WeightSet::ones(m(2)), ZKind::Erdos).unwrap());
        assert!(!brute_force_decide(&seq(3, &[1]), &WeightSet::ones(m(3)), ZKind::Davenport).unwrap());
    }

    #[test]
    fn brute_force_guard() {
        let x = ZnSequence::new(m(10), vec![1; 20]);
        let a = WeightSet::explicit(m(10), [1, 3, 7]).unwrap();
        assert!(matches!(
            brute_force_decide(&x, &a, ZKind::Davenport),
            Err(Error::GuardExceeded(_))
        ));
    }

    #[test]
    fn modulus_mismatch_is_an_error() {
        let x = seq(5, &[1]);
        let a = WeightSet::ones(m(7));
        assert!(matches!(decide_davenport(&x, &a), Err(Error::ModulusMismatch { .. })));
        assert!(matches!(decide_erdos(&x, &a), Err(Error::ModulusMismatch { .. })));
    }

    #[test]
    fn units_not_materialized_is_an_error() {
        let n = m(crate::group::UNITS_MATERIALIZE_LIMIT + 3);
        let a = WeightSet::units(n);
        let x = ZnSequence::new(n, [1, 2]);
        assert!(matches!(decide_davenport(&x, &a), Err(Error::NotMaterialized(_))));
    }

    #[test]
    fn rolling_kernels_agree_with_tables() {
        let n = m(7);
        let a = WeightSet::explicit(n, [1, 3]).unwrap();
        for bits in 0..7u64.pow(4) {
            let mut v = Vec::new();
            let mut b = bits;
            for _ in 0..4 {
                v.push(b % 7);
                b /= 7;
            }
            let x = ZnSequence::new(n, v.iter().copied().chain(v.iter().copied()));
            assert_eq!(
                is_davenport_z(&x, &a).unwrap(),
                decide_davenport(&x, &a).unwrap().is_z_sequence
            );
            assert_eq!(is_erdos_z(&x, &a).unwrap(), decide_erdos(&x, &a).unwrap().is_z_sequence);
        }
    }

    #[test]
    fn units_kernel_matches_generic_dp() {
        for nv in [6u64, 12, 15, 30, 36] {
            let n = m(nv);
            let units = WeightSet::units(n);
            let kernel = UnitsDavenportKernel::new(n).unwrap();
            let mut state = 12345u64;
            for _ in 0..300 {
                let len = (state % 5) as usize + 1;
                let mut v = Vec::new();
                for _ in 0..len {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    v.push((state >> 33) % nv);
                }
                let x = ZnSequence::new(n, v);
                let generic = decide_davenport(&x, &units).unwrap().is_z_sequence;
                assert_eq!(kernel.is_z(&x).unwrap(), generic, "{x}");
            }
        }
    }

    #[test]
    fn witnesses_verify() {
        let n = m(9);
        let a = WeightSet::explicit(n, [2, 4]).unwrap();
        let x = seq(9, &[1, 5, 7, 3, 8, 2, 2, 6, 4, 1, 3]);
        for kind in [ZKind::Davenport, ZKind::Erdos] {
            let out = decide(&x, &a, kind).unwrap();
            assert!(out.is_z_sequence);
            assert!(verify_witness(&x, &a, kind, out.witness.as_ref().unwrap()));
        }
    }
}
