//! Subset sums and sumsets over `Z_n`, plus checkable forms of the covering
//! observation, Cauchy–Davenport, Scherk's theorem and the Szemerédi
//! (Erdős–Eggleston) bound.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::ResidueBits;
use crate::error::{Error, Result};
use crate::group::{is_prime, Modulus};

/// Constant in `|S(A)| ≥ |A|² / 10000`.
pub const SZEMEREDI_DENOMINATOR: u64 = 10_000;

/// A set of residues stored as an `n`-bit vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ResidueSet {
    modulus: Modulus,
    bits: ResidueBits,
}

impl ResidueSet {
    pub fn empty(modulus: Modulus) -> Self {
        ResidueSet {
            modulus,
            bits: ResidueBits::new(modulus.size()),
        }
    }

    pub fn full(modulus: Modulus) -> Self {
        ResidueSet {
            modulus,
            bits: ResidueBits::full(modulus.size()),
        }
    }

    /// Members are reduced modulo `n`.
    pub fn new(modulus: Modulus, members: impl IntoIterator<Item = u64>) -> Self {
        ResidueSet {
            modulus,
            bits: ResidueBits::from_iter(modulus.size(), members),
        }
    }

    /// The set whose members are the set bits of `mask` (`n ≤ 64`).
    pub fn from_mask(modulus: Modulus, mask: u64) -> Self {
        Self::new(modulus, (0..modulus.get().min(64)).filter(|i| mask >> i & 1 == 1))
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn contains(&self, x: u64) -> bool {
        self.bits.contains((x % self.modulus.get()) as usize)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.bits.is_full()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter()
    }

    pub fn members(&self) -> Vec<u64> {
        self.iter().collect()
    }

    pub fn insert(&mut self, x: u64) {
        self.bits.insert((x % self.modulus.get()) as usize);
    }

    pub fn union(&self, other: &ResidueSet) -> ResidueSet {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        ResidueSet {
            modulus: self.modulus,
            bits,
        }
    }
}

impl fmt::Debug for ResidueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} mod {}", self.bits, self.modulus)
    }
}

/// `S(A)`: sums over all nonempty subsets of `A`.
pub fn subset_sums(a: &ResidueSet) -> ResidueSet {
    let n = a.modulus;
    let mut acc = ResidueBits::new(n.size());
    for x in a.iter() {
        let prev = acc.clone();
        acc.union_rotated(&prev, x);
        acc.insert(x as usize);
    }
    ResidueSet { modulus: n, bits: acc }
}

/// `S(A) ∪ {0}`, the form used when the empty selection is allowed.
pub fn subset_sums_with_zero(a: &ResidueSet) -> ResidueSet {
    let mut s = subset_sums(a);
    s.insert(0);
    s
}

/// Sums of exactly `t` distinct elements of `A`.
pub fn subset_sums_of_size(a: &ResidueSet, t: usize) -> Result<ResidueSet> {
    let size = a.len();
    if t > size {
        return Err(Error::InvalidInput(format!("t = {t} exceeds |A| = {size}")));
    }
    let n = a.modulus;
    let mut by_count = vec![ResidueBits::new(n.size()); t + 1];
    by_count[0].insert(0);
    for (seen, x) in a.iter().enumerate() {
        for c in (1..=t.min(seen + 1)).rev() {
            let (lo, hi) = by_count.split_at_mut(c);
            hi[0].union_rotated(&lo[c - 1], x);
        }
    }
    Ok(ResidueSet {
        modulus: n,
        bits: by_count.swap_remove(t),
    })
}

/// `A + B = {a + b}`.
pub fn sumset(a: &ResidueSet, b: &ResidueSet) -> Result<ResidueSet> {
    if a.modulus != b.modulus {
        return Err(Error::ModulusMismatch {
            left: a.modulus.get(),
            right: b.modulus.get(),
        });
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut out = ResidueBits::new(a.modulus.size());
    for x in small.iter() {
        out.union_rotated(&large.bits, x);
    }
    Ok(ResidueSet {
        modulus: a.modulus,
        bits: out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    Covering,
    CauchyDavenport,
    Scherk,
    Szemeredi,
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Law::Covering => "covering",
            Law::CauchyDavenport => "cauchy-davenport",
            Law::Scherk => "scherk",
            Law::Szemeredi => "szemeredi",
        })
    }
}

impl FromStr for Law {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "covering" => Ok(Law::Covering),
            "cauchy-davenport" => Ok(Law::CauchyDavenport),
            "scherk" => Ok(Law::Scherk),
            "szemeredi" => Ok(Law::Szemeredi),
            other => Err(Error::InvalidInput(format!("unknown law '{other}'"))),
        }
    }
}

/// Measured quantities behind a [`LawReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawDetail {
    pub size_a: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub size_b: Option<usize>,
    /// `|A + B|` for the sumset laws, `|S(A)|` for Szemerédi.
    pub measured: usize,
    /// Right-hand side of the inequality (the covering law needs `n`).
    pub bound: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub zero_in_subset_sums: Option<bool>,
    /// `|S(A)| / |A|²`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    pub law: Law,
    pub n: u64,
    pub a: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub b: Option<Vec<u64>>,
    pub holds: bool,
    pub detail: LawDetail,
}

fn need_b(law: Law, b: Option<&ResidueSet>) -> Result<&ResidueSet> {
    b.ok_or_else(|| Error::InvalidInput(format!("{law} needs a second set B")))
}

/// Checks one instance of a law. Failed preconditions are input errors;
/// `holds` is always derived from the measured detail.
pub fn verify_law(law: Law, a: &ResidueSet, b: Option<&ResidueSet>) -> Result<LawReport> {
    let n = a.modulus();
    let nv = n.size();
    let (detail, holds) = match law {
        Law::Covering => {
            let b = need_b(law, b)?;
            if a.len() + b.len() <= nv {
                return Err(Error::InvalidInput(format!(
                    "covering needs |A| + |B| > n, got {} + {} ≤ {nv}",
                    a.len(),
                    b.len()
                )));
            }
            let measured = sumset(a, b)?.len();
            let detail = LawDetail {
                size_a: a.len(),
                size_b: Some(b.len()),
                measured,
                bound: nv,
                zero_in_subset_sums: None,
                ratio: None,
            };
            (detail, measured == nv)
        }
        Law::CauchyDavenport => {
            let b = need_b(law, b)?;
            if !is_prime(n.get()) {
                return Err(Error::InvalidInput(format!("Cauchy–Davenport needs prime n, got {n}")));
            }
            if a.is_empty() || b.is_empty() {
                return Err(Error::InvalidInput("Cauchy–Davenport needs nonempty A and B".into()));
            }
            let measured = sumset(a, b)?.len();
            let bound = nv.min(a.len() + b.len() - 1);
            let detail = LawDetail {
                size_a: a.len(),
                size_b: Some(b.len()),
                measured,
                bound,
                zero_in_subset_sums: None,
                ratio: None,
            };
            (detail, measured >= bound)
        }
        Law::Scherk => {
            let b = need_b(law, b)?;
            if !(a.contains(0) && b.contains(0)) {
                return Err(Error::InvalidInput("Scherk needs 0 ∈ A ∩ B".into()));
            }
            if !zero_sum_unique(a, b) {
                return Err(Error::InvalidInput("Scherk needs a + b = 0 only at a = b = 0".into()));
            }
            let measured = sumset(a, b)?.len();
            let bound = (a.len() + b.len() - 1).min(nv);
            let detail = LawDetail {
                size_a: a.len(),
                size_b: Some(b.len()),
                measured,
                bound,
                zero_in_subset_sums: None,
                ratio: None,
            };
            (detail, measured >= bound)
        }
        Law::Szemeredi => {
            let s = subset_sums(a);
            let zero_in = s.contains(0);
            let size = a.len();
            let measured = s.len();
            let ratio = (size > 0).then(|| measured as f64 / (size * size) as f64);
            let holds = zero_in || (measured as u64) * SZEMEREDI_DENOMINATOR >= (size * size) as u64;
            let detail = LawDetail {
                size_a: size,
                size_b: None,
                measured,
                bound: (size * size).div_ceil(SZEMEREDI_DENOMINATOR as usize),
                zero_in_subset_sums: Some(zero_in),
                ratio,
            };
            (detail, holds)
        }
    };
    Ok(LawReport {
        law,
        n: n.get(),
        a: a.members(),
        b: b.map(|b| b.members()),
        holds,
        detail,
    })
}

/// True iff `a + b = 0` with `a ∈ A, b ∈ B` forces `a = b = 0`.
fn zero_sum_unique(a: &ResidueSet, b: &ResidueSet) -> bool {
    let n = a.modulus();
    a.iter().filter(|&x| x != 0).all(|x| !b.contains(n.neg(x)))
}

/// Outcome of an exhaustive sweep of one law at one modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub law: Law,
    pub n: u64,
    pub cases: u64,
    pub violations: u64,
    pub holds: bool,
    /// Szemerédi only: smallest `|S(A)| / |A|²` over zero-sum-free nonempty `A`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub min_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub min_ratio_set: Option<Vec<u64>>,
}

/// Largest modulus the exhaustive sweeps enumerate subsets of.
pub const SWEEP_LIMIT: u64 = 20;

/// Runs `law` on every admissible input at modulus `n`.
///
/// Pair laws enumerate all `(A, B)` meeting the law's precondition; the
/// Szemerédi sweep enumerates every `A ⊆ Z_n \ {0}`.
pub fn sweep_law(law: Law, n: Modulus) -> Result<SweepReport> {
    let nv = n.get();
    if nv > SWEEP_LIMIT {
        return Err(Error::GuardExceeded(format!(
            "exhaustive sweep at n = {nv} (limit {SWEEP_LIMIT})"
        )));
    }
    if law == Law::CauchyDavenport && !is_prime(nv) {
        return Err(Error::InvalidInput(format!("Cauchy–Davenport needs prime n, got {nv}")));
    }
    let subsets = 1u64 << nv;
    if law == Law::Szemeredi {
        // bit 0 stays clear: A avoids 0
        let (cases, violations, best) = (0..subsets)
            .into_par_iter()
            .filter(|mask| mask & 1 == 0)
            .map(|mask| {
                let a = ResidueSet::from_mask(n, mask);
                let rep = verify_law(law, &a, None).expect("szemeredi has no precondition");
                let ratio = match (rep.detail.zero_in_subset_sums, rep.detail.ratio) {
                    (Some(false), Some(r)) => Some((r, mask)),
                    _ => None,
                };
                (1u64, u64::from(!rep.holds), ratio)
            })
            .reduce(|| (0, 0, None), merge_sweep);
        return Ok(SweepReport {
            law,
            n: nv,
            cases,
            violations,
            holds: violations == 0,
            min_ratio: best.map(|(r, _)| r),
            min_ratio_set: best.map(|(_, mask)| ResidueSet::from_mask(n, mask).members()),
        });
    }
    let (cases, violations, _) = (0..subsets)
        .into_par_iter()
        .map(|ma| {
            let a = ResidueSet::from_mask(n, ma);
            let mut cases = 0u64;
            let mut violations = 0u64;
            for mb in 0..subsets {
                if !admissible(law, nv, ma, mb) {
                    continue;
                }
                let b = ResidueSet::from_mask(n, mb);
                if law == Law::Scherk && !zero_sum_unique(&a, &b) {
                    continue;
                }
                let rep = verify_law(law, &a, Some(&b)).expect("precondition checked");
                cases += 1;
                violations += u64::from(!rep.holds);
            }
            (cases, violations, None)
        })
        .reduce(|| (0, 0, None), merge_sweep);
    Ok(SweepReport {
        law,
        n: nv,
        cases,
        violations,
        holds: violations == 0,
        min_ratio: None,
        min_ratio_set: None,
    })
}

fn admissible(law: Law, n: u64, ma: u64, mb: u64) -> bool {
    match law {
        Law::Covering => (ma.count_ones() + mb.count_ones()) as u64 > n,
        Law::CauchyDavenport => ma != 0 && mb != 0,
        Law::Scherk => ma & 1 == 1 && mb & 1 == 1,
        Law::Szemeredi => true,
    }
}

type SweepAcc = (u64, u64, Option<(f64, u64)>);

fn merge_sweep(x: SweepAcc, y: SweepAcc) -> SweepAcc {
    // ties go to the smaller mask so the reported set is schedule-independent
    let best = match (x.2, y.2) {
        (Some(p), Some(q)) => Some(if (q.0, q.1) < (p.0, p.1) { q } else { p }),
        (p, q) => p.or(q),
    };
    (x.0 + y.0, x.1 + y.1, best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: u64) -> Modulus {
        Modulus::new(n).unwrap()
    }

    fn set(n: u64, v: &[u64]) -> ResidueSet {
        ResidueSet::new(m(n), v.iter().copied())
    }

    #[test]
    fn subset_sum_examples() {
        assert_eq!(subset_sums(&set(9, &[4])).members(), vec![4]);
        assert_eq!(subset_sums(&set(5, &[1, 2])).members(), vec![1, 2, 3]);
        assert_eq!(subset_sums(&set(7, &[1, 2, 3])).members(), vec![1, 2, 3, 4, 5, 6]);
        assert!(subset_sums(&ResidueSet::empty(m(5))).is_empty());
        assert!(subset_sums_with_zero(&set(5, &[1])).contains(0));
    }

    #[test]
    fn subset_sums_of_size_examples() {
        assert_eq!(
            subset_sums_of_size(&set(5, &[1, 2, 3]), 2).unwrap().members(),
            vec![0, 3, 4]
        );
        assert_eq!(subset_sums_of_size(&set(5, &[1, 2, 3]), 0).unwrap().members(), vec![0]);
        assert!(subset_sums_of_size(&set(5, &[1]), 2).is_err());
    }

    #[test]
    fn sumset_examples() {
        assert!(sumset(&ResidueSet::empty(m(5)), &set(5, &[1, 2])).unwrap().is_empty());
        assert_eq!(sumset(&set(5, &[0]), &set(5, &[1, 3])).unwrap().members(), vec![1, 3]);
        assert_eq!(sumset(&set(5, &[1, 2]), &set(5, &[3])).unwrap().members(), vec![0, 4]);
        assert!(sumset(&set(5, &[1]), &set(7, &[1])).is_err());
    }

    #[test]
    fn law_examples() {
        let a = set(5, &[0, 1, 2]);
        let r = verify_law(Law::Covering, &a, Some(&a)).unwrap();
        assert!(r.holds);
        assert_eq!(r.detail.measured, 5);

        let r = verify_law(Law::CauchyDavenport, &set(5, &[1, 2]), Some(&set(5, &[1, 3]))).unwrap();
        assert!(r.holds);
        assert_eq!(r.detail.measured, 4);
        assert_eq!(r.detail.bound, 3);

        let r = verify_law(Law::Szemeredi, &set(10, &[1]), None).unwrap();
        assert!(r.holds);
        assert_eq!(r.detail.zero_in_subset_sums, Some(false));
        assert_eq!(r.detail.measured, 1);

        let r = verify_law(Law::Scherk, &set(7, &[0, 1]), Some(&set(7, &[0, 2]))).unwrap();
        assert!(r.holds);
        assert_eq!(r.detail.measured, 4);
        assert_eq!(r.detail.bound, 3);
    }

    #[test]
    fn preconditions_are_input_errors() {
        let small = set(5, &[0, 1]);
        assert!(matches!(
            verify_law(Law::Covering, &small, Some(&small)),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            verify_law(Law::CauchyDavenport, &set(6, &[1]), Some(&set(6, &[1]))),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            verify_law(Law::Scherk, &set(7, &[1]), Some(&set(7, &[0]))),
            Err(Error::InvalidInput(_))
        ));
        // 1 + 6 = 0 breaks uniqueness
        assert!(matches!(
            verify_law(Law::Scherk, &set(7, &[0, 1]), Some(&set(7, &[0, 6]))),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn small_sweeps_hold() {
        for law in [Law::Covering, Law::Scherk, Law::Szemeredi] {
            assert!(sweep_law(law, m(5)).unwrap().holds);
        }
        assert!(sweep_law(Law::CauchyDavenport, m(4)).is_err());
    }
}
