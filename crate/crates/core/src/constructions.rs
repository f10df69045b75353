//! Extremal sequences that are *not* zero-sum sequences of a given kind.
//!
//! Every generator re-checks its output with the decision module before
//! returning it; a failed check is an error, never a silent success.

use serde::{Deserialize, Serialize};

use crate::decision::{is_davenport_z, is_erdos_z};
use crate::error::{Error, Result};
use crate::group::{is_k_restricted, is_prime, Modulus, WeightSet, ZnSequence};
use crate::invariants::{enumerate_restricted_multisets, InvariantKind};

/// Candidate limit for the bounded fallback searches.
pub const FALLBACK_LIMIT: u64 = 10_000_000;

/// Subset limit for the literal constraint re-check.
pub const CONSTRAINT_CHECK_LIMIT: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub sequence: ZnSequence,
    pub claimed_kind: InvariantKind,
    pub claimed_weights: WeightSet,
    /// Multiplicity cap for the restricted kinds.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cap: Option<usize>,
    pub verified: bool,
    pub fallback_used: bool,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ClassicalKind {
    /// `(1^{n-1})` for `A = {1}`.
    Ones,
    /// `(1, 2, …, 2^{k-1})` with `k = ⌊log₂ n⌋` for `A = {±1}`.
    SignedPowers,
    /// `(1, q₁, q₁q₂, …, q₁⋯q_{a-1})` for `n = q₁⋯q_a`.
    DivisorChain { factors: Vec<u64> },
    /// `(0^{n-1}, 1^{n-1})`, the Erdős–Ginzburg–Ziv extremal sequence.
    Egz,
}

/// Runs the decision check for `kind` and fills in `verified`.
fn certify(
    sequence: ZnSequence,
    claimed_kind: InvariantKind,
    weights: WeightSet,
    cap: Option<usize>,
    fallback_used: bool,
    notes: Vec<String>,
) -> Result<ConstructionReport> {
    let is_z = match claimed_kind.z_kind() {
        crate::decision::ZKind::Davenport => is_davenport_z(&sequence, &weights)?,
        crate::decision::ZKind::Erdos => is_erdos_z(&sequence, &weights)?,
    };
    if is_z {
        return Err(Error::VerificationFailed(format!(
            "{sequence} is a {claimed_kind} zero-sum sequence"
        )));
    }
    if let Some(k) = cap {
        if !is_k_restricted(&sequence, k) {
            return Err(Error::VerificationFailed(format!("{sequence} is not {k}-restricted")));
        }
    }
    Ok(ConstructionReport {
        sequence,
        claimed_kind,
        claimed_weights: weights,
        cap,
        verified: true,
        fallback_used,
        notes,
    })
}

/// The textbook extremal sequences.
pub fn gen_classical(kind: &ClassicalKind, n: Modulus) -> Result<ConstructionReport> {
    let nv = n.get();
    if nv < 2 {
        return Err(Error::InvalidInput(format!(
            "classical constructions need n ≥ 2, got {nv}"
        )));
    }
    match kind {
        ClassicalKind::Ones => {
            let seq = ZnSequence::new(n, std::iter::repeat_n(1, (nv - 1) as usize));
            certify(seq, InvariantKind::Davenport, WeightSet::ones(n), None, false, vec![])
        }
        ClassicalKind::SignedPowers => {
            let k = nv.ilog2();
            let seq = ZnSequence::new(n, (0..k).map(|i| 1u64 << i));
            certify(
                seq,
                InvariantKind::Davenport,
                WeightSet::plus_minus_one(n),
                None,
                false,
                vec![],
            )
        }
        ClassicalKind::DivisorChain { factors } => {
            if factors.is_empty() || factors.iter().any(|&q| !is_prime(q)) {
                return Err(Error::InvalidInput(format!(
                    "divisor chain needs a list of primes, got {factors:?}"
                )));
            }
            let product = factors.iter().try_fold(1u64, |acc, &q| acc.checked_mul(q));
            if product != Some(nv) {
                return Err(Error::InvalidInput(format!(
                    "factors {factors:?} do not multiply to {nv}"
                )));
            }
            let mut entries = Vec::with_capacity(factors.len());
            let mut acc = 1u64;
            for &q in factors {
                entries.push(acc);
                acc *= q;
            }
            let seq = ZnSequence::new(n, entries);
            certify(seq, InvariantKind::Davenport, WeightSet::ones(n), None, false, vec![])
        }
        ClassicalKind::Egz => {
            let half = (nv - 1) as usize;
            let seq = ZnSequence::new(n, std::iter::repeat_n(0, half).chain(std::iter::repeat_n(1, half)));
            certify(seq, InvariantKind::Erdos, WeightSet::ones(n), None, false, vec![])
        }
    }
}

/// The length-`n+1` 2-restricted sequence with total sum 0 and no zero
/// entry, when the closed-form pattern is defined at `n`.
///
/// Odd `n = 2h+1`: `(1, …, h-1, h, h, h+1, h+1, h+2, …, 2h)`.
/// Even `n = 2h`: `(1, 2, 3, 1, 3, 5, …, h-1, h, h, h+1, …, 2h-1)`,
/// which only reads as a 2-restricted sequence once `h ≥ 5`.
pub fn harborth_pattern(n: u64) -> Option<Vec<u64>> {
    if n < 3 {
        return None;
    }
    let h = n / 2;
    let mut v = Vec::with_capacity(n as usize + 1);
    if n % 2 == 1 {
        v.extend(1..h);
        v.extend([h, h, h + 1, h + 1]);
        v.extend(h + 2..=2 * h);
    } else {
        if h < 5 {
            return None;
        }
        v.extend([1, 2, 3, 1, 3]);
        v.extend(5..h);
        v.extend([h, h]);
        v.extend(h + 1..2 * h);
    }
    Some(v)
}

/// A 2-restricted length-`n+1` sequence with no zero-sum subsequence of
/// size exactly `n`.
pub fn gen_harborth2(n: Modulus) -> Result<ConstructionReport> {
    let nv = n.get();
    if nv < 3 {
        return Err(Error::InvalidInput(format!("needs n ≥ 3, got {nv}")));
    }
    let ones = WeightSet::ones(n);
    let mut notes = Vec::new();
    if let Some(entries) = harborth_pattern(nv) {
        let seq = ZnSequence::new(n, entries);
        if seq.len() == nv as usize + 1 && is_k_restricted(&seq, 2) && !is_erdos_z(&seq, &ones)? {
            notes.push("closed-form pattern verified".into());
            return certify(seq, InvariantKind::RestrictedErdos, ones, Some(2), false, notes);
        }
        notes.push("closed-form pattern failed verification".into());
    } else {
        notes.push(format!("closed-form pattern undefined at n = {nv}"));
    }
    for seq in enumerate_restricted_multisets(n, nv as usize + 1, 2) {
        if !is_erdos_z(&seq, &ones)? {
            notes.push("witness found by exhaustive search".into());
            return certify(seq, InvariantKind::RestrictedErdos, ones, Some(2), true, notes);
        }
    }
    Err(Error::SearchExhausted(format!(
        "no 2-restricted length-{} witness over Z_{nv}",
        nv + 1
    )))
}

/// How the extras of [`gen_restricted_erdos_extremal`] were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtrasCase {
    /// `p ≡ r (mod 2(k-1))`.
    Even,
    /// `p ≡ r + k - 1 (mod 2(k-1))`.
    Odd,
}

/// Parameters of the `p = (k-1)l + r` decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremalParams {
    pub p: u64,
    pub k: u64,
    pub l: u64,
    pub r: u64,
    pub t: u64,
    pub case: ExtrasCase,
}

impl ExtremalParams {
    pub fn new(p: u64, k: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidInput(format!("{p} is not prime")));
        }
        if k < 3 {
            return Err(Error::InvalidInput(format!("cap k must be at least 3, got {k}")));
        }
        if p < 2 * k + 3 {
            return Err(Error::UnsupportedParameters(format!(
                "p = {p} is below 2k + 3 = {}",
                2 * k + 3
            )));
        }
        let (l, r) = (p / (k - 1), p % (k - 1));
        if r == 0 || r >= k - 1 {
            return Err(Error::UnsupportedParameters(format!(
                "p = {p} gives r = {r}, outside (0, {})",
                k - 1
            )));
        }
        let m = 2 * (k - 1);
        let (case, t) = if p % m == r % m {
            (ExtrasCase::Even, (p - r) / m)
        } else {
            (ExtrasCase::Odd, (p - r - (k - 1)) / m)
        };
        Ok(ExtremalParams { p, k, l, r, t, case })
    }

    /// Number of extras beyond the base block.
    pub fn extras_len(&self) -> usize {
        (self.r + self.k - 2) as usize
    }

    /// Required extras sum: `-(k-1)(1 + … + (l-2))` modulo `p`.
    pub fn extras_target(&self) -> u64 {
        let p = self.p as u128;
        let tri = (self.l as u128 - 1) * (self.l as u128 - 2) / 2;
        let base = (self.k as u128 - 1) * tri % p;
        ((p - base) % p) as u64
    }

    /// Extras from the closed-form case formulas; `None` when the formula
    /// is undefined at these parameters (negative counts or entries).
    pub fn formula_extras(&self) -> Option<Vec<u64>> {
        let (k, r, t) = (self.k as i64, self.r as i64, self.t as i64);
        let mut xs: Vec<i64> = Vec::new();
        match self.case {
            ExtrasCase::Even => {
                xs.extend([2 * t - (k - 1), 2 * t - (k - 2), k - 2 - r]);
                let pairs = if (r + k) % 2 == 1 {
                    (r + k - 5) / 2
                } else {
                    (r + k - 6) / 2
                };
                if (r + k) % 2 == 1 && r + k < 5 || (r + k) % 2 == 0 && r + k < 6 {
                    return None;
                }
                for i in 1..=pairs {
                    xs.extend([t - i, t + i]);
                }
                if (r + k) % 2 == 0 {
                    xs.push(t);
                }
            }
            ExtrasCase::Odd => {
                let run = r + k - 3;
                if run < 1 {
                    return None;
                }
                let a = (t - 2) * r / run;
                xs.extend((1..=run).map(|i| a - i));
                let p = self.p as i64;
                let partial: i64 = xs.iter().sum();
                let last = (self.extras_target() as i64 - partial).rem_euclid(p);
                xs.push(last);
            }
        }
        if xs.len() != self.extras_len() || xs.iter().any(|&x| x < 0) {
            return None;
        }
        Some(xs.into_iter().map(|x| x as u64).collect())
    }

    /// Distinct, in `[0, l-2]`, with the required sum modulo `p`.
    pub fn extras_admissible(&self, xs: &[u64]) -> bool {
        let mut sorted = xs.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        sorted.len() == self.extras_len()
            && xs.iter().all(|&x| x + 2 <= self.l)
            && xs.iter().map(|&x| x as u128).sum::<u128>() % self.p as u128 == self.extras_target() as u128
    }

    /// Smallest admissible extras in ascending-combination order.
    pub fn search_extras(&self) -> Result<Vec<u64>> {
        let count = self.extras_len();
        let hi = self
            .l
            .checked_sub(2)
            .ok_or_else(|| Error::UnsupportedParameters("l < 2".into()))?;
        let mut chosen = Vec::with_capacity(count);
        let mut visited = 0u64;
        if self.extras_dfs(0, 0, hi, count, &mut chosen, &mut visited) {
            Ok(chosen)
        } else if visited >= FALLBACK_LIMIT {
            Err(Error::SearchExhausted(format!(
                "extras search hit {FALLBACK_LIMIT} candidates"
            )))
        } else {
            Err(Error::SearchExhausted(format!(
                "no {count} distinct extras in [0, {hi}] with the required sum modulo {}",
                self.p
            )))
        }
    }

    fn extras_dfs(&self, from: u64, sum: u64, hi: u64, left: usize, chosen: &mut Vec<u64>, visited: &mut u64) -> bool {
        *visited += 1;
        if *visited >= FALLBACK_LIMIT {
            return false;
        }
        let p = self.p;
        if left == 1 {
            // the last value is forced
            let need = (self.extras_target() + p - sum % p) % p;
            if need >= from && need <= hi {
                chosen.push(need);
                return true;
            }
            return false;
        }
        if left == 0 {
            return sum % p == self.extras_target();
        }
        let mut x = from;
        while x + (left as u64 - 1) <= hi {
            chosen.push(x);
            if self.extras_dfs(x + 1, sum + x, hi, left - 1, chosen, visited) {
                return true;
            }
            chosen.pop();
            x += 1;
        }
        false
    }
}

/// Checks constraint (1), total `≡ -k`, and constraint (2): no `s`-subset of
/// the tail `a` (for `1 ≤ s ≤ k-1`) sums to `-(s+1)`. Enumerates positions.
pub fn check_extremal_constraints(seq: &ZnSequence, k: usize) -> Result<(bool, bool)> {
    let n = seq.modulus();
    let p = n.get();
    let sum_ok = seq.sum() == n.neg(k as u64 % p);
    // the k copies of -1 come first in the construction, so drop k of them
    let minus_one = p - 1;
    let mut tail: Vec<u64> = seq.entries().to_vec();
    for _ in 0..k {
        let pos = tail
            .iter()
            .position(|&v| v == minus_one)
            .ok_or_else(|| Error::InvalidInput(format!("{seq} has fewer than {k} copies of -1")))?;
        tail.remove(pos);
    }
    let mut subsets = 0u64;
    for s in 1..k {
        let mut c = 1u128;
        for i in 0..s as u128 {
            c = c * (tail.len() as u128 - i) / (i + 1);
        }
        subsets = subsets.saturating_add(c.min(u64::MAX as u128) as u64);
    }
    if subsets > CONSTRAINT_CHECK_LIMIT {
        return Err(Error::GuardExceeded(format!(
            "{subsets} subsets exceed {CONSTRAINT_CHECK_LIMIT}"
        )));
    }
    let mut subset_ok = true;
    for s in 1..k {
        let forbidden = n.neg((s as u64 + 1) % p);
        if any_subset_sum(&tail, s, 0, 0, p, forbidden) {
            subset_ok = false;
            break;
        }
    }
    Ok((sum_ok, subset_ok))
}

fn any_subset_sum(v: &[u64], s: usize, start: usize, acc: u64, p: u64, target: u64) -> bool {
    if s == 0 {
        return acc == target;
    }
    (start..=v.len() - s).any(|i| any_subset_sum(v, s - 1, i + 1, (acc + v[i]) % p, p, target))
}

/// A `k`-restricted length-`p+k-1` sequence over `Z_p` with no zero-sum
/// subsequence of size exactly `p`: `k` copies of `-1`, `k-1` copies of each
/// of `0, …, l-2`, then `r+k-2` distinct extras in `[0, l-2]`.
///
/// The extras come from the case formulas when those give an admissible
/// choice; otherwise a bounded search supplies them and `fallback_used` is set.
pub fn gen_restricted_erdos_extremal(p: u64, k: usize) -> Result<ConstructionReport> {
    let params = ExtremalParams::new(p, k as u64)?;
    let n = Modulus::new(p)?;
    let mut notes = vec![format!(
        "p = {}·{} + {}, t = {}, {:?} case",
        k - 1,
        params.l,
        params.r,
        params.t,
        params.case
    )];
    let (extras, fallback) = match params.formula_extras() {
        Some(xs) if params.extras_admissible(&xs) => {
            notes.push("formula extras admissible (read as the trailing entries)".into());
            (xs, false)
        }
        Some(xs) => {
            notes.push(format!("formula extras {xs:?} collide or leave [0, l-2]"));
            (params.search_extras()?, true)
        }
        None => {
            notes.push("formula extras undefined at these parameters".into());
            (params.search_extras()?, true)
        }
    };
    let mut entries: Vec<u64> = vec![p - 1; k];
    for v in 0..params.l - 1 {
        entries.extend(std::iter::repeat_n(v, k - 1));
    }
    entries.extend(&extras);
    let seq = ZnSequence::new(n, entries);
    if seq.len() != p as usize + k - 1 {
        return Err(Error::VerificationFailed(format!("length {} ≠ p + k - 1", seq.len())));
    }
    let (sum_ok, subset_ok) = check_extremal_constraints(&seq, k)?;
    if !(sum_ok && subset_ok) {
        return Err(Error::VerificationFailed(format!(
            "constraints failed: total ≡ -k is {sum_ok}, subset condition is {subset_ok}"
        )));
    }
    notes.push(format!("extras {extras:?}"));
    certify(
        seq,
        InvariantKind::RestrictedErdos,
        WeightSet::ones(n),
        Some(k),
        fallback,
        notes,
    )
}

/// For each prime in `ps`, whether the case formulas alone give admissible
/// extras (as opposed to needing the fallback search).
pub fn formula_coverage(ps: impl IntoIterator<Item = u64>, k: u64) -> Vec<(u64, Result<bool>)> {
    ps.into_iter()
        .filter(|&p| is_prime(p))
        .map(|p| {
            let r = ExtremalParams::new(p, k).map(|ep| ep.formula_extras().is_some_and(|xs| ep.extras_admissible(&xs)));
            (p, r)
        })
        .collect()
}

/// Largest `t` with `k·t(t+1)/2 < n/2`.
pub fn restricted_davenport_t(n: u64, k: u64) -> u64 {
    let mut t = 0;
    while k * (t + 1) * (t + 2) < n {
        t += 1;
    }
    t
}

/// `(1^k, 2^k, …, t^k)`: every nonempty subset sum lies strictly between
/// 0 and `n/2`, so the sequence is not a Davenport Z-sequence.
pub fn gen_restricted_davenport(n: Modulus, k: usize) -> Result<ConstructionReport> {
    let nv = n.get();
    if k == 0 || nv < 2 * k as u64 + 1 {
        return Err(Error::InvalidInput(format!(
            "needs k ≥ 1 and n ≥ 2k + 1, got n = {nv}, k = {k}"
        )));
    }
    let t = restricted_davenport_t(nv, k as u64);
    let seq = ZnSequence::new(n, (1..=t).flat_map(|v| std::iter::repeat_n(v, k)));
    let notes = vec![format!("t = {t}")];
    certify(
        seq,
        InvariantKind::RestrictedDavenport,
        WeightSet::ones(n),
        Some(k),
        false,
        notes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::brute_force_decide;
    use crate::decision::ZKind;

    fn m(n: u64) -> Modulus {
        Modulus::new(n).unwrap()
    }

    #[test]
    fn classical_examples() {
        let r = gen_classical(&ClassicalKind::Ones, m(5)).unwrap();
        assert_eq!(r.sequence.entries(), &[1, 1, 1, 1]);
        assert!(r.verified);
        let r = gen_classical(&ClassicalKind::SignedPowers, m(16)).unwrap();
        assert_eq!(r.sequence.entries(), &[1, 2, 4, 8]);
        assert_eq!(r.claimed_weights.members().unwrap(), &[1, 15]);
        let r = gen_classical(&ClassicalKind::Egz, m(3)).unwrap();
        assert_eq!(r.sequence.entries(), &[0, 0, 1, 1]);
        let r = gen_classical(&ClassicalKind::DivisorChain { factors: vec![2, 3, 5] }, m(30)).unwrap();
        assert_eq!(r.sequence.entries(), &[1, 2, 6]);
        assert!(gen_classical(&ClassicalKind::DivisorChain { factors: vec![2, 4] }, m(8)).is_err());
        assert!(gen_classical(&ClassicalKind::DivisorChain { factors: vec![2, 3] }, m(12)).is_err());
    }

    #[test]
    fn harborth_small() {
        // every 2-restricted length-5 multiset over Z_4 contains its own total
        assert!(matches!(gen_harborth2(m(4)), Err(Error::SearchExhausted(_))));
        for n in (3..=10).filter(|&n| n != 4) {
            let r = gen_harborth2(m(n)).unwrap();
            assert_eq!(r.sequence.len(), n as usize + 1);
            assert!(is_k_restricted(&r.sequence, 2));
            assert_eq!(r.fallback_used, matches!(n, 6 | 8), "n = {n}");
        }
        assert!(!brute_force_decide(
            &gen_harborth2(m(5)).unwrap().sequence,
            &WeightSet::ones(m(5)),
            ZKind::Erdos
        )
        .unwrap());
    }

    #[test]
    fn harborth_pattern_sums_to_zero() {
        for n in 3..60u64 {
            if let Some(v) = harborth_pattern(n) {
                assert_eq!(v.iter().sum::<u64>() % n, 0);
                assert_eq!(v.len() as u64, n + 1);
                assert!(v.iter().all(|&x| x % n != 0));
            }
        }
    }

    #[test]
    fn restricted_davenport_examples() {
        let r = gen_restricted_davenport(m(13), 1).unwrap();
        assert_eq!(r.sequence.entries(), &[1, 2, 3]);
        let r = gen_restricted_davenport(m(5), 1).unwrap();
        assert_eq!(r.sequence.entries(), &[1]);
        let r = gen_restricted_davenport(m(25), 2).unwrap();
        assert_eq!(r.sequence.entries(), &[1, 1, 2, 2, 3, 3]);
        assert!(gen_restricted_davenport(m(4), 2).is_err());
    }

    #[test]
    fn restricted_erdos_examples() {
        let r = gen_restricted_erdos_extremal(23, 3).unwrap();
        assert_eq!(r.sequence.len(), 25);
        assert!(r.verified);
        assert_eq!(r.sequence.sum(), 23 - 3);
        assert!(matches!(
            gen_restricted_erdos_extremal(5, 3),
            Err(Error::UnsupportedParameters(_))
        ));
        assert!(gen_restricted_erdos_extremal(21, 3).is_err());
        let r = gen_restricted_erdos_extremal(67, 4).unwrap();
        assert!(!r.fallback_used);
        assert_eq!(r.sequence.max_multiplicity(), 4);
    }

    #[test]
    fn extras_target_matches_case_closed_forms() {
        for &(p, k) in &[(37u64, 3u64), (41, 3), (67, 4), (71, 4), (101, 5), (103, 5)] {
            let ep = ExtremalParams::new(p, k).unwrap();
            let want = match ep.case {
                ExtrasCase::Even => (ep.r + k - 1) * (ep.t - 1) % p,
                ExtrasCase::Odd => ep.t * (ep.r + 2 * (k - 1)) % p,
            };
            assert_eq!(ep.extras_target(), want, "p = {p}, k = {k}");
        }
    }
}
