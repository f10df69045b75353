//! Exact small-scale computation of `D_A(Z_n)`, `E_A(Z_n)`, `s^(k)(Z_n)` and
//! the `k`-restricted Davenport threshold.
//!
//! Non-Z multisets are closed under taking sub-multisets, so the search walks
//! sorted sequences depth-first, extends only those that are still non-Z, and
//! reports the longest one found. The invariant is that length plus one.
//! Each node carries the reachable-sum state of its prefix, so extending by one
//! entry costs a single DP step.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::decision::{self, brute_force_decide, ZKind, BRUTE_FORCE_LIMIT};
use crate::error::{Error, Result};
use crate::group::{gcd, is_k_restricted, Modulus, WeightSet, ZnSequence};

pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvariantKind {
    Davenport,
    Erdos,
    RestrictedErdos,
    RestrictedDavenport,
}

impl InvariantKind {
    pub fn z_kind(self) -> ZKind {
        match self {
            InvariantKind::Davenport | InvariantKind::RestrictedDavenport => ZKind::Davenport,
            InvariantKind::Erdos | InvariantKind::RestrictedErdos => ZKind::Erdos,
        }
    }

    pub fn is_restricted(self) -> bool {
        matches!(
            self,
            InvariantKind::RestrictedErdos | InvariantKind::RestrictedDavenport
        )
    }
}

impl fmt::Display for InvariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InvariantKind::Davenport => "davenport",
            InvariantKind::Erdos => "erdos",
            InvariantKind::RestrictedErdos => "restricted-erdos",
            InvariantKind::RestrictedDavenport => "restricted-davenport",
        })
    }
}

impl FromStr for InvariantKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "davenport" => Ok(InvariantKind::Davenport),
            "erdos" => Ok(InvariantKind::Erdos),
            "restricted-erdos" => Ok(InvariantKind::RestrictedErdos),
            "restricted-davenport" => Ok(InvariantKind::RestrictedDavenport),
            other => Err(Error::InvalidInput(format!("unknown invariant kind '{other}'"))),
        }
    }
}

/// Which orbit pruning the search may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    /// Translation for Erdős kinds with `A = {1}`, unit scaling otherwise.
    #[default]
    Auto,
    None,
    UnitScaling,
    Translation,
}

impl FromStr for Symmetry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Symmetry::Auto),
            "none" => Ok(Symmetry::None),
            "unit-scaling" => Ok(Symmetry::UnitScaling),
            "translation" => Ok(Symmetry::Translation),
            other => Err(Error::InvalidInput(format!("unknown symmetry '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub budget: u64,
    pub symmetry: Symmetry,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: DEFAULT_BUDGET,
            symmetry: Symmetry::Auto,
        }
    }
}

impl SearchOptions {
    pub fn with_symmetry(symmetry: Symmetry) -> Self {
        SearchOptions {
            symmetry,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantQuery {
    pub n: Modulus,
    pub kind: InvariantKind,
    pub weights: WeightSet,
    /// Multiplicity cap for the restricted kinds.
    pub cap: Option<usize>,
}

impl InvariantQuery {
    pub fn davenport(weights: WeightSet) -> Self {
        InvariantQuery {
            n: weights.modulus(),
            kind: InvariantKind::Davenport,
            weights,
            cap: None,
        }
    }

    pub fn erdos(weights: WeightSet) -> Self {
        InvariantQuery {
            n: weights.modulus(),
            kind: InvariantKind::Erdos,
            weights,
            cap: None,
        }
    }

    pub fn restricted_erdos(n: Modulus, k: usize) -> Self {
        InvariantQuery {
            n,
            kind: InvariantKind::RestrictedErdos,
            weights: WeightSet::ones(n),
            cap: Some(k),
        }
    }

    pub fn restricted_davenport(n: Modulus, k: usize) -> Self {
        InvariantQuery {
            n,
            kind: InvariantKind::RestrictedDavenport,
            weights: WeightSet::ones(n),
            cap: Some(k),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.weights.modulus() != self.n {
            return Err(Error::ModulusMismatch {
                left: self.n.get(),
                right: self.weights.modulus().get(),
            });
        }
        if self.kind.is_restricted() {
            match self.cap {
                Some(k) if k >= 1 => {}
                _ => return Err(Error::InvalidInput("restricted kinds need k ≥ 1".into())),
            }
            if !self.weights.is_ones() {
                return Err(Error::InvalidInput("restricted kinds fix A = {1}".into()));
            }
        }
        if self.n.get() > 4096 {
            return Err(Error::GuardExceeded(format!("exhaustive search at n = {}", self.n)));
        }
        Ok(())
    }

    fn resolve_symmetry(&self, requested: Symmetry) -> Result<Symmetry> {
        let translation_ok = self.kind.z_kind() == ZKind::Erdos && self.weights.is_ones();
        match requested {
            Symmetry::Auto if translation_ok => Ok(Symmetry::Translation),
            Symmetry::Auto => Ok(Symmetry::UnitScaling),
            Symmetry::Translation if !translation_ok => Err(Error::InvalidInput(
                "translation symmetry only holds for Erdős kinds with A = {1}".into(),
            )),
            s => Ok(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub multisets_examined: u64,
    pub symmetry: Symmetry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub kind: InvariantKind,
    pub value: usize,
    /// Length `value - 1`, not a Z-sequence of the queried kind.
    pub extremal_witness: ZnSequence,
    pub search_stats: SearchStats,
}

/// One DP step for either kind on flat word buffers.
struct Extender {
    n: usize,
    words: usize,
    kind: ZKind,
    /// `shifts[x]`: distinct `a·x mod n`.
    shifts: Vec<Vec<u64>>,
}

impl Extender {
    fn new(weights: &[u64], n: Modulus, kind: ZKind) -> Self {
        let shifts = (0..n.get())
            .map(|x| {
                let mut s: Vec<u64> = weights.iter().map(|&a| n.mul(a, x)).collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Extender {
            n: n.size(),
            words: bits::words_for(n.size()),
            kind,
            shifts,
        }
    }

    fn state_len(&self) -> usize {
        match self.kind {
            ZKind::Davenport => self.words,
            ZKind::Erdos => (self.n + 1) * self.words,
        }
    }

    fn initial(&self) -> Vec<u64> {
        let mut s = vec![0; self.state_len()];
        if self.kind == ZKind::Erdos {
            bits::set_bit(&mut s[..self.words], 0);
        }
        s
    }

    /// Writes the state after appending `x` into `dst`; returns whether the
    /// extended sequence is a Z-sequence.
    fn extend(&self, src: &[u64], dst: &mut [u64], x: u64) -> bool {
        let w = self.words;
        let shifts = &self.shifts[x as usize];
        dst.copy_from_slice(src);
        match self.kind {
            ZKind::Davenport => {
                for &s in shifts {
                    bits::or_rotated(dst, src, s as usize, self.n);
                    bits::set_bit(dst, s as usize);
                }
                bits::test_bit(dst, 0)
            }
            ZKind::Erdos => {
                for c in 1..=self.n {
                    let below = &src[(c - 1) * w..c * w];
                    if below.iter().all(|&v| v == 0) {
                        continue;
                    }
                    let cur = &mut dst[c * w..(c + 1) * w];
                    for &s in shifts {
                        bits::or_rotated(cur, below, s as usize, self.n);
                    }
                }
                bits::test_bit(&dst[self.n * w..], 0)
            }
        }
    }
}

struct Branch<'a> {
    ext: &'a Extender,
    order: &'a [u64],
    cap: usize,
    budget: u64,
    counter: &'a AtomicU64,
    stack: Vec<Vec<u64>>,
    path: Vec<u64>,
    best: Vec<u64>,
}

impl Branch<'_> {
    fn tick(&self) -> Result<()> {
        if self.counter.fetch_add(1, Ordering::Relaxed) >= self.budget {
            return Err(Error::BudgetExceeded { budget: self.budget });
        }
        Ok(())
    }

    /// Tries appending the entry at order position `pos`; recurses if non-Z.
    fn step(&mut self, depth: usize, pos: usize, mult: usize) -> Result<()> {
        if self.stack.len() <= depth + 1 {
            self.stack.push(vec![0; self.ext.state_len()]);
        }
        let x = self.order[pos];
        let (lower, upper) = self.stack.split_at_mut(depth + 1);
        let is_z = self.ext.extend(&lower[depth], &mut upper[0], x);
        self.tick()?;
        if is_z {
            return Ok(());
        }
        self.path.push(x);
        if self.path.len() > self.best.len() {
            self.best.clone_from(&self.path);
        }
        for next in pos..self.order.len() {
            let next_mult = if next == pos { mult + 1 } else { 1 };
            if next_mult > self.cap {
                continue;
            }
            self.step(depth + 1, next, next_mult)?;
        }
        self.path.pop();
        Ok(())
    }
}

/// Order in which the search lists residues, and the admissible first entries.
fn search_order(n: Modulus, symmetry: Symmetry) -> (Vec<u64>, Vec<usize>) {
    let nv = n.get();
    match symmetry {
        Symmetry::UnitScaling => {
            // sort by (gcd class, value); every multiset scales to one whose
            // first entry is the divisor naming its smallest class
            let mut order: Vec<u64> = (0..nv).collect();
            order.sort_by_key(|&y| (gcd(y, nv), y));
            let roots = order
                .iter()
                .enumerate()
                .filter(|(_, &y)| y == 0 || gcd(y, nv) == y)
                .map(|(i, _)| i)
                .collect();
            (order, roots)
        }
        Symmetry::Translation => ((0..nv).collect(), vec![0]),
        Symmetry::None | Symmetry::Auto => ((0..nv).collect(), (0..nv as usize).collect()),
    }
}

/// Longest non-Z sequence of the queried class, under `options`.
pub fn compute_invariant(query: &InvariantQuery, options: SearchOptions) -> Result<InvariantResult> {
    query.validate()?;
    let symmetry = query.resolve_symmetry(options.symmetry)?;
    let weights = query.weights.members()?;
    let kind = query.kind.z_kind();
    let ext = Extender::new(weights, query.n, kind);
    let (order, roots) = search_order(query.n, symmetry);
    let cap = query.cap.unwrap_or(usize::MAX);
    let counter = AtomicU64::new(0);
    let init = ext.initial();

    let branches: Vec<Result<Vec<u64>>> = roots
        .par_iter()
        .map(|&root| {
            let mut b = Branch {
                ext: &ext,
                order: &order,
                cap,
                budget: options.budget,
                counter: &counter,
                stack: vec![init.clone()],
                path: Vec::new(),
                best: Vec::new(),
            };
            b.step(0, root, 1)?;
            Ok(b.best)
        })
        .collect();

    let mut best: Vec<u64> = Vec::new();
    for branch in branches {
        let path = branch?;
        if path.len() > best.len() {
            best = path;
        }
    }
    let mut entries = best;
    entries.sort_unstable();
    let witness = ZnSequence::new(query.n, entries);
    let result = InvariantResult {
        kind: query.kind,
        value: witness.len() + 1,
        extremal_witness: witness,
        search_stats: SearchStats {
            multisets_examined: counter.load(Ordering::Relaxed),
            symmetry,
        },
    };
    self_check(query, &result)?;
    Ok(result)
}

fn self_check(query: &InvariantQuery, result: &InvariantResult) -> Result<()> {
    let w = &result.extremal_witness;
    if decision::decide(w, &query.weights, query.kind.z_kind())?.is_z_sequence {
        return Err(Error::VerificationFailed(format!(
            "extremal witness {w} is a Z-sequence"
        )));
    }
    if let Some(k) = query.cap {
        if !is_k_restricted(w, k) {
            return Err(Error::VerificationFailed(format!(
                "extremal witness {w} is not {k}-restricted"
            )));
        }
    }
    if query.kind == InvariantKind::Davenport && result.value as u64 > query.n.get() {
        return Err(Error::VerificationFailed(format!(
            "D_A(Z_{}) = {} exceeds n",
            query.n, result.value
        )));
    }
    Ok(())
}

pub fn davenport_constant(weights: &WeightSet, options: SearchOptions) -> Result<InvariantResult> {
    compute_invariant(&InvariantQuery::davenport(weights.clone()), options)
}

pub fn erdos_constant(weights: &WeightSet, options: SearchOptions) -> Result<InvariantResult> {
    compute_invariant(&InvariantQuery::erdos(weights.clone()), options)
}

/// `s^(k)(Z_n)`.
pub fn restricted_erdos_constant(n: Modulus, k: usize, options: SearchOptions) -> Result<InvariantResult> {
    compute_invariant(&InvariantQuery::restricted_erdos(n, k), options)
}

/// Least `m` such that every `k`-restricted length-`m` sequence has a nonempty
/// zero-sum subsequence.
pub fn restricted_davenport_constant(n: Modulus, k: usize, options: SearchOptions) -> Result<InvariantResult> {
    compute_invariant(&InvariantQuery::restricted_davenport(n, k), options)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YuanZengCheck {
    pub n: u64,
    pub davenport: usize,
    pub erdos: usize,
    pub holds: bool,
}

/// Checks `E_A(Z_n) = D_A(Z_n) + n - 1`.
pub fn verify_yuan_zeng(weights: &WeightSet, options: SearchOptions) -> Result<bool> {
    Ok(yuan_zeng_check(weights, options)?.holds)
}

pub fn yuan_zeng_check(weights: &WeightSet, options: SearchOptions) -> Result<YuanZengCheck> {
    let d = davenport_constant(weights, options)?.value;
    let e = erdos_constant(weights, options)?.value;
    let n = weights.modulus().get();
    Ok(YuanZengCheck {
        n,
        davenport: d,
        erdos: e,
        holds: e as u64 == d as u64 + n - 1,
    })
}

/// Sorted multisets of size `m` over `Z_n` with every multiplicity at most `k`,
/// in lexicographic order.
pub fn enumerate_restricted_multisets(n: Modulus, m: usize, k: usize) -> RestrictedMultisets {
    let nv = n.size();
    let feasible = m == 0 || (k >= 1 && (m as u128) <= (k as u128) * nv as u128);
    let first = feasible.then(|| fill(0, m, k));
    RestrictedMultisets { n, k, next: first }
}

fn fill(start: usize, len: usize, k: usize) -> Vec<u64> {
    (0..len).map(|i| (start + i / k) as u64).collect()
}

pub struct RestrictedMultisets {
    n: Modulus,
    k: usize,
    next: Option<Vec<u64>>,
}

impl Iterator for RestrictedMultisets {
    type Item = ZnSequence;

    fn next(&mut self) -> Option<ZnSequence> {
        let cur = self.next.take()?;
        let nv = self.n.size();
        let m = cur.len();
        // rightmost slot that can grow while the tail still fits
        for i in (0..m).rev() {
            let v = cur[i] as usize + 1;
            if v < nv && (m - i) <= (nv - v) * self.k {
                let mut nxt = cur[..i].to_vec();
                nxt.extend(fill(v, m - i, self.k));
                self.next = Some(nxt);
                break;
            }
        }
        Some(ZnSequence::new(self.n, cur))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Equal,
    Counterexample,
    Skipped,
}

/// Which side of `n + k` a counterexample falls on, and whether brute force
/// confirmed it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleCertificate {
    /// `value > n + k`: the witness is a non-Z sequence of length at least `n + k`.
    /// `value < n + k`: every restricted sequence of length `value` is Z.
    pub above: bool,
    pub brute_force_confirmed: bool,
    pub sequences_checked: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanCell {
    pub n: u64,
    pub k: usize,
    pub value: Option<usize>,
    pub conjectured: u64,
    pub verdict: Verdict,
    pub extremal_witness: Option<ZnSequence>,
    pub certificate: Option<CounterexampleCertificate>,
    pub note: Option<String>,
}

/// Computes `s^(k)(Z_n)` over a grid and compares each cell with `n + k`.
/// Cells whose search exceeds the budget are marked skipped.
pub fn scan_conjecture(
    ns: RangeInclusive<u64>,
    ks: RangeInclusive<usize>,
    options: SearchOptions,
) -> Result<Vec<ScanCell>> {
    let mut cells = Vec::new();
    for nv in ns {
        let n = Modulus::new(nv)?;
        for k in ks.clone() {
            let conjectured = nv + k as u64;
            let cell = match restricted_erdos_constant(n, k, options) {
                Ok(res) if res.value as u64 == conjectured => ScanCell {
                    n: nv,
                    k,
                    value: Some(res.value),
                    conjectured,
                    verdict: Verdict::Equal,
                    extremal_witness: Some(res.extremal_witness),
                    certificate: None,
                    note: None,
                },
                Ok(res) => {
                    let cert = certify_counterexample(n, k, &res)?;
                    ScanCell {
                        n: nv,
                        k,
                        value: Some(res.value),
                        conjectured,
                        verdict: Verdict::Counterexample,
                        extremal_witness: Some(res.extremal_witness),
                        certificate: Some(cert),
                        note: None,
                    }
                }
                Err(e @ (Error::BudgetExceeded { .. } | Error::GuardExceeded(_))) => ScanCell {
                    n: nv,
                    k,
                    value: None,
                    conjectured,
                    verdict: Verdict::Skipped,
                    extremal_witness: None,
                    certificate: None,
                    note: Some(e.to_string()),
                },
                Err(e) => return Err(e),
            };
            cells.push(cell);
        }
    }
    Ok(cells)
}

fn certify_counterexample(n: Modulus, k: usize, res: &InvariantResult) -> Result<CounterexampleCertificate> {
    let ones = WeightSet::ones(n);
    let above = res.value as u64 > n.get() + k as u64;
    let within_guard = |len: usize| 2u128.checked_pow(len as u32).is_some_and(|s| s <= BRUTE_FORCE_LIMIT);
    if above {
        let w = &res.extremal_witness;
        if !within_guard(w.len()) {
            return Ok(CounterexampleCertificate {
                above,
                brute_force_confirmed: false,
                sequences_checked: 0,
            });
        }
        let confirmed = !brute_force_decide(w, &ones, ZKind::Erdos)? && is_k_restricted(w, k);
        return Ok(CounterexampleCertificate {
            above,
            brute_force_confirmed: confirmed,
            sequences_checked: 1,
        });
    }
    if !within_guard(res.value) {
        return Ok(CounterexampleCertificate {
            above,
            brute_force_confirmed: false,
            sequences_checked: 0,
        });
    }
    let mut checked = 0u64;
    let mut all_z = true;
    for x in enumerate_restricted_multisets(n, res.value, k) {
        checked += 1;
        if !brute_force_decide(&x, &ones, ZKind::Erdos)? {
            all_z = false;
            break;
        }
    }
    Ok(CounterexampleCertificate {
        above,
        brute_force_confirmed: all_z,
        sequences_checked: checked,
    })
}
